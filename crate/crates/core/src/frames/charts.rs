//! Standard orthogonal charts with guards away from their singular sets.

use std::fmt;
use std::str::FromStr;

use super::{FrameError, OrthoTriple};
use crate::expr::ScalarExpr;
use crate::guard::Guard;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartName {
    Cylindrical,
    ParabolicCylindrical,
    Parabolic,
}

impl ChartName {
    pub const ALL: [ChartName; 3] = [
        ChartName::Cylindrical,
        ChartName::ParabolicCylindrical,
        ChartName::Parabolic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ChartName::Cylindrical => "cylindrical",
            ChartName::ParabolicCylindrical => "parabolic_cylindrical",
            ChartName::Parabolic => "parabolic",
        }
    }
}

impl fmt::Display for ChartName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChartName {
    type Err = FrameError;
    fn from_str(s: &str) -> Result<Self, FrameError> {
        ChartName::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| FrameError::UnknownChart(s.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub name: ChartName,
    /// Coordinates in chart order.
    pub triple: OrthoTriple,
    /// `|∇|` of each coordinate, in the same order.
    pub scale_factors: [ScalarExpr; 3],
}

fn e(src: &str) -> ScalarExpr {
    ScalarExpr::parse(src).expect("chart expression")
}

fn g(src: &str) -> Guard {
    Guard::parse(src).expect("chart guard")
}

/// Cylindrical `(r, z, φ)`, parabolic cylindrical `(√(r+x), √(r−x), z)` on
/// the half-space `y > 0`, and parabolic `(√(ρ+z), √(ρ−z), φ)`.
pub fn catalog_chart(name: &str) -> Result<Chart, FrameError> {
    let name: ChartName = name.parse()?;
    let r = "sqrt(x^2 + y^2)";
    let rho = "sqrt(x^2 + y^2 + z^2)";
    let chart = match name {
        ChartName::Cylindrical => Chart {
            name,
            triple: OrthoTriple::new(e(r), e("z"), e("atan2(y, x)"), g("r >= 0.05")),
            scale_factors: [e("1"), e("1"), e(&format!("1/{r}"))],
        },
        ChartName::ParabolicCylindrical => Chart {
            name,
            triple: OrthoTriple::new(
                e(&format!("sqrt({r} + x)")),
                e(&format!("sqrt({r} - x)")),
                e("z"),
                g("r >= 0.05 && y >= 0.05"),
            ),
            scale_factors: [
                e(&format!("1/sqrt(2*{r})")),
                e(&format!("1/sqrt(2*{r})")),
                e("1"),
            ],
        },
        ChartName::Parabolic => Chart {
            name,
            triple: OrthoTriple::new(
                e(&format!("sqrt({rho} + z)")),
                e(&format!("sqrt({rho} - z)")),
                e("atan2(y, x)"),
                g("rho >= 0.05 && r >= 0.05 && sqrt(rho + z) >= 0.05 && sqrt(rho - z) >= 0.05"),
            ),
            scale_factors: [
                e(&format!("1/sqrt(2*{rho})")),
                e(&format!("1/sqrt(2*{rho})")),
                e(&format!("1/{r}")),
            ],
        },
    };
    Ok(chart)
}
