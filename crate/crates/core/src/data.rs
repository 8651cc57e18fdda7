//! Analytic initial-data families.
//!
//! Parameterized families keep the sign functional analytically checkable.
//! Both `u0` and `u1` are set to the family profile (scaled by `u1_scale`
//! for the velocity), which keeps the data admissible and the sign
//! hypothesis strictly positive for any nonzero amplitude.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{RadialField, RadialGrid};
use crate::solver::{validate_initial_data, InitialData};

fn default_u1_scale() -> f64 {
    1.0
}

/// Named initial-data family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DataFamily {
    /// Compactly supported mollifier bump `A exp(1 - 1/(1 - s^2))` with
    /// `s = (r - center)/width`, zero outside `|s| < 1`.
    Bump {
        amplitude: f64,
        center: f64,
        width: f64,
        #[serde(default = "default_u1_scale")]
        u1_scale: f64,
    },
    /// `A (r - r0) e^{-rate (r - r0)}`, vanishing at the obstacle.
    ExpDecay {
        amplitude: f64,
        rate: f64,
        #[serde(default = "default_u1_scale")]
        u1_scale: f64,
    },
    /// Raw nodal arrays; only accepted when explicitly enabled by the caller.
    Raw { u0: Vec<f64>, u1: Vec<f64> },
}

impl DataFamily {
    /// Evaluate the displacement profile at radius `r`.
    pub fn profile(&self, r: f64, r_obstacle: f64) -> Result<f64> {
        match self {
            DataFamily::Bump { amplitude, center, width, .. } => {
                if !(*width > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "bump width must be positive, got {width}"
                    )));
                }
                let s = (r - center) / width;
                Ok(if s.abs() < 1.0 {
                    amplitude * (1.0 - 1.0 / (1.0 - s * s)).exp()
                } else {
                    0.0
                })
            }
            DataFamily::ExpDecay { amplitude, rate, .. } => {
                if !(*rate > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "decay rate must be positive, got {rate}"
                    )));
                }
                let x = r - r_obstacle;
                Ok(amplitude * x * (-rate * x).exp())
            }
            DataFamily::Raw { .. } => Err(Error::InvalidParameter(
                "raw data has no analytic profile".into(),
            )),
        }
    }

    pub fn amplitude(&self) -> f64 {
        match self {
            DataFamily::Bump { amplitude, .. } | DataFamily::ExpDecay { amplitude, .. } => {
                *amplitude
            }
            DataFamily::Raw { u0, .. } => u0.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
        }
    }

    /// Same family at a different amplitude (raw data is scaled nodewise).
    pub fn with_amplitude(&self, amplitude: f64) -> DataFamily {
        match self {
            DataFamily::Bump { center, width, u1_scale, .. } => DataFamily::Bump {
                amplitude,
                center: *center,
                width: *width,
                u1_scale: *u1_scale,
            },
            DataFamily::ExpDecay { rate, u1_scale, .. } => {
                DataFamily::ExpDecay { amplitude, rate: *rate, u1_scale: *u1_scale }
            }
            DataFamily::Raw { u0, u1 } => {
                let old = self.amplitude();
                let s = if old > 0.0 { amplitude / old } else { 0.0 };
                DataFamily::Raw {
                    u0: u0.iter().map(|v| v * s).collect(),
                    u1: u1.iter().map(|v| v * s).collect(),
                }
            }
        }
    }

    /// Sample the family on a grid and validate the result.
    pub fn build(&self, grid: &RadialGrid, allow_raw: bool) -> Result<InitialData> {
        let (u0, u1, description) = match self {
            DataFamily::Raw { u0, u1 } => {
                if !allow_raw {
                    return Err(Error::InvalidParameter(
                        "raw data arrays are disabled; pass the raw-data flag to enable them"
                            .into(),
                    ));
                }
                (
                    RadialField { values: u0.clone() },
                    RadialField { values: u1.clone() },
                    "raw arrays".to_string(),
                )
            }
            _ => {
                let u1_scale = match self {
                    DataFamily::Bump { u1_scale, .. } | DataFamily::ExpDecay { u1_scale, .. } => {
                        *u1_scale
                    }
                    DataFamily::Raw { .. } => unreachable!(),
                };
                if u1_scale < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "u1_scale must be nonnegative, got {u1_scale}"
                    )));
                }
                let mut u0 = Vec::with_capacity(grid.node_count());
                for &r in grid.nodes() {
                    u0.push(self.profile(r, grid.r_obstacle())?);
                }
                let u1: Vec<f64> = u0.iter().map(|v| v * u1_scale).collect();
                (
                    RadialField { values: u0 },
                    RadialField { values: u1 },
                    format!("{self:?}"),
                )
            }
        };
        validate_initial_data(&InitialData { u0, u1, description }, grid)
    }
}
