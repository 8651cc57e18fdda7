//! Closed-form harmonic weights on the ball exterior.
//!
//! Each space dimension has a bounded-below positive harmonic function that
//! vanishes on the obstacle boundary:
//!
//! * `n = 1`: the linear weight `phi_0(x) = scale * x` on the half-line,
//! * `n = 2`: the logarithmic weight `phi_0(r) = ln(r / r0)`,
//! * `n >= 3`: the power-gap weight `phi_0(r) = 1 - (r0 / r)^{n-2}`, which
//!   increases from 0 at the obstacle to 1 at infinity.
//!
//! `verify` certifies, on a given grid, the properties the analysis relies
//! on: boundary vanishing, the range bounds, discrete harmonicity, and the
//! gradient decay `|phi_0'(r)| <= C / r^{n-1}` with the constant measured
//! rather than assumed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{RadialField, RadialGrid};

/// Dimension class of the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightForm {
    /// `scale * r` on the half-line (dimension 1).
    Linear,
    /// `ln(r / r0)` (dimension 2).
    Log,
    /// `1 - (r0 / r)^{n-2}` (dimension >= 3).
    PowerGap,
}

/// Dimension-tagged harmonic weight with closed-form value and gradient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicWeight {
    dim: usize,
    r0: f64,
    form: WeightForm,
    /// Slope constant of the half-line form; fixed to 1 for dim >= 2.
    scale: f64,
}

/// Numerical certificate for the defining properties of a weight on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightReport {
    pub dim: usize,
    pub cells: usize,
    /// Max |discrete Laplacian| over interior nodes; pure discretization error.
    pub max_laplacian_residual: f64,
    /// Weight value at the obstacle node (must vanish).
    pub boundary_value: f64,
    /// Nodes violating the per-form range bounds.
    pub bound_violations: usize,
    /// Smallest C with |phi_0'(r)| <= C / r^{n-1} over the grid.
    pub gradient_decay_constant: f64,
    /// Relative spread of |phi_0'(r)| * r^{n-1}, zero up to round-off because
    /// the combination is constant for every closed form.
    pub gradient_constancy_spread: f64,
}

/// Construct the closed-form weight for the given dimension.
pub fn make_weight(dim: usize, r0: f64, scale: f64) -> Result<HarmonicWeight> {
    if dim < 1 {
        return Err(Error::InvalidDimension { dim });
    }
    if dim == 1 {
        if r0 != 0.0 {
            return Err(Error::InvalidObstacle { dim, r0 });
        }
        if !(scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "half-line weight needs a positive scale, got {scale}"
            )));
        }
        return Ok(HarmonicWeight { dim, r0, form: WeightForm::Linear, scale });
    }
    if !(r0 > 0.0) {
        return Err(Error::InvalidObstacle { dim, r0 });
    }
    let form = if dim == 2 { WeightForm::Log } else { WeightForm::PowerGap };
    Ok(HarmonicWeight { dim, r0, form, scale: 1.0 })
}

impl HarmonicWeight {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn form(&self) -> WeightForm {
        self.form
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn check_radius(&self, r: f64) -> Result<()> {
        if r < self.r0 || !r.is_finite() {
            return Err(Error::OutOfDomainRadius { r, r0: self.r0 });
        }
        Ok(())
    }

    /// Closed-form value `phi_0(r)`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        Ok(match self.form {
            WeightForm::Linear => self.scale * r,
            WeightForm::Log => (r / self.r0).ln(),
            WeightForm::PowerGap => 1.0 - (self.r0 / r).powi(self.dim as i32 - 2),
        })
    }

    /// Radial derivative, equal to the full gradient magnitude by symmetry.
    pub fn eval_gradient(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        Ok(match self.form {
            WeightForm::Linear => self.scale,
            WeightForm::Log => 1.0 / r,
            WeightForm::PowerGap => {
                let m = self.dim as f64 - 2.0;
                m * self.r0.powf(m) / r.powf(m + 1.0)
            }
        })
    }

    /// Sample the weight on a grid.
    pub fn sample(&self, grid: &RadialGrid) -> Result<RadialField> {
        self.check_grid(grid)?;
        let mut values = Vec::with_capacity(grid.node_count());
        for &r in grid.nodes() {
            values.push(self.eval(r)?);
        }
        Ok(RadialField { values })
    }

    fn check_grid(&self, grid: &RadialGrid) -> Result<()> {
        if grid.dim() != self.dim || grid.r_obstacle() != self.r0 {
            return Err(Error::DomainMismatch {
                weight_dim: self.dim,
                weight_r0: self.r0,
                grid_dim: grid.dim(),
                grid_r0: grid.r_obstacle(),
            });
        }
        Ok(())
    }

    /// Certify the defining properties of the sampled weight on `grid`.
    pub fn verify(&self, grid: &RadialGrid) -> Result<WeightReport> {
        self.check_grid(grid)?;
        let phi = self.sample(grid)?;
        let lap = grid.radial_laplacian(&phi)?;

        let mut max_res = 0.0_f64;
        for i in 1..grid.node_count() - 1 {
            max_res = max_res.max(lap.values[i].abs());
        }

        let mut violations = 0usize;
        let mut c_min = 0.0_f64;
        let mut c_max = f64::INFINITY;
        let nu = self.dim as f64 - 1.0;
        for (i, &r) in grid.nodes().iter().enumerate() {
            let v = phi.values[i];
            let in_range = match self.form {
                // interior nodes must satisfy the strict range bounds
                WeightForm::PowerGap => i == 0 || (v > 0.0 && v < 1.0),
                WeightForm::Log | WeightForm::Linear => i == 0 || v > 0.0,
            };
            if !in_range {
                violations += 1;
            }
            if r > 0.0 {
                let combo = self.eval_gradient(r)?.abs() * r.powf(nu);
                c_min = c_min.max(combo);
                c_max = c_max.min(combo);
            }
        }
        let spread = if c_min > 0.0 { (c_min - c_max) / c_min } else { 0.0 };

        Ok(WeightReport {
            dim: self.dim,
            cells: grid.node_count() - 1,
            max_laplacian_residual: max_res,
            boundary_value: phi.values[0],
            bound_violations: violations,
            gradient_decay_constant: c_min,
            gradient_constancy_spread: spread,
        })
    }
}
