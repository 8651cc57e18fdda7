//! Space-time cut-offs and the composite test function.
//!
//! The test function is `phi(x, t) = phi_0(x) * Phi^ell(|x|/T) * eta^k(t^2/T^2)`
//! with `phi_0` a harmonic weight, `Phi` a spatial cap equal to 1 on `[0, 1]`
//! and 0 on `[2, inf)`, and `eta` a temporal bump equal to 1 on `[0, 1/4]` and
//! 0 on `[1, inf)`. Both transitions are the standard mollifier smooth-step
//! built from `exp(-1/s)`, so the plateaus are exact and every derivative the
//! weak identity consumes is available in closed form.
//!
//! `rhs_scaling_integrals` evaluates the eight cut-off integrals that bound
//! the right-hand side of the weak identity after Young's inequality. The
//! integrands carry the exact conjugate-power weights of the harmonic factor
//! (`phi_0` on the plateau terms, `phi_0^{1-p'}` on the gradient cross terms);
//! for dimensions >= 3 these factors are bounded and only shift constants,
//! while for dimensions 1 and 2 they produce the linear and logarithmic
//! corrections that set the decay rates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::weights::HarmonicWeight;

/// Holder conjugate `p' = p / (p - 1)`.
pub fn conjugate_exponent(p: f64) -> Result<f64> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("exponent p must exceed 1, got {p}")));
    }
    Ok(p / (p - 1.0))
}

/// Default cut-off powers `ell = k = ceil(2 p') + 2`, the smallest choice
/// keeping every exponent in the eight integrals at least 2 (so the
/// integrands are C^1).
pub fn default_powers(p: f64) -> Result<(u32, u32)> {
    let pc = conjugate_exponent(p)?;
    let k = (2.0 * pc).ceil() as u32 + 2;
    Ok((k, k))
}

/// Mollifier ramp `exp(-1/s)` with two derivatives; zero for `s <= 0`.
fn mollifier(s: f64) -> (f64, f64, f64) {
    if s <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let q = (-1.0 / s).exp();
    let s2 = s * s;
    (q, q / s2, q * (1.0 - 2.0 * s) / (s2 * s2))
}

/// Smooth step rising 0 -> 1 on [0, 1]: `g = q(s) / (q(s) + q(1-s))`.
fn smoothstep(s: f64) -> (f64, f64, f64) {
    if s <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if s >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let (a, a1, a2) = mollifier(s);
    let (b, b1m, b2) = mollifier(1.0 - s);
    let b1 = -b1m; // chain rule through 1 - s
    let d = a + b;
    let d1 = a1 + b1;
    let n = a1 * b - a * b1;
    let n1 = a2 * b - a * b2;
    let g = a / d;
    let g1 = n / (d * d);
    let g2 = (n1 * d - 2.0 * n * d1) / (d * d * d);
    (g, g1, g2)
}

/// Nonincreasing C-infinity profile: exactly 1 on `[0, lo]`, exactly 0 on
/// `[hi, inf)`, mollifier transition in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    lo: f64,
    hi: f64,
}

/// The temporal bump of the proof: plateaus at 1/4 and 1.
pub fn make_profile() -> Profile {
    Profile::new(0.25, 1.0)
}

impl Profile {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo >= 0.0 && hi > lo, "profile needs 0 <= lo < hi");
        Profile { lo, hi }
    }

    pub fn spatial() -> Self {
        Profile::new(1.0, 2.0)
    }

    /// Value and first two derivatives at `s`.
    pub fn eval(&self, s: f64) -> (f64, f64, f64) {
        if s <= self.lo {
            return (1.0, 0.0, 0.0);
        }
        if s >= self.hi {
            return (0.0, 0.0, 0.0);
        }
        let scale = 1.0 / (self.hi - self.lo);
        let (g, g1, g2) = smoothstep((s - self.lo) * scale);
        (1.0 - g, -g1 * scale, -g2 * scale * scale)
    }

    pub fn value(&self, s: f64) -> f64 {
        self.eval(s).0
    }

    /// Measured bound on |profile'| from a uniform scan.
    pub fn max_abs_deriv(&self, samples: usize) -> f64 {
        let mut c = 0.0_f64;
        for j in 0..=samples {
            let s = self.lo + (self.hi - self.lo) * j as f64 / samples as f64;
            c = c.max(self.eval(s).1.abs());
        }
        c
    }
}

/// `eta_T^k(t)` with `eta_T(t) = eta(t^2 / T^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemporalCutoff {
    horizon: f64,
    power: u32,
    profile: Profile,
}

impl TemporalCutoff {
    pub fn new(horizon: f64, power: u32) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::OutOfDomain { what: format!("temporal horizon T = {horizon}") });
        }
        if power < 2 {
            return Err(Error::InvalidParameter(format!(
                "temporal power k must be >= 2, got {power}"
            )));
        }
        Ok(TemporalCutoff { horizon, power, profile: make_profile() })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn power(&self) -> u32 {
        self.power
    }

    /// Base cut-off `eta_T` and its first two time derivatives.
    pub fn base(&self, t: f64) -> (f64, f64, f64) {
        let t2 = self.horizon * self.horizon;
        let s = t * t / t2;
        let (v, p1, p2) = self.profile.eval(s);
        let ds = 2.0 * t / t2;
        (v, p1 * ds, p2 * ds * ds + p1 * 2.0 / t2)
    }

    /// `eta_T^k` and its first two time derivatives.
    pub fn powered(&self, t: f64) -> (f64, f64, f64) {
        let (e, e1, e2) = self.base(t);
        let k = self.power as f64;
        if e == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let ekm2 = e.powf(k - 2.0);
        let ekm1 = ekm2 * e;
        let ek = ekm1 * e;
        (ek, k * ekm1 * e1, k * (k - 1.0) * ekm2 * e1 * e1 + k * ekm1 * e2)
    }
}

/// `Phi^ell(|x|/T)` with `Phi` equal to 1 on `[0, 1]` and 0 on `[2, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialCutoff {
    scale: f64,
    power: u32,
    profile: Profile,
}

impl SpatialCutoff {
    pub fn new(scale: f64, power: u32) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::OutOfDomain { what: format!("spatial scale T = {scale}") });
        }
        if power < 2 {
            return Err(Error::InvalidParameter(format!(
                "spatial power ell must be >= 2, got {power}"
            )));
        }
        Ok(SpatialCutoff { scale, power, profile: Profile::spatial() })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn power(&self) -> u32 {
        self.power
    }

    /// Base cap `Phi(r/T)` and its first two radial derivatives.
    pub fn base(&self, r: f64) -> (f64, f64, f64) {
        let (v, p1, p2) = self.profile.eval(r / self.scale);
        (v, p1 / self.scale, p2 / (self.scale * self.scale))
    }

    /// `Phi^ell(r/T)` and its first two radial derivatives.
    pub fn powered(&self, r: f64) -> (f64, f64, f64) {
        let (c, c1, c2) = self.base(r);
        let l = self.power as f64;
        if c == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let clm2 = c.powf(l - 2.0);
        let clm1 = clm2 * c;
        let cl = clm1 * c;
        (cl, l * clm1 * c1, l * (l - 1.0) * clm2 * c1 * c1 + l * clm1 * c2)
    }
}

/// Derivative combination consumed by the weak identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Deriv {
    Value,
    Dtt,
    Laplacian,
    LaplacianDt,
}

/// The composite test function `phi_0 * Phi^ell * eta^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunctionFamily {
    pub weight: HarmonicWeight,
    pub spatial: SpatialCutoff,
    pub temporal: TemporalCutoff,
}

/// The eight Young-companion integrals bounding the weak-identity right-hand
/// side, named by the term of the decomposition they come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhsIntegrals {
    /// I1 piece with `|d_t eta|^{2p'}`.
    pub i1_eta_dt: f64,
    /// I1 piece with `|d_tt eta|^{p'}`.
    pub i1_eta_dtt: f64,
    /// I2 cross term `|grad phi_0|^{p'} |grad phi_T|^{p'}`.
    pub i2_cross: f64,
    /// I2 term with `|grad phi_T|^{2p'}`.
    pub i2_grad_sq: f64,
    /// I2 term with `|Delta phi_T|^{p'}`.
    pub i2_lap: f64,
    /// I3 cross term (no temporal derivative).
    pub i3_cross: f64,
    /// I3 term with `|grad phi_T|^{2p'}`.
    pub i3_grad_sq: f64,
    /// I3 term with `|Delta phi_T|^{p'}`.
    pub i3_lap: f64,
}

impl RhsIntegrals {
    pub const NAMES: [&'static str; 8] = [
        "i1_eta_dt",
        "i1_eta_dtt",
        "i2_cross",
        "i2_grad_sq",
        "i2_lap",
        "i3_cross",
        "i3_grad_sq",
        "i3_lap",
    ];

    pub fn as_array(&self) -> [f64; 8] {
        [
            self.i1_eta_dt,
            self.i1_eta_dtt,
            self.i2_cross,
            self.i2_grad_sq,
            self.i2_lap,
            self.i3_cross,
            self.i3_grad_sq,
            self.i3_lap,
        ]
    }

    pub fn sum(&self) -> f64 {
        self.as_array().iter().sum()
    }
}

/// The three Holder companion factors (the `(...)^{1/p'}` multipliers of the
/// solution integrals in the critical case).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderFactors {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
}

/// Time quadrature intervals over `[0, T]`; gives 128 nodes in `[T/2, T]`.
const TIME_INTERVALS: usize = 256;

impl TestFunctionFamily {
    pub fn new(weight: HarmonicWeight, horizon: f64, ell: u32, k: u32) -> Result<Self> {
        Ok(TestFunctionFamily {
            weight,
            spatial: SpatialCutoff::new(horizon, ell)?,
            temporal: TemporalCutoff::new(horizon, k)?,
        })
    }

    /// Same weight and powers at a different horizon.
    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        TestFunctionFamily::new(self.weight, horizon, self.spatial.power(), self.temporal.power())
    }

    pub fn horizon(&self) -> f64 {
        self.temporal.horizon()
    }

    /// Evaluate phi or one of its derivative combinations at `(r, t)`.
    pub fn eval(&self, r: f64, t: f64, deriv: Deriv) -> Result<f64> {
        if t < 0.0 || !t.is_finite() {
            return Err(Error::OutOfDomain { what: format!("time t = {t}") });
        }
        let phi0 = self.weight.eval(r)?;
        let (cap, cap_r, cap_rr) = self.spatial.powered(r);
        let (eta, eta_t, eta_tt) = self.temporal.powered(t);
        Ok(match deriv {
            Deriv::Value => phi0 * cap * eta,
            Deriv::Dtt => phi0 * cap * eta_tt,
            Deriv::Laplacian | Deriv::LaplacianDt => {
                // Delta(phi_0 B) = phi_0 Delta B + 2 phi_0' B' since phi_0 is harmonic
                let n = self.weight.dim() as f64;
                let curv = if self.weight.dim() >= 2 { (n - 1.0) / r * cap_r } else { 0.0 };
                let grad0 = self.weight.eval_gradient(r)?;
                let spatial = phi0 * (cap_rr + curv) + 2.0 * grad0 * cap_r;
                match deriv {
                    Deriv::Laplacian => spatial * eta,
                    _ => spatial * eta_t,
                }
            }
        })
    }

    fn check_quadrature_inputs(&self, p: f64, grid: &RadialGrid) -> Result<f64> {
        let pc = conjugate_exponent(p)?;
        let t = self.horizon();
        let k = self.temporal.power() as f64;
        let l = self.spatial.power() as f64;
        if k < pc || l < 2.0 * pc {
            return Err(Error::ExponentUnderflow {
                detail: format!("need k >= max(2, p') and ell >= 2p', got k = {k}, ell = {l}"),
                p_conj: pc,
            });
        }
        if grid.dim() != self.weight.dim() || grid.r_obstacle() != self.weight.r0() {
            return Err(Error::DomainMismatch {
                weight_dim: self.weight.dim(),
                weight_r0: self.weight.r0(),
                grid_dim: grid.dim(),
                grid_r0: grid.r_obstacle(),
            });
        }
        if grid.r_max() < 2.0 * t {
            return Err(Error::OutOfDomain {
                what: format!("grid r_max {} does not cover the support radius 2T = {}", grid.r_max(), 2.0 * t),
            });
        }
        Ok(pc)
    }

    /// The eight right-hand-side integrals by tensorized trapezoid quadrature.
    ///
    /// Every integrand factorizes into a space profile times a time profile,
    /// so the integrals are products of one-dimensional quadratures.
    pub fn rhs_scaling_integrals(&self, p: f64, grid: &RadialGrid) -> Result<RhsIntegrals> {
        let pc = self.check_quadrature_inputs(p, grid)?;
        let t_hor = self.horizon();
        let k = self.temporal.power() as f64;
        let l = self.spatial.power() as f64;
        let nu = grid.dim() as f64 - 1.0;

        // spatial integrals: s_plateau carries phi_0 * Phi^ell; the annulus
        // profiles carry the Young conjugate powers of phi_0
        let mut sp_plateau = 0.0; // phi_0 cap^ell
        let mut sp_cross = 0.0; // phi_0^{1-p'} cap^{ell-p'} |grad phi_0|^{p'} |grad phi_T|^{p'}
        let mut sp_grad_sq = 0.0; // phi_0 cap^{ell-2p'} |grad phi_T|^{2p'}
        let mut sp_lap = 0.0; // phi_0 cap^{ell-p'} |Delta phi_T|^{p'}
        for (i, &r) in grid.nodes().iter().enumerate() {
            let w = grid.quad_weights()[i];
            let (c, c_r, c_rr) = self.spatial.base(r);
            let phi0 = self.weight.eval(r)?;
            sp_plateau += w * phi0 * powz(c, l);
            if c_r != 0.0 {
                let grad_cap = c_r.abs();
                let lap_cap = if grid.dim() >= 2 { (c_rr + nu / r * c_r).abs() } else { c_rr.abs() };
                let grad0 = self.weight.eval_gradient(r)?.abs();
                sp_cross += w * phi0.powf(1.0 - pc) * powz(c, l - pc) * grad0.powf(pc) * grad_cap.powf(pc);
                sp_grad_sq += w * phi0 * powz(c, l - 2.0 * pc) * grad_cap.powf(2.0 * pc);
                sp_lap += w * phi0 * powz(c, l - pc) * lap_cap.powf(pc);
            }
        }

        // time integrals over [0, T]
        let dt = t_hor / TIME_INTERVALS as f64;
        let mut tm_eta_dt = 0.0; // eta^{(k-2)p'} |eta_t|^{2p'}
        let mut tm_eta_dtt = 0.0; // eta^{(k-1)p'} |eta_tt|^{p'}
        let mut tm_mixed = 0.0; // eta^{k-p'} |eta_t|^{p'}
        let mut tm_plain = 0.0; // eta^k
        for j in 0..=TIME_INTERVALS {
            let t = j as f64 * dt;
            let wt = if j == 0 || j == TIME_INTERVALS { 0.5 * dt } else { dt };
            let (e, e1, e2) = self.temporal.base(t);
            tm_plain += wt * powz(e, k);
            if e1 != 0.0 || e2 != 0.0 {
                tm_eta_dt += wt * powz(e, (k - 2.0) * pc) * e1.abs().powf(2.0 * pc);
                tm_eta_dtt += wt * powz(e, (k - 1.0) * pc) * e2.abs().powf(pc);
                tm_mixed += wt * powz(e, k - pc) * e1.abs().powf(pc);
            }
        }

        Ok(RhsIntegrals {
            i1_eta_dt: sp_plateau * tm_eta_dt,
            i1_eta_dtt: sp_plateau * tm_eta_dtt,
            i2_cross: sp_cross * tm_mixed,
            i2_grad_sq: sp_grad_sq * tm_mixed,
            i2_lap: sp_lap * tm_mixed,
            i3_cross: sp_cross * tm_plain,
            i3_grad_sq: sp_grad_sq * tm_plain,
            i3_lap: sp_lap * tm_plain,
        })
    }

    /// The three Holder companion factors `(sum of companions)^{1/p'}`.
    pub fn holder_factor_integrals(&self, p: f64, grid: &RadialGrid) -> Result<HolderFactors> {
        let pc = conjugate_exponent(p)?;
        let rhs = self.rhs_scaling_integrals(p, grid)?;
        Ok(HolderFactors {
            i1: (rhs.i1_eta_dt + rhs.i1_eta_dtt).powf(1.0 / pc),
            i2: (rhs.i2_cross + rhs.i2_grad_sq + rhs.i2_lap).powf(1.0 / pc),
            i3: (rhs.i3_cross + rhs.i3_grad_sq + rhs.i3_lap).powf(1.0 / pc),
        })
    }
}

/// `x^e` with the convention `0^0 = 1` and exact zero for `x = 0, e > 0`,
/// avoiding NaNs from `0 * inf` in the factored integrands.
fn powz(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        if e == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        x.powf(e)
    }
}
