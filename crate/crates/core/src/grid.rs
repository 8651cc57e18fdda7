//! Radial geometry of the exterior domain.
//!
//! The domain is the exterior of a ball of radius `r_obstacle` (the half-line
//! for dimension 1), truncated at `r_max`. A grid carries the node radii and
//! trapezoid quadrature weights against the surface measure
//! `omega_{n-1} r^{n-1} dr`, so that `integrate` evaluates integrals over the
//! full n-dimensional annulus of a radially symmetric function.
//!
//! The discrete radial Laplacian is assembled in conservative (flux) form
//! `r^{1-n} d/dr (r^{n-1} df/dr)`, which is self-adjoint with respect to the
//! quadrature inner product and second-order accurate on uniform grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Node placement rule for [`build_radial_grid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Grading {
    Uniform,
    /// Cell widths grow by `ratio` per cell moving outward, so `ratio > 1`
    /// concentrates nodes near the obstacle.
    Geometric { ratio: f64 },
}

/// Discretized exterior radial geometry with quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    dim: usize,
    r_obstacle: f64,
    r_max: f64,
    grading: Grading,
    nodes: Vec<f64>,
    quad_weights: Vec<f64>,
}

/// One real value per grid node; the carrier for u, u_t, phi_0 samples, etc.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    pub values: Vec<f64>,
}

/// Surface area of the unit sphere in `R^n`, with the dimension-1 convention
/// that the domain is the half-line (measure `dr`, not `2 dr`).
pub fn unit_sphere_area(dim: usize) -> f64 {
    match dim {
        0 => 0.0,
        1 => 1.0,
        n => {
            // 2 pi^{n/2} / Gamma(n/2), with Gamma(k/2) built up iteratively.
            let mut gamma = if n % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
            let mut k = if n % 2 == 0 { 2 } else { 1 };
            while k < n {
                gamma *= k as f64 / 2.0;
                k += 2;
            }
            2.0 * std::f64::consts::PI.powf(n as f64 / 2.0) / gamma
        }
    }
}

/// Build a radial grid on `[r_obstacle, r_max]` with `cells` intervals.
pub fn build_radial_grid(
    dim: usize,
    r_obstacle: f64,
    r_max: f64,
    cells: usize,
    grading: Grading,
) -> Result<RadialGrid> {
    if dim < 1 {
        return Err(Error::InvalidDimension { dim });
    }
    if cells < 8 {
        return Err(Error::TooFewCells { cells, min: 8 });
    }
    if !(r_max > r_obstacle) || r_obstacle < 0.0 {
        return Err(Error::DegenerateInterval { r_obstacle, r_max });
    }
    if dim >= 2 && r_obstacle <= 0.0 {
        return Err(Error::InvalidObstacle { dim, r0: r_obstacle });
    }
    if dim == 1 && r_obstacle != 0.0 {
        return Err(Error::InvalidObstacle { dim, r0: r_obstacle });
    }

    let span = r_max - r_obstacle;
    let mut nodes = Vec::with_capacity(cells + 1);
    match grading {
        Grading::Uniform => {
            for i in 0..=cells {
                nodes.push(r_obstacle + span * i as f64 / cells as f64);
            }
        }
        Grading::Geometric { ratio } => {
            if !(ratio > 0.0) || !ratio.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "geometric grading ratio must be positive and finite, got {ratio}"
                )));
            }
            if (ratio - 1.0).abs() < 1e-12 {
                for i in 0..=cells {
                    nodes.push(r_obstacle + span * i as f64 / cells as f64);
                }
            } else {
                let h0 = span * (ratio - 1.0) / (ratio.powi(cells as i32) - 1.0);
                let mut r = r_obstacle;
                let mut h = h0;
                nodes.push(r);
                for _ in 0..cells {
                    r += h;
                    h *= ratio;
                    nodes.push(r);
                }
                // Kill accumulated round-off at the outer endpoint.
                *nodes.last_mut().unwrap() = r_max;
            }
        }
    }

    let omega = unit_sphere_area(dim);
    let m = nodes.len();
    let mut quad_weights = vec![0.0; m];
    for i in 0..m - 1 {
        let h = nodes[i + 1] - nodes[i];
        quad_weights[i] += 0.5 * h * omega * nodes[i].powi(dim as i32 - 1);
        quad_weights[i + 1] += 0.5 * h * omega * nodes[i + 1].powi(dim as i32 - 1);
    }

    Ok(RadialGrid { dim, r_obstacle, r_max, grading, nodes, quad_weights })
}

impl RadialGrid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn r_obstacle(&self) -> f64 {
        self.r_obstacle
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    /// Same geometry with the cell count multiplied by `factor`.
    pub fn refine(&self, factor: usize) -> Result<RadialGrid> {
        build_radial_grid(
            self.dim,
            self.r_obstacle,
            self.r_max,
            (self.nodes.len() - 1) * factor.max(1),
            self.grading,
        )
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Analytic volume of the truncated annulus `{r_obstacle <= |x| <= r_max}`.
    pub fn analytic_volume(&self) -> f64 {
        let n = self.dim as f64;
        unit_sphere_area(self.dim) * (self.r_max.powf(n) - self.r_obstacle.powf(n)) / n
    }

    fn check(&self, f: &RadialField) -> Result<()> {
        if f.values.len() != self.nodes.len() {
            return Err(Error::GridMismatch {
                field_len: f.values.len(),
                grid_len: self.nodes.len(),
            });
        }
        Ok(())
    }

    /// Trapezoid quadrature of `f` against the annulus measure.
    pub fn integrate(&self, f: &RadialField) -> Result<f64> {
        self.check(f)?;
        Ok(self
            .quad_weights
            .iter()
            .zip(&f.values)
            .map(|(w, v)| w * v)
            .sum())
    }

    /// Discrete radial Laplacian `f_rr + (n-1)/r f_r` in conservative form.
    ///
    /// Interior nodes are second-order accurate (on uniform grids); the two
    /// boundary nodes use one-sided stencils and are lower order.
    pub fn radial_laplacian(&self, f: &RadialField) -> Result<RadialField> {
        self.check(f)?;
        let n = self.nodes.len();
        let mut out = vec![0.0; n];
        let nu = self.dim as i32 - 1;
        for i in 1..n - 1 {
            let hm = self.nodes[i] - self.nodes[i - 1];
            let hp = self.nodes[i + 1] - self.nodes[i];
            let am = (0.5 * (self.nodes[i - 1] + self.nodes[i])).powi(nu);
            let ap = (0.5 * (self.nodes[i] + self.nodes[i + 1])).powi(nu);
            let w = self.nodes[i].powi(nu) * 0.5 * (hm + hp);
            out[i] = (ap * (f.values[i + 1] - f.values[i]) / hp
                - am * (f.values[i] - f.values[i - 1]) / hm)
                / w;
        }
        if n >= 3 {
            out[0] = self.one_sided_laplacian(f, [0, 1, 2]);
            out[n - 1] = self.one_sided_laplacian(f, [n - 1, n - 2, n - 3]);
        }
        Ok(RadialField { values: out })
    }

    /// Lower-order boundary value: 3-point one-sided f'' and f' combined into
    /// the radial form, skipping the 1/r term where it is singular or absent.
    fn one_sided_laplacian(&self, f: &RadialField, idx: [usize; 3]) -> f64 {
        let [i0, i1, i2] = idx;
        let r0 = self.nodes[i0];
        let h1 = self.nodes[i1] - r0;
        let h2 = self.nodes[i2] - self.nodes[i1];
        let (f0, f1, f2) = (f.values[i0], f.values[i1], f.values[i2]);
        let fpp = 2.0 * (f0 / (h1 * (h1 + h2)) - f1 / (h1 * h2) + f2 / (h2 * (h1 + h2)));
        if self.dim == 1 || r0 == 0.0 {
            return fpp;
        }
        let fp = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * f0 + (h1 + h2) / (h1 * h2) * f1
            - h1 / (h2 * (h1 + h2)) * f2;
        fpp + (self.dim as f64 - 1.0) / r0 * fp
    }

    /// `L^2` norm of a field over the annulus.
    pub fn l2_norm(&self, f: &RadialField) -> Result<f64> {
        self.check(f)?;
        let s: f64 = self
            .quad_weights
            .iter()
            .zip(&f.values)
            .map(|(w, v)| w * v * v)
            .sum();
        Ok(s.max(0.0).sqrt())
    }

    /// `H^1` seminorm via midpoint cell gradients, consistent with the
    /// conservative Laplacian: `a(f, f) = <-Lf, f>` exactly for fields
    /// vanishing at both ends.
    pub fn h1_seminorm(&self, f: &RadialField) -> Result<f64> {
        Ok(self.h1_inner(f, f)?.max(0.0).sqrt())
    }

    /// The bilinear form `int grad f . grad g dx` on cell midpoints.
    pub fn h1_inner(&self, f: &RadialField, g: &RadialField) -> Result<f64> {
        self.check(f)?;
        self.check(g)?;
        let omega = unit_sphere_area(self.dim);
        let nu = self.dim as i32 - 1;
        let mut s = 0.0;
        for i in 0..self.nodes.len() - 1 {
            let h = self.nodes[i + 1] - self.nodes[i];
            let rm = 0.5 * (self.nodes[i] + self.nodes[i + 1]);
            let df = (f.values[i + 1] - f.values[i]) / h;
            let dg = (g.values[i + 1] - g.values[i]) / h;
            s += omega * rm.powi(nu) * df * dg * h;
        }
        Ok(s)
    }

    pub fn sup_norm(&self, f: &RadialField) -> Result<f64> {
        self.check(f)?;
        Ok(f.values.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
    }
}

impl RadialField {
    pub fn zeros(grid: &RadialGrid) -> Self {
        RadialField { values: vec![0.0; grid.node_count()] }
    }

    pub fn from_fn(grid: &RadialGrid, f: impl Fn(f64) -> f64) -> Self {
        RadialField { values: grid.nodes().iter().map(|&r| f(r)).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_grid_nodes() {
        let g = build_radial_grid(3, 1.0, 2.0, 8, Grading::Uniform).unwrap();
        let expect: Vec<f64> = (0..=8).map(|i| 1.0 + 0.125 * i as f64).collect();
        assert_eq!(g.nodes(), expect.as_slice());
    }

    #[test]
    fn half_line_grid() {
        let g = build_radial_grid(1, 0.0, 10.0, 10, Grading::Uniform).unwrap();
        assert_eq!(g.node_count(), 11);
        assert_relative_eq!(g.nodes()[3], 3.0);
    }

    #[test]
    fn degenerate_interval_rejected() {
        let err = build_radial_grid(2, 1.0, 1.0, 8, Grading::Uniform).unwrap_err();
        assert!(matches!(err, Error::DegenerateInterval { .. }));
    }

    #[test]
    fn too_few_cells_rejected() {
        let err = build_radial_grid(1, 0.0, 1.0, 4, Grading::Uniform).unwrap_err();
        assert!(matches!(err, Error::TooFewCells { .. }));
    }

    #[test]
    fn obstacle_required_in_higher_dims() {
        assert!(matches!(
            build_radial_grid(3, 0.0, 2.0, 8, Grading::Uniform).unwrap_err(),
            Error::InvalidObstacle { .. }
        ));
        assert!(matches!(
            build_radial_grid(1, 0.5, 2.0, 8, Grading::Uniform).unwrap_err(),
            Error::InvalidObstacle { .. }
        ));
    }

    #[test]
    fn geometric_grading_concentrates_near_obstacle() {
        let g = build_radial_grid(3, 1.0, 2.0, 16, Grading::Geometric { ratio: 1.2 }).unwrap();
        let first = g.nodes()[1] - g.nodes()[0];
        let last = g.nodes()[16] - g.nodes()[15];
        assert!(first < last);
        assert_relative_eq!(g.nodes()[16], 2.0);
        // widths must grow by the requested ratio
        let h0 = g.nodes()[1] - g.nodes()[0];
        let h1 = g.nodes()[2] - g.nodes()[1];
        assert_relative_eq!(h1 / h0, 1.2, epsilon = 1e-10);
    }

    #[test]
    fn annulus_volume_dim3() {
        let g = build_radial_grid(3, 1.0, 2.0, 512, Grading::Uniform).unwrap();
        let one = RadialField::from_fn(&g, |_| 1.0);
        let v = g.integrate(&one).unwrap();
        let exact = 28.0 * std::f64::consts::PI / 3.0;
        assert_relative_eq!(v, exact, max_relative = 1e-6);
    }

    #[test]
    fn half_line_length() {
        let g = build_radial_grid(1, 0.0, 5.0, 64, Grading::Uniform).unwrap();
        let one = RadialField::from_fn(&g, |_| 1.0);
        assert_relative_eq!(g.integrate(&one).unwrap(), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn inverse_square_integral_dim3() {
        let g = build_radial_grid(3, 1.0, 2.0, 512, Grading::Uniform).unwrap();
        let f = RadialField::from_fn(&g, |r| 1.0 / (r * r));
        let exact = 4.0 * std::f64::consts::PI;
        assert_relative_eq!(g.integrate(&f).unwrap(), exact, max_relative = 1e-6);
    }

    #[test]
    fn total_weight_matches_analytic_volume() {
        for (dim, r0) in [(1usize, 0.0), (2, 1.0), (3, 1.0), (4, 0.5)] {
            let g = build_radial_grid(dim, r0, r0 + 3.0, 512, Grading::Uniform).unwrap();
            let total: f64 = g.quad_weights().iter().sum();
            assert_relative_eq!(total, g.analytic_volume(), max_relative = 1e-5);
            assert!(g.quad_weights().iter().all(|&w| w >= 0.0));
        }
    }

    #[test]
    fn laplacian_of_r_squared_dim3() {
        let g = build_radial_grid(3, 1.0, 2.0, 256, Grading::Uniform).unwrap();
        let f = RadialField::from_fn(&g, |r| r * r);
        let lap = g.radial_laplacian(&f).unwrap();
        for i in 1..g.node_count() - 1 {
            assert_relative_eq!(lap.values[i], 6.0, epsilon = 1e-3);
        }
    }

    #[test]
    fn harmonic_functions_have_small_residual() {
        let g3 = build_radial_grid(3, 1.0, 4.0, 512, Grading::Uniform).unwrap();
        let f3 = RadialField::from_fn(&g3, |r| 1.0 - 1.0 / r);
        let lap3 = g3.radial_laplacian(&f3).unwrap();
        let g2 = build_radial_grid(2, 1.0, 4.0, 512, Grading::Uniform).unwrap();
        let f2 = RadialField::from_fn(&g2, |r| r.ln());
        let lap2 = g2.radial_laplacian(&f2).unwrap();
        for i in 1..511 {
            assert!(lap3.values[i].abs() < 1e-4);
            assert!(lap2.values[i].abs() < 1e-4);
        }
    }

    #[test]
    fn laplacian_refinement_is_second_order() {
        // smooth test function, interior error must shrink by >= 3.5x per halving
        let f = |r: f64| (r - 1.0).powi(2) * (3.0 - r).sin();
        let exact = |r: f64, n: f64| {
            // f = g(r); Delta f = g'' + (n-1)/r g'
            let gp = 2.0 * (r - 1.0) * (3.0 - r).sin() - (r - 1.0).powi(2) * (3.0 - r).cos();
            let gpp = 2.0 * (3.0 - r).sin() - 4.0 * (r - 1.0) * (3.0 - r).cos()
                - (r - 1.0).powi(2) * (3.0 - r).sin();
            gpp + (n - 1.0) / r * gp
        };
        let mut prev_err = f64::INFINITY;
        for cells in [64usize, 128, 256] {
            let g = build_radial_grid(3, 1.0, 3.0, cells, Grading::Uniform).unwrap();
            let fld = RadialField::from_fn(&g, f);
            let lap = g.radial_laplacian(&fld).unwrap();
            let mut err = 0.0_f64;
            for i in 1..g.node_count() - 1 {
                err = err.max((lap.values[i] - exact(g.nodes()[i], 3.0)).abs());
            }
            if prev_err.is_finite() {
                assert!(
                    prev_err / err >= 3.5,
                    "refinement factor {} too small",
                    prev_err / err
                );
            }
            prev_err = err;
        }
    }

    #[test]
    fn mismatched_field_rejected() {
        let g = build_radial_grid(1, 0.0, 1.0, 16, Grading::Uniform).unwrap();
        let f = RadialField { values: vec![0.0; 5] };
        assert!(matches!(g.integrate(&f).unwrap_err(), Error::GridMismatch { .. }));
        assert!(matches!(g.radial_laplacian(&f).unwrap_err(), Error::GridMismatch { .. }));
    }

    #[test]
    fn unit_sphere_areas() {
        assert_relative_eq!(unit_sphere_area(1), 1.0);
        assert_relative_eq!(unit_sphere_area(2), 2.0 * std::f64::consts::PI);
        assert_relative_eq!(unit_sphere_area(3), 4.0 * std::f64::consts::PI);
        assert_relative_eq!(unit_sphere_area(4), 2.0 * std::f64::consts::PI.powi(2));
    }

    proptest::proptest! {
        // linearity of the Laplacian holds to round-off
        #[test]
        fn laplacian_linearity(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in 0u64..1000) {
            let g = build_radial_grid(3, 1.0, 2.0, 32, Grading::Uniform).unwrap();
            // cheap deterministic pseudo-random fields
            let f1 = RadialField::from_fn(&g, |r| ((seed as f64 + 1.0) * r).sin());
            let f2 = RadialField::from_fn(&g, |r| (r * r - seed as f64 * 0.01).cos());
            let combo = RadialField {
                values: f1.values.iter().zip(&f2.values).map(|(x, y)| a * x + b * y).collect(),
            };
            let lc = g.radial_laplacian(&combo).unwrap();
            let l1 = g.radial_laplacian(&f1).unwrap();
            let l2 = g.radial_laplacian(&f2).unwrap();
            for i in 0..g.node_count() {
                let want = a * l1.values[i] + b * l2.values[i];
                proptest::prop_assert!((lc.values[i] - want).abs() <= 1e-9 * (1.0 + want.abs()));
            }
        }
    }
}
