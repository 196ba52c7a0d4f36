//! Norming constant, Markov ratio and perturbation diagnostics of the local
//! reconstruction on a patch.
//!
//! All suprema are taken over a uniform probe grid with `density`
//! subdivisions per element side. The grid contains the element corners and
//! barycenters, and the grid for `2 * density` contains the one for `density`.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::basis::{dim, Basis};
use super::LeastSquares;
use crate::mesh::{ElementPatch, PatchGeometry, Rect};
use crate::{Error, Point, Result};

/// Inclusive `(nx + 1) x (ny + 1)` grid on `rect`.
pub fn probe_grid(rect: &Rect, nx: usize, ny: usize) -> Vec<Point> {
    let mut pts = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            pts.push(Point::new(
                rect.x0 + rect.width() * i as f64 / nx as f64,
                rect.y0 + rect.height() * j as f64 / ny as f64,
            ));
        }
    }
    pts
}

fn element_side(patch: &ElementPatch) -> f64 {
    (patch.region.area() / patch.members.len() as f64).sqrt()
}

fn density_checked(density: usize) -> Result<usize> {
    if density == 0 || !density.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("probe density must be even and positive, got {density}")));
    }
    Ok(density)
}

/// Probe points covering `S(K)`.
pub fn patch_probes(patch: &ElementPatch, density: usize) -> Result<Vec<Point>> {
    let density = density_checked(density)?;
    let s = element_side(patch);
    let nx = (patch.region.width() / s).round() as usize * density;
    let ny = (patch.region.height() / s).round() as usize * density;
    Ok(probe_grid(&patch.region, nx, ny))
}

/// Bounds of the center element `K` of a patch.
pub fn center_element(patch: &ElementPatch) -> Rect {
    let s = element_side(patch);
    let b = patch
        .samples
        .iter()
        .find(|(id, _)| *id == patch.element)
        .map(|(_, p)| *p)
        .expect("patch contains its center element");
    Rect {
        x0: b[0] - 0.5 * s,
        y0: b[1] - 0.5 * s,
        x1: b[0] + 0.5 * s,
        y1: b[1] + 0.5 * s,
    }
}

/// Probe points covering `K`.
pub fn element_probes(patch: &ElementPatch, density: usize) -> Result<Vec<Point>> {
    let density = density_checked(density)?;
    Ok(probe_grid(&center_element(patch), density, density))
}

fn lp_error(e: minilp::Error) -> Error {
    Error::LinearProgram(e.to_string())
}

/// `max p(z)` over `p in P_m` with `|p(x_i)| <= 1` at the sample points.
fn norming_value(basis: &Basis, samples: &[Vec<f64>], z: Point) -> Result<f64> {
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = basis
        .eval(z)
        .into_iter()
        .map(|c| lp.add_var(c, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    for row in samples {
        let expr: Vec<_> = vars.iter().copied().zip(row.iter().copied()).collect();
        lp.add_constraint(expr.clone(), ComparisonOp::Le, 1.0);
        lp.add_constraint(expr, ComparisonOp::Ge, -1.0);
    }
    Ok(lp.solve().map_err(lp_error)?.objective())
}

/// Probe-grid value of `Lambda(m, I(K)) = max_p |p|_{S(K)} / |p|_{I(K)}`.
///
/// This is a lower bound of the continuous constant and is nondecreasing
/// when the density doubles.
pub fn lambda_estimate(patch: &ElementPatch, m: usize, density: usize) -> Result<f64> {
    let probes = patch_probes(patch, density)?;
    let points = patch.sample_points();
    let basis = Basis::new(m, patch.center(), patch.geometry.outer_radius);
    // rank check and a readable error before any LP runs
    LeastSquares::new(&points, basis, patch.element)?;
    let rows: Vec<Vec<f64>> = points.iter().map(|&p| basis.eval(p)).collect();
    let mut lambda: f64 = 1.0;
    for z in probes {
        lambda = lambda.max(norming_value(&basis, &rows, z)?);
    }
    Ok(lambda)
}

/// Discrete minimax error `min_p max_z |g(z) - p(z)|` over `points`.
pub fn best_approximation_error(basis: &Basis, points: &[Point], values: &[f64]) -> Result<f64> {
    if points.len() != values.len() || points.is_empty() {
        return Err(Error::InvalidArgument("points and values must be nonempty and match".into()));
    }
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..basis.dim())
        .map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    let t = lp.add_var(1.0, (0.0, f64::INFINITY));
    for (&z, &g) in points.iter().zip(values) {
        let mut expr: Vec<_> = vars.iter().copied().zip(basis.eval(z)).collect();
        expr.push((t, 1.0));
        lp.add_constraint(expr.clone(), ComparisonOp::Ge, g);
        expr.last_mut().expect("pushed above").1 = -1.0;
        lp.add_constraint(expr, ComparisonOp::Le, g);
    }
    Ok(lp.solve().map_err(lp_error)?.objective())
}

/// `sup |grad g| / (sup |g| * 4 m^2 R / r^2)` for `g = sum c_j phi_j` over the
/// patch probes, where `phi` is the patch basis of order `m`.
pub fn markov_ratio(patch: &ElementPatch, m: usize, coeffs: &[f64], density: usize) -> Result<f64> {
    if m == 0 {
        return Ok(0.0);
    }
    let basis = Basis::new(m, patch.center(), patch.geometry.outer_radius);
    let mut sup_g: f64 = 0.0;
    let mut sup_grad: f64 = 0.0;
    for z in patch_probes(patch, density)? {
        sup_g = sup_g.max(basis.combine(coeffs, z).abs());
        let g = basis.combine_gradient(coeffs, z);
        sup_grad = sup_grad.max(g[0].hypot(g[1]));
    }
    if sup_g == 0.0 {
        return Ok(0.0);
    }
    let PatchGeometry {
        outer_radius: big_r,
        inner_radius: r,
        ..
    } = patch.geometry;
    let factor = 4.0 * (m * m) as f64 * big_r / (r * r);
    Ok(sup_grad / (sup_g * factor))
}

fn random_coefficients(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Worst Markov ratio over `trials` random polynomials of degree `m`.
pub fn markov_check(patch: &ElementPatch, m: usize, trials: usize, density: usize, rng: &mut impl Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let c = random_coefficients(dim(m), rng);
        worst = worst.max(markov_ratio(patch, m, &c, density)?);
    }
    Ok(worst)
}

/// Lambda bound from the inner/outer radii when `r^2 > 2 m^2 R H`.
pub fn uniform_lambda_bound(geometry: &PatchGeometry, m: usize, h: f64) -> Option<f64> {
    if m == 0 {
        return Some(1.0);
    }
    let s = geometry.inner_radius.powi(2) / (2.0 * (m * m) as f64 * geometry.outer_radius * h);
    (s > 1.0).then(|| 1.0 + 1.0 / (s - 1.0))
}

/// Lambda bound from the width of a convex patch when `w > 2 m^2 H`.
pub fn uniform_lambda_bound_width(geometry: &PatchGeometry, m: usize, h: f64) -> Option<f64> {
    if m == 0 {
        return Some(1.0);
    }
    let s = geometry.width / (2.0 * (m * m) as f64 * h);
    (s > 1.0).then(|| 1.0 + 1.0 / (s - 1.0))
}

/// Radius of admissible sample perturbations for a stability loss `delta`.
pub fn perturbation_radius(geometry: &PatchGeometry, m: usize, lambda: f64, delta: f64) -> f64 {
    if m == 0 {
        return f64::INFINITY;
    }
    delta * geometry.inner_radius.powi(2) / (4.0 * lambda * (m * m) as f64 * geometry.outer_radius)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub delta: f64,
    pub radius: f64,
    pub trials: usize,
    pub violations: usize,
    /// Largest `|fit|_K / bound` over the trials.
    pub worst_ratio: f64,
}

/// Random sample perturbations within the admissible radius and random data;
/// checks `|R g|_K <= lambda / (1 - delta) sqrt(n) max |g(x_i)|`.
pub fn perturb_stability(
    patch: &ElementPatch,
    m: usize,
    lambda: f64,
    delta: f64,
    trials: usize,
    density: usize,
    rng: &mut impl Rng,
) -> Result<PerturbationReport> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidArgument(format!("delta must lie in [0, 1), got {delta}")));
    }
    let radius = perturbation_radius(&patch.geometry, m, lambda, delta).min(element_side(patch));
    let basis = Basis::new(m, patch.center(), patch.geometry.outer_radius);
    let probes = element_probes(patch, density)?;
    let base = patch.sample_points();
    let n = base.len();
    let mut violations = 0;
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..trials {
        let points: Vec<Point> = base
            .iter()
            .map(|p| {
                let rho = radius * rng.random::<f64>().sqrt();
                let theta = std::f64::consts::TAU * rng.random::<f64>();
                Point::new(p.x + rho * theta.cos(), p.y + rho * theta.sin())
            })
            .collect();
        let values = random_coefficients(n, rng);
        let ls = LeastSquares::new(&points, basis, patch.element)?;
        let c = ls.fit(&values);
        let sup = probes.iter().fold(0.0f64, |s, &z| s.max(basis.combine(&c, z).abs()));
        let gmax = values.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        let bound = lambda / (1.0 - delta) * (n as f64).sqrt() * gmax;
        let ratio = sup / bound;
        worst_ratio = worst_ratio.max(ratio);
        if ratio > 1.0 + 1e-12 {
            violations += 1;
        }
    }
    Ok(PerturbationReport {
        delta,
        radius,
        trials,
        violations,
        worst_ratio,
    })
}

/// Diagnostics of the reconstruction on one patch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormingReport {
    pub element: usize,
    pub order: usize,
    pub lambda: f64,
    pub markov_ratio: f64,
    pub cardinality: usize,
    pub outer_radius: f64,
    pub inner_radius: f64,
    pub width: f64,
    pub delta: f64,
    pub perturbation_radius: f64,
    pub lambda_bound_radii: Option<f64>,
    pub lambda_bound_width: Option<f64>,
}

pub fn norming_report(
    patch: &ElementPatch,
    m: usize,
    h: f64,
    density: usize,
    delta: f64,
    markov_trials: usize,
    rng: &mut impl Rng,
) -> Result<NormingReport> {
    let lambda = lambda_estimate(patch, m, density)?;
    Ok(NormingReport {
        element: patch.element,
        order: m,
        lambda,
        markov_ratio: markov_check(patch, m, markov_trials, density, rng)?,
        cardinality: patch.samples.len(),
        outer_radius: patch.geometry.outer_radius,
        inner_radius: patch.geometry.inner_radius,
        width: patch.geometry.width,
        delta,
        perturbation_radius: perturbation_radius(&patch.geometry, m, lambda, delta),
        lambda_bound_radii: uniform_lambda_bound(&patch.geometry, m, h),
        lambda_bound_width: uniform_lambda_bound_width(&patch.geometry, m, h),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_patch, OfflineMesh};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn interior_patch(q: usize, n_lowest: usize) -> ElementPatch {
        let mesh = OfflineMesh::new(Rect::unit_square(), q).unwrap();
        let k = mesh.element_id(q / 2, q / 2);
        build_patch(&mesh, k, n_lowest).unwrap()
    }

    #[test]
    fn probe_grids_nest() {
        let p = interior_patch(9, 9);
        let coarse = patch_probes(&p, 4).unwrap();
        let fine = patch_probes(&p, 8).unwrap();
        assert_eq!(coarse.len(), 13 * 13);
        for c in &coarse {
            assert!(fine.iter().any(|f| (f - c).norm() < 1e-12));
        }
        for s in p.sample_points() {
            assert!(coarse.iter().any(|f| (f - s).norm() < 1e-12));
        }
        assert!(patch_probes(&p, 3).is_err());
    }

    #[test]
    fn lambda_of_constants_is_one() {
        let p = interior_patch(9, 5);
        assert_abs_diff_eq!(lambda_estimate(&p, 0, 4).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn lambda_is_monotone_in_density() {
        let p = interior_patch(9, 5);
        let a = lambda_estimate(&p, 1, 2).unwrap();
        let b = lambda_estimate(&p, 1, 4).unwrap();
        let c = lambda_estimate(&p, 1, 8).unwrap();
        assert!(a >= 1.0 && a <= b + 1e-12 && b <= c + 1e-12);
        assert!(c < 10.0);
    }

    #[test]
    fn lambda_matches_brute_force_for_linears() {
        // For m = 1 on a 3 x 3 block of barycenters, the extremal linear
        // polynomial is +-1 at opposite corners; brute force over vertices of
        // the constraint polytope spanned by sign patterns on the corner samples.
        let p = interior_patch(9, 5);
        let lambda = lambda_estimate(&p, 1, 8).unwrap();
        let c = p.center();
        let s = element_side(&p);
        // p(x) = ((x1 - c1) + (x2 - c2)) / (2 s) is bounded by 1 on samples and
        // equals 1.5 at the patch corner.
        let corner = Point::new(c.x + 1.5 * s, c.y + 1.5 * s);
        let q = |x: Point| ((x.x - c.x) + (x.y - c.y)) / (2.0 * s);
        assert!(p.sample_points().iter().all(|&x| q(x).abs() <= 1.0 + 1e-12));
        assert_abs_diff_eq!(q(corner), 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(lambda, 1.5, epsilon = 1e-9);
    }

    #[test]
    fn minimax_oracle_on_known_case() {
        // best linear approximation of x^2 on [-1, 1] has error 1/2
        let basis = Basis::new(1, Point::origin(), 1.0);
        let pts: Vec<Point> = (0..=40).map(|i| Point::new(-1.0 + i as f64 / 20.0, 0.0)).collect();
        let vals: Vec<f64> = pts.iter().map(|p| p.x * p.x).collect();
        assert_abs_diff_eq!(best_approximation_error(&basis, &pts, &vals).unwrap(), 0.5, epsilon = 1e-9);
    }

    #[test]
    fn markov_ratio_cases() {
        let p = interior_patch(9, 5);
        assert_eq!(markov_ratio(&p, 0, &[1.0], 4).unwrap(), 0.0);
        // g = xi1 (scaled x1)
        let ratio = markov_ratio(&p, 1, &[0.0, 1.0, 0.0], 4).unwrap();
        assert!(ratio > 0.0 && ratio < 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!(markov_check(&p, 3, 50, 4, &mut rng).unwrap() <= 1.05);
    }

    #[test]
    fn unperturbed_stability_and_constants() {
        let p = interior_patch(9, 13);
        let lambda = lambda_estimate(&p, 2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = perturb_stability(&p, 2, lambda, 0.0, 50, 4, &mut rng).unwrap();
        assert_eq!(r.radius, 0.0);
        assert_eq!(r.violations, 0);
        let r = perturb_stability(&p, 2, lambda, 0.5, 50, 4, &mut rng).unwrap();
        assert!(r.radius > 0.0);
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn uniform_bounds_dominate_estimates() {
        let mesh = OfflineMesh::new(Rect::unit_square(), 11).unwrap();
        let p = build_patch(&mesh, mesh.element_id(5, 5), 13).unwrap();
        let lambda = lambda_estimate(&p, 1, 8).unwrap();
        let bound = uniform_lambda_bound_width(&p.geometry, 1, mesh.h()).unwrap();
        assert!(lambda <= bound + 1e-9, "{lambda} > {bound}");
        assert!(uniform_lambda_bound_width(&p.geometry, 3, mesh.h()).is_none());
    }
}
