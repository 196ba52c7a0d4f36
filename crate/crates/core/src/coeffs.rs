//! Multiscale coefficient fields `a^eps(x)` and the known effective matrices of
//! the test problems.

use std::f64::consts::PI;

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::mesh::Rect;
use crate::{Error, Mat2, MatrixField, Point, Result};

/// Default microscale length.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Diagonal factor of the reference effective matrix `7.00 * a^1(x)` reported
/// for the Kozlov-class example (truncated correctors on `(-200, 200)^2`).
/// Kept as an external constant; it is not recomputed here.
pub const KOZLOV_REFERENCE_FACTOR: f64 = 7.00;

/// A multiscale coefficient field with declared ellipticity bounds.
pub trait CoefficientField: MatrixField {
    fn epsilon(&self) -> f64;

    /// Declared `(alpha, beta)`: `(a xi, xi) >= alpha |xi|^2`, `|a xi| <= beta |xi|`.
    fn bounds(&self) -> (f64, f64);

    fn descriptor(&self) -> CoefficientSpec;

    /// Coefficient seen by a cell problem centered at `center`, at physical
    /// offset `offset` from the center. Slowly varying factors are frozen at
    /// `center` where the field has a two-scale structure.
    fn cell_eval(&self, center: Point, offset: Vector2<f64>) -> Mat2 {
        self.eval(center + offset)
    }

    /// Edge length of the grid on which the fast part is piecewise constant.
    fn grid(&self) -> Option<f64> {
        None
    }
}

/// Smooth additive background of the checkerboard field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Background {
    Zero,
    /// `(2.5 + 1.5 sin 2 pi x1)(2.5 + 1.5 cos 2 pi x2)`
    Product,
}

impl Background {
    pub fn eval(&self, x: Point) -> f64 {
        match self {
            Background::Zero => 0.0,
            Background::Product => slow_factor(x),
        }
    }

    fn range(&self) -> (f64, f64) {
        match self {
            Background::Zero => (0.0, 0.0),
            Background::Product => (1.0, 16.0),
        }
    }
}

fn default_background() -> Background {
    Background::Product
}

/// Random checkerboard on an `epsilon`-grid: each cell is `k1` with
/// probability `p1`, otherwise `k2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckerboardSpec {
    pub epsilon: f64,
    pub k1: f64,
    pub k2: f64,
    pub p1: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_background")]
    pub background: Background,
}

impl Default for CheckerboardSpec {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            k1: 2.0,
            k2: 8.0,
            p1: 0.5,
            seed: 0,
            background: Background::Product,
        }
    }
}

/// Serializable description of a coefficient field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientSpec {
    /// Constant matrix, row-major.
    Constant { matrix: [f64; 4] },
    LocallyPeriodic { epsilon: f64 },
    Kozlov { epsilon: f64 },
    Checkerboard(CheckerboardSpec),
}

impl CoefficientSpec {
    pub fn build(&self) -> Result<Box<dyn CoefficientField>> {
        Ok(match *self {
            CoefficientSpec::Constant { matrix } => Box::new(ConstantField::new(crate::mat_from_row_major(matrix))?),
            CoefficientSpec::LocallyPeriodic { epsilon } => Box::new(LocallyPeriodic::new(epsilon)?),
            CoefficientSpec::Kozlov { epsilon } => Box::new(Kozlov::new(epsilon)?),
            CoefficientSpec::Checkerboard(spec) => Box::new(Checkerboard::new(spec)?),
        })
    }

    /// Effective matrix of the field when it is known in closed form (or, for
    /// the Kozlov example, from [`KOZLOV_REFERENCE_FACTOR`]).
    pub fn known_effective(&self) -> Option<Box<dyn MatrixField>> {
        match *self {
            CoefficientSpec::Constant { matrix } => {
                let m = crate::mat_from_row_major(matrix);
                Some(Box::new(move |_: Point| m))
            }
            CoefficientSpec::LocallyPeriodic { .. } => Some(Box::new(analytic_effective)),
            CoefficientSpec::Kozlov { .. } => Some(Box::new(|x: Point| {
                Mat2::identity() * (KOZLOV_REFERENCE_FACTOR * slow_factor(x))
            })),
            CoefficientSpec::Checkerboard(_) => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CoefficientSpec::Constant { .. } => "constant",
            CoefficientSpec::LocallyPeriodic { .. } => "locally_periodic",
            CoefficientSpec::Kozlov { .. } => "kozlov",
            CoefficientSpec::Checkerboard(_) => "checkerboard",
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        match *self {
            CoefficientSpec::Constant { .. } => None,
            CoefficientSpec::LocallyPeriodic { epsilon } | CoefficientSpec::Kozlov { epsilon } => Some(epsilon),
            CoefficientSpec::Checkerboard(s) => Some(s.epsilon),
        }
    }

    /// Same field with its random seed replaced (no-op for deterministic fields).
    pub fn with_seed(&self, seed: u64) -> Self {
        match *self {
            CoefficientSpec::Checkerboard(s) => CoefficientSpec::Checkerboard(CheckerboardSpec { seed, ..s }),
            ref other => other.clone(),
        }
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(())
}

/// `(2.5 + 1.5 sin 2 pi x1)(2.5 + 1.5 cos 2 pi x2)`
pub fn slow_factor(x: Point) -> f64 {
    (2.5 + 1.5 * (2.0 * PI * x.x).sin()) * (2.5 + 1.5 * (2.0 * PI * x.y).cos())
}

/// Analytic effective matrix of the locally periodic example:
/// `(1/5)(2.5 + 1.5 sin 2 pi x1)(2.5 + 1.5 cos 2 pi x2) I`.
pub fn analytic_effective(x: Point) -> Mat2 {
    Mat2::identity() * (0.2 * slow_factor(x))
}

/// Constant matrix field.
#[derive(Debug, Clone, Copy)]
pub struct ConstantField {
    matrix: Mat2,
    bounds: (f64, f64),
}

impl ConstantField {
    pub fn new(matrix: Mat2) -> Result<Self> {
        let sym = 0.5 * (matrix + matrix.transpose());
        let eig = sym.symmetric_eigenvalues();
        let alpha = eig.min();
        let beta = matrix.singular_values().max();
        if !(alpha > 0.0) {
            return Err(Error::Ellipticity {
                x: f64::NAN,
                y: f64::NAN,
                detail: format!("constant matrix has symmetric part eigenvalue {alpha}"),
            });
        }
        Ok(Self {
            matrix,
            bounds: (alpha, beta),
        })
    }

    pub fn identity() -> Self {
        Self::new(Mat2::identity()).expect("identity is elliptic")
    }
}

impl MatrixField for ConstantField {
    fn eval(&self, _x: Point) -> Mat2 {
        self.matrix
    }
}

impl CoefficientField for ConstantField {
    fn epsilon(&self) -> f64 {
        1.0
    }

    fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    fn descriptor(&self) -> CoefficientSpec {
        CoefficientSpec::Constant {
            matrix: crate::mat_to_row_major(&self.matrix),
        }
    }
}

/// Locally periodic scalar field
/// `a(x) = slow(x) / ((2.5 + 1.5 sin 2 pi x1/eps)(2.5 + 1.5 sin 2 pi x2/eps)) I`.
#[derive(Debug, Clone, Copy)]
pub struct LocallyPeriodic {
    epsilon: f64,
}

impl LocallyPeriodic {
    pub fn new(epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self { epsilon })
    }

    /// Fast factor as a function of the fast variable `y = x / eps`.
    pub fn fast_factor(y: Point) -> f64 {
        1.0 / ((2.5 + 1.5 * (2.0 * PI * y.x).sin()) * (2.5 + 1.5 * (2.0 * PI * y.y).sin()))
    }
}

impl MatrixField for LocallyPeriodic {
    fn eval(&self, x: Point) -> Mat2 {
        let y = Point::from(x.coords / self.epsilon);
        Mat2::identity() * (slow_factor(x) * Self::fast_factor(y))
    }
}

impl CoefficientField for LocallyPeriodic {
    fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn bounds(&self) -> (f64, f64) {
        (1.0 / 16.0, 16.0)
    }

    fn descriptor(&self) -> CoefficientSpec {
        CoefficientSpec::LocallyPeriodic { epsilon: self.epsilon }
    }

    fn cell_eval(&self, center: Point, offset: Vector2<f64>) -> Mat2 {
        let y = Point::from((center.coords + offset) / self.epsilon);
        Mat2::identity() * (slow_factor(center) * Self::fast_factor(y))
    }
}

/// Kozlov-class field `a^0(x/eps) a^1(x)` with the incommensurate diagonal
/// `a^0_ii(y) = 6 + sin^2(2 pi y_i) + sin^2(2 sqrt2 pi y_i)`.
#[derive(Debug, Clone, Copy)]
pub struct Kozlov {
    epsilon: f64,
}

impl Kozlov {
    pub fn new(epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self { epsilon })
    }

    pub fn fast_factor(y: Point) -> Mat2 {
        let entry = |t: f64| 6.0 + (2.0 * PI * t).sin().powi(2) + (2.0 * 2f64.sqrt() * PI * t).sin().powi(2);
        Mat2::new(entry(y.x), 0.0, 0.0, entry(y.y))
    }
}

impl MatrixField for Kozlov {
    fn eval(&self, x: Point) -> Mat2 {
        Self::fast_factor(Point::from(x.coords / self.epsilon)) * slow_factor(x)
    }
}

impl CoefficientField for Kozlov {
    fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn bounds(&self) -> (f64, f64) {
        (6.0, 128.0)
    }

    fn descriptor(&self) -> CoefficientSpec {
        CoefficientSpec::Kozlov { epsilon: self.epsilon }
    }

    fn cell_eval(&self, center: Point, offset: Vector2<f64>) -> Mat2 {
        Self::fast_factor(Point::from((center.coords + offset) / self.epsilon)) * slow_factor(center)
    }
}

/// Random checkerboard plus smooth background, times the identity.
///
/// Cell designations are a counter-based function of `(seed, cell index)`, so
/// any window of the field can be regenerated independently of evaluation order.
#[derive(Debug, Clone)]
pub struct Checkerboard {
    spec: CheckerboardSpec,
    base: ChaCha8Rng,
}

impl Checkerboard {
    pub fn new(spec: CheckerboardSpec) -> Result<Self> {
        check_epsilon(spec.epsilon)?;
        if !(0.0..=1.0).contains(&spec.p1) {
            return Err(Error::InvalidArgument(format!("p1 must lie in [0, 1], got {}", spec.p1)));
        }
        let (bmin, _) = spec.background.range();
        if !(spec.k1 > 0.0 && spec.k2 > 0.0) || spec.k1.min(spec.k2) + bmin <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "checkerboard values must be positive, got k1 = {}, k2 = {}",
                spec.k1, spec.k2
            )));
        }
        Ok(Self {
            spec,
            base: ChaCha8Rng::seed_from_u64(spec.seed),
        })
    }

    pub fn spec(&self) -> &CheckerboardSpec {
        &self.spec
    }

    /// Integer index of the grid cell containing `x`.
    pub fn cell_of(&self, x: Point) -> (i64, i64) {
        (
            (x.x / self.spec.epsilon).floor() as i64,
            (x.y / self.spec.epsilon).floor() as i64,
        )
    }

    /// Whether cell `(i, j)` carries `k1`.
    pub fn is_k1(&self, cell: (i64, i64)) -> bool {
        let mut rng = self.base.clone();
        let key = ((cell.0 as u32 as u64) << 32) | (cell.1 as u32 as u64);
        rng.set_stream(key);
        rng.random::<f64>() < self.spec.p1
    }

    pub fn cell_value(&self, cell: (i64, i64)) -> f64 {
        if self.is_k1(cell) {
            self.spec.k1
        } else {
            self.spec.k2
        }
    }
}

impl MatrixField for Checkerboard {
    fn eval(&self, x: Point) -> Mat2 {
        Mat2::identity() * (self.cell_value(self.cell_of(x)) + self.spec.background.eval(x))
    }
}

impl CoefficientField for Checkerboard {
    fn epsilon(&self) -> f64 {
        self.spec.epsilon
    }

    fn bounds(&self) -> (f64, f64) {
        let (bmin, bmax) = self.spec.background.range();
        (
            self.spec.k1.min(self.spec.k2) + bmin,
            self.spec.k1.max(self.spec.k2) + bmax,
        )
    }

    fn descriptor(&self) -> CoefficientSpec {
        CoefficientSpec::Checkerboard(self.spec)
    }

    fn grid(&self) -> Option<f64> {
        Some(self.spec.epsilon)
    }
}

/// Empirical ellipticity constants over a probe set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticityReport {
    /// Smallest `(a xi, xi)` over probes and unit directions.
    pub alpha_hat: f64,
    /// Largest `|a xi|` over probes and unit directions.
    pub beta_hat: f64,
}

/// Probe `field` on the cell centers of a `probes x probes` grid over `domain`
/// with `directions` unit vectors spread over the half circle.
pub fn verify_ellipticity(
    field: &dyn CoefficientField,
    domain: &Rect,
    probes: usize,
    directions: usize,
) -> Result<EllipticityReport> {
    if probes == 0 || directions == 0 {
        return Err(Error::InvalidArgument("empty probe grid".into()));
    }
    let dirs: Vec<Vector2<f64>> = (0..directions)
        .map(|k| {
            let t = PI * k as f64 / directions as f64;
            Vector2::new(t.cos(), t.sin())
        })
        .collect();
    let mut alpha_hat = f64::INFINITY;
    let mut beta_hat: f64 = 0.0;
    for j in 0..probes {
        for i in 0..probes {
            let x = Point::new(
                domain.x0 + (i as f64 + 0.5) * domain.width() / probes as f64,
                domain.y0 + (j as f64 + 0.5) * domain.height() / probes as f64,
            );
            let a = field.eval(x);
            for xi in &dirs {
                let ax = a * xi;
                let q = ax.dot(xi);
                if !(q > 0.0) {
                    return Err(Error::Ellipticity {
                        x: x.x,
                        y: x.y,
                        detail: format!("(a xi, xi) = {q} along ({}, {})", xi.x, xi.y),
                    });
                }
                alpha_hat = alpha_hat.min(q);
                beta_hat = beta_hat.max(ax.norm());
            }
        }
    }
    let (alpha, beta) = field.bounds();
    let tol = 1e-12 * beta.max(1.0);
    if alpha_hat < alpha - tol || beta_hat > beta + tol {
        return Err(Error::Ellipticity {
            x: f64::NAN,
            y: f64::NAN,
            detail: format!(
                "measured ({alpha_hat}, {beta_hat}) outside declared bounds ({alpha}, {beta})"
            ),
        });
    }
    Ok(EllipticityReport { alpha_hat, beta_hat })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn locally_periodic_plug_in_values() {
        let f = LocallyPeriodic::new(0.1).unwrap();
        // x / eps integer: sin terms vanish, cos(0) = 1
        assert_abs_diff_eq!(f.eval(Point::new(0.0, 0.0))[(0, 0)], 1.6, epsilon = 1e-12);
        assert_abs_diff_eq!(f.eval(Point::new(0.0, 0.0))[(0, 1)], 0.0);
        assert_abs_diff_eq!(slow_factor(Point::new(0.25, 0.5)), 4.0, epsilon = 1e-12);
        // fast factor equals one where both sines are -1
        assert_abs_diff_eq!(LocallyPeriodic::fast_factor(Point::new(0.75, 0.75)), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn locally_periodic_fast_factor_is_periodic() {
        for k in 0..20 {
            let y = Point::new(0.037 * k as f64, 0.61 - 0.05 * k as f64);
            let a = LocallyPeriodic::fast_factor(y);
            assert_abs_diff_eq!(a, LocallyPeriodic::fast_factor(y + Vector2::new(1.0, 0.0)), epsilon = 1e-12);
            assert_abs_diff_eq!(a, LocallyPeriodic::fast_factor(y + Vector2::new(0.0, 1.0)), epsilon = 1e-12);
        }
    }

    #[test]
    fn analytic_effective_plug_in() {
        assert_abs_diff_eq!(analytic_effective(Point::new(0.0, 0.0)), Mat2::identity() * 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(analytic_effective(Point::new(0.25, 0.5)), Mat2::identity() * 0.8, epsilon = 1e-14);
        assert_abs_diff_eq!(analytic_effective(Point::new(0.75, 0.0)), Mat2::identity() * 0.8, epsilon = 1e-14);
    }

    #[test]
    fn cell_eval_freezes_slow_factor() {
        let f = LocallyPeriodic::new(1e-3).unwrap();
        let c = Point::new(0.3, 0.7);
        let off = Vector2::new(2e-4, -1e-4);
        let y = Point::from((c.coords + off) / 1e-3);
        assert_abs_diff_eq!(
            f.cell_eval(c, off)[(0, 0)],
            slow_factor(c) * LocallyPeriodic::fast_factor(y),
            epsilon = 1e-12
        );
    }

    #[test]
    fn kozlov_fast_factor() {
        let a = Kozlov::fast_factor(Point::new(0.0, 0.0));
        assert_abs_diff_eq!(a, Mat2::new(6.0, 0.0, 0.0, 6.0), epsilon = 1e-14);
        for k in 0..200 {
            let y = Point::new(0.173 * k as f64, 0.311 * k as f64);
            let a = Kozlov::fast_factor(y);
            assert!(a[(0, 0)] >= 6.0 && a[(0, 0)] <= 8.0);
            assert!(a[(1, 1)] >= 6.0 && a[(1, 1)] <= 8.0);
        }
        // not 1-periodic: sin^2(2 sqrt2 pi y) differs between y and y + 1
        let s = |t: f64| 6.0 + (2.0 * PI * t).sin().powi(2) + (2.0 * 2f64.sqrt() * PI * t).sin().powi(2);
        let at = s(0.25);
        let shifted = s(1.25);
        assert_abs_diff_eq!(Kozlov::fast_factor(Point::new(0.25, 0.0))[(0, 0)], at, epsilon = 1e-14);
        assert_abs_diff_eq!(Kozlov::fast_factor(Point::new(1.25, 0.0))[(0, 0)], shifted, epsilon = 1e-12);
        assert!((at - shifted).abs() > 0.1);
    }

    #[test]
    fn checkerboard_degenerate_probability() {
        let spec = CheckerboardSpec {
            epsilon: 0.05,
            k1: 3.0,
            k2: 7.0,
            p1: 1.0,
            seed: 11,
            background: Background::Product,
        };
        let f = Checkerboard::new(spec).unwrap();
        for k in 0..50 {
            let x = Point::new(0.019 * k as f64, 0.93 - 0.017 * k as f64);
            assert_abs_diff_eq!(f.eval(x)[(0, 0)], 3.0 + slow_factor(x), epsilon = 1e-14);
        }
    }

    #[test]
    fn checkerboard_is_deterministic_and_balanced() {
        let spec = CheckerboardSpec {
            epsilon: 0.01,
            seed: 1234,
            ..CheckerboardSpec::default()
        };
        let f = Checkerboard::new(spec).unwrap();
        let g = Checkerboard::new(spec).unwrap();
        let x = Point::new(0.4321, 0.1234);
        assert_eq!(f.eval(x), f.eval(x));
        assert_eq!(f.eval(x), g.eval(x));
        let mut count = 0;
        for i in 0..100 {
            for j in 0..100 {
                if f.is_k1((i, j)) {
                    count += 1;
                }
            }
        }
        let frac = count as f64 / 10000.0;
        assert!((frac - 0.5).abs() < 0.02, "fraction {frac}");
        let other = Checkerboard::new(CheckerboardSpec { seed: 1235, ..spec }).unwrap();
        let differ = (0..100).filter(|&i| f.is_k1((i, 0)) != other.is_k1((i, 0))).count();
        assert!(differ > 20);
    }

    #[test]
    fn checkerboard_rejects_bad_probability() {
        let spec = CheckerboardSpec {
            p1: 1.5,
            ..CheckerboardSpec::default()
        };
        assert!(Checkerboard::new(spec).is_err());
        let spec = CheckerboardSpec {
            p1: -0.1,
            ..CheckerboardSpec::default()
        };
        assert!(Checkerboard::new(spec).is_err());
    }

    #[test]
    fn ellipticity_identity_and_scalar() {
        let r = verify_ellipticity(&ConstantField::identity(), &Rect::unit_square(), 8, 16).unwrap();
        assert_abs_diff_eq!(r.alpha_hat, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.beta_hat, 1.0, epsilon = 1e-14);

        struct Scalar;
        impl MatrixField for Scalar {
            fn eval(&self, x: Point) -> Mat2 {
                Mat2::identity() * (1.0 + x.x + 2.0 * x.y)
            }
        }
        impl CoefficientField for Scalar {
            fn epsilon(&self) -> f64 {
                1.0
            }
            fn bounds(&self) -> (f64, f64) {
                (1.0, 4.0)
            }
            fn descriptor(&self) -> CoefficientSpec {
                CoefficientSpec::Constant { matrix: [1.0, 0.0, 0.0, 1.0] }
            }
        }
        let r = verify_ellipticity(&Scalar, &Rect::unit_square(), 4, 8).unwrap();
        // probes at cell centers 1/8, 3/8, 5/8, 7/8
        assert_abs_diff_eq!(r.alpha_hat, 1.0 + 0.125 + 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(r.beta_hat, 1.0 + 0.875 + 1.75, epsilon = 1e-14);
    }

    #[test]
    fn ellipticity_flags_indefinite_field() {
        struct Bad;
        impl MatrixField for Bad {
            fn eval(&self, x: Point) -> Mat2 {
                Mat2::identity() * (x.x - 0.5)
            }
        }
        impl CoefficientField for Bad {
            fn epsilon(&self) -> f64 {
                1.0
            }
            fn bounds(&self) -> (f64, f64) {
                (0.1, 1.0)
            }
            fn descriptor(&self) -> CoefficientSpec {
                CoefficientSpec::Constant { matrix: [1.0, 0.0, 0.0, 1.0] }
            }
        }
        assert!(matches!(
            verify_ellipticity(&Bad, &Rect::unit_square(), 4, 4),
            Err(Error::Ellipticity { .. })
        ));
    }

    #[test]
    fn locally_periodic_probe_minimum_matches_brute_force() {
        for eps in [DEFAULT_EPSILON, 1.0 / 7.0] {
            let f = LocallyPeriodic::new(eps).unwrap();
            let r = verify_ellipticity(&f, &Rect::unit_square(), 64, 16).unwrap();
            // independent brute force on the scalar formula
            let mut lo = f64::INFINITY;
            let mut hi: f64 = 0.0;
            for j in 0..64 {
                for i in 0..64 {
                    let (x1, x2) = ((i as f64 + 0.5) / 64.0, (j as f64 + 0.5) / 64.0);
                    let num = (2.5 + 1.5 * (2.0 * PI * x1).sin()) * (2.5 + 1.5 * (2.0 * PI * x2).cos());
                    let den = (2.5 + 1.5 * (2.0 * PI * x1 / eps).sin()) * (2.5 + 1.5 * (2.0 * PI * x2 / eps).sin());
                    lo = lo.min(num / den);
                    hi = hi.max(num / den);
                }
            }
            assert_abs_diff_eq!(r.alpha_hat, lo, epsilon = 1e-12);
            assert_abs_diff_eq!(r.beta_hat, hi, epsilon = 1e-9 * hi);
            assert!(r.alpha_hat >= 1.0 / 16.0);
        }
    }

    #[test]
    fn shipped_fields_pass_ellipticity_probe() {
        let specs = [
            CoefficientSpec::LocallyPeriodic { epsilon: DEFAULT_EPSILON },
            CoefficientSpec::LocallyPeriodic { epsilon: 0.03 },
            CoefficientSpec::Kozlov { epsilon: 0.03 },
            CoefficientSpec::Checkerboard(CheckerboardSpec {
                epsilon: 0.02,
                ..CheckerboardSpec::default()
            }),
            CoefficientSpec::Constant { matrix: [2.0, 0.5, 0.5, 1.0] },
        ];
        for spec in specs {
            let f = spec.build().unwrap();
            verify_ellipticity(f.as_ref(), &Rect::unit_square(), 128, 16).unwrap();
            let x = Point::new(0.3, 0.6);
            let a = f.eval(x);
            assert_abs_diff_eq!(a[(0, 1)], a[(1, 0)], epsilon = 1e-15);
            assert_eq!(f.descriptor(), spec);
        }
    }

    #[test]
    fn spec_roundtrips_through_toml() {
        #[derive(Serialize, Deserialize)]
        struct Wrap {
            coefficient: CoefficientSpec,
        }
        let w = Wrap {
            coefficient: CoefficientSpec::Checkerboard(CheckerboardSpec {
                seed: 42,
                ..CheckerboardSpec::default()
            }),
        };
        let text = toml::to_string(&w).unwrap();
        let back: Wrap = toml::from_str(&text).unwrap();
        assert_eq!(back.coefficient, w.coefficient);
        let parsed: Wrap = toml::from_str("[coefficient]\nkind = \"locally_periodic\"\nepsilon = 1e-6\n").unwrap();
        assert_eq!(parsed.coefficient, CoefficientSpec::LocallyPeriodic { epsilon: 1e-6 });
    }
}
