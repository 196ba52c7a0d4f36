//! Local least-squares reconstruction of the effective matrix field and the
//! norming-set diagnostics of the reconstruction operator.
//!
//! On each offline element `K` the entries of the sampled effective matrix are
//! fitted by polynomials of degree `m` over the patch `S(K)` in the discrete
//! least-squares sense. The fit is then used on `K` only, so the global field
//! is piecewise polynomial and generally discontinuous across element edges.

pub mod basis;
pub mod norming;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use basis::Basis;
pub use norming::{
    best_approximation_error, lambda_estimate, markov_check, markov_ratio, norming_report, perturb_stability,
    probe_grid, uniform_lambda_bound, uniform_lambda_bound_width, NormingReport, PerturbationReport,
};

use crate::mesh::{build_patch, locate_uniform, patch_threshold, ElementPatch, OfflineMesh, Rect};
use crate::microcell::EffectiveTable;
use crate::{Error, Mat2, MatrixField, Point, Result};

pub const FIELD_VERSION: u32 = 1;

/// Relative singular value below which the design matrix is rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Least-squares operator `values at sample points -> coefficients` for one
/// design matrix, factored once by SVD.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub basis: Basis,
    /// `dim x n` pseudo-inverse of the design matrix.
    pinv: DMatrix<f64>,
    design: DMatrix<f64>,
    pub condition: f64,
}

impl LeastSquares {
    /// `element` only labels the error.
    pub fn new(points: &[Point], basis: Basis, element: usize) -> Result<Self> {
        let dim = basis.dim();
        let n = points.len();
        if n < dim {
            return Err(Error::Unisolvence { element, rank: n, dim });
        }
        let design = DMatrix::from_fn(n, dim, |i, j| basis.eval(points[i])[j]);
        let svd = design.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let rank = svd
            .singular_values
            .iter()
            .filter(|&&s| s > RANK_TOLERANCE * smax)
            .count();
        if rank < dim || !(smax > 0.0) {
            return Err(Error::Unisolvence { element, rank, dim });
        }
        let pinv = svd
            .pseudo_inverse(RANK_TOLERANCE * smax)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(Self {
            basis,
            pinv,
            design,
            condition: smax / smin,
        })
    }

    pub fn len(&self) -> usize {
        self.design.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.design.nrows() == 0
    }

    /// Coefficients of the least-squares fit of `values`.
    pub fn fit(&self, values: &[f64]) -> Vec<f64> {
        let b = DVector::from_column_slice(values);
        (&self.pinv * b).iter().copied().collect()
    }

    /// Euclidean norm of the fit residual at the sample points.
    pub fn residual(&self, values: &[f64], coeffs: &[f64]) -> f64 {
        let c = DVector::from_column_slice(coeffs);
        let r = &self.design * c - DVector::from_column_slice(values);
        r.norm()
    }
}

/// Polynomial matrix fitted on one element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementPolynomial {
    pub element: usize,
    pub basis: Basis,
    /// Coefficient vectors of the entries `(0,0), (0,1), (1,0), (1,1)`.
    pub coefficients: [Vec<f64>; 4],
    /// Largest Euclidean fit residual over the entries.
    pub residual: f64,
    /// Condition number of the design matrix.
    pub condition: f64,
    pub samples: usize,
    pub depth: usize,
}

impl ElementPolynomial {
    pub fn eval(&self, x: Point) -> Mat2 {
        let phi = self.basis.eval(x);
        let entry = |k: usize| phi.iter().zip(&self.coefficients[k]).map(|(p, c)| p * c).sum::<f64>();
        Mat2::new(entry(0), entry(1), entry(2), entry(3))
    }
}

/// Fit the entries of `samples` (point, matrix) over `patch` with `P_m`.
pub fn fit_patch(samples: &[(Point, Mat2)], patch: &ElementPatch, m: usize) -> Result<ElementPolynomial> {
    let points: Vec<Point> = samples.iter().map(|s| s.0).collect();
    let basis = Basis::new(m, patch.center(), patch.geometry.outer_radius);
    let ls = LeastSquares::new(&points, basis, patch.element)?;
    let mut coefficients: [Vec<f64>; 4] = Default::default();
    let mut residual: f64 = 0.0;
    for (k, (r, c)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
        let values: Vec<f64> = samples.iter().map(|s| s.1[(r, c)]).collect();
        coefficients[k] = ls.fit(&values);
        residual = residual.max(ls.residual(&values, &coefficients[k]));
    }
    Ok(ElementPolynomial {
        element: patch.element,
        basis,
        coefficients,
        residual,
        condition: ls.condition,
        samples: samples.len(),
        depth: patch.depth,
    })
}

/// Reconstructed piecewise polynomial effective matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyMatrixField {
    pub version: u32,
    pub domain: Rect,
    pub q: usize,
    pub order: usize,
    pub n_lowest: usize,
    pub elements: Vec<ElementPolynomial>,
}

impl PolyMatrixField {
    /// Value at `x` from the polynomial of the element containing `x`.
    pub fn evaluate(&self, x: Point) -> Result<Mat2> {
        let k = locate_uniform(&self.domain, self.q, x)?;
        Ok(self.elements[k].eval(x))
    }

    pub fn max_residual(&self) -> f64 {
        self.elements.iter().fold(0.0, |m, e| m.max(e.residual))
    }

    pub fn max_condition(&self) -> f64 {
        self.elements.iter().fold(0.0, |m, e| m.max(e.condition))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let field: Self = serde_json::from_str(text)?;
        if field.version != FIELD_VERSION {
            return Err(Error::Incompatible(format!(
                "field version {} (expected {FIELD_VERSION})",
                field.version
            )));
        }
        if field.elements.len() != field.q * field.q {
            return Err(Error::Incompatible(format!(
                "{} element polynomials for q = {}",
                field.elements.len(),
                field.q
            )));
        }
        Ok(field)
    }
}

impl MatrixField for PolyMatrixField {
    /// Points marginally outside the domain are clamped onto it.
    fn eval(&self, x: Point) -> Mat2 {
        let c = Point::new(
            x.x.clamp(self.domain.x0, self.domain.x1),
            x.y.clamp(self.domain.y0, self.domain.y1),
        );
        self.evaluate(c).expect("clamped point lies in the domain")
    }
}

/// Smallest admissible `n_lowest` for order `m`.
pub fn minimum_samples(m: usize) -> usize {
    patch_threshold(m, 2).unwrap_or_else(|_| basis::dim(m))
}

/// Smallest Moore patch of `element` with at least `n_lowest` members on
/// which `P_m` is unisolvent. Near the boundary the threshold patch can have
/// its barycenters on too few lines (e.g. three rows for a cubic), in which
/// case the recursion continues.
pub fn unisolvent_patch(mesh: &OfflineMesh, element: usize, m: usize, n_lowest: usize) -> Result<ElementPatch> {
    let mut needed = n_lowest;
    loop {
        let patch = build_patch(mesh, element, needed)?;
        let basis = Basis::new(m, patch.center(), patch.geometry.outer_radius);
        match LeastSquares::new(&patch.sample_points(), basis, element) {
            Ok(_) => return Ok(patch),
            Err(Error::Unisolvence { .. }) if patch.len() < mesh.len() => needed = patch.len() + 1,
            Err(e) => return Err(e),
        }
    }
}

/// Fit every element of `mesh` from `table` over its Moore patch.
pub fn reconstruct_field(mesh: &OfflineMesh, table: &EffectiveTable, m: usize, n_lowest: usize) -> Result<PolyMatrixField> {
    table.check_mesh(mesh)?;
    let needed = minimum_samples(m);
    if n_lowest < needed {
        return Err(Error::InvalidArgument(format!(
            "n_lowest = {n_lowest} is below the threshold {needed} for m = {m}"
        )));
    }
    let elements = (0..mesh.len())
        .into_par_iter()
        .map(|k| {
            let patch = unisolvent_patch(mesh, k, m, n_lowest)?;
            let samples: Vec<(Point, Mat2)> = patch
                .samples
                .iter()
                .map(|&(id, p)| (Point::new(p[0], p[1]), table.matrix(id)))
                .collect();
            fit_patch(&samples, &patch, m)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PolyMatrixField {
        version: FIELD_VERSION,
        domain: mesh.domain,
        q: mesh.q,
        order: m,
        n_lowest,
        elements,
    })
}
