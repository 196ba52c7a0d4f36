//! Micro-scale cell problems and flux-averaged effective matrices.
//!
//! A cell `x_K + delta (-1/2, 1/2)^2` is mapped to the unit cell
//! `Y = (-1/2, 1/2)^2`. With `x = x_K + delta y` and `v_i = delta w_i`, the
//! Dirichlet problem `v_i = x_i - (x_K)_i` on the boundary becomes `w_i = y_i`
//! on `dY`, and `grad_x v_i = grad_y w_i`, so the averaged flux does not depend
//! on `delta` except through the coefficient. The cell is discretized by
//! tensor-product Lagrange elements of degree 1 or 2 on a uniform grid.

use std::time::Instant;

use nalgebra::Vector2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeffs::{CoefficientField, CoefficientSpec};
use crate::linsolve::{CholeskySolver, SymbolicCache, TripletBuilder};
use crate::mesh::{OfflineMesh, Rect};
use crate::quadrature::GaussLegendre;
use crate::{mat_from_row_major, mat_to_row_major, Error, Mat2, MatrixField, Point, Result};

pub const TABLE_VERSION: u32 = 1;

/// Linear solves whose relative residual exceeds this are reported as failures.
pub const CELL_RESIDUAL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// `v_i = x_i` on the cell boundary.
    Dirichlet,
    /// `v_i - x_i` periodic on the cell.
    Periodic,
}

/// A single cell problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub center: [f64; 2],
    pub delta: f64,
    pub bc: BoundaryCondition,
    pub resolution: usize,
    pub degree: usize,
}

impl CellSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("cell size must be positive, got {}", self.delta)));
        }
        if self.resolution < 4 {
            return Err(Error::InvalidArgument(format!(
                "cell resolution must be at least 4, got {}",
                self.resolution
            )));
        }
        if !(1..=2).contains(&self.degree) {
            return Err(Error::InvalidArgument(format!("cell degree must be 1 or 2, got {}", self.degree)));
        }
        Ok(())
    }

    pub fn center(&self) -> Point {
        Point::new(self.center[0], self.center[1])
    }
}

/// Cell settings shared by every sampling point of a sweep. The cell size is
/// `delta_over_epsilon * epsilon` of the coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CellTemplate {
    pub delta_over_epsilon: f64,
    pub bc: BoundaryCondition,
    pub resolution: usize,
    pub degree: usize,
}

impl Default for CellTemplate {
    fn default() -> Self {
        Self {
            delta_over_epsilon: 1.0,
            bc: BoundaryCondition::Periodic,
            resolution: 32,
            degree: 2,
        }
    }
}

impl CellTemplate {
    pub fn at(&self, center: Point, epsilon: f64) -> CellSpec {
        CellSpec {
            center: [center.x, center.y],
            delta: self.delta_over_epsilon * epsilon,
            bc: self.bc,
            resolution: self.resolution,
            degree: self.degree,
        }
    }
}

/// Flux-averaged effective matrix at one sampling point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveSample {
    pub center: [f64; 2],
    /// Row-major.
    pub matrix: [f64; 4],
    /// `None` when the sample comes from a closed-form evaluator.
    pub spec: Option<CellSpec>,
    /// Largest relative residual of the micro linear solves.
    pub residual: f64,
}

impl EffectiveSample {
    pub fn matrix(&self) -> Mat2 {
        mat_from_row_major(self.matrix)
    }

    pub fn center(&self) -> Point {
        Point::new(self.center[0], self.center[1])
    }
}

/// One effective sample per offline element, in element order. This is the
/// offline-to-online handoff artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveTable {
    pub version: u32,
    pub domain: Rect,
    pub q: usize,
    pub analytic: bool,
    pub coefficient: Option<CoefficientSpec>,
    pub template: Option<CellTemplate>,
    pub seed: Option<u64>,
    pub cell_problems: usize,
    pub wall_time_s: f64,
    pub samples: Vec<EffectiveSample>,
}

impl EffectiveTable {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn matrix(&self, element: usize) -> Mat2 {
        self.samples[element].matrix()
    }

    /// Check that the table was produced on `mesh`.
    pub fn check_mesh(&self, mesh: &OfflineMesh) -> Result<()> {
        if self.q != mesh.q || self.samples.len() != mesh.len() || self.domain != mesh.domain {
            return Err(Error::Incompatible(format!(
                "table has q = {} with {} samples, mesh has q = {} with {} elements",
                self.q,
                self.samples.len(),
                mesh.q,
                mesh.len()
            )));
        }
        for (s, e) in self.samples.iter().zip(&mesh.elements) {
            let d = ((s.center[0] - e.barycenter[0]).powi(2) + (s.center[1] - e.barycenter[1]).powi(2)).sqrt();
            if d > 1e-12 * (1.0 + mesh.domain.diameter()) {
                return Err(Error::Incompatible(format!("sample {} is not at its element barycenter", e.id)));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let table: Self = serde_json::from_str(text)?;
        if table.version != TABLE_VERSION {
            return Err(Error::Incompatible(format!(
                "effective table version {} (expected {TABLE_VERSION})",
                table.version
            )));
        }
        Ok(table)
    }
}

/// Lagrange basis of degree `k` on equispaced nodes of `[0, 1]`.
fn lagrange_1d(k: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
    let nodes: Vec<f64> = (0..=k).map(|j| j as f64 / k as f64).collect();
    let mut val = vec![0.0; k + 1];
    let mut der = vec![0.0; k + 1];
    for a in 0..=k {
        let mut p = 1.0;
        let mut denom = 1.0;
        for b in 0..=k {
            if b != a {
                p *= t - nodes[b];
                denom *= nodes[a] - nodes[b];
            }
        }
        val[a] = p / denom;
        let mut d = 0.0;
        for c in 0..=k {
            if c == a {
                continue;
            }
            let mut term = 1.0;
            for b in 0..=k {
                if b != a && b != c {
                    term *= t - nodes[b];
                }
            }
            d += term;
        }
        der[a] = d / denom;
    }
    (val, der)
}

/// Reference-element data for `Q_k` on `[0, 1]^2`.
struct ReferenceElement {
    k: usize,
    /// Quadrature points (xi1, xi2) and weights.
    points: Vec<[f64; 2]>,
    weights: Vec<f64>,
    /// `grads[q][a]` = reference gradient of local basis `a` at point `q`.
    grads: Vec<Vec<[f64; 2]>>,
}

impl ReferenceElement {
    fn new(k: usize) -> Self {
        let gl = GaussLegendre::new(k + 2);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut grads = Vec::new();
        for (j, &t2) in gl.points.iter().enumerate() {
            for (i, &t1) in gl.points.iter().enumerate() {
                points.push([t1, t2]);
                weights.push(gl.weights[i] * gl.weights[j]);
                grads.push(Self::basis_gradients(k, [t1, t2]));
            }
        }
        Self {
            k,
            points,
            weights,
            grads,
        }
    }

    fn basis_gradients(k: usize, xi: [f64; 2]) -> Vec<[f64; 2]> {
        let (v1, d1) = lagrange_1d(k, xi[0]);
        let (v2, d2) = lagrange_1d(k, xi[1]);
        let mut g = Vec::with_capacity((k + 1) * (k + 1));
        for a2 in 0..=k {
            for a1 in 0..=k {
                g.push([d1[a1] * v2[a2], v1[a1] * d2[a2]]);
            }
        }
        g
    }

    fn local_count(&self) -> usize {
        (self.k + 1) * (self.k + 1)
    }
}

/// Discrete corrector solutions of one cell problem.
#[derive(Debug, Clone)]
pub struct CellSolution {
    pub spec: CellSpec,
    /// Effective matrix `[<a grad v_1>, <a grad v_2>]`.
    pub matrix: Mat2,
    pub residual: f64,
    /// Nodes per side of the (unwrapped) node grid.
    nodes: usize,
    /// Nodal values of `v_i` on the unit cell in the local frame (Dirichlet),
    /// or of the periodic part `v_i - y_i` (periodic).
    values: [Vec<f64>; 2],
}

impl CellSolution {
    /// Node index along one axis, wrapping for periodic cells.
    fn node(&self, i: usize) -> usize {
        match self.spec.bc {
            BoundaryCondition::Dirichlet => i,
            BoundaryCondition::Periodic => i % (self.nodes - 1),
        }
    }

    fn stride(&self) -> usize {
        match self.spec.bc {
            BoundaryCondition::Dirichlet => self.nodes,
            BoundaryCondition::Periodic => self.nodes - 1,
        }
    }

    fn element_at(&self, y: [f64; 2]) -> ([usize; 2], [f64; 2]) {
        let res = self.spec.resolution;
        let mut e = [0usize; 2];
        let mut xi = [0.0; 2];
        for d in 0..2 {
            let s = ((y[d] + 0.5) * res as f64).clamp(0.0, res as f64);
            let c = (s.floor() as usize).min(res - 1);
            e[d] = c;
            xi[d] = s - c as f64;
        }
        (e, xi)
    }

    /// Gradient of `v_i` at local coordinate `y` in the unit cell, equal to
    /// the physical gradient of the corrector.
    pub fn gradient(&self, i: usize, y: [f64; 2]) -> Vector2<f64> {
        let k = self.spec.degree;
        let h = 1.0 / self.spec.resolution as f64;
        let (e, xi) = self.element_at(y);
        let g = ReferenceElement::basis_gradients(k, xi);
        let stride = self.stride();
        let mut grad = Vector2::zeros();
        for a2 in 0..=k {
            for a1 in 0..=k {
                let gx = self.node(k * e[0] + a1);
                let gy = self.node(k * e[1] + a2);
                let c = self.values[i][gy * stride + gx];
                let ga = g[a2 * (k + 1) + a1];
                grad += Vector2::new(ga[0], ga[1]) * (c / h);
            }
        }
        if self.spec.bc == BoundaryCondition::Periodic {
            grad[i] += 1.0;
        }
        grad
    }

    /// Value of `v_i` at local coordinate `y` (up to the pinned constant for
    /// periodic cells).
    pub fn value(&self, i: usize, y: [f64; 2]) -> f64 {
        let k = self.spec.degree;
        let (e, xi) = self.element_at(y);
        let (v1, _) = lagrange_1d(k, xi[0]);
        let (v2, _) = lagrange_1d(k, xi[1]);
        let stride = self.stride();
        let mut s = 0.0;
        for a2 in 0..=k {
            for a1 in 0..=k {
                let gx = self.node(k * e[0] + a1);
                let gy = self.node(k * e[1] + a2);
                s += self.values[i][gy * stride + gx] * v1[a1] * v2[a2];
            }
        }
        if self.spec.bc == BoundaryCondition::Periodic {
            s += y[i];
        }
        s
    }

    /// Nodal values of `v_i` at every node of the unwrapped grid, in the
    /// local frame, row-major with `nodes_per_side()` entries per row.
    pub fn nodal_values(&self, i: usize) -> Vec<f64> {
        let n = self.nodes;
        let stride = self.stride();
        let h = 1.0 / (n - 1) as f64;
        let mut out = Vec::with_capacity(n * n);
        for gy in 0..n {
            for gx in 0..n {
                let mut v = self.values[i][self.node(gy) * stride + self.node(gx)];
                if self.spec.bc == BoundaryCondition::Periodic {
                    v += -0.5 + [gx, gy][i] as f64 * h;
                }
                out.push(v);
            }
        }
        out
    }

    pub fn nodes_per_side(&self) -> usize {
        self.nodes
    }
}

/// Reusable per-worker state: reference data and the symbolic factorization
/// of the last assembled pattern.
#[derive(Default)]
pub struct CellWorkspace {
    reference: Option<ReferenceElement>,
    symbolic: Option<(usize, usize, BoundaryCondition, SymbolicCache)>,
}

impl CellWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    fn reference(&mut self, k: usize) -> &ReferenceElement {
        if self.reference.as_ref().map(|r| r.k) != Some(k) {
            self.reference = Some(ReferenceElement::new(k));
        }
        self.reference.as_ref().expect("set above")
    }
}

/// Align the cell with the coefficient grid, if the coefficient has one.
fn snapped_center(spec: &CellSpec, coeff: &dyn CoefficientField) -> Result<Point> {
    let c = spec.center();
    let Some(eps) = coeff.grid() else {
        return Ok(c);
    };
    let ratio = spec.delta / eps;
    let cells = ratio.round();
    if cells < 1.0 || (ratio - cells).abs() > 1e-9 * ratio {
        return Err(Error::InvalidArgument(format!(
            "cell size {} must be an integer multiple of the coefficient grid {eps}",
            spec.delta
        )));
    }
    if !spec.resolution.is_multiple_of(cells as usize) {
        return Err(Error::InvalidArgument(format!(
            "cell resolution {} must be a multiple of delta / epsilon = {cells}",
            spec.resolution
        )));
    }
    let half = 0.5 * spec.delta;
    Ok(Point::new(
        eps * ((c.x - half) / eps).round() + half,
        eps * ((c.y - half) / eps).round() + half,
    ))
}

/// Solve both cell problems of `spec`.
pub fn solve_cell(spec: &CellSpec, coeff: &dyn CoefficientField) -> Result<CellSolution> {
    solve_cell_with(spec, coeff, &mut CellWorkspace::new())
}

pub fn solve_cell_with(spec: &CellSpec, coeff: &dyn CoefficientField, ws: &mut CellWorkspace) -> Result<CellSolution> {
    spec.validate()?;
    let center = snapped_center(spec, coeff)?;
    let k = spec.degree;
    let res = spec.resolution;
    let periodic = spec.bc == BoundaryCondition::Periodic;
    let h = 1.0 / res as f64;
    let nodes = k * res + 1;
    let stride = if periodic { nodes - 1 } else { nodes };
    let reference = ws.reference(k);
    let nq = reference.points.len();
    let nl = reference.local_count();

    // coefficient at every quadrature point, element-major
    let mut coef = Vec::with_capacity(res * res * nq);
    for ey in 0..res {
        for ex in 0..res {
            for p in &reference.points {
                let y = Vector2::new(-0.5 + (ex as f64 + p[0]) * h, -0.5 + (ey as f64 + p[1]) * h);
                let a = coeff.cell_eval(center, y * spec.delta);
                if !a.iter().all(|v| v.is_finite()) {
                    return Err(Error::Ellipticity {
                        x: center.x + y.x * spec.delta,
                        y: center.y + y.y * spec.delta,
                        detail: "non-finite coefficient".into(),
                    });
                }
                coef.push(a);
            }
        }
    }

    // dof numbering: Dirichlet -> interior nodes; periodic -> wrapped nodes minus node 0
    let total = stride * stride;
    let mut dof = vec![usize::MAX; total];
    let mut ndof = 0;
    for gy in 0..stride {
        for gx in 0..stride {
            let free = if periodic {
                gx + gy > 0
            } else {
                gx > 0 && gy > 0 && gx + 1 < nodes && gy + 1 < nodes
            };
            if free {
                dof[gy * stride + gx] = ndof;
                ndof += 1;
            }
        }
    }
    let wrap = |i: usize| if periodic { i % stride } else { i };
    let boundary_value = |node: usize, i: usize| -> f64 {
        let (gx, gy) = (node % stride, node / stride);
        -0.5 + [gx, gy][i] as f64 / (nodes - 1) as f64
    };

    let mut builder = TripletBuilder::with_capacity(ndof, res * res * nl * nl);
    let mut rhs = [vec![0.0; ndof], vec![0.0; ndof]];
    let mut local_nodes = vec![0usize; nl];
    let mut ke = vec![0.0; nl * nl];
    for ey in 0..res {
        for ex in 0..res {
            let e = ey * res + ex;
            for a2 in 0..=k {
                for a1 in 0..=k {
                    local_nodes[a2 * (k + 1) + a1] = wrap(k * ey + a2) * stride + wrap(k * ex + a1);
                }
            }
            ke.iter_mut().for_each(|v| *v = 0.0);
            let mut fe = [vec![0.0; nl], vec![0.0; nl]];
            for q in 0..nq {
                let a = &coef[e * nq + q];
                let w = reference.weights[q];
                let g = &reference.grads[q];
                for (ia, ga) in g.iter().enumerate() {
                    let ag = [a[(0, 0)] * ga[0] + a[(0, 1)] * ga[1], a[(1, 0)] * ga[0] + a[(1, 1)] * ga[1]];
                    for (ib, gb) in g.iter().enumerate() {
                        // K_ba = int (a grad phi_a) . grad phi_b
                        ke[ib * nl + ia] += w * (ag[0] * gb[0] + ag[1] * gb[1]);
                    }
                    if periodic {
                        for (i, f) in fe.iter_mut().enumerate() {
                            // -(a e_i) . grad phi_a, scaled by h for the map
                            f[ia] -= w * h * (a[(0, i)] * ga[0] + a[(1, i)] * ga[1]);
                        }
                    }
                }
            }
            for ib in 0..nl {
                let row = dof[local_nodes[ib]];
                if row == usize::MAX {
                    continue;
                }
                for i in 0..2 {
                    rhs[i][row] += fe[i][ib];
                }
                for ia in 0..nl {
                    let col = dof[local_nodes[ia]];
                    let kv = ke[ib * nl + ia];
                    if col != usize::MAX {
                        builder.add(row, col, kv);
                    } else if !periodic {
                        for (i, r) in rhs.iter_mut().enumerate() {
                            r[row] -= kv * boundary_value(local_nodes[ia], i);
                        }
                    }
                }
            }
        }
    }

    let matrix = builder.build()?;
    let cache_ok = matches!(&ws.symbolic, Some((r, d, b, c)) if *r == res && *d == k && *b == spec.bc && c.matches(&matrix));
    if !cache_ok {
        ws.symbolic = Some((res, k, spec.bc, SymbolicCache::new(&matrix)?));
    }
    let cache = ws.symbolic.as_ref().map(|s| &s.3);
    let context = format!("cell problem at ({}, {})", center.x, center.y);
    let solver = CholeskySolver::factor(matrix, cache, &context)?;
    let (sol, residual) = solver.solve_many(&rhs);
    if !(residual <= CELL_RESIDUAL_TOLERANCE) {
        return Err(Error::SolverResidual {
            residual,
            tolerance: CELL_RESIDUAL_TOLERANCE,
        });
    }

    let mut values = [vec![0.0; total], vec![0.0; total]];
    for node in 0..total {
        for i in 0..2 {
            values[i][node] = match dof[node] {
                usize::MAX if periodic => 0.0,
                usize::MAX => boundary_value(node, i),
                d => sol[i][d],
            };
        }
    }

    // flux average and (periodic) mean of the periodic part
    let reference = ws.reference(k);
    let mut flux = Mat2::zeros();
    let mut mean = [0.0; 2];
    for ey in 0..res {
        for ex in 0..res {
            let e = ey * res + ex;
            for a2 in 0..=k {
                for a1 in 0..=k {
                    local_nodes[a2 * (k + 1) + a1] = wrap(k * ey + a2) * stride + wrap(k * ex + a1);
                }
            }
            for q in 0..nq {
                let a = &coef[e * nq + q];
                let w = reference.weights[q] * h * h;
                let g = &reference.grads[q];
                for i in 0..2 {
                    let mut grad = Vector2::zeros();
                    for (ia, ga) in g.iter().enumerate() {
                        let c = values[i][local_nodes[ia]];
                        grad += Vector2::new(ga[0], ga[1]) * (c / h);
                    }
                    if periodic {
                        grad[i] += 1.0;
                    }
                    let f = a * grad;
                    flux[(0, i)] += w * f[0];
                    flux[(1, i)] += w * f[1];
                }
                if periodic {
                    let (v1, _) = lagrange_1d(k, reference.points[q][0]);
                    let (v2, _) = lagrange_1d(k, reference.points[q][1]);
                    for i in 0..2 {
                        let mut s = 0.0;
                        for a2 in 0..=k {
                            for a1 in 0..=k {
                                s += values[i][local_nodes[a2 * (k + 1) + a1]] * v1[a1] * v2[a2];
                            }
                        }
                        mean[i] += w * s;
                    }
                }
            }
        }
    }
    if periodic {
        for i in 0..2 {
            values[i].iter_mut().for_each(|v| *v -= mean[i]);
        }
    }

    Ok(CellSolution {
        spec: CellSpec {
            center: [center.x, center.y],
            ..*spec
        },
        matrix: flux,
        residual,
        nodes,
        values,
    })
}

/// Effective matrix sample for one cell.
pub fn effective_sample(spec: &CellSpec, coeff: &dyn CoefficientField) -> Result<EffectiveSample> {
    effective_sample_with(spec, coeff, &mut CellWorkspace::new())
}

/// [`effective_sample`] reusing a workspace.
pub fn effective_sample_with(spec: &CellSpec, coeff: &dyn CoefficientField, ws: &mut CellWorkspace) -> Result<EffectiveSample> {
    let sol = solve_cell_with(spec, coeff, ws)?;
    Ok(EffectiveSample {
        center: spec.center,
        matrix: mat_to_row_major(&sol.matrix),
        spec: Some(sol.spec),
        residual: sol.residual,
    })
}

/// Solve the cell problems at `centers` in parallel, preserving order.
pub fn sample_points(
    centers: &[Point],
    coeff: &dyn CoefficientField,
    template: &CellTemplate,
) -> Result<Vec<EffectiveSample>> {
    let eps = coeff.epsilon();
    let results: Vec<Result<EffectiveSample>> = centers
        .par_iter()
        .map_init(CellWorkspace::new, |ws, &c| effective_sample_with(&template.at(c, eps), coeff, ws))
        .collect();
    let total = results.len();
    let mut samples = Vec::with_capacity(total);
    let mut failed = 0;
    let mut first = None;
    for (idx, r) in results.into_iter().enumerate() {
        match r {
            Ok(s) => samples.push(s),
            Err(e) => {
                failed += 1;
                first.get_or_insert_with(|| format!("cell {idx}: {e}"));
            }
        }
    }
    if failed > 0 {
        return Err(Error::CellFailures {
            failed,
            total,
            first: first.unwrap_or_default(),
        });
    }
    Ok(samples)
}

/// Solve one cell problem per offline element barycenter.
pub fn offline_sweep(mesh: &OfflineMesh, coeff: &dyn CoefficientField, template: &CellTemplate) -> Result<EffectiveTable> {
    let start = Instant::now();
    let samples = sample_points(&mesh.barycenters(), coeff, template)?;
    Ok(EffectiveTable {
        version: TABLE_VERSION,
        domain: mesh.domain,
        q: mesh.q,
        analytic: false,
        coefficient: Some(coeff.descriptor()),
        template: Some(*template),
        seed: match coeff.descriptor() {
            CoefficientSpec::Checkerboard(s) => Some(s.seed),
            _ => None,
        },
        cell_problems: samples.len(),
        wall_time_s: start.elapsed().as_secs_f64(),
        samples,
    })
}

/// Table filled by evaluating a known effective matrix at the barycenters.
pub fn analytic_table(mesh: &OfflineMesh, effective: &dyn MatrixField) -> EffectiveTable {
    let samples = mesh
        .elements
        .iter()
        .map(|e| EffectiveSample {
            center: e.barycenter,
            matrix: mat_to_row_major(&effective.eval(e.barycenter())),
            spec: None,
            residual: 0.0,
        })
        .collect();
    EffectiveTable {
        version: TABLE_VERSION,
        domain: mesh.domain,
        q: mesh.q,
        analytic: true,
        coefficient: None,
        template: None,
        seed: None,
        cell_problems: 0,
        wall_time_s: 0.0,
        samples,
    }
}
