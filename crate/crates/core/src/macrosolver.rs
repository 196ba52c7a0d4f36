//! Online macroscopic solver: P1/P2 Lagrange elements on the uniform online
//! mesh, error norms, and the coefficient discrepancy `e(MOD)`.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linsolve::{CholeskySolver, TripletBuilder};
use crate::mesh::OnlineMesh;
use crate::microcell::EffectiveTable;
use crate::quadrature::TriangleRule;
use crate::reconstruct::PolyMatrixField;
use crate::{Error, Mat2, MatrixField, Point, Result};

/// Relative residual above which a macro solve is rejected.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

/// Scalar function of position.
pub type ScalarFn<'a> = &'a (dyn Fn(Point) -> f64 + Sync);

/// Lagrange space of degree `degree` on an online mesh.
///
/// For `degree = 2` the dofs form the `(2n+1) x (2n+1)` grid of vertices and
/// edge midpoints; grid point `(a, b)` has index `b * (2n+1) + a`.
#[derive(Debug, Clone)]
pub struct FemSpace {
    pub mesh: OnlineMesh,
    pub degree: usize,
    pub coords: Vec<[f64; 2]>,
    pub boundary: Vec<bool>,
    /// Local dofs per triangle: vertices, then midpoints of edges 01, 12, 20.
    pub cell_dofs: Vec<Vec<usize>>,
}

impl FemSpace {
    pub fn new(mesh: OnlineMesh, degree: usize) -> Result<Arc<Self>> {
        if !(1..=2).contains(&degree) {
            return Err(Error::InvalidArgument(format!("macro degree must be 1 or 2, got {degree}")));
        }
        let n = mesh.n;
        let side = degree * n + 1;
        let d = &mesh.domain;
        let mut coords = Vec::with_capacity(side * side);
        let mut boundary = Vec::with_capacity(side * side);
        for b in 0..side {
            for a in 0..side {
                coords.push([
                    d.x0 + d.width() * a as f64 / (side - 1) as f64,
                    d.y0 + d.height() * b as f64 / (side - 1) as f64,
                ]);
                boundary.push(a == 0 || b == 0 || a + 1 == side || b + 1 == side);
            }
        }
        // online vertex (i, j) has index j * (n + 1) + i
        let grid = |v: usize| -> (usize, usize) { (degree * (v % (n + 1)), degree * (v / (n + 1))) };
        let cell_dofs = mesh
            .triangles
            .iter()
            .map(|t| {
                let g: Vec<(usize, usize)> = t.iter().map(|&v| grid(v)).collect();
                let mut dofs: Vec<usize> = g.iter().map(|&(a, b)| b * side + a).collect();
                if degree == 2 {
                    for (p, q) in [(0, 1), (1, 2), (2, 0)] {
                        let a = (g[p].0 + g[q].0) / 2;
                        let b = (g[p].1 + g[q].1) / 2;
                        dofs.push(b * side + a);
                    }
                }
                dofs
            })
            .collect();
        Ok(Arc::new(Self {
            mesh,
            degree,
            coords,
            boundary,
            cell_dofs,
        }))
    }

    pub fn ndof(&self) -> usize {
        self.coords.len()
    }

    pub fn local_count(&self) -> usize {
        if self.degree == 1 {
            3
        } else {
            6
        }
    }

    /// Values and physical gradients of the local basis of triangle `t` at
    /// barycentric coordinates `lambda`.
    fn local_basis(&self, t: usize, lambda: [f64; 3]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let gl = self.lambda_gradients(t);
        let [l0, l1, l2] = lambda;
        let l = [l0, l1, l2];
        if self.degree == 1 {
            return (l.to_vec(), gl.to_vec());
        }
        let mut val = Vec::with_capacity(6);
        let mut grad = Vec::with_capacity(6);
        for a in 0..3 {
            val.push(l[a] * (2.0 * l[a] - 1.0));
            let s = 4.0 * l[a] - 1.0;
            grad.push([s * gl[a][0], s * gl[a][1]]);
        }
        for (p, q) in [(0, 1), (1, 2), (2, 0)] {
            val.push(4.0 * l[p] * l[q]);
            grad.push([
                4.0 * (l[p] * gl[q][0] + l[q] * gl[p][0]),
                4.0 * (l[p] * gl[q][1] + l[q] * gl[p][1]),
            ]);
        }
        (val, grad)
    }

    fn lambda_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let [p0, p1, p2] = self.mesh.triangle_points(t);
        let det = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
        let g1 = [(p2.y - p0.y) / det, -(p2.x - p0.x) / det];
        let g2 = [-(p1.y - p0.y) / det, (p1.x - p0.x) / det];
        [[-g1[0] - g2[0], -g1[1] - g2[1]], g1, g2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssemblyOptions {
    /// Total degree integrated exactly on each triangle.
    pub quadrature_degree: usize,
}

impl AssemblyOptions {
    /// Exactness `2 l + m` for a degree-`m` coefficient.
    pub fn for_orders(l: usize, m: usize) -> Self {
        Self {
            quadrature_degree: 2 * l + m,
        }
    }
}

/// Finite element solution.
#[derive(Debug, Clone)]
pub struct FemSolution {
    pub space: Arc<FemSpace>,
    pub values: Vec<f64>,
    /// Relative residual of the interior linear system.
    pub residual: f64,
}

impl FemSolution {
    pub fn value_in(&self, t: usize, lambda: [f64; 3]) -> f64 {
        let (val, _) = self.space.local_basis(t, lambda);
        self.space.cell_dofs[t].iter().zip(&val).map(|(&d, v)| self.values[d] * v).sum()
    }

    pub fn gradient_in(&self, t: usize, lambda: [f64; 3]) -> [f64; 2] {
        let (_, grad) = self.space.local_basis(t, lambda);
        self.space.cell_dofs[t]
            .iter()
            .zip(&grad)
            .fold([0.0, 0.0], |acc, (&d, g)| [acc[0] + self.values[d] * g[0], acc[1] + self.values[d] * g[1]])
    }

    pub fn value(&self, x: Point) -> Result<f64> {
        let (t, l) = self.space.mesh.locate(x)?;
        Ok(self.value_in(t, l))
    }

    pub fn gradient(&self, x: Point) -> Result<[f64; 2]> {
        let (t, l) = self.space.mesh.locate(x)?;
        Ok(self.gradient_in(t, l))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }

    /// `x,y,u` rows, one per dof.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "x,y,u")?;
        for (c, v) in self.space.coords.iter().zip(&self.values) {
            writeln!(out, "{},{},{}", c[0], c[1], v)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Export<'a> {
            n: usize,
            degree: usize,
            residual: f64,
            coords: &'a [[f64; 2]],
            values: &'a [f64],
        }
        Ok(serde_json::to_string(&Export {
            n: self.space.mesh.n,
            degree: self.space.degree,
            residual: self.residual,
            coords: &self.space.coords,
            values: &self.values,
        })?)
    }
}

struct LocalSystem {
    stiffness: Vec<f64>,
    load: Vec<f64>,
}

fn local_system(
    space: &FemSpace,
    t: usize,
    rule: &TriangleRule,
    coefficient: &dyn MatrixField,
    f: ScalarFn,
) -> LocalSystem {
    let nl = space.local_count();
    let [p0, p1, p2] = space.mesh.triangle_points(t);
    let area2 = space.mesh.signed_area(t).abs() * 2.0;
    let mut stiffness = vec![0.0; nl * nl];
    let mut load = vec![0.0; nl];
    for (xi, &w) in rule.points.iter().zip(&rule.weights) {
        let lambda = [1.0 - xi[0] - xi[1], xi[0], xi[1]];
        let x = Point::from(p0.coords * lambda[0] + p1.coords * lambda[1] + p2.coords * lambda[2]);
        let wq = w * area2;
        let a = coefficient.eval(x);
        let fx = f(x);
        let (val, grad) = space.local_basis(t, lambda);
        for i in 0..nl {
            let ag = [
                a[(0, 0)] * grad[i][0] + a[(0, 1)] * grad[i][1],
                a[(1, 0)] * grad[i][0] + a[(1, 1)] * grad[i][1],
            ];
            for j in 0..nl {
                // row j, column i: int (a grad phi_i) . grad phi_j
                stiffness[j * nl + i] += wq * (ag[0] * grad[j][0] + ag[1] * grad[j][1]);
            }
            load[i] += wq * fx * val[i];
        }
    }
    LocalSystem { stiffness, load }
}

/// Galerkin solution of `-div(A grad u) = f` with `u = g` on the boundary.
pub fn assemble_solve(
    space: &Arc<FemSpace>,
    coefficient: &dyn MatrixField,
    f: ScalarFn,
    g: ScalarFn,
    options: &AssemblyOptions,
) -> Result<FemSolution> {
    let rule = TriangleRule::with_exactness(options.quadrature_degree.max(1));
    let nt = space.mesh.triangles.len();
    let locals: Vec<LocalSystem> = (0..nt)
        .into_par_iter()
        .map(|t| local_system(space, t, &rule, coefficient, f))
        .collect();

    let ndof = space.ndof();
    let mut index = vec![usize::MAX; ndof];
    let mut nfree = 0;
    for d in 0..ndof {
        if !space.boundary[d] {
            index[d] = nfree;
            nfree += 1;
        }
    }
    let mut values = vec![0.0; ndof];
    for d in 0..ndof {
        if space.boundary[d] {
            let c = space.coords[d];
            values[d] = g(Point::new(c[0], c[1]));
        }
    }

    let nl = space.local_count();
    let mut builder = TripletBuilder::with_capacity(nfree, nt * nl * nl);
    let mut rhs = vec![0.0; nfree];
    for (t, sys) in locals.iter().enumerate() {
        let dofs = &space.cell_dofs[t];
        for j in 0..nl {
            let row = index[dofs[j]];
            if row == usize::MAX {
                continue;
            }
            rhs[row] += sys.load[j];
            for i in 0..nl {
                let k = sys.stiffness[j * nl + i];
                let col = index[dofs[i]];
                if col == usize::MAX {
                    rhs[row] -= k * values[dofs[i]];
                } else {
                    builder.add(row, col, k);
                }
            }
        }
    }
    if nfree == 0 {
        return Ok(FemSolution {
            space: Arc::clone(space),
            values,
            residual: 0.0,
        });
    }
    let matrix = builder.build()?;
    let solver = CholeskySolver::factor(matrix, None, "macroscopic stiffness matrix")?;
    let (x, residual) = solver.solve(&rhs);
    if !(residual <= SOLVE_TOLERANCE) {
        return Err(Error::SolverResidual {
            residual,
            tolerance: SOLVE_TOLERANCE,
        });
    }
    for d in 0..ndof {
        if index[d] != usize::MAX {
            values[d] = x[index[d]];
        }
    }
    Ok(FemSolution {
        space: Arc::clone(space),
        values,
        residual,
    })
}

/// Assemble the interior stiffness matrix only (for structural checks).
pub fn assemble_matrix(
    space: &Arc<FemSpace>,
    coefficient: &dyn MatrixField,
    options: &AssemblyOptions,
) -> Result<crate::linsolve::SparseMatrix> {
    let rule = TriangleRule::with_exactness(options.quadrature_degree.max(1));
    let zero = |_: Point| 0.0;
    let nl = space.local_count();
    let mut b = TripletBuilder::new(space.ndof());
    for t in 0..space.mesh.triangles.len() {
        let sys = local_system(space, t, &rule, coefficient, &zero);
        let dofs = &space.cell_dofs[t];
        for j in 0..nl {
            for i in 0..nl {
                b.add(dofs[j], dofs[i], sys.stiffness[j * nl + i]);
            }
        }
    }
    b.build()
}

/// Exact solution used as an error reference.
pub struct AnalyticSolution<'a> {
    pub u: ScalarFn<'a>,
    pub grad: &'a (dyn Fn(Point) -> [f64; 2] + Sync),
}

pub enum Reference<'a> {
    Fem(&'a FemSolution),
    Analytic(AnalyticSolution<'a>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeErrors {
    /// `|grad(u0 - uh)| / |grad u0|`
    pub h1: f64,
    /// `|u0 - uh| / |u0|`
    pub l2: f64,
}

/// Quadrature exactness used for error integrals.
pub const ERROR_QUADRATURE_DEGREE: usize = 8;

/// Relative H1-seminorm and L2 errors of `sol` against `reference`,
/// integrated on the finer of the two meshes.
pub fn relative_errors(sol: &FemSolution, reference: &Reference) -> Result<RelativeErrors> {
    let rule = TriangleRule::with_exactness(ERROR_QUADRATURE_DEGREE);
    // (integration space, evaluator of the integration-mesh function, other)
    let sums = match reference {
        Reference::Fem(r) => {
            let (fine, coarse, fine_is_ref) = if r.space.mesh.n >= sol.space.mesh.n {
                (*r, sol, true)
            } else {
                (sol, *r, false)
            };
            let same_mesh = fine.space.mesh.n == coarse.space.mesh.n;
            if fine.space.mesh.domain != coarse.space.mesh.domain {
                return Err(Error::Incompatible("solutions live on different domains".into()));
            }
            integrate(&fine.space, &rule, |t, lambda, x| {
                let uf = fine.value_in(t, lambda);
                let gf = fine.gradient_in(t, lambda);
                let (tc, lc) = if same_mesh { (t, lambda) } else { coarse.space.mesh.locate(x)? };
                let uc = coarse.value_in(tc, lc);
                let gc = coarse.gradient_in(tc, lc);
                Ok(if fine_is_ref { (uf, gf, uc, gc) } else { (uc, gc, uf, gf) })
            })?
        }
        Reference::Analytic(a) => integrate(&sol.space, &rule, |t, lambda, x| {
            Ok(((a.u)(x), (a.grad)(x), sol.value_in(t, lambda), sol.gradient_in(t, lambda)))
        })?,
    };
    let [e_l2, r_l2, e_h1, r_h1] = sums;
    if r_l2 == 0.0 || r_h1 == 0.0 {
        return Err(Error::InvalidArgument("reference solution has zero norm".into()));
    }
    Ok(RelativeErrors {
        h1: (e_h1 / r_h1).sqrt(),
        l2: (e_l2 / r_l2).sqrt(),
    })
}

type Sample = (f64, [f64; 2], f64, [f64; 2]);

/// Returns `[|u0 - uh|^2, |u0|^2, |grad(u0 - uh)|^2, |grad u0|^2]`.
fn integrate(
    space: &FemSpace,
    rule: &TriangleRule,
    eval: impl Fn(usize, [f64; 3], Point) -> Result<Sample> + Sync,
) -> Result<[f64; 4]> {
    let parts = (0..space.mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let [p0, p1, p2] = space.mesh.triangle_points(t);
            let area2 = space.mesh.signed_area(t).abs() * 2.0;
            let mut s = [0.0; 4];
            for (xi, &w) in rule.points.iter().zip(&rule.weights) {
                let lambda = [1.0 - xi[0] - xi[1], xi[0], xi[1]];
                let x = Point::from(p0.coords * lambda[0] + p1.coords * lambda[1] + p2.coords * lambda[2]);
                let (u0, g0, uh, gh) = eval(t, lambda, x)?;
                let wq = w * area2;
                s[0] += wq * (u0 - uh).powi(2);
                s[1] += wq * u0 * u0;
                s[2] += wq * ((g0[0] - gh[0]).powi(2) + (g0[1] - gh[1]).powi(2));
                s[3] += wq * (g0[0] * g0[0] + g0[1] * g0[1]);
            }
            Ok(s)
        })
        .collect::<Result<Vec<[f64; 4]>>>()?;
    // sequential reduction in triangle order keeps the sums reproducible
    Ok(parts.iter().fold([0.0; 4], |acc, s| {
        [acc[0] + s[0], acc[1] + s[1], acc[2] + s[2], acc[3] + s[3]]
    }))
}

/// `e(MOD)`: max Frobenius discrepancy between the reconstructed field and
/// the reference over an inclusive `(probe_n + 1)^2` grid; `e1(MOD)`: the
/// same over the sampling points, against the table samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmodReport {
    pub e_mod: f64,
    pub e1_mod: f64,
}

pub const DEFAULT_EMOD_PROBES: usize = 512;

pub fn emod_report(
    field: &PolyMatrixField,
    table: &EffectiveTable,
    reference: &dyn MatrixField,
    probe_n: usize,
) -> Result<EmodReport> {
    if probe_n == 0 {
        return Err(Error::InvalidArgument("empty e(MOD) probe grid".into()));
    }
    let d = field.domain;
    let rows = (0..=probe_n)
        .into_par_iter()
        .map(|j| {
            let y = d.y0 + d.height() * j as f64 / probe_n as f64;
            let mut worst: f64 = 0.0;
            for i in 0..=probe_n {
                let x = Point::new(d.x0 + d.width() * i as f64 / probe_n as f64, y);
                worst = worst.max((reference.eval(x) - field.evaluate(x)?).norm());
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>>>()?;
    let e_mod = rows.into_iter().fold(0.0, f64::max);
    let e1_mod = table
        .samples
        .iter()
        .map(|s| (reference.eval(s.center()) - s.matrix()).norm())
        .fold(0.0, f64::max);
    Ok(EmodReport { e_mod, e1_mod })
}

/// Max Frobenius discrepancy between two matrix fields on the same grid.
pub fn field_distance(a: &dyn MatrixField, b: &dyn MatrixField, domain: &crate::mesh::Rect, probe_n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..=probe_n {
        for i in 0..=probe_n {
            let x = Point::new(
                domain.x0 + domain.width() * i as f64 / probe_n as f64,
                domain.y0 + domain.height() * j as f64 / probe_n as f64,
            );
            worst = worst.max((a.eval(x) - b.eval(x)).norm());
        }
    }
    worst
}

/// Constant identity coefficient.
pub fn identity(_: Point) -> Mat2 {
    Mat2::identity()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Rect;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn space(n: usize, l: usize) -> Arc<FemSpace> {
        FemSpace::new(OnlineMesh::new(Rect::unit_square(), n).unwrap(), l).unwrap()
    }

    #[test]
    fn dof_counts_and_boundary() {
        for n in [1, 2, 5] {
            let s1 = space(n, 1);
            assert_eq!(s1.ndof(), (n + 1) * (n + 1));
            let s2 = space(n, 2);
            assert_eq!(s2.ndof(), (2 * n + 1) * (2 * n + 1));
            assert_eq!(s2.boundary.iter().filter(|&&b| b).count(), 8 * n);
            for (c, &b) in s2.coords.iter().zip(&s2.boundary) {
                let on = c[0] == 0.0 || c[1] == 0.0 || c[0] == 1.0 || c[1] == 1.0;
                assert_eq!(on, b);
            }
        }
    }

    #[test]
    fn p2_dofs_sit_at_nodes() {
        let s = space(3, 2);
        let t = 5;
        let [p0, p1, p2] = s.mesh.triangle_points(t);
        let nodes = [p0, p1, p2, Point::from((p0.coords + p1.coords) / 2.0), Point::from((p1.coords + p2.coords) / 2.0), Point::from((p2.coords + p0.coords) / 2.0)];
        for (d, p) in s.cell_dofs[t].iter().zip(nodes) {
            assert_abs_diff_eq!(s.coords[*d][0], p.x, epsilon = 1e-15);
            assert_abs_diff_eq!(s.coords[*d][1], p.y, epsilon = 1e-15);
        }
    }

    #[test]
    fn patch_tests() {
        let zero = |_: Point| 0.0;
        let lin = |x: Point| 1.0 + 2.0 * x.x - 0.5 * x.y;
        let s = space(5, 1);
        let sol = assemble_solve(&s, &identity, &zero, &lin, &AssemblyOptions::for_orders(1, 0)).unwrap();
        for (c, v) in s.coords.iter().zip(&sol.values) {
            assert_abs_diff_eq!(*v, lin(Point::new(c[0], c[1])), epsilon = 1e-12);
        }
        // P2 reproduces quadratics; -div(A grad u) = -2 (a11 + a12 + ...)
        let a = Mat2::new(2.0, 0.5, 0.5, 1.0);
        let coef = move |_: Point| a;
        let quad = |x: Point| x.x * x.x + x.x * x.y - 0.3 * x.y * x.y;
        // Hessian [[2, 1], [1, -0.6]]
        let f = move |_: Point| -(a[(0, 0)] * 2.0 + 2.0 * a[(0, 1)] * 1.0 + a[(1, 1)] * -0.6);
        let s = space(4, 2);
        let sol = assemble_solve(&s, &coef, &f, &quad, &AssemblyOptions::for_orders(2, 0)).unwrap();
        for (c, v) in s.coords.iter().zip(&sol.values) {
            assert_abs_diff_eq!(*v, quad(Point::new(c[0], c[1])), epsilon = 1e-12);
        }
        let x = Point::new(0.123, 0.77);
        assert_abs_diff_eq!(sol.value(x).unwrap(), quad(x), epsilon = 1e-12);
    }

    #[test]
    fn symmetric_coefficient_gives_symmetric_matrix() {
        let coef = |x: Point| Mat2::new(1.0 + x.x, 0.2 * x.y, 0.2 * x.y, 2.0 + x.x * x.y);
        for l in [1, 2] {
            let m = assemble_matrix(&space(6, l), &coef, &AssemblyOptions::for_orders(l, 2)).unwrap();
            assert!(m.asymmetry() < 1e-14);
        }
    }

    #[test]
    fn manufactured_rates() {
        let f = |x: Point| 2.0 * PI * PI * (PI * x.x).sin() * (PI * x.y).sin();
        let u = |x: Point| (PI * x.x).sin() * (PI * x.y).sin();
        let grad = |x: Point| [PI * (PI * x.x).cos() * (PI * x.y).sin(), PI * (PI * x.x).sin() * (PI * x.y).cos()];
        let zero = |_: Point| 0.0;
        for l in [1, 2] {
            let mut prev: Option<RelativeErrors> = None;
            for n in [8, 16] {
                let s = space(n, l);
                let sol = assemble_solve(&s, &identity, &f, &zero, &AssemblyOptions { quadrature_degree: 2 * l + 2 }).unwrap();
                let e = relative_errors(&sol, &Reference::Analytic(AnalyticSolution { u: &u, grad: &grad })).unwrap();
                if let Some(p) = prev {
                    let rh1 = (p.h1 / e.h1).log2();
                    let rl2 = (p.l2 / e.l2).log2();
                    assert!((rh1 - l as f64).abs() < 0.25, "l = {l}: H1 rate {rh1}");
                    assert!((rl2 - (l + 1) as f64).abs() < 0.3, "l = {l}: L2 rate {rl2}");
                }
                prev = Some(e);
            }
        }
    }

    #[test]
    fn errors_identity_and_scaling() {
        let f = |_: Point| 1.0;
        let zero = |_: Point| 0.0;
        let s = space(8, 2);
        let sol = assemble_solve(&s, &identity, &f, &zero, &AssemblyOptions::for_orders(2, 0)).unwrap();
        let e = relative_errors(&sol, &Reference::Fem(&sol)).unwrap();
        assert_eq!(e.h1, 0.0);
        assert_eq!(e.l2, 0.0);
        let e = relative_errors(&sol.scaled(2.0), &Reference::Fem(&sol)).unwrap();
        assert_abs_diff_eq!(e.l2, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.h1, 1.0, epsilon = 1e-12);
        // nested meshes: coarse vs fine in either order agree
        let fine = assemble_solve(&space(16, 2), &identity, &f, &zero, &AssemblyOptions::for_orders(2, 0)).unwrap();
        let a = relative_errors(&sol, &Reference::Fem(&fine)).unwrap();
        assert!(a.h1 > 0.0 && a.h1 < 0.05);
        let zero_sol = sol.scaled(0.0);
        assert!(relative_errors(&sol, &Reference::Fem(&zero_sol)).is_err());
    }

    #[test]
    fn indefinite_coefficient_is_reported() {
        let coef = |_: Point| Mat2::identity() * -1.0;
        let f = |_: Point| 1.0;
        let zero = |_: Point| 0.0;
        let r = assemble_solve(&space(4, 1), &coef, &f, &zero, &AssemblyOptions::for_orders(1, 0));
        assert!(matches!(r, Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn solution_exports() {
        let f = |_: Point| 1.0;
        let zero = |_: Point| 0.0;
        let sol = assemble_solve(&space(2, 1), &identity, &f, &zero, &AssemblyOptions::for_orders(1, 0)).unwrap();
        let mut buf = Vec::new();
        sol.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 10);
        assert!(sol.to_json().unwrap().contains("\"degree\":1"));
    }
}
