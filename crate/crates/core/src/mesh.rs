//! Offline sampling mesh (uniform squares), online triangulation, element
//! patches with their sample sets, and point location.

use serde::{Deserialize, Serialize};

use crate::{Error, Point, Result};

/// Snap tolerance for point location at the domain boundary.
pub const LOCATE_TOLERANCE: f64 = 1e-12;

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        let r = Self { x0, y0, x1, y1 };
        r.validate()?;
        Ok(r)
    }

    pub fn unit_square() -> Self {
        Self {
            x0: 0.0,
            y0: 0.0,
            x1: 1.0,
            y1: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x0, self.y0, self.x1, self.y1].iter().all(|v| v.is_finite());
        if !finite || self.x1 <= self.x0 || self.y1 <= self.y0 {
            return Err(Error::InvalidArgument(format!("degenerate rectangle {self:?}")));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn corners(&self) -> [Point; 4] {
        [
            Point::new(self.x0, self.y0),
            Point::new(self.x1, self.y0),
            Point::new(self.x1, self.y1),
            Point::new(self.x0, self.y1),
        ]
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        p.x >= self.x0 - tol && p.x <= self.x1 + tol && p.y >= self.y0 - tol && p.y <= self.y1 + tol
    }

    fn union(&self, other: &Rect) -> Rect {
        Rect {
            x0: self.x0.min(other.x0),
            y0: self.y0.min(other.y0),
            x1: self.x1.max(other.x1),
            y1: self.y1.max(other.y1),
        }
    }
}

/// Index of the cell containing `t` (in cell units) among `count` cells.
/// Interior grid lines resolve to the lower cell.
fn cell_index(t: f64, count: usize) -> usize {
    let tol = 1e-10 * (1.0 + t.abs());
    let k = (t - tol).ceil() - 1.0;
    if k < 0.0 {
        0
    } else {
        (k as usize).min(count - 1)
    }
}

/// Id (`row * q + col`) of the cell of a uniform `q x q` grid on `domain`
/// containing `x`; shared edges resolve to the lower id.
pub fn locate_uniform(domain: &Rect, q: usize, x: Point) -> Result<usize> {
    if !domain.contains(x, LOCATE_TOLERANCE) || !x.x.is_finite() || !x.y.is_finite() {
        return Err(Error::OutsideDomain { x: x.x, y: x.y });
    }
    let tx = (x.x - domain.x0) / domain.width() * q as f64;
    let ty = (x.y - domain.y0) / domain.height() * q as f64;
    Ok(cell_index(ty, q) * q + cell_index(tx, q))
}

/// One square cell of the offline mesh.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OfflineElement {
    pub id: usize,
    pub col: usize,
    pub row: usize,
    pub bounds: Rect,
    pub barycenter: [f64; 2],
    pub diameter: f64,
}

impl OfflineElement {
    pub fn barycenter(&self) -> Point {
        Point::new(self.barycenter[0], self.barycenter[1])
    }
}

/// Uniform `q x q` sampling mesh `T_H`. Element id is `row * q + col`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OfflineMesh {
    pub domain: Rect,
    pub q: usize,
    pub elements: Vec<OfflineElement>,
    /// Moore neighbors (elements sharing an edge or a vertex), sorted by id.
    pub neighbors: Vec<Vec<usize>>,
}

impl OfflineMesh {
    pub fn new(domain: Rect, q: usize) -> Result<Self> {
        domain.validate()?;
        if q == 0 {
            return Err(Error::InvalidArgument("offline mesh needs q >= 1".into()));
        }
        let dx = domain.width() / q as f64;
        let dy = domain.height() / q as f64;
        let mut elements = Vec::with_capacity(q * q);
        let mut neighbors = Vec::with_capacity(q * q);
        for row in 0..q {
            for col in 0..q {
                let bounds = Rect {
                    x0: domain.x0 + col as f64 * dx,
                    y0: domain.y0 + row as f64 * dy,
                    x1: if col + 1 == q { domain.x1 } else { domain.x0 + (col + 1) as f64 * dx },
                    y1: if row + 1 == q { domain.y1 } else { domain.y0 + (row + 1) as f64 * dy },
                };
                let c = bounds.center();
                elements.push(OfflineElement {
                    id: row * q + col,
                    col,
                    row,
                    bounds,
                    barycenter: [c.x, c.y],
                    diameter: dx.hypot(dy),
                });
                let mut nb = Vec::with_capacity(8);
                for r in row.saturating_sub(1)..=(row + 1).min(q - 1) {
                    for cc in col.saturating_sub(1)..=(col + 1).min(q - 1) {
                        if r != row || cc != col {
                            nb.push(r * q + cc);
                        }
                    }
                }
                neighbors.push(nb);
            }
        }
        Ok(Self {
            domain,
            q,
            elements,
            neighbors,
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Mesh size `H` (all elements share one diameter).
    pub fn h(&self) -> f64 {
        self.elements[0].diameter
    }

    /// Chunkiness `diameter / inscribed radius` of the (uniform) elements.
    pub fn chunkiness(&self) -> f64 {
        let b = &self.elements[0].bounds;
        b.diameter() / (0.5 * b.width().min(b.height()))
    }

    pub fn element_id(&self, col: usize, row: usize) -> usize {
        row * self.q + col
    }

    /// Id of the element containing `x`; shared edges resolve to the lower id.
    pub fn locate(&self, x: Point) -> Result<usize> {
        locate_uniform(&self.domain, self.q, x)
    }

    pub fn barycenters(&self) -> Vec<Point> {
        self.elements.iter().map(|e| e.barycenter()).collect()
    }
}

/// Geometry descriptors of a patch `S(K)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PatchGeometry {
    /// Radius of the smallest disk enclosing `S(K)`.
    pub outer_radius: f64,
    /// Radius of the largest disk centered at the barycenter of `K` inside `S(K)`.
    pub inner_radius: f64,
    /// Minimum extent of `S(K)` over the directions 0, 45, 90 and 135 degrees.
    pub width: f64,
    /// Center of the enclosing disk; the polynomial basis is centered here.
    pub center: [f64; 2],
}

/// Element patch `S(K)` with its sample set `I(K)` (one barycenter per member).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElementPatch {
    pub element: usize,
    /// Member ids in increasing order.
    pub members: Vec<usize>,
    pub samples: Vec<(usize, [f64; 2])>,
    pub depth: usize,
    /// Bounding box of the union of members. On the uniform mesh the union is
    /// exactly this box.
    pub region: Rect,
    pub geometry: PatchGeometry,
}

impl ElementPatch {
    pub fn sample_points(&self) -> Vec<Point> {
        self.samples.iter().map(|(_, p)| Point::new(p[0], p[1])).collect()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn center(&self) -> Point {
        Point::new(self.geometry.center[0], self.geometry.center[1])
    }
}

/// Grow `S_t(K)` by Moore-neighbor recursion until it holds `n_lowest` elements.
pub fn build_patch(mesh: &OfflineMesh, element: usize, n_lowest: usize) -> Result<ElementPatch> {
    if element >= mesh.len() {
        return Err(Error::InvalidArgument(format!(
            "element {element} out of range ({} elements)",
            mesh.len()
        )));
    }
    if n_lowest == 0 {
        return Err(Error::InvalidArgument("n_lowest must be >= 1".into()));
    }
    if mesh.len() < n_lowest {
        return Err(Error::PatchTooSmall {
            element,
            needed: n_lowest,
            available: mesh.len(),
        });
    }
    let mut in_patch = vec![false; mesh.len()];
    in_patch[element] = true;
    let mut members = vec![element];
    let mut frontier = vec![element];
    let mut depth = 0;
    while members.len() < n_lowest {
        let mut next = Vec::new();
        for &k in &frontier {
            for &nb in &mesh.neighbors[k] {
                if !in_patch[nb] {
                    in_patch[nb] = true;
                    next.push(nb);
                }
            }
        }
        if next.is_empty() {
            return Err(Error::PatchTooSmall {
                element,
                needed: n_lowest,
                available: members.len(),
            });
        }
        depth += 1;
        members.extend_from_slice(&next);
        frontier = next;
    }
    members.sort_unstable();
    let samples = members
        .iter()
        .map(|&k| (k, mesh.elements[k].barycenter))
        .collect();
    let region = members
        .iter()
        .map(|&k| mesh.elements[k].bounds)
        .reduce(|a, b| a.union(&b))
        .expect("patch is nonempty");
    let geometry = patch_geometry(&region, mesh.elements[element].barycenter());
    Ok(ElementPatch {
        element,
        members,
        samples,
        depth,
        region,
        geometry,
    })
}

fn patch_geometry(region: &Rect, barycenter: Point) -> PatchGeometry {
    let center = region.center();
    let inner_radius = (barycenter.x - region.x0)
        .min(region.x1 - barycenter.x)
        .min(barycenter.y - region.y0)
        .min(region.y1 - barycenter.y);
    let corners = region.corners();
    let width = [0.0f64, 45.0, 90.0, 135.0]
        .iter()
        .map(|deg| {
            let (s, c) = deg.to_radians().sin_cos();
            let proj = corners.iter().map(|p| c * p.x + s * p.y);
            let lo = proj.clone().fold(f64::INFINITY, f64::min);
            let hi = proj.fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        })
        .fold(f64::INFINITY, f64::min);
    PatchGeometry {
        outer_radius: 0.5 * region.diameter(),
        inner_radius,
        width,
        center: [center.x, center.y],
    }
}

/// Minimum sample-set size for reconstruction order `m` in dimension `d`.
pub fn patch_threshold(m: usize, d: usize) -> Result<usize> {
    match (d, m) {
        (2, 1) => Ok(5),
        (2, 2) => Ok(7),
        (2, 3) => Ok(13),
        _ => Err(Error::InvalidArgument(format!(
            "no sampling threshold for m = {m}, d = {d}"
        ))),
    }
}

/// Uniform triangulation `tau_h`: `n x n` squares, each split along its
/// positive-slope diagonal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OnlineMesh {
    pub domain: Rect,
    pub n: usize,
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<bool>,
    pub h: f64,
}

impl OnlineMesh {
    pub fn new(domain: Rect, n: usize) -> Result<Self> {
        domain.validate()?;
        if n == 0 {
            return Err(Error::InvalidArgument("online mesh needs n >= 1".into()));
        }
        let dx = domain.width() / n as f64;
        let dy = domain.height() / n as f64;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        let mut boundary = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                let x = if i == n { domain.x1 } else { domain.x0 + i as f64 * dx };
                let y = if j == n { domain.y1 } else { domain.y0 + j as f64 * dy };
                vertices.push([x, y]);
                boundary.push(i == 0 || j == 0 || i == n || j == n);
            }
        }
        let v = |i: usize, j: usize| j * (n + 1) + i;
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                triangles.push([v(i, j), v(i + 1, j), v(i + 1, j + 1)]);
                triangles.push([v(i, j), v(i + 1, j + 1), v(i, j + 1)]);
            }
        }
        Ok(Self {
            domain,
            n,
            vertices,
            triangles,
            boundary,
            h: dx.hypot(dy),
        })
    }

    pub fn vertex(&self, k: usize) -> Point {
        Point::new(self.vertices[k][0], self.vertices[k][1])
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertex(a), self.vertex(b), self.vertex(c)]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y))
    }

    /// Triangle containing `x` together with its barycentric coordinates.
    pub fn locate(&self, x: Point) -> Result<(usize, [f64; 3])> {
        if !self.domain.contains(x, LOCATE_TOLERANCE) || !x.x.is_finite() || !x.y.is_finite() {
            return Err(Error::OutsideDomain { x: x.x, y: x.y });
        }
        let n = self.n;
        let tx = (x.x - self.domain.x0) / self.domain.width() * n as f64;
        let ty = (x.y - self.domain.y0) / self.domain.height() * n as f64;
        let i = cell_index(tx, n);
        let j = cell_index(ty, n);
        let (sx, sy) = (tx - i as f64, ty - j as f64);
        let t = if sx >= sy { 2 * (j * n + i) } else { 2 * (j * n + i) + 1 };
        Ok((t, self.barycentric(t, x)))
    }

    pub fn barycentric(&self, t: usize, x: Point) -> [f64; 3] {
        let [a, b, c] = self.triangle_points(t);
        let det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
        let l1 = ((x.x - a.x) * (c.y - a.y) - (c.x - a.x) * (x.y - a.y)) / det;
        let l2 = ((b.x - a.x) * (x.y - a.y) - (x.x - a.x) * (b.y - a.y)) / det;
        [1.0 - l1 - l2, l1, l2]
    }
}
