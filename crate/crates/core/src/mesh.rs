//! Triangulations of polygonal domains and the vertex sets used by the
//! boundary modification of the multiplier spaces.
//!
//! A [`Mesh`] is immutable once built. Boundary vertices are never stored;
//! they are recovered from edge incidence (an edge used by exactly one
//! triangle is a boundary edge).

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const UNIT_SQUARE: Rect = Rect { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0 };

    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        if !(x1 > x0 && y1 > y0) || ![x0, y0, x1, y1].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidMesh(format!(
                "degenerate domain [{x0}, {x1}] x [{y0}, {y1}]"
            )));
        }
        Ok(Rect { x0, y0, x1, y1 })
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

impl Default for Rect {
    fn default() -> Self {
        Rect::UNIT_SQUARE
    }
}

/// An edge `[a, b]` with `a < b` and the triangles using it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub triangles: [usize; 2],
    /// `false` for boundary edges, in which case `triangles[1] == triangles[0]`.
    pub shared: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    edges: Vec<Edge>,
    h: f64,
}

impl Mesh {
    /// Builds a mesh and checks its invariants: counterclockwise triangles
    /// with positive area, every edge used by one or two triangles, and no
    /// unreferenced vertices.
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("no triangles".into()));
        }
        let nv = vertices.len();
        let mut used = vec![false; nv];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= nv {
                    return Err(Error::InvalidMesh(format!(
                        "triangle {t} references vertex {v}, but only {nv} vertices exist"
                    )));
                }
                used[v] = true;
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!("triangle {t} repeats a vertex")));
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if !(area > 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} has non-positive signed area {area:e}"
                )));
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::InvalidMesh(format!("vertex {v} is not used by any triangle")));
        }

        let mut incidence: BTreeMap<[usize; 2], Vec<usize>> = BTreeMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                incidence.entry([a.min(b), a.max(b)]).or_default().push(t);
            }
        }
        let mut boundary = vec![false; nv];
        let mut edges = Vec::with_capacity(incidence.len());
        for (key, tris) in incidence {
            match tris.as_slice() {
                [t] => {
                    boundary[key[0]] = true;
                    boundary[key[1]] = true;
                    edges.push(Edge { vertices: key, triangles: [*t, *t], shared: false });
                }
                [t0, t1] => edges.push(Edge { vertices: key, triangles: [*t0, *t1], shared: true }),
                _ => {
                    return Err(Error::InvalidMesh(format!(
                        "edge {key:?} is shared by {} triangles",
                        tris.len()
                    )))
                }
            }
        }

        let h = triangles
            .iter()
            .map(|tri| diameter(&vertices, tri))
            .fold(0.0, f64::max);
        Ok(Mesh { vertices, triangles, boundary, edges, h })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Maximum element diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Minimum element diameter.
    pub fn h_min(&self) -> f64 {
        self.triangles
            .iter()
            .map(|tri| diameter(&self.vertices, tri))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        let tri = self.triangles[t];
        [self.vertices[tri[0]], self.vertices[tri[1]], self.vertices[tri[2]]]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        signed_area(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.area(t)).sum()
    }

    /// Splits every triangle into four through its edge midpoints.
    pub fn refine_uniform(&self) -> Mesh {
        let mut vertices = self.vertices.clone();
        let mut midpoint = HashMap::new();
        for e in &self.edges {
            let [a, b] = e.vertices;
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            midpoint.insert(e.vertices, vertices.len());
            vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
        }
        let mid = |a: usize, b: usize| midpoint[&[a.min(b), a.max(b)]];
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
            triangles.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        Mesh::new(vertices, triangles).expect("refinement preserves mesh validity")
    }

    /// Reads the plain-text format: a `V T` header, `V` lines `x y`, then
    /// `T` lines `i j k` (0-based, counterclockwise).
    pub fn parse(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let mut next = |what: &str| {
            tokens
                .next()
                .ok_or_else(|| Error::InvalidMesh(format!("unexpected end of input reading {what}")))
        };
        let count = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::InvalidMesh(format!("bad count {s:?}: {e}")))
        };
        let nv = count(next("vertex count")?)?;
        let nt = count(next("triangle count")?)?;
        let mut vertices = Vec::with_capacity(nv);
        for v in 0..nv {
            let mut p = [0.0; 2];
            for c in &mut p {
                let s = next("vertex coordinate")?;
                *c = s
                    .parse()
                    .map_err(|e| Error::InvalidMesh(format!("vertex {v}: bad coordinate {s:?}: {e}")))?;
            }
            vertices.push(p);
        }
        let mut triangles = Vec::with_capacity(nt);
        for t in 0..nt {
            let mut tri = [0; 3];
            for c in &mut tri {
                let s = next("triangle index")?;
                *c = s
                    .parse()
                    .map_err(|e| Error::InvalidMesh(format!("triangle {t}: bad index {s:?}: {e}")))?;
            }
            triangles.push(tri);
        }
        if tokens.next().is_some() {
            return Err(Error::InvalidMesh("trailing data after last triangle".into()));
        }
        Mesh::new(vertices, triangles)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Mesh::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.vertices.len(), self.triangles.len());
        for p in &self.vertices {
            let _ = writeln!(out, "{:?} {:?}", p[0], p[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn diameter(vertices: &[Point], tri: &[usize; 3]) -> f64 {
    (0..3)
        .map(|k| {
            let (p, q) = (vertices[tri[k]], vertices[tri[(k + 1) % 3]]);
            (p[0] - q[0]).hypot(p[1] - q[1])
        })
        .fold(0.0, f64::max)
}

fn grid_points(n: usize, domain: &Rect) -> Vec<Point> {
    let dx = (domain.x1 - domain.x0) / n as f64;
    let dy = (domain.y1 - domain.y0) / n as f64;
    let mut pts = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let x = if i == n { domain.x1 } else { domain.x0 + i as f64 * dx };
            let y = if j == n { domain.y1 } else { domain.y0 + j as f64 * dy };
            pts.push([x, y]);
        }
    }
    pts
}

/// Criss-cross triangulation: each of the `n × n` cells is split into four
/// triangles through its centroid. Every triangle touches a centroid, so
/// every triangle has an interior vertex.
///
/// Grid vertices come first, ordered by `(y, x)`; cell centroids follow in
/// the same cell order.
pub fn generate_crisscross(n: usize, domain: &Rect) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidMesh("cell count must be at least 1".into()));
    }
    let mut vertices = grid_points(n, domain);
    let base = vertices.len();
    let grid = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(4 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (p00, p11) = (vertices[grid(i, j)], vertices[grid(i + 1, j + 1)]);
            let c = base + j * n + i;
            vertices.push([0.5 * (p00[0] + p11[0]), 0.5 * (p00[1] + p11[1])]);
            let (v00, v10, v11, v01) = (grid(i, j), grid(i + 1, j), grid(i + 1, j + 1), grid(i, j + 1));
            triangles.extend([[v00, v10, c], [v10, v11, c], [v11, v01, c], [v01, v00, c]]);
        }
    }
    Mesh::new(vertices, triangles)
}

/// Each cell split by its `(x0,y0)–(x1,y1)` diagonal. The corner cells at
/// `(x1, y0)` and `(x0, y1)` always produce triangles with three boundary
/// vertices, so these meshes fail [`validate_interior_vertex_assumption`].
pub fn generate_uniform_diagonal(n: usize, domain: &Rect) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidMesh("cell count must be at least 1".into()));
    }
    let vertices = grid_points(n, domain);
    let grid = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v11, v01) = (grid(i, j), grid(i + 1, j), grid(i + 1, j + 1), grid(i, j + 1));
            triangles.extend([[v00, v10, v11], [v00, v11, v01]]);
        }
    }
    Mesh::new(vertices, triangles)
}

/// Vertex sets driving the boundary modification.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexClassification {
    /// Interior vertices, ascending.
    pub interior: Vec<usize>,
    /// Boundary vertices, ascending.
    pub boundary: Vec<usize>,
    /// For every vertex, the vertices sharing an edge with it (ascending).
    pub edge_neighbors: Vec<Vec<usize>>,
    /// For every interior vertex, its interior edge-neighbours.
    pub interior_neighbors: BTreeMap<usize, Vec<usize>>,
    /// Interior vertices with at least one boundary edge-neighbour.
    pub near_boundary_interior: Vec<usize>,
}

pub fn classify(mesh: &Mesh) -> VertexClassification {
    let nv = mesh.num_vertices();
    let mut edge_neighbors = vec![Vec::new(); nv];
    for e in mesh.edges() {
        let [a, b] = e.vertices;
        edge_neighbors[a].push(b);
        edge_neighbors[b].push(a);
    }
    for list in &mut edge_neighbors {
        list.sort_unstable();
    }
    let (boundary, interior): (Vec<usize>, Vec<usize>) = (0..nv).partition(|&v| mesh.is_boundary(v));
    let interior_neighbors = interior
        .iter()
        .map(|&i| {
            let nb = edge_neighbors[i].iter().copied().filter(|&j| !mesh.is_boundary(j)).collect();
            (i, nb)
        })
        .collect();
    let near_boundary_interior = interior
        .iter()
        .copied()
        .filter(|&i| edge_neighbors[i].iter().any(|&j| mesh.is_boundary(j)))
        .collect();
    VertexClassification { interior, boundary, edge_neighbors, interior_neighbors, near_boundary_interior }
}

/// Checks that every triangle has at least one interior vertex. The error
/// lists every offending triangle.
pub fn validate_interior_vertex_assumption(mesh: &Mesh) -> Result<()> {
    let triangles: Vec<usize> = mesh
        .triangles()
        .iter()
        .enumerate()
        .filter(|(_, tri)| tri.iter().all(|&v| mesh.is_boundary(v)))
        .map(|(t, _)| t)
        .collect();
    if triangles.is_empty() {
        Ok(())
    } else {
        Err(Error::NoInteriorVertex { triangles })
    }
}

/// Barycentric coordinates of `p` with respect to triangle `[a, b, c]`.
pub fn barycentric(corners: &[Point; 3], p: Point) -> [f64; 3] {
    let [a, b, c] = *corners;
    let area = signed_area(a, b, c);
    let l1 = signed_area(a, p, c) / area;
    let l2 = signed_area(a, b, p) / area;
    [1.0 - l1 - l2, l1, l2]
}

/// Bucket grid over triangle bounding boxes for point location.
pub struct PointLocator<'a> {
    mesh: &'a Mesh,
    origin: Point,
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

impl<'a> PointLocator<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in mesh.vertices() {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let side = (mesh.num_triangles() as f64).sqrt().ceil().max(1.0) as usize;
        let dims = [side, side];
        let cell = [
            ((hi[0] - lo[0]) / side as f64).max(f64::MIN_POSITIVE),
            ((hi[1] - lo[1]) / side as f64).max(f64::MIN_POSITIVE),
        ];
        let mut locator = PointLocator { mesh, origin: lo, cell, dims, buckets: vec![Vec::new(); side * side] };
        for t in 0..mesh.num_triangles() {
            let c = mesh.corners(t);
            let (mut a, mut b) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for p in &c {
                for k in 0..2 {
                    a[k] = a[k].min(p[k]);
                    b[k] = b[k].max(p[k]);
                }
            }
            let [i0, j0] = locator.bucket_of(a);
            let [i1, j1] = locator.bucket_of(b);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    locator.buckets[j * side + i].push(t);
                }
            }
        }
        locator
    }

    fn bucket_of(&self, p: Point) -> [usize; 2] {
        let mut idx = [0; 2];
        for k in 0..2 {
            let f = ((p[k] - self.origin[k]) / self.cell[k]).floor();
            idx[k] = (f.max(0.0) as usize).min(self.dims[k] - 1);
        }
        idx
    }

    /// Triangle containing `p` and the barycentric coordinates of `p` in
    /// it. Points on shared edges resolve to one of the adjacent triangles.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        let [i, j] = self.bucket_of(p);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in &self.buckets[j * self.dims[0] + i] {
            let bary = barycentric(&self.mesh.corners(t), p);
            let worst = bary.iter().copied().fold(f64::INFINITY, f64::min);
            if worst >= 0.0 {
                return Some((t, bary));
            }
            if best.is_none_or(|b| worst > b.2) {
                best = Some((t, bary, worst));
            }
        }
        best.filter(|b| b.2 > -1e-10).map(|b| (b.0, b.1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crisscross_counts() {
        for n in 1..6 {
            let mesh = generate_crisscross(n, &Rect::UNIT_SQUARE).unwrap();
            assert_eq!(mesh.num_vertices(), (n + 1) * (n + 1) + n * n);
            assert_eq!(mesh.num_triangles(), 4 * n * n);
            assert!((mesh.h() - 1.0 / n as f64).abs() < 1e-15);
            assert!((mesh.total_area() - 1.0).abs() < 1e-12);
        }
        let c = classify(&generate_crisscross(1, &Rect::UNIT_SQUARE).unwrap());
        assert_eq!(c.interior, vec![4]);
        let c = classify(&generate_crisscross(2, &Rect::UNIT_SQUARE).unwrap());
        assert_eq!(c.interior.len(), 5);
    }

    #[test]
    fn crisscross_single_cell_classification() {
        let mesh = generate_crisscross(1, &Rect::UNIT_SQUARE).unwrap();
        let c = classify(&mesh);
        assert_eq!(c.boundary, vec![0, 1, 2, 3]);
        assert_eq!(c.near_boundary_interior, vec![4]);
        assert_eq!(c.edge_neighbors[4], vec![0, 1, 2, 3]);
        assert!(c.interior_neighbors[&4].is_empty());
        assert!(validate_interior_vertex_assumption(&mesh).is_ok());
    }

    #[test]
    fn crisscross_two_cells_all_interior_near_boundary() {
        let c = classify(&generate_crisscross(2, &Rect::UNIT_SQUARE).unwrap());
        assert_eq!(c.near_boundary_interior, c.interior);
        assert_eq!(c.interior, vec![4, 9, 10, 11, 12]);
    }

    #[test]
    fn diagonal_counts_and_violations() {
        let mesh = generate_uniform_diagonal(4, &Rect::UNIT_SQUARE).unwrap();
        assert_eq!((mesh.num_vertices(), mesh.num_triangles()), (25, 32));

        let mesh = generate_uniform_diagonal(1, &Rect::UNIT_SQUARE).unwrap();
        assert!(classify(&mesh).interior.is_empty());
        match validate_interior_vertex_assumption(&mesh) {
            Err(Error::NoInteriorVertex { triangles }) => assert_eq!(triangles, vec![0, 1]),
            other => panic!("expected violation, got {other:?}"),
        }

        let mesh = generate_uniform_diagonal(2, &Rect::UNIT_SQUARE).unwrap();
        let Err(Error::NoInteriorVertex { triangles }) = validate_interior_vertex_assumption(&mesh) else {
            panic!("expected violation");
        };
        assert!(triangles.len() >= 2);
        let corner = [[0.5, 0.0], [1.0, 0.0], [1.0, 0.5]];
        assert!(triangles.iter().any(|&t| mesh.corners(t) == corner));
    }

    #[test]
    fn rejects_bad_meshes() {
        let clockwise = Mesh::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]], vec![[0, 1, 2]]);
        assert!(matches!(clockwise, Err(Error::InvalidMesh(_))));
        let fan = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, -1.0], [-1.0, 0.5]],
            vec![[0, 1, 2], [0, 3, 1], [0, 1, 4]],
        );
        assert!(matches!(fan, Err(Error::InvalidMesh(msg)) if msg.contains("shared by 3")));
        assert!(generate_crisscross(0, &Rect::UNIT_SQUARE).is_err());
    }

    #[test]
    fn text_format_round_trip() {
        let mesh = generate_crisscross(3, &Rect::new(-1.0, 0.0, 2.0, 0.5).unwrap()).unwrap();
        assert_eq!(Mesh::parse(&mesh.to_text()).unwrap(), mesh);
        assert!(Mesh::parse("3 1\n0 0\n1 0\n0 1\n0 1").is_err());
        assert!(Mesh::parse("3 1\n0 0\n1 0\n0 1\n0 1 2\n7").is_err());
    }

    #[test]
    fn refinement_keeps_area_and_halves_h() {
        let mesh = generate_crisscross(2, &Rect::UNIT_SQUARE).unwrap();
        let fine = mesh.refine_uniform();
        assert_eq!(fine.num_triangles(), 4 * mesh.num_triangles());
        assert!((fine.total_area() - 1.0).abs() < 1e-12);
        assert!((fine.h() - 0.5 * mesh.h()).abs() < 1e-15);
        assert!(validate_interior_vertex_assumption(&fine).is_ok());
    }

    #[test]
    fn locator_finds_containing_triangle() {
        let mesh = generate_crisscross(5, &Rect::UNIT_SQUARE).unwrap();
        let loc = PointLocator::new(&mesh);
        for &p in &[[0.0, 0.0], [0.31, 0.77], [1.0, 1.0], [0.5, 0.123]] {
            let (t, bary) = loc.locate(p).unwrap();
            let c = mesh.corners(t);
            let q = [
                bary[0] * c[0][0] + bary[1] * c[1][0] + bary[2] * c[2][0],
                bary[0] * c[0][1] + bary[1] * c[1][1] + bary[2] * c[2][1],
            ];
            assert!((q[0] - p[0]).abs() < 1e-14 && (q[1] - p[1]).abs() < 1e-14);
        }
        assert!(loc.locate([1.5, 0.5]).is_none());
    }
}
