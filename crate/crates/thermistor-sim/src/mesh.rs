//! Structured triangulations of axis-aligned rectangles, P1 fields, and the
//! quadrature rules shared by every solver.
//!
//! An nx-by-ny grid of cells covers [x0,x1]x[y0,y1]; each cell is split along
//! its lower-left to upper-right diagonal into two counterclockwise
//! triangles. Vertices are numbered lexicographically, v = j*(nx+1) + i, so
//! all element couplings stay within a band of half-width nx+2. Boundary
//! edges are tagged side by side as Dirichlet or Neumann; the Dirichlet set
//! must be non-empty. Volume quadrature is the one-point centroid rule per
//! triangle (exact for affine integrands under P1), boundary quadrature is
//! the trapezoid rule per edge, and both sum in a fixed order so integrals
//! are bit-reproducible.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("degenerate rectangle [{x0}, {x1}] x [{y0}, {y1}]")]
    DegenerateRectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
    #[error("cell counts must be positive, got nx={nx}, ny={ny}")]
    EmptyGrid { nx: usize, ny: usize },
    #[error("Dirichlet side selection is empty")]
    EmptyDirichlet,
    #[error("expected {expected} values, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
}

/// One of the four sides of the rectangle, in the canonical order used for
/// boundary-edge enumeration and Dirichlet segment numbering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Bottom => "bottom",
            Side::Top => "top",
        }
    }

    /// Left and right run along the y axis; adjacent sides (one vertical,
    /// one horizontal) share a corner vertex.
    pub fn is_vertical(self) -> bool {
        matches!(self, Side::Left | Side::Right)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
}

/// Axis-aligned rectangle with positive width and height.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn unit_square() -> Self {
        Rect {
            x0: 0.0,
            x1: 1.0,
            y0: 0.0,
            y1: 1.0,
        }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }
}

/// Oriented boundary edge between two adjacent boundary vertices.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryEdge {
    pub vertices: (usize, usize),
    pub side: Side,
    pub tag: BoundaryTag,
}

/// Immutable triangulated rectangle. All geometric quantities are cached at
/// construction; solvers only read.
#[derive(Clone, Debug)]
pub struct Mesh {
    nx: usize,
    ny: usize,
    rect: Rect,
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    dirichlet_sides: Vec<Side>,
    dirichlet_vertex: Vec<bool>,
    tri_area: Vec<f64>,
    tri_grads: Vec<[[f64; 2]; 3]>,
}

/// Builds the structured mesh with the given Dirichlet side selection.
pub fn build_mesh(nx: usize, ny: usize, rect: Rect, dirichlet: &[Side]) -> Result<Mesh, MeshError> {
    if nx == 0 || ny == 0 {
        return Err(MeshError::EmptyGrid { nx, ny });
    }
    if !(rect.width() > 0.0) || !(rect.height() > 0.0) || !rect.width().is_finite() || !rect.height().is_finite() {
        return Err(MeshError::DegenerateRectangle {
            x0: rect.x0,
            x1: rect.x1,
            y0: rect.y0,
            y1: rect.y1,
        });
    }
    let mut dirichlet_sides: Vec<Side> = Side::ALL
        .iter()
        .copied()
        .filter(|s| dirichlet.contains(s))
        .collect();
    dirichlet_sides.dedup();
    if dirichlet_sides.is_empty() {
        return Err(MeshError::EmptyDirichlet);
    }

    let nvx = nx + 1;
    let nvy = ny + 1;
    let hx = rect.width() / nx as f64;
    let hy = rect.height() / ny as f64;

    let mut vertices = Vec::with_capacity(nvx * nvy);
    for j in 0..nvy {
        for i in 0..nvx {
            // Endpoints are exact; interior coordinates come from one multiply.
            let x = if i == nx { rect.x1 } else { rect.x0 + hx * i as f64 };
            let y = if j == ny { rect.y1 } else { rect.y0 + hy * j as f64 };
            vertices.push([x, y]);
        }
    }

    let idx = |i: usize, j: usize| j * nvx + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let v00 = idx(i, j);
            let v10 = idx(i + 1, j);
            let v01 = idx(i, j + 1);
            let v11 = idx(i + 1, j + 1);
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }

    let tag_of = |side: Side| {
        if dirichlet_sides.contains(&side) {
            BoundaryTag::Dirichlet
        } else {
            BoundaryTag::Neumann
        }
    };
    let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
    for j in 0..ny {
        boundary_edges.push(BoundaryEdge {
            vertices: (idx(0, j), idx(0, j + 1)),
            side: Side::Left,
            tag: tag_of(Side::Left),
        });
    }
    for j in 0..ny {
        boundary_edges.push(BoundaryEdge {
            vertices: (idx(nx, j), idx(nx, j + 1)),
            side: Side::Right,
            tag: tag_of(Side::Right),
        });
    }
    for i in 0..nx {
        boundary_edges.push(BoundaryEdge {
            vertices: (idx(i, 0), idx(i + 1, 0)),
            side: Side::Bottom,
            tag: tag_of(Side::Bottom),
        });
    }
    for i in 0..nx {
        boundary_edges.push(BoundaryEdge {
            vertices: (idx(i, ny), idx(i + 1, ny)),
            side: Side::Top,
            tag: tag_of(Side::Top),
        });
    }

    let mut dirichlet_vertex = vec![false; vertices.len()];
    for e in &boundary_edges {
        if e.tag == BoundaryTag::Dirichlet {
            dirichlet_vertex[e.vertices.0] = true;
            dirichlet_vertex[e.vertices.1] = true;
        }
    }

    let mut tri_area = Vec::with_capacity(triangles.len());
    let mut tri_grads = Vec::with_capacity(triangles.len());
    for t in &triangles {
        let p0 = vertices[t[0]];
        let p1 = vertices[t[1]];
        let p2 = vertices[t[2]];
        let two_a = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        debug_assert!(two_a > 0.0, "triangles must be counterclockwise");
        tri_area.push(0.5 * two_a);
        tri_grads.push([
            [(p1[1] - p2[1]) / two_a, (p2[0] - p1[0]) / two_a],
            [(p2[1] - p0[1]) / two_a, (p0[0] - p2[0]) / two_a],
            [(p0[1] - p1[1]) / two_a, (p1[0] - p0[0]) / two_a],
        ]);
    }

    Ok(Mesh {
        nx,
        ny,
        rect,
        vertices,
        triangles,
        boundary_edges,
        dirichlet_sides,
        dirichlet_vertex,
        tri_area,
        tri_grads,
    })
}

impl Mesh {
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn rect(&self) -> Rect {
        self.rect
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertex(&self, v: usize) -> [f64; 2] {
        self.vertices[v]
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.triangles[t]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        self.tri_area[t]
    }

    /// Gradients of the three local P1 basis functions on triangle `t`.
    pub fn basis_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        self.tri_grads[t]
    }

    pub fn triangle_centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[t];
        let pa = self.vertices[a];
        let pb = self.vertices[b];
        let pc = self.vertices[c];
        [(pa[0] + pb[0] + pc[0]) / 3.0, (pa[1] + pb[1] + pc[1]) / 3.0]
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn dirichlet_sides(&self) -> &[Side] {
        &self.dirichlet_sides
    }

    pub fn is_dirichlet_vertex(&self, v: usize) -> bool {
        self.dirichlet_vertex[v]
    }

    pub fn n_dirichlet_edges(&self) -> usize {
        self.boundary_edges
            .iter()
            .filter(|e| e.tag == BoundaryTag::Dirichlet)
            .count()
    }

    pub fn n_neumann_edges(&self) -> usize {
        self.boundary_edges.len() - self.n_dirichlet_edges()
    }

    /// Half of the bandwidth of any P1 assembly under the lexicographic
    /// numbering: couplings reach at most one grid row plus one column away.
    pub fn band_half_width(&self) -> usize {
        self.nx + 2
    }

    fn side_vertices(&self, side: Side) -> Vec<usize> {
        let nvx = self.nx + 1;
        match side {
            Side::Left => (0..=self.ny).map(|j| j * nvx).collect(),
            Side::Right => (0..=self.ny).map(|j| j * nvx + self.nx).collect(),
            Side::Bottom => (0..=self.nx).collect(),
            Side::Top => (0..=self.nx).map(|i| self.ny * nvx + i).collect(),
        }
    }

    /// Dirichlet segments in canonical side order. Each Dirichlet vertex is
    /// assigned to exactly one segment; a corner shared by two Dirichlet
    /// sides belongs to the earlier side in the canonical order.
    pub fn dirichlet_segments(&self) -> Vec<(Side, Vec<usize>)> {
        let mut claimed = vec![false; self.n_vertices()];
        let mut segments = Vec::new();
        for &side in &self.dirichlet_sides {
            let mut seg = Vec::new();
            for v in self.side_vertices(side) {
                if !claimed[v] {
                    claimed[v] = true;
                    seg.push(v);
                }
            }
            segments.push((side, seg));
        }
        segments
    }

    /// Trapezoid-rule weights of the boundary: b_v = sum over boundary edges
    /// containing v of half the edge length. `sum(b_v * w_v)` is the
    /// boundary integral of a vertex field `w` over all of the boundary.
    pub fn boundary_lumped_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.n_vertices()];
        for e in &self.boundary_edges {
            let half = 0.5 * self.edge_length(e);
            w[e.vertices.0] += half;
            w[e.vertices.1] += half;
        }
        w
    }

    pub fn edge_length(&self, e: &BoundaryEdge) -> f64 {
        let a = self.vertices[e.vertices.0];
        let b = self.vertices[e.vertices.1];
        ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
    }

    /// Lumped P1 mass: m_v = sum of |T|/3 over triangles containing v.
    /// Sums to the exact domain area.
    pub fn lumped_mass(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n_vertices()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let third = self.tri_area[t] / 3.0;
            for &v in tri {
                m[v] += third;
            }
        }
        m
    }
}

/// Vertex-valued scalar field over a mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<Self, MeshError> {
        if values.len() != mesh.n_vertices() {
            return Err(MeshError::SizeMismatch {
                expected: mesh.n_vertices(),
                got: values.len(),
            });
        }
        Ok(Field { values })
    }

    pub fn constant(mesh: &Mesh, value: f64) -> Self {
        Field {
            values: vec![value; mesh.n_vertices()],
        }
    }

    pub fn from_fn(mesh: &Mesh, f: impl Fn(f64, f64) -> f64) -> Self {
        Field {
            values: mesh.vertices().iter().map(|p| f(p[0], p[1])).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_finite(&self) -> Result<(), MeshError> {
        for (i, v) in self.values.iter().enumerate() {
            if !v.is_finite() {
                return Err(MeshError::NonFinite { index: i });
            }
        }
        Ok(())
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn max_norm_diff(a: &Field, b: &Field) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        a.values
            .iter()
            .zip(&b.values)
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
    }

    /// Mean of the three vertex values per triangle; equals the centroid
    /// value of the P1 interpolant.
    pub fn triangle_means(&self, mesh: &Mesh) -> Vec<f64> {
        mesh.triangles()
            .iter()
            .map(|t| (self.values[t[0]] + self.values[t[1]] + self.values[t[2]]) / 3.0)
            .collect()
    }
}

/// Constant gradient of the P1 interpolant on each triangle.
pub fn gradient_per_triangle(mesh: &Mesh, field: &Field) -> Result<Vec<[f64; 2]>, MeshError> {
    if field.len() != mesh.n_vertices() {
        return Err(MeshError::SizeMismatch {
            expected: mesh.n_vertices(),
            got: field.len(),
        });
    }
    let mut grads = Vec::with_capacity(mesh.n_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let g = mesh.basis_gradients(t);
        let mut gx = 0.0;
        let mut gy = 0.0;
        for a in 0..3 {
            let z = field.values[tri[a]];
            gx += z * g[a][0];
            gy += z * g[a][1];
        }
        grads.push([gx, gy]);
    }
    Ok(grads)
}

/// Centroid-rule volume integral of a per-triangle quantity, summed in
/// triangle order.
pub fn integrate_volume(mesh: &Mesh, per_triangle: &[f64]) -> Result<f64, MeshError> {
    if per_triangle.len() != mesh.n_triangles() {
        return Err(MeshError::SizeMismatch {
            expected: mesh.n_triangles(),
            got: per_triangle.len(),
        });
    }
    let mut total = 0.0;
    for (t, v) in per_triangle.iter().enumerate() {
        total += mesh.triangle_area(t) * v;
    }
    Ok(total)
}

/// Trapezoid-rule boundary integral of a vertex field over edges matching
/// `tag` (or all boundary edges when `tag` is `None`), summed in edge order.
pub fn integrate_boundary(
    mesh: &Mesh,
    per_vertex: &[f64],
    tag: Option<BoundaryTag>,
) -> Result<f64, MeshError> {
    if per_vertex.len() != mesh.n_vertices() {
        return Err(MeshError::SizeMismatch {
            expected: mesh.n_vertices(),
            got: per_vertex.len(),
        });
    }
    let mut total = 0.0;
    for e in mesh.boundary_edges() {
        if tag.is_some() && tag != Some(e.tag) {
            continue;
        }
        let len = mesh.edge_length(e);
        total += 0.5 * len * (per_vertex[e.vertices.0] + per_vertex[e.vertices.1]);
    }
    Ok(total)
}
