//! Structured quadrilateral mesh of the edge-cracked plate.
//!
//! The plate is `[0, width] × [0, height]`; the crack occupies
//! `0 ≤ x ≤ crack_length` on `y = 0` and only the upper half of the symmetric
//! body is meshed. Boundary edges carry one of five tags:
//!
//! ```text
//!             Γ3 (Top)
//!        +----------------+
//!   Γ4   |                |  Γ0
//!  (Left)|                | (Right)
//!        +-------x--------+
//!          Γ1      Γ2
//!        (Crack) (Ligament)
//! ```
//!
//! Node `(i, j)` has index `j * (nx + 1) + i`; elements are counterclockwise.

use crate::error::{Error, Result};

/// Maximum mismatch between the two element widths meeting at the crack tip.
pub const MAX_SNAP_DISTORTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    /// Γ0, traction free.
    Right,
    /// Γ1, crack face, traction free.
    Crack,
    /// Γ2, ligament ahead of the tip, `u_y = 0`.
    BottomLigament,
    /// Γ3, loaded edge.
    Top,
    /// Γ4, `u_x = 0`.
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub element: usize,
    /// 0 bottom, 1 right, 2 top, 3 left.
    pub local_edge: usize,
    pub tag: BoundaryTag,
}

/// Local node pairs of the four element edges.
pub const EDGE_NODES: [[usize; 2]; 4] = [[0, 1], [1, 2], [2, 3], [3, 0]];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateGeometry {
    pub width: f64,
    pub height: f64,
    pub crack_length: f64,
    pub nx: usize,
    pub ny: usize,
    pub grading: f64,
}

impl Default for PlateGeometry {
    fn default() -> Self {
        PlateGeometry {
            width: 2.0,
            height: 1.0,
            crack_length: 1.0,
            nx: 64,
            ny: 32,
            grading: 4.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuadMesh {
    pub nodes: Vec<[f64; 2]>,
    pub elements: Vec<[usize; 4]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub crack_tip: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    pub width: f64,
    pub height: f64,
    pub crack_length: f64,
    /// Column and row coordinates of the tensor grid.
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Largest element diameter.
    pub h: f64,
}

/// Cell sizes of a geometric progression over `length` with `n` cells,
/// smallest first, successive ratio `grading^(1/n)`.
pub fn graded_sizes(length: f64, n: usize, grading: f64) -> Vec<f64> {
    let q = grading.powf(1.0 / n as f64);
    let raw: Vec<f64> = (0..n).map(|k| q.powi(k as i32)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|r| r * length / total).collect()
}

fn accumulate(start: f64, sizes: impl Iterator<Item = f64>, end: f64) -> Vec<f64> {
    let mut out = vec![start];
    let mut x = start;
    for s in sizes {
        x += s;
        out.push(x);
    }
    *out.last_mut().unwrap() = end;
    out
}

impl QuadMesh {
    pub fn from_geometry(g: &PlateGeometry) -> Result<Self> {
        build_plate_mesh(g.width, g.height, g.crack_length, g.nx, g.ny, g.grading)
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_dofs(&self) -> usize {
        2 * self.nodes.len()
    }

    pub fn element_coords(&self, e: usize) -> [[f64; 2]; 4] {
        let c = &self.elements[e];
        [self.nodes[c[0]], self.nodes[c[1]], self.nodes[c[2]], self.nodes[c[3]]]
    }

    /// Global dof indices of an element, `[u0x, u0y, u1x, ...]`.
    pub fn element_dofs(&self, e: usize) -> [usize; 8] {
        let c = &self.elements[e];
        let mut d = [0; 8];
        for a in 0..4 {
            d[2 * a] = 2 * c[a];
            d[2 * a + 1] = 2 * c[a] + 1;
        }
        d
    }

    pub fn edge_nodes(&self, edge: &BoundaryEdge) -> [usize; 2] {
        let c = &self.elements[edge.element];
        let [a, b] = EDGE_NODES[edge.local_edge];
        [c[a], c[b]]
    }

    pub fn edge_length(&self, edge: &BoundaryEdge) -> f64 {
        let [a, b] = self.edge_nodes(edge);
        let (p, q) = (self.nodes[a], self.nodes[b]);
        ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt()
    }

    pub fn edges_with_tag(&self, tag: BoundaryTag) -> impl Iterator<Item = &BoundaryEdge> {
        self.boundary_edges.iter().filter(move |e| e.tag == tag)
    }

    /// Sorted, deduplicated node set of all edges carrying `tag`.
    pub fn nodes_with_tag(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .edges_with_tag(tag)
            .flat_map(|e| self.edge_nodes(e))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Nodes on the outer boundary, sorted.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .boundary_edges
            .iter()
            .flat_map(|e| self.edge_nodes(e))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Node indices on `y = 0`, ordered by x.
    pub fn bottom_nodes(&self) -> Vec<usize> {
        (0..=self.nx).map(|i| self.node_index(i, 0)).collect()
    }

    pub fn crack_tip_node(&self) -> Option<usize> {
        self.bottom_nodes()
            .into_iter()
            .find(|&n| self.nodes[n][0] == self.crack_length)
    }

    /// Column index of the tip, when the crack is present.
    fn tip_column(&self) -> Option<usize> {
        self.xs.iter().position(|&x| x == self.crack_length)
    }

    pub fn min_element_width(&self) -> f64 {
        self.xs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    pub fn max_element_width(&self) -> f64 {
        self.xs.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Constraints of the half model: `u_x = 0` on Γ4, `u_y = 0` on Γ2.
    /// Crack-face nodes stay free; the tip belongs to the ligament.
    pub fn dirichlet_dofs(&self) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = self
            .nodes_with_tag(BoundaryTag::Left)
            .into_iter()
            .map(|n| (2 * n, 0.0))
            .chain(
                self.nodes_with_tag(BoundaryTag::BottomLigament)
                    .into_iter()
                    .map(|n| (2 * n + 1, 0.0)),
            )
            .collect();
        out.sort_by_key(|&(d, _)| d);
        out.dedup_by_key(|&mut (d, _)| d);
        out
    }

    /// Mesh summary for `mesh-info`.
    pub fn summary(&self) -> String {
        let count = |t| self.edges_with_tag(t).count();
        format!(
            "nodes = {}\nelements = {}\ndofs = {}\nnx = {}\nny = {}\nwidth = {}\nheight = {}\ncrack_length = {}\ncrack_tip = ({}, {})\nh_max = {}\nh_min_x = {}\nedges.right = {}\nedges.crack = {}\nedges.ligament = {}\nedges.top = {}\nedges.left = {}\n",
            self.nodes.len(),
            self.elements.len(),
            self.num_dofs(),
            self.nx,
            self.ny,
            self.width,
            self.height,
            self.crack_length,
            self.crack_tip[0],
            self.crack_tip[1],
            self.h,
            self.min_element_width(),
            count(BoundaryTag::Right),
            count(BoundaryTag::Crack),
            count(BoundaryTag::BottomLigament),
            count(BoundaryTag::Top),
            count(BoundaryTag::Left),
        )
    }
}

/// Tensor-product mesh of the cracked plate, graded geometrically toward the
/// crack tip (columns) and toward `y = 0` (rows).
///
/// `crack_length = 0` gives the crack-free plate, in which the whole bottom
/// edge is ligament.
pub fn build_plate_mesh(
    width: f64,
    height: f64,
    crack_length: f64,
    nx: usize,
    ny: usize,
    grading: f64,
) -> Result<QuadMesh> {
    if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
        return Err(Error::Mesh(format!("plate dimensions must be positive, got {width} x {height}")));
    }
    if !(crack_length >= 0.0 && crack_length < width) {
        return Err(Error::Mesh(format!(
            "crack length must satisfy 0 <= a < width, got a = {crack_length}, width = {width}"
        )));
    }
    if nx < 2 || ny < 1 {
        return Err(Error::Mesh(format!("need nx >= 2 and ny >= 1, got {nx} x {ny}")));
    }
    if !(grading >= 1.0 && grading.is_finite()) {
        return Err(Error::Mesh(format!("grading must be >= 1, got {grading}")));
    }

    let xs = if crack_length == 0.0 {
        accumulate(0.0, graded_sizes(width, nx, grading).into_iter(), width)
    } else {
        let n_left = ((nx as f64 * crack_length / width).round() as usize).clamp(1, nx - 1);
        let n_right = nx - n_left;
        let left = graded_sizes(crack_length, n_left, grading);
        let right = graded_sizes(width - crack_length, n_right, grading);
        let mismatch = (left[0] / right[0] - 1.0).abs().max((right[0] / left[0] - 1.0).abs());
        if mismatch > MAX_SNAP_DISTORTION {
            return Err(Error::Mesh(format!(
                "crack length {crack_length} is not representable on a {nx}-column grid: \
                 tip elements differ by {:.0}% (limit {:.0}%)",
                100.0 * mismatch,
                100.0 * MAX_SNAP_DISTORTION
            )));
        }
        let mut xs = accumulate(0.0, left.into_iter().rev(), crack_length);
        xs.extend(accumulate(crack_length, right.into_iter(), width).into_iter().skip(1));
        xs
    };
    let ys = accumulate(0.0, graded_sizes(height, ny, grading).into_iter(), height);

    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for &y in &ys {
        for &x in &xs {
            nodes.push([x, y]);
        }
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;

    let mut elements = Vec::with_capacity(nx * ny);
    let mut h: f64 = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            elements.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            let dx = xs[i + 1] - xs[i];
            let dy = ys[j + 1] - ys[j];
            h = h.max((dx * dx + dy * dy).sqrt());
        }
    }

    let elem = |i: usize, j: usize| j * nx + i;
    let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        let tag = if xs[i + 1] <= crack_length {
            BoundaryTag::Crack
        } else {
            BoundaryTag::BottomLigament
        };
        boundary_edges.push(BoundaryEdge { element: elem(i, 0), local_edge: 0, tag });
    }
    for j in 0..ny {
        boundary_edges.push(BoundaryEdge { element: elem(nx - 1, j), local_edge: 1, tag: BoundaryTag::Right });
    }
    for i in 0..nx {
        boundary_edges.push(BoundaryEdge { element: elem(i, ny - 1), local_edge: 2, tag: BoundaryTag::Top });
    }
    for j in 0..ny {
        boundary_edges.push(BoundaryEdge { element: elem(0, j), local_edge: 3, tag: BoundaryTag::Left });
    }

    let mesh = QuadMesh {
        nodes,
        elements,
        boundary_edges,
        crack_tip: [crack_length, 0.0],
        nx,
        ny,
        width,
        height,
        crack_length,
        xs,
        ys,
        h,
    };
    debug_assert!(crack_length == 0.0 || mesh.tip_column().is_some());
    Ok(mesh)
}
