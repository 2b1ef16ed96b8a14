//! Structured triangulations of axis-aligned rectangles with oriented edge
//! topology.
//!
//! Every grid cell is split along its bottom-left to top-right diagonal.
//! Each edge stores an owner element `T_m` and, for interior edges, a
//! neighbor `T_n`; the unit normal points from the owner into the neighbor,
//! and outward on the boundary. Jumps and averages follow that orientation:
//! `[v] = v|T_m - v|T_n`, `{v} = (v|T_m + v|T_n) / 2`, and both reduce to
//! the owner trace on boundary edges.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::space::quadrature::EdgeRule;

pub type Point = [f64; 2];

/// Diagonal used to split each grid cell. Recorded in run metadata.
pub const DIAGONAL_PATTERN: &str = "bottom-left to top-right";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rectangle {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rectangle {
    pub const UNIT_SQUARE: Rectangle = Rectangle {
        x0: 0.0,
        x1: 1.0,
        y0: 0.0,
        y1: 1.0,
    };

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundarySide {
    Bottom,
    Right,
    Top,
    Left,
}

#[derive(Debug, Clone)]
pub struct Edge {
    /// Endpoints, ordered counter-clockwise with respect to the owner.
    pub vertices: [usize; 2],
    pub length: f64,
    /// Unit normal, pointing from `owner` into `neighbor` (outward on the boundary).
    pub normal: [f64; 2],
    pub owner: usize,
    /// Local edge index of this edge in the owner element.
    pub owner_local: usize,
    pub neighbor: Option<usize>,
    pub boundary: Option<BoundarySide>,
    pub midpoint: Point,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.neighbor.is_none()
    }
}

/// Affine map `x = origin + jacobian * xi` from the reference triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub origin: Point,
    /// Column-major: `jacobian[c]` is the image of the c-th reference axis.
    pub jacobian: [[f64; 2]; 2],
    /// `inv_jacobian[r][c]` is row r, column c of the inverse.
    pub inv_jacobian: [[f64; 2]; 2],
    pub det: f64,
    pub area: f64,
    pub diameter: f64,
    pub inscribed_diameter: f64,
    pub centroid: Point,
}

impl ElementGeometry {
    pub fn new(a: Point, b: Point, c: Point) -> Self {
        let j0 = [b[0] - a[0], b[1] - a[1]];
        let j1 = [c[0] - a[0], c[1] - a[1]];
        let det = j0[0] * j1[1] - j1[0] * j0[1];
        let inv = [[j1[1] / det, -j1[0] / det], [-j0[1] / det, j0[0] / det]];
        let lab = dist(a, b);
        let lbc = dist(b, c);
        let lca = dist(c, a);
        let area = 0.5 * det.abs();
        let semiperimeter = 0.5 * (lab + lbc + lca);
        ElementGeometry {
            origin: a,
            jacobian: [j0, j1],
            inv_jacobian: inv,
            det,
            area,
            diameter: lab.max(lbc).max(lca),
            inscribed_diameter: 2.0 * area / semiperimeter,
            centroid: [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0],
        }
    }

    pub fn map(&self, xi: Point) -> Point {
        [
            self.origin[0] + self.jacobian[0][0] * xi[0] + self.jacobian[1][0] * xi[1],
            self.origin[1] + self.jacobian[0][1] * xi[0] + self.jacobian[1][1] * xi[1],
        ]
    }

    pub fn inverse_map(&self, x: Point) -> Point {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        [
            self.inv_jacobian[0][0] * d[0] + self.inv_jacobian[0][1] * d[1],
            self.inv_jacobian[1][0] * d[0] + self.inv_jacobian[1][1] * d[1],
        ]
    }

    /// Physical gradient from a reference gradient: `J^{-T} g`.
    pub fn push_gradient(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv_jacobian[0][0] * g[0] + self.inv_jacobian[1][0] * g[1],
            self.inv_jacobian[0][1] * g[0] + self.inv_jacobian[1][1] * g[1],
        ]
    }

    /// `h_T / rho_T`.
    pub fn shape_ratio(&self) -> f64 {
        self.diameter / self.inscribed_diameter
    }
}

fn dist(a: Point, b: Point) -> f64 {
    ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    /// `element_edges[t][l]` is the edge joining local vertices `l` and `l + 1`.
    pub element_edges: Vec<[usize; 3]>,
    pub geometry: Vec<ElementGeometry>,
    pub domain: Rectangle,
    pub subdivisions: usize,
}

/// One quadrature point on an edge with the reference coordinates of the
/// same physical point in both adjacent elements.
#[derive(Debug, Clone, Copy)]
pub struct EdgeQuadPoint {
    pub x: Point,
    /// Quadrature weight scaled by the edge length.
    pub weight: f64,
    pub owner_ref: Point,
    pub neighbor_ref: Option<Point>,
}

#[derive(Debug, Clone)]
pub struct EdgeFrame {
    pub points: Vec<EdgeQuadPoint>,
}

impl Mesh {
    /// Uniform `n x n` grid of `domain`, each cell cut along its
    /// bottom-left to top-right diagonal into `2 n^2` triangles.
    pub fn uniform(n: usize, domain: Rectangle) -> Result<Mesh> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "mesh needs at least one subdivision per side".into(),
            ));
        }
        if !(domain.x1 > domain.x0 && domain.y1 > domain.y0) {
            return Err(Error::InvalidArgument(format!("degenerate domain {domain:?}")));
        }
        let dx = (domain.x1 - domain.x0) / n as f64;
        let dy = (domain.y1 - domain.y0) / n as f64;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                let x = if i == n { domain.x1 } else { domain.x0 + i as f64 * dx };
                let y = if j == n { domain.y1 } else { domain.y0 + j as f64 * dy };
                vertices.push([x, y]);
            }
        }
        let vid = |i: usize, j: usize| j * (n + 1) + i;
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let v00 = vid(i, j);
                let v10 = vid(i + 1, j);
                let v01 = vid(i, j + 1);
                let v11 = vid(i + 1, j + 1);
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
        Self::from_triangles(vertices, triangles, domain, n)
    }

    /// Builds edge topology and geometry for a triangulation of `domain`.
    /// Triangles must be counter-clockwise.
    pub fn from_triangles(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        domain: Rectangle,
        subdivisions: usize,
    ) -> Result<Mesh> {
        let mut geometry = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let g = ElementGeometry::new(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if g.det <= 0.0 {
                return Err(Error::InvalidArgument(format!("triangle {t} is not counter-clockwise")));
            }
            geometry.push(g);
        }

        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut element_edges = vec![[usize::MAX; 3]; triangles.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for l in 0..3 {
                let a = tri[l];
                let b = tri[(l + 1) % 3];
                let key = (a.min(b), a.max(b));
                match lookup.get(&key) {
                    Some(&e) => {
                        let edge = &mut edges[e];
                        if edge.neighbor.is_some() {
                            return Err(Error::InvalidArgument(format!(
                                "edge {key:?} shared by more than two triangles"
                            )));
                        }
                        edge.neighbor = Some(t);
                        element_edges[t][l] = e;
                    }
                    None => {
                        let pa = vertices[a];
                        let pb = vertices[b];
                        let length = dist(pa, pb);
                        let normal = [(pb[1] - pa[1]) / length, -(pb[0] - pa[0]) / length];
                        let e = edges.len();
                        edges.push(Edge {
                            vertices: [a, b],
                            length,
                            normal,
                            owner: t,
                            owner_local: l,
                            neighbor: None,
                            boundary: None,
                            midpoint: [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])],
                        });
                        lookup.insert(key, e);
                        element_edges[t][l] = e;
                    }
                }
            }
        }
        let tol = 1e-12 * (domain.x1 - domain.x0).max(domain.y1 - domain.y0);
        for edge in edges.iter_mut().filter(|e| e.neighbor.is_none()) {
            let m = edge.midpoint;
            edge.boundary = Some(if (m[1] - domain.y0).abs() < tol {
                BoundarySide::Bottom
            } else if (m[0] - domain.x1).abs() < tol {
                BoundarySide::Right
            } else if (m[1] - domain.y1).abs() < tol {
                BoundarySide::Top
            } else if (m[0] - domain.x0).abs() < tol {
                BoundarySide::Left
            } else {
                return Err(Error::InvalidArgument(format!(
                    "boundary edge at {m:?} is not on the domain boundary"
                )));
            });
        }
        Ok(Mesh {
            vertices,
            triangles,
            edges,
            element_edges,
            geometry,
            domain,
            subdivisions,
        })
    }

    pub fn n_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_interior_edges(&self) -> usize {
        self.edges.iter().filter(|e| !e.is_boundary()).count()
    }

    pub fn element_diameters(&self) -> impl Iterator<Item = f64> + '_ {
        self.geometry.iter().map(|g| g.diameter)
    }

    pub fn inscribed_diameters(&self) -> impl Iterator<Item = f64> + '_ {
        self.geometry.iter().map(|g| g.inscribed_diameter)
    }

    /// Maximum element diameter.
    pub fn mesh_size(&self) -> f64 {
        self.element_diameters().fold(0.0, f64::max)
    }

    /// Grid cell width in x; the `h` reported in convergence tables.
    pub fn cell_width(&self) -> f64 {
        (self.domain.x1 - self.domain.x0) / self.subdivisions as f64
    }

    /// `max_T h_T / rho_T`.
    pub fn regularity(&self) -> f64 {
        self.geometry.iter().map(|g| g.shape_ratio()).fold(0.0, f64::max)
    }

    /// Per-edge quadrature frames for evaluating traces, jumps and averages.
    pub fn jump_average_frames(&self, rule: &EdgeRule) -> Vec<EdgeFrame> {
        self.edges
            .iter()
            .map(|edge| {
                let pa = self.vertices[edge.vertices[0]];
                let pb = self.vertices[edge.vertices[1]];
                let owner = &self.geometry[edge.owner];
                let neighbor = edge.neighbor.map(|n| &self.geometry[n]);
                let points = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&s, &w)| {
                        let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                        EdgeQuadPoint {
                            x,
                            weight: w * edge.length,
                            owner_ref: owner.inverse_map(x),
                            neighbor_ref: neighbor.map(|g| g.inverse_map(x)),
                        }
                    })
                    .collect();
                EdgeFrame { points }
            })
            .collect()
    }

    /// Element containing `x`, preferring the lowest index on shared edges.
    pub fn locate(&self, x: Point) -> Option<usize> {
        let n = self.subdivisions;
        let d = &self.domain;
        let fx = (x[0] - d.x0) / (d.x1 - d.x0) * n as f64;
        let fy = (x[1] - d.y0) / (d.y1 - d.y0) * n as f64;
        let tol = 1e-12;
        if fx < -tol || fy < -tol || fx > n as f64 + tol || fy > n as f64 + tol {
            return None;
        }
        if self.triangles.len() == 2 * n * n {
            // structured grid: check the cell and its neighbors
            let ci = (fx.floor().max(0.0) as usize).min(n - 1);
            let cj = (fy.floor().max(0.0) as usize).min(n - 1);
            let mut candidates = Vec::with_capacity(18);
            for j in cj.saturating_sub(1)..=(cj + 1).min(n - 1) {
                for i in ci.saturating_sub(1)..=(ci + 1).min(n - 1) {
                    let c = j * n + i;
                    candidates.push(2 * c);
                    candidates.push(2 * c + 1);
                }
            }
            candidates.sort_unstable();
            if let Some(t) = candidates.into_iter().find(|&t| self.contains(t, x)) {
                return Some(t);
            }
        }
        (0..self.n_elements()).find(|&t| self.contains(t, x))
    }

    fn contains(&self, t: usize, x: Point) -> bool {
        let xi = self.geometry[t].inverse_map(x);
        let tol = 1e-12;
        xi[0] >= -tol && xi[1] >= -tol && xi[0] + xi[1] <= 1.0 + tol
    }

    /// Legacy-VTK unstructured grid of the triangulation.
    pub fn write_vtk<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# vtk DataFile Version 3.0")?;
        writeln!(w, "dgns mesh")?;
        writeln!(w, "ASCII")?;
        writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
        writeln!(w, "POINTS {} double", self.vertices.len())?;
        for v in &self.vertices {
            writeln!(w, "{} {} 0", v[0], v[1])?;
        }
        writeln!(w, "CELLS {} {}", self.n_elements(), 4 * self.n_elements())?;
        for t in &self.triangles {
            writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        writeln!(w, "CELL_TYPES {}", self.n_elements())?;
        for _ in &self.triangles {
            writeln!(w, "5")?;
        }
        Ok(())
    }
}
