//! Straight-line periodic layouts of torus graphs.
//!
//! A layout places points in a fundamental domain of a plane lattice and
//! draws each edge as a segment from a point to a lattice translate of
//! another point. From that data the combinatorial triangulation (rotation
//! system and faces) and the affine symmetries of the picture are derived
//! mechanically.

use crate::triangulation::{Dart, Edge, Triangulation, TriangulationError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("edge {0}: endpoint is not a lattice translate of any point")]
    DanglingEdge(String),
    #[error("face starting at edge {0} has {1} sides; the layout is not a triangulation")]
    NotTriangle(String, usize),
    #[error("degenerate lattice basis")]
    DegenerateBasis,
    #[error(transparent)]
    Triangulation(#[from] TriangulationError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutEdge {
    pub label: String,
    pub tail: usize,
    pub head: usize,
    /// Lattice translation of the head, in basis coordinates.
    pub offset: [i64; 2],
    pub graph: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub basis: [[f64; 2]; 2],
    pub points: Vec<(String, [f64; 2])>,
    pub edges: Vec<LayoutEdge>,
}

/// An affine map of the plane preserving a layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Symmetry {
    pub linear: [[f64; 2]; 2],
    pub translation: [f64; 2],
    pub orientation_reversing: bool,
    pub point_map: Vec<usize>,
    /// Image of each edge (edge, same direction), `None` when the image is
    /// not an edge of the layout.
    pub edge_map: Vec<Option<(usize, bool)>>,
}

impl Symmetry {
    /// Maps every edge, not just graph edges.
    pub fn preserves_triangulation(&self) -> bool {
        self.edge_map.iter().all(Option::is_some)
    }

    pub fn is_identity(&self) -> bool {
        self.point_map.iter().enumerate().all(|(i, &j)| i == j)
            && self.edge_map.iter().enumerate().all(|(i, m)| *m == Some((i, true)))
    }
}

impl Layout {
    pub fn new(basis: [[f64; 2]; 2]) -> Self {
        Layout { basis, points: Vec::new(), edges: Vec::new() }
    }

    pub fn point(&mut self, label: &str, pos: [f64; 2]) -> usize {
        self.points.push((label.to_string(), pos));
        self.points.len() - 1
    }

    /// Add the segment from point `tail` to plane position `to`, which must
    /// be a lattice translate of some point.
    pub fn edge(&mut self, label: &str, tail: usize, to: [f64; 2], graph: bool) -> Result<usize, GeometryError> {
        let (head, offset) = self
            .locate(to)
            .ok_or_else(|| GeometryError::DanglingEdge(label.to_string()))?;
        self.edges.push(LayoutEdge { label: label.to_string(), tail, head, offset, graph });
        Ok(self.edges.len() - 1)
    }

    /// Convenience: edge given by its displacement vector.
    pub fn edge_by(&mut self, label: &str, tail: usize, v: [f64; 2], graph: bool) -> Result<usize, GeometryError> {
        let p = self.points[tail].1;
        self.edge(label, tail, [p[0] + v[0], p[1] + v[1]], graph)
    }

    fn to_basis(&self, v: [f64; 2]) -> [f64; 2] {
        let [a, b] = self.basis;
        let det = a[0] * b[1] - a[1] * b[0];
        [(v[0] * b[1] - v[1] * b[0]) / det, (a[0] * v[1] - a[1] * v[0]) / det]
    }

    fn lattice_vector(&self, n: [i64; 2]) -> [f64; 2] {
        let [a, b] = self.basis;
        [n[0] as f64 * a[0] + n[1] as f64 * b[0], n[0] as f64 * a[1] + n[1] as f64 * b[1]]
    }

    fn integral(x: [f64; 2]) -> Option<[i64; 2]> {
        let r = [x[0].round(), x[1].round()];
        ((x[0] - r[0]).abs() < EPS && (x[1] - r[1]).abs() < EPS).then_some([r[0] as i64, r[1] as i64])
    }

    /// The point `p` and lattice vector `n` with `pos(p) + n = x`.
    pub fn locate(&self, x: [f64; 2]) -> Option<(usize, [i64; 2])> {
        self.points.iter().enumerate().find_map(|(i, (_, p))| {
            Self::integral(self.to_basis([x[0] - p[0], x[1] - p[1]])).map(|n| (i, n))
        })
    }

    pub fn edge_vector(&self, e: usize) -> [f64; 2] {
        let ed = &self.edges[e];
        let t = self.points[ed.tail].1;
        let h = self.points[ed.head].1;
        let o = self.lattice_vector(ed.offset);
        [h[0] + o[0] - t[0], h[1] + o[1] - t[1]]
    }

    fn dart_vector(&self, d: Dart) -> [f64; 2] {
        let v = self.edge_vector(d.edge);
        if d.forward {
            v
        } else {
            [-v[0], -v[1]]
        }
    }

    fn dart_tail(&self, d: Dart) -> usize {
        let e = &self.edges[d.edge];
        if d.forward {
            e.tail
        } else {
            e.head
        }
    }

    pub fn graph_edges(&self) -> Vec<usize> {
        (0..self.edges.len()).filter(|&e| self.edges[e].graph).collect()
    }

    /// Build the triangulation whose faces are the faces of the drawing.
    pub fn triangulation(&self) -> Result<Triangulation, GeometryError> {
        let np = self.points.len();
        // darts around each point sorted counter-clockwise by angle
        let mut around: Vec<Vec<(f64, Dart)>> = vec![Vec::new(); np];
        for e in 0..self.edges.len() {
            for fwd in [true, false] {
                let d = Dart::new(e, fwd);
                let v = self.dart_vector(d);
                around[self.dart_tail(d)].push((v[1].atan2(v[0]), d));
            }
        }
        for a in &mut around {
            a.sort_by(|x, y| x.0.total_cmp(&y.0));
        }
        let cw_next = |d: Dart| -> Dart {
            let a = &around[self.dart_tail(d)];
            let i = a.iter().position(|x| x.1 == d).unwrap();
            a[(i + a.len() - 1) % a.len()].1
        };
        let mut used = vec![false; 2 * self.edges.len()];
        let idx = |d: Dart| 2 * d.edge + usize::from(!d.forward);
        let mut triangles = Vec::new();
        for e in 0..self.edges.len() {
            for fwd in [true, false] {
                let start = Dart::new(e, fwd);
                if used[idx(start)] {
                    continue;
                }
                let mut face = vec![start];
                let mut d = cw_next(start.rev());
                while d != start {
                    face.push(d);
                    if face.len() > 3 {
                        break;
                    }
                    d = cw_next(d.rev());
                }
                if face.len() != 3 {
                    return Err(GeometryError::NotTriangle(self.edges[e].label.clone(), face.len()));
                }
                for d in &face {
                    used[idx(*d)] = true;
                }
                triangles.push([face[0], face[1], face[2]]);
            }
        }
        let vertices = self.points.iter().map(|p| p.0.clone()).collect();
        let edges = self
            .edges
            .iter()
            .map(|e| Edge { label: e.label.clone(), tail: e.tail, head: e.head, offset: e.offset })
            .collect();
        Ok(Triangulation::new(1, vertices, edges, triangles)?)
    }

    /// Find the edge drawn from point `p` (with any lattice shift) along `v`.
    fn find_edge(&self, p: usize, v: [f64; 2]) -> Option<(usize, bool)> {
        (0..self.edges.len()).find_map(|e| {
            for fwd in [true, false] {
                let d = Dart::new(e, fwd);
                let w = self.dart_vector(d);
                if self.dart_tail(d) == p && (w[0] - v[0]).abs() < EPS && (w[1] - v[1]).abs() < EPS {
                    return Some((e, fwd));
                }
            }
            None
        })
    }

    /// All affine symmetries mapping points to points and graph edges to
    /// graph edges, identity first.
    pub fn symmetries(&self) -> Vec<Symmetry> {
        let mut out = Vec::new();
        if self.points.is_empty() {
            return out;
        }
        for k in 0..24 {
            let theta = std::f64::consts::PI * (k % 12) as f64 / 6.0;
            let (s, c) = theta.sin_cos();
            let reflect = k >= 12;
            // rotation by theta, or reflection across the line at angle theta/2
            let m = if reflect { [[c, s], [s, -c]] } else { [[c, -s], [s, c]] };
            let apply = |v: [f64; 2]| [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]];
            if !self.basis.iter().all(|b| Self::integral(self.to_basis(apply(*b))).is_some()) {
                continue;
            }
            let p0 = apply(self.points[0].1);
            for target in 0..self.points.len() {
                let q = self.points[target].1;
                let t = [q[0] - p0[0], q[1] - p0[1]];
                let image = |x: [f64; 2]| {
                    let y = apply(x);
                    [y[0] + t[0], y[1] + t[1]]
                };
                let point_map: Option<Vec<usize>> =
                    self.points.iter().map(|(_, p)| self.locate(image(*p)).map(|(i, _)| i)).collect();
                let Some(point_map) = point_map else { continue };
                let mut seen = vec![false; point_map.len()];
                if point_map.iter().any(|&i| std::mem::replace(&mut seen[i], true)) {
                    continue;
                }
                let edge_map: Vec<Option<(usize, bool)>> = (0..self.edges.len())
                    .map(|e| self.find_edge(point_map[self.edges[e].tail], apply(self.edge_vector(e))))
                    .collect();
                let graph_ok = self.edges.iter().enumerate().all(|(e, ed)| {
                    !ed.graph || matches!(edge_map[e], Some((f, _)) if self.edges[f].graph)
                });
                if !graph_ok {
                    continue;
                }
                let sym = Symmetry {
                    linear: m,
                    translation: t,
                    orientation_reversing: reflect,
                    point_map,
                    edge_map,
                };
                if !out.iter().any(|o: &Symmetry| o.point_map == sym.point_map && o.edge_map == sym.edge_map) {
                    out.push(sym);
                }
            }
        }
        if let Some(i) = out.iter().position(Symmetry::is_identity) {
            out.swap(0, i);
        }
        out
    }
}
