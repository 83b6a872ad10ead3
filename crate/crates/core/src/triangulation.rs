//! Combinatorial triangulations of closed orientable surfaces.
//!
//! A triangulation is a list of labeled edges and a list of triangles, each
//! triangle being three directed edges ("darts") in counter-clockwise order.
//! Loops and parallel edges are allowed; every edge occupies exactly two
//! triangle slots, once in each direction.
//!
//! Edges may carry an integer `offset` (the lattice translation picked up by
//! going from the tail lift to the head lift in the universal cover of a
//! torus). Offsets are optional bookkeeping: they let the crate lift a
//! triangulation to finite covers and compare edges geometrically.

use crate::weight::Weight;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TriangulationError {
    #[error("dart {0} is used {1} times (expected exactly once)")]
    DartMultiplicity(String, usize),
    #[error("triangle {0} does not close up: consecutive darts do not share a vertex")]
    OpenTriangle(usize),
    #[error("triangle {0} has non-zero total lattice offset")]
    OffsetMismatch(usize),
    #[error("Euler characteristic mismatch: V - E + F = {found}, expected {expected}")]
    Euler { found: i64, expected: i64 },
    #[error("edge {0} is self-adjacent (both slots in one triangle); flip undefined")]
    SelfAdjacent(String),
    #[error("unknown edge label {0:?}")]
    UnknownEdge(String),
    #[error("unknown vertex label {0:?}")]
    UnknownVertex(String),
    #[error("coordinate vector has {found} entries, triangulation has {expected} edges")]
    Dimension { found: usize, expected: usize },
    #[error("flip of edge {edge} produced negative coordinate; input violates triangle inequalities")]
    NegativeFlip { edge: String },
    #[error("triangle {triangle}: odd coordinate sum, interior weights are not integral")]
    Parity { triangle: usize },
    #[error("triangle {triangle}: triangle inequality violated, interior weight negative")]
    NegativeWeight { triangle: usize },
    #[error("malformed triangulation: {0}")]
    Malformed(String),
}

/// A directed edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Dart {
    pub edge: usize,
    pub forward: bool,
}

impl Dart {
    pub fn new(edge: usize, forward: bool) -> Self {
        Dart { edge, forward }
    }

    pub fn rev(self) -> Self {
        Dart { edge: self.edge, forward: !self.forward }
    }

    fn index(self) -> usize {
        2 * self.edge + usize::from(!self.forward)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub label: String,
    pub tail: usize,
    pub head: usize,
    #[serde(default)]
    pub offset: [i64; 2],
}

/// The quadrilateral around an edge: sides in counter-clockwise order,
/// starting with the side that leaves the head of the diagonal inside the
/// triangle where the diagonal points forward.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Quad {
    pub diagonal: usize,
    pub sides: [Dart; 4],
    pub triangles: [usize; 2],
}

impl Quad {
    pub fn side_edges(&self) -> [usize; 4] {
        self.sides.map(|d| d.edge)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Triangulation {
    genus: u32,
    vertices: Vec<String>,
    edges: Vec<Edge>,
    triangles: Vec<[Dart; 3]>,
    // (triangle, position) of each dart, indexed by `Dart::index`.
    loc: Vec<(usize, usize)>,
}

/// Serialized form: triangles are written as dart strings, `"5"` for the
/// forward direction of the edge labeled 5 and `"-5"` for its reverse.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TriangulationData {
    pub genus: u32,
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeData>,
    pub triangles: Vec<[String; 3]>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EdgeData {
    pub label: String,
    pub tail: String,
    pub head: String,
    #[serde(default)]
    pub offset: [i64; 2],
}

impl Triangulation {
    pub fn new(
        genus: u32,
        vertices: Vec<String>,
        edges: Vec<Edge>,
        triangles: Vec<[Dart; 3]>,
    ) -> Result<Self, TriangulationError> {
        let mut loc = vec![(usize::MAX, 0); 2 * edges.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for (p, d) in tri.iter().enumerate() {
                if d.edge >= edges.len() {
                    return Err(TriangulationError::Malformed(format!(
                        "triangle {t} references edge index {}",
                        d.edge
                    )));
                }
                if loc[d.index()].0 != usize::MAX {
                    return Err(TriangulationError::DartMultiplicity(dart_string(&edges, *d), 2));
                }
                loc[d.index()] = (t, p);
            }
        }
        for (i, l) in loc.iter().enumerate() {
            if l.0 == usize::MAX {
                let d = Dart::new(i / 2, i % 2 == 0);
                return Err(TriangulationError::DartMultiplicity(dart_string(&edges, d), 0));
            }
        }
        for e in &edges {
            if e.tail >= vertices.len() || e.head >= vertices.len() {
                return Err(TriangulationError::Malformed(format!(
                    "edge {} references a missing vertex",
                    e.label
                )));
            }
        }
        let tri = Triangulation { genus, vertices, edges, triangles, loc };
        for t in 0..tri.triangles.len() {
            let ds = tri.triangles[t];
            let mut off = [0i64; 2];
            for p in 0..3 {
                if tri.head(ds[p]) != tri.tail(ds[(p + 1) % 3]) {
                    return Err(TriangulationError::OpenTriangle(t));
                }
                let o = tri.dart_offset(ds[p]);
                off[0] += o[0];
                off[1] += o[1];
            }
            if off != [0, 0] {
                return Err(TriangulationError::OffsetMismatch(t));
            }
        }
        let chi = tri.vertices.len() as i64 - tri.edges.len() as i64 + tri.triangles.len() as i64;
        let expected = 2 - 2 * tri.genus as i64;
        if chi != expected {
            return Err(TriangulationError::Euler { found: chi, expected });
        }
        Ok(tri)
    }

    pub fn from_data(data: &TriangulationData) -> Result<Self, TriangulationError> {
        let vidx = |s: &str| {
            data.vertices
                .iter()
                .position(|v| v == s)
                .ok_or_else(|| TriangulationError::UnknownVertex(s.to_string()))
        };
        let mut edges = Vec::with_capacity(data.edges.len());
        for e in &data.edges {
            if e.label.starts_with('-') || e.label.is_empty() {
                return Err(TriangulationError::Malformed(format!("bad edge label {:?}", e.label)));
            }
            edges.push(Edge {
                label: e.label.clone(),
                tail: vidx(&e.tail)?,
                head: vidx(&e.head)?,
                offset: e.offset,
            });
        }
        let mut triangles = Vec::with_capacity(data.triangles.len());
        for t in &data.triangles {
            let mut ds = [Dart::new(0, true); 3];
            for (p, s) in t.iter().enumerate() {
                let (label, forward) = match s.strip_prefix('-') {
                    Some(rest) => (rest, false),
                    None => (s.as_str(), true),
                };
                let edge = edges
                    .iter()
                    .position(|e| e.label == label)
                    .ok_or_else(|| TriangulationError::UnknownEdge(label.to_string()))?;
                ds[p] = Dart::new(edge, forward);
            }
            triangles.push(ds);
        }
        Triangulation::new(data.genus, data.vertices.clone(), edges, triangles)
    }

    pub fn to_data(&self) -> TriangulationData {
        TriangulationData {
            genus: self.genus,
            vertices: self.vertices.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeData {
                    label: e.label.clone(),
                    tail: self.vertices[e.tail].clone(),
                    head: self.vertices[e.head].clone(),
                    offset: e.offset,
                })
                .collect(),
            triangles: self
                .triangles
                .iter()
                .map(|t| t.map(|d| dart_string(&self.edges, d)))
                .collect(),
        }
    }

    pub fn genus(&self) -> u32 {
        self.genus
    }

    pub fn num_points(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertex_labels(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn triangles(&self) -> &[[Dart; 3]] {
        &self.triangles
    }

    pub fn label(&self, e: usize) -> &str {
        &self.edges[e].label
    }

    pub fn edge_index(&self, label: &str) -> Result<usize, TriangulationError> {
        self.edges
            .iter()
            .position(|e| e.label == label)
            .ok_or_else(|| TriangulationError::UnknownEdge(label.to_string()))
    }

    pub fn vertex_index(&self, label: &str) -> Result<usize, TriangulationError> {
        self.vertices
            .iter()
            .position(|v| v == label)
            .ok_or_else(|| TriangulationError::UnknownVertex(label.to_string()))
    }

    /// `3(n + 2g - 2)`.
    pub fn expected_edge_count(&self) -> usize {
        3 * (self.vertices.len() + 2 * self.genus as usize - 2)
    }

    pub fn tail(&self, d: Dart) -> usize {
        let e = &self.edges[d.edge];
        if d.forward {
            e.tail
        } else {
            e.head
        }
    }

    pub fn head(&self, d: Dart) -> usize {
        self.tail(d.rev())
    }

    pub fn dart_offset(&self, d: Dart) -> [i64; 2] {
        let o = self.edges[d.edge].offset;
        if d.forward {
            o
        } else {
            [-o[0], -o[1]]
        }
    }

    /// Triangle and position holding dart `d`.
    pub fn locate(&self, d: Dart) -> (usize, usize) {
        self.loc[d.index()]
    }

    /// The two triangle slots of an edge: (forward slot, reverse slot).
    pub fn edge_slots(&self, e: usize) -> [(usize, usize); 2] {
        [self.locate(Dart::new(e, true)), self.locate(Dart::new(e, false))]
    }

    /// Next dart counter-clockwise around the tail of `d`.
    pub fn ccw_next(&self, d: Dart) -> Dart {
        let (t, p) = self.locate(d);
        self.triangles[t][(p + 2) % 3].rev()
    }

    /// Next dart clockwise around the tail of `d`.
    pub fn cw_next(&self, d: Dart) -> Dart {
        let (t, p) = self.locate(d.rev());
        self.triangles[t][(p + 1) % 3]
    }

    /// Darts leaving `v`, counter-clockwise starting from `start`.
    pub fn rotation_from(&self, start: Dart) -> Vec<Dart> {
        let mut out = vec![start];
        let mut d = self.ccw_next(start);
        while d != start {
            out.push(d);
            d = self.ccw_next(d);
        }
        out
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .map(|e| usize::from(e.tail == v) + usize::from(e.head == v))
            .sum()
    }

    pub fn is_self_adjacent(&self, e: usize) -> bool {
        let [a, b] = self.edge_slots(e);
        a.0 == b.0
    }

    pub fn quad_of(&self, e: usize) -> Result<Quad, TriangulationError> {
        let (t1, p) = self.locate(Dart::new(e, true));
        let (t2, q) = self.locate(Dart::new(e, false));
        if t1 == t2 {
            return Err(TriangulationError::SelfAdjacent(self.edges[e].label.clone()));
        }
        let a = &self.triangles[t1];
        let b = &self.triangles[t2];
        Ok(Quad {
            diagonal: e,
            sides: [a[(p + 1) % 3], a[(p + 2) % 3], b[(q + 1) % 3], b[(q + 2) % 3]],
            triangles: [t1, t2],
        })
    }

    /// Replace edge `e` by the other diagonal of its quadrilateral. The new
    /// edge keeps the slot (index and label) of the old one.
    pub fn flip(&mut self, e: usize) -> Result<Quad, TriangulationError> {
        let quad = self.quad_of(e)?;
        let [x, y, p, q] = quad.sides;
        let [t1, t2] = quad.triangles;
        // x: v->w, y: w->u, p: u->z, q: z->v; new diagonal w->z.
        let w = self.head(x);
        let z = self.head(p);
        let oy = self.dart_offset(y);
        let op = self.dart_offset(p);
        {
            let edge = &mut self.edges[e];
            edge.tail = w;
            edge.head = z;
            edge.offset = [oy[0] + op[0], oy[1] + op[1]];
        }
        let fwd = Dart::new(e, true);
        self.triangles[t1] = [fwd, q, x];
        self.triangles[t2] = [fwd.rev(), y, p];
        for t in [t1, t2] {
            for pos in 0..3 {
                let d = self.triangles[t][pos];
                self.loc[d.index()] = (t, pos);
            }
        }
        Ok(quad)
    }

    /// Flip an edge and update its coordinate with `max(A+C, B+D) - E`.
    pub fn flip_with<W: Weight>(&mut self, e: usize, coords: &mut [W]) -> Result<(), TriangulationError> {
        self.check_dimension(coords.len())?;
        let quad = self.quad_of(e)?;
        let [a, b, c, d] = quad.side_edges();
        let new = W::delta(&coords[a], &coords[b], &coords[c], &coords[d], &coords[e]);
        if new.is_negative() {
            return Err(TriangulationError::NegativeFlip { edge: self.edges[e].label.clone() });
        }
        self.flip(e)?;
        coords[e] = new;
        Ok(())
    }

    pub fn check_dimension(&self, len: usize) -> Result<(), TriangulationError> {
        if len != self.edges.len() {
            return Err(TriangulationError::Dimension { found: len, expected: self.edges.len() });
        }
        Ok(())
    }

    /// Triangles violating at least one triangle inequality.
    pub fn violated_triangles<W: Weight>(&self, coords: &[W]) -> Result<Vec<usize>, TriangulationError> {
        self.check_dimension(coords.len())?;
        let mut bad = Vec::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            let [a, b, c] = tri.map(|d| &coords[d.edge]);
            if a.is_negative() || b.is_negative() || c.is_negative() || *a > b.add(c) || *b > a.add(c) || *c > a.add(b) {
                bad.push(t);
            }
        }
        Ok(bad)
    }

    /// Connector weights `mu(c_i) = (E_j + E_k - E_i) / 2` of the canonical
    /// train track inside triangle `t`, indexed by the triangle's slot order.
    pub fn interior_weights(&self, t: usize, coords: &[f64]) -> Result<[f64; 3], TriangulationError> {
        self.check_dimension(coords.len())?;
        let e = self.triangles[t].map(|d| coords[d.edge]);
        let w = interior_weights_of(e);
        if w.iter().any(|x| *x < 0.0) {
            return Err(TriangulationError::NegativeWeight { triangle: t });
        }
        Ok(w)
    }

    /// Integer version; fails on odd perimeter.
    pub fn interior_weights_exact(
        &self,
        t: usize,
        coords: &[num_bigint::BigInt],
    ) -> Result<[num_bigint::BigInt; 3], TriangulationError> {
        use num_integer::Integer;
        self.check_dimension(coords.len())?;
        let [a, b, c] = self.triangles[t].map(|d| coords[d.edge].clone());
        let total = &a + &b + &c;
        if total.is_odd() {
            return Err(TriangulationError::Parity { triangle: t });
        }
        let w: [num_bigint::BigInt; 3] = [(&b + &c - &a) / 2, (&a + &c - &b) / 2, (&a + &b - &c) / 2];
        if w.iter().any(|x| x.sign() == num_bigint::Sign::Minus) {
            return Err(TriangulationError::NegativeWeight { triangle: t });
        }
        Ok(w)
    }

    /// All orientation-preserving isomorphisms `self -> other` sending the
    /// triangle slot of dart `from` onto the triangle slot of dart `to`.
    pub fn isomorphism_from(&self, other: &Triangulation, from: Dart, to: Dart) -> Option<Isomorphism> {
        if self.edges.len() != other.edges.len()
            || self.triangles.len() != other.triangles.len()
            || self.vertices.len() != other.vertices.len()
        {
            return None;
        }
        let ne = self.edges.len();
        let mut edge_map: Vec<Option<(usize, bool)>> = vec![None; ne];
        let mut vertex_map: Vec<Option<usize>> = vec![None; self.vertices.len()];
        let mut tri_map: Vec<Option<(usize, usize)>> = vec![None; self.triangles.len()];
        let mut used_tri = vec![false; other.triangles.len()];
        let mut queue = VecDeque::new();
        queue.push_back((from, to));
        while let Some((a, b)) = queue.pop_front() {
            let (ta, pa) = self.locate(a);
            let (tb, pb) = other.locate(b);
            let shift = (pb + 3 - pa) % 3;
            match tri_map[ta] {
                Some((t, s)) => {
                    if t != tb || s != shift {
                        return None;
                    }
                    continue;
                }
                None => {
                    if used_tri[tb] {
                        return None;
                    }
                    tri_map[ta] = Some((tb, shift));
                    used_tri[tb] = true;
                }
            }
            for i in 0..3 {
                let da = self.triangles[ta][i];
                let db = other.triangles[tb][(i + shift) % 3];
                let same = da.forward == db.forward;
                match edge_map[da.edge] {
                    Some(m) if m != (db.edge, same) => return None,
                    _ => edge_map[da.edge] = Some((db.edge, same)),
                }
                let va = self.tail(da);
                let vb = other.tail(db);
                match vertex_map[va] {
                    Some(m) if m != vb => return None,
                    _ => vertex_map[va] = Some(vb),
                }
                queue.push_back((da.rev(), db.rev()));
            }
        }
        let edge_map: Option<Vec<_>> = edge_map.into_iter().collect();
        let vertex_map: Option<Vec<_>> = vertex_map.into_iter().collect();
        let (edge_map, vertex_map) = (edge_map?, vertex_map?);
        let mut seen = vec![false; ne];
        for (e, _) in &edge_map {
            if std::mem::replace(&mut seen[*e], true) {
                return None;
            }
        }
        let mut vseen = vec![false; vertex_map.len()];
        for v in &vertex_map {
            if std::mem::replace(&mut vseen[*v], true) {
                return None;
            }
        }
        Some(Isomorphism { edge_map, vertex_map })
    }

    /// Every orientation-preserving isomorphism onto `other`.
    pub fn isomorphisms(&self, other: &Triangulation) -> Vec<Isomorphism> {
        if self.edges.is_empty() {
            return Vec::new();
        }
        let start = Dart::new(0, true);
        let mut out = Vec::new();
        for e in 0..other.edges.len() {
            for fwd in [true, false] {
                if let Some(iso) = self.isomorphism_from(other, start, Dart::new(e, fwd)) {
                    out.push(iso);
                }
            }
        }
        out
    }

    /// Relabel edges: edge `i` of `self` becomes edge `perm[i]`.
    pub fn permuted(&self, iso: &Isomorphism) -> Triangulation {
        let mut edges = self.edges.clone();
        for (i, (j, same)) in iso.edge_map.iter().enumerate() {
            let mut e = self.edges[i].clone();
            if !same {
                std::mem::swap(&mut e.tail, &mut e.head);
                e.offset = [-e.offset[0], -e.offset[1]];
            }
            e.label = self.edges[*j].label.clone();
            edges[*j] = e;
        }
        let triangles = self
            .triangles
            .iter()
            .map(|t| t.map(|d| iso.map_dart(d)))
            .collect();
        Triangulation::new(self.genus, self.vertices.clone(), edges, triangles)
            .expect("relabeling preserves validity")
    }
}

/// `((E2+E3-E1)/2, (E1+E3-E2)/2, (E1+E2-E3)/2)`.
pub fn interior_weights_of(e: [f64; 3]) -> [f64; 3] {
    [(e[1] + e[2] - e[0]) / 2.0, (e[0] + e[2] - e[1]) / 2.0, (e[0] + e[1] - e[2]) / 2.0]
}

/// Edge correspondence between two triangulations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Isomorphism {
    /// `edge_map[i] = (j, same_direction)`.
    pub edge_map: Vec<(usize, bool)>,
    pub vertex_map: Vec<usize>,
}

impl Isomorphism {
    pub fn map_dart(&self, d: Dart) -> Dart {
        let (e, same) = self.edge_map[d.edge];
        Dart::new(e, if same { d.forward } else { !d.forward })
    }

    pub fn edge_permutation(&self) -> Vec<usize> {
        self.edge_map.iter().map(|(e, _)| *e).collect()
    }
}

fn dart_string(edges: &[Edge], d: Dart) -> String {
    if d.forward {
        edges[d.edge].label.clone()
    } else {
        format!("-{}", edges[d.edge].label)
    }
}

impl fmt::Display for Triangulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (t, tri) in self.triangles.iter().enumerate() {
            let parts: Vec<String> = tri.iter().map(|d| dart_string(&self.edges, *d)).collect();
            writeln!(f, "T{t}: ({})", parts.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Tetrahedral triangulation of the sphere with points A, B, P, Q:
    /// C = A-B, A1 = A-P, A2 = A-Q, B1 = B-Q, B2 = B-P, D = P-Q.
    pub(crate) fn tetrahedron() -> Triangulation {
        let data = TriangulationData {
            genus: 0,
            vertices: ["A", "B", "P", "Q"].map(String::from).to_vec(),
            edges: [
                ("A1", "A", "P"),
                ("A2", "A", "Q"),
                ("B1", "B", "Q"),
                ("B2", "B", "P"),
                ("C", "A", "B"),
                ("D", "P", "Q"),
            ]
            .iter()
            .map(|(l, t, h)| EdgeData {
                label: l.to_string(),
                tail: t.to_string(),
                head: h.to_string(),
                offset: [0, 0],
            })
            .collect(),
            triangles: vec![
                ["C", "B2", "-A1"].map(String::from),
                ["A1", "D", "-A2"].map(String::from),
                ["A2", "-B1", "-C"].map(String::from),
                ["B1", "-D", "-B2"].map(String::from),
            ],
        };
        Triangulation::from_data(&data).unwrap()
    }

    #[test]
    fn tetrahedron_is_valid_sphere() {
        let t = tetrahedron();
        assert_eq!(t.num_edges(), t.expected_edge_count());
        assert_eq!(t.num_triangles(), 4);
    }

    #[test]
    fn tetrahedron_quads() {
        let t = tetrahedron();
        let name = |q: Quad| q.side_edges().map(|e| t.label(e).to_string());
        let q = t.quad_of(t.edge_index("A1").unwrap()).unwrap();
        assert_eq!(name(q), ["D", "A2", "C", "B2"]);
        // cyclic order (C, B2, D, A2) read in the other rotational sense
        let q = t.quad_of(t.edge_index("B1").unwrap()).unwrap();
        assert_eq!(name(q), ["D", "B2", "C", "A2"]);
    }

    #[test]
    fn worked_flip_example() {
        let mut t = tetrahedron();
        // (A1, A2, B1, B2, C, D) = (1, 1, 1, 1, 2, 2)
        let mut c = vec![1.0, 1.0, 1.0, 1.0, 2.0, 2.0];
        t.flip_with(0, &mut c).unwrap();
        assert_eq!(c[0], 3.0);
        t.flip_with(2, &mut c).unwrap();
        assert_eq!(c[2], 3.0);
    }

    #[test]
    fn flip_twice_restores_triangulation_up_to_isomorphism() {
        let t0 = tetrahedron();
        let mut t = t0.clone();
        t.flip(4).unwrap();
        t.flip(4).unwrap();
        assert!(!t.isomorphisms(&t0).is_empty());
    }

    #[test]
    fn rotation_system_is_consistent() {
        let t = tetrahedron();
        for e in 0..t.num_edges() {
            for f in [true, false] {
                let d = Dart::new(e, f);
                assert_eq!(t.cw_next(t.ccw_next(d)), d);
                assert_eq!(t.tail(t.ccw_next(d)), t.tail(d));
            }
        }
        let a = t.vertex_index("A").unwrap();
        assert_eq!(t.degree(a), 3);
        assert_eq!(t.rotation_from(Dart::new(4, true)).len(), 3);
    }

    #[test]
    fn interior_weights_examples() {
        assert_eq!(interior_weights_of([2.0, 1.0, 1.0]), [0.0, 1.0, 1.0]);
        assert_eq!(interior_weights_of([2.0, 2.0, 2.0]), [1.0, 1.0, 1.0]);
        assert_eq!(interior_weights_of([4.0, 3.0, 5.0]), [2.0, 3.0, 1.0]);
    }

    #[test]
    fn parity_and_negative_weight_errors() {
        let t = tetrahedron();
        let big = |v: &[i64]| v.iter().map(|x| num_bigint::BigInt::from(*x)).collect::<Vec<_>>();
        // triangle 0 = (C, B2, A1) = (2, 1, 0): odd perimeter
        let c = big(&[0, 1, 1, 1, 2, 2]);
        assert!(matches!(t.interior_weights_exact(0, &c), Err(TriangulationError::Parity { .. })));
        let c = big(&[1, 1, 1, 1, 4, 2]);
        assert!(matches!(
            t.interior_weights_exact(0, &c),
            Err(TriangulationError::NegativeWeight { .. })
        ));
        assert!(t.interior_weights(0, &[1.0; 5]).is_err());
    }

    #[test]
    fn self_adjacent_edge_is_reported() {
        // one-vertex torus with a single triangle pair is fine; build a
        // degenerate sphere with two points: edges a (loop-free) folded.
        let data = TriangulationData {
            genus: 0,
            vertices: vec!["P".into(), "Q".into(), "R".into()],
            edges: vec![
                EdgeData { label: "a".into(), tail: "P".into(), head: "Q".into(), offset: [0, 0] },
                EdgeData { label: "b".into(), tail: "Q".into(), head: "R".into(), offset: [0, 0] },
                EdgeData { label: "c".into(), tail: "R".into(), head: "P".into(), offset: [0, 0] },
            ],
            triangles: vec![
                ["a", "b", "c"].map(String::from),
                ["-c", "-b", "-a"].map(String::from),
            ],
        };
        let t = Triangulation::from_data(&data).unwrap();
        assert!(!t.is_self_adjacent(0));
        let data = TriangulationData {
            genus: 0,
            vertices: vec!["P".into(), "Q".into()],
            edges: vec![
                EdgeData { label: "a".into(), tail: "P".into(), head: "Q".into(), offset: [0, 0] },
                EdgeData { label: "l".into(), tail: "Q".into(), head: "Q".into(), offset: [0, 0] },
                EdgeData { label: "m".into(), tail: "Q".into(), head: "Q".into(), offset: [0, 0] },
            ],
            triangles: vec![
                ["a", "l", "-a"].map(String::from),
                ["-l", "m", "-m"].map(String::from),
            ],
        };
        // this sphere has a self-folded triangle around edge a
        if let Ok(t) = Triangulation::from_data(&data) {
            assert!(t.is_self_adjacent(0));
            assert!(matches!(t.quad_of(0), Err(TriangulationError::SelfAdjacent(_))));
        }
    }

    #[test]
    fn data_round_trip() {
        let t = tetrahedron();
        let json = serde_json::to_string(&t.to_data()).unwrap();
        let back: TriangulationData = serde_json::from_str(&json).unwrap();
        assert_eq!(Triangulation::from_data(&back).unwrap(), t);
    }
}
