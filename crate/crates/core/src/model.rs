//! Lattice models: a torus triangulation, half-twist generators on its graph
//! edges, symmetries, and the alphabet of braid operations.

use crate::geometry::{GeometryError, Layout};
use crate::program::{FlipProgram, ProgramBuilder};
use crate::triangulation::{Dart, Isomorphism, Triangulation, TriangulationData, TriangulationError};
use crate::twist::{half_twist, TwistError};
use crate::weight::Weight;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Triangulation(#[from] TriangulationError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("generator {generator}: {source}")]
    Twist { generator: String, source: TwistError },
    #[error("generator {0}: flip sequence does not return to the original triangulation")]
    NotClosed(String),
    #[error("generator {0}: malformed flip sequence entry {1:?}")]
    BadFlip(String, String),
    #[error("generator {0} is defined more than once or refers to a missing generator")]
    BadGenerator(String),
    #[error("unknown generator {0}")]
    UnknownGenerator(String),
    #[error("operation {0:?} uses two generators that share a point")]
    NotDisjoint(String),
    #[error("unknown symmetry {0:?}")]
    UnknownSymmetry(String),
    #[error("symmetry {0:?} is not a permutation of the edges preserving the triangulation")]
    BadSymmetry(String),
    #[error("malformed word: {0}")]
    Word(String),
    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

/// One signed generator: the half twist about graph edge `edge`
/// (index into the triangulation's edges), counter-clockwise when `ccw`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Twist {
    pub edge: usize,
    pub ccw: bool,
}

/// A set of pairwise vertex-disjoint signed generators applied together.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Operation {
    pub twists: Vec<Twist>,
}

#[derive(Clone, Debug)]
pub struct Generator {
    pub edge: usize,
    pub ccw: FlipProgram,
    pub cw: FlipProgram,
    /// How the update rule was obtained, for reports.
    pub derivation: String,
}

/// A coordinate permutation induced by a symmetry of the triangulation.
/// `edge_image[i]` is the image of edge `i`; the coordinate action is the
/// push-forward `[S E]_{s(i)} = E_i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSymmetry {
    pub name: String,
    pub edge_image: Vec<usize>,
    pub orientation_reversing: bool,
}

impl EdgeSymmetry {
    /// `pi` with `[S E]_i = E_{pi(i)}`.
    pub fn pullback(&self) -> Vec<usize> {
        let mut p = vec![0; self.edge_image.len()];
        for (i, &j) in self.edge_image.iter().enumerate() {
            p[j] = i;
        }
        p
    }

    pub fn program(&self) -> FlipProgram {
        FlipProgram::permutation(&self.pullback())
    }

    pub fn inverse(&self) -> EdgeSymmetry {
        EdgeSymmetry {
            name: format!("{}^-1", self.name),
            edge_image: self.pullback(),
            orientation_reversing: self.orientation_reversing,
        }
    }

    pub fn map_twist(&self, t: Twist) -> Twist {
        Twist { edge: self.edge_image[t.edge], ccw: t.ccw != self.orientation_reversing }
    }
}

/// Action of a graph symmetry on generators only (it need not preserve the
/// auxiliary edges).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphSymmetry {
    pub edge_image: Vec<Option<usize>>,
    pub orientation_reversing: bool,
}

impl GraphSymmetry {
    pub fn map_twist(&self, t: Twist) -> Twist {
        Twist { edge: self.edge_image[t.edge].expect("graph edge"), ccw: t.ccw != self.orientation_reversing }
    }
}

#[derive(Clone, Debug)]
pub struct LatticeModel {
    pub name: String,
    pub lattice_kind: String,
    pub tri: Triangulation,
    /// Graph edges in generator order; a generator is named by its edge label.
    pub graph_edges: Vec<usize>,
    pub generators: Vec<Generator>,
    pub symmetries: Vec<EdgeSymmetry>,
    pub graph_symmetries: Vec<GraphSymmetry>,
    pub operations: Vec<Operation>,
    op_programs: Vec<FlipProgram>,
    pub initial: Vec<u64>,
    pub layout: Option<Layout>,
    /// Free-form notes kept with the model (flip-sequence provenance etc).
    pub notes: Vec<String>,
}

/// A generator rule given as an explicit flip sequence, or as a conjugate
/// of another generator by a named symmetry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeneratorSpec {
    Flips {
        edge: String,
        /// Comma-separated edge labels; trailing primes are allowed and
        /// must count earlier flips of the same edge.
        flips: String,
        /// `relabel[i]` = label whose post-flip coordinate becomes the new
        /// coordinate of edge `i`. Derived from the triangulation when absent.
        #[serde(default)]
        relabel: Option<Vec<String>>,
    },
    Conjugate {
        edge: String,
        /// The new generator is `S g S^-1`, where `S` is the composition of
        /// the named symmetries read right to left.
        of: String,
        by: Vec<String>,
    },
}

/// On-disk model description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub name: String,
    #[serde(default = "default_kind")]
    pub lattice_kind: String,
    pub triangulation: TriangulationData,
    /// Labels of graph edges in generator order.
    pub graph_edges: Vec<String>,
    #[serde(default)]
    pub generators: Vec<GeneratorSpec>,
    #[serde(default)]
    pub symmetries: Vec<SymmetryFile>,
    #[serde(default)]
    pub operations: Option<Vec<String>>,
    #[serde(default)]
    pub initial_coords: Option<Vec<u64>>,
    #[serde(default)]
    pub notes: Vec<String>,
}

fn default_kind() -> String {
    "square".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryFile {
    pub name: String,
    /// Permutation `pi` as edge labels with `[S E]_i = E_{pi(i)}`.
    pub permutation: Vec<String>,
    #[serde(default)]
    pub orientation_reversing: bool,
}

impl LatticeModel {
    pub fn num_points(&self) -> usize {
        self.tri.num_points()
    }

    pub fn num_generators(&self) -> usize {
        2 * self.graph_edges.len()
    }

    pub fn num_edges(&self) -> usize {
        self.tri.num_edges()
    }

    pub fn op_program(&self, op: usize) -> &FlipProgram {
        &self.op_programs[op]
    }

    pub fn op_programs(&self) -> &[FlipProgram] {
        &self.op_programs
    }

    /// Generator name of a graph edge (its label).
    pub fn generator_name(&self, edge: usize) -> Option<&str> {
        self.graph_edges.contains(&edge).then(|| self.tri.label(edge))
    }

    /// Graph edge carrying the generator with this label.
    pub fn generator_edge(&self, label: &str) -> Option<usize> {
        self.graph_edges.iter().copied().find(|&e| self.tri.label(e) == label)
    }

    pub fn generator(&self, edge: usize) -> Option<&Generator> {
        self.generators.iter().find(|g| g.edge == edge)
    }

    pub fn twist_program(&self, t: Twist) -> Result<&FlipProgram, ModelError> {
        let g = self.generator(t.edge).ok_or(ModelError::UnknownGenerator(self.tri.label(t.edge).to_string()))?;
        Ok(if t.ccw { &g.ccw } else { &g.cw })
    }

    pub fn operation_program(&self, op: &Operation) -> Result<FlipProgram, ModelError> {
        let mut p = FlipProgram::identity(self.num_edges());
        for t in &op.twists {
            p = p.then(self.twist_program(*t)?);
        }
        Ok(p.sliced())
    }

    pub fn operation_index(&self, op: &Operation) -> Option<usize> {
        let mut sorted = op.clone();
        sorted.twists.sort();
        self.operations.iter().position(|o| *o == sorted)
    }

    pub fn symmetry(&self, name: &str) -> Result<&EdgeSymmetry, ModelError> {
        self.symmetries
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| ModelError::UnknownSymmetry(name.to_string()))
    }

    pub fn apply_generator<W: Weight>(&self, c: &[W], t: Twist) -> Result<Vec<W>, ModelError> {
        self.tri.check_dimension(c.len())?;
        Ok(self.twist_program(t)?.apply(c))
    }

    pub fn apply_symmetry<W: Weight>(&self, c: &[W], name: &str) -> Result<Vec<W>, ModelError> {
        self.tri.check_dimension(c.len())?;
        Ok(self.symmetry(name)?.program().apply(c))
    }

    /// Apply operations in time order (first operation first).
    pub fn apply_word<W: Weight>(&self, c: &[W], word: &[usize]) -> Result<Vec<W>, ModelError> {
        self.tri.check_dimension(c.len())?;
        let mut v = c.to_vec();
        for &op in word {
            v = self.op_programs[op].apply(&v);
        }
        Ok(v)
    }

    /// Single straight-line program for a whole word.
    pub fn word_program(&self, word: &[usize]) -> FlipProgram {
        FlipProgram::compose_all(self.num_edges(), word.iter().map(|&o| &self.op_programs[o])).sliced()
    }

    pub fn initial_coords<W: Weight>(&self) -> Vec<W> {
        self.initial.iter().map(|&x| W::from_u64(x)).collect()
    }

    /// Two operations share a graph edge.
    pub fn share_edge(&self, a: usize, b: usize) -> bool {
        let ea: BTreeSet<usize> = self.operations[a].twists.iter().map(|t| t.edge).collect();
        self.operations[b].twists.iter().any(|t| ea.contains(&t.edge))
    }

    /// Image of an operation under a graph symmetry.
    pub fn map_operation(&self, s: &GraphSymmetry, op: usize) -> usize {
        let mut twists: Vec<Twist> = self.operations[op].twists.iter().map(|t| s.map_twist(*t)).collect();
        twists.sort();
        self.operation_index(&Operation { twists }).expect("symmetry maps operations to operations")
    }

    /// Smallest operation index in each symmetry orbit.
    pub fn canonical_first_ops(&self) -> Vec<usize> {
        let mut reps = Vec::new();
        let mut seen = vec![false; self.operations.len()];
        for op in 0..self.operations.len() {
            if seen[op] {
                continue;
            }
            reps.push(op);
            let mut stack = vec![op];
            seen[op] = true;
            while let Some(o) = stack.pop() {
                for s in &self.graph_symmetries {
                    let img = self.map_operation(s, o);
                    if !seen[img] {
                        seen[img] = true;
                        stack.push(img);
                    }
                }
            }
        }
        reps
    }

    /// Operation word text: operations separated by whitespace, generators in
    /// an operation separated by commas, negative numbers for clockwise.
    /// When every operation is a single generator, commas also separate
    /// operations, so "1,3,2,4" and "1 3 2 4" are the same word.
    pub fn parse_word(&self, text: &str) -> Result<Vec<usize>, ModelError> {
        let single = !self.operations.is_empty() && self.operations.iter().all(|o| o.twists.len() == 1);
        let tokens: Vec<&str> = if single {
            text.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).collect()
        } else {
            text.split_whitespace().collect()
        };
        let mut word = Vec::new();
        for tok in tokens {
            let op = self.parse_operation(tok)?;
            word.push(self.operation_index(&op).ok_or_else(|| {
                ModelError::Word(format!("{tok:?} is not an operation of model {}", self.name))
            })?);
        }
        if word.is_empty() {
            return Err(ModelError::Word("empty word".into()));
        }
        Ok(word)
    }

    pub fn parse_operation(&self, tok: &str) -> Result<Operation, ModelError> {
        let mut twists = Vec::new();
        for g in tok.split(',').filter(|s| !s.is_empty()) {
            let g = g.trim();
            let (label, ccw) = match g.strip_prefix('-') {
                Some(rest) => (rest, false),
                None => (g.strip_prefix('+').unwrap_or(g), true),
            };
            let edge = self
                .generator_edge(label)
                .ok_or_else(|| ModelError::UnknownGenerator(g.to_string()))?;
            twists.push(Twist { edge, ccw });
        }
        if twists.is_empty() {
            return Err(ModelError::Word(format!("empty operation {tok:?}")));
        }
        let mut points = BTreeSet::new();
        for t in &twists {
            let e = self.tri.edge(t.edge);
            if !points.insert(e.tail) || !points.insert(e.head) {
                return Err(ModelError::NotDisjoint(tok.to_string()));
            }
        }
        twists.sort();
        Ok(Operation { twists })
    }

    pub fn format_operation(&self, op: usize) -> String {
        self.operations[op]
            .twists
            .iter()
            .map(|t| {
                let n = self.generator_name(t.edge).unwrap();
                if t.ccw {
                    n.to_string()
                } else {
                    format!("-{n}")
                }
            })
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn format_word(&self, word: &[usize]) -> String {
        word.iter().map(|&o| self.format_operation(o)).collect::<Vec<_>>().join(" ")
    }

    /// Time reversal of a word: reversed order, every generator inverted.
    pub fn inverse_word(&self, word: &[usize]) -> Vec<usize> {
        word.iter()
            .rev()
            .map(|&o| {
                let twists = self.operations[o].twists.iter().map(|t| Twist { edge: t.edge, ccw: !t.ccw }).collect();
                self.operation_index(&Operation { twists }).expect("inverse operation exists")
            })
            .collect()
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            name: self.name.clone(),
            lattice_kind: self.lattice_kind.clone(),
            triangulation: self.tri.to_data(),
            graph_edges: self.graph_edges.iter().map(|&e| self.tri.label(e).to_string()).collect(),
            generators: Vec::new(),
            symmetries: self
                .symmetries
                .iter()
                .map(|s| SymmetryFile {
                    name: s.name.clone(),
                    permutation: s.pullback().iter().map(|&i| self.tri.label(i).to_string()).collect(),
                    orientation_reversing: s.orientation_reversing,
                })
                .collect(),
            operations: Some((0..self.operations.len()).map(|o| self.format_operation(o)).collect()),
            initial_coords: Some(self.initial.clone()),
            notes: self.notes.clone(),
        }
    }
}

/// Builds a model from a triangulation, assembling generators, symmetries and
/// the operation alphabet, and checking every invariant.
pub struct ModelBuilder {
    pub name: String,
    pub lattice_kind: String,
    pub tri: Triangulation,
    pub graph_edges: Vec<usize>,
    pub generators: Vec<Option<Generator>>,
    pub symmetries: Vec<EdgeSymmetry>,
    pub graph_symmetries: Vec<GraphSymmetry>,
    pub operations: Option<Vec<Operation>>,
    pub initial: Option<Vec<u64>>,
    pub layout: Option<Layout>,
    pub notes: Vec<String>,
}

impl ModelBuilder {
    pub fn new(name: &str, lattice_kind: &str, tri: Triangulation, graph_edges: Vec<usize>) -> Self {
        let n = graph_edges.len();
        ModelBuilder {
            name: name.to_string(),
            lattice_kind: lattice_kind.to_string(),
            tri,
            graph_edges,
            generators: vec![None; n],
            symmetries: Vec::new(),
            graph_symmetries: Vec::new(),
            operations: None,
            initial: None,
            layout: None,
            notes: Vec::new(),
        }
    }

    /// Model whose triangulation, symmetries and default coordinates come
    /// from a straight-line layout. Graph edges are taken in layout order.
    pub fn from_layout(name: &str, lattice_kind: &str, layout: Layout) -> Result<Self, ModelError> {
        let tri = layout.triangulation()?;
        let graph = layout.graph_edges();
        let mut b = ModelBuilder::new(name, lattice_kind, tri, graph);
        let syms = layout.symmetries();
        let mut count = 0;
        for s in &syms {
            b.graph_symmetries.push(GraphSymmetry {
                edge_image: s.edge_map.iter().map(|m| m.map(|x| x.0)).collect(),
                orientation_reversing: s.orientation_reversing,
            });
            if s.preserves_triangulation() && !s.is_identity() {
                count += 1;
                b.symmetries.push(EdgeSymmetry {
                    name: format!("g{count}"),
                    edge_image: s.edge_map.iter().map(|m| m.unwrap().0).collect(),
                    orientation_reversing: s.orientation_reversing,
                });
            }
        }
        b.initial = Some(straight_curve_coords(&layout, [1, 1]));
        b.layout = Some(layout);
        Ok(b)
    }

    pub fn set_generator(&mut self, edge: usize, g: Generator) {
        let i = self.graph_edges.iter().position(|&e| e == edge).expect("graph edge");
        self.generators[i] = Some(g);
    }

    /// Conjugate an existing generator by a symmetry: `S g S^-1` acts on the
    /// image edge, with the sign flipped for orientation-reversing `S`.
    pub fn conjugate(&self, of: usize, s: &EdgeSymmetry) -> Result<(usize, Generator), ModelError> {
        let i = self.graph_edges.iter().position(|&e| e == of).ok_or(ModelError::UnknownGenerator(self.tri.label(of).to_string()))?;
        let g = self.generators[i].as_ref().ok_or(ModelError::UnknownGenerator(self.tri.label(of).to_string()))?;
        let sp = s.program();
        let si = s.inverse().program();
        let conj = |p: &FlipProgram| si.then(p).then(&sp).sliced();
        let (ccw, cw) = if s.orientation_reversing { (conj(&g.cw), conj(&g.ccw)) } else { (conj(&g.ccw), conj(&g.cw)) };
        Ok((
            s.edge_image[of],
            Generator {
                edge: s.edge_image[of],
                ccw,
                cw,
                derivation: format!("conjugate of generator {} by {}", self.tri.label(of), s.name),
            },
        ))
    }

    pub fn build(self) -> Result<LatticeModel, ModelError> {
        let tri = self.tri;
        let mut generators = Vec::with_capacity(self.graph_edges.len());
        for (i, g) in self.generators.into_iter().enumerate() {
            let e = self.graph_edges[i];
            let g = match g {
                Some(g) => g,
                None => {
                    let wrap = |source| ModelError::Twist { generator: tri.label(e).to_string(), source };
                    Generator {
                        edge: e,
                        ccw: half_twist(&tri, e, true).map_err(wrap)?,
                        cw: half_twist(&tri, e, false).map_err(wrap)?,
                        derivation: "flip recipe about the edge (on a finite cover when needed)".into(),
                    }
                }
            };
            generators.push(g);
        }
        let operations = match self.operations {
            Some(ops) => ops,
            None => enumerate_operations(&tri, &self.graph_edges),
        };
        let mut model = LatticeModel {
            name: self.name,
            lattice_kind: self.lattice_kind,
            initial: self.initial.unwrap_or_else(|| vec![1; tri.num_edges()]),
            tri,
            graph_edges: self.graph_edges,
            generators,
            symmetries: self.symmetries,
            graph_symmetries: self.graph_symmetries,
            operations,
            op_programs: Vec::new(),
            layout: self.layout,
            notes: self.notes,
        };
        for s in &model.symmetries {
            let mut img = s.edge_image.clone();
            img.sort_unstable();
            if img != (0..model.num_edges()).collect::<Vec<_>>() {
                return Err(ModelError::BadSymmetry(s.name.clone()));
            }
        }
        for op in &mut model.operations {
            op.twists.sort();
        }
        model.op_programs =
            model.operations.iter().map(|op| model.operation_program(op)).collect::<Result<_, _>>()?;
        let init: Vec<f64> = model.initial_coords();
        model.tri.check_dimension(init.len())?;
        if init.iter().all(|&x| x == 0.0) {
            return Err(ModelError::Invalid("default coordinates are all zero".into()));
        }
        Ok(model)
    }
}

/// All maximum matchings of the graph formed by `graph_edges`, as edge
/// lists in depth-first order.
pub fn maximum_matchings(tri: &Triangulation, graph_edges: &[usize]) -> Vec<Vec<usize>> {
    let n = tri.num_points();
    let allow_skip = n % 2 == 1;
    let mut out = Vec::new();
    let mut covered = vec![false; n];
    let mut current = Vec::new();
    fn rec(
        tri: &Triangulation,
        edges: &[usize],
        allow_skip: bool,
        covered: &mut Vec<bool>,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        skipped: usize,
    ) {
        let Some(v) = covered.iter().position(|c| !c) else {
            out.push(current.clone());
            return;
        };
        for &e in edges {
            let ed = tri.edge(e);
            if ed.tail == ed.head {
                continue;
            }
            let other = if ed.tail == v {
                ed.head
            } else if ed.head == v {
                ed.tail
            } else {
                continue;
            };
            if covered[other] {
                continue;
            }
            covered[v] = true;
            covered[other] = true;
            current.push(e);
            rec(tri, edges, allow_skip, covered, current, out, skipped);
            current.pop();
            covered[v] = false;
            covered[other] = false;
        }
        if allow_skip && skipped == 0 {
            covered[v] = true;
            rec(tri, edges, allow_skip, covered, current, out, skipped + 1);
            covered[v] = false;
        }
    }
    rec(tri, graph_edges, allow_skip, &mut covered, &mut current, &mut out, 0);
    let best = out.iter().map(Vec::len).max().unwrap_or(0);
    out.retain(|m| m.len() == best && best > 0);
    for m in &mut out {
        m.sort_unstable();
    }
    out.sort();
    out.dedup();
    out
}

/// Maximum matchings times all sign choices, all-counter-clockwise first.
pub fn enumerate_operations(tri: &Triangulation, graph_edges: &[usize]) -> Vec<Operation> {
    let mut ops = Vec::new();
    for m in maximum_matchings(tri, graph_edges) {
        for signs in 0..(1u32 << m.len()) {
            let twists = m
                .iter()
                .enumerate()
                .map(|(i, &e)| Twist { edge: e, ccw: signs & (1 << (m.len() - 1 - i)) == 0 })
                .collect();
            ops.push(Operation { twists });
        }
    }
    ops
}

/// Crossing counts of each edge with a straight closed curve in lattice
/// direction `dir` (basis coordinates), placed generically.
pub fn straight_curve_coords(layout: &Layout, dir: [i64; 2]) -> Vec<u64> {
    let [a, b] = layout.basis;
    let w = [dir[0] as f64 * a[0] + dir[1] as f64 * b[0], dir[0] as f64 * a[1] + dir[1] as f64 * b[1]];
    let area = (a[0] * b[1] - a[1] * b[0]).abs();
    let f = |x: [f64; 2]| (w[0] * x[1] - w[1] * x[0]) / area;
    // generic base point of the curve
    let x0 = f([0.1234567, 0.0456789]);
    (0..layout.edges.len())
        .map(|e| {
            let p = layout.points[layout.edges[e].tail].1;
            let v = layout.edge_vector(e);
            let (lo, hi) = {
                let s = f(p) - x0;
                let t = f([p[0] + v[0], p[1] + v[1]]) - x0;
                if s < t {
                    (s, t)
                } else {
                    (t, s)
                }
            };
            (hi.floor() - lo.floor()) as u64
        })
        .collect()
}

/// Check that replaying `flips` on `tri` and relabeling by `relabel`
/// (`relabel[i]` = edge whose coordinate becomes coordinate `i`) returns to
/// `tri` with the endpoints of `edge` exchanged; returns the program.
pub fn flip_sequence_program(
    tri: &Triangulation,
    edge: usize,
    flips: &[usize],
    relabel: Option<&[usize]>,
) -> Result<FlipProgram, ModelError> {
    let name = || tri.label(edge).to_string();
    let mut b = ProgramBuilder::new(tri.clone());
    for &f in flips {
        b.flip(f)?;
    }
    let flipped = b.triangulation().clone();
    let iso = match relabel {
        None => flipped.isomorphism_from(tri, Dart::new(edge, true), Dart::new(edge, false)),
        Some(r) => find_isomorphism_with(&flipped, tri, r),
    }
    .ok_or_else(|| ModelError::NotClosed(name()))?;
    let (a, bb) = (tri.edge(edge).tail, tri.edge(edge).head);
    let swaps = iso.vertex_map.iter().enumerate().all(|(v, &w)| match v {
        _ if v == a => w == bb,
        _ if v == bb => w == a,
        _ => w == v,
    });
    if !swaps {
        return Err(ModelError::NotClosed(name()));
    }
    b.relabel(&iso, tri.clone());
    Ok(b.finish().0.sliced())
}

/// An isomorphism `from -> to` whose edge map is the inverse of `relabel`.
fn find_isomorphism_with(from: &Triangulation, to: &Triangulation, relabel: &[usize]) -> Option<Isomorphism> {
    let mut image = vec![usize::MAX; relabel.len()];
    for (i, &j) in relabel.iter().enumerate() {
        image[j] = i;
    }
    let start = Dart::new(0, true);
    [true, false].into_iter().find_map(|fwd| {
        let iso = from.isomorphism_from(to, start, Dart::new(image[0], fwd))?;
        (iso.edge_permutation() == image).then_some(iso)
    })
}

/// Parse a flip sequence like `"6,3,5,6',1"` into edge indices, checking the
/// prime counts.
pub fn parse_flip_sequence(tri: &Triangulation, generator: &str, text: &str) -> Result<Vec<usize>, ModelError> {
    let mut counts = vec![0usize; tri.num_edges()];
    let mut out = Vec::new();
    for raw in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let label = raw.trim_end_matches(['\'', '′', '″']);
        let primes: usize = raw[label.len()..]
            .chars()
            .map(|c| match c {
                '″' => 2,
                _ => 1,
            })
            .sum();
        let e = tri.edge_index(label).map_err(|_| ModelError::BadFlip(generator.into(), raw.into()))?;
        if primes != counts[e] {
            return Err(ModelError::BadFlip(generator.into(), raw.into()));
        }
        counts[e] += 1;
        out.push(e);
    }
    Ok(out)
}

pub fn load_model_str(text: &str) -> Result<LatticeModel, ModelError> {
    let file: ModelFile = serde_json::from_str(text)?;
    load_model(&file)
}

pub fn load_model(file: &ModelFile) -> Result<LatticeModel, ModelError> {
    let tri = Triangulation::from_data(&file.triangulation)?;
    let graph: Vec<usize> = file.graph_edges.iter().map(|l| tri.edge_index(l)).collect::<Result<_, _>>()?;
    let mut b = ModelBuilder::new(&file.name, &file.lattice_kind, tri.clone(), graph.clone());
    for s in &file.symmetries {
        let pi: Vec<usize> = s.permutation.iter().map(|l| tri.edge_index(l)).collect::<Result<_, _>>()?;
        if pi.len() != tri.num_edges() {
            return Err(ModelError::BadSymmetry(s.name.clone()));
        }
        let mut image = vec![usize::MAX; pi.len()];
        for (i, &p) in pi.iter().enumerate() {
            if image[p] != usize::MAX {
                return Err(ModelError::BadSymmetry(s.name.clone()));
            }
            image[p] = i;
        }
        let sym = EdgeSymmetry { name: s.name.clone(), edge_image: image, orientation_reversing: s.orientation_reversing };
        check_symmetry(&tri, &sym)?;
        b.symmetries.push(sym);
    }
    for s in &b.symmetries {
        b.graph_symmetries.push(GraphSymmetry {
            edge_image: s.edge_image.iter().map(|&e| Some(e)).collect(),
            orientation_reversing: s.orientation_reversing,
        });
    }
    let mut pending: Vec<&GeneratorSpec> = file.generators.iter().collect();
    while !pending.is_empty() {
        let before = pending.len();
        let mut rest = Vec::new();
        for spec in pending {
            match spec {
                GeneratorSpec::Flips { edge, flips, relabel } => {
                    let e = tri.edge_index(edge)?;
                    let seq = parse_flip_sequence(&tri, edge, flips)?;
                    let relabel: Option<Vec<usize>> =
                        relabel.as_ref().map(|r| r.iter().map(|l| tri.edge_index(l)).collect()).transpose()?;
                    let ccw = flip_sequence_program(&tri, e, &seq, relabel.as_deref())?;
                    let cw = match b.symmetries.iter().find(|s| s.orientation_reversing && s.edge_image[e] == e) {
                        Some(m) => m.program().then(&ccw).then(&m.inverse().program()).sliced(),
                        None => half_twist(&tri, e, false)
                            .map_err(|source| ModelError::Twist { generator: edge.clone(), source })?,
                    };
                    if !graph.contains(&e) {
                        return Err(ModelError::BadGenerator(edge.clone()));
                    }
                    b.set_generator(e, Generator { edge: e, ccw, cw, derivation: format!("flip sequence {flips}") });
                }
                GeneratorSpec::Conjugate { edge, of, by } => {
                    let e = tri.edge_index(edge)?;
                    let o = tri.edge_index(of)?;
                    let i = graph.iter().position(|&x| x == o).ok_or_else(|| ModelError::BadGenerator(of.clone()))?;
                    if b.generators[i].is_none() {
                        rest.push(spec);
                        continue;
                    }
                    let mut sym = EdgeSymmetry {
                        name: by.join(""),
                        edge_image: (0..tri.num_edges()).collect(),
                        orientation_reversing: false,
                    };
                    for name in by.iter().rev() {
                        let s = b
                            .symmetries
                            .iter()
                            .find(|s| &s.name == name)
                            .ok_or_else(|| ModelError::UnknownSymmetry(name.clone()))?;
                        sym.edge_image = sym.edge_image.iter().map(|&x| s.edge_image[x]).collect();
                        sym.orientation_reversing ^= s.orientation_reversing;
                    }
                    let (target, g) = b.conjugate(o, &sym)?;
                    if target != e || !graph.contains(&e) {
                        return Err(ModelError::BadGenerator(edge.clone()));
                    }
                    b.set_generator(e, g);
                }
            }
        }
        if rest.len() == before {
            return Err(ModelError::BadGenerator("conjugation cycle".into()));
        }
        pending = rest;
    }
    b.initial = file.initial_coords.clone();
    b.notes = file.notes.clone();
    if let Some(ops) = &file.operations {
        let tmp = ModelBuilder::new(&file.name, &file.lattice_kind, tri.clone(), graph.clone()).build_shell();
        b.operations = Some(ops.iter().map(|o| tmp.parse_operation(o)).collect::<Result<_, _>>()?);
    }
    b.build()
}

impl ModelBuilder {
    /// Model with no generators or operations, for parsing only.
    fn build_shell(self) -> LatticeModel {
        LatticeModel {
            name: self.name,
            lattice_kind: self.lattice_kind,
            initial: vec![],
            tri: self.tri,
            graph_edges: self.graph_edges,
            generators: vec![],
            symmetries: vec![],
            graph_symmetries: vec![],
            operations: vec![],
            op_programs: vec![],
            layout: None,
            notes: vec![],
        }
    }
}

/// A symmetry must carry triangles to triangles.
pub fn check_symmetry(tri: &Triangulation, s: &EdgeSymmetry) -> Result<(), ModelError> {
    let key = |t: &[Dart; 3]| {
        let mut v: Vec<usize> = t.iter().map(|d| d.edge).collect();
        v.sort_unstable();
        v
    };
    let tris: BTreeSet<Vec<usize>> = tri.triangles().iter().map(key).collect();
    for t in tri.triangles() {
        let mut img: Vec<usize> = t.iter().map(|d| s.edge_image[d.edge]).collect();
        img.sort_unstable();
        if !tris.contains(&img) {
            return Err(ModelError::BadSymmetry(s.name.clone()));
        }
    }
    Ok(())
}
