//! Half twists of two points about a connecting edge, as flip programs.
//!
//! The direct construction works when the two stars around the endpoints of
//! the edge form an embedded disk: flip away the edges at the first point
//! one by one (counter-clockwise from the twisting edge), then those at the
//! second point, and the result is isomorphic to the starting triangulation
//! with the two points exchanged.
//!
//! Small torus triangulations usually fail that test (loops, multiple edges,
//! wrap-around). In that case the twist is built on a `k x k` cover, where the
//! lift of a half twist is the product of half twists on every lift of the
//! edge; the cover coordinates are periodic, so any lift of a base edge can be
//! read back as the base coordinate.

use crate::program::{FlipProgram, ProgramBuilder};
use crate::triangulation::{Dart, Edge, Isomorphism, Triangulation, TriangulationError};
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TwistError {
    #[error("edge {0} is a loop; both ends are the same point")]
    Loop(String),
    #[error("flip sequence for edge {0} does not return to the original triangulation")]
    NotClosed(String),
    #[error("no cover up to {0}x{0} gives an embedded star around edge {1}")]
    NoCover(usize, String),
    #[error(transparent)]
    Triangulation(#[from] TriangulationError),
}

/// Largest cover tried before giving up.
pub const MAX_COVER: usize = 6;

/// Half twist of the endpoints of edge `e`, counter-clockwise when `ccw`.
pub fn half_twist(tri: &Triangulation, e: usize, ccw: bool) -> Result<FlipProgram, TwistError> {
    let edge = tri.edge(e);
    if edge.tail == edge.head {
        return Err(TwistError::Loop(edge.label.clone()));
    }
    if star_is_embedded(tri, e) {
        let mut b = ProgramBuilder::new(tri.clone());
        twist_in_builder(&mut b, tri, e, ccw)?;
        return Ok(b.finish().0.sliced());
    }
    if tri.genus() != 1 {
        return Err(TwistError::NoCover(1, edge.label.clone()));
    }
    for k in 2..=MAX_COVER {
        let cover = Cover::new(tri, k)?;
        if star_is_embedded(&cover.tri, cover.edge_lift(e, 0)) {
            return cover.lifted_twist(e, ccw);
        }
    }
    Err(TwistError::NoCover(MAX_COVER, edge.label.clone()))
}

/// Product of half twists on several pairwise disjoint edges, applied in
/// the given order.
pub fn twist_product(tri: &Triangulation, twists: &[(usize, bool)]) -> Result<FlipProgram, TwistError> {
    let mut prog = FlipProgram::identity(tri.num_edges());
    for &(e, ccw) in twists {
        prog = prog.then(&half_twist(tri, e, ccw)?);
    }
    Ok(prog.sliced())
}

/// Flip sequence and closing isomorphism of the counter-clockwise twist.
#[derive(Clone, Debug)]
pub struct TwistPlan {
    pub flips: Vec<usize>,
    pub flipped: Triangulation,
    /// From `flipped` onto the starting triangulation.
    pub closing: Isomorphism,
}

pub fn plan_ccw(tri: &Triangulation, e: usize) -> Result<TwistPlan, TwistError> {
    let a = tri.edge(e).tail;
    let b = tri.edge(e).head;
    let deg_b = tri.degree(b);
    let mut t = tri.clone();
    let mut flips = Vec::new();
    let limit = 4 * tri.num_edges();
    while t.degree(a) > 2 {
        let f = t.ccw_next(Dart::new(e, true)).edge;
        t.flip(f)?;
        flips.push(f);
        if flips.len() > limit {
            return Err(TwistError::NotClosed(tri.label(e).to_string()));
        }
    }
    for _ in 2..deg_b {
        let f = t.ccw_next(Dart::new(e, false)).edge;
        t.flip(f)?;
        flips.push(f);
    }
    let closing = t
        .isomorphism_from(tri, Dart::new(e, true), Dart::new(e, false))
        .ok_or_else(|| TwistError::NotClosed(tri.label(e).to_string()))?;
    let swaps = closing.vertex_map.iter().enumerate().all(|(v, &w)| {
        if v == a {
            w == b
        } else if v == b {
            w == a
        } else {
            w == v
        }
    });
    if !swaps {
        return Err(TwistError::NotClosed(tri.label(e).to_string()));
    }
    Ok(TwistPlan { flips, flipped: t, closing })
}

/// Append the twist about edge `e` of `reference` (the builder's current
/// triangulation) to the builder.
fn twist_in_builder(
    b: &mut ProgramBuilder,
    reference: &Triangulation,
    e: usize,
    ccw: bool,
) -> Result<(), TwistError> {
    let plan = plan_ccw(reference, e)?;
    if ccw {
        for &f in &plan.flips {
            b.flip(f)?;
        }
        b.relabel(&plan.closing, reference.clone());
    } else {
        b.relabel(&inverse(&plan.closing), plan.flipped.clone());
        for &f in plan.flips.iter().rev() {
            b.flip(f)?;
        }
        b.restore(reference.clone())?;
    }
    Ok(())
}

pub fn inverse(iso: &Isomorphism) -> Isomorphism {
    let mut edge_map = vec![(0, true); iso.edge_map.len()];
    for (i, &(j, same)) in iso.edge_map.iter().enumerate() {
        edge_map[j] = (i, same);
    }
    let mut vertex_map = vec![0; iso.vertex_map.len()];
    for (v, &w) in iso.vertex_map.iter().enumerate() {
        vertex_map[w] = v;
    }
    Isomorphism { edge_map, vertex_map }
}

/// Whether the triangles around both endpoints of `e` form an embedded disk:
/// the neighbours of each endpoint are distinct, and the two neighbour sets
/// only share the apexes of the two triangles on `e`.
pub fn star_is_embedded(tri: &Triangulation, e: usize) -> bool {
    let a = tri.edge(e).tail;
    let b = tri.edge(e).head;
    if a == b {
        return false;
    }
    let ring = |d: Dart| -> Option<Vec<usize>> {
        let heads: Vec<usize> = tri.rotation_from(d).into_iter().map(|x| tri.head(x)).collect();
        let set: HashSet<usize> = heads.iter().copied().collect();
        (set.len() == heads.len()).then_some(heads)
    };
    let (Some(ra), Some(rb)) = (ring(Dart::new(e, true)), ring(Dart::new(e, false))) else {
        return false;
    };
    if ra.contains(&a) || rb.contains(&b) {
        return false;
    }
    let sa: HashSet<usize> = ra.iter().copied().filter(|&v| v != b).collect();
    let sb: HashSet<usize> = rb.iter().copied().filter(|&v| v != a).collect();
    let apexes: HashSet<usize> = [ra[1], *ra.last().unwrap()].into_iter().collect();
    apexes.len() == 2 && sa.intersection(&sb).copied().collect::<HashSet<_>>() == apexes
}

/// The `k x k` cover of a torus triangulation determined by edge offsets.
#[derive(Clone, Debug)]
pub struct Cover {
    pub k: usize,
    pub base_edges: usize,
    pub tri: Triangulation,
}

impl Cover {
    pub fn new(base: &Triangulation, k: usize) -> Result<Cover, TriangulationError> {
        let kk = k * k;
        let ki = k as i64;
        let cell = |p: [i64; 2]| (p[0].rem_euclid(ki) as usize) * k + p[1].rem_euclid(ki) as usize;
        let mut vertices = Vec::with_capacity(base.num_points() * kk);
        for v in base.vertex_labels() {
            for i in 0..k {
                for j in 0..k {
                    vertices.push(format!("{v}@{i},{j}"));
                }
            }
        }
        let mut edges = Vec::with_capacity(base.num_edges() * kk);
        for ed in base.edges() {
            for i in 0..k {
                for j in 0..k {
                    let p = [i as i64 + ed.offset[0], j as i64 + ed.offset[1]];
                    edges.push(Edge {
                        label: format!("{}@{i},{j}", ed.label),
                        tail: ed.tail * kk + i * k + j,
                        head: ed.head * kk + cell(p),
                        offset: [p[0].div_euclid(ki), p[1].div_euclid(ki)],
                    });
                }
            }
        }
        let mut triangles = Vec::with_capacity(base.num_triangles() * kk);
        for t in base.triangles() {
            for i in 0..k {
                for j in 0..k {
                    let mut pos = [i as i64, j as i64];
                    let mut lifted = [Dart::new(0, true); 3];
                    for (slot, d) in t.iter().enumerate() {
                        let off = base.dart_offset(*d);
                        // a reversed dart lies on the lift of its edge whose tail is at its head
                        let s = if d.forward { pos } else { [pos[0] + off[0], pos[1] + off[1]] };
                        lifted[slot] = Dart::new(d.edge * kk + cell(s), d.forward);
                        pos = [pos[0] + off[0], pos[1] + off[1]];
                    }
                    triangles.push(lifted);
                }
            }
        }
        let tri = Triangulation::new(1, vertices, edges, triangles)?;
        Ok(Cover { k, base_edges: base.num_edges(), tri })
    }

    pub fn edge_lift(&self, e: usize, cell: usize) -> usize {
        e * self.k * self.k + cell
    }

    pub fn base_edge(&self, lifted: usize) -> usize {
        lifted / (self.k * self.k)
    }

    /// Base-level program for the twist about base edge `e`.
    fn lifted_twist(&self, e: usize, ccw: bool) -> Result<FlipProgram, TwistError> {
        let kk = self.k * self.k;
        let initial = (0..self.tri.num_edges()).map(|l| (l / kk) as u32).collect();
        let mut b = ProgramBuilder::with_inputs(self.tri.clone(), self.base_edges, initial);
        for c in 0..kk {
            twist_in_builder(&mut b, &self.tri, self.edge_lift(e, c), ccw)?;
        }
        let (full, _) = b.finish();
        Ok(project(&full, self.base_edges, kk))
    }
}

/// Keep one output per base edge (the lift with the smallest dependency
/// cone) and drop everything else.
fn project(full: &FlipProgram, base_edges: usize, kk: usize) -> FlipProgram {
    let cones = full.cone_sizes();
    let outputs: Vec<u32> = (0..base_edges)
        .map(|e| {
            (0..kk)
                .map(|c| full.outputs()[e * kk + c])
                .min_by_key(|&n| (cones[n as usize], n))
                .unwrap()
        })
        .collect();
    FlipProgram::from_parts(base_edges, full.steps().to_vec(), outputs).sliced()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::triangulation::{EdgeData, TriangulationData};

    fn tetrahedron() -> Triangulation {
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
    fn tetrahedron_twist_flips_a1_then_b1() {
        let t = tetrahedron();
        let plan = plan_ccw(&t, 4).unwrap();
        let names: Vec<&str> = plan.flips.iter().map(|&f| t.label(f)).collect();
        assert_eq!(names, ["A1", "B1"]);
    }

    #[test]
    fn tetrahedron_twist_update_rule() {
        let t = tetrahedron();
        let p = half_twist(&t, 4, true).unwrap();
        // (A1, A2, B1, B2, C, D) -> (B2, A1', A2, B1', C, D)
        let out = p.apply(&[1.0, 1.0, 1.0, 1.0, 2.0, 2.0]);
        assert_eq!(out, vec![1.0, 3.0, 1.0, 3.0, 2.0, 2.0]);
        let x = [3.0, 5.0, 4.0, 2.0, 6.0, 1.0];
        let a1p = f64::max(6.0 + 1.0, 2.0 + 5.0) - 3.0;
        let b1p = f64::max(6.0 + 1.0, 2.0 + 5.0) - 4.0;
        assert_eq!(p.apply(&x), vec![2.0, a1p, 5.0, b1p, 6.0, 1.0]);
    }

    #[test]
    fn clockwise_undoes_counter_clockwise() {
        let t = tetrahedron();
        let ccw = half_twist(&t, 4, true).unwrap();
        let cw = half_twist(&t, 4, false).unwrap();
        let x = vec![3.0, 5.0, 4.0, 2.0, 6.0, 1.0];
        assert_eq!(cw.apply(&ccw.apply(&x)), x);
        assert_eq!(ccw.apply(&cw.apply(&x)), x);
    }

    #[test]
    fn star_check_rejects_loops() {
        let t = tetrahedron();
        assert!(star_is_embedded(&t, 4));
    }
}
