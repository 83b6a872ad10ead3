//! Square-lattice torus models of any size `M x N`, their perfect matchings
//! and flux classes.
//!
//! Point `(r, c)` sits at `(c, -r)`: rows are counted from the top and
//! columns from the left, both from 0. Graph edges run right and down from
//! each point; every square face is cut by a "/" diagonal from its lower
//! left to its upper right corner. Edge labels are numeric: horizontal edges
//! `1..=MN`, vertical `MN+1..=2MN`, diagonals after that, each in row-major
//! order of the starting point.

use crate::geometry::Layout;
use crate::model::{LatticeModel, ModelBuilder, ModelError, Operation, Twist};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("lattice needs at least 3 rows and 3 columns, got {rows}x{cols}")]
    TooSmall { rows: usize, cols: usize },
    #[error("{rows}x{cols} has an odd number of points, so there are no perfect matchings")]
    OddPoints { rows: usize, cols: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub rows: usize,
    pub cols: usize,
}

impl LatticeSpec {
    pub fn new(rows: usize, cols: usize) -> Self {
        LatticeSpec { rows, cols }
    }

    pub fn num_points(&self) -> usize {
        self.rows * self.cols
    }

    pub fn point(&self, r: usize, c: usize) -> usize {
        (r % self.rows) * self.cols + c % self.cols
    }

    /// Graph edges: index `p` is the horizontal edge leaving point `p`,
    /// index `MN + p` the vertical one.
    pub fn grid_edges(&self) -> Vec<GridEdge> {
        let mut out = Vec::with_capacity(2 * self.num_points());
        for horizontal in [true, false] {
            for r in 0..self.rows {
                for c in 0..self.cols {
                    let (to, wraps) = if horizontal {
                        (self.point(r, c + 1), c + 1 == self.cols)
                    } else {
                        (self.point(r + 1, c), r + 1 == self.rows)
                    };
                    out.push(GridEdge { from: self.point(r, c), to, row: r, col: c, horizontal, wraps });
                }
            }
        }
        out
    }
}

/// A graph edge with its fundamental-domain crossing flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridEdge {
    pub from: usize,
    pub to: usize,
    pub row: usize,
    pub col: usize,
    pub horizontal: bool,
    /// Crosses the right (horizontal edges) or bottom (vertical edges) side
    /// of the fundamental domain.
    pub wraps: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchingTemplate {
    /// Indices into [`LatticeSpec::grid_edges`], ascending.
    pub edges: Vec<usize>,
    pub flux: (i64, i64),
}

/// All perfect matchings of the lattice graph, wrap-around edges included.
/// Depth first: the first uncovered point branches over its incident edges
/// in edge-index order. Odd point counts give no matchings.
pub fn enumerate_matchings(spec: &LatticeSpec) -> Vec<MatchingTemplate> {
    let n = spec.num_points();
    if n % 2 == 1 {
        log::warn!("{}x{} has an odd number of points; no perfect matchings", spec.rows, spec.cols);
        return Vec::new();
    }
    let edges = spec.grid_edges();
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, e) in edges.iter().enumerate() {
        incident[e.from].push(i);
        if e.to != e.from {
            incident[e.to].push(i);
        }
    }
    for v in &mut incident {
        v.sort_unstable();
        v.dedup();
    }
    let mut covered = vec![false; n];
    let mut current = Vec::new();
    let mut out = Vec::new();
    fn rec(
        edges: &[GridEdge],
        incident: &[Vec<usize>],
        covered: &mut [bool],
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let Some(v) = covered.iter().position(|c| !c) else {
            out.push(current.clone());
            return;
        };
        for &i in &incident[v] {
            let e = edges[i];
            let other = if e.from == v { e.to } else { e.from };
            if other == v || covered[other] {
                continue;
            }
            covered[v] = true;
            covered[other] = true;
            current.push(i);
            rec(edges, incident, covered, current, out);
            current.pop();
            covered[v] = false;
            covered[other] = false;
        }
    }
    rec(&edges, &incident, &mut covered, &mut current, &mut out);
    // Two-row or two-column lattices have doubled edges between the same
    // points; those give distinct matchings, which is what we want.
    out.into_iter()
        .map(|mut m| {
            m.sort_unstable();
            let flux = flux_of(spec, &edges, &m);
            MatchingTemplate { edges: m, flux }
        })
        .collect()
}

/// Signed wrap counts: a horizontal edge crossing the right side counts +1
/// in an odd row and -1 in an even row (rows numbered from 1 at the top);
/// a vertical edge crossing the bottom counts likewise by column parity
/// (columns numbered from 1 at the left).
pub fn flux(spec: &LatticeSpec, edges: &[usize]) -> (i64, i64) {
    flux_of(spec, &spec.grid_edges(), edges)
}

fn flux_of(_spec: &LatticeSpec, grid: &[GridEdge], edges: &[usize]) -> (i64, i64) {
    let sign = |k: usize| if (k + 1) % 2 == 1 { 1 } else { -1 };
    let mut h = 0;
    let mut v = 0;
    for &i in edges {
        let e = grid[i];
        if !e.wraps {
            continue;
        }
        if e.horizontal {
            h += sign(e.row);
        } else {
            v += sign(e.col);
        }
    }
    (h, v)
}

pub fn flux_summary(templates: &[MatchingTemplate]) -> BTreeMap<(i64, i64), usize> {
    let mut out = BTreeMap::new();
    for t in templates {
        *out.entry(t.flux).or_insert(0) += 1;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signs {
    /// Every sign combination, all counter-clockwise first.
    All,
    Ccw,
    Cw,
}

/// Operations on matchings whose flux lies in `fluxes`, as twists on the
/// graph edges of the lattice model (graph edge `i` is triangulation edge
/// `i` in a model from [`build_square_lattice_model`]).
pub fn operations_from_flux(spec: &LatticeSpec, fluxes: &[(i64, i64)], signs: Signs) -> Vec<Operation> {
    let templates: Vec<MatchingTemplate> = enumerate_matchings(spec).into_iter().filter(|t| fluxes.contains(&t.flux)).collect();
    if templates.is_empty() {
        log::warn!("no matchings in flux groups {fluxes:?}");
    }
    operations_of(&templates, signs)
}

pub fn operations_of(templates: &[MatchingTemplate], signs: Signs) -> Vec<Operation> {
    let mut ops = Vec::new();
    for t in templates {
        let k = t.edges.len();
        let masks: Vec<u64> = match signs {
            Signs::All => (0..1u64 << k).collect(),
            Signs::Ccw => vec![0],
            Signs::Cw => vec![(1u64 << k) - 1],
        };
        for mask in masks {
            let twists = t.edges.iter().enumerate().map(|(i, &e)| Twist { edge: e, ccw: mask & (1 << (k - 1 - i)) == 0 }).collect();
            ops.push(Operation { twists });
        }
    }
    ops
}

pub fn lattice_layout(spec: &LatticeSpec) -> Layout {
    let (m, n) = (spec.rows, spec.cols);
    let mut l = Layout::new([[n as f64, 0.0], [0.0, m as f64]]);
    for r in 0..m {
        for c in 0..n {
            l.point(&format!("p{r}_{c}"), [c as f64, -(r as f64)]);
        }
    }
    let mn = m * n;
    for (i, e) in spec.grid_edges().iter().enumerate() {
        let v = if e.horizontal { [1.0, 0.0] } else { [0.0, -1.0] };
        l.edge_by(&(i + 1).to_string(), e.from, v, true).expect("grid edge");
    }
    for r in 0..m {
        for c in 0..n {
            // Lower-left corner of the face right of and below point (r, c).
            let p = spec.point(r + 1, c);
            l.edge_by(&(2 * mn + r * n + c + 1).to_string(), p, [1.0, 1.0], false).expect("diagonal");
        }
    }
    l
}

/// The lattice model with the given operation alphabet; `None` takes every
/// maximal operation (all perfect matchings with all signs).
pub fn build_square_lattice_model(spec: &LatticeSpec, alphabet: Option<Vec<Operation>>) -> Result<LatticeModel, LatticeError> {
    if spec.rows < 3 || spec.cols < 3 {
        return Err(LatticeError::TooSmall { rows: spec.rows, cols: spec.cols });
    }
    let ops = match alphabet {
        Some(ops) => ops,
        None => {
            if spec.num_points() % 2 == 1 {
                return Err(LatticeError::OddPoints { rows: spec.rows, cols: spec.cols });
            }
            operations_of(&enumerate_matchings(spec), Signs::All)
        }
    };
    let name = format!("square{}x{}", spec.rows, spec.cols);
    let mut b = ModelBuilder::from_layout(&name, "square", lattice_layout(spec))?;
    b.operations = Some(ops);
    Ok(b.build()?)
}

/// The matching made of the edges from each even point `(r + c` even) one
/// step in lattice direction `d` (`(dx, dy)` in the plane).
pub fn checkerboard_matching(spec: &LatticeSpec, d: (i64, i64)) -> Vec<usize> {
    let grid = spec.grid_edges();
    let (m, n) = (spec.rows as i64, spec.cols as i64);
    let mut out = Vec::new();
    for r in 0..m {
        for c in 0..n {
            if (r + c) % 2 != 0 {
                continue;
            }
            let (r2, c2) = ((r - d.1).rem_euclid(m), (c + d.0).rem_euclid(n));
            let (a, b) = (spec.point(r as usize, c as usize), spec.point(r2 as usize, c2 as usize));
            let horizontal = d.1 == 0;
            // Right and down run along the stored edge direction.
            let forward = d.0 > 0 || d.1 < 0;
            let (from, to) = if forward { (a, b) } else { (b, a) };
            let e = grid
                .iter()
                .position(|g| g.horizontal == horizontal && g.from == from && g.to == to)
                .expect("lattice edge");
            out.push(e);
        }
    }
    out.sort_unstable();
    out
}

/// The lift of the two-point square maximizer: four all-counter-clockwise
/// checkerboard operations, moving the even points right, down, left, up.
/// Needs even `rows` and `cols`.
pub fn beta_star_operations(spec: &LatticeSpec) -> Vec<Operation> {
    [(1, 0), (0, -1), (-1, 0), (0, 1)]
        .iter()
        .map(|&d| Operation { twists: checkerboard_matching(spec, d).into_iter().map(|e| Twist { edge: e, ccw: true }).collect() })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_by_four_counts() {
        let spec = LatticeSpec::new(4, 4);
        let t = enumerate_matchings(&spec);
        assert_eq!(t.len(), 272);
        assert_eq!(t.len() * 256, 69632);
        let s = flux_summary(&t);
        assert_eq!(s[&(0, 0)], 132);
        for f in [(0, 1), (0, -1), (1, 0), (-1, 0)] {
            assert_eq!(s[&f], 32, "{f:?}");
        }
        for f in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            assert_eq!(s[&f], 2, "{f:?}");
        }
        for f in [(0, 2), (0, -2), (2, 0), (-2, 0)] {
            assert_eq!(s[&f], 1, "{f:?}");
        }
        assert_eq!(s.len(), 13);
        let ops = operations_from_flux(&spec, &[(0, 2), (0, -2), (2, 0), (-2, 0)], Signs::All);
        assert_eq!(ops.len(), 1024);
        assert_eq!(operations_from_flux(&spec, &[(0, 0)], Signs::All).len(), 132 * 256);
        assert!(operations_from_flux(&spec, &[], Signs::All).is_empty());
    }

    #[test]
    fn flux_examples() {
        let spec = LatticeSpec::new(4, 4);
        let grid = spec.grid_edges();
        // Horizontal pairs (c, c+1) for even c never wrap.
        let inner: Vec<usize> = (0..grid.len()).filter(|&i| grid[i].horizontal && grid[i].col % 2 == 0).collect();
        assert_eq!(flux(&spec, &inner), (0, 0));
        // Vertical edges in the odd columns (1st and 3rd) pair rows 4-1 across
        // the boundary and 2-3 inside; the even columns pair 1-2 and 3-4.
        let m: Vec<usize> = (0..grid.len())
            .filter(|&i| {
                let g = grid[i];
                !g.horizontal && if g.col % 2 == 0 { g.row % 2 == 1 } else { g.row % 2 == 0 }
            })
            .collect();
        assert_eq!(m.len(), 8);
        assert_eq!(flux(&spec, &m), (0, 2));
    }

    #[test]
    fn translation_by_two_preserves_flux() {
        let spec = LatticeSpec::new(4, 4);
        let grid = spec.grid_edges();
        let shift = |i: usize, dr: usize, dc: usize| {
            let g = grid[i];
            let p = spec.point(g.row + dr, g.col + dc);
            if g.horizontal {
                p
            } else {
                spec.num_points() + p
            }
        };
        for t in enumerate_matchings(&spec) {
            for (dr, dc) in [(2, 0), (0, 2), (2, 2)] {
                let moved: Vec<usize> = t.edges.iter().map(|&i| shift(i, dr, dc)).collect();
                assert_eq!(flux(&spec, &moved), t.flux);
            }
        }
    }

    #[test]
    fn odd_lattices() {
        assert!(enumerate_matchings(&LatticeSpec::new(3, 3)).is_empty());
        assert!(matches!(build_square_lattice_model(&LatticeSpec::new(3, 3), None), Err(LatticeError::OddPoints { .. })));
        assert!(matches!(build_square_lattice_model(&LatticeSpec::new(2, 4), None), Err(LatticeError::TooSmall { .. })));
    }

    #[test]
    fn checkerboard_matchings_are_the_extreme_flux_templates() {
        let spec = LatticeSpec::new(4, 4);
        let mut fluxes: Vec<(i64, i64)> = beta_star_operations(&spec)
            .iter()
            .map(|op| flux(&spec, &op.twists.iter().map(|t| t.edge).collect::<Vec<_>>()))
            .collect();
        fluxes.sort();
        assert_eq!(fluxes, vec![(-2, 0), (0, -2), (0, 2), (2, 0)]);
    }

    fn single_twists(edges: &[usize]) -> Vec<Operation> {
        edges.iter().flat_map(|&e| [true, false].map(|ccw| Operation { twists: vec![Twist { edge: e, ccw }] })).collect()
    }

    #[test]
    fn four_by_four_model_shape() {
        let spec = LatticeSpec::new(4, 4);
        let m = build_square_lattice_model(&spec, Some(beta_star_operations(&spec))).unwrap();
        assert_eq!(m.num_points(), 16);
        assert_eq!(m.graph_edges.len(), 32);
        assert_eq!(m.num_edges(), 48);
        assert_eq!(m.operations.len(), 4);
    }

    #[test]
    fn beta_star_lift_has_the_two_point_entropy() {
        let spec = LatticeSpec::new(4, 4);
        let m = build_square_lattice_model(&spec, Some(beta_star_operations(&spec))).unwrap();
        let r = crate::entropy::tepo(&m, &[0, 1, 2, 3], None, &Default::default()).unwrap();
        assert!(r.converged);
        assert!((r.tepo - 1.061275062).abs() < 1e-7, "{}", r.tepo);
    }

    #[test]
    fn twists_invert_and_disjoint_twists_commute() {
        for (rows, cols) in [(3, 3), (3, 4), (4, 4)] {
            let spec = LatticeSpec::new(rows, cols);
            let grid = spec.grid_edges();
            // Two vertex-disjoint graph edges: (0,0)-(0,1) and (1,2)-(2,2).
            let a = 0;
            let b = grid.iter().position(|g| !g.horizontal && g.row == 1 && g.col == 2).unwrap();
            let m = build_square_lattice_model(&spec, Some(single_twists(&[a, b]))).unwrap();
            let init: Vec<num_bigint::BigInt> = m.initial_coords();
            let n = m.operations.len();
            for op in 0..n {
                let inv = m.inverse_word(&[op]);
                assert_eq!(m.apply_word(&init, &[op, inv[0]]).unwrap(), init, "{rows}x{cols} op {op}");
            }
            for x in 0..2 {
                for y in 2..4 {
                    assert_eq!(m.apply_word(&init, &[x, y]).unwrap(), m.apply_word(&init, &[y, x]).unwrap());
                }
            }
        }
    }
}
