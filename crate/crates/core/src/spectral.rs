//! Invariant train tracks, linearized transition matrices, characteristic
//! polynomials, splitting sequences and veering colorings.
//!
//! High-precision work uses fixed-point big integers: a coordinate vector is
//! stored as integers with an implicit factor `2^-bits`. The flip map is
//! homogeneous of degree one, so it acts on such vectors exactly.

use crate::model::LatticeModel;
use crate::program::FlipProgram;
use crate::triangulation::{Dart, Edge, Isomorphism, Triangulation, TriangulationError};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_BITS: u64 = 512;
/// Relative tolerance used when comparing irrational coordinates.
pub const MATCH_TOL: f64 = 1e-30;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("power iteration did not converge in {0} word applications")]
    NotConverged(usize),
    #[error("coordinates collapsed to zero")]
    Collapsed,
    #[error("tie between the two branches at flip {0}; the linearization is ambiguous")]
    Tie(usize),
    #[error("two edges of one triangle share the largest coordinate at splitting step {0}")]
    MaxTie(usize),
    #[error("no periodic segment within {0} splits")]
    NoPeriod(usize),
    #[error("matrix entry overflow")]
    Overflow,
    #[error("fixture: {0}")]
    Fixture(String),
    #[error(transparent)]
    Triangulation(#[from] TriangulationError),
}

/// Integer matrix, row-major; `m[i][j]` is the coefficient of input `j` in
/// output `i`.
pub type IntMatrix = Vec<Vec<i64>>;

/// Fixed-point coordinate vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Fixed {
    pub bits: u64,
    pub values: Vec<BigInt>,
}

impl Fixed {
    pub fn from_f64(v: &[f64], bits: u64) -> Fixed {
        let scale = 2f64.powi(52);
        let values = v.iter().map(|&x| BigInt::from((x * scale).round() as i64) << (bits - 52)).collect();
        Fixed { bits, values }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        let shift = self.bits.saturating_sub(60);
        let denom = 2f64.powi((self.bits - shift) as i32);
        self.values.iter().map(|x| crate::weight::Weight::to_f64(&(x >> shift)) / denom).collect()
    }

    pub fn max(&self) -> BigInt {
        self.values.iter().max().cloned().unwrap_or_default()
    }

    /// Rescale so the largest entry is exactly `2^bits`.
    pub fn normalized(&self) -> Fixed {
        let m = self.max();
        let one = BigInt::one() << self.bits;
        let values = self.values.iter().map(|x| (x * &one) / &m).collect();
        Fixed { bits: self.bits, values }
    }

    /// Largest entry-wise difference, relative to `2^bits`.
    pub fn distance(&self, other: &Fixed) -> f64 {
        let d = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).max().unwrap_or_default();
        ratio(&d, &(BigInt::one() << self.bits))
    }
}

fn ratio(a: &BigInt, b: &BigInt) -> f64 {
    if a.is_zero() {
        return 0.0;
    }
    let shift = b.bits().max(a.bits()).saturating_sub(1000);
    crate::weight::Weight::to_f64(&(a >> shift)) / crate::weight::Weight::to_f64(&(b >> shift))
}

#[derive(Clone, Debug)]
pub struct Invariant {
    /// Coordinates with largest entry 1.
    pub coords: Vec<f64>,
    pub exact: Fixed,
    /// Growth factor per application of the word.
    pub lambda: f64,
    pub iterations: usize,
    /// `|word(E) - lambda E|_inf / |E|_inf`.
    pub residual: f64,
}

/// Power iteration with max-normalization until successive normalized
/// vectors differ by less than `tol`.
pub fn invariant_coords(model: &LatticeModel, word: &[usize], tol: f64, max_iter: usize) -> Result<Invariant, SpectralError> {
    let p = model.word_program(word);
    let init: Vec<BigInt> = model.initial_coords();
    invariant_of_program(&p, &init, tol, max_iter, DEFAULT_BITS)
}

pub fn invariant_of_program(p: &FlipProgram, initial: &[BigInt], tol: f64, max_iter: usize, bits: u64) -> Result<Invariant, SpectralError> {
    if initial.iter().all(Zero::is_zero) {
        return Err(SpectralError::Collapsed);
    }
    let mut v = Fixed { bits, values: initial.iter().map(|x| x << bits).collect() }.normalized();
    for it in 1..=max_iter {
        let w = Fixed { bits, values: p.apply(&v.values) };
        if w.max() <= BigInt::zero() {
            return Err(SpectralError::Collapsed);
        }
        let next = w.normalized();
        if next.distance(&v) < tol {
            let lambda = ratio(&w.values.iter().sum(), &v.values.iter().sum());
            let coords = next.to_f64();
            let image: Vec<f64> = p.apply(&coords);
            let residual = image.iter().zip(&coords).map(|(a, b)| (a - lambda * b).abs()).fold(0.0, f64::max);
            return Ok(Invariant { coords, exact: next, lambda, iterations: it, residual });
        }
        v = next;
    }
    Err(SpectralError::NotConverged(max_iter))
}

/// Replay `p` at `coords`, replacing each max by the branch it takes.
/// Branches closer than `2^(bits/2)` in fixed point count as ties.
pub fn linearize(p: &FlipProgram, coords: &Fixed) -> Result<IntMatrix, SpectralError> {
    let n = p.n_inputs();
    let tie = BigInt::one() << (coords.bits / 2);
    let mut vals: Vec<BigInt> = coords.values.clone();
    let mut rows: Vec<Vec<i64>> = (0..n).map(|i| unit(n, i)).collect();
    for (k, s) in p.steps().iter().enumerate() {
        let [a, b, c, d, e] = s.map(|x| x as usize);
        let left = &vals[a] + &vals[c];
        let right = &vals[b] + &vals[d];
        if (&left - &right).abs() <= tie {
            return Err(SpectralError::Tie(k));
        }
        let (x, y, v) = if left > right { (a, c, left) } else { (b, d, right) };
        let row = combine(&[(&rows[x], 1), (&rows[y], 1), (&rows[e], -1)])?;
        vals.push(v - &vals[e]);
        rows.push(row);
    }
    Ok(p.outputs().iter().map(|&o| rows[o as usize].clone()).collect())
}

fn unit(n: usize, i: usize) -> Vec<i64> {
    let mut r = vec![0; n];
    r[i] = 1;
    r
}

fn combine(terms: &[(&Vec<i64>, i64)]) -> Result<Vec<i64>, SpectralError> {
    let n = terms[0].0.len();
    let mut out = vec![0i64; n];
    for (r, c) in terms {
        for (o, x) in out.iter_mut().zip(r.iter()) {
            *o = x.checked_mul(*c).and_then(|y| o.checked_add(y)).ok_or(SpectralError::Overflow)?;
        }
    }
    Ok(out)
}

pub fn mat_mul(a: &IntMatrix, b: &IntMatrix) -> Result<IntMatrix, SpectralError> {
    let (n, m, k) = (a.len(), b.first().map_or(0, Vec::len), b.len());
    let mut out = vec![vec![0i64; m]; n];
    for i in 0..n {
        for j in 0..m {
            let mut s = 0i64;
            for t in 0..k {
                s = a[i][t].checked_mul(b[t][j]).and_then(|x| s.checked_add(x)).ok_or(SpectralError::Overflow)?;
            }
            out[i][j] = s;
        }
    }
    Ok(out)
}

/// Characteristic polynomial `det(x I - m)`, coefficients from the leading
/// power down to the constant term (Faddeev-LeVerrier in exact integers).
pub fn char_poly(m: &IntMatrix) -> Vec<BigInt> {
    let n = m.len();
    let a: Vec<Vec<BigInt>> = m.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let mut coeffs = vec![BigInt::one()];
    let mut mk: Vec<Vec<BigInt>> = vec![vec![BigInt::zero(); n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{k-1} I
        let mut next = vec![vec![BigInt::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = BigInt::zero();
                for t in 0..n {
                    s += &a[i][t] * &mk[t][j];
                }
                if i == j {
                    s += &coeffs[k - 1];
                }
                next[i][j] = s;
            }
        }
        let mut tr = BigInt::zero();
        for i in 0..n {
            for t in 0..n {
                tr += &a[i][t] * &next[t][i];
            }
        }
        coeffs.push(-tr / BigInt::from(k));
        mk = next;
    }
    coeffs
}

/// Coefficients read the same forwards and backwards.
pub fn is_palindromic(coeffs: &[BigInt]) -> bool {
    coeffs.iter().eq(coeffs.iter().rev())
}

fn horner(coeffs: &[f64], x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for &c in coeffs {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

/// Largest real root, or `None` if the polynomial has none.
pub fn largest_real_root(coeffs: &[BigInt]) -> Option<f64> {
    let c: Vec<f64> = coeffs.iter().map(|x| ToPrimitive::to_f64(x).unwrap_or(f64::INFINITY)).collect();
    let lead = *c.first()?;
    if c.len() < 2 || lead == 0.0 {
        return None;
    }
    let bound = 1.0 + c[1..].iter().map(|x| (x / lead).abs()).fold(0.0, f64::max);
    let sign = |x: f64| horner(&c, x).0.signum();
    let steps = 20_000;
    let h = 2.0 * bound / steps as f64;
    let mut hi = bound;
    let s_hi = sign(hi);
    for i in 1..=steps {
        let lo = bound - i as f64 * h;
        let s_lo = sign(lo);
        if s_lo == 0.0 {
            return Some(polish(&c, lo));
        }
        if s_lo != s_hi {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if sign(mid) == s_lo {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            return Some(polish(&c, 0.5 * (a + b)));
        }
        hi = lo;
    }
    None
}

fn polish(c: &[f64], mut x: f64) -> f64 {
    for _ in 0..5 {
        let (p, dp) = horner(c, x);
        if dp == 0.0 {
            break;
        }
        let nx = x - p / dp;
        if !nx.is_finite() || (nx - x).abs() > 1e-9 * x.abs().max(1.0) {
            break;
        }
        x = nx;
    }
    x
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralReport {
    pub word: String,
    pub coords: Vec<f64>,
    pub lambda: f64,
    pub tepo: f64,
    pub residual: f64,
    pub matrix: IntMatrix,
    pub char_poly: Vec<String>,
    pub largest_root: Option<f64>,
    pub palindromic: bool,
    /// Present when the word is the two-point square maximizer.
    pub splitting: Option<SplittingSummary>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplittingSummary {
    pub preperiod: usize,
    pub period: usize,
    pub scale: f64,
    pub minimal_matrix: IntMatrix,
    pub minimal_char_poly: Vec<String>,
    pub veering: bool,
}

pub fn spectral_report(model: &LatticeModel, word: &[usize], tol: f64, max_iter: usize) -> Result<SpectralReport, SpectralError> {
    let inv = invariant_coords(model, word, tol, max_iter)?;
    let p = model.word_program(word);
    let matrix = linearize(&p, &inv.exact)?;
    let cp = char_poly(&matrix);
    let splitting = if model.name == "sq2" && model.format_word(word) == "1 3 2 4" {
        let fx = beta_star_fixture()?;
        let seq = splitting_sequence(&fx.tri, &fx.coords, &fx.punctures, 200)?;
        let (a, _) = minimal_transition_matrix(&seq)?;
        let cpm = char_poly(&a);
        Some(SplittingSummary {
            preperiod: seq.preperiod,
            period: seq.period,
            scale: seq.scale,
            minimal_matrix: a,
            minimal_char_poly: cpm.iter().map(ToString::to_string).collect(),
            veering: veering_coloring(&seq).is_some(),
        })
    } else {
        None
    };
    Ok(SpectralReport {
        word: model.format_word(word),
        tepo: inv.lambda.ln() / word.len() as f64,
        coords: inv.coords,
        lambda: inv.lambda,
        residual: inv.residual,
        largest_root: largest_real_root(&cp),
        palindromic: is_palindromic(&cp),
        char_poly: cp.iter().map(ToString::to_string).collect(),
        matrix,
        splitting,
    })
}

/// Split the triangles of `tri` listed in `which` by a new central vertex.
/// The new edges are appended after the existing ones and labeled from
/// `first_label`; returns the new triangulation.
pub fn stellar_subdivide(tri: &Triangulation, which: &[usize], first_label: usize) -> Result<Triangulation, SpectralError> {
    let mut vertices = tri.vertex_labels().to_vec();
    let mut edges: Vec<Edge> = tri.edges().to_vec();
    let mut triangles: Vec<[Dart; 3]> = Vec::new();
    let mut label = first_label;
    for (t, ds) in tri.triangles().iter().enumerate() {
        if !which.contains(&t) {
            triangles.push(*ds);
            continue;
        }
        let c = vertices.len();
        vertices.push(format!("c{}", c));
        let o0 = tri.dart_offset(ds[0]);
        let o1 = tri.dart_offset(ds[1]);
        let corner_offsets = [[0, 0], [-o0[0], -o0[1]], [-o0[0] - o1[0], -o0[1] - o1[1]]];
        let f: Vec<usize> = (0..3)
            .map(|p| {
                edges.push(Edge { label: label.to_string(), tail: tri.tail(ds[p]), head: c, offset: corner_offsets[p] });
                label += 1;
                edges.len() - 1
            })
            .collect();
        let fwd = |e: usize| Dart::new(e, true);
        let rev = |e: usize| Dart::new(e, false);
        triangles.push([ds[0], fwd(f[1]), rev(f[0])]);
        triangles.push([ds[1], fwd(f[2]), rev(f[1])]);
        triangles.push([ds[2], fwd(f[0]), rev(f[2])]);
    }
    Ok(Triangulation::new(tri.genus(), vertices, edges, triangles)?)
}

/// The maximal braid's invariant track on the triangulation with an extra
/// vertex in each complementary region that has three cusps.
#[derive(Clone, Debug)]
pub struct BetaStarFixture {
    pub tri: Triangulation,
    /// Fixed point, normalized so the largest original coordinate is 1.
    pub coords: Fixed,
    /// Vertices that are braided points (the rest were added).
    pub punctures: Vec<usize>,
    /// Coordinates of the added edges and the original edges, as floats.
    pub float_coords: Vec<f64>,
}

pub fn beta_star_fixture() -> Result<BetaStarFixture, SpectralError> {
    let model = crate::builtin::builtin("sq2").map_err(|e| SpectralError::Fixture(e.to_string()))?;
    let word = model.parse_word("1 3 2 4").map_err(|e| SpectralError::Fixture(e.to_string()))?;
    let inv = invariant_coords(&model, &word, 1e-100, 10_000)?;
    let tri = &model.tri;
    let bits = inv.exact.bits;
    // Work at twice the scale so connector weights are integers.
    let v: Vec<BigInt> = inv.exact.values.iter().map(|x| x << 1).collect();
    let zero_tol = BigInt::one() << (bits / 2);
    let mut split = Vec::new();
    let mut connectors = Vec::new();
    for t in 0..tri.num_triangles() {
        let [a, b, c] = tri.triangles()[t].map(|d| v[d.edge].clone());
        let w: [BigInt; 3] = [(&b + &c - &a) / 2, (&a + &c - &b) / 2, (&a + &b - &c) / 2];
        if w.iter().any(|x| *x < -zero_tol.clone()) {
            return Err(SpectralError::Fixture(format!("negative connector in triangle {t}")));
        }
        if w.iter().all(|x| *x > zero_tol) {
            split.push(t);
            connectors.push(w);
        } else if w.iter().filter(|x| x.abs() <= zero_tol).count() != 1 {
            return Err(SpectralError::Fixture(format!("triangle {t} has no single vanishing connector")));
        }
    }
    if split.len() != 2 {
        return Err(SpectralError::Fixture(format!("expected two three-cusp regions, found {}", split.len())));
    }
    let new_tri = stellar_subdivide(tri, &split, tri.num_edges() + 1)?;
    let mut values = v.clone();
    for w in &connectors {
        // Edge from corner p crosses the connector opposite slot p + 1.
        for p in 0..3 {
            values.push(w[(p + 1) % 3].clone());
        }
    }
    let coords = Fixed { bits: bits + 1, values };
    let punctures = (0..tri.num_points()).collect();
    Ok(BetaStarFixture { float_coords: coords.to_f64(), tri: new_tri, coords, punctures })
}

#[derive(Clone, Debug)]
pub struct SplittingStep {
    pub tri: Triangulation,
    pub coords: Fixed,
    /// Edge flipped to reach the next state; `None` for the last state.
    pub flipped: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct SplittingSequence {
    pub steps: Vec<SplittingStep>,
    pub preperiod: usize,
    pub period: usize,
    /// Isomorphism from the last state onto state `preperiod`.
    pub closure: Isomorphism,
    /// Coordinate shrink factor over one period.
    pub scale: f64,
    pub punctures: Vec<usize>,
}

/// Flip the edge with the largest coordinate until some state is isomorphic
/// (carrying braided points to braided points) to an earlier one with
/// proportional coordinates.
pub fn splitting_sequence(tri: &Triangulation, coords: &Fixed, punctures: &[usize], max_steps: usize) -> Result<SplittingSequence, SpectralError> {
    let tie = BigInt::one() << (coords.bits / 2);
    let mut steps = vec![SplittingStep { tri: tri.clone(), coords: coords.normalized(), flipped: None }];
    for k in 0..max_steps {
        let cur = steps.last().unwrap();
        let top = cur.coords.max();
        let tied: Vec<usize> = (0..cur.coords.values.len()).filter(|&e| &top - &cur.coords.values[e] <= tie).collect();
        // Tied edges in disjoint quadrilaterals split independently, so any
        // order gives the same result; take them by index.
        for (i, &a) in tied.iter().enumerate() {
            for &b in &tied[i + 1..] {
                let ta = cur.tri.edge_slots(a).map(|s| s.0);
                if cur.tri.edge_slots(b).iter().any(|s| ta.contains(&s.0)) {
                    return Err(SpectralError::MaxTie(k));
                }
            }
        }
        let e = tied[0];
        let mut t = cur.tri.clone();
        let mut v = cur.coords.values.clone();
        t.flip_with(e, &mut v)?;
        let last = steps.len() - 1;
        steps[last].flipped = Some(e);
        let next_n = Fixed { bits: coords.bits, values: v }.normalized();
        for i in (0..steps.len()).rev() {
            if let Some(iso) = match_state(&t, &next_n, &steps[i].tri, &steps[i].coords, punctures) {
                steps.push(SplittingStep { tri: t, coords: next_n, flipped: None });
                let scale = 1.0 / period_shrink(&steps[i..]);
                let period = steps.len() - 1 - i;
                return Ok(SplittingSequence { steps, preperiod: i, period, closure: iso, scale, punctures: punctures.to_vec() });
            }
        }
        steps.push(SplittingStep { tri: t, coords: next_n, flipped: None });
    }
    Err(SpectralError::NoPeriod(max_steps))
}

/// Largest coordinate after replaying a segment from its (normalized) first
/// state, relative to the starting maximum.
fn period_shrink(segment: &[SplittingStep]) -> f64 {
    let mut v = segment[0].coords.values.clone();
    let mut t = segment[0].tri.clone();
    for s in &segment[..segment.len() - 1] {
        t.flip_with(s.flipped.unwrap(), &mut v).expect("replay of a recorded flip");
    }
    let end = Fixed { bits: segment[0].coords.bits, values: v };
    ratio(&end.max(), &(BigInt::one() << end.bits))
}

fn match_state(a: &Triangulation, ca: &Fixed, b: &Triangulation, cb: &Fixed, punctures: &[usize]) -> Option<Isomorphism> {
    if a.num_edges() != b.num_edges() {
        return None;
    }
    let tol = ratio_tol(ca.bits);
    a.isomorphisms(b).into_iter().find(|iso| {
        punctures.iter().all(|p| punctures.contains(&iso.vertex_map[*p]))
            && iso.edge_map.iter().enumerate().all(|(i, &(j, _))| {
                let d = (&ca.values[i] - &cb.values[j]).abs();
                d <= tol
            })
    })
}

fn ratio_tol(bits: u64) -> BigInt {
    // MATCH_TOL relative to 2^bits, taken as 2^(bits - 99).
    BigInt::one() << bits.saturating_sub(99)
}

/// Folding matrix over one period of the splitting sequence, reduced to a
/// minimal set of coordinates (edges whose values determine the rest through
/// the triangle equalities). Each candidate set is ordered by increasing
/// coordinate; among sets giving a non-negative integer matrix the one with
/// the smallest entry sum wins, then the one with the smallest coordinate
/// total. Returns the matrix and the chosen edges.
pub fn minimal_transition_matrix(seq: &SplittingSequence) -> Result<(IntMatrix, Vec<usize>), SpectralError> {
    let full = folding_matrix(seq)?;
    let start = &seq.steps[seq.preperiod];
    let relations = switch_relations(&start.tri, &start.coords)?;
    let n = start.coords.values.len();
    let dim = n - relation_rank(&relations, n);
    let mut best: Option<((i64, BigInt), IntMatrix, Vec<usize>)> = None;
    for mut basis in combinations(n, dim) {
        basis.sort_by(|&a, &b| start.coords.values[a].cmp(&start.coords.values[b]).then(a.cmp(&b)));
        let Some(ext) = extension(&relations, n, &basis) else { continue };
        let Some(a) = restrict(&full, &ext, &basis) else { continue };
        if a.iter().flatten().any(|&x| x < 0) {
            continue;
        }
        let key = (a.iter().flatten().sum::<i64>(), basis.iter().map(|&e| &start.coords.values[e]).sum::<BigInt>());
        if best.as_ref().is_none_or(|b| key < b.0) {
            best = Some((key, a, basis));
        }
    }
    best.map(|(_, a, b)| (a, b)).ok_or_else(|| SpectralError::Fixture("no non-negative minimal basis".into()))
}

fn relation_rank(relations: &[(usize, [usize; 2])], n: usize) -> usize {
    let mut rows: Vec<Vec<BigRational>> = relations
        .iter()
        .map(|&(big, [a, b])| {
            let mut r = vec![0i64; n];
            r[big] += 1;
            r[a] -= 1;
            r[b] -= 1;
            r.into_iter().map(|x| BigRational::from_integer(x.into())).collect()
        })
        .collect();
    let mut rank = 0;
    for col in 0..n {
        let Some(piv) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else { continue };
        rows.swap(rank, piv);
        for r in rank + 1..rows.len() {
            if !rows[r][col].is_zero() {
                let f = &rows[r][col] / &rows[rank][col];
                let pr = rows[rank].clone();
                for (x, y) in rows[r].iter_mut().zip(&pr) {
                    *x = &*x - &f * y;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Linear map on the coordinates of state `preperiod`: send them through the
/// closing isomorphism to the last state and fold back to the start.
pub fn folding_matrix(seq: &SplittingSequence) -> Result<IntMatrix, SpectralError> {
    let start = seq.preperiod;
    let n = seq.steps[start].coords.values.len();
    // Linear rows of the split map from the start of the period.
    let mut rows: Vec<Vec<i64>> = (0..n).map(|i| unit(n, i)).collect();
    let mut t = seq.steps[start].tri.clone();
    let mut vals = seq.steps[start].coords.values.clone();
    for s in &seq.steps[start..seq.steps.len() - 1] {
        let e = s.flipped.unwrap();
        let q = t.quad_of(e)?;
        let [x, y, p, qq] = q.side_edges();
        let left = &vals[x] + &vals[p];
        let right = &vals[y] + &vals[qq];
        let first = left > right;
        let r = if first {
            combine(&[(&rows[x], 1), (&rows[p], 1), (&rows[e], -1)])?
        } else {
            combine(&[(&rows[y], 1), (&rows[qq], 1), (&rows[e], -1)])?
        };
        t.flip_with(e, &mut vals)?;
        rows[e] = r;
    }
    // rows: end coordinates as functions of start coordinates (split map S).
    // The closure says end[k] = mu * start[iso(k)]; the folding map is the
    // inverse of S composed with that identification, computed exactly.
    let s: Vec<Vec<BigRational>> = rows.iter().map(|r| r.iter().map(|&x| BigRational::from_integer(x.into())).collect()).collect();
    let inv = invert(&s).ok_or_else(|| SpectralError::Fixture("split map is singular".into()))?;
    // P: start coordinates -> end coordinates under the closure: end[k] = start[iso(k)].
    let mut out = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in 0..n {
            // (S^-1 P)[i][j] = sum_k Sinv[i][k] P[k][j], P[k][j] = 1 iff iso(k) = j.
            let mut acc = BigRational::zero();
            for k in 0..n {
                if seq.closure.edge_map[k].0 == j {
                    acc += &inv[i][k];
                }
            }
            if !acc.is_integer() {
                return Err(SpectralError::Fixture("folding matrix is not integral".into()));
            }
            out[i][j] = acc.to_integer().to_i64().ok_or(SpectralError::Overflow)?;
        }
    }
    Ok(out)
}

fn invert(m: &[Vec<BigRational>]) -> Option<Vec<Vec<BigRational>>> {
    let n = m.len();
    let mut a: Vec<Vec<BigRational>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }));
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        let p = a[col][col].clone();
        for x in a[col].iter_mut() {
            *x = &*x / &p;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot_row = a[col].clone();
                for (x, y) in a[r].iter_mut().zip(&pivot_row) {
                    *x = &*x - &f * y;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// One linear relation per triangle: the largest side equals the sum of the
/// other two. Each relation is `(big, [small, small])`.
pub fn switch_relations(tri: &Triangulation, coords: &Fixed) -> Result<Vec<(usize, [usize; 2])>, SpectralError> {
    let tol = BigInt::one() << (coords.bits / 2);
    let mut out = Vec::new();
    for (t, ds) in tri.triangles().iter().enumerate() {
        let e = ds.map(|d| d.edge);
        let big = (0..3).max_by(|&a, &b| coords.values[e[a]].cmp(&coords.values[e[b]])).unwrap();
        let small = [e[(big + 1) % 3], e[(big + 2) % 3]];
        let d = &coords.values[e[big]] - &coords.values[small[0]] - &coords.values[small[1]];
        if d.abs() > tol {
            return Err(SpectralError::Fixture(format!("triangle {t} has no triangle equality")));
        }
        let rel = (e[big], small);
        if !out.iter().any(|r: &(usize, [usize; 2])| r.0 == rel.0 && (r.1 == rel.1 || r.1 == [rel.1[1], rel.1[0]])) {
            out.push(rel);
        }
    }
    Ok(out)
}

/// Express every coordinate as an integer combination of the `basis`
/// coordinates using the relations; `None` if they do not determine it or
/// the combination is not integral.
pub fn extension(relations: &[(usize, [usize; 2])], n: usize, basis: &[usize]) -> Option<Vec<Vec<i64>>> {
    // Unknowns are the non-basis coordinates; solve R_u u = -R_b b.
    let rest: Vec<usize> = (0..n).filter(|i| !basis.contains(i)).collect();
    if relations.len() < rest.len() {
        return None;
    }
    let d = basis.len();
    let q = |x: i64| BigRational::from_integer(x.into());
    // Augmented rows: coefficients of the unknowns | right-hand side per basis vector.
    let mut rows: Vec<Vec<BigRational>> = relations
        .iter()
        .map(|&(big, [a, b])| {
            let mut coef = vec![0i64; n];
            coef[big] += 1;
            coef[a] -= 1;
            coef[b] -= 1;
            let mut r: Vec<BigRational> = rest.iter().map(|&i| q(coef[i])).collect();
            r.extend(basis.iter().map(|&i| q(-coef[i])));
            r
        })
        .collect();
    let m = rest.len();
    for col in 0..m {
        let piv = (col..rows.len()).find(|&r| !rows[r][col].is_zero())?;
        rows.swap(col, piv);
        let p = rows[col][col].clone();
        for x in rows[col].iter_mut() {
            *x = &*x / &p;
        }
        for r in 0..rows.len() {
            if r != col && !rows[r][col].is_zero() {
                let f = rows[r][col].clone();
                let pr = rows[col].clone();
                for (x, y) in rows[r].iter_mut().zip(&pr) {
                    *x = &*x - &f * y;
                }
            }
        }
    }
    // Leftover rows must be consistent (all zero).
    if rows[m..].iter().any(|r| r.iter().any(|x| !x.is_zero())) {
        return None;
    }
    let mut out = vec![vec![0i64; d]; n];
    for (k, &b) in basis.iter().enumerate() {
        out[b][k] = 1;
    }
    for (k, &u) in rest.iter().enumerate() {
        for j in 0..d {
            let v = &rows[k][m + j];
            if !v.is_integer() {
                return None;
            }
            out[u][j] = v.to_integer().to_i64()?;
        }
    }
    Some(out)
}

pub fn restrict(full: &IntMatrix, ext: &[Vec<i64>], basis: &[usize]) -> Option<IntMatrix> {
    let d = basis.len();
    let mut out = vec![vec![0i64; d]; d];
    for (i, &b) in basis.iter().enumerate() {
        for j in 0..d {
            let mut s = 0i64;
            for (k, row) in ext.iter().enumerate() {
                s = s.checked_add(full[b][k].checked_mul(row[j])?)?;
            }
            out[i][j] = s;
        }
    }
    Some(out)
}

pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Black/blue coloring of the periodic segment: at every flip the four
/// sides of the quadrilateral alternate colors and the black pair forms a
/// "Z" with the diagonal being flipped.
#[derive(Clone, Debug, PartialEq)]
pub struct VeeringColoring {
    /// `colors[s][e]` for each state of the periodic segment; `true` is black.
    pub colors: Vec<Vec<bool>>,
    /// Number of colorings satisfying the alternation constraints alone,
    /// counting a global swap as distinct.
    pub alternating_solutions: u64,
}

pub fn veering_coloring(seq: &SplittingSequence) -> Option<VeeringColoring> {
    veering_coloring_with(seq, &[])
}

/// As [`veering_coloring`] with some colors fixed in advance:
/// `(state offset in the period, edge, black)`.
pub fn veering_coloring_with(seq: &SplittingSequence, fixed: &[(usize, usize, bool)]) -> Option<VeeringColoring> {
    let seg = &seq.steps[seq.preperiod..];
    let n = seg[0].coords.values.len();
    // Variable per (state, edge); an edge keeps its variable until flipped.
    let mut var = vec![vec![0usize; n]; seg.len()];
    let mut count = n;
    for e in 0..n {
        var[0][e] = e;
    }
    for s in 1..seg.len() {
        let flipped = seg[s - 1].flipped.unwrap();
        for e in 0..n {
            var[s][e] = if e == flipped {
                count += 1;
                count - 1
            } else {
                var[s - 1][e]
            };
        }
    }
    // Parity union-find: parity[v] relative to its root.
    let mut uf = ParityUf::new(count);
    let last = seg.len() - 1;
    for e in 0..n {
        let (j, _) = seq.closure.edge_map[e];
        if !uf.union(var[last][e], var[0][j], false) {
            return None;
        }
    }
    let mut z_black = Vec::new();
    let mut tri = seg[0].tri.clone();
    for s in 0..last {
        let e = seg[s].flipped.unwrap();
        let [x, y, p, q] = tri.quad_of(e).ok()?.side_edges();
        let v = |k: usize| var[s][k];
        if !(uf.union(v(x), v(p), false) && uf.union(v(y), v(q), false) && uf.union(v(x), v(y), true)) {
            return None;
        }
        z_black.push(v(x));
        tri.flip(e).ok()?;
    }
    let roots: std::collections::BTreeSet<usize> = (0..count).map(|v| uf.find(v).0).collect();
    let alternating_solutions = 1u64 << roots.len().min(63);
    // Fix root colors from the Z rule and the preset colors.
    let mut root_color: std::collections::BTreeMap<usize, bool> = Default::default();
    let mut demands: Vec<(usize, bool)> = z_black.iter().map(|&v| (v, true)).collect();
    demands.extend(fixed.iter().map(|&(s, e, b)| (var[s][e], b)));
    for (v, black) in demands {
        let (r, par) = uf.find(v);
        let want = black ^ par;
        if *root_color.entry(r).or_insert(want) != want {
            return None;
        }
    }
    let colors = (0..seg.len())
        .map(|s| {
            (0..n)
                .map(|e| {
                    let (r, par) = uf.find(var[s][e]);
                    root_color.get(&r).copied().unwrap_or(true) ^ par
                })
                .collect()
        })
        .collect();
    Some(VeeringColoring { colors, alternating_solutions })
}

struct ParityUf {
    parent: Vec<usize>,
    parity: Vec<bool>,
}

impl ParityUf {
    fn new(n: usize) -> Self {
        ParityUf { parent: (0..n).collect(), parity: vec![false; n] }
    }

    fn find(&mut self, v: usize) -> (usize, bool) {
        let mut par = false;
        let mut x = v;
        while self.parent[x] != x {
            par ^= self.parity[x];
            x = self.parent[x];
        }
        (x, par)
    }

    /// Record `color(a) != color(b)` when `differ`, else equality; false on
    /// contradiction.
    fn union(&mut self, a: usize, b: usize, differ: bool) -> bool {
        let (ra, pa) = self.find(a);
        let (rb, pb) = self.find(b);
        if ra == rb {
            return (pa ^ pb) == differ;
        }
        self.parent[ra] = rb;
        self.parity[ra] = pa ^ pb ^ differ;
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::builtin;

    const EXPECTED_COORDS: [f64; 6] = [1.0, 0.57230276, 0.89005364, 0.34601434, 0.65398566, 0.91831709];

    fn golden_dilation() -> f64 {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        phi + phi.sqrt()
    }

    fn beta_star() -> (LatticeModel, Vec<usize>) {
        let m = builtin("sq2").unwrap();
        let w = m.parse_word("1 3 2 4").unwrap();
        (m, w)
    }

    #[test]
    fn invariant_track_of_beta_star() {
        let (m, w) = beta_star();
        let inv = invariant_coords(&m, &w, 1e-40, 1000).unwrap();
        for (a, b) in inv.coords.iter().zip(EXPECTED_COORDS) {
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
        assert!((inv.lambda - 69.7627534).abs() < 1e-5);
        assert!(inv.residual < 1e-7);
        let back = invariant_coords(&m, &m.inverse_word(&w), 1e-40, 1000).unwrap();
        assert!((back.lambda - inv.lambda).abs() < 1e-8);
    }

    #[test]
    fn linearization_matches_dilation() {
        let (m, w) = beta_star();
        let inv = invariant_coords(&m, &w, 1e-40, 1000).unwrap();
        let p = m.word_program(&w);
        let a = linearize(&p, &inv.exact).unwrap();
        let cp = char_poly(&a);
        assert!((largest_real_root(&cp).unwrap() - inv.lambda).abs() < 1e-6);
        assert!(is_palindromic(&cp));
        // Small perturbations do not change the branch pattern.
        let noisy: Vec<f64> = inv.coords.iter().enumerate().map(|(i, x)| x + 1e-6 * (i as f64 - 2.5)).collect();
        assert_eq!(linearize(&p, &Fixed::from_f64(&noisy, DEFAULT_BITS)).unwrap(), a);
        // Applying the matrix to the invariant vector scales it by lambda.
        for (row, x) in a.iter().zip(&inv.coords) {
            let y: f64 = row.iter().zip(&inv.coords).map(|(&c, v)| c as f64 * v).sum();
            assert!((y - inv.lambda * x).abs() < 1e-8);
        }
    }

    #[test]
    fn identity_program_linearizes_to_identity() {
        let p = FlipProgram::identity(4);
        let a = linearize(&p, &Fixed::from_f64(&[1.0, 0.5, 0.25, 0.75], 128)).unwrap();
        assert_eq!(a, (0..4).map(|i| unit(4, i)).collect::<IntMatrix>());
    }

    #[test]
    fn ties_are_rejected() {
        let (m, w) = beta_star();
        let p = m.word_program(&w);
        // The all-equal vector makes both branches of some flip coincide.
        let flat = Fixed::from_f64(&[1.0; 6], 128);
        assert!(matches!(linearize(&p, &flat), Err(SpectralError::Tie(_))));
    }

    #[test]
    fn quartic_closed_form() {
        let a: IntMatrix = vec![vec![0, 1, 0, 0], vec![0, 0, 0, 1], vec![0, 1, 1, 1], vec![1, 1, 2, 1]];
        let cp = char_poly(&a);
        assert_eq!(cp, [1, -2, -2, -2, 1].map(BigInt::from).to_vec());
        assert!(is_palindromic(&cp));
        let r = largest_real_root(&cp).unwrap();
        assert!((r - golden_dilation()).abs() < 1e-12, "{r}");
        assert!((r.ln() - 1.061275062).abs() < 1e-9);
        assert!((r.powi(4) - 69.7627534).abs() < 1e-5);
    }

    #[test]
    fn char_poly_small_cases() {
        assert_eq!(char_poly(&vec![vec![2, 1], vec![1, 1]]), [1, -3, 1].map(BigInt::from).to_vec());
        assert_eq!(largest_real_root(&[1, 0, 1].map(BigInt::from)), None);
        assert!(!is_palindromic(&[1, -3, 2].map(BigInt::from)));
    }

    #[test]
    fn fixture_has_triangle_equalities() {
        let fx = beta_star_fixture().unwrap();
        assert_eq!(fx.tri.num_points(), 4);
        assert_eq!(fx.tri.num_edges(), 12);
        assert_eq!(switch_relations(&fx.tri, &fx.coords).unwrap().len(), 8);
        for target in [0.16811739, 0.34601434, 0.40418537, 0.48586828] {
            assert!(fx.float_coords.iter().any(|x| (x - target).abs() < 1e-7), "{target}");
        }
    }

    #[test]
    fn splitting_sequence_and_folding_matrix() {
        let fx = beta_star_fixture().unwrap();
        let seq = splitting_sequence(&fx.tri, &fx.coords, &fx.punctures, 200).unwrap();
        assert!(seq.period > 0);
        assert!((seq.scale - golden_dilation()).abs() < 1e-9);
        assert!((seq.scale.powi(4) - 69.7627534).abs() < 1e-5);
        let (a, basis) = minimal_transition_matrix(&seq).unwrap();
        assert_eq!(a, vec![vec![0, 1, 0, 0], vec![0, 0, 0, 1], vec![0, 1, 1, 1], vec![1, 1, 2, 1]]);
        assert_eq!(basis.len(), 4);
        // The full folding matrix carries the same quartic as a factor.
        let full = char_poly(&folding_matrix(&seq).unwrap());
        assert!((largest_real_root(&full).unwrap() - golden_dilation()).abs() < 1e-9);
    }

    #[test]
    fn veering_coloring_exists_and_is_unique() {
        let fx = beta_star_fixture().unwrap();
        let seq = splitting_sequence(&fx.tri, &fx.coords, &fx.punctures, 200).unwrap();
        let c = veering_coloring(&seq).unwrap();
        assert_eq!(c.alternating_solutions, 2);
        // Pre-color a side that the first flip's Z rule forces to be black
        // as blue instead.
        let s = &seq.steps[seq.preperiod];
        let [x, ..] = s.tri.quad_of(s.flipped.unwrap()).unwrap().side_edges();
        assert!(veering_coloring_with(&seq, &[(0, x, false)]).is_none());
    }

    #[test]
    fn integral_curve_has_no_growth() {
        let m = builtin("sq2").unwrap();
        // A simple closed curve: the image of a straight curve under a twist.
        let c: Vec<BigInt> = m.apply_word(&[2u64, 2, 1, 1, 2, 1].map(BigInt::from), &m.parse_word("1").unwrap()).unwrap();
        let fx = Fixed { bits: 64, values: c.iter().map(|x| x << 64).collect() };
        match splitting_sequence(&m.tri, &fx, &[0, 1], 100) {
            Ok(seq) => assert!((seq.scale - 1.0).abs() < 1e-9, "{}", seq.scale),
            Err(e) => assert!(matches!(e, SpectralError::MaxTie(_) | SpectralError::NoPeriod(_) | SpectralError::Triangulation(_))),
        }
    }
}
