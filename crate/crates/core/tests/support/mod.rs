//! Randomized invariants shared by the property tests and the acceptance run.

#![allow(dead_code)]

use num_bigint::BigInt;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use std::sync::OnceLock;
use tepo::builtin::{builtin_models, BETA_STAR_WORDS};
use tepo::entropy::{tepo, Backend, TepoOptions};
use tepo::model::{straight_curve_coords, LatticeModel, Operation};
use tepo::triangulation::Triangulation;

pub const CASES: u32 = 256;

pub fn models() -> &'static [LatticeModel] {
    static M: OnceLock<Vec<LatticeModel>> = OnceLock::new();
    M.get_or_init(builtin_models)
}

pub fn model_and_word(max_len: usize) -> impl Strategy<Value = (usize, Vec<usize>)> {
    (0..models().len()).prop_flat_map(move |m| {
        let n = models()[m].operations.len();
        (Just(m), prop::collection::vec(0..n, 1..=max_len))
    })
}

/// A model, a word and a short scrambling word for the starting curve.
pub fn word_and_curve(max_len: usize) -> impl Strategy<Value = (usize, Vec<usize>, Vec<usize>)> {
    (0..models().len()).prop_flat_map(move |m| {
        let n = models()[m].operations.len();
        (Just(m), prop::collection::vec(0..n, 1..=max_len), prop::collection::vec(0..n, 0..=3))
    })
}

/// Coordinates of a genuine curve: a straight closed curve pushed through a
/// few operations. (The sq2 default vector is not one.)
pub fn lamination(m: &LatticeModel, scramble: &[usize]) -> Vec<BigInt> {
    let straight = straight_curve_coords(m.layout.as_ref().unwrap(), [1, 1]);
    let init: Vec<BigInt> = straight.into_iter().map(BigInt::from).collect();
    m.apply_word(&init, scramble).unwrap()
}

fn unoriented(t: &Triangulation) -> Vec<(usize, usize, [i64; 2])> {
    t.edges()
        .iter()
        .map(|e| {
            let o = [-e.offset[0], -e.offset[1]];
            std::cmp::min((e.tail, e.head, e.offset), (e.head, e.tail, o))
        })
        .collect()
}

/// Flipping an edge twice restores both the coordinates and the
/// triangulation (up to the edge's direction), and the intermediate
/// coordinates satisfy every triangle inequality.
pub fn flip_involution(mi: usize, scramble: &[usize], e_seed: usize) -> Result<(), TestCaseError> {
    let m = &models()[mi];
    let c = lamination(m, scramble);
    let e = e_seed % m.num_edges();
    let mut tri = m.tri.clone();
    let mut x = c.clone();
    if tri.quad_of(e).is_ok() {
        tri.flip_with(e, &mut x).unwrap();
        prop_assert!(tri.violated_triangles(&x).unwrap().is_empty());
        tri.flip_with(e, &mut x).unwrap();
        prop_assert_eq!(&x, &c);
        prop_assert_eq!(unoriented(&tri), unoriented(&m.tri));
    }
    Ok(())
}

pub fn triangle_inequalities(mi: usize, word: &[usize]) -> Result<(), TestCaseError> {
    let m = &models()[mi];
    let mut c = lamination(m, &[]);
    for &o in word {
        c = m.apply_word(&c, &[o]).unwrap();
        prop_assert!(m.tri.violated_triangles(&c).unwrap().is_empty());
    }
    Ok(())
}

pub fn inverse_cancels(mi: usize, word: &[usize], scramble: &[usize]) -> Result<(), TestCaseError> {
    let m = &models()[mi];
    let c = lamination(m, scramble);
    let mut full = word.to_vec();
    full.extend(m.inverse_word(word));
    prop_assert_eq!(m.apply_word(&c, &full).unwrap(), c);
    Ok(())
}

/// The generators inside one operation act on disjoint point pairs, so
/// their programs commute.
pub fn disjoint_commute(mi: usize, op: usize, scramble: &[usize], i: usize, j: usize) -> Result<(), TestCaseError> {
    let m = &models()[mi];
    let twists = &m.operations[op].twists;
    let (a, b) = (twists[i % twists.len()], twists[j % twists.len()]);
    let pa = m.twist_program(a).unwrap();
    let pb = m.twist_program(b).unwrap();
    let c = lamination(m, scramble);
    prop_assert_eq!(pb.apply(&pa.apply(&c)), pa.apply(&pb.apply(&c)));
    Ok(())
}

/// `S w = w' S`, where `w'` is `w` with every generator moved by `S`.
pub fn symmetry_conjugation(mi: usize, word: &[usize], s_seed: usize) -> Result<(), TestCaseError> {
    let m = &models()[mi];
    if m.symmetries.is_empty() {
        return Ok(());
    }
    let s = &m.symmetries[s_seed % m.symmetries.len()];
    let mapped: Vec<usize> = word
        .iter()
        .map(|&o| {
            let mut twists: Vec<_> = m.operations[o].twists.iter().map(|&t| s.map_twist(t)).collect();
            twists.sort();
            m.operation_index(&Operation { twists }).expect("alphabet closed under symmetries")
        })
        .collect();
    let c: Vec<BigInt> = m.initial_coords();
    let lhs = m.apply_symmetry(&m.apply_word(&c, word).unwrap(), &s.name).unwrap();
    let rhs = m.apply_word(&m.apply_symmetry(&c, &s.name).unwrap(), &mapped).unwrap();
    prop_assert_eq!(lhs, rhs);
    Ok(())
}

pub fn backends_agree(mi: usize, word: &[usize]) -> Result<(), TestCaseError> {
    let m = &models()[mi];
    let opts = TepoOptions { tol: 1e-10, max_iter: 120, backend: Backend::Exact };
    let exact = tepo(m, word, None, &opts).unwrap();
    let float = tepo(m, word, None, &TepoOptions { backend: Backend::Float, ..opts }).unwrap();
    prop_assert_eq!(exact.converged, float.converged);
    prop_assert!((exact.tepo - float.tepo).abs() < 1e-9, "{} vs {}", exact.tepo, float.tepo);
    Ok(())
}

pub fn beta_star(name: &str) -> (&'static LatticeModel, Vec<usize>) {
    let m = models().iter().find(|m| m.name == name).unwrap();
    let text = BETA_STAR_WORDS.iter().find(|w| w.0 == name).unwrap().1;
    (m, m.parse_word(text).unwrap())
}

/// Powers and cyclic shifts of a maximizer keep its entropy per operation,
/// so total entropy grows linearly with the power.
pub fn extensive_in_powers(mi: usize, power: usize, shift: usize) -> Result<(), TestCaseError> {
    let (m, w) = beta_star(BETA_STAR_WORDS[mi].0);
    let mut rotated = w.clone();
    rotated.rotate_left(shift % w.len());
    let base = tepo(m, &w, None, &Default::default()).unwrap();
    let pw: Vec<usize> = rotated.iter().copied().cycle().take(rotated.len() * power).collect();
    let r = tepo(m, &pw, None, &Default::default()).unwrap();
    prop_assert!((r.tepo - base.tepo).abs() < 1e-8);
    prop_assert!(((power * w.len()) as f64 * r.tepo - r.dilation.ln()).abs() < 1e-8);
    Ok(())
}

pub fn initial_independence(mi: usize, scramble: &[usize]) -> Result<(), TestCaseError> {
    let (m, w) = beta_star(BETA_STAR_WORDS[mi].0);
    let scramble: Vec<usize> = scramble.iter().map(|o| o % m.operations.len()).collect();
    let c = lamination(m, &scramble);
    let base = tepo(m, &w, None, &Default::default()).unwrap();
    let r = tepo(m, &w, Some(&c), &Default::default()).unwrap();
    prop_assert!(r.converged);
    prop_assert!((r.tepo - base.tepo).abs() < 1e-8, "{} vs {}", r.tepo, base.tepo);
    Ok(())
}

/// Every suite, run through a fresh runner with `cases` cases each.
pub fn run_suites(cases: u32) -> Vec<(&'static str, Result<(), String>)> {
    let cfg = || Config { cases, failure_persistence: None, ..Config::default() };
    let mut out = Vec::new();
    let mut record = |name, r: Result<(), proptest::test_runner::TestError<_>>| {
        out.push((name, r.map_err(|e| e.to_string())));
    };
    record(
        "flip involution",
        TestRunner::new(cfg()).run(&(word_and_curve(1), any::<usize>()), |((mi, _, s), e)| flip_involution(mi, &s, e)).map_err(erase),
    );
    record(
        "triangle inequalities",
        TestRunner::new(cfg()).run(&model_and_word(6), |(mi, w)| triangle_inequalities(mi, &w)).map_err(erase),
    );
    record(
        "inverse cancels",
        TestRunner::new(cfg()).run(&word_and_curve(5), |(mi, w, s)| inverse_cancels(mi, &w, &s)).map_err(erase),
    );
    record(
        "disjoint commutation",
        TestRunner::new(cfg())
            .run(&(word_and_curve(1), any::<usize>(), any::<usize>()), |((mi, w, s), i, j)| disjoint_commute(mi, w[0], &s, i, j))
            .map_err(erase),
    );
    record(
        "symmetry conjugation",
        TestRunner::new(cfg()).run(&(model_and_word(3), any::<usize>()), |((mi, w), s)| symmetry_conjugation(mi, &w, s)).map_err(erase),
    );
    record(
        "extensivity",
        TestRunner::new(cfg())
            .run(&(0..BETA_STAR_WORDS.len(), 1usize..4, 0usize..4), |(mi, p, s)| extensive_in_powers(mi, p, s))
            .map_err(erase),
    );
    record(
        "initial-condition independence",
        TestRunner::new(cfg())
            .run(&(0..BETA_STAR_WORDS.len(), prop::collection::vec(any::<usize>(), 0..4)), |(mi, s)| initial_independence(mi, &s))
            .map_err(erase),
    );
    record(
        "backend agreement",
        TestRunner::new(cfg()).run(&model_and_word(4), |(mi, w)| backends_agree(mi, &w)).map_err(erase),
    );
    out
}

fn erase<T: std::fmt::Debug>(e: proptest::test_runner::TestError<T>) -> proptest::test_runner::TestError<String> {
    match e {
        proptest::test_runner::TestError::Abort(r) => proptest::test_runner::TestError::Abort(r),
        proptest::test_runner::TestError::Fail(r, v) => proptest::test_runner::TestError::Fail(r, format!("{v:?}")),
    }
}
