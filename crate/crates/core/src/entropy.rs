//! Topological entropy per operation by iterated coordinate growth.
//!
//! Starting from a coordinate vector `c_0`, iterate `c_k = word(c_{k-1})`
//! and watch `W_k = sum(c_k)`. The estimate after `k` applications is
//! `h_k = ln(W_k / W_{k-1}) / N` for a word of `N` operations; iteration
//! stops once two successive estimates agree to within `tol`.

use crate::model::LatticeModel;
use crate::program::FlipProgram;
use crate::weight::bigint_ln;
use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::str::FromStr;
use thiserror::Error;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 200;
pub const DEFAULT_ZERO_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntropyError {
    #[error("initial coordinates are all zero")]
    ZeroInitial,
    #[error("coordinate vector has {found} entries, model has {expected} edges")]
    Dimension { found: usize, expected: usize },
    #[error("empty braid word")]
    EmptyWord,
    #[error("negative initial coordinate")]
    Negative,
    #[error("unknown backend {0:?} (expected exact or float)")]
    UnknownBackend(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Unbounded integers.
    #[default]
    Exact,
    /// `f64` renormalized by the maximum entry after each application.
    Float,
}

impl FromStr for Backend {
    type Err = EntropyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(Backend::Exact),
            "float" => Ok(Backend::Float),
            _ => Err(EntropyError::UnknownBackend(s.to_string())),
        }
    }
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Backend::Exact => "exact",
            Backend::Float => "float",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TepoOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub backend: Backend,
}

impl Default for TepoOptions {
    fn default() -> Self {
        TepoOptions { tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER, backend: Backend::Exact }
    }
}

impl TepoOptions {
    pub fn float(tol: f64, max_iter: usize) -> Self {
        TepoOptions { tol, max_iter, backend: Backend::Float }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TepoReport {
    pub tepo: f64,
    /// `exp(N * tepo)`.
    pub dilation: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final coordinates scaled so the largest entry is 1.
    pub coords: Vec<f64>,
    pub backend: Backend,
    pub word_length: usize,
    /// `ln W_k` for `k = 0..=iterations`.
    pub log_weights: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    PseudoAnosovLike,
    EntropyZero,
}

pub fn tepo(
    model: &LatticeModel,
    word: &[usize],
    initial: Option<&[BigInt]>,
    opts: &TepoOptions,
) -> Result<TepoReport, EntropyError> {
    if word.is_empty() {
        return Err(EntropyError::EmptyWord);
    }
    let init: Vec<BigInt> = match initial {
        Some(c) => c.to_vec(),
        None => model.initial_coords(),
    };
    let progs: Vec<&FlipProgram> = word.iter().map(|&o| model.op_program(o)).collect();
    tepo_programs(&progs, &init, opts)
}

/// Entropy per operation of the composition of `ops` (one program per
/// operation, applied in order).
pub fn tepo_programs(ops: &[&FlipProgram], initial: &[BigInt], opts: &TepoOptions) -> Result<TepoReport, EntropyError> {
    let n = ops.first().ok_or(EntropyError::EmptyWord)?.n_inputs();
    if initial.len() != n {
        return Err(EntropyError::Dimension { found: initial.len(), expected: n });
    }
    if initial.iter().any(|x| x.sign() == num_bigint::Sign::Minus) {
        return Err(EntropyError::Negative);
    }
    if initial.iter().all(Zero::is_zero) {
        return Err(EntropyError::ZeroInitial);
    }
    match opts.backend {
        Backend::Exact => Ok(run_exact(ops, initial, opts)),
        Backend::Float => {
            let init: Vec<f64> = initial.iter().map(crate::weight::Weight::to_f64).collect();
            Ok(run_float(ops, &init, opts))
        }
    }
}

fn finish(ops: usize, estimates: &[f64], log_weights: Vec<f64>, coords: Vec<f64>, converged: bool, backend: Backend) -> TepoReport {
    let tepo = estimates.last().copied().unwrap_or(0.0).max(0.0);
    TepoReport {
        tepo,
        dilation: (ops as f64 * tepo).exp(),
        iterations: estimates.len(),
        converged,
        coords,
        backend,
        word_length: ops,
        log_weights,
    }
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let m = v.iter().copied().fold(0.0, f64::max);
    if m > 0.0 {
        v.iter().map(|x| x / m).collect()
    } else {
        v.to_vec()
    }
}

fn run_exact(ops: &[&FlipProgram], initial: &[BigInt], opts: &TepoOptions) -> TepoReport {
    let big_sum = |v: &[BigInt]| v.iter().fold(BigInt::zero(), |a, b| a + b);
    let mut c = initial.to_vec();
    let mut w = big_sum(&c);
    let mut log_weights = vec![bigint_ln(&w)];
    let mut estimates = Vec::new();
    let mut converged = false;
    for _ in 0..opts.max_iter {
        for p in ops {
            c = p.apply(&c);
        }
        let w_new = big_sum(&c);
        let h = if w_new.is_zero() { 0.0 } else { log_ratio(&w_new, &w) / ops.len() as f64 };
        log_weights.push(if w_new.is_zero() { f64::NEG_INFINITY } else { bigint_ln(&w_new) });
        w = w_new;
        estimates.push(h);
        if w.is_zero() {
            break;
        }
        if let [.., a, b] = estimates[..] {
            if (a - b).abs() < opts.tol {
                converged = true;
                break;
            }
        }
    }
    let shift = c.iter().map(|x| x.bits()).max().unwrap_or(0).saturating_sub(60);
    let top: Vec<f64> = c.iter().map(|x| crate::weight::Weight::to_f64(&(x >> shift))).collect();
    finish(ops.len(), &estimates, log_weights, normalized(&top), converged, Backend::Exact)
}

/// `ln(a / b)` for positive big integers, keeping about 60 bits of each.
fn log_ratio(a: &BigInt, b: &BigInt) -> f64 {
    let shift = b.bits().min(a.bits()).saturating_sub(60);
    let fa = crate::weight::Weight::to_f64(&(a >> shift));
    let fb = crate::weight::Weight::to_f64(&(b >> shift));
    if fa.is_finite() && fb.is_finite() {
        (fa / fb).ln()
    } else {
        bigint_ln(a) - bigint_ln(b)
    }
}

fn run_float(ops: &[&FlipProgram], initial: &[f64], opts: &TepoOptions) -> TepoReport {
    let mut ev = FloatEvaluator::new(initial.len());
    let mut estimates = Vec::new();
    let mut log_weights = Vec::new();
    let (converged, coords) = ev.run(ops, initial, opts.tol, opts.max_iter, &mut estimates, Some(&mut log_weights));
    finish(ops.len(), &estimates, log_weights, coords, converged, Backend::Float)
}

/// Reusable buffers for repeated float evaluations (one per search worker).
#[derive(Clone, Debug)]
pub struct FloatEvaluator {
    cur: Vec<f64>,
    next: Vec<f64>,
    scratch: Vec<f64>,
}

/// Outcome of a float evaluation without the report bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuickTepo {
    pub tepo: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FloatEvaluator {
    pub fn new(n: usize) -> Self {
        FloatEvaluator { cur: vec![0.0; n], next: vec![0.0; n], scratch: Vec::with_capacity(4 * n) }
    }

    /// Iterate until two successive estimates differ by less than `tol`.
    pub fn quick(&mut self, ops: &[&FlipProgram], initial: &[f64], tol: f64, max_iter: usize) -> QuickTepo {
        let n = ops.len() as f64;
        self.cur.clear();
        self.cur.extend_from_slice(initial);
        let mut w: f64 = self.cur.iter().sum();
        let mut prev = f64::NAN;
        let mut h = 0.0;
        for it in 1..=max_iter {
            for p in ops {
                self.next.resize(p.n_outputs(), 0.0);
                p.apply_f64(&self.cur, &mut self.scratch, &mut self.next);
                std::mem::swap(&mut self.cur, &mut self.next);
            }
            let mut sum = 0.0;
            let mut max = 0.0f64;
            for &x in &self.cur {
                sum += x;
                max = max.max(x);
            }
            if sum <= 0.0 {
                return QuickTepo { tepo: 0.0, converged: true, iterations: it };
            }
            h = (sum / w).ln() / n;
            let inv = 1.0 / max;
            for x in &mut self.cur {
                *x *= inv;
            }
            w = sum * inv;
            if (h - prev).abs() < tol {
                return QuickTepo { tepo: h.max(0.0), converged: true, iterations: it };
            }
            prev = h;
        }
        QuickTepo { tepo: h.max(0.0), converged: false, iterations: max_iter }
    }

    fn run(
        &mut self,
        ops: &[&FlipProgram],
        initial: &[f64],
        tol: f64,
        max_iter: usize,
        estimates: &mut Vec<f64>,
        mut log_weights: Option<&mut Vec<f64>>,
    ) -> (bool, Vec<f64>) {
        let n = ops.len() as f64;
        self.cur.clear();
        self.cur.extend_from_slice(initial);
        let mut w: f64 = self.cur.iter().sum();
        let mut log_scale = 0.0;
        if let Some(l) = log_weights.as_deref_mut() {
            l.push(w.ln());
        }
        for _ in 0..max_iter {
            for p in ops {
                self.next.resize(p.n_outputs(), 0.0);
                p.apply_f64(&self.cur, &mut self.scratch, &mut self.next);
                std::mem::swap(&mut self.cur, &mut self.next);
            }
            let sum: f64 = self.cur.iter().sum();
            let max = self.cur.iter().copied().fold(0.0, f64::max);
            if sum <= 0.0 {
                estimates.push(0.0);
                return (true, self.cur.clone());
            }
            let h = (sum / w).ln() / n;
            if let Some(l) = log_weights.as_deref_mut() {
                l.push(log_scale + sum.ln());
            }
            log_scale += max.ln();
            for x in &mut self.cur {
                *x /= max;
            }
            w = sum / max;
            estimates.push(h);
            if let [.., a, b] = estimates[..] {
                if (a - b).abs() < tol {
                    return (true, self.cur.clone());
                }
            }
        }
        (false, self.cur.clone())
    }
}

/// Entropy-zero when the estimate is below `threshold`, or when an
/// unconverged run shows polynomial growth: the increments of `ln W_k` keep
/// shrinking and `k * (ln W_k - ln W_{k-1})` stays bounded, as it does for
/// `W_k ~ k^d`.
pub fn classify(report: &TepoReport, threshold: f64) -> Classification {
    if report.tepo < threshold {
        return Classification::EntropyZero;
    }
    if report.converged {
        return Classification::PseudoAnosovLike;
    }
    let lw = &report.log_weights;
    let k = lw.len().saturating_sub(1);
    if k < 12 {
        return Classification::PseudoAnosovLike;
    }
    let window = &lw[k - 10..];
    let inc: Vec<f64> = window.windows(2).map(|w| w[1] - w[0]).collect();
    let shrinking = inc.windows(2).all(|p| p[1] <= p[0] + 1e-12);
    let bound = 2.0 * report.coords.len() as f64;
    if shrinking && (k as f64) * inc.last().unwrap() < bound {
        Classification::EntropyZero
    } else {
        Classification::PseudoAnosovLike
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::builtin;

    #[test]
    fn beta_star_on_two_point_square() {
        let m = builtin("sq2").unwrap();
        let w = m.parse_word("1 3 2 4").unwrap();
        let r = tepo(&m, &w, None, &TepoOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.tepo - 1.061275062).abs() < 1e-8, "{}", r.tepo);
        assert!((r.dilation - 69.7627534).abs() < 1e-5);
        let f = tepo(&m, &w, None, &TepoOptions::float(1e-10, 200)).unwrap();
        assert!((f.tepo - r.tepo).abs() < 1e-9);
    }

    #[test]
    fn identity_and_reducible_words_have_zero_entropy() {
        let m = builtin("sq2").unwrap();
        let w = m.parse_word("1 -1").unwrap();
        let r = tepo(&m, &w, None, &TepoOptions::default()).unwrap();
        assert_eq!(r.tepo, 0.0);
        assert_eq!(classify(&r, DEFAULT_ZERO_THRESHOLD), Classification::EntropyZero);
        let w = m.parse_word("1 1").unwrap();
        let r = tepo(&m, &w, None, &TepoOptions::default()).unwrap();
        assert_eq!(classify(&r, DEFAULT_ZERO_THRESHOLD), Classification::EntropyZero, "{r:?}");
        let w = m.parse_word("1 3 2 4").unwrap();
        let r = tepo(&m, &w, None, &TepoOptions::default()).unwrap();
        assert_eq!(classify(&r, DEFAULT_ZERO_THRESHOLD), Classification::PseudoAnosovLike);
    }

    #[test]
    fn errors() {
        let m = builtin("sq2").unwrap();
        let zero = vec![BigInt::zero(); 6];
        assert_eq!(tepo(&m, &[0], Some(&zero), &TepoOptions::default()), Err(EntropyError::ZeroInitial));
        assert_eq!(tepo(&m, &[], None, &TepoOptions::default()), Err(EntropyError::EmptyWord));
        let short = vec![BigInt::from(1); 5];
        assert!(matches!(tepo(&m, &[0], Some(&short), &TepoOptions::default()), Err(EntropyError::Dimension { .. })));
        assert_eq!("Float".parse::<Backend>(), Ok(Backend::Float));
        assert!("double".parse::<Backend>().is_err());
    }
}
