//! Exhaustive search for the braid words of a given length with the largest
//! entropy per operation.
//!
//! Words are enumerated depth first in lexicographic order of operation
//! indices. The work is cut into shards by two-operation prefixes, which are
//! evaluated independently (in parallel with the `parallel` feature) and
//! merged in shard order, so results do not depend on the thread count.

use crate::entropy::{tepo_programs, Backend, FloatEvaluator, TepoOptions, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::model::LatticeModel;
use crate::program::FlipProgram;
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

/// Words within this distance of the maximum are reported as maximizers.
pub const TIE_TOL: f64 = 1e-9;
const COARSE_TOL: f64 = 1e-4;
const COARSE_MAX_ITER: usize = 30;
/// Non-convergent words kept verbatim in a result; the rest are only counted.
const MAX_FLAGGED: usize = 256;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("word length must be at least 1")]
    ZeroLength,
    #[error("shard count must be at least 1")]
    ZeroShards,
    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Entropy(#[from] crate::entropy::EntropyError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Every word whose first operation is a symmetry-orbit representative.
    A,
    /// As `A`, and adjacent operations share no graph edge.
    B,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" | "a" => Ok(Mode::A),
            "B" | "b" => Ok(Mode::B),
            _ => Err(format!("unknown search mode {s:?} (expected A or B)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub length: usize,
    pub mode: Mode,
    pub tol: f64,
    pub max_iter: usize,
    /// Worker threads; 1 runs sequentially.
    pub shards: usize,
    pub checkpoint: Option<PathBuf>,
    /// Screen words at a loose tolerance first and refine only those near
    /// the running maximum.
    pub coarse: bool,
    /// Restrict the first operation to orbit representatives. Turning this
    /// off searches every word.
    pub canonical_first: bool,
}

impl SearchConfig {
    pub fn new(length: usize, mode: Mode) -> Self {
        SearchConfig {
            length,
            mode,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            shards: 1,
            checkpoint: None,
            coarse: false,
            canonical_first: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordScore {
    pub word: Vec<usize>,
    pub text: String,
    pub tepo: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub model: String,
    pub length: usize,
    pub mode: Mode,
    pub tol: f64,
    pub max_tepo: f64,
    /// All words within [`TIE_TOL`] of the maximum, in lexicographic order.
    pub maximizers: Vec<WordScore>,
    /// Maximizers grouped into classes related by cyclic shift and time
    /// reversal; each class is listed by its members' indices in `maximizers`.
    pub maximizer_classes: Vec<Vec<usize>>,
    pub first_ops: Vec<usize>,
    pub words_evaluated: u64,
    pub nonconvergent_count: u64,
    pub nonconvergent: Vec<WordScore>,
    pub shards: usize,
    pub elapsed_secs: f64,
}

/// Shard outcome, also the checkpoint file format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ShardResult {
    model: String,
    length: usize,
    mode: Mode,
    tol: f64,
    coarse: bool,
    prefix: Vec<usize>,
    best: f64,
    /// Words whose score is within the candidate margin of `best`.
    candidates: Vec<(Vec<usize>, f64, bool)>,
    evaluated: u64,
    nonconvergent_count: u64,
    nonconvergent: Vec<(Vec<usize>, f64)>,
}

/// Mode-B adjacency rule: reject when the operations use a common graph edge.
pub fn mode_b_accepts(model: &LatticeModel, prev: usize, next: usize) -> bool {
    !model.share_edge(prev, next)
}

pub fn search_max_tepo(model: &LatticeModel, cfg: &SearchConfig) -> Result<SearchResult, SearchError> {
    if cfg.length == 0 {
        return Err(SearchError::ZeroLength);
    }
    if cfg.shards == 0 {
        return Err(SearchError::ZeroShards);
    }
    let start = Instant::now();
    let n_ops = model.operations.len();
    let first_ops = if cfg.canonical_first { model.canonical_first_ops() } else { (0..n_ops).collect() };
    let prefixes = shard_prefixes(model, cfg, &first_ops);
    if let Some(dir) = &cfg.checkpoint {
        std::fs::create_dir_all(dir)?;
    }

    let run = |idx: usize| -> Result<ShardResult, SearchError> {
        let path = cfg.checkpoint.as_ref().map(|d| shard_path(d, idx));
        if let Some(p) = &path {
            if let Some(done) = load_shard(p, model, cfg, &prefixes[idx])? {
                return Ok(done);
            }
        }
        let res = run_shard(model, cfg, &prefixes[idx]);
        if let Some(p) = &path {
            save_shard(p, &res)?;
        }
        Ok(res)
    };
    let shard_results = run_all(prefixes.len(), cfg.shards, run)?;

    let best = shard_results.iter().map(|s| s.best).fold(f64::NEG_INFINITY, f64::max);
    let margin = candidate_margin(cfg);
    let mut candidates: Vec<Vec<usize>> = shard_results
        .iter()
        .flat_map(|s| s.candidates.iter())
        .filter(|c| c.1 >= best - margin)
        .map(|c| c.0.clone())
        .collect();
    candidates.sort();

    // Re-evaluate near-maximal words at a tighter tolerance.
    let fine = TepoOptions { tol: cfg.tol / 10.0, max_iter: cfg.max_iter.max(DEFAULT_MAX_ITER) * 2, backend: Backend::Float };
    let init = model.initial_coords::<BigInt>();
    let mut scored = Vec::with_capacity(candidates.len());
    for w in candidates {
        let progs: Vec<&FlipProgram> = w.iter().map(|&o| model.op_program(o)).collect();
        let r = tepo_programs(&progs, &init, &fine)?;
        scored.push(WordScore { text: model.format_word(&w), word: w, tepo: r.tepo, converged: r.converged });
    }
    let max_tepo = scored.iter().map(|s| s.tepo).fold(f64::NEG_INFINITY, f64::max);
    let maximizers: Vec<WordScore> = scored.into_iter().filter(|s| s.tepo >= max_tepo - TIE_TOL).collect();
    let maximizer_classes = word_classes(model, &maximizers);

    let mut nonconvergent = Vec::new();
    let mut nonconvergent_count = 0;
    for s in &shard_results {
        nonconvergent_count += s.nonconvergent_count;
        for (w, h) in &s.nonconvergent {
            if nonconvergent.len() < MAX_FLAGGED {
                nonconvergent.push(WordScore { text: model.format_word(w), word: w.clone(), tepo: *h, converged: false });
            }
        }
    }
    if nonconvergent_count > 0 {
        log::warn!("{nonconvergent_count} words did not converge within {} iterations", cfg.max_iter);
    }

    Ok(SearchResult {
        model: model.name.clone(),
        length: cfg.length,
        mode: cfg.mode,
        tol: cfg.tol,
        max_tepo,
        maximizers,
        maximizer_classes,
        first_ops,
        words_evaluated: shard_results.iter().map(|s| s.evaluated).sum(),
        nonconvergent_count,
        nonconvergent,
        shards: cfg.shards,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

fn candidate_margin(cfg: &SearchConfig) -> f64 {
    if cfg.coarse {
        1e-3
    } else {
        (cfg.tol * 100.0).max(1e-8)
    }
}

/// Two-operation prefixes (one for length-1 searches), mode-B filtered.
fn shard_prefixes(model: &LatticeModel, cfg: &SearchConfig, first_ops: &[usize]) -> Vec<Vec<usize>> {
    let n_ops = model.operations.len();
    let mut out = Vec::new();
    for &a in first_ops {
        if cfg.length == 1 {
            out.push(vec![a]);
            continue;
        }
        for b in 0..n_ops {
            if cfg.mode == Mode::B && !mode_b_accepts(model, a, b) {
                continue;
            }
            out.push(vec![a, b]);
        }
    }
    out
}

#[cfg(feature = "parallel")]
fn run_all<F>(n: usize, threads: usize, f: F) -> Result<Vec<ShardResult>, SearchError>
where
    F: Fn(usize) -> Result<ShardResult, SearchError> + Sync,
{
    if threads == 1 {
        return (0..n).map(f).collect();
    }
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| SearchError::Io(std::io::Error::other(e.to_string())))?;
    pool.install(|| (0..n).into_par_iter().map(&f).collect())
}

#[cfg(not(feature = "parallel"))]
fn run_all<F>(n: usize, _threads: usize, f: F) -> Result<Vec<ShardResult>, SearchError>
where
    F: Fn(usize) -> Result<ShardResult, SearchError>,
{
    (0..n).map(f).collect()
}

struct ShardState<'a> {
    model: &'a LatticeModel,
    cfg: &'a SearchConfig,
    progs: Vec<&'a FlipProgram>,
    init: Vec<f64>,
    eval: FloatEvaluator,
    word: Vec<usize>,
    res: ShardResult,
}

fn run_shard(model: &LatticeModel, cfg: &SearchConfig, prefix: &[usize]) -> ShardResult {
    let init: Vec<f64> = model.initial_coords::<f64>();
    let mut st = ShardState {
        model,
        cfg,
        progs: Vec::with_capacity(cfg.length),
        eval: FloatEvaluator::new(init.len()),
        init,
        word: prefix.to_vec(),
        res: ShardResult {
            model: model.name.clone(),
            length: cfg.length,
            mode: cfg.mode,
            tol: cfg.tol,
            coarse: cfg.coarse,
            prefix: prefix.to_vec(),
            best: f64::NEG_INFINITY,
            candidates: Vec::new(),
            evaluated: 0,
            nonconvergent_count: 0,
            nonconvergent: Vec::new(),
        },
    };
    st.extend();
    st.res
}

impl ShardState<'_> {
    fn extend(&mut self) {
        if self.word.len() == self.cfg.length {
            self.score();
            return;
        }
        let last = *self.word.last().unwrap();
        for op in 0..self.model.operations.len() {
            if self.cfg.mode == Mode::B && !mode_b_accepts(self.model, last, op) {
                continue;
            }
            self.word.push(op);
            self.extend();
            self.word.pop();
        }
    }

    fn score(&mut self) {
        self.progs.clear();
        self.progs.extend(self.word.iter().map(|&o| self.model.op_program(o)));
        self.res.evaluated += 1;
        let (tol, max_iter) = if self.cfg.coarse { (COARSE_TOL, COARSE_MAX_ITER) } else { (self.cfg.tol, self.cfg.max_iter) };
        let q = self.eval.quick(&self.progs, &self.init, tol, max_iter);
        if !q.converged && !self.cfg.coarse {
            self.res.nonconvergent_count += 1;
            if self.res.nonconvergent.len() < MAX_FLAGGED {
                self.res.nonconvergent.push((self.word.clone(), q.tepo));
            }
        }
        let margin = candidate_margin(self.cfg);
        if q.tepo > self.res.best {
            self.res.best = q.tepo;
            let floor = q.tepo - margin;
            self.res.candidates.retain(|c| c.1 >= floor);
        }
        if q.tepo >= self.res.best - margin {
            self.res.candidates.push((self.word.clone(), q.tepo, q.converged));
        }
    }
}

fn shard_path(dir: &Path, idx: usize) -> PathBuf {
    dir.join(format!("shard-{idx:06}.json"))
}

fn load_shard(path: &Path, model: &LatticeModel, cfg: &SearchConfig, prefix: &[usize]) -> Result<Option<ShardResult>, SearchError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let bad = |reason: String| SearchError::Checkpoint { path: path.to_path_buf(), reason };
    let s: ShardResult = serde_json::from_str(&text).map_err(|e| bad(format!("corrupt: {e}")))?;
    if s.model != model.name || s.length != cfg.length || s.mode != cfg.mode || s.tol != cfg.tol || s.coarse != cfg.coarse || s.prefix != prefix {
        return Err(bad("written by a different search configuration".into()));
    }
    Ok(Some(s))
}

fn save_shard(path: &Path, s: &ShardResult) -> Result<(), SearchError> {
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, serde_json::to_vec(s).expect("shard result serializes"))?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Cyclic shifts and time reversal of a word.
pub fn cyclic_reversal_orbit(model: &LatticeModel, word: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for w in [word.to_vec(), model.inverse_word(word)] {
        for s in 0..w.len() {
            let mut r = w.clone();
            r.rotate_left(s);
            if !out.contains(&r) {
                out.push(r);
            }
        }
    }
    out.sort();
    out
}

fn word_classes(model: &LatticeModel, words: &[WordScore]) -> Vec<Vec<usize>> {
    let mut class_of: Vec<Option<usize>> = vec![None; words.len()];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..words.len() {
        if class_of[i].is_some() {
            continue;
        }
        let orbit = cyclic_reversal_orbit(model, &words[i].word);
        let members: Vec<usize> = (i..words.len()).filter(|&j| class_of[j].is_none() && orbit.contains(&words[j].word)).collect();
        for &j in &members {
            class_of[j] = Some(classes.len());
        }
        classes.push(members);
    }
    classes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::builtin;

    #[test]
    fn two_point_square_short_words() {
        let m = builtin("sq2").unwrap();
        let r = search_max_tepo(&m, &SearchConfig::new(2, Mode::A)).unwrap();
        assert!((r.max_tepo - 0.881373587).abs() < 1e-8, "{}", r.max_tepo);
        assert_eq!(r.first_ops.len(), 1);
        assert_eq!(r.words_evaluated, 8);
    }

    #[test]
    fn mode_b_rule() {
        let m = builtin("sq2").unwrap();
        let w = m.parse_word("1 -1 3").unwrap();
        assert!(!mode_b_accepts(&m, w[0], w[1]));
        assert!(mode_b_accepts(&m, w[0], w[2]));
        assert!(!mode_b_accepts(&m, w[0], w[0]));
    }

    #[test]
    fn checkpoint_resume_and_mismatch() {
        let m = builtin("sq2").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = SearchConfig::new(3, Mode::A);
        cfg.checkpoint = Some(dir.path().to_path_buf());
        let a = search_max_tepo(&m, &cfg).unwrap();
        let b = search_max_tepo(&m, &cfg).unwrap();
        assert_eq!(a.maximizers, b.maximizers);
        assert_eq!(a.words_evaluated, b.words_evaluated);
        cfg.mode = Mode::B;
        assert!(matches!(search_max_tepo(&m, &cfg), Err(SearchError::Checkpoint { .. })));
        std::fs::write(shard_path(dir.path(), 0), "{not json").unwrap();
        cfg.mode = Mode::A;
        assert!(matches!(search_max_tepo(&m, &cfg), Err(SearchError::Checkpoint { .. })));
    }
}
