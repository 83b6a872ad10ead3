use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;
use tepo::builtin::{builtin, builtin_models, MODEL_NAMES, REFERENCE_MAX_TEPO};
use tepo::entropy::{classify, tepo, Backend, TepoOptions, DEFAULT_MAX_ITER, DEFAULT_TOL, DEFAULT_ZERO_THRESHOLD};
use tepo::general_lattice::{
    build_square_lattice_model, enumerate_matchings, flux_summary, operations_from_flux, LatticeSpec, Signs,
};
use tepo::model::{load_model_str, LatticeModel};
use tepo::search::{search_max_tepo, Mode, SearchConfig};
use tepo::spectral::spectral_report;

/// Default backend for `tepo` when `--backend` is absent.
const BACKEND_ENV: &str = "TEPO_BACKEND";

#[derive(Parser, Debug)]
#[command(name = "tepo", version, about = "Entropy of lattice braids on the torus")]
struct Cli {
    /// Output format. CSV is only available for search leaderboards.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Add the distance to the nearest reference maximum to every entropy value.
    #[arg(long, global = true)]
    compare_reference: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Built-in and file-defined models.
    Models {
        #[command(subcommand)]
        action: ModelsCmd,
    },
    /// Entropy per operation of one word.
    Tepo(TepoArgs),
    /// Exhaustive search for the words of maximal entropy per operation.
    Search(SearchArgs),
    /// Invariant track, linearization and (for the square maximizer) the splitting sequence.
    Spectral(SpectralArgs),
    /// General square lattices.
    Lattice {
        #[command(subcommand)]
        action: LatticeCmd,
    },
    /// Regression runs against reference values.
    Verify(VerifyArgs),
}

#[derive(Subcommand, Debug)]
enum ModelsCmd {
    /// Names with point, generator and operation counts.
    List,
    /// Full model file of a built-in or file model.
    Show { model: String },
    /// Load a model file and check every invariant.
    Validate { path: PathBuf },
}

#[derive(Args, Debug, Serialize)]
struct TepoArgs {
    /// Built-in name or path to a model file.
    #[arg(long)]
    model: String,
    #[arg(long)]
    word: String,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// exact or float; defaults to $TEPO_BACKEND, then exact.
    #[arg(long)]
    backend: Option<String>,
    /// Accepted for symmetry with other tools; JSON is the default.
    #[arg(long)]
    #[serde(skip)]
    json: bool,
}

#[derive(Args, Debug, Serialize)]
struct SearchArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    length: usize,
    #[arg(long, default_value = "A")]
    mode: String,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    shards: usize,
    /// Directory for per-shard checkpoints; reruns resume from it.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Screen at a loose tolerance and refine only candidates near the maximum.
    #[arg(long)]
    coarse: bool,
    /// Search every first operation instead of one per symmetry orbit.
    #[arg(long)]
    all_first: bool,
    #[arg(long)]
    #[serde(skip)]
    json: bool,
}

#[derive(Args, Debug, Serialize)]
struct SpectralArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    word: String,
    #[arg(long, default_value_t = 1e-40)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// Only json is supported.
    #[arg(long, default_value = "json")]
    report: String,
}

#[derive(Subcommand, Debug)]
enum LatticeCmd {
    /// Perfect matchings of the M x N lattice graph.
    Matchings(MatchingArgs),
    /// Build the M x N model and write it as a model file.
    Build(BuildArgs),
}

#[derive(Args, Debug, Serialize)]
struct MatchingArgs {
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
    /// Report class sizes instead of listing matchings.
    #[arg(long)]
    flux_summary: bool,
    #[arg(long)]
    #[serde(skip)]
    json: bool,
}

#[derive(Args, Debug, Serialize)]
struct BuildArgs {
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
    /// Keep only matchings in these flux classes, e.g. "0,2 0,-2 2,0 -2,0".
    #[arg(long, allow_hyphen_values = true)]
    flux: Option<String>,
    #[arg(long, value_enum, default_value_t = SignsArg::All)]
    signs: SignsArg,
    #[arg(long)]
    emit: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SignsArg {
    All,
    Ccw,
    Cw,
}

#[derive(Args, Debug, Serialize)]
struct VerifyArgs {
    /// Search every model at lengths 2..=max-length and compare with the reference table.
    #[arg(long)]
    table1: bool,
    #[arg(long, default_value_t = 4)]
    max_length: usize,
    #[arg(long, default_value_t = 1)]
    shards: usize,
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    config: Value,
    version: &'static str,
    backend: Option<String>,
    /// Random sampling is not used by any command.
    seed: Option<u64>,
    elapsed_secs: f64,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Compute(String),
}

impl Failure {
    fn compute(e: impl std::fmt::Display) -> Self {
        Failure::Compute(e.to_string())
    }
    fn usage(e: impl std::fmt::Display) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn load(model: &str) -> Result<LatticeModel, Failure> {
    if MODEL_NAMES.contains(&model) {
        return builtin(model).map_err(Failure::compute);
    }
    let text = std::fs::read_to_string(model)
        .map_err(|e| Failure::usage(format!("{model:?} is neither a built-in model ({}) nor a readable file: {e}", MODEL_NAMES.join(", "))))?;
    load_model_str(&text).map_err(Failure::usage)
}

fn nearest_reference(h: f64) -> Value {
    let (mut best, mut dist) = (f64::NAN, f64::INFINITY);
    for (_, cells) in REFERENCE_MAX_TEPO {
        for c in cells {
            if (h - c).abs() < dist {
                (best, dist) = (c, (h - c).abs());
            }
        }
    }
    json!({ "nearest": best, "residual": h - best })
}

/// Twelve significant digits.
fn sig(x: f64) -> Value {
    if x == 0.0 || !x.is_finite() {
        return json!(x);
    }
    let digits = 11 - x.abs().log10().floor() as i32;
    let s = format!("{:.*}", digits.max(0) as usize, x);
    json!(s.parse::<f64>().unwrap_or(x))
}

fn run_tepo(a: &TepoArgs, compare: bool) -> Result<(Value, Option<String>), Failure> {
    let m = load(&a.model)?;
    let word = m.parse_word(&a.word).map_err(Failure::usage)?;
    let backend_text = a.backend.clone().or_else(|| std::env::var(BACKEND_ENV).ok()).unwrap_or_else(|| "exact".into());
    let backend: Backend = backend_text.parse().map_err(Failure::usage)?;
    let r = tepo(&m, &word, None, &TepoOptions { tol: a.tol, max_iter: a.max_iter, backend }).map_err(Failure::compute)?;
    let mut out = json!({
        "model": m.name,
        "word": m.format_word(&word),
        "tepo": sig(r.tepo),
        "dilation": sig(r.dilation),
        "iterations": r.iterations,
        "converged": r.converged,
        "classification": classify(&r, DEFAULT_ZERO_THRESHOLD),
        "coords": r.coords.iter().map(|&x| sig(x)).collect::<Vec<_>>(),
    });
    if compare {
        out["reference"] = nearest_reference(r.tepo);
    }
    Ok((out, Some(backend.to_string())))
}

fn run_search(a: &SearchArgs, format: Format, compare: bool) -> Result<Value, Failure> {
    let m = load(&a.model)?;
    let mode: Mode = a.mode.parse().map_err(Failure::usage)?;
    let mut cfg = SearchConfig::new(a.length, mode);
    cfg.tol = a.tol;
    cfg.max_iter = a.max_iter;
    cfg.shards = a.shards;
    cfg.checkpoint = a.checkpoint.clone();
    cfg.coarse = a.coarse;
    cfg.canonical_first = !a.all_first;
    let r = search_max_tepo(&m, &cfg).map_err(Failure::compute)?;
    if format == Format::Csv {
        let mut w = csv::Writer::from_writer(std::io::stdout());
        w.write_record(["model", "length", "word", "tepo", "converged"]).map_err(Failure::compute)?;
        for s in &r.maximizers {
            w.write_record([r.model.as_str(), &r.length.to_string(), &s.text, &format!("{:.12}", s.tepo), &s.converged.to_string()])
                .map_err(Failure::compute)?;
        }
        w.flush().map_err(Failure::compute)?;
        return Ok(Value::Null);
    }
    let mut out = serde_json::to_value(&r).map_err(Failure::compute)?;
    out["max_tepo"] = sig(r.max_tepo);
    if compare {
        out["reference"] = nearest_reference(r.max_tepo);
    }
    Ok(out)
}

fn run_spectral(a: &SpectralArgs, compare: bool) -> Result<Value, Failure> {
    if a.report != "json" {
        return Err(Failure::usage(format!("unsupported report format {:?}", a.report)));
    }
    let m = load(&a.model)?;
    let word = m.parse_word(&a.word).map_err(Failure::usage)?;
    let r = spectral_report(&m, &word, a.tol, a.max_iter).map_err(Failure::compute)?;
    let mut out = serde_json::to_value(&r).map_err(Failure::compute)?;
    out["tepo"] = sig(r.tepo);
    out["lambda"] = sig(r.lambda);
    if compare {
        out["reference"] = nearest_reference(r.tepo);
    }
    Ok(out)
}

fn parse_fluxes(text: &str) -> Result<Vec<(i64, i64)>, Failure> {
    text.split_whitespace()
        .map(|t| {
            let (a, b) = t.split_once(',').ok_or_else(|| Failure::usage(format!("flux {t:?} is not \"h,v\"")))?;
            Ok((a.parse().map_err(Failure::usage)?, b.parse().map_err(Failure::usage)?))
        })
        .collect()
}

fn run_lattice(cmd: &LatticeCmd) -> Result<Value, Failure> {
    match cmd {
        LatticeCmd::Matchings(a) => {
            let spec = LatticeSpec::new(a.rows, a.cols);
            let t = enumerate_matchings(&spec);
            let classes: Vec<Value> =
                flux_summary(&t).into_iter().map(|((h, v), n)| json!({ "flux": [h, v], "count": n })).collect();
            let mut out = json!({ "rows": a.rows, "cols": a.cols, "matchings": t.len(), "flux_classes": classes });
            if !a.flux_summary {
                out["templates"] = serde_json::to_value(&t).map_err(Failure::compute)?;
            }
            Ok(out)
        }
        LatticeCmd::Build(a) => {
            let spec = LatticeSpec::new(a.rows, a.cols);
            let signs = match a.signs {
                SignsArg::All => Signs::All,
                SignsArg::Ccw => Signs::Ccw,
                SignsArg::Cw => Signs::Cw,
            };
            let ops = match &a.flux {
                Some(f) => Some(operations_from_flux(&spec, &parse_fluxes(f)?, signs)),
                None if !matches!(signs, Signs::All) => {
                    let fl: Vec<(i64, i64)> = flux_summary(&enumerate_matchings(&spec)).into_keys().collect();
                    Some(operations_from_flux(&spec, &fl, signs))
                }
                None => None,
            };
            let m = build_square_lattice_model(&spec, ops).map_err(Failure::compute)?;
            let file = m.to_file();
            let summary = json!({
                "name": m.name,
                "points": m.num_points(),
                "graph_edges": m.graph_edges.len(),
                "edges": m.num_edges(),
                "operations": m.operations.len(),
            });
            match &a.emit {
                Some(path) => {
                    let text = serde_json::to_string_pretty(&file).map_err(Failure::compute)?;
                    std::fs::write(path, text).map_err(Failure::compute)?;
                    Ok(json!({ "model": summary, "written": path }))
                }
                None => Ok(json!({ "model": summary, "file": file })),
            }
        }
    }
}

fn run_models(cmd: &ModelsCmd) -> Result<Value, Failure> {
    match cmd {
        ModelsCmd::List => Ok(Value::Array(
            builtin_models()
                .iter()
                .map(|m| {
                    json!({
                        "name": m.name,
                        "lattice": m.lattice_kind,
                        "points": m.num_points(),
                        "generators": m.num_generators(),
                        "operations": m.operations.len(),
                        "edges": m.num_edges(),
                    })
                })
                .collect(),
        )),
        ModelsCmd::Show { model } => serde_json::to_value(load(model)?.to_file()).map_err(Failure::compute),
        ModelsCmd::Validate { path } => {
            let text = std::fs::read_to_string(path).map_err(Failure::usage)?;
            match load_model_str(&text) {
                Ok(m) => {
                    let init: Vec<f64> = m.initial_coords();
                    let bad = m.tri.violated_triangles(&init).map_err(Failure::compute)?;
                    Ok(json!({
                        "valid": true,
                        "name": m.name,
                        "operations": m.operations.len(),
                        "default_coords_violate_triangles": bad,
                    }))
                }
                Err(e) => Err(Failure::compute(format!("invalid model: {e}"))),
            }
        }
    }
}

fn run_verify(a: &VerifyArgs) -> Result<(Value, bool), Failure> {
    if !a.table1 {
        return Err(Failure::usage("nothing to verify; pass --table1"));
    }
    let mut rows = Vec::new();
    let mut all = true;
    for (name, cells) in REFERENCE_MAX_TEPO {
        let m = builtin(name).map_err(Failure::compute)?;
        let mut row = Vec::new();
        for k in 2..=a.max_length.min(4) {
            let mut cfg = SearchConfig::new(k, Mode::A);
            cfg.shards = a.shards;
            let r = search_max_tepo(&m, &cfg).map_err(Failure::compute)?;
            let want = cells[k - 2];
            let pass = (r.max_tepo - want).abs() < a.tolerance;
            all &= pass;
            eprintln!("{name} k={k}: {:.9} (reference {want:.9}) {}", r.max_tepo, if pass { "pass" } else { "FAIL" });
            row.push(json!({ "length": k, "max_tepo": sig(r.max_tepo), "reference": want, "residual": r.max_tepo - want, "pass": pass }));
        }
        rows.push(json!({ "model": name, "cells": row }));
    }
    Ok((json!({ "pass": all, "table": rows }), all))
}

fn emit(command: &str, config: Value, backend: Option<String>, start: Instant, result: Value) {
    let manifest = RunManifest {
        command: command.into(),
        config,
        version: env!("CARGO_PKG_VERSION"),
        backend,
        seed: None,
        elapsed_secs: start.elapsed().as_secs_f64(),
    };
    let out = json!({ "manifest": manifest, "result": result });
    let text = serde_json::to_string_pretty(&out).expect("serializable output");
    // A closed pipe (e.g. `| head`) is not an error worth reporting.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn dispatch(cli: Cli) -> Result<bool, Failure> {
    let start = Instant::now();
    let compare = cli.compare_reference;
    if cli.format == Format::Csv && !matches!(cli.command, Command::Search(_)) {
        return Err(Failure::usage("CSV output is only available for search"));
    }
    match &cli.command {
        Command::Models { action } => {
            let name = match action {
                ModelsCmd::List => "models list",
                ModelsCmd::Show { .. } => "models show",
                ModelsCmd::Validate { .. } => "models validate",
            };
            let config = match action {
                ModelsCmd::Show { model } => json!({ "model": model }),
                ModelsCmd::Validate { path } => json!({ "path": path }),
                ModelsCmd::List => json!({}),
            };
            emit(name, config, None, start, run_models(action)?);
        }
        Command::Tepo(a) => {
            let (out, backend) = run_tepo(a, compare)?;
            emit("tepo", cfg(a), backend, start, out);
        }
        Command::Search(a) => {
            let out = run_search(a, cli.format, compare)?;
            if cli.format == Format::Json {
                emit("search", cfg(a), Some("float".into()), start, out);
            }
        }
        Command::Spectral(a) => emit("spectral", cfg(a), Some("fixed-point".into()), start, run_spectral(a, compare)?),
        Command::Lattice { action } => {
            let (name, config) = match action {
                LatticeCmd::Matchings(a) => ("lattice matchings", cfg(a)),
                LatticeCmd::Build(a) => ("lattice build", cfg(a)),
            };
            emit(name, config, None, start, run_lattice(action)?);
        }
        Command::Verify(a) => {
            let (out, pass) = run_verify(a)?;
            emit("verify", cfg(a), Some("float".into()), start, out);
            return Ok(pass);
        }
    }
    Ok(true)
}

fn cfg<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
