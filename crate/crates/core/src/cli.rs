//! The `gc` command line front end.
//!
//! [`run`] parses arguments, runs one subcommand and writes the primary
//! result to `out`; progress and errors go to `err`. Exit codes: 0 success,
//! 1 computation error, 2 usage error.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::cache::{code_version, DiskCache};
use crate::chord::algebra_dimension;
use crate::cohomology::{BasisMemo, BasisSource, Complex};
use crate::differential::{delta, delta_vec};
use crate::geometry::ImmersionSpec;
use crate::graph::{canonicalize, parse_graph, read_cochain, GraphVector};
use crate::integrator::{covering_check, linking_preset, pairing, random_targets, CycleKind, LinkPreset, PairingProblem, Strata};

pub const SCHEMA: &str = "v1";

#[derive(Parser, Debug)]
#[command(name = "gc", version, about = "Graph complex cohomology, chord algebra and configuration space integrals")]
struct Cli {
    /// Shorthand for `--format json`.
    #[arg(long, global = true)]
    json: bool,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Cache directory (default: $GC_CACHE_DIR or the user cache dir).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Do not read or write the disk cache.
    #[arg(long, global = true)]
    no_cache: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the canonical basis of D^{k,l}.
    Basis {
        #[arg(long = "ord")]
        k: i64,
        #[arg(long = "deg")]
        l: i64,
    },
    /// Betti numbers of D^{k,*}.
    Betti {
        #[arg(long = "ord")]
        k: i64,
        #[arg(long = "deg")]
        l: Option<i64>,
        /// Every degree plus the Euler characteristic.
        #[arg(long)]
        table: bool,
    },
    /// The differential of one graph.
    Delta {
        #[arg(long)]
        graph: String,
    },
    /// Check that a cochain file is a cocycle.
    CocycleCheck {
        #[arg(long)]
        file: PathBuf,
    },
    /// Euler characteristic of D^{k,*}.
    Euler {
        #[arg(long = "ord")]
        k: i64,
    },
    /// Dimension of the chord algebra in one order.
    ChordDim {
        #[arg(long)]
        order: usize,
        /// Quotient by 4T only.
        #[arg(long = "no-1t")]
        no_1t: bool,
    },
    /// Monte-Carlo linking number of a preset pair of cycles.
    Link {
        #[arg(long, value_parser = parse_preset)]
        preset: LinkPreset,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 200_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
    },
    /// Pair a cochain with a cycle.
    Pair(PairArgs),
    /// Check the two-sheeted covering at random targets.
    CoveringCheck {
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Inspect or clear the disk cache.
    Cache {
        #[arg(value_enum)]
        action: CacheAction,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum CacheAction {
    Clear,
    Stat,
}

#[derive(Args, Debug)]
struct PairArgs {
    /// Cochain file: `[{"coeff": "p/q", "graph": "G[...]"}, ...]`.
    #[arg(long)]
    cochain: Option<PathBuf>,
    /// Job file; command-line flags override its fields.
    #[arg(long)]
    job: Option<PathBuf>,
    #[arg(long, value_enum)]
    cycle: Option<CycleArg>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// Report non-convergence above this standard error.
    #[arg(long)]
    max_stderr: Option<f64>,
    /// Allow the lambda cycle (direct integration, no accuracy promise).
    #[arg(long)]
    direct_lambda: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum CycleArg {
    Alpha,
    Lambda,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairJob {
    cochain: Option<PathBuf>,
    cycle: Option<CycleArg>,
    n: Option<usize>,
    samples: Option<u64>,
    seed: Option<u64>,
    eps: Option<Vec<f64>>,
    strata: Option<Strata>,
    max_stderr: Option<f64>,
}

fn parse_preset(s: &str) -> Result<LinkPreset, String> {
    LinkPreset::parse(s).ok_or_else(|| format!("unknown preset `{s}` (hopf, unlinked, s1-vs-i1, s2-vs-i2)"))
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Compute(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) => 1,
        }
    }

    fn to_json(&self) -> Value {
        let (kind, message) = match self {
            CliError::Usage(m) => ("usage", m),
            CliError::Compute(m) => ("computation", m),
        };
        json!({"schema": SCHEMA, "error": {"kind": kind, "message": message}})
    }
}

fn usage(m: impl Into<String>) -> CliError {
    CliError::Usage(m.into())
}

fn compute(e: impl std::fmt::Display) -> CliError {
    CliError::Compute(e.to_string())
}

/// Primary result of a subcommand.
struct Output {
    json: Value,
    text: String,
    /// header and rows for `--format csv`
    table: (Vec<String>, Vec<Vec<String>>),
}

fn one_row(pairs: &[(&str, String)]) -> (Vec<String>, Vec<Vec<String>>) {
    (pairs.iter().map(|p| p.0.to_string()).collect(), vec![pairs.iter().map(|p| p.1.clone()).collect()])
}

/// Runs the CLI on `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = write!(out, "{e}");
                return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand { 2 } else { 0 };
            }
            let e = usage(e.to_string().trim_end().to_string());
            let _ = writeln!(err, "{}", e.to_json());
            return e.code();
        }
    };
    let format = if cli.json { Format::Json } else { cli.format.unwrap_or(Format::Text) };
    if let Some(t) = cli.threads {
        if t == 0 {
            let e = usage("--threads must be at least 1");
            let _ = writeln!(err, "{}", e.to_json());
            return e.code();
        }
        // the global pool can only be set once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match dispatch(&cli, err) {
        Ok(o) => {
            let written = match format {
                Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&with_schema(o.json)).expect("json")),
                Format::Text => write!(out, "{}", o.text),
                Format::Csv => write_csv(out, &o.table),
            };
            if written.is_err() {
                return 1;
            }
            0
        }
        Err(e) => {
            let _ = writeln!(err, "{}", e.to_json());
            e.code()
        }
    }
}

fn with_schema(v: Value) -> Value {
    let mut map = Map::new();
    map.insert("schema".into(), json!(SCHEMA));
    if let Value::Object(m) = v {
        map.extend(m);
    }
    Value::Object(map)
}

fn write_csv(out: &mut dyn Write, table: &(Vec<String>, Vec<Vec<String>>)) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.0)?;
    for row in &table.1 {
        w.write_record(row)?;
    }
    w.flush()
}

fn source(cli: &Cli) -> Box<dyn BasisSource> {
    if cli.no_cache {
        Box::new(BasisMemo::default())
    } else {
        match &cli.cache_dir {
            Some(d) => Box::new(DiskCache::new(d)),
            None => Box::new(DiskCache::from_env()),
        }
    }
}

fn check_ord(k: i64) -> Result<(), CliError> {
    if k < 1 {
        return Err(usage(format!("--ord must be at least 1, got {k}")));
    }
    Ok(())
}

fn dispatch(cli: &Cli, err: &mut dyn Write) -> Result<Output, CliError> {
    match &cli.command {
        Command::Basis { k, l } => {
            check_ord(*k)?;
            if *l < 0 {
                return Err(usage("--deg must be nonnegative"));
            }
            let table = source(cli).basis(*k, *l);
            let graphs: Vec<String> = table.graphs().iter().map(ToString::to_string).collect();
            let mut text = format!("D^{{{k},{l}}}: {} graphs\n", graphs.len());
            for g in &graphs {
                text.push_str(g);
                text.push('\n');
            }
            let rows = graphs.iter().enumerate().map(|(i, g)| vec![i.to_string(), g.clone()]).collect();
            Ok(Output { json: json!({"k": k, "l": l, "dim": graphs.len(), "graphs": graphs}), text, table: (vec!["index".into(), "graph".into()], rows) })
        }
        Command::Betti { k, l, table } => {
            check_ord(*k)?;
            let mut src = source(cli);
            let _ = writeln!(err, "building D^{{{k},*}}");
            let c = Complex::build(*k, src.as_mut()).map_err(compute)?;
            let degrees: Vec<i64> = match (l, table) {
                (Some(l), false) => vec![*l],
                (None, false) => return Err(usage("betti needs --deg or --table")),
                (_, true) => (0..=c.max_degree() + 1).collect(),
            };
            let reports: Vec<_> = degrees.iter().map(|&l| c.betti(l)).collect();
            let header = ["k", "l", "dim", "rank_out", "rank_in", "betti"].map(String::from).to_vec();
            let rows: Vec<Vec<String>> = reports
                .iter()
                .map(|r| vec![r.k.to_string(), r.l.to_string(), r.dim.to_string(), r.rank_out.to_string(), r.rank_in.to_string(), r.betti.to_string()])
                .collect();
            let mut text = String::new();
            for r in &reports {
                text.push_str(&format!("H^{{{},{}}}: dim {} rank_out {} rank_in {} betti {}\n", r.k, r.l, r.dim, r.rank_out, r.rank_in, r.betti));
            }
            if *table {
                let chi = c.euler_characteristic();
                text.push_str(&format!("euler characteristic {chi}\n"));
                Ok(Output { json: json!({"k": k, "rows": reports, "chi": chi}), text, table: (header, rows) })
            } else {
                Ok(Output { json: serde_json::to_value(&reports[0]).expect("json"), text, table: (header, rows) })
            }
        }
        Command::Delta { graph } => {
            let g = parse_graph(graph).map_err(|e| usage(e.to_string()))?;
            let sg = canonicalize(&g);
            let d = delta(&g);
            let gr = g.grading();
            let text = format!("delta {g} = {d}\n");
            let terms = d.to_cochain_json();
            let rows = terms.iter().map(|t| vec![t.coeff.clone(), t.graph.clone()]).collect();
            Ok(Output {
                json: json!({"graph": g.to_string(), "canonical": sg.graph.to_string(), "sign": sg.sign, "grading": gr, "delta": terms}),
                text,
                table: (vec!["coeff".into(), "graph".into()], rows),
            })
        }
        Command::CocycleCheck { file } => {
            let text = fs::read_to_string(file).map_err(|e| usage(format!("{}: {e}", file.display())))?;
            let v = read_cochain(&text).map_err(|e| usage(format!("{}: {e}", file.display())))?;
            let grading = v.grading().map_err(|g| usage(format!("cochain mixes gradings ({}, {})", g.ord, g.deg)))?;
            let d = delta_vec(&v).map_err(compute)?;
            let ok = d.is_zero();
            let text = if ok { "cocycle\n".to_string() } else { format!("not a cocycle: delta = {d}\n") };
            Ok(Output {
                json: json!({"is_cocycle": ok, "grading": grading, "terms": v.len(), "delta": d.to_cochain_json()}),
                text,
                table: one_row(&[("is_cocycle", ok.to_string()), ("terms", v.len().to_string())]),
            })
        }
        Command::Euler { k } => {
            check_ord(*k)?;
            let mut src = source(cli);
            let top = crate::cohomology::max_degree(*k);
            let dims: Vec<usize> = (0..=top + 1).map(|l| src.basis(*k, l).len()).collect();
            let chi: i64 = dims.iter().enumerate().map(|(l, d)| if l % 2 == 0 { *d as i64 } else { -(*d as i64) }).sum();
            Ok(Output { json: json!({"k": k, "chi": chi, "dims": dims}), text: format!("chi(D^{{{k},*}}) = {chi}\n"), table: one_row(&[("k", k.to_string()), ("chi", chi.to_string())]) })
        }
        Command::ChordDim { order, no_1t } => {
            if *order == 0 || *order > 6 {
                return Err(usage("--order must be between 1 and 6"));
            }
            let dim = algebra_dimension(*order, !no_1t);
            let rel = if *no_1t { "4T" } else { "4T+1T" };
            Ok(Output {
                json: json!({"order": order, "one_term": !no_1t, "dimension": dim}),
                text: format!("order {order} mod {rel}: {dim}\n"),
                table: one_row(&[("order", order.to_string()), ("one_term", (!no_1t).to_string()), ("dimension", dim.to_string())]),
            })
        }
        Command::Link { preset, n, samples, seed, eps } => link(*preset, *n, *samples, *seed, eps.as_deref()),
        Command::Pair(args) => pair(args, err),
        Command::CoveringCheck { n, trials, seed } => {
            if *n < 4 {
                return Err(usage("--n must be at least 4"));
            }
            let mut two = 0;
            let mut agree = 0;
            let mut max_residual: f64 = 0.0;
            for (v3, v4) in random_targets(*n, *trials, *seed) {
                let r = covering_check(&v3, &v4, *n).map_err(compute)?;
                if r.preimages.len() == 2 {
                    two += 1;
                }
                if r.signs_agree {
                    agree += 1;
                }
                for p in &r.preimages {
                    max_residual = max_residual.max(p.residual);
                }
            }
            let pass = two == *trials && agree == *trials && max_residual < 1e-8;
            Ok(Output {
                json: json!({"n": n, "trials": trials, "seed": seed, "two_preimages": two, "signs_agree": agree, "max_residual": max_residual, "pass": pass}),
                text: format!("{two}/{trials} targets with 2 preimages, {agree}/{trials} with agreeing signs, max residual {max_residual:.2e}\n"),
                table: one_row(&[("trials", trials.to_string()), ("two_preimages", two.to_string()), ("signs_agree", agree.to_string()), ("max_residual", max_residual.to_string())]),
            })
        }
        Command::Cache { action } => {
            let cache = match &cli.cache_dir {
                Some(d) => DiskCache::new(d),
                None => DiskCache::from_env(),
            };
            match action {
                CacheAction::Stat => {
                    let s = cache.stat().map_err(compute)?;
                    let text = format!("{}: {} bases, {} matrices, {} stale, {} bytes (version {})\n", s.dir, s.bases, s.matrices, s.stale, s.bytes, s.version);
                    let table = one_row(&[("dir", s.dir.clone()), ("bases", s.bases.to_string()), ("matrices", s.matrices.to_string()), ("stale", s.stale.to_string()), ("bytes", s.bytes.to_string())]);
                    Ok(Output { json: serde_json::to_value(s).expect("json"), text, table })
                }
                CacheAction::Clear => {
                    let removed = cache.clear().map_err(compute)?;
                    Ok(Output {
                        json: json!({"dir": cache.dir().display().to_string(), "removed": removed}),
                        text: format!("removed {removed} files\n"),
                        table: one_row(&[("removed", removed.to_string())]),
                    })
                }
            }
        }
    }
}

fn immersion_spec(n: usize, eps: Option<&[f64]>) -> Result<ImmersionSpec, CliError> {
    let mut spec = ImmersionSpec::default().with_n(n);
    if let Some(e) = eps {
        let pair = match e {
            [a] => [*a, *a],
            [a, b] => [*a, *b],
            _ => return Err(usage("--eps takes one or two values")),
        };
        spec = spec.with_eps(pair);
    }
    Ok(spec)
}

fn estimate_text(label: &str, e: &crate::integrator::MCEstimate) -> String {
    format!("{label}: {:.6} +- {:.6} ({} samples, seed {})\n", e.value, e.stderr, e.samples, e.seed)
}

fn link(preset: LinkPreset, n: Option<usize>, samples: u64, seed: u64, eps: Option<&[f64]>) -> Result<Output, CliError> {
    if samples == 0 {
        return Err(usage("--samples must be at least 1"));
    }
    let circles = matches!(preset, LinkPreset::Hopf | LinkPreset::Unlinked);
    let n = n.unwrap_or(if circles { 3 } else { 5 });
    let est = if circles {
        if n != 3 {
            return Err(usage("the circle presets live in n = 3"));
        }
        linking_preset(preset, None, samples, seed).map_err(compute)?
    } else {
        if n < 4 {
            return Err(usage("resolution presets need n >= 4"));
        }
        let imm = immersion_spec(n, eps)?.build().map_err(|e| usage(e.to_string()))?;
        linking_preset(preset, Some(&imm), samples, seed).map_err(compute)?
    };
    let name = serde_json::to_value(preset).expect("json");
    Ok(Output {
        json: json!({"preset": name, "n": n, "estimate": est, "code_version": code_version()}),
        text: estimate_text("linking number", &est),
        table: one_row(&[("value", est.value.to_string()), ("stderr", est.stderr.to_string()), ("samples", est.samples.to_string()), ("seed", est.seed.to_string())]),
    })
}

fn pair(args: &PairArgs, err: &mut dyn Write) -> Result<Output, CliError> {
    let job: PairJob = match &args.job {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?
        }
        None => PairJob::default(),
    };
    // relative cochain paths in a job file are relative to the job file
    let job_cochain = job.cochain.map(|c| match (&args.job, c.is_relative()) {
        (Some(j), true) => j.parent().map(|d| d.join(&c)).unwrap_or(c),
        _ => c,
    });
    let cochain_path = args.cochain.clone().or(job_cochain).ok_or_else(|| usage("pair needs --cochain or a job file naming one"))?;
    let cycle = args.cycle.or(job.cycle).unwrap_or(CycleArg::Alpha);
    let n = args.n.or(job.n).unwrap_or(5);
    let samples = args.samples.or(job.samples).unwrap_or(200_000);
    let seed = args.seed.or(job.seed).unwrap_or(1);
    let eps = args.eps.clone().or(job.eps);
    if samples == 0 {
        return Err(usage("--samples must be at least 1"));
    }
    if n % 2 == 0 || n < 5 {
        return Err(usage(format!("pairings need odd n >= 5, got {n}")));
    }
    if cycle == CycleArg::Lambda && !args.direct_lambda {
        return Err(usage("the lambda cycle is integrated directly with no accuracy promise; pass --direct-lambda"));
    }
    let text = fs::read_to_string(&cochain_path).map_err(|e| usage(format!("{}: {e}", cochain_path.display())))?;
    let cochain: GraphVector = read_cochain(&text).map_err(|e| usage(format!("{}: {e}", cochain_path.display())))?;
    let spec = immersion_spec(n, eps.as_deref())?;
    let imm = spec.build().map_err(|e| usage(e.to_string()))?;
    let kind = match cycle {
        CycleArg::Alpha => CycleKind::Alpha,
        CycleArg::Lambda => CycleKind::Lambda,
    };
    let mut problem = PairingProblem::new(cochain, kind, imm, samples, seed);
    if let Some(s) = job.strata {
        problem.strata = s;
    }
    problem.max_stderr = args.max_stderr.or(job.max_stderr);
    let _ = writeln!(err, "pairing {} terms over {} samples each", problem.cochain.len(), samples);
    let report = pairing(&problem).map_err(|e| match e {
        crate::integrator::IntegratorError::DimensionMismatch(m) => usage(m),
        other => compute(other),
    })?;
    let e = report.estimate;
    let sign = if e.value.abs() <= 3.0 * e.stderr {
        "undetermined"
    } else if e.value > 0.0 {
        "+"
    } else {
        "-"
    };
    let mut text = estimate_text("pairing", &e);
    for t in &report.terms {
        text.push_str(&format!("  {} x {}: {:.6} +- {:.6}\n", t.coefficient, t.graph, t.estimate.value, t.estimate.stderr));
    }
    for w in &report.warnings {
        text.push_str(&format!("warning: {w}\n"));
        let _ = writeln!(err, "warning: {w}");
    }
    let mut rows: Vec<Vec<String>> = report
        .terms
        .iter()
        .map(|t| vec![t.graph.clone(), t.coefficient.to_string(), t.estimate.value.to_string(), t.estimate.stderr.to_string()])
        .collect();
    rows.push(vec!["total".into(), String::new(), e.value.to_string(), e.stderr.to_string()]);
    Ok(Output {
        json: json!({
            "estimate": e,
            "sign": sign,
            "converged": report.converged,
            "terms": report.terms,
            "warnings": report.warnings,
            "strata": report.strata,
            "cycle": cycle,
            "immersion": spec,
            "code_version": code_version(),
        }),
        text,
        table: (vec!["graph".into(), "coefficient".into(), "value".into(), "stderr".into()], rows),
    })
}
