//! Batch experiment runner: parses body/measure/spec files, dispatches to the
//! library, and writes JSON-line reports, CSV summaries and plot-ready data.
//!
//! Exit codes: 0 all checks hold, 1 any violation, 2 input error,
//! 3 inconclusive results present.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use logbm::{
    check_log_bm, check_log_minkowski, check_lp_bm, check_lp_minkowski, check_multi_minkowski,
    check_prekopa_leindler, cone_volume_measure, decompose_irreducible, emit_plot_data,
    lemma31_inclusion_check, scan_b_property, scan_b_weak, search_counterexample,
    subspace_concentration, volume, CheckReport, CombinationSpecFile, GridFn, GridSpec, HPolytope,
    LogBmOptions, McSettings, SearchConfig, SphericalMeasure, UniformGrid, Verdict,
};

#[derive(Parser)]
#[command(name = "logbm", about = "Convex-body combination and inequality lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Volume of a body (exact for dim <= 3, Monte Carlo above).
    Volume(VolumeArgs),
    /// Build a combination body from a spec file and write it out.
    Combine(CombineArgs),
    /// Run a named inequality check.
    Check(CheckArgs),
    /// (B)-property scan over a uniform exponent grid.
    ScanB(ScanBArgs),
    /// Irreducible product decomposition of an unconditional body.
    Decompose(DecomposeArgs),
    /// Cone-volume measure of a body.
    ConeVolume(ConeVolumeArgs),
    /// Subspace concentration condition of a measure (or a body's
    /// cone-volume measure).
    Concentration(ConcentrationArgs),
    /// Random counterexample search for the logarithmic inequality.
    Search(SearchArgs),
    /// Convert a report stream sharing one swept parameter into tidy CSV.
    PlotData(PlotDataArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Write JSON-line reports here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a CSV summary (name, margin, verdict, slack).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct VolumeArgs {
    #[arg(long)]
    body: PathBuf,
    /// Monte Carlo sample budget (required for dim >= 4), e.g. 1e6.
    #[arg(long, value_parser = parse_budget)]
    mc: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CombineArgs {
    /// Combination spec file: {"p": number|"log", "weights": [..],
    /// "bodies": [paths], "grid": {"kind": "angle"|"fibonacci", "m": int}}.
    #[arg(long)]
    spec: PathBuf,
    /// Output body file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// One of: log-bm, lp-bm, lp-minkowski, log-minkowski, multi-minkowski,
    /// prekopa-leindler, lemma31.
    #[arg(long)]
    name: String,
    /// Body files (two for pairwise checks; one for lemma31).
    #[arg(long, num_args = 1..)]
    bodies: Vec<PathBuf>,
    /// Surface body for multi-minkowski.
    #[arg(long)]
    surface: Option<PathBuf>,
    /// Grid function files f g h for prekopa-leindler.
    #[arg(long, num_args = 3)]
    functions: Vec<PathBuf>,
    /// Lambda value or comma-separated sweep.
    #[arg(long)]
    lambda: Option<F64List>,
    /// p value or comma-separated sweep.
    #[arg(long)]
    p: Option<F64List>,
    /// Powers for multi-minkowski (comma separated, summing to 1).
    #[arg(long)]
    powers: Option<F64List>,
    /// Grid size m (single).
    #[arg(long)]
    grid: Option<usize>,
    /// Refinement sequence of grid sizes for log-bm, e.g. 64,256,1024.
    #[arg(long)]
    grids: Option<UsizeList>,
    /// Monte Carlo budget for the geometric-mean lower witness, e.g. 1e6.
    #[arg(long, value_parser = parse_budget)]
    mc: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Margin tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Declared discretization slack for prekopa-leindler.
    #[arg(long, default_value_t = 0.0)]
    slack: f64,
    /// Scaling entries for lemma31, comma separated.
    #[arg(long)]
    t: Option<F64List>,
    /// Exponent of the lambda = 1 end for lemma31.
    #[arg(long, allow_hyphen_values = true)]
    s1: Option<f64>,
    /// Exponent of the lambda = 0 end for lemma31.
    #[arg(long, allow_hyphen_values = true)]
    s0: Option<f64>,
    /// Sample budget for lemma31 membership sampling.
    #[arg(long, value_parser = parse_budget, default_value = "10000")]
    samples: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ScanBArgs {
    /// Body defining the uniform measure.
    #[arg(long)]
    mu_body: PathBuf,
    /// Body being scaled.
    #[arg(long)]
    body: PathBuf,
    /// Scaling entries, comma separated (full (B)-property).
    #[arg(long)]
    t: Option<F64List>,
    /// Weak variant: one common scaling entry.
    #[arg(long)]
    weak: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    s_from: f64,
    #[arg(long, allow_hyphen_values = true)]
    s_to: f64,
    #[arg(long)]
    s_step: f64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(long)]
    body: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConeVolumeArgs {
    #[arg(long)]
    body: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConcentrationArgs {
    /// Body whose cone-volume measure is checked.
    #[arg(long)]
    body: Option<PathBuf>,
    /// Measure file checked directly.
    #[arg(long)]
    measure: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 1000)]
    iters: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    grid: usize,
    #[arg(long, default_value_t = 6)]
    pairs: usize,
    /// Monte Carlo budget (required for dim 3), e.g. 1e5.
    #[arg(long, value_parser = parse_budget)]
    mc: Option<u64>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct PlotDataArgs {
    /// JSON-line report file.
    #[arg(long)]
    reports: PathBuf,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Comma-separated f64 list argument.
#[derive(Clone, Debug)]
struct F64List(Vec<f64>);

impl std::str::FromStr for F64List {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| e.to_string()))
            .collect::<Result<Vec<f64>, String>>()
            .map(F64List)
    }
}

/// Comma-separated usize list argument.
#[derive(Clone, Debug)]
struct UsizeList(Vec<usize>);

impl std::str::FromStr for UsizeList {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|e| e.to_string()))
            .collect::<Result<Vec<usize>, String>>()
            .map(UsizeList)
    }
}

/// Budgets accept scientific notation like 1e6.
fn parse_budget(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = s
        .parse()
        .map_err(|e: std::num::ParseFloatError| e.to_string())?;
    if f < 1.0 || !f.is_finite() || f > 1e15 {
        return Err("budget out of range".into());
    }
    Ok(f.round() as u64)
}

fn resolve_seed(flag: Option<u64>) -> Option<u64> {
    flag.or_else(|| {
        std::env::var("LOGBM_SEED")
            .ok()
            .and_then(|v| v.parse::<u64>().ok())
    })
}

fn require_seed(flag: Option<u64>) -> Result<u64> {
    resolve_seed(flag).ok_or_else(|| {
        anyhow!("a seed is required for Monte Carlo paths; pass --seed or set LOGBM_SEED")
    })
}

fn load_body(path: &Path) -> Result<HPolytope> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading body file {}", path.display()))?;
    HPolytope::from_json(&text).with_context(|| format!("parsing body file {}", path.display()))
}

fn load_grid_fn(path: &Path) -> Result<GridFn> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading grid function {}", path.display()))?;
    let raw: GridFn = serde_json::from_str(&text)
        .with_context(|| format!("parsing grid function {}", path.display()))?;
    GridFn::new(raw.origin, raw.step, raw.shape, raw.values).map_err(Into::into)
}

fn write_text(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            println!("{}", text.trim_end());
            Ok(())
        }
    }
}

fn write_reports(reports: &[CheckReport], output: &OutputArgs) -> Result<()> {
    let mut lines = String::new();
    for r in reports {
        lines.push_str(&r.to_json_line());
        lines.push('\n');
    }
    write_text(output.out.as_ref(), &lines)?;
    if let Some(csv_path) = &output.csv {
        let mut csv = String::from(CheckReport::csv_header());
        csv.push('\n');
        for r in reports {
            csv.push_str(&r.csv_row());
            csv.push('\n');
        }
        fs::write(csv_path, csv).with_context(|| format!("writing {}", csv_path.display()))?;
    }
    Ok(())
}

fn exit_code(reports: &[CheckReport]) -> i32 {
    if reports.iter().any(|r| r.verdict == Verdict::Violated) {
        1
    } else if reports.iter().any(|r| r.verdict == Verdict::Inconclusive) {
        3
    } else {
        0
    }
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(reports) => exit_code(&reports),
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

fn dispatch(cmd: Command) -> Result<Vec<CheckReport>> {
    match cmd {
        Command::Volume(args) => {
            let body = load_body(&args.body)?;
            let mc = match args.mc {
                Some(samples) => Some(McSettings {
                    samples,
                    seed: require_seed(args.seed)?,
                }),
                None => None,
            };
            if body.dim() >= 4 && mc.is_none() {
                bail!("dim {} volume needs --mc and a seed", body.dim());
            }
            let est = volume(&body, mc)?;
            let digest = logbm::InputDigest::new("volume")
                .body(&body)
                .u64(est.samples)
                .finish();
            let mut rep =
                CheckReport::new("volume", digest).with_values(est.value, 0.0, 0.0, est.error);
            rep.samples = (est.samples > 0).then_some(est.samples);
            rep.seed = est.seed;
            rep = rep.certificate(format!(
                "volume estimate: {}",
                serde_json::to_string(&est).expect("volume estimate serializes")
            ));
            write_reports(std::slice::from_ref(&rep), &args.output)?;
            Ok(vec![rep])
        }
        Command::Combine(args) => {
            let text = fs::read_to_string(&args.spec)
                .with_context(|| format!("reading spec {}", args.spec.display()))?;
            let file: CombinationSpecFile = serde_json::from_str(&text)
                .with_context(|| format!("parsing spec {}", args.spec.display()))?;
            let base = args.spec.parent().map(Path::to_path_buf).unwrap_or_default();
            let bodies: Vec<HPolytope> = file
                .bodies
                .iter()
                .map(|p| {
                    if Path::new(p).is_absolute() {
                        load_body(Path::new(p))
                    } else {
                        load_body(&base.join(p))
                    }
                })
                .collect::<Result<_>>()?;
            let spec = logbm::CombinationSpec {
                p: file.p,
                weights: file.weights,
                bodies,
                grid: file.grid,
            };
            let result = logbm::combine(&spec)?;
            write_text(args.out.as_ref(), &result.to_json())?;
            Ok(vec![])
        }
        Command::Check(args) => {
            let reports = run_check(&args)?;
            write_reports(&reports, &args.output)?;
            Ok(reports)
        }
        Command::ScanB(args) => {
            let mu = load_body(&args.mu_body)?;
            let body = load_body(&args.body)?;
            let count = ((args.s_to - args.s_from) / args.s_step).round() as usize + 1;
            let grid = UniformGrid {
                start: args.s_from,
                step: args.s_step,
                count,
            };
            let rep = match (&args.t, args.weak) {
                (Some(t), None) => scan_b_property(&mu, &body, &t.0, &grid, args.tol)?,
                (None, Some(c)) => scan_b_weak(&mu, &body, c, &grid, args.tol)?,
                _ => bail!("pass exactly one of --t or --weak"),
            };
            write_reports(std::slice::from_ref(&rep), &args.output)?;
            Ok(vec![rep])
        }
        Command::Decompose(args) => {
            let body = load_body(&args.body)?;
            let d = decompose_irreducible(&body)?;
            write_text(args.out.as_ref(), &d.to_json())?;
            Ok(vec![])
        }
        Command::ConeVolume(args) => {
            let body = load_body(&args.body)?;
            let m = cone_volume_measure(&body)?;
            write_text(args.out.as_ref(), &m.to_json())?;
            Ok(vec![])
        }
        Command::Concentration(args) => {
            let sigma = match (&args.body, &args.measure) {
                (Some(body), None) => cone_volume_measure(&load_body(body)?)?,
                (None, Some(path)) => {
                    let text = fs::read_to_string(path)
                        .with_context(|| format!("reading measure {}", path.display()))?;
                    SphericalMeasure::from_json(&text)?
                }
                _ => bail!("pass exactly one of --body or --measure"),
            };
            let rep = subspace_concentration(&sigma, args.tol)?;
            write_reports(std::slice::from_ref(&rep), &args.output)?;
            Ok(vec![rep])
        }
        Command::Search(args) => {
            let seed = require_seed(args.seed)?;
            let mut cfg = SearchConfig::new(args.dim, args.iters, seed);
            cfg.grid_m = args.grid;
            cfg.pairs = args.pairs;
            cfg.tol = args.tol;
            // 3-D witnesses are Monte Carlo; default to a modest budget so
            // the exploratory run works out of the box.
            let mc_samples = args.mc.or((args.dim >= 3).then_some(50_000));
            cfg.mc = mc_samples.map(|samples| McSettings { samples, seed });
            let rep = search_counterexample(&cfg)?;
            write_reports(std::slice::from_ref(&rep), &args.output)?;
            Ok(vec![rep])
        }
        Command::PlotData(args) => {
            let text = fs::read_to_string(&args.reports)
                .with_context(|| format!("reading reports {}", args.reports.display()))?;
            let reports: Vec<CheckReport> = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(CheckReport::from_json_line)
                .collect::<logbm::Result<_>>()?;
            let csv = emit_plot_data(&reports)?;
            write_text(args.out.as_ref(), &csv)?;
            Ok(vec![])
        }
    }
}

fn run_check(args: &CheckArgs) -> Result<Vec<CheckReport>> {
    let name = args.name.as_str();
    let mut reports = Vec::new();
    match name {
        "log-bm" => {
            let [k, l] = load_pair(&args.bodies)?;
            let lambdas = args
                .lambda
                .clone()
                .ok_or_else(|| anyhow!("log-bm needs --lambda"))?
                .0;
            let mc = match args.mc {
                Some(samples) => Some(McSettings {
                    samples,
                    seed: require_seed(args.seed)?,
                }),
                None => None,
            };
            let mut opts = LogBmOptions {
                grids: args.grids.clone().map(|g| g.0).unwrap_or_default(),
                mc,
                tol: args.tol,
            };
            if let Some(m) = args.grid {
                if opts.grids.is_empty() {
                    opts.grids = vec![m];
                }
            }
            for &lambda in &lambdas {
                reports.push(check_log_bm(&k, &l, lambda, &opts)?);
            }
        }
        "lp-bm" => {
            let [k, l] = load_pair(&args.bodies)?;
            let lambda = one(&args.lambda, "lp-bm needs --lambda")?;
            let ps = args.p.clone().ok_or_else(|| anyhow!("lp-bm needs --p"))?.0;
            // Exact combination volumes enumerate constraint triples in 3-D,
            // so default to a coarser sphere grid there.
            let default_m = if k.dim() >= 3 { 192 } else { 720 };
            let grid = GridSpec::default_for(k.dim()).with_m(args.grid.unwrap_or(default_m));
            for &p in &ps {
                reports.push(check_lp_bm(&k, &l, p, lambda, &grid, args.tol)?);
            }
        }
        "lp-minkowski" => {
            let [k, l] = load_pair(&args.bodies)?;
            let ps = args
                .p
                .clone()
                .ok_or_else(|| anyhow!("lp-minkowski needs --p"))?
                .0;
            for &p in &ps {
                reports.push(check_lp_minkowski(&k, &l, p, args.tol)?);
            }
        }
        "log-minkowski" => {
            let [k, l] = load_pair(&args.bodies)?;
            reports.push(check_log_minkowski(&k, &l, args.tol)?);
        }
        "multi-minkowski" => {
            let surface = load_body(
                args.surface
                    .as_ref()
                    .ok_or_else(|| anyhow!("multi-minkowski needs --surface"))?,
            )?;
            if args.bodies.is_empty() {
                bail!("multi-minkowski needs --bodies");
            }
            let bodies: Vec<HPolytope> = args
                .bodies
                .iter()
                .map(|p| load_body(p))
                .collect::<Result<_>>()?;
            let refs: Vec<&HPolytope> = bodies.iter().collect();
            let powers = args
                .powers
                .clone()
                .ok_or_else(|| anyhow!("multi-minkowski needs --powers"))?
                .0;
            reports.push(check_multi_minkowski(&surface, &refs, &powers, args.tol)?);
        }
        "prekopa-leindler" => {
            if args.functions.len() != 3 {
                bail!("prekopa-leindler needs --functions f.json g.json h.json");
            }
            let f = load_grid_fn(&args.functions[0])?;
            let g = load_grid_fn(&args.functions[1])?;
            let h = load_grid_fn(&args.functions[2])?;
            let lambda = one(&args.lambda, "prekopa-leindler needs --lambda")?;
            reports.push(check_prekopa_leindler(
                &f, &g, &h, lambda, args.slack, args.tol,
            )?);
        }
        "lemma31" => {
            if args.bodies.len() != 1 {
                bail!("lemma31 needs exactly one body");
            }
            let k = load_body(&args.bodies[0])?;
            let t = args.t.clone().ok_or_else(|| anyhow!("lemma31 needs --t"))?.0;
            let s1 = args.s1.ok_or_else(|| anyhow!("lemma31 needs --s1"))?;
            let s0 = args.s0.ok_or_else(|| anyhow!("lemma31 needs --s0"))?;
            let lambda = one(&args.lambda, "lemma31 needs --lambda")?;
            let seed = require_seed(args.seed)?;
            let grid = GridSpec::default_for(k.dim()).with_m(args.grid.unwrap_or(256));
            reports.push(lemma31_inclusion_check(
                &k,
                &t,
                s1,
                s0,
                lambda,
                &grid,
                args.samples,
                seed,
            )?);
        }
        other => bail!("unknown check name {other:?}"),
    }
    Ok(reports)
}

fn one(list: &Option<F64List>, err: &str) -> Result<f64> {
    match list.as_ref().map(|l| l.0.as_slice()) {
        Some([x]) => Ok(*x),
        _ => bail!("{err} (exactly one value)"),
    }
}

fn load_pair(paths: &[PathBuf]) -> Result<[HPolytope; 2]> {
    if paths.len() != 2 {
        bail!("this check needs exactly two --bodies");
    }
    Ok([load_body(&paths[0])?, load_body(&paths[1])?])
}
