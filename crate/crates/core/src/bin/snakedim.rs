use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use snakedim::chains::{lex_order, seeded_level_orders, theorem_b_certificate};
use snakedim::hierarchy::{build_hierarchy, validate_hierarchy, Builder};
use snakedim::io::{
    read_hierarchy, read_order, read_space, write_hierarchy, write_json, write_order,
    write_profile_csv, write_space, CertificateReport, ProfileReport, SearchReport,
};
use snakedim::metric::{bit_reversal_sequence, Generator};
use snakedim::presets::{run_preset, PRESET_NAMES};
use snakedim::real::Real;
use snakedim::search::{exhaustive_min_snake, local_search_min_snake, SearchObjective};
use snakedim::separating::{binary_code_order, separating_family, SeparationMethod};
use snakedim::snake::{pair_snake_profile, snake_number_at_scale};

#[derive(Parser)]
#[command(name = "snakedim", version, about = "Snake numbers of ordered finite metric spaces")]
struct Cli {
    /// Worker thread cap; results do not depend on it.
    #[arg(long, global = true, env = "SNAKEDIM_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a sample space and write a space file.
    Gen(GenArgs),
    /// Build an order and write an order file.
    Order(OrderArgs),
    /// Snake profiles of one pair, or snake numbers at given scales.
    Snake(SnakeArgs),
    /// Build or validate a cover hierarchy.
    Hierarchy(HierarchyArgs),
    /// Check the chain-order snake bound on every pair of points.
    Certify(CertifyArgs),
    /// Search for orders with small snake number.
    Search(SearchArgs),
    /// Run a named experiment.
    Preset(PresetArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Segment,
    Circle,
    Grid,
    Tripod,
    TripodProduct,
    Cantor,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Points for segment and circle.
    #[arg(long)]
    n: Option<usize>,
    /// Points per side (grid) or per leg (tripod).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    factors: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderKind {
    Natural,
    Lex,
    Binary,
    Permutation,
    BitReversal,
}

#[derive(Args)]
struct OrderArgs {
    #[arg(long)]
    space: PathBuf,
    #[arg(long, value_enum)]
    kind: OrderKind,
    /// Hierarchy file, for `lex`.
    #[arg(long)]
    hierarchy: Option<PathBuf>,
    /// Shuffle the per-level set orders of `lex` with `--seed`.
    #[arg(long)]
    seeded_levels: bool,
    /// Comma-separated point ids, for `permutation`.
    #[arg(long, value_delimiter = ',')]
    perm: Vec<usize>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct SnakeArgs {
    #[arg(long)]
    space: PathBuf,
    #[arg(long)]
    order: PathBuf,
    /// Ordered pair `x,y`; without it the maximum over all pairs is reported.
    #[arg(long, value_delimiter = ',')]
    pair: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    scales: Vec<f64>,
    #[arg(short, long)]
    output: PathBuf,
    /// Also write `scale,value` rows.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BuilderArg {
    Brick,
    Partition,
}

#[derive(Args)]
struct HierarchyArgs {
    #[arg(long)]
    space: PathBuf,
    /// Validate this hierarchy file instead of building one.
    #[arg(long)]
    validate: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "brick")]
    builder: BuilderArg,
    #[arg(long, default_value_t = 3)]
    depth: usize,
    #[arg(long)]
    mult_bound: usize,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    space: PathBuf,
    #[arg(long)]
    order: PathBuf,
    #[arg(long)]
    hierarchy: PathBuf,
    /// Dimension `n`; the bound checked is `2n + 1`.
    #[arg(long)]
    n: usize,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Exhaustive,
    Local,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    space: PathBuf,
    #[arg(long, value_enum, default_value = "exhaustive")]
    method: Method,
    #[arg(long, value_delimiter = ',', required = true)]
    scales: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    /// Fail (exit 1) if the best value exceeds this.
    #[arg(long)]
    expect_at_most: Option<usize>,
    /// Fail (exit 1) if the best value is below this.
    #[arg(long)]
    expect_at_least: Option<usize>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct PresetArgs {
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(PRESET_NAMES))]
    name: String,
    /// Directory for `<name>.json` and, for scale sweeps, `<name>.csv`.
    #[arg(short, long, default_value = ".")]
    out_dir: PathBuf,
}

type Failure = Box<dyn std::error::Error + Send + Sync>;

enum Outcome {
    Ok,
    AssertionFailed(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(t);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(cli.command, cli.seed)) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::AssertionFailed(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn need(value: Option<usize>, flag: &str) -> Result<usize, Failure> {
    value.ok_or_else(|| format!("--{flag} is required for this kind").into())
}

fn run(command: Command, seed: u64) -> Result<Outcome, Failure> {
    match command {
        Command::Gen(a) => {
            let g = match a.kind {
                Kind::Segment => Generator::Segment { n: need(a.n, "n")? },
                Kind::Circle => Generator::Circle { n: need(a.n, "n")? },
                Kind::Grid => Generator::Grid { dim: need(a.dim, "dim")?, m: need(a.m, "m")? },
                Kind::Tripod => Generator::Tripod { m: need(a.m, "m")? },
                Kind::TripodProduct => Generator::TripodProduct { factors: need(a.factors, "factors")?, m: need(a.m, "m")? },
                Kind::Cantor => Generator::Cantor { depth: need(a.depth, "depth")? },
            };
            write_space(&a.output, &g.build()?)?;
            Ok(Outcome::Ok)
        }
        Command::Order(a) => {
            let space = read_space(&a.space)?;
            let order = match a.kind {
                OrderKind::Natural => space.natural_order()?,
                OrderKind::Lex => {
                    let path = a.hierarchy.ok_or("--hierarchy is required for lex orders")?;
                    let h = read_hierarchy(&path, &space)?;
                    let levels = a.seeded_levels.then(|| seeded_level_orders(&h, seed));
                    lex_order(&h, space.len(), levels.as_deref())?
                }
                OrderKind::Binary => binary_code_order(&separating_family(&space, SeparationMethod::Dendrogram)?),
                OrderKind::Permutation => space.order_from_permutation(a.perm)?,
                OrderKind::BitReversal => space.order_from_permutation(bit_reversal_sequence(space.len()))?,
            };
            write_order(&a.output, &order)?;
            Ok(Outcome::Ok)
        }
        Command::Snake(a) => {
            let space = read_space(&a.space)?;
            let order = read_order(&a.order, &space)?;
            if !a.pair.is_empty() && a.pair.len() != 2 {
                return Err(format!("--pair takes exactly two point ids, got {}", a.pair.len()).into());
            }
            if let [x, y] = a.pair[..] {
                let report = ProfileReport::from(&pair_snake_profile(&space, &order, x, y, &a.scales)?);
                write_json(&a.output, &report)?;
                if let Some(csv) = a.csv {
                    write_profile_csv(&csv, &report)?;
                }
            } else {
                let mut report = ProfileReport {
                    pair: [0, 0],
                    scales: a.scales.iter().copied().map(Real).collect(),
                    values: Vec::new(),
                    witness: Vec::new(),
                    overlap_at: None,
                };
                let mut argmax = Vec::new();
                for &eps in &a.scales {
                    let m = snake_number_at_scale(&space, &order, eps)?;
                    report.values.push(m.value.value());
                    argmax.push([m.argmax.x, m.argmax.y]);
                    report.witness = m.value.witness.map(|w| w.points).unwrap_or_default();
                    report.pair = [m.argmax.x, m.argmax.y];
                }
                if let Some(csv) = &a.csv {
                    write_profile_csv(csv, &report)?;
                }
                let mut json = serde_json::to_value(&report)?;
                json["argmax"] = serde_json::to_value(argmax)?;
                write_json(&a.output, &json)?;
            }
            Ok(Outcome::Ok)
        }
        Command::Hierarchy(a) => {
            let space = read_space(&a.space)?;
            if let Some(path) = a.validate {
                let h = read_hierarchy(&path, &space)?;
                let report = validate_hierarchy(&space, &h, a.mult_bound);
                write_json(&a.output, &report)?;
                return Ok(if report.ok {
                    Outcome::Ok
                } else {
                    Outcome::AssertionFailed("hierarchy failed validation".into())
                });
            }
            let builder = match a.builder {
                BuilderArg::Brick => Builder::Brick,
                BuilderArg::Partition => Builder::Partition,
            };
            write_hierarchy(&a.output, &build_hierarchy(&space, builder, a.depth, a.mult_bound)?)?;
            Ok(Outcome::Ok)
        }
        Command::Certify(a) => {
            let space = read_space(&a.space)?;
            let order = read_order(&a.order, &space)?;
            let h = read_hierarchy(&a.hierarchy, &space)?;
            let cert = theorem_b_certificate(&space, &order, &h, a.n)?;
            write_json(&a.output, &CertificateReport::from(&cert))?;
            Ok(if cert.pass {
                Outcome::Ok
            } else {
                Outcome::AssertionFailed(format!(
                    "certificate failed: worst snake {} exceeds bound {}",
                    cert.worst_value().unwrap_or(0),
                    cert.bound
                ))
            })
        }
        Command::Search(a) => {
            let space = read_space(&a.space)?;
            let objective = SearchObjective { scales: a.scales.clone() };
            let report = match a.method {
                Method::Exhaustive => {
                    SearchReport::new("exhaustive", &a.scales, None, None, &exhaustive_min_snake(&space, &objective)?)
                }
                Method::Local => {
                    let r = local_search_min_snake(&space, &objective, seed, a.iterations)?;
                    SearchReport::new("local", &a.scales, Some(seed), Some(a.iterations), &r)
                }
            };
            write_json(&a.output, &report)?;
            if let Some(max) = a.expect_at_most.filter(|&m| report.best_value > m) {
                return Ok(Outcome::AssertionFailed(format!("best value {} exceeds {max}", report.best_value)));
            }
            if let Some(min) = a.expect_at_least.filter(|&m| report.best_value < m) {
                return Ok(Outcome::AssertionFailed(format!("best value {} is below {min}", report.best_value)));
            }
            Ok(Outcome::Ok)
        }
        Command::Preset(a) => {
            let report = run_preset(&a.name)?;
            std::fs::create_dir_all(&a.out_dir)?;
            write_json(&a.out_dir.join(format!("{}.json", a.name)), &report)?;
            if !report.sweep.is_empty() {
                write_sweep_csv(&a.out_dir.join(format!("{}.csv", a.name)), &report.sweep)?;
            }
            print!("{}", summary(&report));
            Ok(if report.pass {
                Outcome::Ok
            } else {
                Outcome::AssertionFailed(format!("preset {} failed", a.name))
            })
        }
    }
}

fn write_sweep_csv(path: &Path, rows: &[(f64, usize)]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["scale", "value"])?;
    for &(scale, value) in rows {
        w.write_record([snakedim::real::format_sig17(scale), value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn summary(report: &snakedim::presets::PresetReport) -> String {
    let mut out = String::new();
    for (kind, checks) in [("claim", &report.claims), ("fixture", &report.fixtures)] {
        for c in checks {
            let status = if c.pass { "PASS" } else { "FAIL" };
            let rel = serde_json::to_value(c.relation).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
            out.push_str(&format!("{status} {kind} {}: observed {} ({rel} {})\n", c.name, c.observed, c.expected));
        }
    }
    for note in &report.context {
        out.push_str(&format!("note {note}\n"));
    }
    out
}
