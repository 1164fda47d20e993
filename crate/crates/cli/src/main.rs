use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use dgeom_cli::analyze::run_report;
use dgeom_cli::config::{load_json, ConnectionSpec, GeometrySpec, Modules, RunConfig};
use dgeom_cli::error::{CliError, CliResult, Exit};
use dgeom_cli::report::{write_output, Report};
use dgeom_cli::star::{run_star, ProductKind, StarRequest};
use dgeom_cli::sw::{run_sw, SwConfig};
use dgeom_cli::verify::{first_failure, run_suite, Injection, Suite};
use dgeom_core::ncalg::QOrdering;

#[derive(Parser)]
#[command(name = "dgeom", version, about = "Differential geometry of nonlinear connections, Finsler spaces and noncommutative gauge fields")]
struct Cli {
    /// Worker threads (defaults to the number of cores). Output does not
    /// depend on this value.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a configured geometry at sample points.
    Analyze(AnalyzeArgs),
    /// Analyze the geometry generated by a Finsler function.
    Finsler(FinslerArgs),
    /// Multiply two polynomials with a star product.
    Star(StarArgs),
    /// Seiberg–Witten expansion of a de Sitter gauge potential.
    Sw(SwArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SampleOverrides {
    /// Number of random sample points.
    #[arg(long)]
    points: Option<usize>,
    /// Seed of the sample.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    sample: SampleOverrides,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ConnectionChoice {
    Canonical,
    LeviCivita,
}

#[derive(Args)]
struct FinslerArgs {
    /// Finsler function of x1..xn, y1..yn.
    #[arg(long = "f")]
    function: String,
    /// Base dimension.
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value = "canonical")]
    connection: ConnectionChoice,
    /// Also compute the spectral densities with this cutoff.
    #[arg(long)]
    cutoff: Option<f64>,
    #[command(flatten)]
    sample: SampleOverrides,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum OrderingChoice {
    Normal,
    Symmetric,
}

#[derive(Args)]
struct StarArgs {
    #[arg(long, value_enum)]
    product: ProductKind,
    #[arg(long)]
    lhs: String,
    #[arg(long)]
    rhs: String,
    /// Moyal: strict upper triangle of θ, row by row, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// Lie: `su2`, `desitter[:l]` or a JSON file of structure constants.
    #[arg(long)]
    structure: Option<String>,
    /// Lie: order in the structure constants.
    #[arg(long, default_value_t = 1)]
    order: usize,
    /// Quantum plane: `re` or `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    q: Option<String>,
    /// Quantum plane: operator ordering.
    #[arg(long, value_enum, default_value = "normal")]
    ordering: OrderingChoice,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SwArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    sample: SampleOverrides,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: Suite,
    /// Plant a known defect (used to test the suites themselves).
    #[arg(long, value_enum, hide = true)]
    inject: Option<Injection>,
}

fn apply(
    sample: &SampleOverrides,
    spec: &mut dgeom_core::SampleSpec,
    points: &mut Option<Vec<Vec<f64>>>,
    output: &Option<PathBuf>,
) -> Option<PathBuf> {
    if let Some(n) = sample.points {
        spec.count = n;
        *points = None;
    }
    if let Some(s) = sample.seed {
        spec.seed = s;
    }
    sample.out.clone().or_else(|| output.clone())
}

fn finish(report: Report, out: Option<&Path>) -> CliResult<Exit> {
    report.emit(out)?;
    Ok(Exit::Ok)
}

fn run(cli: Cli) -> CliResult<Exit> {
    match cli.command {
        Command::Analyze(a) => {
            let mut cfg: RunConfig = load_json(&a.config)?;
            let out = apply(&a.sample, &mut cfg.sample, &mut cfg.points, &cfg.output.clone());
            finish(run_report(&cfg)?, out.as_deref())
        }
        Command::Finsler(a) => {
            let mut cfg = RunConfig::builtin("flat");
            cfg.geometry = GeometrySpec::Finsler {
                f: a.function,
                n: a.n,
            };
            cfg.connection = match a.connection {
                ConnectionChoice::Canonical => ConnectionSpec::Canonical,
                ConnectionChoice::LeviCivita => ConnectionSpec::LeviCivita,
            };
            cfg.modules = Modules {
                finsler: true,
                spectral: a.cutoff.is_some(),
                ..Modules::default()
            };
            if let Some(c) = a.cutoff {
                cfg.spectral.cutoff_scale = c;
            }
            let out = apply(&a.sample, &mut cfg.sample, &mut cfg.points, &None);
            finish(run_report(&cfg)?, out.as_deref())
        }
        Command::Star(a) => {
            let req = StarRequest {
                product: a.product,
                lhs: a.lhs,
                rhs: a.rhs,
                theta: a.theta,
                structure: a.structure,
                order: a.order,
                q: a.q,
                ordering: match a.ordering {
                    OrderingChoice::Normal => QOrdering::Normal,
                    OrderingChoice::Symmetric => QOrdering::Symmetric,
                },
            };
            let value = run_star(&req)?;
            let mut text = serde_json::to_string_pretty(&value).expect("JSON values serialize");
            text.push('\n');
            write_output(&text, a.out.as_deref())?;
            Ok(Exit::Ok)
        }
        Command::Sw(a) => {
            let mut cfg: SwConfig = load_json(&a.config)?;
            let out = apply(&a.sample, &mut cfg.sample, &mut cfg.points, &cfg.output.clone());
            finish(run_sw(&cfg)?, out.as_deref())
        }
        Command::Verify(a) => {
            let start = Instant::now();
            let results = run_suite(a.suite, a.inject);
            for r in &results {
                println!("{r}");
            }
            let passed = results.iter().filter(|r| r.pass()).count();
            let elapsed = start.elapsed().as_secs_f64();
            match first_failure(&results) {
                None => {
                    println!("suite {}: {passed}/{} checks passed in {elapsed:.1} s", a.suite.name(), results.len());
                    Ok(Exit::Ok)
                }
                Some(f) => {
                    println!(
                        "suite {}: {passed}/{} checks passed in {elapsed:.1} s; first failure: {}",
                        a.suite.name(),
                        results.len(),
                        f.label()
                    );
                    Ok(Exit::VerificationFailed)
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(Exit::Usage.code() as u8);
        }
        pool = pool.num_threads(t);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return ExitCode::from(Exit::Usage.code() as u8);
        }
    };
    let status = pool.install(|| run(cli)).unwrap_or_else(|e: CliError| {
        eprintln!("error: {e}");
        e.exit
    });
    ExitCode::from(status.code() as u8)
}
