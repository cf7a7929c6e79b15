use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use commrobust::fpca::fpca_test;
use commrobust::generator::{generate, GeneratorSpec};
use commrobust::gp::gp_test;
use commrobust::graph::load_edge_list;
use commrobust::iwt::{iwt_test, Basis, Combine};
use commrobust::partition::PartitionRecord;
use commrobust::pipeline::{run_pipeline_with_draws, CurveGrid, CurveSample, Which};
use commrobust::report::{self, FpcaOptions, InputSource, IwtOptions, RunConfig, TestChoice};
use commrobust::rewire::{null_graph, rewire, PerturbationLevel};
use commrobust::{detect, modularity, DetectorChoice, Error, Graph, Result, RngStream};

#[derive(Parser)]
#[command(name = "commrobust", version, about = "Test whether a network's community structure is robust")]
struct Cli {
    /// Worker threads for the curve pipeline.
    #[arg(long, global = true, env = "COMMROBUST_THREADS")]
    threads: Option<usize>,

    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the JSON summary of an edge list.
    Summary {
        #[command(flatten)]
        input: GraphInput,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a modular benchmark graph.
    Generate(GenerateArgs),
    /// Detect communities.
    Cluster {
        #[command(flatten)]
        input: GraphInput,
        #[arg(long, value_enum, default_value_t = Method::Louvain)]
        method: Method,
        #[arg(long, env = "COMMROBUST_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rewire a fraction of edges with degree-preserving swaps.
    Perturb {
        #[command(flatten)]
        input: GraphInput,
        #[arg(long)]
        p: f64,
        #[arg(long, env = "COMMROBUST_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a configuration-model null graph with the same degrees.
    Nullmodel {
        #[command(flatten)]
        input: GraphInput,
        #[arg(long, env = "COMMROBUST_SEED", default_value_t = 0)]
        seed: u64,
        /// Fail instead of falling back to edge-swap randomisation.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build observed and null VI curves.
    Curve {
        #[command(flatten)]
        input: GraphInput,
        #[arg(long, value_enum, default_value_t = Method::Louvain)]
        method: Method,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, env = "COMMROBUST_SEED", default_value_t = 0)]
        seed: u64,
        /// Independent null base graphs spread over the null replicates.
        #[arg(long, default_value_t = 1)]
        null_draws: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write the cells as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run a significance test on a curve file.
    Test {
        #[command(subcommand)]
        test: TestCommand,
    },
    /// Render SVG plots from curve (and IWT) artifacts.
    Report {
        #[arg(long)]
        curves: PathBuf,
        #[arg(long)]
        iwt: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run the whole workflow from a config file or flags.
    Run(RunArgs),
}

#[derive(Args)]
struct GraphInput {
    /// Edge-list file.
    #[arg(long)]
    input: PathBuf,
    /// Column delimiter; whitespace by default.
    #[arg(long)]
    delimiter: Option<char>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Fastgreedy,
    Louvain,
}

impl From<Method> for DetectorChoice {
    fn from(m: Method) -> Self {
        match m {
            Method::Fastgreedy => DetectorChoice::FastGreedy,
            Method::Louvain => DetectorChoice::Louvain,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    modules: usize,
    #[arg(long)]
    avg_degree: f64,
    #[arg(long)]
    q: f64,
    #[arg(long, env = "COMMROBUST_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2.5)]
    degree_exponent: f64,
    #[arg(long, default_value_t = 2.0)]
    modsize_exponent: f64,
    #[arg(long)]
    degree_max: Option<usize>,
    /// Edge-list output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Planted partition JSON.
    #[arg(long)]
    planted: Option<PathBuf>,
}

impl GenerateArgs {
    fn spec(&self) -> GeneratorSpec {
        let mut s = GeneratorSpec::new(self.n, self.modules, self.avg_degree, self.q, self.seed);
        s.degree_exponent = self.degree_exponent;
        s.modsize_exponent = self.modsize_exponent;
        s.degree_max = self.degree_max;
        s
    }
}

#[derive(Args)]
struct GridArgs {
    /// Number of perturbation levels above 0.
    #[arg(long, default_value_t = 20)]
    levels: usize,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 10)]
    subreps: usize,
}

impl GridArgs {
    fn grid(&self) -> CurveGrid {
        CurveGrid::equispaced(self.levels, self.reps, self.subreps)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisArg {
    Pointwise,
    Bspline,
}

impl From<BasisArg> for Basis {
    fn from(b: BasisArg) -> Self {
        match b {
            BasisArg::Pointwise => Basis::Pointwise,
            BasisArg::Bspline => Basis::Bspline,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CombineArg {
    Sum,
    Max,
}

impl From<CombineArg> for Combine {
    fn from(c: CombineArg) -> Self {
        match c {
            CombineArg::Sum => Combine::Sum,
            CombineArg::Max => Combine::Max,
        }
    }
}

#[derive(Subcommand)]
enum TestCommand {
    /// Gaussian-process Bayes factor.
    Gp {
        #[arg(long)]
        curves: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Marginal FPCA with Anderson–Darling tests.
    Fpca {
        #[arg(long)]
        curves: PathBuf,
        #[arg(long, default_value_t = 0.95)]
        pve: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 9999)]
        perms: usize,
        #[arg(long, env = "COMMROBUST_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Interval-wise testing.
    Iwt {
        #[arg(long)]
        curves: PathBuf,
        #[arg(long, default_value_t = 1000)]
        perms: usize,
        #[arg(long, value_enum, default_value_t = BasisArg::Pointwise)]
        basis: BasisArg,
        #[arg(long, value_enum, default_value_t = CombineArg::Sum)]
        combine: CombineArg,
        #[arg(long, env = "COMMROBUST_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration; other flags are ignored when given.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Edge-list input (alternative to the generator flags).
    #[arg(long, conflicts_with_all = ["n", "config"])]
    input: Option<PathBuf>,
    #[arg(long)]
    delimiter: Option<char>,
    #[arg(long, requires_all = ["modules", "avg_degree", "q"])]
    n: Option<usize>,
    #[arg(long)]
    modules: Option<usize>,
    #[arg(long)]
    avg_degree: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long, value_enum, default_value_t = Method::Louvain)]
    method: Method,
    #[command(flatten)]
    grid: GridArgs,
    /// Comma-separated subset of gp,fpca,iwt.
    #[arg(long, value_delimiter = ',', default_values_t = ["gp".to_string(), "fpca".to_string(), "iwt".to_string()])]
    tests: Vec<String>,
    #[arg(long, env = "COMMROBUST_SEED", default_value_t = 0)]
    seed: u64,
    /// Independent null base graphs spread over the null replicates.
    #[arg(long, default_value_t = 1)]
    null_draws: usize,
    #[arg(long, default_value_t = 9999)]
    fpca_perms: usize,
    #[arg(long, default_value_t = 1000)]
    iwt_perms: usize,
    #[arg(long, value_enum, default_value_t = BasisArg::Pointwise)]
    basis: BasisArg,
    /// Output directory; overrides the config file's value when given.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        if let Some(path) = &self.config {
            let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let mut cfg = RunConfig::from_json(&s)?;
            if let Some(dir) = &self.out_dir {
                cfg.out_dir = dir.clone();
            }
            return Ok(cfg);
        }
        let input = match (&self.input, self.n) {
            (Some(path), None) => InputSource::EdgeList {
                path: path.clone(),
                delimiter: self.delimiter,
            },
            (None, Some(n)) => InputSource::Generator(GeneratorSpec::new(
                n,
                self.modules.unwrap_or_default(),
                self.avg_degree.unwrap_or_default(),
                self.q.unwrap_or_default(),
                self.seed,
            )),
            _ => {
                return Err(Error::InvalidInput(
                    "give exactly one input: --config, --input or the generator flags".into(),
                ))
            }
        };
        let tests = self
            .tests
            .iter()
            .map(|t| match t.trim().to_ascii_lowercase().as_str() {
                "gp" => Ok(TestChoice::Gp),
                "fpca" => Ok(TestChoice::Fpca),
                "iwt" => Ok(TestChoice::Iwt),
                other => Err(Error::InvalidInput(format!("unknown test `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RunConfig {
            input,
            method: self.method.into(),
            grid: self.grid.grid(),
            tests,
            seed: self.seed,
            null_draws: self.null_draws,
            out_dir: self.out_dir.clone().unwrap_or_else(|| PathBuf::from("commrobust-run")),
            fpca: FpcaOptions {
                perms: self.fpca_perms,
                ..FpcaOptions::default()
            },
            iwt: IwtOptions {
                perms: self.iwt_perms,
                basis: self.basis.into(),
                ..IwtOptions::default()
            },
        })
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    emit(out, &s)
}

fn load(input: &GraphInput) -> Result<Graph> {
    let (g, report) = load_edge_list(&input.input, input.delimiter)?;
    if report.duplicates + report.self_loops > 0 {
        log::info!(
            "dropped {} duplicate edges and {} self-loops",
            report.duplicates,
            report.self_loops
        );
    }
    Ok(g)
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Summary { input, out } => emit_json(out.as_deref(), &load(&input)?.summary()),
        Command::Generate(args) => {
            let spec = args.spec();
            let lg = generate(&spec)?;
            log::info!("achieved modularity {:.4} after {} attempt(s)", lg.achieved_q, lg.attempts);
            if let Some(path) = &args.planted {
                emit_json(Some(path), &lg.record(&spec))?;
            }
            emit(args.out.as_deref(), &lg.graph.to_edge_list_string())
        }
        Command::Cluster { input, method, seed, out } => {
            let g = load(&input)?;
            let c = detect(&g, method.into(), seed);
            let q = modularity(&g, &c)?;
            emit_json(out.as_deref(), &PartitionRecord::new(&c, Some(q)))
        }
        Command::Perturb { input, p, seed, out } => {
            let g = load(&input)?;
            let h = rewire(&g, PerturbationLevel::new(p)?, RngStream::root(seed))?;
            emit(out.as_deref(), &h.to_edge_list_string())
        }
        Command::Nullmodel { input, seed, strict, out } => {
            let g = load(&input)?;
            let (h, method) = null_graph(&g, RngStream::root(seed), !strict)?;
            log::info!("null graph by {method:?}");
            emit(out.as_deref(), &h.to_edge_list_string())
        }
        Command::Curve {
            input,
            method,
            grid,
            seed,
            null_draws,
            out,
            csv,
        } => {
            let g = load(&input)?;
            let set = run_pipeline_with_draws(&g, method.into(), &grid.grid(), seed, null_draws)?;
            emit(Some(&out), &format!("{}\n", set.to_json()?))?;
            if let Some(path) = csv {
                let mut buf = Vec::new();
                set.write_csv(&mut buf).map_err(|e| Error::io(&path, e))?;
                fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
            }
            Ok(())
        }
        Command::Test { test } => match test {
            TestCommand::Gp { curves, out } => emit_json(out.as_deref(), &gp_test(&report::read_curves(&curves)?)?),
            TestCommand::Fpca {
                curves,
                pve,
                alpha,
                perms,
                seed,
                out,
            } => {
                let set = report::read_curves(&curves)?;
                let a = CurveSample::from_set(&set, Which::Observed);
                let b = CurveSample::from_set(&set, Which::Null);
                emit_json(out.as_deref(), &fpca_test(&a, &b, pve, alpha, perms, seed)?)
            }
            TestCommand::Iwt {
                curves,
                perms,
                basis,
                combine,
                seed,
                out,
            } => {
                let set = report::read_curves(&curves)?;
                let a = CurveSample::from_set(&set, Which::Observed);
                let b = CurveSample::from_set(&set, Which::Null);
                emit_json(out.as_deref(), &iwt_test(&a, &b, perms, seed, basis.into(), combine.into())?)
            }
        },
        Command::Report { curves, iwt, out_dir } => {
            let set = report::read_curves(&curves)?;
            let iwt = iwt.map(|p| report::read_iwt(&p)).transpose()?;
            fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
            let (curve_svg, p_svg) = report::render_plots(&set, iwt.as_ref());
            emit(Some(&out_dir.join("curves.svg")), &curve_svg)?;
            if let Some(svg) = p_svg {
                emit(Some(&out_dir.join("pvalues.svg")), &svg)?;
            }
            Ok(())
        }
        Command::Run(args) => {
            let cfg = args.config()?;
            let summary = report::run(&cfg)?;
            emit_json(None, &summary)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not configure {n} threads: {e}");
        }
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
