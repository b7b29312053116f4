use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use topsimp_core::assignment::{exact_assignment, wasserstein};
use topsimp_core::io;
use topsimp_core::morse::{self, SkipHistogram};
use topsimp_core::oracle::brute_force_diagram;
use topsimp_core::persistence::compute_diagram;
use topsimp_core::solver::{self, AdamParams, Method, Optimizer};
use topsimp_core::{Error, ScalarField, SolverConfig, TargetSpec};

/// Topological simplification of scalar fields on regular grids.
#[derive(Parser)]
#[command(name = "topsimp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the persistence diagram of a field.
    Diagram(DiagramArgs),
    /// Optimize a field towards a target diagram.
    Simplify(SimplifyArgs),
    /// Wasserstein distance between two diagram files.
    Compare(CompareArgs),
    /// Extract filaments from a 3D field.
    Filaments(FilamentArgs),
}

#[derive(Args)]
struct Input {
    /// Field header (JSON); values are read from the `.raw` file next to it.
    input: PathBuf,
    /// Rescale values to [0, 1] after reading.
    #[arg(long)]
    normalize: bool,
}

impl Input {
    fn load(&self) -> Result<ScalarField> {
        let mut f = io::read_field(&self.input).with_context(|| format!("reading {}", self.input.display()))?;
        if self.normalize {
            f.normalize();
        }
        Ok(f)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DiagramMethod {
    Dms,
    Oracle,
}

#[derive(Args)]
struct DiagramArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "dms")]
    method: DiagramMethod,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverMethod {
    Baseline,
    Accelerated,
}

#[derive(Clone, Copy, ValueEnum)]
enum OptimizerKind {
    Direct,
    Adam,
}

#[derive(Args)]
#[command(group(ArgGroup::new("target").required(true).multiple(false)))]
struct SimplifyArgs {
    #[command(flatten)]
    input: Input,
    /// Remove finite pairs less persistent than this fraction of the range.
    #[arg(long, group = "target")]
    threshold: Option<f64>,
    /// Remove every finite dimension-1 pair.
    #[arg(long, group = "target")]
    remove_saddle_pairs: bool,
    /// Remove every finite pair.
    #[arg(long, group = "target")]
    keep_infinite_only: bool,
    /// Keep exactly the pairs listed in this diagram file.
    #[arg(long = "target", value_name = "FILE", group = "target")]
    target_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "accelerated")]
    method: SolverMethod,
    #[arg(long = "alpha-b", default_value_t = 0.5)]
    alpha_b: f64,
    #[arg(long = "alpha-d", default_value_t = 0.5)]
    alpha_d: f64,
    /// Stop once the loss falls to this fraction of the initial loss.
    #[arg(long, default_value_t = 0.01)]
    stop: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    #[arg(long, value_enum, default_value = "direct")]
    optimizer: OptimizerKind,
    /// Adam learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// Output field header; the dtype of the input is kept.
    #[arg(long)]
    out: PathBuf,
    /// Run report (JSON).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Diagram of the output field (CSV).
    #[arg(long)]
    diagram_out: Option<PathBuf>,
}

impl SimplifyArgs {
    fn target(&self) -> Result<TargetSpec> {
        Ok(if let Some(t) = self.threshold {
            TargetSpec::Threshold(t)
        } else if self.remove_saddle_pairs {
            TargetSpec::RemoveDimension(1)
        } else if self.keep_infinite_only {
            TargetSpec::KeepInfiniteOnly
        } else {
            let path = self.target_file.as_deref().expect("target group is required");
            let d = io::load_diagram(path).with_context(|| format!("reading {}", path.display()))?;
            TargetSpec::Explicit(d.pairs().iter().map(|p| p.key()).collect())
        })
    }

    fn config(&self) -> SolverConfig {
        let optimizer = match self.optimizer {
            OptimizerKind::Direct => Optimizer::Direct,
            OptimizerKind::Adam => {
                let mut p = AdamParams::default();
                if let Some(lr) = self.lr {
                    p.lr = lr;
                }
                Optimizer::Adam(p)
            }
        };
        SolverConfig {
            method: match self.method {
                SolverMethod::Baseline => Method::Baseline,
                SolverMethod::Accelerated => Method::Accelerated,
            },
            alpha_birth: self.alpha_b,
            alpha_death: self.alpha_d,
            stop: self.stop,
            max_iterations: self.max_iter,
            optimizer,
        }
    }
}

#[derive(Args)]
struct CompareArgs {
    d1: PathBuf,
    d2: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    /// Use the exact solver instead of the auction.
    #[arg(long)]
    exact: bool,
}

#[derive(Args)]
struct FilamentArgs {
    #[command(flatten)]
    input: Input,
    /// Only lines starting at 2-saddles at or above this value.
    #[arg(long, default_value_t = f64::NEG_INFINITY, allow_negative_numbers = true)]
    min_value: f64,
    /// Cancel saddle-saddle pairs by connector reversal first.
    #[arg(long)]
    simplify_saddles: bool,
    /// Polyline CSV.
    #[arg(long)]
    out: PathBuf,
    /// Skip histogram JSON; defaults to the output path with a `.json` extension.
    #[arg(long)]
    histogram: Option<PathBuf>,
}

fn diagram(args: &DiagramArgs) -> Result<()> {
    let f = args.input.load()?;
    let d = match args.method {
        DiagramMethod::Dms => compute_diagram(&f)?.0,
        DiagramMethod::Oracle => brute_force_diagram(&f)?,
    };
    io::save_diagram(&args.out, &d)?;
    Ok(())
}

fn simplify(args: &SimplifyArgs) -> Result<()> {
    let spec = args.target()?;
    let config = args.config();
    let dtype = io::read_header(&args.input.input)
        .with_context(|| format!("reading {}", args.input.input.display()))?
        .dtype;
    let f = args.input.load()?;
    let s = solver::run(&f, &spec, &config)?;
    io::write_field(&args.out, &s.field, dtype)?;
    if let Some(p) = &args.report {
        io::write_json(p, &s.report)?;
    }
    if let Some(p) = &args.diagram_out {
        io::save_diagram(p, &s.diagram)?;
    }
    let r = &s.report;
    eprintln!(
        "{} iterations{}, loss {:.6e} -> {:.6e}, {} -> {} pairs",
        r.iterations,
        if r.max_iterations { " (iteration limit)" } else { "" },
        r.loss0,
        r.loss_final,
        r.input_pairs,
        r.output_pairs
    );
    Ok(())
}

fn compare(args: &CompareArgs) -> Result<()> {
    let d1 = io::load_diagram(&args.d1).with_context(|| format!("reading {}", args.d1.display()))?;
    let d2 = io::load_diagram(&args.d2).with_context(|| format!("reading {}", args.d2.display()))?;
    if !(args.q >= 1.0 && args.q.is_finite()) {
        return Err(Error::InvalidInput(format!("q must be a finite value >= 1, got {}", args.q)).into());
    }
    let a = if args.exact {
        exact_assignment(&d1, &d2, args.q)?
    } else {
        wasserstein(&d1, &d2, args.q)?
    };
    println!("{}", a.distance());
    Ok(())
}

fn histogram_path(args: &FilamentArgs) -> PathBuf {
    args.histogram.clone().unwrap_or_else(|| args.out.with_extension("json"))
}

fn filaments(args: &FilamentArgs) -> Result<()> {
    let f = args.input.load()?;
    if f.grid().ndim() != 3 {
        return Err(Error::InvalidInput(format!("filaments need a 3D field, got dims {:?}", f.dims())).into());
    }
    let (d, mut g, _) = compute_diagram(&f)?;
    let hist = if args.simplify_saddles {
        morse::cancel_all_saddle_pairs(&mut g, &d)?
    } else {
        SkipHistogram::default()
    };
    let lines = morse::extract_filaments(&g, &f, args.min_value)?;
    io::write_polylines(std::io::BufWriter::new(std::fs::File::create(&args.out)?), &lines)?;
    io::write_json(&histogram_path(args), &hist)?;
    eprintln!(
        "{} filaments, {} of {} saddle pairs cancelled",
        lines.len(),
        hist.cancelled,
        hist.processed
    );
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::GuardExceeded { .. }) => 3,
        Some(Error::Structural(_)) => 4,
        _ => 2,
    }
}

fn set_threads() -> Result<()> {
    if let Ok(v) = std::env::var("THREADS") {
        let n: usize = v.parse().with_context(|| format!("THREADS={v:?} is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    set_threads()?;
    match &cli.command {
        Command::Diagram(a) => diagram(a),
        Command::Simplify(a) => simplify(a),
        Command::Compare(a) => compare(a),
        Command::Filaments(a) => filaments(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
