use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use homog_core::czwhitney::cz_decompose;
use homog_core::dyadic::{DyadicSystem, SystemDump};
use homog_core::intrinsic::{field, TestClass};
use homog_core::sparse::{delta_k_for, sparse_dominate, DominationConfig};
use homog_core::squarefn::intrinsic_square;
use homog_core::weights::{fujii_wilson_ainfty, reverse_holder_rprime, two_weight_ap};
use homog_core::{GridFunction, MetricMeasureSpace, Modulus};
use homog_lab::experiments::sparse_dom::system_for;
use homog_lab::{run, ExperimentConfig, ExperimentId, LabError, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "homog-lab", version, about = "Intrinsic square function experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// E1: weighted L2 ratio across apertures.
    L2Aperture(RunArgs),
    /// E2: weak (1,1) ratio across apertures.
    Weak11(RunArgs),
    /// E3 experiment, or a single domination when --space is given.
    SparseDom(SparseDomArgs),
    /// E4: lower-envelope growth in the aperture.
    ApertureOptimality(RunArgs),
    /// E5: two-weight bound against the reverse Hölder exponent.
    TwoWeightLog(RunArgs),
    /// E6: one-weight L^p(w) ratios against [w]_{A_p}.
    OneWeightAp(RunArgs),
    /// E7: dyadic axioms, Carleson packing and adjacency.
    DyadicAudit(RunArgs),
    LpOracle(RunArgs),
    FunctionalProperties(RunArgs),
    ClosedForms(RunArgs),
    Muckenhoupt(RunArgs),
    CzSuite(RunArgs),
    /// G_{ω,β} of a function on a space.
    Gsquare(GsquareArgs),
    /// Calderón–Zygmund decomposition at height λ.
    Czd(CzdArgs),
    /// Weight characteristics over a dyadic system.
    #[command(subcommand)]
    Weights(WeightsCommand),
    /// Dump the dyadic system of a space.
    Dyadic(SystemArgs),
    /// Dump the field A_ω f(x,k).
    Field(FieldArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SparseDomArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, requires = "f")]
    space: Option<PathBuf>,
    #[arg(long)]
    f: Option<PathBuf>,
    /// A system dump to dominate over instead of the default system.
    #[arg(long, requires = "space")]
    system: Option<PathBuf>,
    #[command(flatten)]
    class: ClassArgs,
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    #[arg(long, visible_alias = "kmin", default_value_t = 0)]
    k_min: i32,
    #[arg(long, visible_alias = "kmax", default_value_t = 8)]
    k_max: i32,
}

#[derive(Args)]
struct ClassArgs {
    /// `power:<α>`, `table:<path>`, `scale:<c>:<spec>` or `zero:`.
    #[arg(long, default_value = "power:1")]
    omega: String,
    #[arg(long, default_value_t = 1.0)]
    phi: f64,
    #[arg(long, default_value_t = 2.0)]
    kappa: f64,
}

impl ClassArgs {
    fn class(&self) -> Result<TestClass> {
        Ok(TestClass::new(Modulus::parse(&self.omega)?, self.phi, self.kappa)?)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GridKind {
    /// Standard dyadic boxes on grids with `κ = 2`, nets otherwise.
    Auto,
    Standard,
    Net,
}

#[derive(Args)]
struct SystemArgs {
    #[arg(long)]
    space: PathBuf,
    /// A system dump to load instead of building one.
    #[arg(long)]
    system: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = GridKind::Auto)]
    grid: GridKind,
    /// Shuffles the net seed order; points are taken by index without it.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 2.0)]
    kappa: f64,
    #[arg(long, visible_alias = "kmin", default_value_t = 0)]
    k_min: i32,
    #[arg(long, visible_alias = "kmax", default_value_t = 8)]
    k_max: i32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FieldArgs {
    #[arg(long)]
    space: PathBuf,
    #[arg(long)]
    f: PathBuf,
    #[command(flatten)]
    class: ClassArgs,
    #[arg(long, visible_alias = "kmin", default_value_t = 0)]
    k_min: i32,
    #[arg(long, visible_alias = "kmax", default_value_t = 8)]
    k_max: i32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GsquareArgs {
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
}

#[derive(Args)]
struct CzdArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long)]
    f: PathBuf,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    whitney: f64,
}

#[derive(Subcommand)]
enum WeightsCommand {
    /// Two-weight [w,σ]_{A_p}, maximized over the adjacent family on grids.
    Ap {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        w: PathBuf,
        #[arg(long)]
        sigma: PathBuf,
        #[arg(long)]
        p: f64,
    },
    /// Fujii–Wilson A_∞ characteristic, maximized over the adjacent family on
    /// grids.
    Ainfty {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        w: PathBuf,
    },
    /// Reverse Hölder exponent over all cubes.
    Rh {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        w: PathBuf,
        #[arg(long, visible_alias = "C")]
        c: f64,
    },
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => std::fs::write(path, text + "\n")?,
        None => writeln!(io::stdout(), "{text}")?,
    }
    Ok(())
}

fn run_experiment(id: ExperimentId, args: &RunArgs) -> Result<bool> {
    let cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path, Some(id))?,
        None => ExperimentConfig::preset(id),
    };
    if cfg.experiment != id {
        return Err(LabError::Config(format!(
            "config is for {}, not {id}",
            cfg.experiment
        )));
    }
    let report = run(&cfg)?;
    if let Some(path) = args.out.as_ref().or(cfg.out.as_ref()) {
        report.write_json(path)?;
    }
    if let Some(path) = args.csv.as_ref().or(cfg.csv.as_ref()) {
        report.write_csv(File::create(path)?)?;
    }
    eprint!("{}", report.summary());
    Ok(report.pass)
}

fn load_dump(space: &MetricMeasureSpace, path: &Path) -> Result<DyadicSystem> {
    let dump: SystemDump = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    Ok(DyadicSystem::from_dump(space, &dump)?)
}

fn build_system(space: &MetricMeasureSpace, args: &SystemArgs) -> Result<DyadicSystem> {
    if let Some(path) = &args.system {
        return load_dump(space, path);
    }
    let (k_min, k_max) = (args.k_min, args.k_max);
    match args.grid {
        GridKind::Auto if args.seed.is_none() => system_for(space, args.kappa, k_min, k_max),
        GridKind::Standard => {
            if args.kappa != 2.0 {
                return Err(LabError::Config("standard boxes need --kappa 2".into()));
            }
            Ok(DyadicSystem::standard_euclidean(space, k_min, k_max)?)
        }
        _ => {
            let mut order: Vec<usize> = (0..space.len()).collect();
            if let Some(seed) = args.seed {
                order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            }
            Ok(DyadicSystem::build(space, args.kappa, k_min, k_max, &order)?)
        }
    }
}

fn system(args: &SystemArgs) -> Result<(MetricMeasureSpace, DyadicSystem)> {
    let space = MetricMeasureSpace::load(&args.space)?;
    let system = build_system(&space, args)?;
    Ok((space, system))
}

/// The adjacent family on grids with `κ = 2` unless a particular system is
/// asked for, otherwise the single system.
fn systems(args: &SystemArgs) -> Result<(MetricMeasureSpace, Vec<DyadicSystem>)> {
    let space = MetricMeasureSpace::load(&args.space)?;
    let adjacent = args.system.is_none()
        && args.grid != GridKind::Net
        && args.seed.is_none()
        && space.grid().is_some()
        && args.kappa == 2.0;
    let family = if adjacent {
        DyadicSystem::adjacent_family(&space, args.k_min, args.k_max)?
    } else {
        vec![build_system(&space, args)?]
    };
    Ok((space, family))
}

fn max_over<F>(family: &[DyadicSystem], mut f: F) -> Result<f64>
where
    F: FnMut(&DyadicSystem) -> homog_core::Result<f64>,
{
    family.iter().try_fold(0.0, |m, sys| Ok(f64::max(m, f(sys)?)))
}

fn execute(command: Command) -> Result<bool> {
    use ExperimentId as E;
    match command {
        Command::L2Aperture(a) => run_experiment(E::L2Aperture, &a),
        Command::Weak11(a) => run_experiment(E::Weak11, &a),
        Command::ApertureOptimality(a) => run_experiment(E::ApertureOptimality, &a),
        Command::TwoWeightLog(a) => run_experiment(E::TwoWeightLog, &a),
        Command::OneWeightAp(a) => run_experiment(E::OneWeightAp, &a),
        Command::DyadicAudit(a) => run_experiment(E::DyadicAudit, &a),
        Command::LpOracle(a) => run_experiment(E::LpOracle, &a),
        Command::FunctionalProperties(a) => run_experiment(E::FunctionalProperties, &a),
        Command::ClosedForms(a) => run_experiment(E::ClosedForms, &a),
        Command::Muckenhoupt(a) => run_experiment(E::Muckenhoupt, &a),
        Command::CzSuite(a) => run_experiment(E::CzSuite, &a),
        Command::SparseDom(a) => match (&a.space, &a.f) {
            (Some(space), Some(f)) => {
                let space = MetricMeasureSpace::load(space)?;
                let f = GridFunction::load(f)?;
                let class = a.class.class()?;
                let system = match &a.system {
                    Some(path) => load_dump(&space, path)?,
                    None => system_for(&space, class.kappa, a.k_min, a.k_max)?,
                };
                let cfg = DominationConfig::new(a.eta, delta_k_for(a.beta, class.kappa)?);
                let res = sparse_dominate(&space, &system, &f, &class, &cfg)?;
                emit(&res, a.run.out.as_deref())?;
                Ok(true)
            }
            _ => run_experiment(E::SparseDom, &a.run),
        },
        Command::Gsquare(a) => {
            let space = MetricMeasureSpace::load(&a.field.space)?;
            let f = GridFunction::load(&a.field.f)?;
            let class = a.field.class.class()?;
            let sq = intrinsic_square(&space, &f, &class, a.beta, a.field.k_min, a.field.k_max)?;
            emit(&sq, a.field.out.as_deref())?;
            Ok(true)
        }
        Command::Field(a) => {
            let space = MetricMeasureSpace::load(&a.space)?;
            let f = GridFunction::load(&a.f)?;
            let fld = field(&space, &f, &a.class.class()?, a.k_min, a.k_max)?;
            emit(&fld, a.out.as_deref())?;
            Ok(true)
        }
        Command::Dyadic(a) => {
            let (_, system) = system(&a)?;
            emit(&system.dump(), a.out.as_deref())?;
            Ok(true)
        }
        Command::Czd(a) => {
            let (space, system) = system(&a.system)?;
            let f = GridFunction::load(&a.f)?;
            let cz = cz_decompose(&space, &system, &f, a.lambda, a.beta, a.whitney)?;
            emit(&cz, a.system.out.as_deref())?;
            Ok(true)
        }
        Command::Weights(w) => {
            let (out, value) = match w {
                WeightsCommand::Ap { system: s, w, sigma, p } => {
                    let (space, family) = systems(&s)?;
                    let (w, sigma) = (GridFunction::load(w)?, GridFunction::load(sigma)?);
                    let v = max_over(&family, |sys| two_weight_ap(&space, sys, &w, &sigma, p))?;
                    (s.out, serde_json::json!({ "ap": v, "p": p, "systems": family.len() }))
                }
                WeightsCommand::Ainfty { system: s, w } => {
                    let (space, family) = systems(&s)?;
                    let w = GridFunction::load(w)?;
                    let v = max_over(&family, |sys| fujii_wilson_ainfty(&space, sys, &w))?;
                    (s.out, serde_json::json!({ "ainfty": v, "systems": family.len() }))
                }
                WeightsCommand::Rh { system: s, w, c } => {
                    let (space, sys) = system(&s)?;
                    let cubes: Vec<usize> = (0..sys.cubes().len()).collect();
                    let rh = reverse_holder_rprime(&space, &sys, &cubes, &GridFunction::load(w)?, c)?;
                    (s.out, serde_json::to_value(rh)?)
                }
            };
            emit(&value, out.as_deref())?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
