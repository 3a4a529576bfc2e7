use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cdcalc::certify::{CdCertifier, CdParams, NuSample, DEFAULT_PSD_TOL};
use cdcalc::geometry::{self, CandidateSet};
use cdcalc::inequalities::LatticeSemigroup;
use cdcalc::models::{self, PeriodicLatticeSpec};
use cdcalc::run::{self, Check, ParamSource, RunConfig};
use cdcalc::semigroup::eigen::DENSE_LIMIT;
use cdcalc::CdError;

#[derive(Parser)]
#[command(name = "cdcalc", version, about = "Curvature-dimension certification and heat-semigroup inequality checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Model catalog.
    Models {
        #[command(subcommand)]
        action: ModelsAction,
    },
    /// Certify CD parameters on a model, or maximize rho1.
    Certify(CertifyArgs),
    /// Lowest eigenvalues of -L on a periodic lattice.
    Spectrum(SpectrumArgs),
    /// Run one inequality check and write its report.
    Verify(VerifyArgs),
    /// Heisenberg distance, ball volume and perimeter.
    Geometry {
        #[command(subcommand)]
        action: GeometryAction,
    },
    /// Execute a JSON run config.
    Run(RunArgs),
}

#[derive(Subcommand)]
enum ModelsAction {
    List,
}

#[derive(Args)]
struct ParamArgs {
    /// Maximize rho1 instead of checking a given value.
    #[arg(long)]
    maximize: bool,
    #[arg(long)]
    rho1: Option<f64>,
    #[arg(long)]
    rho2: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    d: Option<f64>,
}

impl ParamArgs {
    /// Explicit values override the catalog reference field by field.
    fn source(&self, model: &str) -> Result<ParamSource, CdError> {
        let reference = models::lookup(model)?.reference_cd;
        let pick = |v: Option<f64>, r: Option<f64>, name: &str| {
            v.or(r).ok_or_else(|| CdError::InvalidParameter(format!("--{name} is required for {model}")))
        };
        if !self.maximize && self.rho1.is_none() && self.rho2.is_none() && self.kappa.is_none() && self.d.is_none() {
            return Ok(ParamSource::Reference);
        }
        let rho2 = pick(self.rho2, reference.map(|r| r.rho2), "rho2")?;
        let kappa = pick(self.kappa, reference.map(|r| r.kappa), "kappa")?;
        let d = pick(self.d, reference.map(|r| r.d), "d")?;
        if self.maximize {
            Ok(ParamSource::Maximize { rho2, kappa, d })
        } else {
            let rho1 = pick(self.rho1, reference.map(|r| r.rho1), "rho1")?;
            Ok(ParamSource::Explicit { rho1, rho2, kappa, d })
        }
    }
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    model: String,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random base points added to the catalog grid.
    #[arg(long, default_value_t = 10)]
    random_points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    model: String,
    /// Points per axis.
    #[arg(long, default_value_t = 12)]
    points: usize,
    /// Number of eigenvalues to print.
    #[arg(long, default_value_t = 10)]
    count: usize,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    inequality: String,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Points per axis.
    #[arg(long, default_value_t = 12)]
    points: usize,
    #[arg(long, default_value_t = 50)]
    functions: usize,
    /// Use the conjugate exponent in the p >= 2 pseudo-Poincare branch.
    #[arg(long)]
    dual_exponent: bool,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Subcommand)]
enum GeometryAction {
    /// Monte Carlo volume of the CC ball B(0, r).
    BallVolume {
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        segments: usize,
    },
    /// Horizontal perimeter and volume of a candidate set.
    Perimeter {
        /// gauge-ball, tube or box
        #[arg(long)]
        set: String,
        /// Set parameters: radius; rho and half-height; half-side and half-height.
        #[arg(long = "param", num_args = 1..)]
        params: Vec<f64>,
    },
    /// CC distance between two points, with a lower bound.
    Distance {
        #[arg(long, value_delimiter = ',', default_value = "0,0,0", allow_hyphen_values = true)]
        from: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        to: Vec<f64>,
        #[arg(long, default_value_t = geometry::DEFAULT_SEGMENTS)]
        segments: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Check,
    Error(CdError),
}

impl From<CdError> for Failure {
    fn from(e: CdError) -> Self {
        Failure::Error(e)
    }
}

fn exit_code(e: &CdError) -> u8 {
    match e {
        CdError::SizeCap { .. } => 3,
        _ => 2,
    }
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<(), CdError> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn point(v: &[f64]) -> Result<geometry::Point, CdError> {
    v.try_into().map_err(|_| CdError::InvalidParameter("points need three coordinates".into()))
}

fn finish_run(cfg: &RunConfig) -> Result<(), Failure> {
    let report = run::execute(cfg)?;
    print!("{}", report.csv());
    if let Some(path) = &cfg.output {
        let (json, csv) = report.write(path)?;
        eprintln!("wrote {} and {}", json.display(), csv.display());
    }
    for s in &report.skipped {
        eprintln!("skipped: {s}");
    }
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Models { action: ModelsAction::List } => {
            for e in models::catalog()? {
                let cd = e.reference_cd.map(|p| format!("CD({}, {}, {}, {})", p.rho1, p.rho2, p.kappa, p.d));
                let dim = e.homogeneous_dim.map(|d| d.to_string());
                println!(
                    "{:14} chart dim {}  homogeneous dim {:4}  reference {}",
                    e.name,
                    e.model.chart_dim(),
                    dim.as_deref().unwrap_or("-"),
                    cd.as_deref().unwrap_or("-")
                );
            }
        }
        Command::Certify(a) => {
            let entry = models::lookup(&a.model)?;
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let mut cert = CdCertifier::new(&entry.model)?;
            cert.set_points(&entry.sample_points(a.random_points, &mut rng))?;
            let nus = NuSample::default_grid();
            let params = match a.params.source(&a.model)? {
                ParamSource::Reference => entry
                    .reference_cd
                    .ok_or_else(|| CdError::InvalidParameter(format!("{} has no reference parameters", a.model)))?,
                ParamSource::Maximize { rho2, kappa, d } => {
                    let rho1 = cert.maximize_rho1(rho2, kappa, d, &nus, DEFAULT_PSD_TOL)?;
                    eprintln!("maximal certified rho1 = {rho1}");
                    CdParams::new(rho1, rho2, kappa, d)?
                }
                ParamSource::Explicit { rho1, rho2, kappa, d } => CdParams::new(rho1, rho2, kappa, d)?,
            };
            let report = cert.verify_cached(&params, &nus, DEFAULT_PSD_TOL)?;
            match &a.out {
                Some(path) => std::fs::write(path, serde_json::to_string_pretty(&report).map_err(CdError::from)?)
                    .map_err(CdError::from)?,
                None => print_json(&run::certification_row(&report))?,
            }
            if !report.verdict {
                return Err(Failure::Check);
            }
        }
        Command::Spectrum(a) => {
            let entry = models::lookup(&a.model)?;
            let mut spec = PeriodicLatticeSpec::uniform(&entry, a.points);
            spec.cap = DENSE_LIMIT;
            let s = LatticeSemigroup::new(&spec, None)?;
            let eigs: Vec<f64> = s.heat.spectrum.neg_eigenvalues().into_iter().take(a.count).collect();
            print_json(&serde_json::json!({ "model": a.model, "points": spec.points, "eigenvalues": eigs }))?;
        }
        Command::Verify(a) => {
            let check = Check::parse(&a.inequality)?;
            let mut cfg = RunConfig::new(a.model.clone(), a.seed);
            cfg.params = a.params.source(&a.model)?;
            cfg.lattice.n = a.points;
            cfg.functions = a.functions;
            cfg.dual_exponent = a.dual_exponent;
            cfg.inequalities = Some(vec![check]);
            cfg.output = a.out;
            finish_run(&cfg)?;
        }
        Command::Geometry { action } => match action {
            GeometryAction::BallVolume { r, samples, seed, segments } => {
                print_json(&geometry::ball_volume(r, samples, seed, segments)?)?;
            }
            GeometryAction::Perimeter { set, params } => {
                let need = |n: usize| {
                    if params.len() == n {
                        Ok(())
                    } else {
                        Err(CdError::InvalidParameter(format!("{set} takes {n} parameter(s), got {}", params.len())))
                    }
                };
                let candidate = match set.as_str() {
                    "gauge-ball" => need(1).map(|_| CandidateSet::GaugeBall { radius: params[0] }),
                    "tube" => need(2).map(|_| CandidateSet::Tube { rho: params[0], half_height: params[1] }),
                    "box" => need(2).map(|_| CandidateSet::Box { a: params[0], c: params[1] }),
                    other => Err(CdError::InvalidParameter(format!("unknown set kind `{other}`"))),
                }?;
                print_json(&geometry::horizontal_perimeter(&candidate)?)?;
            }
            GeometryAction::Distance { from, to, segments } => {
                print_json(&geometry::cc_distance(&point(&from)?, &point(&to)?, segments)?)?;
            }
        },
        Command::Run(a) => {
            let mut cfg = RunConfig::load(&a.config)?;
            if let Some(seed) = a.seed {
                cfg.seed = seed;
            }
            if a.out.is_some() {
                cfg.output = a.out;
            }
            finish_run(&cfg)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
