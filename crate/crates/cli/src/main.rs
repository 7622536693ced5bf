//! `selftest`: command-line driver for the self-testing toolkit.
//!
//! Exit codes: 0 success, 1 a checked bound failed, 2 bad input, 3 files that
//! do not fit together.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use selftest::decomposition;
use selftest::dilation::{self, DilationWitness, WitnessFile};
use selftest::games::{self, Game};
use selftest::linalg::{self, c, Sampler};
use selftest::qldt::{self, CodeF2, GapMethod, Generator};
use selftest::rounding;
use selftest::strategies::{BipartiteStrategy, StrategyFile};
use selftest::suites::{self, SuiteConfig};

use output::{float, to_csv, to_json};

const SEED_VAR: &str = "SELFTEST_SEED";

#[derive(Parser)]
#[command(name = "selftest", version, about = "Robust self-testing toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Symmetry, synchronicity and β of a game.
    Analyze { game: PathBuf },
    /// Top two eigenvalues of the game polynomial of a strategy.
    Gap {
        game: PathBuf,
        strategy: PathBuf,
        /// ω at or above 1 minus this counts as perfect.
        #[arg(long, default_value_t = games::PERFECT_TOL)]
        perfect_tol: f64,
    },
    /// Spectral gap of the quantum low-degree test of a binary code.
    Qldt(QldtArgs),
    /// Round seeded perturbed PVMs and tabulate the defects.
    Round(RoundArgs),
    /// Decompose a projective strategy into maximally entangled pieces.
    Decompose { game: PathBuf, strategy: PathBuf },
    /// Residuals of a dilation witness, optionally converted to tracial form.
    DilateCheck(DilateArgs),
    /// Run the seeded property suites.
    Suite(SuiteArgs),
    /// Empirical log-log exponents of the projectivization bounds.
    Curve(CurveArgs),
}

#[derive(Args)]
struct QldtArgs {
    /// Generator matrix: rows of 0/1 text, or JSON.
    #[arg(long)]
    code: PathBuf,
    #[arg(long, default_value = "fast")]
    method: GapMethod,
    /// Diagonal weight of the β-synchronised test.
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct RoundArgs {
    #[arg(long, default_value_t = 0.02)]
    eta: f64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    dim: usize,
    #[arg(long, default_value_t = 3)]
    outcomes: usize,
    /// Fraction of trials that must meet the 9δ bound.
    #[arg(long, default_value_t = 0.99)]
    required: f64,
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct DilateArgs {
    game: PathBuf,
    strategy: PathBuf,
    ideal: PathBuf,
    witness: PathBuf,
    /// Fail unless every residual is at most this.
    #[arg(long)]
    eps: Option<f64>,
    /// Also run the conversion to a tracial dilation.
    #[arg(long)]
    convert: bool,
    #[arg(long, default_value_t = suites::DEFAULT_SLACK)]
    slack: f64,
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = suites::DEFAULT_SLACK)]
    slack: f64,
    /// Suite to run; repeat for several. All suites when absent.
    #[arg(long = "suite")]
    suites: Vec<String>,
    /// Dimension range as LO:HI.
    #[arg(long, default_value = "2:6", value_parser = parse_dims)]
    dims: (usize, usize),
    /// List the suites and their claims instead of running them.
    #[arg(long)]
    list: bool,
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    dim: usize,
    #[arg(long, default_value_t = 3)]
    questions: usize,
    #[arg(long, default_value_t = 3)]
    outcomes: usize,
    /// Noise levels, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.0025,0.005,0.01,0.02,0.04,0.08"
    )]
    etas: Vec<f64>,
    #[arg(long)]
    csv: bool,
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected LO:HI, got {s:?}"))?;
    let lo = lo.trim().parse().map_err(|e| format!("{lo:?}: {e}"))?;
    let hi = hi.trim().parse().map_err(|e| format!("{hi:?}: {e}"))?;
    Ok((lo, hi))
}

/// A failure together with its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<selftest::Error> for Failure {
    fn from(e: selftest::Error) -> Self {
        let code = if e.is_incompatibility() {
            3
        } else if e.is_violation() {
            1
        } else {
            2
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::input(format!("{e:#}"))
    }
}

/// What a command prints, and whether every checked bound held.
struct Report {
    text: String,
    ok: bool,
}

type Outcome = Result<Report, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    serde_json::from_str(&read(path)?).map_err(|e| syntax(path, e))
}

/// serde_json's message already ends in "at line L column C".
fn syntax(path: &Path, e: serde_json::Error) -> Failure {
    Failure::input(format!("{}: {e}", path.display()))
}

fn load_game(path: &Path) -> Result<Game, Failure> {
    match Game::from_json(&read(path)?) {
        Ok(game) => game.map_err(|e| located(path, e)),
        Err(e) => Err(syntax(path, e)),
    }
}

fn load_strategy(path: &Path, game: &Game) -> Result<BipartiteStrategy, Failure> {
    let file: StrategyFile = parse_json(path)?;
    BipartiteStrategy::from_file(&file, game).map_err(|e| located(path, e))
}

fn located(path: &Path, e: selftest::Error) -> Failure {
    let mut f = Failure::from(e);
    f.message = format!("{}: {}", path.display(), f.message);
    f
}

/// `SELFTEST_SEED` wins over the command line.
fn seed_override(seed: u64) -> Result<u64, Failure> {
    match std::env::var(SEED_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|e| Failure::input(format!("{SEED_VAR}={v:?}: {e}"))),
        Err(std::env::VarError::NotPresent) => Ok(seed),
        Err(e) => Err(Failure::input(format!("{SEED_VAR}: {e}"))),
    }
}

fn json<T: Serialize>(value: &T, ok: bool) -> Outcome {
    Ok(Report {
        text: to_json(value)?,
        ok,
    })
}

fn csv(header: &[&str], rows: &[Vec<String>], ok: bool) -> Outcome {
    Ok(Report {
        text: to_csv(header, rows)?,
        ok,
    })
}

#[derive(Serialize)]
struct AnalyzeReport {
    questions: Vec<String>,
    answers: Vec<usize>,
    synchronicity: games::SynchronicityReport,
}

fn analyze(path: &Path) -> Outcome {
    let game = load_game(path)?;
    let report = AnalyzeReport {
        questions: game.question_labels().to_vec(),
        answers: game.layout().counts().to_vec(),
        synchronicity: game.analyze_synchronicity(),
    };
    json(&report, true)
}

#[derive(Serialize)]
struct GapReport {
    dim: usize,
    /// `⟨ψ|T|ψ⟩`, the winning probability.
    omega: f64,
    perfect: bool,
    spectrum: games::TopSpectrum,
}

fn gap(game: &Path, strategy: &Path, perfect_tol: f64) -> Outcome {
    if !perfect_tol.is_finite() || perfect_tol < 0.0 {
        return Err(Failure::input(format!(
            "perfect tolerance must be nonnegative, got {perfect_tol}"
        )));
    }
    let g = load_game(game)?;
    let s = load_strategy(strategy, &g)?;
    let t = games::game_polynomial(&g, &s)?;
    let omega = s.psi().dotc(&(&t * s.psi())).re;
    let report = GapReport {
        dim: t.nrows(),
        omega,
        perfect: games::is_perfect(omega, perfect_tol),
        spectrum: games::top_spectrum(&t)?,
    };
    json(&report, true)
}

#[derive(Serialize)]
struct QldtOutput {
    method: GapMethod,
    gap: f64,
    report: qldt::QubitTestReport,
}

fn qldt_cmd(args: &QldtArgs) -> Outcome {
    let gen = Generator::parse(&read(&args.code)?).map_err(|e| located(&args.code, e))?;
    let code = CodeF2::new(gen.clone()).map_err(|e| located(&args.code, e))?;
    let gap = qldt::qldt_gap(&code, args.method)?;
    let report = qldt::qubit_test_report(&gen, args.beta)?;
    if args.csv {
        let method = format!("{:?}", args.method).to_lowercase();
        let row = vec![
            method,
            report.k.to_string(),
            report.n.to_string(),
            report.rank.to_string(),
            report.distance.to_string(),
            float(report.relative_distance),
            float(gap),
            float(report.synchronised.beta),
            float(report.synchronised.renormalization_factor),
        ];
        let header = [
            "method",
            "k",
            "n",
            "rank",
            "distance",
            "relative_distance",
            "gap",
            "beta",
            "renormalization_factor",
        ];
        return csv(&header, &[row], true);
    }
    json(
        &QldtOutput {
            method: args.method,
            gap,
            report,
        },
        true,
    )
}

#[derive(Serialize)]
struct RoundRow {
    trial: usize,
    seed: u64,
    #[serde(flatten)]
    rounding: rounding::QuestionRounding,
}

#[derive(Serialize)]
struct RoundReport {
    eta: f64,
    dim: usize,
    outcomes: usize,
    seed: u64,
    trials: usize,
    within_target: usize,
    required_fraction: f64,
    max_pvm_residual: f64,
    /// Trials whose defect exceeded `9δ`.
    violations: Vec<(usize, u64)>,
    ok: bool,
    rows: Vec<RoundRow>,
}

/// Projection residual above which a rounded family does not count as a PVM.
const PVM_TOL: f64 = 1e-10;

fn round(args: &RoundArgs) -> Outcome {
    if args.trials == 0 || args.dim == 0 || args.outcomes == 0 {
        return Err(Failure::input("trials, dim and outcomes must be positive"));
    }
    if !(args.eta >= 0.0 && args.eta.is_finite()) {
        return Err(Failure::input(format!("eta = {} is not valid", args.eta)));
    }
    linalg::check_dim(args.dim)?;
    let seed = seed_override(args.seed)?;
    let rho = linalg::identity(args.dim) * c(1.0 / args.dim as f64);
    let mut rows = Vec::with_capacity(args.trials);
    for trial in 0..args.trials {
        let s = suites::trial_seed(seed, "round", trial);
        let povm = Sampler::new(s).perturbed_pvm(args.dim, args.outcomes, args.eta);
        let (_, r) = rounding::nearest_pvm(&povm, &rho)?;
        rows.push(RoundRow {
            trial,
            seed: s,
            rounding: r,
        });
    }
    let within = rows.iter().filter(|r| r.rounding.within_target).count();
    let max_res = rows
        .iter()
        .map(|r| r.rounding.pvm_residual)
        .fold(0.0, f64::max);
    let ok = within as f64 >= args.required * args.trials as f64 && max_res <= PVM_TOL;
    for r in rows.iter().filter(|r| !r.rounding.within_target) {
        eprintln!(
            "trial {} (seed {}): defect {:e} exceeds 9δ = {:e}",
            r.trial, r.seed, r.rounding.defect, r.rounding.target
        );
    }
    if args.csv {
        let table: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![
                    r.trial.to_string(),
                    r.seed.to_string(),
                    float(r.rounding.defect),
                    float(r.rounding.delta),
                    float(r.rounding.target),
                    r.rounding.within_target.to_string(),
                    float(r.rounding.pvm_residual),
                ]
            })
            .collect();
        let header = [
            "trial",
            "seed",
            "defect",
            "delta",
            "target",
            "within_target",
            "pvm_residual",
        ];
        return csv(&header, &table, ok);
    }
    let report = RoundReport {
        eta: args.eta,
        dim: args.dim,
        outcomes: args.outcomes,
        seed,
        trials: args.trials,
        within_target: within,
        required_fraction: args.required,
        max_pvm_residual: max_res,
        violations: rows
            .iter()
            .filter(|r| !r.rounding.within_target)
            .map(|r| (r.trial, r.seed))
            .collect(),
        ok,
        rows,
    };
    json(&report, ok)
}

fn decompose(game: &Path, strategy: &Path) -> Outcome {
    let g = load_game(game)?;
    let s = load_strategy(strategy, &g)?;
    let report = decomposition::decompose(&s, &g)?;
    let ok = report.components.holds(suites::DEFAULT_SLACK)
        && report.blocks.iter().all(|b| b.holds(suites::DEFAULT_SLACK));
    json(&report, ok)
}

#[derive(Serialize)]
struct DilateReport {
    residuals: dilation::ResidualTriple,
    epsilon: f64,
    strong: f64,
    /// Three times the largest residual.
    strong_bound: f64,
    certified: Option<bool>,
    conversion: Option<dilation::ToVnaReport>,
    ok: bool,
}

fn dilate_check(args: &DilateArgs) -> Outcome {
    let g = load_game(&args.game)?;
    let s = load_strategy(&args.strategy, &g)?;
    let ideal = load_strategy(&args.ideal, &g)?;
    let file: WitnessFile = parse_json(&args.witness)?;
    let witness = DilationWitness::from_file(&file).map_err(|e| located(&args.witness, e))?;
    let residuals = dilation::dilation_residuals(&s, &ideal, &witness)?;
    let strong = dilation::strong_residual(&s, &ideal, &witness)?;
    let eps = residuals.max();
    let certified = args.eps.map(|e| residuals.certifies(e));
    let conversion = if args.convert {
        Some(dilation::vna_from_dilation(&s, &ideal, &witness)?.report)
    } else {
        None
    };
    let ok = strong <= 3.0 * eps + args.slack
        && certified.unwrap_or(true)
        && conversion.as_ref().is_none_or(|r| r.holds(args.slack));
    let report = DilateReport {
        residuals,
        epsilon: eps,
        strong,
        strong_bound: 3.0 * eps,
        certified,
        conversion,
        ok,
    };
    json(&report, ok)
}

#[derive(Serialize)]
struct SuiteListing {
    name: &'static str,
    claim: &'static str,
}

fn suite(args: &SuiteArgs) -> Outcome {
    if args.list {
        let listing: Vec<SuiteListing> = suites::suite_names()
            .into_iter()
            .map(|name| SuiteListing {
                name,
                claim: suites::suite_claim(name).expect("registered suite"),
            })
            .collect();
        return json(&listing, true);
    }
    let config = SuiteConfig {
        seed: seed_override(args.seed)?,
        trials: args.trials,
        dims: args.dims,
        slack: args.slack,
        suites: args.suites.clone(),
    };
    let report = suites::run_suites(&config)?;
    for s in &report.suites {
        for v in &s.violations {
            let what = match (&v.check, &v.error) {
                (Some(ch), _) => format!(
                    "{}: {:e} against {:e} (margin {:e})",
                    ch.name, ch.value, ch.bound, ch.margin
                ),
                (None, Some(e)) => e.clone(),
                (None, None) => String::new(),
            };
            eprintln!("{} trial {} seed {}: {what}", s.name, v.trial, v.seed);
        }
    }
    if args.csv {
        let rows: Vec<Vec<String>> = report
            .suites
            .iter()
            .map(|s| {
                vec![
                    s.name.clone(),
                    s.trials.to_string(),
                    s.passed.to_string(),
                    s.failed.to_string(),
                    s.errors.to_string(),
                    float(s.required_fraction),
                    s.worst_margin.map_or_else(String::new, float),
                    s.ok.to_string(),
                ]
            })
            .collect();
        let header = [
            "suite",
            "trials",
            "passed",
            "failed",
            "errors",
            "required_fraction",
            "worst_margin",
            "ok",
        ];
        return csv(&header, &rows, report.ok);
    }
    json(&report, report.ok)
}

fn curve(args: &CurveArgs) -> Outcome {
    if args.etas.is_empty() || args.etas.iter().any(|e| !e.is_finite() || *e < 0.0) {
        return Err(Failure::input(
            "noise levels must be finite and nonnegative",
        ));
    }
    if args.dim == 0 || args.questions == 0 || args.outcomes == 0 {
        return Err(Failure::input(
            "dim, questions and outcomes must be positive",
        ));
    }
    linalg::check_dim(args.dim)?;
    let seed = seed_override(args.seed)?;
    let curve =
        rounding::exponent_curve(seed, &args.etas, args.dim, args.questions, args.outcomes)?;
    if args.csv {
        let rows: Vec<Vec<String>> = curve
            .points
            .iter()
            .map(|p| {
                vec![
                    float(p.eta),
                    float(p.dsync),
                    float(p.gamma),
                    float(p.correlation_shift),
                ]
            })
            .collect();
        return csv(&["eta", "dsync", "gamma", "correlation_shift"], &rows, true);
    }
    json(&curve, true)
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Analyze { game } => analyze(game),
        Command::Gap {
            game,
            strategy,
            perfect_tol,
        } => gap(game, strategy, *perfect_tol),
        Command::Qldt(a) => qldt_cmd(a),
        Command::Round(a) => round(a),
        Command::Decompose { game, strategy } => decompose(game, strategy),
        Command::DilateCheck(a) => dilate_check(a),
        Command::Suite(a) => suite(a),
        Command::Curve(a) => curve(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(report) => {
            print!("{}", report.text);
            if report.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
