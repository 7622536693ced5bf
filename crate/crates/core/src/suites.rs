//! Seeded randomized property suites.
//!
//! Every suite draws random instances from a per-trial seed, evaluates one or
//! more inequalities and records by how much each holds. A trial passes when
//! every margin is at least `-slack`. Trials run in parallel; results are kept
//! in trial order, so a report depends only on the configuration.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::decomposition::{self, near_synchronous_strategy};
use crate::dilation::{self, DilationWitness, TraceSandwich, VnaResiduals};
use crate::error::{Error, Result};
use crate::games::{self, Game};
use crate::linalg::{self, c, CMatrix, CVector, Sampler};
use crate::qldt::{self, CodeF2, GapMethod};
use crate::rounding;
use crate::strategies::{self, BipartiteStrategy, Family, TracialAlgebra, TracialStrategy};

pub const DEFAULT_SLACK: f64 = 1e-9;

/// What to run and how strictly to judge it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub trials: usize,
    /// Inclusive range of Hilbert space dimensions. Suites clip it to the
    /// sizes they can afford.
    pub dims: (usize, usize),
    pub slack: f64,
    /// Suites to run, in registry order; empty means all of them.
    pub suites: Vec<String>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 1,
            trials: 100,
            dims: (2, 6),
            slack: DEFAULT_SLACK,
            suites: Vec::new(),
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter(
                "at least one trial is needed".into(),
            ));
        }
        if !(self.slack > 0.0 && self.slack.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "slack must be positive, got {}",
                self.slack
            )));
        }
        let (lo, hi) = self.dims;
        if lo == 0 || lo > hi {
            return Err(Error::InvalidParameter(format!(
                "dimension range {lo}..={hi} is empty"
            )));
        }
        for name in &self.suites {
            find(name)?;
        }
        Ok(())
    }

    fn selected(&self) -> Vec<&'static Suite> {
        if self.suites.is_empty() {
            return SUITES.iter().collect();
        }
        SUITES
            .iter()
            .filter(|s| self.suites.iter().any(|n| n == s.name))
            .collect()
    }
}

/// One evaluated inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
    /// `bound − value` for upper bounds, `value − bound` for lower bounds.
    pub margin: f64,
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn le(&mut self, name: &'static str, value: f64, bound: f64) {
        self.0.push(Check {
            name,
            value,
            bound,
            margin: bound - value,
        });
    }

    fn ge(&mut self, name: &'static str, value: f64, bound: f64) {
        self.0.push(Check {
            name,
            value,
            bound,
            margin: value - bound,
        });
    }

    fn sandwich(&mut self, s: &TraceSandwich) {
        self.ge("trace of P above 1 − δ", s.trace_p, s.lower);
        self.le("trace of P below 1/(1 − δ)", s.trace_p, s.upper);
    }
}

type TrialFn = fn(&mut Sampler, (usize, usize)) -> Result<Checks>;

struct Suite {
    name: &'static str,
    claim: &'static str,
    /// Fraction of trials that must pass.
    required: f64,
    run: TrialFn,
}

const SUITES: &[Suite] = &[
    Suite { name: "value-dsync", claim: "ω(G; C) ≤ 1 − β·dsync(C; ν_A) on β-synchronous games", required: 1.0, run: value_dsync },
    Suite {
        name: "beta-synchronised",
        claim: "|ω(G;S) − ω(G;Ŝ)| ≤ |ω(G′;S) − ω(G′;Ŝ)|/(1 − β) for perfect S",
        required: 1.0,
        run: beta_synchronised,
    },
    Suite {
        name: "symmetric-dsync",
        claim: "1 − dsync(S) ≤ √(1 − dsync(S_A))·√(1 − dsync(S_B)) and dsync(S_A), dsync(S_B) ≤ 2 dsync(S)",
        required: 1.0,
        run: symmetric_dsync,
    },
    Suite { name: "replacement", claim: "E Σ|C − Ĉ| ≤ 12δ + 4√γ_A + 4√γ_B", required: 1.0, run: replacement },
    Suite { name: "holder", claim: "|ω(G;C) − ω(G;C′)| ≤ E Σ|C − C′|", required: 1.0, run: holder },
    Suite { name: "povm-pair-opnorm", claim: "‖Σ(A_i − Ã_i)²‖ ≤ 4 for incomplete POVMs", required: 1.0, run: povm_pair_opnorm },
    Suite { name: "correlation-normalized", claim: "correlations are nonnegative and normalized", required: 1.0, run: correlation_normalized },
    Suite { name: "polynomial-affine", claim: "the game polynomial is affine in ν", required: 1.0, run: polynomial_affine },
    Suite { name: "gap-unitary", claim: "the spectral gap is invariant under unitary conjugation", required: 1.0, run: gap_unitary },
    Suite { name: "gns-correlation", claim: "the GNS realization reproduces the tracial correlation", required: 1.0, run: gns_correlation },
    Suite { name: "rounding", claim: "nearest_pvm returns a PVM within 9δ in the normalized trace", required: 0.99, run: rounding_trial },
    Suite {
        name: "projectivize",
        claim: "rounding both sides keeps dsync at 0 on ME states and obeys the replacement bound",
        required: 1.0,
        run: projectivize,
    },
    Suite { name: "scan-identity", claim: "ρ = Σ μ_λ ρ_λ to 1e-10 in trace norm", required: 1.0, run: scan_identity },
    Suite {
        name: "scan-defect",
        claim: "level defect ≤ √(2δ), commutator ≤ 2√(2δ), level dsync ≤ commutator/2",
        required: 1.0,
        run: scan_defect,
    },
    Suite { name: "compressed-dsync", claim: "dsync of the compressed ME strategy ≤ γ/2", required: 1.0, run: compressed_dsync },
    Suite { name: "qldt-gap", claim: "fast, dense and Bell gaps agree; Bell frame diagonalizes T", required: 1.0, run: qldt_gap },
    Suite { name: "spectral-witness", claim: "gap witness deviation ≥ 1/(16 + 12√2) and ⟨ψ|T|ψ⟩ = 1 − Δ/2", required: 1.0, run: spectral_witness },
    Suite { name: "top-eigenspace", claim: "leak ≤ √((1 − ω)/α)", required: 1.0, run: top_eigenspace },
    Suite { name: "schmidt-bound", claim: "‖λ − μ‖₂ ≤ ‖ψ − φ‖", required: 1.0, run: schmidt_bound },
    Suite { name: "isometry-estimate", claim: "(V − W)*(V − W) ≼ 2(V − PV)*(V − PV)", required: 1.0, run: isometry_estimate },
    Suite { name: "dimension-bound", claim: "dim H ≥ (1 − ε²) dim H̃", required: 1.0, run: dimension_bound },
    Suite { name: "trace-sandwich", claim: "1 − δ ≤ τ^∞(P) ≤ 1/(1 − δ)", required: 1.0, run: trace_sandwich },
    Suite { name: "strong-residual", claim: "joint residual ≤ 3·max of the residual triple", required: 1.0, run: strong_residual },
    Suite { name: "aux-rounding", claim: "rounded aux coefficients within twice the input distance", required: 1.0, run: aux_rounding },
    Suite { name: "partial-isometry", claim: "the five compression estimates with their constants", required: 1.0, run: partial_isometry },
    Suite {
        name: "to-tracial",
        claim: "dilation to tracial conversion within 1700ε², with side comparisons",
        required: 1.0,
        run: to_tracial,
    },
    Suite { name: "vna-roundtrip", claim: "roundtrip residual ≤ 1700(4 + √2)²ε", required: 1.0, run: vna_roundtrip },
    Suite { name: "kappa-monotone", claim: "κ′(ε, δ) is monotone in both arguments", required: 1.0, run: kappa_monotone },
];

fn find(name: &str) -> Result<&'static Suite> {
    SUITES
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown suite {name:?}")))
}

/// Names of all suites in registry order.
pub fn suite_names() -> Vec<&'static str> {
    SUITES.iter().map(|s| s.name).collect()
}

pub fn suite_claim(name: &str) -> Result<&'static str> {
    Ok(find(name)?.claim)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one trial, derived from the run seed, the suite name and the
/// trial index, so selecting fewer suites does not change any trial.
pub fn trial_seed(seed: u64, suite: &str, trial: usize) -> u64 {
    // FNV-1a
    let name = suite.bytes().fold(0xCBF2_9CE4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01B3)
    });
    splitmix(splitmix(seed ^ splitmix(name)) ^ trial as u64)
}

/// Evaluate one trial of `suite` from its seed, e.g. to replay a logged
/// violation.
pub fn run_trial(suite: &str, seed: u64, dims: (usize, usize)) -> Result<Vec<Check>> {
    let s = find(suite)?;
    Ok((s.run)(&mut Sampler::new(seed), dims)?.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub trial: usize,
    pub seed: u64,
    /// The failing check, or `None` when the trial raised an error.
    pub check: Option<Check>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteOutcome {
    pub name: String,
    pub claim: String,
    pub trials: usize,
    pub passed: usize,
    pub failed: usize,
    pub errors: usize,
    pub required_fraction: f64,
    /// Smallest margin over all checks of all trials.
    pub worst_margin: Option<f64>,
    pub ok: bool,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub trials: usize,
    pub dims: (usize, usize),
    pub slack: f64,
    pub ok: bool,
    pub suites: Vec<SuiteOutcome>,
}

impl SuiteReport {
    pub fn suite(&self, name: &str) -> Option<&SuiteOutcome> {
        self.suites.iter().find(|s| s.name == name)
    }
}

fn run_suite(suite: &Suite, config: &SuiteConfig) -> SuiteOutcome {
    let results: Vec<(u64, Result<Checks>)> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(config.seed, suite.name, t);
            (seed, (suite.run)(&mut Sampler::new(seed), config.dims))
        })
        .collect();
    let mut passed = 0;
    let mut errors = 0;
    let mut worst: Option<f64> = None;
    let mut violations = Vec::new();
    for (trial, (seed, res)) in results.into_iter().enumerate() {
        match res {
            Ok(checks) => {
                let mut failing: Option<Check> = None;
                for ch in checks.0 {
                    if ch.margin.is_finite() {
                        worst = Some(worst.map_or(ch.margin, |w| w.min(ch.margin)));
                    }
                    let bad = ch.margin.is_nan() || ch.margin < -config.slack;
                    if bad
                        && failing
                            .as_ref()
                            .is_none_or(|f| ch.margin.is_nan() || ch.margin < f.margin)
                    {
                        failing = Some(ch);
                    }
                }
                match failing {
                    None => passed += 1,
                    Some(ch) => violations.push(Violation {
                        trial,
                        seed,
                        check: Some(ch),
                        error: None,
                    }),
                }
            }
            Err(e) => {
                errors += 1;
                violations.push(Violation {
                    trial,
                    seed,
                    check: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    let trials = config.trials;
    let ok = errors == 0 && passed as f64 >= suite.required * trials as f64;
    SuiteOutcome {
        name: suite.name.to_string(),
        claim: suite.claim.to_string(),
        trials,
        passed,
        failed: trials - passed - errors,
        errors,
        required_fraction: suite.required,
        worst_margin: worst,
        ok,
        violations,
    }
}

pub fn run_suites(config: &SuiteConfig) -> Result<SuiteReport> {
    config.validate()?;
    let suites: Vec<SuiteOutcome> = config
        .selected()
        .into_iter()
        .map(|s| run_suite(s, config))
        .collect();
    Ok(SuiteReport {
        seed: config.seed,
        trials: config.trials,
        dims: config.dims,
        slack: config.slack,
        ok: suites.iter().all(|s| s.ok),
        suites,
    })
}

// ---------------------------------------------------------------------------
// Random instances

/// A dimension in the configured range, clipped to `[lo, cap]`.
fn pick(rng: &mut Sampler, dims: (usize, usize), lo: usize, cap: usize) -> usize {
    let a = dims.0.max(lo).min(cap);
    let b = dims.1.min(cap).max(a);
    rng.int(a, b)
}

fn coin(rng: &mut Sampler) -> bool {
    rng.uniform() < 0.5
}

fn seed_from(rng: &mut Sampler) -> u64 {
    rng.rng().gen()
}

fn distribution(rng: &mut Sampler, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| 0.05 + rng.uniform()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

fn question_distribution(rng: &mut Sampler, q: usize, symmetric: bool) -> Vec<f64> {
    let mut nu = distribution(rng, q * q);
    if symmetric {
        for x in 0..q {
            for y in 0..x {
                let m = 0.5 * (nu[x * q + y] + nu[y * q + x]);
                nu[x * q + y] = m;
                nu[y * q + x] = m;
            }
        }
    }
    nu
}

/// Random game with `q` questions and `k` answers each. Identical questions
/// demand identical answers; other pairs are won on a random predicate,
/// mirrored when `symmetric`.
fn synchronous_game(rng: &mut Sampler, q: usize, k: usize, symmetric: bool) -> Result<Game> {
    let table: Vec<bool> = (0..q * q * k * k).map(|_| coin(rng)).collect();
    let nu = question_distribution(rng, q, symmetric);
    let at = |x: usize, y: usize, a: usize, b: usize| table[((x * q + y) * k + a) * k + b];
    Game::from_tables(&vec![k; q], nu, |x, y, a, b| {
        if x == y {
            a == b
        } else if symmetric && x > y {
            at(y, x, b, a)
        } else {
            at(x, y, a, b)
        }
    })
}

fn mix_povm(a: &[CMatrix], b: &[CMatrix], t: f64) -> Vec<CMatrix> {
    a.iter()
        .zip(b)
        .map(|(x, y)| x * c(1.0 - t) + y * c(t))
        .collect()
}

/// Move every measurement towards a random POVM by a random amount, mostly small.
fn perturb_family(rng: &mut Sampler, f: &Family) -> Family {
    f.iter()
        .map(|ops| {
            let r = rng.povm(ops[0].nrows(), ops.len());
            let t = rng.uniform().powi(3);
            mix_povm(ops, &r, t)
        })
        .collect()
}

/// Either a fully random strategy (random state, random POVMs, unequal local
/// dimensions) or a nearly synchronous one built from a perturbed PVM family
/// on a perturbed maximally entangled state.
fn random_strategy(rng: &mut Sampler, d: usize, q: usize, k: usize) -> Result<BipartiteStrategy> {
    if coin(rng) {
        let db = rng.int(1, d + 1);
        let psi = rng.haar_state(d * db);
        let a = (0..q).map(|_| rng.povm(d, k)).collect();
        let b = (0..q).map(|_| rng.povm(db, k)).collect();
        BipartiteStrategy::new(d, db, psi, a, b)
    } else {
        let eta = 0.1 * rng.uniform().powi(2);
        let a: Family = (0..q).map(|_| rng.perturbed_pvm(d, k, eta)).collect();
        let b = perturb_family(rng, &strategies::transpose_family(&a));
        let noise = 0.3 * rng.uniform().powi(2);
        let psi = linalg::max_entangled(d) + rng.gaussian_vector(d * d) * c(noise / d as f64);
        let norm = psi.norm();
        BipartiteStrategy::new(d, d, psi / c(norm), a, b)
    }
}

fn random_code(rng: &mut Sampler, k: usize, n: usize) -> CodeF2 {
    loop {
        let rows: Vec<Vec<u8>> = (0..k)
            .map(|_| (0..n).map(|_| coin(rng) as u8).collect())
            .collect();
        if let Ok(code) = CodeF2::from_rows(&rows) {
            return code;
        }
    }
}

fn projection_of_rank(rng: &mut Sampler, d: usize, r: usize) -> CMatrix {
    if r == 0 {
        return linalg::zeros(d, d);
    }
    let q = rng.random_isometry(d, r);
    &q * q.adjoint()
}

// ---------------------------------------------------------------------------
// Games and strategies

fn value_dsync(rng: &mut Sampler, dims: (usize, usize)) -> Result<Checks> {
    let (q, k) = (rng.int(2, 4), rng.int(2, 3));
    let d = pick(rng, dims, 1, 6);
    let symmetric = coin(rng);
    let game = synchronous_game(rng, q, k, symmetric)?;
    let beta = game.analyze_synchronicity().beta;
    let corr = random_strategy(rng, d, q, k)?.correlation();
    let omega = game.winning_probability(&corr)?;
    let ds = strategies::dsync(&corr, &game.nu_a())?;
    let mut ch = Checks::default();
    ch.le("ω ≤ 1 − β·dsync", omega, 1.0 - beta * ds);
    Ok(ch)
}

fn beta_synchronised(rng: &mut Sampler, dims: (usize, usize)) -> Result<Checks> {
    let (q, k) = (rng.int(2, 4), rng.int(2, 3));
    let d = pick(rng, dims, 1, 6);
    let ideal = BipartiteStrategy::maximally_entangled((0..q).map(|_| rng.pvm(d, k)).collect())?;
    let perfect = ideal.correlation();
    let nu = question_distribution(rng, q, true);
    let game = Game::from_tables(&vec![k; q], nu, |x, y, a, b| {
        perfect.get(x, y, a, b) > 1e-12
    })?;
    let beta = rng.range(0.05, 0.95);
    let synced = game.beta_synchronise(beta)?;
    let other = random_strategy(rng, d, q, k)?.correlation();
    let gap = |g: &Game| -> Result<f64> {
        Ok((g.winning_probability(&perfect)? - g.winning_probability(&other)?).abs())
    };
    let mut ch = Checks::default();
    ch.le(
        "value change bounded through the synchronised game",
        gap(&game)?,
        gap(&synced)? / (1.0 - beta),
    );
    Ok(ch)
}

fn symmetric_dsync(rng: &mut Sampler, dims: (usize, usize)) -> Result<Checks> {
    let (q, k) = (rng.int(2, 4), rng.int(2, 3));
    let d = pick(rng, dims, 1, 6);
    let s = random_strategy(rng, d, q, k)?;
    let nu = distribution(rng, q);
    let ds = strategies::dsync(&s.correlation(), &nu)?;
    let (sa, sb) = strategies::associated_symmetric(&s)?;
    let da = strategies::dsync(&sa.correlation(), &nu)?;
    let db = strategies::dsync(&sb.correlation(), &nu)?;
    let mut ch = Checks::default();
    ch.le(
        "1 − dsync ≤ geometric mean",
        1.0 - ds,
        (1.0 - da).max(0.0).sqrt() * (1.0 - db).max(0.0).sqrt(),
    );
    ch.le("dsync(S_A) ≤ 2 dsync(S)", da, 2.0 * ds);
    ch.le("dsync(S_B) ≤ 2 dsync(S)", db, 2.0 * ds);
    Ok(ch)
}

fn replacement(rng: &mut Sampler, dims: (usize, usize)) -> Result<Checks> {
    let (q, k) = (rng.int(2, 3), rng.int(2, 3));
    let d = pick(rng, dims, 1, 6);
    let game = synchronous_game(rng, q, k, true)?;
    let s = random_strategy(rng, d, q, k)?;
    let (a_hat, b_hat) = if coin(rng) {
        (perturb_family(rng, s.a()), perturb_family(rng, s.b()))
    } else {
        let nu_a = game.nu_a();
        (
            rounding::round_family(s.a(), &s.rho_a(), &nu_a)?.0,
            rounding::round_family(s.b(), &s.rho_b(), &nu_a)?.0,
        )
    };
    let rb = rounding::replacement_bound(&s, &a_hat, &b_hat, &game)?;
    let mut ch = Checks::default();
    ch.le("correlation shift ≤ 12δ + 4√γ_A + 4√γ_B", rb.lhs, rb.rhs);
    Ok(ch)
}

fn holder(rng: &mut Sampler, dims: (usize, usize)) -> Result<Checks> {
    let (q, k) = (rng.int(2, 4), rng.int(2, 3));
    let d = pick(rng, dims, 1, 6);
    let game = {
        let sym = coin(rng);
        synchronous_game(rng, q, k, sym)?
    };
    let s = random_strategy(rng, d, q, k)?;
    let t = if coin(rng) {
        random_strategy(rng, d, q, k)?
    } else {
        BipartiteStrategy::new(
            s.dim_a(),
            s.dim_b(),
            s.psi().clone(),
            perturb_family(rng, s.a()),
            perturb_family(rng, s.b()),
        )?
    };
    let (c1, c2) = (s.correlation(), t.correlation());
    let diff = (game.winning_probability(&c1)? - game.winning_probability(&c2)?).abs();
    let mut ch = Checks::default();
    ch.le(
        "|ω − ω′| ≤ E Σ|C − C′|",
        diff,
        c1.distance(&c2, game.nu_table())?,
    );
    Ok(ch)
}

fn incomplete_povm(rng: &mut Sampler, d: usize, m: usize) -> Vec<CMatrix> {
    let mut full = if coin(rng) {
        rng.pvm(d, m + 1)
    } else {
        rng.povm(d, m + 1)
    };
    full.truncate(m);
    full
}

fn povm_pair_opnorm(rng: &mut Sampler, dims: (usize, usize)) -> Result<Checks> {
    let d = pick(rng, dims, 2, 16);
    let m = rng.int(1, 4);
    let a = incomplete_povm(rng, d, m);
    let b = incomplete_povm(rng, d, m);
    let mut ch = Checks::default();
    ch.le("‖Σ(A − Ã)²‖ ≤ 4", rounding::povm_pair_opnorm(&a, &b)?, 4.0);
    Ok(ch)
}

fn correlation_normalized(rng: &mut Sampler, dims: (usize, usize)) -> Result<Checks> {
    let (q, k) = (rng.int(1, 4), rng.int(1, 4));
    let d = pick(rng, dims, 1, 6);
    let corr = random_strategy(rng, d, q, k)?.correlation();
    let mut ch = Checks::default();
    ch.ge(
        "smallest entry",
        corr.values().iter().copied().fold(f64::INFINITY, f64::min),
        0.0,
    );
    let mut worst: f64 = 0.0;
    for x in 0..q {
        for y in 0..q {
            let total: f64 = (0..k)
                .flat_map(|a| (0..k).map(move |b| (a, b)))
                .map(|(a, b)| corr.get(x, y, a, b))
                .sum();
            worst = worst.max((total - 1.0).abs());
        }
    }
    ch.le("normalization error", worst, 1e-10);
    Ok(ch)
}

fn polynomial_affine(rng: &mut Sampler, dims: (usize, usize)) -> Result<Checks> {
    let (q, k) = (rng.int(2, 3), rng.int(2, 3));
    let d = pick(rng, dims, 1, 4);
    let g1 = {
        let sym = coin(rng);
        synchronous_game(rng, q, k, sym)?
    };
    let g2 = g1.with_nu(question_distribution(rng, q, false))?;
    let t = rng.uniform();
    let mixed: Vec<f64> = g1
        .nu_table()
        .iter()
        .zip(g2.nu_table())
        .map(|(a, b)| t * a + (1.0 - t) * b)
        .collect();
    let gm = g1.with_nu(mixed)?;
    let s = random_strategy(rng, d, q, k)?;
    let expect =
        games::game_polynomial(&g1, &s)? * c(t) + games::game_polynomial(&g2, &s)? * c(1.0 - t);
    let mut ch = Checks::default();
    ch.le(
        "mixture error",
        linalg::max_abs(&(games::game_polynomial(&gm, &s)? - expect)),
        1e-10,
    );
    Ok(ch)
}

fn gap_unitary(rng: &mut Sampler, dims: (usize, usize)) -> Result<Checks> {
    let (q, k) = (rng.int(2, 3), rng.int(2, 3));
    let d = pick(rng, dims, 1, 4);
    let game = synchronous_game(rng, q, k, true)?;
    let t = games::game_polynomial(&game, &random_strategy(rng, d, q, k)?)?;
    let u = rng.haar_unitary(t.nrows());
    let rotated = linalg::hermitian_part(&(&u * &t * u.adjoint()));
    let mut ch = Checks::default();
    ch.le(
        "gap change",
        (games::spectral_gap(&t)? - games::spectral_gap(&rotated)?).abs(),
        1e-9,
    );
    Ok(ch)
}

fn gns_correlation(rng: &mut Sampler, dims: (usize, usize)) -> Result<Checks> {
    let (q, k) = (rng.int(1, 3), rng.int(2, 3));
    let nblocks = rng.int(1, 3);
    let cap = dims.1.clamp(1, 3);
    let sizes: Vec<usize> = (0..nblocks).map(|_| rng.int(1, cap)).collect();
    let weights = distribution(rng, nblocks);
    let alg = TracialAlgebra::new(sizes.iter().copied().zip(weights).collect())?;
    let pvm = coin(rng);
    let dim = alg.dim();
    let ranges = alg.ranges();
    let mut fam = Family::with_capacity(q);
    for _ in 0..q {
        let mut ops = vec![linalg::zeros(dim, dim); k];
        for (r, &size) in ranges.iter().zip(&sizes) {
            let block = if pvm {
                rng.pvm(size, k)
            } else {
                rng.povm(size, k)
            };
            for (op, b) in ops.iter_mut().zip(&block) {
                op.view_mut((r.start, r.start), (size, size)).copy_from(b);
            }
        }
        fam.push(ops);
    }
    let ts = TracialStrategy::new(alg, fam, pvm)?;
    let direct = ts.correlation();
    let realized = ts.gns_realize().correlation();
    let diff = direct
        .values()
        .iter()
        .zip(realized.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let game = {
        let sym = coin(rng);
        synchronous_game(rng, q, k, sym)?
    };
    let mut ch = Checks::default();
    ch.le("correlation mismatch", diff, 1e-10);
    ch.le(
        "winning probability mismatch",
        (game.winning_probability(&direct)? - game.winning_probability(&realized)?).abs(),
        1e-10,
    );
    Ok(ch)
}

// ---------------------------------------------------------------------------
// Rounding and decomposition

fn rounding_trial(rng: &mut Sampler, dims: (usize, usize)) -> Result<Checks> {
    let d = pick(rng, dims, 2, 8);
    let k = rng.int(2, 4);
    let eta = 0.05 * rng.uniform();
    let povm = rng.perturbed_pvm(d, k, eta);
    let (_, r) = rounding::nearest_pvm(&povm, &(linalg::identity(d) * c(1.0 / d as f64)))?;
    if r.pvm_residual > 1e-10 {
        return Err(Error::BoundViolated(format!(
            "rounded family has projection residual {:e}",
            r.pvm_residual
        )));
    }
    let mut ch = Checks::default();
    ch.le("rounding distance ≤ 9δ", r.defect, r.target);
    Ok(ch)
}

fn projectivize(rng: &mut Sampler, dims: (usize, usize)) -> Result<Checks> {
    let (q, k) = (rng.int(2, 3), rng.int(2, 3));
    let d = pick(rng, dims, 2, 6);
    let eta = 0.05 * rng.uniform();
    let fam: Family = (0..q).map(|_| rng.perturbed_pvm(d, k, eta)).collect();
    let game = synchronous_game(rng, q, k, true)?;
    let me = coin(rng);
    let s = if me {
        BipartiteStrategy::maximally_entangled(fam)?
    } else {
        let psi = linalg::max_entangled(d) + rng.gaussian_vector(d * d) * c(0.3 / d as f64);
        let norm = psi.norm();
        let b = strategies::transpose_family(&fam);
        BipartiteStrategy::new(d, d, psi / c(norm), fam, b)?
    };
    let (_, r) = rounding::projectivize_strategy(&s, &game)?;
    let mut ch = Checks::default();
    if me {
        ch.le("dsync after rounding", r.dsync_after, 1e-10);
    }
    ch.le(
        "correlation shift ≤ 12δ + 4√γ_A + 4√γ_B",
        r.correlation_shift,
        r.bound,
    );
    Ok(ch)
}

fn scan_identity(rng: &mut Sampler, dims: (usize, usize)) -> Result<Checks> {
    let d = pick(rng, dims, 1, 16);
    let rho = if coin(rng) {
        rng.random_density(d)
    } else {
        // few distinct levels, possibly rank deficient
        let levels: Vec<f64> = (0..rng.int(1, 3)).map(|_| rng.uniform()).collect();
        let mut diag: Vec<f64> = (0..d)
            .map(|_| levels[rng.int(0, levels.len() - 1)])
            .collect();
        if diag.iter().all(|&x| x <= 0.0) {
            diag[0] = 1.0;
        }
        let total: f64 = diag.iter().sum();
        diag.iter_mut().for_each(|x| *x /= total);
        let u = rng.haar_unitary(d);
        linalg::hermitian_part(&(&u * linalg::diag_real(&diag) * u.adjoint()))
    };
    let scan = decomposition::spectral_scan(&rho)?;
    let mut ch = Checks::default();
    ch.le(
        "trace-norm reconstruction error",
        decomposition::reconstruction_residual(&rho, &scan),
        1e-10,
    );
    ch.le(
        "weight total error",
        (scan.weights().iter().sum::<f64>() - 1.0).abs(),
        1e-10,
    );
    Ok(ch)
}

fn agreement_game(q: usize, k: usize) -> Result<Game> {
    Game::from_tables(
        &vec![k; q],
        vec![1.0 / (q * q) as f64; q * q],
        |x, y, a, b| x != y || a == b,
    )
}

fn scan_defect(rng: &mut Sampler, dims: (usize, usize)) -> Result<Checks> {
    let d = pick(rng, dims, 2, 8);
    let (q, k) = (rng.int(2, 3), rng.int(2, 3));
    let t = rng.range(0.0, 0.08);
    let s = near_synchronous_strategy(rng, d, q, k, t)?;
    let (_, rep) = decomposition::me_components(&s, &agreement_game(q, k)?)?;
    let mut ch = Checks::default();
    ch.le("averaged defect ≤ √(2δ)", rep.defect, rep.defect_bound);
    ch.le(
        "averaged commutator ≤ 2√(2δ)",
        rep.commutator,
        rep.commutator_bound,
    );
    for l in &rep.levels {
        ch.le("level dsync ≤ commutator/2", l.dsync, 0.5 * l.commutator);
    }
    Ok(ch)
}

fn compressed_dsync(rng: &mut Sampler, dims: (usize, usize)) -> Result<Checks> {
    let d = pick(rng, dims, 2, 8);
    let (q, k) = (rng.int(1, 3), rng.int(2, 3));
    let fam: Family = (0..q).map(|_| rng.pvm(d, k)).collect();
    let r = rng.int(1, d);
    let basis = rng.random_isometry(d, r);
    let nu = distribution(rng, q);
    let gamma = decomposition::commutator_defect(&fam, &basis, &nu);
    let piece =
        BipartiteStrategy::maximally_entangled(decomposition::compress_family(&fam, &basis))?;
    let mut ch = Checks::default();
    ch.le(
        "compressed dsync ≤ γ/2",
        strategies::dsync(&piece.correlation(), &nu)?,
        0.5 * gamma,
    );
    Ok(ch)
}

// ---------------------------------------------------------------------------
// Codes and spectral gaps

fn row_reduced_variant(rng: &mut Sampler, code: &CodeF2) -> Result<CodeF2> {
    let mut rows = code.generator().to_rows();
    let k = rows.len();
    for _ in 0..3 {
        let (i, j) = (rng.int(0, k - 1), rng.int(0, k - 1));
        if i != j {
            let src = rows[j].clone();
            rows[i].iter_mut().zip(src).for_each(|(a, b)| *a ^= b);
        }
    }
    CodeF2::from_rows(&rows)
}

fn qldt_gap(rng: &mut Sampler, _dims: (usize, usize)) -> Result<Checks> {
    let k = rng.int(1, 4);
    let n = rng.int(k, k + 5);
    let code = random_code(rng, k, n);
    let fast = qldt::qldt_gap(&code, GapMethod::Fast)?;
    let dense = qldt::qldt_gap(&code, GapMethod::Dense)?;
    let bell = qldt::qldt_gap(&code, GapMethod::Bell)?;
    let mut ch = Checks::default();
    ch.le("|fast − dense|", (fast - dense).abs(), 1e-9);
    ch.le("|fast − Bell|", (fast - bell).abs(), 1e-9);
    ch.le("|dense − Bell|", (dense - bell).abs(), 1e-9);
    ch.le(
        "Bell-frame off-diagonal residual",
        qldt::bell_frame_residual(&code)?.0,
        1e-10,
    );
    let other = row_reduced_variant(rng, &code)?;
    ch.le(
        "gap change under row operations",
        (qldt::qldt_gap(&other, GapMethod::Fast)? - fast).abs(),
        1e-12,
    );
    Ok(ch)
}

fn spectral_witness(rng: &mut Sampler, _dims: (usize, usize)) -> Result<Checks> {
    let k = rng.int(1, 3);
    let n = rng.int(k, k + 4);
    let code = random_code(rng, k, n);
    let w = dilation::spec_gap_witness(&qldt::qldt_polynomial(&code)?, 1 << k)?;
    let mut ch = Checks::default();
    ch.ge("deviation ≥ 1/(16 + 12√2)", w.deviation, w.bound);
    ch.le(
        "|⟨ψ|T|ψ⟩ − (1 − Δ/2)|",
        (w.omega - w.omega_expected).abs(),
        1e-10,
    );
    Ok(ch)
}

fn top_eigenspace(rng: &mut Sampler, _dims: (usize, usize)) -> Result<Checks> {
    let k = rng.int(1, 2);
    let n = rng.int(k, k + 3);
    let code = random_code(rng, k, n);
    let (game, ideal) = qldt::stabilizer_game(&code)?;
    let t = games::game_polynomial(&game, &ideal)?;
    let aux_dim = rng.int(1, 3);
    let aux = rng.haar_state(aux_dim);
    let eta = 0.05 * rng.uniform();
    let noisy =
        linalg::kron_vec(ideal.psi(), &aux) + rng.gaussian_vector(t.nrows() * aux_dim) * c(eta);
    let norm = noisy.norm();
    let r = dilation::top_eigenspace_closeness(&t, &(noisy / c(norm)), ideal.psi(), aux_dim)?;
    let mut ch = Checks::default();
    ch.le("leak ≤ √((1 − ω)/α)", r.leak, r.leak_bound);
    ch.le(
        "closeness ≤ leak + (1 − overlap)",
        r.closeness,
        r.closeness_bound,
    );
    Ok(ch)
}

// ---------------------------------------------------------------------------
// Dilations

fn schmidt_bound(rng: &mut Sampler, dims: (usize, usize)) -> Result<Checks> {
    let d = pick(rng, dims, 2, 16);
    let psi = rng.haar_state(d * d);
    let phi = if coin(rng) {
        rng.haar_state(d * d)
    } else {
        let t = 10f64.powf(-4.0 * rng.uniform());
        let v = &psi + rng.gaussian_vector(d * d) * c(t / d as f64);
        let norm = v.norm();
        v / c(norm)
    };
    let sd = dilation::schmidt_distance(&psi, &phi, d, d)?;
    let mut ch = Checks::default();
    ch.le("‖λ − μ‖₂ ≤ ‖ψ − φ‖", sd.coefficients, sd.states);
    Ok(ch)
}

fn isometry_estimate(rng: &mut Sampler, dims: (usize, usize)) -> Result<Checks> {
    let rows = pick(rng, dims, 2, 12);
    let cols = rng.int(1, rows);
    let v = rng.random_isometry(rows, cols);
    let p = if coin(rng) {
        let r = rng.int(0, rows);
        projection_of_rank(rng, rows, r)
    } else {
        // a projection whose range nearly contains that of V
        let eta = 0.3 * rng.uniform();
        let extra = rng.int(0, rows - cols);
        let mut basis = linalg::zeros(rows, cols + extra);
        basis.view_mut((0, 0), (rows, cols)).copy_from(&v);
        if extra > 0 {
            basis
                .view_mut((0, cols), (rows, extra))
                .copy_from(&rng.ginibre(rows, extra));
        }
        let q = linalg::polar(&(basis + rng.ginibre(rows, cols + extra) * c(eta)))?.w;
        &q * q.adjoint()
    };
    let mut ch = Checks::default();
    ch.ge(
        "smallest eigenvalue of the difference",
        dilation::isometry_estimate(&v, &p)?,
        0.0,
    );
    Ok(ch)
}

fn dimension_bound(rng: &mut Sampler, dims: (usize, usize)) -> Result<Checks> {
    let m = pick(rng, dims, 1, 6);
    let n = rng.int(1, m);
    let k = rng.int(1, 3);
    let u = rng.haar_unitary(m);
    let mut embed = linalg::zeros(m * k, n);
    for i in 0..n {
        embed[(i * k, i)] = c(1.0);
    }
    let eta = 0.2 * rng.uniform().powi(2);
    let ik = linalg::identity(k);
    let base_a = linalg::kron(&u, &ik) * &embed;
    let base_b = linalg::kron(&u.map(|z| z.conj()), &ik) * &embed;
    let v_a = linalg::polar(&(&base_a + rng.ginibre(m * k, n) * c(eta)))?.w;
    let v_b = linalg::polar(&(&base_b + rng.ginibre(m * k, n) * c(eta)))?.w;
    let mut aux = CVector::zeros(k * k);
    aux[0] = c(1.0);
    let aux = aux + rng.gaussian_vector(k * k) * c(eta);
    let aux_norm = aux.norm();
    let target = dilation::interleave(
        &linalg::kron_vec(&linalg::max_entangled(m), &(aux / c(aux_norm))),
        m,
        m,
        k,
        k,
    )?;
    let embedded = linalg::kron(&v_a, &v_b) * linalg::max_entangled(n);
    let eps = (embedded - target).norm();
    let margin = n as f64 - (1.0 - eps * eps) * m as f64;
    if dilation::dimension_bound_holds(n, m, eps) != (margin >= -1e-12) {
        return Err(Error::BoundViolated(
            "dimension_bound_holds disagrees with the direct comparison".into(),
        ));
    }
    let mut ch = Checks::default();
    ch.ge(
        "dim H ≥ (1 − ε²) dim H̃",
        n as f64,
        (1.0 - eps * eps) * m as f64,
    );
    Ok(ch)
}

/// A projection `P` in `M ⊗ M_s` (`M` a direct sum of matrix blocks) and a
/// partial isometry `w = P w I_M`, with all traces computed block by block.
fn trace_sandwich(rng: &mut Sampler, dims: (usize, usize)) -> Result<Checks> {
    let nblocks = rng.int(1, 3);
    let cap = dims.1.clamp(1, 3);
    let weights = distribution(rng, nblocks);
    let slots = rng.int(1, 3);
    let (mut trace_p, mut lost_m, mut lost_p) = (0.0, 0.0, 0.0);
    for &w in &weights {
        let d = rng.int(1, cap);
        let big = d * slots;
        let scale = w / d as f64;
        let rank = rng.int(0, big);
        let p = projection_of_rank(rng, big, rank);
        // corner: slot 0 of every basis vector of the block
        let mut corner = linalg::zeros(big, big);
        for i in 0..d {
            corner[(i * slots, i * slots)] = c(1.0);
        }
        let kept = rng.int(0, d);
        let mut cut = linalg::zeros(big, big);
        for i in 0..kept {
            cut[(i * slots, i * slots)] = c(1.0);
        }
        let x = if coin(rng) {
            rng.ginibre(big, big) * &corner
        } else {
            rng.ginibre(big, big) * &cut
        };
        let wop = linalg::polar(&(&p * x * &corner))?.w;
        trace_p += scale * rank as f64;
        lost_m += scale * linalg::trace(&(&corner - wop.adjoint() * &wop)).re;
        lost_p += scale * linalg::trace(&(&p - &wop * wop.adjoint())).re;
    }
    let mut ch = Checks::default();
    if trace_p <= 0.0 {
        return Ok(ch);
    }
    let res = VnaResiduals {
        op_residual: 0.0,
        p1: lost_p / trace_p,
        p2: lost_m,
        trace_p,
    };
    let s = TraceSandwich::new(&res);
    if s.delta < 1.0 {
        ch.sandwich(&s);
    }
    Ok(ch)
}

fn pme_instance(rng: &mut Sampler, max_eta: f64) -> Result<dilation::PmeInstance> {
    let seed = seed_from(rng);
    let (m, k, q) = (rng.int(2, 3), rng.int(1, 2), rng.int(2, 3));
    let eta = max_eta * 10f64.powf(-2.0 * rng.uniform());
    let pad = rng.int(0, 1);
    dilation::pme_instance(seed, m, k, q, 2, eta, pad)
}

fn strong_residual(rng: &mut Sampler, _dims: (usize, usize)) -> Result<Checks> {
    let inst = pme_instance(rng, 0.1)?;
    let (s, ideal) = if coin(rng) {
        let n = rng.int(2, 4);
        (
            dilation::split_strategy(&inst.strategy, n)?,
            dilation::split_strategy(&inst.ideal, n)?,
        )
    } else {
        (inst.strategy, inst.ideal)
    };
    let w: &DilationWitness = &inst.witness;
    let triple = dilation::dilation_residuals(&s, &ideal, w)?;
    let mut ch = Checks::default();
    ch.le(
        "joint residual ≤ 3·max residual",
        dilation::strong_residual(&s, &ideal, w)?,
        3.0 * triple.max(),
    );
    Ok(ch)
}

fn aux_rounding(rng: &mut Sampler, _dims: (usize, usize)) -> Result<Checks> {
    let n = rng.int(1, 4);
    let m = rng.int(1, 12);
    let lambda = vec![1.0 / (m as f64).sqrt(); m];
    let r = rng.int(1, 6);
    let mut mu: Vec<f64> = if coin(rng) {
        (0..r).map(|_| rng.uniform()).collect()
    } else {
        (0..r).map(|_| 1.0 + 0.1 * rng.uniform()).collect()
    };
    let norm = mu.iter().map(|x| x * x).sum::<f64>().sqrt();
    mu.iter_mut().for_each(|x| *x /= norm);
    let mut kappa: Vec<f64> = mu
        .iter()
        .flat_map(|&x| std::iter::repeat_n(x / (n as f64).sqrt(), n))
        .collect();
    kappa.sort_by(|a, b| b.total_cmp(a));
    let out = dilation::me_aux_round(&lambda, &kappa, n)?;
    if out.multiplicity % n != 0 {
        return Err(Error::BoundViolated(format!(
            "multiplicity {} is not a multiple of {n}",
            out.multiplicity
        )));
    }
    let (_, best) = dilation::nearest_flat_sequence(&kappa, n);
    let mut ch = Checks::default();
    ch.le(
        "output distance ≤ 2·input distance",
        out.output_distance,
        2.0 * out.input_distance,
    );
    ch.ge(
        "output distance ≥ best flat sequence",
        out.output_distance,
        best,
    );
    ch.le(
        "|‖κ′‖ − 1|",
        (out.coefficients.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs(),
        1e-12,
    );
    Ok(ch)
}

fn partial_isometry(rng: &mut Sampler, _dims: (usize, usize)) -> Result<Checks> {
    let inst = pme_instance(rng, 2e-3)?;
    let p = dilation::vna_from_dilation(&inst.strategy, &inst.ideal, &inst.witness)?
        .report
        .partial;
    let mut ch = Checks::default();
    ch.le("state estimate", p.state, p.state_bound);
    ch.le("measurement estimate", p.measurement, p.measurement_bound);
    ch.le("Alice mass estimate", p.alice_mass, p.alice_mass_bound);
    ch.le("ideal mass estimate", p.ideal_mass, p.ideal_mass_bound);
    if let (Some(x), Some(b)) = (p.cross, p.cross_bound) {
        ch.le("cross estimate", x, b);
    }
    ch.ge("operator inequality for Alice", p.isometry_margin_a, 0.0);
    ch.ge("operator inequality for Bob", p.isometry_margin_b, 0.0);
    Ok(ch)
}

fn to_tracial(rng: &mut Sampler, _dims: (usize, usize)) -> Result<Checks> {
    let inst = pme_instance(rng, 2e-3)?;
    let out = dilation::vna_from_dilation(&inst.strategy, &inst.ideal, &inst.witness)?;
    let r = &out.report;
    let mut ch = Checks::default();
    ch.le(
        "residuals after aux rounding ≤ 3ε",
        r.rounded.max(),
        r.rounded_bound,
    );
    ch.le(
        "aux rounding ≤ 2·input distance",
        r.aux_rounding.output_distance,
        2.0 * r.aux_rounding.input_distance,
    );
    ch.le("tracial residuals ≤ 1700ε²", r.residuals.max(), r.bound);
    ch.sandwich(&r.sandwich);
    for side in dilation::measurement_sides(&out.strategy, &out.ideal, &out.witness)? {
        ch.le("corner side", side.corner_side, side.corner_bound);
        ch.le(
            "projection side",
            side.projection_side,
            side.projection_bound,
        );
    }
    Ok(ch)
}

fn vna_roundtrip(rng: &mut Sampler, _dims: (usize, usize)) -> Result<Checks> {
    let inst = pme_instance(rng, 2e-3)?;
    let r = dilation::roundtrip(&inst)?;
    let mut ch = Checks::default();
    ch.le(
        "converted back ≤ (4 + √2)√ε",
        r.back.residuals.max(),
        r.back.bound,
    );
    ch.sandwich(&r.back.sandwich);
    ch.le("roundtrip ≤ 1700(4 + √2)²ε", r.final_residual, r.bound);
    Ok(ch)
}

fn kappa_monotone(rng: &mut Sampler, _dims: (usize, usize)) -> Result<Checks> {
    let (scale, power, ratio) = (
        rng.range(0.1, 10.0),
        rng.range(0.1, 1.0),
        rng.range(1.0, 4.0),
    );
    let kappa = move |x: f64| scale * x.max(0.0).powf(power);
    let mut e = [rng.uniform(), rng.uniform()];
    let mut d = [rng.uniform(), rng.uniform()];
    e.sort_by(f64::total_cmp);
    d.sort_by(f64::total_cmp);
    let k = |eps: f64, delta: f64| dilation::kappa_prime(kappa, ratio, eps, delta);
    let mut ch = Checks::default();
    ch.le("κ′ grows with ε", k(e[0], d[0]), k(e[1], d[0]));
    ch.le("κ′ grows with δ", k(e[0], d[0]), k(e[0], d[1]));
    Ok(ch)
}
