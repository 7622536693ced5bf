//! Rounding POVMs to nearby PVMs and the error bounds that come with it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::games::Game;
use crate::linalg::{self, c, CMatrix};
use crate::strategies::{self, BipartiteStrategy, Family};

/// Measurements within this projection defect are returned unchanged.
pub const PVM_EXACT_TOL: f64 = 1e-12;

/// `Σ_a Tr((A_a − P_a)² ρ)`, the squared distance between two measurements in
/// the state-dependent norm `‖X‖²_ρ = Tr(X* X ρ)`.
pub fn weighted_distance(a: &[CMatrix], p: &[CMatrix], rho: &CMatrix) -> f64 {
    a.iter()
        .zip(p)
        .map(|(x, y)| {
            let d = x - y;
            linalg::trace_product(&(d.adjoint() * &d), rho).re
        })
        .sum()
}

/// `1 − Σ_a Tr(A_a² ρ)`; with `ρ = Id/d` this is the per-question
/// synchronicity defect of a measurement.
pub fn self_overlap_defect(a: &[CMatrix], rho: &CMatrix) -> f64 {
    1.0 - a
        .iter()
        .map(|x| linalg::trace_product(&(x * x), rho).re)
        .sum::<f64>()
}

/// Rounding outcome for one question.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuestionRounding {
    /// `Σ_a ‖A_a − P_a‖²_ρ`.
    pub defect: f64,
    /// `1 − Σ_a ‖A_a‖²_ρ`.
    pub delta: f64,
    /// `9 δ`.
    pub target: f64,
    pub within_target: bool,
    /// `max_a ‖P_a² − P_a‖` of the output.
    pub pvm_residual: f64,
}

/// Distinct weights for the outcome-weighted sum `Σ_a w_a A_a`.
fn outcome_weight(a: usize) -> f64 {
    let x = (a + 1) as f64 * std::f64::consts::SQRT_2;
    (a + 1) as f64 + 0.5 * (x - x.floor())
}

/// Round a POVM to a PVM.
///
/// The eigenvectors of `Σ_a w_a A_a` (distinct weights `w_a`) are assigned to
/// the outcome maximising `⟨v|A_a|v⟩`, ties going to the lowest outcome. An
/// outcome that receives no eigenvector gets the zero projection. Inputs that
/// are already projective are returned as they are. `rho` weights the report;
/// pass `Id/d` for the normalised trace.
pub fn nearest_pvm(povm: &[CMatrix], rho: &CMatrix) -> Result<(Vec<CMatrix>, QuestionRounding)> {
    let d = rho.nrows();
    let defect = linalg::povm_defect(povm)?;
    if defect > strategies::VALIDITY_TOL {
        return Err(Error::InvalidStrategy(format!(
            "input is not a POVM (defect {defect:e})"
        )));
    }
    if povm[0].nrows() != d {
        return Err(Error::DimensionMismatch(format!(
            "weight has size {d}, measurement {}",
            povm[0].nrows()
        )));
    }
    let out = if linalg::pvm_residual(povm) <= PVM_EXACT_TOL {
        povm.to_vec()
    } else {
        let mix = povm
            .iter()
            .enumerate()
            .fold(linalg::zeros(d, d), |acc, (a, m)| {
                acc + m * c(outcome_weight(a))
            });
        let eig = linalg::herm_eig(&linalg::hermitian_part(&mix))?;
        let mut out = vec![linalg::zeros(d, d); povm.len()];
        for i in 0..d {
            let v = eig.vector(i);
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (a, m) in povm.iter().enumerate() {
                let s = v.dotc(&(m * &v)).re;
                if s > best_score {
                    best = a;
                    best_score = s;
                }
            }
            out[best] += &v * v.adjoint();
        }
        out
    };
    let dist = weighted_distance(povm, &out, rho);
    let delta = self_overlap_defect(povm, rho);
    let report = QuestionRounding {
        defect: dist,
        delta,
        target: 9.0 * delta,
        within_target: dist <= 9.0 * delta + 1e-12,
        pvm_residual: linalg::pvm_residual(&out),
    };
    Ok((out, report))
}

/// Rounding outcome for a whole family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyRounding {
    pub questions: Vec<QuestionRounding>,
    /// `E_{x∼ν_A} Σ_a ‖A − P‖²_ρ`.
    pub gamma: f64,
}

pub fn round_family(f: &Family, rho: &CMatrix, nu_a: &[f64]) -> Result<(Family, FamilyRounding)> {
    if nu_a.len() != f.len() {
        return Err(Error::Incompatible(
            "marginal does not match the family".into(),
        ));
    }
    let mut out = Vec::with_capacity(f.len());
    let mut questions = Vec::with_capacity(f.len());
    let mut gamma = 0.0;
    for (x, ops) in f.iter().enumerate() {
        let (p, r) = nearest_pvm(ops, rho)?;
        gamma += nu_a[x] * r.defect;
        out.push(p);
        questions.push(r);
    }
    Ok((out, FamilyRounding { questions, gamma }))
}

/// Both sides of the replacement estimate
/// `E_ν Σ |C − Ĉ| ≤ 12 dsync(S; ν_A) + 4√γ_A + 4√γ_B`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplacementBound {
    pub lhs: f64,
    pub rhs: f64,
    pub dsync: f64,
    pub gamma_a: f64,
    pub gamma_b: f64,
}

impl ReplacementBound {
    pub fn holds(&self, slack: f64) -> bool {
        self.lhs <= self.rhs + slack
    }
}

pub fn replacement_bound(
    s: &BipartiteStrategy,
    a_hat: &Family,
    b_hat: &Family,
    game: &Game,
) -> Result<ReplacementBound> {
    s.check_game(game)?;
    let nu_a = game.nu_a();
    let gamma = |f: &Family, g: &Family, rho: &CMatrix| -> f64 {
        f.iter()
            .zip(g)
            .enumerate()
            .map(|(x, (p, q))| nu_a[x] * weighted_distance(p, q, rho))
            .sum()
    };
    let gamma_a = gamma(s.a(), a_hat, &s.rho_a());
    let gamma_b = gamma(s.b(), b_hat, &s.rho_b());
    let hat = BipartiteStrategy::new(
        s.dim_a(),
        s.dim_b(),
        s.psi().clone(),
        a_hat.clone(),
        b_hat.clone(),
    )?;
    let corr = s.correlation();
    let lhs = corr.distance(&hat.correlation(), game.nu_table())?;
    let dsync = strategies::dsync(&corr, &nu_a)?;
    Ok(ReplacementBound {
        lhs,
        rhs: 12.0 * dsync + 4.0 * gamma_a.sqrt() + 4.0 * gamma_b.sqrt(),
        dsync,
        gamma_a,
        gamma_b,
    })
}

/// Result of replacing both measurement families by PVMs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectivizeReport {
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub dsync: f64,
    pub dsync_after: f64,
    /// `E_ν Σ |C − Ĉ|`.
    pub correlation_shift: f64,
    pub bound: f64,
}

/// Round Alice's measurements in the `ρ_A`-norm and Bob's in the `ρ_B`-norm.
pub fn projectivize_strategy(
    s: &BipartiteStrategy,
    game: &Game,
) -> Result<(BipartiteStrategy, ProjectivizeReport)> {
    s.check_game(game)?;
    let nu_a = game.nu_a();
    let (a_hat, _) = round_family(s.a(), &s.rho_a(), &nu_a)?;
    let (b_hat, _) = round_family(s.b(), &s.rho_b(), &nu_a)?;
    let rb = replacement_bound(s, &a_hat, &b_hat, game)?;
    let hat = BipartiteStrategy::new(s.dim_a(), s.dim_b(), s.psi().clone(), a_hat, b_hat)?;
    let dsync_after = strategies::dsync(&hat.correlation(), &nu_a)?;
    let report = ProjectivizeReport {
        gamma_a: rb.gamma_a,
        gamma_b: rb.gamma_b,
        dsync: rb.dsync,
        dsync_after,
        correlation_shift: rb.lhs,
        bound: rb.rhs,
    };
    Ok((hat, report))
}

/// `‖Σ_i (A_i − Â_i)²‖_∞` for two incomplete POVMs; never exceeds 4.
pub fn povm_pair_opnorm(a: &[CMatrix], a_hat: &[CMatrix]) -> Result<f64> {
    if a.len() != a_hat.len() || a.is_empty() {
        return Err(Error::DimensionMismatch(
            "collections must have the same positive length".into(),
        ));
    }
    let d = a[0].nrows();
    for family in [a, a_hat] {
        let mut sum = linalg::zeros(d, d);
        for op in family {
            if op.shape() != (d, d) {
                return Err(Error::DimensionMismatch("operators differ in size".into()));
            }
            linalg::check_hermitian(op)?;
            if linalg::min_eigenvalue(op)? < -strategies::VALIDITY_TOL {
                return Err(Error::InvalidStrategy("operator is not positive".into()));
            }
            sum += op;
        }
        if linalg::max_eigenvalue(&linalg::hermitian_part(&sum))? > 1.0 + strategies::VALIDITY_TOL {
            return Err(Error::InvalidStrategy(
                "operators sum beyond the identity".into(),
            ));
        }
    }
    let total = a
        .iter()
        .zip(a_hat)
        .fold(linalg::zeros(d, d), |acc, (x, y)| {
            let diff = x - y;
            acc + &diff * &diff
        });
    linalg::max_eigenvalue(&linalg::hermitian_part(&total))
}

/// One point of the empirical rounding curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub eta: f64,
    pub dsync: f64,
    pub gamma: f64,
    pub correlation_shift: f64,
}

/// Empirical log-log slopes of `γ` and the correlation shift against
/// `dsync`, fitted by least squares.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentCurve {
    pub points: Vec<CurvePoint>,
    pub gamma_exponent: f64,
    pub shift_exponent: f64,
}

fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Projectivize near-synchronous strategies at each noise level and record
/// how `γ` and the correlation shift scale with `dsync`. Nothing is asserted.
pub fn exponent_curve(
    seed: u64,
    etas: &[f64],
    dim: usize,
    questions: usize,
    outcomes: usize,
) -> Result<ExponentCurve> {
    let mut points = Vec::with_capacity(etas.len());
    for (i, &eta) in etas.iter().enumerate() {
        let mut rng = linalg::Sampler::new(seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let fam: Family = (0..questions)
            .map(|_| rng.perturbed_pvm(dim, outcomes, eta))
            .collect();
        let s = BipartiteStrategy::maximally_entangled(fam)?;
        let nu = vec![1.0 / (questions * questions) as f64; questions * questions];
        let game = Game::from_tables(&vec![outcomes; questions], nu, |_, _, a, b| a == b)?;
        let (_, r) = projectivize_strategy(&s, &game)?;
        points.push(CurvePoint {
            eta,
            dsync: r.dsync,
            gamma: r.gamma_a + r.gamma_b,
            correlation_shift: r.correlation_shift,
        });
    }
    let ds: Vec<f64> = points.iter().map(|p| p.dsync).collect();
    let gs: Vec<f64> = points.iter().map(|p| p.gamma).collect();
    let ss: Vec<f64> = points.iter().map(|p| p.correlation_shift).collect();
    Ok(ExponentCurve {
        gamma_exponent: loglog_slope(&ds, &gs),
        shift_exponent: loglog_slope(&ds, &ss),
        points,
    })
}
