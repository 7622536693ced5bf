//! Conversions between Hilbert space dilations and tracial dilations of
//! maximally entangled strategies.
//!
//! Going to the tracial picture first replaces the auxiliary state by a
//! maximally entangled one ([`me_aux_round`]), then compresses the isometries
//! onto its support ([`partial_isometrize`]); the adjoint of Alice's compressed
//! isometry is the tracial witness. Going back completes `W*` to an isometry
//! using fresh slots of the ampliation and matches the two GNS vectors of the
//! same functional with a unitary on Bob's side.

use serde::Serialize;

use super::vna::{vna_residuals, AmpliatedSpace, TraceSandwich, VnaResiduals, VnaWitness};
use super::{dilation_residuals, marginals, DilationWitness, Frame, ResidualTriple};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, Sampler};
use crate::strategies::{BipartiteStrategy, TracialAlgebra, TracialStrategy};

/// Entries of a Schmidt sequence at or below this count as zero.
const NONZERO_TOL: f64 = 1e-12;
/// Slack when deciding that a state is maximally entangled.
const ME_TOL: f64 = 1e-9;

/// Constant of the dilation → tracial direction (rounded `(24 + 12√2)²`).
pub const TO_VNA_CONSTANT: f64 = 1700.0;

/// Constant of the tracial → dilation direction.
pub fn to_dilation_constant() -> f64 {
    4.0 + 2f64.sqrt()
}

/// Result of rounding a Schmidt sequence to a maximally entangled one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuxRounding {
    /// The rounded sequence: one nonzero value with multiplicity divisible
    /// by `n`.
    pub coefficients: Vec<f64>,
    pub multiplicity: usize,
    /// `‖λ − κ‖₂`.
    pub input_distance: f64,
    /// `‖κ′ − κ‖₂`, at most twice the input distance.
    pub output_distance: f64,
}

fn padded(v: &[f64], len: usize) -> Vec<f64> {
    let mut out = v.to_vec();
    out.resize(len, 0.0);
    out
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn check_sequence(v: &[f64], name: &str) -> Result<()> {
    if v.iter().any(|&x| x.is_nan() || x < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "{name} has a negative or NaN entry"
        )));
    }
    if v.windows(2).any(|w| w[1] > w[0] + NONZERO_TOL) {
        return Err(Error::InvalidParameter(format!(
            "{name} is not in descending order"
        )));
    }
    Ok(())
}

/// Round `κ` (the Schmidt coefficients of `ψ̃ ⊗ aux`) to the Schmidt
/// coefficients of `ψ̃ ⊗ aux′` with `aux′` maximally entangled, given the
/// Schmidt coefficients `λ` of a maximally entangled state close to `ψ̃ ⊗ aux`
/// and `n = dim H̃_A`.
///
/// With `m` nonzero entries in `λ`: if `m ≥ n`, keep `1/√m` on the first
/// `⌊m/n⌋n` entries and on the following block of `n` entries when `κ` is at
/// least `1/(2√m)` there (on average, since `κ` is constant on that block),
/// then normalise. Otherwise take `1/√n` on `n` entries.
pub fn me_aux_round(lambda: &[f64], kappa: &[f64], n: usize) -> Result<AuxRounding> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "ideal dimension must be positive".into(),
        ));
    }
    check_sequence(lambda, "λ")?;
    check_sequence(kappa, "κ")?;
    let len = lambda.len().max(kappa.len());
    let lam = padded(lambda, len);
    let kap = padded(kappa, len);
    let m = lam.iter().filter(|&&x| x > NONZERO_TOL).count();
    if m == 0 {
        return Err(Error::InvalidParameter("λ has no nonzero entry".into()));
    }
    let coefficients = if m >= n {
        let base = (m / n) * n;
        let level = 1.0 / (m as f64).sqrt();
        let mut out = vec![0.0; len.max(base + n)];
        out[..base].iter_mut().for_each(|x| *x = level);
        let mean = (base..base + n)
            .map(|i| kap.get(i).copied().unwrap_or(0.0))
            .sum::<f64>()
            / n as f64;
        let keep = if mean >= 0.5 * level { base + n } else { base };
        out[base..keep].iter_mut().for_each(|x| *x = level);
        let norm = (keep as f64).sqrt() * level;
        out.iter_mut().for_each(|x| *x /= norm);
        out
    } else {
        let mut out = vec![0.0; len.max(n)];
        out[..n]
            .iter_mut()
            .for_each(|x| *x = 1.0 / (n as f64).sqrt());
        out
    };
    let multiplicity = coefficients.iter().filter(|&&x| x > 0.0).count();
    let kap_out = padded(&kap, coefficients.len());
    Ok(AuxRounding {
        output_distance: l2(&coefficients, &kap_out),
        input_distance: l2(&lam, &kap),
        coefficients,
        multiplicity,
    })
}

/// Nearest valid rounding target by exhaustive search: the flat sequence
/// `1/√(jn)` on `jn` entries minimising the distance to `κ`. Returns `(jn,
/// distance)`.
pub fn nearest_flat_sequence(kappa: &[f64], n: usize) -> (usize, f64) {
    let top = kappa.len().div_ceil(n).max(1);
    (1..=top)
        .map(|j| {
            let len = (j * n).max(kappa.len());
            let v = 1.0 / ((j * n) as f64).sqrt();
            let flat: Vec<f64> = (0..len).map(|i| if i < j * n { v } else { 0.0 }).collect();
            (j * n, l2(&flat, &padded(kappa, len)))
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one candidate")
}

/// Smallest eigenvalue of `2(V − PV)*(V − PV) − (V − W)*(V − W)` where `W` is
/// the polar part of `PV`; never negative.
pub fn isometry_estimate(v: &CMatrix, p: &CMatrix) -> Result<f64> {
    let pv = p * v;
    let w = linalg::polar(&pv)?.w;
    let d1 = v - &pv;
    let d2 = v - &w;
    let diff = (d1.adjoint() * &d1) * c(2.0) - d2.adjoint() * &d2;
    linalg::min_eigenvalue(&linalg::hermitian_part(&diff))
}

/// The estimates met by the compressed isometries, each with its constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartialIsometryReport {
    /// Larger of the input state and Alice residuals.
    pub epsilon: f64,
    pub state: f64,
    pub state_bound: f64,
    pub measurement: f64,
    pub measurement_bound: f64,
    /// `1 − ‖(V′_A ⊗ I)ψ‖²`.
    pub alice_mass: f64,
    pub alice_mass_bound: f64,
    /// `1 − ‖(V′_A* ⊗ I)(ψ̃ ⊗ aux)‖²`.
    pub ideal_mass: f64,
    pub ideal_mass_bound: f64,
    /// `‖(I ⊗ V′_B)ψ − (V′_A* ⊗ I)(ψ̃ ⊗ aux)‖`, when requested.
    pub cross: Option<f64>,
    pub cross_bound: Option<f64>,
    /// Operator inequality margins for the two compressions.
    pub isometry_margin_a: f64,
    pub isometry_margin_b: f64,
}

impl PartialIsometryReport {
    pub fn holds(&self, slack: f64) -> bool {
        let cross = match (self.cross, self.cross_bound) {
            (Some(x), Some(b)) => x <= b + slack,
            _ => true,
        };
        self.state <= self.state_bound + slack
            && self.measurement <= self.measurement_bound + slack
            && self.alice_mass <= self.alice_mass_bound + slack
            && self.ideal_mass <= self.ideal_mass_bound + slack
            && cross
            && self.isometry_margin_a >= -1e-10
            && self.isometry_margin_b >= -1e-10
    }
}

#[derive(Debug, Clone)]
pub struct PartialIsometries {
    pub v_a: CMatrix,
    pub v_b: CMatrix,
    pub report: PartialIsometryReport,
}

/// Whether `Ψ` (as a coefficient matrix) has equal nonzero singular values.
fn is_flat(m: &CMatrix) -> Result<bool> {
    let sv = linalg::singular_values(m)?;
    let nz: Vec<f64> = sv.into_iter().filter(|&x| x > NONZERO_TOL).collect();
    let level = 1.0 / (nz.len() as f64).sqrt();
    Ok(!nz.is_empty() && nz.iter().all(|x| (x - level).abs() <= ME_TOL))
}

/// Whether Alice's reduced state is maximally mixed.
fn alice_maximally_mixed(s: &BipartiteStrategy) -> bool {
    let rho = s.rho_a();
    let n = s.dim_a();
    linalg::max_abs(&(rho - linalg::identity(n) * c(1.0 / n as f64))) <= ME_TOL
}

fn check_projection(p: &CMatrix, dim: usize, name: &str) -> Result<()> {
    if p.shape() != (dim, dim) {
        return Err(Error::DimensionMismatch(format!(
            "{name} should be {dim}x{dim}"
        )));
    }
    let d = linalg::projection_defect(p);
    if d > 1e-10 {
        return Err(Error::InvalidParameter(format!(
            "{name} is not a projection (defect {d:e})"
        )));
    }
    Ok(())
}

/// Compress `V_A`, `V_B` onto the ranges of `P_A`, `P_B` and take polar parts.
///
/// `aux` is the `k_A × k_B` coefficient matrix of an auxiliary state supported
/// in the ranges of the projections. With `moreover` set, `ψ̃ ⊗ aux` must be
/// maximally entangled and the cross estimate is computed too.
#[allow(clippy::too_many_arguments)]
pub fn partial_isometrize(
    v_a: &CMatrix,
    v_b: &CMatrix,
    p_a: &CMatrix,
    p_b: &CMatrix,
    s: &BipartiteStrategy,
    ideal: &BipartiteStrategy,
    aux: &CMatrix,
    nu_a: &[f64],
    moreover: bool,
) -> Result<PartialIsometries> {
    let frame = Frame::new(s, ideal)?;
    frame.check_maps(v_a, v_b, aux)?;
    if nu_a.len() != s.a().len() {
        return Err(Error::DimensionMismatch(
            "marginal does not match the question set".into(),
        ));
    }
    check_projection(p_a, v_a.nrows(), "P_A")?;
    check_projection(p_b, v_b.nrows(), "P_B")?;
    if !alice_maximally_mixed(s) {
        return Err(Error::InvalidParameter(
            "the strategy's state is not maximally entangled".into(),
        ));
    }
    let eps = frame
        .state_residual(v_a, v_b, aux)
        .max(frame.alice_residual(v_a, v_b, aux, nu_a));
    let va2 = linalg::polar(&(p_a * v_a))?.w;
    let vb2 = linalg::polar(&(p_b * v_b))?.w;
    let z = linalg::kron(&frame.tpsi, aux);
    let cross = if moreover {
        if !is_flat(&z)? {
            return Err(Error::InvalidParameter(
                "ψ̃ ⊗ aux is not maximally entangled".into(),
            ));
        }
        Some((&frame.psi * vb2.transpose() - va2.adjoint() * &z).norm())
    } else {
        None
    };
    let r2 = 2f64.sqrt();
    let report = PartialIsometryReport {
        epsilon: eps,
        state: frame.state_residual(&va2, &vb2, aux),
        state_bound: (1.0 + 2.0 * r2) * eps,
        measurement: frame.alice_residual(&va2, &vb2, aux, nu_a),
        measurement_bound: (1.0 + 4.0 * r2) * eps,
        alice_mass: 1.0 - (&va2 * &frame.psi).norm_squared(),
        alice_mass_bound: 4.0 * eps * eps,
        ideal_mass: 1.0 - (va2.adjoint() * &z).norm_squared(),
        ideal_mass_bound: eps * eps,
        cross,
        cross_bound: cross.map(|_| 7.0 * eps),
        isometry_margin_a: isometry_estimate(v_a, p_a)?,
        isometry_margin_b: isometry_estimate(v_b, p_b)?,
    };
    Ok(PartialIsometries {
        v_a: va2,
        v_b: vb2,
        report,
    })
}

/// Report of the dilation → tracial conversion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToVnaReport {
    pub input: ResidualTriple,
    pub epsilon: f64,
    pub aux_rounding: AuxRounding,
    /// Residuals after replacing the auxiliary state; at most `3ε`.
    pub rounded: ResidualTriple,
    pub rounded_bound: f64,
    pub aux_rank: usize,
    pub partial: PartialIsometryReport,
    pub residuals: VnaResiduals,
    pub sandwich: TraceSandwich,
    /// `1700 ε²`.
    pub bound: f64,
}

impl ToVnaReport {
    pub fn holds(&self, slack: f64) -> bool {
        self.rounded.max() <= self.rounded_bound + slack
            && self.aux_rounding.output_distance <= 2.0 * self.aux_rounding.input_distance + slack
            && self.partial.holds(slack)
            && self.residuals.max() <= self.bound + slack
            && self.sandwich.holds(slack)
    }
}

#[derive(Debug, Clone)]
pub struct ToVna {
    pub witness: VnaWitness,
    pub strategy: TracialStrategy,
    pub ideal: TracialStrategy,
    pub report: ToVnaReport,
}

fn tracial_of(s: &BipartiteStrategy) -> Result<TracialStrategy> {
    TracialStrategy::new(
        TracialAlgebra::full(s.dim_a())?,
        s.a().clone(),
        s.is_projective(),
    )
}

/// Turn a local dilation between maximally entangled strategies into a
/// tracial dilation, certifying residuals `≤ 1700 ε²` with `ε` the largest
/// input residual.
pub fn vna_from_dilation(
    s: &BipartiteStrategy,
    ideal: &BipartiteStrategy,
    wit: &DilationWitness,
) -> Result<ToVna> {
    if !alice_maximally_mixed(s) || !alice_maximally_mixed(ideal) {
        return Err(Error::InvalidParameter(
            "both strategies must be maximally entangled".into(),
        ));
    }
    let frame = Frame::new(s, ideal)?;
    let aux = wit.aux_matrix();
    let input = frame.triple(wit.v_a(), wit.v_b(), &aux, wit.nu())?;
    let eps = input.max();
    let (nu_a, _) = frame.marginals(wit.nu())?;
    let m = ideal.dim_a();
    let n = s.dim_a();

    // Replace aux by a maximally entangled state on part of its Schmidt basis.
    let lambda = linalg::singular_values(&(wit.v_a() * &frame.psi * wit.v_b().transpose()))?;
    let aux_svd = linalg::svd(&aux)?;
    let ideal_sv = linalg::singular_values(&frame.tpsi)?;
    let mut kappa: Vec<f64> = ideal_sv
        .iter()
        .flat_map(|t| aux_svd.sigma.iter().map(move |mu| t * mu))
        .collect();
    kappa.sort_by(|a, b| b.total_cmp(a));
    let rounding = me_aux_round(&lambda, &kappa, m)?;
    let rank = rounding.multiplicity / m;
    if rank == 0 || rank > aux_svd.sigma.len() {
        return Err(Error::InvalidParameter(format!(
            "rounded auxiliary state needs rank {rank}"
        )));
    }
    let qa = aux_svd.u.columns(0, rank).into_owned();
    let qb = aux_svd.v.columns(0, rank).map(|z| z.conj());
    let aux2 = &qa * qb.transpose() * c(1.0 / (rank as f64).sqrt());
    let rounded = frame.triple(wit.v_a(), wit.v_b(), &aux2, wit.nu())?;

    let p_a = linalg::kron(&linalg::identity(m), &(&qa * qa.adjoint()));
    let p_b = linalg::kron(&linalg::identity(ideal.dim_b()), &(&qb * qb.adjoint()));
    let parts = partial_isometrize(
        wit.v_a(),
        wit.v_b(),
        &p_a,
        &p_b,
        s,
        ideal,
        &aux2,
        &nu_a,
        true,
    )?;

    // W = J V′_A* E₀*, with V′_A read in coordinates of H̃ ⊗ K_A′.
    let compress = linalg::kron(&linalg::identity(m), &qa.adjoint());
    let vc = compress * &parts.v_a;
    let corner = m * rank;
    let slots = 2usize.max((4 * n.max(corner)).div_ceil(corner));
    let space = AmpliatedSpace::new(TracialAlgebra::full(m)?, TracialAlgebra::full(rank)?, slots)?;
    let mut j = linalg::zeros(space.dim(), n);
    let coords = (1..slots).flat_map(|sl| (0..corner).map(move |k| k * slots + sl));
    for (col, row) in coords.take(n).enumerate() {
        j[(row, col)] = c(1.0);
    }
    let w = &j * vc.adjoint() * space.corner_embedding().adjoint();
    let witness = VnaWitness::new(space, j, w)?;
    let strategy = tracial_of(s)?;
    let ideal_t = tracial_of(ideal)?;
    let residuals = vna_residuals(&strategy, &ideal_t, &witness, &nu_a)?;
    let report = ToVnaReport {
        input,
        epsilon: eps,
        rounded_bound: 3.0 * eps,
        rounded,
        aux_rank: rank,
        aux_rounding: rounding,
        partial: parts.report,
        sandwich: TraceSandwich::new(&residuals),
        residuals,
        bound: TO_VNA_CONSTANT * eps * eps,
    };
    Ok(ToVna {
        witness,
        strategy,
        ideal: ideal_t,
        report,
    })
}

/// Report of the tracial → dilation conversion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToDilationReport {
    pub input: VnaResiduals,
    pub epsilon: f64,
    pub residuals: ResidualTriple,
    /// `(4 + √2) √ε`.
    pub bound: f64,
    /// Rank of `P − W W*`.
    pub completion_rank: usize,
    /// Dimension of the fresh auxiliary summand.
    pub fresh_dim: usize,
    pub slots: usize,
    /// How far the unitary on Bob's side is from matching the two GNS
    /// vectors exactly.
    pub gns_mismatch: f64,
    pub sandwich: TraceSandwich,
}

impl ToDilationReport {
    pub fn holds(&self, slack: f64) -> bool {
        self.residuals.max() <= self.bound + slack && self.sandwich.holds(slack)
    }
}

#[derive(Debug, Clone)]
pub struct ToDilation {
    pub witness: DilationWitness,
    pub strategy: BipartiteStrategy,
    pub ideal: BipartiteStrategy,
    pub report: ToDilationReport,
}

/// Turn a tracial dilation between maximally entangled strategies into a
/// local dilation for the symmetric distribution `nu` on `X × X`, certifying
/// residuals `≤ (4 + √2) √ε`.
pub fn dilation_from_vna(
    s: &TracialStrategy,
    ideal: &TracialStrategy,
    wit: &VnaWitness,
    nu: &[f64],
) -> Result<ToDilation> {
    if s.algebra().blocks().len() != 1 || ideal.algebra().blocks().len() != 1 {
        return Err(Error::InvalidParameter(
            "both strategies must be maximally entangled".into(),
        ));
    }
    let q = s.a().len();
    let (nu_a, _) = marginals(nu, q, q)?;
    for x in 0..q {
        for y in 0..x {
            if (nu[x * q + y] - nu[y * q + x]).abs() > 1e-12 {
                return Err(Error::InvalidParameter(
                    "question distribution is not symmetric".into(),
                ));
            }
        }
    }
    let input = vna_residuals(s, ideal, wit, &nu_a)?;
    let eps = input.max();
    let (n, m) = (s.algebra().dim(), ideal.algebra().dim());

    // P must sit inside one central block of M₀.
    let labels = wit.space().labels();
    let mut block = None;
    for (k, lab) in labels.iter().enumerate() {
        if wit.j().row(k).norm_squared() > NONZERO_TOL {
            match block {
                None => block = Some(lab.1),
                Some(b) if b != lab.1 => {
                    return Err(Error::InvalidParameter(
                        "P is spread over several central blocks".into(),
                    ))
                }
                _ => {}
            }
        }
    }
    let i0 = block.ok_or_else(|| Error::InvalidParameter("J is zero".into()))?;

    let completion = |w: &VnaWitness| -> Result<(Vec<linalg::CVector>, usize)> {
        let p1 = w.projection() - w.w() * w.w().adjoint();
        let eig = linalg::herm_eig(&linalg::hermitian_part(&p1))?;
        if eig
            .values
            .iter()
            .any(|&v| v.abs() > 1e-8 && (v - 1.0).abs() > 1e-8)
        {
            return Err(Error::InvalidParameter(
                "W is not a partial isometry into P".into(),
            ));
        }
        let vecs: Vec<_> = (0..eig.dim())
            .filter(|&k| eig.values[k] > 0.5)
            .map(|k| eig.vector(k))
            .collect();
        let count = vecs.len();
        Ok((vecs, count))
    };
    let (_, rank1) = completion(wit)?;
    let h1 = rank1.div_ceil(m);
    let aux_alg = wit.space().aux().clone();
    let range = aux_alg.ranges()[i0].clone();
    let d0 = range.len();
    let need = 1 + h1.div_ceil(d0);
    let wit = if need > wit.space().slots() {
        wit.with_slots(need)?
    } else {
        wit.clone()
    };
    let (g, _) = completion(&wit)?;
    let sp = wit.space();
    let slots = sp.slots();
    let fresh: Vec<(usize, usize)> = range
        .clone()
        .flat_map(|p| (1..slots).map(move |sl| (p, sl)))
        .take(h1)
        .collect();

    // V = W* + W₁* with W₁ = Σ_k |g_k⟩⟨f_k|.
    let dim = sp.dim();
    let mut w1_adj = linalg::zeros(dim, dim);
    for (k, gk) in g.iter().enumerate() {
        let (p, sl) = fresh[k % h1];
        let f = sp.index(k / h1, p, sl);
        for col in 0..dim {
            w1_adj[(f, col)] += gk[col].conj();
        }
    }
    let vj = (wit.w().adjoint() + w1_adj) * wit.j();
    let k0 = aux_alg.dim();
    let kk = k0 + h1;
    let weights = sp.weights();
    let mut rows = Vec::with_capacity(m * kk);
    for i in 0..m {
        rows.extend((0..k0).map(|p| sp.index(i, p, 0)));
        rows.extend(fresh.iter().map(|&(p, sl)| sp.index(i, p, sl)));
    }
    let v_a = CMatrix::from_fn(rows.len(), n, |r, col| vj[(rows[r], col)]);
    let root: Vec<f64> = rows.iter().map(|&r| weights[r].sqrt()).collect();

    // Match (V ⊗ V̄)ψ with the normalised compression of the GNS vector of τ^∞.
    let g_mat = &v_a * v_a.adjoint();
    let xi = &g_mat * c(1.0 / (n as f64).sqrt());
    let mut target = &g_mat * linalg::diag_real(&root);
    let tn = target.norm();
    if tn.is_nan() || tn <= 0.0 {
        return Err(Error::InvalidParameter(
            "the completed isometry misses the trace support".into(),
        ));
    }
    target /= c(tn);
    let fit = linalg::svd(&(xi.adjoint() * &target))?;
    let ut = &fit.u * fit.v.adjoint();
    let gns_mismatch = (&xi * &ut - &target).norm();
    let v_b = ut.transpose() * v_a.map(|z| z.conj());

    let mut aux = linalg::zeros(kk, kk);
    let r0 = aux_alg.gns_root();
    aux.view_mut((0, 0), (k0, k0)).copy_from(&r0);
    let witness = DilationWitness::new(v_a, v_b, linalg::vec_of(&aux), kk, kk, nu.to_vec())?;
    let strategy = s.gns_realize();
    let ideal_b = ideal.gns_realize();
    let residuals = dilation_residuals(&strategy, &ideal_b, &witness)?;
    let report = ToDilationReport {
        sandwich: TraceSandwich::new(&input),
        input,
        epsilon: eps,
        residuals,
        bound: to_dilation_constant() * eps.max(0.0).sqrt(),
        completion_rank: g.len(),
        fresh_dim: h1,
        slots,
        gns_mismatch,
    };
    Ok(ToDilation {
        witness,
        strategy,
        ideal: ideal_b,
        report,
    })
}

/// A seeded maximally entangled strategy that is an exact dilation target of
/// an ideal one, with a perturbed witness.
#[derive(Debug, Clone)]
pub struct PmeInstance {
    pub ideal: BipartiteStrategy,
    pub strategy: BipartiteStrategy,
    pub witness: DilationWitness,
}

/// Ideal: random PVMs on `ℂ^m` on the maximally entangled state. Strategy:
/// the ideal rotated by a Haar unitary `ℂ^{mk} → ℂ^m ⊗ ℂ^k`. The witness pads
/// each auxiliary space by `pad` dimensions, adds `eta`-scaled Ginibre noise to
/// the isometries and the auxiliary state, and re-isometrises.
pub fn pme_instance(
    seed: u64,
    m: usize,
    k: usize,
    questions: usize,
    outcomes: usize,
    eta: f64,
    pad: usize,
) -> Result<PmeInstance> {
    if m == 0 || k == 0 || questions == 0 || outcomes == 0 {
        return Err(Error::InvalidParameter(
            "instance sizes must be positive".into(),
        ));
    }
    let mut rng = Sampler::new(seed);
    let n = m * k;
    let ideal_ops: Vec<Vec<CMatrix>> = (0..questions).map(|_| rng.pvm(m, outcomes)).collect();
    let ideal = BipartiteStrategy::maximally_entangled(ideal_ops.clone())?;
    let u = rng.haar_unitary(n);
    let ik = linalg::identity(k);
    let ops = ideal_ops
        .iter()
        .map(|row| {
            row.iter()
                .map(|a| u.adjoint() * linalg::kron(a, &ik) * &u)
                .collect()
        })
        .collect();
    let strategy = BipartiteStrategy::maximally_entangled(ops)?;
    let kp = k + pad;
    let mut embed = linalg::zeros(m * kp, n);
    for i in 0..m {
        for p in 0..k {
            embed[(i * kp + p, i * k + p)] = c(1.0);
        }
    }
    let noisy = |rng: &mut Sampler, base: CMatrix| -> Result<CMatrix> {
        let g = rng.ginibre(base.nrows(), base.ncols());
        Ok(linalg::polar(&(base + g * c(eta)))?.w)
    };
    let v_a = noisy(&mut rng, &embed * &u)?;
    let v_b = noisy(&mut rng, &embed * u.map(|z| z.conj()))?;
    let mut aux = linalg::zeros(kp, kp);
    aux.view_mut((0, 0), (k, k))
        .copy_from(&(ik * c(1.0 / (k as f64).sqrt())));
    let aux = linalg::vec_of(&aux) + rng.gaussian_vector(kp * kp) * c(eta);
    let aux_norm = aux.norm();
    let nu = vec![1.0 / (questions * questions) as f64; questions * questions];
    let witness = DilationWitness::new(v_a, v_b, aux / c(aux_norm), kp, kp, nu)?;
    Ok(PmeInstance {
        ideal,
        strategy,
        witness,
    })
}

/// Dilation → tracial → dilation → tracial on one instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundtripReport {
    pub first: ToVnaReport,
    pub back: ToDilationReport,
    pub last: ToVnaReport,
    /// Largest residual of the first tracial witness.
    pub epsilon: f64,
    /// `1700 (4 + √2)² ε`.
    pub bound: f64,
    pub final_residual: f64,
}

impl RoundtripReport {
    pub fn holds(&self, slack: f64) -> bool {
        self.final_residual <= self.bound + slack
    }
}

pub fn roundtrip(inst: &PmeInstance) -> Result<RoundtripReport> {
    let first = vna_from_dilation(&inst.strategy, &inst.ideal, &inst.witness)?;
    let back = dilation_from_vna(
        &first.strategy,
        &first.ideal,
        &first.witness,
        inst.witness.nu(),
    )?;
    let last = vna_from_dilation(&back.strategy, &back.ideal, &back.witness)?;
    let epsilon = first.report.residuals.max();
    let bound = TO_VNA_CONSTANT * to_dilation_constant().powi(2) * epsilon;
    Ok(RoundtripReport {
        final_residual: last.report.residuals.max(),
        first: first.report,
        back: back.report,
        last: last.report,
        epsilon,
        bound,
    })
}
