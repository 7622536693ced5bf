//! Spectral-scan decomposition of an almost synchronous projective strategy
//! into maximally entangled pieces, and the orthogonal block partition built
//! on top of it.
//!
//! The scan parameter `λ` runs over the distinct eigenvalues of `ρ_A`, so
//! every integral `∫ f(λ) dμ(λ)` is the finite sum `Σ_levels μ_λ f(λ)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::games::{Correlation, Game};
use crate::linalg::{self, c, CMatrix};
use crate::rounding;
use crate::strategies::{self, BipartiteStrategy, Family};

/// Eigenvalues of `ρ_A` closer than this are one level.
pub const MERGE_TOL: f64 = 1e-11;

/// Slack applied to the membership thresholds of [`lambda_filter`].
pub const FILTER_TOL: f64 = 1e-12;

/// One level `P_λ = χ_{≥λ}(ρ_A)` of the scan.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub threshold: f64,
    /// Orthonormal basis of `H_λ` as the columns of a `d × rank` isometry.
    pub basis: CMatrix,
    pub weight: f64,
}

impl Level {
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn projection(&self) -> CMatrix {
        &self.basis * self.basis.adjoint()
    }

    /// `ρ_λ = P_λ / Tr P_λ`.
    pub fn normalized(&self) -> CMatrix {
        self.projection() * c(1.0 / self.rank() as f64)
    }
}

/// Levels ordered by increasing threshold, so projections shrink along the
/// list.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralScan {
    pub dim: usize,
    pub levels: Vec<Level>,
}

impl SpectralScan {
    /// `Σ_levels μ_λ ρ_λ`.
    pub fn reconstruct(&self) -> CMatrix {
        self.levels
            .iter()
            .fold(linalg::zeros(self.dim, self.dim), |acc, l| {
                acc + l.normalized() * c(l.weight)
            })
    }

    pub fn weights(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.weight).collect()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.levels.iter().map(Level::rank).collect()
    }
}

fn check_density(rho: &CMatrix) -> Result<()> {
    linalg::check_square(rho)?;
    linalg::check_hermitian(rho)?;
    let tr = linalg::trace(rho).re;
    if (tr - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("density has trace {tr}")));
    }
    let min = linalg::min_eigenvalue(rho)?;
    if min < -1e-10 {
        return Err(Error::InvalidParameter(format!(
            "density has eigenvalue {min:e}"
        )));
    }
    Ok(())
}

/// Split a density matrix into its nested spectral projections, each
/// weighted by (gap to the next lower eigenvalue) × rank.
pub fn spectral_scan(rho: &CMatrix) -> Result<SpectralScan> {
    check_density(rho)?;
    let d = rho.nrows();
    let eig = linalg::herm_eig(rho)?;
    // clusters of descending eigenvalues as (mean value, end index)
    let mut clusters: Vec<(f64, usize)> = Vec::new();
    let mut start = 0;
    while start < d {
        let head = eig.values[start];
        if head <= MERGE_TOL {
            break;
        }
        let mut end = start + 1;
        while end < d && head - eig.values[end] <= MERGE_TOL {
            end += 1;
        }
        let mean = eig.values[start..end].iter().sum::<f64>() / (end - start) as f64;
        clusters.push((mean, end));
        start = end;
    }
    let mut levels = Vec::with_capacity(clusters.len());
    for (j, &(value, end)) in clusters.iter().enumerate().rev() {
        let lower = clusters.get(j + 1).map_or(0.0, |c| c.0);
        levels.push(Level {
            threshold: value,
            basis: eig.vectors.columns(0, end).into_owned(),
            weight: (value - lower) * end as f64,
        });
    }
    Ok(SpectralScan { dim: d, levels })
}

/// `‖ρ − Σ μ_λ ρ_λ‖₁`.
pub fn reconstruction_residual(rho: &CMatrix, scan: &SpectralScan) -> f64 {
    linalg::trace_norm(&(rho - scan.reconstruct()))
}

/// `V* A V` for every operator of the family.
pub fn compress_family(f: &Family, basis: &CMatrix) -> Family {
    strategies::conjugate_family(f, basis)
}

/// `E_{x∼ν_A} Σ_a ‖A P − P A‖₂² / Tr P` for the projection onto the columns
/// of `basis`.
pub fn commutator_defect(f: &Family, basis: &CMatrix, nu_a: &[f64]) -> f64 {
    let p = basis * basis.adjoint();
    let r = basis.ncols() as f64;
    f.iter()
        .zip(nu_a)
        .map(|(ops, w)| {
            let s: f64 = ops.iter().map(|a| (a * &p - &p * a).norm_squared()).sum();
            w * s / r
        })
        .sum()
}

/// `E_{x∼ν_A} Σ_a Tr((A − PAP)² P) / Tr P`.
pub fn compression_defect(f: &Family, basis: &CMatrix, nu_a: &[f64]) -> f64 {
    let p = basis * basis.adjoint();
    let r = basis.ncols() as f64;
    f.iter()
        .zip(nu_a)
        .map(|(ops, w)| {
            let s: f64 = ops
                .iter()
                .map(|a| {
                    let diff = a - &p * a * &p;
                    linalg::trace_product(&(&diff * &diff), &p).re
                })
                .sum();
            w * s / r
        })
        .sum()
}

/// Statistics of the maximally entangled strategy on one subspace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PieceStats {
    pub threshold: f64,
    pub rank: usize,
    pub weight: f64,
    pub omega: f64,
    pub dsync: f64,
    pub defect: f64,
    pub commutator: f64,
    /// Defect of the projective replacement obtained by rounding `V*AV`.
    pub pme_defect: f64,
}

/// Result of decomposing a projective strategy along the scan of `ρ_A`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeDecomposition {
    pub levels: Vec<PieceStats>,
    /// `1 − ω(S)`.
    pub epsilon: f64,
    pub delta: f64,
    /// `E_ν Σ |C − Σ μ_λ C^λ|`.
    pub alpha: f64,
    /// Same quantity for the rounded projective pieces.
    pub alpha_pme: f64,
    /// `Σ μ_λ defect_λ`, bounded by `√(2δ)`.
    pub defect: f64,
    pub defect_bound: f64,
    /// `Σ μ_λ commutator_λ`, bounded by `2√(2δ)`.
    pub commutator: f64,
    pub commutator_bound: f64,
}

impl MeDecomposition {
    pub fn holds(&self, slack: f64) -> bool {
        self.defect <= self.defect_bound + slack && self.commutator <= self.commutator_bound + slack
    }
}

fn piece(f: &Family, basis: &CMatrix) -> Result<BipartiteStrategy> {
    BipartiteStrategy::maximally_entangled(compress_family(f, basis))
}

/// Decompose Alice's side of a projective strategy. Apply it to
/// [`BipartiteStrategy::swap_parties`] for Bob's side of a symmetric game.
pub fn me_components(
    s: &BipartiteStrategy,
    game: &Game,
) -> Result<(SpectralScan, MeDecomposition)> {
    s.check_game(game)?;
    let residual = strategies::family_pvm_residual(s.a());
    if residual > strategies::VALIDITY_TOL {
        return Err(Error::NotProjective(format!(
            "Alice's measurements have projection defect {residual:e}"
        )));
    }
    let nu_a = game.nu_a();
    let scan = spectral_scan(&linalg::hermitian_part(&s.rho_a()))?;
    let corr = s.correlation();
    let epsilon = 1.0 - game.winning_probability(&corr)?;
    let delta = strategies::dsync(&corr, &nu_a)?;
    let mut levels = Vec::with_capacity(scan.levels.len());
    let mut parts: Vec<(f64, Correlation)> = Vec::new();
    let mut pme_parts: Vec<(f64, Correlation)> = Vec::new();
    for l in &scan.levels {
        let sl = piece(s.a(), &l.basis)?;
        let cl = sl.correlation();
        let flat = linalg::identity(l.rank()) * c(1.0 / l.rank() as f64);
        let (rounded, rr) = rounding::round_family(sl.a(), &flat, &nu_a)?;
        let pme = BipartiteStrategy::maximally_entangled(rounded)?;
        levels.push(PieceStats {
            threshold: l.threshold,
            rank: l.rank(),
            weight: l.weight,
            omega: game.winning_probability(&cl)?,
            dsync: strategies::dsync(&cl, &nu_a)?,
            defect: compression_defect(s.a(), &l.basis, &nu_a),
            commutator: commutator_defect(s.a(), &l.basis, &nu_a),
            pme_defect: rr.gamma,
        });
        pme_parts.push((l.weight, pme.correlation()));
        parts.push((l.weight, cl));
    }
    let mix = |ps: &[(f64, Correlation)]| -> Result<f64> {
        let refs: Vec<(f64, &Correlation)> = ps.iter().map(|(w, c)| (*w, c)).collect();
        corr.distance(&Correlation::mixture(&refs)?, game.nu_table())
    };
    let defect = levels.iter().map(|p| p.weight * p.defect).sum();
    let commutator = levels.iter().map(|p| p.weight * p.commutator).sum();
    let report = MeDecomposition {
        epsilon,
        delta,
        alpha: mix(&parts)?,
        alpha_pme: mix(&pme_parts)?,
        defect,
        defect_bound: (2.0 * delta.max(0.0)).sqrt(),
        commutator,
        commutator_bound: 2.0 * (2.0 * delta.max(0.0)).sqrt(),
        levels,
    };
    Ok((scan, report))
}

/// The set `Λ` of levels that win well and nearly commute with `A`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaFilter {
    pub members: Vec<bool>,
    pub measure: f64,
    /// `1 − √α − √β`. Only guaranteed when `ε = 0`.
    pub claimed_bound: f64,
    pub claimed_holds: bool,
    /// `1 − (ε + α)/(ε + √α) − √β`, which follows from Markov's inequality
    /// for every `ε`.
    pub markov_bound: f64,
    pub markov_holds: bool,
}

/// Keep the levels with `ω_λ ≥ 1 − √α − ε` and commutator `≤ √β`.
///
/// The average loss over levels is at most `ε + α`, so Markov's inequality
/// gives the measure bound `1 − (ε + α)/(ε + √α) − √β`. The sharper
/// `1 − √α − √β` treats the loss as if it were at most `α`, which fails once
/// `ε > 0`; both are reported and only the first is a guarantee.
pub fn lambda_filter(levels: &[PieceStats], epsilon: f64, alpha: f64, beta: f64) -> LambdaFilter {
    let (sa, sb) = (alpha.max(0.0).sqrt(), beta.max(0.0).sqrt());
    let members: Vec<bool> = levels
        .iter()
        .map(|p| p.omega >= 1.0 - sa - epsilon - FILTER_TOL && p.commutator <= sb + FILTER_TOL)
        .collect();
    let measure = levels
        .iter()
        .zip(&members)
        .filter(|(_, m)| **m)
        .map(|(p, _)| p.weight)
        .sum();
    let loss_term = if epsilon + sa > 0.0 {
        ((epsilon + alpha) / (epsilon + sa)).min(1.0)
    } else {
        0.0
    };
    let claimed_bound = 1.0 - sa - sb;
    let markov_bound = 1.0 - loss_term - sb;
    LambdaFilter {
        claimed_holds: measure >= claimed_bound - 1e-9,
        markov_holds: measure >= markov_bound - 1e-9,
        members,
        measure,
        claimed_bound,
        markov_bound,
    }
}

/// One orthogonal block `Q_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Block {
    /// Indices into the scan of `λ_i` and (if any) `λ_{i+1}`.
    pub upper_level: usize,
    pub lower_level: Option<usize>,
    pub rank: usize,
    pub commutator: f64,
    pub commutator_bound: f64,
    pub dsync: f64,
    /// Half of the measured commutator of this block.
    pub dsync_from_commutator: f64,
    pub omega: f64,
    pub omega_bound: f64,
}

impl Block {
    pub fn holds(&self, slack: f64) -> bool {
        self.commutator <= self.commutator_bound + slack
            && self.dsync <= self.dsync_from_commutator + slack
            && self.dsync <= self.commutator_bound / 2.0 + slack
            && self.omega >= self.omega_bound - slack
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockPartition {
    pub blocks: Vec<Block>,
    /// Orthonormal bases of the blocks.
    pub bases: Vec<CMatrix>,
    /// `max_{i≠j} ‖Q_i Q_j‖`.
    pub orthogonality: f64,
    /// `‖Σ Q_i − P_{min Λ}‖`.
    pub completeness: f64,
}

impl BlockPartition {
    pub fn projections(&self) -> Vec<CMatrix> {
        self.bases.iter().map(|b| b * b.adjoint()).collect()
    }

    pub fn holds(&self, slack: f64) -> bool {
        self.orthogonality <= 1e-10
            && self.completeness <= 1e-10
            && self.blocks.iter().all(|b| b.holds(slack))
    }
}

/// Group the levels of `Λ` into classes of comparable dimension and take the
/// differences `Q_i = P_{λ_i} − P_{λ_{i+1}}` (the last block is `P_{λ_k}`).
///
/// `A` must be projective; `epsilon`, `alpha` and `beta` are those of the
/// decomposition the filter was built from.
pub fn block_partition(
    s: &BipartiteStrategy,
    game: &Game,
    scan: &SpectralScan,
    filter: &LambdaFilter,
    epsilon: f64,
    alpha: f64,
    beta: f64,
) -> Result<BlockPartition> {
    let members: Vec<usize> = (0..scan.levels.len())
        .filter(|&i| filter.members[i])
        .collect();
    if members.is_empty() {
        return Err(Error::Degenerate("the filtered level set is empty".into()));
    }
    let mut heads = Vec::new();
    let mut i = 0;
    while i < members.len() {
        let head = members[i];
        heads.push(head);
        let dim = scan.levels[head].rank();
        while i < members.len() && 2 * scan.levels[members[i]].rank() > dim {
            i += 1;
        }
    }
    let nu_a = game.nu_a();
    let (sa, sb) = (alpha.max(0.0).sqrt(), beta.max(0.0).sqrt());
    let commutator_bound = (2f64.sqrt() + 1.0).powi(2) * sb;
    let omega_bound =
        1.0 - 2.0 * epsilon - 2.0 * sa - 6.0 * sb - 8.0 * (2.5 + 2f64.sqrt()).sqrt() * sb.sqrt();
    let mut blocks = Vec::with_capacity(heads.len());
    let mut bases = Vec::with_capacity(heads.len());
    for (k, &head) in heads.iter().enumerate() {
        let lower = heads.get(k + 1).copied();
        let upper_rank = scan.levels[head].rank();
        let lower_rank = lower.map_or(0, |l| scan.levels[l].rank());
        // levels share the eigenvector ordering, so Q_i is a column range
        let basis = scan.levels[head]
            .basis
            .columns(lower_rank, upper_rank - lower_rank)
            .into_owned();
        let piece = piece(s.a(), &basis)?;
        let corr = piece.correlation();
        let commutator = commutator_defect(s.a(), &basis, &nu_a);
        blocks.push(Block {
            upper_level: head,
            lower_level: lower,
            rank: basis.ncols(),
            commutator,
            commutator_bound,
            dsync: strategies::dsync(&corr, &nu_a)?,
            dsync_from_commutator: commutator / 2.0,
            omega: game.winning_probability(&corr)?,
            omega_bound,
        });
        bases.push(basis);
    }
    let projections: Vec<CMatrix> = bases.iter().map(|b| b * b.adjoint()).collect();
    let mut orthogonality: f64 = 0.0;
    for i in 0..projections.len() {
        for j in 0..i {
            orthogonality =
                orthogonality.max(linalg::op_norm(&(&projections[i] * &projections[j])));
        }
    }
    let total = projections
        .iter()
        .fold(linalg::zeros(scan.dim, scan.dim), |acc, q| acc + q);
    let completeness = linalg::op_norm(&(total - scan.levels[heads[0]].projection()));
    Ok(BlockPartition {
        blocks,
        bases,
        orthogonality,
        completeness,
    })
}

/// Everything the decomposition computes for one strategy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub components: MeDecomposition,
    pub filter: LambdaFilter,
    pub blocks: Vec<Block>,
    pub orthogonality: f64,
    pub completeness: f64,
}

/// Scan, filter and partition a projective strategy, with `β` taken to be
/// the averaged commutator of the scan.
pub fn decompose(s: &BipartiteStrategy, game: &Game) -> Result<DecompositionReport> {
    let (scan, comp) = me_components(s, game)?;
    let filter = lambda_filter(&comp.levels, comp.epsilon, comp.alpha, comp.commutator);
    let partition = if filter.members.iter().any(|m| *m) {
        Some(block_partition(
            s,
            game,
            &scan,
            &filter,
            comp.epsilon,
            comp.alpha,
            comp.commutator,
        )?)
    } else {
        None
    };
    Ok(DecompositionReport {
        blocks: partition
            .as_ref()
            .map_or_else(Vec::new, |p| p.blocks.clone()),
        orthogonality: partition.as_ref().map_or(0.0, |p| p.orthogonality),
        completeness: partition.as_ref().map_or(0.0, |p| p.completeness),
        components: comp,
        filter,
    })
}

/// A projective strategy whose reduced density `diag(weights)` is generally
/// not flat: PVMs that commute with the diagonal are rotated by
/// `exp(i t H)` for a random Hermitian `H`, so `dsync` grows like `t²`.
pub fn near_synchronous_strategy(
    rng: &mut linalg::Sampler,
    dim: usize,
    questions: usize,
    outcomes: usize,
    t: f64,
) -> Result<BipartiteStrategy> {
    let raw: Vec<f64> = (0..dim).map(|_| 0.2 + rng.uniform()).collect();
    let total: f64 = raw.iter().sum();
    let root: Vec<f64> = raw.iter().map(|x| (x / total).sqrt()).collect();
    let psi = linalg::vec_of(&linalg::diag_real(&root));
    let mut a = Family::with_capacity(questions);
    for _ in 0..questions {
        // diagonal PVM: assign each basis vector an outcome
        let mut ops = vec![linalg::zeros(dim, dim); outcomes];
        for i in 0..dim {
            ops[rng.int(0, outcomes - 1)][(i, i)] = c(1.0);
        }
        let h = rng.random_hermitian(dim);
        let eig = linalg::herm_eig(&h)?;
        let mut rot = linalg::zeros(dim, dim);
        for (k, &lam) in eig.values.iter().enumerate() {
            let v = eig.vector(k);
            rot += &v * v.adjoint() * linalg::C64::from_polar(1.0, t * lam);
        }
        a.push(ops.iter().map(|p| &rot * p * rot.adjoint()).collect());
    }
    let b = strategies::transpose_family(&a);
    BipartiteStrategy::new(dim, dim, psi, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag_real, identity, Sampler};

    fn agreement_game(questions: usize, outcomes: usize) -> Game {
        let n = questions;
        Game::from_tables(
            &vec![outcomes; n],
            vec![1.0 / (n * n) as f64; n * n],
            |x, y, a, b| x != y || a == b,
        )
        .unwrap()
    }

    #[test]
    fn flat_spectrum_is_one_level() {
        let scan = spectral_scan(&(identity(4) * c(0.25))).unwrap();
        assert_eq!(scan.levels.len(), 1);
        assert!((scan.levels[0].weight - 1.0).abs() < 1e-14);
        assert!(linalg::max_abs(&(scan.levels[0].projection() - identity(4))) < 1e-14);
    }

    #[test]
    fn two_level_spectrum() {
        let scan = spectral_scan(&diag_real(&[0.75, 0.25])).unwrap();
        assert_eq!(scan.ranks(), vec![2, 1]);
        assert!((scan.levels[0].weight - 0.5).abs() < 1e-15);
        assert!((scan.levels[1].weight - 0.5).abs() < 1e-15);
        assert!(linalg::max_abs(&(scan.levels[1].projection() - diag_real(&[1.0, 0.0]))) < 1e-14);
    }

    #[test]
    fn random_density_reconstructs() {
        let mut s = Sampler::new(8);
        for d in [2, 5, 9] {
            let rho = s.random_density(d);
            let scan = spectral_scan(&rho).unwrap();
            assert!(reconstruction_residual(&rho, &scan) < 1e-12);
            assert!((scan.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_density() {
        assert!(spectral_scan(&diag_real(&[1.0, 1.0])).is_err());
        assert!(spectral_scan(&diag_real(&[1.5, -0.5])).is_err());
    }

    #[test]
    fn pme_strategy_has_one_exact_component() {
        let mut s = Sampler::new(3);
        let fam: Family = (0..2).map(|_| s.pvm(3, 2)).collect();
        let strat = BipartiteStrategy::maximally_entangled(fam).unwrap();
        let (scan, rep) = me_components(&strat, &agreement_game(2, 2)).unwrap();
        assert_eq!(scan.levels.len(), 1);
        assert!(rep.defect.abs() < 1e-12 && rep.commutator.abs() < 1e-12);
        assert!(rep.alpha < 1e-12);
    }

    #[test]
    fn commutator_is_twice_the_defect() {
        let mut s = Sampler::new(4);
        let strat = near_synchronous_strategy(&mut s, 6, 3, 2, 0.05).unwrap();
        let nu = vec![1.0 / 3.0; 3];
        let scan = spectral_scan(&strat.rho_a()).unwrap();
        for l in &scan.levels {
            let d = compression_defect(strat.a(), &l.basis, &nu);
            let k = commutator_defect(strat.a(), &l.basis, &nu);
            assert!((k - 2.0 * d).abs() < 1e-12);
        }
    }

    #[test]
    fn near_synchronous_strategy_respects_scan_bounds() {
        let mut s = Sampler::new(5);
        let game = agreement_game(3, 2);
        for _ in 0..10 {
            let strat = near_synchronous_strategy(&mut s, 6, 3, 2, 0.05).unwrap();
            let (_, rep) = me_components(&strat, &game).unwrap();
            assert!(rep.delta < 1e-2);
            assert!(rep.holds(1e-9), "{rep:?}");
        }
    }

    #[test]
    fn rejects_non_projective() {
        let mut s = Sampler::new(6);
        let fam: Family = vec![s.povm(3, 2)];
        let strat = BipartiteStrategy::maximally_entangled(fam).unwrap();
        assert!(matches!(
            me_components(&strat, &agreement_game(1, 2)),
            Err(Error::NotProjective(_))
        ));
    }

    /// Alice's state `diag(0.9, 0.1)`: the heavy basis vector answers
    /// consistently, the light one always says 0 and loses every off-diagonal
    /// round of the "differ on different questions" game.
    fn mixed_quality_strategy() -> (BipartiteStrategy, Game) {
        let game =
            Game::from_tables(&[2, 2], vec![0.25; 4], |x, y, a, b| (x == y) == (a == b)).unwrap();
        let p0 = diag_real(&[1.0, 1.0]);
        let zero = diag_real(&[0.0, 0.0]);
        let q0 = vec![p0.clone(), zero.clone()];
        let q1 = vec![diag_real(&[0.0, 1.0]), diag_real(&[1.0, 0.0])];
        let psi = linalg::vec_of(&diag_real(&[0.9f64.sqrt(), 0.1f64.sqrt()]));
        let a: Family = vec![q0, q1];
        let strat =
            BipartiteStrategy::new(2, 2, psi, a.clone(), strategies::transpose_family(&a)).unwrap();
        (strat, game)
    }

    #[test]
    fn claimed_filter_bound_fails_with_positive_loss() {
        let (strat, game) = mixed_quality_strategy();
        let (_, comp) = me_components(&strat, &game).unwrap();
        assert!(comp.epsilon > 0.0);
        assert!(comp.alpha < 1e-12 && comp.commutator < 1e-12);
        let f = lambda_filter(&comp.levels, comp.epsilon, comp.alpha, comp.commutator);
        assert!(f.markov_holds);
        assert!(!f.claimed_holds, "{f:?}");
    }

    #[test]
    fn perfect_levels_pass_filter() {
        let mut s = Sampler::new(7);
        let fam: Family = (0..2).map(|_| s.pvm(4, 2)).collect();
        let strat = BipartiteStrategy::maximally_entangled(fam).unwrap();
        let rep = decompose(&strat, &agreement_game(2, 2)).unwrap();
        assert_eq!(rep.filter.members, vec![true]);
        assert!((rep.filter.measure - 1.0).abs() < 1e-12);
        assert_eq!(rep.blocks.len(), 1);
        assert_eq!(rep.blocks[0].rank, 4);
    }

    #[test]
    fn dimension_halving_gives_two_blocks() {
        // ranks 5 (full) and 2: 2·2 ≤ 5 starts a new class
        let w = [0.3, 0.3, 0.4 / 3.0, 0.4 / 3.0, 0.4 / 3.0];
        let psi = linalg::vec_of(&diag_real(&w.map(f64::sqrt)));
        let ops = vec![identity(5)];
        let a: Family = vec![ops];
        let strat =
            BipartiteStrategy::new(5, 5, psi, a.clone(), strategies::transpose_family(&a)).unwrap();
        let game = Game::from_tables(&[1], vec![1.0], |_, _, _, _| true).unwrap();
        let rep = decompose(&strat, &game).unwrap();
        assert_eq!(rep.blocks.len(), 2);
        assert_eq!(
            rep.blocks.iter().map(|b| b.rank).collect::<Vec<_>>(),
            vec![3, 2]
        );
        assert!(rep.orthogonality < 1e-12 && rep.completeness < 1e-12);
    }

    #[test]
    fn seeded_partition_satisfies_block_bounds() {
        let mut s = Sampler::new(11);
        let game = agreement_game(3, 2);
        let strat = near_synchronous_strategy(&mut s, 8, 3, 2, 0.03).unwrap();
        let (scan, comp) = me_components(&strat, &game).unwrap();
        let f = lambda_filter(&comp.levels, comp.epsilon, comp.alpha, comp.commutator);
        let p = block_partition(
            &strat,
            &game,
            &scan,
            &f,
            comp.epsilon,
            comp.alpha,
            comp.commutator,
        )
        .unwrap();
        assert!(p.holds(1e-9), "{:?}", p.blocks);
    }
}
