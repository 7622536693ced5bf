//! Strategies in the Hilbert space picture (a shared state with local
//! measurements) and in the tracial picture (a finite-dimensional tracial
//! algebra with one measurement family).
//!
//! Transposes are taken in the computational basis. A symmetric state is
//! stored as `vec(R)` with `R ≥ 0`, which is `Σ λ_i |α_i⟩ ⊗ |ᾱ_i⟩` in the
//! Schmidt basis of `R`; with this convention `⟨vec R| X ⊗ Yᵀ |vec R⟩ =
//! Tr(X R Y R)`.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{Correlation, Game, Layout};
use crate::linalg::{
    self, c, matrix_from_repr, matrix_to_repr, vector_from_repr, vector_to_repr, CMatrix, CVector,
    MatrixRepr, Subsystem, VectorRepr, C64,
};

/// Slack allowed when validating states and measurements.
pub const VALIDITY_TOL: f64 = 1e-10;

/// Measurement operators indexed `[question][answer]`.
pub type Family = Vec<Vec<CMatrix>>;

pub fn family_counts(f: &Family) -> Vec<usize> {
    f.iter().map(Vec::len).collect()
}

/// Entrywise transpose of every operator.
pub fn transpose_family(f: &Family) -> Family {
    f.iter()
        .map(|ops| ops.iter().map(|m| m.transpose()).collect())
        .collect()
}

/// `V* A V` for every operator.
pub fn conjugate_family(f: &Family, v: &CMatrix) -> Family {
    let vs = v.adjoint();
    f.iter()
        .map(|ops| {
            ops.iter()
                .map(|m| linalg::hermitian_part(&(&vs * m * v)))
                .collect()
        })
        .collect()
}

/// Check that every question carries a POVM on `ℂ^d`.
pub fn validate_family(f: &Family, d: usize, what: &str) -> Result<()> {
    if f.is_empty() {
        return Err(Error::InvalidStrategy(format!("{what}: no questions")));
    }
    for (x, ops) in f.iter().enumerate() {
        if ops.is_empty() {
            return Err(Error::InvalidStrategy(format!(
                "{what}: question {x} has no outcomes"
            )));
        }
        if ops.iter().any(|m| m.shape() != (d, d)) {
            return Err(Error::DimensionMismatch(format!(
                "{what}: operators for question {x} are not {d}x{d}"
            )));
        }
        let defect =
            linalg::povm_defect(ops).map_err(|e| Error::InvalidStrategy(format!("{what}: {e}")))?;
        if defect > VALIDITY_TOL {
            return Err(Error::InvalidStrategy(format!(
                "{what}: question {x} is not a POVM (defect {defect:e})"
            )));
        }
    }
    Ok(())
}

/// Largest projection defect over a family.
pub fn family_pvm_residual(f: &Family) -> f64 {
    f.iter()
        .map(|ops| linalg::pvm_residual(ops))
        .fold(0.0, f64::max)
}

/// `1 − E_{x∼ν_A} Σ_a C(a, a | x, x)`.
pub fn dsync(corr: &Correlation, nu_a: &[f64]) -> Result<f64> {
    let layout = corr.layout();
    if nu_a.len() != layout.questions() {
        return Err(Error::Incompatible(
            "marginal does not match the correlation".into(),
        ));
    }
    let mut s = 0.0;
    for (x, &w) in nu_a.iter().enumerate() {
        for a in 0..layout.answers(x) {
            s += w * corr.get(x, x, a, a);
        }
    }
    Ok(1.0 - s)
}

/// A strategy `(ψ, A, B)` on `H_A ⊗ H_B`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteStrategy {
    dim_a: usize,
    dim_b: usize,
    psi: CVector,
    a: Family,
    b: Family,
}

impl BipartiteStrategy {
    pub fn new(dim_a: usize, dim_b: usize, psi: CVector, a: Family, b: Family) -> Result<Self> {
        linalg::check_dim(dim_a * dim_b)?;
        if psi.len() != dim_a * dim_b {
            return Err(Error::DimensionMismatch(format!(
                "state of length {} on a {dim_a}x{dim_b} system",
                psi.len()
            )));
        }
        if (psi.norm() - 1.0).abs() > VALIDITY_TOL {
            return Err(Error::InvalidStrategy(format!(
                "state has norm {}",
                psi.norm()
            )));
        }
        validate_family(&a, dim_a, "Alice")?;
        validate_family(&b, dim_b, "Bob")?;
        if family_counts(&a) != family_counts(&b) {
            return Err(Error::InvalidStrategy(
                "Alice and Bob answer different question/answer sets".into(),
            ));
        }
        Ok(BipartiteStrategy {
            dim_a,
            dim_b,
            psi,
            a,
            b,
        })
    }

    /// `(Σ_i |ii⟩/√d, A, Aᵀ)`.
    pub fn maximally_entangled(a: Family) -> Result<Self> {
        let d = a
            .first()
            .and_then(|ops| ops.first())
            .map_or(0, |m| m.nrows());
        let b = transpose_family(&a);
        BipartiteStrategy::new(d, d, linalg::max_entangled(d), a, b)
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn psi(&self) -> &CVector {
        &self.psi
    }

    pub fn a(&self) -> &Family {
        &self.a
    }

    pub fn b(&self) -> &Family {
        &self.b
    }

    pub fn layout(&self) -> Layout {
        Layout::new(family_counts(&self.a))
    }

    pub fn check_game(&self, game: &Game) -> Result<()> {
        if &self.layout() != game.layout() {
            return Err(Error::Incompatible(
                "strategy does not match the game's question/answer sets".into(),
            ));
        }
        Ok(())
    }

    pub fn rho_a(&self) -> CMatrix {
        linalg::reduced_density(&self.psi, self.dim_a, self.dim_b, Subsystem::A)
            .expect("validated dimensions")
    }

    pub fn rho_b(&self) -> CMatrix {
        linalg::reduced_density(&self.psi, self.dim_a, self.dim_b, Subsystem::B)
            .expect("validated dimensions")
    }

    pub fn is_projective(&self) -> bool {
        family_pvm_residual(&self.a) <= VALIDITY_TOL && family_pvm_residual(&self.b) <= VALIDITY_TOL
    }

    /// `C(a, b | x, y) = ⟨ψ| A^x_a ⊗ B^y_b |ψ⟩`, evaluated as
    /// `Σ_{jk} (Ψ* A Ψ)_{jk} B_{jk}`.
    pub fn correlation(&self) -> Correlation {
        let big = linalg::unvec(&self.psi, self.dim_a, self.dim_b).expect("validated dimensions");
        let big_adj = big.adjoint();
        let mut corr = Correlation::zeros(self.layout());
        for (x, ops) in self.a.iter().enumerate() {
            for (a, op) in ops.iter().enumerate() {
                let left = &big_adj * op * &big;
                for (y, bops) in self.b.iter().enumerate() {
                    for (b, bop) in bops.iter().enumerate() {
                        corr.set(x, y, a, b, left.component_mul(bop).sum().re);
                    }
                }
            }
        }
        corr
    }

    /// The same strategy with the players exchanged.
    pub fn swap_parties(&self) -> BipartiteStrategy {
        let big = linalg::unvec(&self.psi, self.dim_a, self.dim_b).expect("validated dimensions");
        BipartiteStrategy {
            dim_a: self.dim_b,
            dim_b: self.dim_a,
            psi: linalg::vec_of(&big.transpose()),
            a: self.b.clone(),
            b: self.a.clone(),
        }
    }

    /// Symmetric in the sense used here: equal dimensions, `Ψ` Hermitian
    /// positive semidefinite and `B = Aᵀ`.
    pub fn is_symmetric(&self) -> bool {
        self.state_is_symmetric()
            && self
                .a
                .iter()
                .zip(&self.b)
                .flat_map(|(x, y)| x.iter().zip(y))
                .all(|(p, q)| linalg::max_abs(&(p.transpose() - q)) <= VALIDITY_TOL)
    }

    fn state_is_symmetric(&self) -> bool {
        if self.dim_a != self.dim_b {
            return false;
        }
        let big = linalg::unvec(&self.psi, self.dim_a, self.dim_b).expect("validated dimensions");
        linalg::hermitian_defect(&big) <= VALIDITY_TOL
            && linalg::min_eigenvalue(&linalg::hermitian_part(&big))
                .is_ok_and(|v| v >= -VALIDITY_TOL)
    }

    pub fn to_file(&self, game: &Game) -> Result<StrategyFile> {
        self.check_game(game)?;
        Ok(StrategyFile {
            dim_a: self.dim_a,
            dim_b: self.dim_b,
            psi: vector_to_repr(&self.psi),
            a: family_to_map(&self.a, game),
            b: family_to_map(&self.b, game),
        })
    }

    pub fn from_file(file: &StrategyFile, game: &Game) -> Result<Self> {
        let a = family_from_map(&file.a, game, "A")?;
        let b = family_from_map(&file.b, game, "B")?;
        BipartiteStrategy::new(file.dim_a, file.dim_b, vector_from_repr(&file.psi), a, b)
    }
}

type FamilyMap = IndexMap<String, IndexMap<String, MatrixRepr>>;

fn family_to_map(f: &Family, game: &Game) -> FamilyMap {
    f.iter()
        .enumerate()
        .map(|(x, ops)| {
            let inner = ops
                .iter()
                .enumerate()
                .map(|(a, m)| (game.answer_labels(x)[a].clone(), matrix_to_repr(m)))
                .collect();
            (game.question_labels()[x].clone(), inner)
        })
        .collect()
}

fn family_from_map(map: &FamilyMap, game: &Game, who: &str) -> Result<Family> {
    if map.len() != game.num_questions() {
        return Err(Error::Incompatible(format!(
            "{who} lists {} questions, the game has {}",
            map.len(),
            game.num_questions()
        )));
    }
    let mut out = Vec::with_capacity(game.num_questions());
    for (x, q) in game.question_labels().iter().enumerate() {
        let inner = map.get(q).ok_or_else(|| {
            Error::Incompatible(format!("{who} has no measurement for question {q}"))
        })?;
        if inner.len() != game.num_answers(x) {
            return Err(Error::Incompatible(format!(
                "{who}: question {q} has {} outcomes, the game {}",
                inner.len(),
                game.num_answers(x)
            )));
        }
        let mut ops = Vec::with_capacity(inner.len());
        for a in game.answer_labels(x) {
            let repr = inner.get(a).ok_or_else(|| {
                Error::Incompatible(format!("{who}: no operator for answer {a} to {q}"))
            })?;
            ops.push(matrix_from_repr(repr)?);
        }
        out.push(ops);
    }
    Ok(out)
}

/// JSON form of a [`BipartiteStrategy`]; labels refer to a game file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyFile {
    #[serde(rename = "dimA")]
    pub dim_a: usize,
    #[serde(rename = "dimB")]
    pub dim_b: usize,
    pub psi: VectorRepr,
    #[serde(rename = "A")]
    pub a: FamilyMap,
    #[serde(rename = "B")]
    pub b: FamilyMap,
}

/// The strategies `S_A = (vec √ρ_A, A, Aᵀ)` and `S_B = (vec √ρ_B, B, Bᵀ)`.
pub fn associated_symmetric(
    s: &BipartiteStrategy,
) -> Result<(BipartiteStrategy, BipartiteStrategy)> {
    let build = |rho: CMatrix, f: &Family| -> Result<BipartiteStrategy> {
        let d = rho.nrows();
        let root = linalg::psd_sqrt(&rho)?;
        let mut psi = linalg::vec_of(&root);
        let n = psi.norm();
        psi /= c(n);
        BipartiteStrategy::new(d, d, psi, f.clone(), transpose_family(f))
    };
    Ok((build(s.rho_a(), s.a())?, build(s.rho_b(), s.b())?))
}

/// `Tr(Op₁ ρ^{1/2} Op₂ᵀ ρ^{1/2})` for a symmetric state, cross-checked against
/// `⟨ψ| Op₁ ⊗ Op₂ |ψ⟩`.
pub fn ando_pairing(s: &BipartiteStrategy, op1: &CMatrix, op2: &CMatrix) -> Result<C64> {
    if !s.state_is_symmetric() {
        return Err(Error::InvalidStrategy(
            "the pairing needs a symmetric state".into(),
        ));
    }
    let d = s.dim_a();
    if op1.shape() != (d, d) || op2.shape() != (d, d) {
        return Err(Error::DimensionMismatch(format!(
            "operators must be {d}x{d}"
        )));
    }
    let root = linalg::psd_sqrt(&s.rho_a())?;
    let pairing = linalg::trace(&(op1 * &root * op2.transpose() * &root));
    let direct = linalg::expect_local(s.psi(), op1, op2)?;
    let scale = linalg::op_norm(op1) * linalg::op_norm(op2);
    if (pairing - direct).norm() > 1e-9 * scale.max(1.0) {
        return Err(Error::BoundViolated(format!(
            "pairing {pairing} differs from ⟨ψ|X⊗Y|ψ⟩ = {direct}"
        )));
    }
    Ok(pairing)
}

/// A finite-dimensional tracial von Neumann algebra `⊕_i M_{d_i}` with trace
/// `τ(X) = Σ_i w_i Tr(X_i) / d_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TracialAlgebra {
    blocks: Vec<(usize, f64)>,
}

impl TracialAlgebra {
    pub fn new(blocks: Vec<(usize, f64)>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidParameter(
                "an algebra needs at least one block".into(),
            ));
        }
        if blocks
            .iter()
            .any(|&(d, w)| d == 0 || w.is_nan() || w <= 0.0)
        {
            return Err(Error::InvalidParameter(
                "blocks need positive dimension and weight".into(),
            ));
        }
        let total: f64 = blocks.iter().map(|b| b.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "block weights sum to {total}"
            )));
        }
        let alg = TracialAlgebra { blocks };
        linalg::check_dim(alg.dim())?;
        Ok(alg)
    }

    /// `M_d` with its normalised trace.
    pub fn full(d: usize) -> Result<Self> {
        TracialAlgebra::new(vec![(d, 1.0)])
    }

    pub fn blocks(&self) -> &[(usize, f64)] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.0).sum()
    }

    /// Index ranges of the blocks inside `ℂ^dim`.
    pub fn ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.blocks
            .iter()
            .map(|&(d, _)| {
                let r = start..start + d;
                start += d;
                r
            })
            .collect()
    }

    /// Per-basis-vector weights `w_i / d_i`.
    pub fn diagonal_weights(&self) -> Vec<f64> {
        self.blocks
            .iter()
            .flat_map(|&(d, w)| std::iter::repeat_n(w / d as f64, d))
            .collect()
    }

    pub fn trace(&self, m: &CMatrix) -> C64 {
        self.diagonal_weights()
            .iter()
            .enumerate()
            .map(|(i, w)| m[(i, i)] * w)
            .sum()
    }

    /// `τ(X Y)`.
    pub fn trace_product(&self, x: &CMatrix, y: &CMatrix) -> C64 {
        let w = self.diagonal_weights();
        let n = w.len();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            let mut row = C64::new(0.0, 0.0);
            for k in 0..n {
                row += x[(i, k)] * y[(k, i)];
            }
            acc += row * w[i];
        }
        acc
    }

    /// Largest entry outside the diagonal blocks.
    pub fn leakage(&self, m: &CMatrix) -> f64 {
        let owner: Vec<usize> = self
            .ranges()
            .iter()
            .enumerate()
            .flat_map(|(b, r)| r.clone().map(move |_| b))
            .collect();
        let mut worst: f64 = 0.0;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if owner[i] != owner[j] {
                    worst = worst.max(m[(i, j)].norm());
                }
            }
        }
        worst
    }

    /// `R = ⊕ √(w_i/d_i) Id`, so that `vec(R)` is the GNS vector of `τ`.
    pub fn gns_root(&self) -> CMatrix {
        linalg::diag_real(
            &self
                .diagonal_weights()
                .iter()
                .map(|w| w.sqrt())
                .collect::<Vec<_>>(),
        )
    }
}

/// A strategy `(M, τ, A)` in the tracial picture.
#[derive(Debug, Clone, PartialEq)]
pub struct TracialStrategy {
    algebra: TracialAlgebra,
    a: Family,
    pvm: bool,
}

impl TracialStrategy {
    pub fn new(algebra: TracialAlgebra, a: Family, pvm: bool) -> Result<Self> {
        let d = algebra.dim();
        validate_family(&a, d, "measurement")?;
        for (x, ops) in a.iter().enumerate() {
            for op in ops {
                let leak = algebra.leakage(op);
                if leak > VALIDITY_TOL {
                    return Err(Error::InvalidStrategy(format!(
                        "question {x}: operator leaves the algebra by {leak:e}"
                    )));
                }
            }
        }
        if pvm && family_pvm_residual(&a) > VALIDITY_TOL {
            return Err(Error::NotProjective(
                "measurement flagged projective has non-idempotent operators".into(),
            ));
        }
        Ok(TracialStrategy { algebra, a, pvm })
    }

    pub fn algebra(&self) -> &TracialAlgebra {
        &self.algebra
    }

    pub fn a(&self) -> &Family {
        &self.a
    }

    pub fn is_pvm(&self) -> bool {
        self.pvm
    }

    pub fn layout(&self) -> Layout {
        Layout::new(family_counts(&self.a))
    }

    /// `C(a, b | x, y) = τ(A^x_a A^y_b)`.
    pub fn correlation(&self) -> Correlation {
        let mut corr = Correlation::zeros(self.layout());
        for (x, ops) in self.a.iter().enumerate() {
            for (a, p) in ops.iter().enumerate() {
                for (y, qops) in self.a.iter().enumerate() {
                    for (b, q) in qops.iter().enumerate() {
                        corr.set(x, y, a, b, self.algebra.trace_product(p, q).re);
                    }
                }
            }
        }
        corr
    }

    /// `1 − E_{x∼ν_A} Σ_a τ((A^x_a)²)`, computed without the correlation table.
    pub fn dsync(&self, nu_a: &[f64]) -> Result<f64> {
        if nu_a.len() != self.a.len() {
            return Err(Error::Incompatible(
                "marginal does not match the strategy".into(),
            ));
        }
        let mut s = 0.0;
        for (x, ops) in self.a.iter().enumerate() {
            for op in ops {
                s += nu_a[x] * self.algebra.trace_product(op, op).re;
            }
        }
        Ok(1.0 - s)
    }

    /// Hilbert space realisation via the GNS vector of the trace.
    pub fn gns_realize(&self) -> BipartiteStrategy {
        let d = self.algebra.dim();
        let psi = linalg::vec_of(&self.algebra.gns_root());
        BipartiteStrategy::new(d, d, psi, self.a.clone(), transpose_family(&self.a))
            .expect("tracial strategy is valid")
    }

    pub fn to_file(&self, game: &Game) -> TracialFile {
        TracialFile {
            blocks: self.algebra.blocks.clone(),
            a: family_to_map(&self.a, game),
            pvm: self.pvm,
        }
    }

    pub fn from_file(file: &TracialFile, game: &Game) -> Result<Self> {
        let algebra = TracialAlgebra::new(file.blocks.clone())?;
        TracialStrategy::new(algebra, family_from_map(&file.a, game, "A")?, file.pvm)
    }
}

/// JSON form of a [`TracialStrategy`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TracialFile {
    pub blocks: Vec<(usize, f64)>,
    #[serde(rename = "A")]
    pub a: FamilyMap,
    pub pvm: bool,
}
