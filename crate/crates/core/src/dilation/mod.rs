//! Local dilations of one strategy into another, in the Hilbert space picture
//! and in the tracial picture, with the constructions converting between the
//! two and the spectral gap arguments that produce dilations.
//!
//! A witness for a Hilbert space dilation is a pair of isometries
//! `V_A: H_A → H̃_A ⊗ K_A`, `V_B: H_B → H̃_B ⊗ K_B` and an auxiliary state on
//! `K_A ⊗ K_B`. Vectors on `(H̃_A ⊗ K_A) ⊗ (H̃_B ⊗ K_B)` are handled as
//! `(m_A k_A) × (m_B k_B)` coefficient matrices, in which `ψ̃ ⊗ aux` is the
//! Kronecker product `Ψ̃ ⊗ Aux` of the two coefficient matrices.

mod convert;
mod spectral;
mod vna;

pub use convert::*;
pub use spectral::*;
pub use vna::*;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, MatrixRepr, VectorRepr};
use crate::strategies::{BipartiteStrategy, Family};

/// Slack on `V*V = Id` and on the norm of the auxiliary state.
pub const ISOMETRY_TOL: f64 = 1e-10;

/// `max |V*V − Id|` entrywise.
pub fn isometry_defect(v: &CMatrix) -> f64 {
    linalg::max_abs(&(v.adjoint() * v - linalg::identity(v.ncols())))
}

/// Isometries and auxiliary state exhibiting one strategy as a local
/// dilation of another, together with the question distribution `ν̂` on
/// `X × Y` (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct DilationWitness {
    v_a: CMatrix,
    v_b: CMatrix,
    aux: CVector,
    k_a: usize,
    k_b: usize,
    nu: Vec<f64>,
}

impl DilationWitness {
    pub fn new(
        v_a: CMatrix,
        v_b: CMatrix,
        aux: CVector,
        k_a: usize,
        k_b: usize,
        nu: Vec<f64>,
    ) -> Result<Self> {
        if k_a == 0 || k_b == 0 {
            return Err(Error::InvalidParameter(
                "auxiliary spaces need positive dimension".into(),
            ));
        }
        if aux.len() != k_a * k_b {
            return Err(Error::DimensionMismatch(format!(
                "aux has length {}, expected {k_a}x{k_b}",
                aux.len()
            )));
        }
        if (aux.norm() - 1.0).abs() > ISOMETRY_TOL {
            return Err(Error::InvalidParameter(format!(
                "aux has norm {}",
                aux.norm()
            )));
        }
        for (name, v, k) in [("V_A", &v_a, k_a), ("V_B", &v_b, k_b)] {
            if v.nrows() % k != 0 {
                return Err(Error::DimensionMismatch(format!(
                    "{name} has {} rows, not a multiple of {k}",
                    v.nrows()
                )));
            }
            let d = isometry_defect(v);
            if d > ISOMETRY_TOL {
                return Err(Error::InvalidParameter(format!(
                    "{name} is not an isometry (defect {d:e})"
                )));
            }
        }
        check_distribution(&nu)?;
        Ok(DilationWitness {
            v_a,
            v_b,
            aux,
            k_a,
            k_b,
            nu,
        })
    }

    pub fn v_a(&self) -> &CMatrix {
        &self.v_a
    }

    pub fn v_b(&self) -> &CMatrix {
        &self.v_b
    }

    pub fn aux(&self) -> &CVector {
        &self.aux
    }

    pub fn k_a(&self) -> usize {
        self.k_a
    }

    pub fn k_b(&self) -> usize {
        self.k_b
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    /// `k_A × k_B` coefficient matrix of the auxiliary state.
    pub fn aux_matrix(&self) -> CMatrix {
        linalg::unvec(&self.aux, self.k_a, self.k_b).expect("aux length checked on construction")
    }

    pub fn to_file(&self) -> WitnessFile {
        WitnessFile {
            v_a: linalg::matrix_to_repr(&self.v_a),
            v_b: linalg::matrix_to_repr(&self.v_b),
            aux: linalg::vector_to_repr(&self.aux),
            k_a: self.k_a,
            k_b: self.k_b,
            nu: self.nu.clone(),
        }
    }

    pub fn from_file(file: &WitnessFile) -> Result<Self> {
        DilationWitness::new(
            linalg::matrix_from_repr(&file.v_a)?,
            linalg::matrix_from_repr(&file.v_b)?,
            linalg::vector_from_repr(&file.aux),
            file.k_a,
            file.k_b,
            file.nu.clone(),
        )
    }
}

/// JSON form of a [`DilationWitness`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessFile {
    pub v_a: MatrixRepr,
    pub v_b: MatrixRepr,
    pub aux: VectorRepr,
    pub k_a: usize,
    pub k_b: usize,
    pub nu: Vec<f64>,
}

fn check_distribution(nu: &[f64]) -> Result<()> {
    if nu.iter().any(|&p| !p.is_finite() || p < 0.0) {
        return Err(Error::InvalidParameter(
            "distribution has a negative or non-finite entry".into(),
        ));
    }
    let total: f64 = nu.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "distribution sums to {total}"
        )));
    }
    Ok(())
}

/// Marginals of a row-major distribution on `X × Y`.
pub fn marginals(
    nu: &[f64],
    questions_a: usize,
    questions_b: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if nu.len() != questions_a * questions_b {
        return Err(Error::DimensionMismatch(format!(
            "distribution of length {} on {questions_a}x{questions_b} questions",
            nu.len()
        )));
    }
    let a = (0..questions_a)
        .map(|x| (0..questions_b).map(|y| nu[x * questions_b + y]).sum())
        .collect();
    let b = (0..questions_b)
        .map(|y| (0..questions_a).map(|x| nu[x * questions_b + y]).sum())
        .collect();
    Ok((a, b))
}

/// State, Alice and Bob residuals of a local dilation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualTriple {
    pub r_state: f64,
    pub r_a: f64,
    pub r_b: f64,
}

impl ResidualTriple {
    pub fn max(&self) -> f64 {
        self.r_state.max(self.r_a).max(self.r_b)
    }

    /// The witness certifies an `(ε, ν̂)`-dilation.
    pub fn certifies(&self, eps: f64) -> bool {
        self.max() <= eps
    }
}

/// Everything a residual computation needs, in coefficient-matrix form.
pub(crate) struct Frame<'a> {
    pub s: &'a BipartiteStrategy,
    pub ideal: &'a BipartiteStrategy,
    pub psi: CMatrix,
    pub tpsi: CMatrix,
}

impl<'a> Frame<'a> {
    pub fn new(s: &'a BipartiteStrategy, ideal: &'a BipartiteStrategy) -> Result<Self> {
        if s.layout() != ideal.layout() || s.b().len() != ideal.b().len() {
            return Err(Error::Incompatible(
                "strategies have different question/answer layouts".into(),
            ));
        }
        for (y, (p, q)) in s.b().iter().zip(ideal.b()).enumerate() {
            if p.len() != q.len() {
                return Err(Error::Incompatible(format!(
                    "Bob's question {y} has different answer counts"
                )));
            }
        }
        Ok(Frame {
            s,
            ideal,
            psi: linalg::unvec(s.psi(), s.dim_a(), s.dim_b())?,
            tpsi: linalg::unvec(ideal.psi(), ideal.dim_a(), ideal.dim_b())?,
        })
    }

    /// Validate the shapes of `V_A`, `V_B` and `Aux` against both strategies.
    pub fn check_maps(&self, v_a: &CMatrix, v_b: &CMatrix, aux: &CMatrix) -> Result<()> {
        let (ka, kb) = aux.shape();
        let expect = [
            ("V_A", v_a, self.ideal.dim_a() * ka, self.s.dim_a()),
            ("V_B", v_b, self.ideal.dim_b() * kb, self.s.dim_b()),
        ];
        for (name, v, rows, cols) in expect {
            if v.shape() != (rows, cols) {
                return Err(Error::DimensionMismatch(format!(
                    "{name} is {}x{}, expected {rows}x{cols}",
                    v.nrows(),
                    v.ncols()
                )));
            }
        }
        Ok(())
    }

    pub fn marginals(&self, nu: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        marginals(nu, self.s.a().len(), self.s.b().len())
    }

    /// `‖V_A Ψ V_Bᵀ − Ψ̃ ⊗ Aux‖_F`.
    pub fn state_residual(&self, v_a: &CMatrix, v_b: &CMatrix, aux: &CMatrix) -> f64 {
        (v_a * &self.psi * v_b.transpose() - linalg::kron(&self.tpsi, aux)).norm()
    }

    /// `(E_{x∼ν_A} Σ_a ‖V_A A Ψ V_Bᵀ − Ã Ψ̃ ⊗ Aux‖²)^{1/2}`.
    pub fn alice_residual(&self, v_a: &CMatrix, v_b: &CMatrix, aux: &CMatrix, nu_a: &[f64]) -> f64 {
        let right = &self.psi * v_b.transpose();
        let mut acc = 0.0;
        for (x, ops) in self.s.a().iter().enumerate() {
            if nu_a[x] == 0.0 {
                continue;
            }
            for (op, top) in ops.iter().zip(&self.ideal.a()[x]) {
                let d = v_a * op * &right - linalg::kron(&(top * &self.tpsi), aux);
                acc += nu_a[x] * d.norm_squared();
            }
        }
        acc.sqrt()
    }

    /// `(E_{y∼ν_B} Σ_b ‖V_A Ψ Bᵀ V_Bᵀ − Ψ̃ B̃ᵀ ⊗ Aux‖²)^{1/2}`.
    pub fn bob_residual(&self, v_a: &CMatrix, v_b: &CMatrix, aux: &CMatrix, nu_b: &[f64]) -> f64 {
        let left = v_a * &self.psi;
        let vbt = v_b.transpose();
        let mut acc = 0.0;
        for (y, ops) in self.s.b().iter().enumerate() {
            if nu_b[y] == 0.0 {
                continue;
            }
            for (op, top) in ops.iter().zip(&self.ideal.b()[y]) {
                let d = &left * op.transpose() * &vbt
                    - linalg::kron(&(&self.tpsi * top.transpose()), aux);
                acc += nu_b[y] * d.norm_squared();
            }
        }
        acc.sqrt()
    }

    pub fn triple(
        &self,
        v_a: &CMatrix,
        v_b: &CMatrix,
        aux: &CMatrix,
        nu: &[f64],
    ) -> Result<ResidualTriple> {
        self.check_maps(v_a, v_b, aux)?;
        let (nu_a, nu_b) = self.marginals(nu)?;
        Ok(ResidualTriple {
            r_state: self.state_residual(v_a, v_b, aux),
            r_a: self.alice_residual(v_a, v_b, aux, &nu_a),
            r_b: self.bob_residual(v_a, v_b, aux, &nu_b),
        })
    }
}

/// The three residuals of a local dilation of `s` by `ideal`.
pub fn dilation_residuals(
    s: &BipartiteStrategy,
    ideal: &BipartiteStrategy,
    witness: &DilationWitness,
) -> Result<ResidualTriple> {
    Frame::new(s, ideal)?.triple(
        &witness.v_a,
        &witness.v_b,
        &witness.aux_matrix(),
        &witness.nu,
    )
}

/// Joint-operator residual
/// `(E_{(x,y)∼ν̂} Σ_{a,b} ‖(V_A ⊗ V_B)(A ⊗ B)ψ − (Ã ⊗ B̃)ψ̃ ⊗ aux‖²)^{1/2}`.
///
/// It never exceeds three times the largest entry of the residual triple.
pub fn strong_residual(
    s: &BipartiteStrategy,
    ideal: &BipartiteStrategy,
    witness: &DilationWitness,
) -> Result<f64> {
    let frame = Frame::new(s, ideal)?;
    let aux = witness.aux_matrix();
    frame.check_maps(&witness.v_a, &witness.v_b, &aux)?;
    let (qa, qb) = (s.a().len(), s.b().len());
    if witness.nu.len() != qa * qb {
        return Err(Error::DimensionMismatch(
            "distribution does not match the question sets".into(),
        ));
    }
    let vbt = witness.v_b.transpose();
    let mut acc = 0.0;
    for x in 0..qa {
        for y in 0..qb {
            let w = witness.nu[x * qb + y];
            if w == 0.0 {
                continue;
            }
            for (op, top) in s.a()[x].iter().zip(&ideal.a()[x]) {
                let left = &witness.v_a * op * &frame.psi;
                let tleft = top * &frame.tpsi;
                for (bop, tbop) in s.b()[y].iter().zip(&ideal.b()[y]) {
                    let d = &left * bop.transpose() * &vbt
                        - linalg::kron(&(&tleft * tbop.transpose()), &aux);
                    acc += w * d.norm_squared();
                }
            }
        }
    }
    Ok(acc.sqrt())
}

/// Replace every operator by `n` copies of itself scaled by `1/n`.
pub fn split_outcomes(f: &Family, n: usize) -> Family {
    let s = c(1.0 / n as f64);
    f.iter()
        .map(|ops| {
            ops.iter()
                .flat_map(|op| std::iter::repeat_n(op * s, n))
                .collect()
        })
        .collect()
}

/// [`split_outcomes`] applied to both parties.
pub fn split_strategy(s: &BipartiteStrategy, n: usize) -> Result<BipartiteStrategy> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "split factor must be positive".into(),
        ));
    }
    BipartiteStrategy::new(
        s.dim_a(),
        s.dim_b(),
        s.psi().clone(),
        split_outcomes(s.a(), n),
        split_outcomes(s.b(), n),
    )
}

/// Reorder a vector on `(H̃_A ⊗ H̃_B) ⊗ (K_A ⊗ K_B)` into
/// `(H̃_A ⊗ K_A) ⊗ (H̃_B ⊗ K_B)`.
pub fn interleave(v: &CVector, m_a: usize, m_b: usize, k_a: usize, k_b: usize) -> Result<CVector> {
    if v.len() != m_a * m_b * k_a * k_b {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} cannot be regrouped",
            v.len()
        )));
    }
    let mut out = CVector::zeros(v.len());
    for i in 0..m_a {
        for j in 0..m_b {
            for p in 0..k_a {
                for q in 0..k_b {
                    let from = (i * m_b + j) * (k_a * k_b) + p * k_b + q;
                    let to = (i * k_a + p) * (m_b * k_b) + j * k_b + q;
                    out[to] = v[from];
                }
            }
        }
    }
    Ok(out)
}

/// Inverse of [`interleave`].
pub fn deinterleave(
    v: &CVector,
    m_a: usize,
    m_b: usize,
    k_a: usize,
    k_b: usize,
) -> Result<CVector> {
    if v.len() != m_a * m_b * k_a * k_b {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} cannot be regrouped",
            v.len()
        )));
    }
    let mut out = CVector::zeros(v.len());
    for i in 0..m_a {
        for j in 0..m_b {
            for p in 0..k_a {
                for q in 0..k_b {
                    let to = (i * m_b + j) * (k_a * k_b) + p * k_b + q;
                    let from = (i * k_a + p) * (m_b * k_b) + j * k_b + q;
                    out[to] = v[from];
                }
            }
        }
    }
    Ok(out)
}

/// Distance between Schmidt coefficient sequences and between the states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchmidtDistance {
    pub coefficients: f64,
    pub states: f64,
}

/// Compare `ψ` and `φ` on the same `dim_a × dim_b` system. The coefficient
/// distance never exceeds the state distance.
pub fn schmidt_distance(
    psi: &CVector,
    phi: &CVector,
    dim_a: usize,
    dim_b: usize,
) -> Result<SchmidtDistance> {
    let l = linalg::schmidt_coefficients(psi, dim_a, dim_b)?;
    let m = linalg::schmidt_coefficients(phi, dim_a, dim_b)?;
    let coefficients = l
        .iter()
        .zip(&m)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(SchmidtDistance {
        coefficients,
        states: (psi - phi).norm(),
    })
}

/// Dimension constraint for maximally entangled states at distance `ε`:
/// `dim H ≥ (1 − ε²) dim H̃` whenever `dim H ≤ dim H̃`.
pub fn dimension_bound_holds(dim_h: usize, dim_ideal: usize, eps: f64) -> bool {
    dim_h > dim_ideal || dim_h as f64 >= (1.0 - eps * eps) * dim_ideal as f64 - 1e-12
}

/// Robustness after passing through nearly synchronous strategies:
/// `κ′(ε, δ) = κ(24√δ + ε) + 9cδ`.
pub fn kappa_prime(kappa: impl Fn(f64) -> f64, c_ratio: f64, eps: f64, delta: f64) -> f64 {
    kappa(24.0 * delta.max(0.0).sqrt() + eps) + 9.0 * c_ratio * delta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Sampler;

    fn uniform(q: usize) -> Vec<f64> {
        vec![1.0 / (q * q) as f64; q * q]
    }

    fn ideal(rng: &mut Sampler, m: usize, q: usize) -> BipartiteStrategy {
        BipartiteStrategy::maximally_entangled((0..q).map(|_| rng.pvm(m, 2)).collect()).unwrap()
    }

    #[test]
    fn identical_strategies_have_zero_residuals() {
        let mut rng = Sampler::new(1);
        let s = ideal(&mut rng, 3, 2);
        let w = DilationWitness::new(
            linalg::identity(3),
            linalg::identity(3),
            CVector::from_element(1, c(1.0)),
            1,
            1,
            uniform(2),
        )
        .unwrap();
        let r = dilation_residuals(&s, &s, &w).unwrap();
        assert!(r.max() < 1e-14);
        assert!(strong_residual(&s, &s, &w).unwrap() < 1e-14);
    }

    #[test]
    fn witness_rejects_non_isometry() {
        let v = linalg::identity(2) * c(1.1);
        let err = DilationWitness::new(
            v.clone(),
            v,
            CVector::from_element(1, c(1.0)),
            1,
            1,
            vec![1.0],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn interleave_roundtrips_and_matches_kron() {
        let mut rng = Sampler::new(3);
        let (ma, mb, ka, kb) = (2, 3, 2, 2);
        let t = rng.haar_state(ma * mb);
        let aux = rng.haar_state(ka * kb);
        let joint = linalg::kron_vec(&t, &aux);
        let il = interleave(&joint, ma, mb, ka, kb).unwrap();
        let expect = linalg::vec_of(&linalg::kron(
            &linalg::unvec(&t, ma, mb).unwrap(),
            &linalg::unvec(&aux, ka, kb).unwrap(),
        ));
        assert!((&il - expect).norm() < 1e-14);
        assert!((deinterleave(&il, ma, mb, ka, kb).unwrap() - joint).norm() < 1e-14);
    }

    #[test]
    fn kappa_prime_is_monotone() {
        let k = |x: f64| 3.0 * x.sqrt();
        assert!(kappa_prime(k, 2.0, 0.1, 0.01) < kappa_prime(k, 2.0, 0.2, 0.01));
        assert!(kappa_prime(k, 2.0, 0.1, 0.01) < kappa_prime(k, 2.0, 0.1, 0.02));
        assert!((kappa_prime(|x| x, 1.0, 0.5, 0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dimension_bound_edges() {
        assert!(dimension_bound_holds(4, 4, 0.0));
        assert!(!dimension_bound_holds(3, 4, 0.1));
        assert!(dimension_bound_holds(3, 4, 0.5));
        assert!(dimension_bound_holds(5, 4, 0.0));
    }
}
