//! Closeness arguments driven by the spectral gap of a game polynomial.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::games::top_spectrum;
use crate::linalg::{self, c, CMatrix, CVector, Subsystem, C64};

const STATE_TOL: f64 = 1e-9;

/// How far a state on `(H̃_A ⊗ H̃_B) ⊗ K` sits from `ψ̃ ⊗ K`, the top eigenspace
/// of `T ⊗ Id_K`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopEigenspaceReport {
    pub omega: f64,
    pub gap: f64,
    /// `‖(1 − P_top) ψ‖`.
    pub leak: f64,
    /// `√((1 − ω)/α)`.
    pub leak_bound: f64,
    /// `‖P_top ψ‖`.
    pub overlap: f64,
    /// `‖ψ − ψ̃ ⊗ aux‖`.
    pub closeness: f64,
    /// `leak + (1 − overlap)`.
    pub closeness_bound: f64,
    #[serde(skip)]
    pub aux: CVector,
}

impl TopEigenspaceReport {
    pub fn holds(&self, slack: f64) -> bool {
        self.leak <= self.leak_bound + slack && self.closeness <= self.closeness_bound + slack
    }
}

fn check_unit(v: &CVector, len: usize, name: &str) -> Result<()> {
    if v.len() != len {
        return Err(Error::DimensionMismatch(format!(
            "{name} has length {}, expected {len}",
            v.len()
        )));
    }
    if (v.norm() - 1.0).abs() > STATE_TOL {
        return Err(Error::InvalidParameter(format!(
            "{name} has norm {}",
            v.norm()
        )));
    }
    Ok(())
}

/// `T` acts on `H̃_A ⊗ H̃_B` with simple top eigenvalue 1 and eigenvector
/// `psi_tilde`; `psi` lives on `(H̃_A ⊗ H̃_B) ⊗ K` with `dim K = aux_dim`
/// (see [`super::deinterleave`] for states stored party by party).
pub fn top_eigenspace_closeness(
    t: &CMatrix,
    psi: &CVector,
    psi_tilde: &CVector,
    aux_dim: usize,
) -> Result<TopEigenspaceReport> {
    linalg::check_hermitian(t)?;
    let d = t.nrows();
    check_unit(psi_tilde, d, "ψ̃")?;
    check_unit(psi, d * aux_dim, "ψ")?;
    let spec = top_spectrum(t)?;
    if spec.top_multiplicity != 1 {
        return Err(Error::Degenerate(format!(
            "top eigenvalue has multiplicity {}",
            spec.top_multiplicity
        )));
    }
    if (spec.top - 1.0).abs() > STATE_TOL {
        return Err(Error::InvalidParameter(format!(
            "top eigenvalue is {}, expected 1",
            spec.top
        )));
    }
    if (t * psi_tilde - psi_tilde).norm() > STATE_TOL {
        return Err(Error::InvalidParameter(
            "ψ̃ is not the top eigenvector".into(),
        ));
    }
    let big = linalg::unvec(psi, d, aux_dim)?;
    let v = big.transpose() * psi_tilde.map(|z| z.conj());
    let projected = linalg::kron_vec(psi_tilde, &v);
    let leak = (psi - &projected).norm();
    let overlap = v.norm();
    if overlap <= STATE_TOL {
        return Err(Error::InvalidParameter(
            "state is orthogonal to the top eigenspace".into(),
        ));
    }
    let aux = &v / c(overlap);
    let omega = (big.adjoint() * t * &big).trace().re;
    Ok(TopEigenspaceReport {
        omega,
        gap: spec.gap,
        leak,
        leak_bound: ((1.0 - omega).max(0.0) / spec.gap).sqrt(),
        overlap,
        closeness: (psi - linalg::kron_vec(psi_tilde, &aux)).norm(),
        closeness_bound: leak + (1.0 - overlap),
        aux,
    })
}

/// Lower bound on the deviation guaranteed by a spectral gap.
pub fn gap_witness_bound() -> f64 {
    1.0 / (16.0 + 12.0 * 2f64.sqrt())
}

/// A state mixing the two top eigenvectors that is far from maximally
/// entangled while losing only half the gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapWitness {
    pub top: f64,
    pub gap: f64,
    /// `⟨ψ|T|ψ⟩`.
    pub omega: f64,
    /// `top − gap/2`.
    pub omega_expected: f64,
    /// `‖Id/n − ρ_A‖₁`.
    pub deviation: f64,
    pub bound: f64,
    /// Phase `θ` with `ψ = (ψ₀ + e^{iθ} ψ₁)/√2`.
    pub phase: f64,
}

impl GapWitness {
    pub fn holds(&self, slack: f64) -> bool {
        self.deviation >= self.bound - slack && (self.omega - self.omega_expected).abs() <= 1e-10
    }
}

/// `‖Id/n − ρ_A‖₁` for `ψ = (ψ₀ + ψ₁)/‖ψ₀ + ψ₁‖` on `ℂ^n ⊗ ℂ^n`.
pub fn deviation_for_pair(psi0: &CVector, psi1: &CVector, n: usize) -> Result<f64> {
    if psi0.len() != n * n || psi1.len() != n * n {
        return Err(Error::DimensionMismatch(format!(
            "states must have length {}",
            n * n
        )));
    }
    let sum = psi0 + psi1;
    let norm = sum.norm();
    if norm <= STATE_TOL {
        return Err(Error::InvalidParameter("the two states cancel".into()));
    }
    deviation(&(sum / c(norm)), n)
}

fn deviation(psi: &CVector, n: usize) -> Result<f64> {
    let rho = linalg::reduced_density(psi, n, n, Subsystem::A)?;
    Ok(linalg::trace_norm(
        &(linalg::identity(n) * c(1.0 / n as f64) - rho),
    ))
}

const PHASES: usize = 16;

/// Mix the maximally entangled top eigenvector of `T` on `ℂ^n ⊗ ℂ^n` with a
/// second eigenvector, scanning both signs and a grid of phases, and keep the
/// state whose reduced density is furthest from maximally mixed.
pub fn spec_gap_witness(t: &CMatrix, n: usize) -> Result<GapWitness> {
    linalg::check_hermitian(t)?;
    if t.nrows() != n * n {
        return Err(Error::DimensionMismatch(format!(
            "operator of size {} on ℂ^{n} ⊗ ℂ^{n}",
            t.nrows()
        )));
    }
    let eig = linalg::herm_eig(t)?;
    let spec = crate::games::top_spectrum_of(&eig.values, linalg::max_abs(t))?;
    if spec.top_multiplicity != 1 {
        return Err(Error::Degenerate(format!(
            "top eigenvalue has multiplicity {}",
            spec.top_multiplicity
        )));
    }
    let psi0 = linalg::max_entangled(n);
    if (t * &psi0 - &psi0 * c(spec.top)).norm() > STATE_TOL {
        return Err(Error::InvalidParameter(
            "the maximally entangled state is not the top eigenvector".into(),
        ));
    }
    let mut psi1 = eig.vector(1);
    let along = psi0.dotc(&psi1);
    psi1 -= &psi0 * along;
    let norm = psi1.norm();
    psi1 /= c(norm);
    let second = eig.values[1];
    let mut best: Option<(f64, f64, CVector)> = None;
    for sign in [1.0, -1.0] {
        for k in 0..PHASES {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / PHASES as f64;
            let phase = C64::from_polar(sign, theta);
            let psi = (&psi0 + &psi1 * phase) * c(std::f64::consts::FRAC_1_SQRT_2);
            let dev = deviation(&psi, n)?;
            if best.as_ref().is_none_or(|b| dev > b.0) {
                let angle = if sign > 0.0 {
                    theta
                } else {
                    theta + std::f64::consts::PI
                };
                best = Some((dev, angle, psi));
            }
        }
    }
    let (dev, phase, psi) = best.expect("the scan is not empty");
    let omega = psi.dotc(&(t * &psi)).re;
    Ok(GapWitness {
        top: spec.top,
        gap: spec.top - second,
        omega,
        omega_expected: (spec.top + second) / 2.0,
        deviation: dev,
        bound: gap_witness_bound(),
        phase,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::game_polynomial;
    use crate::linalg::Sampler;
    use crate::qldt::{self, CodeF2};

    #[test]
    fn two_level_leak_matches_closed_form() {
        let alpha = 0.3;
        let t = linalg::diag_real(&[1.0, 1.0 - alpha]);
        let e0 = CVector::from_vec(vec![c(1.0), c(0.0)]);
        for theta in [0.0, 0.2, 0.7, 1.3] {
            let psi = CVector::from_vec(vec![c(f64::cos(theta)), c(f64::sin(theta))]);
            let r = top_eigenspace_closeness(&t, &psi, &e0, 1).unwrap();
            assert!((r.leak - f64::sin(theta).abs()).abs() < 1e-12);
            assert!((r.leak_bound - r.leak).abs() < 1e-7);
            assert!(r.holds(1e-9));
        }
    }

    #[test]
    fn perfect_state_has_no_leak() {
        let t = linalg::diag_real(&[1.0, 0.5, 0.2, 0.0]);
        let e0 = CVector::from_vec(vec![c(1.0), c(0.0), c(0.0), c(0.0)]);
        let aux = Sampler::new(2).haar_state(3);
        let r = top_eigenspace_closeness(&t, &linalg::kron_vec(&e0, &aux), &e0, 3).unwrap();
        assert!(r.leak < 1e-14 && r.closeness < 1e-14);
        assert!((r.aux.dotc(&aux).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_top_is_rejected() {
        let t = linalg::diag_real(&[1.0, 1.0]);
        let e0 = CVector::from_vec(vec![c(1.0), c(0.0)]);
        assert!(matches!(
            top_eigenspace_closeness(&t, &e0, &e0, 1),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn noisy_stabilizer_state_leaks_little() {
        let code = CodeF2::from_rows(&[vec![1, 0, 1], vec![0, 1, 1]]).unwrap();
        let (game, ideal) = qldt::stabilizer_game(&code).unwrap();
        let t = game_polynomial(&game, &ideal).unwrap();
        let mut rng = Sampler::new(6);
        let aux = rng.haar_state(2);
        let noisy = linalg::kron_vec(ideal.psi(), &aux) + rng.gaussian_vector(32) * c(1e-3);
        let psi = &noisy / c(noisy.norm());
        let r = top_eigenspace_closeness(&t, &psi, ideal.psi(), 2).unwrap();
        assert!(r.holds(1e-9), "{r:?}");
    }

    #[test]
    fn product_state_from_bell_pair() {
        let psi0 = linalg::max_entangled(2);
        let psi1 = qldt::bell_vector(1, 0, 1);
        assert!((deviation_for_pair(&psi0, &psi1, 2).unwrap() - 1.0).abs() < 1e-12);
        let psi1 = qldt::bell_vector(0, 1, 1);
        assert!((deviation_for_pair(&psi0, &psi1, 2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn repetition_code_witness() {
        let t = qldt::qldt_polynomial(&CodeF2::repetition(3).unwrap()).unwrap();
        let w = spec_gap_witness(&t, 2).unwrap();
        assert!((w.gap - 0.5).abs() < 1e-12);
        assert!(w.holds(1e-9), "{w:?}");
        assert!((w.omega - (1.0 - w.gap / 2.0)).abs() < 1e-10);
    }
}
