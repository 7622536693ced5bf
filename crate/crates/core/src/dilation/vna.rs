//! Dilations in the tracial picture.
//!
//! The ampliation `(M ⊗ M₀)^∞` is truncated to `r` slots: the space is
//! `H̃ ⊗ K₀ ⊗ ℂ^r` with basis index `(i·k₀ + p)·r + s`, and slot `s = 0` is the
//! corner `I_{M⊗M₀}`. The trace `τ^∞` weights basis vector `(i, p, s)` by the
//! product of the diagonal weights of `M` at `i` and of `M₀` at `p`, so it is
//! a faithful normal trace on the block-diagonal operators.

use serde::Serialize;

use super::isometry_defect;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};
use crate::strategies::{TracialAlgebra, TracialStrategy};

/// Entries between different central blocks above this mean the operator is
/// not in the algebra, or the truncation is too small to hold it.
pub const LEAKAGE_TOL: f64 = 1e-9;

/// Truncation of `(M ⊗ M₀)^∞` to finitely many slots.
#[derive(Debug, Clone, PartialEq)]
pub struct AmpliatedSpace {
    ideal: TracialAlgebra,
    aux: TracialAlgebra,
    slots: usize,
}

impl AmpliatedSpace {
    pub fn new(ideal: TracialAlgebra, aux: TracialAlgebra, slots: usize) -> Result<Self> {
        if slots == 0 {
            return Err(Error::InvalidParameter(
                "the ampliation needs at least one slot".into(),
            ));
        }
        linalg::check_dim(ideal.dim() * aux.dim() * slots)?;
        Ok(AmpliatedSpace { ideal, aux, slots })
    }

    pub fn ideal(&self) -> &TracialAlgebra {
        &self.ideal
    }

    pub fn aux(&self) -> &TracialAlgebra {
        &self.aux
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    /// Dimension of the corner `H̃ ⊗ K₀`.
    pub fn corner_dim(&self) -> usize {
        self.ideal.dim() * self.aux.dim()
    }

    pub fn dim(&self) -> usize {
        self.corner_dim() * self.slots
    }

    pub fn index(&self, i: usize, p: usize, s: usize) -> usize {
        (i * self.aux.dim() + p) * self.slots + s
    }

    pub fn weights(&self) -> Vec<f64> {
        let wm = self.ideal.diagonal_weights();
        let w0 = self.aux.diagonal_weights();
        let mut out = Vec::with_capacity(self.dim());
        for a in &wm {
            for b in &w0 {
                out.extend(std::iter::repeat_n(a * b, self.slots));
            }
        }
        out
    }

    /// Central block labels `(block of M, block of M₀)` per basis vector.
    pub fn labels(&self) -> Vec<(usize, usize)> {
        let owner = |alg: &TracialAlgebra| -> Vec<usize> {
            alg.ranges()
                .iter()
                .enumerate()
                .flat_map(|(b, r)| r.clone().map(move |_| b))
                .collect()
        };
        let (om, o0) = (owner(&self.ideal), owner(&self.aux));
        let mut out = Vec::with_capacity(self.dim());
        for &a in &om {
            for &b in &o0 {
                out.extend(std::iter::repeat_n((a, b), self.slots));
            }
        }
        out
    }

    /// `τ^∞(X)`.
    pub fn trace(&self, x: &CMatrix) -> f64 {
        self.weights()
            .iter()
            .enumerate()
            .map(|(k, w)| w * x[(k, k)].re)
            .sum()
    }

    /// `τ^∞(X* X)` for `X` with `dim` columns.
    pub fn gram_trace(&self, x: &CMatrix) -> f64 {
        self.weights()
            .iter()
            .enumerate()
            .map(|(k, w)| w * x.column(k).norm_squared())
            .sum()
    }

    /// Largest entry linking basis vectors in different central blocks.
    pub fn leakage(&self, x: &CMatrix) -> f64 {
        let labels = self.labels();
        let mut worst: f64 = 0.0;
        for i in 0..x.nrows() {
            for j in 0..x.ncols() {
                if labels[i] != labels[j] {
                    worst = worst.max(x[(i, j)].norm());
                }
            }
        }
        worst
    }

    /// Isometry `H̃ ⊗ K₀ → 𝓗` onto slot zero.
    pub fn corner_embedding(&self) -> CMatrix {
        let mut e = linalg::zeros(self.dim(), self.corner_dim());
        for k in 0..self.corner_dim() {
            e[(k * self.slots, k)] = c(1.0);
        }
        e
    }

    /// The projection `I_{M⊗M₀}`.
    pub fn corner(&self) -> CMatrix {
        let e = self.corner_embedding();
        &e * e.adjoint()
    }

    /// `X ⊗ I_{K₀}` placed in the corner, for `X` on `H̃`.
    pub fn corner_operator(&self, x: &CMatrix) -> CMatrix {
        let e = self.corner_embedding();
        &e * linalg::kron(x, &linalg::identity(self.aux.dim())) * e.adjoint()
    }

    /// The same space with `slots` slots.
    pub fn with_slots(&self, slots: usize) -> Result<AmpliatedSpace> {
        AmpliatedSpace::new(self.ideal.clone(), self.aux.clone(), slots)
    }

    /// Where each basis vector of `self` lands in a space with more slots.
    fn slot_map(&self, to: &AmpliatedSpace) -> Vec<usize> {
        (0..self.dim())
            .map(|k| (k / self.slots) * to.slots + k % self.slots)
            .collect()
    }
}

/// Partial isometry `W ∈ P (M ⊗ M₀)^∞ I_{M⊗M₀}` with `N ≅ P(M ⊗ M₀)^∞P`
/// realised as `P = J J*` for an isometry `J: H → 𝓗`.
#[derive(Debug, Clone, PartialEq)]
pub struct VnaWitness {
    space: AmpliatedSpace,
    j: CMatrix,
    w: CMatrix,
}

impl VnaWitness {
    pub fn new(space: AmpliatedSpace, j: CMatrix, w: CMatrix) -> Result<Self> {
        let d = space.dim();
        if j.nrows() != d {
            return Err(Error::DimensionMismatch(format!(
                "J has {} rows, the truncation has dimension {d}",
                j.nrows()
            )));
        }
        if w.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "W is {}x{}, expected {d}x{d}",
                w.nrows(),
                w.ncols()
            )));
        }
        let jd = isometry_defect(&j);
        if jd > super::ISOMETRY_TOL {
            return Err(Error::InvalidParameter(format!(
                "J is not an isometry (defect {jd:e})"
            )));
        }
        let wit = VnaWitness { space, j, w };
        let leak = wit.leakage();
        if leak > LEAKAGE_TOL {
            return Err(Error::SupportLeakage(leak));
        }
        let top = linalg::max_eigenvalue(&linalg::hermitian_part(&(wit.w.adjoint() * &wit.w)))?;
        if top > 1.0 + super::ISOMETRY_TOL {
            return Err(Error::InvalidParameter(format!(
                "W is not a contraction (‖W‖² = {top})"
            )));
        }
        Ok(wit)
    }

    pub fn space(&self) -> &AmpliatedSpace {
        &self.space
    }

    pub fn j(&self) -> &CMatrix {
        &self.j
    }

    pub fn w(&self) -> &CMatrix {
        &self.w
    }

    /// `P = J J*`.
    pub fn projection(&self) -> CMatrix {
        &self.j * self.j.adjoint()
    }

    /// Block leakage of `P` and `W`, together with the part of `W` outside
    /// `P · I_{M⊗M₀}`.
    pub fn leakage(&self) -> f64 {
        let p = self.projection();
        let i = self.space.corner();
        let outside = linalg::max_abs(&(&self.w - &p * &self.w * &i));
        self.space
            .leakage(&p)
            .max(self.space.leakage(&self.w))
            .max(outside)
    }

    /// The same witness in a truncation with more slots.
    pub fn with_slots(&self, slots: usize) -> Result<VnaWitness> {
        if slots < self.space.slots {
            return Err(Error::InvalidParameter(
                "cannot shrink the truncation".into(),
            ));
        }
        let to = self.space.with_slots(slots)?;
        let map = self.space.slot_map(&to);
        let mut j = linalg::zeros(to.dim(), self.j.ncols());
        let mut w = linalg::zeros(to.dim(), to.dim());
        for (k, &nk) in map.iter().enumerate() {
            j.set_row(nk, &self.j.row(k));
            for (l, &nl) in map.iter().enumerate() {
                w[(nk, nl)] = self.w[(k, l)];
            }
        }
        Ok(VnaWitness { space: to, j, w })
    }
}

/// Measurement residual and trace deficits of a tracial dilation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VnaResiduals {
    /// `E_x Σ_a ‖Ã ⊗ I − W* A W‖²_τ`.
    pub op_residual: f64,
    /// `τ^N(P − W W*)`.
    pub p1: f64,
    /// `τ(I − W* W)`.
    pub p2: f64,
    /// `τ^∞(P)`.
    pub trace_p: f64,
}

impl VnaResiduals {
    pub fn max(&self) -> f64 {
        self.op_residual.max(self.p1).max(self.p2)
    }

    pub fn certifies(&self, eps: f64) -> bool {
        self.max() <= eps
    }

    /// Larger of the two trace deficits.
    pub fn deficit(&self) -> f64 {
        self.p1.max(self.p2)
    }
}

/// Check that `s` and `ideal` fit the witness and that `τ^N` is the
/// normalised restriction of `τ^∞` to `P`.
fn check_fit(s: &TracialStrategy, ideal: &TracialStrategy, wit: &VnaWitness) -> Result<f64> {
    if ideal.algebra() != wit.space.ideal() {
        return Err(Error::Incompatible(
            "ideal algebra differs from the witness".into(),
        ));
    }
    if s.algebra().dim() != wit.j.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "J maps from dimension {}, the strategy lives in dimension {}",
            wit.j.ncols(),
            s.algebra().dim()
        )));
    }
    if s.layout() != ideal.layout() {
        return Err(Error::Incompatible(
            "strategies have different question/answer layouts".into(),
        ));
    }
    let tp = wit.space.trace(&wit.projection());
    if tp.is_nan() || tp <= 0.0 {
        return Err(Error::InvalidParameter("P has zero trace".into()));
    }
    for (range, &(_, w)) in s.algebra().ranges().iter().zip(s.algebra().blocks()) {
        let jb = wit.j.columns(range.start, range.len()).into_owned();
        let t = wit.space.trace(&(&jb * jb.adjoint())) / tp;
        if (t - w).abs() > LEAKAGE_TOL {
            return Err(Error::Incompatible(format!(
                "block of weight {w} carries trace {t} through J"
            )));
        }
    }
    for ops in s.a() {
        for op in ops {
            let leak = wit.space.leakage(&(&wit.j * op * wit.j.adjoint()));
            if leak > LEAKAGE_TOL {
                return Err(Error::SupportLeakage(leak));
            }
        }
    }
    let leak = wit.leakage();
    if leak > LEAKAGE_TOL {
        return Err(Error::SupportLeakage(leak));
    }
    Ok(tp)
}

/// `Σ_a ‖Ã ⊗ I − W* A W‖²_τ` for one question, with `jw = J* W`.
fn corner_side(wit: &VnaWitness, jw: &CMatrix, ops: &[CMatrix], tops: &[CMatrix]) -> f64 {
    ops.iter()
        .zip(tops)
        .map(|(op, top)| {
            let x = wit.space.corner_operator(top) - jw.adjoint() * op * jw;
            wit.space.gram_trace(&x)
        })
        .sum()
}

/// `Σ_a ‖W (Ã ⊗ I) W* − A‖²_{τ^N}` for one question.
fn projection_side(
    wit: &VnaWitness,
    jw: &CMatrix,
    tp: f64,
    ops: &[CMatrix],
    tops: &[CMatrix],
) -> f64 {
    let jt = wit.j.adjoint();
    ops.iter()
        .zip(tops)
        .map(|(op, top)| {
            let z = jw * wit.space.corner_operator(top) * jw.adjoint() - op;
            wit.space.gram_trace(&(z * &jt)) / tp
        })
        .sum()
}

pub fn vna_residuals(
    s: &TracialStrategy,
    ideal: &TracialStrategy,
    wit: &VnaWitness,
    nu_a: &[f64],
) -> Result<VnaResiduals> {
    let tp = check_fit(s, ideal, wit)?;
    if nu_a.len() != s.a().len() {
        return Err(Error::DimensionMismatch(
            "marginal does not match the question set".into(),
        ));
    }
    let jw = wit.j.adjoint() * &wit.w;
    let mut op_residual = 0.0;
    for (x, (ops, tops)) in s.a().iter().zip(ideal.a()).enumerate() {
        if nu_a[x] != 0.0 {
            op_residual += nu_a[x] * corner_side(wit, &jw, ops, tops);
        }
    }
    let ww = &wit.w * wit.w.adjoint();
    let wsw = wit.w.adjoint() * &wit.w;
    Ok(VnaResiduals {
        op_residual,
        p1: (tp - wit.space.trace(&ww)) / tp,
        p2: 1.0 - wit.space.trace(&wsw),
        trace_p: tp,
    })
}

/// Per-question comparison of the measurement distance on the corner and on
/// `N`, each bounded by the other up to trace deficit corrections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SideComparison {
    pub question: usize,
    pub deficit: f64,
    pub corner_side: f64,
    pub projection_side: f64,
    /// `2ε + projection_side / (1 − ε)`.
    pub corner_bound: f64,
    /// `2ε / (1 − ε) + corner_side / (1 − ε)`.
    pub projection_bound: f64,
}

impl SideComparison {
    pub fn holds(&self, slack: f64) -> bool {
        self.corner_side <= self.corner_bound + slack
            && self.projection_side <= self.projection_bound + slack
    }
}

pub fn measurement_sides(
    s: &TracialStrategy,
    ideal: &TracialStrategy,
    wit: &VnaWitness,
) -> Result<Vec<SideComparison>> {
    let tp = check_fit(s, ideal, wit)?;
    let res = vna_residuals(s, ideal, wit, &vec![1.0 / s.a().len() as f64; s.a().len()])?;
    let eps = res.deficit().max(0.0);
    if eps >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "trace deficit {eps} leaves no room for the comparison"
        )));
    }
    let jw = wit.j.adjoint() * &wit.w;
    Ok(s.a()
        .iter()
        .zip(ideal.a())
        .enumerate()
        .map(|(x, (ops, tops))| {
            let cs = corner_side(wit, &jw, ops, tops);
            let ps = projection_side(wit, &jw, tp, ops, tops);
            SideComparison {
                question: x,
                deficit: eps,
                corner_side: cs,
                projection_side: ps,
                corner_bound: 2.0 * eps + ps / (1.0 - eps),
                projection_bound: (2.0 * eps + cs) / (1.0 - eps),
            }
        })
        .collect())
}

/// `1 − δ ≤ τ^∞(P) ≤ 1/(1 − δ)` with `δ` the larger trace deficit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceSandwich {
    pub delta: f64,
    pub lower: f64,
    pub trace_p: f64,
    pub upper: f64,
}

impl TraceSandwich {
    pub fn new(res: &VnaResiduals) -> Self {
        let delta = res.deficit().max(0.0);
        let upper = if delta < 1.0 {
            1.0 / (1.0 - delta)
        } else {
            f64::INFINITY
        };
        TraceSandwich {
            delta,
            lower: 1.0 - delta,
            trace_p: res.trace_p,
            upper,
        }
    }

    pub fn holds(&self, slack: f64) -> bool {
        self.lower - slack <= self.trace_p && self.trace_p <= self.upper + slack
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Sampler;

    fn space(m: usize, k0: usize, slots: usize) -> AmpliatedSpace {
        AmpliatedSpace::new(
            TracialAlgebra::full(m).unwrap(),
            TracialAlgebra::full(k0).unwrap(),
            slots,
        )
        .unwrap()
    }

    /// `N = M ⊗ M₀` placed in slot `s` with `W` the shift from slot 0.
    fn shifted(sp: &AmpliatedSpace, slot: usize) -> (CMatrix, CMatrix) {
        let d = sp.corner_dim();
        let mut j = linalg::zeros(sp.dim(), d);
        for k in 0..d {
            j[(k * sp.slots() + slot, k)] = c(1.0);
        }
        let w = &j * sp.corner_embedding().adjoint();
        (j, w)
    }

    #[test]
    fn unitary_between_identical_strategies_is_exact() {
        let mut rng = Sampler::new(5);
        let sp = space(2, 1, 3);
        let a: Vec<_> = (0..2).map(|_| rng.pvm(2, 2)).collect();
        let s = TracialStrategy::new(TracialAlgebra::full(2).unwrap(), a, true).unwrap();
        let (j, w) = shifted(&sp, 1);
        let wit = VnaWitness::new(sp, j, w).unwrap();
        let r = vna_residuals(&s, &s, &wit, &[0.5, 0.5]).unwrap();
        assert!(r.max() < 1e-14, "{r:?}");
        assert!((r.trace_p - 1.0).abs() < 1e-14);
        assert!(TraceSandwich::new(&r).holds(0.0));
    }

    #[test]
    fn missing_rank_shows_up_as_trace_deficit() {
        let sp = space(4, 1, 2);
        let (j, mut w) = shifted(&sp, 1);
        // Drop one of four basis vectors from W: both deficits become 1/4.
        let k = sp.index(3, 0, 0);
        for r in 0..sp.dim() {
            w[(r, k)] = c(0.0);
        }
        let s = TracialStrategy::new(
            TracialAlgebra::full(4).unwrap(),
            vec![vec![linalg::identity(4)]],
            true,
        )
        .unwrap();
        let wit = VnaWitness::new(sp, j, w).unwrap();
        let r = vna_residuals(&s, &s, &wit, &[1.0]).unwrap();
        assert!((r.p1 - 0.25).abs() < 1e-14);
        assert!((r.p2 - 0.25).abs() < 1e-14);
        let sides = measurement_sides(&s, &s, &wit).unwrap();
        assert!(sides.iter().all(|sd| sd.holds(1e-12)));
    }

    #[test]
    fn leaking_witness_is_rejected() {
        let sp = AmpliatedSpace::new(
            TracialAlgebra::full(1).unwrap(),
            TracialAlgebra::new(vec![(1, 0.5), (1, 0.5)]).unwrap(),
            2,
        )
        .unwrap();
        // J mixes the two central blocks of M₀.
        let mut j = linalg::zeros(sp.dim(), 1);
        j[(sp.index(0, 0, 1), 0)] = c(0.6);
        j[(sp.index(0, 1, 1), 0)] = c(0.8);
        let w = linalg::zeros(sp.dim(), sp.dim());
        assert!(matches!(
            VnaWitness::new(sp, j, w),
            Err(Error::SupportLeakage(_))
        ));
    }

    #[test]
    fn growing_slots_keeps_residuals() {
        let mut rng = Sampler::new(9);
        let sp = space(2, 2, 2);
        let a: Vec<_> = (0..2).map(|_| rng.pvm(4, 2)).collect();
        let n = TracialAlgebra::full(4).unwrap();
        let s = TracialStrategy::new(n, a, true).unwrap();
        let ideal_ops: Vec<_> = (0..2).map(|_| rng.pvm(2, 2)).collect();
        let ideal =
            TracialStrategy::new(TracialAlgebra::full(2).unwrap(), ideal_ops, true).unwrap();
        let (j, _) = shifted(&sp, 1);
        let u = rng.haar_unitary(4);
        let w = &j * u * sp.corner_embedding().adjoint();
        let wit = VnaWitness::new(sp, j, w).unwrap();
        let r1 = vna_residuals(&s, &ideal, &wit, &[0.5, 0.5]).unwrap();
        let r2 = vna_residuals(&s, &ideal, &wit.with_slots(5).unwrap(), &[0.5, 0.5]).unwrap();
        assert!((r1.op_residual - r2.op_residual).abs() < 1e-12);
        assert!(measurement_sides(&s, &ideal, &wit)
            .unwrap()
            .iter()
            .all(|sd| sd.holds(1e-12)));
    }
}
