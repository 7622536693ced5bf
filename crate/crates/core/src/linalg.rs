//! Dense complex linear algebra for the small Hilbert spaces used throughout
//! the crate.
//!
//! Matrices are `nalgebra` dense matrices over `Complex64`. Bipartite vectors
//! on `H_A ⊗ H_B` use the row-major convention: the coefficient of
//! `|i⟩ ⊗ |j⟩` sits at index `i * dim_b + j`, so a vector reshapes into the
//! `dim_a × dim_b` coefficient matrix `Ψ` with `(X ⊗ Y) vec(Ψ) = vec(X Ψ Yᵀ)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Largest matrix dimension accepted by the dense routines.
pub const MAX_DIM: usize = 4096;
/// Relative tolerance on `‖M − M*‖` for a matrix to count as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Relative tolerance under which two eigenvalues are treated as equal.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Singular values below this (relative to `max(1, σ_max)`) count as zero.
pub const RANK_TOL: f64 = 1e-10;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn zeros(r: usize, c: usize) -> CMatrix {
    CMatrix::zeros(r, c)
}

pub fn diag_real(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        values.len(),
        values.iter().map(|&v| c(v)),
    ))
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn check_dim(d: usize) -> Result<()> {
    if d > MAX_DIM {
        Err(Error::DimensionTooLarge(d))
    } else {
        Ok(())
    }
}

pub fn check_square(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    check_dim(m.nrows())
}

/// `max |M − M*|` entrywise.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn check_hermitian(m: &CMatrix) -> Result<()> {
    check_square(m)?;
    let defect = hermitian_defect(m);
    if defect > HERMITIAN_TOL * max_abs(m).max(1.0) {
        return Err(Error::NotHermitian { defect });
    }
    Ok(())
}

/// `(M + M*) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5)
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are sorted in descending order, ties keeping the solver's
/// original index order. Column `i` of `vectors` belongs to `values[i]`.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermEig {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, i: usize) -> CVector {
        self.vectors.column(i).into_owned()
    }

    /// `Σ f(λ_i) |v_i⟩⟨v_i|`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for (j, &v) in self.values.iter().enumerate() {
            let s = c(f(v));
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        scaled * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.apply(|x| x)
    }

    /// Number of eigenvalues within `tol` of the largest one.
    pub fn top_multiplicity(&self, tol: f64) -> usize {
        match self.values.first() {
            None => 0,
            Some(&top) => self.values.iter().take_while(|&&v| top - v <= tol).count(),
        }
    }
}

pub fn herm_eig(m: &CMatrix) -> Result<HermEig> {
    check_hermitian(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(HermEig {
            values: vec![],
            vectors: zeros(0, 0),
        });
    }
    let (mut d, mut e, mut z) = tridiagonalize(hermitian_part(m));
    tridiagonal_ql(&mut d, &mut e, &mut z)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].total_cmp(&d[a]));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut vectors = zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &z.column(src));
    }
    Ok(HermEig { values, vectors })
}

// nalgebra's `SymmetricEigen` (real and complex) loses accuracy badly on
// matrices built from projections, so the decomposition is done here:
// Householder reduction to a real tridiagonal matrix, then implicit QL.

/// `A = Z T Z*` with `Z` unitary and `T` real tridiagonal, returned as the
/// diagonal, the subdiagonal (`e[i] = T[i+1, i]`, last entry zero) and `Z`.
fn tridiagonalize(mut a: CMatrix) -> (Vec<f64>, Vec<f64>, CMatrix) {
    let n = a.nrows();
    let mut z = identity(n);
    for k in 0..n.saturating_sub(2) {
        let x = a.view((k + 1, k), (n - k - 1, 1)).column(0).into_owned();
        let xnorm = x.norm();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            c(1.0)
        };
        let mut v = x;
        v[0] += phase * xnorm;
        let vnorm = v.norm();
        v /= c(vnorm);
        // A ← H A H on the trailing block with H = I − 2vv*.
        let mut block = a.view((k + 1, k + 1), (n - k - 1, n - k - 1)).into_owned();
        let p = &block * &v;
        let w = &p - &v * v.dotc(&p);
        block -= (&v * w.adjoint() + &w * v.adjoint()) * c(2.0);
        a.view_mut((k + 1, k + 1), (n - k - 1, n - k - 1))
            .copy_from(&block);
        let sub = -phase * xnorm;
        for i in k + 1..n {
            a[(i, k)] = c(0.0);
            a[(k, i)] = c(0.0);
        }
        a[(k + 1, k)] = sub;
        a[(k, k + 1)] = sub.conj();
        // Z ← Z H on columns k+1..
        let mut cols = z.view((0, k + 1), (n, n - k - 1)).into_owned();
        let zv = &cols * &v;
        cols -= &zv * v.adjoint() * c(2.0);
        z.view_mut((0, k + 1), (n, n - k - 1)).copy_from(&cols);
    }
    // A diagonal phase makes the subdiagonal real and nonnegative.
    let mut phase = c(1.0);
    let mut e = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let t = a[(k + 1, k)];
        let r = t.norm();
        e[k] = r;
        if r > 0.0 {
            phase *= t / r;
        }
        let mut col = z.column_mut(k + 1);
        col *= phase;
    }
    let d = (0..n).map(|i| a[(i, i)].re).collect();
    (d, e, z)
}

const QL_ITERATIONS: usize = 100;

/// Implicit-shift QL on a real symmetric tridiagonal matrix; the rotations
/// are applied to the columns of `z`, and `d` ends up holding the
/// eigenvalues.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z: &mut CMatrix) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_ITERATIONS {
                return Err(Error::Degenerate(
                    "eigenvalue iteration did not converge".into(),
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut cs, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = cs * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                cs = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * cs * b;
                p = s * r;
                d[i + 1] = g + p;
                g = cs * r - b;
                for k in 0..z.nrows() {
                    let f = z[(k, i + 1)];
                    z[(k, i + 1)] = z[(k, i)] * s + f * cs;
                    z[(k, i)] = z[(k, i)] * cs - f * s;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Eigenvalues only, descending.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    Ok(herm_eig(m)?.values)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> Result<f64> {
    Ok(eigenvalues(m)?.last().copied().unwrap_or(0.0))
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn max_eigenvalue(m: &CMatrix) -> Result<f64> {
    Ok(eigenvalues(m)?.first().copied().unwrap_or(0.0))
}

/// Singular value decomposition `A = U diag(σ) V*` with `σ` descending and
/// thin factors (`U` is `m × r`, `V` is `n × r`, `r = min(m, n)`).
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub sigma: Vec<f64>,
    pub v: CMatrix,
}

impl Svd {
    /// Number of singular values above the rank tolerance.
    pub fn rank(&self) -> usize {
        let cut = RANK_TOL * self.sigma.first().copied().unwrap_or(0.0).max(1.0);
        self.sigma.iter().filter(|&&s| s > cut).count()
    }
}

pub fn svd(a: &CMatrix) -> Result<Svd> {
    check_dim(a.nrows().max(a.ncols()))?;
    let (m, n) = a.shape();
    if m.min(n) == 0 {
        return Ok(Svd {
            u: zeros(m, 0),
            sigma: vec![],
            v: zeros(n, 0),
        });
    }
    if m < n {
        let t = jacobi_svd(a.adjoint());
        return Ok(Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        });
    }
    Ok(jacobi_svd(a.clone()))
}

const JACOBI_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD of a tall matrix. nalgebra's bidiagonal
/// SVD can stop early on complex matrices with clustered singular values and
/// return factors that do not reproduce the input; Jacobi rotations converge
/// to full relative accuracy instead.
fn jacobi_svd(mut w: CMatrix) -> Svd {
    let (m, n) = w.shape();
    let mut v = identity(n);
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.norm();
                if g <= f64::EPSILON * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for mat in [&mut w, &mut v] {
                    for i in 0..mat.nrows() {
                        let xp = mat[(i, p)];
                        let xq = mat[(i, q)] * phase.conj();
                        mat[(i, p)] = xp * cs - xq * sn;
                        mat[(i, q)] = (xp * sn + xq * cs) * phase;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let top = norms[order[0]];
    let mut u = zeros(m, n);
    let mut vs = zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    let mut filled = 0;
    for (dst, &src) in order.iter().enumerate() {
        vs.set_column(dst, &v.column(src));
        sigma.push(norms[src]);
        if norms[src] > f64::EPSILON * top * n as f64 && norms[src] > 0.0 {
            u.set_column(dst, &(w.column(src) / c(norms[src])));
            filled += 1;
        }
    }
    complete_columns(&mut u, filled);
    Svd { u, sigma, v: vs }
}

/// Replace columns `from..` of `u` by unit vectors orthogonal to all earlier
/// columns: at each step the standard basis vector with the largest
/// orthogonal remainder, re-orthogonalised twice.
fn complete_columns(u: &mut CMatrix, from: usize) {
    let m = u.nrows();
    for j in from..u.ncols() {
        let remainder = |i: usize, u: &CMatrix| {
            let mut x = CVector::zeros(m);
            x[i] = c(1.0);
            for _ in 0..2 {
                for k in 0..j {
                    let proj = u.column(k).dotc(&x);
                    x -= u.column(k) * proj;
                }
            }
            x
        };
        let best = (0..m)
            .map(|i| remainder(i, u))
            .max_by(|x, y| x.norm().total_cmp(&y.norm()))
            .expect("at least one row");
        let norm = best.norm();
        u.set_column(j, &(best / c(norm)));
    }
}

pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>> {
    Ok(svd(a)?.sigma)
}

/// Operator norm `‖A‖_∞`.
pub fn op_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    svd(a).map(|s| s.sigma[0]).unwrap_or(f64::NAN)
}

/// Exponents supported by [`schatten_norm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchattenP {
    One,
    Two,
    Inf,
}

impl TryFrom<f64> for SchattenP {
    type Error = Error;

    fn try_from(p: f64) -> Result<Self> {
        if p == 1.0 {
            Ok(SchattenP::One)
        } else if p == 2.0 {
            Ok(SchattenP::Two)
        } else if p == f64::INFINITY {
            Ok(SchattenP::Inf)
        } else {
            Err(Error::UnsupportedSchatten(p.to_string()))
        }
    }
}

impl std::str::FromStr for SchattenP {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(SchattenP::One),
            "2" => Ok(SchattenP::Two),
            "inf" | "∞" => Ok(SchattenP::Inf),
            other => Err(Error::UnsupportedSchatten(other.to_string())),
        }
    }
}

pub fn schatten_norm(a: &CMatrix, p: SchattenP) -> f64 {
    match p {
        SchattenP::Two => a.norm(),
        SchattenP::Inf => op_norm(a),
        SchattenP::One => singular_values(a)
            .map(|s| s.iter().sum())
            .unwrap_or(f64::NAN),
    }
}

/// Trace norm `‖A‖₁`.
pub fn trace_norm(a: &CMatrix) -> f64 {
    schatten_norm(a, SchattenP::One)
}

/// Polar decomposition `A = W P` with `P = |A|` and `W` a partial isometry
/// whose kernel equals the kernel of `A`.
#[derive(Debug, Clone)]
pub struct Polar {
    pub w: CMatrix,
    pub p: CMatrix,
}

pub fn polar(a: &CMatrix) -> Result<Polar> {
    let (m, n) = a.shape();
    let s = svd(a)?;
    let rank = s.rank();
    let mut w = zeros(m, n);
    let mut p = zeros(n, n);
    for k in 0..rank {
        let uk = s.u.column(k);
        let vk = s.v.column(k);
        w += uk * vk.adjoint();
        p += (vk * vk.adjoint()) * c(s.sigma[k]);
    }
    Ok(Polar { w, p })
}

/// Which tensor factor a partial trace removes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Partial trace of an operator on `H_A ⊗ H_B`, removing `traced`.
pub fn partial_trace(
    m: &CMatrix,
    dim_a: usize,
    dim_b: usize,
    traced: Subsystem,
) -> Result<CMatrix> {
    check_square(m)?;
    if m.nrows() != dim_a * dim_b {
        return Err(Error::DimensionMismatch(format!(
            "operator of size {} on a {dim_a}x{dim_b} system",
            m.nrows()
        )));
    }
    Ok(match traced {
        Subsystem::B => CMatrix::from_fn(dim_a, dim_a, |i, j| {
            (0..dim_b).map(|k| m[(i * dim_b + k, j * dim_b + k)]).sum()
        }),
        Subsystem::A => CMatrix::from_fn(dim_b, dim_b, |k, l| {
            (0..dim_a).map(|i| m[(i * dim_b + k, i * dim_b + l)]).sum()
        }),
    })
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

/// Reshape a bipartite vector into its `dim_a × dim_b` coefficient matrix.
pub fn unvec(psi: &CVector, dim_a: usize, dim_b: usize) -> Result<CMatrix> {
    if psi.len() != dim_a * dim_b {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} on a {dim_a}x{dim_b} system",
            psi.len()
        )));
    }
    Ok(CMatrix::from_row_slice(dim_a, dim_b, psi.as_slice()))
}

/// Row-major vectorisation, inverse of [`unvec`].
pub fn vec_of(m: &CMatrix) -> CVector {
    let (r, cols) = m.shape();
    CVector::from_fn(r * cols, |k, _| m[(k / cols, k % cols)])
}

/// `Σ_i |ii⟩ / √d`.
pub fn max_entangled(d: usize) -> CVector {
    vec_of(&identity(d)) * c(1.0 / (d as f64).sqrt())
}

/// `(X ⊗ Y) ψ` computed as `vec(X Ψ Yᵀ)`.
pub fn apply_local(x: &CMatrix, y: &CMatrix, psi: &CVector) -> Result<CVector> {
    let big = unvec(psi, x.ncols(), y.ncols())?;
    Ok(vec_of(&(x * big * y.transpose())))
}

/// `⟨ψ| X ⊗ Y |ψ⟩` computed as `Tr(Ψ* X Ψ Yᵀ)`.
pub fn expect_local(psi: &CVector, x: &CMatrix, y: &CMatrix) -> Result<C64> {
    let big = unvec(psi, x.ncols(), y.ncols())?;
    let left = big.adjoint() * x * &big;
    Ok(left.component_mul(y).sum())
}

/// Reduced density operator of a pure bipartite state on the kept factor.
pub fn reduced_density(
    psi: &CVector,
    dim_a: usize,
    dim_b: usize,
    kept: Subsystem,
) -> Result<CMatrix> {
    let big = unvec(psi, dim_a, dim_b)?;
    Ok(match kept {
        Subsystem::A => &big * big.adjoint(),
        Subsystem::B => big.transpose() * big.map(|z| z.conj()),
    })
}

pub fn outer(u: &CVector, v: &CVector) -> CMatrix {
    u * v.adjoint()
}

/// Apply a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> Result<CMatrix> {
    Ok(herm_eig(m)?.apply(f))
}

/// Square root of a positive semidefinite matrix; small negative eigenvalues
/// from rounding are clipped to zero.
pub fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    hermitian_function(m, |x| x.max(0.0).sqrt())
}

/// Schmidt decomposition `ψ = Σ_i λ_i |α_i⟩ ⊗ |β_i⟩`.
#[derive(Debug, Clone)]
pub struct Schmidt {
    pub coefficients: Vec<f64>,
    /// Columns are the `α_i`.
    pub left: CMatrix,
    /// Columns are the `β_i`.
    pub right: CMatrix,
}

impl Schmidt {
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    pub fn reconstruct(&self) -> CVector {
        let mut psi = CVector::zeros(self.left.nrows() * self.right.nrows());
        for (i, &l) in self.coefficients.iter().enumerate() {
            let a = self.left.column(i).into_owned();
            let b = self.right.column(i).into_owned();
            psi += kron_vec(&a, &b) * c(l);
        }
        psi
    }
}

/// Coefficients below this are dropped from a Schmidt decomposition.
pub const SCHMIDT_TOL: f64 = 1e-12;

pub fn schmidt(psi: &CVector, dim_a: usize, dim_b: usize) -> Result<Schmidt> {
    let s = svd(&unvec(psi, dim_a, dim_b)?)?;
    let cut = SCHMIDT_TOL * psi.norm().max(1.0);
    let r = s.sigma.iter().filter(|&&x| x > cut).count();
    Ok(Schmidt {
        coefficients: s.sigma[..r].to_vec(),
        left: s.u.columns(0, r).into_owned(),
        right: s.v.columns(0, r).map(|z| z.conj()),
    })
}

/// All `min(dim_a, dim_b)` Schmidt coefficients, descending, zeros included.
pub fn schmidt_coefficients(psi: &CVector, dim_a: usize, dim_b: usize) -> Result<Vec<f64>> {
    singular_values(&unvec(psi, dim_a, dim_b)?)
}

/// `‖P² − P‖` and `‖P − P*‖` entry maxima, used to validate projections.
pub fn projection_defect(p: &CMatrix) -> f64 {
    max_abs(&(p * p - p)).max(hermitian_defect(p))
}

/// Matrix serialisation format: nested rows of `[re, im]` pairs.
pub type MatrixRepr = Vec<Vec<[f64; 2]>>;
pub type VectorRepr = Vec<[f64; 2]>;

pub fn matrix_to_repr(m: &CMatrix) -> MatrixRepr {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

pub fn matrix_from_repr(repr: &MatrixRepr) -> Result<CMatrix> {
    let rows = repr.len();
    let cols = repr.first().map_or(0, |r| r.len());
    if repr.iter().any(|r| r.len() != cols) {
        return Err(Error::DimensionMismatch("ragged matrix rows".into()));
    }
    check_dim(rows.max(cols))?;
    Ok(CMatrix::from_fn(rows, cols, |i, j| {
        C64::new(repr[i][j][0], repr[i][j][1])
    }))
}

pub fn vector_to_repr(v: &CVector) -> VectorRepr {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn vector_from_repr(repr: &VectorRepr) -> CVector {
    CVector::from_iterator(repr.len(), repr.iter().map(|z| C64::new(z[0], z[1])))
}

/// Seeded sampler for random matrices, states and measurements.
///
/// All randomness flows from a single 64-bit seed through ChaCha8, so a seed
/// reproduces the same instances on every platform.
#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `lo..=hi`.
    pub fn int(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.gen_range(lo..=hi)
    }

    pub fn gaussian(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Standard complex Gaussian with `E|z|² = 1`.
    pub fn complex_gaussian(&mut self) -> C64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        C64::new(s * self.gaussian(), s * self.gaussian())
    }

    pub fn ginibre(&mut self, rows: usize, cols: usize) -> CMatrix {
        let mut m = zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = self.complex_gaussian();
            }
        }
        m
    }

    pub fn gaussian_vector(&mut self, d: usize) -> CVector {
        CVector::from_fn(d, |_, _| self.complex_gaussian())
    }

    /// Haar-random unitary via QR of a Ginibre matrix with phase correction.
    pub fn haar_unitary(&mut self, d: usize) -> CMatrix {
        let g = self.ginibre(d, d);
        let qr = g.qr();
        let mut q = qr.q();
        let r = qr.r();
        for j in 0..d {
            let rjj = r[(j, j)];
            let phase = if rjj.norm() > 0.0 {
                rjj / rjj.norm()
            } else {
                c(1.0)
            };
            for i in 0..d {
                q[(i, j)] *= phase;
            }
        }
        q
    }

    /// Haar-random isometry `ℂ^cols → ℂ^rows`.
    pub fn random_isometry(&mut self, rows: usize, cols: usize) -> CMatrix {
        assert!(cols <= rows, "isometry needs cols <= rows");
        self.haar_unitary(rows).columns(0, cols).into_owned()
    }

    pub fn haar_state(&mut self, d: usize) -> CVector {
        let v = self.gaussian_vector(d);
        let n = v.norm();
        v / c(n)
    }

    /// Gaussian unitary ensemble sample, scaled so entries have unit variance.
    pub fn random_hermitian(&mut self, d: usize) -> CMatrix {
        hermitian_part(&self.ginibre(d, d))
    }

    /// Random density matrix `G G* / Tr(G G*)` with `G` Ginibre.
    pub fn random_density(&mut self, d: usize) -> CMatrix {
        let g = self.ginibre(d, d);
        let rho = &g * g.adjoint();
        let t = trace(&rho).re;
        hermitian_part(&(rho / c(t)))
    }

    /// Random PVM: a Haar frame whose vectors are dealt to the outcomes, each
    /// outcome receiving at least one vector when `d >= outcomes`.
    pub fn pvm(&mut self, d: usize, outcomes: usize) -> Vec<CMatrix> {
        let u = self.haar_unitary(d);
        let mut owner: Vec<usize> = (0..d).map(|i| i % outcomes.max(1)).collect();
        for i in (1..d).rev() {
            let j = self.int(0, i);
            owner.swap(i, j);
        }
        if d < outcomes {
            for o in owner.iter_mut() {
                *o = self.int(0, outcomes - 1);
            }
        }
        let mut out = vec![zeros(d, d); outcomes];
        for (col, &a) in owner.iter().enumerate() {
            let v = u.column(col);
            out[a] += v * v.adjoint();
        }
        out
    }

    /// Random POVM `A_a = S^{-1/2} H_a S^{-1/2}` with `H_a = G_a G_a*` and
    /// `S = Σ H_a`. One outcome gives `{Id}` exactly.
    pub fn povm(&mut self, d: usize, outcomes: usize) -> Vec<CMatrix> {
        if outcomes == 1 {
            return vec![identity(d)];
        }
        let hs: Vec<CMatrix> = (0..outcomes)
            .map(|_| {
                let g = self.ginibre(d, d);
                &g * g.adjoint()
            })
            .collect();
        normalise_family(&hs)
    }

    /// A PVM pushed off projectivity by `η`: each projection gains a positive
    /// perturbation of norm `η` and the family is renormalised to sum to `Id`.
    /// `η = 0` returns the PVM untouched.
    pub fn perturbed_pvm(&mut self, d: usize, outcomes: usize, eta: f64) -> Vec<CMatrix> {
        let pvm = self.pvm(d, outcomes);
        if eta == 0.0 {
            return pvm;
        }
        let bs: Vec<CMatrix> = pvm
            .iter()
            .map(|p| {
                let g = self.ginibre(d, d);
                let h = &g * g.adjoint();
                let n = op_norm(&h);
                p + h * c(eta / n)
            })
            .collect();
        normalise_family(&bs)
    }
}

/// `S^{-1/2} H_a S^{-1/2}` with `S = Σ H_a`.
fn normalise_family(hs: &[CMatrix]) -> Vec<CMatrix> {
    let d = hs[0].nrows();
    let s = hs.iter().fold(zeros(d, d), |acc, h| acc + h);
    let s_inv_sqrt =
        hermitian_function(&hermitian_part(&s), |x| 1.0 / x.sqrt()).expect("positive sum");
    hs.iter()
        .map(|h| hermitian_part(&(&s_inv_sqrt * h * &s_inv_sqrt)))
        .collect()
}

/// Kinds of random instance produced by [`random_instance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InstanceKind {
    HaarUnitary {
        dim: usize,
    },
    HaarState {
        dim: usize,
    },
    Povm {
        dim: usize,
        outcomes: usize,
    },
    PerturbedPvm {
        dim: usize,
        outcomes: usize,
        eta: f64,
    },
}

#[derive(Debug, Clone)]
pub enum Instance {
    Unitary(CMatrix),
    State(CVector),
    Measurement(Vec<CMatrix>),
}

pub fn random_instance(seed: u64, kind: InstanceKind) -> Result<Instance> {
    let mut s = Sampler::new(seed);
    Ok(match kind {
        InstanceKind::HaarUnitary { dim } => {
            check_dim(dim)?;
            Instance::Unitary(s.haar_unitary(dim))
        }
        InstanceKind::HaarState { dim } => {
            check_dim(dim)?;
            Instance::State(s.haar_state(dim))
        }
        InstanceKind::Povm { dim, outcomes } => {
            check_dim(dim)?;
            if outcomes == 0 {
                return Err(Error::InvalidParameter(
                    "a POVM needs at least one outcome".into(),
                ));
            }
            Instance::Measurement(s.povm(dim, outcomes))
        }
        InstanceKind::PerturbedPvm { dim, outcomes, eta } => {
            check_dim(dim)?;
            if outcomes == 0 || !(0.0..=1.0).contains(&eta) {
                return Err(Error::InvalidParameter(format!(
                    "outcomes={outcomes}, eta={eta}"
                )));
            }
            Instance::Measurement(s.perturbed_pvm(dim, outcomes, eta))
        }
    })
}

/// Largest violation of positivity and completeness for a measurement.
pub fn povm_defect(ops: &[CMatrix]) -> Result<f64> {
    let d = ops.first().map_or(0, |m| m.nrows());
    let mut worst: f64 = 0.0;
    let mut sum = zeros(d, d);
    for op in ops {
        check_hermitian(op)?;
        if op.nrows() != d {
            return Err(Error::DimensionMismatch(
                "measurement operators differ in size".into(),
            ));
        }
        worst = worst.max(-min_eigenvalue(op)?);
        sum += op;
    }
    Ok(worst.max(max_abs(&(sum - identity(d)))))
}

/// `max_a ‖A_a² − A_a‖`, zero exactly for projective measurements.
pub fn pvm_residual(ops: &[CMatrix]) -> f64 {
    ops.iter().map(projection_defect).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
    }

    fn pauli_z() -> CMatrix {
        diag_real(&[1.0, -1.0])
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn eig_of_diagonal() {
        let e = herm_eig(&diag_real(&[1.0, -1.0])).unwrap();
        assert_eq!(e.values, vec![1.0, -1.0]);
    }

    #[test]
    fn eig_of_pauli_x() {
        let e = herm_eig(&pauli_x()).unwrap();
        assert!(close(e.values[0], 1.0, 1e-14) && close(e.values[1], -1.0, 1e-14));
        let v = e.vector(0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(v[0].norm(), s, 1e-12) && close(v[1].norm(), s, 1e-12));
        assert!(close((v[0] - v[1]).norm(), 0.0, 1e-12));
    }

    #[test]
    fn eig_of_two_qubit_test_operator() {
        let xx = kron(&pauli_x(), &pauli_x());
        let zz = kron(&pauli_z(), &pauli_z());
        let t = identity(4) * c(0.5) + (xx + zz) * c(0.25);
        let e = herm_eig(&t).unwrap();
        for (got, want) in e.values.iter().zip([1.0, 0.5, 0.5, 0.0]) {
            assert!(close(*got, want, 1e-14));
        }
        assert_eq!(e.top_multiplicity(1e-9), 1);
    }

    #[test]
    fn eig_rejects_bad_input() {
        assert!(matches!(
            herm_eig(&zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
        let mut m = identity(2);
        m[(0, 1)] = c(1.0);
        assert!(matches!(herm_eig(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn schmidt_examples() {
        let mut e00 = CVector::zeros(4);
        e00[0] = c(1.0);
        let s = schmidt(&e00, 2, 2).unwrap();
        assert_eq!(s.rank(), 1);
        assert!(close(s.coefficients[0], 1.0, 1e-14));

        let s = schmidt(&max_entangled(3), 3, 3).unwrap();
        assert_eq!(s.rank(), 3);
        for l in &s.coefficients {
            assert!(close(*l, 1.0 / 3f64.sqrt(), 1e-14));
        }

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = CVector::from_vec(vec![c(h), c(h), c(0.0), c(0.0)]);
        let s = schmidt(&psi, 2, 2).unwrap();
        assert_eq!(s.rank(), 1);
        let beta = s.right.column(0);
        assert!(close(beta[0].norm(), h, 1e-12) && close(beta[1].norm(), h, 1e-12));
        assert!((s.reconstruct() - psi).norm() < 1e-12);
    }

    #[test]
    fn schmidt_matches_reduced_spectrum() {
        let mut s = Sampler::new(7);
        for _ in 0..20 {
            let (da, db) = (s.int(1, 6), s.int(1, 6));
            let psi = s.haar_state(da * db);
            let coeffs = schmidt_coefficients(&psi, da, db).unwrap();
            let rho = reduced_density(&psi, da, db, Subsystem::A).unwrap();
            let spec = eigenvalues(&rho).unwrap();
            for (k, l) in coeffs.iter().enumerate() {
                assert!(close(l * l, spec[k], 1e-12));
            }
            let dec = schmidt(&psi, da, db).unwrap();
            assert!((dec.reconstruct() - &psi).norm() < 1e-12);
        }
    }

    #[test]
    fn polar_examples() {
        let mut s = Sampler::new(3);
        let u = s.haar_unitary(3);
        let p = polar(&u).unwrap();
        assert!(max_abs(&(&p.w - &u)) < 1e-12);
        assert!(max_abs(&(&p.p - identity(3))) < 1e-12);

        let p = polar(&zeros(2, 2)).unwrap();
        assert_eq!(max_abs(&p.w), 0.0);
        assert_eq!(max_abs(&p.p), 0.0);

        let p = polar(&diag_real(&[3.0, 0.0])).unwrap();
        assert!(max_abs(&(&p.w - diag_real(&[1.0, 0.0]))) < 1e-14);
        assert!(max_abs(&(&p.p - diag_real(&[3.0, 0.0]))) < 1e-14);
    }

    #[test]
    fn polar_rectangular_is_partial_isometry() {
        let mut s = Sampler::new(11);
        let a = s.ginibre(5, 3);
        let p = polar(&a).unwrap();
        assert!(max_abs(&(&p.w * &p.p - &a)) < 1e-12);
        let wstar_w = p.w.adjoint() * &p.w;
        assert!(max_abs(&(&wstar_w * &wstar_w - &wstar_w)) < 1e-12);
    }

    #[test]
    fn schatten_examples() {
        assert!(close(
            schatten_norm(&identity(4), SchattenP::One),
            4.0,
            1e-12
        ));
        assert!(close(schatten_norm(&pauli_z(), SchattenP::Inf), 1.0, 1e-12));
        assert!(close(
            schatten_norm(&diag_real(&[3.0, -4.0]), SchattenP::Two),
            5.0,
            1e-12
        ));
        assert!(SchattenP::try_from(3.0).is_err());
        assert!("0.5".parse::<SchattenP>().is_err());
    }

    #[test]
    fn partial_trace_examples() {
        let phi = max_entangled(2);
        let rho = outer(&phi, &phi);
        let ra = partial_trace(&rho, 2, 2, Subsystem::B).unwrap();
        assert!(max_abs(&(ra - identity(2) * c(0.5))) < 1e-14);

        let mut s = Sampler::new(5);
        let r = s.random_density(2);
        let sigma = s.random_density(3) * c(2.5);
        let got = partial_trace(&kron(&r, &sigma), 2, 3, Subsystem::B).unwrap();
        assert!(max_abs(&(got - &r * trace(&sigma))) < 1e-12);

        let mut e00 = CVector::zeros(4);
        e00[0] = c(1.0);
        let rb = partial_trace(&outer(&e00, &e00), 2, 2, Subsystem::A).unwrap();
        assert!(max_abs(&(rb - diag_real(&[1.0, 0.0]))) < 1e-14);
    }

    #[test]
    fn reduced_density_agrees_with_partial_trace() {
        let mut s = Sampler::new(9);
        let psi = s.haar_state(12);
        let rho = outer(&psi, &psi);
        for (kept, traced) in [(Subsystem::A, Subsystem::B), (Subsystem::B, Subsystem::A)] {
            let fast = reduced_density(&psi, 3, 4, kept).unwrap();
            let slow = partial_trace(&rho, 3, 4, traced).unwrap();
            assert!(max_abs(&(fast - slow)) < 1e-14);
        }
    }

    #[test]
    fn local_operators_act_by_vectorisation() {
        let mut s = Sampler::new(2);
        let psi = s.haar_state(6);
        let x = s.ginibre(2, 2);
        let y = s.ginibre(3, 3);
        let direct = kron(&x, &y) * &psi;
        assert!((apply_local(&x, &y, &psi).unwrap() - &direct).norm() < 1e-12);
        let e = expect_local(&psi, &x, &y).unwrap();
        assert!((e - psi.dotc(&direct)).norm() < 1e-12);
    }

    #[test]
    fn random_measurements_are_valid() {
        let mut s = Sampler::new(13);
        let m = s.povm(4, 3);
        assert!(povm_defect(&m).unwrap() <= 1e-10);
        for op in &m {
            assert!(min_eigenvalue(op).unwrap() >= -1e-12);
        }
        let p = s.perturbed_pvm(4, 3, 0.0);
        assert!(pvm_residual(&p) < 1e-12);
        let q = s.perturbed_pvm(4, 3, 0.05);
        assert!(povm_defect(&q).unwrap() <= 1e-10);
        assert!(pvm_residual(&q) > 1e-6);
        let one = s.povm(3, 1);
        assert_eq!(one, vec![identity(3)]);
    }

    #[test]
    fn sampler_is_deterministic() {
        let a = Sampler::new(42).haar_unitary(4);
        let b = Sampler::new(42).haar_unitary(4);
        assert_eq!(a, b);
        let u = &a;
        assert!(max_abs(&(u.adjoint() * u - identity(4))) < 1e-12);
    }

    #[test]
    fn matrix_repr_roundtrip() {
        let mut s = Sampler::new(1);
        let m = s.ginibre(2, 3);
        assert_eq!(matrix_from_repr(&matrix_to_repr(&m)).unwrap(), m);
        assert!(matrix_from_repr(&vec![vec![[0.0, 0.0]], vec![]]).is_err());
    }

    fn svd_residuals(a: &CMatrix) -> (f64, f64, f64) {
        let s = svd(a).unwrap();
        let r = s.sigma.len();
        let mut rec = zeros(a.nrows(), a.ncols());
        for k in 0..r {
            rec += s.u.column(k) * s.v.column(k).adjoint() * c(s.sigma[k]);
        }
        (
            (rec - a).norm(),
            (s.u.adjoint() * &s.u - identity(r)).norm(),
            (s.v.adjoint() * &s.v - identity(r)).norm(),
        )
    }

    // Compressions of isometries have many singular values equal to one;
    // this is where a bidiagonal solver can stop on a wrong answer.
    #[test]
    fn svd_of_compressed_isometries() {
        let mut rng = Sampler::new(10142276217164298827);
        for _ in 0..300 {
            let rows = rng.int(2, 10);
            let cols = rng.int(1, rows);
            let v = rng.random_isometry(rows, cols);
            let r = rng.int(1, rows);
            let q = rng.random_isometry(rows, r);
            for a in [&q * q.adjoint() * &v, (&q * q.adjoint() * &v).adjoint()] {
                let (rec, uu, vv) = svd_residuals(&a);
                assert!(
                    rec < 1e-12 && uu < 1e-12 && vv < 1e-12,
                    "{rec:e} {uu:e} {vv:e}"
                );
                assert!(singular_values(&a).unwrap()[0] <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn svd_of_rank_deficient_matrix_has_orthonormal_factors() {
        let mut rng = Sampler::new(8);
        let a = rng.ginibre(5, 2) * rng.ginibre(2, 4);
        let (rec, uu, vv) = svd_residuals(&a);
        assert!(rec < 1e-12 && uu < 1e-12 && vv < 1e-12);
        let s = singular_values(&a).unwrap();
        assert!(s[2] < 1e-12 && s[3] < 1e-12 && s[1] > 1e-3);
        let (rec, uu, vv) = svd_residuals(&zeros(3, 2));
        assert!(rec == 0.0 && uu < 1e-12 && vv < 1e-12);
    }

    #[test]
    fn eig_of_compressed_projections() {
        let mut rng = Sampler::new(3);
        for _ in 0..300 {
            let d = rng.int(2, 10);
            let (r1, r2) = (rng.int(1, d), rng.int(1, d));
            let p = rng.random_isometry(d, r1);
            let q = rng.random_isometry(d, r2);
            let m = &p * p.adjoint() * &q * q.adjoint() * &p * p.adjoint();
            let e = herm_eig(&m).unwrap();
            assert!((e.reconstruct() - &m).norm() < 1e-12);
            assert!((e.vectors.adjoint() * &e.vectors - identity(d)).norm() < 1e-12);
            assert!(e.values[0] <= 1.0 + 1e-12 && *e.values.last().unwrap() >= -1e-12);
        }
    }
}
