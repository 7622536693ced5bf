//! The quantum low-degree test built from a binary linear code.
//!
//! A code is given by a `k × n` generator `E`; message `a ∈ F₂^k` encodes to
//! `Σ_i a_i E_i`. The test's Pauli observables are indexed by the columns
//! `c_j ∈ F₂^k` of `E`, and its game polynomial is
//!
//! ```text
//! T = 1/2 + 1/(4n) Σ_{W ∈ {X, Z}} Σ_j σ^W(c_j) ⊗ σ^W(c_j)
//! ```
//!
//! on `(ℂ²)^{⊗k} ⊗ (ℂ²)^{⊗k}`. Qubit `i` of a message is tensor factor `i`,
//! most significant first, and Alice's qubit `i` is paired with Bob's qubit
//! `i` in the Bell frame.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{self, Game};
use crate::linalg::{self, c, CMatrix};
use crate::strategies::BipartiteStrategy;

/// Largest message length accepted by the distance enumeration.
pub const MAX_ENUM_K: usize = 24;
/// Largest message length for which the `4^k`-dimensional operator is built.
pub const MAX_DENSE_K: usize = 6;
/// Largest message length for Pauli words.
pub const MAX_PAULI_K: usize = 12;

/// A raw binary generator matrix, not necessarily of full rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generator {
    k: usize,
    n: usize,
    rows: Vec<Vec<u64>>,
}

fn words(n: usize) -> usize {
    n.div_ceil(64)
}

impl Generator {
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::InvalidCode("generator has no rows".into()));
        }
        let n = rows[0].len();
        if n == 0 {
            return Err(Error::InvalidCode("generator has no columns".into()));
        }
        if k > 64 {
            return Err(Error::InvalidCode(format!("k = {k} exceeds 64")));
        }
        let mut packed = Vec::with_capacity(k);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidCode(format!(
                    "row {i} has length {}, expected {n}",
                    row.len()
                )));
            }
            let mut w = vec![0u64; words(n)];
            for (j, &bit) in row.iter().enumerate() {
                match bit {
                    0 => {}
                    1 => w[j / 64] |= 1 << (j % 64),
                    other => return Err(Error::InvalidCode(format!("entry {other} is not a bit"))),
                }
            }
            packed.push(w);
        }
        Ok(Generator { k, n, rows: packed })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bit(&self, i: usize, j: usize) -> bool {
        self.rows[i][j / 64] >> (j % 64) & 1 == 1
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.k)
            .map(|i| (0..self.n).map(|j| self.bit(i, j) as u8).collect())
            .collect()
    }

    /// Column `j` as a `k`-bit mask, bit `i` holding `E_{ij}`.
    pub fn column(&self, j: usize) -> u64 {
        (0..self.k).fold(0, |acc, i| acc | (self.bit(i, j) as u64) << i)
    }

    pub fn columns(&self) -> Vec<u64> {
        (0..self.n).map(|j| self.column(j)).collect()
    }

    /// Rank over F₂.
    pub fn rank(&self) -> usize {
        let mut rows = self.rows.clone();
        let mut rank = 0;
        for col in 0..self.n {
            let (w, b) = (col / 64, col % 64);
            let Some(p) = (rank..self.k).find(|&r| rows[r][w] >> b & 1 == 1) else {
                continue;
            };
            rows.swap(rank, p);
            let pivot = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row[w] >> b & 1 == 1 {
                    row.iter_mut().zip(&pivot).for_each(|(x, y)| *x ^= y);
                }
            }
            rank += 1;
        }
        rank
    }

    /// Codeword `Σ_i a_i E_i` packed into 64-bit words.
    pub fn encode(&self, a: u64) -> Vec<u64> {
        let mut out = vec![0u64; words(self.n)];
        for i in 0..self.k {
            if a >> i & 1 == 1 {
                out.iter_mut().zip(&self.rows[i]).for_each(|(x, y)| *x ^= y);
            }
        }
        out
    }

    pub fn encoded_weight(&self, a: u64) -> usize {
        self.encode(a).iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Parse either a text file (one row of `0`/`1` per line, `#` comments) or
    /// JSON (an array of bit arrays, or `{"rows": [...]}`).
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('[') || trimmed.starts_with('{') {
            #[derive(Deserialize)]
            #[serde(untagged)]
            enum CodeJson {
                Rows(Vec<Vec<u8>>),
                Object { rows: Vec<Vec<u8>> },
            }
            let parsed: CodeJson = serde_json::from_str(text).map_err(|e| {
                Error::InvalidCode(format!("line {} column {}: {e}", e.line(), e.column()))
            })?;
            let rows = match parsed {
                CodeJson::Rows(r) | CodeJson::Object { rows: r } => r,
            };
            return Generator::from_rows(&rows);
        }
        let mut rows = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut row = Vec::new();
            for ch in line.chars().filter(|c| !c.is_whitespace() && *c != ',') {
                match ch {
                    '0' => row.push(0),
                    '1' => row.push(1),
                    other => {
                        return Err(Error::InvalidCode(format!(
                            "line {}: unexpected character {other:?}",
                            ln + 1
                        )))
                    }
                }
            }
            rows.push(row);
        }
        Generator::from_rows(&rows)
    }
}

/// A binary linear code with a full-rank generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeF2 {
    gen: Generator,
}

impl CodeF2 {
    pub fn new(gen: Generator) -> Result<Self> {
        if gen.k > gen.n {
            return Err(Error::InvalidCode(format!(
                "k = {} exceeds n = {}",
                gen.k, gen.n
            )));
        }
        let r = gen.rank();
        if r != gen.k {
            return Err(Error::InvalidCode(format!(
                "generator rows are dependent (rank {r} < k = {})",
                gen.k
            )));
        }
        Ok(CodeF2 { gen })
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        CodeF2::new(Generator::from_rows(rows)?)
    }

    pub fn generator(&self) -> &Generator {
        &self.gen
    }

    pub fn k(&self) -> usize {
        self.gen.k
    }

    pub fn n(&self) -> usize {
        self.gen.n
    }

    pub fn encode(&self, a: u64) -> Vec<u64> {
        self.gen.encode(a)
    }

    /// `[n, 1]` repetition code.
    pub fn repetition(n: usize) -> Result<Self> {
        CodeF2::from_rows(&[vec![1; n]])
    }

    /// `[7, 4, 3]` Hamming code.
    pub fn hamming7() -> Self {
        let rows = [
            vec![1, 0, 0, 0, 1, 1, 0],
            vec![0, 1, 0, 0, 1, 0, 1],
            vec![0, 0, 1, 0, 0, 1, 1],
            vec![0, 0, 0, 1, 1, 1, 1],
        ];
        CodeF2::from_rows(&rows).expect("Hamming generator is valid")
    }

    /// `[n, n, 1]` identity code.
    pub fn identity(n: usize) -> Result<Self> {
        CodeF2::from_rows(
            &(0..n)
                .map(|i| (0..n).map(|j| (i == j) as u8).collect())
                .collect::<Vec<_>>(),
        )
    }
}

/// Minimum distance and relative distance of a code.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Distance {
    pub d: usize,
    pub relative: f64,
}

/// Minimum weight of `Σ_i a_i E_i` over `a ≠ 0`, by Gray-code enumeration.
/// A rank-deficient generator has distance zero.
pub fn generator_distance(gen: &Generator) -> Result<Distance> {
    let k = gen.k;
    if k > MAX_ENUM_K {
        return Err(Error::InvalidCode(format!(
            "k = {k} exceeds the enumeration limit {MAX_ENUM_K}"
        )));
    }
    let total: u64 = 1 << k;
    let chunk_bits = k.min(14);
    let chunk: u64 = 1 << chunk_bits;
    let best = (0..total / chunk)
        .into_par_iter()
        .map(|c| {
            let start = c * chunk;
            let mut word = gen.encode(start ^ (start >> 1));
            let mut best = if start == 0 {
                usize::MAX
            } else {
                word.iter().map(|w| w.count_ones() as usize).sum()
            };
            for i in start + 1..start + chunk {
                let row = &gen.rows[i.trailing_zeros() as usize];
                word.iter_mut().zip(row).for_each(|(x, y)| *x ^= y);
                best = best.min(word.iter().map(|w| w.count_ones() as usize).sum());
            }
            best
        })
        .min()
        .unwrap_or(usize::MAX);
    let d = if best == usize::MAX { gen.n } else { best };
    Ok(Distance {
        d,
        relative: d as f64 / gen.n as f64,
    })
}

pub fn code_distance(code: &CodeF2) -> Result<Distance> {
    generator_distance(&code.gen)
}

/// Pauli type of a word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PauliKind {
    X,
    Z,
}

/// Map a message mask (bit `i` = qubit `i`) to a basis-index mask (qubit `i`
/// is bit `k − 1 − i`).
fn spread(mask: u64, k: usize) -> usize {
    (0..k).fold(0usize, |acc, i| {
        acc | ((mask >> i & 1) as usize) << (k - 1 - i)
    })
}

/// `⊗_i X^{a_i}` or `⊗_i Z^{a_i}` on `k` qubits.
pub fn pauli_word(kind: PauliKind, mask: u64, k: usize) -> Result<CMatrix> {
    if k > MAX_PAULI_K {
        return Err(Error::InvalidParameter(format!(
            "k = {k} exceeds {MAX_PAULI_K}"
        )));
    }
    if mask >> k != 0 {
        return Err(Error::InvalidParameter(format!(
            "mask {mask:#b} has bits beyond {k} qubits"
        )));
    }
    let dim = 1usize << k;
    let m = spread(mask, k);
    let mut out = linalg::zeros(dim, dim);
    for x in 0..dim {
        match kind {
            PauliKind::X => out[(x ^ m, x)] = c(1.0),
            PauliKind::Z => out[(x, x)] = c(parity(x & m)),
        }
    }
    Ok(out)
}

fn parity(x: usize) -> f64 {
    if x.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// The test operator `T` on `4^k` dimensions.
pub fn qldt_polynomial(code: &CodeF2) -> Result<CMatrix> {
    let k = code.k();
    if k > MAX_DENSE_K {
        return Err(Error::InvalidParameter(format!(
            "dense operator needs k <= {MAX_DENSE_K}, got {k}"
        )));
    }
    let d = 1usize << k;
    let n = code.n();
    let w = 1.0 / (4.0 * n as f64);
    let mut t = linalg::identity(d * d) * c(0.5);
    for col in code.gen.columns() {
        let m = spread(col, k);
        for x in 0..d {
            for y in 0..d {
                let from = x * d + y;
                let to = (x ^ m) * d + (y ^ m);
                t[(to, from)] += c(w);
                t[(from, from)] += c(w * parity(x & m) * parity(y & m));
            }
        }
    }
    Ok(t)
}

/// `1 − (|E a| + |E b|) / (2n)`, the eigenvalue of `T` on the Bell vector
/// `ψ_{ab}`.
pub fn bell_eigenvalue(code: &CodeF2, a: u64, b: u64) -> f64 {
    let n = code.n() as f64;
    1.0 - (code.gen.encoded_weight(a) + code.gen.encoded_weight(b)) as f64 / (2.0 * n)
}

/// Bell vector `ψ_{ab}`: coefficient `2^{-k/2} (−1)^{b·x}` on `|x⟩|x ⊕ a⟩`,
/// the product of `(|0 a_i⟩ + (−1)^{b_i} |1 ā_i⟩)/√2` over qubit pairs.
pub fn bell_vector(a: u64, b: u64, k: usize) -> linalg::CVector {
    let d = 1usize << k;
    let (am, bm) = (spread(a, k), spread(b, k));
    let s = 1.0 / (d as f64).sqrt();
    let mut v = linalg::CVector::zeros(d * d);
    for x in 0..d {
        v[x * d + (x ^ am)] = c(s * parity(x & bm));
    }
    v
}

/// Matrix whose column `a·2^k + b` is `ψ_{ab}`.
pub fn bell_frame(k: usize) -> CMatrix {
    let d = 1usize << k;
    let mut m = linalg::zeros(d * d, d * d);
    for a in 0..d as u64 {
        for b in 0..d as u64 {
            m.set_column(a as usize * d + b as usize, &bell_vector(a, b, k));
        }
    }
    m
}

/// `T` in the Bell frame: the largest off-diagonal modulus and the diagonal.
pub fn bell_frame_residual(code: &CodeF2) -> Result<(f64, Vec<f64>)> {
    let t = qldt_polynomial(code)?;
    let f = bell_frame(code.k());
    let rotated = f.adjoint() * t * &f;
    let n = rotated.nrows();
    let mut off: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off = off.max(rotated[(i, j)].norm());
            }
        }
    }
    Ok((off, (0..n).map(|i| rotated[(i, i)].re).collect()))
}

/// How [`qldt_gap`] computes the gap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GapMethod {
    /// `d / (2n)` from the minimum distance.
    Fast,
    /// Diagonalise the `4^k`-dimensional operator.
    Dense,
    /// Sort the closed-form Bell eigenvalues.
    Bell,
}

impl std::str::FromStr for GapMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(GapMethod::Fast),
            "dense" => Ok(GapMethod::Dense),
            "bell" => Ok(GapMethod::Bell),
            other => Err(Error::InvalidParameter(format!(
                "unknown gap method {other:?}"
            ))),
        }
    }
}

pub fn qldt_gap(code: &CodeF2, method: GapMethod) -> Result<f64> {
    match method {
        GapMethod::Fast => Ok(code_distance(code)?.relative / 2.0),
        GapMethod::Dense => games::spectral_gap(&qldt_polynomial(code)?),
        GapMethod::Bell => {
            let k = code.k();
            if k > MAX_PAULI_K {
                return Err(Error::InvalidParameter(format!(
                    "Bell enumeration needs k <= {MAX_PAULI_K}"
                )));
            }
            let weights: Vec<usize> = (0..1u64 << k).map(|a| code.gen.encoded_weight(a)).collect();
            let n = code.n() as f64;
            let mut values: Vec<f64> = weights
                .iter()
                .flat_map(|wa| {
                    weights
                        .iter()
                        .map(move |wb| 1.0 - (wa + wb) as f64 / (2.0 * n))
                })
                .collect();
            values.sort_by(|x, y| y.total_cmp(x));
            Ok(games::top_spectrum_of(&values, 1.0)?.gap)
        }
    }
}

/// The Pauli-pair part of the test as an explicit game with its ideal
/// strategy.
///
/// For each type `W`, column `j` and copy `i ∈ {1, 2}` there is a question
/// `"{W}{j}.{i}"` with answers `0`/`1`; the pair `(W j.1, W j.2)` is asked in
/// either order with probability `1/(4n)` each and won on equal answers. The
/// ideal strategy measures the spectral projections of `σ^W(c_j)` on the
/// maximally entangled state.
pub fn stabilizer_game(code: &CodeF2) -> Result<(Game, BipartiteStrategy)> {
    let (k, n) = (code.k(), code.n());
    if k > MAX_DENSE_K {
        return Err(Error::InvalidParameter(format!(
            "explicit game needs k <= {MAX_DENSE_K}"
        )));
    }
    let mut labels = Vec::new();
    let mut family = Vec::new();
    let d = 1usize << k;
    for kind in [PauliKind::X, PauliKind::Z] {
        for (j, col) in code.gen.columns().into_iter().enumerate() {
            let word = pauli_word(kind, col, k)?;
            let plus = (linalg::identity(d) + &word) * c(0.5);
            let minus = (linalg::identity(d) - &word) * c(0.5);
            for copy in 1..=2 {
                labels.push(format!("{kind:?}{}.{copy}", j + 1));
                family.push(vec![plus.clone(), minus.clone()]);
            }
        }
    }
    let q = labels.len();
    let mut nu = vec![0.0; q * q];
    let w = 1.0 / (4.0 * n as f64);
    for p in 0..q / 2 {
        nu[2 * p * q + 2 * p + 1] = w;
        nu[(2 * p + 1) * q + 2 * p] = w;
    }
    let answers = vec![vec!["0".to_string(), "1".to_string()]; q];
    let game = Game::new(labels, answers, nu, |x, y, a, b| {
        x / 2 == y / 2 && x != y && a == b
    })?;
    let strategy = BipartiteStrategy::maximally_entangled(family)?;
    Ok((game, strategy))
}

/// Summary of the qubit test built from a generator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QubitTestReport {
    pub k: usize,
    pub n: usize,
    /// Columns of the generator as bit strings, used for both `S_X` and `S_Z`.
    pub columns: Vec<String>,
    pub rank: usize,
    /// Whether the columns span `F₂^k`.
    pub spans: bool,
    pub distance: usize,
    pub relative_distance: f64,
    pub gap: f64,
    pub synchronised: SynchronisedParameters,
}

/// Question distribution of the β-synchronised Pauli-pair test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynchronisedParameters {
    pub beta: f64,
    /// Weight `1/(4n)` of each ordered Pauli pair before synchronisation.
    pub pair_weight: f64,
    /// Weight of each ordered pair after synchronisation, `(1 − β)/(4n)`.
    pub synchronised_pair_weight: f64,
    /// Mass moved to each diagonal question, `β/(4n)`.
    pub diagonal_weight: f64,
    /// Constant `c` with `ν' ≤ c ν` for the renormalised Pauli-pair
    /// restriction.
    pub renormalization_factor: f64,
}

pub fn qubit_test_report(gen: &Generator, beta: f64) -> Result<QubitTestReport> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "β = {beta} is outside (0, 1)"
        )));
    }
    let rank = gen.rank();
    let spans = rank == gen.k;
    let dist = generator_distance(gen)?;
    let n = gen.n as f64;
    let pair = 1.0 / (4.0 * n);
    Ok(QubitTestReport {
        k: gen.k,
        n: gen.n,
        columns: gen
            .columns()
            .iter()
            .map(|&c| {
                (0..gen.k)
                    .map(|i| if c >> i & 1 == 1 { '1' } else { '0' })
                    .collect()
            })
            .collect(),
        rank,
        spans,
        distance: dist.d,
        relative_distance: dist.relative,
        gap: if spans { dist.relative / 2.0 } else { 0.0 },
        synchronised: SynchronisedParameters {
            beta,
            pair_weight: pair,
            synchronised_pair_weight: (1.0 - beta) * pair,
            diagonal_weight: beta * pair,
            renormalization_factor: 4.0,
        },
    })
}

/// Arithmetic in `GF(2^t)` for `t ≤ 4`, elements as bit vectors of
/// polynomial-basis coefficients.
#[derive(Debug, Clone, Copy)]
struct Gf2t {
    t: u32,
    modulus: u32,
}

impl Gf2t {
    fn new(t: u32) -> Result<Self> {
        let modulus = match t {
            1 => 0b11,
            2 => 0b111,
            3 => 0b1011,
            4 => 0b10011,
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "field extension degree {t} is not in 1..=4"
                )))
            }
        };
        Ok(Gf2t { t, modulus })
    }

    fn size(&self) -> u32 {
        1 << self.t
    }

    fn mul(&self, a: u32, b: u32) -> u32 {
        let mut acc = 0u32;
        for i in 0..self.t {
            if b >> i & 1 == 1 {
                acc ^= a << i;
            }
        }
        for i in (self.t..2 * self.t).rev() {
            if acc >> i & 1 == 1 {
                acc ^= self.modulus << (i - self.t);
            }
        }
        acc
    }

    fn pow(&self, a: u32, e: u32) -> u32 {
        (0..e).fold(1, |acc, _| self.mul(acc, a))
    }

    /// Absolute trace `a + a² + … + a^{2^{t−1}}`, which lies in `F₂`.
    fn trace(&self, a: u32) -> u32 {
        let mut s = 0;
        let mut p = a;
        for _ in 0..self.t {
            s ^= p;
            p = self.mul(p, p);
        }
        s
    }
}

/// Binary Reed-Muller-type code with parameters `(t, m, d)`: polynomials over
/// `GF(2^t)` in `m` variables with individual degree at most `d`, evaluated on
/// `GF(2^t)^m` and concatenated with the Hadamard code through the field trace.
/// Length `2^{t(m+1)}`, dimension `t (d+1)^m`.
pub fn reed_muller(t: u32, m: u32, d: u32) -> Result<CodeF2> {
    let field = Gf2t::new(t)?;
    let q = field.size();
    if d >= q {
        return Err(Error::InvalidParameter(format!(
            "individual degree {d} must be below the field size {q}"
        )));
    }
    if m == 0 || t * (m + 1) > 16 {
        return Err(Error::InvalidParameter(format!(
            "(t, m) = ({t}, {m}) gives an unsupported length"
        )));
    }
    let points = q.pow(m) as usize;
    let n = points * q as usize;
    let exps: Vec<Vec<u32>> = (0..(d + 1).pow(m))
        .map(|mut e| {
            (0..m)
                .map(|_| {
                    let v = e % (d + 1);
                    e /= d + 1;
                    v
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::new();
    for e in &exps {
        let monomial: Vec<u32> = (0..points)
            .map(|mut p| {
                let mut val = 1;
                for &ei in e {
                    let xi = (p % q as usize) as u32;
                    p /= q as usize;
                    val = field.mul(val, field.pow(xi, ei));
                }
                val
            })
            .collect();
        for l in 0..t {
            let beta = 1u32 << l;
            let mut row = Vec::with_capacity(n);
            for &f in &monomial {
                let coeff = field.mul(beta, f);
                for y in 0..q {
                    row.push(field.trace(field.mul(y, coeff)) as u8);
                }
            }
            rows.push(row);
        }
    }
    CodeF2::from_rows(&rows)
}

/// `½ (1 − m d / 2^t) 2^{t(m+1)}`, the distance guaranteed for
/// [`reed_muller`].
pub fn reed_muller_distance_bound(t: u32, m: u32, d: u32) -> f64 {
    0.5 * (1.0 - (m * d) as f64 / (1u64 << t) as f64) * (1u64 << (t * (m + 1))) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Column-parity weight, independent of the packed-row encoder.
    fn naive_distance(code: &CodeF2) -> usize {
        let cols = code.generator().columns();
        (1..1u64 << code.k())
            .map(|a| {
                cols.iter()
                    .filter(|&&c| (a & c).count_ones() % 2 == 1)
                    .count()
            })
            .min()
            .unwrap()
    }

    #[test]
    fn distances_of_standard_codes() {
        let rep = CodeF2::repetition(3).unwrap();
        assert_eq!(code_distance(&rep).unwrap().d, 3);
        let ham = CodeF2::hamming7();
        let d = code_distance(&ham).unwrap();
        assert_eq!(d.d, 3);
        assert!((d.relative - 3.0 / 7.0).abs() < 1e-15);
        assert_eq!(code_distance(&CodeF2::identity(5).unwrap()).unwrap().d, 1);
    }

    #[test]
    fn gray_enumeration_matches_column_parity() {
        let mut s = crate::linalg::Sampler::new(77);
        let mut checked = 0;
        while checked < 30 {
            let k = s.int(1, 8);
            let n = s.int(k, 20);
            let rows: Vec<Vec<u8>> = (0..k)
                .map(|_| (0..n).map(|_| s.int(0, 1) as u8).collect())
                .collect();
            let Ok(code) = CodeF2::from_rows(&rows) else {
                continue;
            };
            assert_eq!(code_distance(&code).unwrap().d, naive_distance(&code));
            checked += 1;
        }
    }

    #[test]
    fn large_k_enumeration_uses_chunks() {
        let code = CodeF2::identity(18).unwrap();
        assert_eq!(code_distance(&code).unwrap().d, 1);
        let rows: Vec<Vec<u8>> = (0..16)
            .map(|i| (0..32).map(|j| (j % 16 == i) as u8).collect())
            .collect();
        assert_eq!(
            code_distance(&CodeF2::from_rows(&rows).unwrap()).unwrap().d,
            2
        );
    }

    #[test]
    fn dependent_rows_are_rejected() {
        assert!(CodeF2::from_rows(&[vec![1, 1, 0], vec![1, 1, 0]]).is_err());
        assert!(CodeF2::from_rows(&[vec![1], vec![1]]).is_err());
    }

    #[test]
    fn pauli_words_commute_up_to_sign() {
        let k = 3;
        for a in 0..8u64 {
            for b in 0..8u64 {
                let x = pauli_word(PauliKind::X, a, k).unwrap();
                let z = pauli_word(PauliKind::Z, b, k).unwrap();
                let sign = if (a & b).count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                assert!(linalg::max_abs(&(&x * &z - (&z * &x) * c(sign))) < 1e-15);
            }
        }
    }

    #[test]
    fn pauli_word_factor_order() {
        let x = pauli_word(PauliKind::X, 0b01, 2).unwrap();
        let single = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        assert_eq!(x, linalg::kron(&single, &linalg::identity(2)));
    }

    #[test]
    fn repetition_test_operator() {
        let t = qldt_polynomial(&CodeF2::repetition(3).unwrap()).unwrap();
        let x = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let z = linalg::diag_real(&[1.0, -1.0]);
        let want =
            linalg::identity(4) * c(0.5) + (linalg::kron(&x, &x) + linalg::kron(&z, &z)) * c(0.25);
        assert!(linalg::max_abs(&(t - want)) < 1e-15);
    }

    #[test]
    fn bell_vectors_carry_the_stated_signs() {
        let x = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let z = linalg::diag_real(&[1.0, -1.0]);
        let (xx, zz) = (linalg::kron(&x, &x), linalg::kron(&z, &z));
        for a in 0..2u64 {
            for b in 0..2u64 {
                let v = bell_vector(a, b, 1);
                assert!((v.norm() - 1.0).abs() < 1e-15);
                let ex = v.dotc(&(&xx * &v)).re;
                let ez = v.dotc(&(&zz * &v)).re;
                assert!((ex - if b == 0 { 1.0 } else { -1.0 }).abs() < 1e-15);
                assert!((ez - if a == 0 { 1.0 } else { -1.0 }).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gap_methods_agree_on_hamming() {
        let ham = CodeF2::hamming7();
        let fast = qldt_gap(&ham, GapMethod::Fast).unwrap();
        assert!((fast - 3.0 / 14.0).abs() < 1e-15);
        let bell = qldt_gap(&ham, GapMethod::Bell).unwrap();
        assert!((bell - fast).abs() < 1e-12);
        let id = CodeF2::identity(3).unwrap();
        assert!((qldt_gap(&id, GapMethod::Fast).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!((qldt_gap(&id, GapMethod::Dense).unwrap() - 1.0 / 6.0).abs() < 1e-10);
    }

    #[test]
    fn explicit_game_reproduces_operator() {
        let code = CodeF2::repetition(3).unwrap();
        let (game, strategy) = stabilizer_game(&code).unwrap();
        let t = games::game_polynomial(&game, &strategy).unwrap();
        assert!(linalg::max_abs(&(t - qldt_polynomial(&code).unwrap())) < 1e-14);
        let w = game.winning_probability(&strategy.correlation()).unwrap();
        assert!((w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn report_flags_non_spanning_columns() {
        let gen = Generator::from_rows(&[vec![1, 1, 0], vec![1, 1, 0]]).unwrap();
        let r = qubit_test_report(&gen, 0.5).unwrap();
        assert!(!r.spans);
        assert_eq!(r.gap, 0.0);
        let ham = qubit_test_report(CodeF2::hamming7().generator(), 0.5).unwrap();
        assert!(ham.spans);
        assert!((ham.gap - 3.0 / 14.0).abs() < 1e-15);
        assert_eq!(ham.synchronised.renormalization_factor, 4.0);
    }

    #[test]
    fn field_arithmetic() {
        for t in 1..=4 {
            let f = Gf2t::new(t).unwrap();
            for a in 1..f.size() {
                assert_eq!(f.pow(a, f.size() - 1), 1, "t={t} a={a}");
                assert!(f.trace(a) <= 1);
            }
            let ones = (0..f.size()).filter(|&a| f.trace(a) == 1).count();
            assert_eq!(ones as u32, f.size() / 2);
        }
    }

    #[test]
    fn reed_muller_parameters_and_distance() {
        for (t, m, d) in [
            (1, 1, 0),
            (1, 1, 1),
            (2, 1, 1),
            (2, 1, 2),
            (2, 2, 1),
            (3, 1, 2),
        ] {
            let code = reed_muller(t, m, d).unwrap();
            assert_eq!(code.n(), 1 << (t * (m + 1)));
            assert_eq!(code.k() as u32, t * (d + 1).pow(m));
            let dist = code_distance(&code).unwrap().d as f64;
            assert!(
                dist >= reed_muller_distance_bound(t, m, d) - 1e-12,
                "({t},{m},{d}): {dist}"
            );
        }
        assert!(reed_muller(2, 1, 4).is_err());
    }

    #[test]
    fn code_file_formats() {
        let text = "# repetition\n111\n";
        assert_eq!(
            Generator::parse(text).unwrap().to_rows(),
            vec![vec![1, 1, 1]]
        );
        let json = "[[1,0,1],[0,1,1]]";
        assert_eq!(Generator::parse(json).unwrap().k(), 2);
        let obj = "{\"rows\": [[1,1]]}";
        assert_eq!(Generator::parse(obj).unwrap().n(), 2);
        assert!(Generator::parse("1a1\n").is_err());
        assert!(Generator::parse("11\n1\n").is_err());
    }
}
