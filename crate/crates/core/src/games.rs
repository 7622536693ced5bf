//! Symmetric two-player games, correlations and game polynomials.
//!
//! Both players share the question set `X` and, for each question, the answer
//! set `A(x)`. A game carries a distribution `ν` on `X × X` and a 0/1 predicate
//! `D(a, b | x, y)`.

use indexmap::IndexMap;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};
use crate::strategies::BipartiteStrategy;

/// Tolerance used when comparing probabilities that should agree exactly.
pub const PROB_TOL: f64 = 1e-12;

/// Default distance from 1 at which a winning probability counts as perfect.
pub const PERFECT_TOL: f64 = 1e-9;

/// `ω ≥ 1 − tol`.
pub fn is_perfect(omega: f64, tol: f64) -> bool {
    omega >= 1.0 - tol
}

/// Index layout shared by predicates and correlations: for every question pair
/// a dense `|A(x)| × |A(y)|` block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    counts: Vec<usize>,
    offsets: Vec<usize>,
    len: usize,
}

impl Layout {
    pub fn new(counts: Vec<usize>) -> Self {
        let n = counts.len();
        let mut offsets = Vec::with_capacity(n * n);
        let mut len = 0;
        for x in 0..n {
            for y in 0..n {
                offsets.push(len);
                len += counts[x] * counts[y];
            }
        }
        Layout {
            counts,
            offsets,
            len,
        }
    }

    pub fn questions(&self) -> usize {
        self.counts.len()
    }

    pub fn answers(&self, x: usize) -> usize {
        self.counts[x]
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, a: usize, b: usize) -> usize {
        self.offsets[x * self.counts.len() + y] + a * self.counts[y] + b
    }
}

/// Correlation `C(a, b | x, y)` of a strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlation {
    layout: Layout,
    values: Vec<f64>,
}

impl Correlation {
    pub fn zeros(layout: Layout) -> Self {
        let values = vec![0.0; layout.len()];
        Correlation { layout, values }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.values[self.layout.index(x, y, a, b)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, a: usize, b: usize, v: f64) {
        let i = self.layout.index(x, y, a, b);
        self.values[i] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `E_{(x,y)∼ν} Σ_{a,b} |C − C'|`.
    pub fn distance(&self, other: &Correlation, nu: &[f64]) -> Result<f64> {
        if self.layout != other.layout {
            return Err(Error::Incompatible(
                "correlations have different shapes".into(),
            ));
        }
        let n = self.layout.questions();
        let mut total = 0.0;
        for x in 0..n {
            for y in 0..n {
                let w = nu[x * n + y];
                if w == 0.0 {
                    continue;
                }
                let mut s = 0.0;
                for a in 0..self.layout.answers(x) {
                    for b in 0..self.layout.answers(y) {
                        s += (self.get(x, y, a, b) - other.get(x, y, a, b)).abs();
                    }
                }
                total += w * s;
            }
        }
        Ok(total)
    }

    /// `Σ_i w_i C_i` for correlations of the same shape.
    pub fn mixture(parts: &[(f64, &Correlation)]) -> Result<Correlation> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        let mut out = Correlation::zeros(first.1.layout.clone());
        for (w, corr) in parts {
            if corr.layout != out.layout {
                return Err(Error::Incompatible(
                    "correlations have different shapes".into(),
                ));
            }
            for (o, v) in out.values.iter_mut().zip(&corr.values) {
                *o += w * v;
            }
        }
        Ok(out)
    }
}

/// A symmetric-label two-player game.
#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    questions: Vec<String>,
    answers: Vec<Vec<String>>,
    nu: Vec<f64>,
    layout: Layout,
    predicate: Vec<bool>,
}

impl Game {
    /// Build a game from labels, a row-major `ν` table and a predicate.
    pub fn new(
        questions: Vec<String>,
        answers: Vec<Vec<String>>,
        nu: Vec<f64>,
        predicate: impl Fn(usize, usize, usize, usize) -> bool,
    ) -> Result<Self> {
        let n = questions.len();
        if n == 0 {
            return Err(Error::InvalidGame("no questions".into()));
        }
        if answers.len() != n {
            return Err(Error::InvalidGame(format!(
                "{} answer sets for {n} questions",
                answers.len()
            )));
        }
        if let Some(x) = answers.iter().position(|a| a.is_empty()) {
            return Err(Error::InvalidGame(format!(
                "question {} has no answers",
                questions[x]
            )));
        }
        if nu.len() != n * n {
            return Err(Error::InvalidGame(format!(
                "ν has {} entries, expected {}",
                nu.len(),
                n * n
            )));
        }
        if nu.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::InvalidGame(
                "ν has a negative or non-finite entry".into(),
            ));
        }
        let total: f64 = nu.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidGame(format!("ν sums to {total}")));
        }
        let layout = Layout::new(answers.iter().map(Vec::len).collect());
        let mut table = vec![false; layout.len()];
        for x in 0..n {
            for y in 0..n {
                for a in 0..layout.answers(x) {
                    for b in 0..layout.answers(y) {
                        table[layout.index(x, y, a, b)] = predicate(x, y, a, b);
                    }
                }
            }
        }
        Ok(Game {
            questions,
            answers,
            nu,
            layout,
            predicate: table,
        })
    }

    /// Game with numeric labels `0..n` and `0..k_x`.
    pub fn from_tables(
        answer_counts: &[usize],
        nu: Vec<f64>,
        predicate: impl Fn(usize, usize, usize, usize) -> bool,
    ) -> Result<Self> {
        let questions = (0..answer_counts.len()).map(|x| x.to_string()).collect();
        let answers = answer_counts
            .iter()
            .map(|&k| (0..k).map(|a| a.to_string()).collect())
            .collect();
        Game::new(questions, answers, nu, predicate)
    }

    pub fn num_questions(&self) -> usize {
        self.questions.len()
    }

    pub fn num_answers(&self, x: usize) -> usize {
        self.layout.answers(x)
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn question_labels(&self) -> &[String] {
        &self.questions
    }

    pub fn answer_labels(&self, x: usize) -> &[String] {
        &self.answers[x]
    }

    pub fn nu(&self, x: usize, y: usize) -> f64 {
        self.nu[x * self.num_questions() + y]
    }

    pub fn nu_table(&self) -> &[f64] {
        &self.nu
    }

    /// First marginal `ν_A(x) = Σ_y ν(x, y)`.
    pub fn nu_a(&self) -> Vec<f64> {
        let n = self.num_questions();
        (0..n)
            .map(|x| (0..n).map(|y| self.nu(x, y)).sum())
            .collect()
    }

    #[inline]
    pub fn wins(&self, x: usize, y: usize, a: usize, b: usize) -> bool {
        self.predicate[self.layout.index(x, y, a, b)]
    }

    /// Same predicate and labels under a different question distribution.
    pub fn with_nu(&self, nu: Vec<f64>) -> Result<Game> {
        Game::new(
            self.questions.clone(),
            self.answers.clone(),
            nu,
            |x, y, a, b| self.wins(x, y, a, b),
        )
    }

    pub fn check_correlation(&self, corr: &Correlation) -> Result<()> {
        if corr.layout() != &self.layout {
            return Err(Error::Incompatible(
                "correlation does not match the game's question/answer sets".into(),
            ));
        }
        Ok(())
    }

    /// `ω = E_{(x,y)∼ν} Σ_{a,b} D(a, b | x, y) C(a, b | x, y)`.
    pub fn winning_probability(&self, corr: &Correlation) -> Result<f64> {
        self.check_correlation(corr)?;
        let n = self.num_questions();
        let mut total = 0.0;
        for x in 0..n {
            for y in 0..n {
                let w = self.nu(x, y);
                if w == 0.0 {
                    continue;
                }
                let mut s = 0.0;
                for a in 0..self.num_answers(x) {
                    for b in 0..self.num_answers(y) {
                        if self.wins(x, y, a, b) {
                            s += corr.get(x, y, a, b);
                        }
                    }
                }
                total += w * s;
            }
        }
        Ok(total)
    }

    pub fn analyze_synchronicity(&self) -> SynchronicityReport {
        let n = self.num_questions();
        let mut asymmetric = 0usize;
        for x in 0..n {
            for y in 0..n {
                if (self.nu(x, y) - self.nu(y, x)).abs() > PROB_TOL {
                    asymmetric += 1;
                }
                for a in 0..self.num_answers(x) {
                    for b in 0..self.num_answers(y) {
                        if self.wins(x, y, a, b) != self.wins(y, x, b, a) {
                            asymmetric += 1;
                        }
                    }
                }
            }
        }
        let mut synchronous = true;
        for x in 0..n {
            if self.nu(x, x) <= 0.0 {
                synchronous = false;
            }
            for a in 0..self.num_answers(x) {
                for b in 0..self.num_answers(x) {
                    if a != b && self.wins(x, x, a, b) {
                        synchronous = false;
                    }
                }
            }
        }
        let nu_a = self.nu_a();
        let beta = if synchronous {
            (0..n)
                .map(|x| self.nu(x, x) / nu_a[x])
                .fold(1.0f64, f64::min)
                .clamp(0.0, 1.0)
        } else {
            0.0
        };
        SynchronicityReport {
            is_symmetric: asymmetric == 0,
            is_synchronous: synchronous,
            beta,
            asymmetric_entries: asymmetric,
        }
    }

    /// The β-synchronised game: `ν' = β ν_A(x) δ_{xy} + (1 − β) ν`.
    pub fn beta_synchronise(&self, beta: f64) -> Result<Game> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "β = {beta} is outside (0, 1)"
            )));
        }
        if !self.analyze_synchronicity().is_synchronous {
            return Err(Error::InvalidGame(
                "β-synchronisation needs a synchronous game".into(),
            ));
        }
        let n = self.num_questions();
        let nu_a = self.nu_a();
        let mut nu = self.nu.iter().map(|p| (1.0 - beta) * p).collect::<Vec<_>>();
        for x in 0..n {
            nu[x * n + x] += beta * nu_a[x];
        }
        self.with_nu(nu)
    }

    pub fn to_file(&self) -> GameFile {
        let n = self.num_questions();
        let mut predicate = Vec::new();
        for x in 0..n {
            for y in 0..n {
                for a in 0..self.num_answers(x) {
                    for b in 0..self.num_answers(y) {
                        if self.wins(x, y, a, b) {
                            predicate.push(PredicateEntry {
                                x: self.questions[x].clone(),
                                y: self.questions[y].clone(),
                                a: self.answers[x][a].clone(),
                                b: self.answers[y][b].clone(),
                                win: 1,
                            });
                        }
                    }
                }
            }
        }
        GameFile {
            questions: self.questions.clone(),
            answers: self
                .questions
                .iter()
                .cloned()
                .zip(self.answers.iter().cloned())
                .collect(),
            nu: (0..n)
                .map(|x| self.nu[x * n..(x + 1) * n].to_vec())
                .collect(),
            predicate,
        }
    }

    pub fn from_file(file: &GameFile) -> Result<Game> {
        let n = file.questions.len();
        let qindex: IndexMap<&str, usize> = file
            .questions
            .iter()
            .enumerate()
            .map(|(i, q)| (q.as_str(), i))
            .collect();
        if qindex.len() != n {
            return Err(Error::InvalidGame("duplicate question label".into()));
        }
        let mut answers = Vec::with_capacity(n);
        for q in &file.questions {
            let a = file
                .answers
                .get(q)
                .ok_or_else(|| Error::InvalidGame(format!("no answers listed for question {q}")))?;
            answers.push(a.clone());
        }
        if file.nu.len() != n || file.nu.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidGame(format!("ν must be a {n}x{n} table")));
        }
        let aindex: Vec<IndexMap<&str, usize>> = answers
            .iter()
            .map(|set| {
                set.iter()
                    .enumerate()
                    .map(|(i, a)| (a.as_str(), i))
                    .collect()
            })
            .collect();
        let mut wins = std::collections::HashSet::new();
        for e in &file.predicate {
            let x = *qindex
                .get(e.x.as_str())
                .ok_or_else(|| Error::InvalidGame(format!("unknown question {}", e.x)))?;
            let y = *qindex
                .get(e.y.as_str())
                .ok_or_else(|| Error::InvalidGame(format!("unknown question {}", e.y)))?;
            let a = *aindex[x].get(e.a.as_str()).ok_or_else(|| {
                Error::InvalidGame(format!("unknown answer {} to question {}", e.a, e.x))
            })?;
            let b = *aindex[y].get(e.b.as_str()).ok_or_else(|| {
                Error::InvalidGame(format!("unknown answer {} to question {}", e.b, e.y))
            })?;
            match e.win {
                0 => {
                    wins.remove(&(x, y, a, b));
                }
                1 => {
                    wins.insert((x, y, a, b));
                }
                w => {
                    return Err(Error::InvalidGame(format!(
                        "predicate value {w} is not 0 or 1"
                    )))
                }
            }
        }
        let nu = file.nu.iter().flatten().copied().collect();
        Game::new(file.questions.clone(), answers, nu, |x, y, a, b| {
            wins.contains(&(x, y, a, b))
        })
    }

    pub fn from_json(text: &str) -> std::result::Result<Result<Game>, serde_json::Error> {
        let file: GameFile = serde_json::from_str(text)?;
        Ok(Game::from_file(&file))
    }
}

/// Output of [`Game::analyze_synchronicity`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynchronicityReport {
    pub is_symmetric: bool,
    pub is_synchronous: bool,
    /// Largest `β` with `ν(x, x) ≥ β ν_A(x)` for all `x`; zero when the game is
    /// not synchronous.
    pub beta: f64,
    pub asymmetric_entries: usize,
}

/// JSON form of a game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    #[serde(deserialize_with = "labels")]
    pub questions: Vec<String>,
    #[serde(deserialize_with = "label_map")]
    pub answers: IndexMap<String, Vec<String>>,
    pub nu: Vec<Vec<f64>>,
    #[serde(default)]
    pub predicate: Vec<PredicateEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredicateEntry {
    #[serde(deserialize_with = "label")]
    pub x: String,
    #[serde(deserialize_with = "label")]
    pub y: String,
    #[serde(deserialize_with = "label")]
    pub a: String,
    #[serde(deserialize_with = "label")]
    pub b: String,
    pub win: u8,
}

/// Labels may be written as strings or integers.
#[derive(Deserialize)]
#[serde(untagged)]
enum RawLabel {
    Str(String),
    Int(i64),
}

impl From<RawLabel> for String {
    fn from(l: RawLabel) -> String {
        match l {
            RawLabel::Str(s) => s,
            RawLabel::Int(i) => i.to_string(),
        }
    }
}

fn label<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<String, D::Error> {
    RawLabel::deserialize(d).map(String::from)
}

fn labels<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<String>, D::Error> {
    Ok(Vec::<RawLabel>::deserialize(d)?
        .into_iter()
        .map(String::from)
        .collect())
}

fn label_map<'de, D: Deserializer<'de>>(
    d: D,
) -> std::result::Result<IndexMap<String, Vec<String>>, D::Error> {
    Ok(IndexMap::<String, Vec<RawLabel>>::deserialize(d)?
        .into_iter()
        .map(|(k, v)| (k, v.into_iter().map(String::from).collect()))
        .collect())
}

/// `T = Σ_{x,y} ν(x, y) Σ_{a,b} D(a, b | x, y) A^x_a ⊗ B^y_b`.
pub fn game_polynomial(game: &Game, strategy: &BipartiteStrategy) -> Result<CMatrix> {
    strategy.check_game(game)?;
    let (da, db) = (strategy.dim_a(), strategy.dim_b());
    linalg::check_dim(da * db)?;
    let n = game.num_questions();
    let mut t = linalg::zeros(da * db, da * db);
    for x in 0..n {
        for y in 0..n {
            let w = game.nu(x, y);
            if w == 0.0 {
                continue;
            }
            for a in 0..game.num_answers(x) {
                let mut bsum = linalg::zeros(db, db);
                let mut any = false;
                for b in 0..game.num_answers(y) {
                    if game.wins(x, y, a, b) {
                        bsum += &strategy.b()[y][b];
                        any = true;
                    }
                }
                if any {
                    t += linalg::kron(&strategy.a()[x][a], &bsum) * c(w);
                }
            }
        }
    }
    Ok(linalg::hermitian_part(&t))
}

/// Top of the spectrum of a Hermitian operator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopSpectrum {
    pub top: f64,
    pub top_multiplicity: usize,
    pub second: f64,
    pub second_multiplicity: usize,
    /// `top − second` when the top eigenvalue is simple, otherwise zero.
    pub gap: f64,
}

pub fn top_spectrum(t: &CMatrix) -> Result<TopSpectrum> {
    let values = linalg::eigenvalues(t)?;
    top_spectrum_of(&values, linalg::max_abs(t))
}

/// [`TopSpectrum`] from a descending list of eigenvalues.
pub fn top_spectrum_of(values: &[f64], scale: f64) -> Result<TopSpectrum> {
    if values.len() < 2 {
        return Err(Error::InvalidParameter(
            "a spectral gap needs dimension at least 2".into(),
        ));
    }
    let tol = linalg::DEGENERACY_TOL * scale.max(1.0);
    let top = values[0];
    let top_multiplicity = values.iter().take_while(|&&v| top - v <= tol).count();
    let (second, second_multiplicity) = if top_multiplicity == values.len() {
        (top, 0)
    } else {
        let s = values[top_multiplicity];
        (
            s,
            values[top_multiplicity..]
                .iter()
                .take_while(|&&v| s - v <= tol)
                .count(),
        )
    };
    let gap = if top_multiplicity >= 2 {
        0.0
    } else {
        top - second
    };
    Ok(TopSpectrum {
        top,
        top_multiplicity,
        second,
        second_multiplicity,
        gap,
    })
}

/// `λ_max − λ_2`, or zero when the largest eigenvalue is degenerate.
pub fn spectral_gap(t: &CMatrix) -> Result<f64> {
    Ok(top_spectrum(t)?.gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::diag_real;

    fn uniform(n: usize) -> Vec<f64> {
        vec![1.0 / (n * n) as f64; n * n]
    }

    #[test]
    fn perfect_threshold() {
        assert!(is_perfect(1.0 - 1e-10, PERFECT_TOL));
        assert!(!is_perfect(1.0 - 1e-8, PERFECT_TOL));
        assert!(is_perfect(0.9, 0.1));
    }

    fn agree(n: usize, nu: Vec<f64>) -> Game {
        Game::from_tables(&vec![2; n], nu, |_, _, a, b| a == b).unwrap()
    }

    #[test]
    fn diagonal_game_is_fully_synchronous() {
        let r = agree(2, vec![0.5, 0.0, 0.0, 0.5]).analyze_synchronicity();
        assert!(r.is_symmetric && r.is_synchronous);
        assert_eq!(r.beta, 1.0);
    }

    #[test]
    fn uniform_game_has_half_diagonal_mass() {
        let r = agree(2, uniform(2)).analyze_synchronicity();
        assert!(r.is_synchronous);
        assert!((r.beta - 0.5).abs() < 1e-15);
    }

    #[test]
    fn missing_diagonal_mass_breaks_synchronicity() {
        let r = agree(2, vec![0.0, 0.5, 0.5, 0.0]).analyze_synchronicity();
        assert!(!r.is_synchronous);
        assert_eq!(r.beta, 0.0);
    }

    #[test]
    fn asymmetric_distribution_is_flagged() {
        let r = agree(2, vec![0.25, 0.5, 0.0, 0.25]).analyze_synchronicity();
        assert!(!r.is_symmetric);
    }

    #[test]
    fn synchronisation_moves_mass_to_diagonal() {
        let g = agree(2, uniform(2)).beta_synchronise(0.5).unwrap();
        assert!((g.nu(0, 0) - 0.375).abs() < 1e-15);
        assert!((g.nu(1, 1) - 0.375).abs() < 1e-15);
        assert!((g.nu(0, 1) - 0.125).abs() < 1e-15);
        assert!((g.nu(1, 0) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn synchronisation_rejects_bad_parameters() {
        let g = agree(2, uniform(2));
        assert!(g.beta_synchronise(0.0).is_err());
        assert!(g.beta_synchronise(1.0).is_err());
        assert!(agree(2, vec![0.0, 0.5, 0.5, 0.0])
            .beta_synchronise(0.5)
            .is_err());
    }

    #[test]
    fn gap_examples() {
        assert!((spectral_gap(&diag_real(&[1.0, 0.5, 0.5, 0.0])).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(spectral_gap(&diag_real(&[1.0, 1.0, 0.0])).unwrap(), 0.0);
        assert_eq!(spectral_gap(&linalg::identity(3)).unwrap(), 0.0);
        let s = top_spectrum(&diag_real(&[1.0, 0.5, 0.5, 0.0])).unwrap();
        assert_eq!((s.top_multiplicity, s.second_multiplicity), (1, 2));
    }

    #[test]
    fn invalid_games_are_rejected() {
        assert!(Game::from_tables(&[2, 2], vec![0.5, 0.5, 0.5, 0.5], |_, _, _, _| true).is_err());
        assert!(Game::from_tables(&[2, 2], vec![1.5, -0.5, 0.0, 0.0], |_, _, _, _| true).is_err());
        assert!(Game::from_tables(&[2, 0], uniform(2), |_, _, _, _| true).is_err());
    }

    #[test]
    fn json_roundtrip_and_defaults() {
        let text = r#"{"questions":[0,1],"answers":{"0":["a","b"],"1":["a","b"]},
            "nu":[[0.25,0.25],[0.25,0.25]],
            "predicate":[{"x":0,"y":0,"a":"a","b":"a","win":1},{"x":0,"y":1,"a":"b","b":"a","win":1}]}"#;
        let g = Game::from_json(text).unwrap().unwrap();
        assert!(g.wins(0, 0, 0, 0) && g.wins(0, 1, 1, 0));
        assert!(!g.wins(1, 1, 1, 1));
        let again = Game::from_file(
            &serde_json::from_str(&serde_json::to_string(&g.to_file()).unwrap()).unwrap(),
        )
        .unwrap();
        assert_eq!(again, g);
    }

    #[test]
    fn json_errors_carry_position() {
        let err = Game::from_json("{\"questions\": [0,\n 1,,]}").unwrap_err();
        assert_eq!(err.line(), 2);
    }
}
