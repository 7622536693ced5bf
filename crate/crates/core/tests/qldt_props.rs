//! The low-degree test operator built three ways, its gap computed three
//! ways, and the gap witness on small instances.

use proptest::prelude::*;

use selftest::dilation;
use selftest::games;
use selftest::linalg::{self, c, CMatrix, Sampler};
use selftest::qldt::{self, CodeF2, GapMethod, PauliKind};

fn random_code(seed: u64, max_k: usize) -> CodeF2 {
    let mut rng = Sampler::new(seed);
    loop {
        let k = rng.int(1, max_k);
        let n = rng.int(k, k + 5);
        let rows: Vec<Vec<u8>> = (0..k)
            .map(|_| (0..n).map(|_| u8::from(rng.uniform() < 0.5)).collect())
            .collect();
        if let Ok(code) = CodeF2::from_rows(&rows) {
            return code;
        }
    }
}

/// `½ Id + (1/4n) Σ_j (X(c_j) ⊗ X(c_j) + Z(c_j) ⊗ Z(c_j))` from Pauli words.
fn pauli_sum(code: &CodeF2) -> CMatrix {
    let k = code.k();
    let d = 1usize << k;
    let w = 1.0 / (4.0 * code.n() as f64);
    let mut t = linalg::identity(d * d) * c(0.5);
    for col in code.generator().columns() {
        for kind in [PauliKind::X, PauliKind::Z] {
            let p = qldt::pauli_word(kind, col, k).unwrap();
            t += linalg::kron(&p, &p) * c(w);
        }
    }
    t
}

/// Minimum weight of a nonzero codeword by plain enumeration.
fn brute_distance(code: &CodeF2) -> usize {
    (1..1u64 << code.k())
        .map(|a| {
            code.encode(a)
                .iter()
                .map(|w| w.count_ones() as usize)
                .sum::<usize>()
        })
        .min()
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn operator_agrees_with_pauli_sum_and_game_polynomial(seed in any::<u64>()) {
        let code = random_code(seed, 3);
        let t = qldt::qldt_polynomial(&code).unwrap();
        prop_assert!((&t - pauli_sum(&code)).norm() <= 1e-12);
        let (game, ideal) = qldt::stabilizer_game(&code).unwrap();
        let g = games::game_polynomial(&game, &ideal).unwrap();
        prop_assert!((&t - g).norm() <= 1e-12);
    }

    #[test]
    fn gap_methods_agree(seed in any::<u64>()) {
        let code = random_code(seed, 3);
        let fast = qldt::qldt_gap(&code, GapMethod::Fast).unwrap();
        let dense = qldt::qldt_gap(&code, GapMethod::Dense).unwrap();
        let bell = qldt::qldt_gap(&code, GapMethod::Bell).unwrap();
        prop_assert!((fast - dense).abs() <= 1e-9, "{fast} {dense}");
        prop_assert!((fast - bell).abs() <= 1e-9, "{fast} {bell}");
        let d = brute_distance(&code);
        prop_assert_eq!(qldt::code_distance(&code).unwrap().d, d);
        prop_assert!((fast - d as f64 / (2.0 * code.n() as f64)).abs() <= 1e-15);
    }

    #[test]
    fn bell_frame_diagonalises_the_operator(seed in any::<u64>()) {
        let code = random_code(seed, 3);
        let (off, diag) = qldt::bell_frame_residual(&code).unwrap();
        prop_assert!(off <= 1e-10);
        let d = 1u64 << code.k();
        for a in 0..d {
            for b in 0..d {
                let expected = qldt::bell_eigenvalue(&code, a, b);
                prop_assert!((diag[(a * d + b) as usize] - expected).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn gap_witness_deviates_by_the_universal_amount(seed in any::<u64>()) {
        let code = random_code(seed, 3);
        let t = qldt::qldt_polynomial(&code).unwrap();
        let spec = games::top_spectrum(&t).unwrap();
        prop_assume!(spec.top_multiplicity == 1);
        let w = dilation::spec_gap_witness(&t, 1 << code.k()).unwrap();
        prop_assert!(w.deviation >= dilation::gap_witness_bound() - 1e-9, "{w:?}");
        prop_assert!(w.deviation > 1.0 / 33.0);
        prop_assert!((w.omega - (1.0 - w.gap / 2.0)).abs() <= 1e-10, "{w:?}");
    }
}

#[test]
fn repetition_and_hamming_gaps() {
    let rep = CodeF2::repetition(3).unwrap();
    let dense = qldt::qldt_gap(&rep, GapMethod::Dense).unwrap();
    assert!((dense - 0.5).abs() <= 1e-10);
    let ham = CodeF2::hamming7();
    assert_eq!(qldt::qldt_gap(&ham, GapMethod::Fast).unwrap(), 3.0 / 14.0);
    assert_eq!(brute_distance(&ham), 3);
}

#[test]
fn generator_text_and_json_agree() {
    let text = qldt::Generator::parse("1 0 1\n0 1 1\n").unwrap();
    let json = qldt::Generator::parse("[[1,0,1],[0,1,1]]").unwrap();
    let obj = qldt::Generator::parse("{\"rows\": [[1,0,1],[0,1,1]]}").unwrap();
    assert_eq!(text, json);
    assert_eq!(text, obj);
    assert!(qldt::Generator::parse("1 0 2").is_err());
}
