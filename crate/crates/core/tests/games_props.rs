//! Winning probabilities computed three ways, and synchronicity bookkeeping.

use proptest::prelude::*;

use selftest::games::{self, Game};
use selftest::linalg::{self, c, Sampler};
use selftest::strategies::{self, BipartiteStrategy};

fn random_game(rng: &mut Sampler, q: usize, k: usize) -> Game {
    let raw: Vec<f64> = (0..q * q).map(|_| rng.uniform() + 0.01).collect();
    let total: f64 = raw.iter().sum();
    let nu = raw.iter().map(|x| x / total).collect();
    let table: Vec<bool> = (0..q * q * k * k).map(|_| rng.uniform() < 0.5).collect();
    Game::from_tables(&vec![k; q], nu, |x, y, a, b| {
        table[((x * q + y) * k + a) * k + b]
    })
    .unwrap()
}

fn random_strategy(rng: &mut Sampler, q: usize, k: usize) -> BipartiteStrategy {
    let (da, db) = (rng.int(1, 3), rng.int(1, 3));
    let a = (0..q).map(|_| rng.povm(da, k)).collect();
    let b = (0..q).map(|_| rng.povm(db, k)).collect();
    BipartiteStrategy::new(da, db, rng.haar_state(da * db), a, b).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn winning_probability_agrees_three_ways(seed in any::<u64>(), q in 1usize..4, k in 1usize..4) {
        let mut rng = Sampler::new(seed);
        let game = random_game(&mut rng, q, k);
        let s = random_strategy(&mut rng, q, k);
        let from_table = game.winning_probability(&s.correlation()).unwrap();
        let t = games::game_polynomial(&game, &s).unwrap();
        let from_polynomial = s.psi().dotc(&(&t * s.psi())).re;
        let mut direct = 0.0;
        for x in 0..q {
            for y in 0..q {
                for a in 0..k {
                    for b in 0..k {
                        if game.wins(x, y, a, b) {
                            let op = linalg::kron(&s.a()[x][a], &s.b()[y][b]);
                            direct += game.nu(x, y) * s.psi().dotc(&(op * s.psi())).re;
                        }
                    }
                }
            }
        }
        prop_assert!((from_table - direct).abs() <= 1e-12);
        prop_assert!((from_polynomial - direct).abs() <= 1e-12);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&direct));
    }

    #[test]
    fn correlations_are_distributions(seed in any::<u64>(), q in 1usize..4, k in 1usize..4) {
        let mut rng = Sampler::new(seed);
        let s = random_strategy(&mut rng, q, k);
        let corr = s.correlation();
        for x in 0..q {
            for y in 0..q {
                let total: f64 = (0..k).flat_map(|a| (0..k).map(move |b| (a, b)))
                    .map(|(a, b)| corr.get(x, y, a, b))
                    .sum();
                prop_assert!((total - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn beta_synchronise_moves_exactly_beta(seed in any::<u64>(), q in 2usize..5, beta in 0.05..0.95f64) {
        let mut rng = Sampler::new(seed);
        let raw: Vec<f64> = (0..q * q).map(|_| rng.uniform() + 0.01).collect();
        let total: f64 = raw.iter().sum();
        let nu: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let game = Game::from_tables(&vec![2; q], nu, |x, y, a, b| x != y || a == b).unwrap();
        let synced = game.beta_synchronise(beta).unwrap();
        let report = synced.analyze_synchronicity();
        prop_assert!(report.is_synchronous);
        prop_assert!(report.beta >= beta - 1e-12);
        // the first marginal is unchanged
        for (p, r) in game.nu_a().iter().zip(synced.nu_a()) {
            prop_assert!((p - r).abs() <= 1e-12);
        }
    }

    #[test]
    fn synchronous_value_is_at_most_one_minus_beta_dsync(seed in any::<u64>(), q in 2usize..4, d in 1usize..4) {
        let mut rng = Sampler::new(seed);
        let game = Game::from_tables(&vec![2; q], vec![1.0 / (q * q) as f64; q * q], |x, y, a, b| x != y || a == b)
            .unwrap();
        let beta = game.analyze_synchronicity().beta;
        let a: Vec<_> = (0..q).map(|_| rng.povm(d, 2)).collect();
        let s = BipartiteStrategy::new(d, d, rng.haar_state(d * d), a.clone(), a).unwrap();
        let omega = game.winning_probability(&s.correlation()).unwrap();
        let dsync = strategies::dsync(&s.correlation(), &game.nu_a()).unwrap();
        prop_assert!(omega <= 1.0 - beta * dsync + 1e-12);
    }
}

#[test]
fn game_polynomial_of_always_winning_game_is_identity() {
    let mut rng = Sampler::new(4);
    let game = Game::from_tables(&[2, 3], vec![0.25; 4], |_, _, _, _| true).unwrap();
    let s = BipartiteStrategy::new(
        2,
        3,
        rng.haar_state(6),
        vec![rng.povm(2, 2), rng.povm(2, 3)],
        vec![rng.povm(3, 2), rng.povm(3, 3)],
    )
    .unwrap();
    let t = games::game_polynomial(&game, &s).unwrap();
    assert!((t - linalg::identity(6)).norm() <= 1e-12);
}

#[test]
fn top_spectrum_of_known_matrix() {
    let t = linalg::diag_real(&[0.2, 1.0, 0.5, 0.5]) * c(1.0);
    let s = games::top_spectrum(&t).unwrap();
    assert_eq!((s.top, s.top_multiplicity), (1.0, 1));
    assert_eq!((s.second, s.second_multiplicity), (0.5, 2));
    assert_eq!(s.gap, 0.5);
}
