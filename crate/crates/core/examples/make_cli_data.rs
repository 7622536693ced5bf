//! Regenerates the JSON inputs under `crates/cli/data`.

use selftest::dilation;
use selftest::games::Game;
use selftest::linalg::{self, c};
use selftest::qldt::{self, CodeF2};
use selftest::strategies::BipartiteStrategy;

fn write<T: serde::Serialize>(name: &str, v: &T) {
    let text = serde_json::to_string_pretty(v).unwrap() + "\n";
    std::fs::write(
        format!("{}/../cli/data/{name}", env!("CARGO_MANIFEST_DIR")),
        text,
    )
    .unwrap();
}

fn main() {
    let two = || vec!["0".to_string(), "1".to_string()];
    let qs = || vec!["x".to_string(), "z".to_string()];
    let sync = |x: usize, y: usize, a: usize, b: usize| x != y || a == b;
    let diagonal = Game::new(qs(), vec![two(), two()], vec![0.5, 0.0, 0.0, 0.5], sync).unwrap();
    write("diagonal.json", &diagonal.to_file());
    let half = Game::new(qs(), vec![two(), two()], vec![0.25; 4], sync).unwrap();
    write("half.json", &half.to_file());
    let asym = Game::new(qs(), vec![two(), two()], vec![0.25, 0.35, 0.15, 0.25], sync).unwrap();
    write("asymmetric.json", &asym.to_file());
    let trivial = Game::new(qs(), vec![two(), two()], vec![0.25; 4], |_, _, _, _| true).unwrap();
    write("trivial.json", &trivial.to_file());
    // equal answers on every pair: the Pauli strategy wins 3/4
    let agree = Game::new(qs(), vec![two(), two()], vec![0.25; 4], |_, _, a, b| a == b).unwrap();
    write("agree.json", &agree.to_file());

    let z = vec![
        linalg::diag_real(&[1.0, 0.0]),
        linalg::diag_real(&[0.0, 1.0]),
    ];
    let h = |s: f64| {
        let mut m = linalg::identity(2) * c(0.5);
        m[(0, 1)] = c(0.5 * s);
        m[(1, 0)] = c(0.5 * s);
        m
    };
    let pme = BipartiteStrategy::maximally_entangled(vec![vec![h(1.0), h(-1.0)], z]).unwrap();
    write("pme.json", &pme.to_file(&diagonal).unwrap());

    let (game, ideal) = qldt::stabilizer_game(&CodeF2::repetition(3).unwrap()).unwrap();
    write("rep3-game.json", &game.to_file());
    write("rep3-strategy.json", &ideal.to_file(&game).unwrap());

    let inst = dilation::pme_instance(11, 2, 2, 2, 2, 0.002, 1).unwrap();
    let g = Game::from_tables(&[2, 2], vec![0.25; 4], |_, _, a, b| a == b).unwrap();
    write("dilation-game.json", &g.to_file());
    write(
        "dilation-strategy.json",
        &inst.strategy.to_file(&g).unwrap(),
    );
    write("dilation-ideal.json", &inst.ideal.to_file(&g).unwrap());
    write("dilation-witness.json", &inst.witness.to_file());
}
