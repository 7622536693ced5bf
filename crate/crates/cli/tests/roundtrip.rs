//! parse → serialize → parse is the identity on every input file.

use std::path::PathBuf;

use selftest::dilation::{DilationWitness, WitnessFile};
use selftest::games::{Game, GameFile};
use selftest::qldt::Generator;
use selftest::strategies::{BipartiteStrategy, StrategyFile};

fn read(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name);
    std::fs::read_to_string(path).unwrap()
}

fn game(name: &str) -> Game {
    Game::from_json(&read(name)).unwrap().unwrap()
}

const GAMES: [&str; 6] = [
    "diagonal.json",
    "half.json",
    "asymmetric.json",
    "trivial.json",
    "rep3-game.json",
    "dilation-game.json",
];

#[test]
fn games_round_trip() {
    for name in GAMES {
        let g = game(name);
        let text = serde_json::to_string(&g.to_file()).unwrap();
        let again = Game::from_json(&text).unwrap().unwrap();
        assert_eq!(again, g, "{name}");
        let file: GameFile = serde_json::from_str(&read(name)).unwrap();
        assert_eq!(again.to_file(), file, "{name}");
    }
}

#[test]
fn strategies_round_trip() {
    let pairs = [
        ("diagonal.json", "pme.json"),
        ("rep3-game.json", "rep3-strategy.json"),
        ("dilation-game.json", "dilation-strategy.json"),
        ("dilation-game.json", "dilation-ideal.json"),
    ];
    for (g, s) in pairs {
        let g = game(g);
        let file: StrategyFile = serde_json::from_str(&read(s)).unwrap();
        let strat = BipartiteStrategy::from_file(&file, &g).unwrap();
        let text = serde_json::to_string(&strat.to_file(&g).unwrap()).unwrap();
        let back: StrategyFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, file, "{s}");
        assert_eq!(
            BipartiteStrategy::from_file(&back, &g).unwrap(),
            strat,
            "{s}"
        );
    }
}

#[test]
fn witness_round_trips() {
    let file: WitnessFile = serde_json::from_str(&read("dilation-witness.json")).unwrap();
    let w = DilationWitness::from_file(&file).unwrap();
    let text = serde_json::to_string(&w.to_file()).unwrap();
    let back: WitnessFile = serde_json::from_str(&text).unwrap();
    assert_eq!(back, file);
}

#[test]
fn generators_round_trip() {
    for name in ["rep3.txt", "hamming7.txt"] {
        let g = Generator::parse(&read(name)).unwrap();
        let text = serde_json::to_string(&g.to_rows()).unwrap();
        assert_eq!(Generator::parse(&text).unwrap(), g, "{name}");
    }
}
