mod common;

use std::io::Cursor;

use emachine::script::run_script;
use emachine::trace::{replay, ReplayOutcome};

#[test]
fn random_scripts_are_reproducible_and_replay() {
    let mut with_winners = 0;
    for seed in 0..100 {
        let text = common::random_script(seed);
        let a = run_script(&text, None, true).unwrap_or_else(|e| panic!("seed {seed}: {e}\n{text}"));
        let b = run_script(&text, None, true).unwrap();
        let (ta, tb) = (a.trace.unwrap().to_bytes(), b.trace.unwrap().to_bytes());
        assert_eq!(ta, tb, "seed {seed}");
        assert_eq!(a.report, b.report);
        match replay(Cursor::new(ta.clone())).unwrap() {
            ReplayOutcome::Match { .. } => {}
            other => panic!("seed {seed}: {other:?}\n{text}"),
        }
        if String::from_utf8(ta).unwrap().contains("\"iwin\":") {
            with_winners += 1;
        }
    }
    assert!(with_winners > 50);
}

#[test]
fn different_seeds_can_break_ties_differently() {
    let text = "\
ALPHABET A 1
ALPHABET D a b
WORLD A D
UNIT AS in=A,D out=D capacity=8 a=0.4 tau=10
PHASE train
CYCLE addr=1 din=a
CYCLE addr=1 din=b
PHASE exam
RESET
CYCLE addr=1
";
    let outputs: std::collections::BTreeSet<String> = (0..32)
        .map(|seed| {
            let t = run_script(text, Some(seed), true).unwrap().trace.unwrap();
            String::from_utf8(t.to_bytes()).unwrap().lines().last().unwrap().to_string()
        })
        .collect();
    assert_eq!(outputs.len(), 2);
}
