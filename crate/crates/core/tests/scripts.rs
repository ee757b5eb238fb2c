mod common;

use std::io::Cursor;

use emachine::script::{run_script, ScriptError, TeacherScript};
use emachine::trace::{replay, replay_trace, ReplayOutcome, Trace, TraceError, TraceRecord};

const FIG3: &str = include_str!("../scripts/fig3.script");
const CORPUS: [(&str, &str); 4] = [
    ("fig3", FIG3),
    ("theorem3", include_str!("../scripts/theorem3.script")),
    ("theorem4", include_str!("../scripts/theorem4.script")),
    ("mentalset", include_str!("../scripts/mentalset.script")),
];

#[test]
fn fig3_table() {
    let run = run_script(FIG3, None, true).unwrap();
    assert!(run.report.pass);
    let trace = run.trace.unwrap();
    let rows: Vec<(String, String, String, Vec<String>)> = trace
        .records
        .iter()
        .filter_map(|r| match r {
            TraceRecord::World(w) => Some((w.addr.clone(), w.din.clone(), w.dout.clone(), w.mem.clone())),
            _ => None,
        })
        .collect();
    let expected = [
        ("1", "a", "a", ["a", "_"]),
        ("2", "a", "a", ["a", "a"]),
        ("1", "b", "b", ["b", "a"]),
        ("2", "b", "b", ["b", "b"]),
        ("1", "_", "b", ["b", "b"]),
        ("2", "a", "a", ["b", "a"]),
        ("1", "a", "a", ["a", "a"]),
        ("1", "_", "a", ["a", "a"]),
        ("2", "_", "a", ["a", "a"]),
        ("2", "_", "a", ["a", "a"]),
    ];
    assert_eq!(rows.len(), expected.len());
    for (nu, (got, want)) in rows.iter().zip(expected).enumerate() {
        assert_eq!(
            (got.0.as_str(), got.1.as_str(), got.2.as_str(), [got.3[0].as_str(), got.3[1].as_str()]),
            want,
            "ν={nu}"
        );
    }
}

#[test]
fn wrong_assertion_reports_its_cycle() {
    let bad = FIG3.replace("CYCLE addr=2 din=_      # ν=9\nASSERT dout=a", "CYCLE addr=2 din=_      # ν=9\nASSERT dout=b");
    assert_ne!(bad, FIG3);
    let run = run_script(&bad, None, false).unwrap();
    assert!(!run.report.pass);
    let failed: Vec<_> = run.report.records.iter().filter(|p| !p.ok).collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0].nu, Some(9));
}

#[test]
fn corpus_passes_and_replays() {
    for (name, text) in CORPUS {
        let a = run_script(text, None, true).unwrap();
        assert!(a.report.pass, "{name}: {:?}", a.report.records);
        let b = run_script(text, None, true).unwrap();
        let (ta, tb) = (a.trace.unwrap(), b.trace.unwrap());
        assert_eq!(ta.to_bytes(), tb.to_bytes(), "{name}");
        match replay(Cursor::new(ta.to_bytes())).unwrap() {
            ReplayOutcome::Match { cycles } => assert!(cycles > 0),
            other => panic!("{name}: {other:?}"),
        }
    }
}

#[test]
fn edited_excitation_diverges_at_its_cycle() {
    let trace = run_script(CORPUS[1].1, None, true).unwrap().trace.unwrap();
    let mut edited = trace.clone();
    let target = edited
        .records
        .iter_mut()
        .find_map(|r| match r {
            TraceRecord::Unit(u) if u.nu == 6 => Some(u),
            _ => None,
        })
        .unwrap();
    target.e[0] += 1e-12;
    let bytes = edited.to_bytes();
    assert_eq!(
        replay(Cursor::new(bytes)).unwrap(),
        ReplayOutcome::Diverges {
            nu: 6,
            detail: match replay_trace(&edited).unwrap() {
                ReplayOutcome::Diverges { detail, .. } => detail,
                other => panic!("{other:?}"),
            }
        }
    );
}

#[test]
fn empty_and_foreign_traces() {
    assert_eq!(replay(Cursor::new(Vec::new())).unwrap(), ReplayOutcome::Match { cycles: 0 });
    let trace = run_script(FIG3, None, true).unwrap().trace.unwrap();
    let text = String::from_utf8(trace.to_bytes()).unwrap().replacen("\"version\":1", "\"version\":99", 1);
    assert!(matches!(
        replay(Cursor::new(text.into_bytes())),
        Err(TraceError::Version { found: 99 })
    ));
    assert!(matches!(
        replay(Cursor::new(b"{\"hello\":1}\n".to_vec())),
        Err(TraceError::NotATrace)
    ));
    let back = Trace::read_from(Cursor::new(trace.to_bytes())).unwrap().unwrap();
    assert_eq!(back, trace);
}

#[test]
fn seed_override_changes_only_the_header_seed_without_ties() {
    let a = run_script(FIG3, Some(1), true).unwrap().trace.unwrap();
    let b = run_script(FIG3, Some(2), true).unwrap().trace.unwrap();
    assert_eq!(a.header.seed, 1);
    assert_eq!(a.records, b.records);
}

#[test]
fn capacity_exhaustion_is_an_error() {
    let text = "ALPHABET A 1\nALPHABET D a\nWORLD A D\nUNIT AS in=A,D out=D capacity=1 a=0.4 tau=10\nPHASE train\nCYCLE addr=1 din=a\nCYCLE addr=1 din=a\n";
    match run_script(text, None, false) {
        Err(ScriptError::Run { line, .. }) => assert_eq!(line, 7),
        other => panic!("{other:?}"),
    }
}

#[test]
fn random_scripts_parse() {
    for seed in 0..20 {
        let text = common::random_script(seed);
        TeacherScript::parse(&text).unwrap_or_else(|e| panic!("seed {seed}: {e}\n{text}"));
    }
}
