#![allow(dead_code)]

use std::fmt::Write;

use emachine::rng::SessionRng;

fn pick<'a>(rng: &mut SessionRng, xs: &[&'a str]) -> &'a str {
    xs[rng.below(xs.len() as u64) as usize]
}

const SENSORIMOTOR: &str = "\
ALPHABET A 1 2 3
ALPHABET D a b
ALPHABET W w1 w2
ALPHABET K k1 k2
ALPHABET F f1 f2
WORLD A D
UNIT AS in=A,D out=D capacity=64 a=0.4 tau=40
UNIT AM in=D,F,W out=K,F capacity=64 a=0.3 tau=25 wx=1,1,2
ELOSS 1
";

const MENTAL_SET: &str = "\
ALPHABET X1 a1 a2 a3 a4 a5 a6 a7 a8
ALPHABET V 0 1
ALPHABET Y s0 s1
UNIT AM in=X1,V,V,Y out=Y capacity=64 a=0.03 tau=30 wx=4,1,1,1
LAYOUT mentalset
ELOSS 2
";

/// A random but valid teacher script: random switch settings, resets and
/// cycle inputs, including ties broken by the RNG.
pub fn random_script(seed: u64) -> String {
    let mut rng = SessionRng::new(seed);
    let mental = rng.below(3) == 0;
    let mut s = String::new();
    s.push_str(if mental { MENTAL_SET } else { SENSORIMOTOR });
    writeln!(s, "SEED {seed}").unwrap();
    let cycles = 10 + rng.below(40);
    for _ in 0..cycles {
        match rng.below(10) {
            0 => {
                let signal = pick(&mut rng, &["ns_sel", "nm_sel", "wen_as", "wen_am", "wen"]);
                writeln!(s, "SET {signal} {}", rng.below(2)).unwrap();
            }
            1 => writeln!(s, "SET feedback {}", pick(&mut rng, &["off", "delayed", "refresh"])).unwrap(),
            2 => writeln!(s, "PHASE {}", pick(&mut rng, &["train", "exam"])).unwrap(),
            3 if rng.below(3) == 0 => writeln!(s, "RESET").unwrap(),
            _ => {}
        }
        let mut line = String::from("CYCLE");
        if mental {
            if rng.below(2) == 0 {
                write!(line, " aud={}", pick(&mut rng, &["a1", "a2", "a3", "a4", "a5", "a6", "a7", "a8", "_"])).unwrap();
            }
            if rng.below(3) != 0 {
                write!(line, " screen={},{}", pick(&mut rng, &["0", "1", "_"]), pick(&mut rng, &["0", "1"])).unwrap();
            }
            if rng.below(2) == 0 {
                write!(line, " teach y1={}", pick(&mut rng, &["s0", "s1"])).unwrap();
            }
        } else {
            if rng.below(5) != 0 {
                write!(
                    line,
                    " addr={} din={}",
                    pick(&mut rng, &["1", "2", "3"]),
                    pick(&mut rng, &["a", "b", "_", "_"])
                )
                .unwrap();
            }
            if rng.below(2) == 0 {
                write!(line, " aud={}", pick(&mut rng, &["w1", "w2", "_"])).unwrap();
            }
            if rng.below(4) == 0 {
                write!(line, " fb={}", pick(&mut rng, &["f1", "f2"])).unwrap();
            }
            if rng.below(2) == 0 {
                write!(
                    line,
                    " teach y1={} y2={}",
                    pick(&mut rng, &["k1", "k2", "_"]),
                    pick(&mut rng, &["f1", "f2"])
                )
                .unwrap();
            }
        }
        writeln!(s, "{line}").unwrap();
    }
    s
}
