//! A small synthetic corpus of block-chord progressions.

use std::path::Path;
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tonal_hmm::score_io::{write_work, NoteEvent, Rational64, Work};
use tonal_hmm::PitchClass;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tonal-hmm"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

pub fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Chord tones above a root: (semitones, has seventh).
fn tones(quality: &str) -> &'static [i32] {
    match quality {
        "M" => &[0, 4, 7],
        "m" => &[0, 3, 7],
        "d" => &[0, 3, 6],
        "7" => &[0, 4, 7, 10],
        other => panic!("quality {other}"),
    }
}

/// Four voices, soprano first, with the root in the bass.
fn voicing(root: i32, quality: &str) -> [i32; 4] {
    let t = tones(quality);
    let bass = 48 + root.rem_euclid(12);
    let mut upper = Vec::new();
    let mut p = bass + 1;
    let wanted: Vec<i32> = if t.len() == 4 {
        t[1..].to_vec()
    } else {
        vec![t[1], t[2], t[0]]
    };
    for iv in wanted {
        while (p - (bass + iv)).rem_euclid(12) != 0 {
            p += 1;
        }
        upper.push(p);
        p += 1;
    }
    [upper[2], upper[1], upper[0], bass]
}

/// Quarter-note chords given as (root above the tonic, quality).
pub fn cadence_work(id: &str, tonic: i32, chords: &[(i32, &str)]) -> Work {
    let mut voices: Vec<Vec<NoteEvent>> = vec![Vec::new(); 4];
    for (i, &(r, q)) in chords.iter().enumerate() {
        let v = voicing(tonic + r, q);
        for (voice, &p) in voices.iter_mut().zip(&v) {
            voice.push(NoteEvent::note(
                Rational64::from_integer(i as i64),
                Rational64::from_integer(1),
                PitchClass::wrap(p as i64),
                Some(p.div_euclid(12)),
            ));
        }
    }
    Work {
        id: id.to_string(),
        voices,
        time_signature: [4, 4].into(),
        key_signature: 0,
        pickup: Rational64::from_integer(0),
    }
}

/// Scale degrees with their quality and relative frequency.
const MAJOR: &[(i32, &str, u32)] = &[
    (0, "M", 10),
    (2, "m", 3),
    (4, "m", 1),
    (5, "M", 4),
    (7, "7", 6),
    (9, "m", 3),
    (11, "d", 1),
];

const MINOR: &[(i32, &str, u32)] = &[
    (0, "m", 10),
    (2, "d", 2),
    (3, "M", 2),
    (5, "m", 4),
    (7, "7", 6),
    (8, "M", 3),
];

fn pick(rng: &mut ChaCha8Rng, degrees: &[(i32, &'static str, u32)]) -> (i32, &'static str) {
    let total: u32 = degrees.iter().map(|d| d.2).sum();
    let mut u = rng.random_range(0..total);
    for &(r, q, w) in degrees {
        if u < w {
            return (r, q);
        }
        u -= w;
    }
    unreachable!()
}

/// Writes twelve works of 33 chords drawn from weighted scale degrees, every
/// third one minor. Chords 12 to 23 move to the dominant key and the last
/// chord is the tonic.
pub fn write_corpus(dir: &Path) {
    std::fs::create_dir_all(dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for w in 0..12 {
        let tonic = rng.random_range(0..12);
        let degrees = if w % 3 == 2 { MINOR } else { MAJOR };
        let mut chords: Vec<(i32, &str)> = (0..32)
            .map(|i| {
                let (r, q) = pick(&mut rng, degrees);
                (if (12..24).contains(&i) { r + 7 } else { r }, q)
            })
            .collect();
        chords.push((0, degrees[0].1));
        let id = format!("work{w:02}");
        write_work(&cadence_work(&id, tonic, &chords), &dir.join(format!("{id}.json"))).unwrap();
    }
}

/// Runs fit-chords, fit-keys and annotate with every method.
pub fn pipeline(corpus: &Path, out: &Path, seed: u64, runs: usize) {
    let (c, o) = (corpus.to_str().unwrap(), out.to_str().unwrap());
    let (seed, runs) = (seed.to_string(), runs.to_string());
    for cmd in ["fit-chords", "fit-keys"] {
        assert_ok(&run(&[
            cmd, "--corpus", c, "--out", o, "--runs", &runs, "--seed", &seed,
        ]));
    }
    for m in ["1", "2", "3"] {
        assert_ok(&run(&["annotate", "--method", m, "--corpus", c, "--out", o]));
    }
}
