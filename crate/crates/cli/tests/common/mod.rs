#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TAGS: [&str; 4] = ["DET", "NOUN", "VERB", "ADJ"];
const TRANS: [[f64; 4]; 4] = [
    [0.0, 0.6, 0.0, 0.4],
    [0.1, 0.1, 0.7, 0.1],
    [0.6, 0.2, 0.0, 0.2],
    [0.0, 0.9, 0.0, 0.1],
];
const STEMS: [&str; 12] = ["bat", "gol", "riv", "mon", "tal", "sen", "por", "kel", "dra", "vim", "lun", "zor"];

fn word(rng: &mut ChaCha8Rng, tag: usize) -> String {
    let stem = STEMS[rng.gen_range(0..STEMS.len())];
    let stem2 = STEMS[rng.gen_range(0..STEMS.len())];
    match tag {
        0 => ["the", "a", "this"][rng.gen_range(0..3)].to_owned(),
        1 => format!("{stem}{stem2}ion"),
        2 => format!("{stem}{stem2}ed"),
        _ => format!("{stem}{stem2}ous"),
    }
}

/// A CoNLL-U corpus sampled from a fixed tag chain with suffix-marked words.
pub fn synthetic_conllu(seed: u64, sentences: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::new();
    for _ in 0..sentences {
        let len = rng.gen_range(3..9);
        let mut tag = 0usize;
        for pos in 0..len {
            if pos > 0 {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                tag = (0..4).find(|&j| { acc += TRANS[tag][j]; u < acc }).unwrap_or(3);
            }
            let w = word(&mut rng, tag);
            let mut form = w.clone();
            if pos == 0 {
                form[..1].make_ascii_uppercase();
            }
            let _ = writeln!(text, "{}\t{form}\t{w}\t{}\t_\t_\t0\tdep\t_\t_", pos + 1, TAGS[tag]);
        }
        text.push('\n');
    }
    text
}

pub fn write_file(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

/// Run the CLI in-process; returns (exit code, stdout, stderr).
pub fn run_cli(args: &[&str], stdin: &str) -> (i32, String, String) {
    let mut input = stdin.as_bytes();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("hmc-efb").chain(args.iter().copied());
    let code = hmc_efb_cli::run(argv, &mut input, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}
