//! Word-by-word dictionary translator speaking the line protocol.
//!
//! Reads one source sentence per line on stdin and writes one translation
//! per line on stdout, flushing after each. Words missing from the
//! dictionary are copied through. With `--hallucinate-rate`, a fixed
//! hash-chosen fraction of inputs is answered with unrelated filler instead,
//! which gives perturbation studies something to find.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

const FILLER: [&str; 8] = ["zorp", "blem", "quix", "varn", "splee", "mokt", "drell", "fusk"];

#[derive(Debug, Parser)]
#[command(name = "halluprobe-dict-translator", version)]
struct Args {
    /// Tab-separated `source<TAB>target` word pairs.
    #[arg(long)]
    dict: Option<PathBuf>,
    /// Fraction of inputs, chosen by hash, that get filler output.
    #[arg(long, default_value_t = 0.0)]
    hallucinate_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn load_dict(path: &PathBuf) -> io::Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .filter_map(|l| l.split_once('\t'))
        .map(|(s, t)| (s.trim().to_string(), t.trim().to_string()))
        .collect())
}

fn line_hash(line: &str, seed: u64) -> u64 {
    let mut h = DefaultHasher::new();
    seed.hash(&mut h);
    line.hash(&mut h);
    h.finish()
}

fn translate(line: &str, dict: &HashMap<String, String>, rate: f64, seed: u64) -> String {
    let h = line_hash(line, seed);
    if rate > 0.0 && (h >> 11) as f64 / (1u64 << 53) as f64 <= rate {
        let len = 6 + (h % 5) as usize;
        return (0..len)
            .map(|i| FILLER[(h as usize + i * 3) % FILLER.len()])
            .collect::<Vec<_>>()
            .join(" ");
    }
    line.split_whitespace()
        .map(|w| dict.get(w).map_or(w, String::as_str))
        .collect::<Vec<_>>()
        .join(" ")
}

fn main() -> ExitCode {
    let args = Args::parse();
    if !(0.0..=1.0).contains(&args.hallucinate_rate) {
        eprintln!("error: --hallucinate-rate must lie in [0, 1]");
        return ExitCode::from(4);
    }
    let dict = match args.dict.as_ref().map(load_dict).transpose() {
        Ok(d) => d.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: reading dictionary: {e}");
            return ExitCode::from(4);
        }
    };
    let stdin = io::stdin();
    let mut out = io::stdout().lock();
    for line in stdin.lock().lines() {
        let Ok(line) = line else { return ExitCode::FAILURE };
        let t = translate(&line, &dict, args.hallucinate_rate, args.seed);
        if writeln!(out, "{t}").and_then(|_| out.flush()).is_err() {
            return ExitCode::FAILURE;
        }
    }
    ExitCode::SUCCESS
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_by_word_with_passthrough() {
        let dict: HashMap<String, String> = [("ein", "a"), ("haus", "house")]
            .into_iter()
            .map(|(s, t)| (s.to_string(), t.to_string()))
            .collect();
        assert_eq!(translate("ein  kleines haus", &dict, 0.0, 0), "a kleines house");
    }

    #[test]
    fn filler_is_deterministic_and_unrelated() {
        let dict = HashMap::new();
        let a = translate("some input", &dict, 1.0, 3);
        assert_eq!(a, translate("some input", &dict, 1.0, 3));
        assert!(a.split_whitespace().all(|w| FILLER.contains(&w)));
    }
}
