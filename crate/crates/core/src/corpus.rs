//! Parallel corpora and the plain-text file conventions shared by every
//! subcommand: one sentence per line, UTF-8, `\n` terminated.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Collapses runs of whitespace to single spaces and trims both ends.
pub fn normalize_ws(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for tok in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(tok);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SentencePair {
    pub source: String,
    pub target: String,
}

impl SentencePair {
    pub fn new(source: impl Into<String>, target: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            target: target.into(),
        }
    }
}

/// Aligned source/target pairs. The sample ID of a pair is its index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelCorpus {
    pub pairs: Vec<SentencePair>,
}

impl ParallelCorpus {
    pub fn new(pairs: Vec<SentencePair>) -> Self {
        Self { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn sources(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|p| p.source.as_str())
    }

    pub fn targets(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|p| p.target.as_str())
    }

    /// Reads `src.txt` / `tgt.txt` from a directory.
    pub fn read_dir(dir: &Path) -> Result<Self> {
        Self::read_aligned(&dir.join("src.txt"), &dir.join("tgt.txt"))
    }

    pub fn read_aligned(src: &Path, tgt: &Path) -> Result<Self> {
        let sources = read_lines(src)?;
        let targets = read_lines(tgt)?;
        if sources.len() != targets.len() {
            return Err(Error::InvalidArgument(format!(
                "{} has {} lines but {} has {}",
                src.display(),
                sources.len(),
                tgt.display(),
                targets.len()
            )));
        }
        Ok(Self::new(
            sources
                .into_iter()
                .zip(targets)
                .map(|(s, t)| SentencePair::new(s, t))
                .collect(),
        ))
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_lines(&dir.join("src.txt"), self.sources())?;
        write_lines(&dir.join("tgt.txt"), self.targets())
    }
}

pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file)
        .lines()
        .map(|l| l.map_err(|e| Error::io(path, e)))
        .collect()
}

pub fn write_lines<I, S>(path: &Path, lines: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for line in lines {
        out.write_all(line.as_ref().as_bytes())
            .and_then(|_| out.write_all(b"\n"))
            .map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Reads a file of `left<TAB>right` lines. Lines without a tab are a parse error.
pub fn read_tsv_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    read_lines(path)?
        .into_iter()
        .enumerate()
        .map(|(i, line)| match line.split_once('\t') {
            Some((a, b)) => Ok((a.to_string(), b.to_string())),
            None => Err(Error::parse(path, i + 1, "expected two tab-separated columns")),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_collapses_whitespace() {
        assert_eq!(normalize_ws("  a \t b\n c "), "a b c");
        assert_eq!(normalize_ws(""), "");
    }

    #[test]
    fn aligned_read_rejects_length_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        write_lines(&dir.path().join("src.txt"), ["a", "b"]).unwrap();
        write_lines(&dir.path().join("tgt.txt"), ["x"]).unwrap();
        assert!(ParallelCorpus::read_dir(dir.path()).is_err());
    }

    #[test]
    fn dir_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let c = ParallelCorpus::new(vec![SentencePair::new("das haus", "the house")]);
        c.write_dir(dir.path()).unwrap();
        assert_eq!(ParallelCorpus::read_dir(dir.path()).unwrap(), c);
    }
}
