//! Cross-attention statistics over serialized attention maps.
//!
//! A map has one row per target position and one column per source
//! position; every row is a distribution over the source. Multi-head dumps
//! are averaged into a single map before any statistic is taken.
//!
//! File format, one map per file:
//!
//! ```text
//! ATTN v1 <sample_id> <variant> <heads> <T_len> <S_len>
//! <S_len space-separated decimals>      (heads x T_len lines, head-major)
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ROW_SUM_TOLERANCE: f64 = 1e-4;
pub const BASE_VARIANT: &str = "base";
pub const PERTURBED_VARIANT: &str = "perturbed";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Natural,
    Two,
}

impl LogBase {
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
        }
    }
}

/// Row-stochastic `T_len x S_len` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionMatrix {
    pub sample_id: usize,
    pub variant: String,
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

fn check_rows(values: &[f64], rows: usize, cols: usize) -> std::result::Result<(), String> {
    if rows == 0 || cols == 0 {
        return Err(format!("empty attention map ({rows}x{cols})"));
    }
    if values.len() != rows * cols {
        return Err(format!("{} values for a {rows}x{cols} map", values.len()));
    }
    for (i, row) in values.chunks(cols).enumerate() {
        if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(format!("row {i} has invalid weight {v}"));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(format!("row {i} sums to {sum}, not 1"));
        }
    }
    Ok(())
}

impl AttentionMatrix {
    pub fn new(
        sample_id: usize,
        variant: impl Into<String>,
        rows: usize,
        cols: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        check_rows(&values, rows, cols).map_err(Error::InvalidArgument)?;
        Ok(Self {
            sample_id,
            variant: variant.into(),
            rows,
            cols,
            values,
        })
    }

    pub fn from_rows(sample_id: usize, variant: impl Into<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidArgument("ragged attention rows".into()));
        }
        Self::new(sample_id, variant, rows.len(), cols, rows.concat())
    }

    /// Averages per-head maps of identical shape.
    pub fn from_heads(
        sample_id: usize,
        variant: impl Into<String>,
        rows: usize,
        cols: usize,
        heads: &[Vec<f64>],
    ) -> Result<Self> {
        if heads.is_empty() {
            return Err(Error::InvalidArgument("no attention heads".into()));
        }
        for (h, head) in heads.iter().enumerate() {
            check_rows(head, rows, cols).map_err(|m| Error::InvalidArgument(format!("head {h}: {m}")))?;
        }
        let mut avg = vec![0.0; rows * cols];
        for head in heads {
            for (a, v) in avg.iter_mut().zip(head) {
                *a += v;
            }
        }
        let k = heads.len() as f64;
        avg.iter_mut().for_each(|a| *a /= k);
        Self::new(sample_id, variant, rows, cols, avg)
    }

    pub fn target_len(&self) -> usize {
        self.rows
    }

    pub fn source_len(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.cols)
    }

    /// Source column on the diagonal band for target row `i`: `round(i * S_len / T_len)`.
    pub fn band_column(&self, i: usize) -> usize {
        let j = (2 * i * self.cols + self.rows) / (2 * self.rows);
        j.min(self.cols - 1)
    }
}

/// A parsed attention file, heads kept separate.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionFile {
    pub sample_id: usize,
    pub variant: String,
    pub target_len: usize,
    pub source_len: usize,
    pub heads: Vec<Vec<f64>>,
}

impl AttentionFile {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(origin, 1, "empty attention file"))?;
        let fields: Vec<&str> = header.split(' ').collect();
        if fields.len() != 7 || fields[0] != "ATTN" || fields[1] != "v1" {
            return Err(Error::parse(
                origin,
                1,
                "expected `ATTN v1 <sample_id> <variant> <heads> <T_len> <S_len>`",
            ));
        }
        let num = |s: &str, what: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::parse(origin, 1, format!("bad {what} `{s}`: {e}")))
        };
        let sample_id = num(fields[2], "sample id")?;
        let variant = fields[3].to_string();
        let n_heads = num(fields[4], "head count")?;
        let target_len = num(fields[5], "target length")?;
        let source_len = num(fields[6], "source length")?;
        if n_heads == 0 || target_len == 0 || source_len == 0 {
            return Err(Error::parse(origin, 1, "heads, T_len and S_len must be positive"));
        }

        let mut heads = Vec::with_capacity(n_heads);
        for _ in 0..n_heads {
            let mut head = Vec::with_capacity(target_len * source_len);
            for _ in 0..target_len {
                let (ln, line) = lines
                    .next()
                    .ok_or_else(|| Error::parse(origin, text.lines().count() + 1, "truncated attention file"))?;
                let before = head.len();
                for tok in line.split(' ') {
                    let v = tok
                        .parse::<f64>()
                        .map_err(|e| Error::parse(origin, ln + 1, format!("bad weight `{tok}`: {e}")))?;
                    head.push(v);
                }
                if head.len() - before != source_len {
                    return Err(Error::parse(
                        origin,
                        ln + 1,
                        format!("expected {source_len} weights, found {}", head.len() - before),
                    ));
                }
            }
            heads.push(head);
        }
        if let Some((ln, extra)) = lines.find(|(_, l)| !l.is_empty()) {
            return Err(Error::parse(origin, ln + 1, format!("trailing content `{extra}`")));
        }
        Ok(Self {
            sample_id,
            variant,
            target_len,
            source_len,
            heads,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "ATTN v1 {} {} {} {} {}\n",
            self.sample_id,
            self.variant,
            self.heads.len(),
            self.target_len,
            self.source_len
        );
        for head in &self.heads {
            for row in head.chunks(self.source_len) {
                for (j, v) in row.iter().enumerate() {
                    if j > 0 {
                        out.push(' ');
                    }
                    write!(out, "{v}").unwrap();
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn into_matrix(self) -> Result<AttentionMatrix> {
        AttentionMatrix::from_heads(
            self.sample_id,
            self.variant,
            self.target_len,
            self.source_len,
            &self.heads,
        )
    }

    pub fn from_matrix(m: &AttentionMatrix) -> Self {
        Self {
            sample_id: m.sample_id,
            variant: m.variant.clone(),
            target_len: m.rows,
            source_len: m.cols,
            heads: vec![m.values.clone()],
        }
    }
}

pub fn read_attention_file(path: &Path) -> Result<AttentionMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    AttentionFile::parse(&text, path)?
        .into_matrix()
        .map_err(|e| Error::parse(path, 1, e.to_string()))
}

pub fn write_attention_file(path: &Path, file: &AttentionFile) -> Result<()> {
    std::fs::write(path, file.to_text()).map_err(|e| Error::io(path, e))
}

fn entropy(p: impl Iterator<Item = f64>, base: LogBase) -> f64 {
    let h: f64 = p.filter(|&x| x > 0.0).map(|x| -x * base.log(x)).sum();
    h.max(0.0)
}

/// Mean over target rows of each row's entropy.
pub fn row_entropy(m: &AttentionMatrix, base: LogBase) -> f64 {
    m.rows().map(|r| entropy(r.iter().copied(), base)).sum::<f64>() / m.rows as f64
}

/// Attention mass on the diagonal band, one value per target row.
pub fn diagonal_masses(m: &AttentionMatrix) -> Vec<f64> {
    (0..m.rows).map(|i| m.row(i)[m.band_column(i)]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagonalProfile {
    /// Entropy of the renormalized band masses over target rows.
    pub entropy: f64,
    /// Mean band mass per row.
    pub mean_mass: f64,
    /// Set when no mass lies on the band; `entropy` is then 0 by convention.
    pub zero_mass: bool,
}

pub fn diagonal_profile(m: &AttentionMatrix, base: LogBase) -> DiagonalProfile {
    let masses = diagonal_masses(m);
    let total: f64 = masses.iter().sum();
    let mean_mass = total / masses.len() as f64;
    if total <= 0.0 {
        return DiagonalProfile {
            entropy: 0.0,
            mean_mass,
            zero_mass: true,
        };
    }
    DiagonalProfile {
        entropy: entropy(masses.iter().map(|d| d / total), base),
        mean_mass,
        zero_mass: false,
    }
}

pub fn diagonal_entropy(m: &AttentionMatrix, base: LogBase) -> f64 {
    diagonal_profile(m, base).entropy
}

/// Mean over target rows of the weight on the last source position.
pub fn last_token_attention(m: &AttentionMatrix) -> f64 {
    let last = m.cols - 1;
    (m.rows().map(|r| r[last]).sum::<f64>() / m.rows as f64).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttentionStats {
    pub row_entropy: f64,
    pub diagonal_entropy: f64,
    pub diagonal_mass: f64,
    pub last_token_attention: f64,
    pub zero_diagonal: bool,
}

pub fn stats(m: &AttentionMatrix, base: LogBase) -> AttentionStats {
    let diag = diagonal_profile(m, base);
    AttentionStats {
        row_entropy: row_entropy(m, base),
        diagonal_entropy: diag.entropy,
        diagonal_mass: diag.mean_mass,
        last_token_attention: last_token_attention(m),
        zero_diagonal: diag.zero_mass,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionAggregate {
    pub count: usize,
    pub row_entropy: f64,
    pub diagonal_entropy: f64,
    pub diagonal_mass: f64,
    pub last_token_attention: f64,
    pub zero_diagonal: usize,
    pub log_base: LogBase,
}

/// Unweighted mean of per-matrix statistics.
pub fn aggregate<'a, I>(matrices: I, base: LogBase) -> Result<AttentionAggregate>
where
    I: IntoIterator<Item = &'a AttentionMatrix>,
{
    let per: Vec<AttentionStats> = matrices.into_iter().map(|m| stats(m, base)).collect();
    if per.is_empty() {
        return Err(Error::Insufficient("no attention maps to aggregate".into()));
    }
    let k = per.len() as f64;
    let mean = |f: fn(&AttentionStats) -> f64| per.iter().map(f).sum::<f64>() / k;
    Ok(AttentionAggregate {
        count: per.len(),
        row_entropy: mean(|s| s.row_entropy),
        diagonal_entropy: mean(|s| s.diagonal_entropy),
        diagonal_mass: mean(|s| s.diagonal_mass),
        last_token_attention: mean(|s| s.last_token_attention),
        zero_diagonal: per.iter().filter(|s| s.zero_diagonal).count(),
        log_base: base,
    })
}

/// Attention maps keyed by `(sample_id, variant)`.
#[derive(Debug, Clone, Default)]
pub struct AttentionStore {
    maps: HashMap<(usize, String), AttentionMatrix>,
}

impl AttentionStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, m: AttentionMatrix) -> Option<AttentionMatrix> {
        self.maps.insert((m.sample_id, m.variant.clone()), m)
    }

    pub fn get(&self, sample_id: usize, variant: &str) -> Option<&AttentionMatrix> {
        self.maps.get(&(sample_id, variant.to_string()))
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Loads every `*.attn` file in `dir`. Keys come from the file headers.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "attn"))
            .collect();
        paths.sort();
        let mut store = Self::new();
        for p in paths {
            let m = read_attention_file(&p)?;
            let key = (m.sample_id, m.variant.clone());
            if store.insert(m).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "duplicate attention map for sample {} variant {} ({})",
                    key.0,
                    key.1,
                    p.display()
                )));
            }
        }
        Ok(store)
    }

    /// Aggregates the `variant` maps of the listed samples; samples without a map are reported.
    pub fn aggregate_set(
        &self,
        ids: &[usize],
        variant: &str,
        base: LogBase,
    ) -> (Result<AttentionAggregate>, Vec<usize>) {
        let mut missing = Vec::new();
        let found: Vec<&AttentionMatrix> = ids
            .iter()
            .filter_map(|&id| {
                let m = self.get(id, variant);
                if m.is_none() {
                    missing.push(id);
                }
                m
            })
            .collect();
        (aggregate(found, base), missing)
    }

    pub fn sample_ids(&self) -> BTreeMap<usize, Vec<String>> {
        let mut out: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for (id, v) in self.maps.keys() {
            out.entry(*id).or_default().push(v.clone());
        }
        out.values_mut().for_each(|v| v.sort());
        out
    }
}
