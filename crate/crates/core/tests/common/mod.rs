//! Brute-force reference implementations used as test oracles.
//!
//! Everything here is written with plain loops over positions, without
//! hash maps, so that it shares no code path with the library.
#![allow(dead_code)]

/// Occurrences of `gram` in `seq` by sliding-window scan.
pub fn occurrences<T: PartialEq>(seq: &[T], gram: &[T]) -> usize {
    if gram.is_empty() || seq.len() < gram.len() {
        return 0;
    }
    (0..=seq.len() - gram.len())
        .filter(|&i| &seq[i..i + gram.len()] == gram)
        .count()
}

/// Sum over distinct hypothesis n-grams of min(count in hyp, count in ref).
pub fn clipped<T: PartialEq>(hyp: &[T], reference: &[T], n: usize) -> usize {
    if hyp.len() < n {
        return 0;
    }
    let mut total = 0;
    for i in 0..=hyp.len() - n {
        let g = &hyp[i..i + n];
        let first = (0..i).all(|j| &hyp[j..j + n] != g);
        if first {
            total += occurrences(hyp, g).min(occurrences(reference, g));
        }
    }
    total
}

pub fn max_count<T: PartialEq>(seq: &[T], n: usize) -> usize {
    if n == 0 || seq.len() < n {
        return 0;
    }
    (0..=seq.len() - n)
        .map(|i| occurrences(seq, &seq[i..i + n]))
        .max()
        .unwrap_or(0)
}

pub fn distinct<T: PartialEq>(seq: &[T], n: usize) -> usize {
    if seq.len() < n {
        return 0;
    }
    (0..=seq.len() - n)
        .filter(|&i| (0..i).all(|j| seq[j..j + n] != seq[i..i + n]))
        .count()
}

pub fn chrf(hyp: &str, reference: &str, order: usize, beta: f64) -> f64 {
    let h: Vec<char> = hyp.chars().filter(|c| !c.is_whitespace()).collect();
    let r: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    match (h.is_empty(), r.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let (mut p, mut rc, mut k) = (0.0, 0.0, 0.0);
    for n in 1..=order {
        if h.len() < n || r.len() < n {
            continue;
        }
        let m = clipped(&h, &r, n) as f64;
        p += m / (h.len() + 1 - n) as f64;
        rc += m / (r.len() + 1 - n) as f64;
        k += 1.0;
    }
    p /= k;
    rc /= k;
    let b2 = beta * beta;
    if b2 * p + rc == 0.0 {
        0.0
    } else {
        (1.0 + b2) * p * rc / (b2 * p + rc)
    }
}

pub fn bleu(hyp: &[&str], reference: &[&str], max_n: usize, add_one: bool) -> f64 {
    if hyp.is_empty() {
        return 0.0;
    }
    let mut prod = 1.0f64;
    for n in 1..=max_n {
        if hyp.len() < n {
            continue;
        }
        let total = (hyp.len() + 1 - n) as f64;
        let m = clipped(hyp, reference, n) as f64;
        let p = if add_one && n >= 2 {
            (m + 1.0) / (total + 1.0)
        } else {
            m / total
        };
        prod *= p;
    }
    let bp = if hyp.len() >= reference.len() {
        1.0
    } else {
        (1.0 - reference.len() as f64 / hyp.len() as f64).exp()
    };
    bp * prod.powf(1.0 / max_n as f64)
}

pub fn words(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

/// Mean included score minus mean excluded score, by double loop.
pub fn mem_value(included: &[Vec<bool>], scores: &[Vec<f64>], sample: usize) -> Option<f64> {
    let (mut a, mut na, mut b, mut nb) = (0.0, 0, 0.0, 0);
    for k in 0..scores.len() {
        if included[k][sample] {
            a += scores[k][sample];
            na += 1;
        } else {
            b += scores[k][sample];
            nb += 1;
        }
    }
    (na > 0 && nb > 0).then(|| a / na as f64 - b / nb as f64)
}

/// Random lowercase sentence over a small vocabulary.
pub fn sentence(rng: &mut impl rand::Rng, vocab: usize, max_len: usize) -> String {
    let len = rng.gen_range(0..=max_len);
    (0..len)
        .map(|_| format!("w{}", rng.gen_range(0..vocab)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// A perturbation experiment whose outcome is fixed in advance.
///
/// Sample `i` has source `src{i} ...` and reference `ref{i} a b c d`.
/// The mock translates a clean source to its reference when `gate[i]`
/// holds and to an unrelated string otherwise; a source perturbed with
/// token `tok{k}` yields garbage exactly when `flip[i][k]` holds.
pub struct HpScript {
    pub gate: Vec<bool>,
    pub flip: Vec<Vec<bool>>,
}

impl HpScript {
    pub fn random(rng: &mut impl rand::Rng, n: usize, tokens: usize) -> Self {
        Self {
            gate: (0..n).map(|_| rng.gen_bool(0.6)).collect(),
            flip: (0..n)
                .map(|_| (0..tokens).map(|_| rng.gen_bool(0.3)).collect())
                .collect(),
        }
    }

    pub fn tokens(&self) -> Vec<String> {
        (0..self.flip.first().map_or(0, Vec::len))
            .map(|k| format!("tok{k}"))
            .collect()
    }

    pub fn source(i: usize) -> String {
        format!("src{i} ein kleines haus")
    }

    pub fn reference(i: usize) -> String {
        format!("ref{i} a b c d")
    }

    pub fn translate(&self, input: &str) -> String {
        let mut words = input.split_whitespace();
        let first = words.next().unwrap_or("");
        let (token, id_word) = match first.strip_prefix("tok") {
            Some(k) => (Some(k.parse::<usize>().unwrap()), words.next().unwrap_or("")),
            None => (None, first),
        };
        let i: usize = id_word.trim_start_matches("src").parse().unwrap();
        let base = if self.gate[i] {
            Self::reference(i)
        } else {
            "unrelated output".to_string()
        };
        match token {
            Some(k) if self.flip[i][k] => format!("garbage{i} nonsense{k} zz"),
            _ => base,
        }
    }

    /// (unique, total) by direct count over the plan.
    pub fn expected(&self) -> (usize, usize) {
        let mut unique = 0;
        let mut total = 0;
        for (i, row) in self.flip.iter().enumerate() {
            if !self.gate[i] {
                continue;
            }
            let c = row.iter().filter(|&&f| f).count();
            total += c;
            unique += usize::from(c > 0);
        }
        (unique, total)
    }
}
