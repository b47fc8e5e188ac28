//! Paired sign test with Bonferroni correction over accuracy records.
//!
//! Tail probabilities are computed exactly with big integers and only turned
//! into `f64` at the end.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One cross-validation fold result.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRecord {
    pub descriptor: String,
    pub classifier: String,
    pub dataset: String,
    pub fold: usize,
    /// Percent in `[0, 100]`.
    pub accuracy: f64,
    pub n_test: usize,
    pub seed: u64,
}

impl AccuracyRecord {
    /// The pairing key of the sign test.
    pub fn key(&self) -> (String, String, usize) {
        (self.classifier.clone(), self.dataset.clone(), self.fold)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ResultsRow {
    descriptor: String,
    classifier: String,
    dataset: String,
    fold: usize,
    accuracy_percent: String,
    n_test: usize,
    seed: u64,
}

/// Writes the results CSV (accuracy with two decimals).
pub fn write_results_csv<W: Write>(out: W, records: &[AccuracyRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for r in records {
        writer.serialize(ResultsRow {
            descriptor: r.descriptor.clone(),
            classifier: r.classifier.clone(),
            dataset: r.dataset.clone(),
            fold: r.fold,
            accuracy_percent: format!("{:.2}", r.accuracy),
            n_test: r.n_test,
            seed: r.seed,
        })?;
    }
    writer.flush().map_err(|e| Error::io("<results csv>", e))?;
    Ok(())
}

pub fn read_results_csv<R: Read>(input: R) -> Result<Vec<AccuracyRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    reader
        .deserialize::<ResultsRow>()
        .map(|row| {
            let row = row?;
            let accuracy: f64 = row.accuracy_percent.trim().parse().map_err(|_| {
                Error::InvalidParameter(format!("bad accuracy_percent {:?}", row.accuracy_percent))
            })?;
            Ok(AccuracyRecord {
                descriptor: row.descriptor,
                classifier: row.classifier,
                dataset: row.dataset,
                fold: row.fold,
                accuracy,
                n_test: row.n_test,
                seed: row.seed,
            })
        })
        .collect()
}

/// `P(X >= wins)` for `X ~ Binomial(n, 1/2)` as an exact fraction.
pub fn binom_one_tail_exact(n: u64, wins: u64) -> Result<BigRational> {
    if n == 0 || wins > n {
        return Err(Error::InvalidParameter(format!("need 0 <= wins <= n and n >= 1, got n={n} wins={wins}")));
    }
    let mut c = BigUint::one();
    let mut tail = BigUint::zero();
    for j in 0..=n {
        if j >= wins {
            tail += &c;
        }
        // C(n, j+1) = C(n, j) * (n - j) / (j + 1)
        c = c * (n - j) / (j + 1);
    }
    Ok(BigRational::new(BigInt::from(tail), BigInt::from(BigUint::one() << n)))
}

pub fn binom_one_tail(n: u64, wins: u64) -> Result<f64> {
    let p = binom_one_tail_exact(n, wins)?;
    p.to_f64().ok_or_else(|| Error::InvalidParameter("tail probability not representable".into()))
}

pub fn bonferroni(alpha: f64, comparisons: u32) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) || comparisons == 0 {
        return Err(Error::InvalidParameter(format!(
            "need 0 < alpha < 1 and m >= 1, got alpha={alpha} m={comparisons}"
        )));
    }
    Ok(alpha / comparisons as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignTestResult {
    /// Informative pairs (ties dropped).
    pub n: u64,
    pub wins: u64,
    pub ties: u64,
    pub p_one_tail: f64,
    pub alpha: f64,
    pub comparisons: u32,
    pub alpha_corrected: f64,
    pub significant: bool,
}

impl SignTestResult {
    pub fn losses(&self) -> u64 {
        self.n - self.wins
    }

    pub fn informative(&self) -> bool {
        self.n > 0
    }

    pub fn verdict(&self) -> &'static str {
        if !self.informative() {
            "no informative pairs"
        } else if self.significant {
            "significant"
        } else {
            "not significant"
        }
    }

    pub fn report(&self, name_a: &str, name_b: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "sign test: {name_a} vs {name_b} (one-tailed, ties dropped)");
        let _ = writeln!(s, "pairs: {}", self.n + self.ties);
        let _ = writeln!(s, "ties: {}", self.ties);
        let _ = writeln!(s, "n: {}", self.n);
        let _ = writeln!(s, "wins: {}", self.wins);
        let _ = writeln!(s, "losses: {}", self.losses());
        let _ = writeln!(s, "p: {:.6}", self.p_one_tail);
        let _ = writeln!(
            s,
            "alpha: {} / {} = {:.6}",
            self.alpha, self.comparisons, self.alpha_corrected
        );
        let _ = writeln!(s, "verdict: {}", self.verdict());
        s
    }

    pub fn write_csv<W: Write>(&self, out: W, name_a: &str, name_b: &str) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record([
            "method_a", "method_b", "n", "wins", "losses", "ties", "p_one_tail", "alpha", "comparisons",
            "alpha_corrected", "verdict",
        ])?;
        writer.write_record([
            name_a.to_string(),
            name_b.to_string(),
            self.n.to_string(),
            self.wins.to_string(),
            self.losses().to_string(),
            self.ties.to_string(),
            format!("{:.6}", self.p_one_tail),
            self.alpha.to_string(),
            self.comparisons.to_string(),
            format!("{:.6}", self.alpha_corrected),
            self.verdict().to_string(),
        ])?;
        writer.flush().map_err(|e| Error::io("<stats csv>", e))?;
        Ok(())
    }
}

fn key_label(k: &(String, String, usize)) -> String {
    format!("{}/{}/fold{}", k.0, k.1, k.2)
}

fn index_by_key(records: &[AccuracyRecord], side: &str) -> Result<BTreeMap<(String, String, usize), f64>> {
    let mut map = BTreeMap::new();
    for r in records {
        if map.insert(r.key(), r.accuracy).is_some() {
            return Err(Error::InvalidParameter(format!("duplicate key {} in {side}", key_label(&r.key()))));
        }
    }
    Ok(map)
}

/// One-tailed sign test that method A beats method B.
///
/// Records are paired on (classifier, dataset, fold); a pair is a win when
/// A's accuracy is strictly greater, and exact ties are dropped.
pub fn sign_test(a: &[AccuracyRecord], b: &[AccuracyRecord], alpha: f64, comparisons: u32) -> Result<SignTestResult> {
    let alpha_corrected = bonferroni(alpha, comparisons)?;
    let (ma, mb) = (index_by_key(a, "A")?, index_by_key(b, "B")?);
    let mut missing: Vec<String> = Vec::new();
    missing.extend(ma.keys().filter(|k| !mb.contains_key(*k)).map(|k| format!("{} (not in B)", key_label(k))));
    missing.extend(mb.keys().filter(|k| !ma.contains_key(*k)).map(|k| format!("{} (not in A)", key_label(k))));
    if !missing.is_empty() {
        return Err(Error::KeyMismatch(missing));
    }

    let (mut wins, mut ties, mut n) = (0u64, 0u64, 0u64);
    for (key, &acc_a) in &ma {
        let acc_b = mb[key];
        if acc_a == acc_b {
            ties += 1;
        } else {
            n += 1;
            wins += (acc_a > acc_b) as u64;
        }
    }
    let p_one_tail = if n == 0 { 1.0 } else { binom_one_tail(n, wins)? };
    Ok(SignTestResult {
        n,
        wins,
        ties,
        p_one_tail,
        alpha,
        comparisons,
        alpha_corrected,
        significant: n > 0 && p_one_tail < alpha_corrected,
    })
}
