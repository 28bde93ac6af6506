use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpvg::{FpvgCategory, FpvgRecord};
use crate::scalar::Scalar;

/// Percentages over the evaluated questions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates<T> {
    pub acc: T,
    pub fpvg_plus: T,
    pub fpvg_minus: T,
    pub ggc: T,
    pub ggw: T,
    pub bgc: T,
    pub bgw: T,
}

impl<T: Scalar> Rates<T> {
    /// Derives FPVG+/FPVG− and accuracy from the four category rates.
    pub fn from_categories(ggc: T, ggw: T, bgc: T, bgw: T) -> Self {
        Rates {
            acc: ggc + bgc,
            fpvg_plus: ggc + ggw,
            fpvg_minus: bgc + bgw,
            ggc,
            ggw,
            bgc,
            bgw,
        }
    }

    /// Rates from category counts `[GGC, GGW, BGC, BGW]`.
    pub fn from_counts(counts: [usize; 4]) -> Result<Self> {
        let n: usize = counts.iter().sum();
        if n == 0 {
            return Err(Error::EmptyEvaluation);
        }
        let pct = |k: usize| T::lit(100.0 * k as f64 / n as f64);
        let [ggc, ggw, bgc, bgw] = counts;
        Ok(Rates {
            acc: pct(ggc + bgc),
            fpvg_plus: pct(ggc + ggw),
            fpvg_minus: pct(bgc + bgw),
            ggc: pct(ggc),
            ggw: pct(ggw),
            bgc: pct(bgc),
            bgw: pct(bgw),
        })
    }

    /// Largest violation of the category-sum, FPVG± and accuracy identities.
    pub fn identity_error(&self) -> T {
        let hundred = T::lit(100.0);
        [
            (self.ggc + self.ggw + self.bgc + self.bgw - hundred).abs(),
            (self.fpvg_plus - self.ggc - self.ggw).abs(),
            (self.fpvg_minus - self.bgc - self.bgw).abs(),
            (self.acc - self.ggc - self.bgc).abs(),
        ]
        .into_iter()
        .fold(T::zero(), T::max)
    }
}

/// Aggregate rates plus the per-question records behind them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundingReport<T> {
    pub n_questions: usize,
    pub rates: Rates<T>,
    pub records: Vec<FpvgRecord>,
}

impl<T: Scalar> GroundingReport<T> {
    pub fn from_records(records: Vec<FpvgRecord>) -> Result<Self> {
        let mut counts = [0usize; 4];
        for r in &records {
            let slot = FpvgCategory::ALL
                .iter()
                .position(|c| *c == r.category)
                .expect("category is one of four");
            counts[slot] += 1;
        }
        Ok(GroundingReport {
            n_questions: records.len(),
            rates: Rates::from_counts(counts)?,
            records,
        })
    }

    pub fn counts(&self) -> [usize; 4] {
        let mut counts = [0usize; 4];
        for r in &self.records {
            counts[FpvgCategory::ALL
                .iter()
                .position(|c| *c == r.category)
                .unwrap()] += 1;
        }
        counts
    }
}

/// Markdown table with one row per `(label, rates)` in the column order
/// Acc, FPVG+, GGC, GGW, BGC, BGW.
pub fn rates_markdown<T: Scalar>(rows: &[(String, Rates<T>)]) -> String {
    let mut out = String::from(
        "| | Acc | FPVG+ | GGC | GGW | BGC | BGW |\n|---|---:|---:|---:|---:|---:|---:|\n",
    );
    for (label, r) in rows {
        let _ = writeln!(
            out,
            "| {label} | {:.2} | {:.2} | {:.2} | {:.2} | {:.2} | {:.2} |",
            r.acc.to_f64_lossy(),
            r.fpvg_plus.to_f64_lossy(),
            r.ggc.to_f64_lossy(),
            r.ggw.to_f64_lossy(),
            r.bgc.to_f64_lossy(),
            r.bgw.to_f64_lossy()
        );
    }
    out
}
