//! Propositional layer: the two hypotheses, the VGR proposition, the FPVG
//! reading of each truth assignment, and corollary checks on reported rates.

mod fixtures;

pub use fixtures::{
    aug_fixture, ood_fixture, run_fixtures, run_fixtures_in, FixtureReport, FixtureRow,
    FixtureRowResult, FixtureTable, AUG_FIXTURE_FILE, OOD_FIXTURE_FILE,
};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpvg::{FpvgCategory, Rates};
use crate::scalar::Scalar;

/// Truth values of reasoning (RE), visual grounding (VG) and answer (A).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TruthAssignment {
    pub reasoning: bool,
    pub vg: bool,
    pub answer: bool,
}

impl TruthAssignment {
    pub const fn new(reasoning: bool, vg: bool, answer: bool) -> Self {
        TruthAssignment {
            reasoning,
            vg,
            answer,
        }
    }

    /// All eight assignments with their case labels, RE-major then A then VG.
    pub fn cases() -> [(&'static str, TruthAssignment); 8] {
        [
            ("1.1", Self::new(false, false, false)),
            ("1.2", Self::new(false, true, false)),
            ("2.1", Self::new(false, false, true)),
            ("2.2", Self::new(false, true, true)),
            ("3.1", Self::new(true, false, false)),
            ("3.2", Self::new(true, true, false)),
            ("4.1", Self::new(true, false, true)),
            ("4.2", Self::new(true, true, true)),
        ]
    }
}

/// A → RE.
pub fn hypothesis1_valid(t: TruthAssignment) -> bool {
    !t.answer || t.reasoning
}

/// A → VG.
pub fn hypothesis2_valid(t: TruthAssignment) -> bool {
    !t.answer || t.vg
}

/// A → (RE ∧ VG).
pub fn vgr_valid(t: TruthAssignment) -> bool {
    !t.answer || (t.reasoning && t.vg)
}

/// Only VG and A are observable, so reasoning plays no part.
pub fn fpvg_category_of(t: TruthAssignment) -> FpvgCategory {
    FpvgCategory::from_flags(t.vg, t.answer)
}

/// Allowed deviation, in percentage points, before a corollary counts as
/// violated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorollaryTolerance {
    pub bgc_max: f64,
    pub ggc_acc_gap_max: f64,
    pub acc_over_fpvg_max: f64,
}

impl Default for CorollaryTolerance {
    fn default() -> Self {
        CorollaryTolerance {
            bgc_max: 5.0,
            ggc_acc_gap_max: 5.0,
            acc_over_fpvg_max: 5.0,
        }
    }
}

impl CorollaryTolerance {
    pub fn uniform(pp: f64) -> Self {
        CorollaryTolerance {
            bgc_max: pp,
            ggc_acc_gap_max: pp,
            acc_over_fpvg_max: pp,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("bgc_max", self.bgc_max),
            ("ggc_acc_gap_max", self.ggc_acc_gap_max),
            ("acc_over_fpvg_max", self.acc_over_fpvg_max),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParams(format!(
                    "tolerance {name} must be >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Corollary {
    /// BGC ≈ 0.
    #[serde(rename = "C1_BGC_zero")]
    C1BgcZero,
    /// GGC ≈ accuracy.
    #[serde(rename = "C2_GGC_equals_Acc")]
    C2GgcEqualsAcc,
    /// Accuracy ≤ FPVG+.
    #[serde(rename = "C3_Acc_le_FPVGplus")]
    C3AccLeFpvgPlus,
}

impl Corollary {
    pub const ALL: [Corollary; 3] = [
        Corollary::C1BgcZero,
        Corollary::C2GgcEqualsAcc,
        Corollary::C3AccLeFpvgPlus,
    ];

    pub fn short(self) -> &'static str {
        match self {
            Corollary::C1BgcZero => "C1",
            Corollary::C2GgcEqualsAcc => "C2",
            Corollary::C3AccLeFpvgPlus => "C3",
        }
    }
}

impl fmt::Display for Corollary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Violated,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorollaryFinding<T> {
    pub corollary: Corollary,
    pub measured_gap: T,
    pub tolerance: T,
    pub verdict: Verdict,
}

/// Gaps are BGC, Acc − GGC and max(0, Acc − FPVG+); a gap above its
/// tolerance is a violation.
pub fn check_corollaries<T: Scalar>(
    rates: &Rates<T>,
    tol: &CorollaryTolerance,
) -> [CorollaryFinding<T>; 3] {
    let gaps = [
        (Corollary::C1BgcZero, rates.bgc, tol.bgc_max),
        (
            Corollary::C2GgcEqualsAcc,
            rates.acc - rates.ggc,
            tol.ggc_acc_gap_max,
        ),
        (
            Corollary::C3AccLeFpvgPlus,
            (rates.acc - rates.fpvg_plus).max(T::zero()),
            tol.acc_over_fpvg_max,
        ),
    ];
    gaps.map(|(corollary, gap, tolerance)| {
        let tolerance = T::lit(tolerance);
        CorollaryFinding {
            corollary,
            measured_gap: gap,
            tolerance,
            verdict: if gap > tolerance {
                Verdict::Violated
            } else {
                Verdict::Pass
            },
        }
    })
}
