use vgr_core::fpvg::FpvgCategory::{self, Bgc, Bgw, Ggc, Ggw};
use vgr_core::vgr::{
    fpvg_category_of, hypothesis1_valid, hypothesis2_valid, vgr_valid, TruthAssignment,
};

// (case, RE, VG, A, H1, H2, VGR, category), transcribed row by row.
type Row = (
    &'static str,
    bool,
    bool,
    bool,
    bool,
    bool,
    bool,
    FpvgCategory,
);

const TABLE: [Row; 8] = [
    ("1.1", false, false, false, true, true, true, Bgw),
    ("1.2", false, true, false, true, true, true, Ggw),
    ("2.1", false, false, true, false, false, false, Bgc),
    ("2.2", false, true, true, false, true, false, Ggc),
    ("3.1", true, false, false, true, true, true, Bgw),
    ("3.2", true, true, false, true, true, true, Ggw),
    ("4.1", true, false, true, true, false, false, Bgc),
    ("4.2", true, true, true, true, true, true, Ggc),
];

#[test]
fn table_reproduced_exactly() {
    let cases = TruthAssignment::cases();
    let mut assertions = 0;
    for ((label, t), (case, re, vg, a, h1, h2, vgr, category)) in cases.iter().zip(TABLE) {
        assert_eq!(*label, case);
        assert_eq!(*t, TruthAssignment::new(re, vg, a));
        assert_eq!(hypothesis1_valid(*t), h1, "H1 case {case}");
        assert_eq!(hypothesis2_valid(*t), h2, "H2 case {case}");
        assert_eq!(vgr_valid(*t), vgr, "VGR case {case}");
        assert_eq!(fpvg_category_of(*t), category, "category case {case}");
        assertions += 4;
    }
    assert_eq!(assertions, 32);
}

#[test]
fn vgr_is_the_conjunction_of_both_hypotheses() {
    for (_, t) in TruthAssignment::cases() {
        assert_eq!(vgr_valid(t), hypothesis1_valid(t) && hypothesis2_valid(t));
    }
}

#[test]
fn only_correct_answers_can_break_vgr() {
    for (_, t) in TruthAssignment::cases() {
        if !t.answer {
            assert!(vgr_valid(t));
        }
    }
}
