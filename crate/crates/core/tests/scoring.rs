use vgr_core::fpvg::{gqa_accuracy, vqa_binary_correct, vqa_soft_accuracy, VQA_ANNOTATORS};

fn annotators(hits: usize) -> Vec<String> {
    (0..VQA_ANNOTATORS)
        .map(|i| {
            if i < hits {
                "two".to_string()
            } else {
                format!("x{i}")
            }
        })
        .collect()
}

#[test]
fn soft_accuracy_table() {
    let table = [
        (0, 0.0),
        (1, 1.0 / 3.0),
        (2, 2.0 / 3.0),
        (3, 1.0),
        (4, 1.0),
        (5, 1.0),
        (6, 1.0),
        (7, 1.0),
        (9, 1.0),
        (10, 1.0),
    ];
    for (hits, expected) in table {
        let got = vqa_soft_accuracy("two", &annotators(hits)).unwrap();
        assert!((got - expected).abs() < 1e-12, "{hits} matches gave {got}");
        assert_eq!(
            vqa_binary_correct("two", &annotators(hits)).unwrap(),
            hits > 0
        );
    }
}

#[test]
fn wrong_annotator_count_is_rejected() {
    assert!(vqa_soft_accuracy("two", &annotators(3)[..9]).is_err());
    assert!(vqa_binary_correct("two", &[]).is_err());
}

#[test]
fn gqa_accuracy_is_exact_match() {
    assert_eq!(gqa_accuracy("cat", "cat"), 1.0);
    assert_eq!(gqa_accuracy("cat", "Cat"), 0.0);
}
