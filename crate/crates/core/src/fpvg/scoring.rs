use crate::error::{Error, Result};

pub const VQA_ANNOTATORS: usize = 10;

/// 1.0 on exact string match, else 0.0.
pub fn gqa_accuracy(pred: &str, gt: &str) -> f64 {
    if pred == gt {
        1.0
    } else {
        0.0
    }
}

fn annotator_matches(pred: &str, answers: &[String]) -> Result<usize> {
    if answers.len() != VQA_ANNOTATORS {
        return Err(Error::AnnotatorCount(answers.len()));
    }
    Ok(answers.iter().filter(|a| *a == pred).count())
}

/// `min(#matching annotators / 3, 1)`.
pub fn vqa_soft_accuracy(pred: &str, answers: &[String]) -> Result<f64> {
    let count = annotator_matches(pred, answers)?;
    Ok((count as f64 / 3.0).min(1.0))
}

/// Binary correctness for grounding categories: any matching annotator.
pub fn vqa_binary_correct(pred: &str, answers: &[String]) -> Result<bool> {
    Ok(annotator_matches(pred, answers)? >= 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn answers(hits: usize) -> Vec<String> {
        (0..VQA_ANNOTATORS)
            .map(|i| {
                if i < hits {
                    "cat".to_string()
                } else {
                    format!("other{i}")
                }
            })
            .collect()
    }

    #[test]
    fn soft_accuracy_table() {
        for (hits, expected) in [
            (0, 0.0),
            (1, 1.0 / 3.0),
            (2, 2.0 / 3.0),
            (3, 1.0),
            (4, 1.0),
            (10, 1.0),
        ] {
            assert_eq!(vqa_soft_accuracy("cat", &answers(hits)).unwrap(), expected);
            assert_eq!(vqa_binary_correct("cat", &answers(hits)).unwrap(), hits > 0);
        }
        assert!(matches!(
            vqa_soft_accuracy("cat", &answers(3)[..9]),
            Err(Error::AnnotatorCount(9))
        ));
    }

    #[test]
    fn gqa_is_exact_match() {
        assert_eq!(gqa_accuracy("cat", "cat"), 1.0);
        assert_eq!(gqa_accuracy("Cat", "cat"), 0.0);
    }
}
