use std::collections::{BTreeMap, BTreeSet};

use vgr_core::data::{ProgramStep, Provenance, Question, QuestionType};
use vgr_core::features::{FeatureVector, ImageFeatures};
use vgr_core::models::{AnswerVocab, BowVocab, LinearHyper, LinearModel};

fn model(classes: usize, dim: usize, hyper: LinearHyper) -> LinearModel<f64> {
    let vocab = AnswerVocab::new((0..classes).map(|i| format!("a{i}")).collect()).unwrap();
    LinearModel::init(vocab, BowVocab::from(Vec::new()), dim, hyper)
}

fn five_samples() -> (Vec<Vec<f64>>, Vec<usize>) {
    let inputs = vec![
        vec![0.3, -1.2, 0.8, 0.05],
        vec![-0.7, 0.4, 0.1, 1.5],
        vec![1.1, 0.9, -0.6, -0.2],
        vec![0.0, -0.3, 1.7, 0.6],
        vec![-1.4, 0.2, -0.9, 0.3],
    ];
    (inputs, vec![0, 2, 1, 2, 0])
}

#[test]
fn analytic_gradient_matches_central_differences() {
    let hyper = LinearHyper {
        init_scale: 0.8,
        seed: 11,
        ..LinearHyper::default()
    };
    let mut m = model(3, 4, hyper);
    let (inputs, labels) = five_samples();
    let (_, grad_w, grad_b) = m.loss_and_gradient(&inputs, &labels);
    let h = 1e-5;
    let rel = |analytic: f64, numeric: f64| {
        (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
    };

    for (i, analytic) in grad_w.iter().enumerate() {
        let w = m.weights[i];
        m.weights[i] = w + h;
        let plus = m.mean_loss(&inputs, &labels);
        m.weights[i] = w - h;
        let minus = m.mean_loss(&inputs, &labels);
        m.weights[i] = w;
        let numeric = (plus - minus) / (2.0 * h);
        assert!(
            rel(*analytic, numeric) < 1e-4,
            "weight {i}: {analytic} vs {numeric}"
        );
    }
    for (k, analytic) in grad_b.iter().enumerate() {
        let b = m.bias[k];
        m.bias[k] = b + h;
        let plus = m.mean_loss(&inputs, &labels);
        m.bias[k] = b - h;
        let minus = m.mean_loss(&inputs, &labels);
        m.bias[k] = b;
        let numeric = (plus - minus) / (2.0 * h);
        assert!(
            rel(*analytic, numeric) < 1e-4,
            "bias {k}: {analytic} vs {numeric}"
        );
    }
}

#[test]
fn separable_toy_set_is_learned_in_fifty_epochs() {
    // Labels follow the sign of x0 - x1 + 0.2 with margin at least 0.3.
    let mut inputs = Vec::new();
    let mut labels = Vec::new();
    for i in 0..8 {
        for j in 0..8 {
            let (x0, x1) = (i as f64 / 4.0 - 1.0, j as f64 / 4.0 - 1.0);
            let score: f64 = x0 - x1 + 0.2;
            if score.abs() < 0.3 {
                continue;
            }
            inputs.push(vec![x0, x1]);
            labels.push(usize::from(score > 0.0));
        }
    }
    assert!(labels.contains(&0) && labels.contains(&1));
    // The generating hyperplane separates the set.
    for (x, &y) in inputs.iter().zip(&labels) {
        assert_eq!(x[0] - x[1] + 0.2 > 0.0, y == 1);
    }
    let hyper = LinearHyper {
        lr: 0.5,
        epochs: 50,
        batch_size: 8,
        ..LinearHyper::default()
    };
    let mut m = model(2, 2, hyper);
    m.fit_encoded(&inputs, &labels).unwrap();
    let correct = inputs
        .iter()
        .zip(&labels)
        .filter(|(x, y)| m.predict_index(x) == **y)
        .count();
    assert_eq!(correct, inputs.len());
}

#[test]
fn full_batch_loss_is_monotone() {
    let hyper = LinearHyper {
        lr: 0.1,
        epochs: 40,
        batch_size: 5,
        ..LinearHyper::default()
    };
    let mut m = model(3, 4, hyper);
    let (inputs, labels) = five_samples();
    m.fit_encoded(&inputs, &labels).unwrap();
    for pair in m.loss_history.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-6, "{pair:?}");
    }
}

fn vector(values: [f64; 6]) -> FeatureVector<f64> {
    FeatureVector {
        name_slot: values[..1].to_vec(),
        attr_slot: values[1..2].to_vec(),
        box_slot: [values[2], values[3], values[4], values[5]],
    }
}

fn question() -> Question {
    Question {
        question_id: "q".into(),
        image_id: "img".into(),
        text: "what animal is brown".into(),
        qtype: QuestionType::Query,
        program: vec![
            ProgramStep::Select {
                target: "animal".into(),
            },
            ProgramStep::QueryName,
        ],
        answer: "a0".into(),
        relevant_ids: BTreeSet::from(["o1".to_string()]),
        provenance: Provenance::Original,
    }
}

#[test]
fn removing_a_zero_contribution_object_keeps_logits() {
    let objects = [
        [0.4, -0.2, 0.1, 0.1, 0.5, 0.6],
        [-0.8, 0.6, 0.3, 0.2, 0.9, 0.7],
        [0.1, 0.9, 0.0, 0.4, 0.2, 1.0],
    ];
    let mut vectors: BTreeMap<String, FeatureVector<f64>> = objects
        .iter()
        .enumerate()
        .map(|(i, v)| (format!("o{i}"), vector(*v)))
        .collect();
    let base = ImageFeatures {
        image_id: "img".into(),
        vectors: vectors.clone(),
    };
    // An object equal to the pooled mean leaves the mean where it is.
    let mut mean = [0.0; 6];
    for v in &objects {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x / objects.len() as f64;
        }
    }
    vectors.insert("o9".into(), vector(mean));
    let extended = ImageFeatures {
        image_id: "img".into(),
        vectors,
    };

    let q = question();
    let vocab = AnswerVocab::new(vec!["a0".into(), "a1".into(), "a2".into()]).unwrap();
    let bow = BowVocab::build([q.text.as_str()]);
    let hyper = LinearHyper {
        init_scale: 1.0,
        seed: 5,
        ..LinearHyper::default()
    };
    let m: LinearModel<f64> = LinearModel::init(vocab, bow, 6, hyper);

    let x_base = m.encode(&q, &base).unwrap();
    let x_ext = m.encode(&q, &extended).unwrap();
    for (i, expected) in mean.iter().enumerate() {
        assert!((x_base[i] - expected).abs() < 1e-12);
    }
    for (a, b) in m.logits(&x_base).iter().zip(m.logits(&x_ext)) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn f32_model_agrees_with_f64() {
    let (inputs, labels) = five_samples();
    let hyper = LinearHyper {
        epochs: 10,
        batch_size: 5,
        init_scale: 0.0,
        ..LinearHyper::default()
    };
    let mut m64 = model(3, 4, hyper.clone());
    m64.fit_encoded(&inputs, &labels).unwrap();
    let vocab = AnswerVocab::new((0..3).map(|i| format!("a{i}")).collect()).unwrap();
    let mut m32: LinearModel<f32> = LinearModel::init(vocab, BowVocab::from(Vec::new()), 4, hyper);
    let inputs32: Vec<Vec<f32>> = inputs
        .iter()
        .map(|x| x.iter().map(|&v| v as f32).collect())
        .collect();
    m32.fit_encoded(&inputs32, &labels).unwrap();
    for (a, b) in m64.weights.iter().zip(&m32.weights) {
        assert!((a - f64::from(*b)).abs() < 1e-4);
    }
}
