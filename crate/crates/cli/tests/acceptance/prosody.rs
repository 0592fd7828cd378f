use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use turncue::eval::classification_metrics;
use turncue::events::{extract_events, words_to_vad, EventOptions};
use turncue::prosody::{
    event_features, loss_and_gradient, synth_cue_corpus, train_logistic, CueCorpusOptions, ProsodyFeatures,
    TrainOptions, DEFAULT_WINDOW_S, FEATURE_NAMES,
};
use turncue::vocoder::{analyze, VocoderConfig};

use crate::Check;

/// Decision threshold on the predicted probability, frozen after calibration.
const DECISION: f64 = 0.5;

fn gradient_rel_err() -> f64 {
    let mut r = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let d = FEATURE_NAMES.len();
        let n = r.random_range(10..60);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| r.random_range(-2.0..2.0)).collect()).collect();
        let y: Vec<bool> = (0..n).map(|_| r.random_bool(0.5)).collect();
        let w: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
        let b = r.random_range(-1.0..1.0);
        let l2 = 1e-3;
        let (_, gw, gb) = loss_and_gradient(&w, b, &x, &y, l2);
        let eps = 1e-6;
        let loss = |w: &[f64], b: f64| loss_and_gradient(w, b, &x, &y, l2).0;
        let mut analytic = gw.clone();
        analytic.push(gb);
        let mut numeric = Vec::with_capacity(d + 1);
        for k in 0..d {
            let (mut up, mut down) = (w.clone(), w.clone());
            up[k] += eps;
            down[k] -= eps;
            numeric.push((loss(&up, b) - loss(&down, b)) / (2.0 * eps));
        }
        numeric.push((loss(&w, b + eps) - loss(&w, b - eps)) / (2.0 * eps));
        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt() + numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
        worst = worst.max(diff / norm.max(1e-300));
    }
    worst
}

fn corpus_features(n_sessions: usize, seed: u64) -> Vec<(ProsodyFeatures, bool)> {
    let cfg = VocoderConfig::default();
    let opts = CueCorpusOptions {
        n_sessions,
        ..Default::default()
    };
    let mut data = Vec::new();
    for s in synth_cue_corpus(&opts, seed).unwrap() {
        let frames = [analyze(&s.channels[0], &cfg).unwrap(), analyze(&s.channels[1], &cfg).unwrap()];
        let duration = s.channels[0].duration_s().max(s.channels[1].duration_s());
        let vad = words_to_vad(&s.words, 100.0, Some(duration)).unwrap();
        let events = extract_events(&vad, &EventOptions::default());
        data.extend(event_features([&frames[0], &frames[1]], &vad, &events, DEFAULT_WINDOW_S).unwrap());
    }
    data
}

pub fn predictor() -> Check {
    let grad = gradient_rel_err();
    let train = corpus_features(8, 91);
    let test = corpus_features(5, 92);
    let x: Vec<Vec<f64>> = train.iter().map(|(f, _)| f.0.to_vec()).collect();
    let y: Vec<bool> = train.iter().map(|(_, l)| *l).collect();
    let (model, _) = train_logistic(&x, &y, &FEATURE_NAMES, TrainOptions::default()).unwrap();
    let pred: Vec<bool> = test.iter().map(|(f, _)| model.predict(&f.0).unwrap() >= DECISION).collect();
    let truth: Vec<bool> = test.iter().map(|(_, l)| *l).collect();
    let bal = classification_metrics(&pred, &truth).unwrap().bal_acc;
    Check::new(
        grad < 1e-4 && bal >= 0.90,
        format!(
            "gradient rel err {grad:.2e} (< 1e-4), held-out bal acc {bal:.3} (>= 0.90) on {} events",
            truth.len()
        ),
    )
}
