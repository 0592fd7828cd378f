use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub learning_rate: f64,
    pub l2: f64,
    pub epochs: usize,
    /// Recorded for provenance; full-batch training from zero weights does
    /// not consume randomness.
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            l2: 1e-3,
            epochs: 500,
            seed: 0,
        }
    }
}

/// Logistic regression on standardised features.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub feature_names: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub options: TrainOptions,
}

const MAGIC: &str = "turncue-logistic v1";

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean log loss plus `l2 / 2 * |w|^2` (bias unpenalised), and its
/// gradient with respect to the weights and the bias.
pub fn loss_and_gradient(weights: &[f64], bias: f64, x: &[Vec<f64>], y: &[bool], l2: f64) -> (f64, Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut loss = 0.0;
    let mut gw = vec![0.0; weights.len()];
    let mut gb = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let z = bias + row.iter().zip(weights).map(|(a, w)| a * w).sum::<f64>();
        // -log sigmoid(z) = softplus(-z); -log(1 - sigmoid(z)) = softplus(z)
        loss += if label { softplus(-z) } else { softplus(z) };
        let r = sigmoid(z) - f64::from(u8::from(label));
        gw.iter_mut().zip(row).for_each(|(g, a)| *g += r * a);
        gb += r;
    }
    let penalty: f64 = weights.iter().map(|w| w * w).sum::<f64>();
    gw.iter_mut().zip(weights).for_each(|(g, w)| *g = *g / n + l2 * w);
    (loss / n + 0.5 * l2 * penalty, gw, gb / n)
}

/// Full-batch gradient descent from zero weights. Returns the model and
/// the loss before each epoch plus the final loss.
pub fn train_logistic(
    x: &[Vec<f64>],
    y: &[bool],
    feature_names: &[&str],
    options: TrainOptions,
) -> Result<(LogisticModel, Vec<f64>)> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::invalid(format!("{} rows but {} labels", x.len(), y.len())));
    }
    let d = feature_names.len();
    if let Some((i, r)) = x.iter().enumerate().find(|(_, r)| r.len() != d) {
        return Err(Error::invalid(format!("row {i} has {} features, expected {d}", r.len())));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("features must be finite"));
    }
    if y.iter().all(|v| *v) || !y.iter().any(|v| *v) {
        return Err(Error::SingleClass("logistic training"));
    }
    if !(options.learning_rate > 0.0) || options.l2 < 0.0 {
        return Err(Error::invalid("learning rate must be positive and l2 non-negative"));
    }
    let n = x.len() as f64;
    let mean: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let std: Vec<f64> = (0..d)
        .map(|j| {
            let s = (x.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n).sqrt();
            if s > 1e-12 {
                s
            } else {
                1.0
            }
        })
        .collect();
    let xs: Vec<Vec<f64>> = x
        .iter()
        .map(|r| (0..d).map(|j| (r[j] - mean[j]) / std[j]).collect())
        .collect();

    let mut weights = vec![0.0; d];
    let mut bias = 0.0;
    let mut losses = Vec::with_capacity(options.epochs + 1);
    for _ in 0..options.epochs {
        let (loss, gw, gb) = loss_and_gradient(&weights, bias, &xs, y, options.l2);
        losses.push(loss);
        weights.iter_mut().zip(&gw).for_each(|(w, g)| *w -= options.learning_rate * g);
        bias -= options.learning_rate * gb;
    }
    losses.push(loss_and_gradient(&weights, bias, &xs, y, options.l2).0);
    Ok((
        LogisticModel {
            feature_names: feature_names.iter().map(|s| s.to_string()).collect(),
            mean,
            std,
            weights,
            bias,
            options,
        },
        losses,
    ))
}

impl LogisticModel {
    /// A model that always predicts 0.5.
    pub fn zero(feature_names: &[&str]) -> Self {
        let d = feature_names.len();
        Self {
            feature_names: feature_names.iter().map(|s| s.to_string()).collect(),
            mean: vec![0.0; d],
            std: vec![1.0; d],
            weights: vec![0.0; d],
            bias: 0.0,
            options: TrainOptions::default(),
        }
    }

    /// `sigmoid(w . (x - mean) / std + b)`.
    pub fn predict(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.weights.len() {
            return Err(Error::invalid(format!(
                "expected {} features, got {}",
                self.weights.len(),
                features.len()
            )));
        }
        let z = self.bias
            + features
                .iter()
                .zip(&self.mean)
                .zip(&self.std)
                .zip(&self.weights)
                .map(|(((x, m), s), w)| w * (x - m) / s)
                .sum::<f64>();
        Ok(sigmoid(z))
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{MAGIC}\nfeatures {}\n", self.weights.len());
        for i in 0..self.weights.len() {
            let _ = writeln!(s, "{} {} {} {}", self.feature_names[i], self.mean[i], self.std[i], self.weights[i]);
        }
        let o = &self.options;
        let _ = writeln!(s, "bias {}", self.bias);
        let _ = writeln!(
            s,
            "hp learning_rate={} l2={} epochs={} seed={}",
            o.learning_rate, o.l2, o.epochs, o.seed
        );
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::invalid(format!("model file: {msg}"));
        let mut lines = text.lines();
        if lines.next() != Some(MAGIC) {
            return Err(bad("missing or unsupported header".into()));
        }
        let d: usize = lines
            .next()
            .and_then(|l| l.strip_prefix("features "))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("missing feature count".into()))?;
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
        let mut m = Self::zero(&[]);
        for i in 0..d {
            let line = lines.next().ok_or_else(|| bad(format!("missing feature line {i}")))?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(bad(format!("malformed feature line {line:?}")));
            }
            m.feature_names.push(f[0].to_string());
            m.mean.push(num(f[1])?);
            m.std.push(num(f[2])?);
            m.weights.push(num(f[3])?);
        }
        m.bias = lines
            .next()
            .and_then(|l| l.strip_prefix("bias "))
            .ok_or_else(|| bad("missing bias".into()))
            .and_then(num)?;
        let hp = lines
            .next()
            .and_then(|l| l.strip_prefix("hp "))
            .ok_or_else(|| bad("missing hyperparameters".into()))?;
        for kv in hp.split_whitespace() {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad(format!("bad entry {kv:?}")))?;
            let int = |v: &str| v.parse::<u64>().map_err(|e| bad(format!("{v:?}: {e}")));
            match k {
                "learning_rate" => m.options.learning_rate = num(v)?,
                "l2" => m.options.l2 = num(v)?,
                "epochs" => m.options.epochs = int(v)? as usize,
                "seed" => m.options.seed = int(v)?,
                _ => return Err(bad(format!("unknown hyperparameter {k:?}"))),
            }
        }
        if m.std.iter().any(|s| !(*s > 0.0)) {
            return Err(bad("standard deviations must be positive".into()));
        }
        Ok(m)
    }
}
