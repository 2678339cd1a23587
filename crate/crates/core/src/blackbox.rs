//! The black box: a one-hidden-layer perceptron trained by full-batch gradient descent.

use std::fmt::Write as _;
use std::path::Path;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeded_rng;
use crate::types::{BlackBox, Dataset};

const MODEL_MAGIC: &str = "mlp-v1";

/// `d -> hidden -> 1` network, tanh hidden units, logistic output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    n_inputs: usize,
    n_hidden: usize,
    /// Row-major `n_hidden x n_inputs`.
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: 16,
            epochs: 2000,
            learning_rate: 0.5,
            seed: 0,
        }
    }
}

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
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

impl MlpModel {
    /// Gaussian initialization scaled by `1/sqrt(fan_in)`, zero biases.
    pub fn initialize(n_inputs: usize, n_hidden: usize, seed: u64) -> Result<Self> {
        if n_inputs == 0 || n_hidden == 0 {
            return Err(Error::InvalidConfig(
                "network needs at least one input and one hidden unit".into(),
            ));
        }
        let mut rng = seeded_rng(seed);
        let first = Normal::new(0.0, 1.0 / (n_inputs as f64).sqrt()).expect("finite std");
        let second = Normal::new(0.0, 1.0 / (n_hidden as f64).sqrt()).expect("finite std");
        let w1 = (0..n_hidden * n_inputs).map(|_| first.sample(&mut rng)).collect();
        let w2 = (0..n_hidden).map(|_| second.sample(&mut rng)).collect();
        Ok(MlpModel {
            n_inputs,
            n_hidden,
            w1,
            b1: vec![0.0; n_hidden],
            w2,
            b2: 0.0,
        })
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    pub fn n_params(&self) -> usize {
        self.n_hidden * self.n_inputs + 2 * self.n_hidden + 1
    }

    /// Flattened parameters in the order `w1, b1, w2, b2`.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_params());
        p.extend_from_slice(&self.w1);
        p.extend_from_slice(&self.b1);
        p.extend_from_slice(&self.w2);
        p.push(self.b2);
        p
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::DimensionMismatch {
                expected: self.n_params(),
                got: params.len(),
            });
        }
        let (w1, rest) = params.split_at(self.w1.len());
        let (b1, rest) = rest.split_at(self.n_hidden);
        let (w2, rest) = rest.split_at(self.n_hidden);
        self.w1.copy_from_slice(w1);
        self.b1.copy_from_slice(b1);
        self.w2.copy_from_slice(w2);
        self.b2 = rest[0];
        Ok(())
    }

    fn hidden_into(&self, x: &[f64], hidden: &mut [f64]) {
        for (k, h) in hidden.iter_mut().enumerate() {
            let row = &self.w1[k * self.n_inputs..(k + 1) * self.n_inputs];
            let a: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b1[k];
            *h = a.tanh();
        }
    }

    /// Pre-sigmoid output.
    pub fn logit(&self, x: &[f64]) -> f64 {
        let mut hidden = vec![0.0; self.n_hidden];
        self.hidden_into(x, &mut hidden);
        hidden.iter().zip(&self.w2).map(|(h, w)| h * w).sum::<f64>() + self.b2
    }

    /// Mean binary cross-entropy over a labeled dataset and its gradient
    /// with respect to [`MlpModel::params`].
    pub fn loss_and_gradient(&self, data: &Dataset) -> Result<(f64, Vec<f64>)> {
        let labels = data.labels().ok_or(Error::Unlabeled)?;
        self.check_dim(data.n_features())?;
        let n = data.n_rows() as f64;
        let (d, h) = (self.n_inputs, self.n_hidden);

        let mut g_w1 = vec![0.0; h * d];
        let mut g_b1 = vec![0.0; h];
        let mut g_w2 = vec![0.0; h];
        let mut g_b2 = 0.0;
        let mut loss = 0.0;
        let mut hidden = vec![0.0; h];

        for (x, &y) in data.rows().iter().zip(labels) {
            self.hidden_into(x, &mut hidden);
            let z = hidden.iter().zip(&self.w2).map(|(a, w)| a * w).sum::<f64>() + self.b2;
            let y = f64::from(y);
            loss += softplus(z) - y * z;

            let dz = (sigmoid(z) - y) / n;
            g_b2 += dz;
            for k in 0..h {
                g_w2[k] += dz * hidden[k];
                let da = dz * self.w2[k] * (1.0 - hidden[k] * hidden[k]);
                g_b1[k] += da;
                let row = &mut g_w1[k * d..(k + 1) * d];
                for (g, v) in row.iter_mut().zip(x) {
                    *g += da * v;
                }
            }
        }

        let mut grad = g_w1;
        grad.extend(g_b1);
        grad.extend(g_w2);
        grad.push(g_b2);
        Ok((loss / n, grad))
    }

    pub fn loss(&self, data: &Dataset) -> Result<f64> {
        self.loss_and_gradient(data).map(|(l, _)| l)
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.n_inputs {
            return Err(Error::DimensionMismatch {
                expected: self.n_inputs,
                got: d,
            });
        }
        Ok(())
    }

    /// Structured text: shape header, then row-major parameter lists with
    /// 17 significant digits so a reload reproduces predictions bit for bit.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let fmt = |v: f64| format!("{v:.16e}");
        writeln!(out, "{MODEL_MAGIC}").unwrap();
        writeln!(out, "layers {} {} 1", self.n_inputs, self.n_hidden).unwrap();
        writeln!(out, "activations tanh logistic").unwrap();
        writeln!(out, "w1").unwrap();
        for k in 0..self.n_hidden {
            let row = &self.w1[k * self.n_inputs..(k + 1) * self.n_inputs];
            writeln!(out, "{}", row.iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(" ")).unwrap();
        }
        writeln!(out, "b1").unwrap();
        writeln!(out, "{}", self.b1.iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(" ")).unwrap();
        writeln!(out, "w2").unwrap();
        writeln!(out, "{}", self.w2.iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(" ")).unwrap();
        writeln!(out, "b2").unwrap();
        writeln!(out, "{}", fmt(self.b2)).unwrap();
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::parse("model", format!("unexpected end of file, expected {what}")))
        };
        let expect = |(line, got): (usize, &str), want: &str| {
            if got == want {
                Ok(())
            } else {
                Err(Error::parse(
                    format!("model:{line}"),
                    format!("expected '{want}', found '{got}'"),
                ))
            }
        };
        let reals = |(line, got): (usize, &str), count: usize| -> Result<Vec<f64>> {
            let values = got
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(format!("model:{line}"), e.to_string()))?;
            if values.len() != count || values.iter().any(|v| !v.is_finite()) {
                return Err(Error::parse(
                    format!("model:{line}"),
                    format!("expected {count} finite values, found {}", values.len()),
                ));
            }
            Ok(values)
        };

        expect(next("header")?, MODEL_MAGIC)?;
        let (line, shape) = next("layers")?;
        let dims: Vec<usize> = shape
            .strip_prefix("layers ")
            .ok_or_else(|| Error::parse(format!("model:{line}"), "expected 'layers d h 1'"))?
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::parse(format!("model:{line}"), e.to_string()))?;
        let [d, h, 1] = dims[..] else {
            return Err(Error::parse(
                format!("model:{line}"),
                "expected three layer sizes ending in 1",
            ));
        };
        if d == 0 || h == 0 {
            return Err(Error::parse(format!("model:{line}"), "layer sizes must be positive"));
        }
        expect(next("activations")?, "activations tanh logistic")?;
        expect(next("w1")?, "w1")?;
        let mut w1 = Vec::with_capacity(h * d);
        for _ in 0..h {
            w1.extend(reals(next("w1 row")?, d)?);
        }
        expect(next("b1")?, "b1")?;
        let b1 = reals(next("b1 values")?, h)?;
        expect(next("w2")?, "w2")?;
        let w2 = reals(next("w2 values")?, h)?;
        expect(next("b2")?, "b2")?;
        let b2 = reals(next("b2 value")?, 1)?[0];
        Ok(MlpModel {
            n_inputs: d,
            n_hidden: h,
            w1,
            b1,
            w2,
            b2,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

impl BlackBox for MlpModel {
    fn n_features(&self) -> usize {
        self.n_inputs
    }

    fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }
}

/// Minimizes mean binary cross-entropy by plain full-batch gradient descent.
pub fn train_mlp(data: &Dataset, cfg: &TrainConfig) -> Result<MlpModel> {
    if data.labels().is_none() {
        return Err(Error::Unlabeled);
    }
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "learning rate must be positive, got {}",
            cfg.learning_rate
        )));
    }
    let mut model = MlpModel::initialize(data.n_features(), cfg.hidden, cfg.seed)?;
    let mut params = model.params();
    for epoch in 0..cfg.epochs {
        let (loss, grad) = model.loss_and_gradient(data)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged { epoch });
        }
        for (p, g) in params.iter_mut().zip(&grad) {
            *p -= cfg.learning_rate * g;
        }
        model.set_params(&params)?;
    }
    if !model.loss(data)?.is_finite() {
        return Err(Error::Diverged { epoch: cfg.epochs });
    }
    Ok(model)
}

/// Fraction of rows whose predicted label matches the stored label.
pub fn accuracy(model: &dyn BlackBox, data: &Dataset) -> Result<f64> {
    let labels = data.labels().ok_or(Error::Unlabeled)?;
    let hits = data
        .rows()
        .iter()
        .zip(labels)
        .filter(|(x, &y)| model.predict_label(x) == y)
        .count();
    Ok(hits as f64 / data.n_rows() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds2 {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Bounds2 {
    /// Smallest box holding every point, padded by `pad` of each side's span.
    pub fn enclosing<'a>(points: impl IntoIterator<Item = &'a [f64]>, pad: f64) -> Option<Self> {
        let mut b = Bounds2 {
            x_min: f64::INFINITY,
            x_max: f64::NEG_INFINITY,
            y_min: f64::INFINITY,
            y_max: f64::NEG_INFINITY,
        };
        let mut any = false;
        for p in points {
            any = true;
            b.x_min = b.x_min.min(p[0]);
            b.x_max = b.x_max.max(p[0]);
            b.y_min = b.y_min.min(p[1]);
            b.y_max = b.y_max.max(p[1]);
        }
        if !any {
            return None;
        }
        let px = ((b.x_max - b.x_min) * pad).max(1e-6);
        let py = ((b.y_max - b.y_min) * pad).max(1e-6);
        Some(Bounds2 {
            x_min: b.x_min - px,
            x_max: b.x_max + px,
            y_min: b.y_min - py,
            y_max: b.y_max + py,
        })
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        (self.x_min..=self.x_max).contains(&p[0]) && (self.y_min..=self.y_max).contains(&p[1])
    }
}

/// Labels at the centres of a `resolution x resolution` grid over `bounds`.
/// Row `i` holds cells at the `i`-th y value counted from `y_min`.
pub fn decision_grid(model: &dyn BlackBox, bounds: &Bounds2, resolution: usize) -> Result<Vec<Vec<u8>>> {
    if model.n_features() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: model.n_features(),
        });
    }
    if resolution == 0 {
        return Err(Error::InvalidInput("grid resolution must be positive".into()));
    }
    let step_x = (bounds.x_max - bounds.x_min) / resolution as f64;
    let step_y = (bounds.y_max - bounds.y_min) / resolution as f64;
    Ok((0..resolution)
        .map(|i| {
            let y = bounds.y_min + (i as f64 + 0.5) * step_y;
            (0..resolution)
                .map(|j| {
                    let x = bounds.x_min + (j as f64 + 0.5) * step_x;
                    model.predict_label(&[x, y])
                })
                .collect()
        })
        .collect())
}
