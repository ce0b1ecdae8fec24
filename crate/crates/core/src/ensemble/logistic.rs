use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub epochs_run: usize,
}

/// Mean log-loss plus `λ/2·|w|²` (bias unpenalised) and its gradient.
pub fn logistic_loss_and_grad(
    w: ArrayView1<f64>,
    b: f64,
    x: ArrayView2<f64>,
    y: &[u8],
    lambda: f64,
) -> (f64, Array1<f64>, f64) {
    let n = y.len() as f64;
    let z = x.dot(&w) + b;
    let mut loss = 0.0;
    let mut r = Array1::zeros(y.len());
    for (i, (&zi, &yi)) in z.iter().zip(y).enumerate() {
        let yf = f64::from(yi);
        loss += softplus(zi) - yf * zi;
        r[i] = (sigmoid(zi) - yf) / n;
    }
    let gw = x.t().dot(&r) + &(&w * lambda);
    let gb = r.sum();
    (loss / n + 0.5 * lambda * w.dot(&w), gw, gb)
}

/// Largest eigenvalue of `[X 1]ᵀ[X 1] / n` by power iteration.
fn gram_spectral_bound(x: ArrayView2<f64>) -> f64 {
    let n = x.nrows() as f64;
    let mut v = Array1::<f64>::from_elem(x.ncols() + 1, 1.0);
    let mut lam = 0.0;
    for _ in 0..60 {
        let norm = v.dot(&v).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v /= norm;
        let xv = x.dot(&v.slice(ndarray::s![..x.ncols()])) + v[x.ncols()];
        let mut next = Array1::zeros(x.ncols() + 1);
        next.slice_mut(ndarray::s![..x.ncols()]).assign(&(x.t().dot(&xv) / n));
        next[x.ncols()] = xv.sum() / n;
        lam = v.dot(&next);
        v = next;
    }
    lam
}

impl LogisticRegression {
    pub fn fit(x: ArrayView2<f64>, y: &[u8], lambda: f64, max_epochs: usize, tol: f64) -> Self {
        // step 1/L for the 0.25-smooth log-loss, with slack for the power-iteration estimate
        let smooth = 1.05 * 0.25 * gram_spectral_bound(x) + lambda;
        let step = if smooth > 0.0 { 1.0 / smooth } else { 1.0 };
        let mut w = Array1::zeros(x.ncols());
        let mut b = 0.0;
        let mut epochs_run = 0;
        for _ in 0..max_epochs {
            let (_, gw, gb) = logistic_loss_and_grad(w.view(), b, x, y, lambda);
            if (gw.dot(&gw) + gb * gb).sqrt() <= tol {
                break;
            }
            w.scaled_add(-step, &gw);
            b -= step * gb;
            epochs_run += 1;
        }
        LogisticRegression {
            weights: w.to_vec(),
            bias: b,
            epochs_run,
        }
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        let z = x.dot(&ArrayView1::from(&self.weights[..])) + self.bias;
        z.iter().map(|&v| sigmoid(v)).collect()
    }
}
