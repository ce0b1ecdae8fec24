use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::logistic::sigmoid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmHyper {
    pub lambda: f64,
    pub epochs: usize,
    pub eta0: f64,
}

impl Default for SvmHyper {
    fn default() -> Self {
        SvmHyper {
            lambda: 1e-3,
            epochs: 20,
            eta0: 0.1,
        }
    }
}

/// Hinge loss + L2, per-sample subgradient steps with a decaying rate
/// `eta0 / (1 + eta0·λ·t)`. Visit order is a seeded shuffle per epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub hyper: SvmHyper,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearSvm {
    pub fn fit(x: ArrayView2<f64>, y: &[u8], hyper: SvmHyper, rng: &mut impl Rng) -> Self {
        let mut w = Array1::<f64>::zeros(x.ncols());
        let mut b = 0.0;
        let mut order: Vec<usize> = (0..y.len()).collect();
        let mut t = 0usize;
        for _ in 0..hyper.epochs {
            order.shuffle(rng);
            for &i in &order {
                let eta = hyper.eta0 / (1.0 + hyper.eta0 * hyper.lambda * t as f64);
                let yi = if y[i] == 1 { 1.0 } else { -1.0 };
                let row = x.row(i);
                let margin = yi * (row.dot(&w) + b);
                w *= 1.0 - eta * hyper.lambda;
                if margin < 1.0 {
                    w.scaled_add(eta * yi, &row);
                    b += eta * yi;
                }
                t += 1;
            }
        }
        LinearSvm {
            hyper,
            weights: w.to_vec(),
            bias: b,
        }
    }

    pub fn margins(&self, x: ArrayView2<f64>) -> Vec<f64> {
        (x.dot(&ArrayView1::from(&self.weights[..])) + self.bias).to_vec()
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        self.margins(x).into_iter().map(sigmoid).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_margin_is_half() {
        let m = LinearSvm {
            hyper: SvmHyper::default(),
            weights: vec![1.0, -1.0],
            bias: 0.0,
        };
        assert_eq!(m.predict_proba(array![[2.0, 2.0]].view()), vec![0.5]);
    }

    #[test]
    fn separates_clusters() {
        let x = array![[-2.0, -1.0], [-1.5, -2.0], [-1.0, -1.0], [1.0, 1.5], [2.0, 1.0], [1.5, 2.0]];
        let y = [0, 0, 0, 1, 1, 1];
        let mut r = crate::rng::stream(3, &[]);
        let m = LinearSvm::fit(x.view(), &y, SvmHyper::default(), &mut r);
        let p = m.predict_proba(x.view());
        assert!(p.iter().zip(&y).all(|(&p, &y)| u8::from(p >= 0.5) == y));
    }
}
