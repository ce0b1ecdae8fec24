use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::logistic::{sigmoid, softplus};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpHyper {
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub momentum: f64,
    pub l2: f64,
}

impl Default for MlpHyper {
    fn default() -> Self {
        MlpHyper {
            hidden: 64,
            epochs: 100,
            lr: 0.05,
            momentum: 0.9,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array1<f64>,
    pub b2: f64,
}

impl MlpParams {
    /// He-uniform hidden layer, Glorot-uniform output.
    pub fn init(inputs: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let a1 = (6.0 / inputs.max(1) as f64).sqrt();
        let a2 = (6.0 / (hidden + 1) as f64).sqrt();
        MlpParams {
            w1: Array2::from_shape_fn((inputs, hidden), |_| rng.gen_range(-a1..a1)),
            b1: Array1::zeros(hidden),
            w2: Array1::from_shape_fn(hidden, |_| rng.gen_range(-a2..a2)),
            b2: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, i: usize) -> f64 {
        self.flat_ref(i, |v| *v)
    }

    pub fn set(&mut self, i: usize, value: f64) {
        self.flat_mut(i, |v| *v = value)
    }

    fn flat_ref<T>(&self, mut i: usize, f: impl FnOnce(&f64) -> T) -> T {
        let (a, b, c) = (self.w1.len(), self.b1.len(), self.w2.len());
        if i < a {
            let h = self.w1.ncols();
            return f(&self.w1[[i / h, i % h]]);
        }
        i -= a;
        if i < b {
            return f(&self.b1[i]);
        }
        i -= b;
        if i < c {
            return f(&self.w2[i]);
        }
        f(&self.b2)
    }

    fn flat_mut<T>(&mut self, mut i: usize, f: impl FnOnce(&mut f64) -> T) -> T {
        let (a, b, c) = (self.w1.len(), self.b1.len(), self.w2.len());
        if i < a {
            let h = self.w1.ncols();
            return f(&mut self.w1[[i / h, i % h]]);
        }
        i -= a;
        if i < b {
            return f(&mut self.b1[i]);
        }
        i -= b;
        if i < c {
            return f(&mut self.w2[i]);
        }
        f(&mut self.b2)
    }

    fn margins(&self, x: ArrayView2<f64>) -> (Array2<f64>, Array2<f64>, Array1<f64>) {
        let pre = x.dot(&self.w1) + &self.b1;
        let act = pre.mapv(|v| v.max(0.0));
        let z = act.dot(&self.w2) + self.b2;
        (pre, act, z)
    }
}

/// Mean log-loss plus `l2/2` times the squared weights (biases unpenalised).
pub fn mlp_loss_and_grad(p: &MlpParams, x: ArrayView2<f64>, y: &[u8], l2: f64) -> (f64, MlpParams) {
    let n = y.len() as f64;
    let (pre, act, z) = p.margins(x);
    let mut loss = 0.0;
    let mut dz = Array1::zeros(y.len());
    for (i, (&zi, &yi)) in z.iter().zip(y).enumerate() {
        let yf = f64::from(yi);
        loss += softplus(zi) - yf * zi;
        dz[i] = (sigmoid(zi) - yf) / n;
    }
    loss = loss / n + 0.5 * l2 * (p.w1.iter().map(|v| v * v).sum::<f64>() + p.w2.dot(&p.w2));
    let w2 = act.t().dot(&dz) + &(&p.w2 * l2);
    let b2 = dz.sum();
    let mut dpre = dz.insert_axis(Axis(1)).dot(&p.w2.view().insert_axis(Axis(0)));
    dpre.zip_mut_with(&pre, |d, &v| {
        if v <= 0.0 {
            *d = 0.0
        }
    });
    let w1 = x.t().dot(&dpre) + &(&p.w1 * l2);
    let b1 = dpre.sum_axis(Axis(0));
    (loss, MlpParams { w1, b1, w2, b2 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub hyper: MlpHyper,
    pub params: MlpParams,
}

impl Mlp {
    pub fn fit(x: ArrayView2<f64>, y: &[u8], hyper: MlpHyper, rng: &mut impl Rng) -> Self {
        let mut params = MlpParams::init(x.ncols(), hyper.hidden, rng);
        let mut vel = MlpParams {
            w1: Array2::zeros(params.w1.raw_dim()),
            b1: Array1::zeros(hyper.hidden),
            w2: Array1::zeros(hyper.hidden),
            b2: 0.0,
        };
        for _ in 0..hyper.epochs {
            let (_, g) = mlp_loss_and_grad(&params, x, y, hyper.l2);
            let mu = hyper.momentum;
            vel.w1.zip_mut_with(&g.w1, |v, &gi| *v = mu * *v + gi);
            vel.b1.zip_mut_with(&g.b1, |v, &gi| *v = mu * *v + gi);
            vel.w2.zip_mut_with(&g.w2, |v, &gi| *v = mu * *v + gi);
            vel.b2 = mu * vel.b2 + g.b2;
            params.w1.scaled_add(-hyper.lr, &vel.w1);
            params.b1.scaled_add(-hyper.lr, &vel.b1);
            params.w2.scaled_add(-hyper.lr, &vel.w2);
            params.b2 -= hyper.lr * vel.b2;
        }
        Mlp { hyper, params }
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        self.params.margins(x).2.iter().map(|&z| sigmoid(z)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn learns_xor() {
        let x = ndarray::array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
        let x = x.mapv(|v| 2.0 * v - 1.0);
        let y = [0, 1, 1, 0];
        let mut r = crate::rng::stream(1, &[]);
        let m = Mlp::fit(x.view(), &y, MlpHyper { epochs: 500, lr: 0.1, ..MlpHyper::default() }, &mut r);
        let p = m.predict_proba(x.view());
        assert!(p.iter().zip(&y).all(|(&p, &y)| u8::from(p >= 0.5) == y), "{p:?}");
    }

    #[test]
    fn flat_indexing_covers_all() {
        let mut r = crate::rng::stream(2, &[]);
        let mut p = MlpParams::init(3, 2, &mut r);
        assert_eq!(p.len(), 3 * 2 + 2 + 2 + 1);
        p.set(p.len() - 1, 4.0);
        assert_eq!(p.b2, 4.0);
        p.set(6, 7.0);
        assert_eq!(p.b1[0], 7.0);
        assert_eq!(p.get(8), p.w2[0]);
    }
}
