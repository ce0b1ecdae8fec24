use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

pub const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    /// `[class][feature]`
    pub means: [Vec<f64>; 2],
    pub variances: [Vec<f64>; 2],
    pub priors: [f64; 2],
}

impl GaussianNb {
    pub fn fit(x: ArrayView2<f64>, y: &[u8], floor: f64) -> Self {
        let p = x.ncols();
        let mut means = [vec![0.0; p], vec![0.0; p]];
        let mut variances = [vec![0.0; p], vec![0.0; p]];
        let mut counts = [0usize; 2];
        for (row, &c) in x.rows().into_iter().zip(y) {
            counts[c as usize] += 1;
            means[c as usize].iter_mut().zip(row).for_each(|(m, v)| *m += v);
        }
        for c in 0..2 {
            means[c].iter_mut().for_each(|m| *m /= counts[c] as f64);
        }
        for (row, &c) in x.rows().into_iter().zip(y) {
            let c = c as usize;
            for ((s, v), m) in variances[c].iter_mut().zip(row).zip(&means[c]) {
                *s += (v - m) * (v - m);
            }
        }
        for c in 0..2 {
            variances[c]
                .iter_mut()
                .for_each(|s| *s = (*s / counts[c] as f64).max(floor));
        }
        let n = y.len() as f64;
        GaussianNb {
            means,
            variances,
            priors: [counts[0] as f64 / n, counts[1] as f64 / n],
        }
    }

    fn log_joint(&self, c: usize, row: impl Iterator<Item = f64>) -> f64 {
        let ll: f64 = row
            .zip(&self.means[c])
            .zip(&self.variances[c])
            .map(|((v, m), s)| -0.5 * ((2.0 * std::f64::consts::PI * s).ln() + (v - m) * (v - m) / s))
            .sum();
        self.priors[c].ln() + ll
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.rows()
            .into_iter()
            .map(|r| {
                let l0 = self.log_joint(0, r.iter().copied());
                let l1 = self.log_joint(1, r.iter().copied());
                let m = l0.max(l1);
                let (e0, e1) = ((l0 - m).exp(), (l1 - m).exp());
                e1 / (e0 + e1)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn hand_posterior() {
        let x = array![[1.0], [2.0], [4.0], [5.0]];
        let m = GaussianNb::fit(x.view(), &[0, 0, 1, 1], VARIANCE_FLOOR);
        assert_eq!(m.means[0], vec![1.5]);
        assert_eq!(m.variances[1], vec![0.25]);
        let p = m.predict_proba(array![[1.5]].view())[0];
        // equal priors and variances: posterior ratio is exp(-(1.5-4.5)^2 / (2 * 0.25))
        let oracle = 1.0 / (1.0 + (18.0f64).exp());
        assert!((p - oracle).abs() < 1e-15);
        assert!(1.0 - p > 0.99);
    }

    #[test]
    fn constant_feature_uses_floor() {
        let x = array![[3.0, 0.0], [3.0, 1.0], [3.0, 10.0], [3.0, 11.0]];
        let m = GaussianNb::fit(x.view(), &[0, 0, 1, 1], VARIANCE_FLOOR);
        assert_eq!(m.variances[0][0], VARIANCE_FLOOR);
        let p = m.predict_proba(array![[3.0, 10.5]].view())[0];
        assert!(p > 0.99 && p.is_finite());
    }
}
