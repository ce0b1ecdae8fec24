use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

/// Brute-force Euclidean k-nearest-neighbours over stored rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub rows: Array2<f64>,
    pub labels: Vec<u8>,
}

impl Knn {
    pub fn fit(x: ArrayView2<f64>, y: &[u8], k: usize) -> Self {
        Knn {
            k: k.max(1),
            rows: x.to_owned(),
            labels: y.to_vec(),
        }
    }

    /// Fraction of positive labels among the k nearest rows; distance ties
    /// go to the lower row index.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        let k = self.k.min(self.labels.len());
        x.rows()
            .into_iter()
            .map(|q| {
                let mut d: Vec<(f64, usize)> = self
                    .rows
                    .rows()
                    .into_iter()
                    .enumerate()
                    .map(|(i, r)| (r.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum(), i))
                    .collect();
                d.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let pos = d[..k].iter().filter(|(_, i)| self.labels[*i] == 1).count();
                pos as f64 / k as f64
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn one_nn_identity() {
        let x = array![[0.0, 0.0], [1.0, 1.0], [5.0, 5.0]];
        let m = Knn::fit(x.view(), &[0, 1, 0], 1);
        assert_eq!(m.predict_proba(array![[1.0, 1.0]].view()), vec![1.0]);
    }

    #[test]
    fn fraction_rule() {
        let x = array![[0.0], [1.0], [2.0], [3.0], [4.0], [50.0], [60.0]];
        let m = Knn::fit(x.view(), &[1, 1, 0, 1, 0, 0, 0], 5);
        assert_eq!(m.predict_proba(array![[2.0]].view()), vec![0.6]);
    }

    #[test]
    fn ties_prefer_lower_index() {
        let x = array![[-1.0], [1.0]];
        let m = Knn::fit(x.view(), &[0, 1], 1);
        assert_eq!(m.predict_proba(array![[0.0]].view()), vec![0.0]);
    }
}
