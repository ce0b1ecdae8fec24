use std::collections::{BTreeMap, HashSet};

use crate::corpus::ManifestEntry;
use crate::error::{Error, Result};

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
    }
}

/// Pearson correlations between the five category flags over clickbait
/// rows. Constant columns correlate 0 with everything; the diagonal is 1.
pub fn category_correlation(entries: &[ManifestEntry]) -> Result<[[f64; 5]; 5]> {
    let rows: Vec<[bool; 5]> = entries
        .iter()
        .filter(|e| e.label == 1)
        .map(|e| e.categories.as_array())
        .collect();
    if rows.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "category correlation needs at least 2 clickbait rows, found {}",
            rows.len()
        )));
    }
    let cols: Vec<Vec<f64>> = (0..5)
        .map(|c| rows.iter().map(|r| f64::from(u8::from(r[c]))).collect())
        .collect();
    let mut m = [[0.0; 5]; 5];
    for i in 0..5 {
        for j in 0..5 {
            m[i][j] = if i == j { 1.0 } else { pearson(&cols[i], &cols[j]) };
        }
    }
    Ok(m)
}

/// Lowercased whitespace tokens of clickbait titles minus stopwords, by
/// count descending then token ascending.
pub fn clickbait_word_frequency(
    entries: &[ManifestEntry],
    stopwords: &HashSet<String>,
    top_n: usize,
) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for e in entries.iter().filter(|e| e.label == 1) {
        for t in e.title.split_whitespace() {
            let t = t.to_lowercase();
            if !stopwords.contains(&t) {
                *counts.entry(t).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(top_n);
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Categories;
    use rand::Rng;

    fn entry(title: &str, label: u8, flags: [bool; 5]) -> ManifestEntry {
        ManifestEntry {
            video_id: title.into(),
            title: title.into(),
            label,
            categories: Categories::from_array(flags),
            bundle_dir: "x".into(),
        }
    }

    #[test]
    fn word_frequency_examples() {
        let e = vec![
            entry("shocking news", 1, [true; 5]),
            entry("Shocking secret", 1, [true; 5]),
            entry("shocking recipe", 0, [false; 5]),
        ];
        let sw = HashSet::new();
        assert_eq!(
            clickbait_word_frequency(&e, &sw, 10),
            vec![("shocking".into(), 2), ("news".into(), 1), ("secret".into(), 1)]
        );
        assert_eq!(clickbait_word_frequency(&e, &sw, 1), vec![("shocking".to_string(), 2)]);
        assert!(clickbait_word_frequency(&e[2..], &sw, 5).is_empty());
        let sw: HashSet<String> = ["news".to_string()].into();
        assert_eq!(clickbait_word_frequency(&e, &sw, 10).len(), 2);
    }

    #[test]
    fn correlation_conventions() {
        let e = vec![
            entry("a", 1, [true, true, false, true, false]),
            entry("b", 1, [false, false, false, true, true]),
            entry("c", 1, [true, true, false, true, false]),
            entry("d", 0, [false; 5]),
        ];
        let m = category_correlation(&e).unwrap();
        assert_eq!(m[0][1], 1.0);
        assert_eq!(m[2], [0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(m[3][3], 1.0);
        assert_eq!(m[3][0], 0.0);
        assert!((m[0][4] + 1.0).abs() < 1e-12);
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(m[i][j], m[j][i]);
            }
        }
        assert!(category_correlation(&e[..1]).is_err());
    }

    #[test]
    fn independent_columns_near_zero() {
        for seed in 0..3 {
            let mut r = crate::rng::stream(seed, &[]);
            let e: Vec<_> = (0..10_000)
                .map(|i| entry(&i.to_string(), 1, std::array::from_fn(|_| r.gen_bool(0.5))))
                .collect();
            let m = category_correlation(&e).unwrap();
            for i in 0..5 {
                for j in 0..5 {
                    if i != j {
                        assert!(m[i][j].abs() < 0.05);
                    }
                }
            }
        }
    }
}
