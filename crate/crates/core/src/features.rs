//! Per-video feature rows, standardisation, ANOVA F scoring and column
//! selection.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{IMAGE_DIM, TITLE_DIM};
use crate::error::{Error, Result};
use crate::graph_net::READOUT_DIM;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FeatureGroup {
    Bert,
    Resnet,
    Ctd,
    Ttd,
    Tcd,
    Sent,
    Lex,
    Bait,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 8] = [
        FeatureGroup::Bert,
        FeatureGroup::Resnet,
        FeatureGroup::Ctd,
        FeatureGroup::Ttd,
        FeatureGroup::Tcd,
        FeatureGroup::Sent,
        FeatureGroup::Lex,
        FeatureGroup::Bait,
    ];

    pub fn dim(self) -> usize {
        match self {
            FeatureGroup::Bert => TITLE_DIM,
            FeatureGroup::Resnet => IMAGE_DIM,
            FeatureGroup::Ctd => READOUT_DIM,
            FeatureGroup::Ttd | FeatureGroup::Tcd => 3,
            FeatureGroup::Sent => 4,
            FeatureGroup::Lex | FeatureGroup::Bait => 5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureGroup::Bert => "BERT",
            FeatureGroup::Resnet => "RESNET",
            FeatureGroup::Ctd => "CTD",
            FeatureGroup::Ttd => "TTD",
            FeatureGroup::Tcd => "TCD",
            FeatureGroup::Sent => "SENT",
            FeatureGroup::Lex => "LEX",
            FeatureGroup::Bait => "BAIT",
        }
    }

    fn column_names(self) -> Vec<String> {
        let named: &[&str] = match self {
            FeatureGroup::Ttd | FeatureGroup::Tcd => &["cos_plain", "cos_preprocessed", "cos_embedding"],
            FeatureGroup::Sent => &["positive", "negative", "neutral", "compound"],
            FeatureGroup::Lex => &["num", "qm", "emoji", "rf", "pun"],
            FeatureGroup::Bait => &["celebrity", "slang", "porn", "bollywood", "generic"],
            _ => &[],
        };
        if named.is_empty() {
            (0..self.dim()).map(|i| format!("{i}")).collect()
        } else {
            named.iter().map(|s| s.to_string()).collect()
        }
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        if upper == "GRAPH" {
            return Ok(FeatureGroup::Ctd);
        }
        FeatureGroup::ALL
            .into_iter()
            .find(|g| g.as_str() == upper)
            .ok_or_else(|| Error::UnknownGroup(s.trim().to_string()))
    }
}

/// Parse a comma/plus-separated group list such as `BERT+LEX,SENT`.
pub fn parse_groups(spec: &str) -> Result<BTreeSet<FeatureGroup>> {
    let set = spec
        .split([',', '+'])
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<Result<BTreeSet<_>>>()?;
    if set.is_empty() {
        return Err(Error::InvalidInput("empty feature group set".into()));
    }
    Ok(set)
}

/// Everything one video contributes to the feature table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureParts {
    pub video_id: String,
    pub title_embedding: Option<Vec<f64>>,
    pub thumbnail_embedding: Option<Vec<f64>>,
    pub graph: Option<Vec<f64>>,
    pub ttd: Option<Vec<f64>>,
    pub tcd: Option<Vec<f64>>,
    pub sentiment: Option<Vec<f64>>,
    pub lexical: Option<Vec<f64>>,
    pub baitiness: Option<Vec<f64>>,
}

impl FeatureParts {
    pub fn part(&self, g: FeatureGroup) -> Option<&Vec<f64>> {
        match g {
            FeatureGroup::Bert => self.title_embedding.as_ref(),
            FeatureGroup::Resnet => self.thumbnail_embedding.as_ref(),
            FeatureGroup::Ctd => self.graph.as_ref(),
            FeatureGroup::Ttd => self.ttd.as_ref(),
            FeatureGroup::Tcd => self.tcd.as_ref(),
            FeatureGroup::Sent => self.sentiment.as_ref(),
            FeatureGroup::Lex => self.lexical.as_ref(),
            FeatureGroup::Bait => self.baitiness.as_ref(),
        }
    }
}

/// Concatenate the parts in fixed group order.
pub fn assemble_features(parts: &FeatureParts) -> Result<Vec<f64>> {
    let mut row = Vec::with_capacity(FeatureGroup::ALL.iter().map(|g| g.dim()).sum());
    for g in FeatureGroup::ALL {
        let p = parts.part(g).ok_or(Error::MissingPart(g))?;
        if p.len() != g.dim() {
            return Err(Error::DimensionMismatch {
                what: format!("{g} part of `{}`", parts.video_id),
                expected: g.dim(),
                found: p.len(),
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: format!("{g} part of `{}`", parts.video_id),
            });
        }
        row.extend_from_slice(p);
    }
    Ok(row)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub ids: Vec<String>,
    pub columns: Vec<String>,
    pub groups: Vec<FeatureGroup>,
    pub values: Array2<f64>,
    pub labels: Vec<u8>,
}

pub fn full_schema() -> (Vec<String>, Vec<FeatureGroup>) {
    let mut cols = Vec::new();
    let mut groups = Vec::new();
    for g in FeatureGroup::ALL {
        for name in g.column_names() {
            cols.push(name);
            groups.push(g);
        }
    }
    (cols, groups)
}

impl FeatureMatrix {
    pub fn from_parts(parts: &[FeatureParts], labels: &[u8]) -> Result<Self> {
        if parts.len() != labels.len() {
            return Err(Error::LengthMismatch {
                what: "feature rows vs labels".into(),
                left: parts.len(),
                right: labels.len(),
            });
        }
        let (columns, groups) = full_schema();
        let mut values = Array2::zeros((parts.len(), columns.len()));
        for (i, p) in parts.iter().enumerate() {
            let row = assemble_features(p)?;
            values.row_mut(i).assign(&ArrayView1::from(&row[..]));
        }
        Ok(FeatureMatrix {
            ids: parts.iter().map(|p| p.video_id.clone()).collect(),
            columns,
            groups,
            values,
            labels: labels.to_vec(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            ids: rows.iter().map(|&r| self.ids[r].clone()).collect(),
            columns: self.columns.clone(),
            groups: self.groups.clone(),
            values: self.values.select(Axis(0), rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            ids: self.ids.clone(),
            columns: cols.iter().map(|&c| self.columns[c].clone()).collect(),
            groups: cols.iter().map(|&c| self.groups[c]).collect(),
            values: self.values.select(Axis(1), cols),
            labels: self.labels.clone(),
        }
    }

    pub fn column_range(&self, g: FeatureGroup) -> Vec<usize> {
        (0..self.n_cols()).filter(|&c| self.groups[c] == g).collect()
    }

    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        write!(w, "video_id")?;
        for (c, g) in self.columns.iter().zip(&self.groups) {
            write!(w, ",{g}:{c}")?;
        }
        writeln!(w, ",label")?;
        for (i, id) in self.ids.iter().enumerate() {
            write!(w, "{}", csv_field(id))?;
            for v in self.values.row(i) {
                write!(w, ",{v}")?;
            }
            writeln!(w, ",{}", self.labels[i])?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }
}

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Columns tagged with any of the given groups, in column order.
pub fn group_mask(groups: &[FeatureGroup], selected: &BTreeSet<FeatureGroup>) -> Result<Vec<usize>> {
    if selected.is_empty() {
        return Err(Error::InvalidInput("empty feature group set".into()));
    }
    Ok((0..groups.len()).filter(|&c| selected.contains(&groups[c])).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Population mean and std per column.
    pub fn fit(x: &Array2<f64>) -> Self {
        let n = x.nrows().max(1) as f64;
        let mean: Array1<f64> = x.sum_axis(Axis(0)) / n;
        let mut var = Array1::<f64>::zeros(x.ncols());
        for row in x.rows() {
            for ((v, &xi), &m) in var.iter_mut().zip(row).zip(&mean) {
                *v += (xi - m) * (xi - m);
            }
        }
        Standardizer {
            mean: mean.to_vec(),
            std: var.iter().map(|v| (v / n).sqrt()).collect(),
        }
    }

    pub fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = x.clone();
        for mut row in out.rows_mut() {
            for ((v, &m), &s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = if s > 0.0 { (*v - m) / s } else { 0.0 };
            }
        }
        out
    }
}

fn check_classes(labels: &[u8]) -> Result<()> {
    if !labels.contains(&0) || !labels.contains(&1) {
        return Err(Error::SingleClass);
    }
    Ok(())
}

fn column_f(col: ArrayView1<f64>, labels: &[u8]) -> f64 {
    let mut n = [0usize; 2];
    let mut sum = [0.0; 2];
    for (&v, &y) in col.iter().zip(labels) {
        n[y as usize] += 1;
        sum[y as usize] += v;
    }
    let total = col.len() as f64;
    let grand = (sum[0] + sum[1]) / total;
    let means = [sum[0] / n[0] as f64, sum[1] / n[1] as f64];
    let ssb: f64 = (0..2).map(|g| n[g] as f64 * (means[g] - grand).powi(2)).sum();
    let ssw: f64 = col
        .iter()
        .zip(labels)
        .map(|(&v, &y)| (v - means[y as usize]).powi(2))
        .sum();
    let msb = ssb;
    let msw = ssw / (total - 2.0);
    // treat rounding-level within-group spread relative to the column's scale as zero
    let scale = col.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let msw_zero = msw <= (1e-14 * scale).powi(2);
    let msb_zero = msb <= (1e-14 * scale).powi(2) * total;
    match (msw_zero, msb_zero) {
        (true, true) => 0.0,
        (true, false) => f64::INFINITY,
        _ => msb / msw,
    }
}

/// One-way ANOVA F per column of `x` against binary labels.
pub fn anova_f(x: &Array2<f64>, labels: &[u8]) -> Result<Vec<f64>> {
    if x.nrows() != labels.len() {
        return Err(Error::LengthMismatch {
            what: "feature rows vs labels".into(),
            left: x.nrows(),
            right: labels.len(),
        });
    }
    check_classes(labels)?;
    if labels.len() < 3 {
        return Err(Error::InvalidInput("ANOVA needs at least 3 rows".into()));
    }
    Ok((0..x.ncols())
        .into_par_iter()
        .map(|c| column_f(x.column(c), labels))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionState {
    #[serde(with = "f64_inf")]
    pub scores: Vec<f64>,
    /// Ascending column indices.
    pub selected: Vec<usize>,
}

/// Column order by descending F, ties by lower index.
pub fn rank_columns(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

pub fn select_top_k(scores: &[f64], k: usize) -> Result<SelectionState> {
    if k == 0 || k > scores.len() {
        return Err(Error::KOutOfRange { k, max: scores.len() });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite { what: "F-scores".into() });
    }
    let mut selected: Vec<usize> = rank_columns(scores).into_iter().take(k).collect();
    selected.sort_unstable();
    Ok(SelectionState {
        scores: scores.to_vec(),
        selected,
    })
}

/// JSON has no infinity; store the sentinel as a string.
mod f64_inf {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|&x| if x.is_infinite() { Repr::Text("inf".into()) } else { Repr::Num(x) })
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Repr>::deserialize(d)?
            .into_iter()
            .map(|r| match r {
                Repr::Num(x) => Ok(x),
                Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
                Repr::Text(t) => Err(serde::de::Error::custom(format!("bad score `{t}`"))),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    /// Textbook two-group ANOVA written out term by term.
    fn oracle_f(x: &[f64], y: &[u8]) -> f64 {
        let n = x.len() as f64;
        let g: Vec<Vec<f64>> = (0..2u8)
            .map(|c| x.iter().zip(y).filter(|(_, &l)| l == c).map(|(&v, _)| v).collect())
            .collect();
        let grand = x.iter().sum::<f64>() / n;
        let mut ssb = 0.0;
        let mut ssw = 0.0;
        for grp in &g {
            let m = grp.iter().sum::<f64>() / grp.len() as f64;
            ssb += grp.len() as f64 * (m - grand) * (m - grand);
            ssw += grp.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
        }
        (ssb / 1.0) / (ssw / (n - 2.0))
    }

    fn full_parts() -> FeatureParts {
        FeatureParts {
            video_id: "v".into(),
            title_embedding: Some(vec![0.1; 768]),
            thumbnail_embedding: Some(vec![0.2; 2048]),
            graph: Some(vec![0.3; 16]),
            ttd: Some(vec![0.4; 3]),
            tcd: Some(vec![0.5; 3]),
            sentiment: Some(vec![0.6; 4]),
            lexical: Some(vec![1.0, 0.0, 2.0, 0.5, 3.0]),
            baitiness: Some(vec![0.0; 5]),
        }
    }

    #[test]
    fn assemble_order_and_width() {
        let row = assemble_features(&full_parts()).unwrap();
        assert_eq!(row.len(), 2852);
        assert_eq!(row[0], 0.1);
        assert_eq!(row[768], 0.2);
        assert_eq!(row[2816], 0.3);
        assert_eq!(row[2832], 0.4);
        assert_eq!(row[2835], 0.5);
        assert_eq!(row[2838], 0.6);
        assert_eq!(row[2842], 1.0);
        let mut p = full_parts();
        p.ttd = None;
        match assemble_features(&p) {
            Err(Error::MissingPart(g)) => assert_eq!(g.to_string(), "TTD"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schema_partitions_columns() {
        let (cols, groups) = full_schema();
        assert_eq!(cols.len(), 2852);
        for g in FeatureGroup::ALL {
            assert_eq!(groups.iter().filter(|&&x| x == g).count(), g.dim());
        }
    }

    #[test]
    fn anova_examples() {
        let f = anova_f(&array![[1.0], [2.0], [3.0], [4.0]], &[0, 0, 1, 1]).unwrap();
        assert!((f[0] - 8.0).abs() < 1e-9);
        assert!((f[0] - oracle_f(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1])).abs() < 1e-9);
        let x = array![[5.0, 0.0], [5.0, 0.0], [5.0, 1.0], [5.0, 1.0]];
        let f = anova_f(&x, &[0, 0, 1, 1]).unwrap();
        assert_eq!(f[0], 0.0);
        assert_eq!(f[1], f64::INFINITY);
        assert!(matches!(anova_f(&x, &[1, 1, 1, 1]), Err(Error::SingleClass)));
    }

    #[test]
    fn top_k_examples() {
        assert_eq!(select_top_k(&[3.0, 1.0, 2.0], 2).unwrap().selected, vec![0, 2]);
        assert_eq!(select_top_k(&[1.0; 4], 2).unwrap().selected, vec![0, 1]);
        assert_eq!(select_top_k(&[1.0, 2.0, 3.0], 3).unwrap().selected, vec![0, 1, 2]);
        assert_eq!(select_top_k(&[f64::INFINITY, 1e300, 0.0], 1).unwrap().selected, vec![0]);
        assert!(matches!(select_top_k(&[1.0], 2), Err(Error::KOutOfRange { .. })));
        assert!(matches!(select_top_k(&[1.0], 0), Err(Error::KOutOfRange { .. })));
    }

    #[test]
    fn group_masks() {
        let (_, groups) = full_schema();
        let m = |s: &str| group_mask(&groups, &parse_groups(s).unwrap()).unwrap().len();
        assert_eq!(m("LEX"), 5);
        assert_eq!(m("BERT,RESNET"), 2816);
        assert_eq!(m("TTD+TCD+GRAPH"), 22);
        assert!(matches!(parse_groups("BERT,FOO"), Err(Error::UnknownGroup(g)) if g == "FOO"));
        assert!(parse_groups(" , ").is_err());
    }

    #[test]
    fn standardizer_roundtrip() {
        let x = array![[1.0, 7.0, 3.0], [2.0, 7.0, -1.0], [6.0, 7.0, 0.5]];
        let s = Standardizer::fit(&x);
        let z = s.apply(&x);
        for c in 0..3 {
            let col = z.column(c);
            let m = col.mean().unwrap();
            assert!(m.abs() <= 1e-9);
            let sd = (col.mapv(|v| (v - m) * (v - m)).sum() / 3.0).sqrt();
            if c == 1 {
                assert_eq!(sd, 0.0);
            } else {
                assert!((sd - 1.0).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn selection_json_keeps_infinity() {
        let s = select_top_k(&[f64::INFINITY, 2.0], 1).unwrap();
        let back: SelectionState = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn csv_header() {
        let m = FeatureMatrix::from_parts(&[full_parts()], &[1]).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.starts_with("video_id,BERT:0,BERT:1,"));
        assert!(header.ends_with(",BAIT:generic,label"));
        assert!(text.lines().nth(1).unwrap().ends_with(",1"));
    }

    proptest! {
        #[test]
        fn anova_matches_oracle(
            x in prop::collection::vec(-100.0f64..100.0, 6..40),
            seed in any::<u64>(),
        ) {
            let n = x.len();
            let mut y: Vec<u8> = (0..n).map(|i| ((seed >> (i % 64)) & 1) as u8).collect();
            y[0] = 0;
            y[1] = 1;
            let col = Array2::from_shape_vec((n, 1), x.clone()).unwrap();
            let f = anova_f(&col, &y).unwrap()[0];
            let o = oracle_f(&x, &y);
            prop_assert!((f - o).abs() <= 1e-9 * o.abs().max(1.0));
        }

        #[test]
        fn anova_shift_and_scale_invariant(
            x in prop::collection::vec(-50i32..50, 6..30),
            shift in -20i32..20,
        ) {
            let n = x.len();
            let y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
            let base: Vec<f64> = x.iter().map(|&v| v as f64).collect();
            let f = |v: Vec<f64>| anova_f(&Array2::from_shape_vec((n, 1), v).unwrap(), &y).unwrap()[0];
            let f0 = f(base.clone());
            prop_assert_eq!(f0, f(base.iter().map(|v| v * 2.0).collect()));
            prop_assert_eq!(f0, f(base.iter().map(|v| v * -0.5).collect()));
            let shifted = f(base.iter().map(|v| v + shift as f64).collect());
            prop_assert!((f0 - shifted).abs() <= 1e-9 * f0.abs().max(1.0) || f0 == shifted);
        }

        #[test]
        fn top_k_nested(scores in prop::collection::vec(0u8..5, 2..30)) {
            let s: Vec<f64> = scores.iter().map(|&v| v as f64).collect();
            for k in 1..s.len() {
                let a = select_top_k(&s, k).unwrap().selected;
                let b = select_top_k(&s, k + 1).unwrap().selected;
                prop_assert!(a.iter().all(|c| b.contains(c)));
            }
        }
    }
}
