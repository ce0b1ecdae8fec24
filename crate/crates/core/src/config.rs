//! Flat `key = value` run configuration. Every key has a default, so an
//! empty file is valid; unknown keys are errors.

use std::collections::BTreeSet;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::{json, Value};

use crate::ensemble::MetaProtocol;
use crate::error::{Error, Result};
use crate::evaluation::EvalSettings;
use crate::features::{parse_groups, FeatureGroup};
use crate::pipeline::{PipelineSettings, Resources};
use crate::text_disparity::{load_stopwords, TextResources, WordEmbeddingTable};
use crate::title::BaitLexicons;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub manifest: Option<PathBuf>,
    /// Directory with the lexicon files; the bundled set when absent.
    pub lexicons: Option<PathBuf>,
    /// Stopword file; the lexicon stopword list when absent.
    pub stopwords: Option<PathBuf>,
    /// GloVe-style word vectors; embedding cosine is 0 when absent.
    pub embeddings: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub settings: PipelineSettings,
    pub eval: EvalSettings,
    pub sweep_ks: Vec<usize>,
    pub top_n: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            manifest: None,
            lexicons: None,
            stopwords: None,
            embeddings: None,
            out: None,
            seed: 0,
            settings: PipelineSettings::default(),
            eval: EvalSettings::default(),
            sweep_ks: vec![5, 25, 50, 100, 200, 400, 825],
            top_n: 20,
        }
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("`{key}`: bad value `{value}`: {e}")))
}

fn opt_num<T: FromStr>(key: &str, value: &str) -> Result<Option<T>>
where
    T::Err: Display,
{
    match value {
        "all" | "none" => Ok(None),
        v => num(key, v).map(Some),
    }
}

fn opt_text<T: Display>(v: &Option<T>, none: &str) -> String {
    v.as_ref().map(|v| v.to_string()).unwrap_or_else(|| none.to_string())
}

fn groups_text(groups: &BTreeSet<FeatureGroup>) -> String {
    if groups.len() == FeatureGroup::ALL.len() {
        "all".into()
    } else {
        groups.iter().map(|g| g.as_str()).collect::<Vec<_>>().join(",")
    }
}

impl PipelineConfig {
    pub const KEYS: &'static [&'static str] = &[
        "manifest",
        "lexicons",
        "stopwords",
        "embeddings",
        "out",
        "seed",
        "face_threshold",
        "alpha",
        "gcn.hidden",
        "gcn.lr",
        "gcn.epochs",
        "gcn.momentum",
        "gcn.seed",
        "select.k",
        "groups",
        "model.knn.k",
        "model.nb.var_floor",
        "model.lr.lambda",
        "model.lr.max_epochs",
        "model.lr.tol",
        "model.gbt.rounds",
        "model.gbt.max_depth",
        "model.gbt.eta",
        "model.gbt.lambda",
        "model.gbt.min_child_weight",
        "model.mlp.hidden",
        "model.mlp.epochs",
        "model.mlp.lr",
        "model.mlp.momentum",
        "model.mlp.l2",
        "model.svm.lambda",
        "model.svm.epochs",
        "model.svm.eta0",
        "model.rf.trees",
        "model.rf.max_features",
        "model.rf.max_depth",
        "model.rf.min_samples_leaf",
        "model.stack.inner_folds",
        "eval.folds",
        "eval.holdout",
        "eval.meta",
        "sweep.ks",
        "analyze.top_n",
    ];

    /// Parse config text. Relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path, source: &Path) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: source.to_path_buf(),
                line: i + 1,
                message: "expected key = value".into(),
            })?;
            cfg.set_relative(key.trim(), value.trim(), base).map_err(|e| Error::Parse {
                path: source.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base, path)
    }

    /// Apply one override; relative paths stay relative to the working directory.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        self.set_relative(key, value, Path::new(""))
    }

    fn set_relative(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let path = || Some(base.join(value));
        let s = &mut self.settings;
        let m = &mut s.stacking.hyper;
        match key {
            "manifest" => self.manifest = path(),
            "lexicons" => self.lexicons = path(),
            "stopwords" => self.stopwords = path(),
            "embeddings" => self.embeddings = path(),
            "out" => self.out = path(),
            "seed" => self.seed = num(key, value)?,
            "face_threshold" => s.features.face_threshold = num(key, value)?,
            "alpha" => s.features.alpha = num(key, value)?,
            "gcn.hidden" => s.gcn.hidden = num(key, value)?,
            "gcn.lr" => s.gcn.lr = num(key, value)?,
            "gcn.epochs" => s.gcn.epochs = num(key, value)?,
            "gcn.momentum" => s.gcn.momentum = num(key, value)?,
            "gcn.seed" => s.gcn_seed = opt_num(key, value)?,
            "select.k" => s.stacking.select_k = opt_num(key, value)?,
            "groups" => {
                s.groups = if value.eq_ignore_ascii_case("all") {
                    FeatureGroup::ALL.into_iter().collect()
                } else {
                    parse_groups(value)?
                }
            }
            "model.knn.k" => m.knn_k = num(key, value)?,
            "model.nb.var_floor" => m.nb_var_floor = num(key, value)?,
            "model.lr.lambda" => m.lr_lambda = num(key, value)?,
            "model.lr.max_epochs" => m.lr_max_epochs = num(key, value)?,
            "model.lr.tol" => m.lr_tol = num(key, value)?,
            "model.gbt.rounds" => m.gbt.rounds = num(key, value)?,
            "model.gbt.max_depth" => m.gbt.max_depth = num(key, value)?,
            "model.gbt.eta" => m.gbt.eta = num(key, value)?,
            "model.gbt.lambda" => m.gbt.lambda = num(key, value)?,
            "model.gbt.min_child_weight" => m.gbt.min_child_weight = num(key, value)?,
            "model.mlp.hidden" => m.mlp.hidden = num(key, value)?,
            "model.mlp.epochs" => m.mlp.epochs = num(key, value)?,
            "model.mlp.lr" => m.mlp.lr = num(key, value)?,
            "model.mlp.momentum" => m.mlp.momentum = num(key, value)?,
            "model.mlp.l2" => m.mlp.l2 = num(key, value)?,
            "model.svm.lambda" => m.svm.lambda = num(key, value)?,
            "model.svm.epochs" => m.svm.epochs = num(key, value)?,
            "model.svm.eta0" => m.svm.eta0 = num(key, value)?,
            "model.rf.trees" => m.forest.trees = num(key, value)?,
            "model.rf.max_features" => m.forest.max_features = opt_num(key, value)?,
            "model.rf.max_depth" => m.forest.max_depth = opt_num(key, value)?,
            "model.rf.min_samples_leaf" => m.forest.min_samples_leaf = num(key, value)?,
            "model.stack.inner_folds" => s.stacking.inner_folds = num(key, value)?,
            "eval.folds" => self.eval.folds = num(key, value)?,
            "eval.holdout" => self.eval.holdout = opt_num(key, value)?,
            "eval.meta" => s.stacking.protocol = value.parse::<MetaProtocol>()?,
            "sweep.ks" => {
                self.sweep_ks = value
                    .split(',')
                    .map(str::trim)
                    .filter(|v| !v.is_empty())
                    .map(|v| num(key, v))
                    .collect::<Result<_>>()?
            }
            "analyze.top_n" => self.top_n = num(key, value)?,
            _ => return Err(Error::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Every key with its effective value, in [`Self::KEYS`] order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let s = &self.settings;
        let m = &s.stacking.hyper;
        let p = |v: &Option<PathBuf>| v.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let values = [
            p(&self.manifest),
            p(&self.lexicons),
            p(&self.stopwords),
            p(&self.embeddings),
            p(&self.out),
            self.seed.to_string(),
            s.features.face_threshold.to_string(),
            s.features.alpha.to_string(),
            s.gcn.hidden.to_string(),
            s.gcn.lr.to_string(),
            s.gcn.epochs.to_string(),
            s.gcn.momentum.to_string(),
            opt_text(&s.gcn_seed, "none"),
            opt_text(&s.stacking.select_k, "all"),
            groups_text(&s.groups),
            m.knn_k.to_string(),
            m.nb_var_floor.to_string(),
            m.lr_lambda.to_string(),
            m.lr_max_epochs.to_string(),
            m.lr_tol.to_string(),
            m.gbt.rounds.to_string(),
            m.gbt.max_depth.to_string(),
            m.gbt.eta.to_string(),
            m.gbt.lambda.to_string(),
            m.gbt.min_child_weight.to_string(),
            m.mlp.hidden.to_string(),
            m.mlp.epochs.to_string(),
            m.mlp.lr.to_string(),
            m.mlp.momentum.to_string(),
            m.mlp.l2.to_string(),
            m.svm.lambda.to_string(),
            m.svm.epochs.to_string(),
            m.svm.eta0.to_string(),
            m.forest.trees.to_string(),
            opt_text(&m.forest.max_features, "all"),
            opt_text(&m.forest.max_depth, "none"),
            m.forest.min_samples_leaf.to_string(),
            s.stacking.inner_folds.to_string(),
            self.eval.folds.to_string(),
            opt_text(&self.eval.holdout, "none"),
            s.stacking.protocol.to_string(),
            self.sweep_ks.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","),
            self.top_n.to_string(),
        ];
        Self::KEYS.iter().copied().zip(values).collect()
    }

    /// Canonical text; parses back to the same config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            if v.is_empty() {
                continue;
            }
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        }
        out
    }

    /// Snapshot embedded in reports and model files. The output directory
    /// is left out so reruns into another directory compare equal.
    pub fn to_json(&self) -> Value {
        let mut map = serde_json::Map::new();
        for (k, v) in self.entries().into_iter().filter(|(k, _)| *k != "out") {
            map.insert(k.to_string(), json!(v));
        }
        Value::Object(map)
    }

    /// Every configured path must exist before a run starts.
    pub fn check_paths(&self) -> Result<()> {
        for p in [&self.manifest, &self.lexicons, &self.stopwords, &self.embeddings]
            .into_iter()
            .flatten()
        {
            if !p.exists() {
                return Err(Error::Config(format!("configured path {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn manifest_path(&self) -> Result<&Path> {
        self.manifest
            .as_deref()
            .ok_or_else(|| Error::Config("no manifest configured".into()))
    }

    pub fn load_resources(&self) -> Result<Resources> {
        let lexicons = match &self.lexicons {
            Some(dir) => BaitLexicons::load_dir(dir)?,
            None => BaitLexicons::bundled(),
        };
        let stopwords = match &self.stopwords {
            Some(p) => load_stopwords(p)?,
            None => lexicons.stopwords.clone(),
        };
        let embeddings = match &self.embeddings {
            Some(p) => WordEmbeddingTable::load(p)?,
            None => WordEmbeddingTable::default(),
        };
        Ok(Resources {
            text: TextResources::new(stopwords, embeddings),
            lexicons,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_default() {
        let c = PipelineConfig::parse("", Path::new("."), Path::new("c")).unwrap();
        assert_eq!(c, PipelineConfig::default());
    }

    #[test]
    fn keys_and_entries_align() {
        let c = PipelineConfig::default();
        assert_eq!(c.entries().len(), PipelineConfig::KEYS.len());
    }

    #[test]
    fn text_round_trip() {
        let text = "seed = 9\nselect.k = 40\ngroups = BERT+TTD\neval.holdout = 0.2\neval.meta = paper_literal\n\
                    model.rf.max_depth = 6\ngcn.seed = 3\nsweep.ks = 5, 10\nmanifest = /tmp/m.jsonl\n";
        let c = PipelineConfig::parse(text, Path::new("/base"), Path::new("c")).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.settings.stacking.select_k, Some(40));
        assert_eq!(c.settings.groups.len(), 2);
        assert_eq!(c.eval.holdout, Some(0.2));
        assert_eq!(c.settings.stacking.protocol, MetaProtocol::PaperLiteral);
        assert_eq!(c.sweep_ks, vec![5, 10]);
        let back = PipelineConfig::parse(&c.to_text(), Path::new("/other"), Path::new("c")).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let c = PipelineConfig::parse("manifest = m.jsonl", Path::new("/data/run"), Path::new("c")).unwrap();
        assert_eq!(c.manifest.as_deref(), Some(Path::new("/data/run/m.jsonl")));
    }

    #[test]
    fn errors_carry_line_numbers() {
        for text in ["seed = 1\nbogus.key = 3", "seed = 1\nseed = -4", "seed = 1\nno equals sign"] {
            match PipelineConfig::parse(text, Path::new("."), Path::new("c")) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn override_replaces_value() {
        let mut c = PipelineConfig::default();
        c.set("select.k", "all").unwrap();
        assert_eq!(c.settings.stacking.select_k, None);
        c.set("eval.folds", "5").unwrap();
        assert_eq!(c.eval.folds, 5);
        assert!(c.set("eval.meta", "sideways").is_err());
    }

    #[test]
    fn missing_path_is_reported() {
        let mut c = PipelineConfig::default();
        c.set("manifest", "/definitely/not/here.jsonl").unwrap();
        assert!(c.check_paths().is_err());
    }
}
