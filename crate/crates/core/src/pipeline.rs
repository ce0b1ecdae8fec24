//! Bundle → feature parts → fitted model, shared by training, evaluation
//! and prediction.

use std::collections::BTreeSet;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{load_bundle, ManifestEntry, ModalityBundle};
use crate::ensemble::{stacking_predict, train_stacking, StackingConfig, StackingModel, StackingOutput};
use crate::error::{Error, Result};
use crate::features::{full_schema, group_mask, FeatureGroup, FeatureMatrix, FeatureParts};
use crate::graph_net::{gcn_forward_many, gcn_train, GcnHyper, GraphNetParams, READOUT_DIM};
use crate::rng::{self, tag};
use crate::text_disparity::{disparity_triplet, TextResources};
use crate::title::{baitiness_features, lexical_features, sentiment_scores, BaitLexicons};
use crate::visual::{build_star_graph, DisparityGraph};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default)]
pub struct Resources {
    pub lexicons: BaitLexicons,
    pub text: TextResources,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureSettings {
    pub alpha: f64,
    pub face_threshold: f64,
}

impl Default for FeatureSettings {
    fn default() -> Self {
        FeatureSettings {
            alpha: crate::title::DEFAULT_ALPHA,
            face_threshold: crate::visual::DEFAULT_FACE_THRESHOLD,
        }
    }
}

/// One video with every feature except the learned graph readout.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedVideo {
    pub video_id: String,
    pub label: u8,
    pub parts: FeatureParts,
    pub graph: DisparityGraph,
}

pub fn prepare_video(bundle: &ModalityBundle, label: u8, res: &Resources, settings: &FeatureSettings) -> Result<PreparedVideo> {
    let title = bundle.title.as_str();
    let parts = FeatureParts {
        video_id: bundle.video_id.clone(),
        title_embedding: Some(bundle.title_embedding.clone()),
        thumbnail_embedding: Some(bundle.thumbnail_embedding.clone()),
        graph: None,
        ttd: Some(disparity_triplet(title, &bundle.caption, &res.text).to_vec().to_vec()),
        tcd: Some(disparity_triplet(title, &bundle.transcript, &res.text).to_vec().to_vec()),
        sentiment: Some(sentiment_scores(title, &res.lexicons, settings.alpha).to_vec().to_vec()),
        lexical: Some(lexical_features(title).to_vec().to_vec()),
        baitiness: Some(baitiness_features(title, &res.lexicons).to_vec().to_vec()),
    };
    Ok(PreparedVideo {
        video_id: bundle.video_id.clone(),
        label,
        parts,
        graph: build_star_graph(bundle, settings.face_threshold)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedCorpus {
    pub videos: Vec<PreparedVideo>,
}

impl PreparedCorpus {
    pub fn len(&self) -> usize {
        self.videos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.videos.iter().map(|v| v.label).collect()
    }

    pub fn ids(&self) -> Vec<String> {
        self.videos.iter().map(|v| v.video_id.clone()).collect()
    }

    pub fn graphs(&self, rows: &[usize]) -> Vec<DisparityGraph> {
        rows.iter().map(|&r| self.videos[r].graph.clone()).collect()
    }
}

/// Load and featurise every manifest entry (in parallel, order preserved).
pub fn prepare_corpus(entries: &[ManifestEntry], res: &Resources, settings: &FeatureSettings) -> Result<PreparedCorpus> {
    let videos = entries
        .par_iter()
        .map(|e| {
            let b = load_bundle(e)?;
            prepare_video(&b, e.label, res, settings)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PreparedCorpus { videos })
}

/// Full 2852-column matrix for `rows`, with the graph readout supplied per row.
pub fn assemble_matrix(corpus: &PreparedCorpus, rows: &[usize], graph_features: Option<&[[f64; READOUT_DIM]]>) -> Result<FeatureMatrix> {
    let parts: Vec<FeatureParts> = rows
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let mut p = corpus.videos[r].parts.clone();
            p.graph = graph_features.map(|g| g[i].to_vec());
            p
        })
        .collect();
    let labels: Vec<u8> = rows.iter().map(|&r| corpus.videos[r].label).collect();
    FeatureMatrix::from_parts(&parts, &labels)
}

/// Matrix restricted to the columns of `groups`. CTD columns are zero-filled
/// placeholders when the group is masked out, so the graph net is never run.
fn masked_matrix(
    corpus: &PreparedCorpus,
    rows: &[usize],
    graph_features: Option<&[[f64; READOUT_DIM]]>,
    groups: &BTreeSet<FeatureGroup>,
) -> Result<Array2<f64>> {
    let filler;
    let graph_features = match graph_features {
        Some(g) => g,
        None => {
            filler = vec![[0.0; READOUT_DIM]; rows.len()];
            &filler
        }
    };
    let m = assemble_matrix(corpus, rows, Some(graph_features))?;
    let cols = group_mask(&m.groups, groups)?;
    Ok(m.values.select(ndarray::Axis(1), &cols))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSettings {
    pub features: FeatureSettings,
    pub gcn: GcnHyper,
    /// Overrides the derived graph-net seed when set.
    pub gcn_seed: Option<u64>,
    pub stacking: StackingConfig,
    pub groups: BTreeSet<FeatureGroup>,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        PipelineSettings {
            features: FeatureSettings::default(),
            gcn: GcnHyper::default(),
            gcn_seed: None,
            stacking: StackingConfig::default(),
            groups: FeatureGroup::ALL.into_iter().collect(),
        }
    }
}

impl PipelineSettings {
    pub fn uses_graph(&self) -> bool {
        self.groups.contains(&FeatureGroup::Ctd)
    }

    /// Selection size clamped to the masked column count.
    pub fn effective_k(&self) -> Option<usize> {
        let width = self.groups.iter().map(|g| g.dim()).sum::<usize>();
        self.stacking.select_k.map(|k| k.min(width))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClickbaitModel {
    pub format_version: u32,
    pub seed: u64,
    pub settings: PipelineSettings,
    pub gcn_params: Option<GraphNetParams>,
    #[serde(flatten)]
    pub stacking: StackingModel,
}

fn graph_readout(params: &GraphNetParams, graphs: &[DisparityGraph]) -> Result<Vec<[f64; READOUT_DIM]>> {
    Ok(gcn_forward_many(graphs, params)?.into_iter().map(|o| o.penultimate).collect())
}

/// Graph net trained on `rows`, or `None` when the CTD group is masked out.
pub fn fit_graph_net(
    corpus: &PreparedCorpus,
    rows: &[usize],
    settings: &PipelineSettings,
    seed: u64,
) -> Result<Option<GraphNetParams>> {
    if !settings.uses_graph() {
        return Ok(None);
    }
    let labels: Vec<u8> = rows.iter().map(|&r| corpus.videos[r].label).collect();
    let hyper = GcnHyper {
        seed: settings.gcn_seed.unwrap_or_else(|| rng::derive_seed(seed, &[tag::GCN])),
        ..settings.gcn
    };
    Ok(Some(gcn_train(&corpus.graphs(rows), &labels, hyper)?))
}

pub fn fit_model(corpus: &PreparedCorpus, rows: &[usize], settings: &PipelineSettings, seed: u64) -> Result<ClickbaitModel> {
    fit_model_with_k(corpus, rows, settings, seed, &[settings.effective_k()]).map(|mut v| v.remove(0))
}

/// Fit once per selection size, sharing the graph net across sizes.
pub fn fit_model_with_k(
    corpus: &PreparedCorpus,
    rows: &[usize],
    settings: &PipelineSettings,
    seed: u64,
    ks: &[Option<usize>],
) -> Result<Vec<ClickbaitModel>> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("no training rows".into()));
    }
    let labels: Vec<u8> = rows.iter().map(|&r| corpus.videos[r].label).collect();
    let gcn_params = fit_graph_net(corpus, rows, settings, seed)?;
    let readout = match &gcn_params {
        Some(p) => Some(graph_readout(p, &corpus.graphs(rows))?),
        None => None,
    };
    let x = masked_matrix(corpus, rows, readout.as_deref(), &settings.groups)?;
    ks.iter()
        .map(|&k| {
            let stacking_cfg = StackingConfig {
                select_k: k,
                ..settings.stacking.clone()
            };
            let stacking = train_stacking(x.view(), &labels, &stacking_cfg, rng::derive_seed(seed, &[tag::BASE]))?;
            Ok(ClickbaitModel {
                format_version: MODEL_FORMAT_VERSION,
                seed,
                settings: PipelineSettings {
                    stacking: stacking_cfg,
                    ..settings.clone()
                },
                gcn_params: gcn_params.clone(),
                stacking,
            })
        })
        .collect()
}

/// Masked feature matrix for `rows` as seen by a fitted model.
pub fn model_inputs(model: &ClickbaitModel, corpus: &PreparedCorpus, rows: &[usize]) -> Result<Array2<f64>> {
    let readout = match &model.gcn_params {
        Some(p) => Some(graph_readout(p, &corpus.graphs(rows))?),
        None => None,
    };
    masked_matrix(corpus, rows, readout.as_deref(), &model.settings.groups)
}

pub fn predict_model(model: &ClickbaitModel, corpus: &PreparedCorpus, rows: &[usize]) -> Result<StackingOutput> {
    let x = model_inputs(model, corpus, rows)?;
    stacking_predict(&model.stacking, x.view())
}

/// Full feature matrix with the graph readout from `params` (zeros if none).
pub fn export_matrix(corpus: &PreparedCorpus, params: Option<&GraphNetParams>) -> Result<FeatureMatrix> {
    let rows: Vec<usize> = (0..corpus.len()).collect();
    let readout = match params {
        Some(p) => graph_readout(p, &corpus.graphs(&rows))?,
        None => vec![[0.0; READOUT_DIM]; rows.len()],
    };
    assemble_matrix(corpus, &rows, Some(&readout))
}

pub fn column_names_for(groups: &BTreeSet<FeatureGroup>) -> Vec<String> {
    let (cols, tags) = full_schema();
    cols.into_iter()
        .zip(tags)
        .filter(|(_, g)| groups.contains(g))
        .map(|(c, g)| format!("{g}:{c}"))
        .collect()
}

