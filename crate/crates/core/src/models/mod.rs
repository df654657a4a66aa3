//! Sequential scorers and their training loop.
//!
//! Every scorer maps a prefix to one score per catalog item. Two are counted
//! ([`PopModel`], [`MarkovModel`]); two are trained end to end with full
//! softmax cross-entropy and Adam ([`GruNet`], [`AttnNet`]). Trained and
//! counted models alike are persisted as a [`Checkpoint`].

mod attn;
mod baselines;
mod gru;
pub mod params;
mod train;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use attn::{AttnDims, AttnNet};
pub use baselines::{MarkovModel, PopModel};
pub use gru::GruNet;
pub use params::{ParamSet, StoredTensor, Tensor};
pub use train::{train, EpochLog, TrainOutcome};

use crate::eval::{ScoreVector, Scorer};
use crate::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "hrli-checkpoint/1";
pub const DEFAULT_SEED: u64 = 2024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Pop,
    Markov,
    #[serde(rename = "gru_mini", alias = "gru")]
    Gru,
    #[serde(rename = "attn_mini", alias = "attn")]
    Attn,
}

impl ModelKind {
    pub fn is_trainable(self) -> bool {
        matches!(self, ModelKind::Gru | ModelKind::Attn)
    }

    pub fn short_name(self) -> &'static str {
        match self {
            ModelKind::Pop => "pop",
            ModelKind::Markov => "markov",
            ModelKind::Gru => "gru",
            ModelKind::Attn => "attn",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pop" => Ok(ModelKind::Pop),
            "markov" => Ok(ModelKind::Markov),
            "gru" | "gru_mini" => Ok(ModelKind::Gru),
            "attn" | "attn_mini" => Ok(ModelKind::Attn),
            other => Err(Error::Config(format!("unknown model kind {other:?}"))),
        }
    }
}

/// Architecture and smoothing hyperparameters of a scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerSpec {
    pub kind: ModelKind,
    pub embed_dim: usize,
    /// GRU state size (must equal `embed_dim`, the output layer is tied) or
    /// the attention block's feed-forward width.
    pub hidden_dim: usize,
    pub n_heads: usize,
    pub dropout: f64,
    pub markov_alpha: f64,
    /// Longest prefix fed to the model; longer prefixes keep their most
    /// recent items.
    pub max_len: usize,
}

impl ScorerSpec {
    pub fn new(kind: ModelKind) -> Self {
        ScorerSpec {
            kind,
            embed_dim: 64,
            hidden_dim: 64,
            n_heads: 1,
            dropout: 0.2,
            markov_alpha: 0.01,
            max_len: crate::corpus::DEFAULT_MAX_LEN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.embed_dim < 1 || self.hidden_dim < 1 || self.n_heads < 1 || self.max_len < 1 {
            return bad("dimensions, heads and max_len must be at least 1".into());
        }
        if !self.embed_dim.is_multiple_of(self.n_heads) {
            return bad(format!(
                "embed_dim {} is not divisible by n_heads {}",
                self.embed_dim, self.n_heads
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if !(self.markov_alpha > 0.0) {
            return bad(format!("markov_alpha {} must be > 0", self.markov_alpha));
        }
        if self.kind == ModelKind::Gru && self.hidden_dim != self.embed_dim {
            return bad(format!(
                "the GRU's output layer is tied to the item embeddings, so hidden_dim ({}) must equal embed_dim ({})",
                self.hidden_dim, self.embed_dim
            ));
        }
        Ok(())
    }

    fn attn_dims(&self, n_items: usize) -> AttnDims {
        AttnDims {
            n_items,
            dim: self.embed_dim,
            ffn_dim: self.hidden_dim,
            n_heads: self.n_heads,
            max_len: self.max_len,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub eval_k_for_stopping: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            batch_size: 256,
            max_epochs: 200,
            patience: 10,
            seed: DEFAULT_SEED,
            eval_k_for_stopping: 10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patience < 1 || self.batch_size < 1 || self.eval_k_for_stopping < 1 {
            return Err(Error::Config(
                "patience, batch_size and eval_k_for_stopping must be at least 1".into(),
            ));
        }
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return Err(Error::Config(format!("invalid learning rate {}", self.lr)));
        }
        Ok(())
    }
}

/// A persisted scorer: hyperparameters, parameters and training provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub spec: ScorerSpec,
    pub catalog_size: usize,
    pub seed: u64,
    pub best_valid_hit: f64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub tensors: BTreeMap<String, StoredTensor>,
    /// Integer arrays (sparse layouts).
    #[serde(default)]
    pub indices: BTreeMap<String, Vec<u32>>,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(raw: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(raw)?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(Error::Data(format!(
                "unsupported checkpoint format {:?}",
                ckpt.format
            )));
        }
        ckpt.spec.validate()?;
        Ok(ckpt)
    }

    /// Rebuilds the scorer held by this checkpoint.
    pub fn model(&self) -> Result<Model> {
        let n = self.catalog_size;
        let tensor = |name: &str| {
            self.tensors
                .get(name)
                .ok_or_else(|| Error::Data(format!("checkpoint lacks tensor {name:?}")))
        };
        let inner = match self.spec.kind {
            ModelKind::Pop => {
                let counts = tensor("counts")?;
                if counts.data.len() != n {
                    return Err(Error::Data("popularity table size mismatch".into()));
                }
                ModelInner::Pop(PopModel {
                    counts: counts.data.iter().map(|&c| f64::from(c)).collect(),
                })
            }
            ModelKind::Markov => {
                let idx = |name: &str| -> Result<Vec<usize>> {
                    Ok(self
                        .indices
                        .get(name)
                        .ok_or_else(|| Error::Data(format!("checkpoint lacks index {name:?}")))?
                        .iter()
                        .map(|&x| x as usize)
                        .collect())
                };
                ModelInner::Markov(MarkovModel::from_parts(
                    n,
                    self.spec.markov_alpha,
                    idx("row_ptr")?,
                    idx("cols")?,
                    tensor("counts")?.data.iter().map(|&c| f64::from(c)).collect(),
                )?)
            }
            ModelKind::Gru => {
                let d = self.spec.embed_dim;
                let params = ParamSet::from_stored(&GruNet::template(n, d), &self.tensors)?;
                ModelInner::Gru(GruNet::from_params(n, d, params)?)
            }
            ModelKind::Attn => {
                let dims = self.spec.attn_dims(n);
                let params = ParamSet::from_stored(&AttnNet::template(dims), &self.tensors)?;
                ModelInner::Attn(AttnNet::from_params(dims, params)?)
            }
        };
        Ok(Model {
            max_len: self.spec.max_len,
            inner,
        })
    }

    pub(crate) fn from_pop(spec: &ScorerSpec, pop: &PopModel, seed: u64) -> Self {
        let mut tensors = BTreeMap::new();
        tensors.insert(
            "counts".to_string(),
            StoredTensor {
                shape: vec![pop.counts.len()],
                data: pop.counts.iter().map(|&c| c as f32).collect(),
            },
        );
        Checkpoint::assemble(spec, pop.counts.len(), seed, tensors, BTreeMap::new())
    }

    pub(crate) fn from_markov(spec: &ScorerSpec, m: &MarkovModel, seed: u64) -> Self {
        let mut tensors = BTreeMap::new();
        tensors.insert(
            "counts".to_string(),
            StoredTensor {
                shape: vec![m.counts.len()],
                data: m.counts.iter().map(|&c| c as f32).collect(),
            },
        );
        let mut indices = BTreeMap::new();
        let to_u32 = |xs: &[usize]| xs.iter().map(|&x| x as u32).collect::<Vec<_>>();
        indices.insert("row_ptr".to_string(), to_u32(&m.row_ptr));
        indices.insert("cols".to_string(), to_u32(&m.cols));
        Checkpoint::assemble(spec, m.row_ptr.len() - 1, seed, tensors, indices)
    }

    pub(crate) fn from_params(
        spec: &ScorerSpec,
        catalog_size: usize,
        seed: u64,
        params: &ParamSet,
    ) -> Self {
        Checkpoint::assemble(spec, catalog_size, seed, params.to_stored(), BTreeMap::new())
    }

    fn assemble(
        spec: &ScorerSpec,
        catalog_size: usize,
        seed: u64,
        tensors: BTreeMap<String, StoredTensor>,
        indices: BTreeMap<String, Vec<u32>>,
    ) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            spec: spec.clone(),
            catalog_size,
            seed,
            best_valid_hit: 0.0,
            epochs_run: 0,
            best_epoch: 0,
            tensors,
            indices,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum ModelInner {
    Pop(PopModel),
    Markov(MarkovModel),
    Gru(GruNet),
    Attn(AttnNet),
}

/// A loaded scorer. Scoring keeps the most recent `max_len` prefix items and
/// never applies dropout.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    max_len: usize,
    inner: ModelInner,
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self.inner {
            ModelInner::Pop(_) => ModelKind::Pop,
            ModelInner::Markov(_) => ModelKind::Markov,
            ModelInner::Gru(_) => ModelKind::Gru,
            ModelInner::Attn(_) => ModelKind::Attn,
        }
    }

    pub fn as_gru(&self) -> Option<&GruNet> {
        match &self.inner {
            ModelInner::Gru(g) => Some(g),
            _ => None,
        }
    }

    pub fn as_attn(&self) -> Option<&AttnNet> {
        match &self.inner {
            ModelInner::Attn(a) => Some(a),
            _ => None,
        }
    }
}

impl Scorer for Model {
    fn catalog_size(&self) -> usize {
        match &self.inner {
            ModelInner::Pop(m) => m.catalog_size(),
            ModelInner::Markov(m) => m.catalog_size(),
            ModelInner::Gru(m) => m.catalog_size(),
            ModelInner::Attn(m) => m.catalog_size(),
        }
    }

    fn score(&self, prefix: &[usize]) -> Result<ScoreVector> {
        let prefix = &prefix[prefix.len().saturating_sub(self.max_len)..];
        match &self.inner {
            ModelInner::Pop(m) => m.score(prefix),
            ModelInner::Markov(m) => m.score(prefix),
            ModelInner::Gru(m) => m.score(prefix),
            ModelInner::Attn(m) => m.score(prefix),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::EvalCase;
    use crate::numerics::Rng;

    #[test]
    fn spec_validation() {
        let mut spec = ScorerSpec::new(ModelKind::Attn);
        assert!(spec.validate().is_ok());
        spec.n_heads = 3;
        assert!(spec.validate().is_err());
        let mut gru = ScorerSpec::new(ModelKind::Gru);
        gru.hidden_dim = 32;
        assert!(gru.validate().is_err());
        let mut drop = ScorerSpec::new(ModelKind::Pop);
        drop.dropout = 1.0;
        assert!(drop.validate().is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in [ModelKind::Pop, ModelKind::Markov, ModelKind::Gru, ModelKind::Attn] {
            assert_eq!(kind.short_name().parse::<ModelKind>().unwrap(), kind);
        }
        assert_eq!(
            serde_json::to_string(&ModelKind::Gru).unwrap(),
            "\"gru_mini\""
        );
    }

    #[test]
    fn checkpoints_reload_every_kind() {
        let train = vec![
            EvalCase::new(0, vec![0], 1).unwrap(),
            EvalCase::new(1, vec![0, 1], 2).unwrap(),
        ];
        let n = 4;
        let pop = Checkpoint::from_pop(
            &ScorerSpec::new(ModelKind::Pop),
            &PopModel::fit(&train, n).unwrap(),
            1,
        );
        let markov = Checkpoint::from_markov(
            &ScorerSpec::new(ModelKind::Markov),
            &MarkovModel::fit(&train, n, 0.01).unwrap(),
            1,
        );
        let mut gspec = ScorerSpec::new(ModelKind::Gru);
        gspec.embed_dim = 4;
        gspec.hidden_dim = 4;
        let gru = GruNet::init(n, 4, &mut Rng::seeded(1));
        let gru_ckpt = Checkpoint::from_params(&gspec, n, 1, &gru.params);
        let mut aspec = ScorerSpec::new(ModelKind::Attn);
        aspec.embed_dim = 4;
        aspec.hidden_dim = 8;
        aspec.max_len = 3;
        let attn = AttnNet::init(aspec.attn_dims(n), &mut Rng::seeded(1));
        let attn_ckpt = Checkpoint::from_params(&aspec, n, 1, &attn.params);

        for ckpt in [pop, markov, gru_ckpt, attn_ckpt] {
            let json = ckpt.to_json().unwrap();
            let back = Checkpoint::from_json(&json).unwrap();
            assert_eq!(back, ckpt);
            let model = back.model().unwrap();
            let scores = model.score(&[0, 1, 2, 3, 1]).unwrap();
            assert_eq!(scores.len(), n, "{:?}", model.kind());
            assert!(scores.iter().all(|s| s.is_finite()));
        }
    }

    #[test]
    fn scoring_truncates_to_recent_items() {
        let mut spec = ScorerSpec::new(ModelKind::Gru);
        spec.embed_dim = 3;
        spec.hidden_dim = 3;
        spec.max_len = 2;
        let net = GruNet::init(5, 3, &mut Rng::seeded(9));
        let model = Checkpoint::from_params(&spec, 5, 9, &net.params)
            .model()
            .unwrap();
        assert_eq!(
            model.score(&[4, 4, 0, 1, 2]).unwrap(),
            model.score(&[1, 2]).unwrap()
        );
    }
}
