//! Mini-batch training with early stopping on validation Hit@K.

use log::info;
use serde::{Deserialize, Serialize};

use super::params::{Dropout, ParamSet};
use super::{AttnNet, Checkpoint, GruNet, MarkovModel, ModelKind, PopModel, ScorerSpec, TrainConfig};
use crate::corpus::SplitDataset;
use crate::eval::{evaluate, EvalCase, RankingConfig, Scorer};
use crate::numerics::{AdamConfig, AdamState, Rng};
use crate::{Error, Result};

const STREAM_INIT: u64 = 1;
const STREAM_SHUFFLE: u64 = 2;
const STREAM_DROPOUT: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_hit: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub history: Vec<EpochLog>,
}

enum Net {
    Gru(GruNet),
    Attn(AttnNet),
}

impl Net {
    fn params(&self) -> &ParamSet {
        match self {
            Net::Gru(n) => &n.params,
            Net::Attn(n) => &n.params,
        }
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        match self {
            Net::Gru(n) => &mut n.params,
            Net::Attn(n) => &mut n.params,
        }
    }

    fn loss_and_grad(
        &self,
        prefix: &[usize],
        target: usize,
        dropout: Option<&mut Dropout>,
        grad: &mut ParamSet,
    ) -> Result<f64> {
        match self {
            Net::Gru(n) => n.loss_and_grad(prefix, target, dropout, grad),
            Net::Attn(n) => n.loss_and_grad(prefix, target, dropout, grad),
        }
    }

    fn scorer(&self) -> &(dyn Scorer + Sync) {
        match self {
            Net::Gru(n) => n,
            Net::Attn(n) => n,
        }
    }
}

fn valid_hit<S: Scorer + Sync + ?Sized>(scorer: &S, valid: &[EvalCase], k: usize) -> Result<f64> {
    let report = evaluate(scorer, valid, &RankingConfig::new(&[k], false)?)?;
    Ok(report.metrics[0].hit)
}

fn truncate(cases: &[EvalCase], max_len: usize) -> Vec<EvalCase> {
    cases
        .iter()
        .map(|c| {
            let mut c = c.clone();
            if c.prefix.len() > max_len {
                c.prefix.drain(..c.prefix.len() - max_len);
            }
            c
        })
        .collect()
}

/// Fits or trains the scorer described by `spec` on `split`.
///
/// Counted models are fitted in one pass. Trainable models run epochs of
/// shuffled mini-batches with Adam; after each epoch the validation Hit@K is
/// measured, the best parameters are kept, and training stops once the best
/// has not improved for `patience` consecutive epochs.
pub fn train(spec: &ScorerSpec, split: &SplitDataset, config: &TrainConfig) -> Result<TrainOutcome> {
    spec.validate()?;
    config.validate()?;
    if split.train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if split.valid.is_empty() {
        return Err(Error::Empty("validation set"));
    }
    let n = split.catalog_size;
    let train_cases = truncate(&split.train, spec.max_len);
    let valid_cases = truncate(&split.valid, spec.max_len);
    let k = config.eval_k_for_stopping;

    let mut init_rng = Rng::derived(config.seed, STREAM_INIT);
    let mut net = match spec.kind {
        ModelKind::Pop | ModelKind::Markov => {
            let mut checkpoint = if spec.kind == ModelKind::Pop {
                Checkpoint::from_pop(spec, &PopModel::fit(&train_cases, n)?, config.seed)
            } else {
                let m = MarkovModel::fit(&train_cases, n, spec.markov_alpha)?;
                Checkpoint::from_markov(spec, &m, config.seed)
            };
            checkpoint.best_valid_hit = valid_hit(&checkpoint.model()?, &valid_cases, k)?;
            info!("{} fitted, valid Hit@{k} {:.4}", spec.kind, checkpoint.best_valid_hit);
            return Ok(TrainOutcome {
                checkpoint,
                history: Vec::new(),
            });
        }
        ModelKind::Gru => Net::Gru(GruNet::init(n, spec.embed_dim, &mut init_rng)),
        ModelKind::Attn => Net::Attn(AttnNet::init(spec.attn_dims(n), &mut init_rng)),
    };

    let mut shuffle_rng = Rng::derived(config.seed, STREAM_SHUFFLE);
    let mut dropout_rng = Rng::derived(config.seed, STREAM_DROPOUT);
    let adam = AdamConfig::with_lr(config.lr);
    let mut states: Vec<AdamState> = net
        .params()
        .tensors
        .iter()
        .map(|t| AdamState::new(t.data.len(), adam))
        .collect();
    let mut grad = net.params().zeros_like();
    let mut order: Vec<usize> = (0..train_cases.len()).collect();

    let mut best_params = net.params().clone();
    let mut best_hit = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut stale = 0;
    let mut history = Vec::new();

    for epoch in 1..=config.max_epochs {
        shuffle_rng.shuffle(&mut order);
        let mut total_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            grad.fill_zero();
            for &i in batch {
                let case = &train_cases[i];
                let mut dropout = Dropout {
                    rate: spec.dropout,
                    rng: &mut dropout_rng,
                };
                let dropout = (spec.dropout > 0.0).then_some(&mut dropout);
                total_loss += net.loss_and_grad(&case.prefix, case.gt, dropout, &mut grad)?;
            }
            if !total_loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    loss: total_loss,
                });
            }
            grad.scale(1.0 / batch.len() as f64);
            for ((state, p), g) in states
                .iter_mut()
                .zip(&mut net.params_mut().tensors)
                .zip(&grad.tensors)
            {
                state.step(&mut p.data, &g.data).map_err(|e| match e {
                    Error::NonFiniteGradient { name } => Error::NonFiniteGradient {
                        name: format!("{}{name} (epoch {epoch})", p.name),
                    },
                    other => other,
                })?;
            }
        }
        let train_loss = total_loss / train_cases.len() as f64;
        let hit = valid_hit(net.scorer(), &valid_cases, k)?;
        info!("epoch {epoch}: loss {train_loss:.5}, valid Hit@{k} {hit:.4}");
        history.push(EpochLog {
            epoch,
            train_loss,
            valid_hit: hit,
        });
        if hit > best_hit {
            best_hit = hit;
            best_epoch = epoch;
            best_params = net.params().clone();
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }
    info!(
        "{} trained for {} epochs, best valid Hit@{k} {best_hit:.4} at epoch {best_epoch}",
        spec.kind,
        history.len()
    );

    let mut checkpoint = Checkpoint::from_params(spec, n, config.seed, &best_params);
    checkpoint.best_valid_hit = best_hit.max(0.0);
    checkpoint.epochs_run = history.len();
    checkpoint.best_epoch = best_epoch;
    Ok(TrainOutcome {
        checkpoint,
        history,
    })
}
