//! Minibatch training loop with seeded shuffling, clipping and best-dev
//! checkpointing.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::matrix::{real, Real};
use super::net::{accumulate_example_grad, bce_loss, score_example, EncodedReaction};
use super::optimizer::{clip_global_norm, Adam};
use super::params::ModelParams;
use super::NeuralError;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub seed: u64,
    pub use_rsd: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 128,
            learning_rate: 1e-3,
            clip_norm: 5.0,
            seed: 42,
            use_rsd: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_loss: f64,
    pub dev_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    /// Parameters from the epoch with the lowest dev loss.
    pub params: ModelParams<T>,
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
}

/// Mean loss and accuracy (threshold 0.5, ties positive) over a split.
pub fn evaluate_split<T: Real>(
    set: &[EncodedReaction],
    params: &ModelParams<T>,
    use_rsd: bool,
) -> (f64, f64) {
    if set.is_empty() {
        return (0.0, 0.0);
    }
    let mut loss_sum = 0.0;
    let mut correct = 0usize;
    for ex in set {
        let y = score_example(ex, params, use_rsd);
        loss_sum += bce_loss(y, ex.label).to_f64().unwrap_or(f64::NAN);
        let predicted = y.to_f64().unwrap_or(f64::NAN) >= 0.5;
        if predicted == ex.label {
            correct += 1;
        }
    }
    (loss_sum / set.len() as f64, correct as f64 / set.len() as f64)
}

/// Train on minibatches, evaluating the dev split once per epoch and keeping
/// the parameters of the best dev epoch. With an empty dev split the train
/// split supervises instead.
pub fn train<T: Real>(
    train_set: &[EncodedReaction],
    dev_set: &[EncodedReaction],
    init: ModelParams<T>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<T>, NeuralError> {
    let mut params = init;
    let mut adam = Adam::new(params.dims);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let supervise = if dev_set.is_empty() { train_set } else { dev_set };

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, ModelParams<T>)> = None;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size.max(1)) {
            let mut grads = ModelParams::zeros(params.dims);
            let scale = real::<T>(1.0 / batch.len() as f64);
            for &idx in batch {
                let loss =
                    accumulate_example_grad(&train_set[idx], &params, &mut grads, cfg.use_rsd, scale);
                loss_sum += loss.to_f64().unwrap_or(f64::NAN);
            }
            clip_global_norm(&mut grads, cfg.clip_norm)?;
            adam.step(&mut params, &grads, cfg.learning_rate);
        }
        if let Some(name) = params.first_non_finite() {
            return Err(NeuralError::NonFiniteGradient(name));
        }

        let train_loss = if train_set.is_empty() {
            0.0
        } else {
            loss_sum / train_set.len() as f64
        };
        let (dev_loss, dev_accuracy) = evaluate_split(supervise, &params, cfg.use_rsd);
        if !dev_loss.is_finite() {
            return Err(NeuralError::DivergedTraining(epoch));
        }
        history.push(EpochStats {
            epoch,
            train_loss,
            dev_loss,
            dev_accuracy,
        });
        let improved = best.as_ref().is_none_or(|(b, _, _)| dev_loss < *b);
        if improved {
            best = Some((dev_loss, epoch, params.clone()));
        }
    }

    let (_, best_epoch, best_params) = best.unwrap_or((f64::INFINITY, 0, params));
    Ok(TrainOutcome {
        params: best_params,
        history,
        best_epoch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::params::ModelDims;
    use rand::Rng;

    fn dims() -> ModelDims {
        ModelDims {
            vocab: 12,
            embed: 8,
            hidden: 12,
            max_len: 10,
        }
    }

    /// Label is the presence of marker id 2 in the reactant stream.
    fn marker_dataset(count: usize, seed: u64) -> Vec<EncodedReaction> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let positive = rng.gen_bool(0.5);
                let len = rng.gen_range(3..8);
                let mut reactant_ids: Vec<usize> =
                    (0..len).map(|_| rng.gen_range(3..12)).collect();
                if positive {
                    let at = rng.gen_range(0..reactant_ids.len());
                    reactant_ids[at] = 2;
                }
                EncodedReaction {
                    reactant_ids,
                    product_ids: (0..len).map(|_| rng.gen_range(3..12)).collect(),
                    rsd_ids: (0..len).map(|_| rng.gen_range(3..12)).collect(),
                    label: positive,
                }
            })
            .collect()
    }

    #[test]
    fn loss_descends_on_marker_task() {
        let data = marker_dataset(200, 1);
        let (train_half, dev_half) = data.split_at(160);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let init = ModelParams::<f32>::init(dims(), &mut rng);
        let cfg = TrainConfig {
            epochs: 10,
            batch_size: 32,
            ..TrainConfig::default()
        };
        let out = train(train_half, dev_half, init, &cfg).unwrap();
        assert_eq!(out.history.len(), 10);
        assert!(
            out.history[9].train_loss < out.history[0].train_loss,
            "loss should descend: {:?}",
            out.history
        );
    }

    #[test]
    fn fixed_seed_gives_bit_identical_history() {
        let data = marker_dataset(60, 2);
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 16,
            ..TrainConfig::default()
        };
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let init = ModelParams::<f32>::init(dims(), &mut rng);
            train(&data[..48], &data[48..], init, &cfg).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.history, b.history);
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn zero_learning_rate_keeps_params() {
        let data = marker_dataset(24, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let init = ModelParams::<f32>::init(dims(), &mut rng);
        let snapshot = init.clone();
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: 8,
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        let out = train(&data, &[], init, &cfg).unwrap();
        assert_eq!(out.params, snapshot);
    }
}
