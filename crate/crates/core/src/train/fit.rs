//! Full-graph training loop with early stopping.

use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::io::Splits;
use crate::graph::{Graph, LaplacianBundle};
use crate::operators::FrameletOperatorSet;
use crate::rng::Rng;
use crate::scalar::{real, Float};

use super::{
    accuracy, backward, forward_loss, init_model, nll, optimizer_step, Architecture, ModelParams,
    OptState, Phase, TrainConfig,
};

/// One row of the training history.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    pub test_acc: f64,
}

/// Outcome of [`fit`]: the best-validation model and its bookkeeping.
#[derive(Clone, Debug)]
pub struct FitResult<T> {
    pub model: ModelParams<T>,
    pub history: Vec<EpochMetrics>,
    pub best_epoch: usize,
    pub best_val_acc: f64,
    /// Test accuracy at the best-validation checkpoint.
    pub test_acc: f64,
}

/// Seeded stratified split: per class, `train_frac` of the nodes go to
/// train and `val_frac` to validation, the remainder to test.
pub fn make_stratified_split(
    labels: &[usize],
    train_frac: f64,
    val_frac: f64,
    seed: u64,
) -> Splits {
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut rng = Rng::from_seed(seed);
    let mut splits = Splits::default();
    for class in 0..classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        rng.shuffle(&mut members);
        let n = members.len();
        let n_train = ((n as f64) * train_frac).round() as usize;
        let n_val = ((n as f64) * val_frac).round() as usize;
        for (pos, node) in members.into_iter().enumerate() {
            if pos < n_train {
                splits.train.push(node);
            } else if pos < n_train + n_val {
                splits.val.push(node);
            } else {
                splits.test.push(node);
            }
        }
    }
    splits.train.sort_unstable();
    splits.val.sort_unstable();
    splits.test.sort_unstable();
    splits
}

/// Train a model on one graph with early stopping on validation accuracy.
///
/// `ops` may be `None` only for the GCN architecture. The epoch cap is
/// clamped to 1000; patience counts epochs since the last validation
/// improvement. Deterministic for a fixed config.
pub fn fit<T: Float>(
    graph: &Graph<T>,
    bundle: &LaplacianBundle<T>,
    ops: Option<&FrameletOperatorSet<T>>,
    splits: &Splits,
    cfg: &TrainConfig,
) -> Result<FitResult<T>> {
    let labels = graph.labels().ok_or(Error::LabelsRequired)?;
    if splits.train.is_empty() || splits.val.is_empty() || splits.test.is_empty() {
        return Err(Error::InvalidArgument(
            "train, val, and test splits must all be non-empty".into(),
        ));
    }
    if matches!(cfg.arch, Architecture::FmpDiscrete | Architecture::FmpOde) && ops.is_none() {
        return Err(Error::InvalidArgument(
            "framelet operators required for this model".into(),
        ));
    }
    let classes = graph.class_count().unwrap_or(0);
    let high_pass_count = ops.map_or(0, |o| o.bank().high_pass_count());
    let mut rng = Rng::from_seed(cfg.seed);
    let mut model: ModelParams<T> =
        init_model(graph.features().cols(), classes, high_pass_count, cfg, &mut rng);
    let mut state = OptState::new(&model);
    let weight_decay = real::<T>(cfg.weight_decay);
    let lr = real::<T>(cfg.learning_rate);

    let epochs = cfg.epochs.min(1000).max(1);
    let mut history = Vec::with_capacity(epochs);
    let mut best = FitResult {
        model: model.clone(),
        history: Vec::new(),
        best_epoch: 0,
        best_val_acc: -1.0,
        test_acc: 0.0,
    };
    let mut best_val_loss = f64::INFINITY;

    for epoch in 0..epochs {
        let dropout_seed = cfg.seed ^ (epoch as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let (loss, grads) = backward(
            &model,
            graph,
            bundle,
            ops,
            &splits.train,
            weight_decay,
            Phase::Train { dropout_seed },
        )?;
        if !loss.is_finite() {
            return Err(Error::Diverged(epoch));
        }
        optimizer_step(&mut model, &grads, &mut state, cfg.optimizer, lr)?;

        let (_, logits) = forward_loss(
            &model,
            graph,
            bundle,
            ops,
            &splits.train,
            weight_decay,
            Phase::Eval,
        )?;
        let val_loss = nll(&logits, labels, &splits.val).to_f64_lossy();
        let val_acc = accuracy(&logits, labels, &splits.val);
        let test_acc = accuracy(&logits, labels, &splits.test);
        history.push(EpochMetrics {
            epoch,
            train_loss: loss.to_f64_lossy(),
            val_loss,
            val_acc,
            test_acc,
        });

        // Validation accuracy decides; ties go to the lower validation loss
        // so the checkpoint keeps improving after a small val set saturates.
        let improved =
            val_acc > best.best_val_acc || (val_acc == best.best_val_acc && val_loss < best_val_loss);
        if improved {
            best.best_val_acc = val_acc;
            best_val_loss = val_loss;
            best.best_epoch = epoch;
            best.model = model.clone();
            best.test_acc = test_acc;
        } else if epoch - best.best_epoch >= cfg.patience {
            break;
        }
    }

    best.history = history;
    Ok(best)
}

/// Write the per-epoch history as `epoch,trainLoss,valAcc,testAcc`.
pub fn write_metrics_csv(path: &Path, history: &[EpochMetrics]) -> Result<()> {
    let mut text = String::from("epoch,trainLoss,valAcc,testAcc\n");
    for row in history {
        text.push_str(&format!(
            "{},{},{},{}\n",
            row.epoch, row.train_loss, row.val_acc, row.test_acc
        ));
    }
    std::fs::write(path, text)?;
    Ok(())
}
