//! `sweep`: seeded random search over the hyperparameter space.
//!
//! Per trial the sampler draws learning rate and weight decay log-uniform
//! from [1e-3, 1e-2] and [1e-3, 1e-1], dropout uniform from [0, 0.8], hidden
//! width from {64, 128, 256}, layer count uniform from [1, 10], and the
//! optimizer from {adam, adamax}.

use clap::Args as ClapArgs;
use serde::{Deserialize, Serialize};
use serde_json::json;

use fmp_core::graph::SbmConfig;
use fmp_core::rng::Rng;
use fmp_core::train::{fit, Architecture, Optimizer, TrainConfig};

use crate::common::{
    build_operators, input_error, load_config, load_workspace, write_provenance, write_report,
    CliResult, CommonArgs, OperatorOptions,
};

use super::classify::{model_name, parse_model};

#[derive(ClapArgs)]
pub struct Args {
    #[command(flatten)]
    common: CommonArgs,
    /// Graph directory with explicit split files.
    #[arg(long)]
    data: Option<String>,
    /// Model under search: "fmp-mlp", "fmp-ode", or "gcn".
    #[arg(long)]
    model: Option<String>,
    /// Number of sampled configurations.
    #[arg(long)]
    budget: Option<usize>,
    /// Epoch cap per trial.
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    #[serde(flatten)]
    pub operators: OperatorOptions,
    pub data: Option<String>,
    pub sbm: SbmConfig,
    pub budget: usize,
    pub train: TrainConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            operators: OperatorOptions::default(),
            data: None,
            sbm: SbmConfig::default(),
            budget: 20,
            train: TrainConfig {
                arch: Architecture::FmpDiscrete,
                epochs: 150,
                ..TrainConfig::default()
            },
        }
    }
}

pub fn run(args: Args) -> CliResult {
    let mut cfg: Config = load_config(args.common.config.as_deref(), "sweep")?;
    if let Some(seed) = args.common.seed {
        cfg.seed = seed;
    }
    cfg.operators.apply_flags(&args.common);
    if let Some(data) = &args.data {
        cfg.data = Some(data.clone());
    }
    if let Some(model) = &args.model {
        cfg.train.arch = parse_model(model)?;
    }
    if let Some(budget) = args.budget {
        cfg.budget = budget;
    }
    if let Some(epochs) = args.epochs {
        cfg.train.epochs = epochs;
    }
    if let Some(patience) = args.patience {
        cfg.train.patience = patience;
    }
    cfg.train.seed = cfg.seed;
    if cfg.budget == 0 {
        return Err(input_error("budget must be positive"));
    }

    let mut workspace = load_workspace(cfg.data.as_deref(), cfg.seed, &cfg.sbm)?;
    let splits = workspace
        .splits
        .clone()
        .ok_or_else(|| input_error("dataset provides no splits.json"))?;
    let needs_ops = cfg.train.arch != Architecture::Gcn;
    let ops = if needs_ops {
        Some(build_operators(&mut workspace, &cfg.operators)?)
    } else {
        None
    };

    let base_rng = Rng::from_seed(cfg.seed ^ 0x5eeb);
    let mut trials = Vec::with_capacity(cfg.budget);
    let mut best_trial = 0usize;
    let mut best_val = -1.0f64;
    for trial in 0..cfg.budget {
        let mut rng = base_rng.derive(trial as u64);
        let mut train_cfg = cfg.train.clone();
        train_cfg.learning_rate = rng.log_uniform_f64(1e-3, 1e-2);
        train_cfg.weight_decay = rng.log_uniform_f64(1e-3, 1e-1);
        train_cfg.dropout = rng.uniform_in(0.0, 0.8);
        train_cfg.hidden_dim = [64, 128, 256][rng.index(3)];
        train_cfg.layers = 1 + rng.index(10);
        train_cfg.optimizer = if rng.bernoulli(0.5) {
            Optimizer::Adam
        } else {
            Optimizer::Adamax
        };
        train_cfg.seed = cfg.seed.wrapping_add(trial as u64);

        let result = fit(
            &workspace.graph,
            &workspace.bundle,
            ops.as_ref(),
            &splits,
            &train_cfg,
        )?;
        if result.best_val_acc > best_val {
            best_val = result.best_val_acc;
            best_trial = trial;
        }
        trials.push(json!({
            "trial": trial,
            "learningRate": train_cfg.learning_rate,
            "weightDecay": train_cfg.weight_decay,
            "dropout": train_cfg.dropout,
            "hiddenDim": train_cfg.hidden_dim,
            "layers": train_cfg.layers,
            "optimizer": match train_cfg.optimizer {
                Optimizer::Adam => "adam",
                Optimizer::Adamax => "adamax",
            },
            "valAcc": result.best_val_acc,
            "testAcc": result.test_acc,
        }));
    }

    write_provenance(&args.common.out, "sweep", cfg.seed, &cfg)?;
    let value = json!({
        "budget": cfg.budget,
        "trials": trials,
        "best": best_trial,
    });
    write_report(&args.common.out.join("sweep.json"), "sweep", &value)?;
    println!(
        "sweep: {} {} trials, best trial {} (val {:.4})",
        cfg.budget,
        model_name(cfg.train.arch),
        best_trial,
        best_val
    );
    Ok(())
}
