//! `energy-sandwich`: trace-bound energy growth of one no-activation layer.

use clap::Args as ClapArgs;
use serde::{Deserialize, Serialize};
use serde_json::json;

use fmp_core::fmp::{energy_sandwich_check, FmpParams};
use fmp_core::graph::{build_laplacian_bundle, generate_sbm, SbmConfig};
use fmp_core::linalg::DenseMatrix;
use fmp_core::operators::build_exact_operators;
use fmp_core::rng::Rng;
use fmp_core::spectral::eig_symmetric;
use fmp_core::Error;

use crate::common::{
    input_error, load_config, load_workspace, write_provenance, write_report, CliError, CliResult,
    CommonArgs, OperatorOptions,
};

#[derive(ClapArgs)]
pub struct Args {
    #[command(flatten)]
    common: CommonArgs,
    /// Graph directory; when absent each trial draws a fresh random graph.
    #[arg(long)]
    data: Option<String>,
    /// Number of random trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Trace ceiling M of the PSD mixing matrices.
    #[arg(long)]
    trace_bound: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    #[serde(flatten)]
    pub operators: OperatorOptions,
    pub data: Option<String>,
    pub trials: usize,
    pub trace_bound: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            operators: OperatorOptions::default(),
            data: None,
            trials: 100,
            trace_bound: 1.0,
        }
    }
}

pub fn run(args: Args) -> CliResult {
    let mut cfg: Config = load_config(args.common.config.as_deref(), "energy-sandwich")?;
    if let Some(seed) = args.common.seed {
        cfg.seed = seed;
    }
    cfg.operators.apply_flags(&args.common);
    if let Some(data) = args.data {
        cfg.data = Some(data);
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if let Some(m) = args.trace_bound {
        cfg.trace_bound = m;
    }
    if cfg.trials == 0 {
        return Err(input_error("trials must be positive"));
    }
    if !cfg.operators.is_exact()? {
        return Err(input_error("energy-sandwich requires exact operators"));
    }
    let bank = cfg.operators.bank()?;

    let fixed = match cfg.data.as_deref() {
        Some(dir) => Some(load_workspace(Some(dir), cfg.seed, &SbmConfig::default())?),
        None => None,
    };

    let mut violations = 0usize;
    let mut sample = None;
    let d = 3usize;
    for trial in 0..cfg.trials {
        let trial_seed = cfg.seed.wrapping_add(trial as u64);
        let (graph, mut bundle);
        match &fixed {
            Some(ws) => {
                graph = ws.graph.clone();
                bundle = ws.bundle.clone();
            }
            None => {
                // Fresh small random graph per trial, n in {10, 20, 30, 40}.
                let n = 10 + (trial % 4) * 10;
                let sbm = SbmConfig { n, ..SbmConfig::default() };
                graph = generate_sbm::<f64>(trial_seed, &sbm).map_err(CliError::from)?;
                bundle = build_laplacian_bundle(&graph).map_err(CliError::from)?;
            }
        }
        let dec = eig_symmetric(&bundle.norm_laplacian().to_dense()).map_err(CliError::from)?;
        bundle.set_lambda_max(dec.lambda_max());
        let ops = build_exact_operators(&dec, bank.clone(), cfg.operators.levels)
            .map_err(CliError::from)?;

        let mut rng = Rng::from_seed(trial_seed ^ 0xe4e6);
        let mut params = FmpParams::<f64>::zeros(bank.high_pass_count(), d);
        for theta in params.iter_mut() {
            for v in theta.data_mut() {
                *v = rng.normal(0.0, 1.0);
            }
        }
        params.trace_bound = Some(cfg.trace_bound);
        params.psd_project = true;
        params.project_psd().map_err(CliError::from)?;

        let mut x = DenseMatrix::<f64>::zeros(graph.node_count(), d);
        for v in x.data_mut() {
            *v = rng.normal(0.0, 1.0);
        }

        match energy_sandwich_check(&bundle, &ops, &params, &x) {
            Ok(triple) => {
                if sample.is_none() {
                    sample = Some(triple);
                }
            }
            Err(Error::BoundViolated(_)) => violations += 1,
            Err(other) => return Err(CliError::from(other)),
        }
    }

    let holds = violations == 0;
    write_provenance(&args.common.out, "energy-sandwich", cfg.seed, &cfg)?;
    let (lower, observed, upper) = sample.unwrap_or((0.0, 0.0, 0.0));
    let value = json!({
        "trials": cfg.trials,
        "violations": violations,
        "traceBound": cfg.trace_bound,
        "sample": { "lower": lower, "observed": observed, "upper": upper },
        "holds": holds,
    });
    write_report(&args.common.out.join("sandwich.json"), "sandwich", &value)?;
    println!(
        "energy-sandwich: {} trials, {} violations",
        cfg.trials, violations
    );
    if holds {
        Ok(())
    } else {
        Err(CliError::Assertion(format!(
            "{violations} of {} sandwich trials violated the bound",
            cfg.trials
        )))
    }
}
