//! `stability-probe`: perturbation growth of stacked layers.

use clap::Args as ClapArgs;
use serde::{Deserialize, Serialize};
use serde_json::json;

use fmp_core::fmp::{stability_probe, FmpParams};
use fmp_core::graph::SbmConfig;
use fmp_core::rng::Rng;

use crate::common::{
    build_operators, input_error, load_config, load_workspace, write_provenance, write_report,
    CliError, CliResult, CommonArgs, OperatorOptions,
};

#[derive(ClapArgs)]
pub struct Args {
    #[command(flatten)]
    common: CommonArgs,
    /// Graph directory (defaults to an internally generated graph).
    #[arg(long)]
    data: Option<String>,
    /// Number of stacked layers T.
    #[arg(long)]
    layers: Option<usize>,
    /// Frobenius scale of the input perturbation.
    #[arg(long)]
    perturb_scale: Option<f64>,
    /// Entry scale of the random mixing matrices.
    #[arg(long)]
    theta_scale: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    #[serde(flatten)]
    pub operators: OperatorOptions,
    pub data: Option<String>,
    pub sbm: SbmConfig,
    pub layers: usize,
    pub perturb_scale: f64,
    pub theta_scale: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            operators: OperatorOptions::default(),
            data: None,
            sbm: SbmConfig::default(),
            layers: 8,
            perturb_scale: 1e-3,
            theta_scale: 0.5,
        }
    }
}

pub fn run(args: Args) -> CliResult {
    let mut cfg: Config = load_config(args.common.config.as_deref(), "stability-probe")?;
    if let Some(seed) = args.common.seed {
        cfg.seed = seed;
    }
    cfg.operators.apply_flags(&args.common);
    if let Some(data) = args.data {
        cfg.data = Some(data);
    }
    if let Some(layers) = args.layers {
        cfg.layers = layers;
    }
    if let Some(scale) = args.perturb_scale {
        cfg.perturb_scale = scale;
    }
    if let Some(scale) = args.theta_scale {
        cfg.theta_scale = scale;
    }
    if !cfg.operators.is_exact()? {
        return Err(input_error(
            "stability-probe needs exact operators for the norm computations",
        ));
    }

    let mut workspace = load_workspace(cfg.data.as_deref(), cfg.seed, &cfg.sbm)?;
    let ops = build_operators(&mut workspace, &cfg.operators)?;

    let d = workspace.graph.features().cols();
    let mut rng = Rng::from_seed(cfg.seed ^ 0x5741_b117);
    let mut params = FmpParams::<f64>::zeros(ops.bank().high_pass_count(), d);
    let entry_scale = cfg.theta_scale / (d as f64).sqrt();
    for theta in params.iter_mut() {
        for v in theta.data_mut() {
            *v = rng.normal(0.0, entry_scale);
        }
    }

    let report = stability_probe(
        &ops,
        &params,
        workspace.graph.features(),
        cfg.perturb_scale,
        cfg.layers,
        cfg.seed ^ 0x9e37,
    )?;
    let holds = report.holds(1e-9);

    write_provenance(&args.common.out, "stability-probe", cfg.seed, &cfg)?;
    let value = json!({
        "bank": cfg.operators.bank,
        "levels": cfg.operators.levels,
        "layers": cfg.layers,
        "perturbScale": cfg.perturb_scale,
        "cConstant": report.c_constant,
        "c1Empirical": report.c_one_empirical,
        "lambdaMax": report.lambda_max,
        "thetaNorms": report.theta_norms,
        "perLayerRatios": report.per_layer_ratios,
        "bounds": report.bounds,
        "holds": holds,
    });
    write_report(&args.common.out.join("stability.json"), "stability", &value)?;
    println!(
        "stability-probe: C={:.6} layers={} holds={}",
        report.c_constant, cfg.layers, holds
    );
    if holds {
        Ok(())
    } else {
        Err(CliError::Assertion(
            "perturbation growth exceeded the layer-wise envelope".into(),
        ))
    }
}
