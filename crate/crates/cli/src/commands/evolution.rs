//! `energy-evolution`: Dirichlet energy of a deep GCN with contractive
//! weights versus the continuous framelet model with PSD mixing matrices,
//! both driven for 50 layers / time units on the synthetic graph.

use std::path::Path;

use clap::Args as ClapArgs;
use serde::{Deserialize, Serialize};

use fmp_core::fmp::{fmp_ode_rhs, gcn_forward, FmpParams};
use fmp_core::graph::{dirichlet_energy, SbmConfig};
use fmp_core::linalg::DenseMatrix;
use fmp_core::ode::{integrate, OdeConfig, OdeMethod};
use fmp_core::rng::Rng;

use crate::common::{
    build_operators, input_error, load_config, load_workspace, write_provenance, CliResult,
    CommonArgs, OperatorOptions,
};

#[derive(ClapArgs)]
pub struct Args {
    #[command(flatten)]
    common: CommonArgs,
    /// Propagation depth (layers for the GCN, time units for the ODE).
    #[arg(long)]
    layers: Option<usize>,
    /// Spectral norm the random GCN weights are scaled to.
    #[arg(long)]
    gcn_spectral_norm: Option<f64>,
    /// Trace ceiling of the random PSD mixing matrices.
    #[arg(long)]
    trace_bound: Option<f64>,
    /// Relative tolerance of the adaptive integrator.
    #[arg(long)]
    ode_rtol: Option<f64>,
    /// Absolute tolerance of the adaptive integrator.
    #[arg(long)]
    ode_atol: Option<f64>,
    /// Integrator: "dopri5" or "rk4".
    #[arg(long)]
    ode_method: Option<String>,
    /// Fixed steps per time unit in rk4 mode.
    #[arg(long)]
    ode_steps: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    #[serde(flatten)]
    pub operators: OperatorOptions,
    pub sbm: SbmConfig,
    pub layers: usize,
    pub gcn_spectral_norm: f64,
    pub trace_bound: f64,
    pub ode_rtol: f64,
    pub ode_atol: f64,
    pub ode_method: String,
    pub ode_steps: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            operators: OperatorOptions::default(),
            sbm: SbmConfig::default(),
            layers: 50,
            gcn_spectral_norm: 0.9,
            trace_bound: 1.0,
            ode_rtol: 1e-5,
            ode_atol: 1e-7,
            ode_method: "dopri5".into(),
            ode_steps: 8,
        }
    }
}

fn write_energy_csv(path: &Path, energies: &[f64]) -> CliResult {
    let mut text = String::from("layer,energy\n");
    for (layer, e) in energies.iter().enumerate() {
        text.push_str(&format!("{layer},{e}\n"));
    }
    std::fs::write(path, text)?;
    Ok(())
}

pub fn run(args: Args) -> CliResult {
    let mut cfg: Config = load_config(args.common.config.as_deref(), "energy-evolution")?;
    if let Some(seed) = args.common.seed {
        cfg.seed = seed;
    }
    cfg.operators.apply_flags(&args.common);
    if let Some(layers) = args.layers {
        cfg.layers = layers;
    }
    if let Some(v) = args.gcn_spectral_norm {
        cfg.gcn_spectral_norm = v;
    }
    if let Some(v) = args.trace_bound {
        cfg.trace_bound = v;
    }
    if let Some(v) = args.ode_rtol {
        cfg.ode_rtol = v;
    }
    if let Some(v) = args.ode_atol {
        cfg.ode_atol = v;
    }
    if let Some(v) = args.ode_method {
        cfg.ode_method = v;
    }
    if let Some(v) = args.ode_steps {
        cfg.ode_steps = v;
    }
    if !cfg.operators.is_exact()? {
        return Err(input_error("energy-evolution requires exact operators"));
    }

    let mut workspace = load_workspace(None, cfg.seed, &cfg.sbm)?;
    let ops = build_operators(&mut workspace, &cfg.operators)?;
    let d = workspace.graph.features().cols();

    // GCN curve: fresh random weights per layer, spectral norm pinned so the
    // per-layer contraction factor (mu lambda)^2 stays below one.
    let mut rng = Rng::from_seed(cfg.seed ^ 0x6c4e);
    let mut gcn_energy = Vec::with_capacity(cfg.layers + 1);
    let mut x = workspace.graph.features().clone();
    gcn_energy.push(dirichlet_energy(&workspace.bundle, &x)?);
    for _ in 0..cfg.layers {
        let mut w = DenseMatrix::<f64>::zeros(d, d);
        for v in w.data_mut() {
            *v = rng.normal(0.0, 1.0);
        }
        let norm = w.spectral_norm();
        if norm > 0.0 {
            w = w.scale(cfg.gcn_spectral_norm / norm);
        }
        x = gcn_forward(&workspace.bundle, &w, &x)?;
        gcn_energy.push(dirichlet_energy(&workspace.bundle, &x)?);
    }

    // Continuous curve: one PSD parameter set, integrated unit interval by
    // unit interval so the energy is sampled at integer times.
    let mut params = FmpParams::<f64>::zeros(ops.bank().high_pass_count(), d);
    for theta in params.iter_mut() {
        for v in theta.data_mut() {
            *v = rng.normal(0.0, 1.0);
        }
    }
    params.trace_bound = Some(cfg.trace_bound);
    params.psd_project = true;
    params.project_psd()?;

    let mut fmp_energy = Vec::with_capacity(cfg.layers + 1);
    let mut state = workspace.graph.features().clone();
    fmp_energy.push(dirichlet_energy(&workspace.bundle, &state)?);
    let method = match cfg.ode_method.as_str() {
        "dopri5" => OdeMethod::Dopri5,
        "rk4" => OdeMethod::Rk4 { h: 1.0 / cfg.ode_steps.max(1) as f64 },
        other => return Err(input_error(format!("unknown ode method {other:?}"))),
    };
    for _ in 0..cfg.layers {
        let mut ode_cfg = OdeConfig::dopri5(0.0, 1.0);
        ode_cfg.rtol = cfg.ode_rtol;
        ode_cfg.atol = cfg.ode_atol;
        ode_cfg.method = method;
        let trajectory = integrate(
            |y| fmp_ode_rhs(&ops, &params, y).expect("dimensions fixed"),
            &state,
            &ode_cfg,
        )
        .map_err(fmp_core::Error::from)?;
        state = trajectory.final_state;
        fmp_energy.push(dirichlet_energy(&workspace.bundle, &state)?);
    }

    write_provenance(&args.common.out, "energy-evolution", cfg.seed, &cfg)?;
    write_energy_csv(&args.common.out.join("energy_gcn.csv"), &gcn_energy)?;
    write_energy_csv(&args.common.out.join("energy_fmp.csv"), &fmp_energy)?;
    println!(
        "energy-evolution: gcn {:.3e} -> {:.3e}, fmp {:.3e} -> {:.3e} over {} layers",
        gcn_energy[0],
        gcn_energy.last().unwrap(),
        fmp_energy[0],
        fmp_energy.last().unwrap(),
        cfg.layers
    );
    Ok(())
}
