//! `gen-sbm`: write the synthetic two-class graph file set.

use clap::Args as ClapArgs;
use serde::{Deserialize, Serialize};

use fmp_core::graph::io::save_graph_dir;
use fmp_core::graph::{generate_sbm, SbmConfig};
use fmp_core::train::make_stratified_split;

use crate::common::{load_config, write_provenance, CliResult, CommonArgs};

#[derive(ClapArgs)]
pub struct Args {
    #[command(flatten)]
    common: CommonArgs,
    /// Node count (even; split into two equal classes).
    #[arg(long)]
    n: Option<usize>,
    /// Intra-class edge probability.
    #[arg(long)]
    p_in: Option<f64>,
    /// Inter-class edge probability.
    #[arg(long)]
    p_out: Option<f64>,
    /// Feature mean magnitude (class means are -mu and +mu).
    #[arg(long)]
    mu: Option<f64>,
    /// Feature standard deviation.
    #[arg(long)]
    sigma: Option<f64>,
    /// Train fraction of the stratified split.
    #[arg(long)]
    train_frac: Option<f64>,
    /// Validation fraction of the stratified split.
    #[arg(long)]
    val_frac: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    #[serde(flatten)]
    pub sbm: SbmConfig,
    pub train_frac: f64,
    pub val_frac: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            sbm: SbmConfig::default(),
            train_frac: 0.6,
            val_frac: 0.2,
        }
    }
}

pub fn run(args: Args) -> CliResult {
    let mut cfg: Config = load_config(args.common.config.as_deref(), "gen-sbm")?;
    if let Some(seed) = args.common.seed {
        cfg.seed = seed;
    }
    if let Some(n) = args.n {
        cfg.sbm.n = n;
    }
    if let Some(p) = args.p_in {
        cfg.sbm.p_in = p;
    }
    if let Some(p) = args.p_out {
        cfg.sbm.p_out = p;
    }
    if let Some(mu) = args.mu {
        cfg.sbm.mu = mu;
    }
    if let Some(sigma) = args.sigma {
        cfg.sbm.sigma = sigma;
    }
    if let Some(f) = args.train_frac {
        cfg.train_frac = f;
    }
    if let Some(f) = args.val_frac {
        cfg.val_frac = f;
    }

    let graph = generate_sbm::<f64>(cfg.seed, &cfg.sbm)?;
    let splits = make_stratified_split(
        graph.labels().expect("generator labels every node"),
        cfg.train_frac,
        cfg.val_frac,
        cfg.seed,
    );
    write_provenance(&args.common.out, "gen-sbm", cfg.seed, &cfg)?;
    save_graph_dir(&args.common.out, &graph, Some(&splits))?;
    println!(
        "gen-sbm: wrote {} nodes, {} edges to {}",
        graph.node_count(),
        graph.edges().len(),
        args.common.out.display()
    );
    Ok(())
}
