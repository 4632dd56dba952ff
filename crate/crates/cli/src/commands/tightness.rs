//! `tightness-report`: frame bounds and reconstruction diagnostics.

use clap::Args as ClapArgs;
use serde::{Deserialize, Serialize};
use serde_json::json;

use fmp_core::graph::SbmConfig;
use fmp_core::operators::tightness_report;

use crate::common::{
    build_operators, input_error, load_config, load_workspace, write_provenance, write_report,
    CliResult, CommonArgs, OperatorOptions,
};

#[derive(ClapArgs)]
pub struct Args {
    #[command(flatten)]
    common: CommonArgs,
    /// Graph directory (defaults to an internally generated graph).
    #[arg(long)]
    data: Option<String>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    #[serde(flatten)]
    pub operators: OperatorOptions,
    pub data: Option<String>,
    pub sbm: SbmConfig,
}

pub fn run(args: Args) -> CliResult {
    let mut cfg: Config = load_config(args.common.config.as_deref(), "tightness-report")?;
    if let Some(seed) = args.common.seed {
        cfg.seed = seed;
    }
    cfg.operators.apply_flags(&args.common);
    if let Some(data) = args.data {
        cfg.data = Some(data);
    }
    if !cfg.operators.is_exact()? {
        return Err(input_error("tightness-report requires exact operators"));
    }

    let mut workspace = load_workspace(cfg.data.as_deref(), cfg.seed, &cfg.sbm)?;
    let ops = build_operators(&mut workspace, &cfg.operators)?;
    let report = tightness_report(&ops)?;

    write_provenance(&args.common.out, "tightness-report", cfg.seed, &cfg)?;
    let value = json!({
        "bank": report.bank,
        "J": report.levels,
        "R": report.dilation,
        "A": report.frame_lower,
        "B": report.frame_upper,
        "reconstructionError": report.reconstruction_error,
        "deficitBound": report.deficit_bound,
        "perLevelNorms": report.per_level_norms,
        "parsevalResidual": report.parseval_residual,
        "convention": report.convention,
    });
    write_report(&args.common.out.join("tightness.json"), "tightness", &value)?;
    println!(
        "tightness-report: bank={} J={} A={:.12} B={:.12} reconstruction={:.3e}",
        report.bank, report.levels, report.frame_lower, report.frame_upper,
        report.reconstruction_error
    );
    Ok(())
}
