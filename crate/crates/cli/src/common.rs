//! Shared plumbing: flag resolution, dataset loading, operator construction,
//! provenance records, and deterministic output writing.

use std::path::{Path, PathBuf};

use clap::Args as ClapArgs;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use fmp_core::graph::io::{load_graph_dir, Splits};
use fmp_core::graph::{build_laplacian_bundle, generate_sbm, SbmConfig};
use fmp_core::operators::{build_approx_operators, build_exact_operators};
use fmp_core::spectral::{eig_symmetric, haar_bank, nu_bank};
use fmp_core::train::make_stratified_split;
use fmp_core::{Error, FilterBank64, FrameletOperatorSet64, Graph64, LaplacianBundle64};

/// Classified command failure; decides the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// A checked bound or determinism property failed (exit 1).
    Assertion(String),
    /// Bad input: flags, files, or an unusable mode (exit 2).
    Input(String),
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        match err {
            Error::BoundViolated(m) => CliError::Assertion(m),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Input(err.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::Input(err.to_string())
    }
}

pub type CliResult = Result<(), CliError>;

pub fn input_error(message: impl Into<String>) -> CliError {
    CliError::Input(message.into())
}

/// Flags shared by every subcommand. All values are optional so that a
/// config file can supply them; explicit flags win.
#[derive(ClapArgs, Clone, Debug)]
pub struct CommonArgs {
    /// Base random seed.
    #[arg(long, global = false)]
    pub seed: Option<u64>,
    /// Operator construction: "exact" or "cheb".
    #[arg(long)]
    pub mode: Option<String>,
    /// Chebyshev degree per factor (cheb mode).
    #[arg(long)]
    pub degree: Option<usize>,
    /// Filter bank: "haar" or "nu".
    #[arg(long)]
    pub bank: Option<String>,
    /// Framelet level count J.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// JSON config file: either a bare command config or a run.json record.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Operator-family options shared by the spectral commands.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct OperatorOptions {
    pub bank: String,
    pub levels: usize,
    pub mode: String,
    pub degree: usize,
}

impl Default for OperatorOptions {
    fn default() -> Self {
        Self {
            bank: "haar".into(),
            levels: 2,
            mode: "exact".into(),
            degree: 16,
        }
    }
}

impl OperatorOptions {
    pub fn apply_flags(&mut self, common: &CommonArgs) {
        if let Some(bank) = &common.bank {
            self.bank = bank.clone();
        }
        if let Some(levels) = common.levels {
            self.levels = levels;
        }
        if let Some(mode) = &common.mode {
            self.mode = mode.clone();
        }
        if let Some(degree) = common.degree {
            self.degree = degree;
        }
    }

    pub fn bank(&self) -> Result<FilterBank64, CliError> {
        match self.bank.as_str() {
            "haar" => Ok(haar_bank()),
            "nu" => Ok(nu_bank()),
            other => Err(input_error(format!(
                "unknown bank {other:?}; expected \"haar\" or \"nu\""
            ))),
        }
    }

    pub fn is_exact(&self) -> Result<bool, CliError> {
        match self.mode.as_str() {
            "exact" => Ok(true),
            "cheb" => Ok(false),
            other => Err(input_error(format!(
                "unknown mode {other:?}; expected \"exact\" or \"cheb\""
            ))),
        }
    }
}

/// A graph plus its Laplacian bundle and (for exact mode) the spectrum.
pub struct Workspace {
    pub graph: Graph64,
    pub bundle: LaplacianBundle64,
    pub splits: Option<Splits>,
}

/// Load `--data DIR` or synthesize the default two-class graph.
pub fn load_workspace(data: Option<&str>, seed: u64, sbm: &SbmConfig) -> Result<Workspace, CliError> {
    let (graph, splits) = match data {
        Some(dir) => load_graph_dir::<f64>(Path::new(dir)).map_err(CliError::from)?,
        None => {
            let graph = generate_sbm::<f64>(seed, sbm).map_err(CliError::from)?;
            let splits = graph
                .labels()
                .map(|labels| make_stratified_split(labels, 0.6, 0.2, seed));
            (graph, splits)
        }
    };
    let bundle = build_laplacian_bundle(&graph).map_err(CliError::from)?;
    Ok(Workspace { graph, bundle, splits })
}

/// Build the operator family per the options; exact mode refines the
/// bundle's spectral bound with the exact top eigenvalue.
pub fn build_operators(
    workspace: &mut Workspace,
    options: &OperatorOptions,
) -> Result<FrameletOperatorSet64, CliError> {
    let bank = options.bank()?;
    if options.is_exact()? {
        let dec = eig_symmetric(&workspace.bundle.norm_laplacian().to_dense())
            .map_err(CliError::from)?;
        workspace.bundle.set_lambda_max(dec.lambda_max());
        build_exact_operators(&dec, bank, options.levels).map_err(CliError::from)
    } else {
        build_approx_operators(&workspace.bundle, bank, options.levels, options.degree)
            .map_err(CliError::from)
    }
}

/// Provenance record written alongside every command's outputs.
#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct RunRecord<C> {
    command: String,
    seed: u64,
    config: C,
    config_hash: String,
    version: String,
}

/// FNV-1a over the canonical (compact) JSON encoding.
pub fn config_hash<C: Serialize>(config: &C) -> String {
    let canonical = serde_json::to_string(config).expect("config serializes");
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in canonical.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

/// Load the command config from `--config`, accepting either a bare config
/// object or a full run.json provenance record for `command`.
pub fn load_config<C: DeserializeOwned + Default>(
    config_path: Option<&Path>,
    command: &str,
) -> Result<C, CliError> {
    let Some(path) = config_path else {
        return Ok(C::default());
    };
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let config_value = match (value.get("command"), value.get("config")) {
        (Some(cmd), Some(cfg)) => {
            let recorded = cmd.as_str().unwrap_or_default();
            if recorded != command {
                return Err(input_error(format!(
                    "config file records command {recorded:?}, expected {command:?}"
                )));
            }
            cfg.clone()
        }
        _ => value,
    };
    serde_json::from_value(config_value).map_err(CliError::from)
}

/// Write `run.json` and return the prepared output directory.
pub fn write_provenance<C: Serialize>(
    out: &Path,
    command: &str,
    seed: u64,
    config: &C,
) -> Result<(), CliError> {
    std::fs::create_dir_all(out)?;
    let record = RunRecord {
        command: command.to_string(),
        seed,
        config,
        config_hash: config_hash(config),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let value = serde_json::to_value(&record)?;
    crate::schema::validate("run", &value).map_err(CliError::Assertion)?;
    write_json(&out.join("run.json"), &value)
}

/// Serialize pretty JSON with a trailing newline; stable field order, no
/// maps, no timestamps, so identical runs produce identical bytes.
pub fn write_json(path: &Path, value: &serde_json::Value) -> CliResult {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Validate against an embedded schema, then write.
pub fn write_report(path: &Path, schema_name: &str, value: &serde_json::Value) -> CliResult {
    crate::schema::validate(schema_name, value).map_err(CliError::Assertion)?;
    write_json(path, value)
}
