use std::path::{Path, PathBuf};

use bicm_core::{
    snr_grid, Constellation, ConstellationFile, Labeling, LabelingSpec, QuadratureConfig, RateKind,
};
use clap::{Args, Parser, Subcommand};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "bicm-rates",
    version,
    about = "BICM achievable rates with exact and max-log L-values"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate rates over an SNR grid as CSV.
    Rates(RatesArgs),
    /// Horizontal dB loss between two rate curves, as CSV and SVG.
    Loss(LossArgs),
    /// Report which bit positions lose information under max-log.
    Classify(SetupArgs),
}

#[derive(Debug, Args)]
pub struct SetupArgs {
    /// `pam:m` for equally spaced 2^m-PAM, or a JSON file
    /// `{"points": [..], "m": int, "labeling": ..}`.
    #[arg(long)]
    pub constellation: String,

    /// `brgc`, `nbc`, inline JSON rows such as `[[0,0,1,1],[0,1,1,0]]`, or a
    /// JSON file with either. Defaults to the constellation file's labeling,
    /// then to `brgc`.
    #[arg(long)]
    pub labeling: Option<String>,
}

#[derive(Debug, Args)]
pub struct QuadArgs {
    /// Quadrature nodes per constellation point.
    #[arg(long, value_name = "N")]
    pub quad_nodes: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RatesArgs {
    #[command(flatten)]
    pub setup: SetupArgs,

    /// Comma-separated rate kinds, or `all`.
    #[arg(long)]
    pub kinds: String,

    /// SNR grid `start:stop:step` in dB, stop included.
    #[arg(long, allow_hyphen_values = true)]
    pub snr: String,

    /// Output CSV (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[command(flatten)]
    pub quad: QuadArgs,

    /// Seed for `--mc-check`.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Cross-check every row against a Monte Carlo estimate with this many samples.
    #[arg(long, value_name = "SAMPLES")]
    pub mc_check: Option<u64>,
}

#[derive(Debug, Args)]
pub struct LossArgs {
    #[command(flatten)]
    pub setup: SetupArgs,

    /// The degraded rate kind.
    #[arg(long)]
    pub kinds: String,

    /// Reference rate kind; defaults to the exact-L-value MI at the same level.
    #[arg(long)]
    pub reference: Option<String>,

    /// Bit position (1-based) for bit-level kinds.
    #[arg(long, default_value_t = 1)]
    pub row: usize,

    /// Target rates: a comma-separated list or `start:stop:step`.
    #[arg(long)]
    pub targets: String,

    /// SNR grid the curves are sampled on.
    #[arg(long, allow_hyphen_values = true, default_value = "-20:30:0.25")]
    pub snr: String,

    /// Output CSV (stdout when absent). The plot goes next to it with an
    /// `.svg` extension.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// SVG path, overriding the one derived from `--out`.
    #[arg(long)]
    pub svg: Option<PathBuf>,

    #[command(flatten)]
    pub quad: QuadArgs,
}

/// Constellation and labeling resolved from the command line.
#[derive(Debug, Clone)]
pub struct Setup {
    pub constellation: Constellation,
    pub labeling: Labeling,
    pub labeling_name: String,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn read_json(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

impl SetupArgs {
    pub fn resolve(&self) -> CliResult<Setup> {
        let (constellation, file_labeling) =
            if let Some(m) = self.constellation.strip_prefix("pam:") {
                let bits: u32 = m.trim().parse().map_err(|_| {
                    config_err(format!("bad constellation `{}`", self.constellation))
                })?;
                (Constellation::equally_spaced(bits)?, None)
            } else {
                let text = if self.constellation.trim_start().starts_with('{') {
                    self.constellation.clone()
                } else {
                    read_json(Path::new(&self.constellation))?
                };
                let file = ConstellationFile::from_json(&text)?;
                (file.constellation()?, file.labeling()?)
            };
        let bits = constellation.bits();
        let (labeling, labeling_name) = match (&self.labeling, file_labeling) {
            (Some(arg), _) => parse_labeling(arg, bits)?,
            (None, Some(lab)) => (lab, "custom".to_string()),
            (None, None) => (Labeling::brgc(bits)?, "brgc".to_string()),
        };
        labeling.check_compatible(&constellation)?;
        Ok(Setup {
            constellation,
            labeling,
            labeling_name,
        })
    }
}

fn parse_labeling(arg: &str, bits: u32) -> CliResult<(Labeling, String)> {
    let lower = arg.trim().to_ascii_lowercase();
    if matches!(lower.as_str(), "brgc" | "gray" | "nbc" | "natural") {
        let lab = LabelingSpec::Named(lower.clone()).build(bits)?;
        let name = if lower == "gray" || lower == "brgc" {
            "brgc"
        } else {
            "nbc"
        };
        return Ok((lab, name.to_string()));
    }
    let text = if arg.trim_start().starts_with('[') {
        arg.to_string()
    } else {
        read_json(Path::new(arg))?
    };
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| config_err(format!("malformed labeling JSON: {e}")))?;
    // Either a bare labeling or a constellation file carrying one.
    let spec_value = match value {
        serde_json::Value::Object(mut map) => map
            .remove("labeling")
            .ok_or_else(|| config_err("labeling JSON object has no `labeling` field"))?,
        other => other,
    };
    let spec: LabelingSpec = serde_json::from_value(spec_value)
        .map_err(|e| config_err(format!("malformed labeling JSON: {e}")))?;
    let name = match &spec {
        LabelingSpec::Named(n) => n.to_ascii_lowercase(),
        LabelingSpec::Rows(_) => "custom".to_string(),
    };
    Ok((spec.build(bits)?, name))
}

pub fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(config_err(format!(
            "SNR grid `{text}` is not start:stop:step"
        )));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| config_err(format!("bad number `{s}` in `{text}`")))
    };
    Ok(snr_grid(num(start)?, num(stop)?, num(step)?)?)
}

pub fn parse_targets(text: &str) -> CliResult<Vec<f64>> {
    if text.contains(':') {
        return parse_grid(text);
    }
    let targets = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| config_err(format!("bad target rate `{s}`")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    if targets.is_empty() {
        return Err(config_err("no target rates"));
    }
    Ok(targets)
}

pub fn parse_kinds(text: &str) -> CliResult<Vec<RateKind>> {
    if text.trim().eq_ignore_ascii_case("all") {
        return Ok(RateKind::ALL.to_vec());
    }
    let mut kinds = Vec::new();
    for name in text.split(',').filter(|s| !s.trim().is_empty()) {
        let kind: RateKind = name.parse()?;
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    if kinds.is_empty() {
        return Err(config_err("no rate kinds selected"));
    }
    Ok(kinds)
}

impl QuadArgs {
    pub fn config(&self) -> CliResult<QuadratureConfig> {
        Ok(match self.quad_nodes {
            Some(n) => QuadratureConfig::with_nodes(n)?,
            None => QuadratureConfig::default(),
        })
    }
}

/// Caps the global thread pool from `BICM_RATES_THREADS`.
pub fn init_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("BICM_RATES_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            config_err(format!(
                "BICM_RATES_THREADS must be a positive integer, got `{value}`"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| config_err(format!("thread pool: {e}")))
}
