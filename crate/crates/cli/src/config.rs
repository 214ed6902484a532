//! Run configuration: command-line flags layered over an optional JSON file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Every option a subcommand may read. The JSON config file uses the same
/// keys; flags given on the command line take precedence.
#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Instance JSON file; `bench` accepts the flag more than once.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub instance: Vec<PathBuf>,
    /// proposed, holscherer, both, block_diag or scalar_lasserre.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    /// Relaxation order `R` or inclusive range `A..B`.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<String>,
    /// Penalty approximation degree.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<u32>,
    /// Penalty smoothness order; chosen automatically when absent.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    /// Penalty breakpoint in [-1, 0).
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Penalty plateau height.
    #[arg(long = "n-height")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_height: Option<f64>,
    /// theoretical or empirical.
    #[arg(long = "shift-mode")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift_mode: Option<String>,
    /// Solver tolerance in [1e-10, 1e-4].
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Attach an SOS certificate to every solved bound.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certify: Option<bool>,
    /// Binary domain: keep x_i^2 = x_i as explicit equality blocks.
    #[arg(long = "explicit-equalities", num_args = 0..=1, default_missing_value = "true")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit_equalities: Option<bool>,
    /// Sample count for the ball oracle.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Number of seeded random instances for `bench` when no instance is given.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<usize>,
    /// Domain of the random bench suite.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    /// Worker threads for `bench`.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

/// Where each effective value came from.
pub type Provenance = BTreeMap<String, &'static str>;

macro_rules! layer {
    ($flags:ident, $file:ident, $prov:ident, $($f:ident),*) => {
        RunConfig {
            instance: if !$flags.instance.is_empty() {
                $prov.insert("instance".into(), "flag");
                $flags.instance.clone()
            } else if !$file.instance.is_empty() {
                $prov.insert("instance".into(), "config");
                $file.instance.clone()
            } else {
                Vec::new()
            },
            $($f: match (&$flags.$f, &$file.$f) {
                (Some(v), _) => { $prov.insert(stringify!($f).into(), "flag"); Some(v.clone()) }
                (None, Some(v)) => { $prov.insert(stringify!($f).into(), "config"); Some(v.clone()) }
                (None, None) => None,
            },)*
        }
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input("CONFIG_PARSE", format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::input("CONFIG_PARSE", format!("{}: {e}", path.display())))
    }

    /// Flags over file values, recording the source of every set field.
    pub fn layered(flags: &RunConfig, file: &RunConfig) -> (RunConfig, Provenance) {
        let mut prov = Provenance::new();
        let cfg = layer!(
            flags, file, prov, kind, r, v, k, lambda, n_height, shift_mode, tol, seed, out, certify,
            explicit_equalities, samples, suite, domain, jobs
        );
        (cfg, prov)
    }

    /// Fills `field` with a default, marking it as such.
    pub fn default_of<T: Clone>(field: &Option<T>, name: &str, default: T, prov: &mut Provenance) -> T {
        match field {
            Some(v) => v.clone(),
            None => {
                prov.insert(name.into(), "default");
                default
            }
        }
    }
}

/// Parses `R` or `A..B` (inclusive).
pub fn parse_r_range(s: &str) -> Result<Vec<u32>, CliError> {
    let bad = || CliError::input("INVALID_ARGUMENT", format!("bad --r value {s:?}; expected R or A..B"));
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let a: u32 = a.trim().parse().map_err(|_| bad())?;
        let b: u32 = b.trim_start_matches('=').trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        Ok((a..=b).collect())
    } else {
        Ok(vec![s.parse().map_err(|_| bad())?])
    }
}

/// Hex SHA-256 of the canonical JSON of the effective configuration.
pub fn config_hash(command: &str, cfg: &RunConfig) -> String {
    let body = serde_json::json!({"command": command, "config": cfg});
    let digest = Sha256::digest(body.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
