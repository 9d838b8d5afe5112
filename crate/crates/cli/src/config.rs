//! Pipeline configuration: defaults, a flat key=value file, and flag
//! overrides, in that order of precedence (flags win).

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use kgcausal::projection::SelectionPolicy;
use kgcausal::stats::NoiseFamily;
use kgcausal::{Error, Result};

/// Which causal estimators the pipeline runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    Direct,
    Ica,
    Both,
}

impl Algo {
    pub fn runs_direct(self) -> bool {
        matches!(self, Algo::Direct | Algo::Both)
    }

    pub fn runs_ica(self) -> bool {
        matches!(self, Algo::Ica | Algo::Both)
    }
}

impl std::str::FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Algo::Direct),
            "ica" => Ok(Algo::Ica),
            "both" => Ok(Algo::Both),
            other => Err(Error::InvalidValue(format!(
                "unknown algo '{other}' (expected direct|ica|both)"
            ))),
        }
    }
}

/// Everything the end-to-end run needs. Numeric bounds are enforced by the
/// consuming modules; `validate` only checks what must hold before any stage
/// starts.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub d_e: usize,
    pub d_r: usize,
    pub w_r_count: usize,
    pub relation_policy: SelectionPolicy,
    pub epochs: usize,
    pub learning_rate: f64,
    pub negatives: usize,
    pub l2: f64,
    pub seed: u64,
    pub algo: Algo,
    pub tau: Option<f64>,
    pub alpha: f64,
    pub edge_threshold: f64,
    pub sample_cap: usize,
    pub ica_max_iter: usize,
    pub ica_tol: f64,
    pub skip_train: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("."),
            out_dir: PathBuf::from("out"),
            d_e: 5,
            d_r: 5,
            w_r_count: 100,
            relation_policy: SelectionPolicy::MostFrequent,
            epochs: 200,
            learning_rate: 1.0,
            negatives: 5,
            l2: 0.0,
            seed: 42,
            algo: Algo::Direct,
            tau: None,
            alpha: 0.01,
            edge_threshold: 0.05,
            sample_cap: 500,
            ica_max_iter: 200,
            ica_tol: 1e-4,
            skip_train: false,
        }
    }
}

fn parse_as<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidValue(format!("bad value '{value}' for key '{key}'")))
}

impl PipelineConfig {
    /// Applies one `key=value` assignment. Keys mirror the flag names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "data" => self.data_dir = PathBuf::from(value),
            "out" => self.out_dir = PathBuf::from(value),
            "de" => self.d_e = parse_as(key, value)?,
            "dr" => self.d_r = parse_as(key, value)?,
            "wr" => self.w_r_count = parse_as(key, value)?,
            "policy" => self.relation_policy = value.parse()?,
            "epochs" => self.epochs = parse_as(key, value)?,
            "lr" => self.learning_rate = parse_as(key, value)?,
            "neg" => self.negatives = parse_as(key, value)?,
            "l2" => self.l2 = parse_as(key, value)?,
            "seed" => self.seed = parse_as(key, value)?,
            "algo" => self.algo = value.parse()?,
            "tau" => self.tau = Some(parse_as(key, value)?),
            "alpha" => self.alpha = parse_as(key, value)?,
            "edge_threshold" => self.edge_threshold = parse_as(key, value)?,
            "sample_cap" => self.sample_cap = parse_as(key, value)?,
            "ica_max_iter" => self.ica_max_iter = parse_as(key, value)?,
            "ica_tol" => self.ica_tol = parse_as(key, value)?,
            "skip_train" => self.skip_train = parse_as(key, value)?,
            other => {
                return Err(Error::InvalidValue(format!("unknown config key '{other}'")))
            }
        }
        Ok(())
    }

    /// Loads `key = value` lines over the current values. `#` starts a
    /// comment; blank lines are skipped.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidValue(format!(
                    "{}:{}: expected key=value",
                    path.display(),
                    lineno + 1
                ))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_e < 1 || self.d_r < 1 {
            return Err(Error::InvalidValue("de and dr must be >= 1".into()));
        }
        if self.w_r_count < 1 {
            return Err(Error::InvalidValue("wr must be >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidValue("alpha must be in (0, 1)".into()));
        }
        if self.edge_threshold < 0.0 {
            return Err(Error::InvalidValue("edge threshold must be >= 0".into()));
        }
        if self.sample_cap < 3 {
            return Err(Error::InvalidValue("sample cap must be >= 3".into()));
        }
        Ok(())
    }

    /// Key=value echo of the configuration, used by the run manifest.
    pub fn echo(&self) -> Vec<(String, String)> {
        let policy = match self.relation_policy {
            SelectionPolicy::First => "first",
            SelectionPolicy::MostFrequent => "most-frequent",
        };
        let algo = match self.algo {
            Algo::Direct => "direct",
            Algo::Ica => "ica",
            Algo::Both => "both",
        };
        vec![
            ("data".into(), self.data_dir.display().to_string()),
            ("out".into(), self.out_dir.display().to_string()),
            ("de".into(), self.d_e.to_string()),
            ("dr".into(), self.d_r.to_string()),
            ("wr".into(), self.w_r_count.to_string()),
            ("policy".into(), policy.into()),
            ("epochs".into(), self.epochs.to_string()),
            ("lr".into(), self.learning_rate.to_string()),
            ("neg".into(), self.negatives.to_string()),
            ("l2".into(), self.l2.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("algo".into(), algo.into()),
            (
                "tau".into(),
                self.tau.map_or("auto".into(), |t| t.to_string()),
            ),
            ("alpha".into(), self.alpha.to_string()),
            ("edge_threshold".into(), self.edge_threshold.to_string()),
            ("sample_cap".into(), self.sample_cap.to_string()),
            ("skip_train".into(), self.skip_train.to_string()),
        ]
    }
}

/// Noise family plus scale for the synthetic-data subcommand.
#[derive(Debug, Clone, Copy)]
pub struct SynthOptions {
    pub p: usize,
    pub n: usize,
    pub seed: u64,
    pub noise: NoiseFamily,
    pub scale: f64,
}

#[allow(dead_code)]
fn _assert_noise_usable(n: NoiseFamily) -> NoiseFamily {
    n
}
