//! The JSON run configuration. Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::Rng;
use serde::Deserialize;
use sr_mcmc::chains::{ChainKind, InitStrategy};
use sr_mcmc::diagnostics::{Statistic, DEFAULT_THRESHOLD};
use sr_mcmc::dpp::{marginal_to_l, rbf_kernel, spectrum_step_kernel, validate_marginal_kernel, LEnsemble};
use sr_mcmc::measures::{CardinalityConditioned, Measure, ProductMeasure, TableMeasure};
use sr_mcmc::rng::stream;

use crate::error::{CliError, Result};
use crate::kernel_file::{read_kernel, read_matrix};

pub const SEED_ENV: &str = "SR_MCMC_SEED";

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub measure: MeasureConfig,
    #[serde(default)]
    pub chain: ChainConfig,
    #[serde(default)]
    pub init: InitStrategy,
    #[serde(default)]
    pub eps: EpsConfig,
    #[serde(default)]
    pub compare: CompareConfig,
    #[serde(default)]
    pub check: CheckConfig,
    #[serde(default)]
    pub bound: BoundConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum MeasureConfig {
    /// Exactly one of `kernel`, `synthetic`, `preset`.
    #[serde(rename = "dpp-L")]
    DppL {
        kernel: Option<PathBuf>,
        synthetic: Option<SyntheticKernel>,
        preset: Option<Preset>,
        /// Seed for synthetic kernels and presets.
        #[serde(default)]
        kernel_seed: u64,
    },
    #[serde(rename = "dpp-K")]
    DppK { kernel: PathBuf },
    #[serde(rename = "product")]
    Product { q: Vec<f64> },
    #[serde(rename = "product-k")]
    ProductK { q: Vec<f64>, k: usize },
    /// `2^N` weights indexed by bitmask.
    #[serde(rename = "table")]
    Table { weights: Vec<f64> },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum SyntheticKernel {
    Rbf { points: PathBuf, bandwidth: f64 },
    SpectrumStep { n: usize, k: usize, hi: f64, lo: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
pub enum Preset {
    /// RBF kernel, bandwidth 0.5, on 200 uniform points in `[0,1]^5`.
    #[serde(rename = "fig1b-like")]
    SmoothSpectrum,
    /// `N = 60`, 30 eigenvalues at 500 and 30 at 1/500.
    #[serde(rename = "fig1c-like")]
    StepSpectrum,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    #[serde(default = "default_kind")]
    pub kind: ChainKind,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default = "one")]
    pub thin: usize,
    /// Defaults to 1 for `sample` and 10 for `compare`.
    pub chains: Option<usize>,
    pub seed: Option<u64>,
}

fn default_kind() -> ChainKind {
    ChainKind::Projection
}

fn default_steps() -> usize {
    1000
}

fn one() -> usize {
    1
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig { kind: default_kind(), steps: default_steps(), burn_in: 0, thin: 1, chains: None, seed: None }
    }
}

/// A single `eps` or a list of them.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum EpsConfig {
    One(f64),
    Many(Vec<f64>),
}

impl Default for EpsConfig {
    fn default() -> Self {
        EpsConfig::Many(vec![0.05, 0.01])
    }
}

impl EpsConfig {
    pub fn values(&self) -> Vec<f64> {
        match self {
            EpsConfig::One(e) => vec![*e],
            EpsConfig::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    #[serde(default = "default_kinds")]
    pub kinds: Vec<ChainKind>,
    #[serde(default = "default_statistics")]
    pub statistics: Vec<Statistic>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Evaluation stride in retained values; default `max(1, n/200)`.
    pub stride: Option<usize>,
}

fn default_kinds() -> Vec<ChainKind> {
    vec![ChainKind::AddDelete, ChainKind::Projection]
}

fn default_statistics() -> Vec<Statistic> {
    vec![Statistic::Cardinality]
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            kinds: default_kinds(),
            statistics: default_statistics(),
            threshold: default_threshold(),
            stride: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    #[serde(default = "yes")]
    pub lumping: bool,
    #[serde(default = "yes")]
    pub mixing: bool,
}

fn yes() -> bool {
    true
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { lumping: true, mixing: true }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    /// Normalized `log π(S0)`; computed when absent.
    pub log_pi_s0: Option<f64>,
}

/// A constructed measure plus whatever is known about its normalizer.
pub struct BuiltMeasure {
    pub measure: Box<dyn Measure>,
    /// `log Σ_S π(S)` when available in closed form.
    pub log_normalizer: Option<f64>,
    /// Cardinality of every positive set, for homogeneous measures.
    pub homogeneous_k: Option<usize>,
}

impl RunConfig {
    /// Parses the file and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.measure {
            MeasureConfig::DppL { kernel, synthetic, .. } => {
                if let Some(k) = kernel {
                    fix(k);
                }
                if let Some(SyntheticKernel::Rbf { points, .. }) = synthetic {
                    fix(points);
                }
            }
            MeasureConfig::DppK { kernel } => fix(kernel),
            _ => {}
        }
    }

    pub fn validate(&self) -> Result<()> {
        let config = |m: String| Err(CliError::Config(m));
        if let MeasureConfig::DppL { kernel, synthetic, preset, .. } = &self.measure {
            let sources = kernel.is_some() as u8 + synthetic.is_some() as u8 + preset.is_some() as u8;
            if sources != 1 {
                return config("dpp-L needs exactly one of \"kernel\", \"synthetic\", \"preset\"".into());
            }
        }
        let files: Vec<&PathBuf> = match &self.measure {
            MeasureConfig::DppL { kernel: Some(k), .. } | MeasureConfig::DppK { kernel: k } => vec![k],
            MeasureConfig::DppL { synthetic: Some(SyntheticKernel::Rbf { points, .. }), .. } => vec![points],
            _ => vec![],
        };
        for f in files {
            if !f.is_file() {
                return config(format!("referenced file {} does not exist", f.display()));
            }
        }
        if self.chain.chains == Some(0) {
            return config("chain.chains must be at least 1".into());
        }
        if self.chain.thin == 0 {
            return config("chain.thin must be at least 1".into());
        }
        Ok(())
    }

    pub fn build_measure(&self) -> Result<BuiltMeasure> {
        let dpp = |l: LEnsemble| -> Result<BuiltMeasure> {
            let log_normalizer = Some(l.log_normalizer()?);
            Ok(BuiltMeasure { measure: Box::new(l), log_normalizer, homogeneous_k: None })
        };
        match &self.measure {
            MeasureConfig::DppL { kernel: Some(path), .. } => dpp(LEnsemble::new(read_kernel(path)?)?),
            MeasureConfig::DppL { synthetic: Some(spec), kernel_seed, .. } => {
                let mut rng = stream(*kernel_seed, 0);
                dpp(match spec {
                    SyntheticKernel::Rbf { points, bandwidth } => rbf_kernel(&read_matrix(points)?, *bandwidth)?,
                    SyntheticKernel::SpectrumStep { n, k, hi, lo } => spectrum_step_kernel(*n, *k, *hi, *lo, &mut rng)?,
                })
            }
            MeasureConfig::DppL { preset: Some(preset), kernel_seed, .. } => {
                let mut rng = stream(*kernel_seed, 0);
                dpp(match preset {
                    Preset::SmoothSpectrum => {
                        let points = DMatrix::from_fn(200, 5, |_, _| rng.random::<f64>());
                        rbf_kernel(&points, 0.5)?
                    }
                    Preset::StepSpectrum => spectrum_step_kernel(60, 30, 500.0, 1.0 / 500.0, &mut rng)?,
                })
            }
            MeasureConfig::DppL { .. } => unreachable!("validated"),
            MeasureConfig::DppK { kernel } => {
                let k = validate_marginal_kernel(read_kernel(kernel)?)?;
                dpp(marginal_to_l(&k)?)
            }
            MeasureConfig::Product { q } => Ok(BuiltMeasure {
                measure: Box::new(ProductMeasure::new(q.clone())?),
                log_normalizer: Some(0.0),
                homogeneous_k: None,
            }),
            MeasureConfig::ProductK { q, k } => Ok(BuiltMeasure {
                measure: Box::new(CardinalityConditioned::new(ProductMeasure::new(q.clone())?, *k)?),
                log_normalizer: None,
                homogeneous_k: Some(*k),
            }),
            MeasureConfig::Table { weights } => Ok(BuiltMeasure {
                measure: Box::new(TableMeasure::from_weights(weights.clone())?),
                log_normalizer: None,
                homogeneous_k: None,
            }),
        }
    }

    /// Precedence: `--seed` flag, then `SR_MCMC_SEED`, then `chain.seed`, then 0.
    pub fn resolve_seed(&self, flag: Option<u64>, env: Option<&str>) -> Result<u64> {
        if let Some(s) = flag {
            return Ok(s);
        }
        if let Some(text) = env {
            return text
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("{SEED_ENV}={text:?} is not an unsigned integer")));
        }
        Ok(self.chain.seed.unwrap_or(0))
    }
}
