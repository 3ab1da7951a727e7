//! Run configuration: a TOML document mirroring every fitting knob.
//! Unknown keys are rejected.

use serde::Deserialize;

use splinemix_core::error::{Error, Result};
use splinemix_core::model::Method;
use splinemix_core::network::Activation;
use splinemix_core::priors::{PriorConfig, PriorVariant};
use splinemix_core::sampler::{McmcAlgorithm, McmcControl, MetricKind};
use splinemix_core::trainer::TrainControl;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default = "default_response")]
    pub response: String,
    #[serde(default)]
    pub normalize: bool,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    #[serde(default = "default_activation")]
    pub activation: String,
    #[serde(default)]
    pub prior: PriorSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub mcmc: McmcSection,
}

fn default_method() -> String {
    "MAP".into()
}
fn default_response() -> String {
    "Y".into()
}
fn default_k() -> usize {
    10
}
fn default_hidden() -> Vec<usize> {
    vec![10]
}
fn default_activation() -> String {
    "tanh".into()
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            method: default_method(),
            response: default_response(),
            normalize: false,
            seed: None,
            k: default_k(),
            hidden: default_hidden(),
            activation: default_activation(),
            prior: PriorSection::default(),
            train: TrainSection::default(),
            mcmc: McmcSection::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorSection {
    pub variant: String,
    pub a_lambda: f64,
    pub b_lambda: f64,
    pub a_sigma: f64,
    pub b_sigma: f64,
}

impl Default for PriorSection {
    fn default() -> Self {
        PriorSection {
            variant: "GP".into(),
            a_lambda: 0.001,
            b_lambda: 0.001,
            a_sigma: 0.001,
            b_sigma: 0.001,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub valid_pct: f64,
    pub early_stopping_epochs: usize,
    pub dropout: [f64; 2],
    pub batch_norm: bool,
    pub print_every: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let c = TrainControl::default();
        TrainSection {
            lr: c.lr,
            batch_size: c.batch_size,
            epochs: c.epochs,
            valid_pct: c.valid_pct,
            early_stopping_epochs: c.early_stopping_epochs,
            dropout: [0.0, 0.0],
            batch_norm: false,
            print_every: c.print_every,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McmcSection {
    pub algorithm: String,
    pub iter: usize,
    pub warmup: usize,
    pub thin: usize,
    pub stepsize: Option<f64>,
    pub metric: String,
    pub delta: f64,
    pub max_treedepth: usize,
    pub int_time: f64,
}

impl Default for McmcSection {
    fn default() -> Self {
        let c = McmcControl::default();
        McmcSection {
            algorithm: "NUTS".into(),
            iter: c.iter,
            warmup: c.warmup,
            thin: c.thin,
            stepsize: c.stepsize,
            metric: "diag".into(),
            delta: c.delta,
            max_treedepth: c.max_treedepth,
            int_time: c.int_time,
        }
    }
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::invalid(format!("config {}: {e}", path.display())))
    }

    pub fn method(&self) -> Result<Method> {
        self.method.parse()
    }

    pub fn activation(&self) -> Result<Activation> {
        self.activation.parse()
    }

    pub fn prior_config(&self) -> Result<PriorConfig> {
        let variant: PriorVariant = self.prior.variant.parse()?;
        let cfg = PriorConfig {
            variant,
            a_lambda: self.prior.a_lambda,
            b_lambda: self.prior.b_lambda,
            a_sigma: self.prior.a_sigma,
            b_sigma: self.prior.b_sigma,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn train_control(&self, verbose: bool) -> TrainControl {
        TrainControl {
            lr: self.train.lr,
            batch_size: self.train.batch_size,
            epochs: self.train.epochs,
            valid_pct: self.train.valid_pct,
            early_stopping_epochs: self.train.early_stopping_epochs,
            dropout: (self.train.dropout[0], self.train.dropout[1]),
            batch_norm: self.train.batch_norm,
            print_every: self.train.print_every,
            verbose,
            seed: self.seed,
            checkpoint_path: None,
        }
    }

    pub fn mcmc_control(&self, verbose: bool) -> Result<McmcControl> {
        let algorithm: McmcAlgorithm = self.mcmc.algorithm.parse()?;
        let metric: MetricKind = self.mcmc.metric.parse()?;
        Ok(McmcControl {
            algorithm,
            iter: self.mcmc.iter,
            warmup: self.mcmc.warmup,
            thin: self.mcmc.thin,
            stepsize: self.mcmc.stepsize,
            metric,
            delta: self.mcmc.delta,
            max_treedepth: self.mcmc.max_treedepth,
            int_time: self.mcmc.int_time,
            seed: self.seed,
            verbose,
        })
    }
}
