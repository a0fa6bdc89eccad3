use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use emhd_core::diagnostics::default_orders;
use emhd_core::initial::default_half_width;
use emhd_core::solver::SolverConfig;
use emhd_core::{Grid, ParamSet};

use crate::error::CliError;

/// Every experiment knob. Keys are flat so that each one has a matching flag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lambda: f64,
    pub beta: f64,
    pub gamma: f64,
    pub zeta: f64,
    pub n: usize,
    /// Defaults to `8 / lambda`.
    pub half_width: Option<f64>,
    pub normalize: bool,
    /// Defaults to `t_N = lambda^-zeta`.
    pub t_end: Option<f64>,
    pub dt_safety: f64,
    pub nu: f64,
    pub hyper_order: u32,
    pub dealias: bool,
    pub output_stride: usize,
    pub max_steps: usize,
    pub resolution_limit: f64,
    pub min_dt: f64,
    /// Defaults to `{-1, 0, 1, 2, beta - 2, beta - 1, beta}`.
    pub orders: Option<Vec<f64>>,
    /// Record `abar`, `A` and `u - u0` while the carrier is resolved.
    pub carrier: bool,
    pub scan_decades: f64,
    pub scan_count: usize,
    /// Exact decimals or fractions.
    pub region_betas: Vec<String>,
    pub region_gammas: Vec<String>,
    pub sweep_lambdas: Vec<f64>,
    /// One grid size per sweep lambda; empty means `n` for all.
    pub sweep_ns: Vec<usize>,
    /// `approx`, `frozen-run` or `run`.
    pub sweep_mode: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let s = SolverConfig::default();
        Self {
            lambda: 8.0,
            beta: 3.5,
            gamma: 1.2,
            zeta: 1.47,
            n: 512,
            half_width: None,
            normalize: false,
            t_end: None,
            dt_safety: s.dt_safety,
            nu: s.nu,
            hyper_order: s.hyper_order,
            dealias: s.dealias,
            output_stride: s.output_stride,
            max_steps: s.max_steps,
            resolution_limit: s.resolution_limit,
            min_dt: s.min_dt,
            orders: None,
            carrier: true,
            scan_decades: 1.0,
            scan_count: 12,
            region_betas: vec!["3.5".into()],
            region_gammas: vec!["1.2".into()],
            sweep_lambdas: vec![8.0, 16.0, 32.0],
            sweep_ns: vec![],
            sweep_mode: "approx".into(),
        }
    }
}

/// Command-line overrides; each flag mirrors a config key.
#[derive(Args, Clone, Debug, Default)]
pub struct Overrides {
    /// TOML configuration file; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub zeta: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub half_width: Option<f64>,
    #[arg(long)]
    pub normalize: Option<bool>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub dt_safety: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub hyper_order: Option<u32>,
    #[arg(long)]
    pub dealias: Option<bool>,
    #[arg(long)]
    pub output_stride: Option<usize>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub resolution_limit: Option<f64>,
    #[arg(long)]
    pub min_dt: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub orders: Option<Vec<f64>>,
    #[arg(long)]
    pub carrier: Option<bool>,
    #[arg(long)]
    pub scan_decades: Option<f64>,
    #[arg(long)]
    pub scan_count: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub region_betas: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub region_gammas: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub sweep_lambdas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub sweep_ns: Option<Vec<usize>>,
    #[arg(long)]
    pub sweep_mode: Option<String>,
}

macro_rules! apply {
    ($cfg:ident, $o:ident, $($field:ident),*) => {
        $(if let Some(v) = $o.$field.clone() { $cfg.$field = v; })*
    };
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// File (if any) with flags layered on top.
    pub fn resolve(o: &Overrides) -> Result<Self, CliError> {
        let mut c = match &o.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        apply!(
            c, o, lambda, beta, gamma, zeta, n, normalize, dt_safety, nu, hyper_order, dealias, output_stride,
            max_steps, resolution_limit, min_dt, carrier, scan_decades, scan_count, region_betas, region_gammas,
            sweep_lambdas, sweep_ns, sweep_mode
        );
        if o.half_width.is_some() {
            c.half_width = o.half_width;
        }
        if o.t_end.is_some() {
            c.t_end = o.t_end;
        }
        if o.orders.is_some() {
            c.orders = o.orders.clone();
        }
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn params(&self) -> Result<ParamSet, CliError> {
        Ok(ParamSet::new(self.lambda, self.beta, self.gamma, self.zeta)?)
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Ok(Grid::new(self.n, self.half_width.unwrap_or_else(|| default_half_width(self.lambda)))?)
    }

    pub fn orders(&self) -> Vec<f64> {
        self.orders.clone().unwrap_or_else(|| default_orders(self.beta))
    }

    pub fn t_end(&self, p: &ParamSet) -> f64 {
        self.t_end.unwrap_or_else(|| p.inflation_time())
    }

    pub fn solver(&self, t_end: f64) -> SolverConfig {
        SolverConfig {
            dt_safety: self.dt_safety,
            nu: self.nu,
            hyper_order: self.hyper_order,
            dealias: self.dealias,
            t_end,
            output_stride: self.output_stride,
            max_steps: self.max_steps,
            resolution_limit: self.resolution_limit,
            min_dt: self.min_dt,
        }
    }

    /// Copy for one member of a lambda sweep.
    pub fn for_lambda(&self, index: usize) -> Self {
        let mut c = self.clone();
        c.lambda = self.sweep_lambdas[index];
        if let Some(&n) = self.sweep_ns.get(index) {
            c.n = n;
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "lambda = 16.0\nn = 512\norders = [1.0]\n").unwrap();
        let o = Overrides {
            config: Some(path),
            n: Some(1024),
            ..Default::default()
        };
        let c = ExperimentConfig::resolve(&o).unwrap();
        assert_eq!(c.lambda, 16.0);
        assert_eq!(c.n, 1024);
        assert_eq!(c.orders(), vec![1.0]);
    }

    #[test]
    fn echo_round_trips() {
        let c = ExperimentConfig {
            half_width: Some(0.3),
            orders: Some(vec![-1.0, 3.5]),
            ..Default::default()
        };
        let back: ExperimentConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "lamda = 16.0\n").unwrap();
        assert!(matches!(ExperimentConfig::load(&path), Err(CliError::Config(_))));
    }
}
