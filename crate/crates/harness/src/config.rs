//! Flat `key=value` solver configuration.
//!
//! Lines may hold several whitespace-separated assignments; `#` starts a
//! comment. Recognised keys:
//!
//! - `reg`: penalty kind (`l1`, `lq`, `log`, `capped-l1`, `mcp`, `scad`)
//! - `q`, `eps`, `nu`, `alpha`, `beta`, or any `phi.<name>`: penalty parameters
//! - `r`, `lambda`, `sigma`
//! - `npg.<field>` and `fal.<field>` for the solver settings

use std::path::Path;

use partialreg_core::{FalConfig, NpgConfig, PartialRegularizer, Regularizer, RegularizerKind};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub kind: RegularizerKind,
    pub phi_params: Vec<(String, f64)>,
    pub r: usize,
    pub lambda: f64,
    /// Noise level; `None` defers to the caller's default.
    pub sigma: Option<f64>,
    pub npg: NpgConfig,
    pub fal: FalConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            kind: RegularizerKind::L1,
            phi_params: Vec::new(),
            r: 0,
            lambda: 1.0,
            sigma: None,
            npg: NpgConfig::default(),
            fal: FalConfig::default(),
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("cannot parse `{value}` for `{key}`"))
}

impl SolverConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = SolverConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("");
            for token in line.split_whitespace() {
                let (key, value) = token.split_once('=').ok_or_else(|| HarnessError::Config {
                    line: idx + 1,
                    msg: format!("expected key=value, got `{token}`"),
                })?;
                self.set(key, value)
                    .map_err(|msg| HarnessError::Config { line: idx + 1, msg })?;
            }
        }
        Ok(())
    }

    /// Applies one assignment; command-line overrides go through here too.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let value = value.trim();
        match key {
            "reg" => {
                self.kind = value
                    .parse()
                    .map_err(|e: partialreg_core::Error| e.to_string())?;
                self.phi_params.clear();
            }
            "q" | "eps" | "nu" | "alpha" | "beta" => self.set_phi(key, num(key, value)?),
            "r" => self.r = num(key, value)?,
            "lambda" => self.lambda = num(key, value)?,
            "sigma" => self.sigma = Some(num(key, value)?),
            _ => {
                if let Some(name) = key.strip_prefix("phi.") {
                    self.set_phi(name, num(key, value)?);
                } else if let Some(field) = key.strip_prefix("npg.") {
                    self.set_npg(field, value)?;
                } else if let Some(field) = key.strip_prefix("fal.") {
                    self.set_fal(field, value)?;
                } else {
                    return Err(format!("unknown key `{key}`"));
                }
            }
        }
        Ok(())
    }

    fn set_phi(&mut self, name: &str, v: f64) {
        match self.phi_params.iter_mut().find(|(k, _)| k == name) {
            Some(slot) => slot.1 = v,
            None => self.phi_params.push((name.to_string(), v)),
        }
    }

    fn set_npg(&mut self, field: &str, value: &str) -> std::result::Result<(), String> {
        let c = &mut self.npg;
        match field {
            "l_min" => c.l_min = num(field, value)?,
            "l_max" => c.l_max = num(field, value)?,
            "tau" => c.tau = num(field, value)?,
            "c" => c.c = num(field, value)?,
            "window" | "n" => c.window = num(field, value)?,
            "eps" => c.eps = num(field, value)?,
            "max_iters" => c.max_iters = num(field, value)?,
            "max_backtracks" => c.max_backtracks = num(field, value)?,
            "l_init" => c.l_init = num(field, value)?,
            "use_lipschitz_hint" => c.use_lipschitz_hint = num(field, value)?,
            _ => return Err(format!("unknown key `npg.{field}`")),
        }
        Ok(())
    }

    fn set_fal(&mut self, field: &str, value: &str) -> std::result::Result<(), String> {
        let c = &mut self.fal;
        match field {
            "mu0_noisy" => c.mu0_noisy = num(field, value)?,
            "rho0" => c.rho0 = num(field, value)?,
            "gamma" => c.gamma = num(field, value)?,
            "theta" => c.theta = num(field, value)?,
            "eta" => c.eta = num(field, value)?,
            "eps0" => c.eps0 = num(field, value)?,
            "eps_decay" => c.eps_decay = num(field, value)?,
            "eps_min" => c.eps_min = num(field, value)?,
            "eps_target" => c.eps_target = num(field, value)?,
            "feas_tol" => c.feas_tol = num(field, value)?,
            "upsilon" => c.upsilon = Some(num(field, value)?),
            "outer_max" => c.outer_max = num(field, value)?,
            "rho_max" => c.rho_max = num(field, value)?,
            _ => return Err(format!("unknown key `fal.{field}`")),
        }
        Ok(())
    }

    pub fn regularizer(&self) -> Result<Regularizer> {
        Ok(Regularizer::from_pairs(
            self.kind,
            self.phi_params.iter().map(|(k, v)| (k.as_str(), *v)),
        )?)
    }

    pub fn partial(&self) -> Result<PartialRegularizer> {
        Ok(PartialRegularizer::new(
            self.regularizer()?,
            self.r,
            self.lambda,
        )?)
    }
}
