//! JSON run configuration: problem data, control source, optimizer and sweep
//! settings. Unset fields take the documented defaults (c0 = 1, T = 1,
//! ε = 1e-8, newton_tol = 1e-11, M = 1, q = 0.5 on the friction boundary).

use crate::error::{Error, Result};
use crate::state::{BcMode, ControlField, Discretization, ProblemSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum BcConfig {
    Dirichlet,
    Robin { h: f64 },
}

impl BcConfig {
    pub fn to_mode(&self) -> BcMode {
        match self {
            BcConfig::Dirichlet => BcMode::Dirichlet,
            BcConfig::Robin { h } => BcMode::Robin { h: *h },
        }
    }
}

/// Where the control field comes from.
#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ControlSource {
    Zero,
    Constant { value: f64 },
    Random {
        #[serde(default)]
        seed: Option<u64>,
        lo: f64,
        hi: f64,
    },
    /// JSON file holding an n_steps × n_nodes array.
    File { path: String },
}

fn default_dim() -> usize {
    1
}
fn default_n() -> usize {
    16
}
fn default_n_steps() -> usize {
    32
}
fn default_c0() -> f64 {
    1.0
}
fn default_t_final() -> f64 {
    1.0
}
fn default_bc() -> BcConfig {
    BcConfig::Dirichlet
}
fn default_epsilon() -> f64 {
    1e-8
}
fn default_newton_tol() -> f64 {
    1e-11
}
fn default_newton_max_iter() -> usize {
    50
}
fn default_q() -> f64 {
    0.2
}
fn default_m_cost() -> f64 {
    1.0
}
fn default_grad_tol() -> f64 {
    1e-6
}
fn default_max_iter() -> usize {
    500
}
fn default_mu_list() -> Vec<f64> {
    vec![0.25, 0.5, 0.75]
}
fn default_h_list() -> Vec<f64> {
    vec![1.0, 4.0, 16.0, 64.0, 256.0, 1024.0]
}
fn default_eps_list() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3, 1e-4]
}
fn default_n_random() -> usize {
    20
}
fn default_seed() -> u64 {
    2024
}
fn default_control() -> ControlSource {
    ControlSource::Zero
}
fn default_output_dir() -> String {
    ".".into()
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_n_steps")]
    pub n_steps: usize,
    #[serde(default = "default_c0")]
    pub c0: f64,
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    #[serde(default = "default_bc")]
    pub bc: BcConfig,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_max_iter")]
    pub newton_max_iter: usize,
    /// Friction coefficient, constant on Γ2.
    #[serde(default = "default_q")]
    pub q: f64,
    /// Boundary datum, constant on Γ1.
    #[serde(default)]
    pub b: f64,
    /// Initial state, constant over the domain.
    #[serde(default)]
    pub u_b: f64,
    #[serde(default = "default_control")]
    pub control: ControlSource,
    #[serde(default = "default_m_cost")]
    pub m_cost: f64,
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_mu_list")]
    pub mu_list: Vec<f64>,
    #[serde(default = "default_h_list")]
    pub h_list: Vec<f64>,
    #[serde(default = "default_eps_list")]
    pub eps_list: Vec<f64>,
    #[serde(default = "default_n_random")]
    pub n_random: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    /// Hex digest of the config file contents, filled on load.
    #[serde(skip)]
    pub config_hash: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::Config("dim must be 1 or 2".into()));
        }
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.n_steps == 0 {
            return Err(Error::Config("n_steps must be at least 1".into()));
        }
        if self.q < 0.0 {
            return Err(Error::Config("q must be nonnegative".into()));
        }
        if self.c0 < 0.0 {
            return Err(Error::Config("c0 must be nonnegative".into()));
        }
        if !(self.t_final > 0.0) {
            return Err(Error::Config("t_final must be positive".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if !(self.m_cost > 0.0) {
            return Err(Error::Config("m_cost must be positive".into()));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::Config("grad_tol must be positive".into()));
        }
        if let BcConfig::Robin { h } = self.bc {
            if !(h > 0.0) {
                return Err(Error::Config("robin h must be positive".into()));
            }
        }
        if self.mu_list.iter().any(|&m| !(0.0..=1.0).contains(&m)) {
            return Err(Error::Config("mu_list entries must lie in [0, 1]".into()));
        }
        if let ControlSource::Random { lo, hi, .. } = self.control {
            if lo > hi {
                return Err(Error::Config("control range must have lo <= hi".into()));
            }
        }
        if let ControlSource::File { path } = &self.control {
            if !Path::new(path).exists() {
                return Err(Error::Config(format!("control file not found: {path}")));
            }
        }
        Ok(())
    }

    /// Builds the problem spec and its discretization.
    pub fn problem(&self) -> Result<(ProblemSpec, Discretization)> {
        let mut spec = ProblemSpec::new(self.dim, self.n, self.n_steps, self.bc.to_mode())?;
        spec.c0 = self.c0;
        spec.t_final = self.t_final;
        spec.epsilon = self.epsilon;
        spec.newton_tol = self.newton_tol;
        spec.newton_max_iter = self.newton_max_iter;
        spec = spec.with_constant_b_and_start(self.b);
        spec.u_b = vec![self.u_b; spec.u_b.len()];
        // Dirichlet needs the initial state to match the boundary datum
        if self.bc == BcConfig::Dirichlet {
            let disc_probe = crate::fem::build_mesh(self.dim, self.n)?;
            for &i in &disc_probe.gamma1_nodes {
                spec.u_b[i] = self.b;
            }
        }
        let disc = Discretization::build(&spec)?;
        let spec = spec.with_constant_q(&disc.mesh, self.q);
        Ok((spec, disc))
    }

    /// Materializes the configured control field.
    pub fn control_field(&self, n_steps: usize, n_nodes: usize) -> Result<ControlField> {
        match &self.control {
            ControlSource::Zero => Ok(ControlField::zeros(n_steps, n_nodes)),
            ControlSource::Constant { value } => {
                Ok(ControlField::constant(*value, n_steps, n_nodes))
            }
            ControlSource::Random { seed, lo, hi } => Ok(ControlField::random(
                seed.unwrap_or(self.seed),
                (*lo, *hi),
                n_steps,
                n_nodes,
            )),
            ControlSource::File { path } => {
                let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                    path: path.clone(),
                    source,
                })?;
                let rows: Vec<Vec<f64>> = serde_json::from_str(&text)?;
                let field = ControlField::from_rows(rows)?;
                if field.n_steps() != n_steps || field.n_nodes() != n_nodes {
                    return Err(Error::Config(format!(
                        "control file {path} has shape {}x{}, expected {}x{}",
                        field.n_steps(),
                        field.n_nodes(),
                        n_steps,
                        n_nodes
                    )));
                }
                Ok(field)
            }
        }
    }
}

/// Reads and validates a config file; the digest of the raw bytes is recorded
/// for CSV provenance.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut cfg: RunConfig = serde_json::from_slice(&bytes)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    cfg.config_hash = digest
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect::<String>();
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn minimal_config_gets_defaults() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        write!(file, r#"{{"dim": 1, "n": 16, "n_steps": 32}}"#).unwrap();
        let cfg = load_config(file.path()).unwrap();
        assert_eq!(cfg.c0, 1.0);
        assert_eq!(cfg.epsilon, 1e-8);
        assert_eq!(cfg.newton_tol, 1e-11);
        assert_eq!(cfg.m_cost, 1.0);
        assert_eq!(cfg.t_final, 1.0);
        assert_eq!(cfg.q, 0.2);
        assert_eq!(cfg.config_hash.len(), 16);
    }

    #[test]
    fn negative_q_is_rejected_with_field_name() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        write!(file, r#"{{"q": -1.0}}"#).unwrap();
        let err = load_config(file.path()).unwrap_err();
        assert!(err.to_string().contains("q must be nonnegative"));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_config(Path::new("/nonexistent/config.json")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn malformed_json_reports_line() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        write!(file, "{{\n  \"dim\": 1,\n  oops\n}}").unwrap();
        let err = load_config(file.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line"), "message was: {msg}");
    }

    #[test]
    fn robin_config_roundtrip() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        write!(file, r#"{{"bc": {{"robin": {{"h": 12.5}}}}}}"#).unwrap();
        let cfg = load_config(file.path()).unwrap();
        assert_eq!(cfg.bc, BcConfig::Robin { h: 12.5 });
        let (spec, _) = cfg.problem().unwrap();
        assert_eq!(spec.bc_mode, crate::state::BcMode::Robin { h: 12.5 });
    }
}
