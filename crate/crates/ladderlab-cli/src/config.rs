//! Run configuration: JSON schema, flag merging, canonical serialization
//! and the SHA-256 cache keys derived from it.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use ladderlab::geometry::StandardStationaryMetric;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricSpec {
    /// Reference to a metric specification file.
    Path { path: PathBuf },
    /// Inline metric in the documented schema.
    Inline(StandardStationaryMetric),
}

impl MetricSpec {
    pub fn resolve(&self) -> Result<StandardStationaryMetric, CliError> {
        match self {
            MetricSpec::Inline(m) => Ok(m.clone()),
            MetricSpec::Path { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Validation(format!("cannot read metric file {path:?}: {e}"))
                })?;
                serde_json::from_str(&text).map_err(|e| {
                    CliError::Validation(format!("invalid metric file {path:?}: {e}"))
                })
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendConfig {
    /// Closed-form product spectrum (requires N = 1, beta = 0, h flat/round).
    Product,
    /// Plane-wave spectrum for constant N and beta on a flat torus.
    ConstantShift,
    /// Fourier-Galerkin pencil for variable coefficients on a torus.
    Pencil {
        basis_cutoff: f64,
        #[serde(default = "default_real_tol")]
        real_tol: f64,
        #[serde(default = "default_cluster_tol")]
        cluster_tol: f64,
    },
}

fn default_real_tol() -> f64 {
    1e-8
}

fn default_cluster_tol() -> f64 {
    1e-7
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MassRange {
    pub start: u32,
    pub end: u32,
    pub step: u32,
}

impl MassRange {
    pub fn masses(&self) -> Vec<u32> {
        (self.start..=self.end).step_by(self.step.max(1) as usize).collect()
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = text.split(':').collect();
        let bad = || CliError::Validation(format!("mass range must be A:B:STEP, got {text:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let start = parts[0].parse().map_err(|_| bad())?;
        let end = parts[1].parse().map_err(|_| bad())?;
        let step = parts[2].parse().map_err(|_| bad())?;
        if step == 0 || end < start {
            return Err(bad());
        }
        Ok(MassRange { start, end, step })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiProfile {
    Bump,
    BumpAutocorrelation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    pub x0: Vec<f64>,
    pub xi0: Vec<f64>,
    pub duration: f64,
    pub step: Option<f64>,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig { x0: vec![0.7], xi0: vec![1.1], duration: 10.0, step: None }
    }
}

/// Full run configuration; every field has a default so partial configs work.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub schema_version: u32,
    pub metric: MetricSpec,
    pub backend: BackendConfig,
    pub nu: Vec<f64>,
    pub window_c: f64,
    pub psi_hat_radius: f64,
    pub psi_profile: PsiProfile,
    pub mass_range: MassRange,
    /// Mass horizon of the generating-function sum.
    pub m_max: u32,
    pub s_points: usize,
    pub eps_sweep: Vec<f64>,
    /// Half-width of the lambda window kept around nu m for the
    /// generating-function spectra.
    pub upsilon_window: f64,
    pub seed: u64,
    pub mc_samples: u64,
    pub dq: Option<f64>,
    pub grad_tol: f64,
    pub verify_tolerance: f64,
    pub lattice_budget: u64,
    /// Explicit surface-spectrum cutoff; derived from the sweep when absent.
    pub surface_cutoff: Option<f64>,
    /// Extra lambda coverage beyond the counting window.
    pub lambda_margin: f64,
    pub include_negative_branch: bool,
    pub include_zero_modes: bool,
    pub cache_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
    pub flow: FlowConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            metric: MetricSpec::Inline(StandardStationaryMetric::product(
                ladderlab::geometry::Surface::FlatTorus {
                    lengths: vec![std::f64::consts::TAU, std::f64::consts::TAU],
                },
            )),
            backend: BackendConfig::Product,
            nu: vec![std::f64::consts::SQRT_2],
            window_c: 0.5,
            psi_hat_radius: 0.5,
            psi_profile: PsiProfile::Bump,
            mass_range: MassRange { start: 50, end: 200, step: 10 },
            m_max: 300,
            s_points: 4096,
            eps_sweep: vec![0.1, 0.05, 0.02],
            upsilon_window: 45.0,
            seed: 0,
            mc_samples: 1_000_000,
            dq: None,
            grad_tol: 1e-6,
            verify_tolerance: 0.05,
            lattice_budget: 1 << 28,
            surface_cutoff: None,
            lambda_margin: 4.0,
            include_negative_branch: false,
            include_zero_modes: false,
            cache_dir: None,
            out_dir: PathBuf::from("ladderlab-out"),
            format: OutputFormat::Csv,
            flow: FlowConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {path:?}: {e}"))
        })?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("invalid config {path:?}: {e}")))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Validation(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.nu.is_empty() || self.nu.iter().any(|&v| !(v > 0.0)) {
            return Err(CliError::Validation("nu values must be positive".into()));
        }
        if !(self.window_c >= 0.0) {
            return Err(CliError::Validation("window C must be nonnegative".into()));
        }
        if !(self.psi_hat_radius > 0.0) {
            return Err(CliError::Validation("psi hat radius must be positive".into()));
        }
        if self.eps_sweep.iter().any(|&e| !(e > 0.0)) {
            return Err(CliError::Validation("eps sweep entries must be positive".into()));
        }
        if !(self.grad_tol > 0.0) || !(self.verify_tolerance > 0.0) {
            return Err(CliError::Validation("tolerances must be positive".into()));
        }
        let masses = self.mass_range.masses();
        if masses.is_empty() {
            return Err(CliError::Validation("mass range is empty".into()));
        }
        Ok(())
    }

    /// Cache directory resolution: flag > LADDERLAB_CACHE > config > default.
    pub fn effective_cache_dir(&self) -> PathBuf {
        self.cache_dir
            .clone()
            .unwrap_or_else(|| self.out_dir.join("cache"))
    }
}

/// Canonical JSON: objects already iterate in key order (BTreeMap-backed);
/// every float is rendered with 17 significant digits, locale-independent.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_canonical(value, &mut out);
    out
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                out.push_str(&format_float17(n.as_f64().unwrap()));
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).unwrap());
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            for (i, (k, v)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).unwrap());
                out.push(':');
                write_canonical(v, out);
            }
            out.push('}');
        }
    }
}

/// Decimal float with 17 significant digits, exponent form.
pub fn format_float17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of the canonical form of a config subset.
pub fn subset_hash(value: &Value) -> String {
    sha256_hex(canonical_json(value).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_json_sorts_and_pins_floats() {
        let v = serde_json::json!({"b": 1.5, "a": [1, 2.0], "c": "x"});
        let s = canonical_json(&v);
        assert_eq!(
            s,
            "{\"a\":[1,2.0000000000000000e0],\"b\":1.5000000000000000e0,\"c\":\"x\"}"
        );
    }

    #[test]
    fn mass_range_parsing() {
        let r = MassRange::parse("50:200:10").unwrap();
        assert_eq!(r.masses().len(), 16);
        assert!(MassRange::parse("10:5:1").is_err());
        assert!(MassRange::parse("1:2").is_err());
    }

    #[test]
    fn default_config_is_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn metric_schema_round_trip() {
        let text = r#"{
            "n": 3,
            "surface": {"kind": "flat_torus", "lengths": [6.283185307179586, 6.283185307179586]},
            "lapse": {"kind": "cosine", "base": 1.0, "amplitude": 0.2, "axis": 0, "harmonic": 1},
            "shift": {"kind": "zero"},
            "h": {"kind": "identity"}
        }"#;
        let m: StandardStationaryMetric = serde_json::from_str(text).unwrap();
        m.validate().unwrap();
        let back = serde_json::to_value(&m).unwrap();
        assert!(back.get("h").is_some());
    }
}
