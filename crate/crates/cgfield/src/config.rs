//! Run configuration: TOML with one section per verification suite.
//!
//! Every field has a default matching the shipped verification settings,
//! so an empty (or absent) config file runs the full standard suites. All
//! tolerances must be positive; `tol_scale` multiplies every tolerance at
//! run time (exact-arithmetic checks are unaffected — they either hold or
//! they do not).

use serde::Deserialize;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config invalid: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    GammaSelftest,
    Manifold,
    Region,
    Fields,
    Appendix,
    All,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::GammaSelftest => "gamma-selftest",
            Command::Manifold => "manifold",
            Command::Region => "region",
            Command::Fields => "fields",
            Command::Appendix => "appendix",
            Command::All => "all",
        }
    }
}

fn default_seed() -> u64 {
    42
}

fn default_tol_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ManifoldConfig {
    /// Central-difference step for the geometry operators.
    pub h: f64,
    /// Step for the third-derivative Ricci-identity check.
    pub identity_h: f64,
    /// Number of random Hermitian polynomial metrics for the route check.
    pub random_metrics: usize,
    /// Amplitude of the random polynomial coefficients.
    pub metric_amplitude: f64,
    pub flat_tol: f64,
    pub route_tol: f64,
    pub antisymmetry_tol: f64,
    pub compatibility_tol: f64,
    pub hermitian_tol: f64,
    pub ricci_identity_tol: f64,
    pub det_identity_tol: f64,
}

impl Default for ManifoldConfig {
    fn default() -> Self {
        Self {
            h: 1e-3,
            identity_h: 1e-2,
            random_metrics: 20,
            metric_amplitude: 0.2,
            flat_tol: 1e-12,
            route_tol: 1e-6,
            antisymmetry_tol: 1e-5,
            compatibility_tol: 1e-6,
            hermitian_tol: 1e-7,
            ricci_identity_tol: 1e-4,
            det_identity_tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegionConfig {
    /// Coulomb sweep bounds and step (natural units, charge 1).
    pub sweep_start: f64,
    pub sweep_stop: f64,
    pub sweep_step: f64,
    /// Boundary-membership tolerance for classification.
    pub boundary_tol: f64,
    /// Bisection tolerance for locating the bound boundary radius.
    pub boundary_locate_tol: f64,
    /// Number of random potential samples for the determinant oracle.
    pub det_samples: usize,
    pub det_rel_tol: f64,
    /// Radius at which the sweep must sit within 1e-3 of the free boundary.
    pub far_radius: f64,
    pub rank_tol: f64,
}

impl Default for RegionConfig {
    fn default() -> Self {
        Self {
            sweep_start: 0.5,
            sweep_stop: 40.0,
            sweep_step: 0.25,
            boundary_tol: 1e-6,
            boundary_locate_tol: 1e-8,
            det_samples: 1000,
            det_rel_tol: 1e-12,
            far_radius: 32.0,
            rank_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldsConfig {
    /// Grid points per axis for the 4-D wave grids.
    pub grid_n: usize,
    /// Grid spacing (all axes).
    pub grid_h: f64,
    pub wave_amp: f64,
    pub wave_k: f64,
    pub uniform_b: f64,
    pub pure_e: f64,
    /// Coulomb Poisson study base spacing (halved for the fine pass).
    pub poisson_h: f64,
    pub gauge_tol: f64,
    /// |Avec|^2 floor for the mass-ratio extraction.
    pub mass_a2_threshold: f64,
}

impl Default for FieldsConfig {
    fn default() -> Self {
        Self {
            grid_n: 13,
            grid_h: 0.02,
            wave_amp: 0.8,
            wave_k: 1.1,
            uniform_b: 1.5,
            pure_e: 1.2,
            poisson_h: 0.1,
            gauge_tol: 1e-6,
            mass_a2_threshold: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AppendixConfig {
    /// Path nodes (odd for Simpson).
    pub points: usize,
    pub quadrature: String,
    pub tol: f64,
    pub path_start: [f64; 4],
    pub path_end: [f64; 4],
    /// Step for the finite-difference quadratic-Dirac record.
    pub fd_h: f64,
    /// Which catalog field pairings to verify: `constant`, `gaussian`
    /// or `both`.
    pub cases: String,
}

impl Default for AppendixConfig {
    fn default() -> Self {
        Self {
            points: 201,
            quadrature: "simpson".to_string(),
            tol: 1e-4,
            path_start: [-0.8, -0.5, 0.3, -0.2],
            path_end: [0.9, 0.6, -0.4, 0.5],
            fd_h: 1e-3,
            cases: "both".to_string(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Output directory; `--out` overrides.
    pub dir: Option<PathBuf>,
}

/// Full run configuration. The command comes from the CLI; everything else
/// lives here.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub tol_scale: f64,
    pub output: OutputConfig,
    pub manifold: ManifoldConfig,
    pub region: RegionConfig,
    pub fields: FieldsConfig,
    pub appendix: AppendixConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            tol_scale: default_tol_scale(),
            output: OutputConfig::default(),
            manifold: ManifoldConfig::default(),
            region: RegionConfig::default(),
            fields: FieldsConfig::default(),
            appendix: AppendixConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let cfg = match path {
            None => Self::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                    path: p.display().to_string(),
                    source,
                })?;
                toml::from_str(&text)?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("tol_scale", self.tol_scale),
            ("manifold.h", self.manifold.h),
            ("manifold.identity_h", self.manifold.identity_h),
            ("manifold.flat_tol", self.manifold.flat_tol),
            ("manifold.route_tol", self.manifold.route_tol),
            ("manifold.antisymmetry_tol", self.manifold.antisymmetry_tol),
            ("manifold.compatibility_tol", self.manifold.compatibility_tol),
            ("manifold.hermitian_tol", self.manifold.hermitian_tol),
            ("manifold.ricci_identity_tol", self.manifold.ricci_identity_tol),
            ("manifold.det_identity_tol", self.manifold.det_identity_tol),
            ("region.sweep_step", self.region.sweep_step),
            ("region.boundary_tol", self.region.boundary_tol),
            ("region.boundary_locate_tol", self.region.boundary_locate_tol),
            ("region.det_rel_tol", self.region.det_rel_tol),
            ("region.rank_tol", self.region.rank_tol),
            ("fields.grid_h", self.fields.grid_h),
            ("fields.poisson_h", self.fields.poisson_h),
            ("fields.gauge_tol", self.fields.gauge_tol),
            ("fields.mass_a2_threshold", self.fields.mass_a2_threshold),
            ("appendix.tol", self.appendix.tol),
            ("appendix.fd_h", self.appendix.fd_h),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ConfigError::Invalid(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.region.sweep_start <= 0.0 || self.region.sweep_stop <= self.region.sweep_start {
            return Err(ConfigError::Invalid(format!(
                "region sweep must satisfy 0 < start < stop, got [{}, {}]",
                self.region.sweep_start, self.region.sweep_stop
            )));
        }
        if self.manifold.random_metrics == 0 || self.region.det_samples == 0 {
            return Err(ConfigError::Invalid(
                "sample counts must be nonzero".to_string(),
            ));
        }
        if self.fields.grid_n < 5 {
            return Err(ConfigError::Invalid(format!(
                "fields.grid_n must be at least 5, got {}",
                self.fields.grid_n
            )));
        }
        if !matches!(self.appendix.quadrature.as_str(), "simpson" | "trapezoid") {
            return Err(ConfigError::Invalid(format!(
                "appendix.quadrature must be `simpson` or `trapezoid`, got `{}`",
                self.appendix.quadrature
            )));
        }
        if !matches!(self.appendix.cases.as_str(), "constant" | "gaussian" | "both") {
            return Err(ConfigError::Invalid(format!(
                "appendix.cases must be `constant`, `gaussian` or `both`, got `{}`",
                self.appendix.cases
            )));
        }
        // the convergence study halves the node count, which must preserve
        // Simpson parity: points = 4k + 1
        if self.appendix.points < 5 || self.appendix.points % 4 != 1 {
            return Err(ConfigError::Invalid(format!(
                "appendix.points must be 4k + 1 and >= 5 (refinement parity), got {}",
                self.appendix.points
            )));
        }
        Ok(())
    }

    pub fn with_overrides(
        mut self,
        seed: Option<u64>,
        tol_scale: Option<f64>,
        out_dir: Option<PathBuf>,
    ) -> Result<Self, ConfigError> {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(t) = tol_scale {
            self.tol_scale = t;
        }
        if let Some(d) = out_dir {
            self.output.dir = Some(d);
        }
        self.validate()?;
        Ok(self)
    }
}
