//! Section/key run manifest (TOML syntax) with defaults and validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BoxFace, StaggeredGrid};
use crate::physics::{
    CutoffMode, ForcingPreset, InitialFieldPreset, MagneticBc, ModelConfig, SolverSettings, Theta0Preset,
    VelocityPreset,
};
use crate::rothe::ManufacturedPreset;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    #[serde(default = "unit")]
    pub lx: f64,
    #[serde(default = "unit")]
    pub ly: f64,
    #[serde(default = "unit")]
    pub lz: f64,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    #[serde(default = "default_gamma1")]
    pub gamma1_faces: Vec<BoxFace>,
}

fn unit() -> f64 {
    1.0
}

fn default_gamma1() -> Vec<BoxFace> {
    vec![BoxFace::ZMinus]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_final: f64,
    pub tau: f64,
}

/// Model parameters; every key is optional and defaults to [`ModelConfig::default`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub lambda0: f64,
    pub lambda1: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    #[serde(rename = "R_alpha")]
    pub r_alpha: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub zeta: f64,
    pub omega: f64,
    pub epsilon: f64,
    pub q0: f64,
    pub q1: f64,
    pub theta0_preset: Theta0Preset,
    pub f_preset: ForcingPreset,
    #[serde(rename = "U_preset")]
    pub u_preset: VelocityPreset,
    #[serde(rename = "B0_preset")]
    pub b0_preset: InitialFieldPreset,
    pub cutoff_mode: CutoffMode,
    pub magnetic_bc: MagneticBc,
}

impl Default for ModelSection {
    fn default() -> Self {
        let c = ModelConfig::default();
        ModelSection {
            lambda0: c.lambda0,
            lambda1: c.lambda1,
            big_lambda: c.big_lambda,
            r_alpha: c.r_alpha,
            gamma: c.gamma,
            kappa: c.kappa,
            zeta: c.zeta,
            omega: c.omega,
            epsilon: c.epsilon,
            q0: c.q0,
            q1: c.q1,
            theta0_preset: c.theta0,
            f_preset: c.f,
            u_preset: c.u,
            b0_preset: c.b0,
            cutoff_mode: c.cutoff_mode,
            magnetic_bc: c.magnetic_bc,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub tol_lin: f64,
    pub tol_newton: f64,
    pub max_iter: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverSettings::default();
        SolverSection {
            tol_lin: s.tol_lin,
            tol_newton: s.tol_newton,
            max_iter: s.max_iter,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Write every `csv_every`-th step to the diagnostics CSV.
    pub csv_every: usize,
    pub snapshot_times: Vec<f64>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
            csv_every: 1,
            snapshot_times: Vec::new(),
        }
    }
}

/// Study parameters. Empty lists select the built-in defaults of each study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySection {
    pub tau_list: Vec<f64>,
    pub eps_list: Vec<f64>,
    pub delta_list: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub manufactured: ManufacturedPreset,
}

impl Default for StudySection {
    fn default() -> Self {
        StudySection {
            tau_list: Vec::new(),
            eps_list: Vec::new(),
            delta_list: Vec::new(),
            trials: 100,
            seed: 0,
            manufactured: ManufacturedPreset::default(),
        }
    }
}

impl StudySection {
    pub fn tau_list_or_default(&self, t_final: f64) -> Vec<f64> {
        if self.tau_list.is_empty() {
            (3..8).map(|k| t_final / f64::from(1u32 << k)).collect()
        } else {
            self.tau_list.clone()
        }
    }

    pub fn eps_list_or_default(&self) -> Vec<f64> {
        if self.eps_list.is_empty() {
            vec![0.1, 0.05, 0.025, 0.0125]
        } else {
            self.eps_list.clone()
        }
    }

    pub fn delta_list_or_default(&self) -> Vec<f64> {
        if self.delta_list.is_empty() {
            vec![1e-3, 5e-4, 2.5e-4]
        } else {
            self.delta_list.clone()
        }
    }
}

/// A fully validated configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub domain: DomainSection,
    pub time: TimeSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub study: StudySection,
}

impl RunManifest {
    /// Parses and validates manifest text.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let m: RunManifest = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn extents(&self) -> [f64; 3] {
        [self.domain.lx, self.domain.ly, self.domain.lz]
    }

    pub fn cells(&self) -> [usize; 3] {
        [self.domain.nx, self.domain.ny, self.domain.nz]
    }

    pub fn model_config(&self) -> ModelConfig {
        let m = &self.model;
        ModelConfig {
            lambda0: m.lambda0,
            lambda1: m.lambda1,
            big_lambda: m.big_lambda,
            r_alpha: m.r_alpha,
            gamma: m.gamma,
            kappa: m.kappa,
            zeta: m.zeta,
            omega: m.omega,
            epsilon: m.epsilon,
            tau: self.time.tau,
            t_final: self.time.t_final,
            q0: m.q0,
            q1: m.q1,
            theta0: m.theta0_preset.clone(),
            f: m.f_preset.clone(),
            u: m.u_preset.clone(),
            b0: m.b0_preset.clone(),
            cutoff_mode: m.cutoff_mode,
            magnetic_bc: m.magnetic_bc,
            solver: SolverSettings {
                tol_lin: self.solver.tol_lin,
                tol_newton: self.solver.tol_newton,
                max_iter: self.solver.max_iter,
            },
        }
    }

    pub fn grid(&self) -> Result<StaggeredGrid> {
        StaggeredGrid::build(self.extents(), self.cells(), &self.domain.gamma1_faces)
    }

    /// Step indices of the configured snapshot times.
    pub fn snapshot_steps(&self) -> Result<Vec<usize>> {
        let tau = self.time.tau;
        let (n_steps, _) = self.model_config().step_count();
        self.output
            .snapshot_times
            .iter()
            .map(|&t| {
                let k = (t / tau).round();
                if !(t >= 0.0) || (k * tau - t).abs() > 1e-9 * tau.max(t) || k as usize > n_steps {
                    Err(Error::Config(format!(
                        "output.snapshot_times: {t} is not a step time k·tau within [0, {}]",
                        n_steps as f64 * tau
                    )))
                } else {
                    Ok(k as usize)
                }
            })
            .collect()
    }

    /// Checks every constraint before any computation or output.
    pub fn validate(&self) -> Result<()> {
        self.model_config().validate(self.extents())?;
        self.grid().map_err(|e| match e {
            Error::Construction(m) => Error::Config(format!("domain: {m}")),
            other => other,
        })?;
        if self.output.csv_every == 0 {
            return Err(Error::Config("output.csv_every must be ≥ 1".into()));
        }
        self.snapshot_steps()?;
        let s = &self.study;
        for (key, list) in [
            ("tau_list", &s.tau_list),
            ("eps_list", &s.eps_list),
            ("delta_list", &s.delta_list),
        ] {
            if let Some(v) = list.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::Config(format!("study.{key}: entry {v} must be finite and ≥ 0")));
            }
        }
        if s.eps_list.iter().any(|&e| e <= 0.0 || e >= 1.0) {
            return Err(Error::Config("study.eps_list: entries must lie in (0,1)".into()));
        }
        if s.tau_list.iter().any(|&t| t <= 0.0) {
            return Err(Error::Config("study.tau_list: entries must be > 0".into()));
        }
        if s.trials == 0 {
            return Err(Error::Config("study.trials must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Reads and validates a manifest file.
pub fn parse_config(path: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?;
    RunManifest::from_toml_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[domain]\nnx = 3\nny = 3\nnz = 3\n[time]\nt_final = 1.0\ntau = 0.25\n";

    #[test]
    fn minimal_file_gets_defaults() {
        let m = RunManifest::from_toml_str(MINIMAL).unwrap();
        assert_eq!(m.model.epsilon, 0.01);
        assert_eq!(m.solver.tol_lin, 1e-10);
        assert_eq!(m.domain.gamma1_faces, vec![BoxFace::ZMinus]);
    }

    #[test]
    fn missing_mandatory_key_is_named() {
        let err =
            RunManifest::from_toml_str("[domain]\nnx = 3\nny = 3\n[time]\nt_final = 1.0\ntau = 0.25\n").unwrap_err();
        assert!(err.to_string().contains("nz"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = format!("{MINIMAL}[model]\nlambda2 = 1.0\n");
        let err = RunManifest::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("lambda2"), "{err}");
    }

    #[test]
    fn constraint_violations() {
        let text = format!("{MINIMAL}[model]\nlambda0 = 0.0\n");
        let err = RunManifest::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("lambda0"), "{err}");
        let text = MINIMAL.replace(
            "nz = 3\n",
            "nz = 3\ngamma1_faces = [\"x-\", \"x+\", \"y-\", \"y+\", \"z-\", \"z+\"]\n",
        );
        let err = RunManifest::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("Γ₂"), "{err}");
        let text = format!("{MINIMAL}[output]\nsnapshot_times = [0.3]\n");
        assert!(RunManifest::from_toml_str(&text).is_err());
        let text = MINIMAL.replace("tau = 0.25", "tau = \"x\"");
        assert!(RunManifest::from_toml_str(&text).is_err());
    }

    #[test]
    fn presets_parse_from_inline_tables() {
        let text = format!(
            "{MINIMAL}[model]\nf_preset = {{ kind = \"gaussian_blob\", amplitude = 2.0, width = 0.3 }}\nB0_preset = {{ kind = \"zero\" }}\n"
        );
        let m = RunManifest::from_toml_str(&text).unwrap();
        assert_eq!(m.model.b0_preset, InitialFieldPreset::Zero);
        assert!(matches!(m.model.f_preset, ForcingPreset::GaussianBlob { amplitude, .. } if amplitude == 2.0));
    }

    #[test]
    fn serialization_round_trip() {
        let text = format!(
            "{MINIMAL}[output]\nsnapshot_times = [0.5, 1.0]\n[study]\neps_list = [0.1, 0.05, 0.025]\nseed = 9\n"
        );
        let m = RunManifest::from_toml_str(&text).unwrap();
        let again = RunManifest::from_toml_str(&m.to_toml_string().unwrap()).unwrap();
        assert_eq!(m, again);
    }
}
