//! Study configuration: parsing with field-path diagnostics, validation
//! and construction of the core objects it describes.

use std::path::Path;

use corpuscle_core::concentration::{ConcentrationSchedule, StudyOptions};
use corpuscle_core::fields::{AnalyticPotentials, PolyScalarField, PotentialsDoc, ScalarDoc, Vec3};
use corpuscle_core::formfactor::{gaussian_profile, power_profile, RadialProfile};
use corpuscle_core::PhysicalConstants;
use serde::{Deserialize, Serialize};

/// Radial profile by name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "name", rename_all = "lowercase")]
pub enum ProfileConfig {
    #[default]
    Gaussian,
    /// `(1 + θ²)^{-p}`.
    Power { p: f64 },
}

impl ProfileConfig {
    pub fn build(&self) -> RadialProfile {
        match self {
            Self::Gaussian => gaussian_profile(),
            Self::Power { p } => power_profile(*p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub r0: [f64; 3],
    pub v0: [f64; 3],
    pub t0: f64,
    pub t1: f64,
    pub step: f64,
}

/// The single corpuscle used by `corpuscle-verify` and `conserve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpuscleConfig {
    pub a: f64,
    pub lambda: f64,
    /// Number of seeded sample points.
    pub samples: usize,
    /// Sample points lie within `radius_factor · a` of the centre.
    pub radius_factor: f64,
}

impl Default for CorpuscleConfig {
    fn default() -> Self {
        Self { a: 0.3, lambda: 0.0, samples: 200, radius_factor: 4.0 }
    }
}

/// Output file names, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Prefix of every file written.
    pub prefix: String,
    /// Also write a JSON summary next to each CSV.
    pub summary_json: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { prefix: String::new(), summary_json: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default = "PhysicalConstants::unit")]
    pub constants: PhysicalConstants,
    pub potentials: PotentialsDoc,
    #[serde(default)]
    pub profile: ProfileConfig,
    #[serde(default)]
    pub schedule: ConcentrationSchedule,
    pub initial_state: InitialState,
    /// Homogeneous cubic gauge term of the auxiliary potentials.
    #[serde(default)]
    pub p3: Option<ScalarDoc>,
    #[serde(default)]
    pub corpuscle: CorpuscleConfig,
    #[serde(default)]
    pub study: StudyOptions,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
}

/// A configuration problem, reported with exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl StudyConfig {
    /// Uniform `E = (0.1, 0, 0)`, `B = (0, 0, 1)` with `P₃ = 0.3 y₁y₂²`.
    pub fn builtin() -> Self {
        let pot = AnalyticPotentials::uniform(&Vec3::new(0.1, 0.0, 0.0), &Vec3::new(0.0, 0.0, 1.0));
        let p3 = PolyScalarField::monomial([1, 2, 0], corpuscle_core::fields::TimePoly::constant(0.3), Vec3::zeros());
        Self {
            constants: PhysicalConstants::unit(),
            potentials: pot.to_doc(),
            profile: ProfileConfig::Gaussian,
            schedule: ConcentrationSchedule::default(),
            initial_state: InitialState { r0: [0.2, -0.1, 0.3], v0: [0.0, 1.0, 0.2], t0: 0.0, t1: 1.0, step: 1e-4 },
            p3: Some(p3.to_doc()),
            corpuscle: CorpuscleConfig::default(),
            study: StudyOptions::default(),
            output: OutputConfig::default(),
            seed: 0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError(format!("config field `{path}`: {}", e.into_inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let field = |name: &str, e: corpuscle_core::Error| ConfigError(format!("config field `{name}`: {e}"));
        self.constants.validate().map_err(|e| field("constants", e))?;
        self.schedule.validate().map_err(|e| field("schedule", e))?;
        let s = &self.initial_state;
        if !s.r0.iter().chain(&s.v0).all(|v| v.is_finite()) {
            return Err(ConfigError("config field `initial_state`: r0 and v0 must be finite".into()));
        }
        if !(s.t1 > s.t0) || !s.t0.is_finite() || !s.t1.is_finite() {
            return Err(ConfigError(format!("config field `initial_state`: need t0 < t1, got [{}, {}]", s.t0, s.t1)));
        }
        if !(s.step > 0.0) || !s.step.is_finite() {
            return Err(ConfigError(format!("config field `initial_state.step`: must be positive, got {}", s.step)));
        }
        let c = &self.corpuscle;
        if !(c.a > 0.0) || !c.a.is_finite() || !c.lambda.is_finite() || !(c.radius_factor > 0.0) {
            return Err(ConfigError("config field `corpuscle`: a and radius_factor must be positive".into()));
        }
        if let ProfileConfig::Power { p } = self.profile {
            if !(p > 0.75) || !p.is_finite() {
                return Err(ConfigError(format!("config field `profile.p`: need p > 3/4 for finite charge, got {p}")));
            }
        }
        if self.study.n_times < 2 {
            return Err(ConfigError("config field `study.n_times`: need at least 2".into()));
        }
        self.potentials().map_err(|e| field("potentials", e))?;
        self.p3().map_err(|e| field("p3", e))?;
        Ok(())
    }

    pub fn potentials(&self) -> corpuscle_core::Result<AnalyticPotentials> {
        AnalyticPotentials::from_doc(&self.potentials)
    }

    pub fn p3(&self) -> corpuscle_core::Result<PolyScalarField> {
        let p = match &self.p3 {
            Some(doc) => PolyScalarField::from_doc(doc)?,
            None => PolyScalarField::zero(Vec3::zeros()),
        };
        corpuscle_core::fields::CubicGauge::new(&p)?;
        Ok(p)
    }

    pub fn r0(&self) -> Vec3 {
        Vec3::from(self.initial_state.r0)
    }

    pub fn v0(&self) -> Vec3 {
        Vec3::from(self.initial_state.v0)
    }
}
