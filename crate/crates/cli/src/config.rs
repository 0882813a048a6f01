// Copyright 2026 Lightcone Lab Contributors
// SPDX-License-Identifier: Apache-2.0

//! TOML experiment configuration and its validation.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use lightcone_core::bounds::InteractionProfile;
use lightcone_core::fock::{MAX_CENTERS, MAX_MODES};
use lightcone_core::grid::{Grid, Normalization, SmearingFunction};
use lightcone_core::onebody::{light_cone_radius, Potential, DENSE_EIG_CAP};
use lightcone_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    OnebodyScan,
    PropagationNorm,
    ManybodyScan,
    CondexpCheck,
    ConstantsReport,
    Clustering,
    VolumeConvergence,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        Self::OnebodyScan,
        Self::PropagationNorm,
        Self::ManybodyScan,
        Self::CondexpCheck,
        Self::ConstantsReport,
        Self::Clustering,
        Self::VolumeConvergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::OnebodyScan => "onebody-scan",
            Self::PropagationNorm => "propagation-norm",
            Self::ManybodyScan => "manybody-scan",
            Self::CondexpCheck => "condexp-check",
            Self::ConstantsReport => "constants-report",
            Self::Clustering => "clustering",
            Self::VolumeConvergence => "volume-convergence",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub points: usize,
    pub length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { dim: 1, points: 512, length: 128.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kappa: f64,
    /// zero, constant, cosine or gaussian
    pub potential: String,
    pub potential_amplitude: f64,
    /// cosine wavelength or gaussian width; 0 selects the box length for cosine
    pub potential_width: f64,
    pub sigma: f64,
    pub normalization: String,
    pub n_v: i64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kappa: 0.5,
            potential: "zero".into(),
            potential_amplitude: 0.0,
            potential_width: 0.0,
            sigma: 1.0,
            normalization: "l1".into(),
            n_v: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InteractionConfig {
    /// zero, gaussian or power
    pub profile: String,
    pub strength: f64,
    pub range: f64,
    pub exponent: i64,
    pub n_w: i64,
}

impl Default for InteractionConfig {
    fn default() -> Self {
        Self { profile: "zero".into(), strength: 0.0, range: 1.0, exponent: 4, n_w: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundConfig {
    pub n: i64,
    pub delta: f64,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self { n: 2, delta: 0.5 }
    }
}

/// Sweep lists; each experiment uses the subset it needs, as a cross product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub t: Vec<f64>,
    pub distance: Vec<f64>,
    pub energy: Vec<f64>,
    pub alpha: Vec<f64>,
    pub inner_radius: f64,
    /// clustering imaginary times
    pub b: Vec<f64>,
    /// fit distances for the constants
    pub fit_distance: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            t: vec![0.0, 0.5, 1.0],
            distance: vec![2.0, 4.0, 8.0],
            energy: vec![4.0],
            alpha: vec![2.0],
            inner_radius: 2.0,
            b: vec![0.0, 0.5, 1.0, 2.0],
            fit_distance: vec![0.0, 1.0, 2.0, 4.0, 6.0, 8.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FockConfig {
    pub modes: usize,
    pub mode_spacing: f64,
    pub mode_sigma: f64,
    pub centers: usize,
    pub center_spacing: f64,
    pub weight: f64,
    /// position of the first probe function
    pub probe: f64,
    /// nested interaction half-widths for the volume experiment
    pub regions: Vec<f64>,
}

impl Default for FockConfig {
    fn default() -> Self {
        Self {
            modes: 8,
            mode_spacing: 2.0,
            mode_sigma: 1.0,
            centers: 6,
            center_spacing: 2.0,
            weight: 2.0,
            probe: -5.0,
            regions: vec![1.0, 3.0, 5.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CondexpConfig {
    /// modes of the random-operator checks
    pub modes: usize,
    pub depth: usize,
    pub samples: usize,
    /// half-width of the region X
    pub x_half_width: f64,
    pub x_mode_radius: f64,
    /// centers of the compact modes outside X
    pub outer_centers: Vec<f64>,
    pub outer_radius: f64,
    pub c_x: Vec<f64>,
    pub c_j: f64,
    pub n: i64,
}

impl Default for CondexpConfig {
    fn default() -> Self {
        Self {
            modes: 4,
            depth: 2,
            samples: 50,
            x_half_width: 4.0,
            x_mode_radius: 1.5,
            outer_centers: vec![6.0, 8.5, 12.5],
            outer_radius: 1.0,
            c_x: vec![0.5, 1.0, 2.0],
            c_j: 1.0,
            n: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: Option<ExperimentKind>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub interaction: InteractionConfig,
    #[serde(default)]
    pub bound: BoundConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub fock: FockConfig,
    #[serde(default)]
    pub condexp: CondexpConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            seed: 0,
            grid: GridConfig::default(),
            model: ModelConfig::default(),
            interaction: InteractionConfig::default(),
            bound: BoundConfig::default(),
            sweep: SweepConfig::default(),
            fock: FockConfig::default(),
            condexp: CondexpConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.dim, self.grid.points, self.grid.length)
    }

    pub fn potential(&self) -> Result<Potential> {
        let m = &self.model;
        match m.potential.as_str() {
            "zero" => Ok(Potential::Zero),
            "constant" => Ok(Potential::Constant { value: m.potential_amplitude }),
            "cosine" => Ok(Potential::Cosine {
                amplitude: m.potential_amplitude,
                wavelength: (m.potential_width > 0.0).then_some(m.potential_width),
            }),
            "gaussian" => Ok(Potential::Gaussian { depth: m.potential_amplitude, width: m.potential_width }),
            other => Err(Error::Config(format!("unknown potential {other:?}"))),
        }
    }

    pub fn interaction(&self) -> Result<InteractionProfile> {
        let w = &self.interaction;
        match w.profile.as_str() {
            "zero" => Ok(InteractionProfile::Zero),
            "gaussian" => Ok(InteractionProfile::Gaussian { strength: w.strength, range: w.range }),
            "power" => Ok(InteractionProfile::Power { strength: w.strength, exponent: w.exponent }),
            other => Err(Error::Config(format!("unknown interaction profile {other:?}"))),
        }
    }

    pub fn smearing(&self) -> Result<SmearingFunction> {
        let normalization = Normalization::from_str(&self.model.normalization)?;
        match SmearingFunction::gaussian(self.model.sigma)? {
            SmearingFunction::Gaussian { sigma, .. } => Ok(SmearingFunction::Gaussian { sigma, normalization }),
            other => Ok(other),
        }
    }

    /// Number of sweep points the experiment will evaluate.
    pub fn point_count(&self, kind: ExperimentKind) -> usize {
        let s = &self.sweep;
        match kind {
            ExperimentKind::OnebodyScan => s.t.len() * s.distance.len(),
            ExperimentKind::PropagationNorm => s.energy.len() * s.alpha.len() * s.distance.len() * s.t.len(),
            ExperimentKind::ManybodyScan => s.t.len() * s.distance.len(),
            ExperimentKind::CondexpCheck => self.condexp.samples + self.condexp.c_x.len(),
            ExperimentKind::ConstantsReport => s.t.len() * s.fit_distance.len(),
            ExperimentKind::Clustering => s.b.len() * self.fock.modes,
            ExperimentKind::VolumeConvergence => s.t.len() * self.fock.regions.len(),
        }
    }

    /// Every reason the configuration cannot run; empty means runnable.
    pub fn validate(&self, kind: ExperimentKind) -> Vec<String> {
        let mut out = Vec::new();
        let b = &self.bound;
        if b.n < 1 {
            out.push(format!("n = {} must be at least 1", b.n));
        }
        if 2 * b.n > self.model.n_v {
            out.push(format!("n ≤ n_V/2 violated: n = {}, n_V = {}", b.n, self.model.n_v));
        }
        if b.n > self.interaction.n_w {
            out.push(format!("n ≤ n_W violated: n = {}, n_W = {}", b.n, self.interaction.n_w));
        }
        if !(b.delta > 0.0) {
            out.push(format!("delta = {} must be positive", b.delta));
        }
        let grid = match self.grid() {
            Ok(g) => g,
            Err(e) => {
                out.push(format!("grid: {e}"));
                return out;
            }
        };
        let h = grid.spacing();
        if !(self.model.sigma >= 2.0 * h) {
            out.push(format!("resolution: sigma = {} below 2h = {}", self.model.sigma, 2.0 * h));
        }
        if !(self.model.kappa > 0.0) {
            out.push(format!("kappa = {} must be positive", self.model.kappa));
        }
        if let Err(e) = self.potential() {
            out.push(e.to_string());
        }
        if let Err(e) = self.interaction() {
            out.push(e.to_string());
        }
        if let Err(e) = Normalization::from_str(&self.model.normalization) {
            out.push(e.to_string());
        }
        let s = &self.sweep;
        let mut need = |name: &str, len: usize| {
            if len == 0 {
                out.push(format!("sweep list {name} is empty"));
            }
        };
        use ExperimentKind::*;
        match kind {
            OnebodyScan | ManybodyScan => {
                need("t", s.t.len());
                need("distance", s.distance.len());
            }
            PropagationNorm => {
                need("t", s.t.len());
                need("distance", s.distance.len());
                need("energy", s.energy.len());
                need("alpha", s.alpha.len());
            }
            ConstantsReport => {
                need("t", s.t.len());
                need("fit_distance", s.fit_distance.len());
            }
            Clustering => need("b", s.b.len()),
            VolumeConvergence => {
                need("t", s.t.len());
                need("regions", self.fock.regions.len());
            }
            CondexpCheck => need("c_x", self.condexp.c_x.len()),
        }
        if kind == OnebodyScan {
            let t_max = s.t.iter().fold(0.0f64, |a, &t| a.max(t.abs()));
            let d_max = s.distance.iter().fold(0.0f64, |a, &d| a.max(d));
            let reach = d_max + 1.0 + light_cone_radius(t_max, b.n.max(1), b.delta);
            if reach > grid.length() / 2.0 {
                out.push(format!(
                    "box too small: distance plus light-cone horizon {reach:.3} exceeds L/2 = {}",
                    grid.length() / 2.0
                ));
            }
        }
        if matches!(kind, OnebodyScan | ManybodyScan | ConstantsReport | Clustering | VolumeConvergence)
            && grid.len() > DENSE_EIG_CAP
        {
            out.push(format!("grid of {} points exceeds the dense eigensolver cap {DENSE_EIG_CAP}", grid.len()));
        }
        if matches!(kind, ManybodyScan | Clustering | VolumeConvergence) {
            let f = &self.fock;
            if f.modes < 2 || f.modes > MAX_MODES {
                out.push(format!("modes = {} outside 2..={MAX_MODES}", f.modes));
            }
            if f.centers > MAX_CENTERS {
                out.push(format!("centers = {} above {MAX_CENTERS}", f.centers));
            }
            if !(f.mode_sigma >= 2.0 * h) {
                out.push(format!("resolution: mode_sigma = {} below 2h = {}", f.mode_sigma, 2.0 * h));
            }
        }
        if kind == CondexpCheck {
            let c = &self.condexp;
            if c.modes == 0 || c.modes > 8 {
                out.push(format!("condexp modes = {} outside 1..=8", c.modes));
            }
            if c.depth > c.modes {
                out.push(format!("depth {} exceeds {} modes", c.depth, c.modes));
            }
            if c.outer_centers.len() + 4 > MAX_MODES {
                out.push(format!("{} outer modes leave no room for evolved residuals", c.outer_centers.len()));
            }
        }
        out
    }
}
