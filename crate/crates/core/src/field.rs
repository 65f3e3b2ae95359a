//! Time-gridded control fields.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How carrier envelopes behave inside one grid step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Linear between the two bracketing samples. Second order in the step.
    #[default]
    Linear,
    /// Held at the left-hand sample for the whole step.
    Frozen,
}

/// One carrier term α·A(t)·e^{i(φ(t) + ω_c t)}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Carrier {
    /// A(t_p), V/Å.
    pub amplitude: Vec<f64>,
    /// φ(t_p), rad.
    pub phase: Vec<f64>,
    /// ω_c, fs⁻¹.
    pub frequency: f64,
    pub weight: Complex64,
}

impl Carrier {
    /// Complex envelope α·A·e^{iφ} at grid point `p`.
    pub fn envelope(&self, p: usize) -> Complex64 {
        self.weight * Complex64::from_polar(self.amplitude[p], self.phase[p])
    }
}

/// E(t_p) = M · Re{Σ_i α_i A_i(t_p) e^{i(φ_i(t_p) + ω_i^c t_p)}} on the grid t_p = p·ε.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlField {
    /// Grid spacing ε, fs.
    pub step: f64,
    pub carriers: Vec<Carrier>,
    #[serde(default = "unit")]
    pub modulation: f64,
    #[serde(default)]
    pub interpolation: Interpolation,
}

fn unit() -> f64 {
    1.0
}

impl ControlField {
    pub fn new(step: f64, carriers: Vec<Carrier>) -> Result<Self> {
        let field = ControlField {
            step,
            carriers,
            modulation: 1.0,
            interpolation: Interpolation::default(),
        };
        field.validate()?;
        Ok(field)
    }

    /// A raw sampled field: one carrier with ω_c = 0 and φ ≡ 0.
    pub fn sampled(step: f64, samples: Vec<f64>) -> Result<Self> {
        let phase = vec![0.0; samples.len()];
        Self::new(
            step,
            vec![Carrier {
                amplitude: samples,
                phase,
                frequency: 0.0,
                weight: Complex64::new(1.0, 0.0),
            }],
        )
    }

    /// Samples `f` on `steps + 1` grid points spanning `[0, steps·step]`.
    pub fn from_fn(step: f64, steps: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::sampled(step, (0..=steps).map(|p| f(p as f64 * step)).collect())
    }

    pub fn zero(step: f64, steps: usize) -> Result<Self> {
        Self::sampled(step, vec![0.0; steps + 1])
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidField(format!("step must be positive, got {}", self.step)));
        }
        if !self.modulation.is_finite() || self.modulation < 0.0 {
            return Err(Error::InvalidField(format!(
                "modulation must be finite and nonnegative, got {}",
                self.modulation
            )));
        }
        let first = self
            .carriers
            .first()
            .ok_or_else(|| Error::InvalidField("field has no carriers".into()))?;
        let len = first.amplitude.len();
        if len < 2 {
            return Err(Error::InvalidField("need at least two grid points".into()));
        }
        for (i, c) in self.carriers.iter().enumerate() {
            if c.amplitude.len() != len || c.phase.len() != len {
                return Err(Error::InvalidField(format!(
                    "carrier {i} envelope length differs from grid length {len}"
                )));
            }
            let finite = c.amplitude.iter().chain(&c.phase).all(|x| x.is_finite())
                && c.frequency.is_finite()
                && c.weight.re.is_finite()
                && c.weight.im.is_finite();
            if !finite {
                return Err(Error::InvalidField(format!("carrier {i} has non-finite entries")));
            }
        }
        Ok(())
    }

    /// Number of grid intervals N (the grid has N + 1 points).
    pub fn steps(&self) -> usize {
        self.carriers[0].amplitude.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.steps() as f64 * self.step
    }

    pub fn time(&self, p: usize) -> f64 {
        p as f64 * self.step
    }

    pub fn with_modulation(&self, modulation: f64) -> Self {
        ControlField {
            modulation,
            ..self.clone()
        }
    }

    /// True when the field is a single raw carrier (ω_c = 0, φ ≡ 0, α = 1).
    pub fn is_raw(&self) -> bool {
        self.carriers.len() == 1 && {
            let c = &self.carriers[0];
            c.frequency == 0.0 && c.weight == Complex64::new(1.0, 0.0) && c.phase.iter().all(|&x| x == 0.0)
        }
    }

    /// Modulated field value E(t_p).
    pub fn value(&self, p: usize) -> f64 {
        let t = self.time(p);
        let sum: f64 = self
            .carriers
            .iter()
            .map(|c| (c.envelope(p) * Complex64::from_polar(1.0, c.frequency * t)).re)
            .sum();
        self.modulation * sum
    }

    pub fn values(&self) -> Vec<f64> {
        (0..=self.steps()).map(|p| self.value(p)).collect()
    }

    /// Collapses all carriers into one raw sampled carrier at the same grid.
    pub fn to_sampled(&self) -> ControlField {
        let mut out = ControlField::sampled(self.step, self.values()).expect("validated grid");
        out.interpolation = self.interpolation;
        out
    }

    /// Fluence-like sum ε·Σ_p E(t_p)².
    pub fn energy(&self) -> f64 {
        self.step * self.values().iter().map(|e| e * e).sum::<f64>()
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let field: ControlField = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        field.validate()?;
        Ok(field)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}
