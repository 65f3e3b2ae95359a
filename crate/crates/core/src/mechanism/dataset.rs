use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Workers;
use crate::field::ControlField;
use crate::propagator::{ModulatedPropagator, QuantumState};
use crate::system::LevelSystem;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    #[serde(rename = "M")]
    pub m: f64,
    pub population: f64,
    pub sigma: f64,
}

/// Final target populations over a uniform grid of modulation factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulationDataset {
    /// Sampling increment ΔM.
    pub increment: f64,
    pub rows: Vec<Measurement>,
}

impl ModulationDataset {
    /// Infers ΔM from the first two rows.
    pub fn from_rows(rows: Vec<Measurement>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InsufficientData("a dataset needs at least two rows".into()));
        }
        let ds = ModulationDataset {
            increment: rows[1].m - rows[0].m,
            rows,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.increment > 0.0) {
            return Err(Error::Parse("increment must be positive".into()));
        }
        for (k, row) in self.rows.iter().enumerate() {
            if !row.m.is_finite() || !row.population.is_finite() || row.population < 0.0 || row.m < 0.0 {
                return Err(Error::Parse(format!("row {k} has an invalid M or population")));
            }
            if k > 0 {
                let gap = row.m - self.rows[k - 1].m;
                if (gap - self.increment).abs() > 1e-9 * self.increment.max(1.0) {
                    return Err(Error::Parse(format!("row {k}: M grid is not uniform with increment {}", self.increment)));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Grid index of a modulation value, M ≈ index·ΔM.
    pub fn index_of(&self, m: f64) -> i64 {
        (m / self.increment).round() as i64
    }
}

/// Modulation grid M = i·ΔM for i in `first..=last`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub increment: f64,
    pub first: usize,
    pub last: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl SweepConfig {
    /// ΔM = 0.01 over M ∈ [0.01, 1.60].
    pub fn standard(sigma: f64, seed: u64) -> Self {
        SweepConfig {
            increment: 0.01,
            first: 1,
            last: 160,
            sigma,
            seed,
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        (self.first..=self.last).map(|i| i as f64 * self.increment).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.increment > 0.0) || self.last < self.first {
            return Err(Error::InvalidConfig("sweep grid must be nonempty with positive increment".into()));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::InvalidConfig("sigma must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Target population under modulation `m`, multiplied by g ~ Normal(1, σ²)
/// and clamped at zero.
pub fn measure<R: Rng>(prop: &ModulatedPropagator, target: usize, m: f64, sigma: f64, rng: &mut R) -> Result<f64> {
    if !(m >= 0.0) {
        return Err(Error::InvalidConfig(format!("modulation must be nonnegative, got {m}")));
    }
    let noise = Normal::new(1.0, sigma).map_err(|e| Error::InvalidConfig(format!("noise level {sigma}: {e}")))?;
    let exact = prop.final_state(m)?.population(target);
    Ok((exact * noise.sample(rng)).max(0.0))
}

pub fn simulate_measurement<R: Rng>(
    sys: &LevelSystem,
    field: &ControlField,
    initial: &QuantumState,
    target: usize,
    m: f64,
    sigma: f64,
    rng: &mut R,
) -> Result<f64> {
    sys.check_site(target)?;
    let prop = ModulatedPropagator::new(sys, field, initial)?;
    measure(&prop, target, m, sigma, rng)
}

/// One measurement per grid point; point i draws its noise from stream i
/// of the seeded generator.
pub fn sweep(
    sys: &LevelSystem,
    field: &ControlField,
    initial: &QuantumState,
    target: usize,
    cfg: &SweepConfig,
    workers: Workers,
) -> Result<ModulationDataset> {
    cfg.validate()?;
    sys.check_site(target)?;
    let prop = ModulatedPropagator::new(sys, field, initial)?;
    let grid = cfg.grid();
    let rows = workers
        .map(grid.len(), |k| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream((cfg.first + k) as u64);
            measure(&prop, target, grid[k], cfg.sigma, &mut rng).map(|population| Measurement {
                m: grid[k],
                population,
                sigma: cfg.sigma,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(ModulationDataset {
        increment: cfg.increment,
        rows,
    })
}
