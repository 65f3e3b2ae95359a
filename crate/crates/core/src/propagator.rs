//! Second-order interaction-picture propagator.
//!
//! Each grid interval (t_p, t_{p+1}) contributes U_p = exp(−i G_p) with
//! G_p = ∫ H(s) ds evaluated in closed form for every carrier, so the
//! fast e^{iω_nm t} phases need not be resolved by the grid. The dropped
//! time ordering leaves an O(ε³) commutator error per step.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ControlField, Interpolation};
use crate::linalg::{hermiticity_defect, CMatrix, CVector, HermitianEigen, I};
use crate::system::{LevelSystem, COUPLING_PER_FIELD_DIPOLE};

/// Largest tolerated |1 − ‖ψ‖²| along a propagation.
pub const NORM_TOLERANCE: f64 = 1e-8;

const HERMITICITY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    pub amplitudes: CVector,
    /// fs
    pub time: f64,
}

impl QuantumState {
    pub fn basis(count: usize, site: usize) -> Self {
        let mut amplitudes = CVector::zeros(count);
        amplitudes[site] = Complex64::new(1.0, 0.0);
        QuantumState {
            amplitudes,
            time: 0.0,
        }
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Self {
        QuantumState {
            amplitudes: CVector::from_vec(amplitudes),
            time: 0.0,
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn population(&self, site: usize) -> f64 {
        self.amplitudes[site].norm_sqr()
    }
}

/// Interaction-picture matrix element κ·E(t)·μ_nm·e^{iω_nm t}, fs⁻¹.
pub fn hamiltonian_element(
    sys: &LevelSystem,
    field_value: f64,
    n: usize,
    m: usize,
    t: f64,
) -> Result<Complex64> {
    sys.check_site(n)?;
    sys.check_site(m)?;
    let mu = sys.mu[n][m];
    if mu == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(Complex64::from_polar(
        COUPLING_PER_FIELD_DIPOLE * field_value * mu,
        sys.transition(n, m) * t,
    ))
}

/// Frozen carrier parameters for a single step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CarrierSample {
    pub amplitude: f64,
    pub phase: f64,
    pub frequency: f64,
}

/// (∫₀^dt e^{iwu} du, ∫₀^dt (u/dt) e^{iwu} du).
fn phase_moments(w: f64, dt: f64) -> (Complex64, Complex64) {
    let x = w * dt;
    if x.abs() < 0.5 {
        // Power series; also covers the removable singularity at w = 0.
        let ix = Complex64::new(0.0, x);
        let mut power = Complex64::new(1.0, 0.0);
        let mut factorial = 1.0;
        let mut zeroth = Complex64::new(0.0, 0.0);
        let mut first = Complex64::new(0.0, 0.0);
        for k in 0..24 {
            if k > 0 {
                power *= ix;
                factorial *= k as f64;
            }
            zeroth += power / (factorial * (k + 1) as f64);
            first += power / (factorial * (k + 2) as f64);
        }
        (zeroth * dt, first * dt)
    } else {
        let half = 0.5 * x;
        let e = Complex64::from_polar(1.0, x);
        // e^{ix} − 1 without cancellation
        let em1 = Complex64::new(-2.0 * half.sin().powi(2), x.sin());
        let zeroth = em1 / (I * x);
        let first = -I * e / x + em1 / (x * x);
        (zeroth * dt, first * dt)
    }
}

/// ∫_{t0}^{t0+dt} c(s) e^{iws} ds for an envelope c linear from `start` to `end`.
pub fn linear_phase_integral(w: f64, start: Complex64, end: Complex64, t0: f64, dt: f64) -> Complex64 {
    let (zeroth, first) = phase_moments(w, dt);
    Complex64::from_polar(1.0, w * t0) * (start * zeroth + (end - start) * first)
}

/// ∫_{t_p}^{t_p+ε} A e^{i(φ + ω_c s)} e^{iωs} ds with A, φ frozen at t_p.
pub fn step_phase_integral(omega: f64, carrier: &CarrierSample, t_p: f64, eps: f64) -> Complex64 {
    let envelope = Complex64::from_polar(carrier.amplitude, carrier.phase);
    linear_phase_integral(omega + carrier.frequency, envelope, envelope, t_p, eps)
}

/// Carrier envelope at fractional position `u ∈ [0, 1]` inside step `p`.
fn envelope_at(field: &ControlField, carrier: usize, p: usize, u: f64) -> Complex64 {
    let c = &field.carriers[carrier];
    let left = c.envelope(p);
    match field.interpolation {
        Interpolation::Frozen => left,
        Interpolation::Linear => {
            if u == 0.0 {
                left
            } else {
                left + (c.envelope(p + 1) - left) * u
            }
        }
    }
}

/// ∫ H(s) ds over [t_p + u0·ε, t_p + u1·ε] (a sub-interval of step `p`).
pub fn interval_generator(sys: &LevelSystem, field: &ControlField, p: usize, u0: f64, u1: f64) -> CMatrix {
    let n = sys.count;
    let eps = field.step;
    let t0 = field.time(p) + u0 * eps;
    let dt = (u1 - u0) * eps;
    let scale = COUPLING_PER_FIELD_DIPOLE * field.modulation;
    let mut g = CMatrix::zeros(n, n);
    if dt == 0.0 {
        return g;
    }
    let envelopes: Vec<(Complex64, Complex64, f64)> = (0..field.carriers.len())
        .map(|i| {
            (
                envelope_at(field, i, p, u0),
                envelope_at(field, i, p, u1),
                field.carriers[i].frequency,
            )
        })
        .collect();
    for r in 0..n {
        for c in (r + 1)..n {
            let mu = sys.mu[r][c];
            if mu == 0.0 {
                continue;
            }
            let w = sys.transition(r, c);
            let mut total = Complex64::new(0.0, 0.0);
            for &(start, end, wc) in &envelopes {
                // Re{c e^{iω_c s}} = (c e^{iω_c s} + c* e^{−iω_c s}) / 2
                let direct = linear_phase_integral(w + wc, start, end, t0, dt);
                let mirrored = linear_phase_integral(w - wc, start.conj(), end.conj(), t0, dt);
                total += 0.5 * (direct + mirrored);
            }
            let value = total * (scale * mu);
            g[(r, c)] = value;
            g[(c, r)] = value.conj();
        }
    }
    g
}

/// G_p = ∫_{t_p}^{t_{p+1}} H(s) ds.
pub fn step_generator(sys: &LevelSystem, field: &ControlField, p: usize) -> Result<CMatrix> {
    if p >= field.steps() {
        return Err(Error::StepOutOfRange {
            index: p,
            steps: field.steps(),
        });
    }
    let g = interval_generator(sys, field, p, 0.0, 1.0);
    let deviation = hermiticity_defect(&g);
    if deviation > HERMITICITY_TOLERANCE {
        return Err(Error::NonHermitian { step: p, deviation });
    }
    Ok(g)
}

#[derive(Clone, Debug)]
pub struct StepOperator {
    /// U_p = exp(−i G_p).
    pub matrix: CMatrix,
    /// G_p (dimensionless with ħ = 1).
    pub generator: CMatrix,
    pub eigen: HermitianEigen,
}

impl StepOperator {
    pub fn from_generator(generator: CMatrix) -> Self {
        let eigen = HermitianEigen::new(&generator);
        StepOperator {
            matrix: eigen.exp_minus_i(1.0),
            generator,
            eigen,
        }
    }
}

pub fn step_operator(sys: &LevelSystem, field: &ControlField, p: usize) -> Result<StepOperator> {
    Ok(StepOperator::from_generator(step_generator(sys, field, p)?))
}

fn check_inputs(sys: &LevelSystem, field: &ControlField, initial: &QuantumState) -> Result<()> {
    sys.validate()?;
    field.validate()?;
    if initial.amplitudes.len() != sys.count {
        return Err(Error::InvalidConfig(format!(
            "initial state has {} amplitudes for {} levels",
            initial.amplitudes.len(),
            sys.count
        )));
    }
    let drift = (1.0 - initial.norm_sqr()).abs();
    if drift > NORM_TOLERANCE {
        return Err(Error::NormDrift {
            step: 0,
            drift,
            tolerance: NORM_TOLERANCE,
        });
    }
    Ok(())
}

/// ψ(t_p) at every grid point plus the step operators that produced them.
#[derive(Clone, Debug)]
pub struct Propagation {
    pub states: Vec<QuantumState>,
    pub steps: Vec<StepOperator>,
    /// ε, fs.
    pub step: f64,
}

impl Propagation {
    pub fn final_state(&self) -> &QuantumState {
        self.states.last().expect("propagation has at least one state")
    }

    pub fn generator(&self, p: usize) -> &CMatrix {
        &self.steps[p].generator
    }

    /// |ψ_n(t_p)|² for every grid point.
    pub fn population_series(&self, site: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.population(site)).collect()
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.states
            .iter()
            .map(|s| (1.0 - s.norm_sqr()).abs())
            .fold(0.0, f64::max)
    }
}

pub fn propagate(sys: &LevelSystem, field: &ControlField, initial: &QuantumState) -> Result<Propagation> {
    check_inputs(sys, field, initial)?;
    let steps = field.steps();
    let mut states = Vec::with_capacity(steps + 1);
    let mut ops = Vec::with_capacity(steps);
    let mut psi = initial.amplitudes.clone();
    states.push(QuantumState {
        amplitudes: psi.clone(),
        time: 0.0,
    });
    for p in 0..steps {
        let op = step_operator(sys, field, p)?;
        psi = &op.matrix * psi;
        let state = QuantumState {
            amplitudes: psi.clone(),
            time: field.time(p + 1),
        };
        let drift = (1.0 - state.norm_sqr()).abs();
        if drift > NORM_TOLERANCE {
            return Err(Error::NormDrift {
                step: p + 1,
                drift,
                tolerance: NORM_TOLERANCE,
            });
        }
        states.push(state);
        ops.push(op);
    }
    Ok(Propagation {
        states,
        steps: ops,
        step: field.step,
    })
}

/// Final state only; no per-step storage.
pub fn propagate_final(sys: &LevelSystem, field: &ControlField, initial: &QuantumState) -> Result<QuantumState> {
    check_inputs(sys, field, initial)?;
    let mut psi = initial.amplitudes.clone();
    for p in 0..field.steps() {
        let g = step_generator(sys, field, p)?;
        psi = HermitianEigen::new(&g).apply_exp_minus_i(1.0, &psi);
    }
    let state = QuantumState {
        amplitudes: psi,
        time: field.horizon(),
    };
    let drift = (1.0 - state.norm_sqr()).abs();
    if drift > NORM_TOLERANCE {
        return Err(Error::NormDrift {
            step: field.steps(),
            drift,
            tolerance: NORM_TOLERANCE,
        });
    }
    Ok(state)
}

/// Propagator for scalar modulations M·E(t) of one field.
///
/// G_p is linear in the field, so the eigensystems of the unmodulated
/// generators serve every M: U_p(M) = V e^{−iMΛ} V†.
#[derive(Clone, Debug)]
pub struct ModulatedPropagator {
    eigen: Vec<HermitianEigen>,
    initial: QuantumState,
    horizon: f64,
}

impl ModulatedPropagator {
    pub fn new(sys: &LevelSystem, field: &ControlField, initial: &QuantumState) -> Result<Self> {
        check_inputs(sys, field, initial)?;
        let base = field.with_modulation(1.0);
        let eigen = (0..base.steps())
            .map(|p| step_generator(sys, &base, p).map(|g| HermitianEigen::new(&g)))
            .collect::<Result<Vec<_>>>()?;
        Ok(ModulatedPropagator {
            eigen,
            initial: initial.clone(),
            horizon: base.horizon(),
        })
    }

    pub fn final_state(&self, modulation: f64) -> Result<QuantumState> {
        let mut psi = self.initial.amplitudes.clone();
        for eig in &self.eigen {
            psi = eig.apply_exp_minus_i(modulation, &psi);
        }
        let state = QuantumState {
            amplitudes: psi,
            time: self.horizon,
        };
        let drift = (1.0 - state.norm_sqr()).abs();
        if drift > NORM_TOLERANCE {
            return Err(Error::NormDrift {
                step: self.eigen.len(),
                drift,
                tolerance: NORM_TOLERANCE,
            });
        }
        Ok(state)
    }
}
