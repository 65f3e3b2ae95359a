//! Steepest-ascent field optimization for population transfer.
//!
//! The field is optimized directly on its sample grid. Gradients come from
//! one forward and one backward sweep: with χ_N = e_f ψ_f(t_f) and
//! χ_p = U_p† χ_{p+1}, dJ/dθ = 2 Re χ_{p+1}† (∂U_p/∂θ) ψ_p, where the
//! derivative of exp(−iG_p) is taken exactly in the eigenbasis of G_p.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ControlField, Interpolation};
use crate::linalg::{CMatrix, CVector, HermitianEigen};
use crate::propagator::{linear_phase_integral, QuantumState, NORM_TOLERANCE};
use crate::system::{LevelSystem, COUPLING_PER_FIELD_DIPOLE};

/// Transfer objective J = |ψ_target(t_f)|² − λ·ε·Σ_p E(t_p)².
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub initial: usize,
    pub target: usize,
    pub fluence_penalty: f64,
}

/// Starting field: sin²-enveloped sum of the distinct coupled transition
/// frequencies with seeded random phases.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialFieldSpec {
    /// Amplitude of each frequency component, V/Å.
    pub amplitude: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub initial: usize,
    pub target: usize,
    /// t_f, fs.
    pub horizon: f64,
    /// ε, fs.
    pub step: f64,
    pub iterations: usize,
    /// Initial ascent step length (adapted by the line search).
    pub learning_rate: f64,
    pub fluence_penalty: f64,
    pub initial_field: InitialFieldSpec,
    /// Optional Gaussian smoothing width (fs) applied to the gradient.
    #[serde(default)]
    pub smoothing: Option<f64>,
    /// Stop once the transfer reaches this value.
    pub goal: f64,
}

impl OptimizerConfig {
    /// Settings for the shipped 7-level example (0 → 6 in 100 fs).
    pub fn seven_level_example() -> Self {
        OptimizerConfig {
            initial: 0,
            target: 6,
            horizon: 100.0,
            step: 0.025,
            iterations: 400,
            learning_rate: 20.0,
            fluence_penalty: 0.0,
            initial_field: InitialFieldSpec {
                amplitude: 0.1,
                seed: 7,
            },
            smoothing: None,
            goal: 0.998,
        }
    }

    pub fn validate(&self, sys: &LevelSystem) -> Result<()> {
        sys.check_site(self.initial)?;
        sys.check_site(self.target)?;
        if !(self.horizon > 0.0) || !(self.step > 0.0) {
            return Err(Error::InvalidConfig("horizon and step must be positive".into()));
        }
        if !(self.fluence_penalty >= 0.0) {
            return Err(Error::InvalidConfig("fluence penalty must be nonnegative".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        if !sys.is_connected(self.initial, self.target) {
            return Err(Error::InvalidSystem(format!(
                "no coupling path from {} to {}",
                self.initial, self.target
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.step).round() as usize
    }

    pub fn objective(&self) -> Objective {
        Objective {
            initial: self.initial,
            target: self.target,
            fluence_penalty: self.fluence_penalty,
        }
    }
}

pub fn initial_field(sys: &LevelSystem, cfg: &OptimizerConfig) -> Result<ControlField> {
    let mut freqs: Vec<f64> = sys.edges().iter().map(|&(n, m)| sys.transition(n, m).abs()).collect();
    freqs.sort_by(f64::total_cmp);
    freqs.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.initial_field.seed);
    let phases: Vec<f64> = freqs.iter().map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect();
    let horizon = cfg.steps() as f64 * cfg.step;
    ControlField::from_fn(cfg.step, cfg.steps(), |t| {
        let envelope = (std::f64::consts::PI * t / horizon).sin().powi(2);
        let carrier: f64 = freqs.iter().zip(&phases).map(|(w, ph)| (w * t + ph).cos()).sum();
        cfg.initial_field.amplitude * envelope * carrier
    })
}

/// ∂G_p/∂e_p and ∂G_p/∂e_{p+1} for a raw sampled field (modulation included).
fn step_weights(sys: &LevelSystem, field: &ControlField, p: usize) -> (CMatrix, CMatrix) {
    let n = sys.count;
    let t0 = field.time(p);
    let scale = COUPLING_PER_FIELD_DIPOLE * field.modulation;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut left = CMatrix::zeros(n, n);
    let mut right = CMatrix::zeros(n, n);
    for r in 0..n {
        for c in (r + 1)..n {
            let mu = sys.mu[r][c];
            if mu == 0.0 {
                continue;
            }
            let w = sys.transition(r, c);
            let (l, rt) = match field.interpolation {
                Interpolation::Linear => (
                    linear_phase_integral(w, one, zero, t0, field.step),
                    linear_phase_integral(w, zero, one, t0, field.step),
                ),
                Interpolation::Frozen => (linear_phase_integral(w, one, one, t0, field.step), zero),
            };
            left[(r, c)] = l * (scale * mu);
            left[(c, r)] = left[(r, c)].conj();
            right[(r, c)] = rt * (scale * mu);
            right[(c, r)] = right[(r, c)].conj();
        }
    }
    (left, right)
}

fn require_raw(field: &ControlField) -> Result<&[f64]> {
    if !field.is_raw() {
        return Err(Error::InvalidField(
            "optimization works on raw sampled fields; convert with to_sampled()".into(),
        ));
    }
    Ok(&field.carriers[0].amplitude)
}

struct Forward {
    states: Vec<CVector>,
    eigen: Vec<HermitianEigen>,
    weights: Vec<(CMatrix, CMatrix)>,
}

fn forward(sys: &LevelSystem, field: &ControlField, initial: usize) -> Result<Forward> {
    let samples = require_raw(field)?;
    let steps = field.steps();
    let mut states = Vec::with_capacity(steps + 1);
    let mut eigen = Vec::with_capacity(steps);
    let mut weights = Vec::with_capacity(steps);
    let mut psi = QuantumState::basis(sys.count, initial).amplitudes;
    states.push(psi.clone());
    for p in 0..steps {
        let (left, right) = step_weights(sys, field, p);
        let g = &left * Complex64::new(samples[p], 0.0) + &right * Complex64::new(samples[p + 1], 0.0);
        let eig = HermitianEigen::new(&g);
        psi = eig.apply_exp_minus_i(1.0, &psi);
        states.push(psi.clone());
        eigen.push(eig);
        weights.push((left, right));
    }
    let drift = (1.0 - psi.iter().map(|a| a.norm_sqr()).sum::<f64>()).abs();
    if drift > NORM_TOLERANCE {
        return Err(Error::NormDrift {
            step: steps,
            drift,
            tolerance: NORM_TOLERANCE,
        });
    }
    Ok(Forward { states, eigen, weights })
}

fn penalty(field: &ControlField, objective: &Objective) -> f64 {
    objective.fluence_penalty * field.energy()
}

/// J for a raw sampled field.
pub fn objective(sys: &LevelSystem, field: &ControlField, objective: &Objective) -> Result<f64> {
    sys.check_site(objective.target)?;
    let run = forward(sys, field, objective.initial)?;
    let last = run.states.last().expect("nonempty");
    Ok(last[objective.target].norm_sqr() - penalty(field, objective))
}

/// (J, |ψ_target(t_f)|², dJ/dE(t_p)) via one forward and one backward sweep.
pub fn gradient(sys: &LevelSystem, field: &ControlField, objective: &Objective) -> Result<(f64, f64, Vec<f64>)> {
    sys.check_site(objective.target)?;
    let samples = require_raw(field)?;
    let run = forward(sys, field, objective.initial)?;
    let steps = field.steps();
    let n = sys.count;
    let last = &run.states[steps];
    let transfer = last[objective.target].norm_sqr();

    let mut grad = vec![0.0; steps + 1];
    let mut chi = CVector::zeros(n);
    chi[objective.target] = last[objective.target];
    let m = field.modulation;
    for p in (0..steps).rev() {
        let eig = &run.eigen[p];
        let v = &eig.vectors;
        let a = v.ad_mul(&run.states[p]);
        let b = v.ad_mul(&chi);
        let phi = eig.exp_derivative_kernel();
        let k = CMatrix::from_fn(n, n, |j, l| b[j].conj() * phi[(j, l)] * a[l]);
        let s = v.conjugate() * k * v.transpose();
        let (left, right) = &run.weights[p];
        let dl: Complex64 = left.iter().zip(s.iter()).map(|(x, y)| x * y).sum();
        let dr: Complex64 = right.iter().zip(s.iter()).map(|(x, y)| x * y).sum();
        grad[p] += 2.0 * dl.re;
        grad[p + 1] += 2.0 * dr.re;
        // χ_p = U_p† χ_{p+1}
        chi = eig.apply_exp_minus_i(-1.0, &chi);
    }
    let lambda = objective.fluence_penalty;
    if lambda != 0.0 {
        for (g, &e) in grad.iter_mut().zip(samples) {
            *g -= 2.0 * lambda * field.step * m * m * e;
        }
    }
    Ok((transfer - penalty(field, objective), transfer, grad))
}

fn smooth(values: &[f64], width_fs: f64, step: f64) -> Vec<f64> {
    let sigma = width_fs / step;
    let radius = (4.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius).map(|k| (-0.5 * (k as f64 / sigma).powi(2)).exp()).collect();
    let n = values.len() as isize;
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            let mut norm = 0.0;
            for (offset, w) in (-radius..=radius).zip(&kernel) {
                let j = i + offset;
                if (0..n).contains(&j) {
                    acc += w * values[j as usize];
                    norm += w;
                }
            }
            acc / norm
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub iteration: usize,
    pub objective: f64,
    pub transfer: f64,
    pub step_length: f64,
    pub gradient_norm: f64,
}

#[derive(Clone, Debug)]
pub struct OptimizationResult {
    pub field: ControlField,
    pub log: Vec<ConvergenceRecord>,
    pub transfer: f64,
    pub objective: f64,
    /// Line search could not find an improving step.
    pub stagnated: bool,
}

/// Gradient ascent with backtracking (Armijo) line search.
pub fn optimize(sys: &LevelSystem, cfg: &OptimizerConfig) -> Result<OptimizationResult> {
    cfg.validate(sys)?;
    optimize_from(sys, cfg, initial_field(sys, cfg)?)
}

pub fn optimize_from(sys: &LevelSystem, cfg: &OptimizerConfig, start: ControlField) -> Result<OptimizationResult> {
    cfg.validate(sys)?;
    let obj = cfg.objective();
    let mut field = start;
    require_raw(&field)?;
    let (mut value, mut transfer, mut grad) = gradient(sys, &field, &obj)?;
    let mut alpha = cfg.learning_rate;
    let mut log = vec![ConvergenceRecord {
        iteration: 0,
        objective: value,
        transfer,
        step_length: 0.0,
        gradient_norm: grad.iter().map(|g| g * g).sum::<f64>().sqrt(),
    }];
    let mut stagnated = false;
    for iteration in 1..=cfg.iterations {
        if transfer >= cfg.goal {
            break;
        }
        let direction = match cfg.smoothing {
            Some(width) if width > 0.0 => smooth(&grad, width, field.step),
            _ => grad.clone(),
        };
        let slope: f64 = direction.iter().zip(&grad).map(|(d, g)| d * g).sum();
        if !(slope > 0.0) {
            stagnated = true;
            break;
        }
        let mut accepted = None;
        for _ in 0..40 {
            let mut trial = field.clone();
            for (e, d) in trial.carriers[0].amplitude.iter_mut().zip(&direction) {
                *e += alpha * d;
            }
            let trial_value = objective(sys, &trial, &obj)?;
            if trial_value >= value + 1e-4 * alpha * slope {
                accepted = Some(trial);
                break;
            }
            alpha *= 0.5;
        }
        let Some(next) = accepted else {
            stagnated = true;
            break;
        };
        field = next;
        let step_length = alpha;
        (value, transfer, grad) = gradient(sys, &field, &obj)?;
        alpha *= 1.5;
        log.push(ConvergenceRecord {
            iteration,
            objective: value,
            transfer,
            step_length,
            gradient_norm: grad.iter().map(|g| g * g).sum::<f64>().sqrt(),
        });
    }
    Ok(OptimizationResult {
        field,
        log,
        transfer,
        objective: value,
        stagnated,
    })
}
