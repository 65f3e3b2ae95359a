use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative step-size tolerance.
    pub xtol: f64,
    /// Absolute tolerance on ‖Jᵀr‖∞.
    pub gtol: f64,
    /// Initial damping λ (dimensionless; the damping term is λ·diag JᵀJ).
    pub initial_damping: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 500,
            xtol: 1e-14,
            gtol: 1e-18,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    /// ½‖r‖² at `params`.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes ½‖r(x)‖² by damped normal equations
/// (JᵀJ + λ·diag JᵀJ) δ = −Jᵀr with Nielsen's damping update.
/// Each step is solved by QR on the stacked least-squares system.
///
/// `eval` returns the residual vector and its Jacobian.
pub fn levenberg_marquardt<F>(x0: &[f64], eval: F, opts: &LmOptions) -> LmOutcome
where
    F: Fn(&[f64]) -> (DVector<f64>, DMatrix<f64>),
{
    let mut x = DVector::from_column_slice(x0);
    let (mut r, mut jac) = eval(x.as_slice());
    let mut cost = 0.5 * r.norm_squared();
    if !cost.is_finite() {
        return LmOutcome {
            params: x0.to_vec(),
            cost: f64::INFINITY,
            iterations: 0,
            converged: false,
        };
    }
    let mut normal = jac.tr_mul(&jac);
    let mut grad = jac.tr_mul(&r);
    let mut lambda = opts.initial_damping;
    let mut nu = 2.0;
    for iteration in 0..opts.max_iterations {
        if cost == 0.0 || grad.amax() <= opts.gtol {
            return done(x, cost, iteration, true);
        }
        let scale = damping_scale(&normal);
        let Some(step) = damped_step(&jac, &r, &scale, lambda) else {
            lambda *= nu;
            nu *= 2.0;
            if !lambda.is_finite() || lambda > 1e300 {
                return done(x, cost, iteration + 1, false);
            }
            continue;
        };
        if step.norm() <= opts.xtol * (x.norm() + opts.xtol) {
            return done(x, cost, iteration, true);
        }
        let trial = &x + &step;
        let (r_new, jac_new) = eval(trial.as_slice());
        let cost_new = 0.5 * r_new.norm_squared();
        // Predicted decrease of the local quadratic model.
        let damped: f64 = (0..step.len())
            .map(|i| step[i] * (lambda * scale[i] * step[i] - grad[i]))
            .sum();
        let predicted = 0.5 * damped;
        let rho = if predicted > 0.0 { (cost - cost_new) / predicted } else { -1.0 };
        if cost_new.is_finite() && rho > 0.0 {
            x = trial;
            r = r_new;
            jac = jac_new;
            cost = cost_new;
            normal = jac.tr_mul(&jac);
            grad = jac.tr_mul(&r);
            lambda *= (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0);
            nu = 2.0;
        } else {
            lambda *= nu;
            nu *= 2.0;
            if !lambda.is_finite() || lambda > 1e300 {
                return done(x, cost, iteration + 1, true);
            }
        }
    }
    done(x, cost, opts.max_iterations, false)
}

/// Solves min ‖Jδ + r‖² + λ Σ d_i δ_i² through a QR factorization of the
/// stacked system, avoiding the squared conditioning of the normal equations.
fn damped_step(jac: &DMatrix<f64>, r: &DVector<f64>, scale: &[f64], lambda: f64) -> Option<DVector<f64>> {
    let (n, p) = jac.shape();
    let mut stacked = DMatrix::zeros(n + p, p);
    stacked.rows_mut(0, n).copy_from(jac);
    for (i, d) in scale.iter().enumerate() {
        stacked[(n + i, i)] = (lambda * d).sqrt();
    }
    let mut rhs = DVector::zeros(n + p);
    rhs.rows_mut(0, n).copy_from(&(-r));
    let qr = stacked.qr();
    let qtb = qr.q().tr_mul(&rhs);
    let step = qr.r().solve_upper_triangular(&qtb)?;
    step.iter().all(|v| v.is_finite()).then_some(step)
}

/// diag JᵀJ with a floor so that insensitive parameters stay damped.
fn damping_scale(normal: &DMatrix<f64>) -> Vec<f64> {
    let floor = 1e-30 * normal.diagonal().max().max(1.0);
    normal.diagonal().iter().map(|&d| d.max(floor)).collect()
}

fn done(x: DVector<f64>, cost: f64, iterations: usize, converged: bool) -> LmOutcome {
    LmOutcome {
        params: x.as_slice().to_vec(),
        cost,
        iterations,
        converged,
    }
}
