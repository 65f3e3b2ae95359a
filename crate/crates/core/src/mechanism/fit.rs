use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::dataset::ModulationDataset;
use super::lm::{levenberg_marquardt, LmOptions};
use super::model::{model_population, series, ModelParams};
use crate::error::{Error, Result};

/// Closed interval of modulation factors used in one fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub m_min: f64,
    pub m_max: f64,
}

impl FitWindow {
    pub fn new(m_min: f64, m_max: f64) -> Result<Self> {
        if !(m_min.is_finite() && m_max.is_finite() && 0.0 <= m_min && m_min < m_max) {
            return Err(Error::InvalidConfig(format!("invalid fit window ({m_min}, {m_max})")));
        }
        Ok(FitWindow { m_min, m_max })
    }

    /// Inside the searched region 0.2 < M_min < 0.8, 0.7 < M_max < 1.6,
    /// M_max − M_min > 0.1.
    pub fn is_admissible(&self) -> bool {
        0.2 < self.m_min && self.m_min < 0.8 && 0.7 < self.m_max && self.m_max < 1.6 && self.m_max - self.m_min > 0.1
    }

    pub fn width(&self) -> f64 {
        self.m_max - self.m_min
    }

    fn contains(&self, m: f64, tolerance: f64) -> bool {
        m >= self.m_min - tolerance && m <= self.m_max + tolerance
    }
}

/// Residual space of the least-squares problem.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitSpace {
    /// Model population against measured population.
    #[default]
    Population,
    /// Model amplitude against √(measured population).
    Amplitude,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub k_max: usize,
    /// When set, the fit enforces a > j_min through a = j_min + softplus(u).
    pub j_min: Option<usize>,
    #[serde(default)]
    pub space: FitSpace,
    pub lm: LmOptions,
}

impl FitOptions {
    pub fn new(k_max: usize, j_min: Option<usize>) -> Self {
        FitOptions {
            k_max,
            j_min,
            space: FitSpace::Population,
            lm: LmOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub window: FitWindow,
    pub k_max: usize,
    /// ⟨j^k⟩ for k = 1..=k_max.
    pub moments: Vec<f64>,
    pub a: f64,
    pub amplitude: f64,
    /// Mean squared population deviation over the window.
    pub msd: f64,
    pub converged: bool,
    /// ⟨j²⟩ < ⟨j⟩², which no distribution of jump counts can produce.
    pub moment_flag: bool,
    pub points: usize,
    pub iterations: usize,
}

impl FitResult {
    pub fn mean(&self) -> f64 {
        self.moments[0]
    }

    pub fn params(&self) -> ModelParams {
        ModelParams {
            amplitude: self.amplitude,
            a: self.a,
            moments: self.moments.clone(),
        }
    }
}

fn softplus(u: f64) -> f64 {
    if u > 30.0 {
        u + (-u).exp()
    } else {
        u.exp().ln_1p()
    }
}

fn sigmoid(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

fn softplus_inverse(x: f64) -> f64 {
    x + (-(-x).exp_m1()).ln()
}

const U_FLOOR: f64 = -30.0;

const START_OFFSETS: [f64; 5] = [0.25, 0.75, 1.5, 2.5, 4.0];

const PROFILE_STEPS: usize = 200;
const PROFILE_SPAN: f64 = 20.0;

/// Least-squares fit of the truncated series over one window, best of five
/// point-mass starts and one profiled start.
pub fn lm_fit(ds: &ModulationDataset, window: FitWindow, opts: &FitOptions) -> Result<FitResult> {
    let k_max = opts.k_max;
    if k_max == 0 {
        return Err(Error::InvalidConfig("k_max must be at least 1".into()));
    }
    let tolerance = 1e-9 * ds.increment;
    let (ms, ys): (Vec<f64>, Vec<f64>) = ds
        .rows
        .iter()
        .filter(|r| r.m > 0.0 && window.contains(r.m, tolerance))
        .map(|r| (r.m, r.population))
        .unzip();
    if ms.len() < k_max + 3 {
        return Err(Error::InsufficientData(format!(
            "window ({}, {}) holds {} points, need {}",
            window.m_min,
            window.m_max,
            ms.len(),
            k_max + 3
        )));
    }
    let problem = Problem {
        logs: ms.iter().map(|m| m.ln()).collect(),
        ms,
        targets: match opts.space {
            FitSpace::Population => ys.clone(),
            FitSpace::Amplitude => ys.iter().map(|y| y.sqrt()).collect(),
        },
        space: opts.space,
        k_max,
        j_min: opts.j_min.map(|j| j as f64),
    };
    let base = opts.j_min.map_or(1.0, |j| j as f64);
    let mut best: Option<(f64, Vec<f64>, usize, bool)> = None;
    let mut starts: Vec<Vec<f64>> = START_OFFSETS.iter().map(|o| problem.start(base + o, &ys)).collect();
    starts.extend(problem.profile_start(base));
    for x0 in starts {
        let out = levenberg_marquardt(&x0, |x| problem.eval(x), &opts.lm);
        if best.as_ref().is_none_or(|b| out.cost < b.0) {
            best = Some((out.cost, out.params, out.iterations, out.converged));
        }
    }
    let (_, x, iterations, converged) = best.expect("at least one start");
    let params = problem.params(&x);
    let msd = problem
        .ms
        .iter()
        .zip(&ys)
        .map(|(&m, &y)| (model_population(m, &params, k_max) - y).powi(2))
        .sum::<f64>()
        / ys.len() as f64;
    let moment_flag = k_max >= 2 && params.moments[1] < params.moments[0].powi(2);
    Ok(FitResult {
        window,
        k_max,
        moments: params.moments,
        a: params.a,
        amplitude: params.amplitude,
        msd,
        converged,
        moment_flag,
        points: ys.len(),
        iterations,
    })
}

/// Parameter vector x = [|ψ|, a or u, ⟨j⟩, …, ⟨j^k_max⟩].
struct Problem {
    ms: Vec<f64>,
    logs: Vec<f64>,
    targets: Vec<f64>,
    space: FitSpace,
    k_max: usize,
    j_min: Option<f64>,
}

impl Problem {
    fn a_of(&self, x: f64) -> (f64, f64) {
        match self.j_min {
            // Clamped so that a stays strictly above j_min in floating point.
            Some(j) if x < U_FLOOR => (j + softplus(U_FLOOR), 0.0),
            Some(j) => (j + softplus(x), sigmoid(x)),
            None => (x, 1.0),
        }
    }

    fn params(&self, x: &[f64]) -> ModelParams {
        ModelParams {
            amplitude: x[0],
            a: self.a_of(x[1]).0,
            moments: x[2..].to_vec(),
        }
    }

    /// Point-mass moments at j0 with a = j0; |ψ| by linear least squares.
    fn start(&self, j0: f64, populations: &[f64]) -> Vec<f64> {
        let mut x = vec![1.0; self.k_max + 2];
        x[1] = match self.j_min {
            Some(j) => softplus_inverse(j0 - j),
            None => j0,
        };
        for k in 0..self.k_max {
            x[2 + k] = j0.powi(k as i32 + 1);
        }
        let shape: Vec<f64> = self
            .ms
            .iter()
            .zip(&self.logs)
            .map(|(&m, &l)| ((-j0 * (m - 1.0)).exp() * series(l, &x[2..], self.k_max)).powi(2))
            .collect();
        let num: f64 = shape.iter().zip(populations).map(|(g, y)| g * y).sum();
        let den: f64 = shape.iter().map(|g| g * g).sum();
        if num > 0.0 && den > 0.0 && (num / den).is_finite() {
            x[0] = (num / den).sqrt();
        }
        x
    }

    /// For fixed a the amplitude is linear in |ψ|·(1, ⟨j⟩, …, ⟨j^k_max⟩).
    /// Scans a over a grid, solves each linear problem against √P and
    /// returns the best point as a start.
    fn profile_start(&self, base: f64) -> Option<Vec<f64>> {
        let roots: Vec<f64> = match self.space {
            FitSpace::Amplitude => self.targets.clone(),
            FitSpace::Population => self.targets.iter().map(|y| y.max(0.0).sqrt()).collect(),
        };
        let rhs = DVector::from_vec(roots);
        let grid: Vec<f64> = (0..=PROFILE_STEPS)
            .map(|step| base + PROFILE_SPAN * (step as f64 / PROFILE_STEPS as f64).powi(2))
            .collect();
        let costs: Vec<f64> = grid[1..]
            .iter()
            .map(|&a| self.profile(a, &rhs).map_or(f64::INFINITY, |p| p.0))
            .collect();
        let (cell, _) = costs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_finite())
            .min_by(|x, y| x.1.total_cmp(y.1))?;
        // Golden-section refinement on the bracketing cells.
        let (mut lo, mut hi) = (grid[cell], grid[(cell + 2).min(PROFILE_STEPS)]);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let cost = |a: f64| self.profile(a, &rhs).map_or(f64::INFINITY, |p| p.0);
        let (mut c, mut d) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
        let (mut fc, mut fd) = (cost(c), cost(d));
        for _ in 0..80 {
            if fc < fd {
                hi = d;
                (d, fd) = (c, fc);
                c = hi - phi * (hi - lo);
                fc = cost(c);
            } else {
                lo = c;
                (c, fc) = (d, fd);
                d = lo + phi * (hi - lo);
                fd = cost(d);
            }
        }
        let a = 0.5 * (lo + hi);
        let (_, coef) = self.profile(a, &rhs)?;
        let mut x = Vec::with_capacity(self.k_max + 2);
        x.push(coef[0].abs());
        x.push(match self.j_min {
            Some(j) => softplus_inverse((a - j).max(1e-9)),
            None => a,
        });
        x.extend(coef.iter().skip(1).map(|c| c / coef[0]));
        Some(x)
    }

    /// Linear least squares of √P on the series columns at fixed a.
    fn profile(&self, a: f64, rhs: &DVector<f64>) -> Option<(f64, DVector<f64>)> {
        let design = DMatrix::from_fn(self.ms.len(), self.k_max + 1, |i, k| {
            let mut term = 1.0;
            for q in 0..k {
                term *= self.logs[i] / (q + 1) as f64;
            }
            (-a * (self.ms[i] - 1.0)).exp() * term
        });
        let coef = design.clone().svd(true, true).solve(rhs, 1e-15).ok()?;
        let cost = (&design * &coef - rhs).norm_squared();
        (cost.is_finite() && coef[0].abs() > 0.0).then_some((cost, coef))
    }

    fn eval(&self, x: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.ms.len();
        let p = x.len();
        let (a, da_dx) = self.a_of(x[1]);
        let mut r = DVector::zeros(n);
        let mut jac = DMatrix::zeros(n, p);
        for i in 0..n {
            let (m, l) = (self.ms[i], self.logs[i]);
            let decay = (-a * (m - 1.0)).exp();
            let mut term = 1.0;
            let mut sum = 1.0;
            for k in 0..self.k_max {
                term *= l / (k + 1) as f64;
                sum += x[2 + k] * term;
                jac[(i, 2 + k)] = x[0] * decay * term;
            }
            let f = x[0] * decay * sum;
            jac[(i, 0)] = decay * sum;
            jac[(i, 1)] = -(m - 1.0) * f * da_dx;
            match self.space {
                FitSpace::Amplitude => r[i] = f - self.targets[i],
                FitSpace::Population => {
                    r[i] = f * f - self.targets[i];
                    for c in 0..p {
                        jac[(i, c)] *= 2.0 * f;
                    }
                }
            }
        }
        (r, jac)
    }
}
