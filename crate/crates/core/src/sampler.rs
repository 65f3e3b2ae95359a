//! Bell's stochastic jump rule over the level basis.
//!
//! A beable at site m jumps to n ≠ m during a step with probability T_nm·ε,
//! where T_nm = max(0, 2·Re z_nm) and z_nm = −i G_nm ψ_n*/ψ_m* / ε. Because
//! Re z_nm·|ψ_m|² = −Re z_mn·|ψ_n|², at most one direction of every pair
//! is open at a time, and an ensemble started in |ψ(0)|² stays in |ψ(t)|².

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Workers;
use crate::field::ControlField;
use crate::linalg::{CMatrix, CVector, HermitianEigen, I};
use crate::propagator::{interval_generator, propagate, Propagation, QuantumState};
use crate::system::LevelSystem;

/// |ψ_m|² below which a site counts as unoccupied and emits no jumps.
pub const OCCUPATION_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JumpEvent {
    /// Propagator step p; the jump happened in (t_p, t_{p+1}).
    pub step: usize,
    pub from: usize,
    pub to: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial: usize,
    pub events: Vec<JumpEvent>,
    #[serde(rename = "final")]
    pub final_site: usize,
}

impl Trajectory {
    pub fn stationary(site: usize) -> Self {
        Trajectory {
            initial: site,
            events: Vec::new(),
            final_site: site,
        }
    }

    pub fn jumps(&self) -> usize {
        self.events.len()
    }

    /// Site sequence with the time labels dropped.
    pub fn pathway(&self) -> Vec<usize> {
        std::iter::once(self.initial).chain(self.events.iter().map(|e| e.to)).collect()
    }

    /// Site occupied at grid time t_p (after every jump in steps < p).
    pub fn site_at(&self, p: usize) -> usize {
        self.events
            .iter()
            .take_while(|e| e.step < p)
            .last()
            .map_or(self.initial, |e| e.to)
    }

    /// Chain consistency, ordering, and graph confinement.
    pub fn validate(&self, sys: &LevelSystem) -> Result<()> {
        let mut site = self.initial;
        let mut last_step = 0;
        for (k, e) in self.events.iter().enumerate() {
            if e.from != site || e.from == e.to || (k > 0 && e.step < last_step) {
                return Err(Error::Parse(format!("inconsistent jump #{k}: {e:?} from site {site}")));
            }
            if !sys.coupled(e.from, e.to) {
                return Err(Error::Parse(format!("jump #{k} crosses uncoupled pair {}-{}", e.from, e.to)));
            }
            site = e.to;
            last_step = e.step;
        }
        if site != self.final_site {
            return Err(Error::Parse(format!(
                "final site {} does not match event chain end {site}",
                self.final_site
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialSite {
    Fixed(usize),
    /// Drawn from |ψ_n(0)|².
    Equilibrium,
    Distribution(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_traj: usize,
    pub seed: u64,
    pub initial: InitialSite,
    /// Sampler substeps per propagator step.
    #[serde(default = "one")]
    pub substeps: usize,
}

fn one() -> usize {
    1
}

impl EnsembleConfig {
    pub fn new(n_traj: usize, seed: u64, initial_site: usize) -> Self {
        EnsembleConfig {
            n_traj,
            seed,
            initial: InitialSite::Fixed(initial_site),
            substeps: 1,
        }
    }

    pub fn validate(&self, count: usize) -> Result<()> {
        if self.n_traj == 0 {
            return Err(Error::InvalidConfig("n_traj must be at least 1".into()));
        }
        if self.substeps == 0 {
            return Err(Error::InvalidConfig("substeps must be at least 1".into()));
        }
        match &self.initial {
            InitialSite::Fixed(site) if *site >= count => Err(Error::SiteOutOfRange { index: *site, count }),
            InitialSite::Distribution(w) if w.len() != count || w.iter().any(|&x| !(x >= 0.0)) || w.iter().sum::<f64>() <= 0.0 => {
                Err(Error::InvalidConfig("initial distribution must have one nonnegative weight per level".into()))
            }
            _ => Ok(()),
        }
    }
}

/// z_nm for one interval together with the unoccupied-site flags.
#[derive(Clone, Debug)]
pub struct ZMatrix {
    pub z: CMatrix,
    /// Sites with |ψ_m|² below [`OCCUPATION_FLOOR`]; their columns are zero.
    pub unoccupied: Vec<bool>,
    /// (n, m) pairs whose positive rate out of an unoccupied m was zeroed.
    pub suppressed: Vec<(usize, usize)>,
}

/// z_nm = −(i/ε)·G_nm·ψ_n*/ψ_m*.
pub fn z_matrix(state: &CVector, generator: &CMatrix, eps: f64) -> ZMatrix {
    let n = state.len();
    let weights: Vec<f64> = state.iter().map(|a| a.norm_sqr()).collect();
    let unoccupied: Vec<bool> = weights.iter().map(|&w| w < OCCUPATION_FLOOR).collect();
    let mut z = CMatrix::zeros(n, n);
    let mut suppressed = Vec::new();
    for m in 0..n {
        for r in 0..n {
            if r == m {
                continue;
            }
            // Written as (−iG)·(ψ_n* ψ_m)/|ψ_m|² so that the flux of the
            // reverse pair is the exact negated conjugate.
            let flux = (-I * generator[(r, m)]) * (state[r].conj() * state[m]);
            if unoccupied[m] {
                if flux.re > 0.0 {
                    suppressed.push((r, m));
                }
            } else {
                z[(r, m)] = flux / (eps * weights[m]);
            }
        }
    }
    ZMatrix { z, unoccupied, suppressed }
}

/// T_nm = max(0, 2 Re z_nm); zero diagonal.
pub fn jump_rates(z: &CMatrix) -> DMatrix<f64> {
    let n = z.nrows();
    DMatrix::from_fn(n, n, |r, c| if r == c { 0.0 } else { (2.0 * z[(r, c)].re).max(0.0) })
}

/// Σ_m (T_nm|ψ_m|² − T_mn|ψ_n|²) for every n.
pub fn flow_divergence(rates: &DMatrix<f64>, populations: &[f64]) -> Vec<f64> {
    let n = populations.len();
    (0..n)
        .map(|r| {
            (0..n)
                .filter(|&c| c != r)
                .map(|c| rates[(r, c)] * populations[c] - rates[(c, r)] * populations[r])
                .sum()
        })
        .collect()
}

fn advance_into<'a, R: Rng, F: Fn(usize) -> (&'a [f64], f64) + Copy>(
    rng: &mut R,
    site: usize,
    column: F,
    dt: f64,
    out: &mut Vec<(usize, usize)>,
) -> Result<usize> {
    let (rates, total) = column(site);
    if total == 0.0 {
        return Ok(site);
    }
    if total * dt > 1.0 {
        let mid = advance_into(rng, site, column, 0.5 * dt, out)?;
        return advance_into(rng, mid, column, 0.5 * dt, out);
    }
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    for (dest, &rate) in rates.iter().enumerate() {
        if dest == site || rate == 0.0 {
            continue;
        }
        let prob = rate * dt;
        if prob < 0.0 {
            return Err(Error::NegativeProbability { site, value: prob });
        }
        cumulative += prob;
        if u < cumulative {
            out.push((site, dest));
            return Ok(dest);
        }
    }
    Ok(site)
}

/// Draws one step of the jump process: move to n with probability T_nm·dt,
/// otherwise stay. Steps whose total jump probability exceeds one are
/// halved recursively.
pub fn advance_beable<R: Rng>(rng: &mut R, site: usize, rates: &DMatrix<f64>, dt: f64) -> Result<usize> {
    let n = rates.nrows();
    let column: Vec<f64> = (0..n).map(|r| if r == site { 0.0 } else { rates[(r, site)] }).collect();
    if let Some(&bad) = column.iter().find(|&&x| x < 0.0) {
        return Err(Error::NegativeProbability { site, value: bad * dt });
    }
    let total: f64 = column.iter().sum();
    let mut scratch = Vec::new();
    let col = |_s: usize| (column.as_slice(), total);
    if total * dt > 1.0 {
        // Subdivided steps may visit other sites; fall back to full lookups.
        let columns: Vec<Vec<f64>> = (0..n)
            .map(|c| (0..n).map(|r| if r == c { 0.0 } else { rates[(r, c)] }).collect())
            .collect();
        let totals: Vec<f64> = columns.iter().map(|c| c.iter().sum()).collect();
        return advance_into(rng, site, |s| (columns[s].as_slice(), totals[s]), dt, &mut scratch);
    }
    advance_into(rng, site, col, dt, &mut scratch)
}

/// Jump rates for every sampler interval of a propagation.
#[derive(Clone, Debug)]
pub struct RateSchedule {
    pub count: usize,
    pub substeps: usize,
    /// Sampler interval length ε/k, fs.
    pub dt: f64,
    /// Column-major rates per interval: `rates[i][m * count + n]` = T_nm.
    rates: Vec<Vec<f64>>,
    totals: Vec<Vec<f64>>,
    pub pairs: PairCounts,
    /// Number of (interval, coupled pair) instances.
    pub pair_instances: usize,
}

/// Per-(interval, coupled pair) diagnostics of a rate schedule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    /// The floor guard zeroed a positive rate out of an unoccupied site.
    pub guarded: usize,
    /// Both unguarded directions positive with an unoccupied endpoint.
    pub floor_exceptions: usize,
    /// Both unguarded directions positive between occupied sites.
    pub violations: usize,
}

impl RateSchedule {
    pub fn new(
        sys: &LevelSystem,
        field: &ControlField,
        propagation: &Propagation,
        substeps: usize,
        workers: Workers,
    ) -> Result<Self> {
        if substeps == 0 {
            return Err(Error::InvalidConfig("substeps must be at least 1".into()));
        }
        let count = sys.count;
        let steps = propagation.steps.len();
        let dt = field.step / substeps as f64;
        let edges = sys.edges();
        let per_step = workers.map(steps, |p| {
            let mut out = Vec::with_capacity(substeps);
            let mut psi = propagation.states[p].amplitudes.clone();
            for j in 0..substeps {
                let generator = if substeps == 1 {
                    propagation.steps[p].generator.clone()
                } else {
                    interval_generator(sys, field, p, j as f64 / substeps as f64, (j + 1) as f64 / substeps as f64)
                };
                let z = z_matrix(&psi, &generator, dt);
                let t = jump_rates(&z.z);
                let mut flat = vec![0.0; count * count];
                let mut totals = vec![0.0; count];
                for m in 0..count {
                    for r in 0..count {
                        flat[m * count + r] = t[(r, m)];
                        totals[m] += t[(r, m)];
                    }
                }
                let mut counts = PairCounts::default();
                for &(a, b) in &edges {
                    if z.suppressed.iter().any(|&(r, m)| (r, m) == (a, b) || (r, m) == (b, a)) {
                        counts.guarded += 1;
                    }
                    // Exclusivity is checked on the unguarded fluxes.
                    let forward = (-I * generator[(a, b)] * psi[a].conj() * psi[b]).re;
                    let backward = (-I * generator[(b, a)] * psi[b].conj() * psi[a]).re;
                    if forward > 0.0 && backward > 0.0 {
                        if z.unoccupied[a] || z.unoccupied[b] {
                            counts.floor_exceptions += 1;
                        } else {
                            counts.violations += 1;
                        }
                    }
                }
                out.push((flat, totals, counts));
                if j + 1 < substeps {
                    psi = HermitianEigen::new(&generator).apply_exp_minus_i(1.0, &psi);
                }
            }
            out
        });
        let mut rates = Vec::with_capacity(steps * substeps);
        let mut totals = Vec::with_capacity(steps * substeps);
        let mut pairs = PairCounts::default();
        for (flat, tot, counts) in per_step.into_iter().flatten() {
            rates.push(flat);
            totals.push(tot);
            pairs.guarded += counts.guarded;
            pairs.floor_exceptions += counts.floor_exceptions;
            pairs.violations += counts.violations;
        }
        Ok(RateSchedule {
            count,
            substeps,
            dt,
            pair_instances: rates.len() * edges.len(),
            rates,
            totals,
            pairs,
        })
    }

    pub fn intervals(&self) -> usize {
        self.rates.len()
    }

    /// T_nm for sampler interval `i`.
    pub fn rate(&self, i: usize, n: usize, m: usize) -> f64 {
        self.rates[i][m * self.count + n]
    }

    /// Fraction of pair instances excused from exclusivity by the floor.
    pub fn floor_exception_rate(&self) -> f64 {
        self.fraction(self.pairs.floor_exceptions)
    }

    /// Fraction of pair instances where the floor guard changed a rate.
    pub fn guard_rate(&self) -> f64 {
        self.fraction(self.pairs.guarded)
    }

    fn fraction(&self, count: usize) -> f64 {
        if self.pair_instances == 0 {
            0.0
        } else {
            count as f64 / self.pair_instances as f64
        }
    }

    /// One trajectory from its own counter-based stream (seed, index).
    pub fn sample(&self, seed: u64, index: usize, initial: &InitialSite, initial_populations: &[f64]) -> Result<Trajectory> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        let start = match initial {
            InitialSite::Fixed(site) => *site,
            InitialSite::Equilibrium => draw_site(&mut rng, initial_populations),
            InitialSite::Distribution(weights) => draw_site(&mut rng, weights),
        };
        let mut site = start;
        let mut events = Vec::new();
        let mut jumps = Vec::new();
        for i in 0..self.rates.len() {
            let column = |s: usize| (&self.rates[i][s * self.count..(s + 1) * self.count], self.totals[i][s]);
            jumps.clear();
            site = advance_into(&mut rng, site, column, self.dt, &mut jumps)?;
            let step = i / self.substeps;
            events.extend(jumps.iter().map(|&(from, to)| JumpEvent { step, from, to }));
        }
        Ok(Trajectory {
            initial: start,
            events,
            final_site: site,
        })
    }
}

fn draw_site<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut cumulative = 0.0;
    for (site, &w) in weights.iter().enumerate() {
        cumulative += w;
        if u < cumulative {
            return site;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Propagation, rate schedule, and sampled trajectories of one run.
#[derive(Clone, Debug)]
pub struct Ensemble {
    pub propagation: Propagation,
    pub schedule: RateSchedule,
    pub trajectories: Vec<Trajectory>,
}

fn initial_state(sys: &LevelSystem, cfg: &EnsembleConfig) -> QuantumState {
    match &cfg.initial {
        InitialSite::Fixed(site) => QuantumState::basis(sys.count, *site),
        InitialSite::Equilibrium => QuantumState::basis(sys.count, 0),
        InitialSite::Distribution(weights) => {
            let total: f64 = weights.iter().sum();
            QuantumState::from_amplitudes(weights.iter().map(|w| Complex64::new((w / total).sqrt(), 0.0)).collect())
        }
    }
}

/// Samples `cfg.n_traj` trajectories for an already-propagated state.
pub fn sample_ensemble(schedule: &RateSchedule, propagation: &Propagation, cfg: &EnsembleConfig, workers: Workers) -> Result<Vec<Trajectory>> {
    let pops = propagation.states[0].populations();
    workers
        .map(cfg.n_traj, |k| schedule.sample(cfg.seed, k, &cfg.initial, &pops))
        .into_iter()
        .collect()
}

/// Propagates from the configured initial state and samples the ensemble.
///
/// For [`InitialSite::Equilibrium`] use [`run_ensemble_from`] with the
/// desired initial wavefunction; here it starts from the ground state.
pub fn run_ensemble(sys: &LevelSystem, field: &ControlField, cfg: &EnsembleConfig, workers: Workers) -> Result<Ensemble> {
    cfg.validate(sys.count)?;
    run_ensemble_from(sys, field, &initial_state(sys, cfg), cfg, workers)
}

pub fn run_ensemble_from(
    sys: &LevelSystem,
    field: &ControlField,
    initial: &QuantumState,
    cfg: &EnsembleConfig,
    workers: Workers,
) -> Result<Ensemble> {
    cfg.validate(sys.count)?;
    let propagation = propagate(sys, field, initial)?;
    let schedule = RateSchedule::new(sys, field, &propagation, cfg.substeps, workers)?;
    let trajectories = sample_ensemble(&schedule, &propagation, cfg, workers)?;
    Ok(Ensemble {
        propagation,
        schedule,
        trajectories,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_generator_gives_zero_z() {
        let psi = CVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let z = z_matrix(&psi, &CMatrix::zeros(2, 2), 0.1);
        assert!(z.z.iter().all(|x| *x == c(0.0, 0.0)));
    }

    #[test]
    fn no_flow_into_zero_amplitude_site() {
        let psi = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let mut g = CMatrix::zeros(3, 3);
        g[(1, 0)] = c(0.3, 0.1);
        g[(0, 1)] = c(0.3, -0.1);
        let z = z_matrix(&psi, &g, 0.1);
        assert_eq!(z.z[(1, 0)], c(0.0, 0.0));
        assert!(z.unoccupied[1] && z.unoccupied[2] && !z.unoccupied[0]);
    }

    #[test]
    fn two_level_real_generator_example() {
        // ψ = (1, i)/√2, real G: z₁₀ = −(i/ε) G₁₀ ψ₁*/ψ₀* = −(i/ε) G₁₀ (−i) = −G₁₀/ε.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = CVector::from_vec(vec![c(s, 0.0), c(0.0, s)]);
        let (g10, eps) = (0.37, 0.05);
        let mut g = CMatrix::zeros(2, 2);
        g[(1, 0)] = c(g10, 0.0);
        g[(0, 1)] = c(g10, 0.0);
        let z = z_matrix(&psi, &g, eps).z;
        let oracle = -c(0.0, 1.0) / eps * c(g10, 0.0) * (c(0.0, s).conj() / c(s, 0.0).conj());
        assert!((z[(1, 0)] - oracle).norm() < 1e-14);
        assert!((z[(1, 0)].re + g10 / eps).abs() < 1e-12);
        let t = jump_rates(&z);
        assert_eq!(t[(1, 0)], 0.0);
        assert!(t[(0, 1)] > 0.0);
    }

    #[test]
    fn nonpositive_real_part_gives_zero_rate() {
        let mut z = CMatrix::zeros(2, 2);
        z[(0, 1)] = c(-0.2, 5.0);
        z[(1, 0)] = c(0.0, -1.0);
        let t = jump_rates(&z);
        assert_eq!(t[(0, 1)], 0.0);
        assert_eq!(t[(1, 0)], 0.0);
        z[(1, 0)] = c(0.25, 0.0);
        assert_eq!(jump_rates(&z)[(1, 0)], 0.5);
    }

    fn random_instance(n: usize, values: &[f64]) -> (CVector, CMatrix) {
        let mut it = values.iter().copied();
        let mut psi = CVector::from_fn(n, |_, _| c(it.next().unwrap(), it.next().unwrap()));
        let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        psi /= c(norm, 0.0);
        let mut g = CMatrix::zeros(n, n);
        for r in 0..n {
            for col in (r + 1)..n {
                let v = c(it.next().unwrap(), it.next().unwrap());
                g[(r, col)] = v;
                g[(col, r)] = v.conj();
            }
        }
        (psi, g)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn rates_are_exclusive(values in proptest::collection::vec(-1.0f64..1.0, 4 * 2 + 4 * 3)) {
            let (psi, g) = random_instance(4, &values);
            let zm = z_matrix(&psi, &g, 0.025);
            let t = jump_rates(&zm.z);
            for r in 0..4 {
                for col in 0..4 {
                    if r == col || zm.unoccupied[r] || zm.unoccupied[col] { continue; }
                    prop_assert_eq!(t[(r, col)] * t[(col, r)], 0.0);
                    let lhs = zm.z[(r, col)].re * psi[col].norm_sqr();
                    let rhs = -zm.z[(col, r)].re * psi[r].norm_sqr();
                    prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1e-300));
                }
            }
        }
    }

    #[test]
    fn stays_when_column_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 5.0, 0.0]);
        for _ in 0..100 {
            assert_eq!(advance_beable(&mut rng, 1, &t, 0.1).unwrap(), 1);
        }
    }

    #[test]
    fn forced_transition() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 4.0, 0.0]);
        for _ in 0..100 {
            assert_eq!(advance_beable(&mut rng, 0, &t, 0.25).unwrap(), 1);
        }
    }

    #[test]
    fn empirical_jump_frequency() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 3.0, 0.0]);
        let draws = 100_000;
        let jumps = (0..draws).filter(|_| advance_beable(&mut rng, 0, &t, 0.1).unwrap() == 1).count();
        let freq = jumps as f64 / draws as f64;
        // binomial σ = sqrt(0.3·0.7/10⁵) ≈ 0.00145; 0.005 is ≈ 3.4σ
        assert!((freq - 0.3).abs() < 0.005, "{freq}");
    }

    #[test]
    fn negative_rate_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, -1.0, 0.0]);
        assert!(matches!(advance_beable(&mut rng, 0, &t, 0.1), Err(Error::NegativeProbability { .. })));
    }

    #[test]
    fn overflowing_step_is_subdivided() {
        // T ε = 1.6 for 0 → 1 is split into two halves of 0.8 each, and
        // 1 → 0 is closed, so the beable ends at 1 with probability 0.96.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 16.0, 0.0]);
        let draws = 20_000;
        let moved = (0..draws).filter(|_| advance_beable(&mut rng, 0, &t, 0.1).unwrap() == 1).count();
        let freq = moved as f64 / draws as f64;
        assert!((freq - 0.96).abs() < 0.006, "{freq}");
    }

    #[test]
    fn zero_field_ensemble_never_jumps() {
        let sys = LevelSystem::seven_level_example();
        let field = ControlField::zero(0.025, 200).unwrap();
        let ens = run_ensemble(&sys, &field, &EnsembleConfig::new(50, 9, 0), Workers::sequential()).unwrap();
        assert!(ens.trajectories.iter().all(|t| t.events.is_empty() && t.final_site == 0));
    }

    #[test]
    fn trajectory_helpers() {
        let t = Trajectory {
            initial: 0,
            events: vec![
                JumpEvent { step: 3, from: 0, to: 2 },
                JumpEvent { step: 7, from: 2, to: 3 },
            ],
            final_site: 3,
        };
        assert_eq!(t.pathway(), vec![0, 2, 3]);
        assert_eq!(t.site_at(0), 0);
        assert_eq!(t.site_at(3), 0);
        assert_eq!(t.site_at(4), 2);
        assert_eq!(t.site_at(8), 3);
        let sys = LevelSystem::seven_level_example();
        t.validate(&sys).unwrap();
        let mut broken = t.clone();
        broken.final_site = 2;
        assert!(broken.validate(&sys).is_err());
        let mut uncoupled = t;
        uncoupled.events[1].to = 6;
        uncoupled.final_site = 6;
        assert!(uncoupled.validate(&sys).is_err());
    }
}
