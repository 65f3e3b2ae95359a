//! Mechanism observables of trajectory ensembles.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ControlField;
use crate::propagator::Propagation;
use crate::sampler::{z_matrix, Trajectory};

/// Empirical P_n(t_p).
pub fn occupancy(trajs: &[Trajectory], p: usize, count: usize) -> Vec<f64> {
    let mut hist = vec![0u64; count];
    for t in trajs {
        hist[t.site_at(p)] += 1;
    }
    let total = trajs.len() as f64;
    hist.into_iter().map(|h| h as f64 / total).collect()
}

/// Empirical occupancies at every grid point `0..=steps`.
pub fn occupancy_series(trajs: &[Trajectory], steps: usize, count: usize) -> Vec<Vec<f64>> {
    // Per-site difference arrays over the grid index.
    let mut delta = vec![vec![0i64; steps + 2]; count];
    for t in trajs {
        delta[t.initial][0] += 1;
        for e in &t.events {
            delta[e.from][e.step + 1] -= 1;
            delta[e.to][e.step + 1] += 1;
        }
    }
    let total = trajs.len() as f64;
    let mut running = vec![0i64; count];
    (0..=steps)
        .map(|p| {
            (0..count)
                .map(|n| {
                    running[n] += delta[n][p];
                    running[n] as f64 / total
                })
                .collect()
        })
        .collect()
}

/// Site sequence of a trajectory with jump times dropped.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pathway(pub Vec<usize>);

impl Pathway {
    pub fn of(traj: &Trajectory) -> Self {
        Pathway(traj.pathway())
    }

    pub fn jumps(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn first(&self) -> usize {
        self.0[0]
    }

    pub fn last(&self) -> usize {
        *self.0.last().expect("pathway has a start")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let sites = text
            .split(|c: char| c.is_whitespace() || c == '-')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<usize>().map_err(|e| Error::Parse(format!("pathway '{text}': {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if sites.is_empty() {
            return Err(Error::Parse("empty pathway".into()));
        }
        Ok(Pathway(sites))
    }
}

impl fmt::Display for Pathway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, s) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathwayRow {
    pub pathway: Pathway,
    pub count: usize,
    pub probability: f64,
    /// P·(n_traj·P)^{−1/2}
    pub standard_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathwayTable {
    pub n_traj: usize,
    pub rows: Vec<PathwayRow>,
}

impl PathwayTable {
    pub fn top(&self, k: usize) -> &[PathwayRow] {
        &self.rows[..k.min(self.rows.len())]
    }

    pub fn probability_of(&self, pathway: &Pathway) -> f64 {
        self.rows.iter().find(|r| &r.pathway == pathway).map_or(0.0, |r| r.probability)
    }
}

/// Pathway frequencies, ordered by count (descending) then site sequence.
pub fn pathway_table(trajs: &[Trajectory]) -> PathwayTable {
    let mut counts: HashMap<Pathway, usize> = HashMap::new();
    for t in trajs {
        *counts.entry(Pathway::of(t)).or_default() += 1;
    }
    let n = trajs.len();
    let mut rows: Vec<PathwayRow> = counts
        .into_iter()
        .map(|(pathway, count)| {
            let probability = count as f64 / n as f64;
            PathwayRow {
                pathway,
                count,
                probability,
                standard_error: (probability / n as f64).sqrt(),
            }
        })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.pathway.cmp(&b.pathway)));
    PathwayTable { n_traj: n, rows }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpMoments {
    /// ⟨j^k⟩ for k = 0..=k_max.
    pub moments: Vec<f64>,
    pub j_min: usize,
    pub j_max: usize,
    /// Trajectories included.
    pub count: usize,
}

impl JumpMoments {
    pub fn mean(&self) -> f64 {
        self.moments.get(1).copied().unwrap_or(f64::NAN)
    }

    pub fn variance(&self) -> f64 {
        self.moments[2] - self.moments[1] * self.moments[1]
    }
}

/// Exact sample moments of the jump count, optionally restricted to
/// trajectories ending on `only_reaching`.
pub fn jump_moments(trajs: &[Trajectory], k_max: usize, only_reaching: Option<usize>) -> Result<JumpMoments> {
    let counts: Vec<u128> = trajs
        .iter()
        .filter(|t| only_reaching.is_none_or(|site| t.final_site == site))
        .map(|t| t.jumps() as u128)
        .collect();
    if counts.is_empty() {
        return Err(Error::EmptySelection(match only_reaching {
            Some(site) => format!("no trajectory ends on site {site}"),
            None => "empty ensemble".into(),
        }));
    }
    let n = counts.len();
    let moments = (0..=k_max)
        .map(|k| {
            let total: u128 = counts.iter().map(|&j| j.pow(k as u32)).sum();
            total as f64 / n as f64
        })
        .collect();
    Ok(JumpMoments {
        moments,
        j_min: *counts.iter().min().expect("nonempty") as usize,
        j_max: *counts.iter().max().expect("nonempty") as usize,
        count: n,
    })
}

/// Histogram of jump counts: entry j is the number of trajectories with j jumps.
pub fn jump_histogram(trajs: &[Trajectory], only_reaching: Option<usize>) -> Vec<usize> {
    let mut hist = Vec::new();
    for t in trajs.iter().filter(|t| only_reaching.is_none_or(|s| t.final_site == s)) {
        if hist.len() <= t.jumps() {
            hist.resize(t.jumps() + 1, 0);
        }
        hist[t.jumps()] += 1;
    }
    hist
}

/// Chooses jumps by transition and, optionally, by the pathway of their trajectory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct JumpSelector {
    pub from: Option<usize>,
    pub to: Option<usize>,
    pub pathway: Option<Pathway>,
}

impl JumpSelector {
    pub fn transition(from: usize, to: usize) -> Self {
        JumpSelector {
            from: Some(from),
            to: Some(to),
            pathway: None,
        }
    }

    pub fn on_pathway(mut self, pathway: Pathway) -> Self {
        self.pathway = Some(pathway);
        self
    }
}

/// J_Ω(t_p): number of selected jumps in (t_p, t_{p+1}) across the ensemble.
pub fn jump_counts(trajs: &[Trajectory], selector: &JumpSelector, steps: usize) -> Vec<u64> {
    let mut counts = vec![0u64; steps];
    for t in trajs {
        if let Some(path) = &selector.pathway {
            if Pathway::of(t) != *path {
                continue;
            }
        }
        for e in &t.events {
            let hit = selector.from.is_none_or(|f| f == e.from) && selector.to.is_none_or(|to| to == e.to);
            if hit && e.step < steps {
                counts[e.step] += 1;
            }
        }
    }
    counts
}

/// J²_Ω(τ) = (1/N_τ) Σ_p J_Ω(t_p) J_Ω(t_p + τ), with out-of-grid terms
/// dropped and N_τ the number of retained terms.
pub fn jump_correlation(
    trajs: &[Trajectory],
    selector: &JumpSelector,
    steps: usize,
    step: f64,
    tau_grid: &[f64],
) -> Result<Vec<f64>> {
    if tau_grid.is_empty() {
        return Err(Error::EmptySelection("tau grid is empty".into()));
    }
    let counts = jump_counts(trajs, selector, steps);
    Ok(tau_grid.iter().map(|&tau| lagged_product(&counts, (tau / step).round() as i64)).collect())
}

fn lagged_product(counts: &[u64], lag: i64) -> f64 {
    let n = counts.len() as i64;
    let shift = lag.abs();
    if shift >= n {
        return 0.0;
    }
    let terms = (n - shift) as usize;
    let sum: u128 = (0..terms)
        .map(|p| counts[p] as u128 * counts[p + shift as usize] as u128)
        .sum();
    sum as f64 / terms as f64
}

/// Re z_nm(t_p) along a propagation.
pub fn rez_series(propagation: &Propagation, n: usize, m: usize) -> Vec<f64> {
    propagation
        .steps
        .iter()
        .zip(&propagation.states)
        .map(|(op, state)| z_matrix(&state.amplitudes, &op.generator, propagation.step).z[(n, m)].re)
        .collect()
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientData("need two equal-length series of length ≥ 2".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("zero variance in correlation input".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Pearson correlation of |E(t_p)| with `series[p]` over grid points in `window` (fs).
pub fn field_rate_correlation(field: &ControlField, series: &[f64], window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = window;
    if !(lo < hi) || lo < 0.0 || hi > field.horizon() + 1e-9 {
        return Err(Error::InvalidConfig(format!("window ({lo}, {hi}) not within the field grid")));
    }
    let (mut e, mut s) = (Vec::new(), Vec::new());
    for (p, &value) in series.iter().enumerate() {
        let t = field.time(p);
        if t >= lo && t <= hi {
            e.push(field.value(p).abs());
            s.push(value);
        }
    }
    pearson(&e, &s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::JumpEvent;

    fn traj(initial: usize, jumps: &[(usize, usize)]) -> Trajectory {
        let mut site = initial;
        let events = jumps
            .iter()
            .map(|&(step, to)| {
                let e = JumpEvent { step, from: site, to };
                site = to;
                e
            })
            .collect();
        Trajectory {
            initial,
            events,
            final_site: site,
        }
    }

    #[test]
    fn occupancy_examples() {
        let trajs = vec![traj(0, &[(2, 1)]), traj(0, &[]), traj(0, &[(5, 2), (6, 3)])];
        assert_eq!(occupancy(&trajs, 0, 4), vec![1.0, 0.0, 0.0, 0.0]);
        let series = occupancy_series(&trajs, 10, 4);
        for p in 0..=10 {
            let direct = occupancy(&trajs, p, 4);
            assert_eq!(series[p], direct);
            assert!((direct.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
        assert_eq!(series[3], vec![2.0 / 3.0, 1.0 / 3.0, 0.0, 0.0]);
    }

    #[test]
    fn single_trajectory_table() {
        let table = pathway_table(&[traj(0, &[(1, 2), (4, 3)])]);
        assert_eq!(table.rows.len(), 1);
        assert_eq!(table.rows[0].probability, 1.0);
        assert_eq!(table.rows[0].pathway, Pathway(vec![0, 2, 3]));
    }

    #[test]
    fn five_trajectory_fixture_table() {
        let trajs = vec![
            traj(0, &[(1, 2), (3, 3)]),
            traj(0, &[(2, 1), (3, 3)]),
            traj(0, &[(5, 2), (9, 3)]),
            traj(0, &[(1, 2)]),
            traj(0, &[(4, 1), (6, 3)]),
        ];
        let table = pathway_table(&trajs);
        let got: Vec<(String, usize)> = table.rows.iter().map(|r| (r.pathway.to_string(), r.count)).collect();
        assert_eq!(
            got,
            vec![("0 1 3".to_string(), 2), ("0 2 3".to_string(), 2), ("0 2".to_string(), 1)]
        );
        assert!((table.rows.iter().map(|r| r.probability).sum::<f64>() - 1.0).abs() < 1e-15);
        let se = table.rows[0].standard_error;
        assert!((se - 0.4 * (5.0f64 * 0.4).powf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn moments_examples() {
        let zeros = vec![traj(0, &[]); 3];
        let m = jump_moments(&zeros, 3, None).unwrap();
        assert_eq!(m.mean(), 0.0);
        assert_eq!(m.j_min, 0);

        let four = [(1, 1), (2, 3), (3, 5), (4, 6)];
        let six = [(1, 1), (2, 3), (3, 5), (4, 6), (5, 5), (6, 6)];
        let trajs = vec![traj(0, &four), traj(0, &four), traj(0, &six), traj(0, &[(1, 2)])];
        let m = jump_moments(&trajs, 2, Some(6)).unwrap();
        assert_eq!(m.count, 3);
        assert!((m.moments[1] - 14.0 / 3.0).abs() < 1e-14);
        assert!((m.moments[2] - 68.0 / 3.0).abs() < 1e-14);
        assert_eq!(m.j_min, 4);
        assert!(jump_moments(&trajs, 2, Some(4)).is_err());
        assert_eq!(jump_histogram(&trajs, Some(6)), vec![0, 0, 0, 0, 2, 0, 1]);
    }

    #[test]
    fn correlation_examples() {
        let steps = 20;
        let sel = JumpSelector::transition(5, 6);
        let none = vec![traj(0, &[(3, 1)])];
        let c = jump_correlation(&none, &sel, steps, 0.5, &[0.0, 1.0, -1.0]).unwrap();
        assert!(c.iter().all(|&x| x == 0.0));

        let single = vec![traj(5, &[(7, 6)])];
        let c = jump_correlation(&single, &sel, steps, 0.5, &[0.0, 0.5, -0.5, 3.0]).unwrap();
        assert_eq!(c, vec![1.0 / 20.0, 0.0, 0.0, 0.0]);

        // Jumps at q = 4 and q + d = 9.
        let double = vec![traj(5, &[(4, 6), (6, 5), (9, 6)])];
        let taus: Vec<f64> = (-12..=12).map(|k| k as f64 * 0.5).collect();
        let c = jump_correlation(&double, &sel, steps, 0.5, &taus).unwrap();
        for (k, value) in (-12i64..=12).zip(&c) {
            let direct = {
                let counts: Vec<u64> = (0..steps).map(|p| u64::from(p == 4 || p == 9)).collect();
                let valid: Vec<usize> = (0..steps).filter(|&p| (p as i64 + k) >= 0 && ((p as i64 + k) as usize) < steps).collect();
                valid.iter().map(|&p| counts[p] * counts[(p as i64 + k) as usize]).sum::<u64>() as f64 / valid.len() as f64
            };
            assert_eq!(*value, direct, "lag {k}");
            if k == 0 || k.abs() == 5 {
                assert!(*value > 0.0);
            } else {
                assert_eq!(*value, 0.0);
            }
        }
        assert!(jump_correlation(&double, &sel, steps, 0.5, &[]).is_err());
    }

    #[test]
    fn pathway_selector_filters() {
        let trajs = vec![traj(5, &[(2, 6)]), traj(3, &[(1, 5), (2, 6)])];
        let sel = JumpSelector::transition(5, 6).on_pathway(Pathway(vec![5, 6]));
        assert_eq!(jump_counts(&trajs, &sel, 5), vec![0, 0, 1, 0, 0]);
    }

    #[test]
    fn pearson_extremes() {
        let field = ControlField::from_fn(0.1, 100, |t| (0.7 * t).sin()).unwrap();
        let abs: Vec<f64> = field.values().iter().map(|e| e.abs()).collect();
        let neg: Vec<f64> = abs.iter().map(|x| -x).collect();
        assert!((field_rate_correlation(&field, &abs, (2.0, 8.0)).unwrap() - 1.0).abs() < 1e-12);
        assert!((field_rate_correlation(&field, &neg, (2.0, 8.0)).unwrap() + 1.0).abs() < 1e-12);
        let flat = vec![1.0; 101];
        assert!(field_rate_correlation(&field, &flat, (2.0, 8.0)).is_err());
        assert!(field_rate_correlation(&field, &abs, (8.0, 2.0)).is_err());
    }

    #[test]
    fn pathway_parse_and_display() {
        let p = Pathway::parse("0 2 3-5 6").unwrap();
        assert_eq!(p, Pathway(vec![0, 2, 3, 5, 6]));
        assert_eq!(p.to_string(), "0 2 3 5 6");
        assert_eq!(p.jumps(), 4);
        assert!(Pathway::parse("").is_err());
    }
}
