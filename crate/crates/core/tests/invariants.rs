use beable_core::analysis::{jump_correlation, jump_moments, occupancy_series, pathway_table, JumpSelector};
use beable_core::io::{read_ensemble_csv, write_ensemble_csv};
use beable_core::mechanism::{estimate_jmin, lm_fit, FitOptions, FitWindow, Measurement, ModulationDataset};
use beable_core::sampler::{run_ensemble, EnsembleConfig, JumpEvent, Trajectory};
use beable_core::{ControlField, LevelSystem, Workers};
use proptest::prelude::*;

const SITES: usize = 4;
const STEPS: usize = 60;

/// Trajectories on the complete graph over `SITES` levels with
/// nondecreasing jump steps below `STEPS`.
fn trajectory() -> impl Strategy<Value = Trajectory> {
    (0..SITES, prop::collection::vec((0..STEPS, 1..SITES), 0..8)).prop_map(|(initial, raw)| {
        let mut steps: Vec<usize> = raw.iter().map(|r| r.0).collect();
        steps.sort_unstable();
        let mut site = initial;
        let events = steps
            .into_iter()
            .zip(raw.iter().map(|r| r.1))
            .map(|(step, shift)| {
                let to = (site + shift) % SITES;
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
    })
}

fn ensemble() -> impl Strategy<Value = Vec<Trajectory>> {
    prop::collection::vec(trajectory(), 1..40)
}

proptest! {
    #[test]
    fn pathway_probabilities_sum_to_one(trajs in ensemble()) {
        let table = pathway_table(&trajs);
        let total: usize = table.rows.iter().map(|r| r.count).sum();
        prop_assert_eq!(total, trajs.len());
        let p: f64 = table.rows.iter().map(|r| r.probability).sum();
        prop_assert!((p - 1.0).abs() < 1e-12);
        for pair in table.rows.windows(2) {
            prop_assert!(pair[0].count > pair[1].count || (pair[0].count == pair[1].count && pair[0].pathway < pair[1].pathway));
        }
    }

    #[test]
    fn moments_obey_jensen_and_jmin(trajs in ensemble()) {
        let m = jump_moments(&trajs, 4, None).unwrap();
        prop_assert!(m.moments[0] == 1.0);
        prop_assert!(m.mean() >= m.j_min as f64 - 1e-12);
        prop_assert!(m.moments[2] >= m.mean().powi(2) * (1.0 - 1e-12));
        prop_assert!(m.moments[4] >= m.moments[2].powi(2) * (1.0 - 1e-12));
    }

    #[test]
    fn occupancy_sums_to_one(trajs in ensemble()) {
        for row in occupancy_series(&trajs, STEPS, SITES) {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn jump_correlation_is_even_in_tau(trajs in ensemble(), from in 0..SITES, shift in 1..SITES) {
        let selector = JumpSelector::transition(from, (from + shift) % SITES);
        let taus: Vec<f64> = (-12..=12).map(|k| k as f64 * 0.1).collect();
        let j2 = jump_correlation(&trajs, &selector, STEPS, 0.1, &taus).unwrap();
        for k in 0..taus.len() {
            prop_assert_eq!(j2[k], j2[taus.len() - 1 - k]);
        }
    }

    #[test]
    fn ensemble_csv_round_trips(trajs in ensemble()) {
        let mut buf = Vec::new();
        write_ensemble_csv(&mut buf, &trajs).unwrap();
        prop_assert_eq!(read_ensemble_csv(buf.as_slice()).unwrap(), trajs);
    }

    #[test]
    fn jmin_recovers_leading_power(j in 1usize..9, c in 0.2f64..3.0, d in -0.5f64..0.5) {
        // P = (c M^j (1 + d M))², analytic in M with leading power j.
        let rows = (1..=160).map(|i| {
            let m = i as f64 * 0.01;
            Measurement { m, population: (c * m.powi(j as i32) * (1.0 + d * m)).powi(2), sigma: 0.0 }
        }).collect();
        let ds = ModulationDataset::from_rows(rows).unwrap();
        prop_assert_eq!(estimate_jmin(&ds, 0.2).unwrap().j_min, j);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sampled_trajectories_respect_the_coupling_graph(seed in any::<u64>(), amp in 0.2f64..1.5) {
        let sys = LevelSystem::from_couplings(vec![0.0, 1.0, 2.2, 2.9], &[(0, 1, 2.0), (1, 2, 2.5), (2, 3, 1.5)]).unwrap();
        let field = ControlField::from_fn(0.05, 400, |t| amp * ((1.0 * t).cos() + (1.2 * t).cos() + (0.7 * t).cos())).unwrap();
        let ens = run_ensemble(&sys, &field, &EnsembleConfig::new(200, seed, 0), Workers::new(2)).unwrap();
        for t in &ens.trajectories {
            prop_assert!(t.validate(&sys).is_ok());
        }
        prop_assert_eq!(ens.schedule.pairs.violations, 0);
    }
}

#[test]
fn shipped_system_file_matches_the_builtin_example() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/seven_level.json");
    let sys = LevelSystem::load_json(path).unwrap();
    assert_eq!(sys, LevelSystem::seven_level_example());
    assert_eq!(sys.shortest_jumps(0, 6), Some(4));
}

#[test]
fn fit_reports_missing_data() {
    let rows = (1..=20)
        .map(|i| Measurement {
            m: i as f64 * 0.01,
            population: 0.1,
            sigma: 0.0,
        })
        .collect();
    let ds = ModulationDataset::from_rows(rows).unwrap();
    assert!(lm_fit(&ds, FitWindow::new(0.5, 1.0).unwrap(), &FitOptions::new(4, Some(4))).is_err());
}
