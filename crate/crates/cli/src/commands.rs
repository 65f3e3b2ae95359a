use std::path::{Path, PathBuf};

use beable_core::analysis::{
    field_rate_correlation, jump_correlation, jump_moments, occupancy_series, pathway_table, rez_series, JumpMoments,
    JumpSelector, PathwayRow,
};
use beable_core::io;
use beable_core::mechanism::{
    estimate_jmin, model_population, range_search, select_best, sweep, Exclusion, FitOptions, FitResult, FitSpace, JminEstimate,
    ModulationDataset, PathologicalRule, RangeReport, SweepConfig, WindowGrid,
};
use beable_core::optimizer::{optimize, OptimizationResult};
use beable_core::sampler::{run_ensemble, EnsembleConfig, InitialSite, PairCounts};
use beable_core::svg::{heatmap, line_plot, Series};
use beable_core::{ControlField, Error as CoreError, LevelSystem, QuantumState};
use serde::Serialize;

use crate::check::{Artifact, Kind};
use crate::config::RunConfig;
use crate::error::CliError;

/// Files written by a run, for the self-check.
#[derive(Debug, Default)]
pub struct Outputs {
    pub artifacts: Vec<Artifact>,
}

impl Outputs {
    fn add(&mut self, path: PathBuf, kind: Kind) -> PathBuf {
        self.artifacts.push(Artifact { path: path.clone(), kind });
        path
    }

    fn svg(&mut self, dir: &Path, name: &str, text: String) -> Result<(), CliError> {
        let path = self.add(dir.join(name), Kind::Svg);
        std::fs::write(path, text).map_err(CoreError::from)?;
        Ok(())
    }
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::Config(format!("cannot create {}: {e}", cfg.out.display())))?;
    Ok(cfg.out.clone())
}

pub fn load_field(path: &Path) -> Result<ControlField, CliError> {
    let field = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => ControlField::load_json(path)?,
        _ => io::load_field_csv(path)?,
    };
    Ok(field)
}

pub fn require_field(cfg: &RunConfig) -> Result<ControlField, CliError> {
    let path = cfg.field.as_ref().ok_or_else(|| CliError::Config("a field file is required (--field)".into()))?;
    load_field(path)
}

#[derive(Debug, Serialize)]
struct OptimizeSummary {
    transfer: f64,
    objective: f64,
    goal: f64,
    iterations: usize,
    stagnated: bool,
    fluence: f64,
}

pub fn cmd_optimize(cfg: &RunConfig, sys: &LevelSystem, outputs: &mut Outputs) -> Result<OptimizationResult, CliError> {
    let dir = out_dir(cfg)?;
    let opt = cfg.optimizer(sys);
    let result = optimize(sys, &opt)?;
    io::save_field_csv(outputs.add(dir.join("field.csv"), Kind::Field), &result.field)?;
    let log_path = outputs.add(
        dir.join("convergence.csv"),
        Kind::Table(&["iteration", "objective", "transfer", "step_length", "gradient_norm"]),
    );
    io::save_with(log_path, |w| io::write_convergence_csv(w, &result.log))?;
    let summary = OptimizeSummary {
        transfer: result.transfer,
        objective: result.objective,
        goal: opt.goal,
        iterations: result.log.len(),
        stagnated: result.stagnated,
        fluence: result.field.energy(),
    };
    io::save_json(outputs.add(dir.join("optimize.json"), Kind::Json(&["transfer", "iterations"])), &summary)?;
    let times: Vec<f64> = (0..=result.field.steps()).map(|p| result.field.time(p)).collect();
    outputs.svg(
        &dir,
        "field.svg",
        line_plot("Optimized field", "t (fs)", "E (V/Å)", &[Series::new("E(t)", times, result.field.values())]),
    )?;
    let iters: Vec<f64> = result.log.iter().map(|r| r.iteration as f64).collect();
    outputs.svg(
        &dir,
        "convergence.svg",
        line_plot(
            "Optimization",
            "iteration",
            "transfer",
            &[Series::new("transfer", iters, result.log.iter().map(|r| r.transfer).collect())],
        ),
    )?;
    println!(
        "optimize: transfer {:.6} after {} iterations (goal {}, stagnated {})",
        result.transfer, summary.iterations, opt.goal, result.stagnated
    );
    if result.transfer < opt.goal {
        return Err(CliError::BelowGoal {
            transfer: result.transfer,
            goal: opt.goal,
        });
    }
    Ok(result)
}

#[derive(Debug, Serialize)]
struct Discrepancy {
    max: f64,
    bound: f64,
    time: f64,
    site: usize,
    checked_times: usize,
}

#[derive(Debug, Serialize)]
struct FieldRate {
    pair: (usize, usize),
    window: (f64, f64),
    coefficient: Option<f64>,
}

#[derive(Debug, Serialize)]
struct SimulateSummary {
    n_traj: usize,
    seed: u64,
    substeps: usize,
    initial: usize,
    target: usize,
    target_population: f64,
    target_occupancy: f64,
    max_norm_drift: f64,
    discrepancy: Discrepancy,
    pairs: PairCounts,
    pair_instances: usize,
    floor_exception_rate: f64,
    guard_rate: f64,
    top_pathways: Vec<PathwayRow>,
    moments_reaching_target: Option<JumpMoments>,
    correlation_pair: Option<(usize, usize)>,
    field_rate: FieldRate,
}

pub fn cmd_simulate(cfg: &RunConfig, sys: &LevelSystem, field: &ControlField, outputs: &mut Outputs) -> Result<(), CliError> {
    let dir = out_dir(cfg)?;
    let s = &cfg.simulate;
    let target = cfg.target(sys);
    sys.check_site(target)?;
    let ens_cfg = EnsembleConfig {
        n_traj: s.n_traj,
        seed: s.seed,
        initial: InitialSite::Fixed(cfg.initial),
        substeps: s.substeps,
    };
    let ens = run_ensemble(sys, field, &ens_cfg, cfg.workers())?;
    let prop = &ens.propagation;
    let steps = field.steps();
    let times: Vec<f64> = (0..=steps).map(|p| field.time(p)).collect();

    let states_path = outputs.add(dir.join("states.csv"), Kind::Table(&["t", "site", "re", "im", "population"]));
    io::save_with(states_path, |w| {
        let mut csv = csv_writer(w, &["t", "site", "re", "im", "population"])?;
        for (p, state) in prop.states.iter().enumerate() {
            for (n, c) in state.amplitudes.iter().enumerate() {
                csv.write_record([io::fmt(times[p]), n.to_string(), io::fmt(c.re), io::fmt(c.im), io::fmt(c.norm_sqr())])
                    .map_err(CoreError::from)?;
            }
        }
        csv.flush().map_err(CoreError::from)?;
        Ok(())
    })?;
    io::save_ensemble_csv(outputs.add(dir.join("ensemble.csv"), Kind::Ensemble(s.n_traj)), &ens.trajectories)?;

    let occupancy = occupancy_series(&ens.trajectories, steps, sys.count);
    let checks: Vec<usize> = (1..=s.check_points)
        .map(|k| ((k * steps) as f64 / s.check_points as f64).round() as usize)
        .collect();
    let mut discrepancy = Discrepancy {
        max: 0.0,
        bound: 5.0 / (s.n_traj as f64).sqrt(),
        time: 0.0,
        site: 0,
        checked_times: checks.len(),
    };
    for &p in &checks {
        for n in 0..sys.count {
            let d = (occupancy[p][n] - prop.states[p].population(n)).abs();
            if d > discrepancy.max {
                discrepancy = Discrepancy {
                    max: d,
                    time: times[p],
                    site: n,
                    ..discrepancy
                };
            }
        }
    }
    let check_times: Vec<f64> = checks.iter().map(|&p| times[p]).collect();
    let check_occ: Vec<Vec<f64>> = checks.iter().map(|&p| occupancy[p].clone()).collect();
    let check_pop: Vec<Vec<f64>> = checks.iter().map(|&p| prop.states[p].populations()).collect();
    let occ_path = outputs.add(dir.join("occupancy.csv"), Kind::Table(&["t", "site", "occupancy", "population"]));
    io::save_with(occ_path, |w| io::write_occupancy_csv(w, &check_times, &check_occ, &check_pop))?;

    let table = pathway_table(&ens.trajectories);
    let pathway_path = outputs.add(
        dir.join("pathways.csv"),
        Kind::Table(&["pathway", "jumps", "count", "probability", "standard_error"]),
    );
    io::save_with(pathway_path, |w| io::write_pathway_csv(w, &table))?;
    let moments = match jump_moments(&ens.trajectories, s.k_max, Some(target)) {
        Ok(m) => {
            io::save_with(outputs.add(dir.join("moments.csv"), Kind::Table(&["k", "moment"])), |w| {
                io::write_moments_csv(w, &m)
            })?;
            Some(m)
        }
        Err(CoreError::EmptySelection(_)) => None,
        Err(e) => return Err(e.into()),
    };

    let (from, to) = s.correlation_pair;
    let correlation_pair = (from < sys.count && to < sys.count).then_some((from, to));
    if correlation_pair.is_some() {
        let lags = (s.tau_max / field.step).round() as i64;
        let taus: Vec<f64> = (-lags..=lags).map(|l| l as f64 * field.step).collect();
        let values = jump_correlation(&ens.trajectories, &JumpSelector::transition(from, to), steps, field.step, &taus)?;
        io::save_with(outputs.add(dir.join("correlation.csv"), Kind::Table(&["tau", "J2"])), |w| {
            io::write_series_csv(w, ["tau", "J2"], &taus, &values)
        })?;
        outputs.svg(
            &dir,
            "correlation.svg",
            line_plot(
                &format!("Jump correlation {from}→{to}"),
                "τ (fs)",
                "J²(τ)",
                &[Series::new(format!("{from}→{to}"), taus, values)],
            ),
        )?;
    }

    let (n, m) = s.rez_pair;
    let mut field_rate = FieldRate {
        pair: (n, m),
        window: s.rez_window,
        coefficient: None,
    };
    if n < sys.count && m < sys.count {
        let rez = rez_series(prop, n, m);
        field_rate.coefficient = field_rate_correlation(field, &rez, s.rez_window).ok();
        let grid_times = &times[..rez.len()];
        io::save_with(outputs.add(dir.join("rez.csv"), Kind::Table(&["t", "rez"])), |w| {
            io::write_series_csv(w, ["t", "rez"], grid_times, &rez)
        })?;
        let abs_field: Vec<f64> = field.values().iter().map(|e| e.abs()).collect();
        outputs.svg(
            &dir,
            "rez.svg",
            line_plot(
                &format!("|E(t)| and Re z{n}{m}"),
                "t (fs)",
                "",
                &[Series::new("|E|", times.clone(), abs_field), Series::new(format!("Re z{n}{m}"), grid_times.to_vec(), rez)],
            ),
        )?;
    }

    let mut series: Vec<Series> = (0..sys.count)
        .map(|k| Series::new(format!("|ψ{k}|²"), times.clone(), prop.population_series(k)))
        .collect();
    series.push(Series::new(
        format!("P{target} beables"),
        check_times.clone(),
        check_occ.iter().map(|o| o[target]).collect(),
    ));
    outputs.svg(&dir, "populations.svg", line_plot("Populations", "t (fs)", "population", &series))?;

    let summary = SimulateSummary {
        n_traj: s.n_traj,
        seed: s.seed,
        substeps: s.substeps,
        initial: cfg.initial,
        target,
        target_population: prop.final_state().population(target),
        target_occupancy: occupancy[steps][target],
        max_norm_drift: prop.max_norm_drift(),
        discrepancy,
        pairs: ens.schedule.pairs,
        pair_instances: ens.schedule.pair_instances,
        floor_exception_rate: ens.schedule.floor_exception_rate(),
        guard_rate: ens.schedule.guard_rate(),
        top_pathways: table.top(s.top_pathways).to_vec(),
        moments_reaching_target: moments,
        correlation_pair,
        field_rate,
    };
    io::save_json(outputs.add(dir.join("summary.json"), Kind::Json(&["n_traj", "discrepancy", "top_pathways"])), &summary)?;

    println!(
        "simulate: {} trajectories, final P{target} = {:.4} (|ψ|² = {:.4})",
        s.n_traj, summary.target_occupancy, summary.target_population
    );
    println!(
        "  occupancy vs |ψ|²: max deviation {:.4} at t = {:.2} fs on site {} (bound {:.4})",
        summary.discrepancy.max, summary.discrepancy.time, summary.discrepancy.site, summary.discrepancy.bound
    );
    for row in table.top(5) {
        println!("  {:<24} {:.4} ± {:.4}", row.pathway.to_string(), row.probability, row.standard_error);
    }
    if let Some(m) = &summary.moments_reaching_target {
        println!("  ⟨j⟩ = {:.4}, j_min = {} over {} trajectories reaching {target}", m.mean(), m.j_min, m.count);
    }
    Ok(())
}

fn csv_writer<W: std::io::Write>(out: W, header: &[&str]) -> Result<csv::Writer<W>, CoreError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header)?;
    Ok(w)
}

#[derive(Debug, Default, Serialize)]
struct WindowCounts {
    total: usize,
    admissible: usize,
    mean_below_jmin: usize,
    pathological: usize,
    no_data: usize,
}

#[derive(Debug, Serialize)]
struct MechanismReport {
    sigma: f64,
    seed: u64,
    increment: f64,
    k_max: usize,
    fit_space: FitSpace,
    initial: usize,
    target: usize,
    j_min: JminEstimate,
    graph_j_min: Option<usize>,
    windows: WindowCounts,
    best: Option<FitResult>,
}

fn window_counts(report: &RangeReport) -> WindowCounts {
    let mut counts = WindowCounts {
        total: report.cells.len(),
        ..Default::default()
    };
    for cell in &report.cells {
        match cell.exclusion {
            None => counts.admissible += 1,
            Some(Exclusion::MeanBelowJmin) => counts.mean_below_jmin += 1,
            Some(Exclusion::Pathological) => counts.pathological += 1,
            Some(Exclusion::NoData) => counts.no_data += 1,
        }
    }
    counts
}

fn grid_index(m: f64, increment: f64) -> usize {
    (m / increment).round() as usize
}

pub fn cmd_mechanism(cfg: &RunConfig, sys: &LevelSystem, field: &ControlField, outputs: &mut Outputs) -> Result<(), CliError> {
    let dir = out_dir(cfg)?;
    let mc = &cfg.mechanism;
    let target = cfg.target(sys);
    sys.check_site(cfg.initial)?;
    let sweep_cfg = SweepConfig {
        increment: mc.increment,
        first: grid_index(mc.m_first, mc.increment).max(1),
        last: grid_index(mc.m_last, mc.increment),
        sigma: mc.sigma,
        seed: mc.seed,
    };
    let initial = QuantumState::basis(sys.count, cfg.initial);
    let ds = sweep(sys, field, &initial, target, &sweep_cfg, cfg.workers())?;
    io::save_dataset_csv(outputs.add(dir.join("dataset.csv"), Kind::Dataset), &ds)?;

    let jmin = estimate_jmin(&ds, mc.head_fraction)?;
    let grid = match mc.window {
        Some((lo, hi)) => WindowGrid::single(mc.increment, grid_index(lo, mc.increment), grid_index(hi, mc.increment)),
        None => WindowGrid::standard(mc.increment),
    };
    let opts = FitOptions {
        space: mc.fit_space,
        ..FitOptions::new(mc.k_max, Some(jmin.j_min))
    };
    let rule = mc.pathological_rule.then(PathologicalRule::default);
    let report = range_search(&ds, &grid, &opts, jmin.j_min, rule, cfg.workers());
    let windows_path = outputs.add(
        dir.join("windows.csv"),
        Kind::Table(&["m_min", "m_max", "mean", "msd", "a", "converged", "moment_flag", "exclusion"]),
    );
    io::save_with(windows_path, |w| write_windows(w, &report))?;

    let best = select_best(&report).ok().and_then(|c| c.fit.clone());
    let mech = MechanismReport {
        sigma: mc.sigma,
        seed: mc.seed,
        increment: mc.increment,
        k_max: mc.k_max,
        fit_space: mc.fit_space,
        initial: cfg.initial,
        target,
        j_min: jmin.clone(),
        graph_j_min: sys.shortest_jumps(cfg.initial, target),
        windows: window_counts(&report),
        best: best.clone(),
    };
    io::save_json(outputs.add(dir.join("report.json"), Kind::Json(&["j_min", "windows", "best"])), &mech)?;
    plot_mechanism(&dir, outputs, &ds, &report, best.as_ref())?;

    println!("mechanism: σ = {}, {} modulation points", mc.sigma, ds.len());
    println!("  j_min = {} (limit {:.3})", jmin.j_min, jmin.limit);
    println!(
        "  windows: {} fitted, {} admissible",
        mech.windows.total - mech.windows.no_data,
        mech.windows.admissible
    );
    match &best {
        Some(fit) => {
            println!("  ⟨j_P⟩ = {:.4}", fit.mean());
            println!(
                "  best window ({:.2}, {:.2}), MSD {:.3e}, a = {:.4}, converged {}",
                fit.window.m_min, fit.window.m_max, fit.msd, fit.a, fit.converged
            );
            Ok(())
        }
        None => {
            println!("  no admissible window");
            Err(CoreError::AllExcluded.into())
        }
    }
}

fn write_windows(w: &mut dyn std::io::Write, report: &RangeReport) -> Result<(), CoreError> {
    let mut csv = csv_writer(w, &["m_min", "m_max", "mean", "msd", "a", "converged", "moment_flag", "exclusion"])?;
    for cell in &report.cells {
        let exclusion = match cell.exclusion {
            None => "",
            Some(Exclusion::MeanBelowJmin) => "mean_below_jmin",
            Some(Exclusion::Pathological) => "pathological",
            Some(Exclusion::NoData) => "no_data",
        };
        let mut row = vec![io::fmt(cell.window.m_min), io::fmt(cell.window.m_max)];
        match &cell.fit {
            Some(f) => row.extend([
                io::fmt(f.mean()),
                io::fmt(f.msd),
                io::fmt(f.a),
                f.converged.to_string(),
                f.moment_flag.to_string(),
            ]),
            None => row.extend(["", "", "", "", ""].map(String::from)),
        }
        row.push(exclusion.into());
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}

fn plot_mechanism(
    dir: &Path,
    outputs: &mut Outputs,
    ds: &ModulationDataset,
    report: &RangeReport,
    best: Option<&FitResult>,
) -> Result<(), CliError> {
    let ms: Vec<f64> = ds.rows.iter().map(|r| r.m).collect();
    let mut series = vec![Series::new("data", ms.clone(), ds.rows.iter().map(|r| r.population).collect())];
    if let Some(fit) = best {
        let params = fit.params();
        let inside: Vec<f64> = ms.iter().copied().filter(|&m| m >= fit.window.m_min && m <= fit.window.m_max).collect();
        let model = inside.iter().map(|&m| model_population(m, &params, fit.k_max)).collect();
        series.push(Series::new("fit", inside, model));
    }
    outputs.svg(dir, "modulation.svg", line_plot("Modulation sweep", "M", "target population", &series))?;
    let g = &report.grid;
    let x_range = (g.max_indices.0 as f64 * g.increment, g.max_indices.1 as f64 * g.increment);
    let y_range = (g.min_indices.0 as f64 * g.increment, g.min_indices.1 as f64 * g.increment);
    let means = report.map(|c| c.is_admissible().then(|| c.mean()).flatten());
    outputs.svg(dir, "range_mean.svg", heatmap("Fitted ⟨j_P⟩", "M_max", "M_min", x_range, y_range, &means))?;
    let msd = report.map(|c| c.is_admissible().then(|| c.msd().map(f64::log10)).flatten());
    outputs.svg(dir, "range_msd.svg", heatmap("log10 MSD", "M_max", "M_min", x_range, y_range, &msd))?;
    Ok(())
}
