//! CSV and JSON persistence.
//!
//! Floats are written as `{:.16e}` so every value round-trips exactly and
//! output bytes depend only on the data.

use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::analysis::{JumpMoments, PathwayTable};
use crate::error::{Error, Result};
use crate::field::ControlField;
use crate::mechanism::{Measurement, ModulationDataset};
use crate::optimizer::ConvergenceRecord;
use crate::sampler::{JumpEvent, Trajectory};

pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer<W: Write>(out: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header)?;
    Ok(w)
}

fn create(path: impl AsRef<Path>) -> Result<std::io::BufWriter<std::fs::File>> {
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

fn check_header(reader: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let found: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if found != expected {
        return Err(Error::Parse(format!("expected columns {expected:?}, found {found:?}")));
    }
    Ok(())
}

fn parse<T: std::str::FromStr>(field: Option<&str>, name: &str, line: usize) -> Result<T> {
    let text = field.map(str::trim).ok_or_else(|| Error::Parse(format!("row {line}: missing {name}")))?;
    text.parse().map_err(|_| Error::Parse(format!("row {line}: bad {name} {text:?}")))
}

/// `t,E` on the field grid.
pub fn write_field_csv<W: Write>(out: W, field: &ControlField) -> Result<()> {
    let mut w = writer(out, &["t", "E"])?;
    for (p, e) in field.values().into_iter().enumerate() {
        w.write_record([fmt(field.time(p)), fmt(e)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_field_csv(path: impl AsRef<Path>, field: &ControlField) -> Result<()> {
    write_field_csv(create(path)?, field)
}

/// Reads `t,E` into a sampled field; the step is taken from the time column,
/// which must start at 0 and be uniform.
pub fn read_field_csv<R: Read>(input: R) -> Result<ControlField> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &["t", "E"])?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        times.push(parse::<f64>(record.get(0), "t", line)?);
        values.push(parse::<f64>(record.get(1), "E", line)?);
    }
    if times.len() < 2 {
        return Err(Error::InvalidField("field file needs at least two samples".into()));
    }
    let step = times[1] - times[0];
    for (p, &t) in times.iter().enumerate() {
        if (t - p as f64 * step).abs() > 1e-9 * step.max(1.0) * (p as f64).max(1.0) {
            return Err(Error::InvalidField(format!("time column is not a uniform grid from 0 (row {p})")));
        }
    }
    ControlField::sampled(step, values)
}

pub fn load_field_csv(path: impl AsRef<Path>) -> Result<ControlField> {
    read_field_csv(std::fs::File::open(path)?)
}

/// `traj_id,step,from,to`, one row per jump. A trajectory without jumps is
/// written as a single row with an empty step and from = to = its site.
pub fn write_ensemble_csv<W: Write>(out: W, trajectories: &[Trajectory]) -> Result<()> {
    let mut w = writer(out, &["traj_id", "step", "from", "to"])?;
    for (id, traj) in trajectories.iter().enumerate() {
        if traj.events.is_empty() {
            w.write_record([id.to_string(), String::new(), traj.initial.to_string(), traj.initial.to_string()])?;
        }
        for e in &traj.events {
            w.write_record([id.to_string(), e.step.to_string(), e.from.to_string(), e.to.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_ensemble_csv(path: impl AsRef<Path>, trajectories: &[Trajectory]) -> Result<()> {
    write_ensemble_csv(create(path)?, trajectories)
}

pub fn read_ensemble_csv<R: Read>(input: R) -> Result<Vec<Trajectory>> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &["traj_id", "step", "from", "to"])?;
    let mut trajectories: Vec<Trajectory> = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let id: usize = parse(record.get(0), "traj_id", line)?;
        let from: usize = parse(record.get(2), "from", line)?;
        let to: usize = parse(record.get(3), "to", line)?;
        if id == trajectories.len() {
            trajectories.push(Trajectory::stationary(from));
        } else if id + 1 != trajectories.len() {
            return Err(Error::Parse(format!("row {line}: traj_id {id} out of order")));
        }
        let traj = trajectories.last_mut().expect("pushed above");
        match record.get(1).map(str::trim) {
            Some("") if from == to && traj.events.is_empty() => {}
            _ => {
                let step = parse(record.get(1), "step", line)?;
                traj.events.push(JumpEvent { step, from, to });
                traj.final_site = to;
            }
        }
    }
    Ok(trajectories)
}

pub fn load_ensemble_csv(path: impl AsRef<Path>) -> Result<Vec<Trajectory>> {
    read_ensemble_csv(std::fs::File::open(path)?)
}

/// `M,population,sigma`.
pub fn write_dataset_csv<W: Write>(out: W, ds: &ModulationDataset) -> Result<()> {
    let mut w = writer(out, &["M", "population", "sigma"])?;
    for row in &ds.rows {
        w.write_record([fmt(row.m), fmt(row.population), fmt(row.sigma)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_dataset_csv(path: impl AsRef<Path>, ds: &ModulationDataset) -> Result<()> {
    write_dataset_csv(create(path)?, ds)
}

pub fn read_dataset_csv<R: Read>(input: R) -> Result<ModulationDataset> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &["M", "population", "sigma"])?;
    let rows = r.deserialize::<Measurement>().collect::<std::result::Result<Vec<_>, _>>()?;
    ModulationDataset::from_rows(rows)
}

pub fn load_dataset_csv(path: impl AsRef<Path>) -> Result<ModulationDataset> {
    read_dataset_csv(std::fs::File::open(path)?)
}

/// `pathway,jumps,count,probability,standard_error`; the pathway column
/// holds space-separated site indices.
pub fn write_pathway_csv<W: Write>(out: W, table: &PathwayTable) -> Result<()> {
    let mut w = writer(out, &["pathway", "jumps", "count", "probability", "standard_error"])?;
    for row in &table.rows {
        w.write_record([
            row.pathway.to_string(),
            row.pathway.jumps().to_string(),
            row.count.to_string(),
            fmt(row.probability),
            fmt(row.standard_error),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `k,moment` for k = 0..=k_max.
pub fn write_moments_csv<W: Write>(out: W, moments: &JumpMoments) -> Result<()> {
    let mut w = writer(out, &["k", "moment"])?;
    for (k, m) in moments.moments.iter().enumerate() {
        w.write_record([k.to_string(), fmt(*m)])?;
    }
    w.flush()?;
    Ok(())
}

/// Two-column series such as `tau,J2` or `t,rez`.
pub fn write_series_csv<W: Write>(out: W, header: [&str; 2], xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidConfig("series columns differ in length".into()));
    }
    let mut w = writer(out, &header)?;
    for (x, y) in xs.iter().zip(ys) {
        w.write_record([fmt(*x), fmt(*y)])?;
    }
    w.flush()?;
    Ok(())
}

/// `t,site,occupancy,population` in long form.
pub fn write_occupancy_csv<W: Write>(out: W, times: &[f64], occupancy: &[Vec<f64>], populations: &[Vec<f64>]) -> Result<()> {
    let mut w = writer(out, &["t", "site", "occupancy", "population"])?;
    for (i, t) in times.iter().enumerate() {
        for (n, (o, q)) in occupancy[i].iter().zip(&populations[i]).enumerate() {
            w.write_record([fmt(*t), n.to_string(), fmt(*o), fmt(*q)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_convergence_csv<W: Write>(out: W, log: &[ConvergenceRecord]) -> Result<()> {
    let mut w = writer(out, &["iteration", "objective", "transfer", "step_length", "gradient_norm"])?;
    for rec in log {
        w.write_record([
            rec.iteration.to_string(),
            fmt(rec.objective),
            fmt(rec.transfer),
            fmt(rec.step_length),
            fmt(rec.gradient_norm),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes through a closure into `path`.
pub fn save_with(path: impl AsRef<Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let mut out = create(path)?;
    write(&mut out)?;
    out.flush()?;
    Ok(())
}

pub fn save_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
