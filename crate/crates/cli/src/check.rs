//! Re-reads every output file and validates its structure.

use std::path::PathBuf;

use beable_core::{io, LevelSystem};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum Kind {
    Field,
    /// Expected trajectory count.
    Ensemble(usize),
    Dataset,
    /// CSV with exactly these columns.
    Table(&'static [&'static str]),
    /// JSON object containing these keys.
    Json(&'static [&'static str]),
    Svg,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub path: PathBuf,
    pub kind: Kind,
}

pub fn self_check(artifacts: &[Artifact], sys: &LevelSystem) -> Result<(), CliError> {
    for artifact in artifacts {
        check(artifact, sys).map_err(|reason| CliError::SelfCheck {
            path: artifact.path.display().to_string(),
            reason,
        })?;
    }
    Ok(())
}

fn check(artifact: &Artifact, sys: &LevelSystem) -> Result<(), String> {
    let path = &artifact.path;
    match artifact.kind {
        Kind::Field => {
            io::load_field_csv(path).map_err(|e| e.to_string())?;
        }
        Kind::Ensemble(n_traj) => {
            let trajs = io::load_ensemble_csv(path).map_err(|e| e.to_string())?;
            if trajs.len() != n_traj {
                return Err(format!("{} trajectories, expected {n_traj}", trajs.len()));
            }
            for (id, t) in trajs.iter().enumerate() {
                t.validate(sys).map_err(|e| format!("trajectory {id}: {e}"))?;
            }
        }
        Kind::Dataset => {
            io::load_dataset_csv(path).map_err(|e| e.to_string())?;
        }
        Kind::Table(columns) => {
            let mut reader = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
            let header: Vec<String> = reader.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
            if header != columns {
                return Err(format!("columns {header:?}, expected {columns:?}"));
            }
            for (line, record) in reader.records().enumerate() {
                let record = record.map_err(|e| format!("row {line}: {e}"))?;
                if record.len() != columns.len() {
                    return Err(format!("row {line} has {} fields", record.len()));
                }
            }
        }
        Kind::Json(keys) => {
            let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
            let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
            let object = value.as_object().ok_or("top level is not an object")?;
            if let Some(key) = keys.iter().find(|k| !object.contains_key(**k)) {
                return Err(format!("missing key {key:?}"));
            }
        }
        Kind::Svg => {
            let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
            if !(text.starts_with("<svg") && text.trim_end().ends_with("</svg>")) {
                return Err("not an svg document".into());
            }
            if text.contains("NaN") || text.contains("inf") {
                return Err("non-finite coordinate".into());
            }
        }
    }
    Ok(())
}
