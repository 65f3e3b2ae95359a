use serde::{Deserialize, Serialize};

use super::dataset::ModulationDataset;
use super::fit::{lm_fit, FitOptions, FitResult, FitWindow};
use crate::error::{Error, Result};
use crate::exec::Workers;

/// Fit windows on the data grid: M_min = i·ΔM, M_max = j·ΔM.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowGrid {
    pub increment: f64,
    pub min_indices: (usize, usize),
    pub max_indices: (usize, usize),
    /// Smallest allowed j − i.
    pub min_gap: usize,
}

impl WindowGrid {
    /// All grid windows with 0.2 < M_min < 0.8, 0.7 < M_max < 1.6 and
    /// M_max − M_min > 0.1, using integer index arithmetic.
    pub fn standard(increment: f64) -> Self {
        let above = |x: f64| (x / increment + 1e-9).floor() as usize + 1;
        let below = |x: f64| (x / increment - 1e-9).ceil() as usize - 1;
        WindowGrid {
            increment,
            min_indices: (above(0.2), below(0.8)),
            max_indices: (above(0.7), below(1.6)),
            min_gap: above(0.1),
        }
    }

    pub fn single(increment: f64, i: usize, j: usize) -> Self {
        WindowGrid {
            increment,
            min_indices: (i, i),
            max_indices: (j, j),
            min_gap: j.saturating_sub(i),
        }
    }

    /// (i, j) pairs in lexicographic order.
    pub fn windows(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in self.min_indices.0..=self.min_indices.1 {
            for j in self.max_indices.0..=self.max_indices.1 {
                if j >= i + self.min_gap && j > i {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// Lower-left windows that miss the behaviour near M = 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathologicalRule {
    /// Excluded when M_max is below this …
    pub max_below: f64,
    /// … and M_min is below this.
    pub min_below: f64,
}

impl Default for PathologicalRule {
    fn default() -> Self {
        PathologicalRule {
            max_below: 0.95,
            min_below: 0.3,
        }
    }
}

impl PathologicalRule {
    pub fn applies(&self, window: &FitWindow) -> bool {
        window.m_max < self.max_below && window.m_min < self.min_below
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exclusion {
    /// Fitted ⟨j⟩ ≤ j_min.
    MeanBelowJmin,
    Pathological,
    /// The window holds too few data points for a fit.
    NoData,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowCell {
    pub min_index: usize,
    pub max_index: usize,
    pub window: FitWindow,
    pub fit: Option<FitResult>,
    pub exclusion: Option<Exclusion>,
}

impl WindowCell {
    pub fn mean(&self) -> Option<f64> {
        self.fit.as_ref().map(FitResult::mean)
    }

    pub fn msd(&self) -> Option<f64> {
        self.fit.as_ref().map(|f| f.msd)
    }

    pub fn is_admissible(&self) -> bool {
        self.exclusion.is_none()
    }
}

/// One fit per window, ordered lexicographically by (M_min, M_max).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeReport {
    pub increment: f64,
    pub k_max: usize,
    pub j_min: usize,
    pub grid: WindowGrid,
    pub cells: Vec<WindowCell>,
}

impl RangeReport {
    pub fn admissible(&self) -> impl Iterator<Item = &WindowCell> {
        self.cells.iter().filter(|c| c.is_admissible())
    }

    /// Row-per-M_min map of `value` over the grid; `None` where the window
    /// is outside the grid or has no fit.
    pub fn map(&self, value: impl Fn(&WindowCell) -> Option<f64>) -> Vec<Vec<Option<f64>>> {
        let (i0, i1) = self.grid.min_indices;
        let (j0, j1) = self.grid.max_indices;
        let mut out = vec![vec![None; j1 - j0 + 1]; i1 - i0 + 1];
        for cell in &self.cells {
            out[cell.min_index - i0][cell.max_index - j0] = value(cell);
        }
        out
    }
}

pub fn range_search(
    ds: &ModulationDataset,
    grid: &WindowGrid,
    opts: &FitOptions,
    j_min: usize,
    rule: Option<PathologicalRule>,
    workers: Workers,
) -> RangeReport {
    let windows = grid.windows();
    let cells = workers.map(windows.len(), |k| {
        let (i, j) = windows[k];
        let window = FitWindow {
            m_min: i as f64 * grid.increment,
            m_max: j as f64 * grid.increment,
        };
        let fit = lm_fit(ds, window, opts).ok();
        let exclusion = match &fit {
            None => Some(Exclusion::NoData),
            Some(f) if f.mean() <= j_min as f64 => Some(Exclusion::MeanBelowJmin),
            Some(_) if rule.is_some_and(|r| r.applies(&window)) => Some(Exclusion::Pathological),
            Some(_) => None,
        };
        WindowCell {
            min_index: i,
            max_index: j,
            window,
            fit,
            exclusion,
        }
    });
    RangeReport {
        increment: grid.increment,
        k_max: opts.k_max,
        j_min,
        grid: grid.clone(),
        cells,
    }
}

/// Admissible window of least MSD; ties go to the wider window, then to the
/// earlier one in grid order.
pub fn select_best(report: &RangeReport) -> Result<&WindowCell> {
    let mut best: Option<(&WindowCell, f64)> = None;
    for cell in report.admissible() {
        let msd = cell.msd().expect("admissible cells carry a fit");
        let better = match best {
            None => true,
            Some((b, b_msd)) => msd < b_msd || (msd == b_msd && cell.window.width() > b.window.width()),
        };
        if better {
            best = Some((cell, msd));
        }
    }
    best.map(|(c, _)| c).ok_or(Error::AllExcluded)
}
