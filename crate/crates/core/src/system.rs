//! Level structure and dipole couplings of the controlled system.
//!
//! Units: angular frequencies in fs⁻¹, dipoles in 10⁻³⁰ C·m, fields in V/Å,
//! with ħ = 1. The product μ·E of one dipole unit and one field unit
//! corresponds to [`COUPLING_PER_FIELD_DIPOLE`] fs⁻¹.

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// μE/ħ in fs⁻¹ for μ = 10⁻³⁰ C·m and E = 1 V/Å.
///
/// 10⁻³⁰ C·m × 10¹⁰ V/m = 10⁻²⁰ J; divided by ħ = 1.054571817×10⁻³⁴ J·s.
pub const COUPLING_PER_FIELD_DIPOLE: f64 = 1.0e-20 / 1.054_571_817e-34 * 1.0e-15;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSystem {
    pub count: usize,
    /// Level angular frequencies ω_n (fs⁻¹).
    pub omega: Vec<f64>,
    /// Real-symmetric dipole matrix with zero diagonal (10⁻³⁰ C·m).
    pub mu: Vec<Vec<f64>>,
}

impl LevelSystem {
    pub fn new(omega: Vec<f64>, mu: Vec<Vec<f64>>) -> Result<Self> {
        let sys = LevelSystem {
            count: omega.len(),
            omega,
            mu,
        };
        sys.validate()?;
        Ok(sys)
    }

    /// Builds a system from a list of undirected couplings `(n, m, μ_nm)`.
    pub fn from_couplings(omega: Vec<f64>, couplings: &[(usize, usize, f64)]) -> Result<Self> {
        let count = omega.len();
        let mut mu = vec![vec![0.0; count]; count];
        for &(n, m, value) in couplings {
            if n >= count || m >= count {
                return Err(Error::SiteOutOfRange {
                    index: n.max(m),
                    count,
                });
            }
            mu[n][m] = value;
            mu[m][n] = value;
        }
        Self::new(omega, mu)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::InvalidSystem(format!(
                "need at least 2 levels, got {}",
                self.count
            )));
        }
        if self.omega.len() != self.count {
            return Err(Error::InvalidSystem(format!(
                "omega has {} entries for {} levels",
                self.omega.len(),
                self.count
            )));
        }
        if let Some(w) = self.omega.iter().find(|w| !w.is_finite()) {
            return Err(Error::InvalidSystem(format!("non-finite frequency {w}")));
        }
        if self.mu.len() != self.count || self.mu.iter().any(|row| row.len() != self.count) {
            return Err(Error::InvalidSystem(format!(
                "dipole matrix must be {0}x{0}",
                self.count
            )));
        }
        for n in 0..self.count {
            if self.mu[n][n] != 0.0 {
                return Err(Error::InvalidSystem(format!(
                    "nonzero diagonal dipole at level {n}"
                )));
            }
            for m in 0..n {
                let (a, b) = (self.mu[n][m], self.mu[m][n]);
                if !a.is_finite() || a != b {
                    return Err(Error::InvalidSystem(format!(
                        "dipole matrix not real-symmetric at ({n}, {m}): {a} vs {b}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn check_site(&self, site: usize) -> Result<()> {
        if site < self.count {
            Ok(())
        } else {
            Err(Error::SiteOutOfRange {
                index: site,
                count: self.count,
            })
        }
    }

    /// ω_nm = ω_n − ω_m.
    pub fn transition(&self, n: usize, m: usize) -> f64 {
        self.omega[n] - self.omega[m]
    }

    pub fn coupled(&self, n: usize, m: usize) -> bool {
        n != m && self.mu[n][m] != 0.0
    }

    pub fn neighbors(&self, site: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.count).filter(move |&n| self.coupled(n, site))
    }

    /// Coupled pairs `(n, m)` with `n < m`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for n in 0..self.count {
            for m in (n + 1)..self.count {
                if self.coupled(n, m) {
                    out.push((n, m));
                }
            }
        }
        out
    }

    /// Breadth-first shortest path length (in jumps) through the coupling graph.
    pub fn shortest_jumps(&self, from: usize, to: usize) -> Option<usize> {
        if from >= self.count || to >= self.count {
            return None;
        }
        let mut dist = vec![usize::MAX; self.count];
        dist[from] = 0;
        let mut queue = VecDeque::from([from]);
        while let Some(site) = queue.pop_front() {
            if site == to {
                return Some(dist[site]);
            }
            for next in self.neighbors(site) {
                if dist[next] == usize::MAX {
                    dist[next] = dist[site] + 1;
                    queue.push_back(next);
                }
            }
        }
        None
    }

    pub fn is_connected(&self, from: usize, to: usize) -> bool {
        self.shortest_jumps(from, to).is_some()
    }

    /// Shipped 7-level example.
    ///
    /// Couplings 0–1, 0–2, 1–3, 2–3, 3–4, 3–5, 4–6, 5–6; levels 4 and 5 are
    /// degenerate, and |ω₃₅| and |ω₅₆| differ by 0.12 fs⁻¹. The remaining
    /// frequencies and all dipole strengths are illustrative choices.
    pub fn seven_level_example() -> Self {
        let omega = vec![0.0, 1.90, 2.60, 4.50, 5.80, 5.80, 6.98];
        let couplings = [
            (0, 1, 2.4),
            (0, 2, 3.0),
            (1, 3, 2.6),
            (2, 3, 3.0),
            (3, 4, 2.5),
            (3, 5, 3.0),
            (4, 6, 2.6),
            (5, 6, 3.0),
        ];
        Self::from_couplings(omega, &couplings).expect("example system is valid")
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let sys: LevelSystem = serde_json::from_str(&text)?;
        sys.validate()?;
        Ok(sys)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversion_constant() {
        assert!((COUPLING_PER_FIELD_DIPOLE - 0.094_825_2).abs() < 1e-6);
    }

    #[test]
    fn example_respects_printed_constraints() {
        let sys = LevelSystem::seven_level_example();
        assert_eq!(sys.count, 7);
        assert_eq!(sys.omega[4], sys.omega[5]);
        let diff = sys.transition(3, 5).abs() - sys.transition(5, 6).abs();
        assert!((diff.abs() - 0.12).abs() < 1e-12);
        assert_eq!(sys.edges().len(), 8);
        assert_eq!(sys.shortest_jumps(0, 6), Some(4));
    }

    #[test]
    fn rejects_bad_dipoles() {
        let asym = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        assert!(LevelSystem::new(vec![0.0, 1.0], asym).is_err());
        let diag = vec![vec![1.0, 1.0], vec![1.0, 0.0]];
        assert!(LevelSystem::new(vec![0.0, 1.0], diag).is_err());
        assert!(LevelSystem::new(vec![0.0], vec![vec![0.0]]).is_err());
        assert!(LevelSystem::new(vec![0.0, f64::NAN], vec![vec![0.0; 2]; 2]).is_err());
    }

    #[test]
    fn disconnected_graph() {
        let sys = LevelSystem::from_couplings(vec![0.0, 1.0, 2.0], &[(0, 1, 1.0)]).unwrap();
        assert!(!sys.is_connected(0, 2));
        assert_eq!(sys.shortest_jumps(0, 1), Some(1));
    }

    #[test]
    fn json_round_trip() {
        let sys = LevelSystem::seven_level_example();
        let text = serde_json::to_string(&sys).unwrap();
        let back: LevelSystem = serde_json::from_str(&text).unwrap();
        assert_eq!(sys, back);
    }
}
