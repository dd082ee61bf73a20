use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// One outer iteration of an optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    /// True objective at the iterate: the sum rate for the static problem,
    /// the normalized SNR for a dynamic per-user problem.
    pub objective: f64,
    /// Surrogate value attained by the step that produced this iterate.
    pub surrogate: f64,
    /// `max_n (gamma_min - f_n)^+` at the iterate.
    pub max_violation: f64,
    /// Euclidean length of the aperture update.
    pub step_norm: f64,
    /// Inner solver iterations spent on this step.
    pub inner_iterations: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptimizerTrace {
    pub entries: Vec<TraceEntry>,
}

impl OptimizerTrace {
    pub fn push(&mut self, entry: TraceEntry) {
        self.entries.push(entry);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn objectives(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.objective)
    }

    /// Largest decrease between consecutive objective values (0 if monotone).
    pub fn max_decrease(&self) -> f64 {
        self.entries
            .windows(2)
            .map(|w| w[0].objective - w[1].objective)
            .fold(0.0, f64::max)
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("iteration,objective,surrogate,max_violation\n");
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{},{:e},{:e},{:e}",
                e.iteration, e.objective, e.surrogate, e.max_violation
            );
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(iteration: usize, objective: f64) -> TraceEntry {
        TraceEntry {
            iteration,
            objective,
            surrogate: objective,
            max_violation: 0.0,
            step_norm: 0.0,
            inner_iterations: 0,
        }
    }

    #[test]
    fn max_decrease_detects_drop() {
        let mut t = OptimizerTrace::default();
        for (i, v) in [1.0, 2.0, 1.5, 3.0].into_iter().enumerate() {
            t.push(entry(i, v));
        }
        assert_eq!(t.max_decrease(), 0.5);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut t = OptimizerTrace::default();
        t.push(entry(0, 1.25));
        let csv = t.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("iteration,objective,surrogate,max_violation"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "0");
        assert_eq!(row[1].parse::<f64>().unwrap(), 1.25);
    }
}
