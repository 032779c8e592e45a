use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where the unknowns of a grid solution live.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    Nodes,
    Midpoints,
}

/// Values on a uniform grid together with their provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSolution {
    pub problem_id: String,
    pub theta: Vec<f64>,
    pub spacing: f64,
    pub placement: Placement,
    pub points: Vec<f64>,
    pub values: Vec<f64>,
}

/// Provenance written next to a grid CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridProvenance {
    pub problem_id: String,
    pub theta: Vec<f64>,
    pub spacing: f64,
    pub placement: Placement,
    pub points: usize,
}

impl GridSolution {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Interval on which [`Self::value_at`] is defined. Midpoint grids cover the
    /// full cells, so the range extends half a spacing past the outer points.
    pub fn range(&self) -> (f64, f64) {
        let pad = match self.placement {
            Placement::Nodes => 0.0,
            Placement::Midpoints => 0.5 * self.spacing,
        };
        (self.points[0] - pad, self.points[self.len() - 1] + pad)
    }

    /// Linear interpolation (linear extrapolation inside the padded range).
    pub fn value_at(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        let tol = 1e-9 * self.spacing;
        if !(x >= lo - tol && x <= hi + tol) {
            return Err(Error::Domain(format!(
                "{x} outside the grid range [{lo}, {hi}]"
            )));
        }
        let n = self.len();
        if n == 1 {
            return Ok(self.values[0]);
        }
        let x0 = self.points[0];
        let i = (((x - x0) / self.spacing).floor().max(0.0) as usize).min(n - 2);
        let frac = (x - self.points[i]) / (self.points[i + 1] - self.points[i]);
        Ok(self.values[i] + frac * (self.values[i + 1] - self.values[i]))
    }

    /// Max |u - f| over the grid points inside `[lo, hi]`.
    pub fn max_error_on(&self, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.values)
            .filter(|(x, _)| **x >= lo && **x <= hi)
            .map(|(x, v)| (v - f(*x)).abs())
            .fold(0.0, f64::max)
    }

    pub fn provenance(&self) -> GridProvenance {
        GridProvenance {
            problem_id: self.problem_id.clone(),
            theta: self.theta.clone(),
            spacing: self.spacing,
            placement: self.placement,
            points: self.len(),
        }
    }

    /// Two-column CSV body with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,value\n");
        for (x, v) in self.points.iter().zip(&self.values) {
            out.push_str(&format!("{x:?},{v:?}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSolution {
        GridSolution {
            problem_id: "t".into(),
            theta: vec![],
            spacing: 0.5,
            placement: Placement::Midpoints,
            points: vec![0.25, 0.75, 1.25],
            values: vec![1.0, 2.0, 4.0],
        }
    }

    #[test]
    fn interpolation_and_extrapolation() {
        let g = grid();
        assert_eq!(g.range(), (0.0, 1.5));
        assert_eq!(g.value_at(0.75).unwrap(), 2.0);
        assert_eq!(g.value_at(1.0).unwrap(), 3.0);
        assert_eq!(g.value_at(0.0).unwrap(), 0.5);
        assert_eq!(g.value_at(1.5).unwrap(), 5.0);
        assert!(matches!(g.value_at(1.6), Err(Error::Domain(_))));
    }

    #[test]
    fn csv_layout() {
        let csv = grid().to_csv();
        assert!(csv.starts_with("x,value\n0.25,1.0\n"));
        assert_eq!(csv.lines().count(), 4);
    }
}
