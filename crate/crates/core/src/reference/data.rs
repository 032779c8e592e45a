//! Synthetic observations from a reference curve or a surrogate.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::Dataset;
use crate::reference::grid::GridSolution;
use crate::trainer::SurrogateModel;

/// A scalar function of one variable on a closed interval.
pub trait Curve {
    fn range(&self) -> (f64, f64);
    fn eval(&self, x: f64) -> Result<f64>;
}

impl Curve for GridSolution {
    fn range(&self) -> (f64, f64) {
        GridSolution::range(self)
    }
    fn eval(&self, x: f64) -> Result<f64> {
        self.value_at(x)
    }
}

/// A 1-D surrogate at a fixed parameter.
pub struct SurrogateCurve<'a> {
    pub model: &'a SurrogateModel,
    pub theta: Vec<f64>,
}

impl Curve for SurrogateCurve<'_> {
    fn range(&self) -> (f64, f64) {
        (self.model.domain.lower[0], self.model.domain.upper[0])
    }
    fn eval(&self, x: f64) -> Result<f64> {
        self.model.value(&[x], &self.theta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationPlacement {
    /// Sorted uniform draws over the interval.
    UniformRandom,
    /// Equally spaced, both endpoints included.
    Equidistant,
}

/// `n` observations `f(x_i) + sigma * z_i` on `[lo, hi]`.
pub fn gen_synthetic_data<R: Rng + ?Sized>(
    curve: &dyn Curve,
    interval: (f64, f64),
    placement: ObservationPlacement,
    n: usize,
    sigma: f64,
    rng: &mut R,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Config("need at least one observation".into()));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Config(format!("noise level must be >= 0, got {sigma}")));
    }
    let (lo, hi) = interval;
    let (clo, chi) = curve.range();
    if !(lo <= hi && lo >= clo && hi <= chi) {
        return Err(Error::Domain(format!(
            "observation interval [{lo}, {hi}] outside [{clo}, {chi}]"
        )));
    }
    let mut xs: Vec<f64> = match placement {
        ObservationPlacement::Equidistant if n == 1 => vec![lo],
        ObservationPlacement::Equidistant => (0..n)
            .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect(),
        ObservationPlacement::UniformRandom => {
            (0..n).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect()
        }
    };
    xs.sort_by(f64::total_cmp);
    let mut inputs = Vec::with_capacity(n);
    let mut responses = Vec::with_capacity(n);
    for x in xs {
        let z: f64 = rng.sample(StandardNormal);
        responses.push(curve.eval(x)? + sigma * z);
        inputs.push(vec![x]);
    }
    Dataset::new(inputs, responses)
}
