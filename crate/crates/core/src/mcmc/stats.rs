//! Posterior summaries, kernel density estimates and pointwise bands.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mcmc::Chain;

/// Linear-interpolation quantile of sorted data (`h = (n - 1) p`).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    // shifted by the first value so constant data has an exact mean
    let x0 = xs[0];
    let mean = x0 + xs.iter().map(|x| x - x0).sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub acceptance_rates: Vec<f64>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_rhat: Option<Vec<f64>>,
}

fn coordinate(chains: &[Chain], j: usize) -> Vec<f64> {
    chains.iter().flat_map(|c| c.iter().map(move |s| s[j])).collect()
}

/// Pooled mean, standard deviation and equal-tailed 95% interval per coordinate.
pub fn summarize(chains: &[Chain]) -> Result<Summary> {
    if chains.iter().all(Chain::is_empty) {
        return Err(Error::Empty("no retained samples".into()));
    }
    let dim = chains[0].dim;
    let mut s = Summary {
        means: vec![],
        stds: vec![],
        ci_low: vec![],
        ci_high: vec![],
        acceptance_rates: chains.iter().map(Chain::acceptance_rate).collect(),
        seed: chains[0].seed,
        split_rhat: split_rhat(chains),
    };
    for j in 0..dim {
        let mut xs = coordinate(chains, j);
        let (m, sd) = mean_std(&xs);
        xs.sort_by(f64::total_cmp);
        s.means.push(m);
        s.stds.push(sd);
        s.ci_low.push(quantile(&xs, 0.025));
        s.ci_high.push(quantile(&xs, 0.975));
    }
    Ok(s)
}

/// Split potential scale reduction per coordinate; `None` without enough samples.
pub fn split_rhat(chains: &[Chain]) -> Option<Vec<f64>> {
    let half = chains.iter().map(Chain::len).min()? / 2;
    if half < 2 {
        return None;
    }
    let dim = chains[0].dim;
    let rhat = (0..dim)
        .map(|j| {
            let parts: Vec<Vec<f64>> = chains
                .iter()
                .flat_map(|c| {
                    let xs: Vec<f64> = c.iter().map(|s| s[j]).collect();
                    [xs[..half].to_vec(), xs[xs.len() - half..].to_vec()]
                })
                .collect();
            let n = half as f64;
            let stats: Vec<(f64, f64)> = parts.iter().map(|p| mean_std(p)).collect();
            let w = stats.iter().map(|(_, s)| s * s).sum::<f64>() / stats.len() as f64;
            let means: Vec<f64> = stats.iter().map(|(m, _)| *m).collect();
            let b_over_n = mean_std(&means).1.powi(2);
            if w == 0.0 {
                return if b_over_n == 0.0 { 1.0 } else { f64::INFINITY };
            }
            (((n - 1.0) / n * w + b_over_n) / w).sqrt()
        })
        .collect();
    Some(rhat)
}

/// `0.9 min(std, IQR / 1.34) n^(-1/5)`, falling back to the standard deviation
/// when the interquartile range vanishes.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::Empty("density estimate needs at least two samples".into()));
    }
    let (_, sd) = mean_std(samples);
    if !(sd > 0.0) {
        return Err(Error::Numerical("samples have zero variance".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    Ok(0.9 * spread * (samples.len() as f64).powf(-0.2))
}

/// Gaussian kernel density estimate on `grid`.
pub fn kde(samples: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    let h = silverman_bandwidth(samples)?;
    let norm = 1.0 / (samples.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    Ok(grid
        .iter()
        .map(|&x| {
            norm * samples
                .iter()
                .map(|&s| {
                    let z = (x - s) / h;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
        })
        .collect())
}

/// Pointwise mean and 95% band of a function of the parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub x: Vec<f64>,
    pub mean: Vec<f64>,
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl Band {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,mean,low,high\n");
        for i in 0..self.x.len() {
            out.push_str(&format!(
                "{:?},{:?},{:?},{:?}\n",
                self.x[i], self.mean[i], self.low[i], self.high[i]
            ));
        }
        out
    }
}

/// Evaluate `f(x | sample)` over every retained sample and summarise per grid point.
pub fn function_band(
    chains: &[Chain],
    f: impl Fn(f64, &[f64]) -> f64,
    grid: &[f64],
) -> Result<Band> {
    let samples: Vec<&[f64]> = chains.iter().flat_map(Chain::iter).collect();
    if samples.is_empty() {
        return Err(Error::Empty("no retained samples".into()));
    }
    let mut band = Band {
        x: grid.to_vec(),
        mean: vec![],
        low: vec![],
        high: vec![],
    };
    let mut vals = vec![0.0; samples.len()];
    for &x in grid {
        for (v, s) in vals.iter_mut().zip(&samples) {
            *v = f(x, s);
        }
        band.mean.push(mean_std(&vals).0);
        vals.sort_by(f64::total_cmp);
        band.low.push(quantile(&vals, 0.025));
        band.high.push(quantile(&vals, 0.975));
    }
    Ok(band)
}
