use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box `[lower_i, upper_i]` in every coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DomainBox {
    /// A proper box: `lower < upper` in every coordinate.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Shape(format!(
                "box bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        if let Some(i) = (0..lower.len()).find(|&i| !(lower[i] < upper[i])) {
            return Err(Error::Config(format!(
                "box coordinate {i} has lower {} >= upper {}",
                lower[i], upper[i]
            )));
        }
        Ok(DomainBox { lower, upper })
    }

    pub fn interval(lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower], vec![upper])
    }

    /// Degenerate box holding a single point.
    pub fn point(p: &[f64]) -> Self {
        DomainBox {
            lower: p.to_vec(),
            upper: p.to_vec(),
        }
    }

    /// Zero-dimensional box, for problems without parameters.
    pub fn empty() -> Self {
        DomainBox {
            lower: vec![],
            upper: vec![],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn centre(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }

    pub fn is_degenerate(&self) -> bool {
        (0..self.dim()).any(|i| self.width(i) == 0.0)
    }

    /// Closed-box membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.sample_into(rng, &mut out);
        out
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let u: f64 = rng.random();
            *o = self.lower[i] + u * self.width(i);
        }
    }

    /// Measure of the face `coord = const`: product of the remaining widths.
    pub fn face_measure(&self, coord: usize) -> f64 {
        (0..self.dim())
            .filter(|&i| i != coord)
            .map(|i| self.width(i))
            .product()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn validation() {
        assert!(DomainBox::new(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(DomainBox::new(vec![0.0], vec![1.0, 2.0]).is_err());
        assert!(DomainBox::interval(-1.0, 1.0).is_ok());
    }

    #[test]
    fn closed_membership() {
        let b = DomainBox::new(vec![0.0, 0.0], vec![3.0, 1.0]).unwrap();
        assert!(b.contains(&[3.0, 0.0]));
        assert!(!b.contains(&[3.0 + 1e-12, 0.5]));
        assert_eq!(b.face_measure(0), 1.0);
        assert_eq!(b.face_measure(1), 3.0);
    }

    #[test]
    fn samples_stay_inside() {
        let b = DomainBox::new(vec![-6.0, 0.0], vec![6.0, 20.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            assert!(b.contains(&b.sample(&mut rng)));
        }
        let p = DomainBox::point(&[2.5]);
        assert_eq!(p.sample(&mut rng), vec![2.5]);
    }
}
