//! Collocation batches.

use rand::Rng;

use crate::problems::{IntegralProblem, KernelSingularity, PdeProblem, UpperLimit};

/// One boundary collocation point.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPoint {
    pub segment: usize,
    pub x: Vec<f64>,
    pub theta: Vec<f64>,
}

/// Collocation points for one loss evaluation.
///
/// For PDE problems `interior` holds domain points and `boundary` face points.
/// For integral problems `interior` holds `x^n` (length 1) and `pairs` the
/// matching `y^n`, so term one of the loss is evaluated at `(x^n, y^n)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CollocationBatch {
    pub interior: Vec<Vec<f64>>,
    pub interior_theta: Vec<Vec<f64>>,
    pub boundary: Vec<BoundaryPoint>,
    pub pairs: Vec<f64>,
}

impl CollocationBatch {
    pub fn len(&self) -> usize {
        self.interior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interior.is_empty()
    }
}

/// Split `total` into integer counts proportional to `measures` (largest remainder).
pub fn allocate(total: usize, measures: &[f64]) -> Vec<usize> {
    let sum: f64 = measures.iter().sum();
    if measures.is_empty() || !(sum > 0.0) {
        return vec![0; measures.len()];
    }
    let exact: Vec<f64> = measures.iter().map(|m| total as f64 * m / sum).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..measures.len()).collect();
    // stable sort keeps ties in segment order
    order.sort_by(|&a, &b| {
        let ra = exact[a] - counts[a] as f64;
        let rb = exact[b] - counts[b] as f64;
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal)
    });
    let missing = total - counts.iter().sum::<usize>();
    for &i in order.iter().take(missing) {
        counts[i] += 1;
    }
    counts
}

/// Interior points uniform on the domain, boundary points uniform on each face
/// with counts proportional to face measure, parameters uniform on `param_domain`.
pub fn sample_pde_batch<R: Rng + ?Sized>(
    problem: &PdeProblem,
    interior: usize,
    boundary: usize,
    rng: &mut R,
) -> CollocationBatch {
    let mut batch = CollocationBatch::default();
    for _ in 0..interior {
        batch.interior.push(problem.domain.sample(rng));
        batch.interior_theta.push(problem.param_domain.sample(rng));
    }
    let measures: Vec<f64> = problem
        .boundaries
        .iter()
        .map(|s| problem.domain.face_measure(s.face.coord))
        .collect();
    for (segment, count) in allocate(boundary, &measures).into_iter().enumerate() {
        let face = problem.boundaries[segment].face;
        for _ in 0..count {
            let mut x = problem.domain.sample(rng);
            problem.project_to_face(face, &mut x);
            batch.boundary.push(BoundaryPoint {
                segment,
                x,
                theta: problem.param_domain.sample(rng),
            });
        }
    }
    batch
}

/// `x ~ U(a, b*)`, then `y ~ U(a, b(x))`. With a singular diagonal, `y` stays at
/// least `diagonal_gap` below `x`.
pub fn sample_integral_batch<R: Rng + ?Sized>(
    problem: &IntegralProblem,
    n: usize,
    rng: &mut R,
) -> CollocationBatch {
    let gap = match problem.singularity {
        KernelSingularity::Regular => 0.0,
        KernelSingularity::InverseSqrtDiagonal => problem.diagonal_gap(),
    };
    let mut batch = CollocationBatch::default();
    for _ in 0..n {
        let u: f64 = rng.random();
        let x = problem.a + gap + u * (problem.b_star - problem.a - gap);
        let top = match problem.limit {
            UpperLimit::Fredholm => problem.b_star,
            UpperLimit::Volterra => x,
        };
        let v: f64 = rng.random();
        let y = problem.a + v * (top - gap - problem.a);
        batch.interior.push(vec![x]);
        batch.pairs.push(y);
        batch.interior_theta.push(problem.param_domain.sample(rng));
    }
    batch
}
