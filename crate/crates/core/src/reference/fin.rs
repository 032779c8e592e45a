//! Second-order finite differences for `u'' + u'/x - Bi(x) u = 0` on `[a, 1]`.

use crate::error::{Error, Result};
use crate::problems::biot_eval;
use crate::reference::grid::{GridSolution, Placement};

/// Tridiagonal solve (Thomas algorithm). `sub[0]` and `sup[n-1]` are ignored.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if sub.len() != n || sup.len() != n || rhs.len() != n {
        return Err(Error::Shape("tridiagonal bands must have equal length".into()));
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut prev_c = 0.0;
    let mut prev_d = 0.0;
    for i in 0..n {
        let lower = if i == 0 { 0.0 } else { sub[i] };
        let m = diag[i] - lower * prev_c;
        if m == 0.0 || !m.is_finite() {
            return Err(Error::Singular(format!("zero pivot in tridiagonal row {i}")));
        }
        c[i] = if i + 1 < n { sup[i] / m } else { 0.0 };
        d[i] = (rhs[i] - lower * prev_d) / m;
        prev_c = c[i];
        prev_d = d[i];
    }
    let mut u = d;
    for i in (0..n - 1).rev() {
        u[i] -= c[i] * u[i + 1];
    }
    Ok(u)
}

/// Finite-difference solution with a general Biot profile.
pub fn solve_fin_fd_with(
    bi: impl Fn(f64) -> f64,
    a: f64,
    u_a: f64,
    u_1: f64,
    nodes: usize,
) -> Result<GridSolution> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Config(format!("inner radius must lie in (0, 1), got {a}")));
    }
    if nodes < 3 {
        return Err(Error::Config(format!("need at least 3 nodes, got {nodes}")));
    }
    let h = (1.0 - a) / (nodes - 1) as f64;
    let x: Vec<f64> = (0..nodes)
        .map(|i| if i + 1 == nodes { 1.0 } else { a + i as f64 * h })
        .collect();
    let m = nodes - 2;
    let (mut sub, mut diag, mut sup, mut rhs) =
        (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    for k in 0..m {
        let xi = x[k + 1];
        let lo = 1.0 / (h * h) - 1.0 / (2.0 * h * xi);
        let hi = 1.0 / (h * h) + 1.0 / (2.0 * h * xi);
        sub[k] = lo;
        sup[k] = hi;
        diag[k] = -2.0 / (h * h) - bi(xi);
        if k == 0 {
            rhs[k] -= lo * u_a;
        }
        if k + 1 == m {
            rhs[k] -= hi * u_1;
        }
    }
    let inner = solve_tridiagonal(&sub, &diag, &sup, &rhs)?;
    let mut values = Vec::with_capacity(nodes);
    values.push(u_a);
    values.extend(inner);
    values.push(u_1);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite finite-difference solution".into()));
    }
    Ok(GridSolution {
        problem_id: "biot".into(),
        theta: vec![],
        spacing: h,
        placement: Placement::Nodes,
        points: x,
        values,
    })
}

/// Finite-difference solution for the polynomial Biot profile `theta`.
pub fn solve_fin_fd(theta: &[f64], a: f64, u_a: f64, u_1: f64, nodes: usize) -> Result<GridSolution> {
    let mut g = solve_fin_fd_with(|x| biot_eval(theta, x), a, u_a, u_1, nodes)?;
    g.theta = theta.to_vec();
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::fin::fin_log_solution;

    #[test]
    fn thomas_matches_dense_solve() {
        // [[2,1,0],[1,3,1],[0,1,4]] u = [3,5,5] -> u = [1,1,1]
        let u = solve_tridiagonal(&[0.0, 1.0, 1.0], &[2.0, 3.0, 4.0], &[1.0, 1.0, 0.0], &[3.0, 5.0, 5.0])
            .unwrap();
        for v in u {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_biot_matches_log_profile() {
        let g = solve_fin_fd(&[0.0; 16], 0.1, 1.0, 0.5, 1001).unwrap();
        let err = g.max_error_on(0.1, 1.0, |x| fin_log_solution(x, 0.1, 1.0, 0.5).0);
        assert!(err < 1e-5, "{err}");
    }

    #[test]
    fn endpoints_and_validation() {
        let g = solve_fin_fd(&[1.0], 0.2, 2.0, 3.0, 11).unwrap();
        assert_eq!(g.values[0], 2.0);
        assert_eq!(*g.values.last().unwrap(), 3.0);
        assert_eq!(*g.points.last().unwrap(), 1.0);
        assert!(matches!(solve_fin_fd(&[1.0], 0.0, 1.0, 1.0, 11), Err(Error::Config(_))));
        assert!(matches!(solve_fin_fd(&[1.0], 0.5, 1.0, 1.0, 2), Err(Error::Config(_))));
    }
}
