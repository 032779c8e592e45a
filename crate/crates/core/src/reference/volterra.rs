//! Product-midpoint solvers for Volterra equations on a uniform grid.

use crate::error::{Error, Result};
use crate::problems::{EquationKind, IntegralProblem, UpperLimit};
use crate::reference::grid::{GridSolution, Placement};

fn check(problem: &IntegralProblem, kind: EquationKind, theta: &[f64], dt: f64) -> Result<usize> {
    if problem.kind != kind || problem.limit != UpperLimit::Volterra {
        return Err(Error::Config(format!(
            "`{}` is not a Volterra equation of the {kind:?} kind",
            problem.id
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("grid spacing must be positive, got {dt}")));
    }
    if theta.len() != problem.param_domain.dim() {
        return Err(Error::Config(format!(
            "theta has {} entries, `{}` has {} parameters",
            theta.len(),
            problem.id,
            problem.param_domain.dim()
        )));
    }
    let n = ((problem.b_star - problem.a) / dt).round() as usize;
    if n == 0 {
        return Err(Error::Config("grid spacing exceeds the interval".into()));
    }
    Ok(n)
}

/// Solve `0 = v(t_i) + sum_j dt k(t_i, tau_{j+1/2}) u_{j+1/2}` for the midpoint
/// values `u_{j+1/2}`, row by row (forward substitution).
///
/// The last cell of every row touches the diagonal; when the kernel provides an
/// exact cell integral (weakly singular kernels) it replaces `dt k(t_i, t_{i-1/2})`
/// there.
pub fn solve_volterra_first_kind(
    problem: &IntegralProblem,
    theta: &[f64],
    dt: f64,
) -> Result<GridSolution> {
    let n = check(problem, EquationKind::First, theta, dt)?;
    let h = (problem.b_star - problem.a) / n as f64;
    let a = problem.a;
    let mids: Vec<f64> = (0..n).map(|j| a + (j as f64 + 0.5) * h).collect();
    let mut u = vec![0.0; n];
    let mut row = vec![0.0; n];
    for i in 1..=n {
        let t = a + i as f64 * h;
        let rhs = -problem.source.value(t, theta);
        problem.kernel.row(t, &mids[..i - 1], theta, &mut row[..i - 1]);
        let mut acc = 0.0;
        for j in 0..i - 1 {
            acc += h * row[j] * u[j];
        }
        let diag = problem
            .kernel
            .cell_integral(t, t - h, t, theta)
            .unwrap_or_else(|| h * problem.kernel.value(t, mids[i - 1], theta));
        if diag == 0.0 || !diag.is_finite() {
            return Err(Error::Singular(format!(
                "diagonal entry {diag} in row {i} (t = {t})"
            )));
        }
        u[i - 1] = (rhs - acc) / diag;
        if !u[i - 1].is_finite() {
            return Err(Error::Numerical(format!("non-finite solution at t = {t}")));
        }
    }
    Ok(GridSolution {
        problem_id: problem.id.clone(),
        theta: theta.to_vec(),
        spacing: h,
        placement: Placement::Midpoints,
        points: mids,
        values: u,
    })
}

/// Solve `u(t_i) = v(t_i) + sum_j dt k(t_i, tau_{j+1/2}) (u_j + u_{j+1}) / 2` by
/// marching over the nodes; the unknown `u_i` in the last cell is solved for implicitly.
pub fn solve_volterra_second_kind(
    problem: &IntegralProblem,
    theta: &[f64],
    dt: f64,
) -> Result<GridSolution> {
    let n = check(problem, EquationKind::Second, theta, dt)?;
    let h = (problem.b_star - problem.a) / n as f64;
    let a = problem.a;
    let nodes: Vec<f64> = (0..=n).map(|i| a + i as f64 * h).collect();
    let mids: Vec<f64> = (0..n).map(|j| a + (j as f64 + 0.5) * h).collect();
    let mut u = vec![0.0; n + 1];
    u[0] = problem.source.value(a, theta);
    let mut row = vec![0.0; n];
    for i in 1..=n {
        let t = nodes[i];
        problem.kernel.row(t, &mids[..i], theta, &mut row[..i]);
        let mut acc = problem.source.value(t, theta);
        for j in 0..i - 1 {
            acc += h * row[j] * 0.5 * (u[j] + u[j + 1]);
        }
        let kd = h * row[i - 1] * 0.5;
        acc += kd * u[i - 1];
        let denom = 1.0 - kd;
        if denom == 0.0 {
            return Err(Error::Singular(format!("implicit step singular at t = {t}")));
        }
        u[i] = acc / denom;
        if !u[i].is_finite() {
            return Err(Error::Numerical(format!("non-finite solution at t = {t}")));
        }
    }
    Ok(GridSolution {
        problem_id: problem.id.clone(),
        theta: theta.to_vec(),
        spacing: h,
        placement: Placement::Nodes,
        points: nodes,
        values: u,
    })
}
