//! Collocation losses.
//!
//! Every loss is assembled on a [`Tape`] from network jets recorded as leaves, so
//! one reverse sweep yields the adjoints of the jets (handed to the networks'
//! backward passes) and of the model parameters `theta`.
//!
//! PDE (weights `nu_1, nu_2, nu_3`):
//! ```text
//! nu_1 mean_n r(x^n)^2 + nu_2 mean_j w_seg (u(y^j) - b(y^j))^2 [+ nu_3 mean_i (u(x_i) - z_i)^2]
//! ```
//! Integral equations (weights `nu_1..nu_4`):
//! ```text
//! mean_n [ nu_1 (dw/dy(x,y) - k(x,y) u(y))^2 + nu_2 w(x,a)^2 + nu_3 c(x)^2 ] [+ nu_4 mean_i (u(x_i) - z_i)^2]
//! c(x) = v(x) + w(x,b(x))              (first kind)
//! c(x) = u(x) - v(x) - w(x,b(x))       (second kind)
//! ```
//! With an inverse square-root diagonal the integrator is `w = N0 + sqrt(x - y) N1`
//! and the first term is weighted by `(x - y)`, which keeps it finite.

use crate::error::{Error, Result};
use crate::nn::autodiff::sum;
use crate::nn::{Adjoints, DenseNetwork, Jet, JetVar, Tape, Var};
use crate::problems::{
    Dataset, EquationKind, IntegralProblem, KernelSingularity, LossWeights, PdeProblem, UpperLimit,
};
use crate::trainer::model::{input_rows, Networks, SolutionNet};
use crate::trainer::sampling::CollocationBatch;
use crate::trainer::Problem;

/// Loss value with gradients for every trainable block.
#[derive(Clone, Debug, PartialEq)]
pub struct LossGrad {
    pub value: f64,
    /// Flat gradient over the networks, in [`Networks::param_blocks_mut`] order.
    pub networks: Vec<f64>,
    /// Gradient with respect to a shared `theta` (empty when `theta` is per point).
    pub theta: Vec<f64>,
}

/// How the model parameters enter a loss.
#[derive(Clone, Copy, Debug)]
pub(crate) enum ThetaSource<'a> {
    /// Per-point draws carried by the batch.
    Batch,
    /// One shared value for every point.
    Fixed(&'a [f64]),
}

fn jet_leaf<'t>(tape: &'t Tape, jet: &Jet) -> JetVar<'t> {
    JetVar {
        value: tape.var(jet.value),
        grad: tape.vars(&jet.grad),
        hess: tape.vars(&jet.hess_diag),
    }
}

fn jet_seed(adj: &Adjoints, leaf: &JetVar<'_>) -> Jet {
    Jet {
        value: adj.wrt(&leaf.value),
        grad: adj.wrt_all(&leaf.grad),
        hess_diag: adj.wrt_all(&leaf.hess),
    }
}

fn check_finite(v: &Var<'_>, what: impl FnOnce() -> String) -> Result<()> {
    if v.value().is_finite() {
        Ok(())
    } else {
        Err(Error::Numerical(format!("{} is {}", what(), v.value())))
    }
}

fn theta_rows<'b>(batch_theta: &'b [Vec<f64>], src: ThetaSource<'b>, n: usize) -> Vec<&'b [f64]> {
    match src {
        ThetaSource::Batch => batch_theta.iter().map(Vec::as_slice).collect(),
        ThetaSource::Fixed(t) => vec![t; n],
    }
}

pub(crate) fn pde_objective(
    net: &SolutionNet,
    problem: &PdeProblem,
    batch: &CollocationBatch,
    theta: ThetaSource<'_>,
    weights: &LossWeights,
    data: Option<&Dataset>,
    want_grad: bool,
) -> Result<LossGrad> {
    weights.validate()?;
    let n = batch.interior.len();
    let j = batch.boundary.len();
    let xs: Vec<&[f64]> = batch.interior.iter().map(Vec::as_slice).collect();
    let ths = theta_rows(&batch.interior_theta, theta, n);
    let (ipass, ijets) = net.jets(&xs, &ths, &problem.derivative_coords)?;

    let bxs: Vec<&[f64]> = batch.boundary.iter().map(|b| b.x.as_slice()).collect();
    let bths: Vec<&[f64]> = match theta {
        ThetaSource::Batch => batch.boundary.iter().map(|b| b.theta.as_slice()).collect(),
        ThetaSource::Fixed(t) => vec![t; j],
    };
    let (bpass, bjets) = net.jets(&bxs, &bths, &[])?;

    let data_pass = match data {
        Some(d) => {
            let ThetaSource::Fixed(t) = theta else {
                return Err(Error::Config("data terms need a shared theta".into()));
            };
            let dxs: Vec<&[f64]> = d.inputs.iter().map(Vec::as_slice).collect();
            Some(net.jets(&dxs, &vec![t; d.len()], &[])?)
        }
        None => None,
    };

    let tape = Tape::with_capacity(64 * (n + j) + 16);
    let shared: Vec<Var> = match theta {
        ThetaSource::Fixed(t) => tape.vars(t),
        ThetaSource::Batch => vec![],
    };
    let theta_vars = |point: &[f64]| -> Vec<Var> {
        match theta {
            ThetaSource::Fixed(_) => shared.clone(),
            ThetaSource::Batch => tape.vars(point),
        }
    };

    let ileaves: Vec<JetVar> = ijets.iter().map(|jt| jet_leaf(&tape, jt)).collect();
    let mut interior_terms = Vec::with_capacity(n);
    for (i, leaf) in ileaves.iter().enumerate() {
        let th = theta_vars(ths[i]);
        let r = problem.residual.eval(&tape, &batch.interior[i], leaf, &th);
        check_finite(&r, || {
            format!("interior residual at x={:?}, theta={:?}", batch.interior[i], ths[i])
        })?;
        interior_terms.push(r.square());
    }
    let bleaves: Vec<JetVar> = bjets.iter().map(|jt| jet_leaf(&tape, jt)).collect();
    let mut boundary_terms = Vec::with_capacity(j);
    for (leaf, bp) in bleaves.iter().zip(&batch.boundary) {
        let seg = &problem.boundaries[bp.segment];
        let th = theta_vars(&bp.theta);
        let target = seg.target.eval(&tape, &bp.x, &th);
        let m = leaf.value - target;
        check_finite(&m, || format!("boundary `{}` mismatch at x={:?}", seg.name, bp.x))?;
        boundary_terms.push(m.square() * seg.weight);
    }
    let mut total = tape.constant(0.0);
    if n > 0 {
        total = total + sum(&tape, &interior_terms) * (weights.nu[0] / n as f64);
    }
    if j > 0 {
        total = total + sum(&tape, &boundary_terms) * (weights.nu[1] / j as f64);
    }
    let mut dleaves = vec![];
    if let (Some(d), Some((_, djets))) = (data, &data_pass) {
        dleaves = djets.iter().map(|jt| jet_leaf(&tape, jt)).collect();
        let terms: Vec<Var> = dleaves
            .iter()
            .zip(&d.responses)
            .map(|(l, &z)| (l.value - z).square())
            .collect();
        if !terms.is_empty() {
            total = total + sum(&tape, &terms) * (weights.nu[2] / terms.len() as f64);
        }
    }
    check_finite(&total, || "loss".to_string())?;
    if !want_grad {
        return Ok(LossGrad {
            value: total.value(),
            networks: vec![],
            theta: vec![],
        });
    }
    let adj = tape.gradient(&total);
    let iseeds: Vec<Jet> = ileaves.iter().map(|l| jet_seed(&adj, l)).collect();
    let mut g = net.backward(&ipass, &iseeds)?;
    let bseeds: Vec<Jet> = bleaves.iter().map(|l| jet_seed(&adj, l)).collect();
    add_into(&mut g, &net.backward(&bpass, &bseeds)?);
    if let Some((dpass, _)) = &data_pass {
        let dseeds: Vec<Jet> = dleaves.iter().map(|l| jet_seed(&adj, l)).collect();
        add_into(&mut g, &net.backward(dpass, &dseeds)?);
    }
    Ok(LossGrad {
        value: total.value(),
        networks: g,
        theta: adj.wrt_all(&shared),
    })
}

fn add_into(acc: &mut [f64], g: &[f64]) {
    for (a, b) in acc.iter_mut().zip(g) {
        *a += *b;
    }
}

/// Whether the integrator uses the square-root diagonal ansatz.
pub fn uses_sqrt_ansatz(problem: &IntegralProblem) -> bool {
    problem.singularity == KernelSingularity::InverseSqrtDiagonal
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn integral_objective(
    u_net: &DenseNetwork,
    w_net: &DenseNetwork,
    problem: &IntegralProblem,
    batch: &CollocationBatch,
    theta: ThetaSource<'_>,
    weights: &LossWeights,
    data: Option<&Dataset>,
    want_grad: bool,
) -> Result<LossGrad> {
    weights.validate()?;
    let sqrt_ansatz = uses_sqrt_ansatz(problem);
    if sqrt_ansatz && problem.limit != UpperLimit::Volterra {
        return Err(Error::Config(
            "the square-root diagonal ansatz needs a Volterra upper limit".into(),
        ));
    }
    let want_out = if sqrt_ansatz { 2 } else { 1 };
    if w_net.output_dim() != want_out || u_net.output_dim() != 1 {
        return Err(Error::Shape(format!(
            "integrator needs {want_out} outputs and the solution 1, got {} and {}",
            w_net.output_dim(),
            u_net.output_dim()
        )));
    }
    let n = batch.interior.len();
    if batch.pairs.len() != n {
        return Err(Error::Shape("integral batch needs one y per x".into()));
    }
    let second = problem.kind == EquationKind::Second;
    let ths = theta_rows(&batch.interior_theta, theta, n);
    let xs: Vec<f64> = batch.interior.iter().map(|x| x[0]).collect();
    let bx: Vec<f64> = xs.iter().map(|&x| problem.upper(x)).collect();

    // solution rows: u(y^n), then u(x^n) for the second kind, then data inputs
    let mut u_points: Vec<[f64; 1]> = batch.pairs.iter().map(|&y| [y]).collect();
    let mut u_thetas = ths.clone();
    if second {
        u_points.extend(xs.iter().map(|&x| [x]));
        u_thetas.extend(ths.iter().copied());
    }
    let data_offset = u_points.len();
    let fixed = match theta {
        ThetaSource::Fixed(t) => Some(t),
        ThetaSource::Batch => None,
    };
    if let Some(d) = data {
        let Some(t) = fixed else {
            return Err(Error::Config("data terms need a shared theta".into()));
        };
        u_points.extend(d.inputs.iter().map(|x| [x[0]]));
        u_thetas.extend(std::iter::repeat(t).take(d.len()));
    }
    let u_refs: Vec<&[f64]> = u_points.iter().map(|p| p.as_slice()).collect();
    let u_rows = input_rows(u_net.input_dim(), &u_refs, &u_thetas)?;
    let u_fwd = u_net.forward(&u_rows, &[])?;

    // integrator: derivative rows at (x, y), value rows at (x, a) and (x, b(x))
    let pair_pts: Vec<[f64; 2]> = xs.iter().zip(&batch.pairs).map(|(&x, &y)| [x, y]).collect();
    let pair_refs: Vec<&[f64]> = pair_pts.iter().map(|p| p.as_slice()).collect();
    let d_rows = input_rows(w_net.input_dim(), &pair_refs, &ths)?;
    let d_fwd = w_net.forward(&d_rows, &[1])?;
    let mut end_pts: Vec<[f64; 2]> = xs.iter().map(|&x| [x, problem.a]).collect();
    end_pts.extend(xs.iter().zip(&bx).map(|(&x, &b)| [x, b]));
    let end_refs: Vec<&[f64]> = end_pts.iter().map(|p| p.as_slice()).collect();
    let mut end_ths = ths.clone();
    end_ths.extend(ths.iter().copied());
    let e_rows = input_rows(w_net.input_dim(), &end_refs, &end_ths)?;
    let e_fwd = w_net.forward(&e_rows, &[])?;

    let tape = Tape::with_capacity(48 * n + 16);
    let shared: Vec<Var> = fixed.map_or_else(Vec::new, |t| tape.vars(t));
    let u_leaves: Vec<Var> = (0..u_fwd.points()).map(|p| tape.var(u_fwd.value(0, p))).collect();
    // per pair: dN0/dy, and for the ansatz N1, dN1/dy
    let d0: Vec<Var> = (0..n).map(|p| tape.var(d_fwd.grad(0, 0, p))).collect();
    let (n1, d1): (Vec<Var>, Vec<Var>) = if sqrt_ansatz {
        (
            (0..n).map(|p| tape.var(d_fwd.value(1, p))).collect(),
            (0..n).map(|p| tape.var(d_fwd.grad(1, 0, p))).collect(),
        )
    } else {
        (vec![], vec![])
    };
    let e0: Vec<Var> = (0..2 * n).map(|p| tape.var(e_fwd.value(0, p))).collect();
    let e1: Vec<Var> = if sqrt_ansatz {
        (0..2 * n).map(|p| tape.var(e_fwd.value(1, p))).collect()
    } else {
        vec![]
    };

    let mut terms = Vec::with_capacity(n);
    for i in 0..n {
        let (x, y) = (xs[i], batch.pairs[i]);
        let th: Vec<Var> = match fixed {
            Some(_) => shared.clone(),
            None => tape.vars(ths[i]),
        };
        let k = problem.kernel.eval(&tape, x, y, &th);
        let u_y = u_leaves[i];
        let t1 = if sqrt_ansatz {
            let s = (x - y).sqrt();
            d0[i] * s + d1[i] * (x - y) - n1[i] * 0.5 - k * s * u_y
        } else {
            d0[i] - k * u_y
        };
        check_finite(&t1, || format!("integrator residual at (x, y)=({x}, {y})"))?;
        let (w_a, w_b) = if sqrt_ansatz {
            (
                e0[i] + e1[i] * (x - problem.a).sqrt(),
                e0[n + i] + e1[n + i] * (x - bx[i]).max(0.0).sqrt(),
            )
        } else {
            (e0[i], e0[n + i])
        };
        let v = problem.source.eval(&tape, x, &th);
        let closure = if second {
            u_leaves[n + i] - v - w_b
        } else {
            v + w_b
        };
        check_finite(&closure, || format!("closure residual at x={x}"))?;
        terms.push(
            t1.square() * weights.nu[0] + w_a.square() * weights.nu[1] + closure.square() * weights.nu[2],
        );
    }
    let mut total = if n > 0 {
        sum(&tape, &terms) * (1.0 / n as f64)
    } else {
        tape.constant(0.0)
    };
    if let Some(d) = data {
        let dterms: Vec<Var> = (0..d.len())
            .map(|i| (u_leaves[data_offset + i] - d.responses[i]).square())
            .collect();
        if !dterms.is_empty() {
            total = total + sum(&tape, &dterms) * (weights.nu[3] / d.len() as f64);
        }
    }
    check_finite(&total, || "loss".to_string())?;
    if !want_grad {
        return Ok(LossGrad {
            value: total.value(),
            networks: vec![],
            theta: vec![],
        });
    }
    let adj = tape.gradient(&total);
    let mut us = u_fwd.seeds();
    for (p, l) in u_leaves.iter().enumerate() {
        *us.value_mut(0, p) = adj.wrt(l);
    }
    let mut g = u_net.backward(&u_fwd, &us)?;
    let mut ds = d_fwd.seeds();
    for p in 0..n {
        *ds.grad_mut(0, 0, p) = adj.wrt(&d0[p]);
        if sqrt_ansatz {
            *ds.value_mut(1, p) = adj.wrt(&n1[p]);
            *ds.grad_mut(1, 0, p) = adj.wrt(&d1[p]);
        }
    }
    let mut gw = w_net.backward(&d_fwd, &ds)?;
    let mut es = e_fwd.seeds();
    for p in 0..2 * n {
        *es.value_mut(0, p) = adj.wrt(&e0[p]);
        if sqrt_ansatz {
            *es.value_mut(1, p) = adj.wrt(&e1[p]);
        }
    }
    add_into(&mut gw, &w_net.backward(&e_fwd, &es)?);
    g.extend(gw);
    Ok(LossGrad {
        value: total.value(),
        networks: g,
        theta: adj.wrt_all(&shared),
    })
}

/// Fixed-parameter PDE loss at `theta`.
pub fn pde_loss(
    net: &SolutionNet,
    problem: &PdeProblem,
    theta: &[f64],
    batch: &CollocationBatch,
    weights: &LossWeights,
) -> Result<f64> {
    Ok(pde_objective(net, problem, batch, ThetaSource::Fixed(theta), weights, None, false)?.value)
}

/// Parametric PDE loss with the batch's per-point parameter draws.
pub fn parametric_pde_loss(
    net: &SolutionNet,
    problem: &PdeProblem,
    batch: &CollocationBatch,
    weights: &LossWeights,
) -> Result<f64> {
    Ok(pde_objective(net, problem, batch, ThetaSource::Batch, weights, None, false)?.value)
}

/// Integral-equation loss with the batch's per-point parameter draws.
pub fn integral_loss(
    u_net: &DenseNetwork,
    w_net: &DenseNetwork,
    problem: &IntegralProblem,
    batch: &CollocationBatch,
    weights: &LossWeights,
) -> Result<f64> {
    Ok(integral_objective(u_net, w_net, problem, batch, ThetaSource::Batch, weights, None, false)?.value)
}

/// Base loss at a shared `theta` plus the weighted mean squared data mismatch
/// (`nu_3` for PDEs, `nu_4` for integral equations).
pub fn augmented_loss(
    nets: &Networks,
    problem: &Problem,
    theta: &[f64],
    batch: &CollocationBatch,
    dataset: &Dataset,
    weights: &LossWeights,
) -> Result<f64> {
    Ok(augmented_objective(nets, problem, theta, batch, dataset, weights, false)?.value)
}

pub(crate) fn augmented_objective(
    nets: &Networks,
    problem: &Problem,
    theta: &[f64],
    batch: &CollocationBatch,
    dataset: &Dataset,
    weights: &LossWeights,
    want_grad: bool,
) -> Result<LossGrad> {
    if dataset.is_empty() {
        return Err(Error::Empty("augmented loss needs at least one datum".into()));
    }
    match (nets, problem) {
        (Networks::Pde(net), Problem::Pde(p)) => {
            if net.is_parametric(p.domain.dim()) {
                return Err(Error::Config(
                    "augmented training needs a solution network without parameter inputs".into(),
                ));
            }
            pde_objective(net, p, batch, ThetaSource::Fixed(theta), weights, Some(dataset), want_grad)
        }
        (
            Networks::Integral {
                solution,
                integrator,
            },
            Problem::Integral(p),
        ) => integral_objective(
            solution,
            integrator,
            p,
            batch,
            ThetaSource::Fixed(theta),
            weights,
            Some(dataset),
            want_grad,
        ),
        _ => Err(Error::Config("networks do not match the problem type".into())),
    }
}

/// Loss and network gradient of the standard (non-augmented) objective.
pub(crate) fn objective(
    nets: &Networks,
    problem: &Problem,
    batch: &CollocationBatch,
    fixed_theta: Option<&[f64]>,
    weights: &LossWeights,
    want_grad: bool,
) -> Result<LossGrad> {
    let src = fixed_theta.map_or(ThetaSource::Batch, ThetaSource::Fixed);
    match (nets, problem) {
        (Networks::Pde(net), Problem::Pde(p)) => {
            pde_objective(net, p, batch, src, weights, None, want_grad)
        }
        (
            Networks::Integral {
                solution,
                integrator,
            },
            Problem::Integral(p),
        ) => integral_objective(solution, integrator, p, batch, src, weights, None, want_grad),
        _ => Err(Error::Config("networks do not match the problem type".into())),
    }
}
