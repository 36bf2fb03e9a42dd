//! Log-barrier interior-point engine for small affine matrix inequalities.
//!
//! Every constraint is an affine symmetric matrix function
//! `F(x) = F₀ + Σᵢ xᵢ Fᵢ` that must stay positive definite. Constraints are
//! given as closures and probed at the unit vectors, so any formulation that is
//! affine in the decision vector can be plugged in without hand-deriving the
//! coefficient matrices. Iterates are accepted only after a successful
//! Cholesky factorisation of every block.

use super::linalg::{cholesky, spd_inverse, Mat, SymMatrix};
use crate::{Error, Result};

/// `F(x) = base + Σ x_i coeffs[i] ≻ 0`.
#[derive(Debug, Clone)]
pub struct AffineLmi {
    pub name: String,
    base: Mat,
    coeffs: Vec<Option<Mat>>,
}

impl AffineLmi {
    /// Probes an affine matrix-valued map at `0` and at the unit vectors.
    pub fn from_fn<F: Fn(&[f64]) -> Mat>(name: &str, nvars: usize, f: F) -> Self {
        let zero = vec![0.0; nvars];
        let base = symmetrize(&f(&zero));
        let mut coeffs = Vec::with_capacity(nvars);
        let mut x = zero;
        for i in 0..nvars {
            x[i] = 1.0;
            let c = symmetrize(&f(&x)) - &base;
            x[i] = 0.0;
            coeffs.push(if c.amax() == 0.0 { None } else { Some(c) });
        }
        Self {
            name: name.to_string(),
            base,
            coeffs,
        }
    }

    pub fn dim(&self) -> usize {
        self.base.nrows()
    }

    pub fn nvars(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, x: &[f64]) -> Mat {
        let mut m = self.base.clone();
        for (xi, c) in x.iter().zip(&self.coeffs) {
            if let Some(c) = c {
                m += c * *xi;
            }
        }
        m
    }

    pub fn eval_sym(&self, x: &[f64]) -> SymMatrix {
        SymMatrix::sym_part(&self.eval(x))
    }

    /// Same constraint with an extra trailing variable `s` entering as `+ s·I`.
    fn with_shift(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.push(Some(Mat::identity(self.dim(), self.dim())));
        Self {
            name: self.name.clone(),
            base: self.base.clone(),
            coeffs,
        }
    }

    /// `−log det F(x)` with its gradient and Hessian, or `None` outside the
    /// positive definite cone.
    fn neg_log_det(&self, x: &[f64], want_hessian: bool) -> Option<(f64, Vec<f64>, Option<Mat>)> {
        let f = SymMatrix::sym_part(&self.eval(x));
        let l = cholesky(&f).ok()?;
        let value = -2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>();
        let inv = spd_inverse(&f).ok()?.to_dense();
        let p = self.nvars();
        let mut grad = vec![0.0; p];
        let mut prods: Vec<Option<Mat>> = Vec::with_capacity(p);
        for (i, c) in self.coeffs.iter().enumerate() {
            match c {
                Some(c) => {
                    let g = &inv * c;
                    grad[i] = -g.trace();
                    prods.push(Some(g));
                }
                None => prods.push(None),
            }
        }
        let hess = want_hessian.then(|| {
            let mut h = Mat::zeros(p, p);
            for i in 0..p {
                let Some(gi) = &prods[i] else { continue };
                for j in 0..=i {
                    let Some(gj) = &prods[j] else { continue };
                    // tr(Gi Gj) = Σ_ab Gi[a,b] Gj[b,a]
                    let v = gi.component_mul(&gj.transpose()).sum();
                    h[(i, j)] = v;
                    h[(j, i)] = v;
                }
            }
            h
        });
        Some((value, grad, hess))
    }

    pub fn is_strictly_feasible(&self, x: &[f64]) -> bool {
        cholesky(&SymMatrix::sym_part(&self.eval(x))).is_ok()
    }
}

fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Objective to minimise over the feasible set.
#[derive(Debug, Clone)]
pub enum Objective {
    /// `½ xᵀQx + qᵀx + c`.
    Quadratic { q: Mat, lin: Vec<f64>, constant: f64 },
    /// `−log det G(x)`; maximises the volume-like quantity `det G`.
    NegLogDet(AffineLmi),
    /// Only strict feasibility is requested.
    Feasibility,
}

impl Objective {
    fn eval(&self, x: &[f64], want_hessian: bool) -> Option<(f64, Vec<f64>, Option<Mat>)> {
        match self {
            Objective::Quadratic { q, lin, constant } => {
                let xv = nalgebra::DVector::from_column_slice(x);
                let qx = q * &xv;
                let value = 0.5 * xv.dot(&qx) + lin.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + constant;
                let grad = qx.iter().zip(lin).map(|(a, b)| a + b).collect();
                Some((value, grad, want_hessian.then(|| q.clone())))
            }
            Objective::NegLogDet(g) => g.neg_log_det(x, want_hessian),
            Objective::Feasibility => Some((
                0.0,
                vec![0.0; x.len()],
                want_hessian.then(|| Mat::zeros(x.len(), x.len())),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BarrierOptions {
    /// Total Newton-step budget across all centering problems.
    pub max_newton: usize,
    /// Stop once the duality-gap bound `Σ dim(F_b) / t` falls below this.
    pub gap_tol: f64,
    pub t0: f64,
    pub mu: f64,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self {
            max_newton: 2000,
            gap_tol: 1e-8,
            t0: 1.0,
            mu: 8.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BarrierResult {
    pub x: Vec<f64>,
    pub objective: f64,
    pub newton_steps: usize,
}

struct Problem<'a> {
    constraints: &'a [AffineLmi],
    objective: &'a Objective,
}

impl Problem<'_> {
    /// `t·f₀(x) + Σ −log det F_b(x)`.
    fn eval(&self, x: &[f64], t: f64, want_hessian: bool) -> Option<(f64, Vec<f64>, Option<Mat>)> {
        let p = x.len();
        let (f0, g0, h0) = self.objective.eval(x, want_hessian)?;
        let mut value = t * f0;
        let mut grad: Vec<f64> = g0.iter().map(|g| t * g).collect();
        let mut hess = h0.map(|h| h * t);
        for c in self.constraints {
            let (v, g, h) = c.neg_log_det(x, want_hessian)?;
            value += v;
            for i in 0..p {
                grad[i] += g[i];
            }
            if let (Some(acc), Some(h)) = (hess.as_mut(), h) {
                *acc += h;
            }
        }
        Some((value, grad, hess))
    }
}

fn newton_direction(hess: &Mat, grad: &[f64]) -> Option<Vec<f64>> {
    let p = grad.len();
    let trace = hess.trace().abs().max(1e-300);
    let mut reg = 0.0;
    for _ in 0..12 {
        let mut h = hess.clone();
        for i in 0..p {
            h[(i, i)] += reg;
        }
        if let Ok(l) = cholesky(&SymMatrix::sym_part(&h)) {
            let rhs = Mat::from_iterator(p, 1, grad.iter().map(|g| -g));
            let y = super::linalg::forward_sub(&l, &rhs);
            let d = super::linalg::backward_sub(&l, &y);
            return Some(d.iter().copied().collect());
        }
        reg = if reg == 0.0 { 1e-14 * trace } else { reg * 100.0 };
    }
    None
}

/// Minimises `objective` over `{x : F_b(x) ≻ 0 ∀b}` starting from a strictly
/// feasible `x0` by a sequence of damped Newton centering steps.
pub fn minimize(
    constraints: &[AffineLmi],
    objective: &Objective,
    x0: &[f64],
    opts: &BarrierOptions,
) -> Result<BarrierResult> {
    minimize_until(constraints, objective, x0, opts, |_| false)
}

fn minimize_until<S: Fn(&[f64]) -> bool>(
    constraints: &[AffineLmi],
    objective: &Objective,
    x0: &[f64],
    opts: &BarrierOptions,
    stop_early: S,
) -> Result<BarrierResult> {
    let problem = Problem { constraints, objective };
    let barrier_dim: usize = constraints.iter().map(AffineLmi::dim).sum::<usize>().max(1);
    let mut x = x0.to_vec();
    if problem.eval(&x, opts.t0, false).is_none() {
        return Err(Error::Precondition(
            "barrier start point is not strictly feasible".into(),
        ));
    }
    if matches!(objective, Objective::Feasibility) {
        let f0 = 0.0;
        return Ok(BarrierResult {
            x,
            objective: f0,
            newton_steps: 0,
        });
    }
    let mut t = opts.t0;
    let mut steps = 0usize;
    loop {
        // centering
        for _ in 0..200 {
            let (value, grad, hess) = problem
                .eval(&x, t, true)
                .ok_or_else(|| Error::Numeric("iterate left the feasible set".into()))?;
            let hess = hess.expect("hessian requested");
            let dir = newton_direction(&hess, &grad).ok_or_else(|| Error::Numeric("singular Newton system".into()))?;
            let decrement: f64 = -grad.iter().zip(&dir).map(|(g, d)| g * d).sum::<f64>();
            if decrement / 2.0 <= 1e-10 {
                break;
            }
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..80 {
                let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
                if let Some((tv, _, _)) = problem.eval(&trial, t, false) {
                    if tv <= value - 0.25 * step * decrement {
                        x = trial;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            steps += 1;
            if stop_early(&x) {
                let objective = objective.eval(&x, false).map(|v| v.0).unwrap_or(f64::NAN);
                return Ok(BarrierResult {
                    x,
                    objective,
                    newton_steps: steps,
                });
            }
            if steps >= opts.max_newton {
                return Err(Error::InfeasibleWithinBudget {
                    iterations: steps,
                    residual: decrement,
                });
            }
            if !accepted {
                break;
            }
        }
        if barrier_dim as f64 / t < opts.gap_tol {
            break;
        }
        t *= opts.mu;
    }
    let objective = objective.eval(&x, false).map(|v| v.0).unwrap_or(f64::NAN);
    Ok(BarrierResult {
        x,
        objective,
        newton_steps: steps,
    })
}

/// Phase I: minimises a uniform shift `s` with `F_b(x) + sI ≻ 0` and returns
/// the first iterate with `s < 0`, which is strictly feasible for the
/// original constraints.
pub fn find_feasible(constraints: &[AffineLmi], x0: &[f64], opts: &BarrierOptions) -> Result<(Vec<f64>, usize)> {
    if constraints.iter().all(|c| c.is_strictly_feasible(x0)) {
        return Ok((x0.to_vec(), 0));
    }
    let p = x0.len();
    let mut worst = f64::NEG_INFINITY;
    for c in constraints {
        let lmin = c.eval_sym(x0).lambda_min()?;
        worst = worst.max(-lmin);
    }
    let s0 = worst.max(0.0) + 1.0;
    let shifted: Vec<AffineLmi> = constraints.iter().map(AffineLmi::with_shift).collect();
    let mut start = x0.to_vec();
    start.push(s0);
    let mut lin = vec![0.0; p + 1];
    lin[p] = 1.0;
    let objective = Objective::Quadratic {
        q: Mat::zeros(p + 1, p + 1),
        lin,
        constant: 0.0,
    };
    let phase1_opts = BarrierOptions {
        gap_tol: 1e-10,
        ..*opts
    };
    let result = minimize_until(&shifted, &objective, &start, &phase1_opts, |x| {
        x[p] < 0.0 && constraints.iter().all(|c| c.is_strictly_feasible(&x[..p]))
    });
    match result {
        Ok(r) => {
            let x: Vec<f64> = r.x[..p].to_vec();
            if constraints.iter().all(|c| c.is_strictly_feasible(&x)) {
                Ok((x, r.newton_steps))
            } else {
                Err(Error::InfeasibleWithinBudget {
                    iterations: r.newton_steps,
                    residual: r.x[p],
                })
            }
        }
        Err(e) => Err(e),
    }
}
