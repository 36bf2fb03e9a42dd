//! Dirichlet eigen-decomposition of `∂xx + c(x)` on `(0, L)` and the truncated
//! modal control system.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::grid::Grid;
use crate::{Error, Result};

pub const DEFAULT_GRID_POINTS: usize = 2001;
pub const DEFAULT_ORDER: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reaction {
    Constant(f64),
    /// Samples of `c(x)` on the operator grid.
    Sampled(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputShape {
    /// `Σ coef · e_j` with 1-based mode indices.
    Modes(Vec<(usize, f64)>),
    /// Samples of `b_k(x)` on the operator grid.
    Sampled(Vec<f64>),
}

impl InputShape {
    pub fn mode(j: usize) -> Self {
        InputShape::Modes(vec![(j, 1.0)])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub length: f64,
    pub reaction: Reaction,
    pub inputs: Vec<InputShape>,
    pub sat_level: f64,
    pub grid: Grid,
}

impl OperatorSpec {
    pub fn new(length: f64, reaction: Reaction, inputs: Vec<InputShape>, sat_level: f64, grid: Grid) -> Result<Self> {
        if !(length > 0.0) {
            return Err(Error::InvalidInput(format!(
                "domain length must be positive, got {length}"
            )));
        }
        if !(sat_level > 0.0) {
            return Err(Error::InvalidInput(format!(
                "saturation level must be positive, got {sat_level}"
            )));
        }
        if inputs.is_empty() {
            return Err(Error::InvalidInput("at least one input shape is required".into()));
        }
        if (grid.length - length).abs() > 1e-12 * length {
            return Err(Error::InvalidInput(format!(
                "grid covers [0, {}] but the domain is [0, {length}]",
                grid.length
            )));
        }
        if let Reaction::Sampled(c) = &reaction {
            grid.check(c)?;
        }
        for input in &inputs {
            match input {
                InputShape::Sampled(b) => grid.check(b)?,
                InputShape::Modes(terms) => {
                    if terms.iter().any(|(j, _)| *j == 0) {
                        return Err(Error::InvalidInput("mode indices start at 1".into()));
                    }
                }
            }
        }
        Ok(Self {
            length,
            reaction,
            inputs,
            sat_level,
            grid,
        })
    }

    /// Constant reaction on the default grid.
    pub fn constant(length: f64, c: f64, inputs: Vec<InputShape>, sat_level: f64) -> Result<Self> {
        let grid = Grid::new(length, DEFAULT_GRID_POINTS)?;
        Self::new(length, Reaction::Constant(c), inputs, sat_level, grid)
    }

    pub fn m(&self) -> usize {
        self.inputs.len()
    }

    pub fn reaction_on(&self, grid: &Grid) -> Result<Vec<f64>> {
        match &self.reaction {
            Reaction::Constant(c) => Ok(vec![*c; grid.points]),
            Reaction::Sampled(c) => grid.resample(&self.grid, c),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModalSystem {
    pub grid: Grid,
    pub eigvals: Vec<f64>,
    pub eigfuncs: Vec<Vec<f64>>,
    pub n: usize,
    pub eta: f64,
    /// `N × m`, empty until [`project_inputs`] runs.
    pub bmat: DMatrix<f64>,
    /// Samples of the input shapes on `grid`.
    pub input_samples: Vec<Vec<f64>>,
    /// `λ_{N+1}`, used for `η` when every retained mode is kept.
    pub next_eigval: f64,
}

impl ModalSystem {
    pub fn order(&self) -> usize {
        self.eigvals.len()
    }

    pub fn m(&self) -> usize {
        self.bmat.ncols()
    }

    pub fn already_stable(&self) -> bool {
        self.n == 0
    }

    /// `𝐀 = diag(λ_1, …, λ_n)`.
    pub fn amat(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| if i == j { self.eigvals[i] } else { 0.0 })
    }

    /// First `n` rows of the modal input matrix.
    pub fn bmat_unstable(&self) -> DMatrix<f64> {
        self.bmat.rows(0, self.n).into_owned()
    }

    /// Rows `n..N` of the modal input matrix.
    pub fn bmat_tail(&self) -> DMatrix<f64> {
        self.bmat.rows(self.n, self.order() - self.n).into_owned()
    }

    /// `‖b⊥‖`: Frobenius norm of the tail input coefficients.
    pub fn tail_input_norm(&self) -> f64 {
        self.bmat_tail().norm()
    }

    pub fn to_file(&self) -> ModalSystemFile {
        ModalSystemFile {
            eigvals: self.eigvals.clone(),
            bmat: (0..self.bmat.nrows())
                .map(|i| self.bmat.row(i).iter().copied().collect())
                .collect(),
            n: self.n,
            eta: self.eta,
            grid: self.grid,
        }
    }
}

/// Serialized form of a [`ModalSystem`] (eigenfunctions are not stored).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalSystemFile {
    pub eigvals: Vec<f64>,
    pub bmat: Vec<Vec<f64>>,
    pub n: usize,
    pub eta: f64,
    pub grid: Grid,
}

/// Tail margin: `0.999·(−λ_{n+1})`, or the midpoint between `β` and
/// `−λ_{n+1}` when the slack would fall below the decay target.
pub fn tail_margin(lambda_next: f64, beta: f64) -> f64 {
    let gap = -lambda_next;
    let eta = 0.999 * gap;
    if eta > beta {
        eta
    } else {
        0.5 * (beta + gap)
    }
}

pub fn analytic_eigenvalue(length: f64, c: f64, j: usize) -> f64 {
    let q = PI * j as f64 / length;
    c - q * q
}

/// Closed-form spectrum for constant `c`.
pub fn analytic_spectrum(spec: &OperatorSpec, order: usize) -> Result<ModalSystem> {
    let c = match spec.reaction {
        Reaction::Constant(c) => c,
        Reaction::Sampled(_) => return Err(Error::AnalyticUnavailable),
    };
    if order == 0 {
        return Err(Error::InvalidInput("truncation order must be at least 1".into()));
    }
    let l = spec.length;
    let scale = (2.0 / l).sqrt();
    let eigvals: Vec<f64> = (1..=order).map(|j| analytic_eigenvalue(l, c, j)).collect();
    let next_eigval = analytic_eigenvalue(l, c, order + 1);
    let eigfuncs = (1..=order)
        .map(|j| spec.grid.sample(|x| scale * (PI * j as f64 * x / l).sin()))
        .collect();
    let ms = ModalSystem {
        grid: spec.grid,
        eigvals,
        eigfuncs,
        n: 0,
        eta: 0.0,
        bmat: DMatrix::zeros(order, 0),
        input_samples: Vec::new(),
        next_eigval,
    };
    Ok(provisional_n(ms))
}

/// Central-difference spectrum of `∂xx + c` with Dirichlet rows removed.
///
/// The matrix is symmetric tridiagonal; eigenvalues are isolated by Sturm
/// bisection and eigenvectors by inverse iteration.
pub fn numeric_spectrum(spec: &OperatorSpec, order: usize, grid_points: usize) -> Result<ModalSystem> {
    if order == 0 {
        return Err(Error::InvalidInput("truncation order must be at least 1".into()));
    }
    if grid_points < 3 * order {
        return Err(Error::Resolution {
            points: grid_points,
            order,
            needed: 3 * order,
        });
    }
    let grid = Grid::new(spec.length, grid_points)?;
    let c = spec.reaction_on(&grid)?;
    let h = grid.step();
    let inv_h2 = 1.0 / (h * h);
    let interior = grid.points - 2;
    let diag: Vec<f64> = (1..=interior).map(|i| -2.0 * inv_h2 + c[i]).collect();
    let off = inv_h2;

    let lo = diag.iter().fold(f64::INFINITY, |m, d| m.min(*d)) - 2.0 * off;
    let hi = diag.iter().fold(f64::NEG_INFINITY, |m, d| m.max(*d)) + 2.0 * off;
    let mut eigvals = Vec::with_capacity(order);
    let mut eigfuncs = Vec::with_capacity(order);
    let mut next_eigval = f64::NEG_INFINITY;
    for j in 0..=order.min(interior - 1) {
        // j-th largest: the point where the count of eigenvalues above x drops to j
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if interior - sturm_count_below(&diag, off, mid) > j {
                a = mid;
            } else {
                b = mid;
            }
        }
        let lambda = 0.5 * (a + b);
        if j == order {
            next_eigval = lambda;
            break;
        }
        let v = inverse_iteration(&diag, off, lambda)?;
        let mut f = Vec::with_capacity(grid.points);
        f.push(0.0);
        f.extend_from_slice(&v);
        f.push(0.0);
        let norm = grid.l2_norm(&f);
        let sign = if f[1] < 0.0 { -1.0 } else { 1.0 };
        f.iter_mut().for_each(|x| *x *= sign / norm);
        eigvals.push(lambda);
        eigfuncs.push(f);
    }
    for w in eigvals.windows(2) {
        if !(w[0] > w[1]) {
            return Err(Error::Numeric(format!(
                "eigenvalues not separated: {} and {}",
                w[0], w[1]
            )));
        }
    }
    let ms = ModalSystem {
        grid,
        eigvals,
        eigfuncs,
        n: 0,
        eta: 0.0,
        bmat: DMatrix::zeros(order, 0),
        input_samples: Vec::new(),
        next_eigval,
    };
    Ok(provisional_n(ms))
}

/// Number of eigenvalues strictly below `x` of the symmetric tridiagonal
/// matrix with constant off-diagonal.
fn sturm_count_below(diag: &[f64], off: f64, x: f64) -> usize {
    let off2 = off * off;
    let mut count = 0;
    let mut q = 1.0;
    for (i, d) in diag.iter().enumerate() {
        q = if i == 0 { d - x } else { d - x - off2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (d.abs() + off.abs());
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn inverse_iteration(diag: &[f64], off: f64, lambda: f64) -> Result<Vec<f64>> {
    let n = diag.len();
    let shift = lambda + 1e-10 * (1.0 + lambda.abs());
    let shifted: Vec<f64> = diag.iter().map(|d| d - shift).collect();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i * 7919) % 97) as f64).collect();
    for _ in 0..4 {
        v = tridiagonal_solve(&shifted, off, &v)?;
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Numeric("inverse iteration broke down".into()));
        }
        v.iter_mut().for_each(|x| *x /= norm);
    }
    Ok(v)
}

/// Gaussian elimination with partial pivoting for a symmetric tridiagonal
/// system with constant off-diagonal.
fn tridiagonal_solve(diag: &[f64], off: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    // row i holds (a[i], b[i], c[i]) at columns (i, i+1, i+2) after pivoting
    let mut a = diag.to_vec();
    let mut b = vec![off; n];
    let mut c = vec![0.0; n];
    let mut r = rhs.to_vec();
    if n > 0 {
        b[n - 1] = 0.0;
    }
    let mut sub: Vec<f64> = vec![off; n];
    for i in 0..n.saturating_sub(1) {
        let below = sub[i];
        if below.abs() > a[i].abs() {
            // swap rows i and i+1
            let (na, nb, nc) = (below, a[i + 1], b[i + 1]);
            let (oa, ob, oc) = (a[i], b[i], c[i]);
            a[i] = na;
            b[i] = nb;
            c[i] = nc;
            r.swap(i, i + 1);
            let m = oa / na;
            a[i + 1] = ob - m * nb;
            b[i + 1] = oc - m * nc;
            r[i + 1] -= m * r[i];
        } else {
            if a[i] == 0.0 {
                a[i] = f64::EPSILON * off.abs().max(1.0);
            }
            let m = below / a[i];
            a[i + 1] -= m * b[i];
            b[i + 1] -= m * c[i];
            r[i + 1] -= m * r[i];
        }
        sub[i] = 0.0;
    }
    if n > 0 && a[n - 1] == 0.0 {
        a[n - 1] = f64::EPSILON * off.abs().max(1.0);
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = r[i];
        if i + 1 < n {
            s -= b[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= c[i] * x[i + 2];
        }
        x[i] = s / a[i];
    }
    Ok(x)
}

/// Samples of every input shape on the modal grid.
pub fn input_samples(ms: &ModalSystem, spec: &OperatorSpec) -> Result<Vec<Vec<f64>>> {
    spec.inputs
        .iter()
        .map(|shape| match shape {
            InputShape::Modes(terms) => {
                let mut f = vec![0.0; ms.grid.points];
                for &(j, coef) in terms {
                    let e = ms.eigfuncs.get(j - 1).ok_or_else(|| {
                        Error::InvalidInput(format!("input uses mode {j} beyond truncation order {}", ms.order()))
                    })?;
                    f.iter_mut().zip(e).for_each(|(fi, ei)| *fi += coef * ei);
                }
                Ok(f)
            }
            InputShape::Sampled(b) => {
                if b.len() != ms.grid.points {
                    return Err(Error::IncompatibleGrid {
                        expected: ms.grid.points,
                        got: b.len(),
                    });
                }
                Ok(b.clone())
            }
        })
        .collect()
}

/// Fills `b_jk = ⟨b_k, e_j⟩`. Mode-tagged inputs project exactly onto their
/// coefficients; sampled inputs use Simpson quadrature.
pub fn project_inputs(ms: &ModalSystem, spec: &OperatorSpec) -> Result<ModalSystem> {
    let samples = input_samples(ms, spec)?;
    let order = ms.order();
    let m = spec.m();
    let mut bmat = DMatrix::zeros(order, m);
    for (k, shape) in spec.inputs.iter().enumerate() {
        match shape {
            InputShape::Modes(terms) => {
                for &(j, coef) in terms {
                    bmat[(j - 1, k)] += coef;
                }
            }
            InputShape::Sampled(_) => {
                let bk = &samples[k];
                let bnorm = ms.grid.l2_norm(bk);
                for j in 0..order {
                    let v = ms.grid.inner(bk, &ms.eigfuncs[j]);
                    let bound = bnorm * ms.grid.l2_norm(&ms.eigfuncs[j]);
                    if v.abs() > bound * (1.0 + 1e-9) + 1e-12 {
                        return Err(Error::Numeric(format!(
                            "|b_{}{}| = {} exceeds the Cauchy-Schwarz bound {}",
                            j + 1,
                            k + 1,
                            v.abs(),
                            bound
                        )));
                    }
                    bmat[(j, k)] = v;
                }
            }
        }
    }
    Ok(ModalSystem {
        bmat,
        input_samples: samples,
        ..ms.clone()
    })
}

/// `n` and `η` for `β = 0`; `η` is NaN when the truncation ends before the
/// first stable mode.
fn provisional_n(ms: ModalSystem) -> ModalSystem {
    match select_n(&ms, 0.0) {
        Ok(selected) => selected,
        Err(_) => ModalSystem {
            n: ms.order(),
            eta: f64::NAN,
            ..ms
        },
    }
}

/// Chooses `n` as the least index with `λ_{n+1} < −β` and sets `η`.
/// `n` may equal the truncation order, leaving an empty tail.
pub fn select_n(ms: &ModalSystem, beta: f64) -> Result<ModalSystem> {
    if !(beta >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "decay target must be nonnegative, got {beta}"
        )));
    }
    let n = ms.eigvals.iter().take_while(|l| **l >= -beta).count();
    let next = ms.eigvals.get(n).copied().unwrap_or(ms.next_eigval);
    if !(next < -beta) {
        return Err(Error::ExtendTruncation {
            order: ms.order(),
            threshold: beta,
        });
    }
    Ok(ModalSystem {
        n,
        eta: tail_margin(next, beta),
        ..ms.clone()
    })
}

/// Eigen-decomposition, input projection and mode selection in one call.
/// Uses the closed form when the reaction is constant.
pub fn modal_system(spec: &OperatorSpec, order: usize, beta: f64) -> Result<ModalSystem> {
    let ms = match spec.reaction {
        Reaction::Constant(_) => analytic_spectrum(spec, order)?,
        Reaction::Sampled(_) => numeric_spectrum(spec, order, spec.grid.points.max(3 * order))?,
    };
    let ms = project_inputs(&ms, spec)?;
    select_n(&ms, beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lmi::{sym_eig, SymMatrix};

    fn paper_spec() -> OperatorSpec {
        OperatorSpec::constant(2.0, 10.0, vec![InputShape::Modes(vec![(1, 1.0), (2, 1.0)])], 2.0).unwrap()
    }

    #[test]
    fn analytic_paper_eigenvalues() {
        let ms = analytic_spectrum(&paper_spec(), 10).unwrap();
        assert!((ms.eigvals[0] - 7.5325989).abs() < 1e-6);
        assert!((ms.eigvals[1] - 0.1303956).abs() < 1e-6);
        assert_eq!(ms.n, 2);
        assert!((ms.eta - 0.999 * (9.0 * PI * PI / 4.0 - 10.0)).abs() < 1e-12);
    }

    #[test]
    fn pure_laplacian_on_pi() {
        let spec = OperatorSpec::constant(PI, 0.0, vec![InputShape::mode(1)], 1.0).unwrap();
        let ms = analytic_spectrum(&spec, 3).unwrap();
        assert!((ms.eigvals[0] + 1.0).abs() < 1e-14);
        let x = spec.grid.x(100);
        assert!((ms.eigfuncs[0][100] - (2.0 / PI).sqrt() * x.sin()).abs() < 1e-14);
        assert!(ms.already_stable());
    }

    #[test]
    fn sampled_reaction_has_no_closed_form() {
        let grid = Grid::new(2.0, 101).unwrap();
        let spec = OperatorSpec::new(
            2.0,
            Reaction::Sampled(vec![1.0; 101]),
            vec![InputShape::mode(1)],
            1.0,
            grid,
        )
        .unwrap();
        assert!(matches!(analytic_spectrum(&spec, 2), Err(Error::AnalyticUnavailable)));
    }

    #[test]
    fn numeric_matches_analytic() {
        let ms = numeric_spectrum(&paper_spec(), 2, 2000).unwrap();
        assert!((ms.eigvals[0] - 7.5325989).abs() < 1e-3);
        assert!((ms.eigvals[1] - 0.1303956).abs() < 1e-3);
        assert_eq!(ms.n, 2);
        assert!(ms.eigfuncs[0][1] > 0.0 && ms.eigfuncs[1][1] > 0.0);
    }

    #[test]
    fn numeric_laplacian() {
        let spec = OperatorSpec::constant(PI, 0.0, vec![InputShape::mode(1)], 1.0).unwrap();
        let ms = numeric_spectrum(&spec, 1, 2000).unwrap();
        assert!((ms.eigvals[0] + 1.0).abs() < 1e-3);
    }

    #[test]
    fn coarse_grid_rejected() {
        assert!(matches!(
            numeric_spectrum(&paper_spec(), 10, 20),
            Err(Error::Resolution { needed: 30, .. })
        ));
    }

    #[test]
    fn sturm_agrees_with_dense_jacobi() {
        let grid = Grid::new(2.0, 41).unwrap();
        let c: Vec<f64> = grid.sample(|x| 10.0 * (x < 1.0) as u8 as f64 + x);
        let spec = OperatorSpec::new(2.0, Reaction::Sampled(c.clone()), vec![InputShape::mode(1)], 1.0, grid).unwrap();
        let ms = numeric_spectrum(&spec, 5, 41).unwrap();
        let h = grid.step();
        let m = grid.points - 2;
        let dense = SymMatrix::from_fn(m, |i, j| {
            if i == j {
                -2.0 / (h * h) + c[i + 1]
            } else if i == j + 1 {
                1.0 / (h * h)
            } else {
                0.0
            }
        });
        let eig = sym_eig(&dense).unwrap();
        for j in 0..5 {
            let reference = eig.values[m - 1 - j];
            assert!(
                (ms.eigvals[j] - reference).abs() < 1e-9 * (1.0 + reference.abs()),
                "mode {j}"
            );
        }
    }

    #[test]
    fn second_order_convergence() {
        let spec = paper_spec();
        let exact = analytic_eigenvalue(2.0, 10.0, 1);
        let e1 = (numeric_spectrum(&spec, 1, 101).unwrap().eigvals[0] - exact).abs();
        let e2 = (numeric_spectrum(&spec, 1, 201).unwrap().eigvals[0] - exact).abs();
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn gram_matrix_is_identity() {
        for ms in [
            analytic_spectrum(&paper_spec(), 6).unwrap(),
            numeric_spectrum(&paper_spec(), 6, 2001).unwrap(),
        ] {
            for i in 0..6 {
                for j in 0..6 {
                    let g = ms.grid.inner(&ms.eigfuncs[i], &ms.eigfuncs[j]);
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((g - expected).abs() < 1e-6, "({i},{j}) = {g}");
                }
            }
        }
    }

    #[test]
    fn discontinuous_reaction_is_resolution_stable() {
        let make = |points: usize| {
            let grid = Grid::new(2.0, points).unwrap();
            let c = grid.sample(|x| if x < 1.0 { 10.0 } else { 0.0 });
            let spec = OperatorSpec::new(2.0, Reaction::Sampled(c), vec![InputShape::mode(1)], 1.0, grid).unwrap();
            numeric_spectrum(&spec, 3, points).unwrap()
        };
        let (a, b) = (make(4001), make(2001));
        assert!(a.eigvals[0] > a.eigvals[1] && a.eigvals[1] > a.eigvals[2]);
        for j in 0..3 {
            assert!((a.eigvals[j] - b.eigvals[j]).abs() < 1e-2);
        }
    }

    #[test]
    fn paper_input_matrix() {
        let ms = modal_system(&paper_spec(), 10, 0.0).unwrap();
        assert_eq!(ms.bmat_unstable(), DMatrix::from_row_slice(2, 1, &[1.0, 1.0]));
        assert_eq!(ms.tail_input_norm(), 0.0);
    }

    #[test]
    fn sampled_inputs_project_by_quadrature() {
        let spec = paper_spec();
        let ms = analytic_spectrum(&spec, 5).unwrap();
        let e3 = ms.eigfuncs[2].clone();
        let twice_e1: Vec<f64> = ms.eigfuncs[0].iter().map(|v| 2.0 * v).collect();
        let spec3 = OperatorSpec::new(
            2.0,
            Reaction::Constant(10.0),
            vec![InputShape::Sampled(e3), InputShape::Sampled(twice_e1)],
            2.0,
            spec.grid,
        )
        .unwrap();
        let ms = project_inputs(&ms, &spec3).unwrap();
        assert!(ms.bmat[(0, 0)].abs() < 1e-10 && ms.bmat[(1, 0)].abs() < 1e-10);
        assert!((ms.bmat[(0, 1)] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn mismatched_input_grid() {
        let spec = paper_spec();
        let ms = numeric_spectrum(&spec, 2, 1001).unwrap();
        let other = OperatorSpec::new(
            2.0,
            Reaction::Constant(10.0),
            vec![InputShape::Sampled(vec![0.0; spec.grid.points])],
            2.0,
            spec.grid,
        )
        .unwrap();
        assert!(matches!(
            project_inputs(&ms, &other),
            Err(Error::IncompatibleGrid { .. })
        ));
    }

    #[test]
    fn select_n_decay_targets() {
        let ms = analytic_spectrum(&paper_spec(), 10).unwrap();
        assert_eq!(select_n(&ms, 0.0).unwrap().n, 2);
        let s = select_n(&ms, 2.0).unwrap();
        assert_eq!(s.n, 2);
        assert!(s.eta > 2.0 && s.eta < -s.eigvals[2]);
        assert!(matches!(select_n(&ms, 1e4), Err(Error::ExtendTruncation { .. })));
    }

    #[test]
    fn margin_falls_back_to_midpoint() {
        assert_eq!(tail_margin(-2.0, 1.9995), 0.5 * (1.9995 + 2.0));
        assert_eq!(tail_margin(-2.0, 0.0), 1.998);
    }

    #[test]
    fn serialized_form_round_trips() {
        let ms = modal_system(&paper_spec(), 4, 0.0).unwrap();
        let text = serde_json::to_string(&ms.to_file()).unwrap();
        let back: ModalSystemFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, ms.to_file());
    }
}
