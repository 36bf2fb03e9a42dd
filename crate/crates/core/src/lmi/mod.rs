//! Matrix-inequality certificates for the saturated closed loop
//! `ż = Az + B sat(Kz)`.
//!
//! Three formulations are supported:
//!
//! * the bilinear form in `(P, C, D)` with diagonal `D`, used for verification;
//! * its congruent linear form in `(S, E, Y) = (P⁻¹, D⁻¹, P⁻¹Cᵀ)`, solved for
//!   multi-input plants and for the dynamic (augmented) controller;
//! * the scalar-input form in `(P̃, C)` where `D` is eliminated and recovered
//!   afterwards as the least scaling making the sector block semidefinite.

pub mod barrier;
pub mod linalg;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use barrier::{AffineLmi, BarrierOptions, Objective};
pub use linalg::{cholesky, schur_psd, sym_eig, Mat, SymEig, SymMatrix};

use crate::{Error, Result};

/// Spectral norm `‖M‖₂`.
pub fn op_norm(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let g = SymMatrix::sym_part(&(m.transpose() * m));
    g.lambda_max().map(|v| v.max(0.0).sqrt()).unwrap_or(f64::NAN)
}

pub fn closed_loop(a: &Mat, b: &Mat, k: &Mat) -> Mat {
    a + b * k
}

fn lyapunov_term(acl: &Mat, p: &Mat) -> Mat {
    acl.transpose() * p + p * acl
}

/// `M₁(P, C, D) = [[A_clᵀP + PA_cl, PB − (DC)ᵀ], [·, −2D]]`.
pub fn m1_bilinear(p: &SymMatrix, c: &Mat, d: &[f64], a: &Mat, b: &Mat, k: &Mat) -> SymMatrix {
    let n = p.dim();
    let m = d.len();
    let pd = p.to_dense();
    let acl = closed_loop(a, b, k);
    let top = lyapunov_term(&acl, &pd);
    let dm = Mat::from_diagonal(&DVector::from_column_slice(d));
    let lower = b.transpose() * &pd - &dm * c;
    SymMatrix::from_fn(n + m, |i, j| match (i < n, j < n) {
        (true, true) => 0.5 * (top[(i, j)] + top[(j, i)]),
        (false, true) => lower[(i - n, j)],
        _ => -2.0 * dm[(i - n, j - n)],
    })
}

/// `M₂(P, C) = [[P, (K − C)ᵀ], [K − C, ℓ²I]]`.
pub fn m2_bilinear(p: &SymMatrix, c: &Mat, k: &Mat, level: f64) -> SymMatrix {
    let n = p.dim();
    let kc = k - c;
    SymMatrix::from_fn(n + kc.nrows(), |i, j| match (i < n, j < n) {
        (true, true) => p.get(i, j),
        (false, true) => kc[(i - n, j)],
        _ => {
            if i == j {
                level * level
            } else {
                0.0
            }
        }
    })
}

/// Scalar-input `M̃₁(P̃, C)`: the bilinear block with `D = 1`.
pub fn m1_scalar(pt: &SymMatrix, c: &Mat, a: &Mat, b: &Mat, k: &Mat) -> SymMatrix {
    m1_bilinear(pt, c, &[1.0], a, b, k)
}

/// Scalar-input `M̃₂(P̃, C, D) = [[D P̃, (K − C)ᵀ], [K − C, ℓ²]]`.
pub fn m2_scalar(pt: &SymMatrix, c: &Mat, k: &Mat, d: f64, level: f64) -> SymMatrix {
    m2_bilinear(&pt.scaled(d), c, k, level)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LmiForm {
    /// `(P, C, D)` with diagonal `D`.
    Bilinear,
    /// `(S, E, Y)`, linear in every unknown.
    Congruent,
    /// `(P̃, C)` for a single input with `D` recovered afterwards.
    Scalar,
    /// Augmented plant with controller states and projection inclusion.
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LmiObjective {
    /// Minimise `‖K − C‖²` (scalar form).
    SectorDistance,
    /// Maximise the ellipsoid volume through `log det S`.
    Volume,
    FeasibilityOnly,
}

/// Controller-state data of the augmented plant
/// `ż = Az + B sat(K₁z + K₂z_c)`, `ż_c = A₁z_c + A₂z`.
#[derive(Debug, Clone)]
pub struct DynamicData {
    pub a1: Mat,
    pub a2: Mat,
    pub k2: Mat,
    /// Ellipsoid `{zᵀPz ≤ 1}` that the z-projection must contain.
    pub reference: SymMatrix,
}

impl DynamicData {
    pub fn nc(&self) -> usize {
        self.a1.nrows()
    }
}

#[derive(Debug, Clone)]
pub struct LmiProblem {
    pub form: LmiForm,
    pub a: Mat,
    pub b: Mat,
    pub k: Mat,
    pub level: f64,
    pub margin: f64,
    pub objective: LmiObjective,
    /// Pin `C := K` (global certificate attempt).
    pub sector_equals_gain: bool,
    pub dynamic: Option<DynamicData>,
    pub barrier: BarrierOptions,
    /// Upper bound on `S` keeping volume maximisation bounded.
    pub s_cap: f64,
}

impl LmiProblem {
    pub fn new(form: LmiForm, a: Mat, b: Mat, k: Mat, level: f64) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() || b.nrows() != n || k.ncols() != n || k.nrows() != b.ncols() {
            return Err(Error::Dimension(format!(
                "A {}x{}, B {}x{}, K {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                k.nrows(),
                k.ncols()
            )));
        }
        if !(level > 0.0) {
            return Err(Error::InvalidInput(format!(
                "saturation level must be positive, got {level}"
            )));
        }
        if form == LmiForm::Scalar && b.ncols() != 1 {
            return Err(Error::Dimension("scalar form requires a single input".into()));
        }
        let margin = default_margin(&a, &b, &k);
        let objective = match form {
            LmiForm::Scalar => LmiObjective::SectorDistance,
            _ => LmiObjective::Volume,
        };
        Ok(Self {
            form,
            a,
            b,
            k,
            level,
            margin,
            objective,
            sector_equals_gain: false,
            dynamic: None,
            barrier: BarrierOptions::default(),
            s_cap: 1e6,
        })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn closed_loop(&self) -> Mat {
        closed_loop(&self.a, &self.b, &self.k)
    }
}

/// `ε = 1e-8·(1 + ‖A + BK‖)`. Larger margins visibly shrink the region when
/// the natural scale of `P̃` is small, as for slow closed-loop poles.
pub fn default_margin(a: &Mat, b: &Mat, k: &Mat) -> f64 {
    1e-8 * (1.0 + op_norm(&closed_loop(a, b, k)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockCheck {
    pub name: String,
    /// `strict-negative`, `strict-positive`, `semidefinite` or `inclusion`.
    pub kind: String,
    /// The eigenvalue deciding the check (λ_max for negative blocks, λ_min
    /// otherwise).
    pub eigenvalue: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct LmiSolution {
    pub form: LmiForm,
    /// `P̃` for the scalar form, `P` otherwise (`P̄` for the dynamic form).
    pub p: SymMatrix,
    /// `S = P⁻¹` when the congruent variables were solved for.
    pub s: Option<SymMatrix>,
    pub c: Mat,
    /// Diagonal of `D` (`[1]` placeholder for the scalar form before scaling).
    pub d: Vec<f64>,
    pub feasible: bool,
    pub residuals: Vec<BlockCheck>,
    pub objective_value: f64,
    pub newton_steps: usize,
    pub margin: f64,
}

fn sym_from_packed(x: &[f64], n: usize) -> SymMatrix {
    let mut s = SymMatrix::zeros(n);
    let mut idx = 0;
    for i in 0..n {
        for j in 0..=i {
            s.set(i, j, x[idx]);
            idx += 1;
        }
    }
    s
}

fn packed_from_sym(s: &SymMatrix) -> Vec<f64> {
    let n = s.dim();
    let mut v = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in 0..=i {
            v.push(s.get(i, j));
        }
    }
    v
}

fn shifted(m: &Mat, shift: f64) -> Mat {
    let mut out = m.clone();
    for i in 0..m.nrows() {
        out[(i, i)] += shift;
    }
    out
}

/// Feasibility of `M̃₁ < 0`, `P̃ ≻ 0` while minimising `‖K − C‖²`.
pub fn solve_prop6(prob: &LmiProblem) -> Result<LmiSolution> {
    if prob.m() != 1 {
        return Err(Error::Dimension("scalar certificate requires m = 1".into()));
    }
    let n = prob.n();
    let np = n * (n + 1) / 2;
    let eps = prob.margin;
    let (a, b, k) = (prob.a.clone(), prob.b.clone(), prob.k.clone());
    let pinned = prob.sector_equals_gain;
    let nvars = if pinned { np } else { np + n };
    let kk = k.clone();
    let unpack = move |x: &[f64]| -> (SymMatrix, Mat) {
        let p = sym_from_packed(&x[..np], n);
        let c = if pinned {
            kk.clone()
        } else {
            Mat::from_row_slice(1, n, &x[np..np + n])
        };
        (p, c)
    };
    let u1 = unpack.clone();
    let (a1, b1, k1) = (a.clone(), b.clone(), k.clone());
    let constraints = vec![
        AffineLmi::from_fn("M1~", nvars, move |x| {
            let (p, c) = u1(x);
            shifted(&(-m1_scalar(&p, &c, &a1, &b1, &k1).to_dense()), -eps)
        }),
        AffineLmi::from_fn("P~", nvars, move |x| {
            shifted(&sym_from_packed(&x[..np], n).to_dense(), -eps)
        }),
    ];
    let objective = if pinned || prob.objective == LmiObjective::FeasibilityOnly {
        Objective::Feasibility
    } else {
        let mut q = Mat::zeros(nvars, nvars);
        let mut lin = vec![0.0; nvars];
        for i in 0..n {
            q[(np + i, np + i)] = 2.0;
            lin[np + i] = -2.0 * k[(0, i)];
        }
        Objective::Quadratic {
            q,
            lin,
            constant: k.iter().map(|v| v * v).sum(),
        }
    };
    let mut x0 = packed_from_sym(&SymMatrix::identity(n));
    x0.resize(nvars, 0.0);
    let (start, phase1_steps) = barrier::find_feasible(&constraints, &x0, &prob.barrier)?;
    let result = barrier::minimize(&constraints, &objective, &start, &prob.barrier)?;
    let (pt, c) = unpack(&result.x);
    let m1 = m1_scalar(&pt, &c, &a, &b, &k);
    let lam_m1 = m1.lambda_max()?;
    let lam_p = pt.lambda_min()?;
    let slack = 1e-12 * (1.0 + m1.frobenius());
    let residuals = vec![
        BlockCheck {
            name: "M1~".into(),
            kind: "strict-negative".into(),
            eigenvalue: lam_m1,
            pass: lam_m1 <= -eps + slack,
        },
        BlockCheck {
            name: "P~".into(),
            kind: "strict-positive".into(),
            eigenvalue: lam_p,
            pass: lam_p >= eps - slack,
        },
    ];
    let feasible = residuals.iter().all(|r| r.pass);
    let objective_value = (&k - &c).iter().map(|v| v * v).sum();
    Ok(LmiSolution {
        form: LmiForm::Scalar,
        p: pt,
        s: None,
        c,
        d: vec![1.0],
        feasible,
        residuals,
        objective_value,
        newton_steps: phase1_steps + result.newton_steps,
        margin: eps,
    })
}

/// Least `D ≥ 0` making `[[D P̃, (K−C)ᵀ], [K−C, ℓ²I]] ⪰ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimalD {
    pub value: f64,
    /// `K = C`: the sector condition holds everywhere.
    pub global: bool,
}

/// Closed form `λ_max(L⁻¹(K−C)ᵀ(K−C)L⁻ᵀ)/ℓ²` with `P̃ = LLᵀ`.
pub fn minimal_d(pt: &SymMatrix, k: &Mat, c: &Mat, level: f64) -> Result<MinimalD> {
    if !(level > 0.0) {
        return Err(Error::InvalidInput("saturation level must be positive".into()));
    }
    let kc = k - c;
    if kc.iter().all(|v| *v == 0.0) {
        return Ok(MinimalD {
            value: 0.0,
            global: true,
        });
    }
    let l = cholesky(pt).map_err(|_| Error::Precondition("P~ must be positive definite".into()))?;
    let w = linalg::forward_sub(&l, &kc.transpose());
    let g = SymMatrix::sym_part(&(w.transpose() * &w));
    Ok(MinimalD {
        value: g.lambda_max()?.max(0.0) / (level * level),
        global: false,
    })
}

/// Bisection on `a ↦ λ_min(M̃₂(a))`, independent of the closed form. The
/// eigenvalues of the scaled block increase monotonically in `a`.
pub fn minimal_d_bisection(pt: &SymMatrix, k: &Mat, c: &Mat, level: f64) -> Result<f64> {
    let f = |a: f64| m2_scalar(pt, c, k, a, level).lambda_min();
    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi)? < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Numeric("bisection bracket diverged".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(hi)
}

struct CongruentLayout {
    n: usize,
    m: usize,
    np: usize,
    pinned: bool,
}

impl CongruentLayout {
    fn nvars(&self) -> usize {
        self.np + self.m + if self.pinned { 0 } else { self.n * self.m }
    }

    /// `(S, E, Y)`; `Y = S Kᵀ` when the sector matrix is pinned to the gain.
    fn unpack(&self, x: &[f64], k: &Mat) -> (SymMatrix, Vec<f64>, Mat) {
        let s = sym_from_packed(&x[..self.np], self.n);
        let e = x[self.np..self.np + self.m].to_vec();
        let y = if self.pinned {
            s.to_dense() * k.transpose()
        } else {
            Mat::from_row_slice(self.n, self.m, &x[self.np + self.m..])
        };
        (s, e, y)
    }
}

fn congruent_m1(s: &SymMatrix, e: &[f64], y: &Mat, acl: &Mat, b: &Mat) -> Mat {
    let n = s.dim();
    let m = e.len();
    let sd = s.to_dense();
    let top = &sd * acl.transpose() + acl * &sd;
    let em = Mat::from_diagonal(&DVector::from_column_slice(e));
    let off = b * &em - y; // n×m
    Mat::from_fn(n + m, n + m, |i, j| match (i < n, j < n) {
        (true, true) => top[(i, j)],
        (true, false) => off[(i, j - n)],
        (false, true) => off[(j, i - n)],
        (false, false) => -2.0 * em[(i - n, j - n)],
    })
}

fn congruent_m2(s: &SymMatrix, y: &Mat, k: &Mat, level: f64) -> Mat {
    let n = s.dim();
    let sd = s.to_dense();
    let off = &sd * k.transpose() - y; // n×m
    let m = off.ncols();
    Mat::from_fn(n + m, n + m, |i, j| match (i < n, j < n) {
        (true, true) => sd[(i, j)],
        (true, false) => off[(i, j - n)],
        (false, true) => off[(j, i - n)],
        (false, false) => {
            if i == j {
                level * level
            } else {
                0.0
            }
        }
    })
}

/// Linear reformulation in `(S, E, Y)`. Returns `(P, C, D)` mapped back with
/// `P = S⁻¹`, `D = E⁻¹`, `C = (S⁻¹Y)ᵀ` and re-verified against the bilinear
/// inequalities. For the dynamic form the plant matrices must already be the
/// augmented ones and `prob.dynamic` carries the inclusion reference.
///
/// The margin on the congruent block maps to `ε·λ_min(diag(P, D))²` on `M₁`,
/// so the solve is repeated with an enlarged margin when the mapped-back
/// certificate fails verification.
pub fn solve_prop5(prob: &LmiProblem) -> Result<LmiSolution> {
    let mut eps_s = prob.margin;
    let mut steps = 0;
    for _ in 0..4 {
        let mut sol = solve_congruent(prob, eps_s)?;
        steps += sol.newton_steps;
        sol.newton_steps = steps;
        if sol.feasible {
            return Ok(sol);
        }
        let mut scale = sol.p.lambda_min()?;
        for d in &sol.d {
            scale = scale.min(*d);
        }
        let wanted = (2.0 * prob.margin / (scale * scale)).min(1e3 * eps_s);
        if !(wanted > eps_s) {
            return Ok(sol);
        }
        eps_s = wanted;
    }
    solve_congruent(prob, eps_s)
}

fn solve_congruent(prob: &LmiProblem, eps: f64) -> Result<LmiSolution> {
    let n = prob.n();
    let m = prob.m();
    let layout = CongruentLayout {
        n,
        m,
        np: n * (n + 1) / 2,
        pinned: prob.sector_equals_gain,
    };
    let nvars = layout.nvars();
    let acl = prob.closed_loop();
    let level = prob.level;
    let cap = prob.s_cap;
    let semidef_relax = 1e-10;
    let layout = std::rc::Rc::new(layout);

    let mut constraints = Vec::new();
    {
        let (l, k, acl, b) = (layout.clone(), prob.k.clone(), acl.clone(), prob.b.clone());
        constraints.push(AffineLmi::from_fn("M1", nvars, move |x| {
            let (s, e, y) = l.unpack(x, &k);
            shifted(&(-congruent_m1(&s, &e, &y, &acl, &b)), -eps)
        }));
    }
    if !prob.sector_equals_gain {
        let (l, k) = (layout.clone(), prob.k.clone());
        constraints.push(AffineLmi::from_fn("M2", nvars, move |x| {
            let (s, _, y) = l.unpack(x, &k);
            shifted(&congruent_m2(&s, &y, &k, level), semidef_relax)
        }));
    }
    {
        let l = layout.clone();
        constraints.push(AffineLmi::from_fn("S", nvars, move |x| {
            shifted(&sym_from_packed(&x[..l.np], l.n).to_dense(), -eps)
        }));
        let l = layout.clone();
        constraints.push(AffineLmi::from_fn("S-cap", nvars, move |x| {
            shifted(&(-sym_from_packed(&x[..l.np], l.n).to_dense()), cap)
        }));
        let l = layout.clone();
        constraints.push(AffineLmi::from_fn("E", nvars, move |x| {
            let e = &x[l.np..l.np + l.m];
            shifted(&Mat::from_diagonal(&DVector::from_column_slice(e)), -eps)
        }));
        // keeps phase I bounded: otherwise E → ∞ with Y = BE is a recession direction
        let l = layout.clone();
        constraints.push(AffineLmi::from_fn("E-cap", nvars, move |x| {
            let e = &x[l.np..l.np + l.m];
            shifted(&(-Mat::from_diagonal(&DVector::from_column_slice(e))), cap)
        }));
    }
    if let Some(dynamic) = &prob.dynamic {
        let n_plant = dynamic.reference.dim();
        if n_plant + dynamic.nc() != n {
            return Err(Error::Dimension(format!(
                "reference ellipsoid has dimension {n_plant}, augmented plant {n} with {} controller states",
                dynamic.nc()
            )));
        }
        let r_inv = linalg::spd_inverse(&dynamic.reference)
            .map_err(|_| Error::Precondition("reference P must be positive definite".into()))?
            .to_dense();
        let l = layout.clone();
        let relax = semidef_relax * (1.0 + r_inv.norm());
        constraints.push(AffineLmi::from_fn("inclusion", nvars, move |x| {
            let mut s = sym_from_packed(&x[..l.np], l.n).to_dense();
            for i in 0..n_plant {
                for j in 0..n_plant {
                    s[(i, j)] -= r_inv[(i, j)];
                }
            }
            shifted(&s, relax)
        }));
    }

    let objective = match prob.objective {
        LmiObjective::FeasibilityOnly => Objective::Feasibility,
        _ if prob.sector_equals_gain => Objective::Feasibility,
        LmiObjective::Volume | LmiObjective::SectorDistance => {
            // projection of {Zᵀ S⁻¹ Z ≤ 1} onto the plant coordinates is
            // {zᵀ S₁₁⁻¹ z ≤ 1}
            let n_plant = prob.dynamic.as_ref().map_or(n, |d| d.reference.dim());
            let l = layout.clone();
            Objective::NegLogDet(AffineLmi::from_fn("volume", nvars, move |x| {
                let s = sym_from_packed(&x[..l.np], l.n).to_dense();
                s.view((0, 0), (n_plant, n_plant)).into_owned()
            }))
        }
    };

    let mut x0 = packed_from_sym(&SymMatrix::identity(n));
    x0.extend(std::iter::repeat_n(1.0, m));
    x0.resize(nvars, 0.0);
    let (start, phase1_steps) = barrier::find_feasible(&constraints, &x0, &prob.barrier)?;
    let result = barrier::minimize(&constraints, &objective, &start, &prob.barrier)?;
    let (s, e, y) = layout.unpack(&result.x, &prob.k);
    let mut p = linalg::spd_inverse(&s)?;
    let mut d: Vec<f64> = e.iter().map(|v| 1.0 / v).collect();
    let c = if prob.sector_equals_gain {
        prob.k.clone()
    } else {
        (p.to_dense() * &y).transpose()
    };
    if prob.dynamic.is_none() && !prob.sector_equals_gain {
        // absorb the semidefinite relaxation: (aP, C, aD) keeps M₁ ≺ 0
        let a = minimal_d(&p, &prob.k, &c, level)?.value;
        if a > 1.0 {
            p = p.scaled(a);
            d.iter_mut().for_each(|v| *v *= a);
        }
    }
    let report = if let Some(dynamic) = &prob.dynamic {
        verify_dynamic(
            &p,
            &c,
            &d,
            &prob.a,
            &prob.b,
            &prob.k,
            level,
            &dynamic.reference,
            &Tolerances::default(),
        )?
    } else if prob.sector_equals_gain {
        verify_global(&p, &d, &prob.a, &prob.b, &prob.k, &Tolerances::default())?
    } else {
        verify_bilinear(&p, &c, &d, &prob.a, &prob.b, &prob.k, level, &Tolerances::default())?
    };
    Ok(LmiSolution {
        form: if prob.dynamic.is_some() {
            LmiForm::Dynamic
        } else {
            LmiForm::Congruent
        },
        p,
        s: Some(s),
        c,
        d,
        feasible: report.pass,
        residuals: report.blocks,
        objective_value: result.objective,
        newton_steps: phase1_steps + result.newton_steps,
        margin: eps,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub strict: f64,
    pub psd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            strict: 1e-9,
            psd: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub form: LmiForm,
    pub blocks: Vec<BlockCheck>,
    pub pass: bool,
}

impl VerificationReport {
    fn new(form: LmiForm, blocks: Vec<BlockCheck>) -> Self {
        let pass = blocks.iter().all(|b| b.pass);
        Self { form, blocks, pass }
    }

    pub fn failing(&self) -> Vec<&str> {
        self.blocks
            .iter()
            .filter(|b| !b.pass)
            .map(|b| b.name.as_str())
            .collect()
    }

    pub fn block(&self, name: &str) -> Option<&BlockCheck> {
        self.blocks.iter().find(|b| b.name == name)
    }
}

fn strict_negative(name: &str, m: &SymMatrix, tol: &Tolerances) -> Result<BlockCheck> {
    let v = m.lambda_max()?;
    Ok(BlockCheck {
        name: name.into(),
        kind: "strict-negative".into(),
        eigenvalue: v,
        pass: v <= -tol.strict,
    })
}

fn strict_positive(name: &str, m: &SymMatrix, tol: &Tolerances) -> Result<BlockCheck> {
    let v = m.lambda_min()?;
    Ok(BlockCheck {
        name: name.into(),
        kind: "strict-positive".into(),
        eigenvalue: v,
        pass: v >= tol.strict,
    })
}

fn semidefinite(name: &str, m: &SymMatrix, tol: &Tolerances) -> Result<BlockCheck> {
    let v = m.lambda_min()?;
    Ok(BlockCheck {
        name: name.into(),
        kind: "semidefinite".into(),
        eigenvalue: v,
        pass: v >= -tol.psd,
    })
}

/// Scalar-input check: `M̃₁ < 0`, `P̃ ≻ 0`, `M̃₂(D) ⪰ 0`.
pub fn verify_scalar(
    pt: &SymMatrix,
    c: &Mat,
    d: f64,
    a: &Mat,
    b: &Mat,
    k: &Mat,
    level: f64,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    check_dims(pt.dim(), c, a, b, k)?;
    Ok(VerificationReport::new(
        LmiForm::Scalar,
        vec![
            strict_negative("M1~", &m1_scalar(pt, c, a, b, k), tol)?,
            strict_positive("P~", pt, tol)?,
            semidefinite("M2~", &m2_scalar(pt, c, k, d, level), tol)?,
        ],
    ))
}

/// Bilinear check: `M₁ < 0`, `M₂ ⪰ 0`, `P ≻ 0`, `D ≻ 0` diagonal.
pub fn verify_bilinear(
    p: &SymMatrix,
    c: &Mat,
    d: &[f64],
    a: &Mat,
    b: &Mat,
    k: &Mat,
    level: f64,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    check_dims(p.dim(), c, a, b, k)?;
    if d.len() != b.ncols() {
        return Err(Error::Dimension(format!(
            "D has {} entries, expected {}",
            d.len(),
            b.ncols()
        )));
    }
    Ok(VerificationReport::new(
        LmiForm::Bilinear,
        vec![
            strict_negative("M1", &m1_bilinear(p, c, d, a, b, k), tol)?,
            strict_positive("P", p, tol)?,
            strict_positive("D", &SymMatrix::from_diagonal(d), tol)?,
            semidefinite("M2", &m2_bilinear(p, c, k, level), tol)?,
        ],
    ))
}

/// Global check with `C = K`: only `M₁` and positivity matter.
pub fn verify_global(
    p: &SymMatrix,
    d: &[f64],
    a: &Mat,
    b: &Mat,
    k: &Mat,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    Ok(VerificationReport::new(
        LmiForm::Bilinear,
        vec![
            strict_negative("M1", &m1_bilinear(p, k, d, a, b, k), tol)?,
            strict_positive("P", p, tol)?,
            strict_positive("D", &SymMatrix::from_diagonal(d), tol)?,
        ],
    ))
}

/// Bilinear check on the augmented plant plus the projection inclusion
/// `[I 0] P̄ [I; 0] − P ⪯ 0`.
#[allow(clippy::too_many_arguments)]
pub fn verify_dynamic(
    pbar: &SymMatrix,
    cbar: &Mat,
    d: &[f64],
    abar: &Mat,
    bbar: &Mat,
    kbar: &Mat,
    level: f64,
    reference: &SymMatrix,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let mut report = verify_bilinear(pbar, cbar, d, abar, bbar, kbar, level, tol)?;
    let n = reference.dim();
    if n > pbar.dim() {
        return Err(Error::Dimension("reference larger than augmented state".into()));
    }
    let top = SymMatrix::from_fn(n, |i, j| pbar.get(i, j) - reference.get(i, j));
    let v = top.lambda_max()?;
    report.blocks.push(BlockCheck {
        name: "inclusion".into(),
        kind: "inclusion".into(),
        eigenvalue: v,
        pass: v <= tol.psd,
    });
    report.form = LmiForm::Dynamic;
    report.pass = report.blocks.iter().all(|b| b.pass);
    Ok(report)
}

fn check_dims(n: usize, c: &Mat, a: &Mat, b: &Mat, k: &Mat) -> Result<()> {
    if a.nrows() != n || a.ncols() != n || b.nrows() != n || k.ncols() != n || c.ncols() != n || c.nrows() != k.nrows()
    {
        return Err(Error::Dimension(format!(
            "P {n}x{n}, A {}x{}, B {}x{}, K {}x{}, C {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols(),
            k.nrows(),
            k.ncols(),
            c.nrows(),
            c.ncols()
        )));
    }
    Ok(())
}
