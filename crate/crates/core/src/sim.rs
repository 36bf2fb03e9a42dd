//! Closed-loop simulation: finite-dimensional modal ODE, truncated Galerkin
//! cascade, pointwise-saturated cascade and boundary-controlled cascade.
//!
//! Every model has the same structure: a finite block `z` driven only by
//! itself, and a diagonal tail `ẏ = Λy + h(z)` that never feeds back. The
//! `z` block uses classic RK4; the tail uses Lawson RK4 (exact exponential of
//! `Λ`), so arbitrarily stiff tail modes are fine at a fixed step.

use std::fmt::Write as _;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::PlantFD;
use crate::grid::sup_norm;
use crate::io::fmt_f64;
use crate::lmi::{Mat, SymMatrix};
use crate::roa::{half_widths, BoundaryPlant, Certificate};
use crate::saturation::sat_scalar;
use crate::spectral::ModalSystem;
use crate::{Error, Result};

/// Substeps used on a step where some input crosses a saturation threshold.
pub const CROSSING_SUBSTEPS: usize = 10;
/// `|state| > OVERFLOW` stops the integration.
pub const OVERFLOW: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub t_end: f64,
    pub dt: f64,
}

impl SimOptions {
    /// `dt` defaults to `t_end / 1000`.
    pub fn new(t_end: f64, dt: Option<f64>) -> Result<Self> {
        let dt = dt.unwrap_or(t_end / 1000.0);
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
        }
        if !(t_end >= dt) || !t_end.is_finite() {
            return Err(Error::InvalidInput(format!(
                "horizon {t_end} shorter than the step {dt}"
            )));
        }
        Ok(Self { t_end, dt })
    }

    /// Number of steps; the step is shrunk so they tile the horizon exactly.
    pub fn steps(&self) -> usize {
        ((self.t_end / self.dt).round() as usize).max(1)
    }

    pub fn step(&self) -> f64 {
        self.t_end / self.steps() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Converged,
    Diverged,
    Undecided,
}

impl Classification {
    pub fn label(self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::Diverged => "diverged",
            Self::Undecided => "undecided",
        }
    }
}

/// Exponential envelope `‖w(t)‖ ≤ M e^{−at} ‖w(0)‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub m: f64,
    pub a: f64,
}

/// `V(w) = zᵀPz + γ Σ_{j>n} w_j²`, with `z` the first `P.dim()` entries.
#[derive(Debug, Clone)]
pub struct LyapunovWeights {
    pub p: SymMatrix,
    pub gamma: f64,
}

impl LyapunovWeights {
    pub fn from_certificate(cert: &Certificate) -> Self {
        Self {
            p: cert.p.clone(),
            gamma: cert.gamma.unwrap_or(1.0),
        }
    }

    pub fn value(&self, state: &[f64]) -> f64 {
        lyapunov_v(state, &self.p, self.gamma)
    }
}

pub fn lyapunov_v(state: &[f64], p: &SymMatrix, gamma: f64) -> f64 {
    let n = p.dim();
    p.quad_form(&state[..n]) + gamma * state[n..].iter().map(|v| v * v).sum::<f64>()
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `z` followed by the tail modes.
    pub states: Vec<Vec<f64>>,
    /// Length of the `z` block.
    pub n: usize,
    /// Empty when no Lyapunov weights were attached.
    pub lyapunov: Vec<f64>,
    pub classification: Classification,
    /// Steps that were refined because of a saturation crossing.
    pub refined_steps: Vec<usize>,
    pub decay_fit: Option<DecayFit>,
}

impl Trajectory {
    pub fn z(&self, i: usize) -> &[f64] {
        &self.states[i][..self.n]
    }

    pub fn tail(&self, i: usize) -> &[f64] {
        &self.states[i][self.n..]
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least one sample")
    }

    pub fn z_norms(&self) -> Vec<f64> {
        (0..self.times.len()).map(|i| norm(self.z(i))).collect()
    }

    /// Largest `(V_{i+1} − V_i)/dt` over the recorded steps.
    pub fn max_lyapunov_rate(&self) -> Option<f64> {
        if self.lyapunov.len() < 2 {
            return None;
        }
        Some(
            self.lyapunov
                .windows(2)
                .zip(self.times.windows(2))
                .map(|(v, t)| (v[1] - v[0]) / (t[1] - t[0]))
                .fold(f64::NEG_INFINITY, f64::max),
        )
    }

    /// CSV with header `t,w1,...,wN,V`.
    pub fn to_csv(&self) -> String {
        let width = self.states.first().map_or(0, Vec::len);
        let mut out = String::from("t");
        for j in 1..=width {
            let _ = write!(out, ",w{j}");
        }
        out.push_str(",V\n");
        for (i, t) in self.times.iter().enumerate() {
            out.push_str(&fmt_f64(*t));
            for v in &self.states[i] {
                out.push(',');
                out.push_str(&fmt_f64(*v));
            }
            out.push(',');
            out.push_str(&fmt_f64(self.lyapunov.get(i).copied().unwrap_or(f64::NAN)));
            out.push('\n');
        }
        out
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Right-hand side of a cascade: `ż = f(z)` and the tail forcing `h(z)`.
trait Cascade: Sync {
    fn n(&self) -> usize;
    fn tail_eigs(&self) -> &[f64];
    fn eval(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>);
    /// Saturation regime of every input; a change across a step marks a crossing.
    fn regime(&self, z: &[f64]) -> Vec<i8>;
}

/// Signed count of thresholds exceeded by `u`.
fn regime_of(u: f64, thresholds: &[f64]) -> i8 {
    let c = thresholds.iter().filter(|t| u.abs() > **t).count() as i8;
    if u < 0.0 {
        -c
    } else {
        c
    }
}

fn gain_times(k: &Mat, z: &[f64]) -> DVector<f64> {
    k * DVector::from_column_slice(z)
}

fn linear_sat(a: &Mat, k: &Mat, level: f64, z: &[f64]) -> (DVector<f64>, DVector<f64>) {
    let zv = DVector::from_column_slice(z);
    let u = (k * &zv).map(|v| sat_scalar(v, level));
    (a * zv, u)
}

/// Modal ODE and Galerkin cascade with component-wise saturation.
struct SatCascade<'a> {
    a: &'a Mat,
    b: &'a Mat,
    k: &'a Mat,
    level: f64,
    tail_eigs: Vec<f64>,
    b_tail: Mat,
}

impl Cascade for SatCascade<'_> {
    fn n(&self) -> usize {
        self.a.nrows()
    }

    fn tail_eigs(&self) -> &[f64] {
        &self.tail_eigs
    }

    fn eval(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (az, u) = linear_sat(self.a, self.k, self.level, z);
        let dz = az + self.b * &u;
        let h = if self.tail_eigs.is_empty() {
            Vec::new()
        } else {
            (&self.b_tail * &u).as_slice().to_vec()
        };
        (dz.as_slice().to_vec(), h)
    }

    fn regime(&self, z: &[f64]) -> Vec<i8> {
        gain_times(self.k, z)
            .iter()
            .map(|u| regime_of(*u, &[self.level]))
            .collect()
    }
}

/// Galerkin cascade with pointwise saturation of every input field.
struct PointwiseCascade<'a> {
    a: Mat,
    k: &'a Mat,
    level: f64,
    bmat: Mat,
    tail_eigs: Vec<f64>,
    shapes: &'a [Vec<f64>],
    /// `W[j][x] = e_j(x)·(quadrature weight)`.
    weights: Vec<Vec<f64>>,
    thresholds: Vec<[f64; 2]>,
}

impl Cascade for PointwiseCascade<'_> {
    fn n(&self) -> usize {
        self.a.nrows()
    }

    fn tail_eigs(&self) -> &[f64] {
        &self.tail_eigs
    }

    fn eval(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n();
        let u = gain_times(self.k, z);
        let mut forcing = &self.bmat * &u;
        for (k, shape) in self.shapes.iter().enumerate() {
            let uk = u[k];
            for (x, bx) in shape.iter().enumerate() {
                let v = bx * uk;
                let excess = sat_scalar(v, self.level) - v;
                if excess != 0.0 {
                    for (j, w) in self.weights.iter().enumerate() {
                        forcing[j] += w[x] * excess;
                    }
                }
            }
        }
        let mut dz = &self.a * DVector::from_column_slice(z);
        for j in 0..n {
            dz[j] += forcing[j];
        }
        (dz.as_slice().to_vec(), forcing.as_slice()[n..].to_vec())
    }

    fn regime(&self, z: &[f64]) -> Vec<i8> {
        gain_times(self.k, z)
            .iter()
            .zip(&self.thresholds)
            .map(|(u, t)| regime_of(*u, t))
            .collect()
    }
}

/// Boundary-controlled cascade in the transformed variables.
struct BoundaryCascade<'a> {
    bp: &'a BoundaryPlant,
    k: &'a Mat,
    level: f64,
    tail_eigs: Vec<f64>,
    order: usize,
}

impl Cascade for BoundaryCascade<'_> {
    fn n(&self) -> usize {
        self.bp.a.nrows()
    }

    fn tail_eigs(&self) -> &[f64] {
        &self.tail_eigs
    }

    fn eval(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (az, u) = linear_sat(&self.bp.a, self.k, self.level, z);
        let dz = az + &self.bp.b * &u;
        let nd = self.bp.nd();
        let h = (self.bp.n..self.order)
            .map(|j| {
                let mut v = self.bp.b_modal[(j, 0)] * u[0];
                for k in 0..nd {
                    v += self.bp.d_modal[(j, k)] * z[k];
                }
                v
            })
            .collect();
        (dz.as_slice().to_vec(), h)
    }

    fn regime(&self, z: &[f64]) -> Vec<i8> {
        gain_times(self.k, z)
            .iter()
            .map(|u| regime_of(*u, &[self.level]))
            .collect()
    }
}

struct Exps {
    full: Vec<f64>,
    half: Vec<f64>,
}

impl Exps {
    fn new(eigs: &[f64], h: f64) -> Self {
        Self {
            full: eigs.iter().map(|l| (l * h).exp()).collect(),
            half: eigs.iter().map(|l| (l * h / 2.0).exp()).collect(),
        }
    }
}

fn axpy(z: &[f64], s: f64, k: &[f64]) -> Vec<f64> {
    z.iter().zip(k).map(|(a, b)| a + s * b).collect()
}

fn rk4_step<C: Cascade + ?Sized>(sys: &C, z: &[f64], y: &[f64], h: f64, e: &Exps) -> (Vec<f64>, Vec<f64>) {
    let (k1, h1) = sys.eval(z);
    let (k2, h2) = sys.eval(&axpy(z, h / 2.0, &k1));
    let (k3, h3) = sys.eval(&axpy(z, h / 2.0, &k2));
    let (k4, h4) = sys.eval(&axpy(z, h, &k3));
    let z_new = (0..z.len())
        .map(|i| z[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    let y_new = (0..y.len())
        .map(|j| e.full[j] * y[j] + h / 6.0 * (e.full[j] * h1[j] + 2.0 * e.half[j] * (h2[j] + h3[j]) + h4[j]))
        .collect();
    (z_new, y_new)
}

fn integrate<C: Cascade + ?Sized>(
    sys: &C,
    state0: &[f64],
    opts: &SimOptions,
    weights: Option<&LyapunovWeights>,
) -> Result<Trajectory> {
    let n = sys.n();
    let ntail = sys.tail_eigs().len();
    if state0.len() != n + ntail {
        return Err(Error::Dimension(format!(
            "initial state has {} entries, the model has {}",
            state0.len(),
            n + ntail
        )));
    }
    if state0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("initial state must be finite".into()));
    }
    if let Some(w) = weights {
        if w.p.dim() != n {
            return Err(Error::Dimension(format!(
                "Lyapunov matrix is {}x{0}, the state block has {n} entries",
                w.p.dim()
            )));
        }
    }
    let steps = opts.steps();
    let h = opts.step();
    let coarse = Exps::new(sys.tail_eigs(), h);
    let fine = Exps::new(sys.tail_eigs(), h / CROSSING_SUBSTEPS as f64);
    let z0_norm = norm(&state0[..n]);
    let blowup = 100.0 * (1.0 + z0_norm);

    let mut z = state0[..n].to_vec();
    let mut y = state0[n..].to_vec();
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut lyapunov = Vec::new();
    let mut refined = Vec::new();
    let record =
        |t: f64, z: &[f64], y: &[f64], times: &mut Vec<f64>, states: &mut Vec<Vec<f64>>, lyap: &mut Vec<f64>| {
            let mut s = z.to_vec();
            s.extend_from_slice(y);
            if let Some(w) = weights {
                lyap.push(w.value(&s));
            }
            times.push(t);
            states.push(s);
        };
    record(0.0, &z, &y, &mut times, &mut states, &mut lyapunov);

    let mut diverged = false;
    for i in 0..steps {
        let before = sys.regime(&z);
        let (mut zn, mut yn) = rk4_step(sys, &z, &y, h, &coarse);
        if sys.regime(&zn) != before {
            refined.push(i);
            let hs = h / CROSSING_SUBSTEPS as f64;
            zn = z.clone();
            yn = y.clone();
            for _ in 0..CROSSING_SUBSTEPS {
                (zn, yn) = rk4_step(sys, &zn, &yn, hs, &fine);
            }
        }
        z = zn;
        y = yn;
        let t = if i + 1 == steps { opts.t_end } else { (i + 1) as f64 * h };
        let zn = norm(&z);
        let bad = !zn.is_finite() || zn > OVERFLOW || y.iter().any(|v| !v.is_finite());
        if !bad {
            record(t, &z, &y, &mut times, &mut states, &mut lyapunov);
        }
        if bad || zn > blowup {
            diverged = true;
            break;
        }
    }
    let classification = if diverged {
        Classification::Diverged
    } else if norm(&z) < 1e-6 * z0_norm.max(1.0) {
        Classification::Converged
    } else {
        Classification::Undecided
    };
    let mut traj = Trajectory {
        times,
        states,
        n,
        lyapunov,
        classification,
        refined_steps: refined,
        decay_fit: None,
    };
    if classification == Classification::Converged {
        traj.decay_fit = decay_fit(&traj).ok();
    }
    Ok(traj)
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0) {
        return Err(Error::InvalidInput(format!(
            "saturation level must be positive, got {level}"
        )));
    }
    Ok(())
}

/// `ż = Az + B sat(Kz)`.
pub fn simulate_modal(
    plant: &PlantFD,
    level: f64,
    z0: &[f64],
    opts: &SimOptions,
    weights: Option<&LyapunovWeights>,
) -> Result<Trajectory> {
    check_level(level)?;
    let k = plant.gain()?;
    let sys = SatCascade {
        a: &plant.a,
        b: &plant.b,
        k,
        level,
        tail_eigs: Vec::new(),
        b_tail: Mat::zeros(0, plant.m()),
    };
    integrate(&sys, z0, opts, weights)
}

/// Finite-dimensional plant `(diag(λ_1..λ_n), 𝐁)` of a modal system.
pub fn modal_plant(ms: &ModalSystem) -> Result<PlantFD> {
    PlantFD::new(ms.amat(), ms.bmat_unstable())
}

fn check_order(ms: &ModalSystem, len: usize, offset: usize) -> Result<usize> {
    let order = len
        .checked_sub(offset)
        .ok_or_else(|| Error::Dimension("initial state too short".into()))?;
    if order < ms.n || order > ms.order() {
        return Err(Error::Dimension(format!(
            "Galerkin order {order} must lie between n = {} and N = {}",
            ms.n,
            ms.order()
        )));
    }
    Ok(order)
}

/// Truncated cascade with `N = state0.len()` modes:
/// `ẇ_j = λ_j w_j + 𝐛_j sat(Kz)`.
pub fn simulate_galerkin(
    ms: &ModalSystem,
    k: &Mat,
    level: f64,
    state0: &[f64],
    opts: &SimOptions,
    weights: Option<&LyapunovWeights>,
) -> Result<Trajectory> {
    check_level(level)?;
    let order = check_order(ms, state0.len(), 0)?;
    let a = ms.amat();
    let b = ms.bmat_unstable();
    check_gain(k, b.ncols(), ms.n)?;
    let sys = SatCascade {
        a: &a,
        b: &b,
        k,
        level,
        tail_eigs: ms.eigvals[ms.n..order].to_vec(),
        b_tail: ms.bmat.rows(ms.n, order - ms.n).into_owned(),
    };
    integrate(&sys, state0, opts, weights)
}

fn check_gain(k: &Mat, m: usize, n: usize) -> Result<()> {
    if k.shape() != (m, n) {
        return Err(Error::Dimension(format!(
            "gain is {}x{}, expected {m}x{n}",
            k.nrows(),
            k.ncols()
        )));
    }
    Ok(())
}

/// Truncated cascade where every input field `b_k(x)(Kz)_k` is saturated
/// pointwise before projection onto the eigenfunctions.
pub fn simulate_pointwise(
    ms: &ModalSystem,
    k: &Mat,
    level: f64,
    state0: &[f64],
    opts: &SimOptions,
    weights: Option<&LyapunovWeights>,
) -> Result<Trajectory> {
    check_level(level)?;
    let order = check_order(ms, state0.len(), 0)?;
    check_gain(k, ms.m(), ms.n)?;
    for s in &ms.input_samples {
        ms.grid.check(s)?;
    }
    let w = ms.grid.simpson_weights();
    let weights_q: Vec<Vec<f64>> = ms.eigfuncs[..order]
        .iter()
        .map(|e| e.iter().zip(&w).map(|(a, b)| a * b).collect())
        .collect();
    let thresholds = ms
        .input_samples
        .iter()
        .map(|s| {
            let sup = sup_norm(s);
            [level, if sup > 0.0 { level / sup } else { f64::INFINITY }]
        })
        .collect();
    let sys = PointwiseCascade {
        a: ms.amat(),
        k,
        level,
        bmat: ms.bmat.rows(0, order).into_owned(),
        tail_eigs: ms.eigvals[ms.n..order].to_vec(),
        shapes: &ms.input_samples,
        weights: weights_q,
        thresholds,
    };
    integrate(&sys, state0, opts, weights)
}

/// Boundary-controlled cascade; the state is `(x_d, w_1, …, w_N)`.
pub fn simulate_boundary(
    bp: &BoundaryPlant,
    k: &Mat,
    level: f64,
    state0: &[f64],
    opts: &SimOptions,
    weights: Option<&LyapunovWeights>,
) -> Result<Trajectory> {
    check_level(level)?;
    let order = check_order(&bp.modal, state0.len(), bp.nd())?;
    if order < bp.n {
        return Err(Error::Dimension("Galerkin order below the retained modes".into()));
    }
    check_gain(k, 1, bp.a.nrows())?;
    let sys = BoundaryCascade {
        bp,
        k,
        level,
        tail_eigs: bp.modal.eigvals[bp.n..order].to_vec(),
        order,
    };
    integrate(&sys, state0, opts, weights)
}

/// `w(x) = Σ_j w_j e_j(x)` on the eigenfunction grid.
pub fn reconstruct(ms: &ModalSystem, modes: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; ms.grid.points];
    for (c, e) in modes.iter().zip(&ms.eigfuncs) {
        for (o, v) in out.iter_mut().zip(e) {
            *o += c * v;
        }
    }
    out
}

/// `y = w + (x/L) C_d x_d` for a boundary state `(x_d, w_1, …)`.
pub fn reconstruct_boundary(bp: &BoundaryPlant, state: &[f64]) -> Vec<f64> {
    let nd = bp.nd();
    let mut y = reconstruct(&bp.modal, &state[nd..]);
    let cx: f64 = (0..nd).map(|k| bp.c_d[(0, k)] * state[k]).sum();
    let l = bp.modal.grid.length;
    for (i, v) in y.iter_mut().enumerate() {
        *v += bp.modal.grid.x(i) / l * cx;
    }
    y
}

/// CSV `t,x,w` of the reconstructed field at every `stride`-th sample.
pub fn field_csv(ms: &ModalSystem, traj: &Trajectory, offset: usize, stride: usize) -> String {
    let mut out = String::from("t,x,w\n");
    let xs = ms.grid.nodes();
    for i in (0..traj.times.len()).step_by(stride.max(1)) {
        let w = reconstruct(ms, &traj.states[i][offset..]);
        for (x, v) in xs.iter().zip(&w) {
            let _ = writeln!(out, "{},{},{}", fmt_f64(traj.times[i]), fmt_f64(*x), fmt_f64(*v));
        }
    }
    out
}

/// Envelope of the full state; see [`decay_fit_range`].
pub fn decay_fit(traj: &Trajectory) -> Result<DecayFit> {
    let width = traj.states.first().map_or(0, Vec::len);
    decay_fit_range(traj, 0..width)
}

/// Least-squares slope of `log‖w(t)‖` over the final 80 % of the horizon
/// gives `a`; `M` is the smallest constant making `M e^{−at}‖w(0)‖` an
/// envelope at every sample.
pub fn decay_fit_range(traj: &Trajectory, range: std::ops::Range<usize>) -> Result<DecayFit> {
    if traj.classification != Classification::Converged {
        return Err(Error::Precondition("decay fit needs a converged trajectory".into()));
    }
    if traj.times.len() < 10 {
        return Err(Error::Precondition(format!(
            "decay fit needs at least 10 samples, got {}",
            traj.times.len()
        )));
    }
    let norms: Vec<f64> = traj.states.iter().map(|s| norm(&s[range.clone()])).collect();
    let w0 = norms[0];
    if !(w0 > 0.0) {
        return Err(Error::Precondition("decay fit needs a nonzero initial state".into()));
    }
    let t_end = *traj.times.last().unwrap();
    let start = 0.2 * t_end;
    let pts: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&norms)
        .filter(|(t, v)| **t >= start && **v > f64::MIN_POSITIVE)
        .map(|(t, v)| (*t, v.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Precondition("too few nonzero samples for the decay fit".into()));
    }
    let k = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let a = -sxy / sxx;
    let m = traj
        .times
        .iter()
        .zip(&norms)
        .map(|(t, v)| v * (a * t).exp() / w0)
        .fold(0.0, f64::max);
    Ok(DecayFit { m, a })
}

/// Explicit bound on a tail mode from an envelope of the `z` block:
/// `e^{−ηt}|w_j(0)| + |𝐛_j|·M‖K‖/(η − a)·(e^{−at} − e^{−ηt})·|z(0)|`.
pub fn tail_bound(t: f64, wj0: f64, bj: f64, k_norm: f64, fit: DecayFit, eta: f64, z0: f64) -> f64 {
    let forced = if (eta - fit.a).abs() < 1e-12 {
        t * (-eta * t).exp()
    } else {
        ((-fit.a * t).exp() - (-eta * t).exp()) / (eta - fit.a)
    };
    (-eta * t).exp() * wj0.abs() + bj.abs() * fit.m * k_norm * forced * z0
}

/// Rectangle of initial conditions in the `(z_1, z_2)` plane; other
/// coordinates start at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    pub sim: SimOptions,
    /// Samples kept per trajectory for plotting.
    pub polyline_points: usize,
}

impl SweepSpec {
    /// Grid over `±1.5` times the bounding box of the certified ellipsoid.
    pub fn around(cert: &Certificate, nx: usize, ny: usize, sim: SimOptions) -> Result<Self> {
        if cert.plant_dim() < 2 {
            return Err(Error::Dimension("sweeps need at least two plant states".into()));
        }
        let (hx, hy) = if cert.is_global() {
            (1.0, 1.0)
        } else {
            let hw = half_widths(&cert.projection()?, cert.level)?;
            (1.5 * hw[0], 1.5 * hw[1])
        };
        Ok(Self {
            x: (-hx, hx),
            y: (-hy, hy),
            nx,
            ny,
            sim,
            polyline_points: 50,
        })
    }

    fn axis(lo: f64, hi: f64, k: usize, i: usize) -> f64 {
        if k == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (k - 1) as f64
        }
    }

    /// Initial conditions in row-major order (`z_2` outer, `z_1` inner).
    pub fn points(&self) -> Vec<(f64, f64)> {
        (0..self.ny)
            .flat_map(|j| (0..self.nx).map(move |i| (i, j)))
            .map(|(i, j)| {
                (
                    Self::axis(self.x.0, self.x.1, self.nx, i),
                    Self::axis(self.y.0, self.y.1, self.ny, j),
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub z0: (f64, f64),
    pub label: Classification,
    pub inside: bool,
    pub path: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub points: Vec<SweepPoint>,
    /// Slice `{(z_1, z_2) : [z_1 z_2] P₂ [z_1 z_2]ᵀ ≤ level}` of the certificate.
    pub overlay: Option<(SymMatrix, f64)>,
    /// Indices of certified initial conditions that diverged.
    pub violations: Vec<usize>,
}

impl SweepResult {
    pub fn sound(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, label: Classification) -> usize {
        self.points.iter().filter(|p| p.label == label).count()
    }

    /// CSV with header `z1,z2,label`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("z1,z2,label\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{}", fmt_f64(p.z0.0), fmt_f64(p.z0.1), p.label.label());
        }
        out
    }
}

/// Classifies every grid initial condition of the modal ODE in parallel;
/// results come back in grid order.
pub fn sweep(plant: &PlantFD, level: f64, cert: &Certificate, spec: &SweepSpec) -> Result<SweepResult> {
    let n = plant.n();
    if n < 2 {
        return Err(Error::Dimension("sweeps need at least two states".into()));
    }
    if cert.n() != n {
        return Err(Error::Dimension(format!(
            "certificate has {} states, plant has {n}",
            cert.n()
        )));
    }
    plant.gain()?;
    let starts = spec.points();
    let points: Vec<SweepPoint> = starts
        .par_iter()
        .map(|&(a, b)| -> Result<SweepPoint> {
            let mut z0 = vec![0.0; n];
            z0[0] = a;
            z0[1] = b;
            let traj = simulate_modal(plant, level, &z0, &spec.sim, None)?;
            let stride = (traj.times.len() / spec.polyline_points.max(2)).max(1);
            let mut path: Vec<(f64, f64)> = traj.states.iter().step_by(stride).map(|s| (s[0], s[1])).collect();
            let last = traj.final_state();
            if path.last() != Some(&(last[0], last[1])) {
                path.push((last[0], last[1]));
            }
            Ok(SweepPoint {
                z0: (a, b),
                label: traj.classification,
                inside: cert.contains(&z0),
                path,
            })
        })
        .collect::<Result<_>>()?;
    let violations = points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.inside && p.label == Classification::Diverged)
        .map(|(i, _)| i)
        .collect();
    let overlay = (!cert.is_global()).then(|| (SymMatrix::from_fn(2, |i, j| cert.p.get(i, j)), cert.level));
    Ok(SweepResult {
        spec: spec.clone(),
        points,
        overlay,
        violations,
    })
}
