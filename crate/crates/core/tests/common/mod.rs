//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rdsat::design::{place_poles, PlantFD};
use rdsat::grid::Grid;
use rdsat::lmi::{Mat, SymMatrix};
use rdsat::roa::{certify_static, ellipsoid_boundary_samples, with_tail_weight, Certificate, CertifyOptions};
use rdsat::sim::modal_plant;
use rdsat::spectral::{analytic_spectrum, project_inputs, select_n, InputShape, ModalSystem, OperatorSpec, Reaction};

pub const LEVEL: f64 = 2.0;
pub const FAST: [f64; 2] = [-1.0, -1.0];
pub const SLOW: [f64; 2] = [-0.1, -0.2];

/// Published seven-digit values.
pub const A_DIAG: [f64; 2] = [7.5325989, 0.1303956];
pub const K_FAST: [f64; 2] = [-9.835618, 0.1726235];
pub const K_SLOW: [f64; 2] = [-7.9732782, 0.0102837];

pub struct Triple {
    pub pt: [[f64; 2]; 2],
    pub c: [f64; 2],
    pub d: f64,
    pub k: [f64; 2],
}

pub const TRIPLE_FAST: Triple = Triple {
    pt: [[2.1277468, -0.0655569], [-0.0655569, 0.0243008]],
    c: [-2.0635579, 0.0844904],
    d: 7.359375,
    k: K_FAST,
};

pub const TRIPLE_SLOW: Triple = Triple {
    pt: [[0.3108695, -0.0054849], [-0.0054849, 0.000195]],
    c: [-0.3053879, 0.0054754],
    d: 90.625,
    k: K_SLOW,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn spec(c: f64, length: f64, inputs: Vec<InputShape>) -> OperatorSpec {
    let grid = Grid::new(length, 2001).unwrap();
    OperatorSpec::new(length, Reaction::Constant(c), inputs, LEVEL, grid).unwrap()
}

pub fn modal(inputs: Vec<InputShape>, order: usize) -> ModalSystem {
    let s = spec(10.0, 2.0, inputs);
    let ms = analytic_spectrum(&s, order).unwrap();
    select_n(&project_inputs(&ms, &s).unwrap(), 0.0).unwrap()
}

pub fn paper_inputs() -> Vec<InputShape> {
    vec![InputShape::Modes(vec![(1, 1.0), (2, 1.0)])]
}

pub fn real_poles(p: &[f64]) -> Vec<Complex<f64>> {
    p.iter().map(|x| Complex::new(*x, 0.0)).collect()
}

pub fn closed_loop(ms: &ModalSystem, poles: &[f64]) -> PlantFD {
    let plant = modal_plant(ms).unwrap();
    let k = place_poles(&plant, &real_poles(poles)).unwrap();
    plant.with_gain(k).unwrap()
}

pub fn certificate(ms: &ModalSystem, plant: &PlantFD) -> Certificate {
    with_tail_weight(certify_static(plant, LEVEL, &CertifyOptions::default()).unwrap(), ms)
}

pub fn sym2(m: [[f64; 2]; 2]) -> SymMatrix {
    SymMatrix::from_rows(&[m[0].to_vec(), m[1].to_vec()]).unwrap()
}

pub fn row(v: [f64; 2]) -> Mat {
    Mat::from_row_slice(1, 2, &v)
}

/// Points strictly inside `{zᵀPz ≤ ρ}`: boundary directions pulled in by a
/// random factor in `[lo, hi]`.
pub fn interior_points(p: &SymMatrix, rho: f64, count: usize, lo: f64, hi: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    ellipsoid_boundary_samples(p, rho, count)
        .unwrap()
        .into_iter()
        .map(|z| {
            let s = r.gen_range(lo..hi);
            z.into_iter().map(|v| s * v).collect()
        })
        .collect()
}

/// Smallest eigenvalue through nalgebra's symmetric solver, as a check on the
/// crate's own Jacobi routine.
pub fn lambda_min_oracle(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

pub fn lambda_max_oracle(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.max()
}

/// Direct method-of-lines solution of the boundary-actuated equation
/// `y_t = y_xx + c y`, `y(0) = 0`, `y(L) = C_d x_d`, `ẋ_d = A_d x_d + B_d sat(u)`
/// for a scalar actuator, with `u = K (x_d, ⟨y − (x/L)C_d x_d, e_j⟩_{j≤n})`.
/// Second-order differences in space, classic RK4 in time.
pub struct BoundaryFd {
    pub c: f64,
    pub length: f64,
    pub a_d: f64,
    pub b_d: f64,
    pub c_d: f64,
    pub k: Vec<f64>,
    pub level: f64,
    pub cells: usize,
}

pub struct FdSnapshot {
    pub t: f64,
    /// Nodal values on `cells + 1` points including both ends.
    pub y: Vec<f64>,
}

impl BoundaryFd {
    pub fn x(&self, i: usize) -> f64 {
        self.length * i as f64 / self.cells as f64
    }

    fn eig(&self, j: usize, x: f64) -> f64 {
        (2.0 / self.length).sqrt() * (j as f64 * PI * x / self.length).sin()
    }

    fn nodal(&self, state: &[f64]) -> Vec<f64> {
        let xd = state[0];
        let mut y = Vec::with_capacity(self.cells + 1);
        y.push(0.0);
        y.extend_from_slice(&state[1..]);
        y.push(self.c_d * xd);
        y
    }

    fn control(&self, state: &[f64]) -> f64 {
        let y = self.nodal(state);
        let xd = state[0];
        let h = self.length / self.cells as f64;
        let mut u = self.k[0] * xd;
        for j in 1..self.k.len() {
            // trapezoid; the integrand vanishes at both ends
            let wj: f64 = (1..self.cells)
                .map(|i| {
                    let x = self.x(i);
                    (y[i] - x / self.length * self.c_d * xd) * self.eig(j, x)
                })
                .sum::<f64>()
                * h;
            u += self.k[j] * wj;
        }
        u
    }

    fn rhs(&self, state: &[f64]) -> Vec<f64> {
        let h2 = (self.length / self.cells as f64).powi(2);
        let y = self.nodal(state);
        let u = self.control(state).clamp(-self.level, self.level);
        let mut out = vec![0.0; state.len()];
        out[0] = self.a_d * state[0] + self.b_d * u;
        for i in 1..self.cells {
            out[i] = (y[i - 1] - 2.0 * y[i] + y[i + 1]) / h2 + self.c * y[i];
        }
        out
    }

    /// Integrates from `(x_d, y_0)` and records snapshots at multiples of
    /// `every`.
    pub fn run(&self, xd0: f64, y0: impl Fn(f64) -> f64, t_end: f64, dt: f64, every: f64) -> Vec<FdSnapshot> {
        let mut s = Vec::with_capacity(self.cells);
        s.push(xd0);
        for i in 1..self.cells {
            s.push(y0(self.x(i)));
        }
        let steps = (t_end / dt).round() as usize;
        let stride = (every / dt).round() as usize;
        let mut out = vec![FdSnapshot {
            t: 0.0,
            y: self.nodal(&s),
        }];
        let axpy = |a: &[f64], k: &[f64], f: f64| -> Vec<f64> { a.iter().zip(k).map(|(x, d)| x + f * d).collect() };
        for step in 1..=steps {
            let k1 = self.rhs(&s);
            let k2 = self.rhs(&axpy(&s, &k1, 0.5 * dt));
            let k3 = self.rhs(&axpy(&s, &k2, 0.5 * dt));
            let k4 = self.rhs(&axpy(&s, &k3, dt));
            for i in 0..s.len() {
                s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            if step % stride == 0 {
                out.push(FdSnapshot {
                    t: step as f64 * dt,
                    y: self.nodal(&s),
                });
            }
        }
        out
    }
}

/// Linear interpolation of nodal values `ys` on `[0, L]` at `x`.
pub fn interp(ys: &[f64], length: f64, x: f64) -> f64 {
    let cells = ys.len() - 1;
    let s = (x / length * cells as f64).clamp(0.0, cells as f64);
    let i = (s.floor() as usize).min(cells - 1);
    let f = s - i as f64;
    ys[i] * (1.0 - f) + ys[i + 1] * f
}
