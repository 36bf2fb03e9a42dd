//! Ellipsoidal region-of-attraction certificates: static feedback, dynamic
//! controller, pointwise saturation and boundary control.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::design::{hurwitz, PlantFD};
use crate::grid::sup_norm;
use crate::io::{mat_to_rows, rows_to_mat};
use crate::lmi::{
    self, cholesky, linalg::spd_inverse, BarrierOptions, BlockCheck, DynamicData, LmiForm, LmiObjective, LmiProblem,
    Mat, SymMatrix, Tolerances, VerificationReport,
};
use crate::spectral::{ModalSystem, OperatorSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    Static,
    Dynamic,
    Pointwise,
    Boundary,
}

/// Controller-state matrices of a dynamic certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerData {
    pub a1: Mat,
    pub a2: Mat,
    /// Static ellipsoid the projection must contain.
    pub reference: SymMatrix,
}

#[derive(Debug, Clone)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub form: LmiForm,
    /// Region `{z : zᵀPz ≤ level}`.
    pub p: SymMatrix,
    /// `+∞` for a global certificate.
    pub level: f64,
    /// `P̃` of the scalar-input form, when used.
    pub p_tilde: Option<SymMatrix>,
    /// `K`, or `[K₁ K₂]` for the dynamic controller.
    pub gain: Mat,
    pub sector: Mat,
    /// Diagonal of `D`.
    pub scaling: Vec<f64>,
    /// `α` in `V̇ ≤ −α|z|²`.
    pub decay_margin: f64,
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
    pub margin: f64,
    pub controller: Option<ControllerData>,
    pub residuals: Vec<BlockCheck>,
    pub metadata: BTreeMap<String, String>,
}

impl Certificate {
    pub fn is_global(&self) -> bool {
        self.level.is_infinite()
    }

    pub fn n(&self) -> usize {
        self.p.dim()
    }

    /// Dimension of the plant part of the state (excludes controller states).
    pub fn plant_dim(&self) -> usize {
        self.controller.as_ref().map_or(self.n(), |c| c.reference.dim())
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        self.is_global() || ellipsoid_contains(&self.p, self.level, z)
    }

    pub fn lyapunov(&self, z: &[f64]) -> f64 {
        self.p.quad_form(z)
    }

    /// Ellipse of the plant-coordinate projection, `{z : zᵀ P_proj z ≤ level}`.
    pub fn projection(&self) -> Result<SymMatrix> {
        let np = self.plant_dim();
        if np == self.n() {
            return Ok(self.p.clone());
        }
        let s = spd_inverse(&self.p)?;
        let s11 = SymMatrix::from_fn(np, |i, j| s.get(i, j));
        spd_inverse(&s11)
    }

    pub fn volume(&self) -> Result<f64> {
        if self.is_global() {
            return Ok(f64::INFINITY);
        }
        ellipsoid_volume(&self.projection()?, self.level)
    }

    pub fn to_file(&self) -> CertificateFile {
        CertificateFile {
            kind: self.kind,
            form: self.form,
            p: self.p.rows(),
            level: (!self.is_global()).then_some(self.level),
            global: self.is_global(),
            p_tilde: self.p_tilde.as_ref().map(SymMatrix::rows),
            k: mat_to_rows(&self.gain),
            c: mat_to_rows(&self.sector),
            d: self.scaling.clone(),
            alpha: self.decay_margin,
            gamma: self.gamma,
            beta: self.beta,
            margin: self.margin,
            a1: self.controller.as_ref().map(|c| mat_to_rows(&c.a1)),
            a2: self.controller.as_ref().map(|c| mat_to_rows(&c.a2)),
            reference: self.controller.as_ref().map(|c| c.reference.rows()),
            residuals: self.residuals.clone(),
            metadata: self.metadata.clone(),
        }
    }

    pub fn from_file(f: &CertificateFile) -> Result<Self> {
        let p = SymMatrix::from_rows(&f.p)?;
        let controller = match (&f.a1, &f.a2, &f.reference) {
            (Some(a1), Some(a2), Some(r)) => Some(ControllerData {
                a1: rows_to_mat(a1)?,
                a2: rows_to_mat(a2)?,
                reference: SymMatrix::from_rows(r)?,
            }),
            (None, None, None) => None,
            _ => {
                return Err(Error::Parse(
                    "controller data needs a1, a2 and reference together".into(),
                ))
            }
        };
        let level = if f.global {
            f64::INFINITY
        } else {
            f.level.ok_or_else(|| Error::Parse("missing level".into()))?
        };
        Ok(Self {
            kind: f.kind,
            form: f.form,
            p,
            level,
            p_tilde: f.p_tilde.as_deref().map(SymMatrix::from_rows).transpose()?,
            gain: rows_to_mat(&f.k)?,
            sector: rows_to_mat(&f.c)?,
            scaling: f.d.clone(),
            decay_margin: f.alpha,
            gamma: f.gamma,
            beta: f.beta,
            margin: f.margin,
            controller,
            residuals: f.residuals.clone(),
            metadata: f.metadata.clone(),
        })
    }

    /// Re-checks the stored certificate against the plant `(A, B)`.
    pub fn verify(&self, a: &Mat, b: &Mat, level: f64, tol: &Tolerances) -> Result<VerificationReport> {
        if self.is_global() {
            return lmi::verify_global(&self.p, &self.scaling, a, b, &self.gain, tol);
        }
        match (&self.controller, self.form) {
            (Some(c), _) => {
                let (abar, bbar) = augment(a, b, &c.a1, &c.a2)?;
                lmi::verify_dynamic(
                    &self.p,
                    &self.sector,
                    &self.scaling,
                    &abar,
                    &bbar,
                    &self.gain,
                    level,
                    &c.reference,
                    tol,
                )
            }
            (None, LmiForm::Scalar) => {
                let pt = self
                    .p_tilde
                    .as_ref()
                    .ok_or_else(|| Error::Parse("scalar-form certificate without P_tilde".into()))?;
                let d = *self.scaling.first().ok_or_else(|| Error::Parse("missing D".into()))?;
                lmi::verify_scalar(pt, &self.sector, d, a, b, &self.gain, level, tol)
            }
            (None, _) => lmi::verify_bilinear(&self.p, &self.sector, &self.scaling, a, b, &self.gain, level, tol),
        }
    }
}

/// Serialized certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub kind: CertificateKind,
    pub form: LmiForm,
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    #[serde(default)]
    pub level: Option<f64>,
    #[serde(default)]
    pub global: bool,
    #[serde(rename = "P_tilde", default)]
    pub p_tilde: Option<Vec<Vec<f64>>>,
    #[serde(rename = "K")]
    pub k: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Vec<f64>,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub margin: f64,
    #[serde(rename = "A1", default)]
    pub a1: Option<Vec<Vec<f64>>>,
    #[serde(rename = "A2", default)]
    pub a2: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub reference: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub residuals: Vec<BlockCheck>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy)]
pub struct CertifyOptions {
    pub barrier: BarrierOptions,
    /// Overrides the default margin `1e-8·(1 + ‖A + BK‖)`.
    pub margin: Option<f64>,
    /// Try `C = K` first when `A` is Hurwitz.
    pub try_global: bool,
    pub tolerances: Tolerances,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            barrier: BarrierOptions::default(),
            margin: None,
            try_global: true,
            tolerances: Tolerances::default(),
        }
    }
}

fn problem(form: LmiForm, a: &Mat, b: &Mat, k: &Mat, level: f64, opts: &CertifyOptions) -> Result<LmiProblem> {
    let mut prob = LmiProblem::new(form, a.clone(), b.clone(), k.clone(), level)?;
    prob.barrier = opts.barrier;
    if let Some(m) = opts.margin {
        if !(m > 0.0) {
            return Err(Error::InvalidInput(format!("margin must be positive, got {m}")));
        }
        prob.margin = m;
    }
    Ok(prob)
}

fn base_metadata() -> BTreeMap<String, String> {
    let mut meta = BTreeMap::new();
    meta.insert("pde_region".into(), "iota(A) x X_n^perp".into());
    meta.insert("level_enlargement".into(), "none".into());
    meta
}

/// Global certificate `C = K` for a Hurwitz `A`, if the solver finds one.
fn certify_global(plant: &PlantFD, k: &Mat, level: f64, opts: &CertifyOptions) -> Result<Option<Certificate>> {
    let form = if plant.m() == 1 {
        LmiForm::Scalar
    } else {
        LmiForm::Congruent
    };
    let mut prob = problem(form, &plant.a, &plant.b, k, level, opts)?;
    prob.sector_equals_gain = true;
    prob.objective = LmiObjective::FeasibilityOnly;
    let sol = match form {
        LmiForm::Scalar => lmi::solve_prop6(&prob),
        _ => lmi::solve_prop5(&prob),
    };
    let sol = match sol {
        Ok(s) => s,
        Err(Error::InfeasibleWithinBudget { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let d = if form == LmiForm::Scalar {
        vec![1.0]
    } else {
        sol.d.clone()
    };
    let report = lmi::verify_global(&sol.p, &d, &plant.a, &plant.b, k, &opts.tolerances)?;
    if !report.pass {
        return Ok(None);
    }
    let m1 = lmi::m1_bilinear(&sol.p, k, &d, &plant.a, &plant.b, k);
    let mut metadata = base_metadata();
    metadata.insert("global".into(), "sector condition holds everywhere (C = K)".into());
    Ok(Some(Certificate {
        kind: CertificateKind::Static,
        form: LmiForm::Bilinear,
        p: sol.p,
        level: f64::INFINITY,
        p_tilde: None,
        gain: k.clone(),
        sector: k.clone(),
        scaling: d,
        decay_margin: -m1.lambda_max()?,
        gamma: None,
        beta: None,
        margin: prob.margin,
        controller: None,
        residuals: report.blocks,
        metadata,
    }))
}

/// Static-feedback certificate: scalar form plus minimal `D` for a single
/// input, the congruent linear form otherwise.
pub fn certify_static(plant: &PlantFD, level: f64, opts: &CertifyOptions) -> Result<Certificate> {
    let k = plant.gain()?.clone();
    let report = hurwitz(&plant.closed_loop()?)?;
    if !report.hurwitz {
        return Err(Error::Precondition(format!(
            "A + BK is not Hurwitz (spectral abscissa {:.6e})",
            report.abscissa
        )));
    }
    if opts.try_global && plant.n() > 0 && hurwitz(&plant.a)?.hurwitz {
        if let Some(cert) = certify_global(plant, &k, level, opts)? {
            return Ok(cert);
        }
    }
    if plant.m() == 1 {
        let prob = problem(LmiForm::Scalar, &plant.a, &plant.b, &k, level, opts)?;
        let sol = lmi::solve_prop6(&prob)?;
        if !sol.feasible {
            return Err(Error::InfeasibleWithinBudget {
                iterations: sol.newton_steps,
                residual: sol
                    .residuals
                    .iter()
                    .map(|r| r.eigenvalue)
                    .fold(f64::NEG_INFINITY, f64::max),
            });
        }
        let md = lmi::minimal_d(&sol.p, &k, &sol.c, level)?;
        if md.global {
            let mut metadata = base_metadata();
            metadata.insert("global".into(), "optimal sector matrix equals the gain".into());
            let report = lmi::verify_global(&sol.p, &[1.0], &plant.a, &plant.b, &k, &opts.tolerances)?;
            return Ok(Certificate {
                kind: CertificateKind::Static,
                form: LmiForm::Bilinear,
                p: sol.p.clone(),
                level: f64::INFINITY,
                p_tilde: Some(sol.p),
                gain: k.clone(),
                sector: k,
                scaling: vec![1.0],
                decay_margin: -report.blocks[0].eigenvalue,
                gamma: None,
                beta: None,
                margin: sol.margin,
                controller: None,
                residuals: report.blocks,
                metadata,
            });
        }
        let d = md.value;
        let report = lmi::verify_scalar(&sol.p, &sol.c, d, &plant.a, &plant.b, &k, level, &opts.tolerances)?;
        let lam = lmi::m1_scalar(&sol.p, &sol.c, &plant.a, &plant.b, &k).lambda_max()?;
        Ok(Certificate {
            kind: CertificateKind::Static,
            form: LmiForm::Scalar,
            p: sol.p.scaled(d),
            level: 1.0,
            p_tilde: Some(sol.p),
            gain: k,
            sector: sol.c,
            scaling: vec![d],
            decay_margin: -d * lam,
            gamma: None,
            beta: None,
            margin: sol.margin,
            controller: None,
            residuals: report.blocks,
            metadata: base_metadata(),
        })
    } else {
        let prob = problem(LmiForm::Congruent, &plant.a, &plant.b, &k, level, opts)?;
        let sol = lmi::solve_prop5(&prob)?;
        if !sol.feasible {
            return Err(Error::InfeasibleWithinBudget {
                iterations: sol.newton_steps,
                residual: sol
                    .residuals
                    .iter()
                    .map(|r| r.eigenvalue)
                    .fold(f64::NEG_INFINITY, f64::max),
            });
        }
        let lam = lmi::m1_bilinear(&sol.p, &sol.c, &sol.d, &plant.a, &plant.b, &k).lambda_max()?;
        Ok(Certificate {
            kind: CertificateKind::Static,
            form: LmiForm::Bilinear,
            p: sol.p,
            level: 1.0,
            p_tilde: None,
            gain: k,
            sector: sol.c,
            scaling: sol.d,
            decay_margin: -lam,
            gamma: None,
            beta: None,
            margin: sol.margin,
            controller: None,
            residuals: sol.residuals,
            metadata: base_metadata(),
        })
    }
}

/// `Ā = [[A, 0], [A₂, A₁]]`, `B̄ = [B; 0]`.
pub fn augment(a: &Mat, b: &Mat, a1: &Mat, a2: &Mat) -> Result<(Mat, Mat)> {
    let n = a.nrows();
    let nc = a1.nrows();
    if !a1.is_square() || a2.shape() != (nc, n) {
        return Err(Error::Dimension(format!(
            "A1 is {}x{}, A2 is {}x{}; expected {nc}x{nc} and {nc}x{n}",
            a1.nrows(),
            a1.ncols(),
            a2.nrows(),
            a2.ncols()
        )));
    }
    let mut abar = Mat::zeros(n + nc, n + nc);
    abar.view_mut((0, 0), (n, n)).copy_from(a);
    abar.view_mut((n, 0), (nc, n)).copy_from(a2);
    abar.view_mut((n, n), (nc, nc)).copy_from(a1);
    let mut bbar = Mat::zeros(n + nc, b.ncols());
    bbar.view_mut((0, 0), (n, b.ncols())).copy_from(b);
    Ok((abar, bbar))
}

/// Dynamic-controller certificate whose plant projection contains the
/// reference ellipsoid `{zᵀPz ≤ 1}`.
pub fn certify_dynamic(
    plant: &PlantFD,
    a1: &Mat,
    a2: &Mat,
    k2: &Mat,
    reference: &SymMatrix,
    level: f64,
    opts: &CertifyOptions,
) -> Result<Certificate> {
    let k1 = plant.gain()?;
    if a1.nrows() == 0 {
        return certify_static(plant, level, opts);
    }
    if reference.dim() != plant.n() {
        return Err(Error::Dimension(format!(
            "reference ellipsoid is {}-dimensional, plant has {} states",
            reference.dim(),
            plant.n()
        )));
    }
    if k2.shape() != (plant.m(), a1.nrows()) {
        return Err(Error::Dimension(format!(
            "K2 is {}x{}, expected {}x{}",
            k2.nrows(),
            k2.ncols(),
            plant.m(),
            a1.nrows()
        )));
    }
    let (abar, bbar) = augment(&plant.a, &plant.b, a1, a2)?;
    let mut kbar = Mat::zeros(plant.m(), plant.n() + a1.nrows());
    kbar.view_mut((0, 0), (plant.m(), plant.n())).copy_from(k1);
    kbar.view_mut((0, plant.n()), (plant.m(), a1.nrows())).copy_from(k2);
    let report = hurwitz(&(&abar + &bbar * &kbar))?;
    if !report.hurwitz {
        return Err(Error::Precondition(format!(
            "augmented closed loop is not Hurwitz (spectral abscissa {:.6e})",
            report.abscissa
        )));
    }
    let mut prob = problem(LmiForm::Dynamic, &abar, &bbar, &kbar, level, opts)?;
    prob.objective = LmiObjective::Volume;
    prob.dynamic = Some(DynamicData {
        a1: a1.clone(),
        a2: a2.clone(),
        k2: k2.clone(),
        reference: reference.clone(),
    });
    let sol = lmi::solve_prop5(&prob)?;
    if !sol.feasible {
        return Err(Error::InfeasibleWithinBudget {
            iterations: sol.newton_steps,
            residual: sol
                .residuals
                .iter()
                .map(|r| r.eigenvalue)
                .fold(f64::NEG_INFINITY, f64::max),
        });
    }
    let lam = lmi::m1_bilinear(&sol.p, &sol.c, &sol.d, &abar, &bbar, &kbar).lambda_max()?;
    let mut metadata = base_metadata();
    metadata.insert("controller_states".into(), a1.nrows().to_string());
    Ok(Certificate {
        kind: CertificateKind::Dynamic,
        form: LmiForm::Dynamic,
        p: sol.p,
        level: 1.0,
        p_tilde: None,
        gain: kbar,
        sector: sol.c,
        scaling: sol.d,
        decay_margin: -lam,
        gamma: None,
        beta: None,
        margin: sol.margin,
        controller: Some(ControllerData {
            a1: a1.clone(),
            a2: a2.clone(),
            reference: reference.clone(),
        }),
        residuals: sol.residuals,
        metadata,
    })
}

/// Pointwise-saturation level
/// `β = min(ρ, min_k ℓ² / (max(1, ‖b_k‖_∞)² K_k P⁻¹ K_kᵀ))`, which keeps every
/// `b_k(Kz)_k` below the saturation level on `{zᵀPz ≤ β}`.
pub fn certify_pointwise(input_samples: &[Vec<f64>], level: f64, stat: &Certificate) -> Result<Certificate> {
    if stat.kind != CertificateKind::Static {
        return Err(Error::Precondition(
            "pointwise certificate needs a static certificate".into(),
        ));
    }
    let k = &stat.gain;
    if input_samples.len() != k.nrows() {
        return Err(Error::Dimension(format!(
            "{} input shapes for a gain with {} rows",
            input_samples.len(),
            k.nrows()
        )));
    }
    let pinv = spd_inverse(&stat.p)?.to_dense();
    let mut beta = stat.level;
    let mut caps = Vec::with_capacity(k.nrows());
    for (row, b) in input_samples.iter().enumerate() {
        let sup = sup_norm(b);
        if !sup.is_finite() {
            return Err(Error::Precondition(format!("input shape {} is not bounded", row + 1)));
        }
        let scale = sup.max(1.0);
        let kk = k.row(row);
        let q = (kk * &pinv * kk.transpose())[(0, 0)];
        caps.push(level / scale);
        if q > 0.0 {
            beta = beta.min(level * level / (scale * scale * q));
        }
    }
    let unbounded = beta.is_infinite();
    if !unbounded {
        for z in ellipsoid_boundary_samples(&stat.p, beta, 1000)? {
            let zv = nalgebra::DVector::from_vec(z);
            let kz = k * zv;
            for (j, cap) in caps.iter().enumerate() {
                if kz[j].abs() > cap * (1.0 + 1e-9) {
                    return Err(Error::Numeric(format!(
                        "pointwise level leaves input {} above {cap} on the ellipsoid",
                        j + 1
                    )));
                }
            }
        }
    }
    let mut metadata = stat.metadata.clone();
    metadata.insert("sup_norms".into(), "max over grid samples (grid dependent)".into());
    if unbounded {
        metadata.insert("beta".into(), "unbounded: K = 0".into());
    }
    Ok(Certificate {
        kind: CertificateKind::Pointwise,
        level: beta,
        beta: Some(beta),
        metadata,
        ..stat.clone()
    })
}

/// Ellipsoid `{zᵀPz ≤ ρ}` contains `z`.
pub fn ellipsoid_contains(p: &SymMatrix, rho: f64, z: &[f64]) -> bool {
    p.quad_form(z) <= rho
}

/// Points on `{zᵀPz = ρ}`: the image of the unit circle (or of a deterministic
/// spread of unit directions for `n > 2`) under `√ρ·L⁻ᵀ` with `P = LLᵀ`.
pub fn ellipsoid_boundary_samples(p: &SymMatrix, rho: f64, count: usize) -> Result<Vec<Vec<f64>>> {
    let n = p.dim();
    let l = cholesky(p)?;
    let dirs: Vec<Vec<f64>> = match n {
        0 => return Ok(Vec::new()),
        1 => (0..count).map(|i| vec![if i % 2 == 0 { 1.0 } else { -1.0 }]).collect(),
        2 => (0..count)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => (0..count)
            .map(|i| {
                // golden-ratio low-discrepancy directions, normalised
                let v: Vec<f64> = (0..n)
                    .map(|j| {
                        let s = ((i + 1) as f64 * (0.618_033_988_749_895 + j as f64 * 0.414_213_562_373_095)).fract();
                        (2.0 * PI * s).sin() + 1e-3 * (j + 1) as f64
                    })
                    .collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.into_iter().map(|x| x / norm).collect()
            })
            .collect(),
    };
    let r = rho.sqrt();
    Ok(dirs
        .into_iter()
        .map(|u| {
            let rhs = Mat::from_iterator(n, 1, u.into_iter().map(|x| x * r));
            let z = crate::lmi::linalg::backward_sub(&l, &rhs);
            z.iter().copied().collect()
        })
        .collect())
}

/// `π^{n/2} ρ^{n/2} / (Γ(n/2 + 1) √det P)`.
pub fn ellipsoid_volume(p: &SymMatrix, rho: f64) -> Result<f64> {
    let n = p.dim();
    let det = p.determinant()?;
    if !(det > 0.0) {
        return Err(Error::Precondition("ellipsoid matrix must be positive definite".into()));
    }
    let half = n as f64 / 2.0;
    Ok(PI.powf(half) * rho.powf(half) / (gamma_half_integer(n + 2) * det.sqrt()))
}

/// `Γ(k/2)` for a positive integer `k`.
fn gamma_half_integer(k: usize) -> f64 {
    let mut g = if k.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
    let mut x = if k.is_multiple_of(2) { 1.0 } else { 0.5 };
    while x < k as f64 / 2.0 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Support function `max{uᵀz : zᵀPz ≤ ρ} = √(ρ uᵀP⁻¹u)`.
pub fn support(p: &SymMatrix, rho: f64, u: &[f64]) -> Result<f64> {
    Ok((rho * spd_inverse(p)?.quad_form(u)).sqrt())
}

/// Half-widths of the bounding box: `√(ρ (P⁻¹)_ii)`.
pub fn half_widths(p: &SymMatrix, rho: f64) -> Result<Vec<f64>> {
    let inv = spd_inverse(p)?;
    Ok((0..p.dim()).map(|i| (rho * inv.get(i, i)).sqrt()).collect())
}

/// Semi-axis lengths `√(ρ/λ_i)` in ascending eigenvalue order of `P`.
pub fn semi_axes(p: &SymMatrix, rho: f64) -> Result<Vec<f64>> {
    Ok(p.eig()?.values.iter().map(|l| (rho / l).sqrt()).collect())
}

/// Tail weight `γ = ακ/(2‖b⊥‖‖K‖)` with `κ = η/(2‖b⊥‖‖K‖)`; any `γ` works
/// when the tail is not driven.
pub fn tail_weight(alpha: f64, eta: f64, b_perp: f64, k_norm: f64) -> f64 {
    let coupling = b_perp * k_norm;
    if coupling <= 1e-300 {
        return 1.0;
    }
    let kappa = eta / (2.0 * coupling);
    alpha * kappa / (2.0 * coupling)
}

/// Attaches `γ` for the infinite-dimensional Lyapunov function.
pub fn with_tail_weight(mut cert: Certificate, ms: &ModalSystem) -> Certificate {
    let k_norm = lmi::op_norm(&cert.gain);
    cert.gamma = Some(tail_weight(cert.decay_margin, ms.eta, ms.tail_input_norm(), k_norm));
    cert
}

/// Boundary-controlled plant after the change of variables
/// `w = y − (x/L) C_d x_d`.
#[derive(Debug, Clone)]
pub struct BoundaryPlant {
    pub a_d: Mat,
    pub b_d: Mat,
    pub c_d: Mat,
    /// `d(x)`, one sampled function per component of `x_d`.
    pub d_shape: Vec<Vec<f64>>,
    /// `b(x)`.
    pub b_shape: Vec<f64>,
    /// `d_jk = ⟨d_k, e_j⟩` for every retained mode, `N × n_d`.
    pub d_modal: Mat,
    /// `b_j = ⟨b, e_j⟩`, `N × 1`.
    pub b_modal: Mat,
    pub n: usize,
    /// `[[A_d, 0], [D, Λ]]`.
    pub a: Mat,
    /// `(B_dᵀ, b_1, …, b_n)ᵀ`.
    pub b: Mat,
    pub modal: ModalSystem,
}

impl BoundaryPlant {
    pub fn nd(&self) -> usize {
        self.a_d.nrows()
    }

    pub fn plant(&self) -> Result<PlantFD> {
        let mut p = PlantFD::new(self.a.clone(), self.b.clone())?;
        p.labels = (1..=self.nd())
            .map(|i| format!("xd{i}"))
            .chain((1..=self.n).map(|j| format!("w{j}")))
            .collect();
        Ok(p)
    }
}

/// Builds the augmented finite-dimensional system of the boundary-control
/// problem on the eigenfunctions of `ms` (which must come from `spec`).
pub fn build_boundary(
    a_d: &Mat,
    b_d: &Mat,
    c_d: &Mat,
    spec: &OperatorSpec,
    ms: &ModalSystem,
    n: usize,
) -> Result<BoundaryPlant> {
    let nd = a_d.nrows();
    if !a_d.is_square() || b_d.shape() != (nd, 1) || c_d.shape() != (1, nd) {
        return Err(Error::Dimension(format!(
            "A_d {}x{}, B_d {}x{}, C_d {}x{}",
            a_d.nrows(),
            a_d.ncols(),
            b_d.nrows(),
            b_d.ncols(),
            c_d.nrows(),
            c_d.ncols()
        )));
    }
    if n > ms.order() {
        return Err(Error::ExtendTruncation {
            order: ms.order(),
            threshold: 0.0,
        });
    }
    let grid = ms.grid;
    let l = spec.length;
    let c = spec.reaction_on(&grid)?;
    let xs = grid.nodes();
    let cda = c_d * a_d;
    let d_shape: Vec<Vec<f64>> = (0..nd)
        .map(|k| {
            xs.iter()
                .zip(&c)
                .map(|(x, cx)| cx * (x / l) * c_d[(0, k)] - (x / l) * cda[(0, k)])
                .collect()
        })
        .collect();
    let cdbd = (c_d * b_d)[(0, 0)];
    let b_shape: Vec<f64> = xs.iter().map(|x| -(x / l) * cdbd).collect();
    let order = ms.order();
    let d_modal = Mat::from_fn(order, nd, |j, k| grid.inner(&d_shape[k], &ms.eigfuncs[j]));
    let b_modal = Mat::from_fn(order, 1, |j, _| grid.inner(&b_shape, &ms.eigfuncs[j]));
    let mut a = Mat::zeros(nd + n, nd + n);
    a.view_mut((0, 0), (nd, nd)).copy_from(a_d);
    for j in 0..n {
        for k in 0..nd {
            a[(nd + j, k)] = d_modal[(j, k)];
        }
        a[(nd + j, nd + j)] = ms.eigvals[j];
    }
    let mut b = Mat::zeros(nd + n, 1);
    b.view_mut((0, 0), (nd, 1)).copy_from(b_d);
    for j in 0..n {
        b[(nd + j, 0)] = b_modal[(j, 0)];
    }
    Ok(BoundaryPlant {
        a_d: a_d.clone(),
        b_d: b_d.clone(),
        c_d: c_d.clone(),
        d_shape,
        b_shape,
        d_modal,
        b_modal,
        n,
        a,
        b,
        modal: ms.clone(),
    })
}

/// Static certificate of the augmented boundary plant.
pub fn certify_boundary(bp: &BoundaryPlant, k: &Mat, level: f64, opts: &CertifyOptions) -> Result<Certificate> {
    let plant = bp.plant()?.with_gain(k.clone())?;
    let mut cert = certify_static(&plant, level, opts)?;
    cert.kind = CertificateKind::Boundary;
    cert.metadata
        .insert("state".into(), format!("(x_d, w_1..w_{}) with n_d = {}", bp.n, bp.nd()));
    Ok(cert)
}
