use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rdsat::design::{eigenvalues, place_poles, stabilizable, PlantFD};
use rdsat::grid::Grid;
use rdsat::io::{fmt_f64, fmt_vec, mat_to_rows, read_json, read_sampled, to_json};
use rdsat::lmi::{BarrierOptions, Mat, Tolerances, VerificationReport};
use rdsat::roa::{
    build_boundary, certify_boundary, certify_dynamic, certify_pointwise, certify_static, ellipsoid_boundary_samples,
    semi_axes, with_tail_weight, BoundaryPlant, Certificate, CertificateFile, CertifyOptions,
};
use rdsat::sim::{
    field_csv, modal_plant, reconstruct_boundary, simulate_boundary, simulate_galerkin, simulate_pointwise,
    sweep as run_sweep, Classification, LyapunovWeights, SimOptions, SweepSpec, Trajectory,
};
use rdsat::spectral::{
    analytic_spectrum, numeric_spectrum, project_inputs, select_n, InputShape, ModalSystem, OperatorSpec, Reaction,
};
use serde_json::json;

use crate::config::{DesignConfig, Format, ReactionConfig, RunConfig};
use crate::{svg, CliError};

pub struct Context {
    pub cfg: RunConfig,
}

impl Context {
    pub fn new(cfg: RunConfig) -> Self {
        Self { cfg }
    }

    fn wants(&self, f: Format) -> bool {
        self.cfg.output.formats.contains(&f)
    }

    fn write(&self, f: Format, name: &str, contents: &str) -> Result<(), CliError> {
        if !self.wants(f) {
            return Ok(());
        }
        let dir = &self.cfg.output.dir;
        fs::create_dir_all(dir).map_err(rdsat::Error::from)?;
        let path = dir.join(name);
        fs::write(&path, contents).map_err(rdsat::Error::from)?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn grid(&self) -> Result<Grid, CliError> {
        Ok(Grid::new(self.cfg.problem.length, self.cfg.problem.grid_points)?)
    }

    fn reaction(&self, grid: &Grid) -> Result<Reaction, CliError> {
        Ok(match &self.cfg.problem.reaction {
            ReactionConfig::Constant(c) => Reaction::Constant(*c),
            ReactionConfig::File(p) => Reaction::Sampled(resampled(p, grid)?),
        })
    }

    fn spec_with(&self, inputs: Vec<InputShape>) -> Result<OperatorSpec, CliError> {
        let p = &self.cfg.problem;
        let grid = self.grid()?;
        Ok(OperatorSpec::new(
            p.length,
            self.reaction(&grid)?,
            inputs,
            p.level,
            grid,
        )?)
    }

    fn spec(&self) -> Result<OperatorSpec, CliError> {
        let grid = self.grid()?;
        let inputs = self
            .cfg
            .input_shapes()?
            .into_iter()
            .map(|s| match s {
                InputShape::Sampled(b) => Ok(InputShape::Sampled(resample_values(&b, &grid)?)),
                other => Ok(other),
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        self.spec_with(inputs)
    }

    fn modal(&self, spec: &OperatorSpec) -> Result<ModalSystem, CliError> {
        let p = &self.cfg.problem;
        let ms = if p.numeric {
            numeric_spectrum(spec, p.order, p.grid_points)?
        } else {
            analytic_spectrum(spec, p.order)?
        };
        let ms = project_inputs(&ms, spec)?;
        Ok(select_n(&ms, p.beta)?)
    }

    fn options(&self) -> CertifyOptions {
        CertifyOptions {
            barrier: BarrierOptions {
                max_newton: self.cfg.solver.max_newton,
                ..BarrierOptions::default()
            },
            margin: self.cfg.solver.margin,
            try_global: self.cfg.solver.try_global,
            tolerances: Tolerances::default(),
        }
    }

    fn sim_options(&self) -> Result<SimOptions, CliError> {
        Ok(SimOptions::new(self.cfg.sim.t_end, self.cfg.sim.dt)?)
    }
}

fn resampled(path: &Path, grid: &Grid) -> Result<Vec<f64>, CliError> {
    let (g, v) = read_sampled(path)?;
    Ok(grid.resample(&g, &v)?)
}

fn resample_values(v: &[f64], grid: &Grid) -> Result<Vec<f64>, CliError> {
    let src = Grid::new(grid.length, v.len())?;
    Ok(grid.resample(&src, v)?)
}

/// Stabilizability check and gain from the [design] section.
fn designed(ctx: &Context, plant: PlantFD) -> Result<PlantFD, CliError> {
    let st = stabilizable(&plant)?;
    if !st.stabilizable {
        return Err(rdsat::Error::NotStabilizable(st.diagnostic).into());
    }
    let design = ctx
        .cfg
        .design
        .as_ref()
        .ok_or_else(|| CliError::config(0, "a [design] section with poles or gain is required"))?;
    let k = match design {
        DesignConfig::Poles(p) => {
            if p.len() != plant.n() {
                return Err(CliError::config(
                    0,
                    format!("[design] poles lists {} poles for {} states", p.len(), plant.n()),
                ));
            }
            place_poles(&plant, p)?
        }
        DesignConfig::Gain(k) => k.clone(),
    };
    Ok(plant.with_gain(k)?)
}

fn plant_and_modal(ctx: &Context) -> Result<(ModalSystem, PlantFD), CliError> {
    let spec = ctx.spec()?;
    let ms = ctx.modal(&spec)?;
    if ms.already_stable() {
        return Err(rdsat::Error::Precondition(
            "no unstable modes: the open loop is already exponentially stable".into(),
        )
        .into());
    }
    let plant = designed(ctx, modal_plant(&ms)?)?;
    Ok((ms, plant))
}

fn fmt_mat(m: &Mat) -> String {
    let rows: Vec<String> = mat_to_rows(m).iter().map(|r| fmt_vec(r)).collect();
    format!("[{}]", rows.join(", "))
}

fn report(cert: &Certificate, ver: &VerificationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "certificate: {:?} ({:?} form)", cert.kind, cert.form);
    if cert.is_global() {
        let _ = writeln!(s, "region: global (every initial condition)");
    } else {
        let _ = writeln!(s, "region: {{z : z' P z <= {}}}", fmt_f64(cert.level));
    }
    let _ = writeln!(s, "P = {}", fmt_mat(&cert.p.to_dense()));
    if let Some(pt) = &cert.p_tilde {
        let _ = writeln!(s, "P_tilde = {}", fmt_mat(&pt.to_dense()));
    }
    let _ = writeln!(s, "K = {}", fmt_mat(&cert.gain));
    let _ = writeln!(s, "C = {}", fmt_mat(&cert.sector));
    let _ = writeln!(s, "D = {}", fmt_vec(&cert.scaling));
    let _ = writeln!(s, "alpha = {}", fmt_f64(cert.decay_margin));
    if let Some(g) = cert.gamma {
        let _ = writeln!(s, "gamma = {}", fmt_f64(g));
    }
    if let Some(b) = cert.beta {
        let _ = writeln!(s, "beta = {}", fmt_f64(b));
    }
    if !cert.is_global() {
        if let Ok(proj) = cert.projection() {
            if let Ok(axes) = semi_axes(&proj, cert.level) {
                let _ = writeln!(s, "semi-axes = {}", fmt_vec(&axes));
            }
        }
        if let Ok(v) = cert.volume() {
            let _ = writeln!(s, "volume = {}", fmt_f64(v));
        }
    }
    let _ = writeln!(s, "residuals:");
    for b in &ver.blocks {
        let _ = writeln!(
            s,
            "  {:<10} {:<16} {:>24}  {}",
            b.name,
            b.kind,
            fmt_f64(b.eigenvalue),
            if b.pass { "pass" } else { "FAIL" }
        );
    }
    let _ = writeln!(s, "verification: {}", if ver.pass { "PASS" } else { "FAIL" });
    s
}

fn verify_against(cert: &Certificate, plant: &PlantFD, level: f64) -> Result<VerificationReport, CliError> {
    Ok(cert.verify(&plant.a, &plant.b, level, &Tolerances::default())?)
}

fn certificate_for(ctx: &Context, ms: &ModalSystem, plant: &PlantFD) -> Result<Certificate, CliError> {
    let level = ctx.cfg.problem.level;
    let opts = ctx.options();
    let cert = match &ctx.cfg.controller {
        None => certify_static(plant, level, &opts)?,
        Some(c) => {
            let reference = certify_static(plant, level, &opts)?;
            if reference.is_global() {
                reference
            } else {
                let k2 = c.k2.clone().unwrap_or_else(|| Mat::zeros(plant.m(), c.a1.nrows()));
                certify_dynamic(
                    plant,
                    &c.a1,
                    &c.a2,
                    &k2,
                    &reference.p.scaled(1.0 / reference.level),
                    level,
                    &opts,
                )?
            }
        }
    };
    Ok(with_tail_weight(cert, ms))
}

fn finish(ver: &VerificationReport) -> Result<(), CliError> {
    if ver.pass {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "verification failed in block(s): {}",
            ver.failing().join(", ")
        )))
    }
}

pub fn eig(ctx: &Context) -> Result<(), CliError> {
    let spec = ctx.spec()?;
    let ms = ctx.modal(&spec)?;
    println!(
        "spectrum ({}, N = {})",
        if ctx.cfg.problem.numeric {
            "finite differences"
        } else {
            "closed form"
        },
        ms.order()
    );
    for (j, l) in ms.eigvals.iter().enumerate() {
        println!("  lambda_{} = {}", j + 1, fmt_f64(*l));
    }
    println!("n = {}", ms.n);
    println!("eta = {}", fmt_f64(ms.eta));
    ctx.write(Format::Json, "modal.json", &to_json(&ms.to_file())?)
}

pub fn design(ctx: &Context) -> Result<(), CliError> {
    let spec = ctx.spec()?;
    let ms = ctx.modal(&spec)?;
    let plant = modal_plant(&ms)?;
    let st = stabilizable(&plant)?;
    println!("stabilizable: {} ({})", st.stabilizable, st.diagnostic);
    let plant = designed(ctx, plant)?;
    let k = plant.gain()?;
    let eigs = eigenvalues(&plant.closed_loop()?)?;
    println!("K = {}", fmt_mat(k));
    let mut eig_rows = Vec::new();
    for e in &eigs {
        println!("  closed-loop eigenvalue {} {:+}i", fmt_f64(e.re), e.im);
        eig_rows.push(vec![e.re, e.im]);
    }
    let doc = json!({
        "A": mat_to_rows(&plant.a),
        "B": mat_to_rows(&plant.b),
        "K": mat_to_rows(k),
        "closed_loop_eigenvalues": eig_rows,
    });
    ctx.write(Format::Json, "design.json", &to_json(&doc)?)
}

pub fn certify(ctx: &Context) -> Result<(), CliError> {
    let (ms, plant) = plant_and_modal(ctx)?;
    let cert = certificate_for(ctx, &ms, &plant)?;
    let ver = verify_against(&cert, &plant, ctx.cfg.problem.level)?;
    print!("{}", report(&cert, &ver));
    ctx.write(Format::Json, "certificate.json", &to_json(&cert.to_file())?)?;
    finish(&ver)
}

pub fn verify(ctx: &Context, path: &Path) -> Result<(), CliError> {
    let file: CertificateFile = read_json(path)?;
    let cert = Certificate::from_file(&file)?;
    let spec = ctx.spec()?;
    let ms = ctx.modal(&spec)?;
    let plant = modal_plant(&ms)?;
    if cert.plant_dim() != plant.n() || cert.gain.nrows() != plant.m() {
        return Err(rdsat::Error::Dimension(format!(
            "certificate is for {} states and {} inputs, the configured plant has {} and {}",
            cert.plant_dim(),
            cert.gain.nrows(),
            plant.n(),
            plant.m()
        ))
        .into());
    }
    let ver = verify_against(&cert, &plant, ctx.cfg.problem.level)?;
    print!("{}", report(&cert, &ver));
    finish(&ver)
}

pub fn sweep(ctx: &Context) -> Result<(), CliError> {
    let (ms, plant) = plant_and_modal(ctx)?;
    let cert = certificate_for(ctx, &ms, &plant)?;
    if cert.controller.is_some() {
        return Err(rdsat::Error::Precondition("sweeps use static certificates; remove [controller]".into()).into());
    }
    if plant.n() < 2 {
        return Err(rdsat::Error::Precondition("sweeps need at least two unstable modes".into()).into());
    }
    let sim = ctx.sim_options()?;
    let mut spec = SweepSpec::around(&cert, ctx.cfg.sim.nx, ctx.cfg.sim.ny, sim)?;
    if let Some(r) = ctx.cfg.sim.x_range {
        spec.x = r;
    }
    if let Some(r) = ctx.cfg.sim.y_range {
        spec.y = r;
    }
    let result = run_sweep(&plant, ctx.cfg.problem.level, &cert, &spec)?;
    let inside = result.points.iter().filter(|p| p.inside).count();
    println!(
        "{} initial conditions, horizon {}, step {}",
        result.points.len(),
        fmt_f64(sim.t_end),
        fmt_f64(sim.step())
    );
    println!(
        "converged {}, diverged {}, undecided {}",
        result.count(Classification::Converged),
        result.count(Classification::Diverged),
        result.count(Classification::Undecided)
    );
    println!(
        "inside the certified ellipsoid: {inside}, of which diverged: {}",
        result.violations.len()
    );
    ctx.write(Format::Csv, "sweep.csv", &result.to_csv())?;
    if plant.n() == 2 {
        ctx.write(Format::Svg, "sweep.svg", &svg::render(&result))?;
    } else if ctx.wants(Format::Svg) {
        println!("notice: {} states, SVG skipped (CSV only)", plant.n());
    }
    let doc = json!({
        "points": result.points.len(),
        "converged": result.count(Classification::Converged),
        "diverged": result.count(Classification::Diverged),
        "undecided": result.count(Classification::Undecided),
        "inside": inside,
        "violations": result.violations,
        "t_end": sim.t_end,
        "dt": sim.step(),
        "x_range": [spec.x.0, spec.x.1],
        "y_range": [spec.y.0, spec.y.1],
    });
    ctx.write(Format::Json, "sweep.json", &to_json(&doc)?)?;
    if result.sound() {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "{} certified initial conditions diverged",
            result.violations.len()
        )))
    }
}

/// `z0` followed by the configured tail coefficients, `order` entries after
/// the first `offset` ones.
fn initial_state(
    ctx: &Context,
    z_len: usize,
    first_tail_mode: usize,
    order: usize,
    z0: Vec<f64>,
) -> Result<Vec<f64>, CliError> {
    if z0.len() != z_len {
        return Err(CliError::config(
            0,
            format!("[sim] z0 has {} entries, the finite part has {z_len}", z0.len()),
        ));
    }
    let mut state = z0;
    state.resize(z_len + order - first_tail_mode, 0.0);
    for &(j, v) in &ctx.cfg.sim.tail {
        if j <= first_tail_mode || j > order {
            return Err(CliError::config(
                0,
                format!("[sim] tail mode {j} must lie in {}..={order}", first_tail_mode + 1),
            ));
        }
        state[z_len + j - 1 - first_tail_mode] = v;
    }
    Ok(state)
}

fn galerkin_order(ctx: &Context, ms: &ModalSystem) -> Result<usize, CliError> {
    let order = ctx.cfg.sim.modes.unwrap_or(ms.order());
    if order < ms.n || order > ms.order() {
        return Err(CliError::config(
            0,
            format!("[sim] modes must lie between {} and {}", ms.n, ms.order()),
        ));
    }
    Ok(order)
}

fn trajectory_summary(traj: &Trajectory) -> String {
    let mut s = format!(
        "classification: {} at t = {}\n",
        traj.classification.label(),
        fmt_f64(*traj.times.last().unwrap_or(&0.0))
    );
    if let Some(f) = traj.decay_fit {
        let _ = writeln!(s, "decay envelope: M = {}, a = {}", fmt_f64(f.m), fmt_f64(f.a));
    }
    if let Some(r) = traj.max_lyapunov_rate() {
        let _ = writeln!(s, "max dV/dt (discrete) = {}", fmt_f64(r));
    }
    let _ = writeln!(s, "refined crossing steps: {}", traj.refined_steps.len());
    s
}

fn trajectory_json(traj: &Trajectory) -> serde_json::Value {
    json!({
        "classification": traj.classification,
        "t_end": traj.times.last(),
        "final_state": traj.final_state(),
        "decay_fit": traj.decay_fit.map(|f| json!({"M": f.m, "a": f.a})),
        "max_lyapunov_rate": traj.max_lyapunov_rate(),
        "refined_steps": traj.refined_steps.len(),
    })
}

fn field_stride(traj: &Trajectory) -> usize {
    (traj.times.len() / 100).max(1)
}

pub fn simulate(ctx: &Context) -> Result<(), CliError> {
    let (ms, plant) = plant_and_modal(ctx)?;
    let order = galerkin_order(ctx, &ms)?;
    let weights = match certificate_for(ctx, &ms, &plant) {
        Ok(cert) if cert.controller.is_none() => Some(LyapunovWeights::from_certificate(&cert)),
        Ok(_) => None,
        Err(e) => {
            println!("notice: no certificate ({e}); V column left empty");
            None
        }
    };
    let z0 = ctx
        .cfg
        .sim
        .z0
        .clone()
        .ok_or_else(|| CliError::config(0, "[sim] z0 is required for simulate"))?;
    let state0 = initial_state(ctx, ms.n, ms.n, order, z0)?;
    let traj = simulate_galerkin(
        &ms,
        plant.gain()?,
        ctx.cfg.problem.level,
        &state0,
        &ctx.sim_options()?,
        weights.as_ref(),
    )?;
    print!("{}", trajectory_summary(&traj));
    ctx.write(Format::Csv, "trajectory.csv", &traj.to_csv())?;
    ctx.write(Format::Csv, "field.csv", &field_csv(&ms, &traj, 0, field_stride(&traj)))?;
    ctx.write(Format::Json, "trajectory.json", &to_json(&trajectory_json(&traj))?)
}

pub fn pointwise(ctx: &Context) -> Result<(), CliError> {
    let (ms, plant) = plant_and_modal(ctx)?;
    let level = ctx.cfg.problem.level;
    let stat = certify_static(&plant, level, &ctx.options())?;
    let cert = with_tail_weight(certify_pointwise(&ms.input_samples, level, &stat)?, &ms);
    let ver = verify_against(&stat, &plant, level)?;
    print!("{}", report(&cert, &ver));
    ctx.write(Format::Json, "certificate_pointwise.json", &to_json(&cert.to_file())?)?;
    let order = galerkin_order(ctx, &ms)?;
    let z0 = match ctx.cfg.sim.z0.clone() {
        Some(z) => z,
        None if cert.is_global() => vec![1.0; ms.n],
        None => ellipsoid_boundary_samples(&cert.p, 0.9 * cert.level, 1)?.remove(0),
    };
    let state0 = initial_state(ctx, ms.n, ms.n, order, z0)?;
    let weights = LyapunovWeights::from_certificate(&cert);
    let traj = simulate_pointwise(&ms, plant.gain()?, level, &state0, &ctx.sim_options()?, Some(&weights))?;
    print!("{}", trajectory_summary(&traj));
    ctx.write(Format::Csv, "trajectory_pointwise.csv", &traj.to_csv())?;
    ctx.write(
        Format::Json,
        "trajectory_pointwise.json",
        &to_json(&trajectory_json(&traj))?,
    )?;
    finish(&ver)
}

fn boundary_field_csv(bp: &BoundaryPlant, traj: &Trajectory) -> String {
    let mut out = String::from("t,x,y\n");
    let xs = bp.modal.grid.nodes();
    for i in (0..traj.times.len()).step_by(field_stride(traj)) {
        let y = reconstruct_boundary(bp, &traj.states[i]);
        for (x, v) in xs.iter().zip(&y) {
            let _ = writeln!(out, "{},{},{}", fmt_f64(traj.times[i]), fmt_f64(*x), fmt_f64(*v));
        }
    }
    out
}

pub fn boundary(ctx: &Context) -> Result<(), CliError> {
    let bc = ctx
        .cfg
        .boundary
        .as_ref()
        .ok_or_else(|| CliError::config(0, "a [boundary] section with a_d, b_d, c_d is required"))?;
    if bc.b_d.ncols() != 1 || bc.c_d.nrows() != 1 {
        return Err(CliError::config(
            0,
            "[boundary] supports one input and one boundary output",
        ));
    }
    let grid = ctx.grid()?;
    let l = ctx.cfg.problem.length;
    let cdbd = (&bc.c_d * &bc.b_d)[(0, 0)];
    let spec = ctx.spec_with(vec![InputShape::Sampled(grid.sample(|x| -(x / l) * cdbd))])?;
    let ms = ctx.modal(&spec)?;
    let bp = build_boundary(&bc.a_d, &bc.b_d, &bc.c_d, &spec, &ms, ms.n)?;
    println!(
        "augmented state: {} actuator state(s) + {} unstable mode(s); eta = {}",
        bp.nd(),
        bp.n,
        fmt_f64(ms.eta)
    );
    let plant = designed(ctx, bp.plant()?)?;
    let level = ctx.cfg.problem.level;
    let cert = certify_boundary(&bp, plant.gain()?, level, &ctx.options())?;
    let ver = verify_against(&cert, &plant, level)?;
    print!("{}", report(&cert, &ver));
    ctx.write(Format::Json, "certificate_boundary.json", &to_json(&cert.to_file())?)?;
    if let Some(z0) = ctx.cfg.sim.z0.clone() {
        let order = galerkin_order(ctx, &ms)?;
        let state0 = initial_state(ctx, bp.nd() + bp.n, bp.n, order, z0)?;
        let traj = simulate_boundary(&bp, plant.gain()?, level, &state0, &ctx.sim_options()?, None)?;
        print!("{}", trajectory_summary(&traj));
        ctx.write(Format::Csv, "trajectory_boundary.csv", &traj.to_csv())?;
        ctx.write(Format::Csv, "field_boundary.csv", &boundary_field_csv(&bp, &traj))?;
    }
    finish(&ver)
}
