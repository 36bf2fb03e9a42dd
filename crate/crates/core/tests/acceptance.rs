//! One PASS/FAIL line per acceptance criterion.
//!
//! Criterion 3 asks the published seven-digit certificates to pass the
//! strict decay block; they miss it by about 1e-7. The line reports FAIL with
//! the measured eigenvalues. The process exits nonzero only when some other
//! criterion fails or criterion 3 fails differently (any block besides M1~).

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use nalgebra::DMatrix;
use rand::Rng;
use rdsat::grid::{sup_norm, Grid};
use rdsat::lmi::{
    m1_scalar, m2_scalar, minimal_d, minimal_d_bisection, op_norm, schur_psd, verify_scalar, Mat, SymMatrix, Tolerances,
};
use rdsat::roa::{build_boundary, certify_boundary, certify_pointwise, CertifyOptions};
use rdsat::saturation::{
    delta, delta_bound_indicator, delta_bound_l2, delta_bound_pointwise, delta_bound_sup, sector_check, SectorOutcome,
};
use rdsat::sim::{
    decay_fit_range, reconstruct_boundary, simulate_boundary, simulate_galerkin, simulate_modal, simulate_pointwise,
    sweep, tail_bound, Classification, LyapunovWeights, SimOptions, SweepSpec,
};
use rdsat::spectral::{
    analytic_spectrum, numeric_spectrum, project_inputs, select_n, InputShape, OperatorSpec, Reaction,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn secs(d: Duration) -> String {
    format!("{:.3}s", d.as_secs_f64())
}

fn spectrum() -> Outcome {
    let start = Instant::now();
    let ms = modal(paper_inputs(), 50);
    let grid = Grid::new(2.0, 2001).unwrap();
    let spec = OperatorSpec::new(2.0, Reaction::Sampled(vec![10.0; 2001]), paper_inputs(), LEVEL, grid).unwrap();
    let num = numeric_spectrum(&spec, 10, 2001).unwrap();
    let num = select_n(&project_inputs(&num, &spec).unwrap(), 0.0).unwrap();
    let took = start.elapsed();
    let analytic_err = (0..2).map(|j| (ms.eigvals[j] - A_DIAG[j]).abs()).fold(0.0, f64::max);
    let numeric_err = (0..2).map(|j| (num.eigvals[j] - A_DIAG[j]).abs()).fold(0.0, f64::max);
    outcome(
        analytic_err < 1e-6 && numeric_err < 1e-3 && ms.n == 2 && num.n == 2 && took < Duration::from_secs(1),
        format!(
            "closed-form error {analytic_err:.2e}, finite-difference error {numeric_err:.2e}, n = {}, {}",
            ms.n,
            secs(took)
        ),
    )
}

fn gains() -> Outcome {
    let ms = modal(paper_inputs(), 50);
    let start = Instant::now();
    let fast = closed_loop(&ms, &FAST);
    let slow = closed_loop(&ms, &SLOW);
    let took = start.elapsed();
    let err = |p: &rdsat::design::PlantFD, want: [f64; 2]| {
        let k = p.gain().unwrap();
        (0..2).map(|j| (k[(0, j)] - want[j]).abs()).fold(0.0, f64::max)
    };
    let (e1, e2) = (err(&fast, K_FAST), err(&slow, K_SLOW));
    outcome(
        e1 < 1e-5 && e2 < 1e-5 && took < Duration::from_millis(100),
        format!("max entry error {e1:.2e} and {e2:.2e}, {}", secs(took)),
    )
}

/// The outcome, and whether any failure is confined to the M1~ block.
fn published() -> (Outcome, bool) {
    let mut pass = true;
    let mut expected = true;
    let mut parts = Vec::new();
    for (name, t) in [("fast", TRIPLE_FAST), ("slow", TRIPLE_SLOW)] {
        let a = Mat::from_row_slice(2, 2, &[A_DIAG[0], 0.0, 0.0, A_DIAG[1]]);
        let b = Mat::from_row_slice(2, 1, &[1.0, 1.0]);
        let (pt, c, k) = (sym2(t.pt), row(t.c), row(t.k));
        let rep = verify_scalar(&pt, &c, t.d, &a, &b, &k, LEVEL, &Tolerances::default()).unwrap();
        let m1 = lambda_max_oracle(&DMatrix::from(m1_scalar(&pt, &c, &a, &b, &k).to_dense()));
        let m2 = lambda_min_oracle(&DMatrix::from(m2_scalar(&pt, &c, &k, t.d, LEVEL).to_dense()));
        let ok = m1 < 0.0 && m2 >= -1e-6;
        pass &= ok;
        let failing = rep.failing();
        expected &= ok || failing == vec!["M1~"];
        parts.push(format!("{name}: max eig M1~ = {m1:+.3e}, min eig M2~ = {m2:+.3e}"));
    }
    let mut detail = parts.join("; ");
    if !pass {
        detail.push_str(" (seven-digit rounding leaves the strict block positive; see README)");
    }
    (outcome(pass, detail), expected)
}

fn own_certificates() -> Outcome {
    let ms = modal(paper_inputs(), 50);
    let mut ok = true;
    let mut vols = Vec::new();
    let mut worst_rel: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    for poles in [FAST, SLOW] {
        let start = Instant::now();
        let plant = closed_loop(&ms, &poles);
        let cert = certificate(&ms, &plant);
        let rep = cert.verify(&plant.a, &plant.b, LEVEL, &Tolerances::default()).unwrap();
        slowest = slowest.max(start.elapsed());
        ok &= rep.pass;
        let pt = cert.p_tilde.clone().unwrap();
        let closed = minimal_d(&pt, &cert.gain, &cert.sector, LEVEL).unwrap().value;
        let bis = minimal_d_bisection(&pt, &cert.gain, &cert.sector, LEVEL).unwrap();
        worst_rel = worst_rel.max((closed - bis).abs() / closed);
        vols.push(cert.volume().unwrap());
    }
    outcome(
        ok && worst_rel <= 1e-8 && vols[1] > vols[0] && slowest < Duration::from_secs(30),
        format!(
            "verified {ok}, minimal D vs bisection {worst_rel:.1e}, volumes {:.4} < {:.4}, slowest {}",
            vols[0],
            vols[1],
            secs(slowest)
        ),
    )
}

fn sweeps() -> Outcome {
    let ms = modal(paper_inputs(), 50);
    let mut ok = true;
    let mut parts = Vec::new();
    for (poles, t_end) in [(FAST, 10.0), (SLOW, 60.0)] {
        let plant = closed_loop(&ms, &poles);
        let cert = certificate(&ms, &plant);
        let start = Instant::now();
        let spec = SweepSpec::around(&cert, 31, 31, SimOptions::new(t_end, None).unwrap()).unwrap();
        let res = sweep(&plant, LEVEL, &cert, &spec).unwrap();
        let took = start.elapsed();
        let outside_red = res
            .points
            .iter()
            .filter(|p| !p.inside && p.label == Classification::Diverged)
            .count();
        ok &= res.sound() && outside_red > 0 && took < Duration::from_secs(60);
        parts.push(format!(
            "T = {t_end}: {} inside diverged, {outside_red} outside diverged, {}",
            res.violations.len(),
            secs(took)
        ));
    }
    outcome(ok, parts.join("; "))
}

fn with_tail(z: &[f64], order: usize, tail: &[(usize, f64)]) -> Vec<f64> {
    let mut s = z.to_vec();
    s.resize(order, 0.0);
    for (j, v) in tail {
        s[j - 1] = *v;
    }
    s
}

/// Criteria 6 and 7 share the in-region runs: 50 per configuration.
fn in_region() -> (Outcome, Outcome) {
    let inputs = vec![InputShape::Modes(vec![(1, 1.0), (2, 1.0), (3, 0.5)])];
    let ms = modal(inputs, 50);
    let mut worst_rate = f64::NEG_INFINITY;
    let mut identical = true;
    let mut worst_ratio: f64 = 0.0;
    let mut min_a = f64::INFINITY;
    let mut runs = 0;
    let mut rng = rng(99);
    for (poles, t_end, seed) in [(FAST, 30.0, 1), (SLOW, 200.0, 2)] {
        let plant = closed_loop(&ms, &poles);
        let k = plant.gain().unwrap();
        let k_norm = op_norm(k);
        let cert = certificate(&ms, &plant);
        let w = LyapunovWeights::from_certificate(&cert);
        let w1 = LyapunovWeights {
            p: cert.p.clone(),
            gamma: 0.0,
        };
        let opts = SimOptions::new(t_end, None).unwrap();
        let dt = opts.step();
        for z0 in interior_points(&cert.p, cert.level, 50, 0.2, 0.999, seed) {
            runs += 1;
            let room = (cert.level - cert.p.quad_form(&z0)).max(0.0);
            let amp = 0.5 * (room / w.gamma).sqrt().min(0.2);
            let tail: Vec<(usize, f64)> = (3..=6).map(|j| (j, amp * rng.gen_range(-1.0..1.0))).collect();
            let s0 = with_tail(&z0, 50, &tail);
            let m = simulate_modal(&plant, LEVEL, &z0, &opts, Some(&w1)).unwrap();
            let g = simulate_galerkin(&ms, k, LEVEL, &s0, &opts, Some(&w)).unwrap();
            for traj in [&m, &g] {
                for v in traj.lyapunov.windows(2) {
                    worst_rate = worst_rate.max((v[1] - v[0]) / dt);
                }
            }
            identical &= (0..m.times.len()).all(|i| m.z(i) == g.z(i));
            match decay_fit_range(&g, 0..2) {
                Ok(fit) => {
                    min_a = min_a.min(fit.a);
                    let zn = (z0[0] * z0[0] + z0[1] * z0[1]).sqrt();
                    for (i, t) in g.times.iter().enumerate() {
                        for j in 2..50 {
                            let bound = tail_bound(*t, s0[j], ms.bmat[(j, 0)], k_norm, fit, ms.eta, zn);
                            if bound > 0.0 {
                                worst_ratio = worst_ratio.max(g.states[i][j].abs() / bound);
                            } else if g.states[i][j] != 0.0 {
                                worst_ratio = f64::INFINITY;
                            }
                        }
                    }
                }
                Err(_) => min_a = f64::NEG_INFINITY,
            }
        }
    }
    (
        outcome(
            worst_rate <= 1e-6,
            format!("{runs} modal and {runs} Galerkin runs, largest (V(t+dt) - V(t))/dt = {worst_rate:.3e}"),
        ),
        outcome(
            identical && worst_ratio <= 1.05 && min_a > 0.0,
            format!(
                "z block identical {identical}, worst |w_j|/bound = {worst_ratio:.4}, smallest fitted a = {min_a:.4}"
            ),
        ),
    )
}

fn saturation_suite() -> Outcome {
    const SAMPLES: usize = 10_000;
    let mut r = rng(2024);
    let mut failures = Vec::new();
    let grid = Grid::new(2.0, 101).unwrap();
    for s in 0..SAMPLES {
        let level = r.gen_range(0.05..5.0);
        // sector condition
        let n = r.gen_range(1..5);
        let m = r.gen_range(1..4);
        let k = Mat::from_fn(m, n, |_, _| r.gen_range(-10.0..10.0));
        let mut e = Mat::from_fn(m, n, |_, _| r.gen_range(-3.0..3.0));
        let z: Vec<f64> = (0..n).map(|_| r.gen_range(-5.0..5.0)).collect();
        let d: Vec<f64> = (0..m).map(|_| r.gen_range(0.01..20.0)).collect();
        let ez = (&e * nalgebra::DVector::from_column_slice(&z)).amax();
        if ez > level {
            e *= r.gen_range(0.0..1.0) * level / ez;
        }
        let c = &k - e;
        match sector_check(&z, &k, &c, &d, level) {
            Ok(SectorOutcome::Value(v)) if v <= 1e-9 * (1.0 + v.abs()) => {}
            other => failures.push(format!("sector #{s}: {other:?}")),
        }
        // scalar difference bound and the exact-zero case
        let rr = r.gen_range(-50.0..50.0);
        let kk = r.gen_range(-50.0..50.0);
        if delta(&[rr], kk, level)[0].abs() > delta_bound_pointwise(rr, level) * (1.0 + 1e-14) {
            failures.push(format!("pointwise bound #{s}"));
        }
        let lin = r.gen_range(-1.0..1.0) * level / rr.abs().max(1.0);
        if delta(&[rr], lin, level)[0] != 0.0 {
            failures.push(format!("exact zero #{s}"));
        }
        // function bounds
        let coeffs: Vec<f64> = (0..r.gen_range(1..5)).map(|_| r.gen_range(-3.0..3.0)).collect();
        let b = grid.sample(|x| {
            coeffs
                .iter()
                .enumerate()
                .map(|(j, c)| c * ((j + 1) as f64 * std::f64::consts::PI * x / 2.0).sin())
                .sum::<f64>()
                + coeffs[0] * x
        });
        let kf = r.gen_range(-20.0..20.0);
        let dl = delta(&b, kf, level);
        let l2 = grid.l2_norm(&dl);
        let tol = 1e-12 * (1.0 + l2);
        if l2 > delta_bound_l2(&grid, &b, level) + tol || sup_norm(&dl) > delta_bound_sup(&b, level) * (1.0 + 1e-14) {
            failures.push(format!("function bound #{s}"));
        }
        if kf.abs() <= level && l2 > delta_bound_indicator(&grid, &b, kf, level) + tol {
            failures.push(format!("indicator bound #{s}"));
        }
        let klin = r.gen_range(-1.0..1.0) * level / sup_norm(&b).max(1.0);
        if delta(&b, klin, level).iter().any(|v| *v != 0.0) {
            failures.push(format!("function exact zero #{s}"));
        }
        // Schur complement against nalgebra's spectrum
        let ns = r.gen_range(1..4);
        let ms = r.gen_range(1..3);
        let la = Mat::from_fn(ns, ns, |_, _| r.gen_range(-2.0..2.0));
        let a = SymMatrix::sym_part(&(&la * la.transpose() + Mat::identity(ns, ns) * r.gen_range(-1.0..3.0)));
        let bb = Mat::from_fn(ms, ns, |_, _| r.gen_range(-2.0..2.0));
        let lc = Mat::from_fn(ms, ms, |_, _| r.gen_range(-2.0..2.0));
        let cc = SymMatrix::sym_part(&(&lc * lc.transpose() + Mat::identity(ms, ms) * 0.2));
        let full = rdsat::lmi::linalg::block_sym(&a, &bb, &cc).unwrap().to_dense();
        let lam = lambda_min_oracle(&DMatrix::from(full));
        if lam.abs() > 1e-7 && schur_psd(&a, &bb, &cc).unwrap() != (lam > 0.0) {
            failures.push(format!("schur #{s}"));
        }
        // threshold of the scaled block
        let np = r.gen_range(1..4);
        let lp = Mat::from_fn(np, np, |_, _| r.gen_range(-1.5..1.5));
        let pt = SymMatrix::sym_part(&(&lp * lp.transpose() + Mat::identity(np, np) * 0.5));
        let kp = Mat::from_fn(1, np, |_, _| r.gen_range(-5.0..5.0));
        let cp = Mat::from_fn(1, np, |_, _| r.gen_range(-5.0..5.0));
        let lv = r.gen_range(0.2..3.0);
        if (&kp - &cp).amax() > 1e-3 {
            let astar = minimal_d(&pt, &kp, &cp, lv).unwrap().value;
            let at = |dd: f64| lambda_min_oracle(&DMatrix::from(m2_scalar(&pt, &cp, &kp, dd, lv).to_dense()));
            if !(at(astar + 1e-6) > 0.0 && at(astar - 1e-6) < 0.0) {
                failures.push(format!("threshold #{s}"));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{SAMPLES} samples per property, {} failures {:?}",
            failures.len(),
            failures.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn pointwise() -> Outcome {
    let ms = modal(paper_inputs(), 50);
    let sup = sup_norm(&ms.input_samples[0]);
    let mut worst: f64 = 0.0;
    let mut regime_ok = true;
    let mut converged = 0;
    let mut total = 0;
    for (poles, t_end, seed) in [(FAST, 30.0, 5), (SLOW, 200.0, 6)] {
        let plant = closed_loop(&ms, &poles);
        let k = plant.gain().unwrap();
        let stat = certificate(&ms, &plant);
        let pw = certify_pointwise(&ms.input_samples, LEVEL, &stat).unwrap();
        let beta = pw.beta.unwrap();
        let opts = SimOptions::new(t_end, None).unwrap();
        for z0 in interior_points(&pw.p, beta, 25, 0.1, 0.999, seed) {
            total += 1;
            let s0 = with_tail(&z0, 50, &[(3, 0.01)]);
            let p = simulate_pointwise(&ms, k, LEVEL, &s0, &opts, None).unwrap();
            let g = simulate_galerkin(&ms, k, LEVEL, &s0, &opts, None).unwrap();
            if p.classification == Classification::Converged {
                converged += 1;
            }
            for i in 0..p.times.len().min(g.times.len()) {
                let u = (k[(0, 0)] * p.states[i][0] + k[(0, 1)] * p.states[i][1]).abs();
                regime_ok &= u * sup <= LEVEL;
                for (a, b) in p.states[i].iter().zip(&g.states[i]) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
    }
    outcome(
        regime_ok && worst <= 1e-8 && converged == total,
        format!("max |pointwise - Galerkin| = {worst:.2e} in the linear regime, {converged}/{total} converged inside the beta region"),
    )
}

fn boundary() -> Outcome {
    const C: f64 = 5.0;
    const L: f64 = 2.0;
    let grid = Grid::new(L, 2001).unwrap();
    let b = grid.sample(|x| -x / L);
    let spec = OperatorSpec::new(L, Reaction::Constant(C), vec![InputShape::Sampled(b)], 1.0, grid).unwrap();
    let ms = select_n(
        &project_inputs(&analytic_spectrum(&spec, 60).unwrap(), &spec).unwrap(),
        0.0,
    )
    .unwrap();
    let one = Mat::from_element(1, 1, 1.0);
    let bp = build_boundary(&Mat::from_element(1, 1, -1.0), &one, &one, &spec, &ms, ms.n).unwrap();
    let plant = bp.plant().unwrap();
    let k = rdsat::design::place_poles(&plant, &real_poles(&[-1.0, -2.0])).unwrap();
    let cert = certify_boundary(&bp, &k, 1.0, &CertifyOptions::default()).unwrap();
    let verified = cert
        .verify(&plant.a, &plant.b, 1.0, &Tolerances::default())
        .unwrap()
        .pass;

    let (xd0, w1) = (0.15, -0.05);
    let mut s0 = vec![0.0; 1 + ms.order()];
    s0[0] = xd0;
    s0[1] = w1;
    let opts = SimOptions::new(5.0, Some(1e-3)).unwrap();
    let traj = simulate_boundary(&bp, &k, 1.0, &s0, &opts, None).unwrap();
    let fd = BoundaryFd {
        c: C,
        length: L,
        a_d: -1.0,
        b_d: 1.0,
        c_d: 1.0,
        k: vec![k[(0, 0)], k[(0, 1)]],
        level: 1.0,
        cells: 200,
    };
    let y0 = |x: f64| w1 * (2.0 / L).sqrt() * (std::f64::consts::PI * x / L).sin() + x / L * xd0;
    let mut worst: f64 = 0.0;
    for snap in fd.run(xd0, y0, 5.0, 2e-5, 0.25) {
        let i = (snap.t / opts.step()).round() as usize;
        let y = reconstruct_boundary(&bp, &traj.states[i]);
        let diff: Vec<f64> = (0..grid.points).map(|p| y[p] - interp(&snap.y, L, grid.x(p))).collect();
        worst = worst.max(grid.l2_norm(&diff));
    }
    outcome(
        verified && worst < 1e-3,
        format!("max L2 gap to the direct solution {worst:.2e} on [0, 5], certificate verified {verified}"),
    )
}

fn main() -> ExitCode {
    let (c6, c7) = in_region();
    let (c3, c3_expected) = published();
    let results = [
        spectrum(),
        gains(),
        c3,
        own_certificates(),
        sweeps(),
        c6,
        c7,
        saturation_suite(),
        pointwise(),
        boundary(),
    ];
    let mut unexpected = 0;
    for (i, r) in results.iter().enumerate() {
        println!(
            "criterion {:>2}: {}  {}",
            i + 1,
            if r.pass { "PASS" } else { "FAIL" },
            r.detail
        );
        let known = i == 2 && c3_expected;
        if !r.pass && !known {
            unexpected += 1;
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} criteria failed");
        ExitCode::FAILURE
    }
}
