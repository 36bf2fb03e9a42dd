//! Stabilizability checks and single-input pole placement for the truncated
//! plant `ż = Az + Bu`.

use nalgebra::{Complex, DMatrix};

use crate::lmi::Mat;
use crate::{Error, Result};

pub type C64 = Complex<f64>;

#[derive(Debug, Clone)]
pub struct PlantFD {
    pub a: Mat,
    pub b: Mat,
    pub k: Option<Mat>,
    pub labels: Vec<String>,
}

impl PlantFD {
    pub fn new(a: Mat, b: Mat) -> Result<Self> {
        if !a.is_square() || b.nrows() != a.nrows() {
            return Err(Error::Dimension(format!(
                "A is {}x{}, B is {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        let labels = (1..=a.nrows()).map(|j| format!("z{j}")).collect();
        Ok(Self { a, b, k: None, labels })
    }

    /// Attaches `K` after checking that `A + BK` is Hurwitz.
    pub fn with_gain(mut self, k: Mat) -> Result<Self> {
        if k.shape() != (self.m(), self.n()) {
            return Err(Error::Dimension(format!(
                "K is {}x{}, expected {}x{}",
                k.nrows(),
                k.ncols(),
                self.m(),
                self.n()
            )));
        }
        let report = hurwitz(&(&self.a + &self.b * &k))?;
        if !report.hurwitz {
            return Err(Error::Precondition(format!(
                "A + BK is not Hurwitz (spectral abscissa {:.6e})",
                report.abscissa
            )));
        }
        self.k = Some(k);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn gain(&self) -> Result<&Mat> {
        self.k
            .as_ref()
            .ok_or_else(|| Error::Precondition("plant has no gain attached".into()))
    }

    pub fn closed_loop(&self) -> Result<Mat> {
        Ok(&self.a + &self.b * self.gain()?)
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.n();
        (0..n).all(|i| (0..n).all(|j| i == j || self.a[(i, j)] == 0.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stabilizability {
    pub stabilizable: bool,
    pub diagnostic: String,
}

impl Stabilizability {
    fn yes() -> Self {
        Self {
            stabilizable: true,
            diagnostic: "stabilizable".into(),
        }
    }

    fn no(diagnostic: String) -> Self {
        Self {
            stabilizable: false,
            diagnostic,
        }
    }
}

/// Diagonal single-input plants: every `b_j ≠ 0` and distinct `λ_j`.
/// Otherwise the Hautus test on eigenvalues with nonnegative real part.
pub fn stabilizable(p: &PlantFD) -> Result<Stabilizability> {
    let n = p.n();
    if n == 0 {
        return Ok(Stabilizability::yes());
    }
    if p.is_diagonal() && p.m() == 1 {
        for j in 0..n {
            if p.b[(j, 0)] == 0.0 {
                return Ok(Stabilizability::no(format!("mode {} unreachable", j + 1)));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if p.a[(i, i)] == p.a[(j, j)] {
                    return Ok(Stabilizability::no(format!(
                        "modes {} and {} share eigenvalue {}",
                        i + 1,
                        j + 1,
                        p.a[(i, i)]
                    )));
                }
            }
        }
        return Ok(Stabilizability::yes());
    }
    let m = p.m();
    for mu in eigenvalues(&p.a)? {
        if mu.re < 0.0 {
            continue;
        }
        // real embedding of [A − μI, B]
        let mut h = DMatrix::zeros(2 * n, 2 * (n + m));
        for i in 0..n {
            for j in 0..n {
                let x = p.a[(i, j)] - if i == j { mu.re } else { 0.0 };
                let y = if i == j { -mu.im } else { 0.0 };
                h[(i, j)] = x;
                h[(i, n + m + j)] = -y;
                h[(n + i, j)] = y;
                h[(n + i, n + m + j)] = x;
            }
            for k in 0..m {
                h[(i, n + k)] = p.b[(i, k)];
                h[(n + i, n + m + n + k)] = p.b[(i, k)];
            }
        }
        let sv = h.singular_values();
        let smax = sv.iter().fold(0.0_f64, |a, v| a.max(*v));
        let rank = sv.iter().filter(|v| **v > 1e-9 * smax.max(1.0)).count();
        if rank < 2 * n {
            return Ok(Stabilizability::no(format!(
                "eigenvalue {:.6}{:+.6}i is uncontrollable",
                mu.re, mu.im
            )));
        }
    }
    Ok(Stabilizability::yes())
}

/// Parses a comma-separated pole list such as `-1, -0.5+2i, -0.5-2i`.
pub fn parse_poles(text: &str) -> Result<Vec<C64>> {
    let poles = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse_complex)
        .collect::<Result<Vec<_>>>()?;
    check_conjugate_closed(&poles)?;
    Ok(poles)
}

fn parse_complex(s: &str) -> Result<C64> {
    let bad = || Error::Parse(format!("cannot read pole '{s}'"));
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if let Some(body) = t.strip_suffix(['i', 'j']) {
        // split at the last sign that is not an exponent sign or the leading one
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
        let (re, im) = match split {
            Some(i) => (&body[..i], &body[i..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => "1",
            "-" => "-1",
            other => other,
        };
        Ok(C64::new(re.parse().map_err(|_| bad())?, im.parse().map_err(|_| bad())?))
    } else {
        Ok(C64::new(t.parse().map_err(|_| bad())?, 0.0))
    }
}

/// Every non-real pole must be matched by its conjugate with equal
/// multiplicity.
pub fn check_conjugate_closed(poles: &[C64]) -> Result<()> {
    let mut unmatched: Vec<C64> = poles.iter().copied().filter(|p| p.im != 0.0).collect();
    while let Some(p) = unmatched.pop() {
        match unmatched.iter().position(|q| *q == p.conj()) {
            Some(i) => {
                unmatched.swap_remove(i);
            }
            None => {
                return Err(Error::InvalidInput(format!(
                    "pole {}{:+}i has no conjugate partner",
                    p.re, p.im
                )))
            }
        }
    }
    Ok(())
}

/// Monic polynomial with the given roots, ascending coefficients.
pub fn poly_from_roots(roots: &[C64]) -> Vec<f64> {
    let mut c = vec![C64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![C64::new(0.0, 0.0); c.len() + 1];
        for (i, ci) in c.iter().enumerate() {
            next[i + 1] += ci;
            next[i] -= ci * r;
        }
        c = next;
    }
    c.iter().map(|z| z.re).collect()
}

/// Gain `K` (1×n) with `σ(A + BK)` equal to the requested poles.
///
/// Diagonal `A` uses the closed form
/// `k_i = −∏_j(λ_i − p_j) / (b_i ∏_{j≠i}(λ_i − λ_j))`; other plants use
/// Ackermann's formula.
pub fn place_poles(p: &PlantFD, poles: &[C64]) -> Result<Mat> {
    let n = p.n();
    if p.m() != 1 {
        return Err(Error::InvalidInput(
            "pole placement supports a single input only".into(),
        ));
    }
    if poles.len() != n {
        return Err(Error::InvalidInput(format!(
            "{} poles requested for {n} states",
            poles.len()
        )));
    }
    if let Some(q) = poles.iter().find(|q| !(q.re < 0.0)) {
        return Err(Error::InvalidInput(format!(
            "pole {}{:+}i is not in the open left half-plane",
            q.re, q.im
        )));
    }
    check_conjugate_closed(poles)?;
    let st = stabilizable(p)?;
    if !st.stabilizable {
        return Err(Error::NotStabilizable(st.diagnostic));
    }
    let k = if p.is_diagonal() {
        let lam: Vec<f64> = (0..n).map(|i| p.a[(i, i)]).collect();
        Mat::from_fn(1, n, |_, i| {
            let mut num = C64::new(1.0, 0.0);
            for q in poles {
                num *= C64::new(lam[i], 0.0) - q;
            }
            let mut den = p.b[(i, 0)];
            for (j, lj) in lam.iter().enumerate() {
                if j != i {
                    den *= lam[i] - lj;
                }
            }
            -num.re / den
        })
    } else {
        ackermann(&p.a, &p.b, poles)?
    };
    let achieved = char_poly(&(&p.a + &p.b * &k));
    let target = poly_from_roots(poles);
    let scale = target.iter().fold(1.0_f64, |m, c| m.max(c.abs()));
    for (a, t) in achieved.iter().zip(&target) {
        if (a - t).abs() > 1e-8 * scale {
            return Err(Error::Numeric(format!(
                "placed characteristic polynomial {achieved:?} misses target {target:?}"
            )));
        }
    }
    Ok(k)
}

fn ackermann(a: &Mat, b: &Mat, poles: &[C64]) -> Result<Mat> {
    let n = a.nrows();
    let mut ctrb = Mat::zeros(n, n);
    let mut col = b.column(0).into_owned();
    for j in 0..n {
        ctrb.set_column(j, &col);
        col = a * col;
    }
    let inv = ctrb
        .try_inverse()
        .ok_or_else(|| Error::NotStabilizable("controllability matrix is singular".into()))?;
    let coeffs = poly_from_roots(poles);
    let mut phi = Mat::zeros(n, n);
    let mut power = Mat::identity(n, n);
    for c in &coeffs {
        phi += &power * *c;
        power = &power * a;
    }
    let last = Mat::from_fn(1, n, |_, j| inv[(n - 1, j)]);
    Ok(-(last * phi))
}

/// Characteristic polynomial `det(sI − M)` by Faddeev–LeVerrier, ascending
/// coefficients with leading 1.
pub fn char_poly(m: &Mat) -> Vec<f64> {
    let n = m.nrows();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut mk = Mat::zeros(n, n);
    for k in 1..=n {
        mk = m * &mk;
        for i in 0..n {
            mk[(i, i)] += c[n - k + 1];
        }
        c[n - k] = -(m * &mk).trace() / k as f64;
    }
    c
}

/// Roots of a polynomial given by ascending coefficients.
pub fn poly_roots(coeffs: &[f64]) -> Result<Vec<C64>> {
    let mut c = coeffs.to_vec();
    while c.len() > 1 && *c.last().unwrap() == 0.0 {
        c.pop();
    }
    let deg = c.len() - 1;
    let lead = c[deg];
    let c: Vec<f64> = c.iter().map(|v| v / lead).collect();
    match deg {
        0 => Ok(Vec::new()),
        1 => Ok(vec![C64::new(-c[0], 0.0)]),
        2 => {
            let (b, q) = (c[1], c[0]);
            let disc = b * b - 4.0 * q;
            if disc >= 0.0 {
                // avoid cancellation
                let s = -0.5 * (b + b.signum() * disc.sqrt());
                let s = if s == 0.0 { -0.5 * disc.sqrt() } else { s };
                let r1 = s;
                let r2 = if s != 0.0 { q / s } else { 0.5 * disc.sqrt() };
                Ok(vec![C64::new(r1, 0.0), C64::new(r2, 0.0)])
            } else {
                let im = 0.5 * (-disc).sqrt();
                Ok(vec![C64::new(-0.5 * b, im), C64::new(-0.5 * b, -im)])
            }
        }
        _ => aberth(&c),
    }
}

/// Aberth–Ehrlich simultaneous iteration on a monic polynomial.
fn aberth(c: &[f64]) -> Result<Vec<C64>> {
    let deg = c.len() - 1;
    let eval = |z: C64| -> (C64, C64) {
        let mut p = C64::new(c[deg], 0.0);
        let mut dp = C64::new(0.0, 0.0);
        for i in (0..deg).rev() {
            dp = dp * z + p;
            p = p * z + c[i];
        }
        (p, dp)
    };
    let radius = 1.0 + c[..deg].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut z: Vec<C64> = (0..deg)
        .map(|k| C64::from_polar(0.5 * radius, 0.4 + 2.0 * std::f64::consts::PI * k as f64 / deg as f64))
        .collect();
    for _ in 0..500 {
        let mut max_step = 0.0_f64;
        for i in 0..deg {
            let (p, dp) = eval(z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let mut sum = C64::new(0.0, 0.0);
            for j in 0..deg {
                if j != i {
                    sum += (z[i] - z[j]).inv();
                }
            }
            let step = ratio / (C64::new(1.0, 0.0) - ratio * sum);
            if step.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
            }
        }
        if max_step < 1e-15 {
            break;
        }
    }
    if z.iter().any(|r| !r.is_finite()) {
        return Err(Error::Numeric("polynomial root iteration diverged".into()));
    }
    Ok(z)
}

pub fn eigenvalues(m: &Mat) -> Result<Vec<C64>> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "{}x{} matrix has no spectrum",
            m.nrows(),
            m.ncols()
        )));
    }
    poly_roots(&char_poly(m))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HurwitzReport {
    pub hurwitz: bool,
    /// Largest real part of the spectrum.
    pub abscissa: f64,
}

pub fn hurwitz(m: &Mat) -> Result<HurwitzReport> {
    let abscissa = eigenvalues(m)?.iter().fold(f64::NEG_INFINITY, |a, z| a.max(z.re));
    Ok(HurwitzReport {
        hurwitz: abscissa < 0.0,
        abscissa,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn paper_plant() -> PlantFD {
        let a = Mat::from_row_slice(2, 2, &[10.0 - PI * PI / 4.0, 0.0, 0.0, 10.0 - PI * PI]);
        PlantFD::new(a, Mat::from_row_slice(2, 1, &[1.0, 1.0])).unwrap()
    }

    fn real(v: &[f64]) -> Vec<C64> {
        v.iter().map(|x| C64::new(*x, 0.0)).collect()
    }

    #[test]
    fn paper_gains() {
        let k = place_poles(&paper_plant(), &real(&[-1.0, -1.0])).unwrap();
        assert!((k[(0, 0)] + 9.835618).abs() < 1e-5 && (k[(0, 1)] - 0.1726235).abs() < 1e-5);
        let k = place_poles(&paper_plant(), &real(&[-0.1, -0.2])).unwrap();
        assert!((k[(0, 0)] + 7.9732782).abs() < 1e-5 && (k[(0, 1)] - 0.0102837).abs() < 1e-5);
    }

    #[test]
    fn scalar_gain() {
        let p = PlantFD::new(Mat::from_element(1, 1, 1.0), Mat::from_element(1, 1, 1.0)).unwrap();
        assert_eq!(place_poles(&p, &real(&[-1.0])).unwrap()[(0, 0)], -2.0);
    }

    #[test]
    fn stabilizability_cases() {
        assert!(stabilizable(&paper_plant()).unwrap().stabilizable);
        let mut p = paper_plant();
        p.b[(0, 0)] = 0.0;
        let st = stabilizable(&p).unwrap();
        assert!(!st.stabilizable);
        assert_eq!(st.diagnostic, "mode 1 unreachable");
        let p = PlantFD::new(Mat::from_diagonal_element(2, 2, 3.0), Mat::from_element(2, 1, 1.0)).unwrap();
        assert!(!stabilizable(&p).unwrap().stabilizable);
        assert!(matches!(
            place_poles(&p, &real(&[-1.0, -2.0])),
            Err(Error::NotStabilizable(_))
        ));
    }

    #[test]
    fn hautus_on_nondiagonal() {
        // uncontrollable unstable mode hidden behind a coordinate change
        let a = Mat::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 2.0]);
        let b = Mat::from_row_slice(2, 1, &[1.0, 0.0]);
        assert!(!stabilizable(&PlantFD::new(a.clone(), b).unwrap()).unwrap().stabilizable);
        let b = Mat::from_row_slice(2, 1, &[0.0, 1.0]);
        let p = PlantFD::new(a, b).unwrap();
        assert!(stabilizable(&p).unwrap().stabilizable);
        let k = place_poles(&p, &real(&[-1.0, -3.0])).unwrap();
        let cp = char_poly(&(&p.a + &p.b * &k));
        assert!((cp[0] - 3.0).abs() < 1e-10 && (cp[1] - 4.0).abs() < 1e-10);
    }

    #[test]
    fn complex_pairs() {
        let poles = parse_poles("-1+2i, -1-2i, -3").unwrap();
        assert_eq!(poles[0], C64::new(-1.0, 2.0));
        assert!(parse_poles("-1+2i, -3").is_err());
        assert_eq!(parse_poles("-2.5e-1").unwrap(), vec![C64::new(-0.25, 0.0)]);
        let a = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let p = PlantFD::new(a, Mat::from_element(3, 1, 1.0)).unwrap();
        let k = place_poles(&p, &poles).unwrap();
        let mut ev = eigenvalues(&(&p.a + &p.b * &k)).unwrap();
        ev.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap().then(x.im.partial_cmp(&y.im).unwrap()));
        assert!((ev[0] - C64::new(-3.0, 0.0)).norm() < 1e-8);
        assert!((ev[1] - C64::new(-1.0, -2.0)).norm() < 1e-8);
    }

    #[test]
    fn hurwitz_examples() {
        let r = hurwitz(&Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, -2.0]))).unwrap();
        assert!(r.hurwitz && (r.abscissa + 1.0).abs() < 1e-14);
        assert!(!hurwitz(&Mat::from_element(1, 1, 0.1)).unwrap().hurwitz);
        let p = paper_plant();
        let k = place_poles(&p, &real(&[-1.0, -1.0])).unwrap();
        let r = hurwitz(&(&p.a + &p.b * &k)).unwrap();
        assert!(r.hurwitz && (r.abscissa + 1.0).abs() < 1e-6);
    }

    #[test]
    fn gain_attachment_checks_closed_loop() {
        assert!(paper_plant().with_gain(Mat::zeros(1, 2)).is_err());
        let k = place_poles(&paper_plant(), &real(&[-1.0, -2.0])).unwrap();
        assert!(paper_plant().with_gain(k).is_ok());
    }
}
