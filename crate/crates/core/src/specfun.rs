//! Integer-order Bessel functions of real argument and the free-field Green's
//! function of the 2D Helmholtz operator.
//!
//! Time convention is `e^{-iωt}` throughout the crate, so the outgoing radial
//! solution is `H_n^{(1)} = J_n + i Y_n` and the free-field Green's function is
//! `(i/4) H_0^{(1)}(k r)`.
//!
//! Evaluation routes:
//! - `x <= 1`: ascending power series for `J_n`, `Y_0` and `Y_1`;
//! - `1 < x < 25`: Miller backward recurrence for `J_n`, Neumann series for
//!   `Y_0`, `Y_1`;
//! - `x >= 25`: Hankel asymptotic expansion for orders 0 and 1.
//!
//! Higher orders of `Y` always come from forward recurrence, which is stable
//! for the second kind. Higher orders of `J` use forward recurrence only in
//! the asymptotic branch and only while `n < x`.

use std::f64::consts::{FRAC_2_PI, FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mesh::Point2;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Upper end of the ascending-series branch.
pub const SERIES_LIMIT: f64 = 1.0;
/// Lower end of the asymptotic branch.
pub const ASYMPTOTIC_LIMIT: f64 = 25.0;

/// Minimum source-receiver distance accepted by the Green's function.
pub const GREEN_MIN_DISTANCE: f64 = 1e-12;

fn check_args(n: i32, x: f64) -> Result<()> {
    if n < 0 {
        return Err(Error::Domain(format!("negative order n = {n}")));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("argument must be positive and finite, got x = {x}")));
    }
    Ok(())
}

fn finite(value: f64, what: &str, n: i32, x: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain(format!("{what}_{n}({x:e}) overflows")))
    }
}

/// Bessel function of the first kind `J_n(x)`.
pub fn bessel_j(n: i32, x: f64) -> Result<f64> {
    check_args(n, x)?;
    let n = n as usize;
    let value = if x <= SERIES_LIMIT {
        j_series(n, x)
    } else if x < ASYMPTOTIC_LIMIT || (n as f64) >= x {
        miller_j(x, n)[n]
    } else {
        let (j0, j1) = (asymptotic(0, x).0, asymptotic(1, x).0);
        forward(j0, j1, n, x)
    };
    finite(value, "J", n as i32, x)
}

/// Bessel function of the second kind `Y_n(x)`.
pub fn bessel_y(n: i32, x: f64) -> Result<f64> {
    check_args(n, x)?;
    let n = n as usize;
    let (y0, y1) = if x <= SERIES_LIMIT {
        (y_series(0, x), y_series(1, x))
    } else if x < ASYMPTOTIC_LIMIT {
        neumann_y01(x)
    } else {
        (asymptotic(0, x).1, asymptotic(1, x).1)
    };
    let value = forward(y0, y1, n, x);
    finite(value, "Y", n as i32, x)
}

/// Outgoing cylindrical Hankel function `H_n^{(1)}(x) = J_n(x) + i Y_n(x)`.
pub fn hankel_out(n: i32, x: f64) -> Result<Complex64> {
    Ok(Complex64::new(bessel_j(n, x)?, bessel_y(n, x)?))
}

fn green_distance(x: Point2, x0: Point2, k: f64) -> Result<(Point2, f64)> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Domain(format!("wavenumber must be positive, got k = {k}")));
    }
    let d = x - x0;
    let r = d.norm();
    if !(r >= GREEN_MIN_DISTANCE) {
        return Err(Error::Singularity(format!(
            "Green's function evaluated at distance {r:e} m from its source"
        )));
    }
    Ok((d, r))
}

/// Free-field Green's function `G(x, x0) = (i/4) H_0^{(1)}(k |x - x0|)`.
pub fn green_2d(x: Point2, x0: Point2, k: f64) -> Result<Complex64> {
    let (_, r) = green_distance(x, x0, k)?;
    Ok(Complex64::new(0.0, 0.25) * hankel_out(0, k * r)?)
}

/// Gradient of [`green_2d`] with respect to the receiver point `x`.
pub fn green_grad_2d(x: Point2, x0: Point2, k: f64) -> Result<[Complex64; 2]> {
    let (d, r) = green_distance(x, x0, k)?;
    let radial = Complex64::new(0.0, -0.25 * k) * hankel_out(1, k * r)?;
    Ok([radial * (d.x / r), radial * (d.y / r)])
}

/// `C_{k+1} = (2k/x) C_k - C_{k-1}` run upward from orders 0 and 1.
fn forward(c0: f64, c1: f64, n: usize, x: f64) -> f64 {
    match n {
        0 => c0,
        1 => c1,
        _ => {
            let (mut prev, mut cur) = (c0, c1);
            for k in 1..n {
                let next = (2.0 * k as f64 / x) * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

fn j_series(n: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for j in 1..=n {
        term *= half / j as f64;
    }
    let q = -half * half;
    let mut sum = term;
    for k in 1..200 {
        term *= q / (k as f64 * (n + k) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Ascending series of `Y_n` for `n` in {0, 1}.
fn y_series(n: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    let log_term = FRAC_2_PI * half.ln() * j_series(n, x);
    // finite part: -(1/pi) sum_{k<n} (n-k-1)!/k! (x/2)^{2k-n}
    let finite_part = if n == 1 { -1.0 / (PI * half) } else { 0.0 };
    // psi(m + 1) = -gamma + H_m
    let psi = |m: usize| -> f64 { -EULER_GAMMA + (1..=m).map(|j| 1.0 / j as f64).sum::<f64>() };
    let mut coeff = if n == 1 { half } else { 1.0 };
    let q = -half * half;
    let mut sum = 0.0;
    for k in 0..200 {
        if k > 0 {
            coeff *= q / (k as f64 * (n + k) as f64);
        }
        let term = (psi(k) + psi(n + k)) * coeff;
        sum += term;
        if k > 2 && term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    finite_part + log_term - sum / PI
}

/// Normalized Miller backward recurrence, returning `J_0 ..= J_m` for a start
/// order `m >= nmax` that depends on `x`.
fn miller_j(x: f64, nmax: usize) -> Vec<f64> {
    let top = (nmax as f64).max(x);
    let mut m = (top + 30.0 + 2.0 * top.sqrt()).ceil() as usize;
    m += m % 2;
    let mut vals = vec![0.0; m + 1];
    let mut next = 0.0;
    let mut cur = 1e-30;
    vals[m] = cur;
    for k in (1..=m).rev() {
        let prev = (2.0 * k as f64 / x) * cur - next;
        next = cur;
        cur = prev;
        vals[k - 1] = cur;
        if cur.abs() > 1e250 {
            for v in &mut vals[k - 1..] {
                *v *= 1e-250;
            }
            cur *= 1e-250;
            next *= 1e-250;
        }
    }
    let norm = vals[0] + 2.0 * vals.iter().skip(2).step_by(2).sum::<f64>();
    for v in &mut vals {
        *v /= norm;
    }
    vals
}

fn neumann_y01(x: f64) -> (f64, f64) {
    let j = miller_j(x, 1);
    let lg = (0.5 * x).ln() + EULER_GAMMA;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut sign = -1.0;
    let mut k = 1;
    while 2 * k + 1 < j.len() {
        let kf = k as f64;
        s0 += sign * j[2 * k] / kf;
        s1 += sign * (2.0 * kf + 1.0) / (kf * (kf + 1.0)) * j[2 * k + 1];
        sign = -sign;
        k += 1;
    }
    let y0 = FRAC_2_PI * (lg * j[0] - 2.0 * s0);
    let y1 = FRAC_2_PI * ((lg - 1.0) * j[1] - j[0] / x - s1);
    (y0, y1)
}

/// Hankel asymptotic expansion, returns `(J_nu(x), Y_nu(x))`.
fn asymptotic(nu: u32, x: f64) -> (f64, f64) {
    let mu = 4.0 * (nu * nu) as f64;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..120 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        if term.abs() > last {
            break;
        }
        last = term.abs();
        // P collects the even terms with alternating sign, Q the odd ones
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let phase = (2 * nu + 1) as f64 * FRAC_PI_4;
    let (sx, cx) = x.sin_cos();
    let (sp, cp) = phase.sin_cos();
    let cos_chi = cx * cp + sx * sp;
    let sin_chi = sx * cp - cx * sp;
    let amp = (FRAC_2_PI / x).sqrt();
    (amp * (p * cos_chi - q * sin_chi), amp * (p * sin_chi + q * cos_chi))
}
