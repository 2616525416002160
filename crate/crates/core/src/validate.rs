//! Analytic references: outgoing cylindrical-harmonic admittances of a
//! circle, modal projection of nodal admittance matrices, and the one point
//! source test.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::cloning::ImpedanceMatrix;
use crate::error::{Error, Result};
use crate::fem::{FrequencyPoint, Medium};
use crate::linalg::{CMat, Lu};
use crate::mesh::{BoundaryLoop, Point2};
use crate::specfun::{green_2d, green_grad_2d, hankel_out};

/// Highest order returned by [`modal_project`].
pub const MAX_MODAL_ORDER: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModalAdmittance {
    pub n: i32,
    /// Normal velocity per unit pressure, (m/s)/Pa.
    pub value: Complex64,
    pub ka: f64,
}

/// `H'_n(ka) / (i rho0 c H_n(ka))` for the outgoing mode of order `n`, with
/// the normal pointing out of the circle.
pub fn analytic_circle_admittance(n: i32, ka: f64, medium: &Medium) -> Result<ModalAdmittance> {
    if !(ka > 0.0 && ka.is_finite()) {
        return Err(Error::Domain(format!("ka must be positive, got {ka}")));
    }
    let n_abs = n.abs();
    let h = hankel_out(n_abs, ka)?;
    let hp = if n_abs == 0 { -hankel_out(1, ka)? } else { hankel_out(n_abs - 1, ka)? - h * (n_abs as f64 / ka) };
    let value = hp / (Complex64::new(0.0, medium.impedance()) * h);
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(Error::Domain(format!("admittance of order {n} overflows at ka = {ka}")));
    }
    Ok(ModalAdmittance { n, value, ka })
}

/// Centre, radius and node angles of a loop whose nodes are equally spaced
/// on a circle.
pub struct UniformCircle {
    pub centre: Point2,
    pub radius: f64,
    pub angles: Vec<f64>,
}

pub fn uniform_circle(lp: &BoundaryLoop) -> Result<UniformCircle> {
    let centre = lp.centroid();
    let rel: Vec<Point2> = lp.nodes().iter().map(|&p| p - centre).collect();
    let radius = rel.iter().map(|p| p.norm()).sum::<f64>() / rel.len() as f64;
    let n = rel.len();
    let step = 2.0 * PI / n as f64;
    let a0 = rel[0].angle();
    let sign = if lp.is_ccw() { 1.0 } else { -1.0 };
    for (j, p) in rel.iter().enumerate() {
        let want = Point2::new(radius * (a0 + sign * step * j as f64).cos(), radius * (a0 + sign * step * j as f64).sin());
        if (*p - want).norm() > 1e-9 * radius {
            return Err(Error::Argument(format!("loop is not a uniformly sampled circle (node {j})")));
        }
    }
    let angles = (0..n).map(|j| a0 + sign * step * j as f64).collect();
    Ok(UniformCircle { centre, radius, angles })
}

fn check_matches(d: &ImpedanceMatrix, lp: &BoundaryLoop) -> Result<()> {
    if d.fingerprint != lp.fingerprint() {
        return Err(Error::Argument("impedance matrix was computed for a different loop".into()));
    }
    Ok(())
}

fn mode(angles: &[f64], n: i32) -> Vec<Complex64> {
    angles.iter().map(|&t| Complex64::from_polar(1.0, n as f64 * t)).collect()
}

/// `(1/N) e_nᴴ D e_n` for `n = 0..=max_order`.
pub fn modal_project_upto(d: &ImpedanceMatrix, lp: &BoundaryLoop, medium: &Medium, max_order: usize) -> Result<Vec<ModalAdmittance>> {
    check_matches(d, lp)?;
    let circle = uniform_circle(lp)?;
    let n_nodes = lp.len();
    if max_order > n_nodes / 4 {
        return Err(Error::Argument(format!("orders above N/4 = {} alias on {n_nodes} nodes", n_nodes / 4)));
    }
    let ka = 2.0 * PI * d.f / medium.c * circle.radius;
    (0..=max_order as i32)
        .map(|n| {
            let e = mode(&circle.angles, n);
            let mut acc = Complex64::default();
            for i in 0..n_nodes {
                let de: Complex64 = (0..n_nodes).map(|j| d.d[(i, j)] * e[j]).sum();
                acc += e[i].conj() * de;
            }
            Ok(ModalAdmittance { n, value: acc / n_nodes as f64, ka })
        })
        .collect()
}

pub fn modal_project(d: &ImpedanceMatrix, lp: &BoundaryLoop, medium: &Medium) -> Result<Vec<ModalAdmittance>> {
    modal_project_upto(d, lp, medium, MAX_MODAL_ORDER.min(lp.len() / 4))
}

/// `Σ d_n e_n e_nᴴ / N` over the `N` resolvable orders `(−N/2, N/2]`.
pub fn synthesize_modal_operator(
    lp: &BoundaryLoop,
    f: f64,
    coefficient: impl Fn(i32) -> Result<Complex64>,
) -> Result<ImpedanceMatrix> {
    let circle = uniform_circle(lp)?;
    let n_nodes = lp.len();
    let lo = -((n_nodes as i32 - 1) / 2);
    let hi = n_nodes as i32 / 2;
    let mut d = CMat::zeros(n_nodes, n_nodes);
    for n in lo..=hi {
        let dn = coefficient(n)? / n_nodes as f64;
        let e = mode(&circle.angles, n);
        for i in 0..n_nodes {
            for j in 0..n_nodes {
                d[(i, j)] += dn * e[i] * e[j].conj();
            }
        }
    }
    Ok(ImpedanceMatrix { d, f, fingerprint: lp.fingerprint() })
}

/// Exact outgoing admittance operator of a uniformly sampled circle.
pub fn analytic_circle_impedance(lp: &BoundaryLoop, f: f64, medium: &Medium) -> Result<ImpedanceMatrix> {
    let ka = 2.0 * PI * f / medium.c * uniform_circle(lp)?.radius;
    synthesize_modal_operator(lp, f, |n| Ok(analytic_circle_admittance(n, ka, medium)?.value))
}

/// Green boundary data of a point source at `x0` on the loop: nodal
/// pressures and outward normal velocities.
pub fn green_boundary_data(lp: &BoundaryLoop, x0: Point2, fp: FrequencyPoint, medium: &Medium) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let k = fp.k(medium);
    let factor = medium.momentum_factor(fp.omega());
    let normals = lp.outward_normals();
    let mut p = Vec::with_capacity(lp.len());
    let mut v = Vec::with_capacity(lp.len());
    for (&x, nrm) in lp.nodes().iter().zip(&normals) {
        p.push(green_2d(x, x0, k)?);
        let g = green_grad_2d(x, x0, k)?;
        v.push((g[0] * nrm.x + g[1] * nrm.y) / factor);
    }
    Ok((p, v))
}

/// Relative ℓ² error of the boundary pressure recovered from `D p = v`
/// with exact point-source data.
pub fn ops_test(d: &ImpedanceMatrix, lp: &BoundaryLoop, x0: Point2, fp: FrequencyPoint, medium: &Medium) -> Result<f64> {
    check_matches(d, lp)?;
    if (d.f - fp.f).abs() > 1e-9 * fp.f {
        return Err(Error::Argument(format!("impedance is for {} Hz, test frequency is {} Hz", d.f, fp.f)));
    }
    if !lp.contains(x0) {
        return Err(Error::Argument(format!("source ({}, {}) is not strictly inside the loop", x0.x, x0.y)));
    }
    let (p_ex, v_ex) = green_boundary_data(lp, x0, fp, medium)?;
    let lu = Lu::checked(d.d.as_ref(), "impedance matrix", fp.f)?;
    let p = lu.solve_vec(&v_ex);
    let num: f64 = p.iter().zip(&p_ex).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = p_ex.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    Ok(num / den)
}
