//! Exterior radiation admittance of a star-shaped contour by infinite
//! substructuring.
//!
//! The unbounded exterior is tiled by cells similar to one annulus `Ω₁`
//! between the contour and its copy scaled by `g`. Because linear-triangle
//! stiffness is scale invariant while mass scales by `g²` and boundary mass by
//! `g`, the scaled cell at frequency `f` is the base cell at `g·f`. The outer
//! admittance of cell `j` is therefore the inner admittance at `g^(j+1)·f`,
//! and the admittance is obtained by stepping down a frequency ladder
//!
//! ```text
//! X(f_j) = Z11 - Z12 (Z22 + X(f_{j+1}))⁻¹ Z21,   f_j = g^j f
//! ```
//!
//! closed at the top by the quadratic solvent `Y² - QY + R = 0`, i.e. the
//! fixed point of the same recursion with `X(f_{j+1})` replaced by `X(f_j)`.
//! That closure is exact only as `k r → ∞`, which is where the ladder stops.
//! With `tail_ka = 0` the ladder is empty and the plain one-cell fixed point
//! is returned.

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fem::{assemble, condense, dynamic_stiffness, CellSystem, FrequencyPoint, Medium};
use crate::linalg::{frobenius, submatrix, to_complex, CMat, Lu};
use crate::mesh::{annulus_mesh, scale_loop, BoundaryLoop, LoopFingerprint, Mesh2D};

/// Spatial dimension `K`; the `g^(K-2)` factor of the recursion is 1 here.
pub const SPACE_DIM: usize = 2;

pub const SOLVENT_RESIDUAL_MAX: f64 = 1e-8;
pub const BASIS_CONDITION_MAX: f64 = 1e12;
const MAX_LADDER_STEPS: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CloningConfig {
    pub g: f64,
    pub n_layers: usize,
    pub eta: f64,
    /// Close the ladder once `k · r_min` reaches this value.
    pub tail_ka: f64,
    /// ... or once the next cell's radial element size would exceed `k h`.
    pub max_kh: f64,
}

impl Default for CloningConfig {
    fn default() -> Self {
        Self { g: 1.05, n_layers: 2, eta: 1e-6, tail_ka: 20.0, max_kh: 0.8 }
    }
}

impl CloningConfig {
    pub fn with_g(g: f64) -> Self {
        Self { g, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g > 1.0 && self.g.is_finite()) {
            return Err(Error::Argument(format!("similarity ratio g must exceed 1, got {}", self.g)));
        }
        if self.n_layers == 0 {
            return Err(Error::Argument("n_layers must be at least 1".into()));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::Argument(format!("eta must be non-negative, got {}", self.eta)));
        }
        if !(self.tail_ka >= 0.0 && self.tail_ka.is_finite()) || !(self.max_kh > 0.0) {
            return Err(Error::Argument("tail_ka must be >= 0 and max_kh > 0".into()));
        }
        Ok(())
    }
}

/// One cloning cell: the annulus between `lp` and `g · lp`.
pub fn build_cell(lp: &BoundaryLoop, cfg: &CloningConfig) -> Result<Mesh2D> {
    cfg.validate()?;
    let c = lp.centroid();
    if c.norm() > 1e-9 * lp.max_radius() {
        return Err(Error::Argument(format!("loop must be centred on the origin, centroid is ({}, {})", c.x, c.y)));
    }
    annulus_mesh(lp, &scale_loop(lp, cfg.g)?, cfg.n_layers)
}

#[derive(Clone, Debug)]
pub struct SolventProblem {
    pub z11: CMat,
    pub z12: CMat,
    pub z21: CMat,
    pub z22: CMat,
    pub q: CMat,
    pub r: CMat,
    pub f: f64,
}

struct ZBlocks {
    z11: CMat,
    z12: CMat,
    z21: CMat,
    z22: CMat,
}

fn z_blocks(s: &CMat, b_inner: &Mat<f64>, b_outer: &Mat<f64>, factor: Complex64, f: f64) -> Result<ZBlocks> {
    let n = b_inner.nrows();
    if b_outer.nrows() != n || s.nrows() != 2 * n {
        return Err(Error::Argument(format!(
            "cell loops need equal node counts ({} vs {})",
            n,
            b_outer.nrows()
        )));
    }
    let f1 = to_complex(b_inner.as_ref()) * faer::Scale(factor);
    let f2 = to_complex(b_outer.as_ref()) * faer::Scale(factor);
    let lu1 = Lu::checked(f1.as_ref(), "inner boundary mass", f)?;
    let lu2 = Lu::checked(f2.as_ref(), "outer boundary mass", f)?;
    let i1: Vec<usize> = (0..n).collect();
    let i2: Vec<usize> = (n..2 * n).collect();
    let blk = |r: &[usize], c: &[usize]| submatrix(s.as_ref(), r, c);
    Ok(ZBlocks {
        z11: lu1.solve(blk(&i1, &i1).as_ref()),
        z12: lu1.solve(blk(&i1, &i2).as_ref()),
        z21: lu2.solve(blk(&i2, &i1).as_ref()),
        z22: lu2.solve(blk(&i2, &i2).as_ref()),
    })
}

impl SolventProblem {
    /// From a boundary-only dynamic stiffness ordered (inner, outer) and the
    /// two boundary mass matrices; `factor` is the momentum factor.
    pub fn from_condensed(s: &CMat, b_inner: &Mat<f64>, b_outer: &Mat<f64>, factor: Complex64, f: f64) -> Result<Self> {
        let z = z_blocks(s, b_inner, b_outer, factor, f)?;
        Self::from_blocks(z.z11, z.z12, z.z21, z.z22, f)
    }

    pub fn from_blocks(z11: CMat, z12: CMat, z21: CMat, z22: CMat, f: f64) -> Result<Self> {
        let lu = Lu::checked(z12.as_ref(), "coupling block Z12", f)?;
        let q = lu.solve((&z11 + &z22).as_ref());
        let r = lu.solve(z21.as_ref());
        Ok(Self { z11, z12, z21, z22, q, r, f })
    }

    pub fn n(&self) -> usize {
        self.q.nrows()
    }
}

fn condensed_cell<'a>(sys: &'a CellSystem, fp: FrequencyPoint, medium: &Medium) -> Result<(CMat, &'a Mat<f64>)> {
    let b_outer = sys
        .b_outer
        .as_ref()
        .ok_or_else(|| Error::Argument("cell mesh has no 'outer' loop".into()))?;
    let ds = dynamic_stiffness(sys, fp, medium);
    Ok((condense(&ds, &sys.boundary_dofs())?, b_outer))
}

pub fn build_solvent_problem(sys: &CellSystem, fp: FrequencyPoint, medium: &Medium) -> Result<SolventProblem> {
    let (s, b_outer) = condensed_cell(sys, fp, medium)?;
    SolventProblem::from_condensed(&s, &sys.b_inner, b_outer, medium.momentum_factor(fp.omega()), fp.f)
}

#[derive(Clone, Debug, Default)]
pub struct SolventDiagnostics {
    pub residual: f64,
    pub spectral_radius: f64,
    /// `1 / rcond` of the selected eigenvector basis.
    pub basis_condition: f64,
    /// State-space eigenvalues strictly inside the unit circle.
    pub inside_unit_circle: usize,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct SolventSolution {
    pub y: CMat,
    pub x: CMat,
    /// The selected `n` eigenvalues, ascending by modulus.
    pub eigenvalues: Vec<Complex64>,
    /// Leading blocks of the selected state-space eigenvectors, one per column.
    pub eigenvectors: CMat,
    /// All `2n` state-space eigenvalues.
    pub spectrum: Vec<Complex64>,
    pub diagnostics: SolventDiagnostics,
}

/// `‖Y² − QY + R‖_F / (‖Q‖_F ‖Y‖_F + ‖R‖_F)`
pub fn solvent_residual(y: &CMat, q: &CMat, r: &CMat) -> f64 {
    let res = y * y - q * y + r;
    frobenius(res.as_ref()) / (frobenius(q.as_ref()) * frobenius(y.as_ref()) + frobenius(r.as_ref()))
}

/// Minimal solvent of `Y² − QY + R = 0` from the companion linearization
/// `[[0, I], [−R, Q]]`, keeping the `n` eigenvalues of smallest modulus.
pub fn solve_solvent(prob: &SolventProblem, _cfg: &CloningConfig) -> Result<SolventSolution> {
    let n = prob.n();
    let one = Complex64::new(1.0, 0.0);
    let comp = CMat::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, true) => Complex64::default(),
        (true, false) => {
            if j - n == i {
                one
            } else {
                Complex64::default()
            }
        }
        (false, true) => -prob.r[(i - n, j)],
        (false, false) => prob.q[(i - n, j - n)],
    });
    if !comp.is_all_finite() {
        return Err(Error::Eigen("non-finite companion matrix".into()));
    }
    let evd = comp.eigen().map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let spectrum: Vec<Complex64> = evd.S().column_vector().iter().copied().collect();
    let u = evd.U();

    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &b| spectrum[a].norm().total_cmp(&spectrum[b].norm()).then(a.cmp(&b)));
    let chosen = &order[..n];

    let mut diagnostics = SolventDiagnostics {
        inside_unit_circle: spectrum.iter().filter(|l| l.norm() < 1.0 - 1e-9).count(),
        ..Default::default()
    };
    if diagnostics.inside_unit_circle != n {
        diagnostics.warnings.push(format!(
            "selection ambiguity: {} of {} state-space eigenvalues inside the unit circle, kept the {n} smallest",
            diagnostics.inside_unit_circle,
            2 * n
        ));
    }
    if n > 0 && spectrum[order[n]].norm() - spectrum[order[n - 1]].norm() <= 1e-9 * spectrum[order[n]].norm() {
        diagnostics.warnings.push("selection boundary splits eigenvalues of equal modulus".into());
    }

    let eigenvalues: Vec<Complex64> = chosen.iter().map(|&c| spectrum[c]).collect();
    let v = CMat::from_fn(n, n, |i, j| u[(i, chosen[j])]);
    let v = {
        let mut v = v;
        for j in 0..n {
            let s: f64 = (0..n).map(|i| v[(i, j)].norm_sqr()).sum::<f64>().sqrt();
            if s > 0.0 {
                for i in 0..n {
                    v[(i, j)] /= s;
                }
            }
        }
        v
    };
    // Y = V Λ V⁻¹, formed as the transpose of V⁻ᵀ (V Λ)ᵀ.
    let vt = v.transpose().to_owned();
    let lu = Lu::new(vt.as_ref());
    diagnostics.basis_condition = if lu.rcond() > 0.0 { 1.0 / lu.rcond() } else { f64::INFINITY };
    if !(diagnostics.basis_condition <= BASIS_CONDITION_MAX) {
        return Err(Error::DegenerateBasis { condition: diagnostics.basis_condition });
    }
    let vl = CMat::from_fn(n, n, |i, j| v[(i, j)] * eigenvalues[j]);
    let y = lu.solve(vl.transpose()).transpose().to_owned();
    let x = &prob.z11 - &prob.z12 * &y;

    diagnostics.residual = solvent_residual(&y, &prob.q, &prob.r);
    diagnostics.spectral_radius = eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max);
    if !(diagnostics.residual < SOLVENT_RESIDUAL_MAX) {
        return Err(Error::SolventResidual { residual: diagnostics.residual });
    }
    Ok(SolventSolution { y, x, eigenvalues, eigenvectors: v, spectrum, diagnostics })
}

/// `(−Y)^cells · p1`: pressures on the boundary `cells` cells out, all cells
/// sharing one solvent.
pub fn propagate_field(p1: &[Complex64], sol: &SolventSolution, cells: usize) -> Vec<Complex64> {
    let n = p1.len();
    assert_eq!(n, sol.y.nrows(), "field length must match the solvent size");
    let mut p = p1.to_vec();
    for _ in 0..cells {
        p = (0..n).map(|i| -(0..n).map(|j| sol.y[(i, j)] * p[j]).sum::<Complex64>()).collect();
    }
    p
}

/// Map from nodal pressures on a loop to outgoing normal velocities there.
#[derive(Clone, Debug)]
pub struct ImpedanceMatrix {
    pub d: CMat,
    pub f: f64,
    pub fingerprint: LoopFingerprint,
}

impl ImpedanceMatrix {
    pub fn n(&self) -> usize {
        self.d.nrows()
    }

    /// `‖D − Dᵀ‖_F / ‖D‖_F`
    pub fn symmetry_defect(&self) -> f64 {
        let dt = self.d.transpose().to_owned();
        frobenius((&self.d - &dt).as_ref()) / frobenius(self.d.as_ref())
    }

    /// Smallest eigenvalue of the Hermitian part of `B D`, which bounds the
    /// radiated power `Re(xᴴ B D x)` from below.
    pub fn min_power_eigenvalue(&self, b: &Mat<f64>) -> Result<f64> {
        let bd = to_complex(b.as_ref()) * &self.d;
        let h = CMat::from_fn(self.n(), self.n(), |i, j| (bd[(i, j)] + bd[(j, i)].conj()) * 0.5);
        let ev = h
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        Ok(ev.into_iter().fold(f64::INFINITY, f64::min))
    }

    /// Fails when the admittance would absorb net power beyond round-off.
    pub fn check_passivity(&self, b: &Mat<f64>) -> Result<()> {
        let min = self.min_power_eigenvalue(b)?;
        let tol = 1e-8 * b.norm_l2() * frobenius(self.d.as_ref());
        if min < -tol {
            return Err(Error::Invariant(format!(
                "impedance at {} Hz is not passive (min power eigenvalue {min:e}, tolerance {tol:e})",
                self.f
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ImpedanceDetail {
    pub impedance: ImpedanceMatrix,
    /// Solvent closing the ladder at `tail_f`.
    pub tail: SolventSolution,
    pub tail_f: f64,
    pub ladder_steps: usize,
    pub boundary_mass: Mat<f64>,
}

/// Frequencies of the ladder, base frequency first and closure frequency last.
fn ladder(lp: &BoundaryLoop, cfg: &CloningConfig, fp: FrequencyPoint, medium: &Medium) -> Vec<f64> {
    let r_min = lp.min_radius();
    let h_rad = (cfg.g - 1.0) * lp.max_radius() / cfg.n_layers as f64;
    let mut fs = vec![fp.f];
    while fs.len() <= MAX_LADDER_STEPS {
        let k = 2.0 * std::f64::consts::PI * fs[fs.len() - 1] / medium.c;
        if k * r_min >= cfg.tail_ka || k * cfg.g * h_rad > cfg.max_kh {
            break;
        }
        fs.push(fs[fs.len() - 1] * cfg.g);
    }
    fs
}

pub fn exterior_impedance(lp: &BoundaryLoop, cfg: &CloningConfig, fp: FrequencyPoint, medium: &Medium) -> Result<ImpedanceMatrix> {
    exterior_impedance_detailed(lp, cfg, fp, medium).map(|d| d.impedance)
}

pub fn exterior_impedance_detailed(
    lp: &BoundaryLoop,
    cfg: &CloningConfig,
    fp: FrequencyPoint,
    medium: &Medium,
) -> Result<ImpedanceDetail> {
    cfg.validate().map_err(Error::at("config"))?;
    medium.validate().map_err(Error::at("config"))?;
    let mesh = build_cell(lp, cfg).map_err(Error::at("build_cell"))?;
    let sys = assemble(&mesh).map_err(Error::at("assemble"))?;
    let fs = ladder(lp, cfg, fp, medium);
    let at_f = |f: f64| FrequencyPoint::new(f, cfg.eta);

    let tail_f = fs[fs.len() - 1];
    let prob = build_solvent_problem(&sys, at_f(tail_f)?, medium).map_err(Error::at("build_solvent_problem"))?;
    let tail = solve_solvent(&prob, cfg).map_err(Error::at("solve_solvent"))?;
    let mut x = tail.x.clone();
    for &f in fs[..fs.len() - 1].iter().rev() {
        let step = || -> Result<CMat> {
            let fpj = at_f(f)?;
            let (s, b_outer) = condensed_cell(&sys, fpj, medium)?;
            let z = z_blocks(&s, &sys.b_inner, b_outer, medium.momentum_factor(fpj.omega()), f)?;
            let lu = Lu::checked((&z.z22 + &x).as_ref(), "ladder block Z22 + X", f)?;
            Ok(&z.z11 - &z.z12 * lu.solve(z.z21.as_ref()))
        };
        x = step().map_err(Error::at("ladder"))?;
    }

    let d = CMat::from_fn(x.nrows(), x.ncols(), |i, j| -x[(i, j)]);
    if !d.is_all_finite() {
        return Err(Error::at("exterior_impedance")(Error::Invariant("non-finite impedance".into())));
    }
    let impedance = ImpedanceMatrix { d, f: fp.f, fingerprint: lp.fingerprint() };
    impedance.check_passivity(&sys.b_inner).map_err(Error::at("exterior_impedance"))?;
    Ok(ImpedanceDetail { impedance, tail, tail_f, ladder_steps: fs.len() - 1, boundary_mass: sys.b_inner })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::circle_loop;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn scalar(v: f64) -> CMat {
        CMat::from_fn(1, 1, |_, _| c(v))
    }

    #[test]
    fn scalar_solvent_picks_small_root() {
        let prob = SolventProblem {
            z11: scalar(0.0),
            z12: scalar(1.0),
            z21: scalar(1.0),
            z22: scalar(2.5),
            q: scalar(2.5),
            r: scalar(1.0),
            f: 1.0,
        };
        let sol = solve_solvent(&prob, &CloningConfig::default()).unwrap();
        assert!((sol.y[(0, 0)] - c(0.5)).norm() < 1e-14);
        assert!(sol.diagnostics.residual < 1e-15);
        assert_eq!(sol.eigenvalues.len(), 1);
        assert!((sol.x[(0, 0)] - c(-0.5)).norm() < 1e-14);
    }

    #[test]
    fn cell_counts_and_rejections() {
        let lp = circle_loop(0.55, 32).unwrap();
        let cell = build_cell(&lp, &CloningConfig { n_layers: 1, ..Default::default() }).unwrap();
        assert_eq!((cell.nodes.len(), cell.elements.len()), (64, 64));
        for i in 0..32 {
            assert!(cell.nodes[i].cross(cell.nodes[32 + i]).abs() < 1e-15);
        }
        assert!(build_cell(&lp, &CloningConfig::with_g(0.9)).is_err());
    }

    #[test]
    fn toy_two_dof_cell_matches_hand_algebra() {
        let (a, b, d) = (3.0, -1.5, 2.0);
        let s = CMat::from_fn(2, 2, |i, j| c([[a, b], [b, d]][i][j]));
        let (b1, b2) = (0.5, 0.8);
        let fac = Complex64::new(0.0, 2.0);
        let prob = SolventProblem::from_condensed(&s, &Mat::from_fn(1, 1, |_, _| b1), &Mat::from_fn(1, 1, |_, _| b2), fac, 1.0).unwrap();
        let (z11, z12, z21, z22) = (a / (fac * b1), b / (fac * b1), b / (fac * b2), d / (fac * b2));
        assert!((prob.q[(0, 0)] - (z11 + z22) / z12).norm() < 1e-14);
        assert!((prob.r[(0, 0)] - z21 / z12).norm() < 1e-14);
    }

    #[test]
    fn propagate_scalar_power() {
        let prob = SolventProblem {
            z11: scalar(0.0),
            z12: scalar(1.0),
            z21: scalar(1.0),
            z22: scalar(2.5),
            q: scalar(2.5),
            r: scalar(1.0),
            f: 1.0,
        };
        let sol = solve_solvent(&prob, &CloningConfig::default()).unwrap();
        assert_eq!(propagate_field(&[c(1.0)], &sol, 0), vec![c(1.0)]);
        assert!((propagate_field(&[c(1.0)], &sol, 2)[0].norm() - 0.25).abs() < 1e-14);
    }
}
