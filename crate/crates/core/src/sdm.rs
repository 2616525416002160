//! Substructure deletion: radiation of an arbitrary contour from the FEM
//! region between it and a regular bounding contour whose exterior
//! admittance is known.
//!
//! With `n` the normal pointing away from the region, the region equation is
//!
//! ```text
//! [K − k² M − iρω B_outer D] p = −iρω B_inner v_s
//! ```
//!
//! where `v_s` is the normal velocity of the structure into the fluid.

use std::f64::consts::PI;

use faer::sparse::{SparseColMat, Triplet};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::cloning::{exterior_impedance, CloningConfig, ImpedanceMatrix};
use crate::error::{Error, Result};
use crate::fem::{assemble, dynamic_stiffness_sparse, CellSystem, FrequencyPoint, Medium};
use crate::linalg::{to_complex, CMat, Lu};
use crate::mesh::{annulus_mesh, BoundaryLoop, Mesh2D, Point2};

/// Reference pressure for SPL, 20 µPa.
pub const P_REF: f64 = 20e-6;

pub struct RadiationProblem {
    pub structure: BoundaryLoop,
    pub bounding: BoundaryLoop,
    pub region: Mesh2D,
    pub system: CellSystem,
    pub medium: Medium,
}

impl RadiationProblem {
    /// Structured region mesh with `n_layers` rings between the contours.
    pub fn new(structure: BoundaryLoop, bounding: BoundaryLoop, n_layers: usize, medium: Medium) -> Result<Self> {
        let region = annulus_mesh(&structure, &bounding, n_layers)?;
        Self::from_mesh(structure, bounding, region, medium)
    }

    /// Region mesh supplied externally; its loops must reproduce both
    /// contours node for node.
    pub fn from_mesh(structure: BoundaryLoop, bounding: BoundaryLoop, region: Mesh2D, medium: Medium) -> Result<Self> {
        medium.validate()?;
        for (name, lp) in [("inner", &structure), ("outer", &bounding)] {
            let idx = region
                .loop_nodes(name)
                .ok_or_else(|| Error::Argument(format!("region mesh has no '{name}' loop")))?;
            let same = idx.len() == lp.len() && idx.iter().zip(lp.nodes()).all(|(&i, p)| region.nodes[i] == *p);
            if !same {
                return Err(Error::Argument(format!("region loop '{name}' does not match its contour node for node")));
            }
        }
        let system = assemble(&region)?;
        Ok(Self { structure, bounding, region, system, medium })
    }

    fn check_impedance(&self, d: &ImpedanceMatrix, fp: FrequencyPoint) -> Result<()> {
        if d.fingerprint != self.bounding.fingerprint() {
            return Err(Error::Argument("bounding impedance was computed for a different contour".into()));
        }
        if (d.f - fp.f).abs() > 1e-9 * fp.f {
            return Err(Error::Argument(format!("bounding impedance is for {} Hz, solve is at {} Hz", d.f, fp.f)));
        }
        Ok(())
    }

    /// Sparse region operator `S − iρω B_outer D`.
    fn operator(&self, d: &ImpedanceMatrix, fp: FrequencyPoint) -> SparseColMat<usize, Complex64> {
        let sys = &self.system;
        let s = dynamic_stiffness_sparse(sys, fp, &self.medium);
        let b_outer = sys.b_outer.as_ref().expect("region meshes always carry an outer loop");
        let bd = to_complex(b_outer.as_ref()) * &d.d * faer::Scale(-self.medium.momentum_factor(fp.omega()));
        let n = sys.outer.len();
        let mut trips: Vec<_> = s.triplet_iter().map(|t| Triplet::new(t.row, t.col, *t.val)).collect();
        for i in 0..n {
            for j in 0..n {
                trips.push(Triplet::new(sys.outer[i], sys.outer[j], bd[(i, j)]));
            }
        }
        let m = sys.n_dofs();
        SparseColMat::try_new_from_triplets(m, m, &trips).expect("indices come from the region mesh")
    }

    fn locate_probes(&self, probes: &[Point2]) -> Result<Vec<(usize, [f64; 3])>> {
        probes
            .iter()
            .enumerate()
            .map(|(index, &p)| self.region.locate(p).ok_or(Error::ProbeOutside { index, x: p.x, y: p.y }))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExcitationKind {
    Uniform,
    AngularMode(u32),
    Nodal,
}

/// Prescribed normal velocity (m/s, into the fluid) at each structure node.
#[derive(Clone, Debug, PartialEq)]
pub struct Excitation {
    pub kind: ExcitationKind,
    pub velocity: Vec<Complex64>,
}

impl Excitation {
    pub fn uniform(structure: &BoundaryLoop, v0: f64) -> Result<Self> {
        Self::checked(ExcitationKind::Uniform, vec![Complex64::new(v0, 0.0); structure.len()], structure)
    }

    /// `v0 cos(m θ)` with `θ` the polar angle about the loop centroid.
    pub fn angular_mode(structure: &BoundaryLoop, m: u32, v0: f64) -> Result<Self> {
        let c = structure.centroid();
        let v = structure.nodes().iter().map(|&p| Complex64::new(v0 * (m as f64 * (p - c).angle()).cos(), 0.0)).collect();
        Self::checked(ExcitationKind::AngularMode(m), v, structure)
    }

    pub fn nodal(structure: &BoundaryLoop, velocity: Vec<Complex64>) -> Result<Self> {
        Self::checked(ExcitationKind::Nodal, velocity, structure)
    }

    fn checked(kind: ExcitationKind, velocity: Vec<Complex64>, structure: &BoundaryLoop) -> Result<Self> {
        if velocity.len() != structure.len() {
            return Err(Error::Argument(format!(
                "excitation has {} values for {} structure nodes",
                velocity.len(),
                structure.len()
            )));
        }
        if velocity.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Argument("excitation has non-finite entries".into()));
        }
        Ok(Self { kind, velocity })
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        Self { kind: self.kind, velocity: self.velocity.iter().map(|v| v * alpha).collect() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldSolution {
    /// Pressure at every region node, Pa.
    pub p: Vec<Complex64>,
    pub f: f64,
    pub probes: Vec<Complex64>,
}

fn interpolate(region: &Mesh2D, p: &[Complex64], at: &[(usize, [f64; 3])]) -> Vec<Complex64> {
    at.iter()
        .map(|&(e, w)| {
            let t = region.elements[e];
            p[t[0]] * w[0] + p[t[1]] * w[1] + p[t[2]] * w[2]
        })
        .collect()
}

fn solve_located(
    prob: &RadiationProblem,
    d: &ImpedanceMatrix,
    exc: &Excitation,
    at: &[(usize, [f64; 3])],
    fp: FrequencyPoint,
) -> Result<FieldSolution> {
    prob.check_impedance(d, fp)?;
    if exc.velocity.len() != prob.structure.len() {
        return Err(Error::Argument("excitation does not match the structure contour".into()));
    }
    let sys = &prob.system;
    let lu = Lu::checked_sparse(&prob.operator(d, fp), "region system", fp.f)?;
    let factor = -prob.medium.momentum_factor(fp.omega());
    let mut rhs = vec![Complex64::default(); sys.n_dofs()];
    for (a, &i) in sys.inner.iter().enumerate() {
        rhs[i] = factor * (0..sys.inner.len()).map(|b| sys.b_inner[(a, b)] * exc.velocity[b]).sum::<Complex64>();
    }
    let p = lu.solve_vec(&rhs);
    if p.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::Singular { what: "region system (non-finite solution)".into(), freq_hz: fp.f, rcond: 0.0 });
    }
    let probes = interpolate(&prob.region, &p, at);
    Ok(FieldSolution { p, f: fp.f, probes })
}

pub fn sdm_solve(
    prob: &RadiationProblem,
    d_bounding: &ImpedanceMatrix,
    exc: &Excitation,
    probes: &[Point2],
    fp: FrequencyPoint,
) -> Result<FieldSolution> {
    let at = prob.locate_probes(probes)?;
    solve_located(prob, d_bounding, exc, &at, fp)
}

/// Admittance of the structure contour seen through the region and the
/// bounding admittance: `D_s = −(iρω B_inner)⁻¹ A_ss` with `A_ss` the region
/// operator condensed onto the structure nodes.
pub fn sdm_impedance(prob: &RadiationProblem, d_bounding: &ImpedanceMatrix, fp: FrequencyPoint) -> Result<ImpedanceMatrix> {
    prob.check_impedance(d_bounding, fp)?;
    let a = prob.operator(d_bounding, fp).to_dense();
    let sys = &prob.system;
    let a_ss = crate::fem::condense_matrix(a.as_ref(), &sys.inner, fp.f)?;
    let fb = to_complex(sys.b_inner.as_ref()) * faer::Scale(prob.medium.momentum_factor(fp.omega()));
    let lu = Lu::checked(fb.as_ref(), "structure boundary mass", fp.f)?;
    let d = lu.solve(a_ss.as_ref());
    let d = CMat::from_fn(d.nrows(), d.ncols(), |i, j| -d[(i, j)]);
    let imp = ImpedanceMatrix { d, f: fp.f, fingerprint: prob.structure.fingerprint() };
    imp.check_passivity(&sys.b_inner)?;
    Ok(imp)
}

/// Sound pressure level in dB re 20 µPa.
pub fn spl(p: Complex64) -> Result<f64> {
    let a = p.norm();
    if !(a >= 1e-300) {
        return Err(Error::Domain(format!("SPL of |p| = {a:e} Pa")));
    }
    Ok(20.0 * (a / P_REF).log10())
}

/// Source of bounding-contour admittances for a sweep.
pub trait ImpedanceProvider: Sync {
    fn impedance(&self, f: f64) -> Result<ImpedanceMatrix>;
}

/// Computes each admittance with the cloning algorithm.
pub struct CloningProvider<'a> {
    pub bounding: &'a BoundaryLoop,
    pub cfg: CloningConfig,
    pub medium: Medium,
}

impl ImpedanceProvider for CloningProvider<'_> {
    fn impedance(&self, f: f64) -> Result<ImpedanceMatrix> {
        exterior_impedance(self.bounding, &self.cfg, FrequencyPoint::new(f, self.cfg.eta)?, &self.medium)
    }
}

impl<F: Fn(f64) -> Result<ImpedanceMatrix> + Sync> ImpedanceProvider for F {
    fn impedance(&self, f: f64) -> Result<ImpedanceMatrix> {
        self(f)
    }
}

#[derive(Debug)]
pub struct SweepPoint {
    pub f: f64,
    pub outcome: Result<FieldSolution>,
}

#[derive(Debug)]
pub struct SweepResult {
    /// One entry per input frequency, in input order.
    pub points: Vec<SweepPoint>,
    pub n_probes: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub f: f64,
    pub probe_id: usize,
    /// `(p, SPL)` or the error message of the frequency.
    pub value: std::result::Result<(Complex64, f64), String>,
}

impl SweepResult {
    pub fn rows(&self) -> Vec<SweepRow> {
        let mut rows = Vec::with_capacity(self.points.len() * self.n_probes);
        for pt in &self.points {
            for probe_id in 0..self.n_probes {
                let value = match &pt.outcome {
                    Ok(sol) => {
                        let p = sol.probes[probe_id];
                        spl(p).map(|l| (p, l)).map_err(|e| e.to_string())
                    }
                    Err(e) => Err(e.to_string()),
                };
                rows.push(SweepRow { f: pt.f, probe_id, value });
            }
        }
        rows
    }

    pub fn n_failed(&self) -> usize {
        self.points.iter().filter(|p| p.outcome.is_err()).count()
    }
}

/// Frequencies on `[min, max]`, linear or logarithmic spacing.
pub fn frequency_grid(min: f64, max: f64, count: usize, log: bool) -> Result<Vec<f64>> {
    if !(min > 0.0 && max >= min && max.is_finite()) || count == 0 || (count > 1 && max == min) {
        return Err(Error::Argument(format!("invalid frequency range {min}..{max} with {count} points")));
    }
    if count == 1 {
        return Ok(vec![min]);
    }
    let t = |i: usize| i as f64 / (count - 1) as f64;
    Ok((0..count)
        .map(|i| if log { min * (max / min).powf(t(i)) } else { min + (max - min) * t(i) })
        .collect())
}

/// One region solve per frequency; failures are recorded per frequency.
/// `threads == 1` runs on the calling thread in input order.
pub fn frequency_sweep(
    prob: &RadiationProblem,
    exc: &Excitation,
    frequencies: &[f64],
    probes: &[Point2],
    provider: &dyn ImpedanceProvider,
    threads: usize,
) -> Result<SweepResult> {
    for (i, &f) in frequencies.iter().enumerate() {
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::Argument(format!("frequency #{i} = {f} is not positive")));
        }
    }
    let mut sorted = frequencies.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Argument("frequencies must be distinct".into()));
    }
    if threads == 0 {
        return Err(Error::Argument("thread count must be at least 1".into()));
    }
    let at = prob.locate_probes(probes)?;
    let one = |f: f64| SweepPoint {
        f,
        outcome: (|| {
            let d = provider.impedance(f).map_err(Error::at("bounding impedance"))?;
            solve_located(prob, &d, exc, &at, FrequencyPoint::lossless(f)?).map_err(Error::at("region solve"))
        })(),
    };
    let points = if threads == 1 {
        frequencies.iter().map(|&f| one(f)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Argument(format!("thread pool: {e}")))?;
        pool.install(|| frequencies.par_iter().map(|&f| one(f)).collect())
    };
    Ok(SweepResult { points, n_probes: probes.len() })
}

/// Angular positions `2π i / count` on a loop, taken at the loop node whose
/// polar angle about the centroid is closest; convenient structure probes.
pub fn loop_probes(lp: &BoundaryLoop, count: usize) -> Vec<Point2> {
    let c = lp.centroid();
    (0..count)
        .map(|i| {
            let target = 2.0 * PI * i as f64 / count as f64;
            let gap = |p: &Point2| {
                let d = ((*p - c).angle() - target).rem_euclid(2.0 * PI);
                d.min(2.0 * PI - d)
            };
            *lp.nodes().iter().min_by(|a, b| gap(a).total_cmp(&gap(b))).expect("loops are non-empty")
        })
        .collect()
}
