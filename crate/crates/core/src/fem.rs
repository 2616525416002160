//! Linear-triangle Helmholtz assembly, boundary coupling matrices and static
//! condensation.

use std::f64::consts::PI;

use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, MatRef};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{submatrix, CMat, Lu};
use crate::mesh::{Mesh2D, Point2};

pub const MIN_ELEMENT_AREA: f64 = 1e-14;
pub const MIN_EDGE_LENGTH: f64 = 1e-14;

/// Fluid properties. Time dependence is `exp(-i omega t)` throughout.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Medium {
    pub rho0: f64,
    pub c: f64,
}

impl Default for Medium {
    /// Air at 20 °C.
    fn default() -> Self {
        Self { rho0: 1.204, c: 343.0 }
    }
}

impl Medium {
    pub fn new(rho0: f64, c: f64) -> Result<Self> {
        let m = Self { rho0, c };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho0 > 0.0 && self.rho0.is_finite() && self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Argument(format!("medium needs rho0 > 0 and c > 0, got {self:?}")));
        }
        Ok(())
    }

    /// Factor linking normal velocity to the normal pressure gradient,
    /// `dp/dn = i rho0 omega v_n`. Every place that converts between the two
    /// goes through here.
    pub fn momentum_factor(&self, omega: f64) -> Complex64 {
        Complex64::new(0.0, self.rho0 * omega)
    }

    /// Characteristic impedance `rho0 c`.
    pub fn impedance(&self) -> f64 {
        self.rho0 * self.c
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyPoint {
    pub f: f64,
    /// Artificial dissipation; the effective wavenumber is `k (1 + i eta)`.
    pub eta: f64,
}

impl FrequencyPoint {
    pub fn new(f: f64, eta: f64) -> Result<Self> {
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::Argument(format!("frequency must be positive and finite, got {f}")));
        }
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::Argument(format!("eta must be non-negative, got {eta}")));
        }
        Ok(Self { f, eta })
    }

    pub fn lossless(f: f64) -> Result<Self> {
        Self::new(f, 0.0)
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.f
    }

    pub fn k(&self, medium: &Medium) -> f64 {
        self.omega() / medium.c
    }

    pub fn k_eff(&self, medium: &Medium) -> Complex64 {
        Complex64::new(1.0, self.eta) * self.k(medium)
    }
}

fn tri_area_checked(p: [Point2; 3]) -> Result<f64> {
    let area = 0.5 * (p[1] - p[0]).cross(p[2] - p[0]);
    if !(area.abs() >= MIN_ELEMENT_AREA) {
        return Err(Error::Element { index: 0, message: format!("triangle area {area:e} below {MIN_ELEMENT_AREA:e}") });
    }
    Ok(area.abs())
}

/// `∫ ∇N_i · ∇N_j dΩ` for the linear triangle.
pub fn tri_stiffness(p0: Point2, p1: Point2, p2: Point2) -> Result<[[f64; 3]; 3]> {
    let p = [p0, p1, p2];
    let area = tri_area_checked(p)?;
    let b = [p1.y - p2.y, p2.y - p0.y, p0.y - p1.y];
    let c = [p2.x - p1.x, p0.x - p2.x, p1.x - p0.x];
    let mut ke = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            ke[i][j] = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
        }
    }
    Ok(ke)
}

/// Consistent mass `∫ N_i N_j dΩ`.
pub fn tri_mass(p0: Point2, p1: Point2, p2: Point2) -> Result<[[f64; 3]; 3]> {
    let area = tri_area_checked([p0, p1, p2])?;
    let mut me = [[area / 12.0; 3]; 3];
    for (i, row) in me.iter_mut().enumerate() {
        row[i] = area / 6.0;
    }
    Ok(me)
}

/// Boundary mass `∫ N_i N_j dΓ` on a straight edge.
pub fn edge_mass(p0: Point2, p1: Point2) -> Result<[[f64; 2]; 2]> {
    let h = (p1 - p0).norm();
    if !(h >= MIN_EDGE_LENGTH) {
        return Err(Error::Argument(format!("degenerate edge of length {h:e}")));
    }
    Ok([[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]])
}

/// Assembled matrices of a mesh with one or two coupled loops.
#[derive(Clone, Debug)]
pub struct CellSystem {
    pub stiffness: SparseColMat<usize, f64>,
    pub mass: SparseColMat<usize, f64>,
    /// Boundary mass of the "inner" loop, indexed in loop order.
    pub b_inner: Mat<f64>,
    /// Boundary mass of the "outer" loop, if the mesh has one.
    pub b_outer: Option<Mat<f64>>,
    /// Global node indices of each loop, in loop order.
    pub inner: Vec<usize>,
    pub outer: Vec<usize>,
    pub interior: Vec<usize>,
}

impl CellSystem {
    pub fn n_dofs(&self) -> usize {
        self.stiffness.nrows()
    }

    /// Inner dofs followed by outer dofs.
    pub fn boundary_dofs(&self) -> Vec<usize> {
        self.inner.iter().chain(&self.outer).copied().collect()
    }
}

fn loop_mass(mesh: &Mesh2D, idx: &[usize]) -> Result<Mat<f64>> {
    let n = idx.len();
    let mut b = Mat::<f64>::zeros(n, n);
    for a in 0..n {
        let c = (a + 1) % n;
        let me = edge_mass(mesh.nodes[idx[a]], mesh.nodes[idx[c]])?;
        b[(a, a)] += me[0][0];
        b[(a, c)] += me[0][1];
        b[(c, a)] += me[1][0];
        b[(c, c)] += me[1][1];
    }
    Ok(b)
}

pub fn assemble(mesh: &Mesh2D) -> Result<CellSystem> {
    let n = mesh.nodes.len();
    let inner = mesh
        .loop_nodes("inner")
        .ok_or_else(|| Error::Argument("mesh has no 'inner' loop".into()))?
        .to_vec();
    let outer = mesh.loop_nodes("outer").map(<[usize]>::to_vec).unwrap_or_default();

    let mut kt = Vec::with_capacity(9 * mesh.elements.len());
    let mut mt = Vec::with_capacity(9 * mesh.elements.len());
    for (e, tri) in mesh.elements.iter().enumerate() {
        let p = tri.map(|i| mesh.nodes[i]);
        let relabel = |err: Error| match err {
            Error::Element { message, .. } => Error::Element { index: e, message },
            other => other,
        };
        let ke = tri_stiffness(p[0], p[1], p[2]).map_err(relabel)?;
        let me = tri_mass(p[0], p[1], p[2]).map_err(relabel)?;
        for a in 0..3 {
            for b in 0..3 {
                kt.push(Triplet::new(tri[a], tri[b], ke[a][b]));
                mt.push(Triplet::new(tri[a], tri[b], me[a][b]));
            }
        }
    }
    let build = |t: &[Triplet<usize, usize, f64>]| {
        SparseColMat::try_new_from_triplets(n, n, t).map_err(|e| Error::Invariant(format!("sparse assembly: {e:?}")))
    };
    let stiffness = build(&kt)?;
    let mass = build(&mt)?;

    let b_inner = loop_mass(mesh, &inner)?;
    let b_outer = if outer.is_empty() { None } else { Some(loop_mass(mesh, &outer)?) };

    let mut on_loop = vec![false; n];
    for &i in inner.iter().chain(&outer) {
        on_loop[i] = true;
    }
    let interior = (0..n).filter(|&i| !on_loop[i]).collect();
    Ok(CellSystem { stiffness, mass, b_inner, b_outer, inner, outer, interior })
}

/// Dense `S = K - (k (1 + i eta))^2 M` at one frequency.
#[derive(Clone, Debug)]
pub struct DynamicStiffness {
    pub s: CMat,
    pub f: f64,
}

pub fn dynamic_stiffness(sys: &CellSystem, fp: FrequencyPoint, medium: &Medium) -> DynamicStiffness {
    let n = sys.n_dofs();
    let k2 = fp.k_eff(medium).powi(2);
    let mut s = CMat::zeros(n, n);
    for t in sys.stiffness.triplet_iter() {
        s[(t.row, t.col)] += Complex64::new(*t.val, 0.0);
    }
    for t in sys.mass.triplet_iter() {
        s[(t.row, t.col)] -= k2 * *t.val;
    }
    DynamicStiffness { s, f: fp.f }
}

/// Sparse dynamic stiffness; same values as [`dynamic_stiffness`].
pub fn dynamic_stiffness_sparse(sys: &CellSystem, fp: FrequencyPoint, medium: &Medium) -> SparseColMat<usize, Complex64> {
    let k2 = fp.k_eff(medium).powi(2);
    let trips: Vec<_> = sys
        .stiffness
        .triplet_iter()
        .map(|t| Triplet::new(t.row, t.col, Complex64::new(*t.val, 0.0)))
        .chain(sys.mass.triplet_iter().map(|t| Triplet::new(t.row, t.col, -k2 * *t.val)))
        .collect();
    let n = sys.n_dofs();
    SparseColMat::try_new_from_triplets(n, n, &trips).expect("indices come from a valid sparse matrix")
}

/// Schur complement of `ds` onto `keep` (in the given order).
pub fn condense(ds: &DynamicStiffness, keep: &[usize]) -> Result<CMat> {
    condense_matrix(ds.s.as_ref(), keep, ds.f)
}

pub fn condense_matrix(s: MatRef<'_, Complex64>, keep: &[usize], freq_hz: f64) -> Result<CMat> {
    let n = s.nrows();
    let mut kept = vec![false; n];
    for &i in keep {
        if i >= n || kept[i] {
            return Err(Error::Argument(format!("keep set has invalid or repeated index {i}")));
        }
        kept[i] = true;
    }
    let rest: Vec<usize> = (0..n).filter(|&i| !kept[i]).collect();
    let skk = submatrix(s, keep, keep);
    if rest.is_empty() {
        return Ok(skk);
    }
    let scc = submatrix(s, &rest, &rest);
    let sck = submatrix(s, &rest, keep);
    let skc = submatrix(s, keep, &rest);
    let lu = Lu::checked(scc.as_ref(), "interior block", freq_hz)?;
    Ok(skk - skc * lu.solve(sck.as_ref()))
}

/// Smallest eigenvalue of `K x = λ M x` with `x = 0` on `fixed`, by inverse
/// iteration with a Rayleigh quotient.
pub fn dirichlet_ground_eigenvalue(sys: &CellSystem, fixed: &[usize]) -> Result<f64> {
    let n = sys.n_dofs();
    let mut map = vec![usize::MAX; n];
    let mut is_fixed = vec![false; n];
    for &i in fixed {
        is_fixed[i] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&i| !is_fixed[i]).collect();
    for (a, &i) in free.iter().enumerate() {
        map[i] = a;
    }
    let restrict = |m: &SparseColMat<usize, f64>| {
        let t: Vec<_> = m
            .triplet_iter()
            .filter(|t| map[t.row] != usize::MAX && map[t.col] != usize::MAX)
            .map(|t| Triplet::new(map[t.row], map[t.col], *t.val))
            .collect();
        SparseColMat::<usize, f64>::try_new_from_triplets(free.len(), free.len(), &t)
            .map_err(|e| Error::Invariant(format!("sparse restriction: {e:?}")))
    };
    let k = restrict(&sys.stiffness)?;
    let m = restrict(&sys.mass)?;
    let lu = k.sp_lu().map_err(|e| Error::Singular { what: format!("Dirichlet stiffness ({e:?})"), freq_hz: 0.0, rcond: 0.0 })?;

    let nf = free.len();
    let mut x = Mat::<f64>::from_fn(nf, 1, |i, _| 1.0 + 1e-3 * (i % 7) as f64);
    let mut lambda = f64::INFINITY;
    for _ in 0..200 {
        let mut y = &m * &x;
        use faer::linalg::solvers::Solve;
        lu.solve_in_place(&mut y);
        let ky = &k * &y;
        let my = &m * &y;
        let num = (y.transpose() * &ky)[(0, 0)];
        let den = (y.transpose() * &my)[(0, 0)];
        let next = num / den;
        let norm = den.sqrt();
        x = y * faer::Scale(1.0 / norm);
        if (next - lambda).abs() <= 1e-13 * next.abs() {
            return Ok(next);
        }
        lambda = next;
    }
    Ok(lambda)
}
