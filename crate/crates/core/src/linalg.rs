//! Dense complex helpers on top of faer: LU with a reciprocal-condition
//! estimate, norms and small conversions shared by the solvers.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::sparse::SparseColMat;
use faer::{Mat, MatRef};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = Mat<Complex64>;

/// Factorizations with an estimated reciprocal condition number below this
/// are reported as singular.
pub const RCOND_MIN: f64 = 1e-13;

pub fn frobenius(a: MatRef<'_, Complex64>) -> f64 {
    a.norm_l2()
}

fn norm1(a: MatRef<'_, Complex64>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn to_complex(a: MatRef<'_, f64>) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| Complex64::new(a[(i, j)], 0.0))
}

pub fn submatrix(a: MatRef<'_, Complex64>, rows: &[usize], cols: &[usize]) -> CMat {
    Mat::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])])
}

/// `max_ij |a_ij - a_ji| / max_ij |a_ij|`
pub fn symmetry_defect(a: MatRef<'_, Complex64>) -> f64 {
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            num = num.max((a[(i, j)] - a[(j, i)]).norm());
            den = den.max(a[(i, j)].norm());
        }
    }
    if den == 0.0 { 0.0 } else { num / den }
}

enum Factor {
    Dense(PartialPivLu<Complex64>),
    Sparse(faer::sparse::linalg::solvers::Lu<usize, Complex64>),
}

impl Factor {
    fn solve_in_place(&self, x: &mut CMat) {
        match self {
            Factor::Dense(lu) => lu.solve_in_place(x),
            Factor::Sparse(lu) => lu.solve_in_place(x),
        }
    }

    fn solve_adjoint_in_place(&self, x: &mut CMat) {
        match self {
            Factor::Dense(lu) => lu.solve_adjoint_in_place(x),
            Factor::Sparse(lu) => lu.solve_adjoint_in_place(x),
        }
    }
}

/// LU of a square complex matrix (dense partial pivoting or sparse) together
/// with a 1-norm reciprocal condition estimate (Hager/Higham).
pub struct Lu {
    lu: Factor,
    n: usize,
    rcond: f64,
}

impl Lu {
    pub fn new(a: MatRef<'_, Complex64>) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "LU of a non-square matrix");
        let finite = a.is_all_finite();
        Self::finish(Factor::Dense(a.partial_piv_lu()), a.nrows(), norm1(a), finite)
    }

    /// Sparse LU; a structurally or numerically singular matrix gets rcond 0.
    pub fn new_sparse(a: &SparseColMat<usize, Complex64>) -> Self {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "LU of a non-square matrix");
        let mut colsum = vec![0.0; n];
        let mut finite = true;
        for t in a.triplet_iter() {
            colsum[t.col] += t.val.norm();
            finite &= t.val.re.is_finite() && t.val.im.is_finite();
        }
        let anorm = colsum.into_iter().fold(0.0, f64::max);
        match a.sp_lu() {
            Ok(lu) => Self::finish(Factor::Sparse(lu), n, anorm, finite),
            Err(_) => Self {
                lu: Factor::Dense(Mat::<Complex64>::identity(n, n).partial_piv_lu()),
                n,
                rcond: 0.0,
            },
        }
    }

    fn finish(lu: Factor, n: usize, anorm: f64, finite: bool) -> Self {
        let mut this = Self { lu, n, rcond: 0.0 };
        this.rcond = if n == 0 {
            1.0
        } else if !finite || anorm == 0.0 {
            0.0
        } else {
            let inv = this.inverse_norm1_estimate();
            if inv.is_finite() && inv > 0.0 { 1.0 / (anorm * inv) } else { 0.0 }
        };
        this
    }

    /// Factor and fail with [`Error::Singular`] when the estimate is below
    /// [`RCOND_MIN`].
    pub fn checked(a: MatRef<'_, Complex64>, what: &str, freq_hz: f64) -> Result<Self> {
        Self::new(a).check(what, freq_hz)
    }

    pub fn checked_sparse(a: &SparseColMat<usize, Complex64>, what: &str, freq_hz: f64) -> Result<Self> {
        Self::new_sparse(a).check(what, freq_hz)
    }

    fn check(self, what: &str, freq_hz: f64) -> Result<Self> {
        if !(self.rcond >= RCOND_MIN) {
            return Err(Error::Singular { what: what.to_string(), freq_hz, rcond: self.rcond });
        }
        Ok(self)
    }

    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    pub fn solve(&self, rhs: MatRef<'_, Complex64>) -> CMat {
        let mut x = rhs.to_owned();
        self.lu.solve_in_place(&mut x);
        x
    }

    pub fn solve_vec(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let mut x = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        self.lu.solve_in_place(&mut x);
        (0..rhs.len()).map(|i| x[(i, 0)]).collect()
    }

    fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.n;
        let mut x = Mat::from_fn(n, 1, |_, _| Complex64::new(1.0 / n as f64, 0.0));
        let mut est = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let mut y = x.clone();
            self.lu.solve_in_place(&mut y);
            est = (0..n).map(|i| y[(i, 0)].norm()).sum::<f64>();
            let xi = Mat::from_fn(n, 1, |i, _| {
                let v = y[(i, 0)];
                if v.norm() > 0.0 { v / v.norm() } else { Complex64::new(1.0, 0.0) }
            });
            let mut z = xi;
            self.lu.solve_adjoint_in_place(&mut z);
            let (j, zmax) = (0..n)
                .map(|i| (i, z[(i, 0)].norm()))
                .fold((0, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
            let ztx: f64 = (0..n).map(|i| (z[(i, 0)].conj() * x[(i, 0)]).re).sum();
            if zmax <= ztx || j == last_j {
                break;
            }
            last_j = j;
            x = Mat::zeros(n, 1);
            x[(j, 0)] = Complex64::new(1.0, 0.0);
        }
        let alt = Mat::from_fn(n, 1, |i, _| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
            Complex64::new(s * (1.0 + t), 0.0)
        });
        let mut y = alt;
        self.lu.solve_in_place(&mut y);
        let alt_est = 2.0 * (0..n).map(|i| y[(i, 0)].norm()).sum::<f64>() / (3.0 * n as f64);
        f64::max(est, alt_est)
    }
}
