//! Small dense linear-algebra helpers shared by the analysis modules.

use nalgebra::{DMatrix, Scalar};
use num_traits::Zero;

use crate::{CMatrix, RMatrix, C64};

/// Relative difference `‖a − b‖_F / max(‖a‖_F, ‖b‖_F)`; zero when both vanish.
pub fn rel_diff_c(a: &CMatrix, b: &CMatrix) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

pub fn rel_diff(a: &RMatrix, b: &RMatrix) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// `‖x‖ / scale`, or 0 when `scale` is zero.
pub fn ratio(x: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        0.0
    } else {
        x / scale
    }
}

pub fn complexify(a: &RMatrix) -> CMatrix {
    a.map(|x| C64::new(x, 0.0))
}

pub fn real_part(a: &CMatrix) -> RMatrix {
    a.map(|z| z.re)
}

pub fn imag_part(a: &CMatrix) -> RMatrix {
    a.map(|z| z.im)
}

pub fn commutator(a: &RMatrix, b: &RMatrix) -> RMatrix {
    a * b - b * a
}

/// `a + i b`.
pub fn compose(re: &RMatrix, im: &RMatrix) -> CMatrix {
    re.zip_map(im, C64::new)
}

/// Symplectic form `[[0, I], [-I, 0]]` for `n` modes.
pub fn symplectic_form(n: usize) -> RMatrix {
    let mut omega = RMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        omega[(k, n + k)] = 1.0;
        omega[(n + k, k)] = -1.0;
    }
    omega
}

/// Assemble `[[a, b], [c, d]]` from four equally sized square blocks.
pub fn blocks<T: Scalar + Zero>(
    a: &DMatrix<T>,
    b: &DMatrix<T>,
    c: &DMatrix<T>,
    d: &DMatrix<T>,
) -> DMatrix<T> {
    let n = a.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((0, n), (n, n)).copy_from(b);
    out.view_mut((n, 0), (n, n)).copy_from(c);
    out.view_mut((n, n), (n, n)).copy_from(d);
    out
}

/// Extract block `(row, col)` of size `n × n` from a `2n × 2n` matrix.
pub fn block<T: Scalar>(m: &DMatrix<T>, row: usize, col: usize) -> DMatrix<T> {
    let n = m.nrows() / 2;
    m.view((row * n, col * n), (n, n)).into_owned()
}

/// Hermitian part `(a + a†)/2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Eigenvalues of a Hermitian matrix, ascending. Only the Hermitian part is used.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = hermitian_part(a).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: &RMatrix) -> Vec<f64> {
    let sym = (a + a.transpose()).scale(0.5);
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Smallest eigenvalue and a unit eigenvector of a real symmetric matrix.
pub fn min_eigenpair(a: &RMatrix) -> (f64, nalgebra::DVector<f64>) {
    let sym = (a + a.transpose()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let (k, &val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .expect("non-empty matrix");
    (val, eig.eigenvectors.column(k).into_owned())
}

fn one_norm_r(a: &RMatrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn one_norm_c(a: &CMatrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Dense LU inverse with a 1-norm condition estimate.
///
/// Returns `None` when the matrix is exactly singular; otherwise the inverse
/// and `‖a‖₁ ‖a⁻¹‖₁`.
pub fn inverse_with_condition(a: &RMatrix) -> Option<(RMatrix, f64)> {
    let inv = a.clone().lu().try_inverse()?;
    let cond = one_norm_r(a) * one_norm_r(&inv);
    cond.is_finite().then_some((inv, cond))
}

pub fn inverse_with_condition_c(a: &CMatrix) -> Option<(CMatrix, f64)> {
    let inv = a.clone().lu().try_inverse()?;
    let cond = one_norm_c(a) * one_norm_c(&inv);
    cond.is_finite().then_some((inv, cond))
}

/// Largest absolute entry.
pub fn max_abs(a: &RMatrix) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Thin complex SVD `m = U diag(σ) V†` with `σ` descending.
///
/// Built on the Hermitian eigensolver: `V` diagonalizes `m†m`, `U` comes from a
/// QR of `m V` (phases fixed so that `U† m V` has a non-negative diagonal).
/// nalgebra's complex bidiagonal SVD loses accuracy on some nearly diagonal inputs.
pub fn svd_c(m: &CMatrix) -> (CMatrix, Vec<f64>, CMatrix) {
    let n = m.ncols();
    let eig = hermitian_part(&(m.adjoint() * m)).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let v = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    let mv = m * &v;
    let qr = mv.clone().qr();
    let mut u = qr.q();
    let mut sigma = Vec::with_capacity(n);
    for j in 0..n {
        let d = u.column(j).dotc(&mv.column(j));
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            let col = u.column(j) * phase;
            u.set_column(j, &col);
        }
        sigma.push(d.norm());
    }
    (u, sigma, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symplectic_form_squares_to_minus_identity() {
        for n in 1..5 {
            let omega = symplectic_form(n);
            assert_eq!(omega.transpose(), -&omega);
            assert_eq!(&omega * &omega, -RMatrix::identity(2 * n, 2 * n));
        }
    }

    #[test]
    fn block_roundtrip() {
        let m = RMatrix::from_fn(4, 4, |i, j| (4 * i + j) as f64);
        let rebuilt = blocks(&block(&m, 0, 0), &block(&m, 0, 1), &block(&m, 1, 0), &block(&m, 1, 1));
        assert_eq!(m, rebuilt);
    }

    #[test]
    fn singular_inverse_is_rejected() {
        let m = RMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(inverse_with_condition(&m).map_or(true, |(_, c)| c > 1e12));
    }

    #[test]
    fn svd_c_reconstructs_nearly_diagonal_input() {
        let x = CMatrix::from_fn(3, 3, |i, j| {
            if i == j {
                C64::new([0.53, -0.33, -0.43][i], 0.0)
            } else {
                C64::new(1e-17 * (i + 2 * j) as f64, -1e-17)
            }
        });
        let (u, sigma, v) = svd_c(&x);
        let s = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(3, sigma.iter().map(|&x| C64::new(x, 0.0))));
        assert!(rel_diff_c(&(&u * s * v.adjoint()), &x) < 1e-14);
        assert!(sigma.windows(2).all(|p| p[0] >= p[1]));
        assert!((u.adjoint() * &u - CMatrix::identity(3, 3)).norm() < 1e-14);
    }
}
