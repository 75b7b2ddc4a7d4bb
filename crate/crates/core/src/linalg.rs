//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SVD};

/// Relative tolerance used to decide numerical rank.
pub const RANK_RTOL: f64 = 1e-10;

/// Largest singular value by power iteration on `AᵀA`.
///
/// Stops when the Rayleigh quotient changes by less than `rtol` relatively.
/// Converges from below, so callers that need an upper bound should pad it.
pub fn spectral_norm(a: &DMatrix<f64>, rtol: f64, max_iter: usize) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    if a.amax() == 0.0 {
        return 0.0;
    }
    // Deterministic start with no special structure.
    let n = a.ncols();
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.37 * ((i as f64 + 1.0) * 0.618_033_988_75).fract());
    v /= v.norm();
    let mut est = 0.0f64;
    for _ in 0..max_iter {
        let av = a * &v;
        let w = a.tr_mul(&av);
        let wn = w.norm();
        if wn == 0.0 {
            return 0.0;
        }
        let next = av.norm_squared();
        v = w / wn;
        if (next - est).abs() <= rtol * next {
            est = next;
            break;
        }
        est = next;
    }
    est.sqrt()
}

/// Singular values decomposition helper returning (U, sigma, Vᵀ) with full thin factors.
pub fn svd(a: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let s = SVD::new(a.clone(), true, true);
    (s.u.unwrap(), s.singular_values, s.v_t.unwrap())
}

fn rank_cut(sigma: &DVector<f64>) -> f64 {
    let smax = sigma.iter().cloned().fold(0.0, f64::max);
    RANK_RTOL * smax.max(f64::MIN_POSITIVE)
}

pub fn rank(a: &DMatrix<f64>) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let (_, s, _) = svd(a);
    let cut = rank_cut(&s);
    s.iter().filter(|&&v| v > cut).count()
}

/// Moore-Penrose pseudoinverse.
pub fn pinv(a: &DMatrix<f64>) -> DMatrix<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DMatrix::zeros(a.ncols(), a.nrows());
    }
    let (u, s, vt) = svd(a);
    let cut = rank_cut(&s);
    let mut out = DMatrix::zeros(a.ncols(), a.nrows());
    for (k, &sk) in s.iter().enumerate() {
        if sk > cut {
            out += (vt.row(k).transpose() * u.column(k).transpose()) / sk;
        }
    }
    out
}

/// Orthonormal basis of the null space, one column per direction.
pub fn nullspace(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.ncols();
    if a.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    // Pad to at least n rows so the SVD returns a full right factor.
    let padded = if a.nrows() < n {
        let mut p = DMatrix::zeros(n, n);
        p.rows_mut(0, a.nrows()).copy_from(a);
        p
    } else {
        a.clone()
    };
    let (_, s, vt) = svd(&padded);
    let cut = rank_cut(&s);
    let idx: Vec<usize> = (0..vt.nrows()).filter(|&k| s[k] <= cut).collect();
    let mut basis = DMatrix::zeros(n, idx.len());
    for (c, &k) in idx.iter().enumerate() {
        basis.set_column(c, &vt.row(k).transpose());
    }
    basis
}

/// Replace the rows of `[a | b]` by an equivalent full-row-rank system
/// `Σ_r V_rᵀ x = U_rᵀ b`. The singular values are preserved.
pub fn row_reduce(a: &DMatrix<f64>, b: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
    if a.nrows() == 0 {
        return (a.clone(), b.clone());
    }
    let (u, s, vt) = svd(a);
    let cut = rank_cut(&s);
    let r = s.iter().filter(|&&v| v > cut).count();
    let mut ar = DMatrix::zeros(r, a.ncols());
    let mut br = DVector::zeros(r);
    let mut row = 0;
    for k in 0..s.len() {
        if s[k] > cut {
            ar.set_row(row, &(vt.row(k) * s[k]));
            br[row] = u.column(k).dot(b);
            row += 1;
        }
    }
    (ar, br)
}

/// Smallest nonzero singular value, or `None` for a numerically zero matrix.
pub fn sigma_min_nonzero(a: &DMatrix<f64>) -> Option<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return None;
    }
    let (_, s, _) = svd(a);
    let cut = rank_cut(&s);
    s.iter().cloned().filter(|&v| v > cut).fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.min(v))))
}

/// Top right singular vector of `a` (direction of largest amplification).
pub fn top_right_singular(a: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let (_, s, vt) = svd(a);
    let mut k = 0;
    for i in 0..s.len() {
        if s[i] > s[k] {
            k = i;
        }
    }
    (s[k], vt.row(k).transpose())
}

pub fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}

pub fn vstack(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        out.view_mut((r, 0), b.shape()).copy_from(*b);
        r += b.nrows();
    }
    out
}

pub fn vconcat(parts: &[&DVector<f64>]) -> DVector<f64> {
    let len = parts.iter().map(|p| p.len()).sum();
    let mut out = DVector::zeros(len);
    let mut r = 0;
    for p in parts {
        out.rows_mut(r, p.len()).copy_from(*p);
        r += p.len();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_iteration_matches_svd() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -0.5, 0.3, 4.0, 1.0]);
        let (_, s, _) = svd(&a);
        let top = s.iter().cloned().fold(0.0, f64::max);
        assert!((spectral_norm(&a, 1e-14, 10_000) - top).abs() < 1e-9 * top);
    }

    #[test]
    fn pinv_and_nullspace() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 2.0, 2.0, 0.0]);
        let p = pinv(&a);
        assert!((&a * &p * &a - &a).norm() < 1e-12);
        let n = nullspace(&a);
        assert_eq!(n.ncols(), 2);
        assert!((&a * &n).norm() < 1e-12);
        let (ar, br) = row_reduce(&a, &DVector::from_vec(vec![1.0, 2.0]));
        assert_eq!(ar.nrows(), 1);
        // Same solution set: x = (0.5, 0.5, 0) satisfies both.
        let x = DVector::from_vec(vec![0.5, 0.5, 0.0]);
        assert!((&ar * &x - br).norm() < 1e-12);
        assert_eq!(rank(&a), 1);
        assert!((sigma_min_nonzero(&a).unwrap() - 10f64.sqrt()).abs() < 1e-12);
    }
}
