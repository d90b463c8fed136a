//! Dense complex linear algebra used across the crate.
//!
//! Storage and decompositions are backed by `faer`; this module keeps the
//! handful of helpers the rest of the crate needs in one place so that the
//! higher-level modules read in terms of matrices, not library calls.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = Mat<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    Mat::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMatrix {
    Mat::identity(n, n)
}

/// Builds a matrix from row vectors. All rows must have the same length.
pub fn from_rows(rows: &[Vec<C64>]) -> Result<CMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != m) {
        return Err(Error::Dimension(format!(
            "row {} has {} entries, expected {}",
            i + 1,
            r.len(),
            m
        )));
    }
    Ok(Mat::from_fn(n, m, |i, j| rows[i][j]))
}

pub fn from_real_rows(rows: &[&[f64]]) -> CMatrix {
    Mat::from_fn(rows.len(), rows.first().map_or(0, |r| r.len()), |i, j| {
        c(rows[i][j], 0.0)
    })
}

pub fn diag(values: &[C64]) -> CMatrix {
    let n = values.len();
    Mat::from_fn(n, n, |i, j| if i == j { values[i] } else { ZERO })
}

pub fn to_rows(m: &CMatrix) -> Vec<Vec<C64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn adjoint(m: &CMatrix) -> CMatrix {
    m.adjoint().to_owned()
}

pub fn transpose(m: &CMatrix) -> CMatrix {
    m.transpose().to_owned()
}

pub fn conj(m: &CMatrix) -> CMatrix {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].conj())
}

pub fn scale(m: &CMatrix, s: C64) -> CMatrix {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| s * m[(i, j)])
}

/// `m + s·I`
pub fn shift(m: &CMatrix, s: C64) -> CMatrix {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
        if i == j {
            m[(i, j)] + s
        } else {
            m[(i, j)]
        }
    })
}

/// Kronecker product `a ⊗ b`; the row index of `a` is the slow index.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(a.nrows() * br, a.ncols() * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

pub fn mat_vec(m: &CMatrix, v: &[C64]) -> Vec<C64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    let mut out = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out = out.max(m[(i, j)].norm());
        }
    }
    out
}

/// Largest entrywise modulus of `a − b`; infinite when the shapes differ.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return f64::INFINITY;
    }
    max_abs(&(a - b))
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.norm_l2()
}

/// Maximum absolute column sum.
pub fn norm_1(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn all_finite(m: &CMatrix) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].re.is_finite() && m[(i, j)].im.is_finite()))
}

pub fn is_square(m: &CMatrix) -> bool {
    m.nrows() == m.ncols()
}

/// `max |m_ij − conj(m_ji)| ≤ tol`
pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    is_square(m) && hermiticity_defect(m) <= tol
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut d = 0.0f64;
    for i in 0..n {
        for j in 0..=i {
            d = d.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    d
}

/// `max |m_ij − m_ji| ≤ tol`
pub fn is_symmetric(m: &CMatrix, tol: f64) -> bool {
    if !is_square(m) {
        return false;
    }
    let n = m.nrows();
    (0..n).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).norm() <= tol))
}

/// Eigenvalues of the Hermitian part `(m + m†)/2`, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let h = Mat::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    h.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("Hermitian eigensolver: {e:?}")))
}

/// Singular values, non-increasing.
pub fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Vec::new());
    }
    m.singular_values()
        .map_err(|e| Error::Numerical(format!("SVD: {e:?}")))
}

/// Number of singular values strictly above `tol`.
pub fn numerical_rank(m: &CMatrix, tol: f64) -> Result<usize> {
    Ok(singular_values(m)?.into_iter().filter(|s| *s > tol).count())
}

/// Ranks of `a, a², …, a^kmax`.
///
/// Each power is formed as `a` applied to an orthonormal basis of the range
/// of the previous power, so the entries never grow like `‖a‖^k` and the same
/// absolute threshold applies at every step.
pub fn power_ranks(a: &CMatrix, tol: f64, kmax: usize) -> Result<Vec<usize>> {
    let n = a.nrows();
    let mut basis = identity(n);
    let mut ranks = Vec::with_capacity(kmax);
    for _ in 0..kmax {
        if basis.ncols() == 0 {
            ranks.push(0);
            continue;
        }
        let image = a * &basis;
        let svd = image
            .thin_svd()
            .map_err(|e| Error::Numerical(format!("SVD: {e:?}")))?;
        let s = svd.S().column_vector();
        let r = (0..s.nrows()).filter(|&i| s[i].re > tol).count();
        basis = svd.U().subcols(0, r).to_owned();
        ranks.push(r);
    }
    Ok(ranks)
}

/// Eigenvalues of a general complex matrix.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    m.eigenvalues()
        .map_err(|e| Error::Numerical(format!("eigensolver: {e:?}")))
}

/// Eigenvalues and unit-norm right eigenvectors (as columns).
pub fn eig(m: &CMatrix) -> Result<(Vec<C64>, CMatrix)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), zeros(0, 0)));
    }
    let evd = m
        .eigen()
        .map_err(|e| Error::Numerical(format!("eigensolver: {e:?}")))?;
    let s = evd.S().column_vector();
    let values: Vec<C64> = (0..n).map(|i| s[i]).collect();
    let mut vectors = evd.U().to_owned();
    for j in 0..n {
        let norm = (0..n).map(|i| vectors[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            for i in 0..n {
                vectors[(i, j)] /= norm;
            }
        }
    }
    Ok((values, vectors))
}

/// Solves `a x = b` by LU with partial pivoting.
pub fn solve(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.partial_piv_lu().solve(b)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring around a degree-13 Padé
/// approximant.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    if !is_square(a) {
        return Err(Error::Dimension(format!(
            "expm of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    if !all_finite(a) {
        return Err(Error::Numerical("expm of a non-finite matrix".into()));
    }
    if n == 0 {
        return Ok(zeros(0, 0));
    }
    let norm = norm_1(a);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = scale(a, c(2f64.powi(-squarings), 0.0));
    let b = |k: usize| c(PADE13[k], 0.0);
    let id = identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let inner_u = &a6 * &(scale(&a6, b(13)) + scale(&a4, b(11)) + scale(&a2, b(9)));
    let u_poly = inner_u + scale(&a6, b(7)) + scale(&a4, b(5)) + scale(&a2, b(3)) + scale(&id, b(1));
    let u = &a * &u_poly;
    let inner_v = &a6 * &(scale(&a6, b(12)) + scale(&a4, b(10)) + scale(&a2, b(8)));
    let v = inner_v + scale(&a6, b(6)) + scale(&a4, b(4)) + scale(&a2, b(2)) + scale(&id, b(0));

    let mut r = solve(&(&v - &u), &(&v + &u));
    for _ in 0..squarings {
        r = &r * &r;
    }
    if !all_finite(&r) {
        return Err(Error::Numerical("expm overflowed".into()));
    }
    Ok(r)
}

/// Sort key for complex values: real part, then imaginary part.
pub fn cmp_complex(a: &C64, b: &C64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taylor_expm(a: &CMatrix, terms: usize) -> CMatrix {
        let n = a.nrows();
        let mut out = identity(n);
        let mut term = identity(n);
        for k in 1..terms {
            term = scale(&(&term * a), c(1.0 / k as f64, 0.0));
            out = out + &term;
        }
        out
    }

    #[test]
    fn expm_scalar_decay() {
        let m = from_real_rows(&[&[-1.0]]);
        let e = expm(&m).unwrap();
        assert!((e[(0, 0)].re - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn expm_matches_taylor_for_small_norm() {
        let m = from_rows(&[
            vec![c(0.1, 0.3), c(-0.2, 0.0), c(0.05, 0.1)],
            vec![c(0.0, -0.4), c(-0.3, 0.2), c(0.1, 0.0)],
            vec![c(0.2, 0.2), c(0.0, 0.1), c(-0.1, -0.5)],
        ])
        .unwrap();
        let d = max_abs_diff(&expm(&m).unwrap(), &taylor_expm(&m, 40));
        assert!(d < 1e-14, "{d}");
    }

    #[test]
    fn expm_nilpotent_is_exact_polynomial() {
        // exp of a 3x3 shift: I + N + N²/2
        let n = from_real_rows(&[&[0.0, 5.0, 0.0], &[0.0, 0.0, 5.0], &[0.0, 0.0, 0.0]]);
        let e = expm(&n).unwrap();
        let expect = from_real_rows(&[&[1.0, 5.0, 12.5], &[0.0, 1.0, 5.0], &[0.0, 0.0, 1.0]]);
        assert!(max_abs_diff(&e, &expect) < 1e-12);
    }

    #[test]
    fn expm_diagonal_large_norm() {
        let m = diag(&[c(-300.0, 40.0), c(-2.0, -700.0)]);
        let e = expm(&m).unwrap();
        let x = c(-2.0, -700.0).exp();
        assert!((e[(1, 1)] - x).norm() <= 1e-12 * x.norm());
        assert!(e[(0, 1)].norm() < 1e-300);
    }

    #[test]
    fn power_ranks_of_jordan_block() {
        let n = from_real_rows(&[
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 0.0],
        ]);
        assert_eq!(power_ranks(&n, 1e-12, 4).unwrap(), vec![2, 1, 0, 0]);
    }

    #[test]
    fn kron_indexing() {
        let a = from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let k = kron(&a, &b);
        assert_eq!(k[(0, 1)], c(1.0, 0.0));
        assert_eq!(k[(2, 1)], c(3.0, 0.0));
        assert_eq!(k[(3, 2)], c(4.0, 0.0));
    }

    #[test]
    fn eig_vectors_are_unit_and_satisfy_equation() {
        let m = from_rows(&[vec![c(1.0, 1.0), c(2.0, 0.0)], vec![c(0.5, 0.0), c(-1.0, 0.0)]]).unwrap();
        let (vals, vecs) = eig(&m).unwrap();
        for (k, lam) in vals.iter().enumerate() {
            let v: Vec<C64> = (0..2).map(|i| vecs[(i, k)]).collect();
            let mv = mat_vec(&m, &v);
            let res: f64 = mv.iter().zip(&v).map(|(a, b)| (a - lam * b).norm()).fold(0.0, f64::max);
            assert!(res < 1e-13);
            let norm: f64 = v.iter().map(|x| x.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-14);
        }
    }
}
