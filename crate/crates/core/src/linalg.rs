//! Small dense complex linear algebra shared by the condition, scattering and
//! spectrum code. Everything here works on `DMatrix<Complex64>` of size at
//! most a few dozen.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Relative singular-value threshold for rank decisions.
pub const RANK_THRESHOLD: f64 = 1e-10;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

/// The all-ones matrix J.
pub fn ones(d: usize) -> CMatrix {
    CMatrix::from_element(d, d, c(1.0))
}

/// Entrywise max-modulus norm.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5)
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

/// Orthonormal basis (as columns) of the range of an orthogonal projector.
pub fn projector_range(p: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(p);
    let cols: Vec<usize> = (0..values.len()).filter(|&i| values[i] > 0.5).collect();
    select_columns(&vectors, &cols)
}

/// Rank of an orthogonal projector: number of eigenvalues above 1/2.
pub fn projector_rank(p: &CMatrix) -> usize {
    hermitian_eigen(p).0.iter().filter(|&&v| v > 0.5).count()
}

pub fn select_columns(m: &CMatrix, cols: &[usize]) -> CMatrix {
    CMatrix::from_fn(m.nrows(), cols.len(), |r, j| m[(r, cols[j])])
}

/// Projector onto the span of orthonormal columns.
pub fn projector_from_basis(basis: &CMatrix) -> CMatrix {
    basis * basis.adjoint()
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

fn rank_cut(largest: f64) -> f64 {
    RANK_THRESHOLD * largest.max(1.0)
}

/// Numerical rank with threshold `1e-10 * max(1, sigma_max)`.
pub fn rank(m: &CMatrix) -> usize {
    let sv = singular_values(m);
    let Some(&largest) = sv.first() else {
        return 0;
    };
    let cut = rank_cut(largest);
    sv.iter().filter(|&&s| s > cut).count()
}

/// Orthonormal basis of the null space of `m` (columns).
pub fn null_space(m: &CMatrix) -> CMatrix {
    let n = m.ncols();
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    // Pad to at least n rows so the SVD returns a full right basis.
    let rows = m.nrows().max(n);
    let mut padded = CMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let largest = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
    let cut = rank_cut(largest);
    let cols: Vec<usize> = (0..n).filter(|&i| svd.singular_values[i] <= cut).collect();
    CMatrix::from_fn(n, cols.len(), |r, j| v_t[(cols[j], r)].conj())
}

/// Moore-Penrose pseudo-inverse with the crate rank threshold.
pub fn pseudo_inverse(m: &CMatrix) -> CMatrix {
    let sv = singular_values(m);
    let largest = sv.first().copied().unwrap_or(0.0);
    if largest == 0.0 {
        return CMatrix::zeros(m.ncols(), m.nrows());
    }
    m.clone()
        .svd(true, true)
        .pseudo_inverse(rank_cut(largest))
        .expect("U and V were computed")
}

/// Orthonormalise the columns of `m` (assumed full column rank).
pub fn orthonormalize(m: &CMatrix) -> CMatrix {
    if m.ncols() == 0 {
        return m.clone();
    }
    let q = m.clone().qr().q();
    q.columns(0, m.ncols()).into_owned()
}

/// Spectral-norm distance between the orthogonal projectors onto the column
/// spaces of two matrices; equals the sine of the largest principal angle
/// when the dimensions agree, and 1 when they do not.
pub fn subspace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.ncols() != b.ncols() {
        return 1.0;
    }
    let pa = projector_from_basis(&orthonormalize(a));
    let pb = projector_from_basis(&orthonormalize(b));
    singular_values(&(pa - pb)).first().copied().unwrap_or(0.0)
}

/// All eigenvalues of a general complex square matrix, read off the
/// triangular factor of its complex Schur form.
pub fn eigenvalues(m: &CMatrix) -> Vec<Complex64> {
    let n = m.nrows();
    match n {
        0 => Vec::new(),
        1 => vec![m[(0, 0)]],
        _ => {
            let (_, t) = m.clone().schur().unpack();
            (0..n).map(|i| t[(i, i)]).collect()
        }
    }
}

/// Determinant of a general complex square matrix.
pub fn determinant(m: &CMatrix) -> Complex64 {
    if m.nrows() == 0 {
        return c(1.0);
    }
    m.clone().lu().determinant()
}

/// Principal value of the argument mapped into `[0, 2pi)`.
pub fn phase_0_2pi(z: Complex64) -> f64 {
    let a = z.arg();
    if a < 0.0 {
        a + std::f64::consts::TAU
    } else {
        a
    }
}
