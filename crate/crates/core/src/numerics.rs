//! Hermitian eigendecomposition and sample covariance.
//!
//! The eigensolver is a cyclic complex Jacobi method. Matrices in the
//! receiver are at most a few tens of rows, where Jacobi is both accurate to
//! machine precision and fast enough to run several times per codeword.

use num_complex::Complex64;

use crate::{CMatrix, CVector, Error, Result};

const MAX_SWEEPS: usize = 64;

#[derive(Debug, Clone)]
pub struct HermitianEigenResult {
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` pairs with `eigenvalues[k]`.
    pub eigenvectors: CMatrix,
}

impl HermitianEigenResult {
    /// `U Λ U†`.
    pub fn reconstruct(&self) -> CMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(k).scale_mut(lambda);
        }
        scaled * self.eigenvectors.adjoint()
    }
}

/// Frobenius norm of `A − A†` relative to `‖A‖`.
pub fn hermitian_defect(matrix: &CMatrix) -> f64 {
    let norm = matrix.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (matrix - matrix.adjoint()).norm() / norm
}

/// Eigendecomposition of a Hermitian matrix. The input is symmetrized as
/// `(A + A†)/2` before decomposition.
pub fn eigh(matrix: &CMatrix) -> Result<HermitianEigenResult> {
    if !matrix.is_square() {
        return Err(Error::Dimension(format!(
            "eigh needs a square matrix, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    if matrix
        .iter()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::NonFinite);
    }
    let n = matrix.nrows();
    let mut a = (matrix + matrix.adjoint()).scale(0.5);
    let mut v = CMatrix::identity(n, n);
    let scale = a.norm();

    if scale > 0.0 {
        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|q| (0..q).map(move |p| (p, q)))
                .map(|(p, q)| a[(p, q)].norm_sqr())
                .sum();
            if off.sqrt() <= 1e-15 * scale {
                break;
            }
            for q in 1..n {
                for p in 0..q {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|k| a[(k, k)].re).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));

    let eigenvalues = order.iter().map(|&k| diag[k]).collect();
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src).into_owned();
        normalize_phase(&mut col);
        eigenvectors.set_column(dst, &col);
    }
    Ok(HermitianEigenResult {
        eigenvalues,
        eigenvectors,
    })
}

/// One Jacobi rotation annihilating `a[p][q]`.
///
/// With `a[p][q] = |a_pq|·e^{jφ}` the unitary `J` acting on the `(p, q)`
/// plane is `[[c, s], [-s·e^{-jφ}, c·e^{-jφ}]]`, the real Jacobi rotation
/// composed with a phase that makes the pivot real.
fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    if mag < 1e-300 || mag <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a[(p, q)] = Complex64::new(0.0, 0.0);
        a[(q, p)] = Complex64::new(0.0, 0.0);
        return;
    }
    let phase = apq / mag;
    let theta = (aqq - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let n = a.nrows();
    let jpp = Complex64::new(c, 0.0);
    let jpq = Complex64::new(s, 0.0);
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;

    // A ← A J (columns p, q)
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * jpp + akq * jqp;
        a[(k, q)] = akp * jpq + akq * jqq;
    }
    // A ← J† A (rows p, q)
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
        a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * jpp + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * jqq;
    }
}

/// Rotate so the largest-magnitude entry is real and positive.
fn normalize_phase(v: &mut CVector) {
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()));
    if let Some(p) = pivot {
        let mag = p.norm();
        if mag > 0.0 {
            let rot = p.conj() / mag;
            v.apply(|z| *z *= rot);
        }
    }
}

/// `(1/M) Σ y yᴴ` over the columns of `samples`; exactly Hermitian.
pub fn sample_covariance(samples: &CMatrix) -> Result<CMatrix> {
    let m = samples.ncols();
    if m == 0 {
        return Err(Error::Empty("sample_covariance needs at least one sample"));
    }
    let n = samples.nrows();
    // Lower triangle only, accumulated column by column.
    let mut acc = vec![Complex64::new(0.0, 0.0); n * (n + 1) / 2];
    for col in samples.column_iter() {
        let y = col.as_slice();
        let mut k = 0;
        for i in 0..n {
            let yi = y[i];
            for yj in &y[..=i] {
                acc[k] += yi * yj.conj();
                k += 1;
            }
        }
    }
    let inv = 1.0 / m as f64;
    let mut r = CMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in 0..=i {
            let v = acc[k] * inv;
            k += 1;
            if i == j {
                r[(i, i)] = Complex64::new(v.re, 0.0);
            } else {
                r[(i, j)] = v;
                r[(j, i)] = v.conj();
            }
        }
    }
    Ok(r)
}

/// `Bᴴ R B`, forced exactly Hermitian.
pub fn congruence(basis: &CMatrix, r: &CMatrix) -> CMatrix {
    let mut s = basis.adjoint() * r * basis;
    let n = s.nrows();
    for i in 0..n {
        s[(i, i)] = Complex64::new(s[(i, i)].re, 0.0);
        for j in 0..i {
            let avg = (s[(i, j)] + s[(j, i)].conj()) * 0.5;
            s[(i, j)] = avg;
            s[(j, i)] = avg.conj();
        }
    }
    s
}

/// Unit eigenvector of the largest eigenvalue, phase-normalized.
pub fn principal_eigenvector(matrix: &CMatrix) -> Result<(CVector, f64)> {
    let eig = eigh(matrix)?;
    if eig.eigenvalues.is_empty() {
        return Err(Error::Empty("principal_eigenvector of a 0x0 matrix"));
    }
    Ok((eig.eigenvectors.column(0).into_owned(), eig.eigenvalues[0]))
}
