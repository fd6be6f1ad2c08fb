//! Dense Cholesky factorization with diagonal jitter, triangular solves,
//! and single-row extension.
//!
//! Morphing node counts stay small (tens to low thousands), so everything
//! here is plain dense `L L^T` with no pivoting. Ill-conditioned inputs are
//! regularized by adding `lambda I` with `lambda` escalating through a short
//! ladder relative to the largest diagonal entry; the value actually used is
//! recorded on the factor.

use crate::error::{Error, Result};
use ndarray::{Array2, ArrayView2};

/// Jitter ladder, as multiples of `max(diag A)`. Zero is always tried first.
pub const JITTER_LADDER: [f64; 3] = [1e-12, 1e-10, 1e-8];

/// Lower-triangular Cholesky factor of `A + jitter * I`.
///
/// Immutable once built; solving on a shared factor is thread-safe.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    l: Array2<f64>,
    jitter: f64,
}

impl CholeskyFactor {
    /// Factor a symmetric matrix. Only the lower triangle of `a` is read,
    /// and `a` is never modified.
    ///
    /// Escalates the diagonal jitter through [`JITTER_LADDER`] (scaled by the
    /// largest diagonal entry) until the factorization succeeds; a matrix
    /// that still fails at the largest jitter is reported singular, which in
    /// practice means duplicated morphing nodes or a node inside the fixed
    /// region.
    pub fn factorize(a: ArrayView2<'_, f64>) -> Result<Self> {
        let (n, m) = a.dim();
        if n != m {
            return Err(Error::DimensionMismatch {
                context: "factorize: matrix must be square",
                expected: n,
                got: m,
            });
        }
        if n == 0 {
            return Err(Error::EmptyPointSet);
        }
        let max_diag = (0..n).map(|i| a[(i, i)]).fold(0.0f64, f64::max);
        let mut max_jitter = 0.0;
        for lambda_rel in std::iter::once(0.0).chain(JITTER_LADDER) {
            let lambda = lambda_rel * max_diag;
            max_jitter = lambda;
            if let Some(l) = try_factorize(&a, lambda) {
                return Ok(CholeskyFactor { l, jitter: lambda });
            }
        }
        Err(Error::SingularMatrix { max_jitter })
    }

    /// Dimension of the factored matrix.
    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// The lower-triangular factor.
    pub fn l(&self) -> &Array2<f64> {
        &self.l
    }

    /// Diagonal jitter that was actually added; 0 for well-conditioned input.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Solve `(A + jitter I) X = B` for a matrix of right-hand sides.
    pub fn solve(&self, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let n = self.dim();
        if b.nrows() != n {
            return Err(Error::DimensionMismatch {
                context: "solve: right-hand side rows",
                expected: n,
                got: b.nrows(),
            });
        }
        // Columns of a row-major array are strided, so substitute through
        // a contiguous scratch buffer.
        let mut x = b.to_owned();
        let mut work = vec![0.0f64; n];
        for mut col in x.columns_mut() {
            for (w, v) in work.iter_mut().zip(col.iter()) {
                *w = *v;
            }
            self.forward_in_place(&mut work);
            self.backward_in_place(&mut work);
            for (v, w) in col.iter_mut().zip(work.iter()) {
                *v = *w;
            }
        }
        Ok(x)
    }

    /// Forward substitution only: solve `L w = b`. Useful for posterior
    /// variance, where only `|w|^2` is needed.
    pub fn forward(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "forward: right-hand side length",
                expected: self.dim(),
                got: b.len(),
            });
        }
        let mut w = b.to_vec();
        self.forward_in_place(&mut w);
        Ok(w)
    }

    fn forward_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        let l = self.l.as_slice().expect("factor is contiguous");
        for i in 0..n {
            let row = &l[i * n..i * n + i];
            let mut s = b[i];
            for (lik, bk) in row.iter().zip(b.iter()) {
                s -= lik * bk;
            }
            b[i] = s / l[i * n + i];
        }
    }

    fn backward_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        let l = self.l.as_slice().expect("factor is contiguous");
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= l[k * n + i] * b[k];
            }
            b[i] = s / l[i * n + i];
        }
    }

    /// Factor of the bordered matrix `[[A, col], [col^T, diag]]`, reusing
    /// this factor. The new diagonal entry is `sqrt(diag - |w|^2)` with
    /// `L w = col`; a non-positive radicand means the new point has
    /// numerically zero posterior variance and extension must stop.
    ///
    /// The inherited jitter applies to the original block only; `diag` is
    /// used as given.
    pub fn extend(&self, col: &[f64], diag: f64) -> Result<Self> {
        let n = self.dim();
        let w = self.forward(col)?;
        let rem = diag - w.iter().map(|v| v * v).sum::<f64>();
        if rem <= 0.0 {
            return Err(Error::ZeroPosteriorVariance(rem));
        }
        let mut l = Array2::zeros((n + 1, n + 1));
        l.slice_mut(ndarray::s![..n, ..n]).assign(&self.l);
        for (j, wj) in w.iter().enumerate() {
            l[(n, j)] = *wj;
        }
        l[(n, n)] = rem.sqrt();
        Ok(CholeskyFactor {
            l,
            jitter: self.jitter,
        })
    }
}

/// Unblocked lower Cholesky of `A + lambda I`, reading only the lower
/// triangle. Returns `None` on a non-positive pivot.
fn try_factorize(a: &ArrayView2<'_, f64>, lambda: f64) -> Option<Array2<f64>> {
    let n = a.nrows();
    let mut l = Array2::zeros((n, n));
    for j in 0..n {
        let mut d = a[(j, j)] + lambda;
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}
