//! Thin wrappers over the dense eigensolvers plus the closed-form 2×2
//! propagator shared by the grid and two-level integrators.

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenpairs of a real symmetric matrix, ascending; columns are unit-norm.
pub fn symmetric_eigen(m: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let values = evd.S().column_vector().iter().copied().collect();
    Ok((values, evd.U().to_owned()))
}

/// Eigenpairs of a general complex matrix; columns are unit-norm (Hermitian).
pub fn complex_eigen(m: &Mat<Complex64>) -> Result<(Vec<Complex64>, Mat<Complex64>)> {
    let evd = m.eigen().map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let values: Vec<Complex64> = evd.S().column_vector().iter().copied().collect();
    if values.iter().any(|z| !z.is_finite()) {
        return Err(Error::Eigensolver("non-finite eigenvalue".into()));
    }
    let mut vectors = evd.U().to_owned();
    for j in 0..vectors.ncols() {
        let norm = (0..vectors.nrows())
            .map(|i| vectors[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if norm > 0.0 {
            for i in 0..vectors.nrows() {
                vectors[(i, j)] /= norm;
            }
        }
    }
    Ok((values, vectors))
}

pub fn complex_eigenvalues(m: &Mat<Complex64>) -> Result<Vec<Complex64>> {
    m.eigenvalues()
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))
}

/// `exp(-i H τ)` for the symmetric 2×2 matrix `H = [[a, c], [c, b]]`
/// (entries may be complex), as `[[u00, u01], [u01, u11]]`.
///
/// Uses `exp(-iHτ) = e^{-imτ}[cos(sτ) - i sin(sτ)/s (H - m)]` with
/// `m = (a+b)/2`, `s = sqrt(((a-b)/2)² + c²)`.
#[inline]
pub fn expm_symmetric_2x2(
    a: Complex64,
    b: Complex64,
    c: Complex64,
    tau: f64,
) -> [Complex64; 3] {
    let mean = (a + b) * 0.5;
    let half_diff = (a - b) * 0.5;
    let s = (half_diff * half_diff + c * c).sqrt();
    let phase = (Complex64::new(0.0, -tau) * mean).exp();
    let st = s * tau;
    let (cos, sinc) = if st.norm() < 1e-4 {
        // cos x ≈ 1 - x²/2 + x⁴/24, sin(x)/x ≈ 1 - x²/6 + x⁴/120
        let x2 = st * st;
        (
            1.0 - x2 * 0.5 + x2 * x2 / 24.0,
            (1.0 - x2 / 6.0 + x2 * x2 / 120.0) * tau,
        )
    } else {
        (st.cos(), st.sin() / s)
    };
    let mi = Complex64::new(0.0, -1.0);
    [
        phase * (cos + mi * sinc * half_diff),
        phase * (mi * sinc * c),
        phase * (cos - mi * sinc * half_diff),
    ]
}
