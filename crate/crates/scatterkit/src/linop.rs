//! Dense complex operator algebra shared by all higher modules: free
//! resolvents, the Hermitian/anti-Hermitian Green function split, spectral
//! norms and the `(1 - A)X = B` solver.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Result, ScatterError};

/// Dense square complex matrix; all operator symbols (T, V, K, G0, G1, G2,
/// channel components) are concrete values of this type.
pub type ComplexMatrix = DMatrix<Complex64>;

pub type ComplexVector = DVector<Complex64>;

/// Condition estimate above which `(1 - A)X = B` solves are refused:
/// past this point double-precision residual guarantees are meaningless.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Floor used when normalizing residuals, so free-particle (zero operator)
/// cases do not divide by zero.
pub const RESIDUAL_FLOOR: f64 = 1e-30;

/// The complex energy z = E0 + i eps with eps strictly positive. The
/// conjugate point is always derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParameter {
    e0: f64,
    eps: f64,
}

impl SpectralParameter {
    pub fn new(e0: f64, eps: f64) -> Result<Self> {
        if !e0.is_finite() || !eps.is_finite() {
            return Err(ScatterError::InvalidInput(
                "spectral parameter must be finite".into(),
            ));
        }
        if eps <= 0.0 {
            return Err(ScatterError::Domain(format!(
                "eps must be strictly positive, got {eps}"
            )));
        }
        Ok(Self { e0, eps })
    }

    pub fn e0(&self) -> f64 {
        self.e0
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.e0, self.eps)
    }

    /// The conjugate point z~ = E0 - i eps.
    pub fn z_conj(&self) -> Complex64 {
        Complex64::new(self.e0, -self.eps)
    }
}

/// Diagonal spectrum of the free Hamiltonian H0 (kinetic energy is diagonal
/// in the momentum basis, so only the eigenvalues are stored).
#[derive(Debug, Clone, PartialEq)]
pub struct FreeSpectrum {
    eigenvalues: Vec<f64>,
}

impl FreeSpectrum {
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(ScatterError::InvalidInput("empty spectrum".into()));
        }
        for &e in &eigenvalues {
            if !e.is_finite() || e < 0.0 {
                return Err(ScatterError::InvalidInput(format!(
                    "free spectrum must be nonnegative and finite, got {e}"
                )));
            }
        }
        Ok(Self { eigenvalues })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Largest eigenvalue (spectral width for spectra starting at 0).
    pub fn width(&self) -> f64 {
        self.eigenvalues.iter().cloned().fold(0.0, f64::max)
    }
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn all_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|c| c.re.is_finite() && c.im.is_finite())
}

/// Spectral norm (largest singular value). Infallible inner routine;
/// callers that accept untrusted matrices go through [`op_norm`].
pub(crate) fn snorm(m: &ComplexMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let svd = m.clone().svd(false, false);
    svd.singular_values.iter().cloned().fold(0.0, f64::max)
}

/// Spectral norm with input validation.
pub fn op_norm(m: &ComplexMatrix) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(ScatterError::ShapeMismatch(format!(
            "op_norm expects a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !all_finite(m) {
        return Err(ScatterError::InvalidInput(
            "matrix contains non-finite entries".into(),
        ));
    }
    Ok(snorm(m))
}

pub fn frobenius_norm(m: &ComplexMatrix) -> f64 {
    m.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Tolerance-based matrix comparison; equality is never bitwise.
pub fn approx_eq(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
    a.shape() == b.shape() && snorm(&(a - b)) <= tol
}

pub fn adjoint(m: &ComplexMatrix) -> ComplexMatrix {
    m.adjoint()
}

/// Free resolvent G0(z) = (z - H0)^{-1}, exact on the diagonal spectrum.
pub fn resolvent_free(h0: &FreeSpectrum, z: &SpectralParameter) -> ComplexMatrix {
    resolvent_at(h0, z.z())
}

/// Resolvent at an arbitrary complex energy off the spectrum; used for the
/// conjugate point and for real-axis bound-state searches.
pub fn resolvent_at(h0: &FreeSpectrum, z: Complex64) -> ComplexMatrix {
    let dim = h0.dim();
    ComplexMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            Complex64::new(1.0, 0.0) / (z - h0.eigenvalues[i])
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Split of the free Green function into its anti-Hermitian part
/// G1 = (G0(z) - G0(z~))/2 and Hermitian part G2 = (G0(z) + G0(z~))/2.
pub fn green_split(h0: &FreeSpectrum, z: &SpectralParameter) -> (ComplexMatrix, ComplexMatrix) {
    let g = resolvent_at(h0, z.z());
    let gc = resolvent_at(h0, z.z_conj());
    let g1 = (&g - &gc).scale(0.5);
    let g2 = (&g + &gc).scale(0.5);
    (g1, g2)
}

/// One row of the eps -> 0 convergence table: ||G1(z)|| and the gap between
/// G2(z) and the principal-value resolvent diag(1/(e0 - lambda_k)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitRow {
    pub eps: f64,
    pub g1_norm: f64,
    pub g2_pv_gap: f64,
}

/// Convergence trend of the Green function split toward its eps -> 0 limits
/// at an off-spectrum energy: ||G1|| vanishes linearly in eps, the gap
/// between G2 and the principal-value resolvent quadratically.
pub fn green_limits_check(
    h0: &FreeSpectrum,
    e0: f64,
    eps_sequence: &[f64],
) -> Result<Vec<LimitRow>> {
    for &lambda in h0.eigenvalues() {
        if (e0 - lambda).abs() <= f64::EPSILON * e0.abs().max(1.0) {
            return Err(ScatterError::DegenerateInput {
                e0,
                eigenvalue: lambda,
            });
        }
    }
    let dim = h0.dim();
    let pv = ComplexMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            Complex64::new(1.0 / (e0 - h0.eigenvalues[i]), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let mut rows = Vec::with_capacity(eps_sequence.len());
    for &eps in eps_sequence {
        let z = SpectralParameter::new(e0, eps)?;
        let (g1, g2) = green_split(h0, &z);
        rows.push(LimitRow {
            eps,
            g1_norm: snorm(&g1),
            g2_pv_gap: snorm(&(&g2 - &pv)),
        });
    }
    Ok(rows)
}

/// Solves (1 - A) X = B by LU factorization, never by explicit inversion.
/// Refuses systems whose SVD condition estimate exceeds [`CONDITION_LIMIT`].
pub fn solve_operator_equation(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    solve_shifted(a, b, "solve_operator_equation")
}

pub(crate) fn solve_shifted(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    context: &str,
) -> Result<ComplexMatrix> {
    if a.nrows() != a.ncols() || a.nrows() != b.nrows() {
        return Err(ScatterError::ShapeMismatch(format!(
            "{context}: incompatible shapes {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    if !all_finite(a) || !all_finite(b) {
        return Err(ScatterError::InvalidInput(format!(
            "{context}: non-finite entries"
        )));
    }
    let m = identity(a.nrows()) - a;
    let cond = condition_estimate(&m);
    if !cond.is_finite() || cond > CONDITION_LIMIT {
        return Err(ScatterError::NearSingular {
            condition: cond,
            context: context.to_string(),
        });
    }
    let lu = m.clone().lu();
    lu.solve(b).ok_or(ScatterError::NearSingular {
        condition: cond,
        context: context.to_string(),
    })
}

/// sigma_max / sigma_min condition estimate.
pub fn condition_estimate(m: &ComplexMatrix) -> f64 {
    let svd = m.clone().svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let smin = svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Least-squares slope of ln(y) against ln(x); used by scan trend fits.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let pairs: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(&x, &y)| x > 0.0 && y > 0.0)
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
