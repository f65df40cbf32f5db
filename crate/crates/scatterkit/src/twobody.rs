//! Pair-channel operators: the two-body T-matrix driven by G0, the two-body
//! K-matrix driven by G2, their interrelations through G1, pair unitarity and
//! the bound-state search used to define the asymptotic energy scale.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Result, ScatterError};
use crate::linop::{
    self, adjoint, snorm, solve_shifted, ComplexMatrix, FreeSpectrum, RESIDUAL_FLOOR,
};

/// Unordered pair of 1-based particle indices labelling one interaction
/// channel alpha = (m, n), m < n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairChannel {
    m: u32,
    n: u32,
}

impl PairChannel {
    pub fn new(m: u32, n: u32) -> Result<Self> {
        if m == 0 || n == 0 || m >= n {
            return Err(ScatterError::InvalidInput(format!(
                "pair channel requires 1 <= m < n, got ({m}, {n})"
            )));
        }
        Ok(Self { m, n })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// All C = N(N-1)/2 channels of an N-particle system in lexicographic order.
    pub fn all(n_particles: u32) -> Vec<PairChannel> {
        let mut out = Vec::new();
        for m in 1..=n_particles {
            for n in (m + 1)..=n_particles {
                out.push(PairChannel { m, n });
            }
        }
        out
    }
}

impl std::fmt::Display for PairChannel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.m, self.n)
    }
}

/// One pair-interaction potential: either a dense Hermitian matrix or a
/// rank-1 separable form v = lambda * g g^+ (which admits closed-form T and K
/// matrices, the module's primary oracle).
#[derive(Debug, Clone, PartialEq)]
pub enum PairPotential {
    Dense(ComplexMatrix),
    Separable {
        strength: f64,
        form_factor: DVector<Complex64>,
    },
}

impl PairPotential {
    pub fn dense(m: ComplexMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(ScatterError::ShapeMismatch(
                "dense potential must be square".into(),
            ));
        }
        if !linop::all_finite(&m) {
            return Err(ScatterError::InvalidInput(
                "dense potential has non-finite entries".into(),
            ));
        }
        let scale = snorm(&m).max(1.0);
        if snorm(&(&m - m.adjoint())) > 1e-14 * scale {
            return Err(ScatterError::InvalidInput(
                "dense potential is not Hermitian".into(),
            ));
        }
        Ok(PairPotential::Dense(m))
    }

    pub fn separable(strength: f64, form_factor: DVector<Complex64>) -> Result<Self> {
        if !strength.is_finite() {
            return Err(ScatterError::InvalidInput(
                "separable strength must be finite".into(),
            ));
        }
        if form_factor.iter().all(|c| c.norm_sqr() == 0.0) {
            return Err(ScatterError::InvalidInput(
                "separable form factor must be nonzero".into(),
            ));
        }
        Ok(PairPotential::Separable {
            strength,
            form_factor,
        })
    }

    /// Explicitly inert channel (zero potential).
    pub fn inert(dim: usize) -> Self {
        PairPotential::Dense(ComplexMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        match self {
            PairPotential::Dense(m) => m.nrows(),
            PairPotential::Separable { form_factor, .. } => form_factor.len(),
        }
    }

    pub fn is_inert(&self) -> bool {
        match self {
            PairPotential::Dense(m) => m.iter().all(|c| c.norm_sqr() == 0.0),
            PairPotential::Separable { strength, .. } => *strength == 0.0,
        }
    }

    /// Dense matrix representation.
    pub fn matrix(&self) -> ComplexMatrix {
        match self {
            PairPotential::Dense(m) => m.clone(),
            PairPotential::Separable {
                strength,
                form_factor,
            } => {
                let g = form_factor;
                let outer = g * g.adjoint();
                outer.map(|c| c * *strength)
            }
        }
    }

    pub fn scaled(&self, s: f64) -> PairPotential {
        match self {
            PairPotential::Dense(m) => PairPotential::Dense(m.map(|c| c * s)),
            PairPotential::Separable {
                strength,
                form_factor,
            } => PairPotential::Separable {
                strength: strength * s,
                form_factor: form_factor.clone(),
            },
        }
    }
}

fn map_pole(e: ScatterError, channel: Option<PairChannel>, what: &str) -> ScatterError {
    match e {
        ScatterError::NearSingular { condition, context } => ScatterError::PoleProximity {
            channel,
            detail: format!("{what}: condition {condition:.3e} in {context}"),
        },
        other => other,
    }
}

/// Two-body T-matrix T_a = (1 - v G0)^{-1} v, the solution of
/// T_a = v + v G0 T_a.
pub fn solve_t_pair(v: &PairPotential, g0: &ComplexMatrix) -> Result<ComplexMatrix> {
    let vm = v.matrix();
    let kernel = &vm * g0;
    solve_shifted(&kernel, &vm, "solve_t_pair").map_err(|e| map_pole(e, None, "two-body T"))
}

/// Two-body K-matrix K_a = (1 - v G2)^{-1} v; Hermitian for Hermitian v
/// since G2 is Hermitian.
pub fn solve_k_pair(v: &PairPotential, g2: &ComplexMatrix) -> Result<ComplexMatrix> {
    let vm = v.matrix();
    let kernel = &vm * g2;
    solve_shifted(&kernel, &vm, "solve_k_pair").map_err(|e| map_pole(e, None, "two-body K"))
}

/// K_a = (1 + T_a G1)^{-1} T_a, the inverse of the two-body Heitler relation.
pub fn k_from_t(t: &ComplexMatrix, g1: &ComplexMatrix) -> Result<ComplexMatrix> {
    let kernel = -(t * g1);
    solve_shifted(&kernel, t, "k_from_t").map_err(|e| map_pole(e, None, "K from T"))
}

/// Relative residual of the two-body Heitler split
/// T_a = K_a + T_a G1 K_a, normalized by max(||T_a||, floor).
pub fn two_body_heitler_residual(
    t: &ComplexMatrix,
    k: &ComplexMatrix,
    g1: &ComplexMatrix,
) -> f64 {
    let r = t - k - t * g1 * k;
    snorm(&r) / snorm(t).max(RESIDUAL_FLOOR)
}

/// Absolute defect of the two-body unitarity relation
/// T_a - T_a^+ = 2 T_a^+ G1 T_a, exact at finite eps for Hermitian v.
pub fn pair_unitarity_defect(t: &ComplexMatrix, g1: &ComplexMatrix) -> f64 {
    let td = adjoint(t);
    let r = t - &td - (&td * g1 * t).scale(2.0);
    snorm(&r)
}

/// Largest eigenvalue of the Birman-Schwinger kernel
/// -(H0 - E)^{-1/2} v (H0 - E)^{-1/2} at real E below the spectrum.
fn birman_schwinger_max(v: &ComplexMatrix, h0: &FreeSpectrum, e: f64) -> f64 {
    let dim = h0.dim();
    let w = DVector::from_iterator(
        dim,
        h0.eigenvalues().iter().map(|&l| 1.0 / (l - e).sqrt()),
    );
    let m = ComplexMatrix::from_fn(dim, dim, |i, j| -v[(i, j)] * w[i] * w[j]);
    let eig = nalgebra::SymmetricEigen::new(m);
    eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Deepest binding energy of a single channel: the E < 0 where
/// det(1 - v G0(E)) = 0, found by bisection on the Birman-Schwinger
/// eigenvalue, which is monotone in E on the negative axis.
pub fn channel_binding_energy(v: &PairPotential, h0: &FreeSpectrum) -> Result<f64> {
    if v.is_inert() {
        return Ok(0.0);
    }
    let vm = v.matrix();
    if vm.nrows() != h0.dim() {
        return Err(ScatterError::ShapeMismatch(format!(
            "potential dim {} vs spectrum dim {}",
            vm.nrows(),
            h0.dim()
        )));
    }
    let scale = h0.width().max(snorm(&vm)).max(1.0);
    let hi = -1e-12 * scale;
    let lo = -100.0 * scale;
    if birman_schwinger_max(&vm, h0, hi) <= 1.0 {
        return Ok(0.0); // no bound state in this channel
    }
    if birman_schwinger_max(&vm, h0, lo) >= 1.0 {
        return Err(ScatterError::RootFind(format!(
            "binding energy below bracket [{lo}, {hi}]"
        )));
    }
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if birman_schwinger_max(&vm, h0, mid) >= 1.0 {
            hi = mid; // bound state lies at or below mid
        } else {
            lo = mid;
        }
        if hi - lo < 1e-12 * scale {
            break;
        }
    }
    Ok(0.5 * (lo + hi).abs())
}

/// |E_B_min|: the largest of all channel binding-energy magnitudes, 0 when
/// no channel binds. Sets the scale above which the asymptotic regime
/// Re(z) >> E_B_min applies.
pub fn min_binding_energy(v_set: &[PairPotential], h0: &FreeSpectrum) -> Result<f64> {
    if v_set.is_empty() {
        return Err(ScatterError::InvalidInput(
            "at least one channel potential required".into(),
        ));
    }
    let mut worst: f64 = 0.0;
    for v in v_set {
        worst = worst.max(channel_binding_energy(v, h0)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{green_split, op_norm, resolvent_free, SpectralParameter};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(dim: usize, scale: f64, seed: u64) -> ComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = ComplexMatrix::from_fn(dim, dim, |_, _| {
            c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let h = (&a + a.adjoint()).scale(0.5);
        let n = snorm(&h);
        h.map(|v| v * (scale / n))
    }

    fn test_spectrum(dim: usize) -> FreeSpectrum {
        FreeSpectrum::new((0..dim).map(|k| k as f64).collect()).unwrap()
    }

    #[test]
    fn zero_potential_gives_zero_t_and_k() {
        let h0 = test_spectrum(4);
        let z = SpectralParameter::new(1.3, 0.2).unwrap();
        let g0 = resolvent_free(&h0, &z);
        let (g1, g2) = green_split(&h0, &z);
        let v = PairPotential::inert(4);
        assert_eq!(snorm(&solve_t_pair(&v, &g0).unwrap()), 0.0);
        assert_eq!(snorm(&solve_k_pair(&v, &g2).unwrap()), 0.0);
        assert_eq!(
            snorm(&k_from_t(&ComplexMatrix::zeros(4, 4), &g1).unwrap()),
            0.0
        );
    }

    /// Closed-form separable solution: T = tau g g^+ with
    /// tau = lambda / (1 - lambda g^+ G0 g). This oracle is independent of
    /// the linear-solve path exercised by solve_t_pair.
    fn separable_oracle(
        lambda: f64,
        g: &DVector<Complex64>,
        green: &ComplexMatrix,
    ) -> ComplexMatrix {
        let gg = (g.adjoint() * green * g)[(0, 0)];
        let tau = lambda / (1.0 - lambda * gg);
        (g * g.adjoint()).map(|v| v * tau)
    }

    #[test]
    fn separable_t_matches_closed_form() {
        let h0 = test_spectrum(5);
        let z = SpectralParameter::new(0.45, 0.3).unwrap();
        let g0 = resolvent_free(&h0, &z);
        let g = DVector::from_fn(5, |i, _| c(1.0 / (1.0 + i as f64), 0.1 * i as f64));
        let lambda = -0.7;
        let v = PairPotential::separable(lambda, g.clone()).unwrap();
        let t = solve_t_pair(&v, &g0).unwrap();
        let oracle = separable_oracle(lambda, &g, &g0);
        assert!(snorm(&(&t - &oracle)) <= 1e-12 * snorm(&oracle));
    }

    #[test]
    fn separable_k_matches_closed_form_and_is_real_for_real_g() {
        let h0 = test_spectrum(5);
        let z = SpectralParameter::new(0.45, 0.3).unwrap();
        let (_, g2) = green_split(&h0, &z);
        let g = DVector::from_fn(5, |i, _| c(1.0 / (1.0 + i as f64), 0.0));
        let lambda = 0.4;
        let v = PairPotential::separable(lambda, g.clone()).unwrap();
        let k = solve_k_pair(&v, &g2).unwrap();
        let oracle = separable_oracle(lambda, &g, &g2);
        assert!(snorm(&(&k - &oracle)) <= 1e-12 * snorm(&oracle));
        // kappa real when g real: K entries have vanishing imaginary part
        assert!(k.iter().all(|v| v.im.abs() < 1e-13));
    }

    #[test]
    fn dense_t_satisfies_defining_equation() {
        let h0 = test_spectrum(6);
        let z = SpectralParameter::new(1.2, 0.4).unwrap();
        let g0 = resolvent_free(&h0, &z);
        let vm = random_hermitian(6, 0.8, 11);
        let v = PairPotential::dense(vm.clone()).unwrap();
        let t = solve_t_pair(&v, &g0).unwrap();
        let residual = snorm(&(&t - &vm - &vm * &g0 * &t));
        assert!(residual <= 1e-12 * snorm(&vm));
    }

    #[test]
    fn k_is_hermitian_for_hermitian_inputs() {
        let h0 = test_spectrum(6);
        let z = SpectralParameter::new(0.9, 0.25).unwrap();
        let (_, g2) = green_split(&h0, &z);
        let v = PairPotential::dense(random_hermitian(6, 0.5, 3)).unwrap();
        let k = solve_k_pair(&v, &g2).unwrap();
        assert!(snorm(&(&k - k.adjoint())) <= 1e-12 * snorm(&k));
    }

    #[test]
    fn route_consistency_t_k_triangle() {
        // solve_k_pair(v, G2) == k_from_t(solve_t_pair(v, G0), G1)
        let h0 = test_spectrum(6);
        for (seed, e0) in [(1u64, 0.4), (2, 1.7), (3, 3.3)] {
            let z = SpectralParameter::new(e0, 0.35).unwrap();
            let g0 = resolvent_free(&h0, &z);
            let (g1, g2) = green_split(&h0, &z);
            let v = PairPotential::dense(random_hermitian(6, 0.4, seed)).unwrap();
            let t = solve_t_pair(&v, &g0).unwrap();
            let k_direct = solve_k_pair(&v, &g2).unwrap();
            let k_via_t = k_from_t(&t, &g1).unwrap();
            assert!(snorm(&(&k_direct - &k_via_t)) <= 1e-10 * snorm(&k_direct));
            assert!(two_body_heitler_residual(&t, &k_direct, &g1) <= 1e-10);
        }
    }

    #[test]
    fn k_from_t_with_zero_g1_returns_t() {
        let t = random_hermitian(4, 0.3, 5);
        let g1 = ComplexMatrix::zeros(4, 4);
        let k = k_from_t(&t, &g1).unwrap();
        assert!(snorm(&(&k - &t)) <= 1e-14);
    }

    #[test]
    fn heitler_residual_detects_mismatch() {
        let h0 = test_spectrum(6);
        let z = SpectralParameter::new(1.1, 0.3).unwrap();
        let g0 = resolvent_free(&h0, &z);
        let (g1, g2) = green_split(&h0, &z);
        let v = PairPotential::dense(random_hermitian(6, 0.6, 9)).unwrap();
        let t = solve_t_pair(&v, &g0).unwrap();
        let k = solve_k_pair(&v, &g2).unwrap();
        assert!(two_body_heitler_residual(&t, &k, &g1) <= 1e-10);
        let k_bad = k.map(|v| v * 1.1);
        assert!(two_body_heitler_residual(&t, &k_bad, &g1) > 1e-3);
    }

    #[test]
    fn exact_pair_unitarity_and_born_violation() {
        let h0 = test_spectrum(6);
        let z = SpectralParameter::new(1.4, 0.3).unwrap();
        let g0 = resolvent_free(&h0, &z);
        let (g1, _) = green_split(&h0, &z);
        let vm = random_hermitian(6, 1.5, 21);
        let v = PairPotential::dense(vm.clone()).unwrap();
        let t = solve_t_pair(&v, &g0).unwrap();
        let tn = snorm(&t);
        assert!(pair_unitarity_defect(&t, &g1) <= 1e-12 * (tn * tn).max(1.0));
        // first Born term violates unitarity at second order in v
        let born_defect = pair_unitarity_defect(&vm, &g1);
        let second_order = snorm(&vm) * snorm(&vm) * snorm(&g1);
        assert!(born_defect > 0.01 * second_order);
    }

    #[test]
    fn no_binding_for_weak_repulsive_potentials() {
        let h0 = test_spectrum(4);
        let g = DVector::from_fn(4, |i, _| c(1.0 / (1.0 + i as f64), 0.0));
        let v = PairPotential::separable(0.05, g).unwrap();
        assert_eq!(min_binding_energy(&[v], &h0).unwrap(), 0.0);
    }

    #[test]
    fn separable_binding_agrees_with_dense_eigensolver() {
        let h0 = test_spectrum(4);
        let g = DVector::from_fn(4, |i, _| c(1.0 / (1.0 + i as f64), 0.0));
        let v = PairPotential::separable(-2.5, g).unwrap();
        let e_b = channel_binding_energy(&v, &h0).unwrap();
        assert!(e_b > 0.0);
        // independent oracle: lowest eigenvalue of H0 + v
        let dim = 4;
        let mut h = v.matrix();
        for i in 0..dim {
            h[(i, i)] += h0.eigenvalues()[i];
        }
        let eig = nalgebra::SymmetricEigen::new(h);
        let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min_eig < 0.0);
        assert!((e_b - min_eig.abs()).abs() < 1e-9);
    }

    #[test]
    fn deepest_binding_across_channels() {
        // tune lambda so each channel has a prescribed pole via the scalar
        // separable condition 1 = lambda g^+ (E - H0)^{-1} g
        let h0 = test_spectrum(4);
        let g = DVector::from_fn(4, |i, _| c(1.0 / (1.0 + i as f64), 0.0));
        let lambda_for = |e_b: f64| -> f64 {
            let s: f64 = (0..4)
                .map(|k| g[k].norm_sqr() / (e_b - h0.eigenvalues()[k]))
                .sum();
            1.0 / s
        };
        let v1 = PairPotential::separable(lambda_for(-0.3), g.clone()).unwrap();
        let v2 = PairPotential::separable(lambda_for(-0.7), g.clone()).unwrap();
        let worst = min_binding_energy(&[v1, v2], &h0).unwrap();
        assert!((worst - 0.7).abs() < 1e-8);
    }

    #[test]
    fn born_convergence_trend_in_energy() {
        // || T(z) - v || / ||v|| falls off as 1/Re(z) above the spectrum
        let h0 = test_spectrum(6);
        let v = PairPotential::dense(random_hermitian(6, 0.5, 33));
        let v = v.unwrap();
        let vm = v.matrix();
        let vn = op_norm(&vm).unwrap();
        let energies: Vec<f64> = (0..6).map(|k| 50.0 * 10f64.powf(k as f64 / 5.0)).collect();
        let mut residuals = Vec::new();
        for &e in &energies {
            let z = SpectralParameter::new(e, 0.05).unwrap();
            let g0 = resolvent_free(&h0, &z);
            let t = solve_t_pair(&v, &g0).unwrap();
            residuals.push(snorm(&(&t - &vm)) / vn);
        }
        let slope = linop::loglog_slope(&energies, &residuals);
        assert!((slope + 1.0).abs() < 0.2, "slope {slope}");
    }
}
