//! Reproducible model builders: seeded random dense or separable systems,
//! an N=3 tensor-product sanity instance, Yamaguchi momentum grids and
//! energy grids.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, ScatterError};
use crate::linop::{snorm, ComplexMatrix, FreeSpectrum, SpectralParameter};
use crate::momentum::{panelled_gauss_legendre, GridSpec, Yamaguchi};
use crate::multibody::ScatteringSystem;
use crate::twobody::{PairChannel, PairPotential};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    DenseHermitian,
    SeparableRank1,
}

#[derive(Debug, Clone, PartialEq)]
pub enum H0Kind {
    /// lambda_k = k (unit level spacing)
    Linear,
    /// lambda_k = k^2
    Quadratic,
    Explicit(Vec<f64>),
}

/// Deterministic model recipe: identical configs build bitwise-identical
/// systems.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub n_particles: u32,
    pub dim: usize,
    pub seed: u64,
    pub coupling_scale: f64,
    pub potential_kind: PotentialKind,
    pub h0_kind: H0Kind,
    pub inert_channels: Vec<(u32, u32)>,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 3 {
            return Err(ScatterError::Config(format!(
                "n_particles must be >= 3, got {}",
                self.n_particles
            )));
        }
        if self.dim < 2 {
            return Err(ScatterError::Config(format!(
                "dim must be >= 2, got {}",
                self.dim
            )));
        }
        if !self.coupling_scale.is_finite() {
            return Err(ScatterError::Config("coupling_scale must be finite".into()));
        }
        if let H0Kind::Explicit(levels) = &self.h0_kind {
            if levels.len() != self.dim {
                return Err(ScatterError::Config(format!(
                    "explicit spectrum has {} levels but dim = {}",
                    levels.len(),
                    self.dim
                )));
            }
        }
        for &(m, n) in &self.inert_channels {
            PairChannel::new(m, n).map_err(|e| ScatterError::Config(e.to_string()))?;
            if n > self.n_particles {
                return Err(ScatterError::Config(format!(
                    "inert channel ({m},{n}) outside an {}-particle system",
                    self.n_particles
                )));
            }
        }
        Ok(())
    }
}

fn spectrum_for(kind: &H0Kind, dim: usize) -> Result<FreeSpectrum> {
    let levels = match kind {
        H0Kind::Linear => (0..dim).map(|k| k as f64).collect(),
        H0Kind::Quadratic => (0..dim).map(|k| (k * k) as f64).collect(),
        H0Kind::Explicit(levels) => levels.clone(),
    };
    FreeSpectrum::new(levels)
}

fn channel_rng(seed: u64, channel: PairChannel) -> ChaCha8Rng {
    // distinct, order-independent stream per channel
    let tag = (channel.m() as u64) << 40 | (channel.n() as u64) << 8;
    ChaCha8Rng::seed_from_u64(seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn random_complex_matrix(rng: &mut ChaCha8Rng, dim: usize) -> ComplexMatrix {
    let normal = StandardNormal;
    ComplexMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(normal.sample(rng), normal.sample(rng))
    })
}

/// Random Hermitian matrix with unit spectral norm, so scaling by s yields
/// ||v|| = s exactly.
fn unit_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> ComplexMatrix {
    let a = random_complex_matrix(rng, dim);
    let h = (&a + a.adjoint()).scale(0.5);
    let n = snorm(&h);
    h.map(|c| c / n)
}

fn unit_form_factor(rng: &mut ChaCha8Rng, dim: usize) -> DVector<Complex64> {
    let normal = StandardNormal;
    let g = DVector::from_fn(dim, |_, _| {
        Complex64::new(normal.sample(rng), normal.sample(rng))
    });
    let n = g.norm();
    g.map(|c| c / n)
}

/// Builds a flat-space model: one shared d-dimensional space, one seeded
/// potential per non-inert channel, scaled by the coupling scale.
pub fn build_flat_model(cfg: &ModelConfig) -> Result<ScatteringSystem> {
    cfg.validate()?;
    let h0 = spectrum_for(&cfg.h0_kind, cfg.dim)?;
    let s = cfg.coupling_scale;
    let mut channels = Vec::new();
    for ch in PairChannel::all(cfg.n_particles) {
        let inert = cfg
            .inert_channels
            .iter()
            .any(|&(m, n)| m == ch.m() && n == ch.n());
        let pot = if inert || s == 0.0 {
            PairPotential::inert(cfg.dim)
        } else {
            let mut rng = channel_rng(cfg.seed, ch);
            match cfg.potential_kind {
                PotentialKind::DenseHermitian => {
                    PairPotential::dense(unit_hermitian(&mut rng, cfg.dim).map(|c| c * s))?
                }
                PotentialKind::SeparableRank1 => {
                    // attractive by convention so binding scales appear
                    PairPotential::separable(-s, unit_form_factor(&mut rng, cfg.dim))?
                }
            }
        };
        channels.push((ch, pot));
    }
    ScatteringSystem::new(cfg.n_particles, h0, channels)
}

/// Structured N=3 instance on a two-factor product space (one relative
/// degree of freedom per spectator split, per-particle dimension p, total
/// dimension p^2): v_12 acts on the first factor, v_13 on the second, and
/// v_23 is the exchange-symmetric combination.
pub fn build_tensor_model_n3(
    per_particle_dim: usize,
    pair_potential: &PairPotential,
) -> Result<ScatteringSystem> {
    let p = per_particle_dim;
    if p < 2 || p > 4 {
        return Err(ScatterError::Config(format!(
            "per-particle dimension must be in 2..=4, got {p}"
        )));
    }
    if pair_potential.dim() != p {
        return Err(ScatterError::Config(format!(
            "pair potential dim {} must equal per-particle dim {p}",
            pair_potential.dim()
        )));
    }
    let w = pair_potential.matrix();
    let eye = ComplexMatrix::identity(p, p);
    let v12 = w.kronecker(&eye);
    let v13 = eye.kronecker(&w);
    let v23 = (&v12 + &v13).scale(0.5);

    // H0 = h (x) 1 + 1 (x) h with h = diag(0..p-1)
    let levels: Vec<f64> = (0..p)
        .flat_map(|i| (0..p).map(move |j| (i + j) as f64))
        .collect();
    let h0 = FreeSpectrum::new(levels)?;

    let channels = vec![
        (PairChannel::new(1, 2)?, PairPotential::dense(v12)?),
        (PairChannel::new(1, 3)?, PairPotential::dense(v13)?),
        (PairChannel::new(2, 3)?, PairPotential::dense(v23)?),
    ];
    ScatteringSystem::new(3, h0, channels)
}

/// Builds a Yamaguchi momentum grid together with its weight-dressed
/// discrete separable potential, so that matrix inner products on the grid
/// approximate the continuum radial integrals.
pub fn build_yamaguchi_grid(
    beta: f64,
    lambda: f64,
    nodes: usize,
    cutoff: f64,
    on_shell_momentum: f64,
) -> Result<(PairPotential, GridSpec)> {
    if cutoff <= beta {
        return Err(ScatterError::Config(format!(
            "cutoff {cutoff} must exceed the form-factor range beta = {beta}"
        )));
    }
    if nodes < 16 {
        return Err(ScatterError::Config(format!(
            "need at least 16 nodes, got {nodes}"
        )));
    }
    let yam = Yamaguchi::new(beta, lambda)?;
    let q_break = (2.0 * on_shell_momentum).max(4.0 * beta).min(0.5 * cutoff);
    let (p, w) = panelled_gauss_legendre(&[0.0, q_break, cutoff], nodes);
    let grid = GridSpec::new(p, w, cutoff, on_shell_momentum)?;
    let dressed = DVector::from_iterator(
        grid.nodes().len(),
        grid.nodes().iter().zip(grid.weights()).map(|(&q, &wt)| {
            Complex64::new(wt.sqrt() * q * yam.form_factor(q), 0.0)
        }),
    );
    let pot = if lambda == 0.0 {
        PairPotential::inert(grid.nodes().len())
    } else {
        PairPotential::separable(lambda, dressed)?
    };
    Ok((pot, grid))
}

/// Free spectrum associated with a momentum grid: H0 = diag(p_i^2).
pub fn grid_spectrum(grid: &GridSpec) -> Result<FreeSpectrum> {
    FreeSpectrum::new(grid.nodes().iter().map(|&p| p * p).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Logarithmic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsMode {
    /// every grid point carries the same eps
    Fixed,
    /// eps_i = eps * Re(z_i), keeping the regulator proportional to the energy
    Proportional,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyGridSpec {
    pub e_min: f64,
    pub e_max: f64,
    pub points: usize,
    pub spacing: Spacing,
    pub eps: f64,
    pub eps_mode: EpsMode,
}

impl EnergyGridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.e_min > 0.0 && self.e_min < self.e_max && self.e_max.is_finite()) {
            return Err(ScatterError::Config(format!(
                "energy grid requires 0 < e_min < e_max, got [{}, {}]",
                self.e_min, self.e_max
            )));
        }
        if self.points < 2 {
            return Err(ScatterError::Config(format!(
                "energy grid needs at least 2 points, got {}",
                self.points
            )));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(ScatterError::Config(format!(
                "eps must be strictly positive, got {}",
                self.eps
            )));
        }
        Ok(())
    }
}

/// Deterministic ordered energy grid.
pub fn energy_grid(spec: &EnergyGridSpec) -> Result<Vec<SpectralParameter>> {
    spec.validate()?;
    let n = spec.points;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / (n - 1) as f64;
        let e = match spec.spacing {
            Spacing::Linear => spec.e_min + t * (spec.e_max - spec.e_min),
            Spacing::Logarithmic => {
                (spec.e_min.ln() + t * (spec.e_max.ln() - spec.e_min.ln())).exp()
            }
        };
        let eps = match spec.eps_mode {
            EpsMode::Fixed => spec.eps,
            EpsMode::Proportional => spec.eps * e,
        };
        out.push(SpectralParameter::new(e, eps)?);
    }
    Ok(out)
}
