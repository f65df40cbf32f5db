//! N-particle assembly: the exact transition operator, its Faddeev channel
//! decomposition, the Heitler K-matrix split, and the approximation
//! hierarchy (impulse, linearized-K, unitary impulse, Osborn N=3).

use crate::error::{Result, ScatterError};
use crate::linop::{
    identity, resolvent_free, snorm, solve_shifted, ComplexMatrix, FreeSpectrum, SpectralParameter,
};
use crate::twobody::{solve_k_pair, solve_t_pair, PairChannel, PairPotential};

/// Finite-dimensional model of N >= 3 particles: a free spectrum plus one
/// Hermitian pair potential per channel. All potentials act on one shared
/// d-dimensional space; the operator identities are basis-independent.
#[derive(Debug, Clone)]
pub struct ScatteringSystem {
    n_particles: u32,
    h0: FreeSpectrum,
    channels: Vec<(PairChannel, PairPotential)>,
}

impl ScatteringSystem {
    pub fn new(
        n_particles: u32,
        h0: FreeSpectrum,
        channels: Vec<(PairChannel, PairPotential)>,
    ) -> Result<Self> {
        if n_particles < 3 {
            return Err(ScatterError::InvalidInput(format!(
                "need at least 3 particles, got {n_particles}"
            )));
        }
        let expected = PairChannel::all(n_particles);
        let got: Vec<PairChannel> = channels.iter().map(|(c, _)| *c).collect();
        if got != expected {
            return Err(ScatterError::InvalidInput(format!(
                "channel list must cover all {} pairs in lexicographic order",
                expected.len()
            )));
        }
        for (c, v) in &channels {
            if v.dim() != h0.dim() {
                return Err(ScatterError::ShapeMismatch(format!(
                    "channel {c} potential dim {} vs system dim {}",
                    v.dim(),
                    h0.dim()
                )));
            }
        }
        Ok(Self {
            n_particles,
            h0,
            channels,
        })
    }

    pub fn n_particles(&self) -> u32 {
        self.n_particles
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    pub fn h0(&self) -> &FreeSpectrum {
        &self.h0
    }

    pub fn channels(&self) -> &[(PairChannel, PairPotential)] {
        &self.channels
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn potentials(&self) -> Vec<PairPotential> {
        self.channels.iter().map(|(_, v)| v.clone()).collect()
    }

    /// Total interaction V = sum_a v_a.
    pub fn total_potential(&self) -> ComplexMatrix {
        let dim = self.dim();
        let mut v = ComplexMatrix::zeros(dim, dim);
        for (_, pot) in &self.channels {
            v += pot.matrix();
        }
        v
    }

    /// Same system with every pair potential multiplied by `s`.
    pub fn scaled(&self, s: f64) -> ScatteringSystem {
        ScatteringSystem {
            n_particles: self.n_particles,
            h0: self.h0.clone(),
            channels: self
                .channels
                .iter()
                .map(|(c, v)| (*c, v.scaled(s)))
                .collect(),
        }
    }

    /// Same system with the given channel replaced by a zero potential.
    pub fn with_inert_channel(&self, channel: PairChannel) -> ScatteringSystem {
        ScatteringSystem {
            n_particles: self.n_particles,
            h0: self.h0.clone(),
            channels: self
                .channels
                .iter()
                .map(|(c, v)| {
                    if *c == channel {
                        (*c, PairPotential::inert(self.dim()))
                    } else {
                        (*c, v.clone())
                    }
                })
                .collect(),
        }
    }
}

/// Kind tag distinguishing the channel-indexed operator families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    /// Two-body T_a driven by G0
    TPair,
    /// Two-body K_a driven by G2
    KPair,
    /// Faddeev component T^a
    TComponent,
    /// Heitler component K^a
    KComponent,
    /// Linearized-K component script-T^b
    ScriptT,
}

/// One complex matrix per channel, iterated in lexicographic channel order.
#[derive(Debug, Clone)]
pub struct ChannelOperatorSet {
    kind: OperatorKind,
    entries: Vec<(PairChannel, ComplexMatrix)>,
}

impl ChannelOperatorSet {
    pub fn new(kind: OperatorKind, entries: Vec<(PairChannel, ComplexMatrix)>) -> Result<Self> {
        let dim = entries
            .first()
            .map(|(_, m)| m.nrows())
            .ok_or_else(|| ScatterError::InvalidInput("empty channel set".into()))?;
        let mut prev: Option<PairChannel> = None;
        for (c, m) in &entries {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(ScatterError::ShapeMismatch(format!(
                    "channel {c} matrix is {}x{}, expected {dim}x{dim}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if let Some(p) = prev {
                if *c <= p {
                    return Err(ScatterError::InvalidInput(
                        "channels must be strictly increasing".into(),
                    ));
                }
            }
            prev = Some(*c);
        }
        Ok(Self { kind, entries })
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.entries[0].1.nrows()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PairChannel, &ComplexMatrix)> {
        self.entries.iter().map(|(c, m)| (c, m))
    }

    pub fn get(&self, channel: PairChannel) -> Option<&ComplexMatrix> {
        self.entries
            .iter()
            .find(|(c, _)| *c == channel)
            .map(|(_, m)| m)
    }

    pub fn matrices(&self) -> impl Iterator<Item = &ComplexMatrix> {
        self.entries.iter().map(|(_, m)| m)
    }

    pub fn sum(&self) -> ComplexMatrix {
        let dim = self.dim();
        let mut s = ComplexMatrix::zeros(dim, dim);
        for (_, m) in &self.entries {
            s += m;
        }
        s
    }
}

fn channel_pole(e: ScatterError, channel: PairChannel) -> ScatterError {
    match e {
        ScatterError::PoleProximity { detail, .. } => ScatterError::PoleProximity {
            channel: Some(channel),
            detail,
        },
        other => other,
    }
}

/// All two-body T_a(z) of the system, solved channel by channel with G0(z).
pub fn pair_t_set(sys: &ScatteringSystem, z: &SpectralParameter) -> Result<ChannelOperatorSet> {
    let g0 = resolvent_free(sys.h0(), z);
    let entries = sys
        .channels()
        .iter()
        .map(|(c, v)| Ok((*c, solve_t_pair(v, &g0).map_err(|e| channel_pole(e, *c))?)))
        .collect::<Result<Vec<_>>>()?;
    ChannelOperatorSet::new(OperatorKind::TPair, entries)
}

/// All two-body K_a(z), solved with the Hermitian part G2(z).
pub fn pair_k_set(sys: &ScatteringSystem, z: &SpectralParameter) -> Result<ChannelOperatorSet> {
    let (_, g2) = crate::linop::green_split(sys.h0(), z);
    let entries = sys
        .channels()
        .iter()
        .map(|(c, v)| Ok((*c, solve_k_pair(v, &g2).map_err(|e| channel_pole(e, *c))?)))
        .collect::<Result<Vec<_>>>()?;
    ChannelOperatorSet::new(OperatorKind::KPair, entries)
}

/// Exact N-particle T(z) = (1 - V G0)^{-1} V, the ground-truth oracle for
/// every approximation in this module.
pub fn exact_t(sys: &ScatteringSystem, z: &SpectralParameter) -> Result<ComplexMatrix> {
    let v = sys.total_potential();
    let g0 = resolvent_free(sys.h0(), z);
    let kernel = &v * &g0;
    solve_shifted(&kernel, &v, "exact_t").map_err(|e| ScatterError::PoleProximity {
        channel: None,
        detail: format!("N-body T at z = {:?}: {e}", z.z()),
    })
}

/// Exact Heitler K(z) = (1 - V G2)^{-1} V; Hermitian for Hermitian V.
pub fn heitler_exact_k(sys: &ScatteringSystem, z: &SpectralParameter) -> Result<ComplexMatrix> {
    let v = sys.total_potential();
    let (_, g2) = crate::linop::green_split(sys.h0(), z);
    let kernel = &v * &g2;
    solve_shifted(&kernel, &v, "heitler_exact_k").map_err(|e| ScatterError::PoleProximity {
        channel: None,
        detail: format!("N-body K at z = {:?}: {e}", z.z()),
    })
}

/// Solves the coupled component system X^a = P_a + P_a G sum_{b != a} X^b
/// as one assembled (C d) x (C d) block linear system.
fn solve_components(
    pair_ops: &ChannelOperatorSet,
    green: &ComplexMatrix,
    kind: OperatorKind,
    context: &str,
) -> Result<ChannelOperatorSet> {
    let c = pair_ops.len();
    let d = pair_ops.dim();
    let n = c * d;
    let mut big = ComplexMatrix::identity(n, n);
    let mut rhs = ComplexMatrix::zeros(n, d);
    let coupling: Vec<ComplexMatrix> = pair_ops.matrices().map(|t| t * green).collect();
    for (a, (_, t_a)) in pair_ops.entries.iter().enumerate() {
        rhs.view_mut((a * d, 0), (d, d)).copy_from(t_a);
        for b in 0..c {
            if b != a {
                let mut block = big.view_mut((a * d, b * d), (d, d));
                block -= &coupling[a];
            }
        }
    }
    let cond = crate::linop::condition_estimate(&big);
    if !cond.is_finite() || cond > crate::linop::CONDITION_LIMIT {
        return Err(ScatterError::NearSingular {
            condition: cond,
            context: context.to_string(),
        });
    }
    let sol = big.lu().solve(&rhs).ok_or(ScatterError::NearSingular {
        condition: cond,
        context: context.to_string(),
    })?;
    let entries = pair_ops
        .entries
        .iter()
        .enumerate()
        .map(|(a, (ch, _))| (*ch, sol.view((a * d, 0), (d, d)).into_owned()))
        .collect();
    ChannelOperatorSet::new(kind, entries)
}

/// Faddeev components T^a(z) solving
/// T^a = T_a + T_a G0 sum_{b != a} T^b; their sum reproduces exact_t.
pub fn faddeev_solve(sys: &ScatteringSystem, z: &SpectralParameter) -> Result<ChannelOperatorSet> {
    let t_pairs = pair_t_set(sys, z)?;
    let g0 = resolvent_free(sys.h0(), z);
    solve_components(&t_pairs, &g0, OperatorKind::TComponent, "faddeev_solve")
        .map_err(|e| annotate_energy(e, z))
}

/// Heitler components K^a(z) solving
/// K^a = K_a + K_a G2 sum_{b != a} K^b; their sum reproduces heitler_exact_k.
pub fn k_components_solve(
    sys: &ScatteringSystem,
    z: &SpectralParameter,
) -> Result<ChannelOperatorSet> {
    let k_pairs = pair_k_set(sys, z)?;
    let (_, g2) = crate::linop::green_split(sys.h0(), z);
    solve_components(&k_pairs, &g2, OperatorKind::KComponent, "k_components_solve")
        .map_err(|e| annotate_energy(e, z))
}

fn annotate_energy(e: ScatterError, z: &SpectralParameter) -> ScatterError {
    match e {
        ScatterError::NearSingular { condition, context } => ScatterError::NearSingular {
            condition,
            context: format!("{context} at z = {:?}", z.z()),
        },
        other => other,
    }
}

/// T(z) = (1 - K G1)^{-1} K: the Heitler resummation of the exact K.
pub fn t_from_k_full(k: &ComplexMatrix, g1: &ComplexMatrix) -> Result<ComplexMatrix> {
    let kernel = k * g1;
    solve_shifted(&kernel, k, "t_from_k_full")
}

/// Impulse approximation T ~ sum_a T_a: single scattering only, not unitary.
pub fn impulse_t(t_pairs: &ChannelOperatorSet) -> ComplexMatrix {
    t_pairs.sum()
}

/// Linearized-K solution T = (1 - sum_a K_a G1)^{-1} sum_b K_b. The driving
/// operator stays Hermitian, so this form is unitary at any coupling.
pub fn linearized_t(k_pairs: &ChannelOperatorSet, g1: &ComplexMatrix) -> Result<ComplexMatrix> {
    let k_sum = k_pairs.sum();
    let kernel = &k_sum * g1;
    solve_shifted(&kernel, &k_sum, "linearized_t")
}

/// Per-channel components of the linearized solution, computed through two
/// algebraically equivalent routes:
/// `direct[b]  = (1 - sum_a K_a G1)^{-1} K_b` and
/// `transformed[b] = (1 - (1+T_b G1) sum_{a != b} (1+T_a G1)^{-1} T_a G1)^{-1} T_b`,
/// the second built solely from the pair T-matrices.
pub fn script_t_components(
    t_pairs: &ChannelOperatorSet,
    k_pairs: &ChannelOperatorSet,
    g1: &ComplexMatrix,
) -> Result<(ChannelOperatorSet, ChannelOperatorSet)> {
    if t_pairs.len() != k_pairs.len() || t_pairs.dim() != k_pairs.dim() {
        return Err(ScatterError::ShapeMismatch(
            "script_t_components: T and K sets must match".into(),
        ));
    }
    let dim = t_pairs.dim();
    let k_kernel = k_pairs.sum() * g1;

    let mut direct = Vec::with_capacity(k_pairs.len());
    for (ch, k_b) in k_pairs.iter() {
        let m = solve_shifted(&k_kernel, k_b, "script_t_components (direct)")
            .map_err(|e| channel_pole_named(e, *ch, "direct factor"))?;
        direct.push((*ch, m));
    }

    // per-channel (1 + T_a G1)^{-1} T_a G1 factors
    let mut folded = Vec::with_capacity(t_pairs.len());
    for (ch, t_a) in t_pairs.iter() {
        let tg = t_a * g1;
        let neg = -&tg;
        let m = solve_shifted(&neg, &tg, "script_t_components (pair factor)")
            .map_err(|e| channel_pole_named(e, *ch, "pair factor"))?;
        folded.push(m);
    }

    let mut transformed = Vec::with_capacity(t_pairs.len());
    for (b, (ch, t_b)) in t_pairs.iter().enumerate() {
        let mut inner = ComplexMatrix::zeros(dim, dim);
        for (a, f) in folded.iter().enumerate() {
            if a != b {
                inner += f;
            }
        }
        let one_plus = identity(dim) + t_b * g1;
        let kernel = &one_plus * inner;
        let m = solve_shifted(&kernel, t_b, "script_t_components (transformed)")
            .map_err(|e| channel_pole_named(e, *ch, "transformed factor"))?;
        transformed.push((*ch, m));
    }

    Ok((
        ChannelOperatorSet::new(OperatorKind::ScriptT, direct)?,
        ChannelOperatorSet::new(OperatorKind::ScriptT, transformed)?,
    ))
}

fn channel_pole_named(e: ScatterError, ch: PairChannel, what: &str) -> ScatterError {
    match e {
        ScatterError::NearSingular { condition, context } => ScatterError::PoleProximity {
            channel: Some(ch),
            detail: format!("{what}: condition {condition:.3e} in {context}"),
        },
        other => other,
    }
}

/// Unitary impulse approximation
/// T = sum_b (1 + sum_{g != b} T_g G1) T_b,
/// evaluated as written: sums of products, no linear solve or inversion.
pub fn unitary_impulse_t(t_pairs: &ChannelOperatorSet, g1: &ComplexMatrix) -> ComplexMatrix {
    let dim = t_pairs.dim();
    let mut total = ComplexMatrix::zeros(dim, dim);
    for (b, (_, t_b)) in t_pairs.iter().enumerate() {
        let mut prefactor = identity(dim);
        for (g, (_, t_g)) in t_pairs.iter().enumerate() {
            if g != b {
                prefactor += t_g * g1;
            }
        }
        total += prefactor * t_b;
    }
    total
}

/// Osborn fixed-centers formula for N = 3 with channel (2,3) inert:
/// T = (1 + T_13 G1) T_12 + (1 + T_12 G1) T_13.
pub fn osborn_t(
    t_12: &ComplexMatrix,
    t_13: &ComplexMatrix,
    g1: &ComplexMatrix,
) -> ComplexMatrix {
    let dim = t_12.nrows();
    (identity(dim) + t_13 * g1) * t_12 + (identity(dim) + t_12 * g1) * t_13
}

/// Relative gap ||a - b|| / max(||b||, floor).
pub fn relative_gap(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    snorm(&(a - b)) / snorm(b).max(crate::linop::RESIDUAL_FLOOR)
}
