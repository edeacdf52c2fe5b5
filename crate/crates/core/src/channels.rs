//! Kraus-form channels, the repetition isometry `V_M|i⟩ = |i⟩^{⊗M}`, dual maps
//! and the lifting of seed states through per-party channels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, kron_all};
use crate::matrix::{ComplexMatrix, C64, ONE};
use crate::shape::{capped_pow, check_size, SubsystemShape};
use crate::states::{repeated_index, DensityMatrix};

/// Tolerance on `Σ K†K = 1`.
pub const CPTP_TOL: f64 = 1e-10;
/// Tolerance on `V†V = 1` for isometries.
pub const ISOMETRY_TOL: f64 = 1e-12;
/// Maximum deviation accepted when probing a left inverse on matrix units.
pub const INVERSE_PROBE_TOL: f64 = 1e-10;

/// A completely positive trace-preserving map from `C^in_dim` onto a
/// multipartite output system.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumChannel {
    kraus: Vec<ComplexMatrix>,
    in_dim: usize,
    out_shape: SubsystemShape,
}

impl QuantumChannel {
    pub fn new(kraus: Vec<ComplexMatrix>, in_dim: usize, out_shape: SubsystemShape) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::InvalidChannel("no Kraus operators".into()));
        }
        let out_dim = out_shape.total_dim();
        if let Some(k) = kraus.iter().find(|k| k.rows() != out_dim || k.cols() != in_dim) {
            return Err(Error::InvalidChannel(format!(
                "Kraus operator is {}x{}, expected {out_dim}x{in_dim}",
                k.rows(),
                k.cols()
            )));
        }
        let ch = Self {
            kraus,
            in_dim,
            out_shape,
        };
        let dev = ch.completeness_deviation();
        if dev > CPTP_TOL {
            return Err(Error::InvalidChannel(format!(
                "not trace preserving (deviation {dev:e})"
            )));
        }
        Ok(ch)
    }

    pub fn identity(d: usize) -> Result<Self> {
        Self::new(vec![ComplexMatrix::identity(d)], d, SubsystemShape::uniform(1, d)?)
    }

    /// `ρ ↦ Tr(ρ) 1/d`.
    pub fn completely_depolarizing(d: usize) -> Result<Self> {
        let scale = C64::new(1.0 / (d as f64).sqrt(), 0.0);
        let mut kraus = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let mut k = ComplexMatrix::zeros(d, d);
                k[(i, j)] = scale;
                kraus.push(k);
            }
        }
        Self::new(kraus, d, SubsystemShape::uniform(1, d)?)
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_shape(&self) -> &SubsystemShape {
        &self.out_shape
    }

    pub fn out_dim(&self) -> usize {
        self.out_shape.total_dim()
    }

    /// `max |Σ K†K − 1|`.
    pub fn completeness_deviation(&self) -> f64 {
        let sum = self
            .kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.in_dim, self.in_dim), |acc, k| {
                &acc + &k.adjoint().matmul(k)
            });
        sum.max_abs_diff(&ComplexMatrix::identity(self.in_dim))
    }

    /// `Λ(ρ) = Σ K ρ K†`.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.rows() != self.in_dim || rho.cols() != self.in_dim {
            return Err(Error::DimensionMismatch(format!(
                "channel input is {0}x{0}, got {1}x{2}",
                self.in_dim,
                rho.rows(),
                rho.cols()
            )));
        }
        let out = self.out_dim();
        Ok(self
            .kraus
            .iter()
            .fold(ComplexMatrix::zeros(out, out), |acc, k| &acc + &k.conjugate(rho)))
    }

    /// Heisenberg dual `Λ†(X) = Σ K† X K`, fixed by `Tr(Λ(ρ)X) = Tr(ρ Λ†(X))`.
    pub fn apply_dual(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let out = self.out_dim();
        if x.rows() != out || x.cols() != out {
            return Err(Error::DimensionMismatch(format!(
                "dual map input is {out}x{out}, got {}x{}",
                x.rows(),
                x.cols()
            )));
        }
        Ok(self
            .kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.in_dim, self.in_dim), |acc, k| {
                &acc + &k.adjoint().matmul(x).matmul(k)
            }))
    }

    /// The single Kraus operator, if this channel is an isometric conjugation.
    pub fn as_isometry(&self) -> Option<&ComplexMatrix> {
        match self.kraus.as_slice() {
            [v] => Some(v),
            _ => None,
        }
    }
}

/// A `d^M × d` isometry.
#[derive(Clone, Debug, PartialEq)]
pub struct Isometry {
    v: ComplexMatrix,
}

impl Isometry {
    pub fn new(v: ComplexMatrix) -> Result<Self> {
        if v.rows() < v.cols() {
            return Err(Error::InvalidChannel(format!(
                "{}x{} matrix cannot be an isometry",
                v.rows(),
                v.cols()
            )));
        }
        let dev = v.adjoint().matmul(&v).max_abs_diff(&ComplexMatrix::identity(v.cols()));
        if dev > ISOMETRY_TOL {
            return Err(Error::InvalidChannel(format!("V†V deviates from 1 by {dev:e}")));
        }
        Ok(Self { v })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.v
    }

    pub fn in_dim(&self) -> usize {
        self.v.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.v.rows()
    }
}

/// `V_M : C^d → (C^d)^{⊗M}`, `V_M|i⟩ = |i⟩^{⊗M}`.
pub fn isometry_embed(m: usize, d: usize) -> Result<Isometry> {
    if m == 0 {
        return Err(Error::InvalidParameter("isometry needs M >= 1".into()));
    }
    if d < 2 {
        return Err(Error::InvalidParameter(format!("local dimension {d} below 2")));
    }
    let rows = capped_pow(d, m)?;
    let mut v = ComplexMatrix::zeros(rows, d);
    for i in 0..d {
        v[(repeated_index(i, d, m), i)] = ONE;
    }
    Ok(Isometry { v })
}

/// `Λ(ρ) = V ρ V†`.
pub fn channel_from_isometry(v: &Isometry, out_shape: SubsystemShape) -> Result<QuantumChannel> {
    if out_shape.total_dim() != v.out_dim() {
        return Err(Error::DimensionMismatch(format!(
            "isometry output dimension {} does not match shape {:?}",
            v.out_dim(),
            out_shape.dims()
        )));
    }
    QuantumChannel::new(vec![v.matrix().clone()], v.in_dim(), out_shape)
}

/// Channel conjugating by `V_M` with output shape `[d; M]`.
pub fn embed_channel(m: usize, d: usize) -> Result<QuantumChannel> {
    channel_from_isometry(&isometry_embed(m, d)?, SubsystemShape::uniform(m, d)?)
}

/// `(Λ_A ⊗ Λ_B)(ρ_AB)`.
pub fn lift_bipartite(rho: &DensityMatrix, ch_a: &QuantumChannel, ch_b: &QuantumChannel) -> Result<DensityMatrix> {
    if rho.shape().parties() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "bipartite lift needs a 2-party seed, got {} parties",
            rho.shape().parties()
        )));
    }
    lift_kpartite(rho, &[ch_a.clone(), ch_b.clone()])
}

/// `(Λ_1 ⊗ … ⊗ Λ_K)(ρ)`; party `k` of the seed becomes group `k` of the output.
pub fn lift_kpartite(rho: &DensityMatrix, chans: &[QuantumChannel]) -> Result<DensityMatrix> {
    let seed_dims = rho.shape().dims();
    if chans.len() != seed_dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} channels for a {}-party seed",
            chans.len(),
            seed_dims.len()
        )));
    }
    for (k, (ch, &d)) in chans.iter().zip(seed_dims).enumerate() {
        if ch.in_dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "channel {} takes dimension {}, seed party has {d}",
                k + 1,
                ch.in_dim()
            )));
        }
    }
    let out_shape = chans
        .iter()
        .skip(1)
        .fold(chans[0].out_shape().clone(), |acc, ch| acc.concat(ch.out_shape()));
    check_size(out_shape.total_dim())?;

    let out_dim = out_shape.total_dim();
    let mut out = ComplexMatrix::zeros(out_dim, out_dim);
    // Sum over every combination of Kraus indices.
    let counts: Vec<usize> = chans.iter().map(|c| c.kraus().len()).collect();
    let mut idx = vec![0usize; chans.len()];
    loop {
        let big = kron_all(chans.iter().zip(&idx).map(|(ch, &i)| &ch.kraus()[i]));
        out = &out + &big.conjugate(rho.matrix());
        let Some(pos) = (0..idx.len()).rev().find(|&p| idx[p] + 1 < counts[p]) else {
            break;
        };
        idx[pos] += 1;
        idx[pos + 1..].iter_mut().for_each(|i| *i = 0);
    }
    DensityMatrix::new(out, out_shape)
}

/// Whether some channel `W` satisfies `W ∘ Λ = id`.
///
/// The Kraus operators must satisfy `K_i†K_j = α_ij 1` (the whole input space
/// is correctable). When they do, an explicit recovery is built and composed
/// with `Λ` on every matrix unit `|i⟩⟨j|`; the answer is `true` only if every
/// probe comes back within [`INVERSE_PROBE_TOL`].
pub fn check_left_invertible(ch: &QuantumChannel) -> bool {
    left_inverse_probe_deviation(ch).is_some_and(|dev| dev < INVERSE_PROBE_TOL)
}

/// Largest deviation of `W(Λ(E_ij))` from `E_ij` over the matrix units, or
/// `None` when no recovery channel exists.
pub fn left_inverse_probe_deviation(ch: &QuantumChannel) -> Option<f64> {
    let recovery = Recovery::build(ch)?;
    let d = ch.in_dim();
    let mut worst = 0.0_f64;
    for i in 0..d {
        for j in 0..d {
            let mut unit = ComplexMatrix::zeros(d, d);
            unit[(i, j)] = ONE;
            let image = ch.apply(&unit).ok()?;
            worst = worst.max(recovery.apply(&image).max_abs_diff(&unit));
        }
    }
    Some(worst)
}

/// `X ↦ Σ R X R† + Tr(Q X) τ` with `τ = 1/d`.
struct Recovery {
    kraus: Vec<ComplexMatrix>,
    leftover: ComplexMatrix,
    in_dim: usize,
}

impl Recovery {
    fn build(ch: &QuantumChannel) -> Option<Self> {
        let d = ch.in_dim();
        let out = ch.out_dim();
        let ks = ch.kraus();
        let n = ks.len();
        // α_ij from K_i†K_j = α_ij 1
        let mut alpha = ComplexMatrix::zeros(n, n);
        let id = ComplexMatrix::identity(d);
        for i in 0..n {
            for j in 0..n {
                let g = ks[i].adjoint().matmul(&ks[j]);
                let a = g.trace() / d as f64;
                if g.max_abs_diff(&id.scale(a)) > CPTP_TOL {
                    return None;
                }
                alpha[(i, j)] = a;
            }
        }
        let (weights, u) = hermitian_eigen(&alpha).ok()?;
        let mut kraus = Vec::new();
        let mut range = ComplexMatrix::zeros(out, out);
        for (k, &w) in weights.iter().enumerate() {
            if w <= CPTP_TOL {
                continue;
            }
            // F_k = Σ_i u_ik K_i has F_k†F_k = w_k 1
            let f = (0..n).fold(ComplexMatrix::zeros(out, d), |acc, i| &acc + &ks[i].scale(u[(i, k)]));
            range = &range + &f.matmul(&f.adjoint()).scale_real(1.0 / w);
            kraus.push(f.adjoint().scale_real(1.0 / w.sqrt()));
        }
        let leftover = &ComplexMatrix::identity(out) - &range;
        Some(Self {
            kraus,
            leftover,
            in_dim: d,
        })
    }

    fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let d = self.in_dim;
        let spill = self.leftover.trace_product(x);
        let tau = ComplexMatrix::identity(d).scale(spill / d as f64);
        self.kraus.iter().fold(tau, |acc, r| &acc + &r.conjugate(x))
    }
}

/// Wire form: `{"in_dim": d, "out_dims": [...], "kraus": [matrix, ...]}`.
#[derive(Debug, Serialize, Deserialize)]
pub struct ChannelJson {
    pub in_dim: usize,
    pub out_dims: Vec<usize>,
    pub kraus: Vec<ComplexMatrix>,
}

impl Serialize for QuantumChannel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ChannelJson {
            in_dim: self.in_dim,
            out_dims: self.out_shape.dims().to_vec(),
            kraus: self.kraus.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for QuantumChannel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = ChannelJson::deserialize(d)?;
        let shape = SubsystemShape::new(j.out_dims).map_err(D::Error::custom)?;
        QuantumChannel::new(j.kraus, j.in_dim, shape).map_err(D::Error::custom)
    }
}
