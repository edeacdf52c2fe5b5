//! Seed states (maximally entangled, isotropic, Werner) and the closed forms of
//! their isometric lifts (GHZ plus coloured noise, lifted Werner).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{antisym_projector, kron_all, min_eigenvalue};
use crate::matrix::{ComplexMatrix, MatrixJson, C64, HERMITIAN_TOL, ONE, ZERO};
use crate::shape::{capped_pow, SubsystemShape};

pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-9;

/// Set to `1` to skip the eigenvalue positivity check in release builds.
pub const SKIP_PSD_ENV: &str = "NONLOC_SKIP_PSD";

fn psd_check_enabled() -> bool {
    cfg!(debug_assertions) || std::env::var(SKIP_PSD_ENV).map_or(true, |v| v != "1")
}

/// A mixed state on a multipartite system.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    shape: SubsystemShape,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: ComplexMatrix, shape: SubsystemShape) -> Result<Self> {
        let state = Self::new_unchecked_psd(matrix, shape)?;
        if psd_check_enabled() {
            state.check_psd()?;
        }
        Ok(state)
    }

    /// Checks shape, Hermiticity and trace but not positivity.
    pub fn new_unchecked_psd(matrix: ComplexMatrix, shape: SubsystemShape) -> Result<Self> {
        shape.check_matrix(matrix.rows(), matrix.cols())?;
        let herm = matrix.hermitian_deviation();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        Ok(Self { matrix, shape })
    }

    /// Normalizes `|ψ⟩⟨ψ|`.
    pub fn pure(ket: &[C64], shape: SubsystemShape) -> Result<Self> {
        let norm_sq: f64 = ket.iter().map(|z| z.norm_sqr()).sum();
        if norm_sq == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let matrix = ComplexMatrix::projector(ket).scale_real(1.0 / norm_sq);
        Self::new_unchecked_psd(matrix, shape)
    }

    pub fn check_psd(&self) -> Result<()> {
        let min = min_eigenvalue(&self.matrix)?;
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn shape(&self) -> &SubsystemShape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).re
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        min_eigenvalue(&self.matrix)
    }
}

/// Wire form: the shared matrix object plus `dims`.
#[derive(Debug, Serialize, Deserialize)]
pub struct StateJson {
    #[serde(flatten)]
    pub matrix: MatrixJson,
    pub dims: Vec<usize>,
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StateJson {
            matrix: MatrixJson::from(&self.matrix),
            dims: self.shape.dims().to_vec(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = StateJson::deserialize(d)?;
        let matrix = ComplexMatrix::try_from(j.matrix).map_err(D::Error::custom)?;
        let shape = SubsystemShape::new(j.dims).map_err(D::Error::custom)?;
        DensityMatrix::new(matrix, shape).map_err(D::Error::custom)
    }
}

/// Mixing weight `p ∈ [0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct NoiseParameter(f64);

impl NoiseParameter {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("p = {p} is outside [0, 1]")));
        }
        Ok(Self(p))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for NoiseParameter {
    type Error = Error;

    fn try_from(p: f64) -> Result<Self> {
        Self::new(p)
    }
}

impl From<NoiseParameter> for f64 {
    fn from(p: NoiseParameter) -> f64 {
        p.0
    }
}

fn check_local_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("local dimension {d} below 2")));
    }
    Ok(())
}

fn check_cut(n: usize, l: usize) -> Result<()> {
    if n < 2 || l == 0 || l >= n {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= L <= N-1, got N = {n}, L = {l}"
        )));
    }
    Ok(())
}

/// `|i⟩^{⊗m}` as a basis index of `(C^d)^{⊗m}`.
pub(crate) fn repeated_index(i: usize, d: usize, m: usize) -> usize {
    // i·(d^m − 1)/(d − 1)
    (0..m).fold(0, |acc, _| acc * d + i)
}

/// `(1/√d) Σ_i |i⟩^{⊗N}` as a state vector.
fn ghz_ket(n: usize, d: usize) -> Result<Vec<C64>> {
    let dim = capped_pow(d, n)?;
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    let mut ket = vec![ZERO; dim];
    for i in 0..d {
        ket[repeated_index(i, d, n)] = amp;
    }
    Ok(ket)
}

fn maximally_mixed(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64)
}

fn mix(p: f64, a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    &a.scale_real(p) + &b.scale_real(1.0 - p)
}

/// `|ψ_d^+⟩ = (1/√d) Σ_i |ii⟩`.
pub fn max_entangled(d: usize) -> Result<DensityMatrix> {
    check_local_dim(d)?;
    ghz(2, d)
}

/// `p |ψ_d^+⟩⟨ψ_d^+| + (1 − p) 1/d²`.
pub fn isotropic(d: usize, p: NoiseParameter) -> Result<DensityMatrix> {
    let phi = max_entangled(d)?;
    let matrix = mix(p.value(), phi.matrix(), &maximally_mixed(d * d));
    DensityMatrix::new(matrix, SubsystemShape::uniform(2, d)?)
}

/// `p · 2 P_asym / (d(d−1)) + (1 − p) 1/d²`.
pub fn werner(d: usize, p: NoiseParameter) -> Result<DensityMatrix> {
    check_local_dim(d)?;
    let asym = antisym_projector(d)?.scale_real(2.0 / (d * (d - 1)) as f64);
    let matrix = mix(p.value(), &asym, &maximally_mixed(d * d));
    DensityMatrix::new(matrix, SubsystemShape::uniform(2, d)?)
}

/// `|GHZ_{N,d}⟩⟨GHZ_{N,d}|`.
pub fn ghz(n: usize, d: usize) -> Result<DensityMatrix> {
    check_local_dim(d)?;
    if n < 2 {
        return Err(Error::InvalidParameter(format!("GHZ needs N >= 2, got {n}")));
    }
    let ket = ghz_ket(n, d)?;
    DensityMatrix::pure(&ket, SubsystemShape::uniform(n, d)?)
}

/// `Σ_i |i⟩⟨i|^{⊗L}`: rank-`d` projector on `(C^d)^{⊗L}`.
pub fn colored_noise_projector(l: usize, d: usize) -> Result<ComplexMatrix> {
    check_local_dim(d)?;
    if l == 0 {
        return Err(Error::InvalidParameter("L must be at least 1".into()));
    }
    let dim = capped_pow(d, l)?;
    let mut out = ComplexMatrix::zeros(dim, dim);
    for i in 0..d {
        let k = repeated_index(i, d, l);
        out[(k, k)] = ONE;
    }
    Ok(out)
}

fn colored_noise(n: usize, l: usize, d: usize) -> Result<ComplexMatrix> {
    let left = colored_noise_projector(l, d)?;
    let right = colored_noise_projector(n - l, d)?;
    Ok(kron_all([&left, &right]).scale_real(1.0 / (d * d) as f64))
}

/// GHZ state mixed with coloured noise: the lift of `isotropic(d, p)` through
/// `V_L ⊗ V_{N−L}`.
pub fn sigma_ghz(n: usize, l: usize, d: usize, p: NoiseParameter) -> Result<DensityMatrix> {
    check_cut(n, l)?;
    capped_pow(d, n)?;
    let g = ghz(n, d)?;
    let matrix = mix(p.value(), g.matrix(), &colored_noise(n, l, d)?);
    DensityMatrix::new(matrix, SubsystemShape::uniform(n, d)?)
}

/// `(1/√2)(|i⟩^{⊗L}|j⟩^{⊗(N−L)} − |j⟩^{⊗L}|i⟩^{⊗(N−L)})`.
///
/// The minus sign is what `V_L ⊗ V_{N−L}` produces from the antisymmetric
/// vectors `(|ij⟩ − |ji⟩)/√2`; a plus sign would lift the symmetric part
/// instead and the closed form would disagree with the channel image.
pub fn lifted_antisym_ket(n: usize, l: usize, d: usize, i: usize, j: usize) -> Result<Vec<C64>> {
    check_cut(n, l)?;
    let dim = capped_pow(d, n)?;
    let tail = capped_pow(d, n - l)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut ket = vec![ZERO; dim];
    ket[repeated_index(i, d, l) * tail + repeated_index(j, d, n - l)] += s;
    ket[repeated_index(j, d, l) * tail + repeated_index(i, d, n - l)] -= s;
    Ok(ket)
}

/// `Σ_{i<j} |ψ_ij⟩⟨ψ_ij|` with the lifted antisymmetric vectors.
pub fn lifted_antisym_projector(n: usize, l: usize, d: usize) -> Result<ComplexMatrix> {
    let dim = capped_pow(d, n)?;
    let mut out = ComplexMatrix::zeros(dim, dim);
    for i in 0..d {
        for j in i + 1..d {
            out = &out + &ComplexMatrix::projector(&lifted_antisym_ket(n, l, d, i, j)?);
        }
    }
    Ok(out)
}

/// Lifted Werner state: the image of `werner(d, p)` under `V_L ⊗ V_{N−L}`.
pub fn sigma_werner(n: usize, l: usize, d: usize, p: NoiseParameter) -> Result<DensityMatrix> {
    check_cut(n, l)?;
    check_local_dim(d)?;
    let asym = lifted_antisym_projector(n, l, d)?.scale_real(2.0 / (d * (d - 1)) as f64);
    let matrix = mix(p.value(), &asym, &colored_noise(n, l, d)?);
    DensityMatrix::new(matrix, SubsystemShape::uniform(n, d)?)
}

/// The two lifted families: isotropic seed (GHZ plus coloured noise) and
/// Werner seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "iso-ghz")]
    IsoGhz,
    #[serde(rename = "werner-lift")]
    WernerLift,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::IsoGhz => "iso-ghz",
            Family::WernerLift => "werner-lift",
        }
    }

    /// Two-qudit seed state.
    pub fn seed(self, d: usize, p: NoiseParameter) -> Result<DensityMatrix> {
        match self {
            Family::IsoGhz => isotropic(d, p),
            Family::WernerLift => werner(d, p),
        }
    }

    /// Closed form of the lifted `N`-party state.
    pub fn lifted(self, n: usize, l: usize, d: usize, p: NoiseParameter) -> Result<DensityMatrix> {
        match self {
            Family::IsoGhz => sigma_ghz(n, l, d, p),
            Family::WernerLift => sigma_werner(n, l, d, p),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iso-ghz" | "iso" | "isotropic" => Ok(Family::IsoGhz),
            "werner-lift" | "werner" => Ok(Family::WernerLift),
            other => Err(Error::InvalidParameter(format!("unknown family {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::partial_trace;

    fn p(v: f64) -> NoiseParameter {
        NoiseParameter::new(v).unwrap()
    }

    #[test]
    fn noise_parameter_range() {
        assert!(NoiseParameter::new(-0.01).is_err());
        assert!(NoiseParameter::new(1.01).is_err());
        assert!(NoiseParameter::new(f64::NAN).is_err());
        assert_eq!(p(0.3).value(), 0.3);
    }

    #[test]
    fn max_entangled_qubit_entries() {
        let m = max_entangled(2).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let corner = [0, 3].contains(&i) && [0, 3].contains(&j);
                let expected = if corner { 0.5 } else { 0.0 };
                assert!((m.matrix()[(i, j)] - C64::new(expected, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn max_entangled_is_pure_with_mixed_marginals() {
        for d in 2..=4 {
            let m = max_entangled(d).unwrap();
            assert!((m.trace() - 1.0).abs() < 1e-12);
            assert!((m.purity() - 1.0).abs() < 1e-12);
            let reduced = partial_trace(m.matrix(), m.shape(), &[0]).unwrap();
            assert!(reduced.max_abs_diff(&maximally_mixed(d)) < 1e-12);
        }
    }

    #[test]
    fn isotropic_endpoints_and_overlap() {
        for d in 2..=3 {
            assert!(
                isotropic(d, p(0.0))
                    .unwrap()
                    .matrix()
                    .max_abs_diff(&maximally_mixed(d * d))
                    < 1e-15
            );
            assert!(
                isotropic(d, p(1.0))
                    .unwrap()
                    .matrix()
                    .max_abs_diff(max_entangled(d).unwrap().matrix())
                    < 1e-15
            );
        }
        // ⟨ψ+|ρ|ψ+⟩ = p + (1 − p)/4 = 5/8 at p = 1/2
        let rho = isotropic(2, p(0.5)).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi = [C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)];
        let rho_phi = rho.matrix().mul_vec(&phi);
        let overlap: C64 = phi.iter().zip(&rho_phi).map(|(a, b)| a.conj() * b).sum();
        assert!((overlap.re - 0.625).abs() < 1e-15);
    }

    #[test]
    fn werner_qubit_singlet_and_traces() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let singlet = ComplexMatrix::projector(&[ZERO, C64::new(s, 0.0), C64::new(-s, 0.0), ZERO]);
        assert!(werner(2, p(1.0)).unwrap().matrix().max_abs_diff(&singlet) < 1e-15);
        for d in 2..=4 {
            assert!(
                werner(d, p(0.0))
                    .unwrap()
                    .matrix()
                    .max_abs_diff(&maximally_mixed(d * d))
                    < 1e-15
            );
            for &v in &[0.0, 0.3, 0.7, 1.0] {
                assert!((werner(d, p(v)).unwrap().trace() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ghz_entries_and_purity() {
        assert_eq!(ghz(2, 3).unwrap(), max_entangled(3).unwrap());
        let g = ghz(3, 2).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let corner = [0, 7].contains(&i) && [0, 7].contains(&j);
                let expected = if corner { 0.5 } else { 0.0 };
                assert!((g.matrix()[(i, j)].re - expected).abs() < 1e-15);
            }
        }
        for (n, d) in [(3, 2), (4, 2), (3, 3)] {
            assert!((ghz(n, d).unwrap().purity() - 1.0).abs() < 1e-12);
        }
        assert!(ghz(1, 2).is_err());
        assert!(matches!(ghz(11, 2), Err(Error::SizeCapExceeded { .. })));
    }

    #[test]
    fn colored_noise_projector_cases() {
        assert_eq!(colored_noise_projector(1, 3).unwrap(), ComplexMatrix::identity(3));
        let p2 = colored_noise_projector(2, 2).unwrap();
        assert_eq!(p2, ComplexMatrix::from_real_diagonal(&[1.0, 0.0, 0.0, 1.0]));
        for l in 1..=4 {
            for d in 2..=3 {
                let pr = colored_noise_projector(l, d).unwrap();
                assert!((pr.trace().re - d as f64).abs() < 1e-15);
                assert!(pr.matmul(&pr).max_abs_diff(&pr) < 1e-15);
            }
        }
    }

    #[test]
    fn sigma_ghz_endpoints() {
        assert!(
            sigma_ghz(4, 2, 2, p(1.0))
                .unwrap()
                .matrix()
                .max_abs_diff(ghz(4, 2).unwrap().matrix())
                < 1e-15
        );
        for &v in &[0.0, 0.4, 1.0] {
            assert!((sigma_ghz(5, 2, 2, p(v)).unwrap().trace() - 1.0).abs() < 1e-12);
        }
        assert!(sigma_ghz(4, 0, 2, p(0.5)).is_err());
        assert!(sigma_ghz(4, 4, 2, p(0.5)).is_err());
    }

    #[test]
    fn sigma_werner_endpoints() {
        let noise = colored_noise(4, 2, 2).unwrap();
        assert!(sigma_werner(4, 2, 2, p(0.0)).unwrap().matrix().max_abs_diff(&noise) < 1e-15);
        for &v in &[0.0, 0.25, 0.5, 1.0] {
            assert!((sigma_werner(4, 2, 2, p(v)).unwrap().trace() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn repeated_index_matches_geometric_formula() {
        for d in 2..=4usize {
            for m in 1..=4u32 {
                for i in 0..d {
                    let expected = i * (d.pow(m) - 1) / (d - 1);
                    assert_eq!(repeated_index(i, d, m as usize), expected);
                }
            }
        }
    }

    #[test]
    fn state_json_roundtrip() {
        let s = sigma_ghz(3, 1, 2, p(0.4)).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains(r#""dims":[2,2,2]"#));
        let back: DensityMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_non_states() {
        let shape = SubsystemShape::uniform(1, 2).unwrap();
        assert!(DensityMatrix::new(ComplexMatrix::identity(2), shape.clone()).is_err());
        let neg = ComplexMatrix::from_real_diagonal(&[1.5, -0.5]);
        assert!(DensityMatrix::new(neg, shape.clone()).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::identity(3), shape).is_err());
    }
}
