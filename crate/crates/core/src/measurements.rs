//! POVMs, Born-rule probability tables, dual-map pullback of product
//! measurements and the no-signalling check.

use serde::{Deserialize, Serialize};

use crate::channels::QuantumChannel;
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, hermitian_function, kron_all};
use crate::matrix::{ComplexMatrix, HERMITIAN_TOL};
use crate::partition::KPartition;
use crate::random::{ginibre, stream_rng};
use crate::states::DensityMatrix;

/// Tolerance on effect positivity and on `Σ E = 1`.
pub const POVM_TOL: f64 = 1e-10;
/// Eigenvalue floor applied before inverting the effect sum.
pub const WHITENING_FLOOR: f64 = 1e-12;
/// Attempts before [`random_povm`] gives up on a singular effect sum.
pub const WHITENING_ATTEMPTS: usize = 5;
/// Probabilities in `[-PROB_CLAMP, 0)` are exported as 0.
pub const PROB_CLAMP: f64 = 1e-12;

/// A generalized measurement: positive effects summing to the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    effects: Vec<ComplexMatrix>,
    labels: Vec<String>,
}

impl Povm {
    /// Effects labelled `0, 1, …`.
    pub fn new(effects: Vec<ComplexMatrix>) -> Result<Self> {
        let labels = (0..effects.len()).map(|i| i.to_string()).collect();
        Self::with_labels(effects, labels)
    }

    pub fn with_labels(effects: Vec<ComplexMatrix>, labels: Vec<String>) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::InvalidPovm("no effects".into()));
        }
        if labels.len() != effects.len() {
            return Err(Error::InvalidPovm(format!(
                "{} labels for {} effects",
                labels.len(),
                effects.len()
            )));
        }
        let povm = Self { effects, labels };
        let (min_eig, completeness) = povm.validity()?;
        if min_eig < -POVM_TOL {
            return Err(Error::InvalidPovm(format!("effect eigenvalue {min_eig:e}")));
        }
        if completeness > POVM_TOL {
            return Err(Error::InvalidPovm(format!(
                "effects sum to identity only within {completeness:e}"
            )));
        }
        Ok(povm)
    }

    /// Smallest effect eigenvalue and `max |Σ E − 1|`.
    pub fn validity(&self) -> Result<(f64, f64)> {
        let dim = self.effects[0].rows();
        let mut sum = ComplexMatrix::zeros(dim, dim);
        let mut min_eig = f64::INFINITY;
        for e in &self.effects {
            if e.rows() != dim || e.cols() != dim {
                return Err(Error::InvalidPovm(format!(
                    "effect is {}x{}, expected {dim}x{dim}",
                    e.rows(),
                    e.cols()
                )));
            }
            if e.hermitian_deviation() > HERMITIAN_TOL {
                return Err(Error::InvalidPovm("effect is not Hermitian".into()));
            }
            min_eig = min_eig.min(eigenvalues(e)?[0]);
            sum = &sum + e;
        }
        Ok((min_eig, sum.max_abs_diff(&ComplexMatrix::identity(dim))))
    }

    pub fn dim(&self) -> usize {
        self.effects[0].rows()
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Same measurement with an extra all-zero outcome appended.
    pub fn padded(&self) -> Self {
        let mut povm = self.clone();
        povm.effects.push(ComplexMatrix::zeros(self.dim(), self.dim()));
        povm.labels.push(self.len().to_string());
        povm
    }
}

/// Wire form: `{"dim": d, "effects": [matrix, ...]}`.
#[derive(Debug, Serialize, Deserialize)]
pub struct PovmJson {
    pub dim: usize,
    pub effects: Vec<ComplexMatrix>,
}

impl Serialize for Povm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PovmJson {
            dim: self.dim(),
            effects: self.effects.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Povm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = PovmJson::deserialize(d)?;
        let povm = Povm::new(j.effects).map_err(D::Error::custom)?;
        if povm.dim() != j.dim {
            return Err(D::Error::custom(format!(
                "declared dim {} but effects are {}x{}",
                j.dim,
                povm.dim(),
                povm.dim()
            )));
        }
        Ok(povm)
    }
}

/// Random POVM with `n_outcomes` effects on `C^d`.
///
/// Draws `G_a` with standard complex Gaussian entries, forms `E_a = G_a G_a†`
/// and whitens with `S^{-1/2}` where `S = Σ E_a`. A numerically singular `S`
/// triggers a redraw on the next RNG stream of the same seed.
pub fn random_povm(d: usize, n_outcomes: usize, seed: u64) -> Result<Povm> {
    if n_outcomes < 2 {
        return Err(Error::InvalidParameter(format!(
            "random POVM needs at least 2 outcomes, got {n_outcomes}"
        )));
    }
    if d < 1 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    for attempt in 0..WHITENING_ATTEMPTS {
        let mut rng = stream_rng(seed, attempt as u64);
        let raw: Vec<ComplexMatrix> = (0..n_outcomes)
            .map(|_| {
                let g = ginibre(&mut rng, d, d);
                g.matmul(&g.adjoint())
            })
            .collect();
        let sum = raw.iter().fold(ComplexMatrix::zeros(d, d), |acc, e| &acc + e);
        let sum = (&sum + &sum.adjoint()).scale_real(0.5);
        if eigenvalues(&sum)?[0] < WHITENING_FLOOR {
            continue;
        }
        let inv_sqrt = hermitian_function(&sum, |v| v.max(WHITENING_FLOOR).powf(-0.5))?;
        let effects = raw
            .iter()
            .map(|e| {
                let w = inv_sqrt.matmul(e).matmul(&inv_sqrt);
                (&w + &w.adjoint()).scale_real(0.5)
            })
            .collect();
        return Povm::new(effects);
    }
    Err(Error::SingularWhitening(WHITENING_ATTEMPTS))
}

/// Rank-one projectors onto the columns of `unitary`.
pub fn projective_basis_povm(d: usize, unitary: &ComplexMatrix) -> Result<Povm> {
    if unitary.rows() != d || unitary.cols() != d {
        return Err(Error::DimensionMismatch(format!(
            "expected a {d}x{d} unitary, got {}x{}",
            unitary.rows(),
            unitary.cols()
        )));
    }
    let dev = unitary.unitary_deviation();
    if dev > POVM_TOL {
        return Err(Error::NotUnitary(dev));
    }
    let effects = (0..d).map(|j| ComplexMatrix::projector(&unitary.column(j))).collect();
    Povm::new(effects)
}

/// Computational-basis measurement on `C^d`.
pub fn computational_povm(d: usize) -> Povm {
    Povm::new((0..d).map(|i| ComplexMatrix::basis_projector(d, i)).collect()).expect("basis projectors form a POVM")
}

/// Row-major flattening of an outcome tuple over `axes`.
pub fn flatten_outcome(tuple: &[usize], axes: &[usize]) -> usize {
    debug_assert_eq!(tuple.len(), axes.len());
    tuple.iter().zip(axes).fold(0, |acc, (&a, &n)| {
        debug_assert!(a < n);
        acc * n + a
    })
}

/// Inverse of [`flatten_outcome`].
pub fn unflatten_outcome(mut index: usize, axes: &[usize]) -> Vec<usize> {
    let mut tuple = vec![0; axes.len()];
    for (slot, &n) in tuple.iter_mut().zip(axes).rev() {
        *slot = index % n;
        index /= n;
    }
    tuple
}

/// Joint outcome distribution, row-major over `axes`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbTable {
    axes: Vec<usize>,
    values: Vec<f64>,
}

impl ProbTable {
    pub const NEGATIVITY_TOL: f64 = 1e-12;
    pub const NORMALIZATION_TOL: f64 = 1e-10;

    pub fn new(axes: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let table = Self::new_unchecked(axes, values)?;
        if let Some(v) = table.values.iter().find(|&&v| v < -Self::NEGATIVITY_TOL) {
            return Err(Error::InvalidParameter(format!("negative probability {v:e}")));
        }
        let total: f64 = table.values.iter().sum();
        if (total - 1.0).abs() > Self::NORMALIZATION_TOL {
            return Err(Error::InvalidParameter(format!("probabilities sum to {total}")));
        }
        Ok(table)
    }

    fn new_unchecked(axes: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let n: usize = axes.iter().product();
        if values.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "axes {axes:?} need {n} values, got {}",
                values.len()
            )));
        }
        Ok(Self { axes, values })
    }

    pub fn axes(&self) -> &[usize] {
        &self.axes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, outcome: &[usize]) -> f64 {
        self.values[flatten_outcome(outcome, &self.axes)]
    }

    /// Marginal on the listed parties (ascending order in the result).
    pub fn marginal(&self, keep: &[usize]) -> ProbTable {
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        let axes: Vec<usize> = keep.iter().map(|&k| self.axes[k]).collect();
        let mut values = vec![0.0; axes.iter().product()];
        for (i, &v) in self.values.iter().enumerate() {
            let tuple = unflatten_outcome(i, &self.axes);
            let sub: Vec<usize> = keep.iter().map(|&k| tuple[k]).collect();
            values[flatten_outcome(&sub, &axes)] += v;
        }
        ProbTable { axes, values }
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.values.len() != other.values.len() {
            return Err(Error::DimensionMismatch(format!(
                "tables have {} and {} entries",
                self.values.len(),
                other.values.len()
            )));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Wire form: `{"axes": [...], "values": [...]}`; tiny negatives export as 0.
#[derive(Debug, Serialize, Deserialize)]
pub struct ProbTableJson {
    pub axes: Vec<usize>,
    pub values: Vec<f64>,
}

impl Serialize for ProbTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ProbTableJson {
            axes: self.axes.clone(),
            values: self
                .values
                .iter()
                .map(|&v| if (-PROB_CLAMP..0.0).contains(&v) { 0.0 } else { v })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProbTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = ProbTableJson::deserialize(d)?;
        ProbTable::new(j.axes, j.values).map_err(serde::de::Error::custom)
    }
}

/// `p(a_1 … a_N) = Tr[(M_{a_1} ⊗ … ⊗ M_{a_N}) ρ]`, one POVM per party.
pub fn born_table(state: &DensityMatrix, povms: &[Povm]) -> Result<ProbTable> {
    let dims = state.shape().dims();
    if povms.len() != dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} POVMs for {} parties",
            povms.len(),
            dims.len()
        )));
    }
    for (k, (povm, &d)) in povms.iter().zip(dims).enumerate() {
        if povm.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "POVM for party {} acts on dimension {}, party has {d}",
                k + 1,
                povm.dim()
            )));
        }
    }
    let axes: Vec<usize> = povms.iter().map(Povm::len).collect();
    let n: usize = axes.iter().product();
    let values = (0..n)
        .map(|i| {
            let tuple = unflatten_outcome(i, &axes);
            let op = kron_all(povms.iter().zip(&tuple).map(|(m, &a)| &m.effects[a]));
            op.trace_product(state.matrix()).re
        })
        .collect();
    ProbTable::new_unchecked(axes, values)
}

/// Pulls a product measurement on the channel's output parties back to its
/// input: effect `(a_1 … a_L)` is `Λ†(M_{a_1} ⊗ … ⊗ M_{a_L})`, outcomes
/// flattened row-major (see [`flatten_outcome`]).
pub fn dual_povm_product(ch: &QuantumChannel, group_povms: &[Povm]) -> Result<Povm> {
    let out_dims = ch.out_shape().dims();
    if group_povms.len() != out_dims.len() || group_povms.iter().zip(out_dims).any(|(m, &d)| m.dim() != d) {
        return Err(Error::DimensionMismatch(format!(
            "POVM dimensions {:?} do not match channel output {:?}",
            group_povms.iter().map(Povm::dim).collect::<Vec<_>>(),
            out_dims
        )));
    }
    let axes: Vec<usize> = group_povms.iter().map(Povm::len).collect();
    let n: usize = axes.iter().product();
    let mut effects = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let tuple = unflatten_outcome(i, &axes);
        let op = kron_all(group_povms.iter().zip(&tuple).map(|(m, &a)| &m.effects[a]));
        let pulled = ch.apply_dual(&op)?;
        effects.push((&pulled + &pulled.adjoint()).scale_real(0.5));
        labels.push(
            tuple
                .iter()
                .zip(group_povms)
                .map(|(&a, m)| m.labels[a].as_str())
                .collect::<Vec<_>>()
                .join(","),
        );
    }
    Povm::with_labels(effects, labels)
}

/// Outcome tables for every joint measurement setting.
#[derive(Clone, Debug, PartialEq)]
pub struct SettingsTable {
    settings_axes: Vec<usize>,
    tables: Vec<ProbTable>,
}

impl SettingsTable {
    /// `tables` is row-major over the joint setting index; all tables share
    /// one party count.
    pub fn new(settings_axes: Vec<usize>, tables: Vec<ProbTable>) -> Result<Self> {
        let n: usize = settings_axes.iter().product();
        if tables.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "settings axes {settings_axes:?} need {n} tables, got {}",
                tables.len()
            )));
        }
        if tables.iter().any(|t| t.axes.len() != settings_axes.len()) {
            return Err(Error::DimensionMismatch(
                "every table needs one outcome axis per party".into(),
            ));
        }
        Ok(Self { settings_axes, tables })
    }

    /// Born tables of `state` for every combination of per-party settings.
    pub fn from_born(state: &DensityMatrix, settings: &[Vec<Povm>]) -> Result<Self> {
        let axes: Vec<usize> = settings.iter().map(Vec::len).collect();
        let n: usize = axes.iter().product();
        let tables = (0..n)
            .map(|i| {
                let choice = unflatten_outcome(i, &axes);
                let povms: Vec<Povm> = settings.iter().zip(&choice).map(|(s, &c)| s[c].clone()).collect();
                born_table(state, &povms)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(axes, tables)
    }

    pub fn settings_axes(&self) -> &[usize] {
        &self.settings_axes
    }

    pub fn tables(&self) -> &[ProbTable] {
        &self.tables
    }

    pub fn table(&self, setting: &[usize]) -> &ProbTable {
        &self.tables[flatten_outcome(setting, &self.settings_axes)]
    }
}

/// Largest change of any group's marginal when only the other groups change
/// their settings. Zero means no-signalling.
pub fn check_no_signalling(st: &SettingsTable, partition: &KPartition) -> Result<f64> {
    if partition.parties() != st.settings_axes.len() {
        return Err(Error::DimensionMismatch(format!(
            "partition covers {} parties, table has {}",
            partition.parties(),
            st.settings_axes.len()
        )));
    }
    let mut worst = 0.0_f64;
    for group in partition.groups() {
        let mut sorted = group.clone();
        sorted.sort_unstable();
        let own_axes: Vec<usize> = sorted.iter().map(|&k| st.settings_axes[k]).collect();
        let classes: usize = own_axes.iter().product();
        // per own-setting: running min and max of each marginal entry
        let mut bounds: Vec<Option<(Vec<f64>, Vec<f64>)>> = vec![None; classes];
        for (s, table) in st.tables.iter().enumerate() {
            let setting = unflatten_outcome(s, &st.settings_axes);
            let own: Vec<usize> = sorted.iter().map(|&k| setting[k]).collect();
            let marginal = table.marginal(&sorted);
            let (lo, hi) = bounds[flatten_outcome(&own, &own_axes)]
                .get_or_insert_with(|| (marginal.values.clone(), marginal.values.clone()));
            if lo.len() != marginal.values.len() {
                return Err(Error::DimensionMismatch(
                    "a group's outcome count changes with remote settings".into(),
                ));
            }
            for (j, &v) in marginal.values.iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
        for (lo, hi) in bounds.iter().flatten() {
            for (a, b) in lo.iter().zip(hi) {
                worst = worst.max(b - a);
            }
        }
    }
    Ok(worst)
}
