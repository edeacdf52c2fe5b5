//! Subsystem-indexed operations on multipartite operators: partial trace and
//! transpose, tensor-factor permutations, symmetric-subspace projectors and
//! Hermitian spectra.

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64, HERMITIAN_TOL, ONE, ZERO};
use crate::shape::{capped_pow, SubsystemShape};

/// Largest party count accepted by [`sym_projector`] (8! permutation terms).
pub const MAX_SYM_PARTIES: usize = 8;

/// Offset of every multi-index over `parties` into the full index space.
///
/// Entry `a` (row-major over the listed parties, in the listed order) holds
/// `Σ_k digit_k(a) · stride(parties[k])`.
fn digit_offsets(shape: &SubsystemShape, parties: &[usize]) -> Vec<usize> {
    let strides = shape.strides();
    let dims = shape.dims();
    let mut offsets = vec![0usize];
    for &p in parties {
        let mut next = Vec::with_capacity(offsets.len() * dims[p]);
        for &o in &offsets {
            for digit in 0..dims[p] {
                next.push(o + digit * strides[p]);
            }
        }
        offsets = next;
    }
    offsets
}

fn complement(n: usize, parties: &[usize]) -> Vec<usize> {
    (0..n).filter(|k| !parties.contains(k)).collect()
}

/// Kronecker product of a sequence of operators, left to right.
pub fn kron_all<'a>(ops: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    ops.into_iter().fold(ComplexMatrix::identity(1), |acc, m| acc.kron(m))
}

/// Reduces `rho` onto the parties in `keep` (0-based). The result is ordered by
/// ascending party index.
pub fn partial_trace(rho: &ComplexMatrix, shape: &SubsystemShape, keep: &[usize]) -> Result<ComplexMatrix> {
    shape.check_matrix(rho.rows(), rho.cols())?;
    shape.check_indices(keep)?;
    let mut kept = keep.to_vec();
    kept.sort_unstable();
    let traced = complement(shape.parties(), &kept);
    let keep_off = digit_offsets(shape, &kept);
    let trace_off = digit_offsets(shape, &traced);
    let n = keep_off.len();
    Ok(ComplexMatrix::from_fn(n, n, |r, c| {
        trace_off.iter().map(|&t| rho[(keep_off[r] + t, keep_off[c] + t)]).sum()
    }))
}

/// Transposes the tensor factors listed in `subset` (0-based).
pub fn partial_transpose(rho: &ComplexMatrix, shape: &SubsystemShape, subset: &[usize]) -> Result<ComplexMatrix> {
    shape.check_matrix(rho.rows(), rho.cols())?;
    shape.check_indices(subset)?;
    let n = shape.total_dim();
    let strides = shape.strides();
    let dims = shape.dims();
    // Part of each full index contributed by the transposed parties.
    let sub_part: Vec<usize> = (0..n)
        .map(|i| subset.iter().map(|&p| (i / strides[p]) % dims[p] * strides[p]).sum())
        .collect();
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let ni = i - sub_part[i] + sub_part[j];
            let nj = j - sub_part[j] + sub_part[i];
            out[(ni, nj)] = rho[(i, j)];
        }
    }
    Ok(out)
}

/// Applies `op` to the listed parties of `x` from the left: `(op ⊗ 1) · x`,
/// with `op` acting on `targets` in the listed order.
pub fn apply_on_parties(
    op: &ComplexMatrix,
    targets: &[usize],
    shape: &SubsystemShape,
    x: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    shape.check_indices(targets)?;
    let local = shape.select(targets)?.total_dim();
    if op.rows() != local || op.cols() != local {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{}, targets span dimension {local}",
            op.rows(),
            op.cols()
        )));
    }
    if x.rows() != shape.total_dim() {
        return Err(Error::DimensionMismatch(format!(
            "operand has {} rows, shape needs {}",
            x.rows(),
            shape.total_dim()
        )));
    }
    let target_off = digit_offsets(shape, targets);
    let rest_off = digit_offsets(shape, &complement(shape.parties(), targets));
    let mut out = ComplexMatrix::zeros(x.rows(), x.cols());
    let mut buf = vec![ZERO; local];
    for &r in &rest_off {
        for c in 0..x.cols() {
            for (b, &t) in buf.iter_mut().zip(&target_off) {
                *b = x[(r + t, c)];
            }
            for (a, &t) in target_off.iter().enumerate() {
                out[(r + t, c)] = op.row(a).iter().zip(&buf).map(|(o, v)| o * v).sum();
            }
        }
    }
    Ok(out)
}

/// `(op ⊗ 1) · x · (op ⊗ 1)†` with `op` on `targets`.
pub fn conjugate_on_parties(
    op: &ComplexMatrix,
    targets: &[usize],
    shape: &SubsystemShape,
    x: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let left = apply_on_parties(op, targets, shape, x)?;
    Ok(apply_on_parties(op, targets, shape, &left.adjoint())?.adjoint())
}

fn check_permutation(perm: &[usize]) -> Result<()> {
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidParameter(format!(
                "{perm:?} is not a permutation of 0..{}",
                perm.len()
            )));
        }
    }
    Ok(())
}

/// Unitary moving tensor factor `k` to position `perm[k]` on `(C^d)^{⊗M}`.
///
/// With this convention `U(p)·U(q) = U(p∘q)` where `(p∘q)(k) = p(q(k))`; for
/// `M = 2` the non-trivial permutation gives the swap `|φ⟩|ψ⟩ ↦ |ψ⟩|φ⟩`.
pub fn permutation_operator(perm: &[usize], d: usize) -> Result<ComplexMatrix> {
    check_permutation(perm)?;
    if d < 2 {
        return Err(Error::InvalidParameter(format!("local dimension {d} below 2")));
    }
    let m = perm.len();
    let n = capped_pow(d, m)?;
    let mut out = ComplexMatrix::zeros(n, n);
    for x in 0..n {
        out[(permute_index(x, perm, d, m), x)] = ONE;
    }
    Ok(out)
}

/// Index of `U(perm)|x⟩` in the computational basis.
fn permute_index(x: usize, perm: &[usize], d: usize, m: usize) -> usize {
    let mut y = 0;
    let mut rest = x;
    for k in (0..m).rev() {
        let digit = rest % d;
        rest /= d;
        y += digit * d.pow((m - 1 - perm[k]) as u32);
    }
    y
}

/// All permutations of `0..m` in lexicographic order.
pub fn permutations(m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..m).collect();
    loop {
        out.push(current.clone());
        // next lexicographic permutation
        let Some(i) = (1..m).rev().find(|&i| current[i - 1] < current[i]) else {
            break;
        };
        let j = (i..m).rev().find(|&j| current[j] > current[i - 1]).unwrap();
        current.swap(i - 1, j);
        current[i..].reverse();
    }
    out
}

/// Projector onto the symmetric subspace of `(C^d)^{⊗M}`: the average of all
/// `M!` factor permutations.
pub fn sym_projector(m: usize, d: usize) -> Result<ComplexMatrix> {
    if m == 0 || m > MAX_SYM_PARTIES {
        return Err(Error::InvalidParameter(format!(
            "symmetric projector supports 1..={MAX_SYM_PARTIES} parties, got {m}"
        )));
    }
    if d < 2 {
        return Err(Error::InvalidParameter(format!("local dimension {d} below 2")));
    }
    let n = capped_pow(d, m)?;
    let perms = permutations(m);
    let weight = 1.0 / perms.len() as f64;
    let mut out = ComplexMatrix::zeros(n, n);
    for x in 0..n {
        for perm in &perms {
            out[(permute_index(x, perm, d, m), x)] += weight;
        }
    }
    Ok(out)
}

/// Projector onto the antisymmetric subspace of `C^d ⊗ C^d`.
pub fn antisym_projector(d: usize) -> Result<ComplexMatrix> {
    let sym = sym_projector(2, d)?;
    Ok(&ComplexMatrix::identity(d * d) - &sym)
}

fn require_hermitian(h: &ComplexMatrix) -> Result<()> {
    let dev = h.hermitian_deviation();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    Ok(())
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn eigenvalues(h: &ComplexMatrix) -> Result<Vec<f64>> {
    require_hermitian(h)?;
    let mut values: Vec<f64> = h.to_nalgebra().symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(h: &ComplexMatrix) -> Result<f64> {
    Ok(eigenvalues(h)?.first().copied().unwrap_or(0.0))
}

/// Number of eigenvalues above `tol`.
pub fn rank(h: &ComplexMatrix, tol: f64) -> Result<usize> {
    Ok(eigenvalues(h)?.iter().filter(|&&v| v > tol).count())
}

/// Eigen-decomposition `H = U diag(λ) U†`; columns of `U` are eigenvectors.
pub fn hermitian_eigen(h: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    require_hermitian(h)?;
    let eig = h.to_nalgebra().symmetric_eigen();
    Ok((
        eig.eigenvalues.iter().copied().collect(),
        ComplexMatrix::from_nalgebra(&eig.eigenvectors),
    ))
}

/// `f(H)` for Hermitian `H` via its spectrum.
pub fn hermitian_function(h: &ComplexMatrix, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    let (values, vecs) = hermitian_eigen(h)?;
    let scaled = ComplexMatrix::from_fn(vecs.rows(), vecs.cols(), |i, j| {
        vecs[(i, j)] * C64::new(f(values[j]), 0.0)
    });
    Ok(scaled.matmul(&vecs.adjoint()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bell_plus() -> ComplexMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        ComplexMatrix::projector(&[C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)])
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let shape = SubsystemShape::uniform(2, 2).unwrap();
        let reduced = partial_trace(&bell_plus(), &shape, &[0]).unwrap();
        assert!(reduced.max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-15);
    }

    #[test]
    fn partial_trace_product_factorizes() {
        let a = ComplexMatrix::from_real_diagonal(&[0.25, 0.75]);
        let b = ComplexMatrix::from_real_diagonal(&[0.5, 0.2, 0.3]);
        let shape = SubsystemShape::new(vec![2, 3]).unwrap();
        let ab = a.kron(&b);
        assert!(partial_trace(&ab, &shape, &[0]).unwrap().max_abs_diff(&a) < 1e-15);
        assert!(partial_trace(&ab, &shape, &[1]).unwrap().max_abs_diff(&b) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_index() {
        let shape = SubsystemShape::uniform(2, 2).unwrap();
        assert!(matches!(
            partial_trace(&bell_plus(), &shape, &[2]),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(partial_transpose(&bell_plus(), &shape, &[5]).is_err());
    }

    #[test]
    fn partial_transpose_empty_and_involution() {
        let shape = SubsystemShape::uniform(2, 2).unwrap();
        let rho = bell_plus();
        assert_eq!(partial_transpose(&rho, &shape, &[]).unwrap(), rho);
        let once = partial_transpose(&rho, &shape, &[1]).unwrap();
        assert_ne!(once, rho);
        assert_eq!(partial_transpose(&once, &shape, &[1]).unwrap(), rho);
    }

    #[test]
    fn partial_transpose_of_bell_state_has_negative_half() {
        // PT of |ψ+⟩⟨ψ+| is swap/2, spectrum {1/2, 1/2, 1/2, -1/2}.
        let shape = SubsystemShape::uniform(2, 2).unwrap();
        let pt = partial_transpose(&bell_plus(), &shape, &[1]).unwrap();
        let swap = permutation_operator(&[1, 0], 2).unwrap().scale_real(0.5);
        assert!(pt.max_abs_diff(&swap) < 1e-15);
        assert!((min_eigenvalue(&pt).unwrap() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn swap_acts_on_product_basis() {
        let v = permutation_operator(&[1, 0], 2).unwrap();
        // |01⟩ is index 1, |10⟩ is index 2
        let mut ket = vec![ZERO; 4];
        ket[1] = ONE;
        let out = v.mul_vec(&ket);
        assert_eq!(out[2], ONE);
        assert_eq!(out.iter().filter(|z| **z != ZERO).count(), 1);
    }

    #[test]
    fn identity_permutation_is_identity() {
        assert_eq!(
            permutation_operator(&[0, 1, 2], 3).unwrap(),
            ComplexMatrix::identity(27)
        );
        assert!(permutation_operator(&[0, 0], 2).is_err());
    }

    #[test]
    fn permutation_representation_is_homomorphic() {
        let perms = permutations(3);
        assert_eq!(perms.len(), 6);
        for p in &perms {
            for q in &perms {
                let composed: Vec<usize> = (0..3).map(|k| p[q[k]]).collect();
                let lhs = permutation_operator(p, 2)
                    .unwrap()
                    .matmul(&permutation_operator(q, 2).unwrap());
                let rhs = permutation_operator(&composed, 2).unwrap();
                assert!(lhs.max_abs_diff(&rhs) < 1e-15);
            }
        }
    }

    #[test]
    fn sym_projector_small_cases() {
        assert_eq!(sym_projector(1, 3).unwrap(), ComplexMatrix::identity(3));
        let p = sym_projector(2, 2).unwrap();
        // average of I and swap, computed by hand
        let swap = permutation_operator(&[1, 0], 2).unwrap();
        let avg = (&ComplexMatrix::identity(4) + &swap).scale_real(0.5);
        assert!(p.max_abs_diff(&avg) < 1e-15);
        assert_eq!(rank(&p, 1e-9).unwrap(), 3);
        assert!(sym_projector(0, 2).is_err());
        assert!(sym_projector(9, 2).is_err());
    }

    #[test]
    fn min_eigenvalue_basic_cases() {
        assert!((min_eigenvalue(&ComplexMatrix::identity(4)).unwrap() - 1.0).abs() < 1e-12);
        let d = ComplexMatrix::from_real_diagonal(&[0.3, -0.2, 0.9]);
        assert!((min_eigenvalue(&d).unwrap() + 0.2).abs() < 1e-12);
        let mut bad = ComplexMatrix::identity(2);
        bad[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(min_eigenvalue(&bad), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn apply_on_parties_matches_embedding() {
        let shape = SubsystemShape::new(vec![2, 3, 2]).unwrap();
        let op = ComplexMatrix::from_fn(4, 4, |i, j| C64::new(i as f64, j as f64 - 1.0));
        // op on parties (2, 0): embed manually via a permutation of factors
        let x = ComplexMatrix::identity(12);
        let embedded = apply_on_parties(&op, &[2, 0], &shape, &x).unwrap();
        for r in 0..12 {
            for c in 0..12 {
                let (r0, r1, r2) = (r / 6, (r / 2) % 3, r % 2);
                let (c0, c1, c2) = (c / 6, (c / 2) % 3, c % 2);
                let expected = if r1 == c1 { op[(r2 * 2 + r0, c2 * 2 + c0)] } else { ZERO };
                assert_eq!(embedded[(r, c)], expected);
            }
        }
    }

    #[test]
    fn hermitian_function_inverse_sqrt() {
        let h = ComplexMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => C64::new(2.0, 0.0),
            (1, 1) => C64::new(3.0, 0.0),
            (0, 1) => C64::new(0.5, 0.5),
            _ => C64::new(0.5, -0.5),
        });
        let s = hermitian_function(&h, |v| v.powf(-0.5)).unwrap();
        let check = s.matmul(&h).matmul(&s);
        assert!(check.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-12);
    }
}
