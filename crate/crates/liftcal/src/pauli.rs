//! Traceless n-qubit Pauli basis, structure constants, and the maps between
//! density matrices / Hamiltonians and their real Bloch-coordinate pictures.
//!
//! Operators are ordered by the lexicographic Kronecker order over
//! {I, X, Y, Z}^⊗n with the all-identity string removed. The structure
//! constants are defined by [P_j, P_k] = Σ_ℓ 2^n σ_jkℓ P_ℓ; they are purely
//! imaginary, so the vectorized generators built from −i·σ come out real.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{LiftError, Result};

const HERMITIAN_TOL: f64 = 1e-10;
const REALITY_TOL: f64 = 1e-12;

type CMatrix = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn single_qubit_ops() -> [CMatrix; 4] {
    let i = CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]);
    let x = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
    let y = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]);
    let z = CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]);
    [i, x, y, z]
}

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().sum()
}

/// The traceless n-qubit Pauli operators together with their structure
/// constants. Immutable after construction.
#[derive(Debug, Clone)]
pub struct PauliBasis {
    n: usize,
    /// 4^n − 1 traceless Pauli strings, lexicographic Kronecker order.
    operators: Vec<CMatrix>,
    /// Flattened σ_jkℓ, indexed j·dim² + k·dim + ℓ.
    sigma: Vec<Complex64>,
}

impl PauliBasis {
    pub fn build(n: usize) -> Result<Self> {
        if n == 0 || n > 3 {
            return Err(LiftError::UnsupportedDimension(n));
        }
        let singles = single_qubit_ops();
        let count = 4usize.pow(n as u32);
        let mut operators = Vec::with_capacity(count - 1);
        // Index 0 is the all-identity string; skip it.
        for idx in 1..count {
            let mut digits = Vec::with_capacity(n);
            let mut rem = idx;
            for _ in 0..n {
                digits.push(rem % 4);
                rem /= 4;
            }
            digits.reverse();
            let mut op = singles[digits[0]].clone();
            for &d in &digits[1..] {
                op = kron(&op, &singles[d]);
            }
            operators.push(op);
        }

        let dim = operators.len();
        let norm = 2f64.powi(n as i32); // Tr(P_j P_k) = 2^n δ_jk
        let mut sigma = vec![Complex64::default(); dim * dim * dim];
        for j in 0..dim {
            for k in 0..dim {
                if j == k {
                    continue;
                }
                let comm = &operators[j] * &operators[k] - &operators[k] * &operators[j];
                if comm.iter().all(|v| v.norm() < 1e-14) {
                    continue;
                }
                for l in 0..dim {
                    // [P_j, P_k] = Σ_ℓ 2^n σ_jkℓ P_ℓ and Tr(P_ℓ P_m) = 2^n δ_ℓm
                    let coeff = trace(&(&comm * &operators[l])) / (norm * norm);
                    if coeff.norm() > 1e-14 {
                        sigma[(j * dim + k) * dim + l] = coeff;
                    }
                }
            }
        }

        Ok(Self {
            n,
            operators,
            sigma,
        })
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    /// Number of Bloch coordinates, 4^n − 1.
    pub fn dim(&self) -> usize {
        self.operators.len()
    }

    /// Hilbert-space dimension, 2^n.
    pub fn hilbert_dim(&self) -> usize {
        1 << self.n
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    pub fn operator(&self, j: usize) -> &CMatrix {
        &self.operators[j]
    }

    pub fn sigma(&self, j: usize, k: usize, l: usize) -> Complex64 {
        let dim = self.dim();
        self.sigma[(j * dim + k) * dim + l]
    }

    fn check_hermitian(&self, m: &CMatrix, what: &str) -> Result<()> {
        for r in 0..m.nrows() {
            for col in 0..m.ncols() {
                if (m[(r, col)] - m[(col, r)].conj()).norm() > HERMITIAN_TOL {
                    return Err(LiftError::InvalidOperator(format!(
                        "{what} is not Hermitian within {HERMITIAN_TOL:e}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Real Bloch coordinates x_j = Tr(P_j ρ) of a density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochState {
    pub coords: DVector<f64>,
}

impl BlochState {
    pub fn new(coords: DVector<f64>) -> Self {
        Self { coords }
    }

    pub fn from_slice(coords: &[f64]) -> Self {
        Self {
            coords: DVector::from_row_slice(coords),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Largest coordinate norm compatible with a physical state: sqrt(2^n(2^n − 1)).
pub fn purity_bound(basis: &PauliBasis) -> f64 {
    let d = basis.hilbert_dim() as f64;
    (d * (d - 1.0)).sqrt()
}

pub fn density_to_bloch(rho: &CMatrix, basis: &PauliBasis) -> Result<BlochState> {
    let h = basis.hilbert_dim();
    if rho.nrows() != h || rho.ncols() != h {
        return Err(LiftError::ShapeMismatch(format!(
            "density matrix is {}x{}, expected {h}x{h}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    basis
        .check_hermitian(rho, "density matrix")
        .map_err(|_| LiftError::InvalidState("density matrix is not Hermitian".into()))?;
    let tr = trace(rho);
    if (tr - Complex64::new(1.0, 0.0)).norm() > HERMITIAN_TOL {
        return Err(LiftError::InvalidState(format!(
            "density matrix trace is {tr}, expected 1"
        )));
    }
    let eigs = rho.clone().symmetric_eigen().eigenvalues;
    if eigs.iter().any(|e| *e < -HERMITIAN_TOL) {
        return Err(LiftError::InvalidState(
            "density matrix is not positive semidefinite".into(),
        ));
    }
    let mut coords = DVector::zeros(basis.dim());
    for (j, p) in basis.operators().iter().enumerate() {
        let v = trace(&(p * rho));
        if v.im.abs() > REALITY_TOL {
            return Err(LiftError::InvalidState(format!(
                "Tr(P_{j} rho) has imaginary part {:.3e}",
                v.im
            )));
        }
        coords[j] = v.re;
    }
    Ok(BlochState::new(coords))
}

pub fn bloch_to_density(x: &BlochState, basis: &PauliBasis) -> Result<CMatrix> {
    if x.dim() != basis.dim() {
        return Err(LiftError::ShapeMismatch(format!(
            "coordinate vector has length {}, expected {}",
            x.dim(),
            basis.dim()
        )));
    }
    let bound = purity_bound(basis);
    let norm = x.coords.norm();
    if norm > bound + 1e-9 {
        return Err(LiftError::InvalidState(format!(
            "coordinate norm {norm:.6} exceeds purity bound {bound:.6}"
        )));
    }
    let h = basis.hilbert_dim();
    let scale = 1.0 / h as f64;
    let mut rho = CMatrix::identity(h, h) * c(scale, 0.0);
    for (j, p) in basis.operators().iter().enumerate() {
        rho += p * c(x.coords[j] * scale, 0.0);
    }
    Ok(rho)
}

/// Vectorize a Hermitian operator into its real skew-symmetric Bloch
/// generator: [𝐇]_ℓk = −i Σ_j σ_jkℓ Tr(P_j H). The identity component of H
/// only generates global phase and is dropped.
pub fn vectorize_hamiltonian(h: &CMatrix, basis: &PauliBasis) -> Result<DMatrix<f64>> {
    let hd = basis.hilbert_dim();
    if h.nrows() != hd || h.ncols() != hd {
        return Err(LiftError::ShapeMismatch(format!(
            "operator is {}x{}, expected {hd}x{hd}",
            h.nrows(),
            h.ncols()
        )));
    }
    basis.check_hermitian(h, "Hamiltonian")?;
    let dim = basis.dim();
    let coeffs: Vec<Complex64> = basis.operators().iter().map(|p| trace(&(p * h))).collect();
    let mut gen = DMatrix::zeros(dim, dim);
    for l in 0..dim {
        for k in 0..dim {
            let mut acc = Complex64::default();
            for (j, hj) in coeffs.iter().enumerate() {
                let s = basis.sigma(j, k, l);
                if s.norm() > 0.0 {
                    acc += s * hj;
                }
            }
            let v = -Complex64::i() * acc;
            if v.im.abs() > REALITY_TOL {
                return Err(LiftError::InvalidOperator(format!(
                    "vectorized generator entry ({l},{k}) has imaginary part {:.3e}",
                    v.im
                )));
            }
            gen[(l, k)] = v.re;
        }
    }
    Ok(gen)
}

/// Recover the Hermitian (traceless) operator whose vectorization is the
/// given generator: least-squares inversion of `vectorize_hamiltonian`.
pub fn devectorize_generator(gen: &DMatrix<f64>, basis: &PauliBasis) -> Result<CMatrix> {
    let dim = basis.dim();
    if gen.nrows() != dim || gen.ncols() != dim {
        return Err(LiftError::ShapeMismatch(format!(
            "generator is {}x{}, expected {dim}x{dim}",
            gen.nrows(),
            gen.ncols()
        )));
    }
    // [𝐇]_ℓk = Σ_j (−i σ_jkℓ) h_j is linear in the real coefficients h_j.
    let rows = dim * dim;
    let mut design = DMatrix::zeros(rows, dim);
    let mut rhs = DVector::zeros(rows);
    for l in 0..dim {
        for k in 0..dim {
            let r = l * dim + k;
            rhs[r] = gen[(l, k)];
            for j in 0..dim {
                design[(r, j)] = (-Complex64::i() * basis.sigma(j, k, l)).re;
            }
        }
    }
    let svd = design.svd(true, true);
    let coeffs = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| LiftError::InvalidOperator(e.to_string()))?;
    let hd = basis.hilbert_dim();
    let scale = 1.0 / hd as f64;
    let mut h = CMatrix::zeros(hd, hd);
    for (j, p) in basis.operators().iter().enumerate() {
        h += p * c(coeffs[j] * scale, 0.0);
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn basis1() -> PauliBasis {
        PauliBasis::build(1).unwrap()
    }

    /// Oracle: d/dt Tr(P_ℓ ρ) = Tr(P_ℓ · (−i[H, ρ])), evaluated entrywise.
    fn commutator_rate(h: &CMatrix, rho: &CMatrix, basis: &PauliBasis) -> DVector<f64> {
        let comm = h * rho - rho * h;
        let rhs = comm * c(0.0, -1.0);
        let mut out = DVector::zeros(basis.dim());
        for (l, p) in basis.operators().iter().enumerate() {
            out[l] = trace(&(p * &rhs)).re;
        }
        out
    }

    #[test]
    fn single_qubit_ordering_and_orthogonality() {
        let b = basis1();
        assert_eq!(b.dim(), 3);
        let [_, x, y, z] = single_qubit_ops();
        assert_eq!(b.operator(0), &x);
        assert_eq!(b.operator(1), &y);
        assert_eq!(b.operator(2), &z);
        assert_abs_diff_eq!(trace(&(&x * &x)).re, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn structure_constant_xyz() {
        let b = basis1();
        // [X, Y] = 2iZ and 2^n = 2, so sigma_{XYZ} = i.
        let s = b.sigma(0, 1, 2);
        assert_abs_diff_eq!(s.re, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.im, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn sigma_antisymmetric_and_imaginary() {
        for n in [1, 2] {
            let b = PauliBasis::build(n).unwrap();
            let d = b.dim();
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let s = b.sigma(j, k, l);
                        assert!(s.re.abs() < 1e-13, "sigma not purely imaginary");
                        assert!((s + b.sigma(k, j, l)).norm() < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn structure_constant_reconstruction() {
        // Brute force at n=1, sampled pairs at n=2.
        for (n, pairs) in [(1usize, None), (2, Some(24usize))] {
            let b = PauliBasis::build(n).unwrap();
            let d = b.dim();
            let norm = 2f64.powi(n as i32);
            let mut checked = 0usize;
            'outer: for j in 0..d {
                for k in 0..d {
                    let comm = b.operator(j) * b.operator(k) - b.operator(k) * b.operator(j);
                    let mut recon = CMatrix::zeros(b.hilbert_dim(), b.hilbert_dim());
                    for l in 0..d {
                        recon += b.operator(l) * (b.sigma(j, k, l) * norm);
                    }
                    let err = (&comm - &recon)
                        .iter()
                        .map(|v| v.norm())
                        .fold(0.0, f64::max);
                    assert!(err < 1e-12, "reconstruction error {err:.3e} at n={n}");
                    checked += 1;
                    if let Some(cap) = pairs {
                        if checked >= cap {
                            break 'outer;
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn two_qubit_orthogonality() {
        let b = PauliBasis::build(2).unwrap();
        assert_eq!(b.dim(), 15);
        for j in 0..15 {
            for k in 0..15 {
                let t = trace(&(b.operator(j) * b.operator(k)));
                let expect = if j == k { 4.0 } else { 0.0 };
                assert_abs_diff_eq!(t.re, expect, epsilon = 1e-12);
                assert_abs_diff_eq!(t.im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn rejects_unsupported_qubit_counts() {
        assert!(matches!(
            PauliBasis::build(0),
            Err(LiftError::UnsupportedDimension(0))
        ));
        assert!(matches!(
            PauliBasis::build(4),
            Err(LiftError::UnsupportedDimension(4))
        ));
    }

    #[test]
    fn density_to_bloch_basis_states() {
        let b = basis1();
        let zero = CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)]);
        let x = density_to_bloch(&zero, &b).unwrap();
        assert_abs_diff_eq!(x.coords[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x.coords[1], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x.coords[2], 1.0, epsilon = 1e-14);

        let mixed = CMatrix::identity(2, 2) * c(0.5, 0.0);
        let x = density_to_bloch(&mixed, &b).unwrap();
        assert!(x.coords.norm() < 1e-14);

        let plus = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.), c(0.5, 0.), c(0.5, 0.), c(0.5, 0.)]);
        let x = density_to_bloch(&plus, &b).unwrap();
        assert_abs_diff_eq!(x.coords[0], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn density_to_bloch_rejects_bad_inputs() {
        let b = basis1();
        let not_herm = CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]);
        assert!(density_to_bloch(&not_herm, &b).is_err());
        let wrong_trace = CMatrix::identity(2, 2);
        assert!(density_to_bloch(&wrong_trace, &b).is_err());
    }

    #[test]
    fn bloch_density_round_trip() {
        let b = basis1();
        let x = BlochState::from_slice(&[0.3, -0.5, 0.4]);
        let rho = bloch_to_density(&x, &b).unwrap();
        let back = density_to_bloch(&rho, &b).unwrap();
        assert!((back.coords - x.coords).norm() < 1e-12);

        let center = BlochState::from_slice(&[0.0, 0.0, 0.0]);
        let rho = bloch_to_density(&center, &b).unwrap();
        assert!((rho - CMatrix::identity(2, 2) * c(0.5, 0.0))
            .iter()
            .all(|v| v.norm() < 1e-14));
    }

    #[test]
    fn bloch_to_density_rejects_unphysical_norm() {
        let b = basis1();
        let x = BlochState::from_slice(&[2.0, 0.0, 0.0]);
        assert!(bloch_to_density(&x, &b).is_err());
    }

    #[test]
    fn vectorize_z() {
        let b = basis1();
        let z = b.operator(2).clone();
        let gen = vectorize_hamiltonian(&z, &b).unwrap();
        let expect = DMatrix::from_row_slice(3, 3, &[0., -2., 0., 2., 0., 0., 0., 0., 0.]);
        assert!((gen - expect).norm() < 1e-12);
    }

    #[test]
    fn vectorize_zero_and_rejects_non_hermitian() {
        let b = basis1();
        let zero = CMatrix::zeros(2, 2);
        assert!(vectorize_hamiltonian(&zero, &b).unwrap().norm() < 1e-15);
        let bad = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]);
        assert!(vectorize_hamiltonian(&bad, &b).is_err());
    }

    #[test]
    fn vectorized_generator_matches_commutator_oracle() {
        let b = basis1();
        let hams = [
            b.operator(0).clone(), // X
            b.operator(2).clone(), // Z
            b.operator(0) * c(0.7, 0.) + b.operator(1) * c(-0.3, 0.) + b.operator(2) * c(1.1, 0.),
        ];
        let states = [
            BlochState::from_slice(&[0.0, 0.0, 1.0]),
            BlochState::from_slice(&[0.2, -0.6, 0.3]),
        ];
        for h in &hams {
            let gen = vectorize_hamiltonian(h, &b).unwrap();
            assert!((gen.clone() + gen.transpose()).norm() < 1e-12, "not skew");
            for x in &states {
                let rho = bloch_to_density(x, &b).unwrap();
                let oracle = commutator_rate(h, &rho, &b);
                let via_gen = &gen * &x.coords;
                assert!(
                    (oracle - via_gen).norm() < 1e-10,
                    "generator disagrees with commutator oracle"
                );
            }
        }
    }

    #[test]
    fn devectorize_round_trip() {
        let b = basis1();
        let h = b.operator(0) * c(0.4, 0.) + b.operator(2) * c(-1.2, 0.);
        let gen = vectorize_hamiltonian(&h, &b).unwrap();
        let back = devectorize_generator(&gen, &b).unwrap();
        assert!((&h - &back).iter().all(|v| v.norm() < 1e-10));
    }
}
