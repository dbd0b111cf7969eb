//! Truncated Fock-space operators and the model Hamiltonians.
//!
//! Bipartite operators act on cavity ⊗ mechanics; the basis index of
//! `|n_a⟩ ⊗ |n_b⟩` is `n_a · (N_b + 1) + n_b`.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex;

use crate::analytic::pump;
use crate::error::{Error, Result};
use crate::params::{SystemParams, Truncation};
use crate::scalar::Real;

/// Square sparse matrix in coordinate form. Entries are sorted by
/// `(row, col)`, have no duplicates and no stored zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator<T> {
    dim: usize,
    entries: Vec<(usize, usize, Complex<T>)>,
}

impl<T: Real> SparseOperator<T> {
    /// Builds an operator from coordinate entries, summing duplicates and
    /// dropping zeros.
    ///
    /// Panics if a coordinate is out of range.
    pub fn from_entries<I>(dim: usize, entries: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, Complex<T>)>,
    {
        let mut acc: BTreeMap<(usize, usize), Complex<T>> = BTreeMap::new();
        for (r, c, v) in entries {
            assert!(r < dim && c < dim, "entry ({r}, {c}) outside dimension {dim}");
            *acc.entry((r, c)).or_default() += v;
        }
        let zero = Complex::default();
        Self {
            dim,
            entries: acc
                .into_iter()
                .filter(|&(_, v)| v != zero)
                .map(|((r, c), v)| (r, c, v))
                .collect(),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal((0..dim).map(|_| T::one()))
    }

    /// Real diagonal operator.
    pub fn diagonal<I: IntoIterator<Item = T>>(diag: I) -> Self {
        let d: Vec<T> = diag.into_iter().collect();
        let dim = d.len();
        Self::from_entries(
            dim,
            d.into_iter()
                .enumerate()
                .map(|(i, v)| (i, i, Complex::from(v))),
        )
    }

    /// Photon (or phonon) number operator `diag(0, 1, …, dim−1)`.
    pub fn number(dim: usize) -> Self {
        Self::diagonal((0..dim).map(T::from_count))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize, Complex<T>)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.entries
            .binary_search_by(|&(r, c, _)| (r, c).cmp(&(row, col)))
            .map(|i| self.entries[i].2)
            .unwrap_or_default()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_entries(
            self.dim,
            self.entries.iter().map(|&(r, c, v)| (c, r, v.conj())),
        )
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self::from_entries(self.dim, self.entries.iter().map(|&(r, c, v)| (r, c, v * s)))
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.scale(Complex::from(s))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in add");
        Self::from_entries(
            self.dim,
            self.entries.iter().chain(other.entries.iter()).copied(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale_real(-T::one()))
    }

    /// Matrix product `self · other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in matmul");
        let mut rows: Vec<Vec<(usize, Complex<T>)>> = vec![Vec::new(); other.dim];
        for &(r, c, v) in &other.entries {
            rows[r].push((c, v));
        }
        let mut out = Vec::new();
        for &(r, k, v) in &self.entries {
            for &(c, w) in &rows[k] {
                out.push((r, c, v * w));
            }
        }
        Self::from_entries(self.dim, out)
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &Self) -> Self {
        self.matmul(other).sub(&other.matmul(self))
    }

    /// Matrix-vector product.
    pub fn apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(x.len(), self.dim, "dimension mismatch in apply");
        let mut y = vec![Complex::default(); self.dim];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    /// Dense column-major copy.
    pub fn to_dense(&self) -> Vec<Complex<T>> {
        let mut m = vec![Complex::default(); self.dim * self.dim];
        for &(r, c, v) in &self.entries {
            m[r + self.dim * c] = v;
        }
        m
    }

    /// Largest entrywise deviation from the adjoint.
    pub fn hermiticity_error(&self) -> T {
        let adj = self.adjoint();
        self.sub(&adj)
            .entries
            .iter()
            .fold(T::zero(), |m, &(_, _, v)| m.max(v.norm()))
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.hermiticity_error() <= tol
    }

    /// Writes one `row col re im` line per stored entry.
    pub fn write_coo<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# dim {}", self.dim)?;
        for &(r, c, v) in &self.entries {
            writeln!(w, "{r} {c} {:e} {:e}", v.re, v.im)?;
        }
        Ok(())
    }
}

/// Ladder operator that tolerates `dim == 1` (a zero matrix).
fn ladder<T: Real>(dim: usize) -> SparseOperator<T> {
    SparseOperator::from_entries(
        dim,
        (1..dim).map(|n| (n - 1, n, Complex::from(T::from_count(n).sqrt()))),
    )
}

/// Annihilation operator with `√n` at `(n−1, n)`.
pub fn annihilation<T: Real>(dim: usize) -> Result<SparseOperator<T>> {
    if dim < 2 {
        return Err(Error::DimTooSmall(dim));
    }
    Ok(ladder(dim))
}

/// Kronecker product `first ⊗ second`; the first factor is the slow index.
pub fn tensor<T: Real>(first: &SparseOperator<T>, second: &SparseOperator<T>) -> SparseOperator<T> {
    let d2 = second.dim;
    let mut out = Vec::with_capacity(first.nnz() * second.nnz());
    for &(r1, c1, v1) in &first.entries {
        for &(r2, c2, v2) in &second.entries {
            out.push((r1 * d2 + r2, c1 * d2 + c2, v1 * v2));
        }
    }
    SparseOperator::from_entries(first.dim * d2, out)
}

/// Cavity and mechanical annihilation operators embedded in the
/// bipartite space.
#[derive(Debug, Clone)]
pub struct ModeOperators<T> {
    pub a: SparseOperator<T>,
    pub b: SparseOperator<T>,
}

impl<T: Real> ModeOperators<T> {
    pub fn new(trunc: &Truncation) -> Self {
        let id_a = SparseOperator::identity(trunc.photon_dim());
        let id_b = SparseOperator::identity(trunc.phonon_dim());
        Self {
            a: tensor(&ladder(trunc.photon_dim()), &id_b),
            b: tensor(&id_a, &ladder(trunc.phonon_dim())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HamiltonianSet<T> {
    /// Full cavity ⊗ mechanics Hamiltonian.
    pub full: SparseOperator<T>,
    /// Cavity-only Hamiltonian with the Kerr-like term.
    pub reduced: SparseOperator<T>,
    /// `reduced − (iκ/2) a†a`.
    pub effective: SparseOperator<T>,
}

/// Pump and drive terms `z a†² + z* a² + E(a† + a)` for a given annihilator.
fn drive_terms<T: Real>(params: &SystemParams<T>, a: &SparseOperator<T>) -> SparseOperator<T> {
    let ad = a.adjoint();
    let z = pump(params);
    ad.matmul(&ad)
        .scale(z)
        .add(&a.matmul(a).scale(z.conj()))
        .add(&ad.add(a).scale_real(params.drive))
}

/// Full bipartite Hamiltonian
/// `Δc a†a + ωm b†b − g a†a(b† + b) + G e^{iθ} a†² + E a† + h.c.`
pub fn full_hamiltonian<T: Real>(params: &SystemParams<T>, trunc: &Truncation) -> SparseOperator<T> {
    let ModeOperators { a, b } = ModeOperators::new(trunc);
    let n_a = a.adjoint().matmul(&a);
    let n_b = b.adjoint().matmul(&b);
    let position = b.adjoint().add(&b);
    n_a.scale_real(params.delta_c)
        .add(&n_b.scale_real(params.omega_m))
        .sub(&n_a.matmul(&position).scale_real(params.g))
        .add(&drive_terms(params, &a))
}

/// Reduced cavity Hamiltonian `Δc a†a − (g²/ωm)(a†a)² + G e^{iθ} a†² + E a† + h.c.`
pub fn reduced_hamiltonian<T: Real>(
    params: &SystemParams<T>,
    trunc: &Truncation,
) -> SparseOperator<T> {
    let dim = trunc.photon_dim();
    let kerr = params.kerr();
    let diag = SparseOperator::diagonal((0..dim).map(|n| {
        let n = T::from_count(n);
        params.delta_c * n - kerr * n * n
    }));
    diag.add(&drive_terms(params, &ladder(dim)))
}

pub fn build_hamiltonians<T: Real>(params: &SystemParams<T>, trunc: &Truncation) -> HamiltonianSet<T> {
    let full = full_hamiltonian(params, trunc);
    let reduced = reduced_hamiltonian(params, trunc);
    let loss = SparseOperator::number(trunc.photon_dim())
        .scale(Complex::new(T::zero(), -params.kappa / T::lit(2.0)));
    let effective = reduced.add(&loss);
    HamiltonianSet {
        full,
        reduced,
        effective,
    }
}
