//! Lindblad master equation for the full cavity ⊗ mechanics system,
//!
//! ```text
//! dρ/dt = −i[H, ρ] + κ 𝓛[a]ρ + γm 𝓛[b]ρ,   𝓛[o]ρ = oρo† − ½{o†o, ρ}
//! ```
//!
//! Density matrices are vectorized by column stacking: element `ρ[i, j]`
//! sits at index `i + D·j`. Under this convention `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`.

use std::io::Write;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fock::{full_hamiltonian, ModeOperators, SparseOperator};
use crate::params::{SystemParams, Truncation};
use crate::scalar::Real;

/// Eigenvalues below this are treated as a failed positivity check.
pub const POSITIVITY_TOLERANCE: f64 = 1e-8;
/// Mean photon numbers below this make correlation ratios meaningless.
pub const ZERO_MEAN_PHOTON: f64 = 1e-14;

/// Dense complex matrix on the bipartite space, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> DensityMatrix<T> {
    pub fn from_column_major(dim: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    /// Pure state `|ψ⟩⟨ψ|` (not renormalized).
    pub fn projector(psi: &[Complex<T>]) -> Self {
        let dim = psi.len();
        let mut data = Vec::with_capacity(dim * dim);
        for j in 0..dim {
            for i in 0..dim {
                data.push(psi[i] * psi[j].conj());
            }
        }
        Self { dim, data }
    }

    /// Projector onto basis state `index`.
    pub fn basis_projector(dim: usize, index: usize) -> Self {
        let mut data = vec![Complex::default(); dim * dim];
        data[index + dim * index] = Complex::from(T::one());
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.data[row + self.dim * col]
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).fold(Complex::default(), |s, i| s + self.get(i, i))
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut data = vec![Complex::default(); d * d];
        for j in 0..d {
            for i in 0..d {
                data[j + d * i] = self.data[i + d * j].conj();
            }
        }
        Self { dim: d, data }
    }

    /// `(ρ + ρ†)/2`.
    pub fn hermitized(&self) -> Self {
        let adj = self.adjoint();
        let half = T::lit(0.5);
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&adj.data)
                .map(|(a, b)| (a + b) * half)
                .collect(),
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// Largest entrywise deviation from the adjoint.
    pub fn hermiticity_error(&self) -> T {
        let d = self.dim;
        let mut m = T::zero();
        for j in 0..d {
            for i in 0..=j {
                m = m.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        m
    }

    /// Eigenvalues of the Hermitian part, nondecreasing.
    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        T::hermitian_eigenvalues(self.dim, &self.hermitized().data)
            .ok_or(Error::SingularAfterConstraint)
    }

    /// `½ Σ |λᵢ(ρ − σ)|`.
    pub fn trace_distance(&self, other: &Self) -> Result<T> {
        let ev = self.sub(other).eigenvalues()?;
        Ok(ev.iter().fold(T::zero(), |s, l| s + l.abs()) * T::lit(0.5))
    }

    /// `Tr[O ρ]`.
    pub fn expectation(&self, op: &SparseOperator<T>) -> Complex<T> {
        op.entries()
            .iter()
            .fold(Complex::default(), |s, &(r, c, v)| s + v * self.get(c, r))
    }

    /// `O ρ O†`.
    pub fn sandwich(&self, op: &SparseOperator<T>) -> Self {
        let d = self.dim;
        // left = O ρ
        let mut left = vec![Complex::<T>::default(); d * d];
        for &(r, c, v) in op.entries() {
            for k in 0..d {
                left[r + d * k] += v * self.data[c + d * k];
            }
        }
        // out = left O†, (left O†)[i, j] = Σ_c left[i, c] conj(O[j, c])
        let mut out = vec![Complex::default(); d * d];
        for &(r, c, v) in op.entries() {
            let vc = v.conj();
            for i in 0..d {
                out[i + d * r] += left[i + d * c] * vc;
            }
        }
        Self { dim: d, data: out }
    }

    /// Photon-number distribution after tracing out the mechanics.
    pub fn photon_distribution(&self, trunc: &Truncation) -> Vec<T> {
        let nb = trunc.phonon_dim();
        (0..trunc.photon_dim())
            .map(|na| {
                (0..nb).fold(T::zero(), |s, k| {
                    let i = na * nb + k;
                    s + self.get(i, i).re
                })
            })
            .collect()
    }

    /// Phonon-number distribution after tracing out the cavity.
    pub fn phonon_distribution(&self, trunc: &Truncation) -> Vec<T> {
        let nb = trunc.phonon_dim();
        (0..nb)
            .map(|k| {
                (0..trunc.photon_dim()).fold(T::zero(), |s, na| {
                    let i = na * nb + k;
                    s + self.get(i, i).re
                })
            })
            .collect()
    }

    /// Text dump: a `dim` header line, then one line per row holding
    /// `re im` pairs in row-major order.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self.get(i, j);
                    format!("{:e} {:e}", z.re, z.im)
                })
                .collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Summary of the numerical sanity checks on a density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Physicality<T> {
    pub hermiticity_error: T,
    pub trace_error: T,
    pub min_eigenvalue: T,
}

impl<T: Real> Physicality<T> {
    pub fn of(rho: &DensityMatrix<T>) -> Result<Self> {
        let ev = rho.eigenvalues()?;
        Ok(Self {
            hermiticity_error: rho.hermiticity_error(),
            trace_error: (rho.trace() - Complex::from(T::one())).norm(),
            min_eigenvalue: ev.first().copied().unwrap_or_else(T::zero),
        })
    }

    /// Hermitian to 1e-10, unit trace to 1e-10, eigenvalues ≥ −1e-8.
    pub fn is_physical(&self) -> bool {
        self.hermiticity_error <= T::lit(1e-10)
            && self.trace_error <= T::lit(1e-10)
            && self.min_eigenvalue >= -T::lit(POSITIVITY_TOLERANCE)
    }
}

/// Vectorized Lindblad generator in compressed-row form.
#[derive(Debug, Clone)]
pub struct Liouvillian<T> {
    trunc: Truncation,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex<T>>,
}

impl<T: Real> Liouvillian<T> {
    fn from_triplets(trunc: Truncation, mut triplets: Vec<(usize, usize, Complex<T>)>) -> Self {
        let n = trunc.dim() * trunc.dim();
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut vals: Vec<Complex<T>> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            trunc,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn truncation(&self) -> &Truncation {
        &self.trunc
    }

    /// Hilbert-space dimension D; the superoperator acts on D² entries.
    pub fn hilbert_dim(&self) -> usize {
        self.trunc.dim()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Iterates over stored `(row, col, value)` entries.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex<T>)> + '_ {
        (0..self.row_ptr.len() - 1).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    /// `L v` on a vectorized matrix.
    pub fn apply_vec(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut s = Complex::default();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *out = s;
        }
    }

    pub fn apply(&self, rho: &DensityMatrix<T>) -> DensityMatrix<T> {
        let mut out = vec![Complex::default(); rho.data.len()];
        self.apply_vec(&rho.data, &mut out);
        DensityMatrix {
            dim: rho.dim,
            data: out,
        }
    }

    pub fn frobenius_norm(&self) -> T {
        self.vals
            .iter()
            .fold(T::zero(), |s, v| s + v.norm_sqr())
            .sqrt()
    }

    /// Largest absolute row sum; bounds the spectral radius.
    pub fn gershgorin_radius(&self) -> T {
        (0..self.row_ptr.len() - 1)
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .fold(T::zero(), |s, k| s + self.vals[k].norm())
            })
            .fold(T::zero(), T::max)
    }

    /// Step size inside the RK4 stability region for every eigenvalue.
    pub fn max_stable_step(&self) -> T {
        T::lit(2.5) / self.gershgorin_radius()
    }
}

/// Assembles the Liouvillian of the full Hamiltonian with cavity loss at
/// rate κ and mechanical damping at rate γm.
pub fn build_liouvillian<T: Real>(params: &SystemParams<T>, trunc: &Truncation) -> Liouvillian<T> {
    let d = trunc.dim();
    let h = full_hamiltonian(params, trunc);
    let modes = ModeOperators::new(trunc);
    let i = Complex::new(T::zero(), T::one());
    let mut t = Vec::new();

    // −i(Hρ − ρH)
    for &(r, c, v) in h.entries() {
        for k in 0..d {
            t.push((r + d * k, c + d * k, -i * v));
            t.push((k + d * c, k + d * r, i * v));
        }
    }
    for (op, rate) in [(&modes.a, params.kappa), (&modes.b, params.gamma_m)] {
        if rate == T::zero() || op.nnz() == 0 {
            continue;
        }
        for &(r1, c1, v1) in op.entries() {
            for &(r2, c2, v2) in op.entries() {
                t.push((r1 + d * r2, c1 + d * c2, v1 * v2.conj() * rate));
            }
        }
        let half_rate = -rate / T::lit(2.0);
        let n = op.adjoint().matmul(op);
        for &(r, c, v) in n.entries() {
            for k in 0..d {
                t.push((r + d * k, c + d * k, v * half_rate));
                t.push((k + d * c, k + d * r, v * half_rate));
            }
        }
    }
    Liouvillian::from_triplets(*trunc, t)
}

/// Solves `L vec(ρ) = 0` with `Tr ρ = 1` by overwriting the equation for
/// `ρ[0, 0]` with the trace condition. The result is Hermitized and must
/// pass the positivity check.
pub fn steady_state<T: Real>(liouvillian: &Liouvillian<T>) -> Result<DensityMatrix<T>> {
    let d = liouvillian.hilbert_dim();
    let n = d * d;
    let mut entries: Vec<_> = liouvillian.entries().filter(|&(r, _, _)| r != 0).collect();
    entries.extend((0..d).map(|k| (0, k + d * k, Complex::from(T::one()))));
    let mut rhs = vec![Complex::default(); n];
    rhs[0] = Complex::from(T::one());
    let x = T::sparse_solve(n, &entries, &rhs).ok_or(Error::SingularAfterConstraint)?;
    let rho = DensityMatrix { dim: d, data: x }.hermitized();
    let min_ev = rho
        .eigenvalues()?
        .first()
        .copied()
        .unwrap_or_else(T::zero);
    if min_ev < -T::lit(POSITIVITY_TOLERANCE) {
        return Err(Error::NotPositive(min_ev.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(rho)
}

fn check_time(t_final: f64, dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::StepInvalid(format!("dt must be positive, got {dt}")));
    }
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(Error::StepInvalid(format!(
            "t_final must be nonnegative, got {t_final}"
        )));
    }
    Ok(())
}

/// RK4 propagation buffers.
struct Rk4<T> {
    k1: Vec<Complex<T>>,
    k2: Vec<Complex<T>>,
    k3: Vec<Complex<T>>,
    k4: Vec<Complex<T>>,
    tmp: Vec<Complex<T>>,
}

impl<T: Real> Rk4<T> {
    fn new(n: usize) -> Self {
        let z = vec![Complex::default(); n];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    fn step(&mut self, l: &Liouvillian<T>, y: &mut [Complex<T>], h: T) {
        let half = h / T::lit(2.0);
        l.apply_vec(y, &mut self.k1);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + self.k1[i] * half;
        }
        l.apply_vec(&self.tmp, &mut self.k2);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + self.k2[i] * half;
        }
        l.apply_vec(&self.tmp, &mut self.k3);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + self.k3[i] * h;
        }
        l.apply_vec(&self.tmp, &mut self.k4);
        let sixth = h / T::lit(6.0);
        let two = T::lit(2.0);
        for i in 0..y.len() {
            y[i] += (self.k1[i] + self.k2[i] * two + self.k3[i] * two + self.k4[i]) * sixth;
        }
    }

    /// Advances `y` by `span` using `ceil(span/h_max)` equal steps.
    fn advance(&mut self, l: &Liouvillian<T>, y: &mut [Complex<T>], span: T, h_max: T) {
        let steps = (span / h_max).ceil().to_usize().unwrap_or(0);
        if steps == 0 {
            return;
        }
        let h = span / T::from_count(steps);
        for _ in 0..steps {
            self.step(l, y, h);
        }
    }
}

/// Fixed-step RK4 integration of `dρ/dt = Lρ` over `[0, t_final]`, split
/// into `ceil(t_final/dt)` equal steps. `dt` must respect
/// [`Liouvillian::max_stable_step`] for the result to be meaningful.
pub fn evolve<T: Real>(
    liouvillian: &Liouvillian<T>,
    rho0: &DensityMatrix<T>,
    t_final: T,
    dt: T,
) -> Result<DensityMatrix<T>> {
    check_time(
        t_final.to_f64().unwrap_or(f64::NAN),
        dt.to_f64().unwrap_or(f64::NAN),
    )?;
    if rho0.dim != liouvillian.hilbert_dim() {
        return Err(Error::DimensionMismatch {
            expected: liouvillian.hilbert_dim(),
            got: rho0.dim,
        });
    }
    let mut y = rho0.data.clone();
    Rk4::new(y.len()).advance(liouvillian, &mut y, t_final, dt);
    Ok(DensityMatrix {
        dim: rho0.dim,
        data: y,
    })
}

/// Delayed second-order correlation via the regression theorem:
/// `g²(τ) = Tr[a†a e^{Lτ}(a ρ a†)] / ⟨a†a⟩²`. The grid must be
/// nondecreasing and start at τ ≥ 0.
pub fn g2_of_tau<T: Real>(
    liouvillian: &Liouvillian<T>,
    rho_s: &DensityMatrix<T>,
    tau_grid: &[T],
) -> Result<Vec<T>> {
    if rho_s.dim != liouvillian.hilbert_dim() {
        return Err(Error::DimensionMismatch {
            expected: liouvillian.hilbert_dim(),
            got: rho_s.dim,
        });
    }
    if tau_grid.first().is_some_and(|&t| !(t >= T::zero()))
        || tau_grid.windows(2).any(|w| !(w[1] >= w[0]))
    {
        return Err(Error::StepInvalid(
            "tau grid must be nonnegative and nondecreasing".into(),
        ));
    }
    let modes = ModeOperators::new(liouvillian.truncation());
    let number = modes.a.adjoint().matmul(&modes.a);
    let mean = rho_s.expectation(&number).re;
    if !(mean >= T::lit(ZERO_MEAN_PHOTON)) {
        return Err(Error::ZeroMeanPhoton(mean.to_f64().unwrap_or(0.0)));
    }
    let denom = mean * mean;
    let seeded = rho_s.sandwich(&modes.a);
    let mut y = seeded.data;
    let mut rk = Rk4::new(y.len());
    let h_max = liouvillian.max_stable_step();
    let mut now = T::zero();
    let mut out = Vec::with_capacity(tau_grid.len());
    for &tau in tau_grid {
        rk.advance(liouvillian, &mut y, tau - now, h_max);
        now = tau;
        let state = DensityMatrix {
            dim: rho_s.dim,
            data: y.clone(),
        };
        out.push(state.expectation(&number).re / denom);
    }
    Ok(out)
}
