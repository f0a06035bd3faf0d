//! Hamiltonians and their spectra.
//!
//! The all-to-all model `H = -J E` (with `E` the all-ones matrix) has a rank-one
//! propagator `U_t = 1 + b_t E` and a closed-form eigenbasis. Arbitrary
//! Hermitian matrices go through a dense eigendecomposition.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{max_abs, Projector, StateVector, TOLERANCE};

/// Default relative clustering tolerance for degenerate eigenvalues.
pub const DEFAULT_CLUSTER_RTOL: f64 = 1e-8;

/// Fully connected hopping model `H = -J Σ_{x,y} |x⟩⟨y|` (units with ħ = 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllToAllModel {
    n_sites: usize,
    coupling: f64,
}

impl AllToAllModel {
    pub fn new(n_sites: usize, coupling: f64) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::param("n_sites", "must be positive"));
        }
        if coupling == 0.0 || !coupling.is_finite() {
            return Err(Error::param(
                "coupling",
                format!("J must be finite and nonzero, got {coupling}"),
            ));
        }
        Ok(Self { n_sites, coupling })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// `J`
    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    /// Dense `H = -J E`.
    pub fn hamiltonian(&self) -> DMatrix<Complex64> {
        let n = self.n_sites;
        DMatrix::from_element(n, n, Complex64::new(-self.coupling, 0.0))
    }

    /// `b_t = (e^{iJtN} - 1) / N`
    pub fn b_coefficient(&self, t: f64) -> Complex64 {
        let n = self.n_sites as f64;
        (Complex64::from_polar(1.0, self.coupling * t * n) - 1.0) / n
    }

    /// Applies `U_t = 1 + b_t E` in place in O(N).
    pub fn evolve_in_place(&self, t: f64, amplitudes: &mut [Complex64]) {
        let b = self.b_coefficient(t);
        let shift = b * amplitudes.iter().sum::<Complex64>();
        for a in amplitudes.iter_mut() {
            *a += shift;
        }
    }
}

/// `b_t = (e^{iJtN} - 1)/N`. Requires `t ≥ 0`.
pub fn b_coefficient(t: f64, model: &AllToAllModel) -> Result<Complex64> {
    check_time(t)?;
    Ok(model.b_coefficient(t))
}

/// Dense propagator `U_t = 1 + b_t E` of the all-to-all model.
pub fn propagator(t: f64, model: &AllToAllModel) -> Result<DMatrix<Complex64>> {
    check_time(t)?;
    let n = model.n_sites();
    let b = model.b_coefficient(t);
    Ok(DMatrix::identity(n, n) + DMatrix::from_element(n, n, b))
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::param("t", format!("time must be finite and ≥ 0, got {t}")))
    }
}

/// Orthonormal eigendecomposition of a Hermitian matrix with eigenvalues
/// grouped into degenerate clusters.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<StateVector>,
    groups: Vec<Vec<usize>>,
}

impl Spectrum {
    /// Assembles a spectrum, clustering eigenvalues whose consecutive gaps
    /// (in sorted order) are within `cluster_tol`.
    pub fn from_parts(
        eigenvalues: Vec<f64>,
        eigenvectors: Vec<StateVector>,
        cluster_tol: f64,
    ) -> Result<Self> {
        if eigenvalues.len() != eigenvectors.len() || eigenvalues.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: eigenvalues.len(),
                found: eigenvectors.len(),
            });
        }
        let dim = eigenvectors[0].dim();
        for v in &eigenvectors {
            crate::state::check_dim(dim, v.dim())?;
        }
        for (i, vi) in eigenvectors.iter().enumerate() {
            for (j, vj) in eigenvectors.iter().enumerate().skip(i) {
                let overlap = vi.inner(vj)?;
                let expected = if i == j { 1.0 } else { 0.0 };
                if (overlap - expected).norm() > 1e-9 {
                    return Err(Error::fault(
                        "spectrum",
                        format!("eigenvectors {i} and {j} not orthonormal (overlap {overlap})"),
                    ));
                }
            }
        }
        let groups = cluster(&eigenvalues, cluster_tol);
        Ok(Self {
            eigenvalues,
            eigenvectors,
            groups,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvectors[0].dim()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &[StateVector] {
        &self.eigenvectors
    }

    /// Partition of eigen-indices into degeneracy groups, ordered by
    /// increasing eigenvalue.
    pub fn degeneracy_groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// Sizes of the degeneracy groups, sorted ascending.
    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes: Vec<_> = self.groups.iter().map(Vec::len).collect();
        sizes.sort_unstable();
        sizes
    }

    /// Projector onto the eigenspace of one degeneracy group.
    pub fn group_projector(&self, group: usize) -> Result<Projector> {
        let vecs: Vec<_> = self.groups[group]
            .iter()
            .map(|&i| self.eigenvectors[i].clone())
            .collect();
        Projector::from_orthonormal(self.dim(), &vecs)
    }

    /// `Σ λ_i |v_i⟩⟨v_i|`
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut h = DMatrix::zeros(n, n);
        for (lambda, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            let col = v.to_dvector();
            h += (&col * col.adjoint()) * Complex64::new(*lambda, 0.0);
        }
        h
    }
}

fn cluster(eigenvalues: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eigenvalues[a].total_cmp(&eigenvalues[b]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut last = f64::NAN;
    for i in order {
        let lambda = eigenvalues[i];
        match groups.last_mut() {
            Some(g) if (lambda - last).abs() <= tol => g.push(i),
            _ => groups.push(vec![i]),
        }
        last = lambda;
    }
    groups
}

/// Closed-form eigenbasis of the all-to-all model.
///
/// Index 0 is `|N⟩ = (1,…,1)ᵀ/√N` with `E`-eigenvalue `N`; index `l` for
/// `l = 1..N-1` is `|0,l⟩` with `E`-eigenvalue 0.
#[derive(Debug, Clone)]
pub struct AllToAllSpectrum {
    /// Eigenvalues `Λ ∈ {N, 0}` of the all-ones matrix `E`.
    pub rank_one_eigenvalues: Vec<f64>,
    /// Spectrum of `H = -J E`, whose eigenvalues are `-J Λ`.
    pub hamiltonian: Spectrum,
}

/// `|0,l⟩`: `-C_l` on sites `1..=l`, `l C_l` on site `l+1`, zero beyond, with
/// `C_l = 1/√(l(l+1))`.
pub fn zero_mode(n_sites: usize, l: usize) -> Result<StateVector> {
    if l == 0 || l >= n_sites {
        return Err(Error::param(
            "l",
            format!("zero-mode index {l} outside [1, {}]", n_sites.saturating_sub(1)),
        ));
    }
    let c_l = zero_mode_weight(l);
    let mut amps = vec![Complex64::new(0.0, 0.0); n_sites];
    for a in amps.iter_mut().take(l) {
        *a = Complex64::new(-c_l, 0.0);
    }
    amps[l] = Complex64::new(l as f64 * c_l, 0.0);
    StateVector::new(amps)
}

/// `C_l = 1/√(l(l+1))`
pub fn zero_mode_weight(l: usize) -> f64 {
    let l = l as f64;
    1.0 / (l * (l + 1.0)).sqrt()
}

pub fn closed_form_eigenbasis(model: &AllToAllModel) -> AllToAllSpectrum {
    let n = model.n_sites();
    let mut rank_one = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    rank_one.push(n as f64);
    vectors.push(StateVector::uniform(n));
    for l in 1..n {
        rank_one.push(0.0);
        vectors.push(zero_mode(n, l).expect("l in range"));
    }
    let energies: Vec<f64> = rank_one.iter().map(|lam| -model.coupling() * lam).collect();
    let tol = DEFAULT_CLUSTER_RTOL * energies.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    let hamiltonian =
        Spectrum::from_parts(energies, vectors, tol).expect("closed-form basis is orthonormal");
    AllToAllSpectrum {
        rank_one_eigenvalues: rank_one,
        hamiltonian,
    }
}

/// Dense Hermitian eigendecomposition. `cluster_tol` defaults to
/// `1e-8 · max|λ|`.
pub fn generic_eigenbasis(h: &DMatrix<Complex64>, cluster_tol: Option<f64>) -> Result<Spectrum> {
    if !h.is_square() || h.nrows() == 0 {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            found: h.ncols(),
        });
    }
    let deviation = max_abs(&(h - h.adjoint()));
    if deviation > TOLERANCE {
        return Err(Error::NotHermitian { deviation });
    }
    let eig = SymmetricEigen::new(h.clone());
    let eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let mut eigenvectors = Vec::with_capacity(eigenvalues.len());
    for col in eig.eigenvectors.column_iter() {
        eigenvectors.push(StateVector::normalize(col.iter().copied().collect())?);
    }
    let tol = cluster_tol.unwrap_or_else(|| {
        DEFAULT_CLUSTER_RTOL * eigenvalues.iter().fold(0.0f64, |a, e| a.max(e.abs()))
    });
    let spectrum = Spectrum::from_parts(eigenvalues, eigenvectors, tol)?;

    let scale = max_abs(h).max(1.0);
    for (lambda, v) in spectrum.eigenvalues.iter().zip(&spectrum.eigenvectors) {
        let col = v.to_dvector();
        let residual = h * &col - &col * Complex64::new(*lambda, 0.0);
        let worst = residual.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if worst > 1e-9 * scale {
            return Err(Error::fault(
                "generic_eigenbasis",
                format!("eigenpair residual {worst:.3e}"),
            ));
        }
    }
    Ok(spectrum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// Scaling-and-squaring Taylor exponential, used only as an oracle.
    fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let n = a.nrows();
        let norm = a.iter().map(|z| z.norm()).sum::<f64>();
        let squarings = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
        let scaled = a * Complex64::new(0.5f64.powi(squarings), 0.0);
        let mut term = DMatrix::<Complex64>::identity(n, n);
        let mut sum = term.clone();
        for k in 1..30 {
            term = &term * &scaled * Complex64::new(1.0 / k as f64, 0.0);
            sum += &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }

    fn max_dev(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
        max_abs(&(a - b))
    }

    #[test]
    fn b_coefficient_values() {
        let model = AllToAllModel::new(6, 1.0).unwrap();
        assert_eq!(b_coefficient(0.0, &model).unwrap(), Complex64::new(0.0, 0.0));
        let b = b_coefficient(PI / 6.0, &model).unwrap();
        assert!((b - Complex64::new(-2.0 / 6.0, 0.0)).norm() < 1e-15);
        for t in [0.1, 1.3, 7.7, 42.0] {
            let b = b_coefficient(t, &model).unwrap();
            assert!(((b * 6.0 + 1.0).norm() - 1.0).abs() < 1e-14);
        }
        assert!(b_coefficient(-1.0, &model).is_err());
    }

    #[test]
    fn model_rejects_zero_coupling() {
        assert!(AllToAllModel::new(4, 0.0).is_err());
        assert!(AllToAllModel::new(0, 1.0).is_err());
    }

    #[test]
    fn propagator_matches_matrix_exponential() {
        let model = AllToAllModel::new(2, 1.0).unwrap();
        let u = propagator(PI / 2.0, &model).unwrap();
        // e^{iπ} - 1 = -2, so b = -1 and U = 1 - E.
        let expected = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        );
        assert!(max_dev(&u, &expected) < 1e-14);
        let oracle = expm(&(model.hamiltonian() * Complex64::new(0.0, -PI / 2.0)));
        assert!(max_dev(&u, &oracle) < 1e-12);

        let model = AllToAllModel::new(5, -0.7).unwrap();
        for t in [0.0, 0.3, 2.9, 11.0] {
            let u = propagator(t, &model).unwrap();
            let oracle = expm(&(model.hamiltonian() * Complex64::new(0.0, -t)));
            assert!(max_dev(&u, &oracle) < 1e-10, "t = {t}");
        }
    }

    #[test]
    fn propagator_identity_and_unitarity() {
        let model = AllToAllModel::new(6, 1.0).unwrap();
        let u0 = propagator(0.0, &model).unwrap();
        assert_eq!(u0, DMatrix::identity(6, 6));
        for t in [0.2, 1.0, 9.5] {
            let u = propagator(t, &model).unwrap();
            assert!(max_dev(&(&u * u.adjoint()), &DMatrix::identity(6, 6)) < 1e-10);
        }
    }

    #[test]
    fn in_place_evolution_matches_dense() {
        let model = AllToAllModel::new(4, 1.3).unwrap();
        let psi = StateVector::normalize(vec![
            Complex64::new(0.1, 0.2),
            Complex64::new(-0.3, 0.0),
            Complex64::new(0.5, -0.4),
            Complex64::new(0.0, 0.7),
        ])
        .unwrap();
        let dense = propagator(0.83, &model).unwrap() * psi.to_dvector();
        let mut amps = psi.amplitudes().to_vec();
        model.evolve_in_place(0.83, &mut amps);
        for (a, b) in amps.iter().zip(dense.iter()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn closed_form_basis_values() {
        let model = AllToAllModel::new(3, 1.0).unwrap();
        let spec = closed_form_eigenbasis(&model);
        assert_eq!(spec.rank_one_eigenvalues, vec![3.0, 0.0, 0.0]);
        assert_eq!(spec.hamiltonian.eigenvalues(), &[-3.0, 0.0, 0.0]);

        let zm = zero_mode(4, 1).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!((zm.amplitudes()[0].re + s).abs() < 1e-15);
        assert!((zm.amplitudes()[1].re - s).abs() < 1e-15);
        assert_eq!(zm.amplitudes()[2].re, 0.0);

        for n in 2..9 {
            let model = AllToAllModel::new(n, 0.8).unwrap();
            let spec = closed_form_eigenbasis(&model);
            let v = spec.hamiltonian.eigenvectors();
            for i in 0..n {
                for j in 0..n {
                    let o = v[i].inner(&v[j]).unwrap();
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((o - e).norm() < 1e-12);
                }
            }
            let rebuilt = spec.hamiltonian.reconstruct();
            assert!(max_dev(&rebuilt, &model.hamiltonian()) < 1e-9);
        }
    }

    #[test]
    fn generic_groups() {
        let model = AllToAllModel::new(6, 1.0).unwrap();
        let spec = generic_eigenbasis(&model.hamiltonian(), None).unwrap();
        assert_eq!(spec.group_sizes(), vec![1, 5]);

        let mut d = DMatrix::<Complex64>::zeros(3, 3);
        for i in 0..3 {
            d[(i, i)] = Complex64::new(i as f64 + 1.0, 0.0);
        }
        assert_eq!(generic_eigenbasis(&d, None).unwrap().group_sizes(), vec![1, 1, 1]);

        let z = DMatrix::<Complex64>::zeros(4, 4);
        assert_eq!(generic_eigenbasis(&z, None).unwrap().group_sizes(), vec![4]);
    }

    #[test]
    fn generic_rejects_non_hermitian() {
        let mut h = DMatrix::<Complex64>::zeros(2, 2);
        h[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(
            generic_eigenbasis(&h, None),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn closed_form_and_generic_agree_on_group_projectors() {
        for n in [2, 3, 6, 9] {
            let model = AllToAllModel::new(n, 1.7).unwrap();
            let closed = closed_form_eigenbasis(&model).hamiltonian;
            let generic = generic_eigenbasis(&model.hamiltonian(), None).unwrap();
            assert_eq!(closed.degeneracy_groups().len(), generic.degeneracy_groups().len());
            for g in 0..closed.degeneracy_groups().len() {
                let a = closed.group_projector(g).unwrap();
                let b = generic.group_projector(g).unwrap();
                assert!(max_dev(a.matrix(), b.matrix()) < 1e-9);
            }
        }
    }

    proptest! {
        #[test]
        fn propagator_group_property(t1 in 0.0f64..10.0, t2 in 0.0f64..10.0, n in 2usize..9) {
            let model = AllToAllModel::new(n, 1.0).unwrap();
            let lhs = propagator(t1, &model).unwrap() * propagator(t2, &model).unwrap();
            let rhs = propagator(t1 + t2, &model).unwrap();
            prop_assert!(max_dev(&lhs, &rhs) < 1e-9);
        }

        #[test]
        fn spectral_reconstruction(
            n in 2usize..7,
            raw in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 49),
        ) {
            let mut h = DMatrix::<Complex64>::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    let (a, b) = raw[i * 7 + j];
                    h[(i, j)] += Complex64::new(a, b);
                    h[(j, i)] += Complex64::new(a, -b);
                }
            }
            let spec = generic_eigenbasis(&h, None).unwrap();
            prop_assert!(max_dev(&spec.reconstruct(), &h) < 1e-9);
        }
    }
}
