//! The Ising-like chain Hamiltonian, its degeneracy-grouped spectral
//! decomposition, and the gap statistics entering the equilibration
//! bounds.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::hilbert::OperatorMatrix;
use crate::{Error, Result};

/// Default relative tolerance for grouping raw eigenvalues into levels
/// and for identifying distinct gaps.
pub const DEFAULT_GROUPING_TOL: f64 = 1e-10;

/// Chain length and coupling parameters defining the Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinChainSpec {
    pub n_sites: usize,
    /// Transverse field strength.
    pub g: f64,
    /// Longitudinal field strength.
    pub h: f64,
    /// Nearest-neighbor coupling.
    pub j: f64,
}

impl SpinChainSpec {
    /// The non-integrable production parameters: g = (5+√5)/8,
    /// h = (1+√5)/4, J = 1.
    pub fn non_integrable(n_sites: usize) -> Self {
        SpinChainSpec {
            n_sites,
            g: (5.0 + 5.0f64.sqrt()) / 8.0,
            h: (1.0 + 5.0f64.sqrt()) / 4.0,
            j: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(Error::domain(format!(
                "chain needs at least 2 sites (boundary terms), got {}",
                self.n_sites
            )));
        }
        Ok(())
    }
}

/// Builds H = g Σ σᵢˣ + h Σ_{i=2..N-1} σᵢᶻ + J Σ σᵢᶻσᵢ₊₁ᶻ
/// + (h−J)(σ₁ᶻ + σ_Nᶻ).
///
/// Assembled directly from bit patterns; the tensor-product embedding
/// route in [`crate::hilbert`] serves as an independent cross-check.
pub fn build_ising(spec: &SpinChainSpec) -> Result<OperatorMatrix> {
    spec.validate()?;
    let n = spec.n_sites;
    let d = 1usize << n;
    let mut m = DMatrix::<f64>::zeros(d, d);

    // z value of site i (1-based) for basis index b: bit 0 means up.
    let z = |b: usize, site: usize| -> f64 {
        if b >> (n - site) & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    };

    for b in 0..d {
        let mut diag = 0.0;
        for site in 2..n {
            diag += spec.h * z(b, site);
        }
        for site in 1..n {
            diag += spec.j * z(b, site) * z(b, site + 1);
        }
        diag += (spec.h - spec.j) * (z(b, 1) + z(b, n));
        m[(b, b)] = diag;

        for site in 1..=n {
            let flipped = b ^ (1usize << (n - site));
            m[(flipped, b)] += spec.g;
        }
    }
    OperatorMatrix::from_real(m)
}

/// Eigenvector matrix of a spectral decomposition.
///
/// Real symmetric inputs keep real eigenvectors so the hot paths can run
/// on `f64` matrix products; the general Hermitian path stores complex
/// columns.
#[derive(Debug, Clone)]
pub enum EigenVectors {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

impl EigenVectors {
    pub fn dim(&self) -> usize {
        match self {
            EigenVectors::Real(m) => m.nrows(),
            EigenVectors::Complex(m) => m.nrows(),
        }
    }

    /// V† x
    pub fn adjoint_apply(&self, x: &DVector<Complex64>) -> DVector<Complex64> {
        match self {
            EigenVectors::Real(m) => {
                let xre = x.map(|z| z.re);
                let xim = x.map(|z| z.im);
                let yre = m.transpose() * xre;
                let yim = m.transpose() * xim;
                DVector::from_fn(x.len(), |i, _| Complex64::new(yre[i], yim[i]))
            }
            EigenVectors::Complex(m) => m.adjoint() * x,
        }
    }

    /// V x
    pub fn apply(&self, x: &DVector<Complex64>) -> DVector<Complex64> {
        match self {
            EigenVectors::Real(m) => {
                let xre = x.map(|z| z.re);
                let xim = x.map(|z| z.im);
                let yre = m * xre;
                let yim = m * xim;
                DVector::from_fn(x.len(), |i, _| Complex64::new(yre[i], yim[i]))
            }
            EigenVectors::Complex(m) => m * x,
        }
    }

    /// V X for a complex block X given as split real/imaginary parts.
    pub fn apply_split(&self, xre: &DMatrix<f64>, xim: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        match self {
            EigenVectors::Real(m) => (m * xre, m * xim),
            EigenVectors::Complex(m) => {
                let x = DMatrix::from_fn(xre.nrows(), xre.ncols(), |i, j| {
                    Complex64::new(xre[(i, j)], xim[(i, j)])
                });
                let y = m * x;
                (y.map(|z| z.re), y.map(|z| z.im))
            }
        }
    }

    /// Column k as a complex vector.
    pub fn column(&self, k: usize) -> DVector<Complex64> {
        match self {
            EigenVectors::Real(m) => m.column(k).map(|x| Complex64::new(x, 0.0)),
            EigenVectors::Complex(m) => m.column(k).into_owned(),
        }
    }

    /// |V[row, col]|²
    pub fn entry_abs2(&self, row: usize, col: usize) -> f64 {
        match self {
            EigenVectors::Real(m) => m[(row, col)] * m[(row, col)],
            EigenVectors::Complex(m) => m[(row, col)].norm_sqr(),
        }
    }

    /// max |V†V − I| entry.
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.dim();
        match self {
            EigenVectors::Real(m) => {
                let g = m.transpose() * m;
                let mut worst = 0.0f64;
                for i in 0..d {
                    for j in 0..d {
                        let target = if i == j { 1.0 } else { 0.0 };
                        worst = worst.max((g[(i, j)] - target).abs());
                    }
                }
                worst
            }
            EigenVectors::Complex(m) => {
                let g = m.adjoint() * m;
                let mut worst = 0.0f64;
                for i in 0..d {
                    for j in 0..d {
                        let target = if i == j {
                            Complex64::new(1.0, 0.0)
                        } else {
                            Complex64::new(0.0, 0.0)
                        };
                        worst = worst.max((g[(i, j)] - target).norm());
                    }
                }
                worst
            }
        }
    }
}

/// Degeneracy-grouped spectral decomposition H = Σᵢ Eᵢ Πᵢ.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Distinct level energies, strictly increasing.
    energies: Vec<f64>,
    /// Level degeneracies dᵢ; Σ dᵢ = d.
    degeneracies: Vec<usize>,
    /// First eigenvector column of each level.
    level_offsets: Vec<usize>,
    /// Raw (ungrouped) eigenvalues per column, ascending.
    raw_energies: Vec<f64>,
    /// Eigenvector columns, ascending by raw eigenvalue.
    vectors: EigenVectors,
    grouping_tol: f64,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.raw_energies.len()
    }

    /// Number of distinct levels n.
    pub fn n_levels(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn degeneracies(&self) -> &[usize] {
        &self.degeneracies
    }

    pub fn raw_energies(&self) -> &[f64] {
        &self.raw_energies
    }

    pub fn vectors(&self) -> &EigenVectors {
        &self.vectors
    }

    pub fn grouping_tol(&self) -> f64 {
        self.grouping_tol
    }

    /// Column range of level i.
    pub fn level_columns(&self, level: usize) -> std::ops::Range<usize> {
        let start = self.level_offsets[level];
        start..start + self.degeneracies[level]
    }

    /// E_max − E_min over the raw spectrum.
    pub fn spectral_range(&self) -> f64 {
        match (self.raw_energies.first(), self.raw_energies.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    }

    /// Minimal gap between consecutive raw eigenvalues.
    pub fn min_raw_gap(&self) -> f64 {
        self.raw_energies
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Dense Hermitian eigendecomposition with degeneracy grouping.
///
/// Raw eigenvalues are sorted ascending and merged into one level
/// whenever consecutive values differ by less than
/// `grouping_tol · (E_max − E_min)`; the level energy is the mean of the
/// merged values.
pub fn diagonalize(h: &OperatorMatrix, grouping_tol: f64) -> Result<SpectralDecomposition> {
    if !h.is_hermitian() {
        return Err(Error::domain("diagonalize requires a Hermitian operator"));
    }
    if grouping_tol <= 0.0 {
        return Err(Error::domain("grouping tolerance must be positive"));
    }
    let d = h.dim();

    let (mut raw, vectors) = if h.is_real() {
        let real = h.entries().map(|z| z.re);
        let eig = real.symmetric_eigen();
        let order = sorted_order(eig.eigenvalues.as_slice());
        let raw: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut v = DMatrix::<f64>::zeros(d, d);
        for (dst, &src) in order.iter().enumerate() {
            v.set_column(dst, &eig.eigenvectors.column(src));
        }
        (raw, EigenVectors::Real(v))
    } else {
        let eig = h.entries().clone().symmetric_eigen();
        let order = sorted_order(eig.eigenvalues.as_slice());
        let raw: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut v = DMatrix::<Complex64>::zeros(d, d);
        for (dst, &src) in order.iter().enumerate() {
            v.set_column(dst, &eig.eigenvectors.column(src));
        }
        (raw, EigenVectors::Complex(v))
    };

    if raw.iter().any(|e| !e.is_finite()) {
        return Err(Error::numerical("eigensolver produced non-finite values"));
    }

    let range = raw.last().unwrap() - raw.first().unwrap();
    let abs_tol = grouping_tol * range;

    let mut energies = Vec::new();
    let mut degeneracies = Vec::new();
    let mut level_offsets = Vec::new();
    let mut start = 0usize;
    for k in 1..=d {
        let split = k == d || raw[k] - raw[k - 1] >= abs_tol.max(f64::MIN_POSITIVE);
        if split {
            let mean = raw[start..k].iter().sum::<f64>() / (k - start) as f64;
            energies.push(mean);
            degeneracies.push(k - start);
            level_offsets.push(start);
            start = k;
        }
    }
    // Degenerate-by-range input (e.g. the identity): one level.
    if range == 0.0 {
        energies = vec![raw[0]];
        degeneracies = vec![d];
        level_offsets = vec![0];
        raw = vec![raw[0]; d];
    }

    Ok(SpectralDecomposition {
        energies,
        degeneracies,
        level_offsets,
        raw_energies: raw,
        vectors,
        grouping_tol,
    })
}

fn sorted_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    order
}

/// Distinct positive energy gaps E_α − E_β (α > β) over the level
/// energies, with the spectral quantities n, N(ε) and f(ε,T).
#[derive(Debug, Clone)]
pub struct SpectralStatistics {
    n_levels: usize,
    distinct_gaps: Vec<f64>,
    gap_tolerance: f64,
    spectral_range: f64,
}

impl SpectralStatistics {
    /// Enumerates all n(n−1)/2 positive gaps and deduplicates them: two
    /// gaps are identified when they differ by less than
    /// `rel_tol · (spectral range)`.
    pub fn from_decomposition(decomp: &SpectralDecomposition, rel_tol: f64) -> Self {
        let energies = decomp.energies();
        let n = energies.len();
        let range = decomp.spectral_range();
        let mut gaps = Vec::with_capacity(n * (n - 1) / 2);
        for a in 1..n {
            for b in 0..a {
                gaps.push(energies[a] - energies[b]);
            }
        }
        gaps.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let tol = rel_tol * range;
        let mut distinct = Vec::new();
        for g in gaps {
            match distinct.last() {
                Some(&last) if g - last < tol => {}
                _ => distinct.push(g),
            }
        }
        SpectralStatistics {
            n_levels: n,
            distinct_gaps: distinct,
            gap_tolerance: tol,
            spectral_range: range,
        }
    }

    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    pub fn distinct_gaps(&self) -> &[f64] {
        &self.distinct_gaps
    }

    pub fn gap_tolerance(&self) -> f64 {
        self.gap_tolerance
    }

    pub fn spectral_range(&self) -> f64 {
        self.spectral_range
    }

    pub fn min_distinct_gap(&self) -> Option<f64> {
        self.distinct_gaps.first().copied()
    }

    /// Mean level spacing, the default ε for f(ε,T).
    pub fn mean_level_spacing(&self) -> f64 {
        self.spectral_range / self.n_levels as f64
    }

    /// N(ε): the maximal number of distinct gaps inside any closed window
    /// of width ε. Returns 0 for a trivial (single-level) spectrum.
    pub fn gap_count(&self, epsilon: f64) -> Result<usize> {
        if epsilon <= 0.0 {
            return Err(Error::domain("gap_count requires epsilon > 0"));
        }
        let gaps = &self.distinct_gaps;
        if gaps.is_empty() {
            return Ok(0);
        }
        let mut best = 1usize;
        let mut hi = 0usize;
        for lo in 0..gaps.len() {
            if hi < lo {
                hi = lo;
            }
            while hi + 1 < gaps.len() && gaps[hi + 1] - gaps[lo] <= epsilon {
                hi += 1;
            }
            best = best.max(hi - lo + 1);
        }
        Ok(best)
    }

    /// f(ε,T) = N(ε) · (1 + 8·log₂(n)/(ε·T)).
    pub fn spectral_factor(&self, epsilon: f64, t: f64) -> Result<f64> {
        if epsilon <= 0.0 {
            return Err(Error::domain("spectral_factor requires epsilon > 0"));
        }
        if t <= 0.0 {
            return Err(Error::domain("spectral_factor requires T > 0"));
        }
        if self.n_levels < 2 {
            return Err(Error::domain(
                "spectral_factor requires at least two distinct levels",
            ));
        }
        let n_eps = self.gap_count(epsilon)? as f64;
        Ok(n_eps * (1.0 + 8.0 * (self.n_levels as f64).log2() / (epsilon * t)))
    }
}

/// Verifies the reconstruction H = Σᵢ Eᵢ Πᵢ against the source operator.
/// Returns the max entry deviation (used by tests and the run summary).
pub fn reconstruction_defect(h: &OperatorMatrix, decomp: &SpectralDecomposition) -> f64 {
    let d = decomp.dim();
    let mut rebuilt = DMatrix::<Complex64>::zeros(d, d);
    for level in 0..decomp.n_levels() {
        let e = decomp.energies()[level];
        for k in decomp.level_columns(level) {
            let col = decomp.vectors().column(k);
            for i in 0..d {
                for j in 0..d {
                    rebuilt[(i, j)] += e * col[i] * col[j].conj();
                }
            }
        }
    }
    (rebuilt - h.entries())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}
