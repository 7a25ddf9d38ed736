//! Time evolution in the energy eigenbasis, the dephased equilibrium
//! state, effective dimension, and finite-time averaging (trapezoidal
//! grid averages plus the closed-form kernel average).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::hamiltonian::{EigenVectors, SpectralDecomposition};
use crate::hilbert::PureState;
use crate::observables::{
    mask_probabilities_split, ObservableDecomposition, ProbabilityVector, Projectors,
};
use crate::{Error, Result};

/// Time samples for chunked evolution; sized so one split block stays in
/// cache-friendly territory at d = 1024.
const EVOLVE_CHUNK: usize = 256;

/// Initial state expressed by its coefficients in the energy eigenbasis.
#[derive(Debug, Clone)]
pub struct EnergyBasisState {
    overlaps: DVector<Complex64>,
    decomp: Arc<SpectralDecomposition>,
}

/// Change of basis into the energy eigenbasis, performed once.
pub fn prepare(decomp: &Arc<SpectralDecomposition>, psi0: &PureState) -> Result<EnergyBasisState> {
    if psi0.dim() != decomp.dim() {
        return Err(Error::DimensionMismatch {
            expected: decomp.dim(),
            got: psi0.dim(),
        });
    }
    let overlaps = decomp.vectors().adjoint_apply(psi0.amplitudes());
    Ok(EnergyBasisState {
        overlaps,
        decomp: Arc::clone(decomp),
    })
}

impl EnergyBasisState {
    pub fn overlaps(&self) -> &DVector<Complex64> {
        &self.overlaps
    }

    pub fn decomposition(&self) -> &Arc<SpectralDecomposition> {
        &self.decomp
    }

    pub fn dim(&self) -> usize {
        self.overlaps.len()
    }

    /// tr(Πᵢ ρ₀) per level.
    pub fn level_populations(&self) -> Vec<f64> {
        (0..self.decomp.n_levels())
            .map(|level| {
                self.decomp
                    .level_columns(level)
                    .map(|k| self.overlaps[k].norm_sqr())
                    .sum()
            })
            .collect()
    }

    /// |ψ(t)⟩ = e^{−iHt}|ψ₀⟩, using raw (ungrouped) eigenvalues so that
    /// degeneracy grouping cannot perturb phases.
    pub fn evolve(&self, t: f64) -> PureState {
        let phased = DVector::from_fn(self.overlaps.len(), |k, _| {
            let phase = Complex64::from_polar(1.0, -self.decomp.raw_energies()[k] * t);
            self.overlaps[k] * phase
        });
        let amplitudes = self.decomp.vectors().apply(&phased);
        PureState::new(amplitudes).expect("unitary evolution preserves the norm")
    }

    /// Outcome probabilities p_t for every grid time, batched through
    /// matrix products in chunks of [`EVOLVE_CHUNK`] time samples.
    pub fn probability_series(
        &self,
        obs: &ObservableDecomposition,
        grid: &TimeGrid,
    ) -> Result<Vec<ProbabilityVector>> {
        if obs.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: obs.dim(),
            });
        }
        let d = self.dim();
        let times = grid.times();
        let energies = self.decomp.raw_energies();
        let mut out = Vec::with_capacity(times.len());

        for chunk in times.chunks(EVOLVE_CHUNK) {
            let cols = chunk.len();
            let mut xre = DMatrix::<f64>::zeros(d, cols);
            let mut xim = DMatrix::<f64>::zeros(d, cols);
            for (m, &t) in chunk.iter().enumerate() {
                for j in 0..d {
                    let (s, c) = (energies[j] * t).sin_cos();
                    let cj = self.overlaps[j];
                    // c_j · e^{−iE_j t}
                    xre[(j, m)] = cj.re * c + cj.im * s;
                    xim[(j, m)] = cj.im * c - cj.re * s;
                }
            }
            let (yre, yim) = self.decomp.vectors().apply_split(&xre, &xim);
            for m in 0..cols {
                let probs = match obs.projectors() {
                    Projectors::BasisMasks(masks) => {
                        mask_probabilities_split(masks, &yre, &yim, m)
                    }
                    Projectors::Blocks(blocks) => {
                        let amps = DVector::from_fn(d, |i, _| {
                            Complex64::new(yre[(i, m)], yim[(i, m)])
                        });
                        blocks
                            .iter()
                            .map(|b| (b.adjoint() * &amps).norm_squared())
                            .collect()
                    }
                };
                out.push(ProbabilityVector::new(probs)?);
            }
        }
        Ok(out)
    }
}

/// The dephased infinite-time-average state ω = Σᵢ Πᵢ ρ₀ Πᵢ, kept in its
/// factored per-level form (ρ₀ is pure throughout this crate, so each
/// level block is the rank-one |Πᵢψ₀⟩⟨Πᵢψ₀|).
#[derive(Debug, Clone)]
pub struct EquilibriumState {
    overlaps: DVector<Complex64>,
    populations: Vec<f64>,
    decomp: Arc<SpectralDecomposition>,
}

/// Dephasing of a pure initial state in the Hamiltonian eigenbasis.
pub fn dephase(decomp: &Arc<SpectralDecomposition>, psi0: &PureState) -> Result<EquilibriumState> {
    let state = prepare(decomp, psi0)?;
    let populations = state.level_populations();
    Ok(EquilibriumState {
        overlaps: state.overlaps,
        populations,
        decomp: Arc::clone(decomp),
    })
}

impl EquilibriumState {
    pub fn dim(&self) -> usize {
        self.overlaps.len()
    }

    /// tr(Πᵢ ρ₀) per level.
    pub fn populations(&self) -> &[f64] {
        &self.populations
    }

    pub fn trace(&self) -> f64 {
        self.populations.iter().sum()
    }

    /// tr(ω²) = Σᵢ tr(Πᵢρ₀)² for pure ρ₀.
    pub fn purity(&self) -> f64 {
        self.populations.iter().map(|p| p * p).sum()
    }

    /// Level block of ω in eigenbasis coordinates (dᵢ × dᵢ).
    pub fn block_matrix(&self, level: usize) -> DMatrix<Complex64> {
        let cols = self.decomp.level_columns(level);
        let c = DVector::from_iterator(cols.len(), cols.map(|k| self.overlaps[k]));
        &c * c.adjoint()
    }

    /// Unnormalized components φᵢ = Πᵢψ₀ in the computational basis,
    /// one per level (ω = Σᵢ |φᵢ⟩⟨φᵢ|).
    pub fn level_components(&self) -> impl Iterator<Item = DVector<Complex64>> + '_ {
        (0..self.decomp.n_levels()).map(move |level| self.level_component(level))
    }

    pub fn level_component(&self, level: usize) -> DVector<Complex64> {
        let d = self.dim();
        let mut phi = DVector::<Complex64>::zeros(d);
        for k in self.decomp.level_columns(level) {
            let col = self.decomp.vectors().column(k);
            phi.axpy(self.overlaps[k], &col, Complex64::new(1.0, 0.0));
        }
        phi
    }
}

/// d_eff = (Σᵢ tr(Πᵢρ₀)²)⁻¹.
pub fn effective_dimension(
    decomp: &Arc<SpectralDecomposition>,
    psi0: &PureState,
) -> Result<f64> {
    let omega = dephase(decomp, psi0)?;
    Ok(1.0 / omega.purity())
}

/// Strictly increasing time grid starting at 0.
#[derive(Debug, Clone)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.first() != Some(&0.0) {
            return Err(Error::domain("time grid must start at 0"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("time grid must be strictly increasing"));
        }
        Ok(TimeGrid { times })
    }

    /// Uniform grid 0, dt, 2dt, … covering `t_max`.
    pub fn uniform(dt: f64, t_max: f64) -> Result<Self> {
        if dt <= 0.0 || t_max <= 0.0 || dt >= t_max {
            return Err(Error::domain(format!(
                "uniform grid requires 0 < dt < t_max, got dt={dt}, t_max={t_max}"
            )));
        }
        let steps = (t_max / dt).round().max(1.0) as usize;
        Ok(TimeGrid {
            times: (0..=steps).map(|k| k as f64 * dt).collect(),
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().unwrap()
    }
}

/// Running trapezoidal averages ⟨g⟩_T at every grid point; the T = 0
/// entry is the instantaneous value g(0).
pub fn running_trapezoid_average(times: &[f64], values: &[f64]) -> Vec<f64> {
    assert_eq!(times.len(), values.len(), "series must align with the grid");
    let mut out = Vec::with_capacity(values.len());
    let mut cum = 0.0f64;
    for k in 0..values.len() {
        if k == 0 {
            out.push(values[0]);
        } else {
            cum += 0.5 * (values[k - 1] + values[k]) * (times[k] - times[k - 1]);
            out.push(cum / times[k]);
        }
    }
    out
}

/// Running trapezoidal averages of a vector-valued series (one `Vec<f64>`
/// per grid point, all of equal length).
pub fn running_trapezoid_average_vectors(times: &[f64], series: &[Vec<f64>]) -> Vec<Vec<f64>> {
    assert_eq!(times.len(), series.len(), "series must align with the grid");
    let width = series.first().map_or(0, Vec::len);
    let mut cum = vec![0.0f64; width];
    let mut out = Vec::with_capacity(series.len());
    for k in 0..series.len() {
        if k == 0 {
            out.push(series[0].clone());
        } else {
            let dt = times[k] - times[k - 1];
            let mut row = Vec::with_capacity(width);
            for i in 0..width {
                cum[i] += 0.5 * (series[k - 1][i] + series[k][i]) * dt;
                row.push(cum[i] / times[k]);
            }
            out.push(row);
        }
    }
    out
}

/// (1/T)∫₀ᵀ g dt by the trapezoidal rule; for T between grid points the
/// cumulative integral is linearly interpolated.
pub fn time_average(times: &[f64], values: &[f64], t: f64) -> Result<f64> {
    if times.len() != values.len() || times.is_empty() {
        return Err(Error::domain("series must align with a nonempty grid"));
    }
    let (lo, hi) = (times[0], *times.last().unwrap());
    if t < lo || t > hi {
        return Err(Error::domain(format!(
            "T={t} lies outside the grid span [{lo}, {hi}]"
        )));
    }
    if t == 0.0 {
        return Ok(values[0]);
    }
    let mut cum = 0.0f64;
    for k in 1..times.len() {
        let seg = 0.5 * (values[k - 1] + values[k]) * (times[k] - times[k - 1]);
        if times[k] >= t {
            let frac = (t - times[k - 1]) / (times[k] - times[k - 1]);
            return Ok((cum + seg * frac) / t);
        }
        cum += seg;
    }
    Ok(cum / t)
}

/// Kernel (1/T)∫₀ᵀ e^{iΔt} dt = (e^{iΔT} − 1)/(iΔT), with the Δ = 0
/// value 1.
pub fn average_phase_kernel(delta: f64, t: f64) -> Complex64 {
    let x = delta * t;
    if x == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    Complex64::new(x.sin() / x, (1.0 - x.cos()) / x)
}

/// Closed-form ⟨p_l⟩_T from the double sum over energy pairs with the
/// averaged-phase kernel.
pub fn exact_time_averaged_probabilities(
    state: &EnergyBasisState,
    obs: &ObservableDecomposition,
    t: f64,
) -> Result<ProbabilityVector> {
    if t <= 0.0 {
        return Err(Error::domain("closed-form average requires T > 0"));
    }
    if obs.dim() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            got: obs.dim(),
        });
    }
    let d = state.dim();
    let energies = state.decomposition().raw_energies();
    let c = state.overlaps();

    match (state.decomposition().vectors(), obs.projectors()) {
        (EigenVectors::Real(v), Projectors::BasisMasks(masks)) => {
            // M[j,k] = Re(conj(c_j) c_k κ(E_j − E_k)); q_l = Σ (V_lᵀV_l) ∘ M,
            // evaluated as row-wise products to avoid materializing V_lᵀV_l.
            let mut m = DMatrix::<f64>::zeros(d, d);
            for j in 0..d {
                for k in 0..d {
                    let kappa = average_phase_kernel(energies[j] - energies[k], t);
                    m[(j, k)] = (c[j].conj() * c[k] * kappa).re;
                }
            }
            let probs = masks
                .iter()
                .map(|mask| {
                    let rows = mask.len();
                    let mut vl = DMatrix::<f64>::zeros(rows, d);
                    for (r, &b) in mask.iter().enumerate() {
                        for j in 0..d {
                            vl[(r, j)] = v[(b, j)];
                        }
                    }
                    let g = &vl * &m;
                    let mut q = 0.0;
                    for r in 0..rows {
                        for j in 0..d {
                            q += g[(r, j)] * vl[(r, j)];
                        }
                    }
                    q
                })
                .collect();
            ProbabilityVector::new(probs)
        }
        _ => {
            // General path: q_l = Σ_{j,k} conj(c_j) c_k κ_{jk} ⟨E_j|P_l|E_k⟩.
            let vectors = state.decomposition().vectors();
            let mut kappa = DMatrix::<Complex64>::zeros(d, d);
            for j in 0..d {
                for k in 0..d {
                    kappa[(j, k)] = average_phase_kernel(energies[j] - energies[k], t);
                }
            }
            let probs: Vec<f64> = (0..obs.rank())
                .map(|l| {
                    let basis_cols: Vec<DVector<Complex64>> = match obs.projectors() {
                        Projectors::BasisMasks(masks) => masks[l]
                            .iter()
                            .map(|&b| {
                                DVector::from_fn(d, |i, _| {
                                    if i == b {
                                        Complex64::new(1.0, 0.0)
                                    } else {
                                        Complex64::new(0.0, 0.0)
                                    }
                                })
                            })
                            .collect(),
                        Projectors::Blocks(blocks) => (0..blocks[l].ncols())
                            .map(|col| blocks[l].column(col).into_owned())
                            .collect(),
                    };
                    let mut q = 0.0;
                    for col in &basis_cols {
                        // u[j] = conj(c_j) ⟨E_j|col⟩
                        let w = vectors.adjoint_apply(col);
                        let u = DVector::from_fn(d, |j, _| c[j].conj() * w[j]);
                        let ku = &kappa * u.map(|z| z.conj());
                        let contrib: Complex64 = u.iter().zip(ku.iter()).map(|(a, b)| a * b).sum();
                        q += contrib.re;
                    }
                    q
                })
                .collect();
            ProbabilityVector::new(probs)
        }
    }
}
