//! Haar-random pure-state sampling and the Monte Carlo deviation
//! experiment behind the equilibrium deviation bound.

use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dynamics::{dephase, exact_time_averaged_probabilities, prepare, TimeGrid};
use crate::hamiltonian::{SpectralDecomposition, SpectralStatistics};
use crate::hilbert::PureState;
use crate::observables::{equilibrium_probabilities, ObservableDecomposition};
use crate::{Error, Result};

/// How a finite ensemble's fluctuating per-sample d_eff enters the
/// deviation bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeffConvention {
    /// Conservative: the smallest d_eff observed across samples.
    PerSampleMin,
    /// Haar-typical: the ensemble mean of per-sample d_eff.
    EnsembleMean,
}

impl DeffConvention {
    pub fn label(&self) -> &'static str {
        match self {
            DeffConvention::PerSampleMin => "per_sample_min",
            DeffConvention::EnsembleMean => "ensemble_mean",
        }
    }
}

/// Per-sample record of the deviation experiment.
#[derive(Debug, Clone, Copy)]
pub struct DeviationSample {
    pub seed_index: u64,
    pub d_eff: f64,
    /// ‖⟨p_t⟩_T − p_∞‖₂ from the closed-form kernel average.
    pub l2_deviation: f64,
    /// Largest per-component violation of (⟨p_l⟩_T − p_l^∞)² ≤
    /// ⟨(p_l − p_l^∞)²⟩_T on the discrete grid (≤ 0 when it holds).
    pub jensen_slack: f64,
}

/// Aggregate report of the deviation experiment.
#[derive(Debug, Clone)]
pub struct TypicalityReport {
    pub t: f64,
    pub epsilon_dev: f64,
    pub n_samples: usize,
    pub convention: DeffConvention,
    pub d_eff_used: f64,
    pub d_eff_mean: f64,
    pub d_eff_min: f64,
    pub rank: usize,
    pub spectral_factor: f64,
    /// Fraction of samples with ‖⟨p_t⟩_T − p_∞‖₂ ≥ epsilon_dev.
    pub empirical_frequency: f64,
    /// r·f/(d_eff·ε²); may exceed 1, in which case the test is vacuous.
    pub markov_bound: f64,
    pub vacuous: bool,
    /// Frequency ≤ markov bound within the 3-sigma binomial allowance.
    pub markov_ok: bool,
    /// Sample mean of ‖⟨p_t⟩_T − p_∞‖₂².
    pub mean_square_deviation: f64,
    /// r·f/d_eff with the ensemble-mean convention.
    pub mean_square_bound: f64,
    pub mean_square_ok: bool,
    /// Per-component Jensen step held for every sample.
    pub jensen_ok: bool,
    /// All raw energy gaps distinct at the statistics tolerance.
    pub nondegenerate_gaps: bool,
    pub samples: Vec<DeviationSample>,
}

/// Parameters of [`deviation_experiment`].
#[derive(Debug, Clone, Copy)]
pub struct DeviationParams {
    pub t: f64,
    pub epsilon_dev: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub convention: DeffConvention,
    /// f(ε,T) to insert into the bound; 1.0 selects the asymptotic form.
    pub spectral_factor: f64,
    /// Grid resolution for the per-sample Jensen check.
    pub grid_points: usize,
}

impl DeviationParams {
    pub fn new(t: f64, epsilon_dev: f64, n_samples: usize, seed: u64) -> Self {
        DeviationParams {
            t,
            epsilon_dev,
            n_samples,
            seed,
            convention: DeffConvention::EnsembleMean,
            spectral_factor: 1.0,
            grid_points: 2000,
        }
    }
}

/// Haar-random pure state: independent standard complex Gaussian
/// amplitudes, normalized. Deterministic per `(seed, stream)`.
pub fn haar_random_state(d: usize, seed: u64, stream: u64) -> Result<PureState> {
    if d < 1 {
        return Err(Error::domain("Hilbert space dimension must be at least 1"));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    loop {
        let amps = DVector::from_fn(d, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        });
        let norm = amps.norm();
        if norm > 0.0 {
            return PureState::new(amps / Complex64::from(norm));
        }
    }
}

/// Monte Carlo test of the equilibrium deviation bound: sample Haar
/// states, time-average their outcome distributions to horizon T via the
/// closed-form kernel, and compare the exceedance frequency of the
/// 2-norm deviation against r·f/(d_eff·ε²).
pub fn deviation_experiment(
    decomp: &Arc<SpectralDecomposition>,
    obs: &ObservableDecomposition,
    params: &DeviationParams,
) -> Result<TypicalityReport> {
    if params.t <= 0.0 {
        return Err(Error::domain("averaging horizon must be positive"));
    }
    if params.epsilon_dev <= 0.0 {
        return Err(Error::domain("deviation threshold must be positive"));
    }
    if params.n_samples < 1 {
        return Err(Error::domain("need at least one sample"));
    }
    if obs.dim() != decomp.dim() {
        return Err(Error::DimensionMismatch {
            expected: decomp.dim(),
            got: obs.dim(),
        });
    }

    let d = decomp.dim();
    let r = obs.rank();
    let grid = TimeGrid::uniform(params.t / params.grid_points as f64, params.t)?;
    let stats = SpectralStatistics::from_decomposition(decomp, 1e-10);
    let n_raw_pairs = decomp.dim() * (decomp.dim() - 1) / 2;
    let nondegenerate_gaps = stats.distinct_gaps().len() == n_raw_pairs;

    let mut samples = Vec::with_capacity(params.n_samples);
    for idx in 0..params.n_samples as u64 {
        let psi = haar_random_state(d, params.seed, idx)?;
        let state = prepare(decomp, &psi)?;
        let omega = dephase(decomp, &psi)?;
        let d_eff = 1.0 / omega.purity();
        let p_inf = equilibrium_probabilities(obs, &omega)?;
        let p_avg = exact_time_averaged_probabilities(&state, obs, params.t)?;
        let l2_deviation = crate::complexity::l2_distance(&p_avg, &p_inf)?;

        // Jensen step, entirely on the discrete trapezoidal measure so
        // the inequality is exact up to roundoff.
        let series = state.probability_series(obs, &grid)?;
        let times = grid.times();
        let mut mean = vec![0.0f64; r];
        let mut mean_sq = vec![0.0f64; r];
        for k in 1..times.len() {
            let dt = times[k] - times[k - 1];
            for l in 0..r {
                let a = series[k - 1].probs()[l] - p_inf.probs()[l];
                let b = series[k].probs()[l] - p_inf.probs()[l];
                mean[l] += 0.5 * (a + b) * dt;
                mean_sq[l] += 0.5 * (a * a + b * b) * dt;
            }
        }
        let mut jensen_slack = f64::NEG_INFINITY;
        for l in 0..r {
            let lhs = (mean[l] / params.t).powi(2);
            let rhs = mean_sq[l] / params.t;
            jensen_slack = jensen_slack.max(lhs - rhs);
        }

        samples.push(DeviationSample {
            seed_index: idx,
            d_eff,
            l2_deviation,
            jensen_slack,
        });
    }

    let n = params.n_samples as f64;
    let d_eff_mean = samples.iter().map(|s| s.d_eff).sum::<f64>() / n;
    let d_eff_min = samples.iter().map(|s| s.d_eff).fold(f64::INFINITY, f64::min);
    let d_eff_used = match params.convention {
        DeffConvention::PerSampleMin => d_eff_min,
        DeffConvention::EnsembleMean => d_eff_mean,
    };

    let exceed = samples
        .iter()
        .filter(|s| s.l2_deviation >= params.epsilon_dev)
        .count();
    let empirical_frequency = exceed as f64 / n;
    let markov_bound =
        r as f64 * params.spectral_factor / (d_eff_used * params.epsilon_dev * params.epsilon_dev);
    let vacuous = markov_bound >= 1.0;
    let p_cap = markov_bound.min(1.0);
    let binom_sigma = (p_cap * (1.0 - p_cap) / n).sqrt();
    let markov_ok = empirical_frequency <= markov_bound + 3.0 * binom_sigma;

    let mean_square_deviation =
        samples.iter().map(|s| s.l2_deviation * s.l2_deviation).sum::<f64>() / n;
    let mean_square_bound = r as f64 * params.spectral_factor / d_eff_mean;
    let sq_var = samples
        .iter()
        .map(|s| {
            let x = s.l2_deviation * s.l2_deviation - mean_square_deviation;
            x * x
        })
        .sum::<f64>()
        / n;
    let mean_square_ok =
        mean_square_deviation <= mean_square_bound + 3.0 * (sq_var / n).sqrt() + 1e-15;

    let jensen_ok = samples.iter().all(|s| s.jensen_slack <= 1e-12);

    Ok(TypicalityReport {
        t: params.t,
        epsilon_dev: params.epsilon_dev,
        n_samples: params.n_samples,
        convention: params.convention,
        d_eff_used,
        d_eff_mean,
        d_eff_min,
        rank: r,
        spectral_factor: params.spectral_factor,
        empirical_frequency,
        markov_bound,
        vacuous,
        markov_ok,
        mean_square_deviation,
        mean_square_bound,
        mean_square_ok,
        jensen_ok,
        nondegenerate_gaps,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_ising, diagonalize, SpinChainSpec, DEFAULT_GROUPING_TOL};
    use crate::observables::{decompose_observable, magnetization_observable};
    use nalgebra::DMatrix;

    fn chain(n: usize) -> Arc<SpectralDecomposition> {
        let spec = SpinChainSpec::non_integrable(n);
        Arc::new(diagonalize(&build_ising(&spec).unwrap(), DEFAULT_GROUPING_TOL).unwrap())
    }

    #[test]
    fn haar_d1_is_phase_only() {
        let psi = haar_random_state(1, 7, 0).unwrap();
        assert_eq!(psi.dim(), 1);
        assert!((psi.amplitudes()[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn haar_is_deterministic_per_seed_and_stream() {
        let a = haar_random_state(16, 42, 3).unwrap();
        let b = haar_random_state(16, 42, 3).unwrap();
        assert_eq!(a.amplitudes(), b.amplitudes());
        let c = haar_random_state(16, 42, 4).unwrap();
        assert_ne!(a.amplitudes(), c.amplitudes());
        let d = haar_random_state(16, 43, 3).unwrap();
        assert_ne!(a.amplitudes(), d.amplitudes());
    }

    #[test]
    fn haar_rejects_zero_dimension() {
        assert!(haar_random_state(0, 1, 0).is_err());
    }

    #[test]
    fn haar_mean_inverse_participation_matches_moment() {
        // For a fully non-degenerate spectrum, d_eff of a Haar state is
        // (Σ_k |c_k|⁴)⁻¹ in any fixed basis; its mean concentrates near
        // (d+1)/2.
        let d = 1024;
        let n_samples = 200;
        let mut acc = 0.0;
        for idx in 0..n_samples as u64 {
            let psi = haar_random_state(d, 9, idx).unwrap();
            let purity: f64 = psi.amplitudes().iter().map(|z| z.norm_sqr().powi(2)).sum();
            acc += 1.0 / purity;
        }
        let mean = acc / n_samples as f64;
        let expected = (d as f64 + 1.0) / 2.0;
        assert!(
            (mean - expected).abs() < 0.05 * expected,
            "mean d_eff {mean} strays from {expected}"
        );
    }

    #[test]
    fn rank_one_observable_never_deviates() {
        let decomp = chain(3);
        let identity = crate::hilbert::OperatorMatrix::from_real(DMatrix::identity(8, 8)).unwrap();
        let obs = decompose_observable(&identity, 1e-10).unwrap();
        assert_eq!(obs.rank(), 1);
        let mut params = DeviationParams::new(5.0, 0.01, 10, 1);
        params.grid_points = 50;
        let report = deviation_experiment(&decomp, &obs, &params).unwrap();
        assert_eq!(report.empirical_frequency, 0.0);
        assert!(report.markov_ok);
        assert!(report.jensen_ok);
    }

    #[test]
    fn threshold_above_two_never_exceeded() {
        let decomp = chain(3);
        let obs = magnetization_observable(3).unwrap();
        let mut params = DeviationParams::new(5.0, 2.0, 20, 11);
        params.grid_points = 50;
        let report = deviation_experiment(&decomp, &obs, &params).unwrap();
        assert_eq!(report.empirical_frequency, 0.0);
        assert!(!report.vacuous || report.markov_bound >= 1.0);
    }

    #[test]
    fn report_is_deterministic() {
        let decomp = chain(3);
        let obs = magnetization_observable(3).unwrap();
        let mut params = DeviationParams::new(10.0, 0.05, 15, 123);
        params.grid_points = 100;
        let a = deviation_experiment(&decomp, &obs, &params).unwrap();
        let b = deviation_experiment(&decomp, &obs, &params).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert_eq!(x.d_eff, y.d_eff);
            assert_eq!(x.l2_deviation, y.l2_deviation);
        }
        assert_eq!(a.empirical_frequency, b.empirical_frequency);
    }

    #[test]
    fn jensen_and_mean_square_hold_on_small_chain() {
        let decomp = chain(4);
        let obs = magnetization_observable(4).unwrap();
        let mut params = DeviationParams::new(50.0, 0.05, 25, 5);
        params.grid_points = 500;
        let report = deviation_experiment(&decomp, &obs, &params).unwrap();
        assert!(report.jensen_ok, "Jensen slack violated");
        assert!(report.mean_square_ok);
        assert!(report.d_eff_min <= report.d_eff_mean);
        assert!(report.d_eff_used == report.d_eff_mean);
    }

    #[test]
    fn convention_switch_changes_d_eff_used() {
        let decomp = chain(3);
        let obs = magnetization_observable(3).unwrap();
        let mut params = DeviationParams::new(5.0, 0.05, 10, 77);
        params.grid_points = 50;
        params.convention = DeffConvention::PerSampleMin;
        let report = deviation_experiment(&decomp, &obs, &params).unwrap();
        assert_eq!(report.d_eff_used, report.d_eff_min);
    }
}
