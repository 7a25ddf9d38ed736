//! Observable entropy, distances from equilibrium, the equilibration
//! complexity measure and its two time-averaged variants, and the bound
//! evaluations used by the verification suites.

use crate::dynamics::{
    exact_time_averaged_probabilities, running_trapezoid_average,
    running_trapezoid_average_vectors, EnergyBasisState, TimeGrid,
};
use crate::observables::{ObservableDecomposition, ProbabilityVector};
use crate::{Error, Result};

/// One grid point of the complexity pipeline.
#[derive(Debug, Clone, Copy)]
pub struct ComplexityRecord {
    pub time: f64,
    /// H_O(p_t) in the configured log base.
    pub entropy: f64,
    /// ‖p_t − p_∞‖₁.
    pub l1_to_equilibrium: f64,
    /// entropy × l1_to_equilibrium.
    pub oecm: f64,
}

/// Bound evaluation at one averaging horizon T.
#[derive(Debug, Clone, Copy)]
pub struct BoundReport {
    pub t: f64,
    pub mean_oecm: f64,
    pub oecm_of_mean: f64,
    pub theorem1_bound: f64,
    /// The f → 1 limit of the bound: (log r / 2)·√(r/d_eff).
    pub asymptotic_bound: f64,
    pub epsilon_used: f64,
}

/// −Σ p_l log_base(p_l), with 0·log 0 = 0.
pub fn shannon_entropy(p: &ProbabilityVector, base: f64) -> Result<f64> {
    if !(base > 1.0) {
        return Err(Error::domain(format!("log base must exceed 1, got {base}")));
    }
    let ln_base = base.ln();
    let h: f64 = p
        .probs()
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.ln() / ln_base)
        .sum();
    // Roundoff can leave a tiny negative residue at a near-delta vector.
    Ok(h.max(0.0))
}

/// Σ|p_l − q_l|.
pub fn l1_distance(p: &ProbabilityVector, q: &ProbabilityVector) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    Ok(p.probs()
        .iter()
        .zip(q.probs())
        .map(|(a, b)| (a - b).abs())
        .sum())
}

/// √Σ(p_l − q_l)².
pub fn l2_distance(p: &ProbabilityVector, q: &ProbabilityVector) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    Ok(p.probs()
        .iter()
        .zip(q.probs())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// H(p)·Σ(p_l − 1/r)²: the disequilibrium here is measured against the
/// uniform distribution, so the value vanishes at both extremes.
pub fn classical_complexity(p: &ProbabilityVector, base: f64) -> Result<f64> {
    let h = shannon_entropy(p, base)?;
    let uniform = 1.0 / p.len() as f64;
    let d: f64 = p
        .probs()
        .iter()
        .map(|&x| (x - uniform) * (x - uniform))
        .sum();
    Ok(h * d)
}

/// C(p) = H_O(p)·‖p − p_∞‖₁.
pub fn oecm(p: &ProbabilityVector, p_inf: &ProbabilityVector, base: f64) -> Result<f64> {
    Ok(shannon_entropy(p, base)? * l1_distance(p, p_inf)?)
}

/// Per-grid-point records for a probability series against a fixed
/// equilibrium distribution.
pub fn complexity_records(
    times: &[f64],
    series: &[ProbabilityVector],
    p_inf: &ProbabilityVector,
    base: f64,
) -> Result<Vec<ComplexityRecord>> {
    if times.len() != series.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            got: series.len(),
        });
    }
    times
        .iter()
        .zip(series)
        .map(|(&time, p)| {
            let entropy = shannon_entropy(p, base)?;
            let l1 = l1_distance(p, p_inf)?;
            Ok(ComplexityRecord {
                time,
                entropy,
                l1_to_equilibrium: l1,
                oecm: entropy * l1,
            })
        })
        .collect()
}

/// ⟨C(p_t)⟩_T at every grid point: running trapezoidal average of the
/// instantaneous complexity.
pub fn mean_oecm_series(records: &[ComplexityRecord], grid: &TimeGrid) -> Result<Vec<f64>> {
    if records.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: records.len(),
        });
    }
    let values: Vec<f64> = records.iter().map(|r| r.oecm).collect();
    Ok(running_trapezoid_average(grid.times(), &values))
}

/// C(⟨p_t⟩_T) at every grid point: the functional applied to the running
/// vector-valued average of the distribution itself.
pub fn oecm_of_mean_series(
    series: &[ProbabilityVector],
    p_inf: &ProbabilityVector,
    grid: &TimeGrid,
    base: f64,
) -> Result<Vec<f64>> {
    if series.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: series.len(),
        });
    }
    let rows: Vec<Vec<f64>> = series.iter().map(|p| p.probs().to_vec()).collect();
    let averaged = running_trapezoid_average_vectors(grid.times(), &rows);
    averaged
        .into_iter()
        .map(|row| oecm(&ProbabilityVector::new(row)?, p_inf, base))
        .collect()
}

/// C(⟨p_t⟩_T) at a single horizon via the closed-form kernel average —
/// no grid discretization error.
pub fn oecm_of_exact_mean(
    state: &EnergyBasisState,
    obs: &ObservableDecomposition,
    p_inf: &ProbabilityVector,
    t: f64,
    base: f64,
) -> Result<f64> {
    let averaged = exact_time_averaged_probabilities(state, obs, t)?;
    oecm(&averaged, p_inf, base)
}

/// (log_base r / 2)·√(r·f/d_eff). With f = 1 this is the asymptotic
/// large-T form of the bound.
pub fn theorem1_bound(r: usize, d_eff: f64, f: f64, base: f64) -> Result<f64> {
    if r < 1 {
        return Err(Error::domain("outcome count must be at least 1"));
    }
    if !(d_eff >= 1.0) {
        return Err(Error::domain(format!(
            "effective dimension must be at least 1, got {d_eff}"
        )));
    }
    if !(f > 0.0) {
        return Err(Error::domain(format!(
            "spectral factor must be positive, got {f}"
        )));
    }
    if !(base > 1.0) {
        return Err(Error::domain(format!("log base must exceed 1, got {base}")));
    }
    let log_r = (r as f64).ln() / base.ln();
    Ok(log_r / 2.0 * (r as f64 * f / d_eff).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pv(xs: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(xs.to_vec()).unwrap()
    }

    #[test]
    fn entropy_of_delta_is_zero() {
        let p = ProbabilityVector::delta(7, 3).unwrap();
        assert_eq!(shannon_entropy(&p, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn entropy_of_uniform_in_base_r_is_one() {
        for r in [2usize, 5, 11] {
            let p = pv(&vec![1.0 / r as f64; r]);
            assert_abs_diff_eq!(
                shannon_entropy(&p, r as f64).unwrap(),
                1.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn entropy_half_half_base_two() {
        let p = pv(&[0.5, 0.5, 0.0]);
        assert_abs_diff_eq!(shannon_entropy(&p, 2.0).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn entropy_stays_within_bounds() {
        let p = pv(&[0.7, 0.2, 0.05, 0.05]);
        let h = shannon_entropy(&p, 2.0).unwrap();
        assert!(h >= 0.0 && h <= 2.0);
    }

    #[test]
    fn entropy_rejects_bad_base() {
        let p = pv(&[0.5, 0.5]);
        assert!(shannon_entropy(&p, 1.0).is_err());
        assert!(shannon_entropy(&p, 0.5).is_err());
    }

    #[test]
    fn l1_examples() {
        let p = pv(&[0.6, 0.4]);
        let q = pv(&[0.5, 0.5]);
        assert_abs_diff_eq!(l1_distance(&p, &q).unwrap(), 0.2, epsilon = 1e-12);
        assert_eq!(l1_distance(&p, &p).unwrap(), 0.0);
        let a = ProbabilityVector::delta(3, 0).unwrap();
        let b = ProbabilityVector::delta(3, 2).unwrap();
        assert_abs_diff_eq!(l1_distance(&a, &b).unwrap(), 2.0, epsilon = 1e-15);
        assert!(l1_distance(&p, &a).is_err());
    }

    #[test]
    fn l2_is_below_l1() {
        let p = pv(&[0.6, 0.3, 0.1]);
        let q = pv(&[0.2, 0.5, 0.3]);
        let l1 = l1_distance(&p, &q).unwrap();
        let l2 = l2_distance(&p, &q).unwrap();
        assert!(l2 <= l1 + 1e-15);
        assert!(l2 > 0.0);
    }

    #[test]
    fn classical_complexity_vanishes_at_extremes() {
        let uniform = pv(&vec![0.25; 4]);
        assert_abs_diff_eq!(
            classical_complexity(&uniform, 2.0).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        let delta = ProbabilityVector::delta(4, 1).unwrap();
        assert_eq!(classical_complexity(&delta, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn classical_complexity_arithmetic_oracle() {
        // H(3/4, 1/4) base 2 = 2 − (3/4)log₂3; D = 2·(1/4)².
        let p = pv(&[0.75, 0.25]);
        let h = 2.0 - 0.75 * 3.0f64.log2();
        let expected = h * 0.125;
        assert_abs_diff_eq!(
            classical_complexity(&p, 2.0).unwrap(),
            expected,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(expected, 0.101_41, epsilon = 5e-6);
    }

    #[test]
    fn oecm_zero_cases() {
        let delta = ProbabilityVector::delta(3, 0).unwrap();
        let q = pv(&[0.2, 0.3, 0.5]);
        assert_eq!(oecm(&delta, &q, 2.0).unwrap(), 0.0);
        assert_eq!(oecm(&q, &q, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn oecm_is_product_of_factors() {
        let p = pv(&[0.6, 0.4]);
        let q = pv(&[0.5, 0.5]);
        let expected = shannon_entropy(&p, 2.0).unwrap() * 0.2;
        assert_abs_diff_eq!(oecm(&p, &q, 2.0).unwrap(), expected, epsilon = 1e-14);
    }

    #[test]
    fn mean_series_of_constant_is_constant() {
        let grid = TimeGrid::uniform(0.5, 10.0).unwrap();
        let p = pv(&[0.6, 0.4]);
        let q = pv(&[0.5, 0.5]);
        let c = oecm(&p, &q, 2.0).unwrap();
        let records = complexity_records(
            grid.times(),
            &vec![p.clone(); grid.len()],
            &q,
            2.0,
        )
        .unwrap();
        for v in mean_oecm_series(&records, &grid).unwrap() {
            assert_abs_diff_eq!(v, c, epsilon = 1e-12);
        }
    }

    #[test]
    fn mean_series_of_zero_is_zero() {
        let grid = TimeGrid::uniform(0.5, 5.0).unwrap();
        let q = pv(&[0.5, 0.5]);
        let records =
            complexity_records(grid.times(), &vec![q.clone(); grid.len()], &q, 2.0).unwrap();
        for v in mean_oecm_series(&records, &grid).unwrap() {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn oecm_of_mean_series_zero_at_origin_and_for_constant() {
        let grid = TimeGrid::uniform(0.5, 5.0).unwrap();
        let delta = ProbabilityVector::delta(2, 0).unwrap();
        let q = pv(&[0.5, 0.5]);
        // constant series equal to p_inf → identically zero
        let series = vec![q.clone(); grid.len()];
        for v in oecm_of_mean_series(&series, &q, &grid, 2.0).unwrap() {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-14);
        }
        // delta at t=0: the T=0 entry applies the functional to p_0 itself
        let mut series = vec![q; grid.len()];
        series[0] = delta;
        let out = oecm_of_mean_series(&series, &pv(&[0.5, 0.5]), &grid, 2.0).unwrap();
        assert_eq!(out[0], 0.0);
    }

    #[test]
    fn theorem1_bound_oracle_values() {
        assert_eq!(theorem1_bound(1, 5.0, 1.0, 2.0).unwrap(), 0.0);
        let b = theorem1_bound(11, 2.95, 1.0, std::f64::consts::E).unwrap();
        assert_abs_diff_eq!(b, 11f64.ln() / 2.0 * (11.0 / 2.95f64).sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(b, 2.3156, epsilon = 5e-4);
        let b = theorem1_bound(11, 93.74, 1.0, std::f64::consts::E).unwrap();
        assert_abs_diff_eq!(b, 0.4107, epsilon = 5e-4);
    }

    #[test]
    fn theorem1_bound_rejects_invalid_inputs() {
        assert!(theorem1_bound(0, 1.0, 1.0, 2.0).is_err());
        assert!(theorem1_bound(3, 0.5, 1.0, 2.0).is_err());
        assert!(theorem1_bound(3, 1.0, 0.0, 2.0).is_err());
        assert!(theorem1_bound(3, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn base_covariance_rescales_everything_together() {
        // Switching base multiplies entropy, the complexity, and the
        // bound by the same ln(b1)/ln(b2) factor.
        let p = pv(&[0.5, 0.3, 0.2]);
        let q = pv(&[0.4, 0.4, 0.2]);
        for (b1, b2) in [(std::f64::consts::E, 2.0), (2.0, 3.0), (3.0, 11.0f64)] {
            let scale = b2.ln() / b1.ln();
            assert_abs_diff_eq!(
                shannon_entropy(&p, b1).unwrap(),
                shannon_entropy(&p, b2).unwrap() * scale,
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(
                oecm(&p, &q, b1).unwrap(),
                oecm(&p, &q, b2).unwrap() * scale,
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(
                theorem1_bound(3, 1.7, 2.0, b1).unwrap(),
                theorem1_bound(3, 1.7, 2.0, b2).unwrap() * scale,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn cauchy_schwarz_on_series() {
        // ⟨H·‖Δ‖₁⟩ ≤ √(⟨H²⟩·⟨‖Δ‖₁²⟩) for the trapezoidal measure.
        let grid = TimeGrid::uniform(0.2, 8.0).unwrap();
        let q = pv(&[0.5, 0.5]);
        let series: Vec<ProbabilityVector> = grid
            .times()
            .iter()
            .map(|&t| {
                let x = 0.5 + 0.45 * (1.3 * t).sin();
                pv(&[x, 1.0 - x])
            })
            .collect();
        let records = complexity_records(grid.times(), &series, &q, 2.0).unwrap();
        let h2: Vec<f64> = records.iter().map(|r| r.entropy * r.entropy).collect();
        let d2: Vec<f64> = records
            .iter()
            .map(|r| r.l1_to_equilibrium * r.l1_to_equilibrium)
            .collect();
        let mean_c = mean_oecm_series(&records, &grid).unwrap();
        let mean_h2 = running_trapezoid_average(grid.times(), &h2);
        let mean_d2 = running_trapezoid_average(grid.times(), &d2);
        for k in 0..grid.len() {
            assert!(mean_c[k] <= (mean_h2[k] * mean_d2[k]).sqrt() + 1e-12);
        }
    }
}
