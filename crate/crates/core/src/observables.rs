//! Observable spectral decompositions, outcome probability vectors, and
//! expectation values.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dynamics::EquilibriumState;
use crate::hamiltonian::diagonalize;
use crate::hilbert::{OperatorMatrix, PureState};
use crate::{Error, Result};

/// Entries this far below zero are treated as round-off and clamped.
pub const PROB_CLAMP_TOL: f64 = 1e-12;
/// Probability vectors must sum to 1 within this tolerance.
pub const PROB_SUM_TOL: f64 = 1e-10;
/// Sums further off than this are bugs, not round-off.
const PROB_SUM_HARD_TOL: f64 = 1e-6;

/// Length-r nonnegative vector summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    probs: Vec<f64>,
}

impl ProbabilityVector {
    /// Clamps negative round-off to zero. If the sum then deviates from 1
    /// by more than [`PROB_SUM_TOL`] the vector is renormalized; gross
    /// deviations are rejected rather than papered over.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::domain("probability vector cannot be empty"));
        }
        for p in &mut probs {
            if *p < -PROB_CLAMP_TOL {
                return Err(Error::numerical(format!(
                    "probability entry {p} below clamping tolerance"
                )));
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_HARD_TOL {
            return Err(Error::numerical(format!(
                "probability vector sums to {sum}"
            )));
        }
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            for p in &mut probs {
                *p /= sum;
            }
        }
        Ok(ProbabilityVector { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Delta distribution on outcome index `k`.
    pub fn delta(r: usize, k: usize) -> Result<Self> {
        if k >= r {
            return Err(Error::domain(format!("delta index {k} out of range {r}")));
        }
        let mut probs = vec![0.0; r];
        probs[k] = 1.0;
        Ok(ProbabilityVector { probs })
    }
}

/// Projector blocks of an observable decomposition.
#[derive(Debug, Clone)]
pub enum Projectors {
    /// Diagonal in the computational basis: outcome l spans the listed
    /// basis indices. Projector application is an index-mask sum.
    BasisMasks(Vec<Vec<usize>>),
    /// General case: orthonormal column block per outcome.
    Blocks(Vec<DMatrix<Complex64>>),
}

/// O = Σ_l o_l P_l with r = rank, outcomes strictly increasing.
#[derive(Debug, Clone)]
pub struct ObservableDecomposition {
    outcomes: Vec<f64>,
    projectors: Projectors,
    dim: usize,
}

impl ObservableDecomposition {
    pub fn outcomes(&self) -> &[f64] {
        &self.outcomes
    }

    pub fn projectors(&self) -> &Projectors {
        &self.projectors
    }

    /// Rank r: the number of distinct outcomes.
    pub fn rank(&self) -> usize {
        self.outcomes.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Operator norm max |o_l|.
    pub fn operator_norm(&self) -> f64 {
        self.outcomes.iter().map(|o| o.abs()).fold(0.0, f64::max)
    }

    /// Rank of the projector for outcome l.
    pub fn block_rank(&self, l: usize) -> usize {
        match &self.projectors {
            Projectors::BasisMasks(masks) => masks[l].len(),
            Projectors::Blocks(blocks) => blocks[l].ncols(),
        }
    }

    /// Dense reconstruction Σ o_l P_l (test and cross-check path).
    pub fn as_matrix(&self) -> OperatorMatrix {
        let d = self.dim;
        let mut m = DMatrix::<Complex64>::zeros(d, d);
        match &self.projectors {
            Projectors::BasisMasks(masks) => {
                for (l, mask) in masks.iter().enumerate() {
                    for &b in mask {
                        m[(b, b)] += Complex64::from(self.outcomes[l]);
                    }
                }
            }
            Projectors::Blocks(blocks) => {
                for (l, block) in blocks.iter().enumerate() {
                    m += block * block.adjoint() * Complex64::from(self.outcomes[l]);
                }
            }
        }
        OperatorMatrix::new(m).expect("reconstruction is square")
    }
}

/// Magnetization per spin (1/N)Σσᵢᶻ, diagonal in the computational
/// basis. Outcome (N−2k)/N groups all basis states with k down spins;
/// r = N+1 and the operator norm is 1.
pub fn magnetization_observable(n_sites: usize) -> Result<ObservableDecomposition> {
    if n_sites < 1 {
        return Err(Error::domain("magnetization requires n_sites >= 1"));
    }
    let d = 1usize << n_sites;
    // outcomes ascending: l = 0 is all-down (k = N), l = N is all-up.
    let outcomes: Vec<f64> = (0..=n_sites)
        .map(|l| (2.0 * l as f64 - n_sites as f64) / n_sites as f64)
        .collect();
    let mut masks: Vec<Vec<usize>> = vec![Vec::new(); n_sites + 1];
    for b in 0..d {
        let down = b.count_ones() as usize;
        masks[n_sites - down].push(b);
    }
    Ok(ObservableDecomposition {
        outcomes,
        projectors: Projectors::BasisMasks(masks),
        dim: d,
    })
}

/// General spectral decomposition of a Hermitian observable; outcomes are
/// grouped exactly as [`diagonalize`] groups energies.
pub fn decompose_observable(
    o: &OperatorMatrix,
    grouping_tol: f64,
) -> Result<ObservableDecomposition> {
    if !o.is_hermitian() {
        return Err(Error::domain(
            "decompose_observable requires a Hermitian operator",
        ));
    }
    let decomp = diagonalize(o, grouping_tol)?;
    let d = decomp.dim();
    let mut blocks = Vec::with_capacity(decomp.n_levels());
    for level in 0..decomp.n_levels() {
        let cols = decomp.level_columns(level);
        let mut block = DMatrix::<Complex64>::zeros(d, cols.len());
        for (dst, src) in cols.enumerate() {
            block.set_column(dst, &decomp.vectors().column(src));
        }
        blocks.push(block);
    }
    Ok(ObservableDecomposition {
        outcomes: decomp.energies().to_vec(),
        projectors: Projectors::Blocks(blocks),
        dim: d,
    })
}

/// p_l = ‖P_l ψ‖².
pub fn outcome_probabilities(
    obs: &ObservableDecomposition,
    psi: &PureState,
) -> Result<ProbabilityVector> {
    if psi.dim() != obs.dim() {
        return Err(Error::DimensionMismatch {
            expected: obs.dim(),
            got: psi.dim(),
        });
    }
    let amps = psi.amplitudes();
    let probs = match obs.projectors() {
        Projectors::BasisMasks(masks) => masks
            .iter()
            .map(|mask| mask.iter().map(|&b| amps[b].norm_sqr()).sum())
            .collect(),
        Projectors::Blocks(blocks) => blocks
            .iter()
            .map(|block| (block.adjoint() * amps).norm_squared())
            .collect(),
    };
    ProbabilityVector::new(probs)
}

/// p_∞,l = tr(P_l ω), evaluated in the computational basis via the
/// per-level components of ω.
pub fn equilibrium_probabilities(
    obs: &ObservableDecomposition,
    omega: &EquilibriumState,
) -> Result<ProbabilityVector> {
    if omega.dim() != obs.dim() {
        return Err(Error::DimensionMismatch {
            expected: obs.dim(),
            got: omega.dim(),
        });
    }
    let mut probs = vec![0.0f64; obs.rank()];
    // ω = Σᵢ |φᵢ⟩⟨φᵢ| with φᵢ = Πᵢψ₀, so tr(P_l ω) = Σᵢ ‖P_l φᵢ‖².
    for phi in omega.level_components() {
        match obs.projectors() {
            Projectors::BasisMasks(masks) => {
                for (l, mask) in masks.iter().enumerate() {
                    probs[l] += mask.iter().map(|&b| phi[b].norm_sqr()).sum::<f64>();
                }
            }
            Projectors::Blocks(blocks) => {
                for (l, block) in blocks.iter().enumerate() {
                    probs[l] += (block.adjoint() * &phi).norm_squared();
                }
            }
        }
    }
    ProbabilityVector::new(probs)
}

/// Σ_l o_l p_l.
pub fn expectation(obs: &ObservableDecomposition, p: &ProbabilityVector) -> Result<f64> {
    if p.len() != obs.rank() {
        return Err(Error::DimensionMismatch {
            expected: obs.rank(),
            got: p.len(),
        });
    }
    Ok(obs
        .outcomes()
        .iter()
        .zip(p.probs())
        .map(|(o, p)| o * p)
        .sum())
}

/// Fast per-column outcome probabilities from split real/imaginary
/// amplitude blocks (one column per time sample).
pub(crate) fn mask_probabilities_split(
    masks: &[Vec<usize>],
    re: &DMatrix<f64>,
    im: &DMatrix<f64>,
    col: usize,
) -> Vec<f64> {
    masks
        .iter()
        .map(|mask| {
            mask.iter()
                .map(|&b| re[(b, col)] * re[(b, col)] + im[(b, col)] * im[(b, col)])
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::dephase;
    use crate::hamiltonian::{build_ising, diagonalize, SpinChainSpec, DEFAULT_GROUPING_TOL};
    use crate::hilbert::{embed_single_site, pauli, product_state, Axis, ProductPattern};
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    #[test]
    fn magnetization_n2() {
        let obs = magnetization_observable(2).unwrap();
        assert_eq!(obs.outcomes(), &[-1.0, 0.0, 1.0]);
        assert_eq!(obs.block_rank(0), 1);
        assert_eq!(obs.block_rank(1), 2);
        assert_eq!(obs.block_rank(2), 1);
        assert_eq!(obs.operator_norm(), 1.0);
    }

    #[test]
    fn magnetization_n10_ranks_are_binomial() {
        let obs = magnetization_observable(10).unwrap();
        assert_eq!(obs.rank(), 11);
        let binomial = [1usize, 10, 45, 120, 210, 252, 210, 120, 45, 10, 1];
        for (l, &expected) in binomial.iter().enumerate() {
            assert_eq!(obs.block_rank(l), expected);
        }
        assert_eq!(obs.operator_norm(), 1.0);
    }

    #[test]
    fn paramagnetic_state_has_zero_magnetization() {
        let obs = magnetization_observable(4).unwrap();
        let pm = product_state(ProductPattern::Pm, 4).unwrap();
        let p = outcome_probabilities(&obs, &pm).unwrap();
        // outcome 0 is at index N/2
        assert_eq!(p.probs()[2], 1.0);
        assert_abs_diff_eq!(expectation(&obs, &p).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn decompose_sigma_z_tensor_identity() {
        let op = embed_single_site(&pauli(Axis::Z), 1, 2).unwrap();
        let obs = decompose_observable(&op, 1e-10).unwrap();
        assert_eq!(obs.outcomes(), &[-1.0, 1.0]);
        assert_eq!(obs.block_rank(0), 2);
        assert_eq!(obs.block_rank(1), 2);
    }

    #[test]
    fn decompose_identity_has_rank_one() {
        let op = OperatorMatrix::from_real(DMatrix::identity(4, 4)).unwrap();
        let obs = decompose_observable(&op, 1e-10).unwrap();
        assert_eq!(obs.rank(), 1);
        assert_eq!(obs.block_rank(0), 4);
    }

    #[test]
    fn dense_path_matches_mask_path_n3() {
        let masks = magnetization_observable(3).unwrap();
        let dense = decompose_observable(&masks.as_matrix(), 1e-10).unwrap();
        assert_eq!(dense.rank(), masks.rank());
        for l in 0..masks.rank() {
            assert_abs_diff_eq!(dense.outcomes()[l], masks.outcomes()[l], epsilon = 1e-12);
            assert_eq!(dense.block_rank(l), masks.block_rank(l));
        }
        // Reconstructions agree entrywise.
        let worst = (dense.as_matrix().entries() - masks.as_matrix().entries())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-9);
    }

    #[test]
    fn projector_blocks_are_idempotent_and_orthogonal() {
        let obs = decompose_observable(
            &magnetization_observable(3).unwrap().as_matrix(),
            1e-10,
        )
        .unwrap();
        let Projectors::Blocks(blocks) = obs.projectors() else {
            panic!("expected dense blocks");
        };
        for (a, block_a) in blocks.iter().enumerate() {
            let pa = block_a * block_a.adjoint();
            let idem = (&pa * &pa - &pa).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(idem < 1e-10);
            for block_b in blocks.iter().skip(a + 1) {
                let cross = (block_a.adjoint() * block_b)
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max);
                assert!(cross < 1e-10);
            }
        }
        let total: usize = (0..obs.rank()).map(|l| obs.block_rank(l)).sum();
        assert_eq!(total, obs.dim());
    }

    #[test]
    fn delta_distributions_for_product_states() {
        let obs = magnetization_observable(10).unwrap();
        let up = product_state(ProductPattern::Up, 10).unwrap();
        let p = outcome_probabilities(&obs, &up).unwrap();
        assert_eq!(p.probs()[10], 1.0); // outcome +1
        let pm = product_state(ProductPattern::Pm, 10).unwrap();
        let p = outcome_probabilities(&obs, &pm).unwrap();
        assert_eq!(p.probs()[5], 1.0); // outcome 0
    }

    #[test]
    fn expectation_examples() {
        let obs = magnetization_observable(10).unwrap();
        for (pattern, expected) in [
            (ProductPattern::Up, 1.0),
            (ProductPattern::Dw, -1.0),
            (ProductPattern::Pm, 0.0),
        ] {
            let psi = product_state(pattern, 10).unwrap();
            let p = outcome_probabilities(&obs, &psi).unwrap();
            assert_abs_diff_eq!(expectation(&obs, &p).unwrap(), expected, epsilon = 1e-15);
        }
        let uniform = ProbabilityVector::new(vec![1.0 / 3.0; 3]).unwrap();
        let obs2 = magnetization_observable(2).unwrap();
        assert_abs_diff_eq!(expectation(&obs2, &uniform).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn equilibrium_of_pure_eigenprojector_matches_outcomes() {
        let spec = SpinChainSpec::non_integrable(3);
        let decomp = Arc::new(
            diagonalize(&build_ising(&spec).unwrap(), DEFAULT_GROUPING_TOL).unwrap(),
        );
        let obs = magnetization_observable(3).unwrap();
        let eigvec = PureState::new(decomp.vectors().column(0)).unwrap();
        let omega = dephase(&decomp, &eigvec).unwrap();
        let p_inf = equilibrium_probabilities(&obs, &omega).unwrap();
        let p_direct = outcome_probabilities(&obs, &eigvec).unwrap();
        for (a, b) in p_inf.probs().iter().zip(p_direct.probs()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn rank_one_observable_equilibrium_is_trivial() {
        let spec = SpinChainSpec::non_integrable(2);
        let decomp = Arc::new(
            diagonalize(&build_ising(&spec).unwrap(), DEFAULT_GROUPING_TOL).unwrap(),
        );
        let obs = decompose_observable(
            &OperatorMatrix::from_real(DMatrix::identity(4, 4)).unwrap(),
            1e-10,
        )
        .unwrap();
        let psi = product_state(ProductPattern::Up, 2).unwrap();
        let omega = dephase(&decomp, &psi).unwrap();
        let p = equilibrium_probabilities(&obs, &omega).unwrap();
        assert_abs_diff_eq!(p.probs()[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn probability_vector_validation() {
        assert!(ProbabilityVector::new(vec![]).is_err());
        assert!(ProbabilityVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbabilityVector::new(vec![-1e-3, 1.0]).is_err());
        // Small negative round-off is clamped.
        let p = ProbabilityVector::new(vec![-1e-13, 1.0]).unwrap();
        assert_eq!(p.probs()[0], 0.0);
        // mismatched lengths rejected by expectation
        let obs = magnetization_observable(2).unwrap();
        let p = ProbabilityVector::new(vec![0.5, 0.5]).unwrap();
        assert!(expectation(&obs, &p).is_err());
    }
}
