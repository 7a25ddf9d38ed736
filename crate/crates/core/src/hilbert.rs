//! Computational basis for chains of spin-1/2 sites.
//!
//! Basis ordering convention, which every serialized artifact depends on:
//! site 1 is the most significant bit of the computational-basis index,
//! and spin-up maps to bit 0. So for two sites the basis order is
//! |↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

/// Tolerance for unit-norm and Hermiticity checks.
pub const NORM_TOL: f64 = 1e-12;

/// One of the three Pauli axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// The three named product initial states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductPattern {
    /// All spins up.
    Up,
    /// All spins down.
    Dw,
    /// Alternating, up at site 1.
    Pm,
}

impl ProductPattern {
    pub fn label(&self) -> &'static str {
        match self {
            ProductPattern::Up => "up",
            ProductPattern::Dw => "dw",
            ProductPattern::Pm => "pm",
        }
    }
}

/// Dense operator on the chain Hilbert space.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    entries: DMatrix<Complex64>,
    hermitian: bool,
}

impl OperatorMatrix {
    /// Wraps a square matrix, detecting Hermiticity to [`NORM_TOL`].
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::domain(format!(
                "operator must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let hermitian = hermiticity_defect(&entries) < NORM_TOL;
        Ok(OperatorMatrix { entries, hermitian })
    }

    pub fn from_real(entries: DMatrix<f64>) -> Result<Self> {
        Self::new(entries.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// True when every imaginary part is negligible.
    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|z| z.im.abs() < NORM_TOL)
    }
}

fn hermiticity_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Unit-norm pure state of an `n_sites` chain.
#[derive(Debug, Clone)]
pub struct PureState {
    amplitudes: DVector<Complex64>,
    n_sites: usize,
}

impl PureState {
    /// Validates the dimension (a power of two) and the unit norm.
    ///
    /// `n_sites` may be zero for the trivial one-dimensional space; that
    /// case only arises for Haar samples of dimension 1.
    pub fn new(amplitudes: DVector<Complex64>) -> Result<Self> {
        let d = amplitudes.len();
        if d == 0 || d & (d - 1) != 0 {
            return Err(Error::domain(format!(
                "state dimension {d} is not a power of two"
            )));
        }
        let n_sites = d.trailing_zeros() as usize;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::domain(format!(
                "state norm {norm} deviates from 1 by more than {NORM_TOL}"
            )));
        }
        Ok(PureState { amplitudes, n_sites })
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }
}

/// The 2x2 Pauli matrix for `axis`.
pub fn pauli(axis: Axis) -> OperatorMatrix {
    let (a, b, c, d) = match axis {
        Axis::X => (
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ),
        Axis::Y => (
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, 0.0),
        ),
        Axis::Z => (
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(-1.0, 0.0),
        ),
    };
    OperatorMatrix::new(DMatrix::from_row_slice(2, 2, &[a, b, c, d]))
        .expect("2x2 Pauli is square")
}

/// Embeds a single-site operator as I ⊗ … ⊗ op ⊗ … ⊗ I with `op` at
/// 1-based position `site` (site 1 = leftmost tensor factor).
pub fn embed_single_site(
    op: &OperatorMatrix,
    site: usize,
    n_sites: usize,
) -> Result<OperatorMatrix> {
    if op.dim() != 2 {
        return Err(Error::domain(format!(
            "single-site operator must be 2x2, got {0}x{0}",
            op.dim()
        )));
    }
    if site < 1 || site > n_sites {
        return Err(Error::domain(format!(
            "site {site} out of range 1..={n_sites}"
        )));
    }
    let left = 1usize << (site - 1);
    let right = 1usize << (n_sites - site);
    let eye_left = DMatrix::<Complex64>::identity(left, left);
    let eye_right = DMatrix::<Complex64>::identity(right, right);
    let embedded = eye_left.kronecker(op.entries()).kronecker(&eye_right);
    OperatorMatrix::new(embedded)
}

/// Basis index of the given product pattern under the site-1-MSB,
/// up-is-0 convention.
pub fn product_state_index(pattern: ProductPattern, n_sites: usize) -> usize {
    match pattern {
        ProductPattern::Up => 0,
        ProductPattern::Dw => (1usize << n_sites) - 1,
        ProductPattern::Pm => {
            // Down at even sites; site i occupies bit n_sites - i.
            let mut idx = 0usize;
            for site in (2..=n_sites).step_by(2) {
                idx |= 1usize << (n_sites - site);
            }
            idx
        }
    }
}

/// Computational-basis product state for the given pattern.
pub fn product_state(pattern: ProductPattern, n_sites: usize) -> Result<PureState> {
    if n_sites < 1 {
        return Err(Error::domain("product_state requires n_sites >= 1"));
    }
    let d = 1usize << n_sites;
    let mut amplitudes = DVector::<Complex64>::zeros(d);
    amplitudes[product_state_index(pattern, n_sites)] = Complex64::new(1.0, 0.0);
    PureState::new(amplitudes)
}
