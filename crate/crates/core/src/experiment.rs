//! Configuration-driven batch runner: wires the chain, spectrum,
//! dynamics, and complexity layers together, evaluates every bound
//! check, and emits the CSV datasets plus a machine-readable summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use crate::complexity::{
    complexity_records, l1_distance, mean_oecm_series, oecm, oecm_of_mean_series, shannon_entropy,
    theorem1_bound,
};
use crate::dynamics::{
    dephase, prepare, running_trapezoid_average, running_trapezoid_average_vectors, TimeGrid,
};
use crate::hamiltonian::{
    build_ising, diagonalize, SpectralStatistics, SpinChainSpec, DEFAULT_GROUPING_TOL,
};
use crate::hilbert::{product_state, ProductPattern};
use crate::observables::{
    equilibrium_probabilities, expectation, magnetization_observable, ProbabilityVector,
};
use crate::typicality::{deviation_experiment, DeviationParams, TypicalityReport};
use crate::{Error, Result};

/// Slack for the exact inequality suites.
const BOUND_SLACK: f64 = 1e-12;
/// Trapezoidal error budget for the variance inequality.
const VARIANCE_SLACK: f64 = 1e-8;
/// Number of candidate points for the automatic ε search.
const EPSILON_GRID_POINTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonChoice {
    /// Minimize the bound over a logarithmic ε grid at the final horizon.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaseChoice {
    /// log base r, normalizing the maximally mixed distribution to 1.
    Rank,
    Fixed(f64),
}

/// Sub-configuration of the Haar deviation experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypicalityConfig {
    pub n_sites: usize,
    pub t: f64,
    pub epsilon_dev: f64,
    pub n_samples: usize,
}

impl Default for TypicalityConfig {
    fn default() -> Self {
        TypicalityConfig {
            n_sites: 6,
            t: 500.0,
            epsilon_dev: 0.05,
            n_samples: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_sites: usize,
    pub g: f64,
    pub h: f64,
    pub j: f64,
    pub initial_states: Vec<ProductPattern>,
    pub t_max: f64,
    pub dt: f64,
    pub epsilon: EpsilonChoice,
    pub entropy_base: BaseChoice,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub typicality: Option<TypicalityConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let spec = SpinChainSpec::non_integrable(10);
        ExperimentConfig {
            n_sites: spec.n_sites,
            g: spec.g,
            h: spec.h,
            j: spec.j,
            initial_states: vec![ProductPattern::Up, ProductPattern::Dw, ProductPattern::Pm],
            t_max: 1000.0,
            dt: 0.05,
            epsilon: EpsilonChoice::Auto,
            entropy_base: BaseChoice::Rank,
            output_dir: PathBuf::from("out"),
            seed: 7,
            typicality: None,
        }
    }
}

impl ExperimentConfig {
    /// Parses the flat `key = value` format with bracketed section
    /// headers; unknown keys and malformed values are collected and
    /// reported together.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut config = ExperimentConfig::default();
        let mut typ = TypicalityConfig::default();
        let mut typ_seen = false;
        let mut section = String::new();
        let mut errors = Vec::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].trim().to_ascii_lowercase();
                if section != "run" && section != "typicality" {
                    errors.push(format!("line {}: unknown section [{section}]", lineno + 1));
                }
                if section == "typicality" {
                    typ_seen = true;
                }
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                errors.push(format!("line {}: expected key = value", lineno + 1));
                continue;
            };
            let key = key.trim().to_ascii_lowercase();
            let value = value.trim();
            let mut bad =
                |what: &str| errors.push(format!("line {}: invalid {what}: {value}", lineno + 1));

            match (section.as_str(), key.as_str()) {
                ("" | "run", "n_sites") => match value.parse() {
                    Ok(v) => config.n_sites = v,
                    Err(_) => bad("n_sites"),
                },
                ("" | "run", "g") => match value.parse() {
                    Ok(v) => config.g = v,
                    Err(_) => bad("g"),
                },
                ("" | "run", "h") => match value.parse() {
                    Ok(v) => config.h = v,
                    Err(_) => bad("h"),
                },
                ("" | "run", "j") => match value.parse() {
                    Ok(v) => config.j = v,
                    Err(_) => bad("j"),
                },
                ("" | "run", "states") => match parse_states(value) {
                    Ok(v) => config.initial_states = v,
                    Err(e) => errors.push(format!("line {}: {e}", lineno + 1)),
                },
                ("" | "run", "t_max") => match value.parse() {
                    Ok(v) => config.t_max = v,
                    Err(_) => bad("t_max"),
                },
                ("" | "run", "dt") => match value.parse() {
                    Ok(v) => config.dt = v,
                    Err(_) => bad("dt"),
                },
                ("" | "run", "epsilon") => {
                    if value.eq_ignore_ascii_case("auto") {
                        config.epsilon = EpsilonChoice::Auto;
                    } else {
                        match value.parse() {
                            Ok(v) => config.epsilon = EpsilonChoice::Fixed(v),
                            Err(_) => bad("epsilon"),
                        }
                    }
                }
                ("" | "run", "entropy_base") => {
                    if value.eq_ignore_ascii_case("rank") {
                        config.entropy_base = BaseChoice::Rank;
                    } else {
                        match value.parse() {
                            Ok(v) => config.entropy_base = BaseChoice::Fixed(v),
                            Err(_) => bad("entropy_base"),
                        }
                    }
                }
                ("" | "run", "output_dir") => config.output_dir = PathBuf::from(value),
                ("" | "run", "seed") => match value.parse() {
                    Ok(v) => config.seed = v,
                    Err(_) => bad("seed"),
                },
                ("typicality", "n_sites") => match value.parse() {
                    Ok(v) => typ.n_sites = v,
                    Err(_) => bad("typicality n_sites"),
                },
                ("typicality", "t") => match value.parse() {
                    Ok(v) => typ.t = v,
                    Err(_) => bad("typicality t"),
                },
                ("typicality", "epsilon_dev") => match value.parse() {
                    Ok(v) => typ.epsilon_dev = v,
                    Err(_) => bad("typicality epsilon_dev"),
                },
                ("typicality", "n_samples") => match value.parse() {
                    Ok(v) => typ.n_samples = v,
                    Err(_) => bad("typicality n_samples"),
                },
                (_, k) => errors.push(format!("line {}: unknown key {k}", lineno + 1)),
            }
        }

        if typ_seen {
            config.typicality = Some(typ);
        }
        if errors.is_empty() {
            Ok(config)
        } else {
            Err(Error::InvalidConfig(errors))
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse_str(&std::fs::read_to_string(path)?)
    }

    /// Empty iff [`run`] would accept the configuration.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(2..=12).contains(&self.n_sites) {
            v.push(format!("n_sites must be in 2..=12, got {}", self.n_sites));
        }
        if !self.g.is_finite() || !self.h.is_finite() || !self.j.is_finite() {
            v.push("couplings g, h, j must be finite".into());
        }
        if self.initial_states.is_empty() {
            v.push("states must name at least one initial state".into());
        }
        if !(self.t_max > 0.0) {
            v.push(format!("t_max must be positive, got {}", self.t_max));
        }
        if !(self.dt > 0.0) {
            v.push(format!("dt must be positive, got {}", self.dt));
        }
        if self.dt >= self.t_max && self.t_max > 0.0 && self.dt > 0.0 {
            v.push(format!(
                "dt must be smaller than t_max, got dt={} t_max={}",
                self.dt, self.t_max
            ));
        }
        if let EpsilonChoice::Fixed(e) = self.epsilon {
            if !(e > 0.0) {
                v.push(format!("epsilon must be positive, got {e}"));
            }
        }
        if let BaseChoice::Fixed(b) = self.entropy_base {
            if !(b > 1.0) {
                v.push(format!("entropy_base must exceed 1, got {b}"));
            }
        }
        if let Some(t) = &self.typicality {
            if !(2..=12).contains(&t.n_sites) {
                v.push(format!(
                    "typicality n_sites must be in 2..=12, got {}",
                    t.n_sites
                ));
            }
            if !(t.t > 0.0) {
                v.push(format!("typicality t must be positive, got {}", t.t));
            }
            if !(t.epsilon_dev > 0.0) {
                v.push(format!(
                    "typicality epsilon_dev must be positive, got {}",
                    t.epsilon_dev
                ));
            }
            if t.n_samples < 1 {
                v.push("typicality n_samples must be at least 1".into());
            }
        }
        v
    }
}

fn parse_states(value: &str) -> std::result::Result<Vec<ProductPattern>, String> {
    let mut out = Vec::new();
    for token in value.split(',') {
        match token.trim().to_ascii_lowercase().as_str() {
            "up" => out.push(ProductPattern::Up),
            "dw" => out.push(ProductPattern::Dw),
            "pm" => out.push(ProductPattern::Pm),
            other => return Err(format!("unknown state {other}")),
        }
    }
    Ok(out)
}

/// Per-initial-state scalars reported in the summary.
#[derive(Debug, Clone)]
pub struct StateSummary {
    pub label: &'static str,
    pub d_eff: f64,
    pub mz_initial: f64,
    pub mz_equilibrium: f64,
    pub entropy_equilibrium: f64,
    pub final_mean_mz: f64,
    pub final_mean_entropy: f64,
    pub final_mean_oecm: f64,
    pub final_oecm_of_mean: f64,
    pub final_mean_l1: f64,
    pub final_l1_of_mean: f64,
}

/// Outcome of one full run: scalars, check flags, and timing.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub epsilon_used: f64,
    pub base_used: f64,
    pub rank: usize,
    pub n_levels: usize,
    pub gap_count: usize,
    pub spectral_range: f64,
    pub states: Vec<StateSummary>,
    pub theorem1_mean_ok: bool,
    pub theorem1_avg_ok: bool,
    pub variance_ok: bool,
    pub expectation_bound_ok: bool,
    pub distribution_bound_ok: bool,
    pub entropy_range_ok: bool,
    /// The top-pattern state keeps the largest final entropy gap to its
    /// equilibrium value (only evaluated when all three states run).
    pub nonconvergence_ordering_ok: Option<bool>,
    pub typicality: Option<TypicalityReport>,
    pub wall_seconds: f64,
}

impl RunSummary {
    /// The bound suites that gate the exit code. The qualitative
    /// nonconvergence ordering is reported but not gated on: it is an
    /// empirical feature of the production regime, not an inequality
    /// that must hold for arbitrary configurations.
    pub fn all_checks_pass(&self) -> bool {
        self.theorem1_mean_ok
            && self.theorem1_avg_ok
            && self.variance_ok
            && self.expectation_bound_ok
            && self.distribution_bound_ok
            && self.entropy_range_ok
            && self
                .typicality
                .as_ref()
                .map_or(true, |t| t.markov_ok && t.jensen_ok && t.mean_square_ok)
    }
}

struct StatePipeline {
    label: &'static str,
    d_eff: f64,
    mz_eq: f64,
    h_inf: f64,
    mz: Vec<f64>,
    mz_avg: Vec<f64>,
    entropy: Vec<f64>,
    entropy_avg: Vec<f64>,
    l1_avg: Vec<f64>,
    l1_of_mean: Vec<f64>,
    mean_c: Vec<f64>,
    c_of_mean: Vec<f64>,
    /// ⟨(M_z(t) − tr(Oω))²⟩_T, shared by the variance and expectation
    /// deviation suites.
    sq_dev_avg: Vec<f64>,
}

/// Runs the full pipeline and writes `fig1a.csv` … `fig5b.csv`,
/// `summary.csv`, and (when configured) `typicality.csv` into the output
/// directory. Returns the scalar summary with all check flags.
pub fn run(config: &ExperimentConfig) -> Result<RunSummary> {
    let violations = config.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidConfig(violations));
    }
    let started = Instant::now();
    std::fs::create_dir_all(&config.output_dir)?;

    let spec = SpinChainSpec {
        n_sites: config.n_sites,
        g: config.g,
        h: config.h,
        j: config.j,
    };
    let hamiltonian = build_ising(&spec)?;
    let decomp = Arc::new(diagonalize(&hamiltonian, DEFAULT_GROUPING_TOL)?);
    let stats = SpectralStatistics::from_decomposition(&decomp, DEFAULT_GROUPING_TOL);
    let obs = magnetization_observable(config.n_sites)?;
    let rank = obs.rank();
    let base = match config.entropy_base {
        BaseChoice::Rank => rank as f64,
        BaseChoice::Fixed(b) => b,
    };
    let epsilon = match config.epsilon {
        EpsilonChoice::Fixed(e) => e,
        EpsilonChoice::Auto => auto_epsilon(&stats, config.t_max)?,
    };
    let gap_count = stats.gap_count(epsilon)?;
    let grid = TimeGrid::uniform(config.dt, config.t_max)?;
    let times = grid.times();

    let mut pipelines = Vec::with_capacity(config.initial_states.len());
    for &pattern in &config.initial_states {
        pipelines.push(state_pipeline(pattern, &decomp, &obs, &grid, base)?);
    }

    // Bound suites over every positive grid horizon.
    let mut theorem1_mean_ok = true;
    let mut theorem1_avg_ok = true;
    let mut variance_ok = true;
    let mut expectation_bound_ok = true;
    let mut distribution_bound_ok = true;
    let mut entropy_range_ok = true;
    let entropy_cap = (rank as f64).ln() / base.ln();
    let mut bounds_full: Vec<Vec<f64>> = Vec::with_capacity(pipelines.len());
    let mut bounds_asym: Vec<f64> = Vec::with_capacity(pipelines.len());

    for p in &pipelines {
        let asym = theorem1_bound(rank, p.d_eff, 1.0, base)?;
        bounds_asym.push(asym);
        let mut full = Vec::with_capacity(times.len() - 1);
        for (k, &t) in times.iter().enumerate().skip(1) {
            let f = stats.spectral_factor(epsilon, t)?;
            let b = theorem1_bound(rank, p.d_eff, f, base)?;
            full.push(b);
            theorem1_mean_ok &= p.mean_c[k] <= b + BOUND_SLACK;
            theorem1_avg_ok &= p.c_of_mean[k] <= b + BOUND_SLACK;
            let dev = p.mz_avg[k] - p.mz_eq;
            variance_ok &= dev * dev <= p.sq_dev_avg[k] + VARIANCE_SLACK;
            expectation_bound_ok &= p.sq_dev_avg[k] <= f / p.d_eff + BOUND_SLACK;
            distribution_bound_ok &=
                p.l1_avg[k] <= 0.5 * (rank as f64 * f / p.d_eff).sqrt() + BOUND_SLACK;
        }
        bounds_full.push(full);
        entropy_range_ok &= p
            .entropy
            .iter()
            .all(|&h| (-BOUND_SLACK..=entropy_cap + BOUND_SLACK).contains(&h));
    }

    let nonconvergence_ordering_ok = {
        let find = |pat: ProductPattern| {
            pipelines
                .iter()
                .find(|p| p.label == pat.label())
                .map(|p| (p.entropy_avg.last().unwrap() - p.h_inf).abs())
        };
        match (
            find(ProductPattern::Up),
            find(ProductPattern::Dw),
            find(ProductPattern::Pm),
        ) {
            (Some(up), Some(dw), Some(pm)) => Some(up > dw && up > pm),
            _ => None,
        }
    };

    let typicality = match &config.typicality {
        Some(t) => Some(run_typicality(config, t)?),
        None => None,
    };

    write_figures(config, times, &pipelines, &bounds_full, &bounds_asym)?;
    if let Some(report) = &typicality {
        write_typicality_csv(&config.output_dir.join("typicality.csv"), report)?;
    }

    let states = pipelines
        .iter()
        .map(|p| StateSummary {
            label: p.label,
            d_eff: p.d_eff,
            mz_initial: p.mz[0],
            mz_equilibrium: p.mz_eq,
            entropy_equilibrium: p.h_inf,
            final_mean_mz: *p.mz_avg.last().unwrap(),
            final_mean_entropy: *p.entropy_avg.last().unwrap(),
            final_mean_oecm: *p.mean_c.last().unwrap(),
            final_oecm_of_mean: *p.c_of_mean.last().unwrap(),
            final_mean_l1: *p.l1_avg.last().unwrap(),
            final_l1_of_mean: *p.l1_of_mean.last().unwrap(),
        })
        .collect();

    let summary = RunSummary {
        epsilon_used: epsilon,
        base_used: base,
        rank,
        n_levels: decomp.n_levels(),
        gap_count,
        spectral_range: decomp.spectral_range(),
        states,
        theorem1_mean_ok,
        theorem1_avg_ok,
        variance_ok,
        expectation_bound_ok,
        distribution_bound_ok,
        entropy_range_ok,
        nonconvergence_ordering_ok,
        typicality,
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    write_summary_csv(&config.output_dir.join("summary.csv"), config, &summary)?;
    Ok(summary)
}

/// ε minimizing the bound (equivalently f(ε, T)) at the final horizon,
/// over a logarithmic grid between the smallest distinct gap and the
/// spectral range.
fn auto_epsilon(stats: &SpectralStatistics, t_max: f64) -> Result<f64> {
    let lo = stats
        .min_distinct_gap()
        .ok_or_else(|| Error::domain("spectrum has no gaps; cannot pick epsilon"))?
        .max(f64::MIN_POSITIVE);
    let hi = stats.spectral_range();
    if !(hi > lo) {
        return Ok(lo);
    }
    let ratio: f64 = hi / lo;
    let mut best = (f64::INFINITY, lo);
    for k in 0..EPSILON_GRID_POINTS {
        let frac = k as f64 / (EPSILON_GRID_POINTS - 1) as f64;
        let eps = lo * ratio.powf(frac);
        let f = stats.spectral_factor(eps, t_max)?;
        if f < best.0 {
            best = (f, eps);
        }
    }
    Ok(best.1)
}

fn state_pipeline(
    pattern: ProductPattern,
    decomp: &Arc<crate::hamiltonian::SpectralDecomposition>,
    obs: &crate::observables::ObservableDecomposition,
    grid: &TimeGrid,
    base: f64,
) -> Result<StatePipeline> {
    let psi0 = product_state(pattern, obs.dim().trailing_zeros() as usize)?;
    let state = prepare(decomp, &psi0)?;
    let omega = dephase(decomp, &psi0)?;
    let d_eff = 1.0 / omega.purity();
    let p_inf = equilibrium_probabilities(obs, &omega)?;
    let mz_eq = expectation(obs, &p_inf)?;
    let h_inf = shannon_entropy(&p_inf, base)?;

    let series = state.probability_series(obs, grid)?;
    let times = grid.times();

    let mut mz = Vec::with_capacity(series.len());
    let mut sq_dev = Vec::with_capacity(series.len());
    let mut l1 = Vec::with_capacity(series.len());
    for p in &series {
        let m = expectation(obs, p)?;
        mz.push(m);
        sq_dev.push((m - mz_eq) * (m - mz_eq));
        l1.push(l1_distance(p, &p_inf)?);
    }
    let records = complexity_records(times, &series, &p_inf, base)?;
    let entropy: Vec<f64> = records.iter().map(|r| r.entropy).collect();

    let mz_avg = running_trapezoid_average(times, &mz);
    let sq_dev_avg = running_trapezoid_average(times, &sq_dev);
    let entropy_avg = running_trapezoid_average(times, &entropy);
    let l1_avg = running_trapezoid_average(times, &l1);
    let mean_c = mean_oecm_series(&records, grid)?;
    let c_of_mean = oecm_of_mean_series(&series, &p_inf, grid, base)?;

    // ‖⟨p_t⟩_T − p_∞‖₁ from the same running vector average that feeds
    // c_of_mean.
    let rows: Vec<Vec<f64>> = series.iter().map(|p| p.probs().to_vec()).collect();
    let averaged = running_trapezoid_average_vectors(times, &rows);
    let l1_of_mean = averaged
        .into_iter()
        .map(|row| l1_distance(&ProbabilityVector::new(row)?, &p_inf))
        .collect::<Result<Vec<f64>>>()?;
    debug_assert!({
        let p0 = &series[0];
        (oecm(p0, &p_inf, base)? - mean_c[0]).abs() < 1e-12
    });

    Ok(StatePipeline {
        label: pattern.label(),
        d_eff,
        mz_eq,
        h_inf,
        mz,
        mz_avg,
        entropy,
        entropy_avg,
        l1_avg,
        l1_of_mean,
        mean_c,
        c_of_mean,
        sq_dev_avg,
    })
}

fn run_typicality(config: &ExperimentConfig, typ: &TypicalityConfig) -> Result<TypicalityReport> {
    let spec = SpinChainSpec {
        n_sites: typ.n_sites,
        g: config.g,
        h: config.h,
        j: config.j,
    };
    let decomp = Arc::new(diagonalize(&build_ising(&spec)?, DEFAULT_GROUPING_TOL)?);
    let obs = magnetization_observable(typ.n_sites)?;
    let params = DeviationParams::new(typ.t, typ.epsilon_dev, typ.n_samples, config.seed);
    deviation_experiment(&decomp, &obs, &params)
}

fn fmt(x: f64) -> String {
    format!("{:.16e}", x)
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| fmt(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn write_figures(
    config: &ExperimentConfig,
    times: &[f64],
    pipelines: &[StatePipeline],
    bounds_full: &[Vec<f64>],
    bounds_asym: &[f64],
) -> Result<()> {
    let dir = &config.output_dir;
    let labels: Vec<&str> = pipelines.iter().map(|p| p.label).collect();
    let header = |first: &str, stems: &[&str]| -> Vec<String> {
        let mut h = vec![first.to_string()];
        for stem in stems {
            for label in &labels {
                h.push(format!("{stem}_{label}"));
            }
        }
        h
    };
    let all_rows = |columns: &[&Vec<f64>]| -> Vec<Vec<f64>> {
        (0..times.len())
            .map(|k| {
                let mut row = vec![times[k]];
                row.extend(columns.iter().map(|c| c[k]));
                row
            })
            .collect()
    };

    // fig1a: ⟨‖p_t − p_∞‖₁⟩_T; fig1b: ‖⟨p_t⟩_T − p_∞‖₁.
    let cols: Vec<&Vec<f64>> = pipelines.iter().map(|p| &p.l1_avg).collect();
    write_csv(&dir.join("fig1a.csv"), &header("T", &["mean_l1"]), &all_rows(&cols))?;
    let cols: Vec<&Vec<f64>> = pipelines.iter().map(|p| &p.l1_of_mean).collect();
    write_csv(&dir.join("fig1b.csv"), &header("T", &["l1_of_mean"]), &all_rows(&cols))?;

    // fig2a: M_z(t); fig2b: ⟨M_z⟩_T with the equilibrium values.
    let cols: Vec<&Vec<f64>> = pipelines.iter().map(|p| &p.mz).collect();
    write_csv(&dir.join("fig2a.csv"), &header("t", &["mz"]), &all_rows(&cols))?;
    let eq_cols: Vec<Vec<f64>> = pipelines
        .iter()
        .map(|p| vec![p.mz_eq; times.len()])
        .collect();
    let mut cols: Vec<&Vec<f64>> = pipelines.iter().map(|p| &p.mz_avg).collect();
    cols.extend(eq_cols.iter());
    write_csv(
        &dir.join("fig2b.csv"),
        &header("T", &["mean_mz", "mz_eq"]),
        &all_rows(&cols),
    )?;

    // fig3a: H_O(p_t); fig3b: ⟨H_O⟩_T with H_O(p_∞).
    let cols: Vec<&Vec<f64>> = pipelines.iter().map(|p| &p.entropy).collect();
    write_csv(&dir.join("fig3a.csv"), &header("t", &["h"]), &all_rows(&cols))?;
    let hinf_cols: Vec<Vec<f64>> = pipelines
        .iter()
        .map(|p| vec![p.h_inf; times.len()])
        .collect();
    let mut cols: Vec<&Vec<f64>> = pipelines.iter().map(|p| &p.entropy_avg).collect();
    cols.extend(hinf_cols.iter());
    write_csv(
        &dir.join("fig3b.csv"),
        &header("T", &["mean_h", "h_eq"]),
        &all_rows(&cols),
    )?;

    // fig4a: ⟨C(p_t)⟩_T; fig4b: C(⟨p_t⟩_T).
    let cols: Vec<&Vec<f64>> = pipelines.iter().map(|p| &p.mean_c).collect();
    write_csv(&dir.join("fig4a.csv"), &header("T", &["mean_c"]), &all_rows(&cols))?;
    let cols: Vec<&Vec<f64>> = pipelines.iter().map(|p| &p.c_of_mean).collect();
    write_csv(&dir.join("fig4b.csv"), &header("T", &["c_of_mean"]), &all_rows(&cols))?;

    // fig5a/fig5b: the complexity series with their bounds. f(ε,T)
    // diverges at T = 0, so these start at the first positive horizon.
    let asym_cols: Vec<Vec<f64>> = bounds_asym
        .iter()
        .map(|&b| vec![b; times.len() - 1])
        .collect();
    let bound_rows = |series: Vec<&Vec<f64>>| -> Vec<Vec<f64>> {
        (1..times.len())
            .map(|k| {
                let mut row = vec![times[k]];
                row.extend(series.iter().map(|c| c[k]));
                row.extend(bounds_full.iter().map(|b| b[k - 1]));
                row.extend(asym_cols.iter().map(|c| c[k - 1]));
                row
            })
            .collect()
    };
    let cols: Vec<&Vec<f64>> = pipelines.iter().map(|p| &p.mean_c).collect();
    write_csv(
        &dir.join("fig5a.csv"),
        &header("T", &["mean_c", "bound", "bound_asym"]),
        &bound_rows(cols),
    )?;
    let cols: Vec<&Vec<f64>> = pipelines.iter().map(|p| &p.c_of_mean).collect();
    write_csv(
        &dir.join("fig5b.csv"),
        &header("T", &["c_of_mean", "bound", "bound_asym"]),
        &bound_rows(cols),
    )?;
    Ok(())
}

fn write_summary_csv(path: &Path, config: &ExperimentConfig, summary: &RunSummary) -> Result<()> {
    let mut out = String::from("section,key,value\n");
    let mut push = |section: &str, key: &str, value: String| {
        let _ = writeln!(out, "{section},{key},{value}");
    };
    push("run", "n_sites", config.n_sites.to_string());
    push("run", "g", fmt(config.g));
    push("run", "h", fmt(config.h));
    push("run", "j", fmt(config.j));
    push("run", "t_max", fmt(config.t_max));
    push("run", "dt", fmt(config.dt));
    push("run", "seed", config.seed.to_string());
    push("run", "epsilon", fmt(summary.epsilon_used));
    push("run", "entropy_base", fmt(summary.base_used));
    push("run", "rank", summary.rank.to_string());
    push("run", "n_levels", summary.n_levels.to_string());
    push("run", "gap_count", summary.gap_count.to_string());
    push("run", "spectral_range", fmt(summary.spectral_range));
    for s in &summary.states {
        push(s.label, "d_eff", fmt(s.d_eff));
        push(s.label, "mz_initial", fmt(s.mz_initial));
        push(s.label, "mz_equilibrium", fmt(s.mz_equilibrium));
        push(s.label, "entropy_equilibrium", fmt(s.entropy_equilibrium));
        push(s.label, "final_mean_mz", fmt(s.final_mean_mz));
        push(s.label, "final_mean_entropy", fmt(s.final_mean_entropy));
        push(s.label, "final_mean_oecm", fmt(s.final_mean_oecm));
        push(s.label, "final_oecm_of_mean", fmt(s.final_oecm_of_mean));
        push(s.label, "final_mean_l1", fmt(s.final_mean_l1));
        push(s.label, "final_l1_of_mean", fmt(s.final_l1_of_mean));
    }
    let flag = |b: bool| if b { "pass" } else { "fail" }.to_string();
    push("checks", "theorem1_mean", flag(summary.theorem1_mean_ok));
    push("checks", "theorem1_avg", flag(summary.theorem1_avg_ok));
    push("checks", "variance", flag(summary.variance_ok));
    push("checks", "expectation_bound", flag(summary.expectation_bound_ok));
    push("checks", "distribution_bound", flag(summary.distribution_bound_ok));
    push("checks", "entropy_range", flag(summary.entropy_range_ok));
    if let Some(ok) = summary.nonconvergence_ordering_ok {
        push("checks", "nonconvergence_ordering", flag(ok));
    }
    if let Some(t) = &summary.typicality {
        push("typicality", "t", fmt(t.t));
        push("typicality", "epsilon_dev", fmt(t.epsilon_dev));
        push("typicality", "n_samples", t.n_samples.to_string());
        push("typicality", "convention", t.convention.label().to_string());
        push("typicality", "d_eff_used", fmt(t.d_eff_used));
        push("typicality", "d_eff_mean", fmt(t.d_eff_mean));
        push("typicality", "d_eff_min", fmt(t.d_eff_min));
        push("typicality", "empirical_frequency", fmt(t.empirical_frequency));
        push("typicality", "markov_bound", fmt(t.markov_bound));
        push("typicality", "vacuous", t.vacuous.to_string());
        push("typicality", "markov", flag(t.markov_ok));
        push("typicality", "jensen", flag(t.jensen_ok));
        push("typicality", "mean_square", flag(t.mean_square_ok));
        push(
            "typicality",
            "nondegenerate_gaps",
            t.nondegenerate_gaps.to_string(),
        );
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn write_typicality_csv(path: &Path, report: &TypicalityReport) -> Result<()> {
    let mut out = String::from("sample,d_eff,l2_deviation,jensen_slack\n");
    for s in &report.samples {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            s.seed_index,
            fmt(s.d_eff),
            fmt(s.l2_deviation),
            fmt(s.jensen_slack)
        );
    }
    let mean_dev = report
        .samples
        .iter()
        .map(|s| s.l2_deviation)
        .sum::<f64>()
        / report.n_samples as f64;
    let _ = writeln!(
        out,
        "mean,{},{},{}",
        fmt(report.d_eff_mean),
        fmt(mean_dev),
        fmt(report
            .samples
            .iter()
            .map(|s| s.jensen_slack)
            .fold(f64::NEG_INFINITY, f64::max))
    );
    std::fs::write(path, out)?;
    Ok(())
}
