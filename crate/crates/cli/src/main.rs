//! `qequil`: run the equilibration pipeline from a config file and/or
//! command-line overrides, write the CSV datasets, and exit 0 iff every
//! bound check passes.
//!
//! Output directory precedence: `--out` flag, then the `QEQUIL_OUT`
//! environment variable, then the config file, then the built-in
//! default.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use qequil::experiment::{BaseChoice, EpsilonChoice, ExperimentConfig, TypicalityConfig};
use qequil::Error;

#[derive(Parser, Debug)]
#[command(name = "qequil", about = "Spin-chain observable equilibration runner")]
struct Cli {
    /// Config file (flat key = value with [section] headers)
    #[arg(long)]
    config: Option<PathBuf>,

    /// Number of chain sites
    #[arg(long, value_name = "N")]
    n: Option<usize>,

    /// Comma-separated initial states (up, dw, pm)
    #[arg(long)]
    states: Option<String>,

    /// Final averaging horizon
    #[arg(long)]
    tmax: Option<f64>,

    /// Time-grid step
    #[arg(long)]
    dt: Option<f64>,

    /// Gap window width, or "auto"
    #[arg(long)]
    epsilon: Option<String>,

    /// Entropy log base, or "rank"
    #[arg(long)]
    base: Option<String>,

    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,

    /// RNG seed
    #[arg(long)]
    seed: Option<u64>,

    /// Enable the Haar deviation experiment
    #[arg(long)]
    typicality: bool,
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Ok(dir) = std::env::var("QEQUIL_OUT") {
        if !dir.is_empty() {
            config.output_dir = PathBuf::from(dir);
        }
    }
    if let Some(n) = cli.n {
        config.n_sites = n;
    }
    if let Some(states) = &cli.states {
        config.initial_states = parse_states(states)?;
    }
    if let Some(tmax) = cli.tmax {
        config.t_max = tmax;
    }
    if let Some(dt) = cli.dt {
        config.dt = dt;
    }
    if let Some(eps) = &cli.epsilon {
        config.epsilon = if eps.eq_ignore_ascii_case("auto") {
            EpsilonChoice::Auto
        } else {
            EpsilonChoice::Fixed(parse_real("--epsilon", eps)?)
        };
    }
    if let Some(base) = &cli.base {
        config.entropy_base = if base.eq_ignore_ascii_case("rank") {
            BaseChoice::Rank
        } else {
            BaseChoice::Fixed(parse_real("--base", base)?)
        };
    }
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if cli.typicality && config.typicality.is_none() {
        config.typicality = Some(TypicalityConfig::default());
    }
    Ok(config)
}

fn parse_real(flag: &str, value: &str) -> Result<f64, Error> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(vec![format!("{flag}: not a number: {value}")]))
}

fn parse_states(value: &str) -> Result<Vec<qequil::hilbert::ProductPattern>, Error> {
    use qequil::hilbert::ProductPattern;
    value
        .split(',')
        .map(|token| match token.trim().to_ascii_lowercase().as_str() {
            "up" => Ok(ProductPattern::Up),
            "dw" => Ok(ProductPattern::Dw),
            "pm" => Ok(ProductPattern::Pm),
            other => Err(Error::InvalidConfig(vec![format!(
                "--states: unknown state {other}"
            )])),
        })
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let violations = config.validate();
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("config error: {v}");
        }
        return ExitCode::from(2);
    }

    match qequil::experiment::run(&config) {
        Ok(summary) => {
            println!(
                "run: n_sites={} rank={} n_levels={} epsilon={:.6e} base={}",
                config.n_sites,
                summary.rank,
                summary.n_levels,
                summary.epsilon_used,
                summary.base_used
            );
            for s in &summary.states {
                println!(
                    "state {}: d_eff={:.4} mz_eq={:.6} final_mean_oecm={:.6e}",
                    s.label, s.d_eff, s.mz_equilibrium, s.final_mean_oecm
                );
            }
            let flag = |ok: bool| if ok { "pass" } else { "FAIL" };
            println!("theorem1_mean: {}", flag(summary.theorem1_mean_ok));
            println!("theorem1_avg: {}", flag(summary.theorem1_avg_ok));
            println!("variance: {}", flag(summary.variance_ok));
            println!("expectation_bound: {}", flag(summary.expectation_bound_ok));
            println!("distribution_bound: {}", flag(summary.distribution_bound_ok));
            println!("entropy_range: {}", flag(summary.entropy_range_ok));
            if let Some(ok) = summary.nonconvergence_ordering_ok {
                println!("nonconvergence_ordering: {}", flag(ok));
            }
            if let Some(t) = &summary.typicality {
                println!(
                    "typicality: freq={:.4} markov_bound={:.4}{} markov={} jensen={} mean_square={}",
                    t.empirical_frequency,
                    t.markov_bound,
                    if t.vacuous { " (vacuous)" } else { "" },
                    flag(t.markov_ok),
                    flag(t.jensen_ok),
                    flag(t.mean_square_ok)
                );
            }
            eprintln!("wall time: {:.2}s", summary.wall_seconds);
            if summary.all_checks_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Error::InvalidConfig(v)) => {
            for line in v {
                eprintln!("config error: {line}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
