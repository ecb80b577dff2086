//! `ablrt` — growth rates of the ablative Rayleigh-Taylor instability.
//!
//! Every run prints (or writes) a machine-readable table carrying the fully
//! resolved configuration, so outputs are reproducible byte for byte.
//! Exit codes: 0 success, 2 validation error, 3 numerical failure, 4 I/O.

// `!(x > 0.0)` rejects NaN where `x <= 0.0` would accept it.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use ablrt::evans::{expansion_check, EvansContext};
use ablrt::linevolve;
use ablrt::profile::{PhysicalParams, Profile};
use ablrt::spectral;
use ablrt::Error as CoreError;

use config::{load_file, resolve, FileConfig};
use output::{fmt, Table};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
    Io(std::io::Error),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter(_) | CoreError::Domain(_) | CoreError::Grid(_) => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn record(&self) -> String {
        let (kind, msg) = match self {
            CliError::Validation(m) => ("validation", m.clone()),
            CliError::Numerical(m) => ("numerical", m.clone()),
            CliError::Io(e) => ("io", e.to_string()),
        };
        serde_json::json!({"error": {"kind": kind, "message": msg}}).to_string()
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InitKind {
    Eigen,
    Random,
    File,
}

#[derive(Parser, Debug)]
#[command(
    name = "ablrt",
    version,
    about = "Ablative Rayleigh-Taylor linear stability toolkit"
)]
struct Cli {
    /// Thermal conduction index (> 1)
    #[arg(long, global = true)]
    nu: Option<f64>,
    /// Gravity
    #[arg(long, global = true)]
    g: Option<f64>,
    /// Profile length scale
    #[arg(long, global = true)]
    l0: Option<f64>,
    /// Ablated-fluid density
    #[arg(long, global = true)]
    rho_a: Option<f64>,
    /// Output format
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Output file (stdout if omitted); ABLRT_OUT_DIR overrides its directory
    #[arg(long, global = true)]
    out: Option<String>,
    /// JSON config file; flags override its values
    #[arg(long, global = true)]
    config: Option<String>,
    /// Worker threads for sweeps (output order is input order regardless)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate the density profile (y, xi, k0_scaled)
    Profile {
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long, default_value_t = -30.0)]
        y_min: f64,
        #[arg(long, default_value_t = 10.0)]
        y_max: f64,
    },
    /// Scan the Evans function over a lambda grid at fixed eps
    EvansScan {
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0.9)]
        lambda_min: f64,
        #[arg(long, default_value_t = 1.3)]
        lambda_max: f64,
        #[arg(long, default_value_t = 21)]
        points: usize,
        /// Left endpoint of the minus-branch grid
        #[arg(long, default_value_t = 0.05)]
        t0: f64,
    },
    /// Dispersion relation k -> gamma(k) (Evans route, spectral fallback)
    Dispersion {
        /// Comma-separated wavenumbers; overrides the log-spaced sweep
        #[arg(long)]
        k_list: Option<String>,
        #[arg(long, default_value_t = 0.1)]
        k_min: f64,
        #[arg(long, default_value_t = 100.0)]
        k_max: f64,
        #[arg(long, default_value_t = 13)]
        points: usize,
    },
    /// Verify the small-eps expansion of the Evans root over an eps decade sweep
    ExpansionCheck {
        #[arg(long, default_value_t = 1e-6)]
        eps_min: f64,
        #[arg(long, default_value_t = 1e-3)]
        eps_max: f64,
        #[arg(long, default_value_t = 8)]
        points: usize,
    },
    /// Spectral eigensolve sweep k -> gamma(k)
    Spectral {
        #[arg(long)]
        k_list: Option<String>,
        #[arg(long, default_value_t = 5.0)]
        k_min: f64,
        #[arg(long, default_value_t = 100.0)]
        k_max: f64,
        #[arg(long, default_value_t = 5)]
        points: usize,
        /// Grid size override
        #[arg(long)]
        n: Option<usize>,
    },
    /// Evolve the linearized system in time and fit the growth rate
    Evolve {
        #[arg(long)]
        k: f64,
        #[arg(long, value_enum, default_value_t = InitKind::Eigen)]
        init: InitKind,
        /// Final time in units of 1/Lambda
        #[arg(long, default_value_t = 8.0)]
        t_final: f64,
        /// Step in units of 1/Lambda
        #[arg(long, default_value_t = 0.05)]
        dt: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// JSON state file for --init file
        #[arg(long)]
        state_file: Option<String>,
        #[arg(long)]
        n: Option<usize>,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("{}", e.record());
            std::process::exit(e.exit_code());
        }
    }
}

fn parse_k_list(spec: &str) -> Result<Vec<f64>, CliError> {
    spec.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Validation(format!("bad wavenumber '{tok}'")))
        })
        .collect()
}

fn log_spaced(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, CliError> {
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err(CliError::Validation(format!(
            "bad sweep range [{lo}, {hi}] x {n}"
        )));
    }
    Ok((0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => load_file(path)?,
        None => FileConfig::default(),
    };
    let resolved = resolve(
        &file, cli.nu, cli.g, cli.l0, cli.rho_a, cli.format, cli.jobs,
    );
    let params = PhysicalParams::new(resolved.nu, resolved.g, resolved.l0, resolved.rho_a)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(resolved.jobs)
        .build()
        .map_err(|e| CliError::Validation(e.to_string()))?;

    match cli.command {
        Command::Profile {
            points,
            y_min,
            y_max,
        } => {
            if points < 2 || !(y_max > y_min) {
                return Err(CliError::Validation(
                    "need points >= 2 and y_max > y_min".into(),
                ));
            }
            let prof = Profile::new(params.nu)?;
            let mut table = Table::new("profile", &resolved, &["y", "xi", "k0_scaled"]);
            let (l_eff, cap, xi_star) = params.l_eff_and_cap();
            table.push_meta("l_eff", fmt(l_eff));
            table.push_meta("lambda_cap", fmt(cap));
            table.push_meta("xi_star", fmt(xi_star));
            for i in 0..points {
                let y = y_min + (y_max - y_min) * i as f64 / (points - 1) as f64;
                let e = prof.eval(y);
                table.push_row(vec![fmt(y), fmt(e.xi), fmt(e.k0_scaled)]);
            }
            table.write(&resolved.format, cli.out.as_deref())
        }
        Command::EvansScan {
            eps,
            lambda_min,
            lambda_max,
            points,
            t0,
        } => {
            if !(eps > 0.0) || points < 2 || !(lambda_max > lambda_min) {
                return Err(CliError::Validation(
                    "need eps > 0 and a nonempty lambda grid".into(),
                ));
            }
            let prof = Profile::new(params.nu)?;
            let ec = EvansContext::with_t0(params, &prof, eps, t0)?;
            let lambdas: Vec<f64> = (0..points)
                .map(|i| lambda_min + (lambda_max - lambda_min) * i as f64 / (points - 1) as f64)
                .collect();
            let evals: Vec<_> = pool.install(|| {
                lambdas
                    .par_iter()
                    .map(|&lambda| ec.evaluate(lambda).map_err(|e| e.to_string()))
                    .collect()
            });
            let mut table = Table::new(
                "evans-scan",
                &resolved,
                &["lambda", "epsilon", "value", "spread", "series_window_ok"],
            );
            table.push_meta("eps", fmt(eps));
            table.push_meta("t0", fmt(t0));
            for ev in evals {
                let ev = ev.map_err(CliError::Numerical)?;
                table.push_row(vec![
                    fmt(ev.lambda),
                    fmt(ev.epsilon),
                    fmt(ev.value),
                    fmt(ev.spread),
                    ev.series_window_ok.to_string(),
                ]);
            }
            table.write(&resolved.format, cli.out.as_deref())
        }
        Command::Dispersion {
            k_list,
            k_min,
            k_max,
            points,
        } => {
            let ks = match k_list {
                Some(spec) => parse_k_list(&spec)?,
                None => log_spaced(k_min, k_max, points)?,
            };
            let prof = Profile::new(params.nu)?;
            let rows: Vec<_> = pool.install(|| {
                ks.par_iter()
                    .map(|&k| ablrt::evans::dispersion_row(&params, &prof, k))
                    .collect()
            });
            let mut table = Table::new(
                "dispersion",
                &resolved,
                &[
                    "k",
                    "epsilon",
                    "lambda_root",
                    "gamma",
                    "gamma_asym",
                    "gamma_cap",
                    "admissible",
                    "source",
                    "error",
                ],
            );
            for r in rows {
                table.push_row(vec![
                    fmt(r.k),
                    fmt(r.epsilon),
                    fmt(r.lambda_root),
                    fmt(r.gamma),
                    fmt(r.gamma_asym),
                    fmt(r.gamma_cap),
                    r.admissible.to_string(),
                    r.source.to_string(),
                    r.error.unwrap_or_default(),
                ]);
            }
            table.write(&resolved.format, cli.out.as_deref())
        }
        Command::ExpansionCheck {
            eps_min,
            eps_max,
            points,
        } => {
            let eps = log_spaced(eps_min, eps_max, points)?;
            let prof = Profile::new(params.nu)?;
            let rep = expansion_check(&params, &prof, &eps)?;
            let mut table = Table::new(
                "expansion-check",
                &resolved,
                &["epsilon", "lambda_root", "delta"],
            );
            table.push_meta("slope", fmt(rep.slope));
            table.push_meta("k2_fit", fmt(rep.k2_fit));
            table.push_meta("k2_pred", fmt(rep.k2_pred));
            table.push_meta("b0_measured", fmt(rep.b0_measured));
            table.push_meta("b0_from_roots", fmt(rep.b0_from_roots));
            table.push_meta("b0_matched", rep.b0_matched.to_string());
            table.push_meta("c0_quadrature", fmt(rep.c0.quadrature));
            table.push_meta("c0_closed_form", fmt(rep.c0.closed_form));
            table.push_meta("r0_limit", fmt(rep.r0_limit));
            for i in 0..rep.eps.len() {
                table.push_row(vec![
                    fmt(rep.eps[i]),
                    fmt(rep.lambda_roots[i]),
                    fmt(rep.delta[i]),
                ]);
            }
            table.write(&resolved.format, cli.out.as_deref())
        }
        Command::Spectral {
            k_list,
            k_min,
            k_max,
            points,
            n,
        } => {
            let ks = match k_list {
                Some(spec) => parse_k_list(&spec)?,
                None => log_spaced(k_min, k_max, points)?,
            };
            let results: Vec<_> = pool.install(|| {
                ks.par_iter()
                    .map(|&k| spectral::gamma_spectral(k, &params, n).map_err(|e| e.to_string()))
                    .collect()
            });
            let mut table = Table::new(
                "spectral",
                &resolved,
                &[
                    "k",
                    "gamma",
                    "lambda",
                    "eigenvalue_residual",
                    "gamma_over_cap",
                ],
            );
            let (_, cap, _) = params.l_eff_and_cap();
            table.push_meta("lambda_cap", fmt(cap));
            for r in results {
                let r = r.map_err(CliError::Numerical)?;
                table.push_row(vec![
                    fmt(r.k),
                    fmt(r.gamma),
                    fmt(params.g * r.k / (r.gamma * r.gamma)),
                    fmt(r.eigenvalue_residual),
                    fmt(r.gamma / cap),
                ]);
            }
            table.write(&resolved.format, cli.out.as_deref())
        }
        Command::Evolve {
            k,
            init,
            t_final,
            dt,
            seed,
            state_file,
            n,
        } => {
            let (_, cap, _) = params.l_eff_and_cap();
            let dt_phys = dt / cap;
            let n_steps = (t_final / cap / dt_phys).ceil() as usize;
            let sp = spectral::gamma_spectral(k, &params, n.or(Some(3001)))?;
            let state0 = match init {
                InitKind::Eigen => linevolve::eigen_init(&sp, &params),
                InitKind::Random => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let grid = &sp.grid;
                    let mut s = linevolve::EvolveState::zero(k, grid.n);
                    let xm = 0.5 * (grid.x_min + grid.x_max);
                    for i in 0..grid.n {
                        let env = (-(grid.x[i] - xm) * (grid.x[i] - xm) / 4.0).exp();
                        s.tau_hat[i] = Complex64::new(
                            rng.gen_range(-0.5..0.5) * env,
                            rng.gen_range(-0.5..0.5) * env,
                        );
                        s.b_hat[i] = Complex64::new(
                            rng.gen_range(-0.5..0.5) * env,
                            rng.gen_range(-0.5..0.5) * env,
                        );
                    }
                    s
                }
                InitKind::File => {
                    let path = state_file.ok_or_else(|| {
                        CliError::Validation("--init file requires --state-file".into())
                    })?;
                    read_state(&path, k, sp.grid.n)?
                }
            };
            let (_, traj) = linevolve::run(state0, dt_phys, n_steps, &params, &sp.grid);
            let fit = linevolve::measure_growth(&traj);
            let mut table = Table::new(
                "evolve",
                &resolved,
                &["t", "norm_tau", "norm_b", "log_deriv"],
            );
            table.push_meta("k", fmt(k));
            table.push_meta("init", format!("{init:?}").to_lowercase());
            table.push_meta("seed", seed.to_string());
            table.push_meta("dt", fmt(dt_phys));
            table.push_meta("gamma_spectral", fmt(sp.gamma));
            table.push_meta("lambda_cap", fmt(cap));
            match &fit {
                Ok(f) => {
                    table.push_meta("gamma_measured", fmt(f.gamma_measured));
                    table.push_meta("fit_r_squared", fmt(f.r_squared));
                    table.push_meta(
                        "fit_window",
                        format!("{}..{}", fmt(f.fit_window.0), fmt(f.fit_window.1)),
                    );
                }
                Err(e) => table.push_meta("fit_error", e.to_string()),
            }
            for p in &traj {
                table.push_row(vec![
                    fmt(p.t),
                    fmt(p.norm_tau),
                    fmt(p.norm_b),
                    fmt(p.log_deriv),
                ]);
            }
            table.write(&resolved.format, cli.out.as_deref())?;
            match fit {
                Ok(f) => {
                    eprintln!(
                        "gamma_measured = {:.8} (spectral {:.8}), r^2 = {:.6}",
                        f.gamma_measured, sp.gamma, f.r_squared
                    );
                    Ok(())
                }
                Err(e) => Err(CliError::Numerical(e.to_string())),
            }
        }
    }
}

#[derive(serde::Deserialize)]
struct StateFile {
    tau_re: Vec<f64>,
    tau_im: Vec<f64>,
    b_re: Vec<f64>,
    b_im: Vec<f64>,
}

fn read_state(path: &str, k: f64, n: usize) -> Result<linevolve::EvolveState, CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::Io)?;
    let sf: StateFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("state file {path}: {e}")))?;
    if sf.tau_re.len() != n || sf.tau_im.len() != n || sf.b_re.len() != n || sf.b_im.len() != n {
        return Err(CliError::Validation(format!(
            "state file arrays must have grid length {n}"
        )));
    }
    let mut s = linevolve::EvolveState::zero(k, n);
    for i in 0..n {
        s.tau_hat[i] = Complex64::new(sf.tau_re[i], sf.tau_im[i]);
        s.b_hat[i] = Complex64::new(sf.b_re[i], sf.b_im[i]);
    }
    Ok(s)
}
