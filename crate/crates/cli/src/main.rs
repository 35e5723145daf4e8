//! `qstein`: hypothesis-testing numerics from the command line.

mod input;
mod output;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use stein_core::classical::{finite_n_optimal, kl, solve_rate, strong_converse_sweep, u_tilde, Constraint};
use stein_core::exponent::{curve_markers, phi, strong_converse_exponent, strong_converse_predicate};
use stein_core::neyman_pearson::{stein_row, SteinRow, TensorPowerPair};
use stein_core::operator::tensor_dim;
use stein_core::verify::{self, VerifyOptions};
use stein_core::{Config, Error, StatePair};

use input::StateArgs;
use output::{Cell, Format, Table, Unit};

#[derive(Parser, Debug)]
#[command(name = "qstein", version, about = "Quantum and classical hypothesis-testing exponents")]
struct Cli {
    /// Unit of information quantities, in output and in rate arguments.
    #[arg(long, value_enum, global = true, default_value = "nats")]
    unit: Unit,
    #[arg(long, value_enum, global = true, default_value = "csv")]
    format: Format,
    /// Seed for the random preset and the verification suites.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Largest tensor-power dimension that may be formed.
    #[arg(long, global = true)]
    dim_cap: Option<usize>,
    /// Tolerances and caps as JSON; omitted fields keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the table here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CurveKind {
    /// `psi(s)` with the lines `D s` and `lambda s`.
    Psi,
    /// `phi(lambda)` with marker rows.
    Phi,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Relative entropy, cross-checked against psi'(0).
    Divergence {
        #[command(flatten)]
        state: StateArgs,
    },
    /// Sampled psi or phi curves.
    Curves {
        #[arg(value_enum)]
        kind: CurveKind,
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, default_value_t = 0.0)]
        s_min: f64,
        #[arg(long, default_value_t = 1.0)]
        s_max: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Slope of the `lambda s` line (default psi'(1)).
        #[arg(long, allow_negative_numbers = true)]
        lambda: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        lambda_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        lambda_max: Option<f64>,
        /// Rate whose fixed point is marked (default midway between D and 2 psi'(1) - psi(1)).
        #[arg(long)]
        r: Option<f64>,
    },
    /// Strong-converse exponent at rate r.
    Exponent {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        r: f64,
    },
    /// Optimal type-II error on n copies at type-I level epsilon.
    BetaStar {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        epsilon: f64,
    },
    /// Exact (1/n) log beta*_n against the finite-n lower bound, n = 1..n_max.
    Stein {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        n_max: usize,
        /// Offset above D at which the lower bound is evaluated.
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Classical exponent forms and exact type-class optima.
    Classical {
        /// Null distribution: inline JSON array or a file.
        #[arg(long)]
        p: String,
        /// Alternative distribution: inline JSON array or a file.
        #[arg(long)]
        q: String,
        /// Type-II exponent constraint.
        #[arg(long, conflicts_with = "epsilon")]
        r: Option<f64>,
        /// Type-I level; requires --n.
        #[arg(long, requires = "n")]
        epsilon: Option<f64>,
        /// Block lengths, comma separated.
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
    },
    /// Randomized property suites; exits nonzero on the first violated case.
    Verify {
        /// Multiplies every suite's case count.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Where a failing case is written.
        #[arg(long, default_value = "counterexample.json")]
        counterexample: PathBuf,
        /// A `curves phi` CSV to check for monotonicity and convexity.
        #[arg(long)]
        phi_csv: Option<PathBuf>,
        /// Negate every slack, so that the run must fail.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

/// Exit codes beyond the 0 / 1 (verification failed) / 2 (usage) convention.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_)
        | Error::NotSquare { .. }
        | Error::NotHermitian { .. }
        | Error::NotPsd { .. }
        | Error::TraceNotOne { .. }
        | Error::NotATest { .. }
        | Error::InvalidDistribution(_)
        | Error::DimensionMismatch { .. } => 3,
        Error::SupportViolation(_) => 4,
        Error::EpsilonOutOfRange(_)
        | Error::NegativeRate(_)
        | Error::RateBelowDivergence { .. }
        | Error::RateUnreachable { .. }
        | Error::DegenerateFamily
        | Error::ExpectationMismatch { .. }
        | Error::NegativePowerOfKernel { .. }
        | Error::InvalidConfig(_) => 5,
        Error::DimensionCapExceeded { .. } | Error::TypeCapExceeded { .. } => 6,
        Error::InternalInconsistency(_) => 7,
    }
}

const IO_FAILURE: u8 = 8;

enum Outcome {
    Table(Table),
    /// Verification ran; `false` means a property failed.
    Verified(Table, bool),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let (table, ok) = match run(&cli, &cfg) {
        Ok(Outcome::Table(t)) => (t, true),
        Ok(Outcome::Verified(t, ok)) => (t, ok),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    if let Err(e) = emit(&cli, &table) {
        if e.kind() == io::ErrorKind::BrokenPipe {
            return ExitCode::SUCCESS;
        }
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(IO_FAILURE);
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn load_config(cli: &Cli) -> Result<Config, Error> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?
        }
        None => Config::default(),
    };
    if let Some(cap) = cli.dim_cap {
        cfg.dim_cap = cap;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(cli: &Cli, table: &Table) -> io::Result<()> {
    match &cli.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            table.write(&mut w, cli.format, cli.unit)?;
            w.flush()
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            table.write(&mut w, cli.format, cli.unit)
        }
    }
}

fn run(cli: &Cli, cfg: &Config) -> Result<Outcome, Error> {
    let unit = cli.unit;
    let table = match &cli.command {
        Command::Divergence { state } => divergence(&state.load(cli.seed, cfg)?),
        Command::Curves { kind, state, s_min, s_max, points, lambda, lambda_min, lambda_max, r } => {
            let pair = state.load(cli.seed, cfg)?;
            let to_nats = |x: Option<f64>| x.map(|v| unit.to_nats(v));
            match kind {
                CurveKind::Psi => psi_curve(&pair, *s_min, *s_max, *points, to_nats(*lambda))?,
                CurveKind::Phi => phi_curve(&pair, *points, to_nats(*lambda_min), to_nats(*lambda_max), to_nats(*r), cfg)?,
            }
        }
        Command::Exponent { state, r } => exponent(&state.load(cli.seed, cfg)?, unit.to_nats(*r), cfg)?,
        Command::BetaStar { state, n, epsilon } => beta_star(&state.load(cli.seed, cfg)?, *n, *epsilon, cfg)?,
        Command::Stein { state, epsilon, n_max, delta, workers } => {
            stein(&state.load(cli.seed, cfg)?, *epsilon, *n_max, unit.to_nats(*delta), *workers, cfg)?
        }
        Command::Classical { p, q, r, epsilon, n } => {
            classical(&input::distribution(p)?, &input::distribution(q)?, r.map(|v| unit.to_nats(v)), *epsilon, n, cfg)?
        }
        Command::Verify { scale, counterexample, phi_csv, inject_fault } => {
            return verify_cmd(cli.seed, *scale, counterexample, phi_csv.as_ref(), *inject_fault, cfg);
        }
    };
    Ok(Outcome::Table(table))
}

fn divergence(pair: &StatePair) -> Table {
    let d = pair.relative_entropy();
    let (slope0, _) = pair.psi_derivatives(0.0);
    Table::report(vec![
        ("dim", Cell::Int(pair.dim() as u64)),
        ("divergence", Cell::Nats(d)),
        ("psi_prime_0", Cell::Nats(slope0)),
        ("agreement", Cell::Nats((d - slope0).abs())),
        ("support_condition", Cell::Bool(true)),
        ("commutator_norm", Cell::Num(pair.commutator_norm())),
        ("commuting", Cell::Bool(pair.commuting_frame().is_some())),
    ])
}

fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect()
}

fn psi_curve(pair: &StatePair, s_min: f64, s_max: f64, points: usize, lambda: Option<f64>) -> Result<Table, Error> {
    if !(0.0 <= s_min && s_min <= s_max) || points == 0 {
        return Err(Error::InvalidConfig(format!("need 0 <= s-min <= s-max and points > 0, got [{s_min}, {s_max}] x {points}")));
    }
    let d = pair.relative_entropy();
    let lambda = lambda.unwrap_or_else(|| pair.psi_derivatives(1.0).0);
    let mut t = Table::new(vec!["s", "psi", "psi_prime", "d_times_s", "lambda_times_s"]);
    for s in grid(s_min, s_max, points) {
        let v = pair.psi_value(s);
        t.push(vec![Cell::Num(s), Cell::Nats(v.psi), Cell::Nats(v.d1), Cell::Nats(d * s), Cell::Nats(lambda * s)]);
    }
    Ok(t)
}

fn phi_curve(
    pair: &StatePair,
    points: usize,
    lambda_min: Option<f64>,
    lambda_max: Option<f64>,
    r: Option<f64>,
    cfg: &Config,
) -> Result<Table, Error> {
    let d = pair.relative_entropy();
    let slope1 = pair.psi_derivatives(1.0).0;
    let edge = 2.0 * slope1 - pair.psi(1.0);
    let r = r.unwrap_or(0.5 * (d + edge));
    let markers = curve_markers(pair, r, cfg)?;
    let width = (edge - d).max(0.5);
    let lo = lambda_min.unwrap_or(d - 0.5 * width);
    let hi = lambda_max.unwrap_or(edge + 0.5 * width);
    if !(lo < hi) || points < 2 {
        return Err(Error::InvalidConfig(format!("empty lambda range [{lo}, {hi}] x {points}")));
    }
    let mut rows: Vec<(f64, &'static str)> = grid(lo, hi, points).into_iter().map(|l| (l, "")).collect();
    rows.extend([
        (markers.divergence, "divergence"),
        (markers.lambda_star, "lambda_star"),
        (markers.psi_prime_one, "psi_prime_one"),
        (markers.high_rate_edge, "high_rate_edge"),
    ]);
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut t = Table::new(vec!["lambda", "phi", "s_star", "regime", "marker"]);
    for (lambda, marker) in rows {
        let res = phi(pair, lambda, cfg);
        t.push(vec![
            Cell::Nats(lambda),
            Cell::Nats(res.phi),
            Cell::Num(res.s_star),
            Cell::Text(snake(res.regime)),
            Cell::Text(marker.into()),
        ]);
    }
    Ok(t)
}

fn snake<T: serde::Serialize>(v: T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

fn exponent(pair: &StatePair, r: f64, cfg: &Config) -> Result<Table, Error> {
    let res = strong_converse_exponent(pair, r, cfg)?;
    let strong = strong_converse_predicate(pair, r, cfg)?;
    Ok(Table::report(vec![
        ("r", Cell::Nats(r)),
        ("divergence", Cell::Nats(pair.relative_entropy())),
        ("lambda_star", Cell::Nats(res.lambda_star)),
        ("phi_star", Cell::Nats(res.phi_star)),
        ("s_star", Cell::Num(res.s_star)),
        ("regime", Cell::Text(snake(res.regime))),
        ("u_parametric", Cell::Nats(res.u_parametric)),
        ("u_maxform", Cell::Nats(res.u_maxform)),
        ("s_maxform", Cell::Num(res.s_maxform)),
        ("form_gap", Cell::Nats((res.u_parametric - res.u_maxform).abs())),
        ("fixed_point_residual", Cell::Nats(res.fixed_point_residual)),
        ("strong_converse", Cell::Bool(strong)),
        ("flat_family", Cell::Bool(res.flat_family)),
    ]))
}

fn beta_star(pair: &StatePair, n: usize, epsilon: f64, cfg: &Config) -> Result<Table, Error> {
    let tp = TensorPowerPair::new(pair, n, cfg)?;
    let res = stein_core::neyman_pearson::beta_star_on(&tp, epsilon, cfg)?;
    Ok(Table::report(vec![
        ("n", Cell::Int(n as u64)),
        ("epsilon", Cell::Num(epsilon)),
        ("beta_star", Cell::Num(res.beta_star)),
        ("log_beta_over_n", Cell::Nats(res.beta_star.ln() / n as f64)),
        ("alpha", Cell::Num(res.alpha)),
        ("lambda_lo", Cell::Nats(res.lambda_lo)),
        ("lambda_hi", Cell::Nats(res.lambda_hi)),
        ("mix_weight", Cell::Num(res.mix_weight)),
        ("dual_bound", Cell::Num(res.dual_bound)),
        ("dual_gap", Cell::Num(res.dual_gap)),
        ("representation", Cell::Text(if tp.is_diagonal() { "diagonal" } else { "dense" }.into())),
    ]))
}

fn stein(pair: &StatePair, epsilon: f64, n_max: usize, delta: f64, workers: usize, cfg: &Config) -> Result<Table, Error> {
    tensor_dim(pair.dim(), n_max, cfg.dim_cap)?;
    let workers = workers.clamp(1, n_max.max(1));
    let mut results: Vec<Option<Result<SteinRow, Error>>> = (0..n_max).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    (1..=n_max)
                        .filter(|n| (n - 1) % workers == w)
                        .map(|n| (n, stein_row(pair, n, epsilon, delta, cfg)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (n, row) in h.join().expect("worker panicked") {
                results[n - 1] = Some(row);
            }
        }
    });
    let mut t = Table::new(vec![
        "n",
        "alpha",
        "beta",
        "log_beta_over_n",
        "bound",
        "bound_holds",
        "lambda",
        "phi",
        "dual_gap",
        "dpi_holds",
        "weak_converse_holds",
    ]);
    for row in results.into_iter().flatten() {
        let row = row?;
        t.push(vec![
            Cell::Int(row.n as u64),
            Cell::Num(row.alpha),
            Cell::Num(row.beta),
            Cell::Nats(row.log_beta_over_n),
            row.bound.map_or(Cell::Missing, Cell::Nats),
            Cell::Bool(row.bound_holds),
            Cell::Nats(row.lambda),
            Cell::Nats(row.phi),
            Cell::Num(row.dual_gap),
            Cell::Bool(row.dpi_holds),
            Cell::Bool(row.weak_converse_holds),
        ]);
    }
    Ok(t)
}

fn classical(
    p: &stein_core::Distribution,
    q: &stein_core::Distribution,
    r: Option<f64>,
    epsilon: Option<f64>,
    ns: &[usize],
    cfg: &Config,
) -> Result<Table, Error> {
    match (r, epsilon) {
        (Some(r), None) if ns.is_empty() => {
            let u = u_tilde(p, q, r, cfg)?;
            let residual = match u.s_parametric {
                Some(_) => Cell::Nats((solve_rate(p, q, r, cfg)?.d_to_q - r).abs()),
                None => Cell::Missing,
            };
            Ok(Table::report(vec![
                ("r", Cell::Nats(r)),
                ("divergence", Cell::Nats(kl(p, q)?)),
                ("u_parametric", u.parametric.map_or(Cell::Missing, Cell::Nats)),
                ("s_parametric", u.s_parametric.map_or(Cell::Missing, Cell::Num)),
                ("u_maxform", Cell::Nats(u.max_form)),
                ("s_maxform", Cell::Num(u.s_maxform)),
                ("form_gap", u.parametric.map_or(Cell::Missing, |v| Cell::Nats((v - u.max_form).abs()))),
                ("rate_residual", residual),
                ("supremum_not_attained", Cell::Bool(u.supremum_not_attained)),
            ]))
        }
        (Some(r), None) => {
            let rows = strong_converse_sweep(p, q, r, ns, cfg)?;
            let mut t = Table::new(vec!["n", "r", "alpha_star", "exponent_estimate", "u_tilde", "relative_error"]);
            for row in rows {
                t.push(vec![
                    Cell::Int(row.n as u64),
                    Cell::Nats(row.r),
                    Cell::Num(row.alpha_star),
                    Cell::Nats(row.exponent_estimate),
                    Cell::Nats(row.u_tilde),
                    Cell::Num((row.exponent_estimate - row.u_tilde).abs() / row.u_tilde.abs()),
                ]);
            }
            Ok(t)
        }
        (None, Some(epsilon)) => {
            let mut t = Table::new(vec![
                "n",
                "epsilon",
                "beta_star",
                "alpha",
                "log_beta_over_n",
                "threshold_log_ratio",
                "boundary_fraction",
                "types",
            ]);
            for &n in ns {
                let opt = finite_n_optimal(p, q, n, Constraint::Epsilon(epsilon), cfg)?;
                t.push(vec![
                    Cell::Int(n as u64),
                    Cell::Num(epsilon),
                    Cell::Num(opt.beta),
                    Cell::Num(opt.alpha),
                    Cell::Nats(opt.beta.ln() / n as f64),
                    Cell::Nats(opt.threshold_log_ratio),
                    Cell::Num(opt.boundary_fraction),
                    Cell::Int(opt.types_enumerated as u64),
                ]);
            }
            Ok(t)
        }
        _ => Err(Error::InvalidConfig("give --r, or --epsilon with --n".into())),
    }
}

fn read_phi_csv(path: &PathBuf) -> Result<Vec<(f64, f64)>, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let col = |name: &str| {
        header.iter().position(|h| *h == name).ok_or_else(|| Error::Parse(format!("no \"{name}\" column")))
    };
    let (li, pi) = (col("lambda")?, col("phi")?);
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let num = |i: usize| -> Result<f64, Error> {
                f.get(i).and_then(|s| s.parse().ok()).ok_or_else(|| Error::Parse(format!("bad row: {l}")))
            };
            Ok((num(li)?, num(pi)?))
        })
        .collect()
}

fn verify_cmd(
    seed: u64,
    scale: f64,
    counterexample: &PathBuf,
    phi_csv: Option<&PathBuf>,
    inject_fault: bool,
    cfg: &Config,
) -> Result<Outcome, Error> {
    if !(scale > 0.0) {
        return Err(Error::InvalidConfig(format!("scale must be positive, got {scale}")));
    }
    let phi_samples = phi_csv.map(read_phi_csv).transpose()?;
    let opts = VerifyOptions { seed, scale, corrupt: inject_fault, phi_samples };
    let report = verify::run(&opts, cfg)?;
    let mut t = Table::new(vec!["suite", "cases", "failures", "worst_slack"]);
    for s in &report.suites {
        t.push(vec![Cell::Text(s.name.into()), Cell::Int(s.cases as u64), Cell::Int(s.failures as u64), Cell::Num(s.worst_slack)]);
    }
    if let Some(ce) = &report.first_failure {
        let text = serde_json::to_string_pretty(ce).expect("counterexample serializes");
        fs::write(counterexample, text + "\n")
            .map_err(|e| Error::Parse(format!("{}: {e}", counterexample.display())))?;
        eprintln!("verification failed in suite {}; counterexample written to {}", ce.suite, counterexample.display());
    }
    Ok(Outcome::Verified(t, report.passed()))
}
