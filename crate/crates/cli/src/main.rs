//! Command-line front end: every computation of the library with
//! reproducible, machine-readable output.
//!
//! Exit codes are a stable contract so shell pipelines can sweep parameter
//! grids without parsing JSON:
//!
//! * 0 — success; for `phase`, expected coexistence
//! * 2 — input error (unreadable or invalid profile)
//! * 3 — `phase`: no expected coexistence
//! * 4 — `phase`: boundary inconclusive
//! * 5 — precondition failure (bad branching factor, agreeing endpoints)
//! * 1 — anything else

use anyhow::Context;
use chase_escape::catalan::{
    enumerate_dyck_paths, path_weight, root_test_from_ln, weighted_catalan_ln,
    weighted_catalan_table,
};
use chase_escape::contfrac::{
    classify_phase, critical_lambda, evaluate_f, ContfracError, Phase, DEFAULT_MAX_DEPTH,
};
use chase_escape::jumpchain::{mc_renewal_frequencies, reach_table};
use chase_escape::numeric::{fmt_f64, mean_stderr, Scalar};
use chase_escape::rates::{RateError, RateProfile, StepWeights};
use chase_escape::treesim::{simulate_tree_batch, truncated_series, TreeSimConfig};
use chase_escape::verify::{run_verify, Budget};
use clap::{Parser, Subcommand, ValueEnum};
use num::rational::BigRational;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "chase-escape",
    version,
    about = "Phase structure of distance-dependent chase-escape on d-ary trees"
)]
struct Cli {
    /// Worker threads for Monte Carlo batches; 1 forces serial execution.
    /// Output is identical either way.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CatalanMode {
    /// Exact rationals over the binary rate values.
    Exact,
    /// Plain f64 dynamic programming.
    Floating,
    /// f64 in the log domain; immune to underflow at large k.
    Log,
}

#[derive(Subcommand)]
enum Command {
    /// Step weights u(j), v(j), a_j and death sums D_j.
    Weights {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long, default_value_t = 16)]
        j_max: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Weighted Catalan numbers C_k with root-test diagnostics.
    Catalan {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long, default_value_t = 64)]
        k_max: usize,
        #[arg(long, value_enum, default_value_t = CatalanMode::Floating)]
        mode: CatalanMode,
        /// Trailing window for the root test.
        #[arg(long, default_value_t = 8)]
        window: usize,
        /// Cross-check the DP against brute-force path enumeration (k <= 8).
        #[arg(long)]
        oracle_check: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the generating function at one point via its continued
    /// fraction, with a truncated-series cross-check.
    Gf {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        z: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Phase verdict for the d-ary tree (exit 0 coexistence, 3 none, 4
    /// inconclusive).
    Phase {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        d: u32,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Critical scaling t* of the λ vector between two verdicts.
    Critical {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        d: u32,
        #[arg(long, default_value_t = 0.01)]
        t_lo: f64,
        #[arg(long, default_value_t = 1.0)]
        t_hi: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seeded stochastic simulation.
    Simulate {
        #[command(subcommand)]
        target: SimulateTarget,
    },
    /// Cross-validation suite (exit 0 if every check passes or is skipped
    /// with a reason).
    Verify {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long, default_value = "default")]
        budget: Budget,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        d: u32,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Subcommand)]
enum SimulateTarget {
    /// Gap chain on the half line: renewal frequencies against exact values.
    Line {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        runs: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        k_max: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full process on the depth-truncated d-ary tree.
    Tree {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long, default_value_t = 2)]
        d: u32,
        #[arg(long, default_value_t = 12)]
        depth_cap: u32,
        #[arg(long, default_value_t = 10_000)]
        runs: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = u64::MAX)]
        max_events: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the aggregate JSON summary here (CSV format only).
        #[arg(long)]
        summary_out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .expect("thread pool initializes once");
    }
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            exit_code_for(&err)
        }
    };
    std::process::exit(code);
}

fn exit_code_for(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<RateError>().is_some() {
        return 2;
    }
    if let Some(io) = err.downcast_ref::<std::io::Error>() {
        let _ = io;
        return 2;
    }
    if let Some(cf) = err.downcast_ref::<ContfracError>() {
        return match cf {
            ContfracError::InvalidBranching { .. }
            | ContfracError::EndpointsAgree { .. }
            | ContfracError::InvalidArgument(_) => 5,
            ContfracError::NonMonotoneProbes(_) => 1,
        };
    }
    1
}

fn load_profile(path: &Path) -> anyhow::Result<RateProfile> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read profile file {}", path.display()))?;
    let profile = RateProfile::from_toml_str(&text)
        .with_context(|| format!("invalid profile file {}", path.display()))?;
    Ok(profile)
}

fn emit(out: &Option<PathBuf>, content: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => {
            std::io::stdout().write_all(content.as_bytes())?;
        }
    }
    Ok(())
}

fn manifest_lines(profile: &RateProfile, extra: &[(&str, String)]) -> String {
    let mut out = String::new();
    out.push_str(&format!("# chase-escape {}\n", chase_escape::VERSION));
    if let Some(name) = &profile.name {
        out.push_str(&format!("# profile_name = {name}\n"));
    }
    out.push_str(&format!(
        "# profile_fingerprint = {}\n",
        profile.fingerprint()
    ));
    for (key, value) in extra {
        out.push_str(&format!("# {key} = {value}\n"));
    }
    out
}

fn run(command: Command) -> anyhow::Result<i32> {
    match command {
        Command::Weights {
            profile,
            j_max,
            format,
            out,
        } => cmd_weights(&profile, j_max, format, &out),
        Command::Catalan {
            profile,
            k_max,
            mode,
            window,
            oracle_check,
            out,
        } => cmd_catalan(&profile, k_max, mode, window, oracle_check, &out),
        Command::Gf {
            profile,
            z,
            tol,
            out,
        } => cmd_gf(&profile, z, tol, &out),
        Command::Phase {
            profile,
            d,
            tol,
            out,
        } => cmd_phase(&profile, d, tol, &out),
        Command::Critical {
            profile,
            d,
            t_lo,
            t_hi,
            tol,
            out,
        } => cmd_critical(&profile, d, t_lo, t_hi, tol, &out),
        Command::Simulate { target } => match target {
            SimulateTarget::Line {
                profile,
                runs,
                seed,
                k_max,
                out,
            } => cmd_simulate_line(&profile, runs, seed, k_max, &out),
            SimulateTarget::Tree {
                profile,
                d,
                depth_cap,
                runs,
                seed,
                max_events,
                format,
                out,
                summary_out,
            } => cmd_simulate_tree(
                &profile,
                d,
                depth_cap,
                runs,
                seed,
                max_events,
                format,
                &out,
                &summary_out,
            ),
        },
        Command::Verify {
            profile,
            budget,
            seed,
            d,
            format,
        } => cmd_verify(&profile, budget, seed, d, format),
    }
}

fn cmd_weights(
    path: &Path,
    j_max: u64,
    format: Format,
    out: &Option<PathBuf>,
) -> anyhow::Result<i32> {
    let profile = load_profile(path)?;
    let weights: StepWeights<f64> = StepWeights::new(&profile);
    let content = match format {
        Format::Csv => {
            let mut body = manifest_lines(&profile, &[("j_max", j_max.to_string())]);
            body.push_str("j,u,v,a,d_j\n");
            for j in 0..=j_max {
                body.push_str(&format!(
                    "{j},{},{},{},{}\n",
                    fmt_f64(weights.u(j)),
                    fmt_f64(weights.v(j as i64)),
                    fmt_f64(weights.a(j)),
                    fmt_f64(weights.cumulative_death(j))
                ));
            }
            body
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = (0..=j_max)
                .map(|j| {
                    serde_json::json!({
                        "j": j,
                        "u": weights.u(j),
                        "v": weights.v(j as i64),
                        "a": weights.a(j),
                        "d_j": weights.cumulative_death(j),
                    })
                })
                .collect();
            let doc = serde_json::json!({
                "version": chase_escape::VERSION,
                "profile_fingerprint": profile.fingerprint(),
                "profile_name": profile.name,
                "rows": rows,
            });
            serde_json::to_string_pretty(&doc)? + "\n"
        }
    };
    emit(out, &content)?;
    Ok(0)
}

fn cmd_catalan(
    path: &Path,
    k_max: usize,
    mode: CatalanMode,
    window: usize,
    oracle_check: bool,
    out: &Option<PathBuf>,
) -> anyhow::Result<i32> {
    let profile = load_profile(path)?;
    let mut extra = vec![
        ("k_max", k_max.to_string()),
        (
            "mode",
            match mode {
                CatalanMode::Exact => "exact".to_string(),
                CatalanMode::Floating => "floating".to_string(),
                CatalanMode::Log => "log".to_string(),
            },
        ),
    ];

    // Column values plus ln C_k used for the root test.
    let (rendered, ln_values): (Vec<String>, Vec<f64>) = match mode {
        CatalanMode::Exact => {
            let weights: StepWeights<BigRational> = StepWeights::new(&profile);
            let table = weighted_catalan_table(&weights, k_max)?;
            (
                table.values().iter().map(|c| c.render()).collect(),
                table.ln_values(),
            )
        }
        CatalanMode::Floating => {
            let weights: StepWeights<f64> = StepWeights::new(&profile);
            let table = weighted_catalan_table(&weights, k_max)?;
            (
                table.values().iter().map(|c| c.render()).collect(),
                table.ln_values(),
            )
        }
        CatalanMode::Log => {
            let weights: StepWeights<f64> = StepWeights::new(&profile);
            let ln = weighted_catalan_ln(&weights, k_max);
            (ln.iter().map(|x| fmt_f64(x.exp())).collect(), ln)
        }
    };

    match root_test_from_ln(&ln_values, window.min(k_max.saturating_sub(1)).max(2)) {
        Ok(rt) => {
            extra.push((
                "root_test_m_estimate",
                match rt.estimate {
                    chase_escape::catalan::Radius::Finite { value } => fmt_f64(value),
                    chase_escape::catalan::Radius::Infinite => "inf".to_string(),
                },
            ));
            extra.push(("root_test_window", rt.window.to_string()));
        }
        Err(err) => extra.push(("root_test", format!("unavailable: {err}"))),
    }

    if oracle_check {
        let weights: StepWeights<BigRational> = StepWeights::new(&profile);
        let exact = weighted_catalan_table(&weights, k_max.min(8))?;
        for k in 0..=k_max.min(8) {
            let brute = enumerate_dyck_paths(k)?
                .map(|p| path_weight(&p, &weights))
                .fold(<BigRational as Scalar>::zero(), |acc, x| acc.add(&x));
            anyhow::ensure!(
                exact.value(k) == &brute,
                "enumeration oracle mismatch at k = {k}"
            );
        }
        extra.push(("oracle_match", format!("exact for k <= {}", k_max.min(8))));
    }

    let mut body = manifest_lines(&profile, &extra);
    body.push_str("k,c_k,c_k_inv_root\n");
    for (k, value) in rendered.iter().enumerate() {
        let inv_root = if k == 0 {
            String::new()
        } else if ln_values[k] == f64::NEG_INFINITY {
            "inf".to_string()
        } else {
            fmt_f64((-ln_values[k] / k as f64).exp())
        };
        body.push_str(&format!("{k},{value},{inv_root}\n"));
    }
    emit(out, &body)?;
    Ok(0)
}

fn cmd_gf(path: &Path, z: f64, tol: f64, out: &Option<PathBuf>) -> anyhow::Result<i32> {
    anyhow::ensure!(z > 0.0, "--z must be positive");
    anyhow::ensure!(tol > 0.0, "--tol must be positive");
    let profile = load_profile(path)?;
    let weights: StepWeights<f64> = StepWeights::new(&profile);
    let evaluation = evaluate_f(&weights, z, tol, DEFAULT_MAX_DEPTH);

    let series = {
        let table = weighted_catalan_table::<f64>(&StepWeights::new(&profile), 64).ok();
        table.map(|t| {
            t.values()
                .iter()
                .enumerate()
                .map(|(k, c)| c * z.powi(k as i32))
                .sum::<f64>()
        })
    };
    let doc = serde_json::json!({
        "version": chase_escape::VERSION,
        "profile_fingerprint": profile.fingerprint(),
        "z": z,
        "tol": tol,
        "evaluation": evaluation,
        "series_partial_sum_k64": series,
        "series_gap": match (evaluation.converged_value(), series) {
            (Some(v), Some(s)) => Some(v - s),
            _ => None,
        },
    });
    emit(out, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    Ok(0)
}

fn cmd_phase(path: &Path, d: u32, tol: f64, out: &Option<PathBuf>) -> anyhow::Result<i32> {
    let profile = load_profile(path)?;
    let verdict = classify_phase(&profile, d, tol)?;
    emit(out, &(verdict.to_json() + "\n"))?;
    Ok(match verdict.verdict {
        Phase::ExpectedCoexistence => 0,
        Phase::NoExpectedCoexistence => 3,
        Phase::BoundaryInconclusive => 4,
    })
}

fn cmd_critical(
    path: &Path,
    d: u32,
    t_lo: f64,
    t_hi: f64,
    tol: f64,
    out: &Option<PathBuf>,
) -> anyhow::Result<i32> {
    let profile = load_profile(path)?;
    let result = critical_lambda(&profile, d, t_lo, t_hi, tol)?;
    emit(out, &(serde_json::to_string_pretty(&result)? + "\n"))?;
    Ok(0)
}

fn cmd_simulate_line(
    path: &Path,
    runs: u64,
    seed: u64,
    k_max: u64,
    out: &Option<PathBuf>,
) -> anyhow::Result<i32> {
    let profile = load_profile(path)?;
    let weights: StepWeights<f64> = StepWeights::new(&profile);
    let catalan = weighted_catalan_table(&weights, k_max as usize)?;
    let reach = reach_table(&weights, k_max as usize);
    let mc = mc_renewal_frequencies(&profile, k_max, runs, seed);

    let mut body = manifest_lines(
        &profile,
        &[
            ("runs", runs.to_string()),
            ("seed", seed.to_string()),
            ("k_max", k_max.to_string()),
        ],
    );
    body.push_str("k,c_k,p_reach_ge_k,mc_renewal_freq,stderr,n\n");
    for k in 0..=k_max as usize {
        body.push_str(&format!(
            "{k},{},{},{},{},{}\n",
            fmt_f64(*catalan.value(k)),
            fmt_f64(reach.p_reach[k]),
            fmt_f64(mc.frequency(k)),
            fmt_f64(mc.stderr(k)),
            runs
        ));
    }
    emit(out, &body)?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate_tree(
    path: &Path,
    d: u32,
    depth_cap: u32,
    runs: u64,
    seed: u64,
    max_events: u64,
    format: Format,
    out: &Option<PathBuf>,
    summary_out: &Option<PathBuf>,
) -> anyhow::Result<i32> {
    let profile = load_profile(path)?;
    let cfg = TreeSimConfig::new(d, depth_cap).with_max_events(max_events);
    let started = std::time::Instant::now();
    let outcomes = simulate_tree_batch(&profile, cfg, seed, runs);
    let elapsed = started.elapsed();

    let blue: Vec<f64> = outcomes.iter().map(|o| o.blue_count as f64).collect();
    let (mean, stderr) = mean_stderr(&blue);
    let series = truncated_series(&profile, d, depth_cap);
    let aggregate = serde_json::json!({
        "version": chase_escape::VERSION,
        "profile_fingerprint": profile.fingerprint(),
        "d": d,
        "depth_cap": depth_cap,
        "runs": runs,
        "seed": seed,
        "blue_count_mean": mean,
        "blue_count_stderr": stderr,
        "reached_cap_fraction": outcomes.iter().filter(|o| o.reached_cap).count() as f64
            / runs.max(1) as f64,
        "exhausted_runs": outcomes.iter().filter(|o| o.exhausted).count(),
        "mean_events": outcomes.iter().map(|o| o.events).sum::<u64>() as f64
            / runs.max(1) as f64,
        "truncated_series": series,
    });
    eprintln!("simulated {runs} runs in {:.3}s", elapsed.as_secs_f64());

    match format {
        Format::Csv => {
            let mut body = manifest_lines(
                &profile,
                &[
                    ("d", d.to_string()),
                    ("depth_cap", depth_cap.to_string()),
                    ("runs", runs.to_string()),
                    ("seed", seed.to_string()),
                    ("max_events", max_events.to_string()),
                ],
            );
            body.push_str("run,blue_count,reached_cap,max_blue_depth,events,exhausted\n");
            for (run, o) in outcomes.iter().enumerate() {
                body.push_str(&format!(
                    "{run},{},{},{},{},{}\n",
                    o.blue_count,
                    o.reached_cap,
                    o.max_blue_depth.map_or(-1i64, |d| d as i64),
                    o.events,
                    o.exhausted
                ));
            }
            emit(out, &body)?;
            if let Some(path) = summary_out {
                std::fs::write(path, serde_json::to_string_pretty(&aggregate)? + "\n")
                    .with_context(|| format!("cannot write {}", path.display()))?;
            }
        }
        Format::Json => {
            let doc = serde_json::json!({
                "aggregate": aggregate,
                "runs": outcomes,
            });
            emit(out, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
        }
    }
    Ok(0)
}

fn cmd_verify(
    path: &Path,
    budget: Budget,
    seed: u64,
    d: u32,
    format: Format,
) -> anyhow::Result<i32> {
    let profile = load_profile(path)?;
    let report = run_verify(&profile, budget, seed, d);
    match format {
        Format::Csv => print!("{}", report.render()),
        Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(if report.passed() { 0 } else { 1 })
}
