use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use trijunction::experiments::{
    run_blowup, run_convergence, run_rate_fit, run_residual_audit, run_uniqueness, ExperimentConfig, ExperimentKind,
};
use trijunction::par::{init_threads, Exec};

#[derive(Parser)]
#[command(name = "trijunction", version, about = "Phase-field triod experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// sup|u_ε − v_ε| along the ε ladder, with the fitted rate.
    Convergence(Common),
    /// Fit the rate from a stored convergence table.
    RateFit(Common),
    /// Interfaces from two parametrizations of one triod.
    Uniqueness(Common),
    /// Rescaled flow against the expander of the initial rays.
    Blowup(Common),
    /// Regional residual of the glued ansatz.
    ResidualAudit(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `out_dir` of the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; all available cores by default.
    #[arg(long)]
    jobs: Option<usize>,
}

fn load(kind: ExperimentKind, args: &Common) -> Result<ExperimentConfig> {
    let mut cfg =
        ExperimentConfig::load(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    if cfg.experiment != kind {
        bail!("{} configures a {:?} experiment, not {:?}", args.config.display(), cfg.experiment, kind);
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    std::fs::create_dir_all(&cfg.out_dir)?;
    std::fs::write(cfg.out_dir.join("config.toml"), cfg.to_toml()?)?;
    Ok(cfg)
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn run(cli: Cli) -> Result<bool> {
    let (kind, args) = match &cli.command {
        Command::Convergence(a) => (ExperimentKind::Convergence, a),
        Command::RateFit(a) => (ExperimentKind::RateFit, a),
        Command::Uniqueness(a) => (ExperimentKind::Uniqueness, a),
        Command::Blowup(a) => (ExperimentKind::Blowup, a),
        Command::ResidualAudit(a) => (ExperimentKind::ResidualAudit, a),
    };
    if let Some(n) = args.jobs {
        if n == 0 {
            bail!("--jobs must be positive");
        }
        init_threads(n)?;
    }
    let exec = if args.jobs == Some(1) { Exec::Sequential } else { Exec::default() };
    let cfg = load(kind, args)?;
    let pass = match kind {
        ExperimentKind::Convergence => {
            let r = run_convergence(&cfg, exec)?;
            for (row, secs) in r.rows.iter().zip(&r.runtimes) {
                match (row.sup_distance, &row.error) {
                    (Some(d), _) => println!("eps {:<6} sup|u - v| {d:.4e}  ({secs:.1} s)", row.eps),
                    (None, e) => println!("eps {:<6} error: {}", row.eps, e.as_deref().unwrap_or("?")),
                }
            }
            if let Some(f) = &r.fit {
                println!("rate l = {:.3} [{:.3}, {:.3}]", f.l, f.band[0], f.band[1]);
            }
            println!("{} strictly decreasing along the ladder", verdict(r.pass));
            r.pass
        }
        ExperimentKind::RateFit => {
            let f = run_rate_fit(&cfg)?;
            println!("rate l = {:.3} [{:.3}, {:.3}]", f.l, f.band[0], f.band[1]);
            for d in &f.diagnostics {
                println!("  {d}");
            }
            println!("{}", verdict(f.pass));
            f.pass
        }
        ExperimentKind::Uniqueness => {
            let r = run_uniqueness(&cfg, exec)?;
            for e in &r.entries {
                let worst = e.hausdorff.iter().cloned().fold(0.0, f64::max);
                println!(
                    "eps {:<6} max Hausdorff {worst:.3e} (tolerance {:.3e}), control detected {}, bitwise rerun {}",
                    e.eps, e.tolerance, e.control_detected, e.identical_bitwise
                );
            }
            for (eps, e) in &r.errors {
                println!("eps {eps:<6} error: {e}");
            }
            println!("{}", verdict(r.pass));
            r.pass
        }
        ExperimentKind::Blowup => {
            let r = run_blowup(&cfg, exec)?;
            for e in &r.entries {
                println!("beta {:<6} distance {:.4e}", e.beta, e.distance);
            }
            match r.pass {
                Some(p) => {
                    println!("{} monotone along the beta ladder", verdict(p));
                    p
                }
                None => {
                    println!("hypothesis failed: sqrt(t) max|k| = {:.3}", r.sqrt_t_curvature);
                    false
                }
            }
        }
        ExperimentKind::ResidualAudit => {
            let r = run_residual_audit(&cfg, exec)?;
            for rep in &r.reports {
                println!("eps {:<6} total sup {:.4e} duhamel {:.4e}", rep.eps, rep.total_sup, rep.duhamel_sup);
            }
            for f in &r.bounds.fits {
                println!("  {:<20} {:<28} {}", f.region.name(), f.form, verdict(f.pass));
            }
            let pass = r.away_zero && r.core_bounded && r.transition_rate_positive && r.duhamel_decreasing && r.kernel_mass_bound;
            println!("{}", verdict(pass));
            pass
        }
    };
    Ok(pass)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
