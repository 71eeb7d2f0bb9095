use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tdscf::harness::expr::parse_list;
use tdscf::harness::{
    converge, limit_compare, preset, write_artifacts, write_limit, write_sweep, ExperimentConfig, ReferenceCache,
    ReferencePolicy, RunOutcome, Vary,
};
use tdscf::{Error, Result};

#[derive(Parser)]
#[command(name = "tdscf", version, about = "Semiclassical TDSCF and Ehrenfest experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its trajectory, profiles and final snapshot.
    Run {
        #[command(flatten)]
        base: BaseArgs,
        /// Output directory (default: output/<preset>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convergence sweep over one parameter against a reference solution.
    Converge {
        #[command(flatten)]
        base: BaseArgs,
        #[arg(long)]
        vary: Vary,
        /// Comma-separated values; expressions such as `0.4/64` are allowed.
        #[arg(long)]
        values: String,
        /// `auto` (refined run), `finest` (finest sweep value), a snapshot
        /// `.bin` file or a config file describing the reference run.
        #[arg(long, default_value = "auto")]
        reference: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for cached reference snapshots.
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Distances between quantum densities and their classical limit.
    LimitCompare {
        #[command(flatten)]
        base: BaseArgs,
        #[arg(long)]
        epsilons: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct BaseArgs {
    /// example1, example2, example3 or example4.
    #[arg(long)]
    preset: Option<String>,
    /// Use the published parameters instead of the desk-scale defaults.
    #[arg(long)]
    paper_scale: bool,
    /// JSON or `key = value` file applied on top of the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    kx: Option<String>,
    #[arg(long)]
    ky: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    tfinal: Option<String>,
    #[arg(long)]
    solver: Option<String>,
    /// Any other parameter, as `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

impl BaseArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.preset {
            Some(name) => preset(name, self.paper_scale)?,
            None if self.config.is_some() => ExperimentConfig::default(),
            None => return Err(Error::Config("give --preset or --config".into())),
        };
        if let Some(path) = &self.config {
            cfg = ExperimentConfig::load(path, cfg)?;
        }
        let flags = [
            ("epsilon", &self.epsilon),
            ("delta", &self.delta),
            ("kx", &self.kx),
            ("ky", &self.ky),
            ("dt", &self.dt),
            ("t_final", &self.tfinal),
            ("solver", &self.solver),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        for kv in &self.sets {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn default_dir(cfg: &ExperimentConfig, out: Option<PathBuf>, suffix: &str) -> PathBuf {
    out.or_else(|| cfg.output.clone())
        .unwrap_or_else(|| Path::new("output").join(format!("{}{suffix}", cfg.name)))
}

fn reference_policy(choice: &str, base: &ExperimentConfig) -> Result<ReferencePolicy> {
    match choice {
        "auto" => Ok(ReferencePolicy::Refined),
        "finest" => Ok(ReferencePolicy::FinestRun),
        path => {
            let path = PathBuf::from(path);
            let bytes = std::fs::read(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            if bytes.starts_with(b"TDSCF1") {
                Ok(ReferencePolicy::Snapshot(path))
            } else {
                Ok(ReferencePolicy::Config(Box::new(ExperimentConfig::load(&path, base.clone())?)))
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { base, out } => {
            let mut cfg = base.resolve()?;
            let dir = default_dir(&cfg, out, "");
            cfg.output = Some(dir.clone());
            let outcome = tdscf::harness::execute(&cfg)?;
            let files = write_artifacts(&cfg, &outcome, &dir)?;
            match &outcome {
                RunOutcome::Tdscf(r) => {
                    if let Some(last) = r.records.last() {
                        println!("t = {}  m1 = {:.15}  m2 = {:.15}  E = {:.12e}", last.t, last.m1, last.m2, last.energy);
                    }
                }
                RunOutcome::Ehrenfest(r) => {
                    if let Some(last) = r.records.last() {
                        println!(
                            "t = {}  m1 = {:.15}  E = {:.12e}  y = {:.12e}  eta = {:.12e}",
                            last.t, last.m1, last.energy, last.y, last.eta
                        );
                    }
                }
                RunOutcome::Classical { ens_x, ens_y } => {
                    println!("{} + {} particles transported", ens_x.len(), ens_y.len());
                }
                RunOutcome::Mixed { ens_y, .. } => println!("{} particles transported", ens_y.len()),
            }
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Command::Converge {
            base,
            vary,
            values,
            reference,
            out,
            cache,
        } => {
            let cfg = base.resolve()?;
            let values = parse_list(&values)?;
            let policy = reference_policy(&reference, &cfg)?;
            let cache = cache.map(ReferenceCache::new);
            let result = converge(&cfg, vary, &values, &policy, cache.as_ref())?;
            println!("{:>14} {:>14} {:>14} {:>14}", vary.to_string(), "err_wf", "err_rho", "err_J");
            for r in &result.rows {
                println!("{:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e}", r.param, r.err_wf, r.err_rho, r.err_j);
            }
            for (name, fit) in [("wf", result.fit_wf), ("rho", result.fit_rho), ("J", result.fit_j)] {
                if let Some(f) = fit {
                    println!("order[{name}] = {:.3} (residual {:.3})", f.order, f.residual);
                }
            }
            let dir = default_dir(&cfg, out, &format!("_converge_{vary}"));
            let (s, f) = write_sweep(&dir, &result)?;
            println!("wrote {}\nwrote {}", s.display(), f.display());
        }
        Command::LimitCompare { base, epsilons, out } => {
            let cfg = base.resolve()?;
            let eps = parse_list(&epsilons)?;
            let rows = limit_compare(&cfg, &eps)?;
            println!(
                "{:>12} {:>8} {:>14} {:>14} {:>14} {:>14}",
                "epsilon", "n", "rho_phi_fine", "rho_phi_coarse", "quantum_gap", "cl_refine"
            );
            for r in &rows {
                println!(
                    "{:>12.6e} {:>8} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e}",
                    r.epsilon, r.n, r.rho_phi_fine, r.rho_phi_coarse, r.quantum_gap, r.classical_refinement
                );
            }
            let path = default_dir(&cfg, out, "_limit").join("limit.csv");
            write_limit(&path, &rows)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                _ if e.is_numerical() => ExitCode::from(3),
                Error::Io { .. } => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
