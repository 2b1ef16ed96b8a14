use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dgns::cli::{self, ExperimentKind, RunConfig};
use dgns::{Error, Result};

#[derive(Parser)]
#[command(
    name = "dgns",
    version,
    about = "Interior-penalty DG solver for 2D incompressible Navier-Stokes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Manufactured-solution convergence study over a list of meshes.
    Convergence(Overrides),
    /// One manufactured-solution run with VTK output.
    Run(Overrides),
    /// Lid-driven cavity: time marching plus the steady Picard solution.
    Cavity(Overrides),
    /// Steady cavity by Picard iteration only.
    Steady(Overrides),
    /// Seeded property checks of the discrete forms and solver.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct Overrides {
    /// `key = value` configuration file applied over the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Mesh subdivisions per side, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<f64>,
    /// -1 for SIPG, +1 for NIPG.
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<f64>,
    /// `h2` for dt = 1/n^2, or a fixed step.
    #[arg(long)]
    dt_policy: Option<String>,
    /// Fixed time step, same as `--dt-policy <value>`.
    #[arg(long, conflicts_with = "dt_policy")]
    dt: Option<f64>,
    /// Velocity degree.
    #[arg(long)]
    k: Option<usize>,
    /// Pressure degree.
    #[arg(long)]
    kp: Option<usize>,
    #[arg(long)]
    final_time: Option<f64>,
    /// ex1, ex2 or cavity.
    #[arg(long)]
    example: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// exact or interpolant.
    #[arg(long)]
    error_measure: Option<String>,
    /// Any configuration key, as `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Overrides {
    fn resolve(&self, kind: ExperimentKind) -> Result<RunConfig> {
        let mut cfg = RunConfig::preset(kind);
        if let Some(path) = &self.config {
            cfg.apply_text(&std::fs::read_to_string(path)?)?;
            cfg.kind = kind;
        }
        let mut pairs: Vec<(&str, String)> = Vec::new();
        if !self.n.is_empty() {
            pairs.push(("n", self.n.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")));
        }
        for (key, value) in [
            ("mu", self.mu.map(|v| v.to_string())),
            ("sigma", self.sigma.map(|v| v.to_string())),
            ("epsilon", self.eps.map(|v| v.to_string())),
            ("dt", self.dt_policy.clone().or(self.dt.map(|v| v.to_string()))),
            ("velocity_degree", self.k.map(|v| v.to_string())),
            ("pressure_degree", self.kp.map(|v| v.to_string())),
            ("final_time", self.final_time.map(|v| v.to_string())),
            ("example", self.example.clone()),
            ("output", self.output.as_ref().map(|p| p.display().to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("error_measure", self.error_measure.clone()),
        ] {
            if let Some(v) = value {
                pairs.push((key, v));
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects key=value, got `{kv}`")))?;
            pairs.push((k, v.to_string()));
        }
        for (k, v) in pairs {
            cfg.set(k, &v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(command: Command) -> Result<bool> {
    match command {
        Command::Convergence(o) => {
            let cfg = o.resolve(ExperimentKind::Convergence)?;
            let table = cli::run_convergence(&cfg)?;
            println!("errors measured as: {}", cfg.error_measure);
            print!("{}", table.render());
            println!("wrote {}", cfg.output.join("convergence.csv").display());
            Ok(table.all_succeeded())
        }
        Command::Run(o) => {
            let cfg = o.resolve(ExperimentKind::Single)?;
            let r = cli::run_single(&cfg)?;
            println!(
                "n = {}, {} steps, errors ({}): energy {:.4e}  L2 {:.4e}  pressure {:.4e}",
                cfg.meshes[0],
                r.trajectory.steps.len(),
                cfg.error_measure,
                r.errors.energy,
                r.errors.l2,
                r.errors.pressure
            );
            println!("wrote {}", cfg.output.display());
            Ok(true)
        }
        Command::Cavity(o) => {
            let cfg = o.resolve(ExperimentKind::Cavity)?;
            let r = cli::run_cavity(&cfg)?;
            println!("{} time steps to t = {}", r.trajectory.steps.len(), cfg.final_time);
            if let (Some(s), Some(gap)) = (&r.steady, r.relative_gap) {
                println!("Picard iterations: {}", s.iterations);
                println!("relative L2 gap, unsteady vs steady: {gap:.4e}");
            }
            if let Some(w) = &r.warning {
                eprintln!("warning: {w}");
            }
            println!("wrote {}", cfg.output.display());
            Ok(true)
        }
        Command::Steady(o) => {
            let cfg = o.resolve(ExperimentKind::Steady)?;
            let (s, _) = cli::run_steady(&cfg)?;
            println!("Picard converged in {} iterations", s.iterations);
            println!("wrote {}", cfg.output.display());
            Ok(true)
        }
        Command::Verify { seed } => {
            let checks = cli::run_property_suite(seed)?;
            for c in &checks {
                println!("{c}");
            }
            Ok(checks.iter().all(|c| c.passed()))
        }
    }
}

fn main() -> ExitCode {
    let args = Cli::parse();
    match run(args.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
