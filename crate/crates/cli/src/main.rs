use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use fdris_core::experiment::{
    beampattern_svg, dep_curve, run_beampattern, run_optimize, run_sweep, write_beampattern_csv, write_dep_csv,
    write_run, write_sweep_csv, Axis, BeamGrid, BeamSource, GridDim, SweepParam,
};
use fdris_core::optimizer::{Mode, SolverOptions};
use fdris_core::scenario::{resolve_scenario, Scenario};
use fdris_core::dbm_to_watt;

#[derive(Parser)]
#[command(name = "fdris", version, about = "FD-RIS covert communication experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Baseline {
    Conventional,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pattern {
    /// Delays aligned to Bob at linearly spaced frequencies.
    Fdris,
    /// Phase-only alignment towards Bob's direction.
    Conventional,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scheme {
    Fdris,
    Conventional,
}

impl From<Scheme> for Mode {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::Fdris => Mode::FdRis,
            Scheme::Conventional => Mode::Conventional,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Rasterize the normalized beampattern over two coordinates.
    Beampattern {
        /// Preset name (case1, case2, case3) or path to a scenario JSON file.
        #[arg(long)]
        scenario: String,
        /// Two swept axes, e.g. `theta=0:180:1,dist=5:80:0.5` (degrees, metres).
        #[arg(long)]
        grid: String,
        /// Fixed azimuth in degrees when it is not swept.
        #[arg(long)]
        phi: Option<f64>,
        /// Fixed elevation in degrees when it is not swept.
        #[arg(long)]
        theta: Option<f64>,
        /// Fixed distance in metres when it is not swept.
        #[arg(long)]
        dist: Option<f64>,
        #[arg(long, value_enum, default_value = "fdris")]
        pattern: Pattern,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Run the alternating design over Monte Carlo channel draws.
    Optimize {
        #[arg(long)]
        scenario: String,
        #[arg(long, value_enum)]
        baseline: Option<Baseline>,
        #[arg(long)]
        seed: Option<u64>,
        /// Number of channel draws.
        #[arg(long)]
        mc: Option<usize>,
        /// Override the number of surface elements.
        #[arg(long)]
        elements: Option<usize>,
        /// Override the covert requirement.
        #[arg(long)]
        xi: Option<f64>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Sweep one parameter and report mean rate per scheme.
    Sweep {
        #[arg(long)]
        scenario: String,
        #[arg(long, value_parser = ["L", "xi", "dfmax"])]
        param: String,
        /// Comma-separated parameter values (dfmax in Hz).
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
        #[arg(long, value_enum, value_delimiter = ',', default_values = ["fdris", "conventional"])]
        schemes: Vec<Scheme>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        mc: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate the detection error probability over thresholds.
    Dep {
        #[arg(long, default_value_t = 2.0)]
        varsigma: f64,
        /// Nominal warden noise power in dBm.
        #[arg(long, default_value_t = -110.0)]
        sigma2_dbm: f64,
        /// Received covert powers as multiples of the nominal noise power, `start:stop:step`.
        #[arg(long, default_value = "0:2:0.25")]
        omega_grid: String,
        #[arg(long, default_value_t = 101)]
        tau_points: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(spec: &str, seed: Option<u64>, mc: Option<usize>) -> Result<Scenario> {
    let mut scn = resolve_scenario(spec).with_context(|| format!("loading scenario `{spec}`"))?;
    if let Some(s) = seed {
        scn.seed = s;
    }
    if let Some(n) = mc {
        if n == 0 {
            bail!("--mc must be at least 1");
        }
        scn.n_mc = n;
    }
    Ok(scn)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Beampattern { scenario, grid, phi, theta, dist, pattern, out, svg } => {
            let scn = load(&scenario, None, None)?;
            let fixed = match (theta, phi, dist) {
                (Some(t), None, None) => (GridDim::Theta, t),
                (None, Some(p), None) => (GridDim::Phi, p),
                (None, None, Some(d)) => (GridDim::Dist, d),
                _ => bail!("give exactly one of --theta, --phi, --dist for the fixed coordinate"),
            };
            let grid = BeamGrid::parse(&grid, fixed)?;
            let source = match pattern {
                Pattern::Fdris => BeamSource::FdRisAligned,
                Pattern::Conventional => BeamSource::ConventionalAligned,
            };
            let rows = run_beampattern(&scn, &source, &grid)?;
            write_beampattern_csv(&rows, &out)?;
            if let Some(path) = svg {
                std::fs::write(&path, beampattern_svg(&rows, &grid))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Optimize { scenario, baseline, seed, mc, elements, xi, out_dir } => {
            let mut scn = load(&scenario, seed, mc)?;
            if let Some(n) = elements {
                scn = scn.with_elements(n)?;
            }
            if let Some(x) = xi {
                scn = scn.with_xi(x)?;
            }
            let mode = match baseline {
                Some(Baseline::Conventional) => Mode::Conventional,
                None => Mode::FdRis,
            };
            let out = run_optimize(&scn, mode, &SolverOptions::default())?;
            write_run(&out, &out_dir)?;
            println!("{}", serde_json::to_string(&out.aggregate)?);
            for d in out.draws.iter().filter(|d| !d.record.error.is_empty()) {
                eprintln!("draw {}: {}", d.record.draw, d.record.error);
            }
            if out.aggregate.feasible_fraction < 1.0 {
                eprintln!("feasible fraction {} < 1", out.aggregate.feasible_fraction);
                return Ok(ExitCode::FAILURE);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { scenario, param, values, schemes, seed, mc, out } => {
            let scn = load(&scenario, seed, mc)?;
            let param: SweepParam = param.parse()?;
            if values.is_empty() {
                bail!("--values needs at least one value");
            }
            let modes: Vec<Mode> = schemes.into_iter().map(Mode::from).collect();
            let rows = run_sweep(&scn, param, &values, &modes, &SolverOptions::default())?;
            write_sweep_csv(&rows, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Dep { varsigma, sigma2_dbm, omega_grid, tau_points, out } => {
            let sigma2 = dbm_to_watt(sigma2_dbm);
            let omegas: Vec<f64> = Axis::parse(&omega_grid)?.values().into_iter().map(|m| m * sigma2).collect();
            let rows = dep_curve(varsigma, sigma2, &omegas, tau_points)?;
            write_dep_csv(&rows, &out)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
