//! `chrelax`: validate feeders, solve and compare relaxations, check hull
//! tightness and generate synthetic instances.
//!
//! Exit codes: 0 success, 1 invalid input or flags, 2 solver failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, CommandFactory, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use chrelax::conic::SolverSettings;
use chrelax::desos::{ObjectiveKind, RelaxKind};
use chrelax::feeder::{gen_instance, load_feeder, save_feeder, validate_radial, InstanceSpec, PriceShape};
use chrelax::hull::{random_directions, sample_omega0, sample_omega0_stratified, sampled_support, support, BranchBounds, BranchHull};
use chrelax::report::{compare, plot_data, CompareOptions, Format};
use chrelax::Feeder64;

#[derive(Parser)]
#[command(name = "chrelax", version, about = "Convex relaxations of radial power flow with storage scheduling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a feeder file parses and is radial.
    Validate { feeder: PathBuf },
    /// Solve one relaxation and report exactness.
    Solve {
        feeder: PathBuf,
        #[arg(long, default_value = "ch")]
        relax: RelaxKind,
        /// Also write per-period voltage, energy and price data as long-format CSV.
        #[arg(long)]
        plot_data: Option<PathBuf>,
        #[command(flatten)]
        common: SolveArgs,
    },
    /// Solve several relaxations of the same problem side by side.
    Compare {
        feeder: PathBuf,
        /// Comma-separated list.
        #[arg(long, value_delimiter = ',', default_value = "socp,ch")]
        relax: Vec<RelaxKind>,
        #[command(flatten)]
        common: SolveArgs,
    },
    /// Compare hull support against sampled support over random directions.
    HullCheck {
        #[arg(long, default_value_t = 200)]
        directions: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0.81)]
        v_min: f64,
        #[arg(long, default_value_t = 1.21)]
        v_max: f64,
        #[arg(long, default_value_t = 1.0)]
        v_nom: f64,
        #[arg(long, default_value_t = 1.0)]
        s_max: f64,
        /// Sample the set uniformly instead of spreading points over its
        /// faces and corner loci as well.
        #[arg(long)]
        uniform: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a seeded synthetic feeder.
    GenInstance {
        #[arg(long)]
        buses: usize,
        /// Installed PV over peak demand.
        #[arg(long, default_value_t = 0.5)]
        penetration: f64,
        /// Single rated period instead of a 24-hour day.
        #[arg(long)]
        snapshot: bool,
        /// Flat price in $/MWh; defaults to −30 for snapshots and a daily curve otherwise.
        #[arg(long, allow_negative_numbers = true)]
        price: Option<f64>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, default_value = "f2")]
    objective: ObjectiveKind,
    /// Use period 0 only and drop the energy window.
    #[arg(long)]
    snapshot: bool,
    #[arg(long, default_value = "csv")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

enum Failure {
    Input(anyhow::Error),
    Solver(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

fn write_output(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .context("writing to stdout"),
    }
}

fn load(path: &Path) -> anyhow::Result<Feeder64> {
    load_feeder(path).with_context(|| format!("loading {}", path.display()))
}

fn settings(tol: f64) -> anyhow::Result<SolverSettings<f64>> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(anyhow!("--tol must be in (0, 1), got {tol}"));
    }
    Ok(SolverSettings::with_tol(tol))
}

fn options(feeder: &Path, args: &SolveArgs) -> anyhow::Result<CompareOptions<f64>> {
    let mut opts = CompareOptions::new(feeder.display().to_string());
    opts.snapshot = args.snapshot;
    opts.settings = settings(args.tol)?;
    Ok(opts)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { feeder } => {
            let text = std::fs::read_to_string(&feeder)
                .with_context(|| format!("reading {}", feeder.display()))?;
            let data = chrelax::feeder::parse_feeder::<f64>(&text);
            match data {
                Ok(f) => {
                    debug_assert!(validate_radial(f.data()).is_empty());
                    println!("radial: OK");
                    println!(
                        "buses: {}, branches: {}, storage units: {}, horizon: {}",
                        f.n_buses(),
                        f.n_branches(),
                        f.des_units.len(),
                        f.horizon()
                    );
                    Ok(())
                }
                Err(e) => Err(Failure::Input(anyhow!(e).context(format!("{} is invalid", feeder.display())))),
            }
        }
        Command::Solve {
            feeder,
            relax,
            plot_data: plot,
            common,
        } => {
            let f = load(&feeder)?;
            let opts = options(&feeder, &common)?;
            let table = compare(&f, common.objective, &[relax], &opts).map_err(|e| anyhow!(e))?;
            write_output(common.out.as_deref(), &table.render(common.format))?;
            if let Some(path) = plot {
                let sol = chrelax::desos::solve_desos(&f, common.objective, relax, common.snapshot, &opts.settings)
                    .map_err(|e| anyhow!(e))?;
                if let Some(state) = &sol.state {
                    write_output(Some(path.as_path()), &plot_data(&sol.problem.feeder, state))?;
                }
            }
            let row = &table.rows[0];
            if row.oov.is_none() {
                return Err(Failure::Solver(format!("{} relaxation: {}", row.relax, row.status)));
            }
            Ok(())
        }
        Command::Compare { feeder, relax, common } => {
            let f = load(&feeder)?;
            let opts = options(&feeder, &common)?;
            let table = compare(&f, common.objective, &relax, &opts).map_err(|e| anyhow!(e))?;
            write_output(common.out.as_deref(), &table.render(common.format))?;
            let failed: Vec<String> = table
                .rows
                .iter()
                .filter(|r| r.oov.is_none())
                .map(|r| format!("{}: {}", r.relax, r.status))
                .collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(Failure::Solver(failed.join(", ")))
            }
        }
        Command::HullCheck {
            directions,
            samples,
            seed,
            v_min,
            v_max,
            v_nom,
            s_max,
            uniform,
            out,
        } => {
            if samples == 0 {
                return Err(anyhow!("--samples must be at least 1").into());
            }
            let bounds = BranchBounds {
                v_min,
                v_max,
                v_nom,
                s_max,
                l_max: s_max * s_max / v_nom,
            };
            let hull = BranchHull::new(bounds).map_err(|e| anyhow!(e))?;
            let points = if uniform {
                sample_omega0(&bounds, samples, seed)
            } else {
                sample_omega0_stratified(&bounds, samples, seed)
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
            let dirs = random_directions::<f64>(directions, &mut rng);
            let mut csv = String::from("d_p,d_q,d_l,d_v,hull_support,sample_support,gap\n");
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for d in &dirs {
                let h = support(&hull, d).map_err(|e| Failure::Solver(e.to_string()))?;
                let s = sampled_support(d, &points).map_err(|e| anyhow!(e))?;
                let gap = h - s;
                lo = lo.min(gap);
                hi = hi.max(gap);
                csv.push_str(&format!(
                    "{:.5e},{:.5e},{:.5e},{:.5e},{:.5e},{:.5e},{:.5e}\n",
                    d[0], d[1], d[2], d[3], h, s, gap
                ));
            }
            write_output(out.as_deref(), &csv)?;
            eprintln!("directions: {directions}, samples: {samples}, min gap: {lo:.5e}, max gap: {hi:.5e}");
            Ok(())
        }
        Command::GenInstance {
            buses,
            penetration,
            snapshot,
            price,
            seed,
            out,
        } => {
            let mut spec = if snapshot {
                InstanceSpec::snapshot(buses, penetration)
            } else {
                InstanceSpec::daily(buses, penetration)
            };
            if let Some(c) = price {
                spec.price = PriceShape::Flat(c);
            }
            let f: Feeder64 = gen_instance(&spec, seed).map_err(|e| anyhow!(e))?;
            match out {
                Some(p) => save_feeder(&f, &p).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{}", chrelax::feeder::to_json(&f)),
            }
            Ok(())
        }
    }
}

/// Joins the error chain, skipping causes whose text a wrapper already embeds.
fn render_chain(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if out.contains(&text) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&text);
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if !e.use_stderr() {
                // --help and --version
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.render().to_string();
            eprint!("{msg}");
            if !msg.contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {}", render_chain(&e));
            ExitCode::from(1)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver failure: {msg}");
            ExitCode::from(2)
        }
    }
}
