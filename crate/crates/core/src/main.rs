use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mac_swe::cases::CaseName;
use mac_swe::config::{parse_config, with_overrides, OUTPUT_DIR_ENV};
use mac_swe::driver::{convergence, convergence_csv, execute_run, riemann_table};
use mac_swe::io::write_text;
use mac_swe::reconstruct::LimiterConfig;
use mac_swe::schemes::{SchemeError, SchemeKind};
use mac_swe::verify::{identity_suite, lake_at_rest_suite, positivity_suite, LAKE_TOL};

#[derive(Parser)]
#[command(name = "mac-swe", version, about = "Shallow water solver on staggered MAC grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a test case and write snapshots, monitors and a manifest.
    Run {
        /// Configuration file of `key = value` lines.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        case: Option<String>,
        /// Resolution, or a comma-separated list.
        #[arg(long)]
        mesh: Option<String>,
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long, conflicts_with = "t_end")]
        steps: Option<usize>,
        #[arg(long)]
        t_end: Option<f64>,
        /// Output directory; overrides the environment and the config file.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Extra `key=value` settings applied after the config file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Errors and observed orders against an exact solution over a mesh sequence.
    Convergence {
        #[arg(long, default_value = "vortex")]
        case: String,
        #[arg(long, default_value = "heun_muscl")]
        scheme: String,
        #[arg(long, default_value_t = 32)]
        min_mesh: usize,
        #[arg(long, default_value_t = 512)]
        max_mesh: usize,
        #[arg(long)]
        g: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Discrete identity, lake-at-rest and positivity checks on random inputs.
    Verify {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        states: usize,
    },
    /// Numerical against exact profile for the dam-break Riemann problem.
    RiemannTable {
        #[arg(long, default_value_t = 200)]
        cells: usize,
        #[arg(long, default_value = "heun_muscl")]
        scheme: String,
        #[arg(long)]
        entropy_safe: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn output_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("output"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cmd {
        Command::Run { config, case, mesh, scheme, steps, t_end, output, set } => {
            let base = match &config {
                Some(p) => std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?,
                None => String::new(),
            };
            let mut overrides = Vec::new();
            let flags = [("case", case), ("mesh", mesh), ("scheme", scheme), ("steps", steps.map(|s| s.to_string())), ("t_end", t_end.map(|t| t.to_string()))];
            for (k, v) in flags {
                if let Some(v) = v {
                    overrides.push(format!("{k}={v}"));
                }
            }
            overrides.extend(set);
            let mut cfg = parse_config(&with_overrides(&base, &overrides)?)?;
            cfg.apply_env();
            if let Some(dir) = output {
                cfg.output_dir = dir;
            }
            let mut ok = true;
            for &n in &cfg.meshes.clone() {
                let s = match execute_run(&cfg, n) {
                    Ok(s) => s,
                    Err(mac_swe::driver::DriverError::Scheme(e @ SchemeError::NonFinite { .. })) => {
                        println!("{} n={n}: FAILED {e}", cfg.case);
                        ok = false;
                        continue;
                    }
                    Err(e) => return Err(e.into()),
                };
                println!(
                    "{} n={n} cells={}x{} scheme={} steps={} t={:.6} max_mass_drift={:.3e} floor_events={} min_h={:.6e} max_u={:.6e}",
                    s.case, s.cells.0, s.cells.1, cfg.scheme, s.steps, s.time, s.max_mass_drift, s.floor_events, s.min_h, s.max_u
                );
                if let Some((eh, eu)) = s.error {
                    println!("  err_h={eh:.6e} err_u={eu:.6e}");
                }
                if let Some((surf, vel)) = s.lake {
                    let pass = surf <= LAKE_TOL && vel <= LAKE_TOL;
                    println!("  lake: max|h+z-1|={surf:.3e} max|u|={vel:.3e} {}", if pass { "PASS" } else { "FAIL" });
                    ok &= pass;
                }
                log::info!("wrote {} files to {}", s.files.len(), cfg.output_dir.display());
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Convergence { case, scheme, min_mesh, max_mesh, g, output } => {
            let case: CaseName = case.parse()?;
            let kind: SchemeKind = scheme.parse()?;
            if min_mesh == 0 || max_mesh < min_mesh {
                return Err("need 0 < min-mesh <= max-mesh".into());
            }
            let meshes: Vec<usize> = std::iter::successors(Some(min_mesh), |n| Some(n * 2)).take_while(|&n| n <= max_mesh).collect();
            let rows = convergence(case, kind, &meshes, g, |_| {})?;
            let csv = convergence_csv(&rows);
            print!("{csv}");
            let path = output_dir(output).join(format!("convergence_{case}_{kind}.csv"));
            write_text(&path, &csv)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { seed, states } => {
            let mut ok = true;
            let mut line = |name: &str, pass: bool, detail: String| {
                println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
                ok &= pass;
            };
            let id = identity_suite(states, seed, 64);
            line(
                "identities",
                id.passes(),
                format!("{} states, duality {:.2e}, dual mass {:.2e}, kinetic {:.2e}, potential {:.2e}", id.states, id.duality, id.dual_mass, id.kinetic, id.potential),
            );
            match lake_at_rest_suite(100, seed) {
                Ok(lake) => line("lake at rest", lake.passes(), format!("{} runs, surface {:.2e}, velocity {:.2e}", lake.runs, lake.surface, lake.velocity)),
                Err(e) => line("lake at rest", false, e.to_string()),
            }
            let pos = positivity_suite(5 * states, seed, 32);
            line(
                "positivity",
                pos.passes(),
                format!(
                    "{} states, euler failures {}, heun failures {}, min ratios {:.3} / {:.3}",
                    pos.states, pos.euler_failures, pos.heun_failures, pos.euler_min_ratio, pos.heun_min_ratio
                ),
            );
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::RiemannTable { cells, scheme, entropy_safe, output } => {
            let kind: SchemeKind = scheme.parse()?;
            let (csv, m) = riemann_table(cells, kind, LimiterConfig::muscl().entropy_safe(entropy_safe))?;
            let path = output_dir(output).join(format!("riemann_{kind}_{cells}.csv"));
            write_text(&path, &csv)?;
            println!("table: {}", path.display());
            println!(
                "l1_h={:.6e} shock_cells={} plateau_h={:.3e} plateau_u={:.3e} plateau_cells={}",
                m.l1_h, m.shock_cells, m.plateau_h, m.plateau_u, m.plateau_cells
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}
