use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use orbitframe_cli::identities::{table, verify_identities};
use orbitframe_cli::report::{heatmap_csv, write_file};
use orbitframe_cli::runner::{covering_map, frame_system};
use orbitframe_cli::{list_scenarios, resolve, run, EXIT_INVALID};

#[derive(Parser)]
#[command(name = "orbitframe", version, about = "Orbit wavelet frames: certify, build and test")]
struct Cli {
    /// Worker threads for the parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print machine-readable JSON instead of tables.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write report.json, bounds.csv and covering_heatmap.csv.
    Run {
        /// Scenario file, or the name of a bundled scenario.
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value = "orbitframe-out")]
        out: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the bundled scenarios.
    List {
        /// Keep rows whose name, family or description contains this.
        filter: Option<String>,
    },
    /// Check the algebraic identities of the group families.
    VerifyIdentities {
        /// similitude, lorentz_an, triangular_q, sl2_lower or all.
        #[arg(long, default_value = "all")]
        family: String,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Dump a frame vector or the covering multiplicity map as CSV.
    EmitGrid {
        #[arg(long)]
        scenario: String,
        #[arg(long, value_enum, default_value_t = What::FrameVector)]
        what: What,
        /// Lattice index of the dilation (default: first active one).
        #[arg(long)]
        index: Option<usize>,
        /// Modulation index, comma separated (default: 0).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        mode: Vec<i64>,
        #[arg(long, default_value = "orbitframe-out")]
        out: PathBuf,
    },
    /// Print a scenario in canonical form.
    Normalize {
        #[arg(long)]
        scenario: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    FrameVector,
    Covering,
}

fn invalid(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_INVALID as u8)
}

fn frame_vector_csv(g: &orbitframe::frame_engine::GridFunction) -> String {
    let mut out = String::new();
    for i in 0..g.grid.dim() {
        out.push_str(&format!("w{i},"));
    }
    out.push_str("re,im,abs\n");
    for (j, v) in g.values.iter().enumerate() {
        for w in g.grid.point(j) {
            out.push_str(&format!("{w},"));
        }
        let v: &Complex64 = v;
        out.push_str(&format!("{},{},{}\n", v.re, v.im, v.norm()));
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return invalid(e);
        }
    }
    match cli.command {
        Command::Run { scenario, out, seed } => {
            let mut s = match resolve(&scenario) {
                Ok(s) => s,
                Err(e) => return invalid(e),
            };
            if let Some(seed) = seed {
                s.seed = seed;
            }
            let output = match run(&s) {
                Ok(o) => o,
                Err(e) => return invalid(e),
            };
            if let Err(e) = output.write(&out) {
                return invalid(format!("{}: {e}", out.display()));
            }
            if cli.json {
                print!("{}", output.report.to_json());
            } else {
                print!("{}", output.report.table());
                println!("reports written to {}", out.display());
            }
            ExitCode::from(output.report.outcome.exit_code() as u8)
        }
        Command::List { filter } => {
            let rows = list_scenarios(filter.as_deref());
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&rows).expect("rows serialize"));
            } else {
                print!("{}", orbitframe_cli::bundled::list_table(&rows));
            }
            ExitCode::SUCCESS
        }
        Command::VerifyIdentities { family, count, seed } => {
            let rows = match verify_identities(&family, count, seed) {
                Ok(r) => r,
                Err(e) => return invalid(e),
            };
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&rows).expect("rows serialize"));
            } else {
                print!("{}", table(&rows));
            }
            if rows.iter().all(|r| r.pass) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Command::EmitGrid {
            scenario,
            what,
            index,
            mode,
            out,
        } => {
            let s = match resolve(&scenario) {
                Ok(s) => s,
                Err(e) => return invalid(e),
            };
            let (name, text) = match what {
                What::Covering => match covering_map(&s) {
                    Ok(m) => ("covering_heatmap.csv", heatmap_csv(&m)),
                    Err(e) => return invalid(e),
                },
                What::FrameVector => {
                    let sys = match frame_system(&s) {
                        Ok(sys) => sys,
                        Err(e) => return invalid(e),
                    };
                    let Some(idx) = index.or_else(|| sys.active_lattice().first().copied()) else {
                        return invalid("no lattice element reaches the grid");
                    };
                    let m = if mode.is_empty() { vec![0; sys.grid.dim()] } else { mode };
                    match sys.frame_vector_hat(idx, &m) {
                        Ok(g) => ("frame_vector.csv", frame_vector_csv(&g)),
                        Err(e) => return invalid(e),
                    }
                }
            };
            if let Err(e) = write_file(&out, name, &text) {
                return invalid(format!("{}: {e}", out.display()));
            }
            println!("{}", out.join(name).display());
            ExitCode::SUCCESS
        }
        Command::Normalize { scenario } => {
            let s = match resolve(&scenario) {
                Ok(s) => s,
                Err(e) => return invalid(e),
            };
            print!("{}", s.to_toml());
            ExitCode::SUCCESS
        }
    }
}
