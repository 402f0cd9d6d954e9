use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use trilinear::scenario::{figure, run_scenario, Figure, FigureOptions, ScenarioConfig};
use trilinear::Error;

#[derive(Parser)]
#[command(
    name = "trilinear",
    version,
    about = "Pump/signal/idler dynamics of the trilinear boson Hamiltonian"
)]
struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single scenario and write CSV plus a JSON sidecar.
    Run(RunArgs),
    /// Regenerate the data behind one figure.
    Figure {
        /// fig2, fig3, fig4, fig5 or fig6
        name: String,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Grid spacing for the time series.
        #[arg(long)]
        d_tau: Option<f64>,
    },
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct RunArgs {
    /// Flat key=value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    pump: Option<String>,
    #[arg(long)]
    n_a0: Option<String>,
    #[arg(long)]
    tau_max: Option<String>,
    #[arg(long)]
    d_tau: Option<String>,
    #[arg(long)]
    cutoff: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    outputs: Option<String>,
    #[arg(long)]
    integrator: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

impl RunArgs {
    fn overrides(&self) -> Vec<(String, String)> {
        [
            ("solver", &self.solver),
            ("pump", &self.pump),
            ("n_a0", &self.n_a0),
            ("tau_max", &self.tau_max),
            ("d_tau", &self.d_tau),
            ("cutoff", &self.cutoff),
            ("tol", &self.tol),
            ("outputs", &self.outputs),
            ("integrator", &self.integrator),
            ("out_path", &self.out),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
        .collect()
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(args) => {
            let cfg = ScenarioConfig::load(args.config.as_deref(), &args.overrides())?;
            let Some(out) = cfg.out_path.clone() else {
                return Err(Error::Config {
                    key: "out_path".into(),
                    reason: "missing required field (use --out)".into(),
                });
            };
            let output = run_scenario(&cfg)?;
            eprintln!("wrote {} rows to {}", output.rows.len(), out.display());
        }
        Command::Figure {
            name,
            out_dir,
            d_tau,
        } => {
            let fig: Figure = name.parse()?;
            let mut opts = FigureOptions::default();
            if let Some(d) = d_tau {
                if d.is_nan() || d <= 0.0 {
                    return Err(Error::Config {
                        key: "d_tau".into(),
                        reason: "must be > 0".into(),
                    });
                }
                opts.d_tau = d;
            }
            for path in figure(fig, &out_dir, &opts)? {
                eprintln!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(3);
        }
    };
    match pool.install(|| execute(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
