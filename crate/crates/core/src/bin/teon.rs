use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use teon::harness::check::run_checks;
use teon::harness::{run, sweep, RunConfig};
use teon::linalg::Mode;
use teon::norms::{build_max_gain_tensor, norm, NormKind};
use teon::{Result, Tensor3, TeonError};

#[derive(Parser)]
#[command(name = "teon", version, about = "TEON and Muon optimizer experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one config and write metrics.csv and alignment.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's out_dir or `out`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every *.toml in a directory and write summary.csv.
    Sweep {
        #[arg(long)]
        config_dir: PathBuf,
        #[arg(long, default_value = "sweep-out")]
        out: PathBuf,
    },
    /// Run the invariant suite.
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build the rank-one maximal-gain tensor and print its norms.
    ConstructMaxgain {
        #[arg(long, default_value_t = 8)]
        m: usize,
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long = "K", default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        mode: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train a small attention stack with TEON and record alignment.
    AlignDemo {
        #[arg(long, default_value = "micro_attention")]
        task: String,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, default_value_t = 20)]
        every: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "align-demo")]
        out: PathBuf,
    },
}

fn construct(m: usize, n: usize, k: usize, mode: u8, seed: u64) -> Result<()> {
    let mode = Mode::try_from(mode)?;
    let t: Tensor3 = build_max_gain_tensor(m, n, k, mode, seed)?;
    let muon = norm(&t, NormKind::MUON)?;
    let muon_dual = norm(&t, NormKind::MUON_DUAL)?;
    println!("m={m}\nn={n}\nK={k}\nmode={mode}\nseed={seed}");
    println!("muon={muon:.16e}\nmuon_dual={muon_dual:.16e}");
    for other in [Mode::One, Mode::Two] {
        let primal = norm(&t, NormKind::teon(other))?;
        let dual = norm(&t, NormKind::teon_dual(other))?;
        println!("teon{other}={primal:.16e}\nteon{other}_dual={dual:.16e}");
        println!("teon{other}_over_muon={:.16e}", primal / muon);
        println!("muon_dual_over_teon{other}_dual={:.16e}", muon_dual / dual);
    }
    println!("sqrt_k={:.16e}", (k as f64).sqrt());
    Ok(())
}

fn align_demo(task: &str, steps: usize, every: u64, seed: u64, out: &Path) -> Result<()> {
    if task != "micro_attention" {
        return Err(TeonError::Contract(format!("align-demo supports micro_attention, got `{task}`")));
    }
    let text = format!(
        "steps = {steps}\nseed = {seed}\n[task]\nkind = \"micro_attention\"\nblocks = 3\n\
         [optimizer]\noptimizer = \"teon\"\nmode = 1\neta = 0.02\n[alignment]\nevery = {every}\n"
    );
    let config = RunConfig::parse(&text, Path::new("align-demo"))?;
    let outcome = run(&config, out)?;
    println!("alignment_records={}", outcome.alignment.len());
    println!("alignment_csv={}", out.join("alignment.csv").display());
    Ok(())
}

fn dispatch(command: Command) -> Result<bool> {
    match command {
        Command::Run { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let out = out.or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
            let outcome = run(&cfg, &out)?;
            for (key, value) in outcome.summary.records() {
                println!("{key}={value}");
            }
            Ok(true)
        }
        Command::Sweep { config_dir, out } => {
            let rows = sweep(&config_dir, &out)?;
            let failed = rows.iter().filter(|r| r.result.is_err()).count();
            println!("runs={}\nfailed={failed}", rows.len());
            println!("summary_csv={}", out.join("summary.csv").display());
            Ok(true)
        }
        Command::Check { seed } => {
            let results = run_checks(seed);
            for r in &results {
                println!("{r}");
            }
            Ok(results.iter().all(|r| r.passed))
        }
        Command::ConstructMaxgain { m, n, k, mode, seed } => construct(m, n, k, mode, seed).map(|_| true),
        Command::AlignDemo { task, steps, every, seed, out } => align_demo(&task, steps, every, seed, &out).map(|_| true),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
