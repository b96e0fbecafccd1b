use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bench_cli::{
    gap_vs_support_std, gen_synthetic, run_regression_demo, run_scaling, write_epoch_csv,
    write_regression_csv, write_scaling_csv, write_slowdown_csv, Algo, BenchConfig, BenchError,
};

#[derive(Parser)]
#[command(name = "bench-cli", about = "Particle-runtime scaling benchmarks and demos")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Time training epochs across layer widths and particle counts.
    Scale {
        /// Layer widths, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "64")]
        d: Vec<usize>,
        /// Hidden DxD layers per network.
        #[arg(long, default_value_t = 10)]
        layers: usize,
        /// Particle counts, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        particles: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        devices: usize,
        /// Active-set capacity per device.
        #[arg(long, default_value_t = 16)]
        active: usize,
        #[arg(long, default_value_t = 20)]
        epochs: usize,
        #[arg(long, default_value_t = 10)]
        batches: usize,
        #[arg(long, default_value_t = 128)]
        batch_size: usize,
        #[arg(long, default_value = "svgd")]
        algo: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path, or - for stdout.
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Train on a gappy sine wave and emit the predictive summary grid.
    Regress {
        #[arg(long, default_value = "svgd")]
        algo: String,
        #[arg(long, default_value_t = 8)]
        particles: usize,
        #[arg(long, default_value_t = 2000)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path, or - for stdout.
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Quick internal consistency checks.
    Selftest,
}

fn companion(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}_{suffix}.csv"))
}

fn cmd_scale(cfg: &BenchConfig, out: &str) -> Result<(), BenchError> {
    let report = run_scaling(cfg)?;
    if out == "-" {
        write_scaling_csv(&report.rows, &mut io::stdout().lock())?;
    } else {
        let path = Path::new(out);
        write_scaling_csv(&report.rows, &mut File::create(path)?)?;
        write_epoch_csv(&report.epoch_samples, &mut File::create(companion(path, "epochs"))?)?;
        if !report.slowdowns.is_empty() {
            write_slowdown_csv(
                &report.slowdowns,
                &mut File::create(companion(path, "slowdown"))?,
            )?;
        }
        eprintln!("scale: wrote {}", path.display());
    }
    Ok(())
}

fn cmd_regress(
    algo: Algo,
    particles: usize,
    epochs: usize,
    seed: u64,
    out: &str,
) -> Result<(), BenchError> {
    eprintln!("regress: algo={} particles={particles} epochs={epochs}", algo.name());
    let res = run_regression_demo(algo, particles, epochs, seed)?;
    let (gap, support) = gap_vs_support_std(&res);
    eprintln!("regress: mean std in gap {gap:.4}, over support {support:.4}");
    if out == "-" {
        write_regression_csv(&res, &mut io::stdout().lock())?;
    } else {
        write_regression_csv(&res, &mut File::create(out)?)?;
        eprintln!("regress: wrote {out}");
    }
    Ok(())
}

fn cmd_selftest() -> Result<(), BenchError> {
    let mut out = io::stdout().lock();
    let a = gen_synthetic(4, 2, 8, 7);
    let b = gen_synthetic(4, 2, 8, 7);
    if a != b {
        return Err(BenchError::Config("synthetic data is not seed-deterministic".into()));
    }
    writeln!(&mut out, "selftest: synthetic data deterministic ... ok")?;
    let res = run_regression_demo(Algo::Ensemble, 1, 5, 0)?;
    if res.std.iter().any(|&s| s != 0.0) {
        return Err(BenchError::Config("single-particle predictive std must be zero".into()));
    }
    writeln!(&mut out, "selftest: single particle has zero spread ... ok")?;
    let res = run_regression_demo(Algo::Svgd, 2, 5, 0)?;
    if res.per_particle.len() != 2 || res.mean.len() != res.xs.len() {
        return Err(BenchError::Config("regression demo emitted a malformed grid".into()));
    }
    writeln!(&mut out, "selftest: regression grid well formed ... ok")?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), BenchError> {
    match cli.cmd {
        Cmd::Scale {
            d,
            layers,
            particles,
            devices,
            active,
            epochs,
            batches,
            batch_size,
            algo,
            seed,
            out,
        } => {
            let cfg = BenchConfig {
                widths: d,
                layers,
                particles,
                devices,
                active_capacity: active,
                epochs,
                batches,
                batch_size,
                algo: algo.parse()?,
                seed,
            };
            cmd_scale(&cfg, &out)
        }
        Cmd::Regress { algo, particles, epochs, seed, out } => {
            cmd_regress(algo.parse()?, particles, epochs, seed, &out)
        }
        Cmd::Selftest => cmd_selftest(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(BenchError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
