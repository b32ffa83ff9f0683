use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use weertman::acceptance;
use weertman::config::RunConfig;
use weertman::error::Result;
use weertman::halflap;
use weertman::pipeline;

#[derive(Parser)]
#[command(
    name = "weertman",
    about = "Spectral exponential-integrator solver for the Weertman traveling-wave problem",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// TOML configuration file (defaults are used when omitted).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Dotted-key override, e.g. --set evolve.dt=0.005 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline: evolve, then analyze and squeeze-test as configured.
    Evolve(CommonArgs),
    /// Re-run the analysis stage over an existing output directory.
    Analyze(CommonArgs),
    /// Compare the spectral half-Laplacian against the quadrature oracle.
    OperatorCheck(CommonArgs),
    /// Re-run the sub/super-solution check over an existing output directory.
    SqueezeTest(CommonArgs),
    /// Run the full acceptance suite and print one line per criterion.
    AllAcceptance(CommonArgs),
}

impl CommonArgs {
    fn effective_sets(&self) -> Vec<String> {
        let mut sets = self.sets.clone();
        if let Some(seed) = self.seed {
            sets.push(format!("seed={seed}"));
        }
        if let Some(out) = &self.out {
            sets.push(format!("output.directory=\"{}\"", out.display()));
        }
        sets
    }

    fn load_config(&self) -> Result<RunConfig> {
        RunConfig::load(self.config.as_deref(), &self.effective_sets())
    }

    fn out_dir(&self, cfg: &RunConfig) -> PathBuf {
        self.out
            .clone()
            .unwrap_or_else(|| PathBuf::from(&cfg.output.directory))
    }
}

fn cmd_evolve(args: &CommonArgs) -> Result<()> {
    let cfg = args.load_config()?;
    let out = args.out_dir(&cfg);
    let artifacts = pipeline::run_pipeline(&cfg, &out)?;
    if let Some(report) = &artifacts.analysis {
        println!(
            "c_tracking = {:+.6e}, residual = {:.3e}, outputs in {}",
            report.c_tracking,
            report.residual,
            out.display()
        );
    } else {
        println!("run complete, outputs in {}", out.display());
    }
    if let Some(sq) = &artifacts.squeeze {
        if !sq.passed {
            return Err(weertman::Error::InvalidInput(format!(
                "sub/super-solution residual check failed: min {} < -{}",
                sq.min_signed_residual, sq.tolerance
            ))
            .in_stage("squeeze-test"));
        }
    }
    Ok(())
}

fn cmd_analyze(args: &CommonArgs) -> Result<()> {
    let cfg = args.load_config()?;
    let out = args.out_dir(&cfg);
    let report = pipeline::analyze_directory(&out, &args.effective_sets())?;
    println!(
        "c_tracking = {:+.6e}, c_idc1 = {:+.6e}, c_idc2 = {:+.6e}",
        report.c_tracking, report.c_idc1, report.c_idc2
    );
    Ok(())
}

fn cmd_squeeze_test(args: &CommonArgs) -> Result<()> {
    let cfg = args.load_config()?;
    let out = args.out_dir(&cfg);
    let summary = pipeline::squeeze_directory(&out, &args.effective_sets())?;
    println!(
        "{}: min signed residual {:+.3e} (tolerance {:.3e})",
        if summary.passed { "PASS" } else { "FAIL" },
        summary.min_signed_residual,
        summary.tolerance
    );
    if summary.passed {
        Ok(())
    } else {
        Err(weertman::Error::InvalidInput(
            "sub/super-solution residual check failed".into(),
        )
        .in_stage("squeeze-test"))
    }
}

/// Spectral-vs-oracle comparison table for the half-Laplacian on two
/// concentrated profiles: a Poisson kernel and a front derivative.
fn cmd_operator_check(args: &CommonArgs) -> Result<()> {
    let cfg = args.load_config()?;
    let grid = cfg.build_grid()?;
    let l = grid.half_length();
    let threshold = 1e-6_f64.max(5.0 / l);

    let mut csv = String::from("x,spectral,oracle,abs_err\n");
    let mut max_err = 0.0f64;
    let profiles: [(&str, Box<dyn Fn(f64) -> f64>); 2] = [
        ("poisson", Box::new(|x: f64| 1.0 / (PI * (1.0 + x * x)))),
        (
            "front",
            Box::new(|x: f64| 0.5 + (0.7 * x).atan() / PI),
        ),
    ];
    for (name, f) in &profiles {
        let samples: Vec<f64> = grid.points().iter().map(|&x| f(x)).collect();
        let spectral = halflap::apply_spectral(&grid, &samples)?;
        let limits = if *name == "front" {
            Some((0.0, 1.0))
        } else {
            Some((0.0, 0.0))
        };
        for i in 0..17 {
            let x_target = -l / 2.0 + l * i as f64 / 16.0;
            let j = ((x_target + l) / grid.spacing()).round() as usize % grid.n_points();
            let x = grid.points()[j];
            let oracle = halflap::oracle_pv(f, x, 1e4, 4000, limits)?.value;
            let err = (spectral[j] - oracle).abs();
            max_err = max_err.max(err);
            csv.push_str(&format!(
                "{:.15e},{:.15e},{:.15e},{:.15e}\n",
                x, spectral[j], oracle, err
            ));
        }
    }
    print!("{csv}");
    if let Some(out) = &args.out {
        pipeline::write_atomic(&out.join("operator_check.csv"), &csv)?;
    }
    eprintln!("max abs_err = {max_err:.3e} (threshold {threshold:.3e})");
    if max_err <= threshold {
        Ok(())
    } else {
        Err(weertman::Error::InvalidInput(format!(
            "operator check failed: max abs_err {max_err:.3e} > {threshold:.3e}"
        ))
        .in_stage("operator-check"))
    }
}

fn cmd_all_acceptance(args: &CommonArgs) -> Result<()> {
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| std::env::temp_dir().join("weertman-acceptance"));
    let outcomes = acceptance::run_all(&out)?;
    let mut all_pass = true;
    for o in &outcomes {
        println!("{o}");
        all_pass &= o.passed;
    }
    if all_pass {
        println!("all {} criteria passed", outcomes.len());
        Ok(())
    } else {
        Err(weertman::Error::InvalidInput("acceptance criteria failed".into())
            .in_stage("all-acceptance"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Evolve(args) => cmd_evolve(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::OperatorCheck(args) => cmd_operator_check(args),
        Command::SqueezeTest(args) => cmd_squeeze_test(args),
        Command::AllAcceptance(args) => cmd_all_acceptance(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
