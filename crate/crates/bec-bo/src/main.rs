use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bec_bo::campaign::{self, RunOutcome};
use bec_bo::config::CampaignConfig;
use bec_bo::io::{self, FinalOutcome};
use bec_bo::simulate::simulate_once;
use bec_bo::{Error, Result};
use clap::{Parser, Subcommand};

/// Bayesian optimization of condensate transport ramps.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one ramp and write trajectory.csv and ramp.csv.
    Simulate {
        /// Campaign config (JSON); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// CSV with columns p1..pD; a params file yields its final incumbent.
        #[arg(long)]
        params: PathBuf,
        /// Index into the configured splines.
        #[arg(long, default_value_t = 0)]
        spline: usize,
        /// Transport duration; the first configured one by default.
        #[arg(long)]
        t_f_ms: Option<f64>,
        /// Output directory; the configured one by default.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every configured cell for a single seed.
    Optimize {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
    },
    /// Run the full campaign over all configured seeds.
    Benchmark {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Paired per-seed comparison of the final incumbents below a directory.
    CompareModes {
        #[arg(long = "in")]
        input: PathBuf,
        /// Output table; `comparison.csv` inside the input directory by default.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: Option<&Path>) -> Result<CampaignConfig> {
    match path {
        Some(p) => CampaignConfig::load(p),
        None => Ok(CampaignConfig::default()),
    }
}

fn progress(o: &RunOutcome) {
    let r = &o.run;
    let what = format!("{} {} {} ms seed {}", r.spline.label(), r.grouping.name(), r.t_f_ms, r.seed);
    match &o.history {
        Ok(h) => {
            let best = h.incumbent().map_or(f64::NAN, |i| i.objective - h.c_obj0);
            eprintln!("done   {what}: C - C0 = {:.4e} nK", bec_bo_core::constants::joule_to_nk(best));
        }
        Err(e) => eprintln!("failed {what}: {e}"),
    }
}

fn run_cells(cfg: &CampaignConfig, seeds: Option<&[u64]>) -> Result<()> {
    let mut cfg = cfg.clone();
    if let Some(s) = seeds {
        cfg.seeds = s.to_vec();
    }
    let cells = campaign::plan(&cfg);
    let workers = campaign::workers_from_env()?;
    eprintln!("{} runs on {workers} workers, output in {}", cells.len(), cfg.output_dir.display());
    let result = campaign::run_campaign(&cfg, &cells, workers, progress)?;
    let failed = result.failures().count();
    if failed > 0 {
        return Err(Error::Runtime(format!("{failed} of {} runs failed", result.runs.len())));
    }
    Ok(())
}

fn compare(input: &Path, out: Option<&Path>) -> Result<()> {
    let mut outcomes = Vec::new();
    for (spline, path) in io::find_histories(input)? {
        let rows = io::read_history(&path)?;
        outcomes.extend(FinalOutcome::from_rows(&spline, &rows));
    }
    let rows = io::compare_modes(&outcomes)?;
    let out = out.map_or_else(|| input.join("comparison.csv"), Path::to_path_buf);
    io::write_comparison(&out, &rows)?;
    println!("{:<12} {:>8} {:<10} {:>4} {:>14} {:>4} {:>4}", "spline", "t_f_ms", "mode", "runs", "median_nK", "wins", "ties");
    for r in &rows {
        println!(
            "{:<12} {:>8} {:<10} {:>4} {:>14.4e} {:>4} {:>4}",
            r.spline, r.t_f_ms, r.mode, r.runs, r.median, r.wins, r.ties
        );
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, params, spline, t_f_ms, out } => {
            let cfg = load(config.as_deref())?;
            let s = *cfg
                .splines
                .get(spline)
                .ok_or_else(|| Error::Config(format!("spline index {spline} out of range")))?;
            let t_f = t_f_ms.unwrap_or(cfg.durations_ms[0]);
            let p = io::read_param_vector(&params)?;
            let sim = simulate_once(&cfg, &s, t_f, &p)?;
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            sim.write(&dir.join("trajectory.csv"), &dir.join("ramp.csv"))?;
            print!("{}", sim.report_text());
            Ok(())
        }
        Command::Optimize { config, seed } => run_cells(&load(config.as_deref())?, Some(&[seed])),
        Command::Benchmark { config } => run_cells(&load(config.as_deref())?, None),
        Command::CompareModes { input, out } => compare(&input, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
