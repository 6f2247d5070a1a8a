//! `molcom` command-line front end.
//!
//! Exit codes: 0 on success, 1 on runtime (I/O) failure, 2 on usage or
//! configuration errors. Output is CSV with `#` comment lines carrying the
//! config echo and derived diagnostics; floats have 9 significant digits.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::analysis::{
    mean_optimal_threshold, optimal_threshold_closed_for, optimal_threshold_search, slot_condition,
    BerEvaluator,
};
use crate::channel::{time_to_peak, AbsorptionProfile};
use crate::config::{ExperimentConfig, Receiver, ReceiverSpec, SweepAxis};
use crate::sim::{run_experiment, run_sweep, thread_pool, Setup};
use crate::{Error, Result};

/// Environment variable holding the worker thread count for parallel trials.
pub const THREADS_ENV: &str = "MOLCOM_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "molcom",
    version,
    about = "Diffusion-based molecular communication link simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON experiment config; reference-link defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-offset absorption probabilities of the configured channel.
    ChannelProfile {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        max_offset: Option<usize>,
    },
    /// Analytical and empirical BER at every point of the config's sweep.
    BerSweep {
        #[command(flatten)]
        common: Common,
    },
    /// ATV receiver against a fixed M/2 baseline, with an optional threshold trace.
    AtvRun {
        #[command(flatten)]
        common: Common,
        /// Per-slot threshold trace of the first trial.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// BER against a grid of fixed thresholds (default 50..=450 step 10).
    ThresholdSweep {
        #[command(flatten)]
        common: Common,
    },
}

/// Formats a float with 9 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..9).contains(&exp) {
        format!("{:.*}", (8 - exp) as usize, x)
    } else {
        format!("{:.8e}", x)
    }
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn create(path: &PathBuf) -> Result<Box<dyn Write>> {
    Ok(Box::new(BufWriter::new(File::create(path)?)))
}

fn header(out: &mut dyn Write, command: &str, cfg: &ExperimentConfig) -> io::Result<()> {
    writeln!(out, "# molcom {command}")?;
    writeln!(out, "# config: {}", cfg.to_json())
}

fn channel_profile(cfg: &ExperimentConfig, max_offset: usize, out: &mut dyn Write) -> Result<()> {
    let profile = AbsorptionProfile::build(&cfg.channel, &cfg.ligand, max_offset)?;
    let ch = &cfg.channel;
    header(out, "channel-profile", cfg)?;
    writeln!(
        out,
        "# time_to_peak={} slot_condition={} ligand_factor={} clamped={} tail_mass={}",
        fmt_num(time_to_peak(ch.distance, ch.diffusion_coefficient)?),
        slot_condition(ch)?,
        fmt_num(profile.ligand_factor()),
        profile.clamped(),
        fmt_num(profile.tail_mass()),
    )?;
    writeln!(out, "offset,raw_prob,scaled_prob,cumulative")?;
    let mut cumulative = 0.0;
    for (k, (&raw, &p)) in profile
        .raw()
        .iter()
        .zip(profile.probabilities())
        .enumerate()
    {
        cumulative += p;
        writeln!(
            out,
            "{k},{},{},{}",
            fmt_num(raw),
            fmt_num(p),
            fmt_num(cumulative)
        )?;
    }
    Ok(())
}

fn ber_sweep(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<()> {
    let rows = run_sweep(cfg)?;
    header(out, "ber-sweep", cfg)?;
    let names: Vec<&str> = cfg.sweep.iter().map(|a| a.parameter.as_str()).collect();
    writeln!(
        out,
        "{},ber_analytical,ber_empirical,ci_halfwidth,sinr,threshold,seed",
        names.join(",")
    )?;
    for row in rows {
        let setup = Setup::new(&row.config)?;
        let eval = BerEvaluator::new(&setup.probs, &setup.modulation, &setup.noise);
        let threshold = row.result.final_threshold;
        let coords: Vec<String> = row.coordinates.iter().map(|(_, v)| fmt_num(*v)).collect();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            coords.join(","),
            fmt_num(eval.ber(threshold).p_e),
            fmt_num(row.result.ber_empirical),
            fmt_num(row.result.ci_halfwidth),
            fmt_num(row.result.sinr.gamma_e),
            fmt_num(threshold),
            row.result.seed
        )?;
    }
    Ok(())
}

fn threshold_sweep(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<()> {
    let mut cfg = cfg.clone();
    if cfg.receiver.is_atv() {
        return Err(Error::config(
            "receiver",
            "threshold-sweep needs a fixed receiver",
        ));
    }
    match cfg.sweep.as_slice() {
        [] => {
            cfg.sweep = vec![SweepAxis {
                parameter: "receiver.threshold".into(),
                values: (0..=40).map(|i| 50.0 + 10.0 * i as f64).collect(),
            }]
        }
        [axis] if axis.parameter == "receiver.threshold" => {}
        _ => {
            return Err(Error::config(
                "sweep",
                "threshold-sweep takes a single `receiver.threshold` axis",
            ))
        }
    }
    let setup = Setup::new(&cfg)?;
    let eval = BerEvaluator::new(&setup.probs, &setup.modulation, &setup.noise);
    let (t_opt, p_opt) = optimal_threshold_search(&eval);
    let t_closed = optimal_threshold_closed_for(&setup.probs, &setup.modulation, &setup.noise)?;
    let t_mean =
        mean_optimal_threshold(&cfg.channel, &cfg.modulation, setup.profile.ligand_factor())?;
    let rows = run_sweep(&cfg)?;

    header(out, "threshold-sweep", &cfg)?;
    writeln!(
        out,
        "# sigma={} optimal_threshold={} optimal_ber={} closed_form_threshold={} mean_optimal_threshold={}",
        fmt_num(setup.noise.std_dev),
        fmt_num(t_opt),
        fmt_num(p_opt),
        fmt_num(t_closed),
        fmt_num(t_mean)
    )?;
    writeln!(
        out,
        "threshold,ber_analytical,p_e_zero,p_e_one,ber_empirical,ci_halfwidth,sinr,seed"
    )?;
    for row in rows {
        let t = row.coordinates[0].1;
        let b = eval.ber(t);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_num(t),
            fmt_num(b.p_e),
            fmt_num(b.p_e_zero),
            fmt_num(b.p_e_one),
            fmt_num(row.result.ber_empirical),
            fmt_num(row.result.ci_halfwidth),
            fmt_num(row.result.sinr.gamma_e),
            row.result.seed
        )?;
    }
    Ok(())
}

fn atv_run(cfg: &ExperimentConfig, out: &mut dyn Write, trace: Option<&PathBuf>) -> Result<()> {
    if !cfg.receiver.is_atv() {
        return Err(Error::config(
            "receiver",
            "atv-run needs `\"kind\": \"atv\"`",
        ));
    }
    let atv = run_experiment(cfg)?;
    let baseline_cfg = ExperimentConfig {
        receiver: ReceiverSpec::fixed(cfg.modulation.m() / 2.0),
        ..cfg.clone()
    };
    let fixed = run_experiment(&baseline_cfg)?;
    let setup = Setup::new(cfg)?;
    let eval = BerEvaluator::new(&setup.probs, &setup.modulation, &setup.noise);
    let (t_opt, _) = optimal_threshold_search(&eval);
    let tolerance = match setup.receiver {
        Receiver::Atv(ref a) => a.tolerance,
        Receiver::Fixed(_) => unreachable!(),
    };
    let changes = atv
        .threshold_trace
        .windows(2)
        .filter(|w| w[0] != w[1])
        .count();

    header(out, "atv-run", cfg)?;
    writeln!(
        out,
        "# sigma={} tolerance={} threshold_changes={}",
        fmt_num(setup.noise.std_dev),
        fmt_num(tolerance),
        changes
    )?;
    writeln!(
        out,
        "ber_atv,ci_atv,ber_fixed_baseline,ci_fixed,sinr,final_threshold,optimal_threshold,seed"
    )?;
    writeln!(
        out,
        "{},{},{},{},{},{},{},{}",
        fmt_num(atv.ber_empirical),
        fmt_num(atv.ci_halfwidth),
        fmt_num(fixed.ber_empirical),
        fmt_num(fixed.ci_halfwidth),
        fmt_num(atv.sinr.gamma_e),
        fmt_num(atv.final_threshold),
        fmt_num(t_opt),
        atv.seed
    )?;
    if let Some(path) = trace {
        let mut w = create(path)?;
        writeln!(w, "slot,threshold")?;
        for (i, t) in atv.threshold_trace.iter().enumerate() {
            writeln!(w, "{},{}", i + 1, fmt_num(*t))?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Runs a command; returns what belongs on stdout.
fn dispatch(command: Command) -> Result<Vec<u8>> {
    let (common, body): (
        &Common,
        Box<dyn FnOnce(&ExperimentConfig, &mut dyn Write) -> Result<()>>,
    ) = match &command {
        Command::ChannelProfile { common, max_offset } => {
            let max_offset = *max_offset;
            (
                common,
                Box::new(move |cfg, out| {
                    channel_profile(cfg, max_offset.unwrap_or(cfg.max_offset), out)
                }),
            )
        }
        Command::BerSweep { common } => (common, Box::new(ber_sweep)),
        Command::ThresholdSweep { common } => (common, Box::new(threshold_sweep)),
        Command::AtvRun { common, trace } => {
            let trace = trace.clone();
            (
                common,
                Box::new(move |cfg, out| atv_run(cfg, out, trace.as_ref())),
            )
        }
    };
    let cfg = load(common)?;
    let mut buf = Vec::new();
    body(&cfg, &mut buf)?;
    match &common.out {
        Some(path) => {
            let mut w = create(path)?;
            w.write_all(&buf)?;
            w.flush()?;
            Ok(Vec::new())
        }
        None => Ok(buf),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => 1,
        _ => 2,
    }
}

/// Runs the CLI with explicit arguments; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render();
            if code == 0 {
                let _ = write!(stdout, "{rendered}");
            } else {
                let _ = write!(stderr, "{rendered}");
            }
            return code;
        }
    };
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) => n,
            Err(_) => {
                let _ = writeln!(
                    stderr,
                    "error: {THREADS_ENV} must be a non-negative integer, got {v:?}"
                );
                return 2;
            }
        },
        Err(_) => 0,
    };
    let result = thread_pool(threads)
        .and_then(|pool| pool.install(|| dispatch(cli.command)))
        .and_then(|bytes| {
            stdout.write_all(&bytes)?;
            stdout.flush()?;
            Ok(())
        });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(0.818_401_057_523_221), "0.818401058");
        assert_eq!(fmt_num(212.234_605_518), "212.234606");
        assert_eq!(fmt_num(-3.5), "-3.50000000");
        assert_eq!(fmt_num(1.5e-7), "1.50000000e-7");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
    }
}
