//! Command-line front end over the `smartpam` library.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use smartpam::config::{load_profile, save_profile};
use smartpam::fixture::{gen_fixture, pattern_stream, Arch, WeightMode};
use smartpam::model_file::{load_model, save_model};
use smartpam::nn::{model_size_bytes, param_count, ModelSpec};
use smartpam::sim::{simulate, DeviceProfile, Mode, TimingModel};
use smartpam::stream::{
    analyse_and_record, classify_window, detection_cycles, windows, DetectionConfig,
};
use smartpam::tiler::{
    make_tile_plan, peak_activation_bytes, smallest_slice_count_within, TilePlan,
};
use smartpam::wav::{read_wav, write_wav};
use smartpam::{Error, Result};

#[derive(Parser)]
#[command(
    name = "pam",
    version,
    about = "Raw-audio CNN inference, tiling and device simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArchArg {
    Small,
    Large,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightsArg {
    Random,
    Zero,
    Detector,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    F1,
    F2,
}

#[derive(Subcommand)]
enum Command {
    /// Architecture table, parameter counts and per-layer output lengths.
    Info { model: PathBuf },
    /// Tile plan and activation-memory report.
    Plan {
        model: PathBuf,
        #[arg(long, default_value_t = 1)]
        slices: usize,
        /// Find the smallest slice count whose tiled peak fits this many kB (1 kB = 1000 B).
        #[arg(long)]
        budget_kb: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Per-window classification log (analyse-and-record).
    Infer {
        model: PathBuf,
        wav: PathBuf,
        #[arg(long = "plan")]
        slices: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Detection outcome for every cycle of the recording.
    Detect {
        model: PathBuf,
        wav: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        cycle_s: f64,
        #[arg(long, default_value_t = 30)]
        threshold: usize,
        #[arg(long = "plan")]
        slices: Option<usize>,
    },
    /// Device simulation report.
    Simulate {
        model: PathBuf,
        wav: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Profile file; the built-in calibrated profile when omitted.
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long = "plan")]
        slices: Option<usize>,
        #[arg(long, default_value_t = 10.0)]
        cycle_s: f64,
        #[arg(long, default_value_t = 30)]
        threshold: usize,
        /// Write the F2 window log to this file.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Write a fixture model.
    GenModel {
        #[arg(long, value_enum)]
        arch: ArchArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "random")]
        weights: WeightsArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic WAV of crafted-detector tones, e.g. `noise:20,male:40,noise:20`
    /// (counts are model windows; `noise` is digital silence).
    GenWav {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        pattern: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the built-in device profile.
    GenProfile {
        #[arg(long)]
        out: PathBuf,
    },
    /// Host-side per-window processing time (host time, not device time).
    Bench {
        model: PathBuf,
        wav: PathBuf,
        #[arg(long = "plan")]
        slices: Option<usize>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pam: error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn optional_plan(model: &ModelSpec, slices: Option<usize>) -> Result<Option<TilePlan>> {
    slices.map(|n| make_tile_plan(model, n)).transpose()
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes")
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Info { model } => info(&load_model(model)?),
        Command::Plan {
            model,
            slices,
            budget_kb,
            json,
        } => plan(&load_model(model)?, slices, budget_kb, json),
        Command::Infer {
            model,
            wav,
            slices,
            out,
        } => {
            let model = load_model(model)?;
            let clip = read_wav(wav)?;
            let plan = optional_plan(&model, slices)?;
            let records = analyse_and_record(&clip.stream, &model, plan.as_ref())?;
            let mut text = String::new();
            for r in &records {
                text.push_str(&r.to_log_line());
                text.push('\n');
            }
            emit(out.as_deref(), &text)
        }
        Command::Detect {
            model,
            wav,
            cycle_s,
            threshold,
            slices,
        } => {
            let model = load_model(model)?;
            let clip = read_wav(wav)?;
            let plan = optional_plan(&model, slices)?;
            let config = DetectionConfig {
                cycle_seconds: cycle_s,
                threshold,
                ..DetectionConfig::default()
            };
            let outcomes = detection_cycles(&clip.stream, &model, plan.as_ref(), &config)?;
            for (i, o) in outcomes.iter().enumerate() {
                let line = serde_json::json!({ "cycle": i, "outcome": o });
                println!("{line}");
            }
            Ok(())
        }
        Command::Simulate {
            model,
            wav,
            mode,
            profile,
            slices,
            cycle_s,
            threshold,
            log,
        } => {
            let model = load_model(model)?;
            let clip = read_wav(wav)?;
            let plan = optional_plan(&model, slices)?;
            let profile = match profile {
                Some(p) => load_profile(p)?,
                None => DeviceProfile::default(),
            };
            let timing = TimingModel::for_model(&model, clip.sample_rate_hz, &profile);
            let config = DetectionConfig {
                cycle_seconds: cycle_s,
                threshold,
                ..DetectionConfig::default()
            };
            let mode = match mode {
                ModeArg::F1 => Mode::F1,
                ModeArg::F2 => Mode::F2,
            };
            let mut report = simulate(
                &clip.stream,
                &model,
                plan.as_ref(),
                mode,
                &profile,
                &timing,
                &config,
            )?;
            if let Some(path) = log {
                let text: String = report
                    .records
                    .iter()
                    .map(|r| r.to_log_line() + "\n")
                    .collect();
                emit(Some(&path), &text)?;
            }
            report.records.clear();
            println!(
                "{}",
                to_json(&serde_json::json!({ "timing": timing, "report": report }))
            );
            Ok(())
        }
        Command::GenModel {
            arch,
            seed,
            weights,
            out,
        } => {
            let arch = match arch {
                ArchArg::Small => Arch::Small,
                ArchArg::Large => Arch::Large,
            };
            let mode = match weights {
                WeightsArg::Random => WeightMode::RandomUniform,
                WeightsArg::Zero => WeightMode::Zero,
                WeightsArg::Detector => WeightMode::CraftedDetector,
            };
            save_model(out, &gen_fixture(&arch, seed, mode))
        }
        Command::GenWav {
            model,
            pattern,
            out,
        } => {
            let model = load_model(model)?;
            let segments = parse_pattern(&pattern, &model)?;
            let refs: Vec<(&str, usize)> = segments.iter().map(|(c, n)| (c.as_str(), *n)).collect();
            write_wav(out, &pattern_stream(&model, &refs))
        }
        Command::GenProfile { out } => save_profile(out, &DeviceProfile::default()),
        Command::Bench { model, wav, slices } => bench(&load_model(model)?, &wav, slices),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            // a closed pipe is not an error worth reporting
            let _ = stdout.write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn parse_pattern(pattern: &str, model: &ModelSpec) -> Result<Vec<(String, usize)>> {
    pattern
        .split(',')
        .map(|seg| {
            let (class, n) = seg.split_once(':').ok_or_else(|| {
                Error::Usage(format!("pattern segment {seg:?} is not class:windows"))
            })?;
            let class = class.trim();
            if model.class_index(class).is_none() {
                return Err(Error::Usage(format!("unknown class {class:?} in pattern")));
            }
            let n = n
                .trim()
                .parse()
                .map_err(|_| Error::Usage(format!("bad window count in {seg:?}")))?;
            Ok((class.to_string(), n))
        })
        .collect()
}

fn info(model: &ModelSpec) -> Result<()> {
    let lengths = model.layer_output_lengths()?;
    println!(
        "window: {} samples @ {} Hz ({:.2} ms)",
        model.window_samples,
        model.sample_rate_hz,
        model.window_ms()
    );
    println!("classes: {}", model.class_labels.join(", "));
    println!("layer    in  out  kernel  stride  dilation  activation  out_len  params");
    for (i, (l, len)) in model.conv_layers.iter().zip(&lengths).enumerate() {
        println!(
            "conv{:<3} {:>3} {:>4} {:>7} {:>7} {:>9}  {:<10} {:>8} {:>7}",
            i + 1,
            l.in_channels,
            l.out_channels,
            l.kernel,
            l.stride,
            l.dilation,
            format!("{:?}", l.activation).to_lowercase(),
            len,
            l.param_count()
        );
    }
    println!(
        "dense   {:>4} {:>4} {:>58}",
        model.dense.in_features,
        model.dense.out_features,
        model.dense.param_count()
    );
    let pc = param_count(model);
    println!(
        "params: conv {}, dense {}, total {}",
        pc.conv, pc.dense, pc.total
    );
    println!("size: {} bytes", model_size_bytes(model));
    Ok(())
}

fn plan(model: &ModelSpec, slices: usize, budget_kb: Option<f64>, json: bool) -> Result<()> {
    let untiled = peak_activation_bytes(model, None)?;
    let (plan, tiled) = match budget_kb {
        Some(kb) => {
            let budget = (kb * 1000.0).floor() as usize;
            match smallest_slice_count_within(model, budget)? {
                Some(found) => found,
                None => {
                    let finest = make_tile_plan(model, model.final_length()?)?;
                    return Err(Error::BudgetUnreachable {
                        budget_bytes: budget,
                        best_bytes: peak_activation_bytes(model, Some(&finest))?.peak_bytes,
                    });
                }
            }
        }
        None => {
            let plan = make_tile_plan(model, slices)?;
            let report = peak_activation_bytes(model, Some(&plan))?;
            (plan, report)
        }
    };
    if json {
        let value = serde_json::json!({
            "plan": plan,
            "memory_untiled": untiled,
            "memory_tiled": tiled,
        });
        println!("{}", to_json(&value));
        return Ok(());
    }
    if let Some(kb) = budget_kb {
        println!(
            "smallest slice count within {kb} kB: {} (tiled peak {} bytes)",
            plan.n_slices, tiled.peak_bytes
        );
    }
    println!(
        "plan: {} slices over final length {} (window {} samples)",
        plan.n_slices, plan.final_length, plan.window_samples
    );
    println!("slice  out_range      in_range");
    for (i, s) in plan.slices.iter().enumerate() {
        println!("{i:<6} {:<14} {}", s.out_range.to_string(), s.in_range);
    }
    println!("peak activation untiled: {} bytes", untiled.peak_bytes);
    println!("peak activation tiled:   {} bytes", tiled.peak_bytes);
    println!(
        "reduction: {:.2}x",
        untiled.peak_bytes as f64 / tiled.peak_bytes as f64
    );
    Ok(())
}

fn bench(model: &ModelSpec, wav: &Path, slices: Option<usize>) -> Result<()> {
    let clip = read_wav(wav)?;
    let plan = optional_plan(model, slices)?;
    let mut times_ms: Vec<f64> = Vec::new();
    for raw in windows(&clip.stream, model.window_samples) {
        let start = Instant::now();
        classify_window(raw, model, plan.as_ref())?;
        times_ms.push(start.elapsed().as_secs_f64() * 1000.0);
    }
    if times_ms.is_empty() {
        println!("host time: no complete windows");
        return Ok(());
    }
    times_ms.sort_by(f64::total_cmp);
    let n = times_ms.len();
    let mean = times_ms.iter().sum::<f64>() / n as f64;
    println!(
        "host time per window over {n} windows (not device time): mean {mean:.3} ms, min {:.3} ms, median {:.3} ms, max {:.3} ms",
        times_ms[0],
        times_ms[n / 2],
        times_ms[n - 1]
    );
    Ok(())
}
