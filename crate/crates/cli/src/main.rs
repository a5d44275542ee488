use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use subpeak_core::config::ConfigFile;
use subpeak_core::eval::io::{export_heatmap, export_scene, read_boxes_csv, SceneDir};
use subpeak_core::eval::{ablation_variants, compare_configs, EvalResult};
use subpeak_core::sim::gen_sequence;
use subpeak_core::tracker::{Tracker, TrackerConfig, DIAGNOSTICS_HEADER};
use subpeak_core::{iou, BBox, Error};

mod throughput;

#[derive(Parser)]
#[command(name = "subpeak", version, about = "Response-map tracker with peak pooling and boundary truncation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a simulated scene to a directory of SPSF frames plus gt.csv.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Track through a scene directory, writing per-frame diagnostics.
    Track {
        #[arg(long)]
        scene: PathBuf,
        /// Config file with a [tracker] section; defaults when omitted.
        #[arg(long)]
        tracker: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Directory for one PGM response heatmap per tracked frame.
        #[arg(long)]
        heatmaps: Option<PathBuf>,
        /// Also write the raw response values next to each heatmap.
        #[arg(long, requires = "heatmaps")]
        heatmap_csv: bool,
    },
    /// Run the eight BRT/PRP/MF variants on a seeded benchmark.
    Ablate {
        #[arg(long)]
        config: PathBuf,
        /// Summary CSV; per-sequence rows go to `<stem>.sequences.csv`.
        /// Defaults to `ablation.csv` in the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Score a tracker output against ground truth.
    Eval {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Write the metrics here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time the core kernels and print a throughput table.
    Bench {
        /// Measured calls per kernel.
        #[arg(long, default_value_t = 200)]
        reps: usize,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Io(_) | Error::Csv(_) | Error::Format(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, out } => simulate(&config, &out),
        Command::Track { scene, tracker, out, heatmaps, heatmap_csv } => {
            track(&scene, tracker.as_deref(), &out, heatmaps.as_deref(), heatmap_csv)
        }
        Command::Ablate { config, out, threads } => ablate(&config, out, threads),
        Command::Eval { run, gt, out } => eval(&run, &gt, out.as_deref()),
        Command::Bench { reps } => throughput::run(reps.max(1)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn simulate(config: &Path, out: &Path) -> subpeak_core::Result<()> {
    let (scene, scales) = ConfigFile::load(config)?.scene()?;
    let seq = gen_sequence(&scene)?;
    export_scene(&seq, &scales, out)?;
    eprintln!("wrote {} frames x {} scales to {}", seq.len(), scales.len(), out.display());
    Ok(())
}

fn track(
    scene: &Path,
    tracker: Option<&Path>,
    out: &Path,
    heatmaps: Option<&Path>,
    heatmap_csv: bool,
) -> subpeak_core::Result<()> {
    let scene = SceneDir::open(scene)?;
    let config = match tracker {
        Some(p) => ConfigFile::load(p)?.tracker()?,
        None => TrackerConfig::default(),
    };
    if let Some(dir) = heatmaps {
        fs::create_dir_all(dir)?;
    }
    let mut t = Tracker::init(config, &scene.load_frame(0)?, scene.gt[0])?;
    let mut w = BufWriter::new(File::create(out)?);
    writeln!(w, "{}", DIAGNOSTICS_HEADER.join(","))?;
    for frame in 1..scene.frames() {
        let (_, diag, response) = t.step_with_response(&scene.load_frame(frame)?)?;
        writeln!(w, "{}", diag.csv_record(frame).join(","))?;
        if let Some(dir) = heatmaps {
            let csv = heatmap_csv.then(|| dir.join(format!("response_{frame:04}.csv")));
            export_heatmap(&response, dir.join(format!("response_{frame:04}.pgm")), csv.as_deref())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn ablate(config: &Path, out: Option<PathBuf>, threads: usize) -> subpeak_core::Result<()> {
    let run = ConfigFile::load(config)?.run()?;
    let out = match (out, &run.output_dir) {
        (Some(p), _) => p,
        (None, Some(dir)) => {
            fs::create_dir_all(dir)?;
            dir.join("ablation.csv")
        }
        (None, None) => return Err(Error::Config("no --out given and [run] output_dir is unset".into())),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::State(format!("thread pool: {e}")))?;
    let report = pool.install(|| compare_configs(&run, &ablation_variants(&run.tracker)))?;

    let mut summary = Vec::new();
    report.write_summary_csv(&mut summary)?;
    fs::write(&out, &summary)?;
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "ablation".into());
    let mut rows = BufWriter::new(File::create(out.with_file_name(format!("{stem}.sequences.csv")))?);
    report.write_sequences_csv(&mut rows)?;
    rows.flush()?;
    std::io::stdout().write_all(&summary)?;
    Ok(())
}

fn eval(run: &Path, gt: &Path, out: Option<&Path>) -> subpeak_core::Result<()> {
    let pred = read_boxes_csv(File::open(run)?)?;
    let truth = read_boxes_csv(File::open(gt)?)?;
    let mut gt_by_frame: Vec<Option<BBox>> = Vec::new();
    for (f, b) in truth {
        if gt_by_frame.len() <= f {
            gt_by_frame.resize(f + 1, None);
        }
        gt_by_frame[f] = Some(b);
    }
    let mut p = Vec::with_capacity(pred.len());
    let mut g = Vec::with_capacity(pred.len());
    for (f, b) in pred {
        let truth = gt_by_frame
            .get(f)
            .copied()
            .flatten()
            .ok_or_else(|| Error::Format(format!("frame {f} has no ground truth")))?;
        p.push(b);
        g.push(truth);
    }
    // offline: every zero-overlap frame counts, there is no re-initialisation
    let failures = p.iter().zip(&g).filter(|(a, b)| iou(a, b) == 0.0).count();
    let r = EvalResult::new(&p, &g, failures, &[])?;

    let mut text = String::from("metric,value\n");
    text += &format!("frames,{}\n", r.frames);
    text += &format!("failures,{}\n", r.failures);
    text += &format!("success_auc,{:.6}\n", r.success_auc());
    text += &format!("precision20,{:.6}\n", r.curves.precision_at(20));
    text += &format!("mean_center_error,{:.6}\n", r.mean_center_error);
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}
