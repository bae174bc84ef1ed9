//! Command-line front end: `track`, `synth`, `eval` and `bench`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::flow::{random_graph, solve_mcf};
use crate::io::{
    generate_scenario, load_detections, read_cmc, read_config, read_mot, read_scenario_spec,
    write_mot, write_scenario,
};
use crate::metrics::evaluate;
use crate::model::Config;
use crate::pipeline::{track, track_records, Mode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "tsmcf",
    version,
    about = "Two-stage min-cost flow multi-object tracker"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Track detections and write a MOT result file.
    Track {
        #[arg(long)]
        dets: PathBuf,
        #[arg(long)]
        embeds: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Per-frame affine camera-motion transforms.
        #[arg(long)]
        cmc: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Skip the second flow pass.
        #[arg(long)]
        stage1_only: bool,
    },
    /// Generate a synthetic scenario (gt.txt, det.txt, emb.bin).
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Score a result file against ground truth.
    Eval {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        res: PathBuf,
    },
    /// Time the flow solver on random graphs.
    Bench {
        #[arg(long, default_value_t = 1000)]
        n_dets: usize,
        #[arg(long, default_value_t = 100)]
        frames: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USER } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_internal() {
                EXIT_INTERNAL
            } else {
                EXIT_USER
            }
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

pub fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Track {
            dets,
            embeds,
            config,
            cmc,
            out: res,
            stage1_only,
        } => {
            let config = match config {
                Some(p) => read_config(&p)?,
                None => Config::default(),
            };
            let detections = load_detections(&dets, &embeds, config.embedding_dim)?;
            let originals: BTreeMap<_, _> = detections.iter().map(|d| (d.source, d.bbox)).collect();
            let transforms = match cmc {
                Some(p) => read_cmc(&p)?,
                None => Vec::new(),
            };
            let mode = if stage1_only {
                Mode::Stage1Only
            } else {
                Mode::TwoStage
            };
            let n_dets = detections.len();
            let output = track(detections, &transforms, &config, mode)?;
            write_mot(&res, &track_records(&output.tracks, &originals))?;
            let s = &output.summary;
            emit(
                out,
                &format!(
                    "detections={n_dets}\nwindows={}\ntracks={}\nstage2_corrections={}\ninvalid_tracklets={}\nlandmarks={}/{}\n",
                    s.windows, s.tracks, s.reopened_tracklets, s.invalid_tracklets, s.landmarks_covered, s.landmarks
                ),
            )
        }
        Command::Synth { spec, out_dir } => {
            let text = fs::read_to_string(&spec).map_err(|e| Error::io(&spec, e))?;
            let spec = read_scenario_spec(&text)?;
            let scenario = generate_scenario(&spec)?;
            write_scenario(&out_dir, &scenario)?;
            emit(
                out,
                &format!(
                    "targets={}\nframes={}\ngt_rows={}\ndet_rows={}\n",
                    spec.targets.len(),
                    spec.n_frames,
                    scenario.gt.len(),
                    scenario.detections.len()
                ),
            )
        }
        Command::Eval { gt, res } => {
            let gt = read_mot(&gt)?.records;
            let res = read_mot(&res)?.records;
            let s = evaluate(&gt, &res)?;
            emit(
                out,
                &format!(
                    "{:>8} {:>8} {:>6} {:>6} {:>6}\n{:>8.2} {:>8.2} {:>6} {:>6} {:>6}\n\nmota={:.6}\nidf1={:.6}\nids={}\nmt={}\nml={}\nfp={}\nfn={}\nnum_gt={}\n",
                    "MOTA", "IDF1", "IDS", "MT", "ML",
                    100.0 * s.mota, 100.0 * s.idf1, s.ids, s.mt, s.ml,
                    s.mota, s.idf1, s.ids, s.mt, s.ml, s.false_positives, s.misses, s.num_gt
                ),
            )
        }
        Command::Bench {
            n_dets,
            frames,
            seed,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_graph(&mut rng, n_dets, frames, 2, 0.3);
            let started = Instant::now();
            let r = solve_mcf(&g)?;
            let elapsed = started.elapsed();
            emit(
                out,
                &format!(
                    "n_dets={n_dets}\nframes={frames}\nedges={}\npaths={}\naugmentations={}\ntotal_cost={:.3}\nsolve_ms={:.3}\n",
                    g.edges().len(),
                    r.paths.len(),
                    r.augmentations.len(),
                    r.total_cost,
                    elapsed.as_secs_f64() * 1e3
                ),
            )
        }
    }
}
