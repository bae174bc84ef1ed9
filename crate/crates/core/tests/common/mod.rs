#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use tempfile::TempDir;
use tsmcf::flow::{FlowGraph, FlowResult};
use tsmcf::io::{
    generate_scenario, load_detections, read_mot, write_scenario, MotRecord, ScenarioSpec,
};
use tsmcf::metrics::{evaluate, Summary};
use tsmcf::model::{Config, Detection};
use tsmcf::pipeline::{track, track_records, Mode, TrackOutput};

pub const CORPUS_SEEDS: std::ops::Range<u64> = 0..10;
pub const CORPUS_FRAMES: u32 = 200;
pub const CORPUS_CROSSINGS: usize = 3;

/// Corpus sequence `seed`: 5 to 10 targets with three occluded crossings.
pub fn corpus_spec(seed: u64) -> ScenarioSpec {
    let n_targets = 5 + (seed % 6) as usize;
    ScenarioSpec::crossing_corpus(n_targets, CORPUS_CROSSINGS, CORPUS_FRAMES, seed).unwrap()
}

/// A scenario written to disk and read back.
pub struct Sequence {
    pub dir: TempDir,
    pub gt: Vec<MotRecord>,
    pub detections: Vec<Detection>,
    pub dim: usize,
}

pub fn materialize(spec: &ScenarioSpec) -> Sequence {
    let scenario = generate_scenario(spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_scenario(dir.path(), &scenario).unwrap();
    let gt = read_mot(&dir.path().join("gt.txt")).unwrap().records;
    let detections = load_detections(
        &dir.path().join("det.txt"),
        &dir.path().join("emb.bin"),
        spec.embedding_dim,
    )
    .unwrap();
    Sequence {
        dir,
        gt,
        detections,
        dim: spec.embedding_dim,
    }
}

impl Sequence {
    pub fn config(&self) -> Config {
        Config {
            embedding_dim: self.dim,
            ..Config::default()
        }
    }

    pub fn run(&self, config: &Config, mode: Mode) -> (Vec<MotRecord>, TrackOutput) {
        let originals: BTreeMap<_, _> =
            self.detections.iter().map(|d| (d.source, d.bbox)).collect();
        let output = track(self.detections.clone(), &[], config, mode).unwrap();
        (track_records(&output.tracks, &originals), output)
    }

    pub fn evaluate(&self, config: &Config, mode: Mode) -> (Summary, TrackOutput) {
        let (records, output) = self.run(config, mode);
        (evaluate(&self.gt, &records).unwrap(), output)
    }

    pub fn path(&self, name: &str) -> std::path::PathBuf {
        self.dir.path().join(name)
    }
}

/// Independent structural check of a solver result: every path runs
/// source to sink over graph edges and no detection is used twice.
pub fn paths_disjoint(g: &FlowGraph, r: &FlowResult) -> bool {
    let edges: HashSet<(usize, usize)> = g.edges().iter().map(|e| (e.from, e.to)).collect();
    let mut seen = HashSet::new();
    for path in &r.paths {
        if path.first() != Some(&0) || path.last() != Some(&g.sink()) || path.len() < 4 {
            return false;
        }
        if !path.windows(2).all(|w| edges.contains(&(w[0], w[1]))) {
            return false;
        }
        for &node in &path[1..path.len() - 1] {
            if !seen.insert(node) {
                return false;
            }
        }
    }
    true
}

pub fn file_bytes(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}
