//! Seeded synthetic scenarios with linear motion, occluded crossings and
//! false positives.
//!
//! Every identity owns one basis axis of the embedding space; detections
//! carry that axis plus Gaussian noise. An occluded detection also picks up
//! part of its occluder's appearance and loses confidence.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::{iou, BBox};

use super::{write_embeddings, write_mot, MotRecord};

/// Share of the occluder's appearance leaking into an occluded detection.
const OCCLUDER_MIX: f64 = 0.3;
/// Overlap above which two ground-truth boxes count as crossing.
const CROSSING_IOU: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetMotion {
    /// Center at frame 0.
    pub start: (f64, f64),
    /// Pixels per frame.
    pub velocity: (f64, f64),
    pub size: (f64, f64),
}

impl TargetMotion {
    pub fn bbox_at(&self, frame: u32) -> BBox {
        let f = frame as f64;
        let (cx, cy) = (
            self.start.0 + self.velocity.0 * f,
            self.start.1 + self.velocity.1 * f,
        );
        BBox::from_center(cx, cy, self.size.0, self.size.1).expect("positive target size")
    }
}

/// Target `occluded` is hidden behind `occluder` on frames `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Crossing {
    pub occluder: usize,
    pub occluded: usize,
    pub start: u32,
    pub end: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub n_frames: u32,
    pub image: (f64, f64),
    pub targets: Vec<TargetMotion>,
    pub crossings: Vec<Crossing>,
    pub drop_factor: f64,
    /// Standard deviation of the box noise, in pixels.
    pub noise_std: f64,
    pub embedding_noise: f64,
    pub embedding_dim: usize,
    /// Expected false positives per frame.
    pub fp_rate: f64,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            n_frames: 100,
            image: (1920.0, 1080.0),
            targets: Vec::new(),
            crossings: Vec::new(),
            drop_factor: 0.5,
            noise_std: 0.0,
            embedding_noise: 0.0,
            embedding_dim: 32,
            fp_rate: 0.0,
            seed: 0,
        }
    }
}

impl ScenarioSpec {
    /// Targets spread over the image that keep apart and stay in view.
    pub fn separated(n_targets: usize, n_frames: u32, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let image = (1920.0, 1080.0);
        let cols = (n_targets as f64).sqrt().ceil().max(1.0) as usize;
        let rows = n_targets.div_ceil(cols).max(1);
        let (cell_w, cell_h) = (image.0 / cols as f64, image.1 / rows as f64);
        let span = n_frames.max(1) as f64;
        let targets = (0..n_targets)
            .map(|i| {
                let (c, r) = ((i % cols) as f64, (i / cols) as f64);
                let size = (rng.gen_range(40.0..60.0), rng.gen_range(100.0..150.0));
                // Stay inside the middle half of the cell.
                let room = (cell_w / 4.0 - size.0 / 2.0).max(0.0);
                let v = rng.gen_range(-room..=room) / span;
                TargetMotion {
                    start: ((c + 0.5) * cell_w - v * span / 2.0, (r + 0.5) * cell_h),
                    velocity: (v, 0.0),
                    size,
                }
            })
            .collect();
        Self {
            n_frames,
            image,
            targets,
            seed,
            ..Default::default()
        }
    }

    /// Crossing corpus: slow anchor targets, and followers that each pass
    /// through an anchor while hidden behind it. Only the `n_crossings`
    /// planned crossings drop detection scores.
    pub fn crossing_corpus(
        n_targets: usize,
        n_crossings: usize,
        n_frames: u32,
        seed: u64,
    ) -> Result<Self> {
        if n_crossings >= n_targets {
            return Err(Error::InvalidInput(format!(
                "{n_crossings} crossings need more than {n_crossings} targets"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let image = (1920.0, 1080.0);
        let margin = 150.0;
        let mut targets: Vec<TargetMotion> = (0..n_targets)
            .map(|_| TargetMotion {
                start: (
                    rng.gen_range(margin..image.0 - margin),
                    rng.gen_range(margin..image.1 - margin),
                ),
                velocity: (rng.gen_range(-1.5..1.5), rng.gen_range(-0.5..0.5)),
                size: (rng.gen_range(40.0..60.0), rng.gen_range(100.0..150.0)),
            })
            .collect();
        let mut order: Vec<usize> = (0..n_targets).collect();
        order.shuffle(&mut rng);
        let last = n_frames.saturating_sub(1) as f64;
        let mut crossings = Vec::with_capacity(n_crossings);
        let (followers, anchors) = order.split_at(n_crossings);
        for k in 0..n_crossings {
            let (a, b) = (anchors[k % anchors.len()], followers[k]);
            let anchor = targets[a];
            let fc = rng.gen_range(0.25..0.75) * last;
            let rel = rng.gen_range(4.0..6.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let scale = rng.gen_range(0.95..1.05);
            let vel = (anchor.velocity.0 + rel, anchor.velocity.1);
            let at = (
                anchor.start.0 + anchor.velocity.0 * fc,
                anchor.start.1 + anchor.velocity.1 * fc,
            );
            targets[b] = TargetMotion {
                start: (at.0 - vel.0 * fc, at.1 - vel.1 * fc),
                velocity: vel,
                size: (anchor.size.0 * scale, anchor.size.1 * scale),
            };
            let hidden: Vec<u32> = (0..n_frames)
                .filter(|&f| iou(&targets[a].bbox_at(f), &targets[b].bbox_at(f)) > CROSSING_IOU)
                .collect();
            if let (Some(&start), Some(&end)) = (hidden.first(), hidden.last()) {
                crossings.push(Crossing {
                    occluder: a,
                    occluded: b,
                    start,
                    end,
                });
            }
        }
        Ok(Self {
            n_frames,
            image,
            targets,
            crossings,
            noise_std: 1.0,
            embedding_noise: 0.05,
            fp_rate: 0.5,
            seed,
            ..Default::default()
        })
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.targets.len() > self.embedding_dim {
            return bad(format!(
                "{} targets need embedding_dim >= {}, got {}",
                self.targets.len(),
                self.targets.len(),
                self.embedding_dim
            ));
        }
        if !(self.image.0 > 0.0 && self.image.1 > 0.0) {
            return bad("image size must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.drop_factor) {
            return bad(format!("drop_factor {} outside [0, 1]", self.drop_factor));
        }
        for (name, v) in [
            ("noise_std", self.noise_std),
            ("embedding_noise", self.embedding_noise),
            ("fp_rate", self.fp_rate),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a non-negative number, got {v}"));
            }
        }
        for t in &self.targets {
            let ok = [t.start.0, t.start.1, t.velocity.0, t.velocity.1]
                .iter()
                .all(|v| v.is_finite())
                && t.size.0 > 0.0
                && t.size.1 > 0.0;
            if !ok {
                return bad(format!("bad target {t:?}"));
            }
        }
        for c in &self.crossings {
            let n = self.targets.len();
            if c.occluder >= n || c.occluded >= n || c.occluder == c.occluded || c.start > c.end {
                return bad(format!("bad crossing {c:?}"));
            }
        }
        Ok(())
    }
}

/// Ground truth, detections and their row-aligned embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub gt: Vec<MotRecord>,
    pub detections: Vec<MotRecord>,
    pub embeddings: Vec<Vec<f32>>,
    pub embedding_dim: usize,
}

fn noisy_unit(base: &[f64], std: f64, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let v: Vec<f64> = if std > 0.0 {
        let normal = Normal::new(0.0, std).expect("finite std");
        base.iter().map(|b| b + normal.sample(rng)).collect()
    } else {
        base.to_vec()
    };
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
    v.iter().map(|x| (x / norm) as f32).collect()
}

pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dim = spec.embedding_dim;
    let basis = |i: usize| {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        v
    };
    let box_noise =
        (spec.noise_std > 0.0).then(|| Normal::new(0.0, spec.noise_std).expect("finite std"));
    let inside = |b: &BBox| {
        let (cx, cy) = b.center();
        (0.0..spec.image.0).contains(&cx) && (0.0..spec.image.1).contains(&cy)
    };

    let mut out = Scenario {
        gt: Vec::new(),
        detections: Vec::new(),
        embeddings: Vec::new(),
        embedding_dim: dim,
    };
    for frame in 0..spec.n_frames {
        for (i, t) in spec.targets.iter().enumerate() {
            let truth = t.bbox_at(frame);
            if !inside(&truth) {
                continue;
            }
            out.gt.push(MotRecord {
                frame,
                id: i as i64 + 1,
                bbox: truth,
                score: 1.0,
            });

            let mut score = rng.gen_range(0.85..0.99);
            let mut appearance = basis(i);
            let hidden = spec
                .crossings
                .iter()
                .find(|c| c.occluded == i && (c.start..=c.end).contains(&frame));
            if let Some(c) = hidden {
                score *= spec.drop_factor;
                appearance[c.occluder] += OCCLUDER_MIX;
            }
            let mut ltwh = truth.ltwh();
            if let Some(n) = &box_noise {
                for v in &mut ltwh {
                    *v += n.sample(&mut rng);
                }
            }
            let bbox = BBox::from_ltwh(ltwh[0], ltwh[1], ltwh[2].max(1.0), ltwh[3].max(1.0))?;
            out.detections.push(MotRecord {
                frame,
                id: -1,
                bbox,
                score,
            });
            out.embeddings
                .push(noisy_unit(&appearance, spec.embedding_noise, &mut rng));
        }

        let whole = spec.fp_rate.floor();
        let n_fp = whole as usize + usize::from(rng.gen_bool(spec.fp_rate - whole));
        for _ in 0..n_fp {
            let (w, h) = (rng.gen_range(30.0..70.0), rng.gen_range(60.0..160.0));
            let l = rng.gen_range(0.0..(spec.image.0 - w).max(1.0));
            let t = rng.gen_range(0.0..(spec.image.1 - h).max(1.0));
            out.detections.push(MotRecord {
                frame,
                id: -1,
                bbox: BBox::from_ltwh(l, t, w, h)?,
                score: rng.gen_range(0.1..0.5),
            });
            let noise: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            out.embeddings.push(noisy_unit(&noise, 0.0, &mut rng));
        }
    }
    Ok(out)
}

/// Writes `gt.txt`, `det.txt` and `emb.bin` into `dir`, creating it if needed.
pub fn write_scenario(dir: &Path, s: &Scenario) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_mot(&dir.join("gt.txt"), &s.gt)?;
    // Detections keep generation order so the embedding rows stay aligned;
    // generation order is already frame-ascending.
    super::mot::write_rows(&dir.join("det.txt"), &s.detections)?;
    write_embeddings(&dir.join("emb.bin"), &s.embeddings, s.embedding_dim)
}

fn parse_list(key: &str, raw: &str, n: usize) -> Result<Vec<f64>> {
    let vals: Vec<f64> = raw
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("cannot parse value {raw:?} for key `{key}`")))?;
    if vals.len() != n {
        return Err(Error::Config(format!(
            "`{key}` takes {n} numbers, got {}",
            vals.len()
        )));
    }
    Ok(vals)
}

fn scalar<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Config(format!("cannot parse value {raw:?} for key `{key}`")))
}

/// Parses a scenario description.
///
/// Keys: `n_targets`, `n_frames`, `width`, `height`, `drop_factor`,
/// `noise_std`, `embedding_noise`, `embedding_dim`, `fp_rate`, `seed`,
/// `crossings` (planned occluded crossings), plus repeatable
/// `target = cx cy vx vy w h` and `crossing = occluder occluded start end`
/// with 0-based target and frame numbers. Without explicit targets the
/// layout is generated from the seed.
pub fn read_scenario_spec(text: &str) -> Result<ScenarioSpec> {
    let mut n_targets: Option<usize> = None;
    let mut n_crossings = 0usize;
    let mut base = ScenarioSpec::default();
    let mut targets = Vec::new();
    let mut crossings = Vec::new();
    let mut overrides: Vec<(String, String)> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, raw) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
        match key {
            "n_targets" => n_targets = Some(scalar(key, raw)?),
            "n_frames" => base.n_frames = scalar(key, raw)?,
            "seed" => base.seed = scalar(key, raw)?,
            "crossings" => n_crossings = scalar(key, raw)?,
            "target" => {
                let v = parse_list(key, raw, 6)?;
                targets.push(TargetMotion {
                    start: (v[0], v[1]),
                    velocity: (v[2], v[3]),
                    size: (v[4], v[5]),
                });
            }
            "crossing" => {
                let v = parse_list(key, raw, 4)?;
                if v.iter().any(|x| *x < 0.0 || x.fract() != 0.0) {
                    return Err(Error::Config(format!(
                        "`crossing` takes non-negative integers: {raw}"
                    )));
                }
                crossings.push(Crossing {
                    occluder: v[0] as usize,
                    occluded: v[1] as usize,
                    start: v[2] as u32,
                    end: v[3] as u32,
                });
            }
            "width" | "height" | "drop_factor" | "noise_std" | "embedding_noise"
            | "embedding_dim" | "fp_rate" => overrides.push((key.to_string(), raw.to_string())),
            _ => {
                return Err(Error::Config(format!(
                    "unknown key `{key}` on line {}",
                    n + 1
                )))
            }
        }
    }

    let mut spec = if !targets.is_empty() {
        if n_targets.is_some_and(|k| k != targets.len()) {
            return Err(Error::Config(format!(
                "n_targets = {} but {} target lines",
                n_targets.unwrap_or(0),
                targets.len()
            )));
        }
        ScenarioSpec {
            targets,
            crossings,
            ..base.clone()
        }
    } else {
        let k = n_targets.ok_or_else(|| Error::Config("missing `n_targets`".into()))?;
        let mut s = if n_crossings > 0 {
            ScenarioSpec::crossing_corpus(k, n_crossings, base.n_frames, base.seed)?
        } else {
            ScenarioSpec::separated(k, base.n_frames, base.seed)
        };
        s.crossings.extend(crossings);
        s
    };
    spec.n_frames = base.n_frames;
    spec.seed = base.seed;
    for (key, raw) in overrides {
        match key.as_str() {
            "width" => spec.image.0 = scalar(&key, &raw)?,
            "height" => spec.image.1 = scalar(&key, &raw)?,
            "drop_factor" => spec.drop_factor = scalar(&key, &raw)?,
            "noise_std" => spec.noise_std = scalar(&key, &raw)?,
            "embedding_noise" => spec.embedding_noise = scalar(&key, &raw)?,
            "embedding_dim" => spec.embedding_dim = scalar(&key, &raw)?,
            "fp_rate" => spec.fp_rate = scalar(&key, &raw)?,
            _ => unreachable!("filtered above"),
        }
    }
    spec.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphgen::partition_detections;
    use crate::model::{Detection, Embedding};

    #[test]
    fn noise_free_detections_equal_gt() {
        let spec = ScenarioSpec::separated(3, 20, 4);
        let s = generate_scenario(&spec).unwrap();
        assert_eq!(s.gt.len(), 60);
        assert_eq!(s.detections.len(), s.gt.len());
        for (g, d) in s.gt.iter().zip(&s.detections) {
            assert_eq!(g.bbox, d.bbox);
            assert!((0.85..0.99).contains(&d.score));
        }
    }

    #[test]
    fn occluded_scores_fall_into_the_low_set() {
        let mut spec = ScenarioSpec::separated(2, 10, 1);
        spec.crossings.push(Crossing {
            occluder: 0,
            occluded: 1,
            start: 3,
            end: 5,
        });
        let s = generate_scenario(&spec).unwrap();
        let dets: Vec<Detection> = s
            .detections
            .iter()
            .zip(&s.embeddings)
            .enumerate()
            .map(|(i, (r, e))| {
                let e = Embedding::new(e.iter().map(|&v| v as f64).collect()).unwrap();
                let mut d = Detection::new(r.frame, r.bbox, r.score, e).unwrap();
                d.index = i + 1;
                d
            })
            .collect();
        let (_, low) = partition_detections(&dets, 0.6);
        let low_frames: Vec<u32> = low.iter().map(|&i| dets[i - 1].frame).collect();
        assert_eq!(low_frames, vec![3, 4, 5]);
        for &i in &low {
            assert!(dets[i - 1].score <= 0.99 * 0.5 && dets[i - 1].score >= 0.85 * 0.5);
        }
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let spec = ScenarioSpec::crossing_corpus(6, 3, 120, 9).unwrap();
        assert_eq!(
            generate_scenario(&spec).unwrap(),
            generate_scenario(&spec).unwrap()
        );
        assert_ne!(
            generate_scenario(&spec).unwrap(),
            generate_scenario(&ScenarioSpec {
                seed: 10,
                ..spec.clone()
            })
            .unwrap()
        );
    }

    #[test]
    fn corpus_crossings_overlap() {
        let spec = ScenarioSpec::crossing_corpus(8, 4, 200, 3).unwrap();
        assert_eq!(spec.crossings.len(), 4);
        for c in &spec.crossings {
            assert!(c.end - c.start >= 3, "{c:?}");
            for f in c.start..=c.end {
                let o = iou(
                    &spec.targets[c.occluder].bbox_at(f),
                    &spec.targets[c.occluded].bbox_at(f),
                );
                assert!(o > 0.5);
            }
        }
    }

    #[test]
    fn too_many_targets() {
        let mut spec = ScenarioSpec::separated(5, 10, 0);
        spec.embedding_dim = 4;
        assert!(generate_scenario(&spec).is_err());
    }

    #[test]
    fn spec_text() {
        let s = read_scenario_spec("n_targets = 1\nn_frames = 10\nseed = 3\n").unwrap();
        assert_eq!((s.targets.len(), s.n_frames), (1, 10));
        let s =
            read_scenario_spec("n_frames = 5\ntarget = 100 100 1 0 40 100\ncrossing = 0 0 1 2\n");
        assert!(s.is_err());
        let s = read_scenario_spec("n_frames = 5\ntarget = 100 100 1 0 40 100\nnoise_std = 2\n")
            .unwrap();
        assert_eq!((s.targets[0].velocity, s.noise_std), ((1.0, 0.0), 2.0));
        assert!(read_scenario_spec("n_targets = 40\n").is_err());
        assert!(read_scenario_spec("n_targetz = 4\n").is_err());
    }
}
