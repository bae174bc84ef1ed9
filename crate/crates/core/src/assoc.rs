//! Tracklet association across windows.
//!
//! Each global track keeps a confidence-adaptive EMA of its appearance and a
//! short history of boxes for least-squares motion extrapolation. A window's
//! tracklets are matched to the live tracks in two rounds: confident
//! tracklets first, then the low-confidence ones against whatever is left.

use std::collections::VecDeque;

use crate::assign::hungarian;
use crate::error::{Error, Result};
use crate::mask::Tracklet;
use crate::model::{cosine_distance, iou, BBox, Config, Detection, Embedding};

pub type CostMatrix = Vec<Vec<f64>>;

/// Cost given to pairs that may never match (time overlap, too long lost).
const FORBIDDEN: f64 = 1e3;

/// EMA momentum for a detection of score `s`: `alpha0` at `s = 1`, rising
/// linearly to 1 at `s = sigma`. Scores below `sigma` freeze the embedding.
pub fn adaptive_alpha(s: f64, sigma: f64, alpha0: f64) -> f64 {
    if s < sigma {
        return 1.0;
    }
    let s = s.min(1.0);
    alpha0 + (1.0 - alpha0) * (1.0 - (s - sigma) / (1.0 - sigma))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppearanceState {
    pub e: Embedding,
    pub alpha0: f64,
    pub sigma: f64,
}

impl AppearanceState {
    pub fn new(e: Embedding, alpha0: f64, sigma: f64) -> Self {
        Self { e, alpha0, sigma }
    }
}

/// `e_t = a_t e_{t-1} + (1 - a_t) e_det`, renormalized.
pub fn update_embedding(state: &AppearanceState, det: &Detection) -> Result<AppearanceState> {
    let alpha = adaptive_alpha(det.score, state.sigma, state.alpha0);
    if alpha >= 1.0 {
        return Ok(state.clone());
    }
    let prev = state.e.as_slice();
    let obs = det.embedding.as_slice();
    if prev.len() != obs.len() {
        return Err(Error::DimensionMismatch {
            left: prev.len(),
            right: obs.len(),
        });
    }
    let blended = prev
        .iter()
        .zip(obs)
        .map(|(p, o)| alpha * p + (1.0 - alpha) * o)
        .collect();
    Ok(AppearanceState {
        e: Embedding::new(blended)?,
        ..state.clone()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackletFeature {
    pub appearance: AppearanceState,
    /// Most recent `(frame, box)` pairs, frame-ascending.
    pub boxes: VecDeque<(u32, BBox)>,
    pub capacity: usize,
    pub mean_score: f64,
    n_scores: usize,
}

impl TrackletFeature {
    pub fn from_tracklet(t: &Tracklet, alpha0: f64, sigma: f64, capacity: usize) -> Result<Self> {
        let first = t
            .first()
            .ok_or_else(|| Error::InvalidInput("empty tracklet has no feature".into()))?;
        let mut f = Self {
            appearance: AppearanceState::new(first.embedding.clone(), alpha0, sigma),
            boxes: VecDeque::new(),
            capacity: capacity.max(1),
            mean_score: 0.0,
            n_scores: 0,
        };
        f.observe(first, false)?;
        for d in &t.detections[1..] {
            f.observe(d, true)?;
        }
        Ok(f)
    }

    pub fn extend(&mut self, t: &Tracklet) -> Result<()> {
        for d in &t.detections {
            self.observe(d, true)?;
        }
        Ok(())
    }

    fn observe(&mut self, d: &Detection, update_appearance: bool) -> Result<()> {
        if update_appearance {
            self.appearance = update_embedding(&self.appearance, d)?;
        }
        self.boxes.push_back((d.frame, d.bbox));
        while self.boxes.len() > self.capacity {
            self.boxes.pop_front();
        }
        self.n_scores += 1;
        self.mean_score += (d.score - self.mean_score) / self.n_scores as f64;
        Ok(())
    }

    pub fn first_box(&self) -> Option<(u32, BBox)> {
        self.boxes.front().copied()
    }

    /// Least-squares linear extrapolation of center and size to `frame`;
    /// constant when fewer than two distinct frames are known.
    pub fn predict(&self, frame: u32) -> Option<BBox> {
        let (_, last) = *self.boxes.back()?;
        let xs: Vec<f64> = self.boxes.iter().map(|(f, _)| *f as f64).collect();
        let n = xs.len() as f64;
        let x_mean = xs.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
        let t = frame as f64;
        let fit = |value: fn(&BBox) -> f64| {
            let ys: Vec<f64> = self.boxes.iter().map(|(_, b)| value(b)).collect();
            let y_mean = ys.iter().sum::<f64>() / n;
            if sxx <= 0.0 {
                return y_mean;
            }
            let sxy: f64 = xs
                .iter()
                .zip(&ys)
                .map(|(x, y)| (x - x_mean) * (y - y_mean))
                .sum();
            y_mean + sxy / sxx * (t - x_mean)
        };
        let cx = fit(|b| b.center().0);
        let cy = fit(|b| b.center().1);
        let mut w = fit(BBox::width);
        let mut h = fit(BBox::height);
        // A collapsing or NaN fit keeps the last size.
        if w.is_nan() || w <= 0.0 {
            w = last.width();
        }
        if h.is_nan() || h <= 0.0 {
            h = last.height();
        }
        BBox::from_center(cx, cy, w, h).ok()
    }
}

/// `C^m[i][j] = 1 - iou(prediction of i at j's first frame, j's first box)`.
pub fn motion_cost_matrix(current: &[TrackletFeature], next: &[TrackletFeature]) -> CostMatrix {
    current
        .iter()
        .map(|c| {
            next.iter()
                .map(|n| match n.first_box() {
                    Some((frame, first)) => c.predict(frame).map_or(1.0, |p| 1.0 - iou(&p, &first)),
                    None => 1.0,
                })
                .collect()
        })
        .collect()
}

/// Cosine distances between the tracks' and tracklets' EMA embeddings.
pub fn appearance_cost_matrix(
    current: &[TrackletFeature],
    next: &[TrackletFeature],
) -> Result<CostMatrix> {
    current
        .iter()
        .map(|c| {
            next.iter()
                .map(|n| cosine_distance(&c.appearance.e, &n.appearance.e))
                .collect()
        })
        .collect()
}

/// Gated appearance cost `gamma * C^a` (else 1), fused with motion by elementwise min.
pub fn fuse_costs(
    motion: &CostMatrix,
    appearance: &CostMatrix,
    gamma: f64,
    theta_iou: f64,
    theta_emb: f64,
) -> Result<CostMatrix> {
    let same_shape = motion.len() == appearance.len()
        && motion
            .iter()
            .zip(appearance)
            .all(|(m, a)| m.len() == a.len());
    if !same_shape {
        return Err(Error::InvalidInput("cost matrices differ in shape".into()));
    }
    Ok(motion
        .iter()
        .zip(appearance)
        .map(|(mr, ar)| {
            mr.iter()
                .zip(ar)
                .map(|(&m, &a)| {
                    let gated = if a < theta_emb && m < theta_iou {
                        gamma * a
                    } else {
                        1.0
                    };
                    m.min(gated)
                })
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchOutcome {
    /// `(current row, next column)` pairs.
    pub matches: Vec<(usize, usize)>,
    pub unmatched_current: Vec<usize>,
    pub unmatched_next: Vec<usize>,
}

/// Two-round matching: all current rows against confident columns
/// (`score > tau`) accepting `cost <= theta1`, then leftover rows against
/// the remaining columns accepting `cost <= theta2`.
pub fn hierarchical_match(
    fused: &CostMatrix,
    next_scores: &[f64],
    tau: f64,
    theta1: f64,
    theta2: f64,
) -> MatchOutcome {
    let n_rows = fused.len();
    let (high, low): (Vec<usize>, Vec<usize>) =
        (0..next_scores.len()).partition(|&j| next_scores[j] > tau);

    let round = |rows: &[usize], cols: &[usize], theta: f64| -> Vec<(usize, usize)> {
        let sub: CostMatrix = rows
            .iter()
            .map(|&i| cols.iter().map(|&j| fused[i][j]).collect())
            .collect();
        hungarian(&sub)
            .into_iter()
            .map(|(r, c)| (rows[r], cols[c]))
            .filter(|&(i, j)| fused[i][j] <= theta)
            .collect()
    };

    let all_rows: Vec<usize> = (0..n_rows).collect();
    let mut matches = round(&all_rows, &high, theta1);
    let left: Vec<usize> = all_rows
        .iter()
        .copied()
        .filter(|i| !matches.iter().any(|m| m.0 == *i))
        .collect();
    matches.extend(round(&left, &low, theta2));
    matches.sort_unstable();

    MatchOutcome {
        unmatched_current: all_rows
            .into_iter()
            .filter(|i| !matches.iter().any(|m| m.0 == *i))
            .collect(),
        unmatched_next: (0..next_scores.len())
            .filter(|j| !matches.iter().any(|m| m.1 == *j))
            .collect(),
        matches,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackState {
    Active,
    Lost,
    Finished,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalTrack {
    pub track_id: u64,
    pub tracklets: Vec<Tracklet>,
    pub last_seen_frame: u32,
    pub state: TrackState,
    pub feature: TrackletFeature,
}

impl GlobalTrack {
    pub fn detections(&self) -> impl Iterator<Item = &Detection> {
        self.tracklets.iter().flat_map(|t| t.detections.iter())
    }
}

/// Applies one round of matches to the track list.
///
/// `current[r]` is the index into `tracks` of cost-matrix row `r`; `next`
/// holds the window's tracklets with their features. Unmatched tracklets
/// open new tracks numbered from `next_id`.
pub fn lifecycle_step(
    tracks: &mut Vec<GlobalTrack>,
    current: &[usize],
    outcome: &MatchOutcome,
    next: Vec<(Tracklet, TrackletFeature)>,
    frame: u32,
    max_lost: u32,
    next_id: &mut u64,
) -> Result<()> {
    let mut next: Vec<Option<(Tracklet, TrackletFeature)>> = next.into_iter().map(Some).collect();
    for &(r, c) in &outcome.matches {
        let (t, _) = next[c]
            .take()
            .ok_or_else(|| Error::Invariant(format!("tracklet {c} matched twice")))?;
        let track = &mut tracks[current[r]];
        track.feature.extend(&t)?;
        track.last_seen_frame = t.last().map_or(track.last_seen_frame, |d| d.frame);
        track.state = TrackState::Active;
        track.tracklets.push(t);
    }
    for &r in &outcome.unmatched_current {
        let track = &mut tracks[current[r]];
        track.state = if frame.saturating_sub(track.last_seen_frame) > max_lost {
            TrackState::Finished
        } else {
            TrackState::Lost
        };
    }
    for (t, feature) in next.into_iter().flatten() {
        let last_seen_frame = t.last().map_or(frame, |d| d.frame);
        tracks.push(GlobalTrack {
            track_id: *next_id,
            tracklets: vec![t],
            last_seen_frame,
            state: TrackState::Active,
            feature,
        });
        *next_id += 1;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepSummary {
    pub matched_high: usize,
    pub matched_low: usize,
    pub new_tracks: usize,
}

/// Owns the global track state across windows.
#[derive(Debug, Clone)]
pub struct Associator {
    config: Config,
    tracks: Vec<GlobalTrack>,
    next_id: u64,
}

impl Associator {
    pub fn new(config: &Config) -> Self {
        Self {
            config: config.clone(),
            tracks: Vec::new(),
            next_id: 1,
        }
    }

    pub fn tracks(&self) -> &[GlobalTrack] {
        &self.tracks
    }

    /// Matches one window's tracklets against the live tracks.
    /// `frame` is the last frame of the window.
    pub fn step(&mut self, tracklets: Vec<Tracklet>, frame: u32) -> Result<StepSummary> {
        let c = &self.config;
        let mut next = Vec::with_capacity(tracklets.len());
        for t in tracklets.into_iter().filter(|t| !t.is_empty()) {
            let f = TrackletFeature::from_tracklet(&t, c.alpha0, c.sigma(), c.window_size)?;
            next.push((t, f));
        }
        let current: Vec<usize> = (0..self.tracks.len())
            .filter(|&i| self.tracks[i].state != TrackState::Finished)
            .collect();
        let cur_features: Vec<TrackletFeature> = current
            .iter()
            .map(|&i| self.tracks[i].feature.clone())
            .collect();
        let next_features: Vec<TrackletFeature> = next.iter().map(|(_, f)| f.clone()).collect();

        let motion = motion_cost_matrix(&cur_features, &next_features);
        let appearance = appearance_cost_matrix(&cur_features, &next_features)?;
        let mut fused = fuse_costs(&motion, &appearance, c.gamma, c.theta_iou, c.theta_emb)?;
        for (r, &ti) in current.iter().enumerate() {
            let last_seen = self.tracks[ti].last_seen_frame;
            for (col, (t, _)) in next.iter().enumerate() {
                let start = t.first().map_or(0, |d| d.frame);
                if start <= last_seen || start - last_seen > c.max_lost_frames {
                    fused[r][col] = FORBIDDEN;
                }
            }
        }
        let scores: Vec<f64> = next_features.iter().map(|f| f.mean_score).collect();
        let outcome = hierarchical_match(&fused, &scores, c.tau, c.theta_match1, c.theta_match2);
        let summary = StepSummary {
            matched_high: outcome
                .matches
                .iter()
                .filter(|m| scores[m.1] > c.tau)
                .count(),
            matched_low: outcome
                .matches
                .iter()
                .filter(|m| scores[m.1] <= c.tau)
                .count(),
            new_tracks: outcome.unmatched_next.len(),
        };
        let max_lost = c.max_lost_frames;
        lifecycle_step(
            &mut self.tracks,
            &current,
            &outcome,
            next,
            frame,
            max_lost,
            &mut self.next_id,
        )?;
        Ok(summary)
    }

    /// Closes every track and returns them in id order.
    pub fn finish(mut self) -> Vec<GlobalTrack> {
        for t in &mut self.tracks {
            t.state = TrackState::Finished;
        }
        self.tracks
    }
}
