//! Per-window two-stage tracking and sequence orchestration.
//!
//! Stage 1 links confident detections. Tracklets that touch each other in
//! suspicious ways are reopened: their detections become landmarks in a
//! Stage-2 graph that also sees the low-confidence detections, which lets
//! the solver bridge occlusions the first pass could not. Stage-2 paths
//! that still look wrong are split back into their Stage-1 pieces.

use std::collections::{BTreeMap, BTreeSet};

use log::debug;

use crate::assoc::{Associator, GlobalTrack};
use crate::error::{Error, Result};
use crate::flow::{extract_tracklets, solve_mcf};
use crate::graphgen::{build_stage1_graph, build_stage2_graph, CostParams};
use crate::io::MotRecord;
use crate::mask::{
    intersection_mask, split_detections, validation_mask, MaskContext, Tracklet, Validity,
};
use crate::model::{BBox, Config, Detection, Window};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmcTransform {
    /// 0-based frame.
    pub frame: u32,
    /// Row-major `[[a11, a12, a13], [a21, a22, a23]]`.
    pub affine: [[f64; 3]; 2],
}

impl CmcTransform {
    pub fn new(frame: u32, affine: [[f64; 3]; 2]) -> Result<Self> {
        if affine.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite transform for frame {frame}"
            )));
        }
        Ok(Self { frame, affine })
    }

    pub fn identity(frame: u32) -> Self {
        Self {
            frame,
            affine: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        }
    }

    /// Bounding box of the four mapped corners.
    pub fn apply(&self, b: &BBox) -> Result<BBox> {
        let [[a11, a12, a13], [a21, a22, a23]] = self.affine;
        let corners = [
            (b.x_l, b.y_t),
            (b.x_r, b.y_t),
            (b.x_l, b.y_b),
            (b.x_r, b.y_b),
        ];
        let mapped = corners.map(|(x, y)| (a11 * x + a12 * y + a13, a21 * x + a22 * y + a23));
        let xs = mapped.map(|p| p.0);
        let ys = mapped.map(|p| p.1);
        let min = |v: [f64; 4]| v.iter().copied().fold(f64::INFINITY, f64::min);
        let max = |v: [f64; 4]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        BBox::new(min(xs), min(ys), max(xs), max(ys))
    }
}

/// Maps every detection's box through its frame's transform.
pub fn apply_cmc(dets: Vec<Detection>, transforms: &[CmcTransform]) -> Result<Vec<Detection>> {
    let mut by_frame = BTreeMap::new();
    for t in transforms {
        if by_frame.insert(t.frame, t).is_some() {
            return Err(Error::InvalidInput(format!(
                "two transforms for frame {}",
                t.frame
            )));
        }
        CmcTransform::new(t.frame, t.affine)?;
    }
    dets.into_iter()
        .map(|mut d| {
            if let Some(t) = by_frame.get(&d.frame) {
                d.bbox = t.apply(&d.bbox)?;
            }
            Ok(d)
        })
        .collect()
}

/// Inclusive `(start, end)` frame ranges of overlapping windows.
pub fn slice_windows(n_frames: u32, window_size: usize, overlap: usize) -> Result<Vec<(u32, u32)>> {
    if window_size == 0 || overlap >= window_size {
        return Err(Error::Config(format!(
            "window overlap {overlap} must be below window size {window_size}"
        )));
    }
    let size = u32::try_from(window_size).map_err(|_| Error::Config("window too large".into()))?;
    let stride = size - overlap as u32;
    let mut out = Vec::new();
    let mut start = 0u32;
    while start < n_frames {
        let end = start.saturating_add(size - 1).min(n_frames - 1);
        out.push((start, end));
        if end == n_frames - 1 {
            break;
        }
        start += stride;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    TwoStage,
    /// Stage 1 only, on confident detections.
    Stage1Only,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub stage1_tracklets: usize,
    pub inaccurate_tracklets: usize,
    pub landmarks: usize,
    pub landmarks_covered: usize,
    pub invalid_tracklets: usize,
    pub stage1_cost: f64,
    pub stage2_cost: f64,
}

#[derive(Debug, Clone)]
pub struct WindowResult {
    pub window: Window,
    pub tracklets: Vec<Tracklet>,
    pub diagnostics: Diagnostics,
}

/// Runs both stages on one window.
pub fn run_window(
    window: Window,
    config: &Config,
    params: &CostParams,
    mode: Mode,
) -> Result<WindowResult> {
    let mut diag = Diagnostics::default();
    let g1 = build_stage1_graph(&window, params)?;
    let r1 = solve_mcf(&g1)?;
    diag.stage1_cost = r1.total_cost;
    let candidates = extract_tracklets(&g1, &r1, &window)?;
    diag.stage1_tracklets = candidates.len();
    if mode == Mode::Stage1Only {
        return finish_window(window, candidates, diag);
    }

    let ctx = MaskContext::new(&window, config.contact_mask);
    let (inaccurate, accurate) = intersection_mask(candidates, &ctx)?;
    diag.inaccurate_tracklets = inaccurate.len();
    let mut tracklets = accurate;
    if !inaccurate.is_empty() {
        let (_, d_inaccurate) = split_detections(&inaccurate);
        let d_low = window.low_detections();
        let g2 = build_stage2_graph(&d_inaccurate, &d_low, params)?;
        let r2 = solve_mcf(&g2)?;
        diag.stage2_cost = r2.total_cost;
        let stage2 = extract_tracklets(&g2, &r2, &window)?;

        let landmarks: BTreeSet<usize> = d_inaccurate.iter().map(|d| d.index).collect();
        diag.landmarks = landmarks.len();
        diag.landmarks_covered = stage2
            .iter()
            .flat_map(|t| &t.detections)
            .filter(|d| landmarks.contains(&d.index))
            .count();
        if diag.landmarks_covered != diag.landmarks {
            return Err(Error::Invariant(format!(
                "stage 2 covered {} of {} landmarks",
                diag.landmarks_covered, diag.landmarks
            )));
        }

        // An invalid Stage-2 tracklet falls back to the Stage-1 grouping of its landmarks.
        let origin: BTreeMap<usize, usize> = inaccurate
            .iter()
            .flat_map(|t| t.detections.iter().map(move |d| (d.index, t.id)))
            .collect();
        for t in validation_mask(stage2, &ctx)? {
            if t.validity == Validity::Valid {
                tracklets.push(t);
                continue;
            }
            diag.invalid_tracklets += 1;
            let mut pieces: BTreeMap<usize, Vec<Detection>> = BTreeMap::new();
            for d in t.detections {
                if let Some(&id) = origin.get(&d.index) {
                    pieces.entry(id).or_default().push(d);
                }
            }
            tracklets.extend(
                pieces
                    .into_values()
                    .map(|dets| Tracklet::from_detections(0, dets)),
            );
        }
    }
    finish_window(window, tracklets, diag)
}

/// Orders tracklets by their first detection and renumbers them.
fn finish_window(
    window: Window,
    mut tracklets: Vec<Tracklet>,
    diagnostics: Diagnostics,
) -> Result<WindowResult> {
    tracklets.retain(|t| !t.is_empty());
    tracklets.sort_by_key(|t| t.first().map(|d| (d.frame, d.index)));
    let mut seen = BTreeSet::new();
    for (id, t) in tracklets.iter_mut().enumerate() {
        t.id = id;
        for d in &t.detections {
            if !seen.insert(d.index) {
                return Err(Error::Invariant(format!(
                    "detection {} in two tracklets",
                    d.index
                )));
            }
        }
    }
    Ok(WindowResult {
        window,
        tracklets,
        diagnostics,
    })
}

/// Cuts a frame-sorted detection list into windows. Frames shared by two
/// windows belong to the earlier one.
pub fn build_windows(dets: &[Detection], config: &Config) -> Result<Vec<Window>> {
    let Some(last) = dets.iter().map(|d| d.frame).max() else {
        return Ok(Vec::new());
    };
    let ranges = slice_windows(last + 1, config.window_size, config.window_overlap)?;
    let mut by_frame: BTreeMap<u32, Vec<Detection>> = BTreeMap::new();
    for d in dets {
        by_frame.entry(d.frame).or_default().push(d.clone());
    }
    let mut windows = Vec::with_capacity(ranges.len());
    let mut owned_to: Option<u32> = None;
    for (start, end) in ranges {
        let flow_start = owned_to.map_or(start, |o| o + 1);
        let own: Vec<Detection> = by_frame
            .range(flow_start..=end)
            .flat_map(|(_, v)| v.iter().cloned())
            .collect();
        windows.push(Window::new(start, end, flow_start, own, config.tau)?);
        owned_to = Some(end);
    }
    Ok(windows)
}

pub fn run_sequence(
    dets: Vec<Detection>,
    transforms: &[CmcTransform],
    config: &Config,
    mode: Mode,
) -> Result<Vec<WindowResult>> {
    config.validate()?;
    check_dimensions(&dets, config.embedding_dim)?;
    let dets = apply_cmc(dets, transforms)?;
    let params = CostParams::from(config);
    build_windows(&dets, config)?
        .into_iter()
        .map(|w| {
            let r = run_window(w, config, &params, mode)?;
            debug!(
                "window {}..={}: {} tracklets, {} reopened",
                r.window.start_frame,
                r.window.end_frame,
                r.tracklets.len(),
                r.diagnostics.inaccurate_tracklets
            );
            Ok(r)
        })
        .collect()
}

fn check_dimensions(dets: &[Detection], expected: usize) -> Result<()> {
    let Some(first) = dets.first() else {
        return Ok(());
    };
    let dim = if expected == 0 {
        first.embedding.dim()
    } else {
        expected
    };
    match dets.iter().find(|d| d.embedding.dim() != dim) {
        Some(d) => Err(Error::DimensionMismatch {
            left: d.embedding.dim(),
            right: dim,
        }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackSummary {
    pub windows: usize,
    pub tracks: usize,
    pub reopened_tracklets: usize,
    pub invalid_tracklets: usize,
    pub landmarks: usize,
    pub landmarks_covered: usize,
}

#[derive(Debug, Clone)]
pub struct TrackOutput {
    pub tracks: Vec<GlobalTrack>,
    pub windows: Vec<WindowResult>,
    pub summary: TrackSummary,
}

/// Full sequence: windows, both stages and association across windows.
pub fn track(
    dets: Vec<Detection>,
    transforms: &[CmcTransform],
    config: &Config,
    mode: Mode,
) -> Result<TrackOutput> {
    let windows = run_sequence(dets, transforms, config, mode)?;
    let mut assoc = Associator::new(config);
    for w in &windows {
        assoc.step(w.tracklets.clone(), w.window.end_frame)?;
    }
    let tracks = assoc.finish();
    let summary = TrackSummary {
        windows: windows.len(),
        tracks: tracks.len(),
        reopened_tracklets: windows
            .iter()
            .map(|w| w.diagnostics.inaccurate_tracklets)
            .sum(),
        invalid_tracklets: windows
            .iter()
            .map(|w| w.diagnostics.invalid_tracklets)
            .sum(),
        landmarks: windows.iter().map(|w| w.diagnostics.landmarks).sum(),
        landmarks_covered: windows
            .iter()
            .map(|w| w.diagnostics.landmarks_covered)
            .sum(),
    };
    Ok(TrackOutput {
        tracks,
        windows,
        summary,
    })
}

/// Result rows for `tracks`. Boxes come from `originals` (keyed by
/// detection source row) so that camera compensation never leaks into output.
pub fn track_records(tracks: &[GlobalTrack], originals: &BTreeMap<usize, BBox>) -> Vec<MotRecord> {
    let mut out: Vec<MotRecord> = tracks
        .iter()
        .flat_map(|t| {
            t.detections().map(move |d| MotRecord {
                frame: d.frame,
                id: t.track_id as i64,
                bbox: originals.get(&d.source).copied().unwrap_or(d.bbox),
                score: 1.0,
            })
        })
        .collect();
    out.sort_by_key(|r| (r.frame, r.id));
    out
}
