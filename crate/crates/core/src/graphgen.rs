//! Construction of the Stage-1 and Stage-2 flow graphs.
//!
//! Observation edges carry the log-odds `ln((1 - s) / s)` of the detection
//! score, so confident detections have negative cost and positive
//! enter/exit costs decide how many trajectories are worth opening.
//! Transition edges mix box overlap and appearance distance.

use crate::error::{Error, Result};
use crate::flow::FlowGraph;
use crate::model::{cosine_distance, iou, Config, Detection, Window};

#[derive(Debug, Clone, PartialEq)]
pub struct CostParams {
    pub enter_exit_cost: f64,
    pub w_iou: f64,
    pub w_app: f64,
    pub max_frame_gap: u32,
    pub gap_cost: f64,
    /// Largest appearance distance that still links boxes without overlap.
    pub gate_appearance: f64,
    pub landmark_cost: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self::from(&Config::default())
    }
}

impl From<&Config> for CostParams {
    fn from(c: &Config) -> Self {
        Self {
            enter_exit_cost: c.enter_exit_cost,
            w_iou: c.w_iou,
            w_app: c.w_app,
            max_frame_gap: c.max_frame_gap,
            gap_cost: c.gap_cost,
            gate_appearance: c.theta_emb,
            landmark_cost: c.landmark_cost,
        }
    }
}

/// Splits detections by score: strictly above `tau` is high.
/// Returns the detections' indices as `(high, low)`.
pub fn partition_detections(dets: &[Detection], tau: f64) -> (Vec<usize>, Vec<usize>) {
    let (high, low): (Vec<&Detection>, Vec<&Detection>) = dets.iter().partition(|d| d.score > tau);
    (
        high.iter().map(|d| d.index).collect(),
        low.iter().map(|d| d.index).collect(),
    )
}

pub fn observation_cost(score: f64) -> f64 {
    let s = score.clamp(0.01, 0.99);
    ((1.0 - s) / s).ln()
}

/// Cost of linking `a` to the later detection `b`, or `None` when the pair is
/// beyond the frame gap or gated out (no overlap and an appearance distance
/// above `gate_appearance`).
/// Every frame skipped by the link adds `gap_cost`.
pub fn transition_cost(a: &Detection, b: &Detection, p: &CostParams) -> Result<Option<f64>> {
    if b.frame <= a.frame {
        return Err(Error::InvalidInput(format!(
            "transition must move forward in time ({} -> {})",
            a.frame, b.frame
        )));
    }
    if b.frame - a.frame > p.max_frame_gap {
        return Ok(None);
    }
    let overlap = iou(&a.bbox, &b.bbox);
    let appearance = cosine_distance(&a.embedding, &b.embedding)?;
    if overlap == 0.0 && appearance > p.gate_appearance {
        return Ok(None);
    }
    let skipped = (b.frame - a.frame - 1) as f64;
    Ok(Some(
        p.w_iou * (1.0 - overlap) + p.w_app * appearance + p.gap_cost * skipped,
    ))
}

/// Graph over `nodes` given as (detection, observation cost) pairs.
fn build_graph(mut nodes: Vec<(&Detection, f64)>, p: &CostParams) -> Result<FlowGraph> {
    nodes.sort_by_key(|(d, _)| (d.frame, d.index));
    let frames = nodes.iter().map(|(d, _)| d.frame).collect();
    let labels = nodes.iter().map(|(d, _)| d.index).collect();
    let mut g = FlowGraph::with_labels(frames, labels)?;
    for (k, (_, obs)) in nodes.iter().enumerate() {
        g.add_enter(k + 1, p.enter_exit_cost);
        g.add_observation(k + 1, *obs);
        g.add_exit(k + 1, p.enter_exit_cost);
    }
    for (i, (a, _)) in nodes.iter().enumerate() {
        for (j, (b, _)) in nodes.iter().enumerate().skip(i + 1) {
            if b.frame == a.frame {
                continue;
            }
            if b.frame - a.frame > p.max_frame_gap {
                break;
            }
            if let Some(c) = transition_cost(a, b, p)? {
                g.add_transition(i + 1, j + 1, c);
            }
        }
    }
    Ok(g)
}

/// Stage-1 graph: high-confidence detections only.
pub fn build_stage1_graph(window: &Window, p: &CostParams) -> Result<FlowGraph> {
    let nodes = window
        .high
        .iter()
        .map(|&i| {
            let d = window
                .detection(i)
                .ok_or_else(|| Error::InvalidInput(format!("window has no detection {i}")))?;
            Ok((d, observation_cost(d.score)))
        })
        .collect::<Result<Vec<_>>>()?;
    build_graph(nodes, p)
}

/// Stage-2 graph: inaccurate detections as landmarks plus low-confidence detections.
pub fn build_stage2_graph(
    d_inaccurate: &[Detection],
    d_low: &[Detection],
    p: &CostParams,
) -> Result<FlowGraph> {
    let landmarks: std::collections::HashSet<usize> =
        d_inaccurate.iter().map(|d| d.index).collect();
    if let Some(d) = d_low.iter().find(|d| landmarks.contains(&d.index)) {
        return Err(Error::InvalidInput(format!(
            "detection {} is both a landmark and low-confidence",
            d.index
        )));
    }
    let nodes = d_inaccurate
        .iter()
        .map(|d| (d, p.landmark_cost))
        .chain(d_low.iter().map(|d| (d, observation_cost(d.score))))
        .collect();
    build_graph(nodes, p)
}
