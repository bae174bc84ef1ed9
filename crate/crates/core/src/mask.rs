//! Tracklet classification after each flow stage.
//!
//! Two tracklets intersect when an edge of one also appears in the other,
//! when its reverse appears in the other, or when the edge is itself invalid
//! (a backwards transition or a mis-numbered observation). The intersection
//! mask marks both members of every such pair inaccurate; the validation
//! mask only invalidates the member found later by the solver.
//!
//! A node-disjoint solve never produces shared or reversed edges between its
//! own paths, so both masks also apply an occlusion-contact rule (switchable
//! through [`MaskContext::contact`]): a tracklet that stops in the middle of
//! the window while overlapping a host tracklet, followed by another tracklet
//! that starts later overlapping the same host, marks the pairs
//! (ender, host) and (starter, host). This is the signature of a target
//! fragmented by occlusion behind the host. The same rule also marks two
//! tracklets that interleave, each skipping frames the other fills with
//! overlapping boxes, which is how two paths share the detections of a
//! single visible target.

use std::collections::{BTreeSet, HashSet};

use crate::error::{Error, Result};
use crate::flow::{detection_of, post_node, pre_node};
use crate::model::{iou, Detection, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Accurate,
    Inaccurate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Validity {
    Valid,
    Invalid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeVerdict {
    Valid,
    InvalidTransition,
    InvalidObservation,
    InverseOfOther,
    SharedWithOther,
}

pub type NodeEdge = (usize, usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Tracklet {
    /// Position in solver augmentation order.
    pub id: usize,
    pub detections: Vec<Detection>,
    /// Observation and transition edges in window node numbering.
    pub edges: Vec<NodeEdge>,
    pub status: Status,
    pub validity: Validity,
}

impl Tracklet {
    /// Builds a tracklet and derives its edge list from the detections' window indices.
    pub fn from_detections(id: usize, detections: Vec<Detection>) -> Self {
        let edges = derive_edges(&detections);
        Self {
            id,
            detections,
            edges,
            status: Status::Accurate,
            validity: Validity::Valid,
        }
    }

    pub fn first(&self) -> Option<&Detection> {
        self.detections.first()
    }

    pub fn last(&self) -> Option<&Detection> {
        self.detections.last()
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }

    pub fn mean_score(&self) -> f64 {
        if self.detections.is_empty() {
            return 0.0;
        }
        self.detections.iter().map(|d| d.score).sum::<f64>() / self.detections.len() as f64
    }

    fn detection_at(&self, frame: u32) -> Option<&Detection> {
        self.detections.iter().find(|d| d.frame == frame)
    }
}

/// Edges of the path through `detections`. Detections without a window
/// index (index 0) have no nodes and contribute nothing.
pub fn derive_edges(detections: &[Detection]) -> Vec<NodeEdge> {
    let mut edges = Vec::with_capacity(2 * detections.len());
    let mut prev: Option<usize> = None;
    for d in detections.iter().filter(|d| d.index > 0) {
        if let Some(p) = prev {
            edges.push((post_node(p), pre_node(d.index)));
        }
        edges.push((pre_node(d.index), post_node(d.index)));
        prev = Some(d.index);
    }
    edges
}

pub struct MaskContext<'a> {
    pub window: &'a Window,
    pub contact: bool,
}

impl<'a> MaskContext<'a> {
    pub fn new(window: &'a Window, contact: bool) -> Self {
        Self { window, contact }
    }
}

/// Classifies one detection-to-detection edge on its own.
pub fn classify_edge(edge: NodeEdge, window: &Window) -> Result<EdgeVerdict> {
    let (u, v) = edge;
    let sink = 2 * window.detections.len() + 1;
    if u == 0 || v == 0 || u >= sink || v >= sink {
        return Err(Error::InvalidInput(format!(
            "edge ({u}, {v}) touches the source, the sink or an unknown node"
        )));
    }
    let (du, dv) = (detection_of(u), detection_of(v));
    if du == dv {
        return Ok(if u % 2 == 1 && v == u + 1 {
            EdgeVerdict::Valid
        } else {
            EdgeVerdict::InvalidObservation
        });
    }
    let frame = |k: usize| window.detection(k).map(|d| d.frame).unwrap_or(0);
    Ok(if u % 2 == 0 && v % 2 == 1 && frame(du) < frame(dv) {
        EdgeVerdict::Valid
    } else {
        EdgeVerdict::InvalidTransition
    })
}

fn has_invalid_edge(t: &Tracklet, window: &Window) -> Result<bool> {
    for &e in &t.edges {
        if classify_edge(e, window)? != EdgeVerdict::Valid {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Index pairs `(i, j)`, `i < j`, of intersecting tracklets.
pub fn flagged_pairs(
    tracklets: &[Tracklet],
    ctx: &MaskContext,
) -> Result<BTreeSet<(usize, usize)>> {
    let edge_sets: Vec<HashSet<NodeEdge>> = tracklets
        .iter()
        .map(|t| t.edges.iter().copied().collect())
        .collect();
    let mut invalid = Vec::with_capacity(tracklets.len());
    for t in tracklets {
        invalid.push(has_invalid_edge(t, ctx.window)?);
    }
    let mut pairs = BTreeSet::new();
    for (i, t) in tracklets.iter().enumerate() {
        for &(u, v) in &t.edges {
            for j in (0..tracklets.len()).filter(|&j| j != i) {
                let other = &edge_sets[j];
                if other.contains(&(u, v)) || other.contains(&(v, u)) {
                    pairs.insert((i.min(j), i.max(j)));
                }
            }
        }
        if invalid[i] {
            for j in (0..tracklets.len()).filter(|&j| j != i) {
                pairs.insert((i.min(j), i.max(j)));
            }
        }
    }
    if ctx.contact {
        pairs.extend(contact_pairs(tracklets, ctx.window));
    }
    Ok(pairs)
}

/// Pairs produced by the occlusion-contact rule.
pub fn contact_pairs(tracklets: &[Tracklet], window: &Window) -> BTreeSet<(usize, usize)> {
    let mut pairs = fragment_pairs(tracklets, window);
    pairs.extend(interleave_pairs(tracklets));
    pairs
}

/// Tracklet pairs that alternate: each has a detection inside a frame gap
/// of the other, overlapping the detections that bound the gap.
fn interleave_pairs(tracklets: &[Tracklet]) -> BTreeSet<(usize, usize)> {
    let fills_gap = |t: &Tracklet, other: &Tracklet| {
        t.detections.windows(2).any(|w| {
            let (before, after) = (&w[0], &w[1]);
            after.frame > before.frame + 1
                && other.detections.iter().any(|d| {
                    d.frame > before.frame
                        && d.frame < after.frame
                        && (iou(&d.bbox, &before.bbox) > 0.0 || iou(&d.bbox, &after.bbox) > 0.0)
                })
        })
    };
    let mut pairs = BTreeSet::new();
    for a in 0..tracklets.len() {
        for b in a + 1..tracklets.len() {
            if fills_gap(&tracklets[a], &tracklets[b]) && fills_gap(&tracklets[b], &tracklets[a]) {
                pairs.insert((a, b));
            }
        }
    }
    pairs
}

fn fragment_pairs(tracklets: &[Tracklet], window: &Window) -> BTreeSet<(usize, usize)> {
    let touches = |d: &Detection, host: &Tracklet| {
        host.detection_at(d.frame)
            .is_some_and(|h| iou(&h.bbox, &d.bbox) > 0.0)
    };
    let mut pairs = BTreeSet::new();
    for (h, host) in tracklets.iter().enumerate() {
        let enders: Vec<(usize, u32)> = tracklets
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != h)
            .filter_map(|(i, t)| {
                let d = t.last()?;
                (d.frame < window.end_frame && touches(d, host)).then_some((i, d.frame))
            })
            .collect();
        let starters: Vec<(usize, u32)> = tracklets
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != h)
            .filter_map(|(i, t)| {
                let d = t.first()?;
                (d.frame > window.flow_start && touches(d, host)).then_some((i, d.frame))
            })
            .collect();
        for &(a, end) in &enders {
            for &(c, start) in &starters {
                if c != a && start > end {
                    pairs.insert((a.min(h), a.max(h)));
                    pairs.insert((c.min(h), c.max(h)));
                }
            }
        }
    }
    pairs
}

/// Splits candidates into `(inaccurate, accurate)`, preserving input order.
pub fn intersection_mask(
    candidates: Vec<Tracklet>,
    ctx: &MaskContext,
) -> Result<(Vec<Tracklet>, Vec<Tracklet>)> {
    let mut flagged = vec![false; candidates.len()];
    for (i, j) in flagged_pairs(&candidates, ctx)? {
        flagged[i] = true;
        flagged[j] = true;
    }
    if candidates.len() == 1 && has_invalid_edge(&candidates[0], ctx.window)? {
        flagged[0] = true;
    }
    let mut inaccurate = Vec::new();
    let mut accurate = Vec::new();
    for (mut t, f) in candidates.into_iter().zip(flagged) {
        if f {
            t.status = Status::Inaccurate;
            inaccurate.push(t);
        } else {
            t.status = Status::Accurate;
            accurate.push(t);
        }
    }
    Ok((inaccurate, accurate))
}

/// Marks the later (larger id) member of every intersecting pair invalid.
pub fn validation_mask(mut tracklets: Vec<Tracklet>, ctx: &MaskContext) -> Result<Vec<Tracklet>> {
    let pairs = flagged_pairs(&tracklets, ctx)?;
    let lone_invalid = tracklets.len() == 1 && has_invalid_edge(&tracklets[0], ctx.window)?;
    for t in tracklets.iter_mut() {
        t.validity = Validity::Valid;
    }
    for (i, j) in pairs {
        let later = if tracklets[i].id >= tracklets[j].id {
            i
        } else {
            j
        };
        tracklets[later].validity = Validity::Invalid;
    }
    if lone_invalid {
        tracklets[0].validity = Validity::Invalid;
    }
    Ok(tracklets)
}

/// Detections of accurate and inaccurate candidates, as `(D_accurate, D_inaccurate)`.
pub fn split_detections(candidates: &[Tracklet]) -> (Vec<Detection>, Vec<Detection>) {
    let mut accurate = Vec::new();
    let mut inaccurate = Vec::new();
    for t in candidates {
        let target = match t.status {
            Status::Accurate => &mut accurate,
            Status::Inaccurate => &mut inaccurate,
        };
        target.extend(t.detections.iter().cloned());
    }
    accurate.sort_by_key(|d: &Detection| d.index);
    inaccurate.sort_by_key(|d: &Detection| d.index);
    (accurate, inaccurate)
}
