//! Domain types and the geometric/vector primitives shared by the tracker.
//!
//! Boxes are real-valued pixel rectangles `(x_l, y_t, x_r, y_b)` with `y`
//! growing downward. Embeddings are L2-normalized once on construction, so
//! downstream code treats cosine similarity as a plain dot product.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub x_l: f64,
    pub y_t: f64,
    pub x_r: f64,
    pub y_b: f64,
}

impl BBox {
    pub fn new(x_l: f64, y_t: f64, x_r: f64, y_b: f64) -> Result<Self> {
        let finite = [x_l, y_t, x_r, y_b].iter().all(|v| v.is_finite());
        if !finite || x_l >= x_r || y_t >= y_b {
            return Err(Error::InvalidBox(format!("({x_l}, {y_t}, {x_r}, {y_b})")));
        }
        Ok(Self { x_l, y_t, x_r, y_b })
    }

    /// Box from MOT-style left/top/width/height.
    pub fn from_ltwh(left: f64, top: f64, width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0) {
            return Err(Error::InvalidBox(format!(
                "non-positive size {width}x{height}"
            )));
        }
        Self::new(left, top, left + width, top + height)
    }

    /// Box from center and size; used by motion extrapolation.
    pub fn from_center(cx: f64, cy: f64, width: f64, height: f64) -> Result<Self> {
        Self::from_ltwh(cx - width / 2.0, cy - height / 2.0, width, height)
    }

    pub fn width(&self) -> f64 {
        self.x_r - self.x_l
    }

    pub fn height(&self) -> f64 {
        self.y_b - self.y_t
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x_l + self.x_r) / 2.0, (self.y_t + self.y_b) / 2.0)
    }

    pub fn ltwh(&self) -> [f64; 4] {
        [self.x_l, self.y_t, self.width(), self.height()]
    }
}

/// Convenience alias kept next to [`BBox::from_ltwh`] for readers coming from MOT files.
pub fn bbox_from_ltwh(left: f64, top: f64, width: f64, height: f64) -> Result<BBox> {
    BBox::from_ltwh(left, top, width, height)
}

/// Intersection over union of two valid boxes.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    if a == b {
        return 1.0;
    }
    let w = a.x_r.min(b.x_r) - a.x_l.max(b.x_l);
    let h = a.y_b.min(b.y_b) - a.y_t.max(b.y_t);
    if w <= 0.0 || h <= 0.0 {
        return 0.0;
    }
    let inter = w * h;
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Unit-norm appearance vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    /// Normalizes `values` to unit L2 norm. Zero or non-finite vectors are rejected.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidInput(
                "embedding has zero or non-finite norm".into(),
            ));
        }
        Ok(Self(values.into_iter().map(|v| v / norm).collect()))
    }

    /// Axis-aligned unit vector `e_axis` of dimension `dim`.
    pub fn basis(dim: usize, axis: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &Embedding) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }
}

/// `1 - cos(a, b)` for unit vectors, clamped to `[0, 2]`.
pub fn cosine_distance(a: &Embedding, b: &Embedding) -> Result<f64> {
    Ok((1.0 - a.dot(b)?).clamp(0.0, 2.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    /// 0-based frame number.
    pub frame: u32,
    /// 1-based index, unique within the owning window.
    pub index: usize,
    pub bbox: BBox,
    pub score: f64,
    pub embedding: Embedding,
    /// Position of the detection in the input file.
    pub source: usize,
}

impl Detection {
    pub fn new(frame: u32, bbox: BBox, score: f64, embedding: Embedding) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::InvalidInput(format!("score {score} outside [0, 1]")));
        }
        Ok(Self {
            frame,
            index: 0,
            bbox,
            score,
            embedding,
            source: 0,
        })
    }

    pub fn with_source(mut self, source: usize) -> Self {
        self.source = source;
        self
    }
}

/// A contiguous frame range with its confidence partition.
///
/// `flow_start` is the first frame whose detections this window owns: frames
/// shared with the previous window stay with the previous window for flow
/// purposes, so `detections` only holds frames `flow_start..=end_frame`.
#[derive(Debug, Clone)]
pub struct Window {
    pub start_frame: u32,
    pub end_frame: u32,
    pub flow_start: u32,
    pub detections: Vec<Detection>,
    /// Indices (1-based) of detections with score > tau.
    pub high: Vec<usize>,
    /// Indices (1-based) of detections with score <= tau.
    pub low: Vec<usize>,
}

impl Window {
    /// Sorts detections by `(frame, source)`, numbers them `1..=n` and splits by `tau`.
    pub fn new(
        start_frame: u32,
        end_frame: u32,
        flow_start: u32,
        mut detections: Vec<Detection>,
        tau: f64,
    ) -> Result<Self> {
        if start_frame > end_frame || flow_start < start_frame || flow_start > end_frame {
            return Err(Error::InvalidInput(format!(
                "bad window range {start_frame}..={end_frame} (flow from {flow_start})"
            )));
        }
        if let Some(d) = detections
            .iter()
            .find(|d| d.frame < flow_start || d.frame > end_frame)
        {
            return Err(Error::InvalidInput(format!(
                "detection at frame {} outside window {flow_start}..={end_frame}",
                d.frame
            )));
        }
        detections.sort_by_key(|d| (d.frame, d.source));
        for (i, d) in detections.iter_mut().enumerate() {
            d.index = i + 1;
        }
        let (high, low) = crate::graphgen::partition_detections(&detections, tau);
        Ok(Self {
            start_frame,
            end_frame,
            flow_start,
            detections,
            high,
            low,
        })
    }

    pub fn empty(start_frame: u32, end_frame: u32) -> Self {
        Self {
            start_frame,
            end_frame,
            flow_start: start_frame,
            detections: Vec::new(),
            high: Vec::new(),
            low: Vec::new(),
        }
    }

    /// Detection by 1-based index.
    pub fn detection(&self, index: usize) -> Option<&Detection> {
        index.checked_sub(1).and_then(|i| self.detections.get(i))
    }

    pub fn high_detections(&self) -> Vec<Detection> {
        self.high
            .iter()
            .filter_map(|&i| self.detection(i).cloned())
            .collect()
    }

    pub fn low_detections(&self) -> Vec<Detection> {
        self.low
            .iter()
            .filter_map(|&i| self.detection(i).cloned())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    /// Detection split threshold.
    pub tau: f64,
    pub window_size: usize,
    pub window_overlap: usize,
    pub alpha0: f64,
    /// Noisy-detection threshold of the adaptive EMA; `None` means "same as tau".
    pub sigma: Option<f64>,
    pub gamma: f64,
    pub theta_iou: f64,
    pub theta_emb: f64,
    pub theta_match1: f64,
    pub theta_match2: f64,
    pub max_lost_frames: u32,
    pub enter_exit_cost: f64,
    pub w_iou: f64,
    pub w_app: f64,
    /// Expected embedding dimension; 0 accepts whatever the input provides.
    pub embedding_dim: usize,
    pub landmark_cost: f64,
    pub max_frame_gap: u32,
    /// Transition penalty per skipped frame.
    pub gap_cost: f64,
    /// Enables the occlusion-contact condition in both masks.
    pub contact_mask: bool,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            tau: 0.6,
            window_size: 15,
            window_overlap: 2,
            alpha0: 0.95,
            sigma: None,
            gamma: 0.5,
            theta_iou: 0.5,
            theta_emb: 0.25,
            theta_match1: 0.7,
            theta_match2: 0.5,
            max_lost_frames: 30,
            enter_exit_cost: 2.0,
            w_iou: 0.5,
            w_app: 0.5,
            embedding_dim: 0,
            landmark_cost: -50.0,
            max_frame_gap: 2,
            gap_cost: 1.0,
            contact_mask: true,
        }
    }
}

impl Config {
    pub fn sigma(&self) -> f64 {
        self.sigma.unwrap_or(self.tau)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        let reals = [
            self.tau,
            self.alpha0,
            self.sigma(),
            self.gamma,
            self.theta_iou,
            self.theta_emb,
            self.theta_match1,
            self.theta_match2,
            self.enter_exit_cost,
            self.w_iou,
            self.w_app,
            self.landmark_cost,
            self.gap_cost,
        ];
        if reals.iter().any(|v| !v.is_finite()) {
            return bad("non-finite parameter");
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad("tau must lie in (0, 1)");
        }
        if self.window_size == 0 {
            return bad("window_size must be positive");
        }
        if self.window_overlap >= self.window_size {
            return bad("window_overlap must be smaller than window_size");
        }
        if !(0.0..=1.0).contains(&self.alpha0) {
            return bad("alpha0 must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.sigma()) {
            return bad("sigma must lie in [0, 1)");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if self.theta_match2 > self.theta_match1 {
            return bad("theta_match2 must not exceed theta_match1");
        }
        if self.w_iou < 0.0 || self.w_app < 0.0 || (self.w_iou + self.w_app - 1.0).abs() > 1e-9 {
            return bad("w_iou and w_app must be non-negative and sum to 1");
        }
        if self.enter_exit_cost < 0.0 {
            return bad("enter_exit_cost must be non-negative");
        }
        if self.gap_cost < 0.0 {
            return bad("gap_cost must be non-negative");
        }
        if self.max_frame_gap == 0 {
            return bad("max_frame_gap must be at least 1");
        }
        if self.landmark_cost >= crate::graphgen::observation_cost(0.99) {
            return bad("landmark_cost must be below every observation cost");
        }
        Ok(())
    }
}
