//! CLEAR-MOT and identity metrics for desk-scale evaluation.

use std::collections::{BTreeMap, BTreeSet};

use crate::assign::hungarian;
use crate::error::{Error, Result};
use crate::io::MotRecord;
use crate::model::{iou, BBox};

/// Minimum IoU for a ground-truth/prediction correspondence.
pub const IOU_THRESHOLD: f64 = 0.5;

/// Ground-truth and predicted boxes of one frame, keyed by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameBoxes {
    pub frame: u32,
    pub gt: Vec<(i64, BBox)>,
    pub pred: Vec<(i64, BBox)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameMatchSet {
    pub frame: u32,
    /// `(gt_id, pred_id)` pairs.
    pub matched: Vec<(i64, i64)>,
    /// Unmatched prediction ids.
    pub false_positives: Vec<i64>,
    /// Unmatched ground-truth ids.
    pub misses: Vec<i64>,
}

/// Groups records by frame over the union of both frame ranges.
pub fn group_frames(gt: &[MotRecord], pred: &[MotRecord]) -> Vec<FrameBoxes> {
    let mut frames: BTreeMap<u32, FrameBoxes> = BTreeMap::new();
    for r in gt {
        let f = frames.entry(r.frame).or_insert_with(|| FrameBoxes {
            frame: r.frame,
            ..Default::default()
        });
        f.gt.push((r.id, r.bbox));
    }
    for r in pred {
        let f = frames.entry(r.frame).or_insert_with(|| FrameBoxes {
            frame: r.frame,
            ..Default::default()
        });
        f.pred.push((r.id, r.bbox));
    }
    frames.into_values().collect()
}

/// Matches one frame. Pairs from `prev` (gt id to its last pred id) are kept
/// while both boxes exist and still overlap enough; the rest go through an
/// optimal assignment on `1 - iou`.
pub fn match_frame(
    frame: u32,
    gt: &[(i64, BBox)],
    pred: &[(i64, BBox)],
    prev: &BTreeMap<i64, i64>,
) -> FrameMatchSet {
    let mut gt_used = vec![false; gt.len()];
    let mut pred_used = vec![false; pred.len()];
    let mut matched = Vec::new();

    for (gi, (gid, gbox)) in gt.iter().enumerate() {
        let Some(pid) = prev.get(gid) else { continue };
        let found = pred
            .iter()
            .enumerate()
            .find(|(pi, (p, _))| p == pid && !pred_used[*pi]);
        if let Some((pi, (_, pbox))) = found {
            if iou(gbox, pbox) >= IOU_THRESHOLD {
                gt_used[gi] = true;
                pred_used[pi] = true;
                matched.push((*gid, *pid));
            }
        }
    }

    let rows: Vec<usize> = (0..gt.len()).filter(|&i| !gt_used[i]).collect();
    let cols: Vec<usize> = (0..pred.len()).filter(|&j| !pred_used[j]).collect();
    let cost: Vec<Vec<f64>> = rows
        .iter()
        .map(|&i| {
            cols.iter()
                .map(|&j| 1.0 - iou(&gt[i].1, &pred[j].1))
                .collect()
        })
        .collect();
    for (r, c) in hungarian(&cost) {
        if cost[r][c] <= 1.0 - IOU_THRESHOLD {
            let (i, j) = (rows[r], cols[c]);
            gt_used[i] = true;
            pred_used[j] = true;
            matched.push((gt[i].0, pred[j].0));
        }
    }
    matched.sort_unstable();

    FrameMatchSet {
        frame,
        matched,
        false_positives: (0..pred.len())
            .filter(|&j| !pred_used[j])
            .map(|j| pred[j].0)
            .collect(),
        misses: (0..gt.len())
            .filter(|&i| !gt_used[i])
            .map(|i| gt[i].0)
            .collect(),
    }
}

/// Runs [`match_frame`] over a whole sequence, carrying the last pair of every gt id.
pub fn match_sequence(frames: &[FrameBoxes]) -> Vec<FrameMatchSet> {
    let mut last: BTreeMap<i64, i64> = BTreeMap::new();
    frames
        .iter()
        .map(|f| {
            let m = match_frame(f.frame, &f.gt, &f.pred, &last);
            for &(g, p) in &m.matched {
                last.insert(g, p);
            }
            m
        })
        .collect()
}

fn num_gt(frames: &[FrameMatchSet]) -> Result<usize> {
    let n: usize = frames
        .iter()
        .map(|f| f.matched.len() + f.misses.len())
        .sum();
    if n == 0 {
        return Err(Error::InvalidInput("ground truth is empty".into()));
    }
    Ok(n)
}

/// Matched gt whose prediction id differs from the one at its previous match.
pub fn compute_ids(frames: &[FrameMatchSet]) -> usize {
    let mut last: BTreeMap<i64, i64> = BTreeMap::new();
    let mut switches = 0;
    for f in frames {
        for &(g, p) in &f.matched {
            if let Some(old) = last.insert(g, p) {
                if old != p {
                    switches += 1;
                }
            }
        }
    }
    switches
}

pub fn compute_mota(frames: &[FrameMatchSet]) -> Result<f64> {
    let n = num_gt(frames)?;
    let misses: usize = frames.iter().map(|f| f.misses.len()).sum();
    let fps: usize = frames.iter().map(|f| f.false_positives.len()).sum();
    Ok(1.0 - (misses + fps + compute_ids(frames)) as f64 / n as f64)
}

/// Identity F1 under the best global one-to-one gt/pred id mapping.
pub fn compute_idf1(frames: &[FrameBoxes]) -> Result<f64> {
    let gt_ids: BTreeSet<i64> = frames
        .iter()
        .flat_map(|f| f.gt.iter().map(|g| g.0))
        .collect();
    let pred_ids: BTreeSet<i64> = frames
        .iter()
        .flat_map(|f| f.pred.iter().map(|p| p.0))
        .collect();
    let n_gt: usize = frames.iter().map(|f| f.gt.len()).sum();
    let n_pred: usize = frames.iter().map(|f| f.pred.len()).sum();
    if n_gt == 0 {
        return Err(Error::InvalidInput("ground truth is empty".into()));
    }
    let gi: BTreeMap<i64, usize> = gt_ids.iter().enumerate().map(|(i, &g)| (g, i)).collect();
    let pi: BTreeMap<i64, usize> = pred_ids.iter().enumerate().map(|(i, &p)| (p, i)).collect();

    let mut overlap = vec![vec![0usize; pred_ids.len()]; gt_ids.len()];
    for f in frames {
        for (g, gb) in &f.gt {
            for (p, pb) in &f.pred {
                if iou(gb, pb) >= IOU_THRESHOLD {
                    overlap[gi[g]][pi[p]] += 1;
                }
            }
        }
    }
    let cost: Vec<Vec<f64>> = overlap
        .iter()
        .map(|r| r.iter().map(|&c| -(c as f64)).collect())
        .collect();
    let idtp: usize = hungarian(&cost)
        .into_iter()
        .map(|(r, c)| overlap[r][c])
        .sum();
    Ok(2.0 * idtp as f64 / (n_gt + n_pred) as f64)
}

/// Mostly tracked (matched in at least 80% of its frames) and mostly lost
/// (at most 20%) ground-truth identities.
pub fn compute_mt_ml(frames: &[FrameMatchSet]) -> Result<(usize, usize)> {
    num_gt(frames)?;
    let mut stats: BTreeMap<i64, (usize, usize)> = BTreeMap::new();
    for f in frames {
        for &(g, _) in &f.matched {
            let s = stats.entry(g).or_default();
            s.0 += 1;
            s.1 += 1;
        }
        for &g in &f.misses {
            stats.entry(g).or_default().1 += 1;
        }
    }
    let ratio = |&(hit, span): &(usize, usize)| hit as f64 / span as f64;
    let mt = stats.values().filter(|s| ratio(s) >= 0.8).count();
    let ml = stats.values().filter(|s| ratio(s) <= 0.2).count();
    Ok((mt, ml))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mota: f64,
    pub idf1: f64,
    pub ids: usize,
    pub mt: usize,
    pub ml: usize,
    pub false_positives: usize,
    pub misses: usize,
    pub num_gt: usize,
}

pub fn evaluate(gt: &[MotRecord], pred: &[MotRecord]) -> Result<Summary> {
    let frames = group_frames(gt, pred);
    let matches = match_sequence(&frames);
    let (mt, ml) = compute_mt_ml(&matches)?;
    Ok(Summary {
        mota: compute_mota(&matches)?,
        idf1: compute_idf1(&frames)?,
        ids: compute_ids(&matches),
        mt,
        ml,
        false_positives: matches.iter().map(|f| f.false_positives.len()).sum(),
        misses: matches.iter().map(|f| f.misses.len()).sum(),
        num_gt: num_gt(&matches)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(frame: u32, id: i64, x: f64) -> MotRecord {
        MotRecord {
            frame,
            id,
            bbox: BBox::new(x, 0.0, x + 10.0, 10.0).unwrap(),
            score: 1.0,
        }
    }

    #[test]
    fn match_frame_examples() {
        let b = |x| BBox::new(x, 0.0, x + 10.0, 10.0).unwrap();
        let none = BTreeMap::new();

        let m = match_frame(
            0,
            &[(1, b(0.0)), (2, b(50.0))],
            &[(7, b(50.0)), (8, b(0.0))],
            &none,
        );
        assert_eq!(m.matched, vec![(1, 8), (2, 7)]);
        assert!(m.false_positives.is_empty() && m.misses.is_empty());

        let m = match_frame(0, &[(1, b(0.0))], &[], &none);
        assert_eq!(m.misses, vec![1]);

        // A shift of 30/7 leaves iou at exactly 0.4.
        let shift = 10.0 * (1.0 - 0.4) / 1.4;
        let m = match_frame(0, &[(1, b(0.0))], &[(3, b(shift))], &none);
        assert!(m.matched.is_empty());
        assert_eq!((m.false_positives, m.misses), (vec![3], vec![1]));
    }

    #[test]
    fn previous_pairs_persist() {
        let b = |x| BBox::new(x, 0.0, x + 10.0, 10.0).unwrap();
        let prev = BTreeMap::from([(1, 9)]);
        // Pred 8 fits better, but the existing pair is still above threshold.
        let m = match_frame(0, &[(1, b(0.0))], &[(8, b(0.0)), (9, b(2.0))], &prev);
        assert_eq!(m.matched, vec![(1, 9)]);
        assert_eq!(m.false_positives, vec![8]);
    }

    #[test]
    fn perfect_tracking() {
        let gt: Vec<MotRecord> = (0..20)
            .flat_map(|f| [rec(f, 1, 0.0), rec(f, 2, 40.0)])
            .collect();
        let s = evaluate(&gt, &gt).unwrap();
        assert_eq!((s.mota, s.idf1, s.ids, s.mt, s.ml), (1.0, 1.0, 0, 2, 0));
    }

    #[test]
    fn single_switch_over_hundred_frames() {
        let gt: Vec<MotRecord> = (0..100).map(|f| rec(f, 1, 0.0)).collect();
        let pred: Vec<MotRecord> = (0..100)
            .map(|f| rec(f, if f < 50 { 5 } else { 6 }, 0.0))
            .collect();
        let s = evaluate(&gt, &pred).unwrap();
        assert_eq!(s.ids, 1);
        assert!((s.mota - 0.99).abs() < 1e-12);
        assert!((s.idf1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_predictions_and_empty_gt() {
        let gt: Vec<MotRecord> = (0..10).map(|f| rec(f, 1, 0.0)).collect();
        let s = evaluate(&gt, &[]).unwrap();
        assert_eq!((s.mota, s.idf1, s.mt, s.ml), (0.0, 0.0, 0, 1));
        assert!(evaluate(&[], &gt).is_err());
    }

    #[test]
    fn frames_outside_gt_range_count() {
        let gt: Vec<MotRecord> = (0..10).map(|f| rec(f, 1, 0.0)).collect();
        let pred: Vec<MotRecord> = (5..15).map(|f| rec(f, 1, 0.0)).collect();
        let s = evaluate(&gt, &pred).unwrap();
        assert_eq!((s.misses, s.false_positives), (5, 5));
        assert!(s.mota.abs() < 1e-12);
    }

    fn scene() -> impl Strategy<Value = (Vec<MotRecord>, Vec<MotRecord>)> {
        let recs = prop::collection::vec((0u32..6, 0i64..4, 0.0..60.0f64), 1..30);
        (recs.clone(), recs).prop_map(|(g, p)| {
            let dedup = |v: Vec<(u32, i64, f64)>| {
                let m: BTreeMap<(u32, i64), f64> =
                    v.into_iter().map(|(f, i, x)| ((f, i), x)).collect();
                m.into_iter()
                    .map(|((f, i), x)| rec(f, i, x))
                    .collect::<Vec<_>>()
            };
            (dedup(g), dedup(p))
        })
    }

    proptest! {
        #[test]
        fn metric_bounds((gt, pred) in scene()) {
            let s = evaluate(&gt, &pred).unwrap();
            prop_assert!(s.mota <= 1.0);
            prop_assert!((0.0..=1.0).contains(&s.idf1));
            if s.misses == 0 && s.false_positives == 0 && s.ids == 0 {
                prop_assert_eq!(s.mota, 1.0);
            }
        }

        #[test]
        fn ids_invariant_under_relabeling((gt, pred) in scene(), k in 1i64..50) {
            let relabeled: Vec<MotRecord> = pred
                .iter()
                .map(|r| MotRecord { id: (r.id + k) * 7, ..r.clone() })
                .collect();
            let a = evaluate(&gt, &pred).unwrap();
            let b = evaluate(&gt, &relabeled).unwrap();
            prop_assert_eq!(a.ids, b.ids);
        }
    }
}
