//! MOT-challenge CSV: `frame,id,left,top,width,height,conf,x,y,z`.
//!
//! Frames are 1-based on disk and 0-based in memory.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};
use crate::model::{BBox, Detection, Embedding};

use super::read_embeddings;

const FIELDS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct MotRecord {
    pub frame: u32,
    pub id: i64,
    pub bbox: BBox,
    pub score: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MotData {
    pub records: Vec<MotRecord>,
    /// Data row (0-based, in file order) each record came from.
    pub rows: Vec<usize>,
    /// Rows dropped for a non-positive width or height.
    pub skipped: usize,
    pub total_rows: usize,
}

pub fn read_mot(path: &Path) -> Result<MotData> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut data = MotData::default();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            path: path.into(),
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(row + 1, |p| p.line() as usize);
        let err = |msg: String| Error::Parse {
            path: path.into(),
            line,
            msg,
        };
        if rec.len() != FIELDS {
            return Err(err(format!(
                "expected {FIELDS} fields, found {}",
                rec.len()
            )));
        }
        let num = |i: usize, name: &str| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("bad {name} {:?}", &rec[i])))
        };
        let frame = num(0, "frame")?;
        if frame < 1.0 || frame.fract() != 0.0 || frame > u32::MAX as f64 {
            return Err(err(format!(
                "frame must be a positive integer, got {}",
                &rec[0]
            )));
        }
        let id = num(1, "id")?;
        if id.fract() != 0.0 {
            return Err(err(format!("id must be an integer, got {}", &rec[1])));
        }
        let (left, top, w, h) = (
            num(2, "left")?,
            num(3, "top")?,
            num(4, "width")?,
            num(5, "height")?,
        );
        let score = num(6, "conf")?;
        for i in 7..FIELDS {
            num(i, "coordinate")?;
        }
        data.total_rows += 1;
        if !(w > 0.0 && h > 0.0) {
            data.skipped += 1;
            continue;
        }
        let bbox = BBox::from_ltwh(left, top, w, h).map_err(|e| err(e.to_string()))?;
        data.records.push(MotRecord {
            frame: frame as u32 - 1,
            id: id as i64,
            bbox,
            score,
        });
        data.rows.push(row);
    }
    if data.skipped > 0 {
        warn!(
            "{}: skipped {} rows with non-positive size",
            path.display(),
            data.skipped
        );
    }
    Ok(data)
}

/// Reads a detection file and its positionally aligned embedding file.
///
/// `dim` of 0 accepts the file's dimension. Each detection's `source` is its
/// row in the detection file.
pub fn load_detections(dets: &Path, embeds: &Path, dim: usize) -> Result<Vec<Detection>> {
    let data = read_mot(dets)?;
    let embeddings = read_embeddings(embeds, data.total_rows, dim)?;
    data.records
        .into_iter()
        .zip(&data.rows)
        .map(|(r, &row)| {
            let e: Embedding = embeddings[row].clone();
            Detection::new(r.frame, r.bbox, r.score, e)
                .map(|d| d.with_source(row))
                .map_err(|e| Error::Parse {
                    path: dets.into(),
                    line: row + 1,
                    msg: e.to_string(),
                })
        })
        .collect()
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

/// Writes records sorted by frame then id, boxes with two decimals.
pub fn write_mot(path: &Path, records: &[MotRecord]) -> Result<()> {
    let mut sorted: Vec<&MotRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (r.frame, r.id));
    write_rows(path, sorted)
}

/// Writes records in the given order.
pub(crate) fn write_rows<'a>(
    path: &Path,
    records: impl IntoIterator<Item = &'a MotRecord>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for r in records {
        let [l, t, w, h] = r.bbox.ltwh();
        writeln!(
            out,
            "{},{},{:.2},{:.2},{:.2},{:.2},{},-1,-1,-1",
            r.frame + 1,
            r.id,
            l,
            t,
            w,
            h,
            round4(r.score)
        )
        .map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
