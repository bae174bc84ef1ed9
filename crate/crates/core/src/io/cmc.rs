//! Per-frame affine transforms: `frame,a11,a12,a13,a21,a22,a23`, 1-based frames.

use std::collections::BTreeSet;
use std::fs::File;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pipeline::CmcTransform;

pub fn read_cmc(path: &Path) -> Result<Vec<CmcTransform>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            path: path.into(),
            line: row + 1,
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(row + 1, |p| p.line() as usize);
        let err = |msg: String| Error::Parse {
            path: path.into(),
            line,
            msg,
        };
        if rec.len() != 7 {
            return Err(err(format!("expected 7 fields, found {}", rec.len())));
        }
        let frame: u32 = rec[0]
            .parse()
            .ok()
            .filter(|&f| f >= 1)
            .ok_or_else(|| err(format!("bad frame {:?}", &rec[0])))?;
        let mut a = [[0.0; 3]; 2];
        for i in 0..6 {
            a[i / 3][i % 3] = rec[i + 1]
                .parse()
                .map_err(|_| err(format!("bad coefficient {:?}", &rec[i + 1])))?;
        }
        if !seen.insert(frame) {
            return Err(err(format!("second transform for frame {frame}")));
        }
        let t = CmcTransform::new(frame - 1, a).map_err(|e| err(e.to_string()))?;
        out.push(t);
    }
    Ok(out)
}
