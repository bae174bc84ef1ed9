//! Flat `key = value` configuration with `#` comments.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::Config;

pub fn read_config(path: &Path) -> Result<Config> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

fn value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Config(format!("cannot parse value {raw:?} for key `{key}`")))
}

/// Parses config text; missing keys keep their defaults and the result is validated.
pub fn parse_config(text: &str) -> Result<Config> {
    let mut c = Config::default();
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
            "tau" => c.tau = value(key, raw)?,
            "window_size" => c.window_size = value(key, raw)?,
            "window_overlap" => c.window_overlap = value(key, raw)?,
            "alpha0" => c.alpha0 = value(key, raw)?,
            "sigma" => c.sigma = Some(value(key, raw)?),
            "gamma" => c.gamma = value(key, raw)?,
            "theta_iou" => c.theta_iou = value(key, raw)?,
            "theta_emb" => c.theta_emb = value(key, raw)?,
            "theta_match1" => c.theta_match1 = value(key, raw)?,
            "theta_match2" => c.theta_match2 = value(key, raw)?,
            "max_lost_frames" => c.max_lost_frames = value(key, raw)?,
            "enter_exit_cost" => c.enter_exit_cost = value(key, raw)?,
            "w_iou" => c.w_iou = value(key, raw)?,
            "w_app" => c.w_app = value(key, raw)?,
            "embedding_dim" => c.embedding_dim = value(key, raw)?,
            "landmark_cost" => c.landmark_cost = value(key, raw)?,
            "max_frame_gap" => c.max_frame_gap = value(key, raw)?,
            "gap_cost" => c.gap_cost = value(key, raw)?,
            "contact_mask" => c.contact_mask = value(key, raw)?,
            _ => {
                return Err(Error::Config(format!(
                    "unknown key `{key}` on line {}",
                    n + 1
                )))
            }
        }
    }
    c.validate()?;
    Ok(c)
}
