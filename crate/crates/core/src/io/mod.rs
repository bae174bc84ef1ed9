//! File formats and the synthetic scenario generator.

mod cmc;
mod config;
mod embeddings;
mod mot;
pub mod synth;

pub use cmc::read_cmc;
pub use config::{parse_config, read_config};
pub use embeddings::{read_embeddings, write_embeddings, EMBEDDING_MAGIC, EMBEDDING_VERSION};
pub use mot::{load_detections, read_mot, write_mot, MotData, MotRecord};
pub use synth::{generate_scenario, read_scenario_spec, write_scenario, Scenario, ScenarioSpec};
