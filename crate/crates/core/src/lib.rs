pub mod case;
pub mod chd;
pub mod classify;
pub mod config;
pub mod connection;
pub mod emd;
pub mod error;
pub mod eval;
pub mod phantom;
pub mod pipeline;
pub mod skeleton;
pub mod volume;

pub use case::CaseInput;
pub use chd::{CHDType, LabelSet};
pub use config::PipelineConfig;
pub use error::{Error, Result};
