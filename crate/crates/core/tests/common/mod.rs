#![allow(dead_code)]

pub mod alloc_oracle;
pub mod fixtures;
pub mod metrics_oracle;
