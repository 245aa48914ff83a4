//! Weekly Dow Jones panel: cleaning, common-factor construction, k-means
//! clustering of return profiles, and a comparison of linear regression,
//! random forest and gradient boosting for next-week returns.

pub mod cli;
pub mod clustering;
pub mod config;
pub mod evaluation;
pub mod features;
pub mod ingest;
pub mod linalg;
pub mod models;
pub mod report;
