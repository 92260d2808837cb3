//! Evidence version control for variance theories.
//!
//! Hypotheses are causal DAGs ([`dag`]), datasets are content-addressed
//! tables ([`data`]) and analysis methods are declarative specs
//! ([`stats`]). Running a method on a dataset under a hypothesis yields an
//! evidence node; [`evidence`] arranges evidence in an evolution graph whose
//! edges (replication, revision, reanalysis) are validated by [`synthesis`].

pub mod dag;
pub mod data;
pub mod error;
pub mod evidence;
pub mod fixtures;
pub mod repo;
pub mod scenario;
pub mod stats;
pub mod synthesis;

pub use error::{Error, ErrorClass, Result};
