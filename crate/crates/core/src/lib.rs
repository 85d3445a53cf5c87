//! Synthetic batter-vs-pitcher spray-chart densities.
//!
//! A matchup's landing-point density is estimated three ways: directly from
//! the pair's own balls in play, from similar pitchers against the batter, and
//! from similar batters against the pitcher. The three kernel estimates are
//! blended with weights that grow with each source's effective sample size,
//! then integrated against an empirical outcome field to give expected hit
//! rates.
//!
//! Pipeline: [`ingest`] -> [`characteristics`] -> [`similarity`] ->
//! [`synthesis`] (built on [`density`]) -> [`outcomes`]. [`service`] wraps it
//! for the HTTP API; [`validation`] is the Monte Carlo harness.

pub mod characteristics;
pub mod density;
pub mod error;
pub mod fixture;
pub mod ingest;
pub mod outcomes;
pub mod service;
pub mod similarity;
pub mod synthesis;
pub mod validation;

pub use characteristics::{BatterProfile, PitcherProfile, ProfileConfig, ProfileTables};
pub use density::{kde2, kde2_weighted, Bandwidth, DensityGrid, FieldGrid};
pub use error::{Result, SeamError};
pub use ingest::{Hand, IngestConfig, IngestReport, Outcome, PitchRecord, PitchType, PlayerId};
pub use outcomes::{expected_outcomes, ExpectedOutcomes, OutcomeConfig, OutcomeField};
pub use service::{MatchupReport, MatchupRequest, MatchupService, Role, ServiceConfig};
pub use similarity::{MetricWeights, SimilarityPool};
pub use synthesis::{compute_lambda, synthesize, BlendWeights, MatchupIndex, SynthesisConfig};
