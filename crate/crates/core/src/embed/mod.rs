//! Line embeddings of l2-squared point sets with bounded average distortion.

mod config;
mod dispatch;
mod frechet;
mod separate;

pub use config::{EmbedderConfig, SearchConfig};
pub use dispatch::{
    embed_case_dispatch, CaseDiagnostics, EmbedResult, BALL_SLACK, CLAIM_TOL, LEMMA_TOL,
};
pub(crate) use frechet::serialize_ratio;
pub use frechet::{
    distortion, frechet_line, frechet_line_projected, sufficient_condition_value, Branch,
    DistanceKind, DistortionReport, LineEmbedding,
};
pub use separate::{default_fraction, find_separated_sets, SeparatedPair};
