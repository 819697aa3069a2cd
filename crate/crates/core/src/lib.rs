//! Spatial phase analysis for basketball player-tracking data.
//!
//! The pipeline turns raw `(timestamp, player, x, y)` samples into a story
//! about how a lineup organises itself on court:
//!
//! 1. [`ingest`] parses tracking and game-event streams, drops samples that
//!    fall inside dead-ball intervals, and resamples the survivors onto a
//!    fixed frame grid.
//! 2. [`segment`] finds stints (maximal spans where the same five players
//!    are on court) and converts each frame into the ten pairwise
//!    player-to-player distances — the dyad feature vector.
//! 3. [`cluster`] groups frames by k-means on the dyad vectors and picks k
//!    from the between/total deviance curve.
//! 4. [`mds`] averages the dyad distances per cluster and projects the
//!    resulting 5x5 matrix back onto a 2-D court map with classical
//!    multidimensional scaling.
//! 5. [`phase`] labels frames offense / defense / transition from the
//!    lineup's mean x position, and measures how clusters trade frames over
//!    time (transition matrix, switch rate).
//! 6. [`shots`] attaches shot events to frames and reports shooting
//!    percentages per cluster.
//! 7. [`synth`] generates synthetic games with known ground truth so the
//!    whole chain can be validated end to end.
//!
//! All distances are centimetres; the court is modelled as x in
//! [-1400, 1400] (baskets on the x axis) and y in [-750, 750]. Timestamps
//! are milliseconds from stream start. Every function here is
//! deterministic: same inputs and seeds give bit-identical outputs.

pub mod cluster;
pub mod error;
pub mod ingest;
pub mod mds;
pub mod phase;
pub mod rng;
pub mod segment;
pub mod shots;
pub mod synth;

pub use error::{CoreError, ErrorClass, Result};
