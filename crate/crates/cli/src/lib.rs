//! Command-line front end for the spatial-phase analysis library: pipeline
//! orchestration ([`pipeline`]), SVG plots ([`plot`]), and dual text/CSV
//! table rendering ([`report`]).

pub mod pipeline;
pub mod plot;
pub mod report;
