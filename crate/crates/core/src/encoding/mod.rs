//! Target encodings and the stage-two feature tables.
//!
//! Congestion classes are encoded per edge as pseudocount-smoothed class
//! fractions; travel times per super-segment as plain means, optionally
//! averaged over a window of neighboring slots. Training lookups leave the
//! row's own calendar day out.

mod cc;
mod eta;
mod features;
mod key;
mod smoothing;

pub use cc::{fit_cc_encoding, lookup_cc, CcEncodingTable, CcObservation, DEFAULT_PSEUDOCOUNT};
pub use eta::{fit_eta_encoding, EtaEncodingTable, EtaObservation};
pub use features::{
    append_extended_rows, build_core_features, build_extended_features, core_context_columns,
    core_feature_names, extended_context_columns, extended_feature_names, Calendar, CoreColumn,
    CoreFeatureBuilder, EdgeStatic, Endpoint, ExtendedColumn, CORE_COLUMNS, EXTENDED_COLUMNS,
};
pub use key::{CategoryKey, Conditioning};
pub use smoothing::{neighbor_weight, smoothed_te, smoothing_denominator, SMOOTHING_RADIUS};
