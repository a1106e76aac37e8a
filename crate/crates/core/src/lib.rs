//! Achievable rates of bit-interleaved coded modulation over the AWGN channel
//! for M-PAM constellations, with exact and max-log L-values.
//!
//! - [`constellation`]: constellations, patterns, labelings.
//! - [`lvalue`]: exact and max-log L-values, the piecewise-linear max-log
//!   representation and its analytic conditional density.
//! - [`rates`]: bit-level MI/GMI and BICM MI/GMI/harmonized GMI.
//! - [`transforms`]: density-level channels, symmetrization and mixing.
//! - [`analysis`]: losslessness classification, rate curves and dB loss.
//! - [`oracle`]: seeded Monte Carlo estimators.

pub mod analysis;
pub mod constellation;
pub mod error;
pub mod lvalue;
pub mod numerics;
pub mod oracle;
pub mod rates;
pub mod transforms;

pub use analysis::{
    build_curve, classify_labeling, classify_pattern, loss_db, rate_at, snr_grid, CurveSource,
    LabelingVerdict, LosslessVerdict, PatternClass, RateCurve, Verdict,
};
pub use constellation::{
    Constellation, ConstellationFile, Labeling, LabelingSpec, Pattern, SymmetryCenter,
};
pub use error::{Error, Result};
pub use lvalue::{BitDemapper, ConditionalLValueDensity, PiecewiseLinearLValue, Segment, Snr};
pub use oracle::{mc_rate, mc_rates, McEstimate, McRequest};
pub use rates::{
    bicm_gmi, bicm_mi, bit_gmi, bit_mi, bit_mi_exact, bit_mi_maxlog, gmi_objective, harmonized_gmi,
    LValueKind, QuadratureConfig, RateKind, RateValue,
};
pub use transforms::{
    conditional_mi_gap, gmi_of_channel, mi_of_channel, mix, symmetrize, BinaryInputChannel,
};
