//! Local binary texture descriptors built on 3x3 neighborhoods.
//!
//! The crate computes LBP, MCT, LGP, LDP, rotation-invariant LDP and LOOP
//! codes, turns them into multi-scale histograms over a Gaussian pyramid,
//! and provides a small benchmark harness: chi-squared nearest neighbor and
//! collaborative representation classifiers, stratified cross-validation and
//! an exact sign test for comparing descriptors.

pub mod classify;
pub mod descriptor;
pub mod error;
pub mod kernels;
pub mod raster;
pub mod stats;
pub mod synth;

#[cfg(any(test, feature = "oracle"))]
pub mod oracle;

pub use classify::{
    chi2_distance, crc_classify, cross_validate, cross_validate_views, load_dataset, nn_classify, Classifier, CrcModel, FoldPlan,
    LabeledItem, LabeledSet,
};
pub use descriptor::{describe, histogram, Descriptor, Histogram, DEFAULT_LEVELS};
pub use error::{Error, Result};
pub use kernels::{
    code_map, kirsch_responses, lbp_code, ldp_code, ldp_ri_code, lgp_code, loop_code, mct_code, rank_exponents,
    tie_break, Code, CodeMap, DescriptorKind, Encoder, KirschResponses, Patch3, RankAssignment, RankKey,
};
pub use raster::{build_pyramid, gaussian_blur, load_pgm, save_pgm, GrayImage, Pyramid};
pub use stats::{binom_one_tail, bonferroni, sign_test, AccuracyRecord, SignTestResult};
