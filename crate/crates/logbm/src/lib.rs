//! Desk-scale toolkit for L^p and logarithmic combinations of symmetric
//! convex bodies: halfspace-represented polytopes with support evaluation and
//! Wulff construction, exact low-dimensional and Monte Carlo volumes,
//! surface-area and cone-volume measures, and executable verdicts for the
//! logarithmic Brunn-Minkowski family of inequalities together with the
//! structural analysis of their equality cases.
//!
//! All types are immutable values and all operations are pure functions, so
//! everything here is safe to evaluate in parallel. With the `parallel`
//! feature (on by default) the data-parallel inner loops run on rayon;
//! without it they fall back to sequential iteration with identical results.

// Index loops mirror the matrix arithmetic they implement, and negated
// comparisons reject NaN on purpose.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod body;
pub mod checks;
pub mod combine;
pub mod error;
pub mod gen;
mod geometry;
mod lp;
pub mod measure;
mod par;
pub mod report;
pub mod structure;

pub use body::{
    wulff, DirectionSet, DirectionSource, GridKind, GridSpec, HPolytope, Halfspace, Location,
    SupportProfile,
};
pub use checks::{
    check_log_bm, check_log_minkowski, check_lp_bm, check_lp_minkowski, check_multi_minkowski,
    check_prekopa_leindler, scan_b_property, scan_b_weak, search_counterexample, GridFn,
    LogBmOptions, SearchConfig, UniformGrid,
};
pub use combine::{
    combine, lemma31_inclusion_check, log_combine, log_combine_multi, lp_combine, scale_body,
    CombinationSpec, CombinationSpecFile, CombineExponent, DiagonalScaling, GeomMeanBody, Slab,
    SlabFamily,
};
pub use error::{Error, Result};
pub use measure::{
    cone_volume_measure, sample_point, subspace_concentration, surface_area_measure, volume,
    volume_mc, Atom, McSettings, SphericalMeasure, SubspaceSpec, VolumeEstimate, VolumeMethod,
};
pub use report::{emit_plot_data, CheckReport, GridDesc, InputDigest, SeriesPoint, Verdict};
pub use structure::{
    classify_equality, decompose_irreducible, fit_diagonal, fit_dilate, DiagonalMap,
    EqualityClass, ProductDecomposition,
};
