//! Structural checks on the detection problem: Blackwell dominance between
//! agent parameterizations, robustness to misspecified parameters and scans
//! over parameter boxes.

mod blackwell;
mod lp;
mod region;
mod sensitivity;

pub use blackwell::{
    best_garbling, convex_mixture_matrix, find_dominance_matrix, garbling_residual, stochasticity_defect,
    DominanceCertificate, MixtureMatrix,
};
pub use lp::{LinearProgram, LpSolution};
pub use region::{
    interpolation_betweenness_check, private_action_family, region_scan, BetweennessReport, Direction,
    PairResult, ParameterBox, ParameterRegion, RegionTag, ScanConfig, ScanReport,
};
pub use sensitivity::{bound_constant, kl_divergence, model_distance, sensitivity_bound_check, KLBoundReport};
