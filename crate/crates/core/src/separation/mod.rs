//! Separation diagnostics: Phi(x,r) and Sigma(x,r) counts, exact overlaps,
//! identity-limit witnesses, multiplicity amplification and weak tangents.

mod amplify;
mod count;
mod ilc;
mod tangent;

pub use amplify::{amplify_wsc_failure, build_schedule, choose_q, AmplifyReport, Schedule, ScheduleStage};
pub use count::{
    count_phi, equivalence_of_restrictions, exact_overlap_scan, OverlapScan, letter_equivalences, restriction_key, CountMode, SeparationCount,
};
pub use ilc::{ilc_search, ilc_search_with, witness_for, IlcOptions, IlcSearch, IlcWitness};
pub use tangent::{build_weak_tangent, Magnification, TangentReport, TangentStage};
