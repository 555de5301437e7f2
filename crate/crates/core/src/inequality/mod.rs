//! Numerical probes of the functional inequalities behind the global existence theory:
//! Gagliardo-Nirenberg-Sobolev ratios and constant estimates, the fractional
//! integration-by-parts inequality, and the `L^p` decay estimate along trajectories.

mod gns;
mod ipp;

pub use gns::{
    estimate_gns_constant, gns_ratio, gns_supercritical_check, supercritical_corpus,
    write_gns_csv, BumpShape, GnsEstimate, SupercriticalCheck, TrialFamily, GNS_CSV_HEADER,
};
pub use ipp::{
    random_smooth_positive_field, verify_ipp, verify_lp_decay, IppCheck, LpDecayCheck,
    LpDecayReport,
};
