//! Finite covers of the phase space, the strip density check, and the search for witnesses
//! of `(f x f)^n (A x B) ∩ (C x D) != ∅` on cover cells, with certification over many
//! quadruples and a perturbation robustness sweep.

mod cover;
mod density;
mod level;
mod robust;
mod witness;

pub use cover::{build_cover, CoverCell};
pub use density::{density_check, petersen_check, DensityVerdict};
pub use level::{
    certify_level, decode_quad, quad_seed, select_quads, CertificationReport, CertificationSummary, QuadResult,
    QuadSelection,
};
pub use robust::{robustness_demo, RobustnessReport, SurvivalRow};
pub use witness::{orbit_clearance, tm_witness, verify_report, witness_margins, Method, Stage, WitnessBudget, WitnessOutcome, WitnessReport};
