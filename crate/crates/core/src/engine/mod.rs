//! Spectra of skew products `Φ(x, t) = (φ(x), R_x(t))` over an embedded SFT:
//! fiber maximization, Markov and Lagrange values, the membership check for
//! the generic class, interval certificates and the separation witness.

mod interval;
mod membership;
mod observable;
mod profile;
mod system;
mod values;
mod witness;

pub use interval::{
    construct_interval_nonperiodic_case, construct_interval_periodic_case, AngleInterval, CaseParams, CertConfig,
    Construction, GridPoint, IntervalCertificate, NonperiodicCaseParams, PeriodicCaseParams, Revalidation,
};
pub use membership::{empirical_eps_delta, validate_membership_R, MaxReport, DERIV_TOL, SECOND_DERIV_TOL, TIE_TOL};
pub use observable::{
    fiber_max, maximize_on_circle, Extrema, FiberFn, FiberMax, Observable, ObservableSpec, Partials, SurfaceFn,
    TrigTerm, FD_STEP,
};
pub use system::{SkewSystem, SystemSpec};
pub use values::{
    cycle_fiber_max, lagrange_value_periodic_tail, lagrange_value_skew, markov_value_skew, surface_markov_value,
    window_max, LagrangeEstimate, ScheduledOrbit, SteerPlan,
};
pub use profile::{classify_level, ell_nonnegative_profile, EllProfile, EllSample, LevelClass, LevelReport, ELL_TOL};
pub use witness::{periodic_markov_sample, spectra_difference_witness, WitnessRecord, WitnessSetup};
