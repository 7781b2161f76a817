//! Default tolerances. Every check records the tolerance it used; these are
//! only the values chosen when nothing is overridden.

/// Symbolic construction followed by evaluation; only rounding error remains.
pub const SYMBOLIC: f64 = 1e-9;

/// Identities whose two sides are long independent computations (basic
/// curvature relations, Bianchi, curvature of the gauge derivation).
pub const SYMBOLIC_LONG: f64 = 1e-8;

/// One central finite difference at step 1e-3.
pub const FINITE_DIFFERENCE: f64 = 1e-6;

/// Flow-commutator defects, second order in the flow parameter.
pub const FLOW_COMMUTATOR: f64 = 1e-4;

/// Agreement of the flow oracle for the gauge derivation at step 1e-3.
pub const FLOW_ORACLE: f64 = 1e-5;

/// Accepted range for the ratio of errors at steps h and h/2 when a method
/// is expected to converge quadratically.
pub const RICHARDSON_RATIO: (f64, f64) = (3.0, 5.0);

/// Below this magnitude an error is treated as rounding noise when
/// estimating convergence orders.
pub const ROUNDING_FLOOR: f64 = 1e-11;

/// Side length of the holonomy loop used as a curvature oracle.
pub const HOLONOMY_STEP: f64 = 1e-3;
