pub mod diagnosis;
pub mod logic;
pub mod query;
pub mod scalar;
pub mod selection;
pub mod session;

/// Beliefs in double precision, as used by debugging sessions.
pub type BeliefState = selection::Beliefs<f64>;
/// Beliefs in exact rational arithmetic.
pub type ExactBeliefState = selection::Beliefs<num_rational::BigRational>;
