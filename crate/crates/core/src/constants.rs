//! Shared physical constants.
//!
//! Every module pulls from this registry so that derived scales are
//! bit-identical across the crate.

/// Neutron mass in kg (CODATA 2018).
pub const NEUTRON_MASS: f64 = 1.674_927_49e-27;

/// Reduced Planck constant in J s (CODATA 2018, exact).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Default gravitational acceleration in m/s^2.
///
/// The local value at the experiment site differs in the fourth digit;
/// callers can override it when building a context.
pub const STANDARD_GRAVITY: f64 = 9.81;

/// Newtonian gravitational constant in m^3/(kg s^2) (CODATA 2018).
pub const GRAVITATIONAL_CONSTANT: f64 = 6.674_30e-11;

/// Free-neutron lifetime in s, used for the storage-experiment bound preset.
pub const NEUTRON_LIFETIME: f64 = 881.5;

/// Planck mass in kg, used for the default mass-rescaling preset.
pub const PLANCK_MASS: f64 = 2.176_434e-8;

/// One electron-volt in J, for reporting energies in peV.
pub const ELECTRON_VOLT: f64 = 1.602_176_634e-19;

/// Nucleon radius in m, the default coarse-graining scale of the
/// Diosi-Penrose rate.
pub const NUCLEON_RADIUS: f64 = 1e-15;
