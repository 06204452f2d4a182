//! Numerical laboratory for the De Gregorio family of 1D vortex-stretching
//! models `ω_t + a·u·ω_x = u_x·ω`, `u_x = Hω`, on the circle.
//!
//! * [`spectral`]: periodic fields, FFT calculus, quadrature.
//! * [`functionals`]: blowup monitors, weighted integrals and identity residuals.
//! * [`models`]: closed-form and integrated dynamics, initial data.
//! * [`kernels`]: the advection-versus-stretching interaction kernels.
//! * [`interval`]: outward-rounded arithmetic and kernel enclosures.
//! * [`certifier`]: the rigorous positivity certificate for the log-variable kernel.

pub mod certifier;
pub mod functionals;
pub mod interval;
pub mod kernels;
pub mod models;
pub mod spectral;
