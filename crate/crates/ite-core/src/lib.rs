//! Interior transmission eigenvalues of a ball with a conductive boundary,
//! computed along three independent routes:
//!
//! * [`sphere_modal`] — zeros of the per-mode 2x2 determinant on the real
//!   axis (grid scan + bracketing),
//! * [`bie_sphere`] + [`nep_beyn`] — a boundary-integral operator restricted
//!   to the sphere, solved as a holomorphic nonlinear eigenproblem with a
//!   contour-integral method,
//! * [`farfield_lsm`] — spike detection in the regularized far-field
//!   (linear sampling) indicator.
//!
//! [`specfun`] supplies the complex-argument spherical Bessel/Hankel
//! machinery everything else is built on.

pub mod bie_sphere;
pub mod farfield_lsm;
pub mod nep_beyn;
pub mod quad;
pub mod specfun;
pub mod sphere_modal;
