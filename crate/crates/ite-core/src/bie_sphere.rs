//! Boundary-integral formulation of the transmission eigenvalue problem on a
//! sphere, reduced to per-mode 2x2 blocks.
//!
//! On a sphere of radius R the four boundary operators diagonalize over
//! spherical harmonics of order p with modal coefficients (z = kR,
//! zeta = k sqrt(n) R):
//!
//! ```text
//!   S  -> s(k)  =  i k R^2 j_p(z) h_p(z)
//!   K  -> d(k)  =  i k^2 R^2 j_p'(z) h_p(z) - 1/2
//!   K' -> kk(k) =  i k^2 R^2 j_p(z) h_p'(z) + 1/2
//!   T  -> t(k)  =  i k^3 R^2 j_p'(z) h_p'(z)
//! ```
//!
//! `d` and `kk` agree through the Wronskian j h' - j' h = i/z^2; computing
//! them from the two distinct formulas keeps that identity a checkable
//! invariant instead of a tautology. Writing the interior Calderon relations
//! for the two fields and eliminating the common Cauchy data leaves, per
//! mode, the 2x2 block `Z_p(k)` below, whose determinant vanishes exactly at
//! the transmission eigenvalues of the corresponding mode. The blocks are
//! holomorphic in k away from 0, so the contour solver in [`crate::nep_beyn`]
//! applies directly.

use ndarray::prelude::*;
use num_complex::Complex64;
use thiserror::Error;

use crate::nep_beyn::{block_nep_eigenvalues, BeynError};
use crate::specfun::{sph_bessel_j_seq, sph_bessel_y_seq, SpecFunError};
use crate::sphere_modal::ConductiveSphere;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Error)]
pub enum BieError {
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error(transparent)]
    Beyn(#[from] BeynError),
    #[error("invalid wave-number interval ({0}, {1})")]
    BadInterval(f64, f64),
}

/// Modal coefficients of the four boundary operators at one order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModalLayerCoeffs {
    /// Single layer S.
    pub single: Complex64,
    /// Double layer K (principal value).
    pub double: Complex64,
    /// Normal derivative of the single layer K' (principal value).
    pub normal_single: Complex64,
    /// Hypersingular operator T.
    pub hyper: Complex64,
}

/// Coefficients at order `p` for wave number `k` on a sphere of radius
/// `radius`. `k` must be nonzero (the Hankel functions pole there).
pub fn layer_modal_coeffs(
    p: usize,
    k: Complex64,
    radius: f64,
) -> Result<ModalLayerCoeffs, SpecFunError> {
    let z = k * radius;
    let jseq = sph_bessel_j_seq(p.max(1), z)?;
    let yseq = sph_bessel_y_seq(p.max(1), z)?;
    let (j, jd) = value_and_deriv(&jseq, p, z);
    let (y, yd) = value_and_deriv(&yseq, p, z);
    let h = j + I * y;
    let hd = jd + I * yd;
    let r2 = radius * radius;
    let half = Complex64::new(0.5, 0.0);
    Ok(ModalLayerCoeffs {
        single: I * k * r2 * j * h,
        double: I * k * k * r2 * jd * h - half,
        normal_single: I * k * k * r2 * j * hd + half,
        hyper: I * k * k * k * r2 * jd * hd,
    })
}

fn value_and_deriv(seq: &[Complex64], p: usize, z: Complex64) -> (Complex64, Complex64) {
    if p == 0 {
        (seq[0], -seq[1])
    } else {
        let d = seq[p - 1] - Complex64::new((p + 1) as f64, 0.0) / z * seq[p];
        (seq[p], d)
    }
}

/// The 2x2 mode block of the boundary-integral operator.
///
/// With c(.) the coefficients at interior wave number kappa = k sqrt(n) and
/// exterior-field wave number k, acting on (psi, phi) = (d_nu v, v|_Gamma):
///
/// ```text
///   [ s(kappa) - s(k)     eta s(kappa) - d(kappa) + d(k)            ]
///   [ kk(kappa) - kk(k)   eta (kk(kappa) - 1/2) - t(kappa) + t(k)   ]
/// ```
pub fn assemble_z_block(
    k: Complex64,
    p: usize,
    medium: &ConductiveSphere,
) -> Result<[[Complex64; 2]; 2], SpecFunError> {
    let kappa = k * medium.index.sqrt();
    let a = layer_modal_coeffs(p, kappa, medium.radius)?;
    let b = layer_modal_coeffs(p, k, medium.radius)?;
    let eta = Complex64::new(medium.eta, 0.0);
    let half = Complex64::new(0.5, 0.0);
    Ok([
        [
            a.single - b.single,
            eta * a.single - a.double + b.double,
        ],
        [
            a.normal_single - b.normal_single,
            eta * (a.normal_single - half) - a.hyper + b.hyper,
        ],
    ])
}

/// det Z_p(k).
pub fn det_z(k: Complex64, p: usize, medium: &ConductiveSphere) -> Result<Complex64, SpecFunError> {
    let z = assemble_z_block(k, p, medium)?;
    Ok(z[0][0] * z[1][1] - z[0][1] * z[1][0])
}

/// Block-diagonal operator over orders 0..=p_max, for the contour solver.
pub fn z_operator(
    medium: ConductiveSphere,
    p_max: usize,
) -> impl Fn(Complex64) -> Array2<Complex64> {
    move |k: Complex64| {
        let m = 2 * (p_max + 1);
        let mut out = Array2::zeros((m, m));
        for p in 0..=p_max {
            let b = assemble_z_block(k, p, &medium).expect("orders validated up front");
            for r in 0..2 {
                for c in 0..2 {
                    out[[2 * p + r, 2 * p + c]] = b[r][c];
                }
            }
        }
        out
    }
}

/// One eigenvalue recovered along the boundary-integral route.
#[derive(Debug, Clone, PartialEq)]
pub struct BieEigenvalue {
    pub k: Complex64,
    /// Spherical-harmonic order whose block carries the eigenvector.
    pub order: usize,
    /// ||Z_p(k) v|| for the unit null-vector candidate v of the owning block.
    pub residual: f64,
    pub near_boundary: bool,
}

/// Transmission eigenvalues inside an elliptic contour around the real
/// interval, via the shared block contour solver in [`crate::nep_beyn`]
/// applied to the per-mode blocks `Z_p`.
pub fn bie_eigenvalues(
    medium: &ConductiveSphere,
    interval: (f64, f64),
    p_max: usize,
    node_count: usize,
    seed: u64,
) -> Result<Vec<BieEigenvalue>, BieError> {
    let (lo, hi) = interval;
    if !(0.0 < lo && lo < hi) {
        return Err(BieError::BadInterval(lo, hi));
    }
    // Validate the order cap once; the closure may then unwrap freely.
    layer_modal_coeffs(p_max, Complex64::new(1.0, 0.0), medium.radius)?;
    let med = *medium;
    let block = move |k: Complex64, p: usize| {
        assemble_z_block(k, p, &med).expect("orders validated up front")
    };
    let eigs = block_nep_eigenvalues(&block, p_max + 1, interval, node_count, seed)?;
    Ok(eigs
        .into_iter()
        .map(|e| BieEigenvalue {
            k: e.k,
            order: e.block,
            residual: e.residual,
            near_boundary: e.near_boundary,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nep_beyn::EllipticContour;
    use crate::quad::gauss_legendre;
    use crate::specfun::legendre_p;
    use crate::sphere_modal::{modal_det, roots_for_order, scaled_modal_det};

    const PI: f64 = std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn medium(n: f64, eta: f64) -> ConductiveSphere {
        ConductiveSphere::new(1.0, n, eta).unwrap()
    }

    /// Fundamental solution e^{ik d}/(4 pi d).
    fn green(k: Complex64, d: f64) -> Complex64 {
        (I * k * d).exp() / (4.0 * PI * d)
    }

    /// Single-layer potential with density P_p, evaluated on the axis at
    /// radius r != R, by direct quadrature of the kernel.
    fn single_layer_field(p: usize, k: Complex64, radius: f64, r: f64) -> Complex64 {
        let (xs, ws) = gauss_legendre(240);
        let mut sum = c(0.0, 0.0);
        for (&t, &w) in xs.iter().zip(&ws) {
            let d = (radius * radius + r * r - 2.0 * radius * r * t).sqrt();
            sum += w * green(k, d) * legendre_p(p, t);
        }
        2.0 * PI * radius * radius * sum
    }

    /// Double-layer potential (kernel d_nu(y) G) with density P_p on the axis.
    fn double_layer_field(p: usize, k: Complex64, radius: f64, r: f64) -> Complex64 {
        let (xs, ws) = gauss_legendre(240);
        let mut sum = c(0.0, 0.0);
        for (&t, &w) in xs.iter().zip(&ws) {
            let d = (radius * radius + r * r - 2.0 * radius * r * t).sqrt();
            let dd_dr = (radius - r * t) / d;
            let kernel = green(k, d) * (I * k - 1.0 / d) * dd_dr;
            sum += w * kernel * legendre_p(p, t);
        }
        2.0 * PI * radius * radius * sum
    }

    fn coeffs(p: usize, k: Complex64, radius: f64) -> ModalLayerCoeffs {
        layer_modal_coeffs(p, k, radius).unwrap()
    }

    #[test]
    fn single_layer_matches_kernel_quadrature_off_surface() {
        use crate::specfun::{sph_bessel_j, sph_hankel1};
        for (p, r) in [(0, 0.6), (2, 0.6), (1, 1.7)] {
            for k in [c(1.3, 0.0), c(1.3, 0.2)] {
                let radius = 1.0;
                let oracle = single_layer_field(p, k, radius, r);
                let (inner, outer) = (r.min(radius), r.max(radius));
                let want = I
                    * k
                    * radius
                    * radius
                    * sph_bessel_j(p, k * inner).unwrap()
                    * sph_hankel1(p, k * outer).unwrap();
                assert!(
                    (oracle - want).norm() < 1e-10,
                    "p={p} r={r} k={k}: {oracle} vs {want}"
                );
            }
        }
    }

    #[test]
    fn double_layer_matches_kernel_quadrature_off_surface() {
        use crate::specfun::{sph_bessel_j, sph_hankel1_deriv};
        // Interior field of D is i k^2 R^2 j_p(kr) h_p'(kR): the same h'
        // factor that enters the double/hyper coefficients.
        for (p, r, k) in [(1, 0.5, c(1.1, 0.0)), (0, 0.4, c(2.0, -0.3))] {
            let radius = 1.0;
            let oracle = double_layer_field(p, k, radius, r);
            let want = I
                * k
                * k
                * radius
                * radius
                * sph_bessel_j(p, k * r).unwrap()
                * sph_hankel1_deriv(p, k * radius).unwrap();
            assert!(
                (oracle - want).norm() < 1e-9,
                "p={p} r={r} k={k}: {oracle} vs {want}"
            );
        }
    }

    #[test]
    fn on_surface_single_layer_oracle() {
        // On-surface quadrature with the substitution t = 1 - u^2, which
        // turns the weakly singular integrand into the smooth
        // (R/sqrt(2)) e^{i k R sqrt(2) u} P_p(1 - u^2).
        let (xs, ws) = gauss_legendre(120);
        for radius in [1.0, 1.7] {
            for p in 0..=3 {
                let k = c(2.0, 0.0);
                let half_len = 2.0f64.sqrt() / 2.0;
                let mut sum = c(0.0, 0.0);
                for (&x, &w) in xs.iter().zip(&ws) {
                    let u = half_len * (x + 1.0);
                    let phase = (I * k * radius * 2.0f64.sqrt() * u).exp();
                    sum += w * half_len * phase * legendre_p(p, 1.0 - u * u);
                }
                let oracle = radius / 2.0f64.sqrt() * sum;
                let got = coeffs(p, k, radius).single;
                assert!(
                    (got - oracle).norm() < 1e-12,
                    "p={p} R={radius}: {got} vs {oracle}"
                );
            }
        }
    }

    #[test]
    fn double_equals_normal_single() {
        for p in 0..=10 {
            for k in [c(0.7, 0.0), c(3.1, 0.0), c(2.0, 0.5), c(4.5, -0.8)] {
                let cf = coeffs(p, k, 1.3);
                let scale = cf.double.norm().max(1.0);
                assert!(
                    (cf.double - cf.normal_single).norm() <= 1e-10 * scale,
                    "p={p} k={k}"
                );
            }
        }
    }

    #[test]
    fn block_vanishes_without_contrast() {
        // index = 1 and eta = 0: both Calderon relations coincide, Z = 0.
        let med = ConductiveSphere {
            radius: 1.0,
            index: 1.0,
            eta: 0.0,
        };
        let z = assemble_z_block(c(2.2, 0.0), 3, &med).unwrap();
        for row in z {
            for v in row {
                assert!(v.norm() < 1e-14);
            }
        }
    }

    #[test]
    fn block_is_affine_in_eta() {
        let k = c(2.7, 0.1);
        let blocks: Vec<_> = [0.0, 1.5, 3.0]
            .iter()
            .map(|&eta| assemble_z_block(k, 2, &medium(4.0, eta)).unwrap())
            .collect();
        for r in 0..2 {
            for col in 0..2 {
                let d1 = blocks[1][r][col] - blocks[0][r][col];
                let d2 = blocks[2][r][col] - blocks[1][r][col];
                assert!((d1 - d2).norm() < 1e-12);
            }
        }
        // The eta coupling enters only through the second column.
        assert_eq!(blocks[0][0][0], blocks[2][0][0]);
        assert_eq!(blocks[0][1][0], blocks[2][1][0]);
    }

    #[test]
    fn det_z_vanishes_at_modal_roots() {
        // Zero sets of det Z_p and det M_p agree: every modal root makes the
        // block determinant collapse by many orders of magnitude.
        for (n, eta) in [(4.0, 1.0), (0.5, 0.5)] {
            let med = medium(n, eta);
            for p in 0..=3 {
                let baseline: f64 = (0..40)
                    .map(|i| {
                        let k = 0.7 + 0.1 * i as f64;
                        det_z(c(k, 0.0), p, &med).unwrap().norm()
                    })
                    .sum::<f64>()
                    / 40.0;
                let roots = roots_for_order(&med, p, (0.7, 4.7), 1e-3).unwrap();
                assert!(!roots.is_empty(), "no modal roots for p={p} n={n}");
                for root in &roots {
                    let dz = det_z(c(root.k, 0.0), p, &med).unwrap().norm();
                    assert!(
                        dz < 1e-5 * baseline,
                        "p={p} n={n} k={}: |det Z| = {dz:.3e}, baseline {baseline:.3e}",
                        root.k
                    );
                }
            }
        }
    }

    #[test]
    fn det_z_nonzero_away_from_modal_roots() {
        let med = medium(4.0, 1.0);
        for p in 0..=2 {
            let roots = roots_for_order(&med, p, (0.7, 4.7), 1e-3).unwrap();
            let mut k = 0.9;
            while k < 4.5 {
                if roots.iter().all(|r| (r.k - k).abs() > 0.15) {
                    let dz = det_z(c(k, 0.0), p, &med).unwrap().norm();
                    assert!(dz > 1e-6, "spurious zero near k={k} p={p}");
                    // and the modal determinant agrees about non-vanishing
                    assert!(scaled_modal_det(k, p, &med).abs() > 1e-8);
                }
                k += 0.05;
            }
        }
    }

    #[test]
    fn det_z_is_analytic() {
        // Closed-contour integral of a holomorphic function vanishes.
        let med = medium(4.0, 1.0);
        let contour = EllipticContour::new(c(3.0, 0.5), 0.4, 0.25, 48).unwrap();
        let total: Complex64 = contour
            .nodes()
            .iter()
            .map(|&(z, w)| w * det_z(z, 2, &med).unwrap())
            .sum();
        let scale: f64 = contour
            .nodes()
            .iter()
            .map(|&(z, _)| det_z(z, 2, &med).unwrap().norm())
            .fold(0.0, f64::max);
        assert!(total.norm() < 1e-12 * scale.max(1.0));
    }

    #[test]
    fn beyn_route_matches_modal_route() {
        let med = medium(4.0, 1.0);
        let p_max = 8;
        let got = bie_eigenvalues(&med, (2.5, 4.5), p_max, 64, 17).unwrap();
        let mut want: Vec<(f64, usize)> = Vec::new();
        for p in 0..=p_max {
            for r in roots_for_order(&med, p, (2.5, 4.5), 1e-3).unwrap() {
                want.push((r.k, p));
            }
        }
        want.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert_eq!(
            got.len(),
            want.len(),
            "got {:?} want {:?}",
            got.iter().map(|g| (g.k.re, g.order)).collect::<Vec<_>>(),
            want
        );
        for (g, (wk, wp)) in got.iter().zip(&want) {
            let tol = if (wk - PI).abs() < 1e-6 { 1e-5 } else { 1e-8 };
            assert!(
                (g.k - c(*wk, 0.0)).norm() < tol,
                "got {} want {wk} (order {wp})",
                g.k
            );
            assert_eq!(g.order, *wp);
            assert!(g.k.im.abs() < tol);
            assert!(!g.near_boundary);
        }
    }

    #[test]
    fn beyn_route_resolves_defective_root() {
        // k = pi is a double zero of det Z_0; the polished pair must collapse
        // to a single reported eigenvalue.
        let med = medium(4.0, 1.0);
        let got = bie_eigenvalues(&med, (3.05, 3.25), 2, 64, 99).unwrap();
        let near_pi: Vec<_> = got.iter().filter(|g| (g.k.re - PI).abs() < 1e-3).collect();
        assert_eq!(near_pi.len(), 1);
        assert!((near_pi[0].k - c(PI, 0.0)).norm() < 1e-5);
        assert_eq!(near_pi[0].order, 0);
    }

    #[test]
    fn modal_and_block_determinants_share_pi_at_every_eta() {
        for eta in [0.0, 0.01, 1.0, 100.0] {
            let med = medium(4.0, eta);
            assert!(det_z(c(PI, 0.0), 0, &med).unwrap().norm() < 1e-12);
            assert!(modal_det(c(PI, 0.0), 0, &med).norm() < 1e-12);
        }
    }

    #[test]
    fn interval_validation() {
        let med = medium(4.0, 1.0);
        assert!(matches!(
            bie_eigenvalues(&med, (2.0, 1.0), 3, 64, 1),
            Err(BieError::BadInterval(..))
        ));
        assert!(matches!(
            bie_eigenvalues(&med, (0.0, 1.0), 3, 64, 1),
            Err(BieError::BadInterval(..))
        ));
    }
}
