//! Contour-integral solver for holomorphic nonlinear eigenvalue problems
//! T(z) x = 0.
//!
//! Two resolvent moments are accumulated over trapezoidal nodes of an
//! elliptic contour; a rank-revealing SVD of the zeroth moment reduces the
//! problem to a small dense linear eigenproblem whose eigenvalues are the
//! nonlinear eigenvalues inside the contour. Trapezoidal quadrature on a
//! closed contour of an analytic integrand converges exponentially in the
//! node count.

use ndarray::prelude::*;
use ndarray_linalg::{Eig, Factorize, Norm, Solve, SVD};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Error)]
pub enum BeynError {
    #[error("invalid contour: {0}")]
    BadContour(String),
    #[error("T(z) is numerically singular at contour node z = {0}; the contour may pass through an eigenvalue")]
    SingularAtNode(Complex64),
    #[error("moment matrix is full rank at {0} probe columns - increase probe_columns")]
    ProbeTooSmall(usize),
    #[error("moment matrix is full rank at moment order {0} - increase moment_order")]
    MomentSpaceSaturated(usize),
    #[error("dense linear algebra failed: {0}")]
    Linalg(String),
}

/// An ellipse z(t) = center + a cos t + i b sin t, traversed once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticContour {
    pub center: Complex64,
    pub semi_axis_real: f64,
    pub semi_axis_imag: f64,
    pub node_count: usize,
}

impl EllipticContour {
    pub fn new(
        center: Complex64,
        semi_axis_real: f64,
        semi_axis_imag: f64,
        node_count: usize,
    ) -> Result<Self, BeynError> {
        if !(semi_axis_real > 0.0 && semi_axis_imag > 0.0) {
            return Err(BeynError::BadContour("semi-axes must be positive".into()));
        }
        if node_count < 8 || node_count % 2 != 0 {
            return Err(BeynError::BadContour(
                "node_count must be an even integer >= 8".into(),
            ));
        }
        Ok(Self {
            center,
            semi_axis_real,
            semi_axis_imag,
            node_count,
        })
    }

    /// Trapezoidal nodes z_j with weights w_j such that
    /// sum_j w_j f(z_j) ~ (1/2 pi i) contour integral of f.
    pub fn nodes(&self) -> Vec<(Complex64, Complex64)> {
        let n = self.node_count;
        (0..n)
            .map(|j| {
                let t = std::f64::consts::TAU * j as f64 / n as f64;
                let z = self.center
                    + Complex64::new(self.semi_axis_real * t.cos(), self.semi_axis_imag * t.sin());
                let dz = Complex64::new(-self.semi_axis_real * t.sin(), self.semi_axis_imag * t.cos());
                (z, dz / (I * n as f64))
            })
            .collect()
    }

    /// Squared elliptic coordinate; < 1 strictly inside.
    fn level(&self, z: Complex64) -> f64 {
        let dx = (z.re - self.center.re) / self.semi_axis_real;
        let dy = (z.im - self.center.im) / self.semi_axis_imag;
        dx * dx + dy * dy
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.level(z) < 1.0
    }

    /// Rough distance from z to the contour curve.
    pub fn boundary_distance(&self, z: Complex64) -> f64 {
        (self.level(z).sqrt() - 1.0).abs() * self.semi_axis_real.min(self.semi_axis_imag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeynConfig {
    /// Number of random probe columns; must be at least the expected
    /// eigenvalue count (with multiplicity) plus a margin.
    pub probe_columns: usize,
    /// Relative singular-value cutoff for the rank decision.
    pub rank_tol: f64,
    /// Acceptance threshold on ||T(lambda) v|| for unit v.
    pub residual_tol: f64,
    /// Number of block rows K in the Hankel matrices; 2K moments are
    /// accumulated. The searchable invariant space per run is
    /// K * probe_columns, so K > 1 is what allows more eigenvalues (with
    /// multiplicity) inside the contour than the matrix dimension.
    pub moment_order: usize,
    pub rng_seed: u64,
}

impl BeynConfig {
    pub fn new(probe_columns: usize, rng_seed: u64) -> Self {
        Self {
            probe_columns,
            rank_tol: 1e-10,
            residual_tol: 1e-8,
            moment_order: 2,
            rng_seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NepEigenpair {
    pub lambda: Complex64,
    /// Unit-norm eigenvector.
    pub vector: Array1<Complex64>,
    pub residual: f64,
    /// Set when lambda lies within 1e-8 of the contour curve.
    pub near_boundary: bool,
}

/// ||T(lambda) v|| for a unit-norm v.
pub fn residual<F>(t: &F, lambda: Complex64, v: &Array1<Complex64>) -> f64
where
    F: Fn(Complex64) -> Array2<Complex64>,
{
    t(lambda).dot(v).norm_l2()
}

/// Beyn's contour algorithm with higher-order moments.
///
/// 2K resolvent moments (K = `moment_order`) are stacked into block Hankel
/// matrices; the rank-revealing SVD of the zeroth Hankel matrix reduces the
/// problem to a dense eigenproblem whose spectrum inside the contour is that
/// of T. Moments are taken in the centered, radius-scaled coordinate for
/// conditioning. `t` must be analytic inside and on the contour and
/// invertible at every node. Returned pairs are sorted by real part, then
/// imaginary part.
pub fn beyn_solve<F>(
    t: &F,
    dim: usize,
    contour: &EllipticContour,
    config: &BeynConfig,
) -> Result<Vec<NepEigenpair>, BeynError>
where
    F: Fn(Complex64) -> Array2<Complex64>,
{
    let ell = config.probe_columns.min(dim);
    let kk = config.moment_order.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut probe = Array2::<Complex64>::zeros((dim, ell));
    for v in probe.iter_mut() {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *v = Complex64::new(re, im) / 2f64.sqrt();
    }

    let center = contour.center;
    let rho = contour.semi_axis_real.max(contour.semi_axis_imag);
    let mut moments = vec![Array2::<Complex64>::zeros((dim, ell)); 2 * kk];
    // Accumulate in node order so results are bit-reproducible.
    for (z, w) in contour.nodes() {
        let tz = t(z);
        let lu = tz.factorize().map_err(|_| BeynError::SingularAtNode(z))?;
        let zeta = (z - center) / rho;
        for c in 0..ell {
            let col = probe.column(c).to_owned();
            let x = lu.solve(&col).map_err(|_| BeynError::SingularAtNode(z))?;
            let mut f = w;
            for moment in moments.iter_mut() {
                for r in 0..dim {
                    moment[[r, c]] += f * x[r];
                }
                f *= zeta;
            }
        }
    }

    // Block Hankel pair H0 = [A_{i+j}], H1 = [A_{i+j+1}], i, j = 0..K-1.
    let mut h0 = Array2::<Complex64>::zeros((kk * dim, kk * ell));
    let mut h1 = Array2::<Complex64>::zeros((kk * dim, kk * ell));
    for i in 0..kk {
        for j in 0..kk {
            h0.slice_mut(s![i * dim..(i + 1) * dim, j * ell..(j + 1) * ell])
                .assign(&moments[i + j]);
            h1.slice_mut(s![i * dim..(i + 1) * dim, j * ell..(j + 1) * ell])
                .assign(&moments[i + j + 1]);
        }
    }

    let (u, s, vt) = h0
        .svd(true, true)
        .map_err(|e| BeynError::Linalg(e.to_string()))?;
    let u = u.expect("requested U");
    let vt = vt.expect("requested V^T");
    let smax = s.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return Ok(Vec::new());
    }
    let rank = s.iter().filter(|&&x| x > config.rank_tol * smax).count();
    if rank == (kk * ell).min(kk * dim) {
        // The invariant space saturated: there may be more eigenvalues
        // inside the contour than the moments can represent.
        if ell < dim {
            return Err(BeynError::ProbeTooSmall(ell));
        }
        return Err(BeynError::MomentSpaceSaturated(kk));
    }
    if rank == 0 {
        return Ok(Vec::new());
    }

    let u0 = u.slice(s![.., ..rank]);
    let w0 = vt.slice(s![..rank, ..]).mapv(|x| x.conj()).reversed_axes();
    // B = U0^H H1 W0 Sigma0^{-1}
    let mut b = u0.mapv(|x| x.conj()).reversed_axes().dot(&h1).dot(&w0);
    for c in 0..rank {
        let inv = Complex64::new(1.0 / s[c], 0.0);
        b.column_mut(c).mapv_inplace(|x| x * inv);
    }

    let (vals, vecs) = b.eig().map_err(|e| BeynError::Linalg(e.to_string()))?;
    let mut out = Vec::new();
    for (i, &zeta) in vals.iter().enumerate() {
        let lambda = center + rho * zeta;
        if !contour.contains(lambda) {
            continue;
        }
        // Eigenvector in the original space: first block row of U0 times the
        // reduced eigenvector.
        let mut x = u0.slice(s![..dim, ..]).dot(&vecs.column(i).to_owned());
        let norm = x.norm_l2();
        if norm <= 1e-8 {
            continue;
        }
        x.mapv_inplace(|v| v / norm);
        let res = residual(t, lambda, &x);
        if res > config.residual_tol {
            continue;
        }
        out.push(NepEigenpair {
            lambda,
            vector: x,
            residual: res,
            near_boundary: contour.boundary_distance(lambda) < 1e-8,
        });
    }
    out.sort_by(|a, b| {
        a.lambda
            .re
            .total_cmp(&b.lambda.re)
            .then(a.lambda.im.total_cmp(&b.lambda.im))
    });
    Ok(out)
}

/// A few complex Newton steps on a scalar holomorphic function, with a
/// central-difference derivative. Converges quadratically on simple zeros
/// and linearly (ratio 1/2) on double zeros, which is what the touching
/// zeros of the modal determinant need.
pub fn newton_polish<F>(f: &F, z0: Complex64, max_iter: usize) -> Complex64
where
    F: Fn(Complex64) -> Complex64,
{
    let mut z = z0;
    for _ in 0..max_iter {
        let fz = f(z);
        if fz.norm() == 0.0 {
            break;
        }
        let h = 1e-7 * (1.0 + z.norm());
        let d = (f(z + Complex64::new(h, 0.0)) - f(z - Complex64::new(h, 0.0)))
            / Complex64::new(2.0 * h, 0.0);
        if d.norm() == 0.0 {
            break;
        }
        let step = fz / d;
        z -= step;
        if step.norm() < 1e-13 * (1.0 + z.norm()) {
            break;
        }
    }
    z
}

/// One eigenvalue of a block-diagonal 2x2-block nonlinear eigenproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockEigenvalue {
    pub k: Complex64,
    /// Index of the block carrying the eigenvector.
    pub block: usize,
    /// ||B(k) v|| for the unit null-vector candidate v of the owning
    /// (constant-rescaled) block.
    pub residual: f64,
    pub near_boundary: bool,
}

/// Eigenvalues of a holomorphic family of independent 2x2 blocks inside an
/// elliptic contour around a real interval.
///
/// Blocks are rescaled by a constant (their Frobenius norm at the contour
/// center) so magnitudes that decay rapidly with the block index cannot
/// push entire blocks under the rank cutoff. After the contour solve, each
/// eigenvalue is polished by complex Newton on its owning block's
/// determinant — this is what rescues the accuracy of sign-preserving
/// double roots, whose raw contour output splits into a symmetric pair that
/// is deduplicated after polishing. The probe width starts at min(dim, 12)
/// and doubles when the rank test reports saturation, and results from two
/// consecutive moment orders must agree (the rank test alone cannot always
/// see an under-resolved moment space, since low moments of a resolvent can
/// vanish identically).
pub fn block_nep_eigenvalues<F>(
    block: &F,
    block_count: usize,
    interval: (f64, f64),
    node_count: usize,
    seed: u64,
) -> Result<Vec<BlockEigenvalue>, BeynError>
where
    F: Fn(Complex64, usize) -> [[Complex64; 2]; 2],
{
    let (lo, hi) = interval;
    if !(0.0 < lo && lo < hi) {
        return Err(BeynError::BadContour(format!(
            "interval ({lo}, {hi}) must be positive and ordered"
        )));
    }
    let semi_real = (hi - lo) / 2.0;
    let contour = EllipticContour::new(
        Complex64::new((lo + hi) / 2.0, 0.0),
        semi_real,
        0.4f64.min(semi_real),
        node_count,
    )?;
    let dim = 2 * block_count;
    let scales: Vec<f64> = (0..block_count)
        .map(|p| {
            let b = block(contour.center, p);
            let fro = b
                .iter()
                .flatten()
                .map(|v| v.norm_sqr())
                .sum::<f64>()
                .sqrt();
            1.0 / fro.max(1e-300)
        })
        .collect();
    let t = |z: Complex64| {
        let mut out = Array2::zeros((dim, dim));
        for (p, &c) in scales.iter().enumerate() {
            let b = block(z, p);
            for r in 0..2 {
                for col in 0..2 {
                    out[[2 * p + r, 2 * p + col]] = b[r][col] * c;
                }
            }
        }
        out
    };

    let solve_at = |moment_order: usize| -> Result<Vec<BlockEigenvalue>, BeynError> {
        let mut ell = dim.min(12);
        let pairs = loop {
            let mut config = BeynConfig::new(ell, seed);
            config.moment_order = moment_order;
            // Loose pre-filter: pairs from a double root carry an
            // O(sqrt(eps)) perturbation and would fail a tight test before
            // polishing.
            config.residual_tol = 1e-4;
            match beyn_solve(&t, dim, &contour, &config) {
                Ok(pairs) => break pairs,
                Err(BeynError::ProbeTooSmall(_)) if ell < dim => ell = (2 * ell).min(dim),
                Err(e) => return Err(e),
            }
        };
        let mut out: Vec<BlockEigenvalue> = Vec::new();
        for pair in pairs {
            let p = (0..block_count)
                .max_by(|&a, &b| {
                    let na = pair.vector[2 * a].norm_sqr() + pair.vector[2 * a + 1].norm_sqr();
                    let nb = pair.vector[2 * b].norm_sqr() + pair.vector[2 * b + 1].norm_sqr();
                    na.total_cmp(&nb)
                })
                .expect("nonempty block range");
            let f = |z: Complex64| {
                let b = block(z, p);
                b[0][0] * b[1][1] - b[0][1] * b[1][0]
            };
            let k = newton_polish(&f, pair.lambda, 60);
            let b = block(k, p);
            let z = [
                [b[0][0] * scales[p], b[0][1] * scales[p]],
                [b[1][0] * scales[p], b[1][1] * scales[p]],
            ];
            // Null-vector candidate from the better-scaled row of the
            // adjugate.
            let r0 = z[0][0].norm_sqr() + z[0][1].norm_sqr();
            let r1 = z[1][0].norm_sqr() + z[1][1].norm_sqr();
            let v = if r0 >= r1 {
                [z[0][1], -z[0][0]]
            } else {
                [z[1][1], -z[1][0]]
            };
            let vnorm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
            if vnorm == 0.0 {
                continue;
            }
            let res0 = z[0][0] * v[0] + z[0][1] * v[1];
            let res1 = z[1][0] * v[0] + z[1][1] * v[1];
            let residual = (res0.norm_sqr() + res1.norm_sqr()).sqrt() / vnorm;
            if residual > 1e-8 || !contour.contains(k) {
                continue;
            }
            out.push(BlockEigenvalue {
                k,
                block: p,
                residual,
                near_boundary: contour.boundary_distance(k) < 1e-8,
            });
        }
        out.sort_by(|a, b| a.k.re.total_cmp(&b.k.re).then(a.block.cmp(&b.block)));
        // Polished duplicates from a double root land within the polish
        // noise floor (~1e-8); merge same-block neighbors well above that.
        out.dedup_by(|b, a| {
            a.block == b.block && (a.k - b.k).norm() <= 1e-6 && {
                if b.residual < a.residual {
                    a.k = b.k;
                    a.residual = b.residual;
                }
                true
            }
        });
        Ok(out)
    };

    let mut moment_order = 2;
    let mut current = solve_at(moment_order)?;
    loop {
        let next = match solve_at(moment_order + 1) {
            Ok(next) => next,
            Err(BeynError::MomentSpaceSaturated(_)) if moment_order < 8 => {
                moment_order += 1;
                current = solve_at(moment_order)?;
                continue;
            }
            Err(e) => return Err(e),
        };
        let agree = current.len() == next.len()
            && current
                .iter()
                .zip(&next)
                .all(|(a, b)| a.block == b.block && (a.k - b.k).norm() <= 1e-6);
        if agree || moment_order >= 8 {
            return Ok(current);
        }
        moment_order += 1;
        current = next;
    }
}

/// Collapse eigenvalues that agree within `tol` into one representative.
pub fn distinct_eigenvalues(mut lambdas: Vec<Complex64>, tol: f64) -> Vec<Complex64> {
    lambdas.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut out: Vec<Complex64> = Vec::with_capacity(lambdas.len());
    for l in lambdas {
        match out.last() {
            Some(&prev) if (l - prev).norm() <= tol => {}
            _ => out.push(l),
        }
    }
    out
}

/// Assemble a block-diagonal matrix from 2x2 blocks.
pub fn block_diag2(blocks: &[[[Complex64; 2]; 2]]) -> Array2<Complex64> {
    let m = 2 * blocks.len();
    let mut out = Array2::zeros((m, m));
    for (i, b) in blocks.iter().enumerate() {
        for r in 0..2 {
            for c in 0..2 {
                out[[2 * i + r, 2 * i + c]] = b[r][c];
            }
        }
    }
    out
}
