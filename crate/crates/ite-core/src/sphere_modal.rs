//! Interior transmission eigenvalues of a ball via the per-mode 2x2
//! determinant.
//!
//! For a ball of radius R the transmission eigenvalue problem separates over
//! spherical-harmonic orders p. Nontrivial solutions exist exactly at the
//! zeros of det M_p(k) with
//!
//! ```text
//!   M_p(k) = [ -j_p(kR)                    j_p(k sqrt(n) R)              ]
//!            [ -k j_p'(kR) - eta j_p(kR)   k sqrt(n) j_p'(k sqrt(n) R)   ]
//! ```
//!
//! The scanner walks a k-grid per order, refines sign changes with Brent's
//! method and polishes sign-preserving ("touching") zeros by minimizing
//! |det|. k = pi is such a touching zero for n = 4, R = 1, p = 0 at every
//! eta, so this path is load-bearing for the tables.

use num_complex::Complex64;
use thiserror::Error;

use crate::nep_beyn::{block_nep_eigenvalues, BeynError, BlockEigenvalue};
use crate::specfun::{sph_bessel_j_seq, P_MAX};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error("refractive index must be positive and different from 1, got {0}")]
    InvalidIndex(f64),
    #[error("boundary conductivity must be nonnegative, got {0}")]
    InvalidEta(f64),
}

/// A ball-shaped medium with a conductive boundary.
///
/// `eta = 0` is admitted as the classical limiting case even though the
/// analysis assumes `eta > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConductiveSphere {
    pub radius: f64,
    pub index: f64,
    pub eta: f64,
}

impl ConductiveSphere {
    pub fn new(radius: f64, index: f64, eta: f64) -> Result<Self, ModelError> {
        if !(radius > 0.0) {
            return Err(ModelError::InvalidRadius(radius));
        }
        if !(index > 0.0) || index == 1.0 {
            return Err(ModelError::InvalidIndex(index));
        }
        if !(eta >= 0.0) {
            return Err(ModelError::InvalidEta(eta));
        }
        Ok(Self { radius, index, eta })
    }

    pub fn with_eta(&self, eta: f64) -> Self {
        Self { eta, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiplicityHint {
    SimpleSignChange,
    TouchingZero,
}

/// One computed transmission eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenvalueRecord {
    pub k: f64,
    pub order: usize,
    pub hint: MultiplicityHint,
    /// |det M_p(k)| at the converged root, relative to the local entry scale.
    pub residual: f64,
    pub bracket: (f64, f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScanError {
    #[error("invalid wave-number interval ({0}, {1})")]
    BadInterval(f64, f64),
    #[error("grid step must be positive, got {0}")]
    BadGridStep(f64),
    #[error("root refinement failed to converge in bracket ({0}, {1})")]
    RefinementFailed(f64, f64),
    #[error("eigenvalue-branch tracking failed near eta = {0}")]
    TrackingFailed(f64),
    #[error("eta sequence must decrease by a factor of 2")]
    BadEtaSequence,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The modal matrix M_p(k) for complex k.
pub fn modal_matrix(k: Complex64, p: usize, medium: &ConductiveSphere) -> [[Complex64; 2]; 2] {
    let root_n = medium.index.sqrt();
    let z1 = k * medium.radius;
    let z2 = k * root_n * medium.radius;
    let j1 = sph_bessel_j_seq(p + 1, z1).expect("order within cap");
    let j2 = sph_bessel_j_seq(p + 1, z2).expect("order within cap");
    let d1 = bessel_deriv(&j1, p, z1);
    let d2 = bessel_deriv(&j2, p, z2);
    let eta = Complex64::new(medium.eta, 0.0);
    [
        [-j1[p], j2[p]],
        [-k * d1 - eta * j1[p], k * root_n * d2],
    ]
}

fn bessel_deriv(seq: &[Complex64], p: usize, z: Complex64) -> Complex64 {
    if z == Complex64::new(0.0, 0.0) {
        return Complex64::new(if p == 1 { 1.0 / 3.0 } else { 0.0 }, 0.0);
    }
    if p == 0 {
        -seq[1]
    } else {
        seq[p - 1] - Complex64::new((p + 1) as f64, 0.0) / z * seq[p]
    }
}

/// det M_p(k).
pub fn modal_det(k: Complex64, p: usize, medium: &ConductiveSphere) -> Complex64 {
    let m = modal_matrix(k, p, medium);
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// det M_p(k) for real k, normalized by the magnitude of the two products.
///
/// The raw determinant decays super-exponentially in p, which would turn
/// every high order into a false touching zero; the scaled value stays O(1).
pub fn scaled_modal_det(k: f64, p: usize, medium: &ConductiveSphere) -> f64 {
    let m = modal_matrix(Complex64::new(k, 0.0), p, medium);
    let prod1 = m[0][0].re * m[1][1].re;
    let prod2 = m[0][1].re * m[1][0].re;
    (prod1 - prod2) / (prod1.abs() + prod2.abs() + f64::MIN_POSITIVE)
}

/// Scaled determinants for all orders 0..=p_max at one wave number, sharing
/// the Bessel sequences of the two arguments.
fn scaled_dets_all_orders(k: f64, p_max: usize, medium: &ConductiveSphere) -> Vec<f64> {
    let root_n = medium.index.sqrt();
    let z1 = Complex64::new(k * medium.radius, 0.0);
    let z2 = Complex64::new(k * root_n * medium.radius, 0.0);
    let j1 = sph_bessel_j_seq(p_max + 1, z1).expect("order within cap");
    let j2 = sph_bessel_j_seq(p_max + 1, z2).expect("order within cap");
    (0..=p_max)
        .map(|p| {
            let d1 = bessel_deriv(&j1, p, z1).re;
            let d2 = bessel_deriv(&j2, p, z2).re;
            let a11 = -j1[p].re;
            let a12 = j2[p].re;
            let a21 = -k * d1 - medium.eta * j1[p].re;
            let a22 = k * root_n * d2;
            let prod1 = a11 * a22;
            let prod2 = a12 * a21;
            (prod1 - prod2) / (prod1.abs() + prod2.abs() + f64::MIN_POSITIVE)
        })
        .collect()
}

/// Brent's method on a bracket with fa*fb < 0.
fn brent(
    f: &mut dyn FnMut(f64) -> f64,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
) -> Result<f64, ScanError> {
    let (a0, b0) = (a, b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(ScanError::RefinementFailed(a, b));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.abs() > fc.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 1e-14;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() < tol || fa.abs() <= fb.abs() {
            d = m;
            e = m;
        } else {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    Err(ScanError::RefinementFailed(a0, b0))
}

/// Golden-section minimization of |f| on (a, b).
fn golden_min_abs(f: &mut dyn FnMut(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1).abs();
    let mut f2 = f(x2).abs();
    while b - a > 1e-11 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1).abs();
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2).abs();
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScanParams {
    pub k_interval: (f64, f64),
    pub p_max: usize,
    pub grid_step: f64,
}

impl Default for ScanParams {
    fn default() -> Self {
        Self {
            k_interval: (0.1, 5.0),
            p_max: 25,
            grid_step: 1e-3,
        }
    }
}

impl ScanParams {
    fn validate(&self) -> Result<(), ScanError> {
        let (lo, hi) = self.k_interval;
        if !(0.0 < lo && lo < hi) {
            return Err(ScanError::BadInterval(lo, hi));
        }
        if !(self.grid_step > 0.0) {
            return Err(ScanError::BadGridStep(self.grid_step));
        }
        if self.p_max > P_MAX - 1 {
            return Err(ScanError::Model(ModelError::InvalidIndex(self.p_max as f64)));
        }
        Ok(())
    }
}

/// Extract roots of one order's grid samples: Brent on sign changes,
/// |det|-minimization on sign-preserving dips.
fn roots_from_grid(
    grid: &[f64],
    values: &[f64],
    f: &mut dyn FnMut(f64) -> f64,
    p: usize,
) -> Result<Vec<EigenvalueRecord>, ScanError> {
    let mut out = Vec::new();
    let median = {
        let mut mags: Vec<f64> = values.iter().map(|v| v.abs()).collect();
        mags.sort_by(|a, b| a.total_cmp(b));
        mags[mags.len() / 2].max(1e-12)
    };
    let mut sign_change_cells = vec![false; grid.len()];
    for i in 0..grid.len() - 1 {
        if values[i] == 0.0 {
            continue;
        }
        if values[i] * values[i + 1] < 0.0 {
            sign_change_cells[i] = true;
            let k = brent(f, grid[i], grid[i + 1], values[i], values[i + 1])?;
            out.push(EigenvalueRecord {
                k,
                order: p,
                hint: MultiplicityHint::SimpleSignChange,
                residual: f(k).abs(),
                bracket: (grid[i], grid[i + 1]),
            });
        }
    }
    // Touching-zero candidates: interior local minima of |det| away from any
    // sign change. The gate is deliberately weak — at large eta the dip at a
    // double root is much narrower than the grid step, so its on-grid
    // minimum stays shallow; the curvature test below does the real
    // filtering.
    for i in 1..grid.len() - 1 {
        let v = values[i].abs();
        if v < values[i - 1].abs()
            && v <= values[i + 1].abs()
            && v < 0.9 * median
            && !sign_change_cells[i - 1]
            && !sign_change_cells[i]
        {
            let (k, fmin) = golden_min_abs(f, grid[i - 1], grid[i + 1]);
            // Curvature test: at a genuine even-order zero the polished value
            // sits many orders of magnitude below the values a fixed offset
            // away; a merely shallow minimum stays comparable to them.
            let h = 1e-4;
            let side = f(k - h).abs().min(f(k + h).abs());
            if fmin < 1e-3 * side {
                out.push(EigenvalueRecord {
                    k,
                    order: p,
                    hint: MultiplicityHint::TouchingZero,
                    residual: fmin,
                    bracket: (grid[i - 1], grid[i + 1]),
                });
            }
        }
    }
    out.sort_by(|a, b| a.k.total_cmp(&b.k));
    Ok(out)
}

fn make_grid(interval: (f64, f64), step: f64) -> Vec<f64> {
    let n = ((interval.1 - interval.0) / step).ceil() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|i| interval.0 + i as f64 * step).collect();
    if let Some(last) = grid.last_mut() {
        *last = interval.1;
    }
    grid
}

/// Roots of det M_p(k) for a single order over the interval.
pub fn roots_for_order(
    medium: &ConductiveSphere,
    p: usize,
    interval: (f64, f64),
    grid_step: f64,
) -> Result<Vec<EigenvalueRecord>, ScanError> {
    let params = ScanParams {
        k_interval: interval,
        p_max: p,
        grid_step,
    };
    params.validate()?;
    let grid = make_grid(interval, grid_step);
    let values: Vec<f64> = grid.iter().map(|&k| scaled_modal_det(k, p, medium)).collect();
    let mut f = |k: f64| scaled_modal_det(k, p, medium);
    roots_from_grid(&grid, &values, &mut f, p)
}

/// All transmission eigenvalues in the interval, merged across orders and
/// sorted ascending in k.
pub fn scan_real_eigenvalues(
    medium: &ConductiveSphere,
    params: &ScanParams,
) -> Result<Vec<EigenvalueRecord>, ScanError> {
    params.validate()?;
    let grid = make_grid(params.k_interval, params.grid_step);
    // Grid pass shares the Bessel sequences across orders; refinement below
    // re-evaluates per order only near roots.
    let mut per_order: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.len()); params.p_max + 1];
    for &k in &grid {
        let dets = scaled_dets_all_orders(k, params.p_max, medium);
        for (p, v) in dets.into_iter().enumerate() {
            per_order[p].push(v);
        }
    }
    let mut all = Vec::new();
    for (p, values) in per_order.iter().enumerate() {
        let mut f = |k: f64| scaled_modal_det(k, p, medium);
        all.extend(roots_from_grid(&grid, values, &mut f, p)?);
    }
    all.sort_by(|a, b| a.k.total_cmp(&b.k));
    Ok(merge_duplicates(all, 1e-9))
}

fn merge_duplicates(sorted: Vec<EigenvalueRecord>, tol: f64) -> Vec<EigenvalueRecord> {
    let mut out: Vec<EigenvalueRecord> = Vec::with_capacity(sorted.len());
    for rec in sorted {
        match out.last_mut() {
            Some(last) if (rec.k - last.k).abs() <= tol => {
                if rec.residual < last.residual {
                    *last = rec;
                }
            }
            _ => out.push(rec),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirichletBall {
    /// Zeros of j_p(kR): the ball of radius R.
    RadiusR,
    /// Zeros of j_p(k sqrt(n) R): effectively the ball of radius sqrt(n) R.
    RadiusRootNR,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirichletRoot {
    pub k: f64,
    pub order: usize,
    pub ball: DirichletBall,
}

/// Interior Dirichlet eigenvalues of the two balls whose union is the
/// eta -> infinity limit of the transmission spectrum.
pub fn dirichlet_limit_eigenvalues(
    medium: &ConductiveSphere,
    interval: (f64, f64),
    p_max: usize,
    grid_step: f64,
) -> Result<Vec<DirichletRoot>, ScanError> {
    let params = ScanParams {
        k_interval: interval,
        p_max,
        grid_step,
    };
    params.validate()?;
    let grid = make_grid(interval, grid_step);
    let mut out = Vec::new();
    for (ball, scale) in [
        (DirichletBall::RadiusR, medium.radius),
        (DirichletBall::RadiusRootNR, medium.radius * medium.index.sqrt()),
    ] {
        for p in 0..=p_max {
            let eval = |k: f64| {
                sph_bessel_j_seq(p, Complex64::new(k * scale, 0.0)).expect("order within cap")[p].re
            };
            let values: Vec<f64> = grid.iter().map(|&k| eval(k)).collect();
            for i in 0..grid.len() - 1 {
                if values[i] != 0.0 && values[i] * values[i + 1] < 0.0 {
                    let mut f = eval;
                    let k = brent(&mut f, grid[i], grid[i + 1], values[i], values[i + 1])?;
                    out.push(DirichletRoot { k, order: p, ball });
                }
            }
        }
    }
    out.sort_by(|a, b| a.k.total_cmp(&b.k));
    Ok(out)
}

/// First (smallest) eigenvalue for each eta in the list.
pub fn monotonicity_sweep(
    medium: &ConductiveSphere,
    eta_list: &[f64],
    params: &ScanParams,
) -> Result<Vec<f64>, ScanError> {
    eta_list
        .iter()
        .map(|&eta| {
            let records = scan_real_eigenvalues(&medium.with_eta(eta), params)?;
            records
                .first()
                .map(|r| r.k)
                .ok_or(ScanError::TrackingFailed(eta))
        })
        .collect()
}

/// Track the first `count` eigenvalue branches over a sequence of eta
/// values. Returns one row of branch values per eta.
///
/// Each branch is continued by the nearest root of its own mode order:
/// neighboring branches of different orders can pass within one eta-halving
/// step of each other (the second and first branches do for n = 4 between
/// eta = 1 and eta = 1/2), so order-blind nearest continuation would jump
/// tracks there.
pub fn track_branches(
    medium: &ConductiveSphere,
    eta_list: &[f64],
    count: usize,
    params: &ScanParams,
) -> Result<Vec<Vec<f64>>, ScanError> {
    let first = scan_real_eigenvalues(&medium.with_eta(eta_list[0]), params)?;
    if first.len() < count {
        return Err(ScanError::TrackingFailed(eta_list[0]));
    }
    let mut branches: Vec<(usize, f64)> =
        first[..count].iter().map(|r| (r.order, r.k)).collect();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(eta_list.len());
    rows.push(branches.iter().map(|&(_, k)| k).collect());
    for &eta in &eta_list[1..] {
        let records = scan_real_eigenvalues(&medium.with_eta(eta), params)?;
        for (order, k) in &mut branches {
            *k = records
                .iter()
                .filter(|r| r.order == *order)
                .map(|r| r.k)
                .min_by(|a, b| (*a - *k).abs().total_cmp(&(*b - *k).abs()))
                .ok_or(ScanError::TrackingFailed(eta))?;
        }
        rows.push(branches.iter().map(|&(_, k)| k).collect());
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EocEntry {
    pub index: usize,
    pub abs_error: f64,
    /// Absent on the first row and wherever the error is exactly zero.
    pub eoc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EocRow {
    pub eta: f64,
    pub entries: Vec<EocEntry>,
}

/// Estimated order of convergence of selected eigenvalue indices as eta is
/// halved toward zero.
///
/// `reference` holds the eta = 0 eigenvalues (distinct values). Branches are
/// matched by continuity in eta, and each branch is attributed to the nearest
/// reference value at the smallest eta, where the remaining gap is far below
/// the reference spacing.
pub fn eoc_table(
    medium: &ConductiveSphere,
    eta_sequence: &[f64],
    eigen_indices: &[usize],
    reference: &[f64],
    params: &ScanParams,
) -> Result<Vec<EocRow>, ScanError> {
    if eta_sequence.len() < 2 || reference.is_empty() {
        return Err(ScanError::BadEtaSequence);
    }
    for w in eta_sequence.windows(2) {
        if (w[1] - w[0] / 2.0).abs() > 1e-12 * w[0] {
            return Err(ScanError::BadEtaSequence);
        }
    }
    let count = *eigen_indices.iter().max().unwrap_or(&1);
    let rows = track_branches(medium, eta_sequence, count, params)?;
    let last = rows.last().expect("nonempty");
    // Reference per branch: nearest eta = 0 value to the branch endpoint.
    let refs: Vec<f64> = last
        .iter()
        .map(|&k| {
            reference
                .iter()
                .copied()
                .min_by(|a, b| (a - k).abs().total_cmp(&(b - k).abs()))
                .expect("nonempty reference")
        })
        .collect();
    let mut out: Vec<EocRow> = Vec::with_capacity(rows.len());
    for (m, (&eta, row)) in eta_sequence.iter().zip(&rows).enumerate() {
        let entries = eigen_indices
            .iter()
            .map(|&i| {
                let err = (refs[i - 1] - row[i - 1]).abs();
                let eoc = if m == 0 {
                    None
                } else {
                    let prev_err = out[m - 1]
                        .entries
                        .iter()
                        .find(|e| e.index == i)
                        .map(|e| e.abs_error)
                        .unwrap_or(0.0);
                    if err == 0.0 || prev_err == 0.0 {
                        None
                    } else {
                        Some((prev_err / err).log2())
                    }
                };
                EocEntry {
                    index: i,
                    abs_error: err,
                    eoc,
                }
            })
            .collect();
        out.push(EocRow { eta, entries });
    }
    Ok(out)
}

/// Locate the eta interval in which two eigenvalue branches swap order.
///
/// Branches are followed inside their own mode-order family, so the search
/// stays well-posed through the crossing itself.
pub fn find_crossover(
    medium: &ConductiveSphere,
    branch_lo: usize,
    branch_hi: usize,
    eta_range: (f64, f64),
    steps: usize,
    params: &ScanParams,
) -> Result<Option<(f64, f64)>, ScanError> {
    let start = scan_real_eigenvalues(&medium.with_eta(eta_range.0), params)?;
    if start.len() < branch_hi {
        return Err(ScanError::TrackingFailed(eta_range.0));
    }
    let a = &start[branch_lo - 1];
    let b = &start[branch_hi - 1];
    let ratio = (eta_range.1 / eta_range.0).powf(1.0 / steps as f64);
    let mut ka = a.k;
    let mut kb = b.k;
    let mut prev_eta = eta_range.0;
    for i in 1..=steps {
        // Recompute from the left endpoint (and pin the last step) so the
        // bracket cannot drift past eta_range.1 through accumulated rounding.
        let eta = if i == steps {
            eta_range.1
        } else {
            eta_range.0 * ratio.powi(i as i32)
        };
        let med = medium.with_eta(eta);
        let window = 0.35;
        ka = nearest_root_in_order(&med, a.order, ka, window, params.grid_step)?;
        kb = nearest_root_in_order(&med, b.order, kb, window, params.grid_step)?;
        if kb < ka {
            return Ok(Some((prev_eta, eta)));
        }
        prev_eta = eta;
    }
    Ok(None)
}

fn nearest_root_in_order(
    medium: &ConductiveSphere,
    p: usize,
    k_near: f64,
    window: f64,
    grid_step: f64,
) -> Result<f64, ScanError> {
    let interval = ((k_near - window).max(1e-3), k_near + window);
    let roots = roots_for_order(medium, p, interval, grid_step)?;
    roots
        .iter()
        .map(|r| r.k)
        .min_by(|a, b| (a - k_near).abs().total_cmp(&(b - k_near).abs()))
        .ok_or(ScanError::TrackingFailed(k_near))
}

/// Eigenvalues of the block-diagonal modal family M_p over orders
/// 0..=p_max, found with the contour solver instead of a real-line scan.
///
/// This is an independent route to the same zero set as
/// [`scan_real_eigenvalues`]: the contour integral sees the determinant as a
/// holomorphic function and needs no sign changes, so it recovers the
/// sign-preserving double roots the scan has to treat specially.
pub fn modal_nep_eigenvalues(
    medium: &ConductiveSphere,
    interval: (f64, f64),
    p_max: usize,
    node_count: usize,
    seed: u64,
) -> Result<Vec<BlockEigenvalue>, BeynError> {
    let med = *medium;
    let block = move |k: Complex64, p: usize| modal_matrix(k, p, &med);
    block_nep_eigenvalues(&block, p_max + 1, interval, node_count, seed)
}
