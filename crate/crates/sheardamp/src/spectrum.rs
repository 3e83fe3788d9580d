//! Spectral functions of the linearized operator on one Fourier mode.
//!
//! For c inside the shear range the boundary values of the resolvent are
//! governed by two real integrals along the critical layer y_c = u⁻¹(c),
//!
//! ```text
//! II₂(c) = p.v.∫₀¹ (u'(y) - u'(y_c)) / (u(y) - c)² dy,
//! II₃(c) = ∫₀¹ (1/φ₁(y,c)² - 1) / (u(y) - c)² dy ≤ 0,
//! ```
//!
//! which combine with the boundary weight ρ(c) = (c - u(0))(u(1) - c) into
//!
//! ```text
//! A(c) = u(0) - u(1) - ρ II₂ + u'(y_c) ρ II₃,
//! B(c) = π ρ u''(y_c) / u'(y_c)²,
//! ```
//!
//! Embedded eigenvalues exist exactly where A² + B² = 0; discrete
//! eigenvalues off the shear range are counted by the argument principle
//! applied to the Wronskian c ↦ φ(1, c); and the variational threshold
//! α_max² bounds the wavenumbers for which embedded eigenvalues can occur
//! at inflection points of the profile.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ode::{self, State2};
use crate::profile::{InflectionPoints, ShearProfile};
use crate::quadrature::pv_integral;
use crate::rayleigh::{Phi1Column, RayleighField};

/// Boundary weight ρ(c) = (c - u(0))(u(1) - c), nonnegative on the shear
/// range and exactly zero at its ends.
pub fn rho(p: &ShearProfile, c: f64) -> f64 {
    (c - p.u(0.0)) * (p.u(1.0) - c)
}

/// Principal-value integral II₂(c).
///
/// The integrand has a simple pole with coefficient u''(y_c)/u'(y_c)²
/// (the double pole cancels because the numerator vanishes at y_c); the
/// pole is split off and treated in closed form while the bounded rest is
/// integrated on panels graded at y_c. Away from the pole the integrand is
/// evaluated through averaged slopes so no 0/0 is ever formed.
pub fn compute_ii2(p: &ShearProfile, c: f64) -> Result<f64> {
    let yc = p.inverse(c)?;
    let coeff = p.d2u(yc) / (p.du(yc) * p.du(yc));
    let f = |y: f64| -> f64 {
        let w = y - yc;
        let m = p.mean_du(yc, y);
        p.mean_d2u(yc, y) / (w * m * m)
    };
    match pv_integral(&f, coeff, p, c, (0.0, 1.0)) {
        Err(Error::PoleAtEndpoint { c, .. }) => Err(Error::EndpointLayer { yc: c }),
        other => other,
    }
}

/// II₃(c) from a solved column, in the factored bounded form
///
/// ```text
/// (1/φ₁² - 1)/(u-c)² = -α²·𝒯(φ₁)·(φ₁+1) / (φ₁²·m(y)²),
/// ```
///
/// where m is the averaged slope, so the integrand is regular at y_c and the
/// column's graded mesh integrates it to near machine accuracy.
pub fn compute_ii3(col: &Phi1Column) -> f64 {
    let a2 = col.alpha * col.alpha;
    let vals: Vec<f64> = (0..col.phi1.len())
        .map(|i| {
            let phi1 = col.phi1[i];
            let m = col.slope[i];
            -a2 * col.tfac[i] * (phi1 + 1.0) / (phi1 * phi1 * m * m)
        })
        .collect();
    col.mesh().integrate(&vals)
}

/// A(c), B(c) for a single interior node.
pub fn compute_ab(p: &ShearProfile, c: f64, ii2: f64, ii3: f64) -> Result<(f64, f64)> {
    let yc = p.inverse(c)?;
    let duc = p.du(yc);
    let r = rho(p, c);
    let a = p.u(0.0) - p.u(1.0) - r * ii2 + duc * r * ii3;
    let b = std::f64::consts::PI * r * p.d2u(yc) / (duc * duc);
    Ok((a, b))
}

/// Default threshold on A² + B² below which a node counts as an embedded
/// eigenvalue: a heuristic fraction of the squared shear range.
pub fn default_embedding_tol(p: &ShearProfile) -> f64 {
    let span = p.u(1.0) - p.u(0.0);
    1e-6 * span * span
}

/// Flag the nodes where A² + B² < tol².
pub fn embedding_scan(a: &[f64], b: &[f64], tol: f64) -> Vec<bool> {
    a.iter()
        .zip(b)
        .map(|(&av, &bv)| av * av + bv * bv < tol * tol)
        .collect()
}

/// The spectral functions on the image c-grid of a Rayleigh field, plus the
/// discrete-spectrum count and (when applicable) the embedding threshold.
#[derive(Debug, Clone)]
pub struct SpectralData {
    /// Modulus of the wavenumber.
    pub alpha: f64,
    /// Image c-grid c_k = u(y_k) (endpoints included).
    pub cgrid: Vec<f64>,
    /// ρ(c) at every node; exactly zero at the ends.
    pub rho: Vec<f64>,
    /// II₂ at interior nodes (NaN at the exact endpoints, where only ρ·II₂
    /// — which vanishes — is meaningful).
    pub ii2: Vec<f64>,
    /// II₃ at interior nodes (NaN at the exact endpoints).
    pub ii3: Vec<f64>,
    /// A(c) at every node; endpoints hold u(0) - u(1) exactly.
    pub a: Vec<f64>,
    /// B(c) at every node; endpoints hold 0.
    pub b: Vec<f64>,
    /// Nodes where A² + B² falls below the embedding threshold.
    pub embedding_flags: Vec<bool>,
    /// Number of discrete eigenvalues by the argument principle.
    pub winding: i64,
    /// Variational threshold α_max², when the profile has inflection points
    /// and the minimal eigenvalue is negative.
    pub alpha_max_sq: Option<f64>,
}

impl SpectralData {
    /// Assemble every spectral quantity for the field's wavenumber.
    pub fn assemble(p: &ShearProfile, field: &RayleighField) -> Result<SpectralData> {
        let ny = field.ny();
        let cgrid = field.cgrid.clone();
        let rho_v: Vec<f64> = cgrid.iter().map(|&c| rho(p, c)).collect();
        let interior: Vec<(f64, f64)> = (1..ny - 1)
            .into_par_iter()
            .map(|k| -> Result<(f64, f64)> {
                let ii2 = compute_ii2(p, cgrid[k])?;
                let ii3 = compute_ii3(field.column(k));
                Ok((ii2, ii3))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut ii2 = vec![f64::NAN; ny];
        let mut ii3 = vec![f64::NAN; ny];
        let mut a = vec![0.0; ny];
        let mut b = vec![0.0; ny];
        a[0] = p.u(0.0) - p.u(1.0);
        a[ny - 1] = a[0];
        for k in 1..ny - 1 {
            let (v2, v3) = interior[k - 1];
            ii2[k] = v2;
            ii3[k] = v3;
            let (av, bv) = compute_ab(p, cgrid[k], v2, v3)?;
            a[k] = av;
            b[k] = bv;
        }
        let embedding_flags = embedding_scan(&a, &b, default_embedding_tol(p));
        let winding = winding_number(p, field.alpha, None, None)?;
        let alpha_max_sq = match alpha_max(p, 129) {
            Ok(v) => v,
            Err(Error::NotApplicable(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(SpectralData {
            alpha: field.alpha,
            cgrid,
            rho: rho_v,
            ii2,
            ii3,
            a,
            b,
            embedding_flags,
            winding,
            alpha_max_sq,
        })
    }
}

/// Continuation of u''(y)/(u(y) - u(y*)) across an inflection point y*,
/// evaluated through averaged derivatives; the value at y = y* is the limit
/// u'''(y*)/u'(y*).
pub fn inflection_potential(p: &ShearProfile, ystar: f64, y: f64) -> f64 {
    p.mean_d3u(ystar, y) / p.mean_du(ystar, y)
}

/// Number of eigenvalues of the symmetric tridiagonal matrix strictly below
/// sigma, by the Sturm sequence of its shifted LDLᵀ factorization.
fn sturm_count(diag: &[f64], off: f64, sigma: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0_f64;
    let tiny = 1e-300;
    for (i, &a) in diag.iter().enumerate() {
        d = if i == 0 {
            a - sigma
        } else {
            (a - sigma) - off * off / d
        };
        if d == 0.0 {
            d = tiny;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest eigenvalue of the Dirichlet difference operator -D² - diag(v)
/// on the interior of a uniform ny-grid, by Sturm bisection.
fn smallest_eigenvalue(v: &[f64], h: f64) -> f64 {
    let inv_h2 = 1.0 / (h * h);
    let diag: Vec<f64> = v.iter().map(|&vi| 2.0 * inv_h2 - vi).collect();
    let off = -inv_h2;
    let mut lo = diag.iter().cloned().fold(f64::INFINITY, f64::min) - 2.0 * inv_h2;
    let mut hi = diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 2.0 * inv_h2;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sturm_count(&diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-13 * (1.0 + hi.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn alpha_max_at(p: &ShearProfile, ny: usize, inflections: &[f64]) -> Option<f64> {
    let h = 1.0 / (ny - 1) as f64;
    let mut min_lambda = f64::INFINITY;
    for &ystar in inflections {
        let v: Vec<f64> = (1..ny - 1)
            .map(|i| inflection_potential(p, ystar, i as f64 * h))
            .collect();
        min_lambda = min_lambda.min(smallest_eigenvalue(&v, h));
    }
    if min_lambda >= 0.0 {
        None
    } else {
        Some(-min_lambda)
    }
}

/// Variational threshold α_max² = -min over inflection points y* of the
/// smallest Dirichlet eigenvalue of -d²/dy² - u''/(u - u(y*)).
///
/// Computed on `ny` nodes and on the doubled grid; the two levels must agree
/// to 1% before the finer value is returned. `Ok(None)` means every
/// eigenvalue is nonnegative (no embedded eigenvalues at any wavenumber);
/// profiles without curvature are rejected as not applicable.
pub fn alpha_max(p: &ShearProfile, ny: usize) -> Result<Option<f64>> {
    let inflections = match p.inflection_points(1e-9) {
        InflectionPoints::Degenerate => {
            return Err(Error::NotApplicable(
                "profile has no curvature; every wavenumber is embedding-free".into(),
            ))
        }
        InflectionPoints::Points(v) => v,
    };
    if inflections.is_empty() {
        return Ok(None);
    }
    let coarse = alpha_max_at(p, ny, &inflections);
    let fine = alpha_max_at(p, 2 * ny - 1, &inflections);
    match (coarse, fine) {
        (None, None) => Ok(None),
        (Some(a), Some(b)) => {
            let rel = (a - b).abs() / b.abs().max(1e-300);
            if rel > 0.01 {
                return Err(Error::NoConvergence {
                    residual: rel,
                    terms: 2 * ny - 1,
                });
            }
            Ok(Some(b))
        }
        // A sign flip under refinement means the threshold is too close to
        // zero to resolve; treat as non-converged.
        (a, b) => Err(Error::NoConvergence {
            residual: a.or(b).unwrap_or(0.0),
            terms: 2 * ny - 1,
        }),
    }
}

fn dist_to_segment(c: Complex64, lo: f64, hi: f64) -> f64 {
    let re = c.re.clamp(lo, hi);
    ((c.re - re) * (c.re - re) + c.im * c.im).sqrt()
}

/// Wronskian determinant of the one-sided Rayleigh solutions, equal to the
/// value at y = 1 of the solution of
///
/// ```text
/// φ'' = α²φ + (u''/(u - c))·φ,   φ(0) = 0, φ'(0) = 1,
/// ```
///
/// for complex c off the shear range. Vanishes exactly at the discrete
/// eigenvalues of the mode operator.
pub fn wronskian(p: &ShearProfile, alpha: f64, c: Complex64) -> Result<Complex64> {
    let (u0, u1) = (p.u(0.0), p.u(1.0));
    let dist = dist_to_segment(c, u0, u1);
    if dist <= 1e-8 {
        return Err(Error::TooCloseToSpectrum {
            re: c.re,
            im: c.im,
            dist,
        });
    }
    let a2 = alpha * alpha;
    let rhs = |y: f64, v: &State2| -> State2 {
        let pot = Complex64::new(p.d2u(y), 0.0) / (Complex64::new(p.u(y), 0.0) - c);
        [v[1], v[0] * (pot + a2)]
    };
    let v0 = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
    let vf = ode::integrate(&rhs, 0.0, 1.0, v0, 1e-10, 1e-13)?;
    Ok(vf[0])
}

/// Total argument change around a closed path of nonzero values, returned as
/// (turns, largest single step in radians, smallest modulus seen).
pub fn winding_of_path(values: &[Complex64]) -> (f64, f64, f64) {
    let n = values.len();
    let mut total = 0.0;
    let mut max_step = 0.0_f64;
    let mut min_abs = f64::INFINITY;
    for j in 0..n {
        let v = values[j];
        let w = values[(j + 1) % n];
        let step = (w * v.conj()).arg();
        total += step;
        max_step = max_step.max(step.abs());
        min_abs = min_abs.min(v.norm());
    }
    (total / (2.0 * std::f64::consts::PI), max_step, min_abs)
}

fn stadium_points(u0: f64, u1: f64, eps1: f64, n: usize) -> Vec<Complex64> {
    let span = u1 - u0;
    let total = 2.0 * span + 2.0 * std::f64::consts::PI * eps1;
    let n_edge = ((n as f64 * span / total).ceil() as usize).max(8);
    let n_cap = ((n as f64 * std::f64::consts::PI * eps1 / total).ceil() as usize).max(8);
    let mut pts = Vec::with_capacity(2 * n_edge + 2 * n_cap);
    // Bottom edge left → right, right cap, top edge right → left, left cap:
    // counterclockwise around the segment.
    for j in 0..n_edge {
        let t = j as f64 / n_edge as f64;
        pts.push(Complex64::new(u0 + t * span, -eps1));
    }
    for j in 0..n_cap {
        let th = -0.5 * std::f64::consts::PI + std::f64::consts::PI * j as f64 / n_cap as f64;
        pts.push(Complex64::new(u1 + eps1 * th.cos(), eps1 * th.sin()));
    }
    for j in 0..n_edge {
        let t = j as f64 / n_edge as f64;
        pts.push(Complex64::new(u1 - t * span, eps1));
    }
    for j in 0..n_cap {
        let th = 0.5 * std::f64::consts::PI + std::f64::consts::PI * j as f64 / n_cap as f64;
        pts.push(Complex64::new(u0 + eps1 * th.cos(), eps1 * th.sin()));
    }
    pts
}

fn path_winding_of(p: &ShearProfile, alpha: f64, pts: &[Complex64]) -> Result<(f64, f64, f64)> {
    let vals: Vec<Complex64> = pts
        .par_iter()
        .map(|&c| wronskian(p, alpha, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(winding_of_path(&vals))
}

/// Count of discrete eigenvalues outside the shear range: argument change
/// of the Wronskian around a large circle minus around a thin stadium
/// enclosing [u(0), u(1)], divided by 2π.
///
/// Both contours are refined by doubling until every argument step is below
/// π/4; a Wronskian modulus at or below 1e-8 on either contour aborts with
/// `ContourThroughZero` (an eigenvalue sits on or near the contour).
pub fn winding_number(
    p: &ShearProfile,
    alpha: f64,
    radius: Option<f64>,
    eps1: Option<f64>,
) -> Result<i64> {
    let (u0, u1) = (p.u(0.0), p.u(1.0));
    let r = radius.unwrap_or(2.0 * u0.abs().max(u1.abs()) + 2.0);
    let e1 = eps1.unwrap_or(0.05 * (u1 - u0));
    let mut n = 2048usize;
    loop {
        let circle: Vec<Complex64> = (0..n)
            .map(|j| {
                let th = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                Complex64::new(r * th.cos(), r * th.sin())
            })
            .collect();
        let stadium = stadium_points(u0, u1, e1, n);
        let (turns_c, step_c, min_c) = path_winding_of(p, alpha, &circle)?;
        let (turns_s, step_s, min_s) = path_winding_of(p, alpha, &stadium)?;
        let min_abs = min_c.min(min_s);
        if min_abs <= 1e-8 {
            return Err(Error::ContourThroughZero { min_abs });
        }
        if step_c.max(step_s) < std::f64::consts::FRAC_PI_4 {
            return Ok((turns_c - turns_s).round() as i64);
        }
        n *= 2;
        if n > (1 << 15) {
            return Err(Error::NoConvergence {
                residual: step_c.max(step_s),
                terms: n,
            });
        }
    }
}

/// Limiting-absorption boundary value: ρ(c_ε)·∫₀¹ φ(y, c_ε)⁻² dy at
/// c_ε = c + iε, extrapolated over the given ε ladder to ε → 0⁺.
///
/// The integral is never formed directly: with varphi the (0,1)-shooting
/// solution and φ normalized by φ(ỹ) = u(ỹ) - c_ε, φ'(ỹ) = u'(ỹ) at
/// ỹ = u⁻¹(Re c_ε), the constant Wronskian gives
///
/// ```text
/// ∫₀¹ φ⁻² dy = varphi(1) / (φ(0)·φ(1)),
/// ```
///
/// so only three regular complex ODE solves per ε are needed. The limit
/// equals (A(c) - iB(c))/u'(y_c).
pub fn limiting_absorption(p: &ShearProfile, alpha: f64, c: f64, eps: &[f64]) -> Result<Complex64> {
    assert!(eps.len() >= 2);
    let yc = p.inverse(c)?;
    let a2 = alpha * alpha;
    let (u0, u1) = (p.u(0.0), p.u(1.0));
    let mut vals = Vec::with_capacity(eps.len());
    for &e in eps {
        let ce = Complex64::new(c, e);
        let rhs = |y: f64, v: &State2| -> State2 {
            let pot = Complex64::new(p.d2u(y), 0.0) / (Complex64::new(p.u(y), 0.0) - ce);
            [v[1], v[0] * a2 + v[0] * pot]
        };
        let v0 = [
            Complex64::new(p.u(yc), 0.0) - ce,
            Complex64::new(p.du(yc), 0.0),
        ];
        let phi0 = ode::integrate(&rhs, yc, 0.0, v0, 1e-11, 1e-14)?[0];
        let phi1 = ode::integrate(&rhs, yc, 1.0, v0, 1e-11, 1e-14)?[0];
        let varphi1 = wronskian(p, alpha, ce)?;
        let rho_c = (ce - u0) * (u1 - ce);
        vals.push(rho_c * varphi1 / (phi0 * phi1));
    }
    // Complex Neville extrapolation of the ε ladder to zero.
    let mut t = vals;
    let n = t.len();
    for j in 1..n {
        for i in 0..n - j {
            let (xi, xj) = (eps[i], eps[i + j]);
            t[i] = (t[i + 1] * xi - t[i] * xj) / (xi - xj);
        }
    }
    Ok(t[0])
}
