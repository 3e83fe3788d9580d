//! Mode evolution from the continuous-spectrum representation.
//!
//! With the Rayleigh kernels Γ₀, Γ₁ and the spectral functions A, B in hand,
//! the evolution of one streamwise mode is an explicit integral over the
//! range of the background flow. The initial vorticity enters through two
//! boundary coefficients of the resolvent,
//!
//! ```text
//! Ĉ(c) = π ω̂₀(y_c) / u'(y_c),        D̂(c) = u'(y_c) · II₁(c),
//!
//! II₁(c) = p.v. ∫₀¹ [ ∫_{y_c}^{y} ω̂₀(y') φ₁(y',c) dy' ] / φ(y,c)² dy,
//! ```
//!
//! which combine with the spectral density into
//!
//! ```text
//! μ(c)  = (A Ĉ + B D̂) / (A² + B²),
//! μ±(c) = (ρ/α) (i D̂ ∓ Ĉ) / (A ∓ iB),        μ₋ - μ₊ = (2/α) ρ μ.
//! ```
//!
//! The stream function and the unwound vorticity Ŵ(t,y) = e^{iαt u(y)} ω̂(t,y)
//! are then oscillatory c-integrals sharing the single density ρμΓ:
//!
//! ```text
//! ψ̂(t,y) = (1/π) ∫ ρ(c) μ(c) Γ(y,c) e^{-iαct} dc,
//! Ŵ(t,y) = ω̂₀(y) - (u''(y)/π) ∫ (e^{iαt(u(y)-c)} - 1) ρμΓ / (u(y)-c) dc,
//! ```
//!
//! with Γ the branch matching the sign of u(y) - c. Both integrals are
//! computed on one fixed partition of [u(0), u(1)] per row y: breakpoints at
//! every image node u(y_k), dyadically graded toward the kink of Γ(y,·) at
//! c = u(y), with the density tabulated once per row. Only the closed-form
//! panel moments depend on t, so the cost of a time sample is independent of
//! t and the quadrature error is uniform in the frequency αt. On top of the
//! per-mode fields sit velocities, Parseval norms, decay-rate fits, and the
//! long-time vorticity profile.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::profile::ShearProfile;
use crate::quadrature::{filon_panel, int_expfrac, int_expm1, pv_integral};
use crate::rayleigh::{default_max_terms, solve_phi1, RayleighField, DEFAULT_TOL};
use crate::spectrum::{default_embedding_tol, rho, SpectralData};

// ---------------------------------------------------------------------------
// Initial data
// ---------------------------------------------------------------------------

/// Initial vorticity of a single streamwise mode, sampled with two
/// derivatives on the uniform y-grid.
///
/// The derivative samples travel with the data (rather than being recomputed
/// by differences) because the c-regularity of the spectral coefficient μ —
/// and with it the resolution the c-grid needs — is inherited from the
/// y-regularity of ω̂₀.
#[derive(Debug, Clone)]
pub struct ModeInitial {
    /// Signed wavenumber (never zero: the x-mean is carried by α = 0, which
    /// does not move and is excluded throughout).
    pub alpha: f64,
    /// ω̂₀ at the grid nodes.
    pub omega0: Vec<Complex64>,
    /// ∂_y ω̂₀ at the grid nodes.
    pub domega0: Vec<Complex64>,
    /// ∂_y² ω̂₀ at the grid nodes.
    pub d2omega0: Vec<Complex64>,
}

impl ModeInitial {
    /// Sample an analytic shape and its derivatives.
    pub fn from_fn(
        alpha: f64,
        ygrid: &[f64],
        f: impl Fn(f64) -> Complex64,
        df: impl Fn(f64) -> Complex64,
        d2f: impl Fn(f64) -> Complex64,
    ) -> ModeInitial {
        assert!(alpha != 0.0, "the alpha = 0 mode is excluded");
        ModeInitial {
            alpha,
            omega0: ygrid.iter().map(|&y| f(y)).collect(),
            domega0: ygrid.iter().map(|&y| df(y)).collect(),
            d2omega0: ygrid.iter().map(|&y| d2f(y)).collect(),
        }
    }

    /// The zero mode on an n-node grid.
    pub fn zero(alpha: f64, n: usize) -> ModeInitial {
        ModeInitial {
            alpha,
            omega0: vec![Complex64::zero(); n],
            domega0: vec![Complex64::zero(); n],
            d2omega0: vec![Complex64::zero(); n],
        }
    }

    /// ‖ω̂₀‖_{L²(y)} for grid step h.
    pub fn norm_l2(&self, h: f64) -> f64 {
        simpson_norm2(&self.omega0, h).sqrt()
    }

    /// ‖ω̂₀‖_{H¹} = (‖ω̂₀‖² + ‖∂_yω̂₀‖²)^{1/2} from the stored samples.
    pub fn norm_h1(&self, h: f64) -> f64 {
        (simpson_norm2(&self.omega0, h) + simpson_norm2(&self.domega0, h)).sqrt()
    }

    /// ‖ω̂₀‖_{H²} from the stored samples.
    pub fn norm_h2(&self, h: f64) -> f64 {
        (simpson_norm2(&self.omega0, h)
            + simpson_norm2(&self.domega0, h)
            + simpson_norm2(&self.d2omega0, h))
        .sqrt()
    }

    /// Largest deviation of the stored first derivative from the centered
    /// O(h²) difference of `omega0` (a cheap consistency certificate).
    pub fn fd_consistency(&self, h: f64) -> f64 {
        let n = self.omega0.len();
        let mut worst = 0.0_f64;
        for i in 1..n - 1 {
            let fd = (self.omega0[i + 1] - self.omega0[i - 1]) * (0.5 / h);
            worst = worst.max((fd - self.domega0[i]).norm());
        }
        worst
    }
}

/// A family of modes with a common grid, plus the aggregation convention
/// ‖f‖²_{H⁻¹ₓ Z} = Σ_α |α|⁻² ‖f̂(α,·)‖²_Z used for initial-data sizes.
#[derive(Debug, Clone)]
pub struct InitialData {
    /// Uniform y-grid shared by all modes.
    pub ygrid: Vec<f64>,
    /// The listed modes (each α appears at most once).
    pub modes: Vec<ModeInitial>,
}

impl InitialData {
    /// Aggregate (H⁻¹ₓL², H⁻¹ₓH¹, H⁻¹ₓH²) norms over the listed modes.
    pub fn hminus1_norms(&self) -> (f64, f64, f64) {
        let h = uniform_step(&self.ygrid);
        let mut l2 = 0.0;
        let mut h1 = 0.0;
        let mut h2 = 0.0;
        for m in &self.modes {
            let w = 1.0 / (m.alpha * m.alpha);
            l2 += w * m.norm_l2(h).powi(2);
            h1 += w * m.norm_h1(h).powi(2);
            h2 += w * m.norm_h2(h).powi(2);
        }
        (l2.sqrt(), h1.sqrt(), h2.sqrt())
    }
}

// ---------------------------------------------------------------------------
// II₁ and the spectral coefficient μ
// ---------------------------------------------------------------------------

/// The inner-integral principal value
///
/// ```text
/// II₁(c) = p.v. ∫₀¹ N(y) / φ(y,c)² dy,    N(y) = ∫_{y_c}^{y} ω̂₀ φ₁ dy',
/// ```
///
/// computed by subtracting the simple-pole model
/// `ω̂₀(y_c) u'(y) / (u'(y_c)² (u(y) - c))` — the residue left by
/// N ~ ω̂₀(y_c)(y - y_c) against φ² ~ u'(y_c)²(y - y_c)² — whose own
/// principal value is a logarithm in closed form. The remainder is bounded
/// and evaluated through the factored forms (y - y_c), mean slope, and φ₁,
/// so no cancellation is left near the critical layer.
pub fn compute_ii1(
    p: &ShearProfile,
    field: &RayleighField,
    omega0: &dyn Fn(f64) -> Complex64,
    c: f64,
) -> Result<Complex64> {
    let span = p.span();
    // Reuse the tabulated column when c is an image node; solve otherwise.
    let k = field
        .cgrid
        .iter()
        .position(|&ck| (ck - c).abs() <= 1e-13 * span);
    let fresh;
    let col = match k {
        Some(k) if k > 0 && k + 1 < field.ny() => field.column(k),
        _ => {
            fresh = solve_phi1(
                p,
                field.alpha,
                c,
                DEFAULT_TOL,
                default_max_terms(field.alpha),
            )?;
            &fresh
        }
    };
    let yc = p.inverse(c)?;
    let duc = p.du(yc);
    let mesh = col.mesh();
    let vals: Vec<Complex64> = mesh
        .nodes()
        .iter()
        .zip(col.phi1.iter())
        .map(|(&y, &p1)| omega0(y) * p1)
        .collect();
    let inner = mesh.cumulative(&vals, col.anchor());
    let f = |y: f64| -> Complex64 {
        let w = y - yc;
        let m = p.mean_du(yc, y);
        let p1 = col.phi1_at(y);
        let n = mesh.interp(&inner, y);
        n * (1.0 / (w * m * p1).powi(2))
    };
    let coeff = omega0(yc) * (1.0 / (duc * duc));
    pv_integral(&f, coeff, p, c, (0.0, 1.0)).map_err(|e| match e {
        Error::PoleAtEndpoint { .. } => Error::EndpointLayer { yc },
        other => other,
    })
}

/// μ, μ₊, μ₋ on the image c-grid from the spectral data and the
/// boundary coefficients of the initial datum.
///
/// The factor ρ common to the numerator pair is cancelled analytically, so
///
/// ```text
/// μ  = (A Ĉ + B D̂) / (A² + B²),
/// μ± = (ρ/α) (i D̂ ∓ Ĉ) / (A ∓ iB),
/// ```
///
/// with Ĉ = π ω̂₀(y_c)/u'(y_c) and D̂ = u'(y_c) II₁(c); μ stays finite at the
/// endpoints, where B = 0 kills the D̂ term (the `ii1` entries there are
/// ignored), and μ± vanish with ρ. The definitional identity
/// μ₋ - μ₊ = (2/α) ρ μ is asserted at every node to 1e-10.
pub fn compute_mu(
    p: &ShearProfile,
    alpha: f64,
    sd: &SpectralData,
    ii1: &[Complex64],
    omega0: &[Complex64],
) -> Result<(Vec<Complex64>, Vec<Complex64>, Vec<Complex64>)> {
    let ny = sd.cgrid.len();
    assert_eq!(ii1.len(), ny);
    assert_eq!(omega0.len(), ny);
    assert!(alpha != 0.0);
    let tol = default_embedding_tol(p);
    let mut mu = Vec::with_capacity(ny);
    let mut mu_plus = Vec::with_capacity(ny);
    let mut mu_minus = Vec::with_capacity(ny);
    for k in 0..ny {
        let (a, b) = (sd.a[k], sd.b[k]);
        let ab2 = a * a + b * b;
        if ab2 < tol * tol {
            return Err(Error::EmbeddingEigenvalue {
                c: sd.cgrid[k],
                ab2,
            });
        }
        let y = k as f64 / (ny - 1) as f64;
        let du = p.du(y);
        let chat = omega0[k] * (PI / du);
        let dhat = if k == 0 || k == ny - 1 {
            Complex64::zero()
        } else {
            ii1[k] * du
        };
        mu.push((chat * a + dhat * b) * (1.0 / ab2));
        let r = sd.rho[k] / alpha;
        let i = Complex64::i();
        mu_plus.push((i * dhat - chat) / Complex64::new(a, -b) * r);
        mu_minus.push((i * dhat + chat) / Complex64::new(a, b) * r);
    }
    let mut scale = 1.0_f64;
    let mut defect = 0.0_f64;
    for k in 0..ny {
        scale = scale.max(mu_plus[k].norm()).max(mu_minus[k].norm());
        let gap = mu_minus[k] - mu_plus[k] - mu[k] * (2.0 / alpha * sd.rho[k]);
        defect = defect.max(gap.norm());
    }
    assert!(
        defect <= 1e-10 * scale,
        "jump identity violated: defect {defect:.3e} at scale {scale:.3e}"
    );
    Ok((mu, mu_plus, mu_minus))
}

// ---------------------------------------------------------------------------
// The per-mode evolution engine
// ---------------------------------------------------------------------------

/// One row's fixed c-partition: breakpoints covering [u(0), u(1)] with the
/// density g = ρμΓ(y_i, ·) tabulated at every break, and θ = u(y_i) - c
/// alongside. The breaks are the image nodes plus an 8-level dyadic
/// refinement of the two gaps adjacent to the kink at c = u(y_i).
#[derive(Debug, Clone)]
struct CLine {
    breaks: Vec<f64>,
    theta: Vec<f64>,
    g: Vec<Complex64>,
}

/// Everything needed to evaluate one mode at arbitrary times: the spectral
/// coefficients and the tabulated row densities. Construction does all the
/// c-independent work; each time sample then costs one sweep of closed-form
/// panel moments per row.
pub struct ModeContext<'a> {
    profile: &'a ShearProfile,
    field: &'a RayleighField,
    /// Signed wavenumber of the mode.
    pub alpha: f64,
    /// ω̂₀ at the grid nodes.
    pub omega0: Vec<Complex64>,
    /// μ on the image c-grid.
    pub mu: Vec<Complex64>,
    /// μ₊ on the image c-grid.
    pub mu_plus: Vec<Complex64>,
    /// μ₋ on the image c-grid.
    pub mu_minus: Vec<Complex64>,
    /// max_k |ρ(c_k) μ(c_k)| — the bounded-density certificate.
    pub max_rho_mu: f64,
    d2u: Vec<f64>,
    levels: i32,
    lines: Vec<CLine>,
}

impl<'a> ModeContext<'a> {
    /// Assemble the spectral coefficients and row densities of one mode,
    /// with the default dyadic grading depth near each kink.
    pub fn new(
        p: &'a ShearProfile,
        field: &'a RayleighField,
        sd: &SpectralData,
        init: &ModeInitial,
    ) -> Result<ModeContext<'a>> {
        ModeContext::with_levels(p, field, sd, init, 8)
    }

    /// Same as [`ModeContext::new`] with an explicit dyadic grading depth
    /// (number of geometrically shrinking panels inserted on each side of
    /// the critical node).
    pub fn with_levels(
        p: &'a ShearProfile,
        field: &'a RayleighField,
        sd: &SpectralData,
        init: &ModeInitial,
        levels: i32,
    ) -> Result<ModeContext<'a>> {
        assert!((2..=20).contains(&levels), "grading depth out of range");
        assert!(
            (init.alpha.abs() - field.alpha).abs() <= 1e-12 * (1.0 + field.alpha),
            "initial datum and Rayleigh field wavenumbers disagree"
        );
        let ny = field.ny();
        assert_eq!(init.omega0.len(), ny);
        let ygrid = &field.ygrid;
        let interp = |y: f64| lagrange_window(ygrid, &init.omega0, y, 4);
        let interior: Vec<Complex64> = (1..ny - 1)
            .into_par_iter()
            .map(|k| compute_ii1(p, field, &interp, field.cgrid[k]))
            .collect::<Result<Vec<_>>>()?;
        let mut ii1 = vec![Complex64::zero(); ny];
        ii1[1..ny - 1].copy_from_slice(&interior);
        let (mu, mu_plus, mu_minus) = compute_mu(p, init.alpha, sd, &ii1, &init.omega0)?;
        let rho_mu: Vec<Complex64> = sd.rho.iter().zip(&mu).map(|(&r, &m)| m * r).collect();
        let max_rho_mu = rho_mu.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(max_rho_mu.is_finite());
        let d2u: Vec<f64> = ygrid.iter().map(|&y| p.d2u(y)).collect();
        let mut ctx = ModeContext {
            profile: p,
            field,
            alpha: init.alpha,
            omega0: init.omega0.clone(),
            mu,
            mu_plus,
            mu_minus,
            max_rho_mu,
            d2u,
            levels,
            lines: Vec::new(),
        };
        ctx.lines = (0..ny).into_par_iter().map(|i| ctx.build_line(i)).collect();
        Ok(ctx)
    }

    /// Number of y-nodes.
    pub fn ny(&self) -> usize {
        self.field.ny()
    }

    /// The shared uniform y-grid.
    pub fn ygrid(&self) -> &[f64] {
        &self.field.ygrid
    }

    /// The density g(c) = ρ(c) μ(c) Γ(y_i, c) at an arbitrary interior c.
    ///
    /// μ is interpolated from its grid values; Γ is interpolated on the
    /// branch matching the sign of u(y_i) - c after removing the kink model
    /// κ θ ln|θ|, θ = u(y_i) - c, κ = -u''(y_i)/u'(y_i)³, which is restored
    /// at the evaluation point. ρ is the exact factor, so the density
    /// vanishes identically at the endpoints rather than as 0·∞.
    pub(crate) fn g_at(&self, i: usize, c: f64) -> Complex64 {
        let ny = self.ny();
        if i == 0 || i == ny - 1 {
            return Complex64::zero();
        }
        let cgrid = &self.field.cgrid;
        let cstar = cgrid[i];
        let yi = self.field.ygrid[i];
        let dui = self.profile.du(yi);
        let kappa = -self.d2u[i] / (dui * dui * dui);
        // One-sided stencil of interior nodes on the valid branch.
        let (lo_bound, hi_bound) = if c < cstar { (1, i) } else { (i, ny - 2) };
        let j = cgrid.partition_point(|&v| v <= c).saturating_sub(1);
        let width = 4.min(hi_bound - lo_bound + 1);
        let start = j.saturating_sub(1).clamp(lo_bound, hi_bound + 1 - width);
        let mut xs = [0.0; 4];
        let mut ss = [Complex64::zero(); 4];
        for (q, k) in (start..start + width).enumerate() {
            let thk = self.profile.u(yi) - cgrid[k];
            let model = if k == i {
                0.0
            } else {
                kappa * thk * thk.abs().ln()
            };
            xs[q] = cgrid[k];
            ss[q] = Complex64::new(self.field.gamma_branch(i, k) - model, 0.0);
        }
        let smooth = lagrange(&xs[..width], &ss[..width], c);
        let th = self.profile.u(yi) - c;
        let kink = if th == 0.0 {
            0.0
        } else {
            kappa * th * th.abs().ln()
        };
        let gamma = smooth.re + kink;
        let mu_c = lagrange_window(cgrid, &self.mu, c, 4);
        mu_c * (rho(self.profile, c) * gamma)
    }

    fn build_line(&self, i: usize) -> CLine {
        let ny = self.ny();
        let cgrid = &self.field.cgrid;
        let ui = self.profile.u(self.field.ygrid[i]);
        let zero_row = i == 0 || i == ny - 1;
        let mut breaks: Vec<f64> = Vec::with_capacity(ny + 16);
        let mut g: Vec<Complex64> = Vec::with_capacity(ny + 16);
        for k in 0..ny {
            if k == i && k > 0 {
                // Graded approach to the kink from below.
                let gap = cgrid[i] - cgrid[i - 1];
                for j in 1..=self.levels {
                    let c = cgrid[i] - gap * 0.5_f64.powi(j + 1);
                    breaks.push(c);
                    g.push(if zero_row {
                        Complex64::zero()
                    } else {
                        self.g_at(i, c)
                    });
                }
            }
            breaks.push(cgrid[k]);
            g.push(if zero_row || k == 0 || k == ny - 1 {
                Complex64::zero()
            } else {
                self.mu[k] * (self.field.gamma_branch(i, k) * rho(self.profile, cgrid[k]))
            });
            if k == i && k < ny - 1 {
                // Graded retreat from the kink above.
                let gap = cgrid[i + 1] - cgrid[i];
                for j in 1..=self.levels {
                    let c = cgrid[i] + gap * 0.5_f64.powi(self.levels + 2 - j);
                    breaks.push(c);
                    g.push(if zero_row {
                        Complex64::zero()
                    } else {
                        self.g_at(i, c)
                    });
                }
            }
        }
        let theta: Vec<f64> = breaks.iter().map(|&c| ui - c).collect();
        debug_assert!(breaks.windows(2).all(|w| w[1] > w[0]));
        debug_assert!(g.iter().all(|v| v.is_finite()));
        CLine { breaks, theta, g }
    }

    /// ψ̂(t, ·) on the y-grid: (1/π) ∫ ρμΓ e^{-iαct} dc row by row, with the
    /// oscillatory panel moments in closed form (error uniform in αt).
    pub fn psi_hat(&self, t: f64) -> Vec<Complex64> {
        let lam = self.alpha * t;
        self.lines
            .par_iter()
            .map(|line| {
                let mut acc = Complex64::zero();
                for q in 0..line.breaks.len() - 1 {
                    let c0 = line.breaks[q];
                    let h = line.breaks[q + 1] - c0;
                    acc += filon_panel(c0, h, line.g[q], line.g[q + 1], lam);
                }
                acc * (1.0 / PI)
            })
            .collect()
    }

    /// Ŵ(t, ·) = ω̂₀ - (u''/π) ∫ (e^{iαtθ} - 1) ρμΓ / θ dc, θ = u(y) - c,
    /// with each panel's linear density integrated against the exact moments
    /// of (e^{iλθ} - 1)/θ and (e^{iλθ} - 1); at t = 0 every moment vanishes
    /// and Ŵ = ω̂₀ bit for bit.
    pub fn w_hat(&self, t: f64) -> Vec<Complex64> {
        let lam = self.alpha * t;
        (0..self.ny())
            .into_par_iter()
            .map(|i| {
                let coeff = self.d2u[i] / PI;
                if coeff == 0.0 {
                    return self.omega0[i];
                }
                let line = &self.lines[i];
                let mut acc = Complex64::zero();
                for q in 0..line.breaks.len() - 1 {
                    let (tha, thb) = (line.theta[q], line.theta[q + 1]);
                    let (ga, gb) = (line.g[q], line.g[q + 1]);
                    let slope = (ga - gb) * (1.0 / (tha - thb));
                    let level = ga - slope * tha;
                    acc += level * int_expfrac(lam, thb, tha) + slope * int_expm1(lam, thb, tha);
                }
                self.omega0[i] - acc * coeff
            })
            .collect()
    }

    /// Evaluate the mode on a time grid.
    pub fn assemble(&self, tgrid: &[f64]) -> ModeEvolution {
        let rows: Vec<(Vec<Complex64>, Vec<Complex64>)> = tgrid
            .par_iter()
            .map(|&t| (self.psi_hat(t), self.w_hat(t)))
            .collect();
        let mut psi = Vec::with_capacity(rows.len());
        let mut w = Vec::with_capacity(rows.len());
        let mut boundary = 0.0_f64;
        for (prow, wrow) in rows {
            boundary = boundary
                .max(prow[0].norm())
                .max(prow[prow.len() - 1].norm());
            psi.push(prow);
            w.push(wrow);
        }
        ModeEvolution {
            alpha: self.alpha,
            tgrid: tgrid.to_vec(),
            mu: self.mu.clone(),
            mu_plus: self.mu_plus.clone(),
            mu_minus: self.mu_minus.clone(),
            psi_hat: psi,
            w_hat: w,
            max_rho_mu: self.max_rho_mu,
            max_boundary_psi: boundary,
        }
    }
}

/// A mode evaluated on a time grid: spectral coefficients plus the sampled
/// fields, with the certificates collected along the way.
#[derive(Debug, Clone)]
pub struct ModeEvolution {
    /// Signed wavenumber.
    pub alpha: f64,
    /// The time samples.
    pub tgrid: Vec<f64>,
    /// μ on the image c-grid.
    pub mu: Vec<Complex64>,
    /// μ₊ on the image c-grid.
    pub mu_plus: Vec<Complex64>,
    /// μ₋ on the image c-grid.
    pub mu_minus: Vec<Complex64>,
    /// ψ̂ rows, indexed `[t][y]`.
    pub psi_hat: Vec<Vec<Complex64>>,
    /// Ŵ rows, indexed `[t][y]`.
    pub w_hat: Vec<Vec<Complex64>>,
    /// max over the c-grid of |ρμ|.
    pub max_rho_mu: f64,
    /// max over the run of |ψ̂(t, 0)|, |ψ̂(t, 1)| (the Γ anchors make the
    /// exact rows vanish; this certifies the assembled ones do too).
    pub max_boundary_psi: f64,
}

/// Convenience wrapper: context construction plus evaluation on `tgrid`.
pub fn evolve_mode(
    p: &ShearProfile,
    field: &RayleighField,
    sd: &SpectralData,
    init: &ModeInitial,
    tgrid: &[f64],
) -> Result<ModeEvolution> {
    Ok(ModeContext::new(p, field, sd, init)?.assemble(tgrid))
}

/// The default time grid {0} ∪ {1, 2, 4, …, 256}.
pub fn default_tgrid() -> Vec<f64> {
    let mut v = vec![0.0];
    let mut t = 1.0;
    while t <= 256.0 {
        v.push(t);
        t *= 2.0;
    }
    v
}

// ---------------------------------------------------------------------------
// Velocities, synthesis, norms
// ---------------------------------------------------------------------------

/// 4th-order first derivative on a uniform grid (one-sided at the edges).
pub fn ddy(vals: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = vals.len();
    assert!(n >= 5);
    let s = 1.0 / (12.0 * h);
    let mut out = Vec::with_capacity(n);
    out.push(
        (vals[0] * -25.0 + vals[1] * 48.0 - vals[2] * 36.0 + vals[3] * 16.0 - vals[4] * 3.0) * s,
    );
    out.push((vals[0] * -3.0 - vals[1] * 10.0 + vals[2] * 18.0 - vals[3] * 6.0 + vals[4]) * s);
    for i in 2..n - 2 {
        out.push((vals[i - 2] - vals[i + 2] + (vals[i + 1] - vals[i - 1]) * 8.0) * s);
    }
    out.push(
        (vals[n - 1] * 3.0 + vals[n - 2] * 10.0 - vals[n - 3] * 18.0 + vals[n - 4] * 6.0
            - vals[n - 5])
            * s,
    );
    out.push(
        (vals[n - 1] * 25.0 - vals[n - 2] * 48.0 + vals[n - 3] * 36.0 - vals[n - 4] * 16.0
            + vals[n - 5] * 3.0)
            * s,
    );
    out
}

/// Second derivative on a uniform grid: 4th-order centered where the stencil
/// fits, 2nd-order next to the edges.
pub fn d2dy2(vals: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = vals.len();
    assert!(n >= 5);
    let s2 = 1.0 / (h * h);
    let s4 = s2 / 12.0;
    let mut out = Vec::with_capacity(n);
    out.push((vals[0] * 2.0 - vals[1] * 5.0 + vals[2] * 4.0 - vals[3]) * s2);
    for i in 1..n - 1 {
        if i >= 2 && i + 2 < n {
            out.push(
                ((vals[i - 1] + vals[i + 1]) * 16.0 - vals[i] * 30.0 - vals[i - 2] - vals[i + 2])
                    * s4,
            );
        } else {
            out.push((vals[i - 1] - vals[i] * 2.0 + vals[i + 1]) * s2);
        }
    }
    out.push((vals[n - 1] * 2.0 - vals[n - 2] * 5.0 + vals[n - 3] * 4.0 - vals[n - 4]) * s2);
    out
}

/// Physical velocity fields on the x × y grid from the listed stream modes,
/// with the convention f(x,y) = Σ_α f̂(α,y) e^{iαx}, x_j = 2πj/nx:
/// V̂¹ = ∂_y ψ̂ (4th-order differences), V̂² = -iα ψ̂.
pub fn velocity(
    ygrid: &[f64],
    modes: &[(f64, Vec<Complex64>)],
    nx: usize,
) -> (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
    let h = uniform_step(ygrid);
    let v1modes: Vec<(f64, Vec<Complex64>)> =
        modes.iter().map(|(a, psi)| (*a, ddy(psi, h))).collect();
    let v2modes: Vec<(f64, Vec<Complex64>)> = modes
        .iter()
        .map(|(a, psi)| {
            let factor = Complex64::new(0.0, -a);
            (*a, psi.iter().map(|&v| v * factor).collect())
        })
        .collect();
    (synthesize(&v1modes, nx), synthesize(&v2modes, nx))
}

/// Inverse Fourier sum over the listed modes on x_j = 2πj/nx; rows are
/// indexed `[jx][iy]`.
pub fn synthesize(modes: &[(f64, Vec<Complex64>)], nx: usize) -> Vec<Vec<Complex64>> {
    assert!(nx >= 1);
    let ny = modes.first().map_or(0, |(_, v)| v.len());
    (0..nx)
        .map(|jx| {
            let x = 2.0 * PI * jx as f64 / nx as f64;
            let mut row = vec![Complex64::zero(); ny];
            for (a, vals) in modes {
                let phase = Complex64::new(0.0, a * x).exp();
                for (r, &v) in row.iter_mut().zip(vals) {
                    *r += v * phase;
                }
            }
            row
        })
        .collect()
}

/// (‖V‖_{L²}, ‖V²‖_{L²}) of the full velocity field by Parseval:
/// ‖f‖² = 2π Σ_α ‖f̂(α,·)‖²_{L²(y)} with ‖V‖² = ‖V¹‖² + ‖V²‖².
pub fn velocity_norms(ygrid: &[f64], modes: &[(f64, Vec<Complex64>)]) -> (f64, f64) {
    let h = uniform_step(ygrid);
    let mut v2 = 0.0;
    let mut v = 0.0;
    for (a, psi) in modes {
        let dpsi = ddy(psi, h);
        let p2 = simpson_norm2(psi, h);
        v2 += a * a * p2;
        v += simpson_norm2(&dpsi, h) + a * a * p2;
    }
    ((2.0 * PI * v).sqrt(), (2.0 * PI * v2).sqrt())
}

/// ‖f‖_{L²(y)} of one complex row on a uniform grid (composite Simpson).
pub fn l2y(vals: &[Complex64], h: f64) -> f64 {
    simpson_norm2(vals, h).sqrt()
}

/// ‖ρ(u(y)) ∂_y² f‖_{L²(y)}: the weighted curvature diagnostic. The weight
/// vanishes at the walls, so the boundary rows are exact zeros and only
/// interior differences enter.
pub fn weighted_d2_norm(p: &ShearProfile, ygrid: &[f64], vals: &[Complex64]) -> f64 {
    let h = uniform_step(ygrid);
    let d2 = d2dy2(vals, h);
    let n = vals.len();
    let weighted: Vec<Complex64> = (0..n)
        .map(|i| {
            if i == 0 || i == n - 1 {
                Complex64::zero()
            } else {
                d2[i] * rho(p, p.u(ygrid[i]))
            }
        })
        .collect();
    l2y(&weighted, h)
}

// ---------------------------------------------------------------------------
// Decay fits
// ---------------------------------------------------------------------------

/// Least-squares decay exponents and sup-constants of a norm history.
#[derive(Debug, Clone, Copy)]
pub struct DecayMetrics {
    /// Fitted slope of log‖V‖ against log t over the window.
    pub slope_v: f64,
    /// Fitted slope of log‖V²‖ against log t over the window.
    pub slope_v2: f64,
    /// sup over the positive samples of t·‖V(t)‖.
    pub sup_tv: f64,
    /// sup over the positive samples of t²·‖V²(t)‖.
    pub sup_t2v2: f64,
}

/// Fit log-log slopes of ‖V(t)‖ and ‖V²(t)‖ over the samples falling in
/// `window`, requiring at least 8 of them spanning a decade; the
/// sup-constants run over every positive-time sample.
pub fn decay_metrics(
    ts: &[f64],
    vnorm: &[f64],
    v2norm: &[f64],
    window: (f64, f64),
) -> Result<DecayMetrics> {
    assert_eq!(ts.len(), vnorm.len());
    assert_eq!(ts.len(), v2norm.len());
    let idx: Vec<usize> = (0..ts.len())
        .filter(|&i| ts[i] > 0.0 && ts[i] >= window.0 && ts[i] <= window.1)
        .collect();
    let got = idx.len();
    if got < 8 {
        return Err(Error::InsufficientWindow { need: 8, got });
    }
    let tmin = idx.iter().map(|&i| ts[i]).fold(f64::INFINITY, f64::min);
    let tmax = idx.iter().map(|&i| ts[i]).fold(0.0, f64::max);
    if tmax < 10.0 * tmin {
        return Err(Error::InsufficientWindow { need: 8, got });
    }
    let slope = |ns: &[f64]| -> f64 {
        let pts: Vec<(f64, f64)> = idx
            .iter()
            .filter(|&&i| ns[i] > 0.0)
            .map(|&i| (ts[i].ln(), ns[i].ln()))
            .collect();
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    };
    let mut sup_tv = 0.0_f64;
    let mut sup_t2v2 = 0.0_f64;
    for i in 0..ts.len() {
        if ts[i] > 0.0 {
            sup_tv = sup_tv.max(ts[i] * vnorm[i]);
            sup_t2v2 = sup_t2v2.max(ts[i] * ts[i] * v2norm[i]);
        }
    }
    Ok(DecayMetrics {
        slope_v: slope(vnorm),
        slope_v2: slope(v2norm),
        sup_tv,
        sup_t2v2,
    })
}

// ---------------------------------------------------------------------------
// Scattering profile
// ---------------------------------------------------------------------------

/// Long-time vorticity profile of one mode with its Cauchy certificates.
#[derive(Debug, Clone)]
pub struct ScatteringReport {
    /// Ŵ at the last time sample, the ω̂_∞ estimate.
    pub w_infinity: Vec<Complex64>,
    /// (T, ‖Ŵ(2T) - Ŵ(T)‖_{L²}) for every dyadic pair present in the grid.
    pub residuals: Vec<(f64, f64)>,
}

/// Extract the scattering estimate and the dyadic Cauchy residuals from an
/// evaluated mode.
pub fn scattering_profile(me: &ModeEvolution, ygrid: &[f64]) -> ScatteringReport {
    let h = uniform_step(ygrid);
    let mut order: Vec<usize> = (0..me.tgrid.len()).collect();
    order.sort_by(|&a, &b| me.tgrid[a].total_cmp(&me.tgrid[b]));
    let last = *order.last().expect("time grid is nonempty");
    let mut residuals = Vec::new();
    for &i in &order {
        let t = me.tgrid[i];
        if t <= 0.0 {
            continue;
        }
        if let Some(&j) = order
            .iter()
            .find(|&&j| (me.tgrid[j] - 2.0 * t).abs() <= 1e-9 * (1.0 + 2.0 * t))
        {
            let diff: Vec<Complex64> = me.w_hat[j]
                .iter()
                .zip(&me.w_hat[i])
                .map(|(&a, &b)| a - b)
                .collect();
            residuals.push((t, l2y(&diff, h)));
        }
    }
    ScatteringReport {
        w_infinity: me.w_hat[last].clone(),
        residuals,
    }
}

/// The history construction of the same profile:
///
/// ```text
/// Ŵ(T, y) = ω̂₀(y) - iα u''(y) ∫₀^T e^{iαs u(y)} ψ̂(s, y) ds,
/// ```
///
/// integrated by composite Simpson on a step fine against the oscillation.
/// A genuinely different route to ω̂_∞ — through the ψ̂ history rather than
/// the closed moments — so agreement certifies both.
pub fn alt_scattering(ctx: &ModeContext, t_end: f64) -> Vec<Complex64> {
    let ny = ctx.ny();
    let umax = ctx
        .profile
        .u_lo()
        .abs()
        .max(ctx.profile.u_hi().abs())
        .max(1.0);
    let ds_target = 0.2 / (ctx.alpha.abs() * umax);
    let mut n = (t_end / ds_target).ceil() as usize;
    n += n % 2;
    n = n.max(2);
    let ds = t_end / n as f64;
    let rows: Vec<Vec<Complex64>> = (0..=n).map(|k| ctx.psi_hat(k as f64 * ds)).collect();
    let mut acc = vec![Complex64::zero(); ny];
    for (k, row) in rows.iter().enumerate() {
        let simpson = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let w = simpson * ds / 3.0;
        for i in 0..ny {
            let phase = Complex64::new(
                0.0,
                ctx.alpha * (k as f64 * ds) * ctx.profile.u(ctx.ygrid()[i]),
            )
            .exp();
            acc[i] += row[i] * phase * w;
        }
    }
    (0..ny)
        .map(|i| ctx.omega0[i] - Complex64::new(0.0, ctx.alpha * ctx.d2u[i]) * acc[i])
        .collect()
}

// ---------------------------------------------------------------------------
// μ diagnostics
// ---------------------------------------------------------------------------

/// Sizes of the spectral coefficient in the c-variable, with the ratios
/// against the initial datum that the representation bounds predict.
#[derive(Debug, Clone, Copy)]
pub struct MuDiagnostics {
    /// ‖μ‖_{L²(dc)}.
    pub norm_mu: f64,
    /// ‖ρμ‖_{L²(dc)}.
    pub norm_rho_mu: f64,
    /// ‖∂_c(ρμ)‖_{L²(dc)}.
    pub norm_d_rho_mu: f64,
    /// ‖ρ ∂_c²(ρμ)‖_{L²(dc)}.
    pub norm_rho_d2_rho_mu: f64,
    /// ‖ρμ‖ / ‖ω̂₀‖_{L²}.
    pub ratio_l2: f64,
    /// ‖∂_c(ρμ)‖ / ‖ω̂₀‖_{H¹}.
    pub ratio_h1: f64,
    /// ‖ρ ∂_c²(ρμ)‖ / ‖ω̂₀‖_{H²}.
    pub ratio_h2: f64,
}

/// Measure μ on the image grid. Derivatives in c ride the chain rule
/// ∂_c = (1/u'(y_c)) ∂_y on 4th-order y-differences, and the L²(dc) norms
/// carry the Jacobian: ∫ |f|² dc = ∫ |f(c(y))|² u'(y) dy.
pub fn mu_norm_diagnostics(
    p: &ShearProfile,
    ygrid: &[f64],
    mu: &[Complex64],
    init: &ModeInitial,
) -> MuDiagnostics {
    let h = uniform_step(ygrid);
    let du: Vec<f64> = ygrid.iter().map(|&y| p.du(y)).collect();
    let rho_v: Vec<f64> = ygrid.iter().map(|&y| rho(p, p.u(y))).collect();
    let rho_mu: Vec<Complex64> = mu.iter().zip(&rho_v).map(|(&m, &r)| m * r).collect();
    let dc = |vals: &[Complex64]| -> Vec<Complex64> {
        ddy(vals, h)
            .into_iter()
            .zip(&du)
            .map(|(v, &d)| v * (1.0 / d))
            .collect()
    };
    let d1 = dc(&rho_mu);
    let d2 = dc(&d1);
    let rho_d2: Vec<Complex64> = d2.iter().zip(&rho_v).map(|(&v, &r)| v * r).collect();
    let wnorm = |vals: &[Complex64]| -> f64 {
        let weighted: Vec<f64> = vals
            .iter()
            .zip(&du)
            .map(|(v, &d)| v.norm_sqr() * d)
            .collect();
        simpson_sum(&weighted, h).sqrt()
    };
    let norm_mu = wnorm(mu);
    let norm_rho_mu = wnorm(&rho_mu);
    let norm_d_rho_mu = wnorm(&d1);
    let norm_rho_d2_rho_mu = wnorm(&rho_d2);
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
    MuDiagnostics {
        norm_mu,
        norm_rho_mu,
        norm_d_rho_mu,
        norm_rho_d2_rho_mu,
        ratio_l2: ratio(norm_rho_mu, init.norm_l2(h)),
        ratio_h1: ratio(norm_d_rho_mu, init.norm_h1(h)),
        ratio_h2: ratio(norm_rho_d2_rho_mu, init.norm_h2(h)),
    }
}

// ---------------------------------------------------------------------------
// Grid helpers
// ---------------------------------------------------------------------------

fn uniform_step(grid: &[f64]) -> f64 {
    assert!(grid.len() >= 2);
    let h = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    debug_assert!(grid
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-12 * (1.0 + h)));
    h
}

/// Composite Simpson of |f|² on a uniform grid with an odd node count.
fn simpson_norm2(vals: &[Complex64], h: f64) -> f64 {
    let sq: Vec<f64> = vals.iter().map(|v| v.norm_sqr()).collect();
    simpson_sum(&sq, h)
}

fn simpson_sum(vals: &[f64], h: f64) -> f64 {
    let n = vals.len();
    assert!(n >= 3 && n % 2 == 1, "Simpson needs an odd node count");
    let mut acc = vals[0] + vals[n - 1];
    for (i, &v) in vals.iter().enumerate().take(n - 1).skip(1) {
        acc += v * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// Lagrange interpolation through the given nodes (degree xs.len() - 1).
fn lagrange(xs: &[f64], fs: &[Complex64], z: f64) -> Complex64 {
    let mut acc = Complex64::zero();
    for i in 0..xs.len() {
        let mut l = fs[i];
        for k in 0..xs.len() {
            if k != i {
                l = l * ((z - xs[k]) / (xs[i] - xs[k]));
            }
        }
        acc += l;
    }
    acc
}

/// Cubic (or lower near the edges) Lagrange interpolation on a sorted grid.
fn lagrange_window(xs: &[f64], fs: &[Complex64], z: f64, width: usize) -> Complex64 {
    let n = xs.len();
    let width = width.min(n);
    let j = xs.partition_point(|&v| v <= z).saturating_sub(1);
    let start = j.saturating_sub(1).min(n - width);
    lagrange(&xs[start..start + width], &fs[start..start + width], z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::PanelMesh;
    use crate::rayleigh::RayleighField;
    use crate::spectrum::SpectralData;

    fn csin(k: f64, y: f64) -> Complex64 {
        Complex64::new((k * PI * y).sin(), 0.0)
    }

    fn setup(p: &ShearProfile, alpha: f64, ny: usize) -> (RayleighField, SpectralData) {
        let field = RayleighField::assemble(p, alpha.abs(), ny).unwrap();
        let sd = SpectralData::assemble(p, &field).unwrap();
        (field, sd)
    }

    fn sin_mode(alpha: f64, ygrid: &[f64]) -> ModeInitial {
        ModeInitial::from_fn(
            alpha,
            ygrid,
            |y| csin(1.0, y),
            |y| Complex64::new(PI * (PI * y).cos(), 0.0),
            |y| Complex64::new(-PI * PI * (PI * y).sin(), 0.0),
        )
    }

    #[test]
    fn ii1_vanishes_for_zero_data_and_is_linear() {
        let p = ShearProfile::quadratic(0.2).unwrap();
        let field = RayleighField::assemble(&p, 1.0, 65).unwrap();
        let c = field.cgrid[30];
        let zero = compute_ii1(&p, &field, &|_| Complex64::zero(), c).unwrap();
        assert_eq!(zero, Complex64::zero());

        let f = |y: f64| csin(1.0, y);
        let g = |y: f64| Complex64::new((2.0 * PI * y).cos(), 0.1 * y);
        let (a, b) = (Complex64::new(0.3, -0.7), Complex64::new(-1.1, 0.2));
        let lhs = compute_ii1(&p, &field, &|y| f(y) * a + g(y) * b, c).unwrap();
        let rhs = compute_ii1(&p, &field, &f, c).unwrap() * a
            + compute_ii1(&p, &field, &g, c).unwrap() * b;
        assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
    }

    #[test]
    fn ii1_matches_symmetric_exclusion_on_couette() {
        let p = ShearProfile::couette();
        let field = RayleighField::assemble(&p, 1.0, 65).unwrap();
        let c = 0.5;
        let col = solve_phi1(&p, 1.0, c, DEFAULT_TOL, default_max_terms(1.0)).unwrap();
        // Independent route: N by fine Simpson of the analytic integrand,
        // then symmetric ε-exclusion with polynomial extrapolation ε → 0.
        let norm_n = |y: f64| -> f64 {
            // ∫_{1/2}^{y} sin(πy') φ₁(y') dy' on a dedicated fine grid.
            let m = 400;
            let hh = (y - c) / m as f64;
            let mut acc = 0.0;
            for j in 0..m {
                let a = c + j as f64 * hh;
                let mid = a + 0.5 * hh;
                let b = a + hh;
                let f = |x: f64| (PI * x).sin() * col.phi1_at(x);
                acc += hh / 6.0 * (f(a) + 4.0 * f(mid) + f(b));
            }
            acc
        };
        let integrand = |y: f64| -> f64 {
            let w = y - c;
            let phi = w * p.mean_du(c, y) * col.phi1_at(y);
            norm_n(y) / (phi * phi)
        };
        let excl = |eps: f64| -> f64 {
            let m = 6000;
            let mut acc = 0.0;
            for (a, b) in [(0.0, c - eps), (c + eps, 1.0)] {
                let hh = (b - a) / m as f64;
                for j in 0..m {
                    let x0 = a + j as f64 * hh;
                    acc += hh / 6.0
                        * (integrand(x0) + 4.0 * integrand(x0 + 0.5 * hh) + integrand(x0 + hh));
                }
            }
            acc
        };
        let eps = [4e-3, 2e-3, 1e-3, 5e-4];
        let mut vals: Vec<f64> = eps.iter().map(|&e| excl(e)).collect();
        for level in 1..eps.len() {
            for i in 0..eps.len() - level {
                let (e0, e1) = (eps[i], eps[i + level]);
                vals[i] = (vals[i + 1] * e0 - vals[i] * e1) / (e0 - e1);
            }
        }
        let oracle = vals[0];
        let got = compute_ii1(&p, &field, &|y| csin(1.0, y), c).unwrap();
        assert!(got.im.abs() <= 1e-12);
        assert!(
            (got.re - oracle).abs() <= 1e-6 * (1.0 + oracle.abs()),
            "II1 {} vs exclusion oracle {}",
            got.re,
            oracle
        );
    }

    #[test]
    fn couette_mu_reduces_to_boundary_coefficient() {
        let p = ShearProfile::couette();
        let (field, sd) = setup(&p, 1.0, 65);
        let init = sin_mode(1.0, &field.ygrid);
        let ctx = ModeContext::new(&p, &field, &sd, &init).unwrap();
        for k in 0..field.ny() {
            let expected = init.omega0[k] * (PI / sd.a[k]);
            assert!(
                (ctx.mu[k] - expected).norm() <= 1e-10 * (1.0 + expected.norm()),
                "node {k}"
            );
        }
        assert!(ctx.max_rho_mu.is_finite() && ctx.max_rho_mu > 0.0);
    }

    #[test]
    fn mu_identity_holds_on_quadratic_profile() {
        let p = ShearProfile::quadratic(0.2).unwrap();
        let (field, sd) = setup(&p, 2.0, 65);
        let init = ModeInitial::from_fn(
            2.0,
            &field.ygrid,
            |y| csin(1.0, y) * Complex64::new(0.7, -0.2) + csin(2.0, y) * Complex64::new(0.1, 0.3),
            |y| {
                Complex64::new(PI * (PI * y).cos(), 0.0) * Complex64::new(0.7, -0.2)
                    + Complex64::new(2.0 * PI * (2.0 * PI * y).cos(), 0.0)
                        * Complex64::new(0.1, 0.3)
            },
            |y| {
                Complex64::new(-PI * PI * (PI * y).sin(), 0.0) * Complex64::new(0.7, -0.2)
                    + Complex64::new(-4.0 * PI * PI * (2.0 * PI * y).sin(), 0.0)
                        * Complex64::new(0.1, 0.3)
            },
        );
        let ctx = ModeContext::new(&p, &field, &sd, &init).unwrap();
        let mut defect = 0.0_f64;
        let mut scale = 1.0_f64;
        for k in 0..field.ny() {
            let gap = ctx.mu_minus[k] - ctx.mu_plus[k] - ctx.mu[k] * (sd.rho[k] * 2.0 / 2.0);
            defect = defect.max(gap.norm());
            scale = scale.max(ctx.mu_minus[k].norm());
        }
        assert!(defect <= 1e-10 * scale, "defect {defect:.3e}");
    }

    #[test]
    fn psi_at_t0_matches_green_kernel_on_couette() {
        let p = ShearProfile::couette();
        let alpha = 1.3;
        let (field, sd) = setup(&p, alpha, 129);
        let init = sin_mode(alpha, &field.ygrid);
        let ctx = ModeContext::new(&p, &field, &sd, &init).unwrap();
        let psi = ctx.psi_hat(0.0);
        // sin(πy) is a Dirichlet eigenfunction: (α² - ∂²)⁻¹ sin = sin/(α²+π²).
        let scale = 1.0 / (alpha * alpha + PI * PI);
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &y) in field.ygrid.iter().enumerate() {
            let exact = (PI * y).sin() * scale;
            num += (psi[i] - Complex64::new(exact, 0.0)).norm_sqr();
            den += exact * exact;
        }
        let rel = (num / den).sqrt();
        assert!(rel <= 1e-3, "relative L2 error {rel:.3e}");
        let norm = l2y(&psi, uniform_step(&field.ygrid));
        assert!(psi[0].norm() <= 1e-8 * norm);
        assert!(psi[field.ny() - 1].norm() <= 1e-8 * norm);
    }

    #[test]
    fn psi_time_dependence_matches_direct_quadrature_on_couette() {
        let p = ShearProfile::couette();
        let alpha = 1.0;
        let (field, sd) = setup(&p, alpha, 129);
        let init = sin_mode(alpha, &field.ygrid);
        let ctx = ModeContext::new(&p, &field, &sd, &init).unwrap();
        let t = 7.3;
        let psi = ctx.psi_hat(t);
        // Independent route: ψ̂(t,y) = ∫₀¹ G(y,c) sin(πc) e^{-iαct} dc with
        // the closed-form Dirichlet kernel, by fine Simpson.
        let green = |y: f64, c: f64| -> f64 {
            let (lo, hi) = (y.min(c), y.max(c));
            (alpha * lo).sinh() * (alpha * (1.0 - hi)).sinh() / (alpha * alpha.sinh())
        };
        let m = 20000;
        let hh = 1.0 / m as f64;
        let mut err = 0.0;
        let mut den = 0.0;
        for (i, &y) in field.ygrid.iter().enumerate().step_by(8) {
            let mut acc = Complex64::zero();
            for j in 0..m {
                let c0 = j as f64 * hh;
                for (node, wq) in [(c0, 1.0), (c0 + 0.5 * hh, 4.0), (c0 + hh, 1.0)] {
                    let phase = Complex64::new(0.0, -alpha * node * t).exp();
                    acc += phase * (green(y, node) * (PI * node).sin() * wq * hh / 6.0);
                }
            }
            err += (psi[i] - acc).norm_sqr();
            den += acc.norm_sqr();
        }
        let rel = (err / den).sqrt();
        assert!(rel <= 1e-3, "relative error {rel:.3e} at t = {t}");
    }

    #[test]
    fn transform_moments_match_dense_simpson() {
        let p = ShearProfile::quadratic(0.2).unwrap();
        let alpha = 1.0;
        let (field, sd) = setup(&p, alpha, 65);
        let init = sin_mode(alpha, &field.ygrid);
        let ctx = ModeContext::new(&p, &field, &sd, &init).unwrap();
        let t = 3.0;
        let lam = alpha * t;
        let w = ctx.w_hat(t);
        for &i in &[21, 32, 44] {
            // Dense Simpson of (e^{iλθ}-1)/θ · g over every panel, with the
            // same density samples but a pointwise quadrature instead of
            // closed moments.
            let line = &ctx.lines[i];
            let ui = p.u(field.ygrid[i]);
            let factor = |th: f64| -> Complex64 {
                if (lam * th).abs() < 1e-6 {
                    Complex64::new(0.0, lam) * (1.0 + Complex64::new(0.0, lam * th) * 0.5)
                } else {
                    (Complex64::new(0.0, lam * th).exp() - 1.0) / th
                }
            };
            let mut acc = Complex64::zero();
            for q in 0..line.breaks.len() - 1 {
                let (ca, cb) = (line.breaks[q], line.breaks[q + 1]);
                let m = 40;
                let hh = (cb - ca) / m as f64;
                for j in 0..m {
                    let c0 = ca + j as f64 * hh;
                    for (node, wq) in [(c0, 1.0), (c0 + 0.5 * hh, 4.0), (c0 + hh, 1.0)] {
                        let g = ctx.g_at(i, node.min(cb).max(ca));
                        acc += factor(ui - node) * g * (wq * hh / 6.0);
                    }
                }
            }
            let expected = ctx.omega0[i] - acc * (ctx.d2u[i] / PI);
            assert!(
                (w[i] - expected).norm() <= 2e-4 * (1.0 + expected.norm()),
                "row {i}: {:.6e}",
                (w[i] - expected).norm()
            );
        }
    }

    #[test]
    fn w_reduces_to_initial_data_on_couette_and_at_t0() {
        let p = ShearProfile::couette();
        let (field, sd) = setup(&p, 1.0, 65);
        let init = sin_mode(1.0, &field.ygrid);
        let ctx = ModeContext::new(&p, &field, &sd, &init).unwrap();
        for &t in &[0.0, 1.0, 10.0, 100.0] {
            let w = ctx.w_hat(t);
            for (a, b) in w.iter().zip(&init.omega0) {
                assert_eq!(a, b, "Couette transport must leave the profile fixed");
            }
        }
        let q = ShearProfile::quadratic(0.2).unwrap();
        let (field, sd) = setup(&q, 1.0, 65);
        let init = sin_mode(1.0, &field.ygrid);
        let ctx = ModeContext::new(&q, &field, &sd, &init).unwrap();
        let w0 = ctx.w_hat(0.0);
        for (a, b) in w0.iter().zip(&init.omega0) {
            assert_eq!(a, b, "vanishing moments at t = 0");
        }
    }

    #[test]
    fn velocity_norms_match_hand_computed_parseval() {
        let ny = 129;
        let ygrid: Vec<f64> = (0..ny).map(|i| i as f64 / (ny - 1) as f64).collect();
        let psi: Vec<Complex64> = ygrid.iter().map(|&y| csin(1.0, y)).collect();
        let modes = vec![(1.0, psi)];
        let (nv, nv2) = velocity_norms(&ygrid, &modes);
        // V̂² = -i sin(πy): ‖V²‖² = 2π·½ = π.
        assert!((nv2 * nv2 - PI).abs() <= 1e-6);
        // V̂¹ = π cos(πy): ‖V‖² = 2π(π²/2 + ½) = π(π² + 1).
        assert!((nv * nv - PI * (PI * PI + 1.0)).abs() <= 1e-6);
    }

    #[test]
    fn physical_fields_are_real_and_divergence_free() {
        let ny = 129;
        let nx = 32;
        let ygrid: Vec<f64> = (0..ny).map(|i| i as f64 / (ny - 1) as f64).collect();
        let shape: Vec<Complex64> = ygrid
            .iter()
            .map(|&y| Complex64::new((PI * y).sin(), 0.3 * (2.0 * PI * y).sin()))
            .collect();
        let conj: Vec<Complex64> = shape.iter().map(|v| v.conj()).collect();
        let modes = vec![(1.0, shape), (-1.0, conj)];
        let (v1, v2) = velocity(&ygrid, &modes, nx);
        let scale = v1
            .iter()
            .flatten()
            .chain(v2.iter().flatten())
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        let worst_imag = v1
            .iter()
            .flatten()
            .chain(v2.iter().flatten())
            .map(|v| v.im.abs())
            .fold(0.0, f64::max);
        assert!(worst_imag <= 1e-10 * scale);

        // ∂_x V¹ + ∂_y V² = 0 to the discretization order: x by exact mode
        // factors would be trivial, so difference both directions.
        let hx = 2.0 * PI / nx as f64;
        let hy = uniform_step(&ygrid);
        let mut worst = 0.0_f64;
        for jx in 0..nx {
            let dv2 = ddy(&v2[jx], hy);
            for iy in 0..ny {
                let dxv1 = (v1[(jx + nx - 2) % nx][iy] - v1[(jx + 2) % nx][iy]
                    + (v1[(jx + 1) % nx][iy] - v1[(jx + nx - 1) % nx][iy]) * 8.0)
                    * (1.0 / (12.0 * hx));
                worst = worst.max((dxv1 + dv2[iy]).norm());
            }
        }
        assert!(worst <= 1e-3 * scale, "divergence {worst:.3e}");
    }

    #[test]
    fn decay_fit_recovers_exact_powers() {
        let ts: Vec<f64> = (0..14).map(|k| 2.0_f64.powi(k - 2)).collect();
        let v: Vec<f64> = ts.iter().map(|&t| 3.0 / t).collect();
        let v2: Vec<f64> = ts.iter().map(|&t| 5.0 / (t * t)).collect();
        let m = decay_metrics(&ts, &v, &v2, (1.0, 3000.0)).unwrap();
        assert!((m.slope_v + 1.0).abs() <= 1e-12);
        assert!((m.slope_v2 + 2.0).abs() <= 1e-12);
        assert!((m.sup_tv - 3.0).abs() <= 1e-12);
        assert!((m.sup_t2v2 - 5.0).abs() <= 1e-12);
        match decay_metrics(&ts[..6], &v[..6], &v2[..6], (0.1, 3000.0)) {
            Err(Error::InsufficientWindow { need: 8, .. }) => {}
            other => panic!("expected InsufficientWindow, got {other:?}"),
        }
        match decay_metrics(&ts, &v, &v2, (4.0, 16.0)) {
            Err(Error::InsufficientWindow { .. }) => {}
            other => panic!("expected InsufficientWindow, got {other:?}"),
        }
    }

    #[test]
    fn hminus1_aggregation_matches_hand_sum() {
        let ny = 65;
        let ygrid: Vec<f64> = (0..ny).map(|i| i as f64 / (ny - 1) as f64).collect();
        let h = uniform_step(&ygrid);
        let m1 = sin_mode(1.0, &ygrid);
        let m2 = sin_mode(-2.0, &ygrid);
        let expect_l2 = (m1.norm_l2(h).powi(2) + 0.25 * m2.norm_l2(h).powi(2)).sqrt();
        let data = InitialData {
            ygrid,
            modes: vec![m1, m2],
        };
        let (l2, h1, h2) = data.hminus1_norms();
        assert!((l2 - expect_l2).abs() <= 1e-14);
        assert!(h1 > l2 && h2 > h1);
    }

    #[test]
    fn scattering_on_couette_is_exact_and_alt_route_agrees_on_quadratic() {
        let p = ShearProfile::couette();
        let (field, sd) = setup(&p, 1.0, 65);
        let init = sin_mode(1.0, &field.ygrid);
        let me = evolve_mode(&p, &field, &sd, &init, &[0.0, 8.0, 16.0, 32.0]).unwrap();
        let rep = scattering_profile(&me, &field.ygrid);
        assert_eq!(rep.residuals.len(), 2);
        for &(_, r) in &rep.residuals {
            assert!(r <= 1e-14);
        }
        for (a, b) in rep.w_infinity.iter().zip(&init.omega0) {
            assert_eq!(a, b);
        }

        let q = ShearProfile::quadratic(0.2).unwrap();
        let (field, sd) = setup(&q, 1.0, 65);
        let init = sin_mode(1.0, &field.ygrid);
        let ctx = ModeContext::new(&q, &field, &sd, &init).unwrap();
        let t = 4.0;
        let alt = alt_scattering(&ctx, t);
        let direct = ctx.w_hat(t);
        let h = uniform_step(&field.ygrid);
        let diff: Vec<Complex64> = alt.iter().zip(&direct).map(|(&a, &b)| a - b).collect();
        let rel = l2y(&diff, h) / l2y(&direct, h);
        assert!(
            rel <= 1e-2,
            "history vs moment construction differ by {rel:.3e}"
        );
    }

    #[test]
    fn mu_diagnostics_scale_with_the_datum() {
        let p = ShearProfile::couette();
        let ny = 65;
        let mut ratios = Vec::new();
        for &alpha in &[1.0, 2.0, 4.0] {
            let (field, sd) = setup(&p, alpha, ny);
            let init = sin_mode(alpha, &field.ygrid);
            let ctx = ModeContext::new(&p, &field, &sd, &init).unwrap();
            let d = mu_norm_diagnostics(&p, &field.ygrid, &ctx.mu, &init);
            assert!(d.norm_mu.is_finite() && d.norm_rho_mu > 0.0);
            ratios.push(d.norm_rho_mu * alpha / init.norm_l2(uniform_step(&field.ygrid)));
        }
        let (lo, hi) = (
            ratios.iter().cloned().fold(f64::INFINITY, f64::min),
            ratios.iter().cloned().fold(0.0, f64::max),
        );
        assert!(
            hi / lo <= 10.0,
            "α-scaled ratios spread too far: {ratios:?}"
        );

        let zero = ModeInitial::zero(1.0, ny);
        let (field, sd) = setup(&p, 1.0, ny);
        let ctx = ModeContext::new(&p, &field, &sd, &zero).unwrap();
        let d = mu_norm_diagnostics(&p, &field.ygrid, &ctx.mu, &zero);
        assert_eq!(d.norm_mu, 0.0);
        assert_eq!(d.ratio_l2, 0.0);
    }

    #[test]
    fn zero_datum_evolves_to_zero() {
        let p = ShearProfile::quadratic(0.2).unwrap();
        let (field, sd) = setup(&p, 1.0, 65);
        let init = ModeInitial::zero(1.0, 65);
        let me = evolve_mode(&p, &field, &sd, &init, &[0.0, 5.0]).unwrap();
        for row in me.psi_hat.iter().chain(&me.w_hat) {
            for v in row {
                assert_eq!(*v, Complex64::zero());
            }
        }
        assert_eq!(me.max_rho_mu, 0.0);
    }

    #[test]
    fn initial_data_consistency_certificate() {
        let ny = 129;
        let ygrid: Vec<f64> = (0..ny).map(|i| i as f64 / (ny - 1) as f64).collect();
        let m = sin_mode(1.0, &ygrid);
        let h = uniform_step(&ygrid);
        assert!(m.fd_consistency(h) <= 2.0 * h * h * PI.powi(3) / 6.0);
        // A mesh sanity anchor: the column meshes integrate the constant 1.
        let col = solve_phi1(&ShearProfile::couette(), 1.0, 0.5, DEFAULT_TOL, 60).unwrap();
        let ones = vec![1.0; col.mesh().nodes().len()];
        assert!((col.mesh().integrate(&ones) - 1.0).abs() <= 1e-13);
        let _ = PanelMesh::uniform(0.0, 1.0, 4);
    }
}
