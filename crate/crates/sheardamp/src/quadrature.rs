//! Panel quadrature on the channel and on the spectral segment.
//!
//! Everything downstream integrates functions that are smooth except at one
//! marked point (a critical layer y_c or a spectral parameter c), where they
//! have a simple pole, a logarithmic kink, or rapid oscillation. The tools
//! here are built around that structure:
//!
//! * meshes of panels carrying 7 Gauss–Lobatto nodes each, with exact
//!   degree-6 cumulative integration anchored at a chosen breakpoint;
//! * geometric grading of a mesh toward a marked point;
//! * principal-value integration by subtracting the exact pole model
//!   `pole_coeff * u'(y)/(u(y) - c)`, whose integral is a logarithm;
//! * Filon-type quadrature for ∫ g(c) e^{-iλc} dc with cost independent
//!   of λ;
//! * the sine and cosine integrals Si and Cin, through which the moments
//!   of (e^{iλθ} - 1)/θ are expressed in closed form.

use std::ops::{Add, Mul, Sub};
use std::sync::OnceLock;

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::profile::ShearProfile;

/// Scalar types the quadrature routines are generic over (`f64` and
/// [`Complex64`]).
pub trait Field:
    Copy + Zero + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
}

impl Field for f64 {}
impl Field for Complex64 {}

// ---------------------------------------------------------------------------
// Quadrature rules on [-1, 1]
// ---------------------------------------------------------------------------

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    /// Nodes in increasing order.
    pub x: Vec<f64>,
    /// Matching weights (sum to 2).
    pub w: Vec<f64>,
}

/// Compute the n-point Gauss–Legendre rule by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> GaussRule {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess for the i-th root from the top.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / pp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    GaussRule { x, w }
}

fn gl_static(cell: &'static OnceLock<GaussRule>, n: usize) -> &'static GaussRule {
    cell.get_or_init(|| gauss_legendre(n))
}

/// Cached 8-point Gauss–Legendre rule.
pub fn gl8() -> &'static GaussRule {
    static C: OnceLock<GaussRule> = OnceLock::new();
    gl_static(&C, 8)
}

/// Cached 16-point Gauss–Legendre rule.
pub fn gl16() -> &'static GaussRule {
    static C: OnceLock<GaussRule> = OnceLock::new();
    gl_static(&C, 16)
}

/// Cached 24-point Gauss–Legendre rule.
pub fn gl24() -> &'static GaussRule {
    static C: OnceLock<GaussRule> = OnceLock::new();
    gl_static(&C, 24)
}

/// Number of Lobatto nodes per panel.
pub const PANEL_NODES: usize = 7;

/// 7-point Gauss–Lobatto rule with its cumulative-integration matrix and
/// barycentric weights; exact for polynomials of degree 11 (degree 6 for the
/// node-anchored cumulative map).
#[derive(Debug, Clone)]
pub struct LobattoRule {
    /// Nodes on [-1, 1], endpoints included.
    pub x: [f64; PANEL_NODES],
    /// Quadrature weights.
    pub w: [f64; PANEL_NODES],
    /// `cum[i][j]` = integral of the j-th Lagrange basis polynomial from
    /// -1 to node i.
    pub cum: [[f64; PANEL_NODES]; PANEL_NODES],
    /// Barycentric interpolation weights.
    pub bary: [f64; PANEL_NODES],
}

/// Legendre P_6 and its first derivative.
fn p6(z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = 0.0;
    for j in 0..6 {
        let p2 = p1;
        p1 = p0;
        p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
    }
    let dp = 6.0 * (z * p0 - p1) / (z * z - 1.0);
    (p0, dp)
}

/// Cached 7-point Lobatto rule.
pub fn lobatto7() -> &'static LobattoRule {
    static C: OnceLock<LobattoRule> = OnceLock::new();
    C.get_or_init(|| {
        let mut x = [0.0; PANEL_NODES];
        x[0] = -1.0;
        x[6] = 1.0;
        // Interior nodes: roots of P_6'; Newton with P_6'' from the Legendre ODE.
        for i in 1..6 {
            let mut z = (std::f64::consts::PI * i as f64 / 6.0).cos();
            for _ in 0..100 {
                let (p, dp) = p6(z);
                let d2p = (2.0 * z * dp - 42.0 * p) / (1.0 - z * z);
                if d2p == 0.0 {
                    break;
                }
                let dz = dp / d2p;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            x[6 - i] = z;
        }
        x[3] = 0.0;
        let mut w = [0.0; PANEL_NODES];
        for i in 0..PANEL_NODES {
            let (p, _) = p6(x[i].clamp(-1.0, 1.0));
            w[i] = 2.0 / (42.0 * p * p);
        }
        let mut bary = [0.0; PANEL_NODES];
        for j in 0..PANEL_NODES {
            let mut prod = 1.0;
            for k in 0..PANEL_NODES {
                if k != j {
                    prod *= x[j] - x[k];
                }
            }
            bary[j] = 1.0 / prod;
        }
        // cum[i][j] via 8-point Gauss on [-1, x_i] (exact: basis is degree 6).
        let g = gauss_legendre(8);
        let ell = |j: usize, t: f64| -> f64 {
            let mut v = bary[j];
            for k in 0..PANEL_NODES {
                if k != j {
                    v *= t - x[k];
                }
            }
            v
        };
        let mut cum = [[0.0; PANEL_NODES]; PANEL_NODES];
        for i in 1..PANEL_NODES {
            let mid = 0.5 * (x[i] - 1.0);
            let half = 0.5 * (x[i] + 1.0);
            for j in 0..PANEL_NODES {
                let mut acc = 0.0;
                for q in 0..8 {
                    acc += g.w[q] * ell(j, mid + half * g.x[q]);
                }
                cum[i][j] = acc * half;
            }
        }
        LobattoRule { x, w, cum, bary }
    })
}

// ---------------------------------------------------------------------------
// Breakpoint helpers
// ---------------------------------------------------------------------------

/// Uniform grid of `n` points spanning [0, 1].
pub fn uniform_grid(n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// Refine a breakpoint set geometrically toward `point` with `k` levels.
///
/// `point` itself is inserted, and on each side the gap to the previously
/// nearest breakpoint is halved `k` times, so the innermost panel width is
/// 2^-k of the original gap. Points outside the grid's range leave it
/// unchanged.
pub fn graded_refine(grid: &[f64], point: f64, k: usize) -> Vec<f64> {
    assert!(grid.len() >= 2);
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    if !(point >= lo && point <= hi) {
        return grid.to_vec();
    }
    let scale = (hi - lo).abs();
    let mut out: Vec<f64> = grid.to_vec();
    out.push(point);
    let left_gap = grid
        .iter()
        .filter(|&&g| g < point - 1e-14 * scale)
        .fold(f64::INFINITY, |m, &g| m.min(point - g));
    let right_gap = grid
        .iter()
        .filter(|&&g| g > point + 1e-14 * scale)
        .fold(f64::INFINITY, |m, &g| m.min(g - point));
    for j in 1..=k {
        let f = 0.5_f64.powi(j as i32);
        if left_gap.is_finite() {
            out.push(point - left_gap * f);
        }
        if right_gap.is_finite() {
            out.push(point + right_gap * f);
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * scale);
    out
}

// ---------------------------------------------------------------------------
// Panel meshes
// ---------------------------------------------------------------------------

/// A partition into panels, each carrying 7 Lobatto nodes; interface nodes
/// are shared, so a mesh with M panels has 6M + 1 nodes.
#[derive(Debug, Clone)]
pub struct PanelMesh {
    breaks: Vec<f64>,
    nodes: Vec<f64>,
}

impl PanelMesh {
    /// Build a mesh over the given strictly increasing breakpoints.
    pub fn new(breaks: Vec<f64>) -> PanelMesh {
        assert!(breaks.len() >= 2);
        assert!(
            breaks.windows(2).all(|w| w[1] > w[0]),
            "breaks must increase"
        );
        let rule = lobatto7();
        let m = breaks.len() - 1;
        let mut nodes = Vec::with_capacity(6 * m + 1);
        for p in 0..m {
            let mid = 0.5 * (breaks[p] + breaks[p + 1]);
            let half = 0.5 * (breaks[p + 1] - breaks[p]);
            let start = if p == 0 { 0 } else { 1 };
            for i in start..PANEL_NODES {
                nodes.push(mid + half * rule.x[i]);
            }
        }
        // Pin interface nodes to the exact breakpoints.
        for p in 0..=m {
            nodes[6 * p] = breaks[p];
        }
        PanelMesh { breaks, nodes }
    }

    /// Uniform mesh of `panels` panels over [a, b].
    pub fn uniform(a: f64, b: f64, panels: usize) -> PanelMesh {
        assert!(panels >= 1 && b > a);
        PanelMesh::new(
            (0..=panels)
                .map(|i| a + (b - a) * i as f64 / panels as f64)
                .collect(),
        )
    }

    /// Uniform mesh graded toward `point` with `k` halvings.
    pub fn graded(a: f64, b: f64, panels: usize, point: f64, k: usize) -> PanelMesh {
        let base: Vec<f64> = (0..=panels)
            .map(|i| a + (b - a) * i as f64 / panels as f64)
            .collect();
        PanelMesh::new(graded_refine(&base, point, k))
    }

    /// Panel breakpoints.
    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    /// Flattened node coordinates (length 6 * panels + 1).
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of panels.
    pub fn n_panels(&self) -> usize {
        self.breaks.len() - 1
    }

    /// Node index of breakpoint `b_idx`.
    pub fn break_node(&self, b_idx: usize) -> usize {
        6 * b_idx
    }

    /// Index of the breakpoint equal to `point` (within 1e-13 of the span).
    pub fn find_break(&self, point: f64) -> Option<usize> {
        let scale = self.breaks[self.breaks.len() - 1] - self.breaks[0];
        self.breaks
            .iter()
            .position(|&b| (b - point).abs() <= 1e-13 * scale.max(1.0))
    }

    /// Sample a function at all nodes.
    pub fn sample<T>(&self, f: impl Fn(f64) -> T) -> Vec<T> {
        self.nodes.iter().map(|&y| f(y)).collect()
    }

    /// Integral over the whole mesh of the interpolant through `vals`.
    pub fn integrate<T: Field>(&self, vals: &[T]) -> T {
        assert_eq!(vals.len(), self.nodes.len());
        let rule = lobatto7();
        let mut acc = T::zero();
        for p in 0..self.n_panels() {
            let half = 0.5 * (self.breaks[p + 1] - self.breaks[p]);
            for i in 0..PANEL_NODES {
                acc = acc + vals[6 * p + i] * (rule.w[i] * half);
            }
        }
        acc
    }

    /// Cumulative integral from the node `anchor` (which must sit on a panel
    /// boundary) to every node, exact for panelwise degree-6 interpolants.
    ///
    /// Accumulation proceeds outward from the anchor on both sides, so for
    /// integrands of one sign no cancellation occurs and results stay
    /// accurate relative to their own size near the anchor.
    pub fn cumulative<T: Field>(&self, vals: &[T], anchor: usize) -> Vec<T> {
        assert_eq!(vals.len(), self.nodes.len());
        assert!(anchor % 6 == 0, "anchor must be a panel boundary node");
        let rule = lobatto7();
        let ap = anchor / 6;
        let m = self.n_panels();
        let mut out = vec![T::zero(); vals.len()];
        // Rightward panels.
        let mut acc = T::zero();
        for p in ap..m {
            let half = 0.5 * (self.breaks[p + 1] - self.breaks[p]);
            let mut partial = [T::zero(); PANEL_NODES];
            for (i, row) in rule.cum.iter().enumerate() {
                let mut s = T::zero();
                for j in 0..PANEL_NODES {
                    s = s + vals[6 * p + j] * (row[j] * half);
                }
                partial[i] = s;
            }
            for i in 1..PANEL_NODES {
                out[6 * p + i] = acc + partial[i];
            }
            acc = acc + partial[PANEL_NODES - 1];
        }
        // Leftward panels.
        let mut acc = T::zero();
        for p in (0..ap).rev() {
            let half = 0.5 * (self.breaks[p + 1] - self.breaks[p]);
            let mut partial = [T::zero(); PANEL_NODES];
            for (i, row) in rule.cum.iter().enumerate() {
                let mut s = T::zero();
                for j in 0..PANEL_NODES {
                    s = s + vals[6 * p + j] * (row[j] * half);
                }
                partial[i] = s;
            }
            let full = partial[PANEL_NODES - 1];
            for i in 0..PANEL_NODES - 1 {
                out[6 * p + i] = T::zero() - (acc + (full - partial[i]));
            }
            acc = acc + full;
        }
        out[anchor] = T::zero();
        out
    }

    /// Barycentric evaluation of the panelwise interpolant at `y`.
    pub fn interp<T: Field>(&self, vals: &[T], y: f64) -> T {
        assert_eq!(vals.len(), self.nodes.len());
        let rule = lobatto7();
        let m = self.n_panels();
        let p = match self.breaks.partition_point(|&b| b <= y) {
            0 => 0,
            q => (q - 1).min(m - 1),
        };
        let mid = 0.5 * (self.breaks[p] + self.breaks[p + 1]);
        let half = 0.5 * (self.breaks[p + 1] - self.breaks[p]);
        let t = (y - mid) / half;
        let mut num = T::zero();
        let mut den = 0.0;
        for j in 0..PANEL_NODES {
            let d = t - rule.x[j];
            if d.abs() < 1e-15 {
                return vals[6 * p + j];
            }
            let c = rule.bary[j] / d;
            num = num + vals[6 * p + j] * c;
            den += c;
        }
        num * (1.0 / den)
    }
}

// ---------------------------------------------------------------------------
// Principal-value integration
// ---------------------------------------------------------------------------

/// Principal value of ∫ f(y) dy over `interval`, where f carries the pole
/// model `pole_coeff * u'(y) / (u(y) - c)`.
///
/// The model is subtracted pointwise (the difference extends smoothly
/// across the critical layer) and its own principal value is restored in
/// closed form as `pole_coeff * ln|(u(b) - c)/(u(a) - c)|`. Fails with
/// `PoleAtEndpoint` when c is within 1e-11 of the segment ends, where the
/// logarithm loses meaning.
pub fn pv_integral<T: Field>(
    f: &dyn Fn(f64) -> T,
    pole_coeff: T,
    p: &ShearProfile,
    c: f64,
    interval: (f64, f64),
) -> Result<T> {
    let (a, b) = interval;
    assert!(b > a);
    let (ua, ub) = (p.u(a), p.u(b));
    let span = p.span();
    let dist = (c - ua).abs().min((ub - c).abs());
    if dist < 1e-11 * span {
        return Err(Error::PoleAtEndpoint { c, dist });
    }
    let inside = c > ua && c < ub;
    let mesh = if inside {
        let yc = p.inverse(c)?;
        PanelMesh::graded(a, b, 16, yc, 8)
    } else {
        PanelMesh::uniform(a, b, 16)
    };
    let g = gl16();
    let mut acc = T::zero();
    for q in 0..mesh.n_panels() {
        let (pa, pb) = (mesh.breaks()[q], mesh.breaks()[q + 1]);
        let mid = 0.5 * (pa + pb);
        let half = 0.5 * (pb - pa);
        for (&x, &w) in g.x.iter().zip(&g.w) {
            let y = mid + half * x;
            let model = pole_coeff * (p.du(y) / (p.u(y) - c));
            acc = acc + (f(y) - model) * (w * half);
        }
    }
    let ln_term = ((ub - c).abs() / (ua - c).abs()).ln();
    Ok(acc + pole_coeff * ln_term)
}

// ---------------------------------------------------------------------------
// Oscillatory integrals
// ---------------------------------------------------------------------------

/// ∫ g(c) e^{-i freq c} dc over `interval`, by panelwise linear Filon
/// quadrature with exact oscillatory moments; the error is O(h²) uniformly
/// in the frequency. Panels are doubled until two refinements agree.
pub fn oscillatory_integral(
    g: &dyn Fn(f64) -> Complex64,
    freq: f64,
    interval: (f64, f64),
) -> Complex64 {
    let (a, b) = interval;
    if b <= a {
        return Complex64::zero();
    }
    let eval = |m: usize| -> Complex64 {
        let h = (b - a) / m as f64;
        let mut acc = Complex64::zero();
        let mut left = g(a);
        for k in 0..m {
            let c0 = a + k as f64 * h;
            let right = g(if k + 1 == m { b } else { c0 + h });
            acc += filon_panel(c0, h, left, right, freq);
            left = right;
        }
        acc
    };
    let mut m = 64;
    let mut prev = eval(m);
    loop {
        m *= 2;
        let cur = eval(m);
        if (cur - prev).norm() <= 1e-9 * (1.0 + cur.norm()) || m >= 4096 {
            return cur;
        }
        prev = cur;
    }
}

/// Closed-form ∫_{c0}^{c0+h} (ga + (gb-ga) τ/h) e^{-i λ c} dc.
pub(crate) fn filon_panel(c0: f64, h: f64, ga: Complex64, gb: Complex64, lam: f64) -> Complex64 {
    let z = lam * h;
    let (m0, m1) = if z.abs() < 1e-3 {
        // Series in (-iλ): M_k = Σ_m (-iλ)^m h^{k+m+1} / (m! (k+m+1)).
        let w = Complex64::new(0.0, -lam);
        let mut m0 = Complex64::zero();
        let mut m1 = Complex64::zero();
        let mut pw = Complex64::new(1.0, 0.0); // (-iλ)^m / m!
        for m in 0..6 {
            let hp = h.powi(m as i32 + 1);
            m0 += pw * (hp / (m + 1) as f64);
            m1 += pw * (hp * h / (m + 2) as f64);
            pw = pw * w * (1.0 / (m + 1) as f64);
        }
        (m0, m1)
    } else {
        let il = Complex64::new(0.0, lam);
        let e = Complex64::new(0.0, -z).exp();
        let m0 = (Complex64::new(1.0, 0.0) - e) / il;
        let m1 = (m0 - e * h) / il;
        (m0, m1)
    };
    let phase = Complex64::new(0.0, -lam * c0).exp();
    phase * (ga * m0 + (gb - ga) * (m1 / h))
}

// ---------------------------------------------------------------------------
// Singular identity check
// ---------------------------------------------------------------------------

/// Evaluate both sides of the double-pole identity
///
/// ```text
/// p.v. ∫ [∫_c^{c'} f] / (c - c')² dc'
///   = -p.v. ∫ f(c')/(c - c') dc'
///     + (c - u(0))⁻¹ ∫_{u(0)}^{c} f  -  (u(1) - c)⁻¹ ∫_{c}^{u(1)} f,
/// ```
///
/// with all c'-integrals over [u(0), u(1)]. The left side is computed by
/// symmetric ε-excision with Richardson extrapolation in ε, the right side
/// by pole-subtracted quadrature — two genuinely different discretizations,
/// so agreement certifies both.
pub fn sing2_identity_check(
    p: &ShearProfile,
    f: &dyn Fn(f64) -> f64,
    c: f64,
) -> Result<(f64, f64)> {
    let (u0, u1) = (p.u_lo(), p.u_hi());
    let span = u1 - u0;
    let dist = (c - u0).min(u1 - c);
    if dist < 1e-6 * span {
        return Err(Error::PoleAtEndpoint { c, dist });
    }

    // Inner antiderivative ∫_c^{x} f by 8-point Gauss (exact to degree 15).
    let g8 = gl8();
    let inner = |x: f64| -> f64 {
        let mid = 0.5 * (c + x);
        let half = 0.5 * (x - c);
        let mut acc = 0.0;
        for (&t, &w) in g8.x.iter().zip(&g8.w) {
            acc += w * f(mid + half * t);
        }
        acc * half
    };

    // Left side at a fixed excision radius.
    let g16 = gl16();
    let quad = |mesh: &PanelMesh, h: &dyn Fn(f64) -> f64| -> f64 {
        let mut acc = 0.0;
        for q in 0..mesh.n_panels() {
            let mid = 0.5 * (mesh.breaks()[q] + mesh.breaks()[q + 1]);
            let half = 0.5 * (mesh.breaks()[q + 1] - mesh.breaks()[q]);
            for (&t, &w) in g16.x.iter().zip(&g16.w) {
                acc += w * half * h(mid + half * t);
            }
        }
        acc
    };
    let lhs_at = |eps: f64| -> f64 {
        let integrand = |cp: f64| inner(cp) / ((c - cp) * (c - cp));
        let k = ((span / eps).log2().ceil() as usize).min(40) + 2;
        let left = PanelMesh::graded(u0, c - eps, 8, c - eps, k);
        let right = PanelMesh::graded(c + eps, u1, 8, c + eps, k);
        quad(&left, &integrand) + quad(&right, &integrand)
    };
    // Keep every excision radius clear of the nearer channel endpoint, so
    // the meshes on either side of the pole stay nonempty; shrinking the
    // whole ladder by a common factor preserves its geometric structure.
    let scale = (0.5 * dist / (1e-2 * span)).min(1.0);
    let epss = [
        1e-2 * span * scale,
        1e-3 * span * scale,
        1e-4 * span * scale,
        1e-5 * span * scale,
    ];
    let vals: Vec<f64> = epss.iter().map(|&e| lhs_at(e)).collect();
    let lhs = neville_to_zero(&epss, &vals);

    // Right side: Hilbert-type transform by pole subtraction.
    let fc = f(c);
    let hilbert = {
        let mesh = PanelMesh::graded(u0, u1, 16, c, 8);
        let smooth = |cp: f64| {
            let d = c - cp;
            if d.abs() < 1e-14 * span {
                0.0
            } else {
                (f(cp) - fc) / d
            }
        };
        fc * ((c - u0) / (u1 - c)).ln() + quad(&mesh, &smooth)
    };
    let int_lo = inner(u0); // ∫_c^{u0} f = -∫_{u0}^c f
    let int_hi = inner(u1);
    let rhs = -hilbert + (-int_lo) / (c - u0) - int_hi / (u1 - c);
    Ok((lhs, rhs))
}

/// Neville extrapolation of samples (x_i, y_i) to x = 0.
fn neville_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len();
    let mut t = ys.to_vec();
    for j in 1..n {
        for i in 0..n - j {
            t[i] = (xs[i + j] * t[i] - xs[i] * t[i + 1]) / (xs[i + j] - xs[i]);
        }
    }
    t[0]
}

// ---------------------------------------------------------------------------
// Sine and cosine integrals
// ---------------------------------------------------------------------------

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// (Si(x), Cin(x)) with Si(x) = ∫₀ˣ sin t / t dt (odd) and
/// Cin(x) = ∫₀ˣ (1 - cos t)/t dt (even).
///
/// Power series up to |x| = 4; beyond that a modified-Lentz continued
/// fraction for E₁(ix) supplies Ci and Si simultaneously, with
/// Cin = γ + ln x - Ci.
pub fn si_cin(x: f64) -> (f64, f64) {
    let ax = x.abs();
    let (si, cin) = if ax <= 4.0 {
        si_cin_series(ax)
    } else {
        let e1 = e1_ix(ax);
        let ci = -e1.re;
        let si = std::f64::consts::FRAC_PI_2 + e1.im;
        (si, EULER_GAMMA + ax.ln() - ci)
    };
    (si.copysign(x), cin)
}

fn si_cin_series(x: f64) -> (f64, f64) {
    let x2 = x * x;
    // sin-series terms a_k = (-1)^k x^{2k+1} / (2k+1)!; Si adds a_k/(2k+1).
    let mut a = x;
    let mut si = x;
    // cos-like terms c_k = x^{2k} / (2k)!; Cin adds (-1)^{k+1} c_k / (2k).
    let mut cv = x2 / 2.0;
    let mut cin = cv / 2.0;
    let mut sign = 1.0;
    for k in 1..40 {
        let kf = 2.0 * k as f64;
        a *= -x2 / ((kf) * (kf + 1.0));
        let ds = a / (kf + 1.0);
        si += ds;
        cv *= x2 / ((kf + 1.0) * (kf + 2.0));
        sign = -sign;
        let dc = sign * cv / (kf + 2.0);
        cin += dc;
        if ds.abs() < 1e-18 && dc.abs() < 1e-18 {
            break;
        }
    }
    (si, cin)
}

/// E₁(ix) for x > 0 by the modified-Lentz evaluation of the continued
/// fraction E₁(z) = e^{-z} / (z + 1 - 1²/(z + 3 - 2²/(z + 5 - ...))).
fn e1_ix(x: f64) -> Complex64 {
    let tiny = 1e-290;
    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = b.inv();
    let mut h = d;
    for i in 2..400 {
        let a = -(((i - 1) * (i - 1)) as f64);
        b += 2.0;
        d = b + d * a;
        if d.norm() < tiny {
            d = Complex64::new(tiny, 0.0);
        }
        c = b + Complex64::new(a, 0.0) / c;
        if c.norm() < tiny {
            c = Complex64::new(tiny, 0.0);
        }
        d = d.inv();
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h * Complex64::new(x.cos(), -x.sin())
}

/// G(x) = ∫₀ˣ (e^{is} - 1)/s ds = -Cin(x) + i Si(x) (entire in x).
pub fn expfrac_antideriv(x: f64) -> Complex64 {
    let (si, cin) = si_cin(x);
    Complex64::new(-cin, si)
}

/// ∫_{t1}^{t2} (e^{iλθ} - 1)/θ dθ in closed form.
pub fn int_expfrac(lam: f64, t1: f64, t2: f64) -> Complex64 {
    expfrac_antideriv(lam * t2) - expfrac_antideriv(lam * t1)
}

/// ∫_{t1}^{t2} (e^{iλθ} - 1) dθ in closed form, stable for small λ.
pub fn int_expm1(lam: f64, t1: f64, t2: f64) -> Complex64 {
    let dt = t2 - t1;
    if lam == 0.0 {
        return Complex64::zero();
    }
    let z = Complex64::new(0.0, lam * dt);
    // (e^{iλΔ} - 1)/(iλ), by series when the exponent is small.
    let ratio = if (lam * dt).abs() < 1e-4 {
        let mut acc = Complex64::new(1.0, 0.0);
        let mut term = Complex64::new(1.0, 0.0);
        for m in 2..=5 {
            term *= z / (m as f64);
            acc += term;
        }
        acc * dt
    } else {
        (z.exp() - 1.0) / Complex64::new(0.0, lam)
    };
    Complex64::new(0.0, lam * t1).exp() * ratio - dt
}
