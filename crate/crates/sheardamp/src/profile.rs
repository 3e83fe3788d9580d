//! Monotone background shear profiles u on the channel [0,1].
//!
//! A profile carries its first four derivatives in closed form (or from a
//! quintic table fit) together with a certified lower bound `c0` of u'.
//! Everything downstream divides by u' or by differences u(y) - u(y_c), so
//! the monotonicity certificate is established once here and assumed after.

use crate::error::{Error, Result};

/// Gauss-Legendre nodes (8 point) on [-1,1], positive half; weights alongside.
const GL8_X: [f64; 4] = [
    0.183_434_642_495_649_80,
    0.525_532_409_916_328_99,
    0.796_666_477_413_626_74,
    0.960_289_856_497_536_23,
];
const GL8_W: [f64; 4] = [
    0.362_683_783_378_361_98,
    0.313_706_645_877_887_29,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// Tag for the built-in profile families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    /// u(y) = y.
    Couette,
    /// u(y) = y + a*y^2 with 2a > -1.
    Quadratic,
    /// u(y) = y - eps*sin(2*pi*y)/(2*pi) with |eps| < 1.
    SinusoidalPerturbed,
    /// Quintic fit through a user-supplied (y, u) table.
    UserTable,
}

impl ProfileKind {
    /// Stable short name used in configs, hashes and reports.
    pub fn tag(self) -> &'static str {
        match self {
            ProfileKind::Couette => "couette",
            ProfileKind::Quadratic => "quadratic",
            ProfileKind::SinusoidalPerturbed => "sinusoidal-perturbed",
            ProfileKind::UserTable => "user-table",
        }
    }

    /// Parse a config tag.
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "couette" => Some(ProfileKind::Couette),
            "quadratic" => Some(ProfileKind::Quadratic),
            "sinusoidal-perturbed" | "sinusoidal" => Some(ProfileKind::SinusoidalPerturbed),
            "user-table" => Some(ProfileKind::UserTable),
            _ => None,
        }
    }
}

/// Piecewise-quintic interpolant for table profiles; coefficients are in the
/// local variable t = (y - y_i)/h of each interval.
#[derive(Debug, Clone)]
struct QuinticTable {
    y0: f64,
    h: f64,
    /// Degree-5 coefficients per interval, ascending powers of t.
    coeffs: Vec<[f64; 6]>,
}

impl QuinticTable {
    fn interval(&self, y: f64) -> (usize, f64) {
        let n = self.coeffs.len();
        let s = ((y - self.y0) / self.h).floor();
        let i = (s as isize).clamp(0, n as isize - 1) as usize;
        let t = (y - (self.y0 + i as f64 * self.h)) / self.h;
        (i, t)
    }

    /// Evaluate the d-th derivative (d <= 4) at y.
    fn eval(&self, y: f64, d: usize) -> f64 {
        let (i, t) = self.interval(y);
        let c = &self.coeffs[i];
        // Differentiate the local polynomial d times, then Horner in t.
        let mut acc = 0.0;
        for k in (d..6).rev() {
            let mut fac = 1.0;
            for j in 0..d {
                fac *= (k - j) as f64;
            }
            acc = acc * t + c[k] * fac;
        }
        acc / self.h.powi(d as i32)
    }
}

/// Monotone C^4 shear profile on [0,1].
#[derive(Debug, Clone)]
pub struct ShearProfile {
    kind: ProfileKind,
    params: Vec<f64>,
    table: Option<QuinticTable>,
    c0: f64,
    u_lo: f64,
    u_hi: f64,
}

/// Number of samples in the construction-time monotonicity scan.
const SCAN_POINTS: usize = 10_000;

/// Build a profile from a kind tag and parameter list, validating the
/// monotonicity invariant on a dense grid.
pub fn make_profile(kind: ProfileKind, params: &[f64]) -> Result<ShearProfile> {
    match kind {
        ProfileKind::Couette => {
            if !params.is_empty() {
                return Err(Error::BadParams("couette takes no parameters".into()));
            }
        }
        ProfileKind::Quadratic => {
            if params.len() != 1 || !params[0].is_finite() {
                return Err(Error::BadParams(
                    "quadratic takes one finite parameter".into(),
                ));
            }
            if params[0] <= -0.5 {
                return Err(Error::BadParams(format!(
                    "quadratic coefficient {} <= -0.5 destroys monotonicity",
                    params[0]
                )));
            }
        }
        ProfileKind::SinusoidalPerturbed => {
            if params.len() != 1 || !params[0].is_finite() {
                return Err(Error::BadParams(
                    "sinusoidal takes one finite parameter".into(),
                ));
            }
            if params[0].abs() >= 1.0 {
                return Err(Error::BadParams(format!(
                    "sinusoidal amplitude |{}| >= 1 destroys monotonicity",
                    params[0]
                )));
            }
        }
        ProfileKind::UserTable => {
            return Err(Error::BadParams(
                "user-table profiles are built with ShearProfile::from_table".into(),
            ));
        }
    }
    let p = ShearProfile {
        kind,
        params: params.to_vec(),
        table: None,
        c0: 0.0,
        u_lo: 0.0,
        u_hi: 0.0,
    };
    p.finish_build()
}

impl ShearProfile {
    /// The Couette profile u(y) = y.
    pub fn couette() -> ShearProfile {
        make_profile(ProfileKind::Couette, &[]).expect("couette is always valid")
    }

    /// u(y) = y + a*y^2.
    pub fn quadratic(a: f64) -> Result<ShearProfile> {
        make_profile(ProfileKind::Quadratic, &[a])
    }

    /// u(y) = y - eps*sin(2 pi y)/(2 pi).
    pub fn sinusoidal(eps: f64) -> Result<ShearProfile> {
        make_profile(ProfileKind::SinusoidalPerturbed, &[eps])
    }

    /// Fit a C^2 piecewise-quintic profile through a uniformly spaced table.
    ///
    /// Node derivatives come from fourth-order finite differences; at least
    /// 64 nodes are required so the fit has C^4-like smoothness at the scale
    /// the solvers sample.
    pub fn from_table(ys: &[f64], us: &[f64]) -> Result<ShearProfile> {
        let n = ys.len();
        if n != us.len() || n < 64 {
            return Err(Error::BadParams(format!(
                "table needs >= 64 matched (y,u) rows; got {} x {}",
                n,
                us.len()
            )));
        }
        let h = (ys[n - 1] - ys[0]) / (n - 1) as f64;
        if h <= 0.0 {
            return Err(Error::BadParams("table y-column must increase".into()));
        }
        for (i, w) in ys.windows(2).enumerate() {
            if ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0) {
                return Err(Error::BadParams(format!(
                    "table spacing not uniform near row {i}"
                )));
            }
        }
        if (ys[0]).abs() > 1e-12 || (ys[n - 1] - 1.0).abs() > 1e-12 {
            return Err(Error::BadParams("table must span [0,1]".into()));
        }

        let d1 = fd_first(us, h);
        let d2 = fd_second(us, h);
        let mut coeffs = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            coeffs.push(quintic_coeffs(
                us[i],
                d1[i] * h,
                d2[i] * h * h,
                us[i + 1],
                d1[i + 1] * h,
                d2[i + 1] * h * h,
            ));
        }
        let p = ShearProfile {
            kind: ProfileKind::UserTable,
            params: Vec::new(),
            table: Some(QuinticTable {
                y0: ys[0],
                h,
                coeffs,
            }),
            c0: 0.0,
            u_lo: 0.0,
            u_hi: 0.0,
        };
        p.finish_build()
    }

    fn finish_build(mut self) -> Result<ShearProfile> {
        let mut min_du = f64::INFINITY;
        let mut min_at = 0.0;
        for i in 0..=SCAN_POINTS {
            let y = i as f64 / SCAN_POINTS as f64;
            let d = self.du(y);
            if d < min_du {
                min_du = d;
                min_at = y;
            }
        }
        if !(min_du > 0.0) {
            return Err(Error::NonMonotone { min_du, at: min_at });
        }
        self.c0 = 0.99 * min_du;
        self.u_lo = self.u(0.0);
        self.u_hi = self.u(1.0);
        if self.u_lo >= self.u_hi {
            return Err(Error::NonMonotone { min_du, at: min_at });
        }
        self.self_check()?;
        Ok(self)
    }

    /// Derivative consistency: central differences of u must reproduce du to
    /// O(h^2) on a coarse validation grid.
    fn self_check(&self) -> Result<()> {
        let h = 1e-4;
        let mut max3 = 0.0_f64;
        for i in 0..=100 {
            max3 = max3.max(self.d3u(i as f64 / 100.0).abs());
        }
        let budget = 10.0 * h * h * max3.max(1.0);
        for i in 1..100 {
            let y = i as f64 / 100.0;
            let fd = (self.u(y + h) - self.u(y - h)) / (2.0 * h);
            if (fd - self.du(y)).abs() > budget {
                return Err(Error::BadParams(format!(
                    "derivative inconsistency at y = {y}: fd = {fd}, du = {}",
                    self.du(y)
                )));
            }
        }
        Ok(())
    }

    /// Kind tag of this profile.
    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    /// Parameters the profile was built from (empty for couette and tables).
    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Certified lower bound of u' (1% below the sampled minimum).
    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// u(0), the lower end of the spectral segment.
    pub fn u_lo(&self) -> f64 {
        self.u_lo
    }

    /// u(1), the upper end of the spectral segment.
    pub fn u_hi(&self) -> f64 {
        self.u_hi
    }

    /// Width u(1) - u(0) of the spectral segment.
    pub fn span(&self) -> f64 {
        self.u_hi - self.u_lo
    }

    /// Background velocity u(y).
    pub fn u(&self, y: f64) -> f64 {
        match self.kind {
            ProfileKind::Couette => y,
            ProfileKind::Quadratic => y + self.params[0] * y * y,
            ProfileKind::SinusoidalPerturbed => {
                let eps = self.params[0];
                y - eps * (2.0 * std::f64::consts::PI * y).sin() / (2.0 * std::f64::consts::PI)
            }
            ProfileKind::UserTable => self.table.as_ref().unwrap().eval(y, 0),
        }
    }

    /// First derivative u'(y).
    pub fn du(&self, y: f64) -> f64 {
        match self.kind {
            ProfileKind::Couette => 1.0,
            ProfileKind::Quadratic => 1.0 + 2.0 * self.params[0] * y,
            ProfileKind::SinusoidalPerturbed => {
                1.0 - self.params[0] * (2.0 * std::f64::consts::PI * y).cos()
            }
            ProfileKind::UserTable => self.table.as_ref().unwrap().eval(y, 1),
        }
    }

    /// Second derivative u''(y).
    pub fn d2u(&self, y: f64) -> f64 {
        match self.kind {
            ProfileKind::Couette => 0.0,
            ProfileKind::Quadratic => 2.0 * self.params[0],
            ProfileKind::SinusoidalPerturbed => {
                let w = 2.0 * std::f64::consts::PI;
                self.params[0] * w * (w * y).sin()
            }
            ProfileKind::UserTable => self.table.as_ref().unwrap().eval(y, 2),
        }
    }

    /// Third derivative u'''(y).
    pub fn d3u(&self, y: f64) -> f64 {
        match self.kind {
            ProfileKind::Couette | ProfileKind::Quadratic => 0.0,
            ProfileKind::SinusoidalPerturbed => {
                let w = 2.0 * std::f64::consts::PI;
                self.params[0] * w * w * (w * y).cos()
            }
            ProfileKind::UserTable => self.table.as_ref().unwrap().eval(y, 3),
        }
    }

    /// Fourth derivative u''''(y).
    pub fn d4u(&self, y: f64) -> f64 {
        match self.kind {
            ProfileKind::Couette | ProfileKind::Quadratic => 0.0,
            ProfileKind::SinusoidalPerturbed => {
                let w = 2.0 * std::f64::consts::PI;
                -self.params[0] * w * w * w * (w * y).sin()
            }
            ProfileKind::UserTable => self.table.as_ref().unwrap().eval(y, 4),
        }
    }

    /// Critical layer y_c = u^{-1}(c), by guarded Newton with bisection
    /// fallback; accurate to 1e-13 of the segment width.
    pub fn inverse(&self, c: f64) -> Result<f64> {
        let span = self.span();
        if c < self.u_lo - 1e-12 || c > self.u_hi + 1e-12 {
            return Err(Error::OutOfRange {
                c,
                lo: self.u_lo,
                hi: self.u_hi,
            });
        }
        let c = c.clamp(self.u_lo, self.u_hi);
        let mut lo = 0.0_f64;
        let mut hi = 1.0_f64;
        let mut y = (c - self.u_lo) / span; // linear guess
        let tol = 1e-14 * span;
        for _ in 0..200 {
            let f = self.u(y) - c;
            if f.abs() <= tol {
                return Ok(y);
            }
            if f > 0.0 {
                hi = y;
            } else {
                lo = y;
            }
            let d = self.du(y);
            let mut next = y - f / d;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            y = next;
        }
        Ok(y)
    }

    /// Averaged slope (u(b)-u(a))/(b-a), evaluated without cancellation.
    ///
    /// For nearby arguments the difference quotient is replaced by the exact
    /// mean of u' over [a,b] (8-point Gauss), which is the same quantity.
    pub fn mean_du(&self, a: f64, b: f64) -> f64 {
        let d = b - a;
        if d.abs() > 0.05 {
            return (self.u(b) - self.u(a)) / d;
        }
        self.gauss_mean(a, b, |y| self.du(y))
    }

    /// Averaged curvature (u'(b)-u'(a))/(b-a), cancellation-free like
    /// [`ShearProfile::mean_du`].
    pub fn mean_d2u(&self, a: f64, b: f64) -> f64 {
        let d = b - a;
        if d.abs() > 0.05 {
            return (self.du(b) - self.du(a)) / d;
        }
        self.gauss_mean(a, b, |y| self.d2u(y))
    }

    /// Averaged third derivative (u''(b)-u''(a))/(b-a).
    pub fn mean_d3u(&self, a: f64, b: f64) -> f64 {
        let d = b - a;
        if d.abs() > 0.05 {
            return (self.d2u(b) - self.d2u(a)) / d;
        }
        self.gauss_mean(a, b, |y| self.d3u(y))
    }

    fn gauss_mean(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = 0.0;
        for k in 0..4 {
            acc += GL8_W[k] * (f(mid + half * GL8_X[k]) + f(mid - half * GL8_X[k]));
        }
        0.5 * acc
    }

    /// Zeros of u'' on [0,1], refined to `tol`; `Degenerate` when the
    /// curvature vanishes identically (Couette), which downstream spectral
    /// logic treats as its own case rather than as "no inflection points".
    pub fn inflection_points(&self, tol: f64) -> InflectionPoints {
        let n = 4096;
        let mut max_abs = 0.0_f64;
        let mut vals = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let y = i as f64 / n as f64;
            let v = self.d2u(y);
            max_abs = max_abs.max(v.abs());
            vals.push(v);
        }
        let scale = max_abs.max(self.span());
        if max_abs <= 1e-12 * self.span().max(1.0) {
            return InflectionPoints::Degenerate;
        }
        let zero_tol = 1e-11 * scale;
        let mut roots: Vec<f64> = Vec::new();
        let push = |roots: &mut Vec<f64>, y: f64| {
            if roots.iter().all(|r| (r - y).abs() > tol.max(1e-12) * 4.0) {
                roots.push(y);
            }
        };
        for i in 0..=n {
            let y = i as f64 / n as f64;
            if vals[i].abs() <= zero_tol {
                push(&mut roots, y);
            }
        }
        for i in 0..n {
            if vals[i].abs() <= zero_tol || vals[i + 1].abs() <= zero_tol {
                continue;
            }
            if vals[i] * vals[i + 1] < 0.0 {
                let mut lo = i as f64 / n as f64;
                let mut hi = (i + 1) as f64 / n as f64;
                let mut flo = vals[i];
                while hi - lo > tol {
                    let mid = 0.5 * (lo + hi);
                    let fm = self.d2u(mid);
                    if fm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if flo * fm < 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        flo = fm;
                    }
                }
                push(&mut roots, 0.5 * (lo + hi));
            }
        }
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        InflectionPoints::Points(roots)
    }

    /// FNV-1a hash of the profile identity, used to key cached field dumps.
    pub fn hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x1000_0000_01b3);
            }
        };
        eat(self.kind.tag().as_bytes());
        for p in &self.params {
            eat(&p.to_le_bytes());
        }
        if let Some(t) = &self.table {
            eat(&t.y0.to_le_bytes());
            eat(&t.h.to_le_bytes());
            for c in &t.coeffs {
                for v in c {
                    eat(&v.to_le_bytes());
                }
            }
        }
        h
    }
}

/// Result of the inflection-point scan.
#[derive(Debug, Clone, PartialEq)]
pub enum InflectionPoints {
    /// u'' vanishes identically; the scan is meaningless (Couette case).
    Degenerate,
    /// Isolated zeros of u'' (possibly none).
    Points(Vec<f64>),
}

/// Fourth-order first-derivative estimates on a uniform grid.
fn fd_first(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    for i in 0..n {
        d[i] = if i >= 2 && i + 2 < n {
            (8.0 * (f[i + 1] - f[i - 1]) - (f[i + 2] - f[i - 2])) / (12.0 * h)
        } else if i == 0 {
            (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h)
        } else if i == 1 {
            (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h)
        } else if i == n - 2 {
            (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5])
                / (12.0 * h)
        } else {
            (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5])
                / (12.0 * h)
        };
    }
    d
}

/// Fourth-order second-derivative estimates on a uniform grid.
fn fd_second(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let h2 = 12.0 * h * h;
    let edge0 = |g: &dyn Fn(usize) -> f64| {
        (45.0 * g(0) - 154.0 * g(1) + 214.0 * g(2) - 156.0 * g(3) + 61.0 * g(4) - 10.0 * g(5)) / h2
    };
    let edge1 = |g: &dyn Fn(usize) -> f64| {
        (10.0 * g(0) - 15.0 * g(1) - 4.0 * g(2) + 14.0 * g(3) - 6.0 * g(4) + g(5)) / h2
    };
    let fwd = |k: usize| f[k];
    let bwd = |k: usize| f[n - 1 - k];
    let mut d = vec![0.0; n];
    for i in 0..n {
        d[i] = match i {
            0 => edge0(&fwd),
            1 => edge1(&fwd),
            _ if i == n - 1 => edge0(&bwd),
            _ if i == n - 2 => edge1(&bwd),
            _ => (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) / h2,
        };
    }
    d
}

/// Quintic Hermite coefficients from scaled endpoint data (values, h-scaled
/// first and h^2-scaled second derivatives).
fn quintic_coeffs(f0: f64, g0: f64, s0: f64, f1: f64, g1: f64, s1: f64) -> [f64; 6] {
    // p(t) = a0 + a1 t + ... + a5 t^5 with p(0)=f0, p'(0)=g0, p''(0)=s0,
    // p(1)=f1, p'(1)=g1, p''(1)=s1 (derivatives in t).
    let a0 = f0;
    let a1 = g0;
    let a2 = 0.5 * s0;
    let r0 = f1 - (a0 + a1 + a2);
    let r1 = g1 - (a1 + 2.0 * a2);
    let r2 = s1 - 2.0 * a2;
    let a3 = 10.0 * r0 - 4.0 * r1 + 0.5 * r2;
    let a4 = -15.0 * r0 + 7.0 * r1 - r2;
    let a5 = 6.0 * r0 - 3.0 * r1 + 0.5 * r2;
    [a0, a1, a2, a3, a4, a5]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn couette_is_identity() {
        let p = ShearProfile::couette();
        assert_eq!(p.u(0.37), 0.37);
        assert_eq!(p.du(0.37), 1.0);
        assert!((p.c0() - 0.99).abs() < 1e-12);
        assert_eq!(p.inverse(0.5).unwrap(), 0.5);
    }

    #[test]
    fn quadratic_derivatives_and_c0() {
        let p = ShearProfile::quadratic(0.2).unwrap();
        assert!((p.u(0.5) - 0.55).abs() < 1e-15);
        assert!((p.du(0.5) - 1.2).abs() < 1e-15);
        assert!((p.d2u(0.9) - 0.4).abs() < 1e-15);
        assert!((p.c0() - 0.99).abs() < 1e-12);
    }

    #[test]
    fn quadratic_inverse_roundtrip() {
        let p = ShearProfile::quadratic(0.2).unwrap();
        let y = p.inverse(p.u(0.5)).unwrap();
        assert!((y - 0.5).abs() < 1e-13);
    }

    #[test]
    fn quadratic_inverse_matches_bisection_oracle() {
        // Independent oracle: plain bisection on y + 0.2 y^2 = 0.3.
        let f = |y: f64| y + 0.2 * y * y - 0.3;
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        let p = ShearProfile::quadratic(0.2).unwrap();
        assert!((p.inverse(0.3).unwrap() - oracle).abs() < 1e-13);
    }

    #[test]
    fn sinusoidal_monotone_with_margin() {
        let p = ShearProfile::sinusoidal(0.25).unwrap();
        // min u' = 1 - 0.25 = 0.75 at y = 0 (and 1).
        assert!((p.c0() - 0.99 * 0.75).abs() < 1e-6);
        for i in 0..=100 {
            assert!(p.du(i as f64 / 100.0) >= p.c0());
        }
    }

    #[test]
    fn inflection_scan_matches_known_zeros() {
        let p = ShearProfile::sinusoidal(0.25).unwrap();
        match p.inflection_points(1e-10) {
            InflectionPoints::Points(r) => {
                assert_eq!(r.len(), 3, "zeros of sin(2 pi y) on [0,1]: {r:?}");
                assert!(r[0].abs() < 1e-8);
                assert!((r[1] - 0.5).abs() < 1e-8);
                assert!((r[2] - 1.0).abs() < 1e-8);
            }
            InflectionPoints::Degenerate => panic!("not degenerate"),
        }
    }

    #[test]
    fn couette_inflections_degenerate() {
        assert_eq!(
            ShearProfile::couette().inflection_points(1e-10),
            InflectionPoints::Degenerate
        );
        match ShearProfile::quadratic(0.2)
            .unwrap()
            .inflection_points(1e-10)
        {
            InflectionPoints::Points(r) => assert!(r.is_empty()),
            _ => panic!("constant curvature is not degenerate"),
        }
    }

    #[test]
    fn rejects_nonmonotone_and_bad_params() {
        assert!(matches!(
            make_profile(ProfileKind::SinusoidalPerturbed, &[1.5]),
            Err(Error::BadParams(_))
        ));
        assert!(matches!(
            make_profile(ProfileKind::Quadratic, &[]),
            Err(Error::BadParams(_))
        ));
        assert!(matches!(
            ShearProfile::couette().inverse(1.5),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn mean_slope_has_no_cancellation() {
        let p = ShearProfile::quadratic(0.2).unwrap();
        // Exact: (u(b)-u(a))/(b-a) = 1 + a(b+a_y) for u = y + a y^2.
        let a = 0.5;
        for &d in &[1e-3, 1e-6, 1e-9, 1e-12] {
            let m = p.mean_du(a, a + d);
            let exact = 1.0 + 0.2 * (2.0 * a + d);
            assert!((m - exact).abs() < 1e-13, "d={d}: {m} vs {exact}");
        }
        assert_eq!(p.mean_du(a, a), p.du(a));
    }

    #[test]
    fn table_profile_reproduces_quadratic() {
        let n = 200;
        let ys: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let us: Vec<f64> = ys.iter().map(|&y| y + 0.2 * y * y).collect();
        let p = ShearProfile::from_table(&ys, &us).unwrap();
        for i in 0..=57 {
            let y = i as f64 / 57.0;
            assert!((p.u(y) - (y + 0.2 * y * y)).abs() < 1e-10);
            assert!((p.du(y) - (1.0 + 0.4 * y)).abs() < 1e-7);
            assert!((p.d2u(y) - 0.4).abs() < 1e-4);
        }
        assert!(ShearProfile::from_table(&ys[..32], &us[..32]).is_err());
    }
}
