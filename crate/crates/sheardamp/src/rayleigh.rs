//! Regularized Rayleigh solutions for real spectral parameter c.
//!
//! Writing φ = (u - c)φ₁ turns the Rayleigh equation
//! (u-c)(φ'' - α²φ) - u''φ = 0 into the self-adjoint form
//! ((u-c)²φ₁')' = α²(u-c)²φ₁ with φ₁(y_c) = 1, φ₁'(y_c) = 0 at the critical
//! layer y_c = u⁻¹(c). Integrating twice gives the fixed point
//!
//! ```text
//! φ₁ = 1 + α² T φ₁,     Tf(y) = ∫_{y_c}^{y} (u-c)⁻² ∫_{y_c}^{y'} (u-c)² f ,
//! ```
//!
//! and since T preserves positivity with |T^k 1| ≤ (y-y_c)^{2k}/(2k)!, the
//! Neumann series Σ α^{2k} T^k 1 converges with a factorial tail. The series
//! is summed on a panel mesh graded toward y_c, accumulating each term
//! outward from the anchor so that every quantity keeps *relative* accuracy
//! near the critical layer; in particular the bounded remainder factor
//!
//! ```text
//! 𝒯(φ₁) = (φ₁ - 1) / (α²(y-y_c)²),      𝒯(φ₁)(y_c) = 1/6,
//! ```
//!
//! comes out clean without ever forming 0/0. The Green-function factors
//!
//! ```text
//! Γ₀(y,c) = φ(y,c) ∫₀^y φ(z,c)⁻² dz   (y ≤ y_c),
//! Γ₁(y,c) = φ(y,c) ∫₁^y φ(z,c)⁻² dz   (y ≥ y_c),
//! ```
//!
//! are assembled by splitting φ⁻² into an exact double pole, an exact simple
//! pole (both integrated in closed form), and a bounded remainder integrated
//! on the graded mesh; their common diagonal limit is -1/u'(y_c).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::profile::ShearProfile;
use crate::quadrature::{gauss_legendre, graded_refine, GaussRule, PanelMesh};

/// Default series tolerance.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Default term cap: the factorial tail makes α^{2k}/(2k)! negligible well
/// before 4(α+10) terms.
pub fn default_max_terms(alpha: f64) -> usize {
    (4.0 * (alpha.abs() + 10.0)).ceil() as usize
}

/// Number of base panels for the column mesh (before grading), scaled so the
/// degree-6 panel interpolation resolves cosh(α·) to ~1e-10 relative.
fn base_panels(alpha: f64) -> usize {
    (4.0 * alpha.abs()).ceil().max(16.0) as usize
}

/// Grading levels toward the critical layer.
const GRADE_LEVELS: usize = 10;

/// One spectral column: φ₁(·, c) and derived data on a mesh graded at y_c.
#[derive(Debug, Clone)]
pub struct Phi1Column {
    /// Spectral parameter c ∈ (u(0), u(1)).
    pub c: f64,
    /// Critical layer y_c = u⁻¹(c).
    pub yc: f64,
    /// Modulus of the wavenumber the column was solved at.
    pub alpha: f64,
    mesh: PanelMesh,
    anchor: usize,
    /// φ₁ at the mesh nodes (≥ 1).
    pub phi1: Vec<f64>,
    /// Excess φ₁ - 1 at the mesh nodes, kept separately so no precision is
    /// lost near the anchor where it vanishes quadratically.
    pub excess: Vec<f64>,
    /// Bounded factor 𝒯(φ₁) = (φ₁-1)/(α²(y-y_c)²); 1/6 at the anchor.
    pub tfac: Vec<f64>,
    /// Averaged slope m(y) = (u(y)-c)/(y-y_c) at the mesh nodes.
    pub slope: Vec<f64>,
    /// Terms of the Neumann series actually summed.
    pub terms_used: usize,
    /// Sup-norm of the first neglected term (exact fixed-point residual).
    pub residual: f64,
}

/// Solve the fixed point φ₁ = 1 + α²Tφ₁ on a graded mesh by summing the
/// Neumann series term by term until the newest term falls below `tol`.
pub fn solve_phi1(
    p: &ShearProfile,
    alpha: f64,
    c: f64,
    tol: f64,
    max_terms: usize,
) -> Result<Phi1Column> {
    let yc = p.inverse(c)?;
    let a2 = alpha * alpha;
    let base: Vec<f64> = {
        let n = base_panels(alpha);
        (0..=n).map(|i| i as f64 / n as f64).collect()
    };
    let mesh = PanelMesh::new(graded_refine(&base, yc, GRADE_LEVELS));
    let bi = mesh
        .find_break(yc)
        .expect("graded mesh contains its grading point");
    let anchor = mesh.break_node(bi);
    let nodes = mesh.nodes().to_vec();
    let n = nodes.len();

    let slope: Vec<f64> = nodes.iter().map(|&y| p.mean_du(yc, y)).collect();
    // (u - c)² at the nodes, in the cancellation-free product form.
    let umc2: Vec<f64> = nodes
        .iter()
        .zip(&slope)
        .map(|(&y, &m)| {
            let w = y - yc;
            (w * m) * (w * m)
        })
        .collect();

    let mut term = vec![1.0_f64; n];
    let mut excess = vec![0.0_f64; n];
    let mut terms_used = 0usize;
    let mut residual;
    loop {
        // next = α² T term, through two anchored cumulative integrations.
        let v: Vec<f64> = term.iter().zip(&umc2).map(|(&t, &q)| t * q).collect();
        let inner = mesh.cumulative(&v, anchor);
        let mut q: Vec<f64> = inner
            .iter()
            .zip(&umc2)
            .map(|(&i1, &q2)| if q2 == 0.0 { 0.0 } else { i1 / q2 })
            .collect();
        q[anchor] = 0.0;
        let outer = mesh.cumulative(&q, anchor);
        let next: Vec<f64> = outer.iter().map(|&t| a2 * t).collect();
        let sup = next.iter().fold(0.0_f64, |m, &t| m.max(t.abs()));
        terms_used += 1;
        for (e, &t) in excess.iter_mut().zip(&next) {
            *e += t;
        }
        term = next;
        residual = sup;
        if sup <= tol {
            break;
        }
        if terms_used >= max_terms {
            return Err(Error::NoConvergence {
                residual: sup,
                terms: terms_used,
            });
        }
    }

    let mut phi1 = vec![0.0_f64; n];
    let mut tfac = vec![0.0_f64; n];
    for i in 0..n {
        phi1[i] = 1.0 + excess[i];
        let w = nodes[i] - yc;
        tfac[i] = if i == anchor {
            // Kernel-form limit: ∬ φ₁(y_c) s t² ds dt = 1/6 exactly.
            1.0 / 6.0
        } else {
            excess[i] / (a2 * w * w)
        };
    }
    Ok(Phi1Column {
        c,
        yc,
        alpha: alpha.abs(),
        mesh,
        anchor,
        phi1,
        excess,
        tfac,
        slope,
        terms_used,
        residual,
    })
}

impl Phi1Column {
    /// The graded panel mesh the column lives on.
    pub fn mesh(&self) -> &PanelMesh {
        &self.mesh
    }

    /// Node index of the critical layer.
    pub fn anchor(&self) -> usize {
        self.anchor
    }

    /// φ₁(y) by panel interpolation (exact 1 at the critical layer).
    pub fn phi1_at(&self, y: f64) -> f64 {
        self.mesh.interp(&self.phi1, y)
    }

    /// 𝒯(φ₁)(y) by panel interpolation.
    pub fn tfac_at(&self, y: f64) -> f64 {
        self.mesh.interp(&self.tfac, y)
    }

    /// φ(y) = (u(y)-c) φ₁(y), with the difference u-c in product form.
    pub fn phi_at(&self, p: &ShearProfile, y: f64) -> f64 {
        (y - self.yc) * p.mean_du(self.yc, y) * self.phi1_at(y)
    }
}

/// The integral operator T in its kernel form: for samples `f` on `ygrid`,
/// returns T f at each grid point through
///
/// ```text
/// Tf(y) = (y-y_c)² ∬_{[0,1]²} f(y_c + st(y-y_c)) K₀(s,t) ds dt,
/// K₀ = s · [ (u(y_c+st(y-y_c)) - c) / (u(y_c+s(y-y_c)) - c) ]²,
/// ```
///
/// where the bracket is evaluated as t·(averaged-slope ratio), so K₀ → s·t²
/// at the critical layer and no 0/0 is ever formed. `alpha` only selects the
/// tensor-Gauss resolution (the operator itself is α-independent).
pub fn apply_t(p: &ShearProfile, alpha: f64, c: f64, ygrid: &[f64], f: &[f64]) -> Result<Vec<f64>> {
    assert_eq!(ygrid.len(), f.len());
    let yc = p.inverse(c)?;
    let g = gauss_legendre(if alpha.abs() > 12.0 { 32 } else { 24 });
    let interp = GridInterp::new(ygrid, f);
    Ok(ygrid
        .iter()
        .map(|&y| apply_t_at(p, c, yc, &|z| interp.eval(z), y, &g))
        .collect())
}

/// Kernel-form T f at a single point, for a callable integrand.
pub fn apply_t_at(
    p: &ShearProfile,
    _c: f64,
    yc: f64,
    f: &dyn Fn(f64) -> f64,
    y: f64,
    g: &GaussRule,
) -> f64 {
    let w = y - yc;
    let mut acc = 0.0;
    for (&xs, &ws) in g.x.iter().zip(&g.w) {
        let s = 0.5 * (xs + 1.0);
        let ms = p.mean_du(yc, yc + s * w);
        for (&xt, &wt) in g.x.iter().zip(&g.w) {
            let t = 0.5 * (xt + 1.0);
            let mt = p.mean_du(yc, yc + s * t * w);
            let ratio = t * mt / ms;
            acc += ws * wt * 0.25 * s * ratio * ratio * f(yc + s * t * w);
        }
    }
    acc * w * w
}

/// Local cubic Lagrange interpolation on a sorted grid of samples.
struct GridInterp<'a> {
    x: &'a [f64],
    f: &'a [f64],
}

impl<'a> GridInterp<'a> {
    fn new(x: &'a [f64], f: &'a [f64]) -> Self {
        assert!(x.len() >= 4, "need at least 4 samples to interpolate");
        GridInterp { x, f }
    }

    fn eval(&self, z: f64) -> f64 {
        let n = self.x.len();
        let j = self.x.partition_point(|&g| g <= z).clamp(1, n - 1);
        let lo = (j - 1).saturating_sub(1).min(n - 4);
        let xs = &self.x[lo..lo + 4];
        let fs = &self.f[lo..lo + 4];
        let mut acc = 0.0;
        for i in 0..4 {
            let mut l = fs[i];
            for k in 0..4 {
                if k != i {
                    l *= (z - xs[k]) / (xs[i] - xs[k]);
                }
            }
            acc += l;
        }
        acc
    }
}

/// Evaluate φ(y, c) = (u(y)-c)·φ₁(y,c) from a fresh series solve.
pub fn phi(p: &ShearProfile, alpha: f64, c: f64, y: f64) -> Result<f64> {
    let col = solve_phi1(p, alpha, c, DEFAULT_TOL, default_max_terms(alpha))?;
    Ok(col.phi_at(p, y))
}

/// Γ₀ (valid for y ≤ y_c) and Γ₁ (valid for y ≥ y_c) sampled on a y-grid;
/// entries outside a branch's half-interval are NaN. At a grid node equal to
/// y_c both branches hold the common diagonal limit -1/u'(y_c).
#[derive(Debug, Clone)]
pub struct GammaPair {
    /// Branch anchored at y = 0.
    pub gamma0: Vec<f64>,
    /// Branch anchored at y = 1.
    pub gamma1: Vec<f64>,
}

/// Γ factors from an already-solved column.
///
/// The split of φ⁻² used for the anchored integrals is
///
/// ```text
/// 1/φ² = a·u'/(u-c)² + b₁·u'/(u-c) + R,
/// a = 1/u'(y_c),  b₁ = -u''(y_c)/u'(y_c)³,
/// ```
///
/// whose first two pieces have explicit primitives; R is bounded (both the
/// double and the simple pole cancel because φ₁(y_c) = 1 and φ₁'(y_c) = 0)
/// and is integrated on the column's graded mesh.
pub fn gamma_columns(p: &ShearProfile, col: &Phi1Column, ygrid: &[f64]) -> Result<GammaPair> {
    let yc = col.yc;
    let c = col.c;
    let duc = p.du(yc);
    let a = 1.0 / duc;
    let b1 = -p.d2u(yc) / (duc * duc * duc);
    let low_ok = yc >= 1e-8;
    let high_ok = yc <= 1.0 - 1e-8;

    // Bounded remainder R at the mesh nodes.
    let nodes = col.mesh.nodes();
    let n = nodes.len();
    let mut r = vec![0.0_f64; n];
    for i in 0..n {
        if i == col.anchor {
            continue;
        }
        let y = nodes[i];
        let w = y - yc;
        let m = col.slope[i];
        let wm = w * m;
        let du = p.du(y);
        let nval = 1.0 / (col.phi1[i] * col.phi1[i]) - du / duc;
        r[i] = nval / (wm * wm) - b1 * du / wm;
    }
    // R is continuous across y_c; fill the anchor from its neighbors.
    r[col.anchor] = match (col.anchor > 0, col.anchor + 1 < n) {
        (true, true) => 0.5 * (r[col.anchor - 1] + r[col.anchor + 1]),
        (true, false) => r[col.anchor - 1],
        _ => r[col.anchor + 1],
    };
    let r_from0 = col.mesh.cumulative(&r, 0);
    let r_total = r_from0[n - 1];

    let u0c = p.u(0.0) - c;
    let u1c = p.u(1.0) - c;
    let mut gamma0 = vec![f64::NAN; ygrid.len()];
    let mut gamma1 = vec![f64::NAN; ygrid.len()];
    for (i, &y) in ygrid.iter().enumerate() {
        let w = y - yc;
        if w.abs() <= 1e-13 {
            if low_ok {
                gamma0[i] = -a;
            }
            if high_ok {
                gamma1[i] = -a;
            }
            continue;
        }
        let m = p.mean_du(yc, y);
        let phi1y = col.phi1_at(y);
        let phiy = w * m * phi1y;
        let umc = w * m;
        if w < 0.0 && low_ok {
            let rint = col.mesh.interp(&r_from0, y);
            gamma0[i] = -a * (phi1y - phiy / u0c) + b1 * phiy * (umc / u0c).ln() + phiy * rint;
        }
        if w > 0.0 && high_ok {
            let rint = col.mesh.interp(&r_from0, y) - r_total;
            gamma1[i] = -a * (phi1y - phiy / u1c) + b1 * phiy * (umc / u1c).ln() + phiy * rint;
        }
    }
    Ok(GammaPair { gamma0, gamma1 })
}

/// Γ factors for (α, c) from scratch (solves the column internally).
pub fn gamma(p: &ShearProfile, alpha: f64, c: f64, ygrid: &[f64]) -> Result<GammaPair> {
    let col = solve_phi1(p, alpha, c, DEFAULT_TOL, default_max_terms(alpha))?;
    gamma_columns(p, &col, ygrid)
}

/// φ₁, 𝒯(φ₁), Γ₀, Γ₁ on the tensor (y, c) grid for one wavenumber, with the
/// c-grid taken as the image of the y-grid so every critical layer is a grid
/// node. Column k of the tensors corresponds to c = u(y_{k+1}) (interior
/// nodes only); row index runs over the y-grid.
#[derive(Debug, Clone)]
pub struct RayleighField {
    /// Modulus of the wavenumber.
    pub alpha: f64,
    /// Uniform y-grid of ny nodes on [0,1].
    pub ygrid: Vec<f64>,
    /// Image c-grid, c_k = u(y_k), including the endpoint values.
    pub cgrid: Vec<f64>,
    /// Solved columns for the interior c-nodes (k = 1..ny-1).
    pub columns: Vec<Phi1Column>,
    /// φ₁ on the tensor grid: `phi1[k][i]` = φ₁(y_i, c_{k+1}).
    pub phi1: Vec<Vec<f64>>,
    /// 𝒯(φ₁) on the tensor grid, same layout.
    pub tfac: Vec<Vec<f64>>,
    /// Γ₀ on the tensor grid (NaN for y > y_c), same layout.
    pub gamma0: Vec<Vec<f64>>,
    /// Γ₁ on the tensor grid (NaN for y < y_c), same layout.
    pub gamma1: Vec<Vec<f64>>,
}

impl RayleighField {
    /// Solve all interior columns in parallel and sample everything on the
    /// tensor grid.
    pub fn assemble(p: &ShearProfile, alpha: f64, ny: usize) -> Result<RayleighField> {
        assert!(ny >= 5);
        let ygrid: Vec<f64> = (0..ny).map(|i| i as f64 / (ny - 1) as f64).collect();
        let cgrid: Vec<f64> = ygrid.iter().map(|&y| p.u(y)).collect();
        let max_terms = default_max_terms(alpha);
        let columns: Vec<Phi1Column> = (1..ny - 1)
            .into_par_iter()
            .map(|k| solve_phi1(p, alpha, cgrid[k], DEFAULT_TOL, max_terms))
            .collect::<Result<Vec<_>>>()?;
        let mut phi1 = Vec::with_capacity(columns.len());
        let mut tfac = Vec::with_capacity(columns.len());
        let mut gamma0 = Vec::with_capacity(columns.len());
        let mut gamma1 = Vec::with_capacity(columns.len());
        for col in &columns {
            let gp = gamma_columns(p, col, &ygrid)?;
            phi1.push(ygrid.iter().map(|&y| col.phi1_at(y)).collect());
            tfac.push(ygrid.iter().map(|&y| col.tfac_at(y)).collect());
            gamma0.push(gp.gamma0);
            gamma1.push(gp.gamma1);
        }
        Ok(RayleighField {
            alpha: alpha.abs(),
            ygrid,
            cgrid,
            columns,
            phi1,
            tfac,
            gamma0,
            gamma1,
        })
    }

    /// Number of y-nodes.
    pub fn ny(&self) -> usize {
        self.ygrid.len()
    }

    /// Column for interior c-node index k (1-based into the c-grid).
    pub fn column(&self, k: usize) -> &Phi1Column {
        &self.columns[k - 1]
    }

    /// Γ(y_i, c_k) on the branch determined by the sign of u(y_i) - c_k:
    /// Γ₁ for c below u(y_i), Γ₀ above; the common limit on the diagonal.
    pub fn gamma_branch(&self, i: usize, k: usize) -> f64 {
        let col = k - 1;
        match i.cmp(&k) {
            std::cmp::Ordering::Greater => self.gamma1[col][i],
            std::cmp::Ordering::Less => self.gamma0[col][i],
            std::cmp::Ordering::Equal => {
                let g = self.gamma1[col][i];
                if g.is_nan() {
                    self.gamma0[col][i]
                } else {
                    g
                }
            }
        }
    }

    /// Serialize the field (header + raw little-endian f64 blocks).
    pub fn dump(&self, path: &std::path::Path, profile_hash: u64) -> Result<()> {
        use std::io::Write as _;
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(b"SHDRAYF1")?;
        f.write_all(&profile_hash.to_le_bytes())?;
        f.write_all(&self.alpha.to_le_bytes())?;
        f.write_all(&(self.ygrid.len() as u64).to_le_bytes())?;
        let wv = |f: &mut std::io::BufWriter<std::fs::File>, v: &[f64]| -> Result<()> {
            f.write_all(&(v.len() as u64).to_le_bytes())?;
            for x in v {
                f.write_all(&x.to_le_bytes())?;
            }
            Ok(())
        };
        wv(&mut f, &self.ygrid)?;
        wv(&mut f, &self.cgrid)?;
        f.write_all(&(self.columns.len() as u64).to_le_bytes())?;
        for (k, col) in self.columns.iter().enumerate() {
            f.write_all(&col.c.to_le_bytes())?;
            f.write_all(&col.yc.to_le_bytes())?;
            f.write_all(&(col.terms_used as u64).to_le_bytes())?;
            f.write_all(&col.residual.to_le_bytes())?;
            wv(&mut f, col.mesh.breaks())?;
            wv(&mut f, &col.phi1)?;
            wv(&mut f, &col.excess)?;
            wv(&mut f, &col.tfac)?;
            wv(&mut f, &col.slope)?;
            wv(&mut f, &self.phi1[k])?;
            wv(&mut f, &self.tfac[k])?;
            wv(&mut f, &self.gamma0[k])?;
            wv(&mut f, &self.gamma1[k])?;
        }
        Ok(())
    }

    /// Load a field dumped by [`RayleighField::dump`], validating the header
    /// against the expected profile hash, wavenumber, and grid size.
    pub fn load(
        path: &std::path::Path,
        profile_hash: u64,
        alpha: f64,
        ny: usize,
    ) -> Result<RayleighField> {
        use std::io::Read as _;
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut buf8 = [0u8; 8];
        let mut ru64 = |f: &mut std::io::BufReader<std::fs::File>| -> Result<u64> {
            f.read_exact(&mut buf8)?;
            Ok(u64::from_le_bytes(buf8))
        };
        let magic = ru64(&mut f)?;
        if magic != u64::from_le_bytes(*b"SHDRAYF1") {
            return Err(Error::ConfigError("not a field dump".into()));
        }
        let hash = ru64(&mut f)?;
        let alpha_stored = f64::from_bits(ru64(&mut f)?);
        let ny_stored = ru64(&mut f)? as usize;
        if hash != profile_hash || alpha_stored != alpha.abs() || ny_stored != ny {
            return Err(Error::ConfigError(format!(
                "field dump mismatch: hash {hash:#x} alpha {alpha_stored} ny {ny_stored}"
            )));
        }
        let rvec = |f: &mut std::io::BufReader<std::fs::File>| -> Result<Vec<f64>> {
            let mut b = [0u8; 8];
            f.read_exact(&mut b)?;
            let n = u64::from_le_bytes(b) as usize;
            let mut v = vec![0.0; n];
            for x in v.iter_mut() {
                f.read_exact(&mut b)?;
                *x = f64::from_le_bytes(b);
            }
            Ok(v)
        };
        let ygrid = rvec(&mut f)?;
        let cgrid = rvec(&mut f)?;
        let ncols = ru64(&mut f)? as usize;
        let mut columns = Vec::with_capacity(ncols);
        let mut phi1 = Vec::with_capacity(ncols);
        let mut tfac = Vec::with_capacity(ncols);
        let mut gamma0 = Vec::with_capacity(ncols);
        let mut gamma1 = Vec::with_capacity(ncols);
        for _ in 0..ncols {
            let c = f64::from_bits(ru64(&mut f)?);
            let yc = f64::from_bits(ru64(&mut f)?);
            let terms_used = ru64(&mut f)? as usize;
            let residual = f64::from_bits(ru64(&mut f)?);
            let breaks = rvec(&mut f)?;
            let mesh = PanelMesh::new(breaks);
            let anchor = mesh
                .find_break(yc)
                .map(|b| mesh.break_node(b))
                .ok_or_else(|| Error::ConfigError("corrupt dump: anchor lost".into()))?;
            let col_phi1 = rvec(&mut f)?;
            let excess = rvec(&mut f)?;
            let col_tfac = rvec(&mut f)?;
            let slope = rvec(&mut f)?;
            phi1.push(rvec(&mut f)?);
            tfac.push(rvec(&mut f)?);
            gamma0.push(rvec(&mut f)?);
            gamma1.push(rvec(&mut f)?);
            columns.push(Phi1Column {
                c,
                yc,
                alpha: alpha.abs(),
                mesh,
                anchor,
                phi1: col_phi1,
                excess,
                tfac: col_tfac,
                slope,
                terms_used,
                residual,
            });
        }
        Ok(RayleighField {
            alpha: alpha.abs(),
            ygrid,
            cgrid,
            columns,
            phi1,
            tfac,
            gamma0,
            gamma1,
        })
    }
}

// Re-exported so callers can build meshes compatible with column layout.
pub use crate::quadrature::uniform_grid;

#[allow(unused_imports)]
use crate::quadrature::lobatto7;
