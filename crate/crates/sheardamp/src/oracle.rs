//! Independent reference solver: method-of-lines integration of
//!
//! ```text
//! ∂_t ω̂ + iαu ω̂ + iα u'' ψ̂ = 0,      (α² - ∂_y²) ψ̂ = ω̂,    ψ̂(0) = ψ̂(1) = 0,
//! ```
//!
//! with banded finite-difference elliptic inversion and a classical RK4
//! update re-solving ψ̂ at every stage. Nothing here touches the panel
//! quadrature or the Rayleigh machinery: the representation path and this
//! stepper meet only in the comparison, which is what makes their agreement
//! evidence. Steps are fixed-size (chosen from an explicit accuracy and
//! stability budget), so a trajectory is bit-reproducible run to run.

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::profile::ShearProfile;

// ---------------------------------------------------------------------------
// Elliptic inversion
// ---------------------------------------------------------------------------

/// Spatial order of the elliptic discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EllipticOrder {
    /// Standard 3-point Laplacian, O(h²).
    Second,
    /// Numerov-type compact 3-point scheme, O(h⁴).
    FourthCompact,
}

/// Cached tridiagonal factorization of (α² - D₂) on the interior of a
/// uniform grid with Dirichlet ends, reused across solves and RK4 stages.
#[derive(Debug, Clone)]
pub struct EllipticSolver {
    alpha: f64,
    ny: usize,
    h: f64,
    order: EllipticOrder,
    // Thomas factorization: lower multipliers and modified pivots of the
    // tridiagonal (sub, diag, sup) system on the ny-2 interior unknowns.
    sub: f64,
    sup: f64,
    mult: Vec<f64>,
    pivot: Vec<f64>,
}

impl EllipticSolver {
    /// Factor the operator for an ny-node grid on [0, 1].
    pub fn new(alpha: f64, ny: usize, order: EllipticOrder) -> Result<EllipticSolver> {
        assert!(ny >= 5);
        let h = 1.0 / (ny - 1) as f64;
        let a2 = alpha * alpha;
        let (sub, diag, sup) = match order {
            EllipticOrder::Second => {
                let s = -1.0 / (h * h);
                (s, a2 + 2.0 / (h * h), s)
            }
            EllipticOrder::FourthCompact => {
                // Numerov: ψ_{i-1} - 2ψ_i + ψ_{i+1}
                //   - (α²h²/12)(ψ_{i-1} + 10ψ_i + ψ_{i+1})
                //   = -(h²/12)(ω_{i-1} + 10ω_i + ω_{i+1}),
                // scaled by -1/h² to keep the pivots positive.
                let q = a2 * h * h / 12.0;
                let s = (-1.0 + q) / (h * h);
                (s, (2.0 + 10.0 * q) / (h * h), s)
            }
        };
        let n = ny - 2;
        let mut mult = vec![0.0; n];
        let mut pivot = vec![0.0; n];
        pivot[0] = diag;
        for i in 1..n {
            if pivot[i - 1].abs() <= f64::EPSILON * diag.abs() {
                return Err(Error::SingularSystem { row: i - 1 });
            }
            mult[i] = sub / pivot[i - 1];
            pivot[i] = diag - mult[i] * sup;
        }
        if pivot[n - 1].abs() <= f64::EPSILON * diag.abs() {
            return Err(Error::SingularSystem { row: n - 1 });
        }
        Ok(EllipticSolver {
            alpha,
            ny,
            h,
            order,
            sub,
            sup,
            mult,
            pivot,
        })
    }

    /// Solve (α² - D₂)ψ̂ = ω̂ with homogeneous Dirichlet values; input and
    /// output live on the full grid, with ψ̂ ends exactly zero.
    pub fn solve(&self, omega: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(omega.len(), self.ny);
        let n = self.ny - 2;
        let mut rhs: Vec<Complex64> = match self.order {
            EllipticOrder::Second => omega[1..self.ny - 1].to_vec(),
            EllipticOrder::FourthCompact => (1..self.ny - 1)
                .map(|i| (omega[i - 1] + omega[i] * 10.0 + omega[i + 1]) * (1.0 / 12.0))
                .collect(),
        };
        for i in 1..n {
            let m = self.mult[i];
            rhs[i] = rhs[i] - rhs[i - 1] * m;
        }
        let mut psi = vec![Complex64::zero(); self.ny];
        psi[n] = rhs[n - 1] * (1.0 / self.pivot[n - 1]);
        for i in (0..n - 1).rev() {
            psi[i + 1] = (rhs[i] - psi[i + 2] * self.sup) * (1.0 / self.pivot[i]);
        }
        psi
    }

    /// Largest interior residual of the discrete system for a (ψ̂, ω̂) pair:
    /// exact-inverse certification.
    pub fn residual(&self, psi: &[Complex64], omega: &[Complex64]) -> f64 {
        assert_eq!(psi.len(), self.ny);
        assert_eq!(omega.len(), self.ny);
        let mut worst = 0.0_f64;
        for i in 1..self.ny - 1 {
            let lhs = psi[i - 1] * self.sub + psi[i] * self.diag_value() + psi[i + 1] * self.sup;
            let rhs = match self.order {
                EllipticOrder::Second => omega[i],
                EllipticOrder::FourthCompact => {
                    (omega[i - 1] + omega[i] * 10.0 + omega[i + 1]) * (1.0 / 12.0)
                }
            };
            worst = worst.max((lhs - rhs).norm());
        }
        worst
    }

    fn diag_value(&self) -> f64 {
        let a2 = self.alpha * self.alpha;
        match self.order {
            EllipticOrder::Second => a2 + 2.0 / (self.h * self.h),
            EllipticOrder::FourthCompact => {
                (2.0 + 10.0 * a2 * self.h * self.h / 12.0) / (self.h * self.h)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Time stepping
// ---------------------------------------------------------------------------

/// One mode marching in time: the vorticity samples, the clock, and the
/// cached elliptic factorization.
#[derive(Debug, Clone)]
pub struct StepperState {
    /// Signed wavenumber.
    pub alpha: f64,
    /// Uniform y-grid.
    pub ygrid: Vec<f64>,
    /// ω̂ at the grid nodes.
    pub omega_hat: Vec<Complex64>,
    /// Current time.
    pub time: f64,
    /// Last step size used (0 before the first step).
    pub dt: f64,
    /// Discrete ‖ω̂‖_{L²} at construction, the drift reference.
    pub energy0: f64,
    solver: EllipticSolver,
    u_vals: Vec<f64>,
    d2u_vals: Vec<f64>,
}

impl StepperState {
    /// Set up a trajectory from nodal initial data.
    pub fn new(
        p: &ShearProfile,
        alpha: f64,
        omega0: Vec<Complex64>,
        order: EllipticOrder,
    ) -> Result<StepperState> {
        assert!(alpha != 0.0);
        let ny = omega0.len();
        let ygrid: Vec<f64> = (0..ny).map(|i| i as f64 / (ny - 1) as f64).collect();
        let solver = EllipticSolver::new(alpha.abs(), ny, order)?;
        let u_vals = ygrid.iter().map(|&y| p.u(y)).collect();
        let d2u_vals = ygrid.iter().map(|&y| p.d2u(y)).collect();
        let mut state = StepperState {
            alpha,
            ygrid,
            omega_hat: omega0,
            time: 0.0,
            dt: 0.0,
            energy0: 0.0,
            solver,
            u_vals,
            d2u_vals,
        };
        state.energy0 = state.energy();
        Ok(state)
    }

    /// Stability budget for RK4 on the advection part: 2.8/(|α|·max|u|).
    pub fn stability_budget(&self) -> f64 {
        let umax = self
            .u_vals
            .iter()
            .fold(0.0_f64, |m, &v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        2.8 / (self.alpha.abs() * umax)
    }

    /// ψ̂ for the current vorticity.
    pub fn psi_hat(&self) -> Vec<Complex64> {
        self.solver.solve(&self.omega_hat)
    }

    /// Discrete ‖ω̂‖_{L²} (composite Simpson; odd node counts only).
    pub fn energy(&self) -> f64 {
        let n = self.omega_hat.len();
        assert!(n % 2 == 1);
        let h = 1.0 / (n - 1) as f64;
        let mut acc = self.omega_hat[0].norm_sqr() + self.omega_hat[n - 1].norm_sqr();
        for (i, v) in self.omega_hat.iter().enumerate().take(n - 1).skip(1) {
            acc += v.norm_sqr() * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        (acc * h / 3.0).sqrt()
    }

    /// Relative drift of the discrete energy since construction.
    pub fn energy_drift(&self) -> f64 {
        if self.energy0 == 0.0 {
            0.0
        } else {
            (self.energy() - self.energy0).abs() / self.energy0
        }
    }

    fn rhs(&self, omega: &[Complex64]) -> Vec<Complex64> {
        let psi = self.solver.solve(omega);
        let ia = Complex64::new(0.0, -self.alpha);
        (0..omega.len())
            .map(|i| ia * (omega[i] * self.u_vals[i] + psi[i] * self.d2u_vals[i]))
            .collect()
    }

    /// One classical RK4 step, ψ̂ re-solved at each of the four stages.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        let budget = self.stability_budget();
        if dt > budget * (1.0 + 1e-12) {
            return Err(Error::StepTooLarge { dt, budget });
        }
        let n = self.omega_hat.len();
        let y0 = self.omega_hat.clone();
        let k1 = self.rhs(&y0);
        let stage = |base: &[Complex64], k: &[Complex64], f: f64| -> Vec<Complex64> {
            (0..n).map(|i| base[i] + k[i] * f).collect()
        };
        let k2 = self.rhs(&stage(&y0, &k1, 0.5 * dt));
        let k3 = self.rhs(&stage(&y0, &k2, 0.5 * dt));
        let k4 = self.rhs(&stage(&y0, &k3, dt));
        for i in 0..n {
            self.omega_hat[i] = y0[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
        }
        self.time += dt;
        self.dt = dt;
        Ok(())
    }
}

/// One recorded instant of a trajectory.
#[derive(Debug, Clone)]
pub struct TrajectorySample {
    /// Sample time.
    pub t: f64,
    /// ω̂ at the sample.
    pub omega_hat: Vec<Complex64>,
    /// ψ̂ at the sample.
    pub psi_hat: Vec<Complex64>,
}

/// March the state through the ascending `samples`, recording ω̂ and ψ̂ at
/// each. The step is fixed per segment: the base step comes from the
/// accuracy heuristic (|α| max|u| dt)⁴ ≤ tol capped by the stability
/// budget, then each inter-sample gap is divided into the smallest whole
/// number of equal steps — deterministic and bit-reproducible.
pub fn evolve_to(
    state: &mut StepperState,
    samples: &[f64],
    tol: f64,
) -> Result<Vec<TrajectorySample>> {
    assert!(tol > 0.0);
    let budget = state.stability_budget();
    let umax = 2.8 / budget; // |α|·max|u| back out of the budget
    let base_dt = (tol.powf(0.25) / umax).min(budget);
    let mut out = Vec::with_capacity(samples.len());
    for &target in samples {
        assert!(
            target >= state.time - 1e-12,
            "sample times must be ascending from the current time"
        );
        let gap = target - state.time;
        if gap > 1e-14 {
            let nsteps = (gap / base_dt).ceil().max(1.0) as usize;
            let dt = gap / nsteps as f64;
            for _ in 0..nsteps {
                state.step(dt)?;
            }
            state.time = target; // absorb roundoff from repeated addition
        }
        out.push(TrajectorySample {
            t: target,
            omega_hat: state.omega_hat.clone(),
            psi_hat: state.psi_hat(),
        });
    }
    Ok(out)
}
