//! Stagnation-point boundary-layer profile and the exact flow fields
//! built from it.
//!
//! The similarity profile f solves f''' + f f'' + 1 - f'^2 = 0 with
//! f(0) = f'(0) = 0 and f' -> 1 at infinity. The unknown curvature f''(0)
//! is found by shooting: a fixed-step fourth-order Runge-Kutta integration
//! combined with bisection and secant refinement of the far-field residual
//! f'(eta_max) - 1. The integration step is halved until the computed
//! f''(0) is stable to the requested tolerance.

use nalgebra::{Matrix2, Point2, Vector2};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OdeError {
    #[error("eta_max={0} too small, need at least 8 for a settled far field")]
    EtaMaxTooSmall(f64),
    #[error("tolerance {0} below supported range (need >= 1e-12)")]
    TolTooTight(f64),
    #[error("shooting bracket failure: residual has no sign change on [{lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64 },
    #[error("shooting did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("step refinement stalled at {steps} steps (last change {change:.3e})")]
    StepRefinementFailed { steps: usize, change: f64 },
}

/// One row of the tabulated profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSample {
    pub eta: f64,
    pub f: f64,
    pub fp: f64,
    pub fpp: f64,
}

/// Tabulated similarity profile with certified shooting data.
#[derive(Debug, Clone)]
pub struct HiemenzProfile {
    pub eta_max: f64,
    /// Spacing of the output table.
    pub step: f64,
    pub table: Vec<ProfileSample>,
    /// Wall curvature f''(0) found by the shooting solve.
    pub fpp0: f64,
    /// Displacement constant: f(eta) approaches eta - beta for large eta.
    pub beta: f64,
}

const MAX_SHOOT_ITERS: usize = 200;
// Off shots leave [0, 1] and then diverge; once f' crosses either band
// edge the departure direction already fixes the residual sign, and
// waiting longer would let the blowup flip it.
const FP_BAIL_LOW: f64 = -0.5;
const FP_BAIL_HIGH: f64 = 2.0;

/// Right-hand side of the first-order system (f, f', f'').
fn rhs(y: [f64; 3]) -> [f64; 3] {
    [y[1], y[2], y[1] * y[1] - y[0] * y[2] - 1.0]
}

fn rk4_step(y: [f64; 3], h: f64) -> [f64; 3] {
    let add = |a: [f64; 3], b: [f64; 3], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
    let k1 = rhs(y);
    let k2 = rhs(add(y, k1, 0.5 * h));
    let k3 = rhs(add(y, k2, 0.5 * h));
    let k4 = rhs(add(y, k3, h));
    let mut out = y;
    for i in 0..3 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrates from the wall with f''(0) = s over n steps, bailing out as
/// soon as f' leaves the guard band.
fn integrate(s: f64, eta_max: f64, n: usize, mut visit: impl FnMut(usize, [f64; 3])) -> [f64; 3] {
    let h = eta_max / n as f64;
    let mut y = [0.0, 0.0, s];
    visit(0, y);
    for k in 0..n {
        y = rk4_step(y, h);
        if !y[1].is_finite() {
            y[1] = FP_BAIL_LOW;
            return y;
        }
        if y[1] < FP_BAIL_LOW || y[1] > FP_BAIL_HIGH {
            return y;
        }
        visit(k + 1, y);
    }
    y
}

fn residual(s: f64, eta_max: f64, n: usize) -> f64 {
    integrate(s, eta_max, n, |_, _| {})[1] - 1.0
}

/// Shooting solve for f''(0) at a fixed step count.
fn shoot(eta_max: f64, n: usize, tol: f64) -> Result<f64, OdeError> {
    // The residual is increasing in s near the root; expand the bracket
    // until it straddles a sign change.
    let (mut lo, mut hi) = (1.0, 1.5);
    let mut r_lo = residual(lo, eta_max, n);
    let mut r_hi = residual(hi, eta_max, n);
    for _ in 0..8 {
        if r_lo.signum() != r_hi.signum() {
            break;
        }
        if r_lo > 0.0 {
            lo *= 0.5;
            r_lo = residual(lo, eta_max, n);
        } else {
            hi *= 2.0;
            r_hi = residual(hi, eta_max, n);
        }
    }
    if r_lo.signum() == r_hi.signum() {
        return Err(OdeError::BracketFailure { lo, hi });
    }

    let mut iters = 0;
    // Bisection narrows the bracket to a regime where the secant update is
    // safe, then the secant finishes quickly.
    while hi - lo > 1e-4 {
        iters += 1;
        if iters > MAX_SHOOT_ITERS {
            return Err(OdeError::NoConvergence(MAX_SHOOT_ITERS));
        }
        let mid = 0.5 * (lo + hi);
        let r_mid = residual(mid, eta_max, n);
        if r_mid.signum() == r_lo.signum() {
            lo = mid;
            r_lo = r_mid;
        } else {
            hi = mid;
            r_hi = r_mid;
        }
    }
    let (mut s0, mut r0) = (lo, r_lo);
    let (mut s1, mut r1) = (hi, r_hi);
    loop {
        iters += 1;
        if iters > MAX_SHOOT_ITERS {
            return Err(OdeError::NoConvergence(MAX_SHOOT_ITERS));
        }
        let s2 = s1 - r1 * (s1 - s0) / (r1 - r0);
        let r2 = residual(s2, eta_max, n);
        if r2.abs() < tol {
            return Ok(s2);
        }
        (s0, r0) = (s1, r1);
        (s1, r1) = (s2, r2);
        if (s1 - s0).abs() < f64::EPSILON * s1.abs() {
            return Err(OdeError::NoConvergence(iters));
        }
    }
}

/// Solves the similarity problem and tabulates (f, f', f'') on a uniform
/// grid over [0, eta_max].
pub fn solve_profile(eta_max: f64, tol: f64) -> Result<HiemenzProfile, OdeError> {
    if eta_max < 8.0 {
        return Err(OdeError::EtaMaxTooSmall(eta_max));
    }
    if tol < 1e-12 {
        return Err(OdeError::TolTooTight(tol));
    }

    // Halve the integration step until f''(0) is stable to tol.
    let mut n = (eta_max * 100.0).ceil() as usize;
    let mut fpp0 = shoot(eta_max, n, tol)?;
    let mut converged = false;
    let mut change = f64::INFINITY;
    for _ in 0..12 {
        let finer = shoot(eta_max, 2 * n, tol)?;
        change = (finer - fpp0).abs();
        n *= 2;
        fpp0 = finer;
        if change < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(OdeError::StepRefinementFailed { steps: n, change });
    }

    let step = eta_max / n as f64;
    let mut table = vec![ProfileSample { eta: 0.0, f: 0.0, fp: 0.0, fpp: fpp0 }; n + 1];
    integrate(fpp0, eta_max, n, |k, y| {
        table[k] = ProfileSample { eta: k as f64 * step, f: y[0], fp: y[1], fpp: y[2] };
    });
    let last = table[n];
    let beta = eta_max - last.f;
    Ok(HiemenzProfile { eta_max, step, table, fpp0, beta })
}

/// Cubic Hermite basis on [0, 1].
fn hermite(t: f64, y0: f64, d0: f64, y1: f64, d1: f64, h: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * d1
}

impl HiemenzProfile {
    /// Evaluates (f, f', f'') at `eta >= 0`.
    ///
    /// Inside the table: cubic Hermite interpolation, with each quantity
    /// using the next derivative as slope data (f''' recovered from the
    /// equation itself). Beyond the table: the far-field form
    /// f = eta - beta, f' = 1, f'' = 0.
    pub fn eval(&self, eta: f64) -> (f64, f64, f64) {
        assert!(eta >= 0.0, "profile evaluated at negative eta={eta}");
        if eta >= self.eta_max {
            return (eta - self.beta, 1.0, 0.0);
        }
        let k = ((eta / self.step) as usize).min(self.table.len() - 2);
        let a = self.table[k];
        let b = self.table[k + 1];
        let t = (eta - a.eta) / self.step;
        let fppp = |s: ProfileSample| s.fp * s.fp - s.f * s.fpp - 1.0;
        let f = hermite(t, a.f, a.fp, b.f, b.fp, self.step);
        let fp = hermite(t, a.fp, a.fpp, b.fp, b.fpp, self.step);
        let fpp = hermite(t, a.fpp, fppp(a), b.fpp, fppp(b), self.step);
        (f, fp, fpp)
    }
}

/// Physical parameters of the stagnation-point flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    /// Kinematic viscosity, positive.
    pub nu: f64,
    /// Strain-rate parameter, positive.
    pub a: f64,
    /// Pressure offset.
    pub p0: f64,
}

impl FlowParams {
    pub fn new(nu: f64, a: f64, p0: f64) -> Self {
        assert!(nu > 0.0 && a > 0.0, "need nu > 0 and a > 0, got nu={nu}, a={a}");
        FlowParams { nu, a, p0 }
    }
}

/// Exact velocity, pressure, gradient and convective forcing of the flow.
#[derive(Debug, Clone)]
pub struct ExactFields {
    pub params: FlowParams,
    pub profile: HiemenzProfile,
    /// Boundary-layer width 2.4 sqrt(nu / a).
    pub delta: f64,
}

impl ExactFields {
    pub fn new(params: FlowParams, profile: HiemenzProfile) -> Self {
        let delta = 2.4 * (params.nu / params.a).sqrt();
        ExactFields { params, profile, delta }
    }

    fn eta(&self, y: f64) -> f64 {
        assert!(y >= 0.0, "fields evaluated below the wall, y={y}");
        (self.params.a / self.params.nu).sqrt() * y
    }

    /// u = (a x f', -sqrt(a nu) f).
    pub fn velocity(&self, p: Point2<f64>) -> Vector2<f64> {
        let FlowParams { nu, a, .. } = self.params;
        let (f, fp, _) = self.profile.eval(self.eta(p.y));
        Vector2::new(a * p.x * fp, -(a * nu).sqrt() * f)
    }

    /// p = p0 - a^2/2 (x^2 + (2 nu / a)(f' + f^2 / 2)).
    pub fn pressure(&self, p: Point2<f64>) -> f64 {
        let FlowParams { nu, a, p0 } = self.params;
        let (f, fp, _) = self.profile.eval(self.eta(p.y));
        p0 - 0.5 * a * a * (p.x * p.x + 2.0 * nu / a * (fp + 0.5 * f * f))
    }

    /// Jacobian of the velocity; the trace cancels identically because both
    /// diagonal entries come from the same profile evaluation.
    pub fn gradient(&self, p: Point2<f64>) -> Matrix2<f64> {
        let FlowParams { nu, a, .. } = self.params;
        let (_, fp, fpp) = self.profile.eval(self.eta(p.y));
        Matrix2::new(a * fp, a * p.x * fpp * (a / nu).sqrt(), 0.0, -a * fp)
    }

    /// Closed form of -(u . grad) u.
    pub fn forcing(&self, p: Point2<f64>) -> Vector2<f64> {
        let FlowParams { nu, a, .. } = self.params;
        let (f, fp, fpp) = self.profile.eval(self.eta(p.y));
        Vector2::new(-a * a * p.x * (fp * fp - f * fpp), -a * (a * nu).sqrt() * f * fp)
    }
}
