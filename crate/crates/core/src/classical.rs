//! Classical Hamiltonian ray flow `X' = P, P' = -V'(X)` with variational
//! Jacobians, caustic-onset detection, flow inversion and the pre-caustic
//! single-phase WKB reconstruction.

use num_complex::Complex64;

use crate::potential::Potential;
use crate::wkb::{Amplitude, Phase};
use crate::{CoreError, Result};

/// One point of the ray flow: seed `y`, position `x = X(t,y)`, momentum
/// `p = P(t,y)` and the Jacobian `jac = dX/dy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSample {
    pub t: f64,
    pub y: f64,
    pub x: f64,
    pub p: f64,
    pub jac: f64,
}

/// Caustic onset found by scanning the Jacobian over a `(y, t)` window.
/// `t_star` is `f64::INFINITY` when no ray focuses inside the window.
#[derive(Debug, Clone, Copy)]
pub struct CausticReport {
    pub t_star: f64,
    pub x_star: f64,
    pub y_star: f64,
    pub y_window: (f64, f64),
    pub t_window: (f64, f64),
}

impl CausticReport {
    pub fn has_caustic(&self) -> bool {
        self.t_star.is_finite()
    }
}

/// Free flow in closed form: `X = y + t S0'(y)`, `P = S0'(y)`,
/// `jac = 1 + t S0''(y)`.
pub fn flow_free(t: f64, y: f64, s0: &Phase) -> FlowSample {
    let g = s0.grad(y);
    FlowSample { t, y, x: y + t * g, p: g, jac: 1.0 + t * s0.hess(y) }
}

// state = (x, p, jac_x, jac_p, action)
fn rhs(state: [f64; 5], v: &Potential) -> [f64; 5] {
    let [x, p, dx, dp, _] = state;
    [p, -v.grad(x), dp, -v.hess(x) * dx, 0.5 * p * p - v.eval(x)]
}

fn rk4_step(state: [f64; 5], h: f64, v: &Potential) -> [f64; 5] {
    let k1 = rhs(state, v);
    let mid1 = add_scaled(state, &k1, h / 2.0);
    let k2 = rhs(mid1, v);
    let mid2 = add_scaled(state, &k2, h / 2.0);
    let k3 = rhs(mid2, v);
    let end = add_scaled(state, &k3, h);
    let k4 = rhs(end, v);
    let mut out = state;
    for i in 0..5 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn add_scaled(a: [f64; 5], b: &[f64; 5], s: f64) -> [f64; 5] {
    let mut out = a;
    for i in 0..5 {
        out[i] += s * b[i];
    }
    out
}

fn initial_state(y: f64, s0: &Phase) -> [f64; 5] {
    [y, s0.grad(y), 1.0, s0.hess(y), 0.0]
}

fn sample_of(t: f64, y: f64, state: [f64; 5]) -> FlowSample {
    FlowSample { t, y, x: state[0], p: state[1], jac: state[2] }
}

/// RK4 integration of the flow augmented with the variational equations
/// (`jac` by the variational ODE, not divided differences) and the action
/// integral `int (p^2/2 - V) dtau` accumulated on the same mesh. Returns the
/// flow sample and the action.
pub fn flow_with_action(
    t: f64,
    y: f64,
    s0: &Phase,
    v: &Potential,
    dt: f64,
) -> Result<(FlowSample, f64)> {
    if !(dt > 0.0) {
        return Err(CoreError::BadConfig(format!("ray step must be positive, got {dt}")));
    }
    if t < 0.0 {
        return Err(CoreError::Invalid("ray flow is integrated for t >= 0".into()));
    }
    let mut state = initial_state(y, s0);
    if t > 0.0 {
        let steps = (t / dt).ceil().max(1.0) as usize;
        let h = t / steps as f64;
        for i in 0..steps {
            state = rk4_step(state, h, v);
            if state.iter().any(|s| !s.is_finite()) {
                return Err(CoreError::NonFinite {
                    context: format!("ray flow from y = {y} at t = {}", (i + 1) as f64 * h),
                });
            }
        }
    }
    Ok((sample_of(t, y, state), state[4]))
}

/// Same integration as [`flow_with_action`].
pub fn flow_ode(t: f64, y: f64, s0: &Phase, v: &Potential, dt: f64) -> Result<FlowSample> {
    flow_with_action(t, y, s0, v, dt).map(|(s, _)| s)
}

/// Integrates one ray once and samples it at every requested time
/// (`times` ascending, all `>= 0`).
pub fn flow_path(
    y: f64,
    s0: &Phase,
    v: &Potential,
    times: &[f64],
    dt: f64,
) -> Result<Vec<(FlowSample, f64)>> {
    if !(dt > 0.0) {
        return Err(CoreError::BadConfig(format!("ray step must be positive, got {dt}")));
    }
    let mut out = Vec::with_capacity(times.len());
    let mut state = initial_state(y, s0);
    let mut t_cur = 0.0;
    for &t in times {
        if t < t_cur - 1e-12 {
            return Err(CoreError::Invalid("flow_path requires ascending times".into()));
        }
        let span = t - t_cur;
        if span > 1e-15 {
            let steps = (span / dt).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            for _ in 0..steps {
                state = rk4_step(state, h, v);
            }
            if state.iter().any(|s| !s.is_finite()) {
                return Err(CoreError::NonFinite { context: format!("ray flow from y = {y}") });
            }
            t_cur = t;
        }
        out.push((sample_of(t, y, state), state[4]));
    }
    Ok(out)
}

const SCAN_SEEDS: usize = 400;
const SCAN_TIMES: usize = 400;
const T_STAR_TOL: f64 = 1e-4;

/// Scans the Jacobian on a `(t, y)` lattice (400 x 400 by default), bisects
/// the first sign change in `t` for the minimizing seeds and reports the
/// caustic onset. `t_star` is accurate to about `1e-3`; the sentinel
/// `f64::INFINITY` is returned when no sign change occurs in the window.
pub fn caustic_onset(
    s0: &Phase,
    v: &Potential,
    y_window: (f64, f64),
    t_window: (f64, f64),
) -> Result<CausticReport> {
    let (y_lo, y_hi) = y_window;
    let (t_lo, t_hi) = t_window;
    if !(y_hi > y_lo) || !(t_hi > t_lo) || t_lo < 0.0 {
        return Err(CoreError::Invalid("caustic scan windows must be finite and ordered".into()));
    }
    let free = v.is_zero();
    let ray_dt = (t_hi - t_lo).max(t_hi) / (4.0 * SCAN_TIMES as f64);
    let t_at = |i: usize| t_lo + (t_hi - t_lo) * i as f64 / (SCAN_TIMES - 1) as f64;
    let y_at = |i: usize| y_lo + (y_hi - y_lo) * i as f64 / (SCAN_SEEDS - 1) as f64;

    let jac_at = |t: f64, y: f64| -> Result<f64> {
        if free {
            Ok(1.0 + t * s0.hess(y))
        } else {
            Ok(flow_ode(t, y, s0, v, ray_dt)?.jac)
        }
    };

    // first sign-change time per seed, refined by bisection
    let first_cross = |y: f64| -> Result<Option<f64>> {
        let jacs: Vec<f64> = if free {
            (0..SCAN_TIMES).map(|i| 1.0 + t_at(i) * s0.hess(y)).collect()
        } else {
            let times: Vec<f64> = (0..SCAN_TIMES).map(t_at).collect();
            flow_path(y, s0, v, &times, ray_dt)?.into_iter().map(|(s, _)| s.jac).collect()
        };
        if jacs[0] <= 0.0 {
            return Err(CoreError::Invalid(format!(
                "jacobian is not positive at the window start (y = {y})"
            )));
        }
        let Some(i) = (0..SCAN_TIMES - 1).find(|&i| jacs[i] > 0.0 && jacs[i + 1] <= 0.0) else {
            return Ok(None);
        };
        let (mut a, mut b) = (t_at(i), t_at(i + 1));
        while b - a > T_STAR_TOL {
            let mid = 0.5 * (a + b);
            if jac_at(mid, y)? > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(Some(0.5 * (a + b)))
    };

    let mut best: Option<(f64, f64)> = None; // (t, y)
    let mut crossings = vec![None; SCAN_SEEDS];
    for (i, slot) in crossings.iter_mut().enumerate() {
        let y = y_at(i);
        if let Some(t) = first_cross(y)? {
            *slot = Some(t);
            if best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, y));
            }
        }
    }

    let Some((mut t_star, mut y_star)) = best else {
        return Ok(CausticReport {
            t_star: f64::INFINITY,
            x_star: f64::NAN,
            y_star: f64::NAN,
            y_window,
            t_window,
        });
    };

    // parabolic polish of the minimizing seed when its neighbours crossed too
    let idx = ((y_star - y_lo) / (y_hi - y_lo) * (SCAN_SEEDS - 1) as f64).round() as usize;
    if idx > 0 && idx + 1 < SCAN_SEEDS {
        if let (Some(tm), Some(tp)) = (crossings[idx - 1], crossings[idx + 1]) {
            let dy = y_at(1) - y_at(0);
            let denom = tm - 2.0 * t_star + tp;
            if denom > 0.0 {
                let shift = 0.5 * (tm - tp) / denom;
                if shift.abs() < 1.0 {
                    let y_ref = y_star + shift * dy;
                    if let Ok(Some(t_ref)) = first_cross(y_ref) {
                        if t_ref < t_star {
                            t_star = t_ref;
                            y_star = y_ref;
                        }
                    }
                }
            }
        }
    }

    let x_star = if free {
        flow_free(t_star, y_star, s0).x
    } else {
        flow_ode(t_star, y_star, s0, v, ray_dt)?.x
    };
    Ok(CausticReport { t_star, x_star, y_star, y_window, t_window })
}

const INVERT_RESIDUAL: f64 = 1e-10;

/// Pre-caustic inversion of the flow map: the unique `y` with `X(t,y) = x`,
/// by expanding bracket, bisection and Newton polish. Fails when the flow is
/// no longer one-to-one near `x` (past caustic onset).
pub fn invert_flow(t: f64, x: f64, s0: &Phase, v: &Potential, dt: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(x);
    }
    let free = v.is_zero();
    let eval = |y: f64| -> Result<FlowSample> {
        if free {
            Ok(flow_free(t, y, s0))
        } else {
            flow_ode(t, y, s0, v, dt)
        }
    };
    let g = |y: f64| -> Result<f64> { Ok(eval(y)?.x - x) };

    let mut lo = x - 1.0 - t.abs();
    let mut hi = x + 1.0 + t.abs();
    let mut span = hi - lo;
    for _ in 0..60 {
        if g(lo)? < 0.0 {
            break;
        }
        lo -= span;
        span *= 2.0;
    }
    let mut span = hi - lo;
    for _ in 0..60 {
        if g(hi)? > 0.0 {
            break;
        }
        hi += span;
        span *= 2.0;
    }
    let (glo, ghi) = (g(lo)?, g(hi)?);
    if !(glo < 0.0 && ghi > 0.0) {
        return Err(CoreError::InversionFailed {
            time: t,
            x,
            reason: "flow map orientation is reversed; past caustic onset".into(),
        });
    }

    // reject multi-valued regions: more than one sign change across the bracket
    let scan = 128;
    let mut changes = 0;
    let mut prev = glo;
    for i in 1..=scan {
        let y = lo + (hi - lo) * i as f64 / scan as f64;
        let val = g(y)?;
        if prev < 0.0 && val >= 0.0 || prev >= 0.0 && val < 0.0 {
            changes += 1;
        }
        prev = val;
    }
    if changes > 1 {
        return Err(CoreError::InversionFailed {
            time: t,
            x,
            reason: format!("{changes} preimages found; past caustic onset"),
        });
    }

    let (mut a, mut b) = (lo, hi);
    let mut y = 0.5 * (a + b);
    for _ in 0..200 {
        y = 0.5 * (a + b);
        let val = g(y)?;
        if val.abs() <= INVERT_RESIDUAL {
            break;
        }
        if val < 0.0 {
            a = y;
        } else {
            b = y;
        }
        if b - a < 1e-15 * (1.0 + y.abs()) {
            break;
        }
    }
    // Newton polish using the variational jacobian
    for _ in 0..4 {
        let s = eval(y)?;
        let val = s.x - x;
        if val.abs() <= INVERT_RESIDUAL || s.jac.abs() < 1e-12 {
            break;
        }
        y -= val / s.jac;
    }
    let s = eval(y)?;
    if (s.x - x).abs() > INVERT_RESIDUAL {
        return Err(CoreError::InversionFailed {
            time: t,
            x,
            reason: format!("residual {:.3e} above tolerance", (s.x - x).abs()),
        });
    }
    if s.jac <= 1e-8 {
        return Err(CoreError::CausticReached { time: t, jac: s.jac });
    }
    Ok(y)
}

/// Pre-caustic WKB phase `S(t,x) = S0(Y) + int (p^2/2 - V) dtau` along the
/// characteristic through `(t,x)`; the free case uses the closed form
/// `S0(Y) + (t/2) S0'(Y)^2`.
pub fn wkb_phase(t: f64, x: f64, s0: &Phase, v: &Potential, dt: f64) -> Result<f64> {
    let y = invert_flow(t, x, s0, v, dt)?;
    if v.is_zero() {
        let g = s0.grad(y);
        Ok(s0.value(y) + 0.5 * t * g * g)
    } else {
        let (_, action) = flow_with_action(t, y, s0, v, dt)?;
        Ok(s0.value(y) + action)
    }
}

/// Pre-caustic WKB amplitude `a(t,x) = a0(Y) / sqrt(J_t(Y))`.
pub fn wkb_amplitude(
    t: f64,
    x: f64,
    a0: &Amplitude,
    s0: &Phase,
    v: &Potential,
    dt: f64,
) -> Result<Complex64> {
    let y = invert_flow(t, x, s0, v, dt)?;
    let jac = jac_at(t, y, s0, v, dt)?;
    if jac <= 0.0 {
        return Err(CoreError::CausticReached { time: t, jac });
    }
    Ok(Complex64::new(a0.eval(y) / jac.sqrt(), 0.0))
}

/// Pre-caustic WKB density `rho(t,x) = rho0(Y) / J_t(Y)` with `rho0 = a0^2`.
pub fn wkb_density(
    t: f64,
    x: f64,
    a0: &Amplitude,
    s0: &Phase,
    v: &Potential,
    dt: f64,
) -> Result<f64> {
    let y = invert_flow(t, x, s0, v, dt)?;
    let jac = jac_at(t, y, s0, v, dt)?;
    if jac <= 0.0 {
        return Err(CoreError::CausticReached { time: t, jac });
    }
    let a = a0.eval(y);
    Ok(a * a / jac)
}

fn jac_at(t: f64, y: f64, s0: &Phase, v: &Potential, dt: f64) -> Result<f64> {
    if v.is_zero() {
        Ok(1.0 + t * s0.hess(y))
    } else {
        Ok(flow_ode(t, y, s0, v, dt)?.jac)
    }
}
