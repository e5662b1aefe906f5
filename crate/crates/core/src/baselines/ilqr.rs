//! Iterative LQR on the continuous-control relaxation, with central finite
//! differences for every derivative.
//!
//! The rollout cost charges `l(x_T, u_{T-1}) dt + c_f(x_T)` at the end, so the
//! last stage is differentiated as a whole:
//! `c_{T-1}(x, u) = l(x, u) dt + l(f(x, u), u) dt + c_f(f(x, u))`, with a zero
//! value function after it.

use nalgebra::{DMatrix, DVector};

use super::{BaselineConfig, IlqrSettings};
use crate::error::SolveError;
use crate::solvers::{controls_cost, evaluate_controls};
use crate::systems::{ControlSystem, VectorState};

#[derive(Clone, Debug, PartialEq)]
pub struct IlqrResult {
    pub controls: Vec<f64>,
    pub cost: f64,
    pub initial_cost: f64,
    /// Cost after each accepted iteration.
    pub cost_history: Vec<f64>,
    /// Backward passes attempted, accepted or not.
    pub iterations: usize,
    /// The regularization ladder ran out without an improving step.
    pub converged: bool,
    /// A backward pass stayed indefinite at maximum regularization, or the
    /// derivatives were not finite. The result is the best seen.
    pub regularization_failed: bool,
}

fn fd_step(v: f64, relative: f64, floor: f64) -> f64 {
    (relative * v.abs()).max(floor)
}

/// `(A, B)` with `A = df/dx`, `B = df/du` by central differences with steps
/// `max(relative |v|, floor)`.
pub fn fd_jacobians<S>(
    system: &S,
    x: &S::State,
    k: usize,
    u: f64,
    relative: f64,
    floor: f64,
) -> Result<(DMatrix<f64>, DVector<f64>), SolveError>
where
    S: ControlSystem,
    S::State: VectorState,
{
    let base = x.as_slice();
    let n = base.len();
    let mut a = DMatrix::zeros(n, n);
    let mut probe = base.to_vec();
    for j in 0..n {
        let h = fd_step(base[j], relative, floor);
        probe[j] = base[j] + h;
        let plus = system.step_control(&S::State::from_slice(&probe), k, u)?;
        probe[j] = base[j] - h;
        let minus = system.step_control(&S::State::from_slice(&probe), k, u)?;
        let width = (base[j] + h) - (base[j] - h);
        probe[j] = base[j];
        for i in 0..n {
            a[(i, j)] = (plus.as_slice()[i] - minus.as_slice()[i]) / width;
        }
    }
    let h = fd_step(u, relative, floor);
    let plus = system.step_control(x, k, u + h)?;
    let minus = system.step_control(x, k, u - h)?;
    let width = (u + h) - (u - h);
    let b = DVector::from_fn(n, |i, _| (plus.as_slice()[i] - minus.as_slice()[i]) / width);
    Ok((a, b))
}

/// Gradient and Hessian of `f` at `z` by central differences.
fn fd_quadratic(f: &dyn Fn(&[f64]) -> f64, z: &[f64], s: &IlqrSettings) -> (DVector<f64>, DMatrix<f64>) {
    let d = z.len();
    let f0 = f(z);
    let mut p = z.to_vec();
    let eval = |p: &mut Vec<f64>, i: usize, di: f64, j: usize, dj: f64| {
        p[i] += di;
        p[j] += dj;
        let v = f(p);
        p[i] = z[i];
        p[j] = z[j];
        v
    };
    let mut g = DVector::zeros(d);
    let mut h = DMatrix::zeros(d, d);
    let steps: Vec<f64> = z.iter().map(|v| s.fd_hessian * v.abs().max(1.0)).collect();
    for i in 0..d {
        let gi = fd_step(z[i], s.fd_relative, s.fd_floor);
        g[i] = (eval(&mut p, i, gi, i, 0.0) - eval(&mut p, i, -gi, i, 0.0)) / (2.0 * gi);
        let hi = steps[i];
        h[(i, i)] = (eval(&mut p, i, hi, i, 0.0) - 2.0 * f0 + eval(&mut p, i, -hi, i, 0.0)) / (hi * hi);
        for j in 0..i {
            let hj = steps[j];
            let v = (eval(&mut p, i, hi, j, hj) - eval(&mut p, i, hi, j, -hj) - eval(&mut p, i, -hi, j, hj)
                + eval(&mut p, i, -hi, j, -hj))
                / (4.0 * hi * hj);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    (g, h)
}

struct Linearization {
    a: Vec<DMatrix<f64>>,
    b: Vec<DVector<f64>>,
    /// Gradient and Hessian of the stage cost in `(x, u)`.
    g: Vec<DVector<f64>>,
    h: Vec<DMatrix<f64>>,
}

fn linearize<S>(system: &S, states: &[S::State], controls: &[f64], s: &IlqrSettings) -> Result<Linearization, SolveError>
where
    S: ControlSystem,
    S::State: VectorState,
{
    let t = controls.len();
    let dt = system.dt();
    let n = states[0].as_slice().len();
    let mut lin = Linearization {
        a: Vec::with_capacity(t),
        b: Vec::with_capacity(t),
        g: Vec::with_capacity(t),
        h: Vec::with_capacity(t),
    };
    for k in 0..t {
        let (a, b) = fd_jacobians(system, &states[k], k, controls[k], s.fd_relative, s.fd_floor)?;
        let last = k + 1 == t;
        let cost = |z: &[f64]| -> f64 {
            let x = S::State::from_slice(&z[..n]);
            let u = z[n];
            let run = || -> Result<f64, crate::error::SystemError> {
                let mut c = system.stage_cost_control(&x, u)? * dt;
                if last {
                    let next = system.step_control(&x, k, u)?;
                    c += system.stage_cost_control(&next, u)? * dt + system.terminal_cost(&next)?;
                }
                Ok(c)
            };
            run().unwrap_or(f64::INFINITY)
        };
        let mut z = states[k].as_slice().to_vec();
        z.push(controls[k]);
        let (g, h) = fd_quadratic(&cost, &z, s);
        lin.a.push(a);
        lin.b.push(b);
        lin.g.push(g);
        lin.h.push(h);
    }
    Ok(lin)
}

struct Gains {
    ff: Vec<f64>,
    fb: Vec<DVector<f64>>,
}

/// Riccati-style backward pass with `Q_uu + mu`; `None` if that is not positive.
fn backward(lin: &Linearization, mu: f64) -> Option<Gains> {
    let t = lin.a.len();
    let n = lin.a[0].nrows();
    let mut vx = DVector::zeros(n);
    let mut vxx = DMatrix::zeros(n, n);
    let mut ff = vec![0.0; t];
    let mut fb = vec![DVector::zeros(n); t];
    for k in (0..t).rev() {
        let (a, b, g, h) = (&lin.a[k], &lin.b[k], &lin.g[k], &lin.h[k]);
        let lx = g.rows(0, n);
        let lu = g[n];
        let lxx = h.view((0, 0), (n, n));
        let lux = h.view((n, 0), (1, n)).transpose();
        let luu = h[(n, n)];

        let qx = lx + a.transpose() * &vx;
        let qu = lu + b.dot(&vx);
        let vxx_a = &vxx * a;
        let qxx = lxx + a.transpose() * &vxx_a;
        let qux = lux + vxx_a.transpose() * b;
        let quu = luu + b.dot(&(&vxx * b));
        let quu_reg = quu + mu;
        if !(quu_reg > 0.0) || !quu_reg.is_finite() {
            return None;
        }
        let kff = -qu / quu_reg;
        let kfb = -&qux / quu_reg;
        vx = &qx + &kfb * (quu * kff) + &kfb * qu + &qux * kff;
        let m = &qxx + &kfb * kfb.transpose() * quu + &kfb * qux.transpose() + &qux * kfb.transpose();
        vxx = (&m + m.transpose()) * 0.5;
        if !vx.iter().chain(vxx.iter()).all(|v| v.is_finite()) {
            return None;
        }
        ff[k] = kff;
        fb[k] = kfb;
    }
    Some(Gains { ff, fb })
}

fn forward<S>(system: &S, states: &[S::State], controls: &[f64], gains: &Gains, alpha: f64) -> Option<Vec<f64>>
where
    S: ControlSystem,
    S::State: VectorState,
{
    let (lo, hi) = system.control_bounds();
    let mut x = system.initial_state();
    let mut out = Vec::with_capacity(controls.len());
    for k in 0..controls.len() {
        let dx: f64 = x
            .as_slice()
            .iter()
            .zip(states[k].as_slice())
            .zip(gains.fb[k].iter())
            .map(|((a, b), g)| g * (a - b))
            .sum();
        let u = (controls[k] + alpha * gains.ff[k] + dx).clamp(lo, hi);
        out.push(u);
        x = system.step_control(&x, k, u).ok()?;
    }
    Some(out)
}

/// Local optimum of the continuous-control problem from `initial` controls
/// (zero by default), with a Levenberg ladder on `Q_uu` and a halving line search.
///
/// A step is accepted only if it lowers the cost by more than
/// `tolerance * (1 + |J|)`. When no step at any regularization qualifies the
/// solver stops with `converged = true`.
pub fn ilqr_oracle<S>(system: &S, config: &BaselineConfig, initial: Option<&[f64]>) -> Result<IlqrResult, SolveError>
where
    S: ControlSystem,
    S::State: VectorState,
{
    config.validate()?;
    let s = &config.ilqr;
    let (lo, hi) = system.control_bounds();
    let mut controls: Vec<f64> = match initial {
        Some(u) => u.iter().map(|v| v.clamp(lo, hi)).collect(),
        None => vec![0.0f64.clamp(lo, hi); system.horizon()],
    };
    let record = evaluate_controls(system, &controls)?;
    if record.diverged {
        return Err(SolveError::InvalidConfig("initial control sequence diverges".into()));
    }
    let mut states = record.states;
    let mut cost = record.total_cost;
    let mut result = IlqrResult {
        controls: Vec::new(),
        cost,
        initial_cost: cost,
        cost_history: Vec::new(),
        iterations: 0,
        converged: false,
        regularization_failed: false,
    };
    let mut mu = s.reg_min;
    let mut lin = linearize(system, &states, &controls, s)?;
    let finite = |l: &Linearization| {
        l.a.iter().all(|m| m.iter().all(|v| v.is_finite()))
            && l.b.iter().all(|m| m.iter().all(|v| v.is_finite()))
            && l.g.iter().all(|m| m.iter().all(|v| v.is_finite()))
            && l.h.iter().all(|m| m.iter().all(|v| v.is_finite()))
    };

    while result.iterations < s.max_iterations {
        if !finite(&lin) {
            result.regularization_failed = true;
            break;
        }
        result.iterations += 1;
        let Some(gains) = backward(&lin, mu) else {
            mu *= s.reg_factor;
            if mu > s.reg_max {
                result.regularization_failed = true;
                break;
            }
            continue;
        };
        let mut accepted = None;
        let mut alpha = 1.0;
        for _ in 0..s.line_search_steps {
            if let Some(candidate) = forward(system, &states, &controls, &gains, alpha) {
                let c = controls_cost(system, &candidate)?;
                if cost - c > s.tolerance * (1.0 + cost.abs()) {
                    accepted = Some((candidate, c));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((u, c)) => {
                controls = u;
                cost = c;
                states = evaluate_controls(system, &controls)?.states;
                result.cost_history.push(cost);
                mu = (mu / s.reg_factor).max(s.reg_min);
                lin = linearize(system, &states, &controls, s)?;
            }
            None => {
                mu *= s.reg_factor;
                if mu > s.reg_max {
                    result.converged = true;
                    break;
                }
            }
        }
    }
    result.controls = controls;
    result.cost = cost;
    Ok(result)
}
