//! Backward integration of `Z' = F^-(x, Z, q)`, `q' = G^-(x, Z, q)` toward decreasing `x`,
//! with contact detection against `W` and the eps-regularized restart.

use serde::{Deserialize, Serialize};

use crate::constant_strategy::{ConstantStrategy, ConstantStrategyCurve};
use crate::error::{Error, Result};
use crate::hamiltonian::{Branch, Model};
use crate::ode::{locate, DenseStep, Dopri5, StepOutcome, Tolerances};

/// Why an arc ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    HitW,
    HitZero,
    Singular,
    QExitUnitInterval,
    StepFailure,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            StopReason::HitW => "HitW",
            StopReason::HitZero => "HitZero",
            StopReason::Singular => "Singular",
            StopReason::QExitUnitInterval => "QExitUnitInterval",
            StopReason::StepFailure => "StepFailure",
        };
        f.write_str(s)
    }
}

/// Numerical settings of the backward solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    pub x_tiny: f64,
    pub tol_lim: f64,
    pub eps0_factor: f64,
    pub max_levels: usize,
    pub w_grid_nodes: usize,
    pub event_tol: f64,
    pub max_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            h_min: 1e-12,
            x_tiny: 1e-12,
            tol_lim: 1e-8,
            eps0_factor: 1e-3,
            max_levels: 40,
            w_grid_nodes: 2048,
            event_tol: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            self.rtol,
            self.atol,
            self.h_min,
            self.x_tiny,
            self.tol_lim,
            self.eps0_factor,
            self.event_tol,
        ];
        if pos.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config("solver tolerances must be positive".into()));
        }
        if self.w_grid_nodes < 2 || self.max_levels == 0 || self.max_steps == 0 {
            return Err(Error::Config("solver counts must be positive".into()));
        }
        Ok(())
    }
}

/// Derived quantities stored at each accepted node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcNode {
    pub x: f64,
    pub z: f64,
    pub q: f64,
    pub z_prime: f64,
    pub q_prime: f64,
    pub h_xi: f64,
    pub v: f64,
    /// `y = int_{x_T}^{x} dx / H_xi`: minus the time needed to travel from `x` to `x_T`.
    pub y: f64,
    /// `int_{x_T}^{x} (r + lambda + v*) / H_xi dx`.
    pub yv: f64,
}

/// One backward-integrated segment. State components are `[Z, q, y, Y_v]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackwardArc {
    pub x_t: f64,
    pub z_t: f64,
    pub q_t: f64,
    pub x_left: f64,
    pub stop_reason: StopReason,
    pub eps: Option<f64>,
    /// Exact limit values `(Z, q, Z')` at `x_t` for eps-limit arcs.
    pub terminal_override: Option<[f64; 3]>,
    pub steps: Vec<DenseStep<4>>,
    pub nodes: Vec<ArcNode>,
}

impl BackwardArc {
    /// Dense-output state `[Z, q, y, Y_v]` for `x` in `[x_left, x_t]`.
    pub fn state(&self, x: f64) -> [f64; 4] {
        if x >= self.x_t || self.steps.is_empty() {
            if let Some([z, q, _]) = self.terminal_override {
                return [z, q, 0.0, 0.0];
            }
            return [self.z_t, self.q_t, 0.0, 0.0];
        }
        self.step_for(x).eval(x)
    }

    /// Derivative of the dense-output polynomial (independent of the vector field).
    pub fn state_deriv(&self, x: f64) -> [f64; 4] {
        let xc = x.min(self.x_t);
        self.step_for(xc).eval_deriv(xc)
    }

    fn step_for(&self, x: f64) -> &DenseStep<4> {
        // steps run from x_t downward: step k covers [t1, t0] with t1 = t0 + h < t0
        let idx = self.steps.partition_point(|s| s.t1() > x);
        &self.steps[idx.min(self.steps.len() - 1)]
    }

    pub fn z(&self, x: f64) -> f64 {
        self.state(x)[0]
    }

    pub fn q(&self, x: f64) -> f64 {
        self.state(x)[1]
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_left && x <= self.x_t
    }

    /// CSV dump `(x, Z, q, Z', q', H_xi, event)`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,Z,q,Z_prime,q_prime,H_xi,event\n");
        let n = self.nodes.len();
        for (i, nd) in self.nodes.iter().enumerate() {
            let ev = if i + 1 == n {
                self.stop_reason.to_string()
            } else {
                String::new()
            };
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                nd.x, nd.z, nd.q, nd.z_prime, nd.q_prime, nd.h_xi, ev
            ));
        }
        out
    }
}

/// Sequence of eps-restarts from one touch point and its limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsFamily {
    pub x0: f64,
    pub eps: Vec<f64>,
    /// Left endpoints `a_eps(x0)` per level.
    pub a: Vec<f64>,
    /// Sup-norm difference in `Z` between levels `n + 1` and `n`.
    pub sup_diff: Vec<f64>,
    pub limit: BackwardArc,
}

impl EpsFamily {
    /// `a(x0)` of the limit arc.
    pub fn a_limit(&self) -> f64 {
        self.limit.x_left
    }
}

#[derive(Debug, Clone, Copy)]
enum RhsFail {
    Singular,
    QExit,
    Domain,
}

/// Backward solver bound to one model.
#[derive(Debug, Clone)]
pub struct BackwardSolver {
    pub model: Model,
    pub cs: ConstantStrategy,
    pub curve: ConstantStrategyCurve,
    pub opts: SolverOptions,
}

impl BackwardSolver {
    pub fn new(model: &Model, opts: SolverOptions) -> Result<Self> {
        opts.validate()?;
        let cs = ConstantStrategy::new(model)?;
        let curve = cs.tabulate(model.x_star(), opts.w_grid_nodes - 1);
        Ok(Self {
            model: model.clone(),
            cs,
            curve,
            opts,
        })
    }

    /// Singularity threshold for `|H_xi|`; scaled by `min(1, x)` because `H_xi` vanishes linearly at `x = 0`.
    pub fn eps_sing(x: f64) -> f64 {
        1e-9 * (1.0 + x) * x.min(1.0)
    }

    fn rhs(&self, x: f64, s: &[f64; 4]) -> std::result::Result<[f64; 4], RhsFail> {
        let (z, q) = (s[0], s[1]);
        if !(q > 0.0 && q <= 1.0 + 1e-12) {
            return Err(RhsFail::QExit);
        }
        if !(x > 0.0 && z > 0.0) {
            return Err(RhsFail::Domain);
        }
        let q = q.min(1.0);
        let m = &self.model;
        let (xs, hmax) = m.sharp(x, q).map_err(|_| RhsFail::Domain)?;
        let f = m
            .f_branch_with(Branch::Minus, x, z, q, xs, hmax)
            .map_err(|_| RhsFail::Singular)?;
        let pt = m.point(x, f, q);
        if pt.h_xi < Self::eps_sing(x) {
            return Err(RhsFail::Singular);
        }
        let k = m.r() + m.lambda();
        let g = ((k + pt.v) * q - k) / pt.h_xi;
        Ok([f, g, 1.0 / pt.h_xi, (k + pt.v) / pt.h_xi])
    }

    fn node(&self, x: f64, s: &[f64; 4], f: &[f64; 4]) -> ArcNode {
        let pt = self.model.point(x, f[0], s[1].min(1.0));
        ArcNode {
            x,
            z: s[0],
            q: s[1],
            z_prime: f[0],
            q_prime: f[1],
            h_xi: pt.h_xi,
            v: pt.v,
            y: s[2],
            yv: s[3],
        }
    }

    /// `Z - W` with the interpolated curve, refined by direct evaluation near contact.
    fn gap_w(&self, x: f64, z: f64) -> f64 {
        let wi = self.curve.w_interp(x);
        let g = z - wi;
        if g > -1e-6 * (1.0 + wi.abs()) || x > self.model.x_star() {
            z - self.cs.w(x)
        } else {
            g
        }
    }

    /// Integrates from terminal data toward decreasing `x`.
    pub fn integrate_backward(&self, x_t: f64, z_t: f64, q_t: f64) -> Result<BackwardArc> {
        let m = &self.model;
        if !(q_t > 0.0 && q_t <= 1.0) {
            return Err(Error::Domain(format!(
                "terminal price {q_t} outside (0, 1]"
            )));
        }
        if !(x_t > 0.0 && z_t > 0.0) {
            return Err(Error::Domain(
                "terminal point must have x > 0 and Z > 0".into(),
            ));
        }
        let hmax = m.h_max(x_t, q_t)?;
        if m.r() * z_t > hmax * (1.0 + 1e-13) {
            return Err(Error::NoSolution {
                r_eta: m.r() * z_t,
                h_max: hmax,
            });
        }
        let y0 = [z_t, q_t, 0.0, 0.0];
        let mut arc = BackwardArc {
            x_t,
            z_t,
            q_t,
            x_left: x_t,
            stop_reason: StopReason::StepFailure,
            eps: None,
            terminal_override: None,
            steps: Vec::new(),
            nodes: Vec::new(),
        };
        let f0 = match self.rhs(x_t, &y0) {
            Ok(f) => f,
            Err(e) => {
                arc.stop_reason = match e {
                    RhsFail::QExit => StopReason::QExitUnitInterval,
                    _ => StopReason::Singular,
                };
                return Ok(arc);
            }
        };
        arc.nodes.push(self.node(x_t, &y0, &f0));
        let tol = Tolerances {
            rtol: self.opts.rtol,
            atol: self.opts.atol,
            h_min: self.opts.h_min,
            h_max: (x_t / 50.0).max(self.opts.h_min),
        };
        let mut st = Dopri5::new(x_t, y0, f0, 1e-9 * (1.0 + x_t), -1.0, tol);
        let x_end = self.opts.x_tiny;
        let mut rhs = |x: f64, s: &[f64; 4]| self.rhs(x, s);
        for _ in 0..self.opts.max_steps {
            let x_prev = st.t;
            match st.step(&mut rhs, x_end) {
                StepOutcome::Accepted(step) => {
                    let x_new = st.t;
                    let s_new = st.y;
                    if !(s_new[1] > 0.0 && s_new[1] <= 1.0 + 1e-12) {
                        arc.steps.push(step);
                        arc.x_left = x_new;
                        arc.nodes.push(self.node(x_new, &s_new, &st.f));
                        arc.stop_reason = StopReason::QExitUnitInterval;
                        return Ok(arc);
                    }
                    if self.gap_w(x_new, s_new[0]) >= 0.0 {
                        let x_hit = locate(
                            |x| step.eval(x)[0] - self.cs.w(x),
                            x_prev,
                            x_new,
                            self.opts.event_tol,
                        );
                        let s_hit = step.eval(x_hit);
                        let f_hit = self.rhs(x_hit, &s_hit).unwrap_or(st.f);
                        arc.steps.push(step);
                        arc.x_left = x_hit;
                        arc.nodes.push(self.node(x_hit, &s_hit, &f_hit));
                        arc.stop_reason = StopReason::HitW;
                        return Ok(arc);
                    }
                    arc.steps.push(step);
                    arc.x_left = x_new;
                    arc.nodes.push(self.node(x_new, &s_new, &st.f));
                    if x_new <= x_end {
                        arc.stop_reason = StopReason::HitZero;
                        return Ok(arc);
                    }
                }
                StepOutcome::Failed(err) => {
                    arc.stop_reason = match err {
                        Some(RhsFail::Singular) => StopReason::Singular,
                        Some(RhsFail::QExit) => StopReason::QExitUnitInterval,
                        _ => StopReason::StepFailure,
                    };
                    return Ok(arc);
                }
            }
        }
        arc.stop_reason = StopReason::StepFailure;
        Ok(arc)
    }

    /// Arc from `(x0, W(x0) - eps, p_c(x0))`.
    pub fn restart_eps(&self, x0: f64, eps: f64) -> Result<BackwardArc> {
        let w = self.cs.w(x0);
        let mut arc = self.integrate_backward(x0, w - eps, self.cs.p_c(x0))?;
        arc.eps = Some(eps);
        Ok(arc)
    }

    /// `xi_sharp(x0, p_c(x0)) - W'(x0)`; restarts only progress when positive.
    pub fn slope_gap(&self, x0: f64) -> f64 {
        self.cs.xi_sharp_c(x0) - self.cs.w_slope(x0)
    }

    /// Limit of the eps-restarts along `eps_n = eps0 2^-n`.
    pub fn eps_limit(&self, x0: f64) -> Result<EpsFamily> {
        let gap = self.slope_gap(x0);
        if !(gap > 0.0) {
            return Err(Error::RestartStalled { x0, gap: -gap });
        }
        let w0 = self.cs.w(x0);
        let eps0 = self.opts.eps0_factor * (1.0 + w0);
        let mut fam = EpsFamily {
            x0,
            eps: Vec::new(),
            a: Vec::new(),
            sup_diff: Vec::new(),
            limit: self.restart_eps(x0, eps0)?,
        };
        let mut prev = fam.limit.clone();
        check_restart_stop(&prev)?;
        fam.eps.push(eps0);
        fam.a.push(prev.x_left);
        let mut last_diff = f64::INFINITY;
        for n in 1..=self.opts.max_levels {
            let eps = eps0 * 0.5f64.powi(n as i32);
            let arc = self.restart_eps(x0, eps)?;
            check_restart_stop(&arc)?;
            let diff = sup_diff_z(&prev, &arc);
            fam.eps.push(eps);
            fam.a.push(arc.x_left);
            fam.sup_diff.push(diff);
            last_diff = diff;
            prev = arc;
            if diff < self.opts.tol_lim {
                let mut limit = prev;
                let p0 = self.cs.p_c(x0);
                limit.terminal_override = Some([w0, p0, self.cs.xi_sharp_c(x0)]);
                fam.limit = limit;
                return Ok(fam);
            }
        }
        Err(Error::NonCauchy {
            x0,
            levels: self.opts.max_levels,
            diff: last_diff,
        })
    }

    /// Interval `[x_flat, max(x_flat, x_w)]` used by the restart-progress bound.
    fn flat_interval(&self, x_w: f64) -> (f64, f64) {
        let xf = self.cs.x_flat();
        (xf, xf.max(x_w))
    }

    /// `delta_1 = inf (xi_sharp(x, p_c) - W'(x))` over the flat interval (201-point grid).
    pub fn delta1_flat(&self, x_w: f64) -> f64 {
        let (lo, hi) = self.flat_interval(x_w);
        (0..=200)
            .map(|i| lo + (hi - lo) * i as f64 / 200.0)
            .map(|x| self.slope_gap(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Lower bound `min{d1, d1^2 / (8 C^2 [2 W'(x0) + d1])}` on restart progress.
    pub fn delta_flat_bound(&self, x_w: f64) -> f64 {
        let d1 = self.delta1_flat(x_w);
        let (lo, hi) = self.flat_interval(x_w);
        let w_slope_max = (0..=200)
            .map(|i| lo + (hi - lo) * i as f64 / 200.0)
            .map(|x| self.cs.w_slope(x))
            .fold(0.0f64, f64::max);
        let c = self
            .model
            .holder_constant(self.cs.x_flat(), self.model.theta_star());
        d1.min(d1 * d1 / (8.0 * c * c * (2.0 * w_slope_max + d1)))
    }
}

fn check_restart_stop(arc: &BackwardArc) -> Result<()> {
    match arc.stop_reason {
        StopReason::HitW | StopReason::HitZero => Ok(()),
        other => Err(Error::UnexpectedStop {
            x: arc.x_left,
            reason: other.to_string(),
        }),
    }
}

/// Sup-norm of `Z_a - Z_b` on the common domain, sampled uniformly and geometrically toward the terminal point.
pub fn sup_diff_z(a: &BackwardArc, b: &BackwardArc) -> f64 {
    let hi = a.x_t.min(b.x_t);
    let lo = a.x_left.max(b.x_left);
    if hi <= lo {
        return 0.0;
    }
    let mut d: f64 = 0.0;
    for i in 0..=400 {
        let x = lo + (hi - lo) * i as f64 / 400.0;
        d = d.max((a.z(x) - b.z(x)).abs());
    }
    for k in 1..=80 {
        let x = hi - (hi - lo) * 10f64.powf(-(k as f64) / 8.0);
        d = d.max((a.z(x) - b.z(x)).abs());
    }
    d
}
