//! Forward simulation of the debt dynamics under a posted price map, the
//! discounted cost `J`, the bond-price functional `Psi`, and equilibrium checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::EquilibriumSolution;
use crate::error::{Error, Result};
use crate::hamiltonian::Model;
use crate::ode::{locate, DenseStep, Dopri5, StepOutcome, Tolerances};

/// Controls chosen by the borrower.
pub trait Policy: Sync {
    /// `(u, v)` at time `t` and state `x`.
    fn controls(&self, t: f64, x: f64) -> (f64, f64);

    /// Times where the controls may jump.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// States where the closed loop comes to rest in finite time.
    fn attractors(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Price `p(x)` faced by the borrower.
pub trait PriceMap: Sync {
    fn price(&self, x: f64) -> f64;
}

impl PriceMap for EquilibriumSolution {
    fn price(&self, x: f64) -> f64 {
        self.eval(x).price
    }
}

/// A price map that ignores the state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPrice(pub f64);

impl PriceMap for FixedPrice {
    fn price(&self, _x: f64) -> f64 {
        self.0
    }
}

/// Equilibrium feedback `(u*, v*)`.
#[derive(Debug, Clone, Copy)]
pub struct EquilibriumFeedback<'a>(pub &'a EquilibriumSolution);

impl Policy for EquilibriumFeedback<'_> {
    fn controls(&self, _t: f64, x: f64) -> (f64, f64) {
        self.0.feedback(x.max(0.0))
    }

    fn attractors(&self) -> Vec<f64> {
        self.0.touch_points.clone()
    }
}

/// Time-invariant controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantControls {
    pub u: f64,
    pub v: f64,
}

impl Policy for ConstantControls {
    fn controls(&self, _t: f64, _x: f64) -> (f64, f64) {
        (self.u, self.v)
    }
}

/// Open-loop piecewise-constant controls; `u[i]`, `v[i]` hold on `[times[i-1], times[i])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstant {
    pub times: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl PiecewiseConstant {
    /// Random controls with `n_switch` sorted switch times in `(0, horizon)`.
    pub fn random(
        rng: &mut impl Rng,
        n_switch: usize,
        horizon: f64,
        u_max: f64,
        v_max: f64,
    ) -> Self {
        let mut times: Vec<f64> = (0..n_switch).map(|_| rng.gen::<f64>() * horizon).collect();
        times.sort_by(f64::total_cmp);
        let u = (0..=n_switch).map(|_| rng.gen::<f64>() * u_max).collect();
        let v = (0..=n_switch).map(|_| rng.gen::<f64>() * v_max).collect();
        Self { times, u, v }
    }
}

impl Policy for PiecewiseConstant {
    fn controls(&self, t: f64, _x: f64) -> (f64, f64) {
        let i = self.times.partition_point(|&s| s <= t);
        (self.u[i], self.v[i])
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.times.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimOptions {
    /// Horizon `T_max = t_max_factor / r`.
    pub t_max_factor: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Distance below an attractor at which the state is snapped onto it.
    pub touch_tol: f64,
    /// `|x'|` below which a time-invariant run is treated as stationary.
    pub steady_tol: f64,
    /// Simpson subintervals per accepted step.
    pub simpson_panels: usize,
    pub probes: usize,
    pub probe_switches: usize,
    pub probe_horizon: f64,
    pub probe_u_max: f64,
    pub probe_v_max: f64,
    pub seed: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            t_max_factor: 400.0,
            rtol: 1e-10,
            atol: 1e-13,
            touch_tol: 1e-9,
            steady_tol: 1e-12,
            simpson_panels: 4,
            probes: 200,
            probe_switches: 5,
            probe_horizon: 20.0,
            probe_u_max: 0.5,
            probe_v_max: 0.3,
            seed: 20240607,
        }
    }
}

impl SimOptions {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            self.t_max_factor,
            self.rtol,
            self.atol,
            self.touch_tol,
            self.steady_tol,
            self.probe_horizon,
        ];
        if pos.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config(
                "simulation tolerances must be positive".into(),
            ));
        }
        if self.simpson_panels == 0 || self.probe_u_max < 0.0 || self.probe_v_max < 0.0 {
            return Err(Error::Config("invalid probe or quadrature settings".into()));
        }
        Ok(())
    }
}

/// How a trajectory ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    /// `x` reached `x*` at `t_b`.
    Bankrupt {
        t_b: f64,
    },
    /// Stationary from `t` on at `x`; `touch_index` is 0-based into the attractor list.
    Steady {
        t: f64,
        x: f64,
        touch_index: Option<usize>,
    },
    /// `T_max` reached; the omitted tail is bounded by `tail_bound`.
    Horizon {
        t: f64,
        tail_bound: f64,
    },
    StepFailure {
        t: f64,
        x: f64,
    },
}

/// Sampled state at an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajNode {
    pub t: f64,
    pub x: f64,
    pub u: f64,
    pub v: f64,
    /// `int_0^t e^{-rs} (L + c) ds` (integrated alongside the state).
    pub cost: f64,
    /// `exp(-int_0^t (r + lambda + v) ds)`.
    pub d: f64,
    /// `int_0^t (r + lambda) D ds`.
    pub psi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub x0: f64,
    pub nodes: Vec<TrajNode>,
    pub outcome: Outcome,
    /// Simpson quadrature of the running cost on `[0, T_end]`.
    pub simpson_cost: f64,
    /// Simpson quadrature of `(r + lambda) D` on `[0, T_end]`.
    pub simpson_psi: f64,
    /// Bankruptcy term `e^{-r T_b} B` or the analytic stationary tail.
    pub end_cost: f64,
    /// `D(T_b) theta(x*)` or the analytic stationary tail (without `theta`).
    pub end_psi: f64,
    /// Whether `end_psi` still has to be multiplied by `theta(x*)`.
    pub end_psi_needs_theta: bool,
}

impl Trajectory {
    pub fn t_end(&self) -> f64 {
        self.nodes.last().map_or(0.0, |n| n.t)
    }

    pub fn bankruptcy_time(&self) -> Option<f64> {
        match self.outcome {
            Outcome::Bankrupt { t_b } => Some(t_b),
            _ => None,
        }
    }

    /// `J` from the co-integrated accumulator (cross-check of the Simpson value).
    pub fn accumulated_cost(&self) -> f64 {
        self.nodes.last().map_or(0.0, |n| n.cost) + self.end_cost
    }

    /// CSV `(t, x, u, v, discounted_cost, D)`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,u,v,discounted_cost,D\n");
        for n in &self.nodes {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                n.t, n.x, n.u, n.v, n.cost, n.d
            ));
        }
        out
    }
}

/// `J = int_0^{T_b} e^{-rt} (L(u) + c(v)) dt + e^{-r T_b} B`, with the stationary tail when `T_b` is infinite.
pub fn discounted_cost(traj: &Trajectory) -> f64 {
    traj.simpson_cost + traj.end_cost
}

/// `Psi = int_0^{T_b} (r + lambda) D dt + D(T_b) theta(x*)`.
pub fn price_functional(traj: &Trajectory, theta: f64) -> f64 {
    let end = if traj.end_psi_needs_theta {
        traj.end_psi * theta
    } else {
        traj.end_psi
    };
    traj.simpson_psi + end
}

/// Forward simulator bound to a model and a posted price map.
pub struct Simulator<'a> {
    pub model: &'a Model,
    pub prices: &'a dyn PriceMap,
    pub opts: SimOptions,
}

impl<'a> Simulator<'a> {
    pub fn new(model: &'a Model, prices: &'a dyn PriceMap, opts: SimOptions) -> Result<Self> {
        opts.validate()?;
        Ok(Self {
            model,
            prices,
            opts,
        })
    }

    fn controls(&self, policy: &dyn Policy, t: f64, x: f64) -> (f64, f64) {
        let (u, v) = policy.controls(t, x);
        if x <= 0.0 {
            (0.0, v)
        } else {
            (u, v)
        }
    }

    fn xdot(&self, x: f64, u: f64, v: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let m = self.model;
        let p = self.prices.price(x);
        ((m.lambda() + m.r()) / p - m.lambda() - m.mu() - v) * x - u / p
    }

    fn rhs(&self, policy: &dyn Policy, t: f64, s: &[f64; 4]) -> [f64; 4] {
        let m = self.model;
        let (x, d) = (s[0], s[2]);
        let (u, v) = self.controls(policy, t, x);
        let c = &m.costs;
        [
            self.xdot(x, u, v),
            (-m.r() * t).exp() * (c.l(u) + c.c(v)),
            -(m.r() + m.lambda() + v) * d,
            (m.r() + m.lambda()) * d,
        ]
    }

    fn node(&self, policy: &dyn Policy, t: f64, s: &[f64; 4]) -> TrajNode {
        let (u, v) = self.controls(policy, t, s[0]);
        TrajNode {
            t,
            x: s[0].max(0.0),
            u,
            v,
            cost: s[1],
            d: s[2],
            psi: s[3],
        }
    }

    /// Composite Simpson on `[a, b]` inside one dense step.
    fn simpson(&self, policy: &dyn Policy, step: &DenseStep<4>, a: f64, b: f64) -> (f64, f64) {
        let m = self.model;
        let n = 2 * self.opts.simpson_panels;
        let h = (b - a) / n as f64;
        let (mut sc, mut sp) = (0.0, 0.0);
        for i in 0..=n {
            let t = a + h * i as f64;
            let s = step.eval(t);
            let (u, v) = self.controls(policy, t, s[0]);
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            sc += w * (-m.r() * t).exp() * (m.costs.l(u) + m.costs.c(v));
            sp += w * (m.r() + m.lambda()) * s[2];
        }
        (sc * h / 3.0, sp * h / 3.0)
    }

    /// Integrates from `x0` until bankruptcy, a stationary state, or `T_max`.
    pub fn simulate(&self, x0: f64, policy: &dyn Policy) -> Result<Trajectory> {
        let m = self.model;
        let x_star = m.x_star();
        if !(0.0..=x_star).contains(&x0) {
            return Err(Error::Domain(format!("x0 = {x0} outside [0, x*]")));
        }
        let t_max = self.opts.t_max_factor / m.r();
        let attractors = policy.attractors();
        let mut breaks: Vec<f64> = policy
            .breakpoints()
            .into_iter()
            .filter(|&t| t > 0.0 && t < t_max)
            .collect();
        // controls are time-invariant after the last breakpoint
        let invariant_from = breaks.last().copied().unwrap_or(0.0);
        breaks.push(t_max);

        let mut traj = Trajectory {
            x0,
            nodes: Vec::new(),
            outcome: Outcome::Horizon {
                t: t_max,
                tail_bound: 0.0,
            },
            simpson_cost: 0.0,
            simpson_psi: 0.0,
            end_cost: 0.0,
            end_psi: 0.0,
            end_psi_needs_theta: false,
        };
        let mut s = [x0, 0.0, 1.0, 0.0];
        traj.nodes.push(self.node(policy, 0.0, &s));
        if x0 >= x_star {
            self.finish_bankrupt(&mut traj, 0.0, 1.0);
            return Ok(traj);
        }
        if let Some(k) = near_attractor(&attractors, x0, self.opts.touch_tol) {
            s[0] = attractors[k];
            self.finish_steady(&mut traj, policy, 0.0, &s, Some(k));
            return Ok(traj);
        }

        let tol = Tolerances {
            rtol: self.opts.rtol,
            atol: self.opts.atol,
            h_min: 1e-12,
            h_max: t_max / 20.0,
        };
        let mut rhs = |t: f64, y: &[f64; 4]| -> std::result::Result<[f64; 4], ()> {
            Ok(self.rhs(policy, t, y))
        };
        let mut t = 0.0;
        let mut sup_integrand: f64 = 0.0;
        for &t_seg in &breaks {
            let f0 = self.rhs(policy, t, &s);
            let mut st = Dopri5::new(t, s, f0, 1e-3, 1.0, tol);
            loop {
                if t >= invariant_from && st.f[0].abs() < self.opts.steady_tol {
                    self.finish_steady(&mut traj, policy, t, &s, None);
                    return Ok(traj);
                }
                if t >= t_seg {
                    break;
                }
                let step = match st.step(&mut rhs, t_seg) {
                    StepOutcome::Accepted(step) => step,
                    StepOutcome::Failed(_) => {
                        traj.outcome = Outcome::StepFailure { t, x: s[0] };
                        return Ok(traj);
                    }
                };
                let (t_prev, x_prev) = (t, s[0]);
                let (t_new, s_new) = (st.t, st.y);
                // bankruptcy
                if s_new[0] >= x_star {
                    let tb = locate(
                        |tt| step.eval(tt)[0] - x_star,
                        t_prev,
                        t_new,
                        1e-13 * (1.0 + t_new),
                    );
                    let sb = step.eval(tb);
                    self.add_simpson(&mut traj, policy, &step, t_prev, tb);
                    let mut sb_node = sb;
                    sb_node[0] = x_star;
                    traj.nodes.push(self.node(policy, tb, &sb_node));
                    self.finish_bankrupt(&mut traj, tb, sb[2]);
                    return Ok(traj);
                }
                // arrival at an attractor from below
                if let Some(k) =
                    crossed_attractor(&attractors, x_prev, s_new[0], self.opts.touch_tol)
                {
                    let target = attractors[k] - self.opts.touch_tol;
                    let ta = locate(
                        |tt| step.eval(tt)[0] - target,
                        t_prev,
                        t_new,
                        1e-13 * (1.0 + t_new),
                    );
                    let mut sa = step.eval(ta);
                    self.add_simpson(&mut traj, policy, &step, t_prev, ta);
                    sa[0] = attractors[k];
                    self.finish_steady(&mut traj, policy, ta, &sa, Some(k));
                    return Ok(traj);
                }
                self.add_simpson(&mut traj, policy, &step, t_prev, t_new);
                t = t_new;
                s = s_new;
                let (u, v) = self.controls(policy, t, s[0]);
                sup_integrand = sup_integrand.max(m.costs.l(u) + m.costs.c(v));
                traj.nodes.push(self.node(policy, t, &s));
            }
        }
        // horizon reached: the omitted tail is at most e^{-rT} sup(L + c) / r
        traj.outcome = Outcome::Horizon {
            t,
            tail_bound: (-m.r() * t).exp() * sup_integrand / m.r(),
        };
        Ok(traj)
    }

    fn add_simpson(
        &self,
        traj: &mut Trajectory,
        policy: &dyn Policy,
        step: &DenseStep<4>,
        a: f64,
        b: f64,
    ) {
        if b > a {
            let (c, p) = self.simpson(policy, step, a, b);
            traj.simpson_cost += c;
            traj.simpson_psi += p;
        }
    }

    fn finish_bankrupt(&self, traj: &mut Trajectory, tb: f64, d: f64) {
        let m = self.model;
        traj.outcome = Outcome::Bankrupt { t_b: tb };
        traj.end_cost = (-m.r() * tb).exp() * m.b();
        traj.end_psi = d;
        traj.end_psi_needs_theta = true;
    }

    /// Stationary from `t`: cost tail `e^{-rt} (L + c) / r`, price tail `D (r + lambda) / (r + lambda + v)`.
    fn finish_steady(
        &self,
        traj: &mut Trajectory,
        policy: &dyn Policy,
        t: f64,
        s: &[f64; 4],
        k: Option<usize>,
    ) {
        let m = self.model;
        let (u, v) = self.controls(policy, t, s[0]);
        let k_rl = m.r() + m.lambda();
        traj.outcome = Outcome::Steady {
            t,
            x: s[0],
            touch_index: k,
        };
        traj.end_cost = (-m.r() * t).exp() * (m.costs.l(u) + m.costs.c(v)) / m.r();
        traj.end_psi = s[2] * k_rl / (k_rl + v);
        traj.end_psi_needs_theta = false;
        if traj.nodes.last().is_none_or(|n| n.t < t) {
            traj.nodes.push(self.node(policy, t, s));
        } else if let Some(n) = traj.nodes.last_mut() {
            n.x = s[0];
        }
    }
}

fn near_attractor(att: &[f64], x: f64, tol: f64) -> Option<usize> {
    att.iter().position(|&a| x <= a && x >= a - tol)
}

fn crossed_attractor(att: &[f64], x_prev: f64, x_new: f64, tol: f64) -> Option<usize> {
    att.iter()
        .enumerate()
        .filter(|(_, &a)| x_prev < a - tol && x_new >= a - tol)
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
}

/// Checks at one initial state under equilibrium play.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCheck {
    pub x0: f64,
    pub v_star: f64,
    pub p_star: f64,
    pub j: f64,
    /// `J` from the co-integrated accumulator.
    pub j_accumulated: f64,
    pub psi: f64,
    pub residual_i: f64,
    pub residual_ii: f64,
    pub outcome: Outcome,
    /// `max phi - min phi` along the trajectory.
    pub phi_spread: f64,
    /// Largest `|Psi(t) - p*(x(t))|` at the trajectory nodes.
    pub price_path_residual: f64,
}

/// One random open-loop probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeCheck {
    pub index: usize,
    pub x0: f64,
    pub j: f64,
    pub v_star: f64,
    /// `J - V*(x0)`; must not fall below `-1e-6`.
    pub gap: f64,
    /// Smallest increment of `phi` between consecutive nodes.
    pub phi_min_increment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub points: Vec<PointCheck>,
    pub probes: Vec<ProbeCheck>,
    pub max_residual_i: f64,
    pub max_residual_ii: f64,
    pub max_phi_spread: f64,
    pub min_probe_gap: f64,
    pub min_probe_phi_increment: f64,
}

impl VerificationReport {
    /// `residual_i <= tol_i`, `residual_ii <= tol_ii`, and no probe beats `V*` by more than `tol_probe`.
    pub fn passed(&self, tol_i: f64, tol_ii: f64, tol_probe: f64) -> bool {
        self.max_residual_i <= tol_i
            && self.max_residual_ii <= tol_ii
            && self.min_probe_gap >= -tol_probe
    }

    /// CSV of the per-point residual table.
    pub fn points_csv(&self) -> String {
        let mut out = String::from(
            "x0,V_star,p_star,J,Psi,residual_i,residual_ii,outcome,t_end_or_tb,touch_index\n",
        );
        for p in &self.points {
            let (kind, t, k) = match p.outcome {
                Outcome::Bankrupt { t_b } => ("bankrupt", t_b, String::new()),
                Outcome::Steady { t, touch_index, .. } => (
                    "steady",
                    t,
                    touch_index.map(|k| (k + 1).to_string()).unwrap_or_default(),
                ),
                Outcome::Horizon { t, .. } => ("horizon", t, String::new()),
                Outcome::StepFailure { t, .. } => ("step_failure", t, String::new()),
            };
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{}\n",
                p.x0, p.v_star, p.p_star, p.j, p.psi, p.residual_i, p.residual_ii, kind, t, k
            ));
        }
        out
    }
}

/// `phi(t) = int_0^t e^{-rs}(L + c) ds + e^{-rt} V*(x(t))` at every node.
pub fn phi_path(sol: &EquilibriumSolution, traj: &Trajectory) -> Vec<f64> {
    let r = sol.model().r();
    traj.nodes
        .iter()
        .map(|n| n.cost + (-r * n.t).exp() * sol.eval(n.x).value)
        .collect()
}

/// Checks both equilibrium conditions on `x0s` and runs `opts.probes` random open-loop probes.
pub fn verify_equilibrium(
    sol: &EquilibriumSolution,
    x0s: &[f64],
    opts: SimOptions,
) -> Result<VerificationReport> {
    let model = sol.model();
    let sim = Simulator::new(model, sol, opts)?;
    let theta = model.theta_star();
    let policy = EquilibriumFeedback(sol);
    let points: Vec<PointCheck> = x0s
        .par_iter()
        .map(|&x0| -> Result<PointCheck> {
            let traj = sim.simulate(x0, &policy)?;
            let e = sol.eval(x0);
            let j = discounted_cost(&traj);
            let psi = price_functional(&traj, theta);
            let phi = phi_path(sol, &traj);
            let phi_spread = phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - phi.iter().cloned().fold(f64::INFINITY, f64::min);
            Ok(PointCheck {
                x0,
                v_star: e.value,
                p_star: e.price,
                j,
                j_accumulated: traj.accumulated_cost(),
                psi,
                residual_i: (j - e.value).abs(),
                residual_ii: (psi - e.price).abs(),
                outcome: traj.outcome,
                phi_spread,
                price_path_residual: price_path_residual(sol, &traj, theta),
            })
        })
        .collect::<Result<_>>()?;
    let probes: Vec<ProbeCheck> = (0..opts.probes)
        .into_par_iter()
        .filter(|_| !x0s.is_empty())
        .map(|i| -> Result<ProbeCheck> {
            let x0 = x0s[i % x0s.len()];
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(i as u64));
            let pc = PiecewiseConstant::random(
                &mut rng,
                opts.probe_switches,
                opts.probe_horizon,
                opts.probe_u_max,
                opts.probe_v_max,
            );
            let traj = sim.simulate(x0, &pc)?;
            let j = discounted_cost(&traj);
            let v_star = sol.eval(x0).value;
            let phi = phi_path(sol, &traj);
            let phi_min_increment = phi
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::INFINITY, f64::min);
            Ok(ProbeCheck {
                index: i,
                x0,
                j,
                v_star,
                gap: j - v_star,
                phi_min_increment,
            })
        })
        .collect::<Result<_>>()?;
    let max_of = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0f64, f64::max);
    Ok(VerificationReport {
        max_residual_i: max_of(&mut points.iter().map(|p| p.residual_i)),
        max_residual_ii: max_of(&mut points.iter().map(|p| p.residual_ii)),
        max_phi_spread: max_of(&mut points.iter().map(|p| p.phi_spread)),
        min_probe_gap: probes.iter().map(|p| p.gap).fold(f64::INFINITY, f64::min),
        min_probe_phi_increment: probes
            .iter()
            .map(|p| p.phi_min_increment)
            .fold(f64::INFINITY, f64::min),
        points,
        probes,
    })
}

/// Largest `|Psi(t) - p*(x(t))|` over the nodes, with `Psi(t)` the price functional restarted at `t`.
pub fn price_path_residual(sol: &EquilibriumSolution, traj: &Trajectory, theta: f64) -> f64 {
    let Some(last) = traj.nodes.last() else {
        return 0.0;
    };
    let end = if traj.end_psi_needs_theta {
        traj.end_psi * theta
    } else {
        traj.end_psi
    };
    let total = last.psi + end;
    traj.nodes
        .iter()
        .filter(|n| n.d > 1e-6)
        .map(|n| ((total - n.psi) / n.d - sol.eval(n.x).price).abs())
        .fold(0.0, f64::max)
}
