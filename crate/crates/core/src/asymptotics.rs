//! Behaviour for large bankruptcy thresholds: the no-control explicit regime,
//! the two salvage-decay regimes, and the devaluation-activation test.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backward_solver::SolverOptions;
use crate::equilibrium::{BuildOptions, EquilibriumSolution};
use crate::error::{Error, Result};
use crate::hamiltonian::{Model, Salvage};
use crate::ode::{Dopri5, StepOutcome, Tolerances};
use crate::roots;

/// Solution of the implicit pair at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplicitPoint {
    pub v: f64,
    pub p: f64,
    pub iterations: usize,
    pub used_bisection: bool,
    /// `V - B ((1 - p) / (1 - theta))^{r / (r + lambda)}`.
    pub residual_v: f64,
    /// `p - (theta x* / x) ((1 - p) / (1 - theta))^{(r - mu) / (r + lambda)}`.
    pub residual_p: f64,
}

fn price_map(model: &Model, x: f64, x_star: f64, theta: f64, p: f64) -> f64 {
    let a = (model.r() - model.mu()) / (model.r() + model.lambda());
    theta * x_star / x * ((1.0 - p) / (1.0 - theta)).max(0.0).powf(a)
}

fn value_from_price(model: &Model, theta: f64, p: f64) -> f64 {
    let b = (model.r()) / (model.r() + model.lambda());
    model.b() * ((1.0 - p) / (1.0 - theta)).max(0.0).powf(b)
}

/// Solves the implicit no-control pair without checking that the regime applies.
pub fn explicit_pair(model: &Model, x: f64, x_star: f64, theta: f64) -> Result<ExplicitPoint> {
    if !(x > 0.0 && x <= x_star) {
        return Err(Error::Domain(format!(
            "explicit pair needs 0 < x <= x* (x = {x}, x* = {x_star})"
        )));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::Domain(format!("theta = {theta} outside (0, 1]")));
    }
    if theta == 1.0 {
        // p stays at 1; V' = r V / ((r - mu) x)
        let v = model.b() * (x / x_star).powf(model.r() / (model.r() - model.mu()));
        return Ok(ExplicitPoint {
            v,
            p: 1.0,
            iterations: 0,
            used_bisection: false,
            residual_v: 0.0,
            residual_p: 0.0,
        });
    }
    let omega = 0.5;
    let mut p = theta;
    let mut iterations = 0;
    let mut converged = false;
    for k in 1..=10_000 {
        let next = (1.0 - omega) * p + omega * price_map(model, x, x_star, theta, p);
        iterations = k;
        let done = (next - p).abs() <= 1e-12 * p.max(1e-300);
        p = next;
        if done && p > 0.0 && p < 1.0 {
            converged = true;
            break;
        }
    }
    let mut used_bisection = false;
    if !converged {
        used_bisection = true;
        p = roots::bisect(
            |q| q - price_map(model, x, x_star, theta, q),
            0.0,
            1.0,
            1e-15,
            400,
        )?;
    }
    let v = value_from_price(model, theta, p);
    Ok(ExplicitPoint {
        v,
        p,
        iterations,
        used_bisection,
        residual_v: v - value_from_price(model, theta, p),
        residual_p: p - price_map(model, x, x_star, theta, p),
    })
}

/// Explicit `(V, p)` at `x` after confirming `u = v = 0` on `[x, x*]` (201-point grid).
pub fn explicit_regime(model: &Model, x: f64, x_star: f64, theta: f64) -> Result<ExplicitPoint> {
    let pt = explicit_pair(model, x, x_star, theta)?;
    let (l0, c0) = (model.costs.l_prime(0.0), model.costs.c_prime(0.0));
    for i in 0..=200 {
        let s = x + (x_star - x) * i as f64 / 200.0;
        let e = explicit_pair(model, s, x_star, theta)?;
        let vp = no_control_slope(model, s, e.v, e.p);
        if vp / e.p > l0 {
            return Err(Error::RegimeViolated(format!(
                "V'/p = {} > L'(0) = {l0} at x = {s}",
                vp / e.p
            )));
        }
        if s * vp > c0 {
            return Err(Error::RegimeViolated(format!(
                "x V' = {} > c'(0) = {c0} at x = {s}",
                s * vp
            )));
        }
    }
    Ok(pt)
}

/// `V' = r p V / (((lambda + r) - (lambda + mu) p) x)`.
pub fn no_control_slope(model: &Model, x: f64, v: f64, p: f64) -> f64 {
    model.r() * p * v / (((model.lambda() + model.r()) - (model.lambda() + model.mu()) * p) * x)
}

/// Integrates the no-control system backward from `(x*, B, theta)` to `x`.
pub fn explicit_ode(model: &Model, x: f64, x_star: f64, theta: f64) -> Result<(f64, f64)> {
    if !(x > 0.0 && x <= x_star) {
        return Err(Error::Domain(format!(
            "explicit ode needs 0 < x <= x* (x = {x})"
        )));
    }
    let (r, lam, mu) = (model.r(), model.lambda(), model.mu());
    let rhs = |s: f64, y: &[f64; 2]| -> std::result::Result<[f64; 2], ()> {
        let (v, p) = (y[0], y[1]);
        let den = ((lam + r) - (lam + mu) * p) * s;
        Ok([r * p * v / den, (lam + r) * p * (p - 1.0) / den])
    };
    let y0 = [model.b(), theta];
    if x == x_star {
        return Ok((y0[0], y0[1]));
    }
    let mut f = rhs;
    let f0 = f(x_star, &y0).expect("finite");
    let tol = Tolerances {
        rtol: 1e-12,
        atol: 1e-14,
        h_min: 1e-12,
        h_max: (x_star - x) / 10.0,
    };
    let mut st = Dopri5::new(x_star, y0, f0, 1e-6 * x_star, -1.0, tol);
    while st.t > x {
        match st.step(&mut f, x) {
            StepOutcome::Accepted(_) => {}
            StepOutcome::Failed(_) => return Err(Error::StepFailure { x: st.t }),
        }
    }
    Ok((st.y[0], st.y[1]))
}

/// Threshold quantities from the decay-regime arguments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// `min{(r - mu) / (2 c^{-1}(r B)), (r - mu) c'(0) / (4 B)}`.
    pub gamma: f64,
    /// `max{4 / (r - mu), 4 B / ((r - mu) L'(0))}`.
    pub m2: f64,
    /// `(1 / (r - mu)) max{4, 4B / L'(0), 4 C1 B / c'(0), 2 C1 c^{-1}(r B)}` when `C1 = sup theta(s) s` is finite.
    pub m: Option<f64>,
    pub c1: Option<f64>,
}

impl Thresholds {
    pub fn new(model: &Model, c1: Option<f64>) -> Self {
        let (r, mu, b) = (model.r(), model.mu(), model.b());
        let (l0, c0) = (model.costs.l_prime(0.0), model.costs.c_prime(0.0));
        let cinv = model.costs.c_inv(r * b);
        let gamma = ((r - mu) / (2.0 * cinv)).min((r - mu) * c0 / (4.0 * b));
        let m2 = (4.0 / (r - mu)).max(4.0 * b / ((r - mu) * l0));
        let m = c1.map(|c1| {
            let parts: [f64; 4] = [4.0, 4.0 * b / l0, 4.0 * c1 * b / c0, 2.0 * c1 * cinv];
            parts.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / (r - mu)
        });
        Self { gamma, m2, m, c1 }
    }
}

/// `limsup theta(s) s` for a salvage family (`None` when infinite).
pub fn limsup_theta_s(salvage: &Salvage) -> Option<f64> {
    match *salvage {
        Salvage::Constant { value } => (value == 0.0).then_some(0.0),
        Salvage::PowerLaw {
            coefficient,
            exponent,
        } => {
            if exponent > 1.0 || coefficient == 0.0 {
                Some(0.0)
            } else if exponent == 1.0 {
                Some(coefficient)
            } else {
                None
            }
        }
    }
}

/// `sup_s theta(s) s` for a salvage family (`None` when infinite).
pub fn sup_theta_s(salvage: &Salvage) -> Option<f64> {
    match *salvage {
        Salvage::Constant { value } => (value == 0.0).then_some(0.0),
        Salvage::PowerLaw {
            coefficient,
            exponent,
        } => {
            if coefficient == 0.0 {
                Some(0.0)
            } else if exponent == 1.0 {
                Some(coefficient)
            } else if exponent > 1.0 {
                // theta(s) s = min(s, k s^{1-e}) peaks where k s^{-e} = 1
                Some(coefficient.powf(1.0 / exponent))
            } else {
                None
            }
        }
    }
}

pub const TAG_BOUNDED: &str = "bounded-Rs regime";
pub const TAG_PONZI: &str = "ponzi-decay regime";

/// Classification by the limit of `theta(s) s`.
pub fn classify(salvage: &Salvage) -> &'static str {
    match limsup_theta_s(salvage) {
        Some(_) => TAG_BOUNDED,
        None => TAG_PONZI,
    }
}

/// Both no-control sufficient conditions: `p <= gamma` and `x >= M_2`.
pub fn cod11_holds(th: &Thresholds, x: f64, p: f64) -> bool {
    p <= th.gamma && x >= th.m2
}

/// `tau(x*)`: `x*` if `theta(x*) >= gamma`, else the first `x >= M_2` with `p(x, x*) <= gamma`.
pub fn tau(sol: &EquilibriumSolution, th: &Thresholds) -> f64 {
    let x_star = sol.x_star();
    if sol.model().theta_star() >= th.gamma {
        return x_star;
    }
    let lo = th.m2.max(sol.covered_from());
    if sol.eval(lo).price <= th.gamma {
        return lo;
    }
    roots::bisect(
        |x| sol.eval(x).price - th.gamma,
        lo,
        x_star,
        1e-10 * x_star,
        200,
    )
    .unwrap_or(x_star)
}

/// Values at one probe of one sweep entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeValue {
    pub x: f64,
    pub v: f64,
    pub p: f64,
    pub u: f64,
    pub v_dev: f64,
    /// `u = v = 0` at the probe.
    pub no_control: bool,
    /// `B (1 - R / x)^{r / (r + lambda)}` (bounded regime only).
    pub bound_bb: Option<f64>,
    /// `B (x / (theta x*))^{r / (r - mu)}`.
    pub bound_e1: f64,
    /// `B (x / tau)^{r gamma / (r + lambda)}`.
    pub bound_e2: f64,
    /// Explicit-regime values where that regime holds on `[x, x*]`.
    pub explicit: Option<(f64, f64)>,
}

/// One threshold `x*` of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub x_star: f64,
    pub theta: f64,
    pub complete: bool,
    pub covered_from: f64,
    pub tau: f64,
    /// `u = v = 0` on a 201-point grid of `[max(M, covered_from), x*]` (bounded regime only).
    pub no_control_above_m: Option<bool>,
    pub probes: Vec<ProbeValue>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub salvage: Salvage,
    pub regime: String,
    pub thresholds: Thresholds,
    pub entries: Vec<SweepEntry>,
}

impl SweepResult {
    /// Probe values at `x` over the `x*` grid (entries without that probe are skipped).
    pub fn values_at(&self, x: f64) -> Vec<(f64, f64)> {
        self.entries
            .iter()
            .filter_map(|e| e.probes.iter().find(|p| p.x == x).map(|p| (e.x_star, p.v)))
            .collect()
    }

    /// Bounded regime: `V >= bb - tol` and `u = v = 0` at every probe `x >= M`.
    pub fn bounded_bound_holds(&self, tol: f64) -> bool {
        let Some(m) = self.thresholds.m else {
            return false;
        };
        let mut any = false;
        for e in &self.entries {
            if e.error.is_some() {
                return false;
            }
            for p in e.probes.iter().filter(|p| p.x >= m) {
                any = true;
                let bb = p.bound_bb.unwrap_or(f64::INFINITY);
                if !(p.v >= bb - tol && p.no_control) {
                    return false;
                }
            }
        }
        any
    }

    /// Ponzi regime: `eq e1` on `[tau, x*]` and `eq e2` on `[M_2, tau]` at every probe.
    pub fn ponzi_bounds_hold(&self, rel_tol: f64) -> bool {
        let mut any = false;
        for e in &self.entries {
            if e.error.is_some() {
                return false;
            }
            for p in e.probes.iter().filter(|p| p.x >= self.thresholds.m2) {
                any = true;
                let slack = rel_tol * self.b_scale();
                if p.x >= e.tau && p.v > p.bound_e1 + slack {
                    return false;
                }
                if p.x <= e.tau && p.v > p.bound_e2 + slack {
                    return false;
                }
            }
        }
        any
    }

    fn b_scale(&self) -> f64 {
        self.entries
            .iter()
            .flat_map(|e| e.probes.iter())
            .map(|p| p.v.abs())
            .fold(1.0, f64::max)
    }

    /// `V(x, x*)` strictly decreasing along the `x*` grid at every probe.
    pub fn monotone_decay(&self) -> bool {
        let xs: Vec<f64> = self
            .entries
            .first()
            .map(|e| e.probes.iter().map(|p| p.x).collect())
            .unwrap_or_default();
        !xs.is_empty()
            && xs.iter().all(|&x| {
                let vals = self.values_at(x);
                vals.len() == self.entries.len() && vals.windows(2).all(|w| w[1].1 < w[0].1)
            })
    }

    /// CSV `(x_star, x, V, p, u, v, regime, bound_bb, bound_e1, bound_e2, tau, complete)`.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("x_star,x,V,p,u,v,regime,bound_bb,bound_e1,bound_e2,tau,complete\n");
        for e in &self.entries {
            for p in &e.probes {
                let bb = p.bound_bb.map(|b| format!("{b:.16e}")).unwrap_or_default();
                out.push_str(&format!(
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{:.16e},{:.16e},{:.16e},{}\n",
                    e.x_star, p.x, p.v, p.p, p.u, p.v_dev, self.regime, bb, p.bound_e1, p.bound_e2, e.tau, e.complete
                ));
            }
        }
        out
    }
}

fn sweep_entry(
    template: &Model,
    x_star: f64,
    probes: &[f64],
    th: &Thresholds,
    opts: SolverOptions,
) -> SweepEntry {
    let model = template.with_x_star(x_star);
    let theta = model.theta_star();
    let mut entry = SweepEntry {
        x_star,
        theta,
        complete: false,
        covered_from: x_star,
        tau: x_star,
        no_control_above_m: None,
        probes: Vec::new(),
        error: None,
    };
    let sol = match EquilibriumSolution::build_with(&model, opts, BuildOptions::relaxed()) {
        Ok(s) => s,
        Err(e) => {
            entry.error = Some(e.to_string());
            return entry;
        }
    };
    entry.complete = sol.is_complete();
    entry.covered_from = sol.covered_from();
    entry.tau = tau(&sol, th);
    if let Some(m) = th.m {
        let lo = m.max(sol.covered_from());
        entry.no_control_above_m = Some(
            lo < x_star
                && (0..=200).all(|i| {
                    let x = lo + (x_star - lo) * i as f64 / 200.0;
                    sol.feedback(x) == (0.0, 0.0)
                }),
        );
    }
    let (r, lam, mu, b) = (model.r(), model.lambda(), model.mu(), model.b());
    for &x in probes
        .iter()
        .filter(|&&x| x > sol.covered_from() && x <= x_star)
    {
        let e = sol.eval(x);
        let (u, v_dev) = sol.feedback(x);
        let explicit = explicit_regime(&model, x, x_star, theta)
            .ok()
            .map(|pt| (pt.v, pt.p));
        entry.probes.push(ProbeValue {
            x,
            v: e.value,
            p: e.price,
            u,
            v_dev,
            no_control: u == 0.0 && v_dev == 0.0,
            bound_bb: limsup_theta_s(&model.params.salvage)
                .map(|rr| b * (1.0 - rr / x).max(0.0).powf(r / (r + lam))),
            bound_e1: b * (x / (theta * x_star)).powf(r / (r - mu)),
            bound_e2: b * (x / entry.tau).powf(r * th.gamma / (r + lam)),
            explicit,
        });
    }
    entry
}

/// Builds the equilibrium at each `x*` (in parallel) and evaluates the probes.
pub fn sweep(
    template: &Model,
    x_stars: &[f64],
    probes: &[f64],
    opts: SolverOptions,
) -> SweepResult {
    let salvage = template.params.salvage;
    let th = Thresholds::new(template, sup_theta_s(&salvage));
    let entries = x_stars
        .par_iter()
        .map(|&xs| sweep_entry(template, xs, probes, &th, opts))
        .collect();
    SweepResult {
        salvage,
        regime: classify(&salvage).to_string(),
        thresholds: th,
        entries,
    }
}

/// Sweep for a family with finite `sup theta(s) s`; probes default to `2M` when empty.
pub fn regime_bounded(
    template: &Model,
    x_stars: &[f64],
    probes: &[f64],
    opts: SolverOptions,
) -> Result<SweepResult> {
    let th = Thresholds::new(template, sup_theta_s(&template.params.salvage));
    let Some(m) = th.m else {
        return Err(Error::Config(
            "bounded regime needs sup theta(s) s < inf".into(),
        ));
    };
    let probes = if probes.is_empty() {
        vec![2.0 * m]
    } else {
        probes.to_vec()
    };
    Ok(sweep(template, x_stars, &probes, opts))
}

/// Sweep for a family with `theta(s) s -> inf`; probes default to `M_2` when empty.
pub fn regime_ponzi(
    template: &Model,
    x_stars: &[f64],
    probes: &[f64],
    opts: SolverOptions,
) -> Result<SweepResult> {
    if limsup_theta_s(&template.params.salvage).is_some() {
        return Err(Error::Config("ponzi regime needs theta(s) s -> inf".into()));
    }
    let th = Thresholds::new(template, None);
    let probes = if probes.is_empty() {
        vec![th.m2]
    } else {
        probes.to_vec()
    };
    Ok(sweep(template, x_stars, &probes, opts))
}

/// First inequality pair: `x* > (L'(0) + B r) / (L'(0) (r - mu))` and `B >= 2 (r - mu) c'(0) / r`.
pub fn cond12(model: &Model) -> bool {
    let (r, mu, b) = (model.r(), model.mu(), model.b());
    let l0 = model.costs.l_prime(0.0);
    let c0 = model.costs.c_prime(0.0);
    model.x_star() > (l0 + b * r) / (l0 * (r - mu)) && b >= 2.0 * (r - mu) * c0 / r
}

/// `theta(x*) x* > 2 (r + lambda) c'(0) / (r - mu) (1 / (r B) + 1 / L'(0))`.
pub fn cond13(model: &Model) -> bool {
    let (r, lam, mu, b) = (model.r(), model.lambda(), model.mu(), model.b());
    let l0 = model.costs.l_prime(0.0);
    let c0 = model.costs.c_prime(0.0);
    model.theta_star() * model.x_star()
        > 2.0 * (r + lam) * c0 / (r - mu) * (1.0 / (r * b) + 1.0 / l0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DevaluationCheck {
    pub cond12: bool,
    pub cond13: bool,
    pub witness: Option<f64>,
    pub v_at_witness: f64,
    pub grid_points: usize,
    pub covered_from: f64,
}

/// Scans `v*` on a 1001-point grid of the covered interval `(x_covered, x*]` for a point with `v* > 0`.
///
/// Returns [`Error::WitnessNotFound`] when both conditions hold and no witness exists.
pub fn devaluation_active(model: &Model, opts: SolverOptions) -> Result<DevaluationCheck> {
    let (c12, c13) = (cond12(model), cond13(model));
    let sol = EquilibriumSolution::build_with(model, opts, BuildOptions::relaxed())?;
    let lo = sol.covered_from();
    let x_star = model.x_star();
    let n = 1000;
    let witness = (0..=n)
        .map(|i| lo + (x_star - lo) * i as f64 / n as f64)
        .filter(|&x| x > lo && x > 0.0)
        .map(|x| (x, sol.feedback(x).1))
        .find(|&(_, v)| v > 0.0);
    if witness.is_none() && c12 && c13 {
        return Err(Error::WitnessNotFound);
    }
    Ok(DevaluationCheck {
        cond12: c12,
        cond13: c13,
        witness: witness.map(|w| w.0),
        v_at_witness: witness.map_or(0.0, |w| w.1),
        grid_points: n + 1,
        covered_from: lo,
    })
}
