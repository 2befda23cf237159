//! Concatenation of backward arcs into the feedback equilibrium `(V*, p*)`.

use serde::{Deserialize, Serialize};

use crate::backward_solver::{BackwardArc, BackwardSolver, EpsFamily, SolverOptions, StopReason};
use crate::error::{Error, Result};
use crate::hamiltonian::{Branch, Model, ModelSpec};

/// Knobs controlling how strictly [`EquilibriumSolution::build`] enforces its preconditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    /// Require `W(x*) > B` and `theta(x*) <= p_c(x*)`; otherwise only the first arc's own preconditions are checked.
    pub require_x_large: bool,
    /// Keep the arcs built so far when a later restart fails.
    pub allow_partial: bool,
    pub max_touch_points: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            require_x_large: true,
            allow_partial: false,
            max_touch_points: 10_000,
        }
    }
}

impl BuildOptions {
    /// Settings used by the asymptotic sweeps.
    pub fn relaxed() -> Self {
        Self {
            require_x_large: false,
            allow_partial: true,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BuildStatus {
    Complete,
    /// Construction stopped at `x_covered`; values are valid on `(x_covered, x*]`.
    Partial {
        reason: String,
        x_covered: f64,
    },
}

/// Summary of one eps-family (the limit arc is stored among the solution arcs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySummary {
    pub x0: f64,
    pub eps: Vec<f64>,
    pub a: Vec<f64>,
    pub sup_diff: Vec<f64>,
}

impl From<&EpsFamily> for FamilySummary {
    fn from(f: &EpsFamily) -> Self {
        Self {
            x0: f.x0,
            eps: f.eps.clone(),
            a: f.a.clone(),
            sup_diff: f.sup_diff.clone(),
        }
    }
}

/// Hypothesis checks reported with every build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub w_at_x_star: f64,
    pub b: f64,
    pub theta_star: f64,
    pub p_c_at_x_star: f64,
    pub w_exceeds_b: bool,
    pub theta_below_p_c: bool,
}

/// `(V*, p*, V*')` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateEval {
    pub value: f64,
    pub price: f64,
    pub slope: f64,
}

/// The assembled equilibrium.
#[derive(Debug, Clone)]
pub struct EquilibriumSolution {
    pub solver: BackwardSolver,
    /// `x_1 > x_2 > ...`
    pub touch_points: Vec<f64>,
    /// `arcs[0]` covers `(x_1, x*]`, `arcs[k]` covers `(a(x_k), x_k]`.
    pub arcs: Vec<BackwardArc>,
    pub families: Vec<FamilySummary>,
    pub status: BuildStatus,
    pub hypotheses: HypothesisReport,
    pub delta_flat: f64,
}

/// Versioned on-disk form of a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDocument {
    pub format: String,
    pub version: String,
    pub config_hash: String,
    pub model: ModelSpec,
    pub solver: SolverOptions,
    pub x_flat: f64,
    pub x_c: f64,
    pub delta_flat: f64,
    pub touch_points: Vec<f64>,
    pub status: BuildStatus,
    pub hypotheses: HypothesisReport,
    pub families: Vec<FamilySummary>,
    pub arcs: Vec<BackwardArc>,
}

pub const SOLUTION_FORMAT: &str = "debtgame-solution/1";

impl EquilibriumSolution {
    pub fn build(model: &Model, opts: SolverOptions) -> Result<Self> {
        Self::build_with(model, opts, BuildOptions::default())
    }

    pub fn build_with(model: &Model, opts: SolverOptions, bopts: BuildOptions) -> Result<Self> {
        let solver = BackwardSolver::new(model, opts)?;
        let (x_star, b, theta) = (model.x_star(), model.b(), model.theta_star());
        let w_star = solver.cs.w(x_star);
        let pc_star = solver.cs.p_c(x_star);
        let hypotheses = HypothesisReport {
            w_at_x_star: w_star,
            b,
            theta_star: theta,
            p_c_at_x_star: pc_star,
            w_exceeds_b: w_star > b,
            theta_below_p_c: theta <= pc_star,
        };
        if bopts.require_x_large {
            if !hypotheses.w_exceeds_b {
                return Err(Error::HypothesisViolated(format!(
                    "W(x*) > B fails: W(x*) = {w_star}, B = {b}"
                )));
            }
            if !hypotheses.theta_below_p_c {
                return Err(Error::HypothesisViolated(format!(
                    "θ(x*) ≤ p_c(x*) fails: θ(x*) = {theta}, p_c(x*) = {pc_star}"
                )));
            }
        }
        if !(theta > 0.0) {
            return Err(Error::HypothesisViolated(
                "θ(x*) > 0 needed for a backward arc".into(),
            ));
        }
        let hmax = model.h_max(x_star, theta)?;
        if model.r() * b > hmax {
            return Err(Error::HypothesisViolated(format!(
                "r B ≤ H_max(x*, θ(x*)) fails: rB = {}, H_max = {hmax}",
                model.r() * b
            )));
        }
        let arc1 = solver.integrate_backward(x_star, b, theta)?;
        if !matches!(arc1.stop_reason, StopReason::HitW | StopReason::HitZero) {
            return Err(Error::UnexpectedStop {
                x: arc1.x_left,
                reason: arc1.stop_reason.to_string(),
            });
        }
        let mut sol = Self {
            delta_flat: solver.delta_flat_bound(arc1.x_left),
            solver,
            touch_points: Vec::new(),
            arcs: vec![arc1],
            families: Vec::new(),
            status: BuildStatus::Complete,
            hypotheses,
        };
        loop {
            let last = sol.arcs.last().expect("at least one arc");
            if last.stop_reason == StopReason::HitZero {
                break;
            }
            let xk = last.x_left;
            if sol.touch_points.len() >= bopts.max_touch_points {
                let e = Error::UnexpectedStop {
                    x: xk,
                    reason: "touch-point limit".into(),
                };
                return sol.fail_or_partial(e, bopts);
            }
            sol.touch_points.push(xk);
            match sol.solver.eps_limit(xk) {
                Ok(fam) => {
                    sol.families.push(FamilySummary::from(&fam));
                    let a = fam.a_limit();
                    if fam.limit.stop_reason == StopReason::HitW && xk - a <= 1e-9 * (1.0 + xk) {
                        let e = Error::RestartStalled { x0: xk, gap: 0.0 };
                        sol.arcs.push(fam.limit);
                        return sol.fail_or_partial(e, bopts);
                    }
                    sol.arcs.push(fam.limit);
                }
                Err(e) => return sol.fail_or_partial(e, bopts),
            }
        }
        Ok(sol)
    }

    fn fail_or_partial(mut self, e: Error, bopts: BuildOptions) -> Result<Self> {
        if bopts.allow_partial {
            let x_covered = self
                .touch_points
                .last()
                .copied()
                .unwrap_or(self.arcs[0].x_left);
            // an arc ending in a stall is not trusted
            self.arcs.truncate(self.touch_points.len().max(1));
            self.status = BuildStatus::Partial {
                reason: e.to_string(),
                x_covered,
            };
            Ok(self)
        } else {
            Err(e)
        }
    }

    pub fn model(&self) -> &Model {
        &self.solver.model
    }

    pub fn x_star(&self) -> f64 {
        self.model().x_star()
    }

    pub fn is_complete(&self) -> bool {
        self.status == BuildStatus::Complete
    }

    /// Lower end of the interval where the solution is defined.
    pub fn covered_from(&self) -> f64 {
        match &self.status {
            BuildStatus::Complete => 0.0,
            BuildStatus::Partial { x_covered, .. } => *x_covered,
        }
    }

    /// `x_1`, the first contact of the terminal arc with `W` (0 if none).
    pub fn semi_equilibrium_point(&self) -> f64 {
        self.touch_points.first().copied().unwrap_or(0.0)
    }

    /// Number of arcs `N_0` counted as touch points plus the terminal arc minus one.
    pub fn n0(&self) -> usize {
        self.touch_points.len()
    }

    /// Index of the arc owning `x` (half-open intervals `(a, x_k]`).
    pub fn arc_index(&self, x: f64) -> usize {
        let n = self.arcs.len();
        if n == 1 || x > self.touch_points[0] {
            return 0;
        }
        (1..n).find(|&k| x > self.arcs[k].x_left).unwrap_or(n - 1)
    }

    /// `(V*, p*, V*')` at `x`.
    pub fn eval(&self, x: f64) -> StateEval {
        let x = x.clamp(0.0, self.x_star());
        let arc = &self.arcs[self.arc_index(x)];
        if x >= arc.x_t {
            if let Some([z, q, s]) = arc.terminal_override {
                return StateEval {
                    value: z,
                    price: q,
                    slope: s,
                };
            }
        }
        if x < arc.x_left {
            // extension below x_tiny (Z(0) = 0 continuity)
            let nd = arc.nodes.last().expect("arc has nodes");
            let value = if nd.x > 0.0 { nd.z * x / nd.x } else { 0.0 };
            return StateEval {
                value,
                price: nd.q,
                slope: nd.z_prime,
            };
        }
        let s = arc.state(x);
        let (z, q) = (s[0], s[1].min(1.0));
        StateEval {
            value: z,
            price: q,
            slope: self.slope_at(x, z, q),
        }
    }

    fn slope_at(&self, x: f64, z: f64, q: f64) -> f64 {
        let m = self.model();
        if x <= 0.0 || z <= 0.0 {
            return 0.0;
        }
        match m.f_branch(Branch::Minus, x, z, q) {
            Ok(f) => f,
            Err(_) => m.xi_sharp(x, q).unwrap_or(0.0),
        }
    }

    /// `(u*, v*)` from `V*'` and `p*`.
    pub fn feedback(&self, x: f64) -> (f64, f64) {
        let e = self.eval(x);
        let c = &self.model().costs;
        (c.u_star(e.slope, e.price), c.v_star(x, e.slope))
    }

    /// Closed-loop drift `H_xi(x, V*', p*)`.
    pub fn drift(&self, x: f64) -> f64 {
        let e = self.eval(x);
        self.model().point(x, e.slope, e.price).h_xi
    }

    /// Plot-ready samples `(x, V, p, V', u, v, W)`.
    pub fn sample_csv(&self, n: usize) -> String {
        let mut out = String::from("x,V,p,V_prime,u,v,W\n");
        let lo = self.covered_from();
        for i in 0..=n {
            let x = lo + (self.x_star() - lo) * i as f64 / n as f64;
            let e = self.eval(x);
            let (u, v) = self.feedback(x);
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                x,
                e.value,
                e.price,
                e.slope,
                u,
                v,
                self.solver.cs.w(x)
            ));
        }
        out
    }

    pub fn to_document(&self, config_hash: &str) -> Result<SolutionDocument> {
        let spec =
            self.model().spec.clone().ok_or_else(|| {
                Error::Config("model was not built from a serializable spec".into())
            })?;
        Ok(SolutionDocument {
            format: SOLUTION_FORMAT.into(),
            version: crate::ARTIFACT_VERSION.into(),
            config_hash: config_hash.into(),
            model: spec,
            solver: self.solver.opts,
            x_flat: self.solver.cs.x_flat(),
            x_c: self.solver.cs.x_c(),
            delta_flat: self.delta_flat,
            touch_points: self.touch_points.clone(),
            status: self.status.clone(),
            hypotheses: self.hypotheses.clone(),
            families: self.families.clone(),
            arcs: self.arcs.clone(),
        })
    }

    pub fn from_document(doc: SolutionDocument) -> Result<Self> {
        if doc.format != SOLUTION_FORMAT {
            return Err(Error::Config(format!(
                "unsupported solution format {}",
                doc.format
            )));
        }
        let model = doc.model.build()?;
        let solver = BackwardSolver::new(&model, doc.solver)?;
        Ok(Self {
            solver,
            touch_points: doc.touch_points,
            arcs: doc.arcs,
            families: doc.families,
            status: doc.status,
            hypotheses: doc.hypotheses,
            delta_flat: doc.delta_flat,
        })
    }
}
