//! The Hamiltonian `H(x, xi, p)`, its maximizer in `xi`, and the two branch inverses.

use serde::{Deserialize, Serialize};

use crate::cost_model::{CostModel, CostSpec};
use crate::error::{Error, Result};
use crate::roots;

/// Salvage rate as a function of the bankruptcy threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Salvage {
    Constant {
        value: f64,
    },
    /// `theta(s) = min(1, coefficient * s^(-exponent))`.
    PowerLaw {
        coefficient: f64,
        exponent: f64,
    },
}

impl Salvage {
    pub fn theta(&self, s: f64) -> f64 {
        match *self {
            Salvage::Constant { value } => value,
            Salvage::PowerLaw {
                coefficient,
                exponent,
            } => (coefficient * s.powf(-exponent)).min(1.0),
        }
    }
}

/// Economic constants. `b` is the bankruptcy cost `B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub r: f64,
    pub lambda: f64,
    pub mu: f64,
    pub x_star: f64,
    pub bankruptcy_cost: f64,
    pub salvage: Salvage,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.r,
            self.lambda,
            self.mu,
            self.x_star,
            self.bankruptcy_cost,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("model parameters must be finite".into()));
        }
        if !(self.r > self.mu) {
            return Err(Error::Config(format!(
                "r > mu required (r = {}, mu = {})",
                self.r, self.mu
            )));
        }
        if self.mu < 0.0 {
            return Err(Error::Config("mu >= 0 required".into()));
        }
        if self.lambda < 0.0 {
            return Err(Error::Config("lambda >= 0 required".into()));
        }
        if !(self.x_star > 0.0) {
            return Err(Error::Config("x_star > 0 required".into()));
        }
        if !(self.bankruptcy_cost > 0.0) {
            return Err(Error::Config("bankruptcy_cost > 0 required".into()));
        }
        let th = self.theta_star();
        if !(0.0..=1.0).contains(&th) {
            return Err(Error::Config(format!(
                "theta(x_star) = {th} outside [0, 1]"
            )));
        }
        Ok(())
    }

    pub fn theta_star(&self) -> f64 {
        self.salvage.theta(self.x_star)
    }
}

/// Serializable model description: parameters plus cost family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub params: ModelParams,
    pub costs: CostSpec,
}

impl ModelSpec {
    pub fn build(&self) -> Result<Model> {
        self.params.validate()?;
        let mut m = Model::new(self.params, self.costs.build())?;
        m.spec = Some(self.clone());
        Ok(m)
    }
}

/// Branch of the equation `H(x, xi, p) = r eta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// Root in `[0, xi_sharp]`; debt increases along it.
    Minus,
    /// Root in `[xi_sharp, inf)`.
    Plus,
}

/// `H` and its gradient at one point, with the minimizing controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianPoint {
    pub x: f64,
    pub xi: f64,
    pub p: f64,
    pub u: f64,
    pub v: f64,
    pub h: f64,
    pub h_x: f64,
    pub h_xi: f64,
    pub h_p: f64,
}

/// Parameters and costs together; all Hamiltonian quantities hang off this.
#[derive(Debug, Clone)]
pub struct Model {
    pub params: ModelParams,
    pub costs: CostModel,
    pub spec: Option<ModelSpec>,
}

impl Model {
    pub fn new(params: ModelParams, costs: CostModel) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            costs,
            spec: None,
        })
    }

    /// Reference costs with `r = 0.05, lambda = 0.2, mu = 0.02`.
    pub fn reference(x_star: f64, bankruptcy_cost: f64, salvage: Salvage) -> Self {
        let spec = ModelSpec {
            params: ModelParams {
                r: 0.05,
                lambda: 0.2,
                mu: 0.02,
                x_star,
                bankruptcy_cost,
                salvage,
            },
            costs: CostSpec::Reference {
                l0: 0.1,
                c1: 0.2,
                delta0: 1.0,
            },
        };
        spec.build().expect("reference parameters are valid")
    }

    #[inline]
    pub fn r(&self) -> f64 {
        self.params.r
    }
    #[inline]
    pub fn lambda(&self) -> f64 {
        self.params.lambda
    }
    #[inline]
    pub fn mu(&self) -> f64 {
        self.params.mu
    }
    #[inline]
    pub fn x_star(&self) -> f64 {
        self.params.x_star
    }
    #[inline]
    pub fn b(&self) -> f64 {
        self.params.bankruptcy_cost
    }
    #[inline]
    pub fn theta_star(&self) -> f64 {
        self.params.theta_star()
    }

    /// Same costs and rates with a different threshold `x*`.
    pub fn with_x_star(&self, x_star: f64) -> Self {
        let mut m = self.clone();
        m.params.x_star = x_star;
        if let Some(spec) = m.spec.as_mut() {
            spec.params.x_star = x_star;
        }
        m
    }

    /// Unchecked evaluation; callers guarantee `p > 0`.
    #[inline]
    pub fn point(&self, x: f64, xi: f64, p: f64) -> HamiltonianPoint {
        let (r, lam, mu) = (self.r(), self.lambda(), self.mu());
        let u = self.costs.u_star(xi, p);
        let v = self.costs.v_star(x, xi);
        let drift = (lam + r) - p * (lam + mu + v);
        let h = self.costs.l(u) - u * xi / p + self.costs.c(v) - v * x * xi
            + ((lam + r) / p - lam - mu) * x * xi;
        HamiltonianPoint {
            x,
            xi,
            p,
            u,
            v,
            h,
            h_x: drift * xi / p,
            h_xi: (x * drift - u) / p,
            h_p: (u - x * (lam + r)) * xi / (p * p),
        }
    }

    fn check_p(p: f64) -> Result<()> {
        if p > 0.0 && p.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!("price p = {p} must be positive")))
        }
    }

    pub fn h(&self, x: f64, xi: f64, p: f64) -> Result<f64> {
        Self::check_p(p)?;
        Ok(self.point(x, xi, p).h)
    }

    /// `(H_x, H_xi, H_p)`.
    pub fn grad_h(&self, x: f64, xi: f64, p: f64) -> Result<(f64, f64, f64)> {
        Self::check_p(p)?;
        let pt = self.point(x, xi, p);
        Ok((pt.h_x, pt.h_xi, pt.h_p))
    }

    /// `d H_xi / d xi` (one-sided at the kink loci).
    fn h_xixi(&self, pt: &HamiltonianPoint) -> f64 {
        let mut d = 0.0;
        if pt.u > 0.0 {
            d -= 1.0 / (pt.p * pt.p * self.costs.l_second(pt.u));
        }
        if pt.v > 0.0 {
            d -= pt.x * pt.x / self.costs.c_second(pt.v);
        }
        d
    }

    /// Unique maximizer of `xi -> H(x, xi, p)`.
    pub fn xi_sharp(&self, x: f64, p: f64) -> Result<f64> {
        Self::check_p(p)?;
        if !(x > 0.0) {
            return Err(Error::Domain(format!("xi_sharp needs x > 0 (got {x})")));
        }
        let thr = (p * self.costs.l_prime(0.0)).min(self.costs.c_prime(0.0) / x);
        let start = thr.max(f64::MIN_POSITIVE) * 2.0;
        let hi = roots::grow_until(|xi| self.point(x, xi, p).h_xi < 0.0, start, 2000).ok_or(
            Error::RootNotBracketed {
                lo: thr,
                hi: f64::INFINITY,
            },
        )?;
        roots::newton_bisect(
            |xi| {
                let pt = self.point(x, xi, p);
                (pt.h_xi, self.h_xixi(&pt))
            },
            thr,
            hi,
            0.0,
            300,
        )
    }

    /// `max_xi H(x, xi, p)`; zero at `x = 0`.
    pub fn h_max(&self, x: f64, p: f64) -> Result<f64> {
        if x <= 0.0 {
            Self::check_p(p)?;
            return Ok(0.0);
        }
        let xs = self.xi_sharp(x, p)?;
        Ok(self.point(x, xs, p).h)
    }

    /// `(xi_sharp, H_max)` in one call.
    pub fn sharp(&self, x: f64, p: f64) -> Result<(f64, f64)> {
        let xs = self.xi_sharp(x, p)?;
        Ok((xs, self.point(x, xs, p).h))
    }

    /// Root of `H(x, xi, p) = r eta` on the requested branch.
    pub fn f_branch(&self, branch: Branch, x: f64, eta: f64, p: f64) -> Result<f64> {
        Self::check_p(p)?;
        if !(eta > 0.0) {
            return Err(Error::Domain(format!("eta = {eta} must be positive")));
        }
        if !(x > 0.0) {
            return Err(Error::Domain(format!("branch root needs x > 0 (got {x})")));
        }
        let (xs, hmax) = self.sharp(x, p)?;
        self.f_branch_with(branch, x, eta, p, xs, hmax)
    }

    /// As [`Model::f_branch`] with a precomputed `(xi_sharp, H_max)`.
    pub fn f_branch_with(
        &self,
        branch: Branch,
        x: f64,
        eta: f64,
        p: f64,
        xs: f64,
        hmax: f64,
    ) -> Result<f64> {
        let target = self.r() * eta;
        let snap = 1e-13 * hmax.abs();
        if target > hmax + snap {
            return Err(Error::NoSolution {
                r_eta: target,
                h_max: hmax,
            });
        }
        if target >= hmax - snap {
            return Ok(xs);
        }
        let g = |xi: f64| {
            let pt = self.point(x, xi, p);
            (pt.h - target, pt.h_xi)
        };
        match branch {
            Branch::Minus => roots::newton_bisect(g, 0.0, xs, 0.0, 300),
            Branch::Plus => {
                let hi = roots::grow_until(|xi| self.point(x, xi, p).h < target, 2.0 * xs, 2000)
                    .ok_or(Error::RootNotBracketed {
                        lo: xs,
                        hi: f64::INFINITY,
                    })?;
                roots::newton_bisect(g, xs, hi, 0.0, 300)
            }
        }
    }

    /// Singularity threshold for `|H_xi|`; scaled by `min(1, x)` because `H_xi` vanishes linearly at `x = 0`.
    pub fn eps_sing(x: f64) -> f64 {
        1e-9 * (1.0 + x) * x.min(1.0)
    }

    /// Price slope `((r+lambda+v*) p - (r+lambda)) / H_xi` at the branch root.
    pub fn g_branch(&self, branch: Branch, x: f64, eta: f64, p: f64) -> Result<f64> {
        let xi = self.f_branch(branch, x, eta, p)?;
        let pt = self.point(x, xi, p);
        if pt.h_xi.abs() < Self::eps_sing(x) {
            return Err(Error::SingularSlope { x, h_xi: pt.h_xi });
        }
        Ok(((self.r() + self.lambda() + pt.v) * p - (self.r() + self.lambda())) / pt.h_xi)
    }

    /// `d F / d eta = r / H_xi` at the branch root.
    pub fn df_deta(&self, branch: Branch, x: f64, eta: f64, p: f64) -> Result<f64> {
        let xi = self.f_branch(branch, x, eta, p)?;
        let pt = self.point(x, xi, p);
        if pt.h_xi.abs() < Self::eps_sing(x) {
            return Err(Error::SingularSlope { x, h_xi: pt.h_xi });
        }
        Ok(self.r() / pt.h_xi)
    }

    /// `d F^- / d p = -H_p / H_xi`.
    pub fn df_dp_minus(&self, x: f64, eta: f64, p: f64) -> Result<f64> {
        let xi = self.f_branch(Branch::Minus, x, eta, p)?;
        let pt = self.point(x, xi, p);
        if pt.h_xi.abs() < Self::eps_sing(x) {
            return Err(Error::SingularSlope { x, h_xi: pt.h_xi });
        }
        Ok(-pt.h_p / pt.h_xi)
    }

    /// Hoelder constant `C(x1, p1)` of the Minus branch in `eta`, as printed.
    pub fn holder_constant(&self, x1: f64, p1: f64) -> f64 {
        let (r, mu) = (self.r(), self.mu());
        (2.0 * r * self.costs.delta0 / (1.0f64).min(x1 * x1 * p1)).sqrt()
            + (2.0 * self.b()).sqrt() * r / ((r - mu) * x1)
    }

    /// `xi` grid dump `(xi, H, H_xi)` for plotting.
    pub fn curve_csv(&self, x: f64, p: f64, xi_max: f64, n: usize) -> String {
        let mut out = String::from("xi,H,H_xi\n");
        for i in 0..=n {
            let xi = xi_max * i as f64 / n as f64;
            let pt = self.point(x, xi, p);
            out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", xi, pt.h, pt.h_xi));
        }
        out
    }
}
