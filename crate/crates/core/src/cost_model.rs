//! Effort cost `L` on `[0, 1)` and devaluation cost `c` on `[0, inf)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::roots;

/// A strictly convex, increasing cost function with `f(0) = 0`.
pub trait ConvexCost: Send + Sync + fmt::Debug {
    fn value(&self, s: f64) -> f64;
    fn deriv(&self, s: f64) -> f64;
    fn second(&self, s: f64) -> f64;
    /// Exclusive upper end of the domain; `f64::INFINITY` when unbounded.
    fn domain_end(&self) -> f64;

    /// Inverse of `deriv` on `[deriv(0), inf)`. Generic fallback is bisection
    /// on a bracket grown by doubling.
    fn deriv_inv(&self, rho: f64) -> f64 {
        generic_deriv_inv(self, rho)
    }
}

fn generic_deriv_inv<C: ConvexCost + ?Sized>(cost: &C, rho: f64) -> f64 {
    if rho <= cost.deriv(0.0) {
        return 0.0;
    }
    let end = cost.domain_end();
    let hi = if end.is_finite() {
        // shrink toward the blow-up point until the derivative exceeds rho
        let mut gap = 0.5 * end;
        let mut hi = end - gap;
        for _ in 0..1000 {
            if cost.deriv(hi) >= rho {
                break;
            }
            gap *= 0.5;
            hi = end - gap;
            if gap < f64::EPSILON * end {
                return hi;
            }
        }
        hi
    } else {
        match roots::grow_until(|s| cost.deriv(s) >= rho, 1.0, 1100) {
            Some(h) => h,
            None => return f64::INFINITY,
        }
    };
    roots::bisect(
        |s| cost.deriv(s) - rho,
        0.0,
        hi,
        1e-12 * (1.0 + rho.abs()),
        200,
    )
    .unwrap_or(hi)
}

/// `L(u) = l0 u - ln(1 - u) - u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceEffort {
    pub l0: f64,
}

impl ConvexCost for ReferenceEffort {
    fn value(&self, u: f64) -> f64 {
        // -ln(1-u) - u is evaluated without cancellation for small u
        self.l0 * u - (-u).ln_1p() - u
    }
    fn deriv(&self, u: f64) -> f64 {
        self.l0 + u / (1.0 - u)
    }
    fn second(&self, u: f64) -> f64 {
        1.0 / ((1.0 - u) * (1.0 - u))
    }
    fn domain_end(&self) -> f64 {
        1.0
    }
    fn deriv_inv(&self, rho: f64) -> f64 {
        if rho <= self.l0 {
            0.0
        } else {
            (rho - self.l0) / (1.0 + rho - self.l0)
        }
    }
}

/// `c(v) = c1 v + v^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceDevaluation {
    pub c1: f64,
}

impl ConvexCost for ReferenceDevaluation {
    fn value(&self, v: f64) -> f64 {
        self.c1 * v + 0.5 * v * v
    }
    fn deriv(&self, v: f64) -> f64 {
        self.c1 + v
    }
    fn second(&self, _v: f64) -> f64 {
        1.0
    }
    fn domain_end(&self) -> f64 {
        f64::INFINITY
    }
    fn deriv_inv(&self, rho: f64) -> f64 {
        if rho <= self.c1 {
            0.0
        } else {
            rho - self.c1
        }
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Cost built from closures; its inverse marginal uses the bisection fallback.
#[derive(Clone)]
pub struct FnCost {
    pub name: String,
    value: ScalarFn,
    deriv: ScalarFn,
    second: ScalarFn,
    domain_end: f64,
}

impl FnCost {
    pub fn new(
        name: impl Into<String>,
        domain_end: f64,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
        second: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            value: Arc::new(value),
            deriv: Arc::new(deriv),
            second: Arc::new(second),
            domain_end,
        }
    }
}

impl fmt::Debug for FnCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnCost({})", self.name)
    }
}

impl ConvexCost for FnCost {
    fn value(&self, s: f64) -> f64 {
        (self.value)(s)
    }
    fn deriv(&self, s: f64) -> f64 {
        (self.deriv)(s)
    }
    fn second(&self, s: f64) -> f64 {
        (self.second)(s)
    }
    fn domain_end(&self) -> f64 {
        self.domain_end
    }
}

/// Serializable description of a cost family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostSpec {
    Reference { l0: f64, c1: f64, delta0: f64 },
}

impl CostSpec {
    pub fn build(&self) -> CostModel {
        match *self {
            CostSpec::Reference { l0, c1, delta0 } => {
                CostModel::reference_with_delta(l0, c1, delta0)
            }
        }
    }
}

/// The pair `(L, c)` plus the certified curvature floor `delta0`.
#[derive(Debug, Clone)]
pub struct CostModel {
    pub effort: Arc<dyn ConvexCost>,
    pub devaluation: Arc<dyn ConvexCost>,
    pub delta0: f64,
}

impl CostModel {
    pub fn new(effort: Arc<dyn ConvexCost>, devaluation: Arc<dyn ConvexCost>, delta0: f64) -> Self {
        Self {
            effort,
            devaluation,
            delta0,
        }
    }

    /// Reference family; `L'' >= 1` and `c'' = 1`, so `delta0 = 1`.
    pub fn reference(l0: f64, c1: f64) -> Self {
        Self::reference_with_delta(l0, c1, 1.0)
    }

    pub fn reference_with_delta(l0: f64, c1: f64, delta0: f64) -> Self {
        Self::new(
            Arc::new(ReferenceEffort { l0 }),
            Arc::new(ReferenceDevaluation { c1 }),
            delta0,
        )
    }

    #[inline]
    pub fn l(&self, u: f64) -> f64 {
        self.effort.value(u)
    }
    #[inline]
    pub fn l_prime(&self, u: f64) -> f64 {
        self.effort.deriv(u)
    }
    #[inline]
    pub fn l_second(&self, u: f64) -> f64 {
        self.effort.second(u)
    }
    #[inline]
    pub fn l_prime_inv(&self, rho: f64) -> f64 {
        self.effort.deriv_inv(rho)
    }
    #[inline]
    pub fn c(&self, v: f64) -> f64 {
        self.devaluation.value(v)
    }
    #[inline]
    pub fn c_prime(&self, v: f64) -> f64 {
        self.devaluation.deriv(v)
    }
    #[inline]
    pub fn c_second(&self, v: f64) -> f64 {
        self.devaluation.second(v)
    }
    #[inline]
    pub fn c_prime_inv(&self, rho: f64) -> f64 {
        self.devaluation.deriv_inv(rho)
    }

    /// Inverse of `c` itself (not of `c'`), used by the asymptotic thresholds.
    pub fn c_inv(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let hi = roots::grow_until(|v| self.c(v) >= y, 1.0, 1100).unwrap_or(f64::MAX);
        roots::bisect(|v| self.c(v) - y, 0.0, hi, 1e-15 * (1.0 + hi), 300).unwrap_or(hi)
    }

    /// Minimizer of `L(u) - u xi / p`.
    #[inline]
    pub fn u_star(&self, xi: f64, p: f64) -> f64 {
        let rho = xi / p;
        if rho <= self.l_prime(0.0) {
            0.0
        } else {
            self.l_prime_inv(rho)
        }
    }

    /// Minimizer of `c(v) - v x xi`.
    #[inline]
    pub fn v_star(&self, x: f64, xi: f64) -> f64 {
        let rho = x * xi;
        if rho <= self.c_prime(0.0) {
            0.0
        } else {
            self.c_prime_inv(rho)
        }
    }

    /// `L°(rho) = sup_u (rho u - L(u))`.
    pub fn conj_l(&self, rho: f64) -> f64 {
        let u = self.u_star(rho, 1.0);
        rho * u - self.l(u)
    }

    /// `c°(rho) = sup_v (rho v - c(v))`.
    pub fn conj_c(&self, rho: f64) -> f64 {
        let v = self.v_star(1.0, rho);
        rho * v - self.c(v)
    }

    /// Grid checks of the standing assumptions; never aborts.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let mut push = |msg: &str| {
            if !violations.iter().any(|v: &String| v == msg) {
                violations.push(msg.to_string());
            }
        };
        if self.l(0.0).abs() > 1e-14 {
            push("L(0)=0 violated");
        }
        if self.c(0.0).abs() > 1e-14 {
            push("c(0)=0 violated");
        }
        if !(self.l_prime(0.0) > 0.0) {
            push("L′(0)>0 violated");
        }
        if !(self.c_prime(0.0) > 0.0) {
            push("c′(0)>0 violated");
        }
        if !(self.delta0 > 0.0) {
            push("delta0 > 0 violated");
        }
        let n = 200;
        for i in 0..n {
            let u = 0.999 * i as f64 / n as f64;
            if !(self.l_prime(u) > 0.0) && u > 0.0 {
                push("L′>0 violated");
            }
            if self.l_second(u) < self.delta0 {
                push("L″ ≥ delta0 violated");
            }
            let v = 20.0 * i as f64 / n as f64;
            if !(self.c_prime(v) > 0.0) && v > 0.0 {
                push("c′>0 violated");
            }
            if self.c_second(v) < self.delta0 {
                push("c″ ≥ delta0 violated");
            }
        }
        // growth between 1 - 1e-6 and 1 - 1e-12 must not fade relative to the previous three decades
        let (l3, l6, l12) = (self.l(1.0 - 1e-3), self.l(1.0 - 1e-6), self.l(1.0 - 1e-12));
        if !(l6 > l3 && l12 - l6 >= 0.5 * (l6 - l3) && l12.is_finite()) {
            push("L(u) → ∞ as u → 1 violated");
        }
        for i in 1..50 {
            let u = 0.98 * i as f64 / 50.0;
            let back = self.l_prime_inv(self.l_prime(u));
            if (back - u).abs() > 1e-10 * u.abs().max(1e-300) {
                push("L′ inverse round trip violated");
            }
            let v = 10.0 * i as f64 / 50.0;
            let back = self.c_prime_inv(self.c_prime(v));
            if (back - v).abs() > 1e-10 * v.abs().max(1e-300) {
                push("c′ inverse round trip violated");
            }
        }
        ValidationReport { violations }
    }
}

/// Outcome of [`CostModel::validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}
