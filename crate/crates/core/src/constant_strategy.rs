//! Strategies that hold the debt ratio fixed: `v_c`, `p_c`, the envelope `W`, and the abscissas `x_c`, `x_flat`.

use crate::error::{Error, Result};
use crate::hamiltonian::Model;
use crate::roots;

/// Evaluator for the best constant strategy at each debt level.
#[derive(Debug, Clone)]
pub struct ConstantStrategy {
    model: Model,
    x_c: f64,
    x_flat: f64,
}

impl ConstantStrategy {
    pub fn new(model: &Model) -> Result<Self> {
        let (r, mu, lam) = (model.r(), model.mu(), model.lambda());
        let c0 = model.costs.c_prime(0.0);
        let x_c = solve_increasing(model, |x| {
            (r - mu) * x * model.costs.l_prime((r - mu) * x) - (r + lam) * c0
        })?;
        let x_flat = solve_increasing(model, |x| x * model.costs.l_prime((r - mu) * x) - c0)?;
        Ok(Self {
            model: model.clone(),
            x_c,
            x_flat,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    /// Root of `(r+lambda) c'(0) = (r-mu) x L'((r-mu)x)`.
    pub fn x_c(&self) -> f64 {
        self.x_c
    }

    /// Root of `c'(0) = x L'((r-mu)x)`.
    pub fn x_flat(&self) -> f64 {
        self.x_flat
    }

    fn k(&self) -> f64 {
        self.model.r() + self.model.lambda()
    }

    /// Repayment fraction held by the constant strategy with devaluation `v`.
    fn u_of(&self, x: f64, v: f64) -> f64 {
        self.k() * (self.model.r() - self.model.mu()) * x / (self.k() + v)
    }

    /// First-order condition of `v -> L(u(v)) + c(v)`; increasing in `v`.
    fn foc(&self, x: f64, v: f64) -> f64 {
        let u = self.u_of(x, v);
        if u >= 1.0 {
            return f64::NEG_INFINITY;
        }
        let c = &self.model.costs;
        c.c_prime(v) - u * c.l_prime(u) / (self.k() + v)
    }

    /// Devaluation rate of the optimal constant strategy.
    pub fn v_c(&self, x: f64) -> f64 {
        if x <= self.x_c {
            return 0.0;
        }
        let k = self.k();
        let v_min = (k * ((self.model.r() - self.model.mu()) * x - 1.0)).max(0.0);
        let mut lo = v_min;
        if v_min > 0.0 {
            // step inside the feasible set u < 1
            lo = v_min * (1.0 + 1e-15) + 1e-300;
        }
        if self.foc(x, lo) >= 0.0 {
            return lo;
        }
        let start = (2.0 * lo).max(1e-3);
        let hi = roots::grow_until(|v| self.foc(x, v) > 0.0, start, 1100).unwrap_or(f64::MAX);
        roots::bisect(|v| self.foc(x, v), lo, hi, 1e-12 * (1.0 + lo), 400).unwrap_or(hi)
    }

    pub fn p_c(&self, x: f64) -> f64 {
        let k = self.k();
        k / (k + self.v_c(x))
    }

    /// `W(x) = H_max(x, p_c(x)) / r`.
    pub fn w(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.model.h_max(x, self.p_c(x)).expect("p_c is positive") / self.model.r()
    }

    /// Cost of the commitment strategy `[L(u(v_c)) + c(v_c)] / r`.
    pub fn w_commitment(&self, x: f64) -> f64 {
        let v = self.v_c(x);
        let c = &self.model.costs;
        (c.l(self.u_of(x, v)) + c.c(v)) / self.model.r()
    }

    /// `min_v { L(u) + c(v) : u = [(lambda+r) - (lambda+mu+v) p] x, u in [0,1) } / r` at `p = p_c(x)`.
    pub fn w_direct_min(&self, x: f64) -> f64 {
        self.fixed_price_min(x, self.p_c(x)) / self.model.r()
    }

    /// Direct minimization over `v` at a fixed price (the duality behind `H_max`).
    pub fn fixed_price_min(&self, x: f64, p: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let m = &self.model;
        let (r, lam, mu) = (m.r(), m.lambda(), m.mu());
        let c = &m.costs;
        let u_of = |v: f64| ((lam + r) - (lam + mu + v) * p) * x;
        let v_hi = (lam + r) / p - lam - mu; // u = 0
        let v_lo = (v_hi - 1.0 / (p * x)).max(0.0); // u = 1 (excluded)
        let dphi = |v: f64| {
            let u = u_of(v);
            if u >= 1.0 {
                return f64::NEG_INFINITY;
            }
            c.c_prime(v) - p * x * c.l_prime(u.max(0.0))
        };
        let lo = if v_lo > 0.0 {
            v_lo * (1.0 + 1e-15) + 1e-300
        } else {
            0.0
        };
        let v = if dphi(lo) >= 0.0 {
            lo
        } else if dphi(v_hi) <= 0.0 {
            v_hi
        } else {
            roots::bisect(dphi, lo, v_hi, 1e-15 * (1.0 + v_hi), 400).unwrap_or(v_hi)
        };
        c.l(u_of(v).max(0.0)) + c.c(v)
    }

    /// Closed-form slope `(r-mu)/r * p_c L'(p_c (r-mu) x)`.
    pub fn w_prime(&self, x: f64) -> f64 {
        let m = &self.model;
        let pc = self.p_c(x);
        (m.r() - m.mu()) / m.r() * pc * m.costs.l_prime(pc * (m.r() - m.mu()) * x)
    }

    /// Derivative of `v_c` from implicit differentiation of the FOC.
    pub fn v_c_prime(&self, x: f64) -> f64 {
        let v = self.v_c(x);
        if v <= 0.0 {
            return 0.0;
        }
        let k = self.k();
        let u = self.u_of(x, v);
        let c = &self.model.costs;
        let (l1, l2) = (c.l_prime(u), c.l_second(u));
        let phi_x = -(l1 + u * l2) * (u / x) / (k + v);
        let phi_v =
            c.c_second(v) + (l1 + u * l2) * u / ((k + v) * (k + v)) + u * l1 / ((k + v) * (k + v));
        -phi_x / phi_v
    }

    pub fn p_c_prime(&self, x: f64) -> f64 {
        let k = self.k();
        let v = self.v_c(x);
        -k * self.v_c_prime(x) / ((k + v) * (k + v))
    }

    /// Exact derivative of `W` (envelope theorem on `H_max(x, p_c(x))`).
    pub fn w_slope(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return (self.model.r() - self.model.mu()) / self.model.r()
                * self.model.costs.l_prime(0.0);
        }
        let pc = self.p_c(x);
        let xs = self.model.xi_sharp(x, pc).expect("x > 0");
        let pt = self.model.point(x, xs, pc);
        (pt.h_x + pt.h_p * self.p_c_prime(x)) / self.model.r()
    }

    /// `xi_sharp(x, p_c(x))`.
    pub fn xi_sharp_c(&self, x: f64) -> f64 {
        self.model.xi_sharp(x, self.p_c(x)).expect("x > 0")
    }

    /// Tabulates the curve on `n + 1` uniform nodes over `[0, x_hi]`.
    pub fn tabulate(&self, x_hi: f64, n: usize) -> ConstantStrategyCurve {
        let xs: Vec<f64> = (0..=n).map(|i| x_hi * i as f64 / n as f64).collect();
        let v_c: Vec<f64> = xs.iter().map(|&x| self.v_c(x)).collect();
        let p_c: Vec<f64> = xs.iter().map(|&x| self.p_c(x)).collect();
        let w: Vec<f64> = xs.iter().map(|&x| self.w(x)).collect();
        let w_prime: Vec<f64> = xs.iter().map(|&x| self.w_prime(x)).collect();
        let tangents = fritsch_carlson(&xs, &w);
        ConstantStrategyCurve {
            x: xs,
            v_c,
            p_c,
            w,
            w_prime,
            tangents,
            x_c: self.x_c,
            x_flat: self.x_flat,
        }
    }
}

/// Root of an increasing function on `[0, 1/(r-mu))` that blows up at the right end.
fn solve_increasing(model: &Model, g: impl Fn(f64) -> f64) -> Result<f64> {
    let (r, mu) = (model.r(), model.mu());
    let end = 1.0 / (r - mu);
    let mut hi = 0.5 * end;
    let mut gap = 0.5 * end;
    while g(hi) <= 0.0 {
        gap *= 0.5;
        hi = end - gap;
        if gap < 1e-15 * end {
            return Err(Error::RootNotBracketed { lo: 0.0, hi: end });
        }
    }
    roots::bisect(g, 0.0, hi, 1e-15 * end, 400)
}

/// Monotone cubic tangents (Fritsch-Carlson).
fn fritsch_carlson(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    if n < 2 {
        return m;
    }
    let d: Vec<f64> = (0..n - 1)
        .map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i]))
        .collect();
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for i in 1..n - 1 {
        m[i] = if d[i - 1] * d[i] <= 0.0 {
            0.0
        } else {
            0.5 * (d[i - 1] + d[i])
        };
    }
    for i in 0..n - 1 {
        if d[i] == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
            continue;
        }
        let a = m[i] / d[i];
        let b = m[i + 1] / d[i];
        let s = a * a + b * b;
        if s > 9.0 {
            let t = 3.0 / s.sqrt();
            m[i] = t * a * d[i];
            m[i + 1] = t * b * d[i];
        }
    }
    m
}

/// Tabulated `(x, v_c, p_c, W, W')` with monotone cubic interpolation of `W`.
#[derive(Debug, Clone)]
pub struct ConstantStrategyCurve {
    pub x: Vec<f64>,
    pub v_c: Vec<f64>,
    pub p_c: Vec<f64>,
    pub w: Vec<f64>,
    pub w_prime: Vec<f64>,
    tangents: Vec<f64>,
    pub x_c: f64,
    pub x_flat: f64,
}

impl ConstantStrategyCurve {
    /// Interpolated `W`; clamps outside the grid.
    pub fn w_interp(&self, x: f64) -> f64 {
        let n = self.x.len();
        if x <= self.x[0] {
            return self.w[0];
        }
        if x >= self.x[n - 1] {
            return self.w[n - 1];
        }
        let h = self.x[1] - self.x[0];
        let i = (((x - self.x[0]) / h) as usize).min(n - 2);
        let t = (x - self.x[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.w[i]
            + h10 * h * self.tangents[i]
            + h01 * self.w[i + 1]
            + h11 * h * self.tangents[i + 1]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,v_c,p_c,W,W_prime\n");
        for i in 0..self.x.len() {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.x[i], self.v_c[i], self.p_c[i], self.w[i], self.w_prime[i]
            ));
        }
        out
    }
}
