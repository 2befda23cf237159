//! Dormand-Prince 5(4) stepper with the standard quartic continuous extension.
//!
//! The caller drives the loop one accepted step at a time so that event
//! handling stays with the problem-specific code.

use serde::{Deserialize, Serialize};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One accepted step with its dense-output coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    #[serde(with = "arrays")]
    pub rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// Interpolated state at `t` (meaningful for `t` within the step).
    pub fn eval(&self, t: f64) -> [f64; N] {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let rc = &self.rcont;
        let mut y = [0.0; N];
        for i in 0..N {
            y[i] = rc[0][i] + s * (rc[1][i] + s1 * (rc[2][i] + s * (rc[3][i] + s1 * rc[4][i])));
        }
        y
    }

    /// Time derivative of the interpolating polynomial.
    pub fn eval_deriv(&self, t: f64) -> [f64; N] {
        let s = (t - self.t0) / self.h;
        let rc = &self.rcont;
        let mut d = [0.0; N];
        for i in 0..N {
            // y = a + s b + s(1-s) c + s^2 (1-s) e + s^2 (1-s)^2 f
            let (b, c, e, f) = (rc[1][i], rc[2][i], rc[3][i], rc[4][i]);
            let ds = b
                + (1.0 - 2.0 * s) * c
                + (2.0 * s - 3.0 * s * s) * e
                + 2.0 * s * (1.0 - s) * (1.0 - 2.0 * s) * f;
            d[i] = ds / self.h;
        }
        d
    }
}

/// Tolerances and step bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Step floor; scaled by `min(1, max(|t|, |t_end|))` so integrations can approach `t = 0`.
    pub h_min: f64,
    pub h_max: f64,
}

/// Outcome of one call to [`Dopri5::step`].
#[derive(Debug)]
pub enum StepOutcome<const N: usize, E> {
    Accepted(DenseStep<N>),
    /// The step controller underflowed; carries the last right-hand-side error if any.
    Failed(Option<E>),
}

/// Adaptive stepper state. `dir` is `+1` or `-1`.
pub struct Dopri5<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub f: [f64; N],
    pub h: f64,
    pub tol: Tolerances,
    pub dir: f64,
    pub rejected: usize,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut s = 0.0;
        for (c, k) in terms {
            s += c * k[i];
        }
        out[i] += h * s;
    }
    out
}

impl<const N: usize> Dopri5<N> {
    pub fn new(t: f64, y: [f64; N], f: [f64; N], h0: f64, dir: f64, tol: Tolerances) -> Self {
        Self {
            t,
            y,
            f,
            h: h0.abs().clamp(tol.h_min, tol.h_max),
            tol,
            dir,
            rejected: 0,
        }
    }

    /// Attempts steps until one is accepted, never stepping past `t_end`.
    pub fn step<E>(
        &mut self,
        rhs: &mut impl FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
        t_end: f64,
    ) -> StepOutcome<N, E> {
        let mut last_err = None;
        loop {
            let remaining = (t_end - self.t) * self.dir;
            if remaining <= 0.0 {
                return StepOutcome::Failed(last_err);
            }
            let mut habs = self.h.min(self.tol.h_max);
            let hits_end = habs >= remaining;
            if hits_end {
                habs = remaining;
            }
            let h = habs * self.dir;
            match self.try_step(rhs, h, hits_end.then_some(t_end)) {
                Ok((y_new, f_new, err, rcont)) => {
                    if err <= 1.0 {
                        let fac = if err == 0.0 {
                            5.0
                        } else {
                            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                        };
                        let step = DenseStep {
                            t0: self.t,
                            h,
                            rcont,
                        };
                        self.t = if hits_end { t_end } else { self.t + h };
                        self.y = y_new;
                        self.f = f_new;
                        self.h = habs * fac;
                        return StepOutcome::Accepted(step);
                    }
                    self.rejected += 1;
                    let fac = (0.9 * err.powf(-0.25)).clamp(0.1, 0.5);
                    self.h = habs * fac;
                }
                Err(e) => {
                    self.rejected += 1;
                    last_err = Some(e);
                    self.h = habs * 0.25;
                }
            }
            if self.h < self.tol.h_min * self.t.abs().max(t_end.abs()).min(1.0) {
                return StepOutcome::Failed(last_err);
            }
        }
    }

    #[allow(clippy::type_complexity)]
    fn try_step<E>(
        &self,
        rhs: &mut impl FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
        h: f64,
        t_exact_end: Option<f64>,
    ) -> Result<([f64; N], [f64; N], f64, [[f64; N]; 5]), E> {
        let (t, y, k1) = (self.t, &self.y, &self.f);
        let k2 = rhs(t + C2 * h, &axpy(y, h, &[(A21, k1)]))?;
        let k3 = rhs(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
        let k4 = rhs(
            t + C4 * h,
            &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]),
        )?;
        let k5 = rhs(
            t + C5 * h,
            &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        )?;
        let t_end = t_exact_end.unwrap_or(t + h);
        let k6 = rhs(
            t_end,
            &axpy(
                y,
                h,
                &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        )?;
        let y_new = axpy(
            y,
            h,
            &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = rhs(t_end, &y_new)?;
        let mut err_sq = 0.0;
        for i in 0..N {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = self.tol.atol + self.tol.rtol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / N as f64).sqrt();
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            // treat as a rejection with maximal shrink
            return Ok((y_new, k7, 1e10, [[0.0; N]; 5]));
        }
        let mut rcont = [[0.0; N]; 5];
        for i in 0..N {
            let dy = y_new[i] - y[i];
            let bspl = h * k1[i] - dy;
            rcont[0][i] = y[i];
            rcont[1][i] = dy;
            rcont[2][i] = bspl;
            rcont[3][i] = dy - h * k7[i] - bspl;
            rcont[4][i] =
                h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        Ok((y_new, k7, err, rcont))
    }
}

/// Localizes a sign change of `g` on `[a, b]` by bisection to width `tol`;
/// returns the endpoint on the side where `g(b)` has its sign.
pub fn locate(mut g: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let ga = g(a);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        let gm = g(m);
        if (gm >= 0.0) == (ga >= 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    b
}

mod arrays {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer, const N: usize>(
        v: &[[f64; N]; 5],
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = v.iter().map(|r| r.to_vec()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const N: usize>(
        d: D,
    ) -> Result<[[f64; N]; 5], D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        if rows.len() != 5 || rows.iter().any(|r| r.len() != N) {
            return Err(D::Error::custom("dense-output block has wrong shape"));
        }
        let mut out = [[0.0; N]; 5];
        for (o, r) in out.iter_mut().zip(rows) {
            o.copy_from_slice(&r);
        }
        Ok(out)
    }
}
