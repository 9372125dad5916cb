//! Wave speed `c(u)` with analytic first and second derivatives, and the
//! global bounds `1/kappa <= c <= kappa`, `|c'| <= lambda`, `|c''| <= lambda_bar`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Built-in coefficient families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Profile {
    /// `c = c0`.
    Constant { c0: f64 },
    /// `c = sqrt(s^2 + sin u)`, `s > 1`; speed of the cusped traveling wave.
    Hut { s: f64 },
    /// `c = mean + amp * sin(u / scale)`.
    Sine { mean: f64, amp: f64, scale: f64 },
    /// `c = base + depth * v^2 / (1 + v^2)` with `v = (u - center) / scale`:
    /// a smooth well, strictly decreasing then increasing, flat at `center`.
    Well {
        base: f64,
        depth: f64,
        center: f64,
        scale: f64,
    },
    /// `c = base + amp * exp(-v^2)` with `v = (u - center) / scale`.
    Bump {
        base: f64,
        amp: f64,
        center: f64,
        scale: f64,
    },
}

impl Profile {
    pub fn eval(&self, u: f64) -> (f64, f64, f64) {
        match *self {
            Profile::Constant { c0 } => (c0, 0.0, 0.0),
            Profile::Hut { s } => {
                let (sn, cs) = u.sin_cos();
                let c = (s * s + sn).sqrt();
                let c1 = cs / (2.0 * c);
                let c2 = -sn / (2.0 * c) - cs * cs / (4.0 * c * c * c);
                (c, c1, c2)
            }
            Profile::Sine { mean, amp, scale } => {
                let (sn, cs) = (u / scale).sin_cos();
                (mean + amp * sn, amp * cs / scale, -amp * sn / (scale * scale))
            }
            Profile::Well {
                base,
                depth,
                center,
                scale,
            } => {
                let v = (u - center) / scale;
                let q = 1.0 + v * v;
                (
                    base + depth * v * v / q,
                    depth * 2.0 * v / (q * q * scale),
                    depth * (2.0 - 6.0 * v * v) / (q * q * q * scale * scale),
                )
            }
            Profile::Bump {
                base,
                amp,
                center,
                scale,
            } => {
                let v = (u - center) / scale;
                let g = (-v * v).exp();
                (
                    base + amp * g,
                    -2.0 * amp * v * g / scale,
                    amp * (4.0 * v * v - 2.0) * g / (scale * scale),
                )
            }
        }
    }

    /// Tight global bounds `(kappa, lambda, lambda_bar)` from the closed forms.
    fn natural_bounds(&self) -> Result<(f64, f64, f64)> {
        let (cmin, cmax, lam, lamb) = match *self {
            Profile::Constant { c0 } => (c0, c0, 0.0, 0.0),
            Profile::Hut { s } => {
                if !(s > 1.0) {
                    return Err(invalid(format!("hut speed s = {s} must exceed 1")));
                }
                // periodic: a dense sweep of one period is exact to plotting accuracy,
                // padded by a relative margin that dominates the sampling error
                let n = 20_000;
                let (mut l1, mut l2) = (0.0f64, 0.0f64);
                for k in 0..n {
                    let u = std::f64::consts::TAU * k as f64 / n as f64;
                    let (_, c1, c2) = self.eval(u);
                    l1 = l1.max(c1.abs());
                    l2 = l2.max(c2.abs());
                }
                ((s * s - 1.0).sqrt(), (s * s + 1.0).sqrt(), l1 * 1.0001, l2 * 1.0001)
            }
            Profile::Sine { mean, amp, scale } => {
                let a = amp.abs();
                (mean - a, mean + a, a / scale.abs(), a / (scale * scale))
            }
            Profile::Well { base, depth, scale, .. } => {
                let d = depth.abs();
                let (lo, hi) = if depth >= 0.0 {
                    (base, base + depth)
                } else {
                    (base + depth, base)
                };
                (
                    lo,
                    hi,
                    d * 3.0 * 3f64.sqrt() / (8.0 * scale.abs()),
                    2.0 * d / (scale * scale),
                )
            }
            Profile::Bump { base, amp, scale, .. } => {
                let a = amp.abs();
                let (lo, hi) = if amp >= 0.0 {
                    (base, base + amp)
                } else {
                    (base + amp, base)
                };
                (
                    lo,
                    hi,
                    a * 2f64.sqrt() * (-0.5f64).exp() / scale.abs(),
                    2.0 * a / (scale * scale),
                )
            }
        };
        if !(cmin > 0.0) {
            return Err(invalid(format!("wave speed reaches {cmin} <= 0")));
        }
        let kappa = cmax.max(1.0 / cmin).max(1.0 + 1e-12);
        Ok((kappa, lam, lamb))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveSpeedModel {
    pub profile: Profile,
    pub kappa: f64,
    pub lambda: f64,
    pub lambda_bar: f64,
}

impl WaveSpeedModel {
    /// Model with user-supplied bounds; they are checked for sign only,
    /// admissibility is what [`WaveSpeedModel::verify_bounds`] is for.
    pub fn new(profile: Profile, kappa: f64, lambda: f64, lambda_bar: f64) -> Result<Self> {
        if !(kappa > 1.0) {
            return Err(invalid(format!("kappa = {kappa} must exceed 1")));
        }
        if !(lambda >= 0.0 && lambda_bar >= 0.0) {
            return Err(invalid("lambda and lambda_bar must be nonnegative"));
        }
        Ok(Self {
            profile,
            kappa,
            lambda,
            lambda_bar,
        })
    }

    /// Model with the tightest bounds the closed form admits.
    pub fn with_natural_bounds(profile: Profile) -> Result<Self> {
        let (k, l, lb) = profile.natural_bounds()?;
        Self::new(profile, k, l, lb)
    }

    pub fn constant(c0: f64) -> Self {
        Self::with_natural_bounds(Profile::Constant { c0 }).expect("positive constant speed")
    }

    pub fn hut(s: f64) -> Result<Self> {
        Self::with_natural_bounds(Profile::Hut { s })
    }

    #[inline]
    pub fn eval(&self, u: f64) -> (f64, f64, f64) {
        self.profile.eval(u)
    }

    #[inline]
    pub fn c(&self, u: f64) -> f64 {
        self.profile.eval(u).0
    }

    #[inline]
    pub fn c_prime(&self, u: f64) -> f64 {
        self.profile.eval(u).1
    }

    /// Worst-case bound residuals over `n` equispaced samples of `[lo, hi]`.
    pub fn verify_bounds(&self, lo: f64, hi: f64, n: usize) -> Result<BoundsReport> {
        if !(hi > lo) || n < 2 {
            return Err(invalid(format!("empty sampling interval [{lo}, {hi}] with n = {n}")));
        }
        let mut r = BoundsReport {
            kappa_upper: f64::NEG_INFINITY,
            kappa_lower: f64::NEG_INFINITY,
            lambda: f64::NEG_INFINITY,
            lambda_bar: f64::NEG_INFINITY,
        };
        for k in 0..n {
            let u = lo + (hi - lo) * k as f64 / (n - 1) as f64;
            let (c, c1, c2) = self.eval(u);
            r.kappa_upper = r.kappa_upper.max(c - self.kappa);
            r.kappa_lower = r.kappa_lower.max(1.0 / self.kappa - c);
            r.lambda = r.lambda.max(c1.abs() - self.lambda);
            r.lambda_bar = r.lambda_bar.max(c2.abs() - self.lambda_bar);
        }
        Ok(r)
    }
}

/// Largest violation of each bound; nonpositive entries mean the bound holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsReport {
    pub kappa_upper: f64,
    pub kappa_lower: f64,
    pub lambda: f64,
    pub lambda_bar: f64,
}

impl BoundsReport {
    pub fn worst(&self) -> f64 {
        self.kappa_upper
            .max(self.kappa_lower)
            .max(self.lambda)
            .max(self.lambda_bar)
    }

    pub fn admissible(&self) -> bool {
        self.worst() <= 0.0
    }
}
