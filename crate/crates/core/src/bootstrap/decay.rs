use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Decreasing profiles, evaluated as `ln f(r)` from `ln r` so that radii far
/// beyond `f64` range stay usable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Decay {
    /// `f ≡ 0`
    Zero,
    /// `(log(1 + r))^{-gamma}`
    Polylog { gamma: f64 },
    /// `r^{-alpha}`
    Power { alpha: f64 },
    /// `exp(-c r^beta)`
    StretchedExp { c: f64, beta: f64 },
    /// `exp(-c r²)`
    Gaussian { c: f64 },
}

/// `ln(1 + r)` from `ln r`.
pub(crate) fn ln1p_from_ln(ln_r: f64) -> f64 {
    if ln_r > 40.0 {
        ln_r + (-ln_r).exp()
    } else {
        ln_r.exp().ln_1p()
    }
}

impl Decay {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Zero => true,
            Self::Polylog { gamma } => gamma > 0.0 && gamma.is_finite(),
            Self::Power { alpha } => alpha > 0.0 && alpha.is_finite(),
            Self::StretchedExp { c, beta } => c > 0.0 && beta > 0.0 && c.is_finite() && beta.is_finite(),
            Self::Gaussian { c } => c > 0.0 && c.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("decay parameters must be positive and finite: {self}")))
        }
    }

    /// `ln f(r)`; `-∞` for the zero profile.
    pub fn ln_at(&self, ln_r: f64) -> f64 {
        match *self {
            Self::Zero => f64::NEG_INFINITY,
            Self::Polylog { gamma } => -gamma * ln1p_from_ln(ln_r).ln(),
            Self::Power { alpha } => -alpha * ln_r,
            Self::StretchedExp { c, beta } => -c * (beta * ln_r).exp(),
            Self::Gaussian { c } => -c * (2.0 * ln_r).exp(),
        }
    }

    pub fn at(&self, r: f64) -> f64 {
        self.ln_at(r.ln()).exp()
    }
}

impl fmt::Display for Decay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Zero => write!(f, "zero"),
            Self::Polylog { gamma } => write!(f, "polylog:{gamma}"),
            Self::Power { alpha } => write!(f, "power:{alpha}"),
            Self::StretchedExp { c, beta } => write!(f, "stretched-exp:{c},{beta}"),
            Self::Gaussian { c } => write!(f, "gaussian:{c}"),
        }
    }
}

impl FromStr for Decay {
    type Err = Error;

    /// `zero`, `polylog:γ`, `power:α`, `stretched-exp:c,β`, `exp:c`, `gaussian:c`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|a| a.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad number {a:?} in decay {s:?}"))))
                .collect::<Result<_>>()?
        };
        let want = |k: usize| -> Result<()> {
            if nums.len() == k {
                Ok(())
            } else {
                Err(Error::Config(format!("decay {name:?} takes {k} parameter(s), got {}", nums.len())))
            }
        };
        let d = match name {
            "zero" => {
                want(0)?;
                Self::Zero
            }
            "polylog" => {
                want(1)?;
                Self::Polylog { gamma: nums[0] }
            }
            "power" => {
                want(1)?;
                Self::Power { alpha: nums[0] }
            }
            "stretched-exp" => {
                want(2)?;
                Self::StretchedExp { c: nums[0], beta: nums[1] }
            }
            "exp" => {
                want(1)?;
                Self::StretchedExp { c: nums[0], beta: 1.0 }
            }
            "gaussian" => {
                want(1)?;
                Self::Gaussian { c: nums[0] }
            }
            _ => {
                return Err(Error::Config(format!(
                    "unknown decay family {name:?}; valid: zero, polylog, power, stretched-exp, exp, gaussian"
                )))
            }
        };
        d.validate()?;
        Ok(d)
    }
}

/// The error profile of the recursion, `h(r) = g(r) (log r)^{2+δ}`, given
/// either through `g` or directly through `h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub base: Decay,
    pub delta: f64,
    /// `base` is `h` itself rather than `g`
    pub base_is_h: bool,
}

impl Profile {
    pub fn from_g(g: Decay, delta: f64) -> Self {
        Self { base: g, delta, base_is_h: false }
    }

    pub fn from_h(h: Decay, delta: f64) -> Self {
        Self { base: h, delta, base_is_h: true }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if !(self.delta > 0.0) {
            return Err(Error::Parameter(format!(
                "delta must be positive (got {}); otherwise the level schedule diverges to -infinity",
                self.delta
            )));
        }
        Ok(())
    }

    fn log_factor(&self, ln_r: f64) -> f64 {
        (2.0 + self.delta) * ln_r.ln()
    }

    /// `ln h(r)` for `r > 1`.
    pub fn ln_h(&self, ln_r: f64) -> f64 {
        if self.base_is_h {
            self.base.ln_at(ln_r)
        } else {
            self.base.ln_at(ln_r) + self.log_factor(ln_r)
        }
    }

    /// `ln g(r)` for `r > 1`.
    pub fn ln_g(&self, ln_r: f64) -> f64 {
        if self.base_is_h {
            self.base.ln_at(ln_r) - self.log_factor(ln_r)
        } else {
            self.base.ln_at(ln_r)
        }
    }

    /// Whether `h → 0` follows from the family parameters, when that is
    /// decidable in closed form.
    pub fn h_vanishes(&self) -> Option<bool> {
        match (self.base_is_h, self.base) {
            (_, Decay::Zero) => Some(true),
            (false, Decay::Polylog { gamma }) => Some(gamma > 2.0 + self.delta),
            (true, Decay::Polylog { .. }) => Some(true),
            (_, Decay::Power { .. } | Decay::StretchedExp { .. } | Decay::Gaussian { .. }) => Some(true),
        }
    }
}
