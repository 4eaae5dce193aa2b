//! Weight descriptors.
//!
//! Grammar:
//!
//! ```text
//! legendre
//! chebyshev
//! gegenbauer:lambda=<f64>,mu=<f64>
//! symmap:base=<1d-weight>,d=<int>,sign=<-0.5|+0.5>
//! ```
//!
//! A one-dimensional descriptor used with `d > 1` denotes the product weight.

use std::fmt;
use std::str::FromStr;

use statrs::function::beta::ln_beta;

use crate::error::{Error, Result};
use crate::quad1d::{gauss_chebyshev, gauss_jacobi, gauss_legendre, Rule1d};

pub const VALID_FAMILIES: &str = "legendre, chebyshev, gegenbauer:lambda=L,mu=M, symmap:base=<1d-weight>,d=<int>,sign=<-0.5|+0.5>";

/// Univariate weights on `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaseWeight {
    /// `1/2` on `[-1,1]`, mass 1.
    Legendre,
    /// `1 / (pi sqrt(1-t^2))`, mass 1.
    Chebyshev,
    /// Signed `w(t) = t^{2 mu + 1} (1 - t) (1 - t^2)^{lambda - 1/2}`, unnormalized.
    /// For non-integer `mu` the odd power is read as `sign(t) |t|^{2 mu + 1}`.
    SignedGegenbauer { lambda: f64, mu: f64 },
}

impl BaseWeight {
    /// Closed-form moment `integral t^k w(t) dt`.
    pub fn moment(&self, k: usize) -> f64 {
        match *self {
            BaseWeight::Legendre => {
                if k % 2 == 0 {
                    1.0 / (k as f64 + 1.0)
                } else {
                    0.0
                }
            }
            BaseWeight::Chebyshev => {
                if k % 2 == 1 {
                    return 0.0;
                }
                // C(k, k/2) / 2^k, accumulated as a product to stay in range
                let m = k / 2;
                (1..=m).fold(1.0, |acc, j| acc * (2 * j - 1) as f64 / (2 * j) as f64)
            }
            BaseWeight::SignedGegenbauer { lambda, mu } => {
                let a = 2.0 * mu + 1.0;
                let y = lambda + 0.5;
                let kf = k as f64;
                if k % 2 == 1 {
                    ln_beta((a + kf + 1.0) / 2.0, y).exp()
                } else {
                    -ln_beta((a + kf + 2.0) / 2.0, y).exp()
                }
            }
        }
    }

    /// Value of the weight density at `t` in `(-1, 1)`.
    pub fn density(&self, t: f64) -> f64 {
        match *self {
            BaseWeight::Legendre => 0.5,
            BaseWeight::Chebyshev => 1.0 / (std::f64::consts::PI * (1.0 - t * t).sqrt()),
            BaseWeight::SignedGegenbauer { lambda, mu } => {
                t.signum() * t.abs().powf(2.0 * mu + 1.0) * (1.0 - t) * (1.0 - t * t).powf(lambda - 0.5)
            }
        }
    }

    /// `n`-point rule for this weight. For the signed family the polynomial
    /// factor is folded into the Gauss-Jacobi weights, which requires an
    /// integer `mu`.
    pub fn quadrature(&self, n: usize) -> Result<Rule1d> {
        match *self {
            BaseWeight::Legendre => Ok(gauss_legendre(n).scale(0.5)),
            BaseWeight::Chebyshev => Ok(gauss_chebyshev(n)),
            BaseWeight::SignedGegenbauer { lambda, mu } => {
                if mu.fract() != 0.0 {
                    return Err(Error::BadDescriptor(format!(
                        "tensor quadrature for gegenbauer needs integer mu (got {mu})"
                    )));
                }
                let a = lambda - 0.5;
                let p = 2 * mu as i32 + 1;
                let rule = gauss_jacobi(n, a, a);
                Ok(rule.fold_factor(|t| t.powi(p) * (1.0 - t), p as usize + 1))
            }
        }
    }

    /// Degree of the polynomial factor folded into `quadrature`.
    pub fn factor_degree(&self) -> usize {
        match *self {
            BaseWeight::SignedGegenbauer { mu, .. } => 2 * mu as usize + 2,
            _ => 0,
        }
    }

    pub fn is_positive(&self) -> bool {
        !matches!(self, BaseWeight::SignedGegenbauer { .. })
    }
}

impl fmt::Display for BaseWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseWeight::Legendre => write!(f, "legendre"),
            BaseWeight::Chebyshev => write!(f, "chebyshev"),
            BaseWeight::SignedGegenbauer { lambda, mu } => write!(f, "gegenbauer:lambda={lambda},mu={mu}"),
        }
    }
}

/// Sign of the Jacobian power in the symmetric-map families `W_{-1/2}`, `W_{+1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymSign {
    MinusHalf,
    PlusHalf,
}

impl SymSign {
    /// Power of `J(x)` in the pushforward integrand.
    pub fn jacobian_power(self) -> u32 {
        match self {
            SymSign::MinusHalf => 0,
            SymSign::PlusHalf => 2,
        }
    }
}

impl fmt::Display for SymSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymSign::MinusHalf => write!(f, "-0.5"),
            SymSign::PlusHalf => write!(f, "+0.5"),
        }
    }
}

/// Parsed weight descriptor.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightDescriptor {
    Base(BaseWeight),
    SymMap { base: BaseWeight, d: usize, sign: SymSign },
}

impl WeightDescriptor {
    /// Dimension fixed by the descriptor itself, if any.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            WeightDescriptor::Base(_) => None,
            WeightDescriptor::SymMap { d, .. } => Some(*d),
        }
    }

    pub fn base(&self) -> BaseWeight {
        match self {
            WeightDescriptor::Base(b) => *b,
            WeightDescriptor::SymMap { base, .. } => *base,
        }
    }
}

impl fmt::Display for WeightDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightDescriptor::Base(b) => write!(f, "{b}"),
            WeightDescriptor::SymMap { base, d, sign } => write!(f, "symmap:base={base},d={d},sign={sign}"),
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| Error::BadDescriptor(format!("{key}={v:?} is not a number")))?;
    if !x.is_finite() {
        return Err(Error::BadDescriptor(format!("{key} must be finite")));
    }
    Ok(x)
}

fn parse_base(s: &str) -> Result<BaseWeight> {
    let s = s.trim();
    match s {
        "legendre" => return Ok(BaseWeight::Legendre),
        "chebyshev" => return Ok(BaseWeight::Chebyshev),
        _ => {}
    }
    let Some(args) = s.strip_prefix("gegenbauer:") else {
        return Err(Error::BadDescriptor(format!("unknown family {s:?}; valid families: {VALID_FAMILIES}")));
    };
    let (mut lambda, mut mu) = (None, None);
    for part in args.split(',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::BadDescriptor(format!("expected key=value, got {part:?}")))?;
        match k.trim() {
            "lambda" if lambda.is_none() => lambda = Some(parse_f64("lambda", v)?),
            "mu" if mu.is_none() => mu = Some(parse_f64("mu", v)?),
            other => return Err(Error::BadDescriptor(format!("unexpected or repeated gegenbauer key {other:?}"))),
        }
    }
    let lambda = lambda.ok_or_else(|| Error::BadDescriptor("gegenbauer needs lambda".into()))?;
    let mu = mu.ok_or_else(|| Error::BadDescriptor("gegenbauer needs mu".into()))?;
    if lambda <= -0.5 || mu <= 0.0 {
        return Err(Error::BadDescriptor("gegenbauer needs lambda > -1/2 and mu > 0".into()));
    }
    Ok(BaseWeight::SignedGegenbauer { lambda, mu })
}

impl FromStr for WeightDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let Some(args) = s.strip_prefix("symmap:") else {
            return parse_base(s).map(WeightDescriptor::Base);
        };
        // keys other than base/d/sign continue the nested base descriptor
        let mut base: Option<String> = None;
        let (mut d, mut sign) = (None, None);
        for part in args.split(',') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::BadDescriptor(format!("expected key=value, got {part:?}")))?;
            match k.trim() {
                "base" if base.is_none() => base = Some(v.trim().to_string()),
                "d" if d.is_none() => {
                    let dv: usize = v
                        .trim()
                        .parse()
                        .map_err(|_| Error::BadDescriptor(format!("d={v:?} is not a positive integer")))?;
                    if dv == 0 || dv > 6 {
                        return Err(Error::BadDescriptor("symmap needs 1 <= d <= 6".into()));
                    }
                    d = Some(dv);
                }
                "sign" if sign.is_none() => {
                    sign = Some(match v.trim() {
                        "-0.5" | "-1/2" => SymSign::MinusHalf,
                        "+0.5" | "0.5" | "+1/2" | "1/2" => SymSign::PlusHalf,
                        other => return Err(Error::BadDescriptor(format!("sign must be -0.5 or +0.5, got {other:?}"))),
                    })
                }
                _ => match base.as_mut() {
                    Some(b) if sign.is_none() && d.is_none() => {
                        b.push(',');
                        b.push_str(part);
                    }
                    _ => return Err(Error::BadDescriptor(format!("unexpected symmap key in {part:?}"))),
                },
            }
        }
        let base = parse_base(&base.ok_or_else(|| Error::BadDescriptor("symmap needs base".into()))?)?;
        let d = d.ok_or_else(|| Error::BadDescriptor("symmap needs d".into()))?;
        let sign = sign.ok_or_else(|| Error::BadDescriptor("symmap needs sign".into()))?;
        Ok(WeightDescriptor::SymMap { base, d, sign })
    }
}
