//! Scalar penalties `phi` on `[0, inf)` and their one-dimensional proximal
//! problems
//!
//! ```text
//! nu(t) = min_u  0.5 (u - t)^2 + scale * phi(|u|)
//! ```
//!
//! Every penalty here is continuous, nondecreasing and vanishes at zero, so the
//! scalar problem always has a global minimizer in `[0, t]` (for `t >= 0`).
//! The minimizer is found by enumerating a short list of candidates (zero,
//! `t`, the stationary points of each smooth branch and the branch
//! breakpoints) and keeping the best.

use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};

/// Default exponent for `Lq`.
pub const DEFAULT_Q: f64 = 0.5;
/// Default smoothing offset for `Log`.
pub const DEFAULT_LOG_EPS: f64 = 1e-3;
/// Default cap for capped-l1.
pub const DEFAULT_CAP: f64 = 1e-2;
/// Default `lambda` for MCP and SCAD.
pub const DEFAULT_LAMBDA: f64 = 1.0;
pub const DEFAULT_ALPHA: f64 = 2.7;
pub const DEFAULT_BETA: f64 = 3.7;

/// Candidates whose objective values agree to this tolerance count as ties.
const TIE_TOL: f64 = 1e-12;
const LQ_BISECTION_TOL: f64 = 1e-12;
const LQ_BISECTION_MAX_ITERS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RegularizerKind {
    L1,
    Lq,
    Log,
    CappedL1,
    Mcp,
    Scad,
}

impl RegularizerKind {
    pub const ALL: [RegularizerKind; 6] = [
        RegularizerKind::L1,
        RegularizerKind::Lq,
        RegularizerKind::Log,
        RegularizerKind::CappedL1,
        RegularizerKind::Mcp,
        RegularizerKind::Scad,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RegularizerKind::L1 => "l1",
            RegularizerKind::Lq => "lq",
            RegularizerKind::Log => "log",
            RegularizerKind::CappedL1 => "capped-l1",
            RegularizerKind::Mcp => "mcp",
            RegularizerKind::Scad => "scad",
        }
    }
}

impl fmt::Display for RegularizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegularizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l1" => Ok(RegularizerKind::L1),
            "lq" => Ok(RegularizerKind::Lq),
            "log" => Ok(RegularizerKind::Log),
            "capped-l1" | "capped_l1" | "cappedl1" | "capped" => Ok(RegularizerKind::CappedL1),
            "mcp" => Ok(RegularizerKind::Mcp),
            "scad" => Ok(RegularizerKind::Scad),
            other => Err(Error::Parse(format!("unknown regularizer kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Params {
    L1,
    Lq { q: f64 },
    Log { eps: f64 },
    CappedL1 { cap: f64 },
    Mcp { lambda: f64, alpha: f64 },
    Scad { lambda: f64, beta: f64 },
}

/// A validated scalar penalty `phi`.
///
/// Construct through the named constructors; parameters are checked once
/// there so evaluation and prox never re-validate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularizer {
    params: Params,
}

/// Result of a scalar prox evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarProx {
    /// A global minimizer `u*`.
    pub minimizer: f64,
    /// Optimal value `0.5 (u* - t)^2 + scale * phi(|u*|)`.
    pub value: f64,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(domain(format!(
            "{name} must be a positive finite number, got {v}"
        )))
    }
}

fn greater_than_one(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 1.0 {
        Ok(v)
    } else {
        Err(domain(format!("{name} must be finite and > 1, got {v}")))
    }
}

impl Regularizer {
    pub fn l1() -> Self {
        Regularizer { params: Params::L1 }
    }

    /// `phi(t) = t^q` with `q` in `(0, 1)`.
    pub fn lq(q: f64) -> Result<Self> {
        if !(q.is_finite() && q > 0.0 && q < 1.0) {
            return Err(domain(format!("lq exponent must lie in (0, 1), got {q}")));
        }
        Ok(Regularizer {
            params: Params::Lq { q },
        })
    }

    /// `phi(t) = log(t + eps) - log(eps)`.
    pub fn log(eps: f64) -> Result<Self> {
        Ok(Regularizer {
            params: Params::Log {
                eps: positive("log eps", eps)?,
            },
        })
    }

    /// `phi(t) = min(t, cap)`.
    pub fn capped_l1(cap: f64) -> Result<Self> {
        Ok(Regularizer {
            params: Params::CappedL1 {
                cap: positive("capped-l1 nu", cap)?,
            },
        })
    }

    pub fn mcp(lambda: f64, alpha: f64) -> Result<Self> {
        Ok(Regularizer {
            params: Params::Mcp {
                lambda: positive("mcp lambda", lambda)?,
                alpha: greater_than_one("mcp alpha", alpha)?,
            },
        })
    }

    pub fn scad(lambda: f64, beta: f64) -> Result<Self> {
        Ok(Regularizer {
            params: Params::Scad {
                lambda: positive("scad lambda", lambda)?,
                beta: greater_than_one("scad beta", beta)?,
            },
        })
    }

    /// The penalty of the given kind with the default parameters
    /// (`q = 0.5`, `eps = 1e-3`, `nu = 1e-2`, `lambda = 1`, `alpha = 2.7`, `beta = 3.7`).
    pub fn with_defaults(kind: RegularizerKind) -> Self {
        let params = match kind {
            RegularizerKind::L1 => Params::L1,
            RegularizerKind::Lq => Params::Lq { q: DEFAULT_Q },
            RegularizerKind::Log => Params::Log {
                eps: DEFAULT_LOG_EPS,
            },
            RegularizerKind::CappedL1 => Params::CappedL1 { cap: DEFAULT_CAP },
            RegularizerKind::Mcp => Params::Mcp {
                lambda: DEFAULT_LAMBDA,
                alpha: DEFAULT_ALPHA,
            },
            RegularizerKind::Scad => Params::Scad {
                lambda: DEFAULT_LAMBDA,
                beta: DEFAULT_BETA,
            },
        };
        Regularizer { params }
    }

    /// Builds a penalty from a kind and `key=value` pairs; missing keys take
    /// their defaults and unknown keys are rejected.
    pub fn from_pairs<'a, I>(kind: RegularizerKind, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let mut q = DEFAULT_Q;
        let mut eps = DEFAULT_LOG_EPS;
        let mut cap = DEFAULT_CAP;
        let mut lambda = DEFAULT_LAMBDA;
        let mut alpha = DEFAULT_ALPHA;
        let mut beta = DEFAULT_BETA;
        for (key, value) in pairs {
            let slot = match (kind, key) {
                (RegularizerKind::Lq, "q") => &mut q,
                (RegularizerKind::Log, "eps" | "epsilon") => &mut eps,
                (RegularizerKind::CappedL1, "nu" | "cap") => &mut cap,
                (RegularizerKind::Mcp | RegularizerKind::Scad, "lambda") => &mut lambda,
                (RegularizerKind::Mcp, "alpha") => &mut alpha,
                (RegularizerKind::Scad, "beta") => &mut beta,
                _ => {
                    return Err(Error::Parse(format!(
                        "parameter `{key}` does not apply to {kind}"
                    )))
                }
            };
            *slot = value;
        }
        match kind {
            RegularizerKind::L1 => Ok(Self::l1()),
            RegularizerKind::Lq => Self::lq(q),
            RegularizerKind::Log => Self::log(eps),
            RegularizerKind::CappedL1 => Self::capped_l1(cap),
            RegularizerKind::Mcp => Self::mcp(lambda, alpha),
            RegularizerKind::Scad => Self::scad(lambda, beta),
        }
    }

    pub fn kind(&self) -> RegularizerKind {
        match self.params {
            Params::L1 => RegularizerKind::L1,
            Params::Lq { .. } => RegularizerKind::Lq,
            Params::Log { .. } => RegularizerKind::Log,
            Params::CappedL1 { .. } => RegularizerKind::CappedL1,
            Params::Mcp { .. } => RegularizerKind::Mcp,
            Params::Scad { .. } => RegularizerKind::Scad,
        }
    }

    /// Parameter list as `(name, value)` pairs, in the order `from_pairs` accepts.
    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match self.params {
            Params::L1 => vec![],
            Params::Lq { q } => vec![("q", q)],
            Params::Log { eps } => vec![("eps", eps)],
            Params::CappedL1 { cap } => vec![("nu", cap)],
            Params::Mcp { lambda, alpha } => vec![("lambda", lambda), ("alpha", alpha)],
            Params::Scad { lambda, beta } => vec![("lambda", lambda), ("beta", beta)],
        }
    }

    /// `phi(t)` for `t >= 0`.
    pub fn value(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(domain(format!("phi is defined on [0, inf), got {t}")));
        }
        Ok(self.eval(t))
    }

    /// `phi(|t|)`, no domain check.
    #[inline]
    pub fn eval_abs(&self, t: f64) -> f64 {
        self.eval(t.abs())
    }

    #[inline]
    fn eval(&self, t: f64) -> f64 {
        match self.params {
            Params::L1 => t,
            Params::Lq { q } => {
                if t == 0.0 {
                    0.0
                } else {
                    t.powf(q)
                }
            }
            Params::Log { eps } => (t / eps).ln_1p(),
            Params::CappedL1 { cap } => t.min(cap),
            Params::Mcp { lambda, alpha } => {
                if t < lambda * alpha {
                    lambda * t - t * t / (2.0 * alpha)
                } else {
                    0.5 * lambda * lambda * alpha
                }
            }
            Params::Scad { lambda, beta } => {
                if t <= lambda {
                    lambda * t
                } else if t < lambda * beta {
                    (-t * t + 2.0 * beta * lambda * t - lambda * lambda) / (2.0 * (beta - 1.0))
                } else {
                    0.5 * (beta + 1.0) * lambda * lambda
                }
            }
        }
    }

    /// Global minimizer and value of `0.5 (u - t)^2 + scale * phi(|u|)`.
    pub fn prox(&self, t: f64, scale: f64) -> Result<ScalarProx> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(domain(format!("prox scale must be positive, got {scale}")));
        }
        if !t.is_finite() {
            return Err(domain(format!("prox argument must be finite, got {t}")));
        }
        Ok(self.prox_unchecked(t, scale))
    }

    /// Same as [`Regularizer::prox`] without argument checks.
    pub(crate) fn prox_unchecked(&self, t: f64, scale: f64) -> ScalarProx {
        let s = t.abs();
        if s == 0.0 {
            return ScalarProx {
                minimizer: 0.0,
                value: 0.0,
            };
        }
        let mut cands = Candidates::new(s);
        cands.push(0.0);
        cands.push(s);
        match self.params {
            Params::L1 => cands.push(s - scale),
            Params::Lq { q } => {
                if let Some(u) = lq_root(s, scale, q) {
                    cands.push(u);
                }
            }
            Params::Log { eps } => {
                // stationarity of the smooth branch: u^2 + (eps - s) u + (scale - eps s) = 0
                let disc = (s + eps) * (s + eps) - 4.0 * scale;
                if disc >= 0.0 {
                    let sq = disc.sqrt();
                    cands.push(0.5 * (s - eps + sq));
                    cands.push(0.5 * (s - eps - sq));
                }
            }
            Params::CappedL1 { cap } => {
                cands.push((s - scale).clamp(0.0, cap));
                cands.push(cap);
                cands.push(s.max(cap));
            }
            Params::Mcp { lambda, alpha } => {
                let knot = lambda * alpha;
                cands.push(knot);
                let curv = 1.0 - scale / alpha;
                if curv > 0.0 {
                    cands.push(((s - scale * lambda) / curv).clamp(0.0, knot));
                }
                cands.push(s.max(knot));
            }
            Params::Scad { lambda, beta } => {
                let knot = lambda * beta;
                cands.push((s - scale * lambda).clamp(0.0, lambda));
                cands.push(lambda);
                cands.push(knot);
                let curv = 1.0 - scale / (beta - 1.0);
                if curv > 0.0 {
                    let u = (s - scale * beta * lambda / (beta - 1.0)) / curv;
                    cands.push(u.clamp(lambda, knot));
                }
                cands.push(s.max(knot));
            }
        }
        let (u, value) = cands.best(|u| 0.5 * (u - s) * (u - s) + scale * self.eval(u));
        ScalarProx {
            minimizer: u.copysign(t),
            value,
        }
    }
}

impl fmt::Display for Regularizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind())?;
        for (k, v) in self.params() {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

/// Parses `kind [key=value ...]`, e.g. `lq q=0.5` or `mcp lambda=1 alpha=3`.
impl FromStr for Regularizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut tokens = s.split_whitespace();
        let kind: RegularizerKind = tokens
            .next()
            .ok_or_else(|| Error::Parse("empty penalty name".into()))?
            .parse()?;
        let mut pairs = Vec::new();
        for tok in tokens {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{tok}`")))?;
            let v: f64 = v
                .parse()
                .map_err(|_| Error::Parse(format!("bad number in `{tok}`")))?;
            pairs.push((k, v));
        }
        Regularizer::from_pairs(kind, pairs)
    }
}

/// Fixed-capacity candidate list, all entries projected onto `[0, s]`.
///
/// Projection never increases the objective: beyond `s` both the quadratic
/// and (by monotonicity) the penalty only grow.
struct Candidates {
    s: f64,
    items: [f64; 8],
    len: usize,
}

impl Candidates {
    fn new(s: f64) -> Self {
        Candidates {
            s,
            items: [0.0; 8],
            len: 0,
        }
    }

    #[inline]
    fn push(&mut self, u: f64) {
        if u.is_finite() {
            self.items[self.len] = u.clamp(0.0, self.s);
            self.len += 1;
        }
    }

    /// Lowest objective; near-ties go to the larger candidate.
    fn best(&self, objective: impl Fn(f64) -> f64) -> (f64, f64) {
        let mut vals = [0.0; 8];
        let mut min = f64::INFINITY;
        let items = &self.items[..self.len];
        for (v, &u) in vals.iter_mut().zip(items) {
            *v = objective(u);
            min = min.min(*v);
        }
        let mut best = (f64::NEG_INFINITY, f64::INFINITY);
        for (&v, &u) in vals.iter().zip(items) {
            if v <= min + TIE_TOL && u > best.0 {
                best = (u, v);
            }
        }
        best
    }
}

/// Largest positive stationary point of `0.5 (u - s)^2 + scale * u^q`, if any.
///
/// `g(u) = u - s + scale q u^(q-1)` is convex on `u > 0` with its minimum at
/// `u0 = (scale q (1 - q))^(1/(2-q))`. The local minimizer of the objective
/// is the larger root of `g`, which lies in `[u0, s]` whenever `g(u0) <= 0`.
fn lq_root(s: f64, scale: f64, q: f64) -> Option<f64> {
    if q == 0.5 {
        return half_threshold_root(s, scale);
    }
    let g = |u: f64| u - s + scale * q * u.powf(q - 1.0);
    let u0 = (scale * q * (1.0 - q)).powf(1.0 / (2.0 - q));
    if u0 >= s || g(u0) > 0.0 {
        return None;
    }
    Some(bisect_increasing(g, u0, s))
}

/// Bisection for the root of `g` on `[lo, hi]` with `g(lo) <= 0 < g(hi)`.
fn bisect_increasing(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..LQ_BISECTION_MAX_ITERS {
        if hi - lo <= LQ_BISECTION_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Closed-form stationary point for `q = 1/2`.
///
/// With `v = sqrt(u)` the stationarity condition is the depressed cubic
/// `v^3 - s v + scale/2 = 0`; its largest real root has the trigonometric
/// form used below whenever all three roots are real.
fn half_threshold_root(s: f64, scale: f64) -> Option<f64> {
    let c = 0.25 * scale * (s / 3.0).powf(-1.5);
    if c > 1.0 {
        return None;
    }
    let angle = 2.0 * std::f64::consts::FRAC_PI_3 - (2.0 / 3.0) * c.acos();
    Some((2.0 * s / 3.0) * (1.0 + angle.cos()))
}
