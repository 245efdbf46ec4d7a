//! Per-pixel reconstruction likelihoods.
//!
//! Every log-likelihood is reduced by the per-pixel mean, so values are
//! comparable across image sizes:
//!
//! * Bernoulli: `x log x̂ + (1 - x) log(1 - x̂)`
//! * Continuous Bernoulli: the Bernoulli term plus `log C(x̂)` with
//!   `C(λ) = 2 atanh(1 - 2λ) / (1 - 2λ)`, `C(1/2) = 2`
//! * Gaussian with unit variance: `-(x - x̂)² / 2` (no `log 2π` constant)
//!
//! [`max_ll_curve`] tabulates the best attainable value of each likelihood as
//! a function of the target pixel. For the Bernoulli family that ceiling is
//! itself a function of `x`, which is what lets the proportion of zero pixels
//! confound likelihood-based scores.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::nn::OUTPUT_CLAMP;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LikelihoodKind {
    Bernoulli,
    ContinuousBernoulli,
    /// Diagonal Gaussian with every `σ_i = 1`.
    GaussianUnit,
}

impl LikelihoodKind {
    pub const ALL: [LikelihoodKind; 3] = [
        LikelihoodKind::Bernoulli,
        LikelihoodKind::ContinuousBernoulli,
        LikelihoodKind::GaussianUnit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LikelihoodKind::Bernoulli => "bernoulli",
            LikelihoodKind::ContinuousBernoulli => "continuous_bernoulli",
            LikelihoodKind::GaussianUnit => "gaussian",
        }
    }

    /// Log-likelihood contribution of a single pixel.
    #[inline]
    pub fn pixel_ll(self, x: f64, xhat: f64) -> f64 {
        match self {
            LikelihoodKind::Bernoulli => bernoulli_term(x, xhat),
            LikelihoodKind::ContinuousBernoulli => {
                bernoulli_term(x, xhat) + log_cb_normalizer(xhat)
            }
            LikelihoodKind::GaussianUnit => {
                let d = x - xhat;
                -0.5 * d * d
            }
        }
    }

    /// Derivative of [`LikelihoodKind::pixel_ll`] with respect to `xhat`.
    #[inline]
    pub fn pixel_ll_grad(self, x: f64, xhat: f64) -> f64 {
        match self {
            LikelihoodKind::Bernoulli => x / xhat - (1.0 - x) / (1.0 - xhat),
            LikelihoodKind::ContinuousBernoulli => {
                x / xhat - (1.0 - x) / (1.0 - xhat) + log_cb_normalizer_grad(xhat)
            }
            LikelihoodKind::GaussianUnit => x - xhat,
        }
    }

    fn needs_open_interval(self) -> bool {
        !matches!(self, LikelihoodKind::GaussianUnit)
    }
}

impl fmt::Display for LikelihoodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LikelihoodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bernoulli" | "ber" => Ok(LikelihoodKind::Bernoulli),
            "continuous_bernoulli" | "cbernoulli" | "cb" => Ok(LikelihoodKind::ContinuousBernoulli),
            "gaussian" | "gaussian_unit" | "gauss" => Ok(LikelihoodKind::GaussianUnit),
            other => Err(Error::Config(format!("unknown likelihood '{other}'"))),
        }
    }
}

#[inline]
fn bernoulli_term(x: f64, xhat: f64) -> f64 {
    // 0 * log(0) is taken as 0 so that the ceiling at x ∈ {0, 1} is exactly 0.
    let a = if x == 0.0 { 0.0 } else { x * xhat.ln() };
    let b = if x == 1.0 {
        0.0
    } else {
        (1.0 - x) * (1.0 - xhat).ln()
    };
    a + b
}

/// Half-width of the interval around `λ = 1/2` evaluated by series expansion.
const CB_TAYLOR_RADIUS: f64 = 1e-4;

/// `log C(λ)` for the Continuous Bernoulli normaliser.
pub fn log_cb_normalizer(lambda: f64) -> f64 {
    let u = 1.0 - 2.0 * lambda;
    if (lambda - 0.5).abs() < CB_TAYLOR_RADIUS {
        // log(atanh(u)/u) = u²/3 + 13u⁴/90 + O(u⁶)
        let u2 = u * u;
        std::f64::consts::LN_2 + u2 / 3.0 + 13.0 * u2 * u2 / 90.0
    } else {
        std::f64::consts::LN_2 + (u.atanh() / u).ln()
    }
}

/// `d log C(λ) / dλ`.
pub fn log_cb_normalizer_grad(lambda: f64) -> f64 {
    let u = 1.0 - 2.0 * lambda;
    let dlog_du = if (lambda - 0.5).abs() < CB_TAYLOR_RADIUS {
        2.0 * u / 3.0 + 26.0 * u * u * u / 45.0
    } else {
        1.0 / ((1.0 - u * u) * u.atanh()) - 1.0 / u
    };
    -2.0 * dlog_du
}

fn check_pair(kind: LikelihoodKind, x: &[f64], xhat: &[f64]) -> Result<()> {
    if x.len() != xhat.len() {
        return Err(Error::Dimension(format!(
            "target has {} pixels, reconstruction {}",
            x.len(),
            xhat.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::Dimension("empty image".into()));
    }
    if kind.needs_open_interval() {
        if let Some(v) = xhat.iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
            return Err(Error::Numeric(format!(
                "reconstruction value {v} outside the open unit interval"
            )));
        }
    }
    Ok(())
}

/// Mean per-pixel log-likelihood of `x` under reconstruction `xhat`.
pub fn log_likelihood(kind: LikelihoodKind, x: &[f64], xhat: &[f64]) -> Result<f64> {
    check_pair(kind, x, xhat)?;
    let sum: f64 = x.iter().zip(xhat).map(|(&a, &b)| kind.pixel_ll(a, b)).sum();
    let ll = sum / x.len() as f64;
    if !ll.is_finite() {
        return Err(Error::Numeric(format!("non-finite {kind} log-likelihood")));
    }
    Ok(ll)
}

pub fn bernoulli_ll(x: &[f64], xhat: &[f64]) -> Result<f64> {
    log_likelihood(LikelihoodKind::Bernoulli, x, xhat)
}

pub fn cont_bernoulli_ll(x: &[f64], xhat: &[f64]) -> Result<f64> {
    log_likelihood(LikelihoodKind::ContinuousBernoulli, x, xhat)
}

pub fn gaussian_ll(x: &[f64], xhat: &[f64]) -> Result<f64> {
    log_likelihood(LikelihoodKind::GaussianUnit, x, xhat)
}

/// Golden-section maximisation of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_section_max(
    f: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    let mid = 0.5 * (lo + hi);
    // The optimum may sit on an end of the bracket.
    [(mid, f(mid)), (lo, f(lo)), (hi, f(hi))].into_iter().fold(
        (mid, f64::NEG_INFINITY),
        |best, cand| if cand.1 > best.1 { cand } else { best },
    )
}

const GOLDEN_TOL: f64 = 1e-10;

/// Maximum attainable single-pixel log-likelihood for each target value in
/// `grid`, maximising over reconstructions in the clamped output range.
pub fn max_ll_curve(kind: LikelihoodKind, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if let Some(v) = grid.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Argument(format!("grid value {v} outside [0, 1]")));
    }
    let curve = grid
        .iter()
        .map(|&x| {
            let best = match kind {
                LikelihoodKind::Bernoulli => bernoulli_term(x, x),
                LikelihoodKind::GaussianUnit => 0.0,
                LikelihoodKind::ContinuousBernoulli => {
                    let f = |xhat: f64| kind.pixel_ll(x, xhat);
                    golden_section_max(f, OUTPUT_CLAMP, 1.0 - OUTPUT_CLAMP, GOLDEN_TOL).1
                }
            };
            (x, best)
        })
        .collect();
    Ok(curve)
}
