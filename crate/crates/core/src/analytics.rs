//! Expected-value model of the m-stop game under equiprobable tours.
//!
//! With `n_t` active agents, each holding a uniformly random tour over the
//! `n_t` vacant restaurants, a given restaurant is missing from the first
//! `m` positions of one tour with probability `(n_t − m)/n_t`, hence missing
//! from all of them with probability
//!
//! ```text
//! VP_t = ((n_t − m) / n_t)^{n_t}
//! ```
//!
//! The day-by-day recurrence follows: `n_1 = n`, `n_{t+1} = n_t · VP_t`, and
//! the cumulative utilization is `f_t = (n − n_{t+1}) / n`. Once `n_t ≤ m`
//! every remaining agent is served that day.
//!
//! `n_t` is propagated as a real number, never rounded.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    /// Fewer active agents than stops: every agent is served, the closed form
    /// is not a probability.
    #[error("degenerate day: {n_t} active agents with {m} stops")]
    DegenerateDay { n_t: f64, m: u32 },
    #[error("invalid model parameters: n = {n}, m = {m}")]
    InvalidParams { n: f64, m: u32 },
    #[error("{what} = {value} is outside {lo}..={hi}")]
    OutOfRange {
        what: &'static str,
        value: u64,
        lo: u64,
        hi: u64,
    },
}

/// `base^exp` evaluated as `exp(exp · ln(base))`, written as
/// `exp(exp · ln(1 − r))` with `r = 1 − base` for accuracy near 1.
fn pow_one_minus(r: f64, exp: f64) -> f64 {
    if r >= 1.0 {
        return if exp == 0.0 { 1.0 } else { 0.0 };
    }
    (exp * (-r).ln_1p()).exp()
}

pub fn vacancy_probability(n_t: f64, m: u32) -> Result<f64, AnalyticsError> {
    if !(n_t >= m as f64) || m == 0 {
        return Err(AnalyticsError::DegenerateDay { n_t, m });
    }
    Ok(pow_one_minus(m as f64 / n_t, n_t))
}

/// Probability that a restaurant still vacant before day `t` is also vacant
/// at the beginning of stop `z` (`1 ≤ z ≤ m + 1`): `((n_t + 1 − z)/n_t)^{n_t}`.
pub fn stage_vacancy_probability(n_t: f64, z: u32, m: u32) -> Result<f64, AnalyticsError> {
    if z == 0 || z > m + 1 {
        return Err(AnalyticsError::OutOfRange {
            what: "stop",
            value: z as u64,
            lo: 1,
            hi: m as u64 + 1,
        });
    }
    if z == 1 {
        return Ok(1.0);
    }
    if !(n_t >= (z - 1) as f64) {
        return Err(AnalyticsError::DegenerateDay { n_t, m: z - 1 });
    }
    Ok(pow_one_minus((z - 1) as f64 / n_t, n_t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: f64,
    pub m: u32,
}

impl ModelParams {
    pub fn new(n: f64, m: u32) -> Result<Self, AnalyticsError> {
        if !(n >= 1.0) || !n.is_finite() || m == 0 || m as f64 > n {
            return Err(AnalyticsError::InvalidParams { n, m });
        }
        Ok(ModelParams { n, m })
    }
}

/// Expected quantities of one day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayStats {
    pub t: u32,
    /// Expected active agents at the start of the day.
    pub n_t: f64,
    /// Vacancy probability of a not-yet-used restaurant (0 on a degenerate day).
    pub vp: f64,
    /// Expected agents served for the first time (= restaurants newly reserved).
    pub a_s: f64,
    /// Expected agents still unserved (= restaurants still vacant).
    pub a_u: f64,
    /// Expected cumulative utilization.
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: ModelParams,
    pub days: Vec<DayStats>,
}

impl Trajectory {
    /// Utilization at the end of day `t`; days past the last row are fully
    /// utilized if the trajectory terminated.
    pub fn utilization(&self, t: u32) -> Option<f64> {
        match self.days.iter().find(|d| d.t == t) {
            Some(d) => Some(d.f),
            None if self.is_complete() && t > 0 => Some(1.0),
            None => None,
        }
    }

    /// Reached full utilization (as opposed to being cut at the horizon).
    pub fn is_complete(&self) -> bool {
        self.days.last().is_some_and(|d| d.a_u == 0.0)
    }

    /// Steady-state utilization, reported as the value on the last day.
    pub fn steady_state(&self) -> f64 {
        self.days.last().map_or(0.0, |d| d.f)
    }
}

/// Iterates the expected-value recurrence for at most `horizon` days,
/// stopping early on the first fully utilized day.
pub fn trajectory(params: ModelParams, horizon: u32) -> Result<Trajectory, AnalyticsError> {
    if horizon == 0 {
        return Err(AnalyticsError::OutOfRange {
            what: "horizon",
            value: 0,
            lo: 1,
            hi: u32::MAX as u64,
        });
    }
    let ModelParams { n, m } = params;
    let mut days = Vec::new();
    let mut n_t = n;
    for t in 1..=horizon {
        if n_t <= m as f64 {
            days.push(DayStats {
                t,
                n_t,
                vp: 0.0,
                a_s: n_t,
                a_u: 0.0,
                f: 1.0,
            });
            break;
        }
        let vp = vacancy_probability(n_t, m)?;
        let a_u = n_t * vp;
        days.push(DayStats {
            t,
            n_t,
            vp,
            a_s: n_t - a_u,
            a_u,
            f: (n - a_u) / n,
        });
        n_t = a_u;
    }
    Ok(Trajectory { params, days })
}

/// `P(r in one of w given positions of a uniformly random tour) = w/n`.
pub fn position_probability(n: u64, w: u64) -> Result<f64, AnalyticsError> {
    if n == 0 || w == 0 || w > n {
        return Err(AnalyticsError::OutOfRange {
            what: "positions",
            value: w,
            lo: 1,
            hi: n,
        });
    }
    Ok(w as f64 / n as f64)
}

/// Probability that a restaurant occupies one of `w` fixed positions in
/// exactly `l` of `n` independent uniformly random tours:
/// `C(n,l) (w/n)^l ((n−w)/n)^{n−l}`.
pub fn appearance_distribution(n: u64, w: u64, l: u64) -> Result<f64, AnalyticsError> {
    let p = position_probability(n, w)?;
    if l > n {
        return Err(AnalyticsError::OutOfRange {
            what: "appearances",
            value: l,
            lo: 0,
            hi: n,
        });
    }
    let q = (n - w) as f64 / n as f64;
    let k = l.min(n - l);
    let ln_choose: f64 = (0..k).map(|i| ((n - i) as f64 / (i + 1) as f64).ln()).sum();
    let term = |base: f64, e: u64| if e == 0 { 1.0 } else { base.powf(e as f64) };
    Ok(ln_choose.exp() * term(p, l) * term(q, n - l))
}

/// Expected first-day utilization `1 − ((n − m)/n)^n`.
pub fn day1_utilization_exact(n: f64, m: u32) -> Result<f64, AnalyticsError> {
    ModelParams::new(n, m)?;
    Ok(1.0 - vacancy_probability(n, m)?)
}

/// Large-`n` approximations of one day's expected quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxDayStats {
    pub t: u32,
    /// `n e^{−(t−1)m}`
    pub n_t: f64,
    /// `e^{−tm}`
    pub vp: f64,
    /// `n e^{−(t−1)m} − n e^{−tm}`
    pub a_s: f64,
    /// `n e^{−tm}`
    pub a_u: f64,
    /// `1 − e^{−tm}`
    pub f: f64,
}

pub fn approx_stats(n: f64, m: u32, t: u32) -> Result<ApproxDayStats, AnalyticsError> {
    if t == 0 {
        return Err(AnalyticsError::OutOfRange {
            what: "day",
            value: 0,
            lo: 1,
            hi: u32::MAX as u64,
        });
    }
    let (m, t) = (m as f64, t as f64);
    let decay_prev = (-(t - 1.0) * m).exp();
    let decay = (-t * m).exp();
    Ok(ApproxDayStats {
        t: t as u32,
        n_t: n * decay_prev,
        vp: decay,
        a_s: n * decay_prev - n * decay,
        a_u: n * decay,
        f: 1.0 - decay,
    })
}

/// `1 − e^{−tm}` at real `t`, for drawing smooth curves.
pub fn approx_utilization(m: u32, t: f64) -> f64 {
    -(-(t * m as f64)).exp_m1()
}
