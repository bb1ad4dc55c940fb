//! Solvers for the delay-constrained capacity problems.
//!
//! Each problem asks for the mixture scheme of maximum capacity subject to
//! an average-delay budget `D` and a maximum-delay cap `T`:
//!
//! * [`solve_f1`] — fixed BSC or BEC,
//! * [`solve_f1_z`] — fixed Z channel, jointly optimizing the fraction of
//!   ones per part ([`z_alpha_star`]),
//! * [`solve_f2`] — attempt-indexed error probabilities,
//! * [`solve_f3`] — combined model over the BSC, choosing between
//!   reprogramming and marking on the final attempt ([`combined_best_q`],
//!   [`qmark_threshold`]).
//!
//! The closed forms all have the same shape: the best single strategy under
//! the cap, truncated to the delay budget. [`envelope_optimize`] solves the
//! generic mixture problem over an explicit point set and doubles as an
//! independent cross-check for every closed form.

use alloc::vec::Vec;

use crate::channels::{
    self, h, log2, powu, Channel, ChannelModel, ChannelSequence, RetryCount, ZInput,
};
use crate::error::{Error, Result};
use crate::schemes::{
    scheme_capacity, scheme_delay, truncate_to_budget, DelayBudget, Scheme, SchemePart,
};

/// How an optimum was certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Certificate {
    /// A proved closed form.
    ClosedForm,
    /// The concave-envelope mixture optimizer over an enumerated point set.
    Envelope,
    /// A plain grid search.
    Grid,
}

/// Solution to a delay-constrained capacity problem.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OptResult {
    /// Optimal capacity in bits per cell.
    pub value: f64,
    /// A scheme achieving it within the budget.
    pub scheme: Scheme,
    /// Fraction of ones used by the achieving Z-channel part, if any.
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub alpha_star: Option<f64>,
    /// Final-attempt write probability of the achieving combined part, if any.
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub q_star: Option<f64>,
    pub certificate: Certificate,
}

impl OptResult {
    fn closed_form(value: f64, scheme: Scheme) -> Self {
        OptResult {
            value,
            scheme,
            alpha_star: None,
            q_star: None,
            certificate: Certificate::ClosedForm,
        }
    }
}

#[cfg(debug_assertions)]
fn debug_check_feasible(result: &OptResult, ch: &ChannelModel, budget: f64) {
    let sc = scheme_capacity(&result.scheme, ch).unwrap_or(f64::NAN);
    debug_assert!(
        (sc - result.value).abs() <= 1e-9,
        "solver value {} disagrees with its scheme capacity {}",
        result.value,
        sc
    );
    let sd = scheme_delay(&result.scheme, ch).unwrap_or(f64::NAN);
    debug_assert!(
        sd <= budget + 1e-9,
        "scheme delay {} exceeds budget {}",
        sd,
        budget
    );
}

#[cfg(not(debug_assertions))]
fn debug_check_feasible(_result: &OptResult, _ch: &ChannelModel, _budget: f64) {}

fn check_budget(budget: &DelayBudget) -> Result<f64> {
    if !budget.avg_delay.is_finite() || budget.avg_delay < 0.0 {
        return Err(Error::Domain("average delay budget must be >= 0"));
    }
    Ok(budget.avg_delay)
}

/// Bracketing interval for scalar root finding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootBracket {
    pub lo: f64,
    pub hi: f64,
    /// Absolute tolerance on the argument.
    pub tol: f64,
}

/// Bisection on a bracketed sign change.
pub fn bisect<F: Fn(f64) -> f64>(f: F, bracket: RootBracket) -> Result<f64> {
    let RootBracket {
        mut lo,
        mut hi,
        tol,
    } = bracket;
    if !lo.is_finite() || !hi.is_finite() || lo >= hi || !tol.is_finite() || tol <= 0.0 {
        return Err(Error::Domain(
            "root bracket needs finite lo < hi and tol > 0",
        ));
    }
    let mut f_lo = f(lo);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    let f_hi = f(hi);
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if (f_lo > 0.0) == (f_hi > 0.0) {
        return Err(Error::NoRoot("no sign change on the bracket"));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Bisection that falls back to a uniform scan when the endpoints do not
/// bracket a sign change.
fn bisect_with_scan<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    match bisect(&f, RootBracket { lo, hi, tol }) {
        Err(Error::NoRoot(_)) => {
            const STEPS: u32 = 2048;
            let width = (hi - lo) / f64::from(STEPS);
            let mut a = lo;
            let mut fa = f(a);
            for i in 1..=STEPS {
                let b = lo + width * f64::from(i);
                let fb = f(b);
                if fa == 0.0 {
                    return Ok(a);
                }
                if (fa > 0.0) != (fb > 0.0) {
                    return bisect(&f, RootBracket { lo: a, hi: b, tol });
                }
                a = b;
                fa = fb;
            }
            Err(Error::NoRoot("no sign change found on the search interval"))
        }
        other => other,
    }
}

/// Solves the fixed-channel problem for the BSC and the BEC: the capacity of
/// the best scheme whose retry counts stay at or below the cap and whose
/// average delay stays within the budget.
///
/// With `D' = min(delay(T), D)` the optimum is `D' * (1-p) * (1-h(p^T)) /
/// (1-p^T)` for the BSC and `D' * (1-p)` for the BEC (also for both with an
/// unbounded cap), achieved by the capped strategy truncated to the budget.
pub fn solve_f1(ch: &Channel, budget: DelayBudget) -> Result<OptResult> {
    let d = check_budget(&budget)?;
    let (ch, p) = match ch {
        Channel::Bsc(p) => (Channel::bsc(*p)?, *p),
        Channel::Bec(p) => (Channel::bec(*p)?, *p),
        _ => {
            return Err(Error::UnsupportedChannel(
                "the fixed-channel solver covers BSC and BEC; use solve_f1_z for the Z channel",
            ))
        }
    };
    let model = ChannelModel::Fixed(ch.clone());

    let result = match budget.max_retries {
        RetryCount::Finite(0) => OptResult::closed_form(0.0, Scheme::idle()),
        RetryCount::Finite(t_cap) => {
            let d_cap = channels::delay(&ch, RetryCount::Finite(t_cap))?;
            let d_prime = d_cap.min(d);
            let value = match ch {
                Channel::Bsc(_) => {
                    let b = powu(p, t_cap);
                    d_prime * (1.0 - p) * (1.0 - h(b)) / (1.0 - b)
                }
                _ => d_prime * (1.0 - p),
            };
            let scheme = truncate_to_budget(&Scheme::single(RetryCount::Finite(t_cap)), &model, d)?;
            OptResult::closed_form(value, scheme)
        }
        RetryCount::Unbounded => {
            if p >= 1.0 {
                // Every attempt fails with certainty; nothing can be stored
                // and retry-until-success never terminates.
                OptResult::closed_form(0.0, Scheme::idle())
            } else {
                let d_inf = 1.0 / (1.0 - p);
                let d_prime = d_inf.min(d);
                let value = d_prime * (1.0 - p);
                let scheme = truncate_to_budget(&Scheme::single(RetryCount::Unbounded), &model, d)?;
                OptResult::closed_form(value, scheme)
            }
        }
    };
    debug_check_feasible(&result, &model, d);
    Ok(result)
}

/// Optimal fraction of ones for a single Z-channel strategy, together with
/// the normalized capacity it achieves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZOptimalInput {
    pub alpha: f64,
    pub normalized_capacity: f64,
}

/// Capacity per attempt of strategy `t` over the Z channel at a given
/// fraction of ones.
pub fn z_normalized_capacity(p: f64, t: RetryCount, alpha: f64) -> Result<f64> {
    let input = ZInput::new(alpha)?;
    let c = channels::z_capacity(p, t, input)?;
    let d = channels::z_delay(p, t, input)?;
    Ok(if d > 0.0 { c / d } else { c })
}

fn z_residual_raw(p: f64, b: f64, alpha: f64) -> f64 {
    let u = (1.0 - alpha) * (1.0 - b);
    (1.0 - p) * (1.0 - b) * log2(u) + (2.0 * b - 1.0 - b * p) * log2(1.0 - u) + (1.0 - p) * h(b)
}

/// Stationarity residual of the normalized capacity of strategy `t` over the
/// Z channel with respect to the fraction of ones. The maximizing fraction
/// is a root of this function on `(0, 1)`.
///
/// With `b = p^t` the residual is
/// `(1-p)(1-b) log((1-a)(1-b)) + (2b - 1 - bp) log(1 - (1-a)(1-b)) + (1-p) h(b)`.
pub fn z_alpha_residual(p: f64, t: u32, alpha: f64) -> Result<f64> {
    let p = channels::check_prob(p, "Z-channel error probability must lie in [0, 1]")?;
    if p >= 1.0 {
        return Err(Error::Domain("Z-channel optimization requires p < 1"));
    }
    if t < 1 {
        return Err(Error::Domain("stationarity residual requires t >= 1"));
    }
    let alpha = channels::check_prob(alpha, "fraction of ones must lie in [0, 1]")?;
    Ok(z_residual_raw(p, powu(p, t), alpha))
}

/// Finds the fraction of ones maximizing the normalized capacity of a single
/// Z-channel strategy, by bisection on the stationarity residual (finite
/// `t`) or on the derivative condition `(1-p) log(1-a) = log(a)` (unbounded
/// retries).
pub fn z_alpha_star(p: f64, t: RetryCount) -> Result<ZOptimalInput> {
    let p = channels::check_prob(p, "Z-channel error probability must lie in [0, 1]")?;
    if p >= 1.0 {
        return Err(Error::Domain("Z-channel optimization requires p < 1"));
    }
    let alpha = match t {
        RetryCount::Finite(0) => {
            return Err(Error::Domain(
                "Z-channel optimization requires t >= 1 or t = -1",
            ))
        }
        RetryCount::Finite(t) => {
            let b = powu(p, t);
            bisect_with_scan(|a| z_residual_raw(p, b, a), 1e-12, 1.0 - 1e-12, 1e-12)?
        }
        RetryCount::Unbounded => {
            let g = |a: f64| (1.0 - p) * log2(1.0 - a) - log2(a);
            bisect(
                g,
                RootBracket {
                    lo: 1e-15,
                    hi: 1.0 - 1e-15,
                    tol: 1e-12,
                },
            )?
        }
    };
    Ok(ZOptimalInput {
        alpha,
        normalized_capacity: z_normalized_capacity(p, t, alpha)?,
    })
}

/// Solves the fixed Z-channel problem: searches the retry counts allowed by
/// the cap for the best normalized capacity at its optimal fraction of ones,
/// then truncates that strategy to the delay budget.
///
/// An unbounded cap searches `t` up to the point where `p^t` drops below
/// `1e-12` (at most 100000) plus the retry-until-success strategy. Ties
/// prefer the smaller retry count.
pub fn solve_f1_z(p: f64, budget: DelayBudget) -> Result<OptResult> {
    let d = check_budget(&budget)?;
    let p = channels::check_prob(p, "Z-channel error probability must lie in [0, 1]")?;
    if p >= 1.0 {
        return Err(Error::Domain("Z-channel optimization requires p < 1"));
    }
    let model = ChannelModel::Fixed(Channel::Z(p));

    // Beyond p^t < 1e-12 the per-strategy capacity and delay are flat to
    // more digits than any reported tolerance, so the search stops there.
    let t_flat = if p <= 0.0 {
        1
    } else {
        (libm::ceil(libm::log(1e-12) / libm::log(p)) as u32).clamp(1, 100_000)
    };
    let mut candidates: Vec<RetryCount> = Vec::new();
    match budget.max_retries {
        RetryCount::Finite(t_cap) => {
            candidates.extend((1..=t_cap.min(t_flat)).map(RetryCount::Finite));
        }
        RetryCount::Unbounded => {
            candidates.extend((1..=t_flat).map(RetryCount::Finite));
            candidates.push(RetryCount::Unbounded);
        }
    }

    let mut best: Option<(RetryCount, ZOptimalInput)> = None;
    for t in candidates {
        let opt = z_alpha_star(p, t)?;
        let better = match &best {
            None => true,
            Some((_, cur)) => opt.normalized_capacity > cur.normalized_capacity,
        };
        if better {
            best = Some((t, opt));
        }
    }

    let result = match best {
        None => OptResult::closed_form(0.0, Scheme::idle()),
        Some((t_star, opt)) => {
            let d_star = channels::z_delay(p, t_star, ZInput::new(opt.alpha)?)?;
            let value = d_star.min(d) * opt.normalized_capacity;
            let scheme = truncate_to_budget(&Scheme::single_z(t_star, opt.alpha), &model, d)?;
            OptResult {
                value,
                scheme,
                alpha_star: Some(opt.alpha),
                q_star: None,
                certificate: Certificate::ClosedForm,
            }
        }
    };
    debug_check_feasible(&result, &model, d);
    Ok(result)
}

/// Solves the probability-sequence problem.
///
/// BSC sequences and nonincreasing BEC sequences use the closed form (the
/// capped strategy truncated to the budget). General BEC sequences fall
/// back to the envelope optimizer over all retry counts under the cap and
/// report `Certificate::Envelope`.
pub fn solve_f2(seq: &ChannelSequence, budget: DelayBudget) -> Result<OptResult> {
    let d = check_budget(&budget)?;
    let model = ChannelModel::Sequence(seq.clone());

    if budget.max_retries == RetryCount::Finite(0) {
        let result = OptResult::closed_form(0.0, Scheme::idle());
        debug_check_feasible(&result, &model, d);
        return Ok(result);
    }

    let closed_form_holds = match seq.kind() {
        channels::BinaryChannelKind::Bsc => true,
        channels::BinaryChannelKind::Bec => seq.is_nonincreasing(),
    };

    let result = if closed_form_holds {
        let t_cap = budget.max_retries;
        match channels::sequence_delay(seq, t_cap) {
            // Retry-until-success on an all-ones sequence never terminates;
            // nothing can be stored, so the optimum is the idle scheme.
            Err(Error::DivergentSeries | Error::DivergentDelay) => {
                OptResult::closed_form(0.0, Scheme::idle())
            }
            Err(e) => return Err(e),
            Ok(d_cap) => {
                let c_cap = channels::sequence_capacity(seq, t_cap)?;
                let value = if d_cap > 0.0 {
                    d_cap.min(d) * c_cap / d_cap
                } else {
                    0.0
                };
                let scheme = truncate_to_budget(&Scheme::single(t_cap), &model, d)?;
                OptResult::closed_form(value, scheme)
            }
        }
    } else {
        let mut candidates: Vec<RetryCount> = Vec::new();
        match budget.max_retries {
            RetryCount::Finite(t_cap) => {
                candidates.extend((0..=t_cap).map(RetryCount::Finite));
            }
            RetryCount::Unbounded => {
                let len = seq.prefix().len() as u32;
                let tail = seq.tail();
                let steps = if tail <= 0.0 || tail >= 1.0 {
                    1
                } else {
                    (libm::ceil(libm::log(1e-12) / libm::log(tail)) as u32).max(1)
                };
                let cap = len.saturating_add(steps).min(100_000);
                candidates.extend((0..=cap).map(RetryCount::Finite));
                if channels::sequence_delay(seq, RetryCount::Unbounded).is_ok() {
                    candidates.push(RetryCount::Unbounded);
                }
            }
        }
        let mut points = Vec::with_capacity(candidates.len());
        for &t in &candidates {
            points.push((
                channels::sequence_delay(seq, t)?,
                channels::sequence_capacity(seq, t)?,
            ));
        }
        let envelope = envelope_optimize(&points, d)?;
        let scheme = scheme_from_mixture(&candidates, &envelope.mixture)?;
        OptResult {
            value: envelope.value,
            scheme,
            alpha_star: None,
            q_star: None,
            certificate: Certificate::Envelope,
        }
    };
    debug_check_feasible(&result, &model, d);
    Ok(result)
}

fn scheme_from_mixture(candidates: &[RetryCount], mixture: &[(usize, f64)]) -> Result<Scheme> {
    let mut parts: Vec<SchemePart> = Vec::new();
    let mut total = 0.0;
    for &(idx, w) in mixture {
        if w > 1e-15 {
            parts.push(SchemePart::plain(w, candidates[idx]));
            total += w;
        }
    }
    if total < 1.0 - 1e-15 {
        parts.push(SchemePart::plain(1.0 - total, RetryCount::Finite(0)));
    }
    if parts.is_empty() {
        return Ok(Scheme::idle());
    }
    Scheme::new(parts)
}

/// Best final-attempt choice for the combined strategy: compares writing the
/// value unverified (`q = 1`, capacity `1 - h(p^t)`) against marking every
/// still-failed cell (`q = 0`, capacity `1 - p^(t-1)`). Ties prefer `q = 1`.
pub fn combined_best_q(p: f64, t: u32) -> Result<(f64, f64)> {
    if !(p > 0.0 && p <= 0.5) {
        return Err(Error::Domain("combined model requires 0 < p <= 0.5"));
    }
    if t < 1 {
        return Err(Error::Domain("combined model requires t >= 1"));
    }
    // Compare the loss terms directly: near p^t -> 0 both capacities sit
    // within an ulp of 1 and the subtracted forms cannot be told apart.
    let miss = powu(p, t - 1);
    let residual_entropy = h(powu(p, t));
    Ok(if residual_entropy <= miss {
        (1.0, 1.0 - residual_entropy)
    } else {
        (0.0, 1.0 - miss)
    })
}

/// Solves the combined-model problem over the BSC: with `D' = min(delay(T),
/// D)`, the optimum is `(D' / delay(T)) * max(1 - h(p^T), 1 - p^(T-1))`,
/// achieved by the capped strategy with the better final-attempt choice,
/// truncated to the budget.
pub fn solve_f3(p: f64, budget: DelayBudget) -> Result<OptResult> {
    let d = check_budget(&budget)?;
    let t_cap = match budget.max_retries {
        RetryCount::Finite(t) if t >= 1 => t,
        _ => {
            return Err(Error::Domain(
                "the combined-model solver requires a finite cap T >= 1",
            ))
        }
    };
    if !(p > 0.0 && p <= 0.5) {
        return Err(Error::Domain("combined model requires 0 < p <= 0.5"));
    }
    let ch = Channel::bsc(p)?;
    let model = ChannelModel::Fixed(ch.clone());
    let (q_star, best_cap) = combined_best_q(p, t_cap)?;
    let d_cap = channels::delay(&ch, RetryCount::Finite(t_cap))?;
    let d_prime = d_cap.min(d);
    let value = d_prime / d_cap * best_cap;
    let scheme = truncate_to_budget(
        &Scheme::single_combined(RetryCount::Finite(t_cap), q_star),
        &model,
        d,
    )?;
    let result = OptResult {
        value,
        scheme,
        alpha_star: None,
        q_star: Some(q_star),
        certificate: Certificate::ClosedForm,
    };
    debug_check_feasible(&result, &model, d);
    Ok(result)
}

/// The real retry count where marking overtakes reprogramming: the solution
/// `t` of `h(p^t) = p^(t-1)`. For every `t` at or above the threshold the
/// marking choice (`q = 0`) is at least as good.
pub fn qmark_threshold(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::Domain("the q-flip threshold requires 0 < p < 0.5"));
    }
    let g = |t: f64| h(libm::pow(p, t)) - libm::pow(p, t - 1.0);
    let mut hi = 2.0;
    while g(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 1e7 {
            return Err(Error::NoRoot(
                "no sign change while expanding the t bracket",
            ));
        }
    }
    bisect(
        g,
        RootBracket {
            lo: 1.0,
            hi,
            tol: 1e-12,
        },
    )
}

/// A point mixture found by the envelope optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeSolution {
    /// Maximal mixed capacity under the budget.
    pub value: f64,
    /// Weights over the input points (indices into the caller's slice).
    /// Any missing weight is spent on programming nothing.
    pub mixture: Vec<(usize, f64)>,
}

/// Maximizes `sum(w_i * c_i)` over mixtures with `sum(w_i * d_i) <= budget`
/// and `sum(w_i) <= 1`, given the achievable `(delay, capacity)` points.
/// The optimum lies on the upper concave envelope of the points together
/// with the origin, so the result is a mixture of at most two points.
pub fn envelope_optimize(points: &[(f64, f64)], budget: f64) -> Result<EnvelopeSolution> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !budget.is_finite() || budget < 0.0 {
        return Err(Error::Domain("average delay budget must be >= 0"));
    }

    let mut pts: Vec<(f64, f64, Option<usize>)> = Vec::with_capacity(points.len() + 1);
    pts.push((0.0, 0.0, None));
    for (i, &(d, c)) in points.iter().enumerate() {
        if !d.is_finite() || !c.is_finite() || d < 0.0 {
            return Err(Error::Domain(
                "envelope points must be finite with non-negative delay",
            ));
        }
        pts.push((d, c, Some(i)));
    }
    pts.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(b.1.partial_cmp(&a.1).unwrap())
    });
    // Equal delays: keep only the highest capacity (first after the sort).
    pts.dedup_by(|next, prev| next.0 == prev.0);

    let mut hull: Vec<(f64, f64, Option<usize>)> = Vec::new();
    for pt in pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b.0 - a.0) * (pt.1 - a.1) - (b.1 - a.1) * (pt.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }

    // Points past the capacity peak only add delay; drop them.
    let mut peak = 0;
    for i in 1..hull.len() {
        if hull[i].1 > hull[peak].1 {
            peak = i;
        }
    }
    hull.truncate(peak + 1);

    let last = hull.len() - 1;
    let x = budget.min(hull[last].0);
    if x >= hull[last].0 {
        let mut mixture = Vec::new();
        if let Some(idx) = hull[last].2 {
            mixture.push((idx, 1.0));
        }
        return Ok(EnvelopeSolution {
            value: hull[last].1,
            mixture,
        });
    }
    let seg = (0..last)
        .find(|&i| hull[i].0 <= x && x <= hull[i + 1].0)
        .expect("budget lies inside the hull range");
    let (a, b) = (hull[seg], hull[seg + 1]);
    let lambda = (x - a.0) / (b.0 - a.0);
    let value = (1.0 - lambda) * a.1 + lambda * b.1;
    let mut mixture = Vec::new();
    if let Some(idx) = a.2 {
        if 1.0 - lambda > 0.0 {
            mixture.push((idx, 1.0 - lambda));
        }
    }
    if let Some(idx) = b.2 {
        if lambda > 0.0 {
            mixture.push((idx, lambda));
        }
    }
    Ok(EnvelopeSolution { value, mixture })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::BinaryChannelKind;

    const TIGHT: f64 = 1e-12;

    fn budget(d: f64, t: i64) -> DelayBudget {
        DelayBudget::new(d, RetryCount::from_signed(t).unwrap()).unwrap()
    }

    #[test]
    fn f1_bec_unconstrained_cap() {
        let r = solve_f1(&Channel::bec(0.2).unwrap(), budget(1.0, -1)).unwrap();
        assert!((r.value - 0.8).abs() < TIGHT);
        assert_eq!(r.certificate, Certificate::ClosedForm);

        // Slack budget stores a full bit per cell.
        let r = solve_f1(&Channel::bsc(0.3).unwrap(), budget(5.0, -1)).unwrap();
        assert!((r.value - 1.0).abs() < TIGHT);
    }

    #[test]
    fn f1_bsc_finite_cap() {
        let r = solve_f1(&Channel::bsc(0.25).unwrap(), budget(1.0, 1)).unwrap();
        assert!((r.value - (1.0 - h(0.25))).abs() < TIGHT);

        // T = 0 stores nothing.
        let r = solve_f1(&Channel::bsc(0.25).unwrap(), budget(10.0, 0)).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.scheme, Scheme::idle());
    }

    #[test]
    fn f1_value_matches_scheme_capacity() {
        let model = ChannelModel::Fixed(Channel::bsc(0.2).unwrap());
        for t in [1i64, 2, 5, -1] {
            for d in [0.3, 1.0, 2.0, 10.0] {
                let r = solve_f1(&Channel::bsc(0.2).unwrap(), budget(d, t)).unwrap();
                let sc = scheme_capacity(&r.scheme, &model).unwrap();
                assert!((sc - r.value).abs() < 1e-9);
                assert!(scheme_delay(&r.scheme, &model).unwrap() <= d + 1e-9);
            }
        }
    }

    #[test]
    fn z_alpha_star_unbounded_golden_ratio() {
        // At p = 1/2 the stationarity condition a = (1-a)^(1/2) is solved by
        // the golden-ratio conjugate.
        let opt = z_alpha_star(0.5, RetryCount::Unbounded).unwrap();
        assert!((opt.alpha - 0.618_033_988_749_894_9).abs() < 1e-9);
        assert!((opt.normalized_capacity - 0.694).abs() < 1e-3);

        let opt = z_alpha_star(0.25, RetryCount::Unbounded).unwrap();
        assert!((opt.normalized_capacity - 0.863).abs() < 1e-3);
    }

    #[test]
    fn z_alpha_star_small_p_is_half() {
        let opt = z_alpha_star(0.0, RetryCount::Finite(1)).unwrap();
        assert!((opt.alpha - 0.5).abs() < 1e-9);
        assert!((opt.normalized_capacity - 1.0).abs() < 1e-9);

        let opt = z_alpha_star(1e-9, RetryCount::Finite(1)).unwrap();
        assert!((opt.alpha - 0.5).abs() < 1e-4);
    }

    #[test]
    fn z_alpha_star_beats_dense_grid() {
        for &p in &[0.1, 0.5, 0.9] {
            for t in [
                RetryCount::Finite(1),
                RetryCount::Finite(3),
                RetryCount::Unbounded,
            ] {
                let opt = z_alpha_star(p, t).unwrap();
                let mut best = 0.0f64;
                for i in 0..=10_000 {
                    let a = f64::from(i) / 10_000.0;
                    best = best.max(z_normalized_capacity(p, t, a).unwrap());
                }
                assert!(
                    best <= opt.normalized_capacity + 1e-8,
                    "grid {} beats solver {} at p={p} t={t:?}",
                    best,
                    opt.normalized_capacity
                );
            }
        }
    }

    #[test]
    fn z_alpha_residual_vanishes_at_the_root() {
        for &p in &[0.1, 0.25, 0.5, 0.75] {
            for t in 1..=4u32 {
                let opt = z_alpha_star(p, RetryCount::Finite(t)).unwrap();
                let res = z_alpha_residual(p, t, opt.alpha).unwrap();
                assert!(res.abs() < 1e-10, "residual {res} at p={p} t={t}");
            }
        }
    }

    #[test]
    fn f1_z_examples() {
        // Noiseless Z channel stores a full bit with one attempt per cell.
        let r = solve_f1_z(0.0, budget(2.0, -1)).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);

        // Tight budget scales linearly.
        let r = solve_f1_z(0.25, budget(1.0, 2)).unwrap();
        let best = (1..=2)
            .map(|t| {
                z_alpha_star(0.25, RetryCount::Finite(t))
                    .unwrap()
                    .normalized_capacity
            })
            .fold(0.0f64, f64::max);
        assert!((r.value - best).abs() < 1e-9);
        assert!(r.alpha_star.is_some());

        assert!(solve_f1_z(1.0, budget(1.0, 2)).is_err());
    }

    #[test]
    fn f1_z_slack_budget_uses_the_largest_allowed_t() {
        // The normalized capacity grows with t over the observed range, so a
        // slack budget settles on the cap itself.
        let r = solve_f1_z(0.5, budget(10.0, 4)).unwrap();
        assert_eq!(r.scheme.parts().len(), 1);
        assert_eq!(r.scheme.parts()[0].t, RetryCount::Finite(4));
        let opt = z_alpha_star(0.5, RetryCount::Finite(4)).unwrap();
        let c4 = channels::z_capacity(0.5, RetryCount::Finite(4), ZInput::new(opt.alpha).unwrap())
            .unwrap();
        assert!((r.value - c4).abs() < 1e-9);
    }

    #[test]
    fn f2_handles_certain_failure_and_large_caps() {
        // Every attempt fails with certainty: nothing can be stored.
        let ones = ChannelSequence::constant(BinaryChannelKind::Bec, 1.0).unwrap();
        let r = solve_f2(&ones, budget(2.0, -1)).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.scheme, Scheme::idle());

        // A huge finite cap on the Z search is handled without enumerating
        // every retry count.
        let r = solve_f1_z(0.5, budget(0.5, 1_000_000)).unwrap();
        let best = z_alpha_star(0.5, RetryCount::Finite(40)).unwrap();
        assert!((r.value - 0.5 * best.normalized_capacity).abs() < 1e-9);
    }

    #[test]
    fn f2_constant_sequence_reduces_to_f1() {
        let seq = ChannelSequence::constant(BinaryChannelKind::Bsc, 0.3).unwrap();
        for t in [1i64, 3, -1] {
            for d in [0.5, 1.0, 3.0] {
                let f2 = solve_f2(&seq, budget(d, t)).unwrap();
                let f1 = solve_f1(&Channel::bsc(0.3).unwrap(), budget(d, t)).unwrap();
                assert!((f2.value - f1.value).abs() < TIGHT);
            }
        }
    }

    #[test]
    fn f2_nonincreasing_bec_uses_closed_form() {
        let seq = ChannelSequence::new(BinaryChannelKind::Bec, alloc::vec![0.5, 0.25, 0.125], 0.0)
            .unwrap();
        let r = solve_f2(&seq, budget(10.0, 3)).unwrap();
        assert_eq!(r.certificate, Certificate::ClosedForm);
        // Q_3 = 0.015625, unconstrained, so the value is C_3.
        assert!((r.value - (1.0 - 0.015625)).abs() < TIGHT);
    }

    #[test]
    fn f2_general_bec_falls_back_to_envelope() {
        // Failure probability jumps back up after the first attempt, so one
        // attempt per cell beats two.
        let seq = ChannelSequence::new(BinaryChannelKind::Bec, alloc::vec![0.1, 0.9], 0.9).unwrap();
        let nc1 = {
            let s = Scheme::single(RetryCount::Finite(1));
            crate::schemes::normalized_capacity(&s, &ChannelModel::Sequence(seq.clone())).unwrap()
        };
        let nc2 = {
            let s = Scheme::single(RetryCount::Finite(2));
            crate::schemes::normalized_capacity(&s, &ChannelModel::Sequence(seq.clone())).unwrap()
        };
        assert!(nc1 > nc2);

        let r = solve_f2(&seq, budget(1.0, 2)).unwrap();
        assert_eq!(r.certificate, Certificate::Envelope);
        assert!((r.value - 0.9).abs() < TIGHT);
    }

    #[test]
    fn combined_best_q_flips_with_t() {
        // Degenerate tie at p = 0.5, t = 1: both choices store nothing.
        let (q, cap) = combined_best_q(0.5, 1).unwrap();
        assert_eq!(q, 1.0);
        assert!(cap.abs() < TIGHT);

        let (q, cap) = combined_best_q(0.1, 2).unwrap();
        assert_eq!(q, 1.0);
        assert!((cap - (1.0 - h(0.01))).abs() < TIGHT);

        let (q, cap) = combined_best_q(0.1, 4).unwrap();
        assert_eq!(q, 0.0);
        assert!((cap - (1.0 - 0.001)).abs() < TIGHT);
    }

    #[test]
    fn f3_closed_form() {
        // Slack budget: the value is the better endpoint capacity.
        let r = solve_f3(0.1, budget(100.0, 4)).unwrap();
        assert!((r.value - 0.999).abs() < TIGHT);
        assert_eq!(r.q_star, Some(0.0));

        // Halving the budget halves the value.
        let d4 = (1.0 - powu(0.1, 4)) / 0.9;
        let r_half = solve_f3(0.1, budget(d4 / 2.0, 4)).unwrap();
        assert!((r_half.value - 0.999 / 2.0).abs() < TIGHT);

        assert!(solve_f3(0.1, budget(1.0, 0)).is_err());
        assert!(solve_f3(0.1, budget(1.0, -1)).is_err());
        assert!(solve_f3(0.0, budget(1.0, 2)).is_err());
    }

    #[test]
    fn qmark_threshold_root_and_flip() {
        for &p in &[0.05, 0.1, 0.2, 0.3, 0.45] {
            let tp = qmark_threshold(p).unwrap();
            assert!(tp >= 1.0);
            let residual = h(libm::pow(p, tp)) - libm::pow(p, tp - 1.0);
            assert!(residual.abs() < 1e-8, "residual {residual} at p={p}");

            // Marking first wins at the next integer.
            let up = libm::ceil(tp) as u32;
            let (q_up, _) = combined_best_q(p, up).unwrap();
            assert_eq!(q_up, 0.0, "expected marking at t={up} for p={p}");
            let down = libm::floor(tp) as u32;
            if down >= 1 && f64::from(down) < tp {
                let (q_down, _) = combined_best_q(p, down).unwrap();
                assert_eq!(q_down, 1.0, "expected reprogramming at t={down} for p={p}");
            }
        }
        assert!(qmark_threshold(0.5).is_err());
        assert!(qmark_threshold(0.0).is_err());
    }

    #[test]
    fn envelope_basics() {
        // Single point with slack budget.
        let r = envelope_optimize(&[(2.0, 0.8)], 3.0).unwrap();
        assert_eq!(r.value, 0.8);
        assert_eq!(r.mixture, alloc::vec![(0, 1.0)]);

        // Single point under a tight budget: scale through the origin.
        let r = envelope_optimize(&[(2.0, 0.8)], 1.0).unwrap();
        assert!((r.value - 0.4).abs() < TIGHT);

        // Collinear points through the origin: value is budget * slope.
        let pts = [(1.0, 0.6), (2.0, 1.2), (3.0, 1.8)];
        let r = envelope_optimize(&pts, 1.5).unwrap();
        assert!((r.value - 0.9).abs() < TIGHT);

        // A dominated dip never appears in the mixture.
        let pts = [(1.0, 0.9), (1.1, 0.5), (1.2, 0.95)];
        let r = envelope_optimize(&pts, 1.1).unwrap();
        assert!(r.mixture.iter().all(|&(i, _)| i != 1));
        assert!(r.value > 0.9);

        assert!(envelope_optimize(&[], 1.0).is_err());
    }

    #[test]
    fn envelope_reproduces_f1() {
        for &p in &[0.1, 0.3, 0.5] {
            let ch = Channel::bsc(p).unwrap();
            for t_cap in 1..=5u32 {
                for &d in &[0.4, 1.0, 2.5, 8.0] {
                    let solver = solve_f1(&ch, budget(d, i64::from(t_cap))).unwrap();
                    let points: Vec<(f64, f64)> = (0..=t_cap)
                        .map(|t| {
                            let t = RetryCount::Finite(t);
                            (
                                channels::delay(&ch, t).unwrap(),
                                channels::capacity(&ch, t).unwrap(),
                            )
                        })
                        .collect();
                    let env = envelope_optimize(&points, d).unwrap();
                    assert!(
                        (env.value - solver.value).abs() < 1e-9,
                        "envelope {} vs solver {} at p={p} T={t_cap} D={d}",
                        env.value,
                        solver.value
                    );
                }
            }
        }
    }

    #[test]
    fn bisect_finds_simple_roots() {
        let r = bisect(
            |x: f64| x * x - 2.0,
            RootBracket {
                lo: 0.0,
                hi: 2.0,
                tol: 1e-12,
            },
        )
        .unwrap();
        assert!((r - core::f64::consts::SQRT_2).abs() < 1e-9);
        assert!(bisect(
            |x: f64| x * x + 1.0,
            RootBracket {
                lo: -1.0,
                hi: 1.0,
                tol: 1e-9
            }
        )
        .is_err());
    }
}
