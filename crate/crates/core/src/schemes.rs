//! Mixture schemes: program different fractions of the cells with different
//! retry strategies.
//!
//! A scheme is a list of parts `(beta_i, t_i)` with positive weights summing
//! to one; a `beta_i` fraction of the cells is programmed with strategy
//! `t_i`. Parts may carry an `alpha` (fraction of ones, Z channel only) or a
//! `q` (final-attempt write probability, combined model over the BSC only).
//! Delay and capacity are weight-linear in the parts, and a scheme that
//! exceeds an average-delay budget is brought back under it by leaving a
//! fraction of the cells unprogrammed ([`truncate_to_budget`]).

use alloc::vec::Vec;

use crate::channels::{
    self, combined_capacity, sequence_capacity, sequence_delay, Channel, ChannelModel, RetryCount,
    ZInput, PROB_TOL,
};
use crate::error::{Error, Result};

/// One component of a mixture scheme.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SchemePart {
    /// Fraction of the cells programmed by this part.
    pub beta: f64,
    /// Retry strategy applied to those cells.
    pub t: RetryCount,
    /// Fraction of ones in this part's codewords (Z channel only).
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub alpha: Option<f64>,
    /// Final-attempt write probability (combined model over the BSC only).
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub q: Option<f64>,
}

impl SchemePart {
    pub fn plain(beta: f64, t: RetryCount) -> Self {
        SchemePart {
            beta,
            t,
            alpha: None,
            q: None,
        }
    }

    pub fn z(beta: f64, t: RetryCount, alpha: f64) -> Self {
        SchemePart {
            beta,
            t,
            alpha: Some(alpha),
            q: None,
        }
    }

    pub fn combined(beta: f64, t: RetryCount, q: f64) -> Self {
        SchemePart {
            beta,
            t,
            alpha: None,
            q: Some(q),
        }
    }

    fn same_strategy(&self, other: &Self) -> bool {
        self.t == other.t && self.alpha == other.alpha && self.q == other.q
    }
}

/// A mixture of retry strategies in canonical form: parts with identical
/// `(t, alpha, q)` merged, sorted by retry count.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(try_from = "RawScheme"))]
pub struct Scheme {
    parts: Vec<SchemePart>,
}

#[cfg(feature = "serde")]
#[derive(serde::Deserialize)]
struct RawScheme {
    parts: Vec<SchemePart>,
}

#[cfg(feature = "serde")]
impl TryFrom<RawScheme> for Scheme {
    type Error = Error;

    fn try_from(raw: RawScheme) -> Result<Self> {
        Scheme::new(raw.parts)
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for Scheme {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> core::result::Result<Self, D::Error> {
        let raw = RawScheme::deserialize(deserializer)?;
        Scheme::try_from(raw).map_err(serde::de::Error::custom)
    }
}

impl Scheme {
    /// Validates and canonicalizes a part list: weights must be positive and
    /// sum to one (within [`PROB_TOL`]), `alpha`/`q` must be probabilities.
    pub fn new(parts: Vec<SchemePart>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidScheme("a scheme needs at least one part"));
        }
        let mut sum = 0.0;
        for part in &parts {
            if !part.beta.is_finite() || part.beta <= 0.0 {
                return Err(Error::InvalidScheme("part weights must be positive"));
            }
            if let Some(a) = part.alpha {
                if !a.is_finite() || !(-PROB_TOL..=1.0 + PROB_TOL).contains(&a) {
                    return Err(Error::InvalidScheme("part alpha must lie in [0, 1]"));
                }
            }
            if let Some(q) = part.q {
                if !q.is_finite() || !(-PROB_TOL..=1.0 + PROB_TOL).contains(&q) {
                    return Err(Error::InvalidScheme("part q must lie in [0, 1]"));
                }
            }
            sum += part.beta;
        }
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidScheme("part weights must sum to 1"));
        }

        // Merge parts that apply the same strategy, then sort for a
        // deterministic canonical form.
        let mut merged: Vec<SchemePart> = Vec::with_capacity(parts.len());
        for part in parts {
            match merged.iter_mut().find(|m| m.same_strategy(&part)) {
                Some(m) => m.beta += part.beta,
                None => merged.push(part),
            }
        }
        merged.sort_by(|a, b| {
            a.t.cmp(&b.t)
                .then_with(|| opt_cmp(a.alpha, b.alpha))
                .then_with(|| opt_cmp(a.q, b.q))
        });
        Ok(Scheme { parts: merged })
    }

    /// The single-strategy scheme `PS_t`.
    pub fn single(t: RetryCount) -> Self {
        Scheme {
            parts: alloc::vec![SchemePart::plain(1.0, t)],
        }
    }

    /// A single Z-channel strategy with its fraction of ones.
    pub fn single_z(t: RetryCount, alpha: f64) -> Self {
        Scheme {
            parts: alloc::vec![SchemePart::z(1.0, t, alpha)],
        }
    }

    /// A single combined-model strategy with its final-attempt probability.
    pub fn single_combined(t: RetryCount, q: f64) -> Self {
        Scheme {
            parts: alloc::vec![SchemePart::combined(1.0, t, q)],
        }
    }

    /// The scheme that programs nothing.
    pub fn idle() -> Self {
        Scheme::single(RetryCount::Finite(0))
    }

    pub fn parts(&self) -> &[SchemePart] {
        &self.parts
    }

    /// Largest retry count used by any part.
    pub fn max_retry(&self) -> RetryCount {
        self.parts
            .iter()
            .map(|p| p.t)
            .max()
            .unwrap_or(RetryCount::Finite(0))
    }

    /// True when every part stays within the maximum-delay cap.
    pub fn respects_cap(&self, cap: RetryCount) -> bool {
        match cap {
            RetryCount::Unbounded => true,
            RetryCount::Finite(_) => self.parts.iter().all(|p| p.t <= cap),
        }
    }
}

fn opt_cmp(a: Option<f64>, b: Option<f64>) -> core::cmp::Ordering {
    match (a, b) {
        (None, None) => core::cmp::Ordering::Equal,
        (None, Some(_)) => core::cmp::Ordering::Less,
        (Some(_), None) => core::cmp::Ordering::Greater,
        (Some(x), Some(y)) => x.partial_cmp(&y).unwrap_or(core::cmp::Ordering::Equal),
    }
}

/// Average- and maximum-delay limits for an optimization problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayBudget {
    /// Average attempts per cell allowed.
    pub avg_delay: f64,
    /// Cap on attempts per cell; `Unbounded` means no cap.
    pub max_retries: RetryCount,
}

impl DelayBudget {
    pub fn new(avg_delay: f64, max_retries: RetryCount) -> Result<Self> {
        if !avg_delay.is_finite() || avg_delay < 0.0 {
            return Err(Error::Domain("average delay budget must be >= 0"));
        }
        Ok(DelayBudget {
            avg_delay,
            max_retries,
        })
    }
}

fn part_delay(part: &SchemePart, ch: &ChannelModel) -> Result<f64> {
    // An unprogrammed part never touches the channel.
    if part.t == RetryCount::Finite(0) && part.alpha.is_none() && part.q.is_none() {
        return Ok(0.0);
    }
    match (ch, part.alpha, part.q) {
        (ChannelModel::Fixed(Channel::Z(p)), Some(a), None) => {
            channels::z_delay(*p, part.t, ZInput::new(a)?)
        }
        (ChannelModel::Fixed(Channel::Z(_)), None, _) => Err(Error::SchemeChannelMismatch(
            "Z-channel parts need an alpha (fraction of ones)",
        )),
        // The final-attempt choice does not change how often cells are
        // programmed, so combined parts share the plain delay.
        (ChannelModel::Fixed(ch @ Channel::Bsc(_)), None, _) => channels::delay(ch, part.t),
        (ChannelModel::Fixed(ch @ Channel::Bec(_)), None, None) => channels::delay(ch, part.t),
        (ChannelModel::Sequence(seq), None, None) => sequence_delay(seq, part.t),
        (_, Some(_), _) => Err(Error::SchemeChannelMismatch(
            "alpha is only meaningful for Z-channel parts",
        )),
        (_, _, Some(_)) => Err(Error::SchemeChannelMismatch(
            "q is only meaningful for combined parts over a fixed BSC",
        )),
        (ChannelModel::Fixed(Channel::GenericDmc(_)), None, None) => Err(
            Error::UnsupportedChannel("scheme evaluation covers BSC, BEC, and Z channels"),
        ),
    }
}

fn part_capacity(part: &SchemePart, ch: &ChannelModel) -> Result<f64> {
    if part.t == RetryCount::Finite(0) && part.alpha.is_none() && part.q.is_none() {
        return Ok(0.0);
    }
    match (ch, part.alpha, part.q) {
        (ChannelModel::Fixed(Channel::Z(p)), Some(a), None) => {
            channels::z_capacity(*p, part.t, ZInput::new(a)?)
        }
        (ChannelModel::Fixed(Channel::Z(_)), None, _) => Err(Error::SchemeChannelMismatch(
            "Z-channel parts need an alpha (fraction of ones)",
        )),
        (ChannelModel::Fixed(Channel::Bsc(p)), None, Some(q)) => match part.t {
            RetryCount::Finite(t) if t >= 1 => combined_capacity(*p, t, q),
            _ => Err(Error::SchemeChannelMismatch(
                "combined parts need a finite retry count t >= 1",
            )),
        },
        (ChannelModel::Fixed(ch @ (Channel::Bsc(_) | Channel::Bec(_))), None, None) => {
            channels::capacity(ch, part.t)
        }
        (ChannelModel::Sequence(seq), None, None) => sequence_capacity(seq, part.t),
        (_, Some(_), _) => Err(Error::SchemeChannelMismatch(
            "alpha is only meaningful for Z-channel parts",
        )),
        (_, _, Some(_)) => Err(Error::SchemeChannelMismatch(
            "q is only meaningful for combined parts over a fixed BSC",
        )),
        (ChannelModel::Fixed(Channel::GenericDmc(_)), None, None) => Err(
            Error::UnsupportedChannel("scheme evaluation covers BSC, BEC, and Z channels"),
        ),
    }
}

/// Average attempts per cell of a scheme: the weight-linear combination of
/// its parts' delays.
pub fn scheme_delay(scheme: &Scheme, ch: &ChannelModel) -> Result<f64> {
    let mut total = 0.0;
    for part in scheme.parts() {
        total += part.beta * part_delay(part, ch)?;
    }
    Ok(total)
}

/// Capacity in bits per cell of a scheme: the weight-linear combination of
/// its parts' capacities.
pub fn scheme_capacity(scheme: &Scheme, ch: &ChannelModel) -> Result<f64> {
    let mut total = 0.0;
    for part in scheme.parts() {
        total += part.beta * part_capacity(part, ch)?;
    }
    Ok(total)
}

/// Capacity per programming attempt: `C / D` when the delay is positive,
/// `C` itself when the scheme programs nothing.
pub fn normalized_capacity(scheme: &Scheme, ch: &ChannelModel) -> Result<f64> {
    let c = scheme_capacity(scheme, ch)?;
    let d = scheme_delay(scheme, ch)?;
    Ok(if d > 0.0 { c / d } else { c })
}

/// Brings a scheme under an average-delay budget by programming only a
/// `budget / delay` fraction of the cells with it and leaving the rest
/// unprogrammed.
///
/// Returns the scheme unchanged when it already fits. The result satisfies
/// `delay = min(old_delay, budget)` and
/// `capacity = min(1, budget / old_delay) * old_capacity`.
pub fn truncate_to_budget(scheme: &Scheme, ch: &ChannelModel, budget: f64) -> Result<Scheme> {
    if !budget.is_finite() || budget < 0.0 {
        return Err(Error::Domain("average delay budget must be >= 0"));
    }
    let d = scheme_delay(scheme, ch)?;
    if d <= budget {
        return Ok(scheme.clone());
    }
    let beta = budget / d;
    if beta <= 0.0 {
        return Ok(Scheme::idle());
    }
    let mut parts = Vec::with_capacity(scheme.parts().len() + 1);
    parts.push(SchemePart::plain(1.0 - beta, RetryCount::Finite(0)));
    for part in scheme.parts() {
        let mut scaled = part.clone();
        scaled.beta *= beta;
        parts.push(scaled);
    }
    Scheme::new(parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{BinaryChannelKind, ChannelSequence};

    fn bec(p: f64) -> ChannelModel {
        ChannelModel::Fixed(Channel::bec(p).unwrap())
    }

    fn bsc(p: f64) -> ChannelModel {
        ChannelModel::Fixed(Channel::bsc(p).unwrap())
    }

    #[test]
    fn construction_validates_weights() {
        assert!(Scheme::new(alloc::vec![]).is_err());
        assert!(Scheme::new(alloc::vec![SchemePart::plain(0.0, RetryCount::Finite(1))]).is_err());
        assert!(Scheme::new(alloc::vec![SchemePart::plain(-0.5, RetryCount::Finite(1))]).is_err());
        assert!(Scheme::new(alloc::vec![
            SchemePart::plain(0.5, RetryCount::Finite(1)),
            SchemePart::plain(0.4, RetryCount::Finite(2)),
        ])
        .is_err());
    }

    #[test]
    fn duplicate_strategies_merge() {
        let s = Scheme::new(alloc::vec![
            SchemePart::plain(0.25, RetryCount::Finite(2)),
            SchemePart::plain(0.5, RetryCount::Finite(1)),
            SchemePart::plain(0.25, RetryCount::Finite(2)),
        ])
        .unwrap();
        assert_eq!(s.parts().len(), 2);
        assert_eq!(s.parts()[0].t, RetryCount::Finite(1));
        assert_eq!(s.parts()[1].beta, 0.5);

        // Same t but different alpha stays distinct.
        let z = Scheme::new(alloc::vec![
            SchemePart::z(0.5, RetryCount::Finite(1), 0.3),
            SchemePart::z(0.5, RetryCount::Finite(1), 0.6),
        ])
        .unwrap();
        assert_eq!(z.parts().len(), 2);
    }

    #[test]
    fn delay_and_capacity_examples() {
        assert_eq!(scheme_delay(&Scheme::idle(), &bec(0.4)).unwrap(), 0.0);
        assert_eq!(scheme_capacity(&Scheme::idle(), &bec(0.4)).unwrap(), 0.0);

        let mix = Scheme::new(alloc::vec![
            SchemePart::plain(0.5, RetryCount::Finite(0)),
            SchemePart::plain(0.5, RetryCount::Unbounded),
        ])
        .unwrap();
        assert!((scheme_delay(&mix, &bec(0.5)).unwrap() - 1.0).abs() < 1e-12);

        let mix = Scheme::new(alloc::vec![
            SchemePart::plain(0.3, RetryCount::Finite(0)),
            SchemePart::plain(0.7, RetryCount::Finite(1)),
        ])
        .unwrap();
        assert!((scheme_capacity(&mix, &bec(0.5)).unwrap() - 0.35).abs() < 1e-12);

        assert_eq!(
            scheme_capacity(&Scheme::single(RetryCount::Unbounded), &bsc(0.3)).unwrap(),
            1.0
        );
    }

    #[test]
    fn single_scheme_over_constant_sequence_matches_channel() {
        let seq =
            ChannelModel::Sequence(ChannelSequence::constant(BinaryChannelKind::Bsc, 0.3).unwrap());
        for t in [
            RetryCount::Finite(1),
            RetryCount::Finite(4),
            RetryCount::Unbounded,
        ] {
            let s = Scheme::single(t);
            let d_seq = scheme_delay(&s, &seq).unwrap();
            let d_ch = scheme_delay(&s, &bsc(0.3)).unwrap();
            assert!((d_seq - d_ch).abs() < 1e-12);
            let c_seq = scheme_capacity(&s, &seq).unwrap();
            let c_ch = scheme_capacity(&s, &bsc(0.3)).unwrap();
            assert!((c_seq - c_ch).abs() < 1e-12);
        }
    }

    #[test]
    fn normalized_capacity_examples() {
        for t in 1..6u32 {
            let s = Scheme::single(RetryCount::Finite(t));
            let nc = normalized_capacity(&s, &bec(0.35)).unwrap();
            assert!((nc - 0.65).abs() < 1e-12);
        }
        assert_eq!(
            normalized_capacity(&Scheme::idle(), &bec(0.35)).unwrap(),
            0.0
        );

        let s = Scheme::single(RetryCount::Finite(1));
        let nc = normalized_capacity(&s, &bsc(0.25)).unwrap();
        assert!((nc - 0.1887).abs() < 1e-3);
    }

    #[test]
    fn truncation_meets_the_budget() {
        // Unbounded retries over BEC(0.2): delay 1.25, so a budget of 1
        // keeps a 0.8 fraction programmed and the capacity drops to 0.8.
        let s = Scheme::single(RetryCount::Unbounded);
        let ch = bec(0.2);
        let truncated = truncate_to_budget(&s, &ch, 1.0).unwrap();
        assert!((scheme_delay(&truncated, &ch).unwrap() - 1.0).abs() < 1e-12);
        assert!((scheme_capacity(&truncated, &ch).unwrap() - 0.8).abs() < 1e-12);

        // Slack budget: unchanged.
        let same = truncate_to_budget(&s, &ch, 2.0).unwrap();
        assert_eq!(same, s);

        // Zero budget: nothing is programmed.
        let idle = truncate_to_budget(&s, &ch, 0.0).unwrap();
        assert_eq!(idle, Scheme::idle());

        // The idle scheme passes through untouched.
        assert_eq!(
            truncate_to_budget(&Scheme::idle(), &ch, 0.0).unwrap(),
            Scheme::idle()
        );
    }

    #[test]
    fn mismatched_part_parameters_are_rejected() {
        let z_missing = Scheme::single(RetryCount::Finite(1));
        let z_ch = ChannelModel::Fixed(Channel::z(0.3).unwrap());
        assert!(matches!(
            scheme_capacity(&z_missing, &z_ch),
            Err(Error::SchemeChannelMismatch(_))
        ));

        let stray_alpha = Scheme::single_z(RetryCount::Finite(1), 0.4);
        assert!(scheme_capacity(&stray_alpha, &bsc(0.2)).is_err());

        let q_on_bec = Scheme::single_combined(RetryCount::Finite(2), 0.5);
        assert!(scheme_capacity(&q_on_bec, &bec(0.2)).is_err());
        assert!(scheme_capacity(&q_on_bec, &bsc(0.2)).is_ok());

        let q_unbounded = Scheme::single_combined(RetryCount::Unbounded, 0.5);
        assert!(scheme_capacity(&q_unbounded, &bsc(0.2)).is_err());
    }

    #[test]
    fn divergent_part_delay_propagates() {
        let s = Scheme::single(RetryCount::Unbounded);
        assert_eq!(scheme_delay(&s, &bec(1.0)), Err(Error::DivergentDelay));
    }

    #[cfg(feature = "serde")]
    #[test]
    fn scheme_json_shape() {
        let s = Scheme::new(alloc::vec![
            SchemePart::plain(0.25, RetryCount::Unbounded),
            SchemePart::z(0.75, RetryCount::Finite(2), 0.5),
        ])
        .unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(
            json,
            r#"{"parts":[{"beta":0.75,"t":2,"alpha":0.5},{"beta":0.25,"t":-1}]}"#
        );
        let back: Scheme = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);

        // Unknown weights are rejected on the way in.
        let bad = r#"{"parts":[{"beta":0.9,"t":1}]}"#;
        assert!(serde_json::from_str::<Scheme>(bad).is_err());
    }
}
