//! Channel models and closed-form capacity/delay primitives for a single
//! retry strategy.
//!
//! Programming a cell with up to `t` verified attempts over a binary channel
//! behaves like one use of a degraded channel whose failure probability is
//! the product of the per-attempt failure probabilities (`p^t` for a fixed
//! channel). The functions here evaluate the capacity and the expected
//! number of attempts of that degraded channel for:
//!
//! * the BSC and the BEC ([`capacity`], [`delay`]),
//! * the Z channel at a fixed fraction of one-valued cells ([`z_capacity`],
//!   [`z_delay`]); ones are written once and never fail, so the delay
//!   depends on the codeword composition,
//! * attempt-indexed error probabilities ([`sequence_capacity`],
//!   [`sequence_delay`], [`sequence_stats`]),
//! * the combined model that, on the final attempt, writes the value with
//!   probability `q` and an explicit `'?'` failure marker otherwise
//!   ([`combined_capacity`]).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::oracle::DmcMatrix;

/// Absolute tolerance for probability comparisons and validation slack.
pub const PROB_TOL: f64 = 1e-12;

#[inline]
pub(crate) fn log2(x: f64) -> f64 {
    libm::log2(x)
}

/// Integer power by repeated squaring. Used for every `p^t` in the crate so
/// that closed forms, solvers, and tests agree bit-for-bit.
pub(crate) fn powu(base: f64, mut exp: u32) -> f64 {
    let mut acc = 1.0;
    let mut b = base;
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= b;
        }
        b *= b;
        exp >>= 1;
    }
    acc
}

/// Binary entropy in bits, extended by continuity with `h(0) = h(1) = 0`.
/// Input must already be a valid probability.
pub(crate) fn h(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -(x * log2(x)) - (1.0 - x) * log2(1.0 - x)
}

#[inline]
pub(crate) fn clamp_unit(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Validates that `x` is a probability (within [`PROB_TOL`] slack) and
/// returns it clamped to `[0, 1]`.
pub(crate) fn check_prob(x: f64, what: &'static str) -> Result<f64> {
    if !x.is_finite() || !(-PROB_TOL..=1.0 + PROB_TOL).contains(&x) {
        return Err(Error::Domain(what));
    }
    Ok(clamp_unit(x))
}

fn check_bsc_prob(p: f64) -> Result<f64> {
    let p = check_prob(p, "BSC crossover probability must lie in [0, 1]")?;
    if p > 0.5 + PROB_TOL {
        return Err(Error::Domain(
            "BSC crossover probability must lie in [0, 0.5]",
        ));
    }
    Ok(p.min(0.5))
}

/// The binary entropy function `h(x) = -x log2 x - (1-x) log2 (1-x)`,
/// with `h(0) = h(1) = 0` by continuity.
pub fn binary_entropy(x: f64) -> Result<f64> {
    let x = check_prob(x, "binary entropy argument must lie in [0, 1]")?;
    Ok(h(x))
}

/// Number of programming attempts allotted to a cell.
///
/// `Finite(t)` programs until success or `t` attempts; the `t`-th attempt is
/// not verified, so the cell may be left erroneous. `Finite(0)` leaves the
/// cell unprogrammed. `Unbounded` reprograms until the cell stores the
/// correct value; it is written as `-1` in flag and JSON form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RetryCount {
    Finite(u32),
    Unbounded,
}

impl RetryCount {
    /// Parses the signed convention: `-1` means unbounded, `t >= 0` is a cap.
    pub fn from_signed(value: i64) -> Result<Self> {
        if value == -1 {
            Ok(RetryCount::Unbounded)
        } else if (0..=i64::from(u32::MAX)).contains(&value) {
            Ok(RetryCount::Finite(value as u32))
        } else {
            Err(Error::Domain(
                "retry count must be -1 or a non-negative integer",
            ))
        }
    }

    /// Signed convention used by flags and JSON: unbounded encodes as `-1`.
    pub fn as_signed(self) -> i64 {
        match self {
            RetryCount::Finite(t) => i64::from(t),
            RetryCount::Unbounded => -1,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, RetryCount::Unbounded)
    }

    pub fn finite_value(self) -> Option<u32> {
        match self {
            RetryCount::Finite(t) => Some(t),
            RetryCount::Unbounded => None,
        }
    }
}

// Unbounded retries allow the largest maximum delay, so they order last.
impl Ord for RetryCount {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        use RetryCount::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.cmp(b),
            (Finite(_), Unbounded) => core::cmp::Ordering::Less,
            (Unbounded, Finite(_)) => core::cmp::Ordering::Greater,
            (Unbounded, Unbounded) => core::cmp::Ordering::Equal,
        }
    }
}

impl PartialOrd for RetryCount {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl core::fmt::Display for RetryCount {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.as_signed())
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for RetryCount {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> core::result::Result<S::Ok, S::Error> {
        serializer.serialize_i64(self.as_signed())
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for RetryCount {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> core::result::Result<Self, D::Error> {
        let v = i64::deserialize(deserializer)?;
        RetryCount::from_signed(v).map_err(serde::de::Error::custom)
    }
}

/// Fraction of cells programmed with value one over the Z channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZInput(f64);

impl ZInput {
    pub fn new(alpha: f64) -> Result<Self> {
        Ok(ZInput(check_prob(
            alpha,
            "fraction of ones must lie in [0, 1]",
        )?))
    }

    pub fn alpha(self) -> f64 {
        self.0
    }
}

/// A per-attempt programming noise model.
#[derive(Debug, Clone, PartialEq)]
pub enum Channel {
    /// Binary symmetric channel: the written bit flips with probability `p`,
    /// `0 <= p <= 0.5`.
    Bsc(f64),
    /// Binary erasure channel: the written bit is erased with probability
    /// `p`, `0 <= p <= 1`.
    Bec(f64),
    /// Z channel: only zero-valued cells can fail, flipping to one with
    /// probability `p`, `0 <= p <= 1`.
    Z(f64),
    /// An arbitrary discrete memoryless channel given by its row-stochastic
    /// transition matrix.
    GenericDmc(DmcMatrix),
}

impl Channel {
    pub fn bsc(p: f64) -> Result<Self> {
        Ok(Channel::Bsc(check_bsc_prob(p)?))
    }

    pub fn bec(p: f64) -> Result<Self> {
        Ok(Channel::Bec(check_prob(
            p,
            "BEC erasure probability must lie in [0, 1]",
        )?))
    }

    pub fn z(p: f64) -> Result<Self> {
        Ok(Channel::Z(check_prob(
            p,
            "Z-channel error probability must lie in [0, 1]",
        )?))
    }

    /// The scalar error probability, if the channel has one.
    pub fn p(&self) -> Option<f64> {
        match self {
            Channel::Bsc(p) | Channel::Bec(p) | Channel::Z(p) => Some(*p),
            Channel::GenericDmc(_) => None,
        }
    }

    fn checked_p(&self) -> Result<f64> {
        match self {
            Channel::Bsc(p) => check_bsc_prob(*p),
            Channel::Bec(p) => check_prob(*p, "BEC erasure probability must lie in [0, 1]"),
            Channel::Z(p) => check_prob(*p, "Z-channel error probability must lie in [0, 1]"),
            Channel::GenericDmc(_) => Err(Error::UnsupportedChannel(
                "a generic DMC has no scalar error probability",
            )),
        }
    }

    /// Transition matrix of the channel seen by a cell programmed with the
    /// strategy `t`: the per-attempt failure probability collapses to `p^t`
    /// (`0` for unbounded retries). Requires `t >= 1` or unbounded; an
    /// unprogrammed cell has no meaningful transition matrix.
    pub fn transition_matrix(&self, t: RetryCount) -> Result<DmcMatrix> {
        let b = match t {
            RetryCount::Finite(0) => {
                return Err(Error::Domain(
                    "transition matrix requires at least one attempt (t >= 1 or t = -1)",
                ))
            }
            RetryCount::Finite(t) => powu(self.checked_p()?, t),
            RetryCount::Unbounded => {
                self.checked_p()?;
                0.0
            }
        };
        match self {
            Channel::Bsc(_) => DmcMatrix::from_rows(vec![vec![1.0 - b, b], vec![b, 1.0 - b]]),
            Channel::Bec(_) => {
                DmcMatrix::from_rows(vec![vec![1.0 - b, 0.0, b], vec![0.0, 1.0 - b, b]])
            }
            Channel::Z(_) => DmcMatrix::from_rows(vec![vec![1.0 - b, b], vec![0.0, 1.0]]),
            Channel::GenericDmc(_) => Err(Error::UnsupportedChannel(
                "transition matrices of retried generic DMCs are not defined here",
            )),
        }
    }
}

/// Capacity in bits per cell of the channel seen by a cell programmed with
/// strategy `t` over a BSC or BEC.
///
/// `1 - h(p^t)` for the BSC and `1 - p^t` for the BEC when `t >= 1`; `1` for
/// unbounded retries and `0` for `t = 0`.
pub fn capacity(ch: &Channel, t: RetryCount) -> Result<f64> {
    let p =
        match ch {
            Channel::Bsc(_) | Channel::Bec(_) => ch.checked_p()?,
            Channel::Z(_) | Channel::GenericDmc(_) => return Err(Error::UnsupportedChannel(
                "capacity closed form covers BSC and BEC only; use z_capacity or blahut_arimoto",
            )),
        };
    Ok(match t {
        RetryCount::Finite(0) => 0.0,
        RetryCount::Unbounded => 1.0,
        RetryCount::Finite(t) => {
            let b = powu(p, t);
            match ch {
                Channel::Bsc(_) => clamp_unit(1.0 - h(b)),
                Channel::Bec(_) => clamp_unit(1.0 - b),
                _ => unreachable!(),
            }
        }
    })
}

/// Expected number of programming attempts per cell for strategy `t` over a
/// BSC or BEC: `(1 - p^t) / (1 - p)` for finite `t` and `1 / (1 - p)` for
/// unbounded retries.
///
/// `p = 1` with finite `t` yields `t` attempts (the limit value); `p = 1`
/// with unbounded retries diverges.
pub fn delay(ch: &Channel, t: RetryCount) -> Result<f64> {
    let p = match ch {
        Channel::Bsc(_) | Channel::Bec(_) => ch.checked_p()?,
        Channel::Z(_) | Channel::GenericDmc(_) => {
            return Err(Error::UnsupportedChannel(
                "delay closed form covers BSC and BEC only; use z_delay",
            ))
        }
    };
    match t {
        RetryCount::Finite(0) => Ok(0.0),
        RetryCount::Finite(t) => {
            if p >= 1.0 {
                Ok(f64::from(t))
            } else {
                Ok((1.0 - powu(p, t)) / (1.0 - p))
            }
        }
        RetryCount::Unbounded => {
            if p >= 1.0 {
                Err(Error::DivergentDelay)
            } else {
                Ok(1.0 / (1.0 - p))
            }
        }
    }
}

/// Capacity in bits per cell over the Z channel when a fraction `alpha` of
/// the cells holds value one: `h((1-a)(1-p^t)) - (1-a) h(p^t)` for finite
/// `t`, and `h(a)` for unbounded retries.
pub fn z_capacity(p: f64, t: RetryCount, input: ZInput) -> Result<f64> {
    let p = check_prob(p, "Z-channel error probability must lie in [0, 1]")?;
    let a = input.alpha();
    Ok(match t {
        RetryCount::Unbounded => h(a),
        RetryCount::Finite(t) => {
            let b = powu(p, t);
            clamp_unit(h((1.0 - a) * (1.0 - b)) - (1.0 - a) * h(b))
        }
    })
}

/// Expected attempts per cell over the Z channel: one-valued cells are
/// written once and never fail, zero-valued cells retry like a BSC.
///
/// `(1-a)(1-p^t)/(1-p) + a` for `t >= 1`; `(1-a)/(1-p) + a` unbounded;
/// `0` for `t = 0`. Diverges for unbounded retries at `p = 1` unless
/// `a = 1`.
pub fn z_delay(p: f64, t: RetryCount, input: ZInput) -> Result<f64> {
    let p = check_prob(p, "Z-channel error probability must lie in [0, 1]")?;
    let a = input.alpha();
    match t {
        RetryCount::Finite(0) => Ok(0.0),
        RetryCount::Finite(t) => {
            if p >= 1.0 {
                Ok((1.0 - a) * f64::from(t) + a)
            } else {
                Ok((1.0 - a) * (1.0 - powu(p, t)) / (1.0 - p) + a)
            }
        }
        RetryCount::Unbounded => {
            if p >= 1.0 {
                if a >= 1.0 {
                    Ok(1.0)
                } else {
                    Err(Error::DivergentDelay)
                }
            } else {
                Ok((1.0 - a) / (1.0 - p) + a)
            }
        }
    }
}

/// Capacity in bits per cell of the combined strategy over a BSC: up to `t`
/// attempts, where the final attempt writes the value unverified with
/// probability `q` and an explicit `'?'` marker with probability `1 - q`.
///
/// With `b = p^(t-1)` this is `(1-b+bq) * (1 - h(bpq / (1-b+bq)))`. The
/// endpoints are exact: `q = 0` gives `1 - p^(t-1)` and `q = 1` gives
/// `1 - h(p^t)`.
pub fn combined_capacity(p: f64, t: u32, q: f64) -> Result<f64> {
    let p = check_bsc_prob(p)?;
    if p <= 0.0 {
        return Err(Error::Domain("combined model requires p > 0"));
    }
    if t < 1 {
        return Err(Error::Domain("combined model requires t >= 1"));
    }
    let q = check_prob(q, "final-attempt write probability q must lie in [0, 1]")?;
    if q <= 0.0 {
        return Ok(clamp_unit(1.0 - powu(p, t - 1)));
    }
    if q >= 1.0 {
        return Ok(clamp_unit(1.0 - h(powu(p, t))));
    }
    let b = powu(p, t - 1);
    let kept = 1.0 - b + b * q;
    if kept <= 0.0 {
        return Ok(0.0);
    }
    Ok(clamp_unit(kept * (1.0 - h(b * p * q / kept))))
}

/// Which binary channel a sequence of error probabilities models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryChannelKind {
    Bsc,
    Bec,
}

/// Attempt-indexed error probabilities: an explicit prefix followed by a
/// constant tail. Attempt `i` (1-based) fails with probability `prefix[i-1]`
/// while the prefix lasts and with the tail probability afterwards.
///
/// BSC sequences require every entry in `[0, 0.5]`; BEC sequences allow
/// `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSequence {
    kind: BinaryChannelKind,
    prefix: Vec<f64>,
    tail: f64,
}

impl ChannelSequence {
    pub fn new(kind: BinaryChannelKind, prefix: Vec<f64>, tail: f64) -> Result<Self> {
        let check = |x: f64| -> Result<f64> {
            match kind {
                BinaryChannelKind::Bsc => check_bsc_prob(x),
                BinaryChannelKind::Bec => {
                    check_prob(x, "BEC erasure probability must lie in [0, 1]")
                }
            }
        };
        let prefix = prefix
            .into_iter()
            .map(check)
            .collect::<Result<Vec<f64>>>()?;
        let tail = check(tail)?;
        Ok(ChannelSequence { kind, prefix, tail })
    }

    /// A sequence whose every attempt fails with the same probability.
    pub fn constant(kind: BinaryChannelKind, p: f64) -> Result<Self> {
        ChannelSequence::new(kind, Vec::new(), p)
    }

    pub fn kind(&self) -> BinaryChannelKind {
        self.kind
    }

    pub fn prefix(&self) -> &[f64] {
        &self.prefix
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// Failure probability of the `attempt`-th programming attempt (1-based).
    pub fn attempt_prob(&self, attempt: u64) -> f64 {
        debug_assert!(attempt >= 1);
        let idx = (attempt - 1) as usize;
        if idx < self.prefix.len() {
            self.prefix[idx]
        } else {
            self.tail
        }
    }

    /// True when the error probabilities never increase from one attempt to
    /// the next.
    pub fn is_nonincreasing(&self) -> bool {
        let mut prev = 1.0;
        for &p in &self.prefix {
            if p > prev + PROB_TOL {
                return false;
            }
            prev = p;
        }
        self.tail <= prev + PROB_TOL
    }
}

/// Cumulative statistics of a probability sequence under strategy `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceStats {
    /// Probability that the first `t` attempts all fail (`0` for unbounded
    /// retries, `1` for `t = 0`).
    pub failure_prob: f64,
    /// Sum of the cumulative failure probabilities over attempts
    /// `1 ..= t-1`; the expected delay of strategy `t >= 1` is
    /// `1 + delay_excess`.
    pub delay_excess: f64,
}

/// Evaluates the cumulative failure probability and the delay excess of a
/// probability sequence under strategy `t`. Unbounded retries use the
/// geometric closed form on the constant tail, which makes the series value
/// exact; it diverges only when the tail is 1 and positive mass reaches it.
pub fn sequence_stats(seq: &ChannelSequence, t: RetryCount) -> Result<SequenceStats> {
    let len = seq.prefix.len() as u64;
    let c = seq.tail;
    match t {
        RetryCount::Finite(0) => Ok(SequenceStats {
            failure_prob: 1.0,
            delay_excess: 0.0,
        }),
        RetryCount::Finite(t) => {
            let t = u64::from(t);
            let mut q = 1.0;
            let mut y = 0.0;
            let explicit = t.min(len);
            for i in 1..=explicit {
                q *= seq.prefix[(i - 1) as usize];
                if i < t {
                    y += q;
                }
            }
            if t > len {
                // Tail attempts: q picks up (t - len) tail factors, y picks up
                // the geometric partial sum of the first (t - 1 - len) of them.
                let q_prefix = q;
                q = q_prefix * powu(c, (t - len) as u32);
                let m = (t - 1).saturating_sub(len) as u32;
                y += q_prefix * geometric_partial_sum(c, m);
            }
            Ok(SequenceStats {
                failure_prob: q,
                delay_excess: y,
            })
        }
        RetryCount::Unbounded => {
            let mut q = 1.0;
            let mut y = 0.0;
            for i in 1..=len {
                q *= seq.prefix[(i - 1) as usize];
                y += q;
            }
            if c >= 1.0 {
                if q > 0.0 {
                    return Err(Error::DivergentSeries);
                }
            } else {
                y += q * c / (1.0 - c);
            }
            Ok(SequenceStats {
                failure_prob: 0.0,
                delay_excess: y,
            })
        }
    }
}

/// `c + c^2 + ... + c^m`.
fn geometric_partial_sum(c: f64, m: u32) -> f64 {
    if m == 0 {
        0.0
    } else if c >= 1.0 {
        f64::from(m)
    } else {
        c * (1.0 - powu(c, m)) / (1.0 - c)
    }
}

/// Capacity in bits per cell of strategy `t` over a probability sequence:
/// `1 - h(Q_t)` for BSC kind, `1 - Q_t` for BEC kind, where `Q_t` is the
/// probability that all `t` attempts fail.
pub fn sequence_capacity(seq: &ChannelSequence, t: RetryCount) -> Result<f64> {
    match t {
        RetryCount::Finite(0) => Ok(0.0),
        RetryCount::Unbounded => Ok(1.0),
        RetryCount::Finite(_) => {
            let stats = sequence_stats(seq, t)?;
            Ok(match seq.kind {
                BinaryChannelKind::Bsc => clamp_unit(1.0 - h(stats.failure_prob)),
                BinaryChannelKind::Bec => clamp_unit(1.0 - stats.failure_prob),
            })
        }
    }
}

/// Expected attempts per cell of strategy `t` over a probability sequence:
/// `1 + Y_t` for `t >= 1` (and for unbounded retries with the convergent
/// series), `0` for `t = 0`.
pub fn sequence_delay(seq: &ChannelSequence, t: RetryCount) -> Result<f64> {
    match t {
        RetryCount::Finite(0) => Ok(0.0),
        _ => Ok(1.0 + sequence_stats(seq, t)?.delay_excess),
    }
}

/// Either a fixed channel for every attempt or an attempt-indexed sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelModel {
    Fixed(Channel),
    Sequence(ChannelSequence),
}

impl From<Channel> for ChannelModel {
    fn from(ch: Channel) -> Self {
        ChannelModel::Fixed(ch)
    }
}

impl From<ChannelSequence> for ChannelModel {
    fn from(seq: ChannelSequence) -> Self {
        ChannelModel::Sequence(seq)
    }
}
