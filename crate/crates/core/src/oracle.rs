//! Independent verification machinery.
//!
//! Nothing here shares a code path with the closed forms it checks:
//!
//! * [`blahut_arimoto`] computes the capacity of an arbitrary discrete
//!   memoryless channel iteratively, with a certified duality-gap stopping
//!   rule,
//! * [`mutual_information`] evaluates `I(X;Y)` at a fixed input
//!   distribution,
//! * [`simulate`] runs the programming process cell by cell with a
//!   counter-based RNG keyed on `(seed, cell index)`, so results are
//!   bit-identical no matter how the cells are sharded across workers,
//! * [`grid_cross_check`] replays a solver against an exhaustive grid of
//!   truncated single-strategy (and two-point mixture) schemes and fails
//!   loudly on any grid point that beats it.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::channels::{
    BinaryChannelKind, Channel, ChannelModel, ChannelSequence, RetryCount, PROB_TOL,
};
use crate::error::{Error, Result};
use crate::optimizer::{solve_f1, solve_f1_z, solve_f2, solve_f3};
use crate::schemes::{scheme_delay, truncate_to_budget, DelayBudget, Scheme, SchemePart};
use crate::{channels, schemes};

/// Row-stochastic transition matrix of a discrete memoryless channel.
/// Rows index inputs, columns outputs.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DmcMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl DmcMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(Error::InvalidMatrix("shape does not match the entry count"));
        }
        for row in 0..rows {
            let mut sum = 0.0;
            for col in 0..cols {
                let v = entries[row * cols + col];
                if !v.is_finite() || v < -PROB_TOL {
                    return Err(Error::InvalidMatrix("entries must be non-negative"));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > PROB_TOL {
                return Err(Error::InvalidMatrix("rows must sum to 1"));
            }
        }
        Ok(DmcMatrix {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidMatrix("rows must all have the same length"));
        }
        let entries = rows.into_iter().flatten().collect();
        DmcMatrix::new(n, k, entries)
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        DmcMatrix::new(n, n, entries)
    }

    pub fn input_count(&self) -> usize {
        self.rows
    }

    pub fn output_count(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.entries[row * self.cols..(row + 1) * self.cols]
    }
}

/// Result of a converged Blahut-Arimoto run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BaResult {
    /// Capacity in bits per channel use, certified within the duality gap.
    pub capacity: f64,
    /// Input distribution achieving it.
    pub input_dist: Vec<f64>,
    pub iterations: u32,
    /// Final `max_x D_x - I(r)` duality gap.
    pub gap: f64,
}

/// Capacity of an arbitrary DMC by the Blahut-Arimoto iteration, stopping
/// when the max-min duality gap drops below `tol`. The reported capacity is
/// the mutual information of the returned input distribution, so it is
/// achieved, and it is within `tol` of the true capacity.
pub fn blahut_arimoto(m: &DmcMatrix, tol: f64, max_iter: u32) -> Result<BaResult> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::Domain("tolerance must be positive"));
    }
    if max_iter == 0 {
        return Err(Error::Domain("max_iter must be at least 1"));
    }
    let n = m.input_count();
    let k = m.output_count();
    let mut r = vec![1.0 / n as f64; n];
    let mut d = vec![0.0; n];
    let mut q = vec![0.0; k];
    let mut gap = f64::INFINITY;
    for iter in 1..=max_iter {
        q.iter_mut().for_each(|v| *v = 0.0);
        for (x, &rx) in r.iter().enumerate() {
            if rx > 0.0 {
                for (j, qj) in q.iter_mut().enumerate() {
                    *qj += rx * m.get(x, j);
                }
            }
        }
        let mut i_lower = 0.0;
        let mut i_upper = f64::NEG_INFINITY;
        for (x, slot) in d.iter_mut().enumerate() {
            let mut dx = 0.0;
            for (j, &qj) in q.iter().enumerate() {
                let pxy = m.get(x, j);
                if pxy > 0.0 && qj > 0.0 {
                    dx += pxy * channels::log2(pxy / qj);
                }
            }
            *slot = dx;
            i_lower += r[x] * dx;
            if dx > i_upper {
                i_upper = dx;
            }
        }
        gap = i_upper - i_lower;
        if gap <= tol {
            return Ok(BaResult {
                capacity: i_lower.max(0.0),
                input_dist: r,
                iterations: iter,
                gap,
            });
        }
        let mut norm = 0.0;
        for (rx, &dx) in r.iter_mut().zip(&d) {
            *rx *= libm::exp2(dx);
            norm += *rx;
        }
        for rx in r.iter_mut() {
            *rx /= norm;
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        gap,
    })
}

/// Mutual information `I(X;Y)` in bits of a DMC at a fixed input
/// distribution.
pub fn mutual_information(m: &DmcMatrix, input_dist: &[f64]) -> Result<f64> {
    if input_dist.len() != m.input_count() {
        return Err(Error::Domain(
            "input distribution length must match the matrix rows",
        ));
    }
    let mut sum = 0.0;
    for &r in input_dist {
        if !r.is_finite() || r < -PROB_TOL {
            return Err(Error::Domain(
                "input distribution entries must be non-negative",
            ));
        }
        sum += r;
    }
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::Domain("input distribution must sum to 1"));
    }
    let k = m.output_count();
    let mut q = vec![0.0; k];
    for (x, &rx) in input_dist.iter().enumerate() {
        if rx > 0.0 {
            for (j, qj) in q.iter_mut().enumerate() {
                *qj += rx * m.get(x, j);
            }
        }
    }
    let mut info = 0.0;
    for (x, &rx) in input_dist.iter().enumerate() {
        if rx <= 0.0 {
            continue;
        }
        for (j, &qj) in q.iter().enumerate() {
            let pxy = m.get(x, j);
            if pxy > 0.0 && qj > 0.0 {
                info += rx * pxy * channels::log2(pxy / qj);
            }
        }
    }
    Ok(info.max(0.0))
}

// ---------------------------------------------------------------------------
// Monte Carlo simulation
// ---------------------------------------------------------------------------

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Splitmix-style stream keyed on `(seed, cell)`. Every cell draws from its
/// own stream, so totals do not depend on visit order or sharding.
struct CellRng {
    state: u64,
}

impl CellRng {
    fn new(seed: u64, cell: u64) -> Self {
        CellRng {
            state: mix64(seed ^ mix64(cell.wrapping_add(GOLDEN_GAMMA))),
        }
    }

    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }
}

/// Integer tallies of a simulation shard. Merging shards is exact, so any
/// partition of the cell range yields bit-identical reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SimTotals {
    pub cells: u64,
    pub attempts: u64,
    pub attempts_sq: u128,
    pub errors: u64,
    pub erasures: u64,
    pub qmarks: u64,
}

impl SimTotals {
    pub fn merge(self, other: SimTotals) -> SimTotals {
        SimTotals {
            cells: self.cells + other.cells,
            attempts: self.attempts + other.attempts,
            attempts_sq: self.attempts_sq + other.attempts_sq,
            errors: self.errors + other.errors,
            erasures: self.erasures + other.erasures,
            qmarks: self.qmarks + other.qmarks,
        }
    }

    /// Finalizes the tallies into rates with 95% normal-approximation
    /// confidence half-widths.
    pub fn into_report(self, seed: u64) -> SimReport {
        let n = self.cells.max(1) as f64;
        let mean_attempts = self.attempts as f64 / n;
        let mean_attempts_ci95 = if self.cells > 1 {
            let s1 = self.attempts as f64;
            let s2 = self.attempts_sq as f64;
            let var = ((s2 - s1 * s1 / n) / (n - 1.0)).max(0.0);
            1.96 * libm::sqrt(var / n)
        } else {
            0.0
        };
        let rate = |count: u64| count as f64 / n;
        let rate_ci = |r: f64| 1.96 * libm::sqrt(r * (1.0 - r) / n);
        let err_rate = rate(self.errors);
        let erase_rate = rate(self.erasures);
        let qmark_rate = rate(self.qmarks);
        SimReport {
            n_cells: self.cells,
            seed,
            mean_attempts,
            mean_attempts_ci95,
            err_rate,
            err_rate_ci95: rate_ci(err_rate),
            erase_rate,
            erase_rate_ci95: rate_ci(erase_rate),
            qmark_rate,
            qmark_rate_ci95: rate_ci(qmark_rate),
        }
    }
}

/// Monte Carlo estimates for one `(channel, scheme, n_cells, seed)` run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimReport {
    pub n_cells: u64,
    pub seed: u64,
    /// Observed attempts per cell and its 95% confidence half-width.
    pub mean_attempts: f64,
    pub mean_attempts_ci95: f64,
    /// Fraction of cells left with a wrong value.
    pub err_rate: f64,
    pub err_rate_ci95: f64,
    /// Fraction of cells left erased (BEC only).
    pub erase_rate: f64,
    pub erase_rate_ci95: f64,
    /// Fraction of cells programmed with the failure marker (combined model).
    pub qmark_rate: f64,
    pub qmark_rate_ci95: f64,
}

enum PartPlan {
    Plain { t: RetryCount },
    ZCells { t: RetryCount, alpha: f64 },
    Combined { t: u32, q: f64 },
}

enum FailureKind {
    Error,
    Erasure,
}

struct SimPlan {
    /// Cumulative end index per part, aligned with `plans`.
    ends: Vec<u64>,
    plans: Vec<PartPlan>,
    fail_kind: FailureKind,
}

fn build_plan(ch: &ChannelModel, scheme: &Scheme, n_cells: u64) -> Result<SimPlan> {
    // Validates every part against the channel and rejects divergent runs.
    scheme_delay(scheme, ch)?;

    let fail_kind = match ch {
        ChannelModel::Fixed(Channel::Bec(_)) => FailureKind::Erasure,
        ChannelModel::Sequence(seq) if seq.kind() == BinaryChannelKind::Bec => FailureKind::Erasure,
        _ => FailureKind::Error,
    };

    let parts = scheme.parts();
    let mut plans = Vec::with_capacity(parts.len());
    for part in parts {
        plans.push(match (part.alpha, part.q) {
            (Some(a), None) => PartPlan::ZCells {
                t: part.t,
                alpha: a,
            },
            (None, Some(q)) => match part.t {
                RetryCount::Finite(t) if t >= 1 => PartPlan::Combined { t, q },
                _ => {
                    return Err(Error::SchemeChannelMismatch(
                        "combined parts need a finite retry count t >= 1",
                    ))
                }
            },
            (None, None) => PartPlan::Plain { t: part.t },
            (Some(_), Some(_)) => {
                return Err(Error::SchemeChannelMismatch(
                    "a part cannot carry both alpha and q",
                ))
            }
        });
    }

    // Largest-remainder apportionment of cells to parts.
    let mut counts: Vec<u64> = Vec::with_capacity(parts.len());
    let mut fractions: Vec<(f64, usize)> = Vec::with_capacity(parts.len());
    let mut assigned: u64 = 0;
    for (i, part) in parts.iter().enumerate() {
        let exact = part.beta * n_cells as f64;
        let floor = (libm::floor(exact) as u64).min(n_cells);
        counts.push(floor);
        fractions.push((exact - floor as f64, i));
        assigned += floor;
    }
    let mut remaining = n_cells.saturating_sub(assigned);
    fractions.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    for (_, idx) in fractions {
        if remaining == 0 {
            break;
        }
        counts[idx] += 1;
        remaining -= 1;
    }
    if remaining > 0 {
        *counts.last_mut().expect("scheme has parts") += remaining;
    }
    let mut ends = Vec::with_capacity(counts.len());
    let mut acc = 0u64;
    for c in counts {
        acc += c;
        ends.push(acc);
    }
    if let Some(last) = ends.last_mut() {
        *last = n_cells;
    }
    Ok(SimPlan {
        ends,
        plans,
        fail_kind,
    })
}

fn attempt_fail_prob(ch: &ChannelModel, attempt: u64) -> f64 {
    match ch {
        ChannelModel::Fixed(Channel::Bsc(p) | Channel::Bec(p) | Channel::Z(p)) => *p,
        ChannelModel::Fixed(Channel::GenericDmc(_)) => unreachable!("rejected by build_plan"),
        ChannelModel::Sequence(seq) => seq.attempt_prob(attempt),
    }
}

enum Outcome {
    Stored,
    Failed,
    Marked,
}

/// Programs one cell with plain retries; returns attempts made and outcome.
fn run_retries(rng: &mut CellRng, ch: &ChannelModel, t: RetryCount) -> (u64, Outcome) {
    match t {
        RetryCount::Finite(0) => (0, Outcome::Failed),
        RetryCount::Finite(t) => {
            let t = u64::from(t);
            for i in 1..=t {
                if rng.next_f64() >= attempt_fail_prob(ch, i) {
                    return (i, Outcome::Stored);
                }
            }
            (t, Outcome::Failed)
        }
        RetryCount::Unbounded => {
            let mut i = 1u64;
            loop {
                if rng.next_f64() >= attempt_fail_prob(ch, i) {
                    return (i, Outcome::Stored);
                }
                i += 1;
            }
        }
    }
}

fn run_cell(rng: &mut CellRng, ch: &ChannelModel, plan: &PartPlan) -> (u64, Outcome) {
    match plan {
        PartPlan::Plain { t } => run_retries(rng, ch, *t),
        PartPlan::ZCells { t, alpha } => {
            // One-valued cells are written once and cannot fail; zero-valued
            // cells retry like a BSC and flip to one if every attempt fails.
            let is_one = rng.next_f64() < *alpha;
            match (is_one, t) {
                (_, RetryCount::Finite(0)) => (0, Outcome::Failed),
                (true, _) => (1, Outcome::Stored),
                (false, _) => run_retries(rng, ch, *t),
            }
        }
        PartPlan::Combined { t, q } => {
            let t = u64::from(*t);
            for i in 1..t {
                if rng.next_f64() >= attempt_fail_prob(ch, i) {
                    return (i, Outcome::Stored);
                }
            }
            // Final attempt: write the value unverified or mark the cell.
            if rng.next_f64() < *q {
                if rng.next_f64() < attempt_fail_prob(ch, t) {
                    (t, Outcome::Failed)
                } else {
                    (t, Outcome::Stored)
                }
            } else {
                (t, Outcome::Marked)
            }
        }
    }
}

/// Simulates the cells in `[first, last)` of an `n_cells`-cell run. Shards
/// merge exactly: simulating `[0, n)` equals merging any partition of it.
pub fn simulate_slice(
    ch: &ChannelModel,
    scheme: &Scheme,
    n_cells: u64,
    seed: u64,
    first: u64,
    last: u64,
) -> Result<SimTotals> {
    if n_cells == 0 {
        return Err(Error::Domain("n_cells must be at least 1"));
    }
    if first > last || last > n_cells {
        return Err(Error::Domain(
            "cell range must satisfy first <= last <= n_cells",
        ));
    }
    let plan = build_plan(ch, scheme, n_cells)?;
    let mut totals = SimTotals::default();
    let mut part_idx = plan.ends.partition_point(|&end| end <= first);
    for cell in first..last {
        while plan.ends[part_idx] <= cell {
            part_idx += 1;
        }
        let mut rng = CellRng::new(seed, cell);
        let (attempts, outcome) = run_cell(&mut rng, ch, &plan.plans[part_idx]);
        totals.cells += 1;
        totals.attempts += attempts;
        totals.attempts_sq += u128::from(attempts) * u128::from(attempts);
        match outcome {
            Outcome::Stored => {}
            Outcome::Marked => totals.qmarks += 1,
            Outcome::Failed => match plan.fail_kind {
                FailureKind::Error => totals.errors += 1,
                FailureKind::Erasure => totals.erasures += 1,
            },
        }
    }
    Ok(totals)
}

/// Seeded Monte Carlo run of a programming scheme; deterministic for a fixed
/// seed.
pub fn simulate(ch: &ChannelModel, scheme: &Scheme, n_cells: u64, seed: u64) -> Result<SimReport> {
    Ok(simulate_slice(ch, scheme, n_cells, seed, 0, n_cells)?.into_report(seed))
}

// ---------------------------------------------------------------------------
// Solver-versus-grid cross checks
// ---------------------------------------------------------------------------

/// One solver instance to replay against a grid.
#[derive(Debug, Clone, PartialEq)]
pub enum CrossCheckCase {
    F1 {
        channel: Channel,
        budget: DelayBudget,
    },
    F1Z {
        p: f64,
        budget: DelayBudget,
    },
    F2 {
        sequence: ChannelSequence,
        budget: DelayBudget,
    },
    F3 {
        p: f64,
        budget: DelayBudget,
    },
}

/// Grid resolution for [`grid_cross_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// Step of the fraction-of-ones grid (Z channel).
    pub alpha_step: f64,
    /// Step of the final-attempt probability grid (combined model).
    pub q_step: f64,
    /// Weights tried for two-point mixtures.
    pub mixture_weights: Vec<f64>,
    /// Retry-count range when the budget cap is unbounded.
    pub unbounded_t_cap: u32,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            alpha_step: 1e-3,
            q_step: 0.02,
            mixture_weights: vec![0.25, 0.5, 0.75],
            unbounded_t_cap: 40,
        }
    }
}

/// Summary of one cross check: the solver value, the best grid value, and
/// the worst-case gap (positive means the grid got ahead).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CrossCheckReport {
    pub solver_value: f64,
    pub best_grid_value: f64,
    pub best_strategy: String,
    /// `best_grid_value - solver_value`.
    pub gap: f64,
    pub points_checked: u64,
    pub tolerance: f64,
}

struct GridTracker {
    best_value: f64,
    best_label: String,
    points: u64,
}

impl GridTracker {
    fn new() -> Self {
        GridTracker {
            best_value: f64::NEG_INFINITY,
            best_label: String::new(),
            points: 0,
        }
    }

    fn observe(&mut self, value: f64, label: impl FnOnce() -> String) {
        self.points += 1;
        if value > self.best_value {
            self.best_value = value;
            self.best_label = label();
        }
    }
}

fn truncated_value(scheme: &Scheme, ch: &ChannelModel, d: f64) -> Result<f64> {
    let truncated = truncate_to_budget(scheme, ch, d)?;
    schemes::scheme_capacity(&truncated, ch)
}

fn grid_retry_counts(budget: &DelayBudget, grid: &GridSpec, include_zero: bool) -> Vec<RetryCount> {
    let start = u32::from(!include_zero);
    let mut ts: Vec<RetryCount> = match budget.max_retries {
        RetryCount::Finite(t) => (start..=t).map(RetryCount::Finite).collect(),
        RetryCount::Unbounded => {
            let mut v: Vec<RetryCount> = (start..=grid.unbounded_t_cap)
                .map(RetryCount::Finite)
                .collect();
            v.push(RetryCount::Unbounded);
            v
        }
    };
    if ts.is_empty() {
        ts.push(RetryCount::Finite(0));
    }
    ts
}

fn alpha_grid(step: f64) -> Vec<f64> {
    let mut v = Vec::new();
    let mut a = 0.0;
    while a < 1.0 {
        v.push(a);
        a += step;
    }
    v.push(1.0);
    v
}

/// Exhaustively evaluates truncated single-strategy (and two-point mixture)
/// schemes on a grid and confirms no grid point beats the solver by more
/// than `tolerance`. Returns the worst-case report, or a
/// [`Error::Counterexample`] naming the offending strategy.
pub fn grid_cross_check(
    case: &CrossCheckCase,
    grid: &GridSpec,
    tolerance: f64,
) -> Result<CrossCheckReport> {
    let mut tracker = GridTracker::new();
    let (solver_value, model, d) = match case {
        CrossCheckCase::F1 { channel, budget } => {
            let solver = solve_f1(channel, *budget)?;
            let model = ChannelModel::Fixed(channel.clone());
            let d = budget.avg_delay;
            let ts = grid_retry_counts(budget, grid, true);
            for &t in &ts {
                // Skip strategies whose own delay diverges.
                if let Ok(value) = truncated_value(&Scheme::single(t), &model, d) {
                    tracker.observe(value, || format!("PS_{t}"));
                }
            }
            for (i, &t1) in ts.iter().enumerate() {
                for &t2 in &ts[i + 1..] {
                    for &w in &grid.mixture_weights {
                        let parts = vec![SchemePart::plain(1.0 - w, t1), SchemePart::plain(w, t2)];
                        let Ok(scheme) = Scheme::new(parts) else {
                            continue;
                        };
                        if let Ok(value) = truncated_value(&scheme, &model, d) {
                            tracker.observe(value, || format!("mix({t1},{t2};{w})"));
                        }
                    }
                }
            }
            (solver.value, model, d)
        }
        CrossCheckCase::F1Z { p, budget } => {
            let solver = solve_f1_z(*p, *budget)?;
            let model = ChannelModel::Fixed(Channel::z(*p)?);
            let d = budget.avg_delay;
            let ts = grid_retry_counts(budget, grid, false);
            let alphas = alpha_grid(grid.alpha_step);
            for &t in &ts {
                for &a in &alphas {
                    if let Ok(value) = truncated_value(&Scheme::single_z(t, a), &model, d) {
                        tracker.observe(value, || format!("PS_{t}(alpha={a})"));
                    }
                }
            }
            (solver.value, model, d)
        }
        CrossCheckCase::F2 { sequence, budget } => {
            let solver = solve_f2(sequence, *budget)?;
            let model = ChannelModel::Sequence(sequence.clone());
            let d = budget.avg_delay;
            let ts = grid_retry_counts(budget, grid, true);
            for &t in &ts {
                if let Ok(value) = truncated_value(&Scheme::single(t), &model, d) {
                    tracker.observe(value, || format!("PS_{t}"));
                }
            }
            for (i, &t1) in ts.iter().enumerate() {
                for &t2 in &ts[i + 1..] {
                    for &w in &grid.mixture_weights {
                        let parts = vec![SchemePart::plain(1.0 - w, t1), SchemePart::plain(w, t2)];
                        let Ok(scheme) = Scheme::new(parts) else {
                            continue;
                        };
                        if let Ok(value) = truncated_value(&scheme, &model, d) {
                            tracker.observe(value, || format!("mix({t1},{t2};{w})"));
                        }
                    }
                }
            }
            (solver.value, model, d)
        }
        CrossCheckCase::F3 { p, budget } => {
            let solver = solve_f3(*p, *budget)?;
            let model = ChannelModel::Fixed(Channel::bsc(*p)?);
            let d = budget.avg_delay;
            let t_cap = budget.max_retries.finite_value().ok_or(Error::Domain(
                "the combined-model solver requires a finite cap",
            ))?;
            let mut qs = alpha_grid(grid.q_step);
            qs.dedup();
            for t in 1..=t_cap {
                for &q in &qs {
                    let scheme = Scheme::single_combined(RetryCount::Finite(t), q);
                    if let Ok(value) = truncated_value(&scheme, &model, d) {
                        tracker.observe(value, || format!("PS_(q={q},t={t})"));
                    }
                }
            }
            // Mixtures of the two endpoint choices across retry counts.
            for t1 in 1..=t_cap {
                for t2 in t1..=t_cap {
                    for &(q1, q2) in &[(0.0, 1.0), (1.0, 0.0), (0.0, 0.0), (1.0, 1.0)] {
                        if t1 == t2 && q1 == q2 {
                            continue;
                        }
                        for &w in &grid.mixture_weights {
                            let parts = vec![
                                SchemePart::combined(1.0 - w, RetryCount::Finite(t1), q1),
                                SchemePart::combined(w, RetryCount::Finite(t2), q2),
                            ];
                            let Ok(scheme) = Scheme::new(parts) else {
                                continue;
                            };
                            if let Ok(value) = truncated_value(&scheme, &model, d) {
                                tracker.observe(value, || {
                                    format!("mix(q={q1},t={t1};q={q2},t={t2};{w})")
                                });
                            }
                        }
                    }
                }
            }
            (solver.value, model, d)
        }
    };
    let _ = (model, d);
    let gap = tracker.best_value - solver_value;
    if gap > tolerance {
        return Err(Error::Counterexample {
            description: tracker.best_label,
            solver_value,
            grid_value: tracker.best_value,
        });
    }
    Ok(CrossCheckReport {
        solver_value,
        best_grid_value: tracker.best_value,
        best_strategy: tracker.best_label,
        gap,
        points_checked: tracker.points,
        tolerance,
    })
}
