//! Activity confusion counts, gross symbol errors and pooled rates.

use std::iter::Sum;
use std::ops::{Add, AddAssign};

use crate::{Error, Result};

/// Activity-detection confusion matrix.
///
/// |              | truth active   | truth inactive |
/// |--------------|----------------|----------------|
/// | est. active  | true active    | false active   |
/// | est. zero    | false inactive | true inactive  |
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ConfusionCounts {
    pub true_active: u64,
    pub false_active: u64,
    pub false_inactive: u64,
    pub true_inactive: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.true_active + self.false_active + self.false_inactive + self.true_inactive
    }

    /// `TA / (TA + FI)`, `None` when nothing was truly active.
    pub fn true_active_rate(&self) -> Option<f64> {
        ratio(self.true_active, self.true_active + self.false_inactive)
    }

    /// `FA / (FA + TI)`, `None` when nothing was truly inactive.
    pub fn false_active_rate(&self) -> Option<f64> {
        ratio(self.false_active, self.false_active + self.true_inactive)
    }

    /// Activity errors `FA + FI`.
    pub fn activity_errors(&self) -> u64 {
        self.false_active + self.false_inactive
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl Add for ConfusionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        ConfusionCounts {
            true_active: self.true_active + o.true_active,
            false_active: self.false_active + o.false_active,
            false_inactive: self.false_inactive + o.false_inactive,
            true_inactive: self.true_inactive + o.true_inactive,
        }
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

fn check_lengths(x_true: &[f64], x_hat: &[f64]) -> Result<()> {
    if x_true.len() != x_hat.len() {
        return Err(Error::DimensionMismatch {
            expected: x_true.len(),
            found: x_hat.len(),
        });
    }
    Ok(())
}

/// Tallies activity agreement per element. A wrong nonzero symbol still
/// counts as true active; data errors are scored by [`gse`].
pub fn score_confusion(x_true: &[f64], x_hat: &[f64]) -> Result<ConfusionCounts> {
    check_lengths(x_true, x_hat)?;
    let mut c = ConfusionCounts::default();
    for (&t, &h) in x_true.iter().zip(x_hat) {
        match (t != 0.0, h != 0.0) {
            (true, true) => c.true_active += 1,
            (false, true) => c.false_active += 1,
            (true, false) => c.false_inactive += 1,
            (false, false) => c.true_inactive += 1,
        }
    }
    Ok(c)
}

/// Number of positions where `x̂_k ≠ x_k`.
pub fn symbol_errors(x_true: &[f64], x_hat: &[f64]) -> Result<u64> {
    check_lengths(x_true, x_hat)?;
    Ok(x_true.iter().zip(x_hat).filter(|(t, h)| t != h).count() as u64)
}

/// Gross symbol error rate: fraction of mismatches over `A0`.
pub fn gse(x_true: &[f64], x_hat: &[f64]) -> Result<f64> {
    let errors = symbol_errors(x_true, x_hat)?;
    Ok(if x_true.is_empty() {
        0.0
    } else {
        errors as f64 / x_true.len() as f64
    })
}

/// Everything scored from a single trial.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrialOutcome {
    pub counts: ConfusionCounts,
    pub symbol_errors: u64,
    pub symbols: u64,
    /// Search effort, when the detector reports one.
    pub nodes_visited: Option<u64>,
}

impl TrialOutcome {
    pub fn score(x_true: &[f64], x_hat: &[f64], nodes_visited: Option<u64>) -> Result<Self> {
        Ok(TrialOutcome {
            counts: score_confusion(x_true, x_hat)?,
            symbol_errors: symbol_errors(x_true, x_hat)?,
            symbols: x_true.len() as u64,
            nodes_visited,
        })
    }
}

/// Mergeable running totals over trials.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub trials: u64,
    pub counts: ConfusionCounts,
    pub symbol_errors: u64,
    pub symbols: u64,
    pub nodes_visited: u64,
    pub trials_with_nodes: u64,
}

impl Tally {
    pub fn push(&mut self, t: &TrialOutcome) {
        *self = self.merge(&Tally::from(t));
    }

    pub fn merge(&self, o: &Tally) -> Tally {
        Tally {
            trials: self.trials + o.trials,
            counts: self.counts + o.counts,
            symbol_errors: self.symbol_errors + o.symbol_errors,
            symbols: self.symbols + o.symbols,
            nodes_visited: self.nodes_visited + o.nodes_visited,
            trials_with_nodes: self.trials_with_nodes + o.trials_with_nodes,
        }
    }
}

impl From<&TrialOutcome> for Tally {
    fn from(t: &TrialOutcome) -> Self {
        Tally {
            trials: 1,
            counts: t.counts,
            symbol_errors: t.symbol_errors,
            symbols: t.symbols,
            nodes_visited: t.nodes_visited.unwrap_or(0),
            trials_with_nodes: u64::from(t.nodes_visited.is_some()),
        }
    }
}

/// Pooled rates for one sweep cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    pub snr_db: f64,
    pub omega: f64,
    /// True-active rate; `None` if no symbol was truly active.
    pub tar: Option<f64>,
    /// False-active rate; `None` if no symbol was truly inactive.
    pub far: Option<f64>,
    pub gse: f64,
    pub trials: u64,
    pub counts: ConfusionCounts,
    pub symbol_errors: u64,
    pub symbols: u64,
    pub mean_nodes_visited: Option<f64>,
}

impl RatePoint {
    pub fn from_tally(tally: &Tally, snr_db: f64, omega: f64) -> Result<Self> {
        if tally.trials == 0 {
            return Err(Error::InvalidParameter("cannot aggregate zero trials".into()));
        }
        Ok(RatePoint {
            snr_db,
            omega,
            tar: tally.counts.true_active_rate(),
            far: tally.counts.false_active_rate(),
            gse: if tally.symbols == 0 {
                0.0
            } else {
                tally.symbol_errors as f64 / tally.symbols as f64
            },
            trials: tally.trials,
            counts: tally.counts,
            symbol_errors: tally.symbol_errors,
            symbols: tally.symbols,
            mean_nodes_visited: (tally.trials_with_nodes > 0)
                .then(|| tally.nodes_visited as f64 / tally.trials_with_nodes as f64),
        })
    }

    /// Binomial standard error of the pooled GSE.
    pub fn gse_std_error(&self) -> f64 {
        if self.symbols == 0 {
            return 0.0;
        }
        (self.gse * (1.0 - self.gse) / self.symbols as f64).sqrt()
    }
}

/// Pools per-trial outcomes: counts are summed first, then turned into rates.
pub fn aggregate(points: &[TrialOutcome], snr_db: f64, omega: f64) -> Result<RatePoint> {
    let mut tally = Tally::default();
    for p in points {
        tally.push(p);
    }
    RatePoint::from_tally(&tally, snr_db, omega)
}
