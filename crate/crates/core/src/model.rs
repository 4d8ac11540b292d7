//! Alphabet, activity prior and the Bayes-risk penalty calculus.
//!
//! The detector weighs a nonzero symbol against a zero by the penalty
//!
//! ```text
//! λ(Ω) = 2 σ² ln( Ω (1 − p_a) |A| / p_a )
//! ```
//!
//! where `Ω = C_Fa / C_Fi` is the ratio of false-active to false-inactive
//! costs. `Ω > 1` gives a conservative detector that favours inactivity,
//! `Ω < 1` a liberal one. After stacking the identity block under the system
//! matrix the penalty becomes `Θ(Ω) = λ(Ω) − 1`.

use crate::{Error, Result};

/// Augmented modulation alphabet `A0 = A ∪ {0}`.
///
/// The data symbols must be distinct, nonzero and of unit modulus. Candidates
/// are enumerated as `[0, A ascending]`; that order also defines the
/// lexicographic tie-break between equally good detections.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedAlphabet {
    // 0 first, then the data symbols ascending.
    candidates: Vec<f64>,
}

impl AugmentedAlphabet {
    pub fn new(data_symbols: &[f64]) -> Result<Self> {
        if data_symbols.is_empty() {
            return Err(Error::InvalidAlphabet("no data symbols".into()));
        }
        let mut symbols = data_symbols.to_vec();
        for &s in &symbols {
            if !s.is_finite() {
                return Err(Error::InvalidAlphabet(format!("non-finite symbol {s}")));
            }
            if s == 0.0 {
                return Err(Error::InvalidAlphabet(
                    "zero is reserved for inactivity".into(),
                ));
            }
            if s.abs() != 1.0 {
                return Err(Error::NonUnitModulus(s));
            }
        }
        symbols.sort_by(f64::total_cmp);
        if symbols.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidAlphabet("duplicate symbols".into()));
        }
        let mut candidates = Vec::with_capacity(symbols.len() + 1);
        candidates.push(0.0);
        candidates.extend(symbols);
        Ok(AugmentedAlphabet { candidates })
    }

    /// `{−1, +1}`.
    pub fn bpsk() -> Self {
        AugmentedAlphabet {
            candidates: vec![0.0, -1.0, 1.0],
        }
    }

    /// The data symbols `A`, ascending.
    pub fn data_symbols(&self) -> &[f64] {
        &self.candidates[1..]
    }

    /// All of `A0` in enumeration order: zero first, then `A` ascending.
    pub fn candidates(&self) -> &[f64] {
        &self.candidates
    }

    /// `|A|`.
    pub fn size(&self) -> usize {
        self.candidates.len() - 1
    }

    /// `|A0| = |A| + 1`.
    pub fn augmented_size(&self) -> usize {
        self.candidates.len()
    }

    /// Position of `x` in the enumeration order, `None` outside `A0`.
    pub fn rank(&self, x: f64) -> Option<usize> {
        self.candidates.iter().position(|&c| c == x)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.rank(x).is_some()
    }

    /// Indicator `1_A(x)`: true for data symbols, false for zero and for
    /// anything outside the alphabet.
    pub fn is_active(&self, x: f64) -> bool {
        x != 0.0 && self.contains(x)
    }

    pub(crate) fn check_vector(&self, x: &[f64]) -> Result<()> {
        match x.iter().find(|&&v| !self.contains(v)) {
            Some(&bad) => Err(Error::SymbolOutsideAlphabet(bad)),
            None => Ok(()),
        }
    }
}

/// Prior, noise level and cost ratio that parameterise one detection.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionParams {
    activity_prob: f64,
    noise_var: f64,
    bayes_factor: f64,
    alphabet: AugmentedAlphabet,
}

impl DetectionParams {
    pub fn new(
        activity_prob: f64,
        noise_var: f64,
        bayes_factor: f64,
        alphabet: AugmentedAlphabet,
    ) -> Result<Self> {
        if !(activity_prob > 0.0 && activity_prob < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "activity probability must lie in (0, 1), got {activity_prob}"
            )));
        }
        if !(noise_var > 0.0 && noise_var.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be positive, got {noise_var}"
            )));
        }
        if !(bayes_factor > 0.0 && bayes_factor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Bayes factor must be positive, got {bayes_factor}"
            )));
        }
        Ok(DetectionParams {
            activity_prob,
            noise_var,
            bayes_factor,
            alphabet,
        })
    }

    pub fn activity_prob(&self) -> f64 {
        self.activity_prob
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn bayes_factor(&self) -> f64 {
        self.bayes_factor
    }

    pub fn alphabet(&self) -> &AugmentedAlphabet {
        &self.alphabet
    }

    /// `λ(Ω) = 2σ² ln(Ω (1 − p_a) |A| / p_a)`. Negative for small `Ω`.
    pub fn penalty_lambda(&self) -> f64 {
        let p = self.activity_prob;
        let ratio = self.bayes_factor * (1.0 - p) * self.alphabet.size() as f64 / p;
        2.0 * self.noise_var * ratio.ln()
    }

    /// `Θ(Ω) = λ(Ω) − 1`, the penalty left over once `‖x‖₂²` has been
    /// absorbed into the identity block of the augmented system.
    pub fn penalty_theta(&self) -> f64 {
        self.penalty_lambda() - 1.0
    }
}

/// Per-symbol Bayes cost `C(x) = C_Fi^{1_A(x)} · C_Fa^{1 − 1_A(x)}`.
pub fn cost_weight(alphabet: &AugmentedAlphabet, x: f64, c_fa: f64, c_fi: f64) -> Result<f64> {
    if !alphabet.contains(x) {
        return Err(Error::SymbolOutsideAlphabet(x));
    }
    if !(c_fa > 0.0 && c_fi > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "costs must be positive, got C_Fa={c_fa}, C_Fi={c_fi}"
        )));
    }
    Ok(if alphabet.is_active(x) { c_fi } else { c_fa })
}
