//! The linear model `y = T x + w`, its penalised objective, and the identity
//! augmentation that turns an under-determined system into an
//! over-determined one.

use crate::matrix::norm_sq;
use crate::model::{AugmentedAlphabet, DetectionParams};
use crate::{Error, Matrix, Result};

/// Observation `y` (length M) and system matrix `T` (M×K). `M < K` is allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    matrix: Matrix,
    observation: Vec<f64>,
}

impl LinearSystem {
    pub fn new(matrix: Matrix, observation: Vec<f64>) -> Result<Self> {
        if matrix.rows() == 0 || matrix.cols() == 0 {
            return Err(Error::InvalidParameter(
                "system matrix must have at least one row and one column".into(),
            ));
        }
        if observation.len() != matrix.rows() {
            return Err(Error::DimensionMismatch {
                expected: matrix.rows(),
                found: observation.len(),
            });
        }
        if !matrix.as_slice().iter().chain(&observation).all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(
                "system contains non-finite entries".into(),
            ));
        }
        Ok(LinearSystem {
            matrix,
            observation,
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn observation(&self) -> &[f64] {
        &self.observation
    }

    /// `(M, K)`.
    pub fn dims(&self) -> (usize, usize) {
        self.matrix.shape()
    }

    pub fn num_unknowns(&self) -> usize {
        self.matrix.cols()
    }

    pub fn is_underdetermined(&self) -> bool {
        self.matrix.rows() < self.matrix.cols()
    }

    /// `‖y − T x‖²` without any alphabet checks.
    pub fn residual_sq(&self, x: &[f64]) -> f64 {
        let tx = self.matrix.mul_vec(x);
        self.observation
            .iter()
            .zip(&tx)
            .map(|(y, t)| (y - t) * (y - t))
            .sum()
    }

    fn check_candidate(&self, x: &[f64], alphabet: &AugmentedAlphabet) -> Result<()> {
        if x.len() != self.num_unknowns() {
            return Err(Error::DimensionMismatch {
                expected: self.num_unknowns(),
                found: x.len(),
            });
        }
        alphabet.check_vector(x)
    }
}

/// Number of nonzero entries.
pub fn l0_norm(x: &[f64]) -> usize {
    x.iter().filter(|&&v| v != 0.0).count()
}

/// `‖y − T x‖² + λ ‖x‖₀` for a candidate `x ∈ A0^K`.
pub fn objective(
    system: &LinearSystem,
    x: &[f64],
    lambda: f64,
    alphabet: &AugmentedAlphabet,
) -> Result<f64> {
    system.check_candidate(x, alphabet)?;
    Ok(system.residual_sq(x) + lambda * l0_norm(x) as f64)
}

/// Which symbols carry the per-level penalty in the sphere metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyMode {
    /// `Θ ≥ 0`: each nonzero symbol costs `Θ`.
    PenalizeNonzero,
    /// `Θ < 0`: each zero symbol costs `|Θ|`, which differs from the
    /// `Θ ‖x‖₀` form by the constant `|Θ| K`.
    PenalizeZero,
}

/// `y′ = [y; 0_K]`, `T′ = [T; I_K]` together with `Θ = λ − 1`.
///
/// For unit-modulus alphabets `‖x‖₂² = ‖x‖₀`, so
/// `‖y′ − T′x‖² + Θ‖x‖₀ = ‖y − Tx‖² + λ‖x‖₀` for every candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSystem {
    matrix_aug: Matrix,
    observation_aug: Vec<f64>,
    theta: f64,
    penalty_mode: PenaltyMode,
}

/// Builds the augmented system for `system` under `params`.
pub fn augment(system: &LinearSystem, params: &DetectionParams) -> Result<AugmentedSystem> {
    let k = system.num_unknowns();
    if let Some(&s) = params
        .alphabet()
        .data_symbols()
        .iter()
        .find(|s| s.abs() != 1.0)
    {
        return Err(Error::NonUnitModulus(s));
    }
    let matrix_aug = system.matrix().vstack(&Matrix::identity(k))?;
    let mut observation_aug = system.observation().to_vec();
    observation_aug.resize(system.observation().len() + k, 0.0);
    let theta = params.penalty_theta();
    let penalty_mode = if theta >= 0.0 {
        PenaltyMode::PenalizeNonzero
    } else {
        PenaltyMode::PenalizeZero
    };
    Ok(AugmentedSystem {
        matrix_aug,
        observation_aug,
        theta,
        penalty_mode,
    })
}

impl AugmentedSystem {
    pub fn matrix(&self) -> &Matrix {
        &self.matrix_aug
    }

    pub fn observation(&self) -> &[f64] {
        &self.observation_aug
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn penalty_mode(&self) -> PenaltyMode {
        self.penalty_mode
    }

    pub fn num_unknowns(&self) -> usize {
        self.matrix_aug.cols()
    }

    /// Nonnegative penalty charged to a single symbol in the sphere metric.
    pub fn per_symbol_penalty(&self, x_k: f64) -> f64 {
        penalty_for(self.penalty_mode, self.theta, x_k)
    }

    /// `‖y′ − T′x‖²`.
    pub fn residual_sq(&self, x: &[f64]) -> f64 {
        let tx = self.matrix_aug.mul_vec(x);
        let r: Vec<f64> = self
            .observation_aug
            .iter()
            .zip(&tx)
            .map(|(y, t)| y - t)
            .collect();
        norm_sq(&r)
    }

    /// `‖y′ − T′x‖² + Θ‖x‖₀`; equals the original objective.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.residual_sq(x) + self.theta * l0_norm(x) as f64
    }

    /// `‖y′ − T′x‖² + Σ_k per_symbol_penalty(x_k)`; same argmin as
    /// [`objective`](Self::objective), offset by `|Θ|K` when `Θ < 0`.
    pub fn penalized_objective(&self, x: &[f64]) -> f64 {
        self.residual_sq(x) + x.iter().map(|&v| self.per_symbol_penalty(v)).sum::<f64>()
    }
}

#[inline]
pub(crate) fn penalty_for(mode: PenaltyMode, theta: f64, x_k: f64) -> f64 {
    match mode {
        PenaltyMode::PenalizeNonzero if x_k != 0.0 => theta,
        PenaltyMode::PenalizeZero if x_k == 0.0 => theta.abs(),
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bpsk_params(noise_var: f64, pa: f64, omega: f64) -> DetectionParams {
        DetectionParams::new(pa, noise_var, omega, AugmentedAlphabet::bpsk()).unwrap()
    }

    fn eye2(y: [f64; 2]) -> LinearSystem {
        LinearSystem::new(Matrix::identity(2), y.to_vec()).unwrap()
    }

    // Independent scalar-loop evaluation of ‖y − Tx‖² + λ·#nonzero.
    fn objective_loops(t: &Matrix, y: &[f64], x: &[f64], lambda: f64) -> f64 {
        let mut total = 0.0;
        for i in 0..t.rows() {
            let mut acc = y[i];
            for j in 0..t.cols() {
                acc -= t[(i, j)] * x[j];
            }
            total += acc * acc;
        }
        let mut support = 0usize;
        for &v in x {
            if v != 0.0 {
                support += 1;
            }
        }
        total + lambda * support as f64
    }

    #[test]
    fn objective_examples() {
        let a = AugmentedAlphabet::bpsk();
        let sys = eye2([1.0, 0.0]);
        assert_eq!(objective(&sys, &[1.0, 0.0], 0.5, &a).unwrap(), 0.5);

        let sys = eye2([0.9, 0.1]);
        assert_eq!(objective(&sys, &[0.0, 0.0], 3.0, &a).unwrap(), norm_sq(&[0.9, 0.1]));

        let lambda = 8f64.ln() / 2.0;
        let got = objective(&sys, &[1.0, 1.0], lambda, &a).unwrap();
        let want = objective_loops(sys.matrix(), sys.observation(), &[1.0, 1.0], lambda);
        assert!((got - want).abs() < 1e-15);
        assert!((got - (0.82 + 2.0 * lambda)).abs() < 1e-12);
    }

    #[test]
    fn objective_errors() {
        let a = AugmentedAlphabet::bpsk();
        let sys = eye2([1.0, 0.0]);
        assert_eq!(
            objective(&sys, &[1.0], 0.5, &a),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 1
            })
        );
        assert_eq!(
            objective(&sys, &[1.0, 0.3], 0.5, &a),
            Err(Error::SymbolOutsideAlphabet(0.3))
        );
    }

    #[test]
    fn system_validation() {
        assert!(LinearSystem::new(Matrix::identity(2), vec![1.0]).is_err());
        assert!(LinearSystem::new(Matrix::zeros(0, 2), vec![]).is_err());
        assert!(LinearSystem::new(Matrix::identity(1), vec![f64::NAN]).is_err());
        let s = LinearSystem::new(Matrix::zeros(2, 5), vec![0.0; 2]).unwrap();
        assert!(s.is_underdetermined());
        assert_eq!(s.dims(), (2, 5));
    }

    #[test]
    fn l0_examples() {
        assert_eq!(l0_norm(&[0.0, 0.0, 0.0]), 0);
        assert_eq!(l0_norm(&[1.0, 0.0, -1.0]), 2);
        assert_eq!(l0_norm(&[1.0, -1.0, 1.0, 1.0]), 4);
    }

    #[test]
    fn augment_layout() {
        let t = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let sys = LinearSystem::new(t.clone(), vec![7.0, 8.0]).unwrap();
        let aug = augment(&sys, &bpsk_params(0.5, 0.2, 1.0)).unwrap();
        assert_eq!(aug.matrix().shape(), (5, 3));
        for i in 0..2 {
            assert_eq!(aug.matrix().row(i), t.row(i));
        }
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(aug.matrix()[(2 + i, j)], if i == j { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(aug.observation(), &[7.0, 8.0, 0.0, 0.0, 0.0]);
        assert!((aug.theta() - (8f64.ln() - 1.0)).abs() < 1e-12);
        assert_eq!(aug.penalty_mode(), PenaltyMode::PenalizeNonzero);

        let liberal = augment(&sys, &bpsk_params(0.5, 0.2, 0.01)).unwrap();
        assert_eq!(liberal.penalty_mode(), PenaltyMode::PenalizeZero);
    }

    #[test]
    fn per_symbol_penalty_examples() {
        assert_eq!(penalty_for(PenaltyMode::PenalizeNonzero, 1.08, 1.0), 1.08);
        assert_eq!(penalty_for(PenaltyMode::PenalizeNonzero, 1.08, 0.0), 0.0);
        assert_eq!(penalty_for(PenaltyMode::PenalizeZero, -3.53, 0.0), 3.53);
        assert_eq!(penalty_for(PenaltyMode::PenalizeZero, -3.53, -1.0), 0.0);
    }

    fn all_candidates(k: usize, alphabet: &AugmentedAlphabet) -> Vec<Vec<f64>> {
        let mut out = vec![vec![]];
        for _ in 0..k {
            out = out
                .into_iter()
                .flat_map(|p| {
                    alphabet.candidates().iter().map(move |&c| {
                        let mut q = p.clone();
                        q.push(c);
                        q
                    })
                })
                .collect();
        }
        out
    }

    fn lcg_matrix(seed: u64, rows: usize, cols: usize) -> Matrix {
        let mut s = seed;
        Matrix::from_fn(rows, cols, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    #[test]
    fn augmented_objective_matches_original_on_all_candidates() {
        let a = AugmentedAlphabet::bpsk();
        let t = lcg_matrix(7, 3, 5);
        let y = lcg_matrix(8, 3, 1).as_slice().to_vec();
        let sys = LinearSystem::new(t, y).unwrap();
        for omega in [0.01, 1.0, 100.0] {
            let p = bpsk_params(0.4, 0.2, omega);
            let aug = augment(&sys, &p).unwrap();
            let cands = all_candidates(5, &a);
            assert_eq!(cands.len(), 243);
            let worst = cands
                .iter()
                .map(|x| {
                    (aug.objective(x) - objective(&sys, x, p.penalty_lambda(), &a).unwrap()).abs()
                })
                .fold(0.0, f64::max);
            assert!(worst < 1e-12, "max deviation {worst}");
        }
    }

    proptest! {
        #[test]
        fn penalty_nonnegative(theta in -50.0f64..50.0, idx in 0usize..3) {
            let mode = if theta >= 0.0 { PenaltyMode::PenalizeNonzero } else { PenaltyMode::PenalizeZero };
            let x = AugmentedAlphabet::bpsk().candidates()[idx];
            prop_assert!(penalty_for(mode, theta, x) >= 0.0);
        }

        #[test]
        fn l0_equals_squared_l2(x in proptest::collection::vec(prop_oneof![Just(0.0f64), Just(-1.0), Just(1.0)], 0..20)) {
            prop_assert_eq!(l0_norm(&x) as f64, norm_sq(&x));
        }

        #[test]
        fn zero_penalty_form_is_constant_shift(seed in any::<u64>(), omega in 1e-3f64..0.1) {
            let t = lcg_matrix(seed, 2, 3);
            let y = lcg_matrix(seed ^ 0xdead, 2, 1).as_slice().to_vec();
            let sys = LinearSystem::new(t, y).unwrap();
            let aug = augment(&sys, &bpsk_params(1.0, 0.2, omega)).unwrap();
            prop_assume!(aug.penalty_mode() == PenaltyMode::PenalizeZero);
            for x in all_candidates(3, &AugmentedAlphabet::bpsk()) {
                let shift = aug.objective(&x) - aug.penalized_objective(&x);
                prop_assert!((shift + aug.theta().abs() * 3.0).abs() < 1e-9);
            }
        }
    }
}
