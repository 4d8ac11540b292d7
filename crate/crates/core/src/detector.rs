//! The BR-CS-MUD solver.
//!
//! The augmented matrix `T′ = [T; I_K]` always has full column rank, so a
//! skinny QR factorisation `T′ = QR` turns the penalised least-squares
//! problem into `‖ỹ − Rx‖² + Σ_k pen(x_k)` with `R` upper triangular. Since
//! every per-symbol penalty is nonnegative, a depth-first search from the
//! last unknown to the first sees monotonically nondecreasing partial
//! metrics and can prune any branch whose partial metric already exceeds the
//! best complete candidate.

use crate::linsys::{self, augment, penalty_for, AugmentedSystem, LinearSystem, PenaltyMode};
use crate::matrix::{dot, norm_sq};
use crate::model::{AugmentedAlphabet, DetectionParams};
use crate::{Error, Matrix, Result};

/// Largest candidate count the exhaustive oracle will enumerate (3^16).
pub const EXHAUSTIVE_LIMIT: u128 = 43_046_721;

/// Skinny QR factors of a tall matrix: `Q` is m×n with orthonormal columns,
/// `R` is n×n upper triangular with a nonnegative diagonal.
#[derive(Debug, Clone)]
pub struct QrFactors {
    pub q: Matrix,
    pub r: Matrix,
}

/// Householder QR of an m×n matrix with `m ≥ n` and full column rank.
pub fn householder_qr(a: &Matrix) -> Result<QrFactors> {
    let (m, n) = a.shape();
    if m < n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m,
        });
    }
    let scale = a.as_slice().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut w = a.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(n);

    for j in 0..n {
        let x: Vec<f64> = (j..m).map(|i| w[(i, j)]).collect();
        let norm = norm_sq(&x).sqrt();
        if norm <= f64::EPSILON * scale * m as f64 {
            return Err(Error::RankDeficient(j));
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x;
        v[0] -= alpha;
        let vv = norm_sq(&v);
        for c in j..n {
            let s = 2.0 * (j..m).map(|i| v[i - j] * w[(i, c)]).sum::<f64>() / vv;
            for i in j..m {
                w[(i, c)] -= s * v[i - j];
            }
        }
        reflectors.push(v);
    }

    // Q = H_0 H_1 … H_{n−1} applied to the first n columns of I_m.
    let mut q = Matrix::from_fn(m, n, |i, j| if i == j { 1.0 } else { 0.0 });
    for (j, v) in reflectors.iter().enumerate().rev() {
        let vv = norm_sq(v);
        for c in 0..n {
            let s = 2.0 * (j..m).map(|i| v[i - j] * q[(i, c)]).sum::<f64>() / vv;
            for i in j..m {
                q[(i, c)] -= s * v[i - j];
            }
        }
    }

    let mut r = Matrix::from_fn(n, n, |i, j| if j >= i { w[(i, j)] } else { 0.0 });
    for i in 0..n {
        if r[(i, i)] < 0.0 {
            for j in i..n {
                r[(i, j)] = -r[(i, j)];
            }
            for row in 0..m {
                q[(row, i)] = -q[(row, i)];
            }
        }
    }
    Ok(QrFactors { q, r })
}

/// The sphere-search form of an augmented system.
#[derive(Debug, Clone)]
pub struct TriangularizedSystem {
    r: Matrix,
    y_tilde: Vec<f64>,
    residual_const: f64,
    theta: f64,
    penalty_mode: PenaltyMode,
}

impl TriangularizedSystem {
    pub fn r(&self) -> &Matrix {
        &self.r
    }

    /// `ỹ = Qᵀ y′`.
    pub fn y_tilde(&self) -> &[f64] {
        &self.y_tilde
    }

    /// `‖y′‖² − ‖ỹ‖²`: the part of the augmented residual outside the column
    /// span, common to every candidate.
    pub fn residual_const(&self) -> f64 {
        self.residual_const
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn penalty_mode(&self) -> PenaltyMode {
        self.penalty_mode
    }

    pub fn num_unknowns(&self) -> usize {
        self.r.cols()
    }

    /// `‖ỹ − Rx‖²`.
    pub fn reduced_residual_sq(&self, x: &[f64]) -> f64 {
        let rx = self.r.mul_vec(x);
        self.y_tilde
            .iter()
            .zip(&rx)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

/// Factorises `T′` and projects `y′` onto its column span.
pub fn factorize(aug: &AugmentedSystem) -> Result<TriangularizedSystem> {
    let QrFactors { q, r } = householder_qr(aug.matrix())?;
    let y_tilde = q.tr_mul_vec(aug.observation());
    let residual_const = (norm_sq(aug.observation()) - norm_sq(&y_tilde)).max(0.0);
    Ok(TriangularizedSystem {
        r,
        y_tilde,
        residual_const,
        theta: aug.theta(),
        penalty_mode: aug.penalty_mode(),
    })
}

/// Outcome of one detection.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    /// Estimate in `A0^K`.
    pub x_hat: Vec<f64>,
    /// `‖y − T x̂‖² + λ ‖x̂‖₀` evaluated on the original system.
    pub objective_value: f64,
    /// Number of per-symbol metric evaluations performed by the search.
    pub nodes_visited: u64,
}

#[inline]
fn tie_tolerance(v: f64) -> f64 {
    1e-10 * v.abs().max(1.0)
}

struct Search<'a> {
    r: &'a Matrix,
    y_tilde: &'a [f64],
    mode: PenaltyMode,
    theta: f64,
    candidates: &'a [f64],
    x: Vec<f64>,
    ranks: Vec<usize>,
    best_metric: f64,
    best_x: Vec<f64>,
    best_ranks: Vec<usize>,
    // per-level scratch for the ordered children
    children: Vec<(f64, usize)>,
    nodes: u64,
    // metric of every accepted leaf, in acceptance order
    best_trace: Vec<f64>,
}

impl<'a> Search<'a> {
    fn new(tri: &'a TriangularizedSystem, alphabet: &'a AugmentedAlphabet) -> Self {
        let k = tri.num_unknowns();
        Search {
            r: &tri.r,
            y_tilde: &tri.y_tilde,
            mode: tri.penalty_mode,
            theta: tri.theta,
            candidates: alphabet.candidates(),
            x: vec![0.0; k],
            ranks: vec![0; k],
            best_metric: f64::INFINITY,
            best_x: Vec::new(),
            best_ranks: Vec::new(),
            children: vec![(0.0, 0); k * alphabet.augmented_size()],
            nodes: 0,
            best_trace: Vec::new(),
        }
    }

    fn run(&mut self) {
        let k = self.x.len();
        self.descend(k - 1, 0.0);
    }

    fn descend(&mut self, level: usize, partial: f64) {
        let k = self.x.len();
        let width = self.candidates.len();
        let centre = self.y_tilde[level]
            - dot(&self.r.row(level)[level + 1..k], &self.x[level + 1..k]);
        let diag = self.r[(level, level)];

        // Schnorr–Euchner order: children by ascending increment, ties by rank.
        let base = level * width;
        for (rank, &s) in self.candidates.iter().enumerate() {
            let e = centre - diag * s;
            self.children[base + rank] = (e * e + penalty_for(self.mode, self.theta, s), rank);
        }
        self.nodes += width as u64;
        self.children[base..base + width]
            .sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        for i in 0..width {
            let (increment, rank) = self.children[base + i];
            let metric = partial + increment;
            debug_assert!(metric >= partial);
            if metric > self.best_metric + tie_tolerance(self.best_metric) {
                break;
            }
            self.x[level] = self.candidates[rank];
            self.ranks[level] = rank;
            if level == 0 {
                self.leaf(metric);
            } else {
                self.descend(level - 1, metric);
            }
        }
    }

    fn leaf(&mut self, metric: f64) {
        let tol = tie_tolerance(self.best_metric);
        let accept = self.best_x.is_empty()
            || metric < self.best_metric - tol
            || (metric <= self.best_metric + tol && self.ranks < self.best_ranks);
        if accept {
            debug_assert!(self.best_x.is_empty() || metric <= self.best_metric + tol);
            self.best_metric = self.best_metric.min(metric);
            self.best_x.clone_from(&self.x);
            self.best_ranks.clone_from(&self.ranks);
            self.best_trace.push(self.best_metric);
        }
    }
}

/// Exact minimiser of `‖y − Tx‖² + λ‖x‖₀` over `A0^K` by depth-first search
/// on the triangularised system.
///
/// The initial radius is infinite and the first leaf reached sets it.
/// Among candidates whose metrics agree to within a relative 1e-10, the
/// lexicographically smallest under the alphabet's enumeration order wins.
pub fn sphere_detect(
    tri: &TriangularizedSystem,
    alphabet: &AugmentedAlphabet,
    lambda: f64,
    system: &LinearSystem,
) -> Result<DetectionResult> {
    let search = run_search(tri, alphabet, system)?;
    let objective_value = linsys::objective(system, &search.best_x, lambda, alphabet)?;
    Ok(DetectionResult {
        x_hat: search.best_x,
        objective_value,
        nodes_visited: search.nodes,
    })
}

fn run_search<'a>(
    tri: &'a TriangularizedSystem,
    alphabet: &'a AugmentedAlphabet,
    system: &LinearSystem,
) -> Result<Search<'a>> {
    let k = tri.num_unknowns();
    if system.num_unknowns() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: system.num_unknowns(),
        });
    }
    let mut search = Search::new(tri, alphabet);
    search.run();
    assert_eq!(search.best_x.len(), k, "sphere search ended without a leaf");
    Ok(search)
}

/// Brute-force minimiser over all `|A0|^K` candidates, used as a test oracle.
///
/// Candidates are enumerated lexicographically under the enumeration order
/// and the first one within the tie tolerance of the minimum is returned.
pub fn exhaustive_detect(system: &LinearSystem, params: &DetectionParams) -> Result<DetectionResult> {
    let alphabet = params.alphabet();
    let k = system.num_unknowns();
    let base = alphabet.augmented_size();
    let count = (base as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if count > EXHAUSTIVE_LIMIT {
        return Err(Error::EnumerationTooLarge {
            candidates: count,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let lambda = params.penalty_lambda();
    let cands = alphabet.candidates();
    let eval = |digits: &[usize]| {
        let x: Vec<f64> = digits.iter().map(|&d| cands[d]).collect();
        system.residual_sq(&x) + lambda * linsys::l0_norm(&x) as f64
    };

    let mut digits = vec![0usize; k];
    let mut min = f64::INFINITY;
    loop {
        min = min.min(eval(&digits));
        if !odometer_step(&mut digits, base) {
            break;
        }
    }

    let tol = tie_tolerance(min);
    digits.fill(0);
    let mut evaluated = 0u64;
    loop {
        evaluated += 1;
        let value = eval(&digits);
        if value <= min + tol {
            let x_hat: Vec<f64> = digits.iter().map(|&d| cands[d]).collect();
            return Ok(DetectionResult {
                x_hat,
                objective_value: value,
                nodes_visited: count as u64 + evaluated,
            });
        }
        if !odometer_step(&mut digits, base) {
            unreachable!("minimum was attained during the first pass");
        }
    }
}

// Advances a base-`base` counter whose last digit varies fastest.
fn odometer_step(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

/// Augment, factorise and search: the full BR-CS-MUD pipeline.
pub fn detect(system: &LinearSystem, params: &DetectionParams) -> Result<DetectionResult> {
    let aug = augment(system, params)?;
    let tri = factorize(&aug)?;
    sphere_detect(&tri, params.alphabet(), params.penalty_lambda(), system)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bpsk(noise_var: f64, pa: f64, omega: f64) -> DetectionParams {
        DetectionParams::new(pa, noise_var, omega, AugmentedAlphabet::bpsk()).unwrap()
    }

    fn random_system(rng: &mut ChaCha8Rng, m: usize, k: usize) -> LinearSystem {
        let t = Matrix::from_fn(m, k, |_, _| rng.random_range(-1.0..1.0));
        let y = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
        LinearSystem::new(t, y).unwrap()
    }

    fn all_candidates(k: usize) -> Vec<Vec<f64>> {
        let cands = AugmentedAlphabet::bpsk().candidates().to_vec();
        let mut digits = vec![0; k];
        let mut out = Vec::new();
        loop {
            out.push(digits.iter().map(|&d| cands[d]).collect());
            if !odometer_step(&mut digits, 3) {
                return out;
            }
        }
    }

    #[test]
    fn qr_of_stacked_identities() {
        let sys = LinearSystem::new(Matrix::identity(2), vec![0.3, -0.7]).unwrap();
        let aug = augment(&sys, &bpsk(0.5, 0.2, 1.0)).unwrap();
        let QrFactors { q, r } = householder_qr(aug.matrix()).unwrap();
        let s2 = 2f64.sqrt();
        assert!(r.max_abs_diff(&Matrix::from_rows(&[vec![s2, 0.0], vec![0.0, s2]]).unwrap()) < 1e-15);
        let want = Matrix::from_fn(4, 2, |i, j| if i % 2 == j { 1.0 / s2 } else { 0.0 });
        assert!(q.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn qr_reconstruction_and_orthonormality() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sys = random_system(&mut rng, 4, 8);
        let aug = augment(&sys, &bpsk(0.5, 0.2, 1.0)).unwrap();
        let QrFactors { q, r } = householder_qr(aug.matrix()).unwrap();
        assert!(q.matmul(&r).max_abs_diff(aug.matrix()) < 1e-10);
        assert!(q.transpose().matmul(&q).max_abs_diff(&Matrix::identity(8)) < 1e-10);
        for i in 0..8 {
            assert!(r[(i, i)] > 0.0);
            for j in 0..i {
                assert_eq!(r[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn qr_rejects_rank_loss_and_wide_input() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]).unwrap();
        assert_eq!(householder_qr(&a).unwrap_err(), Error::RankDeficient(1));
        assert!(householder_qr(&Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn reduced_residual_plus_constant_on_all_candidates() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sys = random_system(&mut rng, 3, 5);
        let aug = augment(&sys, &bpsk(0.5, 0.2, 1.0)).unwrap();
        let tri = factorize(&aug).unwrap();
        for x in all_candidates(5) {
            let lhs = tri.reduced_residual_sq(&x) + tri.residual_const();
            assert!((lhs - aug.residual_sq(&x)).abs() < 1e-9);
        }
    }

    #[test]
    fn two_user_examples_flip_with_bayes_factor() {
        let sys = LinearSystem::new(Matrix::identity(2), vec![0.9, 0.1]).unwrap();

        let conservative = bpsk(0.25, 0.2, 1.0);
        let res = detect(&sys, &conservative).unwrap();
        assert_eq!(res.x_hat, vec![0.0, 0.0]);
        assert!((res.objective_value - 0.82).abs() < 1e-12);
        assert_eq!(exhaustive_detect(&sys, &conservative).unwrap().x_hat, res.x_hat);

        let liberal = bpsk(0.25, 0.2, 0.01);
        let lambda = liberal.penalty_lambda();
        assert!((lambda + 1.26287).abs() < 1e-5);
        let res = detect(&sys, &liberal).unwrap();
        assert_eq!(res.x_hat, vec![1.0, 1.0]);
        assert!((res.objective_value - (0.82 + 2.0 * lambda)).abs() < 1e-12);
        assert!((res.objective_value + 1.70573).abs() < 1e-5);
    }

    #[test]
    fn exhaustive_small_cases() {
        let one = |y: f64| LinearSystem::new(Matrix::identity(1), vec![y]).unwrap();
        let res = exhaustive_detect(&one(0.0), &bpsk(0.5, 0.2, 1.0)).unwrap();
        assert_eq!((res.x_hat, res.objective_value), (vec![0.0], 0.0));

        // λ = 0 exactly at Ω = p / ((1 − p)|A|) = 0.125
        let p = bpsk(0.5, 0.2, 0.125);
        assert!(p.penalty_lambda().abs() < 1e-15);
        let res = exhaustive_detect(&one(1.0), &p).unwrap();
        assert_eq!(res.x_hat, vec![1.0]);
        assert!(res.objective_value.abs() < 1e-15);
    }

    #[test]
    fn exhaustive_guard() {
        let sys = LinearSystem::new(Matrix::zeros(1, 17), vec![0.0]).unwrap();
        assert!(matches!(
            exhaustive_detect(&sys, &bpsk(1.0, 0.2, 1.0)),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn scalar_system_by_hand() {
        // T = [2], y = [2.1], σ² = 0.1, p = 0.2, BPSK, Ω = 1: λ = 0.2 ln 8
        let sys = LinearSystem::new(Matrix::from_rows(&[vec![2.0]]).unwrap(), vec![2.1]).unwrap();
        let p = bpsk(0.1, 0.2, 1.0);
        let lambda = 0.2 * 8f64.ln();
        let table = [(0.0, 4.41), (-1.0, 16.81 + lambda), (1.0, 0.01 + lambda)];
        let best = table.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        let res = detect(&sys, &p).unwrap();
        assert_eq!(res.x_hat, vec![best.0]);
        assert!((res.objective_value - best.1).abs() < 1e-12);
    }

    #[test]
    fn exact_ties_resolve_to_enumeration_order() {
        // y = 0, T = I, λ = −1: every candidate scores −‖x‖₀ + ‖x‖₀ = 0.
        // Ω solves 2σ² ln(Ω·8) = −1 with σ² = 0.5.
        let p = bpsk(0.5, 0.2, (-1f64).exp() / 8.0);
        assert!((p.penalty_lambda() + 1.0).abs() < 1e-12);
        for k in 1..=3 {
            let sys = LinearSystem::new(Matrix::identity(k), vec![0.0; k]).unwrap();
            assert_eq!(detect(&sys, &p).unwrap().x_hat, vec![0.0; k]);
            assert_eq!(exhaustive_detect(&sys, &p).unwrap().x_hat, vec![0.0; k]);
        }
    }

    #[test]
    fn noiseless_recovery_full_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let k = rng.random_range(1..=6);
            let m = k + rng.random_range(0..=2);
            let t = Matrix::from_fn(m, k, |_, _| rng.random_range(-1.0..1.0));
            let x: Vec<f64> = (0..k).map(|_| [0.0, -1.0, 1.0][rng.random_range(0..3)]).collect();
            let sys = LinearSystem::new(t.clone(), t.mul_vec(&x)).unwrap();
            let res = detect(&sys, &bpsk(1e-9, 0.2, 1.0)).unwrap();
            assert_eq!(res.x_hat, x);
        }
    }

    #[test]
    fn search_metrics_and_best_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let k = rng.random_range(2..=6);
            let m = rng.random_range(1..=k + 2);
            let sys = random_system(&mut rng, m, k);
            let omega = [0.01, 1.0, 100.0][rng.random_range(0..3)];
            let aug = augment(&sys, &bpsk(0.3, 0.2, omega)).unwrap();
            let tri = factorize(&aug).unwrap();
            let alphabet = AugmentedAlphabet::bpsk();
            let search = run_search(&tri, &alphabet, &sys).unwrap();
            assert!(search.best_trace.windows(2).all(|w| w[1] <= w[0]));
            // sphere metric and augmented objective differ by a constant
            let offset = match tri.penalty_mode() {
                PenaltyMode::PenalizeNonzero => 0.0,
                PenaltyMode::PenalizeZero => tri.theta() * k as f64,
            };
            let expected = aug.objective(&search.best_x) - tri.residual_const() - offset;
            assert!((search.best_metric - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn dimension_mismatch_between_factorization_and_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_system(&mut rng, 2, 3);
        let b = random_system(&mut rng, 2, 4);
        let p = bpsk(0.5, 0.2, 1.0);
        let tri = factorize(&augment(&a, &p).unwrap()).unwrap();
        assert!(sphere_detect(&tri, p.alphabet(), p.penalty_lambda(), &b).is_err());
    }

    // Coordinate-wise descent over A0 from a random start; returns a local optimum.
    fn local_search(sys: &LinearSystem, lambda: f64, rng: &mut ChaCha8Rng) -> f64 {
        let cands = [0.0, -1.0, 1.0];
        let k = sys.num_unknowns();
        let mut x: Vec<f64> = (0..k).map(|_| cands[rng.random_range(0..3)]).collect();
        let f = |x: &[f64]| sys.residual_sq(x) + lambda * linsys::l0_norm(x) as f64;
        let mut best = f(&x);
        loop {
            let mut improved = false;
            for i in 0..k {
                for &c in &cands {
                    let old = x[i];
                    x[i] = c;
                    let v = f(&x);
                    if v < best - 1e-12 {
                        best = v;
                        improved = true;
                    } else {
                        x[i] = old;
                    }
                }
            }
            if !improved {
                return best;
            }
        }
    }

    #[test]
    fn four_by_twenty_beats_local_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let k = 20;
        let t = Matrix::from_fn(4, k, |_, _| rng.random_range(-1.0..1.0) * 0.5);
        let x: Vec<f64> = (0..k)
            .map(|_| if rng.random_bool(0.2) { [-1.0, 1.0][rng.random_range(0..2)] } else { 0.0 })
            .collect();
        let noise_var = 1e-3;
        let y: Vec<f64> = t.mul_vec(&x).iter().map(|v| v + rng.random_range(-0.03..0.03)).collect();
        let sys = LinearSystem::new(t, y).unwrap();
        let p = bpsk(noise_var, 0.2, 1.0);
        let res = detect(&sys, &p).unwrap();
        assert_eq!(res.x_hat.len(), k);
        let check = linsys::objective(&sys, &res.x_hat, p.penalty_lambda(), p.alphabet()).unwrap();
        assert!((check - res.objective_value).abs() < 1e-9);
        for _ in 0..200 {
            assert!(res.objective_value <= local_search(&sys, p.penalty_lambda(), &mut rng) + 1e-9);
        }
    }
}
