//! Basis pursuit de-noising baseline.
//!
//! Solves the convex relaxation `½‖y − Tx‖² + γ‖x‖₁` over `ℝ^K` by
//! accelerated proximal gradient with restart-on-increase, then maps the
//! continuous estimate onto `A ∪ {0}` by thresholding.

use crate::linsys::LinearSystem;
use crate::matrix::{dot, norm_sq};
use crate::model::AugmentedAlphabet;
use crate::{Error, Matrix, Result};

const POWER_ITERATIONS: usize = 30;
const LIPSCHITZ_SAFETY: f64 = 1.01;

pub const DEFAULT_MAX_ITERS: usize = 500;
pub const DEFAULT_REL_TOL: f64 = 1e-6;
pub const DEFAULT_QUANT_THRESHOLD: f64 = 0.5;
/// Floor for the default l1 weight, so a noise-free run stays well posed.
pub const MIN_REG_WEIGHT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct BpdnConfig {
    /// l1 weight `γ`.
    pub reg_weight: f64,
    pub max_iters: usize,
    /// Stop once `‖x_{t+1} − x_t‖ / ‖x_{t+1}‖` drops below this.
    pub rel_tol: f64,
    /// Magnitudes at or below this quantise to zero.
    pub quant_threshold: f64,
}

impl BpdnConfig {
    pub fn new(reg_weight: f64, max_iters: usize, rel_tol: f64, quant_threshold: f64) -> Result<Self> {
        let cfg = BpdnConfig {
            reg_weight,
            max_iters,
            rel_tol,
            quant_threshold,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults for a system with `k` unknowns at noise variance `noise_var`:
    /// `γ = σ √(2 ln K)` (universal threshold), 500 iterations, relative
    /// tolerance 1e-6, threshold 0.5.
    pub fn for_noise(noise_var: f64, k: usize) -> Self {
        BpdnConfig {
            reg_weight: default_reg_weight(noise_var, k),
            max_iters: DEFAULT_MAX_ITERS,
            rel_tol: DEFAULT_REL_TOL,
            quant_threshold: DEFAULT_QUANT_THRESHOLD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.reg_weight > 0.0 && self.reg_weight.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "l1 weight must be positive, got {}",
                self.reg_weight
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        if self.rel_tol.is_nan() || self.rel_tol <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        if !(self.quant_threshold > 0.0 && self.quant_threshold < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "quantisation threshold must lie in (0, 1), got {}",
                self.quant_threshold
            )));
        }
        Ok(())
    }
}

pub fn default_reg_weight(noise_var: f64, k: usize) -> f64 {
    let gamma = noise_var.max(0.0).sqrt() * (2.0 * (k.max(1) as f64).ln()).sqrt();
    gamma.max(MIN_REG_WEIGHT)
}

/// `sign(v) · max(|v| − t, 0)`.
#[inline]
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// `½‖y − Tx‖² + γ‖x‖₁`.
pub fn bpdn_objective(system: &LinearSystem, x: &[f64], gamma: f64) -> f64 {
    0.5 * system.residual_sq(x) + gamma * x.iter().map(|v| v.abs()).sum::<f64>()
}

/// Upper estimate of `λ_max(TᵀT)`: 30 power iterations from the all-ones
/// vector, inflated by 1%.
pub fn lipschitz_estimate(t: &Matrix) -> f64 {
    let k = t.cols();
    let mut v = vec![1.0 / (k as f64).sqrt(); k];
    let mut est = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let w = t.tr_mul_vec(&t.mul_vec(&v));
        est = norm_sq(&w).sqrt();
        if est == 0.0 {
            break;
        }
        v = w.into_iter().map(|c| c / est).collect();
    }
    if est > 0.0 {
        est * LIPSCHITZ_SAFETY
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpdnSolution {
    pub x: Vec<f64>,
    /// Objective after every accepted iterate, starting with `x = 0`.
    /// Nonincreasing; accumulated from per-step differences.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    /// Step-size constant in use when the solver stopped.
    pub lipschitz: f64,
}

impl BpdnSolution {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace holds the starting point")
    }
}

struct Problem<'a> {
    system: &'a LinearSystem,
    gamma: f64,
}

impl Problem<'_> {
    fn smooth(&self, x: &[f64]) -> f64 {
        0.5 * self.system.residual_sq(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let t = self.system.matrix();
        let r: Vec<f64> = t
            .mul_vec(x)
            .iter()
            .zip(self.system.observation())
            .map(|(a, b)| a - b)
            .collect();
        t.tr_mul_vec(&r)
    }

    fn prox_step(&self, at: &[f64], lipschitz: f64) -> Vec<f64> {
        let g = self.gradient(at);
        at.iter()
            .zip(&g)
            .map(|(a, gi)| soft_threshold(a - gi / lipschitz, self.gamma / lipschitz))
            .collect()
    }

    // f(z) ≤ f(x) + ⟨∇f(x), z − x⟩ + L/2 ‖z − x‖²
    fn majorised(&self, x: &[f64], z: &[f64], lipschitz: f64) -> bool {
        let g = self.gradient(x);
        let d: Vec<f64> = z.iter().zip(x).map(|(a, b)| a - b).collect();
        let bound = self.smooth(x)
            + d.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>()
            + 0.5 * lipschitz * norm_sq(&d);
        self.smooth(z) <= bound + 1e-12 * bound.abs().max(1.0)
    }

    fn objective(&self, x: &[f64]) -> f64 {
        bpdn_objective(self.system, x, self.gamma)
    }

    // F(to) − F(from) from the step itself, so small decreases are not lost
    // to cancellation in ½‖y − Tx‖².
    fn change(&self, from: &[f64], to: &[f64]) -> f64 {
        let t = self.system.matrix();
        let step: Vec<f64> = to.iter().zip(from).map(|(a, b)| a - b).collect();
        let d = t.mul_vec(&step);
        let r: Vec<f64> = t
            .mul_vec(from)
            .iter()
            .zip(self.system.observation())
            .map(|(a, b)| b - a)
            .collect();
        let l1: f64 = to.iter().zip(from).map(|(a, b)| a.abs() - b.abs()).sum();
        0.5 * norm_sq(&d) - dot(&r, &d) + self.gamma * l1
    }

    // Proximal step from `at`, doubling `lipschitz` until the quadratic
    // model majorises the smooth part.
    fn backtracked_step(&self, at: &[f64], lipschitz: &mut f64) -> Vec<f64> {
        loop {
            let cand = self.prox_step(at, *lipschitz);
            if self.majorised(at, &cand, *lipschitz) {
                return cand;
            }
            *lipschitz *= 2.0;
        }
    }
}

/// Accelerated proximal gradient for BPDN, started from `x = 0`.
///
/// The step size starts at the power-iteration estimate and is doubled
/// whenever the quadratic model fails to majorise. Whenever an accelerated
/// step would raise the objective, momentum is reset and a plain proximal
/// step is taken from the current iterate instead, so the recorded
/// objectives never increase.
pub fn bpdn_solve(system: &LinearSystem, config: &BpdnConfig) -> BpdnSolution {
    let k = system.num_unknowns();
    let problem = Problem {
        system,
        gamma: config.reg_weight,
    };
    let mut lipschitz = lipschitz_estimate(system.matrix());

    let mut x = vec![0.0; k];
    let mut z = x.clone();
    let mut t = 1.0f64;
    let mut f = problem.objective(&x);
    let mut trace = vec![f];
    let mut iterations = 0;

    while iterations < config.max_iters {
        iterations += 1;
        let mut cand = problem.backtracked_step(&z, &mut lipschitz);
        let mut change = problem.change(&x, &cand);

        if change > 0.0 {
            t = 1.0;
            cand = problem.backtracked_step(&x, &mut lipschitz);
            change = problem.change(&x, &cand);
            if change > 0.0 {
                // a majorised step from x cannot increase F beyond rounding
                cand.clone_from(&x);
                change = 0.0;
            }
        }
        let f_cand = f + change;

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let momentum = (t - 1.0) / t_next;
        let delta: Vec<f64> = cand.iter().zip(&x).map(|(a, b)| a - b).collect();
        z = cand.iter().zip(&delta).map(|(c, d)| c + momentum * d).collect();
        t = t_next;

        let step = norm_sq(&delta).sqrt();
        let size = norm_sq(&cand).sqrt();
        x = cand;
        f = f_cand;
        trace.push(f);
        if step == 0.0 || (size > 0.0 && step / size < config.rel_tol) {
            break;
        }
    }

    BpdnSolution {
        x,
        objective_trace: trace,
        iterations,
        lipschitz,
    }
}

/// Zero when `|x_k| ≤ threshold`, else the nearest data symbol (ties go to
/// the smaller symbol).
pub fn quantize(x_cont: &[f64], alphabet: &AugmentedAlphabet, threshold: f64) -> Result<Vec<f64>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "quantisation threshold must lie in (0, 1), got {threshold}"
        )));
    }
    Ok(x_cont
        .iter()
        .map(|&v| {
            if v.abs() <= threshold {
                return 0.0;
            }
            let mut best = alphabet.data_symbols()[0];
            for &s in &alphabet.data_symbols()[1..] {
                if (v - s).abs() < (v - best).abs() {
                    best = s;
                }
            }
            best
        })
        .collect())
}

/// Solve then quantise.
pub fn bpdn_detect(
    system: &LinearSystem,
    config: &BpdnConfig,
    alphabet: &AugmentedAlphabet,
) -> Result<Vec<f64>> {
    config.validate()?;
    let sol = bpdn_solve(system, config);
    quantize(&sol.x, alphabet, config.quant_threshold)
}
