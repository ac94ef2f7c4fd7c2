//! Projected gradient ascent of τ̄ over unit-modulus RIS phases.

use crate::asymptotics::{composite_covariance, tau_bar_with, xi as xi_of, TauBarOptions};
use crate::error::{Error, Result};
use crate::linalg::{c, CMat, CVec, HermitianEigen};
use crate::model::PhaseVector;

/// Problem data that stays fixed while the phases move.
#[derive(Clone, Debug)]
pub struct PhaseProblem<'a> {
    pub h1: &'a CMat,
    pub r_ris: &'a CMat,
    pub alpha: f64,
    pub xi: f64,
    pub k: usize,
}

impl<'a> PhaseProblem<'a> {
    pub fn new(h1: &'a CMat, r_ris: &'a CMat, rho: &[f64], p_max: f64, alpha: f64) -> Result<Self> {
        let n = h1.ncols();
        if r_ris.shape() != (n, n) {
            return Err(Error::invalid("R_RIS must be N x N"));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::invalid(format!(
                "alpha must lie in (0, 1], got {alpha}"
            )));
        }
        Ok(Self {
            h1,
            r_ris,
            alpha,
            xi: xi_of(rho, p_max)?,
            k: rho.len(),
        })
    }

    pub fn n(&self) -> usize {
        self.h1.ncols()
    }

    /// τ̄ at phases `v`, warm-started from `init`.
    pub fn tau_bar(&self, v: &CVec, init: f64) -> Result<f64> {
        let r = composite_covariance(self.h1, v, self.alpha, self.r_ris)?;
        let opts = TauBarOptions {
            init,
            ..Default::default()
        };
        Ok(tau_bar_with(&r, self.xi, self.k, opts)?.tau)
    }

    pub fn gradient(&self, v: &CVec, tau_bar: f64) -> Result<CVec> {
        tau_bar_gradient(v, self.alpha, self.h1, self.r_ris, self.xi, self.k, tau_bar)
    }
}

/// Complex gradient D with dτ̄ = Re(conj(D_n)·dφ_n), evaluated at a solved τ̄:
///
/// D_n = (2α/K)·[H1^H·S·H1·Φ·R_RIS]_nn / (1 − tr(R·T·R·T)/(K·(1+τ̄)²)),
/// S = T − T·R·T/(1+τ̄), T = (R/(1+τ̄) + ξ·I)^{-1}.
pub fn tau_bar_gradient(
    v: &CVec,
    alpha: f64,
    h1: &CMat,
    r_ris: &CMat,
    xi: f64,
    k: usize,
    tau_bar: f64,
) -> Result<CVec> {
    let (m, n) = h1.shape();
    if v.len() != n || r_ris.shape() != (n, n) || k == 0 {
        return Err(Error::invalid("gradient inputs disagree on N or K"));
    }
    let s1 = 1.0 + tau_bar;
    let r = composite_covariance(h1, v, alpha, r_ris)?;
    let eig = HermitianEigen::new(&r)?;
    let t = eig.reconstruct_with(|l| 1.0 / (l.max(0.0) / s1 + xi));
    let kf = k as f64;
    let tr_rtrt: f64 = eig
        .values
        .iter()
        .map(|&l| {
            let l = l.max(0.0);
            let x = l / (l / s1 + xi);
            x * x
        })
        .sum();
    let denom = 1.0 - tr_rtrt / (kf * s1 * s1);
    if !(denom > 0.0) {
        return Err(Error::Validity(format!(
            "gradient denominator is {denom:.3e}"
        )));
    }
    let trt = &t * &r * &t;
    let s = &t - trt * c(1.0 / s1, 0.0);
    // B = H1·Φ·R_RIS, column j of H1 scaled by α·v_j
    let mut h1phi = h1.clone();
    for (j, p) in v.iter().enumerate() {
        let sc = p * alpha;
        h1phi.column_mut(j).iter_mut().for_each(|x| *x *= sc);
    }
    let sb = s * (h1phi * r_ris);
    let scale = 2.0 * alpha / kf / denom;
    Ok(CVec::from_iterator(
        n,
        (0..n).map(|col| {
            let mut acc = c(0.0, 0.0);
            for row in 0..m {
                acc += h1[(row, col)].conj() * sb[(row, col)];
            }
            acc * scale
        }),
    ))
}

/// Closest unit-modulus vector: entrywise exp(j·arg), with 0 mapped to 1.
pub fn project_unit_modulus(v: &CVec) -> CVec {
    v.map(|z| {
        let r = z.norm();
        if r == 0.0 {
            c(1.0, 0.0)
        } else {
            z / r
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineSearch {
    pub initial_step: f64,
    pub shrink: f64,
    pub max_halvings: usize,
    /// Minimum increase in τ̄ for a step to count.
    pub min_gain: f64,
}

impl Default for LineSearch {
    fn default() -> Self {
        Self {
            initial_step: 1.0,
            shrink: 0.5,
            max_halvings: 30,
            min_gain: 1e-12,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub tau_bar: f64,
    pub step: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AscentState {
    pub v: CVec,
    pub tau_bar: f64,
    pub grad: CVec,
    pub step: f64,
    pub history: Vec<StepRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepOutcome {
    Accepted {
        v: CVec,
        tau_bar: f64,
        mu: f64,
    },
    /// No step size in the schedule improved τ̄.
    Converged,
}

/// Backtracking along `grad`: μ = μ₀, μ₀/2, … until
/// τ̄(project(v + μ·grad)) exceeds τ̄(v) by more than `min_gain`.
pub fn backtracking_step(
    problem: &PhaseProblem<'_>,
    state: &AscentState,
    grad: &CVec,
    search: LineSearch,
) -> Result<StepOutcome> {
    if grad.iter().all(|z| z.norm() == 0.0) {
        return Ok(StepOutcome::Converged);
    }
    let mut mu = search.initial_step;
    for _ in 0..=search.max_halvings {
        let candidate = project_unit_modulus(&(&state.v + grad * c(mu, 0.0)));
        let tau = problem.tau_bar(&candidate, state.tau_bar.max(1e-3))?;
        if tau > state.tau_bar + search.min_gain {
            return Ok(StepOutcome::Accepted {
                v: candidate,
                tau_bar: tau,
                mu,
            });
        }
        mu *= search.shrink;
    }
    Ok(StepOutcome::Converged)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AscentOptions {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub line_search: LineSearch,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            max_iterations: 500,
            line_search: LineSearch::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizedPhases {
    pub phases: PhaseVector,
    pub tau_bar: f64,
    pub initial_tau_bar: f64,
    pub iterations: usize,
    pub history: Vec<StepRecord>,
}

/// The ascent's initializer: every element at phase π/2.
pub fn initial_phases(n: usize) -> CVec {
    CVec::from_element(n, c(0.0, 1.0))
}

/// Runs the ascent from `v0` until |Δτ̄|² < ε, no step improves, or the
/// iteration budget runs out.
pub fn optimize_phases_from(
    problem: &PhaseProblem<'_>,
    v0: CVec,
    opts: AscentOptions,
) -> Result<OptimizedPhases> {
    if v0.len() != problem.n() {
        return Err(Error::invalid("initial phase vector must have N entries"));
    }
    let v0 = project_unit_modulus(&v0);
    let tau0 = problem.tau_bar(&v0, 1.0)?;
    let mut state = AscentState {
        grad: CVec::zeros(v0.len()),
        v: v0,
        tau_bar: tau0,
        step: opts.line_search.initial_step,
        history: vec![StepRecord {
            tau_bar: tau0,
            step: 0.0,
            accepted: true,
        }],
    };
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        state.grad = problem.gradient(&state.v, state.tau_bar)?;
        match backtracking_step(problem, &state, &state.grad, opts.line_search)? {
            StepOutcome::Accepted { v, tau_bar, mu } => {
                let delta = tau_bar - state.tau_bar;
                state.v = v;
                state.tau_bar = tau_bar;
                state.step = mu;
                state.history.push(StepRecord {
                    tau_bar,
                    step: mu,
                    accepted: true,
                });
                if delta * delta < opts.epsilon {
                    break;
                }
            }
            StepOutcome::Converged => {
                state.history.push(StepRecord {
                    tau_bar: state.tau_bar,
                    step: 0.0,
                    accepted: false,
                });
                break;
            }
        }
    }
    Ok(OptimizedPhases {
        phases: PhaseVector::from_unit_vector(&state.v, problem.alpha)?,
        tau_bar: state.tau_bar,
        initial_tau_bar: tau0,
        iterations,
        history: state.history,
    })
}

/// Phase design from the standard initializer exp(jπ/2)·1.
pub fn optimize_phases(
    h1: &CMat,
    r_ris: &CMat,
    rho: &[f64],
    p_max: f64,
    alpha: f64,
    opts: AscentOptions,
) -> Result<OptimizedPhases> {
    let problem = PhaseProblem::new(h1, r_ris, rho, p_max, alpha)?;
    optimize_phases_from(&problem, initial_phases(h1.ncols()), opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cis;
    use crate::model::{correlation_matrix, full_rank_los, AngularSpread};

    fn fixture(m: usize, n: usize, seed: u64) -> (CMat, CMat) {
        (
            full_rank_los(m, n, 0.5, 0.5, seed).unwrap(),
            correlation_matrix(n, 0.5, 1.1, 0.3, AngularSpread::default(), 2000, seed + 1).unwrap(),
        )
    }

    #[test]
    fn projection_examples() {
        let v = CVec::from_vec(vec![c(3.0, 0.0), c(0.0, -2.0), c(0.0, 0.0)]);
        let p = project_unit_modulus(&v);
        assert!((p[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((p[1] - c(0.0, -1.0)).norm() < 1e-15);
        assert_eq!(p[2], c(1.0, 0.0));
        let u = CVec::from_iterator(4, (0..4).map(|i| cis(0.3 * i as f64)));
        assert!((project_unit_modulus(&u) - &u).norm() < 1e-15);
    }

    #[test]
    fn projection_is_nearest_on_a_grid() {
        let z = c(-0.4, 1.7);
        let p = project_unit_modulus(&CVec::from_element(1, z))[0];
        for i in 0..360 {
            let u = cis((i as f64).to_radians());
            assert!((p - z).norm() <= (u - z).norm() + 1e-15);
        }
    }

    #[test]
    fn zero_correlation_gives_zero_gradient() {
        let (h1, _) = fixture(4, 6, 1);
        let g = tau_bar_gradient(
            &initial_phases(6),
            1.0,
            &h1,
            &CMat::zeros(6, 6),
            0.3,
            4,
            0.0,
        )
        .unwrap();
        assert!(g.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let (m, n, k) = (6, 10, 6);
        let (h1, r_ris) = fixture(m, n, 3);
        let rho = vec![1.3; k];
        let problem = PhaseProblem::new(&h1, &r_ris, &rho, 2.0, 0.9).unwrap();
        let v = CVec::from_iterator(n, (0..n).map(|i| cis(0.4 * i as f64)));
        let tau = problem.tau_bar(&v, 1.0).unwrap();
        let g = problem.gradient(&v, tau).unwrap();
        let eps = 1e-6;
        let scale = g.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for j in 0..n {
            for (dir, part) in [(c(1.0, 0.0), g[j].re), (c(0.0, 1.0), g[j].im)] {
                let mut plus = v.clone();
                let mut minus = v.clone();
                plus[j] += dir * eps;
                minus[j] -= dir * eps;
                let fd = (problem.tau_bar(&plus, tau).unwrap()
                    - problem.tau_bar(&minus, tau).unwrap())
                    / (2.0 * eps);
                assert!((fd - part).abs() <= 1e-5 * scale, "n={j}: {fd} vs {part}");
            }
        }
    }

    #[test]
    fn ascent_is_monotone_and_improves() {
        let (h1, r_ris) = fixture(8, 16, 5);
        let out =
            optimize_phases(&h1, &r_ris, &[1.5; 8], 5.0, 1.0, AscentOptions::default()).unwrap();
        assert!(out.tau_bar >= out.initial_tau_bar);
        assert!(out.history.windows(2).all(|w| w[1].tau_bar >= w[0].tau_bar));
        assert!(out
            .phases
            .unit_vector()
            .iter()
            .all(|z| (z.norm() - 1.0).abs() < 1e-12));
        let again =
            optimize_phases(&h1, &r_ris, &[1.5; 8], 5.0, 1.0, AscentOptions::default()).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn first_step_is_accepted() {
        let (h1, r_ris) = fixture(8, 16, 11);
        let rho = [1.5; 8];
        let problem = PhaseProblem::new(&h1, &r_ris, &rho, 5.0, 1.0).unwrap();
        let v = initial_phases(16);
        let tau = problem.tau_bar(&v, 1.0).unwrap();
        let grad = problem.gradient(&v, tau).unwrap();
        let state = AscentState {
            v,
            tau_bar: tau,
            grad: grad.clone(),
            step: 1.0,
            history: vec![],
        };
        match backtracking_step(&problem, &state, &grad, LineSearch::default()).unwrap() {
            StepOutcome::Accepted { tau_bar, .. } => assert!(tau_bar > tau),
            StepOutcome::Converged => panic!("no improving step from the initializer"),
        }
        let zero = CVec::zeros(16);
        assert_eq!(
            backtracking_step(&problem, &state, &zero, LineSearch::default()).unwrap(),
            StepOutcome::Converged
        );
    }
}
