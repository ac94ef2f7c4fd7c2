//! Large-system deterministic equivalents of the max-min SINR precoder.
//!
//! Everything here assumes a common RIS correlation matrix, so all users see
//! the same composite covariance R = H1·Φ·R_RIS·Φ^H·H1^H. Every trace that
//! appears collapses to a scalar function of the eigenvalues of R, which is
//! how the fixed points are solved.

use crate::error::{Error, Result};
use crate::linalg::{c, frobenius_sq, CMat, CVec, HermitianEigen};
use crate::olp;

/// Composite covariance H1·diag(α·φ)·R_RIS·diag(α·φ)^H·H1^H. `phi` need not
/// be unit-modulus.
pub fn composite_covariance(h1: &CMat, phi: &CVec, alpha: f64, r_ris: &CMat) -> Result<CMat> {
    let n = h1.ncols();
    if phi.len() != n || r_ris.shape() != (n, n) {
        return Err(Error::invalid("H1, phases and R_RIS disagree on N"));
    }
    let mut b = h1.clone();
    for (j, p) in phi.iter().enumerate() {
        let s = p * alpha;
        b.column_mut(j).iter_mut().for_each(|x| *x *= s);
    }
    let r = &b * r_ris * b.adjoint();
    Ok((&r + r.adjoint()) * c(0.5, 0.0))
}

/// ξ = (1/P_max)·(1/K)·Σ_j 1/ρ_j.
pub fn xi(rho: &[f64], p_max: f64) -> Result<f64> {
    if rho.is_empty() || rho.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::invalid("SNR coefficients must be K positive values"));
    }
    if !(p_max > 0.0 && p_max.is_finite()) {
        return Err(Error::invalid("P_max must be positive"));
    }
    Ok(rho.iter().map(|r| 1.0 / r).sum::<f64>() / rho.len() as f64 / p_max)
}

/// Rejects per-user correlation inputs that are not all the same matrix.
pub fn common_correlation(r_ris: &[CMat]) -> Result<&CMat> {
    let first = r_ris
        .first()
        .ok_or_else(|| Error::invalid("no correlation matrix given"))?;
    let scale = frobenius_sq(first).sqrt().max(f64::MIN_POSITIVE);
    for (u, r) in r_ris.iter().enumerate().skip(1) {
        if r.shape() != first.shape() || frobenius_sq(&(r - first)).sqrt() > 1e-12 * scale {
            return Err(Error::invalid(format!(
                "deterministic equivalents need a common correlation matrix; user {u} differs"
            )));
        }
    }
    Ok(first)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauBarOptions {
    pub init: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for TauBarOptions {
    fn default() -> Self {
        Self {
            init: 1.0,
            tolerance: 1e-10,
            max_iterations: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TauBarSolution {
    pub tau: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// f(τ) = (1/K)·Σ_i λ_i·(1+τ)/(λ_i + ξ·(1+τ)) and its derivative.
fn tau_map(eigs: &[f64], xi: f64, k: f64, tau: f64) -> (f64, f64) {
    let s = 1.0 + tau;
    let mut f = 0.0;
    let mut df = 0.0;
    for &l in eigs {
        let den = l + xi * s;
        f += l * s / den;
        df += l * l / (den * den);
    }
    (f / k, df / k)
}

/// Positive root of τ = f(τ) from the eigenvalues of R.
///
/// g(τ) = f(τ) − τ is concave with g(0) > 0, so Newton steps land at or to the
/// right of the root and then decrease monotonically onto it. Steps that
/// would leave (0, ∞) fall back to a plain Picard update.
pub fn tau_bar_from_eigs(
    eigs: &[f64],
    xi: f64,
    k: usize,
    opts: TauBarOptions,
) -> Result<TauBarSolution> {
    if k == 0 || !(xi > 0.0) {
        return Err(Error::invalid("need K >= 1 and xi > 0"));
    }
    let eigs: Vec<f64> = eigs.iter().map(|l| l.max(0.0)).collect();
    if eigs.iter().all(|&l| l == 0.0) {
        return Ok(TauBarSolution {
            tau: 0.0,
            iterations: 0,
            residual: 0.0,
        });
    }
    let kf = k as f64;
    let mut tau = if opts.init > 0.0 { opts.init } else { 1.0 };
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let (f, df) = tau_map(&eigs, xi, kf, tau);
        residual = (f - tau).abs();
        if residual <= opts.tolerance * 1e-3 * tau.max(1.0) {
            return Ok(TauBarSolution {
                tau,
                iterations: it,
                residual,
            });
        }
        let newton = tau - (f - tau) / (df - 1.0);
        let next = if df < 1.0 && newton > 0.0 && newton.is_finite() {
            newton
        } else {
            f
        };
        let step = (next - tau).abs();
        tau = next;
        if step <= 4.0 * f64::EPSILON * tau.max(1.0) {
            let (f, _) = tau_map(&eigs, xi, kf, tau);
            residual = (f - tau).abs();
            if residual <= opts.tolerance * tau.max(1.0) {
                return Ok(TauBarSolution {
                    tau,
                    iterations: it,
                    residual,
                });
            }
        }
    }
    Err(Error::Convergence {
        what: "deterministic-equivalent SINR fixed point",
        iterations: opts.max_iterations,
        residual,
    })
}

/// τ̄ for a composite covariance `r` and per-user SNR coefficients.
pub fn tau_bar(r: &CMat, rho: &[f64], p_max: f64) -> Result<f64> {
    let eig = HermitianEigen::new(r)?;
    Ok(tau_bar_from_eigs(
        &eig.values,
        xi(rho, p_max)?,
        rho.len(),
        TauBarOptions::default(),
    )?
    .tau)
}

pub fn tau_bar_with(r: &CMat, xi: f64, k: usize, opts: TauBarOptions) -> Result<TauBarSolution> {
    let eig = HermitianEigen::new(r)?;
    tau_bar_from_eigs(&eig.values, xi, k, opts)
}

/// τ̄ with direct links whose SNR is a fixed multiple `c` of the RIS link:
/// the composite covariance becomes R + c·I.
pub fn tau_bar_with_direct(r: &CMat, c_direct: f64, rho: &[f64], p_max: f64) -> Result<f64> {
    if !(c_direct >= 0.0) {
        return Err(Error::invalid(
            "direct-to-RIS SNR ratio must be nonnegative",
        ));
    }
    let m = r.nrows();
    tau_bar(&(r + CMat::identity(m, m) * c(c_direct, 0.0)), rho, p_max)
}

/// q̄_k = (P_max/ρ_k) / ((1/K)·Σ_j 1/ρ_j).
pub fn q_bar(rho: &[f64], p_max: f64) -> Result<Vec<f64>> {
    let harmonic = xi(rho, p_max)? * p_max;
    Ok(rho.iter().map(|r| p_max / r / harmonic).collect())
}

/// The exact precoder structure evaluated at the deterministic priorities.
pub fn asymptotic_precoder(h: &[CVec], q_bar: &[f64]) -> Result<CMat> {
    olp::precoder(h, q_bar)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerEquivalents {
    pub p_bar: Vec<f64>,
    pub zeta: f64,
    pub zeta_tilde: f64,
    pub zeta_bar: f64,
    pub t_bar: CMat,
}

/// Solves 1 = (1/M)·Σ_i λ_i/(a·λ_i + ζ) for ζ > 0, the nonzero-ζ form of
/// ζ = (1/M)·tr R·T̄(ζ) with a = τ̄/(1+τ̄).
fn solve_zeta(eigs: &[f64], m: usize, a: f64) -> Result<f64> {
    let mf = m as f64;
    let h = |z: f64| eigs.iter().map(|&l| l / (a * l + z)).sum::<f64>() / mf - 1.0;
    // h decreases in ζ; a positive root exists iff h(0+) > 0
    let rank = eigs.iter().filter(|&&l| l > 0.0).count() as f64;
    if !(rank / (mf * a) > 1.0) {
        return Err(Error::Validity(format!(
            "no positive zeta: rank(R)/M = {:.4} does not exceed tau/(1+tau) = {a:.4}",
            rank / mf
        )));
    }
    let mut lo = 0.0;
    let mut hi = eigs.iter().copied().fold(0.0, f64::max).max(1.0);
    while h(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Deterministic equivalents of the optimal powers and their auxiliaries.
pub fn p_bar(r: &CMat, rho: &[f64], p_max: f64, tau_bar: f64) -> Result<PowerEquivalents> {
    xi(rho, p_max)?;
    if !(tau_bar > 0.0) {
        return Err(Error::invalid("power equivalents need a positive tau_bar"));
    }
    let m = r.nrows();
    let kf = rho.len() as f64;
    let eig = HermitianEigen::new(r)?;
    let eigs: Vec<f64> = eig.values.iter().map(|l| l.max(0.0)).collect();
    let a = tau_bar / (1.0 + tau_bar);
    let zeta = solve_zeta(&eigs, m, a)?;
    let t: Vec<f64> = eigs.iter().map(|&l| 1.0 / (a * l / zeta + 1.0)).collect();
    let tr_rtt: f64 = eigs.iter().zip(&t).map(|(l, ti)| l * ti * ti).sum::<f64>() / kf;
    let tr_rtrt: f64 = eigs
        .iter()
        .zip(&t)
        .map(|(l, ti)| l * l * ti * ti)
        .sum::<f64>()
        / kf;
    let denom = 1.0 - tau_bar * tau_bar / (zeta * zeta * (1.0 + tau_bar).powi(2)) * tr_rtrt;
    if !(denom > 0.0) {
        return Err(Error::Validity(format!(
            "power-equivalent denominator is {denom:.3e}"
        )));
    }
    let zeta_tilde = tr_rtt / denom;
    let zeta_bar = tr_rtrt / denom;
    let p_bar = rho
        .iter()
        .map(|&rk| {
            tau_bar / (rk * zeta * zeta)
                * (p_max * rk * zeta_bar / (1.0 + tau_bar).powi(2) + zeta_tilde)
        })
        .collect();
    Ok(PowerEquivalents {
        p_bar,
        zeta,
        zeta_tilde,
        zeta_bar,
        t_bar: eig.reconstruct_with(|l| 1.0 / (a * l.max(0.0) / zeta + 1.0)),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeterministicEquivalents {
    pub tau_bar: f64,
    pub xi: f64,
    pub r: CMat,
    pub q_bar: Vec<f64>,
    pub p_bar: Vec<f64>,
    pub zeta: f64,
    pub zeta_tilde: f64,
    pub zeta_bar: f64,
    pub t_bar: CMat,
    pub c_direct: Option<f64>,
}

/// All deterministic equivalents for one phase configuration. The power
/// equivalents use R + c·I when a direct-link ratio is given.
pub fn deterministic_equivalents(
    h1: &CMat,
    phases: &crate::model::PhaseVector,
    r_ris: &[CMat],
    rho: &[f64],
    p_max: f64,
    c_direct: Option<f64>,
) -> Result<DeterministicEquivalents> {
    let r_common = common_correlation(r_ris)?;
    let mut r = composite_covariance(h1, &phases.unit_vector(), phases.alpha, r_common)?;
    if let Some(cd) = c_direct {
        if !(cd >= 0.0) {
            return Err(Error::invalid(
                "direct-to-RIS SNR ratio must be nonnegative",
            ));
        }
        let m = r.nrows();
        r += CMat::identity(m, m) * c(cd, 0.0);
    }
    let xi = xi(rho, p_max)?;
    let tau = tau_bar_with(&r, xi, rho.len(), TauBarOptions::default())?.tau;
    let powers = p_bar(&r, rho, p_max, tau)?;
    Ok(DeterministicEquivalents {
        tau_bar: tau,
        xi,
        q_bar: q_bar(rho, p_max)?,
        p_bar: powers.p_bar,
        zeta: powers.zeta,
        zeta_tilde: powers.zeta_tilde,
        zeta_bar: powers.zeta_bar,
        t_bar: powers.t_bar,
        r,
        c_direct,
    })
}
