//! Max-min SINR optimal linear precoding.
//!
//! The precoder is parametrized by per-user priorities q_k that solve a
//! fixed point coupled with the minimum SINR τ. Each Picard sweep factors the
//! full matrix Q = Σ_i (q_i/K)·h_i·h_i^H + I once and recovers the
//! leave-one-out quadratic forms by Sherman–Morrison.

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};
use crate::linalg::{c, norm_sq, CMat, CVec};

/// Iteration schedule for [`solve_q_tau`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPointOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            tolerance: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QTau {
    pub q: Vec<f64>,
    pub tau: f64,
    /// d_k = (1/K)·h_k^H·Q_k^{-1}·h_k at the returned q.
    pub d: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct OlpSolution {
    pub q: Vec<f64>,
    pub tau: f64,
    pub g: CMat,
    pub p: Vec<f64>,
    pub sinr: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl OlpSolution {
    pub fn min_sinr(&self) -> f64 {
        self.sinr.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn check_channels(h: &[CVec]) -> Result<usize> {
    let k = h.len();
    if k == 0 {
        return Err(Error::invalid("need at least one user channel"));
    }
    let m = h[0].len();
    if m == 0 || h.iter().any(|v| v.len() != m) {
        return Err(Error::invalid(
            "user channels must be nonempty and share one length",
        ));
    }
    if let Some(i) = h.iter().position(|v| norm_sq(v) == 0.0) {
        return Err(Error::invalid(format!("channel of user {i} is zero")));
    }
    if h.iter()
        .any(|v| v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()))
    {
        return Err(Error::invalid("channel entries must be finite"));
    }
    Ok(m)
}

/// Σ_i w_i·h_i·h_i^H + I, optionally leaving one user out.
fn weighted_gram(h: &[CVec], weights: &[f64], skip: Option<usize>) -> CMat {
    let m = h[0].len();
    let mut q = CMat::identity(m, m);
    for (i, (hi, &w)) in h.iter().zip(weights).enumerate() {
        if Some(i) == skip || w == 0.0 {
            continue;
        }
        q.gerc(c(w, 0.0), hi, hi, c(1.0, 0.0));
    }
    q
}

fn factor(q: CMat) -> Result<Cholesky<num_complex::Complex64, nalgebra::Dyn>> {
    Cholesky::new(q)
        .ok_or_else(|| Error::DegenerateChannel("regularized Gram matrix lost definiteness".into()))
}

/// Leave-one-out solves Q_k^{-1}·h_k for every user, with the matching
/// quadratic forms h_k^H·Q_k^{-1}·h_k.
fn leave_one_out(h: &[CVec], q: &[f64]) -> Result<(Vec<CVec>, Vec<f64>)> {
    let k = h.len();
    let weights: Vec<f64> = q.iter().map(|&qi| qi / k as f64).collect();
    let chol = factor(weighted_gram(h, &weights, None))?;
    let mut dirs = Vec::with_capacity(k);
    let mut forms = Vec::with_capacity(k);
    for (u, hu) in h.iter().enumerate() {
        let x = chol.solve(hu);
        let e = hu.dotc(&x).re;
        let shrink = 1.0 - weights[u] * e;
        // Q^{-1}h_k and Q_k^{-1}h_k are parallel: Q_k^{-1}h = Q^{-1}h / (1 − c·e).
        // Near-singular downdates fall back to a direct solve.
        if shrink > 1e-6 {
            forms.push(e / shrink);
            dirs.push(x / c(shrink, 0.0));
        } else {
            let direct = factor(weighted_gram(h, &weights, Some(u)))?;
            let x = direct.solve(hu);
            forms.push(hu.dotc(&x).re);
            dirs.push(x);
        }
    }
    Ok((dirs, forms))
}

fn d_values(h: &[CVec], q: &[f64]) -> Result<Vec<f64>> {
    let k = h.len() as f64;
    Ok(leave_one_out(h, q)?.1.into_iter().map(|e| e / k).collect())
}

/// τ = K·P_max / Σ_k 1/d_k.
fn tau_from_d(d: &[f64], p_max: f64) -> f64 {
    let k = d.len() as f64;
    k * p_max / d.iter().map(|x| 1.0 / x).sum::<f64>()
}

pub fn solve_q_tau(h: &[CVec], p_max: f64) -> Result<QTau> {
    solve_q_tau_with(h, p_max, FixedPointOptions::default())
}

/// Fixed point q = τ(q)/d(q) from q = 1, by Anderson-accelerated Picard
/// iteration on log q. Accelerated steps that blow the residual up reset the
/// history and fall back to the plain Picard step.
pub fn solve_q_tau_with(h: &[CVec], p_max: f64, opts: FixedPointOptions) -> Result<QTau> {
    check_channels(h)?;
    if !(p_max > 0.0 && p_max.is_finite()) {
        return Err(Error::invalid(format!(
            "P_max must be positive, got {p_max}"
        )));
    }
    let k = h.len();
    let picard = |q: &[f64]| -> Result<(Vec<f64>, Vec<f64>, f64)> {
        let d = d_values(h, q)?;
        let tau = tau_from_d(&d, p_max);
        Ok((d.iter().map(|di| tau / di).collect(), d, tau))
    };
    let mut x: Vec<f64> = vec![0.0; k];
    let mut history: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let mut best = f64::INFINITY;
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let q: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let (next, d, tau) = picard(&q)?;
        residual = q
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs() / b)
            .fold(0.0, f64::max);
        if residual <= opts.tolerance {
            return Ok(QTau {
                q: next,
                tau,
                d,
                iterations: it,
                residual,
            });
        }
        let g: Vec<f64> = next.iter().map(|v| v.ln()).collect();
        if !(residual < 10.0 * best) {
            history.clear();
        }
        best = best.min(residual);
        history.push((x.clone(), g.clone()));
        if history.len() > ANDERSON_DEPTH + 1 {
            history.remove(0);
        }
        x = anderson_step(&history).unwrap_or(g);
    }
    Err(Error::Convergence {
        what: "max-min SINR fixed point",
        iterations: opts.max_iterations,
        residual,
    })
}

const ANDERSON_DEPTH: usize = 5;

/// Anderson extrapolation from (x_i, g(x_i)) pairs, oldest first. `None`
/// when there is no history yet or the step is not finite.
fn anderson_step(history: &[(Vec<f64>, Vec<f64>)]) -> Option<Vec<f64>> {
    let m = history.len().checked_sub(1).filter(|&m| m > 0)?;
    let k = history[0].0.len();
    let f = |i: usize| -> Vec<f64> {
        history[i]
            .1
            .iter()
            .zip(&history[i].0)
            .map(|(g, x)| g - x)
            .collect()
    };
    let f_last = f(m);
    let mut df = DMatrix::<f64>::zeros(k, m);
    let mut dg = DMatrix::<f64>::zeros(k, m);
    for j in 0..m {
        let (fa, fb) = (f(j), f(j + 1));
        for r in 0..k {
            df[(r, j)] = fb[r] - fa[r];
            dg[(r, j)] = history[j + 1].1[r] - history[j].1[r];
        }
    }
    let rhs = nalgebra::DVector::from_vec(f_last);
    let gamma = df.svd(true, true).solve(&rhs, 1e-12).ok()?;
    let step = &dg * gamma;
    let out: Vec<f64> = history[m]
        .1
        .iter()
        .zip(step.iter())
        .map(|(g, s)| g - s)
        .collect();
    out.iter().all(|v| v.is_finite()).then_some(out)
}

/// Column k is Q_k^{-1}·h_k normalized to unit length.
pub fn precoder(h: &[CVec], q: &[f64]) -> Result<CMat> {
    let m = check_channels(h)?;
    if q.len() != h.len() || q.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::invalid(
            "precoder needs K strictly positive priorities",
        ));
    }
    let (dirs, _) = leave_one_out(h, q)?;
    let mut g = CMat::zeros(m, h.len());
    for (col, x) in dirs.iter().enumerate() {
        let n = x.norm();
        g.set_column(col, &(x / c(n, 0.0)));
    }
    Ok(g)
}

/// |h_k^H g_i|² / K for all (k, i).
fn gain_matrix(h: &[CVec], g: &CMat) -> DMatrix<f64> {
    let k = h.len();
    DMatrix::from_fn(k, k, |row, col| {
        h[row].dotc(&g.column(col)).norm_sqr() / k as f64
    })
}

/// Powers that equalize every SINR at `tau` for the precoder `g`:
/// p = (I − τ·D·F)^{-1}·τ·D·1.
pub fn optimal_powers(h: &[CVec], g: &CMat, tau: f64) -> Result<Vec<f64>> {
    check_channels(h)?;
    let k = h.len();
    if g.ncols() != k || g.nrows() != h[0].len() {
        return Err(Error::invalid("precoder shape must be M x K"));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::invalid(format!(
            "target SINR must be positive, got {tau}"
        )));
    }
    let gains = gain_matrix(h, g);
    let dvals: Vec<f64> = (0..k).map(|i| 1.0 / gains[(i, i)]).collect();
    if dvals.iter().any(|x| !x.is_finite()) {
        return Err(Error::InfeasibleTau {
            tau,
            reason: "a precoder column is orthogonal to its own channel".into(),
        });
    }
    let mut sys = DMatrix::<f64>::identity(k, k);
    for i in 0..k {
        for j in 0..k {
            if i != j {
                sys[(i, j)] -= tau * dvals[i] * gains[(i, j)];
            }
        }
    }
    let rhs = nalgebra::DVector::from_iterator(k, dvals.iter().map(|x| tau * x));
    let p = sys.lu().solve(&rhs).ok_or_else(|| Error::InfeasibleTau {
        tau,
        reason: "I − τ·D·F is singular".into(),
    })?;
    if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InfeasibleTau {
            tau,
            reason: "spectral radius of τ·D·F is at least one (negative powers)".into(),
        });
    }
    Ok(p.iter().copied().collect())
}

/// Per-user SINR γ_k under precoder `g` and powers `p`.
pub fn sinr(h: &[CVec], g: &CMat, p: &[f64]) -> Result<Vec<f64>> {
    let k = h.len();
    if k == 0 || g.ncols() != k || p.len() != k || h.iter().any(|v| v.len() != g.nrows()) {
        return Err(Error::invalid(
            "sinr needs K channels, an M x K precoder and K powers",
        ));
    }
    let gains = gain_matrix(h, g);
    Ok((0..k)
        .map(|u| {
            let interference: f64 = (0..k)
                .filter(|&i| i != u)
                .map(|i| p[i] * gains[(u, i)])
                .sum();
            p[u] * gains[(u, u)] / (interference + 1.0)
        })
        .collect())
}

pub fn solve_olp(h: &[CVec], p_max: f64) -> Result<OlpSolution> {
    solve_olp_with(h, p_max, FixedPointOptions::default())
}

pub fn solve_olp_with(h: &[CVec], p_max: f64, opts: FixedPointOptions) -> Result<OlpSolution> {
    let fp = solve_q_tau_with(h, p_max, opts)?;
    let g = precoder(h, &fp.q)?;
    let p = optimal_powers(h, &g, fp.tau)?;
    let sinr = sinr(h, &g, &p)?;
    Ok(OlpSolution {
        q: fp.q,
        tau: fp.tau,
        g,
        p,
        sinr,
        iterations: fp.iterations,
        residual: fp.residual,
    })
}
