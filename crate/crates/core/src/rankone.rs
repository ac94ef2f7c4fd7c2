//! Closed forms and bounds for a rank-one BS–RIS channel H1 = a·b^H.

use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, HermitianEigen};
use crate::model::PhaseVector;
use crate::rng::rng_from_seed;

/// The RIS-side data of a rank-one link. The BS steering vector only enters
/// through its squared norm `m` (= M for unit-modulus entries).
#[derive(Clone, Copy, Debug)]
pub struct RankOneLink<'a> {
    pub m: usize,
    pub b: &'a CVec,
    pub phases: &'a PhaseVector,
    /// One shared root or one per user.
    pub r_half: &'a [CMat],
    pub h2: &'a [CVec],
    pub rho: &'a [f64],
}

impl RankOneLink<'_> {
    fn validate(&self) -> Result<()> {
        let n = self.b.len();
        let k = self.h2.len();
        if self.m == 0 || n == 0 || k == 0 {
            return Err(Error::invalid("rank-one link needs M, N, K >= 1"));
        }
        if self.phases.len() != n || self.h2.iter().any(|v| v.len() != n) {
            return Err(Error::invalid("phase vector and h2 must have N entries"));
        }
        if self.rho.len() != k {
            return Err(Error::invalid(format!(
                "{} SNR coefficients for {k} users",
                self.rho.len()
            )));
        }
        if !(self.r_half.len() == 1 || self.r_half.len() == k)
            || self.r_half.iter().any(|r| r.shape() != (n, n))
        {
            return Err(Error::invalid(
                "expected 1 or K correlation roots of size N x N",
            ));
        }
        Ok(())
    }

    fn root(&self, user: usize) -> &CMat {
        if self.r_half.len() == 1 {
            &self.r_half[0]
        } else {
            &self.r_half[user]
        }
    }

    /// X_k = ρ_k·|b^H·Φ·R_k^{1/2}·h2_k|².
    pub fn quadratic_forms(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let phi = self.phases.entries();
        Ok((0..self.h2.len())
            .map(|u| {
                let x = self.root(u) * &self.h2[u];
                let s: num_complex::Complex64 = self
                    .b
                    .iter()
                    .zip(&phi)
                    .zip(x.iter())
                    .map(|((b, p), xi)| b.conj() * p * xi)
                    .sum();
                self.rho[u] * s.norm_sqr()
            })
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankOneResult {
    pub tau_closed: f64,
    pub z: f64,
    pub x: Vec<f64>,
    /// 1/(K−1), absent for K = 1.
    pub interference_limit: Option<f64>,
}

/// τ* = P_max / (Z + P_max·(K−1)) with Z = (1/M)·Σ_k 1/X_k.
pub fn tau_closed_form(link: &RankOneLink<'_>, p_max: f64) -> Result<RankOneResult> {
    if !(p_max > 0.0) {
        return Err(Error::invalid("P_max must be positive"));
    }
    let x = link.quadratic_forms()?;
    if let Some(u) = x.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::DegenerateChannel(format!(
            "user {u} has no RIS-assisted gain"
        )));
    }
    let k = x.len();
    let z = x.iter().map(|v| 1.0 / v).sum::<f64>() / link.m as f64;
    Ok(RankOneResult {
        tau_closed: p_max / (z + p_max * (k as f64 - 1.0)),
        z,
        x,
        interference_limit: interference_limit(k).ok(),
    })
}

pub fn interference_limit(k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::invalid("the 1/(K-1) bound needs K >= 2"));
    }
    Ok(1.0 / (k as f64 - 1.0))
}

/// σ²_{X,max} = N·max_k λ_max(Φ·R_k·Φ^H).
pub fn sigma_x_max(phases: &PhaseVector, r_ris: &[CMat]) -> Result<f64> {
    let n = phases.len();
    let phi = phases.matrix();
    let mut best = 0.0_f64;
    for r in r_ris {
        if r.shape() != (n, n) {
            return Err(Error::invalid("correlation matrices must be N x N"));
        }
        best = best.max(HermitianEigen::new(&(&phi * r * phi.adjoint()))?.max());
    }
    Ok(n as f64 * best)
}

/// Sampled upper-bound statistic τ*u built from fresh inverse-χ²₂ draws.
pub fn tau_upper_bound_sample(
    m: usize,
    phases: &PhaseVector,
    r_ris: &[CMat],
    rho: &[f64],
    p_max: f64,
    seed: u64,
) -> Result<f64> {
    let k = rho.len();
    if k == 0 || m == 0 || r_ris.is_empty() {
        return Err(Error::invalid(
            "need M >= 1, K >= 1 and at least one correlation matrix",
        ));
    }
    let rho_max = rho.iter().copied().fold(0.0, f64::max);
    let sigma = sigma_x_max(phases, r_ris)?;
    if !(rho_max > 0.0 && sigma > 0.0) {
        return Err(Error::DegenerateChannel(
            "zero SNR or zero correlation spectrum".into(),
        ));
    }
    let mut rng = rng_from_seed(seed);
    // χ²₂ is exponential with mean 2
    let chi2 = Exp::new(0.5).expect("valid rate");
    let sum_y: f64 = (0..k).map(|_| 1.0 / chi2.sample(&mut rng)).sum();
    let scale = 2.0 / (rho_max * sigma);
    Ok(p_max / (p_max * (k as f64 - 1.0) + scale * sum_y / m as f64))
}

/// One RIS of a multi-RIS rank-one deployment.
#[derive(Clone, Copy, Debug)]
pub struct RisBranch<'a> {
    pub a: &'a CVec,
    pub b: &'a CVec,
    pub phases: &'a PhaseVector,
    /// Correlated RIS–user vectors, one per user.
    pub h2: &'a [CVec],
    pub rho: &'a [f64],
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiRisBound {
    pub bound: f64,
    /// max over l ≠ l' of |a_l^H a_l'| / (‖a_l‖·‖a_l'‖).
    pub max_cross_correlation: f64,
}

/// Upper bound on τ* for orthogonal rank-one RIS branches. `h` holds the
/// assembled effective channels.
pub fn multi_ris_bound(
    branches: &[RisBranch<'_>],
    h: &[CVec],
    p_max: f64,
) -> Result<MultiRisBound> {
    let l = branches.len();
    let k = h.len();
    if l == 0 {
        return Err(Error::invalid("need at least one RIS"));
    }
    if k < 2 {
        return Err(Error::invalid(
            "bound needs K >= 2: the leave-one-out matrix is empty",
        ));
    }
    if branches
        .iter()
        .any(|br| br.h2.len() != k || br.rho.len() != k || br.phases.len() != br.b.len())
    {
        return Err(Error::invalid(
            "every RIS needs K vectors, K coefficients and N phases",
        ));
    }
    let mut cross = 0.0_f64;
    for i in 0..l {
        for j in (i + 1)..l {
            let (ai, aj) = (branches[i].a, branches[j].a);
            cross = cross.max(ai.dotc(aj).norm() / (ai.norm() * aj.norm()));
        }
    }
    if cross > 1e-8 {
        log::warn!("RIS steering vectors are not orthogonal (max normalized overlap {cross:.3e})");
    }
    let kf = k as f64;
    let max_gain = h.iter().map(|v| v.norm_squared() / kf).fold(0.0, f64::max);
    let mut best = 0.0_f64;
    for br in branches {
        let phi = br.phases.entries();
        let forms: Vec<f64> = br
            .h2
            .iter()
            .zip(br.rho)
            .map(|(v, &r)| {
                let s: num_complex::Complex64 =
                    br.b.iter()
                        .zip(&phi)
                        .zip(v.iter())
                        .map(|((b, p), x)| b.conj() * p * x)
                        .sum();
                r * s.norm_sqr()
            })
            .collect();
        let total: f64 = forms.iter().sum();
        for &f in &forms {
            let rest = (total - f) / kf;
            if rest > 0.0 {
                best = best.max(f * max_gain / rest);
            } else if f > 0.0 {
                best = f64::INFINITY;
            }
        }
    }
    Ok(MultiRisBound {
        bound: (l as f64 / kf).sqrt() * p_max.sqrt() * best.sqrt(),
        max_cross_correlation: cross,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SingleUserPhases {
    pub phases: PhaseVector,
    pub g_bar: CVec,
    /// α²·(Σ_n |ḡ_n|)².
    pub objective: f64,
}

/// ḡ_n = b_n·conj((R^{1/2}·h2)_n), so |b^H·Φ·R^{1/2}·h2| = α·|v^H·ḡ|.
pub fn g_bar(b: &CVec, r_half: &CMat, h2: &CVec) -> Result<CVec> {
    let n = b.len();
    if r_half.shape() != (n, n) || h2.len() != n {
        return Err(Error::invalid("b, R^{1/2} and h2 must share dimension N"));
    }
    let x = r_half * h2;
    Ok(CVec::from_iterator(
        n,
        b.iter().zip(x.iter()).map(|(bn, xn)| bn * xn.conj()),
    ))
}

/// Received-power maximizing phases for one user: v* = exp(j·arg ḡ).
pub fn single_user_optimal_phases(
    b: &CVec,
    r_half: &CMat,
    h2: &CVec,
    alpha: f64,
) -> Result<SingleUserPhases> {
    let g = g_bar(b, r_half, h2)?;
    let phases = PhaseVector::from_unit_vector(&g, alpha)?;
    let total: f64 = g.iter().map(|z| z.norm()).sum();
    Ok(SingleUserPhases {
        phases,
        g_bar: g,
        objective: alpha * alpha * total * total,
    })
}

/// |b^H·Φ·R^{1/2}·h2|² for arbitrary phases.
pub fn single_user_objective(b: &CVec, r_half: &CMat, h2: &CVec, phases: &PhaseVector) -> f64 {
    let x = r_half * h2;
    let phi = phases.entries();
    b.iter()
        .zip(&phi)
        .zip(x.iter())
        .map(|((bn, p), xn)| bn.conj() * p * xn)
        .sum::<num_complex::Complex64>()
        .norm_sqr()
}
