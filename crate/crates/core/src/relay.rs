//! Amplify-and-forward relay baselines.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, cis, frobenius_sq, norm_sq, CMat, CVec};
use crate::olp::{solve_olp, OlpSolution};
use crate::rng::SimRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelayMode {
    HalfDuplex,
    FullDuplex,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelayConfig {
    /// Relay antenna count R.
    pub antennas: usize,
    pub p_s: f64,
    pub p_r: f64,
    /// E[|h_SI,i|²] in watts.
    pub si_power: f64,
    pub mode: RelayMode,
}

impl RelayConfig {
    pub fn new(
        antennas: usize,
        p_s: f64,
        p_r: f64,
        si_power: f64,
        mode: RelayMode,
    ) -> Result<Self> {
        if antennas == 0 || (mode == RelayMode::FullDuplex && antennas < 2) {
            return Err(Error::invalid(format!(
                "{mode:?} relay cannot use {antennas} antennas"
            )));
        }
        if !(p_s >= 0.0 && p_r >= 0.0 && si_power >= 0.0) {
            return Err(Error::invalid("relay powers must be nonnegative"));
        }
        Ok(Self {
            antennas,
            p_s,
            p_r,
            si_power,
            mode,
        })
    }

    /// Antennas per direction: all R in half duplex, R/2 in full duplex.
    pub fn active_antennas(&self) -> usize {
        match self.mode {
            RelayMode::HalfDuplex => self.antennas,
            RelayMode::FullDuplex => self.antennas / 2,
        }
    }
}

/// Loop-back self-interference model: i.i.d. entries with Rician magnitude.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiModel {
    /// Ratio of specular to diffuse power.
    pub k_rice: f64,
    /// E[|entry|²] in watts.
    pub power: f64,
}

impl SiModel {
    pub fn new(k_rice: f64, power: f64) -> Result<Self> {
        if !(k_rice >= 0.0 && power >= 0.0) {
            return Err(Error::invalid("SI model needs K_rice >= 0 and power >= 0"));
        }
        Ok(Self { k_rice, power })
    }

    /// Specular part of fixed magnitude with uniform phase plus a circular
    /// Gaussian diffuse part.
    pub fn sample(&self, n: usize, rng: &mut SimRng) -> CVec {
        let los = (self.power * self.k_rice / (1.0 + self.k_rice)).sqrt();
        let diffuse_sd = (self.power / (1.0 + self.k_rice) / 2.0).sqrt();
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        CVec::from_iterator(
            n,
            (0..n).map(|_| {
                let spec = cis(rng.random_range(0.0..std::f64::consts::TAU)) * los;
                spec + c(normal.sample(rng), normal.sample(rng)) * diffuse_sd
            }),
        )
    }
}

/// Single-user two-hop links. `h1` is M × R', `h2` and `r_half` are sized
/// for the R' antennas in use.
#[derive(Clone, Copy, Debug)]
pub struct RelayLinks<'a> {
    pub h1: &'a CMat,
    pub h2: &'a CVec,
    pub r_half: &'a CMat,
    pub beta_1: f64,
    pub beta_2: f64,
    pub noise_power: f64,
}

impl RelayLinks<'_> {
    fn check(&self) -> Result<()> {
        let r = self.h1.ncols();
        if self.h2.len() != r || self.r_half.shape() != (r, r) {
            return Err(Error::invalid("relay link dimensions disagree"));
        }
        if !(self.beta_1 > 0.0 && self.beta_2 > 0.0 && self.noise_power > 0.0) {
            return Err(Error::invalid(
                "attenuations and noise power must be positive",
            ));
        }
        Ok(())
    }

    /// P_S·β_1·‖H1‖²/σ².
    pub fn gamma_r(&self, p_s: f64) -> f64 {
        p_s * self.beta_1 * frobenius_sq(self.h1) / self.noise_power
    }

    /// P_R·β_2·‖R^{1/2}h2‖²/σ².
    pub fn gamma_d(&self, p_r: f64) -> f64 {
        p_r * self.beta_2 * norm_sq(&(self.r_half * self.h2)) / self.noise_power
    }
}

/// prelog·log2(1 + γ_R·γ_D/(γ_R + γ_D + 1)).
pub fn af_rate(gamma_r: f64, gamma_d: f64, prelog: f64) -> f64 {
    prelog * (1.0 + gamma_r * gamma_d / (gamma_r + gamma_d + 1.0)).log2()
}

pub fn hd_af_rate_single(links: &RelayLinks<'_>, p_s: f64, p_r: f64) -> Result<f64> {
    links.check()?;
    Ok(af_rate(links.gamma_r(p_s), links.gamma_d(p_r), 0.5))
}

/// Full-duplex rate; the first hop SNR is limited by P_R·|h2^H·h_SI|²/‖h2‖².
pub fn fd_af_rate_single(links: &RelayLinks<'_>, p_s: f64, p_r: f64, h_si: &CVec) -> Result<f64> {
    links.check()?;
    if h_si.len() != links.h2.len() {
        return Err(Error::invalid(
            "SI vector must match the relay antennas in use",
        ));
    }
    let h2_norm = norm_sq(links.h2).sqrt();
    let leak = if h2_norm > 0.0 {
        links.h2.dotc(h_si).norm_sqr() / (h2_norm * h2_norm)
    } else {
        0.0
    };
    let gamma_r = p_s * links.beta_1 * frobenius_sq(links.h1) / (p_r * leak + links.noise_power);
    Ok(af_rate(gamma_r, links.gamma_d(p_r), 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Split {
    pub p_s: f64,
    pub p_r: f64,
    pub rate: f64,
}

/// Exhaustive search over P_S on a uniform grid of [0, P_max] with
/// P_R = P_max − P_S. Ties keep the smallest P_S.
pub fn optimal_split(
    mut rate_fn: impl FnMut(f64, f64) -> Result<f64>,
    p_max: f64,
    grid_points: usize,
) -> Result<Split> {
    if grid_points < 3 {
        return Err(Error::invalid("split grid needs at least 3 points"));
    }
    if !(p_max >= 0.0 && p_max.is_finite()) {
        return Err(Error::invalid(format!(
            "P_max must be nonnegative, got {p_max}"
        )));
    }
    let mut best: Option<Split> = None;
    for i in 0..grid_points {
        let p_s = p_max * i as f64 / (grid_points - 1) as f64;
        let p_r = (p_max - p_s).max(0.0);
        let rate = rate_fn(p_s, p_r)?;
        if best.is_none_or(|b| rate > b.rate) {
            best = Some(Split { p_s, p_r, rate });
        }
    }
    Ok(best.expect("grid is nonempty"))
}

/// Diagonal AF gains V_n = √(P_R/R)/√(β_1·P_S·‖h_1,n‖² + σ²).
pub fn af_gains(h1: &CMat, beta_1: f64, p_s: f64, p_r: f64, noise_power: f64) -> Vec<f64> {
    let r = h1.ncols() as f64;
    h1.column_iter()
        .map(|col| (p_r / r).sqrt() / (beta_1 * p_s * col.norm_squared() + noise_power).sqrt())
        .collect()
}

/// tr(V^H·(β_1·P_S·H1^H·H1 + σ²·I)·V) for diagonal V.
pub fn relay_transmit_power(h1: &CMat, v: &[f64], beta_1: f64, p_s: f64, noise_power: f64) -> f64 {
    h1.column_iter()
        .zip(v)
        .map(|(col, &g)| g * g * (beta_1 * p_s * col.norm_squared() + noise_power))
        .sum()
}

/// Multi-user relay network: BS–relay channel H1 (M × R), relay correlation
/// root, user channels h_2,k.
#[derive(Clone, Copy, Debug)]
pub struct RelayNetwork<'a> {
    pub h1: &'a CMat,
    pub r_half: &'a CMat,
    pub h2: &'a [CVec],
    pub beta_1: f64,
    pub beta_2: &'a [f64],
    pub noise_power: f64,
}

#[derive(Clone, Debug)]
pub struct RelayOlp {
    pub v: Vec<f64>,
    pub rho: Vec<f64>,
    pub tau: f64,
    pub hd_rate: f64,
    pub fd_rate: f64,
    /// `None` when either power is zero and every channel vanishes.
    pub solution: Option<OlpSolution>,
}

impl RelayNetwork<'_> {
    fn check(&self) -> Result<()> {
        let r = self.h1.ncols();
        if self.h2.is_empty() || self.h2.len() != self.beta_2.len() {
            return Err(Error::invalid(
                "need one attenuation per relay-user channel",
            ));
        }
        if self.r_half.shape() != (r, r) || self.h2.iter().any(|h| h.len() != r) {
            return Err(Error::invalid("relay network dimensions disagree"));
        }
        if !(self.beta_1 > 0.0 && self.noise_power > 0.0) || self.beta_2.iter().any(|&b| !(b > 0.0))
        {
            return Err(Error::invalid(
                "attenuations and noise power must be positive",
            ));
        }
        Ok(())
    }

    /// Effective channels h_k = √ρ_k·H1·V·R^{1/2}·h_2,k with the
    /// forwarded-noise-aware ρ_k.
    pub fn effective_channels(
        &self,
        p_s: f64,
        p_r: f64,
    ) -> Result<(Vec<f64>, Vec<f64>, Vec<CVec>)> {
        self.check()?;
        let v = af_gains(self.h1, self.beta_1, p_s, p_r, self.noise_power);
        let mut h1v = self.h1.clone();
        for (j, &g) in v.iter().enumerate() {
            h1v.column_mut(j).iter_mut().for_each(|x| *x *= g);
        }
        let mut rho = Vec::with_capacity(self.h2.len());
        let mut h = Vec::with_capacity(self.h2.len());
        for (h2k, &b2) in self.h2.iter().zip(self.beta_2) {
            let mut fwd = self.r_half * h2k;
            let forwarded = fwd
                .iter()
                .zip(&v)
                .map(|(z, g)| g * g * z.norm_sqr())
                .sum::<f64>();
            let rk = self.beta_1 * b2 / (self.noise_power * (1.0 + b2 * forwarded));
            fwd = &h1v * fwd;
            h.push(fwd * c(rk.sqrt(), 0.0));
            rho.push(rk);
        }
        Ok((v, rho, h))
    }

    /// OLP over the relay-effective channels with BS budget P_S. The half
    /// duplex rate carries the ½ pre-log; full duplex assumes negligible SI.
    pub fn solve(&self, p_s: f64, p_r: f64) -> Result<RelayOlp> {
        let (v, rho, h) = self.effective_channels(p_s, p_r)?;
        let solution = if p_s > 0.0 && p_r > 0.0 {
            Some(solve_olp(&h, p_s)?)
        } else {
            None
        };
        let tau = solution.as_ref().map_or(0.0, |s| s.tau);
        Ok(RelayOlp {
            v,
            rho,
            tau,
            hd_rate: 0.5 * (1.0 + tau).log2(),
            fd_rate: (1.0 + tau).log2(),
            solution,
        })
    }

    /// Best split of `p_max` between BS and relay. Both rates are monotone in
    /// τ, so one search serves both modes.
    pub fn best_split(&self, p_max: f64, grid_points: usize) -> Result<(Split, RelayOlp)> {
        let split = optimal_split(|p_s, p_r| Ok(self.solve(p_s, p_r)?.tau), p_max, grid_points)?;
        let out = self.solve(split.p_s, split.p_r)?;
        Ok((split, out))
    }
}
