//! Spatial correlation at a linear array under Laplace-distributed elevation
//! and von Mises-distributed azimuth angles.
//!
//! The expectation is estimated by Monte Carlo. Because the estimate is an
//! average of rank-one terms a(u)·a(u)^H it is Hermitian PSD with unit
//! diagonal up to round-off; it is still symmetrized and clipped before use.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, cis, clip_psd, CMat, C64};
use crate::rng::{rng_from_seed, SimRng};

pub const DEFAULT_SAMPLE_COUNT: usize = 10_000;

/// Angular spreads around the mean departure angles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AngularSpread {
    /// Standard deviation of the Laplace elevation distribution, degrees.
    /// Zero gives a point mass.
    pub laplace_spread_deg: f64,
    /// Von Mises concentration of the azimuth. `f64::INFINITY` gives a point
    /// mass.
    pub vonmises_kappa: f64,
}

impl Default for AngularSpread {
    fn default() -> Self {
        Self {
            laplace_spread_deg: 8.0,
            vonmises_kappa: 5.0,
        }
    }
}

impl AngularSpread {
    pub fn point_mass() -> Self {
        Self {
            laplace_spread_deg: 0.0,
            vonmises_kappa: f64::INFINITY,
        }
    }
}

/// Laplace draw with the given mean and standard deviation, folded into [0, π].
pub fn sample_laplace_elevation(rng: &mut SimRng, mean: f64, std_dev: f64) -> f64 {
    if std_dev == 0.0 {
        return fold_elevation(mean);
    }
    let scale = std_dev / std::f64::consts::SQRT_2;
    let u: f64 = rng.random_range(-0.5..0.5);
    let x = mean - scale * u.signum() * (1.0 - 2.0 * u.abs()).ln();
    fold_elevation(x)
}

fn fold_elevation(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t > PI {
        TAU - t
    } else {
        t
    }
}

/// Von Mises draw (Best & Fisher rejection sampler).
pub fn sample_von_mises(rng: &mut SimRng, mean: f64, kappa: f64) -> f64 {
    if kappa.is_infinite() {
        return mean;
    }
    if kappa < 1e-8 {
        return rng.random_range(-PI..PI) + mean;
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let cc = kappa * (r - f);
        let u2: f64 = rng.random();
        if cc * (2.0 - cc) - u2 > 0.0 || (cc / u2).ln() + 1.0 - cc >= 0.0 {
            let u3: f64 = rng.random();
            let sign = if u3 > 0.5 { 1.0 } else { -1.0 };
            return mean + sign * f.clamp(-1.0, 1.0).acos();
        }
    }
}

/// Toeplitz lags c_Δ = E[exp(j·2π·spacing·Δ·sinφ·sinθ)], Δ = 0..n.
fn lag_profile(
    n: usize,
    spacing: f64,
    mean_elevation: f64,
    mean_azimuth: f64,
    spread: AngularSpread,
    sample_count: usize,
    seed: u64,
) -> Vec<C64> {
    let mut rng = rng_from_seed(seed);
    let mut acc = vec![c(0.0, 0.0); n];
    let std_dev = spread.laplace_spread_deg.to_radians();
    for _ in 0..sample_count {
        let theta = sample_laplace_elevation(&mut rng, mean_elevation, std_dev);
        let phi = sample_von_mises(&mut rng, mean_azimuth, spread.vonmises_kappa);
        let u = TAU * spacing * phi.sin() * theta.sin();
        let step = cis(u);
        let mut z = c(1.0, 0.0);
        for slot in acc.iter_mut() {
            *slot += z;
            z *= step;
        }
    }
    let inv = 1.0 / sample_count as f64;
    acc.into_iter().map(|z| z * inv).collect()
}

/// Correlation matrix of an `n`-element linear array, estimated from
/// `sample_count` angle draws. Entry (n, n') averages
/// exp(j·2π·spacing·(n − n')·sinφ·sinθ).
pub fn correlation_matrix(
    n: usize,
    spacing: f64,
    mean_elevation: f64,
    mean_azimuth: f64,
    spread: AngularSpread,
    sample_count: usize,
    seed: u64,
) -> Result<CMat> {
    if n == 0 || sample_count == 0 {
        return Err(Error::invalid(
            "correlation matrix needs N >= 1 and sample_count >= 1",
        ));
    }
    let lags = lag_profile(
        n,
        spacing,
        mean_elevation,
        mean_azimuth,
        spread,
        sample_count,
        seed,
    );
    let raw = CMat::from_fn(n, n, |i, j| {
        if i >= j {
            lags[i - j]
        } else {
            lags[j - i].conj()
        }
    });
    let mut out = clip_psd(&raw)?;
    // clipping only removes round-off level negative mass; restore the exact
    // unit diagonal the estimator guarantees
    for i in 0..n {
        out[(i, i)] = c(out[(i, i)].re, 0.0);
    }
    Ok(out)
}
