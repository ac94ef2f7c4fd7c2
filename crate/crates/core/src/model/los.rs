//! Line-of-sight array responses and BS–RIS channel matrices.

use std::f64::consts::{PI, TAU};

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{cis, CMat, CVec};
use crate::rng::rng_from_seed;

/// Uniform linear array response: entry m (0-based) is
/// exp(j·2π·spacing·m·sin(azimuth)·sin(elevation)). `spacing` is in wavelengths.
pub fn steering_vector(count: usize, spacing: f64, elevation: f64, azimuth: f64) -> Result<CVec> {
    if count == 0 {
        return Err(Error::invalid("steering vector needs at least one element"));
    }
    let u = TAU * spacing * azimuth.sin() * elevation.sin();
    Ok(CVec::from_iterator(
        count,
        (0..count).map(|m| cis(u * m as f64)),
    ))
}

/// Angle pair (elevation, azimuth) in radians.
pub type Angles = (f64, f64);

/// Rank-one BS–RIS channel a·b^H.
pub fn rank_one_los(
    m: usize,
    n: usize,
    d_bs: f64,
    d_ris: f64,
    bs_angles: Angles,
    ris_angles: Angles,
) -> Result<(CMat, CVec, CVec)> {
    let a = steering_vector(m, d_bs, bs_angles.0, bs_angles.1)?;
    let b = steering_vector(n, d_ris, ris_angles.0, ris_angles.1)?;
    let h1 = &a * b.adjoint();
    Ok((h1, a, b))
}

/// Full-rank LoS channel with per-column departure/arrival angles drawn from
/// the seeded stream: θ1(n) ~ U[0, π], φ1(n) ~ U[0, 2π), θ2 = π − θ1,
/// φ2 = π + φ1.
pub fn full_rank_los(m: usize, n: usize, d_bs: f64, d_ris: f64, seed: u64) -> Result<CMat> {
    if m == 0 || n == 0 {
        return Err(Error::invalid("full-rank LoS channel needs M, N >= 1"));
    }
    let mut rng = rng_from_seed(seed);
    let angles: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.random_range(0.0..PI), rng.random_range(0.0..TAU)))
        .collect();
    Ok(CMat::from_fn(m, n, |row, col| {
        let (theta1, phi1) = angles[col];
        let (theta2, phi2) = (PI - theta1, PI + phi1);
        let arg = TAU
            * (row as f64 * d_bs * theta1.sin() * phi1.sin()
                + col as f64 * d_ris * theta2.sin() * phi2.sin());
        cis(arg)
    }))
}
