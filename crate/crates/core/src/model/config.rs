use serde::{Deserialize, Serialize};

use super::pathloss::noise_power;
use crate::error::{Error, Result};
use crate::linalg::{cis, diag, CMat, CVec, C64};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Scalar system parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    /// BS antennas.
    pub m: usize,
    /// RIS elements.
    pub n: usize,
    /// Users.
    pub k: usize,
    /// Transmit power budget in watts.
    pub p_max: f64,
    /// Noise power σ² in watts.
    pub noise_power: f64,
    /// Reflection amplitude.
    pub alpha: f64,
    /// Carrier wavelength in meters.
    pub wavelength: f64,
    /// BS element spacing in wavelengths.
    pub d_bs: f64,
    /// RIS element spacing in wavelengths.
    pub d_ris: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            m: 8,
            n: 32,
            k: 8,
            p_max: 5.0,
            noise_power: noise_power(180e3),
            alpha: 1.0,
            wavelength: SPEED_OF_LIGHT / 2.5e9,
            d_bs: 0.5,
            d_ris: 0.5,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.k == 0 {
            return Err(Error::invalid("M, N and K must be positive"));
        }
        let positive = [
            ("p_max", self.p_max),
            ("noise_power", self.noise_power),
            ("wavelength", self.wavelength),
            ("d_bs", self.d_bs),
            ("d_ris", self.d_ris),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// RIS phases θ_n together with the reflection amplitude.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseVector {
    pub thetas: Vec<f64>,
    pub alpha: f64,
}

impl PhaseVector {
    pub fn new(thetas: Vec<f64>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::invalid(format!(
                "alpha must lie in (0, 1], got {alpha}"
            )));
        }
        let thetas = thetas
            .into_iter()
            .map(|t| t.rem_euclid(std::f64::consts::TAU))
            .collect();
        Ok(Self { thetas, alpha })
    }

    pub fn zeros(n: usize, alpha: f64) -> Result<Self> {
        Self::new(vec![0.0; n], alpha)
    }

    /// Phases taken from the arguments of a complex vector (zero maps to 0).
    pub fn from_unit_vector(v: &CVec, alpha: f64) -> Result<Self> {
        Self::new(
            v.iter()
                .map(|z| if z.norm() == 0.0 { 0.0 } else { z.arg() })
                .collect(),
            alpha,
        )
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    /// Unit-modulus vector v with v_n = exp(jθ_n).
    pub fn unit_vector(&self) -> CVec {
        CVec::from_iterator(self.len(), self.thetas.iter().map(|&t| cis(t)))
    }

    /// Φ_nn = α·exp(jθ_n).
    pub fn entries(&self) -> Vec<C64> {
        self.thetas.iter().map(|&t| cis(t) * self.alpha).collect()
    }

    pub fn matrix(&self) -> CMat {
        diag(&self.entries())
    }
}

/// Per-link attenuations and the noise-normalized SNR coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkBudget {
    pub beta_1: f64,
    pub beta_2: Vec<f64>,
    pub rho: Vec<f64>,
    pub rho_direct: Option<Vec<f64>>,
}

impl LinkBudget {
    /// ρ_k = β_1·β_2,k/σ².
    pub fn new(beta_1: f64, beta_2: Vec<f64>, noise_power: f64) -> Result<Self> {
        if !(beta_1 > 0.0) || beta_2.iter().any(|&b| !(b > 0.0)) || !(noise_power > 0.0) {
            return Err(Error::invalid(
                "attenuations and noise power must be positive",
            ));
        }
        let rho = beta_2.iter().map(|b2| beta_1 * b2 / noise_power).collect();
        Ok(Self {
            beta_1,
            beta_2,
            rho,
            rho_direct: None,
        })
    }

    pub fn with_direct(mut self, rho_direct: Vec<f64>) -> Result<Self> {
        if rho_direct.len() != self.rho.len() || rho_direct.iter().any(|&r| !(r >= 0.0)) {
            return Err(Error::invalid(
                "direct-link coefficients must be K nonnegative values",
            ));
        }
        self.rho_direct = Some(rho_direct);
        Ok(self)
    }

    pub fn k(&self) -> usize {
        self.rho.len()
    }
}

pub type Point = [f64; 3];

pub fn distance(a: &Point, b: &Point) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// (elevation, azimuth) of the direction from `from` to `to`.
///
/// Elevation is the polar angle from +z. All arrays lie along the x-axis with
/// broadside towards +y, and azimuth is measured in the horizontal plane from
/// +y towards +x, so sin(elevation)·sin(azimuth) is the direction cosine on
/// the array axis.
pub fn direction_angles(from: &Point, to: &Point) -> (f64, f64) {
    let d = [to[0] - from[0], to[1] - from[1], to[2] - from[2]];
    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    let elevation = if r > 0.0 {
        (d[2] / r).clamp(-1.0, 1.0).acos()
    } else {
        0.0
    };
    (elevation, d[0].atan2(d[1]))
}

/// Node positions in meters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub bs_pos: Point,
    pub ris_pos: Point,
    pub user_pos: Vec<Point>,
}

pub const BS_HEIGHT: f64 = 25.0;
pub const RIS_HEIGHT: f64 = 40.0;
pub const USER_HEIGHT: f64 = 1.5;

impl Geometry {
    /// BS at the origin, RIS at y = 30 m, one user `d_u` meters along x.
    pub fn single_user(d_u: f64) -> Self {
        Self {
            bs_pos: [0.0, 0.0, BS_HEIGHT],
            ris_pos: [0.0, 30.0, RIS_HEIGHT],
            user_pos: vec![[d_u, 0.0, USER_HEIGHT]],
        }
    }

    /// `k` users on an arc of `radius` meters around the RIS ground
    /// projection, azimuths spread uniformly over `spread_deg` degrees and
    /// centered on the direction pointing away from the BS.
    pub fn multi_user_arc(k: usize, radius: f64, spread_deg: f64) -> Self {
        let ris = [0.0, 30.0, RIS_HEIGHT];
        let spread = spread_deg.to_radians();
        let user_pos = (0..k)
            .map(|i| {
                let frac = if k == 1 {
                    0.5
                } else {
                    i as f64 / (k - 1) as f64
                };
                let az = -spread / 2.0 + spread * frac;
                [
                    ris[0] + radius * az.sin(),
                    ris[1] + radius * az.cos(),
                    USER_HEIGHT,
                ]
            })
            .collect();
        Self {
            bs_pos: [0.0, 0.0, BS_HEIGHT],
            ris_pos: ris,
            user_pos,
        }
    }

    pub fn k(&self) -> usize {
        self.user_pos.len()
    }

    pub fn validate(&self) -> Result<()> {
        if distance(&self.bs_pos, &self.ris_pos) <= 0.0 {
            return Err(Error::invalid("BS and RIS coincide"));
        }
        for (i, u) in self.user_pos.iter().enumerate() {
            if distance(u, &self.ris_pos) <= 0.0 || distance(u, &self.bs_pos) <= 0.0 {
                return Err(Error::invalid(format!(
                    "user {i} coincides with the BS or RIS"
                )));
            }
        }
        Ok(())
    }

    pub fn bs_ris_distance(&self) -> f64 {
        distance(&self.bs_pos, &self.ris_pos)
    }

    pub fn ris_user_distances(&self) -> Vec<f64> {
        self.user_pos
            .iter()
            .map(|u| distance(&self.ris_pos, u))
            .collect()
    }

    pub fn bs_user_distances(&self) -> Vec<f64> {
        self.user_pos
            .iter()
            .map(|u| distance(&self.bs_pos, u))
            .collect()
    }

    /// (elevation, azimuth) angles of departure at the BS towards the RIS.
    pub fn bs_to_ris_angles(&self) -> (f64, f64) {
        direction_angles(&self.bs_pos, &self.ris_pos)
    }

    /// (elevation, azimuth) of arrival at the RIS from the BS.
    pub fn ris_from_bs_angles(&self) -> (f64, f64) {
        direction_angles(&self.ris_pos, &self.bs_pos)
    }

    /// Mean (elevation, azimuth) of departure from the RIS towards each user.
    pub fn ris_to_user_angles(&self) -> Vec<(f64, f64)> {
        self.user_pos
            .iter()
            .map(|u| direction_angles(&self.ris_pos, u))
            .collect()
    }
}
