use crate::error::{Error, Result};

/// A power gain in dB together with its linear value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathGain {
    pub db: f64,
    pub linear: f64,
}

impl PathGain {
    pub fn from_db(db: f64) -> Self {
        Self {
            db,
            linear: db_to_linear(db),
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// 3GPP UMi attenuation at 2.5 GHz. `los` selects the line-of-sight
/// variant; antenna gains are in dBi and enter once per link end.
pub fn pathloss_umi(d: f64, los: bool, g_t: f64, g_r: f64) -> Result<PathGain> {
    if !(d > 0.0) {
        return Err(Error::invalid(format!(
            "distance must be positive, got {d}"
        )));
    }
    let db = if los {
        g_t + g_r - 35.95 - 22.0 * d.log10()
    } else {
        g_t + g_r - 33.05 - 36.7 * d.log10()
    };
    Ok(PathGain::from_db(db))
}

/// Thermal noise power in watts over `bandwidth_hz`: −174 dBm/Hz + 10·log10(B).
pub fn noise_power(bandwidth_hz: f64) -> f64 {
    let dbm = -174.0 + 10.0 * bandwidth_hz.log10();
    db_to_linear(dbm - 30.0)
}
