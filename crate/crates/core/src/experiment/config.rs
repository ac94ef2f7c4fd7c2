use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AngularSpread, SystemConfig, DEFAULT_SAMPLE_COUNT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    SingleUser,
    RankoneMultiuser,
    MultiRis,
    FullrankValidate,
    OptimizePhases,
    RelayCompare,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::SingleUser,
        Scenario::RankoneMultiuser,
        Scenario::MultiRis,
        Scenario::FullrankValidate,
        Scenario::OptimizePhases,
        Scenario::RelayCompare,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Scenario::SingleUser => "single-user",
            Scenario::RankoneMultiuser => "rankone-multiuser",
            Scenario::MultiRis => "multi-ris",
            Scenario::FullrankValidate => "fullrank-validate",
            Scenario::OptimizePhases => "optimize-phases",
            Scenario::RelayCompare => "relay-compare",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.id() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "d_u")]
    UserDistance,
    #[serde(rename = "n")]
    N,
    #[serde(rename = "m")]
    M,
    #[serde(rename = "k")]
    K,
    /// M and K moved together.
    #[serde(rename = "mk")]
    MK,
    #[serde(rename = "p_max")]
    PMax,
    /// Number of RISs in use.
    #[serde(rename = "l")]
    L,
    #[serde(rename = "alpha")]
    Alpha,
    #[serde(rename = "relay_antennas")]
    RelayAntennas,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::UserDistance => "d_u",
            SweepAxis::N => "n",
            SweepAxis::M => "m",
            SweepAxis::K => "k",
            SweepAxis::MK => "mk",
            SweepAxis::PMax => "p_max",
            SweepAxis::L => "l",
            SweepAxis::Alpha => "alpha",
            SweepAxis::RelayAntennas => "relay_antennas",
        }
    }

    fn is_count(self) -> bool {
        matches!(
            self,
            SweepAxis::N
                | SweepAxis::M
                | SweepAxis::K
                | SweepAxis::MK
                | SweepAxis::L
                | SweepAxis::RelayAntennas
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

/// Propagation and array model settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Angle draws per correlation matrix estimate.
    pub correlation_samples: usize,
    pub spread: AngularSpread,
    pub gain_bs_dbi: f64,
    pub gain_ris_dbi: f64,
    pub gain_user_dbi: f64,
    pub gain_relay_dbi: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            correlation_samples: DEFAULT_SAMPLE_COUNT,
            spread: AngularSpread::default(),
            gain_bs_dbi: 5.0,
            gain_ris_dbi: 5.0,
            gain_user_dbi: 0.0,
            gain_relay_dbi: 5.0,
        }
    }
}

/// Node placement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutParams {
    /// Single-user distance along x from the BS, meters.
    pub d_u: f64,
    /// Multi-user arc radius around the RIS ground projection, meters.
    pub arc_radius: f64,
    /// Angular width of the user arc, degrees.
    pub arc_spread_deg: f64,
    /// Candidate RIS x-positions for the multi-RIS layout, used in order.
    pub ris_x: Vec<f64>,
    pub ris_y: f64,
    /// RISs in use for the multi-RIS layout.
    pub ris_count: usize,
}

impl Default for LayoutParams {
    fn default() -> Self {
        Self {
            d_u: 60.0,
            arc_radius: 30.0,
            arc_spread_deg: 60.0,
            ris_x: vec![40.0, 30.0, 20.0, 10.0, 0.0, -10.0, -20.0, -30.0],
            ris_y: 30.0,
            ris_count: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelayParams {
    pub antennas: usize,
    /// Grid points of the P_S/P_R split search.
    pub split_grid: usize,
    pub si_k_rice: f64,
    /// E[|h_SI|²] as a multiple of the noise power.
    pub si_power_factor: f64,
}

impl Default for RelayParams {
    fn default() -> Self {
        Self {
            antennas: 8,
            split_grid: 201,
            si_k_rice: 1.0,
            si_power_factor: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AscentParams {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub initial_step: f64,
    pub shrink: f64,
    pub max_halvings: usize,
    pub min_gain: f64,
}

impl Default for AscentParams {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            max_iterations: 500,
            initial_step: 1.0,
            shrink: 0.5,
            max_halvings: 30,
            min_gain: 1e-12,
        }
    }
}

impl AscentParams {
    pub fn options(&self) -> crate::phase_opt::AscentOptions {
        crate::phase_opt::AscentOptions {
            epsilon: self.epsilon,
            max_iterations: self.max_iterations,
            line_search: crate::phase_opt::LineSearch {
                initial_step: self.initial_step,
                shrink: self.shrink,
                max_halvings: self.max_halvings,
                min_gain: self.min_gain,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub seed: u64,
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Second reflection amplitude reported next to `system.alpha`.
    pub alt_alpha: f64,
    pub sweep: Sweep,
    pub system: SystemConfig,
    pub model: ModelParams,
    pub layout: LayoutParams,
    pub relay: RelayParams,
    pub ascent: AscentParams,
}

impl ExperimentConfig {
    /// Defaults for `scenario`.
    pub fn default_for(scenario: Scenario) -> Self {
        let mut system = SystemConfig::default();
        let sweep = |axis, values: &[f64]| Sweep {
            axis,
            values: values.to_vec(),
        };
        let sweep = match scenario {
            Scenario::SingleUser => {
                system.k = 1;
                sweep(SweepAxis::N, &[8.0, 16.0, 32.0, 64.0, 128.0])
            }
            Scenario::RankoneMultiuser => sweep(SweepAxis::MK, &[10.0, 40.0, 160.0]),
            Scenario::MultiRis => {
                system.k = 5;
                sweep(SweepAxis::L, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0])
            }
            Scenario::FullrankValidate => sweep(SweepAxis::PMax, &[0.5, 1.0, 2.0, 5.0, 10.0]),
            Scenario::OptimizePhases => sweep(SweepAxis::N, &[8.0, 16.0, 32.0, 64.0, 128.0, 256.0]),
            Scenario::RelayCompare => {
                system.k = 1;
                sweep(SweepAxis::UserDistance, &[40.0, 60.0, 80.0, 100.0, 120.0])
            }
        };
        Self {
            scenario,
            seed: 1,
            trials: 100,
            out: None,
            alt_alpha: 0.8,
            sweep,
            system,
            model: ModelParams::default(),
            layout: LayoutParams::default(),
            relay: RelayParams::default(),
            ascent: AscentParams::default(),
        }
    }

    /// Parses TOML text layered over the defaults of the scenario named in
    /// the text, or of `fallback` when the text names none. Naming a
    /// scenario that contradicts `fallback` is an error.
    pub fn from_toml_str(text: &str, fallback: Option<Scenario>) -> Result<Self> {
        let user: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let named = match user.get("scenario") {
            Some(v) => Some(
                v.as_str()
                    .ok_or_else(|| Error::Config("scenario must be a string".into()))?
                    .parse::<Scenario>()?,
            ),
            None => None,
        };
        let scenario = match (named, fallback) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::Config(format!(
                    "config names scenario '{a}' but '{b}' was requested"
                )))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err(Error::Config("no scenario given".into())),
        };
        let defaults = toml::Table::try_from(Self::default_for(scenario))
            .map_err(|e| Error::Config(e.to_string()))?;
        let merged = merge(defaults, user);
        let cfg: Self = merged
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, fallback: Option<Scenario>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, fallback)
    }

    /// Canonical TOML rendering of the resolved configuration.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        let v = &self.sweep.values;
        if v.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        let up = v.windows(2).all(|w| w[1] > w[0]);
        let down = v.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(Error::Config("sweep grid must be strictly monotone".into()));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("sweep values must be finite".into()));
        }
        if self.sweep.axis.is_count() && v.iter().any(|x| x.fract() != 0.0 || *x < 1.0) {
            return Err(Error::Config(format!(
                "sweep axis {} takes positive integers",
                self.sweep.axis.name()
            )));
        }
        if !(self.alt_alpha > 0.0 && self.alt_alpha <= 1.0) {
            return Err(Error::Config("alt_alpha must lie in (0, 1]".into()));
        }
        if self.relay.split_grid < 3 || self.relay.antennas == 0 {
            return Err(Error::Config(
                "relay needs antennas >= 1 and split_grid >= 3".into(),
            ));
        }
        if self.model.correlation_samples == 0 {
            return Err(Error::Config("correlation_samples must be positive".into()));
        }
        for x in v {
            self.at(*x)?.system.validate()?;
        }
        Ok(())
    }

    /// Copy with the sweep axis set to `value`.
    pub fn at(&self, value: f64) -> Result<Self> {
        let mut c = self.clone();
        let count = value as usize;
        match self.sweep.axis {
            SweepAxis::UserDistance => c.layout.d_u = value,
            SweepAxis::N => c.system.n = count,
            SweepAxis::M => c.system.m = count,
            SweepAxis::K => c.system.k = count,
            SweepAxis::MK => {
                c.system.m = count;
                c.system.k = count;
            }
            SweepAxis::PMax => c.system.p_max = value,
            SweepAxis::L => c.layout.ris_count = count,
            SweepAxis::Alpha => c.system.alpha = value,
            SweepAxis::RelayAntennas => c.relay.antennas = count,
        }
        if c.layout.ris_count > c.layout.ris_x.len() {
            return Err(Error::Config(format!(
                "{} RISs requested but only {} positions given",
                c.layout.ris_count,
                c.layout.ris_x.len()
            )));
        }
        Ok(c)
    }
}

/// Recursive table merge; `over` wins on conflicts.
fn merge(mut base: toml::Table, over: toml::Table) -> toml::Table {
    for (k, v) in over {
        let merged = match (base.remove(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => toml::Value::Table(merge(b, o)),
            (_, v) => v,
        };
        base.insert(k, merged);
    }
    base
}
