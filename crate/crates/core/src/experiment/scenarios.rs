//! Per-scenario trial pipelines. Each pipeline is built once per grid point
//! (geometry, correlation matrices, fixed LoS matrices) and then evaluated
//! once per trial seed.

use super::config::{ExperimentConfig, Scenario};
use crate::asymptotics::{deterministic_equivalents, DeterministicEquivalents};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_sqrt, CMat, CVec};
use crate::model::config::RIS_HEIGHT;
use crate::model::{
    correlation_matrix, direction_angles, effective_channel, full_rank_los, linear_to_db,
    multi_ris_channel, pathloss_umi, rank_one_los, sample_rayleigh, steering_vector, Geometry,
    LinkBudget, PhaseVector, Point,
};
use crate::olp::{solve_olp, solve_q_tau};
use crate::phase_opt::{initial_phases, optimize_phases_from, AscentOptions, PhaseProblem};
use crate::rankone::{
    multi_ris_bound, single_user_optimal_phases, tau_closed_form, tau_upper_bound_sample,
    RankOneLink, RisBranch,
};
use crate::relay::{
    fd_af_rate_single, hd_af_rate_single, optimal_split, RelayLinks, RelayNetwork, SiModel,
};
use crate::rng::{mix_seed, rng_from_seed, substream};

pub(crate) trait Pipeline: Send + Sync {
    fn trial(&self, seed: u64) -> Result<Vec<f64>>;
}

/// Metric names emitted by `cfg.scenario` at this grid point, in row order.
pub fn metric_names(cfg: &ExperimentConfig) -> Vec<String> {
    let fixed: &[&str] = match cfg.scenario {
        Scenario::SingleUser => &[
            "ris_snr_db",
            "ris_rate",
            "ris_rate_alt_alpha",
            "hd_rate",
            "fd_rate",
        ],
        Scenario::RankoneMultiuser => &[
            "tau_star",
            "k_tau_star",
            "k_tau_closed",
            "k_tau_upper",
            "closed_rel_err",
        ],
        Scenario::MultiRis => &["tau_star", "tau_star_db", "sinr_bound"],
        Scenario::FullrankValidate => &["tau_star", "tau_bar", "tau_rel_err"],
        Scenario::OptimizePhases => &[
            "tau_bar_opt",
            "tau_bar_com",
            "rate_opt",
            "rate_com",
            "rate_opt_alt_alpha",
            "rate_opt_mc",
            "hd_rate",
            "fd_rate",
            "ascent_iterations",
        ],
        Scenario::RelayCompare => &["hd_rate", "fd_rate", "fd_rate_no_si", "hd_p_s", "fd_p_s"],
    };
    let mut names: Vec<String> = fixed.iter().map(|s| s.to_string()).collect();
    if cfg.scenario == Scenario::FullrankValidate {
        for prefix in ["p_star", "p_bar"] {
            names.extend((1..=cfg.system.k).map(|k| format!("{prefix}_{k}")));
        }
    }
    names
}

/// Builds the pipeline for one grid point. `cfg` already carries the sweep
/// value.
pub(crate) fn prepare(cfg: &ExperimentConfig) -> Result<Box<dyn Pipeline>> {
    Ok(match cfg.scenario {
        Scenario::SingleUser => Box::new(SingleUser::new(cfg)?),
        Scenario::RankoneMultiuser => Box::new(RankOneMulti::new(cfg)?),
        Scenario::MultiRis => Box::new(MultiRis::new(cfg)?),
        Scenario::FullrankValidate => Box::new(FullRank::new(cfg)?),
        Scenario::OptimizePhases => Box::new(OptimizePhases::new(cfg)?),
        Scenario::RelayCompare => Box::new(SingleUserRelay::new(cfg)?),
    })
}

/// Center-of-means phases: θ_n = 2π·n·d_RIS·sin(θ̄)·sin(μ̄), n = 0..N−1,
/// with θ̄ and μ̄ the arithmetic means of the users' mean angles.
pub fn com_phases(
    n: usize,
    d_ris: f64,
    mean_elevations: &[f64],
    mean_azimuths: &[f64],
    alpha: f64,
) -> Result<PhaseVector> {
    let k = mean_elevations.len();
    if k == 0 || mean_azimuths.len() != k {
        return Err(Error::invalid(
            "need one elevation and one azimuth per user",
        ));
    }
    let theta = mean_elevations.iter().sum::<f64>() / k as f64;
    let mu = mean_azimuths.iter().sum::<f64>() / k as f64;
    let u = std::f64::consts::TAU * d_ris * theta.sin() * mu.sin();
    PhaseVector::new((0..n).map(|i| u * i as f64).collect(), alpha)
}

fn com_for(cfg: &ExperimentConfig, angles: &[(f64, f64)], alpha: f64) -> Result<PhaseVector> {
    let (el, az): (Vec<f64>, Vec<f64>) = angles.iter().copied().unzip();
    com_phases(cfg.system.n, cfg.system.d_ris, &el, &az, alpha)
}

fn mean_angles(angles: &[(f64, f64)]) -> (f64, f64) {
    let k = angles.len() as f64;
    (
        angles.iter().map(|a| a.0).sum::<f64>() / k,
        angles.iter().map(|a| a.1).sum::<f64>() / k,
    )
}

fn correlation(cfg: &ExperimentConfig, size: usize, angles: (f64, f64), seed: u64) -> Result<CMat> {
    correlation_matrix(
        size,
        cfg.system.d_ris,
        angles.0,
        angles.1,
        cfg.model.spread,
        cfg.model.correlation_samples,
        seed,
    )
}

/// Seed for a deterministic model ingredient, shared by every grid point
/// and trial of the run.
fn fixed_seed(cfg: &ExperimentConfig, tag: &str, index: u64) -> u64 {
    mix_seed(&[substream(cfg.seed, tag), index])
}

/// β_1 for the BS–(RIS or relay) hop and β_2,k for the hop to each user.
fn attenuations(
    cfg: &ExperimentConfig,
    from: &Point,
    bs: &Point,
    users: &[Point],
    gain_mid: f64,
) -> Result<(f64, Vec<f64>)> {
    let m = &cfg.model;
    let d1 = crate::model::distance(bs, from);
    let beta_1 = pathloss_umi(d1, true, m.gain_bs_dbi, gain_mid)?.linear;
    let beta_2 = users
        .iter()
        .map(|u| {
            pathloss_umi(
                crate::model::distance(from, u),
                false,
                gain_mid,
                m.gain_user_dbi,
            )
            .map(|g| g.linear)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((beta_1, beta_2))
}

fn ris_budget(cfg: &ExperimentConfig, g: &Geometry) -> Result<LinkBudget> {
    let (b1, b2) = attenuations(
        cfg,
        &g.ris_pos,
        &g.bs_pos,
        &g.user_pos,
        cfg.model.gain_ris_dbi,
    )?;
    LinkBudget::new(b1, b2, cfg.system.noise_power)
}

fn arc_geometry(cfg: &ExperimentConfig) -> Geometry {
    let mut g = Geometry::multi_user_arc(
        cfg.system.k,
        cfg.layout.arc_radius,
        cfg.layout.arc_spread_deg,
    );
    let shift = cfg.layout.ris_y - g.ris_pos[1];
    g.ris_pos[1] += shift;
    for u in &mut g.user_pos {
        u[1] += shift;
    }
    g
}

fn draw_users(n: usize, k: usize, seed: u64) -> Vec<CVec> {
    let mut rng = rng_from_seed(seed);
    (0..k).map(|_| sample_rayleigh(n, &mut rng)).collect()
}

fn rate(snr: f64) -> f64 {
    (1.0 + snr).log2()
}

/// Single-user HD/FD relay baseline at the RIS position.
struct SingleUserRelay {
    p_max: f64,
    antennas: usize,
    split_grid: usize,
    noise: f64,
    beta_1: f64,
    beta_2: f64,
    h1_hd: CMat,
    h1_fd: CMat,
    half_hd: CMat,
    half_fd: CMat,
    si: SiModel,
}

impl SingleUserRelay {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let s = &cfg.system;
        let r = cfg.relay.antennas;
        if r < 2 {
            return Err(Error::Config(
                "full-duplex baseline needs at least 2 relay antennas".into(),
            ));
        }
        let g = Geometry::single_user(cfg.layout.d_u);
        g.validate()?;
        let (beta_1, beta_2) = attenuations(
            cfg,
            &g.ris_pos,
            &g.bs_pos,
            &g.user_pos,
            cfg.model.gain_relay_dbi,
        )?;
        let bs_angles = g.bs_to_ris_angles();
        let relay_angles = g.ris_from_bs_angles();
        let user_angles = g.ris_to_user_angles()[0];
        let h1_hd = rank_one_los(s.m, r, s.d_bs, s.d_ris, bs_angles, relay_angles)?.0;
        let h1_fd = rank_one_los(s.m, r / 2, s.d_bs, s.d_ris, bs_angles, relay_angles)?.0;
        let corr_seed = fixed_seed(cfg, "relay-correlation", 0);
        Ok(Self {
            p_max: s.p_max,
            antennas: r,
            split_grid: cfg.relay.split_grid,
            noise: s.noise_power,
            beta_1,
            beta_2: beta_2[0],
            h1_hd,
            h1_fd,
            half_hd: hermitian_sqrt(&correlation(cfg, r, user_angles, corr_seed)?)?,
            half_fd: hermitian_sqrt(&correlation(cfg, r / 2, user_angles, corr_seed)?)?,
            si: SiModel::new(
                cfg.relay.si_k_rice,
                cfg.relay.si_power_factor * s.noise_power,
            )?,
        })
    }

    /// (HD split, FD split, FD rate without SI).
    fn evaluate(&self, seed: u64) -> Result<(crate::relay::Split, crate::relay::Split, f64)> {
        let half = self.antennas / 2;
        let h2 = draw_users(self.antennas, 1, substream(seed, "relay-h2")).remove(0);
        let h2_fd = draw_users(half, 1, substream(seed, "relay-h2-fd")).remove(0);
        let h_si = self
            .si
            .sample(half, &mut rng_from_seed(substream(seed, "si")));
        let hd_links = RelayLinks {
            h1: &self.h1_hd,
            h2: &h2,
            r_half: &self.half_hd,
            beta_1: self.beta_1,
            beta_2: self.beta_2,
            noise_power: self.noise,
        };
        let fd_links = RelayLinks {
            h1: &self.h1_fd,
            h2: &h2_fd,
            r_half: &self.half_fd,
            ..hd_links
        };
        let hd = optimal_split(
            |ps, pr| hd_af_rate_single(&hd_links, ps, pr),
            self.p_max,
            self.split_grid,
        )?;
        let fd = optimal_split(
            |ps, pr| fd_af_rate_single(&fd_links, ps, pr, &h_si),
            self.p_max,
            self.split_grid,
        )?;
        let zero = CVec::zeros(half);
        let fd_clean = optimal_split(
            |ps, pr| fd_af_rate_single(&fd_links, ps, pr, &zero),
            self.p_max,
            self.split_grid,
        )?;
        Ok((hd, fd, fd_clean.rate))
    }
}

impl Pipeline for SingleUserRelay {
    fn trial(&self, seed: u64) -> Result<Vec<f64>> {
        let (hd, fd, clean) = self.evaluate(seed)?;
        Ok(vec![hd.rate, fd.rate, clean, hd.p_s, fd.p_s])
    }
}

/// Single user behind a rank-one BS–RIS link with received-power optimal
/// phases and MRT.
struct SingleUser {
    m: usize,
    n: usize,
    p_max: f64,
    alpha: f64,
    alt_alpha: f64,
    rho: f64,
    b: CVec,
    r_half: CMat,
    relay: SingleUserRelay,
}

impl SingleUser {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let s = &cfg.system;
        if s.k != 1 {
            return Err(Error::Config("single-user scenario needs K = 1".into()));
        }
        let g = Geometry::single_user(cfg.layout.d_u);
        g.validate()?;
        let budget = ris_budget(cfg, &g)?;
        let (_, _, b) = rank_one_los(
            s.m,
            s.n,
            s.d_bs,
            s.d_ris,
            g.bs_to_ris_angles(),
            g.ris_from_bs_angles(),
        )?;
        let r = correlation(
            cfg,
            s.n,
            g.ris_to_user_angles()[0],
            fixed_seed(cfg, "ris-correlation", 0),
        )?;
        Ok(Self {
            m: s.m,
            n: s.n,
            p_max: s.p_max,
            alpha: s.alpha,
            alt_alpha: cfg.alt_alpha,
            rho: budget.rho[0],
            b,
            r_half: hermitian_sqrt(&r)?,
            relay: SingleUserRelay::new(cfg)?,
        })
    }
}

impl Pipeline for SingleUser {
    fn trial(&self, seed: u64) -> Result<Vec<f64>> {
        let h2 = draw_users(self.n, 1, substream(seed, "h2")).remove(0);
        let opt = single_user_optimal_phases(&self.b, &self.r_half, &h2, self.alpha)?;
        // ‖h‖² = ρ·‖a‖²·|b^H·Φ·R^{1/2}·h2|² and MRT gives SNR = P_max·‖h‖²
        let snr = self.p_max * self.rho * self.m as f64 * opt.objective;
        let snr_alt = snr * (self.alt_alpha / self.alpha).powi(2);
        let (hd, fd, _) = self.relay.evaluate(seed)?;
        Ok(vec![
            linear_to_db(snr),
            rate(snr),
            rate(snr_alt),
            hd.rate,
            fd.rate,
        ])
    }
}

/// K users behind one rank-one RIS link with CoM phases.
struct RankOneMulti {
    m: usize,
    n: usize,
    p_max: f64,
    h1: CMat,
    b: CVec,
    phases: PhaseVector,
    r_ris: Vec<CMat>,
    r_half: Vec<CMat>,
    rho: Vec<f64>,
}

impl RankOneMulti {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let s = &cfg.system;
        let g = arc_geometry(cfg);
        g.validate()?;
        let budget = ris_budget(cfg, &g)?;
        let (h1, _, b) = rank_one_los(
            s.m,
            s.n,
            s.d_bs,
            s.d_ris,
            g.bs_to_ris_angles(),
            g.ris_from_bs_angles(),
        )?;
        let angles = g.ris_to_user_angles();
        let r_ris = angles
            .iter()
            .enumerate()
            .map(|(k, &a)| correlation(cfg, s.n, a, fixed_seed(cfg, "ris-correlation", k as u64)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            m: s.m,
            n: s.n,
            p_max: s.p_max,
            phases: com_for(cfg, &angles, s.alpha)?,
            r_half: r_ris
                .iter()
                .map(hermitian_sqrt)
                .collect::<Result<Vec<_>>>()?,
            r_ris,
            h1,
            b,
            rho: budget.rho,
        })
    }
}

impl Pipeline for RankOneMulti {
    fn trial(&self, seed: u64) -> Result<Vec<f64>> {
        let k = self.rho.len();
        let h2 = draw_users(self.n, k, substream(seed, "h2"));
        let link = RankOneLink {
            m: self.m,
            b: &self.b,
            phases: &self.phases,
            r_half: &self.r_half,
            h2: &h2,
            rho: &self.rho,
        };
        let closed = tau_closed_form(&link, self.p_max)?.tau_closed;
        let h = effective_channel(&self.h1, &self.phases, &self.r_half, &h2, &self.rho, None)?;
        let tau = solve_q_tau(&h, self.p_max)?.tau;
        let upper = tau_upper_bound_sample(
            self.m,
            &self.phases,
            &self.r_ris,
            &self.rho,
            self.p_max,
            substream(seed, "bound"),
        )?;
        let kf = k as f64;
        Ok(vec![
            tau,
            kf * tau,
            kf * closed,
            kf * upper,
            (closed - tau).abs() / tau,
        ])
    }
}

/// L rank-one RISs along x serving K users.
struct MultiRis {
    n: usize,
    p_max: f64,
    a: Vec<CVec>,
    b: Vec<CVec>,
    h1: Vec<CMat>,
    phases: Vec<PhaseVector>,
    r_half: Vec<Vec<CMat>>,
    rho: Vec<Vec<f64>>,
}

impl MultiRis {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let s = &cfg.system;
        let base = arc_geometry(cfg);
        let mut out = Self {
            n: s.n,
            p_max: s.p_max,
            a: vec![],
            b: vec![],
            h1: vec![],
            phases: vec![],
            r_half: vec![],
            rho: vec![],
        };
        for (l, &x) in cfg
            .layout
            .ris_x
            .iter()
            .take(cfg.layout.ris_count)
            .enumerate()
        {
            let g = Geometry {
                ris_pos: [x, cfg.layout.ris_y, RIS_HEIGHT],
                ..base.clone()
            };
            g.validate()?;
            let (e_bs, a_bs) = direction_angles(&g.bs_pos, &g.ris_pos);
            let (e_ris, a_ris) = direction_angles(&g.ris_pos, &g.bs_pos);
            let a = steering_vector(s.m, s.d_bs, e_bs, a_bs)?;
            let b = steering_vector(s.n, s.d_ris, e_ris, a_ris)?;
            let angles = g.ris_to_user_angles();
            let roots = angles
                .iter()
                .enumerate()
                .map(|(k, &ang)| {
                    let seed = fixed_seed(cfg, "multi-ris-correlation", (l * 1000 + k) as u64);
                    hermitian_sqrt(&correlation(cfg, s.n, ang, seed)?)
                })
                .collect::<Result<Vec<_>>>()?;
            out.h1.push(&a * b.adjoint());
            out.phases.push(com_for(cfg, &angles, s.alpha)?);
            out.rho.push(ris_budget(cfg, &g)?.rho);
            out.r_half.push(roots);
            out.a.push(a);
            out.b.push(b);
        }
        Ok(out)
    }
}

impl Pipeline for MultiRis {
    fn trial(&self, seed: u64) -> Result<Vec<f64>> {
        let h2: Vec<Vec<CVec>> = self
            .r_half
            .iter()
            .enumerate()
            .map(|(l, roots)| {
                draw_users(
                    self.n,
                    roots.len(),
                    mix_seed(&[substream(seed, "h2"), l as u64]),
                )
                .into_iter()
                .zip(roots)
                .map(|(w, root)| root * w)
                .collect()
            })
            .collect();
        let h = multi_ris_channel(&self.h1, &self.phases, &h2, &self.rho)?;
        let tau = solve_q_tau(&h, self.p_max)?.tau;
        let bound = if h.len() >= 2 {
            let branches: Vec<RisBranch<'_>> = (0..self.h1.len())
                .map(|l| RisBranch {
                    a: &self.a[l],
                    b: &self.b[l],
                    phases: &self.phases[l],
                    h2: &h2[l],
                    rho: &self.rho[l],
                })
                .collect();
            multi_ris_bound(&branches, &h, self.p_max)?.bound
        } else {
            f64::NAN
        };
        Ok(vec![tau, linear_to_db(tau), bound])
    }
}

/// Full-rank BS–RIS link with a common correlation matrix and CoM phases.
/// H1 is drawn once per run so that τ̄ is a single number per grid point.
struct FullRank {
    n: usize,
    p_max: f64,
    h1: CMat,
    phases: PhaseVector,
    r_half: CMat,
    rho: Vec<f64>,
    de: DeterministicEquivalents,
}

impl FullRank {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let s = &cfg.system;
        let g = arc_geometry(cfg);
        g.validate()?;
        let budget = ris_budget(cfg, &g)?;
        let angles = g.ris_to_user_angles();
        let r = correlation(
            cfg,
            s.n,
            mean_angles(&angles),
            fixed_seed(cfg, "ris-correlation", 0),
        )?;
        let h1 = full_rank_los(s.m, s.n, s.d_bs, s.d_ris, fixed_seed(cfg, "h1", 0))?;
        let phases = com_for(cfg, &angles, s.alpha)?;
        let de = deterministic_equivalents(
            &h1,
            &phases,
            std::slice::from_ref(&r),
            &budget.rho,
            s.p_max,
            None,
        )?;
        Ok(Self {
            n: s.n,
            p_max: s.p_max,
            r_half: hermitian_sqrt(&r)?,
            h1,
            phases,
            rho: budget.rho,
            de,
        })
    }
}

impl Pipeline for FullRank {
    fn trial(&self, seed: u64) -> Result<Vec<f64>> {
        let h2 = draw_users(self.n, self.rho.len(), substream(seed, "h2"));
        let h = effective_channel(
            &self.h1,
            &self.phases,
            std::slice::from_ref(&self.r_half),
            &h2,
            &self.rho,
            None,
        )?;
        let sol = solve_olp(&h, self.p_max)?;
        let tb = self.de.tau_bar;
        let mut out = vec![sol.tau, tb, (sol.tau - tb).abs() / tb];
        out.extend(&sol.p);
        out.extend(&self.de.p_bar);
        Ok(out)
    }
}

/// Phase design by projected gradient ascent of τ̄ against CoM phases and
/// the multi-user AF relay. H1 is drawn per trial.
struct OptimizePhases {
    m: usize,
    n: usize,
    p_max: f64,
    alpha: f64,
    alt_alpha: f64,
    d_bs: f64,
    d_ris: f64,
    rho: Vec<f64>,
    r: CMat,
    r_half: CMat,
    com: CVec,
    ascent: AscentOptions,
    relay_antennas: usize,
    split_grid: usize,
    relay_half: CMat,
    relay_beta_1: f64,
    relay_beta_2: Vec<f64>,
    noise: f64,
}

impl OptimizePhases {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let s = &cfg.system;
        let g = arc_geometry(cfg);
        g.validate()?;
        let budget = ris_budget(cfg, &g)?;
        let angles = g.ris_to_user_angles();
        let mean = mean_angles(&angles);
        let r = correlation(cfg, s.n, mean, fixed_seed(cfg, "ris-correlation", 0))?;
        let relay_r = correlation(
            cfg,
            cfg.relay.antennas,
            mean,
            fixed_seed(cfg, "relay-correlation", 0),
        )?;
        let (relay_beta_1, relay_beta_2) = attenuations(
            cfg,
            &g.ris_pos,
            &g.bs_pos,
            &g.user_pos,
            cfg.model.gain_relay_dbi,
        )?;
        Ok(Self {
            m: s.m,
            n: s.n,
            p_max: s.p_max,
            alpha: s.alpha,
            alt_alpha: cfg.alt_alpha,
            d_bs: s.d_bs,
            d_ris: s.d_ris,
            rho: budget.rho,
            r_half: hermitian_sqrt(&r)?,
            r,
            com: com_for(cfg, &angles, s.alpha)?.unit_vector(),
            ascent: cfg.ascent.options(),
            relay_antennas: cfg.relay.antennas,
            split_grid: cfg.relay.split_grid,
            relay_half: hermitian_sqrt(&relay_r)?,
            relay_beta_1,
            relay_beta_2,
            noise: s.noise_power,
        })
    }
}

impl Pipeline for OptimizePhases {
    fn trial(&self, seed: u64) -> Result<Vec<f64>> {
        let k = self.rho.len();
        let h1 = full_rank_los(self.m, self.n, self.d_bs, self.d_ris, substream(seed, "h1"))?;
        let problem = PhaseProblem::new(&h1, &self.r, &self.rho, self.p_max, self.alpha)?;
        let tau_com = problem.tau_bar(&self.com, 1.0)?;
        let opt = optimize_phases_from(&problem, initial_phases(self.n), self.ascent)?;
        let alt = PhaseProblem::new(&h1, &self.r, &self.rho, self.p_max, self.alt_alpha)?;
        let opt_alt = optimize_phases_from(&alt, initial_phases(self.n), self.ascent)?;

        let h2 = draw_users(self.n, k, substream(seed, "h2"));
        let h = effective_channel(
            &h1,
            &opt.phases,
            std::slice::from_ref(&self.r_half),
            &h2,
            &self.rho,
            None,
        )?;
        let tau_mc = solve_q_tau(&h, self.p_max)?.tau;

        let relay_h1 = full_rank_los(
            self.m,
            self.relay_antennas,
            self.d_bs,
            self.d_ris,
            substream(seed, "relay-h1"),
        )?;
        let relay_h2 = draw_users(self.relay_antennas, k, substream(seed, "relay-h2"));
        let net = RelayNetwork {
            h1: &relay_h1,
            r_half: &self.relay_half,
            h2: &relay_h2,
            beta_1: self.relay_beta_1,
            beta_2: &self.relay_beta_2,
            noise_power: self.noise,
        };
        let (_, relay) = net.best_split(self.p_max, self.split_grid)?;
        Ok(vec![
            opt.tau_bar,
            tau_com,
            rate(opt.tau_bar),
            rate(tau_com),
            rate(opt_alt.tau_bar),
            rate(tau_mc),
            relay.hd_rate,
            relay.fd_rate,
            opt.iterations as f64,
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn com_single_user_and_identical_users() {
        let one = com_phases(8, 0.5, &[1.1], &[0.4], 1.0).unwrap();
        let same = com_phases(8, 0.5, &[1.1; 5], &[0.4; 5], 1.0).unwrap();
        assert_eq!(one, same);
        let u = std::f64::consts::TAU * 0.5 * 1.1f64.sin() * 0.4f64.sin();
        assert!((one.thetas[3] - (3.0 * u).rem_euclid(std::f64::consts::TAU)).abs() < 1e-12);
    }

    #[test]
    fn com_single_element_is_zero() {
        assert_eq!(
            com_phases(1, 0.5, &[1.0, 2.0], &[0.3, -0.2], 1.0)
                .unwrap()
                .thetas,
            vec![0.0]
        );
        assert!(com_phases(4, 0.5, &[], &[], 1.0).is_err());
    }

    #[test]
    fn metric_names_follow_k() {
        let mut cfg = ExperimentConfig::default_for(Scenario::FullrankValidate);
        cfg.system.k = 3;
        let names = metric_names(&cfg);
        assert_eq!(names.len(), 3 + 6);
        assert_eq!(names.last().unwrap(), "p_bar_3");
    }

    #[test]
    fn arc_geometry_is_equidistant() {
        let cfg = ExperimentConfig::default_for(Scenario::OptimizePhases);
        let g = arc_geometry(&cfg);
        let d = g.ris_user_distances();
        assert!(d.iter().all(|x| (x - d[0]).abs() < 1e-9));
        let budget = ris_budget(&cfg, &g).unwrap();
        assert!(budget
            .rho
            .iter()
            .all(|r| (r - budget.rho[0]).abs() < 1e-9 * r));
    }
}
