use rand_distr::{Distribution, Normal};

use super::config::{LinkBudget, PhaseVector};
use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_sqrt, CMat, CVec};
use crate::rng::{rng_from_seed, SimRng};

/// CN(0, I_n) draw from an existing stream.
pub fn sample_rayleigh(n: usize, rng: &mut SimRng) -> CVec {
    let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid normal");
    CVec::from_iterator(n, (0..n).map(|_| c(normal.sample(rng), normal.sample(rng))))
}

/// CN(0, I_n) draw from its own seeded stream.
pub fn draw_rayleigh(n: usize, seed: u64) -> CVec {
    sample_rayleigh(n, &mut rng_from_seed(seed))
}

/// Optional direct BS–user links: √ρ_d,k · h_d,k is added to user k.
#[derive(Clone, Debug)]
pub struct DirectLink<'a> {
    pub rho_direct: &'a [f64],
    pub h_direct: &'a [CVec],
}

/// h_k = √ρ_k·H1·Φ·R_k^{1/2}·h2_k (+ √ρ_d,k·h_d,k).
///
/// `r_half` holds either one shared root or one per user.
pub fn effective_channel(
    h1: &CMat,
    phases: &PhaseVector,
    r_half: &[CMat],
    h2: &[CVec],
    rho: &[f64],
    direct: Option<&DirectLink<'_>>,
) -> Result<Vec<CVec>> {
    let (m, n) = h1.shape();
    let k = h2.len();
    if phases.len() != n {
        return Err(Error::invalid(format!(
            "phase vector has {} entries, H1 has {n} columns",
            phases.len()
        )));
    }
    if rho.len() != k {
        return Err(Error::invalid(format!(
            "{} SNR coefficients for {k} users",
            rho.len()
        )));
    }
    if !(r_half.len() == 1 || r_half.len() == k) {
        return Err(Error::invalid(format!(
            "expected 1 or {k} correlation roots, got {}",
            r_half.len()
        )));
    }
    if r_half.iter().any(|r| r.shape() != (n, n)) || h2.iter().any(|v| v.len() != n) {
        return Err(Error::invalid(
            "correlation roots must be NxN and h2 vectors length N",
        ));
    }
    if let Some(d) = direct {
        if d.rho_direct.len() != k
            || d.h_direct.len() != k
            || d.h_direct.iter().any(|v| v.len() != m)
        {
            return Err(Error::invalid(
                "direct links must provide K coefficients and K length-M vectors",
            ));
        }
    }
    let phi = phases.entries();
    let h = (0..k)
        .map(|u| {
            let root = if r_half.len() == 1 {
                &r_half[0]
            } else {
                &r_half[u]
            };
            let mut x = root * &h2[u];
            for (xi, p) in x.iter_mut().zip(&phi) {
                *xi *= p;
            }
            let mut hk = h1 * x * c(rho[u].sqrt(), 0.0);
            if let Some(d) = direct {
                hk += &d.h_direct[u] * c(d.rho_direct[u].sqrt(), 0.0);
            }
            hk
        })
        .collect();
    Ok(h)
}

/// h_k = Σ_l √ρ_{l,k}·H_{1,l}·Φ_l·h_{2,l,k}. The h_{2,l,k} are already
/// correlated draws (R^{1/2}·CN(0, I)).
pub fn multi_ris_channel(
    h1: &[CMat],
    phases: &[PhaseVector],
    h2: &[Vec<CVec>],
    rho: &[Vec<f64>],
) -> Result<Vec<CVec>> {
    let l = h1.len();
    if l == 0 || phases.len() != l || h2.len() != l || rho.len() != l {
        return Err(Error::invalid(format!(
            "mismatched RIS counts: {} H1, {} phase vectors, {} h2 sets, {} rho sets",
            l,
            phases.len(),
            h2.len(),
            rho.len()
        )));
    }
    let m = h1[0].nrows();
    let k = h2[0].len();
    if h1.iter().any(|h| h.nrows() != m)
        || h2.iter().any(|v| v.len() != k)
        || rho.iter().any(|r| r.len() != k)
    {
        return Err(Error::invalid("all RIS links must share M and K"));
    }
    let mut out = vec![CVec::zeros(m); k];
    for idx in 0..l {
        let n = h1[idx].ncols();
        let identity = [CMat::identity(n, n)];
        let part = effective_channel(&h1[idx], &phases[idx], &identity, &h2[idx], &rho[idx], None)?;
        for (acc, p) in out.iter_mut().zip(part) {
            *acc += p;
        }
    }
    Ok(out)
}

/// Everything that defines one draw of the RIS-assisted link.
#[derive(Clone, Debug)]
pub struct ChannelRealization {
    pub h1: CMat,
    pub r_ris: Vec<CMat>,
    pub r_half: Vec<CMat>,
    pub h2: Vec<CVec>,
    pub h: Vec<CVec>,
    pub budget: LinkBudget,
    pub phases: PhaseVector,
}

impl ChannelRealization {
    /// Builds the realization and its effective channels. `r_ris` holds one
    /// shared matrix or one per user.
    pub fn assemble(
        h1: CMat,
        r_ris: Vec<CMat>,
        h2: Vec<CVec>,
        budget: LinkBudget,
        phases: PhaseVector,
    ) -> Result<Self> {
        let r_half = r_ris
            .iter()
            .map(hermitian_sqrt)
            .collect::<Result<Vec<_>>>()?;
        let h = effective_channel(&h1, &phases, &r_half, &h2, &budget.rho, None)?;
        Ok(Self {
            h1,
            r_ris,
            r_half,
            h2,
            h,
            budget,
            phases,
        })
    }

    pub fn k(&self) -> usize {
        self.h2.len()
    }

    pub fn correlation_root(&self, user: usize) -> &CMat {
        if self.r_half.len() == 1 {
            &self.r_half[0]
        } else {
            &self.r_half[user]
        }
    }

    pub fn correlation(&self, user: usize) -> &CMat {
        if self.r_ris.len() == 1 {
            &self.r_ris[0]
        } else {
            &self.r_ris[user]
        }
    }

    /// Re-evaluates the effective channels under different phases.
    pub fn with_phases(&self, phases: PhaseVector) -> Result<Self> {
        let h = effective_channel(
            &self.h1,
            &phases,
            &self.r_half,
            &self.h2,
            &self.budget.rho,
            None,
        )?;
        Ok(Self {
            phases,
            h,
            ..self.clone()
        })
    }
}
