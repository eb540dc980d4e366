//! Finite-shot coincidence counting with collision-free post-selection.
//!
//! Every shot is drawn from the full output distribution; shots landing on a
//! bunched configuration are discarded, as threshold detectors cannot tell
//! them apart from photon loss. The surviving fraction is therefore itself an
//! observable of the record.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockState, OutputDistribution};

/// Post-selected coincidence rate of the reference setup, in Hz.
pub const REFERENCE_RATE_HZ: f64 = 10_000.0;
/// Integration time per unitary of the reference setup, in seconds.
pub const REFERENCE_INTEGRATION_S: f64 = 5.0;

/// Allowed deviation from unit mass for inputs to [`distribution_fidelity`].
pub const FIDELITY_NORMALIZATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternCount {
    pub pattern: FockState,
    pub count: u64,
}

/// Coincidence counts for one implemented unitary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoincidenceRecord {
    /// One entry per collision-free pattern, in distribution order.
    pub counts: Vec<PatternCount>,
    pub total_shots: u64,
    pub unitary_id: (usize, usize),
    pub seed: u64,
}

impl CoincidenceRecord {
    pub fn count(&self, pattern: &FockState) -> u64 {
        self.counts
            .iter()
            .find(|c| &c.pattern == pattern)
            .map_or(0, |c| c.count)
    }

    /// Number of shots that survived post-selection.
    pub fn post_selected(&self) -> u64 {
        self.counts.iter().map(|c| c.count).sum()
    }

    /// Relative frequencies over the post-selected patterns.
    pub fn frequencies(&self) -> Result<Vec<(FockState, f64)>> {
        let total = self.post_selected();
        if total == 0 {
            return Err(Error::InsufficientShots);
        }
        Ok(self
            .counts
            .iter()
            .map(|c| (c.pattern.clone(), c.count as f64 / total as f64))
            .collect())
    }

    /// Fraction of all shots registering `pattern`, i.e. the estimate a
    /// number-resolving detector array would give for its probability.
    pub fn full_space_estimate(&self, pattern: &FockState) -> Result<f64> {
        if self.total_shots == 0 {
            return Err(Error::InsufficientShots);
        }
        Ok(self.count(pattern) as f64 / self.total_shots as f64)
    }
}

/// Draws `shots` outcomes from `distribution` and keeps the collision-free ones.
pub fn sample_counts(
    distribution: &OutputDistribution,
    shots: u64,
    seed: u64,
    unitary_id: (usize, usize),
) -> Result<CoincidenceRecord> {
    if shots == 0 {
        return Err(Error::InvalidConfig("shot count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut remaining = shots;
    let mut remaining_mass = 1.0f64;
    let mut counts = Vec::new();
    let last = distribution.entries().iter().rposition(|(_, p)| *p > 0.0);
    // Multinomial draw as a chain of conditional binomials.
    for (idx, (state, p)) in distribution.entries().iter().enumerate() {
        let drawn = if remaining == 0 || *p <= 0.0 {
            0
        } else if Some(idx) == last || remaining_mass <= *p {
            remaining
        } else {
            let q = (p / remaining_mass).clamp(0.0, 1.0);
            Binomial::new(remaining, q)
                .map_err(|e| Error::InvalidConfig(format!("binomial draw: {e}")))?
                .sample(&mut rng)
        };
        remaining -= drawn;
        remaining_mass -= p;
        if state.is_collision_free() {
            counts.push(PatternCount {
                pattern: state.clone(),
                count: drawn,
            });
        }
    }
    Ok(CoincidenceRecord {
        counts,
        total_shots: shots,
        unitary_id,
        seed,
    })
}

/// `CC_ψ / Σ CC` over the post-selected patterns: the sampled unbunching kernel.
pub fn estimate_kernel_entry(record: &CoincidenceRecord, psi: &FockState) -> Result<f64> {
    let total = record.post_selected();
    if total == 0 {
        return Err(Error::InsufficientShots);
    }
    Ok(record.count(psi) as f64 / total as f64)
}

/// `Σ_i sqrt(P_i^theo · P_i^exp)` over the union of supports.
pub fn distribution_fidelity(theory: &OutputDistribution, empirical: &[(FockState, f64)]) -> Result<f64> {
    let theo_total = theory.total();
    let exp_total: f64 = empirical.iter().map(|(_, p)| p).sum();
    for total in [theo_total, exp_total] {
        if (total - 1.0).abs() > FIDELITY_NORMALIZATION_TOL {
            return Err(Error::NotNormalized(total));
        }
    }
    if let Some(&(_, p)) = empirical.iter().find(|(_, p)| *p < 0.0 || !p.is_finite()) {
        return Err(Error::InvalidProbability(p));
    }
    // States missing from either side contribute zero.
    Ok(empirical
        .iter()
        .map(|(state, p)| (theory.probability(state) * p).sqrt())
        .sum())
}

/// Shots collected at `rate_hz` over `seconds`, rounded down.
pub fn shot_budget_from_time(rate_hz: f64, seconds: f64) -> Result<u64> {
    if !(rate_hz > 0.0 && seconds > 0.0) || !rate_hz.is_finite() || !seconds.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "rate and duration must be positive, got {rate_hz} Hz for {seconds} s"
        )));
    }
    Ok((rate_hz * seconds).floor() as u64)
}

/// The reference preset: 10 kHz over 5 s.
pub fn reference_shot_budget() -> u64 {
    shot_budget_from_time(REFERENCE_RATE_HZ, REFERENCE_INTEGRATION_S).expect("positive preset")
}

/// One standard deviation of a frequency estimate of `p` from `shots` draws.
pub fn multinomial_sigma(p: f64, shots: u64) -> f64 {
    (p * (1.0 - p) / shots as f64).max(0.0).sqrt()
}

/// Mixes a master seed with indices into an independent per-stream seed.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut state = splitmix(master);
    for &p in parts {
        state = splitmix(state ^ splitmix(p.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    state
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
