//! Fock states, matrix permanents and exact photon-counting statistics.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::MeshUnitary;

/// Slack below zero (and above one) that is treated as rounding noise.
pub const PROBABILITY_ROUNDING: f64 = 1e-12;

/// Tolerance on the total mass of a full output distribution.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// Photon occupation numbers over `m` modes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FockState(Vec<usize>);

impl FockState {
    pub fn new(occupations: Vec<usize>) -> Result<Self> {
        if occupations.is_empty() {
            return Err(Error::InvalidConfig("Fock state needs at least one mode".into()));
        }
        if occupations.iter().sum::<usize>() == 0 {
            return Err(Error::InvalidConfig("Fock state needs at least one photon".into()));
        }
        Ok(Self(occupations))
    }

    /// Single photons in each of `occupied` (modes may repeat) over `modes` modes.
    pub fn from_modes(modes: usize, occupied: &[usize]) -> Result<Self> {
        let mut occ = vec![0; modes];
        for &mode in occupied {
            if mode >= modes {
                return Err(Error::DimensionMismatch {
                    expected: modes,
                    found: mode + 1,
                });
            }
            occ[mode] += 1;
        }
        Self::new(occ)
    }

    /// Two photons in the first two modes, `|1,1,0,…⟩`.
    pub fn left_pair(modes: usize) -> Result<Self> {
        Self::from_modes(modes, &[0, 1])
    }

    /// Two photons in the two central modes, e.g. `|0,0,1,1,0,0⟩` for six modes.
    pub fn central_pair(modes: usize) -> Result<Self> {
        if modes < 2 {
            return Err(Error::InvalidConfig("central pair needs two modes".into()));
        }
        let upper = modes / 2;
        Self::from_modes(modes, &[upper - 1, upper])
    }

    pub fn occupations(&self) -> &[usize] {
        &self.0
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }

    pub fn photons(&self) -> usize {
        self.0.iter().sum()
    }

    /// `Π_i s_i!`, equal to one exactly when the state is collision free.
    pub fn norm_factor(&self) -> f64 {
        self.0
            .iter()
            .map(|&k| (1..=k).map(|v| v as f64).product::<f64>())
            .product()
    }

    pub fn is_collision_free(&self) -> bool {
        self.0.iter().all(|&k| k <= 1)
    }

    /// Occupied modes listed with multiplicity, ascending.
    pub fn mode_list(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(mode, &k)| std::iter::repeat_n(mode, k))
            .collect()
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, "⟩")
    }
}

/// All `n`-photon configurations over `m` modes.
///
/// States are ordered lexicographically by their ascending mode lists, so for
/// two photons the order is `(0,0), (0,1), …, (0,m−1), (1,1), …`. The full
/// space has `C(n+m−1, n)` states and the collision-free subset `C(m, n)`.
pub fn enumerate_configurations(
    modes: usize,
    photons: usize,
    collision_free_only: bool,
) -> Result<Vec<FockState>> {
    if modes == 0 || photons == 0 {
        return Err(Error::InvalidConfig(format!(
            "need m ≥ 1 and n ≥ 1, got m={modes} n={photons}"
        )));
    }
    let mut out = Vec::new();
    let mut list = Vec::with_capacity(photons);
    fill_mode_lists(modes, photons, 0, !collision_free_only, &mut list, &mut out);
    Ok(out)
}

fn fill_mode_lists(
    modes: usize,
    remaining: usize,
    start: usize,
    allow_repeat: bool,
    list: &mut Vec<usize>,
    out: &mut Vec<FockState>,
) {
    if remaining == 0 {
        out.push(FockState::from_modes(modes, list).expect("non-empty mode list"));
        return;
    }
    for mode in start..modes {
        list.push(mode);
        let next = if allow_repeat { mode } else { mode + 1 };
        fill_mode_lists(modes, remaining - 1, next, allow_repeat, list, out);
        list.pop();
    }
}

/// Number of `n`-photon states over `m` modes, `C(n+m−1, n)`.
pub fn hilbert_dimension(modes: usize, photons: usize) -> usize {
    binomial(photons + modes - 1, photons)
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Scalars the permanent is evaluated over.
pub trait PermanentScalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    const ZERO: Self;
}

impl PermanentScalar for f64 {
    const ZERO: Self = 0.0;
}

impl PermanentScalar for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
}

/// Permanent of a square matrix by Ryser's formula in Gray-code order,
/// `O(2^q · q)` operations.
pub fn permanent<T>(a: &DMatrix<T>) -> Result<T>
where
    T: PermanentScalar + nalgebra::Scalar,
{
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let q = a.nrows();
    match q {
        0 => return Err(Error::InvalidConfig("permanent of an empty matrix".into())),
        1 => return Ok(a[(0, 0)]),
        2 => return Ok(a[(0, 0)] * a[(1, 1)] + a[(0, 1)] * a[(1, 0)]),
        _ => {}
    }
    if q >= usize::BITS as usize - 1 {
        return Err(Error::Unsupported(format!("permanent of a {q}x{q} matrix")));
    }

    // Per(A) = (−1)^q Σ_S (−1)^{|S|} Π_i Σ_{j∈S} a_ij, visiting subsets S so
    // that consecutive ones differ by a single column.
    let mut row_sums = vec![T::ZERO; q];
    let mut total = T::ZERO;
    let mut gray = 0usize;
    for k in 1usize..(1 << q) {
        let col = k.trailing_zeros() as usize;
        let bit = 1 << col;
        gray ^= bit;
        if gray & bit != 0 {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s = *s + a[(i, col)];
            }
        } else {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s = *s - a[(i, col)];
            }
        }
        let mut prod = row_sums[0];
        for &s in &row_sums[1..] {
            prod = prod * s;
        }
        if gray.count_ones() % 2 == 1 {
            total = total - prod;
        } else {
            total = total + prod;
        }
    }
    Ok(if q % 2 == 1 { -total } else { total })
}

/// `U_{s,t}`: row `b` of `U` repeated `t_b` times and column `a` repeated
/// `s_a` times, with rows indexed by the output `t` and columns by the input `s`.
pub fn submatrix(u: &MeshUnitary, input: &FockState, output: &FockState) -> Result<DMatrix<Complex64>> {
    check_states(u, input, output)?;
    let rows = output.mode_list();
    let cols = input.mode_list();
    let m = u.matrix();
    Ok(DMatrix::from_fn(rows.len(), cols.len(), |r, c| m[(rows[r], cols[c])]))
}

fn check_states(u: &MeshUnitary, input: &FockState, output: &FockState) -> Result<()> {
    for state in [input, output] {
        if state.modes() != u.modes() {
            return Err(Error::DimensionMismatch {
                expected: u.modes(),
                found: state.modes(),
            });
        }
    }
    if input.photons() != output.photons() {
        return Err(Error::PhotonNumberMismatch {
            input: input.photons(),
            output: output.photons(),
        });
    }
    Ok(())
}

/// Degree of indistinguishability `r ∈ [0, 1]` of the injected photons.
///
/// Intermediate values mix quantum and coherent statistics convexly, which is
/// exact for two photons and only an approximation beyond that.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DistinguishabilityModel(f64);

impl DistinguishabilityModel {
    pub const INDISTINGUISHABLE: Self = Self(1.0);
    pub const DISTINGUISHABLE: Self = Self(0.0);

    pub fn new(r: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::InvalidConfig(format!(
                "degree of indistinguishability {r} outside [0, 1]"
            )));
        }
        Ok(Self(r))
    }

    pub fn r(self) -> f64 {
        self.0
    }

    pub fn statistics(self) -> StatisticsKind {
        if self.0 == 1.0 {
            StatisticsKind::Quantum
        } else if self.0 == 0.0 {
            StatisticsKind::Coherent
        } else {
            StatisticsKind::Mixed(self.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatisticsKind {
    Quantum,
    Coherent,
    Mixed(f64),
}

/// Maps tiny rounding excursions back into `[0, 1]`; anything larger is an error.
pub fn clip_probability(p: f64) -> Result<f64> {
    if !p.is_finite() || p < -PROBABILITY_ROUNDING || p > 1.0 + PROBABILITY_ROUNDING {
        return Err(Error::InvalidProbability(p));
    }
    Ok(p.clamp(0.0, 1.0))
}

fn quantum_probability(sub: &DMatrix<Complex64>, norm: f64) -> Result<f64> {
    Ok(permanent(sub)?.norm_sqr() / norm)
}

fn coherent_probability(sub: &DMatrix<Complex64>, norm: f64) -> Result<f64> {
    Ok(permanent(&sub.map(|z| z.norm_sqr()))? / norm)
}

/// `P(t | s)` under the given photon statistics.
///
/// Quantum: `|Per U_{s,t}|² / (Π s_i! Π t_i!)`. Coherent: the permanent of the
/// elementwise squared moduli over `Π t_i!`. Photons sharing an input mode are
/// still labelled individually, so the input factor does not apply; for a
/// collision-free input the two normalizations coincide.
pub fn transition_probability(
    u: &MeshUnitary,
    input: &FockState,
    output: &FockState,
    model: DistinguishabilityModel,
) -> Result<f64> {
    let sub = submatrix(u, input, output)?;
    let norm_q = input.norm_factor() * output.norm_factor();
    let norm_c = output.norm_factor();
    let p = match model.statistics() {
        StatisticsKind::Quantum => quantum_probability(&sub, norm_q)?,
        StatisticsKind::Coherent => coherent_probability(&sub, norm_c)?,
        StatisticsKind::Mixed(r) => {
            r * quantum_probability(&sub, norm_q)? + (1.0 - r) * coherent_probability(&sub, norm_c)?
        }
    };
    clip_probability(p)
}

/// Probabilities of output configurations, in enumeration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDistribution {
    entries: Vec<(FockState, f64)>,
    statistics: StatisticsKind,
}

impl OutputDistribution {
    /// Builds a distribution from explicit entries, checking non-negativity and
    /// normalization to within `tol`.
    pub fn from_entries(
        entries: Vec<(FockState, f64)>,
        statistics: StatisticsKind,
        tol: f64,
    ) -> Result<Self> {
        if let Some(&(_, p)) = entries.iter().find(|(_, p)| *p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidProbability(p));
        }
        let total: f64 = entries.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > tol {
            return Err(Error::NotNormalized(total));
        }
        Ok(Self { entries, statistics })
    }

    pub fn entries(&self) -> &[(FockState, f64)] {
        &self.entries
    }

    pub fn statistics(&self) -> StatisticsKind {
        self.statistics
    }

    /// Probability of `state`, zero when absent.
    pub fn probability(&self, state: &FockState) -> f64 {
        self.entries
            .iter()
            .find(|(s, _)| s == state)
            .map_or(0.0, |(_, p)| *p)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    pub fn collision_free_mass(&self) -> f64 {
        self.entries
            .iter()
            .filter(|(s, _)| s.is_collision_free())
            .map(|(_, p)| p)
            .sum()
    }

    /// The distribution conditioned on collision-free outcomes.
    pub fn post_selected(&self) -> Result<Self> {
        let mass = self.collision_free_mass();
        if mass <= 0.0 {
            return Err(Error::Degenerate("no collision-free probability mass".into()));
        }
        let entries = self
            .entries
            .iter()
            .filter(|(s, _)| s.is_collision_free())
            .map(|(s, p)| (s.clone(), p / mass))
            .collect();
        Ok(Self {
            entries,
            statistics: self.statistics,
        })
    }
}

/// Exact distribution over every `n`-photon output for input `s`.
pub fn full_distribution(
    u: &MeshUnitary,
    input: &FockState,
    model: DistinguishabilityModel,
) -> Result<OutputDistribution> {
    if input.modes() != u.modes() {
        return Err(Error::DimensionMismatch {
            expected: u.modes(),
            found: input.modes(),
        });
    }
    let outputs = enumerate_configurations(u.modes(), input.photons(), false)?;
    let entries = outputs
        .into_iter()
        .map(|t| transition_probability(u, input, &t, model).map(|p| (t, p)))
        .collect::<Result<Vec<_>>>()?;
    OutputDistribution::from_entries(entries, model.statistics(), NORMALIZATION_TOL)
}
