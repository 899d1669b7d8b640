//! Periodic p-harmonic functions for finite-index parity subgroups.
//!
//! A function periodic under `H = ∩ H_{A_l}` is a profile `u_v` over the
//! `2^m` cosets. With coset-pair resistances `r_{vw}`, `Δ_p u = 0` on the
//! tree reduces to the system
//!
//! ```text
//! Σ_w mult(v, w) · φ_p(u_w − u_v) / r_{vw}^{p−1} = 0      for every coset v
//! ```
//!
//! on the quotient graph. Only constant profiles solve it: at a coset where a
//! non-constant profile is maximal and that touches a strictly smaller coset,
//! every term is `≤ 0` and one is `< 0`. The solver here minimizes the
//! quotient energy with one coordinate pinned, and the max-principle check
//! evaluates the sign argument directly.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plaplace::{Exponent, Resistance, VertexField, WeightedGraph, DEFAULT_MAX_SWEEPS};
use crate::subgroup::{FiniteIndexSpec, QuotientGraph};
use crate::word_group::ReducedWord;

/// One value per coset, indexed by coset id (the parity label as an integer).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicProfile {
    pub values: Vec<f64>,
}

impl PeriodicProfile {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn constant(len: usize, c: f64) -> Self {
        Self {
            values: vec![c; len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `max u − min u`.
    pub fn spread(&self) -> f64 {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        if self.values.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }

    pub fn is_constant(&self) -> bool {
        self.values.windows(2).all(|w| w[0] == w[1])
    }
}

/// Resistances `r_{vw}` on the cross-coset edges of a quotient graph.
/// Edges inside one coset carry `within` at the vertex level; that value
/// never enters a periodic residual because the increment across them is 0.
#[derive(Clone, Debug, PartialEq)]
pub struct CosetResistances {
    pairs: BTreeMap<(usize, usize), f64>,
    within: f64,
}

fn ordered(v: usize, w: usize) -> (usize, usize) {
    if v <= w {
        (v, w)
    } else {
        (w, v)
    }
}

impl CosetResistances {
    /// Checks that every cross edge of `q` has a positive resistance.
    pub fn new(q: &QuotientGraph, pairs: BTreeMap<(usize, usize), f64>) -> Result<Self> {
        let mut clean = BTreeMap::new();
        for ((v, w), r) in pairs {
            if v == w {
                continue;
            }
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidResistance(format!("r({v},{w}) = {r}")));
            }
            if v >= q.len() || w >= q.len() || q.multiplicity(v, w) == 0 {
                return Err(Error::InvalidResistance(format!(
                    "cosets {v} and {w} are not adjacent in the quotient"
                )));
            }
            clean.insert(ordered(v, w), r);
        }
        for edge in q.cross_edges() {
            if !clean.contains_key(&edge) {
                return Err(Error::InvalidResistance(format!(
                    "missing resistance for cosets {}-{}",
                    edge.0, edge.1
                )));
            }
        }
        Ok(Self {
            pairs: clean,
            within: 1.0,
        })
    }

    pub fn uniform(q: &QuotientGraph, r: f64) -> Result<Self> {
        Self::new(q, q.cross_edges().into_iter().map(|e| (e, r)).collect())
    }

    /// Log-uniform draws in `[lo, hi]` for every cross edge.
    pub fn log_uniform<G: Rng + ?Sized>(
        q: &QuotientGraph,
        rng: &mut G,
        lo: f64,
        hi: f64,
    ) -> Result<Self> {
        let (a, b) = (lo.ln(), hi.ln());
        Self::new(
            q,
            q.cross_edges()
                .into_iter()
                .map(|e| (e, rng.gen_range(a..=b).exp()))
                .collect(),
        )
    }

    /// Parses `{"0-1": 1.0, ...}`.
    pub fn from_json_map(q: &QuotientGraph, map: &BTreeMap<String, f64>) -> Result<Self> {
        let mut pairs = BTreeMap::new();
        for (key, &r) in map {
            let (a, b) = key
                .split_once('-')
                .ok_or_else(|| Error::Parse(format!("resistance key {key:?}, expected \"v-w\"")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("resistance key {key:?}: {e}")))
            };
            pairs.insert(ordered(parse(a)?, parse(b)?), r);
        }
        Self::new(q, pairs)
    }

    pub fn to_json_map(&self) -> BTreeMap<String, f64> {
        self.pairs
            .iter()
            .map(|(&(v, w), &r)| (format!("{v}-{w}"), r))
            .collect()
    }

    pub fn with_within(mut self, within: f64) -> Result<Self> {
        if !(within > 0.0 && within.is_finite()) {
            return Err(Error::InvalidResistance(format!(
                "within-coset r = {within}"
            )));
        }
        self.within = within;
        Ok(self)
    }

    pub fn get(&self, v: usize, w: usize) -> f64 {
        if v == w {
            self.within
        } else {
            self.pairs[&ordered(v, w)]
        }
    }

    pub fn pairs(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.pairs
    }
}

/// The periodic resistance `r(x, y) = r_{label(x), label(y)}` on the tree.
pub struct PeriodicResistance<'a> {
    pub spec: &'a FiniteIndexSpec,
    pub r: &'a CosetResistances,
}

impl Resistance for PeriodicResistance<'_> {
    fn resistance(&self, x: &ReducedWord, y: &ReducedWord) -> f64 {
        self.r.get(
            self.spec.parity_label(x).id(),
            self.spec.parity_label(y).id(),
        )
    }
}

/// A profile lifted to the tree: `u(x) = u_{label(x)}`.
#[derive(Clone, Debug)]
pub struct PeriodicLift<'a> {
    profile: &'a PeriodicProfile,
    spec: &'a FiniteIndexSpec,
}

impl VertexField for PeriodicLift<'_> {
    fn value_at(&self, x: &ReducedWord) -> Option<f64> {
        self.profile
            .values
            .get(self.spec.parity_label(x).id())
            .copied()
    }
}

pub fn lift<'a>(
    profile: &'a PeriodicProfile,
    spec: &'a FiniteIndexSpec,
) -> Result<PeriodicLift<'a>> {
    if profile.len() != spec.index() {
        return Err(Error::LengthMismatch {
            expected: spec.index(),
            got: profile.len(),
        });
    }
    Ok(PeriodicLift { profile, spec })
}

fn check_len(profile: &PeriodicProfile, q: &QuotientGraph) -> Result<()> {
    if profile.len() != q.len() {
        return Err(Error::LengthMismatch {
            expected: q.len(),
            got: profile.len(),
        });
    }
    Ok(())
}

/// Left-hand sides of the reduced system, one per coset.
pub fn residual_system(
    profile: &PeriodicProfile,
    q: &QuotientGraph,
    r: &CosetResistances,
    p: Exponent,
) -> Result<Vec<f64>> {
    check_len(profile, q)?;
    let u = &profile.values;
    Ok((0..q.len())
        .map(|v| {
            q.neighbors(v)
                .filter(|&(w, _)| w != v)
                .map(|(w, mult)| {
                    f64::from(mult) * p.phi(u[w] - u[v]) / p.resistance_power(r.get(v, w))
                })
                .sum()
        })
        .collect())
}

/// `Σ_{v<w} mult(v,w) · r_{vw}^{1−p} · |u_w − u_v|^p`.
pub fn quotient_energy(
    profile: &PeriodicProfile,
    q: &QuotientGraph,
    r: &CosetResistances,
    p: Exponent,
) -> Result<f64> {
    check_len(profile, q)?;
    let u = &profile.values;
    Ok(q.cross_edges()
        .into_iter()
        .map(|(v, w)| {
            f64::from(q.multiplicity(v, w)) * (u[w] - u[v]).abs().powf(p.value())
                / p.resistance_power(r.get(v, w))
        })
        .sum())
}

fn quotient_weights(q: &QuotientGraph, r: &CosetResistances, p: Exponent) -> WeightedGraph {
    let mut g = WeightedGraph::new(q.len());
    for (v, w) in q.cross_edges() {
        g.add_edge(
            v,
            w,
            f64::from(q.multiplicity(v, w)) / p.resistance_power(r.get(v, w)),
        );
    }
    g
}

/// Output of [`solve_periodic`].
#[derive(Clone, Debug)]
pub struct PeriodicSolution {
    pub profile: PeriodicProfile,
    /// `max_v |residual_v|` of the returned profile.
    pub residual: f64,
    pub sweeps: usize,
}

/// Minimizes the quotient energy from `start`, with coset 0 pinned at
/// `start[0]`, until the residual is at most `tol`.
/// Largest per-sweep update accepted at termination of [`solve_periodic`].
pub const PERIODIC_STEP_TOL: f64 = 1e-12;

pub fn solve_periodic(
    q: &QuotientGraph,
    r: &CosetResistances,
    p: Exponent,
    start: &PeriodicProfile,
    tol: f64,
) -> Result<PeriodicSolution> {
    solve_periodic_capped(q, r, p, start, tol, DEFAULT_MAX_SWEEPS)
}

pub fn solve_periodic_capped(
    q: &QuotientGraph,
    r: &CosetResistances,
    p: Exponent,
    start: &PeriodicProfile,
    tol: f64,
    max_sweeps: usize,
) -> Result<PeriodicSolution> {
    check_len(start, q)?;
    let graph = quotient_weights(q, r, p);
    let mut fixed = vec![false; q.len()];
    fixed[0] = true;
    let out =
        graph.minimize_with_step(&start.values, &fixed, p, tol, PERIODIC_STEP_TOL, max_sweeps)?;
    let profile = PeriodicProfile::new(out.values);
    let residual = residual_system(&profile, q, r, p)?
        .into_iter()
        .map(f64::abs)
        .fold(0.0, f64::max);
    if residual > tol {
        return Err(Error::NonConvergence {
            iterations: out.sweeps,
            residual,
        });
    }
    Ok(PeriodicSolution {
        profile,
        residual,
        sweeps: out.sweeps,
    })
}

/// Residual sign at one coset where the profile is maximal.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArgmaxEntry {
    pub coset: usize,
    pub residual: f64,
    /// Whether the coset is adjacent to a coset with a strictly smaller value.
    pub touches_lower: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaxPrincipleReport {
    pub constant: bool,
    pub argmax: Vec<ArgmaxEntry>,
    pub passed: bool,
}

/// Evaluates the residual at every coset attaining the maximum.
///
/// Passes when the profile is constant and all residuals vanish, or when it
/// is non-constant, every argmax coset touching a strictly smaller coset has
/// a strictly negative residual, and at least one such coset exists.
pub fn max_principle_check(
    profile: &PeriodicProfile,
    q: &QuotientGraph,
    r: &CosetResistances,
    p: Exponent,
) -> Result<MaxPrincipleReport> {
    let res = residual_system(profile, q, r, p)?;
    let u = &profile.values;
    let top = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let argmax: Vec<ArgmaxEntry> = (0..q.len())
        .filter(|&v| u[v] == top)
        .map(|v| ArgmaxEntry {
            coset: v,
            residual: res[v],
            touches_lower: q.neighbors(v).any(|(w, _)| u[w] < top),
        })
        .collect();
    let constant = profile.is_constant();
    let passed = if constant {
        res.iter().all(|&x| x == 0.0)
    } else {
        argmax
            .iter()
            .filter(|a| a.touches_lower)
            .all(|a| a.residual < 0.0)
            && argmax.iter().any(|a| a.touches_lower)
    };
    Ok(MaxPrincipleReport {
        constant,
        argmax,
        passed,
    })
}
