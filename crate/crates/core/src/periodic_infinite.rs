//! Periodic p-harmonic functions for the infinite-index kernels `H_{ij}`.
//!
//! A function periodic under `H_{ij}` is a sequence `u_n` over the cosets
//! `H_n`, `n ∈ Z`. Every vertex of `H_n` has exactly one neighbour in
//! `H_{n−1}` and one in `H_{n+1}`, so with resistances `r_{n,n+1}` between
//! consecutive cosets the p-Laplacian collapses to
//!
//! ```text
//! φ_p(u_{n+1} − u_n) / r_{n,n+1}^{p−1} + φ_p(u_{n−1} − u_n) / r_{n−1,n}^{p−1} = 0.
//! ```
//!
//! Equivalently the flux `X_n = φ_p(u_{n+1} − u_n) / r_{n,n+1}^{p−1}` does not
//! depend on `n`. For a summable sequence `r` the solutions are the two
//! families
//!
//! ```text
//! U1: u_n = offset + A · Σ_{s<n} r_{s,s+1}        (flux  A^{p−1})
//! U2: u_n = offset + A · Σ_{s≥n} r_{s,s+1}        (flux −A^{p−1})
//! ```
//!
//! with amplitude `A ≥ 0`. Because every member has increments proportional to
//! `r_{n,n+1}`, any linear combination again has increments `K · r_{n,n+1}`
//! and stays p-harmonic even though `Δ_p` is nonlinear.

use std::ops::RangeInclusive;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plaplace::{
    is_p_harmonic_on_ball, Exponent, HarmonicityReport, HashedEdgeResistance, Resistance,
    VertexField,
};
use crate::subgroup::PairSpec;
use crate::word_group::{Ball, ReducedWord};

/// Geometric continuation of a resistance sequence beyond its window.
/// `base` is the first value past the window; each further step multiplies
/// by `ratio`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricTail {
    pub base: f64,
    pub ratio: f64,
}

impl GeometricTail {
    fn validate(&self, side: &str) -> Result<()> {
        if !(self.base > 0.0 && self.base.is_finite()) {
            return Err(Error::InvalidSequence(format!(
                "{side} tail base {}",
                self.base
            )));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::InvalidSequence(format!(
                "{side} tail ratio {} outside (0, 1)",
                self.ratio
            )));
        }
        Ok(())
    }

    /// Value `steps` positions past the window, `steps ≥ 1`.
    fn value(&self, steps: u64) -> f64 {
        self.base * self.ratio.powf((steps - 1) as f64)
    }

    /// Sum of the first `count` tail values.
    fn partial_sum(&self, count: u64) -> f64 {
        self.base * (1.0 - self.ratio.powf(count as f64)) / (1.0 - self.ratio)
    }

    /// Sum of the tail values from `steps` on.
    fn sum_from(&self, steps: u64) -> f64 {
        self.value(steps) / (1.0 - self.ratio)
    }

    fn total(&self) -> f64 {
        self.base / (1.0 - self.ratio)
    }
}

/// Resistance on edges joining two vertices of the same coset. These never
/// affect periodic functions, whose increments across such edges vanish.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WithinCoset {
    Constant(f64),
    /// Log-uniform per-edge values in `[lo, hi]`, hashed from the edge.
    Random {
        seed: u64,
        lo: f64,
        hi: f64,
    },
}

impl Default for WithinCoset {
    fn default() -> Self {
        WithinCoset::Constant(1.0)
    }
}

/// `n ↦ r_{n,n+1}` over all of `Z`: explicit values on `[from, from + len)`
/// with geometric tails on both sides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SequenceJson", into = "SequenceJson")]
pub struct ResistanceSequence {
    from: i64,
    window: Vec<f64>,
    left: GeometricTail,
    right: GeometricTail,
    within: WithinCoset,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct WindowJson {
    from: i64,
    values: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SequenceJson {
    window: WindowJson,
    tail_left: GeometricTail,
    tail_right: GeometricTail,
    #[serde(default)]
    within: WithinCoset,
}

impl TryFrom<SequenceJson> for ResistanceSequence {
    type Error = Error;

    fn try_from(j: SequenceJson) -> Result<Self> {
        ResistanceSequence::new(j.window.from, j.window.values, j.tail_left, j.tail_right)?
            .with_within(j.within)
    }
}

impl From<ResistanceSequence> for SequenceJson {
    fn from(s: ResistanceSequence) -> Self {
        SequenceJson {
            window: WindowJson {
                from: s.from,
                values: s.window,
            },
            tail_left: s.left,
            tail_right: s.right,
            within: s.within,
        }
    }
}

impl ResistanceSequence {
    pub fn new(
        from: i64,
        window: Vec<f64>,
        left: GeometricTail,
        right: GeometricTail,
    ) -> Result<Self> {
        if let Some(bad) = window.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidSequence(format!("window value {bad}")));
        }
        left.validate("left")?;
        right.validate("right")?;
        Ok(Self {
            from,
            window,
            left,
            right,
            within: WithinCoset::default(),
        })
    }

    pub fn with_within(mut self, within: WithinCoset) -> Result<Self> {
        match within {
            WithinCoset::Constant(c) if !(c > 0.0 && c.is_finite()) => {
                return Err(Error::InvalidSequence(format!(
                    "within-coset resistance {c}"
                )))
            }
            WithinCoset::Random { lo, hi, .. } => {
                HashedEdgeResistance::new(0, lo, hi)?;
            }
            _ => {}
        }
        self.within = within;
        Ok(self)
    }

    /// `r_{s,s+1} = 2^{-|s|}`: window `[1]` at 0, tails `(1/2, 1/2)`.
    pub fn two_sided_halving() -> Self {
        let tail = GeometricTail {
            base: 0.5,
            ratio: 0.5,
        };
        Self::new(0, vec![1.0], tail, tail).expect("valid constant sequence")
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("resistance sequence: {e}")))
    }

    pub fn within(&self) -> WithinCoset {
        self.within
    }

    /// First index of the window.
    pub fn window_start(&self) -> i64 {
        self.from
    }

    /// One past the last index of the window.
    fn window_end(&self) -> i64 {
        self.from + self.window.len() as i64
    }

    /// `r_{s,s+1}`.
    pub fn value(&self, s: i64) -> f64 {
        if s < self.from {
            self.left.value((self.from - s) as u64)
        } else if s >= self.window_end() {
            self.right.value((s - self.window_end() + 1) as u64)
        } else {
            self.window[(s - self.from) as usize]
        }
    }

    /// `Σ_{s ∈ Z} r_{s,s+1}`.
    pub fn total(&self) -> f64 {
        self.left.total() + self.window.iter().sum::<f64>() + self.right.total()
    }

    /// `Σ_{s=−∞}^{n−1} r_{s,s+1}`, with tails in closed form.
    pub fn lower_tail_sum(&self, n: i64) -> f64 {
        if n <= self.from {
            return self.left.sum_from((self.from - n + 1) as u64);
        }
        let end = self.window_end();
        let upto = n.min(end);
        let window: f64 = self.window[..(upto - self.from) as usize].iter().sum();
        let mut total = self.left.total() + window;
        if n > end {
            total += self.right.partial_sum((n - end) as u64);
        }
        total
    }

    /// `Σ_{s=n}^{+∞} r_{s,s+1}`, with tails in closed form.
    pub fn upper_tail_sum(&self, n: i64) -> f64 {
        let end = self.window_end();
        if n >= end {
            return self.right.sum_from((n - end + 1) as u64);
        }
        let start = n.max(self.from);
        let window: f64 = self.window[(start - self.from) as usize..].iter().sum();
        let mut total = self.right.total() + window;
        if n < self.from {
            total += self.left.partial_sum((self.from - n) as u64);
        }
        total
    }
}

pub fn lower_tail_sum(seq: &ResistanceSequence, n: i64) -> f64 {
    seq.lower_tail_sum(n)
}

pub fn upper_tail_sum(seq: &ResistanceSequence, n: i64) -> f64 {
    seq.upper_tail_sum(n)
}

/// Vertex-level resistance built from a sequence: `r_{n,n+1}` between
/// `H_n` and `H_{n+1}`, and the sequence's within-coset rule inside `H_n`.
#[derive(Clone, Debug)]
pub struct SequenceResistance<'a> {
    pub seq: &'a ResistanceSequence,
    pub pair: PairSpec,
}

impl Resistance for SequenceResistance<'_> {
    fn resistance(&self, x: &ReducedWord, y: &ReducedWord) -> f64 {
        let (n, m) = (self.pair.coset_index(x), self.pair.coset_index(y));
        if n != m {
            return self.seq.value(n.min(m));
        }
        match self.seq.within {
            WithinCoset::Constant(c) => c,
            WithinCoset::Random { seed, lo, hi } => {
                HashedEdgeResistance { seed, lo, hi }.resistance(x, y)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    U1,
    U2,
}

/// JSON parameters of a family member: `{"family": "U1", "amplitude": .., "offset": ..}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberParams {
    pub family: Family,
    pub amplitude: f64,
    #[serde(default)]
    pub offset: f64,
}

/// One function from `U1` or `U2`, shifted by an additive constant.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyMember {
    family: Family,
    amplitude: f64,
    offset: f64,
    sequence: ResistanceSequence,
}

impl FamilyMember {
    pub fn new(
        family: Family,
        amplitude: f64,
        offset: f64,
        sequence: ResistanceSequence,
    ) -> Result<Self> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "amplitude {amplitude} must be nonnegative"
            )));
        }
        if !offset.is_finite() {
            return Err(Error::InvalidConfig(format!("offset {offset}")));
        }
        Ok(Self {
            family,
            amplitude,
            offset,
            sequence,
        })
    }

    pub fn from_params(params: MemberParams, sequence: ResistanceSequence) -> Result<Self> {
        Self::new(params.family, params.amplitude, params.offset, sequence)
    }

    pub fn params(&self) -> MemberParams {
        MemberParams {
            family: self.family,
            amplitude: self.amplitude,
            offset: self.offset,
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn sequence(&self) -> &ResistanceSequence {
        &self.sequence
    }

    /// `u_n`.
    pub fn evaluate(&self, n: i64) -> f64 {
        let tail = match self.family {
            Family::U1 => self.sequence.lower_tail_sum(n),
            Family::U2 => self.sequence.upper_tail_sum(n),
        };
        self.offset + self.amplitude * tail
    }

    /// `u(x) = u_n` for `x ∈ H_n`.
    pub fn evaluate_at_vertex(&self, x: &ReducedWord, pair: &PairSpec) -> f64 {
        self.evaluate(pair.coset_index(x))
    }

    /// The constant flux `X_n` of this member: `±A^{p−1}`.
    pub fn expected_flux(&self, p: Exponent) -> f64 {
        let mag = p.phi(self.amplitude);
        match self.family {
            Family::U1 => mag,
            Family::U2 => -mag,
        }
    }
}

pub fn evaluate(member: &FamilyMember, n: i64) -> f64 {
    member.evaluate(n)
}

pub fn evaluate_at_vertex(member: &FamilyMember, x: &ReducedWord, pair: &PairSpec) -> f64 {
    member.evaluate_at_vertex(x, pair)
}

/// `X_n = φ_p(u_{n+1} − u_n) / r_{n,n+1}^{p−1}` for any coset profile.
pub fn flux<F: Fn(i64) -> f64 + ?Sized>(
    u: &F,
    seq: &ResistanceSequence,
    p: Exponent,
    n: i64,
) -> f64 {
    p.phi(u(n + 1) - u(n)) / p.resistance_power(seq.value(n))
}

/// `Δ_p u` at any vertex of `H_n` for a coset profile: `X_n − X_{n−1}`
/// written out as the two neighbour terms.
pub fn coset_residual<F: Fn(i64) -> f64 + ?Sized>(
    u: &F,
    seq: &ResistanceSequence,
    p: Exponent,
    n: i64,
) -> f64 {
    let un = u(n);
    p.phi(u(n + 1) - un) / p.resistance_power(seq.value(n))
        + p.phi(u(n - 1) - un) / p.resistance_power(seq.value(n - 1))
}

/// A linear combination `Σ t_i v_i` of family members over one sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct Combination {
    terms: Vec<(f64, FamilyMember)>,
}

impl Combination {
    pub fn new(terms: Vec<(f64, FamilyMember)>) -> Result<Self> {
        let Some((_, first)) = terms.first() else {
            return Err(Error::InvalidConfig("empty combination".into()));
        };
        if terms.iter().any(|(_, m)| m.sequence != first.sequence) {
            return Err(Error::MixedSequences);
        }
        if let Some((t, _)) = terms.iter().find(|(t, _)| *t == 0.0 || !t.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "coefficient {t} must be nonzero and finite"
            )));
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[(f64, FamilyMember)] {
        &self.terms
    }

    pub fn sequence(&self) -> &ResistanceSequence {
        &self.terms[0].1.sequence
    }

    /// `v_n = Σ t_i u^{(i)}_n`.
    pub fn value(&self, n: i64) -> f64 {
        self.terms.iter().map(|(t, m)| t * m.evaluate(n)).sum()
    }

    /// `K = Σ_{U1} t_i A_i − Σ_{U2} t_i A_i`; increments are `K · r_{n,n+1}`.
    pub fn slope(&self) -> f64 {
        self.terms
            .iter()
            .map(|(t, m)| match m.family {
                Family::U1 => t * m.amplitude,
                Family::U2 => -t * m.amplitude,
            })
            .sum()
    }

    /// The single member (or constant) this combination equals.
    pub fn collapse(&self) -> Collapsed {
        let k = self.slope();
        let total = self.sequence().total();
        let offsets: f64 = self.terms.iter().map(|(t, m)| t * m.offset).sum();
        let weight = |fam: Family| -> f64 {
            self.terms
                .iter()
                .filter(|(_, m)| m.family == fam)
                .map(|(t, m)| t * m.amplitude)
                .sum()
        };
        let seq = self.sequence().clone();
        if k > 0.0 {
            Collapsed::Member(FamilyMember {
                family: Family::U1,
                amplitude: k,
                offset: offsets + weight(Family::U2) * total,
                sequence: seq,
            })
        } else if k < 0.0 {
            Collapsed::Member(FamilyMember {
                family: Family::U2,
                amplitude: -k,
                offset: offsets + weight(Family::U1) * total,
                sequence: seq,
            })
        } else {
            Collapsed::Constant(offsets + weight(Family::U2) * total)
        }
    }

    pub fn lift(&self, pair: PairSpec) -> CombinationLift<'_> {
        CombinationLift { combo: self, pair }
    }
}

pub fn combine(c: &Combination) -> impl Fn(i64) -> f64 + '_ {
    move |n| c.value(n)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Collapsed {
    Constant(f64),
    Member(FamilyMember),
}

/// A combination as an `H_{ij}`-periodic vertex function.
#[derive(Clone, Debug)]
pub struct CombinationLift<'a> {
    combo: &'a Combination,
    pair: PairSpec,
}

impl VertexField for CombinationLift<'_> {
    fn value_at(&self, x: &ReducedWord) -> Option<f64> {
        Some(self.combo.value(self.pair.coset_index(x)))
    }
}

/// A family member as an `H_{ij}`-periodic vertex function.
#[derive(Clone, Debug)]
pub struct MemberLift<'a> {
    pub member: &'a FamilyMember,
    pub pair: PairSpec,
}

impl VertexField for MemberLift<'_> {
    fn value_at(&self, x: &ReducedWord) -> Option<f64> {
        Some(self.member.evaluate_at_vertex(x, &self.pair))
    }
}

/// Coset-level residual check of a profile over a range of `n`.
#[derive(Clone, Debug, Serialize)]
pub struct ProfileReport {
    pub passed: bool,
    pub max_residual: f64,
    pub worst_n: Option<i64>,
    /// Every `n` whose residual exceeds the tolerance.
    pub failing: Vec<i64>,
}

pub fn verify_profile<F: Fn(i64) -> f64 + ?Sized>(
    u: &F,
    seq: &ResistanceSequence,
    p: Exponent,
    n_range: RangeInclusive<i64>,
    tol: f64,
) -> ProfileReport {
    let mut max_residual = 0.0f64;
    let mut worst_n = None;
    let mut failing = Vec::new();
    for n in n_range {
        let res = coset_residual(u, seq, p, n).abs();
        if res > max_residual || worst_n.is_none() {
            max_residual = max_residual.max(res);
            worst_n = Some(n);
        }
        if res > tol || res.is_nan() {
            failing.push(n);
        }
    }
    ProfileReport {
        passed: failing.is_empty(),
        max_residual,
        worst_n,
        failing,
    }
}

/// Result of [`verify_combination`]: the coset-level check and, when asked
/// for, the vertex-level check on a ball.
#[derive(Clone, Debug, Serialize)]
pub struct CombinationReport {
    pub passed: bool,
    pub cosets: ProfileReport,
    pub vertices: Option<HarmonicityReport>,
}

/// Checks that `Σ t_i v_i` satisfies the coset equation for every `n` in
/// `n_range` and, if `vertex_check` is given, that its lift is p-harmonic on
/// the interior of the ball with the sequence's vertex-level resistances.
pub fn verify_combination(
    c: &Combination,
    p: Exponent,
    n_range: RangeInclusive<i64>,
    tol: f64,
    vertex_check: Option<(PairSpec, &Ball)>,
) -> Result<CombinationReport> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let v = |n| c.value(n);
    let cosets = verify_profile(&v, c.sequence(), p, n_range, tol);
    let vertices = match vertex_check {
        Some((pair, ball)) => {
            let rule = SequenceResistance {
                seq: c.sequence(),
                pair,
            };
            Some(is_p_harmonic_on_ball(&c.lift(pair), ball, &rule, p, tol)?)
        }
        None => None,
    };
    let passed = cosets.passed && vertices.as_ref().is_none_or(|r| r.passed);
    Ok(CombinationReport {
        passed,
        cosets,
        vertices,
    })
}

/// Parameters for drawing random sequences and combinations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrawParams {
    /// Window covers `[-half_window, half_window]`.
    pub half_window: i64,
    pub window_lo: f64,
    pub window_hi: f64,
    pub base_lo: f64,
    pub base_hi: f64,
    pub ratio_lo: f64,
    pub ratio_hi: f64,
    pub amplitude_lo: f64,
    pub amplitude_hi: f64,
    pub coefficient_hi: f64,
    pub offset_hi: f64,
}

impl Default for DrawParams {
    /// Slow tails and an amplitude floor keep `u_{n+1} − u_n` far above the
    /// rounding error of `u_n` for `|n| ≤ 50`.
    fn default() -> Self {
        Self {
            half_window: 5,
            window_lo: 0.5,
            window_hi: 2.0,
            base_lo: 0.5,
            base_hi: 1.5,
            ratio_lo: 0.95,
            ratio_hi: 0.99,
            amplitude_lo: 0.25,
            amplitude_hi: 1.0,
            coefficient_hi: 2.0,
            offset_hi: 1.0,
        }
    }
}

impl DrawParams {
    pub fn draw_sequence<G: Rng + ?Sized>(&self, rng: &mut G) -> ResistanceSequence {
        let len = (2 * self.half_window + 1) as usize;
        let window = (0..len)
            .map(|_| rng.gen_range(self.window_lo..=self.window_hi))
            .collect();
        let tail = |rng: &mut G| GeometricTail {
            base: rng.gen_range(self.base_lo..=self.base_hi),
            ratio: rng.gen_range(self.ratio_lo..=self.ratio_hi),
        };
        let left = tail(rng);
        let right = tail(rng);
        ResistanceSequence::new(-self.half_window, window, left, right)
            .expect("draw ranges are valid")
    }

    pub fn draw_member<G: Rng + ?Sized>(
        &self,
        rng: &mut G,
        family: Family,
        seq: &ResistanceSequence,
    ) -> FamilyMember {
        let amplitude = rng.gen_range(self.amplitude_lo..=self.amplitude_hi);
        let offset = rng.gen_range(-self.offset_hi..=self.offset_hi);
        FamilyMember::new(family, amplitude, offset, seq.clone()).expect("draw ranges are valid")
    }

    /// A combination of `q` members, `q1` of them from `U1`, with nonzero
    /// coefficients in `[-coefficient_hi, coefficient_hi]`.
    pub fn draw_combination<G: Rng + ?Sized>(
        &self,
        rng: &mut G,
        seq: &ResistanceSequence,
        q: usize,
        q1: usize,
    ) -> Combination {
        let terms = (0..q)
            .map(|i| {
                let family = if i < q1 { Family::U1 } else { Family::U2 };
                let mut t = 0.0;
                while t == 0.0 {
                    t = rng.gen_range(-self.coefficient_hi..=self.coefficient_hi);
                }
                (t, self.draw_member(rng, family, seq))
            })
            .collect();
        Combination::new(terms).expect("shared sequence and nonzero coefficients")
    }
}
