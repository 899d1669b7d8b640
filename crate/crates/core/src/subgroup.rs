//! Normal subgroups of `G_k` and their cosets.
//!
//! Two kinds are supported:
//!
//! * parity subgroups `H_A = { x : Σ_{i∈A} ω_x(a_i) even }` and intersections
//!   `H_{A_1} ∩ … ∩ H_{A_m}`, whose cosets are labelled by parity vectors in
//!   `(Z/2)^m`;
//! * the kernel `H_{ij}` of the projection `f_{ij}` that deletes every letter
//!   other than `a_i`, `a_j`. The image is the infinite dihedral group, whose
//!   elements are alternating words in `a_i, a_j`; cosets are indexed by `Z`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::word_group::{neighbors, ReducedWord};

/// Largest number of parity coordinates; cosets are enumerated explicitly.
pub const MAX_PARITY_COORDS: usize = 20;

/// `ω_x(a_i)`: occurrences of `a_i` in the reduced word.
pub fn letter_count(x: &ReducedWord, i: u32) -> usize {
    x.letters().iter().filter(|&&l| l == i).count()
}

/// A coset of a finite-index parity subgroup, as a bit vector: bit `l` is the
/// parity of the number of letters from `A_{l+1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ParityLabel(pub u64);

impl ParityLabel {
    pub fn bits(self, m: usize) -> Vec<u8> {
        (0..m).map(|l| ((self.0 >> l) & 1) as u8).collect()
    }

    /// Coset id, usable as an index into `0..2^m`.
    pub fn id(self) -> usize {
        self.0 as usize
    }
}

/// `H_{A_1} ∩ … ∩ H_{A_m}`, validated to have index exactly `2^m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteIndexSpec {
    order: u32,
    subsets: Vec<Vec<u32>>,
    /// Bit `l` of `masks[s-1]` is set iff `s ∈ A_{l+1}`.
    masks: Vec<u64>,
}

impl FiniteIndexSpec {
    pub fn new(order: u32, subsets: Vec<Vec<u32>>) -> Result<Self> {
        let m = subsets.len();
        if m == 0 || m > MAX_PARITY_COORDS {
            return Err(Error::InvalidConfig(format!(
                "need between 1 and {MAX_PARITY_COORDS} subsets, got {m}"
            )));
        }
        let rank = order + 1;
        let mut masks = vec![0u64; rank as usize];
        let mut clean = Vec::with_capacity(m);
        for (l, subset) in subsets.into_iter().enumerate() {
            if subset.is_empty() {
                return Err(Error::EmptySubset { position: l + 1 });
            }
            let mut subset = subset;
            subset.sort_unstable();
            subset.dedup();
            for &s in &subset {
                if s < 1 || s > rank {
                    return Err(Error::GeneratorOutOfRange {
                        index: i64::from(s),
                        rank,
                    });
                }
                masks[(s - 1) as usize] |= 1 << l;
            }
            clean.push(subset);
        }
        let r = gf2_rank(&masks);
        if r < m {
            return Err(Error::NonSpanningSpec { rank: r, m });
        }
        Ok(Self {
            order,
            subsets: clean,
            masks,
        })
    }

    /// The first `m` singletons `{1}, …, {m}`; valid whenever `m ≤ k + 1`.
    pub fn singletons(order: u32, m: usize) -> Result<Self> {
        Self::new(order, (1..=m as u32).map(|s| vec![s]).collect())
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn subsets(&self) -> &[Vec<u32>] {
        &self.subsets
    }

    /// Number of parity coordinates `m`.
    pub fn coords(&self) -> usize {
        self.subsets.len()
    }

    pub fn index(&self) -> usize {
        1 << self.coords()
    }

    /// Parity mask of generator `s`.
    pub fn generator_mask(&self, s: u32) -> u64 {
        self.masks[(s - 1) as usize]
    }

    pub fn generator_masks(&self) -> &[u64] {
        &self.masks
    }

    pub fn parity_label(&self, x: &ReducedWord) -> ParityLabel {
        ParityLabel(
            x.letters()
                .iter()
                .fold(0u64, |acc, &s| acc ^ self.generator_mask(s)),
        )
    }

    /// Membership in the intersection `∩ H_{A_l}`.
    pub fn contains(&self, x: &ReducedWord) -> bool {
        self.parity_label(x).0 == 0
    }
}

/// Rank over GF(2) of a list of bit vectors.
pub fn gf2_rank(vectors: &[u64]) -> usize {
    // Basis indexed by leading bit.
    let mut basis = [0u64; 64];
    let mut rank = 0;
    for &v in vectors {
        let mut v = v;
        while v != 0 {
            let top = 63 - v.leading_zeros() as usize;
            if basis[top] == 0 {
                basis[top] = v;
                rank += 1;
                break;
            }
            v ^= basis[top];
        }
    }
    rank
}

/// Checks a list of subsets and returns the index `2^m` of the intersection.
pub fn validate_and_index(order: u32, subsets: Vec<Vec<u32>>) -> Result<usize> {
    FiniteIndexSpec::new(order, subsets).map(|s| s.index())
}

/// Parity label of `x`, see [`FiniteIndexSpec::parity_label`].
pub fn parity_label(x: &ReducedWord, spec: &FiniteIndexSpec) -> ParityLabel {
    spec.parity_label(x)
}

/// Cosets of a finite-index parity subgroup with generator-induced edge
/// multiplicities.
///
/// Right multiplication by `a_s` moves coset `v` to `v ⊕ mask(s)`, so the
/// number of neighbours of any `x` in coset `v` that land in coset `w` is the
/// number of generators whose mask is `v ⊕ w`.
#[derive(Clone, Debug)]
pub struct QuotientGraph {
    coords: usize,
    order: u32,
    generator_masks: Vec<u64>,
    mask_counts: BTreeMap<u64, u32>,
}

impl QuotientGraph {
    pub fn new(spec: &FiniteIndexSpec) -> Self {
        let mut mask_counts = BTreeMap::new();
        for &mask in spec.generator_masks() {
            *mask_counts.entry(mask).or_insert(0) += 1;
        }
        Self {
            coords: spec.coords(),
            order: spec.order(),
            generator_masks: spec.generator_masks().to_vec(),
            mask_counts,
        }
    }

    pub fn coords(&self) -> usize {
        self.coords
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Number of cosets, `2^m`.
    pub fn len(&self) -> usize {
        1 << self.coords
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cosets(&self) -> impl Iterator<Item = ParityLabel> {
        (0..self.len() as u64).map(ParityLabel)
    }

    pub fn generator_masks(&self) -> &[u64] {
        &self.generator_masks
    }

    /// `|S_w(x)|` for any `x` in coset `v`.
    pub fn multiplicity(&self, v: usize, w: usize) -> u32 {
        self.mask_counts
            .get(&((v ^ w) as u64))
            .copied()
            .unwrap_or(0)
    }

    /// Cosets reachable from `v` in one step with their multiplicities,
    /// including `v` itself when some generator has the zero mask.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.mask_counts
            .iter()
            .map(move |(&mask, &c)| (v ^ mask as usize, c))
    }

    /// Unordered coset pairs `{v, w}` with `v < w` and positive multiplicity.
    pub fn cross_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for v in 0..self.len() {
            for (w, _) in self.neighbors(v) {
                if v < w {
                    out.push((v, w));
                }
            }
        }
        out.sort_unstable();
        out
    }
}

pub fn quotient_graph(spec: &FiniteIndexSpec) -> QuotientGraph {
    QuotientGraph::new(spec)
}

/// The pair `M = {i, j}` defining `H_{ij} = ker f_{ij}`, with `i` the
/// generator whose leading position marks positive coset indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PairSpec {
    order: u32,
    i: u32,
    j: u32,
}

impl PairSpec {
    pub fn new(order: u32, i: u32, j: u32) -> Result<Self> {
        let rank = order + 1;
        if i == j || !(1..=rank).contains(&i) || !(1..=rank).contains(&j) {
            return Err(Error::InvalidPair { i, j, order });
        }
        Ok(Self { order, i, j })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn i(&self) -> u32 {
        self.i
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    /// `f_{ij}(x)`: drop letters outside `{i, j}` and reduce.
    pub fn project(&self, x: &ReducedWord) -> ReducedWord {
        let mut stack: Vec<u32> = Vec::new();
        for &l in x.letters() {
            if l != self.i && l != self.j {
                continue;
            }
            if stack.last() == Some(&l) {
                stack.pop();
            } else {
                stack.push(l);
            }
        }
        ReducedWord::from_reduced_unchecked(x.order(), stack)
    }

    /// `n` with `x ∈ H_n`: the projected length, signed by its first letter
    /// (`+` for `a_i`, `−` for `a_j`).
    pub fn coset_index(&self, x: &ReducedWord) -> i64 {
        let image = self.project(x);
        let len = image.len() as i64;
        match image.first() {
            None => 0,
            Some(l) if l == self.i => len,
            Some(_) => -len,
        }
    }

    pub fn contains(&self, x: &ReducedWord) -> bool {
        self.coset_index(x) == 0
    }

    /// Counts of neighbours of `x` in `H_{n-1}`, `H_n`, `H_{n+1}`.
    pub fn lemma1_profile(&self, x: &ReducedWord) -> AdjacencyProfile {
        let n = self.coset_index(x);
        let mut profile = AdjacencyProfile::default();
        for y in neighbors(x) {
            match self.coset_index(&y) - n {
                -1 => profile.below += 1,
                0 => profile.same += 1,
                1 => profile.above += 1,
                _ => profile.other += 1,
            }
        }
        profile
    }

    /// A representative word of `H_n`: the alternating word of length `|n|`
    /// starting with `a_i` (n > 0) or `a_j` (n < 0).
    pub fn representative(&self, n: i64) -> ReducedWord {
        let (first, second) = if n >= 0 {
            (self.i, self.j)
        } else {
            (self.j, self.i)
        };
        let letters = (0..n.unsigned_abs())
            .map(|t| if t % 2 == 0 { first } else { second })
            .collect();
        ReducedWord::from_reduced_unchecked(self.order, letters)
    }
}

/// Neighbour counts by coset-index offset. `other` counts neighbours more
/// than one step away and is zero for a correct indexing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AdjacencyProfile {
    pub below: usize,
    pub same: usize,
    pub above: usize,
    pub other: usize,
}

impl AdjacencyProfile {
    pub fn triple(&self) -> (usize, usize, usize) {
        (self.below, self.same, self.above)
    }
}

pub fn project(x: &ReducedWord, pair: &PairSpec) -> ReducedWord {
    pair.project(x)
}

pub fn coset_index(x: &ReducedWord, pair: &PairSpec) -> i64 {
    pair.coset_index(x)
}

pub fn lemma1_profile(x: &ReducedWord, pair: &PairSpec) -> AdjacencyProfile {
    pair.lemma1_profile(x)
}

/// Either kind of subgroup.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SubgroupSpec {
    Finite(FiniteIndexSpec),
    Pair(PairSpec),
}

/// JSON form: `{"finite": {"A": [[1],[2]]}}` or `{"pair": [1,2]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum SubgroupSpecJson {
    Finite {
        #[serde(rename = "A")]
        a: Vec<Vec<u32>>,
    },
    Pair([u32; 2]),
}

impl SubgroupSpec {
    pub fn from_json(json: &SubgroupSpecJson, order: u32) -> Result<Self> {
        match json {
            SubgroupSpecJson::Finite { a } => {
                FiniteIndexSpec::new(order, a.clone()).map(SubgroupSpec::Finite)
            }
            SubgroupSpecJson::Pair([i, j]) => PairSpec::new(order, *i, *j).map(SubgroupSpec::Pair),
        }
    }

    pub fn parse(text: &str, order: u32) -> Result<Self> {
        let json: SubgroupSpecJson =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("subgroup spec: {e}")))?;
        Self::from_json(&json, order)
    }

    pub fn to_json(&self) -> SubgroupSpecJson {
        match self {
            SubgroupSpec::Finite(f) => SubgroupSpecJson::Finite {
                a: f.subsets().to_vec(),
            },
            SubgroupSpec::Pair(p) => SubgroupSpecJson::Pair([p.i(), p.j()]),
        }
    }

    pub fn order(&self) -> u32 {
        match self {
            SubgroupSpec::Finite(f) => f.order(),
            SubgroupSpec::Pair(p) => p.order(),
        }
    }
}
