//! Reduced words of the group `G_k`, the free product of `k + 1` copies of
//! `Z/2`, and the Cayley tree they span.
//!
//! Every element of `G_k` has a unique cancellation-free spelling over the
//! involutive generators `a_1 .. a_{k+1}`. The Cayley graph with respect to
//! these generators is the regular tree in which every vertex has `k + 1`
//! neighbours, so words double as tree vertices: `x` and `x·a_s` are adjacent
//! and the tree distance is the length of `x⁻¹·y`.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};

/// Default upper bound on the number of vertices a [`Ball`] may hold.
pub const DEFAULT_VERTEX_CAP: usize = 1_000_000;

/// Environment variable that overrides [`DEFAULT_VERTEX_CAP`].
pub const VERTEX_CAP_ENV: &str = "PHARMONIC_VERTEX_CAP";

/// Vertex cap honouring the `PHARMONIC_VERTEX_CAP` override.
pub fn vertex_cap() -> usize {
    std::env::var(VERTEX_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_VERTEX_CAP)
}

/// An element of `G_k` in normal form.
///
/// Letters are generator indices in `1..=k+1` with no two adjacent letters
/// equal. The empty word is the identity.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReducedWord {
    order: u32,
    letters: Vec<u32>,
}

impl ReducedWord {
    /// The identity `e` of `G_k`.
    pub fn identity(order: u32) -> Self {
        Self {
            order,
            letters: Vec::new(),
        }
    }

    /// The single generator `a_s`.
    pub fn generator(order: u32, s: u32) -> Result<Self> {
        reduce(&[s], order)
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Number of generators, `k + 1`.
    pub fn rank(&self) -> u32 {
        self.order + 1
    }

    pub fn letters(&self) -> &[u32] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    /// Same as [`is_identity`](Self::is_identity).
    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn first(&self) -> Option<u32> {
        self.letters.first().copied()
    }

    pub fn last(&self) -> Option<u32> {
        self.letters.last().copied()
    }

    /// Right multiplication by one generator: the neighbour of `self` along
    /// the edge labelled `s`. The generator index is not range-checked.
    pub(crate) fn times_generator(&self, s: u32) -> Self {
        let mut letters = self.letters.clone();
        if letters.last() == Some(&s) {
            letters.pop();
        } else {
            letters.push(s);
        }
        Self {
            order: self.order,
            letters,
        }
    }

    /// Builds a word from letters already known to be reduced and in range.
    pub(crate) fn from_reduced_unchecked(order: u32, letters: Vec<u32>) -> Self {
        debug_assert!(letters.windows(2).all(|w| w[0] != w[1]));
        Self { order, letters }
    }

    pub fn multiply(&self, other: &ReducedWord) -> Result<ReducedWord> {
        multiply(self, other)
    }

    pub fn inverse(&self) -> ReducedWord {
        inverse(self)
    }
}

impl fmt::Debug for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{l}")?;
        }
        f.write_str("]")
    }
}

/// Words serialize as bare JSON arrays of generator indices; the order `k`
/// travels separately (it is a property of the whole job, not of a word).
impl Serialize for ReducedWord {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.letters.serialize(serializer)
    }
}

/// Parses the JSON array form `[1,2,1]` and reduces it in `G_k`.
pub fn parse_word(text: &str, order: u32) -> Result<ReducedWord> {
    let raw: Vec<i64> = serde_json::from_str(text.trim())
        .map_err(|e| Error::Parse(format!("word {text:?}: {e}")))?;
    let mut letters = Vec::with_capacity(raw.len());
    for l in raw {
        if l < 1 || l > i64::from(order) + 1 {
            return Err(Error::GeneratorOutOfRange {
                index: l,
                rank: order + 1,
            });
        }
        letters.push(l as u32);
    }
    reduce(&letters, order)
}

/// Normal form of a raw generator sequence.
///
/// One left-to-right pass with a stack: a letter equal to the top of the stack
/// cancels it, anything else is pushed. Cancellation in a free product of
/// involutions is confluent, so this is the normal form.
pub fn reduce(letters: &[u32], order: u32) -> Result<ReducedWord> {
    let mut stack: Vec<u32> = Vec::with_capacity(letters.len());
    for &l in letters {
        if l < 1 || l > order + 1 {
            return Err(Error::GeneratorOutOfRange {
                index: i64::from(l),
                rank: order + 1,
            });
        }
        if stack.last() == Some(&l) {
            stack.pop();
        } else {
            stack.push(l);
        }
    }
    Ok(ReducedWord {
        order,
        letters: stack,
    })
}

fn check_same_order(x: &ReducedWord, y: &ReducedWord) -> Result<()> {
    if x.order != y.order {
        return Err(Error::OrderMismatch {
            left: x.order,
            right: y.order,
        });
    }
    Ok(())
}

pub fn multiply(x: &ReducedWord, y: &ReducedWord) -> Result<ReducedWord> {
    check_same_order(x, y)?;
    // Both operands are reduced, so cancellation only happens at the seam.
    let overlap = x
        .letters
        .iter()
        .rev()
        .zip(y.letters.iter())
        .take_while(|(a, b)| a == b)
        .count();
    let mut letters = Vec::with_capacity(x.len() + y.len() - 2 * overlap);
    letters.extend_from_slice(&x.letters[..x.len() - overlap]);
    letters.extend_from_slice(&y.letters[overlap..]);
    Ok(ReducedWord {
        order: x.order,
        letters,
    })
}

/// Generators are involutions, so the inverse is the reversed word.
pub fn inverse(x: &ReducedWord) -> ReducedWord {
    let mut letters = x.letters.clone();
    letters.reverse();
    ReducedWord {
        order: x.order,
        letters,
    }
}

/// Tree distance `d(x, y) = |x⁻¹·y|`.
pub fn distance(x: &ReducedWord, y: &ReducedWord) -> Result<usize> {
    check_same_order(x, y)?;
    let common = x
        .letters
        .iter()
        .zip(y.letters.iter())
        .take_while(|(a, b)| a == b)
        .count();
    Ok(x.len() + y.len() - 2 * common)
}

/// The `k + 1` neighbours `x·a_s`, in generator order.
pub fn neighbors(x: &ReducedWord) -> Vec<ReducedWord> {
    (1..=x.rank()).map(|s| x.times_generator(s)).collect()
}

/// Number of vertices within distance `radius` of any vertex of the tree of
/// order `k`, or `None` on overflow.
pub fn ball_size(order: u32, radius: usize) -> Option<usize> {
    let mut total: usize = 1;
    let mut shell: usize = 1;
    for r in 0..radius {
        let factor = if r == 0 {
            order as usize + 1
        } else {
            order as usize
        };
        shell = shell.checked_mul(factor)?;
        total = total.checked_add(shell)?;
    }
    Some(total)
}

/// A finite ball of the Cayley tree, enumerated breadth-first.
#[derive(Clone, Debug)]
pub struct Ball {
    center: ReducedWord,
    radius: usize,
    vertices: Vec<ReducedWord>,
    depth: Vec<usize>,
    index: HashMap<ReducedWord, usize>,
    edges: Vec<(usize, usize)>,
}

impl Ball {
    pub fn new(center: &ReducedWord, radius: usize) -> Result<Self> {
        Self::with_cap(center, radius, vertex_cap())
    }

    pub fn with_cap(center: &ReducedWord, radius: usize, cap: usize) -> Result<Self> {
        let needed = ball_size(center.order, radius);
        match needed {
            Some(n) if n <= cap => {}
            _ => {
                return Err(Error::VertexCapExceeded {
                    radius,
                    needed,
                    cap,
                })
            }
        }
        let capacity = needed.unwrap_or(0);
        let mut vertices = Vec::with_capacity(capacity);
        let mut depth = Vec::with_capacity(capacity);
        let mut index = HashMap::with_capacity(capacity);
        let mut edges = Vec::with_capacity(capacity.saturating_sub(1));

        vertices.push(center.clone());
        depth.push(0);
        index.insert(center.clone(), 0);
        let mut queue = VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            if depth[v] == radius {
                continue;
            }
            for w in neighbors(&vertices[v]) {
                if index.contains_key(&w) {
                    continue;
                }
                let id = vertices.len();
                index.insert(w.clone(), id);
                vertices.push(w);
                depth.push(depth[v] + 1);
                edges.push((v, id));
                queue.push_back(id);
            }
        }
        Ok(Self {
            center: center.clone(),
            radius,
            vertices,
            depth,
            index,
            edges,
        })
    }

    pub fn center(&self) -> &ReducedWord {
        &self.center
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn order(&self) -> u32 {
        self.center.order
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[ReducedWord] {
        &self.vertices
    }

    pub fn vertex(&self, id: usize) -> &ReducedWord {
        &self.vertices[id]
    }

    /// Distance of vertex `id` from the center.
    pub fn depth(&self, id: usize) -> usize {
        self.depth[id]
    }

    pub fn index_of(&self, x: &ReducedWord) -> Option<usize> {
        self.index.get(x).copied()
    }

    pub fn contains(&self, x: &ReducedWord) -> bool {
        self.index.contains_key(x)
    }

    /// Tree edges as pairs of vertex ids, parent first.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Ids of vertices at distance exactly `radius` from the center.
    pub fn boundary(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&v| self.depth[v] == self.radius)
    }

    /// Ids of vertices strictly inside the ball; all their neighbours are
    /// in the ball.
    pub fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&v| self.depth[v] < self.radius)
    }

    pub fn is_boundary(&self, id: usize) -> bool {
        self.depth[id] == self.radius
    }

    /// Adjacency lists by vertex id.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.len()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }
}

impl Serialize for Ball {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let edges: Vec<[&ReducedWord; 2]> = self
            .edges
            .iter()
            .map(|&(a, b)| [&self.vertices[a], &self.vertices[b]])
            .collect();
        let mut st = serializer.serialize_struct("Ball", 4)?;
        st.serialize_field("center", &self.center)?;
        st.serialize_field("radius", &self.radius)?;
        st.serialize_field("vertices", &self.vertices)?;
        st.serialize_field("edges", &edges)?;
        st.end()
    }
}
