//! The discrete p-Laplacian on the Cayley tree.
//!
//! For a function `u` on vertices and positive symmetric edge resistances `r`,
//!
//! ```text
//! ∇u(x, y) = (u(y) − u(x)) / r(x, y)
//! Δ_p u(x) = Σ_{y ∈ S(x)} φ_p(∇u(x, y)),      φ_p(t) = |t|^{p−2} t
//! ```
//!
//! `Δ_p u(x)` is, up to the factor `−p`, the partial derivative of the
//! p-energy `Σ_{<x,y>} r^{1−p} |u(y) − u(x)|^p` in `u(x)`. The energy is
//! strictly convex in the interior values once the boundary is fixed, which
//! gives the Dirichlet solver here: cyclic coordinate descent where every
//! vertex update solves `Δ_p u(x) = 0` in the single unknown `u(x)`.

use std::collections::BTreeMap;

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::word_group::{distance, neighbors, parse_word, Ball, ReducedWord};

pub const MIN_P: f64 = 1.1;
pub const MAX_P: f64 = 10.0;

/// Default sweep cap for the coordinate-descent engine.
/// Scales, relative to the largest edge difference, below which an edge
/// counts as flat when grouping nodes for joint moves. Coarse to fine.
const FLAT_EDGE_FRACTIONS: [f64; 6] = [1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12];

pub const DEFAULT_MAX_SWEEPS: usize = 200_000;

/// An exponent `p` checked to lie in `[1.1, 10]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
pub struct Exponent(f64);

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if !(MIN_P..=MAX_P).contains(&p) {
            return Err(Error::POutOfRange(p));
        }
        Ok(Self(p))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `φ_p(t) = |t|^{p−2} t`, with `φ_p(0) = 0`.
    #[inline]
    pub fn phi(self, t: f64) -> f64 {
        if self.0 == 2.0 || t == 0.0 {
            t
        } else {
            t.signum() * t.abs().powf(self.0 - 1.0)
        }
    }

    /// `r^{p−1}`, the factor relating `φ_p(Δu)` to `φ_p(∇u)`.
    #[inline]
    pub fn resistance_power(self, r: f64) -> f64 {
        if self.0 == 2.0 {
            r
        } else {
            r.powf(self.0 - 1.0)
        }
    }
}

impl TryFrom<f64> for Exponent {
    type Error = Error;

    fn try_from(p: f64) -> Result<Self> {
        Self::new(p)
    }
}

pub fn phi_p(t: f64, p: f64) -> Result<f64> {
    Ok(Exponent::new(p)?.phi(t))
}

/// Edge resistances. Implementations must return the same positive value
/// for `(x, y)` and `(y, x)`.
pub trait Resistance: Sync {
    fn resistance(&self, x: &ReducedWord, y: &ReducedWord) -> f64;
}

/// The same resistance on every edge.
#[derive(Clone, Copy, Debug)]
pub struct UniformResistance(pub f64);

impl Resistance for UniformResistance {
    fn resistance(&self, _: &ReducedWord, _: &ReducedWord) -> f64 {
        self.0
    }
}

impl<F> Resistance for F
where
    F: Fn(&ReducedWord, &ReducedWord) -> f64 + Sync,
{
    fn resistance(&self, x: &ReducedWord, y: &ReducedWord) -> f64 {
        self(x, y)
    }
}

/// Per-edge pseudo-random resistances, log-uniform in `[lo, hi]`, derived
/// from a hash of the unordered edge and a seed.
#[derive(Clone, Copy, Debug)]
pub struct HashedEdgeResistance {
    pub seed: u64,
    pub lo: f64,
    pub hi: f64,
}

impl HashedEdgeResistance {
    pub fn new(seed: u64, lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::InvalidResistance(format!("range [{lo}, {hi}]")));
        }
        Ok(Self { seed, lo, hi })
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn word_hash(x: &ReducedWord, seed: u64) -> u64 {
    x.letters()
        .iter()
        .fold(splitmix64(seed ^ x.len() as u64), |h, &l| {
            splitmix64(h ^ u64::from(l))
        })
}

impl Resistance for HashedEdgeResistance {
    fn resistance(&self, x: &ReducedWord, y: &ReducedWord) -> f64 {
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        let h = splitmix64(word_hash(a, self.seed) ^ word_hash(b, !self.seed).rotate_left(17));
        let unit = (h >> 11) as f64 / (1u64 << 53) as f64;
        (self.lo.ln() + unit * (self.hi.ln() - self.lo.ln())).exp()
    }
}

/// Anything that can report values at vertices: explicit tables, lifted
/// periodic profiles, family members.
pub trait VertexField {
    fn value_at(&self, x: &ReducedWord) -> Option<f64>;
}

impl<F> VertexField for F
where
    F: Fn(&ReducedWord) -> Option<f64>,
{
    fn value_at(&self, x: &ReducedWord) -> Option<f64> {
        self(x)
    }
}

/// A function on a finite set of vertices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VertexFunction {
    values: BTreeMap<ReducedWord, f64>,
}

impl VertexFunction {
    pub fn new() -> Self {
        Self::default()
    }

    /// Samples `field` on every vertex of `ball`.
    pub fn sample<F: VertexField + ?Sized>(field: &F, ball: &Ball) -> Result<Self> {
        let mut out = Self::new();
        for x in ball.vertices() {
            let v = field
                .value_at(x)
                .ok_or_else(|| Error::MissingValue(x.to_string()))?;
            out.insert(x.clone(), v);
        }
        Ok(out)
    }

    /// Samples `field` on the boundary sphere of `ball`.
    pub fn sample_boundary<F: VertexField + ?Sized>(field: &F, ball: &Ball) -> Result<Self> {
        let mut out = Self::new();
        for id in ball.boundary() {
            let x = ball.vertex(id);
            let v = field
                .value_at(x)
                .ok_or_else(|| Error::MissingValue(x.to_string()))?;
            out.insert(x.clone(), v);
        }
        Ok(out)
    }

    pub fn insert(&mut self, x: ReducedWord, value: f64) {
        self.values.insert(x, value);
    }

    pub fn get(&self, x: &ReducedWord) -> Option<f64> {
        self.values.get(x).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ReducedWord, f64)> {
        self.values.iter().map(|(k, &v)| (k, v))
    }

    /// Parses the JSON map form `{"[1,2]": 0.5, "[]": 0}`.
    pub fn from_json(text: &str, order: u32) -> Result<Self> {
        let raw: BTreeMap<String, f64> = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("vertex function: {e}")))?;
        let mut out = Self::new();
        for (k, v) in raw {
            out.insert(parse_word(&k, order)?, v);
        }
        Ok(out)
    }
}

impl VertexField for VertexFunction {
    fn value_at(&self, x: &ReducedWord) -> Option<f64> {
        self.get(x)
    }
}

impl Serialize for VertexFunction {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.values.len()))?;
        for (k, v) in &self.values {
            map.serialize_entry(&k.to_string(), v)?;
        }
        map.end()
    }
}

fn value_of<F: VertexField + ?Sized>(u: &F, x: &ReducedWord) -> Result<f64> {
    u.value_at(x)
        .ok_or_else(|| Error::MissingValue(x.to_string()))
}

/// `∇u(x, y) = (u(y) − u(x)) / r(x, y)` on an edge.
pub fn gradient<F, R>(u: &F, x: &ReducedWord, y: &ReducedWord, r: &R) -> Result<f64>
where
    F: VertexField + ?Sized,
    R: Resistance + ?Sized,
{
    if distance(x, y)? != 1 {
        return Err(Error::NotAdjacent(x.to_string(), y.to_string()));
    }
    Ok((value_of(u, y)? - value_of(u, x)?) / r.resistance(x, y))
}

/// `Δ_p u(x)`, summed as `Σ φ_p(u(y) − u(x)) / r(x, y)^{p−1}`.
pub fn p_laplacian<F, R>(u: &F, x: &ReducedWord, r: &R, p: Exponent) -> Result<f64>
where
    F: VertexField + ?Sized,
    R: Resistance + ?Sized,
{
    let ux = value_of(u, x)?;
    let mut total = 0.0;
    for y in neighbors(x) {
        let uy = value_of(u, &y)?;
        total += p.phi(uy - ux) / p.resistance_power(r.resistance(x, &y));
    }
    Ok(total)
}

/// `Σ_{<x,y>} r(x,y)^{1−p} |u(y) − u(x)|^p` over the edges of `region`.
pub fn energy<F, R>(u: &F, region: &Ball, r: &R, p: Exponent) -> Result<f64>
where
    F: VertexField + ?Sized,
    R: Resistance + ?Sized,
{
    let mut total = 0.0;
    for &(a, b) in region.edges() {
        let (x, y) = (region.vertex(a), region.vertex(b));
        let diff = value_of(u, y)? - value_of(u, x)?;
        let rxy = r.resistance(x, y);
        total += diff.abs().powf(p.value()) / p.resistance_power(rxy);
    }
    Ok(total)
}

/// A finite graph with symmetric positive edge weights on which the
/// coordinate-descent engine runs. The residual at node `i` is
/// `Σ_j w_ij φ_p(u_j − u_i)`.
#[derive(Clone, Debug)]
pub struct WeightedGraph {
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl WeightedGraph {
    pub fn new(nodes: usize) -> Self {
        Self {
            adjacency: vec![Vec::new(); nodes],
        }
    }

    /// Adds weight `w` to the edge `{a, b}`. Self-loops are ignored: they
    /// never contribute to residuals or energy.
    pub fn add_edge(&mut self, a: usize, b: usize, w: f64) {
        if a == b {
            return;
        }
        debug_assert!(w > 0.0);
        self.adjacency[a].push((b, w));
        self.adjacency[b].push((a, w));
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn residual_at(&self, u: &[f64], i: usize, p: Exponent) -> f64 {
        self.adjacency[i]
            .iter()
            .map(|&(j, w)| w * p.phi(u[j] - u[i]))
            .sum()
    }

    /// Solves the one-node equation `Σ_j w_ij φ_p(u_j − t) = 0` for `t`.
    fn local_solve(&self, u: &[f64], i: usize, p: Exponent) -> f64 {
        let nbrs = &self.adjacency[i];
        if nbrs.is_empty() {
            return u[i];
        }
        balance_point(|| nbrs.iter().map(|&(j, w)| (u[j], w)), p)
    }

    /// Shift `δ` minimizing the energy when every node of `group` moves by
    /// `δ` together. Edges inside the group cancel, so `δ` solves
    /// `Σ_{i ∈ group, j ∉ group} w_ij φ_p(u_j − u_i − δ) = 0`.
    fn group_shift(&self, u: &[f64], group: &[usize], member: &[bool], p: Exponent) -> f64 {
        let terms = || {
            group.iter().flat_map(move |&i| {
                self.adjacency[i]
                    .iter()
                    .filter(move |&&(j, _)| !member[j])
                    .map(move |&(j, w)| (u[j] - u[i], w))
            })
        };
        if terms().next().is_none() {
            return 0.0;
        }
        balance_point(terms, p)
    }

    /// Groups free nodes joined by edges whose difference is at most
    /// `fraction` of the largest edge difference. Only groups of two or more
    /// are kept.
    fn flat_groups(&self, u: &[f64], fixed: &[bool], fraction: f64) -> Vec<Vec<usize>> {
        let scale = (0..self.len())
            .flat_map(|i| {
                self.adjacency[i]
                    .iter()
                    .map(move |&(j, _)| (u[j] - u[i]).abs())
            })
            .fold(0.0, f64::max);
        let theta = fraction * scale;
        let mut parent: Vec<usize> = (0..self.len()).collect();
        fn root(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for i in 0..self.len() {
            if fixed[i] {
                continue;
            }
            for &(j, _) in &self.adjacency[i] {
                if j > i && !fixed[j] && (u[j] - u[i]).abs() <= theta {
                    let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                    parent[a] = b;
                }
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> =
            std::collections::BTreeMap::new();
        for i in (0..self.len()).filter(|&i| !fixed[i]) {
            groups.entry(root(&mut parent, i)).or_default().push(i);
        }
        groups.into_values().filter(|g| g.len() > 1).collect()
    }

    /// Cyclic coordinate descent on the free nodes with alternating sweep
    /// direction, until the largest free-node residual is at most `tol`.
    ///
    /// The iteration runs in coordinates shifted by the value of the first
    /// fixed node, so that residuals near a constant state are resolved
    /// relative to zero rather than to the magnitude of the values.
    pub fn minimize(
        &self,
        start: &[f64],
        fixed: &[bool],
        p: Exponent,
        tol: f64,
        max_sweeps: usize,
    ) -> Result<DescentOutcome> {
        self.minimize_with_step(start, fixed, p, tol, f64::INFINITY, max_sweeps)
    }

    /// Like [`minimize`](Self::minimize), but also keeps sweeping until no
    /// free value moves by more than `step_tol` in a sweep. Residual control
    /// alone is weak for large `p`, where a residual `e` only bounds value
    /// errors by roughly `e^(1/(p-1))`.
    pub fn minimize_with_step(
        &self,
        start: &[f64],
        fixed: &[bool],
        p: Exponent,
        tol: f64,
        step_tol: f64,
        max_sweeps: usize,
    ) -> Result<DescentOutcome> {
        if step_tol.is_nan() || step_tol < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "step tolerance must be non-negative, got {step_tol}"
            )));
        }
        if tol <= 0.0 || !tol.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "tolerance must be positive, got {tol}"
            )));
        }
        if start.len() != self.len() || fixed.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: start.len().min(fixed.len()),
            });
        }
        let shift = fixed.iter().position(|&f| f).map_or(0.0, |i| start[i]);
        let mut u: Vec<f64> = start.iter().map(|v| v - shift).collect();
        let free: Vec<usize> = (0..self.len()).filter(|&i| !fixed[i]).collect();
        let max_residual = |u: &[f64]| {
            free.iter()
                .map(|&i| self.residual_at(u, i, p).abs())
                .fold(0.0, f64::max)
        };

        let mut residual = max_residual(&u);
        let mut sweeps = 0;
        let mut step = f64::INFINITY;
        // A zero residual is an exact solution, whatever the last step was.
        while residual > tol || (step > step_tol && residual > 0.0) {
            if sweeps == max_sweeps {
                return Err(Error::NonConvergence {
                    iterations: sweeps,
                    residual,
                });
            }
            let mut changed = false;
            step = 0.0;
            let mut visit = |i: usize, u: &mut Vec<f64>| {
                let t = self.local_solve(u, i, p);
                if t != u[i] {
                    step = f64::max(step, (t - u[i]).abs());
                    u[i] = t;
                    changed = true;
                }
            };
            if sweeps % 2 == 0 {
                for &i in &free {
                    visit(i, &mut u);
                }
            } else {
                for &i in free.iter().rev() {
                    visit(i, &mut u);
                }
            }
            if p.value() < 2.0 {
                // For p < 2 an edge with zero difference is infinitely stiff,
                // so nodes it joins can only usefully move together.
                let mut member = vec![false; self.len()];
                let groups = FLAT_EDGE_FRACTIONS
                    .iter()
                    .flat_map(|&f| self.flat_groups(&u, fixed, f))
                    .collect::<Vec<_>>();
                for group in groups {
                    group.iter().for_each(|&i| member[i] = true);
                    let delta = self.group_shift(&u, &group, &member, p);
                    group.iter().for_each(|&i| member[i] = false);
                    if delta != 0.0 {
                        for &i in &group {
                            u[i] += delta;
                        }
                        step = f64::max(step, delta.abs());
                        changed = true;
                    }
                }
            }
            sweeps += 1;
            residual = max_residual(&u);
            if !changed {
                if residual > tol {
                    // Every node already solves its own equation to rounding.
                    return Err(Error::NonConvergence {
                        iterations: sweeps,
                        residual,
                    });
                }
                break;
            }
        }
        let values: Vec<f64> = u.iter().map(|v| v + shift).collect();
        Ok(DescentOutcome {
            values,
            residual,
            sweeps,
        })
    }
}

/// Root in `t` of `Σ w φ_p(v − t)` over `(v, w)` terms. The sum is strictly
/// decreasing in `t` and changes sign between the smallest and largest `v`.
/// Newton steps are taken inside a shrinking bracket, with bisection
/// whenever a step leaves the bracket or fails to halve the step before last.
fn balance_point<F, I>(terms: F, p: Exponent) -> f64
where
    F: Fn() -> I,
    I: Iterator<Item = (f64, f64)>,
{
    let (mut lo, mut hi) = terms().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, (v, _)| {
        (acc.0.min(v), acc.1.max(v))
    });
    if lo == hi {
        return lo;
    }
    let (num, den) = terms().fold((0.0, 0.0), |acc, (v, w)| (acc.0 + w * v, acc.1 + w));
    let mean = (num / den).clamp(lo, hi);
    if p.value() == 2.0 {
        return mean;
    }
    let q = p.value() - 2.0;
    // Value of the sum and minus its derivative at `t`.
    let eval = |t: f64| -> (f64, f64) {
        terms().fold((0.0, 0.0), |acc, (v, w)| {
            let d = v - t;
            if d == 0.0 {
                return (acc.0, if q < 0.0 { f64::INFINITY } else { acc.1 });
            }
            let m = w * d.abs().powf(q);
            (acc.0 + m * d, acc.1 + (p.value() - 1.0) * m)
        })
    };
    // Resolve `t` to the rounding granularity of the data, not of `t` itself.
    let width = f64::EPSILON * lo.abs().max(hi.abs());
    let mut t = mean;
    let (mut step, mut prev_step) = (hi - lo, hi - lo);
    for _ in 0..2100 {
        let (g, slope) = eval(t);
        if g == 0.0 {
            return t;
        }
        if g > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        if hi - lo <= width {
            break;
        }
        let newton = t + g / slope;
        let next = if newton > lo && newton < hi && 2.0 * (newton - t).abs() <= prev_step {
            newton
        } else {
            lo + 0.5 * (hi - lo)
        };
        prev_step = step;
        step = (next - t).abs();
        t = next;
        if step <= width {
            // Newton has settled on one side; probe one grain past it so the
            // final choice is between the two values closest to the root.
            let (g, _) = eval(t);
            if g == 0.0 {
                return t;
            }
            let probe = if g > 0.0 { t + width } else { t - width };
            let (gp, _) = eval(probe);
            for (x, gx) in [(t, g), (probe, gp)] {
                if gx > 0.0 {
                    lo = lo.max(x);
                } else if gx < 0.0 {
                    hi = hi.min(x);
                } else {
                    return x;
                }
            }
            break;
        }
    }
    if eval(lo).0.abs() <= eval(hi).0.abs() {
        lo
    } else {
        hi
    }
}

/// Result of [`WeightedGraph::minimize`]. `residual` is measured in the
/// solver's shifted coordinates.
#[derive(Clone, Debug)]
pub struct DescentOutcome {
    pub values: Vec<f64>,
    pub residual: f64,
    pub sweeps: usize,
}

/// Output of [`dirichlet_solve`].
#[derive(Clone, Debug)]
pub struct DirichletSolution {
    pub values: VertexFunction,
    /// Largest `|Δ_p u|` over the interior.
    pub residual: f64,
    pub sweeps: usize,
}

fn ball_graph<R: Resistance + ?Sized>(ball: &Ball, r: &R, p: Exponent) -> Result<WeightedGraph> {
    let mut g = WeightedGraph::new(ball.len());
    for &(a, b) in ball.edges() {
        let rab = r.resistance(ball.vertex(a), ball.vertex(b));
        if !(rab > 0.0 && rab.is_finite()) {
            return Err(Error::InvalidResistance(format!(
                "r({}, {}) = {rab}",
                ball.vertex(a),
                ball.vertex(b)
            )));
        }
        g.add_edge(a, b, 1.0 / p.resistance_power(rab));
    }
    Ok(g)
}

/// Minimizes the p-energy on `region` with the boundary sphere held at
/// `boundary`, starting from the mean boundary value.
pub fn dirichlet_solve<R: Resistance + ?Sized>(
    region: &Ball,
    boundary: &VertexFunction,
    r: &R,
    p: Exponent,
    tol: f64,
) -> Result<DirichletSolution> {
    dirichlet_solve_from(region, boundary, r, p, tol, None, DEFAULT_MAX_SWEEPS)
}

/// [`dirichlet_solve`] with an explicit starting guess for interior values
/// and sweep cap.
pub fn dirichlet_solve_from<R: Resistance + ?Sized>(
    region: &Ball,
    boundary: &VertexFunction,
    r: &R,
    p: Exponent,
    tol: f64,
    start: Option<&VertexFunction>,
    max_sweeps: usize,
) -> Result<DirichletSolution> {
    let boundary_ids: Vec<usize> = region.boundary().collect();
    if boundary.is_empty() || boundary_ids.is_empty() {
        return Err(Error::InvalidConfig("empty boundary".into()));
    }
    let mut fixed = vec![false; region.len()];
    let mut init = vec![0.0; region.len()];
    let mut mean = 0.0;
    for &id in &boundary_ids {
        let v = value_of(boundary, region.vertex(id))?;
        fixed[id] = true;
        init[id] = v;
        mean += v;
    }
    mean /= boundary_ids.len() as f64;
    for id in region.interior() {
        init[id] = match start {
            Some(s) => value_of(s, region.vertex(id))?,
            None => mean,
        };
    }
    let graph = ball_graph(region, r, p)?;
    let out = graph.minimize(&init, &fixed, p, tol, max_sweeps)?;

    let mut values = VertexFunction::new();
    for (id, x) in region.vertices().iter().enumerate() {
        values.insert(x.clone(), out.values[id]);
    }
    let residual = region
        .interior()
        .map(|id| graph.residual_at(&out.values, id, p).abs())
        .fold(0.0, f64::max);
    Ok(DirichletSolution {
        values,
        residual,
        sweeps: out.sweeps,
    })
}

/// Outcome of a p-harmonicity check.
#[derive(Clone, Debug, Serialize)]
pub struct HarmonicityReport {
    pub passed: bool,
    pub max_residual: f64,
    /// The vertex with the largest residual, if that residual exceeds `tol`.
    pub offending: Option<ReducedWord>,
    /// `(vertex, Δ_p u(vertex))` for every checked vertex, in input order.
    pub rows: Vec<(ReducedWord, f64)>,
}

impl HarmonicityReport {
    /// CSV rows `vertex,residual`, with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("vertex,residual\n");
        for (x, r) in &self.rows {
            out.push_str(&format!("\"{x}\",{r:.16e}\n"));
        }
        out
    }
}

/// Checks `|Δ_p u| ≤ tol` at every vertex of `interior`.
pub fn is_p_harmonic<'a, F, R, I>(
    u: &F,
    interior: I,
    r: &R,
    p: Exponent,
    tol: f64,
) -> Result<HarmonicityReport>
where
    F: VertexField + ?Sized,
    R: Resistance + ?Sized,
    I: IntoIterator<Item = &'a ReducedWord>,
{
    let mut rows = Vec::new();
    let mut max_residual = 0.0f64;
    let mut worst = None;
    for x in interior {
        let lap = p_laplacian(u, x, r, p)?;
        if lap.abs() > max_residual || worst.is_none() {
            max_residual = max_residual.max(lap.abs());
            worst = Some(x.clone());
        }
        rows.push((x.clone(), lap));
    }
    let passed = max_residual <= tol;
    Ok(HarmonicityReport {
        passed,
        max_residual,
        offending: if passed { None } else { worst },
        rows,
    })
}

/// [`is_p_harmonic`] over the interior of a ball.
pub fn is_p_harmonic_on_ball<F, R>(
    u: &F,
    ball: &Ball,
    r: &R,
    p: Exponent,
    tol: f64,
) -> Result<HarmonicityReport>
where
    F: VertexField + ?Sized,
    R: Resistance + ?Sized,
{
    is_p_harmonic(u, ball.interior().map(|id| ball.vertex(id)), r, p, tol)
}
