#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};

use nalgebra::{DMatrix, DVector};
use pharmonic::plaplace::{Resistance, VertexFunction};
use pharmonic::subgroup::PairSpec;
use pharmonic::word_group::{neighbors, reduce, Ball, ReducedWord};
use rand::Rng;

/// A uniformly random reduced word of length `len`.
pub fn random_word<R: Rng>(rng: &mut R, k: u32, len: usize) -> ReducedWord {
    let mut letters: Vec<u32> = Vec::with_capacity(len);
    while letters.len() < len {
        let s = rng.gen_range(1..=k + 1);
        if letters.last() != Some(&s) {
            letters.push(s);
        }
    }
    reduce(&letters, k).unwrap()
}

/// A random raw (unreduced) generator sequence.
pub fn random_raw<R: Rng>(rng: &mut R, k: u32, len: usize) -> Vec<u32> {
    (0..len).map(|_| rng.gen_range(1..=k + 1)).collect()
}

/// A random word whose coset index lies in `[-bound, bound]`, by rejection.
pub fn random_word_with_index<R: Rng>(
    rng: &mut R,
    pair: &PairSpec,
    max_len: usize,
    bound: i64,
) -> ReducedWord {
    loop {
        let len = rng.gen_range(0..=max_len);
        let w = random_word(rng, pair.order(), len);
        if pair.coset_index(&w).abs() <= bound {
            return w;
        }
    }
}

/// Breadth-first distances from `source` inside a ball, following only
/// generator moves. Independent of the letter-prefix distance formula.
pub fn bfs_distances(ball: &Ball, source: &ReducedWord) -> HashMap<ReducedWord, usize> {
    let mut dist = HashMap::new();
    dist.insert(source.clone(), 0usize);
    let mut queue = VecDeque::from([source.clone()]);
    while let Some(x) = queue.pop_front() {
        let d = dist[&x];
        for y in neighbors(&x) {
            if ball.contains(&y) && !dist.contains_key(&y) {
                dist.insert(y.clone(), d + 1);
                queue.push_back(y);
            }
        }
    }
    dist
}

/// Log-uniform draw in `[lo, hi]`.
pub fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ln()..=hi.ln()).exp()
}

/// A random reduced word of uniformly random length in `0..max_len`.
pub fn random_word_below<R: Rng>(rng: &mut R, k: u32, max_len: usize) -> ReducedWord {
    let len = rng.gen_range(0..max_len);
    random_word(rng, k, len)
}

/// Direct solve of the weighted graph Laplacian system at p = 2.
pub fn linear_oracle<R: Resistance>(ball: &Ball, boundary: &VertexFunction, r: &R) -> Vec<f64> {
    let interior: Vec<usize> = ball.interior().collect();
    let mut slot = vec![usize::MAX; ball.len()];
    for (i, &id) in interior.iter().enumerate() {
        slot[id] = i;
    }
    let n = interior.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for &(x, y) in ball.edges() {
        let w = 1.0 / r.resistance(ball.vertex(x), ball.vertex(y));
        for (from, to) in [(x, y), (y, x)] {
            if slot[from] == usize::MAX {
                continue;
            }
            a[(slot[from], slot[from])] += w;
            if slot[to] == usize::MAX {
                b[slot[from]] += w * boundary.get(ball.vertex(to)).unwrap();
            } else {
                a[(slot[from], slot[to])] -= w;
            }
        }
    }
    let sol = a.lu().solve(&b).unwrap();
    let mut out = vec![f64::NAN; ball.len()];
    for (i, &id) in interior.iter().enumerate() {
        out[id] = sol[i];
    }
    out
}

/// Coset index of `x` for the pair `(i, j)`, computed by deleting other
/// letters and cancelling adjacent repeats by hand.
pub fn oracle_index(x: &ReducedWord, i: u32, j: u32) -> i64 {
    let mut stack: Vec<u32> = Vec::new();
    for &s in x.letters() {
        if s != i && s != j {
            continue;
        }
        if stack.last() == Some(&s) {
            stack.pop();
        } else {
            stack.push(s);
        }
    }
    match stack.first() {
        None => 0,
        Some(&s) if s == i => stack.len() as i64,
        Some(_) => -(stack.len() as i64),
    }
}
