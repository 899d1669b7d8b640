//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails or runs over its time budget.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use common::{bfs_distances, linear_oracle, oracle_index, random_word_with_index};
use pharmonic::periodic_finite::{
    max_principle_check, solve_periodic, CosetResistances, PeriodicProfile,
};
use pharmonic::periodic_infinite::{
    flux, verify_combination, verify_profile, DrawParams, Family, FamilyMember, MemberLift,
    ResistanceSequence, SequenceResistance, WithinCoset,
};
use pharmonic::plaplace::{
    dirichlet_solve, energy, p_laplacian, Exponent, HashedEdgeResistance, VertexField,
    VertexFunction,
};
use pharmonic::subgroup::{quotient_graph, FiniteIndexSpec, PairSpec};
use pharmonic::word_group::{ball_size, distance, inverse, multiply, reduce, Ball, ReducedWord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, Option<u64>, fn() -> Check);

fn exp(p: f64) -> Exponent {
    Exponent::new(p).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn group_algebra() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checks = 0;
    for k in 1..=4u32 {
        let e = ReducedWord::identity(k);
        let ball = Ball::new(&e, 6).unwrap();
        ensure(Some(ball.len()) == ball_size(k, 6), || {
            format!("k={k}: ball has {} vertices", ball.len())
        })?;
        let expected = if k == 1 {
            13
        } else {
            1 + (k as usize + 1) * (k.pow(6) as usize - 1) / (k as usize - 1)
        };
        ensure(ball.len() == expected, || {
            format!("k={k}: ball size {} != {expected}", ball.len())
        })?;
        for _ in 0..3 {
            let src = ball.vertex(rng.gen_range(0..ball.len())).clone();
            let bfs = bfs_distances(&ball, &src);
            for y in ball.vertices() {
                let d = distance(&src, y).unwrap();
                ensure(bfs[y] == d, || {
                    format!("k={k}: d({src},{y}) = {d}, bfs {}", bfs[y])
                })?;
            }
        }
        let pick = |rng: &mut ChaCha8Rng| ball.vertex(rng.gen_range(0..ball.len())).clone();
        for _ in 0..2_500 {
            let (x, y, z) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
            let xy = multiply(&x, &y).unwrap();
            let lhs = multiply(&xy, &z).unwrap();
            let rhs = multiply(&x, &multiply(&y, &z).unwrap()).unwrap();
            ensure(lhs == rhs, || format!("associativity fails at {x},{y},{z}"))?;
            ensure(
                multiply(&x, &e).unwrap() == x && multiply(&e, &x).unwrap() == x,
                || format!("identity at {x}"),
            )?;
            ensure(multiply(&x, &inverse(&x)).unwrap() == e, || {
                format!("inverse at {x}")
            })?;
            ensure(reduce(x.letters(), k).unwrap() == x, || {
                format!("normal form of {x}")
            })?;
            let mut raw = x.letters().to_vec();
            raw.extend_from_slice(y.letters());
            ensure(reduce(&raw, k).unwrap() == xy, || {
                format!("reduce(concat) at {x},{y}")
            })?;
            let (dxy, dyx) = (distance(&x, &y).unwrap(), distance(&y, &x).unwrap());
            ensure(dxy == dyx, || format!("symmetry at {x},{y}"))?;
            ensure((dxy == 0) == (x == y), || format!("separation at {x},{y}"))?;
            ensure(dxy == multiply(&inverse(&x), &y).unwrap().len(), || {
                format!("d != |x^-1 y| at {x},{y}")
            })?;
            let bound = distance(&x, &z).unwrap() + distance(&z, &y).unwrap();
            ensure(dxy <= bound, || format!("triangle at {x},{y},{z}"))?;
            checks += 1;
        }
    }
    Ok(format!(
        "{checks} randomized checks, BFS metric on 12 sources"
    ))
}

fn neighbour_profile() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut total = 0;
    for k in [1u32, 2, 3, 5] {
        let i = rng.gen_range(1..=k + 1);
        let j = loop {
            let j = rng.gen_range(1..=k + 1);
            if j != i {
                break j;
            }
        };
        let pair = PairSpec::new(k, i, j).unwrap();
        for _ in 0..1_000 {
            let x = random_word_with_index(&mut rng, &pair, 40, 20);
            let n = oracle_index(&x, i, j);
            ensure(pair.coset_index(&x) == n, || format!("k={k}: index of {x}"))?;
            let triple = pair.lemma1_profile(&x).triple();
            let mut counts = (0, 0, 0);
            for s in 1..=k + 1 {
                let y = x.multiply(&ReducedWord::generator(k, s).unwrap()).unwrap();
                match oracle_index(&y, i, j) - n {
                    -1 => counts.0 += 1,
                    0 => counts.1 += 1,
                    1 => counts.2 += 1,
                    d => return Err(format!("k={k}: neighbour of {x} jumps by {d}")),
                }
            }
            let want = (1, k as usize - 1, 1);
            ensure(triple == want && counts == want, || {
                format!("k={k}: x={x} profile {triple:?}, oracle {counts:?}")
            })?;
            total += 1;
        }
    }
    Ok(format!("{total} vertices, profile (1, k-1, 1) throughout"))
}

/// A random subset list of `m` nonempty subsets with full GF(2) rank.
fn random_spec(rng: &mut ChaCha8Rng, k: u32, m: usize) -> Option<FiniteIndexSpec> {
    if m > k as usize + 1 {
        return None;
    }
    loop {
        let subsets: Vec<Vec<u32>> = (0..m)
            .map(|_| loop {
                let s: Vec<u32> = (1..=k + 1).filter(|_| rng.gen_bool(0.5)).collect();
                if !s.is_empty() {
                    break s;
                }
            })
            .collect();
        if let Ok(spec) = FiniteIndexSpec::new(k, subsets) {
            return Some(spec);
        }
    }
}

fn finite_index_constancy() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut jobs = Vec::new();
    let mut skipped = Vec::new();
    for k in 1..=3u32 {
        for m in 1..=3usize {
            let Some(spec) = random_spec(&mut rng, k, m) else {
                skipped.push(format!("k={k} index {}", 1 << m));
                continue;
            };
            let q = quotient_graph(&spec);
            for p in [1.5, 2.0, 3.0, 4.0] {
                for _ in 0..3 {
                    let r = CosetResistances::log_uniform(&q, &mut rng, 0.1, 10.0).unwrap();
                    for _ in 0..100 {
                        let start = PeriodicProfile::new(
                            (0..q.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect(),
                        );
                        jobs.push((k, spec.clone(), q.clone(), p, r.clone(), start));
                    }
                }
            }
        }
    }
    let worst = jobs
        .par_iter()
        .map(|(k, spec, q, p, r, start)| {
            let sol = solve_periodic(q, r, exp(*p), start, 1e-10)
                .map_err(|e| format!("k={k} {:?} p={p}: {e}", spec.subsets()))?;
            ensure(
                sol.residual <= 1e-10 && sol.profile.spread() <= 1e-6,
                || {
                    format!(
                        "k={k} {:?} p={p}: residual {} spread {}",
                        spec.subsets(),
                        sol.residual,
                        sol.profile.spread()
                    )
                },
            )?;
            Ok((sol.residual, sol.profile.spread()))
        })
        .collect::<std::result::Result<Vec<_>, String>>()?
        .into_iter()
        .fold((0.0f64, 0.0f64), |a, b| (a.0.max(b.0), a.1.max(b.1)));

    let mut profiles = 0;
    for (k, m) in [(1, 2), (2, 3), (3, 2), (3, 3)] {
        let spec = random_spec(&mut rng, k, m).unwrap();
        let q = quotient_graph(&spec);
        let r = CosetResistances::log_uniform(&q, &mut rng, 0.1, 10.0).unwrap();
        for i in 0..2_500 {
            let p = [1.5, 2.0, 3.0, 4.0][i % 4];
            let prof =
                PeriodicProfile::new((0..q.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect());
            let rep = max_principle_check(&prof, &q, &r, exp(p)).map_err(|e| e.to_string())?;
            ensure(!rep.constant && rep.passed, || {
                format!("max principle fails: {rep:?}")
            })?;
            let strict = rep
                .argmax
                .iter()
                .filter(|a| a.touches_lower)
                .all(|a| a.residual < 0.0);
            ensure(strict, || format!("non-negative argmax residual: {rep:?}"))?;
            profiles += 1;
        }
    }
    Ok(format!(
        "{} solves, max residual {:.1e}, max spread {:.1e}; {profiles} max-principle profiles; skipped (not realizable): {}",
        jobs.len(),
        worst.0,
        worst.1,
        skipped.join(", ")
    ))
}

/// `Σ_{s<n} r_s` by plain summation, tails truncated far past double precision.
fn brute_lower(seq: &ResistanceSequence, n: i64) -> f64 {
    (n - 4_000..n).map(|s| seq.value(s)).sum()
}

fn brute_upper(seq: &ResistanceSequence, n: i64) -> f64 {
    (n..n + 4_000).map(|s| seq.value(s)).sum()
}

fn family_members() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let draw = DrawParams::default();
    let mut worst_res = 0.0f64;
    let mut worst_flux = 0.0f64;
    let k = 2;
    for _ in 0..5 {
        let seq = draw.draw_sequence(&mut rng);
        let pair = PairSpec::new(k, 1, 2).unwrap();
        let rule = SequenceResistance { seq: &seq, pair };
        for family in [Family::U1, Family::U2] {
            let m = draw.draw_member(&mut rng, family, &seq);
            for n in -50..=50 {
                let tail = match family {
                    Family::U1 => brute_lower(&seq, n),
                    Family::U2 => brute_upper(&seq, n),
                };
                let want = m.offset() + m.amplitude() * tail;
                ensure(
                    (m.evaluate(n) - want).abs() <= 1e-12 * want.abs().max(1.0),
                    || {
                        format!(
                            "{family:?} value at {n}: {} vs summed {want}",
                            m.evaluate(n)
                        )
                    },
                )?;
            }
            for p in [1.5, 2.0, 2.7, 4.0] {
                let u = |n| m.evaluate(n);
                let rep = verify_profile(&u, &seq, exp(p), -50..=50, 1e-12);
                ensure(rep.passed, || {
                    format!(
                        "{family:?} p={p}: residual {:.2e} at {:?}",
                        rep.max_residual, rep.worst_n
                    )
                })?;
                worst_res = worst_res.max(rep.max_residual);
                // Same residual measured on the tree itself.
                let lift = MemberLift { member: &m, pair };
                for n in -50..=50 {
                    let x = pair.representative(n);
                    let lap = p_laplacian(&lift, &x, &rule, exp(p)).map_err(|e| e.to_string())?;
                    ensure(lap.abs() <= 1e-12, || {
                        format!("{family:?} p={p}: vertex residual {lap:.2e} at n={n}")
                    })?;
                }
                let x0 = flux(&u, &seq, exp(p), -50);
                for n in -50..=50 {
                    let rel =
                        (flux(&u, &seq, exp(p), n) - x0).abs() / x0.abs().max(f64::MIN_POSITIVE);
                    ensure(x0 == 0.0 || rel <= 1e-12, || {
                        format!("flux drifts by {rel:.2e} at n={n}")
                    })?;
                    worst_flux = worst_flux.max(if x0 == 0.0 { 0.0 } else { rel });
                }
            }
            let flat = FamilyMember::new(family, 0.0, m.offset(), seq.clone()).unwrap();
            ensure((-50..=50).all(|n| flat.evaluate(n) == m.offset()), || {
                "amplitude 0 is not constant".into()
            })?;
        }
    }
    Ok(format!(
        "max residual {worst_res:.1e}, max relative flux drift {worst_flux:.1e}"
    ))
}

fn combinations() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draw = DrawParams::default();
    let k = 2;
    let mut jobs = Vec::new();
    for id in 0..200u64 {
        let seq = draw
            .draw_sequence(&mut rng)
            .with_within(WithinCoset::Random {
                seed: id,
                lo: 0.1,
                hi: 10.0,
            })
            .unwrap();
        let q = rng.gen_range(1..=6);
        let q1 = if q == 1 {
            rng.gen_range(0..=1)
        } else {
            rng.gen_range(1..q)
        };
        let combo = draw.draw_combination(&mut rng, &seq, q, q1);
        let pair = PairSpec::new(k, 1, 3).unwrap();
        let center = random_word_with_index(&mut rng, &pair, 16, 10);
        let p = [1.5, 2.0, 2.7, 4.0][id as usize % 4];
        jobs.push((id, combo, pair, center, p));
    }
    let worst = jobs
        .par_iter()
        .map(|(id, combo, pair, center, p)| {
            let ball = Ball::new(center, 8).map_err(|e| e.to_string())?;
            let rep = verify_combination(combo, exp(*p), -30..=30, 1e-10, Some((*pair, &ball)))
                .map_err(|e| e.to_string())?;
            let vmax = rep.vertices.as_ref().map_or(0.0, |v| v.max_residual);
            ensure(rep.passed, || {
                format!(
                    "combination {id} (p={p}): coset residual {:.2e}, vertex residual {vmax:.2e}",
                    rep.cosets.max_residual
                )
            })?;
            Ok(rep.cosets.max_residual.max(vmax))
        })
        .collect::<std::result::Result<Vec<f64>, String>>()?
        .into_iter()
        .fold(0.0f64, f64::max);
    Ok(format!(
        "200 combinations, radius-8 vertex checks, max residual {worst:.1e}"
    ))
}

fn oracles() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let e = ReducedWord::identity(2);
    let pair = PairSpec::new(2, 1, 2).unwrap();
    let drawn = DrawParams::default()
        .draw_sequence(&mut rng)
        .with_within(WithinCoset::Random {
            seed: 6,
            lo: 0.1,
            hi: 10.0,
        })
        .unwrap();
    let mut worst_dir = 0.0f64;
    for seq in [ResistanceSequence::two_sided_halving(), drawn] {
        let member = FamilyMember::new(Family::U1, 1.0, 0.0, seq.clone()).unwrap();
        let lift = MemberLift {
            member: &member,
            pair,
        };
        let rule = SequenceResistance { seq: &seq, pair };
        for radius in [4, 6] {
            let ball = Ball::new(&e, radius).unwrap();
            let bnd = VertexFunction::sample_boundary(&lift, &ball).map_err(|e| e.to_string())?;
            for p in [1.5, 2.0, 3.0, 4.0] {
                let sol = dirichlet_solve(&ball, &bnd, &rule, exp(p), 1e-12)
                    .map_err(|e| format!("p={p}: {e}"))?;
                for x in ball.vertices() {
                    let err = (sol.values.get(x).unwrap() - lift.value_at(x).unwrap()).abs();
                    worst_dir = worst_dir.max(err);
                    ensure(err <= 1e-6, || {
                        format!("radius {radius} p={p}: error {err:.2e} at {x}")
                    })?;
                }
            }
        }
    }

    let mut worst_lin = 0.0f64;
    for radius in [4, 6] {
        let ball = Ball::new(&e, radius).unwrap();
        let r = HashedEdgeResistance::new(rng.gen(), 0.1, 10.0).unwrap();
        let mut bnd = VertexFunction::new();
        for id in ball.boundary() {
            bnd.insert(ball.vertex(id).clone(), rng.gen_range(-1.0..1.0));
        }
        let sol = dirichlet_solve(&ball, &bnd, &r, exp(2.0), 1e-13).map_err(|e| e.to_string())?;
        let oracle = linear_oracle(&ball, &bnd, &r);
        for id in ball.interior() {
            let err = (sol.values.get(ball.vertex(id)).unwrap() - oracle[id]).abs();
            worst_lin = worst_lin.max(err);
            ensure(err <= 1e-10, || {
                format!("linear oracle differs by {err:.2e}")
            })?;
        }
    }

    let mut worst_fd = 0.0f64;
    for _ in 0..100 {
        let k = rng.gen_range(1..=3);
        let center = common::random_word_below(&mut rng, k, 6);
        let ball = Ball::new(&center, 2).unwrap();
        let p = rng.gen_range(1.2..6.0);
        let r = HashedEdgeResistance::new(rng.gen(), 0.1, 10.0).unwrap();
        let mut u = VertexFunction::new();
        for x in ball.vertices() {
            u.insert(x.clone(), rng.gen_range(-1.0..1.0));
        }
        let x = ball.vertex(ball.interior().next().unwrap()).clone();
        let h = 1e-6;
        let bump = |d: f64| {
            let mut v = u.clone();
            v.insert(x.clone(), u.get(&x).unwrap() + d);
            energy(&v, &ball, &r, exp(p)).unwrap()
        };
        let fd = (bump(h) - bump(-h)) / (2.0 * h);
        let analytic = -p * p_laplacian(&u, &x, &r, exp(p)).map_err(|e| e.to_string())?;
        let rel = (fd - analytic).abs() / analytic.abs();
        worst_fd = worst_fd.max(rel);
        ensure(rel <= 1e-5, || format!("p={p:.3}: fd {fd} vs {analytic}"))?;
    }
    Ok(format!(
        "Dirichlet error {worst_dir:.1e}, linear-solve error {worst_lin:.1e}, finite-difference error {worst_fd:.1e}"
    ))
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let jobs: [&[&str]; 4] = [
        &[
            "verify-t2",
            "--k",
            "3",
            "--spec",
            r#"{"finite":{"A":[[1],[2,3],[4]]}}"#,
            "--p",
            "2.7",
            "--seed",
            "17",
        ],
        &["verify-t4", "--count", "20", "--seed", "17"],
        &[
            "dirichlet",
            "--k",
            "2",
            "--radius",
            "3",
            "--p",
            "3",
            "--member",
            r#"{"family":"U2","amplitude":0.5}"#,
            "--seq",
            r#"{"window":{"from":-1,"values":[1,2]},"tail_left":{"base":0.5,"ratio":0.8},"tail_right":{"base":0.7,"ratio":0.6}}"#,
            "--spec",
            r#"{"pair":[1,3]}"#,
        ],
        &[
            "family",
            "--seq",
            r#"{"window":{"from":0,"values":[1]},"tail_left":{"base":0.5,"ratio":0.5},"tail_right":{"base":0.5,"ratio":0.5}}"#,
            "--member",
            r#"{"family":"U1","amplitude":2,"offset":-1}"#,
            "--range",
            "-20:20",
        ],
    ];
    for (i, job) in jobs.iter().enumerate() {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let path = dir.path().join(format!("{i}-{run}.csv"));
            let status = Command::new(env!("CARGO_BIN_EXE_pharmonic"))
                .args(job.iter())
                .arg("--out")
                .arg(&path)
                .status()
                .map_err(|e| e.to_string())?;
            ensure(status.success(), || {
                format!("{} exited with {status}", job[0])
            })?;
            outputs.push(std::fs::read(&path).map_err(|e| e.to_string())?);
        }
        ensure(outputs[0] == outputs[1], || {
            format!("{} output differs between runs", job[0])
        })?;
    }
    Ok("4 commands, identical bytes across runs".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("group algebra", Some(10), group_algebra),
        (
            "neighbour profile across cosets",
            Some(10),
            neighbour_profile,
        ),
        (
            "finite-index periodic solutions are constant",
            Some(120),
            finite_index_constancy,
        ),
        ("U1/U2 members are p-harmonic", Some(5), family_members),
        ("linear combinations are p-harmonic", Some(60), combinations),
        ("oracle cross-validation", Some(120), oracles),
        ("CLI determinism", None, determinism),
    ];
    let mut failures = 0;
    for (i, (name, budget, f)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panic: {msg}"))
        });
        let elapsed = start.elapsed();
        let over = budget.is_some_and(|b| elapsed > Duration::from_secs(b));
        let timing = match budget {
            Some(b) => format!("{:.2}s of {b}s", elapsed.as_secs_f64()),
            None => format!("{:.2}s", elapsed.as_secs_f64()),
        };
        let (status, detail) = match outcome {
            Ok(d) if !over => ("PASS", d),
            Ok(d) => ("FAIL", format!("over time budget; {d}")),
            Err(d) => ("FAIL", d),
        };
        if status == "FAIL" {
            failures += 1;
        }
        println!("{status} criterion {} ({name}) [{timing}]: {detail}", i + 1);
    }
    println!("acceptance: {} of 7 criteria passed", 7 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
