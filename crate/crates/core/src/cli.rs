//! Job layer of the `pharmonic` binary.
//!
//! Every job renders its output into a string (CSV, JSON or a single label)
//! so that the binary only has to print it and translate the status into an
//! exit code: 0 pass, 1 verification failure, 2 configuration error,
//! 3 rejected subgroup spec.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::periodic_finite::{
    max_principle_check, solve_periodic, CosetResistances, PeriodicProfile,
};
use crate::periodic_infinite::{
    verify_combination, Combination, DrawParams, FamilyMember, MemberLift, MemberParams,
    ResistanceSequence, SequenceResistance,
};
use crate::plaplace::{
    dirichlet_solve, p_laplacian, Exponent, Resistance, UniformResistance, VertexFunction,
};
use crate::subgroup::{quotient_graph, PairSpec, SubgroupSpec, SubgroupSpecJson};
use crate::word_group::{parse_word, Ball, ReducedWord};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VERIFICATION_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SPEC_REJECTED: i32 = 3;

/// Spread above which a periodic solution does not count as constant.
pub const DEFAULT_SPREAD_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(
    name = "pharmonic",
    version,
    about = "Periodic p-harmonic functions on the Cayley tree"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the coset of a word: a parity vector or a Z-index.
    Coset(CosetArgs),
    /// Evaluate the p-Laplacian of a vertex function at one vertex.
    Laplacian(LaplacianArgs),
    /// Solve the p-Dirichlet problem on a ball.
    Dirichlet(DirichletArgs),
    /// Solve the periodic system for a finite-index subgroup from many starts.
    #[command(name = "verify-t2")]
    VerifyT2(VerifyT2Args),
    /// Tabulate a member of U1 or U2 over a range of cosets.
    Family(FamilyArgs),
    /// Check that linear combinations of U1/U2 members are p-harmonic.
    #[command(name = "verify-t4")]
    VerifyT4(VerifyT4Args),
}

#[derive(Debug, Args)]
pub struct CosetArgs {
    /// Order k of the tree.
    #[arg(long, default_value_t = 2)]
    pub k: u32,
    /// Subgroup spec: a JSON file or inline JSON.
    #[arg(long)]
    pub spec: String,
    /// Word as a JSON array, e.g. [1,3,2].
    #[arg(long)]
    pub word: String,
}

#[derive(Debug, Args)]
pub struct LaplacianArgs {
    #[arg(long, default_value_t = 2)]
    pub k: u32,
    #[arg(long)]
    pub word: String,
    /// Vertex function as a JSON map from words to values (file or inline).
    #[arg(long)]
    pub values: String,
    #[arg(long)]
    pub p: f64,
    /// Uniform edge resistance, used unless --seq and --spec are given.
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    /// Resistance sequence (with --spec naming a pair).
    #[arg(long)]
    pub seq: Option<String>,
    #[arg(long)]
    pub spec: Option<String>,
}

#[derive(Debug, Args)]
pub struct DirichletArgs {
    #[arg(long, default_value_t = 2)]
    pub k: u32,
    #[arg(long, default_value = "[]")]
    pub center: String,
    #[arg(long)]
    pub radius: usize,
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Boundary values as a vertex-function JSON map.
    #[arg(long)]
    pub boundary: Option<String>,
    /// Take boundary values from a family member (needs --seq and --spec).
    #[arg(long)]
    pub member: Option<String>,
    #[arg(long)]
    pub seq: Option<String>,
    #[arg(long)]
    pub spec: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyT2Args {
    #[arg(long, default_value_t = 2)]
    pub k: u32,
    /// Job config: {"spec": .., "p": .., "resistances": {"0-1": ..}, "starts": N}.
    #[arg(long)]
    pub config: Option<String>,
    /// Subgroup spec, when no config is given or to override it.
    #[arg(long)]
    pub spec: Option<String>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub starts: Option<usize>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_SPREAD_TOL)]
    pub spread_tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FamilyArgs {
    #[arg(long)]
    pub seq: String,
    /// Member parameters: {"family": "U1", "amplitude": .., "offset": ..}.
    #[arg(long)]
    pub member: String,
    /// Inclusive coset range `a:b`.
    #[arg(long, default_value = "-10:10", allow_hyphen_values = true)]
    pub range: String,
    /// Also write an SVG line chart here.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyT4Args {
    #[arg(long, default_value_t = 2)]
    pub k: u32,
    /// Shared resistance sequence; drawn from the seed when absent.
    #[arg(long)]
    pub seq: Option<String>,
    /// Explicit combination: {"p": .., "members": [{"family", "amplitude", "offset", "t", "seq"?}]}.
    #[arg(long)]
    pub config: Option<String>,
    /// Number of seeded random combinations to check instead of --config.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Largest number of members in a random combination.
    #[arg(long, default_value_t = 6)]
    pub max_members: usize,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, default_value = "-30:30", allow_hyphen_values = true)]
    pub range: String,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Radius of the ball used for the vertex-level check; 0 skips it.
    #[arg(long, default_value_t = 4)]
    pub radius: usize,
    /// Generator pair `i,j` defining H_ij.
    #[arg(long, default_value = "1,2")]
    pub pair: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Rendered output plus the exit status it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct JobOutput {
    pub body: String,
    pub status: i32,
    /// Where the body goes; stdout when `None`.
    pub out: Option<PathBuf>,
}

impl JobOutput {
    fn stdout(body: String, status: i32) -> Self {
        Self {
            body,
            status,
            out: None,
        }
    }
}

/// Exit code for an error raised while running a job.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NonSpanningSpec { .. } => EXIT_SPEC_REJECTED,
        Error::NonConvergence { .. } => EXIT_VERIFICATION_FAILED,
        _ => EXIT_CONFIG,
    }
}

/// Reads `arg` as inline JSON when it starts with `{` or `[`, as a file otherwise.
pub fn read_json_arg(arg: &str) -> Result<String> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') || trimmed.starts_with('[') {
        Ok(arg.to_string())
    } else {
        Ok(std::fs::read_to_string(Path::new(arg))?)
    }
}

/// Parses an inclusive range `a:b`.
pub fn parse_range(text: &str) -> Result<(i64, i64)> {
    let (a, b) = text
        .split_once(':')
        .ok_or_else(|| Error::InvalidConfig(format!("range {text:?}, expected a:b")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<i64>()
            .map_err(|e| Error::InvalidConfig(format!("range {text:?}: {e}")))
    };
    let (a, b) = (parse(a)?, parse(b)?);
    if a > b {
        return Err(Error::InvalidConfig(format!("empty range {text:?}")));
    }
    Ok((a, b))
}

fn parse_pair(text: &str, k: u32) -> Result<PairSpec> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::InvalidConfig(format!("pair {text:?}, expected i,j")));
    }
    let parse = |s: &str| {
        s.trim()
            .parse::<u32>()
            .map_err(|e| Error::InvalidConfig(format!("pair {text:?}: {e}")))
    };
    PairSpec::new(k, parse(parts[0])?, parse(parts[1])?)
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "tolerance must be positive, got {tol}"
        )))
    }
}

/// 17 significant digits, enough to round-trip an f64.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// First 16 hex digits of the SHA-256 of a canonical config string.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let text = serde_json::to_string(config).expect("config serializes");
    let digest = Sha256::digest(text.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn header<T: Serialize>(command: &str, config: &T, seed: Option<u64>) -> String {
    let seed = seed.map_or_else(|| "none".to_string(), |s| s.to_string());
    format!(
        "# pharmonic {command} config={} seed={seed}\n",
        config_hash(config)
    )
}

pub fn run(cli: Cli) -> Result<JobOutput> {
    match cli.command {
        Command::Coset(a) => cmd_coset(&a),
        Command::Laplacian(a) => cmd_laplacian(&a),
        Command::Dirichlet(a) => cmd_dirichlet(&a),
        Command::VerifyT2(a) => cmd_verify_periodic(&a),
        Command::Family(a) => cmd_family(&a),
        Command::VerifyT4(a) => cmd_verify_combinations(&a),
    }
}

/// Parses arguments, runs the job and returns `(exit code, stdout, stderr)`.
/// Output files named by `--out` / `--plot` are written here.
pub fn run_from_args<I, T>(args: I) -> (i32, String, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_PASS
            };
            return (code, String::new(), e.to_string());
        }
    };
    match run(cli) {
        Ok(job) => match &job.out {
            Some(path) => match std::fs::write(path, &job.body) {
                Ok(()) => (job.status, String::new(), String::new()),
                Err(e) => (
                    EXIT_CONFIG,
                    String::new(),
                    format!("error: {}: {e}\n", path.display()),
                ),
            },
            None => (job.status, job.body, String::new()),
        },
        Err(e) => (exit_code(&e), String::new(), format!("error: {e}\n")),
    }
}

pub fn cmd_coset(a: &CosetArgs) -> Result<JobOutput> {
    let spec = SubgroupSpec::parse(&read_json_arg(&a.spec)?, a.k)?;
    let word = parse_word(&a.word, a.k)?;
    let label = match &spec {
        SubgroupSpec::Finite(f) => {
            let bits = f.parity_label(&word).bits(f.coords());
            serde_json::to_string(&bits).expect("bit vector serializes")
        }
        SubgroupSpec::Pair(p) => p.coset_index(&word).to_string(),
    };
    Ok(JobOutput::stdout(format!("{label}\n"), EXIT_PASS))
}

fn pair_from_spec(text: &str, k: u32) -> Result<PairSpec> {
    match SubgroupSpec::parse(&read_json_arg(text)?, k)? {
        SubgroupSpec::Pair(p) => Ok(p),
        SubgroupSpec::Finite(_) => Err(Error::InvalidConfig(
            "a resistance sequence needs a pair spec {\"pair\": [i, j]}".into(),
        )),
    }
}

pub fn cmd_laplacian(a: &LaplacianArgs) -> Result<JobOutput> {
    let p = Exponent::new(a.p)?;
    let word = parse_word(&a.word, a.k)?;
    let u = VertexFunction::from_json(&read_json_arg(&a.values)?, a.k)?;
    let value = match (&a.seq, &a.spec) {
        (Some(seq), Some(spec)) => {
            let seq = ResistanceSequence::parse(&read_json_arg(seq)?)?;
            let pair = pair_from_spec(spec, a.k)?;
            p_laplacian(&u, &word, &SequenceResistance { seq: &seq, pair }, p)?
        }
        (None, None) => {
            if !(a.r > 0.0 && a.r.is_finite()) {
                return Err(Error::InvalidResistance(format!("r = {}", a.r)));
            }
            p_laplacian(&u, &word, &UniformResistance(a.r), p)?
        }
        _ => return Err(Error::InvalidConfig("--seq and --spec go together".into())),
    };
    Ok(JobOutput::stdout(
        format!("{}\n", fmt_float(value)),
        EXIT_PASS,
    ))
}

#[derive(Serialize)]
struct DirichletEcho<'a> {
    k: u32,
    center: &'a str,
    radius: usize,
    p: f64,
    tol: f64,
    boundary: Option<&'a str>,
    member: Option<&'a str>,
    seq: Option<&'a str>,
    spec: Option<&'a str>,
    r: f64,
}

pub fn cmd_dirichlet(a: &DirichletArgs) -> Result<JobOutput> {
    let p = Exponent::new(a.p)?;
    check_tol(a.tol)?;
    let center = parse_word(&a.center, a.k)?;
    let ball = Ball::new(&center, a.radius)?;

    let seq = match &a.seq {
        Some(text) => Some(ResistanceSequence::parse(&read_json_arg(text)?)?),
        None => None,
    };
    let uniform = UniformResistance(a.r);
    let (boundary, resistance): (VertexFunction, Box<dyn Resistance + '_>) =
        match (&a.boundary, &a.member, &seq, &a.spec) {
            (Some(b), None, None, None) => {
                if !(a.r > 0.0 && a.r.is_finite()) {
                    return Err(Error::InvalidResistance(format!("r = {}", a.r)));
                }
                (
                    VertexFunction::from_json(&read_json_arg(b)?, a.k)?,
                    Box::new(uniform),
                )
            }
            (None, Some(m), Some(seq), Some(spec)) => {
                let pair = pair_from_spec(spec, a.k)?;
                let params: MemberParams = serde_json::from_str(&read_json_arg(m)?)
                    .map_err(|e| Error::Parse(format!("member: {e}")))?;
                let member = FamilyMember::from_params(params, seq.clone())?;
                let lift = MemberLift {
                    member: &member,
                    pair,
                };
                let bnd = VertexFunction::sample_boundary(&lift, &ball)?;
                (bnd, Box::new(SequenceResistance { seq, pair }))
            }
            _ => {
                return Err(Error::InvalidConfig(
                    "give either --boundary, or --member with --seq and --spec".into(),
                ))
            }
        };
    let sol = dirichlet_solve(&ball, &boundary, resistance.as_ref(), p, a.tol)?;

    let echo = DirichletEcho {
        k: a.k,
        center: &a.center,
        radius: a.radius,
        p: a.p,
        tol: a.tol,
        boundary: a.boundary.as_deref(),
        member: a.member.as_deref(),
        seq: a.seq.as_deref(),
        spec: a.spec.as_deref(),
        r: a.r,
    };
    let mut body = header("dirichlet", &echo, None);
    body.push_str("vertex,value,boundary\n");
    for (id, x) in ball.vertices().iter().enumerate() {
        let v = sol.values.get(x).expect("solution covers the ball");
        let _ = writeln!(
            body,
            "\"{x}\",{},{}",
            fmt_float(v),
            u8::from(ball.is_boundary(id))
        );
    }
    let _ = writeln!(
        body,
        "# max_residual={} sweeps={}",
        fmt_float(sol.residual),
        sol.sweeps
    );
    Ok(JobOutput {
        body,
        status: EXIT_PASS,
        out: a.out.clone(),
    })
}

/// `verify-t2` config file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicJobConfig {
    #[serde(default)]
    pub k: Option<u32>,
    pub spec: SubgroupSpecJson,
    pub p: f64,
    /// Coset-pair resistances `{"v-w": r}`; log-uniform in [0.1, 10] from the
    /// seed when absent.
    #[serde(default)]
    pub resistances: Option<BTreeMap<String, f64>>,
    #[serde(default = "default_starts")]
    pub starts: usize,
}

fn default_starts() -> usize {
    100
}

#[derive(Serialize)]
struct PeriodicJobEcho<'a> {
    k: u32,
    spec: &'a SubgroupSpecJson,
    p: f64,
    resistances: &'a BTreeMap<String, f64>,
    starts: usize,
    tol: f64,
    spread_tol: f64,
}

/// One row of the `verify-t2` table.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicJobRow {
    pub start_id: usize,
    pub spread: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn cmd_verify_periodic(a: &VerifyT2Args) -> Result<JobOutput> {
    check_tol(a.tol)?;
    let mut cfg: PeriodicJobConfig = match &a.config {
        Some(c) => serde_json::from_str(&read_json_arg(c)?)
            .map_err(|e| Error::Parse(format!("config: {e}")))?,
        None => PeriodicJobConfig {
            k: None,
            spec: SubgroupSpecJson::Finite { a: vec![vec![1]] },
            p: 2.0,
            resistances: None,
            starts: default_starts(),
        },
    };
    if let Some(spec) = &a.spec {
        cfg.spec = serde_json::from_str(&read_json_arg(spec)?)
            .map_err(|e| Error::Parse(format!("spec: {e}")))?;
    }
    if let Some(p) = a.p {
        cfg.p = p;
    }
    if let Some(s) = a.starts {
        cfg.starts = s;
    }
    let k = cfg.k.unwrap_or(a.k);
    let p = Exponent::new(cfg.p)?;
    let spec = match SubgroupSpec::from_json(&cfg.spec, k)? {
        SubgroupSpec::Finite(f) => f,
        SubgroupSpec::Pair(_) => {
            return Err(Error::InvalidConfig(
                "verify-t2 needs a finite-index spec".into(),
            ))
        }
    };
    let q = quotient_graph(&spec);
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let r = match &cfg.resistances {
        Some(map) => CosetResistances::from_json_map(&q, map)?,
        None => CosetResistances::log_uniform(&q, &mut rng, 0.1, 10.0)?,
    };
    let starts: Vec<PeriodicProfile> = (0..cfg.starts)
        .map(|_| PeriodicProfile::new((0..q.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect()))
        .collect();

    let rows: Vec<PeriodicJobRow> = starts
        .par_iter()
        .enumerate()
        .map(
            |(id, start)| match solve_periodic(&q, &r, p, start, a.tol) {
                Ok(sol) => PeriodicJobRow {
                    start_id: id,
                    spread: sol.profile.spread(),
                    residual: sol.residual,
                    iterations: sol.sweeps,
                    converged: true,
                },
                Err(Error::NonConvergence {
                    iterations,
                    residual,
                }) => PeriodicJobRow {
                    start_id: id,
                    spread: f64::NAN,
                    residual,
                    iterations,
                    converged: false,
                },
                Err(e) => panic!("solver failed on a validated problem: {e}"),
            },
        )
        .collect();

    // The max-principle check on the starts themselves, which are non-constant.
    let mut principle_ok = true;
    for s in &starts {
        if !s.is_constant() {
            principle_ok &= max_principle_check(s, &q, &r, p)?.passed;
        }
    }

    let resistances = r.to_json_map();
    let echo = PeriodicJobEcho {
        k,
        spec: &cfg.spec,
        p: cfg.p,
        resistances: &resistances,
        starts: cfg.starts,
        tol: a.tol,
        spread_tol: a.spread_tol,
    };
    let spec_text = serde_json::to_string(&cfg.spec)
        .expect("spec serializes")
        .replace('"', "'");
    let mut body = header("verify-t2", &echo, Some(a.seed));
    body.push_str("k,spec,p,start_id,spread,residual,iterations\n");
    let mut max_spread = 0.0f64;
    let mut all_ok = principle_ok;
    for row in &rows {
        let ok = row.converged && row.spread <= a.spread_tol && row.residual <= a.tol;
        all_ok &= ok;
        if row.spread.is_nan() {
            max_spread = f64::NAN;
        } else if !max_spread.is_nan() {
            max_spread = max_spread.max(row.spread);
        }
        let _ = writeln!(
            body,
            "{k},\"{spec_text}\",{},{},{},{},{}",
            fmt_float(cfg.p),
            row.start_id,
            fmt_float(row.spread),
            fmt_float(row.residual),
            row.iterations
        );
    }
    let _ = writeln!(
        body,
        "# summary index={} max_spread={} max_principle={} result={}",
        q.len(),
        fmt_float(max_spread),
        if principle_ok { "ok" } else { "violated" },
        if all_ok { "pass" } else { "fail" }
    );
    Ok(JobOutput {
        body,
        status: if all_ok {
            EXIT_PASS
        } else {
            EXIT_VERIFICATION_FAILED
        },
        out: a.out.clone(),
    })
}

#[derive(Serialize)]
struct FamilyEcho<'a> {
    seq: &'a ResistanceSequence,
    member: MemberParams,
    range: (i64, i64),
}

pub fn cmd_family(a: &FamilyArgs) -> Result<JobOutput> {
    let seq = ResistanceSequence::parse(&read_json_arg(&a.seq)?)?;
    let params: MemberParams = serde_json::from_str(&read_json_arg(&a.member)?)
        .map_err(|e| Error::Parse(format!("member: {e}")))?;
    let member = FamilyMember::from_params(params, seq.clone())?;
    let (lo, hi) = parse_range(&a.range)?;
    let points: Vec<(i64, f64)> = (lo..=hi).map(|n| (n, member.evaluate(n))).collect();

    let echo = FamilyEcho {
        seq: &seq,
        member: params,
        range: (lo, hi),
    };
    let mut body = header("family", &echo, None);
    body.push_str("n,u_n\n");
    for (n, v) in &points {
        let _ = writeln!(body, "{n},{}", fmt_float(*v));
    }
    if let Some(path) = &a.plot {
        std::fs::write(
            path,
            line_chart_svg(&points, &format!("{:?} member", params.family)),
        )?;
    }
    Ok(JobOutput {
        body,
        status: EXIT_PASS,
        out: a.out.clone(),
    })
}

/// A bare-bones SVG line chart of `(n, value)` points.
pub fn line_chart_svg(points: &[(i64, f64)], title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 40.0;
    let (xmin, xmax) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(n, _)| {
            (a.min(n as f64), b.max(n as f64))
        });
    let (ymin, ymax) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(_, v)| {
            (a.min(v), b.max(v))
        });
    let xspan = if xmax > xmin { xmax - xmin } else { 1.0 };
    let yspan = if ymax > ymin { ymax - ymin } else { 1.0 };
    let px = |n: f64| M + (n - xmin) / xspan * (W - 2.0 * M);
    let py = |v: f64| H - M - (v - ymin) / yspan * (H - 2.0 * M);
    let path: Vec<String> = points
        .iter()
        .map(|&(n, v)| format!("{:.2},{:.2}", px(n as f64), py(v)))
        .collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<line x1="{M}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        H - M,
        W - M,
        H - M
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{M}" y1="{M}" x2="{M}" y2="{}" stroke="black"/>"#,
        H - M
    );
    let _ = writeln!(
        svg,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#,
        path.join(" ")
    );
    let _ = writeln!(
        svg,
        r#"<text x="{M}" y="24" font-family="sans-serif" font-size="14">{title}</text>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{M}" y="{}" font-family="sans-serif" font-size="11">n = {xmin} .. {xmax}; u in [{ymin:.6}, {ymax:.6}]</text>"#,
        H - 10.0
    );
    svg.push_str("</svg>\n");
    svg
}

/// One member entry of a `verify-t4` config.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub family: crate::periodic_infinite::Family,
    pub amplitude: f64,
    #[serde(default)]
    pub offset: f64,
    pub t: f64,
    /// Per-member sequence; must equal the shared one when given.
    #[serde(default)]
    pub seq: Option<ResistanceSequence>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombinationJobConfig {
    #[serde(default)]
    pub p: Option<f64>,
    pub members: Vec<TermConfig>,
}

#[derive(Serialize)]
struct CombinationJobEcho<'a> {
    k: u32,
    pair: (u32, u32),
    seq: &'a ResistanceSequence,
    config: Option<&'a CombinationJobConfig>,
    count: usize,
    max_members: usize,
    p: Option<f64>,
    range: (i64, i64),
    tol: f64,
    radius: usize,
}

/// The exponents tried by random `verify-t4` jobs when `--p` is absent.
pub const COMBINATION_EXPONENTS: [f64; 3] = [1.5, 2.7, 4.0];

pub fn cmd_verify_combinations(a: &VerifyT4Args) -> Result<JobOutput> {
    check_tol(a.tol)?;
    let (lo, hi) = parse_range(&a.range)?;
    let pair = parse_pair(&a.pair, a.k)?;
    if let Some(p) = a.p {
        Exponent::new(p)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let draw = DrawParams::default();
    let seq = match &a.seq {
        Some(s) => ResistanceSequence::parse(&read_json_arg(s)?)?,
        None => draw.draw_sequence(&mut rng),
    };

    let config: Option<CombinationJobConfig> = match &a.config {
        Some(c) => Some(
            serde_json::from_str(&read_json_arg(c)?)
                .map_err(|e| Error::Parse(format!("config: {e}")))?,
        ),
        None => None,
    };
    let jobs: Vec<(Combination, Exponent)> = match &config {
        Some(cfg) => {
            let p = Exponent::new(a.p.or(cfg.p).unwrap_or(2.0))?;
            let mut terms = Vec::with_capacity(cfg.members.len());
            for m in &cfg.members {
                let member_seq = m.seq.clone().unwrap_or_else(|| seq.clone());
                terms.push((
                    m.t,
                    FamilyMember::new(m.family, m.amplitude, m.offset, member_seq)?,
                ));
            }
            vec![(Combination::new(terms)?, p)]
        }
        None => {
            if a.max_members == 0 {
                return Err(Error::InvalidConfig(
                    "--max-members must be positive".into(),
                ));
            }
            (0..a.count)
                .map(|i| {
                    let q = rng.gen_range(1..=a.max_members);
                    let q1 = rng.gen_range(0..=q);
                    let p =
                        a.p.unwrap_or(COMBINATION_EXPONENTS[i % COMBINATION_EXPONENTS.len()]);
                    (
                        draw.draw_combination(&mut rng, &seq, q, q1),
                        Exponent::new(p).expect("checked above"),
                    )
                })
                .collect()
        }
    };

    let ball = if a.radius > 0 {
        Some(Ball::new(&ReducedWord::identity(a.k), a.radius)?)
    } else {
        None
    };
    let reports: Vec<_> = jobs
        .par_iter()
        .map(|(c, p)| verify_combination(c, *p, lo..=hi, a.tol, ball.as_ref().map(|b| (pair, b))))
        .collect::<Result<_>>()?;

    let echo = CombinationJobEcho {
        k: a.k,
        pair: (pair.i(), pair.j()),
        seq: &seq,
        config: config.as_ref(),
        count: a.count,
        max_members: a.max_members,
        p: a.p,
        range: (lo, hi),
        tol: a.tol,
        radius: a.radius,
    };
    let mut body = header("verify-t4", &echo, Some(a.seed));
    body.push_str("id,q,q1,p,slope,max_coset_residual,max_vertex_residual,passed\n");
    let mut all_ok = true;
    let mut worst = 0.0f64;
    for (id, ((c, p), rep)) in jobs.iter().zip(&reports).enumerate() {
        let q1 = c
            .terms()
            .iter()
            .filter(|(_, m)| m.family() == crate::periodic_infinite::Family::U1)
            .count();
        let vmax = rep.vertices.as_ref().map_or(0.0, |v| v.max_residual);
        worst = worst.max(rep.cosets.max_residual).max(vmax);
        all_ok &= rep.passed;
        let _ = writeln!(
            body,
            "{id},{},{q1},{},{},{},{},{}",
            c.terms().len(),
            fmt_float(p.value()),
            fmt_float(c.slope()),
            fmt_float(rep.cosets.max_residual),
            fmt_float(vmax),
            u8::from(rep.passed)
        );
    }
    let _ = writeln!(
        body,
        "# summary combinations={} max_residual={} result={}",
        jobs.len(),
        fmt_float(worst),
        if all_ok { "pass" } else { "fail" }
    );
    Ok(JobOutput {
        body,
        status: if all_ok {
            EXIT_PASS
        } else {
            EXIT_VERIFICATION_FAILED
        },
        out: a.out.clone(),
    })
}
