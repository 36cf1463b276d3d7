//! Instance generation, batch runs and CSV results.
//!
//! Generators use ChaCha8 (`rand_chacha`). For a given `seed` the cost
//! matrix is drawn from stream `n` and the random weight family from
//! stream `2^32 + n`, so every family and `p` rule shares one cost matrix
//! per `(n, seed)`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benders::{relative_gap, solve_benders, Limits, Orientation, Status};
use crate::domp::DompInstance;
use crate::oracles::domp_enumerate;
use crate::tp::TpInstance;
use crate::{Error, Matrix, Money, Result};

/// Generated costs are uniform on this range, in hundredths.
pub const COST_RANGE: std::ops::RangeInclusive<i64> = 10_000..=100_000;

const LAMBDA_STREAM_BASE: u64 = 1 << 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LambdaFamily {
    Median,
    Center,
    KCentrum,
    KMin,
    KRange,
    Range,
    Reverse,
    NegReverse,
    Random,
}

impl LambdaFamily {
    pub const ALL: [LambdaFamily; 9] = [
        LambdaFamily::Median,
        LambdaFamily::Center,
        LambdaFamily::KCentrum,
        LambdaFamily::KMin,
        LambdaFamily::KRange,
        LambdaFamily::Range,
        LambdaFamily::Reverse,
        LambdaFamily::NegReverse,
        LambdaFamily::Random,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            LambdaFamily::Median => "median",
            LambdaFamily::Center => "center",
            LambdaFamily::KCentrum => "kcentrum",
            LambdaFamily::KMin => "kmin",
            LambdaFamily::KRange => "krange",
            LambdaFamily::Range => "range",
            LambdaFamily::Reverse => "reverse",
            LambdaFamily::NegReverse => "negreverse",
            LambdaFamily::Random => "random",
        }
    }

    /// Weight vector of length `n`, with `k = n / 2` where the family uses
    /// one. `seed` only matters for [`LambdaFamily::Random`].
    pub fn lambda(self, n: usize, seed: u64) -> Vec<i64> {
        let k = n / 2;
        let ni = n as i64;
        let lambda: Vec<i64> = match self {
            LambdaFamily::Median => vec![-1; n],
            LambdaFamily::Center => (0..n).map(|l| if l + 1 == n { -1 } else { 0 }).collect(),
            LambdaFamily::KCentrum => (0..n).map(|l| if l >= n - k { -1 } else { 0 }).collect(),
            LambdaFamily::KMin => (0..n).map(|l| i64::from(l < k)).collect(),
            LambdaFamily::KRange => (0..n).map(|l| if l < k { 1 } else { -1 }).collect(),
            // A single site has no room for both ends.
            LambdaFamily::Range if n == 1 => vec![0],
            LambdaFamily::Range => (0..n)
                .map(|l| match l {
                    0 => 1,
                    l if l + 1 == n => -1,
                    _ => 0,
                })
                .collect(),
            LambdaFamily::Reverse => (0..ni).map(|l| ni - l).collect(),
            LambdaFamily::NegReverse => (0..ni).map(|l| -(l + 1)).collect(),
            LambdaFamily::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(LAMBDA_STREAM_BASE + n as u64);
                let mut l: Vec<i64> = (0..n).map(|_| rng.random_range(-ni..=ni)).collect();
                l.sort_unstable_by(|a, b| b.cmp(a));
                l
            }
        };
        debug_assert!(lambda.windows(2).all(|w| w[0] >= w[1]));
        lambda
    }
}

impl fmt::Display for LambdaFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for LambdaFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        LambdaFamily::ALL
            .into_iter()
            .find(|f| f.tag() == s)
            .ok_or_else(|| Error::InvalidInstance(format!("unknown lambda family {s:?}")))
    }
}

/// `n x n` cost matrix shared by every instance with this `(n, seed)`.
pub fn generate_costs(n: usize, seed: u64) -> Matrix<Money> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(n as u64);
    let data = (0..n * n)
        .map(|_| Money::from_scaled(rng.random_range(COST_RANGE)))
        .collect();
    Matrix::from_row_major(n, n, data).expect("n >= 1")
}

pub fn generate_instance(
    n: usize,
    p: usize,
    seed: u64,
    family: LambdaFamily,
) -> Result<DompInstance> {
    if n == 0 || p == 0 || p > n {
        return Err(Error::InvalidInstance(format!(
            "need 1 <= p <= n, got n={n}, p={p}"
        )));
    }
    DompInstance::new(generate_costs(n, seed), p, family.lambda(n, seed))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub seed: u64,
    pub family: String,
}

/// On-disk instance: costs in hundredths, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub p: usize,
    pub cost_scaled: Vec<i64>,
    pub lambda: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<InstanceMeta>,
}

impl InstanceFile {
    pub fn from_instance(inst: &DompInstance, meta: Option<InstanceMeta>) -> Self {
        Self {
            n: inst.n(),
            p: inst.p(),
            cost_scaled: inst.costs().iter().map(|c| c.scaled()).collect(),
            lambda: inst.lambda().to_vec(),
            meta,
        }
    }

    pub fn to_instance(&self) -> Result<DompInstance> {
        let data = self
            .cost_scaled
            .iter()
            .map(|&c| Money::from_scaled(c))
            .collect();
        DompInstance::new(
            Matrix::from_row_major(self.n, self.n, data)?,
            self.p,
            self.lambda.clone(),
        )
    }
}

/// `p = max(1, n / divisor)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PRule {
    Quarter,
    Third,
    Half,
}

impl PRule {
    pub const ALL: [PRule; 3] = [PRule::Quarter, PRule::Third, PRule::Half];

    pub fn divisor(self) -> usize {
        match self {
            PRule::Quarter => 4,
            PRule::Third => 3,
            PRule::Half => 2,
        }
    }

    pub fn p(self, n: usize) -> usize {
        (n / self.divisor()).max(1)
    }

    pub fn tag(self) -> &'static str {
        match self {
            PRule::Quarter => "n/4",
            PRule::Third => "n/3",
            PRule::Half => "n/2",
        }
    }
}

impl FromStr for PRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PRule::ALL
            .into_iter()
            .find(|r| r.tag() == s || r.divisor().to_string() == s)
            .ok_or_else(|| Error::InvalidInstance(format!("unknown p rule {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grid {
    pub ns: Vec<usize>,
    pub p_rules: Vec<PRule>,
    pub families: Vec<LambdaFamily>,
    pub seeds: Vec<u64>,
}

impl Grid {
    /// `n` in {6, 8, 10, 12}, all `p` rules and families, seeds 1..=5.
    pub fn desk() -> Self {
        Self {
            ns: vec![6, 8, 10, 12],
            p_rules: PRule::ALL.to_vec(),
            families: LambdaFamily::ALL.to_vec(),
            seeds: (1..=5).collect(),
        }
    }

    /// Every instance of the grid as `(id, n, p, family, seed)`.
    pub fn specs(&self) -> Vec<InstanceSpec> {
        let mut out = Vec::new();
        for &n in &self.ns {
            for &rule in &self.p_rules {
                for &family in &self.families {
                    for &seed in &self.seeds {
                        out.push(InstanceSpec {
                            n,
                            p: rule.p(n),
                            rule,
                            family,
                            seed,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InstanceSpec {
    pub n: usize,
    pub p: usize,
    pub rule: PRule,
    pub family: LambdaFamily,
    pub seed: u64,
}

impl InstanceSpec {
    /// Unique per grid point; includes the rule since distinct rules can
    /// give the same `p`.
    pub fn id(&self) -> String {
        format!(
            "n{:03}-p{}of{}-{}-s{}",
            self.n,
            self.p,
            self.rule.divisor(),
            self.family,
            self.seed
        )
    }

    pub fn instance(&self) -> Result<DompInstance> {
        generate_instance(self.n, self.p, self.seed, self.family)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    BendersB1,
    BendersB2,
    EnumOracle,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::BendersB1, Method::BendersB2, Method::EnumOracle];

    pub fn tag(self) -> &'static str {
        match self {
            Method::BendersB1 => "benders-b1",
            Method::BendersB2 => "benders-b2",
            Method::EnumOracle => "enum-oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "enum" => Ok(Method::EnumOracle),
            _ => Method::ALL
                .into_iter()
                .find(|m| m.tag() == s)
                .ok_or_else(|| Error::InvalidInstance(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub epsilon: Money,
    pub limits: Limits,
    /// When false, time columns are written as zero so output is
    /// reproducible byte for byte.
    pub record_timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            epsilon: Money::ZERO,
            limits: Limits::default(),
            record_timing: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RowStatus {
    Optimal,
    Limit,
    Error,
}

impl RowStatus {
    pub fn tag(self) -> &'static str {
        match self {
            RowStatus::Optimal => "optimal",
            RowStatus::Limit => "limit",
            RowStatus::Error => "error",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub instance_id: String,
    pub n: usize,
    pub p: usize,
    pub lambda_tag: String,
    pub seed: u64,
    pub method: Method,
    pub status: RowStatus,
    pub objective: Option<Money>,
    pub bound: Option<Money>,
    pub gap: Option<f64>,
    pub time: Duration,
    pub iterations: usize,
    pub cuts_added: usize,
    pub separation_time: Duration,
}

/// Solves one instance with one method. Failures become `error` rows.
pub fn run_one(spec: &InstanceSpec, method: Method, config: &RunConfig) -> ResultRow {
    let mut row = ResultRow {
        instance_id: spec.id(),
        n: spec.n,
        p: spec.p,
        lambda_tag: spec.family.tag().to_string(),
        seed: spec.seed,
        method,
        status: RowStatus::Error,
        objective: None,
        bound: None,
        gap: None,
        time: Duration::ZERO,
        iterations: 0,
        cuts_added: 0,
        separation_time: Duration::ZERO,
    };
    let Ok(inst) = spec.instance() else {
        return row;
    };
    let start = Instant::now();
    match method {
        Method::EnumOracle => {
            if let Ok((value, _)) = domp_enumerate(&inst, config.limits.enum_cap) {
                row.status = RowStatus::Optimal;
                row.objective = Some(value);
                row.bound = Some(value);
                row.gap = Some(0.0);
            }
        }
        Method::BendersB1 | Method::BendersB2 => {
            let orientation = if method == Method::BendersB1 {
                Orientation::B1
            } else {
                Orientation::B2
            };
            if let Ok(out) = solve_benders(&inst, orientation, config.epsilon, &config.limits) {
                row.status = match out.log.status {
                    Status::Optimal => RowStatus::Optimal,
                    Status::Limit => RowStatus::Limit,
                };
                row.objective = Some(out.value);
                row.bound = Some(out.log.bound);
                row.gap = Some(relative_gap(out.value, out.log.bound));
                row.iterations = out.log.iterations;
                row.cuts_added = out.log.cuts.len();
                row.separation_time = out.log.separation_time;
            }
        }
    }
    row.time = start.elapsed();
    if !config.record_timing {
        row.time = Duration::ZERO;
        row.separation_time = Duration::ZERO;
    }
    row
}

/// Runs every `(instance, method)` pair in parallel; rows come back sorted
/// by instance id, then method.
pub fn run_suite(grid: &Grid, methods: &[Method], config: &RunConfig) -> Vec<ResultRow> {
    let jobs: Vec<(InstanceSpec, Method)> = grid
        .specs()
        .into_iter()
        .flat_map(|s| methods.iter().map(move |&m| (s, m)))
        .collect();
    let mut rows: Vec<ResultRow> = jobs
        .par_iter()
        .map(|(s, m)| run_one(s, *m, config))
        .collect();
    rows.sort_by(|a, b| (&a.instance_id, a.method.tag()).cmp(&(&b.instance_id, b.method.tag())));
    rows
}

pub const CSV_HEADER: [&str; 14] = [
    "instance_id",
    "n",
    "p",
    "lambda_tag",
    "seed",
    "method",
    "status",
    "objective",
    "bound",
    "gap",
    "time_ms",
    "iterations",
    "cuts_added",
    "separation_time_ms",
];

fn millis(d: Duration) -> String {
    format!("{:.3}", d.as_secs_f64() * 1000.0)
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let money = |m: Option<Money>| m.map(|m| m.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.instance_id.clone(),
            r.n.to_string(),
            r.p.to_string(),
            r.lambda_tag.clone(),
            r.seed.to_string(),
            r.method.tag().to_string(),
            r.status.tag().to_string(),
            money(r.objective),
            money(r.bound),
            r.gap.map(|g| format!("{g:.6}")).unwrap_or_default(),
            millis(r.time),
            r.iterations.to_string(),
            r.cuts_added.to_string(),
            millis(r.separation_time),
        ])?;
    }
    w.flush()
}

/// Random balanced TP with a Monge cost matrix built from cumulative sums
/// of nonnegative increments. Quantities lie in `0..=max_qty`.
pub fn random_monge_tp<R: Rng>(
    rng: &mut R,
    max_rows: usize,
    max_cols: usize,
    max_qty: u64,
) -> TpInstance {
    let p = rng.random_range(1..=max_rows);
    let q = rng.random_range(1..=max_cols);
    let r: Vec<i64> = (0..p).map(|_| rng.random_range(-50..=50)).collect();
    let t: Vec<i64> = (0..q).map(|_| rng.random_range(-50..=50)).collect();
    let w: Vec<i64> = (0..p * q).map(|_| rng.random_range(0..=10)).collect();
    // tail[k][j] = sum_{l >= j} w[k][l]; then accumulate over k <= i.
    let mut acc = vec![0i64; q];
    let mut data = Vec::with_capacity(p * q);
    for i in 0..p {
        let mut tail = 0;
        for j in (0..q).rev() {
            tail += w[i * q + j];
            acc[j] += tail;
        }
        data.extend((0..q).map(|j| Money::from_scaled(r[i] + t[j] + acc[j])));
    }
    let costs = Matrix::from_row_major(p, q, data).expect("p, q >= 1");
    let s: Vec<u64> = (0..p).map(|_| rng.random_range(0..=max_qty)).collect();
    let d: Vec<u64> = (0..q).map(|_| rng.random_range(0..=max_qty)).collect();
    let (s, d) = balance(rng, s, d);
    TpInstance::new(s, d, costs).expect("shapes agree")
}

/// Trims random positive entries of the larger side until totals agree.
fn balance<R: Rng>(rng: &mut R, mut s: Vec<u64>, mut d: Vec<u64>) -> (Vec<u64>, Vec<u64>) {
    let (mut ts, mut td): (u64, u64) = (s.iter().sum(), d.iter().sum());
    while ts != td {
        let side = if ts > td { &mut s } else { &mut d };
        let positive: Vec<usize> = (0..side.len()).filter(|&k| side[k] > 0).collect();
        let k = positive[rng.random_range(0..positive.len())];
        side[k] -= 1;
        if ts > td {
            ts -= 1;
        } else {
            td -= 1;
        }
    }
    (s, d)
}
