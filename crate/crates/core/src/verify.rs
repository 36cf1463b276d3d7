//! Self-checks runnable from the command line. Each suite draws seeded
//! random cases, compares a formula against an independent computation and
//! records every disagreement.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::benders::{cutsets_equal, enumerate_encodings, Orientation, DEFAULT_ENCODING_CAP};
use crate::domp::{
    binomial, closest_assignment, facility_subsets, ordered_median_value, subproblem_tp,
    theta_lower_bound, xbar_histogram, CostLadder, DompInstance,
};
use crate::harness::random_monge_tp;
use crate::monge_tp::{
    col_exit_rows, dual_forward, northwest_corner, row_entry_columns, staircase_cells,
    staircase_membership, DualInit, DualMethod,
};
use crate::oracles::{domp_enumerate, tp_optimal_value};
use crate::tp::{is_monge, Cell, TpInstance};
use crate::{Error, Money, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Suite {
    Staircase,
    Duals,
    Oracle,
    Subproblem,
    EncodingCount,
    CutSetIdentity,
    Theta,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Staircase,
        Suite::Duals,
        Suite::Oracle,
        Suite::Subproblem,
        Suite::EncodingCount,
        Suite::CutSetIdentity,
        Suite::Theta,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Suite::Staircase => "staircase",
            Suite::Duals => "duals",
            Suite::Oracle => "oracle",
            Suite::Subproblem => "subproblem",
            Suite::EncodingCount => "lemma8",
            Suite::CutSetIdentity => "lemma9",
            Suite::Theta => "theta",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = match s {
            "counts" => "lemma8",
            "cutsets" => "lemma9",
            other => other,
        };
        Suite::ALL
            .into_iter()
            .find(|x| x.tag() == s)
            .ok_or_else(|| Error::InvalidInstance(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifyConfig {
    /// Largest `n` (DOMP) or row/column count (TP) drawn.
    pub max_n: usize,
    /// Largest ladder height for the encoding suites.
    pub max_g: usize,
    pub cases: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            max_n: 6,
            max_g: 4,
            cases: 200,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub cases: usize,
    pub failures: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

struct Checker {
    report: SuiteReport,
}

impl Checker {
    fn new(suite: Suite) -> Self {
        Self {
            report: SuiteReport {
                suite,
                cases: 0,
                failures: Vec::new(),
            },
        }
    }

    fn case(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.report.cases += 1;
        if !ok {
            self.report.failures.push(describe());
        }
    }

    fn result<T>(&mut self, r: Result<T>) -> Option<T> {
        match r {
            Ok(x) => Some(x),
            Err(e) => {
                self.report.cases += 1;
                self.report.failures.push(e.to_string());
                None
            }
        }
    }
}

pub fn run_suite(suite: Suite, config: &VerifyConfig) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(suite as u64);
    let mut ck = Checker::new(suite);
    let max_n = config.max_n.max(1);
    match suite {
        Suite::Staircase => {
            for _ in 0..config.cases {
                let inst = random_tp(&mut rng, max_n, false);
                staircase_case(&mut ck, &inst);
            }
        }
        Suite::Duals => {
            for _ in 0..config.cases {
                let inst = random_monge_tp(&mut rng, max_n, max_n, 20);
                duals_case(&mut ck, &inst);
            }
        }
        Suite::Oracle => {
            for _ in 0..config.cases {
                let inst = random_monge_tp(&mut rng, max_n, max_n, 20);
                let nw = ck.result(northwest_corner(&inst));
                let opt = ck.result(tp_optimal_value(&inst));
                if let (Some(nw), Some(opt)) = (nw, opt) {
                    ck.case(nw.cost(&inst) == opt, || {
                        format!("greedy {} != optimum {opt} on {inst:?}", nw.cost(&inst))
                    });
                }
            }
        }
        Suite::Subproblem => {
            for _ in 0..config.cases {
                let inst = random_domp(&mut rng, max_n, 50);
                let open = random_subset(&mut rng, inst.n(), inst.p());
                subproblem_case(&mut ck, &inst, &open);
            }
        }
        Suite::EncodingCount => {
            for n in 1..=max_n {
                for g in 0..=config.max_g {
                    let expected = binomial((n + g - 1) as u64, (n - 1) as u64);
                    for o in Orientation::ALL {
                        if let Some(encs) =
                            ck.result(enumerate_encodings(n, g, o, DEFAULT_ENCODING_CAP))
                        {
                            ck.case(encs.len() as u128 == expected, || {
                                format!(
                                    "{o:?} n={n} g={g}: {} encodings, expected {expected}",
                                    encs.len()
                                )
                            });
                        }
                    }
                }
            }
        }
        Suite::CutSetIdentity => {
            for _ in 0..config.cases.min(50) {
                let inst = random_domp(&mut rng, max_n, config.max_g.max(1) as i64);
                let ladder = CostLadder::from_instance(&inst);
                if let Some(eq) = ck.result(cutsets_equal(&inst, &ladder, DEFAULT_ENCODING_CAP)) {
                    ck.case(eq, || format!("cut sets differ on {inst:?}"));
                }
            }
        }
        Suite::Theta => {
            for _ in 0..config.cases {
                let inst = random_domp(&mut rng, max_n, 50);
                if let Some((opt, _)) = ck.result(domp_enumerate(&inst, usize::MAX)) {
                    let bound = theta_lower_bound(&inst);
                    ck.case(bound <= opt, || {
                        format!("bound {bound} above optimum {opt} on {inst:?}")
                    });
                }
            }
        }
    }
    ck.report
}

pub fn run_all(config: &VerifyConfig) -> Vec<SuiteReport> {
    Suite::ALL.iter().map(|&s| run_suite(s, config)).collect()
}

/// Any balanced TP, Monge only if requested.
fn random_tp(rng: &mut ChaCha8Rng, max: usize, monge: bool) -> TpInstance {
    if monge || rng.random_bool(0.5) {
        return random_monge_tp(rng, max, max, 6);
    }
    let inst = random_monge_tp(rng, max, max, 6);
    let costs = inst
        .costs()
        .map(|_| Money::from_scaled(rng.random_range(-20..=20)));
    TpInstance::new(inst.supplies().to_vec(), inst.demands().to_vec(), costs).expect("same shape")
}

fn random_domp(rng: &mut ChaCha8Rng, max_n: usize, max_cost: i64) -> DompInstance {
    let n = rng.random_range(1..=max_n);
    let p = rng.random_range(1..=n);
    let costs = (0..n)
        .map(|_| (0..n).map(|_| rng.random_range(1..=max_cost)).collect())
        .collect();
    let mut lambda: Vec<i64> = (0..n).map(|_| rng.random_range(-5..=5)).collect();
    lambda.sort_unstable_by(|a, b| b.cmp(a));
    DompInstance::from_scaled(costs, p, lambda).expect("valid by construction")
}

fn random_subset(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Vec<usize> {
    let k = rng.random_range(0..binomial(n as u64, p as u64) as usize);
    facility_subsets(n, p).nth(k).expect("k below count")
}

fn staircase_case(ck: &mut Checker, inst: &TpInstance) {
    let Some(path) = ck.result(northwest_corner(inst)) else {
        return;
    };
    let mut visited = path.cells.clone();
    visited.sort();
    if let Some(cells) = ck.result(staircase_cells(inst)) {
        ck.case(cells == visited, || {
            format!("membership {cells:?} != path {visited:?}")
        });
    }
    for i in 0..inst.rows() {
        for j in 0..inst.cols() {
            let cell = Cell::new(i, j);
            if let Some(member) = ck.result(staircase_membership(inst, cell)) {
                ck.case(member == visited.binary_search(&cell).is_ok(), || {
                    format!("membership of {cell:?}")
                });
            }
        }
    }
    if let Some(rows) = ck.result(row_entry_columns(inst)) {
        let traversal: Vec<Option<usize>> =
            (0..inst.rows()).map(|i| path.first_col_in_row(i)).collect();
        ck.case(
            rows.iter().map(|&j| Some(j)).eq(traversal.iter().copied()),
            || format!("row entries {rows:?} != traversal {traversal:?}"),
        );
    }
    if let Some(cols) = ck.result(col_exit_rows(inst)) {
        let traversal: Vec<Option<usize>> =
            (0..inst.cols()).map(|j| path.last_row_in_col(j)).collect();
        ck.case(
            cols.iter().map(|&i| Some(i)).eq(traversal.iter().copied()),
            || format!("column exits {cols:?} != traversal {traversal:?}"),
        );
    }
}

fn duals_case(ck: &mut Checker, inst: &TpInstance) {
    let Some(path) = ck.result(northwest_corner(inst)) else {
        return;
    };
    let primal = path.cost(inst);
    for method in DualMethod::ALL {
        if let Some(d) = ck.result(method.compute(inst, &path)) {
            ck.case(d.objective(inst) == primal, || {
                format!("{method:?}: dual {} != primal {primal}", d.objective(inst))
            });
            ck.case(d.is_feasible(inst.costs()), || {
                format!(
                    "{method:?}: infeasible at {:?}",
                    d.first_violation(inst.costs())
                )
            });
        }
    }
    let row = ck.result(DualMethod::FormulaRow.compute(inst, &path));
    let fwd = ck.result(dual_forward(inst, &path, DualInit::U1(Money::ZERO)));
    if let (Some(row), Some(fwd)) = (row, fwd) {
        ck.case(row == fwd, || {
            format!("row formula {row:?} != forward recursion {fwd:?}")
        });
    }
    let col = ck.result(DualMethod::FormulaCol.compute(inst, &path));
    let fwd = ck.result(dual_forward(inst, &path, DualInit::V1(Money::ZERO)));
    if let (Some(col), Some(fwd)) = (col, fwd) {
        ck.case(col == fwd, || {
            format!("column formula {col:?} != forward recursion {fwd:?}")
        });
    }
}

fn subproblem_case(ck: &mut Checker, inst: &DompInstance, open: &[usize]) {
    let ladder = CostLadder::from_instance(inst);
    let Some(a) = ck.result(closest_assignment(inst, open)) else {
        return;
    };
    let Some(hist) = ck.result(xbar_histogram(inst, &a, &ladder)) else {
        return;
    };
    let Some(sub) = ck.result(subproblem_tp(inst, &ladder, &hist)) else {
        return;
    };
    ck.case(is_monge(sub.costs()), || {
        format!("subproblem not Monge for {inst:?}")
    });
    if let (Some(opt), Some(value)) = (
        ck.result(tp_optimal_value(&sub)),
        ck.result(ordered_median_value(inst, open)),
    ) {
        ck.case(opt == value, || {
            format!("subproblem optimum {opt} != objective {value} at {open:?}")
        });
    }
}
