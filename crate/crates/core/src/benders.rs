//! Benders optimality cuts for DOMP with non-increasing weights.
//!
//! The subproblem at a fixed assignment is a Monge transportation problem
//! whose optimal duals have closed forms indexed by a monotone staircase
//! encoding `f`. Two encodings exist: `B1` maps each position to the rung
//! where its row of the staircase starts, `B2` maps each rung below the top
//! to the last position of its column. Both yield the same family of cuts.
//!
//! The master problem is solved exactly by enumerating `p`-subsets, which
//! keeps the loop self-contained at desk scale.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::domp::{
    binomial, closest_assignment, facility_subsets, ordered_median, theta_lower_bound,
    xbar_histogram, Assignment, CostLadder, DompInstance,
};
use crate::oracles::DEFAULT_ENUM_CAP;
use crate::tp::DualSolution;
use crate::{Error, Money, Result};

/// Largest encoding family [`enumerate_encodings`] materializes by default.
pub const DEFAULT_ENCODING_CAP: u128 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Orientation {
    B1,
    B2,
}

impl Orientation {
    pub const ALL: [Orientation; 2] = [Orientation::B1, Orientation::B2];
}

/// A monotone staircase on the `n x (g + 1)` subproblem grid.
///
/// `B1`: `f` has length `n`, `f[0] == 0`, values in `0..=g`.
/// `B2`: `f` has length `g`, values in `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StaircaseEncoding {
    orientation: Orientation,
    n: usize,
    g: usize,
    f: Vec<usize>,
}

impl StaircaseEncoding {
    pub fn new(orientation: Orientation, n: usize, g: usize, f: Vec<usize>) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidEncoding(msg));
        if n == 0 {
            return bad("encoding needs n >= 1".into());
        }
        if f.windows(2).any(|w| w[0] > w[1]) {
            return bad(format!("{f:?} is not monotone"));
        }
        match orientation {
            Orientation::B1 => {
                if f.len() != n {
                    return bad(format!("B1 encoding has length {}, expected {n}", f.len()));
                }
                if f[0] != 0 {
                    return bad(format!("B1 encoding must start at rung 0, got {}", f[0]));
                }
                if f[n - 1] > g {
                    return bad(format!("B1 value {} exceeds top rung {g}", f[n - 1]));
                }
            }
            Orientation::B2 => {
                if f.len() != g {
                    return bad(format!("B2 encoding has length {}, expected {g}", f.len()));
                }
                if f.last().is_some_and(|&l| l >= n) {
                    return bad(format!(
                        "B2 value {} exceeds last position {}",
                        f[g - 1],
                        n - 1
                    ));
                }
            }
        }
        Ok(Self {
            orientation,
            n,
            g,
            f,
        })
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn f(&self) -> &[usize] {
        &self.f
    }

    /// The same staircase in the other orientation.
    pub fn convert(&self) -> StaircaseEncoding {
        let (n, g) = (self.n, self.g);
        let f = match self.orientation {
            // Last position whose row starts at or before rung h.
            Orientation::B1 => (0..g)
                .map(|h| self.f.partition_point(|&r| r <= h) - 1)
                .collect(),
            // First rung whose column reaches past position l - 1.
            Orientation::B2 => (0..n)
                .map(|l| {
                    if l == 0 {
                        0
                    } else {
                        self.f.partition_point(|&last| last < l)
                    }
                })
                .collect(),
        };
        let other = match self.orientation {
            Orientation::B1 => Orientation::B2,
            Orientation::B2 => Orientation::B1,
        };
        StaircaseEncoding::new(other, n, g, f).expect("conversion preserves validity")
    }

    fn check_against(&self, inst: &DompInstance, ladder: &CostLadder) -> Result<()> {
        if self.n != inst.n() || self.g != ladder.g() {
            return Err(Error::InvalidEncoding(format!(
                "encoding is for n={}, g={}, instance has n={}, g={}",
                self.n,
                self.g,
                inst.n(),
                ladder.g()
            )));
        }
        Ok(())
    }
}

/// `lambda[k] - lambda[k - 1]` with `lambda[-1] = 0`.
fn delta_lambda(lambda: &[i64], k: usize) -> i64 {
    lambda[k] - if k == 0 { 0 } else { lambda[k - 1] }
}

/// Row-start duals of the subproblem for a `B1` encoding.
pub fn duals_b1(
    inst: &DompInstance,
    ladder: &CostLadder,
    enc: &StaircaseEncoding,
) -> Result<DualSolution> {
    if enc.orientation != Orientation::B1 {
        return Err(Error::InvalidEncoding("expected a B1 encoding".into()));
    }
    enc.check_against(inst, ladder)?;
    let lambda = inst.lambda();
    let f = &enc.f;
    let mut u = Vec::with_capacity(enc.n);
    let mut acc = Money::ZERO;
    for (l, &fl) in f.iter().enumerate() {
        if l > 0 {
            acc += ladder.value(fl) * delta_lambda(lambda, l);
        }
        u.push(acc);
    }
    let v = (0..=enc.g)
        .map(|h| {
            let c_h = ladder.value(h);
            f.iter()
                .take_while(|&&fk| fk < h)
                .enumerate()
                .map(|(k, &fk)| (c_h - ladder.value(fk)) * delta_lambda(lambda, k))
                .sum()
        })
        .collect();
    Ok(DualSolution { u, v })
}

/// Column-end duals of the subproblem for a `B2` encoding.
pub fn duals_b2(
    inst: &DompInstance,
    ladder: &CostLadder,
    enc: &StaircaseEncoding,
) -> Result<DualSolution> {
    if enc.orientation != Orientation::B2 {
        return Err(Error::InvalidEncoding("expected a B2 encoding".into()));
    }
    enc.check_against(inst, ladder)?;
    let lambda = inst.lambda();
    let f = &enc.f;
    let u = (0..enc.n)
        .map(|l| {
            f.iter()
                .take_while(|&&fk| fk < l)
                .enumerate()
                .map(|(k, &fk)| ladder.step(k + 1) * (lambda[l] - lambda[fk]))
                .sum()
        })
        .collect();
    let mut v = Vec::with_capacity(enc.g + 1);
    let mut acc = Money::ZERO;
    v.push(acc);
    for (k, &fk) in f.iter().enumerate() {
        acc += ladder.step(k + 1) * lambda[fk];
        v.push(acc);
    }
    Ok(DualSolution { u, v })
}

/// Subproblem duals for either orientation.
pub fn duals(
    inst: &DompInstance,
    ladder: &CostLadder,
    enc: &StaircaseEncoding,
) -> Result<DualSolution> {
    match enc.orientation {
        Orientation::B1 => duals_b1(inst, ladder, enc),
        Orientation::B2 => duals_b2(inst, ladder, enc),
    }
}

/// `theta >= constant + sum_ij v[rank(c_ij)] x_ij`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BendersCut {
    pub constant: Money,
    /// Coefficient of every `x_ij` whose cost sits on rung `h`.
    pub v: Vec<Money>,
    pub encoding: StaircaseEncoding,
}

impl BendersCut {
    /// Coefficient of `x_ij`.
    pub fn coefficient(
        &self,
        inst: &DompInstance,
        ladder: &CostLadder,
        i: usize,
        j: usize,
    ) -> Money {
        self.v[ladder.rank(inst.costs().get(i, j)).expect("cost on ladder")]
    }

    /// Nonzero coefficients keyed by `(i, j)`.
    pub fn coefficient_map(
        &self,
        inst: &DompInstance,
        ladder: &CostLadder,
    ) -> std::collections::BTreeMap<(usize, usize), Money> {
        (0..inst.n())
            .cartesian_product(0..inst.n())
            .map(|(i, j)| ((i, j), self.coefficient(inst, ladder, i, j)))
            .filter(|(_, c)| *c != Money::ZERO)
            .collect()
    }

    /// Right-hand side at the binary `x` whose selected cells have the
    /// given costs.
    pub fn rhs_at_costs(&self, ladder: &CostLadder, selected: &[Money]) -> Money {
        self.constant
            + selected
                .iter()
                .map(|&c| self.v[ladder.rank(c).expect("cost on ladder")])
                .sum::<Money>()
    }

    pub fn rhs_at(&self, ladder: &CostLadder, a: &Assignment) -> Money {
        self.rhs_at_costs(ladder, &a.alloc_costs)
    }

    /// Canonical identity of the cut as a function of `x`.
    pub fn key(&self) -> (Money, Vec<Money>) {
        (self.constant, self.v.clone())
    }
}

pub fn cut_from_encoding(
    inst: &DompInstance,
    ladder: &CostLadder,
    enc: &StaircaseEncoding,
) -> Result<BendersCut> {
    let d = duals(inst, ladder, enc)?;
    Ok(BendersCut {
        constant: d.u.iter().sum(),
        v: d.v,
        encoding: enc.clone(),
    })
}

/// The cut's right-hand side in the aggregated form of its orientation,
/// evaluated without materializing duals.
pub fn rhs_closed_form(
    inst: &DompInstance,
    ladder: &CostLadder,
    enc: &StaircaseEncoding,
    selected: &[Money],
) -> Result<Money> {
    enc.check_against(inst, ladder)?;
    let lambda = inst.lambda();
    let n = inst.n();
    let total = match enc.orientation {
        Orientation::B1 => enc
            .f
            .iter()
            .enumerate()
            .map(|(k, &fk)| {
                let base = ladder.value(fk);
                let excess: Money = selected
                    .iter()
                    .filter(|&&c| c > base)
                    .map(|&c| c - base)
                    .sum();
                (base.times((n - k) as u64) + excess) * delta_lambda(lambda, k)
            })
            .sum(),
        Orientation::B2 => enc
            .f
            .iter()
            .enumerate()
            .map(|(k, &fk)| {
                let tail: i64 = lambda[fk + 1..].iter().map(|&l| l - lambda[fk]).sum();
                let above = selected.iter().filter(|&&c| c > ladder.value(k)).count() as i64;
                ladder.step(k + 1) * (tail + lambda[fk] * above)
            })
            .sum(),
    };
    Ok(total)
}

/// Recovers the northwest-corner staircase of the subproblem at histogram
/// `hist` in the requested orientation.
pub fn encoding_from_histogram(
    n: usize,
    hist: &[u64],
    orientation: Orientation,
) -> Result<StaircaseEncoding> {
    let g = hist
        .len()
        .checked_sub(1)
        .ok_or_else(|| Error::HistogramMismatch("empty histogram".into()))?;
    let cum: Vec<u64> = hist
        .iter()
        .scan(0u64, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
        .collect();
    if cum[g] != n as u64 {
        return Err(Error::HistogramMismatch(format!(
            "histogram sums to {}, expected {n}",
            cum[g]
        )));
    }
    let f = match orientation {
        Orientation::B1 => (0..n)
            .map(|l| {
                if l == 0 {
                    0
                } else {
                    cum.partition_point(|&s| s < l as u64)
                }
            })
            .collect(),
        Orientation::B2 => cum[..g].iter().map(|&s| (s as usize).min(n - 1)).collect(),
    };
    StaircaseEncoding::new(orientation, n, g, f)
}

/// The cut generated at assignment `a`, tight there.
pub fn cut_at(
    inst: &DompInstance,
    ladder: &CostLadder,
    a: &Assignment,
    orientation: Orientation,
) -> Result<BendersCut> {
    let hist = xbar_histogram(inst, a, ladder)?;
    let enc = encoding_from_histogram(inst.n(), &hist, orientation)?;
    cut_from_encoding(inst, ladder, &enc)
}

/// Returns the cut at `a` if it is violated by more than `epsilon` at
/// `theta_bar`.
pub fn separate(
    inst: &DompInstance,
    ladder: &CostLadder,
    a: &Assignment,
    theta_bar: Money,
    orientation: Orientation,
    epsilon: Money,
) -> Result<Option<BendersCut>> {
    let cut = cut_at(inst, ladder, a, orientation)?;
    let rhs = cut.rhs_at(ladder, a);
    Ok((theta_bar < rhs - epsilon).then_some(cut))
}

/// Every encoding of the orientation, in lexicographic order of `f`.
pub fn enumerate_encodings(
    n: usize,
    g: usize,
    orientation: Orientation,
    cap: u128,
) -> Result<Vec<StaircaseEncoding>> {
    if n == 0 {
        return Err(Error::InvalidEncoding("encoding needs n >= 1".into()));
    }
    let count = binomial((n + g - 1) as u64, (n - 1) as u64);
    if count > cap {
        return Err(Error::CapExceeded {
            what: format!("staircase encodings for n={n}, g={g}"),
            size: count,
            cap,
        });
    }
    let raw: Vec<Vec<usize>> = match orientation {
        Orientation::B1 => (0..=g)
            .combinations_with_replacement(n - 1)
            .map(|tail| std::iter::once(0).chain(tail).collect())
            .collect(),
        Orientation::B2 => (0..n).combinations_with_replacement(g).collect(),
    };
    raw.into_iter()
        .map(|f| StaircaseEncoding::new(orientation, n, g, f))
        .collect()
}

/// Whether both orientations generate the same set of cuts.
pub fn cutsets_equal(inst: &DompInstance, ladder: &CostLadder, cap: u128) -> Result<bool> {
    let set = |o| -> Result<BTreeSet<(Money, Vec<Money>)>> {
        enumerate_encodings(inst.n(), ladder.g(), o, cap)?
            .iter()
            .map(|e| cut_from_encoding(inst, ladder, e).map(|c| c.key()))
            .collect()
    };
    Ok(set(Orientation::B1)? == set(Orientation::B2)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub time_limit: Option<Duration>,
    pub max_iterations: Option<usize>,
    /// Largest `n` the enumeration master accepts.
    pub enum_cap: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            time_limit: None,
            max_iterations: None,
            enum_cap: DEFAULT_ENUM_CAP,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Optimal,
    Limit,
}

/// A cut together with the facility set whose assignment produced it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoggedCut {
    pub cut: BendersCut,
    pub generator: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BendersLog {
    /// Master solves performed.
    pub iterations: usize,
    pub cuts: Vec<LoggedCut>,
    pub incumbent: Money,
    pub bound: Money,
    pub gap: f64,
    pub wall_time: Duration,
    pub separation_time: Duration,
    pub status: Status,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BendersOutcome {
    pub value: Money,
    pub open: Vec<usize>,
    pub log: BendersLog,
}

/// `(incumbent - bound) / |incumbent|`; zero when they agree and infinite
/// for a zero incumbent above its bound.
pub fn relative_gap(incumbent: Money, bound: Money) -> f64 {
    let diff = (incumbent - bound).scaled();
    if diff == 0 {
        0.0
    } else if incumbent == Money::ZERO {
        f64::INFINITY
    } else {
        diff as f64 / incumbent.abs().scaled() as f64
    }
}

/// Enumerated master: every `p`-subset with its allocation-cost rungs and
/// current lower bound on `theta`.
struct Master {
    subsets: Vec<Vec<usize>>,
    ranks: Vec<u32>,
    n: usize,
    bound: Vec<Money>,
}

impl Master {
    fn new(inst: &DompInstance, ladder: &CostLadder, floor: Money) -> Self {
        let n = inst.n();
        let c = inst.costs();
        let subsets: Vec<Vec<usize>> = facility_subsets(n, inst.p()).collect();
        let mut ranks = Vec::with_capacity(subsets.len() * n);
        for open in &subsets {
            ranks.extend((0..n).map(|i| {
                let cost = open.iter().map(|&j| c.get(i, j)).min().expect("p >= 1");
                ladder.rank(cost).expect("cost on ladder") as u32
            }));
        }
        let bound = vec![floor; subsets.len()];
        Self {
            subsets,
            ranks,
            n,
            bound,
        }
    }

    fn add(&mut self, cut: &BendersCut) {
        for (b, ranks) in self.bound.iter_mut().zip(self.ranks.chunks_exact(self.n)) {
            let rhs = cut.constant + ranks.iter().map(|&h| cut.v[h as usize]).sum::<Money>();
            if rhs > *b {
                *b = rhs;
            }
        }
    }

    /// Smallest bound, first subset on ties.
    fn solve(&self) -> (Money, usize) {
        let (s, &theta) = self
            .bound
            .iter()
            .enumerate()
            .min_by_key(|&(_, b)| *b)
            .expect("at least one subset");
        (theta, s)
    }
}

/// Cutting-plane loop: solve the enumerated master, evaluate the true
/// objective at its minimiser, separate, repeat until no cut is violated
/// by more than `epsilon` or a limit is hit.
pub fn solve_benders(
    inst: &DompInstance,
    orientation: Orientation,
    epsilon: Money,
    limits: &Limits,
) -> Result<BendersOutcome> {
    let start = Instant::now();
    if inst.n() > limits.enum_cap {
        return Err(Error::CapExceeded {
            what: format!("enumeration master over n = {} sites", inst.n()),
            size: inst.n() as u128,
            cap: limits.enum_cap as u128,
        });
    }
    let ladder = CostLadder::from_instance(inst);
    let mut master = Master::new(inst, &ladder, theta_lower_bound(inst));
    let mut cuts = Vec::new();
    let mut incumbent: Option<(Money, Vec<usize>)> = None;
    let mut separation_time = Duration::ZERO;
    let mut iterations = 0;
    let (bound, status) = loop {
        iterations += 1;
        let (theta_bar, s) = master.solve();
        let open = master.subsets[s].clone();
        let a = closest_assignment(inst, &open)?;
        let value = ordered_median(inst.lambda(), &a.alloc_costs);
        if incumbent.as_ref().is_none_or(|(v, _)| value < *v) {
            incumbent = Some((value, open.clone()));
        }

        let t = Instant::now();
        let cut = separate(inst, &ladder, &a, theta_bar, orientation, epsilon)?;
        separation_time += t.elapsed();
        let Some(cut) = cut else {
            break (theta_bar, Status::Optimal);
        };
        master.add(&cut);
        cuts.push(LoggedCut {
            cut,
            generator: open,
        });

        let out_of_time = limits.time_limit.is_some_and(|l| start.elapsed() >= l);
        let out_of_iterations = limits.max_iterations.is_some_and(|m| iterations >= m);
        if out_of_time || out_of_iterations {
            break (master.solve().0, Status::Limit);
        }
    };
    let (value, open) = incumbent.expect("at least one iteration");
    let bound = bound.min(value);
    Ok(BendersOutcome {
        value,
        open,
        log: BendersLog {
            iterations,
            cuts,
            incumbent: value,
            bound,
            gap: relative_gap(value, bound),
            wall_time: start.elapsed(),
            separation_time,
            status,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domp::{ordered_median_value, subproblem_tp};
    use crate::monge_tp::{col_exit_rows, row_entry_columns};
    use crate::oracles::{domp_enumerate, tp_optimal_value};
    use proptest::prelude::*;

    fn worked(lambda: Vec<i64>) -> DompInstance {
        DompInstance::from_scaled(vec![vec![1, 4, 5], vec![4, 2, 6], vec![5, 6, 3]], 1, lambda)
            .unwrap()
    }

    fn m(xs: &[i64]) -> Vec<Money> {
        xs.iter().map(|&x| Money::from_scaled(x)).collect()
    }

    #[test]
    fn encoding_validation() {
        use Orientation::*;
        assert!(StaircaseEncoding::new(B1, 3, 6, vec![0, 1, 4]).is_ok());
        assert!(StaircaseEncoding::new(B1, 3, 6, vec![1, 1, 4]).is_err());
        assert!(StaircaseEncoding::new(B1, 3, 6, vec![0, 4, 1]).is_err());
        assert!(StaircaseEncoding::new(B1, 3, 3, vec![0, 1, 4]).is_err());
        assert!(StaircaseEncoding::new(B1, 3, 6, vec![0, 1]).is_err());
        assert!(StaircaseEncoding::new(B2, 3, 2, vec![0, 2]).is_ok());
        assert!(StaircaseEncoding::new(B2, 3, 2, vec![0, 3]).is_err());
        assert!(StaircaseEncoding::new(B2, 3, 2, vec![1]).is_err());
        assert!(StaircaseEncoding::new(B2, 3, 0, vec![]).is_ok());
    }

    #[test]
    fn b1_worked_duals() {
        let inst = worked(vec![1, 1, 1]);
        let ladder = CostLadder::from_instance(&inst);
        let enc = StaircaseEncoding::new(Orientation::B1, 3, 6, vec![0, 1, 4]).unwrap();
        let d = duals_b1(&inst, &ladder, &enc).unwrap();
        assert_eq!(d.u, m(&[0, 0, 0]));
        assert_eq!(d.v, ladder.values());
    }

    #[test]
    fn b2_minimal_ladder() {
        // g = 1: u_l = (lambda_l - lambda_f0) c_(1) for l > f0, v = (0, lambda_f0 c_(1)).
        let inst = DompInstance::from_scaled(vec![vec![3, 3], vec![3, 3]], 1, vec![2, -1]).unwrap();
        let ladder = CostLadder::from_instance(&inst);
        assert_eq!(ladder.g(), 1);
        let enc = StaircaseEncoding::new(Orientation::B2, 2, 1, vec![0]).unwrap();
        let d = duals_b2(&inst, &ladder, &enc).unwrap();
        assert_eq!(d.u, m(&[0, -9]));
        assert_eq!(d.v, m(&[0, 6]));
    }

    #[test]
    fn worked_separation() {
        let inst = worked(vec![1, 1, 1]);
        let ladder = CostLadder::from_instance(&inst);
        let a = closest_assignment(&inst, &[0]).unwrap();
        let cut = cut_at(&inst, &ladder, &a, Orientation::B1).unwrap();
        assert_eq!(cut.encoding.f(), &[0, 1, 4]);
        assert_eq!(cut.rhs_at(&ladder, &a), Money::from_scaled(10));
        assert_eq!(
            ordered_median_value(&inst, &[0]).unwrap(),
            Money::from_scaled(10)
        );
        let ten = Money::from_scaled(10);
        assert!(
            separate(&inst, &ladder, &a, ten, Orientation::B1, Money::ZERO)
                .unwrap()
                .is_none()
        );
        assert!(separate(
            &inst,
            &ladder,
            &a,
            Money::from_scaled(9),
            Orientation::B1,
            Money::ZERO
        )
        .unwrap()
        .is_some());
        assert!(separate(
            &inst,
            &ladder,
            &a,
            Money::from_scaled(9),
            Orientation::B1,
            Money::from_scaled(1)
        )
        .unwrap()
        .is_none());
        let b2 = cut_at(&inst, &ladder, &a, Orientation::B2).unwrap();
        assert_eq!(b2.key(), cut.key());
    }

    #[test]
    fn zero_weights_give_zero_cut() {
        let inst = worked(vec![0, 0, 0]);
        let ladder = CostLadder::from_instance(&inst);
        for o in Orientation::ALL {
            for enc in enumerate_encodings(3, ladder.g(), o, DEFAULT_ENCODING_CAP).unwrap() {
                let cut = cut_from_encoding(&inst, &ladder, &enc).unwrap();
                assert_eq!(cut.constant, Money::ZERO);
                assert!(cut.v.iter().all(|&x| x == Money::ZERO));
                assert!(cut.coefficient_map(&inst, &ladder).is_empty());
            }
        }
    }

    #[test]
    fn encoding_counts() {
        let b1 = enumerate_encodings(2, 2, Orientation::B1, DEFAULT_ENCODING_CAP).unwrap();
        let fs: Vec<_> = b1.iter().map(|e| e.f().to_vec()).collect();
        assert_eq!(fs, vec![vec![0, 0], vec![0, 1], vec![0, 2]]);
        assert_eq!(
            enumerate_encodings(2, 2, Orientation::B2, DEFAULT_ENCODING_CAP)
                .unwrap()
                .len(),
            3
        );
        for o in Orientation::ALL {
            assert_eq!(
                enumerate_encodings(4, 0, o, DEFAULT_ENCODING_CAP)
                    .unwrap()
                    .len(),
                1
            );
            assert_eq!(
                enumerate_encodings(1, 5, o, DEFAULT_ENCODING_CAP)
                    .unwrap()
                    .len(),
                1
            );
        }
        assert!(matches!(
            enumerate_encodings(20, 20, Orientation::B1, DEFAULT_ENCODING_CAP),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn small_cutset_identity() {
        let inst = DompInstance::from_scaled(vec![vec![1, 2], vec![2, 1]], 1, vec![3, -2]).unwrap();
        let ladder = CostLadder::from_instance(&inst);
        assert_eq!(ladder.g(), 2);
        assert!(cutsets_equal(&inst, &ladder, DEFAULT_ENCODING_CAP).unwrap());
        let inst = DompInstance::from_scaled(vec![vec![4, 4], vec![4, 4]], 1, vec![1, -1]).unwrap();
        let ladder = CostLadder::from_instance(&inst);
        assert_eq!(ladder.g(), 1);
        // Two staircases; each maps to its partner under conversion.
        for enc in enumerate_encodings(2, 1, Orientation::B1, DEFAULT_ENCODING_CAP).unwrap() {
            let a = cut_from_encoding(&inst, &ladder, &enc).unwrap();
            let b = cut_from_encoding(&inst, &ladder, &enc.convert()).unwrap();
            assert_eq!(a.key(), b.key());
        }
        assert!(cutsets_equal(&inst, &ladder, DEFAULT_ENCODING_CAP).unwrap());
    }

    #[test]
    fn full_facility_set_terminates_fast() {
        let inst = worked(vec![2, 1, -1]).with_p(3).unwrap();
        for o in Orientation::ALL {
            let out = solve_benders(&inst, o, Money::ZERO, &Limits::default()).unwrap();
            assert_eq!(out.open, vec![0, 1, 2]);
            assert!(out.log.iterations <= 2);
            assert_eq!(out.log.status, Status::Optimal);
            assert_eq!(out.log.gap, 0.0);
        }
    }

    #[test]
    fn worked_benders_matches_enumeration() {
        for lambda in [
            vec![1, 1, 1],
            vec![-1, -1, -1],
            vec![0, 0, -1],
            vec![1, 0, -1],
            vec![3, 2, 1],
        ] {
            let inst = worked(lambda);
            let (best, _) = domp_enumerate(&inst, DEFAULT_ENUM_CAP).unwrap();
            for o in Orientation::ALL {
                let out = solve_benders(&inst, o, Money::ZERO, &Limits::default()).unwrap();
                assert_eq!(out.value, best);
                assert_eq!(out.log.bound, best);
                assert_eq!(ordered_median_value(&inst, &out.open).unwrap(), best);
            }
        }
    }

    #[test]
    fn iteration_limit_reports_limit() {
        let inst = worked(vec![-1, -1, -1]);
        let limits = Limits {
            max_iterations: Some(1),
            ..Limits::default()
        };
        let out = solve_benders(&inst, Orientation::B1, Money::ZERO, &limits).unwrap();
        assert_eq!(out.log.iterations, 1);
        assert_eq!(out.log.status, Status::Limit);
        assert!(out.log.bound <= out.log.incumbent);
    }

    #[test]
    fn master_cap_is_enforced() {
        let limits = Limits {
            enum_cap: 2,
            ..Limits::default()
        };
        assert!(matches!(
            solve_benders(
                &worked(vec![1, 1, 1]),
                Orientation::B1,
                Money::ZERO,
                &limits
            ),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn gap_definition() {
        assert_eq!(
            relative_gap(Money::from_scaled(100), Money::from_scaled(90)),
            0.1
        );
        assert_eq!(
            relative_gap(Money::from_scaled(-100), Money::from_scaled(-110)),
            0.1
        );
        assert_eq!(relative_gap(Money::ZERO, Money::ZERO), 0.0);
        assert!(relative_gap(Money::ZERO, Money::from_scaled(-1)).is_infinite());
    }

    /// Small instance with non-increasing weights; costs drawn from a small
    /// range so ladders stay short.
    fn small_instance(max_n: usize, max_cost: i64) -> impl Strategy<Value = DompInstance> {
        (1..=max_n).prop_flat_map(move |n| {
            (
                proptest::collection::vec(1..=max_cost, n * n),
                proptest::collection::vec(-5i64..=5, n),
                1..=n,
            )
                .prop_map(move |(c, mut lambda, p)| {
                    lambda.sort_unstable_by(|a, b| b.cmp(a));
                    let rows = c.chunks(n).map(<[i64]>::to_vec).collect();
                    DompInstance::from_scaled(rows, p, lambda).unwrap()
                })
        })
    }

    fn random_open(n: usize, p: usize, seed: usize) -> Vec<usize> {
        facility_subsets(n, p)
            .nth(seed % binomial(n as u64, p as u64) as usize)
            .unwrap()
    }

    proptest! {
        #[test]
        fn recovered_encoding_matches_staircase_indices(
            inst in small_instance(6, 9), seed in 0usize..1000,
        ) {
            let ladder = CostLadder::from_instance(&inst);
            let a = closest_assignment(&inst, &random_open(inst.n(), inst.p(), seed)).unwrap();
            let hist = xbar_histogram(&inst, &a, &ladder).unwrap();
            let sub = subproblem_tp(&inst, &ladder, &hist).unwrap();
            let b1 = encoding_from_histogram(inst.n(), &hist, Orientation::B1).unwrap();
            let b2 = encoding_from_histogram(inst.n(), &hist, Orientation::B2).unwrap();
            prop_assert_eq!(b1.f(), &row_entry_columns(&sub).unwrap()[..]);
            prop_assert_eq!(b2.f(), &col_exit_rows(&sub).unwrap()[..ladder.g()]);
            prop_assert_eq!(b1.convert(), b2.clone());
            prop_assert_eq!(b2.convert(), b1);
        }

        #[test]
        fn duals_are_optimal_for_the_subproblem(
            inst in small_instance(6, 9), seed in 0usize..1000,
        ) {
            let ladder = CostLadder::from_instance(&inst);
            let a = closest_assignment(&inst, &random_open(inst.n(), inst.p(), seed)).unwrap();
            let hist = xbar_histogram(&inst, &a, &ladder).unwrap();
            let sub = subproblem_tp(&inst, &ladder, &hist).unwrap();
            let opt = tp_optimal_value(&sub).unwrap();
            prop_assert_eq!(opt, ordered_median_value(&inst, &a.open).unwrap());
            for o in Orientation::ALL {
                let enc = encoding_from_histogram(inst.n(), &hist, o).unwrap();
                let d = duals(&inst, &ladder, &enc).unwrap();
                prop_assert!(d.is_feasible(sub.costs()));
                prop_assert_eq!(d.objective(&sub), opt);
            }
        }

        /// Any encoding yields a feasible subproblem dual, hence a valid cut.
        #[test]
        fn every_encoding_is_dual_feasible(inst in small_instance(4, 5)) {
            let ladder = CostLadder::from_instance(&inst);
            let costs = subproblem_tp(&inst, &ladder, &{
                let mut h = vec![0u64; ladder.g() + 1];
                h[ladder.g()] = inst.n() as u64;
                h
            }).unwrap();
            for o in Orientation::ALL {
                for enc in enumerate_encodings(inst.n(), ladder.g(), o, DEFAULT_ENCODING_CAP).unwrap() {
                    prop_assert!(duals(&inst, &ladder, &enc).unwrap().is_feasible(costs.costs()));
                }
            }
        }

        #[test]
        fn closed_forms_match_coefficient_form(
            inst in small_instance(5, 9), pick in proptest::collection::vec(0usize..1000, 8),
        ) {
            let ladder = CostLadder::from_instance(&inst);
            let n = inst.n();
            let selected: Vec<Money> = pick.iter().map(|&k| inst.costs().get((k / n) % n, k % n)).collect();
            for o in Orientation::ALL {
                let encs = enumerate_encodings(n, ladder.g(), o, DEFAULT_ENCODING_CAP).unwrap();
                for enc in encs.iter().step_by(1 + encs.len() / 40) {
                    let cut = cut_from_encoding(&inst, &ladder, enc).unwrap();
                    prop_assert_eq!(cut.rhs_at_costs(&ladder, &selected), rhs_closed_form(&inst, &ladder, enc, &selected).unwrap());
                    let b = cut_from_encoding(&inst, &ladder, &enc.convert()).unwrap();
                    prop_assert_eq!(b.key(), cut.key());
                }
            }
        }

        #[test]
        fn benders_matches_enumeration(inst in small_instance(6, 30)) {
            let (best, _) = domp_enumerate(&inst, DEFAULT_ENUM_CAP).unwrap();
            let ladder = CostLadder::from_instance(&inst);
            for o in Orientation::ALL {
                let out = solve_benders(&inst, o, Money::ZERO, &Limits::default()).unwrap();
                prop_assert_eq!(out.value, best);
                prop_assert_eq!(out.log.gap, 0.0);
                prop_assert_eq!(out.log.cuts.len() + 1, out.log.iterations);
                for logged in &out.log.cuts {
                    let gen = closest_assignment(&inst, &logged.generator).unwrap();
                    prop_assert_eq!(logged.cut.rhs_at(&ladder, &gen), ordered_median_value(&inst, &logged.generator).unwrap());
                    for open in facility_subsets(inst.n(), inst.p()) {
                        let a = closest_assignment(&inst, &open).unwrap();
                        prop_assert!(logged.cut.rhs_at(&ladder, &a) <= ordered_median(inst.lambda(), &a.alloc_costs));
                    }
                }
            }
        }
    }
}
