//! The discrete ordered median problem: choose `p` of `n` sites so that the
//! weight vector `lambda`, applied to the sorted client allocation costs, is
//! minimal.
//!
//! Facility and client indices are zero-based. Weights must be
//! non-increasing, which is what makes the transportation subproblem below
//! Monge and lets the greedy duals produce optimality cuts.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::tp::TpInstance;
use crate::{Error, Matrix, Money, Result};

/// A DOMP instance with strictly positive costs and non-increasing weights.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DompInstance {
    costs: Matrix<Money>,
    p: usize,
    lambda: Vec<i64>,
}

impl DompInstance {
    pub fn new(costs: Matrix<Money>, p: usize, lambda: Vec<i64>) -> Result<Self> {
        let n = costs.rows();
        if costs.cols() != n {
            return Err(Error::Dimension(format!(
                "cost matrix must be square, got {}x{}",
                costs.rows(),
                costs.cols()
            )));
        }
        if p == 0 || p > n {
            return Err(Error::InvalidInstance(format!(
                "need 1 <= p <= n, got p={p}, n={n}"
            )));
        }
        if lambda.len() != n {
            return Err(Error::Dimension(format!(
                "lambda has length {}, expected {n}",
                lambda.len()
            )));
        }
        if let Some(k) = lambda.windows(2).position(|w| w[0] < w[1]) {
            return Err(Error::InvalidInstance(format!(
                "lambda must be non-increasing, but lambda[{k}] = {} < lambda[{}] = {}",
                lambda[k],
                k + 1,
                lambda[k + 1]
            )));
        }
        if let Some(c) = costs.iter().find(|c| c.scaled() <= 0) {
            return Err(Error::InvalidInstance(format!(
                "costs must be strictly positive, found {c}"
            )));
        }
        Ok(Self { costs, p, lambda })
    }

    pub fn from_scaled(costs: Vec<Vec<i64>>, p: usize, lambda: Vec<i64>) -> Result<Self> {
        Self::new(
            Matrix::from_rows(costs)?.map(|&c| Money::from_scaled(c)),
            p,
            lambda,
        )
    }

    pub fn n(&self) -> usize {
        self.costs.rows()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn costs(&self) -> &Matrix<Money> {
        &self.costs
    }

    pub fn lambda(&self) -> &[i64] {
        &self.lambda
    }

    pub fn with_p(&self, p: usize) -> Result<Self> {
        Self::new(self.costs.clone(), p, self.lambda.clone())
    }

    pub fn with_lambda(&self, lambda: Vec<i64>) -> Result<Self> {
        Self::new(self.costs.clone(), self.p, lambda)
    }

    /// Sorted, deduplicated copy of `open` after checking it is a valid
    /// `p`-subset of the sites.
    pub fn facility_set(&self, open: &[usize]) -> Result<Vec<usize>> {
        let mut set = open.to_vec();
        set.sort_unstable();
        if set.is_empty() {
            return Err(Error::InvalidFacilitySet("no facility is open".into()));
        }
        if set.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidFacilitySet(format!(
                "duplicate facility in {open:?}"
            )));
        }
        if let Some(&j) = set.iter().find(|&&j| j >= self.n()) {
            return Err(Error::InvalidFacilitySet(format!(
                "facility {j} out of range 0..{}",
                self.n()
            )));
        }
        if set.len() != self.p {
            return Err(Error::InvalidFacilitySet(format!(
                "expected {} open facilities, got {}",
                self.p,
                set.len()
            )));
        }
        Ok(set)
    }
}

/// All `p`-subsets of `0..n` in lexicographic order.
pub fn facility_subsets(n: usize, p: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..n).combinations(p)
}

/// `n choose k`, saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(x) => x / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// The sorted distinct cost values with a zero rung in front:
/// `0 = c_(0) < c_(1) < ... < c_(g)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CostLadder {
    values: Vec<Money>,
}

impl CostLadder {
    pub fn from_instance(inst: &DompInstance) -> Self {
        Self::from_costs(inst.costs().iter().copied())
    }

    /// Builds the ladder from strictly positive costs.
    pub fn from_costs(costs: impl IntoIterator<Item = Money>) -> Self {
        let mut values: Vec<Money> = std::iter::once(Money::ZERO).chain(costs).collect();
        values.sort_unstable();
        values.dedup();
        debug_assert!(values.len() == 1 || values[1] > Money::ZERO);
        Self { values }
    }

    /// Number of distinct positive costs.
    pub fn g(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[Money] {
        &self.values
    }

    #[inline]
    pub fn value(&self, h: usize) -> Money {
        self.values[h]
    }

    /// `c_(h) - c_(h-1)` for `h >= 1`.
    #[inline]
    pub fn step(&self, h: usize) -> Money {
        self.values[h] - self.values[h - 1]
    }

    /// Index `h` with `c_(h) == cost`.
    pub fn rank(&self, cost: Money) -> Option<usize> {
        self.values.binary_search(&cost).ok()
    }
}

/// Open facilities, each client's facility, and the resulting allocation
/// costs `c_i(Y)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub open: Vec<usize>,
    pub assign: Vec<usize>,
    pub alloc_costs: Vec<Money>,
}

/// Assigns every client to its cheapest open facility, breaking ties towards
/// the smallest facility index.
pub fn closest_assignment(inst: &DompInstance, open: &[usize]) -> Result<Assignment> {
    let open = inst.facility_set(open)?;
    let c = inst.costs();
    let (assign, alloc_costs) = (0..inst.n())
        .map(|i| {
            // `open` is sorted, so min_by_key keeps the first minimiser.
            let j = *open.iter().min_by_key(|&&j| c.get(i, j)).expect("nonempty");
            (j, c.get(i, j))
        })
        .unzip();
    Ok(Assignment {
        open,
        assign,
        alloc_costs,
    })
}

/// `<lambda, costs sorted non-decreasingly>`.
pub fn ordered_median(lambda: &[i64], costs: &[Money]) -> Money {
    debug_assert_eq!(lambda.len(), costs.len());
    let mut sorted = costs.to_vec();
    sorted.sort_unstable();
    lambda.iter().zip(&sorted).map(|(&l, &c)| c * l).sum()
}

/// Ordered median objective of opening `open`.
pub fn ordered_median_value(inst: &DompInstance, open: &[usize]) -> Result<Money> {
    let a = closest_assignment(inst, open)?;
    Ok(ordered_median(inst.lambda(), &a.alloc_costs))
}

/// Checks that the binary point `(x, y)` induced by `a` lies in the
/// p-median polytope: `p` facilities open, every client assigned once to an
/// open facility, and no client served by a facility strictly more expensive
/// than some open one (`sum_{j: c_ij > c_im} x_ij + y_m <= 1`).
pub fn satisfies_p_median_constraints(inst: &DompInstance, a: &Assignment) -> bool {
    let n = inst.n();
    let mut y = vec![0u32; n];
    for &j in &a.open {
        if j >= n {
            return false;
        }
        y[j] += 1;
    }
    if y.iter().any(|&k| k > 1) || a.open.len() != inst.p() || a.assign.len() != n {
        return false;
    }
    let c = inst.costs();
    (0..n).all(|i| {
        let j = a.assign[i];
        // Single assignment per client is structural; x_ij <= y_j:
        j < n
            && y[j] == 1
            && (0..n).all(|m| {
                let farther = u32::from(c.get(i, j) > c.get(i, m));
                farther + y[m] <= 1
            })
    })
}

/// Number of clients whose allocation cost equals each ladder rung.
pub fn xbar_histogram(
    inst: &DompInstance,
    a: &Assignment,
    ladder: &CostLadder,
) -> Result<Vec<u64>> {
    let n = inst.n();
    if a.assign.len() != n || a.alloc_costs.len() != n {
        return Err(Error::HistogramMismatch(format!(
            "assignment covers {} clients, instance has {n}",
            a.assign.len()
        )));
    }
    let mut hist = vec![0u64; ladder.g() + 1];
    for (i, (&j, &cost)) in a.assign.iter().zip(&a.alloc_costs).enumerate() {
        if j >= n || inst.costs().get(i, j) != cost {
            return Err(Error::HistogramMismatch(format!(
                "client {i}: recorded cost {cost} does not match facility {j}"
            )));
        }
        let h = ladder
            .rank(cost)
            .ok_or_else(|| Error::HistogramMismatch(format!("cost {cost} is not on the ladder")))?;
        hist[h] += 1;
    }
    Ok(hist)
}

/// The transportation subproblem at a fixed assignment: `n` positions with
/// unit supply, one column per rung with demand `hist[h]`, and cost
/// `lambda_l * c_(h)`.
pub fn subproblem_tp(inst: &DompInstance, ladder: &CostLadder, hist: &[u64]) -> Result<TpInstance> {
    let n = inst.n();
    if hist.len() != ladder.g() + 1 {
        return Err(Error::HistogramMismatch(format!(
            "histogram has {} buckets, ladder has {} rungs",
            hist.len(),
            ladder.g() + 1
        )));
    }
    let total: u64 = hist.iter().sum();
    if total != n as u64 {
        return Err(Error::Unbalanced {
            supply: n as u64,
            demand: total,
        });
    }
    let lambda = inst.lambda();
    let costs = Matrix::from_fn(n, hist.len(), |l, h| ladder.value(h) * lambda[l])?;
    TpInstance::new(vec![1; n], hist.to_vec(), costs)
}

/// Model-independent lower bound on the optimal objective: nonnegative
/// weights meet the sorted row minima, negative weights the sorted row
/// maxima.
pub fn theta_lower_bound(inst: &DompInstance) -> Money {
    let c = inst.costs();
    let n = inst.n();
    let mut mins: Vec<Money> = (0..n)
        .map(|i| *c.row(i).iter().min().expect("nonempty"))
        .collect();
    let mut maxs: Vec<Money> = (0..n)
        .map(|i| *c.row(i).iter().max().expect("nonempty"))
        .collect();
    mins.sort_unstable();
    maxs.sort_unstable();
    inst.lambda()
        .iter()
        .enumerate()
        .map(|(i, &l)| if l >= 0 { mins[i] * l } else { maxs[i] * l })
        .sum()
}
