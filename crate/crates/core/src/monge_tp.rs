//! Greedy primal and closed-form duals for the balanced transportation
//! problem.
//!
//! For a Monge cost matrix the northwest-corner rule is optimal, and the
//! staircase it traces determines an optimal dual solution in closed form.
//! Everything here is well defined for any cost matrix; optimality is only
//! guaranteed when [`is_monge`](crate::tp::is_monge) holds.

use crate::tp::{Cell, DualSolution, Move, StaircasePath, TpInstance};
use crate::{Error, Money, Result};

/// Northwest-corner rule.
///
/// Starting at `(0, 0)`, ship as much as possible on the current cell, then
/// move down if the row's supply is exhausted (and a row below exists),
/// otherwise right. Cells with a zero shipment stay on the path.
pub fn northwest_corner(inst: &TpInstance) -> Result<StaircasePath> {
    inst.ensure_balanced()?;
    let (p, q) = (inst.rows(), inst.cols());
    let mut supply = inst.supplies().to_vec();
    let mut demand = inst.demands().to_vec();

    let mut cells = Vec::with_capacity(p + q - 1);
    let mut shipments = Vec::with_capacity(p + q - 1);
    let mut moves = Vec::with_capacity(p + q - 1);
    let mut at = Cell::new(0, 0);
    while at.col < q {
        let x = supply[at.row].min(demand[at.col]);
        supply[at.row] -= x;
        demand[at.col] -= x;
        cells.push(at);
        shipments.push(x);
        if supply[at.row] == 0 && at.row + 1 < p {
            moves.push(Move::Down);
            at.row += 1;
        } else {
            moves.push(Move::Right);
            at.col += 1;
        }
    }
    // The last recorded move leaves the grid.
    moves.pop();

    debug_assert!(supply.iter().chain(&demand).all(|&r| r == 0));
    let path = StaircasePath {
        cells,
        moves,
        shipments,
    };
    debug_assert!(path.validate(inst).is_ok());
    Ok(path)
}

/// Cumulative supplies and demands: `supply[i] = s_0 + .. + s_{i-1}`.
#[derive(Clone, Debug)]
pub struct PrefixSums {
    pub supply: Vec<u64>,
    pub demand: Vec<u64>,
}

impl PrefixSums {
    pub fn new(inst: &TpInstance) -> Self {
        let scan = |xs: &[u64]| {
            let mut acc = 0u64;
            std::iter::once(0)
                .chain(xs.iter().map(|&x| {
                    acc = acc.checked_add(x).expect("quantity overflow");
                    acc
                }))
                .collect::<Vec<_>>()
        };
        Self {
            supply: scan(inst.supplies()),
            demand: scan(inst.demands()),
        }
    }
}

/// Closed-form test for whether the greedy staircase passes through `cell`.
///
/// With one-based `(i, j)` the predicate reads
/// `(S_{<i} <= D_{<=j} or i = 1) and (S_{<=i} > D_{<j} or i = p or j = 1)`,
/// where `S` and `D` are cumulative supplies and demands.
pub fn staircase_membership(inst: &TpInstance, cell: Cell) -> Result<bool> {
    inst.ensure_balanced()?;
    let (p, q) = (inst.rows(), inst.cols());
    if cell.row >= p || cell.col >= q {
        return Err(Error::OutOfGrid {
            row: cell.row,
            col: cell.col,
            rows: p,
            cols: q,
        });
    }
    Ok(membership_with(&PrefixSums::new(inst), p, cell))
}

fn membership_with(sums: &PrefixSums, p: usize, Cell { row: i, col: j }: Cell) -> bool {
    let reached_from_above = sums.supply[i] <= sums.demand[j + 1] || i == 0;
    let reached_from_left = sums.supply[i + 1] > sums.demand[j] || i + 1 == p || j == 0;
    reached_from_above && reached_from_left
}

/// All cells satisfying [`staircase_membership`], in row-major order.
pub fn staircase_cells(inst: &TpInstance) -> Result<Vec<Cell>> {
    inst.ensure_balanced()?;
    let sums = PrefixSums::new(inst);
    let p = inst.rows();
    Ok((0..p)
        .flat_map(|i| (0..inst.cols()).map(move |j| Cell::new(i, j)))
        .filter(|&c| membership_with(&sums, p, c))
        .collect())
}

/// First column the staircase visits in each row:
/// `j_i = min { j : S_{<i} <= D_{<=j} }`.
///
/// Defined for every row; row 0 always yields column 0.
pub fn row_entry_columns(inst: &TpInstance) -> Result<Vec<usize>> {
    inst.ensure_balanced()?;
    let sums = PrefixSums::new(inst);
    let q = inst.cols();
    let mut j = 0;
    Ok((0..inst.rows())
        .map(|i| {
            while sums.supply[i] > sums.demand[j + 1] {
                j += 1;
            }
            debug_assert!(j < q);
            j
        })
        .collect())
}

/// Last row the staircase visits in each column:
/// `i_j = max { i : S_{<i} <= D_{<=j} }`.
///
/// Defined for every column; the last column always yields the last row.
pub fn col_exit_rows(inst: &TpInstance) -> Result<Vec<usize>> {
    inst.ensure_balanced()?;
    let sums = PrefixSums::new(inst);
    let p = inst.rows();
    let mut i = 0;
    Ok((0..inst.cols())
        .map(|j| {
            while i + 1 < p && sums.supply[i + 1] <= sums.demand[j + 1] {
                i += 1;
            }
            i
        })
        .collect())
}

fn check_path(inst: &TpInstance, path: &StaircasePath) -> Result<()> {
    inst.ensure_balanced()?;
    path.validate(inst)
}

/// Dual backward recursion.
///
/// Fixes `v` of the last column to zero, then walks the path from the last
/// cell to the first. A cell left downwards assigns its row dual, a cell
/// left to the right assigns its column dual; the last cell counts as a
/// downward one.
pub fn dual_backward(inst: &TpInstance, path: &StaircasePath) -> Result<DualSolution> {
    check_path(inst, path)?;
    let c = inst.costs();
    let mut u = vec![Money::ZERO; inst.rows()];
    let mut v = vec![Money::ZERO; inst.cols()];
    let last = path.len() - 1;
    for t in (0..=last).rev() {
        let Cell { row, col } = path.cells[t];
        let step = if t == last { Move::Down } else { path.moves[t] };
        match step {
            Move::Down => u[row] = c.get(row, col) - v[col],
            Move::Right => v[col] = c.get(row, col) - u[row],
        }
    }
    Ok(DualSolution { u, v })
}

/// Starting value for [`dual_forward`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DualInit {
    /// Fix the first row dual; the first cell then assigns `v_1`.
    U1(Money),
    /// Fix the first column dual; the first cell then assigns `u_1`.
    V1(Money),
}

impl Default for DualInit {
    fn default() -> Self {
        DualInit::U1(Money::ZERO)
    }
}

/// Dual forward recursion: the backward recursion replayed from the first
/// cell, where the move *into* a cell decides which dual it assigns.
///
/// With `U1(0)` the result is the backward solution shifted by `-u_1`;
/// `U1(b)` shifts that by `(+b, -b)`; `V1(b)` yields
/// `(u + (v_1 - b), v - (v_1 - b))` relative to the `U1(0)` output.
pub fn dual_forward(
    inst: &TpInstance,
    path: &StaircasePath,
    init: DualInit,
) -> Result<DualSolution> {
    check_path(inst, path)?;
    let c = inst.costs();
    let mut u = vec![Money::ZERO; inst.rows()];
    let mut v = vec![Money::ZERO; inst.cols()];
    let first_step = match init {
        DualInit::U1(b) => {
            u[0] = b;
            Move::Right
        }
        DualInit::V1(b) => {
            v[0] = b;
            Move::Down
        }
    };
    for (t, &Cell { row, col }) in path.cells.iter().enumerate() {
        let step = if t == 0 {
            first_step
        } else {
            path.moves[t - 1]
        };
        match step {
            Move::Down => u[row] = c.get(row, col) - v[col],
            Move::Right => v[col] = c.get(row, col) - u[row],
        }
    }
    Ok(DualSolution { u, v })
}

/// Closed-form duals keyed by the row entry columns `j_i`:
///
/// ```text
/// u_i = sum_{k=2..i} (c[k][j_k] - c[k-1][j_k])
/// v_j = c[1][j] + sum_{k>=2, j_k<=j} (c[k][j] - c[k-1][j] - c[k][j_k] + c[k-1][j_k])
/// ```
///
/// Identical to [`dual_forward`] with `U1(0)`.
pub fn duals_formula_row(inst: &TpInstance) -> Result<DualSolution> {
    let entry = row_entry_columns(inst)?;
    let c = inst.costs();
    let (p, q) = (inst.rows(), inst.cols());

    let mut u = Vec::with_capacity(p);
    let mut acc = Money::ZERO;
    u.push(acc);
    for (k, &jk) in entry.iter().enumerate().skip(1) {
        acc += c.get(k, jk) - c.get(k - 1, jk);
        u.push(acc);
    }

    let v = (0..q)
        .map(|j| {
            c.get(0, j)
                + (1..p)
                    .filter(|&k| entry[k] <= j)
                    .map(|k| {
                        let jk = entry[k];
                        c.get(k, j) - c.get(k - 1, j) - c.get(k, jk) + c.get(k - 1, jk)
                    })
                    .sum::<Money>()
        })
        .collect();
    Ok(DualSolution { u, v })
}

/// Closed-form duals keyed by the column exit rows `i_j`:
///
/// ```text
/// u_i = c[i][1] + sum_{k>=2, i_{k-1}<=i} (c[i][k] - c[i][k-1] - c[i_{k-1}][k] + c[i_{k-1}][k-1])
/// v_j = sum_{k=2..j} (c[i_{k-1}][k] - c[i_{k-1}][k-1])
/// ```
///
/// Equal to [`duals_formula_row`] shifted by `(+c_11, -c_11)`.
pub fn duals_formula_col(inst: &TpInstance) -> Result<DualSolution> {
    let exit = col_exit_rows(inst)?;
    let c = inst.costs();
    let (p, q) = (inst.rows(), inst.cols());

    let u = (0..p)
        .map(|i| {
            c.get(i, 0)
                + (1..q)
                    .filter(|&k| exit[k - 1] <= i)
                    .map(|k| {
                        let ik = exit[k - 1];
                        c.get(i, k) - c.get(i, k - 1) - c.get(ik, k) + c.get(ik, k - 1)
                    })
                    .sum::<Money>()
        })
        .collect();

    let mut v = Vec::with_capacity(q);
    let mut acc = Money::ZERO;
    v.push(acc);
    for k in 1..q {
        let ik = exit[k - 1];
        acc += c.get(ik, k) - c.get(ik, k - 1);
        v.push(acc);
    }
    Ok(DualSolution { u, v })
}

/// Which dual routine to run; used by the command line and the verifiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DualMethod {
    Backward,
    Forward,
    FormulaRow,
    FormulaCol,
}

impl DualMethod {
    pub const ALL: [DualMethod; 4] = [
        DualMethod::Backward,
        DualMethod::Forward,
        DualMethod::FormulaRow,
        DualMethod::FormulaCol,
    ];

    pub fn compute(self, inst: &TpInstance, path: &StaircasePath) -> Result<DualSolution> {
        match self {
            DualMethod::Backward => dual_backward(inst, path),
            DualMethod::Forward => dual_forward(inst, path, DualInit::default()),
            DualMethod::FormulaRow => duals_formula_row(inst),
            DualMethod::FormulaCol => duals_formula_col(inst),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tp::is_monge;
    use crate::Matrix;
    use proptest::prelude::*;

    fn worked() -> TpInstance {
        TpInstance::from_scaled(vec![3, 2], vec![2, 3], vec![vec![1, 2], vec![2, 3]]).unwrap()
    }

    fn money(xs: &[i64]) -> Vec<Money> {
        xs.iter().map(|&x| Money::from_scaled(x)).collect()
    }

    fn cells(xs: &[(usize, usize)]) -> Vec<Cell> {
        xs.iter().map(|&c| c.into()).collect()
    }

    fn zero_costs(p: usize, q: usize) -> Vec<Vec<i64>> {
        vec![vec![0; q]; p]
    }

    #[test]
    fn northwest_corner_worked_instance() {
        let path = northwest_corner(&worked()).unwrap();
        assert_eq!(path.cells, cells(&[(0, 0), (0, 1), (1, 1)]));
        assert_eq!(path.shipments, vec![2, 1, 2]);
        assert_eq!(path.moves, vec![Move::Right, Move::Down]);
        assert_eq!(path.cost(&worked()), Money::from_scaled(10));
    }

    #[test]
    fn northwest_corner_single_cell() {
        let inst = TpInstance::from_scaled(vec![5], vec![5], vec![vec![7]]).unwrap();
        let path = northwest_corner(&inst).unwrap();
        assert_eq!(path.cells, cells(&[(0, 0)]));
        assert_eq!(path.shipments, vec![5]);
        assert!(path.moves.is_empty());
    }

    #[test]
    fn northwest_corner_keeps_zero_shipment_cells() {
        // Hand trace: (1,1) ships 1 and moves right, (1,2) ships 1 and
        // exhausts row 1, (2,2) ships 0, (2,3) ships 2.
        let inst = TpInstance::from_scaled(vec![2, 2], vec![1, 1, 2], zero_costs(2, 3)).unwrap();
        let path = northwest_corner(&inst).unwrap();
        assert_eq!(path.cells, cells(&[(0, 0), (0, 1), (1, 1), (1, 2)]));
        assert_eq!(path.shipments, vec![1, 1, 0, 2]);
        assert_eq!(path.moves, vec![Move::Right, Move::Down, Move::Right]);
    }

    #[test]
    fn northwest_corner_all_zero_totals() {
        let inst = TpInstance::from_scaled(vec![0, 0], vec![0], zero_costs(2, 1)).unwrap();
        let path = northwest_corner(&inst).unwrap();
        assert_eq!(path.cells, cells(&[(0, 0), (1, 0)]));
        assert_eq!(path.shipments, vec![0, 0]);
        assert_eq!(path.moves, vec![Move::Down]);
        path.validate(&inst).unwrap();
    }

    #[test]
    fn unbalanced_is_rejected() {
        let inst = TpInstance::from_scaled(vec![1], vec![2], vec![vec![0]]).unwrap();
        assert_eq!(
            northwest_corner(&inst),
            Err(Error::Unbalanced {
                supply: 1,
                demand: 2
            })
        );
        assert!(duals_formula_row(&inst).is_err());
        assert!(duals_formula_col(&inst).is_err());
    }

    #[test]
    fn membership_examples() {
        let inst = worked();
        assert!(!staircase_membership(&inst, Cell::new(1, 0)).unwrap());
        assert!(staircase_membership(&inst, Cell::new(0, 0)).unwrap());
        assert!(matches!(
            staircase_membership(&inst, Cell::new(2, 0)),
            Err(Error::OutOfGrid { .. })
        ));
    }

    #[test]
    fn backward_worked_instance() {
        let inst = worked();
        let path = northwest_corner(&inst).unwrap();
        let d = dual_backward(&inst, &path).unwrap();
        // v_q is pinned to zero; trace: u_2 = 3, u_1 = 2, v_1 = 1 - 2.
        assert_eq!(d.u, money(&[2, 3]));
        assert_eq!(d.v, money(&[-1, 0]));
        assert_eq!(d.objective(&inst), Money::from_scaled(10));
        // Forward output is this solution shifted by -u_1.
        let f = dual_forward(&inst, &path, DualInit::U1(Money::ZERO)).unwrap();
        assert_eq!(f, d.shifted(-d.u[0]));
    }

    #[test]
    fn backward_single_cell() {
        let inst = TpInstance::from_scaled(vec![5], vec![5], vec![vec![7]]).unwrap();
        let path = northwest_corner(&inst).unwrap();
        let d = dual_backward(&inst, &path).unwrap();
        assert_eq!(d.u, money(&[7]));
        assert_eq!(d.v, money(&[0]));
    }

    #[test]
    fn forward_initialisations() {
        let inst = worked();
        let path = northwest_corner(&inst).unwrap();
        let base = dual_forward(&inst, &path, DualInit::U1(Money::ZERO)).unwrap();
        assert_eq!(base.u, money(&[0, 1]));
        assert_eq!(base.v, money(&[1, 2]));

        let five = dual_forward(&inst, &path, DualInit::U1(Money::from_scaled(5))).unwrap();
        assert_eq!(five.u, money(&[5, 6]));
        assert_eq!(five.v, money(&[-4, -3]));

        let v0 = dual_forward(&inst, &path, DualInit::V1(Money::ZERO)).unwrap();
        assert_eq!(v0.u, money(&[1, 2]));
        assert_eq!(v0.v, money(&[0, 1]));
    }

    #[test]
    fn forward_rejects_foreign_path() {
        let inst = worked();
        let mut path = northwest_corner(&inst).unwrap();
        path.cells.pop();
        assert!(matches!(
            dual_forward(&inst, &path, DualInit::default()),
            Err(Error::InconsistentPath(_))
        ));
        assert!(dual_backward(&inst, &path).is_err());
    }

    #[test]
    fn formula_row_worked_instance() {
        let inst = worked();
        assert_eq!(row_entry_columns(&inst).unwrap(), vec![0, 1]);
        let d = duals_formula_row(&inst).unwrap();
        assert_eq!(d.u, money(&[0, 1]));
        assert_eq!(d.v, money(&[1, 2]));
        assert_eq!(d.objective(&inst), Money::from_scaled(10));
    }

    #[test]
    fn formula_col_worked_instance() {
        let inst = worked();
        assert_eq!(col_exit_rows(&inst).unwrap()[0], 0);
        let d = duals_formula_col(&inst).unwrap();
        assert_eq!(d.u, money(&[1, 2]));
        assert_eq!(d.v, money(&[0, 1]));
    }

    #[test]
    fn formulas_degenerate_shapes() {
        let row = TpInstance::from_scaled(vec![6], vec![1, 2, 3], vec![vec![4, 5, 9]]).unwrap();
        let d = duals_formula_row(&row).unwrap();
        assert_eq!(d.u, money(&[0]));
        assert_eq!(d.v, money(&[4, 5, 9]));

        let col = TpInstance::from_scaled(vec![1, 2, 3], vec![6], vec![vec![4], vec![5], vec![9]])
            .unwrap();
        let d = duals_formula_col(&col).unwrap();
        assert_eq!(d.v, money(&[0]));
        assert_eq!(d.u, money(&[4, 5, 9]));
    }

    /// Monge matrix from nonnegative increments:
    /// `c[i][j] = r_i + t_j + sum_{k<=i, l>=j} w[k][l]`.
    fn monge_from(p: usize, q: usize, r: &[i64], t: &[i64], w: &[i64]) -> Matrix<Money> {
        Matrix::from_fn(p, q, |i, j| {
            let mut acc = r[i] + t[j];
            for k in 0..=i {
                for l in j..q {
                    acc += w[k * q + l];
                }
            }
            Money::from_scaled(acc)
        })
        .unwrap()
    }

    fn balanced(mut s: Vec<u64>, mut d: Vec<u64>) -> (Vec<u64>, Vec<u64>) {
        // Trim the larger side until totals agree.
        loop {
            let (ts, td) = (s.iter().sum::<u64>(), d.iter().sum::<u64>());
            if ts == td {
                return (s, d);
            }
            let side = if ts > td { &mut s } else { &mut d };
            let k = side.iter().rposition(|&x| x > 0).unwrap();
            side[k] -= 1;
        }
    }

    fn monge_instance() -> impl Strategy<Value = TpInstance> {
        (1usize..8, 1usize..8).prop_flat_map(|(p, q)| {
            (
                proptest::collection::vec(0u64..=20, p),
                proptest::collection::vec(0u64..=20, q),
                proptest::collection::vec(-50i64..50, p),
                proptest::collection::vec(-50i64..50, q),
                proptest::collection::vec(0i64..6, p * q),
            )
                .prop_map(move |(s, d, r, t, w)| {
                    let (s, d) = balanced(s, d);
                    TpInstance::new(s, d, monge_from(p, q, &r, &t, &w)).unwrap()
                })
        })
    }

    fn any_instance() -> impl Strategy<Value = TpInstance> {
        (1usize..7, 1usize..7).prop_flat_map(|(p, q)| {
            (
                proptest::collection::vec(0u64..=9, p),
                proptest::collection::vec(0u64..=9, q),
                proptest::collection::vec(-20i64..20, p * q),
            )
                .prop_map(move |(s, d, c)| {
                    let (s, d) = balanced(s, d);
                    let c = Matrix::from_row_major(
                        p,
                        q,
                        c.into_iter().map(Money::from_scaled).collect(),
                    )
                    .unwrap();
                    TpInstance::new(s, d, c).unwrap()
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn generated_matrices_are_monge(inst in monge_instance()) {
            prop_assert!(is_monge(inst.costs()));
        }

        #[test]
        fn greedy_path_is_a_feasible_staircase(inst in any_instance()) {
            let path = northwest_corner(&inst).unwrap();
            path.validate(&inst).unwrap();
        }

        #[test]
        fn membership_characterises_the_path(inst in any_instance()) {
            let path = northwest_corner(&inst).unwrap();
            let mut traversed = path.cells.clone();
            traversed.sort();
            prop_assert_eq!(staircase_cells(&inst).unwrap(), traversed);
        }

        #[test]
        fn index_formulas_match_traversal(inst in any_instance()) {
            let path = northwest_corner(&inst).unwrap();
            let entry = row_entry_columns(&inst).unwrap();
            for (i, &j) in entry.iter().enumerate() {
                prop_assert_eq!(path.first_col_in_row(i), Some(j));
            }
            let exit = col_exit_rows(&inst).unwrap();
            for (j, &i) in exit.iter().enumerate() {
                prop_assert_eq!(path.last_row_in_col(j), Some(i));
            }
        }

        #[test]
        fn formulas_agree_with_recursions(inst in any_instance()) {
            // Holds for any cost matrix, Monge or not.
            let path = northwest_corner(&inst).unwrap();
            let fwd = dual_forward(&inst, &path, DualInit::U1(Money::ZERO)).unwrap();
            let bwd = dual_backward(&inst, &path).unwrap();
            prop_assert_eq!(&fwd, &bwd.shifted(-bwd.u[0]));
            prop_assert_eq!(&duals_formula_row(&inst).unwrap(), &fwd);
            let c11 = inst.costs().get(0, 0);
            prop_assert_eq!(duals_formula_col(&inst).unwrap(), fwd.shifted(c11));
            let b = Money::from_scaled(17);
            prop_assert_eq!(dual_forward(&inst, &path, DualInit::U1(b)).unwrap(), fwd.shifted(b));
            let v1 = fwd.v[0];
            prop_assert_eq!(dual_forward(&inst, &path, DualInit::V1(b)).unwrap(), fwd.shifted(v1 - b));
        }

        #[test]
        fn monge_duals_are_optimal(inst in monge_instance()) {
            let path = northwest_corner(&inst).unwrap();
            let primal = path.cost(&inst);
            for method in DualMethod::ALL {
                let d = method.compute(&inst, &path).unwrap();
                prop_assert_eq!(d.objective(&inst), primal, "{:?}", method);
                prop_assert!(d.is_feasible(inst.costs()), "{:?}", method);
                for (cell, &x) in path.cells.iter().zip(&path.shipments) {
                    if x > 0 {
                        prop_assert_eq!(d.u[cell.row] + d.v[cell.col], inst.cost(*cell));
                    }
                }
            }
        }
    }
}
