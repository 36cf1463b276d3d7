//! Balanced transportation problems and the objects the greedy solver
//! produces for them.
//!
//! Rows are supply nodes and columns are demand nodes. All indices are
//! zero-based; the first cell of every staircase is `(0, 0)`.

use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Money, Result};

/// A transportation problem with integer supplies and demands.
///
/// Shapes are validated on construction. Balancedness is not: callers can
/// build an unbalanced instance and ask [`balanced_check`] about it, while
/// every solver entry point rejects it with [`Error::Unbalanced`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TpInstance {
    supplies: Vec<u64>,
    demands: Vec<u64>,
    costs: Matrix<Money>,
}

impl TpInstance {
    pub fn new(supplies: Vec<u64>, demands: Vec<u64>, costs: Matrix<Money>) -> Result<Self> {
        if supplies.is_empty() || demands.is_empty() {
            return Err(Error::Dimension(
                "need at least one row and one column".into(),
            ));
        }
        if costs.rows() != supplies.len() || costs.cols() != demands.len() {
            return Err(Error::Dimension(format!(
                "cost matrix is {}x{}, expected {}x{}",
                costs.rows(),
                costs.cols(),
                supplies.len(),
                demands.len()
            )));
        }
        Ok(Self {
            supplies,
            demands,
            costs,
        })
    }

    /// Convenience constructor from scaled integer costs.
    pub fn from_scaled(
        supplies: Vec<u64>,
        demands: Vec<u64>,
        costs: Vec<Vec<i64>>,
    ) -> Result<Self> {
        let costs = Matrix::from_rows(costs)?.map(|&c| Money::from_scaled(c));
        Self::new(supplies, demands, costs)
    }

    pub fn rows(&self) -> usize {
        self.supplies.len()
    }

    pub fn cols(&self) -> usize {
        self.demands.len()
    }

    pub fn supplies(&self) -> &[u64] {
        &self.supplies
    }

    pub fn demands(&self) -> &[u64] {
        &self.demands
    }

    pub fn costs(&self) -> &Matrix<Money> {
        &self.costs
    }

    #[inline]
    pub fn cost(&self, cell: Cell) -> Money {
        self.costs.get(cell.row, cell.col)
    }

    pub fn total_supply(&self) -> u64 {
        checked_total(&self.supplies)
    }

    pub fn total_demand(&self) -> u64 {
        checked_total(&self.demands)
    }

    pub fn is_balanced(&self) -> bool {
        self.total_supply() == self.total_demand()
    }

    pub(crate) fn ensure_balanced(&self) -> Result<()> {
        let (supply, demand) = (self.total_supply(), self.total_demand());
        if supply == demand {
            Ok(())
        } else {
            Err(Error::Unbalanced { supply, demand })
        }
    }

    /// Cost of an arbitrary shipment plan given as `(cell, quantity)` pairs.
    pub fn plan_cost<'a>(&self, plan: impl IntoIterator<Item = (&'a Cell, &'a u64)>) -> Money {
        plan.into_iter().map(|(&c, &x)| self.cost(c).times(x)).sum()
    }
}

fn checked_total(values: &[u64]) -> u64 {
    values
        .iter()
        .try_fold(0u64, |acc, &v| acc.checked_add(v))
        .expect("quantity overflow")
}

/// True iff total supply equals total demand.
pub fn balanced_check(inst: &TpInstance) -> bool {
    inst.is_balanced()
}

/// Adjacent-submatrix Monge test:
/// `c[i][j] + c[i+1][j+1] <= c[i][j+1] + c[i+1][j]` for every 2x2 block.
///
/// Checking adjacent blocks suffices; summing the inequalities of the blocks
/// inside any larger rectangle yields the inequality for its corners.
pub fn is_monge(c: &Matrix<Money>) -> bool {
    (0..c.rows().saturating_sub(1)).all(|i| {
        (0..c.cols().saturating_sub(1)).all(|j| {
            let diag = c.get(i, j).scaled() as i128 + c.get(i + 1, j + 1).scaled() as i128;
            let anti = c.get(i, j + 1).scaled() as i128 + c.get(i + 1, j).scaled() as i128;
            diag <= anti
        })
    })
}

/// A cell of the transportation grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

impl From<(usize, usize)> for Cell {
    fn from((row, col): (usize, usize)) -> Self {
        Cell { row, col }
    }
}

/// A step of the staircase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Move {
    /// Supply of the current row is exhausted: advance one row.
    Down,
    /// Demand of the current column is met: advance one column.
    Right,
}

/// The trace of the northwest-corner rule: `T = rows + cols - 1` cells from
/// `(0, 0)` to `(rows-1, cols-1)`, the `T - 1` moves between them, and the
/// quantity shipped on each visited cell (possibly zero).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaircasePath {
    pub cells: Vec<Cell>,
    pub moves: Vec<Move>,
    pub shipments: Vec<u64>,
}

impl StaircasePath {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Primal objective of the shipments on the path.
    pub fn cost(&self, inst: &TpInstance) -> Money {
        inst.plan_cost(self.cells.iter().zip(&self.shipments))
    }

    /// Checks the structural invariants against `inst`: endpoints, step
    /// shape, length, and that shipments reproduce supplies and demands.
    pub fn validate(&self, inst: &TpInstance) -> Result<()> {
        let (p, q) = (inst.rows(), inst.cols());
        let bad = |msg: String| Err(Error::InconsistentPath(msg));
        if self.cells.len() != p + q - 1 {
            return bad(format!(
                "expected {} cells, got {}",
                p + q - 1,
                self.cells.len()
            ));
        }
        if self.moves.len() + 1 != self.cells.len() || self.shipments.len() != self.cells.len() {
            return bad("moves/shipments misaligned with cells".into());
        }
        if self.cells[0] != Cell::new(0, 0)
            || self.cells[self.cells.len() - 1] != Cell::new(p - 1, q - 1)
        {
            return bad("path must run from (0, 0) to the south-east corner".into());
        }
        for (t, mv) in self.moves.iter().enumerate() {
            let (a, b) = (self.cells[t], self.cells[t + 1]);
            let ok = match mv {
                Move::Down => b.row == a.row + 1 && b.col == a.col,
                Move::Right => b.col == a.col + 1 && b.row == a.row,
            };
            if !ok {
                return bad(format!(
                    "step {t} from {a:?} to {b:?} does not match {mv:?}"
                ));
            }
        }
        let mut rows = vec![0u64; p];
        let mut cols = vec![0u64; q];
        for (c, &x) in self.cells.iter().zip(&self.shipments) {
            rows[c.row] += x;
            cols[c.col] += x;
        }
        if rows != inst.supplies() || cols != inst.demands() {
            return bad("shipments do not reproduce supplies and demands".into());
        }
        Ok(())
    }

    /// Smallest column visited in row `row` (the staircase index `j_i`).
    pub fn first_col_in_row(&self, row: usize) -> Option<usize> {
        self.cells
            .iter()
            .filter(|c| c.row == row)
            .map(|c| c.col)
            .min()
    }

    /// Largest row visited in column `col` (the staircase index `i_j`).
    pub fn last_row_in_col(&self, col: usize) -> Option<usize> {
        self.cells
            .iter()
            .filter(|c| c.col == col)
            .map(|c| c.row)
            .max()
    }
}

/// Dual vectors: `u` for the supply rows, `v` for the demand columns.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DualSolution {
    pub u: Vec<Money>,
    pub v: Vec<Money>,
}

impl DualSolution {
    /// `sum_i s_i u_i + sum_j d_j v_j`.
    pub fn objective(&self, inst: &TpInstance) -> Money {
        let rows: Money = inst
            .supplies()
            .iter()
            .zip(&self.u)
            .map(|(&s, &u)| u.times(s))
            .sum();
        let cols: Money = inst
            .demands()
            .iter()
            .zip(&self.v)
            .map(|(&d, &v)| v.times(d))
            .sum();
        rows + cols
    }

    /// `u_i + v_j <= c_ij` for every cell.
    pub fn is_feasible(&self, c: &Matrix<Money>) -> bool {
        self.first_violation(c).is_none()
    }

    pub fn first_violation(&self, c: &Matrix<Money>) -> Option<Cell> {
        (0..c.rows())
            .flat_map(|i| (0..c.cols()).map(move |j| Cell::new(i, j)))
            .find(|cell| self.u[cell.row] + self.v[cell.col] > c.get(cell.row, cell.col))
    }

    /// `(u + b, v - b)`; preserves reduced costs, and the objective when the
    /// instance is balanced.
    pub fn shifted(&self, b: Money) -> DualSolution {
        DualSolution {
            u: self.u.iter().map(|&x| x + b).collect(),
            v: self.v.iter().map(|&x| x - b).collect(),
        }
    }
}

/// On-disk transportation problem: `p x q` costs in hundredths, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TpFile {
    pub p: usize,
    pub q: usize,
    pub s: Vec<u64>,
    pub d: Vec<u64>,
    pub cost_scaled: Vec<i64>,
}

impl TpFile {
    pub fn from_instance(inst: &TpInstance) -> Self {
        Self {
            p: inst.rows(),
            q: inst.cols(),
            s: inst.supplies.clone(),
            d: inst.demands.clone(),
            cost_scaled: inst.costs.iter().map(|c| c.scaled()).collect(),
        }
    }

    pub fn to_instance(&self) -> Result<TpInstance> {
        let data = self
            .cost_scaled
            .iter()
            .map(|&c| Money::from_scaled(c))
            .collect();
        TpInstance::new(
            self.s.clone(),
            self.d.clone(),
            Matrix::from_row_major(self.p, self.q, data)?,
        )
    }
}
