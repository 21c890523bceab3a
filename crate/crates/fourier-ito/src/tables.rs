//! Published reference values: coefficient tables for k = 3, 4, 5 and the
//! minimal-order table.

use crate::coefficients::{CoefficientEngine, WeightSpec};
use crate::legendre::{rat, Rational};
use crate::Error;

/// `C̄_{3,row,col}`: `j3 = 3`, `j2 = row`, `j1 = col`.
pub const TABLE_K3: [[(i64, i64); 7]; 7] = [
    [(0, 1), (2, 105), (0, 1), (-4, 315), (0, 1), (2, 693), (0, 1)],
    [(4, 105), (0, 1), (-2, 315), (0, 1), (-8, 3465), (0, 1), (10, 9009)],
    [(2, 35), (-2, 105), (0, 1), (4, 3465), (0, 1), (-74, 45045), (0, 1)],
    [(2, 315), (0, 1), (-2, 3465), (0, 1), (16, 45045), (0, 1), (-10, 9009)],
    [(-2, 63), (46, 3465), (0, 1), (-32, 45045), (0, 1), (2, 9009), (0, 1)],
    [(-10, 693), (0, 1), (38, 9009), (0, 1), (-4, 9009), (0, 1), (122, 765765)],
    [(0, 1), (-10, 3003), (0, 1), (20, 9009), (0, 1), (-226, 765765), (0, 1)],
];

/// `C̄_{2,1,row,col}`: `j4 = 2`, `j3 = 1`, `j2 = row`, `j1 = col`.
pub const TABLE_K4: [[(i64, i64); 3]; 3] = [
    [(2, 21), (-2, 45), (2, 315)],
    [(2, 315), (2, 315), (-2, 225)],
    [(-2, 105), (2, 225), (2, 1155)],
];

/// `C̄_{1,0,1,row,col}`: `j5 = 1`, `j4 = 0`, `j3 = 1`, `j2 = row`, `j1 = col`.
pub const TABLE_K5: [[(i64, i64); 2]; 2] = [[(4, 315), (0, 1)], [(4, 315), (-8, 945)]];

/// Columns of the minimal-order table: `(T-t, q, q1)`.
pub const MIN_Q_COLUMNS: [(f64, usize, usize); 4] =
    [(0.08222, 19, 1), (0.05020, 51, 2), (0.02310, 235, 5), (0.01956, 328, 6)];

/// Published error constants `(k, q, coefficient)` at unit weights.
pub const ERROR_CONSTANTS: [(usize, usize, f64); 3] =
    [(3, 6, 0.01956000), (4, 2, 0.02360840), (5, 1, 0.00759105)];

/// One table cell: indices `(j1..jk)` and its published value.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub indices: Vec<usize>,
    pub expected: Rational,
}

pub fn cells() -> Vec<Cell> {
    let mut out = Vec::new();
    for (row, vals) in TABLE_K3.iter().enumerate() {
        for (col, &(n, d)) in vals.iter().enumerate() {
            out.push(Cell { indices: vec![col, row, 3], expected: rat(n, d) });
        }
    }
    for (row, vals) in TABLE_K4.iter().enumerate() {
        for (col, &(n, d)) in vals.iter().enumerate() {
            out.push(Cell { indices: vec![col, row, 1, 2], expected: rat(n, d) });
        }
    }
    for (row, vals) in TABLE_K5.iter().enumerate() {
        for (col, &(n, d)) in vals.iter().enumerate() {
            out.push(Cell { indices: vec![col, row, 1, 0, 1], expected: rat(n, d) });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mismatch {
    pub indices: Vec<usize>,
    pub expected: Rational,
    pub computed: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableReport {
    pub checked: usize,
    pub mismatches: Vec<Mismatch>,
}

impl TableReport {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Recompute every published cell and compare exactly.
pub fn verify() -> Result<TableReport, Error> {
    let engine = CoefficientEngine::new(6);
    let mut mismatches = Vec::new();
    let all = cells();
    for cell in &all {
        let computed = engine.cbar(&cell.indices, &WeightSpec::unit(cell.indices.len()))?;
        if computed != cell.expected {
            mismatches.push(Mismatch { indices: cell.indices.clone(), expected: cell.expected.clone(), computed });
        }
    }
    Ok(TableReport { checked: all.len(), mismatches })
}
