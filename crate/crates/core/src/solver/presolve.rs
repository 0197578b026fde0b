//! Bound presolve: substitutes fixed columns and applies forcing rows.
//!
//! Branching fixes binaries whose big-M coefficients can dwarf everything
//! else in a row. Substituting them exactly, and fixing whatever they force
//! to a bound, keeps those coefficients out of the simplex entirely.

use super::problem::{LinearProgram, SparseRow};

pub(super) struct Reduced {
    pub lp: LinearProgram,
    /// Original index of each reduced column.
    pub cols: Vec<usize>,
    /// Value of every original column fixed by presolve.
    pub fixed: Vec<Option<f64>>,
    /// Original index of each kept ≤-row and equality row.
    pub le_rows: Vec<usize>,
    pub eq_rows: Vec<usize>,
    /// Whether forcing rows fixed variables; their multipliers are not
    /// recovered, so duals are unavailable.
    pub forced: bool,
}

pub(super) enum Presolved {
    Reduced(Box<Reduced>),
    Infeasible,
}

fn row_tol(rhs: f64, terms: f64) -> f64 {
    1e-9 * rhs.abs().max(terms).max(1.0)
}

/// Splits a row into the contribution of fixed columns and the minimum
/// activity of the free ones (`-inf` if unbounded).
fn activity(row: &SparseRow, lower: &[f64], upper: &[f64]) -> (f64, f64, f64) {
    let (mut fixed, mut min_free, mut magnitude) = (0.0, 0.0, 0.0);
    for (j, a) in row.iter() {
        if lower[j] == upper[j] {
            fixed += a * lower[j];
            magnitude += (a * lower[j]).abs();
        } else {
            let b = if a > 0.0 { lower[j] } else { upper[j] };
            min_free += a * b;
        }
    }
    (fixed, min_free, magnitude)
}

pub(super) fn presolve(lp: &LinearProgram) -> Presolved {
    let n = lp.num_vars();
    let (mut lower, mut upper) = (lp.lower.clone(), lp.upper.clone());
    let mut forced = false;
    let mut changed = true;
    while changed {
        changed = false;
        for (row, &rhs) in lp.le_rows.iter().zip(&lp.le_rhs) {
            if row.iter().all(|(j, _)| lower[j] == upper[j]) {
                continue;
            }
            let (fixed, min_free, magnitude) = activity(row, &lower, &upper);
            // Only exact forcing: the free part cannot go below what is left.
            if min_free.is_finite() && min_free >= rhs - fixed {
                if min_free > rhs - fixed + row_tol(rhs, magnitude + min_free.abs()) {
                    return Presolved::Infeasible;
                }
                for (j, a) in row.iter() {
                    if lower[j] != upper[j] {
                        let b = if a > 0.0 { lower[j] } else { upper[j] };
                        lower[j] = b;
                        upper[j] = b;
                    }
                }
                forced = true;
                changed = true;
            }
        }
    }

    let fixed: Vec<Option<f64>> = (0..n).map(|j| (lower[j] == upper[j]).then_some(lower[j])).collect();
    if fixed.iter().all(Option::is_none) {
        let mut out = lp.clone();
        out.lower = lower;
        out.upper = upper;
        return Presolved::Reduced(Box::new(Reduced {
            lp: out,
            cols: (0..n).collect(),
            fixed,
            le_rows: (0..lp.le_rows.len()).collect(),
            eq_rows: (0..lp.eq_rows.len()).collect(),
            forced,
        }));
    }

    let cols: Vec<usize> = (0..n).filter(|&j| fixed[j].is_none()).collect();
    let mut new_index = vec![usize::MAX; n];
    for (k, &j) in cols.iter().enumerate() {
        new_index[j] = k;
    }
    let mut out = LinearProgram::default();
    for &j in &cols {
        out.add_var(lp.var_names[j].clone(), lower[j], upper[j], lp.objective[j]);
    }
    out.integral = lp
        .integral
        .iter()
        .filter(|&&j| fixed[j].is_none())
        .map(|&j| new_index[j])
        .collect();

    // Returns the reduced row and its right-hand side, or None if the row is
    // empty after substitution (after checking it is satisfied).
    let reduce = |row: &SparseRow, rhs: f64, is_eq: bool| -> Result<Option<(SparseRow, f64)>, ()> {
        let (mut shift, mut magnitude) = (0.0, 0.0);
        let mut terms = Vec::new();
        for (j, a) in row.iter() {
            match fixed[j] {
                Some(v) => {
                    shift += a * v;
                    magnitude += (a * v).abs();
                }
                None => terms.push((new_index[j], a)),
            }
        }
        let residual = rhs - shift;
        if terms.is_empty() {
            let tol = row_tol(rhs, magnitude);
            let ok = if is_eq { residual.abs() <= tol } else { residual >= -tol };
            return if ok { Ok(None) } else { Err(()) };
        }
        Ok(Some((SparseRow::from_terms(terms), residual)))
    };

    let mut le_rows = Vec::new();
    for (i, (row, &rhs)) in lp.le_rows.iter().zip(&lp.le_rhs).enumerate() {
        match reduce(row, rhs, false) {
            Err(()) => return Presolved::Infeasible,
            Ok(None) => {}
            Ok(Some((r, b))) => {
                out.le_rows.push(r);
                out.le_rhs.push(b);
                out.le_names.push(lp.le_names[i].clone());
                out.le_lazy.push(lp.lazy_tag(i));
                le_rows.push(i);
            }
        }
    }
    let mut eq_rows = Vec::new();
    for (i, (row, &rhs)) in lp.eq_rows.iter().zip(&lp.eq_rhs).enumerate() {
        match reduce(row, rhs, true) {
            Err(()) => return Presolved::Infeasible,
            Ok(None) => {}
            Ok(Some((r, b))) => {
                out.eq_rows.push(r);
                out.eq_rhs.push(b);
                out.eq_names.push(lp.eq_names[i].clone());
                eq_rows.push(i);
            }
        }
    }
    Presolved::Reduced(Box::new(Reduced {
        lp: out,
        cols,
        fixed,
        le_rows,
        eq_rows,
        forced,
    }))
}

impl Reduced {
    /// Maps a reduced solution back to the original columns.
    pub fn expand_x(&self, x: &[f64]) -> Vec<f64> {
        let mut full: Vec<f64> = self.fixed.iter().map(|v| v.unwrap_or(0.0)).collect();
        for (k, &j) in self.cols.iter().enumerate() {
            full[j] = x[k];
        }
        full
    }

    /// Maps reduced duals back; dropped rows get zero. Empty if forcing rows
    /// were applied.
    pub fn expand_duals(&self, duals: &[f64], num_le: usize, num_eq: usize) -> Vec<f64> {
        if self.forced || duals.len() != self.le_rows.len() + self.eq_rows.len() {
            return Vec::new();
        }
        let mut full = vec![0.0; num_le + num_eq];
        for (k, &i) in self.le_rows.iter().enumerate() {
            full[i] = duals[k];
        }
        for (k, &i) in self.eq_rows.iter().enumerate() {
            full[num_le + i] = duals[self.le_rows.len() + k];
        }
        full
    }
}
