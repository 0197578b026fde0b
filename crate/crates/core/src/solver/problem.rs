//! Sparse LP/MILP container shared by the formulation and the solvers.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// A sparse row with strictly increasing column indices and no zeros.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseRow {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseRow {
    /// Builds a row from `(column, coefficient)` terms, summing duplicates and
    /// dropping exact zeros.
    pub fn from_terms(mut terms: Vec<(usize, f64)>) -> Self {
        terms.sort_by_key(|&(j, _)| j);
        let mut row = SparseRow::default();
        for (j, v) in terms {
            if row.indices.last() == Some(&j) {
                *row.values.last_mut().unwrap() += v;
            } else {
                row.indices.push(j);
                row.values.push(v);
            }
        }
        let (indices, values) = row
            .indices
            .into_iter()
            .zip(row.values)
            .filter(|&(_, v)| v != 0.0)
            .unzip();
        SparseRow { indices, values }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.iter().map(|(j, v)| v * x[j]).sum()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Marks a ≤-row as one of a family of cuts that the solver may leave out
/// of the working problem until the row is violated. Rows with `seed` set
/// start in the working problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LazyTag {
    pub group: usize,
    pub seed: bool,
}

/// `min c·x  s.t.  A_le x ≤ b_le,  A_eq x = b_eq,  l ≤ x ≤ u`, with optional
/// binary restrictions on a subset of the variables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub le_rows: Vec<SparseRow>,
    pub le_rhs: Vec<f64>,
    pub eq_rows: Vec<SparseRow>,
    pub eq_rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Variables restricted to {0, 1}.
    pub integral: Vec<usize>,
    pub var_names: Vec<String>,
    pub le_names: Vec<String>,
    pub eq_names: Vec<String>,
    /// Per ≤-row lazy tags; missing trailing entries mean "not lazy".
    pub le_lazy: Vec<Option<LazyTag>>,
}

impl LinearProgram {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.le_rows.len() + self.eq_rows.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.var_names.push(name.into());
        self.objective.len() - 1
    }

    pub fn add_binary(&mut self, name: impl Into<String>, cost: f64) -> usize {
        let j = self.add_var(name, 0.0, 1.0, cost);
        self.integral.push(j);
        j
    }

    pub fn add_le(&mut self, name: impl Into<String>, terms: Vec<(usize, f64)>, rhs: f64) {
        self.le_rows.push(SparseRow::from_terms(terms));
        self.le_rhs.push(rhs);
        self.le_names.push(name.into());
    }

    /// Adds a ≤-row that belongs to the lazy family `tag.group`.
    pub fn add_lazy_le(&mut self, name: impl Into<String>, terms: Vec<(usize, f64)>, rhs: f64, tag: LazyTag) {
        self.le_lazy.resize(self.le_rows.len(), None);
        self.add_le(name, terms, rhs);
        self.le_lazy.push(Some(tag));
    }

    pub fn lazy_tag(&self, i: usize) -> Option<LazyTag> {
        self.le_lazy.get(i).copied().flatten()
    }

    pub fn has_lazy_rows(&self) -> bool {
        self.le_lazy.iter().any(Option::is_some)
    }

    pub fn add_ge(&mut self, name: impl Into<String>, terms: Vec<(usize, f64)>, rhs: f64) {
        let negated = terms.into_iter().map(|(j, v)| (j, -v)).collect();
        self.add_le(name, negated, -rhs);
    }

    pub fn add_eq(&mut self, name: impl Into<String>, terms: Vec<(usize, f64)>, rhs: f64) {
        self.eq_rows.push(SparseRow::from_terms(terms));
        self.eq_rhs.push(rhs);
        self.eq_names.push(name.into());
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest absolute violation of rows and bounds at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (row, &b) in self.le_rows.iter().zip(&self.le_rhs) {
            worst = worst.max(row.dot(x) - b);
        }
        for (row, &b) in self.eq_rows.iter().zip(&self.eq_rhs) {
            worst = worst.max((row.dot(x) - b).abs());
        }
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        worst
    }

    /// Checks structural invariants: consistent lengths, finite coefficients,
    /// ordered bounds and binaries boxed within [0, 1].
    pub fn check(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::DimensionMismatch("bound vectors".into()));
        }
        if self.le_rows.len() != self.le_rhs.len() || self.eq_rows.len() != self.eq_rhs.len() {
            return Err(Error::DimensionMismatch("row/rhs counts".into()));
        }
        let rows = self.le_rows.iter().chain(&self.eq_rows);
        for row in rows {
            if row.indices.iter().any(|&j| j >= n) {
                return Err(Error::DimensionMismatch("row references unknown column".into()));
            }
            if row.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Solver("non-finite coefficient".into()));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite())
            || self.le_rhs.iter().chain(&self.eq_rhs).any(|b| !b.is_finite())
        {
            return Err(Error::Solver("non-finite objective or rhs".into()));
        }
        for j in 0..n {
            if self.lower[j] > self.upper[j] || self.lower[j].is_nan() || self.upper[j].is_nan() {
                return Err(Error::Solver(format!("variable {j} has lower > upper")));
            }
        }
        for &j in &self.integral {
            if j >= n || self.lower[j] < 0.0 || self.upper[j] > 1.0 {
                return Err(Error::Solver(format!("binary variable {j} not boxed in [0, 1]")));
            }
        }
        Ok(())
    }

    fn name(&self, j: usize) -> String {
        self.var_names
            .get(j)
            .filter(|s| !s.is_empty())
            .cloned()
            .unwrap_or_else(|| format!("x{j}"))
    }

    /// Renders the problem in CPLEX LP text format.
    pub fn to_lp_format(&self) -> String {
        let mut out = String::new();
        let term_list = |out: &mut String, terms: &mut dyn Iterator<Item = (usize, f64)>| {
            let mut first = true;
            for (j, v) in terms {
                if v == 0.0 {
                    continue;
                }
                let sign = if v < 0.0 {
                    "- "
                } else if first {
                    ""
                } else {
                    "+ "
                };
                let _ = write!(out, " {sign}{:e} {}", v.abs(), self.name(j));
                first = false;
            }
            if first {
                out.push_str(" 0");
            }
        };
        out.push_str("\\ generated by backhaul-core\nMinimize\n obj:");
        term_list(&mut out, &mut self.objective.iter().copied().enumerate());
        out.push_str("\nSubject To\n");
        for (k, (row, b)) in self.le_rows.iter().zip(&self.le_rhs).enumerate() {
            let name = self.le_names.get(k).cloned().unwrap_or_else(|| format!("le{k}"));
            let _ = write!(out, " {name}:");
            term_list(&mut out, &mut row.iter());
            let _ = writeln!(out, " <= {b:e}");
        }
        for (k, (row, b)) in self.eq_rows.iter().zip(&self.eq_rhs).enumerate() {
            let name = self.eq_names.get(k).cloned().unwrap_or_else(|| format!("eq{k}"));
            let _ = write!(out, " {name}:");
            term_list(&mut out, &mut row.iter());
            let _ = writeln!(out, " = {b:e}");
        }
        out.push_str("Bounds\n");
        for j in 0..self.num_vars() {
            let (l, u) = (self.lower[j], self.upper[j]);
            let name = self.name(j);
            match (l.is_finite(), u.is_finite()) {
                (true, true) if l == u => {
                    let _ = writeln!(out, " {name} = {l:e}");
                }
                (true, true) => {
                    let _ = writeln!(out, " {l:e} <= {name} <= {u:e}");
                }
                (true, false) => {
                    let _ = writeln!(out, " {name} >= {l:e}");
                }
                (false, true) => {
                    let _ = writeln!(out, " -inf <= {name} <= {u:e}");
                }
                (false, false) => {
                    let _ = writeln!(out, " {name} free");
                }
            }
        }
        if !self.integral.is_empty() {
            out.push_str("Binaries\n");
            for &j in &self.integral {
                let _ = writeln!(out, " {}", self.name(j));
            }
        }
        out.push_str("End\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_row_merges_and_drops_zeros() {
        let row = SparseRow::from_terms(vec![(3, 1.0), (1, 2.0), (3, -1.0), (0, 0.5)]);
        assert_eq!(row.indices, vec![0, 1]);
        assert_eq!(row.values, vec![0.5, 2.0]);
    }

    #[test]
    fn lp_format_lists_sections() {
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x", 0.0, f64::INFINITY, 1.0);
        let y = lp.add_binary("y", 10.0);
        lp.add_le("link", vec![(x, 1.0), (y, -5.0)], 0.0);
        lp.add_ge("demand", vec![(x, 1.0)], 3.0);
        let text = lp.to_lp_format();
        assert!(text.contains("Minimize"));
        assert!(text.contains(" link: 1e0 x - 5e0 y <= 0e0"));
        assert!(text.contains(" demand: - 1e0 x <= -3e0"));
        assert!(text.contains("Binaries\n y"));
        assert!(lp.check().is_ok());
    }

    #[test]
    fn check_rejects_bad_binaries() {
        let mut lp = LinearProgram::default();
        lp.add_var("z", 0.0, 2.0, 0.0);
        lp.integral.push(0);
        assert!(lp.check().is_err());
    }
}
