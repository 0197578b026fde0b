//! Geometric-mean row/column scaling followed by row max-norm equilibration.

use super::problem::LinearProgram;

const GEOMETRIC_PASSES: usize = 8;

/// Column-major view of an LP after scaling: `A' = R A C`, `x = C x'`,
/// `b' = R b`, `c' = σ C c`.
#[derive(Debug, Clone)]
pub(crate) struct ScaledLp {
    pub num_rows: usize,
    pub num_le: usize,
    /// Column-wise `(row, value)` lists of the scaled matrix.
    pub cols: Vec<Vec<(usize, f64)>>,
    pub rhs: Vec<f64>,
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub row_scale: Vec<f64>,
    pub col_scale: Vec<f64>,
    pub obj_scale: f64,
}

impl ScaledLp {
    pub fn new(lp: &LinearProgram, enabled: bool) -> Self {
        let n = lp.num_vars();
        let num_le = lp.le_rows.len();
        let m = lp.num_rows();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, row) in lp.le_rows.iter().chain(&lp.eq_rows).enumerate() {
            for (j, v) in row.iter() {
                cols[j].push((i, v));
            }
        }
        let mut row_scale = vec![1.0; m];
        let mut col_scale = vec![1.0; n];

        if enabled {
            for _ in 0..GEOMETRIC_PASSES {
                let mut rmin = vec![f64::INFINITY; m];
                let mut rmax = vec![0.0f64; m];
                for (j, col) in cols.iter().enumerate() {
                    for &(i, v) in col {
                        let a = (v * row_scale[i] * col_scale[j]).abs();
                        rmin[i] = rmin[i].min(a);
                        rmax[i] = rmax[i].max(a);
                    }
                }
                for i in 0..m {
                    if rmax[i] > 0.0 {
                        row_scale[i] /= (rmin[i] * rmax[i]).sqrt();
                    }
                }
                for (j, col) in cols.iter().enumerate() {
                    let (mut cmin, mut cmax) = (f64::INFINITY, 0.0f64);
                    for &(i, v) in col {
                        let a = (v * row_scale[i] * col_scale[j]).abs();
                        cmin = cmin.min(a);
                        cmax = cmax.max(a);
                    }
                    if cmax > 0.0 {
                        col_scale[j] /= (cmin * cmax).sqrt();
                    }
                }
            }
            let mut rmax = vec![0.0f64; m];
            for (j, col) in cols.iter().enumerate() {
                for &(i, v) in col {
                    rmax[i] = rmax[i].max((v * row_scale[i] * col_scale[j]).abs());
                }
            }
            for i in 0..m {
                if rmax[i] > 0.0 {
                    row_scale[i] /= rmax[i];
                }
            }
            // Powers of two keep scaling exact in binary floating point.
            for s in row_scale.iter_mut().chain(col_scale.iter_mut()) {
                *s = (2.0f64).powi(s.log2().round() as i32);
            }
        }

        for (j, col) in cols.iter_mut().enumerate() {
            for (i, v) in col.iter_mut() {
                *v *= row_scale[*i] * col_scale[j];
            }
        }
        let rhs = lp
            .le_rhs
            .iter()
            .chain(&lp.eq_rhs)
            .zip(&row_scale)
            .map(|(b, r)| b * r)
            .collect();
        let mut cost: Vec<f64> = lp.objective.iter().zip(&col_scale).map(|(c, s)| c * s).collect();
        let cmax = cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let obj_scale = if enabled && cmax > 0.0 {
            (2.0f64).powi((1.0 / cmax).log2().round() as i32)
        } else {
            1.0
        };
        cost.iter_mut().for_each(|c| *c *= obj_scale);
        let lower = lp.lower.iter().zip(&col_scale).map(|(l, s)| l / s).collect();
        let upper = lp.upper.iter().zip(&col_scale).map(|(u, s)| u / s).collect();

        Self {
            num_rows: m,
            num_le,
            cols,
            rhs,
            cost,
            lower,
            upper,
            row_scale,
            col_scale,
            obj_scale,
        }
    }

    pub fn unscale_x(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().zip(&self.col_scale).map(|(x, s)| x * s).collect()
    }

    pub fn unscale_duals(&self, ys: &[f64]) -> Vec<f64> {
        ys.iter()
            .zip(&self.row_scale)
            .map(|(y, r)| y * r / self.obj_scale)
            .collect()
    }
}
