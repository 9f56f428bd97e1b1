//! Ground costs and exact optimal transport between equal-size uniform
//! empirical measures.
//!
//! With both measures uniform on `n` points, the optimal coupling is a
//! permutation, so the Wasserstein value is a minimum-cost perfect matching.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::par;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CostKind {
    /// `1` when the points differ in any coordinate.
    ZeroOne,
    /// `2 / (1 + exp(-gamma * |x - x'|_2)) - 1`, a smooth stand-in for `ZeroOne`.
    SmoothedZeroOne { gamma: f64 },
    /// `|x - x'|` in the `norm_order` norm.
    Lp { norm_order: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostSpec {
    pub kind: CostKind,
    pub exponent: f64,
}

impl CostSpec {
    pub fn new(kind: CostKind, exponent: f64) -> Result<Self> {
        let spec = CostSpec { kind, exponent };
        spec.validate()?;
        Ok(spec)
    }

    pub fn smoothed(gamma: f64) -> Self {
        CostSpec {
            kind: CostKind::SmoothedZeroOne { gamma },
            exponent: 1.0,
        }
    }

    pub fn lp(norm_order: f64, exponent: f64) -> Self {
        CostSpec {
            kind: CostKind::Lp { norm_order },
            exponent,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.exponent > 0.0) || !self.exponent.is_finite() {
            return Err(Error::InvalidCost(format!("exponent {}", self.exponent)));
        }
        match self.kind {
            CostKind::SmoothedZeroOne { gamma } if !(gamma > 0.0) || !gamma.is_finite() => {
                Err(Error::InvalidCost(format!("gamma {gamma}")))
            }
            CostKind::Lp { norm_order } if !(norm_order >= 1.0) || !norm_order.is_finite() => {
                Err(Error::InvalidCost(format!("norm order {norm_order}")))
            }
            _ => Ok(()),
        }
    }
}

pub fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// `c_gamma` as a function of the Euclidean distance. `tanh(gamma*d/2)` is the
/// same function without the cancellation near zero.
#[inline]
pub fn smoothed_zero_one(gamma: f64, distance: f64) -> f64 {
    (0.5 * gamma * distance).tanh()
}

/// Derivative of [`smoothed_zero_one`] with respect to the distance.
#[inline]
pub fn smoothed_zero_one_slope(gamma: f64, distance: f64) -> f64 {
    let t = (0.5 * gamma * distance).tanh();
    0.5 * gamma * (1.0 - t * t)
}

pub fn cost(spec: &CostSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::dim("cost", x.len(), y.len()));
    }
    Ok(cost_unchecked(&spec.kind, x, y))
}

fn cost_unchecked(kind: &CostKind, x: &[f64], y: &[f64]) -> f64 {
    match *kind {
        CostKind::ZeroOne => {
            if x.iter().zip(y).any(|(a, b)| a != b) {
                1.0
            } else {
                0.0
            }
        }
        CostKind::SmoothedZeroOne { gamma } => smoothed_zero_one(gamma, euclidean(x, y)),
        CostKind::Lp { norm_order } => {
            if norm_order == 1.0 {
                x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum()
            } else if norm_order == 2.0 {
                euclidean(x, y)
            } else {
                x.iter()
                    .zip(y)
                    .map(|(a, b)| (a - b).abs().powf(norm_order))
                    .sum::<f64>()
                    .powf(1.0 / norm_order)
            }
        }
    }
}

/// Sum after sorting ascending, so equal multisets give bit-identical totals
/// regardless of the order entries were matched in.
pub fn sorted_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    /// Row `i` is matched to column `permutation[i]`.
    pub permutation: Vec<usize>,
    /// Sum of matched cost-matrix entries.
    pub matrix_total: f64,
}

impl Assignment {
    pub fn total_from(matrix: &Matrix, permutation: &[usize]) -> f64 {
        let mut vals: Vec<f64> = permutation
            .iter()
            .enumerate()
            .map(|(i, &j)| matrix[(i, j)])
            .collect();
        sorted_sum(&mut vals)
    }
}

/// Minimum-cost perfect matching by shortest augmenting paths with row/column
/// potentials, O(n^3). Among equal reduced costs an unmatched column is
/// preferred, which keeps near-constant matrices close to O(n^2).
pub fn solve_assignment(matrix: &Matrix) -> Result<Assignment> {
    let n = matrix.rows();
    if matrix.cols() != n {
        return Err(Error::dim("assignment (square matrix)", n, matrix.cols()));
    }
    if !matrix.is_finite() {
        return Err(Error::NonFinite("cost matrix".into()));
    }
    if n == 0 {
        return Ok(Assignment {
            permutation: Vec::new(),
            matrix_total: 0.0,
        });
    }
    // 1-based: index 0 is the virtual column holding the row being inserted.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![f64::INFINITY; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|u| *u = false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let row = matrix.row(i0 - 1);
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = row[j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta || (minv[j] == delta && owner[j] == 0 && owner[j1] != 0) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut permutation = vec![0usize; n];
    for j in 1..=n {
        permutation[owner[j] - 1] = j - 1;
    }
    let matrix_total = Assignment::total_from(matrix, &permutation);
    Ok(Assignment {
        permutation,
        matrix_total,
    })
}

/// Pairwise `cost(a_i, b_j)^p`, rows built in parallel.
pub fn cost_matrix(a: &Matrix, b: &Matrix, spec: &CostSpec) -> Result<Matrix> {
    spec.validate()?;
    if a.cols() != b.cols() {
        return Err(Error::dim("cost matrix feature width", a.cols(), b.cols()));
    }
    let (n, m) = (a.rows(), b.rows());
    let mut out = Matrix::zeros(n, m);
    let p = spec.exponent;
    par::fill_chunks(out.data_mut(), m, |i, row| {
        let x = a.row(i);
        for (j, r) in row.iter_mut().enumerate() {
            let c = cost_unchecked(&spec.kind, x, b.row(j));
            *r = if p == 1.0 { c } else { c.powf(p) };
        }
    });
    Ok(out)
}

/// Optimal matching between two equal-size batches plus the resulting value.
pub fn wasserstein_assignment(a: &Matrix, b: &Matrix, spec: &CostSpec) -> Result<(f64, Assignment)> {
    if a.rows() != b.rows() {
        return Err(Error::dim("wasserstein batch size", a.rows(), b.rows()));
    }
    if a.rows() == 0 {
        return Err(Error::InvalidCost("empty batches".into()));
    }
    let m = cost_matrix(a, b, spec)?;
    let assignment = solve_assignment(&m)?;
    let mean = assignment.matrix_total / a.rows() as f64;
    let value = if spec.exponent == 1.0 {
        mean
    } else {
        mean.powf(1.0 / spec.exponent)
    };
    Ok((value, assignment))
}

/// `WS_{c,p}` between the uniform measures on two equal-size batches.
pub fn empirical_wasserstein(a: &Matrix, b: &Matrix, spec: &CostSpec) -> Result<f64> {
    Ok(wasserstein_assignment(a, b, spec)?.0)
}

/// Estimate of the 0/1-cost Wasserstein distance using `c_gamma`, p = 1.
/// Bounded above by the exact 0/1 value and approaching it as gamma grows.
pub fn ws_zero_one_estimate(a: &Matrix, b: &Matrix, gamma: f64) -> Result<f64> {
    empirical_wasserstein(a, b, &CostSpec::new(CostKind::SmoothedZeroOne { gamma }, 1.0)?)
}
