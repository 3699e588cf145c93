//! Bivariate polynomial fitting on point grids.
//!
//! Two routes: an exact solver over the rationals for certification work
//! (the overdetermined system must be *exactly* consistent — any leftover
//! residual is an error, not noise), and a floating-point least-squares
//! route for numeric sweeps.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InterpError {
    #[error("need at least {needed} samples for degree {degree}, got {got}")]
    TooFewSamples {
        degree: u32,
        needed: usize,
        got: usize,
    },
    #[error("sample matrix is rank deficient")]
    RankDeficient,
    #[error("exact system is inconsistent at sample {sample}: residual {residual}")]
    Inconsistent { sample: usize, residual: String },
}

/// Monomial exponents (i, j) with i + j ≤ degree, in graded order.
pub fn monomials(degree: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for total in 0..=degree {
        for i in (0..=total).rev() {
            out.push((i, total - i));
        }
    }
    out
}

fn pow_rat(base: &BigRational, exp: u32) -> BigRational {
    let mut acc = BigRational::from_integer(1.into());
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

/// Fit `value = Σ c_{ij} x^i y^j` exactly. The system may be overdetermined;
/// every equation must then be satisfied exactly by the solution.
pub fn fit_exact(
    samples: &[(BigRational, BigRational, BigRational)],
    degree: u32,
) -> Result<BTreeMap<(u32, u32), BigRational>, InterpError> {
    let basis = monomials(degree);
    let cols = basis.len();
    if samples.len() < cols {
        return Err(InterpError::TooFewSamples {
            degree,
            needed: cols,
            got: samples.len(),
        });
    }
    // Augmented rows [monomial values | rhs].
    let mut rows: Vec<Vec<BigRational>> = samples
        .iter()
        .map(|(x, y, v)| {
            let mut row: Vec<BigRational> = basis
                .iter()
                .map(|&(i, j)| pow_rat(x, i) * pow_rat(y, j))
                .collect();
            row.push(v.clone());
            row
        })
        .collect();

    // Fraction-normalized Gaussian elimination with column-by-column pivots.
    let mut pivot_rows = Vec::with_capacity(cols);
    let mut used = vec![false; rows.len()];
    for col in 0..cols {
        let pivot = (0..rows.len())
            .find(|&r| !used[r] && !rows[r][col].is_zero())
            .ok_or(InterpError::RankDeficient)?;
        used[pivot] = true;
        pivot_rows.push(pivot);
        let head = rows[pivot][col].clone();
        for v in rows[pivot][col..].iter_mut() {
            *v = &*v / &head;
        }
        let pivot_row = rows[pivot].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r == pivot || row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            for (slot, pv) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *slot -= &factor * pv;
            }
        }
    }
    // Any non-pivot row must now be entirely zero, rhs included.
    for (idx, row) in rows.iter().enumerate() {
        if used[idx] {
            continue;
        }
        if let Some(nz) = row.iter().find(|v| !v.is_zero()) {
            return Err(InterpError::Inconsistent {
                sample: idx,
                residual: nz.to_string(),
            });
        }
    }
    let mut coeffs = BTreeMap::new();
    for (col, &(i, j)) in basis.iter().enumerate() {
        coeffs.insert((i, j), rows[pivot_rows[col]][cols].clone());
    }
    // Belt and braces: the solution must reproduce every sample exactly.
    for (idx, (x, y, v)) in samples.iter().enumerate() {
        let mut acc = BigRational::zero();
        for (&(i, j), c) in &coeffs {
            acc += c * pow_rat(x, i) * pow_rat(y, j);
        }
        if &acc != v {
            return Err(InterpError::Inconsistent {
                sample: idx,
                residual: (acc - v).to_string(),
            });
        }
    }
    Ok(coeffs)
}

/// Least-squares fit of `value ≈ Σ c_{ij} x^i y^j` via the normal equations.
pub fn fit_least_squares(
    samples: &[(f64, f64, f64)],
    degree: u32,
) -> Result<BTreeMap<(u32, u32), f64>, InterpError> {
    let basis = monomials(degree);
    let n = basis.len();
    if samples.len() < n {
        return Err(InterpError::TooFewSamples {
            degree,
            needed: n,
            got: samples.len(),
        });
    }
    let mut ata = vec![vec![0.0f64; n]; n];
    let mut atb = vec![0.0f64; n];
    let mut row = vec![0.0f64; n];
    for &(x, y, v) in samples {
        for (k, &(i, j)) in basis.iter().enumerate() {
            row[k] = x.powi(i as i32) * y.powi(j as i32);
        }
        for r in 0..n {
            for c in 0..n {
                ata[r][c] += row[r] * row[c];
            }
            atb[r] += row[r] * v;
        }
    }
    let solution = solve_dense(&mut ata, &mut atb)?;
    Ok(basis.iter().copied().zip(solution).collect())
}

/// Gaussian elimination with partial pivoting on a dense square system.
#[allow(clippy::needless_range_loop)]
fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Result<Vec<f64>, InterpError> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| a[r][col].abs().partial_cmp(&a[s][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col] == 0.0 {
            return Err(InterpError::RankDeficient);
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0f64; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for c in (col + 1)..n {
            acc -= a[col][c] * x[c];
        }
        x[col] = acc / a[col][col];
    }
    Ok(x)
}
