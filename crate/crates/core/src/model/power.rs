//! The wall-absorption operator `P = 𝒫_L(p)`.
//!
//! Column `u` of `P` holds the `u`-th convolution power `p^{*u}` (with
//! `p^{*0} = δ`), truncated to `L - u` entries and placed from row `u` down.
//! Since `p[0] = 1` every column starts with a one on the diagonal, so `P` is
//! unit lower triangular and always invertible.

use crate::error::{invalid, Result};

/// Truncated convolution powers of `p`, i.e. the nonzero part of every
/// column of `𝒫_L(p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerColumns {
    len: usize,
    powers: Vec<Vec<f64>>,
}

impl PowerColumns {
    pub fn new(p: &[f64], len: usize) -> Result<Self> {
        if p.is_empty() {
            return Err(invalid("absorption filter p must be non-empty"));
        }
        if p[0] != 1.0 {
            return Err(invalid(format!("absorption filter needs p[0] == 1, got {}", p[0])));
        }
        if len == 0 {
            return Err(invalid("operator length must be positive"));
        }
        let mut powers: Vec<Vec<f64>> = Vec::with_capacity(len);
        powers.push(crate::signal::unit_impulse(len));
        for u in 1..len {
            let prev = &powers[u - 1];
            let n = len - u;
            let mut next = vec![0.0; n];
            for (t, out) in next.iter_mut().enumerate() {
                let taps = p.len().min(t + 1);
                let mut acc = 0.0;
                for k in 0..taps {
                    acc += p[k] * prev[t - k];
                }
                *out = acc;
            }
            powers.push(next);
        }
        Ok(Self { len, powers })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Nonzero part of column `u`, starting at row `u`.
    pub fn column(&self, u: usize) -> &[f64] {
        &self.powers[u]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.powers
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.len, "P apply length mismatch");
        let mut y = vec![0.0; self.len];
        for (u, &xu) in x.iter().enumerate() {
            if xu == 0.0 {
                continue;
            }
            for (dst, c) in y[u..].iter_mut().zip(&self.powers[u]) {
                *dst += xu * c;
            }
        }
        y
    }

    /// `Pᵀ x`: entry `u` is the inner product of column `u` with `x`.
    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.len, "Pᵀ apply length mismatch");
        (0..self.len)
            .map(|u| crate::signal::dot(&self.powers[u], &x[u..]))
            .collect()
    }

    /// Forward substitution for `P x = y`.
    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.len, "P solve length mismatch");
        let mut residual = y.to_vec();
        let mut x = vec![0.0; self.len];
        for u in 0..self.len {
            let xu = residual[u];
            x[u] = xu;
            if xu == 0.0 {
                continue;
            }
            for (dst, c) in residual[u..].iter_mut().zip(&self.powers[u]) {
                *dst -= xu * c;
            }
        }
        x
    }

    /// Dense `L × L` matrix, row-major. Only meant for diagnostics and tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.len]; self.len];
        for (u, col) in self.powers.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                m[u + i][u] = v;
            }
        }
        m
    }

    /// Reverse-mode pass through the power recursion
    /// `p^{*u} = p ∗ p^{*(u-1)}`.
    ///
    /// `adjoints[u]` is the derivative of a scalar objective with respect to
    /// the stored entries of column `u` (same layout as [`Self::column`]).
    /// Returns the derivative with respect to `p[1..]`; `p[0]` is pinned.
    pub fn backprop(&self, p: &[f64], mut adjoints: Vec<Vec<f64>>) -> Vec<f64> {
        debug_assert_eq!(adjoints.len(), self.len);
        let mut grad = vec![0.0; p.len().saturating_sub(1)];
        for u in (1..self.len).rev() {
            let (lower, upper) = adjoints.split_at_mut(u);
            let bar = &upper[0];
            let prev = &self.powers[u - 1];
            let prev_bar = &mut lower[u - 1];
            for (k, gk) in grad.iter_mut().enumerate() {
                let k = k + 1;
                if k >= bar.len() {
                    break;
                }
                *gk += crate::signal::dot(&bar[k..], &prev[..bar.len() - k]);
            }
            for (k, &pk) in p.iter().enumerate() {
                if k >= bar.len() {
                    break;
                }
                if pk == 0.0 {
                    continue;
                }
                for (dst, &b) in prev_bar[..bar.len() - k].iter_mut().zip(&bar[k..]) {
                    *dst += pk * b;
                }
            }
        }
        grad
    }
}

/// Columns of `𝒫_L(p)`.
pub fn p_matrix_columns(p: &[f64], len: usize) -> Result<PowerColumns> {
    PowerColumns::new(p, len)
}

pub fn p_apply(p: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    Ok(PowerColumns::new(p, x.len())?.apply(x))
}

pub fn p_solve(p: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    Ok(PowerColumns::new(p, y.len())?.solve(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn four_by_four_display() {
        let p1 = 0.37;
        let dense = p_matrix_columns(&[1.0, p1], 4).unwrap().to_dense();
        let want = [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, p1, 1.0, 0.0],
            [0.0, 0.0, 2.0 * p1, 1.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!((dense[i][j] - want[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn trivial_filter_is_identity() {
        let cols = p_matrix_columns(&[1.0], 6).unwrap();
        let dense = cols.to_dense();
        for (i, row) in dense.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(v, if i == j { 1.0 } else { 0.0 });
            }
        }
        let x = [0.1, 2.0, -3.0, 4.0, 0.0, 1.5];
        assert_eq!(p_apply(&[1.0], &x).unwrap(), x.to_vec());
        assert_eq!(p_solve(&[1.0], &x).unwrap(), x.to_vec());
    }

    #[test]
    fn binomial_column() {
        // (1 + 0.5 z⁻¹)³ = 1 + 1.5 z⁻¹ + 0.75 z⁻² + 0.125 z⁻³, two rows remain
        let cols = p_matrix_columns(&[1.0, 0.5], 5).unwrap();
        assert_eq!(cols.column(3), &[1.0, 1.5]);
    }

    #[test]
    fn impulse_at_one() {
        let p1 = -0.8;
        let y = p_apply(&[1.0, p1], &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(y, vec![0.0, 1.0, p1, 0.0]);
        let x = p_solve(&[1.0, p1], &[0.0, 1.0, p1, 0.0]).unwrap();
        assert_eq!(x, vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_non_unit_leading_coefficient() {
        assert!(matches!(p_matrix_columns(&[2.0, 1.0], 4), Err(Error::InvalidArgument(_))));
        assert!(matches!(p_matrix_columns(&[], 4), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn backprop_matches_finite_differences() {
        // objective: Σ_u Σ_t w_u[t] · column_u[t]
        let p = vec![1.0, 0.3, -0.2];
        let len = 7;
        let weights: Vec<Vec<f64>> = (0..len)
            .map(|u| (0..len - u).map(|t| ((u * 7 + t * 3) % 5) as f64 - 2.0).collect())
            .collect();
        let objective = |p: &[f64]| -> f64 {
            let cols = PowerColumns::new(p, len).unwrap();
            (0..len).map(|u| crate::signal::dot(cols.column(u), &weights[u])).sum()
        };
        let cols = PowerColumns::new(&p, len).unwrap();
        let grad = cols.backprop(&p, weights.clone());
        for k in 1..p.len() {
            let h = 1e-6;
            let mut hi = p.clone();
            hi[k] += h;
            let mut lo = p.clone();
            lo[k] -= h;
            let fd = (objective(&hi) - objective(&lo)) / (2.0 * h);
            assert!((fd - grad[k - 1]).abs() < 1e-6, "k={k} fd={fd} got={}", grad[k - 1]);
        }
    }
}
