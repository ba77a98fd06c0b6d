//! Dense stochastic-matrix primitives.
//!
//! Validation, connectivity and aperiodicity tests, stationary
//! distributions, the fundamental matrix, and the rank-one perturbation
//! identity for stationary distributions. Everything is dense: instances
//! are small (a few hundred agents at most), so correctness wins over
//! throughput.

use crate::error::{Error, Result};

/// Row-sum tolerance enforced at construction.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Tolerance for derived products (matrix powers, residuals of solves).
pub const DERIVED_TOL: f64 = 1e-10;

/// Residual tolerance for the stationary fixed point `s M = s`.
pub const STATIONARY_RESIDUAL_TOL: f64 = 1e-10;

// ---------------------------------------------------------------------------
// Dense square matrix + LU
// ---------------------------------------------------------------------------

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    /// Builds a square matrix from rows, rejecting ragged or non-square input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for row in rows {
            if row.len() != n {
                return Err(Error::NotSquare { rows: n, cols: row.len() });
            }
        }
        Ok(Matrix::from_fn(n, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Matrix-vector product `M v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Row-vector product `v M`.
    pub fn left_mul(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let vi = v[i];
            if vi != 0.0 {
                for j in 0..self.n {
                    out[j] += vi * self.get(i, j);
                }
            }
        }
        out
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a != 0.0 {
                    for j in 0..n {
                        out.data[i * n + j] += a * other.get(k, j);
                    }
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.n, |i, j| self.get(j, i))
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    /// Maximum column sum of absolute values.
    pub fn one_norm(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(i, j).abs()).sum())
            .fold(0.0, f64::max)
    }

    /// LU decomposition with partial pivoting.
    pub fn lu(&self) -> Result<Lu> {
        Lu::decompose(self)
    }

    /// Dense inverse via LU; `SingularSystem` if a pivot vanishes.
    pub fn inverse(&self) -> Result<Matrix> {
        let lu = self.lu()?;
        let n = self.n;
        let mut inv = Matrix::zeros(n);
        let mut e = vec![0.0; n];
        for c in 0..n {
            e[c] = 1.0;
            let col = lu.solve(&e);
            e[c] = 0.0;
            for r in 0..n {
                inv.set(r, c, col[r]);
            }
        }
        Ok(inv)
    }

    /// 1-norm condition number, `None` if the matrix is singular.
    pub fn condition_1(&self) -> Option<f64> {
        let inv = self.inverse().ok()?;
        Some(self.one_norm() * inv.one_norm())
    }
}

/// LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    fn decompose(m: &Matrix) -> Result<Lu> {
        let n = m.n;
        let mut lu = m.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut pivot = col;
            let mut best = lu[col * n + col].abs();
            for r in col + 1..n {
                let v = lu[r * n + col].abs();
                if v > best {
                    best = v;
                    pivot = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::SingularSystem);
            }
            if pivot != col {
                for j in 0..n {
                    lu.swap(col * n + j, pivot * n + j);
                }
                perm.swap(col, pivot);
            }
            let d = lu[col * n + col];
            for r in col + 1..n {
                let f = lu[r * n + col] / d;
                lu[r * n + col] = f;
                if f != 0.0 {
                    for j in col + 1..n {
                        lu[r * n + j] -= f * lu[col * n + j];
                    }
                }
            }
        }
        Ok(Lu { n, lu, perm })
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc / self.lu[i * n + i];
        }
        x
    }
}

// ---------------------------------------------------------------------------
// Row-stochastic matrix
// ---------------------------------------------------------------------------

/// Nonnegative square matrix with unit row sums (within [`ROW_SUM_TOL`]).
#[derive(Debug, Clone, PartialEq)]
pub struct RowStochasticMatrix {
    inner: Matrix,
}

impl RowStochasticMatrix {
    /// Validates a candidate matrix; rejects on any negative entry or any
    /// row whose sum deviates from 1 by more than `tol`.
    pub fn validate(m: Matrix, tol: f64) -> Result<Self> {
        Self::check(&m, tol)?;
        Ok(RowStochasticMatrix { inner: m })
    }

    /// Validates and renormalizes each row to sum exactly to 1. Negative or
    /// non-finite entries are still rejected; only the row sums are repaired.
    pub fn validate_renormalizing(mut m: Matrix, tol: f64) -> Result<Self> {
        let n = m.n();
        for i in 0..n {
            for j in 0..n {
                let v = m.get(i, j);
                if !v.is_finite() {
                    return Err(Error::NonFiniteEntry { row: i, col: j });
                }
                if v < 0.0 {
                    return Err(Error::NegativeEntry { row: i, col: j, value: v });
                }
            }
            let sum: f64 = m.row(i).iter().sum();
            if sum <= 0.0 {
                return Err(Error::RowSumDeviation { row: i, deviation: sum - 1.0 });
            }
            for j in 0..n {
                let v = m.get(i, j) / sum;
                m.set(i, j, v);
            }
        }
        Self::validate(m, tol)
    }

    /// Convenience constructor from row slices with the default tolerance.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::validate(Matrix::from_rows(rows)?, ROW_SUM_TOL)
    }

    fn check(m: &Matrix, tol: f64) -> Result<()> {
        let n = m.n();
        if n == 0 {
            return Err(Error::NotSquare { rows: 0, cols: 0 });
        }
        for i in 0..n {
            for j in 0..n {
                let v = m.get(i, j);
                if !v.is_finite() {
                    return Err(Error::NonFiniteEntry { row: i, col: j });
                }
                if v < 0.0 {
                    return Err(Error::NegativeEntry { row: i, col: j, value: v });
                }
            }
            let sum: f64 = m.row(i).iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::RowSumDeviation { row: i, deviation: sum - 1.0 });
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.inner.n()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner.get(i, j)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.inner.row(i)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.inner
    }

    /// `M v` (one synchronous update of a belief vector).
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.inner.mul_vec(v)
    }

    /// `v M` for a row vector `v`.
    pub fn left_apply(&self, v: &[f64]) -> Vec<f64> {
        self.inner.left_mul(v)
    }

    /// True iff the digraph of strictly positive entries has a single
    /// strongly connected component (forward and backward reachability from
    /// node 0 must both cover every node).
    pub fn is_strongly_connected(&self) -> bool {
        let n = self.n();
        self.reach(0, false).iter().all(|&r| r) && self.reach(0, true).iter().all(|&r| r) && n > 0
    }

    fn reach(&self, start: usize, reverse: bool) -> Vec<bool> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                let w = if reverse { self.get(v, u) } else { self.get(u, v) };
                if w > 0.0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// Aperiodicity (primitivity) test for a strongly connected matrix:
    /// `M^k` must be entrywise positive at the Wielandt exponent
    /// `k = (n-1)^2 + 1`, checked with boolean matrix powers.
    pub fn is_aperiodic(&self) -> Result<bool> {
        if !self.is_strongly_connected() {
            return Err(Error::NotStronglyConnected);
        }
        let n = self.n();
        if n == 1 {
            return Ok(self.get(0, 0) > 0.0);
        }
        let k = (n - 1) * (n - 1) + 1;
        Ok(self.bool_power_all_positive(k))
    }

    /// Strong connectivity and aperiodicity together.
    pub fn is_primitive(&self) -> bool {
        matches!(self.is_aperiodic(), Ok(true))
    }

    fn bool_power_all_positive(&self, k: usize) -> bool {
        let n = self.n();
        let words = n.div_ceil(64);
        let rows: Vec<Vec<u64>> = (0..n)
            .map(|i| {
                let mut bits = vec![0u64; words];
                for j in 0..n {
                    if self.get(i, j) > 0.0 {
                        bits[j / 64] |= 1u64 << (j % 64);
                    }
                }
                bits
            })
            .collect();
        let full = |m: &[Vec<u64>]| {
            m.iter().all(|row| {
                (0..n).all(|j| row[j / 64] & (1u64 << (j % 64)) != 0)
            })
        };
        let mul = |a: &[Vec<u64>], b: &[Vec<u64>]| -> Vec<Vec<u64>> {
            let mut out = vec![vec![0u64; words]; n];
            for i in 0..n {
                for j in 0..n {
                    if a[i][j / 64] & (1u64 << (j % 64)) != 0 {
                        for w in 0..words {
                            out[i][w] |= b[j][w];
                        }
                    }
                }
            }
            out
        };
        // binary exponentiation; early exit once everything is reachable
        let mut result: Option<Vec<Vec<u64>>> = None;
        let mut base = rows;
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = Some(match result {
                    None => base.clone(),
                    Some(r) => mul(&r, &base),
                });
                if full(result.as_ref().unwrap()) {
                    return true;
                }
            }
            e >>= 1;
            if e > 0 {
                base = mul(&base, &base);
            }
        }
        full(result.as_ref().unwrap())
    }

    /// Left fixed point `s M = s`, normalized to sum to 1.
    ///
    /// Solved directly via `(M^T - I) s = 0` with an explicit normalization
    /// row; falls back to power iteration when the direct solve is
    /// ill-conditioned or leaves a large residual.
    pub fn stationary_distribution(&self) -> Result<StationaryDistribution> {
        match self.is_aperiodic() {
            Ok(true) => {}
            Ok(false) | Err(Error::NotStronglyConnected) => return Err(Error::NotPrimitive),
            Err(e) => return Err(e),
        }
        let n = self.n();
        // (M^T - I) with the last equation replaced by sum(s) = 1
        let mut a = Matrix::from_fn(n, |i, j| {
            self.get(j, i) - if i == j { 1.0 } else { 0.0 }
        });
        for j in 0..n {
            a.set(n - 1, j, 1.0);
        }
        let mut b = vec![0.0; n];
        b[n - 1] = 1.0;
        if let Ok(lu) = a.lu() {
            let mut s = lu.solve(&b);
            let sum: f64 = s.iter().sum();
            if sum > 0.0 {
                for v in &mut s {
                    *v /= sum;
                }
            }
            if self.stationary_ok(&s) {
                return Ok(StationaryDistribution { weights: s });
            }
        }
        self.stationary_power_iteration()
    }

    fn stationary_ok(&self, s: &[f64]) -> bool {
        let n = self.n();
        if s.iter().any(|v| !v.is_finite() || *v < -DERIVED_TOL) {
            return false;
        }
        let sum: f64 = s.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return false;
        }
        let sm = self.left_apply(s);
        (0..n).all(|j| (sm[j] - s[j]).abs() < STATIONARY_RESIDUAL_TOL)
    }

    fn stationary_power_iteration(&self) -> Result<StationaryDistribution> {
        let n = self.n();
        let mut s = vec![1.0 / n as f64; n];
        for _ in 0..1_000_000 {
            let next = self.left_apply(&s);
            let delta = next
                .iter()
                .zip(&s)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            s = next;
            if delta < 1e-14 {
                let sum: f64 = s.iter().sum();
                for v in &mut s {
                    *v /= sum;
                }
                if self.stationary_ok(&s) {
                    return Ok(StationaryDistribution { weights: s });
                }
                return Err(Error::SolverDivergence);
            }
        }
        Err(Error::SolverDivergence)
    }

    /// Fundamental matrix `Y = (I - M + 1s)^{-1} - 1s` together with the
    /// rank-one limit `1s`.
    pub fn fundamental_matrix(&self, s: &StationaryDistribution) -> Result<FundamentalMatrix> {
        let n = self.n();
        if s.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: s.len() });
        }
        let a = Matrix::from_fn(n, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            id - self.get(i, j) + s.weights[j]
        });
        let inv = a.inverse()?;
        let y = Matrix::from_fn(n, |i, j| inv.get(i, j) - s.weights[j]);
        let limit = Matrix::from_fn(n, |_, j| s.weights[j]);
        Ok(FundamentalMatrix { y, limit })
    }

    /// Stationary distribution of `M + D` from the rank-structured update
    /// `s_hat = s (I - D Y)^{-1}`, without re-solving the perturbed chain.
    ///
    /// `M + D` must itself be a primitive row-stochastic matrix.
    pub fn schweitzer_perturbation(&self, d: &Matrix) -> Result<StationaryDistribution> {
        let n = self.n();
        if d.n() != n {
            return Err(Error::DimensionMismatch { expected: n, got: d.n() });
        }
        let perturbed = Matrix::from_fn(n, |i, j| self.get(i, j) + d.get(i, j));
        let perturbed = RowStochasticMatrix::validate(perturbed, DERIVED_TOL)
            .map_err(|e| Error::InvalidPerturbation(e.to_string()))?;
        if !perturbed.is_primitive() {
            return Err(Error::InvalidPerturbation("T + D is not primitive".into()));
        }
        let s = self.stationary_distribution()?;
        let f = self.fundamental_matrix(&s)?;
        let dy = d.mul(&f.y);
        // s_hat (I - DY) = s  =>  (I - DY)^T s_hat^T = s^T
        let a = Matrix::from_fn(n, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            id - dy.get(j, i)
        });
        let lu = a.lu().map_err(|_| Error::SingularPerturbation)?;
        let s_hat = lu.solve(&s.weights);
        if s_hat.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularPerturbation);
        }
        Ok(StationaryDistribution { weights: s_hat })
    }

    /// Second-largest eigenvalue modulus estimate via power iteration on the
    /// deflated operator `M - 1s`. Diagnostic only.
    pub fn slem_estimate(&self, s: &StationaryDistribution) -> f64 {
        let n = self.n();
        if n <= 1 {
            return 0.0;
        }
        let deflated = Matrix::from_fn(n, |i, j| self.get(i, j) - s.weights[j]);
        // deterministic pseudo-random start to avoid orthogonal bad luck
        let mut v: Vec<f64> = (0..n)
            .map(|i| ((i * 2654435761 + 1013904223) % 1000) as f64 / 999.0 - 0.5)
            .collect();
        let mut growth = 0.0;
        for it in 0..500 {
            let w = deflated.mul_vec(&v);
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-300 {
                return 0.0;
            }
            if it >= 400 {
                growth += norm.ln();
            }
            v = w.iter().map(|x| x / norm).collect();
        }
        (growth / 100.0).exp().min(1.0)
    }
}

/// Left stationary distribution of a primitive row-stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    weights: Vec<f64>,
}

impl StationaryDistribution {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Inner product with a belief vector (the DeGroot consensus).
    pub fn dot(&self, v: &[f64]) -> f64 {
        self.weights.iter().zip(v).map(|(a, b)| a * b).sum()
    }
}

/// Fundamental matrix of a primitive chain and its rank-one limit.
#[derive(Debug, Clone)]
pub struct FundamentalMatrix {
    /// `Y = sum_{k >= 0} (M^k - M^inf)`, computed as `(I - M + 1s)^{-1} - 1s`.
    pub y: Matrix,
    /// `M^inf`, the rank-one matrix with the stationary distribution in
    /// every row.
    pub limit: Matrix,
}
