//! Dense LU factorisation with partial pivoting.
//!
//! Inventory systems here hold at most a few hundred processes, so a dense
//! factorisation computed once per dataset is cheap and keeps every solve
//! deterministic.

/// `P·A = L·U`, stored packed: strictly-lower part holds `L` (unit diagonal
/// implied), upper part holds `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

/// Failure of a factorisation: the column index whose pivot vanished.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SingularPivot(pub usize);

const PIVOT_FLOOR: f64 = 1e-14;

impl LuFactors {
    /// Factorises the row-major `n × n` matrix `a`.
    pub(crate) fn factorize(n: usize, a: &[f64]) -> Result<Self, SingularPivot> {
        assert_eq!(a.len(), n * n, "matrix storage does not match dimension");
        let mut lu = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);

        for col in 0..n {
            let (pivot_row, pivot_abs) = (col..n)
                .map(|r| (r, lu[r * n + col].abs()))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot_abs <= PIVOT_FLOOR * scale {
                return Err(SingularPivot(col));
            }
            if pivot_row != col {
                for c in 0..n {
                    lu.swap(pivot_row * n + c, col * n + c);
                }
                perm.swap(pivot_row, col);
            }
            let pivot = lu[col * n + col];
            for r in (col + 1)..n {
                let factor = lu[r * n + col] / pivot;
                lu[r * n + col] = factor;
                if factor == 0.0 {
                    continue;
                }
                for c in (col + 1)..n {
                    lu[r * n + c] -= factor * lu[col * n + c];
                }
            }
        }
        Ok(LuFactors { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A·x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc / self.lu[i * n + i];
        }
        x
    }

    /// 1-norm condition number `‖A‖₁·‖A⁻¹‖₁`, with `‖A⁻¹‖₁` computed
    /// column by column.
    pub(crate) fn condition_1norm(&self, a: &[f64]) -> f64 {
        let n = self.n;
        let norm_a = one_norm(n, a);
        let mut norm_inv = 0.0_f64;
        let mut unit = vec![0.0; n];
        for j in 0..n {
            unit[j] = 1.0;
            let col = self.solve(&unit);
            unit[j] = 0.0;
            norm_inv = norm_inv.max(col.iter().map(|v| v.abs()).sum());
        }
        norm_a * norm_inv
    }
}

pub(crate) fn one_norm(n: usize, a: &[f64]) -> f64 {
    (0..n)
        .map(|c| (0..n).map(|r| a[r * n + c].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub(crate) fn mat_vec(rows: usize, cols: usize, m: &[f64], x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(m.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    (0..rows)
        .map(|r| m[r * cols..(r + 1) * cols].iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}
