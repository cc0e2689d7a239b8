//! Dense symmetric positive-definite solves for the small normal-equation
//! systems used by identification and circle fitting.

/// Lower-triangular Cholesky factor of an `n × n` row-major matrix.
#[derive(Debug, Clone)]
pub(crate) struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

/// Pivot `j` is rejected when the remaining diagonal falls below
/// `rel_tol * a[j][j]`, i.e. column `j` is (numerically) a combination of
/// the columns before it. Returns the index of the rejected pivot.
pub(crate) fn cholesky(a: &[f64], n: usize, rel_tol: f64) -> Result<Cholesky, usize> {
    assert_eq!(a.len(), n * n);
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > rel_tol * a[j * n + j].abs()) || !d.is_finite() {
            return Err(j);
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Ok(Cholesky { n, l })
}

impl Cholesky {
    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l[i * n + k] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                y[i] -= self.l[k * n + i] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        y
    }
}

/// Solves the least-squares problem `min ‖X c − y‖² + λ‖c‖²` through the
/// normal equations. `rows` are the rows of `X`.
pub(crate) fn normal_equations(rows: &[Vec<f64>], targets: &[f64], ncols: usize) -> (Vec<f64>, Vec<f64>) {
    let mut gram = vec![0.0; ncols * ncols];
    let mut rhs = vec![0.0; ncols];
    for (row, &y) in rows.iter().zip(targets) {
        for i in 0..ncols {
            rhs[i] += row[i] * y;
            for j in 0..=i {
                gram[i * ncols + j] += row[i] * row[j];
            }
        }
    }
    for i in 0..ncols {
        for j in 0..i {
            gram[j * ncols + i] = gram[i * ncols + j];
        }
    }
    (gram, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        let a = [4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0];
        let x = [1.0, -2.0, 0.5];
        let b: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| a[i * 3 + j] * x[j]).sum())
            .collect();
        let sol = cholesky(&a, 3, 1e-12).unwrap().solve(&b);
        for (s, e) in sol.iter().zip(x) {
            assert!((s - e).abs() < 1e-12);
        }
    }

    #[test]
    fn detects_dependent_column() {
        // third column = first + second
        let rows = vec![
            vec![1.0, 0.0, 1.0],
            vec![0.0, 1.0, 1.0],
            vec![1.0, 1.0, 2.0],
            vec![2.0, -1.0, 1.0],
        ];
        let (g, _) = normal_equations(&rows, &[0.0; 4], 3);
        assert_eq!(cholesky(&g, 3, 1e-10).unwrap_err(), 2);
    }
}
