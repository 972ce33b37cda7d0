//! Dense least-squares kernels for the small, tall systems produced by
//! holding-class aggregation (`b` is at most a few dozen columns).

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged matrix");
            data.extend_from_slice(r);
        }
        Mat { rows: rows.len(), cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `A^T v`.
    pub fn tmul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        out
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_cols(&self, cols: &[usize]) -> Mat {
        let mut out = Mat::zeros(self.rows, cols.len());
        for i in 0..self.rows {
            for (k, &j) in cols.iter().enumerate() {
                out.set(i, k, self.get(i, j));
            }
        }
        out
    }

    /// Each row `i` multiplied by `s[i]`.
    pub fn scale_rows(&self, s: &[f64]) -> Mat {
        let mut out = self.clone();
        for (i, &si) in s.iter().enumerate() {
            for v in &mut out.data[i * self.cols..(i + 1) * self.cols] {
                *v *= si;
            }
        }
        out
    }

    /// `A^T A`.
    pub fn gram(&self) -> Mat {
        let mut g = Mat::zeros(self.cols, self.cols);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..self.cols {
                for b in a..self.cols {
                    g.data[a * self.cols + b] += r[a] * r[b];
                }
            }
        }
        for a in 0..self.cols {
            for b in 0..a {
                g.data[a * self.cols + b] = g.data[b * self.cols + a];
            }
        }
        g
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Relative threshold on the pivoted-QR diagonal below which a column is
/// treated as linearly dependent (columns are unit-normalized first).
pub const RANK_TOL: f64 = 1e-10;

/// Outcome of a least-squares solve.
#[derive(Debug, Clone, PartialEq)]
pub enum LstsqResult {
    Solved(Vec<f64>),
    /// Columns (original indices) that could not be pivoted in.
    RankDeficient { rank: usize, deficient: Vec<usize> },
}

/// Minimizes `||A x - y||_2` by Householder QR with column pivoting on
/// unit-normalized columns.
pub fn lstsq(a: &Mat, y: &[f64]) -> LstsqResult {
    let (m, n) = (a.rows(), a.cols());
    assert_eq!(y.len(), m);
    let mut scale = vec![0.0; n];
    for (j, s) in scale.iter_mut().enumerate() {
        *s = (0..m).map(|i| a.get(i, j).powi(2)).sum::<f64>().sqrt();
    }
    let mut r = Mat::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            let s = scale[j];
            r.set(i, j, if s > 0.0 { a.get(i, j) / s } else { 0.0 });
        }
    }
    let mut rhs = y.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut colnorm: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| r.get(i, j).powi(2)).sum::<f64>())
        .collect();
    let steps = m.min(n);
    let mut rank = 0;
    for k in 0..steps {
        // pivot: largest remaining column norm
        let (p, &best) = colnorm[k..]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, v)| (i + k, v))
            .unwrap();
        if best.sqrt() <= RANK_TOL {
            break;
        }
        if p != k {
            perm.swap(k, p);
            colnorm.swap(k, p);
            for i in 0..m {
                let t = r.get(i, k);
                r.set(i, k, r.get(i, p));
                r.set(i, p, t);
            }
        }
        // Householder reflector on rows k..m of column k
        let alpha_norm = (k..m).map(|i| r.get(i, k).powi(2)).sum::<f64>().sqrt();
        if alpha_norm <= RANK_TOL {
            break;
        }
        let alpha = if r.get(k, k) > 0.0 { -alpha_norm } else { alpha_norm };
        let mut v: Vec<f64> = (k..m).map(|i| r.get(i, k)).collect();
        v[0] -= alpha;
        let vnorm2 = dot(&v, &v);
        if vnorm2 > 0.0 {
            for j in k..n {
                let s: f64 = (k..m).map(|i| v[i - k] * r.get(i, j)).sum::<f64>() * 2.0 / vnorm2;
                for i in k..m {
                    r.set(i, j, r.get(i, j) - s * v[i - k]);
                }
            }
            let s: f64 = (k..m).map(|i| v[i - k] * rhs[i]).sum::<f64>() * 2.0 / vnorm2;
            for i in k..m {
                rhs[i] -= s * v[i - k];
            }
        }
        rank = k + 1;
        for j in (k + 1)..n {
            colnorm[j] = ((k + 1)..m).map(|i| r.get(i, j).powi(2)).sum::<f64>();
        }
    }
    if rank < n {
        let mut deficient: Vec<usize> = perm[rank..].to_vec();
        deficient.sort_unstable();
        return LstsqResult::RankDeficient { rank, deficient };
    }
    let mut z = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = ((k + 1)..n).map(|j| r.get(k, j) * z[j]).sum();
        z[k] = (rhs[k] - s) / r.get(k, k);
    }
    let mut x = vec![0.0; n];
    for (k, &j) in perm.iter().enumerate() {
        x[j] = z[k] / scale[j];
    }
    LstsqResult::Solved(x)
}

/// Inverse of a symmetric positive definite matrix via Cholesky; `None` if
/// the matrix is not numerically positive definite.
pub fn spd_inverse(g: &Mat) -> Option<Mat> {
    let n = g.rows();
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l.get(i, k) * l.get(j, k)).sum();
            if i == j {
                let d = g.get(i, i) - s;
                if !(d > 0.0) {
                    return None;
                }
                l.set(i, i, d.sqrt());
            } else {
                l.set(i, j, (g.get(i, j) - s) / l.get(j, j));
            }
        }
    }
    let mut inv = Mat::zeros(n, n);
    for c in 0..n {
        // solve L L^T x = e_c
        let mut y = vec![0.0; n];
        for i in 0..n {
            let e = if i == c { 1.0 } else { 0.0 };
            let s: f64 = (0..i).map(|k| l.get(i, k) * y[k]).sum();
            y[i] = (e - s) / l.get(i, i);
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = ((i + 1)..n).map(|k| l.get(k, i) * x[k]).sum();
            x[i] = (y[i] - s) / l.get(i, i);
        }
        for i in 0..n {
            inv.set(i, c, x[i]);
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_solve() {
        let a = Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let LstsqResult::Solved(x) = lstsq(&a, &[3.0, 5.0]) else { panic!() };
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn overdetermined_line_fit() {
        // y = 1 + 2t exactly
        let rows: Vec<Vec<f64>> = (0..6).map(|t| vec![1.0, t as f64]).collect();
        let y: Vec<f64> = (0..6).map(|t| 1.0 + 2.0 * t as f64).collect();
        let LstsqResult::Solved(x) = lstsq(&Mat::from_rows(&rows), &y) else { panic!() };
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn reports_dependent_columns() {
        let a = Mat::from_rows(&[vec![1.0, 0.0, 2.0], vec![2.0, 0.0, 4.0], vec![0.0, 0.0, 0.0]]);
        match lstsq(&a, &[1.0, 2.0, 3.0]) {
            LstsqResult::RankDeficient { rank, deficient } => {
                assert_eq!(rank, 1);
                assert_eq!(deficient.len(), 2);
                assert!(deficient.contains(&1));
            }
            other => panic!("{other:?}"),
        }
        let wide = Mat::from_rows(&[vec![1.0, 2.0, 3.0]]);
        assert!(matches!(lstsq(&wide, &[1.0]), LstsqResult::RankDeficient { rank: 1, .. }));
    }

    #[test]
    fn spd_inverse_identity() {
        let g = Mat::from_rows(&[vec![4.0, 1.0], vec![1.0, 3.0]]);
        let inv = spd_inverse(&g).unwrap();
        let det = 11.0;
        assert!((inv.get(0, 0) - 3.0 / det).abs() < 1e-14);
        assert!((inv.get(0, 1) + 1.0 / det).abs() < 1e-14);
        assert!(spd_inverse(&Mat::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]])).is_none());
    }
}
