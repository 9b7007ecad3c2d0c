//! Small dense helpers shared across modules.

use nalgebra::DMatrix;

use crate::exterior::multi_index::{members, Basis};

/// Determinant by Gaussian elimination with partial pivoting on a scratch
/// buffer; `a` is row-major `k×k`.
pub fn det_in_place(a: &mut [f64], k: usize) -> f64 {
    match k {
        0 => return 1.0,
        1 => return a[0],
        2 => return a[0] * a[3] - a[1] * a[2],
        3 => {
            return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
                + a[2] * (a[3] * a[7] - a[4] * a[6])
        }
        _ => {}
    }
    let mut det = 1.0;
    for col in 0..k {
        let mut piv = col;
        let mut best = a[col * k + col].abs();
        for r in col + 1..k {
            let v = a[r * k + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if piv != col {
            for c in 0..k {
                a.swap(piv * k + c, col * k + c);
            }
            det = -det;
        }
        let p = a[col * k + col];
        det *= p;
        for r in col + 1..k {
            let f = a[r * k + col] / p;
            if f != 0.0 {
                for c in col..k {
                    a[r * k + c] -= f * a[col * k + c];
                }
            }
        }
    }
    det
}

/// Minor `det(m[rows, cols])` for index masks of equal size.
pub fn minor(m: &DMatrix<f64>, rows: u32, cols: u32) -> f64 {
    let k = rows.count_ones() as usize;
    let mut buf = [0.0f64; 64];
    let scratch: &mut [f64] = if k <= 8 {
        &mut buf[..k * k]
    } else {
        return minor_large(m, rows, cols);
    };
    for (i, r) in members(rows).enumerate() {
        for (j, c) in members(cols).enumerate() {
            scratch[i * k + j] = m[(r, c)];
        }
    }
    det_in_place(scratch, k)
}

fn minor_large(m: &DMatrix<f64>, rows: u32, cols: u32) -> f64 {
    let k = rows.count_ones() as usize;
    let mut v = Vec::with_capacity(k * k);
    for r in members(rows) {
        for c in members(cols) {
            v.push(m[(r, c)]);
        }
    }
    det_in_place(&mut v, k)
}

/// k-th compound matrix: entry `(I, J)` is the minor on rows `I`, columns `J`,
/// with multi-indices in lexicographic order. It is the matrix of `∧^k m`.
pub fn compound(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    assert_eq!(m.nrows(), m.ncols());
    let basis = Basis::new(m.nrows(), k);
    let len = basis.len();
    DMatrix::from_fn(len, len, |i, j| minor(m, basis.masks[i], basis.masks[j]))
}

/// Symmetric square root and inverse square root of an SPD matrix.
pub fn spd_sqrt_pair(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let q = &eig.eigenvectors;
    let sq = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let isq = eig.eigenvalues.map(|l| 1.0 / l.max(f64::MIN_POSITIVE).sqrt());
    let root = q * DMatrix::from_diagonal(&sq) * q.transpose();
    let inv_root = q * DMatrix::from_diagonal(&isq) * q.transpose();
    (root, inv_root)
}

/// Central finite-difference Jacobian of `f` at `x` (rows: outputs).
pub fn fd_jacobian<F: Fn(&[f64]) -> Vec<f64>>(f: F, x: &[f64], step: f64) -> DMatrix<f64> {
    let n = x.len();
    let mut probe = x.to_vec();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    for a in 0..n {
        probe[a] = x[a] + step;
        let up = f(&probe);
        probe[a] = x[a] - step;
        let down = f(&probe);
        probe[a] = x[a];
        cols.push(
            up.iter()
                .zip(&down)
                .map(|(u, d)| (u - d) / (2.0 * step))
                .collect(),
        );
    }
    let m = cols.first().map_or(0, |c| c.len());
    DMatrix::from_fn(m, n, |i, j| cols[j][i])
}
