use nalgebra::DMatrix;

const SWEEP_LIMIT: usize = 60;

/// Singular values of a square matrix by one-sided (Hestenes) Jacobi
/// rotations, sorted descending.
pub fn jacobi_singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.ncols();
    let rows = m.nrows();
    // column-major copy; column j is cols[j*rows..]
    let mut cols: Vec<f64> = m.iter().copied().collect();
    for _ in 0..SWEEP_LIMIT {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for r in 0..rows {
                    let a = cols[i * rows + r];
                    let b = cols[j * rows + r];
                    alpha += a * a;
                    beta += b * b;
                    gamma += a * b;
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..rows {
                    let a = cols[i * rows + r];
                    let b = cols[j * rows + r];
                    cols[i * rows + r] = c * a - s * b;
                    cols[j * rows + r] = s * a + c * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..n)
        .map(|j| (0..rows).map(|r| cols[j * rows + r].powi(2)).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}
