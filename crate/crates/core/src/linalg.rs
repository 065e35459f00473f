//! Dense 3×3 solves for the fringe fit.

pub(crate) type Mat3 = [[f64; 3]; 3];

/// Inverse of a symmetric positive semidefinite matrix by Gauss-Jordan
/// elimination with partial pivoting.
///
/// Returns `None` when a pivot falls below `rel_tol` times the largest
/// diagonal entry, i.e. the matrix is numerically singular.
pub(crate) fn invert(m: &Mat3, rel_tol: f64) -> Option<Mat3> {
    let scale = m[0][0].abs().max(m[1][1].abs()).max(m[2][2].abs());
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    let mut a = *m;
    let mut inv = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for col in 0..3 {
        let pivot_row = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        if a[pivot_row][col].abs() <= rel_tol * scale {
            return None;
        }
        a.swap(col, pivot_row);
        inv.swap(col, pivot_row);
        let p = a[col][col];
        for k in 0..3 {
            a[col][k] /= p;
            inv[col][k] /= p;
        }
        for row in 0..3 {
            if row != col {
                let f = a[row][col];
                for k in 0..3 {
                    a[row][k] -= f * a[col][k];
                    inv[row][k] -= f * inv[col][k];
                }
            }
        }
    }
    Some(inv)
}

pub(crate) fn mul_vec(m: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
    }
    out
}

pub(crate) fn mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}
