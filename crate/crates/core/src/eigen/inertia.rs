//! Eigenvalue counting by Sylvester's law of inertia.
//!
//! On the grid ordering `p = i + N·j` the stiffness matrix is block
//! tridiagonal with a cyclic corner, one block per row `j`. A block LDLᴴ
//! factorization of `S − Λ·ρ` that eliminates rows `0..N−1` and keeps the
//! last row as a border gives the number of negative eigenvalues, which by
//! congruence equals the number of generalized eigenvalues below `Λ`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::operator::WeightOperator;

fn block(op: &WeightOperator, shift: f64, r: usize, c: usize) -> DMatrix<Complex64> {
    let n = op.config.resolution;
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        let p = i + n * r;
        for (q, v) in op.stiffness.row(p) {
            if q / n == c {
                out[(i, q % n)] += v;
            }
        }
        if r == c {
            out[(i, i)] -= shift * op.mass[p];
        }
    }
    out
}

fn negatives(m: &DMatrix<Complex64>) -> usize {
    let sym = super::lanczos::hermitian_part(m);
    ldl_negatives(sym.clone())
        .unwrap_or_else(|| SymmetricEigen::new(sym).eigenvalues.iter().filter(|&&v| v < 0.0).count())
}

/// Signs of the pivots of an unpivoted LDLᴴ factorization; `None` when a
/// pivot is too small to be trusted.
fn ldl_negatives(mut a: DMatrix<Complex64>) -> Option<usize> {
    let n = a.nrows();
    let scale = (0..n).map(|i| a[(i, i)].re.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut count = 0;
    for k in 0..n {
        let d = a[(k, k)].re;
        if d.abs() < 1e-6 * scale {
            return None;
        }
        if d < 0.0 {
            count += 1;
        }
        for j in k + 1..n {
            let ljk = a[(j, k)] / d;
            if ljk == Complex64::default() {
                continue;
            }
            for i in j..n {
                let update = a[(i, k)] * ljk.conj();
                a[(i, j)] -= update;
            }
        }
    }
    Some(count)
}

fn inverse(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    m.clone().try_inverse().unwrap_or_else(|| m.clone().pseudo_inverse(1e-300).expect("pseudo-inverse"))
}

/// Number of eigenvalues of `Sφ = λρφ` strictly below `shift`.
pub fn count_below(op: &WeightOperator, shift: f64) -> usize {
    let n = op.config.resolution;
    let last = n - 1;
    let mut count = 0;
    let mut piv = block(op, shift, 0, 0);
    let mut border = block(op, shift, 0, last);
    let mut dlast = block(op, shift, last, last);
    for j in 0..last {
        count += negatives(&piv);
        let pinv = inverse(&piv);
        let pb = &pinv * &border;
        dlast -= border.adjoint() * &pb;
        if j + 1 < last {
            let next = block(op, shift, j, j + 1);
            let next_h = next.adjoint();
            piv = block(op, shift, j + 1, j + 1) - &next_h * &pinv * &next;
            border = block(op, shift, j + 1, last) - &next_h * pb;
        }
    }
    count + negatives(&dlast)
}
