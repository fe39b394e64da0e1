//! Dense reference route for the constrained eigenproblem, used as the
//! independent oracle against the sparse shift-invert solver on small
//! meshes. Works on `B = M^{-1/2} S M^{-1/2}` with the constant direction
//! projected out, via nalgebra's symmetric eigendecomposition.

use nalgebra::{DMatrix, DVector};

use super::WeightedOperators;

/// The `k` smallest constrained eigenvalues by dense full decomposition.
/// Intended for meshes up to a few hundred vertices.
pub fn dense_constrained_eigenvalues(ops: &WeightedOperators, k: usize) -> Vec<f64> {
    let n = ops.vertex_count();
    let sqrt_m: Vec<f64> = ops.mass.iter().map(|m| m.sqrt()).collect();

    let mut b = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let (cols, vals) = ops.stiffness.row(i);
        for (c, v) in cols.iter().zip(vals) {
            b[(i, *c)] = v / (sqrt_m[i] * sqrt_m[*c]);
        }
    }
    // Deflate q = M^{1/2} 1 / |.|, the image of the constant.
    let mut q = DVector::<f64>::from_iterator(n, sqrt_m.iter().cloned());
    q /= q.norm();
    let pq = &b * &q;
    // (I - qq^T) B (I - qq^T) = B - q (Bq)^T - (Bq) q^T + (q^T B q) qq^T
    let qbq = q.dot(&pq);
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] += -q[i] * pq[j] - pq[i] * q[j] + qbq * q[i] * q[j];
        }
    }
    let eig = b.symmetric_eigen();

    // Drop the deflated direction: the eigenvector with the largest overlap
    // with q (its eigenvalue is ~0 after projection).
    let mut overlap_best = (0usize, 0.0f64);
    for c in 0..n {
        let o = eig.eigenvectors.column(c).dot(&q).abs();
        if o > overlap_best.1 {
            overlap_best = (c, o);
        }
    }
    let mut lambdas: Vec<f64> = (0..n)
        .filter(|c| *c != overlap_best.0)
        .map(|c| eig.eigenvalues[c])
        .collect();
    lambdas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    lambdas.truncate(k);
    lambdas
}
