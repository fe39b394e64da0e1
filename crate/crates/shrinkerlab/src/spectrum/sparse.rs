//! Minimal symmetric sparse kernel for the eigensolver: CSR storage,
//! reverse Cuthill-McKee ordering, and a banded LDL^T factorization.
//!
//! Mesh stiffness matrices are narrow-banded after RCM, so a band solver
//! covers every mesh this crate produces without a general sparse-direct
//! dependency.

/// Symmetric sparse matrix in CSR form, both triangles stored.
#[derive(Debug, Clone)]
pub struct SymCsr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SymCsr {
    /// Build from unordered triplets; duplicate entries are summed. Only
    /// provide each symmetric pair once or twice consistently - assembly in
    /// this crate pushes both (i,j) and (j,i).
    pub fn from_triplets(n: usize, triplets: &mut Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets.iter() {
            if let Some(last) = entries.last_mut() {
                if last.0 == i && last.1 == j {
                    last.2 += v;
                    continue;
                }
            }
            entries.push((i, j, v));
        }
        let mut row_ptr = vec![0usize; n + 1];
        for &(i, _, _) in &entries {
            row_ptr[i + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SymCsr {
            n,
            row_ptr,
            col_idx: entries.iter().map(|e| e.1).collect(),
            values: entries.iter().map(|e| e.2).collect(),
        }
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c];
            }
            y[i] = acc;
        }
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        x.iter().zip(&y).map(|(a, b)| a * b).sum()
    }

    pub fn bilinear_form(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut sy = vec![0.0; self.n];
        self.matvec(y, &mut sy);
        x.iter().zip(&sy).map(|(a, b)| a * b).sum()
    }

    /// Max |row sum|, used to check that constants lie in the kernel.
    pub fn max_abs_row_sum(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let (_, vals) = self.row(i);
                vals.iter().sum::<f64>().abs()
            })
            .fold(0.0, f64::max)
    }

    /// Max |S_ij - S_ji| over the stored pattern.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                let (jc, jv) = self.row(*c);
                let back = match jc.binary_search(&i) {
                    Ok(pos) => jv[pos],
                    Err(_) => 0.0,
                };
                worst = worst.max((v - back).abs());
            }
        }
        worst
    }
}

/// Reverse Cuthill-McKee ordering. Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &SymCsr) -> Vec<usize> {
    let n = a.n;
    let degree: Vec<usize> = (0..n).map(|i| a.row_ptr[i + 1] - a.row_ptr[i]).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    while order.len() < n {
        // Start each component from a minimum-degree vertex.
        let start = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| degree[i])
            .unwrap();
        let mut queue = std::collections::VecDeque::new();
        visited[start] = true;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let (cols, _) = a.row(u);
            let mut next: Vec<usize> = cols.iter().cloned().filter(|&v| !visited[v]).collect();
            next.sort_unstable_by_key(|&v| (degree[v], v));
            for v in next {
                if !visited[v] {
                    visited[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    order.reverse();
    order
}

/// Banded LDL^T factorization (no pivoting; signed D entries tolerated so a
/// shifted matrix with a single negative direction factors cleanly).
pub struct BandedLdlt {
    n: usize,
    bandwidth: usize,
    /// Row-major band of L (unit diagonal implicit): `band[i*(bw+1) + k]`
    /// holds L[i][i - bw + k] for k in 0..bw, and slot bw is unused.
    band: Vec<f64>,
    diag: Vec<f64>,
}

pub enum FactorOutcome {
    Ok(BandedLdlt),
    ZeroPivot,
}

impl BandedLdlt {
    /// Factor `A` given in CSR under permutation `perm` (`perm[new] = old`).
    pub fn factor(a: &SymCsr, perm: &[usize]) -> FactorOutcome {
        let n = a.n;
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut bandwidth = 0usize;
        for i in 0..n {
            let (cols, _) = a.row(i);
            for &j in cols {
                bandwidth = bandwidth.max(inv[i].abs_diff(inv[j]));
            }
        }
        let stride = bandwidth + 1;
        // Dense band of the permuted matrix, lower triangle:
        // entry (i, j) with i - bandwidth <= j <= i at band[i*stride + (j - i + bandwidth)].
        let mut band = vec![0.0f64; n * stride];
        let mut scale: f64 = 0.0;
        for new_i in 0..n {
            let old_i = perm[new_i];
            let (cols, vals) = a.row(old_i);
            for (c, v) in cols.iter().zip(vals) {
                let new_j = inv[*c];
                scale = scale.max(v.abs());
                if new_j <= new_i {
                    band[new_i * stride + (new_j + bandwidth - new_i)] = *v;
                }
            }
        }
        let pivot_floor = scale * 1e-14 + f64::MIN_POSITIVE;

        let mut diag = vec![0.0f64; n];
        // In-place banded LDLT: band ends up holding L (strict lower part).
        for i in 0..n {
            let j_lo = i.saturating_sub(bandwidth);
            // L[i][j] for j in j_lo..i
            for j in j_lo..i {
                let mut sum = band[i * stride + (j + bandwidth - i)];
                let k_lo = j.saturating_sub(bandwidth).max(j_lo);
                for k in k_lo..j {
                    sum -= band[i * stride + (k + bandwidth - i)]
                        * diag[k]
                        * band[j * stride + (k + bandwidth - j)];
                }
                band[i * stride + (j + bandwidth - i)] = sum / diag[j];
            }
            let mut d = band[i * stride + bandwidth];
            for k in j_lo..i {
                let l = band[i * stride + (k + bandwidth - i)];
                d -= l * l * diag[k];
            }
            if d.abs() <= pivot_floor {
                return FactorOutcome::ZeroPivot;
            }
            diag[i] = d;
            band[i * stride + bandwidth] = 1.0;
        }

        FactorOutcome::Ok(BandedLdlt {
            n,
            bandwidth,
            band,
            diag,
        })
    }

    /// Solve A x = b in the permuted ordering (caller permutes).
    pub fn solve_permuted(&self, b: &mut [f64]) {
        let bw = self.bandwidth;
        let stride = bw + 1;
        // Forward: L y = b.
        for i in 0..self.n {
            let j_lo = i.saturating_sub(bw);
            let mut sum = b[i];
            for j in j_lo..i {
                sum -= self.band[i * stride + (j + bw - i)] * b[j];
            }
            b[i] = sum;
        }
        // Diagonal.
        for i in 0..self.n {
            b[i] /= self.diag[i];
        }
        // Backward: L^T x = y.
        for i in (0..self.n).rev() {
            let j_hi = (i + bw).min(self.n - 1);
            let mut sum = b[i];
            for j in (i + 1)..=j_hi {
                sum -= self.band[j * stride + (i + bw - j)] * b[j];
            }
            b[i] = sum;
        }
    }

}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_path(n: usize) -> SymCsr {
        let mut t = Vec::new();
        for i in 0..n {
            let mut d = 0.0;
            if i > 0 {
                t.push((i, i - 1, -1.0));
                d += 1.0;
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                d += 1.0;
            }
            t.push((i, i, d + 0.5));
        }
        SymCsr::from_triplets(n, &mut t)
    }

    #[test]
    fn ldlt_solves_spd_band() {
        let a = laplacian_path(50);
        let perm: Vec<usize> = (0..50).collect();
        let FactorOutcome::Ok(f) = BandedLdlt::factor(&a, &perm) else {
            panic!("factorization failed");
        };
        let x_true: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).cos()).collect();
        let mut b = vec![0.0; 50];
        a.matvec(&x_true, &mut b);
        f.solve_permuted(&mut b);
        for (xi, bi) in x_true.iter().zip(&b) {
            assert!((xi - bi).abs() < 1e-10);
        }
    }

    #[test]
    fn ldlt_handles_one_negative_direction() {
        // Shift past the smallest eigenvalue: one negative pivot, still solvable.
        let mut a = laplacian_path(30);
        for i in 0..30 {
            let (cols, _) = a.row(i);
            let diag_pos = cols.iter().position(|&c| c == i).unwrap();
            let idx = a.row_ptr[i] + diag_pos;
            a.values[idx] -= 0.52; // smallest eigenvalue of the path matrix is 0.5
        }
        let perm = reverse_cuthill_mckee(&a);
        let FactorOutcome::Ok(f) = BandedLdlt::factor(&a, &perm) else {
            panic!("factorization failed");
        };
        let mut inv = vec![0usize; 30];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let x_true: Vec<f64> = (0..30).map(|i| (i as f64 * 0.7).sin() + 0.2).collect();
        let mut b = vec![0.0; 30];
        a.matvec(&x_true, &mut b);
        let mut pb: Vec<f64> = (0..30).map(|i| b[perm[i]]).collect();
        f.solve_permuted(&mut pb);
        for new in 0..30 {
            assert!((pb[new] - x_true[perm[new]]).abs() < 1e-8);
        }
    }

    #[test]
    fn rcm_reduces_bandwidth() {
        // A ring graph numbered badly.
        let n = 64;
        let scramble = |i: usize| (i * 37) % n;
        let mut t = Vec::new();
        for i in 0..n {
            let a = scramble(i);
            let b = scramble((i + 1) % n);
            t.push((a, b, -1.0));
            t.push((b, a, -1.0));
            t.push((a, a, 1.0));
            t.push((b, b, 1.0));
        }
        let m = SymCsr::from_triplets(n, &mut t);
        let perm = reverse_cuthill_mckee(&m);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut bw = 0usize;
        for i in 0..n {
            let (cols, _) = m.row(i);
            for &j in cols {
                bw = bw.max(inv[i].abs_diff(inv[j]));
            }
        }
        assert!(bw <= 3, "bandwidth {bw}");
    }
}
