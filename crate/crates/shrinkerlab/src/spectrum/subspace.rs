//! Shift-invert block subspace iteration for the constrained generalized
//! eigenproblem `S u = lambda M u` with diagonal positive mass `M`,
//! restricted to the M-orthogonal complement of the constant function.
//!
//! The operator `(S - sigma M)^{-1} M` is self-adjoint in the M-inner
//! product and leaves the deflated complement invariant. Iterating it on a
//! block with Rayleigh-Ritz extraction converges to the eigenvalues nearest
//! the shift and, unlike a single-vector recurrence, resolves multiple
//! eigenvalues cleanly (the sphere's first eigenvalue has multiplicity
//! three).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::sparse::{BandedLdlt, FactorOutcome, SymCsr};
use crate::error::{Error, Result};

pub struct EigenOptions {
    /// Spectral shift for the inverted operator.
    pub shift: f64,
    /// Relative residual target for `||Su - lambda M u|| / ||M u||`.
    pub residual_tol: f64,
    /// Iteration cap for the block sweep.
    pub max_iterations: usize,
    /// Start-block seed.
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            shift: 0.1,
            residual_tol: 1e-9,
            max_iterations: 400,
            seed: 0x5EED,
        }
    }
}

pub struct BlockOutput {
    pub lambdas: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
}

struct ShiftInvert {
    factor: BandedLdlt,
    perm: Vec<usize>,
    inv: Vec<usize>,
}

impl ShiftInvert {
    fn build(s: &SymCsr, mass: &[f64], shift: f64) -> Result<Self> {
        let n = s.n;
        // K = S - shift * M; M is diagonal.
        let mut k = s.clone();
        for i in 0..n {
            let (cols, _) = k.row(i);
            let pos = cols
                .binary_search(&i)
                .map_err(|_| Error::Evaluation("stiffness row missing diagonal".into()))?;
            let idx = k.row_ptr[i] + pos;
            k.values[idx] -= shift * mass[i];
        }
        let perm = super::sparse::reverse_cuthill_mckee(&k);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        // A handful of shift nudges covers the unlucky case where the shift
        // lands on an eigenvalue and the unpivoted factorization breaks.
        for attempt in 0..4 {
            match BandedLdlt::factor(&k, &perm) {
                FactorOutcome::Ok(factor) => return Ok(Self { factor, perm, inv }),
                FactorOutcome::ZeroPivot => {
                    let nudge = 1e-3 * (attempt as f64 + 1.0);
                    for i in 0..n {
                        let (cols, _) = k.row(i);
                        let pos = cols.binary_search(&i).unwrap();
                        let idx = k.row_ptr[i] + pos;
                        k.values[idx] -= nudge * mass[i];
                    }
                }
            }
        }
        Err(Error::NoConvergence {
            message: "shifted stiffness could not be factorized".into(),
            residual_history: Vec::new(),
        })
    }

    /// y = (S - shift M)^{-1} (M x)
    fn apply(&self, mass: &[f64], x: &[f64], scratch: &mut Vec<f64>, out: &mut Vec<f64>) {
        let n = x.len();
        scratch.resize(n, 0.0);
        out.resize(n, 0.0);
        for new in 0..n {
            let old = self.perm[new];
            scratch[new] = mass[old] * x[old];
        }
        self.factor.solve_permuted(scratch);
        for old in 0..n {
            out[old] = scratch[self.inv[old]];
        }
    }
}

fn m_dot(mass: &[f64], a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(mass)
        .map(|((x, y), m)| x * y * m)
        .sum()
}

/// Smallest `k` constrained eigenpairs by block shift-invert iteration.
pub fn smallest_eigenpairs(
    stiffness: &SymCsr,
    mass: &[f64],
    k: usize,
    opts: &EigenOptions,
) -> Result<BlockOutput> {
    let n = stiffness.n;
    if k == 0 || k + 2 > n {
        return Err(Error::Parameter(format!(
            "requested {k} eigenpairs on a mesh with {n} vertices"
        )));
    }
    let op = ShiftInvert::build(stiffness, mass, opts.shift)?;

    // Deflated direction: the M-normalized constant.
    let total_mass: f64 = mass.iter().sum();
    let w0: Vec<f64> = vec![1.0 / total_mass.sqrt(); n];

    let block = (k + (k / 2).max(2)).min(n.saturating_sub(2)).max(k);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis: Vec<Vec<f64>> = (0..block)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    orthonormalize_block(mass, &mut basis, &w0, &mut rng);

    let mut scratch = Vec::new();
    let mut applied = vec![vec![0.0f64; n]; block];
    let mut residual_history = Vec::new();

    for _ in 0..opts.max_iterations {
        for (v, w) in basis.iter().zip(applied.iter_mut()) {
            op.apply(mass, v, &mut scratch, w);
        }
        orthonormalize_block(mass, &mut applied, &w0, &mut rng);

        // Rayleigh-Ritz on the original pencil: A = W^T S W, B = I.
        let mut a = nalgebra::DMatrix::<f64>::zeros(block, block);
        let mut sw = vec![vec![0.0f64; n]; block];
        for (w, swi) in applied.iter().zip(sw.iter_mut()) {
            stiffness.matvec(w, swi);
        }
        for i in 0..block {
            for j in i..block {
                let v: f64 = applied[i].iter().zip(&sw[j]).map(|(x, y)| x * y).sum();
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        let eig = nalgebra::SymmetricEigen::new(a);
        let mut order: Vec<usize> = (0..block).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());

        // Rotate the block into the Ritz basis.
        let mut rotated = vec![vec![0.0f64; n]; block];
        for (slot, &col) in order.iter().enumerate() {
            for j in 0..block {
                let c = eig.eigenvectors[(j, col)];
                if c != 0.0 {
                    for (ri, wj) in rotated[slot].iter_mut().zip(&applied[j]) {
                        *ri += c * wj;
                    }
                }
            }
        }

        // Residuals of the first k Ritz pairs.
        let mut lambdas = Vec::with_capacity(k);
        let mut residuals = Vec::with_capacity(k);
        let mut worst: f64 = 0.0;
        for slot in 0..k {
            let lambda = eig.eigenvalues[order[slot]];
            let y = &rotated[slot];
            let mut sy = vec![0.0; n];
            stiffness.matvec(y, &mut sy);
            let mut num = 0.0f64;
            let mut den = 0.0f64;
            for i in 0..n {
                let my = mass[i] * y[i];
                let r = sy[i] - lambda * my;
                num += r * r;
                den += my * my;
            }
            let rel = (num / den.max(f64::MIN_POSITIVE)).sqrt();
            worst = worst.max(rel);
            lambdas.push(lambda);
            residuals.push(rel);
        }
        residual_history.push(worst);

        if worst <= opts.residual_tol {
            let mut vectors: Vec<Vec<f64>> = rotated.into_iter().take(k).collect();
            for y in &mut vectors {
                // M-normalize and fix the sign for determinism.
                let norm = m_dot(mass, y, y).max(f64::MIN_POSITIVE).sqrt();
                let lead = y
                    .iter()
                    .find(|x| x.abs() > 1e-9 * norm)
                    .copied()
                    .unwrap_or(1.0);
                let sign = if lead < 0.0 { -1.0 } else { 1.0 };
                for yi in y.iter_mut() {
                    *yi *= sign / norm;
                }
            }
            return Ok(BlockOutput {
                lambdas,
                vectors,
                residuals,
            });
        }
        basis = rotated;
    }

    Err(Error::NoConvergence {
        message: format!(
            "residual target {} not reached in {} block iterations",
            opts.residual_tol, opts.max_iterations
        ),
        residual_history,
    })
}

/// Modified Gram-Schmidt in the M-inner product, keeping every column
/// orthogonal to the deflated constant `w0`. Rank-deficient columns are
/// replaced with fresh random directions.
fn orthonormalize_block(
    mass: &[f64],
    block: &mut [Vec<f64>],
    w0: &[f64],
    rng: &mut ChaCha8Rng,
) {
    let n = w0.len();
    for idx in 0..block.len() {
        for _attempt in 0..3 {
            // Project out the constant and the previous columns, twice.
            for _ in 0..2 {
                let c = m_dot(mass, &block[idx], w0);
                for (vi, wi) in block[idx].iter_mut().zip(w0) {
                    *vi -= c * wi;
                }
                for prev in 0..idx {
                    let (head, tail) = block.split_at_mut(idx);
                    let c = m_dot(mass, &tail[0], &head[prev]);
                    for (vi, pi) in tail[0].iter_mut().zip(&head[prev]) {
                        *vi -= c * pi;
                    }
                }
            }
            let norm = m_dot(mass, &block[idx], &block[idx]).max(0.0).sqrt();
            if norm > 1e-12 {
                for vi in block[idx].iter_mut() {
                    *vi /= norm;
                }
                break;
            }
            block[idx] = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        }
    }
}
