//! The common coding matrix `A` (D x 2^J), one Gaussian codeword per column.

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::SeedableRng;

use crate::error::{invalid_param, Error, Result};
use crate::linalg::{self, CMatrix};
use crate::rng::SimRng;

/// Default ceiling on the codebook payload, 1 GiB.
pub const DEFAULT_MEMORY_BUDGET: usize = 1 << 30;

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    a: CMatrix,
    seed: u64,
    normalized: bool,
}

impl Codebook {
    /// Wraps an existing matrix, e.g. one read back from disk.
    pub fn from_matrix(a: CMatrix, seed: u64, normalized: bool) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::InvalidInput("codebook must be non-empty".into()));
        }
        Ok(Self { a, seed, normalized })
    }

    /// Signal dimension `D`.
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Number of codewords.
    pub fn len(&self) -> usize {
        self.a.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.a.ncols() == 0
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.a
    }

    /// Codeword `i` as a contiguous slice.
    pub fn column(&self, i: usize) -> &[Complex64] {
        linalg::column(&self.a, i)
    }
}

pub fn generate_codebook(seed: u64, d: usize, n_cw: usize, normalized: bool) -> Result<Codebook> {
    generate_codebook_with_budget(seed, d, n_cw, normalized, DEFAULT_MEMORY_BUDGET)
}

/// I.i.d. CN(0, 1) codebook; with `normalized` every column is rescaled to
/// squared norm exactly `d`.
pub fn generate_codebook_with_budget(
    seed: u64,
    d: usize,
    n_cw: usize,
    normalized: bool,
    budget_bytes: usize,
) -> Result<Codebook> {
    if d == 0 {
        return Err(invalid_param("d", "dimension must be at least 1"));
    }
    if n_cw == 0 {
        return Err(invalid_param("n_cw", "need at least one codeword"));
    }
    let requested = d
        .checked_mul(n_cw)
        .and_then(|x| x.checked_mul(core::mem::size_of::<Complex64>()))
        .unwrap_or(usize::MAX);
    if requested > budget_bytes {
        return Err(Error::ResourceBudget {
            requested,
            budget: budget_bytes,
        });
    }
    let mut rng = SimRng::seed_from_u64(seed);
    let mut a = linalg::complex_normal_matrix(&mut rng, d, n_cw, 1.0);
    if normalized {
        for mut col in a.column_iter_mut() {
            let norm2: f64 = col.iter().map(|z| z.norm_sqr()).sum();
            let scale = (d as f64 / norm2).sqrt();
            for z in col.iter_mut() {
                *z *= scale;
            }
        }
    }
    Ok(Codebook { a, seed, normalized })
}
