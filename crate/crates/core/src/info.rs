//! Exact information measures over two kinds of carriers: finite joint pmfs
//! stored as dense row-major arrays, and zero-mean Gaussian vectors stored as
//! covariance matrices. Everything downstream (discrete bounds, the Gaussian
//! covariance oracle) reduces to the two `mutual_information` entry points
//! here, so the conventions are pinned in one place: logs are base 2, the
//! determinant of an empty block is 1, and Gaussian sub-blocks share a single
//! jitter derived from the full matrix diagonal.

use nalgebra::DMatrix;
use std::f64::consts::LN_2;
use thiserror::Error;

/// Sum deviation from 1 beyond which a pmf is rejected.
pub const PMF_TOLERANCE: f64 = 1e-12;

/// Asymmetry beyond which a covariance matrix is rejected.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Most negative eigenvalue a covariance matrix may have.
pub const PSD_TOLERANCE: f64 = -1e-10;

/// Relative ridge added to every log-det sub-block before factorization.
pub const JITTER_SCALE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum InfoError {
    #[error("pmf over dims {dims:?} needs {expected} entries, got {actual}")]
    CellCountMismatch {
        dims: Vec<usize>,
        expected: usize,
        actual: usize,
    },
    #[error("pmf entry {index} is negative ({value})")]
    NegativeProbability { index: usize, value: f64 },
    #[error("pmf sums to {sum}, expected 1 within {PMF_TOLERANCE}")]
    Unnormalized { sum: f64 },
    #[error("pmf dimension {index} has zero size")]
    EmptyDimension { index: usize },
    #[error("variable set is empty")]
    EmptyVariableSet,
    #[error("variable index {index} out of range for {count} variables")]
    VariableOutOfRange { index: usize, count: usize },
    #[error("variable {index} appears in more than one argument set")]
    OverlappingVariables { index: usize },
    #[error("covariance matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("{labels} labels for a {dim}-dimensional covariance")]
    LabelCountMismatch { labels: usize, dim: usize },
    #[error("covariance asymmetric at ({row},{col}): {delta:.3e}")]
    Asymmetric { row: usize, col: usize, delta: f64 },
    #[error("covariance has eigenvalue {eigenvalue:.3e} below {PSD_TOLERANCE}")]
    NotPositiveSemidefinite { eigenvalue: f64 },
    #[error("covariance entry ({row},{col}) is not finite")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("covariance block [{block}] is numerically singular")]
    SingularBlock { block: String },
}

/// Joint pmf over finitely many variables, stored row-major: the last
/// variable varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    dims: Vec<usize>,
    probs: Vec<f64>,
}

impl JointPmf {
    /// Validates shape, non-negativity, and normalization to within
    /// [`PMF_TOLERANCE`].
    pub fn new(dims: Vec<usize>, probs: Vec<f64>) -> Result<Self, InfoError> {
        if let Some(index) = dims.iter().position(|&d| d == 0) {
            return Err(InfoError::EmptyDimension { index });
        }
        let expected: usize = dims.iter().product();
        if probs.len() != expected {
            return Err(InfoError::CellCountMismatch {
                dims,
                expected,
                actual: probs.len(),
            });
        }
        for (index, &value) in probs.iter().enumerate() {
            if value.is_nan() || value < 0.0 {
                return Err(InfoError::NegativeProbability { index, value });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PMF_TOLERANCE {
            return Err(InfoError::Unnormalized { sum });
        }
        Ok(Self { dims, probs })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Number of variables in the joint.
    pub fn arity(&self) -> usize {
        self.dims.len()
    }

    fn check_vars(&self, vars: &[usize]) -> Result<(), InfoError> {
        for &v in vars {
            if v >= self.dims.len() {
                return Err(InfoError::VariableOutOfRange {
                    index: v,
                    count: self.dims.len(),
                });
            }
        }
        Ok(())
    }

    /// Marginal pmf over `vars` (in the order given), as a flat row-major
    /// array. `vars` may be empty, giving the single cell `[1.0]`.
    fn marginal(&self, vars: &[usize]) -> Vec<f64> {
        let size: usize = vars.iter().map(|&v| self.dims[v]).product();
        let mut out = vec![0.0; size];
        // Strides of the full array, so each flat index can be decoded once.
        let mut strides = vec![1usize; self.dims.len()];
        for i in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.dims[i + 1];
        }
        for (cell, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let mut idx = 0usize;
            for &v in vars {
                idx = idx * self.dims[v] + (cell / strides[v]) % self.dims[v];
            }
            out[idx] += p;
        }
        out
    }

    fn entropy_of(marginal: &[f64]) -> f64 {
        marginal
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.log2())
            .sum()
    }

    /// Shannon entropy H of the variables in `vars`, in bits. Zero-probability
    /// cells contribute zero. The set must be non-empty and within range;
    /// duplicates are rejected as overlapping.
    pub fn entropy(&self, vars: &[usize]) -> Result<f64, InfoError> {
        if vars.is_empty() {
            return Err(InfoError::EmptyVariableSet);
        }
        self.check_vars(vars)?;
        let mut seen = vec![false; self.dims.len()];
        for &v in vars {
            if seen[v] {
                return Err(InfoError::OverlappingVariables { index: v });
            }
            seen[v] = true;
        }
        Ok(Self::entropy_of(&self.marginal(vars)))
    }

    /// Conditional mutual information I(A;B|C) in bits, computed as
    /// H(A,C) + H(B,C) - H(C) - H(A,B,C). `c` may be empty (plain mutual
    /// information); `a` and `b` must be non-empty and all three sets
    /// pairwise disjoint. Tiny negative results from float cancellation are
    /// clamped to zero.
    pub fn conditional_mutual_information(
        &self,
        a: &[usize],
        b: &[usize],
        c: &[usize],
    ) -> Result<f64, InfoError> {
        if a.is_empty() || b.is_empty() {
            return Err(InfoError::EmptyVariableSet);
        }
        self.check_vars(a)?;
        self.check_vars(b)?;
        self.check_vars(c)?;
        let mut seen = vec![false; self.dims.len()];
        for &v in a.iter().chain(b).chain(c) {
            if seen[v] {
                return Err(InfoError::OverlappingVariables { index: v });
            }
            seen[v] = true;
        }
        let join = |x: &[usize], y: &[usize]| -> Vec<usize> {
            x.iter().chain(y).copied().collect()
        };
        let h_ac = Self::entropy_of(&self.marginal(&join(a, c)));
        let h_bc = Self::entropy_of(&self.marginal(&join(b, c)));
        let h_c = if c.is_empty() {
            0.0
        } else {
            Self::entropy_of(&self.marginal(c))
        };
        let h_abc = Self::entropy_of(&self.marginal(&join(&join(a, b), c)));
        Ok((h_ac + h_bc - h_c - h_abc).max(0.0))
    }
}

/// Zero-mean Gaussian vector, described by its covariance matrix and a label
/// per coordinate. Labels name blocks in error messages and let callers
/// address coordinates without tracking raw indices.
#[derive(Debug, Clone)]
pub struct GaussianVector {
    labels: Vec<String>,
    cov: DMatrix<f64>,
}

impl GaussianVector {
    /// Validates squareness, finiteness, symmetry to within
    /// [`SYMMETRY_TOLERANCE`], and positive semidefiniteness to within
    /// [`PSD_TOLERANCE`] (checked via symmetric eigenvalues).
    pub fn new(labels: Vec<String>, cov: DMatrix<f64>) -> Result<Self, InfoError> {
        if cov.nrows() != cov.ncols() {
            return Err(InfoError::NotSquare {
                rows: cov.nrows(),
                cols: cov.ncols(),
            });
        }
        if labels.len() != cov.nrows() {
            return Err(InfoError::LabelCountMismatch {
                labels: labels.len(),
                dim: cov.nrows(),
            });
        }
        for row in 0..cov.nrows() {
            for col in 0..cov.ncols() {
                if !cov[(row, col)].is_finite() {
                    return Err(InfoError::NonFiniteEntry { row, col });
                }
            }
        }
        for row in 0..cov.nrows() {
            for col in (row + 1)..cov.ncols() {
                let delta = (cov[(row, col)] - cov[(col, row)]).abs();
                if delta > SYMMETRY_TOLERANCE {
                    return Err(InfoError::Asymmetric { row, col, delta });
                }
            }
        }
        // Work on the symmetrized matrix so eigenvalue and Cholesky checks
        // downstream see an exactly symmetric input.
        let sym = (&cov + cov.transpose()) * 0.5;
        if sym.nrows() > 0 {
            let eigen = sym.clone().symmetric_eigenvalues();
            let min = eigen.iter().cloned().fold(f64::INFINITY, f64::min);
            if min < PSD_TOLERANCE {
                return Err(InfoError::NotPositiveSemidefinite { eigenvalue: min });
            }
        }
        Ok(Self { labels, cov: sym })
    }

    pub fn dim(&self) -> usize {
        self.cov.nrows()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Index of the coordinate with the given label, if present.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    fn check_vars(&self, vars: &[usize]) -> Result<(), InfoError> {
        for &v in vars {
            if v >= self.dim() {
                return Err(InfoError::VariableOutOfRange {
                    index: v,
                    count: self.dim(),
                });
            }
        }
        Ok(())
    }

    /// Natural-log determinant of the sub-block on `vars`, with `jitter`
    /// added along the diagonal before the Cholesky factorization. An empty
    /// block has log-det 0 (determinant 1).
    fn ln_det_block(&self, vars: &[usize], jitter: f64) -> Result<f64, InfoError> {
        if vars.is_empty() {
            return Ok(0.0);
        }
        let n = vars.len();
        let mut block = DMatrix::zeros(n, n);
        for (i, &vi) in vars.iter().enumerate() {
            for (j, &vj) in vars.iter().enumerate() {
                block[(i, j)] = self.cov[(vi, vj)];
            }
            block[(i, i)] += jitter;
        }
        let chol = nalgebra::Cholesky::new(block).ok_or_else(|| InfoError::SingularBlock {
            block: vars
                .iter()
                .map(|&v| self.labels[v].as_str())
                .collect::<Vec<_>>()
                .join(", "),
        })?;
        Ok(chol
            .l()
            .diagonal()
            .iter()
            .map(|&d| 2.0 * d.ln())
            .sum())
    }

    /// Conditional mutual information I(A;B|C) in bits:
    ///
    /// I(A;B|C) = 1/2 log2( det S_AC det S_BC / (det S_C det S_ABC) )
    ///
    /// with det of an empty block taken as 1. All four log-dets share one
    /// jitter, [`JITTER_SCALE`] times the largest diagonal entry of the full
    /// covariance, so ridge contributions from degenerate directions cancel
    /// between numerator and denominator. `a` and `b` must be non-empty and
    /// the three sets pairwise disjoint; tiny negative results are clamped
    /// to zero.
    pub fn mutual_information(
        &self,
        a: &[usize],
        b: &[usize],
        c: &[usize],
    ) -> Result<f64, InfoError> {
        if a.is_empty() || b.is_empty() {
            return Err(InfoError::EmptyVariableSet);
        }
        self.check_vars(a)?;
        self.check_vars(b)?;
        self.check_vars(c)?;
        let mut seen = vec![false; self.dim()];
        for &v in a.iter().chain(b).chain(c) {
            if seen[v] {
                return Err(InfoError::OverlappingVariables { index: v });
            }
            seen[v] = true;
        }
        let max_diag = self
            .cov
            .diagonal()
            .iter()
            .cloned()
            .fold(0.0f64, f64::max);
        let jitter = JITTER_SCALE * max_diag;
        let join = |x: &[usize], y: &[usize]| -> Vec<usize> {
            x.iter().chain(y).copied().collect()
        };
        let ld_ac = self.ln_det_block(&join(a, c), jitter)?;
        let ld_bc = self.ln_det_block(&join(b, c), jitter)?;
        let ld_c = self.ln_det_block(c, jitter)?;
        let ld_abc = self.ln_det_block(&join(&join(a, b), c), jitter)?;
        Ok(((ld_ac + ld_bc - ld_c - ld_abc) / (2.0 * LN_2)).max(0.0))
    }
}
