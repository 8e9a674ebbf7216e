//! P-matrix tests.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Largest dimension for which every principal minor is enumerated.
pub const MAX_EXACT_DIM: usize = 16;
const SAMPLED_MINORS: u64 = 20_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum PMatrixResult {
    /// All principal minors positive, or a sufficient condition holds.
    PMatrix { method: PMatrixMethod },
    /// The principal minor on `indices` (0-based) is not positive.
    NotPMatrix { indices: Vec<usize>, determinant: f64 },
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PMatrixMethod {
    Enumeration,
    PositiveDefiniteSymmetricPart,
    MMatrix,
}

impl PMatrixResult {
    pub fn is_p_matrix(&self) -> bool {
        matches!(self, PMatrixResult::PMatrix { .. })
    }
}

pub fn is_p_matrix(a: &DMatrix<f64>) -> Result<PMatrixResult> {
    let d = a.nrows();
    if d != a.ncols() {
        return Err(Error::InvalidGame(format!(
            "P-matrix test needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if d <= MAX_EXACT_DIM {
        return Ok(enumerate(a));
    }
    if linalg::min_sym_eigen(a).0 > 0.0 {
        return Ok(PMatrixResult::PMatrix {
            method: PMatrixMethod::PositiveDefiniteSymmetricPart,
        });
    }
    if is_z_matrix(a) && leading_minors_positive(a) {
        return Ok(PMatrixResult::PMatrix {
            method: PMatrixMethod::MMatrix,
        });
    }
    // Sample principal minors: all singletons and pairs, then random subsets.
    for i in 0..d {
        if a[(i, i)] <= 0.0 {
            return Ok(PMatrixResult::NotPMatrix {
                indices: vec![i],
                determinant: a[(i, i)],
            });
        }
    }
    let mut scan = Scan { undecided: false };
    for i in 0..d {
        for j in (i + 1)..d {
            if let Some(r) = scan.visit(a, vec![i, j]) {
                return Ok(r);
            }
        }
    }
    for s in 0..SAMPLED_MINORS {
        let u = linalg::halton_point(s, d, 1);
        let idx: Vec<usize> = (0..d).filter(|&k| u[k] < 0.5).collect();
        if idx.is_empty() {
            continue;
        }
        if let Some(r) = scan.visit(a, idx) {
            return Ok(r);
        }
    }
    if let Some(r) = scan.visit(a, (0..d).collect()) {
        return Ok(r);
    }
    Ok(PMatrixResult::Inconclusive)
}

enum Minor {
    Positive,
    /// Within rounding of zero relative to the Hadamard bound.
    Undecided,
    NonPositive(PMatrixResult),
}

fn check_minor(a: &DMatrix<f64>, idx: Vec<usize>) -> Minor {
    let sub = linalg::principal_submatrix(a, &idx);
    let det = linalg::determinant(&sub);
    let hadamard: f64 = sub.row_iter().map(|r| r.norm()).product();
    let tol = linalg::EIG_TOL * hadamard;
    if det > tol {
        Minor::Positive
    } else if det < -tol || hadamard == 0.0 {
        Minor::NonPositive(PMatrixResult::NotPMatrix {
            indices: idx,
            determinant: det,
        })
    } else {
        Minor::Undecided
    }
}

/// Scans minors in order; the first non-positive one is the witness.
struct Scan {
    undecided: bool,
}

impl Scan {
    fn visit(&mut self, a: &DMatrix<f64>, idx: Vec<usize>) -> Option<PMatrixResult> {
        match check_minor(a, idx) {
            Minor::Positive => None,
            Minor::Undecided => {
                self.undecided = true;
                None
            }
            Minor::NonPositive(r) => Some(r),
        }
    }
}

fn enumerate(a: &DMatrix<f64>) -> PMatrixResult {
    let d = a.nrows();
    // Smallest failing minors first: iterate masks by popcount.
    let mut masks: Vec<u32> = (1..(1u32 << d)).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    let mut scan = Scan { undecided: false };
    for m in masks {
        let idx: Vec<usize> = (0..d).filter(|&k| m & (1 << k) != 0).collect();
        if let Some(r) = scan.visit(a, idx) {
            return r;
        }
    }
    if scan.undecided {
        PMatrixResult::Inconclusive
    } else {
        PMatrixResult::PMatrix {
            method: PMatrixMethod::Enumeration,
        }
    }
}

pub fn is_z_matrix(a: &DMatrix<f64>) -> bool {
    (0..a.nrows()).all(|i| (0..a.ncols()).all(|j| i == j || a[(i, j)] <= 0.0))
}

fn leading_minors_positive(a: &DMatrix<f64>) -> bool {
    (1..=a.nrows()).all(|k| linalg::determinant(&a.view((0, 0), (k, k)).into_owned()) > 0.0)
}
