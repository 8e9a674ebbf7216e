//! Weighted influence networks and their spectral measures.
//!
//! Entry `(i, j)` of the weight matrix is the influence of agent `j` on
//! agent `i`. Weights are non-negative and the diagonal is zero.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Default absolute tolerance used to decide whether a network is symmetric.
pub const DEFAULT_SYM_TOL: f64 = 1e-12;

/// Named network generators plus the explicit-matrix escape hatch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NetworkKind {
    Complete {
        n: usize,
        #[serde(default = "unit")]
        weight: f64,
    },
    UndirectedRing {
        n: usize,
        #[serde(default = "unit")]
        weight: f64,
    },
    BipartiteComplete {
        left: usize,
        right: usize,
        #[serde(default = "unit")]
        weight: f64,
    },
    /// Two in-neighbours per node: each node listens to its ring neighbours,
    /// except the last two nodes, which both listen to nodes 0 and 1.
    /// Needs `n >= 4`.
    DirectedRegular {
        n: usize,
        #[serde(default = "unit")]
        weight: f64,
    },
    /// Every node except the hub is influenced by the hub (node 0).
    AsymmetricStar {
        n: usize,
        #[serde(default = "unit")]
        weight: f64,
    },
    /// Hub in column 0 with `leader_weight`; all other off-diagonal entries
    /// equal `follower_weight`.
    TrendSetter {
        #[serde(default = "four")]
        n: usize,
        #[serde(default = "unit")]
        leader_weight: f64,
        #[serde(default = "tenth")]
        follower_weight: f64,
    },
    Explicit { matrix: Vec<Vec<f64>> },
}

fn unit() -> f64 {
    1.0
}
fn four() -> usize {
    4
}
fn tenth() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    weights: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasures {
    pub spectral_norm: f64,
    pub infinity_norm: f64,
    pub min_eigenvalue: Option<f64>,
    pub is_symmetric: bool,
}

impl Network {
    /// Validates and wraps a weight matrix.
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        let (r, c) = weights.shape();
        if r != c {
            return Err(Error::InvalidNetwork(format!("non-square matrix {r}x{c}")));
        }
        if r == 0 {
            return Err(Error::InvalidNetwork("network needs at least one agent".into()));
        }
        for i in 0..r {
            for j in 0..c {
                let v = weights[(i, j)];
                if !v.is_finite() {
                    return Err(Error::InvalidNetwork(format!(
                        "non-finite entry at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
                if i == j && v != 0.0 {
                    return Err(Error::InvalidNetwork(format!(
                        "nonzero diagonal entry ({}, {}) = {v}",
                        i + 1,
                        j + 1
                    )));
                }
                if v < 0.0 {
                    return Err(Error::InvalidNetwork(format!(
                        "negative entry ({}, {}) = {v}; mixed-sign externalities are not supported",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self { weights })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::InvalidNetwork(format!(
                "non-square matrix: row {} has {} entries, expected {n}",
                i + 1,
                r.len()
            )));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn generate(kind: &NetworkKind) -> Result<Self> {
        let check_weight = |w: f64| {
            if w.is_finite() && w >= 0.0 {
                Ok(w)
            } else {
                Err(Error::InvalidNetwork(format!("invalid edge weight {w}")))
            }
        };
        let check_size = |n: usize| {
            if n >= 1 {
                Ok(n)
            } else {
                Err(Error::InvalidNetwork("network needs at least one agent".into()))
            }
        };
        let g = match *kind {
            NetworkKind::Complete { n, weight } => {
                let (n, w) = (check_size(n)?, check_weight(weight)?);
                DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { w })
            }
            NetworkKind::UndirectedRing { n, weight } => {
                let (n, w) = (check_size(n)?, check_weight(weight)?);
                let mut g = DMatrix::zeros(n, n);
                if n > 1 {
                    for i in 0..n {
                        g[(i, (i + 1) % n)] = w;
                        g[(i, (i + n - 1) % n)] = w;
                    }
                }
                g
            }
            NetworkKind::BipartiteComplete { left, right, weight } => {
                let n = check_size(left + right)?;
                let w = check_weight(weight)?;
                DMatrix::from_fn(n, n, |i, j| if (i < left) != (j < left) { w } else { 0.0 })
            }
            NetworkKind::DirectedRegular { n, weight } => {
                if n < 4 {
                    return Err(Error::InvalidNetwork(
                        "directed_regular needs at least 4 agents".into(),
                    ));
                }
                let w = check_weight(weight)?;
                let mut g = DMatrix::zeros(n, n);
                for i in 0..n {
                    g[(i, (i + 1) % n)] = w;
                    g[(i, (i + n - 1) % n)] = w;
                }
                for i in [n - 2, n - 1] {
                    g.row_mut(i).fill(0.0);
                    g[(i, 0)] = w;
                    g[(i, 1)] = w;
                }
                g
            }
            NetworkKind::AsymmetricStar { n, weight } => {
                let (n, w) = (check_size(n)?, check_weight(weight)?);
                DMatrix::from_fn(n, n, |i, j| if j == 0 && i != 0 { w } else { 0.0 })
            }
            NetworkKind::TrendSetter {
                n,
                leader_weight,
                follower_weight,
            } => {
                let n = check_size(n)?;
                let (lw, fw) = (check_weight(leader_weight)?, check_weight(follower_weight)?);
                DMatrix::from_fn(n, n, |i, j| match (i == j, j == 0 && i != 0) {
                    (true, _) => 0.0,
                    (false, true) => lw,
                    (false, false) => fw,
                })
            }
            NetworkKind::Explicit { ref matrix } => return Self::from_rows(matrix),
        };
        Self::new(g)
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(DMatrix::zeros(n, n))
    }

    pub fn n_agents(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.weights
            .row_iter()
            .map(|r| r.iter().cloned().collect())
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(|&v| v == 0.0)
    }

    pub fn max_asymmetry(&self) -> f64 {
        linalg::max_asymmetry(&self.weights)
    }

    pub fn is_symmetric(&self, sym_tol: f64) -> bool {
        self.max_asymmetry() <= sym_tol
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.weights.row_iter().map(|r| r.sum()).collect()
    }

    /// `‖G‖₂`, the largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        linalg::spectral_norm(&self.weights)
    }

    /// `‖G‖∞`, the maximum row sum.
    pub fn infinity_norm(&self) -> f64 {
        linalg::infinity_norm(&self.weights)
    }

    /// Smallest eigenvalue of the symmetrized matrix. Fails for networks
    /// whose entrywise asymmetry exceeds `sym_tol`.
    pub fn min_eigenvalue(&self, sym_tol: f64) -> Result<f64> {
        let asym = self.max_asymmetry();
        if asym > sym_tol {
            return Err(Error::AsymmetricNetwork(asym));
        }
        Ok(linalg::min_sym_eigen(&self.weights).0)
    }

    pub fn spectral_measures(&self, sym_tol: f64) -> SpectralMeasures {
        let min_eigenvalue = self.min_eigenvalue(sym_tol).ok();
        SpectralMeasures {
            spectral_norm: self.spectral_norm(),
            infinity_norm: self.infinity_norm(),
            min_eigenvalue,
            is_symmetric: min_eigenvalue.is_some(),
        }
    }

    /// `G ⊗ I_n`.
    pub fn lifted(&self, n: usize) -> DMatrix<f64> {
        linalg::kron_identity(&self.weights, n)
    }

    /// Stacked neighbour aggregate `zⁱ = Σⱼ G_ij xʲ` for a flat profile with
    /// blocks of size `n`.
    pub fn aggregate(&self, x: &DVector<f64>, n: usize) -> DVector<f64> {
        let agents = self.n_agents();
        let mut z = DVector::zeros(agents * n);
        for i in 0..agents {
            for j in 0..agents {
                let w = self.weights[(i, j)];
                if w != 0.0 {
                    for k in 0..n {
                        z[i * n + k] += w * x[j * n + k];
                    }
                }
            }
        }
        z
    }

    /// Aggregate seen by agent `i` only.
    pub fn aggregate_for(&self, i: usize, x: &DVector<f64>, n: usize) -> DVector<f64> {
        let mut z = DVector::zeros(n);
        for j in 0..self.n_agents() {
            let w = self.weights[(i, j)];
            if w != 0.0 {
                for k in 0..n {
                    z[k] += w * x[j * n + k];
                }
            }
        }
        z
    }

    /// Returns a copy with entry `(i, j)` replaced. The result is re-validated.
    pub fn with_weight(&self, i: usize, j: usize, value: f64) -> Result<Self> {
        let mut g = self.weights.clone();
        g[(i, j)] = value;
        Self::new(g)
    }
}
