//! JSON run configuration.
//!
//! Agents and coordinates are 1-based wherever the user names them.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{ConstraintSet, Family, GameSpec, RaceKind};
use crate::network::{Network, NetworkKind, DEFAULT_SYM_TOL};
use crate::sensitivity::ParamSelector;
use crate::solvers::DynamicsMode;

/// One value shared by every agent, or one value per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerAgent<T> {
    Each(Vec<T>),
    One(T),
}

impl<T: Clone> PerAgent<T> {
    pub fn expand(&self, agents: usize, what: &str) -> Result<Vec<T>> {
        match self {
            PerAgent::One(v) => Ok(vec![v.clone(); agents]),
            PerAgent::Each(v) if v.len() == agents => Ok(v.clone()),
            PerAgent::Each(v) => Err(Error::Config(format!(
                "{what}: expected {agents} per-agent entries, got {}",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintConfig {
    Unconstrained,
    NonnegOrthant,
    /// `null` bounds are infinite.
    Box {
        lower: Vec<Option<f64>>,
        upper: Vec<Option<f64>>,
    },
    BoxWithBudget {
        lower: Vec<Option<f64>>,
        upper: Vec<Option<f64>>,
        budget: f64,
    },
    /// `B y ≤ b`, `H y = h` with row-major matrices.
    Polyhedron {
        #[serde(default)]
        b_mat: Vec<Vec<f64>>,
        #[serde(default)]
        b_vec: Vec<f64>,
        #[serde(default)]
        h_mat: Vec<Vec<f64>>,
        #[serde(default)]
        h_vec: Vec<f64>,
    },
}

fn bounds(v: &[Option<f64>], inf: f64) -> Vec<f64> {
    v.iter().map(|b| b.unwrap_or(inf)).collect()
}

fn matrix(rows: &[Vec<f64>], ncols: usize, what: &str) -> Result<DMatrix<f64>> {
    if let Some(r) = rows.iter().position(|r| r.len() != ncols) {
        return Err(Error::Config(format!(
            "{what}: row {} has {} entries, expected {ncols}",
            r + 1,
            rows[r].len()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

impl ConstraintConfig {
    pub fn build(&self, n: usize) -> Result<ConstraintSet> {
        let set = match self {
            ConstraintConfig::Unconstrained => ConstraintSet::Unconstrained,
            ConstraintConfig::NonnegOrthant => ConstraintSet::NonnegOrthant,
            ConstraintConfig::Box { lower, upper } => ConstraintSet::Box {
                lower: DVector::from_vec(bounds(lower, f64::NEG_INFINITY)),
                upper: DVector::from_vec(bounds(upper, f64::INFINITY)),
            },
            ConstraintConfig::BoxWithBudget {
                lower,
                upper,
                budget,
            } => ConstraintSet::box_with_budget(
                bounds(lower, f64::NEG_INFINITY),
                bounds(upper, f64::INFINITY),
                *budget,
            )?,
            ConstraintConfig::Polyhedron {
                b_mat,
                b_vec,
                h_mat,
                h_vec,
            } => ConstraintSet::Polyhedron {
                b_mat: matrix(b_mat, n, "inequality matrix")?,
                b_vec: DVector::from_column_slice(b_vec),
                h_mat: matrix(h_mat, n, "equality matrix")?,
                h_vec: DVector::from_column_slice(h_vec),
            },
        };
        set.validate(n)?;
        Ok(set)
    }

    pub fn from_set(set: &ConstraintSet) -> Self {
        let opt = |v: &DVector<f64>| -> Vec<Option<f64>> {
            v.iter().map(|b| b.is_finite().then_some(*b)).collect()
        };
        match set {
            ConstraintSet::Unconstrained => ConstraintConfig::Unconstrained,
            ConstraintSet::NonnegOrthant => ConstraintConfig::NonnegOrthant,
            ConstraintSet::Box { lower, upper } => ConstraintConfig::Box {
                lower: opt(lower),
                upper: opt(upper),
            },
            ConstraintSet::Polyhedron {
                b_mat,
                b_vec,
                h_mat,
                h_vec,
            } => ConstraintConfig::Polyhedron {
                b_mat: rows_of(b_mat),
                b_vec: b_vec.iter().cloned().collect(),
                h_mat: rows_of(h_mat),
                h_vec: h_vec.iter().cloned().collect(),
            },
        }
    }
}

fn default_constraints() -> PerAgent<ConstraintConfig> {
    PerAgent::One(ConstraintConfig::NonnegOrthant)
}

fn build_constraints(c: &PerAgent<ConstraintConfig>, agents: usize, n: usize) -> Result<Vec<ConstraintSet>> {
    c.expand(agents, "constraints")?
        .iter()
        .map(|c| c.build(n))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GameConfig {
    /// `½x² + (kⁱzⁱ − cⁱ)x`.
    ScalarLq {
        network: NetworkKind,
        k: PerAgent<f64>,
        intercept: PerAgent<f64>,
        #[serde(default = "default_constraints")]
        constraints: PerAgent<ConstraintConfig>,
    },
    /// `½xᵀQx + (Kz + a)ᵀx`.
    LinearQuadratic {
        network: NetworkKind,
        n: usize,
        q: PerAgent<Vec<Vec<f64>>>,
        k: PerAgent<Vec<Vec<f64>>>,
        a: PerAgent<Vec<f64>>,
        #[serde(default = "default_constraints")]
        constraints: PerAgent<ConstraintConfig>,
    },
    Races {
        network: NetworkKind,
        gamma: f64,
        lower: PerAgent<f64>,
        upper: PerAgent<f64>,
    },
    MultiActivity {
        network: NetworkKind,
        intercept_a: PerAgent<f64>,
        intercept_b: PerAgent<f64>,
        beta: PerAgent<f64>,
        delta: f64,
        mu: f64,
        #[serde(default = "default_constraints")]
        constraints: PerAgent<ConstraintConfig>,
    },
}

impl GameConfig {
    pub fn network(&self) -> &NetworkKind {
        match self {
            GameConfig::ScalarLq { network, .. }
            | GameConfig::LinearQuadratic { network, .. }
            | GameConfig::Races { network, .. }
            | GameConfig::MultiActivity { network, .. } => network,
        }
    }

    pub fn build(&self) -> Result<GameSpec> {
        let net = Network::generate(self.network())?;
        let agents = net.n_agents();
        match self {
            GameConfig::ScalarLq {
                k,
                intercept,
                constraints,
                ..
            } => {
                let k = k.expand(agents, "k")?;
                let c = intercept.expand(agents, "intercept")?;
                let spec = crate::games::scalar_lq(net, &k, &c)?;
                spec.with_constraints(build_constraints(constraints, agents, 1)?)
            }
            GameConfig::LinearQuadratic {
                n,
                q,
                k,
                a,
                constraints,
                ..
            } => {
                let n = *n;
                let q = q
                    .expand(agents, "q")?
                    .iter()
                    .map(|m| matrix(m, n, "q"))
                    .collect::<Result<Vec<_>>>()?;
                let k = k
                    .expand(agents, "k")?
                    .iter()
                    .map(|m| matrix(m, n, "k"))
                    .collect::<Result<Vec<_>>>()?;
                let a = a
                    .expand(agents, "a")?
                    .into_iter()
                    .map(DVector::from_vec)
                    .collect();
                GameSpec::new(
                    net,
                    n,
                    Family::LinearQuadratic { q, k, a },
                    build_constraints(constraints, agents, n)?,
                )
            }
            GameConfig::Races {
                gamma,
                lower,
                upper,
                ..
            } => crate::games::races(
                net,
                *gamma,
                &lower.expand(agents, "lower")?,
                &upper.expand(agents, "upper")?,
            ),
            GameConfig::MultiActivity {
                intercept_a,
                intercept_b,
                beta,
                delta,
                mu,
                constraints,
                ..
            } => GameSpec::new(
                net,
                2,
                Family::MultiActivity {
                    intercept_a: intercept_a.expand(agents, "intercept_a")?,
                    intercept_b: intercept_b.expand(agents, "intercept_b")?,
                    beta: beta.expand(agents, "beta")?,
                    delta: *delta,
                    mu: *mu,
                },
                build_constraints(constraints, agents, 2)?,
            ),
        }
    }

    /// Explicit configuration that rebuilds `spec` exactly.
    pub fn from_spec(spec: &GameSpec) -> Result<Self> {
        let network = NetworkKind::Explicit {
            matrix: spec.network().to_rows(),
        };
        let constraints = PerAgent::Each(
            spec.constraints()
                .iter()
                .map(ConstraintConfig::from_set)
                .collect(),
        );
        Ok(match spec.family() {
            Family::LinearQuadratic { q, k, a } => GameConfig::LinearQuadratic {
                network,
                n: spec.strategy_dim(),
                q: PerAgent::Each(q.iter().map(rows_of).collect()),
                k: PerAgent::Each(k.iter().map(rows_of).collect()),
                a: PerAgent::Each(a.iter().map(|v| v.iter().cloned().collect()).collect()),
                constraints,
            },
            Family::Races {
                lower,
                upper,
                response: RaceKind::Quadratic { gamma },
            } => GameConfig::Races {
                network,
                gamma: *gamma,
                lower: PerAgent::Each(lower.clone()),
                upper: PerAgent::Each(upper.clone()),
            },
            Family::MultiActivity {
                intercept_a,
                intercept_b,
                beta,
                delta,
                mu,
            } => GameConfig::MultiActivity {
                network,
                intercept_a: PerAgent::Each(intercept_a.clone()),
                intercept_b: PerAgent::Each(intercept_b.clone()),
                beta: PerAgent::Each(beta.clone()),
                delta: *delta,
                mu: *mu,
                constraints,
            },
            _ => {
                return Err(Error::Unsupported(
                    "games with callback responses cannot be written as configuration".into(),
                ))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    #[serde(default = "default_sym_tol")]
    pub sym_tol: f64,
}

fn default_sym_tol() -> f64 {
    DEFAULT_SYM_TOL
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            sym_tol: DEFAULT_SYM_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    /// Starting profiles; the five deterministic defaults when absent.
    #[serde(default)]
    pub x0: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsRunConfig {
    pub modes: Vec<DynamicsMode>,
    /// Starting profile; the projection of `0` onto `X` when absent.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub residual_tol: Option<f64>,
    #[serde(default)]
    pub record_every: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "target", rename_all = "snake_case")]
pub enum SweepTarget {
    Gamma,
    Delta,
    Mu,
    /// Weight of the edge `(row, col)`, 1-based.
    Edge { row: usize, col: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepTarget,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    /// Brute-force grid points per coordinate.
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    /// Search box for unbounded strategy sets.
    #[serde(default)]
    pub bounds: Option<(Vec<f64>, Vec<f64>)>,
}

fn default_resolution() -> usize {
    200
}

impl SweepConfig {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(Error::Config("sweep range must be finite".into()));
        }
        if self.steps < 2 {
            return Err(Error::Config(format!(
                "sweep needs at least 2 steps, got {}",
                self.steps
            )));
        }
        let m = (self.steps - 1) as f64;
        Ok((0..self.steps)
            .map(|k| self.start + (self.stop - self.start) * k as f64 / m)
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityConfig {
    pub parameter: ParamSelector,
    /// Start for the equilibrium search.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    #[serde(default)]
    pub activity_tol: Option<f64>,
    #[serde(default)]
    pub strict_tol: Option<f64>,
    /// Gradient Lipschitz constant for families without a closed form.
    #[serde(default)]
    pub l_const: Option<f64>,
}

fn default_fd_step() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub game: GameConfig,
    #[serde(default)]
    pub certify: CertifyConfig,
    #[serde(default)]
    pub solve: SolveConfig,
    #[serde(default)]
    pub dynamics: Option<DynamicsRunConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub sensitivity: Option<SensitivityConfig>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration is serializable")
    }
}
