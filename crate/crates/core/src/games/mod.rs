//! Network game specifications, the game Jacobian and best responses.
//!
//! Profiles are flat `(N·n)`-vectors, agent-major: agent `i` owns indices
//! `i·n .. (i+1)·n`.

pub mod constraints;
pub mod qp;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use constraints::ConstraintSet;
pub use qp::{project, solve_qp, QpSolution};

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::network::Network;

/// Fixed-point tolerance of the inner best-response loop for custom games.
pub const BR_TOL: f64 = 1e-10;
const SAMPLE_POINTS: u64 = 10_000;

/// Scalar response `φ` for races with its derivative.
pub trait RaceResponse: Send + Sync + fmt::Debug {
    fn phi(&self, agent: usize, z: f64) -> f64;
    fn dphi(&self, agent: usize, z: f64) -> f64;
}

/// User-defined cost gradients and block Hessians.
pub trait CustomFamily: Send + Sync + fmt::Debug {
    /// `∇_{xⁱ} Jⁱ(xⁱ, zⁱ)`.
    fn gradient(&self, agent: usize, xi: &DVector<f64>, zi: &DVector<f64>) -> DVector<f64>;
    /// `Dⁱ = ∇²_{xⁱ} Jⁱ`.
    fn own_hessian(&self, agent: usize, xi: &DVector<f64>, zi: &DVector<f64>) -> DMatrix<f64>;
    /// `Kⁱ = ∇²_{xⁱ zⁱ} Jⁱ`.
    fn cross_hessian(&self, agent: usize, xi: &DVector<f64>, zi: &DVector<f64>)
        -> DMatrix<f64>;
    /// Per-agent `(κ₁ⁱ, κ₂ⁱ)` if the user can bound them analytically.
    fn kappa_bounds(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        None
    }
}

#[derive(Debug, Clone)]
pub enum RaceKind {
    /// `φᵢ(z) = γ z (bᵢ − z)`.
    Quadratic { gamma: f64 },
    Custom(Arc<dyn RaceResponse>),
}

impl PartialEq for RaceKind {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (RaceKind::Quadratic { gamma: a }, RaceKind::Quadratic { gamma: b }) => a == b,
            (RaceKind::Custom(a), RaceKind::Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Family {
    /// Cost `½ xᵀQx + (Kz + a)ᵀx`.
    LinearQuadratic {
        q: Vec<DMatrix<f64>>,
        k: Vec<DMatrix<f64>>,
        a: Vec<DVector<f64>>,
    },
    /// Scalar effort on `[aⁱ, bⁱ]` with best response `aⁱ + φᵢ(zⁱ)` clipped.
    Races {
        lower: Vec<f64>,
        upper: Vec<f64>,
        response: RaceKind,
    },
    /// Two activities with payoff intercepts, own coupling `β` and network
    /// weights `δ` (within activity) and `μ` (across activities).
    MultiActivity {
        intercept_a: Vec<f64>,
        intercept_b: Vec<f64>,
        beta: Vec<f64>,
        delta: f64,
        mu: f64,
    },
    Custom(Arc<dyn CustomFamily>),
}

impl PartialEq for Family {
    fn eq(&self, other: &Self) -> bool {
        use Family::*;
        match (self, other) {
            (
                LinearQuadratic { q, k, a },
                LinearQuadratic {
                    q: q2,
                    k: k2,
                    a: a2,
                },
            ) => q == q2 && k == k2 && a == a2,
            (
                Races {
                    lower,
                    upper,
                    response,
                },
                Races {
                    lower: l2,
                    upper: u2,
                    response: r2,
                },
            ) => lower == l2 && upper == u2 && response == r2,
            (
                MultiActivity {
                    intercept_a,
                    intercept_b,
                    beta,
                    delta,
                    mu,
                },
                MultiActivity {
                    intercept_a: a2,
                    intercept_b: b2,
                    beta: be2,
                    delta: d2,
                    mu: m2,
                },
            ) => {
                intercept_a == a2 && intercept_b == b2 && beta == be2 && delta == d2 && mu == m2
            }
            (Custom(a), Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    network: Network,
    n: usize,
    family: Family,
    constraints: Vec<ConstraintSet>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianEval {
    pub f: DVector<f64>,
    pub grad: DMatrix<f64>,
    pub d_blocks: Vec<DMatrix<f64>>,
    pub k_blocks: Vec<DMatrix<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    Exact,
    UserSupplied,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaBounds {
    pub kappa1_per_agent: Vec<f64>,
    pub kappa2_per_agent: Vec<f64>,
    pub kappa1: f64,
    pub kappa2: f64,
    pub exactness: Exactness,
}

impl KappaBounds {
    pub fn new(k1: Vec<f64>, k2: Vec<f64>, exactness: Exactness) -> Self {
        let kappa1 = k1.iter().cloned().fold(f64::INFINITY, f64::min);
        let kappa2 = k2.iter().cloned().fold(0.0, f64::max);
        Self {
            kappa1_per_agent: k1,
            kappa2_per_agent: k2,
            kappa1,
            kappa2,
            exactness,
        }
    }

    pub fn certifying(&self) -> bool {
        self.exactness != Exactness::Sampled
    }
}

/// Scalar LQ helper for games written as `Bⁱ(z) = max(0, cⁱ − kⁱ z)`, i.e.
/// cost `½x² + (kⁱ z − cⁱ) x` on `x ≥ 0`.
pub fn scalar_lq(network: Network, k: &[f64], intercept: &[f64]) -> Result<GameSpec> {
    let n_agents = network.n_agents();
    check_dim("scalar LQ weights", n_agents, k.len())?;
    check_dim("scalar LQ intercepts", n_agents, intercept.len())?;
    GameSpec::new(
        network,
        1,
        Family::LinearQuadratic {
            q: vec![DMatrix::identity(1, 1); n_agents],
            k: k.iter().map(|&v| DMatrix::from_element(1, 1, v)).collect(),
            a: intercept.iter().map(|&v| DVector::from_element(1, -v)).collect(),
        },
        vec![ConstraintSet::NonnegOrthant; n_agents],
    )
}

/// Races with the built-in quadratic response; constraints are the boxes
/// `[aⁱ, bⁱ]`.
pub fn races(network: Network, gamma: f64, lower: &[f64], upper: &[f64]) -> Result<GameSpec> {
    GameSpec::new(
        network,
        1,
        Family::Races {
            lower: lower.to_vec(),
            upper: upper.to_vec(),
            response: RaceKind::Quadratic { gamma },
        },
        vec![],
    )
}

impl GameSpec {
    /// Validates the family against the network and fills the constraints
    /// that a family fixes by construction (races boxes).
    pub fn new(
        network: Network,
        n: usize,
        family: Family,
        constraints: Vec<ConstraintSet>,
    ) -> Result<Self> {
        let agents = network.n_agents();
        if n == 0 {
            return Err(Error::InvalidGame("strategy dimension must be positive".into()));
        }
        let constraints = match &family {
            Family::LinearQuadratic { q, k, a } => {
                check_dim("Q blocks", agents, q.len())?;
                check_dim("K blocks", agents, k.len())?;
                check_dim("a vectors", agents, a.len())?;
                for i in 0..agents {
                    check_dim("Q rows", n, q[i].nrows())?;
                    check_dim("Q columns", n, q[i].ncols())?;
                    check_dim("K rows", n, k[i].nrows())?;
                    check_dim("K columns", n, k[i].ncols())?;
                    check_dim("a length", n, a[i].len())?;
                    if linalg::max_asymmetry(&q[i]) > 1e-12 {
                        return Err(Error::InvalidGame(format!("Q of agent {} is not symmetric", i + 1)));
                    }
                    if linalg::min_sym_eigen(&q[i]).0 <= 0.0 {
                        return Err(Error::InvalidGame(format!(
                            "Q of agent {} is not positive definite",
                            i + 1
                        )));
                    }
                }
                constraints
            }
            Family::Races {
                lower,
                upper,
                response,
            } => {
                if n != 1 {
                    return Err(Error::InvalidGame("races have scalar strategies".into()));
                }
                check_dim("races lower bounds", agents, lower.len())?;
                check_dim("races upper bounds", agents, upper.len())?;
                for i in 0..agents {
                    if !(0.0 < lower[i] && lower[i] < upper[i] && upper[i].is_finite()) {
                        return Err(Error::InvalidGame(format!(
                            "races need 0 < a < b; agent {} has a = {}, b = {}",
                            i + 1,
                            lower[i],
                            upper[i]
                        )));
                    }
                }
                if let RaceKind::Quadratic { gamma } = response {
                    if !(*gamma > 0.0 && gamma.is_finite()) {
                        return Err(Error::InvalidGame(format!("gamma must be positive, got {gamma}")));
                    }
                }
                let boxes: Vec<ConstraintSet> = (0..agents)
                    .map(|i| ConstraintSet::Box {
                        lower: DVector::from_element(1, lower[i]),
                        upper: DVector::from_element(1, upper[i]),
                    })
                    .collect();
                if !constraints.is_empty() && constraints != boxes {
                    return Err(Error::InvalidGame(
                        "races constraints are the boxes [a, b] and cannot be overridden".into(),
                    ));
                }
                boxes
            }
            Family::MultiActivity {
                intercept_a,
                intercept_b,
                beta,
                ..
            } => {
                if n != 2 {
                    return Err(Error::InvalidGame("multi-activity games have n = 2".into()));
                }
                check_dim("activity A intercepts", agents, intercept_a.len())?;
                check_dim("activity B intercepts", agents, intercept_b.len())?;
                check_dim("beta", agents, beta.len())?;
                if let Some(i) = beta.iter().position(|b| !(b.abs() < 1.0)) {
                    return Err(Error::InvalidGame(format!(
                        "beta of agent {} must lie in (-1, 1)",
                        i + 1
                    )));
                }
                constraints
            }
            Family::Custom(_) => constraints,
        };
        check_dim("constraint sets", agents, constraints.len())?;
        for c in &constraints {
            c.validate(n)?;
        }
        Ok(Self {
            network,
            n,
            family,
            constraints,
        })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }
    pub fn n_agents(&self) -> usize {
        self.network.n_agents()
    }
    pub fn strategy_dim(&self) -> usize {
        self.n
    }
    pub fn dim(&self) -> usize {
        self.n * self.n_agents()
    }
    pub fn family(&self) -> &Family {
        &self.family
    }
    pub fn constraints(&self) -> &[ConstraintSet] {
        &self.constraints
    }

    pub fn with_network(&self, network: Network) -> Result<Self> {
        check_dim("network size", self.n_agents(), network.n_agents())?;
        Self::new(network, self.n, self.family.clone(), self.constraints.clone())
    }

    pub fn with_family(&self, family: Family) -> Result<Self> {
        let constraints = match family {
            Family::Races { .. } => vec![],
            _ => self.constraints.clone(),
        };
        Self::new(self.network.clone(), self.n, family, constraints)
    }

    pub fn with_constraints(&self, constraints: Vec<ConstraintSet>) -> Result<Self> {
        Self::new(self.network.clone(), self.n, self.family.clone(), constraints)
    }

    pub fn block<'a>(&self, x: &'a DVector<f64>, i: usize) -> nalgebra::DVectorView<'a, f64> {
        x.rows(i * self.n, self.n)
    }

    /// `(Qⁱ, Kⁱ, aⁱ)` for families with affine `F`.
    pub fn affine_blocks(&self) -> Option<(Vec<DMatrix<f64>>, Vec<DMatrix<f64>>, Vec<DVector<f64>>)> {
        match &self.family {
            Family::LinearQuadratic { q, k, a } => Some((q.clone(), k.clone(), a.clone())),
            Family::MultiActivity {
                intercept_a,
                intercept_b,
                beta,
                delta,
                mu,
            } => {
                let agents = self.n_agents();
                let q = beta
                    .iter()
                    .map(|&b| DMatrix::from_row_slice(2, 2, &[1.0, b, b, 1.0]))
                    .collect();
                let kb = DMatrix::from_row_slice(2, 2, &[-delta, -mu, -mu, -delta]);
                let a = (0..agents)
                    .map(|i| DVector::from_vec(vec![-intercept_a[i], -intercept_b[i]]))
                    .collect();
                Some((q, vec![kb; agents], a))
            }
            _ => None,
        }
    }

    /// Quadratic own-curvature blocks `Qⁱ` when the cost has the form
    /// `½ xᵀQx + f(z)ᵀx` (affine, multi-activity and races).
    pub fn q_blocks(&self) -> Option<Vec<DMatrix<f64>>> {
        match &self.family {
            Family::Races { .. } => Some(vec![DMatrix::identity(1, 1); self.n_agents()]),
            Family::Custom(_) => None,
            _ => self.affine_blocks().map(|(q, _, _)| q),
        }
    }

    pub fn check_profile(&self, x: &DVector<f64>) -> Result<()> {
        check_dim("strategy profile", self.dim(), x.len())
    }

    pub fn is_feasible(&self, x: &DVector<f64>, tol: f64) -> bool {
        (0..self.n_agents()).all(|i| self.constraints[i].contains(&self.block(x, i).into_owned(), tol))
    }

    pub fn neighbor_aggregate(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_profile(x)?;
        Ok(self.network.aggregate(x, self.n))
    }

    /// Agent `i`'s gradient `Fⁱ` at own strategy `xi` and aggregate `zi`.
    pub fn agent_gradient(&self, i: usize, xi: &DVector<f64>, zi: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(match &self.family {
            Family::Races {
                lower, response, ..
            } => DVector::from_element(1, xi[0] - lower[i] - self.phi(response, i, zi[0])),
            Family::Custom(c) => {
                let g = c.gradient(i, xi, zi);
                check_dim("custom gradient", self.n, g.len())?;
                g
            }
            _ => {
                let (q, k, a) = self.affine_blocks().expect("affine family");
                &q[i] * xi + &k[i] * zi + &a[i]
            }
        })
    }

    fn phi(&self, response: &RaceKind, i: usize, z: f64) -> f64 {
        match response {
            RaceKind::Quadratic { gamma } => {
                let Family::Races { upper, .. } = &self.family else { unreachable!() };
                gamma * z * (upper[i] - z)
            }
            RaceKind::Custom(r) => r.phi(i, z),
        }
    }

    fn dphi(&self, response: &RaceKind, i: usize, z: f64) -> f64 {
        match response {
            RaceKind::Quadratic { gamma } => {
                let Family::Races { upper, .. } = &self.family else { unreachable!() };
                gamma * (upper[i] - 2.0 * z)
            }
            RaceKind::Custom(r) => r.dphi(i, z),
        }
    }

    pub fn operator(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let z = self.neighbor_aggregate(x)?;
        let mut f = DVector::zeros(self.dim());
        for i in 0..self.n_agents() {
            let g = self.agent_gradient(
                i,
                &self.block(x, i).into_owned(),
                &z.rows(i * self.n, self.n).into_owned(),
            )?;
            f.rows_mut(i * self.n, self.n).copy_from(&g);
        }
        Ok(f)
    }

    /// `F(x)` and `∇F(x) = blockdiag(D) + blockdiag(K)(G ⊗ Iₙ)`.
    pub fn evaluate_jacobian(&self, x: &DVector<f64>) -> Result<JacobianEval> {
        let f = self.operator(x)?;
        let z = self.network.aggregate(x, self.n);
        let n = self.n;
        let agents = self.n_agents();
        let mut d_blocks = Vec::with_capacity(agents);
        let mut k_blocks = Vec::with_capacity(agents);
        for i in 0..agents {
            let (d, k) = match &self.family {
                Family::Races { response, .. } => (
                    DMatrix::identity(1, 1),
                    DMatrix::from_element(1, 1, -self.dphi(response, i, z[i])),
                ),
                Family::Custom(c) => {
                    let xi = self.block(x, i).into_owned();
                    let zi = z.rows(i * n, n).into_owned();
                    let d = c.own_hessian(i, &xi, &zi);
                    let k = c.cross_hessian(i, &xi, &zi);
                    check_dim("custom own Hessian rows", n, d.nrows())?;
                    check_dim("custom own Hessian columns", n, d.ncols())?;
                    check_dim("custom cross Hessian rows", n, k.nrows())?;
                    check_dim("custom cross Hessian columns", n, k.ncols())?;
                    (d, k)
                }
                _ => {
                    let (q, k, _) = self.affine_blocks().expect("affine family");
                    (q[i].clone(), k[i].clone())
                }
            };
            d_blocks.push(d);
            k_blocks.push(k);
        }
        let grad = linalg::block_diag(&d_blocks)
            + linalg::block_diag(&k_blocks) * self.network.lifted(n);
        Ok(JacobianEval {
            f,
            grad,
            d_blocks,
            k_blocks,
        })
    }

    /// Constant `∇F` for affine families.
    pub fn affine_gradient(&self) -> Option<DMatrix<f64>> {
        let (q, k, _) = self.affine_blocks()?;
        Some(linalg::block_diag(&q) + linalg::block_diag(&k) * self.network.lifted(self.n))
    }

    /// Unique minimiser of `Jⁱ(·, zi)` over `Xⁱ`.
    pub fn best_response(&self, i: usize, zi: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.best_response_full(i, zi)?.y)
    }

    /// Best response together with the QP active set and multipliers.
    pub fn best_response_full(&self, i: usize, zi: &DVector<f64>) -> Result<QpSolution> {
        if i >= self.n_agents() {
            return Err(Error::InvalidGame(format!("agent index {} out of range", i + 1)));
        }
        check_dim("aggregate", self.n, zi.len())?;
        match &self.family {
            Family::Races {
                lower,
                upper,
                response,
            } => {
                // The clip at the lower bound only matters when φ < 0.
                let y = (lower[i] + self.phi(response, i, zi[0])).clamp(lower[i], upper[i]);
                let g = y - lower[i] - self.phi(response, i, zi[0]);
                let (mut active, mut lambda) = (vec![], vec![]);
                if y >= upper[i] {
                    active.push(0);
                    lambda.push((-g).max(0.0));
                } else if y <= lower[i] {
                    active.push(1);
                    lambda.push(g.max(0.0));
                }
                Ok(QpSolution {
                    y: DVector::from_element(1, y),
                    active,
                    lambda,
                    mu: DVector::zeros(0),
                })
            }
            Family::Custom(c) => self.custom_best_response(c.as_ref(), i, zi),
            _ => {
                let (q, k, a) = self.affine_blocks().expect("affine family");
                solve_qp(&q[i], &(&k[i] * zi + &a[i]), &self.constraints[i])
            }
        }
    }

    fn custom_best_response(
        &self,
        c: &dyn CustomFamily,
        i: usize,
        zi: &DVector<f64>,
    ) -> Result<QpSolution> {
        let set = &self.constraints[i];
        let mut y = project(&DVector::zeros(self.n), set)?.y;
        for _ in 0..20_000 {
            let d = c.own_hessian(i, &y, zi);
            let lmax = linalg::max_sym_eigenvalue(&d).max(1e-12);
            let step = 1.0 / lmax;
            let g = c.gradient(i, &y, zi);
            let next = project(&(&y - g * step), set)?;
            let moved = (&next.y - &y).norm();
            y = next.y;
            if moved / step <= BR_TOL {
                let g = c.gradient(i, &y, zi);
                return project(&(&y - g), set).map(|p| QpSolution { y, ..p });
            }
        }
        Err(Error::NotConverged(format!(
            "best response of agent {} did not reach tolerance {BR_TOL:e}",
            i + 1
        )))
    }

    /// Stacked best responses `B(x)`.
    pub fn best_response_map(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let z = self.neighbor_aggregate(x)?;
        let mut out = DVector::zeros(self.dim());
        for i in 0..self.n_agents() {
            let br = self.best_response(i, &z.rows(i * self.n, self.n).into_owned())?;
            out.rows_mut(i * self.n, self.n).copy_from(&br);
        }
        Ok(out)
    }

    /// Blockwise Euclidean projection onto `X`.
    pub fn project_profile(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_profile(v)?;
        let mut out = DVector::zeros(self.dim());
        for i in 0..self.n_agents() {
            let p = project(&self.block(v, i).into_owned(), &self.constraints[i])?;
            out.rows_mut(i * self.n, self.n).copy_from(&p.y);
        }
        Ok(out)
    }

    /// `‖x − Π_X[x − F(x)]‖₂`.
    pub fn natural_residual(&self, x: &DVector<f64>) -> Result<f64> {
        let f = self.operator(x)?;
        Ok((x - self.project_profile(&(x - f))?).norm())
    }

    /// Lyapunov value `F(x)ᵀ(x − B(x)) − ½‖x − B(x)‖²_Q` for costs with
    /// quadratic own curvature.
    pub fn lyapunov(&self, x: &DVector<f64>) -> Result<f64> {
        let q = self.q_blocks().ok_or_else(|| {
            Error::Unsupported("the Lyapunov value needs quadratic own costs".into())
        })?;
        let f = self.operator(x)?;
        let d = x - self.best_response_map(x)?;
        let qd = linalg::block_diag(&q) * &d;
        Ok(f.dot(&d) - 0.5 * d.dot(&qd))
    }

    /// Per-agent `(lower, upper)` boxes, when every set is a bounded box.
    pub fn bounding_box(&self) -> Option<(DVector<f64>, DVector<f64>)> {
        let mut lo = DVector::zeros(self.dim());
        let mut hi = DVector::zeros(self.dim());
        for i in 0..self.n_agents() {
            let (l, h) = self.constraints[i].as_box(self.n)?;
            if l.iter().chain(h.iter()).any(|v| !v.is_finite()) {
                return None;
            }
            lo.rows_mut(i * self.n, self.n).copy_from(&l);
            hi.rows_mut(i * self.n, self.n).copy_from(&h);
        }
        Some((lo, hi))
    }

    /// `κ₁`, `κ₂` bounds. Closed forms for the built-in families; custom
    /// games use user bounds or deterministic sampling over `strategy_box`
    /// (falling back to the constraint boxes).
    pub fn kappa_bounds(
        &self,
        strategy_box: Option<(&DVector<f64>, &DVector<f64>)>,
    ) -> Result<KappaBounds> {
        self.kappa_bounds_seeded(strategy_box, 0)
    }

    /// As [`GameSpec::kappa_bounds`], with `seed` shifting the
    /// low-discrepancy sequence used for sampled bounds.
    pub fn kappa_bounds_seeded(
        &self,
        strategy_box: Option<(&DVector<f64>, &DVector<f64>)>,
        seed: u64,
    ) -> Result<KappaBounds> {
        let agents = self.n_agents();
        match &self.family {
            Family::LinearQuadratic { q, k, .. } => Ok(KappaBounds::new(
                q.iter().map(|m| linalg::min_sym_eigen(m).0).collect(),
                k.iter().map(linalg::spectral_norm).collect(),
                Exactness::Exact,
            )),
            Family::MultiActivity {
                beta, delta, mu, ..
            } => Ok(KappaBounds::new(
                beta.iter().map(|b| 1.0 - b.abs()).collect(),
                vec![delta.abs() + mu.abs(); agents],
                Exactness::Exact,
            )),
            Family::Races {
                lower,
                upper,
                response,
            } => {
                let g = self.network.weights();
                let mut k2 = Vec::with_capacity(agents);
                let z_range = |i: usize| {
                    let lo: f64 = (0..agents).map(|j| g[(i, j)] * lower[j]).sum();
                    let hi: f64 = (0..agents).map(|j| g[(i, j)] * upper[j]).sum();
                    (lo, hi)
                };
                match response {
                    RaceKind::Quadratic { gamma } => {
                        for i in 0..agents {
                            // |φ′| is affine in z, so its maximum sits at an end.
                            let (lo, hi) = z_range(i);
                            let m = (upper[i] - 2.0 * lo).abs().max((upper[i] - 2.0 * hi).abs());
                            k2.push(gamma * m);
                        }
                        Ok(KappaBounds::new(vec![1.0; agents], k2, Exactness::Exact))
                    }
                    RaceKind::Custom(r) => {
                        for i in 0..agents {
                            let (lo, hi) = z_range(i);
                            let mut m: f64 = 0.0;
                            for s in 0..SAMPLE_POINTS {
                                let t = linalg::radical_inverse(s + 1 + seed, 2);
                                m = m.max(r.dphi(i, lo + t * (hi - lo)).abs());
                            }
                            m = m.max(r.dphi(i, lo).abs()).max(r.dphi(i, hi).abs());
                            k2.push(m);
                        }
                        Ok(KappaBounds::new(vec![1.0; agents], k2, Exactness::Sampled))
                    }
                }
            }
            Family::Custom(c) => {
                if let Some((k1, k2)) = c.kappa_bounds() {
                    check_dim("custom kappa1 bounds", agents, k1.len())?;
                    check_dim("custom kappa2 bounds", agents, k2.len())?;
                    return Ok(KappaBounds::new(k1, k2, Exactness::UserSupplied));
                }
                let own = self.bounding_box();
                let (lo, hi) = match (strategy_box, &own) {
                    (Some((l, h)), _) => (l.clone(), h.clone()),
                    (None, Some((l, h))) => (l.clone(), h.clone()),
                    (None, None) => {
                        return Err(Error::InvalidGame(
                            "custom game without kappa bounds needs a bounding box for sampling"
                                .into(),
                        ))
                    }
                };
                check_dim("sampling box", self.dim(), lo.len())?;
                let mut k1 = vec![f64::INFINITY; agents];
                let mut k2 = vec![0.0f64; agents];
                for s in 0..SAMPLE_POINTS {
                    let u = linalg::halton_point(s, self.dim(), seed);
                    let x = DVector::from_fn(self.dim(), |r, _| lo[r] + u[r] * (hi[r] - lo[r]));
                    let jac = self.evaluate_jacobian(&x)?;
                    for i in 0..agents {
                        k1[i] = k1[i].min(linalg::min_sym_eigen(&jac.d_blocks[i]).0);
                        k2[i] = k2[i].max(linalg::spectral_norm(&jac.k_blocks[i]));
                    }
                }
                Ok(KappaBounds::new(k1, k2, Exactness::Sampled))
            }
        }
    }
}
