//! Comparative statics of Nash equilibria: KKT multipliers, regularity,
//! the sensitivity formula and Lipschitz perturbation bounds.

mod lipschitz;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{Family, GameSpec, RaceKind};
use crate::linalg::{self, EIG_TOL};

pub use lipschitz::{delta_max, lipschitz_bound, lq_lipschitz_constant, LipschitzBound};

pub const DEFAULT_ACTIVITY_TOL: f64 = 1e-8;
pub const DEFAULT_STRICT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Inequality,
    Equality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveRow {
    pub agent: usize,
    /// Row index within the agent's inequality or equality system.
    pub row: usize,
    pub kind: RowKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSetData {
    /// Active inequality rows and all equality rows, embedded in `ℝ^{N·n}`.
    pub a_mat: DMatrix<f64>,
    pub a_rhs: DVector<f64>,
    pub rows: Vec<ActiveRow>,
    pub activity_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KktData {
    /// Multiplier of each active row, aligned with `active.rows`. Inactive
    /// inequalities carry zero multipliers and are not listed.
    pub multipliers: Vec<f64>,
    pub active: ActiveSetData,
    pub stationarity_residual: f64,
}

impl KktData {
    pub fn lambda(&self) -> Vec<f64> {
        self.select(RowKind::Inequality)
    }

    pub fn mu(&self) -> Vec<f64> {
        self.select(RowKind::Equality)
    }

    fn select(&self, kind: RowKind) -> Vec<f64> {
        self.active
            .rows
            .iter()
            .zip(&self.multipliers)
            .filter(|(r, _)| r.kind == kind)
            .map(|(_, &m)| m)
            .collect()
    }
}

/// Multipliers solving `Fⁱ(x*) + Bⁱᵀλⁱ + Hⁱᵀμⁱ = 0` on the active rows of
/// each agent, by least squares.
pub fn kkt_multipliers(spec: &GameSpec, xstar: &DVector<f64>, activity_tol: f64) -> Result<KktData> {
    spec.check_profile(xstar)?;
    let n = spec.strategy_dim();
    let d = spec.dim();
    let f = spec.operator(xstar)?;
    let mut rows = vec![];
    let mut a_rows: Vec<(usize, DVector<f64>, f64)> = vec![];
    let mut multipliers = vec![];
    let mut worst = 0.0f64;
    for (i, set) in spec.constraints().iter().enumerate() {
        let xi = xstar.rows(i * n, n).into_owned();
        let fi = f.rows(i * n, n).into_owned();
        let (b, bv) = set.inequalities(n);
        let (h, hv) = set.equalities(n);
        let mut local: Vec<(ActiveRow, DVector<f64>, f64)> = vec![];
        for k in 0..b.nrows() {
            let row = b.row(k).transpose();
            if (row.dot(&xi) - bv[k]).abs() <= activity_tol {
                local.push((ActiveRow { agent: i, row: k, kind: RowKind::Inequality }, row, bv[k]));
            }
        }
        for k in 0..h.nrows() {
            local.push((ActiveRow { agent: i, row: k, kind: RowKind::Equality }, h.row(k).transpose(), hv[k]));
        }
        let (m, resid) = if local.is_empty() {
            (DVector::zeros(0), fi.norm())
        } else {
            let mut at = DMatrix::zeros(n, local.len());
            for (c, (_, row, _)) in local.iter().enumerate() {
                at.set_column(c, row);
            }
            let m = linalg::least_squares(&at, &(-&fi))?;
            let resid = (&fi + &at * &m).norm();
            (m, resid)
        };
        worst = worst.max(resid);
        for (c, (r, row, rhs)) in local.into_iter().enumerate() {
            if r.kind == RowKind::Inequality && m[c] < -100.0 * activity_tol {
                return Err(Error::NotKktPoint(format!(
                    "agent {} has a negative multiplier {:e} on inequality row {}",
                    i + 1,
                    m[c],
                    r.row + 1
                )));
            }
            multipliers.push(if r.kind == RowKind::Inequality { m[c].max(0.0) } else { m[c] });
            rows.push(r);
            a_rows.push((i, row, rhs));
        }
    }
    if worst > 100.0 * activity_tol {
        return Err(Error::NotKktPoint(format!(
            "stationarity residual {worst:e} exceeds {:e}",
            100.0 * activity_tol
        )));
    }
    let mut a_mat = DMatrix::zeros(a_rows.len(), d);
    let mut a_rhs = DVector::zeros(a_rows.len());
    for (r, (i, row, rhs)) in a_rows.into_iter().enumerate() {
        for c in 0..n {
            a_mat[(r, i * n + c)] = row[c];
        }
        a_rhs[r] = rhs;
    }
    Ok(KktData {
        multipliers,
        active: ActiveSetData {
            a_mat,
            a_rhs,
            rows,
            activity_tol,
        },
        stationarity_residual: worst,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regularity {
    /// `∇F + ∇Fᵀ ≻ 0` at the equilibrium.
    pub second_order: bool,
    pub second_order_margin: f64,
    /// The active constraint matrix has full row rank.
    pub full_rank: bool,
    pub rank: usize,
    pub active_rows: usize,
    /// Every active inequality multiplier exceeds `strict_tol`.
    pub strict_complementarity: bool,
    /// Active inequalities that violate strict complementarity.
    pub degenerate: Vec<ActiveRow>,
}

impl Regularity {
    pub fn holds(&self) -> bool {
        self.second_order && self.full_rank && self.strict_complementarity
    }

    fn describe_failure(&self) -> String {
        let mut out = vec![];
        if !self.second_order {
            out.push(format!(
                "symmetrized gradient not positive definite (min eigenvalue {:e})",
                self.second_order_margin
            ));
        }
        if !self.full_rank {
            out.push(format!("active constraints have rank {} < {}", self.rank, self.active_rows));
        }
        for r in &self.degenerate {
            out.push(format!(
                "strict complementarity fails for agent {} on row {}",
                r.agent + 1,
                r.row + 1
            ));
        }
        out.join("; ")
    }
}

pub fn check_regularity(
    spec: &GameSpec,
    xstar: &DVector<f64>,
    kkt: &KktData,
    strict_tol: f64,
) -> Result<Regularity> {
    let grad = spec.evaluate_jacobian(xstar)?.grad;
    let margin = linalg::min_sym_eigen(&grad).0;
    let a = &kkt.active.a_mat;
    let rank = if a.nrows() == 0 { 0 } else { linalg::rank(a, 1e-10) };
    let degenerate: Vec<ActiveRow> = kkt
        .active
        .rows
        .iter()
        .zip(&kkt.multipliers)
        .filter(|(r, &m)| r.kind == RowKind::Inequality && !(m > strict_tol))
        .map(|(r, _)| *r)
        .collect();
    Ok(Regularity {
        second_order: margin > EIG_TOL * (1.0 + linalg::spectral_norm(&grad)),
        second_order_margin: margin,
        full_rank: rank == a.nrows(),
        rank,
        active_rows: a.nrows(),
        strict_complementarity: degenerate.is_empty(),
        degenerate,
    })
}

/// Which parameters `y` the sensitivity is taken with respect to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamSelector {
    /// Linear-quadratic intercepts `c = −a`, so `∇_c F = −I`.
    Intercept,
    /// Linear-quadratic linear cost term `a`, so `∇_a F = I`.
    LinearTerm,
    /// Races peer-effect strength `γ`.
    Gamma,
    /// Multi-activity intercepts `(a_Aⁱ, a_Bⁱ)` per agent.
    ActivityIntercepts,
}

impl ParamSelector {
    fn mismatch(self) -> Error {
        Error::Unsupported(format!("parameter selector {self:?} does not apply to this family"))
    }
}

/// Current value of the selected parameter vector.
pub fn parameters(spec: &GameSpec, sel: ParamSelector) -> Result<DVector<f64>> {
    match (sel, spec.family()) {
        (ParamSelector::Intercept | ParamSelector::LinearTerm, Family::LinearQuadratic { a, .. }) => {
            let sign = if sel == ParamSelector::Intercept { -1.0 } else { 1.0 };
            Ok(DVector::from_iterator(
                spec.dim(),
                a.iter().flat_map(|v| v.iter().map(move |x| sign * x)),
            ))
        }
        (ParamSelector::Gamma, Family::Races { response: RaceKind::Quadratic { gamma }, .. }) => {
            Ok(DVector::from_element(1, *gamma))
        }
        (
            ParamSelector::ActivityIntercepts,
            Family::MultiActivity {
                intercept_a,
                intercept_b,
                ..
            },
        ) => Ok(DVector::from_iterator(
            spec.dim(),
            intercept_a.iter().zip(intercept_b).flat_map(|(a, b)| [*a, *b]),
        )),
        _ => Err(sel.mismatch()),
    }
}

/// The same game with the selected parameters replaced by `y`.
pub fn with_parameters(spec: &GameSpec, sel: ParamSelector, y: &DVector<f64>) -> Result<GameSpec> {
    let expected = parameters(spec, sel)?.len();
    if y.len() != expected {
        return Err(Error::Dimension {
            what: "parameter vector",
            expected,
            got: y.len(),
        });
    }
    let n = spec.strategy_dim();
    let family = match spec.family().clone() {
        Family::LinearQuadratic { q, k, .. } => {
            let sign = if sel == ParamSelector::Intercept { -1.0 } else { 1.0 };
            let a = (0..spec.n_agents())
                .map(|i| y.rows(i * n, n).into_owned() * sign)
                .collect();
            Family::LinearQuadratic { q, k, a }
        }
        Family::Races { lower, upper, .. } => Family::Races {
            lower,
            upper,
            response: RaceKind::Quadratic { gamma: y[0] },
        },
        Family::MultiActivity {
            beta, delta, mu, ..
        } => Family::MultiActivity {
            intercept_a: y.iter().step_by(2).cloned().collect(),
            intercept_b: y.iter().skip(1).step_by(2).cloned().collect(),
            beta,
            delta,
            mu,
        },
        Family::Custom(_) => return Err(sel.mismatch()),
    };
    spec.with_family(family)
}

/// `∇_y F(x, y)` for the selected parameters.
pub fn parameter_gradient(spec: &GameSpec, x: &DVector<f64>, sel: ParamSelector) -> Result<DMatrix<f64>> {
    let d = spec.dim();
    match (sel, spec.family()) {
        (ParamSelector::Intercept, Family::LinearQuadratic { .. })
        | (ParamSelector::ActivityIntercepts, Family::MultiActivity { .. }) => {
            Ok(-DMatrix::identity(d, d))
        }
        (ParamSelector::LinearTerm, Family::LinearQuadratic { .. }) => Ok(DMatrix::identity(d, d)),
        (ParamSelector::Gamma, Family::Races { upper, response: RaceKind::Quadratic { .. }, .. }) => {
            let z = spec.neighbor_aggregate(x)?;
            Ok(DMatrix::from_fn(d, 1, |i, _| -z[i] * (upper[i] - z[i])))
        }
        _ => Err(sel.mismatch()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityOptions {
    pub activity_tol: f64,
    pub strict_tol: f64,
    /// Refuse to differentiate when a regularity flag fails.
    pub require_regularity: bool,
}

impl Default for SensitivityOptions {
    fn default() -> Self {
        Self {
            activity_tol: DEFAULT_ACTIVITY_TOL,
            strict_tol: DEFAULT_STRICT_TOL,
            require_regularity: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityResult {
    /// `∇_y x*`, one column per parameter.
    pub grad_y_xstar: DMatrix<f64>,
    pub m_matrix: DMatrix<f64>,
    /// `L = [∇_x F]⁻¹`.
    pub l_matrix: DMatrix<f64>,
    pub regularity: Regularity,
    pub kkt: KktData,
}

/// `∇_y x* = −M ∇_y F` with `M = L − LAᵀ(ALAᵀ)⁻¹AL` and `L = [∇_x F]⁻¹`.
pub fn equilibrium_sensitivity(
    spec: &GameSpec,
    xstar: &DVector<f64>,
    sel: ParamSelector,
    opts: SensitivityOptions,
) -> Result<SensitivityResult> {
    let kkt = kkt_multipliers(spec, xstar, opts.activity_tol)?;
    let regularity = check_regularity(spec, xstar, &kkt, opts.strict_tol)?;
    if opts.require_regularity && !regularity.holds() {
        return Err(Error::Regularity(regularity.describe_failure()));
    }
    let grad = spec.evaluate_jacobian(xstar)?.grad;
    let l = linalg::inverse(&grad)
        .map_err(|_| Error::Regularity("game Jacobian is singular at the equilibrium".into()))?;
    let a = &kkt.active.a_mat;
    let m = if a.nrows() == 0 {
        l.clone()
    } else {
        let la = &l * a.transpose();
        let s = a * &la;
        let corr = linalg::solve(&s, &(a * &l))
            .map_err(|_| Error::Regularity("A L Aᵀ is singular".into()))?;
        &l - la * corr
    };
    let grad_y_xstar = -(&m * parameter_gradient(spec, xstar, sel)?);
    Ok(SensitivityResult {
        grad_y_xstar,
        m_matrix: m,
        l_matrix: l,
        regularity,
        kkt,
    })
}
