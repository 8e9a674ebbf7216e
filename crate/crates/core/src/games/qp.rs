//! Small dense strictly convex QP:
//! minimize `½ yᵀQy + cᵀy` subject to `B y ≤ b`, `H y = h`.
//!
//! Solved exactly by active-set enumeration when the number of candidate
//! active sets is small, in closed form for boxes with diagonal `Q`, and by
//! projected gradient for larger boxes.

use nalgebra::{DMatrix, DVector};

use super::constraints::{binomial_prefix_count, combinations, ConstraintSet};
use crate::error::{Error, Result};
use crate::linalg;

/// Above this many candidate active sets we stop enumerating.
const MAX_ACTIVE_SETS: u128 = 20_000;
const FEAS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub y: DVector<f64>,
    /// Indices into the inequality rows of the set that hold with equality.
    pub active: Vec<usize>,
    /// Multipliers of the active inequality rows, same order as `active`.
    pub lambda: Vec<f64>,
    /// Multipliers of the equality rows.
    pub mu: DVector<f64>,
}

pub fn solve_qp(q: &DMatrix<f64>, c: &DVector<f64>, set: &ConstraintSet) -> Result<QpSolution> {
    let n = c.len();
    let (b, bv) = set.inequalities(n);
    let (h, hv) = set.equalities(n);

    if b.nrows() == 0 && h.nrows() == 0 {
        let y = linalg::solve_vec(q, &(-c))?;
        return Ok(QpSolution {
            y,
            active: vec![],
            lambda: vec![],
            mu: DVector::zeros(0),
        });
    }

    if let Some((lo, hi)) = set.as_box(n) {
        let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || q[(i, j)] == 0.0));
        if diagonal {
            let y = DVector::from_fn(n, |k, _| (-c[k] / q[(k, k)]).clamp(lo[k], hi[k]));
            return Ok(box_solution(q, c, &y, &lo, &hi));
        }
        if binomial_prefix_count(b.nrows(), n) > MAX_ACTIVE_SETS {
            return projected_gradient_box(q, c, &lo, &hi);
        }
    }

    if binomial_prefix_count(b.nrows(), n) > MAX_ACTIVE_SETS {
        return Err(Error::Unsupported(format!(
            "polyhedral QP with {} inequality rows in dimension {n} is too large for enumeration",
            b.nrows()
        )));
    }
    enumerate_active_sets(q, c, &b, &bv, &h, &hv)
}

fn enumerate_active_sets(
    q: &DMatrix<f64>,
    c: &DVector<f64>,
    b: &DMatrix<f64>,
    bv: &DVector<f64>,
    h: &DMatrix<f64>,
    hv: &DVector<f64>,
) -> Result<QpSolution> {
    let n = c.len();
    let me = h.nrows();
    let scale = 1.0 + bv.amax().max(hv.amax());
    for subset in combinations(b.nrows(), n.saturating_sub(me).min(b.nrows())) {
        let m = subset.len() + me;
        let dim = n + m;
        let mut kkt = DMatrix::zeros(dim, dim);
        kkt.view_mut((0, 0), (n, n)).copy_from(q);
        let mut rhs = DVector::zeros(dim);
        rhs.rows_mut(0, n).copy_from(&(-c));
        for (t, &k) in subset.iter().enumerate() {
            for j in 0..n {
                kkt[(n + t, j)] = b[(k, j)];
                kkt[(j, n + t)] = b[(k, j)];
            }
            rhs[n + t] = bv[k];
        }
        for t in 0..me {
            let r = n + subset.len() + t;
            for j in 0..n {
                kkt[(r, j)] = h[(t, j)];
                kkt[(j, r)] = h[(t, j)];
            }
            rhs[r] = hv[t];
        }
        let Ok(sol) = linalg::solve_vec(&kkt, &rhs) else {
            continue;
        };
        let y = sol.rows(0, n).into_owned();
        let lambda: Vec<f64> = (0..subset.len()).map(|t| sol[n + t]).collect();
        if lambda.iter().any(|&l| l < -1e-12 * (1.0 + c.amax())) {
            continue;
        }
        if (b * &y - bv).iter().any(|&v| v > FEAS_TOL * scale) {
            continue;
        }
        let mu = DVector::from_fn(me, |t, _| sol[n + subset.len() + t]);
        return Ok(QpSolution {
            y,
            active: subset,
            lambda: lambda.into_iter().map(|l| l.max(0.0)).collect(),
            mu,
        });
    }
    Err(Error::Infeasible(
        "no feasible KKT point found; the constraint set is likely empty".into(),
    ))
}

/// Builds the active set and multipliers for a solution on a box whose
/// inequality rows are ordered as in [`ConstraintSet::inequalities`].
fn box_solution(
    q: &DMatrix<f64>,
    c: &DVector<f64>,
    y: &DVector<f64>,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
) -> QpSolution {
    let g = q * y + c;
    let mut active = Vec::new();
    let mut lambda = Vec::new();
    let mut row = 0;
    for k in 0..y.len() {
        if hi[k].is_finite() {
            if y[k] >= hi[k] && lo[k] < hi[k] || (lo[k] == hi[k] && g[k] <= 0.0) {
                active.push(row);
                lambda.push((-g[k]).max(0.0));
            }
            row += 1;
        }
        if lo[k].is_finite() {
            if y[k] <= lo[k] && (lo[k] < hi[k] || g[k] > 0.0) {
                active.push(row);
                lambda.push(g[k].max(0.0));
            }
            row += 1;
        }
    }
    QpSolution {
        y: y.clone(),
        active,
        lambda,
        mu: DVector::zeros(0),
    }
}

fn projected_gradient_box(
    q: &DMatrix<f64>,
    c: &DVector<f64>,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
) -> Result<QpSolution> {
    let n = c.len();
    let lmax = linalg::max_sym_eigenvalue(q);
    if !(lmax > 0.0) {
        return Err(Error::InvalidGame("QP matrix is not positive definite".into()));
    }
    let step = 1.0 / lmax;
    let clamp = |v: DVector<f64>| DVector::from_fn(n, |k, _| v[k].clamp(lo[k], hi[k]));
    let mut y = clamp(DVector::zeros(n));
    for _ in 0..200_000 {
        let next = clamp(&y - (q * &y + c) * step);
        let diff = (&next - &y).norm();
        y = next;
        if diff <= 1e-15 * (1.0 + y.norm()) {
            return Ok(box_solution(q, c, &y, lo, hi));
        }
    }
    Err(Error::NotConverged("projected-gradient QP iteration cap reached".into()))
}

/// Euclidean projection onto `set`.
pub fn project(v: &DVector<f64>, set: &ConstraintSet) -> Result<QpSolution> {
    let n = v.len();
    solve_qp(&DMatrix::identity(n, n), &(-v), set)
}
