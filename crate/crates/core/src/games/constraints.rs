//! Per-agent convex strategy sets.
//!
//! Every set is exposed as a polyhedron `{y : B y ≤ b, H y = h}` so that the
//! best-response QP, the projection and the KKT machinery share one view.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintSet {
    Unconstrained,
    NonnegOrthant,
    /// Componentwise bounds; infinite entries are allowed.
    Box { lower: DVector<f64>, upper: DVector<f64> },
    /// `B y ≤ b` and `H y = h`. Either block may have zero rows.
    Polyhedron {
        b_mat: DMatrix<f64>,
        b_vec: DVector<f64>,
        h_mat: DMatrix<f64>,
        h_vec: DVector<f64>,
    },
}

impl ConstraintSet {
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let set = ConstraintSet::Box {
            lower: DVector::from_vec(lower),
            upper: DVector::from_vec(upper),
        };
        set.validate(set.declared_dim().unwrap_or(0))?;
        Ok(set)
    }

    /// Box `[lower, upper]` plus a budget row `Σ y ≤ budget`.
    pub fn box_with_budget(lower: Vec<f64>, upper: Vec<f64>, budget: f64) -> Result<Self> {
        let n = lower.len();
        check_dim("box upper bound", n, upper.len())?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut rhs = Vec::new();
        for k in 0..n {
            if upper[k].is_finite() {
                let mut r = vec![0.0; n];
                r[k] = 1.0;
                rows.push(r);
                rhs.push(upper[k]);
            }
            if lower[k].is_finite() {
                let mut r = vec![0.0; n];
                r[k] = -1.0;
                rows.push(r);
                rhs.push(-lower[k]);
            }
        }
        rows.push(vec![1.0; n]);
        rhs.push(budget);
        let b_mat = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
        Ok(ConstraintSet::Polyhedron {
            b_mat,
            b_vec: DVector::from_vec(rhs),
            h_mat: DMatrix::zeros(0, n),
            h_vec: DVector::zeros(0),
        })
    }

    fn declared_dim(&self) -> Option<usize> {
        match self {
            ConstraintSet::Unconstrained | ConstraintSet::NonnegOrthant => None,
            ConstraintSet::Box { lower, .. } => Some(lower.len()),
            ConstraintSet::Polyhedron { b_mat, .. } => Some(b_mat.ncols()),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            ConstraintSet::Unconstrained | ConstraintSet::NonnegOrthant => Ok(()),
            ConstraintSet::Box { lower, upper } => {
                check_dim("box lower bound", n, lower.len())?;
                check_dim("box upper bound", n, upper.len())?;
                for k in 0..n {
                    if lower[k].is_nan() || upper[k].is_nan() || lower[k] > upper[k] {
                        return Err(Error::InvalidGame(format!(
                            "box bound {}: lower {} exceeds upper {}",
                            k + 1,
                            lower[k],
                            upper[k]
                        )));
                    }
                }
                Ok(())
            }
            ConstraintSet::Polyhedron {
                b_mat,
                b_vec,
                h_mat,
                h_vec,
            } => {
                check_dim("inequality matrix columns", n, b_mat.ncols())?;
                check_dim("inequality right-hand side", b_mat.nrows(), b_vec.len())?;
                check_dim("equality matrix columns", n, h_mat.ncols())?;
                check_dim("equality right-hand side", h_mat.nrows(), h_vec.len())?;
                if b_mat.iter().chain(h_mat.iter()).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidGame("non-finite constraint coefficient".into()));
                }
                Ok(())
            }
        }
    }

    /// Inequality rows `(B, b)` for strategy dimension `n`.
    pub fn inequalities(&self, n: usize) -> (DMatrix<f64>, DVector<f64>) {
        match self {
            ConstraintSet::Unconstrained => (DMatrix::zeros(0, n), DVector::zeros(0)),
            ConstraintSet::NonnegOrthant => (-DMatrix::identity(n, n), DVector::zeros(n)),
            ConstraintSet::Box { lower, upper } => {
                let mut rows = Vec::new();
                let mut rhs = Vec::new();
                for k in 0..n {
                    if upper[k].is_finite() {
                        rows.push((k, 1.0));
                        rhs.push(upper[k]);
                    }
                    if lower[k].is_finite() {
                        rows.push((k, -1.0));
                        rhs.push(-lower[k]);
                    }
                }
                let mut b = DMatrix::zeros(rows.len(), n);
                for (r, &(k, s)) in rows.iter().enumerate() {
                    b[(r, k)] = s;
                }
                (b, DVector::from_vec(rhs))
            }
            ConstraintSet::Polyhedron { b_mat, b_vec, .. } => (b_mat.clone(), b_vec.clone()),
        }
    }

    pub fn equalities(&self, n: usize) -> (DMatrix<f64>, DVector<f64>) {
        match self {
            ConstraintSet::Polyhedron { h_mat, h_vec, .. } => (h_mat.clone(), h_vec.clone()),
            _ => (DMatrix::zeros(0, n), DVector::zeros(0)),
        }
    }

    /// Componentwise bounds when the set is a (possibly one-sided) box.
    pub fn as_box(&self, n: usize) -> Option<(DVector<f64>, DVector<f64>)> {
        match self {
            ConstraintSet::Unconstrained => Some((
                DVector::from_element(n, f64::NEG_INFINITY),
                DVector::from_element(n, f64::INFINITY),
            )),
            ConstraintSet::NonnegOrthant => {
                Some((DVector::zeros(n), DVector::from_element(n, f64::INFINITY)))
            }
            ConstraintSet::Box { lower, upper } => Some((lower.clone(), upper.clone())),
            ConstraintSet::Polyhedron { .. } => None,
        }
    }

    pub fn contains(&self, y: &DVector<f64>, tol: f64) -> bool {
        let n = y.len();
        let (b, bv) = self.inequalities(n);
        let (h, hv) = self.equalities(n);
        let ineq_ok = (&b * y - &bv).iter().all(|&v| v <= tol);
        let eq_ok = (&h * y - &hv).iter().all(|&v| v.abs() <= tol);
        ineq_ok && eq_ok
    }

    /// `max ‖y‖₂` over the set, if bounded. Exact for boxes; polyhedra with
    /// `n ≤ 4` use vertex enumeration.
    pub fn max_norm(&self, n: usize) -> Result<f64> {
        if let Some((lo, hi)) = self.as_box(n) {
            let mut s = 0.0;
            for k in 0..n {
                let m = lo[k].abs().max(hi[k].abs());
                if !m.is_finite() {
                    return Err(Error::Unsupported("strategy set is unbounded".into()));
                }
                s += m * m;
            }
            return Ok(f64::sqrt(s));
        }
        if n > 4 {
            return Err(Error::Unsupported(
                "maximum norm over a polyhedron is only computed for n <= 4".into(),
            ));
        }
        let (b, bv) = self.inequalities(n);
        let (h, hv) = self.equalities(n);
        let m = b.nrows();
        let need = n.saturating_sub(h.nrows());
        let mut best: Option<f64> = None;
        for subset in combinations(m, need) {
            let rows = subset.len() + h.nrows();
            let mut a = DMatrix::zeros(rows, n);
            let mut r = DVector::zeros(rows);
            for (t, &k) in subset.iter().enumerate() {
                a.row_mut(t).copy_from(&b.row(k));
                r[t] = bv[k];
            }
            for t in 0..h.nrows() {
                a.row_mut(subset.len() + t).copy_from(&h.row(t));
                r[subset.len() + t] = hv[t];
            }
            if a.nrows() != n {
                continue;
            }
            if let Ok(v) = crate::linalg::solve_vec(&a, &r) {
                if self.contains(&v, 1e-9) {
                    best = Some(best.unwrap_or(0.0).max(v.norm()));
                }
            }
        }
        // A bounded non-empty polyhedron always has a vertex.
        best.ok_or_else(|| Error::Unsupported("polyhedron is unbounded or empty".into()))
            .and_then(|v| {
                if self.is_bounded_polyhedron(n) {
                    Ok(v)
                } else {
                    Err(Error::Unsupported("strategy set is unbounded".into()))
                }
            })
    }

    fn is_bounded_polyhedron(&self, n: usize) -> bool {
        // Bounded iff no nonzero direction d with B d ≤ 0 and H d = 0. Checked
        // against the 2n coordinate directions and the constraint normals.
        let (b, _) = self.inequalities(n);
        let (h, _) = self.equalities(n);
        let mut dirs: Vec<DVector<f64>> = Vec::new();
        for k in 0..n {
            let mut e = DVector::zeros(n);
            e[k] = 1.0;
            dirs.push(e.clone());
            dirs.push(-e);
        }
        for r in 0..b.nrows() {
            let v = b.row(r).transpose();
            dirs.push(-v);
        }
        // Project each candidate on the null space of H before testing.
        let proj = if h.nrows() > 0 {
            let pinv = h.clone().pseudo_inverse(1e-12).unwrap_or_else(|_| DMatrix::zeros(n, 0));
            DMatrix::identity(n, n) - &pinv * &h
        } else {
            DMatrix::identity(n, n)
        };
        for d in dirs {
            let d = &proj * d;
            if d.norm() < 1e-12 {
                continue;
            }
            if (&b * &d).iter().all(|&v| v <= 1e-12) {
                return false;
            }
        }
        true
    }
}

/// All subsets of `{0..m}` of size at most `k`, smallest first.
pub(crate) fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..k.min(m) {
        let mut next = Vec::new();
        for s in &frontier {
            let start = s.last().map_or(0, |&l: &usize| l + 1);
            for j in start..m {
                let mut t = s.clone();
                t.push(j);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

pub(crate) fn binomial_prefix_count(m: usize, k: usize) -> u128 {
    let mut total: u128 = 0;
    let mut c: u128 = 1;
    for j in 0..=k.min(m) {
        if j > 0 {
            c = c * (m - j + 1) as u128 / j as u128;
        }
        total += c;
    }
    total
}
