use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::games::GameSpec;
use crate::linalg;

const MAX_NEWTON_ITERS: usize = 60;
const STABILITY_TOL: f64 = 1e-7;

fn fixed_point_map(spec: &GameSpec, x: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(x - spec.best_response_map(x)?)
}

/// Central-difference Jacobian of the best-response map.
fn br_jacobian(spec: &GameSpec, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    let d = x.len();
    let mut jac = DMatrix::zeros(d, d);
    for c in 0..d {
        let e = 1e-6 * (1.0 + x[c].abs());
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[c] += e;
        xm[c] -= e;
        let col = (spec.best_response_map(&xp)? - spec.best_response_map(&xm)?) / (2.0 * e);
        jac.set_column(c, &col);
    }
    Ok(jac)
}

/// Damped Newton on `x − B(x) = 0` with a finite-difference Jacobian and
/// projection onto `X`. Returns the polished profile once the natural
/// residual is at most `tol`.
pub fn newton_polish(spec: &GameSpec, x0: &DVector<f64>, tol: f64) -> Result<Option<DVector<f64>>> {
    let mut x = spec.project_profile(x0)?;
    let mut phi = fixed_point_map(spec, &x)?;
    for _ in 0..MAX_NEWTON_ITERS {
        if spec.natural_residual(&x)? <= tol {
            return Ok(Some(x));
        }
        let jac = DMatrix::identity(x.len(), x.len()) - br_jacobian(spec, &x)?;
        let d = match linalg::solve_vec(&jac, &(-&phi)) {
            Ok(d) => d,
            Err(_) => linalg::least_squares(&jac, &(-&phi))?,
        };
        let norm = phi.norm();
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-10 {
            let trial = spec.project_profile(&(&x + &d * t))?;
            let trial_phi = fixed_point_map(spec, &trial)?;
            if trial_phi.norm() < (1.0 - 1e-4 * t) * norm {
                x = trial;
                phi = trial_phi;
                accepted = true;
                break;
            }
            t /= 2.0;
        }
        if !accepted {
            break;
        }
    }
    Ok((spec.natural_residual(&x)? <= tol).then_some(x))
}

/// Local stability of an equilibrium under continuous best-response
/// dynamics, from the spectrum of `∇B(x) − I`. `None` when the largest real
/// part is within tolerance of zero.
pub fn continuous_stability(spec: &GameSpec, x: &DVector<f64>) -> Result<Option<bool>> {
    let jac = br_jacobian(spec, x)? - DMatrix::identity(x.len(), x.len());
    let lead = linalg::max_real_eigenvalue(&jac);
    Ok(if lead < -STABILITY_TOL {
        Some(true)
    } else if lead > STABILITY_TOL {
        Some(false)
    } else {
        None
    })
}
