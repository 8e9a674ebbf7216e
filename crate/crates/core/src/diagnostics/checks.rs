use nalgebra::{DMatrix, DVector};

use super::pmatrix::{is_p_matrix, PMatrixResult};
use super::{alpha_margins, AlphaMargins, Criterion, Sign, Verdict, Witness};
use crate::error::{Error, Result};
use crate::games::{ConstraintSet, Family, GameSpec, KappaBounds, RaceKind};
use crate::linalg::{self, EIG_TOL};
use crate::network::SpectralMeasures;

const MONOTONICITY_SAMPLES: u64 = 2_000;
const SCALING_REFINEMENTS: usize = 200;

/// `Υ_ii = κ₁ⁱ`, `Υ_ij = −κ₂ⁱ G_ij`.
pub fn build_upsilon(spec: &GameSpec, kb: &KappaBounds) -> DMatrix<f64> {
    let g = spec.network().weights();
    let n = spec.n_agents();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            kb.kappa1_per_agent[i]
        } else {
            -kb.kappa2_per_agent[i] * g[(i, j)]
        }
    })
}

pub fn check_p_upsilon(spec: &GameSpec, kb: &KappaBounds, margins: &AlphaMargins) -> Result<Verdict> {
    if !kb.certifying() {
        return Ok(Verdict::inconclusive("kappa bounds are sampled"));
    }
    if let Some(i) = kb.kappa1_per_agent.iter().position(|&k| !(k > 0.0)) {
        return Ok(Verdict::not_applicable(format!(
            "own-curvature block of agent {} is not positive definite",
            i + 1
        )));
    }
    if margins.sign(margins.alpha_2) == Sign::Positive {
        return Ok(Verdict::certified(Criterion::SpectralNormMargin, None));
    }
    if margins.sign(margins.alpha_inf) == Sign::Positive {
        return Ok(Verdict::certified(Criterion::RowSumMargin, None));
    }
    Ok(match is_p_matrix(&build_upsilon(spec, kb))? {
        PMatrixResult::PMatrix { .. } => Verdict::certified(Criterion::UpsilonPMatrix, None),
        PMatrixResult::NotPMatrix {
            indices,
            determinant,
        } => Verdict::Refuted {
            witness: Witness::Minor {
                indices,
                determinant,
            },
        },
        PMatrixResult::Inconclusive => Verdict::inconclusive("P-matrix test inconclusive"),
    })
}

/// Weights `c = Υ⁻¹𝟙` and rate `δ_c < 1` of the weighted block contraction
/// `maxᵢ ‖Bⁱ(x) − Bⁱ(y)‖/cᵢ ≤ δ_c maxᵢ ‖xⁱ − yⁱ‖/cᵢ`. `None` unless `Υ` is a
/// non-singular M-matrix.
pub fn contraction_weights(upsilon: &DMatrix<f64>) -> Option<(DVector<f64>, f64)> {
    let n = upsilon.nrows();
    let c = linalg::solve_vec(upsilon, &DVector::from_element(n, 1.0)).ok()?;
    if c.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let rate = (0..n)
        .map(|i| 1.0 - 1.0 / (upsilon[(i, i)] * c[i]))
        .fold(0.0, f64::max);
    (rate < 1.0).then_some((c, rate))
}

pub fn check_strong_monotonicity(
    spec: &GameSpec,
    sm: &SpectralMeasures,
    kb: &KappaBounds,
) -> Result<Verdict> {
    probe_strong_monotonicity(spec, sm, kb, 0)
}

/// As [`check_strong_monotonicity`], with `seed` shifting the sample points
/// of the nonlinear probe.
pub fn probe_strong_monotonicity(
    spec: &GameSpec,
    sm: &SpectralMeasures,
    kb: &KappaBounds,
    seed: u64,
) -> Result<Verdict> {
    let margins = alpha_margins(kb, sm);
    if kb.certifying() && margins.sign(margins.alpha_2) == Sign::Positive {
        return Ok(Verdict::certified(
            Criterion::SpectralNormMargin,
            Some(margins.alpha_2),
        ));
    }
    if kb.certifying() && margins.positive(margins.alpha_min) && common_psd_coupling(spec) {
        return Ok(Verdict::certified(
            Criterion::MinEigenvalueCommonCoupling,
            margins.alpha_min,
        ));
    }
    if let Some(a) = spec.affine_gradient() {
        let (lam, w) = linalg::min_sym_eigen(&a);
        let tol = EIG_TOL * (1.0 + linalg::spectral_norm(&a));
        return Ok(if lam > tol {
            Verdict::certified(Criterion::SymmetrizedJacobian, Some(lam))
        } else if lam < -tol {
            Verdict::Refuted {
                witness: Witness::Direction {
                    point: vec![0.0; spec.dim()],
                    direction: w.iter().cloned().collect(),
                    value: lam,
                },
            }
        } else {
            Verdict::inconclusive("symmetrized Jacobian is singular within tolerance")
        });
    }
    let Some((lo, hi)) = spec.bounding_box() else {
        return Ok(Verdict::inconclusive(
            "non-affine game on an unbounded set; no sufficient condition applies",
        ));
    };
    let d = spec.dim();
    for s in 0..MONOTONICITY_SAMPLES {
        let u = linalg::halton_point(s, d, seed);
        let x = DVector::from_fn(d, |r, _| lo[r] + u[r] * (hi[r] - lo[r]));
        let jac = spec.evaluate_jacobian(&x)?;
        let (lam, w) = linalg::min_sym_eigen(&jac.grad);
        if lam < -EIG_TOL * (1.0 + linalg::spectral_norm(&jac.grad)) {
            return Ok(Verdict::Refuted {
                witness: Witness::Direction {
                    point: x.iter().cloned().collect(),
                    direction: w.iter().cloned().collect(),
                    value: lam,
                },
            });
        }
    }
    Ok(Verdict::inconclusive(
        "no negative curvature found at sampled points, but no sufficient condition applies",
    ))
}

/// All cross blocks equal a common `K̃` with `K̃ + K̃ᵀ ⪰ 0`. Decided exactly
/// for affine games only.
fn common_psd_coupling(spec: &GameSpec) -> bool {
    let Some((_, k, _)) = spec.affine_blocks() else {
        return false;
    };
    let first = &k[0];
    let scale = 1.0 + first.amax();
    if k.iter().any(|m| (m - first).amax() > 1e-12 * scale) {
        return false;
    }
    linalg::min_sym_eigen(first).0 >= -EIG_TOL * scale
}

/// Diagonal scaling suggested by the structure `A = D + K(G ⊗ I)`: the
/// inverse coupling strength of each agent, when all are positive.
pub fn scaling_hint(spec: &GameSpec) -> Option<Vec<f64>> {
    let (_, k, _) = spec.affine_blocks()?;
    let n = spec.strategy_dim();
    let mut h = Vec::with_capacity(spec.dim());
    for m in &k {
        let s = if n == 1 { m[(0, 0)] } else { linalg::spectral_norm(m) };
        if !(s > 0.0) {
            return None;
        }
        h.extend(std::iter::repeat(1.0 / s).take(n));
    }
    Some(h)
}

/// `λ_min(sym(HA)) / max(H)`.
fn scaling_score(a: &DMatrix<f64>, h: &[f64]) -> f64 {
    let ha = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| h[i] * a[(i, j)]);
    let hmax = h.iter().cloned().fold(0.0, f64::max);
    linalg::min_sym_eigen(&ha).0 / hmax
}

/// Searches for a diagonal `H ≻ 0` with `HA + AᵀH ≻ 0`. The certified
/// constant `η = λ_min(HA + AᵀH) / (2 d max H)` is a uniform P-function
/// constant for `F(x) = Ax + a`.
pub fn check_uniform_p_affine(a: &DMatrix<f64>, hint: Option<&[f64]>) -> Result<Verdict> {
    let d = a.nrows();
    if d != a.ncols() {
        return Err(Error::InvalidGame(format!(
            "uniform P-matrix test needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let tol = EIG_TOL * (1.0 + linalg::spectral_norm(a));
    let certified = |h: Vec<f64>, score: f64| Verdict::Certified {
        criterion: Criterion::DiagonalScaling,
        constant: Some(score / d as f64),
        scaling: Some(h),
    };

    let mut candidates: Vec<Vec<f64>> = vec![vec![1.0; d]];
    if let Some(h) = hint {
        if h.len() == d && h.iter().all(|&v| v > 0.0 && v.is_finite()) {
            candidates.push(h.to_vec());
        }
    }
    if let Some(h) = m_matrix_scaling(a) {
        candidates.push(h);
    }
    let mut best = (f64::NEG_INFINITY, vec![1.0; d]);
    for h in candidates {
        let s = scaling_score(a, &h);
        if s > tol {
            return Ok(certified(h, s));
        }
        if s > best.0 {
            best = (s, h);
        }
    }

    if let PMatrixResult::NotPMatrix {
        indices,
        determinant,
    } = is_p_matrix(a)?
    {
        return Ok(Verdict::Refuted {
            witness: Witness::Minor {
                indices,
                determinant,
            },
        });
    }

    const FACTORS: [f64; 6] = [4.0, 2.0, std::f64::consts::SQRT_2, 0.707_106_781_186_547_6, 0.5, 0.25];
    let (mut score, mut h) = best;
    for t in 0..SCALING_REFINEMENTS {
        let k = t % d;
        let mut improved = None;
        for f in FACTORS {
            let mut trial = h.clone();
            trial[k] *= f;
            let s = scaling_score(a, &trial);
            if s > improved.as_ref().map_or(score, |(v, _)| *v) {
                improved = Some((s, trial));
            }
        }
        if let Some((s, trial)) = improved {
            score = s;
            h = trial;
        }
        if score > tol {
            return Ok(certified(h, score));
        }
    }
    Ok(Verdict::inconclusive(
        "no diagonal scaling found within the search budget",
    ))
}

/// For a non-singular M-matrix, `H = diag(y/x)` with `x = A⁻¹𝟙`,
/// `y = A⁻ᵀ𝟙` makes `HA + AᵀH` positive definite.
fn m_matrix_scaling(a: &DMatrix<f64>) -> Option<Vec<f64>> {
    let d = a.nrows();
    let ones = DVector::from_element(d, 1.0);
    let x = linalg::solve_vec(a, &ones).ok()?;
    let y = linalg::solve_vec(&a.transpose(), &ones).ok()?;
    if x.iter().chain(y.iter()).any(|&v| !(v > 0.0)) {
        return None;
    }
    Some((0..d).map(|i| y[i] / x[i]).collect())
}

/// Scalar games of strategic substitutes on symmetric networks.
pub fn check_scalar_substitutes(spec: &GameSpec, sym_tol: f64) -> Result<Verdict> {
    if spec.strategy_dim() != 1 {
        return Ok(Verdict::not_applicable("strategies are not scalar"));
    }
    let net = spec.network();
    if !net.is_symmetric(sym_tol) {
        return Ok(Verdict::not_applicable("network is not symmetric"));
    }
    let agents = spec.n_agents();
    let (nu, exact) = match spec.family() {
        Family::Races {
            lower,
            upper,
            response,
        } => {
            let g = net.weights();
            let zlo = |i: usize| (0..agents).map(|j| g[(i, j)] * lower[j]).sum::<f64>();
            let zhi = |i: usize| (0..agents).map(|j| g[(i, j)] * upper[j]).sum::<f64>();
            match response {
                // K = −φ′(z) = γ(2z − b) is increasing in z.
                RaceKind::Quadratic { gamma } => (
                    (0..agents)
                        .map(|i| gamma * (2.0 * zlo(i) - upper[i]))
                        .fold(f64::INFINITY, f64::min),
                    true,
                ),
                RaceKind::Custom(r) => {
                    let mut nu = f64::INFINITY;
                    for i in 0..agents {
                        for s in 0..=1000 {
                            let z = zlo(i) + (zhi(i) - zlo(i)) * s as f64 / 1000.0;
                            nu = nu.min(-r.dphi(i, z));
                        }
                    }
                    (nu, false)
                }
            }
        }
        Family::Custom(_) => {
            return Ok(Verdict::inconclusive(
                "coupling signs of custom games are not decidable",
            ))
        }
        _ => {
            let (_, k, _) = spec.affine_blocks().expect("affine family");
            (k.iter().map(|m| m[(0, 0)]).fold(f64::INFINITY, f64::min), true)
        }
    };
    if !(nu > 0.0) {
        return Ok(Verdict::not_applicable(format!(
            "couplings are not bounded away from zero (min coupling {nu})"
        )));
    }
    if !exact {
        return Ok(Verdict::inconclusive("coupling lower bound was sampled"));
    }
    let kb = spec.kappa_bounds(None)?;
    let margins = alpha_margins(&kb, &net.spectral_measures(sym_tol));
    if kb.certifying() && margins.positive(margins.alpha_min) {
        Ok(Verdict::certified(Criterion::ScalarSubstitutes, None))
    } else {
        Ok(Verdict::inconclusive("min-eigenvalue margin is not positive"))
    }
}

/// For affine games on orthant or free sets with zero intercept: a
/// non-negative kernel direction `v` of `∇F` makes every `t·v`, `t ≥ 0`, an
/// equilibrium.
pub fn kernel_equilibrium_ray(spec: &GameSpec) -> Result<Option<Vec<f64>>> {
    let Some((_, _, a)) = spec.affine_blocks() else {
        return Ok(None);
    };
    let Some(jac) = spec.affine_gradient() else {
        return Ok(None);
    };
    if a.iter().any(|v| v.amax() > 0.0) {
        return Ok(None);
    }
    if !spec
        .constraints()
        .iter()
        .all(|s| matches!(s, ConstraintSet::NonnegOrthant | ConstraintSet::Unconstrained))
    {
        return Ok(None);
    }
    let svd = jac.clone().svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Numerical("SVD failed".into()))?;
    let (idx, smin) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let smax = svd.singular_values.max();
    if smin > 1e-10 * smax.max(1.0) {
        return Ok(None);
    }
    let mut v: DVector<f64> = vt.row(idx).transpose();
    if v.sum() < 0.0 {
        v = -v;
    }
    if v.iter().any(|&c| c < -1e-12) {
        return Ok(None);
    }
    let m = v.amax();
    Ok(Some(v.iter().map(|c| (c / m).max(0.0)).collect()))
}
