use std::collections::HashMap;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dynamics::discrete_br;
use super::newton::{continuous_stability, newton_polish};
use super::{DynamicsConfig, DynamicsMode};
use crate::error::{Error, Result};
use crate::games::GameSpec;

const MAX_GRID_POINTS: f64 = 1e8;
const POLISH_SWEEPS: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceConfig {
    /// Grid points per coordinate.
    pub resolution: usize,
    /// Search box; defaults to the constraint boxes.
    pub bounds: Option<(Vec<f64>, Vec<f64>)>,
    pub polish_tol: f64,
    pub dedupe_tol: f64,
}

impl BruteForceConfig {
    pub fn new(resolution: usize) -> Self {
        Self {
            resolution,
            bounds: None,
            polish_tol: 1e-10,
            dedupe_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub x: Vec<f64>,
    pub residual: f64,
    /// Local stability under continuous best-response dynamics.
    pub stable: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceResult {
    /// Polished equilibria, deduplicated and sorted lexicographically.
    pub equilibria: Vec<Equilibrium>,
    /// Grid survivors that neither polish route could refine.
    pub unpolished: Vec<Vec<f64>>,
    pub grid_points: usize,
    pub survivors: usize,
}

/// Grid search for Nash equilibria followed by local polishing.
///
/// A grid profile survives when every agent's best-response gap is at most
/// the gap the nearest grid point to an exact equilibrium could have:
/// `(√n·h/2)(1 + (κ₂ⁱ/κ₁ⁱ)·Σⱼ G_ij)`. Survivors that are local minima of the
/// normalised gap over their Chebyshev neighbourhood are polished by
/// sequential best responses, or by Newton's method when best responses
/// leave the neighbourhood.
pub fn brute_force_nash(spec: &GameSpec, cfg: &BruteForceConfig) -> Result<BruteForceResult> {
    let d = spec.dim();
    let n = spec.strategy_dim();
    let r = cfg.resolution;
    if r < 2 {
        return Err(Error::Config("grid resolution must be at least 2".into()));
    }
    let (lo, hi) = match &cfg.bounds {
        Some((l, h)) => {
            if l.len() != d || h.len() != d || l.iter().zip(h).any(|(a, b)| !(a < b)) {
                return Err(Error::Config(format!(
                    "search box needs {d} finite lower < upper pairs"
                )));
            }
            (DVector::from_column_slice(l), DVector::from_column_slice(h))
        }
        None => spec.bounding_box().ok_or_else(|| {
            Error::Unsupported("unbounded constraint set: supply a search box".into())
        })?,
    };
    if (r as f64).powi(d as i32) > MAX_GRID_POINTS {
        return Err(Error::Unsupported(format!(
            "grid of {r}^{d} points exceeds the {MAX_GRID_POINTS:e} limit"
        )));
    }
    let total = r.pow(d as u32);
    let steps: Vec<f64> = (0..d).map(|c| (hi[c] - lo[c]) / (r - 1) as f64).collect();
    let h = steps.iter().cloned().fold(0.0, f64::max);

    let kb = spec.kappa_bounds(Some((&lo, &hi)))?;
    let row_sums = spec.network().row_sums();
    let tol: Vec<f64> = (0..spec.n_agents())
        .map(|i| {
            let k1 = kb.kappa1_per_agent[i];
            if !(k1 > 0.0) {
                return Err(Error::Unsupported(format!(
                    "agent {} has no positive own curvature",
                    i + 1
                )));
            }
            let lip = kb.kappa2_per_agent[i] / k1;
            Ok(1.01 * ((n as f64).sqrt() * h / 2.0) * (1.0 + lip * row_sums[i]) + 1e-12)
        })
        .collect::<Result<_>>()?;

    let point = |flat: usize| -> DVector<f64> {
        let mut rem = flat;
        DVector::from_fn(d, |c, _| {
            let t = rem % r;
            rem /= r;
            lo[c] + t as f64 * steps[c]
        })
    };
    let score = |x: &DVector<f64>| -> Result<Option<f64>> {
        if !spec.is_feasible(x, 1e-12) {
            return Ok(None);
        }
        let b = spec.best_response_map(x)?;
        let mut worst = 0.0f64;
        for (i, t) in tol.iter().enumerate() {
            let gap = (x.rows(i * n, n) - b.rows(i * n, n)).norm() / t;
            if gap > 1.0 {
                return Ok(None);
            }
            worst = worst.max(gap);
        }
        Ok(Some(worst))
    };

    let survivors: HashMap<usize, f64> = (0..total)
        .into_par_iter()
        .filter_map(|flat| match score(&point(flat)) {
            Ok(Some(s)) => Some(Ok((flat, s))),
            Ok(None) => None,
            Err(e) => Some(Err(e)),
        })
        .collect::<Result<_>>()?;

    let is_local_min = |flat: usize, s: f64| -> bool {
        let idx: Vec<usize> = (0..d).map(|c| (flat / r.pow(c as u32)) % r).collect();
        let mut offset = vec![-1i64; d];
        loop {
            if offset.iter().any(|&o| o != 0) {
                let mut nb = 0usize;
                let mut inside = true;
                for c in (0..d).rev() {
                    let t = idx[c] as i64 + offset[c];
                    if t < 0 || t >= r as i64 {
                        inside = false;
                        break;
                    }
                    nb = nb * r + t as usize;
                }
                if inside && survivors.get(&nb).is_some_and(|&v| v < s) {
                    return false;
                }
            }
            let mut c = 0;
            loop {
                if c == d {
                    return true;
                }
                offset[c] += 1;
                if offset[c] <= 1 {
                    break;
                }
                offset[c] = -1;
                c += 1;
            }
        }
    };
    let mut minima: Vec<usize> = survivors
        .iter()
        .filter(|(&f, &s)| is_local_min(f, s))
        .map(|(&f, _)| f)
        .collect();
    minima.sort_unstable();

    let radius = 25.0 * h * (d as f64).sqrt();
    let polished: Vec<(DVector<f64>, Option<DVector<f64>>)> = minima
        .par_iter()
        .map(|&flat| {
            let start = point(flat);
            let mut seq = DynamicsConfig::new(DynamicsMode::DiscreteSequential);
            seq.max_iters = POLISH_SWEEPS;
            seq.residual_tol = cfg.polish_tol;
            let near = |x: &DVector<f64>| (x - &start).amax() <= radius;
            let t = discrete_br(spec, &start, &seq)?;
            if t.converged() && near(&t.final_profile()) {
                return Ok((start, Some(t.final_profile())));
            }
            let x = newton_polish(spec, &start, cfg.polish_tol)?.filter(|x| near(x));
            Ok((start, x))
        })
        .collect::<Result<_>>()?;

    let mut found: Vec<DVector<f64>> = vec![];
    let mut unpolished = vec![];
    for (start, x) in polished {
        match x {
            Some(x) => {
                if !found.iter().any(|y| (y - &x).amax() <= cfg.dedupe_tol) {
                    found.push(x);
                }
            }
            None => unpolished.push(start.iter().cloned().collect()),
        }
    }
    found.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let equilibria = found
        .into_iter()
        .map(|x| {
            Ok(Equilibrium {
                residual: spec.natural_residual(&x)?,
                stable: continuous_stability(spec, &x)?,
                x: x.iter().cloned().collect(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(BruteForceResult {
        equilibria,
        unpolished,
        grid_points: total,
        survivors: survivors.len(),
    })
}
