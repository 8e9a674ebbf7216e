#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use netgame::games::{races, scalar_lq};
use netgame::{ConstraintSet, Family, GameSpec, Network, NetworkKind};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complete(n: usize) -> Network {
    Network::generate(&NetworkKind::Complete { n, weight: 1.0 }).unwrap()
}

pub fn random_network(rng: &mut ChaCha8Rng, n: usize, symmetric: bool) -> Network {
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j || (symmetric && j < i) {
                continue;
            }
            let v = if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..1.0) };
            w[(i, j)] = v;
            if symmetric {
                w[(j, i)] = v;
            }
        }
    }
    Network::new(w).unwrap()
}

/// Symmetric positive definite `I + 0.3·SSᵀ/n`.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let s = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    DMatrix::identity(n, n) + (&s * s.transpose()) * (0.3 / n as f64)
}

pub fn random_box(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<f64>) {
    let lo: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..0.0)).collect();
    let hi: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    (lo, hi)
}

/// Linear-quadratic game whose couplings are scaled so that
/// `maxᵢ‖Kⁱ‖·‖G‖₂ = strength·minᵢ λ_min(Qⁱ)`.
pub fn random_lq(
    rng: &mut ChaCha8Rng,
    agents: usize,
    n: usize,
    strength: f64,
    constraints: Vec<ConstraintSet>,
) -> GameSpec {
    let symmetric = rng.random_bool(0.5);
    let net = random_network(rng, agents, symmetric);
    let q: Vec<DMatrix<f64>> = (0..agents).map(|_| random_spd(rng, n)).collect();
    let k: Vec<DMatrix<f64>> = (0..agents)
        .map(|_| DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)))
        .collect();
    let a: Vec<DVector<f64>> = (0..agents)
        .map(|_| DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0)))
        .collect();
    let kmax = k.iter().map(|m| m.norm()).fold(0.0, f64::max);
    let qmin = q
        .iter()
        .map(|m| m.clone().symmetric_eigen().eigenvalues.min())
        .fold(f64::INFINITY, f64::min);
    let g2 = net.spectral_norm().max(1e-12);
    let scale = strength * qmin / (kmax * g2);
    let k = k.into_iter().map(|m| m * scale).collect();
    GameSpec::new(net, n, Family::LinearQuadratic { q, k, a }, constraints).unwrap()
}

/// Box or box-with-budget per agent.
pub fn mixed_constraints(rng: &mut ChaCha8Rng, agents: usize, n: usize) -> Vec<ConstraintSet> {
    (0..agents)
        .map(|_| {
            let (lo, hi) = random_box(rng, n);
            if rng.random_bool(0.5) {
                ConstraintSet::boxed(lo, hi).unwrap()
            } else {
                let total: f64 = hi.iter().sum();
                let budget = rng.random_range(0.4..0.9) * total;
                ConstraintSet::box_with_budget(lo, hi, budget).unwrap()
            }
        })
        .collect()
}

pub fn boxes(agents: usize, n: usize, lo: f64, hi: f64) -> Vec<ConstraintSet> {
    vec![ConstraintSet::boxed(vec![lo; n], vec![hi; n]).unwrap(); agents]
}

pub fn e1a() -> GameSpec {
    scalar_lq(complete(4), &[0.5; 4], &[1.0; 4]).unwrap()
}

pub fn e1b() -> GameSpec {
    scalar_lq(complete(4), &[-1.5, 0.5, 0.5, 0.5], &[1.0; 4]).unwrap()
}

pub fn race_pair(gamma: f64) -> GameSpec {
    races(complete(2), gamma, &[1.0; 2], &[5.0; 2]).unwrap()
}

/// Symmetric race root of `γx(b − x) = x − a` on `[a, b]` by bisection,
/// taking the root where `γx(b − x) − (x − a)` changes sign from positive.
pub fn race_symmetric_root(gamma: f64, a: f64, b: f64) -> f64 {
    let f = |x: f64| gamma * x * (b - x) - (x - a);
    let (mut lo, mut hi) = (a, b);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Uniform point in a bounding box, projected onto the feasible set.
pub fn random_feasible(rng: &mut ChaCha8Rng, spec: &GameSpec, lo: f64, hi: f64) -> DVector<f64> {
    let (blo, bhi) = spec
        .bounding_box()
        .unwrap_or_else(|| (DVector::from_element(spec.dim(), lo), DVector::from_element(spec.dim(), hi)));
    let v = DVector::from_fn(spec.dim(), |r, _| rng.random_range(blo[r]..=bhi[r]));
    spec.project_profile(&v).unwrap()
}
