use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::games::{Family, GameSpec};

const EXACT_TOL: f64 = 1e-10;
const RATIO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum PotentialVerdict {
    /// `Kⁱ G_ij = Kʲ G_ji` for all pairs.
    Exact,
    /// `(Kⁱ/βᵢ) G_ij = (Kʲ/βⱼ) G_ji` for the reported `β > 0`.
    Rescalable { beta: Vec<f64> },
    None,
    NotApplicable { reason: String },
}

impl PotentialVerdict {
    pub fn is_potential(&self) -> bool {
        matches!(self, PotentialVerdict::Exact | PotentialVerdict::Rescalable { .. })
    }
}

/// Potential structure of scalar linear-quadratic games.
pub fn check_potential(spec: &GameSpec) -> PotentialVerdict {
    let Family::LinearQuadratic { k, .. } = spec.family() else {
        return PotentialVerdict::NotApplicable {
            reason: "potential detection covers linear-quadratic games".into(),
        };
    };
    if spec.strategy_dim() != 1 {
        return PotentialVerdict::NotApplicable {
            reason: "potential detection covers scalar strategies".into(),
        };
    }
    let n = spec.n_agents();
    let g = spec.network().weights();
    let kv: Vec<f64> = k.iter().map(|m| m[(0, 0)]).collect();
    // w[i][j] = Kⁱ G_ij
    let w = |i: usize, j: usize| kv[i] * g[(i, j)];

    let exact = (0..n).all(|i| {
        (i + 1..n).all(|j| {
            let (a, b) = (w(i, j), w(j, i));
            (a - b).abs() <= EXACT_TOL * (1.0 + a.abs().max(b.abs()))
        })
    });
    if exact {
        return PotentialVerdict::Exact;
    }

    let mut beta = vec![f64::NAN; n];
    for root in 0..n {
        if !beta[root].is_nan() {
            continue;
        }
        beta[root] = if kv[root] != 0.0 { kv[root].abs() } else { 1.0 };
        let mut queue = VecDeque::from([root]);
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if j == i {
                    continue;
                }
                let (a, b) = (w(i, j), w(j, i));
                if a == 0.0 && b == 0.0 {
                    continue;
                }
                // βᵢ / βⱼ = Kⁱ G_ij / (Kʲ G_ji)
                let ratio = a / b;
                if !(ratio > 0.0 && ratio.is_finite()) {
                    return PotentialVerdict::None;
                }
                let bj = beta[i] / ratio;
                if beta[j].is_nan() {
                    beta[j] = bj;
                    queue.push_back(j);
                } else if (beta[j] - bj).abs() > RATIO_TOL * beta[j].abs().max(bj.abs()) {
                    return PotentialVerdict::None;
                }
            }
        }
    }
    PotentialVerdict::Rescalable { beta }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::scalar_lq;
    use crate::network::{Network, NetworkKind};

    fn complete(n: usize) -> Network {
        Network::generate(&NetworkKind::Complete { n, weight: 1.0 }).unwrap()
    }

    #[test]
    fn homogeneous_complete_is_exact() {
        let g = scalar_lq(complete(4), &[0.5; 4], &[1.0; 4]).unwrap();
        assert_eq!(check_potential(&g), PotentialVerdict::Exact);
    }

    #[test]
    fn one_negative_coupling_breaks_potential() {
        let g = scalar_lq(complete(4), &[-1.5, 0.5, 0.5, 0.5], &[1.0; 4]).unwrap();
        assert_eq!(check_potential(&g), PotentialVerdict::None);
    }

    #[test]
    fn heterogeneous_positive_couplings_rescale_by_k() {
        let k = [0.2, 0.5, 0.9, 0.3];
        let g = scalar_lq(complete(4), &k, &[1.0; 4]).unwrap();
        match check_potential(&g) {
            PotentialVerdict::Rescalable { beta } => {
                for (b, k) in beta.iter().zip(k) {
                    assert!((b - k).abs() < 1e-12);
                }
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn one_sided_edge_has_no_potential() {
        let star = Network::generate(&NetworkKind::AsymmetricStar { n: 4, weight: 1.0 }).unwrap();
        let g = scalar_lq(star, &[0.5; 4], &[1.0; 4]).unwrap();
        assert_eq!(check_potential(&g), PotentialVerdict::None);
    }
}
