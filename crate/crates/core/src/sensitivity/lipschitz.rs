use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::GameSpec;
use crate::linalg;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzBound {
    /// Uniform block P-function constant of `F(·, ȳ, Ḡ)`.
    pub eta_bar: f64,
    /// Lipschitz constant of `∇_{xⁱ}Jⁱ` in `(xⁱ, zⁱ, yⁱ)`.
    pub l_const: f64,
    /// `true` when `l_const` came from the closed form rather than the caller.
    pub l_closed_form: bool,
    /// `max_{x∈X} ‖x‖₂`, when `X` is bounded.
    pub delta_max: Option<f64>,
}

impl LipschitzBound {
    /// `L/η̄`.
    pub fn coefficient(&self) -> f64 {
        self.l_const / self.eta_bar
    }

    /// Bound on `‖x*(y) − x*(ȳ)‖₂` for a parameter shift of norm `dy`.
    pub fn parameter_bound(&self, dy: f64) -> f64 {
        self.coefficient() * dy
    }

    /// Bound on `‖x*(y, G) − x*(ȳ, Ḡ)‖₂` for `‖G − Ḡ‖₂ = dg` and
    /// `‖y − ȳ‖₂ = dy`; needs bounded `X`.
    pub fn network_bound(&self, dg: f64, dy: f64) -> Result<f64> {
        let delta = self.delta_max.ok_or_else(|| {
            Error::Unsupported("network perturbation bounds need a bounded strategy set".into())
        })?;
        Ok(self.coefficient() * ((dg * delta).powi(2) + dy * dy).sqrt())
    }
}

/// `maxᵢ ‖[Qⁱ Kⁱ I]‖₂` for affine families, the Lipschitz constant of
/// `Qⁱxⁱ + Kⁱzⁱ ± yⁱ` in `(xⁱ, zⁱ, yⁱ)`.
pub fn lq_lipschitz_constant(spec: &GameSpec) -> Option<f64> {
    let (q, k, _) = spec.affine_blocks()?;
    let n = spec.strategy_dim();
    let eye = DMatrix::<f64>::identity(n, n);
    q.iter()
        .zip(&k)
        .map(|(q, k)| {
            let mut m = DMatrix::zeros(n, 3 * n);
            m.view_mut((0, 0), (n, n)).copy_from(q);
            m.view_mut((0, n), (n, n)).copy_from(k);
            m.view_mut((0, 2 * n), (n, n)).copy_from(&eye);
            linalg::spectral_norm(&m)
        })
        .reduce(f64::max)
}

/// `max_{x∈X} ‖x‖₂ = (Σᵢ max_{xⁱ∈Xⁱ} ‖xⁱ‖²)^{1/2}` over the product set.
pub fn delta_max(spec: &GameSpec) -> Result<f64> {
    let n = spec.strategy_dim();
    let mut s = 0.0;
    for set in spec.constraints() {
        s += set.max_norm(n)?.powi(2);
    }
    Ok(s.sqrt())
}

pub fn lipschitz_bound(spec: &GameSpec, eta_bar: f64, l_const: Option<f64>) -> Result<LipschitzBound> {
    if !(eta_bar > 0.0 && eta_bar.is_finite()) {
        return Err(Error::InvalidGame(format!(
            "uniform block P-function constant must be positive, got {eta_bar}"
        )));
    }
    let (l_const, l_closed_form) = match l_const {
        Some(l) if l > 0.0 && l.is_finite() => (l, false),
        Some(l) => {
            return Err(Error::InvalidGame(format!("Lipschitz constant must be positive, got {l}")))
        }
        None => (
            lq_lipschitz_constant(spec).ok_or_else(|| {
                Error::Unsupported(
                    "the gradient Lipschitz constant has a closed form only for affine families; supply it".into(),
                )
            })?,
            true,
        ),
    };
    Ok(LipschitzBound {
        eta_bar,
        l_const,
        l_closed_form,
        delta_max: delta_max(spec).ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{races, scalar_lq};
    use crate::network::{Network, NetworkKind};

    #[test]
    fn scalar_constant_and_zero_shift() {
        let net = Network::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let g = scalar_lq(net, &[0.5; 2], &[1.0; 2]).unwrap();
        // ‖[1, 0.5, 1]‖₂ = 1.5
        let b = lipschitz_bound(&g, 0.5, None).unwrap();
        assert!((b.l_const - 1.5).abs() < 1e-12);
        assert_eq!(b.parameter_bound(0.0), 0.0);
        assert!(b.delta_max.is_none());
        assert!(b.network_bound(0.1, 0.0).is_err());
        assert!(lipschitz_bound(&g, 0.0, None).is_err());
    }

    #[test]
    fn race_delta_is_upper_corner() {
        let net = Network::generate(&NetworkKind::Complete { n: 2, weight: 1.0 }).unwrap();
        let g = races(net, 0.1, &[1.0; 2], &[5.0; 2]).unwrap();
        assert!((delta_max(&g).unwrap() - 50f64.sqrt()).abs() < 1e-12);
        assert!(lipschitz_bound(&g, 0.5, None).is_err());
        assert!(lipschitz_bound(&g, 0.5, Some(2.0)).unwrap().network_bound(0.05, 0.0).is_ok());
    }
}
