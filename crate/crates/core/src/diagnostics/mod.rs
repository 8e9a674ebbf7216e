//! Condition checkers and the certificate aggregator.
//!
//! Verdicts never guess: a margin within the eigenvalue tolerance of zero is
//! reported as inconclusive, and every refutation carries a witness that
//! reproduces the violation.

pub mod checks;
pub mod pmatrix;
pub mod potential;

use serde::{Deserialize, Serialize};

pub use checks::{
    build_upsilon, check_p_upsilon, check_scalar_substitutes, check_strong_monotonicity,
    check_uniform_p_affine, contraction_weights, kernel_equilibrium_ray,
};
pub use pmatrix::{is_p_matrix, PMatrixMethod, PMatrixResult};
pub use potential::{check_potential, PotentialVerdict};

use crate::error::Result;
use crate::games::{GameSpec, KappaBounds};
use crate::linalg::EIG_TOL;
use crate::network::{SpectralMeasures, DEFAULT_SYM_TOL};

/// Named sufficient conditions. Every certified verdict and every guarantee
/// line cites exactly one of these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// `κ₁ − κ₂‖G‖₂ > 0`: strong monotonicity and `P_Υ`.
    SpectralNormMargin,
    /// `κ₁ − κ₂‖G‖∞ > 0`: `P_Υ`.
    RowSumMargin,
    /// Symmetric `G`, common `K̃` with `K̃ + K̃ᵀ ⪰ 0`, `κ₁ − κ₂|λ_min(G)| > 0`:
    /// strong monotonicity.
    MinEigenvalueCommonCoupling,
    /// `n = 1`, symmetric `G`, `Kⁱ ≥ ν > 0`, `κ₁ − κ₂|λ_min(G)| > 0`:
    /// uniform P-function.
    ScalarSubstitutes,
    /// Affine `F` with positive definite symmetric part of `∇F`.
    SymmetrizedJacobian,
    /// `Υ` is a P-matrix by direct test.
    UpsilonPMatrix,
    /// Affine `F` with a diagonal `H ≻ 0` such that `HA + AᵀH ≻ 0`.
    DiagonalScaling,
    /// Exact or rescaled potential game.
    Potential,
    /// Strong monotonicity with quadratic own costs: continuous best-response
    /// dynamics converge.
    MonotoneDescent,
    /// `P_Υ` gives a weighted block contraction of the best-response map.
    BlockContraction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// Principal minor with non-positive determinant (0-based indices).
    Minor { indices: Vec<usize>, determinant: f64 },
    /// `wᵀ sym(∇F(x)) w = value < 0` with `‖w‖ = 1`.
    Direction {
        point: Vec<f64>,
        direction: Vec<f64>,
        value: f64,
    },
    /// Every `t·direction`, `t ≥ 0`, solves the equilibrium problem.
    EquilibriumRay { direction: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Certified {
        criterion: Criterion,
        /// Monotonicity or P-function constant when one is known.
        constant: Option<f64>,
        /// Diagonal scaling for the diagonal-scaling route.
        #[serde(skip_serializing_if = "Option::is_none", default)]
        scaling: Option<Vec<f64>>,
    },
    Refuted {
        witness: Witness,
    },
    Inconclusive {
        reason: String,
    },
    NotApplicable {
        reason: String,
    },
}

impl Verdict {
    pub fn certified(criterion: Criterion, constant: Option<f64>) -> Self {
        Verdict::Certified {
            criterion,
            constant,
            scaling: None,
        }
    }
    pub fn inconclusive(reason: impl Into<String>) -> Self {
        Verdict::Inconclusive {
            reason: reason.into(),
        }
    }
    pub fn not_applicable(reason: impl Into<String>) -> Self {
        Verdict::NotApplicable {
            reason: reason.into(),
        }
    }
    pub fn is_certified(&self) -> bool {
        matches!(self, Verdict::Certified { .. })
    }
    pub fn is_refuted(&self) -> bool {
        matches!(self, Verdict::Refuted { .. })
    }
    pub fn criterion(&self) -> Option<Criterion> {
        match self {
            Verdict::Certified { criterion, .. } => Some(*criterion),
            _ => None,
        }
    }
    pub fn constant(&self) -> Option<f64> {
        match self {
            Verdict::Certified { constant, .. } => *constant,
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaMargins {
    pub alpha_2: f64,
    pub alpha_inf: f64,
    pub alpha_min: Option<f64>,
    /// Absolute uncertainty attached to each margin.
    pub tolerance: f64,
}

/// Three-valued sign of a margin under the tolerance policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
    Undecided,
}

impl AlphaMargins {
    pub fn sign(&self, value: f64) -> Sign {
        if value > self.tolerance {
            Sign::Positive
        } else if value < -self.tolerance {
            Sign::Negative
        } else {
            Sign::Undecided
        }
    }
    pub fn positive(&self, value: Option<f64>) -> bool {
        value.is_some_and(|v| self.sign(v) == Sign::Positive)
    }
}

pub fn alpha_margins(kb: &KappaBounds, sm: &SpectralMeasures) -> AlphaMargins {
    let scale = 1.0 + kb.kappa1.abs() + kb.kappa2 * sm.spectral_norm.max(sm.infinity_norm);
    AlphaMargins {
        alpha_2: kb.kappa1 - kb.kappa2 * sm.spectral_norm,
        alpha_inf: kb.kappa1 - kb.kappa2 * sm.infinity_norm,
        alpha_min: sm.min_eigenvalue.map(|l| kb.kappa1 - kb.kappa2 * l.abs()),
        tolerance: EIG_TOL * scale,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuaranteeKind {
    ExistenceUniqueness,
    /// At most one equilibrium; existence is not asserted.
    Uniqueness,
    ContinuousBrConvergence,
    DiscreteSimultaneousBrConvergence,
    DiscreteSequentialBrConvergence,
    LipschitzContinuity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Guarantee {
    pub kind: GuaranteeKind,
    pub criterion: Criterion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub spectral: SpectralMeasures,
    pub kappa: KappaBounds,
    pub margins: AlphaMargins,
    pub strong_monotone: Verdict,
    pub p_upsilon: Verdict,
    pub uniform_p: Verdict,
    pub potential: PotentialVerdict,
    pub guarantees: Vec<Guarantee>,
    pub warnings: Vec<String>,
}

impl CertificateReport {
    pub fn has(&self, kind: GuaranteeKind) -> bool {
        self.guarantees.iter().any(|g| g.kind == kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    pub sym_tol: f64,
    /// Shifts the sample points of sampled bounds and probes.
    pub seed: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            sym_tol: DEFAULT_SYM_TOL,
            seed: 0,
        }
    }
}

/// Runs every checker and maps verdicts to guarantees.
pub fn certify(spec: &GameSpec) -> Result<CertificateReport> {
    certify_with(spec, CertifyOptions::default())
}

pub fn certify_with(spec: &GameSpec, opts: CertifyOptions) -> Result<CertificateReport> {
    let sm = spec.network().spectral_measures(opts.sym_tol);
    let kb = spec.kappa_bounds_seeded(None, opts.seed)?;
    let margins = alpha_margins(&kb, &sm);
    let strong_monotone = checks::probe_strong_monotonicity(spec, &sm, &kb, opts.seed)?;
    let p_upsilon = check_p_upsilon(spec, &kb, &margins)?;
    let scalar = check_scalar_substitutes(spec, opts.sym_tol)?;
    // Prefer the diagonal-scaling route for affine games because it carries
    // an explicit constant.
    let affine = match spec.affine_gradient() {
        Some(a) => Some(check_uniform_p_affine(&a, checks::scaling_hint(spec).as_deref())?),
        None => None,
    };
    let uniform_p = match affine {
        Some(v) if v.is_certified() => v,
        _ if scalar.is_certified() => scalar,
        Some(v) if v.is_refuted() => v,
        Some(v) if matches!(scalar, Verdict::NotApplicable { .. }) => v,
        _ => scalar,
    };
    let potential = check_potential(spec);

    let mut warnings = Vec::new();
    if !kb.certifying() {
        warnings.push(
            "kappa bounds were sampled, so margin-based certificates are not rigorous".into(),
        );
    }
    if let Some(dir) = kernel_equilibrium_ray(spec)? {
        let shown: Vec<String> = dir.iter().map(|v| format!("{v:.4}")).collect();
        warnings.push(format!(
            "multiple equilibria: every non-negative multiple of [{}] is an equilibrium",
            shown.join(", ")
        ));
    }
    if sm.is_symmetric
        && spec.strategy_dim() > 1
        && margins.positive(margins.alpha_min)
        && !strong_monotone.is_certified()
        && !p_upsilon.is_certified()
    {
        warnings.push(
            "min-eigenvalue margin is positive but couplings are heterogeneous with n > 1; no property follows".into(),
        );
    }

    let guarantees = guarantees(spec, &strong_monotone, &p_upsilon, &uniform_p, &potential);
    Ok(CertificateReport {
        spectral: sm,
        kappa: kb,
        margins,
        strong_monotone,
        p_upsilon,
        uniform_p,
        potential,
        guarantees,
        warnings,
    })
}

fn guarantees(
    spec: &GameSpec,
    strong_monotone: &Verdict,
    p_upsilon: &Verdict,
    uniform_p: &Verdict,
    potential: &PotentialVerdict,
) -> Vec<Guarantee> {
    use GuaranteeKind::*;
    let mut out = Vec::new();
    let mut push = |kind, criterion| {
        let g = Guarantee { kind, criterion };
        if !out.contains(&g) {
            out.push(g);
        }
    };
    if let Some(c) = strong_monotone.criterion() {
        push(ExistenceUniqueness, c);
        push(LipschitzContinuity, c);
        if spec.q_blocks().is_some() {
            push(ContinuousBrConvergence, Criterion::MonotoneDescent);
        }
    }
    if let Some(c) = p_upsilon.criterion() {
        push(ExistenceUniqueness, c);
        push(LipschitzContinuity, c);
        push(ContinuousBrConvergence, Criterion::BlockContraction);
        push(DiscreteSimultaneousBrConvergence, Criterion::BlockContraction);
        push(DiscreteSequentialBrConvergence, Criterion::BlockContraction);
    }
    if let Some(c) = uniform_p.criterion() {
        // A uniform P-function gives existence and uniqueness on rectangles;
        // scalar strategy sets are always intervals.
        let rectangular = spec.strategy_dim() == 1
            || spec
                .constraints()
                .iter()
                .all(|s| s.as_box(spec.strategy_dim()).is_some());
        if rectangular {
            push(ExistenceUniqueness, c);
            if spec.strategy_dim() == 1 {
                push(LipschitzContinuity, c);
            }
        } else {
            push(Uniqueness, c);
        }
    }
    if matches!(
        potential,
        PotentialVerdict::Exact | PotentialVerdict::Rescalable { .. }
    ) {
        push(ContinuousBrConvergence, Criterion::Potential);
        push(DiscreteSequentialBrConvergence, Criterion::Potential);
    }
    out
}

/// Uniform block P-function constant implied by a certified verdict, when
/// the verdict carries one that is valid for the block partition.
pub fn block_p_constant(report: &CertificateReport, spec: &GameSpec) -> Option<f64> {
    if let Some(c) = report.strong_monotone.constant() {
        return Some(c);
    }
    if spec.strategy_dim() == 1 {
        if let Verdict::Certified {
            criterion: Criterion::DiagonalScaling,
            constant,
            ..
        } = &report.uniform_p
        {
            return *constant;
        }
    }
    None
}
