//! Offline re-validation of verdict certificates without re-solving.

use std::collections::BTreeMap;

use crate::compat::jm::{cartesian, DualWitness, ParentPovm};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, ComplexMatrix};
use crate::parallel::{map_range, Parallelism};
use crate::qobjects::{choi_of_kraus, InstrumentSet, MeasurementAssemblage, StateAssemblage};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParentCheck {
    /// `max ‖Σ_{λ(x)=a} G_λ − A_{a|x}‖_∞`.
    pub reconstruction: f64,
    /// `‖Σ_λ G_λ − 1‖_∞`.
    pub completeness: f64,
    pub min_eigenvalue: f64,
}

impl ParentCheck {
    pub fn worst(&self) -> f64 {
        self.reconstruction.max(self.completeness).max(-self.min_eigenvalue)
    }
}

pub fn verify_parent(m: &MeasurementAssemblage, parent: &ParentPovm) -> Result<ParentCheck> {
    let d = m.dim();
    if parent.effects.iter().any(|g| g.shape() != (d, d)) {
        return Err(Error::DimensionMismatch(
            "parent effects do not match the POVM dimension".into(),
        ));
    }
    let mut reconstruction: f64 = 0.0;
    for (x, povm) in m.settings() {
        for (a, e) in povm.effects() {
            let g = parent
                .marginal(x, a)
                .ok_or_else(|| Error::Validation(format!("parent has no setting {x:?}")))?;
            reconstruction = reconstruction.max(g.max_abs_diff(e));
        }
    }
    let mut total = ComplexMatrix::zeros(d, d);
    for g in &parent.effects {
        total += g;
    }
    let completeness = total.max_abs_diff(&ComplexMatrix::identity(d));
    let min_eigenvalue = parent
        .effects
        .iter()
        .map(|g| hermitian_eigenvalues(&g.hermitian_part())[0] - g.hermiticity_deviation())
        .fold(f64::INFINITY, f64::min);
    Ok(ParentCheck {
        reconstruction,
        completeness,
        min_eigenvalue,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessCheck {
    /// `Σ ⟨Y_{a|x}, A_{a|x}⟩`.
    pub raw_value: f64,
    /// `max_λ λ_max(Σ_x Y_{λ(x)|x})`; at most zero for an exact witness.
    pub violation: f64,
    /// `raw_value − d · max(violation, 0)`, a rigorous lower bound on the gap to
    /// the jointly measurable set.
    pub certified_value: f64,
}

/// `max_λ λ_max(Σ_x Y_{λ(x)|x})` over every deterministic strategy.
pub fn witness_violation(w: &DualWitness, mode: Parallelism) -> f64 {
    let per_setting: Vec<Vec<&ComplexMatrix>> = w.operators.values().map(|o| o.values().collect()).collect();
    let Some(d) = per_setting.first().and_then(|o| o.first()).map(|y| y.rows()) else {
        return 0.0;
    };
    let choices: Vec<Vec<usize>> = per_setting.iter().map(|o| (0..o.len()).collect()).collect();
    let strategies = cartesian(&choices);
    map_range(strategies.len(), mode, |l| {
        let mut sum = ComplexMatrix::zeros(d, d);
        for (x, &a) in strategies[l].iter().enumerate() {
            sum += per_setting[x][a];
        }
        *hermitian_eigenvalues(&sum.hermitian_part()).last().expect("non-empty")
    })
    .into_iter()
    .fold(f64::NEG_INFINITY, f64::max)
}

pub fn verify_witness(m: &MeasurementAssemblage, w: &DualWitness, strategy_cap: usize) -> Result<WitnessCheck> {
    let count = crate::compat::jm::strategy_count(m);
    if count > strategy_cap as u128 {
        return Err(Error::StrategyCapExceeded {
            count,
            cap: strategy_cap,
        });
    }
    let mut raw_value = 0.0;
    for (x, povm) in m.settings() {
        let ys = w
            .operators
            .get(x)
            .ok_or_else(|| Error::Validation(format!("witness has no setting {x:?}")))?;
        if ys.len() != povm.len() {
            return Err(Error::Validation(format!("witness outcomes for {x:?} do not match")));
        }
        for (a, e) in povm.effects() {
            let y = ys
                .get(a)
                .ok_or_else(|| Error::Validation(format!("witness has no outcome {a:?} for {x:?}")))?;
            if y.shape() != e.shape() {
                return Err(Error::DimensionMismatch("witness operator shape".into()));
            }
            raw_value += y.trace_product_re(e);
        }
    }
    if w.operators.len() != m.len() {
        return Err(Error::Validation("witness settings do not match".into()));
    }
    let violation = witness_violation(w, Parallelism::Sequential);
    let certified_value = raw_value - m.dim() as f64 * violation.max(0.0);
    Ok(WitnessCheck {
        raw_value,
        violation,
        certified_value,
    })
}

/// Local hidden state ensemble `{p(λ), σ_λ}` with deterministic responses.
#[derive(Debug, Clone, PartialEq)]
pub struct LhsModel {
    pub settings: Vec<String>,
    /// Outcome label each hidden variable assigns to each setting.
    pub strategies: Vec<Vec<String>>,
    pub weights: Vec<f64>,
    /// Normalized hidden states `σ_λ`.
    pub states: Vec<ComplexMatrix>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LhsCheck {
    /// `max ‖Σ_λ p(λ) p(a|x,λ) σ_λ − ρ_{a|x}‖_∞`.
    pub reconstruction: f64,
    pub min_weight: f64,
    pub min_eigenvalue: f64,
    pub max_trace_error: f64,
}

impl LhsCheck {
    pub fn worst(&self) -> f64 {
        self.reconstruction
            .max(-self.min_weight)
            .max(-self.min_eigenvalue)
            .max(self.max_trace_error)
    }
}

pub fn verify_lhs(sa: &StateAssemblage, lhs: &LhsModel) -> Result<LhsCheck> {
    let d = sa.dim();
    if lhs.states.iter().any(|s| s.shape() != (d, d))
        || lhs.weights.len() != lhs.states.len()
        || lhs.strategies.len() != lhs.states.len()
    {
        return Err(Error::DimensionMismatch("LHS model shape".into()));
    }
    let mut reconstruction: f64 = 0.0;
    for (x, outcomes) in sa.settings() {
        let xi = lhs
            .settings
            .iter()
            .position(|s| s == x)
            .ok_or_else(|| Error::Validation(format!("LHS model has no setting {x:?}")))?;
        for (a, rho) in outcomes {
            let mut sum = ComplexMatrix::zeros(d, d);
            for ((s, &p), sigma) in lhs.strategies.iter().zip(&lhs.weights).zip(&lhs.states) {
                if &s[xi] == a {
                    sum += &sigma.scale(p);
                }
            }
            reconstruction = reconstruction.max(sum.max_abs_diff(rho));
        }
    }
    let min_weight = lhs.weights.iter().copied().fold(f64::INFINITY, f64::min);
    let min_eigenvalue = lhs
        .states
        .iter()
        .map(|s| hermitian_eigenvalues(&s.hermitian_part())[0] - s.hermiticity_deviation())
        .fold(f64::INFINITY, f64::min);
    let max_trace_error = lhs
        .states
        .iter()
        .map(|s| (s.trace().re - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(LhsCheck {
        reconstruction,
        min_weight: if lhs.weights.is_empty() { 0.0 } else { min_weight },
        min_eigenvalue: if lhs.states.is_empty() { 0.0 } else { min_eigenvalue },
        max_trace_error,
    })
}

/// Common instrument `{𝓘_λ}` with deterministic post-processing.
#[derive(Debug, Clone, PartialEq)]
pub struct CommonInstrument {
    pub settings: Vec<String>,
    pub strategies: Vec<Vec<String>>,
    /// Kraus operators of `𝓘_λ`.
    pub kraus: Vec<Vec<ComplexMatrix>>,
}

impl CommonInstrument {
    pub fn chois(&self) -> Vec<ComplexMatrix> {
        self.kraus.iter().map(|k| choi_of_kraus(k)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommonInstrumentCheck {
    /// `max ‖J(Σ_{λ(x)=a} 𝓘_λ) − J(𝓘_{a|x})‖_∞` over Choi matrices.
    pub reconstruction: f64,
}

pub fn verify_common_instrument(ins: &InstrumentSet, ci: &CommonInstrument) -> Result<CommonInstrumentCheck> {
    let chois = ci.chois();
    let target: BTreeMap<String, BTreeMap<String, ComplexMatrix>> = ins.chois();
    let n = ins.d_in() * ins.d_out();
    if chois.iter().any(|j| j.shape() != (n, n)) || ci.strategies.len() != chois.len() {
        return Err(Error::DimensionMismatch("common instrument shape".into()));
    }
    let mut reconstruction: f64 = 0.0;
    for (x, outcomes) in &target {
        let xi = ci
            .settings
            .iter()
            .position(|s| s == x)
            .ok_or_else(|| Error::Validation(format!("common instrument has no setting {x:?}")))?;
        for (a, j) in outcomes {
            let mut sum = ComplexMatrix::zeros(n, n);
            for (s, jl) in ci.strategies.iter().zip(&chois) {
                if &s[xi] == a {
                    sum += jl;
                }
            }
            reconstruction = reconstruction.max(sum.max_abs_diff(j));
        }
    }
    Ok(CommonInstrumentCheck { reconstruction })
}
