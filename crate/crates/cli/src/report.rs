//! Verdict reports with machine-readable certificates.

use serde::{Deserialize, Serialize};
use steering_core::compat::{
    verify_common_instrument, verify_lhs, verify_parent, verify_witness, CommonInstrument, DualWitness, JmStatus,
    JmVerdict, LhsModel, ParentPovm, SteeringVerdict, JM_TOL,
};
use steering_core::qobjects::{InstrumentSet, MeasurementAssemblage, StateAssemblage};

use crate::error::CliError;
use crate::json::{from_labelled, to_labelled, JsonMatrix, LabelledMatrices};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParentPovmJson {
    pub settings: Vec<String>,
    pub strategies: Vec<Vec<String>>,
    pub effects: Vec<JsonMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LhsEnsembleJson {
    pub settings: Vec<String>,
    pub strategies: Vec<Vec<String>>,
    pub weights: Vec<f64>,
    pub states: Vec<JsonMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommonInstrumentJson {
    pub settings: Vec<String>,
    pub strategies: Vec<Vec<String>>,
    pub kraus: Vec<Vec<JsonMatrix>>,
}

/// Whatever certifies the verdict; all fields absent for marginal verdicts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_povm: Option<ParentPovmJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual_witness: Option<LabelledMatrices>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lhs_ensemble: Option<LhsEnsembleJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub common_instrument: Option<CommonInstrumentJson>,
    /// Dimension of the minimal dilation's dummy space, for channel verdicts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dummy_dim: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// Largest reconstruction error of the parent POVM and any derived certificate.
    pub max_reconstruction_error: Option<f64>,
    /// Certified witness value; positive for an incompatibility certificate.
    pub witness_value: Option<f64>,
    pub solver_gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    /// `jm`, `spatial`, `temporal` or `channel`.
    pub scenario: String,
    pub status: String,
    pub robustness: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steerable: Option<bool>,
    pub certificate: Certificate,
    pub residuals: Residuals,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic_margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<String>,
    pub scenario_echo: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationReport>,
}

impl VerdictReport {
    pub fn jm_status(&self) -> Result<JmStatus, CliError> {
        match self.status.as_str() {
            "JointlyMeasurable" => Ok(JmStatus::JointlyMeasurable),
            "Incompatible" => Ok(JmStatus::Incompatible),
            "NumericallyMarginal" => Ok(JmStatus::NumericallyMarginal),
            other => Err(CliError::Parse(format!("unknown status {other:?}"))),
        }
    }

    pub fn from_jm(v: &JmVerdict, echo: String) -> Self {
        let parent_povm = v.parent.as_ref().map(parent_json);
        let dual_witness = v.witness.as_ref().map(witness_json);
        Self {
            scenario: "jm".into(),
            status: v.status.as_str().into(),
            robustness: v.robustness,
            steerable: None,
            certificate: Certificate {
                parent_povm,
                dual_witness,
                ..Default::default()
            },
            residuals: residuals(v, v.residuals.parent_reconstruction),
            analytic_margin: None,
            annotations: Vec::new(),
            scenario_echo: echo,
            verification: None,
        }
    }

    pub fn from_steering(scenario: &str, v: &SteeringVerdict, echo: String) -> Self {
        let mut report = Self::from_jm(&v.jm, echo);
        report.scenario = scenario.into();
        report.steerable = v.status().is_decisive().then(|| v.is_steerable());
        report.certificate.lhs_ensemble = v.lhs.as_ref().map(lhs_json);
        report.certificate.common_instrument = v.common_instrument.as_ref().map(common_json);
        report.certificate.dummy_dim = v.dummy_dim;
        let worst = match (v.jm.residuals.parent_reconstruction, v.certificate_residual) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        report.residuals.max_reconstruction_error = worst;
        report
    }
}

fn residuals(v: &JmVerdict, reconstruction: Option<f64>) -> Residuals {
    Residuals {
        max_reconstruction_error: reconstruction,
        witness_value: v.residuals.witness_value,
        solver_gap: v.residuals.solver_gap,
        primal_residual: v.residuals.primal_residual,
        dual_residual: v.residuals.dual_residual,
        iterations: v.residuals.iterations,
    }
}

fn parent_json(p: &ParentPovm) -> ParentPovmJson {
    ParentPovmJson {
        settings: p.settings.clone(),
        strategies: p.strategies.clone(),
        effects: p.effects.iter().map(JsonMatrix::from_matrix).collect(),
    }
}

fn witness_json(w: &DualWitness) -> LabelledMatrices {
    from_labelled(w.operators.iter().map(|(x, o)| (x, o.iter())))
}

fn lhs_json(l: &LhsModel) -> LhsEnsembleJson {
    LhsEnsembleJson {
        settings: l.settings.clone(),
        strategies: l.strategies.clone(),
        weights: l.weights.clone(),
        states: l.states.iter().map(JsonMatrix::from_matrix).collect(),
    }
}

fn common_json(c: &CommonInstrument) -> CommonInstrumentJson {
    CommonInstrumentJson {
        settings: c.settings.clone(),
        strategies: c.strategies.clone(),
        kraus: c
            .kraus
            .iter()
            .map(|k| k.iter().map(JsonMatrix::from_matrix).collect())
            .collect(),
    }
}

fn matrices(list: &[JsonMatrix]) -> Result<Vec<steering_core::ComplexMatrix>, CliError> {
    list.iter().map(JsonMatrix::to_matrix).collect()
}

impl ParentPovmJson {
    pub fn to_core(&self) -> Result<ParentPovm, CliError> {
        Ok(ParentPovm {
            settings: self.settings.clone(),
            strategies: self.strategies.clone(),
            effects: matrices(&self.effects)?,
        })
    }
}

impl LhsEnsembleJson {
    pub fn to_core(&self) -> Result<LhsModel, CliError> {
        Ok(LhsModel {
            settings: self.settings.clone(),
            strategies: self.strategies.clone(),
            weights: self.weights.clone(),
            states: matrices(&self.states)?,
        })
    }
}

impl CommonInstrumentJson {
    pub fn to_core(&self) -> Result<CommonInstrument, CliError> {
        Ok(CommonInstrument {
            settings: self.settings.clone(),
            strategies: self.strategies.clone(),
            kraus: self.kraus.iter().map(|k| matrices(k)).collect::<Result<_, _>>()?,
        })
    }
}

/// One re-checked certificate component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    /// `max` for residuals that must stay below the bound, `min` for values that must exceed it.
    pub bound_kind: String,
    pub bound: f64,
    pub passed: bool,
}

impl CheckResult {
    fn at_most(name: &str, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound_kind: "max".into(),
            bound: JM_TOL,
            passed: value <= JM_TOL,
        }
    }

    fn above(name: &str, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound_kind: "min".into(),
            bound: JM_TOL,
            passed: value > JM_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub valid: bool,
    pub status: String,
    pub checks: Vec<CheckResult>,
}

/// What a report's certificate is checked against, re-derived from the scenario.
pub struct VerificationTarget<'a> {
    /// POVMs the parent or witness refers to.
    pub observables: &'a MeasurementAssemblage,
    pub assemblage: Option<&'a StateAssemblage>,
    pub instruments: Option<&'a InstrumentSet>,
}

/// Re-checks every certificate in `report` without solving anything.
pub fn verify_report(report: &VerdictReport, target: &VerificationTarget) -> Result<VerificationReport, CliError> {
    let status = report.jm_status()?;
    let cert = &report.certificate;
    let mut checks = Vec::new();
    let missing = |what: &str| CliError::Certificate(format!("{} verdict has no {what}", status.as_str()));
    match status {
        JmStatus::JointlyMeasurable => {
            let parent = cert
                .parent_povm
                .as_ref()
                .ok_or_else(|| missing("parent POVM"))?
                .to_core()?;
            checks.push(CheckResult::at_most(
                "parent_povm",
                verify_parent(target.observables, &parent)?.worst(),
            ));
            if let Some(sa) = target.assemblage {
                let lhs = cert
                    .lhs_ensemble
                    .as_ref()
                    .ok_or_else(|| missing("LHS ensemble"))?
                    .to_core()?;
                checks.push(CheckResult::at_most("lhs_ensemble", verify_lhs(sa, &lhs)?.worst()));
            }
            if let Some(ins) = target.instruments {
                let ci = cert
                    .common_instrument
                    .as_ref()
                    .ok_or_else(|| missing("common instrument"))?
                    .to_core()?;
                checks.push(CheckResult::at_most(
                    "common_instrument",
                    verify_common_instrument(ins, &ci)?.reconstruction,
                ));
            }
        }
        JmStatus::Incompatible => {
            let operators = to_labelled(cert.dual_witness.as_ref().ok_or_else(|| missing("dual witness"))?)?;
            let w = DualWitness { operators };
            let check = verify_witness(target.observables, &w, usize::MAX)?;
            checks.push(CheckResult::above("dual_witness", check.certified_value));
        }
        JmStatus::NumericallyMarginal => {}
    }
    Ok(VerificationReport {
        valid: checks.iter().all(|c| c.passed),
        status: status.as_str().into(),
        checks,
    })
}
