//! Spatial, temporal and channel steering decided through joint measurability.

use crate::compat::certificate::{verify_common_instrument, verify_lhs, CommonInstrument, LhsModel};
use std::collections::BTreeMap;

use crate::compat::jm::{jm_decide_with, JmOptions, JmStatus, JmVerdict, ParentPovm, StrategySpace, JM_TOL};
use crate::dilation::{
    canonical_purification, extract_dummy_povms, kraus_for_dummy_effect, MinimalDilation, Purification,
    NONSIGNALLING_TOL,
};
use crate::error::{Error, Result};
use crate::linalg::{pinv_sqrt_on_support, sqrt_psd, support_projector, ComplexMatrix, ToleranceConfig};
use crate::qobjects::{
    apply_instrument, is_nonsignalling, DensityMatrix, InstrumentSet, MeasurementAssemblage, Povm, StateAssemblage,
};

/// Hidden states with weight below this are dropped from an LHS certificate.
const NEGLIGIBLE_WEIGHT: f64 = 1e-15;

#[derive(Debug, Clone, Copy, Default)]
pub struct SteeringOptions {
    pub jm: JmOptions,
    pub tolerances: ToleranceConfig,
}

/// A joint-measurability verdict on the reduced POVMs, with the steering certificate.
#[derive(Debug, Clone)]
pub struct SteeringVerdict {
    pub jm: JmVerdict,
    /// The POVMs whose joint measurability was decided.
    pub observables: MeasurementAssemblage,
    pub lhs: Option<LhsModel>,
    pub common_instrument: Option<CommonInstrument>,
    /// Residual of the unsteerability certificate against the input.
    pub certificate_residual: Option<f64>,
    /// Dummy dimension of the minimal dilation (channel steering only).
    pub dummy_dim: Option<usize>,
}

impl SteeringVerdict {
    pub fn status(&self) -> JmStatus {
        self.jm.status
    }

    pub fn robustness(&self) -> f64 {
        self.jm.robustness
    }

    pub fn is_steerable(&self) -> bool {
        self.jm.status == JmStatus::Incompatible
    }

    pub fn is_unsteerable(&self) -> bool {
        self.jm.status == JmStatus::JointlyMeasurable
    }

    fn plain(jm: JmVerdict, observables: MeasurementAssemblage) -> Self {
        Self {
            jm,
            observables,
            lhs: None,
            common_instrument: None,
            certificate_residual: None,
            dummy_dim: None,
        }
    }

    /// Records the certificate residual; a failing certificate demotes the verdict.
    fn certify(&mut self, residual: f64) {
        self.certificate_residual = Some(residual);
        if residual > JM_TOL {
            self.jm.status = JmStatus::NumericallyMarginal;
            self.jm.parent = None;
            self.lhs = None;
            self.common_instrument = None;
        }
    }
}

fn require_nonsignalling(sa: &StateAssemblage) -> Result<()> {
    let report = is_nonsignalling(sa, NONSIGNALLING_TOL);
    if report.nonsignalling {
        Ok(())
    } else {
        Err(Error::Signalling {
            max_deviation: report.max_deviation,
        })
    }
}

/// Smallest nonzero eigenvalue of `ρ_B` and the matching tolerance scale.
fn support_scale(rho_b: &ComplexMatrix, cfg: &ToleranceConfig) -> f64 {
    crate::linalg::hermitian_eigenvalues(rho_b)
        .into_iter()
        .filter(|&l| l > cfg.support_tol)
        .fold(f64::INFINITY, f64::min)
}

/// `B_{a|x} = ρ_B^{-1/2} ρ_{a|x} ρ_B^{-1/2}` on the support of `ρ_B`, completed
/// on the kernel by `P_ker / o_x` for each outcome.
pub fn steering_equivalent_observables(sa: &StateAssemblage, cfg: &ToleranceConfig) -> Result<MeasurementAssemblage> {
    require_nonsignalling(sa)?;
    let d = sa.dim();
    let rho_b = sa.reduced_state();
    let inv_sqrt = pinv_sqrt_on_support(&rho_b, cfg)?;
    let kernel = &ComplexMatrix::identity(d) - &support_projector(&rho_b, cfg)?;
    let lambda_min = support_scale(&rho_b, cfg);
    // Errors of size ε in ρ_{a|x} grow to ε/λ_min in B.
    let relaxed = ToleranceConfig {
        psd_tol: cfg.psd_tol / lambda_min,
        hermiticity_tol: cfg.hermiticity_tol / lambda_min,
        ..*cfg
    };
    let completeness_tol = (d as f64 * NONSIGNALLING_TOL / lambda_min).max(NONSIGNALLING_TOL);
    let settings = sa
        .settings()
        .map(|(x, outcomes)| {
            let share = kernel.scale(1.0 / outcomes.len() as f64);
            let effects = outcomes.iter().map(|(a, rho)| {
                let b = inv_sqrt.matmul(rho).matmul(&inv_sqrt).hermitian_part();
                (a.clone(), &b + &share)
            });
            Povm::with_completeness_tol(effects, &relaxed, completeness_tol).map(|p| (x.clone(), p))
        })
        .collect::<Result<Vec<_>>>()?;
    MeasurementAssemblage::new(settings)
}

/// Dummy POVMs `Ã_{a|x} = (ρ_B^{-1/2} ρ_{a|x} ρ_B^{-1/2})ᵀ` in the eigenbasis of
/// `ρ_B`, restricted to its support, together with that purification.
pub fn assemblage_dummy_povms(
    sa: &StateAssemblage,
    cfg: &ToleranceConfig,
) -> Result<(MeasurementAssemblage, Purification)> {
    require_nonsignalling(sa)?;
    let rho_b = sa.reduced_state();
    let pur = canonical_purification(&rho_b, cfg)?;
    let r = pur.support_dim();
    let v = &pur.eigenbasis;
    let lambda_min = pur.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let relaxed = ToleranceConfig {
        psd_tol: cfg.psd_tol / lambda_min,
        hermiticity_tol: cfg.hermiticity_tol / lambda_min,
        ..*cfg
    };
    let completeness_tol = (r as f64 * NONSIGNALLING_TOL / lambda_min).max(NONSIGNALLING_TOL);
    let settings = sa
        .settings()
        .map(|(x, outcomes)| {
            let effects = outcomes.iter().map(|(a, rho)| {
                let coords = v.adjoint().matmul(rho).matmul(v);
                let scaled = ComplexMatrix::from_fn(r, r, |i, j| {
                    coords[(j, i)] / (pur.eigenvalues[i] * pur.eigenvalues[j]).sqrt()
                });
                (a.clone(), scaled.hermitian_part())
            });
            Povm::with_completeness_tol(effects, &relaxed, completeness_tol).map(|p| (x.clone(), p))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((MeasurementAssemblage::new(settings)?, pur))
}

pub fn decide_state_steering(sa: &StateAssemblage) -> Result<SteeringVerdict> {
    decide_state_steering_with(sa, &SteeringOptions::default())
}

/// Unsteerable iff the steering-equivalent observables are jointly measurable.
///
/// A jointly measurable verdict carries the LHS ensemble
/// `σ_λ ∝ ρ_B^{1/2} G_λ ρ_B^{1/2}`, `p(λ) = tr[ρ_B^{1/2} G_λ ρ_B^{1/2}]`.
pub fn decide_state_steering_with(sa: &StateAssemblage, opts: &SteeringOptions) -> Result<SteeringVerdict> {
    let cfg = &opts.tolerances;
    let observables = steering_equivalent_observables(sa, cfg)?;
    let support = canonical_purification(&sa.reduced_state(), cfg)?.eigenbasis;
    let jm = if support.cols() == observables.dim() {
        jm_decide_with(&observables, &opts.jm)?
    } else {
        let restricted = restrict_to_support(&observables, &support, cfg)?;
        lift_from_support(jm_decide_with(&restricted, &opts.jm)?, &observables, &support)
    };
    let mut verdict = SteeringVerdict::plain(jm, observables);
    if let Some(parent) = verdict.jm.parent.as_ref() {
        let sqrt_b = sqrt_psd(&sa.reduced_state(), cfg)?;
        let mut lhs = LhsModel {
            settings: parent.settings.clone(),
            strategies: Vec::new(),
            weights: Vec::new(),
            states: Vec::new(),
        };
        for (strategy, g) in parent.strategies.iter().zip(&parent.effects) {
            let m = sqrt_b.matmul(g).matmul(&sqrt_b).hermitian_part();
            let p = m.trace().re;
            if p > NEGLIGIBLE_WEIGHT {
                lhs.strategies.push(strategy.clone());
                lhs.weights.push(p);
                lhs.states.push(m.scale(1.0 / p));
            }
        }
        let residual = verify_lhs(sa, &lhs)?.worst();
        verdict.lhs = Some(lhs);
        verdict.certify(residual);
    }
    Ok(verdict)
}

/// `V† B_{a|x} V` for the `d×r` support isometry `V`.
fn restrict_to_support(
    m: &MeasurementAssemblage,
    support: &ComplexMatrix,
    cfg: &ToleranceConfig,
) -> Result<MeasurementAssemblage> {
    let settings = m
        .settings()
        .map(|(x, p)| {
            let effects = p
                .effects()
                .map(|(a, e)| (a.clone(), support.adjoint().matmul(e).matmul(support).hermitian_part()));
            Povm::with_completeness_tol(effects, cfg, JM_TOL).map(|p| (x.clone(), p))
        })
        .collect::<Result<Vec<_>>>()?;
    MeasurementAssemblage::new(settings)
}

/// Embeds a verdict on the support back into the full space.
///
/// The kernel is shared uniformly: strategy `λ` receives `P_ker Π_x 1/o_x`,
/// which reproduces the `P_ker / o_x` completion. Witness operators vanish on
/// the kernel. The robustness is the one found on the support, so it does not
/// depend on how many unused dimensions surround the support.
fn lift_from_support(mut jm: JmVerdict, full: &MeasurementAssemblage, support: &ComplexMatrix) -> JmVerdict {
    let d = full.dim();
    let lift = |y: &ComplexMatrix| support.matmul(y).matmul(&support.adjoint());
    let kernel = &ComplexMatrix::identity(d) - &support.matmul(&support.adjoint());
    if let Some(parent) = jm.parent.take() {
        let space = StrategySpace::full(full);
        let share: f64 = full.outcome_counts().iter().map(|&o| 1.0 / o as f64).product();
        let found: BTreeMap<Vec<String>, &ComplexMatrix> =
            parent.strategies.iter().cloned().zip(&parent.effects).collect();
        let strategies: Vec<Vec<String>> = (0..space.len()).map(|l| space.labels(l)).collect();
        let effects = strategies
            .iter()
            .map(|s| {
                let g = kernel.scale(share);
                match found.get(s) {
                    Some(e) => &g + &lift(e),
                    None => g,
                }
            })
            .collect();
        jm.parent = Some(ParentPovm {
            settings: parent.settings,
            strategies,
            effects,
        });
    }
    if let Some(w) = jm.witness.as_mut() {
        for outs in w.operators.values_mut() {
            for y in outs.values_mut() {
                *y = lift(y);
            }
        }
    }
    jm
}

pub fn decide_temporal_steering(ins: &InstrumentSet, rho: &DensityMatrix) -> Result<SteeringVerdict> {
    decide_temporal_steering_with(ins, rho, &SteeringOptions::default())
}

/// Decides the assemblage `𝓘_{a|x}(ρ)`, which must be non-signalling.
pub fn decide_temporal_steering_with(
    ins: &InstrumentSet,
    rho: &DensityMatrix,
    opts: &SteeringOptions,
) -> Result<SteeringVerdict> {
    let sa = apply_instrument(ins, rho)?;
    require_nonsignalling(&sa)?;
    decide_state_steering_with(&sa, opts)
}

pub fn decide_channel_steering(ins: &InstrumentSet) -> Result<SteeringVerdict> {
    decide_channel_steering_with(ins, &SteeringOptions::default())
}

/// Unsteerable iff the dummy POVMs of the minimal dilation are jointly measurable.
///
/// A jointly measurable verdict carries the common instrument generated by the
/// parent dummy POVM.
pub fn decide_channel_steering_with(ins: &InstrumentSet, opts: &SteeringOptions) -> Result<SteeringVerdict> {
    let cfg = &opts.tolerances;
    let deviation = ins.signalling_deviation();
    if deviation > NONSIGNALLING_TOL {
        return Err(Error::Signalling {
            max_deviation: deviation,
        });
    }
    let first = ins
        .settings()
        .next()
        .map(|(x, _)| x.clone())
        .ok_or_else(|| Error::Validation("instrument set is empty".into()))?;
    let channel = ins.total_channel(&first).expect("setting exists");
    let dil = MinimalDilation::of_channel(&channel, cfg)?;
    let extraction = extract_dummy_povms(ins, &dil, cfg)?;
    let jm = jm_decide_with(&extraction.povms, &opts.jm)?;
    let mut verdict = SteeringVerdict::plain(jm, extraction.povms);
    verdict.dummy_dim = Some(dil.dummy_dim());
    if let Some(parent) = verdict.jm.parent.as_ref() {
        let kraus = parent
            .effects
            .iter()
            .map(|g| kraus_for_dummy_effect(g, dil.channel().kraus(), cfg))
            .collect::<Result<Vec<_>>>()?;
        let ci = CommonInstrument {
            settings: parent.settings.clone(),
            strategies: parent.strategies.clone(),
            kraus,
        };
        let residual = verify_common_instrument(ins, &ci)?.reconstruction;
        verdict.common_instrument = Some(ci);
        verdict.certify(residual);
    }
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::tensor;
    use crate::qobjects::{luders_instruments, AssemblageMembers};
    use num_complex::Complex64;
    use std::collections::BTreeMap;

    fn pauli_assemblage_from_phi_plus(settings: &[&str]) -> StateAssemblage {
        // |φ⁺⟩ = (|00⟩+|11⟩)/√2 and Alice measures sharp Paulis.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phi = ComplexMatrix::column(&[
            Complex64::new(h, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(h, 0.0),
        ]);
        let rho = ComplexMatrix::projector(&phi);
        let paulis = MeasurementAssemblage::noisy_paulis(3, 1.0).unwrap();
        let mut members = AssemblageMembers::new();
        for x in settings {
            let povm = paulis.setting(x).unwrap();
            let mut outs = BTreeMap::new();
            for (a, e) in povm.effects() {
                let op = tensor(e, &ComplexMatrix::identity(2)).matmul(&rho);
                let reduced = crate::linalg::partial_trace(&op, (2, 2), crate::linalg::Subsystem::B).unwrap();
                outs.insert(a.clone(), reduced.hermitian_part());
            }
            members.insert(x.to_string(), outs);
        }
        StateAssemblage::new(members, &ToleranceConfig::default()).unwrap()
    }

    #[test]
    fn uncorrelated_assemblage_gives_trivial_observables() {
        let cfg = ToleranceConfig::default();
        let rho_b = ComplexMatrix::from_diagonal(&[0.7, 0.3]);
        let mut members = AssemblageMembers::new();
        let mut outs = BTreeMap::new();
        outs.insert("0".to_string(), rho_b.scale(0.25));
        outs.insert("1".to_string(), rho_b.scale(0.75));
        members.insert("x".to_string(), outs);
        let sa = StateAssemblage::new(members, &cfg).unwrap();
        let b = steering_equivalent_observables(&sa, &cfg).unwrap();
        let e = b.setting("x").unwrap().effect("0").unwrap();
        assert!(e.max_abs_diff(&ComplexMatrix::identity(2).scale(0.25)) < 1e-12);
        let v = decide_state_steering(&sa).unwrap();
        assert!(v.is_unsteerable());
    }

    #[test]
    fn maximally_entangled_pauli_observables_are_transposed_projectors() {
        let sa = pauli_assemblage_from_phi_plus(&["x", "y", "z"]);
        let b = steering_equivalent_observables(&sa, &ToleranceConfig::default()).unwrap();
        let paulis = MeasurementAssemblage::noisy_paulis(3, 1.0).unwrap();
        for (x, povm) in paulis.settings() {
            for (a, e) in povm.effects() {
                let got = b.setting(x).unwrap().effect(a).unwrap();
                assert!(got.max_abs_diff(&e.transpose()) < 1e-10, "{x} {a}");
            }
        }
    }

    #[test]
    fn two_setting_entangled_assemblage_is_steerable() {
        let sa = pauli_assemblage_from_phi_plus(&["x", "z"]);
        let v = decide_state_steering(&sa).unwrap();
        assert!(v.is_steerable());
        assert!((v.robustness() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
    }

    #[test]
    fn kernel_completion_on_rank_deficient_marginal() {
        let cfg = ToleranceConfig::default();
        let mut members = AssemblageMembers::new();
        let mut outs = BTreeMap::new();
        outs.insert("0".to_string(), ComplexMatrix::from_diagonal(&[0.4, 0.0, 0.0]));
        outs.insert("1".to_string(), ComplexMatrix::from_diagonal(&[0.0, 0.6, 0.0]));
        members.insert("x".to_string(), outs);
        let sa = StateAssemblage::new(members, &cfg).unwrap();
        let b = steering_equivalent_observables(&sa, &cfg).unwrap();
        let e0 = b.setting("x").unwrap().effect("0").unwrap();
        assert!(e0.max_abs_diff(&ComplexMatrix::from_diagonal(&[1.0, 0.0, 0.5])) < 1e-12);
        let (dummy, pur) = assemblage_dummy_povms(&sa, &cfg).unwrap();
        assert_eq!(pur.support_dim(), 2);
        assert_eq!(dummy.dim(), 2);
    }

    #[test]
    fn temporal_luders_signalling_is_rejected() {
        let m = MeasurementAssemblage::noisy_paulis(3, 0.5)
            .unwrap()
            .restrict(&["x", "z"])
            .unwrap();
        let ins = luders_instruments(&m).unwrap();
        let zero = DensityMatrix::pure(&ComplexMatrix::basis_ket(2, 0)).unwrap();
        assert!(matches!(
            decide_temporal_steering(&ins, &zero),
            Err(Error::Signalling { .. })
        ));
    }

    #[test]
    fn temporal_luders_triple_on_both_sides_of_threshold() {
        let mixed = DensityMatrix::maximally_mixed(2);
        for (eta, steerable) in [(0.5, false), (0.7, true)] {
            let ins = luders_instruments(&MeasurementAssemblage::noisy_paulis(3, eta).unwrap()).unwrap();
            let v = decide_temporal_steering(&ins, &mixed).unwrap();
            assert_eq!(v.is_steerable(), steerable, "eta = {eta}");
            assert!(v.status().is_decisive());
        }
    }
}
