use std::collections::BTreeMap;

use proptest::prelude::*;
use steering_core::compat::{
    jm_decide, qubit_jm_criterion, verify_parent, verify_witness, JmStatus, DEFAULT_STRATEGY_CAP, JM_TOL,
};
use steering_core::linalg::ComplexMatrix;
use steering_core::qobjects::{MeasurementAssemblage, Povm};
use steering_core::random::{random_measurement_assemblage, random_unitary, rng_from_seed};

fn bloch() -> impl Strategy<Value = [f64; 3]> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, 0.0f64..=1.0).prop_filter_map("nonzero direction", |(x, y, z, r)| {
        let n = (x * x + y * y + z * z).sqrt();
        (n > 1e-3).then(|| [r * x / n, r * y / n, r * z / n])
    })
}

fn pair(a1: [f64; 3], a2: [f64; 3]) -> MeasurementAssemblage {
    MeasurementAssemblage::new([
        ("1".to_string(), Povm::qubit_binary(a1).unwrap()),
        ("2".to_string(), Povm::qubit_binary(a2).unwrap()),
    ])
    .unwrap()
}

fn map_effects(m: &MeasurementAssemblage, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> MeasurementAssemblage {
    MeasurementAssemblage::new(m.settings().map(|(x, p)| {
        let effects: Vec<_> = p.effects().map(|(a, e)| (a.clone(), f(e))).collect();
        (x.clone(), Povm::new(effects, &Default::default()).unwrap())
    }))
    .unwrap()
}

/// Trivial POVMs `p(a|x) 1` with the same labels as `m`; always jointly measurable.
fn trivial_like(m: &MeasurementAssemblage, seed: u64) -> MeasurementAssemblage {
    let mut rng = rng_from_seed(seed);
    let d = m.dim();
    MeasurementAssemblage::new(m.settings().map(|(x, p)| {
        let w: Vec<f64> = (0..p.len())
            .map(|_| rand::Rng::random_range(&mut rng, 0.05..1.0))
            .collect();
        let total: f64 = w.iter().sum();
        let effects: Vec<_> = p
            .labels()
            .zip(&w)
            .map(|(a, wi)| (a.clone(), ComplexMatrix::identity(d).scale(wi / total)))
            .collect();
        (x.clone(), Povm::new(effects, &Default::default()).unwrap())
    }))
    .unwrap()
}

fn random_set(seed: u64) -> MeasurementAssemblage {
    let mut rng = rng_from_seed(seed);
    let d = 2 + (seed % 2) as usize;
    let settings = 2 + (seed / 2 % 2) as usize;
    random_measurement_assemblage(d, settings, 2, &mut rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn qubit_pairs_match_the_analytic_criterion(a1 in bloch(), a2 in bloch()) {
        let (jm, margin) = qubit_jm_criterion(a1, a2).unwrap();
        prop_assume!(margin.abs() > 1e-5);
        let v = jm_decide(&pair(a1, a2)).unwrap();
        let expected = if jm { JmStatus::JointlyMeasurable } else { JmStatus::Incompatible };
        prop_assert_eq!(v.status, expected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn robustness_is_invariant_under_transpose_and_unitaries(seed in any::<u64>()) {
        let m = random_set(seed);
        let base = jm_decide(&m).unwrap();
        let transposed = jm_decide(&map_effects(&m, |e| e.transpose())).unwrap();
        let u = random_unitary(m.dim(), &mut rng_from_seed(seed ^ 0x5eed));
        let rotated = jm_decide(&map_effects(&m, |e| u.sandwich(e))).unwrap();
        prop_assert!((transposed.robustness - base.robustness).abs() < 1e-6);
        prop_assert!((rotated.robustness - base.robustness).abs() < 1e-6);
        if base.status.is_decisive() {
            prop_assert_eq!(transposed.status, base.status);
            prop_assert_eq!(rotated.status, base.status);
        }
    }

    #[test]
    fn dropping_settings_never_lowers_robustness(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let m = random_measurement_assemblage(2, 3, 2, &mut rng);
        let full = jm_decide(&m).unwrap();
        for subset in [["0", "1"], ["0", "2"], ["1", "2"]] {
            let sub = jm_decide(&m.restrict(&subset).unwrap()).unwrap();
            prop_assert!(sub.robustness >= full.robustness - 1e-6);
            if full.status == JmStatus::JointlyMeasurable {
                prop_assert!(sub.status != JmStatus::Incompatible);
            }
        }
    }

    #[test]
    fn certificates_are_sound(seed in any::<u64>()) {
        let m = random_set(seed);
        let v = jm_decide(&m).unwrap();
        match v.status {
            JmStatus::JointlyMeasurable => {
                let check = verify_parent(&m, v.parent.as_ref().unwrap()).unwrap();
                prop_assert!(check.worst() <= JM_TOL);
            }
            JmStatus::Incompatible => {
                let w = v.witness.as_ref().unwrap();
                let own = verify_witness(&m, w, DEFAULT_STRATEGY_CAP).unwrap();
                prop_assert!(own.certified_value > JM_TOL);
                // Any jointly measurable set scores at most zero.
                let jm_set = trivial_like(&m, seed);
                let other = verify_witness(&jm_set, w, DEFAULT_STRATEGY_CAP).unwrap();
                prop_assert!(other.certified_value <= 1e-9);
            }
            JmStatus::NumericallyMarginal => {}
        }
    }
}

#[test]
fn noisy_pauli_thresholds() {
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let inv_sqrt3 = 1.0 / 3f64.sqrt();
    for (count, threshold) in [(2, inv_sqrt2), (3, inv_sqrt3)] {
        let sharp = jm_decide(&MeasurementAssemblage::noisy_paulis(count, 1.0).unwrap()).unwrap();
        assert!(
            (sharp.robustness - threshold).abs() < 1e-6,
            "{count}: {}",
            sharp.robustness
        );
        for (eta, status) in [
            (threshold - 0.01, JmStatus::JointlyMeasurable),
            (threshold + 0.01, JmStatus::Incompatible),
        ] {
            let v = jm_decide(&MeasurementAssemblage::noisy_paulis(count, eta).unwrap()).unwrap();
            assert_eq!(v.status, status, "{count} settings at {eta}");
        }
    }
}

#[test]
fn witness_operators_cover_every_outcome() {
    let m = MeasurementAssemblage::noisy_paulis(3, 0.9).unwrap();
    let v = jm_decide(&m).unwrap();
    let w = v.witness.unwrap();
    let labels: BTreeMap<_, Vec<_>> = w
        .operators
        .iter()
        .map(|(x, o)| (x.clone(), o.keys().cloned().collect()))
        .collect();
    for (x, p) in m.settings() {
        assert_eq!(labels[x], p.labels().cloned().collect::<Vec<_>>());
    }
}
