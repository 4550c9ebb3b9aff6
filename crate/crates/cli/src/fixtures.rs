//! Hand-built scenario files bundled under `fixtures/`.
//!
//! The demo-generated fixtures come from [`crate::demo::run_demo`]; the ones here cover the
//! remaining verdict classes and error paths.

use steering_core::dilation::{instruments_from_dummy_povms, MinimalDilation};
use steering_core::linalg::ToleranceConfig;
use steering_core::qobjects::{luders_instruments, DensityMatrix, KrausChannel, MeasurementAssemblage, Povm};
use steering_core::ComplexMatrix;

use crate::error::CliError;
use crate::scenario::{Scenario, ToleranceOverrides};

const X: [f64; 3] = [1.0, 0.0, 0.0];
const Y: [f64; 3] = [0.0, 1.0, 0.0];
const Z: [f64; 3] = [0.0, 0.0, 1.0];

/// A matrix with rows of different length; must be rejected with `E_PARSE`.
pub const MALFORMED_RAGGED: &str = r#"{
  "kind": "measurement_assemblage",
  "settings": {
    "x": {
      "0": { "re": [[0.5, 0.5], [0.5]], "im": [[0.0, 0.0], [0.0, 0.0]] },
      "1": { "re": [[0.5, -0.5], [-0.5, 0.5]], "im": [[0.0, 0.0], [0.0, 0.0]] }
    }
  }
}
"#;

fn pair(a: [f64; 3], b: [f64; 3], eta: f64) -> Result<MeasurementAssemblage, CliError> {
    Ok(MeasurementAssemblage::noisy_qubit_observables(
        &[("a", a), ("b", b)],
        eta,
    )?)
}

fn ket0() -> Result<DensityMatrix, CliError> {
    Ok(DensityMatrix::pure(&ComplexMatrix::from_real_rows(&[&[1.0], &[0.0]]))?)
}

fn dephasing() -> Result<KrausChannel, CliError> {
    let cfg = ToleranceConfig::default();
    let k0 = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
    let k1 = ComplexMatrix::from_real_rows(&[&[0.0, 0.0], &[0.0, 1.0]]);
    Ok(KrausChannel::new(vec![k0, k1], &cfg)?)
}

/// Every hand-built fixture as `(file name, scenario)`.
pub fn bundled() -> Result<Vec<(&'static str, Scenario)>, CliError> {
    let cfg = ToleranceConfig::default();
    let luders_on_ket0 = |a, b, eta| -> Result<Scenario, CliError> {
        Ok(Scenario::Temporal {
            instruments: luders_instruments(&pair(a, b, eta)?)?,
            input: ket0()?,
        })
    };
    let dephasing_dilation = MinimalDilation::of_channel(&dephasing()?, &cfg)?;
    let xz_dummies = instruments_from_dummy_povms(&pair(X, Z, 1.0)?, &dephasing_dilation, &cfg)?;
    let identity = KrausChannel::new(vec![ComplexMatrix::identity(2)], &cfg)?;
    let single = MeasurementAssemblage::new([("z".to_string(), Povm::qubit_binary(Z)?)])?;
    Ok(vec![
        ("pauli_xz_sharp.json", Scenario::MeasurementAssemblage(pair(X, Z, 1.0)?)),
        (
            "pauli_xz_eta_0.5.json",
            Scenario::MeasurementAssemblage(pair(X, Z, 0.5)?),
        ),
        ("pauli_xy_sharp.json", Scenario::MeasurementAssemblage(pair(X, Y, 1.0)?)),
        ("single_povm.json", Scenario::MeasurementAssemblage(single)),
        ("luders_xz_eta_0.5_on_ket0.json", luders_on_ket0(X, Z, 0.5)?),
        ("luders_xy_eta_0.5_on_ket0.json", luders_on_ket0(X, Y, 0.5)?),
        ("dephasing_channel.json", Scenario::Channel(dephasing()?)),
        ("dephasing_xz_dummies.json", Scenario::ChannelScenario(xz_dummies)),
        ("identity_channel.json", Scenario::Channel(identity)),
    ])
}

/// Serialized text of every hand-built fixture, including the malformed one.
pub fn bundled_texts() -> Result<Vec<(&'static str, String)>, CliError> {
    let mut out: Vec<_> = bundled()?
        .into_iter()
        .map(|(name, s)| (name, s.to_file(ToleranceOverrides::default()).to_json()))
        .collect();
    out.push(("malformed_ragged.json", MALFORMED_RAGGED.to_string()));
    Ok(out)
}
