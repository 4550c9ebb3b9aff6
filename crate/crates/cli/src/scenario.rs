//! The `ScenarioFile` JSON format and its conversion to validated objects.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use steering_core::qobjects::{
    DensityMatrix, InstrumentMaps, InstrumentSet, KrausChannel, MeasurementAssemblage, Povm, StateAssemblage,
};
use steering_core::{ComplexMatrix, ToleranceConfig};

use crate::error::CliError;
use crate::json::{from_labelled, to_labelled, JsonMatrix, LabelledMatrices};

pub type Dims = BTreeMap<String, usize>;
pub type JsonInstruments = BTreeMap<String, BTreeMap<String, Vec<JsonMatrix>>>;

/// Optional per-file overrides of [`ToleranceConfig`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hermiticity_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psd_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equality_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support_tol: Option<f64>,
}

impl ToleranceOverrides {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    pub fn apply(&self, base: ToleranceConfig) -> ToleranceConfig {
        ToleranceConfig {
            hermiticity_tol: self.hermiticity_tol.unwrap_or(base.hermiticity_tol),
            psd_tol: self.psd_tol.unwrap_or(base.psd_tol),
            equality_tol: self.equality_tol.unwrap_or(base.equality_tol),
            support_tol: self.support_tol.unwrap_or(base.support_tol),
        }
    }

    /// Later values win.
    pub fn merged(&self, later: &ToleranceOverrides) -> ToleranceOverrides {
        ToleranceOverrides {
            hermiticity_tol: later.hermiticity_tol.or(self.hermiticity_tol),
            psd_tol: later.psd_tol.or(self.psd_tol),
            equality_tol: later.equality_tol.or(self.equality_tol),
            support_tol: later.support_tol.or(self.support_tol),
        }
    }
}

pub fn validated(cfg: ToleranceConfig) -> Result<ToleranceConfig, CliError> {
    cfg.validate()
        .map_err(|_| CliError::Validation("tolerances must be finite and strictly positive".into()))?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateAssemblageFile {
    #[serde(default)]
    pub dims: Dims,
    /// `ρ_{a|x}` keyed by setting, then outcome.
    pub members: LabelledMatrices,
    #[serde(default, skip_serializing_if = "ToleranceOverrides::is_empty")]
    pub tolerances: ToleranceOverrides,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementAssemblageFile {
    #[serde(default)]
    pub dims: Dims,
    /// Effects keyed by setting, then outcome.
    pub settings: LabelledMatrices,
    #[serde(default, skip_serializing_if = "ToleranceOverrides::is_empty")]
    pub tolerances: ToleranceOverrides,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    #[serde(default)]
    pub dims: Dims,
    pub kraus: Vec<JsonMatrix>,
    #[serde(default, skip_serializing_if = "ToleranceOverrides::is_empty")]
    pub tolerances: ToleranceOverrides,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstrumentSetFile {
    #[serde(default)]
    pub dims: Dims,
    /// Kraus operators keyed by setting, then outcome.
    pub instruments: JsonInstruments,
    #[serde(default, skip_serializing_if = "ToleranceOverrides::is_empty")]
    pub tolerances: ToleranceOverrides,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BipartiteScenarioFile {
    #[serde(default)]
    pub dims: Dims,
    /// `ρ_AB` with Alice's factor first.
    pub state: JsonMatrix,
    pub alice: LabelledMatrices,
    #[serde(default, skip_serializing_if = "ToleranceOverrides::is_empty")]
    pub tolerances: ToleranceOverrides,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemporalScenarioFile {
    #[serde(default)]
    pub dims: Dims,
    pub instruments: JsonInstruments,
    pub input: JsonMatrix,
    #[serde(default, skip_serializing_if = "ToleranceOverrides::is_empty")]
    pub tolerances: ToleranceOverrides,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioFile {
    StateAssemblage(StateAssemblageFile),
    MeasurementAssemblage(MeasurementAssemblageFile),
    Channel(ChannelFile),
    InstrumentSet(InstrumentSetFile),
    BipartiteScenario(BipartiteScenarioFile),
    ChannelScenario(InstrumentSetFile),
    TemporalScenario(TemporalScenarioFile),
}

/// Validated contents of a scenario file.
#[derive(Debug, Clone)]
pub enum Scenario {
    StateAssemblage(StateAssemblage),
    MeasurementAssemblage(MeasurementAssemblage),
    Channel(KrausChannel),
    InstrumentSet(InstrumentSet),
    Bipartite {
        state: DensityMatrix,
        alice: MeasurementAssemblage,
    },
    ChannelScenario(InstrumentSet),
    Temporal {
        instruments: InstrumentSet,
        input: DensityMatrix,
    },
}

impl ScenarioFile {
    pub fn kind(&self) -> &'static str {
        match self {
            ScenarioFile::StateAssemblage(_) => "state_assemblage",
            ScenarioFile::MeasurementAssemblage(_) => "measurement_assemblage",
            ScenarioFile::Channel(_) => "channel",
            ScenarioFile::InstrumentSet(_) => "instrument_set",
            ScenarioFile::BipartiteScenario(_) => "bipartite_scenario",
            ScenarioFile::ChannelScenario(_) => "channel_scenario",
            ScenarioFile::TemporalScenario(_) => "temporal_scenario",
        }
    }

    pub fn tolerances(&self) -> ToleranceOverrides {
        match self {
            ScenarioFile::StateAssemblage(f) => f.tolerances,
            ScenarioFile::MeasurementAssemblage(f) => f.tolerances,
            ScenarioFile::Channel(f) => f.tolerances,
            ScenarioFile::InstrumentSet(f) | ScenarioFile::ChannelScenario(f) => f.tolerances,
            ScenarioFile::BipartiteScenario(f) => f.tolerances,
            ScenarioFile::TemporalScenario(f) => f.tolerances,
        }
    }

    fn dims(&self) -> &Dims {
        match self {
            ScenarioFile::StateAssemblage(f) => &f.dims,
            ScenarioFile::MeasurementAssemblage(f) => &f.dims,
            ScenarioFile::Channel(f) => &f.dims,
            ScenarioFile::InstrumentSet(f) | ScenarioFile::ChannelScenario(f) => &f.dims,
            ScenarioFile::BipartiteScenario(f) => &f.dims,
            ScenarioFile::TemporalScenario(f) => &f.dims,
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    /// Pretty JSON with sorted labels and a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario files always serialize");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_json()).map_err(|e| CliError::io(path, e))
    }

    /// `sha256:` digest of the normalized form.
    pub fn echo(&self, cfg: &ToleranceConfig) -> Result<String, CliError> {
        let normalized = self.load(cfg)?.to_file(self.tolerances()).to_json();
        Ok(format!("sha256:{:x}", Sha256::digest(normalized.as_bytes())))
    }

    /// Validates the payload and the declared dimensions.
    pub fn load(&self, cfg: &ToleranceConfig) -> Result<Scenario, CliError> {
        let scenario = match self {
            ScenarioFile::StateAssemblage(f) => {
                Scenario::StateAssemblage(StateAssemblage::new(to_labelled(&f.members)?, cfg)?)
            }
            ScenarioFile::MeasurementAssemblage(f) => Scenario::MeasurementAssemblage(measurements(&f.settings, cfg)?),
            ScenarioFile::Channel(f) => Scenario::Channel(KrausChannel::new(matrices(&f.kraus)?, cfg)?),
            ScenarioFile::InstrumentSet(f) => Scenario::InstrumentSet(instruments(&f.instruments, cfg)?),
            ScenarioFile::ChannelScenario(f) => Scenario::ChannelScenario(instruments(&f.instruments, cfg)?),
            ScenarioFile::BipartiteScenario(f) => {
                let state = DensityMatrix::new(f.state.to_matrix()?, cfg)?;
                let alice = measurements(&f.alice, cfg)?;
                if state.dim() % alice.dim() != 0 {
                    return Err(CliError::Validation(format!(
                        "state dimension {} does not factor with Alice's dimension {}",
                        state.dim(),
                        alice.dim()
                    )));
                }
                Scenario::Bipartite { state, alice }
            }
            ScenarioFile::TemporalScenario(f) => {
                let instruments = instruments(&f.instruments, cfg)?;
                let input = DensityMatrix::new(f.input.to_matrix()?, cfg)?;
                if input.dim() != instruments.d_in() {
                    return Err(CliError::Validation(format!(
                        "input dimension {} does not match the instruments' input dimension {}",
                        input.dim(),
                        instruments.d_in()
                    )));
                }
                Scenario::Temporal { instruments, input }
            }
        };
        let actual = scenario.dims();
        for (key, &declared) in self.dims() {
            match actual.get(key) {
                Some(&v) if v == declared => {}
                Some(&v) => {
                    return Err(CliError::Validation(format!(
                        "dims.{key} is {declared} but the payload has {v}"
                    )))
                }
                None => {
                    return Err(CliError::Validation(format!(
                        "unknown dimension {key:?} for {}",
                        self.kind()
                    )))
                }
            }
        }
        Ok(scenario)
    }
}

fn matrices(list: &[JsonMatrix]) -> Result<Vec<ComplexMatrix>, CliError> {
    list.iter().map(JsonMatrix::to_matrix).collect()
}

fn measurements(settings: &LabelledMatrices, cfg: &ToleranceConfig) -> Result<MeasurementAssemblage, CliError> {
    let povms = to_labelled(settings)?
        .into_iter()
        .map(|(x, effects)| Ok((x, Povm::new(effects, cfg)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(MeasurementAssemblage::new(povms)?)
}

fn instruments(maps: &JsonInstruments, cfg: &ToleranceConfig) -> Result<InstrumentSet, CliError> {
    let parsed: InstrumentMaps = maps
        .iter()
        .map(|(x, outs)| {
            let outs = outs
                .iter()
                .map(|(a, kraus)| matrices(kraus).map(|k| (a.clone(), k)))
                .collect::<Result<_, _>>()?;
            Ok((x.clone(), outs))
        })
        .collect::<Result<_, CliError>>()?;
    Ok(InstrumentSet::new(parsed, cfg)?)
}

fn instruments_json(ins: &InstrumentSet) -> JsonInstruments {
    ins.settings()
        .map(|(x, outs)| {
            let outs = outs
                .iter()
                .map(|(a, kraus)| (a.clone(), kraus.iter().map(JsonMatrix::from_matrix).collect()))
                .collect();
            (x.clone(), outs)
        })
        .collect()
}

fn measurements_json(m: &MeasurementAssemblage) -> LabelledMatrices {
    from_labelled(m.settings().map(|(x, p)| (x, p.effects())))
}

fn dims<const N: usize>(entries: [(&str, usize); N]) -> Dims {
    entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

impl Scenario {
    pub fn dims(&self) -> Dims {
        match self {
            Scenario::StateAssemblage(sa) => dims([("d", sa.dim()), ("settings", sa.members().len())]),
            Scenario::MeasurementAssemblage(m) => dims([("d", m.dim()), ("settings", m.len())]),
            Scenario::Channel(ch) => dims([("d_in", ch.d_in()), ("d_out", ch.d_out()), ("kraus", ch.kraus().len())]),
            Scenario::InstrumentSet(ins)
            | Scenario::ChannelScenario(ins)
            | Scenario::Temporal { instruments: ins, .. } => dims([
                ("d_in", ins.d_in()),
                ("d_out", ins.d_out()),
                ("settings", ins.maps().len()),
            ]),
            Scenario::Bipartite { state, alice } => dims([
                ("d_a", alice.dim()),
                ("d_b", state.dim() / alice.dim()),
                ("settings", alice.len()),
            ]),
        }
    }

    /// Normalized file form with recomputed dimensions.
    pub fn to_file(&self, tolerances: ToleranceOverrides) -> ScenarioFile {
        let dims = self.dims();
        match self {
            Scenario::StateAssemblage(sa) => ScenarioFile::StateAssemblage(StateAssemblageFile {
                dims,
                members: from_labelled(sa.members().iter().map(|(x, o)| (x, o.iter()))),
                tolerances,
            }),
            Scenario::MeasurementAssemblage(m) => ScenarioFile::MeasurementAssemblage(MeasurementAssemblageFile {
                dims,
                settings: measurements_json(m),
                tolerances,
            }),
            Scenario::Channel(ch) => ScenarioFile::Channel(ChannelFile {
                dims,
                kraus: ch.kraus().iter().map(JsonMatrix::from_matrix).collect(),
                tolerances,
            }),
            Scenario::InstrumentSet(ins) => ScenarioFile::InstrumentSet(InstrumentSetFile {
                dims,
                instruments: instruments_json(ins),
                tolerances,
            }),
            Scenario::ChannelScenario(ins) => ScenarioFile::ChannelScenario(InstrumentSetFile {
                dims,
                instruments: instruments_json(ins),
                tolerances,
            }),
            Scenario::Bipartite { state, alice } => ScenarioFile::BipartiteScenario(BipartiteScenarioFile {
                dims,
                state: JsonMatrix::from_matrix(state.matrix()),
                alice: measurements_json(alice),
                tolerances,
            }),
            Scenario::Temporal { instruments, input } => ScenarioFile::TemporalScenario(TemporalScenarioFile {
                dims,
                instruments: instruments_json(instruments),
                input: JsonMatrix::from_matrix(input.matrix()),
                tolerances,
            }),
        }
    }
}

/// Parses, validates and re-serializes: the canonical form of a file.
pub fn normalize(file: &ScenarioFile, cfg: &ToleranceConfig) -> Result<ScenarioFile, CliError> {
    Ok(file.load(cfg)?.to_file(file.tolerances()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_file() -> ScenarioFile {
        let m = MeasurementAssemblage::noisy_paulis(2, 1.0).unwrap();
        Scenario::MeasurementAssemblage(m).to_file(ToleranceOverrides::default())
    }

    #[test]
    fn kind_tag_comes_first() {
        let json = pauli_file().to_json();
        assert!(json.starts_with("{\n  \"kind\": \"measurement_assemblage\""));
    }

    #[test]
    fn declared_dims_are_checked() {
        let mut json: serde_json::Value = serde_json::from_str(&pauli_file().to_json()).unwrap();
        json["dims"]["d"] = 3.into();
        let f: ScenarioFile = serde_json::from_value(json).unwrap();
        assert!(matches!(
            f.load(&ToleranceConfig::default()),
            Err(CliError::Validation(_))
        ));
    }

    #[test]
    fn unknown_kind_is_a_parse_error() {
        let err = ScenarioFile::parse(r#"{"kind": "teleportation", "dims": {}}"#).unwrap_err();
        assert_eq!(err.code(), "E_PARSE");
    }

    #[test]
    fn overrides_merge_left_to_right() {
        let file = ToleranceOverrides {
            psd_tol: Some(1e-6),
            support_tol: Some(1e-8),
            ..Default::default()
        };
        let flags = ToleranceOverrides {
            psd_tol: Some(1e-5),
            ..Default::default()
        };
        let cfg = file.merged(&flags).apply(ToleranceConfig::default());
        assert_eq!(cfg.psd_tol, 1e-5);
        assert_eq!(cfg.support_tol, 1e-8);
        assert_eq!(cfg.equality_tol, ToleranceConfig::default().equality_tol);
    }
}
