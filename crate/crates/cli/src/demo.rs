//! Built-in demonstrations that write scenario files and decide them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use steering_core::compat::{decide_state_steering, decide_temporal_steering};
use steering_core::dilation::MinimalDilation;
use steering_core::linalg::ToleranceConfig;
use steering_core::qobjects::{apply_instrument, KrausChannel, MeasurementAssemblage};
use steering_core::random::{random_channel, random_unitary, rng_from_seed};
use steering_core::scenarios::{
    appendix_c_construction, bisect_threshold, embed_assemblage_temporally, isotropic_pauli_assemblage,
    locality_annotation, macrorealism_channel_pair, noisy_pauli_temporal_scenario, random_nonsignalling_assemblage,
    redundant_unitary_instruments, state_preparator_instruments, BISECTION_MAX_ITER, BISECTION_TOL,
};
use steering_core::{ComplexMatrix, Error as CoreError};

use crate::commands::{decide_report, exit_code_for, render_verdict, GlobalOptions, Output};
use crate::error::CliError;
use crate::report::VerdictReport;
use crate::scenario::{Scenario, ScenarioFile, ToleranceOverrides};

pub const DEMOS: [&str; 7] = [
    "isotropic",
    "appendix-a",
    "appendix-b",
    "appendix-c",
    "embed",
    "rand-channel",
    "rand-assemblage",
];

#[derive(Debug, Clone, Default)]
pub struct DemoParams {
    pub settings: Option<usize>,
    pub lambda: Option<f64>,
    pub eta: Option<f64>,
    pub a: Option<f64>,
    pub seed: Option<u64>,
    pub choi_rank: Option<usize>,
    pub dim: Option<usize>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    pub parameter: String,
    pub value: f64,
    /// Largest value found on the unsteerable side.
    pub below: f64,
    /// Smallest value found on the steerable side.
    pub above: f64,
    pub tolerance: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoReport {
    pub demo: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub parameters: BTreeMap<String, f64>,
    pub files: Vec<String>,
    pub verdicts: BTreeMap<String, VerdictReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<ThresholdReport>,
    pub measurements: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<String>,
}

struct Demo<'a> {
    report: DemoReport,
    out: &'a Path,
    opts: &'a GlobalOptions,
}

impl<'a> Demo<'a> {
    fn new(name: &str, out: &'a Path, opts: &'a GlobalOptions) -> Self {
        Self {
            report: DemoReport {
                demo: name.into(),
                seed: None,
                parameters: BTreeMap::new(),
                files: Vec::new(),
                verdicts: BTreeMap::new(),
                threshold: None,
                measurements: BTreeMap::new(),
                annotations: Vec::new(),
            },
            out,
            opts,
        }
    }

    fn param(&mut self, name: &str, value: f64) {
        self.report.parameters.insert(name.into(), value);
    }

    fn measure(&mut self, name: &str, value: f64) {
        self.report.measurements.insert(name.into(), value);
    }

    fn write(&mut self, name: &str, scenario: &Scenario) -> Result<ScenarioFile, CliError> {
        std::fs::create_dir_all(self.out).map_err(|e| CliError::io(self.out, e))?;
        let file = scenario.to_file(ToleranceOverrides::default());
        let path = self.out.join(name);
        file.write(&path)?;
        self.report.files.push(path.display().to_string());
        Ok(file)
    }

    fn decide(&mut self, label: &str, file: &ScenarioFile) -> Result<(), CliError> {
        let (report, ..) = decide_report(file, None, self.opts)?;
        self.report.verdicts.insert(label.into(), report);
        Ok(())
    }

    fn threshold(&mut self, parameter: &str, lo: f64, hi: f64, pred: impl FnMut(f64) -> steering_core::Result<bool>) {
        match bisect_threshold(lo, hi, BISECTION_TOL, BISECTION_MAX_ITER, pred) {
            Ok(t) => {
                self.report.threshold = Some(ThresholdReport {
                    parameter: parameter.into(),
                    value: t.value,
                    below: t.below,
                    above: t.above,
                    tolerance: BISECTION_TOL,
                    iterations: t.iterations,
                })
            }
            Err(e) => self
                .report
                .annotations
                .push(format!("no {parameter} threshold in [{lo}, {hi}]: {e}")),
        }
    }

    fn finish(self) -> Output {
        let r = &self.report;
        let mut text = format!("demo {}", r.demo);
        if let Some(seed) = r.seed {
            let _ = write!(text, " (seed {seed})");
        }
        for (k, v) in &r.parameters {
            let _ = write!(text, "\n  {k} = {v}");
        }
        for f in &r.files {
            let _ = write!(text, "\nwrote {f}");
        }
        for (label, v) in &r.verdicts {
            let _ = write!(text, "\n[{label}]\n{}", render_verdict(v));
        }
        if let Some(t) = &r.threshold {
            let _ = write!(
                text,
                "\nthreshold {} = {:.6} (bracket [{:.6}, {:.6}], tolerance {:.0e}, {} steps)",
                t.parameter, t.value, t.below, t.above, t.tolerance, t.iterations
            );
        }
        for (k, v) in &r.measurements {
            if v.fract() == 0.0 && v.abs() < 1e9 {
                let _ = write!(text, "\n{k}: {v}");
            } else {
                let _ = write!(text, "\n{k}: {v:.3e}");
            }
        }
        for a in &r.annotations {
            let _ = write!(text, "\nnote: {a}");
        }
        let code = r
            .verdicts
            .values()
            .map(|v| v.jm_status().map_or(1, exit_code_for))
            .max()
            .unwrap_or(0);
        Output::new(r, text, code)
    }
}

fn require_unit(name: &'static str, value: f64) -> Result<f64, CliError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(CoreError::OutOfRange {
            name,
            value,
            range: "[0, 1]",
        }
        .into())
    }
}

pub fn run_demo(name: &str, p: &DemoParams, opts: &GlobalOptions) -> Result<Output, CliError> {
    let seed = p.seed.or(opts.seed);
    let cfg = ToleranceConfig::default();
    let mut demo = Demo::new(name, &p.out, opts);
    match name {
        "isotropic" => {
            let lambda = require_unit("lambda", p.lambda.unwrap_or(0.55))?;
            let settings = p.settings.unwrap_or(3);
            demo.param("lambda", lambda);
            demo.param("settings", settings as f64);
            let pair = macrorealism_channel_pair(lambda)?;
            demo.measure("mapping_residual", pair.mapping_residual);
            demo.write(
                "macrorealism_channel.json",
                &Scenario::Channel(pair.dilation.channel().clone()),
            )?;
            let state = steering_core::qobjects::DensityMatrix::new(pair.dilated_state().hermitian_part(), &cfg)?;
            let alice = MeasurementAssemblage::noisy_paulis(settings, 1.0)?;
            let file = demo.write(
                &format!("isotropic_lambda_{lambda}.json"),
                &Scenario::Bipartite { state, alice },
            )?;
            demo.decide("spatial", &file)?;
            demo.threshold("lambda", 0.3, 1.0, |l| {
                Ok(decide_state_steering(&isotropic_pauli_assemblage(l, settings)?)?.is_steerable())
            });
            demo.report.annotations.extend(locality_annotation(lambda));
        }
        "appendix-a" => {
            let settings = p.settings.unwrap_or(3);
            let eta = require_unit("eta", p.eta.unwrap_or(0.5))?;
            demo.param("settings", settings as f64);
            demo.param("eta", eta);
            let (instruments, input) = noisy_pauli_temporal_scenario(eta, settings)?;
            let name = if settings == 3 {
                format!("appendix_a_eta_{eta}.json")
            } else {
                format!("appendix_a_{settings}_settings_eta_{eta}.json")
            };
            let file = demo.write(&name, &Scenario::Temporal { instruments, input })?;
            demo.decide("temporal", &file)?;
            demo.threshold("eta", 0.05, 1.0, |e| {
                let (ins, rho) = noisy_pauli_temporal_scenario(e, settings)?;
                Ok(decide_temporal_steering(&ins, &rho)?.is_steerable())
            });
        }
        "appendix-b" => {
            let u = match seed {
                Some(s) => {
                    demo.report.seed = Some(s);
                    random_unitary(2, &mut rng_from_seed(s))
                }
                None => {
                    ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, -1.0]]).scale(std::f64::consts::FRAC_1_SQRT_2)
                }
            };
            let dummy =
                MeasurementAssemblage::noisy_qubit_observables(&[("x", [1.0, 0.0, 0.0]), ("z", [0.0, 0.0, 1.0])], 1.0)?;
            let (instruments, kraus) = redundant_unitary_instruments(&u, &dummy, &cfg)?;
            let channel = KrausChannel::new(kraus, &cfg)?;
            demo.measure("redundant_kraus_count", channel.kraus().len() as f64);
            demo.measure(
                "choi_rank",
                MinimalDilation::of_channel(&channel, &cfg)?.dummy_dim() as f64,
            );
            demo.write("appendix_b_channel.json", &Scenario::Channel(channel))?;
            let dummies = demo.write("appendix_b_dummy_povms.json", &Scenario::MeasurementAssemblage(dummy))?;
            demo.decide("dummy_povms", &dummies)?;
            let file = demo.write("appendix_b.json", &Scenario::ChannelScenario(instruments))?;
            demo.decide("channel", &file)?;
        }
        "appendix-c" => {
            let a = p.a.unwrap_or(1.0);
            demo.param("a", a);
            let pair = appendix_c_construction(a)?;
            demo.measure("mapping_residual", pair.mapping_residual);
            demo.measure("input_trace", pair.input.trace());
            demo.measure("target_trace", pair.target.trace());
            demo.measure("r", pair.dilation.dummy_dim() as f64);
            demo.write(
                "appendix_c_channel.json",
                &Scenario::Channel(pair.dilation.channel().clone()),
            )?;
        }
        "embed" => {
            let s = seed.unwrap_or(0);
            demo.report.seed = Some(s);
            let d = p.dim.unwrap_or(2);
            let settings = p.settings.unwrap_or(2);
            demo.param("dim", d as f64);
            demo.param("settings", settings as f64);
            let sa = random_nonsignalling_assemblage(d, settings, 2, &mut rng_from_seed(s))?;
            let emb = embed_assemblage_temporally(&sa, &cfg)?;
            let back = apply_instrument(&emb.instruments, &emb.input)?;
            demo.measure("roundtrip_residual", back.max_abs_diff(&sa));
            let prep = state_preparator_instruments(&sa, &cfg)?;
            let spatial = demo.write(
                &format!("embed_assemblage_seed_{s}.json"),
                &Scenario::StateAssemblage(sa),
            )?;
            let temporal = demo.write(
                &format!("embed_temporal_seed_{s}.json"),
                &Scenario::Temporal {
                    instruments: emb.instruments,
                    input: emb.input,
                },
            )?;
            let channel = demo.write(
                &format!("embed_channel_seed_{s}.json"),
                &Scenario::ChannelScenario(prep),
            )?;
            demo.decide("spatial", &spatial)?;
            demo.decide("temporal", &temporal)?;
            demo.decide("channel", &channel)?;
            let etas: Vec<f64> = demo.report.verdicts.values().map(|v| v.robustness).collect();
            let spread = etas.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                - etas.iter().copied().fold(f64::INFINITY, f64::min);
            demo.measure("robustness_spread", spread);
        }
        "rand-channel" => {
            let s = seed.unwrap_or(0);
            demo.report.seed = Some(s);
            let d = p.dim.unwrap_or(3);
            let rank = p.choi_rank.unwrap_or(2);
            if rank == 0 || rank > d * d {
                return Err(CliError::Validation(format!(
                    "Choi rank {rank} is impossible for a {d}-dimensional channel"
                )));
            }
            demo.param("dim", d as f64);
            demo.param("choi_rank", rank as f64);
            let channel = random_channel(d, d, rank, &mut rng_from_seed(s));
            let dil = MinimalDilation::of_channel(&channel, &cfg)?;
            demo.measure("r", dil.dummy_dim() as f64);
            demo.measure("choi_residual", dil.channel().choi().max_abs_diff(&channel.choi()));
            demo.write(
                &format!("rand_channel_seed_{s}_rank_{rank}.json"),
                &Scenario::Channel(channel),
            )?;
        }
        "rand-assemblage" => {
            let s = seed.unwrap_or(0);
            demo.report.seed = Some(s);
            let d = p.dim.unwrap_or(2);
            let settings = p.settings.unwrap_or(2);
            demo.param("dim", d as f64);
            demo.param("settings", settings as f64);
            let sa = random_nonsignalling_assemblage(d, settings, 2, &mut rng_from_seed(s))?;
            let file = demo.write(
                &format!("rand_assemblage_seed_{s}.json"),
                &Scenario::StateAssemblage(sa),
            )?;
            demo.decide("spatial", &file)?;
        }
        other => return Err(CliError::UnknownDemo(other.into())),
    }
    Ok(demo.finish())
}

/// Sharp Pauli pair used by the analytic criterion fixtures.
pub fn pauli_pair(first: [f64; 3], second: [f64; 3], eta: f64) -> Result<MeasurementAssemblage, CliError> {
    Ok(MeasurementAssemblage::noisy_qubit_observables(
        &[("1", first), ("2", second)],
        eta,
    )?)
}
