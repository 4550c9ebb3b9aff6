//! Subcommands: decide, jm, dilate, verify.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use steering_core::compat::{
    decide_channel_steering_with, decide_state_steering_with, decide_temporal_steering_with, jm_decide_with,
    qubit_jm_criterion, steering_equivalent_observables, JmOptions, JmStatus, SteeringOptions, DEFAULT_STRATEGY_CAP,
};
use steering_core::dilation::{extract_dummy_povms, MinimalDilation};
use steering_core::qobjects::{apply_instrument, InstrumentSet, MeasurementAssemblage, StateAssemblage};
use steering_core::scenarios::spatial_assemblage;
use steering_core::{ComplexMatrix, ToleranceConfig};

use crate::error::CliError;
use crate::json::JsonMatrix;
use crate::report::{verify_report, VerdictReport, VerificationReport, VerificationTarget};
use crate::scenario::{validated, Scenario, ScenarioFile, ToleranceOverrides};

/// Options shared by every subcommand.
#[derive(Debug, Clone, Copy)]
pub struct GlobalOptions {
    pub tolerances: ToleranceOverrides,
    pub strategy_cap: usize,
    pub seed: Option<u64>,
}

impl Default for GlobalOptions {
    fn default() -> Self {
        Self {
            tolerances: ToleranceOverrides::default(),
            strategy_cap: DEFAULT_STRATEGY_CAP,
            seed: None,
        }
    }
}

impl GlobalOptions {
    /// Defaults, then the file's overrides, then the command-line flags.
    pub fn config_for(&self, file: &ScenarioFile) -> Result<ToleranceConfig, CliError> {
        validated(
            file.tolerances()
                .merged(&self.tolerances)
                .apply(ToleranceConfig::default()),
        )
    }

    pub fn steering(&self, cfg: ToleranceConfig) -> SteeringOptions {
        SteeringOptions {
            jm: self.jm(),
            tolerances: cfg,
        }
    }

    pub fn jm(&self) -> JmOptions {
        JmOptions {
            strategy_cap: self.strategy_cap,
            ..JmOptions::default()
        }
    }
}

/// Printable result of a subcommand together with its exit code.
#[derive(Debug, Clone)]
pub struct Output {
    pub json: serde_json::Value,
    pub text: String,
    pub exit_code: i32,
}

impl Output {
    pub fn new(value: &impl Serialize, text: String, exit_code: i32) -> Self {
        Self {
            json: serde_json::to_value(value).expect("reports always serialize"),
            text,
            exit_code,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Spatial,
    Temporal,
    Channel,
    Jm,
}

impl Route {
    pub fn name(self) -> &'static str {
        match self {
            Route::Spatial => "spatial",
            Route::Temporal => "temporal",
            Route::Channel => "channel",
            Route::Jm => "jm",
        }
    }

    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "spatial" => Ok(Route::Spatial),
            "temporal" => Ok(Route::Temporal),
            "channel" => Ok(Route::Channel),
            "jm" => Ok(Route::Jm),
            other => Err(CliError::Parse(format!("unknown scenario route {other:?}"))),
        }
    }

    /// Route implied by the file kind.
    pub fn auto(s: &Scenario) -> Result<Self, CliError> {
        match s {
            Scenario::StateAssemblage(_) | Scenario::Bipartite { .. } => Ok(Route::Spatial),
            Scenario::Temporal { .. } => Ok(Route::Temporal),
            Scenario::ChannelScenario(_) | Scenario::InstrumentSet(_) => Ok(Route::Channel),
            Scenario::MeasurementAssemblage(_) => Ok(Route::Jm),
            Scenario::Channel(_) => Err(CliError::Validation(
                "a bare channel has no steering verdict; use `dilate`".into(),
            )),
        }
    }
}

fn wrong_kind(route: Route, s: &Scenario) -> CliError {
    CliError::Validation(format!("the {} route cannot use a {} file", route.name(), kind_of(s)))
}

fn kind_of(s: &Scenario) -> &'static str {
    s.to_file(ToleranceOverrides::default()).kind()
}

fn state_assemblage(s: &Scenario, cfg: &ToleranceConfig) -> Result<StateAssemblage, CliError> {
    match s {
        Scenario::StateAssemblage(sa) => Ok(sa.clone()),
        Scenario::Bipartite { state, alice } => Ok(spatial_assemblage(state, alice, cfg)?),
        Scenario::Temporal { instruments, input } => Ok(apply_instrument(instruments, input)?),
        other => Err(wrong_kind(Route::Spatial, other)),
    }
}

fn instrument_set(s: &Scenario) -> Result<&InstrumentSet, CliError> {
    match s {
        Scenario::ChannelScenario(ins) | Scenario::InstrumentSet(ins) | Scenario::Temporal { instruments: ins, .. } => {
            Ok(ins)
        }
        other => Err(wrong_kind(Route::Channel, other)),
    }
}

/// The objects a certificate is checked against, rebuilt from the scenario alone.
pub struct Derived {
    pub observables: MeasurementAssemblage,
    pub assemblage: Option<StateAssemblage>,
    pub instruments: Option<InstrumentSet>,
}

impl Derived {
    pub fn build(s: &Scenario, route: Route, cfg: &ToleranceConfig) -> Result<Self, CliError> {
        match route {
            Route::Jm => match s {
                Scenario::MeasurementAssemblage(m) => Ok(Self {
                    observables: m.clone(),
                    assemblage: None,
                    instruments: None,
                }),
                other => Err(wrong_kind(route, other)),
            },
            Route::Spatial | Route::Temporal => {
                if route == Route::Temporal && !matches!(s, Scenario::Temporal { .. }) {
                    return Err(wrong_kind(route, s));
                }
                let sa = state_assemblage(s, cfg)?;
                Ok(Self {
                    observables: steering_equivalent_observables(&sa, cfg)?,
                    assemblage: Some(sa),
                    instruments: None,
                })
            }
            Route::Channel => {
                let ins = instrument_set(s)?;
                let (x, _) = ins
                    .settings()
                    .next()
                    .ok_or_else(|| CliError::Validation("no settings".into()))?;
                let channel = ins.total_channel(x).expect("setting exists");
                let dil = MinimalDilation::of_channel(&channel, cfg)?;
                Ok(Self {
                    observables: extract_dummy_povms(ins, &dil, cfg)?.povms,
                    assemblage: None,
                    instruments: Some(ins.clone()),
                })
            }
        }
    }

    pub fn target(&self) -> VerificationTarget<'_> {
        VerificationTarget {
            observables: &self.observables,
            assemblage: self.assemblage.as_ref(),
            instruments: self.instruments.as_ref(),
        }
    }
}

pub fn exit_code_for(status: JmStatus) -> i32 {
    if status.is_decisive() {
        0
    } else {
        2
    }
}

/// `½(1 ± a·σ)` Bloch vector of an unbiased two-outcome qubit POVM.
fn unbiased_bloch(m: &MeasurementAssemblage, x: &str) -> Option<[f64; 3]> {
    let p = m.setting(x)?;
    if p.dim() != 2 || p.len() != 2 {
        return None;
    }
    let e = p.effect_list()[0];
    if (e.trace().re - 1.0).abs() > 1e-9 {
        return None;
    }
    let paulis = [
        ComplexMatrix::pauli_x(),
        ComplexMatrix::pauli_y(),
        ComplexMatrix::pauli_z(),
    ];
    Some(paulis.map(|s| e.trace_product_re(&s)))
}

/// `2 − (‖a₁+a₂‖ + ‖a₁−a₂‖)` for two unbiased binary qubit observables.
pub fn analytic_margin(m: &MeasurementAssemblage) -> Option<f64> {
    if m.len() != 2 {
        return None;
    }
    let labels: Vec<&String> = m.settings().map(|(x, _)| x).collect();
    let a1 = unbiased_bloch(m, labels[0])?;
    let a2 = unbiased_bloch(m, labels[1])?;
    qubit_jm_criterion(a1, a2).ok().map(|(_, margin)| margin)
}

pub fn decide_report(
    file: &ScenarioFile,
    route: Option<Route>,
    opts: &GlobalOptions,
) -> Result<(VerdictReport, Scenario, Route, ToleranceConfig), CliError> {
    let cfg = opts.config_for(file)?;
    let scenario = file.load(&cfg)?;
    let echo = file.echo(&cfg)?;
    let route = match route {
        Some(r) => r,
        None => Route::auto(&scenario)?,
    };
    let steering = opts.steering(cfg);
    let report = match route {
        Route::Jm => {
            let Scenario::MeasurementAssemblage(m) = &scenario else {
                return Err(wrong_kind(route, &scenario));
            };
            let mut r = VerdictReport::from_jm(&jm_decide_with(m, &steering.jm)?, echo);
            r.analytic_margin = analytic_margin(m);
            r
        }
        Route::Spatial => {
            let sa = state_assemblage(&scenario, &cfg)?;
            VerdictReport::from_steering("spatial", &decide_state_steering_with(&sa, &steering)?, echo)
        }
        Route::Temporal => {
            let Scenario::Temporal { instruments, input } = &scenario else {
                return Err(wrong_kind(route, &scenario));
            };
            VerdictReport::from_steering(
                "temporal",
                &decide_temporal_steering_with(instruments, input, &steering)?,
                echo,
            )
        }
        Route::Channel => {
            let ins = instrument_set(&scenario)?;
            VerdictReport::from_steering("channel", &decide_channel_steering_with(ins, &steering)?, echo)
        }
    };
    Ok((report, scenario, route, cfg))
}

pub fn render_verdict(r: &VerdictReport) -> String {
    let mut s = String::new();
    let verdict = match r.steerable {
        Some(true) => " (steerable)",
        Some(false) => " (unsteerable)",
        None => "",
    };
    let _ = writeln!(s, "status: {}{verdict}", r.status);
    let _ = writeln!(s, "robustness: {:.6}", r.robustness);
    if let Some(m) = r.analytic_margin {
        let side = if m >= 0.0 { "jointly measurable" } else { "incompatible" };
        let _ = writeln!(s, "analytic margin: {m:.6} ({side})");
    }
    if let Some(dim) = r.certificate.dummy_dim {
        let _ = writeln!(s, "minimal dummy dimension: {dim}");
    }
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3e}"));
    let _ = writeln!(
        s,
        "residuals: reconstruction {}, witness {}, gap {:.3e}, {} iterations",
        fmt(r.residuals.max_reconstruction_error),
        fmt(r.residuals.witness_value),
        r.residuals.solver_gap,
        r.residuals.iterations
    );
    for a in &r.annotations {
        let _ = writeln!(s, "note: {a}");
    }
    if let Some(v) = &r.verification {
        let _ = writeln!(s, "certificate re-check: {}", if v.valid { "valid" } else { "INVALID" });
    }
    let _ = write!(s, "scenario: {}", r.scenario_echo);
    s
}

fn attach_verification(
    report: &mut VerdictReport,
    scenario: &Scenario,
    route: Route,
    cfg: &ToleranceConfig,
) -> Result<(), CliError> {
    let derived = Derived::build(scenario, route, cfg)?;
    let v = verify_report(report, &derived.target())?;
    let valid = v.valid;
    report.verification = Some(v);
    if valid {
        Ok(())
    } else {
        Err(CliError::Certificate(format!(
            "{} certificate failed its re-check",
            report.status
        )))
    }
}

pub fn cmd_decide(path: &Path, route: Option<Route>, verify: bool, opts: &GlobalOptions) -> Result<Output, CliError> {
    let file = ScenarioFile::read(path)?;
    let (mut report, scenario, route, cfg) = decide_report(&file, route, opts)?;
    if verify {
        attach_verification(&mut report, &scenario, route, &cfg)?;
    }
    let code = exit_code_for(report.jm_status()?);
    Ok(Output::new(&report, render_verdict(&report), code))
}

pub fn cmd_jm(path: &Path, verify: bool, opts: &GlobalOptions) -> Result<Output, CliError> {
    let file = ScenarioFile::read(path)?;
    if !matches!(file, ScenarioFile::MeasurementAssemblage(_)) {
        return Err(CliError::Validation(format!(
            "jm needs a measurement_assemblage file, got {}",
            file.kind()
        )));
    }
    cmd_decide(path, Some(Route::Jm), verify, opts)
}

#[derive(Debug, Clone, Serialize)]
pub struct DilationReport {
    /// Choi rank, the dimension of the dummy space.
    pub r: usize,
    pub d_in: usize,
    pub d_out: usize,
    pub kraus: Vec<JsonMatrix>,
    /// `V = Σ_k |φ_k⟩ ⊗ K_k`, dummy factor first.
    pub isometry: JsonMatrix,
    /// `‖J(minimal) − J(input)‖_∞`.
    pub choi_residual: f64,
    /// `‖V†V − 1‖_∞`.
    pub isometry_residual: f64,
    pub scenario_echo: String,
}

pub fn cmd_dilate(path: &Path, opts: &GlobalOptions) -> Result<Output, CliError> {
    let file = ScenarioFile::read(path)?;
    let cfg = opts.config_for(&file)?;
    let scenario = file.load(&cfg)?;
    let channel = match &scenario {
        Scenario::Channel(ch) => ch.clone(),
        other => {
            let ins = instrument_set(other)?;
            let (x, _) = ins
                .settings()
                .next()
                .ok_or_else(|| CliError::Validation("no settings".into()))?;
            ins.total_channel(x).expect("setting exists")
        }
    };
    let dil = MinimalDilation::of_channel(&channel, &cfg)?;
    let v = dil.isometry().matrix();
    let report = DilationReport {
        r: dil.dummy_dim(),
        d_in: dil.d_in(),
        d_out: dil.d_out(),
        kraus: dil.channel().kraus().iter().map(JsonMatrix::from_matrix).collect(),
        isometry: JsonMatrix::from_matrix(v),
        choi_residual: dil.channel().choi().max_abs_diff(&channel.choi()),
        isometry_residual: v.adjoint().matmul(v).max_abs_diff(&ComplexMatrix::identity(dil.d_in())),
        scenario_echo: file.echo(&cfg)?,
    };
    let text = format!(
        "minimal dilation: r = {} ({} -> {}), {} Kraus operators\nChoi residual: {:.3e}\nisometry residual: {:.3e}",
        report.r,
        report.d_in,
        report.d_out,
        report.kraus.len(),
        report.choi_residual,
        report.isometry_residual
    );
    Ok(Output::new(&report, text, 0))
}

pub fn cmd_verify(scenario_path: &Path, report_path: &Path, opts: &GlobalOptions) -> Result<Output, CliError> {
    let file = ScenarioFile::read(scenario_path)?;
    let cfg = opts.config_for(&file)?;
    let text = std::fs::read_to_string(report_path).map_err(|e| CliError::io(report_path, e))?;
    let report: VerdictReport = serde_json::from_str(&text)?;
    let echo = file.echo(&cfg)?;
    if echo != report.scenario_echo {
        return Err(CliError::Validation(format!(
            "report was produced for {} but the scenario hashes to {echo}",
            report.scenario_echo
        )));
    }
    let scenario = file.load(&cfg)?;
    let derived = Derived::build(&scenario, Route::parse(&report.scenario)?, &cfg)?;
    let v = verify_report(&report, &derived.target())?;
    let text = render_verification(&v);
    if !v.valid {
        return Err(CliError::Certificate(text.replace('\n', "; ")));
    }
    Ok(Output::new(&v, text, 0))
}

pub fn render_verification(v: &VerificationReport) -> String {
    let mut s = format!(
        "{} certificate: {}",
        v.status,
        if v.valid { "valid" } else { "INVALID" }
    );
    if v.checks.is_empty() {
        s.push_str("\nno certificate to check for a marginal verdict");
    }
    for c in &v.checks {
        let rel = if c.bound_kind == "max" { "<=" } else { ">" };
        let _ = write!(
            s,
            "\n  {}: {:.3e} (needs {rel} {:.0e}) {}",
            c.name,
            c.value,
            c.bound,
            if c.passed { "ok" } else { "FAILED" }
        );
    }
    s
}
