use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use steering_cli::commands::GlobalOptions;
use steering_cli::demo::{run_demo, DemoParams};
use steering_cli::fixtures::bundled_texts;
use steering_cli::scenario::{normalize, ScenarioFile};
use steering_core::linalg::ToleranceConfig;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn fixture(name: &str) -> String {
    fixtures().join(name).display().to_string()
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Run {
    fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", self.stdout))
    }

    fn error_code(&self) -> String {
        let v: Value =
            serde_json::from_str(&self.stderr).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {}", self.stderr));
        v["error"]["code"].as_str().unwrap().to_string()
    }
}

fn steer(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_steer")).args(args).output().unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

/// Demo invocations whose outputs are bundled as fixtures.
const DEMO_FIXTURES: &[(&str, &[(&str, f64)])] = &[
    ("isotropic", &[("lambda", 0.5)]),
    ("isotropic", &[("lambda", 0.55)]),
    ("isotropic", &[("lambda", 0.6)]),
    ("appendix-a", &[("eta", 0.5)]),
    ("appendix-a", &[("eta", 0.7)]),
    ("appendix-b", &[]),
    ("appendix-c", &[]),
];

fn demo_params(out: &Path, values: &[(&str, f64)]) -> DemoParams {
    let mut p = DemoParams {
        out: out.to_path_buf(),
        ..DemoParams::default()
    };
    for &(k, v) in values {
        match k {
            "lambda" => p.lambda = Some(v),
            "eta" => p.eta = Some(v),
            other => panic!("unknown demo parameter {other}"),
        }
    }
    p
}

/// Set `STEER_REGENERATE_FIXTURES=1` to rewrite the bundled files instead of comparing.
#[test]
fn bundled_fixtures_match_their_generators() {
    let dir = tempfile::tempdir().unwrap();
    for (demo, values) in DEMO_FIXTURES {
        run_demo(demo, &demo_params(dir.path(), values), &GlobalOptions::default()).unwrap();
    }
    for (name, text) in bundled_texts().unwrap() {
        std::fs::write(dir.path().join(name), text).unwrap();
    }
    let regenerate = std::env::var_os("STEER_REGENERATE_FIXTURES").is_some();
    let mut generated: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    generated.sort();
    for name in &generated {
        let fresh = std::fs::read_to_string(dir.path().join(name)).unwrap();
        if regenerate {
            std::fs::write(fixtures().join(name), &fresh).unwrap();
        } else {
            let bundled = std::fs::read_to_string(fixtures().join(name))
                .unwrap_or_else(|_| panic!("{name} is generated but not bundled"));
            assert!(bundled == fresh, "{name} differs from its generator");
        }
    }
    let mut bundled: Vec<_> = std::fs::read_dir(fixtures())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    bundled.sort();
    assert_eq!(bundled, generated, "every bundled fixture has a generator");
}

#[test]
fn fixture_verdicts_and_exit_codes() {
    // (file, subcommand, status, steerable)
    let cases: &[(&str, &str, &str, Option<bool>)] = &[
        ("appendix_a_eta_0.5.json", "decide", "JointlyMeasurable", Some(false)),
        ("appendix_a_eta_0.7.json", "decide", "Incompatible", Some(true)),
        ("appendix_b.json", "decide", "JointlyMeasurable", Some(false)),
        ("appendix_b_dummy_povms.json", "jm", "Incompatible", None),
        ("pauli_xz_sharp.json", "jm", "Incompatible", None),
        ("pauli_xz_eta_0.5.json", "jm", "JointlyMeasurable", None),
        ("pauli_xy_sharp.json", "jm", "Incompatible", None),
        ("single_povm.json", "jm", "JointlyMeasurable", None),
        ("luders_xy_eta_0.5_on_ket0.json", "decide", "Incompatible", Some(true)),
        ("dephasing_xz_dummies.json", "decide", "Incompatible", Some(true)),
        ("isotropic_lambda_0.5.json", "decide", "JointlyMeasurable", Some(false)),
        ("isotropic_lambda_0.55.json", "decide", "JointlyMeasurable", Some(false)),
        ("isotropic_lambda_0.6.json", "decide", "Incompatible", Some(true)),
    ];
    for &(file, cmd, status, steerable) in cases {
        let run = steer(&["--json", cmd, &fixture(file)]);
        assert_eq!(run.code, 0, "{file}: {}", run.stderr);
        let v = run.json();
        assert_eq!(v["status"], status, "{file}");
        assert_eq!(v["steerable"].as_bool(), steerable, "{file}");
    }
}

#[test]
fn luders_pair_on_a_pure_input_acts_as_sharp_observables() {
    // ρ_B^{-1/2} maps the Lüders outputs onto the sharp X and Y projectors.
    let v = steer(&["--json", "decide", &fixture("luders_xy_eta_0.5_on_ket0.json")]).json();
    assert!((v["robustness"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-6);
}

#[test]
fn single_povm_has_unit_robustness() {
    let v = steer(&["--json", "jm", &fixture("single_povm.json")]).json();
    assert!((v["robustness"].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn sharp_pair_reports_the_analytic_margin() {
    let v = steer(&["--json", "jm", &fixture("pauli_xz_sharp.json")]).json();
    let margin = v["analytic_margin"].as_f64().unwrap();
    assert!((margin - (2.0 - 8f64.sqrt())).abs() < 1e-9, "{margin}");
    assert!((v["robustness"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-6);
    assert!(v["certificate"]["dual_witness"].is_object());
    assert!(v["residuals"]["witness_value"].as_f64().unwrap() > 1e-7);
}

#[test]
fn signalling_temporal_assemblage_is_rejected() {
    let run = steer(&["--json", "decide", &fixture("luders_xz_eta_0.5_on_ket0.json")]);
    assert_eq!(run.code, 1);
    assert_eq!(run.error_code(), "E_SIGNALLING");
}

#[test]
fn malformed_matrix_is_a_parse_error() {
    let run = steer(&["--json", "jm", &fixture("malformed_ragged.json")]);
    assert_eq!(run.code, 1);
    assert_eq!(run.error_code(), "E_PARSE");
    let text = steer(&["jm", &fixture("malformed_ragged.json")]);
    assert!(text.stderr.starts_with("error[E_PARSE]"), "{}", text.stderr);
}

#[test]
fn missing_file_is_an_io_error() {
    let run = steer(&["--json", "jm", "/nonexistent/scenario.json"]);
    assert_eq!(run.code, 1);
    assert_eq!(run.error_code(), "E_IO");
}

#[test]
fn bare_channel_has_no_steering_route() {
    let run = steer(&["--json", "decide", &fixture("identity_channel.json")]);
    assert_eq!(run.code, 1);
    assert_eq!(run.error_code(), "E_VALIDATION");
}

#[test]
fn minimal_dilation_ranks() {
    let cases = [
        ("identity_channel.json", 1),
        ("appendix_b_channel.json", 1),
        ("dephasing_channel.json", 2),
        ("appendix_c_channel.json", 3),
        ("macrorealism_channel.json", 2),
        ("appendix_b.json", 1),
    ];
    for (file, r) in cases {
        let run = steer(&["--json", "dilate", &fixture(file)]);
        assert_eq!(run.code, 0, "{file}: {}", run.stderr);
        let v = run.json();
        assert_eq!(v["r"], r, "{file}");
        assert!(v["choi_residual"].as_f64().unwrap() < 1e-10, "{file}");
        assert!(v["isometry_residual"].as_f64().unwrap() < 1e-10, "{file}");
    }
}

#[test]
fn channel_verdict_reports_the_dummy_dimension() {
    let v = steer(&["--json", "decide", &fixture("dephasing_xz_dummies.json")]).json();
    assert_eq!(v["scenario"], "channel");
    assert_eq!(v["certificate"]["dummy_dim"], 2);
}

#[test]
fn scenario_route_can_be_forced() {
    let temporal = steer(&[
        "--json",
        "decide",
        "--scenario",
        "temporal",
        &fixture("appendix_a_eta_0.7.json"),
    ])
    .json();
    let spatial = steer(&[
        "--json",
        "decide",
        "--scenario",
        "spatial",
        &fixture("appendix_a_eta_0.7.json"),
    ])
    .json();
    assert_eq!(spatial["scenario"], "spatial");
    assert_eq!(spatial["steerable"], temporal["steerable"]);
    let dt = temporal["robustness"].as_f64().unwrap() - spatial["robustness"].as_f64().unwrap();
    assert!(dt.abs() < 1e-6);
    let run = steer(&[
        "--json",
        "decide",
        "--scenario",
        "temporal",
        &fixture("isotropic_lambda_0.6.json"),
    ]);
    assert_eq!(run.error_code(), "E_VALIDATION");
    // Lüders instruments for different settings have different total channels.
    let run = steer(&[
        "--json",
        "decide",
        "--scenario",
        "channel",
        &fixture("appendix_a_eta_0.7.json"),
    ]);
    assert_eq!(run.error_code(), "E_SIGNALLING");
}

#[test]
fn serialization_roundtrip_is_exact_after_normalization() {
    let cfg = ToleranceConfig::default();
    for entry in std::fs::read_dir(fixtures()).unwrap() {
        let path = entry.unwrap().path();
        if path.file_name().unwrap() == "malformed_ragged.json" {
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap();
        let file = ScenarioFile::parse(&text).unwrap();
        assert_eq!(file.to_json(), text, "{} is not in normal form", path.display());
        let once = normalize(&file, &cfg).unwrap().to_json();
        let twice = normalize(&ScenarioFile::parse(&once).unwrap(), &cfg).unwrap().to_json();
        assert_eq!(once, twice, "{}", path.display());
        assert_eq!(once, text, "{}", path.display());
    }
}

#[test]
fn non_normal_input_hashes_like_its_normal_form() {
    let cfg = ToleranceConfig::default();
    let text = std::fs::read_to_string(fixtures().join("pauli_xz_sharp.json")).unwrap();
    let compact: Value = serde_json::from_str(&text).unwrap();
    let compact = serde_json::to_string(&compact).unwrap();
    let a = ScenarioFile::parse(&text).unwrap().echo(&cfg).unwrap();
    let b = ScenarioFile::parse(&compact).unwrap().echo(&cfg).unwrap();
    assert_eq!(a, b);
}

fn decide_to_file(dir: &Path, cmd: &str, fixture_name: &str) -> (PathBuf, Value) {
    let run = steer(&["--json", cmd, "--verify", &fixture(fixture_name)]);
    assert_eq!(run.code, 0, "{fixture_name}: {}", run.stderr);
    let v = run.json();
    assert_eq!(v["verification"]["valid"], true, "{fixture_name}");
    let path = dir.join(format!("{fixture_name}.report.json"));
    std::fs::write(&path, &run.stdout).unwrap();
    (path, v)
}

#[test]
fn reports_verify_against_their_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("jm", "pauli_xz_sharp.json"),
        ("jm", "pauli_xz_eta_0.5.json"),
        ("decide", "appendix_a_eta_0.5.json"),
        ("decide", "appendix_a_eta_0.7.json"),
        ("decide", "appendix_b.json"),
        ("decide", "dephasing_xz_dummies.json"),
        ("decide", "isotropic_lambda_0.6.json"),
        ("decide", "isotropic_lambda_0.55.json"),
    ];
    for (cmd, name) in cases {
        let (report, _) = decide_to_file(dir.path(), cmd, name);
        let run = steer(&["--json", "verify", &fixture(name), report.to_str().unwrap()]);
        assert_eq!(run.code, 0, "{name}: {}", run.stderr);
        let v = run.json();
        assert_eq!(v["valid"], true, "{name}");
        assert!(!v["checks"].as_array().unwrap().is_empty(), "{name}");
    }
}

fn scale_first_entry(m: &mut Value, factor: f64) {
    let re = &mut m["re"][0][0];
    *re = Value::from(re.as_f64().unwrap() * factor + 0.05);
}

#[test]
fn tampered_parent_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (path, mut v) = decide_to_file(dir.path(), "jm", "pauli_xz_eta_0.5.json");
    scale_first_entry(&mut v["certificate"]["parent_povm"]["effects"][0], 1.0);
    std::fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
    let run = steer(&[
        "--json",
        "verify",
        &fixture("pauli_xz_eta_0.5.json"),
        path.to_str().unwrap(),
    ]);
    assert_eq!(run.code, 1);
    assert_eq!(run.error_code(), "E_CERTIFICATE");
}

#[test]
fn tampered_witness_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (path, mut v) = decide_to_file(dir.path(), "jm", "pauli_xz_sharp.json");
    let witness = v["certificate"]["dual_witness"].as_object_mut().unwrap();
    for outcomes in witness.values_mut() {
        for m in outcomes.as_object_mut().unwrap().values_mut() {
            for row in m["re"].as_array_mut().unwrap() {
                for x in row.as_array_mut().unwrap() {
                    *x = Value::from(0.0);
                }
            }
            for row in m["im"].as_array_mut().unwrap() {
                for x in row.as_array_mut().unwrap() {
                    *x = Value::from(0.0);
                }
            }
        }
    }
    std::fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
    let run = steer(&[
        "--json",
        "verify",
        &fixture("pauli_xz_sharp.json"),
        path.to_str().unwrap(),
    ]);
    assert_eq!(run.code, 1);
    assert_eq!(run.error_code(), "E_CERTIFICATE");
}

#[test]
fn tampered_lhs_ensemble_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (path, mut v) = decide_to_file(dir.path(), "decide", "appendix_a_eta_0.5.json");
    let weights = v["certificate"]["lhs_ensemble"]["weights"].as_array_mut().unwrap();
    let w0 = weights[0].as_f64().unwrap();
    weights[0] = Value::from(w0 + 0.1);
    std::fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
    let run = steer(&[
        "--json",
        "verify",
        &fixture("appendix_a_eta_0.5.json"),
        path.to_str().unwrap(),
    ]);
    assert_eq!(run.code, 1);
    assert_eq!(run.error_code(), "E_CERTIFICATE");
}

#[test]
fn report_for_another_scenario_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (path, _) = decide_to_file(dir.path(), "jm", "pauli_xz_eta_0.5.json");
    let run = steer(&[
        "--json",
        "verify",
        &fixture("pauli_xz_sharp.json"),
        path.to_str().unwrap(),
    ]);
    assert_eq!(run.code, 1);
    assert_eq!(run.error_code(), "E_VALIDATION");
}

#[test]
fn strategy_cap_is_enforced() {
    let run = steer(&["--json", "--strategy-cap", "2", "jm", &fixture("pauli_xz_sharp.json")]);
    assert_eq!(run.code, 1);
    assert_eq!(run.error_code(), "E_STRATEGY_CAP");
}

#[test]
fn tolerance_flags_are_validated() {
    let run = steer(&["--json", "--tol-psd=-1", "jm", &fixture("pauli_xz_sharp.json")]);
    assert_eq!(run.code, 1);
    assert_eq!(run.error_code(), "E_VALIDATION");
    let run = steer(&[
        "--json",
        "--tol-equality",
        "1e-8",
        "jm",
        &fixture("pauli_xz_sharp.json"),
    ]);
    assert_eq!(run.code, 0, "{}", run.stderr);
}

fn demo(args: &[&str]) -> (Value, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let mut full = vec!["--json", "demo"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", dir.path().to_str().unwrap()]);
    let run = steer(&full);
    assert_eq!(run.code, 0, "{args:?}: {}", run.stderr);
    (run.json(), dir)
}

#[test]
fn demo_noisy_pauli_threshold() {
    let (v, dir) = demo(&["appendix-a", "--settings", "3"]);
    let t = v["threshold"]["value"].as_f64().unwrap();
    assert!((t - 1.0 / 3f64.sqrt()).abs() < 1e-3, "{t}");
    assert!(dir.path().join("appendix_a_eta_0.5.json").exists());
    let (v, _) = demo(&["appendix-a", "--settings", "2"]);
    let t = v["threshold"]["value"].as_f64().unwrap();
    assert!((t - 0.5f64.sqrt()).abs() < 1e-3, "{t}");
    let (v, _) = demo(&["appendix-a", "--settings", "1"]);
    assert!(v["threshold"].is_null());
}

#[test]
fn demo_isotropic() {
    let (v, _) = demo(&["isotropic", "--lambda", "0.55"]);
    assert_eq!(v["verdicts"]["spatial"]["steerable"], false);
    let notes = v["annotations"].as_array().unwrap();
    assert!(notes.iter().any(|n| n.as_str().unwrap().contains("0.6595")));
    assert!(v["measurements"]["mapping_residual"].as_f64().unwrap() < 1e-12);
    let t = v["threshold"]["value"].as_f64().unwrap();
    assert!((t - 1.0 / 3f64.sqrt()).abs() < 1e-3, "{t}");
}

#[test]
fn demo_redundant_unitary() {
    for seed in [None, Some("11")] {
        let mut args = vec!["appendix-b"];
        if let Some(s) = seed {
            args.extend_from_slice(&["--seed", s]);
        }
        let (v, _) = demo(&args);
        assert_eq!(v["measurements"]["choi_rank"], 1.0);
        assert_eq!(v["measurements"]["redundant_kraus_count"], 2.0);
        assert_eq!(v["verdicts"]["channel"]["steerable"], false);
        assert_eq!(v["verdicts"]["dummy_povms"]["status"], "Incompatible");
        assert_eq!(v["seed"].as_u64(), seed.map(|s| s.parse().unwrap()));
    }
}

#[test]
fn demo_qutrit_pair() {
    let (v, _) = demo(&["appendix-c", "--a", "0.75"]);
    assert_eq!(v["measurements"]["r"], 3.0);
    assert!(v["measurements"]["mapping_residual"].as_f64().unwrap() < 1e-12);
    assert!((v["measurements"]["target_trace"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn demo_embed_roundtrip() {
    let (v, dir) = demo(&["embed", "--seed", "7"]);
    assert_eq!(v["seed"], 7);
    assert!(v["measurements"]["roundtrip_residual"].as_f64().unwrap() < 1e-9);
    assert!(v["measurements"]["robustness_spread"].as_f64().unwrap() < 1e-6);
    let statuses: Vec<_> = v["verdicts"]
        .as_object()
        .unwrap()
        .values()
        .map(|r| r["status"].clone())
        .collect();
    assert_eq!(statuses.len(), 3);
    assert!(statuses.windows(2).all(|w| w[0] == w[1]));
    assert!(dir.path().join("embed_temporal_seed_7.json").exists());
}

#[test]
fn demo_random_channel() {
    let (v, dir) = demo(&["rand-channel", "--choi-rank", "3", "--seed", "5"]);
    assert_eq!(v["measurements"]["r"], 3.0);
    assert!(v["measurements"]["choi_residual"].as_f64().unwrap() < 1e-10);
    let file = dir.path().join("rand_channel_seed_5_rank_3.json");
    let d = steer(&["--json", "dilate", file.to_str().unwrap()]).json();
    assert_eq!(d["r"], 3);
}

#[test]
fn demo_seeds_are_reproducible() {
    let (a, da) = demo(&["rand-assemblage", "--seed", "3", "--settings", "3"]);
    let (b, db) = demo(&["rand-assemblage", "--seed", "3", "--settings", "3"]);
    assert_eq!(
        a["verdicts"]["spatial"]["scenario_echo"],
        b["verdicts"]["spatial"]["scenario_echo"]
    );
    let name = "rand_assemblage_seed_3.json";
    assert_eq!(
        std::fs::read(da.path().join(name)).unwrap(),
        std::fs::read(db.path().join(name)).unwrap()
    );
}

#[test]
fn unknown_demo_is_reported() {
    let run = steer(&["--json", "demo", "bogus"]);
    assert_eq!(run.code, 1);
    assert_eq!(run.error_code(), "E_UNKNOWN_DEMO");
}

#[test]
fn usage_errors_exit_with_one() {
    let run = steer(&["--json", "decide"]);
    assert_eq!(run.code, 1);
    assert_eq!(run.error_code(), "E_USAGE");
    let run = steer(&["--json", "--tol-psd", "-1", "jm", &fixture("pauli_xz_sharp.json")]);
    assert_eq!(run.code, 1);
    assert_eq!(steer(&["--help"]).code, 0);
}

#[test]
fn text_output_is_readable() {
    let run = steer(&["jm", &fixture("pauli_xz_sharp.json")]);
    assert_eq!(run.code, 0);
    assert!(run.stdout.contains("status: Incompatible"));
    assert!(run.stdout.contains("analytic margin: -0.828427"));
}
