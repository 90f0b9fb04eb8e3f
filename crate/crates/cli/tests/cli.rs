use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use phonon_bjj_cli::{presets, resolve, run_document, run_scenario};
use serde_json::{json, Value};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_phonon-bjj"));
    c.env_remove(phonon_bjj_cli::OUT_ENV);
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, doc: &Value) -> String {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(doc).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().into_string().unwrap(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

fn junction(g: f64, z: f64, phi: Value, analyses: &[&str]) -> Value {
    json!({
        "name": "case",
        "model": "bjj",
        "params": { "g": g },
        "initial": { "z": z, "phi": phi },
        "span": [0, 200],
        "analyses": analyses,
    })
}

#[test]
fn presets_command_lists_the_catalogue() {
    let o = run(&["presets"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let mut expected: Vec<String> = [
        "fig2a",
        "fig2b",
        "fig5a",
        "fig5b",
        "fig7a",
        "fig7b",
        "oracle-compare",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for fig in ["fig3", "fig4", "fig6"] {
        for c in ['a', 'b', 'c', 'd'] {
            expected.push(format!("{fig}{c}"));
        }
    }
    let listed: Vec<&str> = text
        .lines()
        .map(|l| l.split('\t').next().unwrap())
        .collect();
    assert_eq!(listed.len(), expected.len());
    for name in &expected {
        assert!(listed.contains(&name.as_str()), "{name} missing");
    }
}

#[test]
fn preset_parameters_match_the_figures() {
    let p = presets::preset("fig3a").unwrap();
    assert_eq!(p["params"]["g"], json!(0.99));
    assert_eq!(p["initial"], json!({ "z": 0.5, "phi": 0 }));
    let s = resolve(&presets::preset("fig4c").unwrap(), None).unwrap();
    match s.setup {
        phonon_bjj_cli::Setup::Junction { params, initial } => {
            assert_eq!((params.g, params.delta()), (7.0, 0.0));
            let init = initial.unwrap();
            assert_eq!((init.z, init.phi), (0.5, FRAC_PI_2));
        }
        _ => panic!("fig4c is a junction preset"),
    }
    let p = presets::preset("fig5b").unwrap();
    assert_eq!(p["family"]["values"], json!([0.1, 0.55, 0.5, 0.45]));
    let p = presets::preset("fig7b").unwrap();
    assert_eq!(
        p["params"],
        json!({ "g": 6.0, "delta0": 0.22, "delta_u": 0.01, "gamma": 0.01 })
    );
    assert_eq!(p["initial"], json!({ "z": 0.5, "phi": "pi/2" }));
    let oracle = resolve(&presets::preset("oracle-compare").unwrap(), None).unwrap();
    match oracle.setup {
        phonon_bjj_cli::Setup::Phonon { params, .. } => {
            assert_eq!(params, phonon_bjj::FullSystemParams::oracle_preset())
        }
        _ => panic!("oracle-compare is a phonon preset"),
    }
}

#[test]
fn every_preset_resolves() {
    for name in presets::names() {
        let doc = presets::preset(&name).unwrap();
        for (_, member) in phonon_bjj_cli::ScenarioConfig::members(&doc).unwrap() {
            resolve(&member, None).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }
}

#[test]
fn unknown_preset_lists_valid_names() {
    let o = run(&["simulate", "--preset", "fig9z"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(
        err.contains("fig9z") && err.contains("oracle-compare"),
        "{err}"
    );
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            json!({ "model": "bjj", "params": { "g": "strong" } }),
            "params.g",
        ),
        (
            json!({ "model": "bjj", "params": { "g": 1.0, "colour": 1 } }),
            "colour",
        ),
        (
            json!({ "model": "bjj", "params": { "g": 1.0 }, "initial": { "z": 2.0 }, "span": [0, 1] }),
            "initial.z",
        ),
        (
            json!({ "model": "bjj", "params": { "g": 1.0 }, "initial": { "z": 0.1, "phi": "half" }, "span": [0, 1] }),
            "initial.phi",
        ),
        (
            json!({ "model": "bjj", "params": { "g": 1.0 }, "initial": { "z": 0.1 }, "span": [1, 0] }),
            "span",
        ),
        (json!({ "model": "quantum", "params": {} }), "model"),
        (
            json!({ "model": "bjj", "params": { "g": 1.0 }, "analyses": ["validity"] }),
            "analyses[0]",
        ),
        (
            json!({ "model": "full", "params": {}, "span": [0, 1] }),
            "params",
        ),
    ];
    for (i, (doc, field)) in cases.iter().enumerate() {
        let path = write_config(dir.path(), &format!("c{i}.json"), doc);
        let o = run(&[
            "simulate",
            "--config",
            &path,
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(2), "case {i}: {}", stderr(&o));
        assert!(stderr(&o).contains(field), "case {i}: {}", stderr(&o));
    }
}

#[test]
fn integration_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = junction(0.5, 0.3, json!(0), &[]);
    doc["integrator"] = json!({ "max_steps": 10 });
    let path = write_config(dir.path(), "c.json", &doc);
    let o = run(&[
        "simulate",
        "--config",
        &path,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("at t ="), "{}", stderr(&o));
}

#[test]
fn missing_verdict_exits_with_four() {
    // z(0) = 0.5, phi(0) = 0, g = 1 is a fixed point: there is nothing to time.
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(
        dir.path(),
        "c.json",
        &junction(1.0, 0.5, json!(0), &["frequency"]),
    );
    let out = dir.path().join("out");
    let o = run(&[
        "simulate",
        "--config",
        &path,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    // The data files are still written.
    assert!(out.join("case.csv").exists());
    let a: Value =
        serde_json::from_slice(&fs::read(out.join("case.analysis.json")).unwrap()).unwrap();
    assert!(a["analyses"]["frequency"]["measured"][0]["omega"].is_null());
}

#[test]
fn output_is_deterministic_and_reproducible_from_provenance() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = run(&[
            "simulate",
            "--preset",
            "fig7a",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(matches!(o.status.code(), Some(0 | 4)), "{}", stderr(&o));
    }
    assert_eq!(files(a.path()), files(b.path()));
    let prov = a.path().join("fig7a.provenance.json");
    let o = run(&[
        "simulate",
        "--config",
        prov.to_str().unwrap(),
        "--out",
        c.path().to_str().unwrap(),
    ]);
    assert!(matches!(o.status.code(), Some(0 | 4)), "{}", stderr(&o));
    assert_eq!(files(a.path()), files(c.path()));
}

#[test]
fn every_file_has_a_provenance_sibling() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "simulate",
        "--preset",
        "fig6b",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let all = files(dir.path());
    let mut covered = Vec::new();
    for (name, bytes) in &all {
        if name.ends_with(".provenance.json") {
            let p: Value = serde_json::from_slice(bytes).unwrap();
            assert_eq!(p["provenance"]["tool"], "phonon-bjj");
            assert!(p["provenance"]["config"].is_object());
            for f in p["provenance"]["files"].as_array().unwrap() {
                covered.push(f.as_str().unwrap().to_string());
            }
        }
    }
    for (name, _) in &all {
        if !name.ends_with(".provenance.json") {
            assert!(covered.contains(name), "{name} has no provenance");
        }
    }
}

#[test]
fn output_directory_precedence() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["simulate", "--preset", "fig3a"])
        .env(phonon_bjj_cli::OUT_ENV, env_dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(env_dir.path().join("fig3a.csv").exists());
    let o = bin()
        .args([
            "simulate",
            "--preset",
            "fig3c",
            "--out",
            flag_dir.path().to_str().unwrap(),
        ])
        .env(phonon_bjj_cli::OUT_ENV, env_dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(flag_dir.path().join("fig3c.csv").exists());
    assert!(!env_dir.path().join("fig3c.csv").exists());
}

#[test]
fn trajectory_columns() {
    let fig3a = run_scenario(&resolve(&presets::preset("fig3a").unwrap(), None).unwrap()).unwrap();
    let t = fig3a.trajectory.unwrap();
    assert_eq!(t.columns, ["t", "z", "phi", "H", "I"]);
    let csv = &fig3a.files[0].contents;
    assert!(
        csv.starts_with("t,z,phi,H,I\n0.0,0.5,0.0,0.49875,"),
        "{}",
        &csv[..60]
    );

    let fig7a = run_scenario(&resolve(&presets::preset("fig7a").unwrap(), None).unwrap()).unwrap();
    let t = fig7a.trajectory.unwrap();
    assert_eq!(t.columns, ["t", "z", "phi", "H", "I", "z_prime", "tau"]);
    // z' = z exp(gamma t / 2) on every row.
    let (tt, z, zp) = (
        t.column("t").unwrap(),
        t.column("z").unwrap(),
        t.column("z_prime").unwrap(),
    );
    for i in (0..t.rows()).step_by(50) {
        let expect = z[i].unwrap() * (0.005 * tt[i].unwrap()).exp();
        assert!((zp[i].unwrap() - expect).abs() < 1e-9);
    }
}

#[test]
fn json_format_carries_the_same_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "simulate",
        "--preset",
        "fig3a",
        "--format",
        "json",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: Value =
        serde_json::from_slice(&fs::read(dir.path().join("fig3a.json")).unwrap()).unwrap();
    assert_eq!(doc["columns"], json!(["t", "z", "phi", "H", "I"]));
    assert_eq!(doc["values"][1][0], json!(0.5));
}

#[test]
fn energy_contours_of_the_landscape_presets() {
    let fig2a = resolve(&presets::preset("fig2a").unwrap(), None).unwrap();
    let b = phonon_bjj_cli::run_contours(&fig2a).unwrap();
    let csv = &b.file("fig2a.contours.csv").unwrap().contents;
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("z,phi,H"));
    let rows: Vec<[f64; 3]> = lines
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            [v[0], v[1], v[2]]
        })
        .collect();
    assert_eq!(rows.len(), 40401);
    // phi-major: phi is constant over each block of 201 rows.
    assert!(rows[..201].iter().all(|r| r[1] == 0.0));
    assert_eq!(rows[201][1], rows[401][1]);
    let origin = rows.iter().find(|r| r[0] == 0.0 && r[1] == 0.0).unwrap();
    assert_eq!(origin[2], 0.5);
    for (preset, g) in [("fig2a", 0.5), ("fig2b", 2.0)] {
        let s = resolve(&presets::preset(preset).unwrap(), None).unwrap();
        let b = phonon_bjj_cli::run_contours(&s).unwrap();
        let min = &b.record("contours").unwrap()["min"];
        let phi = min["phi"].as_f64().unwrap();
        assert!(
            (phi - FRAC_PI_2).abs() < 0.02,
            "{preset} minimum at phi = {phi}"
        );
        // Both landscapes bottom out at (z, phi) = (0, pi/2) with H = -1/2.
        assert!(min["z"].as_f64().unwrap().abs() < 1e-12, "{preset} g = {g}");
        assert!((min["H"].as_f64().unwrap() + 0.5).abs() < 1e-9);
    }
}

#[test]
fn sweep_over_the_interaction() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "base.json", &junction(0.9, 0.5, json!(0), &[]));
    let out = dir.path().join("out");
    let o = run(&[
        "sweep",
        "--config",
        &path,
        "--axis",
        "params.g",
        "--values",
        "0.9,1.0,1.1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = fs::read_to_string(out.join("case.sweep.csv")).unwrap();
    let rows: Vec<Vec<&str>> = summary
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 3);
    let trapped: Vec<&str> = rows.iter().map(|r| r[4]).collect();
    let h0: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    // The energy criterion H0 > 1/2 flips between g = 1.0 and 1.1.
    assert_eq!(
        h0.iter().map(|h| *h > 0.5).collect::<Vec<_>>(),
        [false, false, true]
    );
    // g = 1 puts (0.5, 0) on a fixed point, which never changes sign.
    assert_eq!(trapped, ["false", "true", "true"]);
    assert_eq!(rows[2][3], "running-phase");
    for v in ["0.9", "1.0", "1.1"] {
        assert!(out.join(format!("case.params-g-{v}.csv")).exists(), "{v}");
    }
}

#[test]
fn sweep_rejects_non_scalar_axes() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "base.json", &junction(0.9, 0.5, json!(0), &[]));
    for axis in ["params", "span", "initial.nothing.deeper"] {
        let o = run(&[
            "sweep", "--config", &path, "--axis", axis, "--values", "1,2",
        ]);
        assert_eq!(o.status.code(), Some(2), "{axis}: {}", stderr(&o));
    }
}

#[test]
fn angle_values_in_sweeps() {
    let doc = junction(7.0, 0.3, json!("pi/2"), &["regime"]);
    let mut fam = doc.clone();
    fam["family"] = json!({ "axis": "initial.phi", "values": ["pi/2", 0] });
    let (_, run) = run_document(&fam, None).unwrap();
    let first = run.members[0].1.trajectory.as_ref().unwrap();
    assert_eq!(first.column("phi").unwrap()[0], Some(FRAC_PI_2));
    assert_eq!(
        run.members[1]
            .1
            .trajectory
            .as_ref()
            .unwrap()
            .column("phi")
            .unwrap()[0],
        Some(0.0)
    );
}

#[test]
fn family_preset_matches_single_runs() {
    // Members of a family are the same scenario with the axis substituted.
    let (_, run) = run_document(&presets::preset("fig4d").unwrap(), None).unwrap();
    let mut single = junction(
        7.0,
        0.7,
        json!("pi/2"),
        &["regime", "frequency", "critical-values", "conservation"],
    );
    single["name"] = json!("fig4d.initial-z-0.7");
    let b = run_scenario(&resolve(&single, None).unwrap()).unwrap();
    assert_eq!(run.members[1].1.trajectory, b.trajectory);
    assert_eq!(run.members[1].1.record("regime"), b.record("regime"));
}

#[test]
fn derive_params_reports_the_mapping() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "derive-params",
        "--preset",
        "oracle-compare",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    let j = &doc["junction"];
    assert!((j["params"]["g"].as_f64().unwrap() + 1.0).abs() < 1e-6);
    assert_eq!(j["phase_offset"].as_f64().unwrap(), FRAC_PI_2);
    let conditions = doc["validity"]["conditions"].as_array().unwrap();
    assert_eq!(conditions.len(), 4);
    assert!(conditions.iter().all(|c| c["pass"] == json!(true)));
    assert!(dir.path().join("oracle-compare.derived.json").exists());
    assert!(dir.path().join("oracle-compare.provenance.json").exists());
}
