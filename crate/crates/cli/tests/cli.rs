use std::path::Path;
use std::process::{Command, Output};

use qswitch_cli::config::ExperimentConfig;
use qswitch_cli::{execute, execute_with_workers, presets, Kind};
use serde_json::Value;

fn qswitch(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qswitch"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("QSWITCH_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn report(bytes: &[u8]) -> Value {
    let v: Value = serde_json::from_slice(bytes).unwrap();
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
    v["report"].clone()
}

fn cfg(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml_str(text).unwrap()
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");

    let bad = write_config(tmp.path(), "bad.toml", "m = 2\nl = 1\nunknown = 1\n");
    let o = qswitch(&["estimate", "--config", &bad], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown"));

    let o = qswitch(&["estimate", "--preset", "nope"], &out);
    assert_eq!(o.status.code(), Some(2));

    let few = write_config(
        tmp.path(),
        "few.toml",
        "m = 2\nl = 1\nphi0 = 0.3\n[theta_sweep]\nstart = \"0 deg\"\nend = \"45 deg\"\nsteps = 4\n",
    );
    let o = qswitch(&["fringe", "--config", &few], &out);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fringe period"));

    let off = write_config(
        tmp.path(),
        "off.toml",
        "m = 2\nl = 1\ntheta_true = 0.3\nphi0 = 0\n[dove]\ndeflection_on = true\ncompensation_on = false\n",
    );
    let o = qswitch(&["trace", "--config", &off], &out);
    assert_eq!(o.status.code(), Some(4));
    assert!(out.join("trace.json").exists());

    let sweep_off = write_config(
        tmp.path(),
        "sweep_off.toml",
        "m = 2\nl = 1\nphi0 = 0\ntrials = 2\n[theta_sweep]\nstart = 0\nend = \"90 deg\"\nsteps = 32\n\
         [dove]\ndeflection_on = true\ncompensation_on = false\n[output]\nformats = [\"json\"]\n",
    );
    let o = qswitch(&["fringe", "--config", &sweep_off], &out);
    assert_eq!(o.status.code(), Some(0));
    let o = qswitch(&["fringe", "--config", &sweep_off, "--check"], &out);
    assert_eq!(o.status.code(), Some(4));

    let o = qswitch(&["trace", "--preset", "trace", "--check"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn presets_are_listed() {
    let o = Command::new(env!("CARGO_BIN_EXE_qswitch")).arg("presets").output().unwrap();
    let text = String::from_utf8(o.stdout).unwrap();
    for (name, _) in presets::PRESETS {
        assert!(text.lines().any(|l| l == *name));
    }
}

#[test]
fn output_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_qswitch"))
        .args(["qfi", "--preset", "headline"])
        .env("QSWITCH_OUTPUT_DIR", tmp.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(tmp.path().join("qfi.json").exists());
}

#[test]
fn fringe_small_pair_recovers_frequency() {
    let c = cfg(
        "m = 2\nl = 1\nphi0 = 0.3\ntrials = 4\n[theta_sweep]\nstart = 0\nend = \"45 deg\"\nsteps = 64\n",
    );
    let a = execute(Kind::Fringe, &c, None).unwrap();
    let r = report(a.file("fringe.json").unwrap());
    assert!((r["fit"]["frequency"].as_f64().unwrap() - 8.0).abs() < 1e-3);
    assert!(a.violations.is_empty(), "{:?}", a.violations);
    let csv = String::from_utf8(a.file("fringe.csv").unwrap().to_vec()).unwrap();
    assert!(csv.starts_with("theta_rad,p_ideal,p_noisy_mean,p_noisy_sem,fit_curve\n"));
    assert_eq!(csv.lines().count(), 65);
    let cell = csv.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    let mantissa = cell.split('e').next().unwrap();
    assert_eq!(mantissa.replace(['.', '-'], "").len(), 17);
    assert!(a.file("fringe.svg").unwrap().starts_with(b"<svg"));
}

#[test]
fn fringe_one_degree_has_eleven_fringes() {
    let mut c = cfg(presets::get("fig3f").unwrap());
    c.trials = 2;
    let a = execute(Kind::Fringe, &c, None).unwrap();
    let r = report(a.file("fringe.json").unwrap());
    let n = r["fringe_count"].as_f64().unwrap();
    assert!((n - 11.38).abs() < 0.01, "{n}");
    assert!((r["fit"]["frequency"].as_f64().unwrap() - 4096.0).abs() / 4096.0 < 1e-5);
}

#[test]
fn estimate_reports_all_units_and_bound() {
    let c = cfg("m = 8\nl = 128\ntheta_true = \"0.025 deg\"\nnu = 7.16e7\ntrials = 200\nseed = 5\n");
    let a = execute(Kind::Estimate, &c, None).unwrap();
    let r = report(a.file("estimate.json").unwrap());
    let t = &r["theta_true"];
    assert!((t["deg"].as_f64().unwrap() - 0.025).abs() < 1e-15);
    assert!((t["arcsec"].as_f64().unwrap() - 90.0).abs() < 1e-10);
    assert!((t["rad"].as_f64().unwrap() - 4.363323129985824e-4).abs() < 1e-18);
    let crb_arcsec = r["crb"]["arcsec"].as_f64().unwrap();
    assert!((crb_arcsec - 0.00595).abs() < 5e-6);
    let rmse = r["rmse"]["arcsec"].as_f64().unwrap();
    assert!((rmse / crb_arcsec - 1.0).abs() < 0.15, "{rmse}");
    let np = r["campaign"]["normalized_precision"].as_f64().unwrap();
    assert!((np / 2.44e-4 - 1.0).abs() < 0.15);
    assert!(a.summary.contains("arcsec"));
}

#[test]
fn single_trial_leaves_rmse_undefined() {
    let c = cfg("m = 2\nl = 1\ntheta_true = 0.01\ntrials = 1\n");
    let a = execute(Kind::Estimate, &c, None).unwrap();
    let r = report(a.file("estimate.json").unwrap());
    assert_eq!(r["rmse_defined"], false);
    assert!(r["rmse"].is_null());
    assert!(r["hup"].is_null());
    assert!(a.summary.contains("undefined"));
}

#[test]
fn scaling_includes_the_4096_point() {
    let mut c = cfg(presets::get("fig4").unwrap());
    c.trials = 30;
    let a = execute(Kind::Scaling, &c, None).unwrap();
    let r = report(a.file("scaling.json").unwrap());
    let pts = r["study"]["points"].as_array().unwrap();
    assert!(pts.iter().any(|p| p["fourml"].as_f64() == Some(4096.0)));
    let csv = String::from_utf8(a.file("scaling.csv").unwrap().to_vec()).unwrap();
    assert!(csv.starts_with("m,l,fourml,rmse_norm,crb,gap\n"));
    let gap = r["regression_gap"].as_f64().unwrap();
    assert!((gap / 2.4 - 1.0).abs() < 0.2, "{gap}");

    c.pairs.clear();
    assert_eq!(execute(Kind::Scaling, &c, None).unwrap_err().exit_code(), 2);
    c.pairs = vec![(2, 1)];
    assert_eq!(execute(Kind::Scaling, &c, None).unwrap_err().exit_code(), 2);
}

#[test]
fn trace_fidelities_and_flags() {
    let a = execute(Kind::Trace, &cfg(presets::get("trace").unwrap()), None).unwrap();
    let r = report(a.file("trace.json").unwrap());
    let stages = r["stages"].as_array().unwrap();
    assert_eq!(stages.len(), 8);
    assert!(stages.iter().all(|s| s["fidelity"].as_f64().unwrap() > 1.0 - 1e-9));
    assert!(a.failures.is_empty());

    let bad = cfg("m = 2\nl = 1\ntheta_true = 0.3\nphi0 = 0\n[dove]\ndeflection_on = true\ncompensation_on = false\n");
    let a = execute(Kind::Trace, &bad, None).unwrap();
    assert!(a.failures.iter().any(|f| f.contains("final")), "{:?}", a.failures);

    // At θ = 0 an even prism stack leaves the state unchanged.
    let zero = cfg("m = 2\nl = 1\ntheta_true = 0\nphi0 = 0\n");
    let a = execute(Kind::Trace, &zero, None).unwrap();
    let r = report(a.file("trace.json").unwrap());
    assert_eq!(r["stages"][1]["amplitudes"], r["stages"][2]["amplitudes"]);

    let odd = cfg("m = 3\nl = 1\ntheta_true = 0.1\n");
    assert_eq!(execute(Kind::Trace, &odd, None).unwrap_err().exit_code(), 2);
}

#[test]
fn qfi_closed_forms() {
    let c = cfg("m = 8\nl = 128\n");
    let a = execute(Kind::Qfi, &c, None).unwrap();
    let r = report(a.file("qfi.json").unwrap());
    assert!((r["switch"]["delta_h_numeric"].as_f64().unwrap() - 2048.0).abs() / 2048.0 < 1e-4);
    assert!(r["multipass"]["delta_h_numeric"].as_f64().unwrap() < 1e-4);
    let fi = r["fisher"]["per_photon_fi"].as_f64().unwrap();
    assert!((fi / 4096f64.powi(2) - 1.0).abs() < 1e-4);
    assert!(a.violations.is_empty());

    let r = report(execute(Kind::Qfi, &cfg("m = 1\nl = 1\n"), None).unwrap().file("qfi.json").unwrap());
    assert_eq!(r["resource_count"], 4);

    let sup = cfg("m = 8\nl = 4\n[probe]\noam = [[4, 1.0, 0.0], [-4, 1.0, 0.0]]\n");
    let a = execute(Kind::Qfi, &sup, None).unwrap();
    let r = report(a.file("qfi.json").unwrap());
    assert!((r["multipass"]["delta_h_numeric"].as_f64().unwrap() - 64.0).abs() / 64.0 < 1e-4);
    assert_eq!(r["probe_is_lz_eigenstate"], false);
    assert!(r["notes"][0].as_str().unwrap().contains("measurement"));
    assert!(a.violations.is_empty(), "{:?}", a.violations);
}

#[test]
fn qfi_checks_the_last_campaign() {
    let tmp = tempfile::tempdir().unwrap();
    let cfgfile = write_config(
        tmp.path(),
        "c.toml",
        "m = 4\nl = 2\ntheta_true = \"0.025 deg\"\ntrials = 4000\nseed = 3\n[output]\nformats = [\"json\"]\n",
    );
    let out = tmp.path().join("o");
    assert!(qswitch(&["estimate", "--config", &cfgfile], &out).status.success());
    let o = qswitch(&["qfi", "--config", &cfgfile, "--check"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&std::fs::read(out.join("qfi.json")).unwrap());
    let p = r["hup"]["product"].as_f64().unwrap();
    assert!(p > 0.49 && p < 0.52, "{p}");
}

#[test]
fn worker_count_does_not_change_bytes() {
    let mut fringe = cfg(presets::get("fig3c").unwrap());
    fringe.trials = 6;
    let mut estimate = cfg(presets::get("headline").unwrap());
    estimate.trials = 500;
    let mut scaling = cfg(presets::get("fig4").unwrap());
    scaling.trials = 20;
    let trace = cfg(presets::get("trace").unwrap());
    let qfi = cfg("m = 6\nl = 3\n");
    let jobs = [
        (Kind::Fringe, fringe),
        (Kind::Estimate, estimate),
        (Kind::Scaling, scaling),
        (Kind::Trace, trace),
        (Kind::Qfi, qfi),
    ];
    for (kind, c) in &jobs {
        let reference = execute_with_workers(*kind, c, None, Some(1)).unwrap();
        for w in [4, 16] {
            let a = execute_with_workers(*kind, c, None, Some(w)).unwrap();
            assert_eq!(a.files, reference.files, "{} with {w} workers", kind.name());
        }
        assert_eq!(execute(*kind, c, None).unwrap().files, reference.files);
    }
}
