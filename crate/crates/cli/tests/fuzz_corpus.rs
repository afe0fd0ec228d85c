//! Replays the checked-in fuzz corpus through the parser entry points.

use std::fs;
use std::path::PathBuf;

use qswitch_cli::commands::qfi::PriorCampaign;
use qswitch_cli::config::ExperimentConfig;
use qswitch_cli::units::Angle;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut v: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    assert!(!v.is_empty(), "no seeds in {}", dir.display());
    v
}

#[test]
fn config_seeds() {
    let mut parsed = 0;
    for (name, bytes) in seeds("config_parse") {
        let Ok(cfg) = ExperimentConfig::from_toml_str(std::str::from_utf8(&bytes).unwrap()) else {
            assert_eq!(name, "unknown_field");
            continue;
        };
        assert_eq!(ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg, "{name}");
        parsed += 1;
    }
    assert!(parsed >= 10);
}

#[test]
fn angle_seeds() {
    let ok: Vec<_> = seeds("angle_parse")
        .into_iter()
        .filter_map(|(_, b)| String::from_utf8(b).ok()?.parse::<Angle>().ok())
        .collect();
    assert_eq!(ok.len(), 4);
    for a in ok {
        assert_eq!(a.to_string().parse::<Angle>().unwrap(), a);
    }
}

#[test]
fn estimate_json_seeds() {
    for (name, bytes) in seeds("estimate_json") {
        let prior = PriorCampaign::from_estimate_json(&bytes);
        assert_eq!(prior.is_some(), name == "estimate", "{name}");
    }
}

#[test]
fn report_json_seeds() {
    use qswitch::montecarlo::{EstimationReport, FitReport, ScalingReport};
    for (name, bytes) in seeds("report_json") {
        let ok = match name.as_str() {
            "campaign" => serde_json::from_slice::<EstimationReport>(&bytes).is_ok(),
            "fit" => serde_json::from_slice::<FitReport>(&bytes).is_ok(),
            "scaling" => serde_json::from_slice::<ScalingReport>(&bytes).is_ok(),
            _ => true,
        };
        assert!(ok, "{name}");
    }
}
