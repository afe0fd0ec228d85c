#![no_main]

use libfuzzer_sys::fuzz_target;
use qswitch::montecarlo::{EstimationReport, FitReport, ScalingReport};

fuzz_target!(|data: &[u8]| {
    if let Ok(r) = serde_json::from_slice::<EstimationReport>(data) {
        let _ = serde_json::to_vec(&r).unwrap();
    }
    let _ = serde_json::from_slice::<ScalingReport>(data);
    if let Ok(f) = serde_json::from_slice::<FitReport>(data) {
        let _ = f.model(0.0);
    }
});
