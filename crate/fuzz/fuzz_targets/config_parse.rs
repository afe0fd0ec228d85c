#![no_main]

use libfuzzer_sys::fuzz_target;
use qswitch_cli::config::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = ExperimentConfig::from_toml_str(text) else { return };
    let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).expect("serialized config reparses");
    assert_eq!(again, cfg);
    let _ = cfg.hash();
    if let Some((m, l)) = cfg.pairs.first().copied() {
        let _ = cfg.noise_model_for(m, l);
    }
});
