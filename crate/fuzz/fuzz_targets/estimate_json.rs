#![no_main]

use libfuzzer_sys::fuzz_target;
use qswitch_cli::commands::qfi::PriorCampaign;

fuzz_target!(|data: &[u8]| {
    let _ = PriorCampaign::from_estimate_json(data);
});
