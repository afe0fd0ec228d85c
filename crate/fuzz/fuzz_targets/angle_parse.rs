#![no_main]

use libfuzzer_sys::fuzz_target;
use qswitch_cli::units::Angle;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(a) = text.parse::<Angle>() else { return };
    let back: Angle = a.to_string().parse().expect("display output reparses");
    assert_eq!(back, a);
});
