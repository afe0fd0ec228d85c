use proptest::prelude::*;
use qswitch_cli::config::{
    DoveConfig, ExperimentConfig, Format, NoiseConfig, OutputConfig, Phi0, ProbeConfig, ThetaSweep,
};
use qswitch_cli::units::{Angle, AngleUnit};

fn angle() -> impl Strategy<Value = Angle> {
    (-3.0f64..3.0).prop_map(Angle)
}

prop_compose! {
    fn config()(
        m in 1u32..64,
        l in 1u32..256,
        theta in prop::option::of(-3.0f64..3.0),
        sweep in prop::option::of((-3.0f64..0.0, 0.001f64..3.0, 2usize..4096)),
        nu in 1u64..u64::MAX,
        trials in 1usize..100_000,
        phi0 in prop::option::of(angle()),
        seed in any::<u64>(),
        pairs in prop::collection::vec((1u32..64, 1u32..256), 0..8),
        vis in 0.01f64..=1.0,
        jitter in 0.0f64..1e-3,
        drift in 0.0f64..1.0,
        eff in 0.01f64..=1.0,
        delta in angle(),
        rho in 0.01f64..=1.0,
        alpha0 in angle(),
        flags in (any::<bool>(), any::<bool>()),
        oam in prop::collection::vec((-64i64..64, 0.01f64..1.0, -1.0f64..1.0), 1..5),
        dir in "[a-z/]{1,12}",
        formats in prop::sample::subsequence(vec![Format::Csv, Format::Json, Format::Svg], 0..=3),
    ) -> ExperimentConfig {
        let (theta_true, theta_sweep) = match (theta, sweep) {
            (Some(_), Some(_)) | (Some(_), None) => (theta.map(Angle), None),
            (None, s) => (None, s.map(|(a, b, n)| ThetaSweep { start: Angle(a), end: Angle(b), steps: n })),
        };
        ExperimentConfig {
            m,
            l,
            theta_true,
            nu,
            trials,
            phi0: phi0.map_or(Phi0::Quadrature, Phi0::Fixed),
            seed,
            pairs,
            theta_sweep,
            noise: NoiseConfig {
                visibility: vis,
                rotation_jitter: Angle(jitter),
                phase_drift: Angle(drift),
                efficiency: eff,
                target_gap: None,
            },
            dove: DoveConfig { delta, rho, alpha0, deflection_on: flags.0, compensation_on: flags.1 },
            probe: ProbeConfig { oam },
            output: OutputConfig { dir, formats },
        }
    }
}

proptest! {
    #[test]
    fn parse_serialize_parse_is_identity(c in config()) {
        prop_assert!(c.validate().is_ok(), "{:?}", c.validate());
        let text = c.to_toml_string();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.to_toml_string(), text);
        prop_assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn units_inter_convert(v in -1e6f64..1e6) {
        for unit in [AngleUnit::Rad, AngleUnit::Deg, AngleUnit::Arcsec] {
            let a: Angle = format!("{v} {}", unit.suffix()).parse().unwrap();
            let expected = v * unit.factor();
            prop_assert!((a.rad() - expected).abs() <= 1e-15 * expected.abs());
            let back: Angle = a.to_string().parse().unwrap();
            prop_assert_eq!(back, a);
        }
        let d: Angle = format!("{v} deg").parse().unwrap();
        let s: Angle = format!("{} arcsec", v * 3600.0).parse().unwrap();
        prop_assert!((d.rad() - s.rad()).abs() <= 1e-12 * d.rad().abs());
    }
}

#[test]
fn target_gap_round_trips() {
    let text = "m = 8\nl = 128\ntheta_true = \"0.025 deg\"\n[noise]\nvisibility = 0.96\ntarget_gap = 1.76\n";
    let c = ExperimentConfig::from_toml_str(text).unwrap();
    assert_eq!(ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap(), c);
}
