//! Built-in configurations, one per figure.

pub const PRESETS: &[(&str, &str)] = &[
    ("fig3a", include_str!("../presets/fig3a.toml")),
    ("fig3b", include_str!("../presets/fig3b.toml")),
    ("fig3c", include_str!("../presets/fig3c.toml")),
    ("fig3d", include_str!("../presets/fig3d.toml")),
    ("fig3e", include_str!("../presets/fig3e.toml")),
    ("fig3f", include_str!("../presets/fig3f.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
    ("headline", include_str!("../presets/headline.toml")),
    ("trace", include_str!("../presets/trace.toml")),
];

pub fn get(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    #[test]
    fn all_presets_parse() {
        for (name, text) in PRESETS {
            ExperimentConfig::from_toml_str(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }
}
