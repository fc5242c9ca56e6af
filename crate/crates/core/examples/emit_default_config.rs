//! Prints the fully materialized default scenario as TOML.
fn main() {
    print!("{}", enaam_core::ScenarioConfig::default().to_toml_string().unwrap());
}
