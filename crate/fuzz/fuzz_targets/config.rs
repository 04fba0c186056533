#![no_main]

use std::path::Path;

use barrier_core::pipeline::PipelineConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let base = Path::new("/runs");
    let Ok(config) = PipelineConfig::from_toml(text, base) else {
        return;
    };
    let _ = config.barrier_kinds();
    let _ = config.model_families();
    let _ = config.experiment_models();
    let written = config.to_toml();
    let again = PipelineConfig::from_toml(&written, base).expect("written config reparses");
    assert_eq!(again.to_toml(), written);
});
