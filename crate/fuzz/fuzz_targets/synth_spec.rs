#![no_main]

use barrier_core::synth::{generate, SyntheticSpec};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(spec) = toml::from_str::<SyntheticSpec>(text) else {
        return;
    };
    if spec.validate().is_err() {
        return;
    }
    let small = spec.n_examples + spec.n_other_pairs <= 300
        && spec.n_countries <= 64
        && spec.n_publishers <= 128
        && spec.concept_pool <= 2000
        && spec.concepts_per_article <= 64;
    if small {
        let corpus = generate(&spec).expect("a valid spec generates");
        assert_eq!(corpus.truth.len(), spec.n_examples);
    }
});
