#![no_main]

use barrier_core::classifiers::TrainedModel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(model) = TrainedModel::from_json(text) else {
        return;
    };
    // a model that loads must predict without panicking
    if model.n_features() <= 4096 {
        let _ = model.predict(&vec![0.0; model.n_features()]);
        let _ = model.predict(&vec![1.0; model.n_features()]);
    }
    let json = model.to_json();
    let again = TrainedModel::from_json(&json).expect("saved model reloads");
    assert_eq!(again.to_json(), json);
});
