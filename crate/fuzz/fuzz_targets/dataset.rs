#![no_main]

use barrier_core::annotate::{read_dataset, write_dataset};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(dataset) = read_dataset(data, None) else {
        return;
    };
    let width = dataset.feature_names.len();
    assert!(dataset.instances.iter().all(|i| i.features.len() == width));
    let mut out = Vec::new();
    write_dataset(&dataset, &mut out).unwrap();
    let again = read_dataset(out.as_slice(), Some(dataset.barrier)).expect("written dataset reparses");
    assert_eq!(again.instances, dataset.instances);
    assert_eq!(again.feature_names, dataset.feature_names);
});
