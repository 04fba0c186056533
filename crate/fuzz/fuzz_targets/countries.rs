#![no_main]

use barrier_core::knowledge::ProfileStore;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(store) = ProfileStore::from_reader(data) else {
        return;
    };
    let mut out = Vec::new();
    store.write(&mut out).unwrap();
    let again = ProfileStore::from_reader(out.as_slice()).expect("written countries reparse");
    assert_eq!(again, store);
});
