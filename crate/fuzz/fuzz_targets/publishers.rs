#![no_main]

use std::sync::OnceLock;

use barrier_core::knowledge::{ProfileStore, PublisherStore};
use libfuzzer_sys::fuzz_target;

const COUNTRIES: &str = include_str!("../../crates/core/tests/fixtures/mini/countries.csv");

fn countries() -> &'static ProfileStore {
    static STORE: OnceLock<ProfileStore> = OnceLock::new();
    STORE.get_or_init(|| ProfileStore::from_reader(COUNTRIES.as_bytes()).unwrap())
}

fuzz_target!(|data: &[u8]| {
    let Ok(store) = PublisherStore::from_reader(data, countries()) else {
        return;
    };
    let mut first = Vec::new();
    store.write(&mut first).unwrap();
    let again = PublisherStore::from_reader(first.as_slice(), countries()).expect("written publishers reparse");
    let mut second = Vec::new();
    again.write(&mut second).unwrap();
    assert_eq!(first, second);
    assert_eq!(again.alignment_vocabulary(), store.alignment_vocabulary());
});
