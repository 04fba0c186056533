#![no_main]

use barrier_core::ingest::{parse_pairs_from_reader, write_pairs};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(pairs) = parse_pairs_from_reader(data) else {
        return;
    };
    let mut first = Vec::new();
    write_pairs(&pairs, &mut first).unwrap();
    let again = parse_pairs_from_reader(first.as_slice()).expect("written pairs reparse");
    let mut second = Vec::new();
    write_pairs(&again, &mut second).unwrap();
    assert_eq!(first, second);
});
