#![no_main]

use barrier_core::ingest::ConceptIndex;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(index) = ConceptIndex::from_reader(data) {
        let mut out = Vec::new();
        index.write(&mut out).unwrap();
        assert_eq!(ConceptIndex::from_reader(out.as_slice()).unwrap(), index);
    }
});
