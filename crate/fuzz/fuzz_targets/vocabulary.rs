#![no_main]

use barrier_core::features::ConceptVocabulary;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(vocab) = ConceptVocabulary::from_reader(data) {
        let mut out = Vec::new();
        vocab.write(&mut out).unwrap();
        let again = ConceptVocabulary::from_reader(out.as_slice()).expect("written vocabulary reparses");
        assert_eq!(again.entries(), vocab.entries());
        for (i, (concept, _)) in vocab.entries().iter().enumerate() {
            assert_eq!(vocab.position(concept), Some(i));
        }
    }
});
