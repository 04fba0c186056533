#![no_main]

use barrier_core::eval::report::parse_report_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = parse_report_csv(data) {
        for (_, _, m) in rows {
            for v in [m.classification_accuracy, m.micro_precision, m.micro_recall, m.micro_f1] {
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }
});
