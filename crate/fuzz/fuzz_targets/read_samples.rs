#![no_main]

use driftcl::data::{build_stream, read_samples, write_samples, N_CLASSES};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(samples) = read_samples(data) else {
        return;
    };
    for s in &samples {
        assert!(s.label < N_CLASSES);
        assert!(s.features.iter().all(|v| v.is_finite()));
    }
    // whatever parses must survive a write/read cycle unchanged
    let mut buf = Vec::new();
    write_samples(&mut buf, &samples).unwrap();
    assert_eq!(read_samples(buf.as_slice()).unwrap(), samples);
    let _ = build_stream(samples, 0.8, 0);
});
