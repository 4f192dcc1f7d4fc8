#![no_main]

use driftcl::strategies::parse_strategy_list;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(kinds) = parse_strategy_list(text) {
        assert!(!kinds.is_empty() && kinds.len() <= 7);
        let joined: Vec<&str> = kinds.iter().map(|k| k.as_str()).collect();
        assert_eq!(parse_strategy_list(&joined.join(",")).unwrap(), kinds);
    }
});
