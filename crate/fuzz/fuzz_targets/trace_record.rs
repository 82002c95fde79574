#![no_main]

use fieldnav_core::sim::parse_trace_line;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(rec) = parse_trace_line(text) else { return };
    let back = parse_trace_line(&rec.to_line()).expect("written record parses");
    assert_eq!(back, rec);
});
