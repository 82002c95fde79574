#![no_main]

use fieldnav_core::session::parse_goal_command;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = parse_goal_command(text) {
        assert!(c.x.is_finite() && c.y.is_finite());
    }
});
