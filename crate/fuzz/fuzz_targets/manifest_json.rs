#![no_main]

use fieldnav_core::scene::SceneManifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(m) = SceneManifest::from_json(text) else { return };
    let back = SceneManifest::from_json(&m.to_json()).expect("serialized manifest parses");
    assert_eq!(back.to_json(), m.to_json());
});
