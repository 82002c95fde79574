#![no_main]

use fieldnav_core::voxel::vxf::{decode, encode_occupancy, encode_scalar, encode_vector, VxfPayload};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(payload) = decode(data) else { return };
    // anything accepted re-encodes to a decodable file of the same shape
    let bytes = match &payload {
        VxfPayload::Occupancy(g) => encode_occupancy(g),
        VxfPayload::Scalar(f) => encode_scalar(f),
        VxfPayload::Vector(f) => encode_vector(f),
    };
    let again = decode(&bytes).expect("re-encoded file decodes");
    assert_eq!(again.spec(), payload.spec());
});
