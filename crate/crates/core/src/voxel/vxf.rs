//! `VXF1` binary field dumps.
//!
//! Layout (all little-endian):
//!
//! | offset | size | content                      |
//! |--------|------|------------------------------|
//! | 0      | 4    | magic `b"VXF1"`              |
//! | 4      | 12   | `u32` nx, ny, nz             |
//! | 16     | 4    | `f32` resolution             |
//! | 20     | 12   | `f32` origin x, y, z         |
//! | 32     | ...  | payload, x fastest           |
//!
//! The payload is one `u8` (0/1) per voxel for occupancy, one `f32` for
//! scalar fields, and three `f32` for vector fields. The kind is recovered
//! from the payload length.

use nalgebra::Vector3;
use thiserror::Error;

use super::grid::{GridSpec, OccupancyGrid, ScalarField, VectorField};

pub const MAGIC: &[u8; 4] = b"VXF1";
pub const HEADER_LEN: usize = 32;

#[derive(Debug, Error, PartialEq)]
pub enum VxfError {
    #[error("input shorter than the {HEADER_LEN}-byte header")]
    Truncated,
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("invalid grid header: {0}")]
    BadHeader(String),
    #[error("payload of {got} bytes matches no field kind for {voxels} voxels")]
    BadPayloadLength { got: usize, voxels: usize },
    #[error("occupancy byte {value} at voxel {index} is not 0 or 1")]
    BadOccupancy { index: usize, value: u8 },
    #[error("NaN at voxel {0}")]
    NaN(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum VxfPayload {
    Occupancy(OccupancyGrid),
    Scalar(ScalarField),
    Vector(VectorField),
}

impl VxfPayload {
    pub fn spec(&self) -> &GridSpec {
        match self {
            VxfPayload::Occupancy(g) => &g.spec,
            VxfPayload::Scalar(f) => &f.spec,
            VxfPayload::Vector(f) => &f.spec,
        }
    }
}

fn header(spec: &GridSpec, payload_len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + payload_len);
    out.extend_from_slice(MAGIC);
    for d in spec.dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&(spec.resolution as f32).to_le_bytes());
    for a in 0..3 {
        out.extend_from_slice(&(spec.origin[a] as f32).to_le_bytes());
    }
    out
}

pub fn encode_occupancy(grid: &OccupancyGrid) -> Vec<u8> {
    let mut out = header(&grid.spec, grid.occupied.len());
    out.extend(grid.occupied.iter().map(|&o| o as u8));
    out
}

pub fn encode_scalar(field: &ScalarField) -> Vec<u8> {
    let mut out = header(&field.spec, 4 * field.values.len());
    for &v in &field.values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn encode_vector(field: &VectorField) -> Vec<u8> {
    let mut out = header(&field.spec, 12 * field.values.len());
    for v in &field.values {
        for a in 0..3 {
            out.extend_from_slice(&(v[a] as f32).to_le_bytes());
        }
    }
    out
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn f32_at(b: &[u8], at: usize) -> f32 {
    f32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

/// Decode a header and validate it into a [`GridSpec`].
pub fn decode_header(bytes: &[u8]) -> Result<GridSpec, VxfError> {
    if bytes.len() < HEADER_LEN {
        return Err(VxfError::Truncated);
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if &magic != MAGIC {
        return Err(VxfError::BadMagic(magic));
    }
    let dims = [u32_at(bytes, 4), u32_at(bytes, 8), u32_at(bytes, 12)].map(|d| d as usize);
    let res = f32_at(bytes, 16) as f64;
    let origin = Vector3::new(f32_at(bytes, 20) as f64, f32_at(bytes, 24) as f64, f32_at(bytes, 28) as f64);
    if !origin.iter().all(|v| v.is_finite()) {
        return Err(VxfError::BadHeader("non-finite origin".into()));
    }
    GridSpec::new(origin, res, dims).map_err(|e| VxfError::BadHeader(e.to_string()))
}

pub fn decode(bytes: &[u8]) -> Result<VxfPayload, VxfError> {
    let spec = decode_header(bytes)?;
    let payload = &bytes[HEADER_LEN..];
    let n = spec.len();
    if payload.len() == n {
        let mut occupied = Vec::with_capacity(n);
        for (index, &value) in payload.iter().enumerate() {
            match value {
                0 => occupied.push(false),
                1 => occupied.push(true),
                _ => return Err(VxfError::BadOccupancy { index, value }),
            }
        }
        return Ok(VxfPayload::Occupancy(OccupancyGrid { spec, occupied }));
    }
    if n.checked_mul(4) == Some(payload.len()) {
        let mut values = Vec::with_capacity(n);
        for i in 0..n {
            let v = f32_at(payload, 4 * i);
            if v.is_nan() {
                return Err(VxfError::NaN(i));
            }
            values.push(v as f64);
        }
        return Ok(VxfPayload::Scalar(ScalarField { spec, values }));
    }
    if n.checked_mul(12) == Some(payload.len()) {
        let mut values = Vec::with_capacity(n);
        for i in 0..n {
            let v = Vector3::new(f32_at(payload, 12 * i), f32_at(payload, 12 * i + 4), f32_at(payload, 12 * i + 8));
            if v.iter().any(|c| c.is_nan()) {
                return Err(VxfError::NaN(i));
            }
            values.push(v.cast::<f64>());
        }
        return Ok(VxfPayload::Vector(VectorField { spec, values }));
    }
    Err(VxfError::BadPayloadLength { got: payload.len(), voxels: n })
}
