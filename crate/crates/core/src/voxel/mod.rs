//! Voxel substrate: lattices, rasterization, distance transforms,
//! interpolation, gradients, morphology, and the binary dump format.

pub mod edt;
pub mod grid;
pub mod morph;
pub mod raster;
pub mod sample;
pub mod vxf;

pub use edt::{signed_distance, squared_edt};
pub use grid::{GridError, GridSpec, OccupancyGrid, ScalarField, VectorField, UNREACHABLE};
pub use morph::{dilate, erode, morph_close, morph_open};
pub use raster::{rasterize_boxes, Anchor, BoxError, OrientedBox, DEFAULT_VOXEL_BUDGET};
pub use sample::{gradient_central, Trilinear};
