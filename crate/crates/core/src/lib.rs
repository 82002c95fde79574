pub mod config;
pub mod field;
pub mod scene;
pub mod session;
pub mod sim;
pub mod vmf;
pub mod voxel;
