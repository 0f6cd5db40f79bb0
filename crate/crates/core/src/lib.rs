//! Deterministic six-DOF simulator for spacecraft rendezvous and proximity
//! operations. A potential-field guidance layer with dynamic obstacle
//! avoidance feeds sliding-mode position and attitude controllers; the closed
//! loop runs at configurable multi-rate update frequencies over Hill relative
//! dynamics with environmental disturbances, on/off thruster banks and
//! reaction wheels.

pub mod actuation;
pub mod control;
pub mod disturbances;
pub mod dynamics;
pub mod frames;
pub mod guidance;
pub mod harness;
pub mod output;
pub mod scenario;
pub mod sensors;

pub use frames::{EulerAngles321, Mat3, Quaternion, Vec3};
