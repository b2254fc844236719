//! Toolkit for characterizing object detectors, allocating them to video
//! streams across processing sites, and fusing their detections into a
//! geolocated saliency map.
//!
//! * [`metrics`] - IoU matching, COCO AP/AR and the LRP/oLRP error family.
//! * [`allocation`] - detector filtering, cyclic horizon, ILP construction,
//!   exact branch-and-bound solving and independent verification.
//! * [`fusion`] - log-odds voxel grid over a 2.5D terrain with positive and
//!   negative sensor-model updates.
//! * [`salient`] - thresholding and Euclidean clustering of the fused grid.
//! * [`sim`] - seeded scenario replay standing in for UAV flights and CNNs.

pub mod allocation;
pub mod fusion;
pub mod metrics;
pub mod salient;
pub mod sim;
