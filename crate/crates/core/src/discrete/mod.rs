//! Signals generated by discrete-time exosystems and recovered from their
//! switch-mixed streams.

pub mod group;
pub mod permutation;
pub mod rotation;
pub mod sensors;

pub use group::{group_resonance_search, reconstruct_group, GroupSystemSpec, GroupTag};
pub use permutation::{cycle_resonance, permutation_losslessness, reconstruct_permutation, PermutationSpec};
pub use rotation::{reconstruct_rotation, rotation_resonance, Angle, RotationSpec};
pub use sensors::{
    observability_criterion, reconstruct_sensor_network, roundrobin_losslessness, SensorNetworkSpec,
};
