//! Joint measurability and the steering reductions built on it.

pub mod certificate;
pub mod jm;
pub mod sdp;
pub mod steering;

pub use certificate::{
    verify_common_instrument, verify_lhs, verify_parent, verify_witness, CommonInstrument, CommonInstrumentCheck,
    LhsCheck, LhsModel, ParentCheck, WitnessCheck,
};
pub use jm::{
    jm_decide, jm_decide_batch, jm_decide_with, qubit_jm_criterion, strategy_count, DualWitness, JmOptions,
    JmResiduals, JmStatus, JmVerdict, ParentPovm, StrategySpace, DEFAULT_STRATEGY_CAP, JM_TOL,
};
pub use sdp::{BlockSdp, SdpOptions, SdpSolution};
pub use steering::{
    assemblage_dummy_povms, decide_channel_steering, decide_channel_steering_with, decide_state_steering,
    decide_state_steering_with, decide_temporal_steering, decide_temporal_steering_with,
    steering_equivalent_observables, SteeringOptions, SteeringVerdict,
};
