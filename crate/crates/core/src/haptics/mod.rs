//! Force-feedback control core: sensor filtering, Cartesian impedance,
//! joint-limit repulsion, fade recovery and finger retargeting.

mod fade;
mod filter;
mod hand;
mod impedance;

pub use fade::{fade_target, smoothstep, FadeState, DEFAULT_FADE_DURATION};
pub use filter::{lowpass_alpha, FilterError, LowPassFilter};
pub use hand::{
    retarget_fingers, FingerBrakes, HandError, HandMapping, HandVariant, BRAKE_RELEASE_RATIO, FINGERS,
    OPERATOR_FINGER_JOINTS,
};
pub use impedance::{
    impedance_step, limit_repulsion, weightless_assist, AssistParams, GainsError, ImpedanceCommand, ImpedanceGains,
};
