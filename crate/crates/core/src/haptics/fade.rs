use crate::geometry::Pose6D;

/// Progress of a smooth transition from a held pose to a live target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadeState {
    pub start_pose: Pose6D,
    pub progress: f64,
    pub duration: f64,
}

pub const DEFAULT_FADE_DURATION: f64 = 1.0;

impl FadeState {
    /// Panics if `duration` is not positive.
    pub fn new(start_pose: Pose6D, duration: f64) -> Self {
        assert!(duration > 0.0, "fade duration must be positive");
        Self {
            start_pose,
            progress: 0.0,
            duration,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.progress >= 1.0
    }
}

pub fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

/// Advances the fade by `dt` and returns the blended target.
///
/// Translation follows `3u² − 2u³`; rotation is slerped with the same weight.
/// Once progress reaches one the final target is returned unchanged.
pub fn fade_target(fade: &FadeState, final_target: &Pose6D, dt: f64) -> (Pose6D, FadeState) {
    let mut next = *fade;
    next.progress = (fade.progress + dt.max(0.0) / fade.duration).min(1.0);
    if next.progress >= 1.0 {
        return (*final_target, next);
    }
    if next.progress <= 0.0 {
        return (fade.start_pose, next);
    }
    let s = smoothstep(next.progress);
    let start = &fade.start_pose;
    let translation = start.translation + (final_target.translation - start.translation) * s;
    let rotation = start
        .rotation
        .try_slerp(&final_target.rotation, s, 1e-12)
        .unwrap_or(final_target.rotation);
    (Pose6D::new(translation, rotation), next)
}
