use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Operator glove joints: four per finger, thumb first.
pub const OPERATOR_FINGER_JOINTS: usize = 20;
pub const FINGERS: usize = 5;

/// Release threshold as a fraction of the engage threshold.
pub const BRAKE_RELEASE_RATIO: f64 = 0.9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HandError {
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid hand mapping: {0}")]
    InvalidMapping(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HandVariant {
    /// Nine actuated joints.
    Svh,
    /// Five actuated joints.
    Sih,
}

impl HandVariant {
    pub fn actuated(self) -> usize {
        match self {
            HandVariant::Svh => 9,
            HandVariant::Sih => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HandMapping {
    pub variant: HandVariant,
    /// `actuated × 20` retargeting matrix.
    pub retarget: DMatrix<f64>,
    pub out_min: Vec<f64>,
    pub out_max: Vec<f64>,
    /// Motor-current threshold per finger (A).
    pub brake_threshold: Vec<f64>,
    /// Finger that each actuated joint belongs to.
    pub finger_of_output: Vec<usize>,
}

impl HandMapping {
    pub fn new(
        variant: HandVariant,
        retarget: DMatrix<f64>,
        out_min: Vec<f64>,
        out_max: Vec<f64>,
        brake_threshold: Vec<f64>,
        finger_of_output: Vec<usize>,
    ) -> Result<Self, HandError> {
        let rows = variant.actuated();
        let bad = |m: String| Err(HandError::InvalidMapping(m));
        if retarget.nrows() != rows || retarget.ncols() != OPERATOR_FINGER_JOINTS {
            return bad(format!(
                "retarget matrix must be {rows}x{OPERATOR_FINGER_JOINTS}, got {}x{}",
                retarget.nrows(),
                retarget.ncols()
            ));
        }
        if retarget.iter().any(|v| !v.is_finite()) {
            return bad("retarget matrix has non-finite entries".into());
        }
        if out_min.len() != rows || out_max.len() != rows || finger_of_output.len() != rows {
            return bad(format!("output ranges and finger assignment need {rows} entries"));
        }
        if out_min.iter().zip(&out_max).any(|(lo, hi)| !(lo <= hi)) {
            return bad("out_min must not exceed out_max".into());
        }
        if brake_threshold.len() != FINGERS || brake_threshold.iter().any(|t| !(*t > 0.0)) {
            return bad(format!("brake_threshold needs {FINGERS} positive entries"));
        }
        if finger_of_output.iter().any(|f| *f >= FINGERS) {
            return bad("finger index out of range".into());
        }
        Ok(Self {
            variant,
            retarget,
            out_min,
            out_max,
            brake_threshold,
            finger_of_output,
        })
    }

    /// Synthetic default for the nine-joint hand: per-finger averages of the
    /// flexion joints plus a spread channel.
    pub fn default_svh() -> Self {
        let mut m = DMatrix::zeros(9, OPERATOR_FINGER_JOINTS);
        let avg = |m: &mut DMatrix<f64>, row: usize, cols: &[usize]| {
            for &c in cols {
                m[(row, c)] = 1.0 / cols.len() as f64;
            }
        };
        avg(&mut m, 0, &[1, 2, 3]); // thumb flexion
        avg(&mut m, 1, &[0]); // thumb opposition
        avg(&mut m, 2, &[6, 7]); // index distal
        avg(&mut m, 3, &[5]); // index proximal
        avg(&mut m, 4, &[10, 11]); // middle distal
        avg(&mut m, 5, &[9]); // middle proximal
        avg(&mut m, 6, &[13, 14, 15]); // ring
        avg(&mut m, 7, &[17, 18, 19]); // pinky
        avg(&mut m, 8, &[4, 12, 16]); // spread
        Self::new(
            HandVariant::Svh,
            m,
            vec![0.0; 9],
            vec![0.97, 0.99, 1.33, 0.8, 1.33, 0.8, 0.98, 0.98, 0.58],
            vec![0.8; FINGERS],
            vec![0, 0, 1, 1, 2, 2, 3, 4, 3],
        )
        .expect("default mapping is valid")
    }

    /// Synthetic default for the five-joint hand.
    pub fn default_sih() -> Self {
        let mut m = DMatrix::zeros(5, OPERATOR_FINGER_JOINTS);
        for c in 1..4 {
            m[(0, c)] = 1.0 / 3.0;
        }
        m[(1, 0)] = 1.0;
        for c in 0..4 {
            m[(2, 4 + c)] = 0.25;
            m[(3, 8 + c)] = 0.25;
            m[(4, 12 + c)] = 0.125;
            m[(4, 16 + c)] = 0.125;
        }
        Self::new(
            HandVariant::Sih,
            m,
            vec![0.0; 5],
            vec![1.2, 1.5, 1.5, 1.5, 1.5],
            vec![1.0; FINGERS],
            vec![0, 0, 1, 2, 3],
        )
        .expect("default mapping is valid")
    }
}

/// `clamp(retarget · operator_joints, out_min, out_max)`.
pub fn retarget_fingers(mapping: &HandMapping, operator_joints: &[f64]) -> Result<Vec<f64>, HandError> {
    if operator_joints.len() != OPERATOR_FINGER_JOINTS {
        return Err(HandError::DimensionMismatch {
            expected: OPERATOR_FINGER_JOINTS,
            got: operator_joints.len(),
        });
    }
    let out = &mapping.retarget * DVector::from_column_slice(operator_joints);
    Ok(out
        .iter()
        .zip(mapping.out_min.iter().zip(&mapping.out_max))
        .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
        .collect())
}

/// Per-finger brake state with a release band below the engage threshold.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FingerBrakes {
    engaged: [bool; FINGERS],
}

impl FingerBrakes {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn engaged(&self) -> &[bool; FINGERS] {
        &self.engaged
    }

    pub fn count(&self) -> usize {
        self.engaged.iter().filter(|b| **b).count()
    }

    /// Engages a finger's brake when its current exceeds the threshold and
    /// releases it only once the current drops below 90% of the threshold.
    pub fn update(&mut self, mapping: &HandMapping, currents: &[f64]) -> Result<&[bool; FINGERS], HandError> {
        if currents.len() != FINGERS {
            return Err(HandError::DimensionMismatch {
                expected: FINGERS,
                got: currents.len(),
            });
        }
        for ((b, &i), &t) in self.engaged.iter_mut().zip(currents).zip(&mapping.brake_threshold) {
            if *b {
                *b = i >= BRAKE_RELEASE_RATIO * t;
            } else {
                *b = i > t;
            }
        }
        Ok(&self.engaged)
    }
}
