use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::{Pose6D, Vec3};
use crate::haptics::{smoothstep, OPERATOR_FINGER_JOINTS};
use crate::locomotion::RudderState;

pub const TRACE_MAGIC: &str = "# telelink-trace v1";
/// Timestamp, two palm poses, two finger vectors, head pose, three rudder axes.
pub const TRACE_COLUMNS: usize = 1 + 7 + 7 + 2 * OPERATOR_FINGER_JOINTS + 7 + 3;
const PERIOD_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("trace is empty")]
    Empty,
    #[error("trace i/o: {0}")]
    Io(#[from] std::io::Error),
}

fn schema(line: usize, message: impl Into<String>) -> TraceError {
    TraceError::Schema {
        line,
        message: message.into(),
    }
}

/// Operator input at one instant. Palm and head poses are offsets from the
/// avatar's home poses: translations add, rotations pre-multiply.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub palms: [Pose6D; 2],
    pub fingers: [[f64; OPERATOR_FINGER_JOINTS]; 2],
    pub head: Pose6D,
    pub rudder: RudderState,
}

impl TraceSample {
    pub fn neutral(t: f64) -> Self {
        Self {
            t,
            palms: [Pose6D::identity(); 2],
            fingers: [[0.0; OPERATOR_FINGER_JOINTS]; 2],
            head: Pose6D::identity(),
            rudder: RudderState::default(),
        }
    }

    fn lerp(a: &Self, b: &Self, s: f64, t: f64) -> Self {
        let pose = |p: &Pose6D, q: &Pose6D| {
            Pose6D::new(p.translation.lerp(&q.translation, s), p.rotation.slerp(&q.rotation, s))
        };
        let mut fingers = a.fingers;
        for (h, f) in fingers.iter_mut().enumerate() {
            for (j, v) in f.iter_mut().enumerate() {
                *v += (b.fingers[h][j] - *v) * s;
            }
        }
        let mix = |x: f64, y: f64| x + (y - x) * s;
        Self {
            t,
            palms: [pose(&a.palms[0], &b.palms[0]), pose(&a.palms[1], &b.palms[1])],
            fingers,
            head: pose(&a.head, &b.head),
            rudder: RudderState {
                pitch: mix(a.rudder.pitch, b.rudder.pitch),
                roll: mix(a.rudder.roll, b.rudder.roll),
                yaw: mix(a.rudder.yaw, b.rudder.yaw),
            },
        }
    }
}

/// Apply a trace offset to a home pose.
pub fn apply_offset(home: &Pose6D, offset: &Pose6D) -> Pose6D {
    Pose6D::new(home.translation + offset.translation, offset.rotation * home.rotation)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Hold,
    Reach,
    Circle,
    Locomote,
}

impl FromStr for TraceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "hold" => Ok(Self::Hold),
            "reach" => Ok(Self::Reach),
            "circle" => Ok(Self::Circle),
            "locomote" => Ok(Self::Locomote),
            other => Err(format!(
                "unknown trace kind `{other}` (expected hold, reach, circle or locomote)"
            )),
        }
    }
}

pub const REACH_DISTANCE: f64 = 0.3;
pub const REACH_TIME: f64 = 2.0;
pub const CIRCLE_RADIUS: f64 = 0.1;
pub const CIRCLE_FREQUENCY: f64 = 0.2;
pub const DEFAULT_SAMPLE_PERIOD: f64 = 0.01;

/// Uniformly sampled operator recording.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorTrace {
    sample_period: f64,
    samples: Vec<TraceSample>,
}

impl OperatorTrace {
    pub fn new(sample_period: f64, samples: Vec<TraceSample>) -> Result<Self, TraceError> {
        if samples.is_empty() {
            return Err(TraceError::Empty);
        }
        if !(sample_period > 0.0 && sample_period.is_finite()) {
            return Err(schema(0, "sample period must be positive"));
        }
        for (i, s) in samples.iter().enumerate() {
            if !s.t.is_finite() {
                return Err(schema(i + 1, "non-finite timestamp"));
            }
            if i > 0 {
                let dt = s.t - samples[i - 1].t;
                if dt <= 0.0 {
                    return Err(schema(i + 1, "timestamps must be strictly increasing"));
                }
                if (dt - sample_period).abs() > PERIOD_TOLERANCE {
                    return Err(schema(
                        i + 1,
                        format!("sample spacing {dt} differs from period {sample_period}"),
                    ));
                }
            }
        }
        Ok(Self { sample_period, samples })
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn samples(&self) -> &[TraceSample] {
        &self.samples
    }

    pub fn start(&self) -> f64 {
        self.samples[0].t
    }

    pub fn end(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    /// Linear interpolation (slerp for rotations); holds the first and last
    /// samples outside the recorded span.
    pub fn sample_at(&self, t: f64) -> TraceSample {
        let first = &self.samples[0];
        let last = &self.samples[self.samples.len() - 1];
        if t <= first.t {
            return TraceSample { t, ..first.clone() };
        }
        if t >= last.t {
            return TraceSample { t, ..last.clone() };
        }
        let k = (((t - first.t) / self.sample_period).floor() as usize).min(self.samples.len() - 2);
        let (a, b) = (&self.samples[k], &self.samples[k + 1]);
        let s = ((t - a.t) / (b.t - a.t)).clamp(0.0, 1.0);
        TraceSample::lerp(a, b, s, t)
    }

    pub fn generate(kind: TraceKind, duration: f64, sample_period: f64) -> Result<Self, TraceError> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(schema(0, "duration must be positive"));
        }
        let n = (duration / sample_period).round() as usize;
        let samples = (0..=n)
            .map(|i| {
                let t = i as f64 * sample_period;
                let mut s = TraceSample::neutral(t);
                match kind {
                    TraceKind::Hold => {}
                    TraceKind::Reach => {
                        let u = smoothstep(t / REACH_TIME);
                        for p in &mut s.palms {
                            *p = Pose6D::from_translation(REACH_DISTANCE * u, 0.0, 0.0);
                        }
                        for f in &mut s.fingers {
                            f.fill(0.9 * u);
                        }
                    }
                    TraceKind::Circle => {
                        let phase = TAU * CIRCLE_FREQUENCY * t;
                        let off = Vec3::new(0.0, CIRCLE_RADIUS * (phase.cos() - 1.0), CIRCLE_RADIUS * phase.sin());
                        for p in &mut s.palms {
                            *p = Pose6D::new(off, nalgebra::UnitQuaternion::identity());
                        }
                        s.head = Pose6D::from_translation(0.0, 0.05 * phase.sin(), 0.0)
                            .compose(&Pose6D::rot_z(0.3 * phase.sin()));
                    }
                    TraceKind::Locomote => {
                        let ramp = smoothstep(t);
                        s.rudder.pitch = 0.3 * ramp;
                        if t >= duration / 2.0 {
                            s.rudder.yaw = 0.2 * smoothstep(t - duration / 2.0);
                        }
                    }
                }
                s
            })
            .collect();
        Self::new(sample_period, samples)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<(), TraceError> {
        writeln!(w, "{TRACE_MAGIC}")?;
        writeln!(w, "# sample_period={}", self.sample_period)?;
        writeln!(w, "{}", column_names().join(","))?;
        let mut line = String::new();
        for s in &self.samples {
            line.clear();
            let _ = write!(line, "{}", s.t);
            let mut push = |v: f64| {
                let _ = write!(line, ",{v}");
            };
            let pose = |p: &Pose6D, push: &mut dyn FnMut(f64)| {
                p.translation.iter().for_each(|v| push(*v));
                p.wxyz().iter().for_each(|v| push(*v));
            };
            pose(&s.palms[0], &mut push);
            pose(&s.palms[1], &mut push);
            s.fingers.iter().flatten().for_each(|v| push(*v));
            pose(&s.head, &mut push);
            push(s.rudder.pitch);
            push(s.rudder.roll);
            push(s.rudder.yaw);
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self, TraceError> {
        let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (n, magic) = lines.next().ok_or(TraceError::Empty)?;
        if magic?.trim_end() != TRACE_MAGIC {
            return Err(schema(n, format!("expected `{TRACE_MAGIC}` header")));
        }
        let (n, period_line) = lines.next().ok_or_else(|| schema(2, "missing sample_period line"))?;
        let period_line = period_line?;
        let period = period_line
            .trim()
            .strip_prefix("# sample_period=")
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| schema(n, "expected `# sample_period=<seconds>`"))?;
        let (n, header) = lines.next().ok_or_else(|| schema(3, "missing column header"))?;
        if header?.trim_end() != column_names().join(",") {
            return Err(schema(n, "column header does not match v1 layout"));
        }
        let mut samples = Vec::new();
        let mut first_line = None;
        for (n, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            first_line.get_or_insert(n);
            let vals = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| schema(n, format!("bad number: {e}")))?;
            if vals.len() != TRACE_COLUMNS {
                return Err(schema(
                    n,
                    format!("expected {TRACE_COLUMNS} fields, got {}", vals.len()),
                ));
            }
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(schema(n, "non-finite value"));
            }
            let pose = |o: usize| {
                Pose6D::from_parts(
                    Vec3::new(vals[o], vals[o + 1], vals[o + 2]),
                    [vals[o + 3], vals[o + 4], vals[o + 5], vals[o + 6]],
                )
                .ok_or_else(|| schema(n, "degenerate quaternion"))
            };
            let mut fingers = [[0.0; OPERATOR_FINGER_JOINTS]; 2];
            fingers[0].copy_from_slice(&vals[15..35]);
            fingers[1].copy_from_slice(&vals[35..55]);
            let sample = TraceSample {
                t: vals[0],
                palms: [pose(1)?, pose(8)?],
                fingers,
                head: pose(55)?,
                rudder: RudderState {
                    pitch: vals[62],
                    roll: vals[63],
                    yaw: vals[64],
                },
            };
            if let Some(prev) = samples.last().map(|s: &TraceSample| s.t) {
                let dt = sample.t - prev;
                if dt <= 0.0 {
                    return Err(schema(n, "timestamps must be strictly increasing"));
                }
                if (dt - period).abs() > PERIOD_TOLERANCE {
                    return Err(schema(n, format!("sample spacing {dt} differs from period {period}")));
                }
            }
            samples.push(sample);
        }
        Self::new(period, samples)
    }
}

pub fn column_names() -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    let pose = |cols: &mut Vec<String>, p: &str| {
        for c in ["px", "py", "pz", "qw", "qx", "qy", "qz"] {
            cols.push(format!("{p}_{c}"));
        }
    };
    pose(&mut cols, "left");
    pose(&mut cols, "right");
    for side in ["left", "right"] {
        for j in 0..OPERATOR_FINGER_JOINTS {
            cols.push(format!("{side}_f{j}"));
        }
    }
    pose(&mut cols, "head");
    cols.extend(["pitch", "roll", "yaw"].map(String::from));
    cols
}
