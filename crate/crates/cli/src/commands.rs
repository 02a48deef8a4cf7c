use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{debug, info};
use telelink::config::{load_config, ConfigError};
use telelink::geometry::{Pose6D, Twist, Vec3, Wrench};
use telelink::kinematics::JointState;
use telelink::netlink::{decode, encode, frame_len, ErrorCode, Message, Side, HEADER_LEN};
use telelink::session::{
    latency_budget, run_session, stability_sweep, OperatorTrace, SessionConfig, SessionError, TraceError, TraceKind,
};
use telelink::televis::angular_error_map;
use telelink::Execution;

use crate::{CodecArgs, Command, GenTraceArgs, RunArgs, SessionInputs, SweepArgs, TelevisMapArgs, ValidateArgs};

pub const SWEEP_MAGIC: &str = "# telelink-sweep v1";
pub const MAP_MAGIC: &str = "# telelink-televis-map v1";

/// Failure of a subcommand, grouped by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments: exit 2.
    Config(String),
    /// Unreadable or malformed trace: exit 3.
    Trace(String),
    /// Anything that fails after inputs were accepted: exit 1.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Trace(_) => 3,
            Self::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) | Self::Trace(m) | Self::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<SessionError> for CliError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Config(_) | SessionError::InvalidDelays(_) => Self::Config(e.to_string()),
            SessionError::Trace(_) => Self::Trace(e.to_string()),
            SessionError::Runtime(_) => Self::Runtime(e.to_string()),
        }
    }
}

fn write_err(path: &Path, e: io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

pub fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Codec(a) => cmd_codec(a),
        Command::TelevisMap(a) => cmd_televis_map(a),
        Command::ValidateConfig(a) => cmd_validate(a),
        Command::GenTrace(a) => cmd_gen_trace(a),
    }
}

fn load_trace(path: &Path) -> Result<OperatorTrace, CliError> {
    let f = File::open(path).map_err(|e| CliError::Trace(format!("{}: {e}", path.display())))?;
    OperatorTrace::read(BufReader::new(f)).map_err(|e| match e {
        TraceError::Schema { line, message } => CliError::Trace(format!("{}:{line}: {message}", path.display())),
        other => CliError::Trace(format!("{}: {other}", path.display())),
    })
}

/// Config with command-line overrides applied, plus the trace it names.
fn load_inputs(inputs: &SessionInputs) -> Result<(SessionConfig, OperatorTrace), CliError> {
    let mut cfg = load_config(&inputs.config)?;
    if let Some(seed) = inputs.seed {
        cfg.params.seed = seed;
        cfg.channel.rng_seed = seed;
    }
    if let Some(d) = inputs.duration {
        cfg.params.duration = d;
    }
    cfg.validate()
        .map_err(|e| CliError::Config(format!("{}: {e}", inputs.config.display())))?;
    let trace_path: PathBuf = inputs
        .trace
        .clone()
        .or_else(|| cfg.params.trace_path.clone())
        .ok_or_else(|| CliError::Trace("no trace given (use --trace or session.trace)".into()))?;
    let trace = load_trace(&trace_path)?;
    info!(
        "config {} seed {} duration {} s, trace {} ({} samples)",
        inputs.config.display(),
        cfg.params.seed,
        cfg.params.duration,
        trace_path.display(),
        trace.samples().len()
    );
    Ok((cfg, trace))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| write_err(path, e))
}

fn cmd_run(a: RunArgs) -> Result<(), CliError> {
    let (cfg, trace) = load_inputs(&a.inputs)?;
    let log = run_session(cfg, trace)?;
    let mut w = create(&a.out)?;
    log.write_csv(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| write_err(&a.out, e))?;
    debug!("uplink {:?}, downlink {:?}", log.uplink, log.downlink);
    if let Some(t) = log.aborted_at {
        return Err(CliError::Runtime(format!(
            "energy diverged at t={t:.3} s; partial log in {}",
            a.out.display()
        )));
    }
    let settle = log.final_pose_error().unwrap_or(f64::NAN);
    println!("ticks            {}", log.records.len());
    println!("settle error     {:.3e} m", settle);
    match latency_budget(&log) {
        Ok(b) => println!(
            "latency budget   {:.1} ms (exposure {:.1}, encode {:.1}, transmit {:.1}, decode {:.1}; {} frames)",
            b.total() * 1e3,
            b.exposure * 1e3,
            b.encode * 1e3,
            b.transmit * 1e3,
            b.decode * 1e3,
            b.frames
        ),
        Err(e) => println!("latency budget   n/a ({e})"),
    }
    println!("peak bandwidth   {:.1} Mbit/s", log.peak_bandwidth() / 1e6);
    println!(
        "modes            {}",
        log.modes_visited()
            .iter()
            .map(|m| m.as_str())
            .collect::<Vec<_>>()
            .join(" -> ")
    );
    Ok(())
}

/// Parses `start:stop:step` (inclusive) or a single delay.
pub fn parse_delays(arg: &str) -> Result<Vec<f64>, String> {
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a number"));
    let parts: Vec<&str> = arg.split(':').collect();
    let delays = match parts.as_slice() {
        [single] => vec![num(single)?],
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(step > 0.0 && step.is_finite() && start.is_finite() && stop.is_finite()) {
                return Err("step must be positive and bounds finite".into());
            }
            if stop < start {
                return Err(format!("empty range {arg}"));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            (0..=n).map(|i| start + i as f64 * step).collect()
        }
        _ => return Err(format!("expected start:stop:step or a single delay, got `{arg}`")),
    };
    if delays.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
        return Err("delays must be finite and non-negative".into());
    }
    Ok(delays)
}

fn cmd_sweep(a: SweepArgs) -> Result<(), CliError> {
    let delays = parse_delays(&a.delays).map_err(|m| CliError::Config(format!("--delays: {m}")))?;
    let (cfg, trace) = load_inputs(&a.inputs)?;
    let exec = if a.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let result = stability_sweep(&cfg, &trace, &delays, exec)?;
    let mut w = create(&a.out)?;
    let write = |w: &mut BufWriter<File>| -> io::Result<()> {
        writeln!(w, "{SWEEP_MAGIC}")?;
        writeln!(w, "# seed={}", cfg.params.seed)?;
        writeln!(w, "delay,diverged,max_energy")?;
        for p in &result.points {
            writeln!(w, "{},{},{}", p.delay, p.diverged, p.max_energy)?;
        }
        w.flush()
    };
    write(&mut w).map_err(|e| write_err(&a.out, e))?;
    println!("reference peak energy  {:.4e} J", result.reference_peak);
    match result.threshold() {
        Some((lo, hi)) => println!("threshold              ({:.3}, {:.3}] s", lo, hi),
        None if result.points.iter().any(|p| p.diverged) => println!("threshold              not bracketed"),
        None => println!(
            "threshold              none up to {:.3} s",
            result.points.last().map_or(0.0, |p| p.delay)
        ),
    }
    println!("transitions            {}", result.transitions());
    Ok(())
}

fn sample_message(kind: &str) -> Option<Message> {
    let pose = Pose6D::new(Vec3::new(0.5, -0.2, 0.3), Pose6D::rot_z(0.4).rotation);
    Some(match kind {
        "eef" => Message::EefPoseCmd {
            side: Side::Left,
            pose,
            twist: Twist {
                linear: Vec3::new(0.1, 0.0, 0.0),
                angular: Vec3::zeros(),
            },
        },
        "hand" => Message::HandJointCmd {
            side: Side::Right,
            joints: (0..9).map(|i| i as f64 * 0.1).collect(),
        },
        "head" => Message::HeadPoseCmd { pose },
        "base" => Message::BaseVelocityCmd {
            twist: Twist {
                linear: Vec3::new(0.5, 0.1, 0.0),
                angular: Vec3::new(0.0, 0.0, 0.2),
            },
        },
        "wrench" => Message::WrenchFeedback {
            side: Side::Left,
            wrench: Wrench {
                force: Vec3::new(1.0, -2.0, 0.5),
                torque: Vec3::new(0.0, 0.1, 0.0),
            },
        },
        "currents" => Message::HandCurrentFeedback {
            side: Side::Right,
            currents: [0.1, 0.2, 0.3, 0.4, 0.5],
        },
        "arm" => Message::ArmStateFeedback {
            side: Side::Left,
            state: JointState::new(vec![0.0, 1.1, 0.0, -2.2, 0.0, 1.1, 0.0], vec![0.0; 7]),
        },
        "video" => Message::VideoFrame {
            stream: 0,
            capture_ts_ns: 1_000_000,
            payload: (0..64u8).collect(),
        },
        "face" => Message::FaceKeypoints {
            payload: vec![1, 2, 3, 4],
        },
        "error" => Message::ErrorState {
            side: Side::Left,
            code: ErrorCode::COMM_LOSS,
        },
        _ => return None,
    })
}

fn describe(m: &Message) -> String {
    match m {
        Message::VideoFrame {
            stream,
            capture_ts_ns,
            payload,
        } => format!(
            "VideoFrame {{ stream: {stream}, capture_ts_ns: {capture_ts_ns}, payload: {} bytes }}",
            payload.len()
        ),
        Message::FaceKeypoints { payload } => format!("FaceKeypoints {{ payload: {} bytes }}", payload.len()),
        other => format!("{other:?}"),
    }
}

/// Splits a buffer of back-to-back frames and decodes each one.
fn decode_stream(bytes: &[u8]) -> Result<(), CliError> {
    let mut offset = 0;
    let mut count = 0;
    while offset < bytes.len() {
        let rest = &bytes[offset..];
        let len = frame_len(rest).ok_or_else(|| {
            CliError::Runtime(format!(
                "offset {offset}: truncated header ({} < {HEADER_LEN} bytes)",
                rest.len()
            ))
        })?;
        let frame = &rest[..len.min(rest.len())];
        let d = decode(frame).map_err(|e| CliError::Runtime(format!("offset {offset}: {e}")))?;
        println!(
            "{offset}\tseq={}\tts_ns={}\t{}",
            d.seq,
            d.timestamp_ns,
            describe(&d.message)
        );
        offset += len;
        count += 1;
    }
    info!("{count} frames decoded");
    Ok(())
}

fn cmd_codec(a: CodecArgs) -> Result<(), CliError> {
    if let Some(kind) = &a.source.sample {
        let m =
            sample_message(kind).ok_or_else(|| CliError::Config(format!("--sample: unknown message kind `{kind}`")))?;
        let bytes = encode(&m, 1, 1_000_000).map_err(|e| CliError::Runtime(e.to_string()))?;
        return match &a.out {
            Some(path) => fs::write(path, &bytes).map_err(|e| write_err(path, e)),
            None => {
                println!("{}", hex::encode(&bytes));
                Ok(())
            }
        };
    }
    if a.out.is_some() {
        return Err(CliError::Config("--out only applies with --sample".into()));
    }
    let bytes = match (&a.source.input, &a.source.hex) {
        (Some(path), _) => fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        (None, Some(h)) => {
            let digits: String = h.chars().filter(|c| !c.is_whitespace()).collect();
            hex::decode(digits).map_err(|e| CliError::Config(format!("--hex: {e}")))?
        }
        (None, None) => unreachable!("clap enforces one source"),
    };
    if bytes.is_empty() {
        return Err(CliError::Runtime("no frames in input".into()));
    }
    decode_stream(&bytes)
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("`{p}` is not a number")))
        .collect::<Result<_, _>>()?;
    match v.as_slice() {
        [x, y, z] if v.iter().all(|c| c.is_finite()) => Ok(Vec3::new(*x, *y, *z)),
        _ => Err(format!("expected three finite values x,y,z, got `{s}`")),
    }
}

fn cmd_televis_map(a: TelevisMapArgs) -> Result<(), CliError> {
    let cfg = match &a.config {
        Some(p) => load_config(p)?,
        None => SessionConfig::default(),
    };
    let eye = parse_vec3(&a.eye).map_err(|m| CliError::Config(format!("--eye: {m}")))?;
    let depth = a.depth.unwrap_or(cfg.params.scene_depth);
    if !(depth > 0.0 && depth.is_finite()) {
        return Err(CliError::Config(format!("--depth: must be positive, got {depth}")));
    }
    if a.cols == 0 || a.rows == 0 {
        return Err(CliError::Config("--cols and --rows must be positive".into()));
    }
    let cam = &cfg.camera;
    let eye_pose = cam.capture_pose.compose(&Pose6D::from_translation(eye.x, eye.y, eye.z));
    let map = angular_error_map(cam, &eye_pose, depth, a.cols, a.rows, Execution::Parallel);
    let mut w = create(&a.out)?;
    let write = |w: &mut BufWriter<File>| -> io::Result<()> {
        writeln!(w, "{MAP_MAGIC}")?;
        writeln!(
            w,
            "# eye={},{},{} depth={depth} radius={}",
            eye.x, eye.y, eye.z, cam.radius
        )?;
        writeln!(w, "u,v,error_rad")?;
        for s in &map {
            writeln!(w, "{},{},{}", s.u, s.v, s.error)?;
        }
        w.flush()
    };
    write(&mut w).map_err(|e| write_err(&a.out, e))?;
    let max = map
        .iter()
        .map(|s| s.error)
        .filter(|e| e.is_finite())
        .fold(0.0, f64::max);
    println!("{} samples, max error {:.4} deg", map.len(), max.to_degrees());
    Ok(())
}

fn cmd_validate(a: ValidateArgs) -> Result<(), CliError> {
    let cfg = load_config(&a.config)?;
    println!(
        "{}: ok ({} Hz control, {} Hz feedback, seed {})",
        a.config.display(),
        cfg.params.operator_rate,
        cfg.params.sensor_rate,
        cfg.params.seed
    );
    Ok(())
}

fn cmd_gen_trace(a: GenTraceArgs) -> Result<(), CliError> {
    let kind: TraceKind = a
        .kind
        .parse()
        .map_err(|m: String| CliError::Config(format!("--kind: {m}")))?;
    if !(a.duration > 0.0 && a.duration.is_finite()) {
        return Err(CliError::Config(format!(
            "--duration: must be positive, got {}",
            a.duration
        )));
    }
    if !(a.period > 0.0 && a.period.is_finite()) {
        return Err(CliError::Config(format!(
            "--period: must be positive, got {}",
            a.period
        )));
    }
    let trace = OperatorTrace::generate(kind, a.duration, a.period).map_err(|e| CliError::Config(e.to_string()))?;
    let mut w = create(&a.out)?;
    trace
        .write(&mut w)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", a.out.display())))?;
    w.flush().map_err(|e| write_err(&a.out, e))?;
    println!("{}: {} samples", a.out.display(), trace.samples().len());
    Ok(())
}
