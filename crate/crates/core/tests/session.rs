use std::path::Path;

use telelink::config::load_config;
use telelink::netlink::{Blackout, ErrorCode, Side};
use telelink::session::{
    latency_budget, run_session, MetricsLog, OperatorTrace, SafetyMode, Session, SessionConfig, TraceKind,
};

fn cfg(duration: f64) -> SessionConfig {
    let mut c = SessionConfig::default();
    c.params.duration = duration;
    c
}

fn trace(kind: TraceKind, duration: f64) -> OperatorTrace {
    OperatorTrace::generate(kind, duration, 0.01).unwrap()
}

fn csv_bytes(log: &MetricsLog) -> Vec<u8> {
    let mut out = Vec::new();
    log.write_csv(&mut out).unwrap();
    out
}

#[test]
fn hold_trace_settles() {
    let log = run_session(cfg(3.0), trace(TraceKind::Hold, 3.0)).unwrap();
    for r in log.records.iter().filter(|r| r.t >= 1.0) {
        assert!(
            r.pose_error_lin[0].max(r.pose_error_lin[1]) < 1e-4,
            "t={} err={:?}",
            r.t,
            r.pose_error_lin
        );
        assert!(r.wrench_force[0].max(r.wrench_force[1]) < 0.1, "t={}", r.t);
        assert_eq!(r.mode, SafetyMode::Running);
    }
}

#[test]
fn tick_count_matches_duration() {
    for (duration, rate) in [(1.0, 1000.0), (0.5, 2000.0), (2.0, 500.0)] {
        let mut c = cfg(duration);
        c.params.operator_rate = rate;
        c.params.sensor_rate = rate / 2.0;
        c.params.arm_state_rate = rate / 10.0;
        let log = run_session(c, trace(TraceKind::Hold, duration)).unwrap();
        let expected = duration * rate;
        assert!(
            (log.records.len() as f64 - expected).abs() <= 1.0,
            "{} vs {expected}",
            log.records.len()
        );
    }
}

#[test]
fn equal_seeds_are_byte_identical() {
    let mut c = cfg(2.0);
    c.channel.base_latency = 0.004;
    c.channel.jitter_std = 0.001;
    c.channel.loss_prob = 0.02;
    let t = trace(TraceKind::Circle, 2.0);
    let a = run_session(c.clone(), t.clone()).unwrap();
    let b = run_session(c.clone(), t.clone()).unwrap();
    assert_eq!(csv_bytes(&a), csv_bytes(&b));
    assert_eq!(a.uplink, b.uplink);
    c.params.seed = 2;
    let d = run_session(c, t).unwrap();
    assert_ne!(a.uplink, d.uplink);
}

#[test]
fn blackout_holds_then_fades_back() {
    let mut c = cfg(4.0);
    c.channel.blackouts = vec![Blackout { start: 1.5, end: 1.7 }];
    let log = run_session(c, trace(TraceKind::Hold, 4.0)).unwrap();
    assert_eq!(
        log.modes_visited(),
        vec![
            SafetyMode::Running,
            SafetyMode::Holding,
            SafetyMode::Fading,
            SafetyMode::Running
        ]
    );
    let holding: Vec<_> = log.records.iter().filter(|r| r.mode == SafetyMode::Holding).collect();
    assert!(!holding.is_empty());
    let first = holding[0];
    for r in &holding {
        assert_eq!(r.target, first.target);
        for i in 0..2 {
            assert!((r.ee[i].translation - first.ee[i].translation).norm() < 1e-6);
        }
    }
    let enter = log.transitions[1].0;
    assert!(enter > 1.5 && enter < 1.5 + 0.01, "hold entered at {enter}");
    let last = log.records.last().unwrap();
    assert!(last.pose_error_lin[0] < 1e-4);
}

#[test]
fn blackout_during_reach_freezes_target() {
    let mut c = cfg(4.0);
    c.channel.blackouts = vec![Blackout { start: 1.0, end: 1.3 }];
    let log = run_session(c, trace(TraceKind::Reach, 4.0)).unwrap();
    let holding: Vec<_> = log.records.iter().filter(|r| r.mode == SafetyMode::Holding).collect();
    assert!(holding.len() > 200);
    assert!(holding.iter().all(|r| r.target == holding[0].target));
    assert_eq!(log.modes_visited().last(), Some(&SafetyMode::Running));
    let e = log.final_pose_error().unwrap();
    assert!(e < 5e-3, "final error {e}");
}

#[test]
fn paused_operator_triggers_hold_and_recovers() {
    let mut s = Session::new(cfg(5.0), trace(TraceKind::Circle, 5.0)).unwrap();
    s.run_until(1.0).unwrap();
    assert_eq!(s.mode(), SafetyMode::Running);
    s.set_operator_paused(true);
    s.run_until(1.5).unwrap();
    assert_eq!(s.mode(), SafetyMode::Holding);
    assert_eq!(s.operator_overlay(), Some(ErrorCode::COMM_LOSS));
    s.set_operator_paused(false);
    s.run_until(1.6).unwrap();
    assert_eq!(s.mode(), SafetyMode::Fading);
    s.run_until(3.0).unwrap();
    assert_eq!(s.mode(), SafetyMode::Running);
}

#[test]
fn estop_zeroes_actuation() {
    let mut c = cfg(3.0);
    c.params.estop_at = Some(1.0);
    let log = run_session(c, trace(TraceKind::Locomote, 3.0)).unwrap();
    let before = log.records.iter().rfind(|r| r.t < 1.0).unwrap();
    assert!(before.wheel_abs_max > 0.0);
    let after: Vec<_> = log.records.iter().filter(|r| r.t >= 1.0).collect();
    assert!(!after.is_empty());
    let base = after[0].base;
    for r in &after {
        assert_eq!(r.mode, SafetyMode::EStopped);
        assert_eq!(r.torque_abs_max, 0.0);
        assert_eq!(r.wheel_abs_max, 0.0);
        assert_eq!(r.base, base);
    }
    assert_eq!(log.modes_visited().last(), Some(&SafetyMode::EStopped));
}

#[test]
fn estop_during_fade_and_reset() {
    let mut s = Session::new(cfg(6.0), trace(TraceKind::Reach, 6.0)).unwrap();
    s.run_until(0.5).unwrap();
    s.set_operator_paused(true);
    s.run_until(1.0).unwrap();
    s.set_operator_paused(false);
    s.run_until(1.2).unwrap();
    assert_eq!(s.mode(), SafetyMode::Fading);
    s.estop();
    let q = s.arm_state(Side::Left).q.clone();
    let base = s.base_pose();
    s.run_until(2.0).unwrap();
    assert_eq!(s.mode(), SafetyMode::EStopped);
    assert_eq!(s.arm_state(Side::Left).q, q);
    assert_eq!(s.base_pose(), base);
    assert_eq!(s.operator_overlay(), Some(ErrorCode::ESTOP));
    s.reset_estop();
    assert_eq!(s.mode(), SafetyMode::Holding);
    s.run_until(4.0).unwrap();
    assert_eq!(s.mode(), SafetyMode::Running);
    let log = s.finish();
    assert!(log
        .records
        .iter()
        .filter(|r| r.mode == SafetyMode::EStopped)
        .all(|r| r.torque_abs_max == 0.0));
}

#[test]
fn budget_tracks_frame_size() {
    let run = |bytes: usize| {
        let mut c = cfg(1.0);
        c.params.frame_bytes = bytes;
        latency_budget(&run_session(c, trace(TraceKind::Hold, 1.0)).unwrap()).unwrap()
    };
    let empty = run(0);
    assert!(empty.transmit < 1e-6);
    assert!((empty.total() - (empty.exposure + empty.encode + empty.decode)).abs() < 1e-6);
    let a = run(100_000);
    let b = run(200_000);
    assert_eq!((a.exposure, a.encode, a.decode), (b.exposure, b.encode, b.decode));
    assert!(b.transmit > a.transmit * 1.5);
}

#[test]
fn bundled_default_config_matches_builtin() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    assert_eq!(load_config(&path).unwrap(), SessionConfig::default());
}

#[test]
fn downlink_bandwidth_near_video_rate() {
    let log = run_session(cfg(2.0), trace(TraceKind::Hold, 2.0)).unwrap();
    let c = SessionConfig::default();
    let video = c.params.video_rate * c.params.video_streams as f64 * c.params.frame_bytes as f64 * 8.0;
    let late = log.records.iter().filter(|r| r.t > 1.5).map(|r| r.bandwidth);
    for bw in late {
        assert!((bw - video).abs() / video < 0.05, "{bw} vs {video}");
    }
}

#[test]
fn sweep_is_scheduling_independent() {
    let c = cfg(1.0);
    let t = trace(TraceKind::Reach, 1.0);
    let delays = [0.0, 0.01, 0.03];
    let seq = telelink::session::stability_sweep(&c, &t, &delays, telelink::Execution::Sequential).unwrap();
    let par = telelink::session::stability_sweep(&c, &t, &delays, telelink::Execution::Parallel).unwrap();
    assert_eq!(seq, par);
    assert!(!seq.points[0].diverged);
}
