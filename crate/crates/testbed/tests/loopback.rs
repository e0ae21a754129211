use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex, MutexGuard};
use std::thread;
use std::time::Duration;

use restbuf_core::sim::{make_loss_vector, LossVector};
use restbuf_core::{ModelParams, Timing};
use restbuf_testbed::client::median;
use restbuf_testbed::experiment::model_reference;
use restbuf_testbed::{
    check_invariants, client_run, measure_drain_time, run_experiment, serve, ClientConfig,
    FaultSchedule, FrameBuilder, InjectionSide, ServerConfig, TestbedConfig, TestbedError,
};

// The timing tests share one clock-sensitive budget; run them one at a time.
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn params(p: f64, k: u32, t: f64, m: u32) -> ModelParams {
    ModelParams::from_timing(p, k, Timing::new(t, t * m as f64).unwrap()).unwrap()
}

fn server_with(vector: LossVector, timeout: Duration) -> restbuf_testbed::ServerHandle {
    serve(
        "127.0.0.1:0",
        ServerConfig {
            schedule: Some(Arc::new(FaultSchedule::for_timeout(vector, timeout))),
            ..ServerConfig::default()
        },
    )
    .unwrap()
}

fn exchange(raw: &[u8]) -> String {
    let server = serve("127.0.0.1:0", ServerConfig::default()).unwrap();
    let mut s = TcpStream::connect(server.local_addr()).unwrap();
    s.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    s.write_all(raw).unwrap();
    let mut out = String::new();
    let _ = s.read_to_string(&mut out);
    server.shutdown();
    out
}

#[test]
fn lossless_run_holds_one_message_and_blocks_nothing() {
    let _serial = serial();
    let server = server_with(
        LossVector::new(vec![false]).unwrap(),
        Duration::from_millis(100),
    );
    let config = ClientConfig::new(params(0.0, 1, 0.02, 5), 50);
    let report = client_run(server.local_addr(), &config).unwrap();
    let log = server.shutdown();

    assert_eq!(report.s_hat, 1.0);
    assert_eq!(report.b_hat, 0.0);
    assert_eq!(report.timeouts, 0);
    assert!(report.blocked_ids.is_empty());
    assert!(report
        .observations
        .iter()
        .all(|o| o.state == 1 && o.successes == 1));
    let inv = check_invariants(&report, &log);
    assert!(inv.all_hold(), "{:?}", inv.violations);
    assert_eq!(log.frame_mismatches(), 0);
}

#[test]
fn every_request_lost_fills_and_blocks() {
    let _serial = serial();
    let timeout = Duration::from_millis(20);
    let server = server_with(LossVector::new(vec![true]).unwrap(), timeout);
    let config = ClientConfig::new(params(1.0, 1, 0.004, 5), 12);
    let report = client_run(server.local_addr(), &config).unwrap();
    let log = server.shutdown();

    let states: Vec<usize> = report.observations.iter().map(|o| o.state).collect();
    // first arrival, then the buffer tops out at M = 6 and stays there
    assert_eq!(states[0], 1);
    assert!(states[1..].iter().all(|&s| s == 6), "{states:?}");
    let blocked: Vec<usize> = report.observations.iter().map(|o| o.blocked).collect();
    assert!(
        blocked[1..].iter().all(|&b| b == 5),
        "{blocked:?} {:#?}",
        &report.observations[..3]
    );
    assert!(report.acked_ids.is_empty());
    assert_eq!(report.max_buffer_len, 6);
    assert!(check_invariants(&report, &log).all_hold());
}

#[test]
fn fault_bit_forces_retransmission_of_the_same_head() {
    let _serial = serial();
    let timeout = Duration::from_millis(30);
    let vector = LossVector::parse("1 0 0 1 1 0").unwrap();
    let server = server_with(vector, timeout);
    let config = ClientConfig::new(params(0.5, 2, 0.006, 5), 40);
    let report = client_run(server.local_addr(), &config).unwrap();
    // let held-back responses finish
    thread::sleep(timeout.mul_f64(1.5));
    let log = server.shutdown();

    assert!(report.timeouts > 0);
    assert_eq!(log.faulted() as u64, report.timeouts);
    let inv = check_invariants(&report, &log);
    assert!(inv.all_hold(), "{:?}", inv.violations);
    // ids sent to the server are non-decreasing: a retry repeats the head
    let sent: Vec<u64> = log.events.iter().filter_map(|e| e.id).collect();
    assert!(sent.windows(2).all(|w| w[0] <= w[1]));
    assert!(log.late_responses > 0);
}

#[test]
fn malformed_requests_get_400() {
    assert!(exchange(b"GARBAGE\r\n\r\n").starts_with("HTTP/1.1 400"));
    let wrong_path = b"POST /other HTTP/1.1\r\nHeader: 3\r\nContent-Length: 0\r\n\r\n";
    assert!(exchange(wrong_path).starts_with("HTTP/1.1 400"));
    let no_id = b"POST /api/sensors HTTP/1.1\r\nContent-Length: 2\r\n\r\n{}";
    assert!(exchange(no_id).starts_with("HTTP/1.1 400"));
}

#[test]
fn off_size_frame_is_answered_and_flagged() {
    let server = serve("127.0.0.1:0", ServerConfig::default()).unwrap();
    let (_, wire) = FrameBuilder::new(server.local_addr().to_string(), 180)
        .build(7)
        .unwrap();
    let mut s = TcpStream::connect(server.local_addr()).unwrap();
    s.write_all(&wire).unwrap();
    let mut out = String::new();
    s.read_to_string(&mut out).unwrap();
    let log = server.shutdown();
    assert!(out.starts_with("HTTP/1.1 200"));
    assert!(out.ends_with(r#"{"ack":7}"#));
    assert_eq!(log.frame_mismatches(), 1);
    assert_eq!(log.acked_ids(), vec![7]);
}

#[test]
fn unreachable_server_is_fatal() {
    let addr = TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap();
    let err = client_run(addr, &ClientConfig::new(params(0.1, 1, 0.01, 5), 5)).unwrap_err();
    assert!(matches!(err, TestbedError::Unreachable { .. }));
}

#[test]
fn client_side_injection_and_keep_alive_keep_invariants() {
    let _serial = serial();
    let timeout = Duration::from_millis(25);
    let server = serve("127.0.0.1:0", ServerConfig::default()).unwrap();
    let mut config = ClientConfig::new(params(0.3, 2, 0.005, 5), 60);
    config.injection = InjectionSide::Client;
    config.keep_alive = true;
    config.client_schedule = Some(FaultSchedule::for_timeout(
        make_loss_vector(0.3, 200, 5).unwrap(),
        timeout,
    ));
    let report = client_run(server.local_addr(), &config).unwrap();
    let log = server.shutdown();
    assert!(report.timeouts > 0);
    assert_eq!(log.faulted(), 0);
    let inv = check_invariants(&report, &log);
    assert!(inv.all_hold(), "{:?}", inv.violations);
}

#[test]
fn drain_time_grows_with_queue_length_and_stays_below_t() {
    let _serial = serial();
    let server = serve("127.0.0.1:0", ServerConfig::default()).unwrap();
    let medians: Vec<Duration> = [1, 3, 5, 8, 10]
        .iter()
        .map(|&n| median(&measure_drain_time(server.local_addr(), n, 5, 199).unwrap()).unwrap())
        .collect();
    server.shutdown();
    assert!(medians.windows(2).all(|w| w[0] <= w[1]), "{medians:?}");
    // scaled arrival interval at ×10
    assert!(medians[4] < Duration::from_millis(300), "{medians:?}");
}

#[test]
fn experiment_from_json_config() {
    let _serial = serial();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(
        &path,
        r#"{"p":0.25,"m":5,"k":1,"t_scaled":0.01,"T_o_scaled":0.05,"seed":9,"observations":80,"warmup":5}"#,
    )
    .unwrap();
    let outcome = run_experiment(&TestbedConfig::load(&path).unwrap()).unwrap();
    assert_eq!(outcome.report.n_used, 75);
    assert!(
        outcome.invariants.all_hold(),
        "{:?}",
        outcome.invariants.violations
    );
    assert_eq!(outcome.drain_samples.len(), 5);
    assert!((outcome.p - 0.25).abs() < 1e-12);
}

/// Fast-scaled stand-in for the long run: t = 10 ms, T_o = 50 ms.
#[test]
fn testbed_agrees_with_timed_model() {
    let _serial = serial();
    let handles: Vec<_> = [1u32, 2]
        .into_iter()
        .map(|k| {
            thread::spawn(move || {
                let timeout = Duration::from_millis(50);
                let vector = make_loss_vector(0.2, 100_000, 40 + k as u64).unwrap();
                let server = server_with(vector, timeout);
                let mut config = ClientConfig::new(params(0.2, k, 0.01, 5), 1_000);
                config.warmup_observations = 50;
                let report = client_run(server.local_addr(), &config).unwrap();
                let log = server.shutdown();
                (k, report, log)
            })
        })
        .collect();
    for h in handles {
        let (k, report, log) = h.join().unwrap();
        let inv = check_invariants(&report, &log);
        assert!(inv.all_hold(), "k={k}: {:?}", inv.violations);
        let sim = model_reference(params(0.2, k, 0.01, 5), 200_000, 1_000, 7).unwrap();
        assert!(
            report.size().overlaps(&sim.size()),
            "k={k} S testbed {:?} sim {:?}",
            report.size(),
            sim.size()
        );
        assert!(
            report.blocked().overlaps(&sim.blocked()),
            "k={k} B testbed {:?} sim {:?}",
            report.blocked(),
            sim.blocked()
        );
    }
}
