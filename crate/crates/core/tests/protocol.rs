mod common;

use std::io::{BufReader, BufWriter};
use std::net::{TcpListener, TcpStream};
use std::thread;

use chil_rig::controllers::EchoController;
use chil_rig::protocol::{read_frame, write_frame, ClientSession, FrameKind, ProtocolError, WireFrame};
use chil_rig::sim::ControlFrame;
use chil_rig::testbench::{apply_overrides, run_case, run_case_with_listener, RunOptions, TestCase};
use common::case;

/// A 30 s CVCU run: four controller exchanges at 0, 7.5, 15 and 22.5 s.
fn short_cvcu(timeout_s: f64) -> TestCase {
    case(&format!(
        r#"{{"schema": "chil-rig/v1", "name": "short", "scenario": "cvcu", "duration": 30,
            "events": [], "protocol": {{"meas_delays": [0], "timeout_s": {timeout_s}}}}}"#
    ))
}

fn external(mut c: TestCase) -> (TestCase, TcpListener, String) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let endpoint = format!("tcp:{}", listener.local_addr().unwrap());
    apply_overrides(&mut c, Some(&endpoint), None, None).unwrap();
    (c, listener, endpoint)
}

/// Connect and handshake by hand, returning raw frame streams.
fn raw_client(endpoint: &str) -> (BufReader<TcpStream>, BufWriter<TcpStream>) {
    let stream = TcpStream::connect(endpoint.trim_start_matches("tcp:")).unwrap();
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut writer = BufWriter::new(stream);
    write_frame(&mut writer, &WireFrame::hello(1)).unwrap();
    assert_eq!(read_frame(&mut reader).unwrap().unwrap().kind, FrameKind::Hello);
    (reader, writer)
}

#[test]
fn absent_server_is_connection_refused() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let err = ClientSession::connect_and_handshake(&format!("tcp:127.0.0.1:{port}"))
        .err()
        .unwrap();
    assert!(matches!(err, ProtocolError::ConnectionRefused(_)));
}

#[test]
fn version_mismatch_is_reported_on_both_sides() {
    let (c, listener, endpoint) = external(short_cvcu(1.0));
    let client = thread::spawn(move || ClientSession::connect_with_version(&endpoint, 2).err());
    let out = run_case_with_listener(&c, RunOptions::default(), Some(&listener)).unwrap();
    assert!(out.report.error.as_deref().unwrap().contains("version"));
    assert_eq!(out.report.exit_code(), 2);
    assert!(matches!(
        client.join().unwrap(),
        Some(ProtocolError::VersionMismatch { .. })
    ));
}

#[test]
fn echo_over_loopback_matches_in_process_echo() {
    let mut direct = short_cvcu(5.0);
    direct.controller = Some(chil_rig::testbench::ControllerBinding::InProcess("echo".into()));
    let reference = run_case(&direct, RunOptions::default()).unwrap();
    let (c, listener, endpoint) = external(direct);
    let client = thread::spawn(move || {
        let mut s = ClientSession::connect_and_handshake(&endpoint).unwrap();
        s.serve_controller(&mut EchoController).unwrap()
    });
    let routed = run_case_with_listener(&c, RunOptions::default(), Some(&listener)).unwrap();
    let served = client.join().unwrap();
    assert_eq!(served.frames, 4);
    assert_eq!(routed.traces[0].1.to_csv(), reference.traces[0].1.to_csv());
}

#[test]
fn stale_reply_is_a_protocol_violation() {
    let (c, listener, endpoint) = external(short_cvcu(5.0));
    let client = thread::spawn(move || {
        let (mut r, mut w) = raw_client(&endpoint);
        let first = read_frame(&mut r).unwrap().unwrap();
        write_frame(&mut w, &WireFrame::ctrl(&ControlFrame::new(first.tick), first.t)).unwrap();
        let second = read_frame(&mut r).unwrap().unwrap();
        // answer with the previous tick
        write_frame(&mut w, &WireFrame::ctrl(&ControlFrame::new(first.tick), second.t)).unwrap();
    });
    let out = run_case_with_listener(&c, RunOptions::default(), Some(&listener)).unwrap();
    client.join().unwrap();
    assert!(out.report.error.as_deref().unwrap().contains("protocol violation"));
    assert_eq!(out.report.exit_code(), 2);
}

#[test]
fn silent_controller_is_held_and_the_run_completes() {
    let (c, listener, endpoint) = external(short_cvcu(0.05));
    let client = thread::spawn(move || {
        let (mut r, mut w) = raw_client(&endpoint);
        let first = read_frame(&mut r).unwrap().unwrap();
        let reply = ControlFrame::new(first.tick).with("q_set_dg3_pu", 0.1);
        write_frame(&mut w, &WireFrame::ctrl(&reply, first.t)).unwrap();
        // stay connected but never answer again
        while let Ok(Some(f)) = read_frame(&mut r) {
            if f.kind == FrameKind::Bye {
                break;
            }
        }
    });
    let out = run_case_with_listener(&c, RunOptions::default(), Some(&listener)).unwrap();
    client.join().unwrap();
    assert!(out.report.error.is_none());
    let run = &out.report.runs[0];
    assert_eq!(run.held_replies, 3);
    assert!(!run.controller_disconnected);
    let q = out.traces[0].1.column("Q_dg3_pu").unwrap();
    assert_eq!(*q.last().unwrap(), 0.1);
}

#[test]
fn killed_controller_is_flagged() {
    let (c, listener, endpoint) = external(short_cvcu(1.0));
    let client = thread::spawn(move || {
        let (mut r, mut w) = raw_client(&endpoint);
        let first = read_frame(&mut r).unwrap().unwrap();
        write_frame(&mut w, &WireFrame::ctrl(&ControlFrame::new(first.tick), first.t)).unwrap();
        // dropping both halves closes the connection mid-run
    });
    let out = run_case_with_listener(&c, RunOptions::default(), Some(&listener)).unwrap();
    client.join().unwrap();
    assert!(out.report.error.is_none());
    let run = &out.report.runs[0];
    assert!(run.controller_disconnected);
    assert!(run.notes.iter().any(|n| n.contains("disconnected")));
}
