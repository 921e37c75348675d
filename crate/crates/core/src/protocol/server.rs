use std::collections::BTreeSet;
use std::io::{BufReader, BufWriter};
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::wire::{read_frame, write_frame, FrameKind, Value, WireFrame};
use super::{ProtocolError, PROTOCOL_VERSION};
use crate::sim::{ControlFrame, Controller, ControllerSummary, Reply, SignalFrame, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeoutAction {
    /// Keep the last valid control frame and continue the run.
    HoldLastValue,
    /// Stop the run with `ControllerTimeout`.
    AbortRun,
}

/// What to do when the controller does not answer in time. The timeout is
/// measured in wall-clock seconds while the engine waits in lockstep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeoutPolicy {
    pub timeout_s: f64,
    pub action: TimeoutAction,
}

impl Default for TimeoutPolicy {
    fn default() -> Self {
        Self {
            timeout_s: 5.0,
            action: TimeoutAction::HoldLastValue,
        }
    }
}

/// Accepts `tcp:HOST:PORT` or `HOST:PORT`.
pub fn parse_endpoint(endpoint: &str) -> Result<String, ProtocolError> {
    let addr = endpoint.strip_prefix("tcp:").unwrap_or(endpoint);
    match addr.rsplit_once(':') {
        Some((host, port)) if !host.is_empty() && port.parse::<u16>().is_ok() => Ok(addr.to_string()),
        _ => Err(ProtocolError::InvalidEndpoint(endpoint.to_string())),
    }
}

/// Wait up to `wait` for one controller to connect.
pub fn accept_controller(listener: &TcpListener, wait: Duration) -> Result<TcpStream, ProtocolError> {
    listener.set_nonblocking(true)?;
    let deadline = Instant::now() + wait;
    let result = loop {
        match listener.accept() {
            Ok((stream, _)) => break Ok(stream),
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                if Instant::now() >= deadline {
                    break Err(ProtocolError::Disconnected);
                }
                thread::sleep(Duration::from_millis(5));
            }
            Err(e) => break Err(e.into()),
        }
    };
    listener.set_nonblocking(false)?;
    let stream = result?;
    stream.set_nonblocking(false)?;
    stream.set_nodelay(true)?;
    Ok(stream)
}

/// Rig-side endpoint: a [`Controller`] whose logic runs in another process
/// and is reached over the lockstep protocol.
///
/// A background thread decodes incoming frames so the lockstep wait can be
/// bounded by the timeout policy without tearing partial frames.
pub struct RemoteController {
    name: String,
    writer: BufWriter<TcpStream>,
    incoming: Receiver<Result<WireFrame, ProtocolError>>,
    policy: TimeoutPolicy,
    controls: BTreeSet<String>,
    last: Option<ControlFrame>,
    timed_out: BTreeSet<u64>,
    held: u64,
    disconnected: bool,
    last_t: f64,
    last_tick: u64,
}

impl RemoteController {
    /// Perform the server half of the handshake on an accepted stream:
    /// read the controller's hello, check the version, answer with the
    /// declared signal and control names.
    pub fn handshake(
        name: impl Into<String>,
        stream: TcpStream,
        signals: Vec<String>,
        controls: Vec<String>,
        policy: TimeoutPolicy,
    ) -> Result<Self, ProtocolError> {
        let mut reader = BufReader::new(stream.try_clone()?);
        let mut writer = BufWriter::new(stream);
        let hello = read_frame(&mut reader)?.ok_or(ProtocolError::Disconnected)?;
        if hello.kind != FrameKind::Hello {
            let msg = format!("expected hello, got {}", hello.kind.as_str());
            let _ = write_frame(&mut writer, &WireFrame::error(&msg));
            return Err(ProtocolError::ProtocolViolation(msg));
        }
        let version = hello.int("version").unwrap_or(-1);
        if version != PROTOCOL_VERSION {
            let _ = write_frame(
                &mut writer,
                &WireFrame::error(format!("unsupported protocol version {version}")),
            );
            return Err(ProtocolError::VersionMismatch {
                rig: PROTOCOL_VERSION,
                controller: version,
            });
        }
        let reply = WireFrame::hello(PROTOCOL_VERSION)
            .with("signals", Value::Names(signals))
            .with("controls", Value::Names(controls.clone()));
        write_frame(&mut writer, &reply)?;

        let (tx, rx) = mpsc::channel();
        thread::spawn(move || loop {
            let item = match read_frame(&mut reader) {
                Ok(Some(f)) => Ok(f),
                Ok(None) => Err(ProtocolError::Disconnected),
                Err(e) => Err(e),
            };
            let stop = item.is_err();
            if tx.send(item).is_err() || stop {
                break;
            }
        });

        Ok(Self {
            name: name.into(),
            writer,
            incoming: rx,
            policy,
            controls: controls.into_iter().collect(),
            last: None,
            timed_out: BTreeSet::new(),
            held: 0,
            disconnected: false,
            last_t: 0.0,
            last_tick: 0,
        })
    }

    pub fn is_disconnected(&self) -> bool {
        self.disconnected
    }

    fn on_missing(&mut self, tick: u64, cause: ProtocolError) -> Result<Reply, ProtocolError> {
        match self.policy.action {
            TimeoutAction::HoldLastValue => {
                self.held += 1;
                if matches!(cause, ProtocolError::ControllerTimeout { .. }) {
                    self.timed_out.insert(tick);
                } else {
                    self.disconnected = true;
                }
                Ok(Reply::Held(self.last.clone()))
            }
            TimeoutAction::AbortRun => Err(cause),
        }
    }

    fn check_controls(&self, frame: &WireFrame) -> Result<(), ProtocolError> {
        match frame
            .payload
            .keys()
            .find(|k| !k.starts_with("status.") && !self.controls.contains(*k))
        {
            Some(unknown) => Err(ProtocolError::ProtocolViolation(format!("unknown control `{unknown}`"))),
            None => Ok(()),
        }
    }

    /// Send one measurement frame and wait for the matching reply.
    pub fn lockstep_exchange(&mut self, meas: &SignalFrame) -> Result<Reply, ProtocolError> {
        self.last_t = meas.t;
        self.last_tick = meas.tick;
        if self.disconnected {
            return self.on_missing(meas.tick, ProtocolError::Disconnected);
        }
        if let Err(e) = write_frame(&mut self.writer, &WireFrame::meas(meas)) {
            return match e {
                ProtocolError::Io(_) | ProtocolError::Disconnected => {
                    self.on_missing(meas.tick, ProtocolError::Disconnected)
                }
                other => Err(other),
            };
        }
        let timeout = Duration::from_secs_f64(self.policy.timeout_s.max(0.0));
        let deadline = Instant::now() + timeout;
        loop {
            let remaining = deadline.saturating_duration_since(Instant::now());
            let frame = match self.incoming.recv_timeout(remaining) {
                Ok(Ok(frame)) => frame,
                Ok(Err(ProtocolError::Disconnected)) | Err(RecvTimeoutError::Disconnected) => {
                    return self.on_missing(meas.tick, ProtocolError::Disconnected);
                }
                Ok(Err(ProtocolError::Io(_))) => {
                    return self.on_missing(meas.tick, ProtocolError::Disconnected);
                }
                Ok(Err(other)) => return Err(other),
                Err(RecvTimeoutError::Timeout) => {
                    let cause = ProtocolError::ControllerTimeout {
                        tick: meas.tick,
                        timeout_s: self.policy.timeout_s,
                    };
                    return self.on_missing(meas.tick, cause);
                }
            };
            match frame.kind {
                FrameKind::Ctrl if frame.tick == meas.tick => {
                    self.check_controls(&frame)?;
                    let ctrl = frame.to_control_frame()?;
                    self.last = Some(ctrl.clone());
                    return Ok(Reply::Fresh(ctrl));
                }
                // late answer to a tick that already timed out: discard
                FrameKind::Ctrl if self.timed_out.remove(&frame.tick) => continue,
                FrameKind::Ctrl => {
                    return Err(ProtocolError::ProtocolViolation(format!(
                        "reply for tick {} while waiting for tick {}",
                        frame.tick, meas.tick
                    )))
                }
                FrameKind::Error => {
                    return Err(ProtocolError::ProtocolViolation(format!(
                        "controller reported: {}",
                        frame.text("message").unwrap_or("unknown error")
                    )))
                }
                FrameKind::Bye => return self.on_missing(meas.tick, ProtocolError::Disconnected),
                other => {
                    return Err(ProtocolError::ProtocolViolation(format!(
                        "unexpected {} frame",
                        other.as_str()
                    )))
                }
            }
        }
    }
}

impl Controller for RemoteController {
    fn name(&self) -> &str {
        &self.name
    }

    fn exchange(&mut self, meas: &SignalFrame) -> Result<Reply, SimError> {
        Ok(self.lockstep_exchange(meas)?)
    }

    fn finish(&mut self) -> Result<ControllerSummary, SimError> {
        if !self.disconnected {
            // the controller may already be gone; the run result stands
            let _ = write_frame(&mut self.writer, &WireFrame::bye(self.last_tick, self.last_t));
        }
        let mut notes = Vec::new();
        if self.disconnected {
            notes.push("controller disconnected before the end of the run".to_string());
        }
        if self.held > 0 {
            notes.push(format!("{} replies substituted by the last valid value", self.held));
        }
        Ok(ControllerSummary {
            name: self.name.clone(),
            held_replies: self.held,
            disconnected: self.disconnected,
            notes,
        })
    }
}
