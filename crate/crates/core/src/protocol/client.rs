use std::io::{BufReader, BufWriter};
use std::net::TcpStream;

use super::server::parse_endpoint;
use super::wire::{read_frame, write_frame, FrameKind, WireFrame};
use super::{ProtocolError, PROTOCOL_VERSION};
use crate::sim::{Controller, Reply};

/// Controller-side connection to a rig.
pub struct ClientSession {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
    pub endpoint: String,
    pub version: i64,
    pub signals: Vec<String>,
    pub controls: Vec<String>,
    pub last_tick: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServeSummary {
    pub frames: u64,
    pub last_tick: Option<u64>,
}

impl ClientSession {
    pub fn connect_and_handshake(endpoint: &str) -> Result<Self, ProtocolError> {
        Self::connect_with_version(endpoint, PROTOCOL_VERSION)
    }

    pub fn connect_with_version(endpoint: &str, version: i64) -> Result<Self, ProtocolError> {
        let addr = parse_endpoint(endpoint)?;
        let stream = TcpStream::connect(&addr).map_err(|e| match e.kind() {
            std::io::ErrorKind::ConnectionRefused => ProtocolError::ConnectionRefused(addr.clone()),
            _ => e.into(),
        })?;
        stream.set_nodelay(true)?;
        let mut reader = BufReader::new(stream.try_clone()?);
        let mut writer = BufWriter::new(stream);
        write_frame(&mut writer, &WireFrame::hello(version))?;
        let reply = read_frame(&mut reader)?.ok_or(ProtocolError::Disconnected)?;
        match reply.kind {
            FrameKind::Hello => {
                let rig = reply.int("version").unwrap_or(-1);
                if rig != version {
                    return Err(ProtocolError::VersionMismatch {
                        rig,
                        controller: version,
                    });
                }
                Ok(Self {
                    reader,
                    writer,
                    endpoint: addr,
                    version,
                    signals: reply.names("signals"),
                    controls: reply.names("controls"),
                    last_tick: None,
                })
            }
            FrameKind::Error => Err(ProtocolError::VersionMismatch {
                rig: PROTOCOL_VERSION,
                controller: version,
            }),
            other => Err(ProtocolError::ProtocolViolation(format!(
                "expected hello, got {}",
                other.as_str()
            ))),
        }
    }

    /// Answer measurement frames with `logic` until the rig says bye.
    pub fn serve_controller(&mut self, logic: &mut dyn Controller) -> Result<ServeSummary, ProtocolError> {
        let mut frames = 0;
        loop {
            let frame = read_frame(&mut self.reader)?.ok_or(ProtocolError::Disconnected)?;
            match frame.kind {
                FrameKind::Bye => {
                    return Ok(ServeSummary {
                        frames,
                        last_tick: self.last_tick,
                    })
                }
                FrameKind::Meas => {
                    if self.last_tick.is_some_and(|last| frame.tick <= last) {
                        let msg = format!("tick {} does not advance past {:?}", frame.tick, self.last_tick);
                        let _ = write_frame(&mut self.writer, &WireFrame::error(&msg));
                        return Err(ProtocolError::ProtocolViolation(msg));
                    }
                    self.last_tick = Some(frame.tick);
                    let meas = frame.to_signal_frame()?;
                    let mut ctrl = match logic.exchange(&meas) {
                        Ok(Reply::Fresh(c)) | Ok(Reply::Held(Some(c))) => c,
                        Ok(Reply::Held(None)) => Default::default(),
                        Err(e) => {
                            let _ = write_frame(&mut self.writer, &WireFrame::error(e.to_string()));
                            return Err(ProtocolError::ProtocolViolation(e.to_string()));
                        }
                    };
                    ctrl.tick = frame.tick;
                    write_frame(&mut self.writer, &WireFrame::ctrl(&ctrl, frame.t))?;
                    frames += 1;
                }
                FrameKind::Error => {
                    return Err(ProtocolError::ProtocolViolation(format!(
                        "rig reported: {}",
                        frame.text("message").unwrap_or("unknown error")
                    )))
                }
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
