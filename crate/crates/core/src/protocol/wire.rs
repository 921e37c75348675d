use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use super::ProtocolError;
use crate::sim::{ControlFrame, SignalFrame};

/// Upper bound on a frame body, guarding against garbage length prefixes.
pub const MAX_FRAME_LEN: usize = 16 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    Meas,
    Ctrl,
    Hello,
    Bye,
    Error,
}

impl FrameKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FrameKind::Meas => "meas",
            FrameKind::Ctrl => "ctrl",
            FrameKind::Hello => "hello",
            FrameKind::Bye => "bye",
            FrameKind::Error => "error",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "meas" => FrameKind::Meas,
            "ctrl" => FrameKind::Ctrl,
            "hello" => FrameKind::Hello,
            "bye" => FrameKind::Bye,
            "error" => FrameKind::Error,
            _ => return None,
        })
    }
}

/// Payload value. Signals and controls are always `Num`; the handshake
/// also carries an integer version and the lists of declared names.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Num(f64),
    Str(String),
    Names(Vec<String>),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Value::Num(x) => Some(x),
            Value::Int(i) => Some(i as f64),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WireFrame {
    pub kind: FrameKind,
    pub tick: u64,
    pub t: f64,
    /// Ordered by key, which fixes the serialized position of every entry.
    pub payload: BTreeMap<String, Value>,
}

impl WireFrame {
    pub fn new(kind: FrameKind, tick: u64, t: f64) -> Self {
        Self {
            kind,
            tick,
            t,
            payload: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: impl Into<String>, value: Value) -> Self {
        self.payload.insert(key.into(), value);
        self
    }

    pub fn hello(version: i64) -> Self {
        Self::new(FrameKind::Hello, 0, 0.0).with("version", Value::Int(version))
    }

    pub fn bye(tick: u64, t: f64) -> Self {
        Self::new(FrameKind::Bye, tick, t)
    }

    pub fn error(message: impl Into<String>) -> Self {
        Self::new(FrameKind::Error, 0, 0.0).with("message", Value::Str(message.into()))
    }

    pub fn meas(frame: &SignalFrame) -> Self {
        let mut w = Self::new(FrameKind::Meas, frame.tick, frame.t);
        for (k, &v) in &frame.signals {
            w.payload.insert(k.clone(), Value::Num(v));
        }
        w
    }

    pub fn ctrl(frame: &ControlFrame, t: f64) -> Self {
        let mut w = Self::new(FrameKind::Ctrl, frame.tick, t);
        for (k, &v) in &frame.values {
            w.payload.insert(k.clone(), Value::Num(v));
        }
        w
    }

    fn numeric_payload(&self) -> Result<BTreeMap<String, f64>, ProtocolError> {
        self.payload
            .iter()
            .map(|(k, v)| {
                v.as_f64()
                    .map(|x| (k.clone(), x))
                    .ok_or_else(|| ProtocolError::ProtocolViolation(format!("`{k}` is not numeric")))
            })
            .collect()
    }

    pub fn to_signal_frame(&self) -> Result<SignalFrame, ProtocolError> {
        Ok(SignalFrame {
            tick: self.tick,
            t: self.t,
            signals: self.numeric_payload()?,
        })
    }

    pub fn to_control_frame(&self) -> Result<ControlFrame, ProtocolError> {
        Ok(ControlFrame {
            tick: self.tick,
            values: self.numeric_payload()?,
        })
    }

    pub fn names(&self, key: &str) -> Vec<String> {
        match self.payload.get(key) {
            Some(Value::Names(n)) => n.clone(),
            _ => Vec::new(),
        }
    }

    pub fn int(&self, key: &str) -> Option<i64> {
        match self.payload.get(key) {
            Some(Value::Int(i)) => Some(*i),
            _ => None,
        }
    }

    pub fn text(&self, key: &str) -> Option<&str> {
        match self.payload.get(key) {
            Some(Value::Str(s)) => Some(s),
            _ => None,
        }
    }
}

fn push_float(out: &mut String, key: &str, x: f64) -> Result<(), ProtocolError> {
    if !x.is_finite() {
        return Err(ProtocolError::NonFinite(key.to_string()));
    }
    // `{:?}` is the shortest representation that parses back to the same
    // bits, and always carries a `.` or an exponent.
    write!(out, "{x:?}").expect("writing to a String cannot fail");
    Ok(())
}

fn push_str(out: &mut String, s: &str) {
    out.push_str(&serde_json::to_string(s).expect("strings always serialize"));
}

/// JSON body of a frame, without the length prefix.
pub fn encode_body(frame: &WireFrame) -> Result<String, ProtocolError> {
    let mut out = String::with_capacity(64 + 24 * frame.payload.len());
    out.push_str("{\"kind\":");
    push_str(&mut out, frame.kind.as_str());
    write!(out, ",\"tick\":{},\"t\":", frame.tick).expect("writing to a String cannot fail");
    push_float(&mut out, "t", frame.t)?;
    out.push_str(",\"payload\":{");
    for (i, (k, v)) in frame.payload.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        push_str(&mut out, k);
        out.push(':');
        match v {
            Value::Int(n) => write!(out, "{n}").expect("writing to a String cannot fail"),
            Value::Num(x) => push_float(&mut out, k, *x)?,
            Value::Str(s) => push_str(&mut out, s),
            Value::Names(names) => {
                out.push('[');
                for (j, n) in names.iter().enumerate() {
                    if j > 0 {
                        out.push(',');
                    }
                    push_str(&mut out, n);
                }
                out.push(']');
            }
        }
    }
    out.push_str("}}");
    Ok(out)
}

/// Length-prefixed frame bytes.
pub fn encode(frame: &WireFrame) -> Result<Vec<u8>, ProtocolError> {
    let body = encode_body(frame)?;
    if body.len() > MAX_FRAME_LEN {
        return Err(ProtocolError::FrameTooLarge(body.len()));
    }
    let mut bytes = Vec::with_capacity(4 + body.len());
    bytes.extend_from_slice(&(body.len() as u32).to_be_bytes());
    bytes.extend_from_slice(body.as_bytes());
    Ok(bytes)
}

fn malformed(msg: impl Into<String>) -> ProtocolError {
    ProtocolError::Malformed(msg.into())
}

/// Parse a JSON body (no length prefix).
pub fn decode_body(body: &[u8]) -> Result<WireFrame, ProtocolError> {
    let json: serde_json::Value = serde_json::from_slice(body).map_err(|e| malformed(e.to_string()))?;
    let obj = json.as_object().ok_or_else(|| malformed("frame is not an object"))?;
    if let Some(extra) = obj
        .keys()
        .find(|k| !matches!(k.as_str(), "kind" | "tick" | "t" | "payload"))
    {
        return Err(malformed(format!("unexpected key `{extra}`")));
    }
    let kind = obj
        .get("kind")
        .and_then(|k| k.as_str())
        .and_then(FrameKind::parse)
        .ok_or_else(|| malformed("missing or unknown `kind`"))?;
    let tick = obj
        .get("tick")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| malformed("`tick` must be a non-negative integer"))?;
    let t = obj
        .get("t")
        .and_then(|v| v.as_f64())
        .ok_or_else(|| malformed("`t` must be a number"))?;
    let raw = obj
        .get("payload")
        .and_then(|p| p.as_object())
        .ok_or_else(|| malformed("`payload` must be an object"))?;
    let mut payload = BTreeMap::new();
    for (k, v) in raw {
        let value = match v {
            serde_json::Value::Number(n) => match n.as_i64() {
                Some(i) if !n.is_f64() => Value::Int(i),
                _ => Value::Num(n.as_f64().ok_or_else(|| malformed(format!("`{k}` out of range")))?),
            },
            serde_json::Value::String(s) => Value::Str(s.clone()),
            serde_json::Value::Array(items) => Value::Names(
                items
                    .iter()
                    .map(|i| i.as_str().map(String::from))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| malformed(format!("`{k}` must be a list of names")))?,
            ),
            _ => return Err(malformed(format!("unsupported value for `{k}`"))),
        };
        payload.insert(k.clone(), value);
    }
    Ok(WireFrame { kind, tick, t, payload })
}

/// Parse one complete length-prefixed frame.
pub fn decode(bytes: &[u8]) -> Result<WireFrame, ProtocolError> {
    if bytes.len() < 4 {
        return Err(malformed("shorter than the length prefix"));
    }
    let len = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as usize;
    if bytes.len() - 4 != len {
        return Err(malformed(format!(
            "length prefix says {len} bytes, {} present",
            bytes.len() - 4
        )));
    }
    decode_body(&bytes[4..])
}

pub fn write_frame(w: &mut impl Write, frame: &WireFrame) -> Result<(), ProtocolError> {
    w.write_all(&encode(frame)?)?;
    w.flush()?;
    Ok(())
}

/// Read one frame; `Ok(None)` on a clean end of stream before a prefix.
pub fn read_frame(r: &mut impl Read) -> Result<Option<WireFrame>, ProtocolError> {
    let mut prefix = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut prefix[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(ProtocolError::Disconnected),
            Ok(n) => got += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_be_bytes(prefix) as usize;
    if len > MAX_FRAME_LEN {
        return Err(ProtocolError::FrameTooLarge(len));
    }
    let mut body = vec![0u8; len];
    r.read_exact(&mut body).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => ProtocolError::Disconnected,
        _ => e.into(),
    })?;
    decode_body(&body).map(Some)
}
