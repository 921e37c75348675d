use std::fmt::Write as _;

use super::{SignalFrame, SimError};

/// One recorded frame, with values in the trace's column order.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub tick: u64,
    pub t: f64,
    pub values: Vec<f64>,
}

/// Frames recorded every `decimation` ticks of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    dt: f64,
    decimation: u64,
    columns: Vec<String>,
    rows: Vec<TraceRow>,
}

impl Trace {
    pub fn new(dt: f64, decimation: u64) -> Self {
        Self {
            dt,
            decimation: decimation.max(1),
            columns: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn decimation(&self) -> u64 {
        self.decimation
    }

    /// Spacing between rows in seconds.
    pub fn row_interval(&self) -> f64 {
        self.dt * self.decimation as f64
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, frame: &SignalFrame) -> Result<(), SimError> {
        if self.rows.is_empty() && self.columns.is_empty() {
            self.columns = frame.signals.keys().cloned().collect();
        } else if frame.signals.len() != self.columns.len()
            || !frame.signals.keys().zip(&self.columns).all(|(a, b)| a == b)
        {
            return Err(SimError::TraceShape(format!(
                "signal set changed at tick {}",
                frame.tick
            )));
        }
        if let Some(last) = self.rows.last() {
            if frame.tick <= last.tick {
                return Err(SimError::TraceShape(format!(
                    "tick {} not after {}",
                    frame.tick, last.tick
                )));
            }
        }
        self.rows.push(TraceRow {
            tick: frame.tick,
            t: frame.t,
            values: frame.signals.values().copied().collect(),
        });
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r.values[idx]).collect())
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn frame(&self, row: usize) -> Option<SignalFrame> {
        let r = self.rows.get(row)?;
        let mut frame = SignalFrame::new(r.tick, r.t);
        for (name, v) in self.columns.iter().zip(&r.values) {
            frame.set(name.clone(), *v);
        }
        Some(frame)
    }

    /// CSV with header `tick,t,<columns>`, values at 9 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * (self.columns.len() + 2) * 14);
        out.push_str("tick,t");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{},{}", r.tick, format_sig9(r.t));
            for v in &r.values {
                out.push(',');
                out.push_str(&format_sig9(*v));
            }
            out.push('\n');
        }
        out
    }

    /// Parse a CSV written by [`Trace::to_csv`].
    pub fn from_csv(text: &str, dt: f64, decimation: u64) -> Result<Self, SimError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| SimError::TraceShape("empty csv".into()))?;
        let mut cols = header.split(',');
        if cols.next() != Some("tick") || cols.next() != Some("t") {
            return Err(SimError::TraceShape("header must start with tick,t".into()));
        }
        let columns: Vec<String> = cols.map(str::to_owned).collect();
        let mut rows = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let bad = |what: &str| SimError::TraceShape(format!("line {}: {what}", lineno + 2));
            let mut fields = line.split(',');
            let tick = fields
                .next()
                .and_then(|s| s.parse::<u64>().ok())
                .ok_or_else(|| bad("tick"))?;
            let t = fields
                .next()
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| bad("t"))?;
            let values = fields
                .map(|s| s.parse::<f64>().map_err(|_| bad(s)))
                .collect::<Result<Vec<_>, _>>()?;
            if values.len() != columns.len() {
                return Err(bad("column count"));
            }
            rows.push(TraceRow { tick, t, values });
        }
        Ok(Self {
            dt,
            decimation: decimation.max(1),
            columns,
            rows,
        })
    }
}

/// `%.9g`-style formatting: 9 significant digits, trailing zeros removed,
/// exponent notation outside `1e-5 ..= 1e9`.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_owned()))
    }
}

fn trim_zeros(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(-0.0), "0");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(325.269119345812), "325.269119");
        assert_eq!(format_sig9(-16.2634559672906), "-16.263456");
        assert_eq!(format_sig9(0.59995), "0.59995");
        assert_eq!(format_sig9(1.0e-7), "1e-7");
        assert_eq!(format_sig9(123456789012.0), "1.23456789e11");
        assert_eq!(format_sig9(0.000123456789123), "0.000123456789");
        assert_eq!(format_sig9(99999999.96), "100000000");
    }

    #[test]
    fn csv_round_trip_keeps_shape() {
        let mut trace = Trace::new(1e-3, 1);
        for tick in 0..3u64 {
            let mut f = SignalFrame::new(tick, tick as f64 * 1e-3);
            f.set("b", tick as f64 * 0.5);
            f.set("a", -1.25);
            trace.push(&f).unwrap();
        }
        let csv = trace.to_csv();
        assert!(csv.starts_with("tick,t,a,b\n0,0,-1.25,0\n"));
        let back = Trace::from_csv(&csv, 1e-3, 1).unwrap();
        assert_eq!(back, trace);
    }

    #[test]
    fn rejects_changed_signal_set() {
        let mut trace = Trace::new(1.0, 1);
        let mut f = SignalFrame::new(0, 0.0);
        f.set("a", 1.0);
        trace.push(&f).unwrap();
        let mut g = SignalFrame::new(1, 1.0);
        g.set("b", 1.0);
        assert!(trace.push(&g).is_err());
    }

    #[test]
    fn rejects_non_increasing_ticks() {
        let mut trace = Trace::new(1.0, 1);
        let f = SignalFrame::new(3, 3.0);
        trace.push(&f).unwrap();
        assert!(trace.push(&f).is_err());
    }
}
