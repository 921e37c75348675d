use std::collections::BTreeMap;

/// Time-stamped set of named instantaneous plant signals.
///
/// Names are kept in lexicographic order so every consumer (trace columns,
/// wire payloads, CSV headers) sees the same ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalFrame {
    pub tick: u64,
    pub t: f64,
    pub signals: BTreeMap<String, f64>,
}

impl SignalFrame {
    pub fn new(tick: u64, t: f64) -> Self {
        Self {
            tick,
            t,
            signals: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        self.signals.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.signals.get(name).copied()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.signals.keys().map(String::as_str)
    }

    /// First non-finite signal, if any.
    pub fn non_finite(&self) -> Option<(&str, f64)> {
        self.signals
            .iter()
            .find(|(_, v)| !v.is_finite())
            .map(|(k, v)| (k.as_str(), *v))
    }
}

/// Controller output answering the measurement frame of `tick`.
///
/// Values are either levels (held by the plant until overwritten) or
/// impulses such as `tap_cmd`, which the plant acts on once per fresh frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ControlFrame {
    pub tick: u64,
    pub values: BTreeMap<String, f64>,
}

impl ControlFrame {
    pub fn new(tick: u64) -> Self {
        Self {
            tick,
            values: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: impl Into<String>, value: f64) -> Self {
        self.values.insert(name.into(), value);
        self
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        self.values.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
