use std::time::{Duration, Instant};

use super::{schedule, ControlFrame, Event, Network, SignalFrame, SimClock, SimError, Trace};
use crate::protocol::DelayChannel;

/// Answer of a controller to one measurement frame.
#[derive(Debug, Clone, PartialEq)]
pub enum Reply {
    /// A new control frame for the plant.
    Fresh(ControlFrame),
    /// No new answer (timeout with hold-last-value); the plant keeps its
    /// present setpoints. Carries the last valid frame for the record.
    Held(Option<ControlFrame>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplyKind {
    Fresh,
    Held,
}

impl ReplyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ReplyKind::Fresh => "fresh",
            ReplyKind::Held => "held",
        }
    }
}

/// What a controller reports after the run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ControllerSummary {
    pub name: String,
    /// Replies that timed out and were substituted by the held value.
    pub held_replies: u64,
    /// The controller connection dropped before the run ended.
    pub disconnected: bool,
    pub notes: Vec<String>,
}

/// Anything that maps measurement frames to control frames: the reference
/// controllers in-process, or a remote controller behind the wire protocol.
///
/// Implementations are sequential state machines; the engine never calls
/// them re-entrantly.
pub trait Controller: Send {
    fn name(&self) -> &str;

    fn exchange(&mut self, meas: &SignalFrame) -> Result<Reply, SimError>;

    /// Called once after the last tick.
    fn finish(&mut self) -> Result<ControllerSummary, SimError> {
        Ok(ControllerSummary {
            name: self.name().to_string(),
            ..ControllerSummary::default()
        })
    }
}

impl<C: Controller + ?Sized> Controller for Box<C> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn exchange(&mut self, meas: &SignalFrame) -> Result<Reply, SimError> {
        (**self).exchange(meas)
    }

    fn finish(&mut self) -> Result<ControllerSummary, SimError> {
        (**self).finish()
    }
}

/// A controller attached to the engine with its cycle and the delays of
/// its measurement and command paths, all in ticks.
pub struct ControllerPort<'a> {
    pub controller: Box<dyn Controller + 'a>,
    pub cycle_ticks: u64,
    pub meas_delay_ticks: u64,
    pub ctrl_delay_ticks: u64,
}

impl<'a> ControllerPort<'a> {
    pub fn new(controller: impl Controller + 'a, cycle_ticks: u64) -> Self {
        Self {
            controller: Box::new(controller),
            cycle_ticks,
            meas_delay_ticks: 0,
            ctrl_delay_ticks: 0,
        }
    }

    pub fn with_delays(mut self, meas_delay_ticks: u64, ctrl_delay_ticks: u64) -> Self {
        self.meas_delay_ticks = meas_delay_ticks;
        self.ctrl_delay_ticks = ctrl_delay_ticks;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    pub dt: f64,
    pub duration: f64,
    pub decimation: u64,
    /// Sleep so that simulated time does not run ahead of wall time.
    pub realtime: bool,
}

impl EngineConfig {
    pub fn new(dt: f64, duration: f64) -> Self {
        Self {
            dt,
            duration,
            decimation: 1,
            realtime: false,
        }
    }

    /// Number of steps in the run: `duration / dt`, rounded down unless
    /// the ratio is integral to within a relative 1e-9.
    pub fn total_ticks(&self) -> Result<u64, SimError> {
        SimClock::new(self.dt)?;
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(SimError::InvalidConfig(format!(
                "duration {} must be >= 0",
                self.duration
            )));
        }
        Ok(super::ticks_for(self.duration, self.dt).unwrap_or_else(|| (self.duration / self.dt).floor() as u64))
    }
}

/// One controller invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeRecord {
    /// Index of the controller port.
    pub port: usize,
    /// Tick of the measurement frame the controller saw.
    pub meas_tick: u64,
    /// Tick at which the controller ran (later than `meas_tick` when the
    /// measurement path is delayed).
    pub run_tick: u64,
    pub kind: ReplyKind,
    pub controls: ControlFrame,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: Trace,
    pub exchanges: Vec<ExchangeRecord>,
    pub controllers: Vec<ControllerSummary>,
}

impl RunOutput {
    pub fn exchange_count(&self) -> usize {
        self.exchanges.len()
    }
}

/// One closed-loop iteration: apply the controls, advance the plant by one
/// `dt` and measure.
pub fn step(network: &mut Network, clock: &mut SimClock, controls: &[ControlFrame]) -> Result<SignalFrame, SimError> {
    for c in controls {
        network.apply_controls(c)?;
    }
    clock.advance();
    network.advance(clock.t(), clock.dt())?;
    let frame = network.measure(clock.tick(), clock.t());
    check_finite(&frame)?;
    Ok(frame)
}

fn check_finite(frame: &SignalFrame) -> Result<(), SimError> {
    match frame.non_finite() {
        Some((name, value)) => Err(SimError::NumericalDivergence {
            tick: frame.tick,
            signal: name.to_string(),
            value,
        }),
        None => Ok(()),
    }
}

struct PortState<'a> {
    port: ControllerPort<'a>,
    meas: DelayChannel<u64, SignalFrame>,
    ctrl: DelayChannel<u64, ControlFrame>,
}

/// Run the plant from `t = 0` to `duration`.
///
/// Per tick `n`: measurement frame `n` is offered to every controller whose
/// cycle divides `n`, routed through that port's delay channels; control
/// frames that come due are applied before the step to `n + 1`; events due
/// at `n + 1` are applied next, so the frame at the first tick with
/// `t >= fire_t` already reflects them.
pub fn run(
    network: &mut Network,
    events: Vec<Event>,
    config: EngineConfig,
    ports: Vec<ControllerPort<'_>>,
) -> Result<RunOutput, SimError> {
    let total = config.total_ticks()?;
    if config.decimation == 0 {
        return Err(SimError::InvalidConfig("decimation must be >= 1".into()));
    }
    if let Some(p) = ports.iter().find(|p| p.cycle_ticks == 0) {
        return Err(SimError::InvalidConfig(format!(
            "controller {} has a zero-tick cycle",
            p.controller.name()
        )));
    }
    let mut clock = SimClock::new(config.dt)?;
    let mut queue = schedule(events, config.duration)?;
    let mut ports: Vec<PortState> = ports
        .into_iter()
        .map(|port| PortState {
            meas: DelayChannel::new(port.meas_delay_ticks),
            ctrl: DelayChannel::new(port.ctrl_delay_ticks),
            port,
        })
        .collect();

    for ev in queue.pop_due_tick(0, config.dt) {
        network.apply_event(&ev.action)?;
    }
    network.initialize(config.dt)?;
    let mut frame = network.measure(0, 0.0);
    check_finite(&frame)?;

    let mut trace = Trace::new(config.dt, config.decimation);
    trace.push(&frame)?;
    let mut exchanges = Vec::new();
    let started = Instant::now();

    for n in 0..total {
        let mut fresh = Vec::new();
        for (idx, ps) in ports.iter_mut().enumerate() {
            if n % ps.port.cycle_ticks == 0 {
                ps.meas.send(n, frame.clone());
            }
            for meas in ps.meas.poll(n) {
                let (kind, controls) = match ps.port.controller.exchange(&meas)? {
                    Reply::Fresh(c) => {
                        ps.ctrl.send(n, c.clone());
                        (ReplyKind::Fresh, c)
                    }
                    Reply::Held(last) => (ReplyKind::Held, last.unwrap_or_default()),
                };
                exchanges.push(ExchangeRecord {
                    port: idx,
                    meas_tick: meas.tick,
                    run_tick: n,
                    kind,
                    controls,
                });
            }
            fresh.extend(ps.ctrl.poll(n));
        }
        for ev in queue.pop_due_tick(n + 1, config.dt) {
            network.apply_event(&ev.action)?;
        }
        frame = step(network, &mut clock, &fresh)?;
        if clock.tick() % config.decimation == 0 {
            trace.push(&frame)?;
        }
        if config.realtime {
            let target = Duration::from_secs_f64(clock.t());
            if let Some(wait) = target.checked_sub(started.elapsed()) {
                std::thread::sleep(wait);
            }
        }
    }

    let controllers = ports
        .iter_mut()
        .map(|ps| ps.port.controller.finish())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RunOutput {
        trace,
        exchanges,
        controllers,
    })
}
