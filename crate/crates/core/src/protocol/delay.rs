use std::collections::VecDeque;
use std::ops::Add;

/// FIFO that releases each frame `delay` after it was sent.
///
/// Generic over the time type: the engine uses integer ticks so release
/// instants are exact, while seconds work just as well for callers that
/// think in continuous time. Frames leave in send order; nothing is
/// dropped or reordered.
#[derive(Debug, Clone)]
pub struct DelayChannel<T, F> {
    delay: T,
    in_flight: VecDeque<(T, F)>,
}

impl<T, F> DelayChannel<T, F>
where
    T: Copy + PartialOrd + Add<Output = T>,
{
    pub fn new(delay: T) -> Self {
        Self {
            delay,
            in_flight: VecDeque::new(),
        }
    }

    pub fn delay(&self) -> T {
        self.delay
    }

    pub fn in_flight(&self) -> usize {
        self.in_flight.len()
    }

    pub fn send(&mut self, now: T, frame: F) {
        self.in_flight.push_back((now + self.delay, frame));
    }

    /// Every frame whose release time is at or before `now`, oldest first.
    pub fn poll(&mut self, now: T) -> Vec<F> {
        let mut due = Vec::new();
        while self.in_flight.front().is_some_and(|(release, _)| *release <= now) {
            if let Some((_, f)) = self.in_flight.pop_front() {
                due.push(f);
            }
        }
        due
    }

    /// Enqueue `frame` at `now` and return everything due at `now`.
    pub fn delayed_deliver(&mut self, frame: F, now: T) -> Vec<F> {
        self.send(now, frame);
        self.poll(now)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_delay_is_immediate() {
        let mut ch = DelayChannel::new(0.0);
        assert_eq!(ch.delayed_deliver("a", 1.0), vec!["a"]);
        assert_eq!(ch.delayed_deliver("b", 2.0), vec!["b"]);
    }

    #[test]
    fn sixty_second_delay() {
        let mut ch = DelayChannel::new(60.0);
        ch.send(12.0, "m");
        assert!(ch.poll(71.9).is_empty());
        assert_eq!(ch.poll(72.0), vec!["m"]);
    }

    #[test]
    fn fifo_order() {
        let mut ch = DelayChannel::new(5u64);
        ch.send(1, 'x');
        ch.send(2, 'y');
        assert!(ch.poll(5).is_empty());
        assert_eq!(ch.poll(6), vec!['x']);
        assert_eq!(ch.poll(7), vec!['y']);
        ch.send(10, 'p');
        ch.send(10, 'q');
        assert_eq!(ch.poll(100), vec!['p', 'q']);
    }
}
