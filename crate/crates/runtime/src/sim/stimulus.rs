//! Timed stimulus producers.

use std::f64::consts::PI;

use diakit_core::Value;
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
#[error("sinusoid period must be positive, got {0}")]
pub struct PeriodError(pub f64);

/// `offset + amplitude * sin(2π t / periodTicks + phase)`.
pub fn sinusoid_value(t: u64, offset: f64, amplitude: f64, period_ticks: f64, phase: f64) -> Result<f64, PeriodError> {
    if period_ticks <= 0.0 || !period_ticks.is_finite() {
        return Err(PeriodError(period_ticks));
    }
    Ok(offset + amplitude * (2.0 * PI * t as f64 / period_ticks + phase).sin())
}

/// When a timed stimulus fires: every `refresh` ticks from `start`, before
/// `end` when given.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub start: u64,
    pub end: Option<u64>,
    pub refresh: u64,
}

impl Schedule {
    /// The firing ordinal at tick `t`, if the stimulus fires then.
    pub fn firing(&self, t: u64) -> Option<u64> {
        if t < self.start || self.end.is_some_and(|e| t >= e) {
            return None;
        }
        let d = t - self.start;
        d.is_multiple_of(self.refresh).then_some(d / self.refresh)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Waveform {
    Constant(Value),
    Sequence(Vec<Value>),
    Sinusoid {
        offset: f64,
        amplitude: f64,
        period_ticks: f64,
        phase: f64,
    },
}

/// A validated timed stimulus bound to one entity source.
#[derive(Clone, Debug, PartialEq)]
pub struct TimedStimulus {
    pub entity: String,
    pub source: String,
    pub indices: Vec<Value>,
    pub schedule: Schedule,
    pub waveform: Waveform,
}

impl TimedStimulus {
    pub fn value_at(&self, t: u64) -> Option<Value> {
        let k = self.schedule.firing(t)?;
        match &self.waveform {
            Waveform::Constant(v) => Some(v.clone()),
            Waveform::Sequence(vs) => usize::try_from(k).ok().and_then(|k| vs.get(k)).cloned(),
            Waveform::Sinusoid {
                offset,
                amplitude,
                period_ticks,
                phase,
            } => sinusoid_value(t, *offset, *amplitude, *period_ticks, *phase).ok().map(Value::Float),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinusoid_examples() {
        assert_eq!(sinusoid_value(0, 10.0, 5.0, 24.0, 0.0).unwrap(), 10.0);
        assert!((sinusoid_value(6, 10.0, 5.0, 24.0, 0.0).unwrap() - 15.0).abs() < 1e-12);
        assert!(sinusoid_value(1, 0.0, 1.0, 0.0, 0.0).is_err());
        assert!(sinusoid_value(1, 0.0, 1.0, -3.0, 0.0).is_err());
    }

    #[test]
    fn schedule_firing() {
        let s = Schedule {
            start: 2,
            end: Some(9),
            refresh: 3,
        };
        let fired: Vec<_> = (0..12).filter_map(|t| s.firing(t).map(|k| (t, k))).collect();
        assert_eq!(fired, [(2, 0), (5, 1), (8, 2)]);
    }

    #[test]
    fn sequence_runs_out() {
        let st = TimedStimulus {
            entity: "e".into(),
            source: "s".into(),
            indices: vec![],
            schedule: Schedule {
                start: 0,
                end: None,
                refresh: 1,
            },
            waveform: Waveform::Sequence(vec![Value::Integer(1), Value::Integer(2)]),
        };
        assert_eq!(st.value_at(1), Some(Value::Integer(2)));
        assert_eq!(st.value_at(2), None);
    }
}
