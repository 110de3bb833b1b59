//! Timestamped scalar messages and the mission log text format.
//!
//! ```text
//! # vehicle_id=heron-01 run_id=mission-0003
//! 0.1,velocity,0.85
//! 0.1,heading,1.5707
//! 0.1,thrust_left,40
//! ```

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    Velocity,
    Heading,
    HeadingRate,
    ThrustLeft,
    ThrustRight,
}

impl Channel {
    pub const ALL: [Channel; 5] = [
        Channel::Velocity,
        Channel::Heading,
        Channel::HeadingRate,
        Channel::ThrustLeft,
        Channel::ThrustRight,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Channel::Velocity => "velocity",
            Channel::Heading => "heading",
            Channel::HeadingRate => "heading_rate",
            Channel::ThrustLeft => "thrust_left",
            Channel::ThrustRight => "thrust_right",
        }
    }

    pub(crate) fn index(&self) -> usize {
        *self as usize
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Channel::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Log(format!("unknown channel '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Message {
    pub timestamp: f64,
    pub channel: Channel,
    pub value: f64,
}

impl Message {
    pub fn new(timestamp: f64, channel: Channel, value: f64) -> Self {
        Self {
            timestamp,
            channel,
            value,
        }
    }
}

impl FromStr for Message {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let mut parts = line.trim().split(',');
        let (Some(t), Some(c), Some(v), None) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(Error::Log(format!("expected 3 fields: '{line}'")));
        };
        let timestamp: f64 = t
            .trim()
            .parse()
            .map_err(|_| Error::Log(format!("bad timestamp '{t}'")))?;
        if !timestamp.is_finite() {
            return Err(Error::Log(format!("non-finite timestamp '{t}'")));
        }
        let value = v
            .trim()
            .parse()
            .map_err(|_| Error::Log(format!("bad value '{v}'")))?;
        Ok(Message {
            timestamp,
            channel: c.trim().parse()?,
            value,
        })
    }
}

/// A parsed mission log.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MissionLog {
    pub vehicle_id: String,
    pub run_id: String,
    pub messages: Vec<Message>,
    /// Lines that failed to parse.
    pub corrupt_lines: usize,
}

impl MissionLog {
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.messages.len() * 24 + 64);
        let _ = writeln!(out, "# vehicle_id={} run_id={}", self.vehicle_id, self.run_id);
        for m in &self.messages {
            let _ = writeln!(out, "{},{},{}", m.timestamp, m.channel, m.value);
        }
        out
    }

    /// Parses log text. Corrupt message lines are counted and skipped; a
    /// missing header leaves the identifiers empty.
    pub fn parse(text: &str) -> Self {
        let mut log = MissionLog::default();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('#') {
                for field in header.split_whitespace() {
                    if let Some(v) = field.strip_prefix("vehicle_id=") {
                        log.vehicle_id = v.to_string();
                    } else if let Some(v) = field.strip_prefix("run_id=") {
                        log.run_id = v.to_string();
                    }
                }
                continue;
            }
            match line.parse::<Message>() {
                Ok(m) => log.messages.push(m),
                Err(_) => log.corrupt_lines += 1,
            }
        }
        log
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn duration(&self) -> f64 {
        match (self.messages.first(), self.messages.last()) {
            (Some(a), Some(b)) => b.timestamp - a.timestamp,
            _ => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_message_lines() {
        let m: Message = "0.25,thrust_left,40.5".parse().unwrap();
        assert_eq!(m, Message::new(0.25, Channel::ThrustLeft, 40.5));
        assert!("0.1,rudder,3".parse::<Message>().is_err());
        assert!("0.1,velocity".parse::<Message>().is_err());
        assert!("x,velocity,1".parse::<Message>().is_err());
        assert!("inf,velocity,1".parse::<Message>().is_err());
    }

    #[test]
    fn corrupt_lines_are_counted() {
        let text = "# vehicle_id=v1 run_id=r7\n0,velocity,1\ngarbage\n0.1,heading,0.5\n0.2,velocity\n";
        let log = MissionLog::parse(text);
        assert_eq!(log.vehicle_id, "v1");
        assert_eq!(log.run_id, "r7");
        assert_eq!(log.messages.len(), 2);
        assert_eq!(log.corrupt_lines, 2);
    }

    #[test]
    fn text_round_trip() {
        let log = MissionLog {
            vehicle_id: "a".into(),
            run_id: "b".into(),
            messages: vec![
                Message::new(0.1, Channel::Velocity, 0.30000000000000004),
                Message::new(0.2, Channel::HeadingRate, -1e-7),
            ],
            corrupt_lines: 0,
        };
        assert_eq!(MissionLog::parse(&log.to_text()), log);
    }
}
