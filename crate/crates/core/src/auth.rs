//! Logging-system back end: the user database, the audit log and the
//! scanner's password gate.
//!
//! [`AuthDb`] is immutable once loaded and can be shared between threads.
//! [`AuditLog`] and [`PasswordGate`] take `&mut self`; callers own them and
//! serialize access (one writer at a time), nothing here locks internally.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime, SubsecRound, Utc};
use thiserror::Error;

use crate::code39::CardCode;

/// Name written to the log for a rejected card.
pub const DENIED: &str = "DENIED";

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

#[derive(Debug, Error)]
pub enum DbError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: duplicate code {code}")]
    DuplicateCode { line: usize, code: CardCode },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("timestamp {next} is earlier than the last entry {last}")]
    NonMonotonic { last: String, next: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserRecord {
    pub code: CardCode,
    pub name: String,
}

/// Authorized users keyed by card code.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuthDb {
    records: BTreeMap<CardCode, String>,
}

impl AuthDb {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, code: &CardCode) -> Option<&str> {
        self.records.get(code).map(String::as_str)
    }

    pub fn records(&self) -> impl Iterator<Item = UserRecord> + '_ {
        self.records.iter().map(|(&code, name)| UserRecord {
            code,
            name: name.clone(),
        })
    }
}

/// Parses `CODE,NAME` lines. Blank lines and `#` comments are skipped.
pub fn load_db<R: BufRead>(source: R) -> Result<AuthDb, DbError> {
    let mut records = BTreeMap::new();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let malformed = |reason: &str| DbError::Malformed {
            line: line_no,
            reason: reason.to_string(),
        };
        let (code, name) = line
            .split_once(',')
            .ok_or_else(|| malformed("expected CODE,NAME"))?;
        let code: CardCode = code
            .parse()
            .map_err(|_| malformed(&format!("{code:?} is not a four-digit code")))?;
        if name.is_empty() {
            return Err(malformed("empty name"));
        }
        if records.insert(code, name.to_string()).is_some() {
            return Err(DbError::DuplicateCode {
                line: line_no,
                code,
            });
        }
    }
    Ok(AuthDb { records })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AuthOutcome {
    Accept(String),
    Reject,
}

/// Exact code lookup.
pub fn authenticate(code: CardCode, db: &AuthDb) -> AuthOutcome {
    match db.get(&code) {
        Some(name) => AuthOutcome::Accept(name.to_string()),
        None => AuthOutcome::Reject,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogEntry {
    pub timestamp: DateTime<Utc>,
    pub code: CardCode,
    pub name: String,
}

impl LogEntry {
    /// Truncates `timestamp` to whole seconds.
    pub fn new(timestamp: DateTime<Utc>, code: CardCode, name: impl Into<String>) -> Self {
        Self {
            timestamp: timestamp.trunc_subsecs(0),
            code,
            name: name.into(),
        }
    }

    pub fn for_outcome(timestamp: DateTime<Utc>, code: CardCode, outcome: &AuthOutcome) -> Self {
        match outcome {
            AuthOutcome::Accept(name) => Self::new(timestamp, code, name.as_str()),
            AuthOutcome::Reject => Self::new(timestamp, code, DENIED),
        }
    }

    pub fn is_denied(&self) -> bool {
        self.name == DENIED
    }
}

impl fmt::Display for LogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{}",
            self.timestamp.format(TIMESTAMP_FORMAT),
            self.code,
            self.name
        )
    }
}

impl FromStr for LogEntry {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.splitn(3, ',');
        let (Some(ts), Some(code), Some(name)) = (parts.next(), parts.next(), parts.next()) else {
            return Err("expected TIMESTAMP,CODE,NAME".into());
        };
        let timestamp = NaiveDateTime::parse_from_str(ts, TIMESTAMP_FORMAT)
            .map_err(|e| format!("bad timestamp {ts:?}: {e}"))?
            .and_utc();
        let code = code.parse().map_err(|e: crate::Error| e.to_string())?;
        Ok(Self {
            timestamp,
            code,
            name: name.to_string(),
        })
    }
}

/// Writes one `TIMESTAMP,CODE,NAME` line.
pub fn append_log<W: Write>(entry: &LogEntry, sink: &mut W) -> io::Result<()> {
    writeln!(sink, "{entry}")
}

pub fn parse_log<R: BufRead>(source: R) -> Result<Vec<LogEntry>, LogError> {
    let mut out = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let entry = line.parse().map_err(|reason| LogError::Malformed {
            line: idx + 1,
            reason,
        })?;
        out.push(entry);
    }
    Ok(out)
}

/// Append-only log writer that keeps timestamps non-decreasing.
#[derive(Debug)]
pub struct AuditLog<W: Write> {
    sink: W,
    last: Option<DateTime<Utc>>,
    log_denied: bool,
}

impl<W: Write> AuditLog<W> {
    /// `last` is the newest timestamp already in the sink, if any.
    pub fn new(sink: W, last: Option<DateTime<Utc>>) -> Self {
        Self {
            sink,
            last,
            log_denied: true,
        }
    }

    /// Only accepted cards are written when `false`.
    pub fn log_denied(mut self, yes: bool) -> Self {
        self.log_denied = yes;
        self
    }

    /// Returns whether a line was written.
    pub fn record(&mut self, entry: &LogEntry) -> Result<bool, LogError> {
        if entry.is_denied() && !self.log_denied {
            return Ok(false);
        }
        if let Some(last) = self.last {
            if entry.timestamp < last {
                return Err(LogError::NonMonotonic {
                    last: last.format(TIMESTAMP_FORMAT).to_string(),
                    next: entry.timestamp.format(TIMESTAMP_FORMAT).to_string(),
                });
            }
        }
        append_log(entry, &mut self.sink)?;
        self.last = Some(entry.timestamp);
        Ok(true)
    }

    pub fn into_inner(self) -> W {
        self.sink
    }
}

pub const MAX_ATTEMPTS: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateState {
    Active,
    Disabled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateOutcome {
    Granted,
    Retry,
    LockedOut,
}

impl fmt::Display for GateOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GateOutcome::Granted => "granted",
            GateOutcome::Retry => "retry",
            GateOutcome::LockedOut => "locked_out",
        })
    }
}

/// Three wrong passwords in a row disable the scanner until the factory
/// code is entered.
///
/// Invariant: `attempts_remaining == 0` exactly when the state is
/// [`GateState::Disabled`].
#[derive(Clone, PartialEq, Eq)]
pub struct PasswordGate {
    state: GateState,
    attempts_remaining: u8,
    device_password: String,
    factory_code: String,
}

impl fmt::Debug for PasswordGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PasswordGate")
            .field("state", &self.state)
            .field("attempts_remaining", &self.attempts_remaining)
            .finish_non_exhaustive()
    }
}

impl PasswordGate {
    pub fn new(device_password: impl Into<String>, factory_code: impl Into<String>) -> Self {
        Self {
            state: GateState::Active,
            attempts_remaining: MAX_ATTEMPTS,
            device_password: device_password.into(),
            factory_code: factory_code.into(),
        }
    }

    /// Rebuilds a gate from a persisted snapshot.
    pub fn restore(
        device_password: impl Into<String>,
        factory_code: impl Into<String>,
        snapshot: GateSnapshot,
    ) -> Self {
        let mut gate = Self::new(device_password, factory_code);
        gate.state = snapshot.state;
        gate.attempts_remaining = snapshot.attempts_remaining;
        gate
    }

    pub fn state(&self) -> GateState {
        self.state
    }

    pub fn attempts_remaining(&self) -> u8 {
        self.attempts_remaining
    }

    pub fn snapshot(&self) -> GateSnapshot {
        GateSnapshot {
            state: self.state,
            attempts_remaining: self.attempts_remaining,
        }
    }

    pub fn password_attempt(&mut self, pwd: &str) -> GateOutcome {
        if self.state == GateState::Disabled {
            return GateOutcome::LockedOut;
        }
        if pwd == self.device_password {
            self.attempts_remaining = MAX_ATTEMPTS;
            return GateOutcome::Granted;
        }
        self.attempts_remaining -= 1;
        if self.attempts_remaining == 0 {
            self.state = GateState::Disabled;
            GateOutcome::LockedOut
        } else {
            GateOutcome::Retry
        }
    }

    /// Works from any state; a wrong code changes nothing.
    pub fn factory_reset(&mut self, code: &str) -> bool {
        if code != self.factory_code {
            return false;
        }
        self.state = GateState::Active;
        self.attempts_remaining = MAX_ATTEMPTS;
        true
    }
}

/// Persistable part of a gate (no secrets). Text form:
/// `state=active|disabled` and `attempts=N` on separate lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateSnapshot {
    pub state: GateState,
    pub attempts_remaining: u8,
}

impl Default for GateSnapshot {
    fn default() -> Self {
        Self {
            state: GateState::Active,
            attempts_remaining: MAX_ATTEMPTS,
        }
    }
}

impl fmt::Display for GateSnapshot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let state = match self.state {
            GateState::Active => "active",
            GateState::Disabled => "disabled",
        };
        writeln!(f, "state={state}")?;
        writeln!(f, "attempts={}", self.attempts_remaining)
    }
}

impl FromStr for GateSnapshot {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut state = None;
        let mut attempts = None;
        for line in s.lines().map(str::trim).filter(|l| !l.is_empty()) {
            match line.split_once('=') {
                Some(("state", "active")) => state = Some(GateState::Active),
                Some(("state", "disabled")) => state = Some(GateState::Disabled),
                Some(("attempts", n)) => {
                    attempts = Some(n.parse::<u8>().map_err(|e| format!("attempts: {e}"))?)
                }
                _ => return Err(format!("unrecognised gate line {line:?}")),
            }
        }
        let (Some(state), Some(attempts_remaining)) = (state, attempts) else {
            return Err("gate file needs both state and attempts".into());
        };
        let consistent = match state {
            GateState::Active => (1..=MAX_ATTEMPTS).contains(&attempts_remaining),
            GateState::Disabled => attempts_remaining == 0,
        };
        if !consistent {
            return Err(format!(
                "attempts={attempts_remaining} is inconsistent with the gate state"
            ));
        }
        Ok(Self {
            state,
            attempts_remaining,
        })
    }
}
