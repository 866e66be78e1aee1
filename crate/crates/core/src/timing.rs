//! Execution time of each language construct.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::quantity::{parse_rational, Duration};

/// The language constructs that take time to execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Construct {
    Var,
    Assign,
    FieldAccess,
    Const,
    BinOp,
    Decl,
    Construct,
    Call,
    If,
    While,
    Repeat,
    Skip,
    Seq,
}

impl Construct {
    pub const ALL: [Construct; 13] = [
        Construct::Var,
        Construct::Assign,
        Construct::FieldAccess,
        Construct::Const,
        Construct::BinOp,
        Construct::Decl,
        Construct::Construct,
        Construct::Call,
        Construct::If,
        Construct::While,
        Construct::Repeat,
        Construct::Skip,
        Construct::Seq,
    ];

    /// Key used in timing files, e.g. `t_var`.
    pub fn key(self) -> &'static str {
        match self {
            Construct::Var => "t_var",
            Construct::Assign => "t_assign",
            Construct::FieldAccess => "t_fieldaccess",
            Construct::Const => "t_const",
            Construct::BinOp => "t_binop",
            Construct::Decl => "t_decl",
            Construct::Construct => "t_construct",
            Construct::Call => "t_call",
            Construct::If => "t_if",
            Construct::While => "t_while",
            Construct::Repeat => "t_repeat",
            Construct::Skip => "t_skip",
            Construct::Seq => "t_seq",
        }
    }
}

impl fmt::Display for Construct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Construct {
    type Err = TimingError;

    fn from_str(s: &str) -> Result<Construct, TimingError> {
        Construct::ALL.into_iter().find(|c| c.key() == s).ok_or_else(|| TimingError::UnknownKey(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimingError {
    #[error("{line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("unknown timing key `{0}`")]
    UnknownKey(String),
    #[error("`{key}`: {message}")]
    Value { key: String, message: String },
    #[error("`{key}` is negative")]
    Negative { key: String },
}

/// Duration of every construct. Unlisted constructs take no time.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TimingTable {
    entries: BTreeMap<Construct, Duration>,
}

impl TimingTable {
    /// All constructs take zero time.
    pub fn zero() -> TimingTable {
        TimingTable::default()
    }

    /// Every construct takes `d`.
    pub fn uniform(d: Duration) -> TimingTable {
        let mut t = TimingTable::zero();
        for c in Construct::ALL {
            t.set(c, d.clone()).expect("timing must be non-negative");
        }
        t
    }

    pub fn get(&self, c: Construct) -> Duration {
        self.entries.get(&c).cloned().unwrap_or_default()
    }

    pub fn set(&mut self, c: Construct, d: Duration) -> Result<(), TimingError> {
        if d.is_negative() {
            return Err(TimingError::Negative { key: c.key().to_string() });
        }
        // zero entries are absent so that equal tables compare equal
        if d.is_zero() {
            self.entries.remove(&c);
        } else {
            self.entries.insert(c, d);
        }
        Ok(())
    }

    pub fn with(mut self, c: Construct, d: Duration) -> TimingTable {
        self.set(c, d).expect("timing must be non-negative");
        self
    }

    pub fn is_zero(&self) -> bool {
        self.entries.values().all(Duration::is_zero)
    }

    /// Reads a timing file: a flat table of `t_* = "<rational>"` entries.
    pub fn parse(text: &str) -> Result<TimingTable, Vec<TimingError>> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            let (line, column, message) = crate::hw::toml_syntax_error(text, &e);
            vec![TimingError::Syntax { line, column, message }]
        })?;
        let mut timing = TimingTable::zero();
        let mut errors = Vec::new();
        for (key, value) in &table {
            let construct = match key.parse::<Construct>() {
                Ok(c) => c,
                Err(e) => {
                    errors.push(e);
                    continue;
                }
            };
            let text = match value {
                toml::Value::String(s) => s.clone(),
                toml::Value::Integer(n) => n.to_string(),
                other => {
                    errors.push(TimingError::Value { key: key.clone(), message: format!("expected a rational string, found `{other}`") });
                    continue;
                }
            };
            match parse_rational(&text) {
                Ok(r) => {
                    if let Err(e) = timing.set(construct, Duration::new(r)) {
                        errors.push(e);
                    }
                }
                Err(e) => errors.push(TimingError::Value { key: key.clone(), message: e.to_string() }),
            }
        }
        if errors.is_empty() {
            Ok(timing)
        } else {
            Err(errors)
        }
    }

    /// Renders the table in the file format, listing every construct.
    pub fn to_toml(&self) -> String {
        Construct::ALL.iter().map(|c| format!("{} = \"{}\"\n", c.key(), self.get(*c).to_ratio_string())).collect()
    }
}
