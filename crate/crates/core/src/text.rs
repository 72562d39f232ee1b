use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{expand_shortcodes, DomainError};

/// Upper bound on message length, in Unicode scalar values.
pub const MESSAGE_MAX_CHARS: usize = 255;
pub const DISPLAY_NAME_MAX: usize = 32;
pub const STATUS_MAX: usize = 64;

/// A validated message body. `expanded` is always `expand_shortcodes(raw)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageText {
    raw: String,
    expanded: String,
}

impl MessageText {
    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn expanded(&self) -> &str {
        &self.expanded
    }

    /// Rebuilds a text from persisted fields. The stored expansion is kept
    /// as-is so history stays stable if the shortcode table changes.
    pub fn from_stored(raw: String, expanded: String) -> Result<Self, DomainError> {
        check_length(&raw)?;
        Ok(MessageText { raw, expanded })
    }
}

fn check_length(raw: &str) -> Result<(), DomainError> {
    if raw.is_empty() {
        return Err(DomainError::EmptyMessage);
    }
    let len = raw.chars().count();
    if len > MESSAGE_MAX_CHARS {
        return Err(DomainError::MessageTooLong { len });
    }
    Ok(())
}

/// Whitespace-only text is accepted; only the empty string is rejected.
pub fn validate_message_text(raw: &str) -> Result<MessageText, DomainError> {
    check_length(raw)?;
    Ok(MessageText { raw: raw.to_owned(), expanded: expand_shortcodes(raw) })
}

/// Profile or group name: 1 to 32 scalar values, no control characters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct DisplayName(String);

impl DisplayName {
    pub fn parse(s: &str) -> Result<Self, DomainError> {
        let len = s.chars().count();
        if len == 0 {
            return Err(DomainError::InvalidDisplayName("empty"));
        }
        if len > DISPLAY_NAME_MAX {
            return Err(DomainError::InvalidDisplayName("longer than 32 characters"));
        }
        if s.chars().any(|c| (c as u32) < 0x20) {
            return Err(DomainError::InvalidDisplayName("contains control characters"));
        }
        Ok(DisplayName(s.to_owned()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for DisplayName {
    type Error = DomainError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        DisplayName::parse(&value)
    }
}

impl From<DisplayName> for String {
    fn from(d: DisplayName) -> String {
        d.0
    }
}

impl fmt::Display for DisplayName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Free-form profile status line, at most 64 scalar values.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Status(String);

impl Status {
    pub fn parse(s: &str) -> Result<Self, DomainError> {
        let len = s.chars().count();
        if len > STATUS_MAX {
            return Err(DomainError::InvalidStatus { len });
        }
        Ok(Status(s.to_owned()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Status {
    type Error = DomainError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Status::parse(&value)
    }
}

impl From<Status> for String {
    fn from(s: Status) -> String {
        s.0
    }
}
