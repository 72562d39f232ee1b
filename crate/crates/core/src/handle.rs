use std::fmt;

use serde::{Deserialize, Serialize};

use crate::DomainError;

const HANDLE_PREFIX: &str = "guest-";
const GROUP_PREFIX: &str = "g-";

/// Number of candidates [`new_handle`] tries before giving up.
pub const HANDLE_ATTEMPTS: usize = 100;

fn is_lower_hex6(s: &str) -> bool {
    s.len() == 6 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

fn hex6(bytes: [u8; 3]) -> String {
    format!("{:02x}{:02x}{:02x}", bytes[0], bytes[1], bytes[2])
}

/// Pseudonymous identity of a participant, `guest-` plus six lowercase hex
/// digits. Handles are the only identity the service knows about.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Handle(String);

impl Handle {
    pub fn parse(s: &str) -> Result<Self, DomainError> {
        match s.strip_prefix(HANDLE_PREFIX) {
            Some(rest) if is_lower_hex6(rest) => Ok(Handle(s.to_owned())),
            _ => Err(DomainError::InvalidHandle(s.to_owned())),
        }
    }

    pub fn from_entropy(bytes: [u8; 3]) -> Self {
        Handle(format!("{HANDLE_PREFIX}{}", hex6(bytes)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Handle {
    type Error = DomainError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Handle::parse(&value)
    }
}

impl From<Handle> for String {
    fn from(h: Handle) -> String {
        h.0
    }
}

impl fmt::Display for Handle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Generates a handle from successive 3-byte entropy draws, skipping any
/// candidate for which `taken` returns true. Fails after
/// [`HANDLE_ATTEMPTS`] consecutive collisions.
pub fn new_handle(
    mut entropy: impl FnMut() -> [u8; 3],
    taken: impl Fn(&Handle) -> bool,
) -> Result<Handle, DomainError> {
    for _ in 0..HANDLE_ATTEMPTS {
        let candidate = Handle::from_entropy(entropy());
        if !taken(&candidate) {
            return Ok(candidate);
        }
    }
    Err(DomainError::HandleSpaceExhausted(HANDLE_ATTEMPTS))
}

/// Server-assigned group identifier, `g-` plus six lowercase hex digits.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GroupId(String);

impl GroupId {
    pub fn parse(s: &str) -> Result<Self, DomainError> {
        match s.strip_prefix(GROUP_PREFIX) {
            Some(rest) if is_lower_hex6(rest) => Ok(GroupId(s.to_owned())),
            _ => Err(DomainError::InvalidGroupId(s.to_owned())),
        }
    }

    pub fn from_entropy(bytes: [u8; 3]) -> Self {
        GroupId(format!("{GROUP_PREFIX}{}", hex6(bytes)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for GroupId {
    type Error = DomainError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        GroupId::parse(&value)
    }
}

impl From<GroupId> for String {
    fn from(g: GroupId) -> String {
        g.0
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}
