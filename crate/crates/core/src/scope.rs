use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{DomainError, GroupId, Handle};

/// Two distinct handles in ascending order. Both parties of a private
/// conversation address it by the same pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "[Handle; 2]", into = "[Handle; 2]")]
pub struct PrivatePair([Handle; 2]);

impl PrivatePair {
    pub fn new(a: Handle, b: Handle) -> Result<Self, DomainError> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Ok(PrivatePair([a, b])),
            std::cmp::Ordering::Greater => Ok(PrivatePair([b, a])),
            std::cmp::Ordering::Equal => Err(DomainError::SelfScope),
        }
    }

    pub fn first(&self) -> &Handle {
        &self.0[0]
    }

    pub fn second(&self) -> &Handle {
        &self.0[1]
    }

    pub fn contains(&self, h: &Handle) -> bool {
        self.0.iter().any(|p| p == h)
    }

    /// The member of the pair that is not `h`, if `h` is a member.
    pub fn peer_of(&self, h: &Handle) -> Option<&Handle> {
        if &self.0[0] == h {
            Some(&self.0[1])
        } else if &self.0[1] == h {
            Some(&self.0[0])
        } else {
            None
        }
    }
}

impl TryFrom<[Handle; 2]> for PrivatePair {
    type Error = DomainError;

    /// Persisted pairs must already be canonical.
    fn try_from([a, b]: [Handle; 2]) -> Result<Self, Self::Error> {
        if a < b {
            Ok(PrivatePair([a, b]))
        } else {
            Err(DomainError::SelfScope)
        }
    }
}

impl From<PrivatePair> for [Handle; 2] {
    fn from(p: PrivatePair) -> Self {
        p.0
    }
}

/// Addressing of a message.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Scope {
    Public,
    Group { id: GroupId },
    Private { pair: PrivatePair },
}

impl Scope {
    pub fn group(id: GroupId) -> Self {
        Scope::Group { id }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Scope::Public => "public",
            Scope::Group { .. } => "group",
            Scope::Private { .. } => "private",
        }
    }
}

/// `public`, `group:<id>` or `private:<a>,<b>`.
impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::Public => f.write_str("public"),
            Scope::Group { id } => write!(f, "group:{id}"),
            Scope::Private { pair } => write!(f, "private:{},{}", pair.first(), pair.second()),
        }
    }
}

pub fn canonical_private_scope(a: Handle, b: Handle) -> Result<Scope, DomainError> {
    Ok(Scope::Private { pair: PrivatePair::new(a, b)? })
}
