//! Pure domain logic for the anonroom chat service.
//!
//! Nothing in this crate performs I/O. The store, the HTTP server and the
//! bench harness all build on these types so that validation, addressing
//! and visibility are decided in exactly one place.

mod error;
mod handle;
mod message;
mod scope;
pub mod shortcode;
mod text;
mod timefmt;
mod visibility;
pub mod wire;

pub use error::DomainError;
pub use handle::{new_handle, GroupId, Handle, HANDLE_ATTEMPTS};
pub use message::{Cursor, Group, Message, Tombstone};
pub use scope::{canonical_private_scope, PrivatePair, Scope};
pub use shortcode::expand_shortcodes;
pub use text::{
    validate_message_text, DisplayName, MessageText, Status, DISPLAY_NAME_MAX, MESSAGE_MAX_CHARS, STATUS_MAX,
};
pub use timefmt::{format_timestamp, MAX_UTC_OFFSET_MIN};
pub use visibility::{in_scope, visible_to, ViewerTombstones};
