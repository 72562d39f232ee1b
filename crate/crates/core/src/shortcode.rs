//! Smiley shortcode expansion.
//!
//! The table is fixed. Stored messages keep both the raw text and its
//! expansion, so editing this table never rewrites existing history.

/// Version of [`SHORTCODES`]; bump whenever an entry changes.
pub const TABLE_VERSION: u32 = 1;

pub const SHORTCODES: [(&str, char); 6] = [
    (":)", '\u{1F642}'),
    (":(", '\u{1F641}'),
    (":D", '\u{1F600}'),
    (";)", '\u{1F609}'),
    ("<3", '\u{2764}'),
    (":P", '\u{1F61B}'),
];

fn longest_match(rest: &str) -> Option<(&'static str, char)> {
    SHORTCODES.iter().filter(|(code, _)| rest.starts_with(code)).max_by_key(|(code, _)| code.len()).copied()
}

/// Replaces every shortcode with its emoji in one left-to-right pass,
/// preferring the longest code at each position. Produced emoji are never
/// re-scanned.
pub fn expand_shortcodes(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    while let Some(c) = rest.chars().next() {
        match longest_match(rest) {
            Some((code, emoji)) => {
                out.push(emoji);
                rest = &rest[code.len()..];
            }
            None => {
                out.push(c);
                rest = &rest[c.len_utf8()..];
            }
        }
    }
    out
}
