//! Outlier phrase lexicons.
//!
//! Each group names one category of unwanted content (the name doubles as the
//! removal reason) and carries the phrases whose embeddings form its semantic
//! cluster. The builtin set ships thirteen categories covering dates, bylines,
//! comments, navigation, legal text, commercial pitches, and page furniture.
//!
//! Groups files are sectioned plain text, diff-friendly for lexicon tuning:
//!
//! ```text
//! # comment
//! [Group Name]
//! phrase one
//! phrase two
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GroupsError {
    #[error("groups file, line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot read groups file: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutlierGroup {
    pub name: String,
    pub phrases: Vec<String>,
}

const BUILTIN: &[(&str, &[&str])] = &[
    (
        "Date-time Related Content",
        &[
            "Date",
            "21.02.2023",
            "21.02.2024",
            "21.02.2025",
            "Published at",
            "Last updated",
            "Time",
            "Published",
            "Updated",
            "dd/mm/yyyy",
            "mm/dd/yyyy",
            "yyyy-mm-dd",
            "dd.mm.yy",
        ],
    ),
    (
        "Authorship Information",
        &["Author", "Writer", "Contributor", "Editor", "Posts", "Written by"],
    ),
    (
        "Comment Sections",
        &["Comment", "Reply", "Feedback", "Discussion", "Leave a comment"],
    ),
    (
        "Source Attribution",
        &["Source", "Website", "Publisher", "URL", "Link"],
    ),
    (
        "Related Content Links",
        &[
            "Related",
            "Read more",
            "Look:",
            "Similar",
            "See also",
            "Also read",
            "Read next",
            "Get more",
            "Frequently asked questions",
        ],
    ),
    (
        "Calls to Action",
        &[
            "CTA",
            "Buy",
            "Shop",
            "Order",
            "Click here",
            "Check out",
            "View more",
            "Visit",
            "Let me know",
            "Download",
            "Subscribe",
            "Sign up",
            "Contact us",
            "Receive notifications",
        ],
    ),
    (
        "Navigation Elements",
        &["Breadcrumbs", "Home >", "Home > About", "Navigation", "Home", "About"],
    ),
    (
        "Contact Information",
        &["Contact", "Email", "Phone", "Address", "Contact us"],
    ),
    (
        "Social Media Elements",
        &[
            "Social",
            "Facebook",
            "Twitter",
            "Instagram",
            "LinkedIn",
            "TikTok",
            "Share",
            "Like",
            "Follow",
            "3425 views",
        ],
    ),
    (
        "Legal Content",
        &[
            "Legal",
            "Terms",
            "Privacy",
            "Policy",
            "Disclaimer",
            "Cookie",
            "Accept",
            "Settings",
        ],
    ),
    (
        "Page Infrastructure",
        &[
            "Footer",
            "Copyright",
            "All rights reserved",
            "Search",
            "Find",
            "Look for",
            "Explore",
            "Error",
            "404",
            "Not found",
            "Page not found",
            "Try again later",
        ],
    ),
    (
        "Commercial Content",
        &[
            "Advertisement",
            "Sponsored",
            "Promotion",
            "Sponsor",
            "Subscription",
            "Subscribe",
            "Newsletter",
            "Membership",
            "Join",
            "Affiliate",
            "Affiliate links",
            "Disclosure",
            "Affiliate Disclosure",
        ],
    ),
    (
        "Miscellaneous Boilerplate",
        &[
            "Refresh this page",
            "Login required",
            "License",
            "Enter your email",
            "Thank you for reading",
            "Subscribe for free",
        ],
    ),
];

/// The production default lexicon: 13 categories. Phrases are deduplicated
/// within a category; the same phrase may appear in several categories
/// ("Contact us" is both a call to action and contact information).
pub fn builtin_groups() -> Vec<OutlierGroup> {
    BUILTIN
        .iter()
        .map(|(name, phrases)| OutlierGroup {
            name: (*name).to_string(),
            phrases: phrases.iter().map(|p| (*p).to_string()).collect(),
        })
        .collect()
}

/// Parse the sectioned plain-text groups format.
pub fn parse_groups(text: &str) -> Result<Vec<OutlierGroup>, GroupsError> {
    let mut groups: Vec<OutlierGroup> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| GroupsError::Parse {
                line: line_no,
                message: "unterminated group header (missing ']')".into(),
            })?;
            let name = name.trim();
            if name.is_empty() {
                return Err(GroupsError::Parse {
                    line: line_no,
                    message: "empty group name".into(),
                });
            }
            if groups.iter().any(|g| g.name == name) {
                return Err(GroupsError::Parse {
                    line: line_no,
                    message: format!("duplicate group name {name:?}"),
                });
            }
            if let Some(prev) = groups.last() {
                if prev.phrases.is_empty() {
                    return Err(GroupsError::Parse {
                        line: line_no,
                        message: format!("group {:?} has no phrases", prev.name),
                    });
                }
            }
            groups.push(OutlierGroup {
                name: name.to_string(),
                phrases: Vec::new(),
            });
        } else {
            let group = groups.last_mut().ok_or_else(|| GroupsError::Parse {
                line: line_no,
                message: "phrase before any [Group Name] header".into(),
            })?;
            // Within-category duplicates are dropped silently.
            if !group.phrases.iter().any(|p| p == line) {
                group.phrases.push(line.to_string());
            }
        }
    }
    match groups.last() {
        None => Err(GroupsError::Parse {
            line: text.lines().count().max(1),
            message: "no groups defined".into(),
        }),
        Some(last) if last.phrases.is_empty() => Err(GroupsError::Parse {
            line: text.lines().count().max(1),
            message: format!("group {:?} has no phrases", last.name),
        }),
        Some(_) => Ok(groups),
    }
}

pub fn load_groups(path: impl AsRef<std::path::Path>) -> Result<Vec<OutlierGroup>, GroupsError> {
    parse_groups(&std::fs::read_to_string(path)?)
}

/// Render groups back to the file format. `parse_groups(render_groups(g)) == g`.
pub fn render_groups(groups: &[OutlierGroup]) -> String {
    let mut out = String::new();
    for group in groups {
        out.push('[');
        out.push_str(&group.name);
        out.push_str("]\n");
        for phrase in &group.phrases {
            out.push_str(phrase);
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

/// Flatten groups to `(group_name, phrase)` in a stable order. The position
/// in this table is the `ref_id` carried by outlier points in the index.
pub fn flatten_phrases(groups: &[OutlierGroup]) -> Vec<(String, String)> {
    groups
        .iter()
        .flat_map(|g| g.phrases.iter().map(|p| (g.name.clone(), p.clone())))
        .collect()
}
