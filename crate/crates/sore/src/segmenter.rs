//! HTML → ordered text segments plus document metadata.
//!
//! A segment is a contiguous text run under one block-level ancestor (`p`,
//! `li`, headings, table cells, ...) or under a leaf `div`/`section` that has
//! direct text. Inline markup is flattened; `script`/`style`/`noscript`/
//! `template`, comments, and `hidden` subtrees never contribute text. The
//! parser recovers from arbitrary malformed input, so there is no parse error
//! path — only "nothing survived".

use scraper::{ElementRef, Html, Node, Selector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SegmentError {
    #[error("no text segments survived filtering")]
    EmptyDocument,
}

/// One extracted text block with structural provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    /// Consecutive from 0, strictly increasing in document order.
    pub id: usize,
    /// Whitespace-normalized, non-empty.
    pub text: String,
    /// Element names from the root to the owning element.
    pub tag_path: Vec<String>,
    /// Tree depth of the owning element; equals `tag_path.len()`.
    pub depth: usize,
    /// Byte span of `text` inside the document's extracted text (all segment
    /// texts joined by single newlines).
    pub char_span: (usize, usize),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentMetadata {
    pub title: Option<String>,
    pub description: Option<String>,
    /// Non-empty members of {title, description} joined by one newline;
    /// empty only when both are absent.
    pub combined_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmenterConfig {
    /// Segments shorter than this (in chars, after normalization) are dropped.
    pub min_segment_chars: usize,
    /// Further split block runs at sentence boundaries (`.?!` + space +
    /// uppercase).
    pub split_sentences: bool,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        Self {
            min_segment_chars: 3,
            split_sentences: false,
        }
    }
}

/// Block elements that own a text run outright.
const BLOCK_TAGS: &[&str] = &[
    "p", "li", "h1", "h2", "h3", "h4", "h5", "h6", "td", "blockquote", "figcaption", "dd", "dt",
];

/// Containers that own a run only when they are "leaf" holders of direct text.
const LEAF_CONTAINER_TAGS: &[&str] = &["div", "section", "body"];

/// Subtrees that never contribute text.
const EXCLUDED_TAGS: &[&str] = &["script", "style", "noscript", "template"];

/// Structural elements: entering one breaks the enclosing run. Everything not
/// listed here (spans, links, emphasis, unknown inline tags) is flattened.
const STRUCTURAL_TAGS: &[&str] = &[
    "p", "li", "h1", "h2", "h3", "h4", "h5", "h6", "td", "blockquote", "figcaption", "dd", "dt",
    "div", "section", "body", "html", "head", "ul", "ol", "dl", "table", "thead", "tbody",
    "tfoot", "tr", "th", "caption", "nav", "article", "main", "aside", "header", "footer",
    "form", "fieldset", "figure", "details", "summary", "address", "pre", "hr", "select",
    "option", "iframe", "svg", "video", "audio", "canvas", "object",
];

fn is_block(tag: &str) -> bool {
    BLOCK_TAGS.contains(&tag)
}

fn is_structural(tag: &str) -> bool {
    STRUCTURAL_TAGS.contains(&tag)
}

fn normalize_ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

struct RawRun {
    tag_path: Vec<String>,
    text: String,
}

struct Walker {
    runs: Vec<RawRun>,
    path: Vec<String>,
    /// Open text buffer of the nearest collecting ancestor, if any.
    current: Option<String>,
}

impl Walker {
    fn visit_children(&mut self, element: ElementRef<'_>) {
        for child in element.children() {
            match child.value() {
                Node::Text(t) => {
                    if let Some(buf) = self.current.as_mut() {
                        buf.push_str(t);
                    }
                }
                Node::Element(_) => {
                    let child_ref = ElementRef::wrap(child).expect("element node");
                    let tag = child_ref.value().name().to_ascii_lowercase();
                    if EXCLUDED_TAGS.contains(&tag.as_str())
                        || child_ref.value().attr("hidden").is_some()
                    {
                        continue;
                    }
                    if is_structural(&tag) {
                        // Boundary: the enclosing run is interrupted, emit
                        // what it has so far and restart after the child.
                        let partial = self.current.as_mut().map(std::mem::take);
                        if let Some(text) = partial {
                            self.flush(text);
                        }
                        self.path.push(tag.clone());
                        self.visit_structural(child_ref, &tag);
                        self.path.pop();
                    } else {
                        // Inline: flatten into the current run.
                        self.visit_children(child_ref);
                    }
                }
                _ => {}
            }
        }
    }

    fn visit_structural(&mut self, element: ElementRef<'_>, tag: &str) {
        let collects =
            is_block(tag) || (LEAF_CONTAINER_TAGS.contains(&tag) && has_direct_text(element));
        let saved = std::mem::replace(&mut self.current, collects.then(String::new));
        self.visit_children(element);
        let finished = std::mem::replace(&mut self.current, saved);
        if let Some(text) = finished {
            self.flush(text);
        }
    }

    fn flush(&mut self, raw: String) {
        let text = normalize_ws(&raw);
        if !text.is_empty() {
            self.runs.push(RawRun {
                tag_path: self.path.clone(),
                text,
            });
        }
    }
}

fn has_direct_text(element: ElementRef<'_>) -> bool {
    let mut saw_text = false;
    for child in element.children() {
        match child.value() {
            Node::Text(t) => {
                if !t.trim().is_empty() {
                    saw_text = true;
                }
            }
            Node::Element(el) => {
                if is_structural(&el.name().to_ascii_lowercase()) {
                    // A structural child makes this a non-leaf container.
                    return false;
                }
            }
            _ => {}
        }
    }
    saw_text
}

/// Sentence boundaries: one or more of `.?!`, whitespace, then an uppercase
/// letter. Deliberately simple; abbreviations are not special-cased.
fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut pieces = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        if matches!(chars[i], '.' | '?' | '!') {
            let mut j = i + 1;
            while j < chars.len() && matches!(chars[j], '.' | '?' | '!') {
                j += 1;
            }
            let mut k = j;
            while k < chars.len() && chars[k].is_whitespace() {
                k += 1;
            }
            if k > j && k < chars.len() && chars[k].is_uppercase() {
                pieces.push(chars[start..j].iter().collect::<String>());
                start = k;
                i = k;
                continue;
            }
            i = j;
        } else {
            i += 1;
        }
    }
    if start < chars.len() {
        pieces.push(chars[start..].iter().collect::<String>());
    }
    pieces
        .into_iter()
        .map(|p| p.trim().to_string())
        .filter(|p| !p.is_empty())
        .collect()
}

/// Parse HTML into metadata and ordered segments. Malformed input is not an
/// error; an input with no usable text is.
pub fn parse_document(
    html: &str,
    config: &SegmenterConfig,
) -> Result<(DocumentMetadata, Vec<Segment>), SegmentError> {
    let doc = Html::parse_document(html);
    let metadata = metadata_from(&doc);

    let mut walker = Walker {
        runs: Vec::new(),
        path: Vec::new(),
        current: None,
    };
    let root = doc.root_element();
    walker.path.push(root.value().name().to_ascii_lowercase());
    walker.visit_structural(root, &root.value().name().to_ascii_lowercase());
    walker.path.pop();

    let mut segments = Vec::new();
    let mut offset = 0usize;
    for run in walker.runs {
        let texts = if config.split_sentences {
            split_sentences(&run.text)
        } else {
            vec![run.text]
        };
        for text in texts {
            if text.chars().count() < config.min_segment_chars {
                continue;
            }
            let start = offset;
            let end = start + text.len();
            offset = end + 1; // single newline joins the extracted text
            segments.push(Segment {
                id: segments.len(),
                text,
                tag_path: run.tag_path.clone(),
                depth: run.tag_path.len(),
                char_span: (start, end),
            });
        }
    }

    if segments.is_empty() {
        return Err(SegmentError::EmptyDocument);
    }
    Ok((metadata, segments))
}

/// Metadata only; never fails. Title falls back `<title>` → `og:title` →
/// first `<h1>`; description falls back `meta[name=description]` →
/// `og:description`.
pub fn extract_metadata(html: &str) -> DocumentMetadata {
    metadata_from(&Html::parse_document(html))
}

fn metadata_from(doc: &Html) -> DocumentMetadata {
    let title_sel = Selector::parse("title").expect("static selector");
    let h1_sel = Selector::parse("h1").expect("static selector");
    let meta_sel = Selector::parse("meta").expect("static selector");

    let mut og_title = None;
    let mut meta_description = None;
    let mut og_description = None;
    for meta in doc.select(&meta_sel) {
        let content = match meta.value().attr("content") {
            Some(c) => normalize_ws(c),
            None => continue,
        };
        if content.is_empty() {
            continue;
        }
        let key = meta
            .value()
            .attr("property")
            .or_else(|| meta.value().attr("name"))
            .map(str::to_ascii_lowercase);
        match key.as_deref() {
            Some("og:title") if og_title.is_none() => og_title = Some(content),
            Some("description") if meta_description.is_none() => {
                meta_description = Some(content)
            }
            Some("og:description") if og_description.is_none() => {
                og_description = Some(content)
            }
            _ => {}
        }
    }

    let doc_title = doc
        .select(&title_sel)
        .next()
        .map(|t| normalize_ws(&t.text().collect::<String>()))
        .filter(|t| !t.is_empty());
    let h1 = doc
        .select(&h1_sel)
        .next()
        .map(|t| normalize_ws(&t.text().collect::<String>()))
        .filter(|t| !t.is_empty());

    let title = doc_title.or(og_title).or(h1);
    let description = meta_description.or(og_description);

    let combined_text = [title.as_deref(), description.as_deref()]
        .into_iter()
        .flatten()
        .collect::<Vec<_>>()
        .join("\n");

    DocumentMetadata {
        title,
        description,
        combined_text,
    }
}
