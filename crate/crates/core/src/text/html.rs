//! Boilerplate removal: keep dense, long text blocks; drop page chrome.

use super::entities::decode_entities;

/// Subtrees dropped wholesale.
const SKIPPED: &[&str] = &[
    "script", "style", "nav", "header", "footer", "form", "head", "noscript", "template", "svg",
    "iframe", "select", "button",
];

/// Tags whose boundaries close the current text block.
const BLOCK: &[&str] = &[
    "address", "article", "aside", "blockquote", "body", "br", "caption", "dd", "details", "dialog",
    "div", "dl", "dt", "fieldset", "figcaption", "figure", "h1", "h2", "h3", "h4", "h5", "h6", "hr",
    "html", "li", "main", "ol", "p", "pre", "section", "summary", "table", "tbody", "td", "tfoot",
    "th", "thead", "tr", "ul",
];

/// Elements whose content is raw text up to the matching end tag.
const RAW_TEXT: &[&str] = &["script", "style", "textarea", "title", "xmp"];

const VOID: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "source", "track", "wbr",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractConfig {
    pub min_words: usize,
    /// Words per tag inside a block.
    pub min_density: f64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self { min_words: 10, min_density: 0.5 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Extraction {
    /// Kept blocks joined by newlines.
    pub text: String,
    /// Replacement characters introduced by lossy UTF-8 decoding.
    pub replacement_chars: usize,
}

#[derive(Debug, Default)]
struct Block {
    text: String,
    tags: usize,
}

impl Block {
    fn words(&self) -> usize {
        self.text.split_whitespace().count()
    }
}

pub fn extract_main_text(html: &[u8]) -> Extraction {
    extract_main_text_with(html, &ExtractConfig::default())
}

pub fn extract_main_text_with(html: &[u8], cfg: &ExtractConfig) -> Extraction {
    let (source, replacement_chars) = match std::str::from_utf8(html) {
        Ok(s) => (std::borrow::Cow::Borrowed(s), 0),
        Err(_) => {
            let lossy = String::from_utf8_lossy(html);
            let introduced = lossy.matches('\u{FFFD}').count()
                - html.windows(3).filter(|w| *w == "\u{FFFD}".as_bytes()).count();
            log::warn!("lossy UTF-8 decode introduced {introduced} replacement characters");
            (lossy, introduced)
        }
    };

    let blocks = collect_blocks(&source);
    let blocks: Vec<Block> = blocks
        .into_iter()
        .map(|b| Block { text: collapse(&decode_entities(&b.text)), tags: b.tags })
        .filter(|b| !b.text.is_empty())
        .collect();

    let dense: Vec<bool> = blocks
        .iter()
        .map(|b| {
            let words = b.words();
            let density = words as f64 / b.tags.max(1) as f64;
            words >= cfg.min_words && density >= cfg.min_density
        })
        .collect();
    let keep: Vec<bool> = (0..blocks.len())
        .map(|i| dense[i] || (i > 0 && i + 1 < blocks.len() && dense[i - 1] && dense[i + 1]))
        .collect();

    let text = blocks
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(b, _)| defang_tags(&b.text))
        .collect::<Vec<_>>()
        .join("\n");
    Extraction { text, replacement_chars }
}

fn collapse(s: &str) -> String {
    s.split(|c: char| c.is_whitespace() || c == '\u{a0}')
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Decoded text like `&lt;b&gt;` must not read as markup downstream.
fn defang_tags(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        out.push(c);
        if c == '<' && chars.peek().is_some_and(|n| n.is_ascii_alphabetic() || *n == '/' || *n == '!') {
            out.push(' ');
        }
    }
    out
}

enum Token<'a> {
    Text(&'a str),
    Start { name: String, self_closing: bool },
    End { name: String },
}

/// Splits the page into raw (still entity-encoded) blocks.
fn collect_blocks(src: &str) -> Vec<Block> {
    let mut blocks = Vec::new();
    let mut current = Block::default();
    let mut skip: Option<(String, usize)> = None;

    let flush = |current: &mut Block, blocks: &mut Vec<Block>| {
        if !current.text.trim().is_empty() {
            blocks.push(std::mem::take(current));
        } else {
            current.text.clear();
            current.tags = 0;
        }
    };

    let mut tokens = Tokenizer { src, pos: 0 };
    while let Some(tok) = tokens.next_token() {
        if let Some((name, depth)) = &mut skip {
            match &tok {
                Token::Start { name: n, self_closing: false } if n == name => *depth += 1,
                Token::End { name: n } if n == name => {
                    *depth -= 1;
                    if *depth == 0 {
                        skip = None;
                    }
                }
                _ => {}
            }
            continue;
        }
        match tok {
            Token::Text(t) => current.text.push_str(t),
            Token::Start { name, self_closing } => {
                if SKIPPED.contains(&name.as_str()) {
                    if !self_closing && !VOID.contains(&name.as_str()) {
                        skip = Some((name, 1));
                    }
                    continue;
                }
                if BLOCK.contains(&name.as_str()) {
                    flush(&mut current, &mut blocks);
                }
                current.tags += 1;
            }
            Token::End { name } => {
                if BLOCK.contains(&name.as_str()) {
                    flush(&mut current, &mut blocks);
                }
            }
        }
    }
    flush(&mut current, &mut blocks);
    blocks
}

struct Tokenizer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Tokenizer<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn next_token(&mut self) -> Option<Token<'a>> {
        loop {
            let rest = self.rest();
            if rest.is_empty() {
                return None;
            }
            if !rest.starts_with('<') {
                let end = find_tag_open(rest).unwrap_or(rest.len());
                self.pos += end;
                return Some(Token::Text(&rest[..end]));
            }
            if rest.starts_with("<!--") {
                self.pos += rest.find("-->").map_or(rest.len(), |i| i + 3);
                continue;
            }
            if rest.starts_with("<!") || rest.starts_with("<?") {
                self.pos += rest.find('>').map_or(rest.len(), |i| i + 1);
                continue;
            }
            let (is_end, after) = match rest.strip_prefix("</") {
                Some(a) => (true, a),
                None => (false, &rest[1..]),
            };
            let name_len = after
                .find(|c: char| !(c.is_ascii_alphanumeric() || c == '-' || c == ':'))
                .unwrap_or(after.len());
            if name_len == 0 {
                // stray '<' is text
                self.pos += 1;
                return Some(Token::Text("<"));
            }
            let name = after[..name_len].to_ascii_lowercase();
            let tag_len = tag_end(rest);
            let self_closing = rest[..tag_len].trim_end_matches('>').ends_with('/');
            self.pos += tag_len;
            if is_end {
                return Some(Token::End { name });
            }
            if RAW_TEXT.contains(&name.as_str()) && !self_closing {
                // Raw-text content is never page text; jump past the end tag.
                let close = format!("</{name}");
                let lower = self.rest().to_ascii_lowercase();
                self.pos += lower.find(&close).unwrap_or(lower.len());
                self.pos += self.rest().find('>').map_or(self.rest().len(), |i| i + 1);
                return Some(Token::Start { name, self_closing: true });
            }
            return Some(Token::Start { name, self_closing });
        }
    }
}

/// Index of the next `<` that opens a tag, comment or declaration.
fn find_tag_open(s: &str) -> Option<usize> {
    let bytes = s.as_bytes();
    let mut from = 0;
    while let Some(i) = s[from..].find('<') {
        let idx = from + i;
        match bytes.get(idx + 1) {
            Some(b) if b.is_ascii_alphabetic() || *b == b'/' || *b == b'!' || *b == b'?' => return Some(idx),
            _ => from = idx + 1,
        }
    }
    None
}

/// Length of the tag starting at `s[0] == '<'`, honouring quoted attributes.
fn tag_end(s: &str) -> usize {
    let mut quote: Option<char> = None;
    for (i, c) in s.char_indices().skip(1) {
        match quote {
            Some(q) if c == q => quote = None,
            Some(_) => {}
            None if c == '"' || c == '\'' => quote = Some(c),
            None if c == '>' => return i + 1,
            None => {}
        }
    }
    s.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    const PARA: &str = "Faith communities across the region gathered on Sunday to plant native trees \
        along the river banks, restore wetlands that had been drained decades ago, and pledge to \
        reduce their energy use by half before the end of the decade, a commitment that organisers \
        described as both practical and deeply rooted in their shared care for creation and neighbours.";

    #[test]
    fn keeps_main_paragraph_only() {
        assert_eq!(PARA.split_whitespace().count(), 58);
        let html = format!(
            "<!DOCTYPE html><html><head><title>News</title><style>p {{ color: red }}</style></head>\
             <body><header><a href='/'>Home</a> <a href='/about'>About us and our long history of campaigning</a></header>\
             <nav><ul><li><a href='/news'>News</a></li><li><a href='/donate'>Donate</a></li></ul></nav>\
             <div class='crumbs'><a href='/'>Home</a> &raquo; <a href='/news'>News</a></div>\
             <article><p>{PARA}</p></article>\
             <footer><p>Copyright 2024 Example Foundation. All rights reserved. Registered charity number 123456 in England and Wales.</p></footer>\
             <script>var x = '<p>not content</p>';</script></body></html>"
        );
        let out = extract_main_text(html.as_bytes());
        assert_eq!(out.text, PARA);
    }

    #[test]
    fn empty_body() {
        assert_eq!(extract_main_text(b"<html><body></body></html>").text, "");
        assert_eq!(extract_main_text(b"").text, "");
    }

    #[test]
    fn decodes_entities() {
        let out = extract_main_text(
            b"<p>A&amp;B are two partner groups who work together on river clean-up days every spring.</p>",
        );
        assert!(out.text.contains("A&B"), "{}", out.text);
    }

    #[test]
    fn link_lists_are_dropped() {
        let html = b"<div><ul><li><a>One</a></li><li><a>Two</a></li><li><a>Three</a></li><li><a>Four</a></li>\
            <li><a>Five</a></li><li><a>Six</a></li><li><a>Seven</a></li><li><a>Eight</a></li><li><a>Nine</a></li>\
            <li><a>Ten</a></li><li><a>Eleven</a></li></ul></div>";
        assert_eq!(extract_main_text(html).text, "");
    }

    #[test]
    fn short_block_between_dense_blocks_is_kept() {
        let html = format!("<p>{PARA}</p><h2>Short heading</h2><p>{PARA}</p>");
        let out = extract_main_text(html.as_bytes());
        assert_eq!(out.text, format!("{PARA}\nShort heading\n{PARA}"));
    }

    #[test]
    fn lossy_decoding_is_counted() {
        let mut html = b"<p>caf".to_vec();
        html.push(0xE9);
        html.extend_from_slice(b" is where the group meets every week to plan the next climate vigil together.</p>");
        let out = extract_main_text(&html);
        assert_eq!(out.replacement_chars, 1);
        assert!(out.text.starts_with("caf\u{FFFD} is"));
    }

    #[test]
    fn escaped_markup_cannot_leak_as_tags() {
        let out = extract_main_text(
            b"<p>The tutorial explains that &lt;script&gt; tags are stripped from every page we publish online.</p>",
        );
        assert!(!out.text.contains("<s"));
        assert!(out.text.contains("< script>"));
    }

    #[test]
    fn unclosed_skip_region_swallows_rest() {
        let out = extract_main_text(format!("<p>{PARA}</p><nav><p>{PARA}").as_bytes());
        assert_eq!(out.text, PARA);
    }
}
