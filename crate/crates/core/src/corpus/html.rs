//! Whitelist-based visible text extraction.
//!
//! A small lenient tokenizer walks the markup and keeps an element stack.
//! Text nodes are kept only when one of their open ancestors is a
//! whitelisted tag; consecutive text nodes under the same nearest
//! whitelisted element form one output line.

const WHITELIST: &[&str] = &[
    "title",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "label",
    "blockquote",
    "dd",
    "dt",
    "p",
    "pre",
    "q",
    "div",
];

// Content is skipped up to the matching end tag.
const RAW_TEXT: &[&str] = &["script", "style", "noscript", "iframe", "xmp", "noembed"];

// Content is text (entities decoded) up to the matching end tag.
const RCDATA: &[&str] = &["title", "textarea"];

const VOID: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source",
    "track", "wbr",
];

// Tags that do not separate words.
const INLINE: &[&str] = &[
    "a", "abbr", "b", "bdi", "bdo", "cite", "code", "data", "dfn", "em", "font", "i", "kbd",
    "mark", "q", "s", "samp", "small", "span", "strong", "sub", "sup", "time", "u", "var",
];

// Opening one of these closes an open <p>.
const CLOSES_P: &[&str] = &[
    "address",
    "article",
    "aside",
    "blockquote",
    "dd",
    "div",
    "dl",
    "dt",
    "fieldset",
    "figure",
    "footer",
    "form",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "header",
    "hr",
    "li",
    "main",
    "nav",
    "ol",
    "p",
    "pre",
    "section",
    "table",
    "ul",
];

#[derive(Debug, PartialEq)]
enum Event<'a> {
    Text(&'a str),
    RcText(&'a str),
    Start { name: String, self_closing: bool },
    End { name: String },
}

/// Returns the text under whitelisted tags (`title`, `h1`–`h6`, `label`,
/// `blockquote`, `dd`, `dt`, `p`, `pre`, `q`, `div`), one line per text run,
/// in document order. Input without any markup is returned as normalized
/// plain text.
pub fn extract_text(html: &str) -> String {
    let events = lex(html);
    if !events
        .iter()
        .any(|e| matches!(e, Event::Start { .. } | Event::End { .. }))
    {
        return normalize_plain(html);
    }

    struct Open {
        name: String,
        id: usize,
    }
    let mut stack: Vec<Open> = Vec::new();
    let mut next_id = 0usize;
    let mut lines: Vec<String> = Vec::new();
    let mut current: Option<(usize, String)> = None;

    let flush = |current: &mut Option<(usize, String)>, lines: &mut Vec<String>| {
        if let Some((_, buf)) = current.take() {
            let line = collapse_whitespace(&buf);
            if !line.is_empty() {
                lines.push(line);
            }
        }
    };

    for event in events {
        match event {
            Event::Text(raw) | Event::RcText(raw) => {
                let owner = stack
                    .iter()
                    .rev()
                    .find(|o| WHITELIST.contains(&o.name.as_str()))
                    .map(|o| o.id);
                let Some(owner) = owner else { continue };
                if current.as_ref().map(|(id, _)| *id) != Some(owner) {
                    flush(&mut current, &mut lines);
                    current = Some((owner, String::new()));
                }
                if let Some((_, buf)) = current.as_mut() {
                    decode_entities_into(raw, buf);
                }
            }
            Event::Start { name, self_closing } => {
                if !INLINE.contains(&name.as_str()) {
                    if let Some((_, buf)) = current.as_mut() {
                        buf.push(' ');
                    }
                }
                if CLOSES_P.contains(&name.as_str()) {
                    if let Some(pos) = stack.iter().rposition(|o| o.name == "p") {
                        stack.truncate(pos);
                    }
                }
                if matches!(name.as_str(), "dd" | "dt") {
                    if let Some(pos) = stack.iter().rposition(|o| o.name == "dd" || o.name == "dt")
                    {
                        stack.truncate(pos);
                    }
                }
                if name == "li" {
                    if let Some(pos) = stack.iter().rposition(|o| o.name == "li") {
                        stack.truncate(pos);
                    }
                }
                if self_closing || VOID.contains(&name.as_str()) {
                    continue;
                }
                stack.push(Open { name, id: next_id });
                next_id += 1;
            }
            Event::End { name } => {
                if !INLINE.contains(&name.as_str()) {
                    if let Some((_, buf)) = current.as_mut() {
                        buf.push(' ');
                    }
                }
                if let Some(pos) = stack.iter().rposition(|o| o.name == name) {
                    stack.truncate(pos);
                }
            }
        }
    }
    flush(&mut current, &mut lines);
    lines.join("\n")
}

fn normalize_plain(text: &str) -> String {
    text.lines()
        .map(collapse_whitespace)
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn lex(html: &str) -> Vec<Event<'_>> {
    let bytes = html.as_bytes();
    let mut events = Vec::new();
    let mut pos = 0;
    let mut text_start = 0;

    while pos < bytes.len() {
        if bytes[pos] != b'<' {
            pos += 1;
            continue;
        }
        let rest = &html[pos..];
        let next = bytes.get(pos + 1).copied();
        let (consumed, event) = if rest.starts_with("<!--") {
            let end = rest[4..].find("-->").map_or(rest.len(), |i| i + 7);
            (end, None)
        } else if matches!(next, Some(b'!') | Some(b'?')) {
            (rest.find('>').map_or(rest.len(), |i| i + 1), None)
        } else if next == Some(b'/') && bytes.get(pos + 2).is_some_and(u8::is_ascii_alphabetic) {
            match rest.find('>') {
                Some(end) => {
                    let name = tag_name(&rest[2..end]);
                    (end + 1, Some(Event::End { name }))
                }
                None => (rest.len(), None),
            }
        } else if next.is_some_and(|b| b.is_ascii_alphabetic()) {
            match find_tag_end(rest) {
                Some(end) => {
                    let inner = &rest[1..end];
                    let self_closing = inner.trim_end().ends_with('/');
                    let name = tag_name(inner);
                    (end + 1, Some(Event::Start { name, self_closing }))
                }
                None => (rest.len(), None),
            }
        } else {
            // a lone '<' is text
            pos += 1;
            continue;
        };

        if text_start < pos {
            events.push(Event::Text(&html[text_start..pos]));
        }
        pos += consumed;
        text_start = pos;

        if let Some(event) = event {
            let raw_kind = match &event {
                Event::Start {
                    name,
                    self_closing: false,
                } if RAW_TEXT.contains(&name.as_str()) => Some((name.clone(), false)),
                Event::Start {
                    name,
                    self_closing: false,
                } if RCDATA.contains(&name.as_str()) => Some((name.clone(), true)),
                _ => None,
            };
            events.push(event);
            if let Some((name, keep)) = raw_kind {
                let body_end = find_end_tag(&html[pos..], &name).map_or(html.len(), |i| pos + i);
                if keep && body_end > pos {
                    events.push(Event::RcText(&html[pos..body_end]));
                }
                pos = body_end;
                text_start = pos;
            }
        }
    }
    if text_start < bytes.len() {
        events.push(Event::Text(&html[text_start..]));
    }
    events
}

fn tag_name(inner: &str) -> String {
    inner
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric() || *c == '-' || *c == ':')
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

/// Index of the `>` closing a start tag, skipping quoted attribute values.
fn find_tag_end(tag: &str) -> Option<usize> {
    let mut quote: Option<u8> = None;
    for (i, b) in tag.bytes().enumerate().skip(1) {
        match (quote, b) {
            (Some(q), b) if b == q => quote = None,
            (Some(_), _) => {}
            (None, b'"' | b'\'') => quote = Some(b),
            (None, b'>') => return Some(i),
            _ => {}
        }
    }
    None
}

/// Byte offset of `</name` (ASCII case-insensitive) in `s`.
fn find_end_tag(s: &str, name: &str) -> Option<usize> {
    let bytes = s.as_bytes();
    let needle_len = name.len() + 2;
    let mut i = 0;
    while let Some(off) = s[i..].find("</") {
        let at = i + off;
        if at + needle_len <= bytes.len()
            && bytes[at + 2..at + needle_len].eq_ignore_ascii_case(name.as_bytes())
        {
            return Some(at);
        }
        i = at + 2;
    }
    None
}

fn decode_entities_into(raw: &str, out: &mut String) {
    let mut rest = raw;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        match decode_entity(rest) {
            Some((c, len)) => {
                out.push(c);
                rest = &rest[len..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
}

/// Decodes the entity at the start of `s` (which begins with `&`).
fn decode_entity(s: &str) -> Option<(char, usize)> {
    let semi = s[..s.len().min(12)].find(';')?;
    let body = &s[1..semi];
    let c = if let Some(num) = body.strip_prefix('#') {
        let code = match num.strip_prefix(['x', 'X']) {
            Some(hex) => u32::from_str_radix(hex, 16).ok()?,
            None => num.parse::<u32>().ok()?,
        };
        char::from_u32(code).unwrap_or('\u{FFFD}')
    } else {
        named_entity(body)?
    };
    Some((c, semi + 1))
}

fn named_entity(name: &str) -> Option<char> {
    Some(match name {
        "amp" => '&',
        "lt" => '<',
        "gt" => '>',
        "quot" => '"',
        "apos" => '\'',
        "nbsp" => '\u{a0}',
        "copy" => '©',
        "reg" => '®',
        "trade" => '™',
        "hellip" => '…',
        "ndash" => '–',
        "mdash" => '—',
        "lsquo" => '‘',
        "rsquo" => '’',
        "ldquo" => '“',
        "rdquo" => '”',
        "laquo" => '«',
        "raquo" => '»',
        "euro" => '€',
        "pound" => '£',
        "middot" => '·',
        "deg" => '°',
        "Agrave" => 'À',
        "Aacute" => 'Á',
        "Acirc" => 'Â',
        "Auml" => 'Ä',
        "Aring" => 'Å',
        "Ccedil" => 'Ç',
        "Egrave" => 'È',
        "Eacute" => 'É',
        "Ecirc" => 'Ê',
        "Euml" => 'Ë',
        "Iacute" => 'Í',
        "Icirc" => 'Î',
        "Ntilde" => 'Ñ',
        "Oacute" => 'Ó',
        "Ocirc" => 'Ô',
        "Ouml" => 'Ö',
        "Uacute" => 'Ú',
        "Ucirc" => 'Û',
        "Uuml" => 'Ü',
        "agrave" => 'à',
        "aacute" => 'á',
        "acirc" => 'â',
        "atilde" => 'ã',
        "auml" => 'ä',
        "aring" => 'å',
        "aelig" => 'æ',
        "ccedil" => 'ç',
        "egrave" => 'è',
        "eacute" => 'é',
        "ecirc" => 'ê',
        "euml" => 'ë',
        "igrave" => 'ì',
        "iacute" => 'í',
        "icirc" => 'î',
        "iuml" => 'ï',
        "ntilde" => 'ñ',
        "ograve" => 'ò',
        "oacute" => 'ó',
        "ocirc" => 'ô',
        "otilde" => 'õ',
        "ouml" => 'ö',
        "oslash" => 'ø',
        "ugrave" => 'ù',
        "uacute" => 'ú',
        "ucirc" => 'û',
        "uuml" => 'ü',
        "yacute" => 'ý',
        "yuml" => 'ÿ',
        "szlig" => 'ß',
        "oelig" => 'œ',
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn script_is_excluded() {
        assert_eq!(
            extract_text("<p>Hello world</p><script>var x=1;</script>"),
            "Hello world"
        );
    }

    #[test]
    fn document_order_is_preserved() {
        assert_eq!(extract_text("<div>A</div><h1>B</h1>"), "A\nB");
    }

    #[test]
    fn empty_input() {
        assert_eq!(extract_text(""), "");
    }

    #[test]
    fn non_whitelisted_without_whitelisted_ancestor_is_dropped() {
        let html = "<html><body><nav>Menu</nav><span>loose</span><p>Kept</p></body></html>";
        assert_eq!(extract_text(html), "Kept");
    }

    #[test]
    fn non_whitelisted_inside_whitelisted_is_kept() {
        assert_eq!(
            extract_text("<div><span>inner</span> text</div>"),
            "inner text"
        );
        assert_eq!(extract_text("<p>Hello <b>bold</b> world</p>"), "Hello bold world");
    }

    #[test]
    fn nested_whitelisted_text_counts_once() {
        let out = extract_text("<div><p>Once</p></div>");
        assert_eq!(out, "Once");
        assert_eq!(
            extract_text("<div>A<p>B</p>C</div>"),
            "A\nB\nC"
        );
    }

    #[test]
    fn script_inside_whitelisted_is_excluded() {
        assert_eq!(
            extract_text("<div>x<script>if (a < b) { y(); }</script>z</div>"),
            "x z"
        );
        assert_eq!(extract_text("<div><style>p { color: red }</style>ok</div>"), "ok");
    }

    #[test]
    fn title_and_entities() {
        let html = "<html><head><title>Caf&eacute; &amp; Bar</title></head><body><p>&#233;t&#xE9; &lt;ok&gt;</p></body></html>";
        assert_eq!(extract_text(html), "Café & Bar\nété <ok>");
    }

    #[test]
    fn unknown_entities_are_kept() {
        assert_eq!(extract_text("<p>a &bogus; b & c</p>"), "a &bogus; b & c");
    }

    #[test]
    fn malformed_markup_is_tolerated() {
        assert_eq!(extract_text("<p>one<p>two"), "one\ntwo");
        assert_eq!(extract_text("<p>open <b>bold</p> tail"), "open bold");
        assert_eq!(extract_text("<div>a < b</div>"), "a < b");
        assert_eq!(extract_text("<p>unterminated <a href=\"x"), "unterminated");
        assert_eq!(extract_text("</div><p>stray</p></span>"), "stray");
        assert_eq!(extract_text("<P CLASS='x>y'>Upper</P>"), "Upper");
        assert_eq!(extract_text("<p>a<br>b<br/>c</p>"), "a b c");
        assert_eq!(extract_text("<!-- <p>hidden</p> --><p>shown</p>"), "shown");
        assert_eq!(extract_text("<!DOCTYPE html><p>x</p>"), "x");
    }

    #[test]
    fn list_items_inside_div() {
        assert_eq!(
            extract_text("<div><ul><li>one</li><li>two</li></ul></div>"),
            "one two"
        );
    }

    #[test]
    fn plain_text_passes_through_normalized() {
        assert_eq!(extract_text("  Hello   world \n\n second line "), "Hello world\nsecond line");
    }

    fn html_doc() -> impl Strategy<Value = String> {
        let tag = prop::sample::select(vec!["p", "div", "span", "h1", "nav", "q", "script", "b"]);
        let text = "[a-zA-Z0-9 ]{0,12}";
        prop::collection::vec((tag, text, text), 0..8).prop_map(|parts| {
            parts
                .into_iter()
                .map(|(t, inner, after)| format!("<{t}>{inner}</{t}>{after}"))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn idempotent_on_own_output(html in html_doc()) {
            let once = extract_text(&html);
            prop_assert_eq!(extract_text(&once), once.clone());
            prop_assert!(!once.contains('<'));
        }
    }
}
