//! Lenient visible-text extraction for HTML.
//!
//! Text nodes outside `script` and `style` elements are concatenated, entity
//! references decoded and whitespace runs collapsed to single spaces. Broken
//! markup never fails: a `<` that does not open a tag is kept as text.

fn find_ci(hay: &str, needle: &str) -> Option<usize> {
    let n = needle.as_bytes();
    hay.as_bytes()
        .windows(n.len())
        .position(|w| w.eq_ignore_ascii_case(n))
}

fn opens_tag(rest: &str) -> bool {
    matches!(rest.as_bytes().get(1), Some(c) if c.is_ascii_alphabetic() || matches!(c, b'/' | b'!' | b'?'))
}

pub fn visible_text(html: &str) -> String {
    let mut raw = String::with_capacity(html.len() / 2);
    let mut i = 0;
    while i < html.len() {
        let rest = &html[i..];
        let Some(lt) = rest.find('<') else {
            raw.push_str(rest);
            break;
        };
        raw.push_str(&rest[..lt]);
        i += lt;
        let rest = &html[i..];
        if rest.starts_with("<!--") {
            i = match rest[4..].find("-->") {
                Some(end) => i + 4 + end + 3,
                None => html.len(),
            };
            continue;
        }
        if !opens_tag(rest) {
            raw.push('<');
            i += 1;
            continue;
        }
        let Some(gt) = rest.find('>') else {
            raw.push_str(rest);
            break;
        };
        let tag = &rest[1..gt];
        i += gt + 1;
        let name_end = tag
            .find(|c: char| !c.is_ascii_alphanumeric())
            .unwrap_or(tag.len());
        let name = &tag[..name_end];
        let raw_text_element = ["script", "style"]
            .into_iter()
            .find(|el| name.eq_ignore_ascii_case(el));
        if let Some(el) = raw_text_element {
            if tag.ends_with('/') {
                continue;
            }
            let close = format!("</{el}");
            i = match find_ci(&html[i..], &close) {
                Some(pos) => {
                    let after = i + pos;
                    match html[after..].find('>') {
                        Some(g) => after + g + 1,
                        None => html.len(),
                    }
                }
                None => html.len(),
            };
        }
    }
    collapse_whitespace(&decode_entities(&raw))
}

fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        match decode_one(rest) {
            Some((c, used)) => {
                out.push(c);
                rest = &rest[used..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

/// Decodes the entity at the start of `s` (which begins with `&`).
fn decode_one(s: &str) -> Option<(char, usize)> {
    let semi = s.bytes().take(12).position(|b| b == b';')?;
    let body = &s[1..semi];
    let c = if let Some(num) = body.strip_prefix('#') {
        let code = if let Some(hex) = num.strip_prefix(['x', 'X']) {
            u32::from_str_radix(hex, 16).ok()?
        } else {
            num.parse::<u32>().ok()?
        };
        char::from_u32(code)?
    } else {
        match body {
            "amp" => '&',
            "lt" => '<',
            "gt" => '>',
            "quot" => '"',
            "apos" => '\'',
            "nbsp" => '\u{a0}',
            "copy" => '\u{a9}',
            "reg" => '\u{ae}',
            "mdash" => '\u{2014}',
            "ndash" => '\u{2013}',
            "hellip" => '\u{2026}',
            _ => return None,
        }
    };
    Some((c, semi + 1))
}
