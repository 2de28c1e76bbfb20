//! HTML-ish markup stripping for dump post bodies.
//!
//! Post bodies are a small HTML subset. Stripping removes tags (each one acts
//! as a whitespace boundary), decodes entities, optionally drops the contents
//! of `code`/`pre` elements, and collapses whitespace runs to single spaces.

/// Strip markup from `body`, returning trimmed plain text.
///
/// With `keep_code = false` the text inside `<code>` and `<pre>` elements is
/// removed entirely. Unclosed tags are skipped best-effort: a `<` with no
/// matching `>` swallows the rest of the input.
pub fn strip_markup(body: &str, keep_code: bool) -> String {
    let chars: Vec<char> = body.chars().collect();
    let len = chars.len();
    let mut out = String::with_capacity(body.len());
    let mut pending_space = false;
    let mut code_depth = 0usize;
    let mut i = 0;

    let emit = |c: char, out: &mut String, pending: &mut bool| {
        if c.is_whitespace() {
            if !out.is_empty() {
                *pending = true;
            }
        } else {
            if *pending {
                out.push(' ');
                *pending = false;
            }
            out.push(c);
        }
    };

    while i < len {
        let c = chars[i];
        if c == '<' {
            if starts_with(&chars, i, "<!--") {
                i = match find_seq(&chars, i + 4, "-->") {
                    Some(j) => j + 3,
                    None => len,
                };
                emit(' ', &mut out, &mut pending_space);
                continue;
            }
            match chars[i + 1..].iter().position(|&c| c == '>') {
                Some(rel) => {
                    let inner = &chars[i + 1..i + 1 + rel];
                    if !keep_code {
                        apply_code_tag(inner, &mut code_depth);
                    }
                    i += rel + 2;
                }
                None => i = len,
            }
            emit(' ', &mut out, &mut pending_space);
            continue;
        }
        if code_depth > 0 {
            i += 1;
            continue;
        }
        if c == '&' {
            if let Some((decoded, next)) = parse_entity(&chars, i) {
                emit(decoded, &mut out, &mut pending_space);
                i = next;
                continue;
            }
        }
        emit(c, &mut out, &mut pending_space);
        i += 1;
    }
    out
}

/// Track `<code>`/`<pre>` nesting from the interior of one tag.
fn apply_code_tag(inner: &[char], depth: &mut usize) {
    let mut idx = 0;
    let closing = inner.first() == Some(&'/');
    if closing {
        idx = 1;
    }
    let name: String = inner[idx..]
        .iter()
        .take_while(|c| c.is_ascii_alphanumeric())
        .flat_map(|c| c.to_lowercase())
        .collect();
    if name != "code" && name != "pre" {
        return;
    }
    let self_closing = inner.last() == Some(&'/');
    if closing {
        *depth = depth.saturating_sub(1);
    } else if !self_closing {
        *depth += 1;
    }
}

/// Parse an entity starting at `chars[i] == '&'`.
///
/// Returns the decoded character and the index just past the `;`, or `None`
/// when the sequence is not a recognised entity (the caller then emits the
/// `&` literally).
fn parse_entity(chars: &[char], i: usize) -> Option<(char, usize)> {
    const MAX_ENTITY_LEN: usize = 32;
    let end = (i + 1 + MAX_ENTITY_LEN).min(chars.len());
    let semi = chars[i + 1..end].iter().position(|&c| c == ';')? + i + 1;
    let name: String = chars[i + 1..semi].iter().collect();
    let decoded = decode_entity(&name)?;
    Some((decoded, semi + 1))
}

fn decode_entity(name: &str) -> Option<char> {
    if let Some(num) = name.strip_prefix('#') {
        let code = if let Some(hex) = num.strip_prefix(['x', 'X']) {
            u32::from_str_radix(hex, 16).ok()?
        } else {
            num.parse::<u32>().ok()?
        };
        return char::from_u32(code).filter(|&c| c != '\0');
    }
    named_entity(name)
}

fn named_entity(name: &str) -> Option<char> {
    Some(match name {
        "amp" => '&',
        "lt" => '<',
        "gt" => '>',
        "quot" => '"',
        "apos" => '\'',
        "nbsp" => '\u{a0}',
        "mdash" => '\u{2014}',
        "ndash" => '\u{2013}',
        "hellip" => '\u{2026}',
        "lsquo" => '\u{2018}',
        "rsquo" => '\u{2019}',
        "ldquo" => '\u{201c}',
        "rdquo" => '\u{201d}',
        "laquo" => '\u{ab}',
        "raquo" => '\u{bb}',
        "middot" => '\u{b7}',
        "bull" => '\u{2022}',
        "copy" => '\u{a9}',
        "reg" => '\u{ae}',
        "trade" => '\u{2122}',
        "deg" => '\u{b0}',
        "plusmn" => '\u{b1}',
        "times" => '\u{d7}',
        "divide" => '\u{f7}',
        "micro" => '\u{b5}',
        "sect" => '\u{a7}',
        "para" => '\u{b6}',
        "euro" => '\u{20ac}',
        "pound" => '\u{a3}',
        "cent" => '\u{a2}',
        "yen" => '\u{a5}',
        _ => return None,
    })
}

fn starts_with(chars: &[char], at: usize, pat: &str) -> bool {
    chars[at..].iter().zip(pat.chars()).filter(|(a, b)| **a == *b).count() == pat.chars().count()
}

fn find_seq(chars: &[char], from: usize, pat: &str) -> Option<usize> {
    let pat: Vec<char> = pat.chars().collect();
    if chars.len() < pat.len() {
        return None;
    }
    (from..=chars.len() - pat.len()).find(|&j| chars[j..j + pat.len()] == pat[..])
}
