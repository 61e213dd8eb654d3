use super::ParseError;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Num(f64),
    Str(String),
    Ident(String),
    Punct(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub start: usize,
    pub end: usize,
}

// Longest first so that maximal munch works with a linear scan.
const PUNCTS: &[&str] = &[
    "===", "!==", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=", "*=", "/=", "(",
    ")", "{", "}", "[", "]", ";", ",", ".", "=", "+", "-", "*", "/", "%", "<", ">", "!",
];

const UNSUPPORTED_PUNCTS: &[&str] = &[
    ">>>=", "**=", "<<=", ">>=", ">>>", "...", "**", "=>", "<<", ">>", "%=", "&=", "|=", "^=",
    "??", "?.", "&", "|", "^", "~", "?", ":", "`", "@", "#",
];

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if src[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if src[i..].starts_with("/*") {
            match src[i + 2..].find("*/") {
                Some(off) => i += off + 4,
                None => return Err(ParseError::at(src, i, src.len(), "unterminated comment")),
            }
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            i = scan_number(bytes, i);
            let text = &src[start..i];
            if bytes.get(i).is_some_and(|b| b.is_ascii_alphabetic() || *b == b'_') {
                return Err(ParseError::at(src, start, i + 1, "invalid numeric literal"));
            }
            let value: f64 = text
                .parse()
                .map_err(|_| ParseError::at(src, start, i, "invalid numeric literal"))?;
            out.push(Token { tok: Tok::Num(value), start, end: i });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' || c == b'$' {
            while i < bytes.len()
                && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'$')
            {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(src[start..i].to_string()), start, end: i });
            continue;
        }
        if c == b'"' || c == b'\'' {
            let (value, end) = scan_string(src, i)?;
            i = end;
            out.push(Token { tok: Tok::Str(value), start, end: i });
            continue;
        }
        let supported = PUNCTS.iter().find(|p| src[i..].starts_with(**p));
        let unsupported = UNSUPPORTED_PUNCTS.iter().find(|p| src[i..].starts_with(**p));
        if let Some(u) = unsupported {
            if supported.is_none_or(|s| u.len() > s.len()) {
                let msg = format!("unsupported construct `{u}`");
                return Err(ParseError::at(src, i, i + u.len(), msg));
            }
        }
        if let Some(p) = supported {
            i += p.len();
            out.push(Token { tok: Tok::Punct(p), start, end: i });
            continue;
        }
        let ch = src[i..].chars().next().unwrap_or('?');
        return Err(ParseError::at(src, i, i + ch.len_utf8(), format!("unexpected character `{ch}`")));
    }
    out.push(Token { tok: Tok::Eof, start: src.len(), end: src.len() });
    Ok(out)
}

fn scan_number(bytes: &[u8], mut i: usize) -> usize {
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            i = j;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
        }
    }
    i
}

fn scan_string(src: &str, start: usize) -> Result<(String, usize), ParseError> {
    let quote = src.as_bytes()[start] as char;
    let mut out = String::new();
    let mut chars = src[start + 1..].char_indices();
    while let Some((off, ch)) = chars.next() {
        let pos = start + 1 + off;
        match ch {
            c if c == quote => return Ok((out, pos + 1)),
            '\n' => break,
            '\\' => {
                let Some((_, esc)) = chars.next() else { break };
                out.push(match esc {
                    'n' => '\n',
                    't' => '\t',
                    'r' => '\r',
                    '0' => '\0',
                    '\\' => '\\',
                    '\'' => '\'',
                    '"' => '"',
                    other => {
                        let msg = format!("unsupported escape `\\{other}`");
                        return Err(ParseError::at(src, pos, pos + 1 + other.len_utf8(), msg));
                    }
                });
            }
            c => out.push(c),
        }
    }
    Err(ParseError::at(src, start, start + 1, "unterminated string literal"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn maximal_munch() {
        assert_eq!(
            toks("a===b!=c"),
            vec![
                Tok::Ident("a".into()),
                Tok::Punct("==="),
                Tok::Ident("b".into()),
                Tok::Punct("!="),
                Tok::Ident("c".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn numbers_and_strings() {
        assert_eq!(toks("1.5e2 .5 'a\\'b'")[..3], [Tok::Num(150.0), Tok::Num(0.5), Tok::Str("a'b".into())]);
    }

    #[test]
    fn comments_skipped() {
        assert_eq!(toks("// x\n/* y */ z"), vec![Tok::Ident("z".into()), Tok::Eof]);
    }

    #[test]
    fn rejects_unsupported_operators() {
        let err = tokenize("a => b").unwrap_err();
        assert!(err.message.contains("=>"));
        assert!(tokenize("a ? b : c").is_err());
        assert!(tokenize("`x`").is_err());
    }
}
