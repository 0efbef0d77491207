use super::node::SourceSpan;
use super::ParseError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(String),
    Long(String),
    Double(String),
    Str(String),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
    /// A line break separates this token from the previous one.
    pub nl_before: bool,
}

pub const KEYWORDS: &[&str] = &[
    "class", "interface", "fun", "val", "var", "while", "for", "in", "if", "else", "return", "open", "abstract",
    "override", "private", "operator", "native", "vararg", "true", "false", "until", "downTo",
];

// longest first
const SYMBOLS: &[&str] = &[
    "&&", "||", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=", "..", "->", "::", "(", ")", "{", "}", "[", "]",
    "<", ">", "=", "+", "-", "*", "/", "%", "!", ",", ":", ";", ".",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

pub fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut nl = false;
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            nl = true;
            i += 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            let start = i;
            i += 2;
            loop {
                if i + 1 >= bytes.len() {
                    return Err(ParseError::new(SourceSpan::new(start, bytes.len()), "unterminated comment"));
                }
                if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                    i += 2;
                    break;
                }
                if bytes[i] == b'\n' {
                    nl = true;
                }
                i += 1;
            }
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            Tok::Ident(src[start..i].to_string())
        } else if c.is_ascii_digit() {
            lex_number(src, &mut i)?
        } else if c == b'"' {
            lex_string(src, &mut i)?
        } else if let Some(sym) = SYMBOLS.iter().find(|s| src[i..].starts_with(**s)) {
            i += sym.len();
            Tok::Sym(sym)
        } else {
            let ch = src[i..].chars().next().unwrap();
            return Err(ParseError::new(SourceSpan::new(i, i + ch.len_utf8()), format!("unexpected character '{ch}'")));
        };
        out.push(Token { tok, span: SourceSpan::new(start, i), nl_before: nl });
        nl = false;
    }
    out.push(Token { tok: Tok::Eof, span: SourceSpan::new(src.len(), src.len()), nl_before: true });
    Ok(out)
}

fn lex_number(src: &str, i: &mut usize) -> Result<Tok, ParseError> {
    let bytes = src.as_bytes();
    let start = *i;
    let digits = |i: &mut usize| {
        while *i < bytes.len() && bytes[*i].is_ascii_digit() {
            *i += 1;
        }
    };
    digits(i);
    let mut is_double = false;
    if *i + 1 < bytes.len() && bytes[*i] == b'.' && bytes[*i + 1].is_ascii_digit() {
        is_double = true;
        *i += 1;
        digits(i);
    }
    if *i < bytes.len() && (bytes[*i] == b'e' || bytes[*i] == b'E') {
        let mut j = *i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            is_double = true;
            *i = j;
            digits(i);
        }
    }
    let text = src[start..*i].to_string();
    if is_double {
        return Ok(Tok::Double(text));
    }
    if *i < bytes.len() && bytes[*i] == b'L' {
        *i += 1;
        return Ok(Tok::Long(text));
    }
    if *i < bytes.len() && (bytes[*i].is_ascii_alphabetic() || bytes[*i] == b'_') {
        return Err(ParseError::new(SourceSpan::new(start, *i + 1), "malformed number"));
    }
    Ok(Tok::Int(text))
}

fn lex_string(src: &str, i: &mut usize) -> Result<Tok, ParseError> {
    let start = *i;
    *i += 1;
    let mut value = String::new();
    let mut chars = src[*i..].char_indices();
    while let Some((off, ch)) = chars.next() {
        match ch {
            '"' => {
                *i += off + 1;
                return Ok(Tok::Str(value));
            }
            '\n' => break,
            '\\' => {
                let esc = chars.next().map(|(_, c)| c);
                match esc {
                    Some('n') => value.push('\n'),
                    Some('t') => value.push('\t'),
                    Some('r') => value.push('\r'),
                    Some('"') => value.push('"'),
                    Some('\\') => value.push('\\'),
                    Some('$') => value.push('$'),
                    _ => {
                        return Err(ParseError::new(SourceSpan::new(start, *i + off + 2), "invalid escape sequence"));
                    }
                }
            }
            c => value.push(c),
        }
    }
    Err(ParseError::new(SourceSpan::new(start, src.len()), "unterminated string literal"))
}

/// Quotes and escapes a string value the way the lexer reads it back.
pub fn quote(value: &str) -> String {
    let mut s = String::with_capacity(value.len() + 2);
    s.push('"');
    for c in value.chars() {
        match c {
            '"' => s.push_str("\\\""),
            '\\' => s.push_str("\\\\"),
            '\n' => s.push_str("\\n"),
            '\t' => s.push_str("\\t"),
            '\r' => s.push_str("\\r"),
            '$' => s.push_str("\\$"),
            c => s.push(c),
        }
    }
    s.push('"');
    s
}

/// Number of lexical tokens in `src` (excluding end of input); the size
/// measure used by reduction.
pub fn token_count(src: &str) -> usize {
    lex(src).map(|t| t.len() - 1).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn numbers_and_ranges() {
        assert_eq!(
            toks("1..n 5.toDouble() 1.5 2e3 7L"),
            vec![
                Tok::Int("1".into()),
                Tok::Sym(".."),
                Tok::Ident("n".into()),
                Tok::Int("5".into()),
                Tok::Sym("."),
                Tok::Ident("toDouble".into()),
                Tok::Sym("("),
                Tok::Sym(")"),
                Tok::Double("1.5".into()),
                Tok::Double("2e3".into()),
                Tok::Long("7".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn strings_round_trip_through_quote() {
        let v = "a\"b\\c\n$";
        let q = quote(v);
        assert_eq!(toks(&q), vec![Tok::Str(v.into()), Tok::Eof]);
    }

    #[test]
    fn newlines_are_tracked() {
        let t = lex("a\nb c").unwrap();
        assert!(!t[0].nl_before || t[0].span.start == 0);
        assert!(t[1].nl_before);
        assert!(!t[2].nl_before);
    }

    #[test]
    fn bad_character_reports_span() {
        let e = lex("val a = #").unwrap_err();
        assert_eq!(e.span.start, 8);
    }
}
