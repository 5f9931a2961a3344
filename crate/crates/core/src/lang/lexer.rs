use std::fmt;

use super::ParseError;
use crate::span::Span;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    /// Unsigned literal; the sign is applied by the parser so that
    /// `-9223372036854775808` is representable.
    Int(u64),
    Str(String),
    KindRs,
    KindSr,
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Semi,
    Colon,
    Comma,
    Dot,
    DotDot,
    Arrow,
    BiArrow,
    Bang,
    Question,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    EqEq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Assign,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::Int(n) => return write!(f, "`{n}`"),
            Tok::Str(_) => "string literal",
            Tok::KindRs => "`r&s`",
            Tok::KindSr => "`s&r`",
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBracket => "`[`",
            Tok::RBracket => "`]`",
            Tok::Semi => "`;`",
            Tok::Colon => "`:`",
            Tok::Comma => "`,`",
            Tok::Dot => "`.`",
            Tok::DotDot => "`..`",
            Tok::Arrow => "`->`",
            Tok::BiArrow => "`<->`",
            Tok::Bang => "`!`",
            Tok::Question => "`?`",
            Tok::Plus => "`+`",
            Tok::Minus => "`-`",
            Tok::Star => "`*`",
            Tok::Slash => "`/`",
            Tok::Percent => "`%`",
            Tok::EqEq => "`==`",
            Tok::Ne => "`!=`",
            Tok::Lt => "`<`",
            Tok::Le => "`<=`",
            Tok::Gt => "`>`",
            Tok::Ge => "`>=`",
            Tok::Assign => "`=`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

pub(crate) fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
    column: usize,
}

impl Lexer<'_> {
    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn offset(&mut self) -> usize {
        self.chars.peek().map_or(self.src.len(), |&(i, _)| i)
    }

    fn here(&self) -> Span {
        Span::new(self.line, self.column)
    }
}

/// Splits `src` into tokens. The final token is always `Eof`, positioned
/// just past the last character.
pub(crate) fn tokenize(src: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let mut lx = Lexer {
        chars: src.char_indices().peekable(),
        src,
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    loop {
        // whitespace and comments
        while let Some(c) = lx.peek() {
            if c.is_whitespace() {
                lx.bump();
            } else if c == '#' {
                while lx.peek().is_some_and(|c| c != '\n') {
                    lx.bump();
                }
            } else {
                break;
            }
        }
        let span = lx.here();
        let Some(c) = lx.peek() else {
            out.push((Tok::Eof, span));
            return Ok(out);
        };
        let start = lx.offset();
        let rest = &src[start..];
        let kind_token = |prefix: &str| {
            rest.starts_with(prefix) && !rest[prefix.len()..].starts_with(is_ident_char)
        };
        if kind_token("r&s") || kind_token("s&r") {
            let tok = if rest.starts_with('r') { Tok::KindRs } else { Tok::KindSr };
            for _ in 0..3 {
                lx.bump();
            }
            out.push((tok, span));
            continue;
        }
        if is_ident_start(c) {
            let mut s = String::new();
            while let Some(c) = lx.peek().filter(|&c| is_ident_char(c)) {
                s.push(c);
                lx.bump();
            }
            out.push((Tok::Ident(s), span));
            continue;
        }
        if c.is_ascii_digit() {
            let mut n: u64 = 0;
            while let Some(d) = lx.peek().and_then(|c| c.to_digit(10)) {
                n = n
                    .checked_mul(10)
                    .and_then(|n| n.checked_add(u64::from(d)))
                    .ok_or_else(|| ParseError::new(span, &["integer within 64 bits"], "an oversized integer literal"))?;
                lx.bump();
            }
            if lx.peek().is_some_and(is_ident_start) {
                let found = lx.peek().map(|c| format!("`{c}`")).unwrap_or_default();
                return Err(ParseError::new(lx.here(), &["separator after number"], &found));
            }
            out.push((Tok::Int(n), span));
            continue;
        }
        if c == '"' {
            lx.bump();
            let mut s = String::new();
            loop {
                let pos = lx.here();
                match lx.bump() {
                    None | Some('\n') => {
                        return Err(ParseError::new(pos, &["`\"`"], "end of line inside string"))
                    }
                    Some('"') => break,
                    Some('\\') => {
                        let esc_pos = lx.here();
                        match lx.bump() {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            other => {
                                let found = other.map_or("end of input".to_owned(), |c| format!("`\\{c}`"));
                                return Err(ParseError::new(
                                    esc_pos,
                                    &["`\\\"`", "`\\\\`", "`\\n`", "`\\t`"],
                                    &found,
                                ));
                            }
                        }
                    }
                    Some(c) => s.push(c),
                }
            }
            out.push((Tok::Str(s), span));
            continue;
        }
        let two = |a: char, b: char| rest.starts_with(a) && rest[a.len_utf8()..].starts_with(b);
        let (tok, len) = if rest.starts_with("<->") {
            (Tok::BiArrow, 3)
        } else if two('-', '>') {
            (Tok::Arrow, 2)
        } else if two('.', '.') {
            (Tok::DotDot, 2)
        } else if two('=', '=') {
            (Tok::EqEq, 2)
        } else if two('!', '=') {
            (Tok::Ne, 2)
        } else if two('<', '=') {
            (Tok::Le, 2)
        } else if two('>', '=') {
            (Tok::Ge, 2)
        } else {
            let t = match c {
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                ';' => Tok::Semi,
                ':' => Tok::Colon,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                '!' => Tok::Bang,
                '?' => Tok::Question,
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '/' => Tok::Slash,
                '%' => Tok::Percent,
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                '=' => Tok::Assign,
                other => {
                    return Err(ParseError::new(span, &["a token"], &format!("unexpected character `{other}`")))
                }
            };
            (t, 1)
        };
        for _ in 0..len {
            lx.bump();
        }
        out.push((tok, span));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|(t, _)| t).collect()
    }

    #[test]
    fn kinds_and_events() {
        assert_eq!(
            toks("r&s bookTrip.init? s&r"),
            vec![
                Tok::KindRs,
                Tok::Ident("bookTrip".into()),
                Tok::Dot,
                Tok::Ident("init".into()),
                Tok::Question,
                Tok::KindSr,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn ranges_and_arrows() {
        assert_eq!(
            toks("[0..100] a <-> b -> c != d"),
            vec![
                Tok::LBracket,
                Tok::Int(0),
                Tok::DotDot,
                Tok::Int(100),
                Tok::RBracket,
                Tok::Ident("a".into()),
                Tok::BiArrow,
                Tok::Ident("b".into()),
                Tok::Arrow,
                Tok::Ident("c".into()),
                Tok::Ne,
                Tok::Ident("d".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_and_positions() {
        let t = tokenize("# header\n  x # trailing\ny").unwrap();
        assert_eq!(t[0].1, Span::new(2, 3));
        assert_eq!((t[0].1.line, t[0].1.column), (2, 3));
        assert_eq!((t[1].1.line, t[1].1.column), (3, 1));
    }

    #[test]
    fn unterminated_string_is_located() {
        let e = tokenize("  \"abc").unwrap_err();
        assert_eq!((e.line, e.column), (1, 7));
    }

    #[test]
    fn r_plus_s_is_not_a_kind() {
        assert_eq!(toks("r+s")[0], Tok::Ident("r".into()));
    }
}
