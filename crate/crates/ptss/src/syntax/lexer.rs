use super::{Diagnostic, Span};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Hole(usize),
    Wild,
    Num(String),
    Str(String),
    Op(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Semi,
    Colon,
    Slash,
    Minus,
    Arrow,
    NegArrow,
    Bar,
    Cmp(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Hole(k) => format!("`_{k}`"),
            Tok::Wild => "`_`".into(),
            Tok::Num(n) => format!("number `{n}`"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::Op(o) => format!("`{o}`"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrack => "`[`".into(),
            Tok::RBrack => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::NegArrow => "`-/->`".into(),
            Tok::Bar => "`---`".into(),
            Tok::Cmp(c) => format!("`{c}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

const OP_CHARS: &str = "+*|&.!~^%@$?\\";

pub fn lex(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let bytes: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let end_of = |j: usize| if j < bytes.len() { bytes[j].0 } else { src.len() };
    while i < bytes.len() {
        let (pos, c) = bytes[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            while i < bytes.len() && bytes[i].1 != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let tok = if c.is_alphabetic() {
            while i < bytes.len() && (bytes[i].1.is_alphanumeric() || bytes[i].1 == '_' || bytes[i].1 == '\'') {
                i += 1;
            }
            Tok::Ident(src[pos..end_of(i)].to_string())
        } else if c == '_' {
            i += 1;
            while i < bytes.len() && bytes[i].1.is_ascii_digit() {
                i += 1;
            }
            if i == start + 1 {
                Tok::Wild
            } else {
                let k: usize = src[bytes[start + 1].0..end_of(i)].parse().unwrap_or(0);
                if k == 0 {
                    return Err(Diagnostic::error("lex", Span::new(src, pos, end_of(i)), "holes are numbered from _1"));
                }
                Tok::Hole(k)
            }
        } else if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].1.is_ascii_digit() {
                i += 1;
            }
            if i + 1 < bytes.len() && bytes[i].1 == '.' && bytes[i + 1].1.is_ascii_digit() {
                i += 1;
                while i < bytes.len() && bytes[i].1.is_ascii_digit() {
                    i += 1;
                }
            }
            Tok::Num(src[pos..end_of(i)].to_string())
        } else if c == '"' {
            i += 1;
            while i < bytes.len() && bytes[i].1 != '"' && bytes[i].1 != '\n' {
                i += 1;
            }
            if i >= bytes.len() || bytes[i].1 != '"' {
                return Err(Diagnostic::error("lex", Span::new(src, pos, end_of(i)), "unterminated string"));
            }
            i += 1;
            Tok::Str(src[pos + 1..end_of(i) - 1].to_string())
        } else if c == '-' {
            let rest = &src[pos..];
            let dashes = rest.chars().take_while(|&d| d == '-').count();
            if dashes >= 3 {
                i += dashes;
                Tok::Bar
            } else if rest.starts_with("-/->") {
                i += 4;
                Tok::NegArrow
            } else if rest.starts_with("->") {
                i += 2;
                Tok::Arrow
            } else {
                i += 1;
                Tok::Minus
            }
        } else if c == '>' || c == '<' {
            let eq = i + 1 < bytes.len() && bytes[i + 1].1 == '=';
            i += if eq { 2 } else { 1 };
            Tok::Cmp(match (c, eq) {
                ('>', true) => ">=",
                ('>', false) => ">",
                ('<', true) => "<=",
                _ => "<",
            })
        } else if OP_CHARS.contains(c) {
            while i < bytes.len() && OP_CHARS.contains(bytes[i].1) {
                i += 1;
            }
            Tok::Op(src[pos..end_of(i)].to_string())
        } else {
            i += 1;
            match c {
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBrack,
                ']' => Tok::RBrack,
                ',' => Tok::Comma,
                ';' => Tok::Semi,
                ':' => Tok::Colon,
                '/' => Tok::Slash,
                _ => {
                    return Err(Diagnostic::error(
                        "lex",
                        Span::new(src, pos, end_of(i)),
                        &format!("unexpected character `{c}`"),
                    ))
                }
            }
        };
        out.push(Token { tok, span: Span::new(src, pos, end_of(i)) });
    }
    out.push(Token { tok: Tok::Eof, span: Span::new(src, src.len(), src.len()) });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn arrows_and_ops() {
        assert_eq!(
            toks("f -a-> mu; x -b-/-> # c\n"),
            vec![
                Tok::Ident("f".into()),
                Tok::Minus,
                Tok::Ident("a".into()),
                Tok::Arrow,
                Tok::Ident("mu".into()),
                Tok::Semi,
                Tok::Ident("x".into()),
                Tok::Minus,
                Tok::Ident("b".into()),
                Tok::NegArrow,
                Tok::Eof
            ]
        );
        assert_eq!(toks("_1 || _2")[1], Tok::Op("||".into()));
        assert_eq!(toks(">= 0.5")[1], Tok::Num("0.5".into()));
        assert_eq!(toks("; ----- f")[1], Tok::Bar);
    }

    #[test]
    fn bad_char_has_span() {
        let e = lex("rule r { ` }").unwrap_err();
        assert_eq!(e.span.start, 9);
    }
}
