use super::{DiagnosticKind, ParseDiagnostic};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum TokenKind {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Turnstile,
    Question,
    Tilde,
    Eof,
}

impl TokenKind {
    pub(crate) fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::Dot => "`.`".into(),
            TokenKind::Turnstile => "`:-`".into(),
            TokenKind::Question => "`?`".into(),
            TokenKind::Tilde => "`~`".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Token {
    pub kind: TokenKind,
    pub line: usize,
    pub column: usize,
}

/// Splits source text into tokens. Unknown characters are reported and
/// skipped; the token stream always ends with `Eof`.
pub(crate) fn tokenize(src: &str) -> (Vec<Token>, Vec<ParseDiagnostic>) {
    let mut tokens = Vec::new();
    let mut diagnostics = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut column) = (1usize, 1usize);

    while let Some(c) = chars.next() {
        let (tl, tc) = (line, column);
        column += 1;
        let single = match c {
            '\n' => {
                line += 1;
                column = 1;
                continue;
            }
            c if c.is_whitespace() => continue,
            '#' => {
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    chars.next();
                }
                continue;
            }
            '(' => Some(TokenKind::LParen),
            ')' => Some(TokenKind::RParen),
            ',' => Some(TokenKind::Comma),
            '.' => Some(TokenKind::Dot),
            '?' => Some(TokenKind::Question),
            '~' => Some(TokenKind::Tilde),
            ':' => {
                if chars.peek() == Some(&'-') {
                    chars.next();
                    column += 1;
                    Some(TokenKind::Turnstile)
                } else {
                    diagnostics.push(ParseDiagnostic::new(
                        tl,
                        tc,
                        DiagnosticKind::Lex,
                        "expected `:-` after `:`",
                    ));
                    None
                }
            }
            c if c.is_ascii_alphabetic() => {
                let mut ident = String::from(c);
                while let Some(&n) = chars.peek() {
                    if n.is_ascii_alphanumeric() || n == '_' {
                        ident.push(n);
                        chars.next();
                        column += 1;
                    } else {
                        break;
                    }
                }
                Some(TokenKind::Ident(ident))
            }
            other => {
                diagnostics.push(ParseDiagnostic::new(
                    tl,
                    tc,
                    DiagnosticKind::Lex,
                    format!("unexpected character {other:?}"),
                ));
                None
            }
        };
        if let Some(kind) = single {
            tokens.push(Token {
                kind,
                line: tl,
                column: tc,
            });
        }
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        line,
        column,
    });
    (tokens, diagnostics)
}
