//! Tokenizer for `.diaspec` source text.

use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Dot,
    Minus,
    /// A character that cannot start any token.
    Unknown(char),
    /// `/*` without a matching `*/`.
    UnterminatedComment,
    /// `"` without a matching `"`.
    UnterminatedString,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Float(x) => write!(f, "`{x}`"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Unknown(c) => write!(f, "`{}`", c.escape_default()),
            Tok::UnterminatedComment => f.write_str("unterminated comment"),
            Tok::UnterminatedString => f.write_str("unterminated string"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub column: u32,
}

/// Splits `text` into tokens. Never fails: unrecognized input becomes
/// [`Tok::Unknown`] and the stream always ends with [`Tok::Eof`].
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut lx = Lexer {
        chars: text.chars().collect(),
        pos: 0,
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    loop {
        let t = lx.next_token();
        let done = t.tok == Tok::Eof;
        out.push(t);
        if done {
            return out;
        }
    }
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    column: u32,
}

impl Lexer {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<char> {
        self.chars.get(self.pos + 1).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    /// Skips whitespace and comments. Returns the position of an unterminated
    /// block comment if one swallowed the rest of the input.
    fn skip_trivia(&mut self) -> Option<(u32, u32)> {
        loop {
            match (self.peek(), self.peek2()) {
                (Some(c), _) if c.is_whitespace() => {
                    self.bump();
                }
                (Some('/'), Some('/')) => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                (Some('/'), Some('*')) => {
                    let start = (self.line, self.column);
                    self.bump();
                    self.bump();
                    loop {
                        match (self.peek(), self.peek2()) {
                            (Some('*'), Some('/')) => {
                                self.bump();
                                self.bump();
                                break;
                            }
                            (Some(_), _) => {
                                self.bump();
                            }
                            (None, _) => return Some(start),
                        }
                    }
                }
                _ => return None,
            }
        }
    }

    fn next_token(&mut self) -> Token {
        if let Some((line, column)) = self.skip_trivia() {
            return Token {
                tok: Tok::UnterminatedComment,
                line,
                column,
            };
        }
        let (line, column) = (self.line, self.column);
        let make = |tok| Token { tok, line, column };
        let Some(c) = self.bump() else {
            return make(Tok::Eof);
        };
        let tok = match c {
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ';' => Tok::Semi,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            '-' => Tok::Minus,
            '"' => self.string(),
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::from(c);
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            }
            c if c.is_ascii_digit() => self.number(c),
            other => Tok::Unknown(other),
        };
        make(tok)
    }

    fn string(&mut self) -> Tok {
        let mut s = String::new();
        loop {
            match self.bump() {
                Some('"') => return Tok::Str(s),
                Some('\\') => match self.bump() {
                    Some('n') => s.push('\n'),
                    Some('t') => s.push('\t'),
                    Some(c) => s.push(c),
                    None => return Tok::UnterminatedString,
                },
                Some(c) => s.push(c),
                None => return Tok::UnterminatedString,
            }
        }
    }

    fn number(&mut self, first: char) -> Tok {
        let mut s = String::from(first);
        let mut is_float = false;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                s.push(c);
                self.bump();
            } else if c == '.' && !is_float && self.peek2().is_some_and(|d| d.is_ascii_digit()) {
                is_float = true;
                s.push(c);
                self.bump();
            } else if (c == 'e' || c == 'E') && is_exponent(self.peek2(), self.chars.get(self.pos + 2).copied()) {
                is_float = true;
                s.push(c);
                self.bump();
                if let Some(sign @ ('+' | '-')) = self.peek() {
                    s.push(sign);
                    self.bump();
                }
            } else {
                break;
            }
        }
        if is_float {
            s.parse().map(Tok::Float).unwrap_or(Tok::Unknown(first))
        } else {
            match s.parse() {
                Ok(i) => Tok::Int(i),
                // out of i64 range
                Err(_) => s.parse().map(Tok::Float).unwrap_or(Tok::Unknown(first)),
            }
        }
    }
}

fn is_exponent(next: Option<char>, after: Option<char>) -> bool {
    match next {
        Some(d) if d.is_ascii_digit() => true,
        Some('+' | '-') => after.is_some_and(|d| d.is_ascii_digit()),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn skips_both_comment_styles() {
        assert_eq!(
            toks("a // line\n /* block\n still */ b"),
            vec![Tok::Ident("a".into()), Tok::Ident("b".into()), Tok::Eof]
        );
    }

    #[test]
    fn block_comments_do_not_nest() {
        assert_eq!(
            toks("/* /* */ x */"),
            vec![
                Tok::Ident("x".into()),
                Tok::Unknown('*'),
                Tok::Unknown('/'),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn positions_are_one_based() {
        let t = tokenize("device\n  X {");
        assert_eq!((t[0].line, t[0].column), (1, 1));
        assert_eq!((t[1].line, t[1].column), (2, 3));
        assert_eq!((t[2].line, t[2].column), (2, 5));
    }

    #[test]
    fn numbers() {
        assert_eq!(toks("10 2.5 1e3"), vec![Tok::Int(10), Tok::Float(2.5), Tok::Float(1000.0), Tok::Eof]);
        assert_eq!(toks("3.x"), vec![Tok::Int(3), Tok::Dot, Tok::Ident("x".into()), Tok::Eof]);
    }

    #[test]
    fn unterminated_comment_is_reported() {
        assert_eq!(toks("a /* b"), vec![Tok::Ident("a".into()), Tok::UnterminatedComment, Tok::Eof]);
    }
}
