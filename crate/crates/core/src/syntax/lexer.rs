//! Hand-written lexer for ECA source text.

use std::fmt;

use thiserror::Error;

use super::ast::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    // keywords
    Struct,
    Begin,
    End,
    Void,
    Bool,
    Int,
    Float,
    Skip,
    If,
    Then,
    Else,
    Repeat,
    While,
    And,
    Or,
    // literals
    True,
    False,
    IntLit,
    FloatLit,
    Ident,
    // operators
    Plus,
    Minus,
    Star,
    Gt,
    Ge,
    EqEq,
    Ne,
    Le,
    Lt,
    Assign,
    // punctuation
    LParen,
    RParen,
    Comma,
    Semi,
    Dot,
    ColonColon,
}

/// Coarse token classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenClass {
    Keyword,
    Identifier,
    IntegerLiteral,
    FloatLiteral,
    BoolLiteral,
    Operator,
    Punctuation,
}

impl TokenKind {
    pub fn class(self) -> TokenClass {
        use TokenKind::*;
        match self {
            Struct | Begin | End | Void | Bool | Int | Float | Skip | If | Then | Else | Repeat | While | And
            | Or => TokenClass::Keyword,
            True | False => TokenClass::BoolLiteral,
            IntLit => TokenClass::IntegerLiteral,
            FloatLit => TokenClass::FloatLiteral,
            Ident => TokenClass::Identifier,
            Plus | Minus | Star | Gt | Ge | EqEq | Ne | Le | Lt | Assign => TokenClass::Operator,
            LParen | RParen | Comma | Semi | Dot | ColonColon => TokenClass::Punctuation,
        }
    }

    fn keyword(word: &str) -> Option<TokenKind> {
        use TokenKind::*;
        Some(match word {
            "struct" => Struct,
            "begin" => Begin,
            "end" => End,
            "void" => Void,
            "bool" => Bool,
            "int" => Int,
            "float" => Float,
            "skip" => Skip,
            "if" => If,
            "then" => Then,
            "else" => Else,
            "repeat" => Repeat,
            "while" => While,
            "and" => And,
            "or" => Or,
            "true" => True,
            "false" => False,
            _ => return None,
        })
    }

    pub fn describe(self) -> &'static str {
        use TokenKind::*;
        match self {
            Struct => "`struct`",
            Begin => "`begin`",
            End => "`end`",
            Void => "`void`",
            Bool => "`bool`",
            Int => "`int`",
            Float => "`float`",
            Skip => "`skip`",
            If => "`if`",
            Then => "`then`",
            Else => "`else`",
            Repeat => "`repeat`",
            While => "`while`",
            And => "`and`",
            Or => "`or`",
            True => "`true`",
            False => "`false`",
            IntLit => "integer literal",
            FloatLit => "float literal",
            Ident => "identifier",
            Plus => "`+`",
            Minus => "`-`",
            Star => "`*`",
            Gt => "`>`",
            Ge => "`>=`",
            EqEq => "`==`",
            Ne => "`!=`",
            Le => "`<=`",
            Lt => "`<`",
            Assign => "`=`",
            LParen => "`(`",
            RParen => "`)`",
            Comma => "`,`",
            Semi => "`;`",
            Dot => "`.`",
            ColonColon => "`::`",
        }
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.describe())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: unexpected character `{found}`")]
pub struct LexError {
    pub span: Span,
    pub found: char,
}

struct Lexer<'s> {
    src: &'s str,
    pos: usize,
    line: u32,
    column: u32,
}

impl<'s> Lexer<'s> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') if self.peek2() == Some('/') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) {
        while self.peek().is_some_and(&pred) {
            self.bump();
        }
    }

    fn next_token(&mut self) -> Option<Result<Token, LexError>> {
        self.skip_trivia();
        let start = (self.pos, self.line, self.column);
        let c = self.bump()?;
        use TokenKind::*;
        let kind = match c {
            c if c.is_ascii_alphabetic() || c == '_' => {
                self.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
                TokenKind::keyword(&self.src[start.0..self.pos]).unwrap_or(Ident)
            }
            c if c.is_ascii_digit() => {
                self.take_while(|c| c.is_ascii_digit());
                if self.peek() == Some('.') && self.peek2().is_some_and(|c| c.is_ascii_digit()) {
                    self.bump();
                    self.take_while(|c| c.is_ascii_digit());
                    FloatLit
                } else {
                    IntLit
                }
            }
            '+' => Plus,
            '-' => Minus,
            '*' => Star,
            '(' => LParen,
            ')' => RParen,
            ',' => Comma,
            ';' => Semi,
            '.' => Dot,
            '>' | '<' | '=' | '!' => {
                let eq = self.peek() == Some('=');
                if eq {
                    self.bump();
                }
                match (c, eq) {
                    ('>', false) => Gt,
                    ('>', true) => Ge,
                    ('<', false) => Lt,
                    ('<', true) => Le,
                    ('=', false) => Assign,
                    ('=', true) => EqEq,
                    ('!', true) => Ne,
                    _ => return Some(Err(self.error_at(start, c))),
                }
            }
            ':' if self.peek() == Some(':') => {
                self.bump();
                ColonColon
            }
            other => return Some(Err(self.error_at(start, other))),
        };
        Some(Ok(Token {
            kind,
            text: self.src[start.0..self.pos].to_string(),
            span: Span {
                offset: start.0,
                line: start.1,
                column: start.2,
                length: (self.pos - start.0) as u32,
            },
        }))
    }

    fn error_at(&self, start: (usize, u32, u32), found: char) -> LexError {
        LexError {
            span: Span { offset: start.0, line: start.1, column: start.2, length: found.len_utf8() as u32 },
            found,
        }
    }
}

/// Splits source text into tokens. `//` comments and whitespace are dropped.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut lexer = Lexer { src: source, pos: 0, line: 1, column: 1 };
    let mut tokens = Vec::new();
    while let Some(tok) = lexer.next_token() {
        tokens.push(tok?);
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenKind::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn single_keyword() {
        let toks = tokenize("skip").unwrap();
        assert_eq!(toks.len(), 1);
        assert_eq!(toks[0].kind, Skip);
        assert_eq!(toks[0].kind.class(), TokenClass::Keyword);
    }

    #[test]
    fn component_call_tokens() {
        let toks = tokenize("C::f(1)").unwrap();
        let shape: Vec<_> = toks.iter().map(|t| (t.kind, t.text.as_str())).collect();
        assert_eq!(
            shape,
            vec![(Ident, "C"), (ColonColon, "::"), (Ident, "f"), (LParen, "("), (IntLit, "1"), (RParen, ")")]
        );
    }

    #[test]
    fn stray_character_is_located() {
        let err = tokenize("int x = @").unwrap_err();
        assert_eq!(err.found, '@');
        assert_eq!((err.span.line, err.span.column, err.span.offset), (1, 9, 8));
    }

    #[test]
    fn lone_bang_and_colon_are_errors() {
        assert_eq!(tokenize("a ! b").unwrap_err().found, '!');
        assert_eq!(tokenize("a : b").unwrap_err().found, ':');
    }

    #[test]
    fn operators_and_literals() {
        assert_eq!(
            kinds("a >= 1.5 == true != false <= 2 < 3 > x = y - z * w + q"),
            vec![
                Ident, Ge, FloatLit, EqEq, True, Ne, False, Le, IntLit, Lt, IntLit, Gt, Ident, Assign, Ident, Minus,
                Ident, Star, Ident, Plus, Ident
            ]
        );
    }

    #[test]
    fn field_access_on_integer_is_not_a_float() {
        assert_eq!(kinds("p.x"), vec![Ident, Dot, Ident]);
        assert_eq!(kinds("1.x"), vec![IntLit, Dot, Ident]);
        assert_eq!(kinds("1.25"), vec![FloatLit]);
    }

    #[test]
    fn comments_are_dropped_and_positions_tracked() {
        let toks = tokenize("// header\nint  x // trailing\n  = 1").unwrap();
        assert_eq!(toks.iter().map(|t| t.kind).collect::<Vec<_>>(), vec![Int, Ident, Assign, IntLit]);
        assert_eq!((toks[1].span.line, toks[1].span.column), (2, 6));
        assert_eq!((toks[2].span.line, toks[2].span.column), (3, 3));
    }

    #[test]
    fn spans_cover_token_text() {
        let src = "struct P begin int x; end  void main() begin P(1).x end";
        for t in tokenize(src).unwrap() {
            assert_eq!(&src[t.span.offset..t.span.offset + t.span.length as usize], t.text);
        }
    }
}
