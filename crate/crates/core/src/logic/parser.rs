//! Recursive-descent parser for the constraint DSL.
//!
//! Precedence, tightest first: `!`, `&`, `|`, `=>`, `<=>`. `=>` is
//! right-associative, `<=>` left-associative, and unparenthesized chains of
//! `&` or `|` become a single n-ary node.

use crate::error::ParseError;

use super::formula::{Formula, KEYWORD_FALSE, KEYWORD_TRUE};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Ident(String),
    True,
    False,
    Not,
    And,
    Or,
    Implies,
    Iff,
    LParen,
    RParen,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Ident(name) => format!("identifier `{name}`"),
            Token::True => "`true`".into(),
            Token::False => "`false`".into(),
            Token::Not => "`!`".into(),
            Token::And => "`&`".into(),
            Token::Or => "`|`".into(),
            Token::Implies => "`=>`".into(),
            Token::Iff => "`<=>`".into(),
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
        }
    }
}

const OPERAND_START: &[&str] = &["identifier", "true", "false", "!", "("];
const BINARY_OPS: &[&str] = &["&", "|", "=>", "<=>"];

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'!' => {
                i += 1;
                Token::Not
            }
            b'&' => {
                i += 1;
                Token::And
            }
            b'|' => {
                i += 1;
                Token::Or
            }
            b'(' => {
                i += 1;
                Token::LParen
            }
            b')' => {
                i += 1;
                Token::RParen
            }
            b'=' if bytes.get(i + 1) == Some(&b'>') => {
                i += 2;
                Token::Implies
            }
            b'<' if text[i..].starts_with("<=>") => {
                i += 3;
                Token::Iff
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                match &text[start..i] {
                    KEYWORD_TRUE => Token::True,
                    KEYWORD_FALSE => Token::False,
                    word => Token::Ident(word.to_string()),
                }
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(ParseError::InvalidCharacter { offset: i, ch });
            }
        };
        tokens.push((start, tok));
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
    /// Offsets of currently open parentheses.
    open: Vec<usize>,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn bump(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        tok
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        match self.peek() {
            None => match self.open.last() {
                Some(&open) => ParseError::UnclosedParen { open, offset: self.end },
                None => ParseError::Unexpected {
                    offset: self.end,
                    found: "end of input".into(),
                    expected: expected.iter().map(|s| s.to_string()).collect(),
                },
            },
            Some(Token::RParen) if self.open.is_empty() => ParseError::UnbalancedClose { offset: self.offset() },
            Some(tok) => ParseError::Unexpected {
                offset: self.offset(),
                found: tok.describe(),
                expected: expected.iter().map(|s| s.to_string()).collect(),
            },
        }
    }

    fn iff(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.implies()?;
        while self.peek() == Some(&Token::Iff) {
            self.bump();
            let rhs = self.implies()?;
            lhs = Formula::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if self.peek() == Some(&Token::Implies) {
            self.bump();
            let rhs = self.implies()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut parts = vec![self.and()?];
        while self.peek() == Some(&Token::Or) {
            self.bump();
            parts.push(self.and()?);
        }
        Ok(Formula::or(parts))
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut parts = vec![self.unary()?];
        while self.peek() == Some(&Token::And) {
            self.bump();
            parts.push(self.unary()?);
        }
        Ok(Formula::and(parts))
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Token::Not) => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Some(Token::LParen) => {
                let open = self.offset();
                self.bump();
                self.open.push(open);
                let inner = self.iff()?;
                if self.peek() != Some(&Token::RParen) {
                    return Err(self.error(&[BINARY_OPS, &[")"]].concat()));
                }
                self.bump();
                self.open.pop();
                Ok(inner)
            }
            Some(Token::Ident(_)) => match self.bump() {
                Some(Token::Ident(name)) => Ok(Formula::Var(name)),
                _ => unreachable!(),
            },
            Some(Token::True) => {
                self.bump();
                Ok(Formula::True)
            }
            Some(Token::False) => {
                self.bump();
                Ok(Formula::False)
            }
            _ => Err(self.error(OPERAND_START)),
        }
    }
}

/// Parses constraint-DSL text into a [`Formula`].
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let tokens = tokenize(text)?;
    if tokens.is_empty() {
        return Err(ParseError::Empty);
    }
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: text.len(),
        open: Vec::new(),
    };
    let formula = parser.iff()?;
    if parser.peek().is_some() {
        return Err(parser.error(BINARY_OPS));
    }
    Ok(formula)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(name: &str) -> Formula {
        Formula::var(name)
    }

    #[test]
    fn worked_xor_example() {
        let f = parse_formula("Time_Function_T1001 <=> (server & !client) | (!server & client)").unwrap();
        let expected = Formula::iff(
            v("Time_Function_T1001"),
            Formula::or(vec![
                Formula::and(vec![v("server"), Formula::not(v("client"))]),
                Formula::and(vec![Formula::not(v("server")), v("client")]),
            ]),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn single_identifier() {
        assert_eq!(parse_formula("a").unwrap(), v("a"));
    }

    #[test]
    fn unclosed_paren() {
        let err = parse_formula("a & (b").unwrap_err();
        assert_eq!(err, ParseError::UnclosedParen { open: 4, offset: 6 });
    }

    #[test]
    fn stray_close_paren() {
        assert_eq!(
            parse_formula("a)").unwrap_err(),
            ParseError::UnbalancedClose { offset: 1 }
        );
    }

    #[test]
    fn empty_input() {
        assert_eq!(parse_formula("").unwrap_err(), ParseError::Empty);
        assert_eq!(parse_formula("  \t").unwrap_err(), ParseError::Empty);
    }

    #[test]
    fn missing_operand_lists_expected_tokens() {
        match parse_formula("a &").unwrap_err() {
            ParseError::Unexpected { offset, expected, .. } => {
                assert_eq!(offset, 3);
                assert!(expected.contains(&"identifier".to_string()));
                assert!(expected.contains(&"(".to_string()));
            }
            other => panic!("unexpected {other:?}"),
        }
        match parse_formula("a b").unwrap_err() {
            ParseError::Unexpected { offset, found, .. } => {
                assert_eq!(offset, 2);
                assert_eq!(found, "identifier `b`");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_character() {
        assert_eq!(
            parse_formula("a # b").unwrap_err(),
            ParseError::InvalidCharacter { offset: 2, ch: '#' }
        );
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(
            parse_formula("!a & b | c").unwrap(),
            Formula::or(vec![Formula::and(vec![Formula::not(v("a")), v("b")]), v("c")])
        );
        assert_eq!(
            parse_formula("a => b => c").unwrap(),
            Formula::implies(v("a"), Formula::implies(v("b"), v("c")))
        );
        assert_eq!(
            parse_formula("a <=> b <=> c").unwrap(),
            Formula::iff(Formula::iff(v("a"), v("b")), v("c"))
        );
        assert_eq!(
            parse_formula("a | b => c <=> d").unwrap(),
            Formula::iff(Formula::implies(Formula::or(vec![v("a"), v("b")]), v("c")), v("d"))
        );
        assert_eq!(
            parse_formula("a & b & c").unwrap(),
            Formula::and(vec![v("a"), v("b"), v("c")])
        );
        assert_eq!(
            parse_formula("true | false").unwrap(),
            Formula::Or(vec![Formula::True, Formula::False])
        );
    }
}
