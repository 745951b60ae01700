//! Tokenizer and recursive-descent parser.
//!
//! Precedence from loosest to tightest: `+ -`, `* /`, unary sign, `^`
//! (right associative). `-x^2` therefore parses as `-(x^2)`.

use super::ast::{BinOp, CmpOp, Condition, Func, Node, Var};
use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    Cmp(CmpOp),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let (tok, at) = lx.next()?;
            let end = tok == Tok::End;
            out.push((tok, at));
            if end {
                return Ok(out);
            }
        }
    }

    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&ch) = bytes.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        let tok = match ch {
            b'0'..=b'9' | b'.' => return self.number(start),
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while self.pos < bytes.len()
                    && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                return Ok((Tok::Ident(self.src[start..self.pos].to_string()), start));
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => Tok::Op(ch as char),
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'<' => Tok::Cmp(CmpOp::Lt),
            b'>' => Tok::Cmp(CmpOp::Gt),
            _ => {
                let c = self.src[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("unexpected character '{c}'"),
                });
            }
        };
        self.pos += 1;
        Ok((tok, start))
    }

    fn number(&mut self, start: usize) -> Result<(Tok, usize), ParseError> {
        let bytes = self.src.as_bytes();
        let digits = |lx: &mut Self| {
            let from = lx.pos;
            while lx.pos < bytes.len() && bytes[lx.pos].is_ascii_digit() {
                lx.pos += 1;
            }
            lx.pos - from
        };
        let mut count = digits(self);
        if self.pos < bytes.len() && bytes[self.pos] == b'.' {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            return Err(ParseError::Syntax {
                offset: start,
                message: "malformed number".into(),
            });
        }
        if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < bytes.len() && (bytes[self.pos] == b'+' || bytes[self.pos] == b'-') {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            }
        }
        let text = &self.src[start..self.pos];
        let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
            offset: start,
            message: format!("malformed number '{text}'"),
        })?;
        if !value.is_finite() {
            return Err(ParseError::Syntax {
                offset: start,
                message: format!("literal '{text}' is not finite"),
            });
        }
        Ok((Tok::Num(value), start))
    }
}

pub(super) struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    pub(super) fn parse(src: &str) -> Result<Node, ParseError> {
        if src.trim().is_empty() {
            return Err(ParseError::Empty);
        }
        let mut p = Parser {
            toks: Lexer::tokens(src)?,
            at: 0,
        };
        let node = p.additive()?;
        match p.peek() {
            Tok::End => Ok(node),
            _ => Err(p.unexpected()),
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn offset(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn unexpected(&self) -> ParseError {
        let message = match self.peek() {
            Tok::End => "unexpected end of input".to_string(),
            t => format!("unexpected token {t:?}"),
        };
        ParseError::Syntax {
            offset: self.offset(),
            message,
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    fn additive(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.multiplicative()?;
            lhs = Node::binary(op, lhs, rhs);
        }
    }

    fn multiplicative(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Node::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        match self.peek() {
            Tok::Op('-') => {
                self.bump();
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Node::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let offset = self.offset();
        match self.peek() {
            Tok::Num(_) | Tok::LParen | Tok::Ident(_) => {}
            _ => return Err(self.unexpected()),
        }
        match self.bump() {
            Tok::Num(v) => Ok(Node::Const(v)),
            Tok::LParen => {
                let inner = self.additive()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(name) => self.identifier(name, offset),
            _ => unreachable!("checked above"),
        }
    }

    fn identifier(&mut self, name: String, offset: usize) -> Result<Node, ParseError> {
        if *self.peek() == Tok::LParen {
            self.bump();
            if name == "piecewise" {
                return self.piecewise();
            }
            let func = Func::from_name(&name).ok_or_else(|| ParseError::UnknownIdentifier {
                name: name.clone(),
                offset,
            })?;
            let mut args = vec![self.additive()?];
            while *self.peek() == Tok::Comma {
                self.bump();
                args.push(self.additive()?);
            }
            self.expect(Tok::RParen)?;
            if args.len() != func.arity() {
                return Err(ParseError::Syntax {
                    offset,
                    message: format!(
                        "{} takes {} argument(s), got {}",
                        func.name(),
                        func.arity(),
                        args.len()
                    ),
                });
            }
            return Ok(Node::Call(func, args));
        }
        variable(&name).map(Node::Var).ok_or(ParseError::UnknownIdentifier { name, offset })
    }

    fn piecewise(&mut self) -> Result<Node, ParseError> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Tok::Cmp(op) => *op,
            _ => return Err(self.unexpected()),
        };
        self.bump();
        let rhs = self.additive()?;
        self.expect(Tok::Comma)?;
        let then = self.additive()?;
        self.expect(Tok::Comma)?;
        let otherwise = self.additive()?;
        self.expect(Tok::RParen)?;
        Ok(Node::Piecewise {
            cond: Box::new(Condition { lhs, op, rhs }),
            then: Box::new(then),
            otherwise: Box::new(otherwise),
        })
    }
}

fn variable(name: &str) -> Option<Var> {
    match name {
        "x" => Some(Var::X),
        "t" => Some(Var::T),
        _ => {
            let digits = name.strip_prefix('x')?;
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0') {
                return None;
            }
            digits.parse().ok().map(Var::Coord)
        }
    }
}
