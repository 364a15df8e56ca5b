//! Density expressions: a tiny arithmetic language over `t1, …, tn`.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := ('+' | '-') unary | power
//! power := atom ('^' unary)?
//! atom  := number | 't' index | 'exp' '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus and is right-associative, so `-t1^2`
//! is `-(t1^2)` and `2^3^2` is `2^9`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("density expression error at character {position}: {message}")]
pub struct ExprError {
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    /// Zero-based variable index.
    Var(usize),
    Neg(Box<Node>),
    Exp(Box<Node>),
    Bin(Op, Box<Node>, Box<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityExpr {
    source: String,
    root: Node,
    arity: usize,
}

impl DensityExpr {
    pub fn parse(source: &str) -> Result<Self, ExprError> {
        let mut p = Parser {
            chars: source.chars().collect(),
            pos: 0,
            arity: 0,
        };
        p.skip_ws();
        let root = p.expr()?;
        p.skip_ws();
        if p.pos < p.chars.len() {
            return Err(p.error(format!("unexpected '{}'", p.chars[p.pos])));
        }
        Ok(Self {
            source: source.to_string(),
            root,
            arity: p.arity,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Largest variable index used; `t3` gives 3.
    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Evaluates at `t`, which must hold at least `arity()` coordinates.
    pub fn eval(&self, t: &[f64]) -> f64 {
        eval(&self.root, t)
    }
}

impl fmt::Display for DensityExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

fn eval(node: &Node, t: &[f64]) -> f64 {
    match node {
        Node::Num(x) => *x,
        Node::Var(i) => t[*i],
        Node::Neg(a) => -eval(a, t),
        Node::Exp(a) => eval(a, t).exp(),
        Node::Bin(op, a, b) => {
            let (x, y) = (eval(a, t), eval(b, t));
            match op {
                Op::Add => x + y,
                Op::Sub => x - y,
                Op::Mul => x * y,
                Op::Div => x / y,
                Op::Pow => {
                    if y.fract() == 0.0 && y.abs() <= i32::MAX as f64 {
                        x.powi(y as i32)
                    } else {
                        x.powf(y)
                    }
                }
            }
        }
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    arity: usize,
}

impl Parser {
    fn error(&self, message: String) -> ExprError {
        ExprError {
            position: self.pos + 1,
            message,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            self.skip_ws();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                Op::Add
            } else if self.eat('-') {
                Op::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                Op::Mul
            } else if self.eat('/') {
                Op::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if self.eat('-') {
            Ok(Node::Neg(Box::new(self.unary()?)))
        } else if self.eat('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if self.eat('^') {
            let exponent = self.unary()?;
            Ok(Node::Bin(Op::Pow, Box::new(base), Box::new(exponent)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        match self.peek() {
            None => Err(self.error("unexpected end of expression".into())),
            Some('(') => {
                self.eat('(');
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected ')'".into()));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.word(),
            Some(c) => Err(self.error(format!("unexpected '{c}'"))),
        }
    }

    fn number(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit() || c == '.') {
            self.pos += 1;
        }
        if matches!(self.peek(), Some('e') | Some('E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some('+') | Some('-')) {
                self.pos += 1;
            }
            if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        let value = text.parse::<f64>().map_err(|_| ExprError {
            position: start + 1,
            message: format!("malformed number '{text}'"),
        })?;
        self.skip_ws();
        Ok(Node::Num(value))
    }

    fn word(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_alphanumeric()) {
            self.pos += 1;
        }
        let word: String = self.chars[start..self.pos].iter().collect();
        self.skip_ws();
        if word == "exp" {
            if !self.eat('(') {
                return Err(self.error("expected '(' after exp".into()));
            }
            let arg = self.expr()?;
            if !self.eat(')') {
                return Err(self.error("expected ')'".into()));
            }
            return Ok(Node::Exp(Box::new(arg)));
        }
        let index = word
            .strip_prefix('t')
            .and_then(|d| d.parse::<usize>().ok())
            .filter(|&i| i >= 1);
        match index {
            Some(i) => {
                self.arity = self.arity.max(i);
                Ok(Node::Var(i - 1))
            }
            None => Err(ExprError {
                position: start + 1,
                message: format!("unknown identifier '{word}'"),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, t: &[f64]) -> f64 {
        DensityExpr::parse(s).unwrap().eval(t)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", &[]), 7.0);
        assert_eq!(ev("(1 + 2) * 3", &[]), 9.0);
        assert_eq!(ev("2^3^2", &[]), 512.0);
        assert_eq!(ev("-2^2", &[]), -4.0);
        assert_eq!(ev("8 / 2 / 2", &[]), 2.0);
        assert_eq!(ev("2^-1", &[]), 0.5);
        assert_eq!(ev("1e-2 * 100", &[]), 1.0);
    }

    #[test]
    fn variables_and_exp() {
        let e = DensityExpr::parse("1 + t1^2 * exp(-t2)").unwrap();
        assert_eq!(e.arity(), 2);
        assert!((e.eval(&[2.0, 0.0]) - 5.0).abs() < 1e-15);
        assert_eq!(e.to_string(), "1 + t1^2 * exp(-t2)");
    }

    #[test]
    fn errors_carry_position() {
        let err = DensityExpr::parse("1 + * 2").unwrap_err();
        assert_eq!(err.position, 5);
        assert!(DensityExpr::parse("t0").is_err());
        assert!(DensityExpr::parse("x1").is_err());
        assert!(DensityExpr::parse("(1 + 2").is_err());
        assert!(DensityExpr::parse("1 2").is_err());
        assert!(DensityExpr::parse("").is_err());
    }
}
