//! Restricted arithmetic over a point z of the plane.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | var | const | func '(' expr ')' | '(' expr ')'
//! var    := r | x | y | w        (|z|, Re z, Im z, weight value at z)
//! const  := pi | e
//! func   := exp | log | sqrt | abs
//! ```
//!
//! `w` is only available in measure densities, where it stands for the
//! weight of the space the measure acts on.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Result, WfockError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    R,
    X,
    Y,
    W,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Exp,
    Log,
    Sqrt,
    Abs,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// Values bound to the variables during evaluation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Bindings {
    pub r: f64,
    pub x: f64,
    pub y: f64,
    pub w: f64,
}

/// A parsed expression together with its source text.
#[derive(Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self> {
        let mut p = Parser {
            chars: source.char_indices().collect(),
            pos: 0,
        };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos < p.chars.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(Expr {
            source: source.to_string(),
            root,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn uses(&self, var: Var) -> bool {
        fn walk(n: &Node, v: Var) -> bool {
            match n {
                Node::Num(_) => false,
                Node::Var(u) => *u == v,
                Node::Neg(a) | Node::Call(_, a) => walk(a, v),
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                    walk(a, v) || walk(b, v)
                }
            }
        }
        walk(&self.root, var)
    }

    /// True when the expression depends on z only through |z| (and `w`).
    pub fn depends_only_on_modulus(&self) -> bool {
        !self.uses(Var::X) && !self.uses(Var::Y)
    }

    /// True when the whole expression is the bare weight variable `w`.
    pub fn is_weight(&self) -> bool {
        matches!(self.root, Node::Var(Var::W))
    }

    pub fn eval(&self, b: &Bindings) -> f64 {
        eval(&self.root, b)
    }
}

fn eval(n: &Node, b: &Bindings) -> f64 {
    match n {
        Node::Num(v) => *v,
        Node::Var(Var::R) => b.r,
        Node::Var(Var::X) => b.x,
        Node::Var(Var::Y) => b.y,
        Node::Var(Var::W) => b.w,
        Node::Neg(a) => -eval(a, b),
        Node::Add(l, r) => eval(l, b) + eval(r, b),
        Node::Sub(l, r) => eval(l, b) - eval(r, b),
        Node::Mul(l, r) => eval(l, b) * eval(r, b),
        Node::Div(l, r) => eval(l, b) / eval(r, b),
        Node::Pow(l, r) => {
            let base = eval(l, b);
            let exp = eval(r, b);
            if exp.fract() == 0.0 && exp.abs() < 64.0 {
                base.powi(exp as i32)
            } else {
                base.powf(exp)
            }
        }
        Node::Call(f, a) => {
            let v = eval(a, b);
            match f {
                Func::Exp => v.exp(),
                Func::Log => v.ln(),
                Func::Sqrt => v.sqrt(),
                Func::Abs => v.abs(),
            }
        }
    }
}

struct Parser {
    chars: Vec<(usize, char)>,
    pos: usize,
}

impl Parser {
    fn error(&self, msg: &str) -> WfockError {
        let column = self
            .chars
            .get(self.pos)
            .map_or_else(|| self.chars.last().map_or(0, |(i, c)| i + c.len_utf8()), |(i, _)| *i)
            + 1;
        WfockError::Expression {
            column,
            message: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].1.is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).map(|(_, c)| *c)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat('^') {
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            None => Err(self.error("unexpected end of expression")),
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(_) => Err(self.error("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        let mut end = self.pos;
        let mut seen_exp = false;
        while end < self.chars.len() {
            let c = self.chars[end].1;
            let prev = if end > start { Some(self.chars[end - 1].1) } else { None };
            let ok = c.is_ascii_digit()
                || c == '.'
                || (!seen_exp && (c == 'e' || c == 'E') && end > start && self.is_exponent_at(end))
                || ((c == '+' || c == '-') && matches!(prev, Some('e') | Some('E')) && seen_exp);
            if !ok {
                break;
            }
            if c == 'e' || c == 'E' {
                seen_exp = true;
            }
            end += 1;
        }
        let text: String = self.chars[start..end].iter().map(|(_, c)| *c).collect();
        let value: f64 = text.parse().map_err(|_| self.error("malformed number"))?;
        self.pos = end;
        Ok(Node::Num(value))
    }

    /// An 'e' inside a number is an exponent only when digits follow it.
    fn is_exponent_at(&self, idx: usize) -> bool {
        let next = self.chars.get(idx + 1).map(|(_, c)| *c);
        let next2 = self.chars.get(idx + 2).map(|(_, c)| *c);
        match next {
            Some(d) if d.is_ascii_digit() => true,
            Some('+') | Some('-') => matches!(next2, Some(d) if d.is_ascii_digit()),
            _ => false,
        }
    }

    fn ident(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.chars.len()
            && (self.chars[self.pos].1.is_ascii_alphanumeric() || self.chars[self.pos].1 == '_')
        {
            self.pos += 1;
        }
        let name: String = self.chars[start..self.pos].iter().map(|(_, c)| *c).collect();
        let func = match name.as_str() {
            "r" => return Ok(Node::Var(Var::R)),
            "x" => return Ok(Node::Var(Var::X)),
            "y" => return Ok(Node::Var(Var::Y)),
            "w" => return Ok(Node::Var(Var::W)),
            "pi" => return Ok(Node::Num(std::f64::consts::PI)),
            "e" => return Ok(Node::Num(std::f64::consts::E)),
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => {
                self.pos = start;
                return Err(self.error(&format!("unknown identifier '{name}'")));
            }
        };
        if !self.eat('(') {
            return Err(self.error("expected '(' after function name"));
        }
        let arg = self.expr()?;
        if !self.eat(')') {
            return Err(self.error("expected ')'"));
        }
        Ok(Node::Call(func, Box::new(arg)))
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Expr::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(r: f64) -> Bindings {
        Bindings {
            r,
            x: r,
            y: 0.0,
            w: 1.0,
        }
    }

    #[test]
    fn precedence_and_associativity() {
        let e = Expr::parse("1 + 2*3^2^0.5 - -4/2").unwrap();
        let expected = 1.0 + 2.0 * 3f64.powf(2f64.powf(0.5)) + 2.0;
        assert!((e.eval(&at(0.0)) - expected).abs() < 1e-12);
    }

    #[test]
    fn functions_and_constants() {
        let e = Expr::parse("exp(-r^2)/pi").unwrap();
        assert!((e.eval(&at(1.0)) - (-1f64).exp() / std::f64::consts::PI).abs() < 1e-15);
        assert!(e.depends_only_on_modulus());
        let e = Expr::parse("1 + x^2/(1 + r^2)").unwrap();
        assert!(!e.depends_only_on_modulus());
        assert!(Expr::parse("w").unwrap().is_weight());
        assert!(!Expr::parse("2*w").unwrap().is_weight());
    }

    #[test]
    fn scientific_notation() {
        let e = Expr::parse("1.5e-3*r + 2E2").unwrap();
        assert!((e.eval(&at(2.0)) - 200.003).abs() < 1e-12);
        // 'e' followed by a non-digit is the constant
        let e = Expr::parse("2*e").unwrap();
        assert!((e.eval(&at(0.0)) - 2.0 * std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_columns() {
        let err = Expr::parse("1 + foo(r)").unwrap_err();
        assert!(matches!(err, WfockError::Expression { column: 5, .. }), "{err:?}");
        assert!(Expr::parse("(r + 1").is_err());
        assert!(Expr::parse("r r").is_err());
        assert!(Expr::parse("").is_err());
    }
}
