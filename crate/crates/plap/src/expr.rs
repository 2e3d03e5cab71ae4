//! Boundary-data expressions.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | 'pi' | 'e' | 'x1'..'x3' | 'r' | '|x-y|'
//!          | func '(' expr ')' | '(' expr ')'
//! func    := sqrt | abs | exp | ln | sin | cos
//! ```
//!
//! `r` and `|x-y|` both denote the distance to the scenario's point `y`.

use std::fmt;

use plap_core::Point;

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Dist,
    Neg(Box<Node>),
    Bin(Op, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Func {
    Sqrt,
    Abs,
    Exp,
    Ln,
    Sin,
    Cos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExprError {
    pub pos: usize,
    pub msg: String,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at offset {}: {}", self.pos, self.msg)
    }
}

impl std::error::Error for ExprError {}

/// A parsed expression over `x1..xN` and `|x−y|`.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    root: Node,
    source: String,
    uses_dist: bool,
    max_var: usize,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self, ExprError> {
        let mut p = Parser {
            s: src.as_bytes(),
            pos: 0,
            uses_dist: false,
            max_var: 0,
        };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos != p.s.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(Self {
            root,
            source: src.to_string(),
            uses_dist: p.uses_dist,
            max_var: p.max_var,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Whether the expression refers to `|x−y|`.
    pub fn uses_dist(&self) -> bool {
        self.uses_dist
    }

    /// Highest coordinate index used (1-based; 0 if none).
    pub fn max_var(&self) -> usize {
        self.max_var
    }

    pub fn eval(&self, x: &Point, y: &Point) -> f64 {
        eval(&self.root, x, y)
    }
}

fn eval(n: &Node, x: &Point, y: &Point) -> f64 {
    match n {
        Node::Num(v) => *v,
        Node::Var(i) => x[*i],
        Node::Dist => plap_core::math::dist(x, y),
        Node::Neg(a) => -eval(a, x, y),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, x, y), eval(b, x, y));
            match op {
                Op::Add => a + b,
                Op::Sub => a - b,
                Op::Mul => a * b,
                Op::Div => a / b,
                Op::Pow => a.powf(b),
            }
        }
        Node::Call(f, a) => {
            let a = eval(a, x, y);
            match f {
                Func::Sqrt => a.sqrt(),
                Func::Abs => a.abs(),
                Func::Exp => a.exp(),
                Func::Ln => a.ln(),
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
            }
        }
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    uses_dist: bool,
    max_var: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> ExprError {
        ExprError {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat(b'+') {
                Op::Add
            } else if self.eat(b'-') {
                Op::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat(b'*') {
                Op::Mul
            } else if self.eat(b'/') {
                Op::Div
            } else {
                return Ok(lhs);
            };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if self.eat(b'-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.eat(b'^') {
            return Ok(Node::Bin(Op::Pow, Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(e)
            }
            Some(b'|') => {
                let start = self.pos;
                let rest: Vec<u8> = self.s[self.pos..]
                    .iter()
                    .copied()
                    .filter(|c| !c.is_ascii_whitespace())
                    .collect();
                if rest.starts_with(b"|x-y|") {
                    let mut seen = 0;
                    while seen < 5 {
                        if !self.s[self.pos].is_ascii_whitespace() {
                            seen += 1;
                        }
                        self.pos += 1;
                    }
                    self.uses_dist = true;
                    Ok(Node::Dist)
                } else {
                    self.pos = start;
                    Err(self.err("only |x-y| may appear between bars"))
                }
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(_) => Err(self.err("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        while self.pos < self.s.len()
            && (self.s[self.pos].is_ascii_digit() || self.s[self.pos] == b'.')
        {
            self.pos += 1;
        }
        if self.pos < self.s.len() && (self.s[self.pos] == b'e' || self.s[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.s.len() && (self.s[self.pos] == b'+' || self.s[self.pos] == b'-') {
                self.pos += 1;
            }
            if self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).unwrap_or("");
        text.parse::<f64>().map(Node::Num).map_err(|_| ExprError {
            pos: start,
            msg: format!("bad number '{text}'"),
        })
    }

    fn ident(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.s[start..self.pos]).unwrap_or("");
        let func = match name {
            "pi" => return Ok(Node::Num(std::f64::consts::PI)),
            "e" => return Ok(Node::Num(std::f64::consts::E)),
            "r" => {
                self.uses_dist = true;
                return Ok(Node::Dist);
            }
            "x1" | "x2" | "x3" => {
                let i = (name.as_bytes()[1] - b'1') as usize;
                self.max_var = self.max_var.max(i + 1);
                return Ok(Node::Var(i));
            }
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            _ => {
                return Err(ExprError {
                    pos: start,
                    msg: format!("unknown name '{name}'"),
                })
            }
        };
        if !self.eat(b'(') {
            return Err(self.err("expected '(' after function name"));
        }
        let arg = self.expr()?;
        if !self.eat(b')') {
            return Err(self.err("expected ')'"));
        }
        Ok(Node::Call(func, Box::new(arg)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, x: [f64; 3]) -> f64 {
        Expr::parse(s).unwrap().eval(&x, &[0.0; 3])
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", [0.0; 3]), 7.0);
        assert_eq!(ev("(1 + 2) * 3", [0.0; 3]), 9.0);
        assert_eq!(ev("8 / 4 / 2", [0.0; 3]), 1.0);
        assert_eq!(ev("2 ^ 3 ^ 2", [0.0; 3]), 512.0);
        assert_eq!(ev("-2 ^ 2", [0.0; 3]), -4.0);
        assert_eq!(ev("2 * -3", [0.0; 3]), -6.0);
        assert_eq!(ev("1e-3 * 2E2", [0.0; 3]), 0.2);
    }

    #[test]
    fn variables_and_distance() {
        assert_eq!(ev("x1^2 - x2^2", [3.0, 2.0, 0.0]), 5.0);
        let e = Expr::parse("|x - y| + r").unwrap();
        assert!(e.uses_dist());
        assert_eq!(e.eval(&[3.0, 4.0, 0.0], &[0.0; 3]), 10.0);
        assert_eq!(Expr::parse("x3").unwrap().max_var(), 3);
        assert!((ev("ln(e) + cos(pi)", [0.0; 3])).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_offsets() {
        let e = Expr::parse("1 + foo").unwrap_err();
        assert_eq!(e.pos, 4);
        assert!(Expr::parse("(1 + 2").is_err());
        assert!(Expr::parse("1 2").is_err());
        assert!(Expr::parse("|x|").is_err());
        assert!(Expr::parse("sqrt 2").is_err());
        assert!(Expr::parse("").is_err());
    }
}
