//! A small arithmetic expression language over `w`, `x`, `u` and named parameters,
//! with symbolic differentiation in `x`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    W,
    X,
    U,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Cos,
    Sin,
    Exp,
    Ln,
    Sqrt,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part, e.g. 1e-3
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| Error::Expr(format!("bad number '{text}'")))?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(Error::Expr(format!("unexpected character '{c}'")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    params: &'a BTreeMap<String, f64>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    // right associative; binds tighter than unary minus on its left
    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat('^') {
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = self
            .peek()
            .cloned()
            .ok_or_else(|| Error::Expr("unexpected end of expression".into()))?;
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Op('(') => {
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(Error::Expr("missing ')'".into()));
                }
                Ok(e)
            }
            Tok::Op(c) => Err(Error::Expr(format!("unexpected '{c}'"))),
            Tok::Ident(name) => {
                let func = match name.as_str() {
                    "cos" => Some(Func::Cos),
                    "sin" => Some(Func::Sin),
                    "exp" => Some(Func::Exp),
                    "ln" | "log" => Some(Func::Ln),
                    "sqrt" => Some(Func::Sqrt),
                    _ => None,
                };
                if let Some(f) = func {
                    if !self.eat('(') {
                        return Err(Error::Expr(format!("'{name}' must be called with parentheses")));
                    }
                    let arg = self.expr()?;
                    if !self.eat(')') {
                        return Err(Error::Expr("missing ')'".into()));
                    }
                    return Ok(Expr::Call(f, Box::new(arg)));
                }
                match name.as_str() {
                    "w" => Ok(Expr::Var(Var::W)),
                    "x" => Ok(Expr::Var(Var::X)),
                    "u" => Ok(Expr::Var(Var::U)),
                    _ => self
                        .params
                        .get(&name)
                        .map(|v| Expr::Num(*v))
                        .ok_or_else(|| Error::Expr(format!("unknown identifier '{name}'"))),
                }
            }
        }
    }
}

/// Parse `src`, substituting `params` for named constants.
pub fn parse(src: &str, params: &BTreeMap<String, f64>) -> Result<Expr> {
    let mut p = Parser {
        toks: tokenize(src)?,
        pos: 0,
        params,
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(Error::Expr(format!("trailing input at token {}", p.pos)));
    }
    Ok(e)
}

impl Expr {
    pub fn eval(&self, w: f64, x: f64, u: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::W) => w,
            Expr::Var(Var::X) => x,
            Expr::Var(Var::U) => u,
            Expr::Neg(a) => -a.eval(w, x, u),
            Expr::Add(a, b) => a.eval(w, x, u) + b.eval(w, x, u),
            Expr::Sub(a, b) => a.eval(w, x, u) - b.eval(w, x, u),
            Expr::Mul(a, b) => a.eval(w, x, u) * b.eval(w, x, u),
            Expr::Div(a, b) => a.eval(w, x, u) / b.eval(w, x, u),
            Expr::Pow(a, b) => {
                let base = a.eval(w, x, u);
                match **b {
                    Expr::Num(e) if e.fract() == 0.0 && e.abs() < 64.0 => base.powi(e as i32),
                    _ => base.powf(b.eval(w, x, u)),
                }
            }
            Expr::Call(f, a) => {
                let v = a.eval(w, x, u);
                match f {
                    Func::Cos => v.cos(),
                    Func::Sin => v.sin(),
                    Func::Exp => v.exp(),
                    Func::Ln => v.ln(),
                    Func::Sqrt => v.sqrt(),
                }
            }
        }
    }

    fn depends_on_x(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) => *v == Var::X,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on_x(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.depends_on_x() || b.depends_on_x()
            }
        }
    }

    /// Symbolic derivative with respect to `x`.
    pub fn d_dx(&self) -> Expr {
        use Expr::*;
        if !self.depends_on_x() {
            return Num(0.0);
        }
        let bx = |e: &Expr| Box::new(e.clone());
        match self {
            Num(_) => Num(0.0),
            Var(v) => Num(if *v == self::Var::X { 1.0 } else { 0.0 }),
            Neg(a) => mk_neg(a.d_dx()),
            Add(a, b) => mk_add(a.d_dx(), b.d_dx()),
            Sub(a, b) => mk_sub(a.d_dx(), b.d_dx()),
            Mul(a, b) => mk_add(mk_mul(a.d_dx(), (**b).clone()), mk_mul((**a).clone(), b.d_dx())),
            Div(a, b) => {
                let num = mk_sub(mk_mul(a.d_dx(), (**b).clone()), mk_mul((**a).clone(), b.d_dx()));
                Div(Box::new(num), Box::new(Pow(bx(b), Box::new(Num(2.0)))))
            }
            Pow(a, b) if !b.depends_on_x() => {
                // d(a^c) = c a^(c-1) a'
                let lowered = Pow(bx(a), Box::new(mk_sub((**b).clone(), Num(1.0))));
                mk_mul(mk_mul((**b).clone(), lowered), a.d_dx())
            }
            Pow(a, b) => {
                // d(a^b) = a^b (b' ln a + b a' / a)
                let t1 = mk_mul(b.d_dx(), Call(Func::Ln, bx(a)));
                let t2 = Div(Box::new(mk_mul((**b).clone(), a.d_dx())), bx(a));
                mk_mul(self.clone(), mk_add(t1, t2))
            }
            Call(f, a) => {
                let inner = a.d_dx();
                let outer = match f {
                    Func::Cos => mk_neg(Call(Func::Sin, bx(a))),
                    Func::Sin => Call(Func::Cos, bx(a)),
                    Func::Exp => Call(Func::Exp, bx(a)),
                    Func::Ln => Div(Box::new(Num(1.0)), bx(a)),
                    Func::Sqrt => Div(Box::new(Num(0.5)), Box::new(Call(Func::Sqrt, bx(a)))),
                };
                mk_mul(outer, inner)
            }
        }
    }
}

fn mk_neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        a => Expr::Neg(Box::new(a)),
    }
}

fn mk_add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(0.0), b) => b,
        (a, Expr::Num(0.0)) => a,
        (a, b) => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn mk_sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (a, Expr::Num(0.0)) => a,
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x - y),
        (Expr::Num(0.0), b) => mk_neg(b),
        (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mk_mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(0.0), _) | (_, Expr::Num(0.0)) => Expr::Num(0.0),
        (Expr::Num(1.0), b) => b,
        (a, Expr::Num(1.0)) => a,
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x * y),
        (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
    }
}
