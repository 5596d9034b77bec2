//! Single-variable arithmetic expressions for custom welfare functions.
//!
//! Grammar, lowest precedence first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          right-associative
//! primary := number | 'x' | func '(' expr ')' | '(' expr ')'
//! func    := 'ln' | 'exp' | 'sqrt' | 'neg'
//! ```
//!
//! `-x^2` therefore parses as `-(x^2)` and `2^3^2` as `2^(3^2)`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Function {
    Ln,
    Exp,
    Sqrt,
    Neg,
}

impl Function {
    fn name(self) -> &'static str {
        match self {
            Function::Ln => "ln",
            Function::Exp => "exp",
            Function::Sqrt => "sqrt",
            Function::Neg => "neg",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "ln" => Function::Ln,
            "exp" => Function::Exp,
            "sqrt" => Function::Sqrt,
            "neg" => Function::Neg,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expression {
    Number(f64),
    Var,
    /// Prefix minus. `neg(e)` parses to [`Expression::Call`] instead.
    Negate(Box<Expression>),
    Binary(BinaryOp, Box<Expression>, Box<Expression>),
    Call(Function, Box<Expression>),
}

#[derive(Clone, Debug, Error, PartialEq)]
#[error("syntax error at position {position}: {message}")]
pub struct ParseError {
    /// Byte offset into the input.
    pub position: usize,
    pub message: String,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("{function}({argument}) is outside the function's domain")]
    Domain {
        function: &'static str,
        argument: f64,
    },
    #[error("expression is NaN at x = {x}")]
    NotANumber { x: f64 },
    #[error("expression is +infinity at x = {x}")]
    PositiveInfinity { x: f64 },
    #[error("x must be nonnegative, got {0}")]
    NegativeInput(f64),
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let c = bytes[pos] as char;
        if c.is_ascii_whitespace() {
            pos += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = pos;
            while pos < bytes.len() && (bytes[pos].is_ascii_digit() || bytes[pos] == b'.') {
                pos += 1;
            }
            if pos < bytes.len() && (bytes[pos] == b'e' || bytes[pos] == b'E') {
                let mut look = pos + 1;
                if look < bytes.len() && (bytes[look] == b'+' || bytes[look] == b'-') {
                    look += 1;
                }
                if look < bytes.len() && bytes[look].is_ascii_digit() {
                    pos = look;
                    while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                        pos += 1;
                    }
                }
            }
            let literal = &text[start..pos];
            let value = literal
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| ParseError {
                    position: start,
                    message: format!("malformed number `{literal}`"),
                })?;
            tokens.push((start, Token::Number(value)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = pos;
            while pos < bytes.len() && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_') {
                pos += 1;
            }
            tokens.push((start, Token::Ident(text[start..pos].to_string())));
        } else {
            let token = match c {
                '+' | '-' | '*' | '/' | '^' => Token::Op(c),
                '(' => Token::LParen,
                ')' => Token::RParen,
                _ => {
                    let ch = text[pos..].chars().next().unwrap_or(c);
                    return Err(ParseError {
                        position: pos,
                        message: format!("unexpected character `{ch}`"),
                    });
                }
            };
            tokens.push((pos, token));
            pos += 1;
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    index: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.index).map(|(_, t)| t)
    }

    fn position(&self) -> usize {
        self.tokens.get(self.index).map_or(self.end, |(p, _)| *p)
    }

    fn error<T>(&self, expected: &str) -> Result<T, ParseError> {
        let found = match self.peek() {
            None => "end of input".to_string(),
            Some(Token::Number(v)) => format!("number {v}"),
            Some(Token::Ident(name)) => format!("`{name}`"),
            Some(Token::Op(c)) => format!("`{c}`"),
            Some(Token::LParen) => "`(`".to_string(),
            Some(Token::RParen) => "`)`".to_string(),
        };
        Err(ParseError {
            position: self.position(),
            message: format!("expected {expected}, found {found}"),
        })
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some(Token::Op(c)) if ops.contains(c) => {
                let c = *c;
                self.index += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn expr(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.term()?;
        while let Some(op) = self.eat_op(&['+', '-']) {
            let rhs = self.term()?;
            let op = if op == '+' {
                BinaryOp::Add
            } else {
                BinaryOp::Sub
            };
            lhs = Expression::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            let op = if op == '*' {
                BinaryOp::Mul
            } else {
                BinaryOp::Div
            };
            lhs = Expression::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expression, ParseError> {
        if self.eat_op(&['-']).is_some() {
            return Ok(Expression::Negate(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expression, ParseError> {
        let base = self.primary()?;
        if self.eat_op(&['^']).is_some() {
            let exponent = self.unary()?;
            return Ok(Expression::Binary(
                BinaryOp::Pow,
                Box::new(base),
                Box::new(exponent),
            ));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expression, ParseError> {
        match self.peek().cloned() {
            Some(Token::Number(v)) => {
                self.index += 1;
                Ok(Expression::Number(v))
            }
            Some(Token::Ident(name)) => {
                let start = self.position();
                self.index += 1;
                if name == "x" {
                    return Ok(Expression::Var);
                }
                let Some(function) = Function::from_name(&name) else {
                    return Err(ParseError {
                        position: start,
                        message: format!(
                            "unknown identifier `{name}` (expected x, ln, exp, sqrt, or neg)"
                        ),
                    });
                };
                if self.peek() != Some(&Token::LParen) {
                    return self.error(&format!("`(` after `{name}`"));
                }
                self.index += 1;
                let arg = self.expr()?;
                self.close()?;
                Ok(Expression::Call(function, Box::new(arg)))
            }
            Some(Token::LParen) => {
                self.index += 1;
                let inner = self.expr()?;
                self.close()?;
                Ok(inner)
            }
            _ => self.error("a number, `x`, a function call, or `(`"),
        }
    }

    fn close(&mut self) -> Result<(), ParseError> {
        if self.peek() == Some(&Token::RParen) {
            self.index += 1;
            Ok(())
        } else {
            self.error("`)` or an operator")
        }
    }
}

pub fn parse_expression(text: &str) -> Result<Expression, ParseError> {
    let mut parser = Parser {
        tokens: tokenize(text)?,
        index: 0,
        end: text.len(),
    };
    let expr = parser.expr()?;
    if parser.index < parser.tokens.len() {
        return parser.error("an operator or end of input");
    }
    Ok(expr)
}

impl FromStr for Expression {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expression(s)
    }
}

impl Expression {
    fn eval_at(&self, x: f64) -> Result<f64, EvalError> {
        let value = match self {
            Expression::Number(v) => *v,
            Expression::Var => x,
            Expression::Negate(e) => -e.eval_at(x)?,
            Expression::Binary(op, lhs, rhs) => {
                let (a, b) = (lhs.eval_at(x)?, rhs.eval_at(x)?);
                match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => a / b,
                    BinaryOp::Pow => a.powf(b),
                }
            }
            Expression::Call(function, arg) => {
                let a = arg.eval_at(x)?;
                match function {
                    Function::Ln if a < 0.0 => {
                        return Err(EvalError::Domain {
                            function: "ln",
                            argument: a,
                        })
                    }
                    Function::Ln => a.ln(),
                    Function::Exp => a.exp(),
                    Function::Sqrt if a < 0.0 => {
                        return Err(EvalError::Domain {
                            function: "sqrt",
                            argument: a,
                        })
                    }
                    Function::Sqrt => a.sqrt(),
                    Function::Neg => -a,
                }
            }
        };
        if value.is_nan() {
            return Err(EvalError::NotANumber { x });
        }
        Ok(value)
    }
}

/// Evaluates at `x >= 0`. `ln(0)` gives −∞; NaN or +∞ results are errors.
pub fn evaluate_expression(expr: &Expression, x: f64) -> Result<f64, EvalError> {
    if x.is_nan() || x < 0.0 {
        return Err(EvalError::NegativeInput(x));
    }
    let value = expr.eval_at(x)?;
    if value == f64::INFINITY {
        return Err(EvalError::PositiveInfinity { x });
    }
    Ok(value)
}

/// First adjacent grid pair where an expression fails to increase strictly.
#[derive(Clone, Debug, PartialEq)]
pub struct MonotonicityViolation {
    pub lower: (f64, f64),
    pub upper: (f64, f64),
}

pub fn validate_increasing(
    expr: &Expression,
    grid: &[f64],
) -> Result<Option<MonotonicityViolation>, EvalError> {
    validate_increasing_by(grid, |x| evaluate_expression(expr, x))
}

pub(crate) fn validate_increasing_by<E>(
    grid: &[f64],
    mut f: impl FnMut(f64) -> Result<f64, E>,
) -> Result<Option<MonotonicityViolation>, E> {
    let mut previous: Option<(f64, f64)> = None;
    for &x in grid {
        let value = f(x)?;
        if let Some(prev) = previous {
            if value <= prev.1 {
                return Ok(Some(MonotonicityViolation {
                    lower: prev,
                    upper: (x, value),
                }));
            }
        }
        previous = Some((x, value));
    }
    Ok(None)
}

/// Canonical form: every compound node is parenthesized, numbers use the
/// shortest representation that parses back to the same `f64`.
impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Number(v) => write!(f, "{v:?}"),
            Expression::Var => f.write_str("x"),
            Expression::Negate(e) => write!(f, "(-{e})"),
            Expression::Binary(op, lhs, rhs) => write!(f, "({lhs} {} {rhs})", op.symbol()),
            Expression::Call(function, arg) => write!(f, "{}({arg})", function.name()),
        }
    }
}
