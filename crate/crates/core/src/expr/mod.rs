//! Symbolic expressions over named real variables.
//!
//! [`Expr`] is an immutable, reference-counted tree. Every coordinate function
//! in the crate (Lagrangians, anchors, structure functions, Hamiltonians) is an
//! `Expr`. Construction goes through smart constructors that fold constants
//! and apply the 0/1 identities (`x + 0`, `x * 1`, `x * 0`, ...) and nothing
//! else: equality of two expressions as functions is always tested
//! numerically at sample points.
//!
//! ```
//! use gradmech::expr::{parse, Expr};
//!
//! let l = parse("y_1^2/2 - z^2/2").unwrap();
//! let dl = l.diff("y_1");
//! assert_eq!(dl.eval(&[("y_1", 3.0), ("z", 1.0)][..]).unwrap(), 3.0);
//! assert_eq!(dl.to_string(), "y_1");
//! ```

mod compile;
mod diff;
mod jet;
mod latex;
mod parse;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use compile::CompiledExpr;
pub use jet::{check_homogeneity, total_derivative, Chart, ChartError, JetVar, Prolongation};
pub use parse::{parse, ParseError};

/// One-argument operations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sqrt,
    Sin,
    Cos,
    Exp,
    Log,
    Abs,
    /// Sign function with `sign(0) = 0`; appears as the derivative of `abs`.
    Sign,
}

impl UnaryOp {
    pub(crate) fn function_name(self) -> Option<&'static str> {
        match self {
            UnaryOp::Neg => None,
            UnaryOp::Sqrt => Some("sqrt"),
            UnaryOp::Sin => Some("sin"),
            UnaryOp::Cos => Some("cos"),
            UnaryOp::Exp => Some("exp"),
            UnaryOp::Log => Some("log"),
            UnaryOp::Abs => Some("abs"),
            UnaryOp::Sign => Some("sign"),
        }
    }

    pub(crate) fn from_function_name(name: &str) -> Option<UnaryOp> {
        Some(match name {
            "sqrt" => UnaryOp::Sqrt,
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "exp" => UnaryOp::Exp,
            "log" => UnaryOp::Log,
            "abs" => UnaryOp::Abs,
            "sign" => UnaryOp::Sign,
            _ => return None,
        })
    }

    /// Applies the operation, or returns a domain-error message.
    pub(crate) fn apply(self, x: f64) -> Result<f64, &'static str> {
        match self {
            UnaryOp::Neg => Ok(-x),
            UnaryOp::Sqrt if x < 0.0 => Err("square root of a negative number"),
            UnaryOp::Sqrt => Ok(x.sqrt()),
            UnaryOp::Sin => Ok(x.sin()),
            UnaryOp::Cos => Ok(x.cos()),
            UnaryOp::Exp => Ok(x.exp()),
            UnaryOp::Log if x <= 0.0 => Err("logarithm of a non-positive number"),
            UnaryOp::Log => Ok(x.ln()),
            UnaryOp::Abs => Ok(x.abs()),
            UnaryOp::Sign => Ok(if x > 0.0 {
                1.0
            } else if x < 0.0 {
                -1.0
            } else {
                0.0
            }),
        }
    }
}

/// Two-argument arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    pub(crate) fn apply(self, a: f64, b: f64) -> Result<f64, &'static str> {
        match self {
            BinaryOp::Add => Ok(a + b),
            BinaryOp::Sub => Ok(a - b),
            BinaryOp::Mul => Ok(a * b),
            BinaryOp::Div if b == 0.0 => Err("division by zero"),
            BinaryOp::Div => Ok(a / b),
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
        }
    }
}

pub(crate) fn apply_pow(base: f64, exponent: f64) -> Result<f64, &'static str> {
    if exponent.fract() == 0.0 && exponent.abs() <= i32::MAX as f64 {
        if base == 0.0 && exponent < 0.0 {
            return Err("division by zero");
        }
        Ok(base.powi(exponent as i32))
    } else if base > 0.0 || (base == 0.0 && exponent > 0.0) {
        Ok(base.powf(exponent))
    } else {
        Err("non-integer power of a non-positive number")
    }
}

/// Tree node. Children are shared [`Expr`] handles.
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Const(f64),
    Var(Arc<str>),
    Unary(UnaryOp, Expr),
    Binary(BinaryOp, Expr, Expr),
    /// Power with a constant exponent.
    Pow(Expr, f64),
}

/// Immutable symbolic expression.
#[derive(Clone, PartialEq)]
pub struct Expr(Arc<Node>);

/// Failure while evaluating an expression.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("{message} in `{subexpr}`")]
    Domain {
        message: &'static str,
        subexpr: String,
    },
}

/// Source of variable values for [`Expr::eval`].
pub trait Bindings {
    fn value(&self, name: &str) -> Option<f64>;
}

impl Bindings for HashMap<String, f64> {
    fn value(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Bindings for BTreeMap<String, f64> {
    fn value(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Bindings for [(&str, f64)] {
    fn value(&self, name: &str) -> Option<f64> {
        self.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

impl<B: Bindings + ?Sized> Bindings for &B {
    fn value(&self, name: &str) -> Option<f64> {
        (**self).value(name)
    }
}

impl Expr {
    fn from_node(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(value: f64) -> Expr {
        Expr::from_node(Node::Const(value))
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    pub fn var(name: &str) -> Expr {
        Expr::from_node(Node::Var(Arc::from(name)))
    }

    /// Value of a constant node.
    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    fn fold_unary(op: UnaryOp, a: &Expr) -> Option<Expr> {
        let c = a.as_const()?;
        let v = op.apply(c).ok()?;
        v.is_finite().then(|| Expr::constant(v))
    }

    pub fn unary(op: UnaryOp, a: Expr) -> Expr {
        if let Some(folded) = Expr::fold_unary(op, &a) {
            return folded;
        }
        if op == UnaryOp::Neg {
            if let Node::Unary(UnaryOp::Neg, inner) = a.node() {
                return inner.clone();
            }
        }
        Expr::from_node(Node::Unary(op, a))
    }

    pub fn binary(op: BinaryOp, a: Expr, b: Expr) -> Expr {
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            if let Ok(v) = op.apply(x, y) {
                if v.is_finite() {
                    return Expr::constant(v);
                }
            }
        }
        // c * (d * x) -> (cd) * x  and  (c * x) / d -> (c/d) * x
        match (op, a.node(), b.node()) {
            (BinaryOp::Mul, Node::Const(c), Node::Binary(BinaryOp::Mul, inner, rest)) => {
                if let Some(d) = inner.as_const() {
                    return Expr::binary(BinaryOp::Mul, Expr::constant(c * d), rest.clone());
                }
            }
            (BinaryOp::Div, Node::Binary(BinaryOp::Mul, inner, rest), Node::Const(d)) if *d != 0.0 => {
                if let Some(c) = inner.as_const() {
                    return Expr::binary(BinaryOp::Mul, Expr::constant(c / d), rest.clone());
                }
            }
            _ => {}
        }
        match op {
            BinaryOp::Add if a.is_zero() => b,
            BinaryOp::Add if b.is_zero() => a,
            BinaryOp::Sub if b.is_zero() => a,
            BinaryOp::Sub if a.is_zero() => Expr::unary(UnaryOp::Neg, b),
            BinaryOp::Mul if a.is_zero() || b.is_zero() => Expr::zero(),
            BinaryOp::Mul if a.is_one() => b,
            BinaryOp::Mul if b.is_one() => a,
            BinaryOp::Div if a.is_zero() && !b.is_zero() => Expr::zero(),
            BinaryOp::Div if b.is_one() => a,
            _ => Expr::from_node(Node::Binary(op, a, b)),
        }
    }

    pub fn pow(&self, exponent: f64) -> Expr {
        if exponent == 0.0 {
            return Expr::one();
        }
        if exponent == 1.0 {
            return self.clone();
        }
        if let Some(c) = self.as_const() {
            if let Ok(v) = apply_pow(c, exponent) {
                if v.is_finite() {
                    return Expr::constant(v);
                }
            }
        }
        Expr::from_node(Node::Pow(self.clone(), exponent))
    }

    pub fn sqrt(&self) -> Expr {
        Expr::unary(UnaryOp::Sqrt, self.clone())
    }

    pub fn sin(&self) -> Expr {
        Expr::unary(UnaryOp::Sin, self.clone())
    }

    pub fn cos(&self) -> Expr {
        Expr::unary(UnaryOp::Cos, self.clone())
    }

    pub fn exp(&self) -> Expr {
        Expr::unary(UnaryOp::Exp, self.clone())
    }

    pub fn ln(&self) -> Expr {
        Expr::unary(UnaryOp::Log, self.clone())
    }

    pub fn abs(&self) -> Expr {
        Expr::unary(UnaryOp::Abs, self.clone())
    }

    /// Sum of an iterator of expressions; the empty sum is `0`.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        terms.into_iter().fold(Expr::zero(), |acc, t| acc + t)
    }

    /// Evaluates with IEEE-754 double arithmetic.
    pub fn eval<B: Bindings + ?Sized>(&self, bindings: &B) -> Result<f64, EvalError> {
        let domain = |message, e: &Expr| EvalError::Domain {
            message,
            subexpr: e.to_string(),
        };
        match self.node() {
            Node::Const(c) => Ok(*c),
            Node::Var(name) => bindings
                .value(name)
                .ok_or_else(|| EvalError::Unbound(name.to_string())),
            Node::Unary(op, a) => {
                let x = a.eval(bindings)?;
                op.apply(x).map_err(|m| domain(m, self))
            }
            Node::Binary(op, a, b) => {
                let x = a.eval(bindings)?;
                let y = b.eval(bindings)?;
                op.apply(x, y).map_err(|m| domain(m, self))
            }
            Node::Pow(a, n) => {
                let x = a.eval(bindings)?;
                apply_pow(x, *n).map_err(|m| domain(m, self))
            }
        }
    }

    /// Set of variable names the expression depends on syntactically.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self.node() {
            Node::Const(_) => {}
            Node::Var(name) => {
                out.insert(name.to_string());
            }
            Node::Unary(_, a) | Node::Pow(a, _) => a.collect_vars(out),
            Node::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn contains_var(&self, name: &str) -> bool {
        match self.node() {
            Node::Const(_) => false,
            Node::Var(v) => &**v == name,
            Node::Unary(_, a) | Node::Pow(a, _) => a.contains_var(name),
            Node::Binary(_, a, b) => a.contains_var(name) || b.contains_var(name),
        }
    }

    /// Replaces variables by expressions; unmapped variables are kept.
    pub fn substitute(&self, map: &HashMap<String, Expr>) -> Expr {
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(name) => map.get(&**name).cloned().unwrap_or_else(|| self.clone()),
            Node::Unary(op, a) => Expr::unary(*op, a.substitute(map)),
            Node::Binary(op, a, b) => Expr::binary(*op, a.substitute(map), b.substitute(map)),
            Node::Pow(a, n) => a.substitute(map).pow(*n),
        }
    }

    /// Number of nodes, counting shared subtrees once per occurrence.
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Unary(_, a) | Node::Pow(a, _) => 1 + a.size(),
            Node::Binary(_, a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn to_latex(&self) -> String {
        latex::render(self)
    }

    fn precedence(&self) -> u8 {
        match self.node() {
            Node::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => 1,
            Node::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => 2,
            Node::Unary(UnaryOp::Neg, _) => 3,
            Node::Pow(..) => 4,
            // negative literals print parenthesized
            Node::Const(_) | Node::Var(_) | Node::Unary(..) => 5,
        }
    }
}

fn write_const(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    if c < 0.0 || (c == 0.0 && c.is_sign_negative()) {
        write!(f, "({c})")
    } else {
        write!(f, "{c}")
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => write_const(f, *c),
            Node::Var(name) => f.write_str(name),
            Node::Unary(UnaryOp::Neg, a) => {
                f.write_str("-")?;
                write_child(f, a, a.precedence() < 3)
            }
            Node::Unary(op, a) => write!(f, "{}({a})", op.function_name().unwrap_or("?")),
            Node::Binary(op, a, b) => {
                let p = self.precedence();
                write_child(f, a, a.precedence() < p)?;
                write!(f, " {} ", op.symbol())?;
                write_child(f, b, b.precedence() <= p)
            }
            Node::Pow(a, n) => {
                write_child(f, a, a.precedence() <= 4)?;
                f.write_str("^")?;
                write_const(f, *n)
            }
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl From<f64> for Expr {
    fn from(value: f64) -> Self {
        Expr::constant(value)
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $op:expr) => {
        impl std::ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::binary($op, self, rhs)
            }
        }
        impl std::ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::binary($op, self.clone(), rhs.clone())
            }
        }
        impl std::ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::binary($op, self, rhs.clone())
            }
        }
        impl std::ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::binary($op, self.clone(), rhs)
            }
        }
        impl std::ops::$trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::binary($op, self, Expr::constant(rhs))
            }
        }
        impl std::ops::$trait<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::binary($op, Expr::constant(self), rhs)
            }
        }
    };
}

impl_binop!(Add, add, BinaryOp::Add);
impl_binop!(Sub, sub, BinaryOp::Sub);
impl_binop!(Mul, mul, BinaryOp::Mul);
impl_binop!(Div, div, BinaryOp::Div);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::unary(UnaryOp::Neg, self)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::unary(UnaryOp::Neg, self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(p("y^2/2").eval(&[("y", 3.0)][..]).unwrap(), 4.5);
        assert_eq!(p("sqrt(x)").eval(&[("x", 0.0)][..]).unwrap(), 0.0);
        let err = p("1/x").eval(&[("x", 0.0)][..]).unwrap_err();
        assert!(matches!(err, EvalError::Domain { ref subexpr, .. } if subexpr == "1 / x"));
    }

    #[test]
    fn eval_reports_unbound_and_log_domain() {
        assert_eq!(
            p("x + w").eval(&[("x", 1.0)][..]),
            Err(EvalError::Unbound("w".into()))
        );
        assert!(p("log(x)").eval(&[("x", -1.0)][..]).is_err());
        assert!(p("x^0.5").eval(&[("x", -1.0)][..]).is_err());
        assert_eq!(p("x^(-2)").eval(&[("x", 2.0)][..]).unwrap(), 0.25);
    }

    #[test]
    fn smart_constructors_fold() {
        let x = Expr::var("x");
        assert_eq!((x.clone() * 1.0).to_string(), "x");
        assert!((x.clone() * 0.0).is_zero());
        assert_eq!((Expr::zero() - x.clone()).to_string(), "-x");
        assert_eq!((-(-x.clone())).to_string(), "x");
        assert_eq!((Expr::constant(2.0) * 3.0).as_const(), Some(6.0));
        assert_eq!(x.pow(1.0), x);
    }

    #[test]
    fn free_vars_union() {
        let e = p("sin(x)*p + y_1^2");
        let names: Vec<_> = e.free_vars().into_iter().collect();
        assert_eq!(names, ["p", "x", "y_1"]);
    }

    #[test]
    fn display_keeps_structure() {
        for src in ["a - (b - c)", "a / (b * c)", "-(a + b)", "(-a)^2", "-a^2", "a * -b", "x^(-1)"] {
            let e = p(src);
            assert_eq!(p(&e.to_string()), e, "{src}");
        }
    }

    #[test]
    fn substitute_replaces() {
        let e = p("y_1^2 + x");
        let mut map = HashMap::new();
        map.insert("y_1".to_string(), p("2*q"));
        let s = e.substitute(&map);
        assert_eq!(s.eval(&[("q", 1.5), ("x", 1.0)][..]).unwrap(), 10.0);
    }
}
