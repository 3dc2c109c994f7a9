use super::{BinaryOp, Expr, Node, UnaryOp};

/// Renders a variable name: `y2_3` -> `y^{2}_{3}`, `x1` -> `x^{1}`,
/// `xdot12` -> `\dot{x}^{12}`, `q_2` -> `q_{2}`.
pub(crate) fn variable(name: &str) -> String {
    let (head, sub) = match name.split_once('_') {
        Some((h, s)) => (h, Some(s)),
        None => (name, None),
    };
    let split = head.find(|c: char| c.is_ascii_digit()).unwrap_or(head.len());
    let (mut stem, sup) = head.split_at(split);
    let mut dotted = false;
    if stem.len() > 3 && stem.ends_with("dot") {
        stem = &stem[..stem.len() - 3];
        dotted = true;
    }
    let mut out = if stem.chars().count() > 1 {
        format!("\\mathrm{{{stem}}}")
    } else {
        stem.to_string()
    };
    if dotted {
        out = format!("\\dot{{{out}}}");
    }
    if !sup.is_empty() {
        out.push_str(&format!("^{{{sup}}}"));
    }
    if let Some(s) = sub {
        out.push_str(&format!("_{{{s}}}"));
    }
    out
}

fn number(c: f64) -> String {
    if c.fract() == 0.0 && c.abs() < 1e15 {
        format!("{}", c as i64)
    } else {
        format!("{c}")
    }
}

fn prec(e: &Expr) -> u8 {
    match e.node() {
        Node::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => 1,
        Node::Binary(BinaryOp::Mul, ..) => 2,
        Node::Unary(UnaryOp::Neg, _) => 3,
        Node::Const(c) if *c < 0.0 => 3,
        _ => 5,
    }
}

fn wrap(e: &Expr, parens: bool) -> String {
    if parens {
        format!("\\left({}\\right)", render(e))
    } else {
        render(e)
    }
}

pub(crate) fn render(e: &Expr) -> String {
    match e.node() {
        Node::Const(c) => number(*c),
        Node::Var(name) => variable(name),
        Node::Unary(UnaryOp::Neg, a) => format!("-{}", wrap(a, prec(a) < 3)),
        Node::Unary(UnaryOp::Sqrt, a) => format!("\\sqrt{{{}}}", render(a)),
        Node::Unary(UnaryOp::Abs, a) => format!("\\left|{}\\right|", render(a)),
        Node::Unary(op, a) => {
            let name = match op {
                UnaryOp::Sin => "\\sin",
                UnaryOp::Cos => "\\cos",
                UnaryOp::Exp => "\\exp",
                UnaryOp::Log => "\\log",
                _ => "\\operatorname{sign}",
            };
            format!("{name}\\left({}\\right)", render(a))
        }
        Node::Binary(BinaryOp::Add, a, b) => format!("{} + {}", render(a), wrap(b, prec(b) < 2)),
        Node::Binary(BinaryOp::Sub, a, b) => format!("{} - {}", render(a), wrap(b, prec(b) <= 1 || prec(b) == 3)),
        Node::Binary(BinaryOp::Mul, a, b) => {
            format!("{} \\, {}", wrap(a, prec(a) < 2), wrap(b, prec(b) < 5))
        }
        Node::Binary(BinaryOp::Div, a, b) => format!("\\frac{{{}}}{{{}}}", render(a), render(b)),
        Node::Pow(a, n) => {
            let base = match a.node() {
                Node::Var(_) => render(a),
                Node::Const(c) if *c >= 0.0 => render(a),
                _ => format!("\\left({}\\right)", render(a)),
            };
            if a.as_const().is_none() && matches!(a.node(), Node::Var(name) if name.contains('_') || name.chars().any(|c| c.is_ascii_digit())) {
                format!("\\left({base}\\right)^{{{}}}", number(*n))
            } else {
                format!("{base}^{{{}}}", number(*n))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn variable_names() {
        assert_eq!(variable("y2_3"), "y^{2}_{3}");
        assert_eq!(variable("x1"), "x^{1}");
        assert_eq!(variable("xdot12"), "\\dot{x}^{12}");
        assert_eq!(variable("q_2"), "q_{2}");
        assert_eq!(variable("pi"), "\\mathrm{pi}");
    }

    #[test]
    fn renders_fractions_and_powers() {
        let e = parse("y_1^2/2 - sqrt(x)").unwrap();
        assert_eq!(e.to_latex(), "\\frac{\\left(y_{1}\\right)^{2}}{2} - \\sqrt{x}");
    }
}
