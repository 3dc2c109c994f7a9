use super::{BinaryOp, Expr, Node, UnaryOp};

impl Expr {
    /// Exact partial derivative with respect to the variable `v`.
    ///
    /// `abs` is differentiated to `sign`, so the derivative at 0 is 0.
    pub fn diff(&self, v: &str) -> Expr {
        match self.node() {
            Node::Const(_) => Expr::zero(),
            Node::Var(name) => {
                if &**name == v {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Unary(op, a) => {
                let da = a.diff(v);
                if da.is_zero() {
                    return Expr::zero();
                }
                match op {
                    UnaryOp::Neg => -da,
                    UnaryOp::Sqrt => da / (2.0 * self.clone()),
                    UnaryOp::Sin => a.cos() * da,
                    UnaryOp::Cos => -(a.sin() * da),
                    UnaryOp::Exp => self.clone() * da,
                    UnaryOp::Log => da / a.clone(),
                    UnaryOp::Abs => Expr::unary(UnaryOp::Sign, a.clone()) * da,
                    UnaryOp::Sign => Expr::zero(),
                }
            }
            Node::Binary(op, a, b) => {
                let da = a.diff(v);
                let db = b.diff(v);
                match op {
                    BinaryOp::Add => da + db,
                    BinaryOp::Sub => da - db,
                    BinaryOp::Mul => da * b + a * &db,
                    BinaryOp::Div => {
                        if db.is_zero() {
                            da / b
                        } else {
                            da / b - a * &db / b.pow(2.0)
                        }
                    }
                }
            }
            Node::Pow(a, n) => {
                let da = a.diff(v);
                if da.is_zero() {
                    return Expr::zero();
                }
                *n * a.pow(n - 1.0) * da
            }
        }
    }

    /// Repeated partial derivative along the given variables, left to right.
    pub fn diff_many(&self, vars: &[&str]) -> Expr {
        vars.iter().fold(self.clone(), |e, v| e.diff(v))
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::parse;
    use crate::sampling::{seeded_rng, uniform_point};

    fn check_against_fd(src: &str, vars: &[&str], lo: f64, hi: f64) {
        let e = parse(src).unwrap();
        let mut rng = seeded_rng(11);
        let h = 1e-5;
        for _ in 0..100 {
            let pt = uniform_point(&mut rng, vars.len(), lo, hi);
            let bind: Vec<(&str, f64)> = vars.iter().copied().zip(pt.iter().copied()).collect();
            for (k, v) in vars.iter().enumerate() {
                let exact = e.diff(v).eval(&bind[..]).unwrap();
                let mut plus = bind.clone();
                let mut minus = bind.clone();
                plus[k].1 += h;
                minus[k].1 -= h;
                let fd = (e.eval(&plus[..]).unwrap() - e.eval(&minus[..]).unwrap()) / (2.0 * h);
                let scale = exact.abs().max(fd.abs()).max(1.0);
                assert!((exact - fd).abs() <= 1e-6 * scale, "{src} d/d{v}: {exact} vs {fd}");
            }
        }
    }

    #[test]
    fn simple_rules() {
        assert_eq!(parse("y^2/2").unwrap().diff("y").to_string(), "y");
        assert_eq!(parse("sin(x)*p").unwrap().diff("x").to_string(), "cos(x) * p");
        let d = parse("sqrt(u)").unwrap().diff("u");
        assert_eq!(d.eval(&[("u", 4.0)][..]).unwrap(), 0.25);
    }

    #[test]
    fn abs_derivative_at_zero_is_zero() {
        let d = parse("abs(x)").unwrap().diff("x");
        assert_eq!(d.eval(&[("x", 0.0)][..]).unwrap(), 0.0);
        assert_eq!(d.eval(&[("x", -3.0)][..]).unwrap(), -1.0);
    }

    #[test]
    fn matches_central_differences() {
        check_against_fd("x^3*y - sin(x*y) + cos(y)^2/3", &["x", "y"], -2.0, 2.0);
        check_against_fd("exp(x - y^2) * (x + 1)^(-2)", &["x", "y"], 0.1, 2.0);
        check_against_fd("sqrt(x^2 + y^2 + 1) + log(x^2 + 2)/y", &["x", "y"], 0.5, 2.0);
        check_against_fd("abs(x*y - 5) + x^2.5", &["x", "y"], 0.1, 2.0);
    }
}
