use super::{apply_pow, BinaryOp, EvalError, Expr, Node, UnaryOp};

#[derive(Clone, Debug)]
enum Op {
    Const(f64),
    Slot(usize),
    Unary(UnaryOp),
    Binary(BinaryOp),
    Pow(f64),
}

/// Postfix program for fast repeated evaluation over positional variables.
///
/// Evaluation gives bit-identical results to [`Expr::eval`] because the same
/// operations run in the same order.
#[derive(Clone, Debug)]
pub struct CompiledExpr {
    ops: Vec<Op>,
    /// Source node of every op, for domain-error messages.
    origin: Vec<Expr>,
    depth: usize,
}

impl CompiledExpr {
    /// Compiles `e` against the positional variable list `slots`.
    pub fn new(e: &Expr, slots: &[String]) -> Result<CompiledExpr, EvalError> {
        let mut ops = Vec::new();
        let mut origin = Vec::new();
        emit(e, slots, &mut ops, &mut origin)?;
        let mut depth = 0usize;
        let mut max_depth = 0usize;
        for op in &ops {
            match op {
                Op::Const(_) | Op::Slot(_) => depth += 1,
                Op::Binary(_) => depth -= 1,
                Op::Unary(_) | Op::Pow(_) => {}
            }
            max_depth = max_depth.max(depth);
        }
        Ok(CompiledExpr {
            ops,
            origin,
            depth: max_depth,
        })
    }

    pub fn eval(&self, values: &[f64]) -> Result<f64, EvalError> {
        let mut stack: Vec<f64> = Vec::with_capacity(self.depth);
        for (op, src) in self.ops.iter().zip(&self.origin) {
            let domain = |message| EvalError::Domain {
                message,
                subexpr: src.to_string(),
            };
            match op {
                Op::Const(c) => stack.push(*c),
                Op::Slot(i) => stack.push(values[*i]),
                Op::Unary(u) => {
                    let x = stack.pop().expect("compiled stack underflow");
                    stack.push(u.apply(x).map_err(domain)?);
                }
                Op::Binary(b) => {
                    let y = stack.pop().expect("compiled stack underflow");
                    let x = stack.pop().expect("compiled stack underflow");
                    stack.push(b.apply(x, y).map_err(domain)?);
                }
                Op::Pow(n) => {
                    let x = stack.pop().expect("compiled stack underflow");
                    stack.push(apply_pow(x, *n).map_err(domain)?);
                }
            }
        }
        Ok(stack.pop().unwrap_or(0.0))
    }
}

fn emit(e: &Expr, slots: &[String], ops: &mut Vec<Op>, origin: &mut Vec<Expr>) -> Result<(), EvalError> {
    match e.node() {
        Node::Const(c) => ops.push(Op::Const(*c)),
        Node::Var(name) => {
            let idx = slots
                .iter()
                .position(|s| s.as_str() == &**name)
                .ok_or_else(|| EvalError::Unbound(name.to_string()))?;
            ops.push(Op::Slot(idx));
        }
        Node::Unary(op, a) => {
            emit(a, slots, ops, origin)?;
            ops.push(Op::Unary(*op));
        }
        Node::Binary(op, a, b) => {
            emit(a, slots, ops, origin)?;
            emit(b, slots, ops, origin)?;
            ops.push(Op::Binary(*op));
        }
        Node::Pow(a, n) => {
            emit(a, slots, ops, origin)?;
            ops.push(Op::Pow(*n));
        }
    }
    origin.resize(ops.len(), e.clone());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn matches_tree_evaluation_bitwise() {
        let e = parse("sin(x)*y^3 - exp(-x/y) + sqrt(abs(x - y))").unwrap();
        let slots = vec!["x".to_string(), "y".to_string()];
        let c = CompiledExpr::new(&e, &slots).unwrap();
        for (x, y) in [(0.3, 1.7), (-1.1, 0.4), (2.0, -0.9)] {
            let a = c.eval(&[x, y]).unwrap();
            let b = e.eval(&[("x", x), ("y", y)][..]).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn unbound_at_compile_time_and_domain_at_run_time() {
        let e = parse("log(x) + z").unwrap();
        assert!(CompiledExpr::new(&e, &["x".to_string()]).is_err());
        let c = CompiledExpr::new(&e, &["x".to_string(), "z".to_string()]).unwrap();
        let err = c.eval(&[-1.0, 0.0]).unwrap_err();
        assert!(matches!(err, EvalError::Domain { ref subexpr, .. } if subexpr == "log(x)"));
    }
}
