use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use super::{BinOp, Expr, Func};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalErrorKind {
    UnboundVariable(String),
    DivisionByZero,
    LogDomain,
    SqrtDomain,
    PowDomain,
}

impl fmt::Display for EvalErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalErrorKind::UnboundVariable(v) => write!(f, "unbound variable `{v}`"),
            EvalErrorKind::DivisionByZero => f.write_str("division by zero"),
            EvalErrorKind::LogDomain => f.write_str("log of a non-positive number"),
            EvalErrorKind::SqrtDomain => f.write_str("sqrt of a negative number"),
            EvalErrorKind::PowDomain => f.write_str("negative base with non-integer exponent"),
        }
    }
}

/// Evaluation failure together with the offending subexpression.
#[derive(Clone, Debug, PartialEq, Error)]
#[error("evaluation error: {kind} in `{subexpr}`")]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub subexpr: String,
}

fn apply_bin(op: BinOp, a: f64, b: f64) -> Result<f64, EvalErrorKind> {
    Ok(match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => {
            if b == 0.0 {
                return Err(EvalErrorKind::DivisionByZero);
            }
            a / b
        }
        BinOp::Pow => {
            if a < 0.0 && b.fract() != 0.0 {
                return Err(EvalErrorKind::PowDomain);
            }
            if a == 0.0 && b < 0.0 {
                return Err(EvalErrorKind::DivisionByZero);
            }
            if b.fract() == 0.0 && b.abs() <= 64.0 {
                a.powi(b as i32)
            } else {
                a.powf(b)
            }
        }
    })
}

fn apply_func(func: Func, x: f64) -> Result<f64, EvalErrorKind> {
    Ok(match func {
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Exp => x.exp(),
        Func::Log => {
            if x <= 0.0 {
                return Err(EvalErrorKind::LogDomain);
            }
            x.ln()
        }
        Func::Sqrt => {
            if x < 0.0 {
                return Err(EvalErrorKind::SqrtDomain);
            }
            x.sqrt()
        }
        Func::Abs => x.abs(),
    })
}

impl Expr {
    /// Evaluates against a name → value map.
    pub fn eval(&self, env: &HashMap<String, f64>) -> Result<f64, EvalError> {
        let fail = |kind| EvalError { kind, subexpr: self.to_string() };
        match self {
            Expr::Num(x) => Ok(*x),
            Expr::Var(v) => env
                .get(v)
                .copied()
                .ok_or_else(|| fail(EvalErrorKind::UnboundVariable(v.clone()))),
            Expr::Neg(e) => Ok(-e.eval(env)?),
            Expr::Bin(op, a, b) => apply_bin(*op, a.eval(env)?, b.eval(env)?).map_err(fail),
            Expr::Call(func, e) => apply_func(*func, e.eval(env)?).map_err(fail),
        }
    }

    /// Resolves variable names to slot indices.
    pub fn bind(&self, names: &[&str]) -> Result<Bound, EvalError> {
        let node = self.bind_node(names)?;
        Ok(Bound { node, source: self.clone() })
    }

    fn bind_node(&self, names: &[&str]) -> Result<Node, EvalError> {
        Ok(match self {
            Expr::Num(x) => Node::Num(*x),
            Expr::Var(v) => match names.iter().position(|n| n == v) {
                Some(i) => Node::Slot(i),
                None => {
                    return Err(EvalError {
                        kind: EvalErrorKind::UnboundVariable(v.clone()),
                        subexpr: v.clone(),
                    })
                }
            },
            Expr::Neg(e) => Node::Neg(Box::new(e.bind_node(names)?)),
            Expr::Bin(op, a, b) => {
                Node::Bin(*op, Box::new(a.bind_node(names)?), Box::new(b.bind_node(names)?))
            }
            Expr::Call(func, e) => Node::Call(*func, Box::new(e.bind_node(names)?)),
        })
    }
}

/// `evaluate(e, env)` in free-function form.
pub fn evaluate(e: &Expr, env: &HashMap<String, f64>) -> Result<f64, EvalError> {
    e.eval(env)
}

#[derive(Clone, Debug)]
enum Node {
    Num(f64),
    Slot(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn eval(&self, slots: &[f64]) -> Result<f64, EvalErrorKind> {
        match self {
            Node::Num(x) => Ok(*x),
            Node::Slot(i) => Ok(slots[*i]),
            Node::Neg(e) => Ok(-e.eval(slots)?),
            Node::Bin(op, a, b) => apply_bin(*op, a.eval(slots)?, b.eval(slots)?),
            Node::Call(func, e) => apply_func(*func, e.eval(slots)?),
        }
    }

    fn remap(&self, map: &[usize]) -> Node {
        match self {
            Node::Num(x) => Node::Num(*x),
            Node::Slot(i) => Node::Slot(map[*i]),
            Node::Neg(e) => Node::Neg(Box::new(e.remap(map))),
            Node::Bin(op, a, b) => Node::Bin(*op, Box::new(a.remap(map)), Box::new(b.remap(map))),
            Node::Call(func, e) => Node::Call(*func, Box::new(e.remap(map))),
        }
    }
}

/// Expression with variables resolved to positions in a value slice.
#[derive(Clone, Debug)]
pub struct Bound {
    node: Node,
    source: Expr,
}

impl Bound {
    pub fn eval(&self, slots: &[f64]) -> Result<f64, EvalError> {
        match self.node.eval(slots) {
            Ok(v) => Ok(v),
            Err(_) => Err(self.locate(slots)),
        }
    }

    /// Same expression reading slot `map[i]` wherever it read slot `i`.
    pub fn remap(&self, map: &[usize]) -> Bound {
        Bound { node: self.node.remap(map), source: self.source.clone() }
    }

    pub fn source(&self) -> &Expr {
        &self.source
    }

    // Re-walks the tree to find the innermost failing subexpression.
    fn locate(&self, slots: &[f64]) -> EvalError {
        fn walk(n: &Node, e: &Expr, slots: &[f64]) -> Result<f64, EvalError> {
            let fail = |kind| EvalError { kind, subexpr: e.to_string() };
            match (n, e) {
                (Node::Neg(a), Expr::Neg(ea)) => Ok(-walk(a, ea, slots)?),
                (Node::Bin(op, a, b), Expr::Bin(_, ea, eb)) => {
                    apply_bin(*op, walk(a, ea, slots)?, walk(b, eb, slots)?).map_err(fail)
                }
                (Node::Call(f, a), Expr::Call(_, ea)) => apply_func(*f, walk(a, ea, slots)?).map_err(fail),
                _ => n.eval(slots).map_err(fail),
            }
        }
        match walk(&self.node, &self.source, slots) {
            Err(e) => e,
            Ok(_) => unreachable!("bound evaluation failed but tree walk succeeded"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn env(pairs: &[(&str, f64)]) -> HashMap<String, f64> {
        pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
    }

    #[test]
    fn spec_examples() {
        let e = parse("r1/(1+r1)").unwrap();
        assert_eq!(evaluate(&e, &env(&[("r1", 1.0)])).unwrap(), 0.5);
        assert_eq!(parse("sqrt(s1)").unwrap().eval(&env(&[("s1", 0.25)])).unwrap(), 0.5);
        let err = parse("log(s1)").unwrap().eval(&env(&[("s1", 0.0)])).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::LogDomain);
        assert_eq!(err.subexpr, "log(s1)");
    }

    #[test]
    fn runtime_errors() {
        let e = parse("1 + x").unwrap();
        assert_eq!(e.eval(&env(&[])).unwrap_err().kind, EvalErrorKind::UnboundVariable("x".into()));
        let err = parse("2 * (1/(x-1))").unwrap().eval(&env(&[("x", 1.0)])).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::DivisionByZero);
        assert_eq!(err.subexpr, "(1 / (x - 1))");
        let err = parse("sqrt(0-x)").unwrap().eval(&env(&[("x", 1.0)])).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::SqrtDomain);
        let err = parse("(0-x)^0.5").unwrap().eval(&env(&[("x", 1.0)])).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::PowDomain);
        assert_eq!(parse("(0-x)^3").unwrap().eval(&env(&[("x", 2.0)])).unwrap(), -8.0);
    }

    #[test]
    fn bound_matches_tree() {
        let e = parse("sin(s1^2 - s2^2) + exp(-r1) * abs(s2 - 3)").unwrap();
        let b = e.bind(&["r1", "s1", "s2"]).unwrap();
        for &(r, s, t) in &[(0.5, 0.1, 0.9), (2.0, 0.7, 0.2)] {
            let direct = e.eval(&env(&[("r1", r), ("s1", s), ("s2", t)])).unwrap();
            assert_eq!(b.eval(&[r, s, t]).unwrap(), direct);
        }
        let moved = b.remap(&[2, 0, 1]);
        assert_eq!(moved.eval(&[0.1, 0.9, 0.5]).unwrap(), b.eval(&[0.5, 0.1, 0.9]).unwrap());
        assert!(e.bind(&["r1", "s1"]).is_err());
    }

    #[test]
    fn bound_error_names_subexpression() {
        let b = parse("1 + log(s1 - 0.5)").unwrap().bind(&["s1"]).unwrap();
        let err = b.eval(&[0.25]).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::LogDomain);
        assert_eq!(err.subexpr, "log((s1 - 0.5))");
    }

    #[test]
    fn polynomial_accuracy() {
        // dyadic inputs, depth-limited polynomial: exact in binary floating point
        let e = parse("((x^3 - 2*x^2) + 0.5*x - 0.125) * (x + 0.25)").unwrap();
        let x = 0.375;
        let exact = ((x * x * x - 2.0 * x * x) + 0.5 * x - 0.125) * (x + 0.25);
        let got = e.eval(&env(&[("x", x)])).unwrap();
        assert!((got - exact).abs() <= 1e-14 * exact.abs());
    }
}
