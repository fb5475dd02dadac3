//! Expression language for symbol components, and the symbol model itself.

use std::collections::BTreeSet;
use std::fmt;

mod eval;
mod parse;
mod symbol;

pub use eval::{evaluate, Bound, EvalError, EvalErrorKind};
pub use parse::{parse, ParseError};
pub use symbol::{evaluate_symbol, CompiledSymbol, SymbolSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 6] = [Func::Sin, Func::Cos, Func::Exp, Func::Log, Func::Sqrt, Func::Abs];

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

/// Parsed expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn one() -> Expr {
        Expr::Num(1.0)
    }

    /// Names of all referenced variables.
    pub fn variables(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Var(v) = e {
                out.insert(v.as_str());
            }
        });
        out
    }

    /// True when the tree uses `log` or `/`; both can be unbounded on the domain.
    pub fn may_be_unbounded(&self) -> bool {
        let mut hit = false;
        self.visit(&mut |e| {
            if matches!(e, Expr::Call(Func::Log, _) | Expr::Bin(BinOp::Div, ..)) {
                hit = true;
            }
        });
        hit
    }

    pub fn is_constant_one(&self) -> bool {
        matches!(self, Expr::Num(x) if *x == 1.0)
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Num(_) | Expr::Var(_) => {}
            Expr::Neg(e) | Expr::Call(_, e) => e.visit(f),
            Expr::Bin(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }
}

/// Fully parenthesized form; `parse` of the output rebuilds the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) if *x < 0.0 => write!(f, "(-{})", -x),
            Expr::Num(x) => write!(f, "{x}"),
            Expr::Var(v) => f.write_str(v),
            Expr::Neg(e) => write!(f, "(-({e}))"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..1000, 0u32..4).prop_map(|(m, e)| Expr::Num(f64::from(m) / f64::from(10u32.pow(e)))),
            prop::sample::select(vec!["r1", "r2", "s1", "sig2", "x_1"]).prop_map(|v| Expr::Var(v.into())),
        ];
        leaf.prop_recursive(6, 64, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (
                    prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow]),
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, a, b)| Expr::Bin(op, Box::new(a), Box::new(b))),
                (prop::sample::select(Func::ALL.to_vec()), inner)
                    .prop_map(|(f, e)| Expr::Call(f, Box::new(e))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let printed = e.to_string();
            prop_assert_eq!(parse(&printed).unwrap(), e);
        }
    }

    #[test]
    fn variable_listing() {
        let e = parse("r1^2/(1+r1^2) * sin(s2) + s1").unwrap();
        assert_eq!(e.variables().into_iter().collect::<Vec<_>>(), vec!["r1", "s1", "s2"]);
        assert!(e.may_be_unbounded());
        assert!(!parse("sqrt(s1)").unwrap().may_be_unbounded());
        assert!(parse("log(s1)").unwrap().may_be_unbounded());
    }
}
