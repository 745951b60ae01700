//! Expression tree, printing and constant folding.

use std::collections::BTreeSet;
use std::fmt;

/// A variable reference. `X` is the scalar coordinate, `Coord(i)` is the
/// one-based coordinate `xi` of a vector point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X,
    Coord(usize),
    T,
}

impl Var {
    pub fn name(&self) -> String {
        match self {
            Var::X => "x".to_string(),
            Var::Coord(i) => format!("x{i}"),
            Var::T => "t".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(&self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Abs,
    Sign,
    Min,
    Max,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "sign" => Func::Sign,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sign => "sign",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Gt,
}

/// Branch condition of a piecewise node. Comparisons are strict, so equality
/// selects the second branch.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub lhs: Node,
    pub op: CmpOp,
    pub rhs: Node,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(Var),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
    Piecewise {
        cond: Box<Condition>,
        then: Box<Node>,
        otherwise: Box<Node>,
    },
}

impl Node {
    pub fn binary(op: BinOp, a: Node, b: Node) -> Node {
        Node::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Node::Const(_) => {}
            Node::Var(v) => {
                out.insert(*v);
            }
            Node::Neg(a) => a.collect_vars(out),
            Node::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Node::Call(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            Node::Piecewise {
                cond,
                then,
                otherwise,
            } => {
                cond.lhs.collect_vars(out);
                cond.rhs.collect_vars(out);
                then.collect_vars(out);
                otherwise.collect_vars(out);
            }
        }
    }

    fn as_const(&self) -> Option<f64> {
        match self {
            Node::Const(v) => Some(*v),
            _ => None,
        }
    }

    /// Constant folding plus a handful of algebraic identities that are exact
    /// for every finite operand (`a - a`, `0 * a`, `a + 0`, ...).
    pub fn simplified(&self) -> Node {
        match self {
            Node::Const(_) | Node::Var(_) => self.clone(),
            Node::Neg(a) => {
                let a = a.simplified();
                match a {
                    Node::Const(v) => Node::Const(-v),
                    Node::Neg(inner) => *inner,
                    other => Node::Neg(Box::new(other)),
                }
            }
            Node::Binary(op, a, b) => simplify_binary(*op, a.simplified(), b.simplified()),
            Node::Call(f, args) => {
                let args: Vec<Node> = args.iter().map(Node::simplified).collect();
                if let Some(consts) = args.iter().map(Node::as_const).collect::<Option<Vec<_>>>() {
                    if let Some(v) = fold_call(*f, &consts) {
                        return Node::Const(v);
                    }
                }
                if matches!(f, Func::Min | Func::Max) && args[0] == args[1] {
                    return args[0].clone();
                }
                Node::Call(*f, args)
            }
            Node::Piecewise {
                cond,
                then,
                otherwise,
            } => {
                let lhs = cond.lhs.simplified();
                let rhs = cond.rhs.simplified();
                let then = then.simplified();
                let otherwise = otherwise.simplified();
                if then == otherwise {
                    return then;
                }
                if let (Some(l), Some(r)) = (lhs.as_const(), rhs.as_const()) {
                    let taken = match cond.op {
                        CmpOp::Lt => l < r,
                        CmpOp::Gt => l > r,
                    };
                    return if taken { then } else { otherwise };
                }
                Node::Piecewise {
                    cond: Box::new(Condition {
                        lhs,
                        op: cond.op,
                        rhs,
                    }),
                    then: Box::new(then),
                    otherwise: Box::new(otherwise),
                }
            }
        }
    }
}

fn fold_call(f: Func, args: &[f64]) -> Option<f64> {
    let v = match f {
        Func::Exp => args[0].exp(),
        Func::Log if args[0] > 0.0 => args[0].ln(),
        Func::Sqrt if args[0] >= 0.0 => args[0].sqrt(),
        Func::Abs => args[0].abs(),
        Func::Sign => sign(args[0]),
        Func::Min => args[0].min(args[1]),
        Func::Max => args[0].max(args[1]),
        _ => return None,
    };
    v.is_finite().then_some(v)
}

pub(crate) fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn simplify_binary(op: BinOp, a: Node, b: Node) -> Node {
    if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
        let v = match op {
            BinOp::Add => x + y,
            BinOp::Sub => x - y,
            BinOp::Mul => x * y,
            BinOp::Div if y != 0.0 => x / y,
            BinOp::Pow => x.powf(y),
            _ => f64::NAN,
        };
        if v.is_finite() {
            return Node::Const(v);
        }
        return Node::binary(op, a, b);
    }
    let is = |n: &Node, c: f64| n.as_const() == Some(c);
    match op {
        BinOp::Add if is(&a, 0.0) => b,
        BinOp::Add if is(&b, 0.0) => a,
        BinOp::Add if Node::Neg(Box::new(a.clone())) == b || Node::Neg(Box::new(b.clone())) == a => {
            Node::Const(0.0)
        }
        BinOp::Sub if a == b => Node::Const(0.0),
        BinOp::Sub if is(&b, 0.0) => a,
        BinOp::Sub if is(&a, 0.0) => Node::Neg(Box::new(b)).simplified(),
        BinOp::Mul if is(&a, 0.0) || is(&b, 0.0) => Node::Const(0.0),
        BinOp::Mul if is(&a, 1.0) => b,
        BinOp::Mul if is(&b, 1.0) => a,
        BinOp::Div if is(&a, 0.0) && !is(&b, 0.0) => Node::Const(0.0),
        BinOp::Div if is(&b, 1.0) => a,
        BinOp::Pow if is(&b, 1.0) => a,
        BinOp::Pow if is(&b, 0.0) => Node::Const(1.0),
        _ => Node::binary(op, a, b),
    }
}

fn write_const(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    if v.is_sign_negative() {
        write!(f, "(-{:?})", -v)
    } else {
        write!(f, "{v:?}")
    }
}

/// Fully parenthesised printing; re-parsing the output rebuilds the same tree.
impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(v) => write_const(f, *v),
            Node::Var(v) => write!(f, "{}", v.name()),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Node::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Node::Piecewise {
                cond,
                then,
                otherwise,
            } => {
                let op = match cond.op {
                    CmpOp::Lt => "<",
                    CmpOp::Gt => ">",
                };
                write!(
                    f,
                    "piecewise({} {op} {}, {then}, {otherwise})",
                    cond.lhs, cond.rhs
                )
            }
        }
    }
}
