//! Flat postfix program for fast repeated evaluation of an expression tree.
//!
//! Piecewise branches compile to jumps so the branch not taken is never
//! evaluated (a domain error there must not leak out).

use super::ast::{sign, BinOp, CmpOp, Func, Node, Var};
use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const(f64),
    Coord(usize),
    Time,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    PowInt(i32),
    Exp,
    Log,
    Sqrt,
    Abs,
    Sign,
    Min,
    Max,
    /// Pop rhs and lhs; jump to the target when the comparison is false.
    JumpUnless(CmpOp, usize),
    Jump(usize),
}

const INLINE_STACK: usize = 48;
/// Most coefficient expressions fit here, which keeps the zeroing cheap.
const SMALL_STACK: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Program {
    ops: Vec<Op>,
    depth: usize,
    /// Whether the scalar variable `x` appears (needs a 1-point).
    uses_scalar: bool,
    /// Largest one-based coordinate index referenced.
    max_coord: usize,
}

impl Program {
    pub(crate) fn compile(node: &Node) -> Program {
        let mut p = Program {
            ops: Vec::new(),
            depth: 0,
            uses_scalar: false,
            max_coord: 0,
        };
        p.emit(node);
        p.depth = p.measure_depth();
        p
    }

    fn emit(&mut self, node: &Node) {
        match node {
            Node::Const(v) => self.ops.push(Op::Const(*v)),
            Node::Var(Var::X) => {
                self.uses_scalar = true;
                self.ops.push(Op::Coord(0));
            }
            Node::Var(Var::Coord(i)) => {
                self.max_coord = self.max_coord.max(*i);
                self.ops.push(Op::Coord(i - 1));
            }
            Node::Var(Var::T) => self.ops.push(Op::Time),
            Node::Neg(a) => {
                self.emit(a);
                self.ops.push(Op::Neg);
            }
            Node::Binary(op, a, b) => {
                self.emit(a);
                if let (BinOp::Pow, Node::Const(e)) = (op, b.as_ref()) {
                    if e.fract() == 0.0 && e.abs() <= 64.0 {
                        self.ops.push(Op::PowInt(*e as i32));
                        return;
                    }
                }
                self.emit(b);
                self.ops.push(match op {
                    BinOp::Add => Op::Add,
                    BinOp::Sub => Op::Sub,
                    BinOp::Mul => Op::Mul,
                    BinOp::Div => Op::Div,
                    BinOp::Pow => Op::Pow,
                });
            }
            Node::Call(f, args) => {
                for a in args {
                    self.emit(a);
                }
                self.ops.push(match f {
                    Func::Exp => Op::Exp,
                    Func::Log => Op::Log,
                    Func::Sqrt => Op::Sqrt,
                    Func::Abs => Op::Abs,
                    Func::Sign => Op::Sign,
                    Func::Min => Op::Min,
                    Func::Max => Op::Max,
                });
            }
            Node::Piecewise {
                cond,
                then,
                otherwise,
            } => {
                self.emit(&cond.lhs);
                self.emit(&cond.rhs);
                let branch = self.ops.len();
                self.ops.push(Op::JumpUnless(cond.op, 0));
                self.emit(then);
                let skip = self.ops.len();
                self.ops.push(Op::Jump(0));
                let else_at = self.ops.len();
                self.emit(otherwise);
                let end = self.ops.len();
                self.ops[branch] = Op::JumpUnless(cond.op, else_at);
                self.ops[skip] = Op::Jump(end);
            }
        }
    }

    /// Maximum stack height over every control path (branches are
    /// balanced, so a linear scan that resets at jump targets is exact
    /// enough to bound it from above).
    fn measure_depth(&self) -> usize {
        let mut h: isize = 0;
        let mut max: isize = 0;
        for op in &self.ops {
            h += match op {
                Op::Const(_) | Op::Coord(_) | Op::Time => 1,
                Op::Neg
                | Op::PowInt(_)
                | Op::Exp
                | Op::Log
                | Op::Sqrt
                | Op::Abs
                | Op::Sign
                | Op::Jump(_) => 0,
                Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Pow | Op::Min | Op::Max => -1,
                Op::JumpUnless(..) => -2,
            };
            max = max.max(h);
        }
        max.max(1) as usize
    }

    pub(crate) fn uses_scalar(&self) -> bool {
        self.uses_scalar
    }

    pub(crate) fn max_coord(&self) -> usize {
        self.max_coord
    }

    pub(crate) fn eval(&self, point: &[f64], t: f64) -> Result<f64, EvalError> {
        if self.uses_scalar && point.len() != 1 {
            return Err(EvalError::DimensionMismatch {
                expected: 1,
                got: point.len(),
            });
        }
        if self.max_coord > point.len() {
            return Err(EvalError::DimensionMismatch {
                expected: self.max_coord,
                got: point.len(),
            });
        }
        if let [Op::Const(v)] = self.ops[..] {
            return Ok(v);
        }
        if self.depth <= SMALL_STACK {
            let mut stack = [0.0f64; SMALL_STACK];
            self.run(&mut stack, point, t)
        } else if self.depth <= INLINE_STACK {
            let mut stack = [0.0f64; INLINE_STACK];
            self.run(&mut stack, point, t)
        } else {
            let mut stack = vec![0.0f64; self.depth];
            self.run(&mut stack, point, t)
        }
    }

    fn run(&self, stack: &mut [f64], point: &[f64], t: f64) -> Result<f64, EvalError> {
        let mut sp = 0usize;
        let mut pc = 0usize;
        let ops = &self.ops;
        while pc < ops.len() {
            let op = ops[pc];
            pc += 1;
            match op {
                Op::Const(v) => {
                    stack[sp] = v;
                    sp += 1;
                }
                Op::Coord(i) => {
                    stack[sp] = point[i];
                    sp += 1;
                }
                Op::Time => {
                    stack[sp] = t;
                    sp += 1;
                }
                Op::Jump(to) => pc = to,
                Op::JumpUnless(cmp, to) => {
                    sp -= 2;
                    let (l, r) = (stack[sp], stack[sp + 1]);
                    let taken = match cmp {
                        CmpOp::Lt => l < r,
                        CmpOp::Gt => l > r,
                    };
                    if !taken {
                        pc = to;
                    }
                }
                Op::Neg | Op::PowInt(_) | Op::Exp | Op::Log | Op::Sqrt | Op::Abs | Op::Sign => {
                    let a = stack[sp - 1];
                    let v = match op {
                        Op::Neg => -a,
                        Op::PowInt(n) => {
                            if n < 0 && a == 0.0 {
                                return Err(EvalError::Domain {
                                    op: "^",
                                    detail: "zero raised to a negative power".into(),
                                });
                            }
                            a.powi(n)
                        }
                        Op::Exp => a.exp(),
                        Op::Log => {
                            if a <= 0.0 {
                                return Err(EvalError::Domain {
                                    op: "log",
                                    detail: format!("log of nonpositive value {a:?}"),
                                });
                            }
                            a.ln()
                        }
                        Op::Sqrt => {
                            if a < 0.0 {
                                return Err(EvalError::Domain {
                                    op: "sqrt",
                                    detail: format!("sqrt of negative value {a:?}"),
                                });
                            }
                            a.sqrt()
                        }
                        Op::Abs => a.abs(),
                        _ => sign(a),
                    };
                    stack[sp - 1] = check(v, op)?;
                }
                _ => {
                    sp -= 1;
                    let b = stack[sp];
                    let a = stack[sp - 1];
                    let v = match op {
                        Op::Add => a + b,
                        Op::Sub => a - b,
                        Op::Mul => a * b,
                        Op::Div => {
                            if b == 0.0 {
                                return Err(EvalError::Domain {
                                    op: "/",
                                    detail: "division by zero".into(),
                                });
                            }
                            a / b
                        }
                        Op::Pow => a.powf(b),
                        Op::Min => a.min(b),
                        _ => a.max(b),
                    };
                    stack[sp - 1] = check(v, op)?;
                }
            }
        }
        Ok(stack[0])
    }
}

#[inline]
fn check(v: f64, op: Op) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite {
            op: op_name(op),
        })
    }
}

fn op_name(op: Op) -> &'static str {
    match op {
        Op::Neg => "neg",
        Op::Add => "+",
        Op::Sub => "-",
        Op::Mul => "*",
        Op::Div => "/",
        Op::Pow | Op::PowInt(_) => "^",
        Op::Exp => "exp",
        Op::Log => "log",
        Op::Sqrt => "sqrt",
        Op::Abs => "abs",
        Op::Sign => "sign",
        Op::Min => "min",
        Op::Max => "max",
        _ => "value",
    }
}
