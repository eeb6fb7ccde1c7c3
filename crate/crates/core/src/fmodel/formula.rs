//! Quantifier-free formulas `φ(x; y_0, …, y_{n-1})` over positional variable blocks.
//!
//! Concrete syntax is an s-expression, e.g. `(and (R x y0 y1) (not (= x y0)))`.
//! Variables are `x`, `y0`, `y1`, … for the first coordinate of each block and
//! `x.1`, `y0.2`, … for later coordinates of tuple blocks.

use std::fmt;

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::fmodel::FiniteStructure;

/// A variable: coordinate `pos` of block `block` (block 0 is `x`, block `k+1` is `y_k`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub block: usize,
    pub pos: usize,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.block {
            0 => f.write_str("x")?,
            b => write!(f, "y{}", b - 1)?,
        }
        if self.pos > 0 {
            write!(f, ".{}", self.pos)?;
        }
        Ok(())
    }
}

pub(crate) fn parse_var(s: &str) -> Option<Var> {
    let (head, pos) = match s.split_once('.') {
        Some((h, p)) => (h, p.parse().ok()?),
        None => (s, 0),
    };
    let block = if head == "x" {
        0
    } else {
        let digits = head.strip_prefix('y')?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        digits.parse::<usize>().ok()? + 1
    };
    Some(Var { block, pos })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(bool),
    Atom { relation: String, args: Vec<Var> },
    Eq(Var, Var),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
}

impl Expr {
    fn vars(&self, out: &mut Vec<Var>) {
        match self {
            Expr::Const(_) => {}
            Expr::Atom { args, .. } => out.extend(args),
            Expr::Eq(a, b) => out.extend([a, b]),
            Expr::Not(e) => e.vars(out),
            Expr::And(es) | Expr::Or(es) => es.iter().for_each(|e| e.vars(out)),
        }
    }

    fn map_vars(&self, f: &impl Fn(Var) -> Var) -> Expr {
        match self {
            Expr::Const(b) => Expr::Const(*b),
            Expr::Atom { relation, args } => {
                Expr::Atom { relation: relation.clone(), args: args.iter().map(|&v| f(v)).collect() }
            }
            Expr::Eq(a, b) => Expr::Eq(f(*a), f(*b)),
            Expr::Not(e) => Expr::Not(Box::new(e.map_vars(f))),
            Expr::And(es) => Expr::And(es.iter().map(|e| e.map_vars(f)).collect()),
            Expr::Or(es) => Expr::Or(es.iter().map(|e| e.map_vars(f)).collect()),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(b) => write!(f, "{b}"),
            Expr::Atom { relation, args } => {
                write!(f, "({relation}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
            Expr::Eq(a, b) => write!(f, "(= {a} {b})"),
            Expr::Not(e) => write!(f, "(not {e})"),
            Expr::And(es) | Expr::Or(es) => {
                f.write_str(if matches!(self, Expr::And(_)) { "(and" } else { "(or" })?;
                for e in es {
                    write!(f, " {e}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// A quantifier-free formula with declared block lengths `|x|, |y_0|, …`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QfFormula {
    block_lens: Vec<usize>,
    body: Expr,
}

impl QfFormula {
    /// `block_lens[0]` is `|x|`, the rest are the parameter blocks; at least one is required.
    pub fn new(block_lens: Vec<usize>, body: Expr) -> Result<Self> {
        if block_lens.len() < 2 {
            return Err(Error::input("a formula needs x and at least one parameter block"));
        }
        if block_lens.contains(&0) {
            return Err(Error::input("variable blocks must be nonempty"));
        }
        let mut vars = Vec::new();
        body.vars(&mut vars);
        if let Some(v) = vars.iter().find(|v| v.block >= block_lens.len() || v.pos >= block_lens[v.block]) {
            return Err(Error::input(format!("variable {v} outside the declared blocks {block_lens:?}")));
        }
        Ok(QfFormula { block_lens, body })
    }

    /// Parses with block lengths inferred from the variables used (at least `x` and `y0`, each of length ≥ 1).
    pub fn parse(src: &str) -> Result<Self> {
        let body = parse_expr(src)?;
        let mut vars = Vec::new();
        body.vars(&mut vars);
        let blocks = vars.iter().map(|v| v.block + 1).max().unwrap_or(0).max(2);
        let mut lens = vec![1; blocks];
        for v in &vars {
            lens[v.block] = lens[v.block].max(v.pos + 1);
        }
        Self::new(lens, body)
    }

    /// Parses against explicit block lengths.
    pub fn parse_with_blocks(src: &str, block_lens: Vec<usize>) -> Result<Self> {
        Self::new(block_lens, parse_expr(src)?)
    }

    pub fn body(&self) -> &Expr {
        &self.body
    }

    pub fn block_lens(&self) -> &[usize] {
        &self.block_lens
    }

    /// `|x|`
    pub fn x_len(&self) -> usize {
        self.block_lens[0]
    }

    /// `|y_0|, …, |y_{n-1}|`
    pub fn y_lens(&self) -> &[usize] {
        &self.block_lens[1..]
    }

    /// Number of parameter blocks.
    pub fn n(&self) -> usize {
        self.block_lens.len() - 1
    }

    pub fn negate(&self) -> QfFormula {
        QfFormula { block_lens: self.block_lens.clone(), body: Expr::Not(Box::new(self.body.clone())) }
    }

    pub fn and(&self, other: &QfFormula) -> Result<QfFormula> {
        self.same_shape(other)?;
        Ok(QfFormula {
            block_lens: self.block_lens.clone(),
            body: Expr::And(vec![self.body.clone(), other.body.clone()]),
        })
    }

    pub fn or(&self, other: &QfFormula) -> Result<QfFormula> {
        self.same_shape(other)?;
        Ok(QfFormula {
            block_lens: self.block_lens.clone(),
            body: Expr::Or(vec![self.body.clone(), other.body.clone()]),
        })
    }

    fn same_shape(&self, other: &QfFormula) -> Result<()> {
        if self.block_lens != other.block_lens {
            return Err(Error::input("formulas have different variable blocks"));
        }
        Ok(())
    }

    /// Reorders all blocks: new block `j` is old block `perm[j]` (block 0 is `x`).
    pub fn permute_blocks(&self, perm: &[usize]) -> Result<QfFormula> {
        let k = self.block_lens.len();
        let mut inverse = vec![usize::MAX; k];
        for (new, &old) in perm.iter().enumerate() {
            if old >= k || inverse[old] != usize::MAX {
                return Err(Error::input(format!("{perm:?} is not a permutation of {k} blocks")));
            }
            inverse[old] = new;
        }
        if perm.len() != k {
            return Err(Error::input(format!("{perm:?} is not a permutation of {k} blocks")));
        }
        let body = self.body.map_vars(&|v| Var { block: inverse[v.block], pos: v.pos });
        QfFormula::new(perm.iter().map(|&old| self.block_lens[old]).collect(), body)
    }

    /// Reorders only the parameter blocks: new `y_j` is old `y_{perm[j]}`.
    pub fn permute_parameters(&self, perm: &[usize]) -> Result<QfFormula> {
        let full: Vec<usize> = std::iter::once(0).chain(perm.iter().map(|&p| p + 1)).collect();
        self.permute_blocks(&full)
    }

    pub(crate) fn compile<'a>(&self, structure: &'a FiniteStructure) -> Result<Compiled<'a>> {
        let offsets: Vec<usize> = self
            .block_lens
            .iter()
            .scan(0, |acc, &l| {
                let o = *acc;
                *acc += l;
                Some(o)
            })
            .collect();
        let root = compile_expr(&self.body, structure, &offsets)?;
        Ok(Compiled { root, domain: structure.domain_size(), width: self.block_lens.iter().sum() })
    }
}

impl fmt::Display for QfFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.body.fmt(f)
    }
}

/// A formula bound to one structure, evaluated on a flat assignment.
pub(crate) struct Compiled<'a> {
    root: CExpr<'a>,
    domain: usize,
    width: usize,
}

enum CExpr<'a> {
    Const(bool),
    Atom(&'a FixedBitSet, Vec<usize>),
    Eq(usize, usize),
    Not(Box<CExpr<'a>>),
    And(Vec<CExpr<'a>>),
    Or(Vec<CExpr<'a>>),
}

impl Compiled<'_> {
    /// Number of elements in a flat assignment (all blocks concatenated).
    pub(crate) fn width(&self) -> usize {
        self.width
    }

    pub(crate) fn eval(&self, flat: &[usize]) -> bool {
        debug_assert_eq!(flat.len(), self.width);
        eval_c(&self.root, flat, self.domain)
    }
}

fn eval_c(e: &CExpr<'_>, flat: &[usize], domain: usize) -> bool {
    match e {
        CExpr::Const(b) => *b,
        CExpr::Atom(table, args) => table.contains(args.iter().fold(0, |acc, &a| acc * domain + flat[a])),
        CExpr::Eq(a, b) => flat[*a] == flat[*b],
        CExpr::Not(e) => !eval_c(e, flat, domain),
        CExpr::And(es) => es.iter().all(|e| eval_c(e, flat, domain)),
        CExpr::Or(es) => es.iter().any(|e| eval_c(e, flat, domain)),
    }
}

fn compile_expr<'a>(e: &Expr, s: &'a FiniteStructure, offsets: &[usize]) -> Result<CExpr<'a>> {
    let flat = |v: &Var| offsets[v.block] + v.pos;
    Ok(match e {
        Expr::Const(b) => CExpr::Const(*b),
        Expr::Atom { relation, args } => {
            let (arity, table) =
                s.table(relation).ok_or_else(|| Error::input(format!("structure has no relation `{relation}`")))?;
            if arity != args.len() {
                return Err(Error::input(format!(
                    "relation `{relation}` has arity {arity}, applied to {} variables",
                    args.len()
                )));
            }
            CExpr::Atom(table, args.iter().map(flat).collect())
        }
        Expr::Eq(a, b) => CExpr::Eq(flat(a), flat(b)),
        Expr::Not(e) => CExpr::Not(Box::new(compile_expr(e, s, offsets)?)),
        Expr::And(es) => CExpr::And(es.iter().map(|e| compile_expr(e, s, offsets)).collect::<Result<_>>()?),
        Expr::Or(es) => CExpr::Or(es.iter().map(|e| compile_expr(e, s, offsets)).collect::<Result<_>>()?),
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Open,
    Close,
    Sym(String),
}

fn tokenize(src: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in src.chars() {
        match c {
            '(' | ')' | ' ' | '\t' | '\n' | '\r' => {
                if !cur.is_empty() {
                    out.push(Token::Sym(std::mem::take(&mut cur)));
                }
                match c {
                    '(' => out.push(Token::Open),
                    ')' => out.push(Token::Close),
                    _ => {}
                }
            }
            _ => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(Token::Sym(cur));
    }
    out
}

/// Parses the body of a formula.
pub fn parse_expr(src: &str) -> Result<Expr> {
    let tokens = tokenize(src);
    let mut pos = 0;
    let e = parse_at(&tokens, &mut pos)?;
    if pos != tokens.len() {
        return Err(Error::input(format!("trailing input after formula: `{src}`")));
    }
    Ok(e)
}

fn parse_at(tokens: &[Token], pos: &mut usize) -> Result<Expr> {
    let tok = tokens.get(*pos).ok_or_else(|| Error::input("unexpected end of formula"))?;
    *pos += 1;
    match tok {
        Token::Close => Err(Error::input("unexpected `)`")),
        Token::Sym(s) => match s.as_str() {
            "true" => Ok(Expr::Const(true)),
            "false" => Ok(Expr::Const(false)),
            other => Err(Error::input(format!("bare symbol `{other}` is not a formula"))),
        },
        Token::Open => {
            let head = match tokens.get(*pos) {
                Some(Token::Sym(h)) => h.clone(),
                _ => return Err(Error::input("expected an operator or relation name after `(`")),
            };
            *pos += 1;
            let e = match head.as_str() {
                "and" | "or" | "not" => {
                    let mut args = Vec::new();
                    while tokens.get(*pos) != Some(&Token::Close) {
                        args.push(parse_at(tokens, pos)?);
                    }
                    match head.as_str() {
                        "and" => Expr::And(args),
                        "or" => Expr::Or(args),
                        _ => {
                            if args.len() != 1 {
                                return Err(Error::input("`not` takes exactly one argument"));
                            }
                            Expr::Not(Box::new(args.pop().unwrap()))
                        }
                    }
                }
                _ => {
                    let mut args = Vec::new();
                    while let Some(Token::Sym(s)) = tokens.get(*pos) {
                        args.push(parse_var(s).ok_or_else(|| Error::input(format!("`{s}` is not a variable")))?);
                        *pos += 1;
                    }
                    if head == "=" {
                        if args.len() != 2 {
                            return Err(Error::input("`=` takes exactly two variables"));
                        }
                        Expr::Eq(args[0], args[1])
                    } else if crate::fmodel::structure::is_relation_name(&head) {
                        Expr::Atom { relation: head, args }
                    } else {
                        return Err(Error::input(format!("`{head}` is not a relation name")));
                    }
                }
            };
            match tokens.get(*pos) {
                Some(Token::Close) => {
                    *pos += 1;
                    Ok(e)
                }
                _ => Err(Error::input("expected `)`")),
            }
        }
    }
}
