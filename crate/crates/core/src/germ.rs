//! Germs: snapshot-indexed rational expressions standing for hyperrational values.

use std::collections::BTreeMap;
use std::fmt;
use std::ops;
use std::sync::Arc;

use num_traits::Zero;

use crate::error::{NapError, Result};
use crate::rational::{self, render};
use crate::snapshot::{conditional_snapshot_prob, joint_snapshot_prob, snapshot_prob, Snapshot};
use crate::text::Parser;
use crate::universe::{ClassSpec, RandomVariable, SetValue};
use crate::Rational;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Germ {
    Const(Rational),
    /// `T ↦ f_{θ∈A}(T)`.
    Event(RandomVariable, ClassSpec),
    /// `T ↦ f_{θ∈A ∧ ν∈B}(T)`.
    Joint(RandomVariable, ClassSpec, RandomVariable, ClassSpec),
    /// `T ↦ Σ_{i ∈ I∩T} qᵢ`, with `qᵢ` read from `terms` or `default`.
    StarSum {
        index: ClassSpec,
        terms: BTreeMap<SetValue, Rational>,
        default: Rational,
    },
    /// `T ↦ Σ_{i ∈ I∩T} gᵢ(T)` for a finite index `I` and germ-valued terms.
    GermSum(Vec<(SetValue, Germ)>),
    Add(Arc<Germ>, Arc<Germ>),
    Sub(Arc<Germ>, Arc<Germ>),
    Mul(Arc<Germ>, Arc<Germ>),
    Div(Arc<Germ>, Arc<Germ>),
}

/// `Pr(θ∈A)` as a germ.
pub fn germ_of_event(theta: &RandomVariable, a: &ClassSpec) -> Germ {
    Germ::Event(theta.clone(), a.clone())
}

pub fn joint_germ(
    theta: &RandomVariable,
    a: &ClassSpec,
    nu: &RandomVariable,
    b: &ClassSpec,
) -> Germ {
    Germ::Joint(theta.clone(), a.clone(), nu.clone(), b.clone())
}

/// `Pr(θ∈A | ν∈B)` as the joint germ over the condition germ.
pub fn conditional_germ(
    theta: &RandomVariable,
    a: &ClassSpec,
    nu: &RandomVariable,
    b: &ClassSpec,
) -> Germ {
    joint_germ(theta, a, nu, b) / germ_of_event(nu, b)
}

/// The generalized sum `Σ*_{i∈I} qᵢ`; indices missing from `terms` contribute `default`.
pub fn star_sum(terms: BTreeMap<SetValue, Rational>, default: Rational, index: &ClassSpec) -> Germ {
    Germ::StarSum {
        index: index.clone(),
        terms,
        default,
    }
}

/// `Σ*_{i∈I} gᵢ` over a finite index of germs.
pub fn star_sum_germs<I: IntoIterator<Item = (SetValue, Germ)>>(parts: I) -> Germ {
    let mut parts: Vec<(SetValue, Germ)> = parts.into_iter().collect();
    parts.sort();
    parts.dedup_by(|a, b| a.0 == b.0);
    Germ::GermSum(parts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

pub fn germ_arith(op: ArithOp, g1: &Germ, g2: &Germ) -> Germ {
    let (a, b) = (Arc::new(g1.clone()), Arc::new(g2.clone()));
    match op {
        ArithOp::Add => Germ::Add(a, b),
        ArithOp::Sub => Germ::Sub(a, b),
        ArithOp::Mul => Germ::Mul(a, b),
        ArithOp::Div => Germ::Div(a, b),
    }
}

impl Germ {
    pub fn constant(q: Rational) -> Germ {
        Germ::Const(q)
    }

    pub fn eval(&self, t: &Snapshot) -> Result<Rational> {
        match self {
            Germ::Const(q) => Ok(q.clone()),
            Germ::Event(theta, a) => snapshot_prob(theta, a, t),
            Germ::Joint(theta, a, nu, b) => joint_snapshot_prob(theta, a, nu, b, t),
            Germ::StarSum {
                index,
                terms,
                default,
            } => Ok(t
                .states()
                .iter()
                .filter(|i| index.contains(i))
                .map(|i| terms.get(i).unwrap_or(default).clone())
                .fold(rational::zero(), |acc, q| acc + q)),
            Germ::GermSum(parts) => {
                let mut acc = rational::zero();
                for (i, g) in parts {
                    if t.contains(i) {
                        acc += g.eval(t)?;
                    }
                }
                Ok(acc)
            }
            Germ::Add(a, b) => Ok(a.eval(t)? + b.eval(t)?),
            Germ::Sub(a, b) => Ok(a.eval(t)? - b.eval(t)?),
            Germ::Mul(a, b) => Ok(a.eval(t)? * b.eval(t)?),
            Germ::Div(a, b) => {
                let num = a.eval(t)?;
                let den = b.eval(t)?;
                if den.is_zero() {
                    return Err(NapError::DivisionUndefined);
                }
                Ok(num / den)
            }
        }
    }

    /// `Some((θ, A, ν, B))` when this is a conditional germ built by [`conditional_germ`].
    pub fn as_conditional(
        &self,
    ) -> Option<(&RandomVariable, &ClassSpec, &RandomVariable, &ClassSpec)> {
        if let Germ::Div(num, den) = self {
            if let (Germ::Joint(t, a, n, b), Germ::Event(n2, b2)) = (num.as_ref(), den.as_ref()) {
                if n == n2 && b == b2 {
                    return Some((t, a, n, b));
                }
            }
        }
        None
    }

    /// Direct evaluation of a conditional germ through the snapshot-level ratio.
    pub fn eval_conditional(&self, t: &Snapshot) -> Option<Result<Rational>> {
        self.as_conditional()
            .map(|(theta, a, nu, b)| conditional_snapshot_prob(theta, a, nu, b, t))
    }

    pub fn encode(&self) -> String {
        self.to_string()
    }

    pub fn decode(text: &str) -> Result<Germ> {
        let mut p = Parser::new(text);
        let g = parse_expr(&mut p)?;
        p.finish()?;
        Ok(g)
    }
}

fn parse_expr(p: &mut Parser<'_>) -> Result<Germ> {
    let mut g = parse_term(p)?;
    loop {
        if p.eat(b'+') {
            g = g + parse_term(p)?;
        } else if p.eat(b'-') {
            g = g - parse_term(p)?;
        } else {
            return Ok(g);
        }
    }
}

fn parse_term(p: &mut Parser<'_>) -> Result<Germ> {
    let mut g = parse_factor(p)?;
    loop {
        if p.eat(b'*') {
            g = g * parse_factor(p)?;
        } else if p.eat(b'/') {
            g = g / parse_factor(p)?;
        } else {
            return Ok(g);
        }
    }
}

fn parse_factor(p: &mut Parser<'_>) -> Result<Germ> {
    if p.eat(b'(') {
        let g = parse_expr(p)?;
        p.expect(b')')?;
        return Ok(g);
    }
    if let Some(c) = p.peek() {
        if c.is_ascii_digit() || c == b'-' {
            let negative = p.eat(b'-');
            let num = p.number()?;
            // A literal is always written `p/q`.
            p.expect(b'/')?;
            let den = p.number()?;
            if den == 0 {
                return p.error("zero denominator");
            }
            let q = rational::ratio(num as usize, den as usize);
            return Ok(Germ::Const(if negative { -q } else { q }));
        }
    }
    let name = p.ident()?;
    p.expect(b'(')?;
    let g = match name.as_str() {
        "pr" => {
            let theta = p.rv()?;
            p.expect(b',')?;
            Germ::Event(theta, p.class()?)
        }
        "joint" | "cond" => {
            let theta = p.rv()?;
            p.expect(b',')?;
            let a = p.class()?;
            p.expect(b',')?;
            let nu = p.rv()?;
            p.expect(b',')?;
            let b = p.class()?;
            if name == "joint" {
                Germ::Joint(theta, a, nu, b)
            } else {
                p.expect(b')')?;
                return Ok(conditional_germ(&theta, &a, &nu, &b));
            }
        }
        _ => return p.error(format!("unknown germ '{name}'")),
    };
    p.expect(b')')?;
    Ok(g)
}

impl fmt::Display for Germ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some((theta, a, nu, b)) = self.as_conditional() {
            return write!(f, "cond({theta},{a},{nu},{b})");
        }
        match self {
            Germ::Const(q) => f.write_str(&render(q)),
            Germ::Event(theta, a) => write!(f, "pr({theta},{a})"),
            Germ::Joint(theta, a, nu, b) => write!(f, "joint({theta},{a},{nu},{b})"),
            Germ::StarSum {
                index,
                terms,
                default,
            } => {
                write!(f, "sum*({index};")?;
                for (i, (k, q)) in terms.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{k}:{}", render(q))?;
                }
                write!(f, ";{})", render(default))
            }
            Germ::GermSum(parts) => {
                f.write_str("sum*[")?;
                for (i, (k, g)) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{k}:{g}")?;
                }
                f.write_str("]")
            }
            Germ::Add(a, b) => write!(f, "({a} + {b})"),
            Germ::Sub(a, b) => write!(f, "({a} - {b})"),
            Germ::Mul(a, b) => write!(f, "({a} * {b})"),
            Germ::Div(a, b) => write!(f, "({a} / {b})"),
        }
    }
}

impl fmt::Debug for Germ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

macro_rules! germ_op {
    ($trait:ident, $method:ident, $variant:ident) => {
        impl ops::$trait for Germ {
            type Output = Germ;
            fn $method(self, rhs: Germ) -> Germ {
                Germ::$variant(Arc::new(self), Arc::new(rhs))
            }
        }
    };
}

germ_op!(Add, add, Add);
germ_op!(Sub, sub, Sub);
germ_op!(Mul, mul, Mul);
germ_op!(Div, div, Div);
