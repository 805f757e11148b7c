//! Parser for the canonical text forms produced by `Display`.

use std::collections::BTreeMap;

use crate::error::{NapError, Result};
use crate::universe::{
    CardinalityTier, ClassExpr, ClassSpec, Collection, HfSet, Ordinal, Permutation, RandomVariable,
    SetValue, TableDefault,
};

pub fn parse_value(s: &str) -> Result<SetValue> {
    let mut p = Parser::new(s);
    let v = p.value()?;
    p.finish()?;
    Ok(v)
}

pub fn parse_class(s: &str) -> Result<ClassSpec> {
    let mut p = Parser::new(s);
    let c = p.class()?;
    p.finish()?;
    Ok(c)
}

pub fn parse_rv(s: &str) -> Result<RandomVariable> {
    let mut p = Parser::new(s);
    let r = p.rv()?;
    p.finish()?;
    Ok(r)
}

pub fn parse_ordinal(s: &str) -> Result<Ordinal> {
    let mut p = Parser::new(s);
    let o = p.ordinal()?;
    p.finish()?;
    Ok(o)
}

/// Recursive-descent reader over a canonical text form. Whitespace is ignored.
pub struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    pub fn new(src: &'a str) -> Self {
        Parser {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    pub fn error<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(NapError::Parse {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    pub fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    pub fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            self.error(format!("expected '{}'", c as char))
        }
    }

    pub fn finish(&mut self) -> Result<()> {
        if self.peek().is_some() {
            return self.error("trailing input");
        }
        Ok(())
    }

    /// Consumes `word` when it appears next and is not followed by an identifier character.
    pub fn keyword(&mut self, word: &str) -> bool {
        self.skip_ws();
        let end = self.pos + word.len();
        if self.src.len() >= end && &self.src[self.pos..end] == word.as_bytes() {
            let next = self.src.get(end).copied();
            if !next.is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_') {
                self.pos = end;
                return true;
            }
        }
        false
    }

    pub fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return self.error("expected identifier");
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    pub fn number(&mut self) -> Result<u64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.error("expected number");
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .ok()
            .and_then(|t| t.parse().ok())
            .map_or_else(|| self.error("number out of range"), Ok)
    }

    pub fn small(&mut self) -> Result<u32> {
        let n = self.number()?;
        u32::try_from(n).map_or_else(|_| self.error("number out of range"), Ok)
    }

    pub fn ordinal(&mut self) -> Result<Ordinal> {
        if self.keyword("w") {
            let mut omega = 1;
            if self.eat(b'*') {
                omega = self.small()?;
                if omega == 0 {
                    return self.error("use a plain natural for w*0");
                }
            }
            let finite = if self.eat(b'+') { self.number()? } else { 0 };
            return Ok(Ordinal::new(omega, finite));
        }
        Ok(Ordinal::nat(self.number()?))
    }

    pub fn value(&mut self) -> Result<SetValue> {
        match self.peek() {
            Some(b'{') => Ok(SetValue::Hf(self.hf()?)),
            Some(b'#') => {
                self.pos += 1;
                Ok(SetValue::hf(self.number()?))
            }
            Some(c) if c.is_ascii_digit() || c == b'w' => Ok(SetValue::Ord(self.ordinal()?)),
            Some(b'p') if self.src[self.pos..].starts_with(b"pad") => {
                self.pos += 3;
                Ok(SetValue::Pad(self.number()?))
            }
            Some(b'f') if self.src[self.pos..].starts_with(b"fin[") => {
                self.pos += 4;
                let members = self.list(b']')?;
                Ok(SetValue::Coll(Collection::finite(members)))
            }
            Some(b'i') if self.src[self.pos..].starts_with(b"int(") => {
                self.pos += 4;
                let base = self.class()?;
                self.expect(b';')?;
                let markers = self.list(b';')?;
                let tag = self.number()?;
                self.expect(b')')?;
                Ok(SetValue::Coll(Collection::intensional(base, markers, tag)))
            }
            _ => self.error("expected a value"),
        }
    }

    fn hf(&mut self) -> Result<HfSet> {
        self.expect(b'{')?;
        let mut members = Vec::new();
        if !self.eat(b'}') {
            loop {
                if self.peek() == Some(b'#') {
                    self.pos += 1;
                    members.push(HfSet::from_ackermann(self.number()?));
                } else {
                    members.push(self.hf()?);
                }
                if self.eat(b'}') {
                    break;
                }
                self.expect(b',')?;
            }
        }
        Ok(HfSet::from_members(members))
    }

    /// Comma-separated values up to and including `close`.
    pub fn list(&mut self, close: u8) -> Result<Vec<SetValue>> {
        let mut out = Vec::new();
        if self.eat(close) {
            return Ok(out);
        }
        loop {
            out.push(self.value()?);
            if self.eat(close) {
                return Ok(out);
            }
            self.expect(b',')?;
        }
    }

    pub fn class(&mut self) -> Result<ClassSpec> {
        let c = self.class_body()?;
        if self.eat(b'@') {
            let tier = self.tier()?;
            return Ok(c.with_tier(tier));
        }
        Ok(c)
    }

    fn tier(&mut self) -> Result<CardinalityTier> {
        let name = self.ident()?;
        if name == "PC" {
            return Ok(CardinalityTier::ProperClass);
        }
        let (kind, digits) = name.split_at(1);
        let n: Option<u64> = digits.parse().ok();
        match (kind, n) {
            ("F", Some(n)) => Ok(CardinalityTier::Finite(n)),
            ("T", Some(k)) if k <= u64::from(u32::MAX) => Ok(CardinalityTier::Tier(k as u32)),
            _ => self.error(format!("unknown tier '{name}'")),
        }
    }

    fn class_body(&mut self) -> Result<ClassSpec> {
        let simple = [
            ("V", ClassExpr::Universe),
            ("empty", ClassExpr::Empty),
            ("On", ClassExpr::Ordinals),
            ("Nat", ClassExpr::Naturals),
            ("Even", ClassExpr::Even),
            ("Odd", ClassExpr::Odd),
            ("Lim", ClassExpr::Lim),
            ("NonOrd", ClassExpr::NonOrdinals),
        ];
        for (word, expr) in simple {
            if self.keyword(word) {
                return Ok(ClassSpec::new(expr));
            }
        }
        if self.peek() == Some(b'{') {
            let s = self.hf()?;
            return Ok(ClassSpec::members_of(&s));
        }
        let name = self.ident()?;
        let open = if name == "set" { b'[' } else { b'(' };
        self.expect(open)?;
        let class = match name.as_str() {
            "set" => return Ok(ClassSpec::finite(self.list(b']')?)),
            "pads" => {
                let modulus = self.number()?;
                self.expect(b',')?;
                let residue = self.number()?;
                if modulus == 0 || residue >= modulus {
                    return self.error("pads needs modulus > residue");
                }
                ClassSpec::new(ClassExpr::Pads { modulus, residue })
            }
            "rank" => ClassSpec::new(ClassExpr::RankLevel(self.small()?)),
            "members" => ClassSpec::members_of(&self.hf()?),
            "P" => self.class()?.power(),
            "Fin" => ClassSpec::new(ClassExpr::FiniteSubsets(self.class()?)),
            "translate" => {
                let a = self.class()?;
                self.expect(b',')?;
                let alpha = self.ordinal()?;
                crate::universe::translate_class(&a, alpha)
            }
            "image" => {
                let rv = self.rv()?;
                self.expect(b',')?;
                self.class()?.image(&rv)
            }
            "union" | "inter" | "diff" => {
                let a = self.class()?;
                self.expect(b',')?;
                let b = self.class()?;
                match name.as_str() {
                    "union" => a.union(&b),
                    "inter" => a.intersection(&b),
                    _ => a.difference(&b),
                }
            }
            _ => return self.error(format!("unknown class '{name}'")),
        };
        self.expect(b')')?;
        Ok(class)
    }

    pub fn rv(&mut self) -> Result<RandomVariable> {
        if self.keyword("id") {
            return Ok(RandomVariable::Identity);
        }
        if self.keyword("invar") {
            return Ok(RandomVariable::invar());
        }
        let name = self.ident()?;
        self.expect(b'[')?;
        let mut entries = BTreeMap::new();
        let mut default = None;
        if !self.eat(b']') {
            loop {
                if name == "table" && self.eat(b';') {
                    default = Some(if self.keyword("id") {
                        TableDefault::Identity
                    } else {
                        TableDefault::Constant(self.value()?)
                    });
                    self.expect(b']')?;
                    break;
                }
                let k = self.value()?;
                self.expect(b'-')?;
                self.expect(b'>')?;
                let v = self.value()?;
                if entries.insert(k, v).is_some() {
                    return self.error("duplicate key");
                }
                if self.eat(b']') {
                    break;
                }
                if self.peek() != Some(b';') {
                    self.expect(b',')?;
                }
            }
        }
        match name.as_str() {
            "perm" => Ok(RandomVariable::Diagonal(Permutation::finite(entries)?)),
            "table" => Ok(RandomVariable::Table {
                entries,
                default: default.unwrap_or(TableDefault::Identity),
            }),
            _ => self.error(format!("unknown random variable '{name}'")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_round_trip() {
        for text in [
            "0",
            "17",
            "w",
            "w+3",
            "w*2",
            "w*2+5",
            "pad4",
            "{}",
            "{{}}",
            "{{},{{}}}",
            "fin[1,w,pad2]",
        ] {
            let v = parse_value(text).unwrap();
            assert_eq!(v.to_string(), text);
        }
        assert_eq!(parse_value("#3").unwrap(), SetValue::hf(3));
        assert!(parse_value("w*0").is_err());
        assert!(parse_value("{1}").is_err());
    }

    #[test]
    fn classes_round_trip() {
        for text in [
            "Even",
            "union(Even,set[1,3])",
            "translate(Nat,1)",
            "image(invar,Even)",
            "P(members({{},{{}}}))",
            "diff(On,Lim)",
            "pads(3,1)",
            "rank(3)",
            "Even@T2",
        ] {
            let c = parse_class(text).unwrap();
            assert_eq!(c.to_string(), text);
        }
        let int = parse_value("int(Even;1,3;2)").unwrap();
        assert_eq!(int.to_string(), "int(Even;1,3;2)");
    }

    #[test]
    fn random_variables_round_trip() {
        for text in [
            "id",
            "invar",
            "perm[0->1,1->0]",
            "table[0->1;id]",
            "table[0->1;5]",
        ] {
            assert_eq!(parse_rv(text).unwrap().to_string(), text);
        }
        assert!(parse_rv("perm[0->1]").is_err());
    }
}
