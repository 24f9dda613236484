//! Cleavage rules and the atom-environment predicate language they use.
//!
//! ```text
//! expr  := conj ('|' conj)*
//! conj  := term (';' term)*
//! term  := '!'* prim
//! prim  := 'nb' K? '(' bond ' ' expr ')'     at least K matching neighbors
//!        | '(' expr ')'
//!        | 'D' n (',' 'D' n)*                 heavy-atom degree
//!        | 'R'                                atom is on a ring
//!        | 'ar' | 'al'                        aromatic / aliphatic
//!        | atom (',' atom)*
//! atom  := '*' | '#' n | Symbol | symbol      any, atomic number,
//!                                             aliphatic, aromatic
//! bond  := '!'? [-=#:~]+ ('@' | '!@')?
//! ```
//!
//! Top-level neighbor predicates see every neighbor of the atom, including
//! the other endpoint of the bond being tested. Nested `nb(...)` never
//! steps back to the atom it came from.

use thiserror::Error;

use crate::molgraph::{BondOrder, MolGraph};
use crate::smiles::elements;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuleError {
    #[error("line {line}: expected 4 tab-separated fields, found {found}")]
    Fields { line: usize, found: usize },
    #[error("line {line}: bad rule id {text:?}")]
    Id { line: usize, text: String },
    #[error("line {line}: bad bond order {text:?}")]
    BondOrder { line: usize, text: String },
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomSpec {
    Any,
    Number(u8),
    Aliphatic(u8),
    Aromatic(u8),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BondSpec {
    pub negated: bool,
    /// Empty means any order.
    pub orders: Vec<BondOrder>,
    /// `Some(true)` requires a ring bond, `Some(false)` an acyclic bond.
    pub ring: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Prim {
    Atoms(Vec<AtomSpec>),
    Degree(Vec<usize>),
    InRing,
    Aromatic,
    Aliphatic,
    Group(Env),
    Neighbors {
        min: usize,
        bond: BondSpec,
        atom: Env,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub negated: bool,
    pub prim: Prim,
}

/// A disjunction of conjunctions of terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Env {
    pub alternatives: Vec<Vec<Term>>,
}

impl Env {
    pub fn parse(text: &str) -> Result<Env, (usize, String)> {
        let mut p = Parser {
            s: text.as_bytes(),
            pos: 0,
        };
        let env = p.expr()?;
        if p.pos != p.s.len() {
            return Err(p.fail("trailing input"));
        }
        Ok(env)
    }

    /// Does atom `v` satisfy this environment?
    pub fn matches(&self, g: &MolGraph, v: usize) -> bool {
        self.eval(g, v, None)
    }

    fn eval(&self, g: &MolGraph, v: usize, from: Option<usize>) -> bool {
        self.alternatives
            .iter()
            .any(|conj| conj.iter().all(|t| t.eval(g, v, from) != t.negated))
    }
}

impl Term {
    fn eval(&self, g: &MolGraph, v: usize, from: Option<usize>) -> bool {
        match &self.prim {
            Prim::Atoms(specs) => {
                let z = g.atom(v).atomic_number();
                let aromatic = g.is_aromatic(v);
                specs.iter().any(|s| match *s {
                    AtomSpec::Any => true,
                    AtomSpec::Number(n) => n == z,
                    AtomSpec::Aliphatic(n) => n == z && !aromatic,
                    AtomSpec::Aromatic(n) => n == z && aromatic,
                })
            }
            Prim::Degree(ds) => ds.contains(&g.degree(v)),
            Prim::InRing => g.in_ring(v),
            Prim::Aromatic => g.is_aromatic(v),
            Prim::Aliphatic => !g.is_aromatic(v),
            Prim::Group(env) => env.eval(g, v, from),
            Prim::Neighbors { min, bond, atom } => {
                let count = g
                    .neighbors(v)
                    .iter()
                    .filter(|&&(u, id)| {
                        Some(u) != from && bond.matches(g, id) && atom.eval(g, u, Some(v))
                    })
                    .count();
                count >= *min
            }
        }
    }
}

impl BondSpec {
    fn matches(&self, g: &MolGraph, id: usize) -> bool {
        let b = g.bond(id);
        let order_ok = self.orders.is_empty() || self.orders.contains(&b.order);
        if order_ok == self.negated {
            return false;
        }
        self.ring.is_none_or(|r| r == b.in_ring)
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn fail(&self, msg: &str) -> (usize, String) {
        (self.pos, msg.to_string())
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek() == Some(b' ') {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Option<usize> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos])
            .ok()?
            .parse()
            .ok()
    }

    fn expr(&mut self) -> Result<Env, (usize, String)> {
        let mut alternatives = vec![self.conj()?];
        loop {
            self.skip_ws();
            if !self.eat(b'|') {
                break;
            }
            self.skip_ws();
            alternatives.push(self.conj()?);
        }
        Ok(Env { alternatives })
    }

    fn conj(&mut self) -> Result<Vec<Term>, (usize, String)> {
        let mut terms = vec![self.term()?];
        while self.eat(b';') {
            terms.push(self.term()?);
        }
        Ok(terms)
    }

    fn term(&mut self) -> Result<Term, (usize, String)> {
        let mut negated = false;
        while self.eat(b'!') {
            negated = !negated;
        }
        Ok(Term {
            negated,
            prim: self.prim()?,
        })
    }

    fn prim(&mut self) -> Result<Prim, (usize, String)> {
        let rest = &self.s[self.pos..];
        if rest.starts_with(b"nb") && matches!(rest.get(2), Some(b'(' | b'0'..=b'9')) {
            self.pos += 2;
            let min = if self.peek() == Some(b'(') {
                1
            } else {
                self.number()
                    .ok_or_else(|| self.fail("expected neighbor count"))?
            };
            if !self.eat(b'(') {
                return Err(self.fail("expected '('"));
            }
            let bond = self.bond()?;
            if !self.eat(b' ') {
                return Err(self.fail("expected a space after the bond"));
            }
            let atom = self.expr()?;
            if !self.eat(b')') {
                return Err(self.fail("expected ')'"));
            }
            return Ok(Prim::Neighbors { min, bond, atom });
        }
        if self.eat(b'(') {
            let env = self.expr()?;
            if !self.eat(b')') {
                return Err(self.fail("expected ')'"));
            }
            return Ok(Prim::Group(env));
        }
        if rest.starts_with(b"ar") {
            self.pos += 2;
            return Ok(Prim::Aromatic);
        }
        if rest.starts_with(b"al") {
            self.pos += 2;
            return Ok(Prim::Aliphatic);
        }
        if rest.first() == Some(&b'D') && rest.get(1).is_some_and(u8::is_ascii_digit) {
            let mut ds = Vec::new();
            loop {
                if !self.eat(b'D') {
                    return Err(self.fail("expected 'D'"));
                }
                ds.push(self.number().ok_or_else(|| self.fail("expected degree"))?);
                if !self.eat(b',') {
                    break;
                }
            }
            return Ok(Prim::Degree(ds));
        }
        if rest.first() == Some(&b'R') && !rest.get(1).is_some_and(u8::is_ascii_lowercase) {
            self.pos += 1;
            return Ok(Prim::InRing);
        }
        let mut specs = vec![self.atom()?];
        while self.eat(b',') {
            specs.push(self.atom()?);
        }
        Ok(Prim::Atoms(specs))
    }

    fn atom(&mut self) -> Result<AtomSpec, (usize, String)> {
        let c = self.peek().ok_or_else(|| self.fail("expected an atom"))?;
        if self.eat(b'*') {
            return Ok(AtomSpec::Any);
        }
        if self.eat(b'#') {
            let n = self
                .number()
                .ok_or_else(|| self.fail("expected atomic number"))?;
            return u8::try_from(n)
                .ok()
                .filter(|n| (1..=118).contains(n))
                .map(AtomSpec::Number)
                .ok_or_else(|| self.fail("atomic number out of range"));
        }
        if c.is_ascii_uppercase() {
            let two = self
                .s
                .get(self.pos..self.pos + 2)
                .and_then(|t| std::str::from_utf8(t).ok())
                .filter(|t| t.as_bytes()[1].is_ascii_lowercase())
                .and_then(elements::atomic_number);
            if let Some(z) = two {
                self.pos += 2;
                return Ok(AtomSpec::Aliphatic(z));
            }
            let z = elements::atomic_number(&(c as char).to_string())
                .ok_or_else(|| self.fail("unknown element"))?;
            self.pos += 1;
            return Ok(AtomSpec::Aliphatic(z));
        }
        if c.is_ascii_lowercase() {
            let z = elements::atomic_number(&(c.to_ascii_uppercase() as char).to_string())
                .filter(|_| b"bcnops".contains(&c))
                .ok_or_else(|| self.fail("unknown aromatic element"))?;
            self.pos += 1;
            return Ok(AtomSpec::Aromatic(z));
        }
        Err(self.fail("expected an atom"))
    }

    fn bond(&mut self) -> Result<BondSpec, (usize, String)> {
        let negated = self.eat(b'!');
        let mut orders = Vec::new();
        let mut any = false;
        while let Some(c) = self.peek() {
            match c {
                b'-' => orders.push(BondOrder::Single),
                b'=' => orders.push(BondOrder::Double),
                b'#' => orders.push(BondOrder::Triple),
                b':' => orders.push(BondOrder::Aromatic),
                b'~' => any = true,
                _ => break,
            }
            self.pos += 1;
        }
        if orders.is_empty() && !any {
            return Err(self.fail("expected a bond order"));
        }
        if any {
            orders.clear();
        }
        let ring = if self.eat(b'@') {
            Some(true)
        } else if self.s[self.pos..].starts_with(b"!@") {
            self.pos += 2;
            Some(false)
        } else {
            None
        };
        Ok(BondSpec {
            negated,
            orders,
            ring,
        })
    }
}

/// One cleavage rule: an acyclic bond of `bond_order` whose endpoints match
/// `left` and `right` (in either orientation) is cut.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BricsRule {
    pub id: u8,
    pub left: Env,
    pub right: Env,
    pub bond_order: BondOrder,
}

impl BricsRule {
    pub fn matches_bond(&self, g: &MolGraph, id: usize) -> bool {
        let b = g.bond(id);
        if b.in_ring || b.order != self.bond_order {
            return false;
        }
        let (a, c) = b.endpoints;
        (self.left.matches(g, a) && self.right.matches(g, c))
            || (self.left.matches(g, c) && self.right.matches(g, a))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSet {
    pub rules: Vec<BricsRule>,
}

const DEFAULT_RULES: &str = include_str!("brics_rules.tsv");

impl RuleSet {
    /// The bundled BRICS environment table.
    pub fn brics() -> RuleSet {
        RuleSet::parse(DEFAULT_RULES).expect("bundled rule file is valid")
    }

    /// Parses the line-oriented rule format. Blank lines and lines starting
    /// with `#` are ignored.
    pub fn parse(text: &str) -> Result<RuleSet, RuleError> {
        let mut rules = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').collect();
            if fields.len() != 4 {
                return Err(RuleError::Fields {
                    line,
                    found: fields.len(),
                });
            }
            let id: u8 = fields[0]
                .trim()
                .parse()
                .ok()
                .filter(|id| (1..=16).contains(id))
                .ok_or_else(|| RuleError::Id {
                    line,
                    text: fields[0].to_string(),
                })?;
            let env = |field: usize| {
                Env::parse(fields[field].trim()).map_err(|(col, message)| RuleError::Syntax {
                    line,
                    column: fields[..field].iter().map(|f| f.len() + 1).sum::<usize>() + col + 1,
                    message,
                })
            };
            let left = env(1)?;
            let right = env(2)?;
            let bond_order = match fields[3].trim() {
                "-" => BondOrder::Single,
                "=" => BondOrder::Double,
                "#" => BondOrder::Triple,
                ":" => BondOrder::Aromatic,
                other => {
                    return Err(RuleError::BondOrder {
                        line,
                        text: other.to_string(),
                    })
                }
            };
            rules.push(BricsRule {
                id,
                left,
                right,
                bond_order,
            });
        }
        Ok(RuleSet { rules })
    }
}
