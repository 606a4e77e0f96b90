//! A chart of fields with their antifields, function symbols and
//! rewrite relations.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{q, Expr, Func, Q};
use crate::symbol::{antifield_name, Symbol, SymbolKind};

#[derive(Clone, Debug)]
pub struct Theory {
    pub name: String,
    dim: usize,
    eta: Vec<Q>,
    fields: Vec<Symbol>,
    antifields: Vec<Symbol>,
    funcs: BTreeMap<String, Func>,
    relations: BTreeMap<String, Expr>,
}

impl Theory {
    pub fn new(name: &str) -> Self {
        Theory {
            name: name.to_string(),
            dim: 1,
            eta: vec![q(1)],
            fields: Vec::new(),
            antifields: Vec::new(),
            funcs: BTreeMap::new(),
            relations: BTreeMap::new(),
        }
    }

    /// Set the index range `1..=n` and the diagonal of η.
    pub fn set_metric(&mut self, eta: Vec<Q>) {
        assert!(!eta.is_empty());
        self.dim = eta.len();
        self.eta = eta;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// η_{ii} (1-based). η is diagonal with entries ±1, so η^{ii} = η_{ii}.
    pub fn eta(&self, i: usize) -> Q {
        self.eta[i - 1].clone()
    }

    pub fn eta_diag(&self) -> &[Q] {
        &self.eta
    }

    pub fn add_field(&mut self, name: &str, ghost: i32, parity: u8) -> Result<Symbol> {
        if name.is_empty() || name.contains('+') || is_reserved(name) {
            return Err(Error::Grading(format!("bad field name `{name}`")));
        }
        if let Some(s) = self.fields.iter().find(|s| s.name() == name) {
            if s.ghost() != ghost || s.parity() != parity & 1 {
                return Err(Error::Grading(format!("field `{name}` redeclared with other gradings")));
            }
            return Ok(s.clone());
        }
        let f = Symbol::field(name, ghost, parity);
        self.antifields.push(Symbol::antifield_of(&f));
        self.fields.push(f.clone());
        Ok(f)
    }

    /// Declare `name_1 .. name_n`.
    pub fn add_indexed_field(&mut self, stem: &str, ghost: i32, parity: u8) -> Result<Vec<Symbol>> {
        (1..=self.dim).map(|i| self.add_field(&format!("{stem}_{i}"), ghost, parity)).collect()
    }

    pub fn add_function(&mut self, name: &str, args: &[Symbol]) -> Result<Func> {
        for a in args {
            if a.kind() != SymbolKind::FieldJet || a.jet_order() != 0 {
                return Err(Error::Unsupported(format!("function `{name}` may only depend on fields, got {a}")));
            }
        }
        let f = Func::new(name, Arc::from(args.to_vec()));
        self.funcs.insert(name.to_string(), f.clone());
        Ok(f)
    }

    pub fn function(&self, name: &str) -> Option<&Func> {
        self.funcs.get(name)
    }

    pub fn functions(&self) -> impl Iterator<Item = &Func> {
        self.funcs.values()
    }

    /// Rewrite rule `name(args) -> rhs`, applied by [`Theory::apply_relations`].
    pub fn add_relation(&mut self, name: &str, rhs: Expr) -> Result<()> {
        if !self.funcs.contains_key(name) {
            return Err(Error::SymbolUnknown(name.to_string()));
        }
        self.relations.insert(name.to_string(), rhs);
        Ok(())
    }

    pub fn relations(&self) -> impl Iterator<Item = (&String, &Expr)> {
        self.relations.iter()
    }

    pub fn has_relations(&self) -> bool {
        !self.relations.is_empty()
    }

    pub fn fields(&self) -> &[Symbol] {
        &self.fields
    }

    pub fn antifields(&self) -> &[Symbol] {
        &self.antifields
    }

    /// (field, antifield) pairs in declaration order.
    pub fn pairs(&self) -> impl Iterator<Item = (&Symbol, &Symbol)> {
        self.fields.iter().zip(self.antifields.iter())
    }

    pub fn field(&self, name: &str) -> Result<Symbol> {
        self.fields
            .iter()
            .find(|s| s.name() == name)
            .cloned()
            .ok_or_else(|| Error::SymbolUnknown(name.to_string()))
    }

    pub fn antifield(&self, name: &str) -> Result<Symbol> {
        self.antifields
            .iter()
            .find(|s| s.name() == name)
            .cloned()
            .ok_or_else(|| Error::SymbolUnknown(antifield_name(name)))
    }

    pub fn x(&self, name: &str) -> Expr {
        Expr::symbol(&self.field(name).expect("declared field"))
    }

    pub fn xp(&self, name: &str) -> Expr {
        Expr::symbol(&self.antifield(name).expect("declared field"))
    }

    /// Resolve a rendered name (`x_1`, `x+_1`, `c+`) to its order-0 symbol.
    pub fn lookup(&self, rendered: &str) -> Option<Symbol> {
        if let Some(s) = self.fields.iter().find(|s| s.name() == rendered) {
            return Some(s.clone());
        }
        self.antifields.iter().find(|s| s.display_name() == rendered).cloned()
    }

    /// The partner of a field or antifield.
    pub fn partner(&self, s: &Symbol) -> Option<Symbol> {
        let b = s.base();
        if let Some(i) = self.fields.iter().position(|f| *f == b) {
            return Some(self.antifields[i].with_jet(s.jet_order()));
        }
        self.antifields.iter().position(|f| *f == b).map(|i| self.fields[i].with_jet(s.jet_order()))
    }

    pub fn contains(&self, s: &Symbol) -> bool {
        let b = s.base();
        self.fields.contains(&b) || self.antifields.contains(&b)
    }

    /// `D = ξ⁺_a ∂ξ^a`.
    pub fn d_element(&self) -> Expr {
        let mut acc = Expr::zero();
        for (f, a) in self.pairs() {
            acc = acc + &Expr::symbol(a) * &Expr::symbol(&f.with_jet(1));
        }
        acc
    }

    /// Disjoint union of two charts (product of target manifolds).
    pub fn product(&self, other: &Theory, name: &str) -> Result<Theory> {
        let mut t = self.clone();
        t.name = name.to_string();
        for f in other.fields() {
            if self.fields.iter().any(|g| g.name() == f.name()) {
                return Err(Error::Grading(format!("field `{}` declared in both factors", f.name())));
            }
            t.add_field(f.name(), f.ghost(), f.parity())?;
        }
        for (k, v) in &other.funcs {
            t.funcs.insert(k.clone(), v.clone());
        }
        for (k, v) in &other.relations {
            t.relations.insert(k.clone(), v.clone());
        }
        Ok(t)
    }

    /// Replace every related function symbol (and its derivatives) by its
    /// definition.
    pub fn apply_relations(&self, e: &Expr) -> Result<Expr> {
        if self.relations.is_empty() {
            return Ok(e.clone());
        }
        let mut acc = Vec::new();
        for (m, c) in e.terms() {
            let hit = m.funcs().iter().any(|(f, _)| self.relations.contains_key(f.name()));
            if !hit {
                acc.push((m.clone(), c.clone()));
                continue;
            }
            let mut t = Expr::constant(c.clone());
            for (s, k) in m.syms() {
                t = &t * &Expr::symbol_pow(s, *k);
            }
            for (f, k) in m.funcs() {
                let base = match self.relations.get(f.name()) {
                    Some(rhs) => {
                        let mut r = self.apply_relations(rhs)?;
                        for &i in f.deriv() {
                            r = r.partial(&f.args()[i as usize]);
                        }
                        r
                    }
                    None => Expr::func(f),
                };
                t = &t * &base.pow_int(*k as u32);
            }
            for (b, k) in m.logs() {
                t = &t * &Expr::log(&self.apply_relations(b)?)?.pow_int(*k);
            }
            for (b, r) in m.pows() {
                t = &t * &Expr::pow(&self.apply_relations(b)?, r)?;
            }
            acc.extend(t.into_terms());
        }
        Ok(Expr::from_terms(acc))
    }
}

fn is_reserved(name: &str) -> bool {
    matches!(name, "eps" | "u" | "tau" | "d" | "inv" | "log" | "pow" | "sum" | "D")
        || name.starts_with("t_")
        || name.starts_with("dt_")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antifields_are_paired() {
        let mut t = Theory::new("t");
        let c = t.add_field("c", 1, 1).unwrap();
        let cp = t.antifield("c").unwrap();
        assert_eq!(t.partner(&c), Some(cp.clone()));
        assert_eq!(t.partner(&cp.with_jet(2)), Some(c.with_jet(2)));
        assert_eq!(t.lookup("c+"), Some(cp));
    }

    #[test]
    fn regrading_is_rejected() {
        let mut t = Theory::new("t");
        t.add_field("c", 1, 1).unwrap();
        assert!(t.add_field("c", 0, 0).is_err());
        assert!(t.add_field("eps", 0, 0).is_err());
    }

    #[test]
    fn relation_rewrites_derivatives() {
        let mut t = Theory::new("t");
        t.set_metric(vec![q(1), q(1)]);
        let xs = t.add_indexed_field("x", 0, 0).unwrap();
        let a1 = t.add_function("A_1", &xs).unwrap();
        let a2 = t.add_function("A_2", &xs).unwrap();
        let f = t.add_function("F_1_2", &xs).unwrap();
        let rhs = Expr::func(&a2.differentiate(0)) - Expr::func(&a1.differentiate(1));
        t.add_relation("F_1_2", rhs).unwrap();
        let e = Expr::func(&f.differentiate(1));
        let got = t.apply_relations(&e).unwrap();
        let want = Expr::func(&a2.differentiate(0).differentiate(1)) - Expr::func(&a1.with_deriv(vec![1, 1]));
        assert_eq!(got, want);
    }
}
