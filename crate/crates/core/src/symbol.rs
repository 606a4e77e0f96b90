//! Graded generators of the expression algebra.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

/// Kind of a generator. The declaration order is part of the canonical
/// symbol order, so do not reorder the variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymbolKind {
    FieldJet,
    AntifieldJet,
    Epsilon,
    UParameter,
    FlowParameter,
    SimplexCoordinate,
    SimplexOneForm,
    FunctionSymbol,
}

#[derive(Debug)]
pub struct SymbolData {
    pub name: Arc<str>,
    pub kind: SymbolKind,
    pub jet_order: u32,
    pub ghost: i32,
    pub parity: u8,
    pub form_degree: u8,
    pub chart: Option<Arc<str>>,
}

/// A shared, immutable generator. Equality and order only look at
/// `(chart, kind, name, jet_order)`.
#[derive(Clone)]
pub struct Symbol(Arc<SymbolData>);

impl Symbol {
    pub fn new(data: SymbolData) -> Self {
        Symbol(Arc::new(data))
    }

    pub fn field(name: &str, ghost: i32, parity: u8) -> Self {
        Self::new(SymbolData {
            name: name.into(),
            kind: SymbolKind::FieldJet,
            jet_order: 0,
            ghost,
            parity: parity & 1,
            form_degree: 0,
            chart: None,
        })
    }

    /// The antifield of a field generator: ghost −gh−1, opposite parity.
    pub fn antifield_of(field: &Symbol) -> Self {
        Self::new(SymbolData {
            name: field.0.name.clone(),
            kind: SymbolKind::AntifieldJet,
            jet_order: 0,
            ghost: -field.ghost() - 1,
            parity: 1 - field.parity(),
            form_degree: 0,
            chart: field.0.chart.clone(),
        })
    }

    pub fn epsilon() -> Self {
        Self::new(SymbolData {
            name: "eps".into(),
            kind: SymbolKind::Epsilon,
            jet_order: 0,
            ghost: -1,
            parity: 1,
            form_degree: 0,
            chart: None,
        })
    }

    pub fn u() -> Self {
        Self::new(SymbolData {
            name: "u".into(),
            kind: SymbolKind::UParameter,
            jet_order: 0,
            ghost: 2,
            parity: 0,
            form_degree: 0,
            chart: None,
        })
    }

    pub fn tau() -> Self {
        Self::new(SymbolData {
            name: "tau".into(),
            kind: SymbolKind::FlowParameter,
            jet_order: 0,
            ghost: 0,
            parity: 0,
            form_degree: 0,
            chart: None,
        })
    }

    /// Simplex coordinate `t_i`.
    pub fn simplex_t(i: usize) -> Self {
        Self::new(SymbolData {
            name: format!("t_{i}").into(),
            kind: SymbolKind::SimplexCoordinate,
            jet_order: 0,
            ghost: 0,
            parity: 0,
            form_degree: 0,
            chart: None,
        })
    }

    /// Simplex one-form `dt_i`. It carries total degree one, so it shifts
    /// the ghost number by one as well.
    pub fn simplex_dt(i: usize) -> Self {
        Self::new(SymbolData {
            name: format!("dt_{i}").into(),
            kind: SymbolKind::SimplexOneForm,
            jet_order: 0,
            ghost: 1,
            parity: 0,
            form_degree: 1,
            chart: None,
        })
    }

    pub fn function(name: &str) -> Self {
        Self::new(SymbolData {
            name: name.into(),
            kind: SymbolKind::FunctionSymbol,
            jet_order: 0,
            ghost: 0,
            parity: 0,
            form_degree: 0,
            chart: None,
        })
    }

    pub fn data(&self) -> &SymbolData {
        &self.0
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn kind(&self) -> SymbolKind {
        self.0.kind
    }

    pub fn jet_order(&self) -> u32 {
        self.0.jet_order
    }

    pub fn ghost(&self) -> i32 {
        self.0.ghost
    }

    pub fn parity(&self) -> u8 {
        self.0.parity
    }

    pub fn form_degree(&self) -> u8 {
        self.0.form_degree
    }

    /// Koszul degree: parity plus form degree, mod 2.
    pub fn is_odd(&self) -> bool {
        (self.0.parity + self.0.form_degree) % 2 == 1
    }

    pub fn is_jet(&self) -> bool {
        matches!(self.0.kind, SymbolKind::FieldJet | SymbolKind::AntifieldJet)
    }

    /// The same generator at jet order `k`.
    pub fn with_jet(&self, k: u32) -> Self {
        if k == self.0.jet_order {
            return self.clone();
        }
        assert!(self.is_jet(), "jet order on non-jet symbol {self}");
        Self::new(SymbolData {
            name: self.0.name.clone(),
            kind: self.0.kind,
            jet_order: k,
            ghost: self.0.ghost,
            parity: self.0.parity,
            form_degree: 0,
            chart: self.0.chart.clone(),
        })
    }

    /// Order-zero generator with the same name and kind.
    pub fn base(&self) -> Self {
        self.with_jet(0)
    }

    /// Rendered name, with `+` inserted for antifields (`x_1` → `x+_1`).
    pub fn display_name(&self) -> String {
        match self.0.kind {
            SymbolKind::AntifieldJet => antifield_name(&self.0.name),
            _ => self.0.name.to_string(),
        }
    }
}

pub(crate) fn antifield_name(base: &str) -> String {
    match base.find('_') {
        Some(i) => format!("{}+{}", &base[..i], &base[i..]),
        None => format!("{base}+"),
    }
}

impl PartialEq for Symbol {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Symbol {}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        let (a, b) = (&self.0, &other.0);
        a.chart
            .cmp(&b.chart)
            .then(a.kind.cmp(&b.kind))
            .then_with(|| a.name.cmp(&b.name))
            .then(a.jet_order.cmp(&b.jet_order))
    }
}

impl Hash for Symbol {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.chart.hash(state);
        self.0.kind.hash(state);
        self.0.name.hash(state);
        self.0.jet_order.hash(state);
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.display_name();
        match self.0.jet_order {
            0 => f.write_str(&name),
            1 => write!(f, "d({name})"),
            k => write!(f, "d^{k}({name})"),
        }
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antifield_grading() {
        let c = Symbol::field("c", 1, 1);
        let cp = Symbol::antifield_of(&c);
        assert_eq!((cp.ghost(), cp.parity()), (-2, 0));
        let e = Symbol::field("e", 0, 0);
        let ep = Symbol::antifield_of(&e);
        assert_eq!((ep.ghost(), ep.parity()), (-1, 1));
    }

    #[test]
    fn reserved_gradings() {
        let eps = Symbol::epsilon();
        assert_eq!((eps.ghost(), eps.is_odd()), (-1, true));
        assert_eq!((Symbol::u().ghost(), Symbol::u().is_odd()), (2, false));
        assert!(Symbol::simplex_dt(1).is_odd());
        assert!(!Symbol::simplex_t(1).is_odd());
    }

    #[test]
    fn order_is_chart_kind_name_jet() {
        let x = Symbol::field("x", 0, 0);
        let p = Symbol::field("p", 0, 0);
        let xp = Symbol::antifield_of(&x);
        assert!(p < x);
        assert!(x < x.with_jet(1));
        assert!(x.with_jet(5) < xp);
        assert!(xp < Symbol::epsilon());
    }

    #[test]
    fn rendering() {
        let x = Symbol::field("x_2", 0, 0);
        assert_eq!(Symbol::antifield_of(&x).to_string(), "x+_2");
        assert_eq!(x.with_jet(2).to_string(), "d^2(x_2)");
        let e = Symbol::field("e", 0, 0);
        assert_eq!(Symbol::antifield_of(&e).with_jet(1).to_string(), "d(e+)");
    }
}
