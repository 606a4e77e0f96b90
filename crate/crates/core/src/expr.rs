//! Canonical graded-commutative polynomials with exact coefficients.
//!
//! An [`Expr`] is a sorted list of `(Monomial, Q)` terms. A monomial is a
//! product of generators (with Koszul signs fixed by the symbol order) and
//! even coefficient atoms: function symbols, `log(x)` and `pow(x, r)`.
//! `inv(x)` is `pow(x, -1)`.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::symbol::{Symbol, SymbolKind};

pub type Q = num_rational::BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Exponent `tau * τ + c` of a `pow` atom.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exponent {
    pub tau: Q,
    pub c: Q,
}

impl Exponent {
    pub fn constant(c: Q) -> Self {
        Exponent { tau: Q::zero(), c }
    }

    pub fn int(n: i64) -> Self {
        Self::constant(q(n))
    }

    pub fn affine(tau: Q, c: Q) -> Self {
        Exponent { tau, c }
    }

    pub fn is_zero(&self) -> bool {
        self.tau.is_zero() && self.c.is_zero()
    }

    pub fn as_integer(&self) -> Option<i64> {
        if self.tau.is_zero() && self.c.is_integer() {
            self.c.to_integer().to_i64()
        } else {
            None
        }
    }

    fn natural(&self) -> Option<u32> {
        self.as_integer().filter(|n| *n >= 0).map(|n| n as u32)
    }

    fn add(&self, o: &Exponent) -> Exponent {
        Exponent { tau: &self.tau + &o.tau, c: &self.c + &o.c }
    }

    fn scale_int(&self, k: i64) -> Exponent {
        Exponent { tau: &self.tau * q(k), c: &self.c * q(k) }
    }

    fn mul(&self, o: &Exponent) -> Option<Exponent> {
        if !self.tau.is_zero() && !o.tau.is_zero() {
            return None;
        }
        Some(Exponent {
            tau: &self.tau * &o.c + &o.tau * &self.c,
            c: &self.c * &o.c,
        })
    }

    /// The exponent as an expression in τ.
    pub fn to_expr(&self) -> Expr {
        Expr::constant(self.c.clone()) + Expr::symbol(&Symbol::tau()).scale(&self.tau)
    }
}

/// An opaque coefficient function of base coordinates, possibly
/// differentiated. `deriv` is a sorted multi-index into `args`.
#[derive(Clone)]
pub struct Func(Arc<FuncData>);

#[derive(Debug)]
pub struct FuncData {
    pub name: Arc<str>,
    pub args: Arc<[Symbol]>,
    pub deriv: Vec<u16>,
}

impl Func {
    pub fn new(name: &str, args: Arc<[Symbol]>) -> Self {
        Func(Arc::new(FuncData { name: name.into(), args, deriv: Vec::new() }))
    }

    pub fn data(&self) -> &FuncData {
        &self.0
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn args(&self) -> &[Symbol] {
        &self.0.args
    }

    pub fn deriv(&self) -> &[u16] {
        &self.0.deriv
    }

    /// `∂F/∂args[i]`.
    pub fn differentiate(&self, i: usize) -> Func {
        let mut deriv = self.0.deriv.clone();
        let pos = deriv.partition_point(|&d| d <= i as u16);
        deriv.insert(pos, i as u16);
        Func(Arc::new(FuncData { name: self.0.name.clone(), args: self.0.args.clone(), deriv }))
    }

    pub fn with_deriv(&self, mut deriv: Vec<u16>) -> Func {
        deriv.sort_unstable();
        Func(Arc::new(FuncData { name: self.0.name.clone(), args: self.0.args.clone(), deriv }))
    }
}

impl PartialEq for Func {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Func {}
impl PartialOrd for Func {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Func {
    fn cmp(&self, o: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &o.0) {
            return Ordering::Equal;
        }
        self.0.name.cmp(&o.0.name).then_with(|| self.0.deriv.cmp(&o.0.deriv))
    }
}
impl Hash for Func {
    fn hash<H: Hasher>(&self, h: &mut H) {
        self.0.name.hash(h);
        self.0.deriv.hash(h);
    }
}

impl fmt::Debug for Func {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Func {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.deriv.is_empty() {
            return f.write_str(&self.0.name);
        }
        f.write_str("D[")?;
        for (k, i) in self.0.deriv.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", self.0.args[*i as usize])?;
        }
        write!(f, "]({})", self.0.name)
    }
}

/// Product of generators and coefficient atoms.
///
/// Invariants: every list is sorted and free of duplicates; odd
/// generators have exponent 1; only `u` may carry a negative exponent;
/// a `pow` whose base is a single generator or function never coexists
/// with that generator in `syms`/`funcs`.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    pub(crate) syms: Vec<(Symbol, i32)>,
    pub(crate) funcs: Vec<(Func, i32)>,
    pub(crate) logs: Vec<(Arc<Expr>, u32)>,
    pub(crate) pows: Vec<(Arc<Expr>, Exponent)>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn is_one(&self) -> bool {
        self.syms.is_empty() && self.funcs.is_empty() && self.logs.is_empty() && self.pows.is_empty()
    }

    pub fn syms(&self) -> &[(Symbol, i32)] {
        &self.syms
    }

    pub fn funcs(&self) -> &[(Func, i32)] {
        &self.funcs
    }

    pub fn logs(&self) -> &[(Arc<Expr>, u32)] {
        &self.logs
    }

    pub fn pows(&self) -> &[(Arc<Expr>, Exponent)] {
        &self.pows
    }

    pub fn has_atoms(&self) -> bool {
        !(self.funcs.is_empty() && self.logs.is_empty() && self.pows.is_empty())
    }

    pub fn is_odd(&self) -> bool {
        self.syms.iter().filter(|(s, _)| s.is_odd()).count() % 2 == 1
    }

    pub fn ghost(&self) -> i32 {
        self.syms.iter().map(|(s, e)| s.ghost() * e).sum()
    }

    pub fn parity(&self) -> u8 {
        (self.syms.iter().map(|(s, e)| (s.parity() as i32) * e).sum::<i32>().rem_euclid(2)) as u8
    }

    pub fn form_degree(&self) -> i32 {
        self.syms.iter().map(|(s, e)| s.form_degree() as i32 * e).sum()
    }

    pub fn exponent_of(&self, s: &Symbol) -> i32 {
        self.syms.binary_search_by(|(x, _)| x.cmp(s)).map(|i| self.syms[i].1).unwrap_or(0)
    }

    fn atoms_only(&self) -> Monomial {
        Monomial { syms: Vec::new(), funcs: self.funcs.clone(), logs: self.logs.clone(), pows: self.pows.clone() }
    }

    fn syms_only(&self) -> Monomial {
        Monomial { syms: self.syms.clone(), ..Default::default() }
    }

    fn from_syms(syms: Vec<(Symbol, i32)>) -> Monomial {
        Monomial { syms, ..Default::default() }
    }

    /// True if any coefficient atom depends on `s`.
    pub fn atoms_depend_on(&self, s: &Symbol) -> bool {
        self.funcs.iter().any(|(f, _)| f.args().contains(s))
            || self.logs.iter().any(|(b, _)| b.depends_on(s))
            || self.pows.iter().any(|(b, _)| b.depends_on(s))
    }
}

/// Either a single signed monomial or, when a `pow` collapses to a
/// positive power of a sum, a small expansion.
enum Prod {
    Zero,
    One(bool, Monomial),
    Many(Vec<(Monomial, Q)>),
}

fn merge_syms(a: &[(Symbol, i32)], b: &[(Symbol, i32)]) -> Option<(bool, Vec<(Symbol, i32)>)> {
    if a.is_empty() {
        return Some((false, b.to_vec()));
    }
    if b.is_empty() {
        return Some((false, a.to_vec()));
    }
    let mut odd_a = a.iter().filter(|(s, _)| s.is_odd()).count();
    let mut neg = false;
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            Ordering::Less => {
                if a[i].0.is_odd() {
                    odd_a -= 1;
                }
                out.push(a[i].clone());
                i += 1;
            }
            Ordering::Greater => {
                if b[j].0.is_odd() && odd_a % 2 == 1 {
                    neg = !neg;
                }
                out.push(b[j].clone());
                j += 1;
            }
            Ordering::Equal => {
                if a[i].0.is_odd() {
                    return None;
                }
                let e = a[i].1 + b[j].1;
                if e != 0 {
                    out.push((a[i].0.clone(), e));
                }
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    for (s, e) in &b[j..] {
        if s.is_odd() && odd_a % 2 == 1 {
            neg = !neg;
        }
        out.push((s.clone(), *e));
    }
    Some((neg, out))
}

fn merge_counted<K: Ord + Clone>(a: &[(K, i32)], b: &[(K, i32)]) -> Vec<(K, i32)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            Ordering::Greater => {
                out.push(b[j].clone());
                j += 1;
            }
            Ordering::Equal => {
                let e = a[i].1 + b[j].1;
                if e != 0 {
                    out.push((a[i].0.clone(), e));
                }
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn merge_logs(a: &[(Arc<Expr>, u32)], b: &[(Arc<Expr>, u32)]) -> Vec<(Arc<Expr>, u32)> {
    let a2: Vec<_> = a.iter().map(|(x, e)| (x.clone(), *e as i32)).collect();
    let b2: Vec<_> = b.iter().map(|(x, e)| (x.clone(), *e as i32)).collect();
    merge_counted(&a2, &b2).into_iter().map(|(x, e)| (x, e as u32)).collect()
}

fn merge_pows(a: &[(Arc<Expr>, Exponent)], b: &[(Arc<Expr>, Exponent)]) -> Vec<(Arc<Expr>, Exponent)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            Ordering::Greater => {
                out.push(b[j].clone());
                j += 1;
            }
            Ordering::Equal => {
                let e = a[i].1.add(&b[j].1);
                if !e.is_zero() {
                    out.push((a[i].0.clone(), e));
                }
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn mono_mul(a: &Monomial, b: &Monomial) -> Prod {
    let Some((neg, syms)) = merge_syms(&a.syms, &b.syms) else {
        return Prod::Zero;
    };
    let funcs = if b.funcs.is_empty() {
        a.funcs.clone()
    } else {
        merge_counted(&a.funcs, &b.funcs)
    };
    let logs = if b.logs.is_empty() { a.logs.clone() } else { merge_logs(&a.logs, &b.logs) };
    let pows = if b.pows.is_empty() { a.pows.clone() } else { merge_pows(&a.pows, &b.pows) };
    let m = Monomial { syms, funcs, logs, pows };
    if m.pows.is_empty() {
        Prod::One(neg, m)
    } else {
        settle(neg, m)
    }
}

/// Restore the `pow` invariants: fold a generator into a `pow` with that
/// generator as base, and expand `pow`s that became natural powers.
fn settle(neg: bool, mut m: Monomial) -> Prod {
    let mut expand: Vec<(Arc<Expr>, u32)> = Vec::new();
    let pows = std::mem::take(&mut m.pows);
    let mut kept = Vec::with_capacity(pows.len());
    for (base, mut r) in pows {
        match base.as_atom() {
            Some(Atom::Sym(s)) => {
                if let Ok(i) = m.syms.binary_search_by(|(x, _)| x.cmp(&s)) {
                    r = r.add(&Exponent::int(m.syms[i].1 as i64));
                    m.syms.remove(i);
                }
                if let Some(n) = r.natural() {
                    if n > 0 {
                        let pos = m.syms.partition_point(|(x, _)| x < &s);
                        m.syms.insert(pos, (s, n as i32));
                    }
                } else {
                    kept.push((base, r));
                }
            }
            Some(Atom::Func(f)) => {
                if let Ok(i) = m.funcs.binary_search_by(|(x, _)| x.cmp(&f)) {
                    r = r.add(&Exponent::int(m.funcs[i].1 as i64));
                    m.funcs.remove(i);
                }
                if let Some(n) = r.natural() {
                    if n > 0 {
                        let pos = m.funcs.partition_point(|(x, _)| x < &f);
                        m.funcs.insert(pos, (f, n as i32));
                    }
                } else {
                    kept.push((base, r));
                }
            }
            None => match r.natural() {
                Some(0) => {}
                Some(n) => expand.push((base, n)),
                None => kept.push((base, r)),
            },
        }
    }
    m.pows = kept;
    if expand.is_empty() {
        return Prod::One(neg, m);
    }
    let sign = if neg { -Q::one() } else { Q::one() };
    let mut acc = Expr::from_mono(m, sign);
    for (base, n) in expand {
        for _ in 0..n {
            acc = &acc * base.as_ref();
        }
    }
    Prod::Many(acc.terms)
}

enum Atom {
    Sym(Symbol),
    Func(Func),
}

/// Homogeneous grading of an expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grade {
    pub ghost: i32,
    pub parity: u8,
    pub form_degree: i32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Grading {
    Zero,
    Homogeneous(Grade),
    Inhomogeneous,
}

/// A canonical finite sum of monomials with rational coefficients.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr {
    pub(crate) terms: Vec<(Monomial, Q)>,
}

impl Expr {
    pub fn zero() -> Self {
        Expr { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    pub fn int(n: i64) -> Self {
        Self::constant(q(n))
    }

    pub fn constant(c: Q) -> Self {
        if c.is_zero() {
            Self::zero()
        } else {
            Expr { terms: vec![(Monomial::one(), c)] }
        }
    }

    pub fn symbol(s: &Symbol) -> Self {
        Expr { terms: vec![(Monomial::from_syms(vec![(s.clone(), 1)]), Q::one())] }
    }

    /// `s^k`; negative `k` is only meaningful for `u`.
    pub fn symbol_pow(s: &Symbol, k: i32) -> Self {
        if k == 0 {
            return Self::one();
        }
        if s.is_odd() && k > 1 {
            return Self::zero();
        }
        Expr { terms: vec![(Monomial::from_syms(vec![(s.clone(), k)]), Q::one())] }
    }

    pub fn func(f: &Func) -> Self {
        Expr { terms: vec![(Monomial { funcs: vec![(f.clone(), 1)], ..Default::default() }, Q::one())] }
    }

    pub fn from_mono(m: Monomial, c: Q) -> Self {
        if c.is_zero() {
            Self::zero()
        } else {
            Expr { terms: vec![(m, c)] }
        }
    }

    /// Build from unsorted terms, merging duplicates and dropping zeros.
    pub fn from_terms(mut v: Vec<(Monomial, Q)>) -> Self {
        v.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(Monomial, Q)> = Vec::with_capacity(v.len());
        for (m, c) in v {
            match out.last_mut() {
                Some((lm, lc)) if *lm == m => *lc += c,
                _ => {
                    if let Some((_, lc)) = out.last() {
                        if lc.is_zero() {
                            out.pop();
                        }
                    }
                    out.push((m, c));
                }
            }
        }
        if let Some((_, lc)) = out.last() {
            if lc.is_zero() {
                out.pop();
            }
        }
        Expr { terms: out }
    }

    /// Normalize a list of raw signed products: each entry is a
    /// coefficient and a sequence of generators in the given order.
    pub fn normalize(raw: &[(Q, Vec<Symbol>)]) -> Self {
        let mut acc = Vec::new();
        for (c, seq) in raw {
            let mut e = Expr::constant(c.clone());
            for s in seq {
                e = &e * &Expr::symbol(s);
            }
            acc.extend(e.terms);
        }
        Expr::from_terms(acc)
    }

    pub fn terms(&self) -> &[(Monomial, Q)] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<(Monomial, Q)> {
        self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|(m, _)| m.is_one())
    }

    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.as_slice() {
            [] => Some(Q::zero()),
            [(m, c)] if m.is_one() => Some(c.clone()),
            _ => None,
        }
    }

    /// Constant term.
    pub fn constant_term(&self) -> Q {
        match self.terms.first() {
            Some((m, c)) if m.is_one() => c.clone(),
            _ => Q::zero(),
        }
    }

    fn as_atom(&self) -> Option<Atom> {
        match self.terms.as_slice() {
            [(m, c)] if c.is_one() && m.logs.is_empty() && m.pows.is_empty() => {
                match (m.syms.as_slice(), m.funcs.as_slice()) {
                    ([(s, 1)], []) => Some(Atom::Sym(s.clone())),
                    ([], [(f, 1)]) => Some(Atom::Func(f.clone())),
                    _ => None,
                }
            }
            _ => None,
        }
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Expr { terms: self.terms.iter().map(|(m, x)| (m.clone(), x * c)).collect() }
    }

    pub fn scale_int(&self, n: i64) -> Self {
        self.scale(&q(n))
    }

    pub fn add_expr(&self, o: &Expr) -> Self {
        if o.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return o.clone();
        }
        let (a, b) = (&self.terms, &o.terms);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let c = &a[i].1 + &b[j].1;
                    if !c.is_zero() {
                        out.push((a[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Expr { terms: out }
    }

    pub fn mul_expr(&self, o: &Expr) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        let mut acc = Vec::with_capacity(self.terms.len() * o.terms.len());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                match mono_mul(ma, mb) {
                    Prod::Zero => {}
                    Prod::One(neg, m) => {
                        let c = ca * cb;
                        acc.push((m, if neg { -c } else { c }));
                    }
                    Prod::Many(ts) => {
                        let c = ca * cb;
                        acc.extend(ts.into_iter().map(|(m, x)| (m, x * &c)));
                    }
                }
            }
        }
        Expr::from_terms(acc)
    }

    pub fn pow_int(&self, n: u32) -> Self {
        let mut acc = Expr::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    pub fn sum<I: IntoIterator<Item = Expr>>(it: I) -> Self {
        let mut acc = Vec::new();
        for e in it {
            acc.extend(e.terms);
        }
        Expr::from_terms(acc)
    }

    pub fn grading(&self) -> Grading {
        let mut g: Option<Grade> = None;
        for (m, _) in &self.terms {
            let t = Grade { ghost: m.ghost(), parity: m.parity(), form_degree: m.form_degree() };
            match g {
                None => g = Some(t),
                Some(h) if h != t => return Grading::Inhomogeneous,
                _ => {}
            }
        }
        match g {
            None => Grading::Zero,
            Some(h) => Grading::Homogeneous(h),
        }
    }

    /// Koszul degree (parity + form degree) if homogeneous.
    pub fn koszul(&self) -> Option<bool> {
        let mut k = None;
        for (m, _) in &self.terms {
            let o = m.is_odd();
            match k {
                None => k = Some(o),
                Some(x) if x != o => return None,
                _ => {}
            }
        }
        Some(k.unwrap_or(false))
    }

    /// Split into even and odd Koszul-degree parts.
    pub fn split_parity(&self) -> (Expr, Expr) {
        let (mut ev, mut od) = (Vec::new(), Vec::new());
        for t in &self.terms {
            if t.0.is_odd() {
                od.push(t.clone())
            } else {
                ev.push(t.clone())
            }
        }
        (Expr { terms: ev }, Expr { terms: od })
    }

    pub fn filter(&self, mut keep: impl FnMut(&Monomial) -> bool) -> Expr {
        Expr { terms: self.terms.iter().filter(|(m, _)| keep(m)).cloned().collect() }
    }

    pub fn depends_on(&self, s: &Symbol) -> bool {
        self.terms.iter().any(|(m, _)| m.exponent_of(s) != 0 || m.atoms_depend_on(s))
    }

    /// All generators appearing anywhere, including inside atoms.
    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<Symbol>) {
        for (m, _) in &self.terms {
            for (s, _) in &m.syms {
                out.insert(s.clone());
            }
            for (f, _) in &m.funcs {
                out.extend(f.args().iter().cloned());
            }
            for (b, _) in &m.logs {
                b.collect_symbols(out);
            }
            for (b, _) in &m.pows {
                b.collect_symbols(out);
                if m.pows.iter().any(|(_, r)| !r.tau.is_zero()) {
                    out.insert(Symbol::tau());
                }
            }
        }
    }

    /// Function symbols appearing in coefficient atoms.
    pub fn funcs(&self) -> BTreeSet<Func> {
        let mut out = BTreeSet::new();
        for (m, _) in &self.terms {
            for (f, _) in &m.funcs {
                out.insert(f.clone());
            }
            for (b, _) in &m.logs {
                out.extend(b.funcs());
            }
            for (b, _) in &m.pows {
                out.extend(b.funcs());
            }
        }
        out
    }

    /// Highest jet order of any generator.
    pub fn max_jet_order(&self) -> u32 {
        self.symbols().iter().filter(|s| s.is_jet()).map(|s| s.jet_order()).max().unwrap_or(0)
    }

    // ---- transcendental atoms ----

    fn check_transcendental_arg(op: &'static str, x: &Expr) -> Result<()> {
        for (m, _) in &x.terms {
            if m.ghost() != 0 || m.is_odd() || m.form_degree() != 0 {
                return Err(Error::BadTranscendental { op, arg: x.to_string() });
            }
        }
        Ok(())
    }

    /// `pow(x, r)` with the rewrite rules applied.
    pub fn pow(x: &Expr, r: &Exponent) -> Result<Expr> {
        Self::check_transcendental_arg("pow", x)?;
        if r.is_zero() {
            return Ok(Expr::one());
        }
        if let Some(n) = r.natural() {
            return Ok(x.pow_int(n));
        }
        if x.is_zero() {
            return Err(Error::Unsupported(format!("pow(0, {})", r.to_expr())));
        }
        if let Some(c) = x.as_constant() {
            return match r.as_integer() {
                Some(n) => Ok(Expr::constant(pow_q(&c, n))),
                None => Err(Error::Unsupported(format!("pow({c}, {}) is not rational", r.to_expr()))),
            };
        }
        if x.terms.len() == 1 {
            let (m, c) = &x.terms[0];
            let coef = match r.as_integer() {
                Some(n) => pow_q(c, n),
                None if c.is_one() => Q::one(),
                None => {
                    return Err(Error::Unsupported(format!("pow({x}, {}) has an irrational prefactor", r.to_expr())))
                }
            };
            let mut acc = Expr::constant(coef);
            for (s, k) in &m.syms {
                acc = &acc * &Self::raw_pow(Expr::symbol(s), r.scale_int(*k as i64));
            }
            for (f, k) in &m.funcs {
                acc = &acc * &Self::raw_pow(Expr::func(f), r.scale_int(*k as i64));
            }
            for (b, k) in &m.logs {
                let lg = Expr::from_mono(Monomial { logs: vec![(b.clone(), *k)], ..Default::default() }, Q::one());
                acc = &acc * &Self::raw_pow(lg, r.clone());
            }
            for (b, e) in &m.pows {
                let rr = e.mul(r).ok_or_else(|| {
                    Error::Unsupported(format!("exponent {} is not affine in tau", Expr::pow_display(e, r)))
                })?;
                acc = &acc * &Self::raw_pow((**b).clone(), rr);
            }
            return Ok(acc);
        }
        let lead = x.terms[0].1.clone();
        if lead.is_one() {
            return Ok(Self::raw_pow(x.clone(), r.clone()));
        }
        match r.as_integer() {
            Some(n) => {
                let monic = x.scale(&lead.recip());
                Ok(Self::raw_pow(monic, r.clone()).scale(&pow_q(&lead, n)))
            }
            None => Err(Error::Unsupported(format!("pow({x}, {}) has an irrational prefactor", r.to_expr()))),
        }
    }

    fn pow_display(a: &Exponent, b: &Exponent) -> String {
        format!("({})*({})", a.to_expr(), b.to_expr())
    }

    fn raw_pow(base: Expr, r: Exponent) -> Expr {
        if r.is_zero() {
            return Expr::one();
        }
        if let Some(n) = r.natural() {
            return base.pow_int(n);
        }
        let m = Monomial { pows: vec![(Arc::new(base), r)], ..Default::default() };
        match settle(false, m) {
            Prod::One(_, m) => Expr::from_mono(m, Q::one()),
            Prod::Many(ts) => Expr::from_terms(ts),
            Prod::Zero => Expr::zero(),
        }
    }

    pub fn inv(x: &Expr) -> Result<Expr> {
        Self::pow(x, &Exponent::int(-1))
    }

    /// `log(x)`, split over products and powers.
    pub fn log(x: &Expr) -> Result<Expr> {
        Self::check_transcendental_arg("log", x)?;
        if let Some(c) = x.as_constant() {
            return if c.is_one() {
                Ok(Expr::zero())
            } else {
                Err(Error::Unsupported(format!("log({c}) of a constant other than 1")))
            };
        }
        if x.terms.len() == 1 {
            let (m, c) = &x.terms[0];
            if !c.is_one() {
                return Err(Error::Unsupported(format!("log({x}) has a constant factor")));
            }
            let mut acc = Expr::zero();
            for (s, k) in &m.syms {
                acc = acc + Self::raw_log(Expr::symbol(s)).scale_int(*k as i64);
            }
            for (f, k) in &m.funcs {
                acc = acc + Self::raw_log(Expr::func(f)).scale_int(*k as i64);
            }
            for (b, k) in &m.logs {
                let lg = Expr::from_mono(Monomial { logs: vec![(b.clone(), *k)], ..Default::default() }, Q::one());
                acc = acc + Self::raw_log(lg);
            }
            for (b, e) in &m.pows {
                acc = acc + &Self::raw_log((**b).clone()) * &e.to_expr();
            }
            return Ok(acc);
        }
        if !x.terms[0].1.is_one() {
            return Err(Error::Unsupported(format!("log({x}) has a constant factor")));
        }
        Ok(Self::raw_log(x.clone()))
    }

    fn raw_log(base: Expr) -> Expr {
        Expr::from_mono(Monomial { logs: vec![(Arc::new(base), 1)], ..Default::default() }, Q::one())
    }

    // ---- derivations ----

    /// Apply the graded derivation determined by its values on generators.
    /// `odd` is the Koszul parity of the derivation; it acts from the left.
    /// Coefficient atoms are differentiated by the chain rule.
    pub fn derive(&self, odd: bool, on_sym: &mut dyn FnMut(&Symbol) -> Expr) -> Expr {
        let mut acc: Vec<(Monomial, Q)> = Vec::new();
        for (m, c) in &self.terms {
            let syms = m.syms_only();
            if m.has_atoms() {
                let da = derive_atoms(m, on_sym);
                if !da.is_zero() {
                    acc.extend((&da * &Expr::from_mono(syms.clone(), c.clone())).terms);
                }
            }
            let atoms = Expr::from_mono(m.atoms_only(), c.clone());
            let mut odd_before = false;
            for (i, (s, k)) in m.syms.iter().enumerate() {
                let ds = on_sym(s);
                if !ds.is_zero() {
                    let mut left = m.syms[..i].to_vec();
                    if *k != 1 {
                        left.push((s.clone(), k - 1));
                    }
                    let right = m.syms[i + 1..].to_vec();
                    let mut coef = q(*k as i64);
                    if odd && odd_before {
                        coef = -coef;
                    }
                    let l = Expr::from_mono(Monomial::from_syms(left), coef);
                    let r = Expr::from_mono(Monomial::from_syms(right), Q::one());
                    let t = &(&atoms * &l) * &(&ds * &r);
                    acc.extend(t.terms);
                }
                if s.is_odd() && k % 2 != 0 {
                    odd_before = !odd_before;
                }
            }
        }
        Expr::from_terms(acc)
    }

    /// Left partial derivative with respect to a generator.
    pub fn partial(&self, t: &Symbol) -> Expr {
        let mut acc = Vec::new();
        let mut slow = Expr::zero();
        for (m, c) in &self.terms {
            if m.atoms_depend_on(t) {
                let single = Expr::from_mono(m.clone(), c.clone());
                slow = slow + single.derive(t.is_odd(), &mut |s| if s == t { Expr::one() } else { Expr::zero() });
                continue;
            }
            let Ok(i) = m.syms.binary_search_by(|(x, _)| x.cmp(t)) else { continue };
            let k = m.syms[i].1;
            let mut coef = c * q(k as i64);
            if t.is_odd() && m.syms[..i].iter().filter(|(s, _)| s.is_odd()).count() % 2 == 1 {
                coef = -coef;
            }
            let mut nm = m.clone();
            if k == 1 {
                nm.syms.remove(i);
            } else {
                nm.syms[i].1 = k - 1;
            }
            acc.push((nm, coef));
        }
        Expr::from_terms(acc) + slow
    }

    /// Replace generators by expressions (an algebra homomorphism).
    /// Symbols mapped to `None` are kept. Function-symbol arguments must
    /// be fixed by the map; `pow`/`log` bases are rewritten recursively.
    pub fn substitute(&self, map: &mut dyn FnMut(&Symbol) -> Option<Expr>) -> Result<Expr> {
        let tau = Symbol::tau();
        let mut acc = Vec::new();
        for (m, c) in &self.terms {
            let mut t = Expr::constant(c.clone());
            for (f, k) in &m.funcs {
                for a in f.args() {
                    if let Some(img) = map(a) {
                        if img != Expr::symbol(a) {
                            return Err(Error::Unsupported(format!(
                                "substitution moves argument {a} of function symbol {}",
                                f.name()
                            )));
                        }
                    }
                }
                t = &t * &Expr::func(f).pow_int(*k as u32);
            }
            for (b, k) in &m.logs {
                t = &t * &Expr::log(&b.substitute(map)?)?.pow_int(*k);
            }
            for (b, r) in &m.pows {
                let nb = b.substitute(map)?;
                let r2 = if r.tau.is_zero() {
                    r.clone()
                } else {
                    match map(&tau) {
                        None => r.clone(),
                        Some(v) => match v.as_constant() {
                            Some(tv) => Exponent::constant(&r.tau * tv + &r.c),
                            None if v == Expr::symbol(&tau) => r.clone(),
                            None => {
                                return Err(Error::Unsupported(format!("tau -> {v} inside an exponent")))
                            }
                        },
                    }
                };
                t = &t * &Expr::pow(&nb, &r2)?;
            }
            for (s, k) in &m.syms {
                let img = map(s);
                let f = match img {
                    None => Expr::symbol_pow(s, *k),
                    Some(v) if *k >= 0 => v.pow_int(*k as u32),
                    Some(v) => {
                        if v == Expr::symbol(s) {
                            Expr::symbol_pow(s, *k)
                        } else {
                            return Err(Error::Unsupported(format!("substituting {s} with a negative power")));
                        }
                    }
                };
                t = &t * &f;
                if t.is_zero() {
                    break;
                }
            }
            acc.extend(t.terms);
        }
        Ok(Expr::from_terms(acc))
    }

    /// Set `τ` to a rational value.
    pub fn eval_tau(&self, v: &Q) -> Result<Expr> {
        let tau = Symbol::tau();
        self.substitute(&mut |s| if *s == tau { Some(Expr::constant(v.clone())) } else { None })
    }

    /// Derivative with respect to the flow parameter `τ`, including the
    /// τ-dependence of `pow` exponents.
    pub fn d_tau(&self) -> Expr {
        let tau = Symbol::tau();
        self.derive(false, &mut |s| if *s == tau { Expr::one() } else { Expr::zero() })
    }

    /// Group by the exponent of `s`, removing it: `self = Σ_k s^k · out[k]`
    /// where `s^k` stands on the left.
    pub fn coefficients_of(&self, s: &Symbol) -> std::collections::BTreeMap<i32, Expr> {
        let mut groups: std::collections::BTreeMap<i32, Vec<(Monomial, Q)>> = Default::default();
        for (m, c) in &self.terms {
            let mut nm = m.clone();
            let (k, neg) = match nm.syms.binary_search_by(|(x, _)| x.cmp(s)) {
                Ok(i) => {
                    let k = nm.syms[i].1;
                    let neg = s.is_odd() && nm.syms[..i].iter().filter(|(x, _)| x.is_odd()).count() % 2 == 1;
                    nm.syms.remove(i);
                    (k, neg)
                }
                Err(_) => (0, false),
            };
            groups.entry(k).or_default().push((nm, if neg { -c.clone() } else { c.clone() }));
        }
        groups.into_iter().map(|(k, v)| (k, Expr::from_terms(v))).collect()
    }

    /// Clear `pow(B, -n)` denominators whose base is a sum by multiplying
    /// through with `B^n`. Used to decide equality of rational expressions.
    pub fn clear_denominators(&self) -> Expr {
        let mut cur = self.clone();
        loop {
            let mut worst: Option<(Arc<Expr>, i64)> = None;
            for (m, _) in &cur.terms {
                for (b, r) in &m.pows {
                    if b.as_atom().is_some() {
                        continue;
                    }
                    if let Some(n) = r.as_integer() {
                        if n < 0 && worst.as_ref().is_none_or(|(_, w)| -n > *w) {
                            worst = Some((b.clone(), -n));
                        }
                    }
                }
            }
            let Some((b, n)) = worst else { return cur };
            // Multiply by B^n, cancelling the atom instead of expanding it.
            let mut acc = Vec::new();
            for (m, c) in &cur.terms {
                let mut nm = m.clone();
                let mut k = 0;
                if let Some(i) = nm.pows.iter().position(|(x, _)| *x == b) {
                    k = -nm.pows[i].1.as_integer().unwrap_or(0);
                    if k > 0 {
                        nm.pows.remove(i);
                    } else {
                        k = 0;
                    }
                }
                let t = &Expr::from_mono(nm, c.clone()) * &b.pow_int((n - k) as u32);
                acc.extend(t.terms);
            }
            cur = Expr::from_terms(acc);
        }
    }

    /// Zero as a rational expression (after clearing sum denominators).
    pub fn is_zero_rational(&self) -> bool {
        self.is_zero() || self.clear_denominators().is_zero()
    }
}

fn pow_q(c: &Q, n: i64) -> Q {
    if n >= 0 {
        num_traits::pow(c.clone(), n as usize)
    } else {
        num_traits::pow(c.recip(), (-n) as usize)
    }
}

fn derive_atoms(m: &Monomial, on_sym: &mut dyn FnMut(&Symbol) -> Expr) -> Expr {
    let atoms: Vec<Expr> = m
        .funcs
        .iter()
        .map(|(f, k)| Expr::func(f).pow_int(*k as u32))
        .chain(m.logs.iter().map(|(b, k)| {
            Expr::from_mono(Monomial { logs: vec![(b.clone(), *k)], ..Default::default() }, Q::one())
        }))
        .chain(m.pows.iter().map(|(b, r)| {
            Expr::from_mono(Monomial { pows: vec![(b.clone(), r.clone())], ..Default::default() }, Q::one())
        }))
        .collect();
    let mut derivs: Vec<Expr> = Vec::with_capacity(atoms.len());
    for (f, k) in &m.funcs {
        let mut d = Expr::zero();
        for (i, a) in f.args().iter().enumerate() {
            let da = on_sym(a);
            if !da.is_zero() {
                d = d + &Expr::func(&f.differentiate(i)) * &da;
            }
        }
        derivs.push(if *k == 1 { d } else { &d * &Expr::func(f).pow_int(*k as u32 - 1).scale_int(*k as i64) });
    }
    for (b, k) in &m.logs {
        let db = b.derive(false, on_sym);
        if db.is_zero() {
            derivs.push(Expr::zero());
            continue;
        }
        let inv = Expr::raw_pow((**b).clone(), Exponent::int(-1));
        let mut d = &inv * &db;
        if *k > 1 {
            let lg = Expr::from_mono(Monomial { logs: vec![(b.clone(), k - 1)], ..Default::default() }, Q::one());
            d = (&d * &lg).scale_int(*k as i64);
        }
        derivs.push(d);
    }
    for (b, r) in &m.pows {
        let db = b.derive(false, on_sym);
        let mut d = Expr::zero();
        if !db.is_zero() {
            let lower = Expr::raw_pow((**b).clone(), r.add(&Exponent::int(-1)));
            d = &(&r.to_expr() * &lower) * &db;
        }
        if !r.tau.is_zero() {
            let dt = on_sym(&Symbol::tau());
            if !dt.is_zero() {
                let this = Expr::raw_pow((**b).clone(), r.clone());
                let lg = Expr::raw_log((**b).clone());
                d = d + (&(&lg * &this) * &dt).scale(&r.tau);
            }
        }
        derivs.push(d);
    }
    let mut acc = Expr::zero();
    for i in 0..atoms.len() {
        if derivs[i].is_zero() {
            continue;
        }
        let mut t = derivs[i].clone();
        for (j, a) in atoms.iter().enumerate() {
            if j != i {
                t = &t * a;
            }
        }
        acc = acc + t;
    }
    acc
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, o: Expr) -> Expr {
        self.add_expr(&o)
    }
}
impl<'a> Add<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn add(self, o: &Expr) -> Expr {
        self.add_expr(o)
    }
}
impl Sub for Expr {
    type Output = Expr;
    fn sub(self, o: Expr) -> Expr {
        self.add_expr(&-o)
    }
}
impl<'a> Sub<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn sub(self, o: &Expr) -> Expr {
        self.add_expr(&-o)
    }
}
impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr { terms: self.terms.into_iter().map(|(m, c)| (m, -c)).collect() }
    }
}
impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }
}
impl Mul for Expr {
    type Output = Expr;
    fn mul(self, o: Expr) -> Expr {
        self.mul_expr(&o)
    }
}
impl<'a> Mul<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn mul(self, o: &Expr) -> Expr {
        self.mul_expr(o)
    }
}

impl From<&Symbol> for Expr {
    fn from(s: &Symbol) -> Expr {
        Expr::symbol(s)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

// ---- canonical rendering ----

fn fmt_q(c: &Q) -> String {
    if c.is_integer() {
        c.to_integer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut sep = |f: &mut fmt::Formatter<'_>| -> fmt::Result {
            if !first {
                f.write_str("*")?;
            }
            first = false;
            Ok(())
        };
        for (s, k) in &self.syms {
            sep(f)?;
            if *k == 1 {
                write!(f, "{s}")?
            } else {
                write!(f, "{s}^{k}")?
            }
        }
        for (x, k) in &self.funcs {
            sep(f)?;
            if *k == 1 {
                write!(f, "{x}")?
            } else {
                write!(f, "{x}^{k}")?
            }
        }
        for (b, k) in &self.logs {
            sep(f)?;
            if *k == 1 {
                write!(f, "log({b})")?
            } else {
                write!(f, "log({b})^{k}")?
            }
        }
        for (b, r) in &self.pows {
            sep(f)?;
            if r.as_integer() == Some(-1) {
                write!(f, "inv({b})")?
            } else {
                write!(f, "pow({b}, {})", r.to_expr())?
            }
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if i == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            if m.is_one() {
                f.write_str(&fmt_q(&a))?;
            } else if a.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{}*{m}", fmt_q(&a))?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Is `s` a reserved structural symbol (ε, u, τ, simplex forms)?
pub fn is_structural(s: &Symbol) -> bool {
    !matches!(s.kind(), SymbolKind::FieldJet | SymbolKind::AntifieldJet | SymbolKind::FunctionSymbol)
}

impl Add<&Expr> for Expr {
    type Output = Expr;
    fn add(self, o: &Expr) -> Expr {
        self.add_expr(o)
    }
}
impl Sub<&Expr> for Expr {
    type Output = Expr;
    fn sub(self, o: &Expr) -> Expr {
        self.add_expr(&-o)
    }
}
impl Mul<&Expr> for Expr {
    type Output = Expr;
    fn mul(self, o: &Expr) -> Expr {
        self.mul_expr(o)
    }
}
impl Add<Expr> for &Expr {
    type Output = Expr;
    fn add(self, o: Expr) -> Expr {
        self.add_expr(&o)
    }
}
impl Sub<Expr> for &Expr {
    type Output = Expr;
    fn sub(self, o: Expr) -> Expr {
        self.add_expr(&-o)
    }
}
impl Mul<Expr> for &Expr {
    type Output = Expr;
    fn mul(self, o: Expr) -> Expr {
        self.mul_expr(&o)
    }
}
