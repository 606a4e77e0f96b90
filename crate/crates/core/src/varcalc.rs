//! Variational calculus on jet expressions: total derivative, Euler
//! operators, evolutionary vector fields, the Soloviev bracket and the
//! local BV antibracket.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::expr::{q, Expr, Monomial, Q};
use crate::par;
use crate::symbol::{Symbol, SymbolKind};
use crate::theory::Theory;

/// Total derivative ∂. Jets move up one order; function symbols follow
/// the chain rule through their arguments.
pub fn total_derivative(e: &Expr) -> Expr {
    e.derive(false, &mut |s| if s.is_jet() { Expr::symbol(&s.with_jet(s.jet_order() + 1)) } else { Expr::zero() })
}

pub fn total_derivative_n(e: &Expr, n: u32) -> Expr {
    let mut cur = e.clone();
    for _ in 0..n {
        if cur.is_zero() {
            break;
        }
        cur = total_derivative(&cur);
    }
    cur
}

fn binom(n: u32, k: u32) -> Q {
    q(num_integer::binomial(n as i64, k as i64))
}

/// Highest jet order at which the base generator `a` occurs (None if absent).
fn order_of(e: &Expr, a: &Symbol) -> Option<u32> {
    e.symbols().iter().filter(|s| s.is_jet() && s.base() == *a).map(|s| s.jet_order()).max()
}

/// Higher Euler operator `δ_{k,a} = Σ_ℓ C(k+ℓ,k)(−∂)^ℓ ∂_{k+ℓ,a}`;
/// `k = 0` is the ordinary variational derivative.
pub fn euler(e: &Expr, k: u32, a: &Symbol) -> Expr {
    let a = a.base();
    let Some(top) = order_of(e, &a) else { return Expr::zero() };
    let mut acc = Expr::zero();
    for l in 0..=top.saturating_sub(k) {
        if k + l > top {
            break;
        }
        let p = e.partial(&a.with_jet(k + l));
        if p.is_zero() {
            continue;
        }
        let mut t = total_derivative_n(&p, l).scale(&binom(k + l, k));
        if l % 2 == 1 {
            t = -t;
        }
        acc = acc + t;
    }
    acc
}

/// Base jet generators appearing in `e`.
fn bases(e: &Expr) -> BTreeSet<Symbol> {
    e.symbols().into_iter().filter(|s| s.is_jet()).map(|s| s.base()).collect()
}

/// The field side of every pair touched by `f` or `g`.
fn touched_fields(t: &Theory, f: &Expr, g: &Expr) -> Vec<(Symbol, Symbol)> {
    let mut b = bases(f);
    b.extend(bases(g));
    t.pairs().filter(|(x, a)| b.contains(x) || b.contains(a)).map(|(x, a)| (x.clone(), a.clone())).collect()
}

fn sign(neg: bool) -> Q {
    if neg {
        -Q::one()
    } else {
        Q::one()
    }
}

/// Split into Koszul-homogeneous parts, skipping empty ones.
fn parts(e: &Expr) -> Vec<(bool, Expr)> {
    let (ev, od) = e.split_parity();
    let mut v = Vec::new();
    if !ev.is_zero() {
        v.push((false, ev));
    }
    if !od.is_zero() {
        v.push((true, od));
    }
    v
}

/// Soloviev bracket of two local functionals' densities; it is the
/// bracket in the algebra of all local expressions, not only modulo ∂.
pub fn soloviev(t: &Theory, f: &Expr, g: &Expr) -> Expr {
    let mut jobs = Vec::new();
    for (pf, f) in parts(f) {
        for (x, a) in touched_fields(t, &f, g) {
            jobs.push((pf, f.clone(), x, a));
        }
    }
    Expr::sum(par::map(&jobs, |(pf, f, x, a)| soloviev_pair(*pf, f, g, x, a)))
}

/// Contribution of one pair `(ξ^a, ξ⁺_a)` to the Soloviev bracket.
fn soloviev_pair(pf: bool, f: &Expr, g: &Expr, x: &Symbol, a: &Symbol) -> Expr {
    let mut acc = Expr::zero();
    let glob = sign((pf as u8 + 1) * x.parity() % 2 == 1);
    for (p, q, s) in [(x, a, glob.clone()), (a, x, &glob * sign(pf))] {
        let (Some(kf), Some(lg)) = (order_of(f, p), order_of(g, q)) else { continue };
        for k in 0..=kf {
            let df = f.partial(&p.with_jet(k));
            if df.is_zero() {
                continue;
            }
            for l in 0..=lg {
                let dg = g.partial(&q.with_jet(l));
                if dg.is_zero() {
                    continue;
                }
                acc = acc + (&total_derivative_n(&df, l) * &total_derivative_n(&dg, k)).scale(&s);
            }
        }
    }
    acc
}

/// Local BV antibracket `(δ_a f)(δ^a g) ± (δ^a f)(δ_a g)`; agrees with the
/// Soloviev bracket up to a total derivative.
pub fn bv_antibracket(t: &Theory, f: &Expr, g: &Expr) -> Expr {
    let mut acc = Expr::zero();
    for (pf, f) in parts(f) {
        for (x, a) in touched_fields(t, &f, g) {
            let glob = sign((pf as u8 + 1) * x.parity() % 2 == 1);
            let t1 = &euler(&f, 0, &x) * &euler(g, 0, &a);
            let t2 = &euler(&f, 0, &a) * &euler(g, 0, &x);
            acc = acc + t1.scale(&glob) + t2.scale(&(&glob * sign(pf)));
        }
    }
    acc
}

/// Evolutionary vector field `Σ_k ∂^k(X^a) ∂/∂ξ^a_k`, stored by its
/// components on the order-zero generators.
#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionaryVectorField {
    pub odd: bool,
    pub comps: BTreeMap<Symbol, Expr>,
}

impl EvolutionaryVectorField {
    pub fn new(odd: bool) -> Self {
        EvolutionaryVectorField { odd, comps: BTreeMap::new() }
    }

    pub fn with(mut self, s: &Symbol, e: Expr) -> Self {
        if !e.is_zero() {
            self.comps.insert(s.base(), e);
        }
        self
    }

    pub fn component(&self, s: &Symbol) -> Expr {
        self.comps.get(&s.base()).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.comps.values().all(|e| e.is_zero())
    }

    /// Apply the prolonged field.
    pub fn apply(&self, e: &Expr) -> Expr {
        let mut cache: HashMap<Symbol, Expr> = HashMap::new();
        e.derive(self.odd, &mut |s| {
            if !s.is_jet() {
                return Expr::zero();
            }
            let Some(c) = self.comps.get(&s.base()) else { return Expr::zero() };
            cache.entry(s.clone()).or_insert_with(|| total_derivative_n(c, s.jet_order())).clone()
        })
    }

    /// Graded commutator, again evolutionary.
    pub fn commutator(&self, o: &Self) -> Self {
        let odd = self.odd ^ o.odd;
        let sgn = sign(self.odd && o.odd);
        let keys: BTreeSet<Symbol> = self.comps.keys().chain(o.comps.keys()).cloned().collect();
        let mut out = Self::new(odd);
        for k in keys {
            let v = self.apply(&o.component(&k)) - o.apply(&self.component(&k)).scale(&sgn);
            out = out.with(&k, v);
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        let keys: BTreeSet<Symbol> = self.comps.keys().chain(o.comps.keys()).cloned().collect();
        let mut out = Self::new(self.odd);
        for k in keys {
            out = out.with(&k, self.component(&k) - o.component(&k));
        }
        out
    }
}

/// Hamiltonian evolutionary vector field `H_f` with `H_f g = (f, g)` modulo
/// ∂ and `[H_f, H_g] = H_{(f,g)}`.
pub fn hamiltonian_vf(t: &Theory, f: &Expr) -> EvolutionaryVectorField {
    let mut odd = None;
    let mut acc: BTreeMap<Symbol, Expr> = BTreeMap::new();
    for (pf, f) in parts(f) {
        odd.get_or_insert(!pf);
        for (x, a) in t.pairs() {
            let glob = sign((pf as u8 + 1) * x.parity() % 2 == 1);
            let on_a = euler(&f, 0, x).scale(&glob);
            let on_x = euler(&f, 0, a).scale(&(&glob * sign(pf)));
            for (s, v) in [(a, on_a), (x, on_x)] {
                if !v.is_zero() {
                    let e = acc.entry(s.clone()).or_insert_with(Expr::zero);
                    *e = &*e + &v;
                }
            }
        }
    }
    EvolutionaryVectorField { odd: odd.unwrap_or(true), comps: acc.into_iter().filter(|(_, v)| !v.is_zero()).collect() }
}

/// `ad(f) = Σ_k ∂^k ∘ f_(k)` with `f_(k)` evolutionary; returns the list
/// of `f_(k)`. When `f` involves no jets above order zero, `ad(f) = f_(0)`.
pub fn ad_expansion(t: &Theory, f: &Expr) -> Vec<EvolutionaryVectorField> {
    let top = f.max_jet_order();
    let mut out: Vec<EvolutionaryVectorField> = Vec::new();
    for k in 0..=top {
        let mut comps: BTreeMap<Symbol, Expr> = BTreeMap::new();
        let mut odd = true;
        for (pf, f) in parts(f) {
            odd = !pf;
            for (x, a) in t.pairs() {
                let glob = sign((pf as u8 + 1) * x.parity() % 2 == 1);
                let on_a = euler(&f, k, x).scale(&glob);
                let on_x = euler(&f, k, a).scale(&(&glob * sign(pf)));
                for (s, v) in [(a, on_a), (x, on_x)] {
                    if !v.is_zero() {
                        let e = comps.entry(s.clone()).or_insert_with(Expr::zero);
                        *e = &*e + &v;
                    }
                }
            }
        }
        out.push(EvolutionaryVectorField { odd, comps });
    }
    out
}

/// Apply `ad(f)` through its expansion: `Σ_k ∂^k(f_(k) g)`.
pub fn apply_ad(t: &Theory, f: &Expr, g: &Expr) -> Expr {
    let mut acc = Expr::zero();
    for (k, x) in ad_expansion(t, f).iter().enumerate() {
        acc = acc + total_derivative_n(&x.apply(g), k as u32);
    }
    acc
}

/// Result of the exactness test `f = c + ∂g`.
#[derive(Clone, Debug)]
pub struct TotalDerivative {
    pub exact: bool,
    /// Part of `f` with no jet generators.
    pub constant: Expr,
    /// `g` with `f = constant + ∂g`, when one was found.
    pub witness: Option<Expr>,
}

/// Decide whether `f` is a constant plus a total derivative and produce
/// a witness. The decision uses the Euler operators; the witness comes
/// from the homotopy formula, or from integration by parts when `f` has
/// coefficient atoms depending on jets.
pub fn is_total_derivative(t: &Theory, f: &Expr) -> Result<TotalDerivative> {
    let constant = f.filter(|m| !mono_has_jets(m));
    let rest = f - &constant;
    let mut exact = true;
    for b in bases(&rest) {
        if !t.contains(&b) && b.kind() != SymbolKind::FieldJet && b.kind() != SymbolKind::AntifieldJet {
            continue;
        }
        if !euler(&rest, 0, &b).is_zero_rational() {
            exact = false;
            break;
        }
    }
    if !exact {
        return Ok(TotalDerivative { exact, constant, witness: None });
    }
    let atomic = rest.terms().iter().any(|(m, _)| m.has_atoms() && atoms_touch_jets(m));
    let witness = if atomic { integrate_by_parts(&rest) } else { Some(homotopy(&rest)?) };
    if let Some(w) = &witness {
        if !(&rest - &total_derivative(w)).is_zero_rational() {
            return Err(Error::Unsupported(format!("witness check failed for {f}")));
        }
    }
    Ok(TotalDerivative { exact, constant, witness })
}

fn mono_has_jets(m: &Monomial) -> bool {
    m.syms().iter().any(|(s, _)| s.is_jet()) || atoms_touch_jets(m)
}

fn atoms_touch_jets(m: &Monomial) -> bool {
    if !m.has_atoms() {
        return false;
    }
    let e = Expr::from_mono(m.clone(), Q::one());
    e.symbols().iter().any(|s| s.is_jet() && m.exponent_of(s) == 0) || !m.funcs().is_empty()
}

/// Homotopy formula for a polynomial total derivative with no constant
/// term: `g = ∫₀¹ Σ_a Σ_k Σ_j (−∂)^j … ` evaluated by rescaling the jets.
fn homotopy(f: &Expr) -> Result<Expr> {
    // Degree-homogeneous pieces scale as s^d, so ∫₀¹ ds/s contributes 1/d.
    let mut by_deg: BTreeMap<i32, Expr> = BTreeMap::new();
    for (m, c) in f.terms() {
        if m.has_atoms() {
            return Err(Error::Unsupported(format!("homotopy formula with atom coefficients: {m}")));
        }
        let d: i32 = m.syms().iter().filter(|(s, _)| s.is_jet()).map(|(_, k)| *k).sum();
        let e = by_deg.entry(d).or_insert_with(Expr::zero);
        *e = &*e + &Expr::from_mono(m.clone(), c.clone());
    }
    let mut acc = Expr::zero();
    for (d, piece) in by_deg {
        if d <= 0 {
            continue;
        }
        let mut g = Expr::zero();
        for b in bases(&piece) {
            let top = order_of(&piece, &b).unwrap_or(0);
            for k in 1..=top {
                // Σ_{j<k} (−∂)^j(∂f/∂u_k) · u_{k−1−j}
                let p = piece.partial(&b.with_jet(k));
                if p.is_zero() {
                    continue;
                }
                let mut dj = p;
                for j in 0..k {
                    let v = Expr::symbol(&b.with_jet(k - 1 - j));
                    let mut term = &v * &dj;
                    if j % 2 == 1 {
                        term = -term;
                    }
                    g = g + term;
                    dj = total_derivative(&dj);
                }
            }
        }
        acc = acc + g.scale(&Q::new(q(1).numer().clone(), (d as i64).into()));
    }
    Ok(acc)
}

/// Peel off the top jet generator repeatedly. Returns None if the
/// procedure stalls.
fn integrate_by_parts(f: &Expr) -> Option<Expr> {
    let mut f = f.clone();
    let mut g = Expr::zero();
    for _ in 0..400 {
        if f.is_zero_rational() {
            return Some(g);
        }
        let jets: Vec<Symbol> = f.symbols().into_iter().filter(|s| s.is_jet()).collect();
        let k = jets.iter().map(|s| s.jet_order()).max()?;
        if k == 0 {
            return None;
        }
        let v = jets.iter().filter(|s| s.jet_order() == k).max()?.clone();
        if f.terms().iter().any(|(m, _)| m.atoms_depend_on(&v)) {
            return None;
        }
        let coeffs = v_coeffs(&f, &v);
        if coeffs.keys().any(|n| *n > 1) {
            return None;
        }
        let a = coeffs.get(&1)?.clone();
        let w = v.with_jet(k - 1);
        if a.terms().iter().any(|(m, _)| m.atoms_depend_on(&w)) {
            return None;
        }
        let mut h = Expr::zero();
        for (n, an) in v_coeffs(&a, &w) {
            if v.is_odd() && n > 0 {
                continue;
            }
            h = h + (&Expr::symbol_pow(&w, n + 1) * &an).scale(&Q::new(1.into(), ((n + 1) as i64).into()));
        }
        if h.is_zero() {
            return None;
        }
        f = &f - &total_derivative(&h);
        g = g + h;
    }
    None
}

fn v_coeffs(f: &Expr, v: &Symbol) -> BTreeMap<i32, Expr> {
    f.coefficients_of(v)
}

/// An étale change of coordinates `η^b ↦ y^b(ξ)` on the target chart,
/// extended to antifields by the inverse Jacobian.
#[derive(Clone, Debug)]
pub struct EtaleMap {
    pub images: BTreeMap<Symbol, Expr>,
    pub antifield_images: BTreeMap<Symbol, Expr>,
}

impl EtaleMap {
    /// Build from images of (some of) the fields; unspecified fields are
    /// fixed. Only even coordinates may be moved.
    pub fn new(t: &Theory, images: &[(Symbol, Expr)]) -> Result<Self> {
        let fields: Vec<Symbol> = t.fields().to_vec();
        let n = fields.len();
        let mut img: Vec<Expr> = fields.iter().map(Expr::symbol).collect();
        for (s, e) in images {
            let i = fields.iter().position(|f| f == s).ok_or_else(|| Error::SymbolUnknown(s.to_string()))?;
            if s.is_odd() {
                return Err(Error::Unsupported(format!("étale map moving odd coordinate {s}")));
            }
            if e.max_jet_order() > 0 {
                return Err(Error::Precondition(format!("image of {s} depends on jets")));
            }
            img[i] = e.clone();
        }
        let mut jac: Vec<Vec<Expr>> = vec![vec![Expr::zero(); n]; n];
        for b in 0..n {
            for a in 0..n {
                let d = img[b].partial(&fields[a]);
                if !d.is_zero() && d.koszul() != Some(false) {
                    return Err(Error::Unsupported("odd Jacobian entry".into()));
                }
                jac[b][a] = d;
            }
        }
        let inv = invert_matrix(&jac)?;
        let mut out = EtaleMap { images: BTreeMap::new(), antifield_images: BTreeMap::new() };
        for (b, f) in fields.iter().enumerate() {
            out.images.insert(f.clone(), img[b].clone());
        }
        let anti = t.antifields();
        for b in 0..n {
            // φ* η⁺_b = (J^{-1})^a_b ξ⁺_a
            let mut acc = Expr::zero();
            for a in 0..n {
                if !inv[a][b].is_zero() {
                    acc = acc + &inv[a][b] * &Expr::symbol(&anti[a]);
                }
            }
            out.antifield_images.insert(anti[b].clone(), acc);
        }
        Ok(out)
    }

    /// Pull back a jet expression.
    pub fn pullback(&self, e: &Expr) -> Result<Expr> {
        let mut cache: HashMap<Symbol, Expr> = HashMap::new();
        e.substitute(&mut |s| {
            if !s.is_jet() {
                return None;
            }
            let base = s.base();
            let img = self.images.get(&base).or_else(|| self.antifield_images.get(&base))?;
            Some(cache.entry(s.clone()).or_insert_with(|| total_derivative_n(img, s.jet_order())).clone())
        })
    }
}

/// Inverse of a square matrix of even, commuting entries by Gaussian
/// elimination; the result is checked by multiplication.
pub fn invert_matrix(m: &[Vec<Expr>]) -> Result<Vec<Vec<Expr>>> {
    let n = m.len();
    let mut a: Vec<Vec<Expr>> = m.to_vec();
    let mut inv: Vec<Vec<Expr>> =
        (0..n).map(|i| (0..n).map(|j| if i == j { Expr::one() } else { Expr::zero() }).collect()).collect();
    for col in 0..n {
        let piv = (col..n)
            .filter(|&r| !a[r][col].is_zero_rational())
            .min_by_key(|&r| pivot_cost(&a[r][col]))
            .ok_or_else(|| Error::SingularJacobian(format!("no pivot in column {}", col + 1)))?;
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col].clone();
        let pinv = match p.as_constant() {
            Some(c) => Expr::constant(c.recip()),
            None => Expr::inv(&p)?,
        };
        for j in 0..n {
            a[col][j] = &a[col][j] * &pinv;
            inv[col][j] = &inv[col][j] * &pinv;
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let fct = a[r][col].clone();
            for j in 0..n {
                let s = &fct * &a[col][j];
                a[r][j] = &a[r][j] - &s;
                let s = &fct * &inv[col][j];
                inv[r][j] = &inv[r][j] - &s;
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            let mut acc = Expr::zero();
            for k in 0..n {
                acc = acc + &inv[i][k] * &m[k][j];
            }
            let want = if i == j { Expr::one() } else { Expr::zero() };
            if !(&acc - &want).is_zero_rational() {
                return Err(Error::SingularJacobian(format!("inverse check failed at ({}, {})", i + 1, j + 1)));
            }
        }
    }
    Ok(inv)
}

fn pivot_cost(e: &Expr) -> (usize, usize) {
    match e.as_constant() {
        Some(c) if !c.is_zero() => (0, 0),
        _ => (1, e.len()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn particle() -> Theory {
        let mut t = Theory::new("p");
        t.add_field("x", 0, 0).unwrap();
        t.add_field("p", 0, 0).unwrap();
        t.add_field("e", 0, 0).unwrap();
        t.add_field("c", 1, 1).unwrap();
        t
    }

    fn jet(t: &Theory, n: &str, k: u32) -> Expr {
        Expr::symbol(&t.field(n).unwrap().with_jet(k))
    }

    #[test]
    fn derivative_of_ghost_product() {
        let t = particle();
        let c = t.x("c");
        let e = &c * &jet(&t, "c", 1);
        assert_eq!(e.partial(&t.field("c").unwrap()), jet(&t, "c", 1));
        assert_eq!(total_derivative(&e), &c * &jet(&t, "c", 2));
    }

    #[test]
    fn euler_of_kinetic_term() {
        let t = particle();
        let x = t.field("x").unwrap();
        let e = &t.x("p") * &jet(&t, "x", 1);
        assert_eq!(euler(&e, 0, &x), -jet(&t, "p", 1));
        assert_eq!(euler(&e, 1, &x), t.x("p"));
    }

    #[test]
    fn soloviev_on_generators() {
        let t = particle();
        let f = &(&t.x("c") * &t.xp("x")) * &t.xp("p");
        assert_eq!(soloviev(&t, &f, &t.x("x")), &t.x("c") * &t.xp("p"));
        assert_eq!(soloviev(&t, &f, &t.x("p")), -(&t.x("c") * &t.xp("x")));
    }

    #[test]
    fn exactness() {
        let t = particle();
        let g = &(&t.x("c") * &t.x("p")) * &t.xp("p");
        let r = is_total_derivative(&t, &total_derivative(&g)).unwrap();
        assert!(r.exact);
        assert_eq!(total_derivative(&r.witness.unwrap()), total_derivative(&g));
        let r = is_total_derivative(&t, &Expr::int(7)).unwrap();
        assert!(r.exact && r.constant == Expr::int(7));
        assert!(r.witness.unwrap().is_zero());
        let r = is_total_derivative(&t, &t.x("p")).unwrap();
        assert!(!r.exact);
    }

    #[test]
    fn exactness_with_atoms() {
        let t = particle();
        let e = t.field("e").unwrap();
        let ie = Expr::inv(&t.x("e")).unwrap();
        let g = &ie * &(&t.x("c") * &jet(&t, "c", 1));
        let f = total_derivative(&g);
        let r = is_total_derivative(&t, &f).unwrap();
        assert!(r.exact);
        let w = r.witness.unwrap();
        assert!((&total_derivative(&w) - &f).is_zero_rational());
        assert!(euler(&f, 0, &e).is_zero_rational());
    }

    #[test]
    fn hamiltonian_commutator() {
        let t = particle();
        let f = &(&t.x("c") * &t.xp("x")) * &t.xp("p");
        let g = &(&t.x("p") * &jet(&t, "x", 1)) * &t.x("e");
        let h = soloviev(&t, &f, &g);
        let lhs = hamiltonian_vf(&t, &f).commutator(&hamiltonian_vf(&t, &g));
        let rhs = hamiltonian_vf(&t, &h);
        assert!(lhs.sub(&rhs).is_zero());
    }

    #[test]
    fn quadratic_etale_map_preserves_bracket() {
        let t = particle();
        let x = t.field("x").unwrap();
        let p = t.field("p").unwrap();
        let phi = EtaleMap::new(&t, &[(x.clone(), t.x("x") + t.x("p").pow_int(2))]).unwrap();
        let f = &(&t.x("c") * &t.xp("x")) * &t.xp("p");
        let g = &(&t.x("p") * &jet(&t, "x", 1)) + &(&t.x("x") * &t.xp("c"));
        let lhs = soloviev(&t, &phi.pullback(&f).unwrap(), &phi.pullback(&g).unwrap());
        let rhs = phi.pullback(&soloviev(&t, &f, &g)).unwrap();
        assert_eq!(lhs, rhs);
        let _ = p;
    }
}
