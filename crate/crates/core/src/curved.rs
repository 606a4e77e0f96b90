//! The curved Lie superalgebra `B[[u]]`, where `B = F ⊕ (A/R)ε`, with its
//! differential `d_u = d + uι`, curvature `uD`, gauge flows and BCH.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::expr::{q, qr, Exponent, Expr, Monomial, Q};
use crate::symbol::{Symbol, SymbolKind};
use crate::theory::Theory;
use crate::varcalc::{hamiltonian_vf, is_total_derivative, soloviev, total_derivative, total_derivative_n};

/// A differential graded Lie superalgebra (possibly curved) in which
/// gauge flows can be integrated.
pub trait Algebra {
    fn d(&self, x: &Expr) -> Expr;
    fn bracket(&self, a: &Expr, b: &Expr) -> Expr;
    fn normalize(&self, x: &Expr) -> Expr;
}

/// Which differential the flows see.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Differential {
    /// Zero differential, as on `F[[u]]`.
    Zero,
    /// `d_u = d + uι` on `B[[u]]`.
    Du,
}

#[derive(Clone, Debug)]
pub struct Curved<'a> {
    pub theory: &'a Theory,
    pub differential: Differential,
}

fn eps() -> Symbol {
    Symbol::epsilon()
}

pub fn u() -> Expr {
    Expr::symbol(&Symbol::u())
}

pub fn tau() -> Expr {
    Expr::symbol(&Symbol::tau())
}

/// `x = f + g ε` with ε standing on the right.
pub fn split(x: &Expr) -> (Expr, Expr) {
    let e = eps();
    let (mut f, mut g) = (Vec::new(), Vec::new());
    for (m, c) in x.terms() {
        match m.syms().iter().position(|(s, _)| *s == e) {
            None => f.push((m.clone(), c.clone())),
            Some(i) => {
                let odd_after = m.syms()[i + 1..].iter().filter(|(s, k)| s.is_odd() && k % 2 != 0).count();
                let mut nm = m.clone();
                nm.syms.remove(i);
                g.push((nm, if odd_after % 2 == 1 { -c.clone() } else { c.clone() }));
            }
        }
    }
    (Expr::from_terms(f), Expr::from_terms(g))
}

pub fn join(f: &Expr, g: &Expr) -> Expr {
    f + &(g * &Expr::symbol(&eps()))
}

/// Terms that are constant in the `A`-factor: only `u`, `τ`, `t_i`, `dt_i`.
fn is_scalar_mono(m: &Monomial) -> bool {
    !m.has_atoms()
        && m.syms().iter().all(|(s, _)| {
            matches!(
                s.kind(),
                SymbolKind::UParameter | SymbolKind::FlowParameter | SymbolKind::SimplexCoordinate | SymbolKind::SimplexOneForm
            )
        })
}

/// Drop constant multiples of ε (they are zero in `B`).
pub fn normalize_b(x: &Expr) -> Expr {
    let (f, g) = split(x);
    let g = g.filter(|m| !is_scalar_mono(m));
    join(&f, &g)
}

/// Counting operator for antifield jets.
pub fn antifield_count(x: &Expr) -> Expr {
    x.derive(false, &mut |s| {
        if s.kind() == SymbolKind::AntifieldJet {
            Expr::symbol(s)
        } else {
            Expr::zero()
        }
    })
}

/// Highest antifield-jet degree among the monomials.
pub fn antifield_rank(x: &Expr) -> u32 {
    x.terms()
        .iter()
        .map(|(m, _)| {
            m.syms()
                .iter()
                .filter(|(s, _)| s.kind() == SymbolKind::AntifieldJet)
                .map(|(_, k)| *k as u32)
                .sum::<u32>()
        })
        .max()
        .unwrap_or(0)
}

/// Lowest and highest power of `u`.
pub fn u_range(x: &Expr) -> Option<(i32, i32)> {
    let u = Symbol::u();
    let mut r: Option<(i32, i32)> = None;
    for (m, _) in x.terms() {
        let k = m.exponent_of(&u);
        r = Some(match r {
            None => (k, k),
            Some((a, b)) => (a.min(k), b.max(k)),
        });
    }
    r
}

/// Coefficient of `u^k`.
pub fn u_coefficient(x: &Expr, k: i32) -> Expr {
    x.coefficients_of(&Symbol::u()).remove(&k).unwrap_or_else(Expr::zero)
}

impl<'a> Curved<'a> {
    pub fn new(theory: &'a Theory) -> Self {
        Curved { theory, differential: Differential::Du }
    }

    pub fn with_zero_differential(theory: &'a Theory) -> Self {
        Curved { theory, differential: Differential::Zero }
    }

    /// Internal differential `d(f + gε) = (−1)^{|g|} ∂g`.
    pub fn b_differential(&self, x: &Expr) -> Expr {
        let (_, g) = split(x);
        let (ev, od) = g.split_parity();
        total_derivative(&ev) - total_derivative(&od)
    }

    /// `ι(f + gε) = (−1)^{|f|}(N⁺f − f)ε`.
    pub fn iota(&self, x: &Expr) -> Expr {
        let (f, _) = split(x);
        let (ev, od) = f.split_parity();
        let g = (&antifield_count(&ev) - &ev) - (&antifield_count(&od) - &od);
        normalize_b(&join(&Expr::zero(), &g))
    }

    pub fn d_u(&self, x: &Expr) -> Expr {
        normalize_b(&(self.b_differential(x) + &u() * &self.iota(x)))
    }

    /// The curvature `uD`.
    pub fn curvature(&self) -> Expr {
        &u() * &self.theory.d_element()
    }

    pub fn b_bracket(&self, a: &Expr, b: &Expr) -> Expr {
        let (f0, g0) = split(a);
        let (f1, g1) = split(b);
        let t = self.theory;
        let mut out = soloviev(t, &f0, &f1);
        let mut eps_part = soloviev(t, &f0, &g1);
        if !g0.is_zero() {
            let (ev, od) = f1.split_parity();
            eps_part = eps_part - soloviev(t, &g0, &ev) + soloviev(t, &g0, &od);
        }
        out = out + &eps_part * &Expr::symbol(&eps());
        normalize_b(&out)
    }

    /// `uD + d_u S + ½[S, S]`; zero iff `S` is a Maurer–Cartan element.
    pub fn mc_residual(&self, s: &Expr) -> Expr {
        let half = self.b_bracket(s, s).scale(&qr(1, 2));
        normalize_b(&(self.curvature() + self.d_u(s) + half))
    }

    /// Complete a solution of `½(S,S) = −uD + ∂S̃` in `F[[u]]` to the
    /// Maurer–Cartan element `S + S̃ε`.
    pub fn lift(&self, s: &Expr) -> Result<Expr> {
        let (f, g) = split(s);
        if !g.is_zero() {
            return Err(Error::Precondition("lift expects an element of F[[u]]".into()));
        }
        let r = soloviev(self.theory, &f, &f).scale(&qr(1, 2)) + self.curvature();
        let td = is_total_derivative(self.theory, &r)?;
        if !td.exact || !td.constant.is_zero() {
            return Err(Error::Precondition(format!("½(S,S) + uD is not a total derivative: {r}")));
        }
        let w = td.witness.ok_or_else(|| Error::CompletionRequired("no witness for ½(S,S) + uD".into()))?;
        Ok(normalize_b(&join(&f, &w)))
    }
}

impl Algebra for Curved<'_> {
    fn d(&self, x: &Expr) -> Expr {
        match self.differential {
            Differential::Zero => Expr::zero(),
            Differential::Du => self.d_u(x),
        }
    }
    fn bracket(&self, a: &Expr, b: &Expr) -> Expr {
        self.b_bracket(a, b)
    }
    fn normalize(&self, x: &Expr) -> Expr {
        normalize_b(x)
    }
}

#[derive(Clone, Debug)]
pub struct Flow {
    /// `x •_τ y` with `τ` symbolic.
    pub family: Expr,
    /// Number of nonzero terms summed.
    pub order: usize,
    /// False if the series was cut off before it terminated.
    pub terminated: bool,
}

impl Flow {
    pub fn at(&self, t: &Q) -> Result<Expr> {
        self.family.eval_tau(t)
    }
    pub fn endpoint(&self) -> Result<Expr> {
        self.at(&Q::one())
    }
    /// Mark a family obtained in closed form as exact.
    pub fn closed(self) -> Self {
        Flow { terminated: true, ..self }
    }
}

fn factorial(n: usize) -> Q {
    (1..=n as i64).fold(Q::one(), |a, k| a * q(k))
}

/// `x •_τ y = x + τ Σ_n (−τ ad y)^n (dy + [x, y]) / (n+1)!`.
pub fn gauge_flow_series(alg: &dyn Algebra, x: &Expr, y: &Expr, max_order: usize) -> Flow {
    let v0 = alg.normalize(&(alg.d(y) + alg.bracket(x, y)));
    let (family, order, terminated) = ad_series(alg, x, y, &v0, max_order);
    Flow { family, order, terminated }
}

/// `exp(τ ad y) f = Σ_n τ^n ad(y)^n f / n!`, the pullback of `f` along the
/// flow `d(Φ_τ^* f)/dτ = [y, Φ_τ^* f]`.
pub fn pullback_series(alg: &dyn Algebra, f: &Expr, y: &Expr, max_order: usize) -> Flow {
    let t = tau();
    let mut acc = f.clone();
    let mut cur = f.clone();
    let mut tp = Expr::one();
    for n in 1..=max_order + 1 {
        cur = alg.normalize(&alg.bracket(y, &cur));
        if cur.is_zero() {
            return Flow { family: alg.normalize(&acc), order: n, terminated: true };
        }
        tp = &tp * &t;
        acc = acc + (&tp * &cur).scale(&factorial(n).recip());
    }
    Flow { family: alg.normalize(&acc), order: max_order + 1, terminated: false }
}

/// `x + Σ_n τ^{n+1}(−1)^n ad(y)^n v / (n+1)!`.
fn ad_series(alg: &dyn Algebra, x: &Expr, y: &Expr, v: &Expr, max_order: usize) -> (Expr, usize, bool) {
    let t = tau();
    let mut acc = x.clone();
    let mut cur = v.clone();
    let mut tp = t.clone();
    for n in 0..=max_order {
        if cur.is_zero() {
            return (alg.normalize(&acc), n, true);
        }
        let c = if n % 2 == 0 { factorial(n + 1).recip() } else { -factorial(n + 1).recip() };
        acc = acc + (&tp * &cur).scale(&c);
        tp = &tp * &t;
        cur = alg.normalize(&alg.bracket(y, &cur));
    }
    (alg.normalize(&acc), max_order + 1, cur.is_zero())
}

/// Residuals of the flow equation for a proposed family `F(τ)`.
#[derive(Clone, Debug)]
pub struct EndpointCheck {
    pub ode_residual: Expr,
    pub initial_residual: Expr,
}

impl EndpointCheck {
    pub fn ok(&self) -> bool {
        self.ode_residual.is_zero_rational() && self.initial_residual.is_zero_rational()
    }
}

/// Orientation of a flow.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowMode {
    /// `F' = dy + [F, y]`.
    Gauge,
    /// `F' = [y, F]`, the pullback along the flow generated by `y`.
    Pullback,
}

pub fn verify_flow_endpoint(alg: &dyn Algebra, x: &Expr, family: &Expr, y: &Expr, mode: FlowMode) -> Result<EndpointCheck> {
    let lhs = family.d_tau();
    let rhs = match mode {
        FlowMode::Gauge => alg.d(y) + alg.bracket(family, y),
        FlowMode::Pullback => alg.bracket(y, family),
    };
    let ode_residual = alg.normalize(&(lhs - rhs));
    let initial_residual = alg.normalize(&(family.eval_tau(&Q::zero())? - x));
    Ok(EndpointCheck { ode_residual, initial_residual })
}

/// Images of the order-zero generators under `exp(σ τ H_y)`, for a
/// generator `y` without jets. Each image is found either as a
/// terminating series or as `pow(B, κτ)·ξ` when `H_y ξ = κ log(B) ξ`.
#[derive(Clone, Debug)]
pub struct SubstitutionTable {
    pub images: BTreeMap<Symbol, Expr>,
}

impl SubstitutionTable {
    pub fn for_generator(t: &Theory, y: &Expr, sigma: i64, max_order: usize) -> Result<Self> {
        if y.max_jet_order() > 0 {
            return Err(Error::Unsupported("substitution tables need a generator without jets".into()));
        }
        let h = hamiltonian_vf(t, y);
        let logs: Vec<Expr> = y
            .terms()
            .iter()
            .flat_map(|(m, _)| m.logs().iter().map(|(b, _)| (**b).clone()))
            .collect();
        let act = |e: &Expr| h.apply(e).scale_int(sigma);
        let mut images = BTreeMap::new();
        for s in t.fields().iter().chain(t.antifields()) {
            let sx = Expr::symbol(s);
            let a1 = act(&sx);
            if a1.is_zero() {
                continue;
            }
            if let Some(img) = Self::polynomial(&sx, &act, max_order) {
                images.insert(s.clone(), img);
                continue;
            }
            let mut found = None;
            'outer: for b in &logs {
                if !act(b).is_zero() {
                    continue;
                }
                let lg = Expr::log(b)?;
                for k in [1, -1, 2, -2] {
                    if (&a1 - &(&lg * &sx).scale_int(k)).is_zero_rational() {
                        found = Some(&Expr::pow(b, &Exponent::affine(q(k), Q::zero()))? * &sx);
                        break 'outer;
                    }
                }
            }
            match found {
                Some(img) => {
                    images.insert(s.clone(), img);
                }
                None => return Err(Error::CompletionRequired(format!("no closed form for the flow of {s}"))),
            }
        }
        Ok(SubstitutionTable { images })
    }

    fn polynomial(sx: &Expr, act: &dyn Fn(&Expr) -> Expr, max_order: usize) -> Option<Expr> {
        let t = tau();
        let mut acc = sx.clone();
        let mut cur = sx.clone();
        let mut tp = Expr::one();
        for n in 1..=max_order {
            cur = act(&cur);
            if cur.is_zero() {
                return Some(acc);
            }
            tp = &tp * &t;
            acc = acc + (&tp * &cur).scale(&factorial(n).recip());
        }
        None
    }

    /// Apply to an expression, prolonging the images to jets.
    pub fn apply(&self, e: &Expr) -> Result<Expr> {
        let mut cache: HashMap<Symbol, Expr> = HashMap::new();
        e.substitute(&mut |s| {
            if !s.is_jet() {
                return None;
            }
            let img = self.images.get(&s.base())?;
            Some(cache.entry(s.clone()).or_insert_with(|| total_derivative_n(img, s.jet_order())).clone())
        })
    }
}

/// Gauge flow `x •_τ y` for a jet-free `y`: `exp(−τ ad y)x` through a
/// substitution table, plus the series in `ad(y)^n dy`. The result is
/// certified against the flow equation.
pub fn gauge_flow_table(c: &Curved, x: &Expr, y: &Expr, max_order: usize) -> Result<Flow> {
    let table = SubstitutionTable::for_generator(c.theory, y, -1, max_order)?;
    let hom = table.apply(x)?;
    let dy = c.d(y);
    let (part, order, terminated) = ad_series(c, &Expr::zero(), y, &dy, max_order);
    if !terminated {
        return Err(Error::CompletionRequired("ad(y)^n dy does not terminate".into()));
    }
    let family = normalize_b(&(hom + part));
    let chk = verify_flow_endpoint(c, x, &family, y, FlowMode::Gauge)?;
    if !chk.ok() {
        return Err(Error::Unsupported(format!("flow certificate failed: {}", chk.ode_residual)));
    }
    Ok(Flow { family, order, terminated })
}

/// Pullback `exp(τ ad y) f` through a substitution table.
pub fn pullback_flow(t: &Theory, f: &Expr, y: &Expr, max_order: usize) -> Result<Expr> {
    let table = SubstitutionTable::for_generator(t, y, 1, max_order)?;
    table.apply(f)
}

/// Check that a substitution between charts preserves the brackets of
/// all order-zero generators.
pub fn canonical_substitution_check(
    src: &Theory,
    dst: &Theory,
    images: &BTreeMap<Symbol, Expr>,
) -> Result<Vec<(Symbol, Symbol, Expr)>> {
    let gens: Vec<Symbol> = src.fields().iter().chain(src.antifields()).cloned().collect();
    let img = |s: &Symbol| images.get(s).cloned().unwrap_or_else(|| Expr::symbol(s));
    let mut bad = Vec::new();
    for a in &gens {
        for b in &gens {
            let want = soloviev(src, &Expr::symbol(a), &Expr::symbol(b));
            let got = soloviev(dst, &img(a), &img(b));
            if !(&got - &want).is_zero_rational() {
                bad.push((a.clone(), b.clone(), got - want));
            }
        }
    }
    Ok(bad)
}

/// Apply a generator renaming/substitution (prolonged to jets).
pub fn substitute_generators(e: &Expr, images: &BTreeMap<Symbol, Expr>) -> Result<Expr> {
    let mut cache: HashMap<Symbol, Expr> = HashMap::new();
    e.substitute(&mut |s| {
        if !s.is_jet() {
            return None;
        }
        let img = images.get(&s.base())?;
        Some(cache.entry(s.clone()).or_insert_with(|| total_derivative_n(img, s.jet_order())).clone())
    })
}

/// Coefficients of `x/(1 − e^{−x}) = Σ b_n x^n`.
pub fn bch_coefficients(n: usize) -> Vec<Q> {
    // 1/(1 − e^{−x}) · x: invert the series (1 − e^{−x})/x = Σ (−1)^k x^k/(k+1)!.
    let a: Vec<Q> = (0..=n).map(|k| if k % 2 == 0 { factorial(k + 1).recip() } else { -factorial(k + 1).recip() }).collect();
    let mut b = vec![Q::zero(); n + 1];
    b[0] = Q::one();
    for m in 1..=n {
        let mut s = Q::zero();
        for k in 1..=m {
            s += &a[k] * &b[m - k];
        }
        b[m] = -s;
    }
    b
}

#[derive(Clone, Debug)]
pub struct Bch {
    /// Σ_{n ≤ order} b_n ad(y)^n z plus y.
    pub series: Expr,
    /// `y + log(B)/(B − 1) z` when `ad(y) z = −log(B) z`.
    pub closed_form: Option<Expr>,
    /// Whether `[z, ad(y)^n z] = 0` held for all n checked.
    pub hypothesis: bool,
}

/// `y ∗ z` under the hypothesis `[z, ad(y)^n z] = 0`, as a series through
/// `order` nested brackets and, if `ad(y)` acts on `z` by `−log B`, in
/// closed form.
pub fn bch(alg: &dyn Algebra, y: &Expr, z: &Expr, order: usize) -> Result<Bch> {
    let b = bch_coefficients(order);
    let mut acc = y.clone();
    let mut cur = z.clone();
    let mut nested = Vec::new();
    let mut hyp = true;
    for (n, bn) in b.iter().enumerate() {
        if !alg.normalize(&alg.bracket(z, &cur)).is_zero() {
            hyp = false;
        }
        acc = acc + cur.scale(bn);
        nested.push(cur.clone());
        if n < order {
            cur = alg.normalize(&alg.bracket(y, &cur));
        }
    }
    if !hyp {
        // Generic fallback through degree three in (y, z).
        let yz = alg.bracket(y, z);
        let yyz = alg.bracket(y, &yz);
        let zyz = alg.bracket(z, &yz);
        let s = y + z;
        let s = s + yz.scale(&qr(1, 2)) + yyz.scale(&qr(1, 12)) - zyz.scale(&qr(1, 12));
        return Ok(Bch { series: alg.normalize(&s), closed_form: None, hypothesis: false });
    }
    let mut closed = None;
    let ad1 = nested.get(1).cloned().unwrap_or_else(|| alg.normalize(&alg.bracket(y, z)));
    let logs: Vec<Expr> = y.terms().iter().flat_map(|(m, _)| m.logs().iter().map(|(b, _)| (**b).clone())).collect();
    for base in logs {
        let lg = Expr::log(&base)?;
        if (&ad1 + &(&lg * z)).is_zero_rational() {
            let coef = &lg * &Expr::inv(&(&base - &Expr::one()))?;
            closed = Some(alg.normalize(&(y + &(&coef * z))));
            break;
        }
    }
    Ok(Bch { series: alg.normalize(&acc), closed_form: closed, hypothesis: true })
}

/// Expand `log(B)/(B − 1)` in powers of `L = log B` through `order`
/// and compare with the nested-bracket series.
pub fn bch_agreement(alg: &dyn Algebra, y: &Expr, z: &Expr, base: &Expr, order: usize) -> Result<bool> {
    let r = bch(alg, y, z, order)?;
    let lg = Expr::log(base)?;
    let b = bch_coefficients(order);
    let mut want = y.clone();
    let mut lp = Expr::one();
    for bn in b.iter() {
        want = want + (&lp * z).scale(bn);
        lp = -(&lp * &lg);
    }
    Ok(r.hypothesis && (&alg.normalize(&want) - &r.series).is_zero_rational())
}

/// Extract `dt`-coefficient `X₁` of `X₀ + dt·X₁` (one-dimensional source).
pub fn dt_coefficient(e: &Expr, dt: &Symbol) -> Expr {
    e.coefficients_of(dt).remove(&1).unwrap_or_else(Expr::zero)
}

/// `d = dt ∂` acting on composite fields.
pub fn composite_d(e: &Expr, dt: &Symbol) -> Expr {
    &Expr::symbol(dt) * &total_derivative(e)
}


#[cfg(test)]
mod tests {
    use super::*;

    fn bc() -> Theory {
        let mut t = Theory::new("bc");
        t.add_field("b", -1, 1).unwrap();
        t.add_field("c", 1, 1).unwrap();
        t
    }

    #[test]
    fn split_moves_eps_right() {
        let t = bc();
        let e = &(&t.x("c") * &Expr::symbol(&eps())) * &u();
        let (f, g) = split(&e);
        assert!(f.is_zero());
        assert_eq!(join(&f, &g), e);
    }

    #[test]
    fn bc_system_is_mc() {
        let t = bc();
        let c = Curved::new(&t);
        let b1 = Expr::symbol(&t.field("b").unwrap().with_jet(1));
        let xu = &t.x("c") * &b1
            + &u() * &(&t.xp("b") * &t.xp("c") + &(&t.xp("c") * &t.x("c")) * &Expr::symbol(&eps()));
        assert!(c.mc_residual(&xu).is_zero(), "{}", c.mc_residual(&xu));
    }

    #[test]
    fn bch_coefficients_match_bernoulli() {
        let b = bch_coefficients(6);
        assert_eq!(b, vec![q(1), qr(1, 2), qr(1, 12), q(0), qr(-1, 720), q(0), qr(1, 30240)]);
    }
}
