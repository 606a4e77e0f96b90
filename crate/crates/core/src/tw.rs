//! Thom–Whitney totalization of a cover's nerve.
//!
//! A TW cochain assigns to each nondegenerate simplex `σ = (α_0 < … < α_k)`
//! of the nerve an expression in `B[[u]]` with polynomial differential
//! forms on the standard simplex. Forms use the generators `t_1..t_k` and
//! `dt_1..dt_k`; `t_0 = 1 − Σ t_i` and `dt_0 = −Σ dt_i` are eliminated.
//! The vertex `α_i` of σ carries barycentric coordinate `t_i`.

use std::collections::BTreeMap;

use crate::aksz::{build_covariant_theory, Target};
use crate::curved::{gauge_flow_series, join, normalize_b, split, Algebra, Curved};
use crate::error::{Error, Result};
use crate::expr::{q, qr, Expr, Monomial, Q};
use crate::par;
use crate::report::{Check, Report};
use crate::symbol::{Symbol, SymbolKind};
use crate::theory::Theory;

pub type Simplex = Vec<usize>;

fn is_form_symbol(s: &Symbol) -> bool {
    matches!(s.kind(), SymbolKind::SimplexCoordinate | SymbolKind::SimplexOneForm)
}

/// Barycentric coordinate `t_i` on the `k`-simplex.
pub fn t(k: usize, i: usize) -> Expr {
    if i == 0 {
        (1..=k).fold(Expr::one(), |acc, j| acc - Expr::symbol(&Symbol::simplex_t(j)))
    } else {
        Expr::symbol(&Symbol::simplex_t(i))
    }
}

/// `dt_i` on the `k`-simplex.
pub fn dt(k: usize, i: usize) -> Expr {
    if i == 0 {
        (1..=k).fold(Expr::zero(), |acc, j| acc - Expr::symbol(&Symbol::simplex_dt(j)))
    } else {
        Expr::symbol(&Symbol::simplex_dt(i))
    }
}

/// de Rham differential on the simplex, `Σ dt_i ∂/∂t_i`.
pub fn form_d(e: &Expr) -> Expr {
    let mut acc = Expr::zero();
    for s in e.symbols() {
        if s.kind() == SymbolKind::SimplexCoordinate {
            let i: usize = s.name()[2..].parse().expect("t_i");
            acc = acc + &Expr::symbol(&Symbol::simplex_dt(i)) * &e.partial(&s);
        }
    }
    acc
}

/// Split into `Σ α · v` with `α` a monomial in `t`, `dt` (standing on the
/// left) and `v` free of them. Returns `(α, form degree, v)` grouped by `α`.
pub fn decompose(e: &Expr) -> Vec<(Expr, usize, Expr)> {
    let mut groups: BTreeMap<Monomial, (usize, Vec<(Monomial, Q)>)> = BTreeMap::new();
    for (m, c) in e.terms() {
        let mut alpha = Monomial::one();
        let mut rest = m.clone();
        alpha.syms = m.syms.iter().filter(|(s, _)| is_form_symbol(s)).cloned().collect();
        rest.syms.retain(|(s, _)| !is_form_symbol(s));
        let deg = alpha
            .syms
            .iter()
            .filter(|(s, _)| s.kind() == SymbolKind::SimplexOneForm)
            .map(|(_, k)| *k as usize)
            .sum();
        let a = Expr::from_mono(alpha.clone(), q(1));
        let r = Expr::from_mono(rest.clone(), c.clone());
        // `α · rest` reproduces the term up to a Koszul sign.
        let prod = &a * &r;
        let sign = if (&prod - &Expr::from_mono(m.clone(), c.clone())).is_zero() { q(1) } else { q(-1) };
        groups.entry(alpha).or_insert_with(|| (deg, Vec::new())).1.push((rest, c * &sign));
    }
    groups
        .into_iter()
        .map(|(a, (deg, v))| (Expr::from_mono(a, q(1)), deg, Expr::from_terms(v)))
        .collect()
}

fn sign(odd: bool) -> i64 {
    if odd {
        -1
    } else {
        1
    }
}

/// The differential graded Lie algebra `Ω_k ⊗ B[[u]]` on one simplex, with
/// `d_TW(α v) = dα v + (−1)^{|α|} α d_u v` and
/// `[α₁v₁, α₂v₂] = (−1)^{|α₂|(|v₁|+1)} α₁α₂ [v₁, v₂]`.
pub struct TwAlgebra<'a> {
    pub curved: Curved<'a>,
}

impl<'a> TwAlgebra<'a> {
    pub fn new(theory: &'a Theory) -> Self {
        TwAlgebra { curved: Curved::new(theory) }
    }

    pub fn d_tw(&self, x: &Expr) -> Expr {
        let mut acc = form_d(x);
        for (a, j, v) in decompose(x) {
            acc = acc + (&a * &self.curved.d(&v)).scale_int(sign(j % 2 == 1));
        }
        normalize_b(&acc)
    }

    pub fn tw_bracket(&self, x: &Expr, y: &Expr) -> Expr {
        let dx = decompose(x);
        let dy = decompose(y);
        let mut acc = Expr::zero();
        for (a1, _, v1) in &dx {
            let (ev, od) = v1.split_parity();
            for (a2, j2, v2) in &dy {
                let a = a1 * a2;
                if a.is_zero() {
                    continue;
                }
                for (odd, v) in [(false, &ev), (true, &od)] {
                    if v.is_zero() {
                        continue;
                    }
                    let s = sign(j2 % 2 == 1 && !odd);
                    acc = acc + (&a * &self.curved.b_bracket(v, v2)).scale_int(s);
                }
            }
        }
        normalize_b(&acc)
    }

    /// `uD + d_TW S + ½[S, S]`.
    pub fn mc_residual(&self, s: &Expr) -> Expr {
        let half = self.tw_bracket(s, s).scale(&qr(1, 2));
        normalize_b(&(self.curved.curvature() + self.d_tw(s) + half))
    }
}

impl Algebra for TwAlgebra<'_> {
    fn d(&self, x: &Expr) -> Expr {
        self.d_tw(x)
    }
    fn bracket(&self, a: &Expr, b: &Expr) -> Expr {
        self.tw_bracket(a, b)
    }
    fn normalize(&self, x: &Expr) -> Expr {
        normalize_b(x)
    }
}

/// Nerve of a cover by named charts, up to a dimension bound.
#[derive(Clone, Debug)]
pub struct Cover {
    pub charts: Vec<String>,
    /// Nondegenerate simplices as increasing chart-index tuples, by dimension.
    pub simplices: Vec<Simplex>,
}

/// Increasing subsequences of `0..n` of length `len`.
fn subsets(n: usize, len: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, len: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, len, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, len, &mut Vec::new(), &mut out);
    out
}

impl Cover {
    /// Every finite intersection nonempty, simplices up to dimension `max_dim`.
    pub fn complete(charts: &[&str], max_dim: usize) -> Self {
        let n = charts.len();
        let simplices = (1..=(max_dim + 1).min(n)).flat_map(|len| subsets(n, len)).collect();
        Cover { charts: charts.iter().map(|s| s.to_string()).collect(), simplices }
    }

    /// Cover with explicitly listed nonempty intersections (closed under faces).
    pub fn with_simplices(charts: &[&str], simplices: Vec<Simplex>) -> Result<Self> {
        let c = Cover { charts: charts.iter().map(|s| s.to_string()).collect(), simplices };
        for s in &c.simplices {
            if s.windows(2).any(|w| w[0] >= w[1]) || s.iter().any(|&i| i >= c.charts.len()) {
                return Err(Error::Precondition(format!("bad simplex {s:?}")));
            }
            if s.len() > 1 {
                for i in 0..s.len() {
                    if !c.contains(&face(s, i)) {
                        return Err(Error::Precondition(format!("face {i} of {s:?} is missing")));
                    }
                }
            }
        }
        Ok(c)
    }

    pub fn contains(&self, s: &[usize]) -> bool {
        self.simplices.iter().any(|x| x == s)
    }

    pub fn of_dim(&self, k: usize) -> impl Iterator<Item = &Simplex> {
        self.simplices.iter().filter(move |s| s.len() == k + 1)
    }

    pub fn max_dim(&self) -> usize {
        self.simplices.iter().map(|s| s.len() - 1).max().unwrap_or(0)
    }
}

/// σ with its `i`-th vertex removed.
pub fn face(s: &[usize], i: usize) -> Simplex {
    s.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, &v)| v).collect()
}

/// An alternating Čech cochain, stored on increasing tuples.
#[derive(Clone, Debug)]
pub struct CechCochain {
    pub degree: usize,
    pub values: BTreeMap<Simplex, Expr>,
}

impl CechCochain {
    pub fn new(degree: usize) -> Self {
        CechCochain { degree, values: BTreeMap::new() }
    }

    pub fn set(&mut self, s: &[usize], v: Expr) {
        self.values.insert(s.to_vec(), v);
    }

    /// Value on an arbitrary tuple, using alternation.
    pub fn get(&self, s: &[usize]) -> Expr {
        let mut v = s.to_vec();
        let mut odd = false;
        for i in 0..v.len() {
            for j in 0..v.len() - 1 - i {
                if v[j] > v[j + 1] {
                    v.swap(j, j + 1);
                    odd = !odd;
                }
            }
        }
        if v.windows(2).any(|w| w[0] == w[1]) {
            return Expr::zero();
        }
        self.values.get(&v).map(|e| e.scale_int(sign(odd))).unwrap_or_else(Expr::zero)
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> Self {
        CechCochain { degree: self.degree, values: self.values.iter().map(|(k, v)| (k.clone(), f(v))).collect() }
    }
}

/// `(δc)_{α_0..α_{k+1}} = Σ_j (−1)^j c_{α_0..α̂_j..α_{k+1}}`.
pub fn cech_delta(cover: &Cover, c: &CechCochain) -> CechCochain {
    let mut out = CechCochain::new(c.degree + 1);
    for s in cover.of_dim(c.degree + 1) {
        let mut v = Expr::zero();
        for j in 0..s.len() {
            v = v + c.get(&face(s, j)).scale_int(sign(j % 2 == 1));
        }
        out.set(s, v);
    }
    out
}

/// A TW cochain: one form-valued expression per simplex of the nerve.
#[derive(Clone, Debug, Default)]
pub struct TwCochain {
    pub values: BTreeMap<Simplex, Expr>,
}

impl TwCochain {
    pub fn get(&self, s: &[usize]) -> Expr {
        self.values.get(s).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn add(&self, o: &TwCochain) -> TwCochain {
        let mut values = self.values.clone();
        for (k, v) in &o.values {
            let e = values.remove(k).unwrap_or_else(Expr::zero);
            values.insert(k.clone(), &e + v);
        }
        TwCochain { values }
    }

    pub fn sub(&self, o: &TwCochain) -> TwCochain {
        self.add(&TwCochain { values: o.values.iter().map(|(k, v)| (k.clone(), -v.clone())).collect() })
    }
}

fn factorial(n: usize) -> Q {
    (1..=n as i64).fold(q(1), |a, b| a * q(b))
}

/// Whitney map: on σ of dimension m,
/// `w(c)|σ = k! Σ_{A ⊂ σ, |A| = k+1} Σ_i (−1)^i t_{a_i} dt_{a_0}..^..dt_{a_k} c_A`.
pub fn whitney(cover: &Cover, c: &CechCochain) -> TwCochain {
    let k = c.degree;
    let fk = factorial(k);
    let vals = par::map(&cover.simplices, |s| {
        let m = s.len() - 1;
        let mut acc = Expr::zero();
        if m >= k {
            for a in subsets(m + 1, k + 1) {
                let val = c.get(&a.iter().map(|&i| s[i]).collect::<Vec<_>>());
                if val.is_zero() {
                    continue;
                }
                let mut form = Expr::zero();
                for i in 0..=k {
                    let mut w = t(m, a[i]).scale_int(sign(i % 2 == 1));
                    for (l, &al) in a.iter().enumerate() {
                        if l != i {
                            w = &w * &dt(m, al);
                        }
                    }
                    form = form + w;
                }
                acc = acc + &form * &val;
            }
        }
        (s.clone(), acc.scale(&fk))
    });
    TwCochain { values: vals.into_iter().collect() }
}

/// `d_TW w(c) − w(δc)` on every simplex, where `d_TW` is the form part only
/// (the cochain is taken with values that have zero internal differential).
pub fn whitney_commutes(cover: &Cover, c: &CechCochain) -> Vec<(Simplex, Expr)> {
    let lhs = whitney(cover, c);
    let rhs = whitney(cover, &cech_delta(cover, c));
    cover.simplices.iter().map(|s| (s.clone(), form_d(&lhs.get(s)) - rhs.get(s))).collect()
}

/// Pull a form on the `k`-simplex back along a vertex map `g : [m] → [k]`.
pub fn pullback_form(e: &Expr, k: usize, m: usize, g: &[usize]) -> Result<Expr> {
    let mut ti = Vec::with_capacity(k + 1);
    let mut dti = Vec::with_capacity(k + 1);
    for i in 0..=k {
        let pre: Vec<usize> = (0..=m).filter(|&j| g[j] == i).collect();
        ti.push(pre.iter().fold(Expr::zero(), |a, &j| a + t(m, j)));
        dti.push(pre.iter().fold(Expr::zero(), |a, &j| a + dt(m, j)));
    }
    // The target's own t_0 is implicit; only t_i, dt_i with i ≥ 1 appear.
    e.substitute(&mut |s| match s.kind() {
        SymbolKind::SimplexCoordinate | SymbolKind::SimplexOneForm => {
            let i: usize = s.name().rsplit('_').next()?.parse().ok()?;
            if i == 0 || i > k {
                return None;
            }
            Some(if s.kind() == SymbolKind::SimplexCoordinate { ti[i].clone() } else { dti[i].clone() })
        }
        _ => None,
    })
}

/// Global Maurer–Cartan residual of `ss` on each simplex.
pub fn global_mc_check(theory: &Theory, cover: &Cover, ss: &TwCochain) -> Vec<(Simplex, Expr)> {
    let alg = TwAlgebra::new(theory);
    par::map(&cover.simplices, |s| (s.clone(), alg.mc_residual(&ss.get(s))))
}

/// Compatibility with face maps: `∂_i^* ss|σ = ss|∂_iσ`.
pub fn equalizer_check(cover: &Cover, ss: &TwCochain) -> Result<Vec<(Simplex, usize, Expr)>> {
    let mut out = Vec::new();
    for s in &cover.simplices {
        let m = s.len() - 1;
        if m == 0 {
            continue;
        }
        for i in 0..=m {
            let g: Vec<usize> = (0..m).map(|j| if j < i { j } else { j + 1 }).collect();
            let r = pullback_form(&ss.get(s), m, m - 1, &g)? - ss.get(&face(s, i));
            out.push((s.clone(), i, r));
        }
    }
    Ok(out)
}

/// Pull a TW cochain on `coarse` back to `fine` along a monotone chart map
/// `f` (every chart of `fine` sits inside chart `f[i]` of `coarse`).
pub fn refine(coarse: &Cover, fine: &Cover, f: &[usize], ss: &TwCochain) -> Result<TwCochain> {
    if f.windows(2).any(|w| w[0] > w[1]) || f.len() != fine.charts.len() {
        return Err(Error::Precondition("refinement map must be monotone and total".into()));
    }
    let mut values = BTreeMap::new();
    for s in &fine.simplices {
        let mut img: Vec<usize> = s.iter().map(|&v| f[v]).collect();
        img.dedup();
        if !coarse.contains(&img) {
            return Err(Error::Precondition(format!("image {img:?} of {s:?} is not in the coarse nerve")));
        }
        let g: Vec<usize> = s.iter().map(|&v| img.iter().position(|&x| x == f[v]).unwrap()).collect();
        values.insert(s.clone(), pullback_form(&ss.get(&img), img.len() - 1, s.len() - 1, &g)?);
    }
    Ok(TwCochain { values })
}

/// Local data of a global covariant theory: one target per chart (same
/// coordinates, one-forms differing by exact forms) and the primitives
/// `μ_{αβ}` with `dμ = ν_β − ν_α`.
#[derive(Clone, Debug)]
pub struct GlobalData {
    pub cover: Cover,
    pub targets: Vec<Target>,
    pub mu: CechCochain,
}

impl GlobalData {
    pub fn theory(&self) -> &Theory {
        &self.targets[0].theory
    }

    /// Check `dμ_{αβ} = ν_β − ν_α` componentwise.
    pub fn check_primitives(&self) -> Vec<(Simplex, Symbol, Expr)> {
        let mut out = Vec::new();
        for s in self.cover.of_dim(1) {
            let (a, b) = (&self.targets[s[0]], &self.targets[s[1]]);
            let mu = self.mu.get(s);
            for x in a.coords() {
                let r = mu.partial(x) - (b.nu(x) - a.nu(x));
                if !r.is_zero_rational() {
                    out.push((s.clone(), x.clone(), r));
                }
            }
        }
        out
    }

    /// `SS_u = w(S_{α,u}) + w(μ ε)`.
    pub fn global_theory(&self) -> Result<TwCochain> {
        let mut s = CechCochain::new(0);
        for (i, t) in self.targets.iter().enumerate() {
            s.set(&[i], build_covariant_theory(t)?.s_u());
        }
        let mu_eps = self.mu.map(|m| join(&Expr::zero(), m));
        let ss = whitney(&self.cover, &s).add(&whitney(&self.cover, &mu_eps));
        Ok(TwCochain { values: ss.values.into_iter().map(|(k, v)| (k, normalize_b(&v))).collect() })
    }
}

/// Cylinder `T*S¹` with coordinates `(x, p)`, covered by charts with
/// `ν_α = (p + A_α) dx`; the flux is carried by the constants `A_α`.
pub fn cylinder(a: &[Q]) -> Result<GlobalData> {
    let mut th = Theory::new("cylinder");
    let x = th.add_field("x", 0, 0)?;
    let p = th.add_field("p", 0, 0)?;
    let names: Vec<String> = (1..=a.len()).map(|i| format!("U{i}")).collect();
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let cover = Cover::complete(&refs, 2);
    let targets = a
        .iter()
        .map(|ai| {
            let mut t = Target::new(th.clone());
            t.set_nu(&x, Expr::symbol(&p) + Expr::constant(ai.clone()));
            t
        })
        .collect();
    let mut mu = CechCochain::new(1);
    for s in cover.of_dim(1) {
        mu.set(s, Expr::symbol(&x).scale(&(&a[s[1]] - &a[s[0]])));
    }
    Ok(GlobalData { cover, targets, mu })
}

fn residual_checks(report: &mut Report, name: &str, res: &[(Simplex, Expr)]) {
    let bad: Vec<String> =
        res.iter().filter(|(_, r)| !r.is_zero_rational()).map(|(s, r)| format!("{s:?}: {r}")).collect();
    report.push(Check::flag(
        name,
        bad.is_empty(),
        if bad.is_empty() { format!("zero on {} simplices", res.len()) } else { bad.join("; ") },
    ));
}

/// Global MC and face compatibility for `data`.
pub fn global_report(data: &GlobalData) -> Result<Report> {
    let mut r = Report::new("thom-whitney");
    let prim = data.check_primitives();
    r.push(Check::flag(
        "primitives",
        prim.is_empty(),
        if prim.is_empty() {
            format!("dμ = δν on {} edges", data.cover.of_dim(1).count())
        } else {
            prim.iter().map(|(s, x, e)| format!("{s:?} d/d{x}: {e}")).collect::<Vec<_>>().join("; ")
        },
    ));
    let ss = data.global_theory()?;
    let eq = equalizer_check(&data.cover, &ss)?;
    let eq: Vec<(Simplex, Expr)> = eq.into_iter().map(|(s, _, e)| (s, e)).collect();
    residual_checks(&mut r, "faces", &eq);
    residual_checks(&mut r, "global_mc", &global_mc_check(data.theory(), &data.cover, &ss));
    Ok(r)
}

/// Replace `μ_{αβ}` on the first edge by `μ + x²`; `dμ = ν_β − ν_α` then
/// fails and the global MC equation must detect it.
pub fn break_mu(data: &GlobalData) -> GlobalData {
    let mut d = data.clone();
    let x = Expr::symbol(&d.theory().fields()[0]);
    if let Some((k, v)) = d.mu.values.iter().next().map(|(k, v)| (k.clone(), v.clone())) {
        d.mu.set(&k, v + &x * &x);
    }
    d
}

/// Gauge equivalence `SS_0 • w(ν̃ ε) = SS_1` where the data of `to` are
/// those of `from` shifted by the 0-cochain `shift`:
/// `ν_1 − ν_0 = dν̃` and `μ_1 − μ_0 = δν̃`.
pub fn gauge_equivalence_check(from: &GlobalData, to: &GlobalData, shift: &CechCochain) -> Result<Report> {
    let mut r = Report::new("gauge-equivalence");
    let th = from.theory();
    let cover = &from.cover;
    let mut bad = Vec::new();
    for (i, (a, b)) in from.targets.iter().zip(&to.targets).enumerate() {
        for x in a.coords() {
            let e = b.nu(x) - a.nu(x) - shift.get(&[i]).partial(x);
            if !e.is_zero_rational() {
                bad.push(format!("chart {i} d/d{x}: {e}"));
            }
        }
    }
    r.push(Check::flag("nu_shift", bad.is_empty(), bad.join("; ")));
    let dmu = cech_delta(cover, shift);
    let mu_res: Vec<(Simplex, Expr)> = cover
        .of_dim(1)
        .map(|s| (s.clone(), normalize_b(&join(&Expr::zero(), &(to.mu.get(s) - from.mu.get(s) - dmu.get(s))))))
        .collect();
    residual_checks(&mut r, "mu_shift", &mu_res);

    let ss0 = from.global_theory()?;
    let ss1 = to.global_theory()?;
    let y = whitney(cover, &shift.map(|v| join(&Expr::zero(), v)));
    let alg = TwAlgebra::new(th);
    let rows = par::map(&cover.simplices, |s| {
        let (x0, x1, ys) = (ss0.get(s), ss1.get(s), y.get(s));
        let diff = normalize_b(&(&x1 - &x0));
        let lin = normalize_b(&(alg.d_tw(&ys) + alg.tw_bracket(&x0, &ys) - &diff));
        let quad = alg.tw_bracket(&diff, &ys);
        let flow = gauge_flow_series(&alg, &x0, &ys, 6);
        let end = flow.endpoint().map(|e| normalize_b(&(e - &x1)));
        (s.clone(), lin, quad, end, flow.terminated)
    });
    let mut lin = Vec::new();
    let mut quad = Vec::new();
    let mut end = Vec::new();
    let mut terminated = true;
    for (s, l, qd, e, term) in rows {
        lin.push((s.clone(), l));
        quad.push((s.clone(), qd));
        end.push((s, e?));
        terminated &= term;
    }
    residual_checks(&mut r, "linear_term", &lin);
    residual_checks(&mut r, "quadratic_term", &quad);
    r.push(Check::flag("flow_terminates", terminated, ""));
    residual_checks(&mut r, "flow_endpoint", &end);
    Ok(r)
}

/// The refined data of `data` along a monotone chart map into a finer cover.
pub fn refined_data(data: &GlobalData, fine: &Cover, f: &[usize]) -> GlobalData {
    let targets = f.iter().map(|&i| data.targets[i].clone()).collect();
    let mut mu = CechCochain::new(1);
    for s in fine.of_dim(1) {
        mu.set(s, data.mu.get(&[f[s[0]], f[s[1]]]));
    }
    GlobalData { cover: fine.clone(), targets, mu }
}

/// Refinement keeps the global MC equation and commutes with the Whitney map.
pub fn refinement_report(data: &GlobalData, fine: &Cover, f: &[usize]) -> Result<Report> {
    let mut r = Report::new("refinement");
    let ss = data.global_theory()?;
    let pulled = refine(&data.cover, fine, f, &ss)?;
    let direct = refined_data(data, fine, f).global_theory()?;
    let diff: Vec<(Simplex, Expr)> =
        fine.simplices.iter().map(|s| (s.clone(), normalize_b(&(pulled.get(s) - direct.get(s))))).collect();
    residual_checks(&mut r, "pullback_is_whitney", &diff);
    residual_checks(&mut r, "refined_global_mc", &global_mc_check(data.theory(), fine, &pulled));
    let eq = equalizer_check(fine, &pulled)?;
    let eq: Vec<(Simplex, Expr)> = eq.into_iter().map(|(s, _, e)| (s, e)).collect();
    residual_checks(&mut r, "refined_faces", &eq);
    Ok(r)
}

/// Project the ε-part of a TW cochain (for displays).
pub fn eps_part(x: &Expr) -> Expr {
    split(x).1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms_on_the_interval() {
        let w = t(1, 0) * dt(1, 1) - t(1, 1) * dt(1, 0);
        assert_eq!(w, dt(1, 1));
        assert!(form_d(&form_d(&(t(2, 1) * t(2, 2) * t(2, 2)))).is_zero());
    }

    #[test]
    fn decompose_recombines() {
        let th = crate::worldline::particle_theory(&[q(1)]).unwrap();
        let x = th.x("c") * dt(2, 1) * th.xp("x_1") * t(2, 2) * dt(2, 2);
        let back = decompose(&x).into_iter().fold(Expr::zero(), |acc, (a, _, v)| acc + &a * &v);
        assert_eq!(back, x);
    }

    #[test]
    fn whitney_on_a_triangle() {
        let cover = Cover::complete(&["A", "B", "C"], 2);
        let mut c = CechCochain::new(0);
        for i in 0..3 {
            c.set(&[i], Expr::constant(q(i as i64 + 1)));
        }
        for (s, r) in whitney_commutes(&cover, &c) {
            assert!(r.is_zero(), "{s:?}: {r}");
        }
    }

    #[test]
    fn cylinder_with_flux() {
        let data = cylinder(&[q(0), qr(3, 2)]).unwrap();
        let r = global_report(&data).unwrap();
        assert!(r.ok(), "{r}");
        let broken = global_report(&break_mu(&data)).unwrap();
        assert!(!broken.get("global_mc").unwrap().passed);
    }

    #[test]
    fn opposite_primitive_sign_fails() {
        let mut data = cylinder(&[q(0), q(2)]).unwrap();
        data.mu = data.mu.map(|m| -m.clone());
        let r = global_report(&data).unwrap();
        assert!(!r.get("global_mc").unwrap().passed);
    }

    #[test]
    fn three_charts_with_triple_overlap() {
        let data = cylinder(&[q(0), q(1), qr(-5, 3)]).unwrap();
        let r = global_report(&data).unwrap();
        assert!(r.ok(), "{r}");
    }

    #[test]
    fn flux_shift_is_a_gauge_equivalence() {
        let from = cylinder(&[q(0), q(1)]).unwrap();
        let s = [q(2), qr(1, 2)];
        let to = cylinder(&[&q(0) + &s[0], &q(1) + &s[1]]).unwrap();
        let x = Expr::symbol(&from.theory().fields()[0]);
        let mut shift = CechCochain::new(0);
        for (i, si) in s.iter().enumerate() {
            shift.set(&[i], x.scale(si));
        }
        let r = gauge_equivalence_check(&from, &to, &shift).unwrap();
        assert!(r.ok(), "{r}");
    }

    #[test]
    fn refinement_keeps_mc() {
        let data = cylinder(&[q(0), q(3)]).unwrap();
        let fine = Cover::complete(&["V1", "V2", "V3"], 2);
        let r = refinement_report(&data, &fine, &[0, 0, 1]).unwrap();
        assert!(r.ok(), "{r}");
    }
}
