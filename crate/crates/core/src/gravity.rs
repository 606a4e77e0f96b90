//! Coupling a covariant field theory to world-line gravity and
//! supergravity by the gauge flows `log(b⁺)c⁺c` and `cS₁`.

use std::collections::BTreeMap;

use crate::aksz::{build_covariant_theory, project_f, twist, Target};
use crate::curved::{
    antifield_rank, bch, bch_agreement, canonical_substitution_check, gauge_flow_series, gauge_flow_table, join, normalize_b,
    substitute_generators, tau, u, u_coefficient, Algebra, Curved,
};
use crate::error::{Error, Result};
use crate::expr::{qr, Exponent, Expr, Q};
use crate::models::{bc_target, beta_gamma_target};
use crate::report::{Check, Report};
use crate::symbol::Symbol;
use crate::theory::Theory;
use crate::varcalc::{is_total_derivative, total_derivative};

fn sym(e: &Symbol) -> Expr {
    Expr::symbol(e)
}

fn d1(s: &Symbol) -> Expr {
    Expr::symbol(&s.with_jet(1))
}

/// Generators of the ghost system in a product chart.
pub struct Ghosts {
    pub b: Symbol,
    pub c: Symbol,
    pub bp: Symbol,
    pub cp: Symbol,
}

impl Ghosts {
    pub fn of(t: &Theory) -> Result<Self> {
        Ok(Ghosts { b: t.field("b")?, c: t.field("c")?, bp: t.antifield("b")?, cp: t.antifield("c")? })
    }

    /// `log(b⁺) c⁺ c`.
    pub fn log_generator(&self) -> Result<Expr> {
        Ok(&Expr::log(&sym(&self.bp))? * &(&sym(&self.cp) * &sym(&self.c)))
    }

    /// `c(b⁺∂b + c⁺∂c)`.
    pub fn c_d(&self) -> Expr {
        &sym(&self.c) * &(&sym(&self.bp) * &d1(&self.b) + &sym(&self.cp) * &d1(&self.c))
    }

    /// `(b⁺)^{τ−1} c (b⁺∂b + τ c⁺∂c) + u (b⁺)^{1−τ} c⁺ + (1−τ) u c⁺c ε`.
    pub fn x_flow_display(&self) -> Result<Expr> {
        self.x_flow(1)
    }

    /// Variant with `u (b⁺)^{τ−1} c⁺`; it misses the
    /// initial value `u b⁺c⁺` at `τ = 0`.
    pub fn x_flow_display_literal(&self) -> Result<Expr> {
        self.x_flow(-1)
    }

    fn x_flow(&self, sign: i64) -> Result<Expr> {
        let bp = sym(&self.bp);
        let pw = Expr::pow(&bp, &Exponent::affine(Q::from_integer(1.into()), Q::from_integer((-1).into())))?;
        let t = tau();
        let one = Expr::one();
        let inner = &bp * &d1(&self.b) + &(&t * &sym(&self.cp)) * &d1(&self.c);
        let a = &(&pw * &sym(&self.c)) * &inner;
        let pw_u = Expr::pow(&bp, &Exponent::affine(Q::from_integer((-sign).into()), Q::from_integer(sign.into())))?;
        let b = &(&u() * &pw_u) * &sym(&self.cp);
        let c = join(&Expr::zero(), &(&(&(&one - &t) * &u()) * &(&sym(&self.cp) * &sym(&self.c))));
        Ok(a + b + c)
    }
}

pub struct Coupled {
    pub report: Report,
    pub theory: Theory,
    pub result: Expr,
}

/// Couple `S_u` (from `m`) to the gravity multiplet. With a potential
/// `V`, first twist by `u⁻¹cV`.
pub fn couple_gravity(m: &Target, potential: Option<&Expr>) -> Result<Coupled> {
    let mut rep = Report::new(&format!("couple-gravity {}", m.theory.name));
    let bc = bc_target();
    let prod = m.product(&bc, &format!("{}+bc", m.theory.name))?;
    let th = prod.theory.clone();
    let alg = Curved::new(&th);
    let g = Ghosts::of(&th)?;
    let s = build_covariant_theory(m)?;
    let x = build_covariant_theory(&bc)?;
    let (c, cp, bp) = (sym(&g.c), sym(&g.cp), sym(&g.bp));

    let x_display = &c * &d1(&g.b) + &u() * &(&bp * &cp + join(&Expr::zero(), &(&cp * &c)));
    rep.push(Check::equal("x_u_display", &x.s_u(), &x_display));

    let mut start = s.s_u() + x.s_u();
    rep.push(Check::zero("mc_input", &alg.mc_residual(&start)));
    if let Some(v) = potential {
        let w = &c * v;
        start = twist(&alg, &start, &w)?;
        rep.push(Check::zero("mc_twisted", &alg.mc_residual(&start)));
        // (S_u + X_u)•u⁻¹W = S_u + X_u − b⁺V − [cS₁, V].
        let want = s.s_u() + x.s_u() - &bp * v - alg.bracket(&(&c * &s.s1), v);
        rep.push(Check::equal("twist_display", &start, &want));
    }

    let y1 = g.log_generator()?;
    let xf = gauge_flow_table(&alg, &x.s_u(), &y1, 8)?;
    rep.push(Check::equal("x_flow_display", &xf.family, &g.x_flow_display()?));
    rep.push(Check::equal("x_flow_display_literal", &xf.family, &g.x_flow_display_literal()?).informational());
    rep.push(Check::equal("x_flow_endpoint", &xf.endpoint()?, &(g.c_d() + &u() * &cp)));

    let f1 = gauge_flow_table(&alg, &start, &y1, 8)?;
    let mid = f1.endpoint()?;
    let cs1 = &c * &s.s1;
    let base_mid = s.s_u() + g.c_d() + &u() * &cp;
    match potential {
        None => rep.push(Check::equal("log_flow_endpoint", &mid, &base_mid)),
        Some(v) => {
            let bv = &bp * v;
            let want = &base_mid - &bv - alg.bracket(&cs1, &bv);
            rep.push(Check::equal("log_flow_endpoint", &mid, &want));
        }
    }

    let d_m = m.theory.d_element();
    let lhs_c = normalize_b(&(alg.d_u(&cs1) + alg.bracket(&s.s_u(), &cs1)));
    let rhs_c = &c * &(&d_m + &alg.iota(&s.s_u()));
    rep.push(Check::equal("c_s1_differential", &lhs_c, &rhs_c));
    let cc = alg.bracket(&lhs_c, &cs1);
    let two_c_dc = (&c * &d1(&g.c)).scale_int(2);
    rep.push(Check::equal("c_s1_square", &cc, &(&two_c_dc * &s.s1)));
    rep.push(Check::equal("c_s1_square_literal", &cc, &two_c_dc).informational());

    if potential.is_none() {
        let f2 = gauge_flow_series(&alg, &base_mid, &cs1, 8);
        rep.push(Check::flag("cs1_series_terminates", f2.terminated, format!("{} terms", f2.order)));
        let t = tau();
        let one = Expr::one();
        let ci0 = &c * &alg.iota(&s.s0);
        let ci1 = &c * &alg.iota(&s.s1);
        let want = &s.s0
            + &(&c * &(&(&t * &d_m) + &(&bp * &d1(&g.b)) + (&cp * &d1(&g.c))))
            + (&t * &ci0)
            + (&u() * &cp)
            + &(&one - &t)
                * &(&(&u() * &s.s1) + &(&(&t * &u()) * &ci1) - (&(&t * &(&c * &d1(&g.c))) * &s.s1));
        rep.push(Check::equal("tau_display", &f2.family, &normalize_b(&want)));
    }

    let b = bch(&alg, &y1, &cs1, 6)?;
    rep.push(Check::flag("bch_hypothesis", b.hypothesis, "[z, ad(y)ⁿz] = 0 for n ≤ 6"));
    match &b.closed_form {
        Some(cf) => rep.push(Check::equal("bch_closed_form", cf, &bch_particle_closed_form(&g, &s.s1, &x.s1)?)),
        None => rep.push(Check::flag("bch_closed_form", false, "ad(y) does not act on cS₁ by −log(b⁺)")),
    }
    rep.push(Check::flag("bch_series_agrees", bch_agreement(&alg, &y1, &cs1, &bp, 6)?, "through order 6"));

    let f2 = gauge_flow_series(&alg, &mid, &cs1, 12);
    if !f2.terminated {
        return Err(Error::CompletionRequired("cS₁ flow did not terminate".into()));
    }
    let result = f2.endpoint()?;
    let mut want = &s.s0 + &(&c * &(&d_m + &g.c_d_inner())) + (&c * &alg.iota(&s.s0)) + (&u() * &cp);
    let label = match potential {
        None => "theorem",
        Some(v) => {
            want = want - &bp * v;
            "corollary"
        }
    };
    rep.push(Check::equal(label, &result, &normalize_b(&want)));
    rep.push(Check::zero("mc_result", &alg.mc_residual(&result)));
    Ok(Coupled { report: rep, theory: th, result })
}

impl Ghosts {
    /// `b⁺∂b + c⁺∂c`.
    pub fn c_d_inner(&self) -> Expr {
        &sym(&self.bp) * &d1(&self.b) + &sym(&self.cp) * &d1(&self.c)
    }
}

/// Closed form `log(b⁺)/(b⁺ − 1) (c(S₁ + X₁) − c⁺c)` of `log(b⁺)c⁺c ∗ cS₁`.
pub fn bch_particle_closed_form(g: &Ghosts, s1: &Expr, x1: &Expr) -> Result<Expr> {
    let bp = sym(&g.bp);
    let coef = &Expr::log(&bp)? * &Expr::inv(&(&bp - &Expr::one()))?;
    let inner = &sym(&g.c) * &(s1 + x1) - &sym(&g.cp) * &sym(&g.c);
    Ok(normalize_b(&(&coef * &inner)))
}

pub struct Spinning {
    pub report: Report,
    /// Chart with `(e, c, χ, γ)` after the substitution.
    pub theory: Theory,
    /// Projection to `F` of the final element, in the `(e, χ)` chart.
    pub action: Expr,
    /// The twisted theory before the gravity flows, in the `(e, χ)` chart.
    pub twisted: Expr,
}

/// Generators of the supergravity chart `(x, p, ψ, e, c, χ, γ)`.
fn supergravity_chart(m: &Theory) -> Result<Theory> {
    let mut t = m.clone();
    t.name = format!("{}+sugra", m.name);
    t.add_field("e", 0, 0)?;
    t.add_field("c", 1, 1)?;
    t.add_field("chi", 0, 1)?;
    t.add_field("gamma", 1, 0)?;
    Ok(t)
}

/// The renaming `b⁺ → e`, `b → −e⁺`, `β⁺ → χ`, `β → −χ⁺`.
pub fn sugra_renaming(src: &Theory, dst: &Theory) -> Result<BTreeMap<Symbol, Expr>> {
    let mut m = BTreeMap::new();
    m.insert(src.antifield("b")?, dst.x("e"));
    m.insert(src.field("b")?, -dst.xp("e"));
    m.insert(src.antifield("beta")?, dst.x("chi"));
    m.insert(src.field("beta")?, -dst.xp("chi"));
    Ok(m)
}

/// Twist `S_u + Ξ_u + X_u` by `u⁻¹W`, `W = ½c{Q,Q} + γQ + σ bγ²`, and
/// apply the flows `log(b⁺)c⁺c` and `c(S₁ + Ξ₁)`.
pub fn spinning_pipeline(m: &Target, q: &Expr, b_gamma_sign: i64) -> Result<Spinning> {
    let mut rep = Report::new(&format!("spinning {}", m.theory.name));
    let bg = beta_gamma_target();
    let bc = bc_target();
    let prod = m.product(&bg, "tmp")?.product(&bc, &format!("{}+bg+bc", m.theory.name))?;
    let th = prod.theory.clone();
    let alg = Curved::new(&th);
    let g = Ghosts::of(&th)?;
    let s = build_covariant_theory(m)?;
    let xi = build_covariant_theory(&bg)?;
    let x = build_covariant_theory(&bc)?;
    let full = build_covariant_theory(&prod)?;
    let (c, cp) = (sym(&g.c), sym(&g.cp));
    let beta = th.field("beta")?;
    let gamma = th.x("gamma");

    let qq = s.poisson.bracket(q, q);
    let g2 = &gamma * &gamma;
    let w = (&c * &qq).scale(&qr(1, 2)) + &gamma * q + (&sym(&g.b) * &g2).scale_int(b_gamma_sign);
    let ww = full.poisson.bracket(&w, &w);
    rep.push(Check::zero("w_cohomological", &ww));
    if !ww.is_zero_rational() {
        return Err(Error::TwistObstruction(format!("{{W, W}} = {ww}")));
    }
    let start = s.s_u() + xi.s_u() + x.s_u();
    rep.push(Check::zero("mc_input", &alg.mc_residual(&start)));
    let t1 = twist(&alg, &start, &w)?;
    rep.push(Check::zero("mc_twisted", &alg.mc_residual(&t1)));

    let y1 = g.log_generator()?;
    let t2 = gauge_flow_table(&alg, &t1, &y1, 8)?.endpoint()?;
    let cs1 = &c * &s.s1;
    let cxi1 = &c * &xi.s1;
    let f_a = gauge_flow_series(&alg, &t2, &(&cs1 + &cxi1), 12);
    let f_b = gauge_flow_series(&alg, &gauge_flow_series(&alg, &t2, &cxi1, 12).endpoint()?, &cs1, 12);
    rep.push(Check::flag("flows_terminate", f_a.terminated && f_b.terminated, format!("{} / {} terms", f_a.order, f_b.order)));
    let t3 = f_a.endpoint()?;
    rep.push(Check::equal("composed_flows_agree", &f_b.endpoint()?, &t3));
    rep.push(Check::zero("mc_result", &alg.mc_residual(&t3)));

    // Expected F-part before the substitution; the ε-terms are covered by `mc_result`.
    let d_m = m.theory.d_element();
    let xi0 = xi.s0.clone();
    let bp = sym(&g.bp);
    let betap = sym(&th.antifield("beta")?);
    let gp = th.xp("gamma");
    let inner = &d_m + &(&betap * &d1(&beta)) + (&gp * &d1(&th.field("gamma")?)) + g.c_d_inner() + alg.iota(&s.s0);
    let shown = &s.s0 + &(&c * &inner) + (&u() * &cp) - (&bp * &qq).scale(&qr(1, 2)) - &betap * q
        + &gamma * &alg.bracket(&s.s1, q)
        + &(&Expr::inv(&bp)? * &(&cp - &project_f(&s.s1) - &project_f(&xi.s1))) * &g2
        - (&(&sym(&g.b) * &betap) * &gamma).scale_int(2);
    let shown = project_f(&shown);
    let got_f = project_f(&t3);
    rep.push(Check::equal("pre_substitution_display", &got_f, &(&shown + &xi0)));
    rep.push(Check::equal("pre_substitution_display_literal", &got_f, &shown).informational());

    let dst = supergravity_chart(&m.theory)?;
    let ren = sugra_renaming(&th, &dst)?;
    let bad = canonical_substitution_check(&th, &dst, &ren)?;
    rep.push(Check::flag("renaming_canonical", bad.is_empty(), format!("{} bracket mismatches", bad.len())));
    let action = substitute_generators(&u_coefficient(&got_f, 0), &ren)?;
    let twisted = substitute_generators(&project_f(&u_coefficient(&t1, 0)), &ren)?;

    let e = dst.x("e");
    let ep = dst.xp("e");
    let chi = dst.x("chi");
    let gam = dst.x("gamma");
    let mut pi_dq = Expr::zero();
    let mut xpx = Expr::zero();
    for a in m.coords() {
        for b in m.coords() {
            let p = s.poisson.entry(a, b);
            if p.is_zero() {
                continue;
            }
            let xa = sym(&m.theory.partner(a).expect("antifield"));
            let xb = sym(&m.theory.partner(b).expect("antifield"));
            pi_dq = pi_dq + &(&xa * &p) * &q.partial(b);
            xpx = xpx + &(&xa * &p) * &xb;
        }
    }
    let dchip = Expr::symbol(&dst.antifield("chi")?.with_jet(1));
    let dep = Expr::symbol(&dst.antifield("e")?.with_jet(1));
    let gauge = &d_m - &(&chi * &dchip) + (&dst.xp("gamma") * &d1(&dst.field("gamma")?)) - (&e * &dep)
        + (&dst.xp("c") * &d1(&dst.field("c")?));
    let head = &s.s0 - (&e * &qq).scale(&qr(1, 2)) - &chi * q + &dst.x("c") * &gauge
        + &gam * &(-&pi_dq + (&ep * &chi).scale_int(2));
    let g2 = &gam * &gam;
    let einv = Expr::inv(&e)?;
    let quartic = |mid: Expr| &(&einv * &g2) * &(&dst.xp("c") + &mid - xpx.scale(&qr(1, 2)));
    // The reference action carries γ∂χ⁺ (ghost number 0) inside the γ²/e bracket
    // and drops the image −γ∂χ⁺ of γ∂β.
    let literal = &head + &quartic(&gam * &dchip);
    let corrected = &head - &(&gam * &dchip) + quartic(-(&chi * &dst.xp("gamma")));
    rep.push(spinning_comparison("spinning_action", &dst, &action, &corrected)?);
    rep.push(spinning_comparison("spinning_action_literal", &dst, &action, &literal)?.informational());
    let rank = antifield_rank(&action);
    rep.push(Check::flag("antifield_rank", rank == 2, format!("rank {rank}")));
    Ok(Spinning { report: rep, theory: dst, action, twisted })
}

/// Compare two densities exactly, falling back to equality modulo ∂.
pub fn spinning_comparison(name: &str, t: &Theory, got: &Expr, want: &Expr) -> Result<Check> {
    let d = got - want;
    if d.is_zero_rational() {
        return Ok(Check::flag(name, true, "equal"));
    }
    match is_total_derivative(t, &d) {
        Ok(r) if r.exact && r.constant.is_zero() => Ok(Check::flag(name, true, "equal modulo ∂")),
        _ => Ok(Check::equal(name, got, want)),
    }
}

/// `X₀ + dt X₁ ↦ X₁`, with `d = dt ∂` on composite fields.
pub fn dt_part(e: &Expr) -> Expr {
    crate::curved::dt_coefficient(e, &Symbol::simplex_dt(1))
}

pub fn dt() -> Expr {
    Expr::symbol(&Symbol::simplex_dt(1))
}

pub fn composite_d(e: &Expr) -> Expr {
    &dt() * &total_derivative(e)
}


/// The twisted flat spinning theory in the form
/// `S₀ − c(∂e⁺ − px⁺) − γ(∂χ⁺ − pψ⁺ + ψx⁺ + 2χe⁺) + γ²c⁺`,
/// `S₀ = p∂x + ½ψ∂ψ − ½ep² + χpψ`, compared modulo ∂.
pub fn flat_spinning_form_check(sp: &Spinning) -> Result<Check> {
    let t = &sp.theory;
    let n = t.dim();
    let h = qr(1, 2);
    let (e, c, chi, g) = (t.x("e"), t.x("c"), t.x("chi"), t.x("gamma"));
    let dp = |s: &str| -> Result<Expr> { Ok(Expr::symbol(&t.antifield(s)?.with_jet(1))) };
    let mut s0 = Expr::zero();
    let mut inner = dp("chi")? + (&chi * &t.xp("e")).scale_int(2);
    let mut c_part = dp("e")?;
    for i in 1..=n {
        let (x, p, psi) = (format!("x_{i}"), format!("p_{i}"), format!("psi_{i}"));
        let (pe, ps) = (t.x(&p), t.x(&psi));
        s0 = s0 + &pe * &d1(&t.field(&x)?) + (&ps * &d1(&t.field(&psi)?)).scale(&h) - (&e * &(&pe * &pe)).scale(&h)
            + &(&chi * &pe) * &ps;
        inner = inner - &pe * &t.xp(&psi) + &ps * &t.xp(&x);
        c_part = c_part - &pe * &t.xp(&x);
    }
    let want = s0 - &c * &c_part - &g * &inner + &(&g * &g) * &t.xp("c");
    spinning_comparison("flat_spinning_form", t, &sp.twisted, &want)
}
