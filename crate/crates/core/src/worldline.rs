//! The worked examples of the free particle and the flat spinning particle
//! coupled to world-line (super)gravity in the `(e, c)` chart.

use std::collections::BTreeMap;

use crate::curved::{
    canonical_substitution_check, dt_coefficient, pullback_series, substitute_generators, tau, u, verify_flow_endpoint,
    split, Curved, FlowMode, SubstitutionTable,
};
use crate::aksz::build_covariant_theory;
use crate::error::Result;
use crate::gravity::couple_gravity;
use crate::models::{bc_target, field_strength, model};
use crate::expr::{q, qr, Expr, Q};
use crate::report::{Check, Report};
use crate::symbol::Symbol;
use crate::theory::Theory;
use crate::varcalc::{is_total_derivative, total_derivative};

fn d1(t: &Theory, name: &str) -> Expr {
    Expr::symbol(&t.field(name).expect("field").with_jet(1))
}

fn dp1(t: &Theory, name: &str) -> Expr {
    Expr::symbol(&t.antifield(name).expect("antifield").with_jet(1))
}

fn dt() -> Expr {
    Expr::symbol(&Symbol::simplex_dt(1))
}

/// `a ≡ b` modulo total derivatives.
fn equal_mod_d(name: &str, t: &Theory, got: &Expr, want: &Expr) -> Result<Check> {
    let d = got - want;
    if d.is_zero_rational() {
        return Ok(Check::flag(name, true, "equal"));
    }
    let td = is_total_derivative(t, &d)?;
    if td.exact && td.constant.is_zero() {
        Ok(Check::flag(name, true, "equal modulo ∂"))
    } else {
        Ok(Check::equal(name, got, want))
    }
}

/// Chart `(x^μ, p_μ, e, c)` of the particle with metric `η`.
pub fn particle_theory(eta: &[Q]) -> Result<Theory> {
    let mut t = Theory::new("particle");
    t.set_metric(eta.to_vec());
    t.add_indexed_field("x", 0, 0)?;
    t.add_indexed_field("p", 0, 0)?;
    t.add_field("e", 0, 0)?;
    t.add_field("c", 1, 1)?;
    Ok(t)
}

fn idx(stem: &str, i: usize) -> String {
    format!("{stem}_{i}")
}

/// `Σ_μ f(μ)` over `1..=dim`.
fn sum(t: &Theory, f: impl Fn(usize) -> Expr) -> Expr {
    Expr::sum((1..=t.dim()).map(f))
}

/// `S₀ = p∂x − ½η e pp` and `D = x⁺∂x + p⁺∂p − e∂e⁺ + c⁺∂c`.
pub fn particle_action(t: &Theory) -> (Expr, Expr) {
    let e = t.x("e");
    let s0 = sum(t, |i| {
        let p = t.x(&idx("p", i));
        &p * &d1(t, &idx("x", i)) - (&e * &(&p * &p)).scale(&(t.eta(i) * qr(1, 2)))
    });
    let d = sum(t, |i| t.xp(&idx("x", i)) * d1(t, &idx("x", i)) + t.xp(&idx("p", i)) * d1(t, &idx("p", i)))
        - &e * &dp1(t, "e")
        + t.xp("c") * d1(t, "c");
    (s0, d)
}

/// `Σ x⁺_μ p^{+μ}`.
fn xp_pp(t: &Theory) -> Expr {
    sum(t, |i| t.xp(&idx("x", i)) * t.xp(&idx("p", i)))
}

/// Flow of `cx⁺p⁺`, the substitution `log(e)c⁺c`, their composite, and the
/// composite-field presentation of the result.
pub fn particle_report(eta: &[Q]) -> Result<Report> {
    let t = particle_theory(eta)?;
    let mut rep = Report::new("particle");
    let alg = Curved::with_zero_differential(&t);
    let (s0, dd) = particle_action(&t);
    let c = t.x("c");
    let e = t.x("e");
    let s1 = &c * &dd;
    let s = &s0 + &s1;
    let tt = tau();
    let y = &c * &xp_pp(&t);

    // Φ_τ^* on generators.
    let mut want: BTreeMap<Symbol, Expr> = BTreeMap::new();
    for i in 1..=t.dim() {
        let (x, p) = (idx("x", i), idx("p", i));
        want.insert(t.field(&x)?, t.x(&x) + &(&tt * &c) * &t.xp(&p));
        want.insert(t.antifield(&x)?, t.xp(&x));
        want.insert(t.field(&p)?, t.x(&p) - &(&tt * &c) * &t.xp(&x));
        want.insert(t.antifield(&p)?, t.xp(&p));
    }
    want.insert(t.field("e")?, e.clone());
    want.insert(t.antifield("e")?, t.xp("e"));
    want.insert(t.field("c")?, c.clone());
    want.insert(t.antifield("c")?, t.xp("c") + &tt * &xp_pp(&t));
    let mut table_ok = true;
    let mut detail = Vec::new();
    for (g, w) in &want {
        let f = pullback_series(&alg, &Expr::symbol(g), &y, 8);
        let ok = f.terminated && (&f.family - w).is_zero_rational();
        let cert = verify_flow_endpoint(&alg, &Expr::symbol(g), w, &y, FlowMode::Pullback)?.ok();
        if !(ok && cert) {
            table_ok = false;
            detail.push(format!("{g}: got {}", f.family));
        }
    }
    rep.push(Check::flag(
        "phi_generators",
        table_ok,
        if table_ok { format!("{} formulas", want.len()) } else { detail.join("; ") },
    ));

    let phi_s0 = pullback_series(&alg, &s0, &y, 8).family;
    let xpp = xp_pp(&t);
    let kin = sum(&t, |i| t.xp(&idx("x", i)) * d1(&t, &idx("x", i)) + t.xp(&idx("p", i)) * d1(&t, &idx("p", i)));
    let want_s0 = &s0 - &(&tt * &(&c * &kin))
        + &tt * &total_derivative(&(&c * &sum(&t, |i| t.xp(&idx("p", i)) * t.x(&idx("p", i)))))
        + &(&(&tt * &tt) * &(&c * &d1(&t, "c"))) * &xpp
        + &tt * &sum(&t, |i| (&(&e * &c) * &(t.x(&idx("p", i)) * t.xp(&idx("x", i)))).scale(&t.eta(i)));
    rep.push(Check::equal("phi_s0", &phi_s0, &want_s0));
    let phi_s1 = pullback_series(&alg, &s1, &y, 8).family;
    let want_s1 = &s1 - &(&(&tt * &(&c * &d1(&t, "c"))) * &xpp);
    rep.push(Check::equal("phi_s1", &phi_s1, &want_s1));

    let one = Q::from_integer(1.into());
    let phi_s = (&phi_s0 + &phi_s1).eval_tau(&one)?;
    let pxp = sum(&t, |i| (t.x(&idx("p", i)) * t.xp(&idx("x", i))).scale(&t.eta(i)));
    let want_phi = &s0 + &(&(&e * &c) * &(&pxp - &dp1(&t, "e"))) + &(&t.xp("c") * &c) * &d1(&t, "c")
        + total_derivative(&(&c * &sum(&t, |i| t.x(&idx("p", i)) * t.xp(&idx("p", i)))));
    rep.push(Check::equal("phi_s", &phi_s, &want_phi));

    // Ψ from the flow of log(e)c⁺c, against the stated substitution.
    let psi_gen = &Expr::log(&e)? * &(&t.xp("c") * &c);
    let psi_tab = SubstitutionTable::for_generator(&t, &psi_gen, 1, 8)?;
    let mut psi: BTreeMap<Symbol, Expr> = BTreeMap::new();
    for (g, img) in &psi_tab.images {
        psi.insert(g.clone(), img.eval_tau(&one)?);
    }
    let einv = Expr::inv(&e)?;
    let psi_want = [
        (t.antifield("e")?, t.xp("e") + &einv * &(&t.xp("c") * &c)),
        (t.field("c")?, &einv * &c),
        (t.antifield("c")?, &e * &t.xp("c")),
    ];
    let psi_ok = psi.len() == psi_want.len()
        && psi_want.iter().all(|(g, w)| psi.get(g).is_some_and(|i| (i - w).is_zero_rational()));
    rep.push(Check::flag("psi_table", psi_ok, format!("{psi:?}")));

    // Ξ = Φ∘Ψ, so Ξ^* = Ψ^*Φ^*.
    let mut xi: BTreeMap<Symbol, Expr> = BTreeMap::new();
    for g in t.fields().iter().chain(t.antifields()) {
        let phi_g = want.get(g).cloned().unwrap_or_else(|| Expr::symbol(g)).eval_tau(&one)?;
        xi.insert(g.clone(), substitute_generators(&phi_g, &psi)?);
    }
    let bad = canonical_substitution_check(&t, &t, &xi)?;
    rep.push(Check::flag("xi_canonical", bad.is_empty(), format!("{} bracket mismatches", bad.len())));
    let xi_s = substitute_generators(&s, &xi)?;
    let pp = sum(&t, |i| t.x(&idx("p", i)) * t.xp(&idx("p", i)));
    let want_xi = &s0 + &(&c * &(&pxp - &dp1(&t, "e"))) + total_derivative(&(&c * &(&pp + &(&e * &t.xp("e")))));
    rep.push(Check::equal("xi_s", &xi_s, &want_xi).informational());
    rep.push(equal_mod_d("xi_s_mod_d", &t, &xi_s, &want_xi)?);
    let xi_u = substitute_generators(&(&u() * &t.xp("c")), &xi)?;
    rep.push(Check::equal("xi_u", &xi_u, &(&u() * &(&xpp + &(&e * &t.xp("c"))))));

    // Composite fields (x + dt p⁺, p − dt x⁺, c − dt e, e⁺ + dt c⁺).
    let dtt = dt();
    let dd = |f: &Expr| &dtt * &total_derivative(f);
    let cb = &c - &(&dtt * &e);
    let bb = t.xp("e") + &dtt * &t.xp("c");
    let mut form = &cb * &dd(&bb);
    for i in 1..=t.dim() {
        let xb = t.x(&idx("x", i)) + &dtt * &t.xp(&idx("p", i));
        let pb = t.x(&idx("p", i)) - &dtt * &t.xp(&idx("x", i));
        form = form + &pb * &dd(&xb) + (&cb * &(&pb * &pb)).scale(&(t.eta(i) * qr(1, 2)));
    }
    let coeff = dt_coefficient(&form, &Symbol::simplex_dt(1));
    rep.push(equal_mod_d("composite_form", &t, &coeff, &xi_s)?);

    // The mc-particle element S + uc⁺.
    let b = Curved::new(&t);
    let lifted = b.lift(&(&s + &(&u() * &t.xp("c"))))?;
    rep.push(Check::zero("mc_particle", &b.mc_residual(&lifted)));
    Ok(rep)
}

/// The particle in a curved background with a magnetic field: its Poisson
/// bracket, `S_u + X_u`, and the coupling to gravity with `V = ½g^{μν}pp`.
pub fn magnetic_report(eta: &[Q]) -> Result<Report> {
    let m = model("magnetic-particle", eta)?;
    let th = &m.target.theory;
    let mut rep = Report::new("magnetic particle");
    let a = build_covariant_theory(&m.target)?;
    let n = th.dim();
    let rel = |e: &Expr| th.apply_relations(e);
    let mut bad = Vec::new();
    for i in 1..=n {
        for j in 1..=n {
            let (xi, pi, xj, pj) = (th.x(&idx("x", i)), th.x(&idx("p", i)), th.x(&idx("x", j)), th.x(&idx("p", j)));
            let delta = if i == j { Expr::one() } else { Expr::zero() };
            let cases = [
                (&xi, &xj, Expr::zero()),
                (&xi, &pj, delta),
                (&pi, &pj, field_strength(th, i, j)),
            ];
            for (f, g, w) in cases {
                if !(rel(&a.poisson.bracket(f, g))? - rel(&w)?).is_zero_rational() {
                    bad.push(format!("{{{f}, {g}}}"));
                }
            }
        }
    }
    rep.push(Check::flag("poisson_bracket", bad.is_empty(), if bad.is_empty() { "as stated".into() } else { bad.join(", ") }));

    let bc = bc_target();
    let prod = m.target.product(&bc, "magnetic+bc")?;
    let pt = &prod.theory;
    let x = build_covariant_theory(&bc)?;
    let got = a.s_u() + x.s_u();
    let (b, c, bp, cp) = (pt.x("b"), pt.x("c"), pt.xp("b"), pt.xp("c"));
    let mut f0 = &b * &d1(pt, "c");
    let mut f1 = &bp * &cp;
    let mut g1 = &cp * &c;
    for i in 1..=n {
        let nu = th.x(&idx("p", i)) + Expr::func(th.function(&idx("A", i)).expect("potential"));
        f0 = f0 + &nu * &d1(pt, &idx("x", i));
        f1 = f1 + pt.xp(&idx("x", i)) * pt.xp(&idx("p", i));
        g1 = g1 + &nu * &pt.xp(&idx("p", i));
        for j in 1..=n {
            f1 = f1 + (&field_strength(th, i, j) * &(pt.xp(&idx("p", i)) * pt.xp(&idx("p", j)))).scale(&qr(1, 2));
        }
    }
    let (gf, ge) = split(&got);
    let (gf, ge) = (rel(&gf)?, rel(&ge)?);
    let want_f = rel(&(&f0 + &(&u() * &f1)))?;
    rep.push(equal_mod_d("s_u_plus_x_u", pt, &gf, &want_f)?);
    rep.push(Check::equal("s_u_plus_x_u_eps", &ge, &(&u() * &g1)));

    let cg = couple_gravity(&m.target, m.potential.as_ref())?;
    rep.extend(cg.report);
    Ok(rep)
}

/// Chart `(x, p, ψ, e, c, χ, γ)` of the flat spinning particle in one dimension.
pub fn spinning_theory() -> Result<Theory> {
    let mut t = Theory::new("spinning");
    t.set_metric(vec![q(1)]);
    t.add_field("x_1", 0, 0)?;
    t.add_field("p_1", 0, 0)?;
    t.add_field("psi_1", 0, 1)?;
    t.add_field("e", 0, 0)?;
    t.add_field("c", 1, 1)?;
    t.add_field("chi", 0, 1)?;
    t.add_field("gamma", 1, 0)?;
    Ok(t)
}

/// `S₀ = p∂x + ½ψ∂ψ − ½ep² + χpψ`.
pub fn spinning_s0(t: &Theory) -> Expr {
    let (p, psi, e, chi) = (t.x("p_1"), t.x("psi_1"), t.x("e"), t.x("chi"));
    &p * &d1(t, "x_1") + (&psi * &d1(t, "psi_1")).scale(&qr(1, 2)) - (&e * &(&p * &p)).scale(&qr(1, 2))
        + &(&chi * &p) * &psi
}

/// `γ(∂χ⁺ − pψ⁺ + ψx⁺ + 2χe⁺)`.
fn gamma_part(t: &Theory) -> Expr {
    let inner = dp1(t, "chi") - t.x("p_1") * t.xp("psi_1") + t.x("psi_1") * t.xp("x_1")
        + (t.x("chi") * t.xp("e")).scale_int(2);
    t.x("gamma") * inner
}

/// The rank-two solution of the classical master equation for the flat
/// spinning particle.
pub fn spinning_solution(t: &Theory) -> Result<Expr> {
    let c = t.x("c");
    let g = t.x("gamma");
    let gauge = t.xp("x_1") * d1(t, "x_1") + t.xp("p_1") * d1(t, "p_1") + t.xp("psi_1") * d1(t, "psi_1")
        - t.x("e") * dp1(t, "e")
        + t.xp("c") * d1(t, "c")
        - t.x("chi") * dp1(t, "chi")
        + t.xp("gamma") * d1(t, "gamma");
    let quartic = t.xp("c") - t.xp("x_1") * t.xp("p_1") - (t.xp("psi_1") * t.xp("psi_1")).scale(&qr(1, 2))
        - t.x("chi") * t.xp("gamma");
    Ok(spinning_s0(t) + &c * &gauge - gamma_part(t) + &(&Expr::inv(&t.x("e"))? * &(&g * &g)) * &quartic)
}

/// `S₀ − c(∂e⁺ − px⁺) − γ(∂χ⁺ − pψ⁺ + ψx⁺ + 2χe⁺) + γ²c⁺`.
pub fn spinning_aksz_form(t: &Theory) -> Expr {
    let c = t.x("c");
    let g = t.x("gamma");
    spinning_s0(t) - &c * &(dp1(t, "e") - t.x("p_1") * t.xp("x_1")) - gamma_part(t) + &(&g * &g) * &t.xp("c")
}

pub fn spinning_report() -> Result<Report> {
    let t = spinning_theory()?;
    let mut rep = Report::new("spinning particle");
    let s = spinning_solution(&t)?;
    let b = Curved::new(&t);
    let lifted = b.lift(&(&s + &(&u() * &t.xp("c"))))?;
    rep.push(Check::zero("mc_spinning", &b.mc_residual(&lifted)));
    rep.push(Check::flag("rank", crate::curved::antifield_rank(&s) == 2, format!("rank {}", crate::curved::antifield_rank(&s))));

    let dtt = dt();
    let dd = |f: &Expr| &dtt * &total_derivative(f);
    let eta = t.eta(1);
    let xb = t.x("x_1") + &dtt * &t.xp("p_1");
    let pb = t.x("p_1") - &dtt * &t.xp("x_1");
    let cb = t.x("c") - &dtt * &t.x("e");
    let bb = t.xp("e") + &dtt * &t.xp("c");
    let gb = -t.x("gamma") + &dtt * &t.x("chi");
    let betab = t.xp("chi") + &dtt * &t.xp("gamma");
    let want = spinning_aksz_form(&t);
    // The stated ψ composite is ψ + dt ηψ⁺; it gives −γpψ⁺ where the form
    // has +γpψ⁺. The sign of the dt-component is the only freedom it affects.
    for (name, sign) in [("composite_form", -1), ("composite_form_literal", 1)] {
        let psib = t.x("psi_1") + (&dtt * &t.xp("psi_1")).scale(&(&eta * q(sign)));
        let form = &pb * &dd(&xb) - (&psib * &dd(&psib)).scale(&(&eta * qr(1, 2))) + &cb * &dd(&bb)
            + &gb * &dd(&betab)
            + (&cb * &(&pb * &pb)).scale(&(&eta * qr(1, 2)))
            + &(&gb * &pb) * &psib
            + &bb * &(&gb * &gb);
        let coeff = dt_coefficient(&form, &Symbol::simplex_dt(1));
        let chk = equal_mod_d(name, &t, &coeff, &want)?;
        rep.push(if sign == 1 { chk.informational() } else { chk });
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn particle_examples_hold() {
        for eta in [vec![q(1)], vec![q(-1), q(1)]] {
            let r = particle_report(&eta).unwrap();
            assert!(r.ok(), "{r}");
            println!("{r}");
        }
    }

    #[test]
    fn magnetic_particle_holds() {
        let r = magnetic_report(&[q(-1), q(1)]).unwrap();
        println!("{r}");
        assert!(r.ok(), "{r}");
    }

    #[test]
    fn spinning_examples_hold() {
        let r = spinning_report().unwrap();
        assert!(r.ok(), "{r}");
        println!("{r}");
    }
}
