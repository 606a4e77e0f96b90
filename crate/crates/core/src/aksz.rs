//! One-dimensional AKSZ theories built from a one-form on a target chart.

use std::collections::BTreeMap;

use crate::curved::{join, normalize_b, u, u_range, Algebra, Curved, gauge_flow_series};
use crate::error::{Error, Result};
use crate::expr::{qr, Expr};
use crate::symbol::Symbol;
use crate::theory::Theory;
use crate::varcalc::invert_matrix;

/// A target chart with a one-form `ν = ν_a dξ^a`.
#[derive(Clone, Debug)]
pub struct Target {
    pub theory: Theory,
    pub nu: BTreeMap<Symbol, Expr>,
}

impl Target {
    pub fn new(theory: Theory) -> Self {
        Target { theory, nu: BTreeMap::new() }
    }

    pub fn set_nu(&mut self, coord: &Symbol, comp: Expr) {
        self.nu.insert(coord.clone(), comp);
    }

    pub fn nu(&self, coord: &Symbol) -> Expr {
        self.nu.get(coord).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn coords(&self) -> &[Symbol] {
        self.theory.fields()
    }

    /// Product of targets; the one-forms add.
    pub fn product(&self, other: &Target, name: &str) -> Result<Target> {
        let theory = self.theory.product(&other.theory, name)?;
        let mut nu = self.nu.clone();
        nu.extend(other.nu.iter().map(|(k, v)| (k.clone(), v.clone())));
        Ok(Target { theory, nu })
    }
}

fn sgn(odd: bool) -> i64 {
    if odd {
        -1
    } else {
        1
    }
}

/// `ω_ab = ∂_a ν_b − (−1)^{|a||b|} ∂_b ν_a`.
pub fn two_form(t: &Target) -> Vec<Vec<Expr>> {
    let xs = t.coords();
    xs.iter()
        .map(|a| {
            xs.iter()
                .map(|b| {
                    let s = sgn(a.is_odd() && b.is_odd());
                    t.nu(b).partial(a) - t.nu(a).partial(b).scale_int(s)
                })
                .collect()
        })
        .collect()
}

/// Poisson tensor of a symplectic target.
#[derive(Clone, Debug)]
pub struct Poisson {
    pub coords: Vec<Symbol>,
    pub pi: Vec<Vec<Expr>>,
}

/// Solve `(−1)^{|a|} π^{ab} ω_bc = δ^a_c`.
pub fn invert_symplectic(t: &Target) -> Result<Poisson> {
    let omega = two_form(t);
    let xs = t.coords().to_vec();
    for (i, row) in omega.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            if !e.is_zero() && e.koszul() != Some(false) {
                return Err(Error::Unsupported(format!("odd entry ω({}, {})", xs[i], xs[j])));
            }
        }
    }
    let p = invert_matrix(&omega).map_err(|e| match e {
        Error::SingularJacobian(m) => Error::NotSymplectic(null_direction(&omega, &xs).unwrap_or(m)),
        other => other,
    })?;
    let pi: Vec<Vec<Expr>> =
        p.iter().enumerate().map(|(a, row)| row.iter().map(|e| e.scale_int(sgn(xs[a].is_odd()))).collect()).collect();
    Ok(Poisson { coords: xs, pi })
}

/// A coordinate direction annihilated by ω, when one is visible.
fn null_direction(omega: &[Vec<Expr>], xs: &[Symbol]) -> Option<String> {
    (0..xs.len())
        .find(|&j| omega.iter().all(|row| row[j].is_zero()))
        .map(|j| format!("ω annihilates ∂/∂{}", xs[j]))
}

impl Poisson {
    fn idx(&self, s: &Symbol) -> Option<usize> {
        self.coords.iter().position(|c| c == s)
    }

    pub fn entry(&self, a: &Symbol, b: &Symbol) -> Expr {
        match (self.idx(a), self.idx(b)) {
            (Some(i), Some(j)) => self.pi[i][j].clone(),
            _ => Expr::zero(),
        }
    }

    /// `{f, g} = (−1)^{(|f|+|a|)|b|} π^{ab} ∂_a f ∂_b g`.
    pub fn bracket(&self, f: &Expr, g: &Expr) -> Expr {
        let (fe, fo) = f.split_parity();
        let mut acc = Expr::zero();
        for (pf, f) in [(false, fe), (true, fo)] {
            if f.is_zero() {
                continue;
            }
            for (i, a) in self.coords.iter().enumerate() {
                let da = f.partial(a);
                if da.is_zero() {
                    continue;
                }
                for (j, b) in self.coords.iter().enumerate() {
                    if self.pi[i][j].is_zero() {
                        continue;
                    }
                    let db = g.partial(b);
                    if db.is_zero() {
                        continue;
                    }
                    let s = sgn((pf ^ a.is_odd()) && b.is_odd());
                    acc = acc + (&(&self.pi[i][j] * &da) * &db).scale_int(s);
                }
            }
        }
        acc
    }

    /// Nonzero components of the Jacobiator
    /// `{a,{c,d}} − {{a,c},d} − (−1)^{|a||c|}{c,{a,d}}` on coordinates.
    pub fn jacobi_residuals(&self) -> Vec<(usize, usize, usize, Expr)> {
        let n = self.coords.len();
        let x: Vec<Expr> = self.coords.iter().map(Expr::symbol).collect();
        let mut out = Vec::new();
        for a in 0..n {
            for c in 0..n {
                let ac = self.bracket(&x[a], &x[c]);
                for d in 0..n {
                    let s = sgn(self.coords[a].is_odd() && self.coords[c].is_odd());
                    let r = self.bracket(&x[a], &self.pi[c][d])
                        - self.bracket(&ac, &x[d])
                        - self.bracket(&x[c], &self.pi[a][d]).scale_int(s);
                    if !r.is_zero_rational() {
                        out.push((a, c, d, r));
                    }
                }
            }
        }
        out
    }

    /// Graded antisymmetry `π^{ab} = −(−1)^{|a||b|} π^{ba}`.
    pub fn is_graded_antisymmetric(&self) -> bool {
        let n = self.coords.len();
        (0..n).all(|a| {
            (0..n).all(|b| {
                let s = sgn(self.coords[a].is_odd() && self.coords[b].is_odd());
                (&self.pi[a][b] + &self.pi[b][a].scale_int(s)).is_zero_rational()
            })
        })
    }
}

/// The covariant field theory `S_u = S_0 + u S_1` of a target.
#[derive(Clone, Debug)]
pub struct Aksz {
    pub s0: Expr,
    pub s1: Expr,
    pub poisson: Poisson,
}

impl Aksz {
    pub fn s_u(&self) -> Expr {
        &self.s0 + &(&u() * &self.s1)
    }
}

/// `S_0 = (−1)^{|a|} ν_a ∂ξ^a`, `S_1 = ½(ξ⁺_a − ν_a ε) π^{ab} (ξ⁺_b − ν_b ε)`.
pub fn build_covariant_theory(t: &Target) -> Result<Aksz> {
    let poisson = invert_symplectic(t)?;
    let eps = Expr::symbol(&Symbol::epsilon());
    let mut s0 = Expr::zero();
    for a in t.coords() {
        let d = Expr::symbol(&a.with_jet(1));
        s0 = s0 + (&t.nu(a) * &d).scale_int(sgn(a.is_odd()));
    }
    let legs: Vec<Expr> = t
        .coords()
        .iter()
        .map(|a| Expr::symbol(&t.theory.partner(a).expect("antifield")) - &t.nu(a) * &eps)
        .collect();
    let mut s1 = Expr::zero();
    for i in 0..legs.len() {
        for j in 0..legs.len() {
            if poisson.pi[i][j].is_zero() {
                continue;
            }
            s1 = s1 + &(&legs[i] * &poisson.pi[i][j]) * &legs[j];
        }
    }
    let s1 = normalize_b(&s1.scale(&qr(1, 2)));
    Ok(Aksz { s0, s1, poisson })
}

/// `đW = d_u W + [S, W]`.
pub fn twisted_differential(c: &Curved, s: &Expr, w: &Expr) -> Expr {
    normalize_b(&(c.d_u(w) + c.b_bracket(s, w)))
}

/// `S • u⁻¹W`, checking that `đW` is divisible by `u` and `[đW, W] = 0`.
pub fn twist(c: &Curved, s: &Expr, w: &Expr) -> Result<Expr> {
    let dw = twisted_differential(c, s, w);
    if let Some((lo, _)) = u_range(&dw) {
        if lo < 1 {
            return Err(Error::TwistObstruction(format!("đW has a u^{lo} term: {dw}")));
        }
    }
    let br = c.b_bracket(&dw, w);
    if !br.is_zero() {
        return Err(Error::TwistObstruction(format!("[đW, W] = {br}")));
    }
    let y = &Expr::symbol_pow(&Symbol::u(), -1) * w;
    let flow = gauge_flow_series(c, s, &y, 6);
    if !flow.terminated {
        return Err(Error::CompletionRequired("twist series did not terminate".into()));
    }
    let out = flow.endpoint()?;
    let direct = normalize_b(&(s + &(&Expr::symbol_pow(&Symbol::u(), -1) * &dw)));
    if !(&out - &direct).is_zero_rational() {
        return Err(Error::TwistObstruction("flow and S + u⁻¹đW disagree".into()));
    }
    Ok(out)
}

/// ε-free part.
pub fn project_f(x: &Expr) -> Expr {
    crate::curved::split(x).0
}

/// `S + u⁻¹ (g ε)` helper for displays.
pub fn with_eps(f: &Expr, g: &Expr) -> Expr {
    join(f, g)
}

/// MC residual of a built theory in its own chart.
pub fn mc_of(t: &Target, a: &Aksz) -> Expr {
    Curved::new(&t.theory).mc_residual(&a.s_u())
}

/// Algebra handle used by the pipelines.
pub fn algebra(t: &Theory) -> Curved<'_> {
    Curved::new(t)
}

#[allow(dead_code)]
fn _assert_object_safe(_: &dyn Algebra) {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::q;

    fn flat(n: usize) -> Target {
        let mut th = Theory::new("flat");
        th.set_metric(vec![q(1); n]);
        let xs = th.add_indexed_field("x", 0, 0).unwrap();
        let ps = th.add_indexed_field("p", 0, 0).unwrap();
        let mut t = Target::new(th);
        for (x, p) in xs.iter().zip(&ps) {
            t.set_nu(x, Expr::symbol(p));
        }
        t
    }

    #[test]
    fn flat_particle_is_mc() {
        let t = flat(2);
        let a = build_covariant_theory(&t).unwrap();
        assert!(a.poisson.is_graded_antisymmetric());
        assert!(a.poisson.jacobi_residuals().is_empty());
        assert!(mc_of(&t, &a).is_zero(), "{}", mc_of(&t, &a));
        let x = t.theory.x("x_1");
        let p = t.theory.x("p_1");
        assert_eq!(a.poisson.bracket(&x, &p), Expr::one());
    }

    #[test]
    fn degenerate_form_is_rejected() {
        let mut th = Theory::new("deg");
        let x = th.add_field("x", 0, 0).unwrap();
        th.add_field("y", 0, 0).unwrap();
        let mut t = Target::new(th);
        t.set_nu(&x, Expr::one());
        assert!(matches!(invert_symplectic(&t), Err(Error::NotSymplectic(_))));
    }
}
