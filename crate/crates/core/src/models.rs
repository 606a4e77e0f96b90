//! Library of target charts used by the CLI, the examples and the tests.

use crate::aksz::Target;
use crate::error::{Error, Result};
use crate::expr::{q, qr, Expr, Func, Q};
use crate::symbol::Symbol;
use crate::theory::Theory;

#[derive(Clone, Debug)]
pub struct Model {
    pub name: String,
    pub target: Target,
    /// Hamiltonian `V` for the gravity twist `u⁻¹cV`.
    pub potential: Option<Expr>,
    /// Odd supercharge `Q` for the supergravity twist.
    pub supercharge: Option<Expr>,
}

pub const MODEL_NAMES: &[&str] = &[
    "flat-particle",
    "magnetic-particle",
    "bc",
    "beta-gamma",
    "flat-spinning",
    "magnetic-spinning",
    "curved-spinning",
];

/// Ghost system `(b, c)` with `ν = −c db`.
pub fn bc_target() -> Target {
    let mut th = Theory::new("bc");
    let b = th.add_field("b", -1, 1).unwrap();
    let c = th.add_field("c", 1, 1).unwrap();
    let mut t = Target::new(th);
    t.set_nu(&b, -Expr::symbol(&c));
    t
}

/// Bosonic ghost system `(β, γ)` with `ν = γ dβ`.
pub fn beta_gamma_target() -> Target {
    let mut th = Theory::new("beta-gamma");
    let b = th.add_field("beta", -1, 0).unwrap();
    let g = th.add_field("gamma", 1, 0).unwrap();
    let mut t = Target::new(th);
    t.set_nu(&b, Expr::symbol(&g));
    t
}

fn xs_ps(th: &mut Theory) -> Result<(Vec<Symbol>, Vec<Symbol>)> {
    Ok((th.add_indexed_field("x", 0, 0)?, th.add_indexed_field("p", 0, 0)?))
}

/// `A_i(x)` with `F_i_j = ∂_i A_j − ∂_j A_i` registered as relations.
fn gauge_potential(th: &mut Theory, xs: &[Symbol]) -> Result<Vec<Func>> {
    let n = xs.len();
    let a: Vec<Func> = (1..=n).map(|i| th.add_function(&format!("A_{i}"), xs)).collect::<Result<_>>()?;
    for i in 0..n {
        for j in i + 1..n {
            th.add_function(&format!("F_{}_{}", i + 1, j + 1), xs)?;
            let rhs = Expr::func(&a[j].differentiate(i)) - Expr::func(&a[i].differentiate(j));
            th.add_relation(&format!("F_{}_{}", i + 1, j + 1), rhs)?;
        }
    }
    Ok(a)
}

/// `F_{ij}` as an expression in the declared symbols (antisymmetric).
pub fn field_strength(th: &Theory, i: usize, j: usize) -> Expr {
    if i == j {
        return Expr::zero();
    }
    let (a, b, s) = if i < j { (i, j, 1) } else { (j, i, -1) };
    match th.function(&format!("F_{a}_{b}")) {
        Some(f) => Expr::func(f).scale_int(s),
        None => Expr::zero(),
    }
}

fn eta_vec(eta: &[Q]) -> Vec<Q> {
    if eta.is_empty() {
        vec![q(1)]
    } else {
        eta.to_vec()
    }
}

/// Build a library model with metric diagonal `eta` (its length is `n`).
pub fn model(name: &str, eta: &[Q]) -> Result<Model> {
    let eta = eta_vec(eta);
    let n = eta.len();
    let mut th = Theory::new(name);
    th.set_metric(eta.clone());
    let mut potential = None;
    let mut supercharge = None;
    let target = match name {
        "bc" => bc_target(),
        "beta-gamma" => beta_gamma_target(),
        "flat-particle" | "magnetic-particle" => {
            let (xs, ps) = xs_ps(&mut th)?;
            let a = if name == "magnetic-particle" { Some(gauge_potential(&mut th, &xs)?) } else { None };
            let mut ginv: Vec<Vec<Expr>> = vec![vec![Expr::zero(); n]; n];
            for i in 0..n {
                for j in i..n {
                    let g = if name == "magnetic-particle" {
                        Expr::func(&th.add_function(&format!("g_{}_{}", i + 1, j + 1), &xs)?)
                    } else if i == j {
                        Expr::constant(eta[i].clone())
                    } else {
                        Expr::zero()
                    };
                    ginv[i][j] = g.clone();
                    ginv[j][i] = g;
                }
            }
            let mut v = Expr::zero();
            for i in 0..n {
                for j in 0..n {
                    v = v + &(&ginv[i][j] * &Expr::symbol(&ps[i])) * &Expr::symbol(&ps[j]);
                }
            }
            potential = Some(v.scale(&qr(1, 2)));
            let mut t = Target::new(th);
            for i in 0..n {
                let mut comp = Expr::symbol(&ps[i]);
                if let Some(a) = &a {
                    comp = comp + Expr::func(&a[i]);
                }
                t.set_nu(&xs[i], comp);
            }
            t
        }
        "flat-spinning" | "magnetic-spinning" | "curved-spinning" => {
            let (xs, ps) = xs_ps(&mut th)?;
            let psi = th.add_indexed_field("psi", 0, 1)?;
            let a = if name != "flat-spinning" { Some(gauge_potential(&mut th, &xs)?) } else { None };
            let mut q_expr = Expr::zero();
            if name == "curved-spinning" {
                // Q = θ^μ_a ψ^a (p_μ + ½ ω_{μab} ψ^a ψ^b) with opaque frame and connection.
                for m in 0..n {
                    let mut pt = Expr::symbol(&ps[m]);
                    for a in 0..n {
                        for b in a + 1..n {
                            let om = th.add_function(&format!("w_{}_{}_{}", m + 1, a + 1, b + 1), &xs)?;
                            pt = pt + &Expr::func(&om) * &(&Expr::symbol(&psi[a]) * &Expr::symbol(&psi[b]));
                        }
                    }
                    for a in 0..n {
                        let th_ma = th.add_function(&format!("e_{}_{}", m + 1, a + 1), &xs)?;
                        q_expr = q_expr + &(&Expr::func(&th_ma) * &Expr::symbol(&psi[a])) * &pt;
                    }
                }
            } else {
                // Q = η_ab ψ^a p^b
                for i in 0..n {
                    q_expr = q_expr + (&Expr::symbol(&psi[i]) * &Expr::symbol(&ps[i])).scale(&eta[i]);
                }
            }
            supercharge = Some(q_expr);
            let mut t = Target::new(th);
            for i in 0..n {
                let mut comp = Expr::symbol(&ps[i]);
                if let Some(a) = &a {
                    comp = comp + Expr::func(&a[i]);
                }
                t.set_nu(&xs[i], comp);
                // ν ⊃ ½ η_ab ψ^a dψ^b
                t.set_nu(&psi[i], Expr::symbol(&psi[i]).scale(&(&eta[i] * qr(1, 2))));
            }
            t
        }
        _ => return Err(Error::SymbolUnknown(format!("model `{name}`"))),
    };
    Ok(Model { name: name.to_string(), target, potential, supercharge })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aksz::{build_covariant_theory, mc_of};

    #[test]
    fn every_model_builds_an_mc_element() {
        for name in MODEL_NAMES {
            let m = model(name, &[q(-1), q(1)]).unwrap();
            let a = build_covariant_theory(&m.target).unwrap();
            let r = mc_of(&m.target, &a);
            assert!(r.is_zero_rational(), "{name}: {r}");
        }
    }
}
