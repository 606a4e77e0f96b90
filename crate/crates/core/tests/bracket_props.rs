mod common;

use bvcov::theory::Theory;
use bvcov::varcalc::{hamiltonian_vf, soloviev, total_derivative, EtaleMap};
use bvcov::{Expr, Symbol};
use common::*;
use proptest::prelude::*;

fn pair(t: &Theory, a: &Terms, b: &Terms) -> (Expr, bool, Expr, bool) {
    let g = generators(t, 2);
    let (f, pa) = random_element(&g, a);
    let (h, pb) = random_element(&g, b);
    (f, pa, h, pb)
}

/// `x ↦ x + k p²`, `e ↦ e + x²`: quadratic, with polynomial inverse Jacobian.
fn quadratic_map(t: &Theory, k: i64) -> EtaleMap {
    let (x, p) = (t.x("x_1"), t.x("p_1"));
    EtaleMap::new(
        t,
        &[(t.field("x_1").unwrap(), &x + &(&p * &p).scale_int(k)), (t.field("e").unwrap(), t.x("e") + &x * &x)],
    )
    .unwrap()
}

fn config() -> ProptestConfig {
    ProptestConfig { cases: 500, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn antisymmetry(a in terms(3, 3), b in terms(3, 3)) {
        for t in &theories() {
            let (f, pa, g, pb) = pair(t, &a, &b);
            let fg = soloviev(t, &f, &g);
            // (g, f) = −(−1)^{(|f|+1)(|g|+1)} (f, g)
            let want = if !pa && !pb { fg } else { -&fg };
            prop_assert!((soloviev(t, &g, &f) - want).is_zero());
        }
    }

    // The rule is taken with the sign (−1)^{(|x|+1)(|y|+1)}; it reduces to
    // (−1)^{|x|+1} exactly when x is odd or y is even.
    #[test]
    fn jacobi(a in terms(2, 3), b in terms(2, 3), c in terms(2, 3)) {
        for t in &theories() {
            let gens = generators(t, 1);
            let (x, pa) = random_element(&gens, &a);
            let (y, pb) = random_element(&gens, &b);
            let (z, _) = random_element(&gens, &c);
            let lhs = soloviev(t, &x, &soloviev(t, &y, &z));
            let swap = soloviev(t, &y, &soloviev(t, &x, &z));
            let rhs = soloviev(t, &soloviev(t, &x, &y), &z) + if !pa && !pb { -swap } else { swap };
            prop_assert!((lhs - rhs).is_zero());
        }
    }

    #[test]
    fn linear_over_d(a in terms(3, 3), b in terms(3, 3)) {
        for t in &theories() {
            let (f, _, g, _) = pair(t, &a, &b);
            let dfg = total_derivative(&soloviev(t, &f, &g));
            prop_assert!((soloviev(t, &total_derivative(&f), &g) - &dfg).is_zero());
            prop_assert!((soloviev(t, &f, &total_derivative(&g)) - &dfg).is_zero());
        }
    }

    #[test]
    fn etale_invariance(a in terms(3, 3), b in terms(3, 3), k in 1i64..4) {
        for t in &theories() {
            let (f, _, g, _) = pair(t, &a, &b);
            let phi = quadratic_map(t, k);
            let lhs = soloviev(t, &phi.pullback(&f).unwrap(), &phi.pullback(&g).unwrap());
            let rhs = phi.pullback(&soloviev(t, &f, &g)).unwrap();
            prop_assert!((lhs - rhs).is_zero());
        }
    }

    #[test]
    fn hamiltonian_morphism(a in terms(3, 3), b in terms(3, 3)) {
        for t in &theories() {
            let (f, _, g, _) = pair(t, &a, &b);
            let lhs = hamiltonian_vf(t, &f).commutator(&hamiltonian_vf(t, &g));
            let rhs = hamiltonian_vf(t, &soloviev(t, &f, &g));
            prop_assert!(lhs.sub(&rhs).is_zero(), "{:?}", lhs.sub(&rhs));
        }
    }
}

#[test]
fn jacobi_needs_the_parity_of_y() {
    let t = &theories()[0];
    let j = |n: &str, k: u32| Expr::symbol(&t.field(n).unwrap().with_jet(k));
    let pp = t.xp("p_1");
    let (x, y, z) = (&j("c", 1) * &pp, &t.x("c") * &t.x("p_1"), &t.x("p_1") * &pp);
    let lhs = soloviev(t, &x, &soloviev(t, &y, &z));
    let first = soloviev(t, &soloviev(t, &x, &y), &z);
    let swap = soloviev(t, &y, &soloviev(t, &x, &z));
    assert_eq!(lhs, &first + &swap);
    assert!(!(&lhs - &(&first - &swap)).is_zero());
}

#[test]
fn quadratic_map_moves_antifields() {
    let t = &theories()[0];
    let phi = quadratic_map(t, 1);
    // J⁻¹ mixes p⁺ with x⁺ through the p² term.
    assert!(phi.pullback(&t.xp("p_1")).unwrap().depends_on(&t.antifield("x_1").unwrap()));
}

#[test]
fn generators_cover_jets() {
    let t = &theories()[1];
    let g: Vec<Symbol> = generators(t, 2);
    assert_eq!(g.len(), 2 * t.fields().len() * 3);
}
