mod common;

use bvcov::curved::{join, normalize_b, u};
use bvcov::tw::{dt, t, whitney_commutes, CechCochain, Cover, TwAlgebra};
use bvcov::Expr;
use common::*;
use proptest::prelude::*;

/// Forms on the 2-simplex: `1, t_i, dt_i, t_i dt_j, dt_1 dt_2`.
fn forms() -> Vec<Expr> {
    let mut v = vec![Expr::one(), t(2, 0), t(2, 1), t(2, 2), dt(2, 0), dt(2, 1), dt(2, 2)];
    v.push(&t(2, 1) * &dt(2, 2));
    v.push(&t(2, 0) * &dt(2, 1));
    v.push(&dt(2, 1) * &dt(2, 2));
    v
}

type Piece = (usize, Terms, Terms);

/// `Σ α_i (f_i + g_i ε)`, optionally times `u`, taken homogeneous.
fn element(th: &bvcov::theory::Theory, pieces: &[Piece], with_u: bool) -> (Expr, bool) {
    let gens = generators(th, 1);
    let fs = forms();
    let mut acc = Expr::zero();
    for (a, f, g) in pieces {
        acc = acc + &fs[a % fs.len()] * &join(&build(&gens, f), &build(&gens, g));
    }
    if with_u {
        acc = &acc * &u();
    }
    let acc = normalize_b(&acc);
    if acc.is_zero() {
        return (acc, false);
    }
    leading(&acc)
}

fn pieces() -> impl Strategy<Value = Vec<Piece>> {
    prop::collection::vec((0usize..16, terms(2, 2), terms(1, 2)), 1..=2)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn curvature_identity(a in pieces(), wu: bool) {
        let th = &theories()[0];
        let alg = TwAlgebra::new(th);
        let (x, _) = element(th, &a, wu);
        let lhs = alg.d_tw(&alg.d_tw(&x));
        prop_assert!((lhs - alg.tw_bracket(&alg.curved.curvature(), &x)).is_zero());
    }

    #[test]
    fn leibniz(a in pieces(), b in pieces()) {
        let th = &theories()[1];
        let alg = TwAlgebra::new(th);
        let (x, px) = element(th, &a, false);
        let (y, _) = element(th, &b, true);
        let lhs = alg.d_tw(&alg.tw_bracket(&x, &y));
        let xdy = alg.tw_bracket(&x, &alg.d_tw(&y));
        let rhs = alg.tw_bracket(&alg.d_tw(&x), &y) + if px { xdy } else { -xdy };
        prop_assert!((lhs - normalize_b(&rhs)).is_zero());
    }

    #[test]
    fn antisymmetry(a in pieces(), b in pieces()) {
        for th in &theories() {
            let alg = TwAlgebra::new(th);
            let (x, px) = element(th, &a, false);
            let (y, py) = element(th, &b, false);
            let xy = alg.tw_bracket(&x, &y);
            let want = if !px && !py { xy } else { -xy };
            prop_assert!((alg.tw_bracket(&y, &x) - want).is_zero());
        }
    }

    #[test]
    fn jacobi(a in pieces(), b in pieces(), c in pieces()) {
        let th = &theories()[0];
        let alg = TwAlgebra::new(th);
        let (x, px) = element(th, &a, false);
        let (y, py) = element(th, &b, false);
        let (z, _) = element(th, &c, false);
        let lhs = alg.tw_bracket(&x, &alg.tw_bracket(&y, &z));
        let swap = alg.tw_bracket(&y, &alg.tw_bracket(&x, &z));
        let rhs = alg.tw_bracket(&alg.tw_bracket(&x, &y), &z) + if !px && !py { -swap } else { swap };
        prop_assert!((lhs - normalize_b(&rhs)).is_zero());
    }
}

fn cochain(degree: usize, cover: &Cover, values: &[Terms]) -> CechCochain {
    let th = &theories()[0];
    let gens = generators(th, 1);
    let mut c = CechCochain::new(degree);
    for (s, v) in cover.of_dim(degree).zip(values) {
        c.set(s, build(&gens, v));
    }
    c
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn whitney_is_a_chain_map(v0 in prop::collection::vec(terms(2, 2), 3), v1 in prop::collection::vec(terms(2, 2), 3)) {
        let cover = Cover::complete(&["A", "B", "C"], 2);
        for c in [cochain(0, &cover, &v0), cochain(1, &cover, &v1)] {
            for (s, r) in whitney_commutes(&cover, &c) {
                prop_assert!(r.is_zero(), "{:?}: {}", s, r);
            }
        }
    }
}
