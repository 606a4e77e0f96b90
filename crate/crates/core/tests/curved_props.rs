mod common;

use bvcov::curved::{join, normalize_b, u, Curved};
use bvcov::gravity::couple_gravity;
use bvcov::models::{model, MODEL_NAMES};
use bvcov::theory::Theory;
use bvcov::{q, Expr};
use common::*;
use proptest::prelude::*;

/// Every chart the library works in: the two worldline charts, each model
/// target and the gravity-coupled particle.
fn all_theories() -> Vec<Theory> {
    let mut v = theories();
    for name in MODEL_NAMES {
        let eta: &[_] = if name.contains("particle") { &[q(-1), q(1)] } else { &[q(-1)] };
        v.push(model(name, eta).unwrap().target.theory);
    }
    let flat = model("flat-particle", &[q(-1)]).unwrap();
    v.push(couple_gravity(&flat.target, None).unwrap().theory);
    v
}

/// Generators of `B`: jets of fields and antifields, alone and times ε.
fn b_generators(t: &Theory) -> Vec<Expr> {
    let mut v = Vec::new();
    for s in generators(t, 1) {
        let x = Expr::symbol(&s);
        v.push(join(&Expr::zero(), &x));
        v.push(x);
    }
    v
}

fn ad(c: &Curved, a: &Expr, x: &Expr) -> Expr {
    c.b_bracket(a, x)
}

#[test]
fn du_squared_is_ad_of_curvature() {
    for t in all_theories() {
        let c = Curved::new(&t);
        let r = c.curvature();
        for x in b_generators(&t) {
            let lhs = c.d_u(&c.d_u(&x));
            assert!((&lhs - &ad(&c, &r, &x)).is_zero(), "{}: d_u² {x}", t.name);
        }
    }
}

#[test]
fn iota_squares_to_zero() {
    for t in all_theories() {
        let c = Curved::new(&t);
        for x in b_generators(&t) {
            assert!(c.iota(&c.iota(&x)).is_zero(), "{}: ι² {x}", t.name);
        }
    }
}

#[test]
fn cartan_formula() {
    for t in all_theories() {
        let c = Curved::new(&t);
        let dd = t.d_element();
        for x in b_generators(&t) {
            let lhs = normalize_b(&(c.b_differential(&c.iota(&x)) + c.iota(&c.b_differential(&x))));
            assert!((&lhs - &ad(&c, &dd, &x)).is_zero(), "{}: dι + ιd on {x}", t.name);
        }
    }
}

#[test]
fn bianchi() {
    for t in all_theories() {
        let c = Curved::new(&t);
        assert!(c.d_u(&c.curvature()).is_zero(), "{}", t.name);
    }
}

/// A random homogeneous element `f + gε + u(f' + g'ε)` of `B[[u]]`.
fn element(t: &Theory, parts: &[Terms; 4]) -> (Expr, bool) {
    let gens = generators(t, 1);
    let [f, g, f1, g1] = parts.each_ref().map(|p| build(&gens, p));
    let x = normalize_b(&(join(&f, &g) + &u() * &join(&f1, &g1)));
    if x.is_zero() {
        return (x, false);
    }
    leading(&x)
}

fn parts() -> impl Strategy<Value = [Terms; 4]> {
    [terms(2, 2), terms(2, 2), terms(1, 2), terms(1, 2)]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn curvature_identity(a in parts()) {
        for t in &theories() {
            let c = Curved::new(t);
            let (x, _) = element(t, &a);
            prop_assert!((c.d_u(&c.d_u(&x)) - ad(&c, &c.curvature(), &x)).is_zero());
        }
    }

    #[test]
    fn leibniz(a in parts(), b in parts()) {
        for t in &theories() {
            let c = Curved::new(t);
            let (x, px) = element(t, &a);
            let (y, _) = element(t, &b);
            let lhs = c.d_u(&c.b_bracket(&x, &y));
            let xdy = c.b_bracket(&x, &c.d_u(&y));
            let rhs = c.b_bracket(&c.d_u(&x), &y) + if px { xdy } else { -xdy };
            prop_assert!((lhs - normalize_b(&rhs)).is_zero());
        }
    }

    #[test]
    fn antisymmetry(a in parts(), b in parts()) {
        for t in &theories() {
            let c = Curved::new(t);
            let (x, px) = element(t, &a);
            let (y, py) = element(t, &b);
            let xy = c.b_bracket(&x, &y);
            let want = if !px && !py { xy } else { -xy };
            prop_assert!((c.b_bracket(&y, &x) - want).is_zero());
        }
    }

    #[test]
    fn jacobi(a in parts(), b in parts(), e in parts()) {
        for t in &theories() {
            let c = Curved::new(t);
            let (x, px) = element(t, &a);
            let (y, py) = element(t, &b);
            let (z, _) = element(t, &e);
            let lhs = c.b_bracket(&x, &c.b_bracket(&y, &z));
            let swap = c.b_bracket(&y, &c.b_bracket(&x, &z));
            let rhs = c.b_bracket(&c.b_bracket(&x, &y), &z) + if !px && !py { -swap } else { swap };
            prop_assert!((lhs - normalize_b(&rhs)).is_zero());
        }
    }
}
