mod common;

use bvcov::curved::{normalize_b, u};
use bvcov::syntax::parse_expr;
use bvcov::theory::Theory;
use bvcov::varcalc::{is_total_derivative, total_derivative};
use bvcov::{q, qr, Exponent, Expr, Symbol};
use common::*;
use proptest::prelude::*;

/// Atoms beyond plain generators: `u^±1`, `ε`, `τ`, `1/e`, `log e`, `e^{τ−1}` and a
/// function of `x`.
fn atoms(t: &mut Theory) -> Vec<Expr> {
    let x = t.field("x_1").unwrap();
    let a = t.add_function("A", &[x]).unwrap();
    let e = t.x("e");
    let mut v: Vec<Expr> = generators(t, 2).iter().map(Expr::symbol).collect();
    v.extend([
        u(),
        Expr::symbol_pow(&Symbol::u(), -1),
        Expr::symbol(&Symbol::epsilon()),
        Expr::symbol(&Symbol::tau()),
        Expr::inv(&e).unwrap(),
        Expr::log(&e).unwrap(),
        Expr::pow(&e, &Exponent::affine(q(1), q(-1))).unwrap(),
        Expr::func(&a),
        Expr::func(&a.differentiate(0)),
    ]);
    v
}

fn build_atoms(atoms: &[Expr], terms: &Terms) -> Expr {
    let mut acc = Expr::zero();
    for (c, ix) in terms {
        let mut m = Expr::constant(qr(*c as i64, 3));
        for &i in ix {
            m = &m * &atoms[i % atoms.len()];
        }
        acc = acc + m;
    }
    acc
}

fn particle() -> Theory {
    theories().remove(0)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]

    #[test]
    fn associative(a in terms(3, 3), b in terms(3, 3), c in terms(3, 3)) {
        let mut t = particle();
        let at = atoms(&mut t);
        let (x, y, z) = (build_atoms(&at, &a), build_atoms(&at, &b), build_atoms(&at, &c));
        prop_assert_eq!(&(&x * &y) * &z, &x * &(&y * &z));
        prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
    }

    #[test]
    fn graded_commutative(a in terms(3, 3), b in terms(3, 3)) {
        let mut t = particle();
        let at = atoms(&mut t);
        let (x, px) = leading(&build_atoms(&at, &a));
        let (y, py) = leading(&build_atoms(&at, &b));
        let yx = &y * &x;
        prop_assert_eq!(&x * &y, if px && py { -yx } else { yx });
    }

    #[test]
    fn canonical_form_is_stable(a in terms(4, 3)) {
        let mut t = particle();
        let at = atoms(&mut t);
        let x = build_atoms(&at, &a);
        prop_assert_eq!(Expr::from_terms(x.terms().to_vec()), x.clone());
        prop_assert_eq!(normalize_b(&normalize_b(&x)), normalize_b(&x));
    }

    #[test]
    fn print_parse_round_trip(a in terms(4, 3)) {
        let mut t = particle();
        let at = atoms(&mut t);
        let x = build_atoms(&at, &a);
        prop_assert_eq!(parse_expr(&x.to_string(), &t).unwrap(), x);
    }

    #[test]
    fn derivative_is_a_derivation(a in terms(3, 3), b in terms(3, 3)) {
        let mut t = particle();
        let at = atoms(&mut t);
        let (x, y) = (build_atoms(&at, &a), build_atoms(&at, &b));
        let lhs = total_derivative(&(&x * &y));
        let rhs = &total_derivative(&x) * &y + &x * &total_derivative(&y);
        prop_assert!((lhs - rhs).is_zero_rational());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    /// `∂g + 5` is recognised as exact with constant 5 and a witness whose
    /// derivative is `∂g` again.
    #[test]
    fn derivative_plus_constant(a in terms(4, 3)) {
        for t in &theories() {
            let g = build(&generators(t, 2), &a);
            let dg = total_derivative(&g);
            let r = is_total_derivative(t, &(&dg + &Expr::int(5))).unwrap();
            prop_assert!(r.exact);
            prop_assert_eq!(r.constant.clone(), Expr::int(5));
            let w = r.witness.expect("witness");
            prop_assert!((total_derivative(&w) - &dg).is_zero());
        }
    }
}
