//! Random polynomial expressions for the property tests.
#![allow(dead_code)]

use bvcov::theory::Theory;
use bvcov::worldline::{particle_theory, spinning_theory};
use bvcov::{q, qr, Expr, Symbol};
use proptest::prelude::*;

/// Raw description of a polynomial: `(numerator, generator indices)` per term.
pub type Terms = Vec<(i8, Vec<usize>)>;

pub fn theories() -> Vec<Theory> {
    vec![particle_theory(&[q(-1)]).unwrap(), spinning_theory().unwrap()]
}

/// Fields, antifields and their jets up to `max_jet`.
pub fn generators(t: &Theory, max_jet: u32) -> Vec<Symbol> {
    let mut out = Vec::new();
    for s in t.fields().iter().chain(t.antifields()) {
        for k in 0..=max_jet {
            out.push(s.with_jet(k));
        }
    }
    out
}

pub fn build(gens: &[Symbol], terms: &Terms) -> Expr {
    let mut acc = Expr::zero();
    for (c, ix) in terms {
        let mut m = Expr::constant(qr(*c as i64, 2));
        for &i in ix {
            m = &m * &Expr::symbol(&gens[i % gens.len()]);
        }
        acc = acc + m;
    }
    acc
}

pub fn terms(max_terms: usize, max_deg: usize) -> impl Strategy<Value = Terms> {
    prop::collection::vec(
        (any::<i8>().prop_filter("nonzero", |c| *c != 0), prop::collection::vec(0usize..64, 1..=max_deg)),
        1..=max_terms,
    )
}

/// The part of Koszul parity `odd`.
pub fn homogeneous(e: &Expr, odd: bool) -> Expr {
    let (ev, od) = e.split_parity();
    if odd {
        od
    } else {
        ev
    }
}

/// The homogeneous part containing the leading term, with its parity.
pub fn leading(e: &Expr) -> (Expr, bool) {
    let odd = e.terms().first().map(|(m, _)| m.is_odd()).unwrap_or(false);
    (homogeneous(e, odd), odd)
}

/// A nonzero homogeneous expression built from `terms`.
pub fn random_element(gens: &[Symbol], terms: &Terms) -> (Expr, bool) {
    leading(&build(gens, terms))
}

pub fn parity(e: &Expr) -> bool {
    e.koszul().unwrap_or(false)
}

pub fn sign(odd: bool) -> Expr {
    Expr::constant(if odd { q(-1) } else { q(1) })
}

/// The same shape of data as [`terms`], drawn from a seeded generator.
pub fn random_terms<R: rand::Rng>(rng: &mut R, max_terms: usize, max_deg: usize) -> Terms {
    (0..rng.gen_range(1..=max_terms))
        .map(|_| {
            let c = loop {
                let c: i8 = rng.gen_range(-9..=9);
                if c != 0 {
                    break c;
                }
            };
            (c, (0..rng.gen_range(1..=max_deg)).map(|_| rng.gen_range(0..64)).collect())
        })
        .collect()
}
