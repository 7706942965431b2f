mod common;

use ellbvp::dyadic::DyadicRational;
use ellbvp::spectral::{
    d_value, discretize_circle_op, finite_rank_modify, parity_classify, quantize_projection, realize_projection,
    relative_index, spectral_projection, FourierSpace, Parity, ProjectionSymbol,
};
use ellbvp::symbol::{ModeChange, ProjectionFile};
use ellbvp::Error;
use proptest::prelude::*;

use common::{projection_symbol, sym};

#[test]
fn mode_shift_file_has_d_two() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../problems/mode-shift.json");
    let file = ProjectionFile::from_json(&std::fs::read_to_string(path).unwrap()).unwrap();
    let cond = file.build().unwrap();
    for modes in [4, 8] {
        let p = realize_projection(&cond, modes).unwrap();
        assert_eq!(d_value(&p).unwrap(), DyadicRational::integer(2));
        assert_eq!(p.rank(), 2);
    }
}

#[test]
fn parity_of_standard_symbols() {
    assert_eq!(parity_classify(&ProjectionSymbol::identity(2)), Parity::Even);
    assert_eq!(parity_classify(&projection_symbol(&[&["(1 + sgn)/2"]])), Parity::Odd);
    let hardy = ProjectionSymbol::positive_part(&sym(&[&["xi"]], 1)).unwrap();
    assert_eq!(parity_classify(&hardy), Parity::Odd);
}

#[test]
fn shifted_spectral_projections_differ_by_the_shift() {
    // spectrum of D - s on the circle is n - s; the cut moves past k modes
    let p = |shift: f64| spectral_projection(&discretize_circle_op(&sym(&[&[&format!("xi - {shift}")]], 1), 8).unwrap()).unwrap();
    let base = p(0.5);
    for (shift, k) in [(1.5, 1), (3.5, 3), (-1.5, -2)] {
        assert_eq!(relative_index(&base, &p(shift)).unwrap(), k);
    }
}

#[test]
fn odd_projection_has_no_d() {
    let hardy = spectral_projection(&discretize_circle_op(&sym(&[&["xi"]], 1), 6).unwrap()).unwrap();
    assert!(matches!(d_value(&hardy), Err(Error::Admissibility(_))));
}

#[test]
fn modification_outside_the_resolved_range_is_rejected() {
    let p = quantize_projection(&ProjectionSymbol::zero(1), FourierSpace::new(3, 1)).unwrap();
    assert!(finite_rank_modify(&p, &[ModeChange::unit(true, 4, 1, 0)]).is_err());
}

fn changes(modes: &[(i64, bool)]) -> Vec<ModeChange> {
    // base projects onto the first component, so additions use the second
    modes.iter().map(|&(m, add)| ModeChange::unit(add, m, 2, if add { 1 } else { 0 })).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn relative_index_is_a_cocycle(
        a in proptest::collection::btree_map(-5i64..=5, any::<bool>(), 0..4),
        b in proptest::collection::btree_map(-5i64..=5, any::<bool>(), 0..4),
        c in proptest::collection::btree_map(-5i64..=5, any::<bool>(), 0..4),
    ) {
        let space = FourierSpace::new(5, 2);
        let base = quantize_projection(&projection_symbol(&[&["1", "0"], &["0", "0"]]), space).unwrap();
        let make = |m: &std::collections::BTreeMap<i64, bool>| {
            let list: Vec<(i64, bool)> = m.iter().map(|(&k, &v)| (k, v)).collect();
            finite_rank_modify(&base, &changes(&list)).unwrap()
        };
        let (p, q, r) = (make(&a), make(&b), make(&c));
        let pq = relative_index(&p, &q).unwrap();
        let qr = relative_index(&q, &r).unwrap();
        let pr = relative_index(&p, &r).unwrap();
        prop_assert_eq!(pq + qr, pr);
        let net = |m: &std::collections::BTreeMap<i64, bool>| m.values().map(|&add| if add { 1 } else { -1 }).sum::<i64>();
        prop_assert_eq!(d_value(&p).unwrap(), DyadicRational::integer(net(&a)));
        prop_assert_eq!(d_value(&p).unwrap() - d_value(&q).unwrap(), DyadicRational::integer(pq));
    }
}
