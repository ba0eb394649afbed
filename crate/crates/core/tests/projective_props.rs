use num_bigint::BigInt;
use plc_core::projective::{
    are_parallel, incident, line_through, meet, HomogeneousTriple, Line, Point,
};
use proptest::prelude::*;

fn nonzero_triple() -> impl Strategy<Value = (i64, i64, i64)> {
    (-1000i64..=1000, -1000i64..=1000, -1000i64..=1000)
        .prop_filter("nonzero", |&(a, b, c)| (a, b, c) != (0, 0, 0))
}

fn scale() -> impl Strategy<Value = i64> {
    (-1_000_000i64..=1_000_000).prop_filter("nonzero", |&l| l != 0)
}

proptest! {
    #[test]
    fn normalize_is_idempotent((a, b, c) in nonzero_triple()) {
        let t = HomogeneousTriple::from_i64(a, b, c).unwrap();
        let again = HomogeneousTriple::normalize(t.a().clone(), t.b().clone(), t.c().clone()).unwrap();
        prop_assert_eq!(&again, &t);
        prop_assert!(HomogeneousTriple::is_canonical(t.a(), t.b(), t.c()));
    }

    #[test]
    fn normalize_ignores_scaling((a, b, c) in nonzero_triple(), l in scale()) {
        let t = HomogeneousTriple::from_i64(a, b, c).unwrap();
        let l = BigInt::from(l);
        let s = HomogeneousTriple::normalize(&l * a, &l * b, &l * c).unwrap();
        prop_assert_eq!(s, t);
    }

    #[test]
    fn join_and_meet_are_incident(p in nonzero_triple(), q in nonzero_triple()) {
        let p = Point::from_i64(p.0, p.1, p.2).unwrap();
        let q = Point::from_i64(q.0, q.1, q.2).unwrap();
        prop_assume!(p != q);
        let l = line_through(&p, &q).unwrap();
        prop_assert!(incident(&p, &l) && incident(&q, &l));

        let (l1, l2) = (p.dual(), q.dual());
        let x = meet(&l1, &l2).unwrap();
        prop_assert!(incident(&x, &l1) && incident(&x, &l2));
    }

    #[test]
    fn duality_commutes_with_join(p in nonzero_triple(), q in nonzero_triple()) {
        let p = Point::from_i64(p.0, p.1, p.2).unwrap();
        let q = Point::from_i64(q.0, q.1, q.2).unwrap();
        prop_assume!(p != q);
        let lhs = line_through(&p, &q).unwrap().dual();
        let rhs = meet(&p.dual(), &q.dual()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn meet_at_infinity_iff_parallel(l1 in nonzero_triple(), l2 in nonzero_triple()) {
        let l1 = Line::from_i64(l1.0, l1.1, l1.2).unwrap();
        let l2 = Line::from_i64(l2.0, l2.1, l2.2).unwrap();
        prop_assume!(l1 != l2);
        let x = meet(&l1, &l2).unwrap();
        // proportional (a, b) parts, the line at infinity being proportional to everything
        let a1: BigInt = l1.triple().a() * l2.triple().b();
        let a2 = l1.triple().b() * l2.triple().a();
        let proportional = a1 == a2;
        prop_assert_eq!(x.is_at_infinity(), proportional);
        if l1.direction().is_some() && l2.direction().is_some() {
            prop_assert_eq!(are_parallel(&l1, &l2), proportional);
        }
    }
}
