//! Property tests over seeded random inputs: ring axioms, the Smith-form
//! contract, solve consistency, and parse/render round-trips.

use proptest::prelude::*;

use hah_core::corpus;
use hah_core::io as fio;
use hah_core::matrix::{self, local_smith_form, Mat};
use hah_core::scalar::{Ring, Scalar};

fn local3() -> Ring {
    Ring::local(3).unwrap()
}

fn scalar_strategy() -> impl Strategy<Value = Scalar> {
    (any::<i32>(), 1i32..=60).prop_map(|(n, d)| {
        let mut d = d;
        while d % 3 == 0 {
            d += 1;
        }
        Scalar::from_fraction(local3(), n as i64 % 1000, d as i64).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scalar_ring_axioms(a in scalar_strategy(), b in scalar_strategy(), c in scalar_strategy()) {
        prop_assert_eq!(a.add(&b), b.add(&a));
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        prop_assert!(a.add(&a.neg()).is_zero());
        if a.is_unit() {
            prop_assert!(a.inv().unwrap().mul(&a).is_one());
        }
        // valuations add under multiplication
        if !a.is_zero() && !b.is_zero() {
            prop_assert_eq!(
                a.mul(&b).valuation().unwrap(),
                a.valuation().unwrap() + b.valuation().unwrap()
            );
        }
    }

    #[test]
    fn smith_contract_on_random_matrices(
        rows in 1usize..=4,
        cols in 1usize..=4,
        entries in proptest::collection::vec(-9i64..=9, 16),
    ) {
        let r = local3();
        let m = Mat::from_i64(r, rows, cols, &entries[..rows * cols]);
        let s = local_smith_form(&m);
        prop_assert_eq!(s.u.mul(&m).mul(&s.v), s.d.clone());
        prop_assert_eq!(s.u.mul(&s.u_inv), Mat::identity(r, rows));
        prop_assert_eq!(s.v.mul(&s.v_inv), Mat::identity(r, cols));
        let vals = s.divisor_valuations();
        for w in vals.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        for i in 0..s.rank {
            prop_assert!(s.d.get(i, i).unit_part().unwrap().is_one());
        }
    }

    #[test]
    fn solve_returns_exact_solutions(
        rows in 1usize..=4,
        cols in 1usize..=4,
        entries in proptest::collection::vec(-9i64..=9, 16),
        xs in proptest::collection::vec(-9i64..=9, 4),
    ) {
        let r = local3();
        let m = Mat::from_i64(r, rows, cols, &entries[..rows * cols]);
        let x: Vec<Scalar> = xs[..cols].iter().map(|&v| Scalar::from_i64(r, v)).collect();
        let v = m.apply(&x);
        let u = matrix::solve(&m, &v);
        prop_assert!(u.is_some());
        prop_assert!(matrix::check_solution(&m, &u.unwrap(), &v).is_ok());
    }

    #[test]
    fn element_render_parse_roundtrip(coeffs in proptest::collection::vec(-6i64..=6, 8)) {
        let h = corpus::torsion_pair(3, 10).unwrap();
        let alg = h.algebra();
        let degree = 5usize;
        let dim = alg.dim(degree).unwrap();
        let vals: Vec<Scalar> = (0..dim)
            .map(|i| Scalar::from_i64(alg.ring(), coeffs.get(i).copied().unwrap_or(0)))
            .collect();
        let e = hah_core::algebra::Element::from_coeffs(alg, degree, vals).unwrap();
        let back = fio::parse_element(alg, degree, &e.render()).unwrap();
        prop_assert_eq!(e, back);
    }

    #[test]
    fn tensor_render_parse_roundtrip(coeffs in proptest::collection::vec(-6i64..=6, 12)) {
        let h = corpus::torsion_pair(3, 10).unwrap();
        let t2 = h.tensor_square();
        let degree = 5usize;
        let dim = t2.dim(degree).unwrap();
        let mut e = hah_core::tensor::TensorElement::zero(t2, degree).unwrap();
        for i in 0..dim {
            let c = Scalar::from_i64(h.ring(), coeffs.get(i).copied().unwrap_or(0));
            if !c.is_zero() {
                let one =
                    hah_core::tensor::TensorElement::basis_vector(t2, degree, i, c).unwrap();
                e = e.add(&one).unwrap();
            }
        }
        let back = fio::parse_tensor(t2, degree, &e.render()).unwrap();
        prop_assert_eq!(e, back);
    }
}
