use std::sync::Arc;

use proptest::prelude::*;

use bergman_toeplitz::gamma::build_gamma_table;
use bergman_toeplitz::indexcore::{Basis, Partition, Space};
use bergman_toeplitz::quad::QuadratureSpec;
use bergman_toeplitz::symbolexpr::{parse, SymbolSpec};
use bergman_toeplitz::toeplitz::{assemble, commutator, compose, frobenius_norm, operator};

fn partition() -> impl Strategy<Value = Partition> {
    prop::collection::vec(1usize..=2, 1..=3).prop_map(|p| Partition::new(p).unwrap())
}

/// Block-local shift with zero sum: `(d, −d)` for two-element blocks.
fn block_shift(k: &Partition, j: usize, d: i64) -> Vec<i64> {
    if k.part(j) == 2 {
        vec![d, -d]
    } else {
        vec![0]
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn unit_symbol_is_identity(k in partition(), m in 0u32..=3) {
        let basis = Arc::new(Basis::new(k.n(), Space::Projective { m }).unwrap());
        let t = operator(&SymbolSpec::unit(), &basis, &k, &QuadratureSpec::default()).unwrap();
        prop_assert_eq!(t.nnz(), basis.dim());
        for i in 0..basis.dim() {
            prop_assert!((t.get(i, i).re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn multisphere_operators_commute(k in partition(), m in 1u32..=3, d in -2i64..=2, j in 0usize..3) {
        let j = j % k.len();
        let basis = Arc::new(Basis::new(k.n(), Space::Projective { m }).unwrap());
        let spec = QuadratureSpec::default();
        let a = SymbolSpec::QuasiRadial { a: parse("1/(1+r1^2)").unwrap() };
        let b = SymbolSpec::MultiSphere { block: j, b: parse("s1^2").unwrap(), p: block_shift(&k, j, d) };
        let ta = operator(&a, &basis, &k, &spec).unwrap();
        let tb = operator(&b, &basis, &k, &spec).unwrap();
        tb.audit_shift_structure().unwrap();
        let c = frobenius_norm(&commutator(&ta, &tb).unwrap());
        prop_assert!(c <= 1e-12 * (1.0 + frobenius_norm(&ta) * frobenius_norm(&tb)));
    }

    #[test]
    fn raw_and_normalized_agree_on_diagonal(k in partition(), m in 0u32..=3) {
        // a diagonal operator has the same entries in both bases
        let space = Space::Projective { m };
        let basis = Arc::new(Basis::new(k.n(), space).unwrap());
        let a = SymbolSpec::QuasiRadial { a: parse("r1^2/(1+r1^2)").unwrap() };
        let table = build_gamma_table(&a, &space, &k, &QuadratureSpec::default()).unwrap();
        let raw = assemble(&table, &basis, false).unwrap();
        let norm = assemble(&table, &basis, true).unwrap();
        for i in 0..basis.dim() {
            prop_assert!((raw.get(i, i) - norm.get(i, i)).norm() < 1e-15);
        }
    }
}

#[test]
fn phase_powers_compose() {
    // T_{t^p}² differs from T_{t^{2p}} in value but not in shift or sparsity
    let k = Partition::single(2).unwrap();
    let basis = Arc::new(Basis::new(2, Space::Projective { m: 4 }).unwrap());
    let spec = QuadratureSpec::default();
    let t1 = operator(&SymbolSpec::Phase { p: vec![1, -1] }, &basis, &k, &spec).unwrap();
    let t2 = operator(&SymbolSpec::Phase { p: vec![2, -2] }, &basis, &k, &spec).unwrap();
    let sq = compose(&t1, &t1).unwrap();
    assert_eq!(sq.shift(), t2.shift());
    sq.audit_shift_structure().unwrap();
    assert_eq!(sq.nnz(), t2.nnz());
}
