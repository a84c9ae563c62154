mod common;

use common::*;
use proptest::prelude::*;
use sr_mcmc::exact::{enumerate_distribution, marginalize_shadow};
use sr_mcmc::measures::{symmetric_homogenization, CardinalityConditioned, Measure, ProductMeasure};
use sr_mcmc::SubsetState;

fn close(got: f64, want: f64) -> bool {
    (got - want).abs() <= 1e-10 * want.abs().max(1.0)
}

/// Every ratio query agrees with the quotient of the two weights.
fn assert_ratios_consistent(name: &str, m: &dyn Measure) {
    let n = m.ground_size();
    let w = |s: &SubsetState| m.log_weight(s).unwrap().weight();
    for mask in 0..1u64 << n {
        let s = SubsetState::from_mask(n, mask);
        let base = w(&s);
        if base == 0.0 {
            continue;
        }
        for t in 0..n {
            if s.contains(t) {
                let mut d = s.clone();
                d.remove(t).unwrap();
                assert!(close(m.delete_ratio(&s, t).unwrap(), w(&d) / base), "{name}: delete {t} from {mask:#b}");
                for u in (0..n).filter(|&u| !s.contains(u)) {
                    let mut x = d.clone();
                    x.insert(u).unwrap();
                    assert!(close(m.swap_ratio(&s, t, u).unwrap(), w(&x) / base), "{name}: swap {t}->{u} at {mask:#b}");
                }
            } else {
                let mut a = s.clone();
                a.insert(t).unwrap();
                assert!(close(m.add_ratio(&s, t).unwrap(), w(&a) / base), "{name}: add {t} to {mask:#b}");
            }
        }
    }
}

#[test]
fn ratios_match_weight_quotients() {
    for n in 1..=8 {
        for f in fixtures(n) {
            assert_ratios_consistent(&f.name, &*f.measure);
        }
    }
}

#[test]
fn homogenization_ratios_match_weight_quotients() {
    for n in 1..=4 {
        assert_ratios_consistent("sh(diag)", &symmetric_homogenization(diagonal_dpp(n)).unwrap());
        assert_ratios_consistent("sh(product)", &symmetric_homogenization(product(n)).unwrap());
    }
}

#[test]
fn shadow_marginal_recovers_base() {
    for n in 1..=5 {
        for f in fixtures(n) {
            let base = enumerate_distribution(&*f.measure).unwrap();
            let sh = symmetric_homogenization(&*f.measure).unwrap();
            let lifted = enumerate_distribution(&sh).unwrap();
            let projected = marginalize_shadow(&lifted).unwrap();
            for (mask, (&got, &want)) in projected.iter().zip(base.probabilities()).enumerate() {
                assert!((got - want).abs() <= 1e-12, "{}: mask {mask:#b}", f.name);
            }
        }
    }
}

#[test]
fn conditioning_leaves_only_one_shell() {
    let c = CardinalityConditioned::new(product(5), 2).unwrap();
    let d = enumerate_distribution(&c).unwrap();
    for (mask, &p) in d.probabilities().iter().enumerate() {
        assert_eq!(p > 0.0, mask.count_ones() == 2);
    }
    let s = SubsetState::from_members(5, &[0, 1]).unwrap();
    assert_eq!(c.delete_ratio(&s, 0).unwrap(), 0.0);
    assert_eq!(c.add_ratio(&s, 4).unwrap(), 0.0);
    assert!(c.swap_ratio(&s, 0, 4).unwrap() > 0.0);
}

proptest! {
    #[test]
    fn product_weight_factorizes(q in prop::collection::vec(0.01f64..0.99, 1..10), mask in any::<u64>()) {
        let n = q.len();
        let mask = mask & ((1u64 << n) - 1);
        let m = ProductMeasure::new(q.clone()).unwrap();
        let want: f64 = (0..n).map(|i| if mask >> i & 1 == 1 { q[i] } else { 1.0 - q[i] }).product();
        let got = m.log_weight(&SubsetState::from_mask(n, mask)).unwrap().weight();
        prop_assert!((got - want).abs() <= 1e-12 * want);
    }
}
