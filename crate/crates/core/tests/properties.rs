mod common;

use proptest::prelude::*;

use hkdelta::gauge::{gauge_min, DeltaGauge};
use hkdelta::integrator::{hk_integrate, riemann_sum, EngineConfig, FnIntegrand};
use hkdelta::partition::{cousin_partition, fineness_report, random_fine_partition, Coverage, TaggedPartition};
use hkdelta::riesz::{regulator_eval, EvalMap, LatticeElement, LatticeSpace, Regulator};

fn element(dim: usize) -> impl Strategy<Value = LatticeElement> {
    prop::collection::vec(-1e3..1e3f64, dim).prop_map(|c| LatticeElement::from_coords(&c).unwrap())
}

fn triple() -> impl Strategy<Value = (LatticeElement, LatticeElement, LatticeElement)> {
    (1usize..5).prop_flat_map(|d| (element(d), element(d), element(d)))
}

fn regulator() -> impl Strategy<Value = Regulator> {
    (1usize..4, 0.1..0.9f64).prop_flat_map(|(d, base)| {
        prop::collection::vec(prop::collection::vec(0.0..10.0f64, d), 1..5).prop_map(move |rows| {
            let rows = rows.iter().map(|c| LatticeElement::from_coords(c).unwrap()).collect();
            Regulator::new(LatticeSpace::for_dim(d).unwrap(), base, rows).unwrap()
        })
    })
}

fn eval_map() -> impl Strategy<Value = EvalMap> {
    (prop::collection::vec(1u32..12, 0..6), 1u32..12).prop_map(|(v, t)| EvalMap::new(v, t).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lattice_laws((a, b, c) in triple()) {
        let j = a.join(&b).unwrap();
        let m = a.meet(&b).unwrap();
        prop_assert!(m.le(&a).unwrap() && a.le(&j).unwrap());
        prop_assert_eq!(j.clone(), b.join(&a).unwrap());
        prop_assert_eq!(a.join(&b.join(&c).unwrap()).unwrap(), j.join(&c).unwrap());
        prop_assert_eq!(a.meet(&a.join(&b).unwrap()).unwrap(), a.clone());
        // x ∨ y + x ∧ y = x + y holds exactly coordinatewise.
        prop_assert_eq!(j.add(&m).unwrap(), a.add(&b).unwrap());
        let d1 = a.meet(&b.join(&c).unwrap()).unwrap();
        let d2 = m.join(&a.meet(&c).unwrap()).unwrap();
        prop_assert_eq!(d1, d2);
        prop_assert_eq!(a.abs(), a.positive_part().add(&a.neg().positive_part()).unwrap());
    }

    #[test]
    fn regulator_eval_is_antitone_in_phi(r in regulator(), phi in eval_map(), bump in prop::collection::vec(0u32..4, 6), tail in 0u32..4) {
        let raised: Vec<u32> = (0..6).map(|i| phi.at(i + 1) + bump[i]).collect();
        let psi = EvalMap::new(raised, phi.tail_value() + tail).unwrap();
        let lo = regulator_eval(&r, &psi);
        let hi = regulator_eval(&r, &phi);
        prop_assert!(lo.is_nonnegative());
        prop_assert!(lo.le(&hi).unwrap(), "{} > {}", lo, hi);
        prop_assert!(hi.le(&regulator_eval(&r, &EvalMap::constant(1))).unwrap());
    }

    #[test]
    fn jump_operators(seed in any::<u64>(), x in 0.0..1.0f64) {
        let t = common::random_scale(&mut common::rng(seed));
        let whole = t.whole().unwrap();
        let p = whole.nearest(t.min() + x * (t.max() - t.min()));
        prop_assert!(t.contains(p));
        let s = t.sigma(p).unwrap();
        let r = t.rho(p).unwrap();
        prop_assert!(t.contains(s) && t.contains(r));
        prop_assert!(r <= p && p <= s);
        prop_assert_eq!(t.mu(p).unwrap(), s - p);
        if s > p {
            prop_assert_eq!(t.rho(s).unwrap(), p);
        }
        if r < p {
            prop_assert_eq!(t.sigma(r).unwrap(), p);
        }
        let q = whole.nearest(t.min() + (x * 0.5) * (t.max() - t.min()));
        prop_assert!(q <= p);
        prop_assert!(t.sigma(q).unwrap() <= s && t.rho(q).unwrap() <= r);
    }

    #[test]
    fn partitions_are_full_and_fine(seed in any::<u64>(), dl in 1e-3..2.0f64, dr in 1e-3..2.0f64, draw in any::<u64>()) {
        let interval = common::random_interval(&mut common::rng(seed));
        let g = DeltaGauge::constant(interval.clone(), dl, dr).unwrap();
        for p in [cousin_partition(&g).unwrap(), random_fine_partition(&g, draw).unwrap()] {
            prop_assert_eq!(p.classify(&interval).unwrap(), Coverage::Full);
            let cert = fineness_report(&p, &g).unwrap();
            prop_assert!(cert.fine, "{:?}", cert.first_violation);
        }
        prop_assert_eq!(random_fine_partition(&g, draw).unwrap(), random_fine_partition(&g, draw).unwrap());
    }

    #[test]
    fn finer_gauge_partitions_are_fine_for_coarser(seed in any::<u64>(), h in 1e-2..1.0f64, k in 0.1..1.0f64) {
        let interval = common::random_interval(&mut common::rng(seed));
        let coarse = DeltaGauge::constant(interval.clone(), h, h).unwrap();
        let fine = DeltaGauge::constant(interval.clone(), h * k, h).unwrap();
        let both = gauge_min(&coarse, &fine).unwrap();
        let p = cousin_partition(&both).unwrap();
        prop_assert!(fineness_report(&p, &coarse).unwrap().fine);
        prop_assert!(fineness_report(&p, &fine).unwrap().fine);
    }

    #[test]
    fn sums_of_constants_are_exact(seed in any::<u64>(), h in 1e-2..1.0f64, c in -8i32..8) {
        let interval = common::random_interval(&mut common::rng(seed));
        let g = DeltaGauge::constant(interval.clone(), h, h).unwrap();
        let c = c as f64 * 0.125;
        let f = FnIntegrand::scalar(move |_| c);
        let s = riemann_sum(&f, &random_fine_partition(&g, seed).unwrap(), &interval).unwrap().coords()[0];
        let t = riemann_sum(&f, &cousin_partition(&g).unwrap(), &interval).unwrap().coords()[0];
        // Lengths telescope exactly: every partition gives the rounded c·(b − a).
        prop_assert_eq!(s.to_bits(), t.to_bits());
        let naive = c * (interval.b() - interval.a());
        prop_assert!((s - naive).abs() <= 2.0 * f64::EPSILON * naive.abs());
    }

    #[test]
    fn sums_are_additive_over_concatenation(seed in any::<u64>(), h in 1e-2..1.0f64, x in 0.0..1.0f64) {
        let interval = common::random_interval(&mut common::rng(seed));
        let c = interval.nearest(interval.a() + x * interval.length());
        prop_assume!(interval.a() < c && c < interval.b());
        let left = interval.sub(interval.a(), c).unwrap();
        let right = interval.sub(c, interval.b()).unwrap();
        let p1 = cousin_partition(&DeltaGauge::constant(left.clone(), h, h).unwrap()).unwrap();
        let p2 = random_fine_partition(&DeltaGauge::constant(right.clone(), h, h).unwrap(), seed).unwrap();
        let f = FnIntegrand::scalar(|t| (3.0 * t).sin() + t * t);
        let joined = TaggedPartition::new(p1.items.iter().chain(&p2.items).copied().collect());
        prop_assert_eq!(joined.classify(&interval).unwrap(), Coverage::Full);
        let whole = riemann_sum(&f, &joined, &interval).unwrap().coords()[0];
        let parts = riemann_sum(&f, &p1, &left).unwrap().coords()[0] + riemann_sum(&f, &p2, &right).unwrap().coords()[0];
        prop_assert!((whole - parts).abs() <= 4.0 * f64::EPSILON * whole.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn constants_integrate_at_level_zero(seed in any::<u64>(), c in 1i32..16) {
        let interval = common::random_interval(&mut common::rng(seed));
        let c = c as f64 * 0.25;
        let f = FnIntegrand::scalar(move |_| c).smooth();
        let r = hk_integrate(&f, &interval, &LatticeElement::scalar(1e-12), &EngineConfig::with_seed(seed)).unwrap();
        prop_assert!(r.converged);
        prop_assert_eq!(r.level, 0);
        prop_assert!(r.spread.is_zero());
        let naive = c * (interval.b() - interval.a());
        prop_assert!((r.value.coords()[0] - naive).abs() <= 2.0 * f64::EPSILON * naive);
    }

    #[test]
    fn engine_is_deterministic(seed in any::<u64>()) {
        let interval = common::random_interval(&mut common::rng(seed));
        let f = FnIntegrand::scalar(|t| t.cos()).smooth();
        let tol = LatticeElement::scalar(1e-3);
        let cfg = EngineConfig::with_seed(seed);
        let a = hk_integrate(&f, &interval, &tol, &cfg).unwrap();
        let b = hk_integrate(&f, &interval, &tol, &cfg).unwrap();
        prop_assert_eq!(a.to_json().to_string(), b.to_json().to_string());
    }
}
