mod common;

use std::collections::{BTreeMap, HashMap};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_mtl, random_prop_trace, random_small_trace, random_trace};
use skorokhod::conformance::{
    nelder_mead_maximize, run_conformance_test, InputParameterization, NelderMeadOptions, TestConfig,
};
use skorokhod::engine::{check_within, compute_distance, endpoint_lower_bound, WindowParam};
use skorokhod::logic::{
    evaluate, k_bound, parse_formula, rational_to_f64, relax, to_nnf, ConstraintFunction, Domain, Formula, Node,
    Rational, Relation, RelaxationContext,
};
use skorokhod::systems::{DelayFn, FnSystem, LqrPitchModel, TwoTankModel};
use skorokhod::trace::{
    booleanize, parse_csv, pointwise_distance, write_csv, PolygonalTrace, Predicate, PropositionalTrace, SampledTrace,
    ScalingProfile,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn sampling_is_exact_at_knots(seed in any::<u64>(), dim in 1usize..4) {
        let tr = random_small_trace(&mut rng(seed), dim);
        for (k, &t) in tr.knots().iter().enumerate() {
            prop_assert_eq!(tr.sample_at(t).unwrap(), tr.knot_value(k).to_vec());
        }
    }

    #[test]
    fn scaling_round_trips(seed in any::<u64>(), time in 0.01f64..100.0, f0 in 0.01f64..100.0, f1 in 0.01f64..100.0) {
        let tr = random_small_trace(&mut rng(seed), 2);
        let p = ScalingProfile::new(time, vec![f0, f1]).unwrap();
        let back = tr.scale(&p).unwrap().scale(&p.reciprocal()).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0);
        for (a, b) in tr.samples().rows().zip(back.samples().rows()) {
            prop_assert!(close(a.0, b.0));
            for (x, y) in a.1.iter().zip(b.1) {
                prop_assert!(close(*x, *y));
            }
        }
    }

    #[test]
    fn pointwise_distance_is_a_metric(seed in any::<u64>()) {
        let mut r = rng(seed);
        let next = |r: &mut ChaCha8Rng| {
            let segments = r.random_range(1..=6);
            random_trace(r, segments, 2, 0.0, 3.0)
        };
        let (a, b, c) = (next(&mut r), next(&mut r), next(&mut r));
        let ab = pointwise_distance(&a, &b).unwrap();
        prop_assert_eq!(ab, pointwise_distance(&b, &a).unwrap());
        prop_assert_eq!(pointwise_distance(&a, &a).unwrap(), 0.0);
        let (ac, cb) = (pointwise_distance(&a, &c).unwrap(), pointwise_distance(&c, &b).unwrap());
        prop_assert!(ab <= ac + cb + 1e-9);
    }

    #[test]
    fn full_restriction_and_suffix_are_identities(seed in any::<u64>()) {
        let tr = random_small_trace(&mut rng(seed), 2);
        let (lo, hi) = tr.domain();
        prop_assert_eq!(&tr.restrict(hi).unwrap(), &tr);
        prop_assert_eq!(&tr.suffix(lo).unwrap(), &tr);
    }

    #[test]
    fn booleanize_partitions_the_domain(seed in any::<u64>(), c in -2.0f64..2.0) {
        let tr = random_small_trace(&mut rng(seed), 2);
        let preds = [
            Predicate::affine("A", vec![1.0, 0.0], -c, Relation::Ge),
            Predicate::affine("B", vec![1.0, -1.0], 0.0, Relation::Lt),
            Predicate::blackbox("C", 2, Relation::Le, |x| x[0].abs() + x[1].abs() - 1.5),
        ];
        let b = booleanize(&tr, &preds).unwrap();
        let bp = b.breakpoints();
        prop_assert!(bp.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!((bp[0], bp[bp.len() - 1]), tr.domain());
        prop_assert_eq!(b.letters().len(), bp.len() - 1);
    }

    #[test]
    fn csv_round_trips(seed in any::<u64>(), dim in 1usize..4) {
        let tr = random_small_trace(&mut rng(seed), dim).into_samples();
        let mut buf = Vec::new();
        write_csv(&tr, &mut buf).unwrap();
        prop_assert_eq!(parse_csv(&buf).unwrap(), tr);
    }
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn check_is_monotone_in_delta(seed in any::<u64>(), d1 in 0.0f64..2.0, extra in 0.0f64..2.0, w in 0usize..4) {
        let mut r = rng(seed);
        let (a, b) = (random_small_trace(&mut r, 2), random_small_trace(&mut r, 2));
        let window = if w == 0 { WindowParam::Unbounded } else { WindowParam::Finite(w) };
        if check_within(&a, &b, d1, window).unwrap() {
            prop_assert!(check_within(&a, &b, d1 + extra, window).unwrap());
        }
    }

    #[test]
    fn distance_brackets_the_decision(seed in any::<u64>(), w in 0usize..4) {
        let mut r = rng(seed);
        let (a, b) = (random_small_trace(&mut r, 2), random_small_trace(&mut r, 2));
        let window = if w == 0 { WindowParam::Unbounded } else { WindowParam::Finite(w + a.segments().abs_diff(b.segments())) };
        let tol = 1e-5;
        let d = compute_distance(&a, &b, window, tol).unwrap().distance;
        prop_assert!(check_within(&a, &b, d + tol, window).unwrap());
        if d - tol > 0.0 {
            prop_assert!(!check_within(&a, &b, d - tol, window).unwrap());
        }
        prop_assert!(d >= endpoint_lower_bound(&a, &b) - tol);
    }

    #[test]
    fn wider_windows_never_increase_distance(seed in any::<u64>(), w in 1usize..4) {
        let mut r = rng(seed);
        let (a, b) = (random_small_trace(&mut r, 1), random_small_trace(&mut r, 1));
        let w = w + a.segments().abs_diff(b.segments());
        let tol = 1e-5;
        let narrow = compute_distance(&a, &b, WindowParam::Finite(w), tol).unwrap().distance;
        let wide = compute_distance(&a, &b, WindowParam::Finite(w + 1), tol).unwrap().distance;
        let free = compute_distance(&a, &b, WindowParam::Unbounded, tol).unwrap().distance;
        prop_assert!(wide <= narrow + 2.0 * tol);
        prop_assert!(free <= wide + 2.0 * tol);
    }

    #[test]
    fn distance_is_below_pointwise(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (sa, sb) = (r.random_range(1..=6), r.random_range(1..=6));
        let (a, b) = (random_trace(&mut r, sa, 2, 0.0, 3.0), random_trace(&mut r, sb, 2, 0.0, 3.0));
        let tol = 1e-5;
        let d = compute_distance(&a, &b, WindowParam::Unbounded, tol).unwrap().distance;
        prop_assert!(d <= pointwise_distance(&a, &b).unwrap() + 2.0 * tol);
    }

    #[test]
    fn distance_is_symmetric_and_deterministic(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b) = (random_small_trace(&mut r, 2), random_small_trace(&mut r, 2));
        let tol = 1e-5;
        let ab = compute_distance(&a, &b, WindowParam::Unbounded, tol).unwrap().distance;
        let ba = compute_distance(&b, &a, WindowParam::Unbounded, tol).unwrap().distance;
        prop_assert!((ab - ba).abs() <= 2.0 * tol);
        let again = compute_distance(&a, &b, WindowParam::Unbounded, tol).unwrap().distance;
        prop_assert_eq!(ab.to_bits(), again.to_bits());
    }
}

/// Brute-force truth over alternating grid points and the open cells between
/// them: position `2k` is the time `k * STEP` and position `2k + 1` stands
/// for the open cell after it, represented by its midpoint. With breakpoints
/// and interval bounds on the grid and no bounded operator nested inside
/// another, every subformula has constant truth on each cell, so this is
/// exact.
struct GridOracle<'a> {
    trace: &'a PropositionalTrace,
    last: usize,
    memo: HashMap<MemoKey, bool>,
}

type MemoKey = (*const Node, usize, Vec<(String, usize)>);

const STEP: f64 = 0.25;

fn time_of(pos: usize) -> f64 {
    pos as f64 * STEP / 2.0
}

impl GridOracle<'_> {
    fn holds(&mut self, node: &Node, t: usize, env: &mut BTreeMap<String, usize>) -> bool {
        let key = (
            node as *const Node,
            t,
            env.iter().map(|(k, v)| (k.clone(), *v)).collect(),
        );
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let v = match node {
            Node::True => true,
            Node::False => false,
            Node::Prop(p) => self.trace.letter_at(time_of(t)).unwrap().contains(p),
            Node::Not(a) => !self.holds(a, t, env),
            Node::And(a, b) => self.holds(a, t, env) && self.holds(b, t, env),
            Node::Or(a, b) => self.holds(a, t, env) || self.holds(b, t, env),
            Node::Until(a, b) | Node::WaitingFor(a, b) => {
                let mut result = matches!(node, Node::WaitingFor(..));
                for s in t..=self.last {
                    let needs_a = s != t && s % 2 == 1;
                    if self.holds(b, s, env) && (!needs_a || self.holds(a, s, env)) {
                        result = true;
                        break;
                    }
                    if !self.holds(a, s, env) {
                        result = false;
                        break;
                    }
                }
                result
            }
            Node::Freeze(x, body) => {
                let saved = env.insert(x.clone(), t);
                let v = self.holds(body, t, env);
                match saved {
                    Some(s) => env.insert(x.clone(), s),
                    None => env.remove(x),
                };
                v
            }
            Node::Time(c) => c.rel.holds(c.f.eval(&|name| time_of(env[name]))),
            Node::Signal(_) => unreachable!("no signals on propositional traces"),
        };
        self.memo.insert(key, v);
        v
    }
}

fn grid_truth(phi: &Formula, trace: &PropositionalTrace) -> bool {
    let mut oracle = GridOracle {
        trace,
        last: 2 * (trace.domain().1 / STEP).round() as usize,
        memo: HashMap::new(),
    };
    oracle.holds(&phi.root, 0, &mut BTreeMap::new())
}

fn freeze_nesting(n: &Node) -> usize {
    let own = usize::from(matches!(n, Node::Freeze(..)));
    own + n.children().into_iter().map(freeze_nesting).max().unwrap_or(0)
}

fn constants(phi: &Formula) -> Vec<(Relation, Rational)> {
    phi.root
        .constraints()
        .into_iter()
        .filter_map(|n| match n {
            Node::Time(c) | Node::Signal(c) => Some((c.rel, c.f.constant())),
            _ => None,
        })
        .collect()
}

proptest! {
    #![proptest_config(config(96))]

    #[test]
    fn evaluation_matches_grid_oracle(seed in any::<u64>()) {
        let mut r = rng(seed);
        let trace = random_prop_trace(&mut r, 8, 6.0).retime(|t| 0.5 * t).unwrap();
        let phi = parse_formula(&random_mtl(&mut r, 4, &["P", "Q", "R"])).unwrap();
        prop_assume!(freeze_nesting(&phi.root) <= 2);
        prop_assert_eq!(evaluate(&phi, &trace, &[]).unwrap(), grid_truth(&phi, &trace), "{}", phi);
    }

    #[test]
    fn bounded_operands_of_until_match_grid_oracle(seed in any::<u64>()) {
        let mut r = rng(seed);
        let trace = random_prop_trace(&mut r, 8, 6.0).retime(|t| 0.5 * t).unwrap();
        let operand = |r: &mut ChaCha8Rng| {
            let a = r.random_range(0..4) as f64 * 0.5;
            let b = a + r.random_range(0..3) as f64 * 0.5;
            let letter = ["P", "Q", "R"][r.random_range(0..3)];
            let op = ["F", "G", "!F", "!G"][r.random_range(0..4)];
            format!("({op}[{a},{b}] {letter})")
        };
        let text = format!("{} U {}", operand(&mut r), operand(&mut r));
        let phi = parse_formula(&text).unwrap();
        prop_assert_eq!(evaluate(&phi, &trace, &[]).unwrap(), grid_truth(&phi, &trace), "{}", text);
    }

    #[test]
    fn nnf_preserves_truth(seed in any::<u64>()) {
        let mut r = rng(seed);
        let trace = random_prop_trace(&mut r, 8, 6.0);
        let phi = parse_formula(&random_mtl(&mut r, 4, &["P", "Q", "R"])).unwrap();
        let nnf = to_nnf(&phi);
        prop_assert!(nnf.is_nnf());
        prop_assert_eq!(evaluate(&phi, &trace, &[]).unwrap(), evaluate(&nnf, &trace, &[]).unwrap());
    }

    #[test]
    fn relax_is_a_relaxation(seed in any::<u64>(), delta in 0.0f64..1.0) {
        let mut r = rng(seed);
        let trace = random_prop_trace(&mut r, 8, 6.0);
        let nnf = to_nnf(&parse_formula(&random_mtl(&mut r, 4, &["P", "Q", "R"])).unwrap());
        let relaxed = relax(&nnf, &RelaxationContext::new(delta, Domain::new(0.0, 6.0).unwrap())).unwrap();
        if evaluate(&nnf, &trace, &[]).unwrap() {
            prop_assert!(evaluate(&relaxed, &trace, &[]).unwrap());
        }
    }

    #[test]
    fn relax_keeps_skeleton_and_is_monotone(seed in any::<u64>(), d1 in 0.0f64..1.0, extra in 0.0f64..1.0) {
        let mut r = rng(seed);
        let nnf = to_nnf(&parse_formula(&random_mtl(&mut r, 4, &["P", "Q", "R"])).unwrap());
        let domain = Domain::new(0.0, 6.0).unwrap();
        let small = relax(&nnf, &RelaxationContext::new(d1, domain)).unwrap();
        let large = relax(&nnf, &RelaxationContext::new(d1 + extra, domain)).unwrap();
        prop_assert_eq!(small.root.skeleton(), nnf.root.skeleton());
        prop_assert_eq!(large.root.skeleton(), nnf.root.skeleton());
        for ((rel, cs), (_, cl)) in constants(&small).into_iter().zip(constants(&large)) {
            if rel.is_upper() {
                prop_assert!(cl <= cs);
            } else {
                prop_assert!(cl >= cs);
            }
        }
    }
}

fn rational(x: i64, scale: i64) -> Rational {
    Rational::new(x.into(), scale.into())
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn k_bound_properties(
        coeffs in prop::collection::vec(-20i64..20, 1..4),
        quad in prop::collection::vec(-5i64..5, 3),
        widths in prop::collection::vec(1i64..8, 3),
        d1 in 0.0f64..3.0,
        extra in 0.0f64..3.0,
    ) {
        let names = ["a", "b", "c"];
        let domains: BTreeMap<String, Domain> = names
            .iter()
            .zip(&widths)
            .map(|(n, &w)| (n.to_string(), Domain::new(0.0, w as f64 * 0.5).unwrap()))
            .collect();
        let affine = ConstraintFunction::affine(
            names.iter().zip(&coeffs).map(|(n, &c)| (*n, rational(c, 4))),
            rational(3, 1),
        );
        let quadratic = parse_formula(&format!(
            "a.b.({} * (a - b) * (a - b) + {} * a * b + {} * b >= 0)",
            quad[0], quad[1], quad[2]
        ))
        .unwrap();
        let quadratic = match &quadratic.root.constraints()[..] {
            [Node::Time(c)] => c.f.clone(),
            other => panic!("unexpected constraints {other:?}"),
        };
        for f in [&affine, &quadratic] {
            prop_assert_eq!(k_bound(f, 0.0, &domains).unwrap(), rational(0, 1));
            let k1 = k_bound(f, d1, &domains).unwrap();
            let k2 = k_bound(f, d1 + extra, &domains).unwrap();
            prop_assert!(k1 <= k2);
        }
        let range: f64 = match &affine {
            ConstraintFunction::Affine(a) => a
                .coeffs
                .iter()
                .map(|(v, c)| rational_to_f64(c).abs() * domains[v].hi)
                .sum(),
            _ => unreachable!(),
        };
        prop_assert!(rational_to_f64(&k_bound(&affine, d1 + extra, &domains).unwrap()) <= range + 1e-12);
    }

    #[test]
    fn nelder_mead_best_is_monotone_and_in_bounds(
        seed in any::<u64>(),
        centre in prop::collection::vec(-3.0f64..3.0, 2),
    ) {
        let bounds = [(-1.0, 2.0), (-2.0, 1.0)];
        let opts = NelderMeadOptions { max_evals: 60, seed, ..NelderMeadOptions::default() };
        let result = nelder_mead_maximize(
            |p| -(p[0] - centre[0]).powi(2) - (p[1] - centre[1]).powi(2),
            &bounds,
            &opts,
        )
        .unwrap();
        let best: Vec<f64> = result.log.iter().filter_map(|e| e.best_so_far).collect();
        prop_assert!(best.windows(2).all(|w| w[0] <= w[1]));
        for e in &result.log {
            for (x, (lo, hi)) in e.params.iter().zip(bounds) {
                prop_assert!(*x >= lo && *x <= hi);
            }
        }
    }
}

fn offset_system(name: &str, gain: f64) -> FnSystem {
    FnSystem::new(name, 1, 1, move |u, _| {
        let vals = u.values_flat().iter().map(|v| gain * v * v).collect();
        Ok(SampledTrace::new(u.timestamps().to_vec(), vals, 1)?)
    })
}

proptest! {
    #![proptest_config(config(8))]

    #[test]
    fn conformance_is_deterministic(seed in any::<u64>(), gain in 0.5f64..2.0) {
        let ip = InputParameterization::piecewise_constant(3, (-1.0, 1.0), 3.0, 0.25).unwrap();
        let mut cfg = TestConfig::new(10.0, 12);
        cfg.seed = seed;
        let (a, b) = (offset_system("a", 1.0), offset_system("b", gain));
        let r1 = run_conformance_test(&a, &b, &ip, &cfg).unwrap();
        let r2 = run_conformance_test(&a, &b, &ip, &cfg).unwrap();
        prop_assert_eq!(r1.to_json(), r2.to_json());
        let logged = r1.log.iter().filter_map(|r| r.cost).fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(r1.max_cost, Some(logged));
        for rec in &r1.log {
            prop_assert!(rec.params.iter().all(|p| (-1.0..=1.0).contains(p)));
        }
    }

    #[test]
    fn two_tank_is_step_size_independent_and_causal(
        inflow in 0.9f64..1.2,
        d1 in 0.3f64..0.4,
        d2 in 0.3f64..0.4,
    ) {
        let m = TwoTankModel::new(inflow, [d1, d2], [1.0, 1.0], [2.0, 2.0]);
        let coarse = m.clone().with_output_period(0.1).run(10.0).unwrap().trace;
        let fine = m.clone().with_output_period(0.05).run(10.0).unwrap().trace;
        let fine = PolygonalTrace::from(fine);
        for (t, v) in coarse.rows() {
            for (x, y) in v.iter().zip(fine.sample_at(t).unwrap()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
        let half = m.clone().with_output_period(0.1).run(5.0).unwrap().trace;
        for (k, (t, v)) in half.rows().enumerate() {
            prop_assert_eq!(t, coarse.timestamps()[k]);
            prop_assert_eq!(v, coarse.value(k));
        }
        let zero = m.clone().with_delay(DelayFn::Constant { seconds: 0.0 }).with_output_period(0.1).run(10.0).unwrap();
        prop_assert_eq!(zero.trace, coarse);
    }

    #[test]
    fn lqr_is_causal(level in -1.0f64..1.0, sampled in any::<bool>()) {
        let model = if sampled { LqrPitchModel::sampled_data(0.1) } else { LqrPitchModel::continuous() };
        let reference = SampledTrace::from_rows(&[0.0, 4.0], &[vec![level], vec![level]]).unwrap();
        let full = model.simulate_pitch(&reference, 4.0).unwrap();
        let half = model.simulate_pitch(&reference, 2.0).unwrap();
        let full = PolygonalTrace::from(full);
        for (t, v) in half.rows() {
            prop_assert!((full.sample_at(t).unwrap()[0] - v[0]).abs() <= 1e-6);
        }
    }
}
