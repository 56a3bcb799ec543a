use hypdim::cocycle::{product_stats, MatrixCocycle, Orientation};
use hypdim::dimension::{bracket_sequence, bracket_violations};
use hypdim::geometry::{box_count, sample_invariant_set, HorseshoeModel};
use hypdim::pressure::{additive_pressure, block_pressure, free_energy, EdgePotential, PotentialSpec, SingularKind};
use hypdim::symbolic::{
    enumerate_words, markov_entropy, topological_entropy, Budget, MarkovMeasure, SubshiftSpec, Word,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SLACK: f64 = 1e-10;

fn spec_strategy() -> impl Strategy<Value = SubshiftSpec> {
    prop_oneof![
        Just(SubshiftSpec::full_shift(2)),
        Just(SubshiftSpec::full_shift(3)),
        Just(SubshiftSpec::golden_mean()),
        Just(SubshiftSpec::new(vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 1]]).unwrap()),
    ]
}

/// Invertible 2x2 generators, rescaled so the smallest singular value is `floor`.
fn generators(n: usize, floor: f64) -> impl Strategy<Value = Vec<DMatrix<f64>>> {
    prop::collection::vec(prop::array::uniform4(-2.0f64..2.0), n).prop_filter_map("well conditioned", move |raw| {
        raw.iter()
            .map(|a| {
                let m = DMatrix::from_row_slice(2, 2, a);
                let sv = m.clone().singular_values();
                (sv.min() > 0.05 && sv.max() / sv.min() < 50.0).then(|| m * (floor / sv.min()))
            })
            .collect()
    })
}

/// An admissible word of the given length, driven by `choices`.
fn word_from_choices(spec: &SubshiftSpec, choices: &[usize]) -> Vec<usize> {
    let q = spec.alphabet_size();
    let mut w = vec![choices[0] % q];
    for &c in &choices[1..] {
        let next: Vec<usize> = (0..q).filter(|&t| spec.allowed(*w.last().unwrap(), t)).collect();
        w.push(next[c % next.len()]);
    }
    w
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn singular_values_are_sub_and_super_additive(
        spec in spec_strategy(),
        gens in generators(3, 0.7),
        choices in prop::collection::vec(0usize..6, 2..40),
        split in 1usize..39,
    ) {
        let q = spec.alphabet_size();
        let c = MatrixCocycle::new(Orientation::Unstable, gens[..q].to_vec()).unwrap();
        let w = word_from_choices(&spec, &choices);
        let k = split.min(w.len() - 1);
        let stats = |s: &[usize]| product_stats(&c, &Word::new(&spec, s.to_vec()).unwrap()).unwrap();
        let (u, v, uv) = (stats(&w[..k]), stats(&w[k..]), stats(&w));
        prop_assert!(uv.log_norm <= u.log_norm + v.log_norm + SLACK);
        prop_assert!(uv.log_conorm >= u.log_conorm + v.log_conorm - SLACK);
        prop_assert!((uv.log_abs_det - u.log_abs_det - v.log_abs_det).abs() <= 1e-9);
        for s in [u, v, uv] {
            prop_assert!(s.sandwich_holds(SLACK));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn block_pressure_strictly_decreasing_and_ordered(
        spec in spec_strategy(),
        gens in generators(3, 1.3),
        k in 0u32..3,
    ) {
        let q = spec.alphabet_size();
        let c = MatrixCocycle::new(Orientation::Unstable, gens[..q].to_vec()).unwrap();
        let budget = Budget::default();
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for g in 0..50 {
            let t = 3.0 * g as f64 / 49.0;
            let n = block_pressure(&spec, &c, t, k, SingularKind::Norm, &budget).unwrap().value;
            let m = block_pressure(&spec, &c, t, k, SingularKind::Conorm, &budget).unwrap().value;
            prop_assert!(n < prev.0 && m < prev.1);
            prop_assert!(n <= m + SLACK);
            prev = (n, m);
        }
    }

    #[test]
    fn brackets_are_nested(spec in spec_strategy(), gens in generators(3, 1.3)) {
        let q = spec.alphabet_size();
        let c = MatrixCocycle::new(Orientation::Unstable, gens[..q].to_vec()).unwrap();
        let rows = bracket_sequence(&spec, &c, 3, 1e-11, &Budget::default()).unwrap();
        prop_assert!(bracket_violations(&rows, 1e-9).is_empty(), "{:?}", bracket_violations(&rows, 1e-9));
    }

    #[test]
    fn stable_bundle_duality(spec in spec_strategy(), gens in generators(3, 1.3)) {
        // roots of the stable potentials equal those of the inverse over the reversed coding
        let q = spec.alphabet_size();
        let contracting: Vec<DMatrix<f64>> = gens[..q].iter().map(|g| g.clone().try_inverse().unwrap()).collect();
        let st = MatrixCocycle::new(Orientation::Stable, contracting).unwrap();
        let budget = Budget::default();
        let direct = bracket_sequence(&spec, &st, 2, 1e-12, &budget).unwrap();
        let dual = bracket_sequence(&spec.reversed(), &st.inverse(), 2, 1e-12, &budget).unwrap();
        for (a, b) in direct.iter().zip(&dual) {
            prop_assert!((a.lower.t - b.lower.t).abs() < 1e-9);
            prop_assert!((a.upper.t - b.upper.t).abs() < 1e-9);
        }
    }

    #[test]
    fn word_counts_match_enumeration(spec in spec_strategy(), n in 1usize..9) {
        let words: Vec<Word> = enumerate_words(&spec, n, &Budget::default()).unwrap().collect();
        prop_assert_eq!(words.len() as u128, spec.word_count(n));
        prop_assert!(words.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(words.iter().all(|w| spec.is_admissible(w.symbols())));
    }

    #[test]
    fn variational_inequality(spec in spec_strategy(), seed in any::<u64>(), vals in prop::collection::vec(-2.0f64..2.0, 9)) {
        let q = spec.alphabet_size();
        let pot = EdgePotential::from_fn(&spec, |i, j| vals[i * q + j]).unwrap();
        let p = additive_pressure(&spec, &pot).unwrap().value;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = MarkovMeasure::random(&spec, &mut rng).unwrap();
        let fe = free_energy(&spec, &m, &PotentialSpec::Edge(pot), 1, &Budget::default()).unwrap();
        prop_assert!(fe <= p + 1e-9);
        prop_assert!(markov_entropy(&m) <= topological_entropy(&spec).unwrap() + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn box_counts_monotone_and_slope_in_range(mu in 2.2f64..6.0, lambda in 0.1f64..0.45, seed in any::<u64>()) {
        let m = HorseshoeModel::linear(2, mu, lambda).unwrap();
        let cloud = sample_invariant_set(&m, 7, Some(seed), &Budget::default()).unwrap();
        let scales: Vec<f64> = (2..9).map(|j| 2f64.powi(-j)).collect();
        let r = box_count(&cloud, &scales).unwrap();
        prop_assert!(r.counts.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(r.slope >= 0.0 && r.slope <= 2.0);
        let again = sample_invariant_set(&m, 7, Some(seed), &Budget::default()).unwrap();
        prop_assert_eq!(cloud, again);
    }
}
