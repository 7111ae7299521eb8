//! Property tests for rank rows, descriptors and the BRS/RRS dissimilarities.

use proptest::prelude::*;
use relattr::rank_descriptor::{rank_row, RankMatrix, StrengthList, TiePolicy};
use relattr::similarity::{brs, rrs};
use relattr::{build_descriptor, AttributeModel, FeatureVector, PrototypeSet, RankDescriptor};

/// rank_k = 1 + #{strictly greater} + #{equal with smaller index}.
fn oracle_ranks(values: &[f64]) -> Vec<u16> {
    (0..values.len())
        .map(|k| {
            let greater = values.iter().filter(|&&v| v > values[k]).count();
            let ties_before = values[..k].iter().filter(|&&v| v == values[k]).count();
            (1 + greater + ties_before) as u16
        })
        .collect()
}

/// Strength lists drawn from a small value pool so that ties and ±0 occur.
fn strength_values() -> impl Strategy<Value = Vec<f64>> {
    let pool = prop_oneof![
        Just(0.0),
        Just(-0.0),
        Just(1.0),
        Just(-1.0),
        Just(0.5),
        -3.0..3.0f64,
    ];
    prop::collection::vec(pool, 1..=16).prop_map(|mut v| {
        v.insert(0, 0.0);
        v
    })
}

fn descriptor(rows: Vec<Vec<u16>>) -> RankDescriptor {
    let m = rows.len();
    let n = rows[0].len() - 1;
    RankDescriptor::new(
        (0..m).map(|j| format!("a{j}")).collect(),
        (0..n).map(|i| format!("p{i}")).collect(),
        RankMatrix::from_rows(rows).unwrap(),
    )
    .unwrap()
}

fn permutation_row(n_plus_one: usize) -> impl Strategy<Value = Vec<u16>> {
    Just((1..=n_plus_one as u16).collect::<Vec<_>>()).prop_shuffle()
}

fn descriptor_triple() -> impl Strategy<Value = (RankDescriptor, RankDescriptor, RankDescriptor)> {
    (1usize..=6, 1usize..=9).prop_flat_map(|(m, n)| {
        let one = || prop::collection::vec(permutation_row(n + 1), m);
        (one(), one(), one()).prop_map(|(a, b, c)| (descriptor(a), descriptor(b), descriptor(c)))
    })
}

fn double_loop_rrs(a: &RankDescriptor, b: &RankDescriptor) -> f64 {
    let mut sum = 0i64;
    for j in 0..a.num_attributes() {
        for i in 0..=a.num_prototypes() {
            sum += (a.ranks().row(j)[i] as i64 - b.ranks().row(j)[i] as i64).abs();
        }
    }
    sum as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn rank_row_matches_oracle(values in strength_values()) {
        let list = StrengthList::new(0, values.clone()).unwrap();
        let row = rank_row(&list, TiePolicy::StableIndex);
        prop_assert_eq!(&row, &oracle_ranks(&values));
        let mut sorted = row.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (1..=values.len() as u16).collect::<Vec<_>>());
    }

    #[test]
    fn rank_row_is_monotone_invariant(
        values in strength_values(),
        scale in 0.01..100.0f64,
        shift in -10.0..10.0f64,
    ) {
        // x ↦ scale·x³ + x is strictly increasing; the shifted list keeps 0 at
        // the query by subtracting the transformed query value.
        let f = |x: f64| scale * x * x * x + x + shift;
        let fq = f(values[0]);
        let transformed: Vec<f64> = values.iter().map(|&x| f(x) - fq).collect();
        let before = rank_row(&StrengthList::new(0, values).unwrap(), TiePolicy::StableIndex);
        let after = rank_row(&StrengthList::new(0, transformed).unwrap(), TiePolicy::StableIndex);
        prop_assert_eq!(before, after);
    }

    #[test]
    fn pseudometric_laws((a, b, c) in descriptor_triple()) {
        for d in [brs, rrs] {
            let ab = d(&a, &b).unwrap().value;
            prop_assert_eq!(ab, d(&b, &a).unwrap().value);
            prop_assert_eq!(d(&a, &a).unwrap().value, 0.0);
            prop_assert!(ab >= 0.0);
            prop_assert!(ab <= d(&a, &c).unwrap().value + d(&c, &b).unwrap().value);
        }
        let m = a.num_attributes() as f64;
        let n = a.num_prototypes() as f64;
        let brs_ab = brs(&a, &b).unwrap().value;
        prop_assert!(brs_ab <= m * n);
        prop_assert!(brs_ab <= rrs(&a, &b).unwrap().value);
        prop_assert_eq!(rrs(&a, &b).unwrap().value, double_loop_rrs(&a, &b));
    }
}

/// Tiny deterministic generator for the non-proptest loops below.
struct Lcg(u64);

impl Lcg {
    fn next_f64(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn random_models(rng: &mut Lcg, m: usize, dim: usize) -> Vec<AttributeModel> {
    (0..m)
        .map(|j| {
            let w = (0..dim).map(|_| rng.next_f64() * 2.0 - 1.0).collect();
            AttributeModel::from_weights(format!("a{j}"), w).unwrap()
        })
        .collect()
}

fn random_image(rng: &mut Lcg, id: &str, dim: usize) -> FeatureVector {
    FeatureVector::new(
        id,
        (0..dim).map(|_| rng.next_f64() * 4.0 - 2.0).collect(),
        None,
    )
    .unwrap()
}

#[test]
fn six_by_nine_descriptors_are_permutations() {
    let mut rng = Lcg(42);
    for trial in 0..200 {
        let models = random_models(&mut rng, 6, 5);
        let protos = PrototypeSet::new(
            (0..8)
                .map(|i| random_image(&mut rng, &format!("p{i}"), 5))
                .collect(),
            "random",
        )
        .unwrap();
        let d = build_descriptor(&models, &random_image(&mut rng, "q", 5), &protos).unwrap();
        assert_eq!((d.num_attributes(), d.num_prototypes()), (6, 8));
        for j in 0..6 {
            let mut row = d.ranks().row(j).to_vec();
            row.sort_unstable();
            assert_eq!(row, (1..=9).collect::<Vec<u16>>(), "trial {trial}");
        }
    }
}

#[test]
fn tie_order_does_not_depend_on_insertion_order() {
    // Prototypes p1 and p3 tie with each other; swapping their feature
    // vectors between the slots must not change any rank.
    let model = [AttributeModel::from_weights("a", vec![1.0, 1.0]).unwrap()];
    let make = |p1: [f64; 2], p3: [f64; 2]| {
        PrototypeSet::new(
            vec![
                FeatureVector::new("p1", p1.to_vec(), None).unwrap(),
                FeatureVector::new("p2", vec![5.0, 5.0], None).unwrap(),
                FeatureVector::new("p3", p3.to_vec(), None).unwrap(),
            ],
            "",
        )
        .unwrap()
    };
    let q = FeatureVector::new("q", vec![0.0, 0.0], None).unwrap();
    let a = build_descriptor(&model, &q, &make([1.0, 2.0], [2.0, 1.0])).unwrap();
    let b = build_descriptor(&model, &q, &make([2.0, 1.0], [1.0, 2.0])).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.ranks().row(0), [4, 2, 1, 3]);
}

#[test]
fn brs_only_sees_stronger_weaker_outcomes() {
    // The query's rank is 1 + the number of prototypes strictly stronger
    // than the query, so BRS can be computed from binary comparisons alone.
    let mut rng = Lcg(7);
    for _ in 0..300 {
        let models = random_models(&mut rng, 4, 3);
        let protos = PrototypeSet::new(
            (0..6)
                .map(|i| random_image(&mut rng, &format!("p{i}"), 3))
                .collect(),
            "",
        )
        .unwrap();
        let qa = random_image(&mut rng, "qa", 3);
        let qb = random_image(&mut rng, "qb", 3);
        let da = build_descriptor(&models, &qa, &protos).unwrap();
        let db = build_descriptor(&models, &qb, &protos).unwrap();

        let mut from_counts = 0i64;
        for (j, m) in models.iter().enumerate() {
            let stronger = |q: &FeatureVector| {
                let sq = m.strength(q).unwrap();
                protos
                    .prototypes()
                    .iter()
                    .filter(|p| m.strength(p).unwrap() > sq)
                    .count() as i64
            };
            assert_eq!(da.query_rank(j) as i64, 1 + stronger(&qa));
            from_counts += (stronger(&qa) - stronger(&qb)).abs();
        }
        assert_eq!(brs(&da, &db).unwrap().value, from_counts as f64);
    }
}

#[test]
fn rrs_is_twice_brs_against_shared_prototypes() {
    // Score-difference strengths fix the prototypes' mutual order, so a row
    // is determined by where the query is inserted; moving the query by d
    // places shifts exactly d prototype ranks by one.
    let mut rng = Lcg(99);
    for _ in 0..300 {
        let models = random_models(&mut rng, 6, 4);
        let protos = PrototypeSet::new(
            (0..8)
                .map(|i| random_image(&mut rng, &format!("p{i}"), 4))
                .collect(),
            "",
        )
        .unwrap();
        let a = build_descriptor(&models, &random_image(&mut rng, "a", 4), &protos).unwrap();
        let b = build_descriptor(&models, &random_image(&mut rng, "b", 4), &protos).unwrap();
        assert_eq!(rrs(&a, &b).unwrap().value, 2.0 * brs(&a, &b).unwrap().value);
    }
}
