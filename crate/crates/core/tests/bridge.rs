use std::collections::BTreeMap;

use treeramsey::bridge::{binomial, increasing_tuples, is_homogeneous, IntSource};
use treeramsey::*;

fn reference_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn reference_tuple_color(seed: u64, tuple: &[usize], k: u32) -> u32 {
    let acc = tuple.iter().fold(0u64, |acc, &x| reference_mix(acc ^ x as u64));
    (reference_mix(seed ^ acc) % u64::from(k)) as u32
}

/// Homogeneity checked over every `n`-subset, written without library help.
fn homogeneous(f: &IntTupleColoring, set: &[usize], color: u32) -> bool {
    let m = set.len();
    let n = f.n();
    (0u32..1 << m).filter(|mask| mask.count_ones() as usize == n).all(|mask| {
        let tuple: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| set[i]).collect();
        f.eval(&tuple).unwrap() == color
    })
}

fn table(domain: usize, n: usize, color: impl Fn(&[usize]) -> u32) -> IntTupleColoring {
    let entries: BTreeMap<Vec<usize>, u32> = increasing_tuples(domain, n).into_iter().map(|t| {
        let c = color(&t);
        (t, c)
    }).collect();
    IntTupleColoring::new(n, 2, domain, IntSource::Table(entries)).unwrap()
}

#[test]
fn lifted_values_follow_lengths() {
    for seed in 0..20u64 {
        let f = IntTupleColoring::seeded(2, 3, 8, seed).unwrap();
        let g = lift_length_coloring(&f, 3).unwrap();
        for c in enumerate_chains(&TruncatedTree::full(3), 2, None) {
            let lengths: Vec<usize> = c.nodes().iter().map(|x| x.len()).collect();
            assert_eq!(g.eval(&c).unwrap(), reference_tuple_color(seed, &lengths, 3));
        }
    }
    let f = IntTupleColoring::seeded(2, 3, 4, 0).unwrap();
    assert!(lift_length_coloring(&f, 4).is_err());
    assert!(lift_length_coloring(&f, 3).is_ok());
}

#[test]
fn parity_lift_example() {
    let f = table(6, 2, |t| ((t[0] + t[1]) % 2) as u32);
    let g = lift_length_coloring(&f, 3).unwrap();
    let c = Chain::new(vec![BitString::root(), "0".parse().unwrap()]).unwrap();
    assert_eq!(g.eval(&c).unwrap(), 1);
}

#[test]
fn constant_lift_is_constant() {
    let f = IntTupleColoring::from_fn(3, 2, 7, |_| 1).unwrap();
    let g = lift_length_coloring(&f, 5).unwrap();
    assert!(enumerate_chains(&TruncatedTree::full(5), 3, None).iter().all(|c| g.eval(c).unwrap() == 1));
}

#[test]
fn rt_solutions_verify_by_enumeration() {
    let mut successes = 0;
    for n in 1..=2 {
        for k in 1..=2u32 {
            for domain in [8usize, 12, 16] {
                for seed in 0..6u64 {
                    let f = IntTupleColoring::seeded(n, k, domain, seed).unwrap();
                    for m in n..=3 {
                        match rt_solve(&f, m, domain - 1) {
                            Ok(sol) => {
                                assert_eq!(sol.set.len(), m);
                                assert!(sol.set.windows(2).all(|w| w[0] < w[1]));
                                assert!(homogeneous(&f, &sol.set, sol.color), "{:?}", sol.set);
                                if let Some((c, set)) = brute_force_rt(&f, m, u128::MAX).unwrap() {
                                    assert!(homogeneous(&f, &set, c));
                                }
                                successes += 1;
                            }
                            Err(e) => assert!(e.is_depth_exhausted(), "{e}"),
                        }
                    }
                }
            }
        }
    }
    assert!(successes > 50, "{successes}");
}

#[test]
fn constant_colorings_through_the_tree() {
    let f = IntTupleColoring::from_fn(1, 2, 5, |_| 1).unwrap();
    let sol = rt_solve(&f, 3, 4).unwrap();
    assert_eq!((sol.color, sol.set), (1, vec![0, 1, 2]));

    // each reduction spends a level on its witness root
    let f = IntTupleColoring::from_fn(2, 2, 8, |_| 0).unwrap();
    let sol = rt_solve(&f, 3, 7).unwrap();
    assert_eq!((sol.color, sol.set), (0, vec![0, 2, 4]));
}

#[test]
fn parity_colorings_through_the_tree() {
    let f = table(16, 2, |t| ((t[0] + t[1]) % 2) as u32);
    let sol = rt_solve(&f, 3, 15).unwrap();
    assert!(homogeneous(&f, &sol.set, sol.color));
    assert_eq!(sol.color, 0);
    let parity = sol.set[0] % 2;
    assert!(sol.set.iter().all(|x| x % 2 == parity));
}

#[test]
fn rt_solve_rejects_bad_requests() {
    let f = IntTupleColoring::seeded(2, 2, 6, 1).unwrap();
    assert!(rt_solve(&f, 1, 5).is_err());
    assert!(rt_solve(&f, 3, 6).is_err());
}

#[test]
fn extraction_reads_the_leftmost_path() {
    assert_eq!(extract_homogeneous_set(&Embedding::identity(2), 3).unwrap(), vec![0, 1, 2]);
    let images = ["00", "00101", "0011", "001011011", "0010111", "00110", "00111"];
    let w = Embedding::new(2, images.iter().map(|s| s.parse().unwrap()).collect()).unwrap();
    assert!(verify_embedding(&w, &TruncatedTree::full(9)));
    assert_eq!(extract_homogeneous_set(&w, 3).unwrap(), vec![2, 5, 9]);
    assert!(extract_homogeneous_set(&w, 4).is_err());
}

#[test]
fn brute_force_rt_examples() {
    let f = IntTupleColoring::from_fn(2, 3, 9, |_| 2).unwrap();
    assert_eq!(brute_force_rt(&f, 4, u128::MAX).unwrap(), Some((2, vec![0, 1, 2, 3])));

    // rainbow-ish colors with a planted homogeneous set {1, 4, 6}
    let planted = [1usize, 4, 6];
    let f = IntTupleColoring::from_fn(2, 3, 8, |t| {
        if planted.contains(&t[0]) && planted.contains(&t[1]) {
            2
        } else {
            ((t[0] * 3 + t[1]) % 2) as u32
        }
    })
    .unwrap();
    let (c, set) = brute_force_rt(&f, 3, u128::MAX).unwrap().unwrap();
    assert!(homogeneous(&f, &set, c));
    assert!(is_homogeneous(&f, &planted, 2));

    // four points, no homogeneous four-set
    let f = table(4, 2, |t| u32::from(t[0] == 0 && t[1] == 1));
    assert_eq!(brute_force_rt(&f, 4, u128::MAX).unwrap(), None);
    assert!(matches!(brute_force_rt(&f, 2, 5), Err(Error::CapExceeded { .. })));
}

#[test]
fn ramsey_three_three_on_five_points_fails() {
    // the pentagon coloring of K5 has no monochromatic triangle
    let f = table(5, 2, |t| u32::from((t[1] - t[0]) % 5 == 1 || (t[1] - t[0]) % 5 == 4));
    assert_eq!(brute_force_rt(&f, 3, u128::MAX).unwrap(), None);
}

#[test]
fn binomials() {
    assert_eq!(binomial(6, 3), 20);
    assert_eq!(binomial(64, 32), 1832624140942590534);
    assert_eq!(binomial(3, 5), 0);
    for n in 0..12 {
        assert_eq!(increasing_tuples(n, 3).len() as u128, binomial(n, 3));
    }
}

#[test]
fn tuple_coloring_json() {
    let f = table(4, 2, |t| (t[0] % 2) as u32);
    let v = serde_json::to_value(&f).unwrap();
    assert_eq!(v["domain"], 4);
    assert_eq!(v["source"]["kind"], "table");
    assert_eq!(v["source"]["entries"][0], serde_json::json!([[0, 1], 0]));
    let back: IntTupleColoring = serde_json::from_value(v.clone()).unwrap();
    assert_eq!(serde_json::to_value(&back).unwrap(), v);
    let seeded: IntTupleColoring = serde_json::from_str(r#"{"n":2,"k":2,"domain":6,"source":{"kind":"seeded","seed":3}}"#).unwrap();
    assert_eq!(seeded.eval(&[1, 4]).unwrap(), reference_tuple_color(3, &[1, 4], 2));
    assert!(serde_json::from_str::<IntTupleColoring>(r#"{"n":2,"k":2,"domain":6,"source":{"kind":"table","entries":[[[4,1],0]]}}"#).is_err());
}
