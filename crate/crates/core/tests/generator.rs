use backhaul_core::io::{generate_synthetic, parse_scenario, path_gain, write_scenario, GeneratorParams};
use backhaul_core::model::{validate_scenario, NodeKind};
use proptest::prelude::*;

fn params(seed: u64, nonroot: usize, root: usize, nf: usize) -> GeneratorParams {
    GeneratorParams {
        seed,
        num_nonroot: nonroot,
        num_root: root,
        num_subchannels: nf,
        num_access_subchannels: nf / 2,
        ..Default::default()
    }
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_scenarios_round_trip(seed in any::<u64>(), nonroot in 1usize..6, root in 1usize..3, nf in 1usize..5) {
        let Ok(s) = generate_synthetic(&params(seed, nonroot, root, nf)) else { return Ok(()) };
        let bytes = write_scenario(&s);
        let back = parse_scenario(&bytes).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(write_scenario(&back), bytes);
    }

    #[test]
    fn generation_is_deterministic(seed in any::<u64>(), nonroot in 0usize..6) {
        let p = params(seed, nonroot, 1, 2);
        let a = generate_synthetic(&p).map(|s| write_scenario(&s));
        let b = generate_synthetic(&p).map(|s| write_scenario(&s));
        prop_assert_eq!(a.ok(), b.ok());
    }

    #[test]
    fn generated_scenarios_are_valid(seed in any::<u64>(), nonroot in 1usize..7, nf in 1usize..5) {
        let p = params(seed, nonroot, 1, nf);
        let Ok(s) = generate_synthetic(&p) else { return Ok(()) };
        prop_assert!(validate_scenario(&s).is_empty());
        for link in &s.links {
            let (a, b) = (&s.nodes[link.from], &s.nodes[link.to]);
            prop_assert!(!(a.kind == NodeKind::Root && b.kind == NodeKind::Root));
            prop_assert!(distance(a.position, b.position) <= p.max_link_distance_m);
        }
        for node in s.roots() {
            prop_assert_eq!((node.rate_ul, node.rate_dl), (0.0, 0.0));
        }
    }

    #[test]
    fn desired_gain_falls_with_distance(seed in any::<u64>()) {
        let Ok(s) = generate_synthetic(&params(seed, 5, 1, 1)) else { return Ok(()) };
        let d: Vec<f64> = s.links.iter().map(|l| distance(s.nodes[l.from].position, s.nodes[l.to].position)).collect();
        for i in 0..s.links.len() {
            for j in 0..s.links.len() {
                if d[i].max(1.0) < d[j].max(1.0) {
                    prop_assert!(s.gains.lambda[i][0] > s.gains.lambda[j][0]);
                }
            }
        }
    }

    #[test]
    fn path_gain_is_decreasing(d in 1.0f64..1e4, k in 1.0001f64..10.0, alpha in 2.0f64..4.0) {
        prop_assert!(path_gain(d * k, 28e9, alpha) < path_gain(d, 28e9, alpha));
    }
}

#[test]
fn seeds_change_the_draw() {
    let a = write_scenario(&generate_synthetic(&params(1, 4, 1, 2)).unwrap());
    let b = write_scenario(&generate_synthetic(&params(2, 4, 1, 2)).unwrap());
    assert_ne!(a, b);
}
