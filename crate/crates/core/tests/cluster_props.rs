mod common;

use std::collections::BTreeSet;

use hyperdimer::cluster::{covariance_identities, ClusterContext, SwapMask};
use hyperdimer::height::tiling_of;
use hyperdimer::lattice::loops_through;
use hyperdimer::{Edge, Error, ExactWeights, Vertex};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn swap_invariants(seed in any::<u64>(), d in 2usize..4, size in 2usize..7) {
        let mut rng = StdRng::seed_from_u64(seed);
        let bc = common::random_boundary(&mut rng, common::dim(d), size);
        let ctx = ClusterContext::new(&bc).unwrap();
        let all = bc.enumerate().unwrap();
        let f1 = &all[rng.random_range(0..all.len())];
        let f2 = &all[rng.random_range(0..all.len())];
        let lsd = ctx.build_lsd(f1, f2).unwrap();

        // every loop meets the support in zero or two edges
        let support: BTreeSet<Edge> = lsd.support_edges().into_iter().collect();
        for e in bc.region().incident_edges() {
            for s in loops_through(&e) {
                let hits = s.edges().iter().filter(|f| support.contains(f)).count();
                prop_assert!(hits == 0 || hits == 2, "loop meets V_g {} times", hits);
            }
        }
        prop_assert_eq!(lsd.level_count(), lsd.boundaries.len() + 1);

        let mask = SwapMask::random(&lsd, &mut rng);
        let (g1, g2) = ctx.swap(f1, f2, &mask).unwrap();
        prop_assert!(bc.contains(&g1) && bc.contains(&g2));
        let window: BTreeSet<Vertex> = bc.region().iter().cloned().chain(bc.region().boundary()).collect();
        for x in &window {
            prop_assert_eq!(g1.value(x) + g2.value(x), f1.value(x) + f2.value(x));
        }

        // the tilings exchange exactly the edges of M
        let flipped: BTreeSet<Edge> = mask
            .selected
            .iter()
            .flat_map(|&b| lsd.boundaries[b].edges.iter().map(|&i| ctx.graph().edges[i].clone()))
            .collect();
        let (t1, t2) = (tiling_of(f1).unwrap(), tiling_of(f2).unwrap());
        let (u1, u2) = (tiling_of(&g1).unwrap(), tiling_of(&g2).unwrap());
        for e in bc.region().incident_edges() {
            let flip = flipped.contains(&e);
            prop_assert_eq!(u1.contains(&e), t1.contains(&e) != flip);
            prop_assert_eq!(u2.contains(&e), t2.contains(&e) != flip);
        }

        let lsd2 = ctx.build_lsd(&g1, &g2).unwrap();
        prop_assert_eq!(lsd2.unoriented(), lsd.unoriented());
        let mask2 = SwapMask::from_edges(&lsd2, &flipped).unwrap();
        let (h1, h2) = ctx.swap(&g1, &g2, &mask2).unwrap();
        prop_assert_eq!(&h1, f1);
        prop_assert_eq!(&h2, f2);
    }

    #[test]
    fn lsd_distance_bounds_separating_boundaries(seed in any::<u64>(), size in 2usize..7) {
        let mut rng = StdRng::seed_from_u64(seed);
        let bc = common::random_boundary(&mut rng, common::dim(2), size);
        let ctx = ClusterContext::new(&bc).unwrap();
        let all = bc.enumerate().unwrap();
        let f1 = &all[rng.random_range(0..all.len())];
        let f2 = &all[rng.random_range(0..all.len())];
        let lsd = ctx.build_lsd(f1, f2).unwrap();
        let span = bc.reference().dim().span();
        for x in bc.region().iter() {
            let separating = (0..lsd.boundaries.len()).filter(|&b| lsd.separates(b, x)).count();
            prop_assert_eq!(separating, lsd.lsd_distance(x));
            prop_assert!((f1.value(x) - f2.value(x)).abs() <= span * lsd.lsd_distance(x) as i64);
        }
    }
}

#[test]
fn partial_boundaries_are_rejected() {
    let mut rng = StdRng::seed_from_u64(2);
    for _ in 0..50 {
        let bc = common::random_boundary(&mut rng, common::dim(2), 5);
        let ctx = ClusterContext::new(&bc).unwrap();
        let all = bc.enumerate().unwrap();
        let (f1, f2) = (&all[0], &all[all.len() - 1]);
        let lsd = ctx.build_lsd(f1, f2).unwrap();
        if let Some(b) = lsd.boundaries.first() {
            let one: BTreeSet<Edge> = BTreeSet::from([ctx.graph().edges[b.edges[0]].clone()]);
            assert!(matches!(SwapMask::from_edges(&lsd, &one), Err(Error::NotUnionOfBoundaries(_))));
            return;
        }
    }
    panic!("no pair with a boundary found");
}

#[test]
fn identities_hold_exactly_on_random_regions() {
    let mut rng = StdRng::seed_from_u64(13);
    for d in [2, 3] {
        for _ in 0..4 {
            let bc = common::random_boundary(&mut rng, common::dim(d), 4);
            let w = if rng.random_bool(0.5) {
                ExactWeights::uniform()
            } else {
                common::random_weights(&mut rng, bc.region())
            };
            let sites: Vec<Vertex> = bc.region().iter().cloned().collect();
            let pairs: Vec<(Vertex, Vertex)> = sites
                .iter()
                .flat_map(|x| sites.iter().map(move |y| (x.clone(), y.clone())))
                .collect();
            for r in covariance_identities(&bc, &w, &pairs, 24).unwrap() {
                assert!(r.equal, "{r:?}");
            }
        }
    }
}
