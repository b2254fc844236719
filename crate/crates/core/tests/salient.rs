use nalgebra::Point3;
use proptest::prelude::*;
use skit_core::fusion::{log_odds, Extents, Terrain, VoxelGrid};
use skit_core::salient::{euclidean_clusters, salient_locations, threshold_grid};

/// Union-find over all pairs within `link`, as sorted member lists.
fn union_find_clusters(points: &[Point3<f64>], link: f64) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..points.len()).collect();
    fn root(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if (points[i] - points[j]).norm() <= link {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..points.len() {
        let r = root(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort();
    out
}

fn grid_with(cells: &[((i64, i64), f64)]) -> VoxelGrid {
    let mut g = VoxelGrid::new(Terrain::flat(Extents { x_min: 0.0, y_min: 0.0, x_max: 30.0, y_max: 30.0 }, 0.0), 1.0).unwrap();
    for &(idx, p) in cells {
        g.set_log_odds(idx, log_odds(p)).unwrap();
    }
    g
}

fn arb_points() -> impl Strategy<Value = Vec<Point3<f64>>> {
    proptest::collection::vec((0.0..20.0f64, 0.0..20.0f64, 0.0..2.0f64), 0..50)
        .prop_map(|v| v.into_iter().map(|(x, y, z)| Point3::new(x, y, z)).collect())
}

fn arb_cells() -> impl Strategy<Value = Vec<((i64, i64), f64)>> {
    proptest::collection::btree_map((0i64..30, 0i64..30), 0.05..0.97f64, 0..60).prop_map(|m| m.into_iter().collect())
}

proptest! {
    #[test]
    fn matches_union_find(points in arb_points(), link in 0.5..4.0f64) {
        prop_assert_eq!(euclidean_clusters(&points, link), union_find_clusters(&points, link));
    }

    #[test]
    fn partition_is_permutation_invariant(points in arb_points(), link in 0.5..4.0f64, shift in 0usize..50) {
        let n = points.len();
        if n > 0 {
            let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
            let shuffled: Vec<_> = perm.iter().map(|&i| points[i]).collect();
            let mut mapped: Vec<Vec<usize>> = euclidean_clusters(&shuffled, link)
                .into_iter()
                .map(|c| { let mut v: Vec<usize> = c.into_iter().map(|i| perm[i]).collect(); v.sort(); v })
                .collect();
            mapped.sort();
            prop_assert_eq!(mapped, euclidean_clusters(&points, link));
        }
    }

    #[test]
    fn higher_threshold_keeps_fewer_cells(cells in arb_cells(), t1 in 0.51..0.99f64, t2 in 0.51..0.99f64) {
        let g = grid_with(&cells);
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        let a = threshold_grid(&g, lo);
        let b = threshold_grid(&g, hi);
        prop_assert!(b.iter().all(|c| a.contains(c)));
    }

    #[test]
    fn locations_respect_threshold_and_hull(cells in arb_cells(), link in 1.0..3.0f64) {
        let g = grid_with(&cells);
        for s in salient_locations(&g, 0.75, link).unwrap() {
            prop_assert!(s.probability > 0.75);
            let xs: Vec<f64> = s.cells.iter().map(|&c| g.center(c).x).collect();
            let ys: Vec<f64> = s.cells.iter().map(|&c| g.center(c).y).collect();
            let lo = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min) - link;
            let hi = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max) + link;
            prop_assert!(s.position.x >= lo(&xs) && s.position.x <= hi(&xs));
            prop_assert!(s.position.y >= lo(&ys) && s.position.y <= hi(&ys));
        }
    }
}

#[test]
fn two_cells_average_their_probabilities() {
    let g = grid_with(&[((3, 3), 0.8), ((4, 3), 0.9), ((20, 20), 0.95)]);
    let s = salient_locations(&g, 0.75, 2.0).unwrap();
    assert_eq!(s.len(), 2);
    assert!((s[0].probability - 0.85).abs() < 1e-12);
    assert_eq!(s[1].cell_count, 1);
}
