use qrforms::degree::*;
use qrforms::forms::GridDomain;
use qrforms::qr::{identity, winding2d, winding3d, Region};
use qrforms::Error;

fn square(lo: f64, hi: f64, n: usize) -> GridDomain {
    GridDomain::cube(2, lo, hi, n).unwrap()
}

/// The k roots of `r e^{ikθ} = y` in closed form.
fn winding_roots(k: u32, y: &[f64]) -> Vec<Vec<f64>> {
    let r = y[0].hypot(y[1]);
    let t = y[1].atan2(y[0]);
    (0..k)
        .map(|j| {
            let a = (t + 2.0 * std::f64::consts::PI * j as f64) / k as f64;
            vec![r * a.cos(), r * a.sin()]
        })
        .collect()
}

#[test]
fn preimages_match_root_enumeration() {
    let scan = square(-1.0, 1.0, 49);
    for k in [2, 3, 5] {
        let f = winding2d(k).unwrap();
        for y in [[0.3, 0.4], [-0.55, 0.1], [0.05, -0.7]] {
            let fiber = preimage_count(&f, &y, &Region::disk(1.0), &scan).unwrap();
            assert_eq!(fiber.count, k as usize, "k={k} y={y:?}");
            assert!(!fiber.unstable);
            for root in winding_roots(k, &y) {
                let best = fiber
                    .points
                    .iter()
                    .map(|p| (p.x[0] - root[0]).hypot(p.x[1] - root[1]))
                    .fold(f64::INFINITY, f64::min);
                assert!(best < 1e-8, "{best}");
            }
            for p in &fiber.points {
                assert!(p.residual <= 1e-8);
            }
        }
    }
}

#[test]
fn empty_and_branch_fibers() {
    let scan = square(-1.0, 1.0, 49);
    let f = winding2d(3).unwrap();
    assert_eq!(
        preimage_count(&f, &[1.5, 1.5], &Region::disk(1.0), &scan)
            .unwrap()
            .count,
        0
    );
    assert_eq!(
        preimage_count(&f, &[0.0, 0.0], &Region::disk(1.0), &scan)
            .unwrap()
            .count,
        1
    );
}

#[test]
fn local_indices() {
    assert_eq!(
        local_index_2d(&identity(2).unwrap(), &[0.2, 0.3], 0.1)
            .unwrap()
            .index,
        1
    );
    for k in [1, 2, 3, 5] {
        let f = winding2d(k).unwrap();
        let a = local_index_2d(&f, &[0.0, 0.0], 0.2).unwrap();
        let b = local_index_2d(&f, &[0.0, 0.0], 0.01).unwrap();
        assert_eq!(a.index, k as i64);
        assert_eq!(b.index, k as i64);
        assert!(a.residual < 0.1);
        for x in [[0.4, 0.1], [-0.3, -0.5]] {
            assert_eq!(local_index_2d(&f, &x, 0.05).unwrap().index, 1);
        }
    }
    // planar factor of the 3D winding map
    let f = winding3d(4).unwrap();
    assert_eq!(local_index_2d(&f, &[0.0, 0.0, 0.3], 0.1).unwrap().index, 4);
}

#[test]
fn index_shrinks_when_circle_meets_other_preimages() {
    // circle of radius 1.2 around (0.5, 0) encloses the other preimage (-0.5, 0)
    let f = winding2d(2).unwrap();
    let li = local_index_2d(&f, &[0.5, 0.0], 1.2).unwrap();
    assert_eq!(li.index, 1);
    assert!(li.radius < 1.0);
}

#[test]
fn degree_sum_identity() {
    let scan = square(-1.0, 1.0, 49);
    let ys = vec![
        vec![0.0, 0.0],
        vec![0.3, 0.1],
        vec![-0.2, 0.5],
        vec![0.1, -0.6],
        vec![0.98, 0.0],
    ];
    let rep = degree_sum_check(&identity(2).unwrap(), &Region::disk(1.0), &scan, &ys).unwrap();
    assert_eq!(rep.degree, Some(1));
    for k in [2, 3, 5] {
        let rep = degree_sum_check(&winding2d(k).unwrap(), &Region::disk(1.0), &scan, &ys).unwrap();
        assert_eq!(rep.degree, Some(k as i64));
        assert!(rep.counts_match);
        assert_eq!(rep.excluded, vec![vec![0.98, 0.0]]);
        assert_eq!(rep.fibers[0].indices, vec![k as i64]);
        for fib in &rep.fibers[1..] {
            assert_eq!(fib.count, k as usize);
            assert!(fib.indices.iter().all(|&i| i == 1));
        }
    }
}

#[test]
fn multiplicity_constant_off_critical_values() {
    // N(f, y, U) on a 64² target grid for winding2d(2) on the unit disk
    let f = winding2d(2).unwrap();
    let solver = PreimageSolver::new(&f, &Region::disk(1.0), &square(-1.0, 1.0, 49)).unwrap();
    let target = square(-1.2, 1.2, 64);
    let h = target.max_spacing();
    for i in 0..target.node_count() {
        let y = target.point(i);
        let r = y[0].hypot(y[1]);
        // skip the rasterized critical values {0} ∪ f(∂U)
        if r < 2.0 * h || (r - 1.0).abs() < 2.0 * h {
            continue;
        }
        let n = solver.multiplicity(&y);
        assert_eq!(n, if r < 1.0 { 2.0 } else { 0.0 }, "{y:?}");
    }
}

#[test]
fn normal_neighborhoods() {
    let g = square(-1.0, 1.0, 129);
    let id = identity(2).unwrap();
    let nb = normal_neighborhood(&id, &[0.1, -0.1], 0.2, &g).unwrap();
    // the grid ball itself
    let expected = (0..g.node_count())
        .filter(|&i| {
            let p = g.point(i);
            (p[0] - 0.1).hypot(p[1] + 0.1) < 0.2
        })
        .count();
    assert_eq!(nb.nodes.len(), expected);
    assert_eq!(nb.fiber_points, 1);

    let f = winding2d(2).unwrap();
    let g = square(-1.0, 1.0, 321);
    let nb = normal_neighborhood(&f, &[0.0, 0.0], 0.3, &g).unwrap();
    assert_eq!(nb.coverage, 1.0);
    assert!(nb.boundary_ok, "{:?}", nb.boundary_range);
    // winding maps preserve |x|, so the component is the grid disk of radius 0.3
    let disk = (0..g.node_count())
        .filter(|&i| {
            let p = g.point(i);
            p[0].hypot(p[1]) < 0.3
        })
        .count();
    assert_eq!(nb.nodes.len(), disk);
    // image covers B(0, 0.3·0.95)
    assert!(0.3 - 2.0 * g.max_spacing() >= 0.3 * 0.95 - 1e-12);

    let diams: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&r| normal_neighborhood(&f, &[0.3, 0.2], r, &g).unwrap().diameter)
        .collect();
    assert!(diams[0] > diams[1] && diams[1] > diams[2], "{diams:?}");
}

#[test]
fn normal_neighborhood_rejects_large_radius() {
    let f = winding2d(2).unwrap();
    let g = square(-1.0, 1.0, 65);
    // B(f(x), 0.7) pulls back to a set holding both preimages of f(x)
    assert!(matches!(
        normal_neighborhood(&f, &[0.4, 0.0], 0.7, &g),
        Err(Error::RadiusTooLarge(_))
    ));
    assert!(matches!(
        normal_neighborhood(&f, &[0.0, 0.0], 1.2, &g),
        Err(Error::RadiusTooLarge(_))
    ));
    let lim = normal_radius_limit(&f, &[0.4, 0.0], 0.8, 16, &g).unwrap();
    assert!(lim < 0.45 && lim > 0.2, "{lim}");
}

#[test]
fn branch_sets() {
    for n in [33, 65, 129] {
        let g = square(-1.0, 1.0, n);
        assert!(branch_set_sample(&identity(2).unwrap(), &g)
            .unwrap()
            .nodes
            .is_empty());
        let b = branch_set_sample(&winding2d(3).unwrap(), &g).unwrap();
        let h = g.max_spacing();
        assert!(b.measure <= 4.0 * h * h);
        for &i in &b.nodes {
            let p = g.point(i);
            assert!(p[0].hypot(p[1]) <= h);
        }
    }
    let mut prev = f64::INFINITY;
    for n in [9, 17, 33] {
        let g = GridDomain::cube(3, -1.0, 1.0, n).unwrap();
        let b = branch_set_sample(&winding3d(2).unwrap(), &g).unwrap();
        assert_eq!(b.nodes.len(), n);
        let h = g.max_spacing();
        assert!(b.measure <= 3.0 * h * h);
        assert!(b.measure < prev);
        prev = b.measure;
    }
}
