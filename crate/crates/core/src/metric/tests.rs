use super::*;
use crate::geom::Line;
use crate::sampler::{sample_process, Road, WindowSpec};

fn v(c: &[f64]) -> Vector {
    Vector::new(c)
}

fn sample_with(roads: &[(&[f64], &[f64], f64)], v0: f64) -> ProcessSample {
    let window = WindowSpec::centered(2, 3.0, 10.0, v0).unwrap();
    let roads = roads
        .iter()
        .map(|&(p, d, speed)| Road {
            line: Line::through(&v(p), &v(d)).unwrap(),
            speed,
        })
        .collect();
    ProcessSample {
        window,
        roads,
        seed: 0,
    }
}

/// Grid search over entry and exit abscissas at resolution 1e-4 on [-1, 2].
const REFRACTION_ORACLE: f64 = 0.298997511675;

#[test]
fn empty_sample_is_a_straight_hop() {
    let s = sample_with(&[], 0.5);
    let cfg = SolverConfig::new(0.5);
    let (x, y) = (v(&[0.0, 0.0]), v(&[1.0, 0.0]));
    let g = TransferGraph::build(&s, &[x.clone(), y.clone()], &cfg, &Ingest::default()).unwrap();
    assert_eq!(g.node_count(), 2);
    assert_eq!(g.edge_count(), 1);
    assert!((g.edges[0].cost(0.5) - 2.0).abs() < 1e-15);
    let r = t_eps_upper(&s, &x, &y, &cfg).unwrap();
    assert_eq!(r.time, 2.0);
    assert_eq!(r.path.legs.len(), 1);
}

#[test]
fn shared_road_dominates() {
    let s = sample_with(&[(&[0.0, 0.0], &[1.0, 0.0], 2.0)], 0.01);
    let r = t_eps_upper(
        &s,
        &v(&[0.0, 0.0]),
        &v(&[1.0, 0.0]),
        &SolverConfig::new(0.01),
    )
    .unwrap();
    assert!((r.time - 0.5).abs() < 1e-12, "{}", r.time);
    assert_eq!(r.path.road_sequence(), vec![0]);
}

#[test]
fn refraction_matches_grid_oracle() {
    let s = sample_with(&[(&[0.0, 0.1], &[1.0, 0.0], 10.0)], 1.0);
    let (x, y) = (v(&[0.0, 0.0]), v(&[1.0, 0.0]));
    let r = t_eps_upper(&s, &x, &y, &SolverConfig::new(1.0)).unwrap();
    assert!((r.time - REFRACTION_ORACLE).abs() < 1e-3 * REFRACTION_ORACLE);
    assert!(r.time <= REFRACTION_ORACLE + 1e-6);
    r.path.validate(&s, 1.0).unwrap();
    let p = refine_path(&s, &[0], &x, &y, 1.0, 1e-10, 200).unwrap();
    assert!((p.total_time - REFRACTION_ORACLE).abs() < 1e-10 + 1e-6);
}

#[test]
fn refine_degenerate_sequences() {
    let s = sample_with(&[(&[0.0, 0.0], &[1.0, 0.0], 4.0)], 0.5);
    let (x, y) = (v(&[0.0, 0.0]), v(&[3.0, 0.0]));
    let p = refine_path(&s, &[], &x, &y, 0.5, 1e-10, 100).unwrap();
    assert_eq!(p.total_time, 6.0);
    let p = refine_path(&s, &[0], &x, &y, 0.5, 1e-10, 100).unwrap();
    assert!((p.total_time - 0.75).abs() < 1e-12);
    assert!(refine_path(&s, &[3], &x, &y, 0.5, 1e-10, 100).is_err());
}

#[test]
fn epsilon_below_truncation_is_rejected() {
    let s = sample_with(&[], 0.5);
    let err = t_eps_upper(
        &s,
        &v(&[0.0, 0.0]),
        &v(&[1.0, 0.0]),
        &SolverConfig::new(0.1),
    );
    assert!(matches!(err, Err(Error::InvalidConfig(_))));
    assert!(lower_certificate(&s, &v(&[0.0, 0.0]), &v(&[1.0, 0.0]), 0.1, 4).is_err());
}

#[test]
fn coincident_points() {
    let s = sample_with(&[(&[0.0, 0.3], &[1.0, 1.0], 4.0)], 0.5);
    let x = v(&[0.2, 0.7]);
    let r = t_eps_upper(&s, &x, &x, &SolverConfig::new(0.5)).unwrap();
    assert_eq!(r.time, 0.0);
    assert!(r.path.legs.is_empty());
}

#[test]
fn certificate_examples() {
    let (x, y) = (v(&[0.0, 0.0]), v(&[1.0, 0.0]));
    let s = sample_with(&[], 0.01);
    assert!((lower_certificate(&s, &x, &y, 0.01, 8).unwrap() - 100.0).abs() < 1e-12);
    let s = sample_with(&[(&[0.0, 0.0], &[0.0, 1.0], 5.0)], 0.01);
    // B(y, 1) touches the road; B(y, 1/2) does not.
    assert!((lower_certificate(&s, &x, &y, 0.01, 1).unwrap() - 0.2).abs() < 1e-12);
    assert!((lower_certificate(&s, &x, &y, 0.01, 6).unwrap() - 50.0).abs() < 1e-12);
    assert!((lower_certificate_exact(&s, &x, &y, 0.01).unwrap() - 100.0).abs() < 1e-12);
}

#[test]
fn kendall_examples() {
    let (x, y) = (v(&[0.0, 0.0]), v(&[1.0, 0.0]));
    let s = sample_with(&[], 0.25);
    let k = kendall_recursive_upper(&s, &x, &y, 0.25, 10, 0.25).unwrap();
    assert_eq!(k.time, 4.0);
    let s = sample_with(&[(&[0.0, 0.0], &[1.0, 0.0], 3.0)], 0.25);
    let k = kendall_recursive_upper(&s, &x, &y, 0.25, 10, 0.25).unwrap();
    assert!((k.time - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(k.junctions.len(), 2);
    assert!(kendall_recursive_upper(&s, &x, &y, 0.4, 10, 0.25).is_err());
}

fn random_sample(seed: u64, eps: f64) -> ProcessSample {
    let w = WindowSpec::centered(2, 3.0, 3.0, eps).unwrap();
    sample_process(seed, &w).unwrap()
}

#[test]
fn metric_axioms_and_sandwich_on_random_sample() {
    let eps = 0.3;
    let s = random_sample(7, eps);
    assert!(s.count() > 10);
    let mut cfg = SolverConfig::new(eps);
    let pts: Vec<Vector> = (0..6)
        .map(|i| {
            let a = i as f64 * 1.1;
            v(&[a.cos(), 0.8 * a.sin()])
        })
        .collect();
    for a in &pts {
        for b in &pts {
            let ab = t_eps_upper(&s, a, b, &cfg).unwrap();
            let ba = t_eps_upper(&s, b, a, &cfg).unwrap();
            assert!((ab.time - ba.time).abs() <= 1e-9 * ab.time.max(1e-300));
            ab.path.validate(&s, eps).unwrap();
            assert!(ab.time <= a.distance(b) / eps + 1e-12);
            let lo = lower_certificate(&s, a, b, eps, 12).unwrap();
            assert!(lo <= ab.time + 1e-12, "{lo} > {}", ab.time);
        }
    }
    cfg.ingest_recursive_junctions = true;
    for a in &pts {
        for b in &pts {
            let up = t_eps_upper(&s, a, b, &cfg).unwrap();
            let k = kendall_recursive_upper(&s, a, b, cfg.kendall_alpha, cfg.kendall_depth, eps)
                .unwrap();
            assert!(
                up.time <= k.time * (1.0 + 1e-12) + 1e-12,
                "{} > {}",
                up.time,
                k.time
            );
        }
    }
}

#[test]
fn slow_roads_are_irrelevant() {
    let s = sample_with(&[(&[0.0, 0.2], &[1.0, 0.1], 5.0)], 0.5);
    let mut t = s.clone();
    t.roads.push(Road {
        line: Line::through(&v(&[0.0, 0.0]), &v(&[1.0, 0.0])).unwrap(),
        speed: 0.5,
    });
    let cfg = SolverConfig::new(0.5);
    let (x, y) = (v(&[-1.0, 0.0]), v(&[2.0, 0.0]));
    let a = t_eps_upper(&s, &x, &y, &cfg).unwrap().time;
    let b = t_eps_upper(&t, &x, &y, &cfg).unwrap().time;
    assert!((a - b).abs() <= cfg.refine_tol);
}

#[test]
fn empty_field_is_euclidean() {
    let s = sample_with(&[], 0.5);
    let grid = GridSpec::centered([0.0, 0.0], 1.0, 21).unwrap();
    let x = v(&[0.05, -0.1]);
    let f = distance_field(&s, &x, &grid, &SolverConfig::new(0.5)).unwrap();
    for j in 0..21 {
        for i in 0..21 {
            assert_eq!(f.value(i, j), x.distance(&grid.pixel_center(i, j)) / 0.5);
        }
    }
    let area = ball_volume(&f, 0.0).unwrap().volume;
    assert!(area <= grid.pixel_area());
    let big = ball_volume(&f, 100.0).unwrap();
    assert!(big.boundary_contaminated);
}

#[test]
fn field_agrees_with_solver_near_roads() {
    let eps = 0.3;
    let s = random_sample(11, eps);
    let cfg = SolverConfig::new(eps);
    let x = v(&[0.0, 0.0]);
    let grid = GridSpec::centered([0.0, 0.0], 1.0, 9).unwrap();
    let f = distance_field(&s, &x, &grid, &cfg).unwrap();
    for j in 0..9 {
        for i in 0..9 {
            let p = grid.pixel_center(i, j);
            let lo = lower_certificate(&s, &x, &p, eps, 16).unwrap();
            let val = f.value(i, j);
            assert!(lo <= val + 1e-12);
            assert!(val <= x.distance(&p) / eps + 1e-12);
        }
    }
}

#[test]
fn path_dump_has_one_line_per_leg() {
    let s = sample_with(&[(&[0.0, 0.1], &[1.0, 0.0], 10.0)], 1.0);
    let r = t_eps_upper(
        &s,
        &v(&[0.0, 0.0]),
        &v(&[1.0, 0.0]),
        &SolverConfig::new(1.0),
    )
    .unwrap();
    let mut buf = Vec::new();
    r.path.write_text(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), r.path.legs.len());
    assert!(text.lines().nth(1).unwrap().starts_with("road:0 "));
}

#[test]
fn oracle_agrees_on_refraction() {
    let s = sample_with(&[(&[0.0, 0.1], &[1.0, 0.0], 10.0)], 1.0);
    let t = grid_oracle(&s, &v(&[0.0, 0.0]), &v(&[1.0, 0.0]), 1.0, 3).unwrap();
    assert!((t - REFRACTION_ORACLE).abs() < 1e-6, "{t}");
}

#[test]
fn node_tree_matches_brute_force() {
    let w = WindowSpec::centered(2, 3.0, 3.0, 0.2).unwrap();
    let s = sample_process(5, &w).unwrap();
    let cfg = SolverConfig::new(0.2);
    let g = TransferGraph::build(
        &s,
        &[v(&[0.0, 0.0]), v(&[1.0, 0.5])],
        &cfg,
        &Ingest::default(),
    )
    .unwrap();
    let tree = knn::NodeTree::new(&g.nodes);
    let mut near = Vec::new();
    for id in (0..g.nodes.len()).step_by(7) {
        tree.nearest_off_road(id, 5, &mut near);
        let own = g.nodes[id].road();
        let mut all: Vec<(f64, u32)> = g
            .nodes
            .iter()
            .enumerate()
            .filter(|&(j, n)| j != id && (own.is_none() || n.road() != own))
            .map(|(j, n)| (n.pos.distance(&g.nodes[id].pos).powi(2), j as u32))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all.truncate(5);
        let got: Vec<f64> = near.iter().map(|e| e.0).collect();
        let want: Vec<f64> = all.iter().map(|e| e.0).collect();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b), "{got:?} vs {want:?}");
        }
        assert_eq!(got.len(), want.len());
    }
}

#[test]
fn bounded_field_agrees_below_bound() {
    let w = WindowSpec::centered(2, 3.0, 3.0, 0.2).unwrap();
    let s = sample_process(9, &w).unwrap();
    let engine = FieldEngine::new(&s, &SolverConfig::new(0.2)).unwrap();
    let grid = GridSpec::centered([0.0, 0.0], 1.5, 40).unwrap();
    let x = v(&[0.1, -0.2]);
    let full = engine.field(&x, &grid).unwrap();
    let bound = 2.0;
    let part = engine.field_within(&x, &grid, bound).unwrap();
    let mut below = 0;
    for (a, b) in full.values.iter().zip(&part.values) {
        if *a <= bound {
            assert!((a - b).abs() <= 1e-12 * a.max(1.0), "{a} vs {b}");
            below += 1;
        } else {
            assert!(*b > bound);
        }
    }
    assert!(below > 0 && below < full.values.len());
}
