mod common;

use proptest::prelude::*;
use rand::Rng;

use common::*;
use tearsim_core::geom::{Plane, Point, Vec3};
use tearsim_core::mesh::{BuildMode, Mesh, MeshInput};
use tearsim_core::tear::{
    apply_tear_segment, build_cell, classify_faces, clip_face, continuous_tear, plan_cells, sample_path,
    ClipOutcome, ScalpelSample, SideLabel, TearCell, TearOptions, GAP_NEG, GAP_POS, JOINT_END, JOINT_START,
};

fn right_triangle() -> Mesh {
    let mut input = MeshInput::new(
        vec![Point::new(0.0, 0.0, 0.0), Point::new(1.0, 0.0, 0.0), Point::new(0.0, 1.0, 0.0)],
        vec![[0, 1, 2]],
    );
    input.uvs = Some(vec![[0.0, 0.0].into(), [1.0, 0.0].into(), [0.0, 1.0].into()]);
    Mesh::build(input, BuildMode::Strict).unwrap()
}

/// Cell whose gap is the slab `lo <= x <= hi`, unbounded for practical
/// purposes in y and z.
fn x_slab(lo: f64, hi: f64) -> TearCell {
    let x = 0.5 * (lo + hi);
    build_cell(
        &sample([x, -5.0, 5.0], [x, -5.0, -5.0], 0.0),
        &sample([x, 5.0, 5.0], [x, 5.0, -5.0], 1.0),
        hi - lo,
        None,
    )
    .unwrap()
}

fn applied(mesh: &Mesh, cell: &TearCell) -> Mesh {
    let mut m = mesh.clone();
    let d = apply_tear_segment(&m, cell);
    m.apply_delta(&d).unwrap();
    m
}

/// Random cell around a point of the mesh surface.
fn random_cell(mesh: &Mesh, r: &mut impl Rng, width: f64) -> TearCell {
    let c = surface_points(mesh, 1, r.random())[0];
    loop {
        let b = Vec3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
        let m = Vec3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
        if b.norm() < 0.2 || m.norm() < 0.2 || b.normalize().cross(&m.normalize()).norm() < 0.3 {
            continue;
        }
        let (b, m) = (b.normalize() * r.random_range(0.02..0.15), m.normalize() * r.random_range(0.01..0.1));
        let s0 = ScalpelSample::new(c - m + b, c - m - b, 0.0);
        let s1 = ScalpelSample::new(c + m + b, c + m - b, 1.0);
        return build_cell(&s0, &s1, width, None).unwrap();
    }
}

// ------------------------------------------------------------ sampling

#[test]
fn spacing_filter_keeps_expected_tips() {
    let poses: Vec<_> = [0.0, 0.01, 0.02, 0.12, 0.24]
        .iter()
        .enumerate()
        .map(|(i, &x)| sample([x, 0.0, 0.0], [x, 0.0, -1.0], i as f64))
        .collect();
    let kept: Vec<f64> = sample_path(&poses, 0.1, 0.0).iter().map(|s| s.tip.x).collect();
    assert_eq!(kept, vec![0.0, 0.12, 0.24]);
    assert_eq!(sample_path(&poses[..1], 0.1, 0.0), poses[..1].to_vec());
    assert!(sample_path(&[], 0.1, 0.0).is_empty());
}

#[test]
fn circle_retention_matches_greedy_oracle() {
    let poses: Vec<_> = (0..100)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / 100.0;
            sample([a.cos(), a.sin(), 0.0], [a.cos(), a.sin(), -1.0], i as f64)
        })
        .collect();
    let kept = sample_path(&poses, 0.1, 0.0);
    // Greedy retention oracle, then the last pose is forced in.
    let mut want = vec![poses[0].tip];
    for p in &poses[1..] {
        if (p.tip - want.last().unwrap()).norm() >= 0.1 {
            want.push(p.tip);
        }
    }
    if *want.last().unwrap() != poses[99].tip {
        if (poses[99].tip - want.last().unwrap()).norm() < 0.1 && want.len() > 1 {
            want.pop();
        }
        want.push(poses[99].tip);
    }
    assert_eq!(kept.iter().map(|s| s.tip).collect::<Vec<_>>(), want);
    assert_eq!(kept.first(), poses.first());
    assert_eq!(kept.last(), poses.last());
    for w in kept.windows(2) {
        assert!((w[1].tip - w[0].tip).norm() >= 0.1 - 1e-12);
    }
}

// -------------------------------------------------------------- cells

#[test]
fn axis_aligned_cell() {
    let c = build_cell(
        &sample([0.0, 0.0, 0.0], [0.0, 0.0, -1.0], 0.0),
        &sample([1.0, 0.0, 0.0], [1.0, 0.0, -1.0], 1.0),
        0.2,
        None,
    )
    .unwrap();
    let b = polytope_aabb(&c.planes);
    for (got, want) in [(b.min, Point::new(0.0, -0.1, -1.0)), (b.max, Point::new(1.0, 0.1, 0.0))] {
        assert!((got - want).norm() < 1e-12, "{got} vs {want}");
    }
    assert!((c.planes[GAP_POS].normal + c.planes[GAP_NEG].normal).norm() < 1e-12);
    assert!(c.mid_plane.normal.cross(&Vec3::y()).norm() < 1e-12);
}

fn assert_disjoint(a: &TearCell, b: &TearCell, samples: usize, seed: u64) {
    let bb = polytope_aabb(&a.planes).union(&polytope_aabb(&b.planes));
    let mut r = rng(seed);
    let e = bb.extent();
    for _ in 0..samples {
        let p = bb.min + Vec3::new(r.random::<f64>() * e.x, r.random::<f64>() * e.y, r.random::<f64>() * e.z);
        assert!(
            !(strictly_inside(&a.planes, &p, 0.0) && strictly_inside(&b.planes, &p, 0.0)),
            "{p} inside both cells"
        );
    }
}

#[test]
fn bisector_joint_after_diagonal_approach() {
    let s = [
        sample([-1.0, -1.0, 0.0], [-1.0, -1.0, -1.0], 0.0),
        sample([0.0, 0.0, 0.0], [0.0, 0.0, -1.0], 1.0),
        sample([1.0, 0.0, 0.0], [1.0, 0.0, -1.0], 2.0),
    ];
    let mut prev = build_cell(&s[0], &s[1], 0.2, None).unwrap();
    let next = build_cell(&s[1], &s[2], 0.2, Some(&mut prev)).unwrap();
    let bis = (Vec3::new(1.0, 1.0, 0.0).normalize() + Vec3::x()).normalize();
    assert!(next.planes[JOINT_START].normal.cross(&bis).norm() < 1e-9);
    assert!((prev.planes[JOINT_END].normal + next.planes[JOINT_START].normal).norm() < 1e-12);
    assert_disjoint(&prev, &next, 100_000, 1);
}

#[test]
fn zero_width_cell_has_empty_interior() {
    let c = x_slab(0.5, 0.5);
    let mut r = rng(2);
    for _ in 0..10_000 {
        let p = Point::new(r.random_range(0.4..0.6), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
        assert!(!strictly_inside(&c.planes, &p, 0.0));
    }
    let m = grid(10);
    let after = applied(&m, &c);
    assert!((after.total_area() - m.total_area()).abs() < 1e-12);
}

// ------------------------------------------------------- classification

#[test]
fn classify_trivial_cases() {
    let m = right_triangle();
    let far = x_slab(3.0, 4.0);
    let c = classify_faces(&m, &far);
    assert!(c.inside.is_empty() && c.crossing.is_empty());
    let all = x_slab(-1.0, 2.0);
    assert_eq!(classify_faces(&m, &all).inside, vec![0]);
}

fn check_against_sat(m: &Mesh, cell: &TearCell) {
    let c = classify_faces(m, cell);
    for f in m.live_faces() {
        let tri = m.face_positions(f);
        let gap = sat_gap(&tri, &cell.planes);
        let inside = tri.iter().all(|p| strictly_inside(&cell.planes, p, 0.0));
        let listed_inside = c.inside.contains(&f);
        let listed = listed_inside || c.crossing.contains(&f);
        assert_eq!(listed_inside, inside, "face {f} inside mismatch");
        if gap > 1e-9 {
            assert!(!listed, "face {f} separated by {gap} but listed");
        } else if gap < -1e-9 {
            assert!(listed, "face {f} overlaps by {gap} but not listed");
        }
    }
}

#[test]
fn ear_crossing_cell_matches_polytope_oracle() {
    let m = bunny();
    // Horizontal cut through the left ear.
    let cell = build_cell(
        &sample([0.02, 0.25, 0.25], [0.02, 0.25, 0.0], 0.0),
        &sample([0.2, 0.25, 0.25], [0.2, 0.25, 0.0], 1.0),
        0.02,
        None,
    )
    .unwrap();
    let c = classify_faces(&m, &cell);
    assert!(!c.crossing.is_empty());
    check_against_sat(&m, &cell);
}

// ------------------------------------------------------------ clipping

#[test]
fn strip_clip_kept_area() {
    let m = right_triangle();
    let cell = x_slab(0.4, 0.6);
    let tri = m.face_positions(0);
    let strip = mc_area_inside(&[tri], &cell.planes, 1_000_000, 3);
    // Exact strip area under y = 1 - x is 0.1.
    assert!((strip - 0.1).abs() < 2e-4, "oracle {strip}");
    let after = applied(&m, &cell);
    assert_eq!(after.live_face_count(), 3);
    assert!((after.total_area() - 0.4).abs() < 1e-12);
    assert!((after.total_area() - (0.5 - strip)).abs() < 2e-4);
}

#[test]
fn corner_clip_yields_quad_fan() {
    let m = right_triangle();
    let cell = x_slab(0.7, 1.5);
    let d = apply_tear_segment(&m, &cell);
    assert_eq!((d.removed_faces.len(), d.new_vertices.len(), d.new_faces.len()), (1, 2, 2));
    let after = applied(&m, &cell);
    assert!((after.total_area() - (0.5 - 0.3 * 0.3 / 2.0)).abs() < 1e-12);
}

#[test]
fn vertex_touch_is_untouched() {
    let m = right_triangle();
    let cell = x_slab(1.0, 1.2);
    assert_eq!(clip_face(&m, 0, &cell).outcome, ClipOutcome::Untouched);
    let after = applied(&m, &cell);
    assert!((after.total_area() - 0.5).abs() < 1e-9);
}

#[test]
fn corner_barely_inside_is_cut_away() {
    // Slab across the corner (0,0) with one wall 1e-6 past it: only a
    // sliver of area is inside, but the corner itself must not survive.
    let m = right_triangle();
    let n = Vec3::new(1.0, 1.0, 0.0).normalize();
    let along = Vec3::new(-1.0, 1.0, 0.0).normalize();
    let (lo, hi) = (-0.1, 1e-6);
    let o = Point::from(n * (0.5 * (lo + hi)));
    let z = Vec3::z() * 5.0;
    let cell = build_cell(
        &ScalpelSample::new(o - along * 5.0 + z, o - along * 5.0 - z, 0.0),
        &ScalpelSample::new(o + along * 5.0 + z, o + along * 5.0 - z, 1.0),
        hi - lo,
        None,
    )
    .unwrap();
    assert!(strictly_inside(&cell.planes, m.position(0), 0.0));
    let after = applied(&m, &cell);
    assert!(after.live_faces().all(|f| !after.face(f).contains(&0)));
    assert!((after.total_area() - 0.5).abs() < 1e-9);
    assert_nothing_inside(&after, &cell, 1000);
}

#[test]
fn plane_split_conserves_area_and_lands_on_plane() {
    let m = right_triangle();
    let cell = x_slab(0.3, 0.3);
    let r = clip_face(&m, 0, &cell);
    let ClipOutcome::Clipped { triangles } = r.outcome else {
        panic!("expected a split");
    };
    assert!(triangles.len() >= 2);
    for v in &r.new_vertices {
        assert!((v.vertex.position.x - 0.3).abs() < 1e-15);
    }
    let after = applied(&m, &cell);
    assert!((after.total_area() - 0.5).abs() < 1e-9);
}

// ---------------------------------------------------------- segments

#[test]
fn disjoint_cell_gives_empty_delta() {
    let m = grid(4);
    let d = apply_tear_segment(&m, &x_slab(3.0, 4.0));
    assert!(d.is_empty());
    assert_eq!(applied(&m, &x_slab(3.0, 4.0)).canonical_bytes(), m.canonical_bytes());
}

#[test]
fn fully_inside_triangle_is_removed() {
    let m = right_triangle();
    let d = apply_tear_segment(&m, &x_slab(-1.0, 2.0));
    assert_eq!(d.removed_faces, vec![0]);
    assert!(d.new_faces.is_empty() && d.new_vertices.is_empty());
}

/// Removed area equals the Monte-Carlo area of the surface inside the cell.
fn check_area_accounting(m: &Mesh, cell: &TearCell, samples: usize, rel: f64) -> (f64, f64) {
    let near = brute_faces_near(m, &polytope_aabb(&cell.planes).inflated(1e-6));
    let tris: Vec<_> = near.iter().map(|&f| m.face_positions(f)).collect();
    let oracle = mc_area_inside(&tris, &cell.planes, samples, 7);
    let after = applied(m, cell);
    let removed = m.total_area() - after.total_area();
    assert!(
        (removed - oracle).abs() <= rel * oracle.max(1e-12),
        "removed {removed} vs oracle {oracle}"
    );
    (removed, oracle)
}

fn assert_nothing_inside(m: &Mesh, cell: &TearCell, count: usize) {
    let tol = 1e-7 * m.diagonal();
    for f in m.live_faces() {
        let t = m.face_positions(f);
        let centroid = Point::from((t[0].coords + t[1].coords + t[2].coords) / 3.0);
        for p in t.iter().chain([&centroid]) {
            assert!(!strictly_inside(&cell.planes, p, tol), "face {f} sample {p} inside");
        }
    }
    for p in points_near_cell(m, cell, count, 9) {
        assert!(!strictly_inside(&cell.planes, &p, tol), "{p} inside");
    }
}

#[test]
fn bunny_back_segment() {
    let m = bunny();
    let s = bunny_back_stroke(2);
    let cell = build_cell(&s[0], &s[1], 0.02 * m.diagonal(), None).unwrap();
    let (removed, _) = check_area_accounting(&m, &cell, 1_000_000, 1e-3);
    assert!(removed > 0.0);
    assert_nothing_inside(&applied(&m, &cell), &cell, 10_000);
}

#[test]
fn one_sample_path_tears_nothing() {
    let mut m = grid(4);
    let run = continuous_tear(&mut m, &grid_stroke(&[[0.5, 0.5]]), &TearOptions::default()).unwrap();
    assert!(run.deltas.is_empty());
}

#[test]
fn straight_chain_equals_single_slab() {
    let m = grid(20);
    let opts = TearOptions {
        width: 0.03,
        spacing: 0.1,
        ..Default::default()
    };
    let mut chained = m.clone();
    let run = continuous_tear(&mut chained, &grid_stroke(&[[0.1, 0.52], [0.5, 0.52], [0.9, 0.52]]), &opts).unwrap();
    assert_eq!(run.deltas.len(), 2);
    let mut single = m.clone();
    continuous_tear(&mut single, &grid_stroke(&[[0.1, 0.52], [0.9, 0.52]]), &opts).unwrap();
    let lost = m.total_area() - chained.total_area();
    assert!((lost - (m.total_area() - single.total_area())).abs() < 1e-12);
    // Same slab by the area oracle: 0.8 long, 0.03 wide.
    let slab = build_cell(&grid_stroke(&[[0.1, 0.52]])[0], &grid_stroke(&[[0.9, 0.52]])[0], 0.03, None).unwrap();
    let near = brute_faces_near(&m, &polytope_aabb(&slab.planes));
    let tris: Vec<_> = near.iter().map(|&f| m.face_positions(f)).collect();
    let oracle = mc_area_inside(&tris, &slab.planes, 1_000_000, 4);
    assert!((lost - oracle).abs() < 1e-3 * oracle, "{lost} vs {oracle}");
}

#[test]
fn l_turn_joint_is_bisector() {
    let mut m = grid(24);
    let samples = grid_stroke(&L_PATH);
    let (cells, skipped) = plan_cells(&samples, 0.03);
    assert!(skipped.is_empty());
    let bis = Vec3::new(1.0, 1.0, 0.0).normalize();
    assert!(cells[1].planes[JOINT_START].normal.cross(&bis).norm() < 1e-9);
    let run = continuous_tear(&mut m, &samples, &TearOptions { width: 0.03, spacing: 0.01, ..Default::default() }).unwrap();
    assert_eq!(run.deltas.len(), 2);
    for d in &run.deltas {
        assert_nothing_inside(&m, &d.cell, 10_000);
    }
}

// ---------------------------------------------------------- properties

fn check_delta_invariants(before: &Mesh, cell: &TearCell) {
    let d = apply_tear_segment(before, cell);
    let mut m = before.clone();
    m.apply_delta(&d).unwrap();
    let diag = before.diagonal();
    let ids: Vec<u32> = d.new_vertex_ids().collect();
    for (nv, &id) in d.new_vertices.iter().zip(&ids) {
        let (a, b) = nv.edge;
        let p = m.position(a).coords * (1.0 - nv.t) + m.position(b).coords * nv.t;
        assert!((p - m.position(id).coords).norm() < 1e-9);
        assert!((0.0..=1.0).contains(&nv.t));
        if let (Some(ua), Some(ub), Some(u)) = (m.vertex(a).uv, m.vertex(b).uv, m.vertex(id).uv) {
            assert!((ua * (1.0 - nv.t) + ub * nv.t - u).norm() < 1e-9);
        }
        if !m.vertex(id).skin.is_empty() {
            assert!((m.vertex(id).skin.weight_sum() - 1.0).abs() < 1e-6);
            assert!(m.vertex(id).skin.len() <= 4);
        }
        if let Some(n) = m.vertex(id).normal {
            assert!((n.norm() - 1.0).abs() < 1e-4);
        }
        let on_plane = cell
            .planes
            .iter()
            .map(|pl: &Plane| pl.signed_distance(&nv.vertex.position).abs())
            .fold(f64::INFINITY, f64::min);
        assert!(on_plane <= 1e-6 * diag, "new vertex {on_plane} off every plane");
        assert_eq!(nv.side, SideLabel::from_distance(cell.mid_plane.signed_distance(&nv.vertex.position)));
    }
    // Pieces kept outside a gap wall are single-sided. Pieces kept beyond a
    // blade or joint cap sit inside the gap slab and may straddle the mid
    // plane.
    let half = 0.5 * cell.width + 1e-9 * diag;
    for f in &d.new_faces {
        let sides: Vec<SideLabel> = f
            .iter()
            .filter(|&&v| v >= d.base_vertex)
            .map(|&v| d.new_vertices[(v - d.base_vertex) as usize].side)
            .collect();
        if sides.windows(2).all(|w| w[0] == w[1]) {
            continue;
        }
        let in_slab = f.iter().all(|&v| cell.mid_plane.signed_distance(m.position(v)).abs() <= half);
        assert!(in_slab, "face {f:?} mixes sides outside the gap slab");
    }
    assert!(m.audit().is_ok());
    assert_eq!(apply_tear_segment(before, cell), d, "not deterministic");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zero_width_split_conserves_area(
        pts in prop::array::uniform9(-1.0f64..1.0),
        n in prop::array::uniform3(-1.0f64..1.0),
        off in -0.3f64..0.3,
    ) {
        let tri = [Point::new(pts[0], pts[1], pts[2]), Point::new(pts[3], pts[4], pts[5]), Point::new(pts[6], pts[7], pts[8])];
        prop_assume!(area(&tri) > 1e-3);
        let n = Vec3::from(n);
        prop_assume!(n.norm() > 0.1);
        let n = n.normalize();
        let u = n.cross(&if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() }).normalize();
        let v = n.cross(&u);
        let o = Point::from(n * off);
        let cell = build_cell(
            &ScalpelSample::new(o - v * 10.0 + u * 10.0, o - v * 10.0 - u * 10.0, 0.0),
            &ScalpelSample::new(o + v * 10.0 + u * 10.0, o + v * 10.0 - u * 10.0, 1.0),
            0.0,
            None,
        ).unwrap();
        let a = area(&tri);
        let m = Mesh::build(MeshInput::new(tri.to_vec(), vec![[0, 1, 2]]), BuildMode::Strict).unwrap();
        let after = applied(&m, &cell);
        prop_assert!((after.total_area() - a).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn random_segments_on_grid(seed in 0u64..100_000, w in 0.0f64..0.05) {
        let m = grid(12);
        let mut r = rng(seed);
        let cell = random_cell(&m, &mut r, w);
        check_delta_invariants(&m, &cell);
        assert_nothing_inside(&applied(&m, &cell), &cell, 2_000);
    }

    #[test]
    fn random_segments_on_bunny(seed in 0u64..100_000, w in 0.0f64..0.03) {
        let m = bunny();
        let mut r = rng(seed);
        let cell = random_cell(&m, &mut r, w);
        check_delta_invariants(&m, &cell);
        assert_nothing_inside(&applied(&m, &cell), &cell, 2_000);
    }

    #[test]
    fn random_segments_on_skinned_cylinder(seed in 0u64..100_000, w in 0.0f64..0.03) {
        let (m, _) = cylinder();
        let mut r = rng(seed);
        let cell = random_cell(&m, &mut r, w);
        check_delta_invariants(&m, &cell);
    }

    #[test]
    fn classification_matches_polytope_oracle(seed in 0u64..100_000, w in 0.0f64..0.04) {
        let m = bunny();
        let mut r = rng(seed);
        let cell = random_cell(&m, &mut r, w);
        check_against_sat(&m, &cell);
    }

    #[test]
    fn chained_cells_never_overlap(seed in 0u64..100_000, n in 3usize..7) {
        let mut r = rng(seed);
        let pts: Vec<[f64; 2]> = (0..n).map(|_| [r.random_range(0.0..1.0), r.random_range(0.0..1.0)]).collect();
        let (cells, _) = plan_cells(&grid_stroke(&pts), r.random_range(0.0..0.05));
        for (i, w) in cells.windows(2).enumerate() {
            let turn = w[0].motion.dot(&w[1].motion).clamp(-1.0, 1.0).acos().to_degrees();
            // A reversal retraces cut material; its joint is flagged instead.
            prop_assert_eq!(w[1].joint_flagged, turn > 179.0);
            if !w[1].joint_flagged {
                assert_disjoint(&w[0], &w[1], 5_000, seed + i as u64);
            }
        }
    }

    #[test]
    fn continuous_tear_is_deterministic_and_valid(seed in 0u64..100_000) {
        let mut r = rng(seed);
        let pts: Vec<[f64; 2]> = (0..4).map(|_| [r.random_range(0.0..1.0), r.random_range(0.0..1.0)]).collect();
        let poses = grid_stroke(&densify(&pts, 0.01));
        let opts = TearOptions { width: 0.02, spacing: 0.05, ..Default::default() };
        let mut a = grid(16);
        let mut b = grid(16);
        let ra = continuous_tear(&mut a, &poses, &opts).unwrap();
        let rb = continuous_tear(&mut b, &poses, &opts).unwrap();
        prop_assert_eq!(serde_json::to_vec(&ra.deltas).unwrap(), serde_json::to_vec(&rb.deltas).unwrap());
        prop_assert!(a.audit().is_ok());
    }
}
