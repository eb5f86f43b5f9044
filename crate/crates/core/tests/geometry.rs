use graphcomplex::geometry::*;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn e(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

fn unit(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / r).collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn knotted() -> FramedKnot {
    let imm = ImmersionSpec::default().build().unwrap();
    let u1 = imm.embed_normal(&[0.6, 0.0, 0.8]).unwrap();
    let u2 = imm.embed_normal(&[0.0, 1.0, 0.0]).unwrap();
    let knot = FramedKnot::from_knot(&resolve(&imm, &u1, &u2).unwrap());
    // carry a nontrivial frame so frame bookkeeping is exercised too
    let spin = FramedKnot::from_frame_loop(5, |t| clutching(t, &[0.0, 0.0, 1.0]));
    knot.compose(&spin)
}

fn grid() -> Vec<(Vec<f64>, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    (0..200).map(|i| ((0..4).map(|_| rng.gen_range(-0.5..0.5)).collect(), -1.5 + 3.0 * i as f64 / 199.0)).collect()
}

#[test]
fn clutching_is_a_rotation() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let u = unit(&mut rng, 3);
        let s = rng.gen_range(-1.0..1.0);
        let r = clutching(s, &u);
        assert!((r.transpose() * &r - DMatrix::identity(4, 4)).abs().max() < 1e-13);
        assert!((r.determinant() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn clutching_is_identity_at_the_poles() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let u = unit(&mut rng, 3);
        for s in [1.0, -1.0] {
            assert!((clutching(s, &u) - DMatrix::identity(4, 4)).abs().max() <= 1e-12);
        }
    }
}

#[test]
fn lambda_at_tau_one_is_rigid() {
    let imm = ImmersionSpec::default().build().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u1 = imm.embed_normal(&unit(&mut rng, 3)).unwrap();
    let u2 = imm.embed_normal(&unit(&mut rng, 3)).unwrap();
    for i in 0..10 {
        let s = -0.95 + 1.9 * i as f64 / 9.0;
        let u0 = unit(&mut rng, 3);
        let r = clutching(s, &u0);
        for j in 0..100 {
            let t = -1.2 + 2.4 * j as f64 / 99.0;
            let v = imm.resolved([&u1, &u2], t).0;
            let got = lambda(&imm, s, &u0, &u1, &u2, t, 1.0).unwrap();
            assert!(max_diff(&got, &rotate(&r, &v)) <= 1e-12);
        }
    }
}

#[test]
fn lambda_preserves_the_axis_coordinate() {
    let imm = ImmersionSpec::default().build().unwrap();
    let (u1, u2) = (e(5, 0), e(5, 1));
    for tau in [0.0, 0.5, 1.0] {
        for t in [-0.7, 0.0, 0.3] {
            let got = lambda(&imm, 0.2, &[0.0, 1.0, 0.0], &u1, &u2, t, tau).unwrap();
            let v = imm.resolved([&u1, &u2], t).0;
            assert_eq!(got[4], v[4]);
        }
    }
}

#[test]
fn identity_ball_acts_trivially() {
    let k = knotted();
    let acted = operad_act(&[LittleBall::IDENTITY], &[k.clone()]).unwrap();
    for (x, t) in grid() {
        assert!(max_diff(&acted.apply(&x, t), &k.apply(&x, t)) <= 1e-9);
    }
}

#[test]
fn reparametrization_composes() {
    let k = knotted();
    let l = LittleInterval { a: 0.5, b: 0.3 };
    let m = LittleInterval { a: 0.6, b: -0.2 };
    let twice = k.reparam(m).reparam(l);
    let once = k.reparam(l.compose(&m));
    for (x, t) in grid() {
        assert!(max_diff(&twice.apply(&x, t), &once.apply(&x, t)) <= 1e-9, "t = {t}");
    }
}

#[test]
fn action_respects_ball_composition() {
    let k1 = knotted();
    let k2 = FramedKnot::from_frame_loop(5, |t| clutching(-t, &[1.0, 0.0, 0.0]));
    let outer = LittleBall { center: [0.05, 0.1], radius: 0.8 };
    let b1 = LittleBall { center: [-0.5, 0.0], radius: 0.4 };
    let b2 = LittleBall { center: [0.5, 0.2], radius: 0.4 };
    let inner = operad_act(&[b1, b2], &[k1.clone(), k2.clone()]).unwrap();
    let nested = operad_act(&[outer], &[inner]).unwrap();
    let flat = operad_act(&[outer.compose(&b1), outer.compose(&b2)], &[k1, k2]).unwrap();
    for (x, t) in grid() {
        assert!(max_diff(&nested.apply(&x, t), &flat.apply(&x, t)) <= 1e-9, "t = {t}");
    }
}

#[test]
fn side_by_side_balls_concatenate() {
    let k = knotted();
    let left = LittleBall { center: [-0.5, 0.0], radius: 0.45 };
    let right = LittleBall { center: [0.5, 0.0], radius: 0.45 };
    let acted = operad_act(&[left, right], &[k.clone(), FramedKnot::trivial(5)]).unwrap();
    let alone = k.reparam(left.interval());
    for (x, t) in grid() {
        assert!(max_diff(&acted.apply(&x, t), &alone.apply(&x, t)) <= 1e-12);
    }
}

#[test]
fn operad_rejects_bad_input() {
    let f = FramedKnot::trivial(5);
    let outside = LittleBall { center: [0.5, 0.0], radius: 0.6 };
    assert_eq!(operad_act(&[outside], &[f.clone()]).unwrap_err(), GeometryError::BallOutside(0));
    assert!(matches!(operad_act(&[LittleBall::IDENTITY], &[f.clone(), f]), Err(GeometryError::ArityMismatch { .. })));
}

#[test]
fn resolution_only_moves_the_windows() {
    let imm = ImmersionSpec::default().build().unwrap();
    let u1 = imm.embed_normal(&[0.0, 0.6, 0.8]).unwrap();
    let u2 = imm.embed_normal(&[1.0, 0.0, 0.0]).unwrap();
    let k = resolve(&imm, &u1, &u2).unwrap();
    let spec = imm.spec().clone();
    for j in 0..1000 {
        let t = -1.5 + 3.0 * j as f64 / 999.0;
        let inside = (0..2).any(|i| (t - spec.xi[i]).abs() < spec.eps[i]);
        let diff = max_diff(&k.eval(t), &imm.base(t).0);
        if inside {
            assert!(diff <= spec.delta[0].max(spec.delta[1]) + 1e-15);
        } else {
            assert_eq!(diff, 0.0);
        }
    }
}

#[test]
fn resolution_separates_the_double_points() {
    let imm = ImmersionSpec::default().build().unwrap();
    let u1 = imm.embed_normal(&[1.0, 0.0, 0.0]).unwrap();
    let u2 = imm.embed_normal(&[0.0, 0.0, 1.0]).unwrap();
    let k = resolve(&imm, &u1, &u2).unwrap();
    for i in 0..2 {
        let (a, b) = (k.eval(imm.spec().xi[i]), k.eval(imm.spec().xi[i + 2]));
        assert!((max_diff(&a, &b) - imm.spec().delta[i]).abs() < 1e-12);
    }
}

#[test]
fn spec_round_trips_through_json() {
    let spec = ImmersionSpec::default().with_eps([0.04, 0.05]);
    let text = serde_json::to_string(&spec).unwrap();
    assert_eq!(ImmersionSpec::from_json(&text).unwrap(), spec);
    assert!(ImmersionSpec::from_json("{\"xi\": 3}").is_err());
    let bad = ImmersionSpec { xi: [-0.6, 0.2, -0.2, 0.6], ..Default::default() };
    assert!(bad.build().is_err());
}
