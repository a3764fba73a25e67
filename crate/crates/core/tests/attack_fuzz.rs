use proptest::prelude::*;

use renoir::attacks::{pgd_with_trace, run_attack, AttackKind, AttackSpec};
use renoir::{NoiseModel, Norm, RandomizedNet};

fn net(d: usize, sigma: f64, seed: u64) -> RandomizedNet {
    let noise = (sigma > 0.0).then(|| NoiseModel::gaussian_isotropic(sigma, d).unwrap());
    RandomizedNet::mlp(&[d, 6, 3], 0.1, noise, 0, seed).unwrap()
}

fn spec(kind: AttackKind, d: usize, alpha: f64, seed: u64) -> AttackSpec {
    let mut s = match kind {
        AttackKind::Pgd => AttackSpec::pgd(alpha, 5, alpha / 2.0, seed),
        AttackKind::Cw => AttackSpec::cw(alpha, 5, 0.05, seed),
        AttackKind::Ead => AttackSpec::ead(alpha, 5, 0.05, seed),
        AttackKind::Grid => AttackSpec::grid(alpha, [Norm::L1, Norm::L2, Norm::Linf][d % 3], 2, 8, seed),
    };
    s.eot_samples = 3;
    s.eval_draws = 9;
    s.binary_steps = 2;
    s
}

fn arb_kind() -> impl Strategy<Value = AttackKind> {
    prop_oneof![
        Just(AttackKind::Pgd),
        Just(AttackKind::Cw),
        Just(AttackKind::Ead),
        Just(AttackKind::Grid)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn attacks_stay_in_box_and_budget(
        kind in arb_kind(),
        d in 1usize..=3,
        x in prop::collection::vec(-1.0f64..=1.0, 3),
        y in 0usize..3,
        alpha in 0.0f64..1.5,
        sigma in prop_oneof![Just(0.0), 0.05f64..0.5],
        seed in any::<u64>(),
    ) {
        let x = &x[..d];
        let net = net(d, sigma, seed % 17);
        let s = spec(kind, d, alpha, seed);
        let out = run_attack(&net, x, y, &s).unwrap();
        prop_assert_eq!(out.x_adv.len(), d);
        prop_assert!(out.x_adv.iter().all(|v| (-1.0..=1.0).contains(v)));
        let moved = s.norm.distance(&out.x_adv, x);
        prop_assert!(moved <= alpha * (1.0 + 1e-9) + 1e-12, "{kind:?} moved {moved} > {alpha}");
        prop_assert_eq!(&out, &run_attack(&net, x, y, &s).unwrap());
    }

    #[test]
    fn pgd_iterates_never_leave_the_ball(
        x in prop::collection::vec(-1.0f64..=1.0, 2),
        alpha in 0.0f64..0.8,
        step in 0.0f64..0.5,
        seed in any::<u64>(),
    ) {
        let net = net(2, 0.2, seed % 5);
        let mut s = AttackSpec::pgd(alpha, 6, step, seed);
        s.eot_samples = 2;
        s.eval_draws = 5;
        let mut visited = 0;
        pgd_with_trace(&net, &x, 0, &s, |it| {
            visited += 1;
            assert!(Norm::Linf.distance(it, &x) <= alpha + 1e-12);
            assert!(it.iter().all(|v| (-1.0..=1.0).contains(v)));
        }).unwrap();
        prop_assert!(visited >= 6);
    }
}
