use rdkf_core::lfsim::{lf_tilt_with, LeastFavorablePlan, SaturatingBudget, TILT_POLICIES};
use rdkf_core::linalg;
use rdkf_core::model::{build_projectile_scenario, ProjectileParams};
use rdkf_core::seeding::run_rng;

#[test]
fn tilted_precision_stays_positive_along_trajectories() {
    let (model, _) = build_projectile_scenario(&ProjectileParams::default()).unwrap();
    let plan = LeastFavorablePlan::new(&model, 0.05, 300, &SaturatingBudget).unwrap();
    for seed in 0..3 {
        let (traj, predictions) = plan.sample(&mut run_rng(seed, 0)).unwrap();
        let log = plan.filter_log(&predictions);
        assert_eq!(log.len(), 300);
        for (t, (state, step)) in log.iter().zip(plan.steps()).enumerate() {
            for theta in [step.world_theta, step.filter_theta] {
                let tilt = lf_tilt_with(&traj.states[t], state, &model, theta).unwrap();
                assert!(linalg::is_positive_definite(&tilt.precision), "t {t} theta {theta}");
            }
        }
        assert!(traj.states.iter().all(|x| x.iter().all(|v| v.is_finite())));
    }
}

#[test]
fn every_tilt_policy_builds_a_plan() {
    let (model, _) = build_projectile_scenario(&ProjectileParams {
        nodes: 10,
        sensors: 3,
        extra_edges: 20,
        ..Default::default()
    })
    .unwrap();
    for name in TILT_POLICIES {
        let policy = rdkf_core::lfsim::tilt_policy(name).unwrap();
        let plan = LeastFavorablePlan::new(&model, 0.05, 40, policy.as_ref()).unwrap();
        assert_eq!(plan.steps().len(), 40);
        assert!(plan.steps().iter().all(|s| s.world_theta >= 0.0 && s.filter_theta > 0.0));
    }
}
