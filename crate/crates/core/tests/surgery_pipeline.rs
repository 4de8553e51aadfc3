use cocycle_lab::base::BaseSystem;
use cocycle_lab::cocycle::{Cocycle, Generator};
use cocycle_lab::sl2::Mat2;
use cocycle_lab::surgery::{certificate_horizon, run_surgery};
use cocycle_lab::LabError;

#[test]
fn herman_cocycle_is_flattened() {
    let eps = 1.0;
    let co = Cocycle::new(BaseSystem::golden().with_grid(1 << 14), Generator::Herman { sigma: 1.2, winding: 1 }).unwrap();
    let run = run_surgery(&co, eps).unwrap();
    let c = run.config.c;
    let blend_bound = c.exp() * (c.exp() + 1.0) * eps;
    let sup = co
        .base()
        .grid_points()
        .iter()
        .map(|p| run.perturbed.value(p).unwrap().distance(&co.value(p)))
        .fold(0.0, f64::max);
    assert!(sup < blend_bound, "{sup} against {blend_bound}");
    let cert = &run.certificate;
    assert_eq!(cert.n, certificate_horizon(&run.config));
    assert_eq!(cert.bound, (3.0 * c + 2.0) * eps);
    assert!(cert.pass, "{}", cert.to_json());
    assert!(cert.max < cert.pre_max);
    assert!(cert.max_bad_blocks as f64 <= cert.bad_block_limit);
}

#[test]
fn hyperbolic_constant_is_rejected() {
    let co = Cocycle::new(BaseSystem::golden(), Generator::Constant(Mat2::diag(2.0))).unwrap();
    assert!(matches!(run_surgery(&co, 0.1), Err(LabError::NotApplicable(_))));
}
