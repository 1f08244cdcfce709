use trajsmooth::backward::{backward_simulate, SmootherParams};
use trajsmooth::demo;
use trajsmooth::oracle::{
    empirical_distribution, exact_smooth, structure_distribution, tv_distance, OracleParams,
};

#[test]
fn sampler_matches_exact_structure_distribution() {
    let p = demo::toy(1e-4).unwrap();
    let post = exact_smooth(&p.log, &p.birth, &p.motion, &OracleParams::default()).unwrap();
    let exact = structure_distribution(&post);
    let params = SmootherParams {
        particles: 20_000,
        m_best: 10_000,
        w_hyp_min: 0.0,
        seed: 3,
        ..SmootherParams::default()
    };
    let ps = backward_simulate(&p.log, &p.birth, &p.motion, &params).unwrap();
    let emp = empirical_distribution(&ps, &p.log);
    let tv = tv_distance(&exact, &emp);
    println!(
        "tv = {tv:.4} over {} structures (T = {})",
        exact.len(),
        ps.len()
    );
    assert!(tv < 0.04, "tv = {tv}, {} exact structures", exact.len());
}

#[test]
fn dirac_mode_keeps_structure_distribution() {
    let p = demo::toy(1e-4).unwrap();
    let post = exact_smooth(&p.log, &p.birth, &p.motion, &OracleParams::default()).unwrap();
    let params = SmootherParams {
        particles: 20_000,
        m_best: 10_000,
        w_hyp_min: 0.0,
        dirac_mode: true,
        seed: 5,
        ..SmootherParams::default()
    };
    let ps = backward_simulate(&p.log, &p.birth, &p.motion, &params).unwrap();
    let tv = tv_distance(
        &structure_distribution(&post),
        &empirical_distribution(&ps, &p.log),
    );
    assert!(tv < 0.04, "tv = {tv}");
}
