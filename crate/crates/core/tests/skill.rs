mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stirguard::risk::{Parameter, RiskEstimator, RiskId, RiskVector};
use stirguard::sim::{SimConfig, Setup, Vec2, WorldState};
use stirguard::skill::{
    compound_reward, file_sha256, initial_procedure, prevention_observation, prevention_reward, stir_observation, stir_reward, Frame,
    Manifest, SkillKind, SkillLibrary,
};
use stirguard::Error;

fn world(setup: Setup, seed: u64) -> WorldState {
    WorldState::reset_seeded(&SimConfig::default(), setup, seed).unwrap()
}

#[test]
fn stir_observation_examples() {
    let mut s = world(Setup::Fixed, 1);
    s.spoon = s.bowl.center;
    s.phase = 0;
    assert_eq!(stir_observation(&s, Frame::Bowl), [0.0, 0.0, 0.0]);
    s.spoon = s.bowl.center + Vec2::new(0.02, 0.0);
    s.phase = 25;
    let obs = stir_observation(&s, Frame::Bowl);
    assert!((obs[0] - 0.02).abs() < 1e-15 && obs[1].abs() < 1e-15);
    assert_eq!(obs[2], 0.5);
}

#[test]
fn bowl_slide_shifts_the_relative_spoon() {
    let mut s = world(Setup::Unrestricted, 2);
    let before = stir_observation(&s, Frame::Bowl);
    let spoon = s.spoon;
    s.displace_bowl(Vec2::new(0.01, 0.0));
    assert_eq!(s.spoon, spoon);
    let after = stir_observation(&s, Frame::Bowl);
    assert!((after[0] - (before[0] - 0.01)).abs() < 1e-12);
    assert!((after[1] - before[1]).abs() < 1e-12);
    // the table frame does not see the bowl
    assert_eq!(stir_observation(&s, Frame::Table)[..2], [spoon.x, spoon.y]);
}

#[test]
fn prevention_observation_appends_the_risk_observable() {
    let mut s = world(Setup::Unrestricted, 3);
    s.displace_bowl(Vec2::new(0.05, 0.0));
    let obs = prevention_observation(&s, Frame::Bowl, &Parameter::Distance).unwrap();
    assert_eq!(obs[..3], stir_observation(&s, Frame::Bowl));
    assert!((obs[3] - 0.05).abs() < 1e-12);

    let upright = world(Setup::Unrestricted, 3);
    assert_eq!(prevention_observation(&upright, Frame::Bowl, &Parameter::Tilt).unwrap()[3], 0.0);

    let spill = prevention_observation(&upright, Frame::Bowl, &Parameter::ExcludedVolume).unwrap();
    assert_eq!(spill[3], upright.observe_v());

    let custom = prevention_observation(&upright, Frame::Bowl, &Parameter::Custom("temperature".into()));
    assert!(matches!(custom, Err(Error::MissingObservable(_))));
}

#[test]
fn stir_reward_examples() {
    let s = world(Setup::Fixed, 4);
    assert_eq!(stir_reward(&s, &s), 0.0);
    let k = (0..s.particles.len()).find(|&k| s.in_bowl(k)).unwrap();
    let mut moved = s.clone();
    moved.particles[k].position += Vec2::new(0.01, 0.0);
    assert!(moved.in_bowl(k));
    assert!((stir_reward(&s, &moved) - 0.01).abs() < 1e-12);
}

/// Bowl-relative planar displacement of in-bowl particles, summed.
fn stir_reward_oracle(prev: &WorldState, next: &WorldState) -> f64 {
    let mut total = 0.0;
    for k in 0..next.particles.len() {
        let inside = (next.particles[k].position - next.bowl.center).norm() <= next.bowl.radius && next.excluded_ratio(k) < 1.0;
        if inside {
            let a = prev.particles[k].position - prev.bowl.center;
            let b = next.particles[k].position - next.bowl.center;
            total += (b - a).norm();
        }
    }
    total
}

fn random_pair(seed: u64) -> (WorldState, WorldState) {
    let setup = if seed % 2 == 0 { Setup::Fixed } else { Setup::Unrestricted };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = world(setup, seed);
    for _ in 0..rng.random_range(0..30) {
        s.step(Vec2::new(rng.random_range(-0.01..0.01), rng.random_range(-0.01..0.01)));
    }
    let prev = s.clone();
    s.step(Vec2::new(rng.random_range(-0.01..0.01), rng.random_range(-0.01..0.01)));
    (prev, s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stir_reward_matches_per_particle_oracle(seed in 0u64..10_000) {
        let (prev, next) = random_pair(seed);
        prop_assert!((stir_reward(&prev, &next) - stir_reward_oracle(&prev, &next)).abs() <= 1e-12);
    }

    #[test]
    fn stir_reward_is_monotone_in_one_displacement(seed in 0u64..10_000, extra in 0.0f64..0.005) {
        let (prev, next) = random_pair(seed);
        let Some(k) = (0..next.particles.len()).find(|&k| next.in_bowl(k)) else { return Ok(()) };
        let base = stir_reward(&prev, &next);
        // push particle k further along its own displacement
        let mut further = next.clone();
        let dir = (next.particles[k].position - next.bowl.center) - (prev.particles[k].position - prev.bowl.center);
        further.particles[k].position += dir.normalized().unwrap_or(Vec2::new(1.0, 0.0)) * extra;
        if further.in_bowl(k) {
            prop_assert!(stir_reward(&prev, &further) >= base - 1e-15);
        }
    }
}

#[test]
fn prevention_reward_examples() {
    let risky = RiskVector::from_pairs([(RiskId::Slide, 1)]);
    assert_eq!(prevention_reward(&risky, &RiskId::Slide).unwrap(), 0.0);
    let safe = RiskVector::from_pairs([(RiskId::Slide, 0)]);
    assert_eq!(prevention_reward(&safe, &RiskId::Slide).unwrap(), 1.0);
    assert!(matches!(prevention_reward(&safe, &RiskId::Spill), Err(Error::UnknownRisk(RiskId::Spill))));

    let total: f64 = (0..100)
        .map(|t| prevention_reward(&RiskVector::from_pairs([(RiskId::Slide, u8::from(t < 30))]), &RiskId::Slide).unwrap())
        .sum();
    assert_eq!(total, 70.0);
}

fn three(rho: [u8; 3]) -> RiskVector {
    RiskVector::from_pairs([(RiskId::Slide, rho[0]), (RiskId::Overturn, rho[1]), (RiskId::Spill, rho[2])])
}

#[test]
fn compound_reward_examples_and_decomposition() {
    let s = world(Setup::Unrestricted, 5);
    assert_eq!(compound_reward(&s, &s, &three([0, 0, 0])).unwrap(), 3.0);
    assert_eq!(compound_reward(&s, &s, &three([1, 1, 1])).unwrap(), 0.0);
    assert!(compound_reward(&s, &s, &RiskVector::from_pairs([(RiskId::Slide, 0)])).is_err());

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..1000 {
        let (prev, next) = random_pair(i);
        let rho = three([rng.random_range(0..=1), rng.random_range(0..=1), rng.random_range(0..=1)]);
        let parts = stir_reward(&prev, &next)
            + prevention_reward(&rho, &RiskId::Slide).unwrap()
            + prevention_reward(&rho, &RiskId::Overturn).unwrap()
            + prevention_reward(&rho, &RiskId::Spill).unwrap();
        assert!((compound_reward(&prev, &next, &rho).unwrap() - parts).abs() <= 1e-12);
    }
}

#[test]
fn initial_procedures_cross_the_activation_threshold() {
    let cases = [
        (RiskEstimator::slide(), Setup::Unrestricted),
        (RiskEstimator::overturn(), Setup::Unrestricted),
        (RiskEstimator::spill(), Setup::Fixed),
    ];
    for (estimator, setup) in cases {
        let mut triggered = 0;
        for seed in 0..10 {
            let mut s = world(setup, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            match initial_procedure(&mut s, &estimator, &mut rng) {
                Ok(()) => {
                    let chi = estimator.parameter().observe(&s).unwrap();
                    assert!(chi > estimator.kappa_a(), "{} observable {chi}", estimator.id());
                    triggered += 1;
                }
                Err(Error::Procedure { .. }) => {}
                Err(e) => panic!("{e}"),
            }
        }
        assert!(triggered >= 8, "{} triggered {triggered}/10", estimator.id());
    }
    let mut fixed = world(Setup::Fixed, 0);
    let err = initial_procedure(&mut fixed, &RiskEstimator::slide(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn slide_procedure_distance_is_within_one_to_two_thresholds() {
    for seed in 0..50 {
        let mut s = world(Setup::Unrestricted, seed);
        initial_procedure(&mut s, &RiskEstimator::slide(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let d = s.observe_d();
        assert!(d > 0.05 && d <= 0.1 + 1e-12, "d = {d}");
    }
}

#[test]
fn library_registration_is_append_only() {
    let l2 = SkillLibrary::new().with(common::stir()).unwrap().with(common::prevent(RiskId::Spill)).unwrap();
    let digests = |l: &SkillLibrary| -> Vec<Vec<u8>> { l.skills().iter().map(|s| s.policy.to_checkpoint().to_bytes()).collect() };
    let before = digests(&l2);

    let mut l3 = l2.clone();
    l3.register(common::prevent(RiskId::Slide)).unwrap();
    assert_eq!(l3.len(), 3);
    assert_eq!(digests(&l3)[..2], before[..]);

    let dup = l3.register(common::prevent(RiskId::Slide)).unwrap_err();
    assert!(matches!(dup, Error::DuplicateSkill(ref n) if n == "prevent_slide"));
    assert_eq!(l3.len(), 3);

    let l4 = l3.with(common::prevent(RiskId::Overturn)).unwrap();
    let names: Vec<&str> = l4.skills().iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, ["stir", "prevent_spill", "prevent_slide", "prevent_overturn"]);
    assert_eq!(digests(&l4)[..2], before[..]);
    assert_eq!(l4.base().unwrap().name, "stir");
    assert_eq!(l4.prevention(&RiskId::Overturn).unwrap().name, "prevent_overturn");
}

#[test]
fn library_without_a_base_skill() {
    assert!(matches!(SkillLibrary::new().base(), Err(Error::NoBaseSkill)));
    let only_prevention = SkillLibrary::new().with(common::prevent(RiskId::Spill)).unwrap();
    assert!(matches!(only_prevention.base(), Err(Error::NoBaseSkill)));
    let compound = SkillLibrary::new().with(common::spec("compound", SkillKind::Compound, 3)).unwrap();
    assert_eq!(compound.base().unwrap().name, "compound");
}

#[test]
fn manifest_round_trip_rebuilds_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let library = SkillLibrary::new()
        .with(common::stir())
        .unwrap()
        .with(common::prevent(RiskId::Spill))
        .unwrap()
        .with(common::prevent(RiskId::Slide))
        .unwrap();
    let mut manifest = Manifest::default();
    for s in library.skills() {
        let file = format!("{}.ckpt", s.name);
        let path = dir.path().join(&file);
        s.policy.to_checkpoint().save(&path).unwrap();
        manifest.push(Manifest::entry(&s.name, &s.kind, s.frame, file.into(), file_sha256(&path).unwrap())).unwrap();
    }
    let manifest_path = dir.path().join("library.toml");
    manifest.save(&manifest_path).unwrap();
    let loaded = Manifest::load(&manifest_path).unwrap();
    assert_eq!(loaded, manifest);
    assert_eq!(loaded.build_library(dir.path()).unwrap(), library);

    // a tampered checkpoint is refused
    std::fs::write(dir.path().join("stir.ckpt"), b"garbage").unwrap();
    assert!(matches!(loaded.build_library(dir.path()), Err(Error::Checkpoint(_))));
    std::fs::remove_file(dir.path().join("stir.ckpt")).unwrap();
    assert_eq!(loaded.build_library(dir.path()).unwrap_err().exit_code(), 3);
}
