use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::contact::{cap_fraction_above, circle_push, wall_project};
use super::{SimConfig, Setup, Vec2};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub position: Vec2,
    /// Pseudo-vertical coordinate of the particle center above the bowl floor.
    pub height: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BowlState {
    pub center: Vec2,
    pub initial_center: Vec2,
    pub tilt: f64,
    pub radius: f64,
    pub rim_height: f64,
    pub fixed: bool,
}

impl BowlState {
    /// Height of the lowest point of the rim once the bowl is tilted.
    pub fn effective_rim(&self) -> f64 {
        self.rim_height * self.tilt.cos() - self.radius * self.tilt.sin()
    }
}

/// Full simulator state. Cloning is cheap; the config is shared.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub spoon: Vec2,
    pub bowl: BowlState,
    pub particles: Vec<Particle>,
    pub phase: u32,
    pub step_count: u64,
    pub setup: Setup,
    pub rng: ChaCha8Rng,
    pub config: Arc<SimConfig>,
}

struct Contact {
    /// Outward wall penetration of the final relaxation sweep, times stiffness.
    wall_force: Vec2,
    /// Per particle: correction path length minus net motion, i.e. motion
    /// that was blocked by other contacts.
    squeeze: Vec<f64>,
    /// Per particle: net displacement imposed by the spoon.
    plowed: Vec<Vec2>,
}

/// Gauss-Seidel overlap relaxation in particle-index order: spoon push,
/// pairwise separation, wall projection.
fn relax(particles: &mut [Particle], spoon: Vec2, center: Vec2, wall_radius: f64, cfg: &SimConfig) -> Contact {
    let n = particles.len();
    let start: Vec<Vec2> = particles.iter().map(|p| p.position).collect();
    let mut path = vec![0.0; n];
    let mut plowed = vec![Vec2::ZERO; n];
    let mut wall_force = Vec2::ZERO;
    for iteration in 0..cfg.relax_iterations {
        let last = iteration + 1 == cfg.relax_iterations;
        for ((p, len), push) in particles.iter_mut().zip(&mut path).zip(&mut plowed) {
            let (pos, overlap) = circle_push(p.position, p.radius, spoon, cfg.spoon_radius);
            *push += pos - p.position;
            p.position = pos;
            *len += overlap;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (particles[i], particles[j]);
                let rel = b.position - a.position;
                let overlap = a.radius + b.radius - rel.norm();
                if overlap > 0.0 {
                    let normal = rel.normalized().unwrap_or(Vec2::new(1.0, 0.0));
                    particles[i].position -= normal * (0.5 * overlap);
                    particles[j].position += normal * (0.5 * overlap);
                    path[i] += 0.5 * overlap;
                    path[j] += 0.5 * overlap;
                }
            }
        }
        for (p, len) in particles.iter_mut().zip(&mut path) {
            let (projected, pen) = wall_project(p.position, p.radius, center, wall_radius);
            p.position = projected;
            *len += pen.norm();
            if last {
                wall_force += pen * cfg.contact_stiffness;
            }
        }
    }
    let squeeze = particles
        .iter()
        .zip(&start)
        .zip(&path)
        .map(|((p, s), len)| (len - (p.position - *s).norm()).max(0.0) / cfg.relax_iterations as f64)
        .collect();
    Contact { wall_force, squeeze, plowed }
}

/// Per-step side information for reward computation and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    /// Per-particle planar displacement relative to the bowl and in-bowl flag
    /// after the step.
    pub displacements: Vec<(f64, bool)>,
    pub spoon_force: Vec2,
    pub wall_force: Vec2,
    pub bowl_shift: Vec2,
}

/// `(phase + phi_step) mod phi_max`.
pub fn advance_phase(phase: u32, phi_step: u32, phi_max: u32) -> Result<u32> {
    if phi_max == 0 {
        return Err(Error::Config("phi_max must be > 0".into()));
    }
    Ok(((phase as u64 + phi_step as u64) % phi_max as u64) as u32)
}

/// Planar displacement of every particle relative to the bowl between two
/// states, with the in-bowl flag evaluated on `next`. With a resting bowl this
/// is the plain table-frame displacement.
///
/// # Panics
/// If the two states carry different particle counts.
pub fn displacements(prev: &WorldState, next: &WorldState) -> Vec<(f64, bool)> {
    assert_eq!(
        prev.particles.len(),
        next.particles.len(),
        "particle count changed within an episode"
    );
    prev.particles
        .iter()
        .zip(&next.particles)
        .enumerate()
        .map(|(k, (a, b))| {
            let moved = (b.position - next.bowl.center) - (a.position - prev.bowl.center);
            (moved.norm(), next.in_bowl(k))
        })
        .collect()
}

impl WorldState {
    pub fn reset(config: &SimConfig, setup: Setup) -> Result<Self> {
        Self::reset_seeded(config, setup, config.seed)
    }

    /// Bowl at the origin, spoon at its center, particles on a randomly rotated
    /// and jittered hexagonal lattice drawn from `seed`.
    pub fn reset_seeded(config: &SimConfig, setup: Setup, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = config.particle_radius;
        let bowl = BowlState {
            center: Vec2::ZERO,
            initial_center: Vec2::ZERO,
            tilt: 0.0,
            radius: config.bowl_radius,
            rim_height: config.rim_height,
            fixed: setup == Setup::Fixed,
        };

        let gap = 0.02 * r;
        let spacing = 2.0 * r + gap;
        let jitter = 0.45 * gap;
        let outer = config.bowl_radius - r - jitter;
        let inner = config.spoon_radius + r + jitter;
        let rotation: f64 = rng.random_range(0.0..std::f64::consts::FRAC_PI_3);
        let (u, v) = (Vec2::from_angle(rotation), Vec2::from_angle(rotation + std::f64::consts::FRAC_PI_3));
        let shift = u * rng.random_range(0.0..spacing) + v * rng.random_range(0.0..spacing);
        let span = (outer / spacing).ceil() as i64 + 2;
        let mut candidates = Vec::new();
        for i in -span..=span {
            for j in -span..=span {
                let p = u * (i as f64 * spacing) + v * (j as f64 * spacing) + shift;
                let dist = p.norm();
                if dist <= outer && dist >= inner {
                    candidates.push(p);
                }
            }
        }
        if candidates.len() < config.n_particles {
            return Err(Error::Config(format!(
                "cannot pack {} particles of radius {r} in the bowl (room for {})",
                config.n_particles,
                candidates.len()
            )));
        }
        // partial Fisher-Yates: deterministic choice of n lattice sites
        for k in 0..config.n_particles {
            let pick = rng.random_range(k..candidates.len());
            candidates.swap(k, pick);
        }
        let particles = candidates[..config.n_particles]
            .iter()
            .map(|&p| {
                let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let amount: f64 = rng.random_range(0.0..jitter);
                Particle { position: p + Vec2::from_angle(angle) * amount, height: 0.0, radius: r }
            })
            .collect();

        Ok(Self {
            spoon: Vec2::ZERO,
            bowl,
            particles,
            phase: 0,
            step_count: 0,
            setup,
            rng,
            config: Arc::new(config.clone()),
        })
    }

    /// Advances the simulation by one control step (one reward window).
    pub fn step(&mut self, action: Vec2) -> StepInfo {
        let cfg = Arc::clone(&self.config);
        let before: Vec<Vec2> = self.particles.iter().map(|p| p.position - self.bowl.center).collect();
        let action = if action.is_finite() { action.clamp_norm(cfg.max_action_norm) } else { Vec2::ZERO };
        let k = cfg.contact_stiffness;
        let reach = self.bowl.radius - cfg.spoon_radius;
        let target = (self.spoon + action).clamp_box(cfg.eta);

        // trial contact pass against the current bowl pose gives the load on the bowl
        let (trial_spoon, spoon_force) = self.blocked_spoon(target, reach, k);
        let mut trial = self.particles.clone();
        let trial_contact = relax(&mut trial, trial_spoon, self.bowl.center, self.bowl.radius, &cfg);

        let mut bowl_shift = Vec2::ZERO;
        if !self.bowl.fixed {
            let drag = trial_contact.plowed.iter().fold(Vec2::ZERO, |acc, &v| acc + v) * (cfg.floor_drag * k);
            let total = spoon_force + trial_contact.wall_force + drag;
            let magnitude = total.norm();
            if magnitude > cfg.static_friction_threshold {
                bowl_shift = total * (cfg.slide_gain * (magnitude - cfg.static_friction_threshold) / (k * magnitude));
            }
            let restoring = cfg.tilt_restoring * (1.0 - self.bowl.tilt / cfg.tip_angle);
            self.bowl.tilt = (self.bowl.tilt + cfg.tilt_gain * spoon_force.norm() - restoring)
                .clamp(0.0, std::f64::consts::FRAC_PI_2);
            // the contents ride with the bowl; the yielding bowl absorbs part of the push
            self.bowl.center += bowl_shift;
            for p in &mut self.particles {
                p.position += bowl_shift;
            }
        }

        let (spoon, _) = self.blocked_spoon(target, reach, k);
        self.spoon = spoon;
        // the curved floor draws particles back toward the middle
        for p in &mut self.particles {
            p.position -= (p.position - self.bowl.center) * cfg.floor_curvature;
        }
        let contact = relax(&mut self.particles, self.spoon, self.bowl.center, self.bowl.radius, &cfg);

        // jammed and plowed particles ride up, free ones settle
        let cap = self.bowl.rim_height + 2.0 * cfg.particle_radius;
        for ((p, squeeze), plowed) in self.particles.iter_mut().zip(&contact.squeeze).zip(&contact.plowed) {
            let lift = cfg.pile_packing_coefficient * squeeze + cfg.plow_lift * plowed.norm();
            let h = p.height * (1.0 - cfg.settle_rate) + lift;
            p.height = h.min(cap);
        }

        self.phase = advance_phase(self.phase, cfg.phi_step, cfg.phi_max).expect("validated config");
        self.step_count += 1;
        self.assert_finite();

        let displacements = before
            .iter()
            .zip(&self.particles)
            .enumerate()
            .map(|(k, (a, p))| ((p.position - self.bowl.center - *a).norm(), self.in_bowl(k)))
            .collect();
        StepInfo { displacements, spoon_force, wall_force: contact.wall_force, bowl_shift }
    }

    /// The wall stops the spoon; the blocked motion becomes a force on the bowl.
    fn blocked_spoon(&self, target: Vec2, reach: f64, k: f64) -> (Vec2, Vec2) {
        let rel = target - self.bowl.center;
        match rel.normalized() {
            Some(n) if rel.norm() > reach => (self.bowl.center + n * reach, n * (k * (rel.norm() - reach))),
            _ => (target, Vec2::ZERO),
        }
    }

    fn assert_finite(&self) {
        assert!(self.spoon.is_finite(), "spoon position became non-finite");
        assert!(
            self.bowl.center.is_finite() && self.bowl.tilt.is_finite(),
            "bowl pose became non-finite"
        );
        assert!(
            self.particles.iter().all(|p| p.position.is_finite() && p.height.is_finite()),
            "particle state became non-finite"
        );
    }

    /// Distance between the bowl's current and initial centers.
    pub fn observe_d(&self) -> f64 {
        (self.bowl.center - self.bowl.initial_center).norm()
    }

    /// Tilt relative to the initial (upright) pose.
    pub fn observe_theta(&self) -> f64 {
        self.bowl.tilt
    }

    /// Maximum over particles of the volume fraction above the rim plane.
    pub fn observe_v(&self) -> f64 {
        (0..self.particles.len()).map(|k| self.excluded_ratio(k)).fold(0.0, f64::max)
    }

    pub fn excluded_ratio(&self, k: usize) -> f64 {
        let p = &self.particles[k];
        cap_fraction_above(p.height, p.radius, self.bowl.effective_rim())
    }

    /// Planar distance from the bowl center within the bowl radius and not
    /// entirely above the rim.
    pub fn in_bowl(&self, k: usize) -> bool {
        let p = &self.particles[k];
        (p.position - self.bowl.center).norm() <= self.bowl.radius && self.excluded_ratio(k) < 1.0
    }

    /// Translates the bowl and its contents; the spoon keeps its table
    /// position but is kept inside the bowl.
    pub fn displace_bowl(&mut self, offset: Vec2) {
        self.bowl.center += offset;
        for p in &mut self.particles {
            p.position += offset;
        }
        let reach = self.bowl.radius - self.config.spoon_radius;
        let rel = self.spoon - self.bowl.center;
        if rel.norm() > reach {
            self.spoon = self.bowl.center + rel.normalized().unwrap_or(Vec2::new(1.0, 0.0)) * reach;
        }
    }
}
