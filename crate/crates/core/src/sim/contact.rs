//! Closed-form geometry used by the contact solver and the spill observable.

use super::Vec2;

/// Pushes a disc of radius `radius` at `position` out of a kinematic disc
/// (`pusher`, `pusher_radius`) along the contact normal.
///
/// Returns the corrected position and the overlap that was removed (zero when
/// the discs do not touch). Coincident centers resolve along +x.
pub fn circle_push(position: Vec2, radius: f64, pusher: Vec2, pusher_radius: f64) -> (Vec2, f64) {
    let rel = position - pusher;
    let reach = radius + pusher_radius;
    let dist = rel.norm();
    if dist >= reach {
        return (position, 0.0);
    }
    let normal = rel.normalized().unwrap_or(Vec2::new(1.0, 0.0));
    (pusher + normal * reach, reach - dist)
}

/// Keeps a disc inside a circular wall. Returns the projected position and the
/// outward penetration vector (zero when inside).
pub fn wall_project(position: Vec2, radius: f64, center: Vec2, wall_radius: f64) -> (Vec2, Vec2) {
    let limit = wall_radius - radius;
    let rel = position - center;
    let dist = rel.norm();
    if dist <= limit {
        return (position, Vec2::ZERO);
    }
    let normal = rel.normalized().unwrap_or(Vec2::new(1.0, 0.0));
    (center + normal * limit, normal * (dist - limit))
}

/// Fraction of a sphere's volume lying above a horizontal plane.
///
/// `center_height` is the sphere center and `plane_height` the plane, both on
/// the same vertical axis.
pub fn cap_fraction_above(center_height: f64, radius: f64, plane_height: f64) -> f64 {
    let cap = center_height + radius - plane_height;
    if cap <= 0.0 {
        0.0
    } else if cap >= 2.0 * radius {
        1.0
    } else {
        // V_cap = pi a^2 (3r - a) / 3 over V = 4 pi r^3 / 3
        cap * cap * (3.0 * radius - cap) / (4.0 * radius.powi(3))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_resolves_to_touching_distance() {
        let (p, overlap) = circle_push(Vec2::new(0.015, 0.0), 0.01, Vec2::ZERO, 0.01);
        assert!((p.x - 0.02).abs() < 1e-15);
        assert!((overlap - 0.005).abs() < 1e-15);
    }

    #[test]
    fn separated_discs_are_untouched() {
        let q = Vec2::new(0.05, 0.01);
        assert_eq!(circle_push(q, 0.01, Vec2::ZERO, 0.01), (q, 0.0));
    }

    #[test]
    fn cap_fraction_limits() {
        assert_eq!(cap_fraction_above(0.0, 0.01, 0.08), 0.0);
        assert_eq!(cap_fraction_above(0.2, 0.01, 0.08), 1.0);
        assert!((cap_fraction_above(0.08, 0.01, 0.08) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn wall_projection_reports_penetration() {
        let (p, pen) = wall_project(Vec2::new(0.08, 0.0), 0.01, Vec2::ZERO, 0.08);
        assert!((p.x - 0.07).abs() < 1e-15);
        assert!((pen.x - 0.01).abs() < 1e-15);
    }
}
