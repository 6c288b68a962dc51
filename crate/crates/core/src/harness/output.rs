use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::write_atomic;
use crate::sim::Vec2;

/// Prefix of the provenance line every CSV starts with.
pub const HASH_PREFIX: &str = "# config_hash: ";

/// Writes `# config_hash: <hash>` followed by whatever `body` emits, atomically.
pub fn write_csv_with_hash(path: &Path, hash: &str, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut bytes = Vec::new();
    writeln!(bytes, "{HASH_PREFIX}{hash}")?;
    body(&mut bytes)?;
    write_atomic(path, &bytes)
}

/// Reads a CSV written by [`write_csv_with_hash`]: the hash and a reader over the rest.
pub fn read_csv_with_hash(path: &Path) -> Result<(String, csv::Reader<std::io::Cursor<Vec<u8>>>)> {
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingArtifact(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    let mut cursor = std::io::Cursor::new(bytes);
    let mut first = String::new();
    cursor.read_line(&mut first)?;
    let hash = first
        .trim_end()
        .strip_prefix(HASH_PREFIX)
        .ok_or_else(|| Error::Config(format!("{}: missing config hash line", path.display())))?
        .to_string();
    Ok((hash, csv::Reader::from_reader(cursor)))
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
}

impl Aggregate {
    /// `None` for an empty slice. One value has zero spread.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, std })
    }
}

pub const NOT_APPLICABLE: &str = "N/A";

pub fn cell(value: Option<f64>) -> String {
    value.map_or_else(|| NOT_APPLICABLE.to_string(), |v| v.to_string())
}

pub fn parse_cell(text: &str) -> Result<Option<f64>> {
    if text == NOT_APPLICABLE {
        return Ok(None);
    }
    text.parse().map(Some).map_err(|_| Error::Config(format!("bad numeric cell `{text}`")))
}

fn cross(o: Vec2, a: Vec2, b: Vec2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Convex hull (monotone chain), counter-clockwise, without collinear points.
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Vec2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vec2>> = if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Area enclosed by a simple polygon (shoelace), always >= 0.
pub fn polygon_area(polygon: &[Vec2]) -> f64 {
    let n = polygon.len();
    if n < 3 {
        return 0.0;
    }
    let twice: f64 = (0..n).map(|i| {
        let (a, b) = (polygon[i], polygon[(i + 1) % n]);
        a.x * b.y - b.x * a.y
    }).sum();
    twice.abs() / 2.0
}

pub fn hull_area(points: &[Vec2]) -> f64 {
    polygon_area(&convex_hull(points))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_of_square_with_interior_points() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.5, 0.5), (0.2, 0.7), (0.5, 0.0)]
            .map(|(x, y)| Vec2::new(x, y));
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 4);
        assert!((hull_area(&pts) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_hulls_have_zero_area() {
        assert_eq!(hull_area(&[]), 0.0);
        assert_eq!(hull_area(&[Vec2::new(1.0, 2.0)]), 0.0);
        let line: Vec<Vec2> = (0..10).map(|i| Vec2::new(i as f64, 2.0 * i as f64)).collect();
        assert_eq!(hull_area(&line), 0.0);
    }

    #[test]
    fn sample_std() {
        let a = Aggregate::of(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]).unwrap();
        assert_eq!(a.mean, 5.0);
        assert!((a.std - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert_eq!(Aggregate::of(&[3.0]).unwrap().std, 0.0);
        assert!(Aggregate::of(&[]).is_none());
    }
}
