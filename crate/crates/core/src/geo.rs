//! Planar geometry over the local east-north frame.
//!
//! Positions are metres east (`x`) and north (`y`) of the scenario origin.
//! Antenna heights are carried separately and only combined in
//! [`distance_3d`]; sea level is the height datum.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Tolerance used when classifying a point as lying on a polygon edge.
pub const BOUNDARY_EPS_M: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnuPoint {
    pub x: f64,
    pub y: f64,
}

impl EnuPoint {
    pub const ORIGIN: EnuPoint = EnuPoint { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: EnuPoint) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    fn lex_cmp(&self, other: &Self) -> Ordering {
        self.x
            .total_cmp(&other.x)
            .then_with(|| self.y.total_cmp(&other.y))
    }
}

impl Add for EnuPoint {
    type Output = EnuPoint;
    fn add(self, rhs: EnuPoint) -> EnuPoint {
        EnuPoint::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for EnuPoint {
    type Output = EnuPoint;
    fn sub(self, rhs: EnuPoint) -> EnuPoint {
        EnuPoint::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for EnuPoint {
    type Output = EnuPoint;
    fn mul(self, k: f64) -> EnuPoint {
        EnuPoint::new(self.x * k, self.y * k)
    }
}

/// WGS-84-ish latitude/longitude in degrees. No datum handling.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Geodetic {
    pub lat: f64,
    pub lon: f64,
}

impl Geodetic {
    pub const fn new(lat: f64, lon: f64) -> Self {
        Self { lat, lon }
    }
}

/// Equirectangular projection around `origin`. Only valid within one degree
/// of the origin in both axes.
pub fn project(origin: Geodetic, p: Geodetic) -> Result<EnuPoint> {
    let dlat = p.lat - origin.lat;
    let dlon = p.lon - origin.lon;
    if !(dlat.abs() < 1.0 && dlon.abs() < 1.0) {
        return Err(Error::ProjectionRange { lat: p.lat, lon: p.lon });
    }
    let k = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
    Ok(EnuPoint::new(
        dlon * origin.lat.to_radians().cos() * k,
        dlat * k,
    ))
}

/// Inverse of [`project`].
pub fn unproject(origin: Geodetic, p: EnuPoint) -> Geodetic {
    let k = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
    Geodetic::new(
        origin.lat + p.y / k,
        origin.lon + p.x / (k * origin.lat.to_radians().cos()),
    )
}

pub fn distance_3d(a: EnuPoint, height_a: f64, b: EnuPoint, height_b: f64) -> f64 {
    let d = b - a;
    let dh = height_b - height_a;
    (d.x * d.x + d.y * d.y + dh * dh).sqrt()
}

/// Axis-aligned planning extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: EnuPoint,
    pub max: EnuPoint,
}

impl BoundingBox {
    pub fn new(min: EnuPoint, max: EnuPoint) -> Self {
        Self { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.min.is_finite() && self.max.is_finite())
            || self.width() <= 0.0
            || self.height() <= 0.0
    }

    /// Smallest box around `points`, grown by `pad` on every side.
    pub fn around(points: impl IntoIterator<Item = EnuPoint>, pad: f64) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let (mut lo, mut hi) = (first, first);
        for p in it {
            lo = EnuPoint::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = EnuPoint::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        Some(Self::new(
            lo - EnuPoint::new(pad, pad),
            hi + EnuPoint::new(pad, pad),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Containment {
    Inside,
    Boundary,
    Outside,
}

/// Simple polygon with counterclockwise vertex order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polygon {
    vertices: Vec<EnuPoint>,
}

impl Polygon {
    /// Validates a vertex ring. Clockwise input is reversed so the stored
    /// order is always counterclockwise.
    pub fn new(mut vertices: Vec<EnuPoint>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidPolygon(format!(
                "need at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPolygon("non-finite vertex".into()));
        }
        let area = signed_area(&vertices);
        if area == 0.0 {
            return Err(Error::InvalidPolygon("zero area".into()));
        }
        if !is_simple(&vertices) {
            return Err(Error::InvalidPolygon("edges intersect".into()));
        }
        if area < 0.0 {
            vertices.reverse();
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[EnuPoint] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    fn edges(&self) -> impl Iterator<Item = (EnuPoint, EnuPoint)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }
}

fn signed_area(v: &[EnuPoint]) -> f64 {
    let n = v.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum();
    twice / 2.0
}

fn cross(o: EnuPoint, a: EnuPoint, b: EnuPoint) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn segments_intersect(p1: EnuPoint, p2: EnuPoint, q1: EnuPoint, q2: EnuPoint) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: EnuPoint, b: EnuPoint, p: EnuPoint, d: f64| {
        d == 0.0 && p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

fn is_simple(v: &[EnuPoint]) -> bool {
    let n = v.len();
    for i in 0..n {
        for j in (i + 1)..n {
            // adjacent edges share a vertex
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

/// Andrew's monotone chain. Collinear boundary points are dropped and the
/// ring starts at the lexicographically smallest vertex.
pub fn convex_hull(points: &[EnuPoint]) -> Result<Polygon> {
    if points.len() < 3 {
        return Err(Error::DegenerateHull(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::DegenerateHull("non-finite point".into()));
    }
    let mut pts = points.to_vec();
    pts.sort_by(EnuPoint::lex_cmp);
    pts.dedup();

    let mut lower: Vec<EnuPoint> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<EnuPoint> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 3 {
        return Err(Error::DegenerateHull("all points are collinear".into()));
    }
    Ok(Polygon { vertices: lower })
}

fn distance_to_segment(p: EnuPoint, a: EnuPoint, b: EnuPoint) -> f64 {
    let ab = b - a;
    let len2 = ab.x * ab.x + ab.y * ab.y;
    if len2 == 0.0 {
        return p.distance(a);
    }
    let ap = p - a;
    let t = ((ap.x * ab.x + ap.y * ab.y) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// Even-odd classification with an explicit boundary band of
/// [`BOUNDARY_EPS_M`].
pub fn point_in_polygon(p: EnuPoint, poly: &Polygon) -> Containment {
    if poly
        .edges()
        .any(|(a, b)| distance_to_segment(p, a, b) <= BOUNDARY_EPS_M)
    {
        return Containment::Boundary;
    }
    let mut inside = false;
    for (a, b) in poly.edges() {
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    if inside {
        Containment::Inside
    } else {
        Containment::Outside
    }
}

/// Projects `p` onto the disk of `radius` around `center`. A point exactly at
/// the centre is returned unchanged.
pub fn clamp_to_disk(p: EnuPoint, center: EnuPoint, radius: f64) -> EnuPoint {
    let offset = p - center;
    let dist = offset.norm();
    if dist <= radius {
        return p;
    }
    let out = center + offset * (radius / dist);
    // rounding in the scale can leave the result a few ulps outside
    if out.distance(center) > radius {
        center + offset * ((radius / dist) * (1.0 - f64::EPSILON))
    } else {
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Polygon {
        Polygon::new(vec![
            EnuPoint::new(0.0, 0.0),
            EnuPoint::new(1.0, 0.0),
            EnuPoint::new(1.0, 1.0),
            EnuPoint::new(0.0, 1.0),
        ])
        .unwrap()
    }

    #[test]
    fn project_identity_at_origin() {
        let o = Geodetic::new(22.3, 39.1);
        let p = project(o, o).unwrap();
        assert_eq!(p, EnuPoint::ORIGIN);
    }

    #[test]
    fn project_north_and_east() {
        let o = Geodetic::new(0.0, 0.0);
        let north = project(o, Geodetic::new(0.009, 0.0)).unwrap();
        assert!((north.y - 1000.75).abs() < 0.1, "{north:?}");
        let east = project(o, Geodetic::new(0.0, 0.009)).unwrap();
        assert!((east.x - 1000.75).abs() < 0.1);
        let o60 = Geodetic::new(60.0, 0.0);
        let east60 = project(o60, Geodetic::new(60.0, 0.009)).unwrap();
        assert!((east60.x - 500.38).abs() < 0.1, "{east60:?}");
    }

    #[test]
    fn project_out_of_range() {
        let o = Geodetic::new(22.0, 39.0);
        let err = project(o, Geodetic::new(23.5, 39.0)).unwrap_err();
        assert_eq!(err.code(), "PROJECTION_RANGE");
        assert!(project(o, Geodetic::new(22.0, 40.0)).is_err());
    }

    #[test]
    fn distance_3d_examples() {
        let a = EnuPoint::new(10.0, -3.0);
        assert_eq!(distance_3d(a, 2.0, a, 2.0), 0.0);
        assert_eq!(distance_3d(EnuPoint::ORIGIN, 0.0, EnuPoint::new(3.0, 4.0), 0.0), 5.0);
        let d = distance_3d(EnuPoint::ORIGIN, 18.0, EnuPoint::new(2000.0, 0.0), 1.5);
        assert!((d - 2000.068).abs() < 1e-3, "{d}");
    }

    #[test]
    fn hull_drops_interior_point() {
        let pts = [
            EnuPoint::new(0.0, 0.0),
            EnuPoint::new(1.0, 0.0),
            EnuPoint::new(1.0, 1.0),
            EnuPoint::new(0.0, 1.0),
            EnuPoint::new(0.5, 0.5),
        ];
        let hull = convex_hull(&pts).unwrap();
        assert_eq!(
            hull.vertices(),
            &[
                EnuPoint::new(0.0, 0.0),
                EnuPoint::new(1.0, 0.0),
                EnuPoint::new(1.0, 1.0),
                EnuPoint::new(0.0, 1.0),
            ]
        );
    }

    #[test]
    fn hull_of_triangle_is_triangle() {
        let pts = [EnuPoint::new(2.0, 0.0), EnuPoint::new(0.0, 3.0), EnuPoint::new(-1.0, -1.0)];
        let hull = convex_hull(&pts).unwrap();
        assert_eq!(hull.len(), 3);
        assert_eq!(hull.vertices()[0], EnuPoint::new(-1.0, -1.0));
        assert!(hull.area() > 0.0);
    }

    #[test]
    fn hull_excludes_collinear_edge_points() {
        let pts = [
            EnuPoint::new(0.0, 0.0),
            EnuPoint::new(0.5, 0.0),
            EnuPoint::new(1.0, 0.0),
            EnuPoint::new(0.0, 1.0),
        ];
        assert_eq!(convex_hull(&pts).unwrap().len(), 3);
    }

    #[test]
    fn hull_degenerate_inputs() {
        assert_eq!(
            convex_hull(&[EnuPoint::ORIGIN, EnuPoint::new(1.0, 1.0)]).unwrap_err().code(),
            "DEGENERATE_HULL"
        );
        let line: Vec<_> = (0..5).map(|i| EnuPoint::new(i as f64, 2.0 * i as f64)).collect();
        assert_eq!(convex_hull(&line).unwrap_err().code(), "DEGENERATE_HULL");
        let same = [EnuPoint::ORIGIN; 4];
        assert!(convex_hull(&same).is_err());
    }

    #[test]
    fn containment_examples() {
        let sq = square();
        assert_eq!(point_in_polygon(EnuPoint::new(0.5, 0.5), &sq), Containment::Inside);
        assert_eq!(point_in_polygon(EnuPoint::new(2.0, 0.0), &sq), Containment::Outside);
        assert_eq!(point_in_polygon(EnuPoint::new(1.0, 0.5), &sq), Containment::Boundary);
        assert_eq!(point_in_polygon(EnuPoint::new(0.0, 0.0), &sq), Containment::Boundary);
    }

    #[test]
    fn polygon_rejects_bowtie_and_reorders_clockwise() {
        let bowtie = vec![
            EnuPoint::new(0.0, 0.0),
            EnuPoint::new(1.0, 1.0),
            EnuPoint::new(1.0, 0.0),
            EnuPoint::new(0.0, 1.0),
        ];
        assert!(Polygon::new(bowtie).is_err());
        let cw = Polygon::new(vec![
            EnuPoint::new(0.0, 0.0),
            EnuPoint::new(0.0, 1.0),
            EnuPoint::new(1.0, 1.0),
        ])
        .unwrap();
        assert!(cw.area() > 0.0);
    }

    #[test]
    fn clamp_examples() {
        let c = EnuPoint::ORIGIN;
        let inside = EnuPoint::new(3.0, -4.0);
        assert_eq!(clamp_to_disk(inside, c, 10.0), inside);
        let out = clamp_to_disk(EnuPoint::new(30.0, 40.0), c, 10.0);
        assert!((out.x - 6.0).abs() < 1e-12 && (out.y - 8.0).abs() < 1e-12);
        assert_eq!(clamp_to_disk(c, c, 10.0), c);
    }

    #[test]
    fn bounding_box_around_points() {
        let bb = BoundingBox::around([EnuPoint::new(1.0, 2.0), EnuPoint::new(-1.0, 5.0)], 1.0).unwrap();
        assert_eq!(bb.min, EnuPoint::new(-2.0, 1.0));
        assert_eq!(bb.max, EnuPoint::new(2.0, 6.0));
        assert!(BoundingBox::around(std::iter::empty(), 1.0).is_none());
        assert!(BoundingBox::new(EnuPoint::ORIGIN, EnuPoint::new(0.0, 5.0)).is_degenerate());
    }
}
