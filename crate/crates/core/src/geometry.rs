//! Planar rotation sets: convex hulls of periodic-orbit rotation vectors,
//! faces `F_α`, and the direction sets `γ(w)` of their vertices.

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::symbolic::{
    enumerate_periodic_orbits, periodic_rv_unchecked, Direction, PeriodicOrbit, PotentialTable,
};

pub type Point = [f64; 2];

/// Points closer than this are merged before hulling.
pub const DEDUP_TOL: f64 = 1e-12;
/// Turns whose sine is below this count as straight.
pub const COLLINEAR_TOL: f64 = 1e-12;
/// Two vertices within this of the maximal `α·w` form an edge face.
pub const FACE_TIE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum HullKind {
    Point,
    Segment,
    Polygon,
}

/// A convex polygon with counterclockwise vertices.
///
/// Degenerate hulls keep their vertices (one point, or the two endpoints of
/// a segment) and are marked by `kind`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Polygon2 {
    vertices: Vec<Point>,
    normals: Vec<Point>,
    kind: HullKind,
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// `true` when `o → a → b` turns strictly left.
fn left_turn(o: Point, a: Point, b: Point) -> bool {
    let scale = norm(sub(a, o)) * norm(sub(b, o));
    cross(o, a, b) > COLLINEAR_TOL * scale
}

impl Polygon2 {
    fn from_ccw(vertices: Vec<Point>) -> Self {
        let kind = match vertices.len() {
            1 => HullKind::Point,
            2 => HullKind::Segment,
            _ => HullKind::Polygon,
        };
        let n = vertices.len();
        let normals = if n < 2 {
            Vec::new()
        } else {
            (0..n)
                .map(|i| {
                    let d = sub(vertices[(i + 1) % n], vertices[i]);
                    let len = norm(d);
                    [d[1] / len, -d[0] / len]
                })
                .collect()
        };
        Self {
            vertices,
            normals,
            kind,
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Outward unit normal of the edge from vertex `i` to vertex `i+1`.
    pub fn normals(&self) -> &[Point] {
        &self.normals
    }

    pub fn kind(&self) -> HullKind {
        self.kind
    }

    pub fn is_degenerate(&self) -> bool {
        self.kind != HullKind::Polygon
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        0.5 * (0..n)
            .map(|i| {
                let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
                a[0] * b[1] - a[1] * b[0]
            })
            .sum::<f64>()
    }

    /// `max_{w ∈ poly} α·w`.
    pub fn support(&self, alpha: &Direction) -> f64 {
        self.vertices
            .iter()
            .map(|v| alpha.dot(v))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest distance from `w` to an edge line, positive inside. Returns
    /// `None` for degenerate polygons, which have empty interior.
    pub fn interior_margin(&self, w: Point) -> Option<f64> {
        if self.is_degenerate() {
            return None;
        }
        Some(
            self.vertices
                .iter()
                .zip(&self.normals)
                .map(|(v, n)| dot(*n, sub(*v, w)))
                .fold(f64::INFINITY, f64::min),
        )
    }

    /// `true` when `w` lies in the polygon up to `tol`.
    pub fn contains(&self, w: Point, tol: f64) -> bool {
        match self.kind {
            HullKind::Point => norm(sub(w, self.vertices[0])) <= tol,
            HullKind::Segment => {
                let (a, b) = (self.vertices[0], self.vertices[1]);
                let ab = sub(b, a);
                let s = (dot(sub(w, a), ab) / dot(ab, ab)).clamp(0.0, 1.0);
                norm(sub(w, [a[0] + s * ab[0], a[1] + s * ab[1]])) <= tol
            }
            HullKind::Polygon => self.interior_margin(w).map_or(false, |m| m >= -tol),
        }
    }

    pub fn vertex_index(&self, w: Point, tol: f64) -> Option<usize> {
        self.vertices.iter().position(|v| norm(sub(*v, w)) <= tol)
    }
}

/// Minimal counterclockwise vertex list of the convex hull (monotone chain).
pub fn convex_hull_2d(points: &[Point]) -> Result<Polygon2> {
    if points.is_empty() {
        return Err(Error::contract("convex hull needs at least one point"));
    }
    if points
        .iter()
        .any(|p| !p[0].is_finite() || !p[1].is_finite())
    {
        return Err(Error::contract("hull points must be finite"));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut uniq: Vec<Point> = Vec::with_capacity(pts.len());
    for p in pts {
        let dup = uniq
            .iter()
            .rev()
            .take_while(|u| p[0] - u[0] <= DEDUP_TOL)
            .any(|u| (p[1] - u[1]).abs() <= DEDUP_TOL);
        if !dup {
            uniq.push(p);
        }
    }
    if uniq.len() == 1 {
        return Ok(Polygon2::from_ccw(uniq));
    }

    let chain = |iter: &mut dyn Iterator<Item = Point>| {
        let mut h: Vec<Point> = Vec::new();
        for p in iter {
            while h.len() >= 2 && !left_turn(h[h.len() - 2], h[h.len() - 1], p) {
                h.pop();
            }
            h.push(p);
        }
        h
    };
    let mut lower = chain(&mut uniq.iter().copied());
    let mut upper = chain(&mut uniq.iter().rev().copied());
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() == 2 && norm(sub(lower[0], lower[1])) <= DEDUP_TOL {
        lower.pop();
    }
    Ok(Polygon2::from_ccw(lower))
}

/// Rotation vectors of every periodic orbit of period at most `max_period`.
pub fn periodic_rotation_points(
    phi: &PotentialTable,
    max_period: usize,
) -> Result<Vec<(PeriodicOrbit, Vec<f64>)>> {
    let orbits = enumerate_periodic_orbits(phi.alphabet_size(), max_period)?;
    Ok(orbits
        .into_iter()
        .map(|o| {
            let rv = periodic_rv_unchecked(o.generator().symbols(), phi);
            (o, rv)
        })
        .collect())
}

/// Inner approximation of the rotation set of a planar potential: the hull of
/// periodic-orbit rotation vectors up to `max_period`.
pub fn rotation_polytope_periodic(phi: &PotentialTable, max_period: usize) -> Result<Polygon2> {
    if phi.dim() != 2 {
        return Err(Error::contract(format!(
            "rotation polygons need a planar potential, got dimension {}",
            phi.dim()
        )));
    }
    let pts: Vec<Point> = periodic_rotation_points(phi, max_period)?
        .into_iter()
        .map(|(_, rv)| [rv[0], rv[1]])
        .collect();
    convex_hull_2d(&pts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FaceKind {
    Vertex,
    Edge,
}

/// The face of a polygon exposed by a direction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Face2 {
    pub kind: FaceKind,
    /// One point, or the edge endpoints in counterclockwise order.
    pub points: Vec<Point>,
    pub direction: Direction,
}

impl Face2 {
    /// Distance from `w` to the face.
    pub fn distance(&self, w: Point) -> f64 {
        match self.kind {
            FaceKind::Vertex => norm(sub(w, self.points[0])),
            FaceKind::Edge => {
                let (a, b) = (self.points[0], self.points[1]);
                let ab = sub(b, a);
                let s = (dot(sub(w, a), ab) / dot(ab, ab)).clamp(0.0, 1.0);
                norm(sub(w, [a[0] + s * ab[0], a[1] + s * ab[1]]))
            }
        }
    }
}

pub fn face_of_direction(poly: &Polygon2, alpha: &Direction) -> Result<Face2> {
    face_of_direction_with_tol(poly, alpha, FACE_TIE_TOL)
}

/// Vertex or edge of `poly` maximizing `α·w`; an edge when two adjacent
/// vertices tie within `tie_tol`.
pub fn face_of_direction_with_tol(
    poly: &Polygon2,
    alpha: &Direction,
    tie_tol: f64,
) -> Result<Face2> {
    if alpha.dim() != 2 {
        return Err(Error::contract("planar faces need a planar direction"));
    }
    let n = poly.vertices.len();
    let values: Vec<f64> = poly.vertices.iter().map(|v| alpha.dot(v)).collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<bool> = values.iter().map(|v| *v >= best - tie_tol).collect();
    let top = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("polygons have vertices");
    if n == 1 {
        return Ok(Face2 {
            kind: FaceKind::Vertex,
            points: vec![poly.vertices[0]],
            direction: alpha.clone(),
        });
    }
    // grow the tied run around the best vertex
    let mut first = top;
    let mut last = top;
    for _ in 1..n {
        let prev = (first + n - 1) % n;
        if prev == last || !tied[prev] {
            break;
        }
        first = prev;
    }
    for _ in 1..n {
        let next = (last + 1) % n;
        if next == first || !tied[next] {
            break;
        }
        last = next;
    }
    if first == last {
        Ok(Face2 {
            kind: FaceKind::Vertex,
            points: vec![poly.vertices[top]],
            direction: alpha.clone(),
        })
    } else {
        Ok(Face2 {
            kind: FaceKind::Edge,
            points: vec![poly.vertices[first], poly.vertices[last]],
            direction: alpha.clone(),
        })
    }
}

/// Closed arc of unit directions `[start, end]` (radians), `end - start < π`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DirectionSet {
    pub start: f64,
    pub end: f64,
}

impl DirectionSet {
    pub fn width(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains(&self, alpha: &Direction, tol: f64) -> bool {
        let c = alpha.components();
        let phi = c[1].atan2(c[0]);
        let d = (phi - self.start).rem_euclid(TAU);
        d <= self.width() + tol || d >= TAU - tol
    }

    /// Direction at fraction `s ∈ [0, 1]` along the arc.
    pub fn interpolate(&self, s: f64) -> Direction {
        Direction::from_angle(self.start + s * self.width())
    }
}

/// Outward normals of the supporting lines at vertex `w`: the arc between
/// the normals of the edges entering and leaving `w`.
pub fn direction_set_of_vertex(poly: &Polygon2, w: Point) -> Result<DirectionSet> {
    if poly.is_degenerate() {
        return Err(Error::domain(
            "direction sets are defined only for nondegenerate polygons",
        ));
    }
    let i = poly
        .vertex_index(w, FACE_TIE_TOL)
        .ok_or_else(|| Error::domain(format!("{w:?} is not a vertex of the polygon")))?;
    let n = poly.vertices.len();
    let incoming = poly.normals[(i + n - 1) % n];
    let outgoing = poly.normals[i];
    let start = incoming[1].atan2(incoming[0]);
    let width = (outgoing[1].atan2(outgoing[0]) - start).rem_euclid(TAU);
    debug_assert!(width < PI);
    Ok(DirectionSet {
        start,
        end: start + width,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn square() -> Polygon2 {
        convex_hull_2d(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]]).unwrap()
    }

    #[test]
    fn square_hull() {
        let p = square();
        assert_eq!(
            p.vertices(),
            &[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
        );
        assert_eq!(p.kind(), HullKind::Polygon);
        assert!(p.signed_area() > 0.0);
        assert_eq!(p.normals()[0], [0.0, -1.0]);
    }

    #[test]
    fn collinear_points_make_a_segment() {
        let p = convex_hull_2d(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).unwrap();
        assert_eq!(p.kind(), HullKind::Segment);
        assert_eq!(p.vertices(), &[[0.0, 0.0], [2.0, 2.0]]);
        let p = convex_hull_2d(&[[3.0, 7.0], [3.0, 7.0 + 1e-14]]).unwrap();
        assert_eq!(p.kind(), HullKind::Point);
    }

    #[test]
    fn dominating_diamond() {
        let mut pts = vec![[2.0, 0.0], [0.0, 2.0], [-2.0, 0.0], [0.0, -2.0]];
        let mut s = 12345u64;
        for _ in 0..100 {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
            let r = (s >> 11) as f64 / (1u64 << 53) as f64;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
            let a = (s >> 11) as f64 / (1u64 << 53) as f64 * TAU;
            pts.push([r * a.cos(), r * a.sin()]);
        }
        let p = convex_hull_2d(&pts).unwrap();
        assert_eq!(p.vertices().len(), 4);
        for v in [[2.0, 0.0], [0.0, 2.0], [-2.0, 0.0], [0.0, -2.0]] {
            assert!(p.vertex_index(v, 0.0).is_some());
        }
    }

    #[test]
    fn points_on_edges_are_dropped() {
        let a = [0.0, 0.0];
        let b = [0.3, 0.7];
        let mid = [0.4 * a[0] + 0.6 * b[0], 0.4 * a[1] + 0.6 * b[1]];
        let p = convex_hull_2d(&[a, b, mid, [1.0, 0.0]]).unwrap();
        assert_eq!(p.vertices().len(), 3);
    }

    #[test]
    fn square_faces() {
        let p = square();
        let f = face_of_direction(&p, &Direction::new(&[0.0, 1.0]).unwrap()).unwrap();
        assert_eq!(f.kind, FaceKind::Edge);
        assert_eq!(f.points, vec![[1.0, 1.0], [0.0, 1.0]]);
        let f = face_of_direction(&p, &Direction::new(&[1.0, 1.0]).unwrap()).unwrap();
        assert_eq!(f.kind, FaceKind::Vertex);
        assert_eq!(f.points, vec![[1.0, 1.0]]);
        let f = face_of_direction(&p, &Direction::new(&[-1.0, 0.0]).unwrap()).unwrap();
        assert_eq!(f.points, vec![[0.0, 1.0], [0.0, 0.0]]);
    }

    #[test]
    fn segment_faces() {
        let seg = convex_hull_2d(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let f = face_of_direction(&seg, &Direction::new(&[1.0, 1.0]).unwrap()).unwrap();
        assert_eq!(f.kind, FaceKind::Edge);
        let f = face_of_direction(&seg, &Direction::new(&[1.0, 0.0]).unwrap()).unwrap();
        assert_eq!(f.points, vec![[1.0, 0.0]]);
    }

    #[test]
    fn square_corner_direction_set() {
        let d = direction_set_of_vertex(&square(), [1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(d.start, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.end, PI / 2.0, epsilon = 1e-15);
        assert!(d.contains(&Direction::new(&[1.0, 1.0]).unwrap(), 0.0));
        assert!(!d.contains(&Direction::new(&[-1.0, 1.0]).unwrap(), 1e-12));
    }

    #[test]
    fn hexagon_exterior_angle() {
        let hex: Vec<Point> = (0..6)
            .map(|k| {
                let a = k as f64 * PI / 3.0;
                [a.cos(), a.sin()]
            })
            .collect();
        let p = convex_hull_2d(&hex).unwrap();
        for v in p.vertices() {
            let d = direction_set_of_vertex(&p, *v).unwrap();
            assert_abs_diff_eq!(d.width(), PI / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn direction_set_errors() {
        let seg = convex_hull_2d(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(
            direction_set_of_vertex(&seg, [1.0, 0.0]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            direction_set_of_vertex(&square(), [0.5, 0.5]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn simplex_and_constant_rotation_sets() {
        let simplex = PotentialTable::new(2, 1, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let p = rotation_polytope_periodic(&simplex, 2).unwrap();
        assert_eq!(p.kind(), HullKind::Segment);
        assert_eq!(p.vertices(), &[[0.0, 1.0], [1.0, 0.0]]);
        let constant = PotentialTable::new(3, 2, 2, [3.0, 7.0].repeat(9)).unwrap();
        let p = rotation_polytope_periodic(&constant, 3).unwrap();
        assert_eq!(p.kind(), HullKind::Point);
        assert_eq!(p.vertices(), &[[3.0, 7.0]]);
    }

    #[test]
    fn hull_grows_with_period() {
        let phi = PotentialTable::from_fn(2, 3, 2, |s| {
            let x = s[0] as f64 - 0.5 * s[1] as f64 + 0.25 * (s[2] * s[0]) as f64;
            let y = (s[1] as f64) * (s[2] as f64) - 0.3 * s[0] as f64;
            vec![x, y]
        })
        .unwrap();
        let mut prev = rotation_polytope_periodic(&phi, 1).unwrap();
        for p in 2..=8 {
            let next = rotation_polytope_periodic(&phi, p).unwrap();
            for v in prev.vertices() {
                assert!(next.contains(*v, 1e-12), "period {p}");
            }
            prev = next;
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn hull_contains_inputs_and_is_convex(
                pts in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..40)
            ) {
                let pts: Vec<Point> = pts.into_iter().map(|(x, y)| [x, y]).collect();
                let hull = convex_hull_2d(&pts).unwrap();
                for p in &pts {
                    prop_assert!(hull.contains(*p, 1e-9));
                }
                if hull.kind() == HullKind::Polygon {
                    prop_assert!(hull.signed_area() > 0.0);
                    let v = hull.vertices();
                    let n = v.len();
                    for i in 0..n {
                        prop_assert!(cross(v[i], v[(i + 1) % n], v[(i + 2) % n]) > 0.0);
                    }
                }
            }

            #[test]
            fn face_attains_the_support(theta in 0.0f64..TAU) {
                let hex: Vec<Point> = (0..7).map(|k| {
                    let a = k as f64 * TAU / 7.0 + 0.1;
                    [2.0 * a.cos(), a.sin()]
                }).collect();
                let poly = convex_hull_2d(&hex).unwrap();
                let alpha = Direction::from_angle(theta);
                let face = face_of_direction(&poly, &alpha).unwrap();
                let best = poly.support(&alpha);
                for p in &face.points {
                    prop_assert!((alpha.dot(p) - best).abs() <= FACE_TIE_TOL);
                }
            }

            #[test]
            fn face_is_stable_inside_a_direction_set(k in 0usize..7, s in 0.05f64..0.95) {
                let pts: Vec<Point> = (0..7).map(|j| {
                    let a = j as f64 * TAU / 7.0;
                    [a.cos(), 0.5 * a.sin()]
                }).collect();
                let poly = convex_hull_2d(&pts).unwrap();
                let w = poly.vertices()[k];
                let arc = direction_set_of_vertex(&poly, w).unwrap();
                let face = face_of_direction(&poly, &arc.interpolate(s)).unwrap();
                prop_assert_eq!(face.kind, FaceKind::Vertex);
                prop_assert_eq!(face.points[0], w);
            }
        }
    }
}
