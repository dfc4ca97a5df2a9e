//! Planar polygon kernel: shoelace area, Sutherland–Hodgman clipping
//! against convex windows, and visible-area computation under occluders.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::model::{BoundingBox, Point};

/// Points closer than this to a clip edge count as inside.
pub const EDGE_EPS: f64 = 1e-9;

/// Occluder count above which [`visible_area`] switches to slab integration.
pub const MAX_EXACT_OCCLUDERS: usize = 3;

/// Smallest circle discretization accepted by [`circle_polygon`].
pub const MIN_CIRCLE_SEGMENTS: usize = 16;

/// Signed shoelace area; positive for counter-clockwise rings.
///
/// Coordinates are taken relative to the first vertex so that small rings
/// far from the origin keep full precision.
pub fn signed_area(points: &[Point]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let o = points[0];
    let mut acc = 0.0;
    for w in points[1..].windows(2) {
        acc += cross(o, w[0], w[1]);
    }
    acc / 2.0
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// A simple polygon with counter-clockwise orientation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(mut vertices: Vec<Point>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        let a = signed_area(&vertices);
        if !a.is_finite() || a == 0.0 {
            return Err(GeometryError::Degenerate);
        }
        if a < 0.0 {
            vertices.reverse();
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn bbox(&self) -> BoundingBox {
        BoundingBox::enclosing(&self.vertices).expect("valid polygon has positive extent")
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            vertices: self
                .vertices
                .iter()
                .map(|p| Point::new(p.x + dx, p.y + dy))
                .collect(),
        }
    }

    /// Even-odd point containment; boundary points may go either way.
    pub fn contains(&self, p: Point) -> bool {
        let v = &self.vertices;
        let mut inside = false;
        let mut j = v.len() - 1;
        for i in 0..v.len() {
            let (a, b) = (v[i], v[j]);
            if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
                inside = !inside;
            }
            j = i;
        }
        inside
    }
}

impl TryFrom<Vec<Point>> for Polygon {
    type Error = GeometryError;

    fn try_from(v: Vec<Point>) -> Result<Self, Self::Error> {
        Polygon::new(v)
    }
}

impl From<Polygon> for Vec<Point> {
    fn from(p: Polygon) -> Self {
        p.vertices
    }
}

/// A convex polygon (counter-clockwise). Collinear vertices are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct ConvexPolygon(Polygon);

impl ConvexPolygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        let poly = Polygon::new(vertices)?;
        let v = poly.vertices();
        let n = v.len();
        let scale = poly.bbox().diagonal().powi(2);
        for i in 0..n {
            if cross(v[i], v[(i + 1) % n], v[(i + 2) % n]) < -EDGE_EPS * scale {
                return Err(GeometryError::NotConvex);
            }
        }
        Ok(Self(poly))
    }

    /// Axis-aligned rectangle; corners may be given in any order.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, GeometryError> {
        let (xa, xb) = (x0.min(x1), x0.max(x1));
        let (ya, yb) = (y0.min(y1), y0.max(y1));
        Self::new(vec![
            Point::new(xa, ya),
            Point::new(xb, ya),
            Point::new(xb, yb),
            Point::new(xa, yb),
        ])
    }

    pub fn from_bbox(b: &BoundingBox) -> Self {
        Self::rectangle(b.x_min, b.y_min, b.x_max, b.y_max).expect("bbox has positive extent")
    }

    pub fn polygon(&self) -> &Polygon {
        &self.0
    }

    pub fn vertices(&self) -> &[Point] {
        self.0.vertices()
    }

    pub fn area(&self) -> f64 {
        self.0.area()
    }

    pub fn bbox(&self) -> BoundingBox {
        self.0.bbox()
    }
}

impl TryFrom<Vec<Point>> for ConvexPolygon {
    type Error = GeometryError;

    fn try_from(v: Vec<Point>) -> Result<Self, Self::Error> {
        ConvexPolygon::new(v)
    }
}

impl From<ConvexPolygon> for Vec<Point> {
    fn from(p: ConvexPolygon) -> Self {
        p.0.vertices
    }
}

/// Absolute enclosed area.
pub fn polygon_area(p: &Polygon) -> f64 {
    p.area().abs()
}

/// Keeps the part of `ring` on the left of the directed line `a -> b`
/// (or on the right when `keep_left` is false). Closed half-plane.
fn clip_half_plane(ring: &[Point], a: Point, b: Point, keep_left: bool) -> Vec<Point> {
    let len = (b.x - a.x).hypot(b.y - a.y);
    let side = |p: Point| {
        let d = cross(a, b, p) / len;
        if keep_left {
            d
        } else {
            -d
        }
    };
    let mut out = Vec::with_capacity(ring.len() + 2);
    for (i, &cur) in ring.iter().enumerate() {
        let prev = ring[(i + ring.len() - 1) % ring.len()];
        let (dc, dp) = (side(cur), side(prev));
        let cur_in = dc >= -EDGE_EPS;
        let prev_in = dp >= -EDGE_EPS;
        if cur_in != prev_in {
            let t = dp / (dp - dc);
            out.push(Point::new(
                prev.x + t * (cur.x - prev.x),
                prev.y + t * (cur.y - prev.y),
            ));
        }
        if cur_in {
            out.push(cur);
        }
    }
    out
}

/// Sutherland–Hodgman on raw rings. Concave subjects may yield degenerate
/// bridge edges; their shoelace area is still the intersection area.
fn clip_ring(subject: &[Point], window: &ConvexPolygon) -> Vec<Point> {
    let w = window.vertices();
    let mut ring = subject.to_vec();
    for i in 0..w.len() {
        if ring.len() < 3 {
            return Vec::new();
        }
        ring = clip_half_plane(&ring, w[i], w[(i + 1) % w.len()], true);
    }
    if ring.len() < 3 {
        ring.clear();
    }
    ring
}

fn bboxes_overlap(a: &BoundingBox, b: &BoundingBox) -> bool {
    a.x_min <= b.x_max && b.x_min <= a.x_max && a.y_min <= b.y_max && b.y_min <= a.y_max
}

/// Intersection of `subject` with a convex `window`.
///
/// Returns an empty list when the two are disjoint or only touch.
pub fn clip(subject: &Polygon, window: &ConvexPolygon) -> Vec<Polygon> {
    if !bboxes_overlap(&subject.bbox(), &window.bbox()) {
        return Vec::new();
    }
    let ring = clip_ring(subject.vertices(), window);
    let floor = 1e-12 * subject.area().min(window.area());
    if signed_area(&ring).abs() <= floor {
        return Vec::new();
    }
    Polygon::new(ring).into_iter().collect()
}

fn intersection_area(subject: &[Point], windows: &[&ConvexPolygon]) -> f64 {
    let mut ring = subject.to_vec();
    for w in windows {
        ring = clip_ring(&ring, w);
        if ring.is_empty() {
            return 0.0;
        }
    }
    signed_area(&ring).abs()
}

/// Area of `part` not covered by any occluder.
///
/// Up to [`MAX_EXACT_OCCLUDERS`] occluders this is inclusion–exclusion over
/// pairwise and triple clips. Beyond that the part is cut into horizontal
/// slabs at every vertex and edge crossing; inside a slab the covered width
/// is linear in `y`, so one midpoint row per slab integrates it exactly.
pub fn visible_area(part: &Polygon, occluders: &[ConvexPolygon]) -> f64 {
    let total = polygon_area(part);
    let pb = part.bbox();
    let relevant: Vec<&ConvexPolygon> = occluders
        .iter()
        .filter(|o| bboxes_overlap(&pb, &o.bbox()))
        .collect();
    let covered = if relevant.is_empty() {
        0.0
    } else if occluders.len() <= MAX_EXACT_OCCLUDERS {
        covered_inclusion_exclusion(part, &relevant)
    } else {
        covered_slabs(part, &relevant)
    };
    (total - covered).clamp(0.0, total)
}

fn covered_inclusion_exclusion(part: &Polygon, occ: &[&ConvexPolygon]) -> f64 {
    let v = part.vertices();
    let n = occ.len();
    let mut covered = 0.0;
    for i in 0..n {
        covered += intersection_area(v, &[occ[i]]);
        for j in i + 1..n {
            covered -= intersection_area(v, &[occ[i], occ[j]]);
            for k in j + 1..n {
                covered += intersection_area(v, &[occ[i], occ[j], occ[k]]);
            }
        }
    }
    covered
}

/// Crossings of the horizontal line `y` with the ring's edges, sorted.
fn row_crossings(ring: &[Point], y: f64, out: &mut Vec<f64>) {
    out.clear();
    let n = ring.len();
    for i in 0..n {
        let (p, q) = (ring[i], ring[(i + 1) % n]);
        if (p.y <= y) != (q.y <= y) {
            out.push(p.x + (y - p.y) * (q.x - p.x) / (q.y - p.y));
        }
    }
    out.sort_by(f64::total_cmp);
}

fn edges(ring: &[Point]) -> impl Iterator<Item = (Point, Point)> + '_ {
    (0..ring.len()).map(move |i| (ring[i], ring[(i + 1) % ring.len()]))
}

/// `y` of the proper crossing of segments `ab` and `cd`, if any.
fn crossing_y(a: Point, b: Point, c: Point, d: Point) -> Option<f64> {
    let denom = (b.x - a.x) * (d.y - c.y) - (b.y - a.y) * (d.x - c.x);
    if denom == 0.0 {
        return None;
    }
    let t = ((c.x - a.x) * (d.y - c.y) - (c.y - a.y) * (d.x - c.x)) / denom;
    let u = ((c.x - a.x) * (b.y - a.y) - (c.y - a.y) * (b.x - a.x)) / denom;
    ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)).then_some(a.y + t * (b.y - a.y))
}

/// Length of the part's row at `y` that lies inside some occluder.
fn covered_row(part: &Polygon, occ: &[&ConvexPolygon], y: f64, scratch: &mut Vec<f64>) -> f64 {
    let mut intervals: Vec<(f64, f64)> = Vec::with_capacity(occ.len());
    for o in occ {
        row_crossings(o.vertices(), y, scratch);
        if let (Some(&lo), Some(&hi)) = (scratch.first(), scratch.last()) {
            if hi > lo {
                intervals.push((lo, hi));
            }
        }
    }
    if intervals.is_empty() {
        return 0.0;
    }
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
    for (lo, hi) in intervals {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    row_crossings(part.vertices(), y, scratch);
    let mut row = 0.0;
    for span in scratch.chunks_exact(2) {
        for &(lo, hi) in &merged {
            let overlap = hi.min(span[1]) - lo.max(span[0]);
            if overlap > 0.0 {
                row += overlap;
            }
        }
    }
    row
}

fn covered_slabs(part: &Polygon, occ: &[&ConvexPolygon]) -> f64 {
    let b = part.bbox();
    let mut ys: Vec<f64> = part.vertices().iter().map(|p| p.y).collect();
    for (i, o) in occ.iter().enumerate() {
        ys.extend(o.vertices().iter().map(|p| p.y));
        for (c, d) in edges(o.vertices()) {
            for (a, e) in edges(part.vertices()) {
                ys.extend(crossing_y(a, e, c, d));
            }
            for other in &occ[i + 1..] {
                for (a, e) in edges(other.vertices()) {
                    ys.extend(crossing_y(a, e, c, d));
                }
            }
        }
    }
    ys.retain(|y| (b.y_min..=b.y_max).contains(y));
    ys.sort_by(f64::total_cmp);
    ys.dedup();

    let mut scratch = Vec::new();
    ys.windows(2)
        .map(|w| covered_row(part, occ, 0.5 * (w[0] + w[1]), &mut scratch) * (w[1] - w[0]))
        .sum()
}

/// Splits `piece \ occluder` into disjoint convex pieces, one per occluder
/// edge the remainder crosses.
pub fn subtract_convex(piece: &ConvexPolygon, occluder: &ConvexPolygon) -> Vec<ConvexPolygon> {
    if !bboxes_overlap(&piece.bbox(), &occluder.bbox()) {
        return vec![piece.clone()];
    }
    let floor = 1e-12 * piece.area();
    let w = occluder.vertices();
    let mut out = Vec::new();
    let mut remaining = piece.vertices().to_vec();
    for i in 0..w.len() {
        let (a, b) = (w[i], w[(i + 1) % w.len()]);
        let outside = clip_half_plane(&remaining, a, b, false);
        if outside.len() >= 3 && signed_area(&outside).abs() > floor {
            if let Ok(p) = ConvexPolygon::new(outside) {
                out.push(p);
            }
        }
        remaining = clip_half_plane(&remaining, a, b, true);
        if remaining.len() < 3 || signed_area(&remaining).abs() <= floor {
            break;
        }
    }
    out
}

/// Exact visible region of a part given as disjoint convex pieces.
pub fn subtract_occluders(
    pieces: &[ConvexPolygon],
    occluders: &[ConvexPolygon],
) -> Vec<ConvexPolygon> {
    let mut current = pieces.to_vec();
    for occ in occluders {
        current = current
            .iter()
            .flat_map(|p| subtract_convex(p, occ))
            .collect();
    }
    current
}

/// Regular `segments`-gon inscribed in the circle.
pub fn circle_polygon(
    center: Point,
    radius: f64,
    segments: usize,
) -> Result<Polygon, GeometryError> {
    if segments < MIN_CIRCLE_SEGMENTS {
        return Err(GeometryError::TooFewSegments(segments));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(GeometryError::Radius(radius));
    }
    let vertices = (0..segments)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / segments as f64;
            Point::new(center.x + radius * t.cos(), center.y + radius * t.sin())
        })
        .collect();
    Polygon::new(vertices)
}

/// Closed-form area of the regular inscribed `n`-gon.
pub fn inscribed_ngon_area(radius: f64, n: usize) -> f64 {
    n as f64 / 2.0 * radius * radius * (2.0 * PI / n as f64).sin()
}
