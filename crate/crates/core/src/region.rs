//! Polyhedral rate regions in the (R1, R2) plane. A region is stored two
//! ways at once: as halfspaces with 0/1 coefficients (per-user caps and a sum
//! cap) and as the Pareto frontier polyline, sorted by R1 ascending. Regions
//! are down-closed toward the axes by construction, so the frontier together
//! with its axis endpoints describes the whole set.

use serde::{Deserialize, Serialize};
use std::io::{self, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RegionError {
    #[error("cannot union an empty list of regions")]
    EmptyUnion,
    #[error("region has an empty frontier")]
    EmptyFrontier,
    #[error("region contains a non-finite coordinate")]
    NonFinite,
    #[error("region JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Bounds of a pentagon-shaped region: R1 <= r1_bound, R2 <= r2_bound,
/// R1 + R2 <= sum_bound. Construction clamps small negative inputs (float
/// cancellation in mutual-information differences) to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateTriple {
    pub r1_bound: f64,
    pub r2_bound: f64,
    pub sum_bound: f64,
}

impl RateTriple {
    pub fn new(r1_bound: f64, r2_bound: f64, sum_bound: f64) -> Self {
        Self {
            r1_bound: r1_bound.max(0.0),
            r2_bound: r2_bound.max(0.0),
            sum_bound: sum_bound.max(0.0),
        }
    }

    /// Vertices of the pentagon's Pareto frontier, R1 ascending, from the R2
    /// axis to the R1 axis. Degenerate shapes (triangles, segments, the
    /// origin) fall out by deduplication.
    pub fn corners(&self) -> Vec<(f64, f64)> {
        let xmax = self.r1_bound.min(self.sum_bound);
        let ymax = self.r2_bound.min(self.sum_bound);
        let chain = [
            (0.0, ymax),
            (xmax.min(self.sum_bound - ymax).max(0.0), ymax),
            (xmax, ymax.min(self.sum_bound - xmax).max(0.0)),
            (xmax, 0.0),
        ];
        let mut corners: Vec<(f64, f64)> = Vec::with_capacity(4);
        for point in chain {
            if corners.last() != Some(&point) {
                corners.push(point);
            }
        }
        corners
    }

    /// Support value max { wx R1 + wy R2 } over the pentagon, for
    /// non-negative weights. The maximum sits on a frontier vertex.
    pub fn support(&self, wx: f64, wy: f64) -> f64 {
        self.corners()
            .into_iter()
            .map(|(x, y)| wx * x + wy * y)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HalfspaceKind {
    R1,
    R2,
    Sum,
}

/// One linear constraint with 0/1 coefficients: R1 <= bound, R2 <= bound, or
/// R1 + R2 <= bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub kind: HalfspaceKind,
    pub bound: f64,
}

impl Halfspace {
    fn value_at(&self, point: (f64, f64)) -> f64 {
        match self.kind {
            HalfspaceKind::R1 => point.0,
            HalfspaceKind::R2 => point.1,
            HalfspaceKind::Sum => point.0 + point.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRegion {
    halfspaces: Vec<Halfspace>,
    frontier: Vec<(f64, f64)>,
}

/// Number of ray directions used when densifying a frontier for CSV output.
pub const FRONTIER_SAMPLE_ANGLES: usize = 201;

fn cross(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.0 * b.1 - a.1 * b.0
}

fn sort_frontier(points: &mut [(f64, f64)]) {
    points.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(b.1.partial_cmp(&a.1).unwrap())
    });
}

impl RateRegion {
    /// Pentagon (or its degenerate forms) cut out by a bound triple. The
    /// halfspaces carry the triple verbatim; the frontier holds the corner
    /// chain with strictly-dominated points removed.
    pub fn from_triple(triple: RateTriple) -> Self {
        let corners = triple.corners();
        let mut frontier: Vec<(f64, f64)> = corners
            .iter()
            .filter(|p| {
                !corners
                    .iter()
                    .any(|q| q.0 > p.0 && q.1 > p.1)
            })
            .copied()
            .collect();
        sort_frontier(&mut frontier);
        Self {
            halfspaces: vec![
                Halfspace { kind: HalfspaceKind::R1, bound: triple.r1_bound },
                Halfspace { kind: HalfspaceKind::R2, bound: triple.r2_bound },
                Halfspace { kind: HalfspaceKind::Sum, bound: triple.sum_bound },
            ],
            frontier,
        }
    }

    /// Convex hull of the union of the given regions (with down-closure
    /// toward the axes). The result's halfspaces are the outer caps read off
    /// the hull: max R1, max R2, max R1 + R2. Canonical: unioning a region
    /// with itself, or re-unioning a union, reproduces the same vertex list.
    pub fn hull_union(regions: &[RateRegion]) -> Result<Self, RegionError> {
        if regions.is_empty() {
            return Err(RegionError::EmptyUnion);
        }
        let mut points: Vec<(f64, f64)> = vec![(0.0, 0.0)];
        for region in regions {
            for &(x, y) in &region.frontier {
                points.push((x, y));
                points.push((x, 0.0));
                points.push((0.0, y));
            }
        }
        let hull = convex_hull(points);
        let frontier = pareto_chain(&hull);
        let max_r1 = frontier.iter().map(|p| p.0).fold(0.0f64, f64::max);
        let max_r2 = frontier.iter().map(|p| p.1).fold(0.0f64, f64::max);
        let max_sum = frontier
            .iter()
            .map(|p| p.0 + p.1)
            .fold(0.0f64, f64::max);
        Ok(Self {
            halfspaces: vec![
                Halfspace { kind: HalfspaceKind::R1, bound: max_r1 },
                Halfspace { kind: HalfspaceKind::R2, bound: max_r2 },
                Halfspace { kind: HalfspaceKind::Sum, bound: max_sum },
            ],
            frontier,
        })
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    /// Pareto frontier vertices, R1 ascending (R2 descending on ties).
    pub fn frontier(&self) -> &[(f64, f64)] {
        &self.frontier
    }

    /// True when every frontier point of `inner` satisfies every halfspace
    /// of this region with the given slack.
    pub fn contains(&self, inner: &RateRegion, slack: f64) -> bool {
        inner.frontier.iter().all(|&p| {
            self.halfspaces
                .iter()
                .all(|h| h.value_at(p) <= h.bound + slack)
        })
    }

    /// Support value max { wx R1 + wy R2 } over the region, for non-negative
    /// weights.
    pub fn support(&self, wx: f64, wy: f64) -> f64 {
        self.frontier
            .iter()
            .map(|&(x, y)| wx * x + wy * y)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Farthest point of the frontier polyline along the ray from the origin
    /// in direction `(dx, dy)`.
    fn ray_hit(&self, dx: f64, dy: f64) -> (f64, f64) {
        let scale = self
            .frontier
            .iter()
            .map(|p| p.0.abs().max(p.1.abs()))
            .fold(1.0f64, f64::max);
        let mut best: f64 = 0.0;
        let mut hit = (0.0, 0.0);
        for &v in &self.frontier {
            if cross((dx, dy), v).abs() <= 1e-12 * scale {
                let t = dx * v.0 + dy * v.1;
                if t > best {
                    best = t;
                    hit = v;
                }
            }
        }
        for pair in self.frontier.windows(2) {
            let (p, q) = (pair[0], pair[1]);
            let d = (q.0 - p.0, q.1 - p.1);
            let denom = cross((dx, dy), d);
            if denom.abs() <= 1e-14 * scale.max(1.0) {
                continue;
            }
            let s = -cross((dx, dy), p) / denom;
            if (-1e-9..=1.0 + 1e-9).contains(&s) {
                let s = s.clamp(0.0, 1.0);
                // Interpolate on the segment rather than rescaling the
                // direction, so hits on axis-parallel edges keep the shared
                // coordinate exactly.
                let point = (p.0 + s * d.0, p.1 + s * d.1);
                let t = dx * point.0 + dy * point.1;
                if t > best {
                    best = t;
                    hit = point;
                }
            }
        }
        hit
    }

    /// Frontier vertices plus [`FRONTIER_SAMPLE_ANGLES`] ray samples at
    /// evenly spaced angles in [0, pi/2], deduplicated and sorted like the
    /// frontier itself. This is the row set emitted to CSV.
    pub fn frontier_samples(&self) -> Vec<(f64, f64)> {
        let mut samples = self.frontier.clone();
        for k in 0..FRONTIER_SAMPLE_ANGLES {
            let theta = std::f64::consts::FRAC_PI_2 * (k as f64)
                / ((FRONTIER_SAMPLE_ANGLES - 1) as f64);
            samples.push(self.ray_hit(theta.cos(), theta.sin()));
        }
        sort_frontier(&mut samples);
        samples.dedup_by(|a, b| (a.0 - b.0).abs() <= 1e-12 && (a.1 - b.1).abs() <= 1e-12);
        samples
    }

    pub fn to_json(&self) -> Result<String, RegionError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, RegionError> {
        let region: RateRegion = serde_json::from_str(text)?;
        if region.frontier.is_empty() {
            return Err(RegionError::EmptyFrontier);
        }
        let finite = region
            .frontier
            .iter()
            .all(|p| p.0.is_finite() && p.1.is_finite())
            && region.halfspaces.iter().all(|h| h.bound.is_finite());
        if !finite {
            return Err(RegionError::NonFinite);
        }
        Ok(region)
    }
}

/// Pareto boundary of a convex hull that includes the origin and both axis
/// feet (the union construction guarantees all three): the counterclockwise
/// walk from (xmax, 0) up to (0, ymax), reversed so R1 ascends. Degenerate
/// hulls (a point, an axis segment) are returned as-is in frontier order.
fn pareto_chain(hull: &[(f64, f64)]) -> Vec<(f64, f64)> {
    if hull.len() <= 2 {
        let mut chain = hull.to_vec();
        sort_frontier(&mut chain);
        return chain;
    }
    let xmax = hull.iter().map(|p| p.0).fold(0.0f64, f64::max);
    let ymax = hull.iter().map(|p| p.1).fold(0.0f64, f64::max);
    let start = hull
        .iter()
        .position(|&p| p == (xmax, 0.0))
        .expect("axis foot (xmax, 0) is a hull vertex");
    let end = (0.0, ymax);
    let mut walk = Vec::new();
    let mut index = start;
    for _ in 0..hull.len() {
        walk.push(hull[index]);
        if hull[index] == end {
            break;
        }
        index = (index + 1) % hull.len();
    }
    assert_eq!(
        walk.last(),
        Some(&end),
        "axis foot (0, ymax) is a hull vertex"
    );
    walk.reverse();
    walk
}

/// Monotone-chain convex hull; returns vertices counterclockwise with
/// collinear interior points dropped.
fn convex_hull(mut points: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    points.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(a.1.partial_cmp(&b.1).unwrap())
    });
    points.dedup();
    if points.len() <= 2 {
        return points;
    }
    let turn = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        cross((a.0 - o.0, a.1 - o.1), (b.0 - o.0, b.1 - o.1))
    };
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &points {
        while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in points.iter().rev() {
        while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Writes labeled frontier samples as CSV with header `scenario,r1,r2` and
/// coordinates in 12-significant-digit scientific notation.
pub fn write_frontier_csv<W: Write>(
    out: &mut W,
    rows: &[(&str, &RateRegion)],
) -> io::Result<()> {
    writeln!(out, "scenario,r1,r2")?;
    for (label, region) in rows {
        for (x, y) in region.frontier_samples() {
            writeln!(out, "{label},{x:.11e},{y:.11e}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pentagon_corners() {
        let region = RateRegion::from_triple(RateTriple::new(1.0, 1.0, 1.5));
        assert_eq!(
            region.frontier(),
            &[(0.0, 1.0), (0.5, 1.0), (1.0, 0.5), (1.0, 0.0)]
        );
    }

    #[test]
    fn inactive_sum_bound_gives_rectangle() {
        let region = RateRegion::from_triple(RateTriple::new(1.0, 1.0, 2.0));
        assert_eq!(region.frontier(), &[(0.0, 1.0), (1.0, 1.0), (1.0, 0.0)]);
    }

    #[test]
    fn dominant_sum_bound_gives_triangle() {
        let region = RateRegion::from_triple(RateTriple::new(2.0, 3.0, 1.0));
        assert_eq!(region.frontier(), &[(0.0, 1.0), (1.0, 0.0)]);
    }

    #[test]
    fn degenerate_triple_is_the_origin() {
        let region = RateRegion::from_triple(RateTriple::new(0.0, 0.0, 0.0));
        assert_eq!(region.frontier(), &[(0.0, 0.0)]);
    }

    #[test]
    fn negative_bounds_clamp_to_zero() {
        let triple = RateTriple::new(-1e-13, 0.5, -2.0);
        assert_eq!(triple.r1_bound, 0.0);
        assert_eq!(triple.sum_bound, 0.0);
    }

    #[test]
    fn union_of_pentagon_and_axis_segment() {
        let a = RateRegion::from_triple(RateTriple::new(1.0, 1.0, 1.5));
        let b = RateRegion::from_triple(RateTriple::new(2.0, 0.0, 2.0));
        let union = RateRegion::hull_union(&[a, b]).unwrap();
        assert_eq!(
            union.frontier(),
            &[(0.0, 1.0), (0.5, 1.0), (2.0, 0.0)]
        );
    }

    #[test]
    fn union_absorbed_by_a_larger_triangle() {
        // The pentagon sits strictly inside the sum <= 2 triangle, so the
        // union's frontier is the bare hypotenuse with no origin vertex.
        let a = RateRegion::from_triple(RateTriple::new(1.0, 1.0, 1.5));
        let b = RateRegion::from_triple(RateTriple::new(2.0, 2.0, 2.0));
        let union = RateRegion::hull_union(&[a, b]).unwrap();
        assert_eq!(union.frontier(), &[(0.0, 2.0), (2.0, 0.0)]);
    }

    #[test]
    fn union_is_idempotent() {
        let a = RateRegion::from_triple(RateTriple::new(1.0, 0.7, 1.4));
        let b = RateRegion::from_triple(RateTriple::new(0.4, 1.2, 1.3));
        let once = RateRegion::hull_union(&[a.clone(), b.clone()]).unwrap();
        let twice = RateRegion::hull_union(std::slice::from_ref(&once)).unwrap();
        assert_eq!(once, twice);
        let swapped = RateRegion::hull_union(&[b, a]).unwrap();
        assert_eq!(once, swapped);
    }

    #[test]
    fn union_of_empty_list_is_an_error() {
        assert!(matches!(
            RateRegion::hull_union(&[]),
            Err(RegionError::EmptyUnion)
        ));
    }

    #[test]
    fn containment_with_slack() {
        let outer = RateRegion::from_triple(RateTriple::new(1.0, 1.0, 1.5));
        let inner = RateRegion::from_triple(RateTriple::new(0.9, 0.9, 1.4));
        let bulging = RateRegion::from_triple(RateTriple::new(1.1, 0.5, 1.4));
        assert!(outer.contains(&inner, 1e-9));
        assert!(!outer.contains(&bulging, 1e-9));
        assert!(outer.contains(&bulging, 0.2));
    }

    #[test]
    fn ray_samples_cover_axis_endpoints_and_kinks() {
        let region = RateRegion::from_triple(RateTriple::new(1.0, 1.0, 1.5));
        let samples = region.frontier_samples();
        assert!(samples.len() >= FRONTIER_SAMPLE_ANGLES);
        let first = samples.first().unwrap();
        let last = samples.last().unwrap();
        assert_abs_diff_eq!(first.0, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(first.1, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(last.0, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(last.1, 0.0, epsilon = 1e-12);
        for pair in samples.windows(2) {
            assert!(pair[0].0 <= pair[1].0 + 1e-15);
        }
        // Every sample lies on the boundary polyline: it satisfies all three
        // halfspaces and meets at least one with near equality.
        for &(x, y) in &samples {
            let slacks = [1.0 - x, 1.0 - y, 1.5 - (x + y)];
            assert!(slacks.iter().all(|&s| s >= -1e-9));
            assert!(slacks.iter().any(|&s| s.abs() <= 1e-9));
        }
    }

    #[test]
    fn support_matches_triple_support() {
        let triple = RateTriple::new(1.0, 1.0, 1.5);
        let region = RateRegion::from_triple(triple);
        for &(wx, wy) in &[(1.0, 0.0), (0.5, 0.5), (0.3, 0.7), (0.0, 1.0)] {
            assert_abs_diff_eq!(
                region.support(wx, wy),
                triple.support(wx, wy),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let region = RateRegion::from_triple(RateTriple::new(
            1.0145731728,
            0.9,
            1.6419469376,
        ));
        let text = region.to_json().unwrap();
        let back = RateRegion::from_json(&text).unwrap();
        assert_eq!(region, back);
    }

    #[test]
    fn csv_rows_have_twelve_significant_digits() {
        let region = RateRegion::from_triple(RateTriple::new(1.0, 1.0, 1.5));
        let mut buffer = Vec::new();
        write_frontier_csv(&mut buffer, &[("demo", &region)]).unwrap();
        let text = String::from_utf8(buffer).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("scenario,r1,r2"));
        let row = lines.next().unwrap();
        assert!(row.starts_with("demo,"));
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 3);
        for field in &fields[1..] {
            let mantissa = field.split('e').next().unwrap();
            let digits = mantissa.chars().filter(|c| c.is_ascii_digit()).count();
            assert_eq!(digits, 12, "field {field} should carry 12 digits");
        }
        let reparsed: f64 = fields[1].parse().unwrap();
        assert!(reparsed.is_finite());
    }
}
