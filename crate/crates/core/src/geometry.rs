//! Planar polyline helpers shared by rasterization, snapping and sampling.

pub type Point = [f64; 2];

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn polyline_length(points: &[Point]) -> f64 {
    points.windows(2).map(|w| dist(w[0], w[1])).sum()
}

/// Closest point on segment `a-b` to `p`; returns `(distance, t)` with `t` in `[0, 1]`.
#[inline]
pub fn project_on_segment(p: Point, a: Point, b: Point) -> (f64, f64) {
    let dx = b[0] - a[0];
    let dy = b[1] - a[1];
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = lerp(a, b, t);
    (dist(p, q), t)
}

#[inline]
pub fn lerp(a: Point, b: Point, t: f64) -> Point {
    [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t]
}

/// Location on a polyline: segment index plus fraction along it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolylinePos {
    pub segment: usize,
    pub t: f64,
}

/// Nearest point of a polyline to `p`. Returns `(distance, arc offset, position)`;
/// ties keep the smallest offset.
pub fn project_on_polyline(p: Point, points: &[Point]) -> Option<(f64, f64, PolylinePos)> {
    let mut best: Option<(f64, f64, PolylinePos)> = None;
    let mut walked = 0.0;
    for (i, w) in points.windows(2).enumerate() {
        let seg_len = dist(w[0], w[1]);
        let (d, t) = project_on_segment(p, w[0], w[1]);
        let offset = walked + t * seg_len;
        if best.is_none_or(|(bd, _, _)| d < bd) {
            best = Some((d, offset, PolylinePos { segment: i, t }));
        }
        walked += seg_len;
    }
    best
}

/// Position at arc length `offset` (clamped to the polyline).
pub fn locate_offset(points: &[Point], offset: f64) -> PolylinePos {
    let mut walked = 0.0;
    let last = points.len().saturating_sub(2);
    for (i, w) in points.windows(2).enumerate() {
        let seg_len = dist(w[0], w[1]);
        if offset <= walked + seg_len || i == last {
            let t = if seg_len > 0.0 {
                ((offset - walked) / seg_len).clamp(0.0, 1.0)
            } else {
                0.0
            };
            return PolylinePos { segment: i, t };
        }
        walked += seg_len;
    }
    PolylinePos { segment: 0, t: 0.0 }
}

pub fn point_at(points: &[Point], pos: PolylinePos) -> Point {
    lerp(points[pos.segment], points[pos.segment + 1], pos.t)
}

/// Splits a polyline at `pos`; both halves contain the split point.
pub fn split_at(points: &[Point], pos: PolylinePos) -> (Vec<Point>, Vec<Point>) {
    let cut = point_at(points, pos);
    let mut head: Vec<Point> = points[..=pos.segment].to_vec();
    if head.last() != Some(&cut) {
        head.push(cut);
    }
    let mut tail = vec![cut];
    for &q in &points[pos.segment + 1..] {
        if tail.last() != Some(&q) {
            tail.push(q);
        }
    }
    (head, tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_clamps_to_segment() {
        let (d, t) = project_on_segment([-3.0, 4.0], [0.0, 0.0], [10.0, 0.0]);
        assert_eq!(t, 0.0);
        assert_eq!(d, 5.0);
        let (d, t) = project_on_segment([5.0, 2.0], [0.0, 0.0], [10.0, 0.0]);
        assert_eq!((d, t), (2.0, 0.5));
    }

    #[test]
    fn split_preserves_length() {
        let line = [[0.0, 0.0], [3.0, 0.0], [3.0, 4.0], [10.0, 4.0]];
        let total = polyline_length(&line);
        for off in [0.0, 1.5, 3.0, 5.0, 9.0, 14.0] {
            let (a, b) = split_at(&line, locate_offset(&line, off));
            assert!((polyline_length(&a) - off).abs() < 1e-12);
            assert!((polyline_length(&a) + polyline_length(&b) - total).abs() < 1e-12);
        }
    }
}
