//! Static free-space map: a bounding rectangle with convex obstacles.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geom::{point_segment_distance, ConvexPolygon, Rect, Vec2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticMap {
    bounds: Rect,
    obstacles: Vec<ConvexPolygon>,
    resolution: f64,
}

impl StaticMap {
    pub fn new(bounds: Rect, obstacles: Vec<ConvexPolygon>, resolution: f64) -> Result<Self> {
        if !(bounds.width() > 0.0 && bounds.height() > 0.0) {
            return Err(invalid("map bounds must have positive extent"));
        }
        if !(resolution > 0.0) {
            return Err(invalid("map resolution must be positive"));
        }
        for (k, o) in obstacles.iter().enumerate() {
            if o.area() <= 0.0 {
                return Err(invalid(format!("obstacle {k} is degenerate")));
            }
            if o.vertices.iter().any(|v| !bounds.contains(*v)) {
                return Err(invalid(format!("obstacle {k} leaves the map bounds")));
            }
        }
        Ok(StaticMap { bounds, obstacles, resolution })
    }

    /// Obstacle-free rectangle.
    pub fn open(bounds: Rect) -> Self {
        StaticMap { bounds, obstacles: Vec::new(), resolution: 0.5 }
    }

    pub fn bounds(&self) -> Rect {
        self.bounds
    }

    pub fn obstacles(&self) -> &[ConvexPolygon] {
        &self.obstacles
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn in_bounds(&self, p: Vec2) -> bool {
        self.bounds.contains(p)
    }

    pub fn in_obstacle(&self, p: Vec2) -> bool {
        self.obstacles.iter().any(|o| o.contains(p))
    }

    /// Inside the bounds and outside every obstacle.
    pub fn is_free(&self, p: Vec2) -> bool {
        self.in_bounds(p) && !self.in_obstacle(p)
    }

    /// Occupancy at the grid cell containing `p` (cell center sampled).
    pub fn occupied(&self, p: Vec2) -> bool {
        let r = self.resolution;
        let c = Vec2::new(
            self.bounds.min.x + ((p.x - self.bounds.min.x) / r).floor() * r + 0.5 * r,
            self.bounds.min.y + ((p.y - self.bounds.min.y) / r).floor() * r + 0.5 * r,
        );
        !self.is_free(c)
    }

    /// Distance to the nearest obstacle or boundary wall; zero when not free.
    pub fn clearance(&self, p: Vec2) -> f64 {
        if !self.is_free(p) {
            return 0.0;
        }
        let b = self.bounds;
        let walls = (p.x - b.min.x).min(b.max.x - p.x).min(p.y - b.min.y).min(b.max.y - p.y);
        self.obstacles.iter().map(|o| o.distance(p)).fold(walls, f64::min)
    }

    /// Clearance from obstacles only, ignoring the bounding walls.
    pub fn obstacle_distance(&self, p: Vec2) -> f64 {
        self.obstacles.iter().map(|o| o.distance(p)).fold(f64::INFINITY, f64::min)
    }

    /// Minimum distance from segment `a`–`b` to any obstacle or wall.
    pub fn segment_clearance(&self, a: Vec2, b: Vec2) -> f64 {
        if !self.in_bounds(a) || !self.in_bounds(b) {
            return 0.0;
        }
        let bd = self.bounds;
        let walls = [a, b]
            .iter()
            .map(|p| (p.x - bd.min.x).min(bd.max.x - p.x).min(p.y - bd.min.y).min(bd.max.y - p.y))
            .fold(f64::INFINITY, f64::min);
        self.obstacles.iter().map(|o| o.segment_distance(a, b)).fold(walls, f64::min)
    }

    /// True when a disc of `radius` swept along `a`–`b` touches nothing static.
    pub fn segment_free(&self, a: Vec2, b: Vec2, radius: f64) -> bool {
        self.segment_clearance(a, b) > radius
    }

    pub fn segment_hits_obstacle(&self, a: Vec2, b: Vec2) -> bool {
        self.obstacles.iter().any(|o| o.intersects_segment(a, b))
    }

    /// Pushes `p` out of any obstacle it is inside and back into bounds,
    /// keeping `margin` from the boundary it was pushed across.
    pub fn project_free(&self, p: Vec2, margin: f64) -> Vec2 {
        let inner = Rect::new(
            self.bounds.min + Vec2::new(margin, margin),
            self.bounds.max - Vec2::new(margin, margin),
        );
        let mut q = inner.clamp(p);
        for o in &self.obstacles {
            if o.contains(q) {
                let c = o.closest_boundary_point(q);
                let out = outward_normal(o, c);
                q = c + out * margin.max(1e-6);
            }
        }
        q
    }
}

fn outward_normal(o: &ConvexPolygon, c: Vec2) -> Vec2 {
    let mut best = Vec2::new(1.0, 0.0);
    let mut best_d = f64::INFINITY;
    for (a, b) in o.edges() {
        let d = point_segment_distance(c, a, b);
        if d < best_d {
            best_d = d;
            // counter-clockwise polygon: the right-hand normal points out
            best = (b - a).normalized().map_or(best, |t| Vec2::new(t.y, -t.x));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn boxed() -> StaticMap {
        let bounds = Rect::new(Vec2::new(0.0, 0.0), Vec2::new(10.0, 10.0));
        let wall = ConvexPolygon::rect(Vec2::new(4.0, 4.0), Vec2::new(6.0, 6.0));
        StaticMap::new(bounds, vec![wall], 0.5).unwrap()
    }

    #[test]
    fn free_space_queries() {
        let m = boxed();
        assert!(m.is_free(Vec2::new(1.0, 1.0)));
        assert!(!m.is_free(Vec2::new(5.0, 5.0)));
        assert!(!m.is_free(Vec2::new(-1.0, 5.0)));
        assert!((m.clearance(Vec2::new(3.0, 5.0)) - 1.0).abs() < 1e-12);
        assert!((m.clearance(Vec2::new(0.5, 8.0)) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn segments_against_obstacles() {
        let m = boxed();
        assert!(m.segment_hits_obstacle(Vec2::new(3.0, 5.0), Vec2::new(7.0, 5.0)));
        assert!(!m.segment_hits_obstacle(Vec2::new(3.0, 2.0), Vec2::new(7.0, 2.0)));
        assert!(m.segment_free(Vec2::new(3.0, 2.0), Vec2::new(7.0, 2.0), 1.0));
        assert!(!m.segment_free(Vec2::new(3.0, 3.5), Vec2::new(7.0, 3.5), 1.0));
    }

    #[test]
    fn projection_leaves_obstacles() {
        let m = boxed();
        let q = m.project_free(Vec2::new(4.2, 5.0), 0.1);
        assert!(m.is_free(q));
        assert!((q.x - 3.9).abs() < 1e-9);
        let r = m.project_free(Vec2::new(11.0, 5.0), 0.1);
        assert!((r.x - 9.9).abs() < 1e-12);
    }

    #[test]
    fn obstacle_outside_bounds_rejected() {
        let bounds = Rect::new(Vec2::new(0.0, 0.0), Vec2::new(10.0, 10.0));
        let bad = ConvexPolygon::rect(Vec2::new(8.0, 8.0), Vec2::new(12.0, 9.0));
        assert!(StaticMap::new(bounds, vec![bad], 0.5).is_err());
    }
}
