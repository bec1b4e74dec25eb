//! Constrained triangulation over pedestrians, obstacle outlines and anchor
//! points.

use std::collections::{BTreeSet, HashMap};

use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use crate::agent::Pedestrian;
use crate::error::{invalid, Error, Result};
use crate::geom::Vec2;
use crate::map::StaticMap;

/// What a triangulation vertex stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexKind {
    Pedestrian(u32),
    Boundary,
    /// Index into the `anchors` argument of [`triangulate`].
    Anchor(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangulateOptions {
    /// Add the map bounds as a constrained outline so the triangles cover all
    /// free space.
    pub include_bounds: bool,
    /// Spacing of vertices sampled along obstacle and bound outlines.
    pub boundary_spacing: f64,
    /// Pedestrians closer than this to an obstacle are left out.
    pub obstacle_clearance: f64,
}

impl Default for TriangulateOptions {
    fn default() -> Self {
        TriangulateOptions { include_bounds: true, boundary_spacing: 1.0, obstacle_clearance: 0.2 }
    }
}

/// Triangles covering free space, with adjacency across shared edges.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleGraph {
    vertices: Vec<Vec2>,
    kinds: Vec<VertexKind>,
    triangles: Vec<[usize; 3]>,
    /// `neighbors[t][k]` lies across edge `(v[k], v[k+1])`.
    neighbors: Vec<[Option<usize>; 3]>,
    constrained: BTreeSet<(usize, usize)>,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

fn sample_outline(poly: &[Vec2], spacing: f64) -> Vec<Vec2> {
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let pieces = ((a.distance(b) / spacing).ceil() as usize).max(1);
        for k in 0..pieces {
            out.push(a.lerp(b, k as f64 / pieces as f64));
        }
    }
    out
}

/// Triangulates pedestrian positions, sampled obstacle outlines (as
/// constraints) and `anchors`. Triangles inside obstacles are dropped.
pub fn triangulate(peds: &[Pedestrian], map: &StaticMap, anchors: &[Vec2], opts: &TriangulateOptions) -> Result<TriangleGraph> {
    if !(opts.boundary_spacing > 0.0) {
        return Err(invalid("boundary spacing must be positive"));
    }
    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> = ConstrainedDelaunayTriangulation::new();
    let mut kinds: HashMap<usize, VertexKind> = HashMap::new();
    let insert = |cdt: &mut ConstrainedDelaunayTriangulation<Point2<f64>>, p: Vec2| {
        if !p.is_finite() {
            return Err(Error::NonFinite);
        }
        cdt.insert(Point2::new(p.x, p.y)).map_err(|e| Error::Degenerate(format!("{e:?}")))
    };
    let mut outlines: Vec<Vec<Vec2>> = map.obstacles().iter().map(|o| o.vertices.clone()).collect();
    if opts.include_bounds {
        outlines.push(map.bounds().corners().to_vec());
    }
    for outline in &outlines {
        let pts = sample_outline(outline, opts.boundary_spacing);
        let handles = pts.iter().map(|p| insert(&mut cdt, *p)).collect::<Result<Vec<_>>>()?;
        for h in &handles {
            kinds.entry(h.index()).or_insert(VertexKind::Boundary);
        }
        for i in 0..handles.len() {
            let (a, b) = (handles[i], handles[(i + 1) % handles.len()]);
            if a != b {
                // overlapping outlines (e.g. a wall flush with the bounds) are skipped
                cdt.try_add_constraint(a, b);
            }
        }
    }
    for p in peds {
        let inside_bounds = !opts.include_bounds || map.bounds().contains(p.pos);
        if inside_bounds && map.obstacle_distance(p.pos) > opts.obstacle_clearance {
            let h = insert(&mut cdt, p.pos)?;
            kinds.entry(h.index()).or_insert(VertexKind::Pedestrian(p.id));
        }
    }
    for (k, a) in anchors.iter().enumerate() {
        if opts.include_bounds && !map.is_free(*a) {
            continue;
        }
        let h = insert(&mut cdt, *a)?;
        kinds.insert(h.index(), VertexKind::Anchor(k));
    }
    if cdt.num_vertices() < 3 {
        return Err(Error::Degenerate(format!("only {} distinct vertices", cdt.num_vertices())));
    }
    let vertices: Vec<Vec2> = cdt.vertices().map(|v| Vec2::new(v.position().x, v.position().y)).collect();
    let mut triangles = Vec::new();
    for f in cdt.inner_faces() {
        let [a, b, c] = f.vertices().map(|v| v.fix().index());
        let centroid = (vertices[a] + vertices[b] + vertices[c]) / 3.0;
        if map.in_obstacle(centroid) || (opts.include_bounds && !map.in_bounds(centroid)) {
            continue;
        }
        let tri = if orient(vertices[a], vertices[b], vertices[c]) >= 0.0 { [a, b, c] } else { [a, c, b] };
        triangles.push(tri);
    }
    if triangles.is_empty() {
        return Err(Error::Degenerate("all vertices are collinear".into()));
    }
    let constrained = cdt
        .undirected_edges()
        .filter(|e| cdt.is_constraint_edge(e.fix()))
        .map(|e| {
            let [a, b] = e.vertices();
            key(a.fix().index(), b.fix().index())
        })
        .collect();
    let kinds = (0..vertices.len()).map(|i| kinds.get(&i).copied().unwrap_or(VertexKind::Boundary)).collect();
    Ok(TriangleGraph::from_parts(vertices, kinds, triangles, constrained))
}

impl TriangleGraph {
    fn from_parts(
        vertices: Vec<Vec2>,
        kinds: Vec<VertexKind>,
        triangles: Vec<[usize; 3]>,
        constrained: BTreeSet<(usize, usize)>,
    ) -> Self {
        let mut by_edge: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                by_edge.entry(key(tri[k], tri[(k + 1) % 3])).or_default().push((t, k));
            }
        }
        let mut neighbors = vec![[None; 3]; triangles.len()];
        let mut edges: Vec<_> = by_edge.into_iter().collect();
        edges.sort_unstable_by_key(|e| e.0);
        for (e, sides) in edges {
            if sides.len() == 2 && !constrained.contains(&e) {
                let ((t0, k0), (t1, k1)) = (sides[0], sides[1]);
                neighbors[t0][k0] = Some(t1);
                neighbors[t1][k1] = Some(t0);
            }
        }
        TriangleGraph { vertices, kinds, triangles, neighbors, constrained }
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn kind(&self, v: usize) -> VertexKind {
        self.kinds[v]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn neighbors(&self, t: usize) -> [Option<usize>; 3] {
        self.neighbors[t]
    }

    pub fn is_constraint(&self, a: usize, b: usize) -> bool {
        self.constrained.contains(&key(a, b))
    }

    pub fn corners(&self, t: usize) -> [Vec2; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn centroid(&self, t: usize) -> Vec2 {
        let [a, b, c] = self.corners(t);
        (a + b + c) / 3.0
    }

    /// Whether `p` lies in triangle `t` (boundary included, with a small
    /// tolerance).
    pub fn contains(&self, t: usize, p: Vec2) -> bool {
        let [a, b, c] = self.corners(t);
        let tol = -1e-9 * (1.0 + (b - a).norm_sq() + (c - a).norm_sq());
        orient(a, b, p) >= tol && orient(b, c, p) >= tol && orient(c, a, p) >= tol
    }

    /// First triangle containing `p`.
    pub fn locate(&self, p: Vec2) -> Option<usize> {
        (0..self.triangles.len()).find(|&t| self.contains(t, p))
    }

    /// Vertex index of anchor `k`, if it was inserted.
    pub fn anchor_vertex(&self, k: usize) -> Option<usize> {
        self.kinds.iter().position(|x| *x == VertexKind::Anchor(k))
    }

    /// Triangles having vertex `v` as a corner, in index order.
    pub fn faces_around(&self, v: usize) -> Vec<usize> {
        (0..self.triangles.len()).filter(|t| self.triangles[*t].contains(&v)).collect()
    }

    /// Writes `kind,index,a,b,c` rows: one `v` row per vertex (x, y in the
    /// last two columns) and one `t` row per triangle.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "kind,index,a,b,c")?;
        for (i, v) in self.vertices.iter().enumerate() {
            writeln!(w, "v,{i},,{},{}", v.x, v.y)?;
        }
        for (i, t) in self.triangles.iter().enumerate() {
            writeln!(w, "t,{i},{},{},{}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}
