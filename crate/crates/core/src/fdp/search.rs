//! Flow-aware route search over the triangle graph.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{invalid, Error, Result};
use crate::flowfield::FlowMap;
use crate::geom::Vec2;

use super::triangulate::TriangleGraph;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchParams {
    /// Weight of the counter-flow term.
    pub w_rc: f64,
    /// Weight of the cross-flow term.
    pub w_lc: f64,
    /// Nominal travel speed used to time-stamp the route.
    pub speed: f64,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams { w_rc: 2.0, w_lc: 0.5, speed: 1.2 }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.w_rc >= 0.0 && self.w_lc >= 0.0 && self.speed > 0.0) {
            return Err(invalid("search weights must be non-negative and speed positive"));
        }
        Ok(())
    }
}

/// Counter-flow and cross-flow costs of travelling the segment `a -> b`,
/// with the flux sampled at the segment midpoint at time `t`.
pub fn edge_flow_costs(a: Vec2, b: Vec2, fm: &FlowMap, t: f64) -> Result<(f64, f64)> {
    let flux = fm.flux((a + b) * 0.5, t)?;
    let seg = b - a;
    Ok(((-seg.dot(flux)).max(0.0), seg.cross(flux).abs()))
}

/// Search graph: shared-edge midpoints plus the start and goal nodes, with
/// static non-negative edge costs.
#[derive(Debug, Clone)]
pub struct SearchGraph {
    pub points: Vec<Vec2>,
    pub adj: Vec<Vec<(usize, f64)>>,
    pub start: usize,
    pub goal: usize,
}

fn containing(tg: &TriangleGraph, p: Vec2) -> Vec<usize> {
    (0..tg.len()).filter(|&t| tg.contains(t, p)).collect()
}

impl SearchGraph {
    /// Edge costs are `length + w_rc * RC + w_lc * LC`, with the flow read at
    /// the time the robot would reach the edge midpoint travelling straight
    /// from `start` at the nominal speed.
    pub fn build(
        tg: &TriangleGraph,
        start: Vec2,
        goal: Vec2,
        t_start: f64,
        fm: &FlowMap,
        params: &SearchParams,
    ) -> Result<Self> {
        params.validate()?;
        let goal_tris = containing(tg, goal);
        if goal_tris.is_empty() {
            return Err(Error::BlockedGoal);
        }
        let start_tris = containing(tg, start);
        if start_tris.is_empty() {
            return Err(Error::Disconnected);
        }
        let mut points = vec![start, goal];
        // node per triangle edge, or usize::MAX when the edge is not crossable
        let mut edge_node = vec![[usize::MAX; 3]; tg.len()];
        for t in 0..tg.len() {
            let tri = tg.triangles()[t];
            for k in 0..3 {
                match tg.neighbors(t)[k] {
                    Some(n) if n < t => {
                        let back = (0..3).find(|&j| tg.neighbors(n)[j] == Some(t)).expect("symmetric adjacency");
                        edge_node[t][k] = edge_node[n][back];
                    }
                    Some(_) => {
                        let [a, b] = [tg.vertices()[tri[k]], tg.vertices()[tri[(k + 1) % 3]]];
                        edge_node[t][k] = points.len();
                        points.push((a + b) * 0.5);
                    }
                    None => {}
                }
            }
        }
        let mut members: Vec<Vec<usize>> =
            edge_node.iter().map(|e| e.iter().copied().filter(|&n| n != usize::MAX).collect()).collect();
        for &t in &start_tris {
            members[t].push(0);
        }
        for &t in &goal_tris {
            members[t].push(1);
        }
        let (t_lo, t_hi) = (fm.start_time(), fm.end_time());
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); points.len()];
        for m in &members {
            for (i, &u) in m.iter().enumerate() {
                for &v in &m[i + 1..] {
                    if u == v || adj[u].iter().any(|&(w, _)| w == v) {
                        continue;
                    }
                    let (a, b) = (points[u], points[v]);
                    let mid = (a + b) * 0.5;
                    let t = (t_start + mid.distance(start) / params.speed).clamp(t_lo, t_hi);
                    let fwd = edge_flow_costs(a, b, fm, t)?;
                    let back = edge_flow_costs(b, a, fm, t)?;
                    let len = a.distance(b);
                    adj[u].push((v, len + params.w_rc * fwd.0 + params.w_lc * fwd.1));
                    adj[v].push((u, len + params.w_rc * back.0 + params.w_lc * back.1));
                }
            }
        }
        Ok(SearchGraph { points, adj, start: 0, goal: 1 })
    }
}

/// Route through the search graph, time-stamped at the nominal speed.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub points: Vec<Vec2>,
    pub times: Vec<f64>,
    pub cost: f64,
    pub expanded: usize,
}

impl Route {
    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].distance(w[1])).sum()
    }

    /// Position along the route at absolute time `t` (clamped).
    pub fn position_at(&self, t: f64) -> Vec2 {
        if t <= self.times[0] {
            return self.points[0];
        }
        for k in 1..self.points.len() {
            if t <= self.times[k] {
                let span = self.times[k] - self.times[k - 1];
                let s = if span > 0.0 { (t - self.times[k - 1]) / span } else { 1.0 };
                return self.points[k - 1].lerp(self.points[k], s);
            }
        }
        *self.points.last().expect("non-empty route")
    }
}

#[derive(PartialEq)]
struct Open {
    f: f64,
    g: f64,
    node: usize,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, o: &Self) -> Ordering {
        o.f.total_cmp(&self.f).then_with(|| o.node.cmp(&self.node))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// A* with the Euclidean distance to the goal as heuristic; admissible since
/// every edge costs at least its length.
pub fn astar(g: &SearchGraph, t_start: f64, speed: f64) -> Result<Route> {
    let n = g.points.len();
    let goal_pos = g.points[g.goal];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut heap = BinaryHeap::new();
    best[g.start] = 0.0;
    heap.push(Open { f: g.points[g.start].distance(goal_pos), g: 0.0, node: g.start });
    let mut expanded = 0;
    while let Some(Open { g: cost, node, .. }) = heap.pop() {
        if closed[node] || cost > best[node] {
            continue;
        }
        closed[node] = true;
        expanded += 1;
        if node == g.goal {
            let mut path = vec![node];
            while *path.last().unwrap() != g.start {
                path.push(parent[*path.last().unwrap()]);
            }
            path.reverse();
            let points: Vec<Vec2> = path.iter().map(|&i| g.points[i]).collect();
            let mut times = vec![t_start];
            for w in points.windows(2) {
                times.push(times.last().unwrap() + w[0].distance(w[1]) / speed);
            }
            return Ok(Route { points, times, cost, expanded });
        }
        for &(v, w) in &g.adj[node] {
            let c = cost + w;
            if c < best[v] {
                best[v] = c;
                parent[v] = node;
                heap.push(Open { f: c + g.points[v].distance(goal_pos), g: c, node: v });
            }
        }
    }
    Err(Error::Disconnected)
}

/// Least-cost flow-aware route from `start` to `goal` departing at
/// `t_start`.
pub fn flow_astar(
    tg: &TriangleGraph,
    start: Vec2,
    goal: Vec2,
    t_start: f64,
    fm: &FlowMap,
    params: &SearchParams,
) -> Result<Route> {
    let g = SearchGraph::build(tg, start, goal, t_start, fm, params)?;
    astar(&g, t_start, params.speed)
}
