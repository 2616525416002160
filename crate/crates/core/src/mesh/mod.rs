//! Planar geometry: boundary loops, structured annular meshes, mesh files.

mod io;

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use io::{load_mesh, parse_mesh, save_mesh, write_mesh};

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Rotation about the origin.
    pub fn rotated(self, theta: f64) -> Point2 {
        let (s, c) = theta.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

/// Twice the signed area of the triangle `(a, b, c)`.
pub fn signed_area2(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

fn polygon_signed_area(pts: &[Point2]) -> f64 {
    let n = pts.len();
    0.5 * (0..n).map(|i| pts[i].cross(pts[(i + 1) % n])).sum::<f64>()
}

fn segments_intersect(p1: Point2, p2: Point2, q1: Point2, q2: Point2) -> bool {
    let d1 = signed_area2(q1, q2, p1);
    let d2 = signed_area2(q1, q2, p2);
    let d3 = signed_area2(p1, p2, q1);
    let d4 = signed_area2(p1, p2, q2);
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

/// Winding-number point-in-polygon test; points on an edge count as outside.
fn winding_number(pts: &[Point2], p: Point2) -> i32 {
    let n = pts.len();
    let mut wn = 0;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        if a.y <= p.y {
            if b.y > p.y && signed_area2(a, b, p) > 0.0 {
                wn += 1;
            }
        } else if b.y <= p.y && signed_area2(a, b, p) < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// Closed polygonal contour. The constructor enforces the invariants: at
/// least three nodes, no repeated consecutive nodes, no self-intersection.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryLoop {
    nodes: Vec<Point2>,
    ccw: bool,
}

impl BoundaryLoop {
    pub fn new(nodes: Vec<Point2>) -> Result<Self> {
        let n = nodes.len();
        if n < 3 {
            return Err(Error::Argument(format!("a loop needs at least 3 nodes, got {n}")));
        }
        if nodes.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::Argument("loop node with non-finite coordinate".into()));
        }
        for i in 0..n {
            if nodes[i] == nodes[(i + 1) % n] {
                return Err(Error::Argument(format!("repeated consecutive node at index {i}")));
            }
        }
        for i in 0..n {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                if segments_intersect(nodes[i], nodes[(i + 1) % n], nodes[j], nodes[(j + 1) % n]) {
                    return Err(Error::Geometry(format!("loop edges {i} and {j} intersect")));
                }
            }
        }
        let area = polygon_signed_area(&nodes);
        if area == 0.0 {
            return Err(Error::Geometry("loop encloses zero area".into()));
        }
        Ok(Self { nodes, ccw: area > 0.0 })
    }

    pub fn nodes(&self) -> &[Point2] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_ccw(&self) -> bool {
        self.ccw
    }

    pub fn signed_area(&self) -> f64 {
        polygon_signed_area(&self.nodes)
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.len();
        (0..n).map(|i| (self.nodes[(i + 1) % n] - self.nodes[i]).norm()).sum()
    }

    /// Area centroid of the enclosed polygon.
    pub fn centroid(&self) -> Point2 {
        let n = self.len();
        let a6 = 6.0 * self.signed_area();
        let (mut cx, mut cy) = (0.0, 0.0);
        for i in 0..n {
            let p = self.nodes[i];
            let q = self.nodes[(i + 1) % n];
            let w = p.cross(q);
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
        }
        Point2::new(cx / a6, cy / a6)
    }

    /// Largest node distance from the origin.
    pub fn max_radius(&self) -> f64 {
        self.nodes.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    pub fn min_radius(&self) -> f64 {
        self.nodes.iter().map(|p| p.norm()).fold(f64::INFINITY, f64::min)
    }

    /// Strict interior test (winding number non-zero, not on an edge).
    pub fn contains(&self, p: Point2) -> bool {
        let n = self.len();
        let scale = self.max_radius().max(1.0);
        for i in 0..n {
            let a = self.nodes[i];
            let b = self.nodes[(i + 1) % n];
            let len = (b - a).norm();
            let t = (p - a).dot(b - a) / (len * len);
            if (-1e-12..=1.0 + 1e-12).contains(&t) && signed_area2(a, b, p).abs() / len <= 1e-12 * scale {
                return false;
            }
        }
        winding_number(&self.nodes, p) != 0
    }

    /// Unit normal at each node pointing away from the enclosed region,
    /// taken as the bisector of the two adjacent edge normals.
    pub fn outward_normals(&self) -> Vec<Point2> {
        let n = self.len();
        let sign = if self.ccw { 1.0 } else { -1.0 };
        let edge_normal = |i: usize| {
            let t = self.nodes[(i + 1) % n] - self.nodes[i];
            Point2::new(t.y, -t.x) * (sign / t.norm())
        };
        (0..n)
            .map(|i| {
                let s = edge_normal((i + n - 1) % n) + edge_normal(i);
                s * (1.0 / s.norm())
            })
            .collect()
    }

    /// Node count plus a digest of the exact coordinate bits.
    pub fn fingerprint(&self) -> LoopFingerprint {
        let mut h = Sha256::new();
        for p in &self.nodes {
            h.update(p.x.to_bits().to_le_bytes());
            h.update(p.y.to_bits().to_le_bytes());
        }
        let digest = h.finalize();
        let hash = digest[..16].iter().map(|b| format!("{b:02x}")).collect();
        LoopFingerprint { n_nodes: self.len(), hash }
    }

    /// The same contour rotated rigidly about the origin.
    pub fn rotated(&self, theta: f64) -> Result<BoundaryLoop> {
        BoundaryLoop::new(self.nodes.iter().map(|p| p.rotated(theta)).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LoopFingerprint {
    pub n_nodes: usize,
    pub hash: String,
}

/// `n_nodes` equally spaced points on a circle, node 0 on the positive x axis.
pub fn circle_loop(radius: f64, n_nodes: usize) -> Result<BoundaryLoop> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Argument(format!("circle radius must be positive, got {radius}")));
    }
    if n_nodes < 8 {
        return Err(Error::Argument(format!("circle needs at least 8 nodes, got {n_nodes}")));
    }
    let nodes = (0..n_nodes)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n_nodes as f64;
            Point2::new(radius * t.cos(), radius * t.sin())
        })
        .collect();
    BoundaryLoop::new(nodes)
}

/// Axis-aligned rectangle centred at the origin, counter-clockwise from the
/// lower-right corner, `n_per_side` nodes per side with every corner once.
pub fn rect_loop(width: f64, height: f64, n_per_side: usize) -> Result<BoundaryLoop> {
    if !(width > 0.0 && height > 0.0) || !width.is_finite() || !height.is_finite() {
        return Err(Error::Argument(format!("rectangle sides must be positive, got {width} x {height}")));
    }
    if n_per_side < 2 {
        return Err(Error::Argument(format!("need at least 2 nodes per side, got {n_per_side}")));
    }
    let (hw, hh) = (0.5 * width, 0.5 * height);
    let corners = [
        Point2::new(hw, -hh),
        Point2::new(hw, hh),
        Point2::new(-hw, hh),
        Point2::new(-hw, -hh),
    ];
    let mut nodes = Vec::with_capacity(4 * n_per_side);
    for side in 0..4 {
        let a = corners[side];
        let b = corners[(side + 1) % 4];
        for j in 0..n_per_side {
            let t = j as f64 / n_per_side as f64;
            nodes.push(a + (b - a) * t);
        }
    }
    BoundaryLoop::new(nodes)
}

/// Similarity scaling about the loop's area centroid. Node count and order are
/// preserved so that node `i` of the result corresponds to node `i` of `lp`.
pub fn scale_loop(lp: &BoundaryLoop, g: f64) -> Result<BoundaryLoop> {
    if !(g > 1.0) || !g.is_finite() {
        return Err(Error::Argument(format!("similarity ratio must exceed 1, got {g}")));
    }
    let c = lp.centroid();
    BoundaryLoop::new(lp.nodes.iter().map(|&p| c + (p - c) * g).collect())
}

/// Circle of the given radius whose node `i` sits at the same normalized
/// perimeter parameter as node `i` of `structure`, the parameter origin being
/// the polar angle of the structure's node 0.
pub fn matched_circle_loop(structure: &BoundaryLoop, radius: f64) -> Result<BoundaryLoop> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Argument(format!("circle radius must be positive, got {radius}")));
    }
    let pts = structure.nodes();
    let n = pts.len();
    let total = structure.perimeter();
    let start = pts[0].angle();
    let dir = if structure.is_ccw() { 1.0 } else { -1.0 };
    let mut s = 0.0;
    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        let t = start + dir * 2.0 * PI * s / total;
        nodes.push(Point2::new(radius * t.cos(), radius * t.sin()));
        s += (pts[(i + 1) % n] - pts[i]).norm();
    }
    BoundaryLoop::new(nodes)
}

/// Linear-triangle mesh with named boundary loops (node-index cycles).
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh2D {
    pub nodes: Vec<Point2>,
    pub elements: Vec<[usize; 3]>,
    pub loops: BTreeMap<String, Vec<usize>>,
}

impl Mesh2D {
    /// Builds a mesh and checks every invariant.
    pub fn new(nodes: Vec<Point2>, elements: Vec<[usize; 3]>, loops: BTreeMap<String, Vec<usize>>) -> Result<Self> {
        let mesh = Self { nodes, elements, loops };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        let nn = self.nodes.len();
        for (e, tri) in self.elements.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&i| i >= nn) {
                return Err(Error::Invariant(format!(
                    "element {e} references node {bad} but the mesh has {nn} nodes"
                )));
            }
            let [a, b, c] = tri.map(|i| self.nodes[i]);
            if !(signed_area2(a, b, c) > 0.0) {
                return Err(Error::Invariant(format!("element {e} has non-positive area")));
            }
        }
        let edges = self.edge_counts();
        for (name, lp) in &self.loops {
            if lp.len() < 3 {
                return Err(Error::Invariant(format!("loop '{name}' has fewer than 3 nodes")));
            }
            if let Some(&bad) = lp.iter().find(|&&i| i >= nn) {
                return Err(Error::Invariant(format!("loop '{name}' references node {bad} of {nn}")));
            }
            for w in 0..lp.len() {
                let (i, j) = (lp[w], lp[(w + 1) % lp.len()]);
                let key = (i.min(j), i.max(j));
                if edges.get(&key).copied() != Some(1) {
                    return Err(Error::Invariant(format!(
                        "loop '{name}' edge {i}-{j} is not a boundary edge of exactly one element"
                    )));
                }
            }
        }
        Ok(())
    }

    fn edge_counts(&self) -> HashMap<(usize, usize), usize> {
        let mut counts = HashMap::new();
        for tri in &self.elements {
            for k in 0..3 {
                let (i, j) = (tri[k], tri[(k + 1) % 3]);
                *counts.entry((i.min(j), i.max(j))).or_insert(0) += 1;
            }
        }
        counts
    }

    pub fn area(&self) -> f64 {
        self.elements
            .iter()
            .map(|t| 0.5 * signed_area2(self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]))
            .sum()
    }

    pub fn loop_nodes(&self, name: &str) -> Option<&[usize]> {
        self.loops.get(name).map(|v| v.as_slice())
    }

    /// Coordinates of a named loop as a [`BoundaryLoop`].
    pub fn boundary_loop(&self, name: &str) -> Result<BoundaryLoop> {
        let idx = self
            .loop_nodes(name)
            .ok_or_else(|| Error::Argument(format!("mesh has no loop named '{name}'")))?;
        BoundaryLoop::new(idx.iter().map(|&i| self.nodes[i]).collect())
    }

    /// Boundary cycles recovered from the element graph, each traversed with
    /// the region on its left.
    pub fn extract_boundary_cycles(&self) -> Vec<Vec<usize>> {
        let counts = self.edge_counts();
        let mut next: HashMap<usize, usize> = HashMap::new();
        for tri in &self.elements {
            for k in 0..3 {
                let (i, j) = (tri[k], tri[(k + 1) % 3]);
                if counts[&(i.min(j), i.max(j))] == 1 {
                    next.insert(i, j);
                }
            }
        }
        let mut starts: Vec<usize> = next.keys().copied().collect();
        starts.sort_unstable();
        let mut seen = std::collections::HashSet::new();
        let mut cycles = Vec::new();
        for s in starts {
            if seen.contains(&s) {
                continue;
            }
            let mut cycle = vec![s];
            seen.insert(s);
            let mut cur = next[&s];
            while cur != s {
                cycle.push(cur);
                seen.insert(cur);
                match next.get(&cur) {
                    Some(&n) => cur = n,
                    None => break,
                }
            }
            cycles.push(cycle);
        }
        cycles
    }

    /// Containing element and barycentric coordinates of `p`, if any.
    pub fn locate(&self, p: Point2) -> Option<(usize, [f64; 3])> {
        const TOL: f64 = 1e-10;
        for (e, t) in self.elements.iter().enumerate() {
            let [a, b, c] = t.map(|i| self.nodes[i]);
            let area = signed_area2(a, b, c);
            let l0 = signed_area2(p, b, c) / area;
            let l1 = signed_area2(a, p, c) / area;
            let l2 = 1.0 - l0 - l1;
            if l0 >= -TOL && l1 >= -TOL && l2 >= -TOL {
                return Some((e, [l0, l1, l2]));
            }
        }
        None
    }
}

/// True when `a` and `b` describe the same cycle up to rotation and reversal.
pub fn same_cycle(a: &[usize], b: &[usize]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    if a.is_empty() {
        return true;
    }
    let n = a.len();
    let Some(shift) = b.iter().position(|&x| x == a[0]) else {
        return false;
    };
    let fwd = (0..n).all(|i| a[i] == b[(shift + i) % n]);
    let bwd = (0..n).all(|i| a[i] == b[(shift + n - i) % n]);
    fwd || bwd
}

/// Structured mesh between two loops with matching node counts: rings are
/// linear interpolations between corresponding nodes, each quad is split
/// along its shorter diagonal (ties to `a-c`). Ring 0 is `inner`, ring `n_layers` is `outer`;
/// node `(ring, j)` has index `ring * N + j`.
pub fn annulus_mesh(inner: &BoundaryLoop, outer: &BoundaryLoop, n_layers: usize) -> Result<Mesh2D> {
    let n = inner.len();
    if outer.len() != n {
        return Err(Error::Argument(format!(
            "loops must have equal node counts, got {} and {}",
            n,
            outer.len()
        )));
    }
    if n_layers < 1 {
        return Err(Error::Argument("need at least one layer".into()));
    }
    if !inner.is_ccw() || !outer.is_ccw() {
        return Err(Error::Argument("annulus loops must both be counter-clockwise".into()));
    }
    if inner.nodes().iter().any(|&p| !outer.contains(p)) || outer.nodes().iter().any(|&p| inner.contains(p)) {
        return Err(Error::Geometry("inner loop is not strictly inside the outer loop".into()));
    }
    let mut nodes = Vec::with_capacity(n * (n_layers + 1));
    for ring in 0..=n_layers {
        let t = ring as f64 / n_layers as f64;
        for j in 0..n {
            let a = inner.nodes()[j];
            let b = outer.nodes()[j];
            nodes.push(if ring == n_layers { b } else { a + (b - a) * t });
        }
    }
    let mut elements = Vec::with_capacity(2 * n * n_layers);
    for ring in 0..n_layers {
        for j in 0..n {
            let a = ring * n + j;
            let b = ring * n + (j + 1) % n;
            let c = (ring + 1) * n + (j + 1) % n;
            let d = (ring + 1) * n + j;
            let ac = (nodes[c] - nodes[a]).norm();
            let bd = (nodes[d] - nodes[b]).norm();
            // Near-ties (any circle) go to `ac` so the split does not depend on round-off.
            let pair = if ac <= bd * (1.0 + 1e-9) { [[a, c, b], [a, d, c]] } else { [[a, d, b], [b, d, c]] };
            for tri in pair {
                let [p, q, r] = tri.map(|i| nodes[i]);
                if !(signed_area2(p, q, r) > 0.0) {
                    return Err(Error::Geometry(format!(
                        "inverted element between loop nodes {j} and {} in layer {ring}",
                        (j + 1) % n
                    )));
                }
                elements.push(tri);
            }
        }
    }
    let mut loops = BTreeMap::new();
    loops.insert("inner".to_string(), (0..n).collect());
    loops.insert("outer".to_string(), (n_layers * n..(n_layers + 1) * n).collect());
    Mesh2D::new(nodes, elements, loops)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_loop_placement() {
        let c = circle_loop(0.55, 8).unwrap();
        assert_eq!(c.nodes()[0], Point2::new(0.55, 0.0));
        assert!((c.nodes()[2] - Point2::new(0.0, 0.55)).norm() < 1e-15);
        assert!(c.is_ccw());
        assert!(matches!(circle_loop(1.0, 7), Err(Error::Argument(_))));
        assert!(matches!(circle_loop(-1.0, 8), Err(Error::Argument(_))));
    }

    #[test]
    fn circle_area_converges() {
        let c = circle_loop(1.0, 256).unwrap();
        assert!((c.signed_area() - PI).abs() < 2e-3);
    }

    #[test]
    fn rect_loop_construction() {
        let r = rect_loop(2.0, 1.0, 2).unwrap();
        assert_eq!(r.len(), 8);
        assert!(r.nodes().contains(&Point2::new(1.0, 0.5)));
        assert_eq!(r.signed_area(), 2.0);
        assert!(matches!(rect_loop(-1.0, 1.0, 2), Err(Error::Argument(_))));
        assert!(matches!(rect_loop(1.0, 1.0, 1), Err(Error::Argument(_))));
    }

    #[test]
    fn loop_invariants_rejected() {
        let p = |x, y| Point2::new(x, y);
        assert!(BoundaryLoop::new(vec![p(0.0, 0.0), p(1.0, 0.0)]).is_err());
        assert!(BoundaryLoop::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 0.0), p(0.0, 1.0)]).is_err());
        // bow tie
        let bow = BoundaryLoop::new(vec![p(0.0, 0.0), p(1.0, 1.0), p(1.0, 0.0), p(0.0, 1.0)]);
        assert!(matches!(bow, Err(Error::Geometry(_))));
        let cw = BoundaryLoop::new(vec![p(0.0, 0.0), p(0.0, 1.0), p(1.0, 0.0)]).unwrap();
        assert!(!cw.is_ccw());
    }

    #[test]
    fn scale_loop_ratio() {
        let c = circle_loop(0.55, 16).unwrap();
        let s = scale_loop(&c, 1.05).unwrap();
        for p in s.nodes() {
            assert!((p.norm() - 0.5775).abs() < 1e-14);
        }
        assert!(scale_loop(&c, 1.0 + 1e-9).is_ok());
        assert!(matches!(scale_loop(&c, 1.0), Err(Error::Argument(_))));
        let up = scale_loop(&c, 2.0).unwrap();
        assert!(matches!(scale_loop(&up, 0.25), Err(Error::Argument(_))));
    }

    #[test]
    fn annulus_counts_and_area() {
        let m = annulus_mesh(&circle_loop(1.0, 16).unwrap(), &circle_loop(2.0, 16).unwrap(), 2).unwrap();
        assert_eq!(m.nodes.len(), 48);
        assert_eq!(m.elements.len(), 64);
        let fine = annulus_mesh(&circle_loop(1.0, 256).unwrap(), &circle_loop(2.0, 256).unwrap(), 4).unwrap();
        let exact = PI * 3.0;
        assert!((fine.area() - exact).abs() / exact < 1e-3);
        let bad = annulus_mesh(&circle_loop(1.0, 16).unwrap(), &circle_loop(2.0, 17).unwrap(), 2);
        assert!(matches!(bad, Err(Error::Argument(_))));
        let swapped = annulus_mesh(&circle_loop(2.0, 16).unwrap(), &circle_loop(1.0, 16).unwrap(), 2);
        assert!(matches!(swapped, Err(Error::Geometry(_))));
    }

    #[test]
    fn annulus_area_is_exact_polygon_difference() {
        let inner = rect_loop(0.6, 0.3, 16).unwrap();
        let outer = matched_circle_loop(&inner, 0.55).unwrap();
        let m = annulus_mesh(&inner, &outer, 6).unwrap();
        let exact = outer.signed_area() - inner.signed_area();
        assert!((m.area() - exact).abs() <= 1e-12 * exact);
    }

    #[test]
    fn extracted_cycles_match_loops() {
        let inner = rect_loop(0.6, 0.3, 8).unwrap();
        let outer = matched_circle_loop(&inner, 0.55).unwrap();
        let m = annulus_mesh(&inner, &outer, 3).unwrap();
        let cycles = m.extract_boundary_cycles();
        assert_eq!(cycles.len(), 2);
        for name in ["inner", "outer"] {
            let lp = m.loop_nodes(name).unwrap();
            assert!(cycles.iter().any(|c| same_cycle(c, lp)), "loop {name} not recovered");
        }
    }

    #[test]
    fn matched_circle_follows_perimeter() {
        let r = rect_loop(0.6, 0.3, 4).unwrap();
        let c = matched_circle_loop(&r, 0.55).unwrap();
        assert_eq!(c.len(), r.len());
        assert!((c.nodes()[0].angle() - r.nodes()[0].angle()).abs() < 1e-15);
        // first corner is at perimeter fraction 0.3 / 1.8
        let expected = r.nodes()[0].angle() + 2.0 * PI * (0.3 / 1.8);
        assert!((c.nodes()[4].angle() - expected).abs() < 1e-12);
    }

    #[test]
    fn contains_and_normals() {
        let c = circle_loop(1.0, 32).unwrap();
        assert!(c.contains(Point2::new(0.2, 0.1)));
        assert!(!c.contains(Point2::new(1.5, 0.0)));
        assert!(!c.contains(c.nodes()[3]));
        for (p, nrm) in c.nodes().iter().zip(c.outward_normals()) {
            assert!((nrm - *p).norm() < 1e-14);
        }
    }

    #[test]
    fn mesh_invariant_violations() {
        let m = annulus_mesh(&circle_loop(1.0, 8).unwrap(), &circle_loop(2.0, 8).unwrap(), 1).unwrap();
        let mut bad = m.clone();
        bad.elements[0] = [0, 1, 999];
        assert!(matches!(bad.validate(), Err(Error::Invariant(_))));
        let mut flipped = m.clone();
        flipped.elements[0].swap(1, 2);
        assert!(matches!(flipped.validate(), Err(Error::Invariant(_))));
        let mut interior = m;
        interior.loops.insert("bogus".into(), vec![0, 9, 8]);
        assert!(matches!(interior.validate(), Err(Error::Invariant(_))));
    }
}
