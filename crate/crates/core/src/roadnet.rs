//! Road network storage, time-sliced shortest paths and bearing geometry.
//!
//! Edge traversal times are kept per hour-of-day slot. Every query freezes
//! the weights at the slot of its start time, so a path costed at `t` uses
//! `slot(t)` for every edge on it.
//!
//! All stored times are quantized to 1/1024 s. Sums of such values are exact
//! in `f64`, which keeps shortest-path results independent of summation order.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::TAU;
use std::fmt;
use std::num::NonZeroUsize;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::{Arc, Mutex};

use lru::LruCache;
use thiserror::Error;

pub const SLOTS: usize = 24;
pub const SLOT_SECONDS: f64 = 3600.0;
pub const DAY_SECONDS: f64 = 86_400.0;

const EARTH_RADIUS_KM: f64 = 6371.0088;
const TIME_RESOLUTION: f64 = 1024.0;
const CACHE_BUDGET_BYTES: usize = 256 << 20;
const NO_EDGE: u32 = u32::MAX;

/// Rounds a duration to the internal 1/1024 s grid.
pub fn quantize(seconds: f64) -> f64 {
    (seconds * TIME_RESOLUTION).round() / TIME_RESOLUTION
}

/// Hour-of-day slot for a clock value. Clocks past midnight wrap around.
pub fn slot_of(t: f64) -> usize {
    let in_day = t.rem_euclid(DAY_SECONDS);
    ((in_day / SLOT_SECONDS) as usize).min(SLOTS - 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u32);

impl EdgeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate node id {0}")]
    DuplicateNode(u64),
    #[error("edge {edge} references unknown node {node}")]
    DanglingEndpoint { edge: u64, node: u64 },
    #[error("edge {edge} has non-positive weight {value} in slot {slot}")]
    NonPositiveWeight { edge: u64, slot: usize, value: f64 },
    #[error("network is not weakly connected ({components} components)")]
    Disconnected { components: usize },
    #[error("network has no nodes")]
    Empty,
    #[error("unknown edge {0:?}")]
    UnknownEdge(EdgeId),
    #[error("unknown node {0:?}")]
    UnknownNode(NodeId),
}

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("bearing is undefined between identical points")]
    IdenticalPoints,
}

/// Traversal time in seconds for each hour-of-day slot.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeWeightProfile {
    slot_seconds: [f64; SLOTS],
}

impl EdgeWeightProfile {
    /// Validates and quantizes a 24-slot profile. `edge` only labels errors.
    pub fn new(edge: u64, values: &[f64]) -> Result<Self, NetworkError> {
        if values.len() != SLOTS {
            return Err(NetworkError::Parse {
                line: 0,
                message: format!("edge {edge}: expected {SLOTS} slot weights, got {}", values.len()),
            });
        }
        let mut slot_seconds = [0.0; SLOTS];
        for (slot, (&raw, out)) in values.iter().zip(slot_seconds.iter_mut()).enumerate() {
            if !(raw.is_finite() && raw > 0.0) {
                return Err(NetworkError::NonPositiveWeight { edge, slot, value: raw });
            }
            *out = quantize(raw).max(1.0 / TIME_RESOLUTION);
        }
        Ok(Self { slot_seconds })
    }

    pub fn constant(edge: u64, seconds: f64) -> Result<Self, NetworkError> {
        Self::new(edge, &[seconds; SLOTS])
    }

    pub fn in_slot(&self, slot: usize) -> f64 {
        self.slot_seconds[slot]
    }

    pub fn at(&self, t: f64) -> f64 {
        self.slot_seconds[slot_of(t)]
    }

    pub fn values(&self) -> &[f64; SLOTS] {
        &self.slot_seconds
    }
}

/// Latitude/longitude pair in radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub fn new(lat: f64, lon: f64) -> Self {
        Self { lat, lon }
    }

    pub fn from_degrees(lat: f64, lon: f64) -> Self {
        Self { lat: lat.to_radians(), lon: lon.to_radians() }
    }
}

/// Direction along a great circle, in `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Bearing(f64);

impl Bearing {
    pub fn radians(self) -> f64 {
        self.0
    }
}

/// Initial great-circle bearing from `s` towards `d`.
pub fn bearing(s: LatLon, d: LatLon) -> Result<Bearing, GeometryError> {
    if s == d {
        return Err(GeometryError::IdenticalPoints);
    }
    let dlon = d.lon - s.lon;
    let x = d.lat.cos() * dlon.sin();
    let y = s.lat.cos() * d.lat.sin() - s.lat.sin() * d.lat.cos() * dlon.cos();
    if x == 0.0 && y == 0.0 {
        // antipodal or numerically coincident points
        return Err(GeometryError::IdenticalPoints);
    }
    let mut theta = x.atan2(y);
    if theta < 0.0 {
        theta += TAU;
    }
    if theta >= TAU {
        theta -= TAU;
    }
    Ok(Bearing(theta))
}

/// Normalized disagreement between the heading `loc -> dest` and the
/// direction `loc -> u`: 0 when aligned, 1 when diametrically opposite.
pub fn angular_distance(loc: LatLon, dest: LatLon, u: LatLon) -> Result<f64, GeometryError> {
    let heading = bearing(loc, dest)?.radians();
    let towards = bearing(loc, u)?.radians();
    let value = (1.0 - (heading - towards).cos()) / 2.0;
    Ok(value.clamp(0.0, 1.0))
}

/// Great-circle distance in kilometres.
pub fn haversine_km(a: LatLon, b: LatLon) -> f64 {
    let dlat = b.lat - a.lat;
    let dlon = b.lon - a.lon;
    let h = (dlat / 2.0).sin().powi(2) + a.lat.cos() * b.lat.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

#[derive(Clone, Debug)]
pub struct Node {
    pub external_id: u64,
    pub position: LatLon,
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub external_id: u64,
    pub from: NodeId,
    pub to: NodeId,
    pub profile: EdgeWeightProfile,
    pub length_km: f64,
}

/// Shortest-path tree rooted at a target: `dist[u]` is the quickest time from
/// `u` to the target and `next_edge[u]` the first edge to take from `u`.
#[derive(Debug)]
pub struct ReverseTree {
    pub dist: Vec<f64>,
    next_edge: Vec<u32>,
}

impl ReverseTree {
    pub fn next_edge(&self, u: NodeId) -> Option<EdgeId> {
        match self.next_edge[u.index()] {
            NO_EDGE => None,
            e => Some(EdgeId(e)),
        }
    }
}

struct SpCache {
    trees: Mutex<LruCache<(u32, u8), Arc<ReverseTree>>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl SpCache {
    fn new(capacity: usize) -> Self {
        let capacity = NonZeroUsize::new(capacity.max(1)).expect("nonzero");
        Self {
            trees: Mutex::new(LruCache::new(capacity)),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }
}

impl fmt::Debug for SpCache {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpCache")
            .field("hits", &self.hits.load(AtomicOrdering::Relaxed))
            .field("misses", &self.misses.load(AtomicOrdering::Relaxed))
            .finish()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
}

/// Min-heap entry ordered by `(distance, node)`.
#[derive(Clone, Copy, PartialEq)]
pub(crate) struct Frontier {
    pub(crate) dist: f64,
    pub(crate) node: u32,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Directed road graph. Immutable after construction; the shortest-path
/// memo is internally synchronized so shared references may be queried from
/// several threads.
#[derive(Debug)]
pub struct RoadNetwork {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    out_adj: Vec<Vec<EdgeId>>,
    in_adj: Vec<Vec<EdgeId>>,
    node_index: HashMap<u64, NodeId>,
    edge_index: HashMap<u64, EdgeId>,
    slot_max: [f64; SLOTS],
    cache: SpCache,
}

#[derive(Debug, Default)]
pub struct NetworkBuilder {
    nodes: Vec<(u64, f64, f64)>,
    edges: Vec<(u64, u64, u64, Vec<f64>)>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node(&mut self, id: u64, lat_deg: f64, lon_deg: f64) -> &mut Self {
        self.nodes.push((id, lat_deg, lon_deg));
        self
    }

    pub fn edge(&mut self, id: u64, from: u64, to: u64, slot_seconds: Vec<f64>) -> &mut Self {
        self.edges.push((id, from, to, slot_seconds));
        self
    }

    pub fn edge_constant(&mut self, id: u64, from: u64, to: u64, seconds: f64) -> &mut Self {
        self.edge(id, from, to, vec![seconds; SLOTS])
    }

    pub fn build(&self) -> Result<RoadNetwork, NetworkError> {
        if self.nodes.is_empty() {
            return Err(NetworkError::Empty);
        }
        let mut nodes = Vec::with_capacity(self.nodes.len());
        let mut node_index = HashMap::with_capacity(self.nodes.len());
        for &(id, lat, lon) in &self.nodes {
            let idx = NodeId(nodes.len() as u32);
            if node_index.insert(id, idx).is_some() {
                return Err(NetworkError::DuplicateNode(id));
            }
            nodes.push(Node { external_id: id, position: LatLon::from_degrees(lat, lon) });
        }

        let mut edges = Vec::with_capacity(self.edges.len());
        let mut edge_index = HashMap::with_capacity(self.edges.len());
        let mut out_adj = vec![Vec::new(); nodes.len()];
        let mut in_adj = vec![Vec::new(); nodes.len()];
        let mut slot_max = [0.0f64; SLOTS];
        for (id, from, to, weights) in &self.edges {
            let resolve = |node: &u64| {
                node_index
                    .get(node)
                    .copied()
                    .ok_or(NetworkError::DanglingEndpoint { edge: *id, node: *node })
            };
            let (from, to) = (resolve(from)?, resolve(to)?);
            let profile = EdgeWeightProfile::new(*id, weights)?;
            for (max, &w) in slot_max.iter_mut().zip(profile.values()) {
                *max = max.max(w);
            }
            let eid = EdgeId(edges.len() as u32);
            edge_index.insert(*id, eid);
            out_adj[from.index()].push(eid);
            in_adj[to.index()].push(eid);
            let length_km = haversine_km(nodes[from.index()].position, nodes[to.index()].position);
            edges.push(Edge { external_id: *id, from, to, profile, length_km });
        }

        let components = weak_components(nodes.len(), &edges);
        if components > 1 {
            return Err(NetworkError::Disconnected { components });
        }

        let per_tree = 12 * nodes.len().max(1);
        let capacity = (CACHE_BUDGET_BYTES / per_tree).clamp(64, 1 << 16);
        Ok(RoadNetwork {
            nodes,
            edges,
            out_adj,
            in_adj,
            node_index,
            edge_index,
            slot_max,
            cache: SpCache::new(capacity),
        })
    }
}

fn weak_components(n: usize, edges: &[Edge]) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = n;
    for e in edges {
        let a = find(&mut parent, e.from.index());
        let b = find(&mut parent, e.to.index());
        if a != b {
            parent[a] = b;
            components -= 1;
        }
    }
    components
}

impl RoadNetwork {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> Result<&Edge, NetworkError> {
        self.edges.get(e.index()).ok_or(NetworkError::UnknownEdge(e))
    }

    pub fn position(&self, n: NodeId) -> LatLon {
        self.nodes[n.index()].position
    }

    pub fn contains(&self, n: NodeId) -> bool {
        n.index() < self.nodes.len()
    }

    /// Dense id for an id used in the network file.
    pub fn node_by_external(&self, id: u64) -> Option<NodeId> {
        self.node_index.get(&id).copied()
    }

    pub fn edge_by_external(&self, id: u64) -> Option<EdgeId> {
        self.edge_index.get(&id).copied()
    }

    pub fn external_id(&self, n: NodeId) -> u64 {
        self.nodes[n.index()].external_id
    }

    pub fn out_edges(&self, n: NodeId) -> &[EdgeId] {
        &self.out_adj[n.index()]
    }

    pub fn in_edges(&self, n: NodeId) -> &[EdgeId] {
        &self.in_adj[n.index()]
    }

    /// Traversal time of `e` at clock `t`.
    pub fn edge_weight(&self, e: EdgeId, t: f64) -> Result<f64, NetworkError> {
        Ok(self.edge(e)?.profile.at(t))
    }

    /// Largest edge weight in the slot containing `t`.
    pub fn max_weight(&self, t: f64) -> f64 {
        self.slot_max[slot_of(t)]
    }

    fn check(&self, n: NodeId) -> Result<(), NetworkError> {
        if self.contains(n) {
            Ok(())
        } else {
            Err(NetworkError::UnknownNode(n))
        }
    }

    /// Quickest travel time from `u` to `v` with weights frozen at `slot(t)`.
    /// Unreachable pairs yield `f64::INFINITY`.
    pub fn shortest_path_time(&self, u: NodeId, v: NodeId, t: f64) -> Result<f64, NetworkError> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.sp(u, v, t))
    }

    /// Unchecked variant of [`shortest_path_time`](Self::shortest_path_time).
    pub fn sp(&self, u: NodeId, v: NodeId, t: f64) -> f64 {
        if u == v {
            return 0.0;
        }
        self.tree_to(v, t).dist[u.index()]
    }

    /// Cached shortest-path tree towards `target` for the slot of `t`.
    pub fn tree_to(&self, target: NodeId, t: f64) -> Arc<ReverseTree> {
        let slot = slot_of(t);
        let key = (target.0, slot as u8);
        if let Some(tree) = self.cache.trees.lock().expect("sp cache poisoned").get(&key) {
            self.cache.hits.fetch_add(1, AtomicOrdering::Relaxed);
            return Arc::clone(tree);
        }
        self.cache.misses.fetch_add(1, AtomicOrdering::Relaxed);
        let tree = Arc::new(self.reverse_dijkstra(target, slot));
        self.cache
            .trees
            .lock()
            .expect("sp cache poisoned")
            .put(key, Arc::clone(&tree));
        tree
    }

    pub fn cache_stats(&self) -> CacheStats {
        CacheStats {
            hits: self.cache.hits.load(AtomicOrdering::Relaxed),
            misses: self.cache.misses.load(AtomicOrdering::Relaxed),
        }
    }

    fn reverse_dijkstra(&self, target: NodeId, slot: usize) -> ReverseTree {
        let n = self.nodes.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut next_edge = vec![NO_EDGE; n];
        let mut settled = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[target.index()] = 0.0;
        heap.push(Frontier { dist: 0.0, node: target.0 });
        while let Some(Frontier { dist: d, node }) = heap.pop() {
            let node = node as usize;
            if settled[node] {
                continue;
            }
            settled[node] = true;
            for &e in &self.in_adj[node] {
                let edge = &self.edges[e.index()];
                let from = edge.from.index();
                if settled[from] {
                    continue;
                }
                let cand = d + edge.profile.in_slot(slot);
                if cand < dist[from] {
                    dist[from] = cand;
                    next_edge[from] = e.0;
                    heap.push(Frontier { dist: cand, node: from as u32 });
                }
            }
        }
        ReverseTree { dist, next_edge }
    }

    /// Forward single-source quickest times at `slot(t)`, optionally bounded:
    /// nodes farther than `radius` are left at infinity. Not cached.
    pub fn distances_from(&self, source: NodeId, t: f64, radius: f64) -> Vec<f64> {
        let slot = slot_of(t);
        let n = self.nodes.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut settled = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[source.index()] = 0.0;
        heap.push(Frontier { dist: 0.0, node: source.0 });
        while let Some(Frontier { dist: d, node }) = heap.pop() {
            let node = node as usize;
            if settled[node] {
                continue;
            }
            settled[node] = true;
            for &e in &self.out_adj[node] {
                let edge = &self.edges[e.index()];
                let to = edge.to.index();
                let cand = d + edge.profile.in_slot(slot);
                if !settled[to] && cand < dist[to] && cand <= radius {
                    dist[to] = cand;
                    heap.push(Frontier { dist: cand, node: to as u32 });
                }
            }
        }
        dist
    }

    /// Edge sequence of a quickest `u -> v` path at `slot(t)`.
    pub fn path(&self, u: NodeId, v: NodeId, t: f64) -> Option<Vec<EdgeId>> {
        if u == v {
            return Some(Vec::new());
        }
        let tree = self.tree_to(v, t);
        if !tree.dist[u.index()].is_finite() {
            return None;
        }
        let mut out = Vec::new();
        let mut at = u;
        while at != v {
            let e = tree.next_edge(at)?;
            out.push(e);
            at = self.edges[e.index()].to;
        }
        Some(out)
    }

    /// Vehicle-sensitive weight of `e = (u, u')`: a blend of the angular
    /// distance of `u'` from the vehicle's heading and the slot-normalized
    /// travel time. Idle vehicles (no `dest`) and coincident points
    /// contribute no angular term.
    pub fn vehicle_sensitive_weight(
        &self,
        loc: NodeId,
        dest: Option<NodeId>,
        e: EdgeId,
        t: f64,
        gamma: f64,
    ) -> f64 {
        let edge = &self.edges[e.index()];
        self.sensitive_weight_in_slot(loc, dest, edge, slot_of(t), gamma)
    }

    pub(crate) fn sensitive_weight_in_slot(
        &self,
        loc: NodeId,
        dest: Option<NodeId>,
        edge: &Edge,
        slot: usize,
        gamma: f64,
    ) -> f64 {
        let adist = match dest {
            Some(dest) => angular_distance(
                self.position(loc),
                self.position(dest),
                self.position(edge.to),
            )
            .unwrap_or(0.0),
            None => 0.0,
        };
        self.blend_in_slot(adist, edge, slot, gamma)
    }

    pub(crate) fn blend_in_slot(&self, adist: f64, edge: &Edge, slot: usize, gamma: f64) -> f64 {
        let normalized = edge.profile.in_slot(slot) / self.slot_max[slot];
        ((1.0 - gamma) * adist + gamma * normalized).clamp(0.0, 1.0)
    }
}

/// Reads a network file.
pub fn load_network(path: impl AsRef<Path>) -> Result<RoadNetwork, NetworkError> {
    let text = std::fs::read_to_string(path)?;
    parse_network(&text)
}

/// Parses the line-oriented network format:
///
/// ```text
/// nodes <N>
/// <id> <lat_deg> <lon_deg>      (N lines)
/// edges <M>
/// <id> <from> <to> <w0> .. <w23>  (M lines)
/// ```
///
/// Blank lines and lines starting with `#` are ignored.
pub fn parse_network(text: &str) -> Result<RoadNetwork, NetworkError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let mut builder = NetworkBuilder::new();

    let node_count = header(&mut lines, "nodes")?;
    for _ in 0..node_count {
        let (line, text) = next_line(&mut lines, "node record")?;
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(line, "node record needs `id lat lon`"));
        }
        builder.node(
            parse_field(line, fields[0])?,
            parse_field(line, fields[1])?,
            parse_field(line, fields[2])?,
        );
    }

    let edge_count = header(&mut lines, "edges")?;
    for _ in 0..edge_count {
        let (line, text) = next_line(&mut lines, "edge record")?;
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 3 + SLOTS {
            return Err(parse_err(line, "edge record needs `id from to` and 24 slot weights"));
        }
        let weights = fields[3..]
            .iter()
            .map(|f| parse_field::<f64>(line, f))
            .collect::<Result<Vec<_>, _>>()?;
        builder.edge(
            parse_field(line, fields[0])?,
            parse_field(line, fields[1])?,
            parse_field(line, fields[2])?,
            weights,
        );
    }
    if let Some((line, _)) = lines.next() {
        return Err(parse_err(line, "trailing content after edge records"));
    }
    builder.build()
}

/// Renders a network in the format read by [`parse_network`].
pub fn write_network(net: &RoadNetwork) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    writeln!(out, "nodes {}", net.node_count()).unwrap();
    for node in &net.nodes {
        writeln!(
            out,
            "{} {} {}",
            node.external_id,
            node.position.lat.to_degrees(),
            node.position.lon.to_degrees()
        )
        .unwrap();
    }
    writeln!(out, "edges {}", net.edge_count()).unwrap();
    for edge in &net.edges {
        write!(
            out,
            "{} {} {}",
            edge.external_id,
            net.external_id(edge.from),
            net.external_id(edge.to)
        )
        .unwrap();
        for w in edge.profile.values() {
            write!(out, " {w}").unwrap();
        }
        out.push('\n');
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> NetworkError {
    NetworkError::Parse { line, message: message.into() }
}

fn parse_field<T: std::str::FromStr>(line: usize, field: &str) -> Result<T, NetworkError> {
    field
        .parse()
        .map_err(|_| parse_err(line, format!("cannot parse `{field}`")))
}

fn next_line<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    what: &str,
) -> Result<(usize, &'a str), NetworkError> {
    lines
        .next()
        .ok_or_else(|| parse_err(0, format!("unexpected end of file, expected {what}")))
}

fn header<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    keyword: &str,
) -> Result<usize, NetworkError> {
    let (line, text) = next_line(lines, keyword)?;
    let mut parts = text.split_whitespace();
    if parts.next() != Some(keyword) {
        return Err(parse_err(line, format!("expected `{keyword} <count>` header")));
    }
    let count = parts
        .next()
        .ok_or_else(|| parse_err(line, "missing count"))
        .and_then(|c| parse_field(line, c))?;
    if parts.next().is_some() {
        return Err(parse_err(line, "unexpected tokens after header"));
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn profile_10_20() -> Vec<f64> {
        (0..SLOTS).map(|i| 10.0 * (i as f64 + 1.0)).collect()
    }

    fn triangle() -> RoadNetwork {
        // A -> B directly (5) or A -> C -> B (2 + 2)
        let mut b = NetworkBuilder::new();
        b.node(0, 0.0, 0.0).node(1, 0.01, 0.0).node(2, 0.0, 0.01);
        b.edge_constant(0, 0, 1, 5.0)
            .edge_constant(1, 0, 2, 2.0)
            .edge_constant(2, 2, 1, 2.0);
        b.build().unwrap()
    }

    #[test]
    fn parses_three_node_cycle() {
        let w = vec!["7"; SLOTS].join(" ");
        let text = format!("nodes 3\n0 0 0\n1 0.01 0\n2 0 0.01\nedges 3\n0 0 1 {w}\n1 1 2 {w}\n2 2 0 {w}\n");
        let net = parse_network(&text).unwrap();
        assert_eq!(net.node_count(), 3);
        assert_eq!(net.edge_count(), 3);
    }

    #[test]
    fn rejects_dangling_endpoint() {
        let w = vec!["7"; SLOTS].join(" ");
        let text = format!("nodes 2\n0 0 0\n1 0.01 0\nedges 1\n0 0 99 {w}\n");
        assert!(matches!(
            parse_network(&text),
            Err(NetworkError::DanglingEndpoint { edge: 0, node: 99 })
        ));
    }

    #[test]
    fn rejects_zero_weight() {
        let mut w = vec!["7"; SLOTS];
        w[5] = "0";
        let text = format!("nodes 2\n0 0 0\n1 0.01 0\nedges 1\n0 0 1 {}\n", w.join(" "));
        assert!(matches!(
            parse_network(&text),
            Err(NetworkError::NonPositiveWeight { slot: 5, .. })
        ));
    }

    #[test]
    fn rejects_disconnected_and_garbage() {
        let w = vec!["7"; SLOTS].join(" ");
        let text = format!("nodes 3\n0 0 0\n1 0.01 0\n2 0 0.01\nedges 1\n0 0 1 {w}\n");
        assert!(matches!(
            parse_network(&text),
            Err(NetworkError::Disconnected { components: 2 })
        ));
        assert!(matches!(
            parse_network("nodes x\n"),
            Err(NetworkError::Parse { line: 1, .. })
        ));
        assert!(matches!(parse_network("nodes 0\nedges 0\n"), Err(NetworkError::Empty)));
    }

    #[test]
    fn edge_weight_follows_hour_slots() {
        let mut b = NetworkBuilder::new();
        b.node(0, 0.0, 0.0).node(1, 0.01, 0.0);
        b.edge(0, 0, 1, profile_10_20());
        let net = b.build().unwrap();
        assert_eq!(net.edge_weight(EdgeId(0), 0.0).unwrap(), 10.0);
        assert_eq!(net.edge_weight(EdgeId(0), 3599.0).unwrap(), 10.0);
        assert_eq!(net.edge_weight(EdgeId(0), 3600.0).unwrap(), 20.0);
        assert!(matches!(
            net.edge_weight(EdgeId(7), 0.0),
            Err(NetworkError::UnknownEdge(EdgeId(7)))
        ));
    }

    #[test]
    fn shortest_path_on_triangle() {
        let net = triangle();
        let (a, b, c) = (NodeId(0), NodeId(1), NodeId(2));
        assert_eq!(net.shortest_path_time(a, a, 0.0).unwrap(), 0.0);
        assert_eq!(net.shortest_path_time(a, b, 0.0).unwrap(), 4.0);
        assert_eq!(net.path(a, b, 0.0).unwrap(), vec![EdgeId(1), EdgeId(2)]);
        assert!(net.shortest_path_time(b, c, 0.0).unwrap().is_infinite());
        assert!(net.path(b, c, 0.0).is_none());
        assert!(net.shortest_path_time(a, NodeId(9), 0.0).is_err());
    }

    #[test]
    fn bearing_cardinal_directions() {
        let o = LatLon::new(0.0, 0.0);
        assert_eq!(bearing(o, LatLon::new(0.1, 0.0)).unwrap().radians(), 0.0);
        let east = bearing(o, LatLon::new(0.0, 0.1)).unwrap().radians();
        assert!((east - PI / 2.0).abs() < 1e-12);
        let west = bearing(o, LatLon::new(0.0, -0.1)).unwrap().radians();
        assert!((west - 3.0 * PI / 2.0).abs() < 1e-12);
        assert_eq!(bearing(o, o), Err(GeometryError::IdenticalPoints));
    }

    #[test]
    fn angular_distance_extremes() {
        let o = LatLon::new(0.0, 0.0);
        let north = LatLon::new(0.1, 0.0);
        let south = LatLon::new(-0.1, 0.0);
        let east = LatLon::new(0.0, 0.1);
        assert_eq!(angular_distance(o, north, LatLon::new(0.2, 0.0)).unwrap(), 0.0);
        assert!((angular_distance(o, north, south).unwrap() - 1.0).abs() < 1e-12);
        assert!((angular_distance(o, north, east).unwrap() - 0.5).abs() < 1e-12);
        assert!(angular_distance(o, o, east).is_err());
    }

    #[test]
    fn sensitive_weight_cases() {
        // 0 -> 1 heads north; 0 -> 2 heads east; slot max is 8
        let mut b = NetworkBuilder::new();
        b.node(0, 0.0, 0.0).node(1, 0.01, 0.0).node(2, 0.0, 0.01).node(3, -0.01, 0.0);
        b.edge_constant(0, 0, 1, 4.0)
            .edge_constant(1, 0, 2, 8.0)
            .edge_constant(2, 0, 3, 8.0);
        let net = b.build().unwrap();
        let north = Some(NodeId(1));
        // gamma = 1: travel time only
        assert_eq!(net.vehicle_sensitive_weight(NodeId(0), north, EdgeId(1), 0.0, 1.0), 1.0);
        // gamma = 0 and the edge heads along the destination bearing
        assert_eq!(net.vehicle_sensitive_weight(NodeId(0), north, EdgeId(0), 0.0, 0.0), 0.0);
        // gamma = 0.5, opposite direction, longest edge
        let w = net.vehicle_sensitive_weight(NodeId(0), north, EdgeId(2), 0.0, 0.5);
        assert!((w - 1.0).abs() < 1e-12);
        // idle vehicle: no angular term
        assert_eq!(net.vehicle_sensitive_weight(NodeId(0), None, EdgeId(2), 0.0, 0.5), 0.5);
    }

    #[test]
    fn round_trips_through_text() {
        let net = triangle();
        let again = parse_network(&write_network(&net)).unwrap();
        assert_eq!(again.node_count(), 3);
        for (a, b) in net.edges().iter().zip(again.edges()) {
            assert_eq!(a.profile, b.profile);
            assert_eq!(a.from, b.from);
        }
    }

    #[test]
    fn weights_are_quantized() {
        let p = EdgeWeightProfile::constant(0, 1.0 / 3.0).unwrap();
        assert_eq!(p.in_slot(0) * 1024.0, (1024.0f64 / 3.0).round());
    }
}
