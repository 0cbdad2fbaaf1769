//! Constant-sign clusters, their boundary radii and wrapping.
//!
//! Labeling is a weighted union-find over equal-sign bonds. Each node stores
//! its displacement to its parent in unwrapped lattice coordinates, so when a
//! torus bond closes a cycle whose net displacement is nonzero the cluster is
//! known to wrap around that axis, without a second pass.

use serde::Serialize;

use crate::lattice::{Boundary, Dir, LatticeGeometry, SpinConfig};
use crate::lattice::Site;

struct OffsetUnionFind {
    parent: Vec<u32>,
    /// Unwrapped position of the node minus that of its parent.
    offset: Vec<(i32, i32)>,
    size: Vec<u32>,
    wraps: Vec<(bool, bool)>,
}

impl OffsetUnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            offset: vec![(0, 0); n],
            size: vec![1; n],
            wraps: vec![(false, false); n],
        }
    }

    /// Root of `i` and the position of `i` relative to it.
    fn find(&mut self, i: usize) -> (usize, (i32, i32)) {
        let mut path = Vec::new();
        let mut cur = i;
        while self.parent[cur] as usize != cur {
            path.push(cur);
            cur = self.parent[cur] as usize;
        }
        let root = cur;
        // Compress from the top of the path down, accumulating offsets.
        let mut acc = (0, 0);
        for &node in path.iter().rev() {
            let o = self.offset[node];
            acc = (acc.0 + o.0, acc.1 + o.1);
            self.offset[node] = acc;
            self.parent[node] = root as u32;
        }
        (root, if i == root { (0, 0) } else { self.offset[i] })
    }

    /// Join `a` and `b`, where `b` sits at `a + step` in unwrapped coordinates.
    fn union(&mut self, a: usize, b: usize, step: (i32, i32)) {
        let (ra, oa) = self.find(a);
        let (rb, ob) = self.find(b);
        // position of rb relative to ra
        let rel = (oa.0 + step.0 - ob.0, oa.1 + step.1 - ob.1);
        if ra == rb {
            let w = &mut self.wraps[ra];
            w.0 |= rel.0 != 0;
            w.1 |= rel.1 != 0;
            return;
        }
        let (big, small, small_rel) = if self.size[ra] >= self.size[rb] {
            (ra, rb, rel)
        } else {
            (rb, ra, (-rel.0, -rel.1))
        };
        self.parent[small] = big as u32;
        self.offset[small] = small_rel;
        self.size[big] += self.size[small];
        let ws = self.wraps[small];
        let wb = &mut self.wraps[big];
        wb.0 |= ws.0;
        wb.1 |= ws.1;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cluster {
    /// Smallest site index in the cluster; doubles as its label.
    pub representative: usize,
    pub size: usize,
    pub sign: i8,
    /// Sites of the cluster with at least one opposite-sign neighbor.
    pub inner_boundary: Vec<usize>,
    /// Torus only: the cluster connects to itself around the x / y axis.
    pub wraps_x: bool,
    pub wraps_y: bool,
    /// Free boundaries only: the cluster touches both opposite edges.
    pub spans_x: bool,
    pub spans_y: bool,
    /// Unwrapped bounding-box extent in sites (the axis length if wrapping).
    pub extent_x: usize,
    pub extent_y: usize,
}

impl Cluster {
    pub fn wraps(&self) -> bool {
        self.wraps_x || self.wraps_y
    }

    pub fn diameter(&self) -> usize {
        self.extent_x.max(self.extent_y)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterMap {
    geometry: LatticeGeometry,
    cluster_of: Vec<u32>,
    clusters: Vec<Cluster>,
}

/// Label the constant-sign clusters of `config`.
pub fn label_clusters(config: &SpinConfig) -> ClusterMap {
    let g = *config.geometry();
    let n = g.n_sites();
    let mut uf = OffsetUnionFind::new(n);
    for i in 0..n {
        for (dir, step) in [(Dir::E, (1, 0)), (Dir::N, (0, 1))] {
            if let Some(j) = g.step(i, dir) {
                if config.is_plus(i) == config.is_plus(j) {
                    uf.union(i, j, step);
                }
            }
        }
    }

    let mut cluster_of = vec![u32::MAX; n];
    let mut root_to_cluster = vec![u32::MAX; n];
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut bounds: Vec<(i32, i32, i32, i32)> = Vec::new();
    #[allow(clippy::needless_range_loop)] // `i` is also the site index
    for i in 0..n {
        let (root, (ox, oy)) = uf.find(i);
        let id = if root_to_cluster[root] == u32::MAX {
            let id = clusters.len() as u32;
            root_to_cluster[root] = id;
            let (wx, wy) = uf.wraps[root];
            clusters.push(Cluster {
                representative: i,
                size: 0,
                sign: config.spin(i),
                inner_boundary: Vec::new(),
                wraps_x: wx,
                wraps_y: wy,
                spans_x: false,
                spans_y: false,
                extent_x: 0,
                extent_y: 0,
            });
            bounds.push((ox, ox, oy, oy));
            id
        } else {
            root_to_cluster[root]
        };
        cluster_of[i] = id;
        let c = &mut clusters[id as usize];
        c.size += 1;
        if g.neighbor_indices(i).any(|j| config.is_plus(j) != config.is_plus(i)) {
            c.inner_boundary.push(i);
        }
        let b = &mut bounds[id as usize];
        b.0 = b.0.min(ox);
        b.1 = b.1.max(ox);
        b.2 = b.2.min(oy);
        b.3 = b.3.max(oy);
    }

    let mut touches = vec![[false; 4]; clusters.len()];
    if g.boundary() == Boundary::Free {
        let (w, h) = (g.width(), g.height());
        for y in 0..h {
            touches[cluster_of[y * w] as usize][0] = true;
            touches[cluster_of[y * w + w - 1] as usize][1] = true;
        }
        for x in 0..w {
            touches[cluster_of[x] as usize][2] = true;
            touches[cluster_of[(h - 1) * w + x] as usize][3] = true;
        }
    }
    for (k, c) in clusters.iter_mut().enumerate() {
        let b = bounds[k];
        c.extent_x = if c.wraps_x {
            g.width()
        } else {
            (b.1 - b.0 + 1) as usize
        };
        c.extent_y = if c.wraps_y {
            g.height()
        } else {
            (b.3 - b.2 + 1) as usize
        };
        c.spans_x = touches[k][0] && touches[k][1];
        c.spans_y = touches[k][2] && touches[k][3];
    }

    ClusterMap {
        geometry: g,
        cluster_of,
        clusters,
    }
}

impl ClusterMap {
    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    /// Clusters in order of their representative site.
    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    /// Canonical label of a site: the smallest site index in its cluster.
    pub fn label(&self, index: usize) -> usize {
        self.cluster(index).representative
    }

    pub fn cluster(&self, index: usize) -> &Cluster {
        &self.clusters[self.cluster_of[index] as usize]
    }

    pub fn cluster_at(&self, site: Site) -> &Cluster {
        self.cluster(self.geometry.index(site))
    }

    pub fn max_cluster_size(&self) -> usize {
        self.clusters.iter().map(|c| c.size).max().unwrap_or(0)
    }

    pub fn max_diameter(&self) -> usize {
        self.clusters.iter().map(Cluster::diameter).max().unwrap_or(0)
    }

    fn boundary_distances(&self, site: Site) -> impl Iterator<Item = f64> + '_ {
        let c = self.cluster_at(site);
        c.inner_boundary
            .iter()
            .map(move |&y| self.geometry.distance(site, self.geometry.site(y)))
    }

    /// Distance from `site` to the closest boundary site of its own cluster;
    /// `None` if that cluster has no boundary (constant configuration).
    pub fn r_star_min(&self, site: Site) -> Option<f64> {
        self.boundary_distances(site).min_by(f64::total_cmp)
    }

    /// Distance from `site` to the farthest boundary site of its own cluster.
    pub fn r_star_max(&self, site: Site) -> Option<f64> {
        self.boundary_distances(site).max_by(f64::total_cmp)
    }

    /// Percolation proxy. On the torus this reports wrapping clusters; under
    /// free boundaries it falls back to edge-to-edge crossing and says so.
    pub fn wrapping_report(&self) -> WrappingReport {
        let torus = self.geometry.is_torus();
        let hit = |c: &Cluster| {
            if torus {
                c.wraps()
            } else {
                c.spans_x || c.spans_y
            }
        };
        let plus = self.clusters.iter().filter(|c| c.sign > 0 && hit(c)).count();
        let minus = self.clusters.iter().filter(|c| c.sign < 0 && hit(c)).count();
        WrappingReport {
            mode: if torus {
                PercolationMode::Wrapping
            } else {
                PercolationMode::Crossing
            },
            any: plus + minus > 0,
            plus,
            minus,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PercolationMode {
    Wrapping,
    Crossing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct WrappingReport {
    pub mode: PercolationMode,
    pub any: bool,
    /// Number of percolating clusters of each sign.
    pub plus: usize,
    pub minus: usize,
}
