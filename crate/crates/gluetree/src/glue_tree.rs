//! Exact simulator of the growing tree T_n.
//!
//! Segment n is glued at a point chosen by normalized length measure on
//! T_{n-1}: a Fenwick index over segment lengths picks the host segment in
//! O(log n) and the gluing offset is uniform on it. Segments live in a flat
//! append-only array with their gluing depth cached at insertion, so depths
//! of marked points never need a tree walk on the hot path.
//!
//! RNG discipline: `grow` and `sample_uniform_point` each consume exactly two
//! uniforms from the caller's stream (selection target, then offset
//! fraction), which keeps replays bit-stable for a fixed seed.

use crate::fenwick::WeightIndex;
use crate::sequences::{LengthSequence, SequenceError};
use rand::Rng;
use std::io;
use std::io::Write;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TreeError {
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error("projection index {k} outside 1..={n}")]
    BadProjectionIndex { k: usize, n: usize },
    #[error("mark_many needs at least one point")]
    NoPoints,
    #[error("parent chain does not terminate; tree storage is corrupt")]
    CorruptParentChain,
    #[error("point references segment {segment} of a tree with {n} segments")]
    BadPoint { segment: usize, n: usize },
    #[error("attachment {index}: parent {parent} with offset {offset} is invalid")]
    BadAttachment {
        index: usize,
        parent: usize,
        offset: f64,
    },
}

/// One glued segment. `parent` is 0 for the initial segment.
#[derive(Debug, Clone, Copy)]
pub struct Segment {
    pub parent: u32,
    /// Arclength position on the parent where this segment is glued.
    pub attach_offset: f64,
    /// Distance from the root to the gluing point.
    pub base_depth: f64,
    pub length: f64,
}

/// A point of T_n: segment id, offset from the segment's gluing end, and its
/// (cached) distance to the root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkedPoint {
    pub segment: usize,
    pub offset: f64,
    pub depth: f64,
}

/// Where the root paths of two marked points separate.
#[derive(Debug, Clone, Copy)]
pub struct PairBranch {
    pub first: usize,
    pub second: usize,
    /// Deepest segment shared by the two root paths.
    pub segment: usize,
    /// Distance from the root to the separation point.
    pub depth: f64,
}

/// Result of marking ℓ independent uniform points.
#[derive(Debug, Clone)]
pub struct MarkedSample {
    pub points: Vec<MarkedPoint>,
    /// One entry per unordered pair, lexicographic by (first, second).
    pub pair_branches: Vec<PairBranch>,
    /// Splitting index S_n(2); populated only for ℓ = 2.
    pub splitting_index: Option<usize>,
    /// Depth of the deepest pairwise branch point; None for ℓ = 1.
    pub max_branch_depth: Option<f64>,
}

/// Discrete genealogy of the gluing process: vertex i's parent is the
/// segment that b_i was glued onto, and the edge carries the normalized
/// offset U_i = attach_offset_i / a_parent ∈ [0, 1).
#[derive(Debug, Clone)]
pub struct Genealogy {
    parent: Vec<u32>,
    edge_u: Vec<f64>,
}

impl Genealogy {
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Parent vertex of v (1-based); None for the root vertex 1.
    pub fn parent(&self, v: usize) -> Option<usize> {
        let p = self.parent[v - 1];
        (p != 0).then_some(p as usize)
    }

    pub fn edge_u(&self, v: usize) -> f64 {
        self.edge_u[v - 1]
    }

    /// Sum of the U_i along the path from v to the root.
    pub fn weighted_path_length(&self, v: usize) -> f64 {
        let mut acc = 0.0;
        let mut cur = v;
        while let Some(p) = self.parent(cur) {
            acc += self.edge_u[cur - 1];
            cur = p;
        }
        acc
    }

    /// Number of edges from v to the root.
    pub fn graph_depth(&self, v: usize) -> usize {
        let mut d = 0;
        let mut cur = v;
        while let Some(p) = self.parent(cur) {
            d += 1;
            cur = p;
        }
        d
    }

    pub fn max_graph_depth(&self) -> usize {
        (1..=self.len())
            .map(|v| self.graph_depth(v))
            .max()
            .unwrap_or(0)
    }

    /// Edge list as `vertex,parent,edge_length_U` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "vertex,parent,edge_length_U")?;
        for v in 1..=self.len() {
            writeln!(w, "{},{},{}", v, self.parent[v - 1], self.edge_u[v - 1])?;
        }
        Ok(())
    }
}

/// The simulated tree T_n.
pub struct GluedTree {
    seq: Arc<LengthSequence>,
    segments: Vec<Segment>,
    weight_index: WeightIndex,
    total_length: f64,
    height: f64,
}

impl GluedTree {
    /// T_1: the single segment b_1, rooted at its offset-0 extremity.
    pub fn new(seq: Arc<LengthSequence>) -> Result<Self, TreeError> {
        let a1 = seq.a_value(1)?;
        let mut weight_index = WeightIndex::new();
        weight_index.push(a1);
        Ok(Self {
            seq,
            segments: vec![Segment {
                parent: 0,
                attach_offset: 0.0,
                base_depth: 0.0,
                length: a1,
            }],
            weight_index,
            total_length: a1,
            height: a1,
        })
    }

    /// Grows a fresh tree to n segments.
    pub fn grown<R: Rng>(
        seq: Arc<LengthSequence>,
        n: usize,
        rng: &mut R,
    ) -> Result<Self, TreeError> {
        let mut tree = Self::new(seq)?;
        tree.grow_to(n, rng)?;
        Ok(tree)
    }

    /// Builds a tree from hand-placed attachments `(parent, offset)` for
    /// segments 2, 3, ... — deterministic fixtures for tests and debugging.
    pub fn from_attachments(
        seq: Arc<LengthSequence>,
        attachments: &[(usize, f64)],
    ) -> Result<Self, TreeError> {
        let mut tree = Self::new(seq)?;
        for (m, &(parent, offset)) in attachments.iter().enumerate() {
            let index = m + 2;
            let ok = parent >= 1
                && parent < index
                && offset >= 0.0
                && offset < tree.segments[parent - 1].length;
            if !ok {
                return Err(TreeError::BadAttachment {
                    index,
                    parent,
                    offset,
                });
            }
            tree.attach(index, parent, offset)?;
        }
        Ok(tree)
    }

    fn attach(&mut self, index: usize, parent: usize, offset: f64) -> Result<(), TreeError> {
        let length = self.seq.a_value(index)?;
        let base_depth = self.segments[parent - 1].base_depth + offset;
        self.segments.push(Segment {
            parent: parent as u32,
            attach_offset: offset,
            base_depth,
            length,
        });
        self.weight_index.push(length);
        self.total_length += length;
        self.height = self.height.max(base_depth + length);
        Ok(())
    }

    /// One growth step: glues segment n+1 at a uniform point of T_n.
    ///
    /// The host segment i is selected with probability a_i / A_n via the
    /// weight index (lowest index whose cumulative length exceeds
    /// u1 × total), then the offset is u2 × a_i.
    pub fn grow<R: Rng>(&mut self, rng: &mut R) -> Result<(), TreeError> {
        let n = self.segments.len();
        let target = rng.gen::<f64>() * self.weight_index.total();
        let host = self.weight_index.search(target);
        let host_len = self.segments[host - 1].length;
        let mut offset = rng.gen::<f64>() * host_len;
        if offset >= host_len {
            // keep the documented half-open range after float rounding
            offset = f64::from_bits(host_len.to_bits() - 1);
        }
        self.attach(n + 1, host, offset)
    }

    pub fn grow_to<R: Rng>(&mut self, n: usize, rng: &mut R) -> Result<(), TreeError> {
        while self.segments.len() < n {
            self.grow(rng)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn seq(&self) -> &LengthSequence {
        &self.seq
    }

    pub fn segment(&self, i: usize) -> &Segment {
        &self.segments[i - 1]
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    /// H_n = max over segments of (gluing depth + length); leaves realize
    /// the maximum, so this is the exact height.
    pub fn height(&self) -> f64 {
        self.height
    }

    /// Marks a uniform point of T_n (by normalized length measure).
    pub fn sample_uniform_point<R: Rng>(&self, rng: &mut R) -> MarkedPoint {
        let target = rng.gen::<f64>() * self.weight_index.total();
        let segment = self.weight_index.search(target);
        let seg = &self.segments[segment - 1];
        let offset = rng.gen::<f64>() * seg.length;
        MarkedPoint {
            segment,
            offset,
            depth: seg.base_depth + offset,
        }
    }

    fn check_point(&self, point: &MarkedPoint) -> Result<(), TreeError> {
        if point.segment == 0 || point.segment > self.segments.len() {
            return Err(TreeError::BadPoint {
                segment: point.segment,
                n: self.segments.len(),
            });
        }
        Ok(())
    }

    /// Recomputes the depth of a point by walking its parent chain; an
    /// independent check against the cached base depths.
    pub fn depth_naive(&self, point: &MarkedPoint) -> Result<f64, TreeError> {
        self.check_point(point)?;
        let mut acc = point.offset;
        let mut cur = point.segment;
        let mut steps = 0usize;
        while cur != 1 {
            let seg = &self.segments[cur - 1];
            acc += seg.attach_offset;
            cur = seg.parent as usize;
            steps += 1;
            if steps > self.segments.len() || cur == 0 {
                return Err(TreeError::CorruptParentChain);
            }
        }
        Ok(acc)
    }

    /// Segment indices from the point's segment down to 1, strictly
    /// decreasing.
    fn root_chain(&self, segment: usize) -> Result<Vec<usize>, TreeError> {
        let mut chain = Vec::new();
        let mut cur = segment;
        loop {
            chain.push(cur);
            if cur == 1 {
                return Ok(chain);
            }
            cur = self.segments[cur - 1].parent as usize;
            if cur == 0 || chain.len() > self.segments.len() {
                return Err(TreeError::CorruptParentChain);
            }
        }
    }

    /// Depths D_n(k) of the projections of `point` onto T_k, for each k in
    /// `ks`. Non-decreasing in k, with D_n(n) equal to the point's depth.
    pub fn projection_depths(
        &self,
        point: &MarkedPoint,
        ks: &[usize],
    ) -> Result<Vec<f64>, TreeError> {
        self.check_point(point)?;
        let n = self.segments.len();
        let chain = self.root_chain(point.segment)?;
        ks.iter()
            .map(|&k| {
                if k == 0 || k > n {
                    return Err(TreeError::BadProjectionIndex { k, n });
                }
                // first chain element inside T_k (chain is decreasing)
                let m = chain.partition_point(|&c| c > k);
                if m == 0 {
                    Ok(point.depth)
                } else {
                    Ok(self.segments[chain[m - 1] - 1].base_depth)
                }
            })
            .collect()
    }

    fn branch_of_pair(
        &self,
        first: usize,
        a: &MarkedPoint,
        chain_a: &[usize],
        second: usize,
        b: &MarkedPoint,
        chain_b: &[usize],
    ) -> PairBranch {
        // deepest common segment: both chains are strictly decreasing and
        // share the tail ending at 1, so a two-pointer walk finds it
        let (mut i, mut j) = (0usize, 0usize);
        while chain_a[i] != chain_b[j] {
            if chain_a[i] > chain_b[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        let s = chain_a[i];
        let entry_a = if i == 0 {
            a.offset
        } else {
            self.segments[chain_a[i - 1] - 1].attach_offset
        };
        let entry_b = if j == 0 {
            b.offset
        } else {
            self.segments[chain_b[j - 1] - 1].attach_offset
        };
        PairBranch {
            first,
            second,
            segment: s,
            depth: self.segments[s - 1].base_depth + entry_a.min(entry_b),
        }
    }

    /// Marks ℓ independent uniform points and derives the pairwise branch
    /// points, the ℓ = 2 splitting index and the deepest branch depth.
    ///
    /// The splitting index of a pair is the deepest segment shared by the
    /// two root paths; geometric ties between gluing offsets (probability
    /// zero) resolve toward that lower segment index.
    pub fn mark_many<R: Rng>(&self, ell: usize, rng: &mut R) -> Result<MarkedSample, TreeError> {
        if ell == 0 {
            return Err(TreeError::NoPoints);
        }
        let points: Vec<MarkedPoint> = (0..ell).map(|_| self.sample_uniform_point(rng)).collect();
        let chains: Vec<Vec<usize>> = points
            .iter()
            .map(|p| self.root_chain(p.segment))
            .collect::<Result<_, _>>()?;
        let mut pair_branches = Vec::with_capacity(ell * (ell - 1) / 2);
        for i in 0..ell {
            for j in (i + 1)..ell {
                pair_branches.push(self.branch_of_pair(
                    i + 1,
                    &points[i],
                    &chains[i],
                    j + 1,
                    &points[j],
                    &chains[j],
                ));
            }
        }
        let splitting_index = (ell == 2).then(|| pair_branches[0].segment);
        let max_branch_depth = pair_branches
            .iter()
            .map(|b| b.depth)
            .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.max(d))));
        Ok(MarkedSample {
            points,
            pair_branches,
            splitting_index,
            max_branch_depth,
        })
    }

    /// Discrete genealogy R_n with normalized edge lengths U_i.
    pub fn genealogy(&self) -> Genealogy {
        let parent: Vec<u32> = self.segments.iter().map(|s| s.parent).collect();
        let edge_u: Vec<f64> = self
            .segments
            .iter()
            .map(|s| {
                if s.parent == 0 {
                    0.0
                } else {
                    s.attach_offset / self.segments[s.parent as usize - 1].length
                }
            })
            .collect();
        Genealogy { parent, edge_u }
    }

    /// Debug/golden dump: `index,parent,attach_offset,base_depth,length`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "index,parent,attach_offset,base_depth,length")?;
        for (i, s) in self.segments.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{}",
                i + 1,
                s.parent,
                s.attach_offset,
                s.base_depth,
                s.length
            )?;
        }
        Ok(())
    }
}


#[cfg(test)]
impl GluedTree {
    fn weight_index_total(&self) -> f64 {
        self.weight_index.total()
    }
}
