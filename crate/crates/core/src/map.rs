//! The stretch-fold map `T = T_H ∘ T_V`, its smoothness partition, the time-1
//! flow, cone geometry and the exact lattice action.
//!
//! `T_V(x, y) = (x, y + a·x)` for `x ≥ 1/2` and `(x, y − a·x)` otherwise;
//! `T_H(x, y) = (x + a·y, y)` for `y ≥ 1/2` and `(x − a·y, y)` otherwise.
//! All thresholds use the half-open indicator `1_[a,1)`.

use crate::error::{DynamoError, Result};
use crate::shear::ShearProfile;

/// Shear strength: a positive even integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Alpha(u32);

impl Alpha {
    pub fn new(alpha: u32) -> Result<Self> {
        if alpha < 2 || alpha % 2 != 0 {
            return Err(DynamoError::InvalidAlpha(alpha));
        }
        Ok(Alpha(alpha))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }

    /// `alpha^2` as a float.
    pub fn squared(self) -> f64 {
        let a = self.as_f64();
        a * a
    }
}

impl std::fmt::Display for Alpha {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Reduce a real number into `[0, 1)`.
pub fn wrap_unit(v: f64) -> f64 {
    let r = v.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs.
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// A point of the torus with coordinates in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusPoint {
    pub x: f64,
    pub y: f64,
}

impl TorusPoint {
    pub fn new(x: f64, y: f64) -> Self {
        TorusPoint {
            x: wrap_unit(x),
            y: wrap_unit(y),
        }
    }

    /// Toroidal distance.
    pub fn distance(&self, other: &TorusPoint) -> f64 {
        let dx = (self.x - other.x).abs();
        let dy = (self.y - other.y).abs();
        dx.min(1.0 - dx).hypot(dy.min(1.0 - dy))
    }
}

/// A lattice node `(i/n, j/n)` with `n` even.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridPoint {
    pub i: usize,
    pub j: usize,
    pub n: usize,
}

impl GridPoint {
    pub fn new(i: usize, j: usize, n: usize) -> Result<Self> {
        check_grid(n)?;
        Ok(GridPoint {
            i: i % n,
            j: j % n,
            n,
        })
    }

    pub fn to_torus(self) -> TorusPoint {
        TorusPoint::new(self.i as f64 / self.n as f64, self.j as f64 / self.n as f64)
    }
}

pub(crate) fn check_grid(n: usize) -> Result<()> {
    if n == 0 || n % 2 != 0 {
        return Err(DynamoError::OddGrid(n));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Forward,
    Backward,
}

/// Region label: `Forward ℓ` is the smoothness region `M_ℓ`, `Backward ℓ` is its image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RegionId {
    pub side: Side,
    pub index: u8,
}

impl RegionId {
    pub fn forward(index: u8) -> Self {
        debug_assert!((1..=4).contains(&index));
        RegionId {
            side: Side::Forward,
            index,
        }
    }

    pub fn backward(index: u8) -> Self {
        debug_assert!((1..=4).contains(&index));
        RegionId {
            side: Side::Backward,
            index,
        }
    }
}

impl std::fmt::Display for RegionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self.side {
            Side::Forward => 'F',
            Side::Backward => 'B',
        };
        write!(f, "{}{}", s, self.index)
    }
}

/// One of the four integer branch matrices of the map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BranchMatrix {
    pub entries: [[i64; 2]; 2],
    pub region: RegionId,
}

impl BranchMatrix {
    /// Matrix of branch `index` (1..=4). The region recorded is the forward region.
    pub fn for_branch(index: u8, alpha: Alpha) -> Self {
        let a = alpha.get() as i64;
        let a2 = a * a;
        let entries = match index {
            1 => [[1 + a2, a], [a, 1]],
            2 => [[1 - a2, a], [-a, 1]],
            3 => [[1 - a2, -a], [a, 1]],
            4 => [[1 + a2, -a], [-a, 1]],
            _ => panic!("branch index must be in 1..=4, got {index}"),
        };
        BranchMatrix {
            entries,
            region: RegionId::forward(index),
        }
    }

    /// All four matrices in branch order.
    pub fn all(alpha: Alpha) -> [BranchMatrix; 4] {
        [1, 2, 3, 4].map(|i| Self::for_branch(i, alpha))
    }

    pub fn det(&self) -> i64 {
        let m = &self.entries;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// Inverse matrix (integer because the determinant is 1).
    pub fn inverse(&self) -> [[i64; 2]; 2] {
        let m = &self.entries;
        [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]]
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        mat_vec(&self.entries, v)
    }

    pub fn apply_inverse(&self, v: [f64; 2]) -> [f64; 2] {
        mat_vec(&self.inverse(), v)
    }
}

pub(crate) fn mat_vec(m: &[[i64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
    [
        m[0][0] as f64 * v[0] + m[0][1] as f64 * v[1],
        m[1][0] as f64 * v[0] + m[1][1] as f64 * v[1],
    ]
}

/// A point of the three-torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 {
            x: wrap_unit(x),
            y: wrap_unit(y),
            z: wrap_unit(z),
        }
    }

    pub fn planar(&self) -> TorusPoint {
        TorusPoint::new(self.x, self.y)
    }
}

/// Half-open indicator: 1 iff `x ∈ [a, 1)`.
pub fn indicator_geq(x: f64, a: f64) -> u8 {
    (x >= a && x < 1.0) as u8
}

fn upper(v: f64) -> bool {
    indicator_geq(wrap_unit(v), 0.5) == 1
}

/// Forward smoothness region containing `p`.
pub fn forward_region(p: TorusPoint, alpha: Alpha) -> RegionId {
    let a = alpha.as_f64();
    let idx = if upper(p.x) {
        if upper(p.y + a * p.x) {
            1
        } else {
            3
        }
    } else if upper(p.y - a * p.x) {
        2
    } else {
        4
    };
    RegionId::forward(idx)
}

/// Backward smoothness region (image of a forward region) containing `p`.
pub fn backward_region(p: TorusPoint, alpha: Alpha) -> RegionId {
    let a = alpha.as_f64();
    let idx = if upper(p.y) {
        if upper(p.x - a * p.y) {
            1
        } else {
            2
        }
    } else if upper(p.x + a * p.y) {
        3
    } else {
        4
    };
    RegionId::backward(idx)
}

/// Apply the map as a composition of the two shears.
pub fn apply_map(p: TorusPoint, alpha: Alpha) -> TorusPoint {
    let a = alpha.as_f64();
    let y1 = if upper(p.x) {
        p.y + a * p.x
    } else {
        p.y - a * p.x
    };
    let y1 = wrap_unit(y1);
    let x1 = if upper(y1) {
        p.x + a * y1
    } else {
        p.x - a * y1
    };
    TorusPoint::new(x1, y1)
}

/// Apply the inverse map: undo the horizontal shear, then the vertical one.
pub fn apply_inverse(p: TorusPoint, alpha: Alpha) -> TorusPoint {
    let a = alpha.as_f64();
    let x0 = if upper(p.y) {
        p.x - a * p.y
    } else {
        p.x + a * p.y
    };
    let x0 = wrap_unit(x0);
    let y0 = if upper(x0) {
        p.y - a * x0
    } else {
        p.y + a * x0
    };
    TorusPoint::new(x0, y0)
}

/// Exact piecewise flow of the pulsed velocity field at time `t ∈ [0, 1]`.
///
/// Phase 1 (`t < 1/4`) shears `y` with speed `4a|x − 1/2|`, phase 2
/// (`t < 1/2`) shears `x` with speed `4a|y − 1/2|`, phase 3 moves `z` with
/// speed `−2 g(x, y)`.
pub fn flow_map(t: f64, p: Point3, alpha: Alpha, g: &ShearProfile) -> Result<Point3> {
    if !(0.0..=1.0).contains(&t) {
        return Err(DynamoError::TimeOutOfRange(t));
    }
    let a = alpha.as_f64();
    let t1 = t.min(0.25);
    let y = wrap_unit(p.y + 4.0 * a * (p.x - 0.5).abs() * t1);
    let t2 = (t - 0.25).clamp(0.0, 0.25);
    let x = wrap_unit(p.x + 4.0 * a * (y - 0.5).abs() * t2);
    let t3 = (t - 0.5).max(0.0);
    let z = if t3 > 0.0 {
        p.z - 2.0 * g.eval(TorusPoint::new(x, y)) * t3
    } else {
        p.z
    };
    Ok(Point3::new(x, y, z))
}

/// `|v1| ≤ (2/a)|v2|`.
pub fn in_stable_cone(v: [f64; 2], alpha: Alpha) -> Result<bool> {
    if v[0] == 0.0 && v[1] == 0.0 {
        return Err(DynamoError::ZeroVector);
    }
    Ok(v[0].abs() <= 2.0 / alpha.as_f64() * v[1].abs())
}

/// `|v2| ≤ (2/a)|v1|`.
pub fn in_unstable_cone(v: [f64; 2], alpha: Alpha) -> Result<bool> {
    in_stable_cone([v[1], v[0]], alpha)
}

/// Exact inverse of the map on the lattice of size `n`.
#[derive(Debug, Clone)]
pub struct PullbackTable {
    n: usize,
    alpha: Alpha,
    /// Flat source index `i*n + j` of `T^{-1}(p)` for each target `p`.
    source: Vec<u32>,
    /// Backward region index (1..=4) of each target.
    branch: Vec<u8>,
}

impl PullbackTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    pub fn sources(&self) -> &[u32] {
        &self.source
    }

    pub fn branches(&self) -> &[u8] {
        &self.branch
    }

    /// Source point and backward region of a target point.
    pub fn lookup(&self, p: GridPoint) -> (GridPoint, RegionId) {
        let k = p.i * self.n + p.j;
        let s = self.source[k] as usize;
        (
            GridPoint {
                i: s / self.n,
                j: s % self.n,
                n: self.n,
            },
            RegionId::backward(self.branch[k]),
        )
    }

    /// Whether the source map is a permutation of the lattice.
    pub fn is_bijection(&self) -> bool {
        let mut seen = vec![false; self.source.len()];
        for &s in &self.source {
            let s = s as usize;
            if seen[s] {
                return false;
            }
            seen[s] = true;
        }
        true
    }

    /// Table of the composition: target `p` pulls from `src(src(p))`.
    pub fn compose(&self, other: &PullbackTable) -> Vec<u32> {
        self.source
            .iter()
            .map(|&s| other.source[s as usize])
            .collect()
    }
}

/// Build the lattice pullback table with integer arithmetic mod `n`.
pub fn grid_pullback_table(n: usize, alpha: Alpha) -> Result<PullbackTable> {
    check_grid(n)?;
    if n > u32::MAX as usize / n {
        return Err(DynamoError::InvalidParameter(format!("grid {n} too large")));
    }
    let nn = n as i64;
    let a = alpha.get() as i64 % nn;
    let half = nn / 2;
    let mut source = Vec::with_capacity(n * n);
    let mut branch = Vec::with_capacity(n * n);
    for i in 0..nn {
        for j in 0..nn {
            let (i0, l) = if j >= half {
                let i0 = (i - a * j).rem_euclid(nn);
                (i0, if i0 >= half { 1 } else { 2 })
            } else {
                let i0 = (i + a * j).rem_euclid(nn);
                (i0, if i0 >= half { 3 } else { 4 })
            };
            let j0 = if i0 >= half {
                (j - a * i0).rem_euclid(nn)
            } else {
                (j + a * i0).rem_euclid(nn)
            };
            source.push((i0 * nn + j0) as u32);
            branch.push(l);
        }
    }
    Ok(PullbackTable {
        n,
        alpha,
        source,
        branch,
    })
}

/// Constant Jacobian `1/|A_ℓ^{-1} dir|` of the map restricted to a stable leaf
/// whose image lies in backward region `ℓ`.
pub fn leaf_jacobian(dir: [f64; 2], region: RegionId, alpha: Alpha) -> Result<f64> {
    if region.side != Side::Backward {
        return Err(DynamoError::ExpectedBackwardRegion);
    }
    let norm = dir[0].hypot(dir[1]);
    if norm == 0.0 {
        return Err(DynamoError::ZeroVector);
    }
    // Allow rounding slack on the cone boundary.
    if dir[0].abs() > 2.0 / alpha.as_f64() * dir[1].abs() * (1.0 + 1e-12) {
        return Err(DynamoError::NotInStableCone(dir[0], dir[1]));
    }
    let u = [dir[0] / norm, dir[1] / norm];
    let w = BranchMatrix::for_branch(region.index, alpha).apply_inverse(u);
    Ok(1.0 / w[0].hypot(w[1]))
}
