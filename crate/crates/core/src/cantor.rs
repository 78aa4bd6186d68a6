//! Finite-depth realization of the cut-out set and its uniform measure.
//!
//! Gap m of the sequence splits construction interval m (heap indexing) into
//! intervals 2m and 2m+1. Depth k keeps the 2^k generation-k intervals; the
//! uniform measure gives each of them mass 2^{-k}.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaps::GapSequence;
use crate::kahan::KahanSum;

/// Deepest buildable approximation (2^23 interval records ≈ 128 MiB).
pub const MAX_DEPTH: u32 = 22;

/// Node counts below this are built serially; parallel fan-out costs more
/// than it saves on small trees.
const PARALLEL_THRESHOLD: u64 = 1 << 12;

/// S(m): the length of construction interval m, as the sum of the gaps that
/// fall inside it: S(m) = Σ_{l≥0} (r_{2^l·m} − r_{2^l·(m+1)}).
///
/// Every level whose block [2^l·m, 2^l·(m+1)) fits in the index range is
/// summed exactly. At the level where the block first crosses the end of the
/// range, the remaining subtree mass is closed out one of two ways:
///
/// - sequences whose tail past the range is identically zero contribute
///   exactly `tail(2^l·m)` — from that level on, the subtree blocks tile all
///   remaining in-range indices;
/// - sequences that still carry mass past the range (slow power decay, the
///   ternary block family) get the geometric remainder `d·ρ/(1−ρ)` read off
///   the last two level masses, whose ratio ρ has settled to its limit
///   (exactly 2/3 for the ternary family, 2^{1−p} for power decay) long
///   before the 2^62-index cutoff.
///
/// Satisfies S(1) = r_1 and S(m) = a_m + S(2m) + S(2m+1).
pub fn interval_length(seq: &GapSequence, m: u64) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "heap index must be at least 1".into(),
        ));
    }
    let max_tail = seq.max_tail_index() as u128;
    let vanishes = seq.tail_beyond_range_vanishes();
    let mut sum = KahanSum::new();
    // Level masses at the previous two levels, most recent last.
    let mut prev = [f64::NAN, f64::NAN];
    for level in 0u32..124 {
        let lo = (m as u128) << level;
        if lo > max_tail {
            // This level (and every deeper one) starts past the index range.
            if !vanishes {
                let rho = prev[1] / prev[0];
                if rho > 0.0 && rho < 1.0 {
                    sum.add(prev[1] * rho / (1.0 - rho));
                }
            }
            break;
        }
        let lo = lo as u64;
        if ((m as u128) + 1) << level > max_tail {
            // The block starting at lo runs off the end of the index range.
            let rho = prev[1] / prev[0];
            if vanishes || !(rho > 0.0 && rho < 1.0) {
                // From here on the subtree blocks tile all remaining
                // in-range indices, so the rest of the tail is exact.
                sum.add(seq.tail(lo)?);
            } else {
                sum.add(prev[1] * rho / (1.0 - rho));
            }
            break;
        }
        let hi = (m + 1) << level;
        let d = seq.tail_diff(lo, hi)?;
        sum.add(d);
        if d == 0.0 && prev[1] == 0.0 {
            // The tail has underflowed; every deeper level is zero too.
            break;
        }
        prev = [prev[1], d];
    }
    Ok(sum.value())
}

/// The generation-k intervals of the cut-out construction, with the uniform
/// measure spread 2^{-k} per interval.
#[derive(Debug, Clone)]
pub struct CantorApproximation {
    seq: GapSequence,
    depth: u32,
    origin: f64,
    /// Left endpoints of the 2^k generation-k intervals, ascending.
    lefts: Vec<f64>,
    /// Lengths S(m) for m = 2^k .. 2^{k+1}-1, same order.
    lengths: Vec<f64>,
    root_length: f64,
}

impl CantorApproximation {
    /// Build the depth-k approximation inside [0, r_1].
    pub fn build(seq: &GapSequence, depth: u32) -> Result<Self> {
        Self::build_at(seq, depth, 0.0)
    }

    /// Build with the root interval starting at `origin`.
    pub fn build_at(seq: &GapSequence, depth: u32, origin: f64) -> Result<Self> {
        if depth > MAX_DEPTH {
            return Err(Error::DepthTooLarge {
                depth,
                max: MAX_DEPTH,
            });
        }
        let node_count = 1u64 << (depth + 1); // nodes 1 .. 2^{k+1}-1, slot 0 unused
        let lengths_by_node: Vec<f64> = if node_count >= PARALLEL_THRESHOLD {
            (0..node_count)
                .into_par_iter()
                .map(|m| {
                    if m == 0 {
                        0.0
                    } else {
                        interval_length(seq, m).unwrap_or(f64::NAN)
                    }
                })
                .collect()
        } else {
            (0..node_count)
                .map(|m| {
                    if m == 0 {
                        0.0
                    } else {
                        interval_length(seq, m).unwrap_or(f64::NAN)
                    }
                })
                .collect()
        };
        if let Some(bad) = lengths_by_node[1..].iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "interval length at heap index {} is not finite",
                bad + 1
            )));
        }

        let mut pos = vec![0.0f64; node_count as usize];
        pos[1] = origin;
        for m in 1..(1u64 << depth) as usize {
            pos[2 * m] = pos[m];
            pos[2 * m + 1] = pos[m] + lengths_by_node[2 * m] + seq.term_or_zero(m as u64);
        }

        let first_leaf = (1u64 << depth) as usize;
        let lefts = pos[first_leaf..].to_vec();
        let lengths = lengths_by_node[first_leaf..].to_vec();
        Ok(CantorApproximation {
            seq: seq.clone(),
            depth,
            origin,
            lefts,
            lengths,
            root_length: lengths_by_node[1],
        })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn sequence(&self) -> &GapSequence {
        &self.seq
    }

    /// Length of the root interval (= r_1 up to summation error).
    pub fn diameter(&self) -> f64 {
        self.root_length
    }

    pub fn num_intervals(&self) -> usize {
        self.lefts.len()
    }

    /// (left endpoint, length) of the j-th generation-k interval.
    pub fn interval(&self, j: usize) -> (f64, f64) {
        (self.lefts[j], self.lengths[j])
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn lefts(&self) -> &[f64] {
        &self.lefts
    }

    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.lefts.iter().copied().zip(self.lengths.iter().copied())
    }

    /// Right edge of the whole approximation.
    pub fn right_end(&self) -> f64 {
        let j = self.lefts.len() - 1;
        self.lefts[j] + self.lengths[j]
    }

    /// One of the 2^{k+1} interval endpoints, in (interval, side) order.
    pub fn endpoint(&self, index: u64) -> f64 {
        let j = (index / 2) as usize;
        if index % 2 == 0 {
            self.lefts[j]
        } else {
            self.lefts[j] + self.lengths[j]
        }
    }

    pub fn num_endpoints(&self) -> u64 {
        2 * self.lefts.len() as u64
    }

    /// μ_k([origin, x]): each interval carries mass 2^{-k}, spread uniformly
    /// inside it. Monotone; 0 at the origin and 1 at the right end.
    pub fn measure_cdf(&self, x: f64) -> f64 {
        let mass = 0.5f64.powi(self.depth as i32);
        // Intervals entirely to the left of x contribute full mass.
        let idx = self.lefts.partition_point(|&l| l <= x);
        if idx == 0 {
            return 0.0;
        }
        let j = idx - 1; // last interval with left endpoint ≤ x
        let full = j as f64 * mass;
        let (l, len) = (self.lefts[j], self.lengths[j]);
        let part = if x >= l + len {
            mass
        } else if len > 0.0 {
            mass * (x - l) / len
        } else {
            mass
        };
        full + part
    }

    /// μ_k(B(x0, r)) via the CDF difference.
    pub fn ball_mass(&self, x0: f64, r: f64) -> Result<f64> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ball radius must be positive and finite, got {r}"
            )));
        }
        if x0 < self.origin || x0 > self.origin + self.root_length {
            return Err(Error::InvalidParameter(format!(
                "ball center {x0} lies outside the root interval"
            )));
        }
        Ok(self.measure_cdf(x0 + r) - self.measure_cdf(x0 - r))
    }

    /// Smallest generation g ≤ depth such that some generation-g interval is
    /// contained in B(x0, r); None if even the leaves poke out of the ball.
    pub fn smallest_generation_contained(&self, x0: f64, r: f64) -> Option<u32> {
        let lo_bound = x0 - r;
        let hi_bound = x0 + r;
        for g in 0..=self.depth {
            let stride = 1usize << (self.depth - g);
            let count = 1usize << g;
            // first node whose left endpoint is at least the ball's left edge
            let mut t = {
                let (mut a, mut b) = (0usize, count);
                while a < b {
                    let mid = (a + b) / 2;
                    if self.lefts[mid * stride] < lo_bound {
                        a = mid + 1;
                    } else {
                        b = mid;
                    }
                }
                a
            };
            while t < count && self.lefts[t * stride] <= hi_bound {
                let leaf = (t + 1) * stride - 1;
                let right = self.lefts[leaf] + self.lengths[leaf];
                if right <= hi_bound {
                    return Some(g);
                }
                t += 1;
            }
        }
        None
    }

    /// Number of grid cells of size `delta` (anchored at the origin) that the
    /// generation-k intervals meet. Interval ends are pulled in by 1e-9·delta
    /// so cells touched only at a shared boundary point are not counted.
    pub fn box_count(&self, delta: f64) -> Result<u64> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "box size must be positive and finite, got {delta}"
            )));
        }
        if self.root_length / delta > 4.5e15 {
            return Err(Error::InvalidParameter(format!(
                "box size {delta} is too fine to index cells exactly"
            )));
        }
        let eps = delta * 1e-9;
        let mut count = 0u64;
        let mut last_cell = i64::MIN;
        for (l, len) in self.intervals() {
            let (a, b) = if len > 2.0 * eps {
                (l - self.origin + eps, l - self.origin + len - eps)
            } else {
                let mid = l - self.origin + len / 2.0;
                (mid, mid)
            };
            let c0 = ((a / delta).floor() as i64).max(last_cell + 1);
            let c1 = (b / delta).floor() as i64;
            if c1 >= c0 {
                count += (c1 - c0 + 1) as u64;
                last_cell = c1;
            }
        }
        Ok(count)
    }
}

/// Result of the seeded ball-mass audit: every checked ball satisfied
/// μ(B(x, r)) ≤ 5·2^{−k★}, where k★ is the coarsest generation with an
/// interval contained in the ball.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BallMassAudit {
    pub samples: u32,
    pub seed: u64,
    /// Samples whose ball trapped at least one interval (the bound applies).
    pub checked: u32,
    /// Largest observed mass / (5·2^{−k★}) among checked samples.
    pub max_ratio: f64,
    pub passed: bool,
}

/// Check the five-interval ball-mass bound on `samples` seeded draws.
///
/// Centers mix interval endpoints (three of four draws — points of the set
/// itself, where balls carry the most mass) with uniform points of the root
/// interval; radii are log-uniform between the smallest positive leaf length
/// and the diameter. Draws whose ball traps no interval are skipped: the
/// bound constrains balls that contain one.
pub fn ball_mass_audit(approx: &CantorApproximation, samples: u32, seed: u64) -> BallMassAudit {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let diam = approx.diameter();
    let r_lo = approx
        .lengths()
        .iter()
        .copied()
        .filter(|&l| l > 0.0)
        .fold(diam, f64::min)
        .max(diam * 1e-15);
    let mut checked = 0u32;
    let mut max_ratio = 0.0f64;
    for _ in 0..samples {
        let x0 = if rng.gen::<f64>() < 0.75 {
            approx.endpoint(rng.gen_range(0..approx.num_endpoints()))
        } else {
            approx.origin() + rng.gen::<f64>() * diam
        };
        let r = rng.gen_range(r_lo.ln()..=diam.ln()).exp();
        let Some(kstar) = approx.smallest_generation_contained(x0, r) else {
            continue;
        };
        checked += 1;
        let mass = approx
            .ball_mass(x0, r)
            .expect("audit centers lie inside the root interval");
        let ratio = mass / (5.0 * 0.5f64.powi(kstar as i32));
        if ratio > max_ratio {
            max_ratio = ratio;
        }
    }
    BallMassAudit {
        samples,
        seed,
        checked,
        max_ratio,
        passed: checked > 0 && max_ratio <= 1.0 + 1e-9,
    }
}
