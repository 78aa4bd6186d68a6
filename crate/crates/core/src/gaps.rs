//! Non-increasing summable gap sequences and their tails.
//!
//! Every family exposes terms and tails in both linear and log form. The log
//! form is the primitive: tails of fast-decaying families (geometric, the
//! spike–plateau pair) underflow `f64` long before the probe ranges used by
//! the analysis layers, while `ln r_n` stays finite everywhere in range.

use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kahan::{log_add_exp, KahanSum};
use crate::trend::index_grid;

/// Relative tolerance for the telescoping identity `r_n = a_n + r_{n+1}`.
pub const TAIL_CONSISTENCY_TOL: f64 = 1e-12;

const LN2: f64 = std::f64::consts::LN_2;
const LN3: f64 = 1.0986122886681098;

/// `B_{2i}/(2i)!` for i = 1..=8, the Euler–Maclaurin correction weights.
const EM_COEFFS: [f64; 8] = [
    8.333333333333333e-2,
    -1.388888888888889e-3,
    3.306878306878307e-5,
    -8.267195767195768e-7,
    2.08767569878681e-8,
    -5.284190138687493e-10,
    1.3382536530684679e-11,
    -3.389680296322583e-13,
];
/// Magnitude of `B_18/18!`, the first omitted weight; bounds the truncation error.
const EM_NEXT_COEFF_MAG: f64 = 8.586062056277845e-15;

/// Σ_{j≥M} j^{-p} = M^{1-p} · G(1/M). Returns `(G, err)` where `err` bounds the
/// truncation error of G by the first omitted Euler–Maclaurin term.
fn em_factor(p: f64, u: f64) -> (f64, f64) {
    let mut g = 1.0 / (p - 1.0) + u / 2.0;
    let mut poch = p; // (p)_{2i-1}, starting at (p)_1
    let u2 = u * u;
    let mut upow = u2; // u^{2i}
    for (i, c) in EM_COEFFS.iter().enumerate() {
        g += c * poch * upow;
        let m = 2.0 * (i + 1) as f64;
        poch *= (p + m - 1.0) * (p + m);
        upow *= u2;
    }
    (g, EM_NEXT_COEFF_MAG * poch * upow)
}

/// Smallest anchor M = 2^j · max(32, ⌈4p⌉) whose series truncation error is
/// certified below 1e-15 relative; the bound shrinks monotonically past it.
fn em_anchor(p: f64) -> u64 {
    let mut anchor = 32u64.max((4.0 * p).ceil() as u64);
    loop {
        let (g, err) = em_factor(p, 1.0 / anchor as f64);
        if err <= 1e-15 * g {
            return anchor;
        }
        anchor = anchor.saturating_mul(2);
    }
}

/// ln Σ_{j≥n} j^{-p} for p > 1, accurate to ~1e-15 relative.
///
/// Past the certified anchor the asymptotic series applies directly; below
/// it the head is summed backward with compensation and the series picks up
/// at the anchor.
fn power_log_tail_unscaled(p: f64, n: u64) -> f64 {
    let anchor = em_anchor(p);
    if n >= anchor {
        let (g, _) = em_factor(p, 1.0 / n as f64);
        (1.0 - p) * (n as f64).ln() + g.ln()
    } else {
        let mut head = KahanSum::new();
        for j in (n..anchor).rev() {
            head.add((j as f64).powf(-p));
        }
        let (g, _) = em_factor(p, 1.0 / anchor as f64);
        let series = (anchor as f64).powf(1.0 - p) * g;
        (head.value() + series).ln()
    }
}

/// `(G(u_lo), G(u_hi) − G(u_lo))` with the difference assembled term by term,
/// so it keeps relative precision when u_hi − u_lo is tiny.
fn em_factor_diff(p: f64, u_lo: f64, u_hi: f64) -> (f64, f64) {
    let du = u_hi - u_lo;
    let mut pow_lo = [1.0f64; 17];
    let mut pow_hi = [1.0f64; 17];
    for t in 1..17 {
        pow_lo[t] = pow_lo[t - 1] * u_lo;
        pow_hi[t] = pow_hi[t - 1] * u_hi;
    }
    let mut g_lo = 1.0 / (p - 1.0) + u_lo / 2.0;
    let mut dg = du / 2.0;
    let mut poch = p;
    for (i, c) in EM_COEFFS.iter().enumerate() {
        let k = 2 * (i + 1); // exponent of u in this term
        g_lo += c * poch * pow_lo[k];
        // u_hi^k − u_lo^k = du · Σ_t u_hi^t · u_lo^{k−1−t}
        let mut sym = 0.0;
        for t in 0..k {
            sym += pow_hi[t] * pow_lo[k - 1 - t];
        }
        dg += c * poch * du * sym;
        let m = k as f64;
        poch *= (p + m - 1.0) * (p + m);
    }
    (g_lo, dg)
}

/// Σ_{j ∈ [lo, hi)} scale·j^{-p} without cancellation: direct compensated
/// sums below the series anchor, log-space increments above it.
fn power_tail_diff(p: f64, scale: f64, lo: u64, hi: u64) -> f64 {
    let direct = |a: u64, b: u64| -> f64 {
        let mut s = KahanSum::new();
        for j in (a..b).rev() {
            s.add((j as f64).powf(-p));
        }
        scale * s.value()
    };
    if hi - lo <= 64 {
        return direct(lo, hi);
    }
    let anchor = em_anchor(p);
    if hi <= anchor {
        return direct(lo, hi);
    }
    if lo < anchor {
        return direct(lo, anchor) + power_tail_diff(p, scale, anchor, hi);
    }
    let lof = lo as f64;
    let (g_lo, dg) = em_factor_diff(p, 1.0 / lof, 1.0 / hi as f64);
    let dlog = (1.0 - p) * ((hi - lo) as f64 / lof).ln_1p() + (dg / g_lo).ln_1p();
    let r_lo = scale * ((1.0 - p) * lof.ln() + g_lo.ln()).exp();
    r_lo * (-dlog.exp_m1())
}

/// Block boundaries and tail anchors of the spike–plateau pair.
///
/// Block j starts at index k_j with k_1 = 1 and k_{j+1} = 2^{k_j+1} + k_j - 1;
/// only three blocks are reachable in `f64` (k_4 = 2^36 + 34).
#[derive(Debug)]
struct SpikePlateauBlocks {
    /// k_1..k_4
    starts: [u64; 4],
    /// Tail value at each block start (identical for both family variants).
    tail_at_start: [f64; 4],
}

fn spike_plateau_blocks() -> &'static SpikePlateauBlocks {
    static BLOCKS: OnceLock<SpikePlateauBlocks> = OnceLock::new();
    BLOCKS.get_or_init(|| {
        let mut starts = [0u64; 4];
        let mut k = 1u64;
        for (i, slot) in starts.iter_mut().enumerate() {
            *slot = k;
            if i + 1 < 4 {
                let plateau_len = (1u64 << (k + 1)) - 2;
                k = plateau_len + k + 1;
            }
        }
        // Block sum 2^{1-k_j} - 2^{-2 k_j}; the sum over blocks j >= 4
        // underflows (k_4 ≈ 6.9e10), so the recursion grounds at zero.
        let block_sum = |kj: u64| 2f64.powf(1.0 - kj as f64) - 2f64.powf(-2.0 * kj as f64);
        let mut tail_at_start = [0.0f64; 4];
        let mut acc = 0.0;
        for j in (0..4).rev() {
            acc += block_sum(starts[j]);
            tail_at_start[j] = acc;
        }
        SpikePlateauBlocks {
            starts,
            tail_at_start,
        }
    })
}

impl SpikePlateauBlocks {
    /// Index of the block containing n, i.e. largest j with k_j <= n.
    fn block_of(&self, n: u64) -> usize {
        match self.starts.iter().rposition(|&k| k <= n) {
            Some(j) => j,
            None => unreachable!("n >= 1 = k_1"),
        }
    }

    /// Tail at the start of block j+1 (zero past the last representable block).
    fn next_tail(&self, j: usize) -> f64 {
        if j + 1 < 4 {
            self.tail_at_start[j + 1]
        } else {
            0.0
        }
    }

    fn next_start(&self, j: usize) -> u64 {
        if j + 1 < 4 {
            self.starts[j + 1]
        } else {
            u64::MAX
        }
    }
}

/// The gap-length families supported by the crate.
#[derive(Debug, Clone)]
pub enum SequenceFamily {
    /// a_n = scale · n^{-1/s} with s in (0,1).
    PowerLaw { s: f64, scale: f64 },
    /// a_n = scale · ratio^n with ratio in (0,1).
    Geometric { ratio: f64, scale: f64 },
    /// a_n = 3^{-k} for 2^{k-1} <= n < 2^k; the classical ternary gap lengths.
    MiddleThirdBlocks,
    /// A finite list of terms given verbatim.
    Explicit {
        terms: Arc<Vec<f64>>,
        tails: Arc<Vec<f64>>,
    },
    /// Spike–plateau blocks: 2^{-k_j} at n = k_j, then 2^{-(2k_j+1)}.
    ExampleAFirst,
    /// The flat companion: 2^{-2k_j} across block j.
    ExampleASecond,
    /// b_1 = a_1 and b_{2k} = b_{2k+1} = a_k / 2 over an inner sequence,
    /// which pins the even tails: r^b_{2n} = r^a_n exactly.
    HalvedOf { inner: Arc<GapSequence> },
    /// Terms and exact tails produced by gauge synthesis.
    Synthesized {
        terms: Arc<Vec<f64>>,
        /// r_1 ..= r_{N+1}, stored rather than re-summed.
        tails: Arc<Vec<f64>>,
        origin: String,
    },
}

/// A non-increasing summable sequence of gap lengths with computable tails.
#[derive(Debug, Clone)]
pub struct GapSequence {
    family: SequenceFamily,
    /// Verbatim text of the spec file this sequence was loaded from, if any.
    spec_echo: Option<String>,
}

impl GapSequence {
    pub fn power_law(s: f64) -> Result<Self> {
        Self::power_law_scaled(s, 1.0)
    }

    pub fn power_law_scaled(s: f64, scale: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "power_law exponent s must lie in (0,1), got {s}"
            )));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "power_law scale must be positive and finite, got {scale}"
            )));
        }
        Ok(Self::raw(SequenceFamily::PowerLaw { s, scale }))
    }

    pub fn geometric(ratio: f64, scale: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "geometric ratio must lie in (0,1), got {ratio}"
            )));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "geometric scale must be positive and finite, got {scale}"
            )));
        }
        Ok(Self::raw(SequenceFamily::Geometric { ratio, scale }))
    }

    pub fn middle_third_blocks() -> Self {
        Self::raw(SequenceFamily::MiddleThirdBlocks)
    }

    pub fn explicit(terms: Vec<f64>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParameter(
                "explicit sequence needs at least one term".into(),
            ));
        }
        if let Some(i) = terms.iter().position(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "explicit term {} is not positive and finite: {}",
                i + 1,
                terms[i]
            )));
        }
        let tails = suffix_sums(&terms);
        Ok(Self::raw(SequenceFamily::Explicit {
            terms: Arc::new(terms),
            tails: Arc::new(tails),
        }))
    }

    pub fn example_a_first() -> Self {
        Self::raw(SequenceFamily::ExampleAFirst)
    }

    pub fn example_a_second() -> Self {
        Self::raw(SequenceFamily::ExampleASecond)
    }

    pub fn halved_of(inner: GapSequence) -> Self {
        Self::raw(SequenceFamily::HalvedOf {
            inner: Arc::new(inner),
        })
    }

    /// Used by synthesis: terms plus exact tails (r_1 ..= r_{N+1}).
    pub fn synthesized(terms: Vec<f64>, tails: Vec<f64>, origin: String) -> Result<Self> {
        if terms.is_empty() || tails.len() != terms.len() + 1 {
            return Err(Error::InvalidParameter(
                "synthesized sequence needs N terms and N+1 tails".into(),
            ));
        }
        if let Some(i) = tails.iter().position(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "synthesized tail {} is not positive and finite",
                i + 1
            )));
        }
        Ok(Self::raw(SequenceFamily::Synthesized {
            terms: Arc::new(terms),
            tails: Arc::new(tails),
            origin,
        }))
    }

    fn raw(family: SequenceFamily) -> Self {
        GapSequence {
            family,
            spec_echo: None,
        }
    }

    pub fn family(&self) -> &SequenceFamily {
        &self.family
    }

    /// The family tag used in spec files and reports.
    pub fn family_tag(&self) -> &'static str {
        match &self.family {
            SequenceFamily::PowerLaw { .. } => "power_law",
            SequenceFamily::Geometric { .. } => "geometric",
            SequenceFamily::MiddleThirdBlocks => "middle_third_blocks",
            SequenceFamily::Explicit { .. } => "explicit",
            SequenceFamily::ExampleAFirst => "example_a_first",
            SequenceFamily::ExampleASecond => "example_a_second",
            SequenceFamily::HalvedOf { .. } => "halved_of",
            SequenceFamily::Synthesized { .. } => "synthesized",
        }
    }

    /// Human-readable label, e.g. `power_law(s=0.5)`.
    pub fn label(&self) -> String {
        match &self.family {
            SequenceFamily::PowerLaw { s, scale } if *scale == 1.0 => format!("power_law(s={s})"),
            SequenceFamily::PowerLaw { s, scale } => format!("power_law(s={s}, scale={scale})"),
            SequenceFamily::Geometric { ratio, scale } if *scale == 1.0 => {
                format!("geometric(ratio={ratio})")
            }
            SequenceFamily::Geometric { ratio, scale } => {
                format!("geometric(ratio={ratio}, scale={scale})")
            }
            SequenceFamily::MiddleThirdBlocks => "middle_third_blocks".into(),
            SequenceFamily::Explicit { terms, .. } => format!("explicit({} terms)", terms.len()),
            SequenceFamily::ExampleAFirst => "example_a_first".into(),
            SequenceFamily::ExampleASecond => "example_a_second".into(),
            SequenceFamily::HalvedOf { inner } => format!("halved_of({})", inner.label()),
            SequenceFamily::Synthesized { terms, origin, .. } => {
                format!("synthesized({origin}, {} terms)", terms.len())
            }
        }
    }

    pub fn spec_echo(&self) -> Option<&str> {
        self.spec_echo.as_deref()
    }

    pub fn set_spec_echo(&mut self, text: String) {
        self.spec_echo = Some(text);
    }

    /// Largest index n for which `term(n)` is representable.
    pub fn max_index(&self) -> u64 {
        match &self.family {
            SequenceFamily::PowerLaw { .. }
            | SequenceFamily::Geometric { .. }
            | SequenceFamily::MiddleThirdBlocks => 1 << 62,
            SequenceFamily::Explicit { terms, .. } => terms.len() as u64,
            // One short of the fourth block start, whose values underflow.
            SequenceFamily::ExampleAFirst | SequenceFamily::ExampleASecond => {
                spike_plateau_blocks().starts[3] - 1
            }
            SequenceFamily::HalvedOf { inner } => {
                let m = inner.max_index();
                if m >= (1 << 62) {
                    1 << 62
                } else {
                    2 * m + 1
                }
            }
            SequenceFamily::Synthesized { terms, .. } => terms.len() as u64,
        }
    }

    fn check_index(&self, n: u64, limit: u64) -> Result<()> {
        if n == 0 || n > limit {
            Err(Error::IndexOutOfRange {
                index: n,
                limit,
            })
        } else {
            Ok(())
        }
    }

    /// a_n, the n-th gap length. Computed in linear arithmetic, so stored
    /// terms come back verbatim and halving stays exact; may honestly
    /// underflow to zero where [`Self::log_term`] stays finite.
    pub fn term(&self, n: u64) -> Result<f64> {
        self.check_index(n, self.max_index())?;
        Ok(match &self.family {
            SequenceFamily::PowerLaw { s, scale } => scale * (n as f64).powf(-1.0 / s),
            SequenceFamily::Geometric { ratio, scale } => scale * ratio.powf(n as f64),
            SequenceFamily::MiddleThirdBlocks => 3f64.powi(-(bit_length(n) as i32)),
            SequenceFamily::Explicit { terms, .. } => terms[(n - 1) as usize],
            SequenceFamily::ExampleAFirst => {
                let blocks = spike_plateau_blocks();
                let j = blocks.block_of(n);
                let k = blocks.starts[j] as f64;
                if n == blocks.starts[j] {
                    2f64.powf(-k)
                } else {
                    2f64.powf(-(2.0 * k + 1.0))
                }
            }
            SequenceFamily::ExampleASecond => {
                let blocks = spike_plateau_blocks();
                let k = blocks.starts[blocks.block_of(n)] as f64;
                2f64.powf(-2.0 * k)
            }
            SequenceFamily::HalvedOf { inner } => {
                if n == 1 {
                    inner.term(1)?
                } else {
                    inner.term(n / 2)? / 2.0
                }
            }
            SequenceFamily::Synthesized { terms, .. } => terms[(n - 1) as usize],
        })
    }

    /// ln a_n.
    pub fn log_term(&self, n: u64) -> Result<f64> {
        self.check_index(n, self.max_index())?;
        Ok(match &self.family {
            SequenceFamily::PowerLaw { s, scale } => scale.ln() - (n as f64).ln() / s,
            SequenceFamily::Geometric { ratio, scale } => scale.ln() + n as f64 * ratio.ln(),
            SequenceFamily::MiddleThirdBlocks => -(bit_length(n) as f64) * LN3,
            SequenceFamily::Explicit { terms, .. } => terms[(n - 1) as usize].ln(),
            SequenceFamily::ExampleAFirst => {
                let blocks = spike_plateau_blocks();
                let j = blocks.block_of(n);
                let k = blocks.starts[j] as f64;
                if n == blocks.starts[j] {
                    -k * LN2
                } else {
                    -(2.0 * k + 1.0) * LN2
                }
            }
            SequenceFamily::ExampleASecond => {
                let blocks = spike_plateau_blocks();
                let k = blocks.starts[blocks.block_of(n)] as f64;
                -2.0 * k * LN2
            }
            SequenceFamily::HalvedOf { inner } => {
                if n == 1 {
                    inner.log_term(1)?
                } else {
                    inner.log_term(n / 2)? - LN2
                }
            }
            SequenceFamily::Synthesized { terms, .. } => terms[(n - 1) as usize].ln(),
        })
    }

    /// r_n = Σ_{j>=n} a_j in linear arithmetic: stored tails come back
    /// verbatim and even-index halved tails equal the inner tails bit for
    /// bit. May honestly underflow to zero; prefer [`Self::log_tail`] when
    /// only the magnitude matters.
    pub fn tail(&self, n: u64) -> Result<f64> {
        self.check_index(n, self.max_tail_index())?;
        Ok(match &self.family {
            SequenceFamily::PowerLaw { s, scale } => {
                scale * power_log_tail_unscaled(1.0 / s, n).exp()
            }
            SequenceFamily::Geometric { ratio, scale } => {
                scale * ratio.powf(n as f64) / (1.0 - ratio)
            }
            SequenceFamily::MiddleThirdBlocks => {
                let k = bit_length(n);
                let step = 3f64.powi(-(k as i32));
                ((1u64 << k) - n) as f64 * step + 1.5 * (2.0 / 3.0f64).powi(k as i32 + 1)
            }
            SequenceFamily::Explicit { tails, .. } => tails[(n - 1) as usize],
            SequenceFamily::ExampleAFirst => {
                let blocks = spike_plateau_blocks();
                let j = blocks.block_of(n);
                if n == blocks.starts[j] {
                    blocks.tail_at_start[j]
                } else {
                    let plateau = 2f64.powf(-(2.0 * blocks.starts[j] as f64 + 1.0));
                    (blocks.next_start(j) - n) as f64 * plateau + blocks.next_tail(j)
                }
            }
            SequenceFamily::ExampleASecond => {
                let blocks = spike_plateau_blocks();
                let j = blocks.block_of(n);
                let step = 2f64.powf(-2.0 * blocks.starts[j] as f64);
                (blocks.next_start(j) - n) as f64 * step + blocks.next_tail(j)
            }
            SequenceFamily::HalvedOf { inner } => {
                if n == 1 {
                    inner.term(1)? + inner.tail(1)?
                } else if n % 2 == 0 {
                    inner.tail(n / 2)?
                } else {
                    let m = n / 2;
                    inner.tail(m)? - inner.term(m)? / 2.0
                }
            }
            SequenceFamily::Synthesized { tails, .. } => tails[(n - 1) as usize],
        })
    }

    /// ln r_n, finite for every representable index.
    pub fn log_tail(&self, n: u64) -> Result<f64> {
        self.check_index(n, self.max_tail_index())?;
        Ok(match &self.family {
            SequenceFamily::PowerLaw { s, scale } => {
                scale.ln() + power_log_tail_unscaled(1.0 / s, n)
            }
            SequenceFamily::Geometric { ratio, scale } => {
                scale.ln() + n as f64 * ratio.ln() - (-ratio).ln_1p()
            }
            SequenceFamily::MiddleThirdBlocks => {
                let k = bit_length(n);
                let step = 3f64.powi(-(k as i32));
                let within = ((1u64 << k) - n) as f64 * step;
                let rest = 1.5 * (2.0 / 3.0f64).powi(k as i32 + 1);
                (within + rest).ln()
            }
            SequenceFamily::Explicit { tails, .. } => tails[(n - 1) as usize].ln(),
            SequenceFamily::ExampleAFirst => {
                let blocks = spike_plateau_blocks();
                let j = blocks.block_of(n);
                if n == blocks.starts[j] {
                    blocks.tail_at_start[j].ln()
                } else {
                    let plateau = 2f64.powf(-(2.0 * blocks.starts[j] as f64 + 1.0));
                    let left = (blocks.next_start(j) - n) as f64;
                    (left * plateau + blocks.next_tail(j)).ln()
                }
            }
            SequenceFamily::ExampleASecond => {
                let blocks = spike_plateau_blocks();
                let j = blocks.block_of(n);
                let step = 2f64.powf(-2.0 * blocks.starts[j] as f64);
                let left = (blocks.next_start(j) - n) as f64;
                (left * step + blocks.next_tail(j)).ln()
            }
            SequenceFamily::HalvedOf { inner } => {
                if n == 1 {
                    log_add_exp(inner.log_term(1)?, inner.log_tail(1)?)
                } else if n % 2 == 0 {
                    inner.log_tail(n / 2)?
                } else {
                    // r_{2m+1} = r^a_m - a_m/2, and a_m/2 < r^a_m / 2 always.
                    let m = n / 2;
                    let la = inner.log_term(m)? - LN2;
                    let lr = inner.log_tail(m)?;
                    lr + (-((la - lr).exp())).ln_1p()
                }
            }
            SequenceFamily::Synthesized { tails, .. } => tails[(n - 1) as usize].ln(),
        })
    }

    /// Largest index at which a tail is representable (one past the last
    /// term for synthesized sequences, which store r_{N+1}).
    pub fn max_tail_index(&self) -> u64 {
        match &self.family {
            SequenceFamily::Synthesized { tails, .. } => tails.len() as u64,
            _ => self.max_index(),
        }
    }

    /// a_n, with indices past the end of a finite sequence reading as zero.
    pub fn term_or_zero(&self, n: u64) -> f64 {
        if n >= 1 && n <= self.max_index() {
            self.term(n).expect("index checked")
        } else {
            0.0
        }
    }

    /// Whether the mass past `max_tail_index` is exactly zero in `f64`:
    /// true for stored finite sequences and for the spike–plateau pair
    /// (whose fourth block underflows every representable magnitude), false
    /// for families that still carry real mass past the index range.
    pub(crate) fn tail_beyond_range_vanishes(&self) -> bool {
        match &self.family {
            SequenceFamily::Explicit { .. }
            | SequenceFamily::Synthesized { .. }
            | SequenceFamily::ExampleAFirst
            | SequenceFamily::ExampleASecond => true,
            SequenceFamily::PowerLaw { .. }
            | SequenceFamily::Geometric { .. }
            | SequenceFamily::MiddleThirdBlocks => false,
            SequenceFamily::HalvedOf { inner } => inner.tail_beyond_range_vanishes(),
        }
    }

    /// r_lo − r_hi = Σ_{j ∈ [lo, hi)} a_j, computed without the catastrophic
    /// cancellation of subtracting two nearly equal tails. This is the
    /// primitive behind subtree lengths: at deep construction levels the
    /// bracket [lo, hi) is a sliver of the tail and naive subtraction loses
    /// every significant digit.
    pub fn tail_diff(&self, lo: u64, hi: u64) -> Result<f64> {
        if hi < lo {
            return Err(Error::InvalidParameter(format!(
                "tail_diff needs lo <= hi, got {lo} > {hi}"
            )));
        }
        self.check_index(lo, self.max_tail_index())?;
        self.check_index(hi, self.max_tail_index())?;
        if lo == hi {
            return Ok(0.0);
        }
        Ok(match &self.family {
            SequenceFamily::PowerLaw { s, scale } => power_tail_diff(1.0 / s, *scale, lo, hi),
            SequenceFamily::Geometric { ratio, scale } => {
                let r_lo = scale * ratio.powf(lo as f64) / (1.0 - ratio);
                r_lo * (-((hi - lo) as f64 * ratio.ln()).exp_m1())
            }
            SequenceFamily::MiddleThirdBlocks => {
                let mut d = 0.0;
                let mut a = lo;
                while a < hi {
                    let k = bit_length(a);
                    let b = hi.min(1u64 << k);
                    d += (b - a) as f64 * 3f64.powi(-(k as i32));
                    a = b;
                }
                d
            }
            SequenceFamily::Explicit { terms, tails } => {
                range_sum_stored(terms, tails, lo, hi)
            }
            SequenceFamily::ExampleAFirst | SequenceFamily::ExampleASecond => {
                let spiked = matches!(self.family, SequenceFamily::ExampleAFirst);
                let blocks = spike_plateau_blocks();
                let mut d = 0.0;
                let mut a = lo;
                while a < hi {
                    let j = blocks.block_of(a);
                    let k = blocks.starts[j] as f64;
                    let b = hi.min(blocks.next_start(j));
                    if spiked {
                        let mut from = a;
                        if a == blocks.starts[j] {
                            d += 2f64.powf(-k);
                            from += 1;
                        }
                        if b > from {
                            d += (b - from) as f64 * 2f64.powf(-(2.0 * k + 1.0));
                        }
                    } else {
                        d += (b - a) as f64 * 2f64.powf(-2.0 * k);
                    }
                    a = b;
                }
                d
            }
            SequenceFamily::HalvedOf { inner } => {
                let v = hi / 2;
                let hi_odd = hi % 2 == 1;
                if lo == 1 {
                    let head = inner.term(1)? + inner.tail_diff(1, v.max(1))?;
                    head + if hi_odd { inner.term(v)? / 2.0 } else { 0.0 }
                } else {
                    let u = lo / 2;
                    let mut d = inner.tail_diff(u, v)?;
                    if lo % 2 == 1 {
                        d -= inner.term(u)? / 2.0;
                    }
                    if hi_odd {
                        d += inner.term(v)? / 2.0;
                    }
                    d
                }
            }
            SequenceFamily::Synthesized { terms, tails, .. } => {
                range_sum_stored(terms, tails, lo, hi)
            }
        })
    }

    /// Total gap length r_1, the diameter of the assembled set.
    pub fn total_length(&self) -> f64 {
        self.tail(1).expect("index 1 is always valid")
    }

    /// Probe positivity, monotonicity and the telescoping identity up to N.
    pub fn validate(&self, n_max: u64) -> ValidationReport {
        // probes compare a_n with a_{n+1}, so stop one short of the last term
        let limit = n_max.min(self.max_index().saturating_sub(1)).max(1);
        let mut probes: Vec<u64> = (1..=limit.min(64)).collect();
        for n in index_grid(1, limit) {
            if n > 64 {
                probes.push(n);
            }
        }

        let mut failures = Vec::new();
        let mut positive_ok = true;
        let mut monotone_ok = true;
        let mut tail_ok = true;
        let mut max_err = 0.0f64;

        for &n in &probes {
            let (lt, lt_next, lr, lr_next) = match (
                self.log_term(n),
                self.log_term(n + 1),
                self.log_tail(n),
                self.log_tail(n + 1),
            ) {
                (Ok(a), Ok(b), Ok(c), Ok(d)) => (a, b, c, d),
                _ => {
                    failures.push(ValidationFailure {
                        index: n,
                        message: "index probe failed".into(),
                    });
                    positive_ok = false;
                    continue;
                }
            };
            if !lt.is_finite() || lt == f64::NEG_INFINITY {
                positive_ok = false;
                failures.push(ValidationFailure {
                    index: n,
                    message: format!("term {n} is not positive"),
                });
            }
            if lt + 1e-13 < lt_next {
                monotone_ok = false;
                failures.push(ValidationFailure {
                    index: n,
                    message: format!("term {n} smaller than term {}", n + 1),
                });
            }
            let recombined = log_add_exp(lt, lr_next);
            let err = ((recombined - lr).exp() - 1.0).abs();
            max_err = max_err.max(err);
            if !(err <= TAIL_CONSISTENCY_TOL) {
                tail_ok = false;
                failures.push(ValidationFailure {
                    index: n,
                    message: format!("tail at {n} deviates from a_n + r_(n+1) by {err:.3e}"),
                });
            }
        }

        ValidationReport {
            checked_up_to: limit,
            probe_count: probes.len(),
            positive_ok,
            monotone_ok,
            tail_consistency_ok: tail_ok,
            tail_consistency_max_err: max_err,
            failures,
        }
    }
}

/// One failed validation probe.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationFailure {
    pub index: u64,
    pub message: String,
}

/// Outcome of [`GapSequence::validate`]. `failures` is empty exactly when all
/// three flags hold.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checked_up_to: u64,
    pub probe_count: usize,
    pub positive_ok: bool,
    pub monotone_ok: bool,
    pub tail_consistency_ok: bool,
    pub tail_consistency_max_err: f64,
    pub failures: Vec<ValidationFailure>,
}

impl ValidationReport {
    pub fn all_ok(&self) -> bool {
        self.positive_ok && self.monotone_ok && self.tail_consistency_ok
    }
}

/// Number of bits needed to write n, i.e. ⌊log2 n⌋ + 1.
pub(crate) fn bit_length(n: u64) -> u32 {
    64 - n.leading_zeros()
}

/// Σ terms[lo-1..hi-1] for stored sequences: directly for short ranges,
/// as a suffix-sum difference for long ones.
fn range_sum_stored(terms: &[f64], tails: &[f64], lo: u64, hi: u64) -> f64 {
    if hi - lo <= 4096 {
        let mut s = KahanSum::new();
        for j in ((lo - 1)..(hi - 1).min(terms.len() as u64)).rev() {
            s.add(terms[j as usize]);
        }
        s.value()
    } else {
        tails[(lo - 1) as usize] - tails[(hi - 1) as usize]
    }
}

/// Backward compensated suffix sums: out[i] = Σ_{j>=i} terms[j].
fn suffix_sums(terms: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; terms.len()];
    let mut acc = KahanSum::new();
    for i in (0..terms.len()).rev() {
        acc.add(terms[i]);
        out[i] = acc.value();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const ZETA2: f64 = 1.6449340668482264; // Σ n^{-2}

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(a.abs())
    }

    #[test]
    fn middle_third_terms_follow_blocks() {
        let seq = GapSequence::middle_third_blocks();
        assert_eq!(seq.term(1).unwrap(), 1.0 / 3.0);
        assert_eq!(seq.term(2).unwrap(), seq.term(3).unwrap());
        assert!(rel_close(seq.term(6).unwrap(), 1.0 / 27.0, 1e-15));
        assert!(rel_close(seq.term(7).unwrap(), 1.0 / 27.0, 1e-15));
        assert!(rel_close(seq.term(8).unwrap(), 1.0 / 81.0, 1e-15));
    }

    #[test]
    fn middle_third_tails_match_closed_form() {
        let seq = GapSequence::middle_third_blocks();
        assert!(rel_close(seq.tail(1).unwrap(), 1.0, 1e-14));
        assert!(rel_close(seq.tail(2).unwrap(), 2.0 / 3.0, 1e-14));
        assert!(rel_close(seq.tail(4).unwrap(), 4.0 / 9.0, 1e-14));
        // block boundary closed form at larger k
        for k in 1..40u32 {
            let n = 1u64 << (k - 1);
            let expect = 1.5 * (2.0 / 3.0f64).powi(k as i32);
            assert!(rel_close(seq.tail(n).unwrap(), expect, 1e-12));
        }
    }

    #[test]
    fn power_law_terms_and_special_tail() {
        let seq = GapSequence::power_law(0.5).unwrap();
        assert!(rel_close(seq.term(4).unwrap(), 1.0 / 16.0, 1e-15));
        // independent value: r_1 = ζ(2) for s = 1/2
        assert!(rel_close(seq.tail(1).unwrap(), ZETA2, 1e-13));
    }

    #[test]
    fn power_law_tail_matches_brute_force_sum() {
        // Independent oracle: compensated head sum plus integral bracket midpoint.
        for &(s, n) in &[(0.5f64, 1u64), (0.5, 10), (0.5, 1000), (0.7, 3), (0.3, 77), (0.9, 12)] {
            let p = 1.0 / s;
            let cutoff: u64 = 2_000_000;
            let mut head = KahanSum::new();
            for j in (n..cutoff).rev() {
                head.add((j as f64).powf(-p));
            }
            let m = cutoff as f64;
            let lo = m.powf(1.0 - p) / (p - 1.0);
            let hi = (m - 1.0).powf(1.0 - p) / (p - 1.0);
            let oracle = head.value() + 0.5 * (lo + hi);
            let bracket = hi - lo;

            let seq = GapSequence::power_law(s).unwrap();
            let got = seq.tail(n).unwrap();
            assert!(
                (got - oracle).abs() <= bracket + 1e-13 * oracle,
                "s={s} n={n}: got {got}, oracle {oracle} ± {bracket:e}"
            );
        }
    }

    #[test]
    fn power_law_scale_multiplies_everything() {
        let base = GapSequence::power_law(0.5).unwrap();
        let scaled = GapSequence::power_law_scaled(0.5, 2.0).unwrap();
        for n in [1u64, 5, 100, 10_000] {
            assert!(rel_close(
                scaled.term(n).unwrap(),
                2.0 * base.term(n).unwrap(),
                1e-14
            ));
            assert!(rel_close(
                scaled.tail(n).unwrap(),
                2.0 * base.tail(n).unwrap(),
                1e-14
            ));
        }
    }

    #[test]
    fn geometric_closed_forms() {
        let e = std::f64::consts::E;
        let seq = GapSequence::geometric(1.0 / e, 1.0).unwrap();
        assert!(rel_close(seq.term(3).unwrap(), (-3.0f64).exp(), 1e-15));
        assert!(rel_close(seq.tail(1).unwrap(), 1.0 / (e - 1.0), 1e-14));
        // log tails stay finite far beyond linear underflow
        let lt = seq.log_tail(100_000).unwrap();
        assert!(lt.is_finite() && lt < -99_000.0);
    }

    #[test]
    fn spike_plateau_block_layout() {
        let b = spike_plateau_blocks();
        assert_eq!(b.starts, [1, 4, 35, (1u64 << 36) + 34]);
        let seq = GapSequence::example_a_first();
        assert_eq!(seq.term(1).unwrap(), 0.5);
        assert_eq!(seq.term(2).unwrap(), 0.125);
        assert_eq!(seq.term(3).unwrap(), 0.125);
        assert_eq!(seq.term(4).unwrap(), 2f64.powi(-4));
        assert_eq!(seq.term(5).unwrap(), 2f64.powi(-9));
        assert_eq!(seq.term(34).unwrap(), 2f64.powi(-9));
        assert_eq!(seq.term(35).unwrap(), 2f64.powi(-35));
        assert_eq!(seq.term(36).unwrap(), 2f64.powi(-71));

        let flat = GapSequence::example_a_second();
        assert_eq!(flat.term(1).unwrap(), 0.25);
        assert_eq!(flat.term(3).unwrap(), 0.25);
        assert_eq!(flat.term(4).unwrap(), 2f64.powi(-8));
        assert_eq!(flat.term(34).unwrap(), 2f64.powi(-8));
        assert_eq!(flat.term(35).unwrap(), 2f64.powi(-70));
    }

    #[test]
    fn spike_plateau_tails_agree_at_block_starts() {
        // Both variants have identical block sums, so tails coincide there.
        let a = GapSequence::example_a_first();
        let b = GapSequence::example_a_second();
        for &n in &[1u64, 4, 35] {
            let ta = a.tail(n).unwrap();
            let tb = b.tail(n).unwrap();
            assert!(rel_close(ta, tb, 1e-15), "n={n}: {ta} vs {tb}");
        }
        assert!(rel_close(a.tail(1).unwrap(), 0.8710937500582077, 1e-15));
    }

    #[test]
    fn spike_plateau_tail_matches_direct_sum() {
        let a = GapSequence::example_a_first();
        for n in [1u64, 2, 3, 4, 5, 20, 34, 35, 36, 100] {
            // direct: sum terms n..=5000 plus the analytic remainder past the
            // probe (inside block 3 the remainder is (k_4 - m) * 2^{-71})
            let mut acc = KahanSum::new();
            let stop = 5_000u64;
            for j in (n..=stop).rev() {
                acc.add(a.term(j).unwrap());
            }
            let blocks = spike_plateau_blocks();
            let rest = (blocks.starts[3] - stop - 1) as f64 * 2f64.powi(-71);
            let oracle = acc.value() + rest;
            assert!(
                rel_close(a.tail(n).unwrap(), oracle, 1e-12),
                "n={n}: {} vs {oracle}",
                a.tail(n).unwrap()
            );
        }
    }

    #[test]
    fn halved_tail_identity_is_exact() {
        let base = GapSequence::power_law(0.5).unwrap();
        let halved = GapSequence::halved_of(base.clone());
        assert_eq!(halved.term(1).unwrap(), base.term(1).unwrap());
        assert_eq!(halved.term(2).unwrap(), base.term(1).unwrap() / 2.0);
        assert_eq!(halved.term(3).unwrap(), base.term(1).unwrap() / 2.0);
        assert_eq!(halved.term(4).unwrap(), base.term(2).unwrap() / 2.0);
        for n in [1u64, 2, 7, 500, 99_999] {
            assert_eq!(
                halved.log_tail(2 * n).unwrap(),
                base.log_tail(n).unwrap(),
                "even tails must delegate exactly"
            );
        }
        // odd tails interleave: r_{2n+1} = r^a_n - a_n/2
        for n in [1u64, 6, 1234] {
            let expect = base.tail(n).unwrap() - base.term(n).unwrap() / 2.0;
            assert!(rel_close(halved.tail(2 * n + 1).unwrap(), expect, 1e-13));
        }
    }

    #[test]
    fn explicit_list_round_trips() {
        let seq = GapSequence::explicit(vec![0.5, 0.25, 0.125]).unwrap();
        assert_eq!(seq.term(2).unwrap(), 0.25);
        assert!(rel_close(seq.tail(1).unwrap(), 0.875, 1e-15));
        assert!(rel_close(seq.tail(3).unwrap(), 0.125, 1e-15));
        assert!(seq.term(4).is_err());
        assert!(matches!(
            seq.term(9),
            Err(Error::IndexOutOfRange { limit: 3, .. })
        ));
    }

    #[test]
    fn constructors_reject_bad_parameters() {
        assert!(GapSequence::power_law(0.0).is_err());
        assert!(GapSequence::power_law(1.0).is_err());
        assert!(GapSequence::geometric(1.0, 1.0).is_err());
        assert!(GapSequence::geometric(0.5, 0.0).is_err());
        assert!(GapSequence::explicit(vec![0.5, -0.1]).is_err());
        assert!(GapSequence::explicit(vec![]).is_err());
    }

    #[test]
    fn validate_flags_clean_families() {
        for seq in [
            GapSequence::power_law(0.5).unwrap(),
            GapSequence::power_law(0.9).unwrap(),
            GapSequence::geometric(1.0 / std::f64::consts::E, 1.0).unwrap(),
            GapSequence::middle_third_blocks(),
            GapSequence::example_a_first(),
            GapSequence::example_a_second(),
            GapSequence::halved_of(GapSequence::power_law(0.5).unwrap()),
            GapSequence::halved_of(GapSequence::geometric(0.3, 1.0).unwrap()),
        ] {
            let report = seq.validate(100_000);
            assert!(
                report.all_ok() && report.failures.is_empty(),
                "{}: {:?}",
                seq.label(),
                report.failures.first()
            );
        }
    }

    #[test]
    fn validate_reports_non_monotone_explicit_list() {
        let seq = GapSequence::explicit(vec![0.3, 0.4]).unwrap();
        let report = seq.validate(10);
        assert!(!report.monotone_ok);
        assert!(report.positive_ok);
        assert_eq!(report.failures[0].index, 1);
        assert!(!report.all_ok());
    }

    #[test]
    fn tails_strictly_decrease_and_so_does_tail_over_index() {
        for seq in [
            GapSequence::power_law(0.4).unwrap(),
            GapSequence::middle_third_blocks(),
            GapSequence::example_a_second(),
        ] {
            let mut prev_lr = f64::INFINITY;
            let mut prev_lb = f64::INFINITY;
            for n in 1..2000u64 {
                let lr = seq.log_tail(n).unwrap();
                let lb = lr - (n as f64).ln();
                assert!(lr < prev_lr, "{} tail not strictly decreasing at {n}", seq.label());
                assert!(lb < prev_lb, "{} tail/index not decreasing at {n}", seq.label());
                prev_lr = lr;
                prev_lb = lb;
            }
        }
    }

    #[test]
    fn tail_diff_matches_direct_sums() {
        let families = [
            GapSequence::power_law(0.5).unwrap(),
            GapSequence::power_law(0.9).unwrap(),
            GapSequence::geometric(0.5, 1.0).unwrap(),
            GapSequence::middle_third_blocks(),
            GapSequence::example_a_first(),
            GapSequence::example_a_second(),
            GapSequence::halved_of(GapSequence::power_law(0.5).unwrap()),
            GapSequence::halved_of(GapSequence::middle_third_blocks()),
            GapSequence::explicit((1..=500).map(|n| 1.0 / (n * n) as f64).collect()).unwrap(),
        ];
        for seq in &families {
            for &(lo, hi) in &[(1u64, 2u64), (1, 30), (2, 3), (3, 100), (7, 250), (33, 38)] {
                let mut s = KahanSum::new();
                for j in (lo..hi).rev() {
                    s.add(seq.term(j).unwrap());
                }
                let got = seq.tail_diff(lo, hi).unwrap();
                assert!(
                    rel_close(got, s.value(), 1e-12),
                    "{} [{lo},{hi}): {got} vs {}",
                    seq.label(),
                    s.value()
                );
            }
        }
    }

    #[test]
    fn tail_diff_is_additive_and_bracketed_at_depth() {
        // At indices ~2^40 naive tail subtraction has no correct digits left;
        // additivity across a split plus the term bracket pin the stable path.
        for s in [0.3, 0.5, 0.9] {
            let seq = GapSequence::power_law(s).unwrap();
            let lo = 1u64 << 40;
            let mid = lo + (lo >> 1);
            let hi = 2 * lo;
            let whole = seq.tail_diff(lo, hi).unwrap();
            let parts = seq.tail_diff(lo, mid).unwrap() + seq.tail_diff(mid, hi).unwrap();
            assert!(rel_close(whole, parts, 1e-12), "s={s}: {whole} vs {parts}");
            let n = (hi - lo) as f64;
            assert!(whole <= n * seq.term(lo).unwrap() * (1.0 + 1e-12));
            assert!(whole >= n * seq.term(hi).unwrap() * (1.0 - 1e-12));
        }
    }

    #[test]
    fn tail_diff_agrees_with_tail_subtraction_where_that_is_safe() {
        for seq in [
            GapSequence::power_law(0.5).unwrap(),
            GapSequence::geometric(0.25, 2.0).unwrap(),
            GapSequence::middle_third_blocks(),
        ] {
            for &(lo, hi) in &[(1u64, 50u64), (10, 1000), (5, 5)] {
                let direct = seq.tail(lo).unwrap() - seq.tail(hi).unwrap();
                let got = seq.tail_diff(lo, hi).unwrap();
                assert!(
                    (got - direct).abs() <= 1e-12 * seq.tail(lo).unwrap(),
                    "{} [{lo},{hi})",
                    seq.label()
                );
            }
        }
    }

    #[test]
    fn em_anchor_certification_holds_for_steep_exponents() {
        // s = 0.05 means p = 20; the anchor logic must still certify 1e-15.
        let seq = GapSequence::power_law(0.05).unwrap();
        let r1 = seq.tail(1).unwrap();
        let mut brute = KahanSum::new();
        for j in (1..100_000u64).rev() {
            brute.add((j as f64).powf(-20.0));
        }
        assert!(rel_close(r1, brute.value(), 1e-14));
    }
}
