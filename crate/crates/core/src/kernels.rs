//! Per-pixel binary codes over a 3x3 neighborhood.
//!
//! Neighbors are indexed clockwise starting at the top-left corner:
//!
//! ```text
//! 0 1 2
//! 7 c 3
//! 6 5 4
//! ```
//!
//! A 90 degree rotation of the image is a cyclic shift of this ring by two
//! positions. The Kirsch mask for direction `n` puts weight 5 on neighbors
//! `n-1, n, n+1` and -3 on the other five, so responses shift with the ring,
//! and rank-based exponents (LOOP) follow their pixels under rotation.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::GrayImage;

/// `(dy, dx)` offset of each ring position relative to the center.
pub const NEIGHBOR_OFFSETS: [(isize, isize); 8] =
    [(-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1)];

/// A 3x3 neighborhood: center intensity plus the 8-pixel ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Patch3 {
    pub center: u8,
    pub neighbors: [u8; 8],
}

impl Patch3 {
    pub fn new(center: u8, neighbors: [u8; 8]) -> Self {
        Patch3 { center, neighbors }
    }

    /// Patch centered at `(x, y)`; the caller guarantees a full neighborhood.
    #[inline]
    pub fn from_image(img: &GrayImage, x: usize, y: usize) -> Self {
        let w = img.width();
        let data = img.data();
        let c = y * w + x;
        Patch3 {
            center: data[c],
            neighbors: [
                data[c - w - 1],
                data[c - w],
                data[c - w + 1],
                data[c + 1],
                data[c + w + 1],
                data[c + w],
                data[c + w - 1],
                data[c - 1],
            ],
        }
    }

    /// The patch seen after rotating the image clockwise by `quarter_turns`
    /// x 90 degrees.
    pub fn rotated(&self, quarter_turns: usize) -> Self {
        let mut neighbors = self.neighbors;
        neighbors.rotate_right(2 * (quarter_turns % 4));
        Patch3 { center: self.center, neighbors }
    }
}

/// Largest absolute Kirsch response: 255 * 15.
pub const KIRSCH_MAX: i32 = 255 * 15;

/// Responses of the 8 Kirsch compass masks, indexed like the neighbor ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct KirschResponses(pub [i32; 8]);

impl KirschResponses {
    #[inline]
    pub fn get(&self, n: usize) -> i32 {
        self.0[n % 8]
    }

    /// Cyclic shift matching [`Patch3::rotated`].
    pub fn rotated(&self, steps: usize) -> Self {
        let mut m = self.0;
        m.rotate_right(steps % 8);
        KirschResponses(m)
    }
}

pub fn kirsch_responses(p: &Patch3) -> KirschResponses {
    let nb = p.neighbors.map(i32::from);
    let total: i32 = nb.iter().sum();
    // 5*(three peak) - 3*(other five) = 8*(three peak) - 3*total
    KirschResponses(std::array::from_fn(|n| {
        8 * (nb[(n + 7) % 8] + nb[n] + nb[(n + 1) % 8]) - 3 * total
    }))
}

/// What ranks Kirsch responses against each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum RankKey {
    /// Signed response value.
    #[default]
    Signed,
    /// Absolute response value.
    Absolute,
}

impl RankKey {
    #[inline]
    pub fn key(self, m: i32) -> i32 {
        match self {
            RankKey::Signed => m,
            RankKey::Absolute => m.abs(),
        }
    }
}

impl FromStr for RankKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "signed" => Ok(RankKey::Signed),
            "absolute" | "abs" => Ok(RankKey::Absolute),
            other => Err(Error::InvalidParameter(format!("unknown rank key {other:?}"))),
        }
    }
}

impl fmt::Display for RankKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankKey::Signed => "signed",
            RankKey::Absolute => "absolute",
        })
    }
}

/// Secondary key among equal-ranked responses: the larger absolute
/// difference to the two circularly adjacent responses.
#[inline]
pub fn tie_break_key(m: &KirschResponses, n: usize) -> i32 {
    let here = m.get(n);
    (here - m.get(n + 7)).abs().max((here - m.get(n + 1)).abs())
}

#[inline]
fn rank_cmp(m: &KirschResponses, key: RankKey, a: usize, b: usize) -> Ordering {
    key.key(m.get(a))
        .cmp(&key.key(m.get(b)))
        .then_with(|| tie_break_key(m, a).cmp(&tie_break_key(m, b)))
        .then_with(|| a.cmp(&b))
}

/// Orders `tied` from lowest to highest weight.
///
/// A larger neighbor difference wins the higher weight; equal keys fall back
/// to ascending direction index.
pub fn tie_break(m: &KirschResponses, tied: &[usize]) -> Vec<usize> {
    let mut order = tied.to_vec();
    order.sort_by(|&a, &b| {
        tie_break_key(m, a).cmp(&tie_break_key(m, b)).then_with(|| a.cmp(&b))
    });
    order
}

/// Exponent of each direction: its rank (0 = lowest) among the 8 responses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RankAssignment {
    pub exponents: [u8; 8],
    pub rank_key: RankKey,
}

impl RankAssignment {
    /// Direction holding the highest exponent.
    pub fn strongest(&self) -> usize {
        self.exponents.iter().position(|&w| w == 7).expect("exponents are a permutation")
    }
}

pub fn rank_exponents(m: &KirschResponses, rank_key: RankKey) -> RankAssignment {
    if m.0.iter().all(|v| v.abs() <= KIRSCH_MAX) {
        return RankAssignment { exponents: packed_ranks(m, rank_key), rank_key };
    }
    let mut order: [usize; 8] = std::array::from_fn(|n| n);
    order.sort_unstable_by(|&a, &b| rank_cmp(m, rank_key, a, b));
    let mut exponents = [0u8; 8];
    for (rank, &n) in order.iter().enumerate() {
        exponents[n] = rank as u8;
    }
    RankAssignment { exponents, rank_key }
}

/// Rank by counting: each direction's (key, tie key, index) triple packed
/// into one integer, so the exponent is the number of smaller packs.
/// Valid for responses within `KIRSCH_MAX` (tie keys then fit in 14 bits).
#[inline]
fn packed_ranks(m: &KirschResponses, rank_key: RankKey) -> [u8; 8] {
    let packs: [i64; 8] = std::array::from_fn(|n| {
        let key = rank_key.key(m.0[n]) as i64;
        (key << 17) | ((tie_break_key(m, n) as i64) << 3) | n as i64
    });
    packs.map(|p| packs.iter().map(|&q| (q < p) as u8).sum())
}

/// A descriptor code value and its word width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Code {
    value: u16,
    bits: u8,
}

impl Code {
    #[inline]
    pub fn byte(value: u8) -> Self {
        Code { value: value as u16, bits: 8 }
    }

    #[inline]
    pub fn value(&self) -> u16 {
        self.value
    }

    #[inline]
    pub fn bits(&self) -> u8 {
        self.bits
    }
}

#[inline]
fn step(x: i32) -> u8 {
    (x >= 0) as u8
}

pub fn lbp_code(p: &Patch3) -> Code {
    let c = p.center as i32;
    let v = p
        .neighbors
        .iter()
        .enumerate()
        .fold(0u8, |acc, (n, &i)| acc | step(i as i32 - c) << n);
    Code::byte(v)
}

/// Modified census transform: 9-bit word against the neighborhood mean.
pub fn mct_code(p: &Patch3) -> Code {
    // i >= sum/9  <=>  9*i >= sum
    let sum: i32 = p.neighbors.iter().map(|&i| i as i32).sum::<i32>() + p.center as i32;
    let mut v = p
        .neighbors
        .iter()
        .enumerate()
        .fold(0u16, |acc, (n, &i)| acc | (step(9 * i as i32 - sum) as u16) << n);
    v |= (step(9 * p.center as i32 - sum) as u16) << 8;
    Code { value: v, bits: 9 }
}

/// Local gradient pattern: absolute center differences against their mean.
pub fn lgp_code(p: &Patch3) -> Code {
    let c = p.center as i32;
    let g = p.neighbors.map(|i| (i as i32 - c).abs());
    let total: i32 = g.iter().sum();
    let v = g.iter().enumerate().fold(0u8, |acc, (n, &gn)| acc | step(8 * gn - total) << n);
    Code::byte(v)
}

fn check_k(k: u8) -> Result<()> {
    if !(1..=8).contains(&k) {
        return Err(Error::InvalidParameter(format!("LDP k must be in 1..=8, got {k}")));
    }
    Ok(())
}

fn ldp_bits(m: &KirschResponses, k: u8, rank_key: RankKey) -> u8 {
    // at or above the k-th highest <=> fewer than k strictly above
    let keys = m.0.map(|v| rank_key.key(v));
    (0..8).fold(0u8, |acc, n| {
        let above = keys.iter().filter(|&&q| q > keys[n]).count();
        acc | ((above < k as usize) as u8) << n
    })
}

/// Local directional pattern: set the bits of responses at or above the k-th
/// highest one.
pub fn ldp_code(m: &KirschResponses, k: u8, rank_key: RankKey) -> Result<Code> {
    check_k(k)?;
    Ok(Code::byte(ldp_bits(m, k, rank_key)))
}

/// Rotation-invariant LDP: the LDP word rotated so the strongest direction
/// lands on the most significant bit, followed by the rest of the ring in
/// circular order.
pub fn ldp_ri_code(m: &KirschResponses, k: u8, rank_key: RankKey) -> Result<Code> {
    check_k(k)?;
    Ok(Code::byte(ldp_ri_bits(m, k, rank_key)))
}

fn ldp_ri_bits(m: &KirschResponses, k: u8, rank_key: RankKey) -> u8 {
    let bits = ldp_bits(m, k, rank_key);
    let strongest = rank_exponents(m, rank_key).strongest() as u32;
    // bit n moves to 7 - (n - n*) mod 8, i.e. reverse then rotate
    bits.reverse_bits().rotate_left(strongest)
}

/// Local optimal oriented pattern: LBP thresholding with exponents taken
/// from the rank of each direction's Kirsch response.
pub fn loop_code(p: &Patch3, rank_key: RankKey) -> Code {
    let w = rank_exponents(&kirsch_responses(p), rank_key).exponents;
    let c = p.center as i32;
    let v = p
        .neighbors
        .iter()
        .zip(w)
        .fold(0u8, |acc, (&i, wn)| acc | step(i as i32 - c) << wn);
    Code::byte(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DescriptorKind {
    Lbp,
    Mct,
    Lgp,
    Ldp,
    LdpRi,
    Loop,
}

impl DescriptorKind {
    pub const ALL: [DescriptorKind; 6] = [
        DescriptorKind::Lbp,
        DescriptorKind::Mct,
        DescriptorKind::Lgp,
        DescriptorKind::Ldp,
        DescriptorKind::LdpRi,
        DescriptorKind::Loop,
    ];

    pub fn bits(self) -> u8 {
        match self {
            DescriptorKind::Mct => 9,
            _ => 8,
        }
    }

    pub fn bins(self) -> usize {
        1 << self.bits()
    }

    pub fn name(self) -> &'static str {
        match self {
            DescriptorKind::Lbp => "lbp",
            DescriptorKind::Mct => "mct",
            DescriptorKind::Lgp => "lgp",
            DescriptorKind::Ldp => "ldp",
            DescriptorKind::LdpRi => "ldp-ri",
            DescriptorKind::Loop => "loop",
        }
    }
}

impl fmt::Display for DescriptorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DescriptorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DescriptorKind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .or_else(|| (s.eq_ignore_ascii_case("ldpri") || s.eq_ignore_ascii_case("ldp_ri")).then_some(DescriptorKind::LdpRi))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown descriptor kind {s:?}")))
    }
}

/// A validated descriptor configuration that maps patches to codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Encoder {
    kind: DescriptorKind,
    k: u8,
    rank_key: RankKey,
}

impl Encoder {
    pub const DEFAULT_K: u8 = 3;

    /// `k` is only consulted by the LDP family but is validated for all kinds.
    pub fn new(kind: DescriptorKind, k: u8, rank_key: RankKey) -> Result<Self> {
        check_k(k)?;
        Ok(Encoder { kind, k, rank_key })
    }

    pub fn with_defaults(kind: DescriptorKind) -> Self {
        Encoder { kind, k: Self::DEFAULT_K, rank_key: RankKey::Signed }
    }

    pub fn kind(&self) -> DescriptorKind {
        self.kind
    }

    pub fn k(&self) -> u8 {
        self.k
    }

    pub fn rank_key(&self) -> RankKey {
        self.rank_key
    }

    #[inline]
    pub fn encode(&self, p: &Patch3) -> Code {
        match self.kind {
            DescriptorKind::Lbp => lbp_code(p),
            DescriptorKind::Mct => mct_code(p),
            DescriptorKind::Lgp => lgp_code(p),
            DescriptorKind::Ldp => Code::byte(ldp_bits(&kirsch_responses(p), self.k, self.rank_key)),
            DescriptorKind::LdpRi => Code::byte(ldp_ri_bits(&kirsch_responses(p), self.k, self.rank_key)),
            DescriptorKind::Loop => loop_code(p, self.rank_key),
        }
    }
}

/// Image of code values; `bits` is 8 or 9.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeMap {
    pub width: usize,
    pub height: usize,
    pub bits: u8,
    pub data: Vec<u16>,
}

impl CodeMap {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.data[y * self.width + x]
    }

    /// 8-bit maps as a [`GrayImage`]; fails for 9-bit (MCT) maps.
    pub fn to_gray_image(&self) -> Result<GrayImage> {
        if self.bits > 8 {
            return Err(Error::InvalidParameter(format!(
                "{}-bit code map does not fit an 8-bit image",
                self.bits
            )));
        }
        GrayImage::new(self.width, self.height, self.data.iter().map(|&v| v as u8).collect())
    }
}

/// Code of every pixel that has a full 3x3 neighborhood.
///
/// The output is `(width-2) x (height-2)`; output `(x, y)` is the code of the
/// patch centered at input `(x+1, y+1)`. Rows are computed in parallel.
pub fn code_map(img: &GrayImage, encoder: &Encoder) -> Result<CodeMap> {
    img.ensure_min_size()?;
    let (w, h) = (img.width() - 2, img.height() - 2);
    let mut data = vec![0u16; w * h];
    data.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, out) in row.iter_mut().enumerate() {
            *out = encoder.encode(&Patch3::from_image(img, x + 1, y + 1)).value();
        }
    });
    Ok(CodeMap { width: w, height: h, bits: encoder.kind.bits(), data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn patch(center: u8, neighbors: [u8; 8]) -> Patch3 {
        Patch3::new(center, neighbors)
    }

    fn tie_free(m: &KirschResponses) -> bool {
        let mut v = m.0;
        v.sort_unstable();
        v.windows(2).all(|w| w[0] != w[1])
    }

    #[test]
    fn kirsch_constant_patch_is_zero() {
        for v in [0u8, 1, 128, 255] {
            assert_eq!(kirsch_responses(&patch(v, [v; 8])).0, [0; 8]);
        }
    }

    #[test]
    fn kirsch_single_bright_corner() {
        let m = kirsch_responses(&patch(0, [255, 0, 0, 0, 0, 0, 0, 0]));
        assert_eq!(m.0, [1275, 1275, -765, -765, -765, -765, -765, 1275]);
    }

    #[test]
    fn packed_ranking_agrees_with_comparator_sort() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..5000 {
            // few distinct values so that ties are common
            let p = patch(rng.random_range(0..4) * 85, std::array::from_fn(|_| rng.random_range(0..4) * 85));
            let m = kirsch_responses(&p);
            for key in [RankKey::Signed, RankKey::Absolute] {
                let mut order: [usize; 8] = std::array::from_fn(|n| n);
                order.sort_by(|&a, &b| rank_cmp(&m, key, a, b));
                let mut want = [0u8; 8];
                for (r, &n) in order.iter().enumerate() {
                    want[n] = r as u8;
                }
                assert_eq!(packed_ranks(&m, key), want);
            }
        }
    }

    #[test]
    fn out_of_range_responses_still_rank() {
        let m = KirschResponses([i32::MAX / 4, -i32::MAX / 4, 0, 1, 2, 3, 4, 5]);
        let w = rank_exponents(&m, RankKey::Signed).exponents;
        assert_eq!(w, [7, 0, 1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn kirsch_within_bounds() {
        let m = kirsch_responses(&patch(0, [255, 255, 255, 0, 0, 0, 0, 0]));
        assert_eq!(m.0[1], KIRSCH_MAX);
        let m = kirsch_responses(&patch(0, [0, 0, 0, 255, 255, 255, 255, 255]));
        assert_eq!(m.0[1], -KIRSCH_MAX);
    }

    #[test]
    fn lbp_examples() {
        assert_eq!(lbp_code(&patch(7, [7; 8])).value(), 255);
        assert_eq!(lbp_code(&patch(255, [0; 8])).value(), 0);
        assert_eq!(lbp_code(&patch(5, [1, 2, 3, 4, 5, 6, 7, 8])).value(), 240);
    }

    #[test]
    fn mct_examples() {
        let c = mct_code(&patch(40, [40; 8]));
        assert_eq!((c.value(), c.bits()), (511, 9));
        assert_eq!(mct_code(&patch(0, [9; 8])).value(), 255);
        assert_eq!(mct_code(&patch(90, [0; 8])).value(), 256);
    }

    #[test]
    fn lgp_examples() {
        assert_eq!(lgp_code(&patch(3, [3; 8])).value(), 255);
        assert_eq!(lgp_code(&patch(10, [10, 10, 10, 10, 10, 10, 10, 90])).value(), 128);
        assert_eq!(lgp_code(&patch(0, [8, 8, 8, 8, 0, 0, 0, 0])).value(), 15);
    }

    #[test]
    fn ldp_examples() {
        let m = KirschResponses([900, 100, 200, 300, 400, 500, 600, 700]);
        assert_eq!(ldp_code(&m, 3, RankKey::Signed).unwrap().value(), 193);
        assert_eq!(ldp_code(&m, 8, RankKey::Signed).unwrap().value(), 255);
        let flat = KirschResponses([42; 8]);
        assert_eq!(ldp_code(&flat, 3, RankKey::Signed).unwrap().value(), 255);
        assert!(ldp_code(&m, 0, RankKey::Signed).is_err());
        assert!(ldp_code(&m, 9, RankKey::Signed).is_err());
    }

    #[test]
    fn ldp_absolute_key_uses_magnitudes() {
        let m = KirschResponses([-900, 100, 200, 300, 400, 500, 600, 700]);
        // by magnitude the top three are -900, 700, 600
        assert_eq!(ldp_code(&m, 3, RankKey::Absolute).unwrap().value(), 0b1100_0001);
        assert_eq!(ldp_code(&m, 3, RankKey::Signed).unwrap().value(), 0b1110_0000);
    }

    #[test]
    fn ldp_ri_examples() {
        let m = KirschResponses([900, 100, 200, 300, 400, 500, 600, 700]);
        assert_eq!(ldp_ri_code(&m, 3, RankKey::Signed).unwrap().value(), 131);
        assert!(ldp_ri_code(&m, 0, RankKey::Signed).is_err());
    }

    #[test]
    fn rank_examples() {
        let m = KirschResponses([800, 100, 200, 300, 400, 500, 600, 700]);
        assert_eq!(rank_exponents(&m, RankKey::Signed).exponents, [7, 0, 1, 2, 3, 4, 5, 6]);
        let flat = KirschResponses([0; 8]);
        assert_eq!(rank_exponents(&flat, RankKey::Signed).exponents, [0, 1, 2, 3, 4, 5, 6, 7]);
    }

    /// Responses of the real patch with ring (1,0,0,1,15,238,231,235): the two
    /// lowest responses tie at -2155, one flanked by -275 (difference 1880),
    /// the other by -2035 (difference 120).
    #[test]
    fn tied_pair_prefers_more_differing_neighbor() {
        let p = patch(0, [1, 0, 0, 1, 15, 238, 231, 235]);
        let m = kirsch_responses(&p);
        assert_eq!(m.0, [-275, -2155, -2155, -2035, -131, 1709, 3469, 1573]);
        assert_eq!(tie_break_key(&m, 1), 1880);
        assert_eq!(tie_break_key(&m, 2), 120);
        assert_eq!(tie_break(&m, &[1, 2]), vec![2, 1]);
        let w = rank_exponents(&m, RankKey::Signed).exponents;
        assert_eq!((w[1], w[2]), (1, 0));
        assert_eq!(w, [3, 1, 0, 2, 4, 6, 7, 5]);
    }

    #[test]
    fn tie_break_residual_falls_back_to_index() {
        let flat = KirschResponses([5; 8]);
        assert_eq!(tie_break(&flat, &[6, 2, 4]), vec![2, 4, 6]);
        assert_eq!(tie_break(&flat, &(0..8).collect::<Vec<_>>()), (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn tie_break_random_triples_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let mut m = [0i32; 8];
            for v in m.iter_mut() {
                *v = rng.random_range(-40..40);
            }
            let shared = rng.random_range(-40..40);
            let mut tied: Vec<usize> = (0..8).collect();
            for i in (1..8).rev() {
                tied.swap(i, rng.random_range(0..=i));
            }
            tied.truncate(3);
            for &t in &tied {
                m[t] = shared;
            }
            let m = KirschResponses(m);
            let expected = oracle::tie_order_by_enumeration(&m.0, &tied);
            assert_eq!(tie_break(&m, &tied), expected, "m={:?} tied={tied:?}", m.0);
        }
    }

    #[test]
    fn loop_examples() {
        assert_eq!(loop_code(&patch(9, [9; 8]), RankKey::Signed).value(), 255);
        assert_eq!(loop_code(&patch(255, [0; 8]), RankKey::Signed).value(), 0);
        // LBP bits at n = 0 and n = 7 only; their directions hold the two
        // strongest Kirsch responses
        let p = patch(100, [200, 50, 0, 0, 0, 0, 0, 150]);
        let m = kirsch_responses(&p);
        assert_eq!(m.0, [2000, 800, -800, -1200, -1200, -1200, 0, 1600]);
        let w = rank_exponents(&m, RankKey::Signed).exponents;
        assert_eq!((w[0], w[7]), (7, 6));
        assert_eq!(lbp_code(&p).value(), 0b1000_0001);
        assert_eq!(loop_code(&p, RankKey::Signed).value(), 192);
        assert_eq!(oracle::loop_code(&p, RankKey::Signed), 192);
    }

    #[test]
    fn lbp_is_rotation_variant() {
        let p = patch(5, [1, 2, 3, 4, 5, 6, 7, 8]);
        assert_ne!(lbp_code(&p.rotated(1)), lbp_code(&p));
    }

    #[test]
    fn patch_rotation_matches_image_rotation() {
        let img = GrayImage::from_fn(3, 3, |x, y| (x * 3 + y * 50) as u8).unwrap();
        let p = Patch3::from_image(&img, 1, 1);
        for q in 0..4 {
            let r = img.rotate_quarter_turns(q);
            assert_eq!(Patch3::from_image(&r, 1, 1), p.rotated(q));
        }
    }

    #[test]
    fn code_map_shapes_and_values() {
        let enc = Encoder::with_defaults(DescriptorKind::Loop);
        let map = code_map(&GrayImage::filled(10, 10, 77).unwrap(), &enc).unwrap();
        assert_eq!((map.width, map.height), (8, 8));
        assert!(map.data.iter().all(|&v| v == 255));

        let img = GrayImage::new(3, 3, vec![1, 2, 3, 8, 5, 4, 7, 6, 5]).unwrap();
        let p = Patch3::from_image(&img, 1, 1);
        assert_eq!(p, patch(5, [1, 2, 3, 4, 5, 6, 7, 8]));
        for kind in DescriptorKind::ALL {
            let enc = Encoder::with_defaults(kind);
            let map = code_map(&img, &enc).unwrap();
            assert_eq!((map.width, map.height, map.bits), (1, 1, kind.bits()));
            assert_eq!(map.data[0], enc.encode(&p).value());
        }

        let tiny = GrayImage::filled(2, 5, 0).unwrap();
        assert!(matches!(code_map(&tiny, &enc), Err(Error::ImageTooSmall { .. })));
    }

    #[test]
    fn code_map_matches_naive_loop_on_random_image() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let img = GrayImage::from_fn(16, 16, |_, _| rng.random()).unwrap();
        for kind in DescriptorKind::ALL {
            for key in [RankKey::Signed, RankKey::Absolute] {
                let enc = Encoder::new(kind, 4, key).unwrap();
                let map = code_map(&img, &enc).unwrap();
                assert_eq!(map.data, oracle::code_map(&img, kind, 4, key), "{kind} {key}");
            }
        }
    }

    #[test]
    fn code_map_is_thread_count_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let img = GrayImage::from_fn(64, 48, |_, _| rng.random()).unwrap();
        let enc = Encoder::with_defaults(DescriptorKind::Loop);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let single = pool.install(|| code_map(&img, &enc).unwrap());
        assert_eq!(single, code_map(&img, &enc).unwrap());
    }

    #[test]
    fn eight_bit_maps_convert_nine_bit_do_not() {
        let img = GrayImage::filled(4, 4, 1).unwrap();
        let lbp = code_map(&img, &Encoder::with_defaults(DescriptorKind::Lbp)).unwrap();
        assert_eq!(lbp.to_gray_image().unwrap().data(), &[255u8; 4]);
        let mct = code_map(&img, &Encoder::with_defaults(DescriptorKind::Mct)).unwrap();
        assert!(mct.to_gray_image().is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in DescriptorKind::ALL {
            assert_eq!(kind.name().parse::<DescriptorKind>().unwrap(), kind);
        }
        assert!("orb".parse::<DescriptorKind>().is_err());
        assert_eq!("absolute".parse::<RankKey>().unwrap(), RankKey::Absolute);
    }

    fn arb_patch() -> impl Strategy<Value = Patch3> {
        (any::<u8>(), any::<[u8; 8]>()).prop_map(|(c, n)| Patch3::new(c, n))
    }

    proptest! {
        #[test]
        fn kirsch_matches_mask_oracle(p in arb_patch()) {
            let m = kirsch_responses(&p);
            prop_assert_eq!(m.0, oracle::kirsch_responses(&p));
            prop_assert!(m.0.iter().all(|v| v.abs() <= KIRSCH_MAX));
        }

        #[test]
        fn rank_is_permutation(m in any::<[i16; 8]>(), absolute in any::<bool>()) {
            let m = KirschResponses(m.map(i32::from));
            let key = if absolute { RankKey::Absolute } else { RankKey::Signed };
            let mut w = rank_exponents(&m, key).exponents;
            w.sort_unstable();
            prop_assert_eq!(w, [0, 1, 2, 3, 4, 5, 6, 7]);
        }

        #[test]
        fn rank_is_monotone(m in any::<[i16; 8]>()) {
            let m = KirschResponses(m.map(i32::from));
            let w = rank_exponents(&m, RankKey::Signed).exponents;
            for a in 0..8 {
                for b in 0..8 {
                    if m.0[a] > m.0[b] {
                        prop_assert!(w[a] > w[b]);
                    }
                }
            }
        }

        #[test]
        fn loop_rotation_invariant(p in arb_patch(), q in 1usize..4) {
            let m = kirsch_responses(&p);
            prop_assume!(tie_free(&m));
            prop_assert_eq!(loop_code(&p.rotated(q), RankKey::Signed), loop_code(&p, RankKey::Signed));
        }

        #[test]
        fn ldp_popcount_is_k(m in any::<[i16; 8]>(), k in 1u8..=8) {
            let m = KirschResponses(m.map(i32::from));
            prop_assume!(tie_free(&m));
            prop_assert_eq!(ldp_code(&m, k, RankKey::Signed).unwrap().value().count_ones(), k as u32);
        }

        #[test]
        fn ldp_ri_leading_one_and_shift_invariance(m in any::<[i16; 8]>(), k in 1u8..=8) {
            let m = KirschResponses(m.map(i32::from));
            prop_assume!(tie_free(&m));
            let code = ldp_ri_code(&m, k, RankKey::Signed).unwrap().value();
            prop_assert!(code & 0x80 != 0);
            for s in 1..8 {
                prop_assert_eq!(ldp_ri_code(&m.rotated(s), k, RankKey::Signed).unwrap().value(), code);
            }
        }
    }
}
