//! Brute-force reference implementations used only by tests.
//!
//! Everything here works on explicit 3x3 grids and literal mask matrices and
//! avoids the closed forms and sort-based ranking of the production code.

use crate::kernels::{Patch3, RankKey};
use crate::raster::GrayImage;

/// The eight Kirsch compass masks, NW, N, NE, E, SE, S, SW, W: direction `n`
/// points at ring position `n`.
pub const KIRSCH_MASKS: [[[i32; 3]; 3]; 8] = [
    [[5, 5, -3], [5, 0, -3], [-3, -3, -3]],
    [[5, 5, 5], [-3, 0, -3], [-3, -3, -3]],
    [[-3, 5, 5], [-3, 0, 5], [-3, -3, -3]],
    [[-3, -3, 5], [-3, 0, 5], [-3, -3, 5]],
    [[-3, -3, -3], [-3, 0, 5], [-3, 5, 5]],
    [[-3, -3, -3], [-3, 0, -3], [5, 5, 5]],
    [[-3, -3, -3], [5, 0, -3], [5, 5, -3]],
    [[5, -3, -3], [5, 0, -3], [5, -3, -3]],
];

/// `(row, col)` of each ring position in a 3x3 grid.
const RING: [(usize, usize); 8] = [(0, 0), (0, 1), (0, 2), (1, 2), (2, 2), (2, 1), (2, 0), (1, 0)];

pub fn grid(p: &Patch3) -> [[i32; 3]; 3] {
    let mut g = [[0i32; 3]; 3];
    g[1][1] = p.center as i32;
    for (n, &(r, c)) in RING.iter().enumerate() {
        g[r][c] = p.neighbors[n] as i32;
    }
    g
}

pub fn patch_from_grid(g: [[u8; 3]; 3]) -> Patch3 {
    Patch3::new(g[1][1], RING.map(|(r, c)| g[r][c]))
}

pub fn kirsch_responses(p: &Patch3) -> [i32; 8] {
    let g = grid(p);
    KIRSCH_MASKS.map(|mask| {
        let mut acc = 0;
        for r in 0..3 {
            for c in 0..3 {
                acc += mask[r][c] * g[r][c];
            }
        }
        acc
    })
}

pub fn lbp_code(p: &Patch3) -> u16 {
    let g = grid(p);
    let mut code = 0u16;
    for (n, &(r, c)) in RING.iter().enumerate() {
        if g[r][c] >= g[1][1] {
            code += 1 << n;
        }
    }
    code
}

pub fn mct_code(p: &Patch3) -> u16 {
    let g = grid(p);
    let mean = g.iter().flatten().sum::<i32>() as f64 / 9.0;
    let mut code = 0u16;
    for (n, &(r, c)) in RING.iter().enumerate() {
        if g[r][c] as f64 >= mean {
            code += 1 << n;
        }
    }
    if g[1][1] as f64 >= mean {
        code += 1 << 8;
    }
    code
}

pub fn lgp_code(p: &Patch3) -> u16 {
    let g = grid(p);
    let grads: Vec<f64> = RING.iter().map(|&(r, c)| (g[r][c] - g[1][1]).abs() as f64).collect();
    let mean = grads.iter().sum::<f64>() / 8.0;
    grads
        .iter()
        .enumerate()
        .filter(|(_, &gn)| gn >= mean)
        .map(|(n, _)| 1u16 << n)
        .sum()
}

fn key(m: i32, rank_key: RankKey) -> i32 {
    match rank_key {
        RankKey::Signed => m,
        RankKey::Absolute => m.abs(),
    }
}

/// Bit n set iff fewer than k responses are strictly above m_n.
pub fn ldp_code(m: &[i32; 8], k: u8, rank_key: RankKey) -> u16 {
    let mut code = 0u16;
    for n in 0..8 {
        let above = (0..8).filter(|&j| key(m[j], rank_key) > key(m[n], rank_key)).count();
        if above < k as usize {
            code += 1 << n;
        }
    }
    code
}

fn neighbor_spread(m: &[i32; 8], n: usize) -> i32 {
    let left = (m[n] - m[(n + 7) % 8]).abs();
    let right = (m[n] - m[(n + 1) % 8]).abs();
    if left > right {
        left
    } else {
        right
    }
}

/// True when direction `a` takes a lower exponent than direction `b`.
fn ranks_below(m: &[i32; 8], rank_key: RankKey, a: usize, b: usize) -> bool {
    let (ka, kb) = (key(m[a], rank_key), key(m[b], rank_key));
    if ka != kb {
        return ka < kb;
    }
    let (sa, sb) = (neighbor_spread(m, a), neighbor_spread(m, b));
    if sa != sb {
        return sa < sb;
    }
    a < b
}

/// Exponent of each direction by counting how many directions rank below it.
pub fn rank_exponents(m: &[i32; 8], rank_key: RankKey) -> [u8; 8] {
    std::array::from_fn(|n| (0..8).filter(|&j| j != n && ranks_below(m, rank_key, j, n)).count() as u8)
}

/// Lowest-to-highest order of `tied` by enumerating every candidate order and
/// keeping the one consistent with the pairwise rule.
pub fn tie_order_by_enumeration(m: &[i32; 8], tied: &[usize]) -> Vec<usize> {
    let mut best: Option<Vec<usize>> = None;
    permutations(tied.to_vec(), 0, &mut |perm| {
        let consistent = perm
            .windows(2)
            .all(|w| ranks_below(m, RankKey::Signed, w[0], w[1]));
        if consistent {
            best = Some(perm.to_vec());
        }
    });
    best.expect("pairwise rule is a strict total order")
}

fn permutations(mut items: Vec<usize>, start: usize, visit: &mut dyn FnMut(&[usize])) {
    if start == items.len() {
        visit(&items);
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permutations(items.clone(), start + 1, visit);
        items.swap(start, i);
    }
}

pub fn ldp_ri_code(m: &[i32; 8], k: u8, rank_key: RankKey) -> u16 {
    let ldp = ldp_code(m, k, rank_key);
    let w = rank_exponents(m, rank_key);
    let strongest = (0..8).find(|&n| w[n] == 7).unwrap();
    let mut code = 0u16;
    for n in 0..8 {
        if ldp & (1 << n) != 0 {
            code += 1 << (7 - (n + 8 - strongest) % 8);
        }
    }
    code
}

pub fn loop_code(p: &Patch3, rank_key: RankKey) -> u16 {
    let m = kirsch_responses(p);
    let w = rank_exponents(&m, rank_key);
    let g = grid(p);
    let mut code = 0u16;
    for (n, &(r, c)) in RING.iter().enumerate() {
        if g[r][c] >= g[1][1] {
            code += 1 << w[n];
        }
    }
    code
}

pub fn code_of(kind: crate::kernels::DescriptorKind, p: &Patch3, k: u8, rank_key: RankKey) -> u16 {
    use crate::kernels::DescriptorKind::*;
    match kind {
        Lbp => lbp_code(p),
        Mct => mct_code(p),
        Lgp => lgp_code(p),
        Ldp => ldp_code(&kirsch_responses(p), k, rank_key),
        LdpRi => ldp_ri_code(&kirsch_responses(p), k, rank_key),
        Loop => loop_code(p, rank_key),
    }
}

/// Naive double loop over interior pixels.
pub fn code_map(img: &GrayImage, kind: crate::kernels::DescriptorKind, k: u8, rank_key: RankKey) -> Vec<u16> {
    let mut out = Vec::new();
    for y in 1..img.height() - 1 {
        for x in 1..img.width() - 1 {
            let mut g = [[0u8; 3]; 3];
            for (r, row) in g.iter_mut().enumerate() {
                for (c, v) in row.iter_mut().enumerate() {
                    *v = img.get(x + c - 1, y + r - 1);
                }
            }
            out.push(code_of(kind, &patch_from_grid(g), k, rank_key));
        }
    }
    out
}

/// Counts per code value divided by the number of codes.
pub fn histogram(codes: &[u16], bins: usize) -> Vec<f64> {
    let mut counts = vec![0usize; bins];
    for &c in codes {
        counts[c as usize] += 1;
    }
    counts.iter().map(|&n| n as f64 / codes.len() as f64).collect()
}

/// Upper binomial tail via Pascal's triangle in u128 (exact for n <= 120).
pub fn binom_one_tail(n: u32, w: u32) -> f64 {
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = vec![1u128; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    let tail: u128 = row[w as usize..].iter().sum();
    tail as f64 / 2f64.powi(n as i32)
}

/// Every 3x3 patch over the intensity alphabet `{0, 128, 255}`.
pub fn three_level_patches() -> impl Iterator<Item = Patch3> {
    const LEVELS: [u8; 3] = [0, 128, 255];
    (0..3usize.pow(9)).map(|mut idx| {
        let mut g = [[0u8; 3]; 3];
        for cell in g.iter_mut().flatten() {
            *cell = LEVELS[idx % 3];
            idx /= 3;
        }
        patch_from_grid(g)
    })
}
