//! Topology-preserving thinning to a one-pixel-wide skeleton.
//!
//! Two alternating sub-iterations in the Zhang–Suen style: the first peels
//! south/east border pixels, the second north/west ones. Candidates are marked
//! against a snapshot of the mask and then re-verified against the live mask
//! in raster order before deletion, so simultaneous deletions can never split
//! a component. A pixel is deletable when it has at least two foreground
//! neighbors (end points are kept) and its Yokoi 8-connectivity number is 1.

use std::sync::OnceLock;

use rayon::prelude::*;

use super::{Mask, RasterGrid};
use crate::error::Result;

// Neighbor bit order: E, NE, N, NW, W, SW, S, SE.
const OFFSETS: [(isize, isize); 8] = [
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
];
const E: u8 = 1 << 0;
const N: u8 = 1 << 2;
const W: u8 = 1 << 4;
const S: u8 = 1 << 6;

/// Yokoi connectivity number for 8-connected foreground.
pub(crate) fn connectivity_number(code: u8) -> u32 {
    let x = |k: usize| u32::from(code >> (k % 8) & 1);
    let xb = |k: usize| 1 - x(k);
    [0usize, 2, 4, 6]
        .iter()
        .map(|&k| xb(k) - xb(k) * xb(k + 1) * xb(k + 2))
        .sum()
}

/// Removing the pixel preserves topology and does not shorten a branch.
#[inline]
pub(crate) fn is_deletable(code: u8) -> bool {
    code.count_ones() >= 2 && connectivity_number(code) == 1
}

fn luts() -> &'static [[bool; 256]; 2] {
    static LUT: OnceLock<[[bool; 256]; 2]> = OnceLock::new();
    LUT.get_or_init(|| {
        let mut lut = [[false; 256]; 2];
        for code in 0..=255u8 {
            let has = |bit: u8| code & bit != 0;
            if !is_deletable(code) {
                continue;
            }
            let (n, e, s, w) = (has(N), has(E), has(S), has(W));
            lut[0][code as usize] = !(n && e && s) && !(e && s && w);
            lut[1][code as usize] = !(n && e && w) && !(n && s && w);
        }
        lut
    })
}

#[inline]
pub(crate) fn neighbor_code(mask: &Mask, row: usize, col: usize) -> u8 {
    let (r, c) = (row as isize, col as isize);
    let mut code = 0u8;
    for (k, (dr, dc)) in OFFSETS.iter().enumerate() {
        if mask.get_signed(r + dr, c + dc) {
            code |= 1 << k;
        }
    }
    code
}

/// Thins `mask` until no deletable pixel remains and no 2x2 block is left.
pub fn skeletonize_mask(mask: &Mask) -> Mask {
    let mut img = mask.clone();
    let (w, h) = (img.width, img.height);
    if w == 0 || h == 0 {
        return img;
    }
    // Rows whose 3-row neighborhood changed since each sub-iteration last looked.
    let mut dirty = [vec![true; h], vec![true; h]];
    loop {
        thin_to_fixed_point(&mut img, &mut dirty);
        if !repair_blocks(&mut img, &mut dirty) {
            break;
        }
    }
    img
}

fn mark_dirty(dirty: &mut [Vec<bool>; 2], row: usize) {
    let h = dirty[0].len();
    for d in dirty.iter_mut() {
        for rr in row.saturating_sub(1)..=(row + 1).min(h - 1) {
            d[rr] = true;
        }
    }
}

fn thin_to_fixed_point(img: &mut Mask, dirty: &mut [Vec<bool>; 2]) {
    let (w, h) = (img.width, img.height);
    let lut = luts();
    loop {
        let mut changed = false;
        for pass in 0..2 {
            let table = &lut[pass];
            let snapshot = &*img;
            let rows: Vec<usize> = (0..h).filter(|&r| dirty[pass][r]).collect();
            let candidates: Vec<usize> = rows
                .par_iter()
                .flat_map_iter(|&r| {
                    (0..w).filter_map(move |c| {
                        let idx = r * w + c;
                        (snapshot.data[idx] != 0 && table[neighbor_code(snapshot, r, c) as usize])
                            .then_some(idx)
                    })
                })
                .collect();
            for r in rows {
                dirty[pass][r] = false;
            }
            for idx in candidates {
                let (r, c) = (idx / w, idx % w);
                if table[neighbor_code(img, r, c) as usize] {
                    img.data[idx] = 0;
                    changed = true;
                    mark_dirty(dirty, r);
                }
            }
        }
        if !changed {
            break;
        }
    }
}

fn all_blocks(mask: &Mask) -> Vec<(usize, usize)> {
    let (w, h) = (mask.width, mask.height);
    (0..h.saturating_sub(1))
        .into_par_iter()
        .flat_map_iter(|r| {
            (0..w.saturating_sub(1)).filter_map(move |c| {
                (mask.get(r, c)
                    && mask.get(r, c + 1)
                    && mask.get(r + 1, c)
                    && mask.get(r + 1, c + 1))
                .then_some((r, c))
            })
        })
        .collect()
}

fn block_at(mask: &Mask, r: isize, c: isize) -> bool {
    mask.get_signed(r, c)
        && mask.get_signed(r, c + 1)
        && mask.get_signed(r + 1, c)
        && mask.get_signed(r + 1, c + 1)
}

/// A 2x2 block survives thinning only when every corner is a cut pixel. In
/// an X crossing each corner carries one diagonal spoke, and the block is
/// broken by moving one corner `p` outward to `a`, next to its spoke, which
/// keeps the spoke attached to the remaining three corners. Other blocks sit
/// in dense junctions, where a corner can usually be deleted once connectivity
/// is judged beyond its 3x3 neighborhood. When every deletion would merge two
/// background faces, the corner next to the smallest face goes.
fn repair_blocks(img: &mut Mask, dirty: &mut [Vec<bool>; 2]) -> bool {
    let mut repaired = false;
    'blocks: for (r, c) in all_blocks(img) {
        let (r, c) = (r as isize, c as isize);
        if !block_at(img, r, c) {
            continue;
        }
        for (pr, pc, dr, dc) in [
            (r, c, -1, -1),
            (r, c + 1, -1, 1),
            (r + 1, c, 1, -1),
            (r + 1, c + 1, 1, 1),
        ] {
            // Corner neighbors: three block pixels plus the spoke, nothing else.
            let mut want = 0u8;
            for (k, off) in OFFSETS.iter().enumerate() {
                if [(dr, dc), (-dr, 0), (0, -dc), (-dr, -dc)].contains(off) {
                    want |= 1 << k;
                }
            }
            if neighbor_code(img, pr as usize, pc as usize) != want {
                continue;
            }
            // Moving `p` to `a` could merge two components through `far`, the
            // one neighbor of `a` not already known to be background or
            // attached to the spoke.
            for ((ar, ac), far) in [
                ((pr + dr, pc), (pr + 2 * dr, pc - dc)),
                ((pr, pc + dc), (pr - dr, pc + 2 * dc)),
            ] {
                if ar < 0 || ac < 0 || ar as usize >= img.height || ac as usize >= img.width {
                    continue;
                }
                if img.get_signed(ar, ac) || img.get_signed(far.0, far.1) {
                    continue;
                }
                img.set(pr as usize, pc as usize, false);
                img.set(ar as usize, ac as usize, true);
                let new_block =
                    (-1..=0).any(|br| (-1..=0).any(|bc| block_at(img, ar + br, ac + bc)));
                if new_block {
                    img.set(ar as usize, ac as usize, false);
                    img.set(pr as usize, pc as usize, true);
                    continue;
                }
                mark_dirty(dirty, pr as usize);
                mark_dirty(dirty, ar as usize);
                repaired = true;
                continue 'blocks;
            }
        }
        let corners = [(r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1)];
        let pick = corners
            .iter()
            .copied()
            .find(|&(pr, pc)| connected_after_delete(img, pr, pc, true))
            .or_else(|| {
                // No deletion keeps the topology: open the smallest adjacent
                // background face instead, keeping the foreground connected.
                corners
                    .iter()
                    .copied()
                    .filter(|&(pr, pc)| connected_after_delete(img, pr, pc, false))
                    .min_by_key(|&(pr, pc)| smallest_face(img, pr, pc))
            });
        if let Some((pr, pc)) = pick {
            img.set(pr as usize, pc as usize, false);
            mark_dirty(dirty, pr as usize);
            repaired = true;
        }
    }
    repaired
}

const STEPS4: [(isize, isize); 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];

fn foreground_neighbors(img: &Mask, r: isize, c: isize) -> Vec<(isize, isize)> {
    OFFSETS
        .iter()
        .map(|(dr, dc)| (r + dr, c + dc))
        .filter(|&(rr, cc)| img.get_signed(rr, cc))
        .collect()
}

fn background_neighbors(img: &Mask, r: isize, c: isize) -> Vec<(isize, isize)> {
    STEPS4
        .iter()
        .map(|(dr, dc)| (r + dr, c + dc))
        .filter(|&(rr, cc)| !img.get_signed(rr, cc))
        .collect()
}

/// Whether deleting `(r, c)` keeps its foreground neighbors 8-connected and,
/// with `keep_faces`, also keeps its background 4-neighbors in one face.
/// Connectivity is tried in windows growing up to the whole image plus a
/// one-pixel background border, where the answer is exact.
fn connected_after_delete(img: &Mask, r: isize, c: isize, keep_faces: bool) -> bool {
    let fg = foreground_neighbors(img, r, c);
    let bg = background_neighbors(img, r, c);
    if fg.is_empty() || bg.is_empty() {
        return false;
    }
    let full = img.width.max(img.height) as isize + 1;
    let mut radius = 6;
    loop {
        let radius_now = radius.min(full);
        if reaches_all(img, (r, c), radius_now, &fg, true, &OFFSETS)
            && (!keep_faces || reaches_all(img, (r, c), radius_now, &bg, false, &STEPS4))
        {
            return true;
        }
        if radius >= full {
            return false;
        }
        radius *= 4;
    }
}

/// Whether every target is reachable from the first through pixels of value
/// `on`, within the window of `radius` around `p` and avoiding `p`.
fn reaches_all(
    img: &Mask,
    p: (isize, isize),
    radius: isize,
    targets: &[(isize, isize)],
    on: bool,
    steps: &[(isize, isize)],
) -> bool {
    let (r0, r1) = (
        (p.0 - radius).max(-1),
        (p.0 + radius).min(img.height as isize),
    );
    let (c0, c1) = (
        (p.1 - radius).max(-1),
        (p.1 + radius).min(img.width as isize),
    );
    let cols = (c1 - c0 + 1) as usize;
    let inside =
        |rr: isize, cc: isize| (r0..=r1).contains(&rr) && (c0..=c1).contains(&cc) && (rr, cc) != p;
    let key = |rr: isize, cc: isize| (rr - r0) as usize * cols + (cc - c0) as usize;
    let mut seen = vec![false; (r1 - r0 + 1) as usize * cols];
    let mut stack = vec![targets[0]];
    seen[key(targets[0].0, targets[0].1)] = true;
    while let Some((rr, cc)) = stack.pop() {
        for (dr, dc) in steps {
            let (nr, nc) = (rr + dr, cc + dc);
            if inside(nr, nc) && img.get_signed(nr, nc) == on && !seen[key(nr, nc)] {
                seen[key(nr, nc)] = true;
                stack.push((nr, nc));
            }
        }
    }
    targets.iter().all(|&(rr, cc)| seen[key(rr, cc)])
}

/// Size of the smallest background face touching `(r, c)`, capped.
fn smallest_face(img: &Mask, r: isize, c: isize) -> usize {
    const CAP: usize = 4096;
    let (h, w) = (img.height as isize, img.width as isize);
    background_neighbors(img, r, c)
        .into_iter()
        .map(|start| {
            let mut seen = std::collections::HashSet::from([start]);
            let mut stack = vec![start];
            while let Some((rr, cc)) = stack.pop() {
                if seen.len() >= CAP {
                    break;
                }
                for (dr, dc) in STEPS4 {
                    let n = (rr + dr, cc + dc);
                    let within = (-1..=h).contains(&n.0) && (-1..=w).contains(&n.1);
                    if within && n != (r, c) && !img.get_signed(n.0, n.1) && seen.insert(n) {
                        stack.push(n);
                    }
                }
            }
            seen.len()
        })
        .min()
        .unwrap_or(CAP)
}

/// Morphological skeleton of a binary grid; geo-registration is preserved.
pub fn skeletonize(binary: &RasterGrid) -> Result<RasterGrid> {
    let mask = binary.to_mask()?;
    Ok(skeletonize_mask(&mask).into_grid(*binary.transform()))
}

/// First `(row, col)` (raster order) whose 2x2 block is all foreground.
pub fn find_block(mask: &Mask) -> Option<(usize, usize)> {
    for r in 0..mask.height.saturating_sub(1) {
        for c in 0..mask.width.saturating_sub(1) {
            if mask.get(r, c) && mask.get(r, c + 1) && mask.get(r + 1, c) && mask.get(r + 1, c + 1)
            {
                return Some((r, c));
            }
        }
    }
    None
}

/// Number of 8-connected foreground components.
pub fn component_count(mask: &Mask) -> usize {
    let (w, h) = (mask.width, mask.height);
    let mut seen = vec![false; w * h];
    let mut stack = Vec::new();
    let mut count = 0;
    for start in 0..w * h {
        if mask.data[start] == 0 || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            let (r, c) = ((idx / w) as isize, (idx % w) as isize);
            for (dr, dc) in OFFSETS {
                let (rr, cc) = (r + dr, c + dc);
                if mask.get_signed(rr, cc) {
                    let j = rr as usize * w + cc as usize;
                    if !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
    }
    count
}
