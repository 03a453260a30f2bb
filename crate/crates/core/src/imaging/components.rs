//! 8-connected component labeling (two-pass, union-find).

use super::BinaryMask;

#[derive(Clone, Debug, PartialEq)]
pub struct ConnectedComponent {
    /// 1-based, assigned in raster order of each component's first pixel.
    pub label: u32,
    pub area: usize,
    /// Inclusive `(x_min, y_min, x_max, y_max)`.
    pub bbox: (usize, usize, usize, usize),
    pub centroid: (f64, f64),
}

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) -> u32 {
        let (ra, rb) = (self.find(a), self.find(b));
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi as usize] = lo;
        lo
    }

    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }
}

/// Labels foreground pixels and returns the per-pixel label raster
/// (0 = background) along with one record per component, unsorted.
pub(crate) fn label(mask: &BinaryMask) -> (Vec<u32>, Vec<ConnectedComponent>) {
    let (w, h) = mask.dims();
    let bits = mask.as_bytes();
    let mut provisional = vec![0u32; w * h];
    let mut sets = DisjointSet { parent: vec![0] };

    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if bits[i] == 0 {
                continue;
            }
            // previously visited 8-neighbours: W, NW, N, NE
            let mut current = 0u32;
            let mut visit = |n: u32| {
                if n != 0 {
                    current = if current == 0 { n } else { sets.union(current, n) };
                }
            };
            if x > 0 {
                visit(provisional[i - 1]);
            }
            if y > 0 {
                let up = i - w;
                if x > 0 {
                    visit(provisional[up - 1]);
                }
                visit(provisional[up]);
                if x + 1 < w {
                    visit(provisional[up + 1]);
                }
            }
            provisional[i] = if current == 0 { sets.make() } else { current };
        }
    }

    // Resolve roots to final labels in raster order of first appearance.
    let mut final_of_root = vec![0u32; sets.parent.len()];
    let mut next = 0u32;
    let mut acc: Vec<(usize, usize, usize, usize, usize, f64, f64)> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let p = provisional[i];
            if p == 0 {
                continue;
            }
            let root = sets.find(p);
            if final_of_root[root as usize] == 0 {
                next += 1;
                final_of_root[root as usize] = next;
                acc.push((0, x, y, x, y, 0.0, 0.0));
            }
            let l = final_of_root[root as usize];
            provisional[i] = l;
            let a = &mut acc[(l - 1) as usize];
            a.0 += 1;
            a.1 = a.1.min(x);
            a.2 = a.2.min(y);
            a.3 = a.3.max(x);
            a.4 = a.4.max(y);
            a.5 += x as f64;
            a.6 += y as f64;
        }
    }

    let components = acc
        .into_iter()
        .enumerate()
        .map(|(k, (area, x0, y0, x1, y1, sx, sy))| ConnectedComponent {
            label: k as u32 + 1,
            area,
            bbox: (x0, y0, x1, y1),
            centroid: (sx / area as f64, sy / area as f64),
        })
        .collect();
    (provisional, components)
}

/// Components sorted by area descending; equal areas keep label order.
pub fn connected_components(mask: &BinaryMask) -> Vec<ConnectedComponent> {
    let (_, mut components) = label(mask);
    components.sort_by(|a, b| b.area.cmp(&a.area));
    components
}

/// Clears every component whose area is below `min_area`.
pub(crate) fn remove_small_components(mask: &BinaryMask, min_area: usize) -> BinaryMask {
    if min_area <= 1 {
        return mask.clone();
    }
    let (labels, components) = label(mask);
    let keep: Vec<bool> = std::iter::once(false)
        .chain(components.iter().map(|c| c.area >= min_area))
        .collect();
    let mut out = mask.clone();
    for (bit, &l) in out.bits_mut().iter_mut().zip(&labels) {
        *bit = u8::from(keep[l as usize]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_mask_has_no_components() {
        assert!(connected_components(&BinaryMask::zeros(4, 4)).is_empty());
    }

    #[test]
    fn single_block() {
        let m = BinaryMask::from_fn(32, 32, |x, y| (10..=12).contains(&x) && (20..=22).contains(&y));
        let cc = connected_components(&m);
        assert_eq!(cc.len(), 1);
        assert_eq!(cc[0].area, 9);
        assert_eq!(cc[0].centroid, (11.0, 21.0));
        assert_eq!(cc[0].bbox, (10, 20, 12, 22));
    }

    #[test]
    fn diagonal_pixels_join() {
        let m = BinaryMask::from_fn(4, 4, |x, y| (x, y) == (1, 1) || (x, y) == (2, 2));
        assert_eq!(connected_components(&m).len(), 1);
        let anti = BinaryMask::from_fn(4, 4, |x, y| (x, y) == (2, 1) || (x, y) == (1, 2));
        assert_eq!(connected_components(&anti).len(), 1);
    }

    #[test]
    fn u_shape_merges_late() {
        // two arms joined only on the last row
        let m = BinaryMask::from_fn(5, 4, |x, y| x == 0 || x == 4 || y == 3);
        let cc = connected_components(&m);
        assert_eq!(cc.len(), 1);
        assert_eq!(cc[0].area, 4 + 4 + 3);
    }

    #[test]
    fn sorted_by_area_then_label() {
        let m = BinaryMask::from_fn(10, 3, |x, _| x == 0 || x == 2 || (5..8).contains(&x));
        let cc = connected_components(&m);
        let summary: Vec<_> = cc.iter().map(|c| (c.label, c.area)).collect();
        assert_eq!(summary, vec![(3, 9), (1, 3), (2, 3)]);
    }

    #[test]
    fn small_components_removed() {
        let m = BinaryMask::from_fn(10, 3, |x, y| (x == 0 && y == 0) || (5..8).contains(&x));
        let out = remove_small_components(&m, 2);
        assert_eq!(out.count_ones(), 9);
        assert!(!out.get(0, 0));
    }
}
