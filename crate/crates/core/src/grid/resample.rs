use super::Grid2D;

/// Source coordinate of output index `i` under corner-aligned sampling.
#[inline]
pub(crate) fn corner_aligned(i: usize, src_len: usize, dst_len: usize) -> f64 {
    if dst_len == 1 {
        (src_len - 1) as f64 / 2.0
    } else {
        i as f64 * (src_len - 1) as f64 / (dst_len - 1) as f64
    }
}

/// Bilinear resize with corner-aligned sampling (output corners map onto
/// input corners). Output values never leave the input's `[min, max]`.
pub fn resample_bilinear(g: &Grid2D, new_h: usize, new_w: usize) -> Grid2D {
    assert!(new_h >= 1 && new_w >= 1, "resample target dims must be positive");
    if g.dims() == (new_h, new_w) {
        return g.clone();
    }
    let (h, w) = g.dims();
    let cols: Vec<(usize, usize, f64)> = (0..new_w)
        .map(|q| {
            let x = corner_aligned(q, w, new_w);
            let x0 = (x.floor() as usize).min(w - 1);
            let x1 = (x0 + 1).min(w - 1);
            (x0, x1, x - x0 as f64)
        })
        .collect();
    Grid2D::from_fn(new_h, new_w, |p, q| {
        let y = corner_aligned(p, h, new_h);
        let y0 = (y.floor() as usize).min(h - 1);
        let y1 = (y0 + 1).min(h - 1);
        let ty = y - y0 as f64;
        let (x0, x1, tx) = cols[q];
        let a = g.get(y0, x0) as f64;
        let b = g.get(y0, x1) as f64;
        let c = g.get(y1, x0) as f64;
        let d = g.get(y1, x1) as f64;
        let top = a + (b - a) * tx;
        let bottom = c + (d - c) * tx;
        let v = top + (bottom - top) * ty;
        let lo = a.min(b).min(c).min(d);
        let hi = a.max(b).max(c).max(d);
        v.clamp(lo, hi) as f32
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn same_dims_is_identity() {
        let g = Grid2D::from_fn(5, 7, |r, c| (r * 7 + c) as f32 * 0.3 - 2.0);
        assert_eq!(resample_bilinear(&g, 5, 7), g);
    }

    #[test]
    fn constant_stays_constant() {
        let g = Grid2D::filled(4, 6, 2.25);
        for (h, w) in [(1, 1), (3, 9), (8, 8), (13, 2)] {
            let r = resample_bilinear(&g, h, w);
            assert!(r.values().iter().all(|&v| v == 2.25));
        }
    }

    #[test]
    fn two_by_two_center() {
        let g = Grid2D::from_rows(&[[0.0, 1.0], [2.0, 3.0]]).unwrap();
        let r = resample_bilinear(&g, 3, 3);
        assert_eq!(r.get(1, 1), 1.5);
        assert_eq!(r.get(0, 0), 0.0);
        assert_eq!(r.get(2, 2), 3.0);
        assert_eq!(r.get(0, 1), 0.5);
    }

    proptest! {
        #[test]
        fn stays_within_input_range(
            h in 1usize..8, w in 1usize..8, nh in 1usize..12, nw in 1usize..12,
            seed in 0u64..1000,
        ) {
            let mut s = seed;
            let g = Grid2D::from_fn(h, w, |_, _| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                ((s >> 40) as f32 / (1u64 << 24) as f32) * 10.0 - 5.0
            });
            let (lo, hi) = g.min_max();
            let r = resample_bilinear(&g, nh, nw);
            let (rlo, rhi) = r.min_max();
            prop_assert!(rlo >= lo && rhi <= hi);
        }
    }
}
