use super::NodeKind;

/// Fast-sweeping solution of `|∇d| = 1` with `d = 0` on every
/// non-interior node. First-order accurate, error `O(h)`.
pub fn eikonal_distance(mask: &[NodeKind], nx: usize, ny: usize, h: f64) -> Vec<f64> {
    let w = nx + 1;
    let idx = |i: usize, j: usize| j * w + i;
    let mut d: Vec<f64> = mask
        .iter()
        .map(|k| if *k == NodeKind::Interior { f64::INFINITY } else { 0.0 })
        .collect();

    let orders: [(bool, bool); 4] = [(false, false), (true, false), (true, true), (false, true)];
    for _pass in 0..2 {
        for &(rev_i, rev_j) in &orders {
            for jj in 0..=ny {
                let j = if rev_j { ny - jj } else { jj };
                for ii in 0..=nx {
                    let i = if rev_i { nx - ii } else { ii };
                    let k = idx(i, j);
                    if mask[k] != NodeKind::Interior {
                        continue;
                    }
                    let a = match (i > 0, i < nx) {
                        (true, true) => d[idx(i - 1, j)].min(d[idx(i + 1, j)]),
                        (true, false) => d[idx(i - 1, j)],
                        (false, true) => d[idx(i + 1, j)],
                        _ => f64::INFINITY,
                    };
                    let b = match (j > 0, j < ny) {
                        (true, true) => d[idx(i, j - 1)].min(d[idx(i, j + 1)]),
                        (true, false) => d[idx(i, j - 1)],
                        (false, true) => d[idx(i, j + 1)],
                        _ => f64::INFINITY,
                    };
                    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                    let cand = if hi - lo >= h {
                        lo + h
                    } else {
                        0.5 * (a + b + (2.0 * h * h - (a - b).powi(2)).sqrt())
                    };
                    if cand < d[k] {
                        d[k] = cand;
                    }
                }
            }
        }
    }
    d.iter_mut().filter(|v| v.is_infinite()).for_each(|v| *v = 0.0);
    d
}
