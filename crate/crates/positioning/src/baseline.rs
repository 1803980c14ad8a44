//! Single-best-guess baseline: the geometric median of the training positions.

pub const WEISZFELD_TOL_M: f64 = 1e-6;
const MAX_ITER: usize = 100_000;

/// Mean Euclidean distance from `p` to `points`.
pub fn mean_distance(p: [f64; 2], points: &[[f64; 2]]) -> f64 {
    points.iter().map(|q| (q[0] - p[0]).hypot(q[1] - p[1])).sum::<f64>() / points.len() as f64
}

/// Weiszfeld iteration with the Vardi-Zhang step at data points.
/// Returns the origin for an empty input.
pub fn geometric_median(points: &[[f64; 2]]) -> [f64; 2] {
    let n = points.len();
    if n == 0 {
        return [0.0, 0.0];
    }
    let mut y = [
        points.iter().map(|p| p[0]).sum::<f64>() / n as f64,
        points.iter().map(|p| p[1]).sum::<f64>() / n as f64,
    ];
    for _ in 0..MAX_ITER {
        let (mut wsum, mut tx, mut ty, mut coincident) = (0.0, 0.0, 0.0, 0usize);
        for p in points {
            let d = (p[0] - y[0]).hypot(p[1] - y[1]);
            if d < 1e-12 {
                coincident += 1;
                continue;
            }
            wsum += 1.0 / d;
            tx += p[0] / d;
            ty += p[1] / d;
        }
        if wsum == 0.0 {
            return y;
        }
        let t = [tx / wsum, ty / wsum];
        let next = if coincident == 0 {
            t
        } else {
            // Pull of the other points; stay put if it cannot overcome the coincident mass.
            let r = ((t[0] - y[0]) * wsum).hypot((t[1] - y[1]) * wsum);
            let a = (coincident as f64 / r).min(1.0);
            [(1.0 - a) * t[0] + a * y[0], (1.0 - a) * t[1] + a * y[1]]
        };
        let step = (next[0] - y[0]).hypot(next[1] - y[1]);
        y = next;
        if step < WEISZFELD_TOL_M * 1e-2 {
            break;
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_point_and_square() {
        assert_eq!(geometric_median(&[[1.5, -2.0]]), [1.5, -2.0]);
        let c = geometric_median(&[[0.0, 0.0], [4.0, 0.0], [0.0, 4.0], [4.0, 4.0]]);
        assert!((c[0] - 2.0).abs() < 1e-9 && (c[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn median_at_data_point() {
        // Three points on top of each other dominate two outliers.
        let pts = [[1.0, 1.0], [1.0, 1.0], [1.0, 1.0], [5.0, 1.0], [1.0, 7.0]];
        let m = geometric_median(&pts);
        assert!((m[0] - 1.0).abs() < 1e-6 && (m[1] - 1.0).abs() < 1e-6, "{m:?}");
    }

    #[test]
    fn matches_millimetre_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..3 {
            let pts: Vec<[f64; 2]> = (0..5).map(|_| [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]).collect();
            let m = geometric_median(&pts);
            let mut best = (f64::INFINITY, [0.0, 0.0]);
            for i in 0..=1000 {
                for j in 0..=1000 {
                    let p = [i as f64 * 1e-3, j as f64 * 1e-3];
                    let f = mean_distance(p, &pts);
                    if f < best.0 {
                        best = (f, p);
                    }
                }
            }
            assert!((m[0] - best.1[0]).hypot(m[1] - best.1[1]) < 2e-3, "{m:?} vs {:?}", best.1);
            assert!(mean_distance(m, &pts) <= best.0 + 1e-12);
        }
    }
}
