use crate::points::{sq_dist, PointSet};

const MEB_ITERATIONS: usize = 10_000;

/// Diameter of the minimum enclosing ball.
///
/// Bădoiu–Clarkson iterations: step the center towards the farthest point by
/// `1/(i+1)` of the gap. After `t` steps the radius is within a factor
/// `1 + 1/sqrt(t)` of optimal; the best radius seen is returned.
pub fn min_enclosing_diameter(points: &PointSet) -> f64 {
    let n = points.len();
    if n <= 1 {
        return 0.0;
    }
    let farthest = |c: &[f64]| -> (usize, f64) {
        points
            .iter()
            .enumerate()
            .map(|(i, x)| (i, sq_dist(x, c)))
            .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best })
    };
    let mut center = points.mean();
    let mut best = farthest(&center).1;
    for i in 1..=MEB_ITERATIONS {
        let (far, r2) = farthest(&center);
        best = best.min(r2);
        if r2 == 0.0 {
            break;
        }
        let step = 1.0 / (i as f64 + 1.0);
        for (c, x) in center.iter_mut().zip(points.point(far)) {
            *c += (x - *c) * step;
        }
    }
    best = best.min(farthest(&center).1);
    2.0 * best.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let one = PointSet::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert_eq!(min_enclosing_diameter(&one), 0.0);
        let two = PointSet::from_rows(&[vec![0.0, 0.0], vec![7.0, 0.0]]).unwrap();
        assert!((min_enclosing_diameter(&two) - 7.0).abs() < 0.07);
        let square = PointSet::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
        ])
        .unwrap();
        assert!((min_enclosing_diameter(&square) - 2f64.sqrt()).abs() < 0.01 * 2f64.sqrt());
    }

    #[test]
    fn skewed_triangle() {
        // obtuse triangle: the ball is spanned by the long side
        let t = PointSet::from_rows(&[vec![0.0, 0.0], vec![10.0, 0.0], vec![5.0, 1.0], vec![5.0, 0.5]])
            .unwrap();
        let rho = min_enclosing_diameter(&t);
        assert!((10.0 - 1e-9..=10.0 * 1.01).contains(&rho), "{rho}");
        // acute equilateral triangle of side 1: circumradius 1/sqrt(3)
        let eq = PointSet::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]])
            .unwrap();
        let want = 2.0 / 3f64.sqrt();
        let got = min_enclosing_diameter(&eq);
        assert!(got >= want - 1e-9 && got <= want * 1.01, "{got}");
    }
}
