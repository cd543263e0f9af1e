#![allow(dead_code)]

use isorep::metric::{cloud_to_metric, validate_metric, FiniteMetricSpace, PointCloud};

/// Named desk-scale spaces used across the integration tests.
pub fn test_spaces() -> Vec<(String, FiniteMetricSpace)> {
    let mut spaces = vec![
        ("point".to_string(), validate_metric(vec![vec![0.0]]).unwrap()),
        (
            "two-point".to_string(),
            validate_metric(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(),
        ),
        ("scalene".to_string(), scalene()),
        ("square+center".to_string(), square_with_center()),
    ];
    for n in 3..=8 {
        spaces.push((format!("{n}-gon"), polygon(n)));
    }
    spaces
}

pub fn polygon(n: usize) -> FiniteMetricSpace {
    cloud_to_metric(&PointCloud::regular_polygon(n)).unwrap()
}

pub fn scalene() -> FiniteMetricSpace {
    validate_metric(vec![
        vec![0.0, 1.0, 2.0],
        vec![1.0, 0.0, 2.5],
        vec![2.0, 2.5, 0.0],
    ])
    .unwrap()
}

pub fn square_with_center() -> FiniteMetricSpace {
    cloud_to_metric(
        &PointCloud::new(vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
            vec![0.5, 0.5],
        ])
        .unwrap(),
    )
    .unwrap()
}

/// All permutations of `0..n` (Heap's algorithm), sorted.
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        heap(k - 1, a, out);
        for i in 0..k - 1 {
            if k.is_multiple_of(2) {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
            heap(k - 1, a, out);
        }
    }
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    heap(n, &mut a, &mut out);
    out.sort();
    out
}

/// Brute-force isometries: every permutation preserving all distances to 1e-9 relative.
pub fn brute_force_isometries(space: &FiniteMetricSpace) -> Vec<Vec<usize>> {
    let n = space.len();
    let d = space.matrix();
    let max = d.iter().flatten().copied().fold(0.0, f64::max);
    all_permutations(n)
        .into_iter()
        .filter(|p| (0..n).all(|i| (0..n).all(|j| (d[p[i]][p[j]] - d[i][j]).abs() <= 1e-9 * max)))
        .collect()
}

/// Eigenvalues of a symmetric 2×2 matrix from the characteristic polynomial.
pub fn eig2(m: [[f64; 2]; 2]) -> [f64; 2] {
    let tr = m[0][0] + m[1][1];
    let disc = ((m[0][0] - m[1][1]).powi(2) + 4.0 * m[0][1] * m[1][0]).sqrt();
    [(tr - disc) / 2.0, (tr + disc) / 2.0]
}

/// Eigenvalues of a symmetric 3×3 matrix: trigonometric solution of the
/// characteristic cubic. Sorted ascending.
pub fn eig3(a: [[f64; 3]; 3]) -> [f64; 3] {
    let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    if p1 == 0.0 {
        let mut e = [a[0][0], a[1][1], a[2][2]];
        e.sort_by(f64::total_cmp);
        return e;
    }
    let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = (a[i][j] - if i == j { q } else { 0.0 }) / p;
        }
    }
    let det_b = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (det_b / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let mid = 3.0 * q - hi - lo;
    [lo, mid, hi]
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
