//! Library results against independent reference computations.

use gup_core::augment::{augment_cross_spectral, hsv_to_rgb, AugmentSpec};
use gup_core::bench::{make_synthetic_scene, SceneKind};
use gup_core::features::{provider_features, FeatureSource};
use gup_core::graph::{build_affinity_graph, laplacian_quadratic, AffinityParams, DistanceOrder};
use gup_core::metrics::{psnr, ssim};
use gup_core::resample::{bicubic_upsample, build_downsample, cubic_kernel, Normalization, ScalePair};
use gup_core::solve::{objective, solve_cg, solve_dense, system_apply, SystemSpec};
use gup_core::{FeatureMap, Image, Laplacian, RgbImage, SparseOperator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen()).collect()
}

fn dense_mul(a: &[f64], rows: usize, cols: usize, v: &[f64]) -> Vec<f64> {
    (0..rows).map(|i| (0..cols).map(|j| a[i * cols + j] * v[j]).sum()).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// The 3×3 → 2×2 operator written out by hand: each low-res pixel covers a
/// 1.5 × 1.5 box, so per axis the overlaps are `[1, 0.5, 0]` and `[0, 0.5, 1]`.
fn three_to_two_dense(norm: f64) -> Vec<f64> {
    let axis = [[1.0, 0.5, 0.0], [0.0, 0.5, 1.0]];
    let mut d = vec![0.0; 4 * 9];
    for (l, row) in d.chunks_mut(9).enumerate() {
        let (ly, lx) = (l / 2, l % 2);
        for (h, v) in row.iter_mut().enumerate() {
            *v = axis[ly][h / 3] * axis[lx][h % 3] * norm;
        }
    }
    d
}

#[test]
fn three_to_two_operator_matches_dense_products() {
    let mut r = rng(1);
    let scale = ScalePair::new(3, 3, 2, 2).unwrap();
    for (mode, norm) in [(Normalization::Raw, 1.0), (Normalization::Averaging, 1.0 / 2.25)] {
        let op = build_downsample(scale, mode).unwrap();
        let dense = three_to_two_dense(norm);
        assert_eq!(max_abs_diff(&op.to_dense(), &dense), 0.0);
        let v = random_vec(&mut r, 9);
        assert!(max_abs_diff(&op.apply(&v).unwrap(), &dense_mul(&dense, 4, 9, &v)) < 1e-15);
        let u = random_vec(&mut r, 4);
        let dense_t: Vec<f64> = (0..9).map(|h| (0..4).map(|l| dense[l * 9 + h] * u[l]).sum()).collect();
        assert!(max_abs_diff(&op.apply_transpose(&u).unwrap(), &dense_t) < 1e-15);
    }
    let avg = build_downsample(scale, Normalization::Averaging).unwrap();
    let (cols, vals) = avg.row(0);
    assert_eq!(cols, &[0, 1, 3, 4]);
    for (v, want) in vals.iter().zip([4.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0, 1.0 / 9.0]) {
        assert!((v - want).abs() < 1e-15);
    }
}

/// Overlap of `[a, b)` with `[c, d)` by midpoint quadrature over 1e4 cells,
/// exact for piecewise-constant indicators aligned to the cells.
fn quadrature_overlap(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let n = 10_000;
    let lo = c;
    let step = (d - c) / n as f64;
    (0..n).filter(|k| (a..b).contains(&(lo + (*k as f64 + 0.5) * step))).count() as f64 * step
}

#[test]
fn fractional_scale_matches_quadrature() {
    // 7 → 3 per axis: footprints of width 7/3.
    let scale = ScalePair::new(7, 5, 3, 2).unwrap();
    let op = build_downsample(scale, Normalization::Raw).unwrap();
    let (sy, sx) = (7.0 / 3.0, 5.0 / 2.0);
    for l in 0..6 {
        let (ly, lx) = ((l / 2) as f64, (l % 2) as f64);
        for h in 0..35 {
            let (hy, hx) = ((h / 5) as f64, (h % 5) as f64);
            let oy = quadrature_overlap(ly * sy, (ly + 1.0) * sy, hy, hy + 1.0);
            let ox = quadrature_overlap(lx * sx, (lx + 1.0) * sx, hx, hx + 1.0);
            assert!((op.get(l, h) - oy * ox).abs() < 1e-3, "l={l} h={h}");
        }
    }
}

#[test]
fn bicubic_ramp_matches_direct_kernel_sum() {
    let img = Image::from_fn(4, 4, |r, c| (r * 4 + c) as f64 / 15.0).unwrap();
    let up = bicubic_upsample(&img, 8, 8).unwrap();
    let clamp = |i: i64| i.clamp(0, 3) as usize;
    for r in 0..8 {
        for c in 0..8 {
            let sy = (r as f64 + 0.5) * 0.5 - 0.5;
            let sx = (c as f64 + 0.5) * 0.5 - 0.5;
            let mut acc = 0.0;
            let mut norm = 0.0;
            for i in -3i64..7 {
                for j in -3i64..7 {
                    let w = cubic_kernel(sy - i as f64) * cubic_kernel(sx - j as f64);
                    acc += w * img.get(clamp(i), clamp(j));
                    norm += w;
                }
            }
            let want = (acc / norm).clamp(0.0, 1.0);
            assert!((up.get(r, c) - want).abs() < 1e-10, "({r},{c}) {} vs {want}", up.get(r, c));
        }
    }
}

#[test]
fn cubic_kernel_reference_values() {
    // (a+2)|x|³ − (a+3)|x|² + 1 and a|x|³ − 5a|x|² + 8a|x| − 4a with a = −0.5.
    for &x in &[0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.5] {
        let a = -0.5f64;
        let t = f64::abs(x);
        let want = if t <= 1.0 {
            (a + 2.0) * t.powi(3) - (a + 3.0) * t * t + 1.0
        } else if t < 2.0 {
            a * t.powi(3) - 5.0 * a * t * t + 8.0 * a * t - 4.0 * a
        } else {
            0.0
        };
        assert!((cubic_kernel(x) - want).abs() < 1e-15);
        assert!((cubic_kernel(-x) - want).abs() < 1e-15);
    }
}

fn are_neighbours(i: usize, j: usize, w: usize) -> bool {
    let (ri, ci) = (i / w, i % w);
    let (rj, cj) = (j / w, j % w);
    ri.abs_diff(rj) + ci.abs_diff(cj) == 1
}

/// `W` and `S − W` assembled densely with std math.
fn dense_laplacian(f: &FeatureMap, eta: f64, o: f64) -> (Vec<f64>, Vec<f64>) {
    let n = f.pixels();
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if are_neighbours(i, j, f.width()) {
                let d: f64 = f.pixel(i).iter().zip(f.pixel(j)).map(|(a, b)| (a - b).abs().powf(o)).sum::<f64>()
                    / f.channels() as f64;
                w[i * n + j] = (-d / eta).exp();
            }
        }
    }
    let mut l: Vec<f64> = w.iter().map(|v| -v).collect();
    for i in 0..n {
        l[i * n + i] = (0..n).map(|j| w[i * n + j]).sum();
    }
    (w, l)
}

#[test]
fn laplacian_matches_dense_assembly() {
    let mut r = rng(2);
    for o in [1.0, 1.5, 2.0, 4.0, 10.0] {
        let f = FeatureMap::new(4, 4, 3, random_vec(&mut r, 48)).unwrap();
        let eta = r.gen_range(0.05..1.0);
        let lap = build_affinity_graph(&f, AffinityParams::new(eta, DistanceOrder::new(o).unwrap()).unwrap()).unwrap();
        let (w, l) = dense_laplacian(&f, eta, o);
        assert!(max_abs_diff(&lap.affinity().to_dense(), &w) < 1e-14, "o={o}");
        assert!(max_abs_diff(&lap.matrix().to_dense(), &l) < 1e-13, "o={o}");

        let x = random_vec(&mut r, 16);
        let pairwise: f64 =
            0.5 * (0..16).flat_map(|i| (0..16).map(move |j| (i, j))).map(|(i, j)| w[i * 16 + j] * (x[i] - x[j]).powi(2)).sum::<f64>();
        let q = laplacian_quadratic(&lap, &x).unwrap();
        assert!((q - pairwise).abs() <= 1e-10 * pairwise.abs());
    }
}

#[test]
fn single_edge_quadratic() {
    let f = FeatureMap::new(1, 2, 1, vec![0.0, 0.3]).unwrap();
    let lap = build_affinity_graph(&f, AffinityParams::new(0.3, DistanceOrder::new(1.0).unwrap()).unwrap()).unwrap();
    let w = lap.edge_weights()[0];
    assert!((w - (-1.0f64).exp()).abs() < 1e-15);
    assert!((laplacian_quadratic(&lap, &[0.0, 1.0]).unwrap() - w).abs() < 1e-15);
}

struct Instance {
    down: SparseOperator,
    lap: Laplacian,
    lambda: f64,
    y: Vec<f64>,
}

impl Instance {
    fn random(r: &mut ChaCha8Rng, hi: (usize, usize), lo: (usize, usize)) -> Self {
        let scale = ScalePair::new(hi.0, hi.1, lo.0, lo.1).unwrap();
        let f = FeatureMap::new(hi.0, hi.1, 2, random_vec(r, hi.0 * hi.1 * 2)).unwrap();
        let order = DistanceOrder::new([1.0, 1.5, 2.0, 4.0][r.gen_range(0..4)]).unwrap();
        let lap = build_affinity_graph(&f, AffinityParams::new(r.gen_range(0.05..1.0), order).unwrap()).unwrap();
        let lambda = 10f64.powf(r.gen_range(-2.0..1.0));
        Self { down: build_downsample(scale, Normalization::Averaging).unwrap(), lap, lambda, y: random_vec(r, lo.0 * lo.1) }
    }

    fn spec(&self) -> SystemSpec<'_> {
        SystemSpec::new(&self.down, &self.lap, self.lambda, &self.y).unwrap()
    }

    /// `DᵀD + λL` from dense factors.
    fn dense_a(&self) -> Vec<f64> {
        let (m, n) = (self.down.rows(), self.down.cols());
        let d = self.down.to_dense();
        let l = self.lap.matrix().to_dense();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = (0..m).map(|k| d[k * n + i] * d[k * n + j]).sum::<f64>() + self.lambda * l[i * n + j];
            }
        }
        a
    }
}

/// Gaussian elimination with partial pivoting.
fn gauss_solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs())).unwrap();
        if p != k {
            for c in 0..n {
                a.swap(k * n + c, p * n + c);
            }
            b.swap(k, p);
        }
        for i in k + 1..n {
            let f = a[i * n + k] / a[k * n + k];
            for c in k..n {
                a[i * n + c] -= f * a[k * n + c];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|c| a[i * n + c] * x[c]).sum();
        x[i] = (b[i] - s) / a[i * n + i];
    }
    x
}

fn rel_inf(a: &[f64], b: &[f64]) -> f64 {
    max_abs_diff(a, b) / b.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

const SHAPES: [((usize, usize), (usize, usize)); 5] =
    [((6, 6), (3, 3)), ((12, 12), (4, 4)), ((9, 7), (4, 3)), ((12, 11), (5, 5)), ((10, 12), (3, 8))];

#[test]
fn system_apply_matches_dense_matrix() {
    let mut r = rng(3);
    for &(hi, lo) in &SHAPES {
        let inst = Instance::random(&mut r, hi, lo);
        let n = hi.0 * hi.1;
        let v = random_vec(&mut r, n);
        let got = system_apply(&inst.spec(), &v).unwrap();
        let want = dense_mul(&inst.dense_a(), n, n, &v);
        assert!(rel_inf(&got, &want) < 1e-10);
    }
}

#[test]
fn cg_and_dense_agree_with_elimination() {
    let mut r = rng(4);
    for k in 0..25 {
        let (hi, lo) = SHAPES[k % SHAPES.len()];
        let inst = Instance::random(&mut r, hi, lo);
        assert!(hi.0 * hi.1 <= 144);
        let spec = inst.spec();
        let cg = solve_cg(&spec, 1e-10, 10 * spec.n()).unwrap();
        let dense = solve_dense(&spec).unwrap();
        let gauss = gauss_solve(inst.dense_a(), spec.rhs());
        assert!(cg.converged);
        assert!(cg.relative_residual <= 1e-10);
        assert!(rel_inf(&cg.x, &dense.x) <= 1e-6, "instance {k}");
        assert!(rel_inf(&dense.x, &gauss) <= 1e-10, "instance {k}");
    }
}

#[test]
fn zero_lambda_identity_scale_returns_y() {
    let mut r = rng(5);
    let f = FeatureMap::new(5, 5, 1, random_vec(&mut r, 25)).unwrap();
    let lap = build_affinity_graph(&f, AffinityParams::new(0.2, DistanceOrder::default()).unwrap()).unwrap();
    let d = build_downsample(ScalePair::new(5, 5, 5, 5).unwrap(), Normalization::Averaging).unwrap();
    let y = random_vec(&mut r, 25);
    let spec = SystemSpec::new(&d, &lap, 0.0, &y).unwrap();
    assert_eq!(solve_cg(&spec, 1e-10, 250).unwrap().x, y);
    assert_eq!(solve_dense(&spec).unwrap().x, y);
}

#[test]
fn huge_lambda_gives_constant_fit() {
    let mut r = rng(6);
    let f = FeatureMap::new(6, 6, 1, vec![0.5; 36]).unwrap();
    let lap = build_affinity_graph(&f, AffinityParams::new(0.1, DistanceOrder::default()).unwrap()).unwrap();
    assert!(lap.edge_weights().iter().all(|&w| w == 1.0));
    let d = build_downsample(ScalePair::new(6, 6, 3, 3).unwrap(), Normalization::Averaging).unwrap();
    let y = random_vec(&mut r, 9);
    let spec = SystemSpec::new(&d, &lap, 1e8, &y).unwrap();
    // argmin_c ‖c·D1 − y‖² = (D1·y)/(D1·D1).
    let d1 = d.apply(&[1.0; 36]).unwrap();
    let c = d1.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / d1.iter().map(|a| a * a).sum::<f64>();
    for x in [solve_cg(&spec, 1e-10, 360).unwrap().x, solve_dense(&spec).unwrap().x] {
        let (lo, hi) = x.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(hi - lo <= 1e-4);
        assert!(x.iter().all(|v| (v - c).abs() <= 1e-4));
    }
}

#[test]
fn objective_matches_naive_sum_and_solution_is_minimal() {
    let mut r = rng(7);
    for &(hi, lo) in &SHAPES {
        let inst = Instance::random(&mut r, hi, lo);
        let spec = inst.spec();
        let n = spec.n();
        let x = random_vec(&mut r, n);
        let dd = inst.down.to_dense();
        let dx = dense_mul(&dd, inst.down.rows(), n, &x);
        let data: f64 = dx.iter().zip(&inst.y).map(|(a, b)| (a - b).powi(2)).sum();
        let w = inst.lap.affinity().to_dense();
        let smooth: f64 = 0.5
            * (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| w[i * n + j] * (x[i] - x[j]).powi(2)).sum::<f64>();
        let want = data + inst.lambda * smooth;
        assert!((objective(&spec, &x).unwrap() - want).abs() <= 1e-12 * want);

        let sol = solve_cg(&spec, 1e-10, 10 * n).unwrap();
        let best = objective(&spec, &sol.x).unwrap();
        assert_eq!(best, sol.objective);
        let y_img = Image::new(lo.0, lo.1, inst.y.clone()).unwrap();
        let bic = bicubic_upsample(&y_img, hi.0, hi.1).unwrap();
        assert!(best <= objective(&spec, bic.data()).unwrap());
        for _ in 0..100 {
            let probe: Vec<f64> = sol.x.iter().map(|v| v + 1e-3 * (2.0 * r.gen::<f64>() - 1.0)).collect();
            assert!(best < objective(&spec, &probe).unwrap());
        }
    }
}

#[test]
fn halving_lambda_changes_shrink() {
    let mut r = rng(8);
    let inst = Instance::random(&mut r, (12, 12), (4, 4));
    let solve = |lambda: f64| {
        let spec = SystemSpec::new(&inst.down, &inst.lap, lambda, &inst.y).unwrap();
        solve_dense(&spec).unwrap().x
    };
    let lambdas: Vec<f64> = (0..12).map(|k| 0.5f64.powi(k)).collect();
    let xs: Vec<Vec<f64>> = lambdas.iter().map(|&l| solve(l)).collect();
    let steps: Vec<f64> = xs.windows(2).map(|p| max_abs_diff(&p[0], &p[1])).collect();
    assert!(steps.iter().all(|s| s.is_finite() && *s < 1.0));
    // Once λ is small the solution settles: each halving moves it less.
    assert!(steps[4..].windows(2).all(|p| p[1] <= p[0]), "{steps:?}");
}

fn naive_psnr(a: &Image, b: &Image) -> f64 {
    let mut sum = 0.0;
    for r in 0..a.height() {
        for c in 0..a.width() {
            sum += (a.get(r, c) - b.get(r, c)).powi(2);
        }
    }
    10.0 * (1.0 / (sum / a.len() as f64)).log10()
}

/// Mean SSIM with an explicit 2-D Gaussian window and two-pass moments.
fn naive_ssim(a: &Image, b: &Image) -> f64 {
    let mut g = [[0.0; 11]; 11];
    let mut total = 0.0;
    for (i, row) in g.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
            *v = (-(di * di + dj * dj) / (2.0 * 1.5 * 1.5)).exp();
            total += *v;
        }
    }
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let mut acc = 0.0;
    let mut count = 0;
    for r in 0..=a.height() - 11 {
        for c in 0..=a.width() - 11 {
            let win = |img: &Image| -> f64 {
                (0..11).flat_map(|i| (0..11).map(move |j| (i, j))).map(|(i, j)| g[i][j] * img.get(r + i, c + j)).sum::<f64>()
                    / total
            };
            let (ma, mb) = (win(a), win(b));
            let mut va = 0.0;
            let mut vb = 0.0;
            let mut cov = 0.0;
            for i in 0..11 {
                for j in 0..11 {
                    let wt = g[i][j] / total;
                    let da = a.get(r + i, c + j) - ma;
                    let db = b.get(r + i, c + j) - mb;
                    va += wt * da * da;
                    vb += wt * db * db;
                    cov += wt * da * db;
                }
            }
            acc += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    acc / count as f64
}

#[test]
fn metrics_match_naive_oracles() {
    let mut r = rng(9);
    for (h, w) in [(11, 11), (16, 23), (32, 32)] {
        let a = Image::new(h, w, random_vec(&mut r, h * w)).unwrap();
        let b = Image::from_fn(h, w, |row, col| (a.get(row, col) * 0.7 + 0.3 * r.gen::<f64>()).clamp(0.0, 1.0)).unwrap();
        assert!((psnr(&a, &b, 1.0).unwrap() - naive_psnr(&a, &b)).abs() < 1e-10);
        assert!((ssim(&a, &b).unwrap() - naive_ssim(&a, &b)).abs() < 1e-10);
    }
    let a = Image::new(12, 12, random_vec(&mut r, 144)).unwrap();
    let shifted = a.map(|v| v + 0.1).unwrap();
    assert!((psnr(&a, &shifted, 1.0).unwrap() - 20.0).abs() < 1e-9);
    assert_eq!(ssim(&a, &a).unwrap(), 1.0);
    assert_eq!(psnr(&a, &a, 1.0).unwrap(), 99.0);
}

#[test]
fn anticorrelated_binary_images_have_negative_ssim() {
    let a = Image::from_fn(16, 16, |r, c| ((r / 2 + c / 3) % 2) as f64).unwrap();
    let b = a.map(|v| 1.0 - v).unwrap();
    assert!(ssim(&a, &b).unwrap() < -0.5);
}

#[test]
fn patch3_matches_gather() {
    let mut r = rng(10);
    let guide = Image::new(5, 7, random_vec(&mut r, 35)).unwrap();
    let f = provider_features(&guide, FeatureSource::Patch3).unwrap();
    assert_eq!(f.channels(), 9);
    for row in 0..5i64 {
        for col in 0..7i64 {
            let px = f.pixel(row as usize * 7 + col as usize);
            let mut k = 0;
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (rr, cc) = ((row + dr).clamp(0, 4) as usize, (col + dc).clamp(0, 6) as usize);
                    assert_eq!(px[k], guide.data()[rr * 7 + cc]);
                    k += 1;
                }
            }
        }
    }
}

#[test]
fn gradient_features_on_a_step_edge() {
    let guide = Image::from_fn(4, 8, |_, c| if c < 4 { 0.2 } else { 0.9 }).unwrap();
    let f = provider_features(&guide, FeatureSource::IntensityGradient).unwrap();
    for row in 0..4 {
        for col in 0..8 {
            let px = f.pixel(row * 8 + col);
            assert_eq!(px[0], guide.get(row, col));
            // The central difference straddles the step at columns 3 and 4.
            assert_eq!(px[1] != 0.0, col == 3 || col == 4);
            assert_eq!(px[2], 0.0);
        }
    }
    let flat = provider_features(&Image::filled(3, 3, 0.4).unwrap(), FeatureSource::Intensity).unwrap();
    let lap = build_affinity_graph(&flat, AffinityParams::new(0.1, DistanceOrder::default()).unwrap()).unwrap();
    assert!(lap.edge_weights().iter().all(|&w| w == 1.0));
}

fn edge_map(img: &Image) -> Vec<bool> {
    let (h, w) = img.dims();
    let mut out = Vec::with_capacity(2 * h * w);
    for r in 0..h {
        for c in 0..w {
            out.push(c + 1 < w && img.get(r, c) != img.get(r, c + 1));
            out.push(r + 1 < h && img.get(r, c) != img.get(r + 1, c));
        }
    }
    out
}

fn rgb_edge_map(rgb: &RgbImage) -> Vec<bool> {
    let (h, w) = (rgb.height(), rgb.width());
    let mut out = Vec::with_capacity(2 * h * w);
    for r in 0..h {
        for c in 0..w {
            out.push(c + 1 < w && rgb.get(r, c) != rgb.get(r, c + 1));
            out.push(r + 1 < h && rgb.get(r, c) != rgb.get(r + 1, c));
        }
    }
    out
}

#[test]
fn augmentation_keeps_geometry() {
    for seed in 0..5 {
        let rgb = RgbImage::from_fn(24, 24, |r, c| {
            let hue = if (r / 6 + c / 8) % 2 == 0 { 40.0 } else { 250.0 } + seed as f64 * 17.0;
            hsv_to_rgb(hue, 0.8, if r < 12 { 0.5 } else { 0.9 })
        })
        .unwrap();
        let (guide, target) = augment_cross_spectral(&rgb, &AugmentSpec { anchor_count: 6, seed }).unwrap();
        assert_eq!(guide.dims(), target.dims());
        let src = rgb_edge_map(&rgb);
        for img in [&guide, &target] {
            assert!(edge_map(img).iter().zip(&src).all(|(&e, &s)| !e || s));
            assert!(img.data().iter().all(|v| (0.0..=1.0).contains(v)));
        }
        // V edges appear in both renderings.
        let v_edge = |r: usize, c: usize| guide.get(r, c) != guide.get(r + 1, c) && target.get(r, c) != target.get(r + 1, c);
        assert!((0..24).all(|c| v_edge(11, c)));
    }
}

#[test]
fn synthetic_scene_edges_coincide() {
    for kind in [SceneKind::Edges, SceneKind::Checker] {
        for seed in 0..3 {
            let s = make_synthetic_scene(kind, 48, seed).unwrap();
            let (g, t) = (edge_map(&s.guide), edge_map(&s.truth));
            let both = g.iter().zip(&t).filter(|(a, b)| **a && **b).count();
            let either = g.iter().zip(&t).filter(|(a, b)| **a || **b).count();
            assert!(either > 0);
            assert!(both as f64 >= 0.9 * either as f64, "{kind:?} seed {seed}: {both}/{either}");
        }
    }
}
