//! Exploratory landscape analysis features computed from a [`Doe`] alone.
//!
//! Rows are put into a canonical order before any computation, so the result is
//! bit-identical under any permutation of the sample.

use std::cmp::Ordering;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::doe::Doe;
use super::ElaVector;
use crate::error::{Error, Result};
use crate::seed;

const MANIFEST_JSON: &str = include_str!("../../data/ela_manifest_v1.json");

const DISP_QUANTILES: [(f64, &str); 4] = [(0.02, "02"), (0.05, "05"), (0.10, "10"), (0.25, "25")];
const IC_GRID_POINTS: usize = 1000;
const IC_SETTLING: f64 = 0.05;
const IC_INFO_RATIO: f64 = 0.5;
const PEAK_MODEMASS: f64 = 0.01;
const RATIO_CAP: f64 = 1e12;

/// Feature names in their fixed global order.
pub fn feature_names() -> &'static [String] {
    static NAMES: OnceLock<Vec<String>> = OnceLock::new();
    NAMES.get_or_init(|| serde_json::from_str(MANIFEST_JSON).expect("bundled feature manifest is valid JSON"))
}

/// Compute the full feature vector. Fails for degenerate samples.
pub fn compute_ela(doe: &Doe) -> Result<ElaVector> {
    if doe.degenerate {
        return Err(Error::Degenerate);
    }
    if doe.len() < 4 || doe.x.len() != doe.y.len() {
        return Err(Error::param("sample too small for landscape features"));
    }
    let (x, y) = canonical(doe);
    let mut out: Vec<(String, f64)> = Vec::with_capacity(feature_names().len());
    y_distribution(&y, &mut out);
    meta_model(&x, &y, &mut out);
    let dist = DistanceMatrix::new(&x);
    dispersion(&x, &y, &dist, &mut out);
    nearest_better(&y, &dist, &mut out);
    principal_components(&x, &y, &mut out);
    information_content(&x, &y, &dist, &mut out);

    let names = feature_names();
    debug_assert_eq!(out.len(), names.len());
    let mut values = Vec::with_capacity(names.len());
    for ((name, v), expected) in out.into_iter().zip(names) {
        debug_assert_eq!(&name, expected);
        if v.is_finite() {
            values.push(v);
        } else {
            log::debug!("feature {name} not finite ({v}); replaced by 0");
            values.push(0.0);
        }
    }
    Ok(ElaVector::new(names.to_vec(), values))
}

fn canonical(doe: &Doe) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut idx: Vec<usize> = (0..doe.len()).collect();
    idx.sort_by(|&a, &b| {
        for (u, v) in doe.x[a].iter().zip(&doe.x[b]) {
            match u.total_cmp(v) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        doe.y[a].total_cmp(&doe.y[b])
    });
    let x = idx.iter().map(|&i| doe.x[i].clone()).collect();
    let y = idx.iter().map(|&i| doe.y[i]).collect();
    (x, y)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation (n - 1).
fn sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        if a == 0.0 {
            1.0
        } else {
            RATIO_CAP
        }
    } else {
        (a / b).clamp(-RATIO_CAP, RATIO_CAP)
    }
}

/// Type-7 sample quantile.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn push(out: &mut Vec<(String, f64)>, name: &str, v: f64) {
    out.push((name.to_string(), v));
}

fn y_distribution(y: &[f64], out: &mut Vec<(String, f64)>) {
    let n = y.len() as f64;
    let m = mean(y);
    let m2 = y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    let m3 = y.iter().map(|v| (v - m).powi(3)).sum::<f64>() / n;
    let m4 = y.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
    push(out, "ela_distr.skewness", m3 / m2.powf(1.5));
    push(out, "ela_distr.kurtosis", m4 / (m2 * m2) - 3.0);
    push(out, "ela_distr.number_of_peaks", number_of_peaks(y));
}

/// Number of density modes carrying more than 1% of the mass, using a
/// Gaussian KDE with Silverman's bandwidth on a 512-point grid.
fn number_of_peaks(y: &[f64]) -> f64 {
    let n = y.len();
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let s = sd(y);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let mut bw = 0.9 * s.min(iqr / 1.34) * (n as f64).powf(-0.2);
    if bw <= 0.0 {
        bw = 0.9 * s.max(1e-12) * (n as f64).powf(-0.2);
    }
    let grid = 512;
    let lo = sorted[0] - 3.0 * bw;
    let hi = sorted[n - 1] + 3.0 * bw;
    let step = (hi - lo) / (grid - 1) as f64;
    let norm = 1.0 / (n as f64 * bw * (2.0 * std::f64::consts::PI).sqrt());
    let dens: Vec<f64> = (0..grid)
        .map(|k| {
            let g = lo + k as f64 * step;
            norm * y.iter().map(|v| (-0.5 * ((g - v) / bw).powi(2)).exp()).sum::<f64>()
        })
        .collect();
    // Split the grid at local minima and count segments with enough mass.
    let mut bounds = vec![0usize];
    for k in 1..grid - 1 {
        if dens[k] < dens[k - 1] && dens[k] <= dens[k + 1] {
            bounds.push(k);
        }
    }
    bounds.push(grid - 1);
    let mut peaks = 0;
    for w in bounds.windows(2) {
        let mass: f64 = dens[w[0]..=w[1]].iter().sum::<f64>() * step;
        if mass > PEAK_MODEMASS {
            peaks += 1;
        }
    }
    peaks.max(1) as f64
}

struct Fit {
    coef: DVector<f64>,
    r2: f64,
    adj_r2: f64,
}

fn least_squares(design: DMatrix<f64>, y: &[f64]) -> Fit {
    let n = design.nrows();
    let p = design.ncols() - 1;
    let target = DVector::from_column_slice(y);
    let svd = design.clone().svd(true, true);
    let coef = svd
        .solve(&target, 1e-12)
        .unwrap_or_else(|_| DVector::zeros(design.ncols()));
    let resid = &target - &design * &coef;
    let ssr = resid.norm_squared();
    let m = mean(y);
    let sst: f64 = y.iter().map(|v| (v - m).powi(2)).sum();
    let r2 = if sst > 0.0 { 1.0 - ssr / sst } else { 0.0 };
    let adj_r2 = if n > p + 1 {
        1.0 - (1.0 - r2) * (n - 1) as f64 / (n - p - 1) as f64
    } else {
        r2
    };
    Fit { coef, r2, adj_r2 }
}

fn design_matrix(x: &[Vec<f64>], squares: bool, interactions: bool) -> DMatrix<f64> {
    let d = x[0].len();
    let mut cols = 1 + d;
    if squares {
        cols += d;
    }
    if interactions {
        cols += d * (d - 1) / 2;
    }
    DMatrix::from_fn(x.len(), cols, |r, c| {
        let row = &x[r];
        if c == 0 {
            return 1.0;
        }
        let mut c = c - 1;
        if c < d {
            return row[c];
        }
        c -= d;
        if squares {
            if c < d {
                return row[c] * row[c];
            }
            c -= d;
        }
        // interaction index c -> (i, j), i < j, in row-major order
        let mut i = 0;
        let mut remaining = c;
        while remaining >= d - 1 - i {
            remaining -= d - 1 - i;
            i += 1;
        }
        let j = i + 1 + remaining;
        row[i] * row[j]
    })
}

fn meta_model(x: &[Vec<f64>], y: &[f64], out: &mut Vec<(String, f64)>) {
    let d = x[0].len();
    let lin = least_squares(design_matrix(x, false, false), y);
    let abs_coef: Vec<f64> = lin.coef.iter().skip(1).map(|c| c.abs()).collect();
    let cmin = abs_coef.iter().copied().fold(f64::INFINITY, f64::min);
    let cmax = abs_coef.iter().copied().fold(0.0, f64::max);
    push(out, "ela_meta.lin_simple.adj_r2", lin.adj_r2);
    push(out, "ela_meta.lin_simple.r2", lin.r2);
    push(out, "ela_meta.lin_simple.intercept", lin.coef[0]);
    push(out, "ela_meta.lin_simple.coef.min", cmin);
    push(out, "ela_meta.lin_simple.coef.max", cmax);
    push(out, "ela_meta.lin_simple.coef.max_by_min", ratio(cmax, cmin));

    let lin_int = least_squares(design_matrix(x, false, true), y);
    push(out, "ela_meta.lin_w_interact.adj_r2", lin_int.adj_r2);
    push(out, "ela_meta.lin_w_interact.r2", lin_int.r2);

    let quad = least_squares(design_matrix(x, true, false), y);
    let q_abs: Vec<f64> = quad.coef.iter().skip(1 + d).map(|c| c.abs()).collect();
    let qmin = q_abs.iter().copied().fold(f64::INFINITY, f64::min);
    let qmax = q_abs.iter().copied().fold(0.0, f64::max);
    push(out, "ela_meta.quad_simple.adj_r2", quad.adj_r2);
    push(out, "ela_meta.quad_simple.r2", quad.r2);
    push(out, "ela_meta.quad_simple.cond", ratio(qmax, qmin));

    let quad_int = least_squares(design_matrix(x, true, true), y);
    push(out, "ela_meta.quad_w_interact.adj_r2", quad_int.adj_r2);
    push(out, "ela_meta.quad_w_interact.r2", quad_int.r2);
}

struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    fn new(x: &[Vec<f64>]) -> Self {
        let n = x.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = x[i]
                    .iter()
                    .zip(&x[j])
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        Self { n, d }
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    fn pairwise(&self, idx: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(idx.len() * idx.len().saturating_sub(1) / 2);
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                out.push(self.get(i, j));
            }
        }
        out
    }
}

fn dispersion(x: &[Vec<f64>], y: &[f64], dist: &DistanceMatrix, out: &mut Vec<(String, f64)>) {
    let n = x.len();
    let all: Vec<usize> = (0..n).collect();
    let all_d = dist.pairwise(&all);
    let (all_mean, all_median) = (mean(&all_d), median(&all_d));
    let mut sorted_y = y.to_vec();
    sorted_y.sort_by(f64::total_cmp);
    // Rows are canonical, so a stable sort by y breaks ties deterministically.
    let mut by_y: Vec<usize> = (0..n).collect();
    by_y.sort_by(|&a, &b| y[a].total_cmp(&y[b]));

    let mut feats = Vec::new();
    for (q, tag) in DISP_QUANTILES {
        let threshold = quantile(&sorted_y, q);
        let count = y.iter().filter(|v| **v <= threshold).count().max(2);
        let best = &by_y[..count];
        let dq = dist.pairwise(best);
        let (m, md) = (mean(&dq), median(&dq));
        feats.push((tag, ratio(m, all_mean), ratio(md, all_median), m - all_mean, md - all_median));
    }
    for (tag, v, ..) in &feats {
        push(out, &format!("disp.ratio_mean_{tag}"), *v);
    }
    for (tag, _, v, ..) in &feats {
        push(out, &format!("disp.ratio_median_{tag}"), *v);
    }
    for (tag, _, _, v, _) in &feats {
        push(out, &format!("disp.diff_mean_{tag}"), *v);
    }
    for (tag, .., v) in &feats {
        push(out, &format!("disp.diff_median_{tag}"), *v);
    }
}

fn nearest_better(y: &[f64], dist: &DistanceMatrix, out: &mut Vec<(String, f64)>) {
    let n = y.len();
    let mut nn = vec![f64::INFINITY; n];
    let mut nb: Vec<Option<(usize, f64)>> = vec![None; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let dij = dist.get(i, j);
            if dij < nn[i] {
                nn[i] = dij;
            }
            if y[j] < y[i] && nb[i].is_none_or(|(_, best)| dij < best) {
                nb[i] = Some((j, dij));
            }
        }
    }
    let mut nn_sel = Vec::new();
    let mut nb_sel = Vec::new();
    let mut indegree = vec![0.0; n];
    for i in 0..n {
        if let Some((j, dij)) = nb[i] {
            nn_sel.push(nn[i]);
            nb_sel.push(dij);
            indegree[j] += 1.0;
        }
    }
    let quotients: Vec<f64> = nn_sel.iter().zip(&nb_sel).map(|(a, b)| ratio(*a, *b)).collect();
    push(out, "nbc.nn_nb.sd_ratio", ratio(sd(&nn_sel), sd(&nb_sel)));
    push(out, "nbc.nn_nb.mean_ratio", ratio(mean(&nn_sel), mean(&nb_sel)));
    push(out, "nbc.nn_nb.cor", pearson(&nn_sel, &nb_sel));
    push(out, "nbc.dist_ratio.coeff_var", ratio(sd(&quotients), mean(&quotients)));
    push(out, "nbc.nb_fitness.cor", pearson(&indegree, y));
}

/// Eigenvalues (descending) of the covariance or correlation matrix of the columns.
fn spectrum(cols: &[Vec<f64>], correlation: bool) -> Vec<f64> {
    let k = cols.len();
    let n = cols[0].len() as f64;
    let means: Vec<f64> = cols.iter().map(|c| mean(c)).collect();
    let mut m = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let cov = cols[a]
                .iter()
                .zip(&cols[b])
                .map(|(u, v)| (u - means[a]) * (v - means[b]))
                .sum::<f64>()
                / (n - 1.0);
            m[(a, b)] = cov;
            m[(b, a)] = cov;
        }
    }
    if correlation {
        let s: Vec<f64> = (0..k).map(|a| m[(a, a)].sqrt()).collect();
        for a in 0..k {
            for b in 0..k {
                let denom = s[a] * s[b];
                m[(a, b)] = if denom > 0.0 { m[(a, b)] / denom } else { 0.0 };
            }
        }
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().map(|v| v.max(0.0)).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

fn pca_pair(ev: &[f64]) -> (f64, f64) {
    let total: f64 = ev.iter().sum();
    if total <= 0.0 {
        return (1.0, 1.0);
    }
    let mut acc = 0.0;
    let mut needed = ev.len();
    for (i, v) in ev.iter().enumerate() {
        acc += v;
        if acc / total >= 0.9 {
            needed = i + 1;
            break;
        }
    }
    (needed as f64 / ev.len() as f64, ev[0] / total)
}

fn principal_components(x: &[Vec<f64>], y: &[f64], out: &mut Vec<(String, f64)>) {
    let d = x[0].len();
    let mut cols: Vec<Vec<f64>> = (0..d).map(|j| x.iter().map(|r| r[j]).collect()).collect();
    let cov_x = pca_pair(&spectrum(&cols, false));
    let cor_x = pca_pair(&spectrum(&cols, true));
    cols.push(y.to_vec());
    let cov_init = pca_pair(&spectrum(&cols, false));
    let cor_init = pca_pair(&spectrum(&cols, true));
    let all = [("cov_x", cov_x), ("cor_x", cor_x), ("cov_init", cov_init), ("cor_init", cor_init)];
    for (tag, (expl, _)) in all {
        push(out, &format!("pca.expl_var.{tag}"), expl);
    }
    for (tag, (_, pc1)) in all {
        push(out, &format!("pca.expl_var_PC1.{tag}"), pc1);
    }
}

/// Nearest-neighbour tour through the sample starting at a hash-derived point.
fn nn_tour(x: &[Vec<f64>], y: &[f64], dist: &DistanceMatrix) -> Vec<usize> {
    let n = x.len();
    let mut bytes = Vec::with_capacity(n * (x[0].len() + 1) * 8);
    for (row, v) in x.iter().zip(y) {
        for c in row {
            bytes.extend_from_slice(&c.to_bits().to_le_bytes());
        }
        bytes.extend_from_slice(&v.to_bits().to_le_bytes());
    }
    let start = (seed::hash_bytes(&bytes) % n as u64) as usize;
    let mut visited = vec![false; n];
    let mut tour = Vec::with_capacity(n);
    let mut cur = start;
    visited[cur] = true;
    tour.push(cur);
    for _ in 1..n {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for j in 0..n {
            if !visited[j] && dist.get(cur, j) < best_d {
                best_d = dist.get(cur, j);
                best = j;
            }
        }
        visited[best] = true;
        tour.push(best);
        cur = best;
    }
    tour
}

fn symbols(slopes: &[f64], eps: f64) -> Vec<i8> {
    slopes
        .iter()
        .map(|s| {
            if *s < -eps {
                -1
            } else if *s > eps {
                1
            } else {
                0
            }
        })
        .collect()
}

/// Entropy of consecutive unequal symbol pairs, in base 6.
fn ic_entropy(sym: &[i8]) -> f64 {
    if sym.len() < 2 {
        return 0.0;
    }
    let mut counts = [[0usize; 3]; 3];
    for w in sym.windows(2) {
        counts[(w[0] + 1) as usize][(w[1] + 1) as usize] += 1;
    }
    let total = (sym.len() - 1) as f64;
    let mut h = 0.0;
    for (a, row) in counts.iter().enumerate() {
        for (b, &c) in row.iter().enumerate() {
            if a != b && c > 0 {
                let p = c as f64 / total;
                h -= p * p.ln() / 6f64.ln();
            }
        }
    }
    h
}

/// Length of the sequence after dropping zeros and collapsing repeats, relative to its original length.
fn partial_information(sym: &[i8]) -> f64 {
    let mut len = 0usize;
    let mut last = 0i8;
    for &s in sym {
        if s != 0 && s != last {
            len += 1;
            last = s;
        }
    }
    len as f64 / sym.len() as f64
}

fn information_content(x: &[Vec<f64>], y: &[f64], dist: &DistanceMatrix, out: &mut Vec<(String, f64)>) {
    let tour = nn_tour(x, y, dist);
    let slopes: Vec<f64> = tour
        .windows(2)
        .map(|w| {
            let dx = dist.get(w[0], w[1]);
            let dy = y[w[1]] - y[w[0]];
            if dx > 0.0 {
                dy / dx
            } else {
                0.0
            }
        })
        .collect();
    let log_grid: Vec<f64> = (0..IC_GRID_POINTS)
        .map(|k| -5.0 + 20.0 * k as f64 / (IC_GRID_POINTS - 1) as f64)
        .collect();
    let mut entropies = Vec::with_capacity(IC_GRID_POINTS);
    let mut infos = Vec::with_capacity(IC_GRID_POINTS);
    for le in &log_grid {
        let sym = symbols(&slopes, 10f64.powf(*le));
        entropies.push(ic_entropy(&sym));
        infos.push(partial_information(&sym));
    }
    let m0 = partial_information(&symbols(&slopes, 0.0));
    let h_max = entropies.iter().copied().fold(0.0, f64::max);
    let at_max: Vec<f64> = log_grid
        .iter()
        .zip(&entropies)
        .filter(|(_, h)| **h == h_max)
        .map(|(le, _)| *le)
        .collect();
    let eps_max = median(&at_max);
    let eps_s = log_grid
        .iter()
        .zip(&entropies)
        .find(|(_, h)| **h < IC_SETTLING)
        .map_or(*log_grid.last().unwrap(), |(le, _)| *le);
    let eps_ratio = log_grid
        .iter()
        .zip(&infos)
        .filter(|(_, m)| **m > IC_INFO_RATIO * m0)
        .map(|(le, _)| *le)
        .next_back()
        .unwrap_or(log_grid[0]);
    push(out, "ic.h_max", h_max);
    push(out, "ic.eps_s", eps_s);
    push(out, "ic.eps_max", eps_max);
    push(out, "ic.eps_ratio", eps_ratio);
    push(out, "ic.m0", m0);
}
