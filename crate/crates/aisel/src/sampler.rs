//! Batch selection in the latent box: the weighted support-point objective
//! with fixed anchor points, its convex-concave (majorize-minimize)
//! optimizer, random and grid-top-k baselines, and a brute-force grid oracle
//! for small instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::gin::FeatureVector;
use crate::uncertainty::UncertaintyPool;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Aisel,
    Random,
    GridTopk,
    BruteForce,
}

/// A batch design: m movable virtual features plus n fixed anchors
/// (encoded actual images), with the per-sweep objective trace.
#[derive(Debug, Clone)]
pub struct SampleDesign {
    pub movable: Vec<FeatureVector>,
    pub fixed: Vec<FeatureVector>,
    pub objective_trace: Vec<f64>,
    pub method: Method,
}

impl SampleDesign {
    /// CSV export: header `f1,...,fr,kind` with kind in {virtual, actual}.
    pub fn to_csv(&self) -> String {
        let r = self
            .movable
            .first()
            .or(self.fixed.first())
            .map_or(0, |f| f.dim());
        let mut out = String::new();
        for i in 1..=r {
            out.push_str(&format!("f{i},"));
        }
        out.push_str("kind\n");
        for f in &self.movable {
            for c in &f.coords {
                out.push_str(&format!("{c},"));
            }
            out.push_str("virtual\n");
        }
        for f in &self.fixed {
            for c in &f.coords {
                out.push_str(&format!("{c},"));
            }
            out.push_str("actual\n");
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct CcpConfig {
    pub max_sweeps: usize,
    /// Convergence tolerance on the absolute objective delta per sweep.
    pub tol: f64,
    /// Distance floor guarding divisions when points collide.
    pub distance_floor: f64,
}

impl Default for CcpConfig {
    fn default() -> Self {
        CcpConfig {
            max_sweeps: 200,
            tol: 1e-8,
            distance_floor: 1e-10,
        }
    }
}

impl CcpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tol <= 0.0 || self.distance_floor <= 0.0 {
            return Err(Error::InvalidArgument("ccp tol and distance floor must be positive".into()));
        }
        Ok(())
    }
}

#[inline]
fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Full symmetric energy distance between two point sets:
/// 2 E||a-b|| - E||a-a'|| - E||b-b'||.
pub fn energy_distance(a: &[FeatureVector], b: &[FeatureVector]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("energy_distance operand".into()));
    }
    let cross: f64 = a
        .iter()
        .flat_map(|x| b.iter().map(move |y| dist(&x.coords, &y.coords)))
        .sum::<f64>()
        / (a.len() * b.len()) as f64;
    let within = |s: &[FeatureVector]| {
        let mut total = 0.0;
        for i in 0..s.len() {
            for j in 0..s.len() {
                if i != j {
                    total += dist(&s[i].coords, &s[j].coords);
                }
            }
        }
        total / (s.len() * s.len()) as f64
    };
    Ok(2.0 * cross - within(a) - within(b))
}

/// The separating support-point objective:
/// sum_{i<=m} sum_j w_j ||f'_i - y_j||  -  (1/(2(m+n))) sum_{i,j<=m+n} ||p_i - p_j||,
/// where the first sum runs over movable points only and the pairwise sum
/// over movable and fixed points together (fixed-fixed pairs included).
pub fn sp_objective(design: &SampleDesign, pool: &UncertaintyPool) -> f64 {
    let all: Vec<&FeatureVector> = design.movable.iter().chain(design.fixed.iter()).collect();
    let attract: f64 = design
        .movable
        .iter()
        .map(|f| {
            pool.features
                .iter()
                .zip(&pool.weights)
                .map(|(y, w)| w * dist(&f.coords, &y.coords))
                .sum::<f64>()
        })
        .sum();
    let total = all.len();
    if total == 0 {
        return attract;
    }
    let mut pairwise = 0.0;
    for i in 0..total {
        for j in 0..total {
            if i != j {
                pairwise += dist(&all[i].coords, &all[j].coords);
            }
        }
    }
    attract - pairwise / (2.0 * total as f64)
}

/// Weighted sampling of m pool atoms without replacement, proportional to
/// the pool weights, each nudged off its atom by a tiny jitter (a point
/// sitting exactly on an atom is a fixed point of the floored
/// majorize-minimize update). Deterministic per seed.
fn init_from_pool(pool: &UncertaintyPool, m: usize, seed: u64) -> Vec<FeatureVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = pool.weights.clone();
    let mut chosen = Vec::with_capacity(m);
    for _ in 0..m {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            // All remaining mass exhausted; fall back to uniform over leftovers.
            let remaining: Vec<usize> = weights
                .iter()
                .enumerate()
                .filter(|(_, &w)| w >= 0.0)
                .map(|(i, _)| i)
                .collect();
            let idx = remaining[rng.gen_range(0..remaining.len())];
            chosen.push(jitter(&pool.features[idx], &mut rng));
            continue;
        }
        let u: f64 = rng.gen_range(0.0..total);
        let mut acc = 0.0;
        let mut pick = weights.len() - 1;
        for (i, &w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                pick = i;
                break;
            }
        }
        chosen.push(jitter(&pool.features[pick], &mut rng));
        weights[pick] = 0.0;
    }
    chosen
}

fn jitter(f: &FeatureVector, rng: &mut ChaCha8Rng) -> FeatureVector {
    FeatureVector {
        coords: f
            .coords
            .iter()
            .map(|&c| (c + rng.gen_range(-1e-3..1e-3)).clamp(-1.0, 1.0))
            .collect(),
    }
}

/// Gauss-Seidel convex-concave sweeps with the closed-form
/// majorize-minimize update per movable point, projected onto the box.
/// The objective trace is recorded per sweep and asserted non-increasing
/// within 1e-9.
pub fn ccp_optimize(
    pool: &UncertaintyPool,
    fixed: &[FeatureVector],
    m: usize,
    cfg: &CcpConfig,
    seed: u64,
) -> Result<SampleDesign> {
    cfg.validate()?;
    if m == 0 {
        return Err(Error::InvalidArgument("m must be >= 1".into()));
    }
    if pool.is_empty() {
        return Err(Error::Empty("uncertainty pool".into()));
    }
    let r = pool.r();
    for f in fixed {
        if f.dim() != r {
            return Err(Error::ShapeMismatch("fixed anchor dimension".into()));
        }
    }
    let movable = init_from_pool(pool, m, seed);
    let total = m + fixed.len();
    let mut design = SampleDesign {
        movable,
        fixed: fixed.to_vec(),
        objective_trace: Vec::new(),
        method: Method::Aisel,
    };
    design.objective_trace.push(sp_objective(&design, pool));

    let floor = cfg.distance_floor;
    let mut new_point = vec![0.0; r];
    for _sweep in 0..cfg.max_sweeps {
        for i in 0..m {
            let current = design.movable[i].coords.clone();
            // Repulsion: (1/(m+n)) sum_{k != i} (f_i - f_k) / max(||f_i - f_k||, eps).
            new_point.iter_mut().for_each(|v| *v = 0.0);
            for k in 0..m {
                if k == i {
                    continue;
                }
                let other = &design.movable[k].coords;
                let d = dist(&current, other).max(floor);
                for (nv, (a, b)) in new_point.iter_mut().zip(current.iter().zip(other)) {
                    *nv += (a - b) / d;
                }
            }
            for f in fixed {
                let d = dist(&current, &f.coords).max(floor);
                for (nv, (a, b)) in new_point.iter_mut().zip(current.iter().zip(&f.coords)) {
                    *nv += (a - b) / d;
                }
            }
            for v in new_point.iter_mut() {
                *v /= total as f64;
            }
            // Attraction: sum_j w_j y_j / max(||f_i - y_j||, eps), and the
            // normalizer q_i = sum_j w_j / max(||f_i - y_j||, eps).
            let mut q = 0.0;
            for (y, &w) in pool.features.iter().zip(&pool.weights) {
                let d = dist(&current, &y.coords).max(floor);
                let scale = w / d;
                q += scale;
                for (nv, &yc) in new_point.iter_mut().zip(&y.coords) {
                    *nv += scale * yc;
                }
            }
            if q <= 0.0 {
                continue;
            }
            for (c, &nv) in design.movable[i].coords.iter_mut().zip(new_point.iter()) {
                *c = (nv / q).clamp(-1.0, 1.0);
            }
        }
        let obj = sp_objective(&design, pool);
        let prev = *design.objective_trace.last().unwrap();
        assert!(
            obj <= prev + 1e-9,
            "CCP objective increased: {prev} -> {obj}"
        );
        design.objective_trace.push(obj);
        if (prev - obj).abs() < cfg.tol {
            break;
        }
    }
    for f in &design.movable {
        debug_assert!(f.coords.iter().all(|c| (-1.0..=1.0).contains(c)));
    }
    Ok(design)
}

/// Lexicographic grid over `[-1,1]^r` with `grid_size` points per axis
/// (first coordinate varies slowest).
pub fn grid_features(r: usize, grid_size: usize) -> Vec<FeatureVector> {
    let axis: Vec<f64> = (0..grid_size)
        .map(|i| -1.0 + 2.0 * i as f64 / (grid_size - 1) as f64)
        .collect();
    let mut out = Vec::with_capacity(grid_size.pow(r as u32));
    let mut idx = vec![0usize; r];
    loop {
        out.push(FeatureVector {
            coords: idx.iter().map(|&i| axis[i]).collect(),
        });
        // Lexicographic increment, last coordinate fastest.
        let mut pos = r;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < grid_size {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Exhaustive search of `sp_objective` over the Cartesian grid with the
/// given step; exact arg-min among grid points, lexicographic tie-break.
pub fn brute_force_design(
    pool: &UncertaintyPool,
    fixed: &[FeatureVector],
    m: usize,
    grid_step: f64,
) -> Result<SampleDesign> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be >= 1".into()));
    }
    if grid_step <= 0.0 || grid_step > 2.0 {
        return Err(Error::InvalidArgument(format!("grid step {grid_step} out of range")));
    }
    let r = pool.r();
    let per_axis = (2.0 / grid_step).round() as usize + 1;
    let candidates = (per_axis as u128)
        .checked_pow((r * m) as u32)
        .ok_or(Error::SearchSpaceOverflow(u128::MAX))?;
    if candidates > 100_000_000 {
        return Err(Error::SearchSpaceOverflow(candidates));
    }
    let points = grid_features(r, per_axis);
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut assignment = vec![0usize; m];
    let mut design = SampleDesign {
        movable: vec![points[0].clone(); m],
        fixed: fixed.to_vec(),
        objective_trace: Vec::new(),
        method: Method::BruteForce,
    };
    loop {
        for (slot, &pi) in assignment.iter().enumerate() {
            design.movable[slot] = points[pi].clone();
        }
        let obj = sp_objective(&design, pool);
        // Strict improvement keeps the lexicographically first arg-min.
        if best.as_ref().map_or(true, |(b, _)| obj < *b) {
            best = Some((obj, assignment.clone()));
        }
        let mut pos = m;
        let mut done = false;
        loop {
            if pos == 0 {
                done = true;
                break;
            }
            pos -= 1;
            assignment[pos] += 1;
            if assignment[pos] < points.len() {
                break;
            }
            assignment[pos] = 0;
        }
        if done {
            break;
        }
    }
    let (obj, picks) = best.unwrap();
    Ok(SampleDesign {
        movable: picks.iter().map(|&i| points[i].clone()).collect(),
        fixed: fixed.to_vec(),
        objective_trace: vec![obj],
        method: Method::BruteForce,
    })
}

/// Uniform i.i.d. baseline design.
pub fn random_design(m: usize, r: usize, seed: u64) -> SampleDesign {
    SampleDesign {
        movable: crate::gin::sample_uniform_features(m, r, seed),
        fixed: Vec::new(),
        objective_trace: Vec::new(),
        method: Method::Random,
    }
}

/// Grid-top-k baseline: selects the m grid atoms with the highest entropy,
/// ties broken by lexicographic grid order. The pool must be a full
/// lexicographic grid (as built by `build_grid_pool`).
pub fn grid_topk_design(pool_on_grid: &UncertaintyPool, m: usize, grid_size: usize) -> Result<SampleDesign> {
    let r = pool_on_grid.r();
    let expected = (grid_size as u128)
        .checked_pow(r as u32)
        .ok_or(Error::SearchSpaceOverflow(u128::MAX))?;
    if expected != pool_on_grid.len() as u128 {
        return Err(Error::ShapeMismatch(format!(
            "pool has {} atoms, expected {grid_size}^{r} = {expected}",
            pool_on_grid.len()
        )));
    }
    if m > pool_on_grid.len() {
        return Err(Error::InvalidArgument(format!(
            "m = {m} exceeds grid cell count {}",
            pool_on_grid.len()
        )));
    }
    let mut order: Vec<usize> = (0..pool_on_grid.len()).collect();
    // Stable sort on descending entropy preserves lexicographic ties.
    order.sort_by(|&a, &b| {
        pool_on_grid.entropies[b]
            .partial_cmp(&pool_on_grid.entropies[a])
            .unwrap()
    });
    let mut picks: Vec<usize> = order.into_iter().take(m).collect();
    picks.sort_unstable();
    Ok(SampleDesign {
        movable: picks
            .iter()
            .map(|&i| pool_on_grid.features[i].clone())
            .collect(),
        fixed: Vec::new(),
        objective_trace: Vec::new(),
        method: Method::GridTopk,
    })
}

/// Minimum distance from each movable point to every other design point
/// (movable and fixed), one value per movable point.
pub fn min_separations(design: &SampleDesign) -> Vec<f64> {
    let mut out = Vec::with_capacity(design.movable.len());
    for (i, f) in design.movable.iter().enumerate() {
        let mut best = f64::INFINITY;
        for (j, g) in design.movable.iter().enumerate() {
            if i != j {
                best = best.min(dist(&f.coords, &g.coords));
            }
        }
        for g in &design.fixed {
            best = best.min(dist(&f.coords, &g.coords));
        }
        out.push(best);
    }
    out
}

#[cfg(test)]
pub(crate) fn atom_pool(points: &[Vec<f64>], weights: &[f64]) -> UncertaintyPool {
    let total: f64 = weights.iter().sum();
    UncertaintyPool {
        features: points
            .iter()
            .map(|p| FeatureVector { coords: p.clone() })
            .collect(),
        entropies: weights.to_vec(),
        weights: weights.iter().map(|w| w / total).collect(),
        predicted_class: vec![0; points.len()],
        balanced: false,
        uniform_fallback: false,
    }
}
