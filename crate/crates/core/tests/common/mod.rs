//! Brute-force oracles shared by the integration tests. None of these touch
//! the dynamic-programming code paths they are used to check.

#![allow(dead_code)]

use rabrl_core::envmodel::{Action, Cell, Environment, EnvironmentFile};

/// Every state sequence produced by every `steps`-long action sequence.
pub fn enumerate_paths(env: &Environment, start: Cell, goal: Option<Cell>, steps: usize) -> Vec<Vec<Cell>> {
    let mut paths = vec![vec![start]];
    for _ in 0..steps {
        let mut next = Vec::with_capacity(paths.len() * 5);
        for p in &paths {
            let here = *p.last().unwrap();
            for a in Action::ALL {
                let to = if Some(here) == goal {
                    here
                } else {
                    oracle_step(env, here, a)
                };
                let mut q = p.clone();
                q.push(to);
                next.push(q);
            }
        }
        paths = next;
    }
    paths
}

// Independent transition rule written from the grid semantics.
fn oracle_step(env: &Environment, c: Cell, a: Action) -> Cell {
    let (dx, dy): (i64, i64) = match a {
        Action::Up => (0, -1),
        Action::Down => (0, 1),
        Action::Left => (-1, 0),
        Action::Right => (1, 0),
        Action::Stay => (0, 0),
    };
    let nx = c.x as i64 + dx;
    let ny = c.y as i64 + dy;
    if nx < 0 || ny < 0 || nx >= env.width() as i64 || ny >= env.height() as i64 {
        return c;
    }
    let n = Cell::new(nx as usize, ny as usize);
    if env.is_obstacle(n) {
        c
    } else {
        n
    }
}

pub fn path_features(env: &Environment, path: &[Cell]) -> Vec<f64> {
    let mut f = vec![0.0; env.feature_dim()];
    for c in path {
        for (fi, &b) in f.iter_mut().zip(env.features_at(*c).unwrap()) {
            *fi += f64::from(b);
        }
    }
    f
}

pub fn path_score(env: &Environment, w: &[f64], beta: f64, path: &[Cell]) -> f64 {
    beta * path_features(env, path)
        .iter()
        .zip(w)
        .map(|(f, w)| f * w)
        .sum::<f64>()
}

/// Plain (not log-space) partition sum.
pub fn brute_partition(env: &Environment, w: &[f64], beta: f64, start: Cell, goal: Option<Cell>, steps: usize) -> f64 {
    enumerate_paths(env, start, goal, steps)
        .iter()
        .map(|p| path_score(env, w, beta, p).exp())
        .sum()
}

pub fn brute_expected_features(
    env: &Environment,
    w: &[f64],
    beta: f64,
    start: Cell,
    goal: Option<Cell>,
    steps: usize,
) -> Vec<f64> {
    let paths = enumerate_paths(env, start, goal, steps);
    let mut z = 0.0;
    let mut acc = vec![0.0; env.feature_dim()];
    for p in &paths {
        let weight = path_score(env, w, beta, p).exp();
        z += weight;
        for (a, f) in acc.iter_mut().zip(path_features(env, p)) {
            *a += weight * f;
        }
    }
    acc.into_iter().map(|a| a / z).collect()
}

/// Minimum entered-cell cost over all simple 4-connected paths.
pub fn brute_min_path_cost(costs: &[Option<f64>], width: usize, height: usize, start: Cell, goal: Cell) -> Option<f64> {
    #[allow(clippy::too_many_arguments)]
    fn dfs(
        costs: &[Option<f64>],
        width: usize,
        height: usize,
        here: Cell,
        goal: Cell,
        seen: &mut Vec<bool>,
        acc: f64,
        best: &mut Option<f64>,
    ) {
        if here == goal {
            if best.is_none_or(|b| acc < b) {
                *best = Some(acc);
            }
            return;
        }
        let mut next = Vec::new();
        if here.x > 0 {
            next.push(Cell::new(here.x - 1, here.y));
        }
        if here.x + 1 < width {
            next.push(Cell::new(here.x + 1, here.y));
        }
        if here.y > 0 {
            next.push(Cell::new(here.x, here.y - 1));
        }
        if here.y + 1 < height {
            next.push(Cell::new(here.x, here.y + 1));
        }
        for n in next {
            let i = n.y * width + n.x;
            if seen[i] {
                continue;
            }
            if let Some(c) = costs[i] {
                seen[i] = true;
                dfs(costs, width, height, n, goal, seen, acc + c, best);
                seen[i] = false;
            }
        }
    }
    let mut seen = vec![false; width * height];
    seen[start.y * width + start.x] = true;
    let mut best = None;
    dfs(costs, width, height, start, goal, &mut seen, 0.0, &mut best);
    best
}

/// Small deterministic generator so fixtures do not depend on `rand`'s
/// stream stability.
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }
}

/// Random grid with one-hot (or occasionally multi-hot) features and a few
/// obstacles, keeping `keep` open.
pub fn random_env(rng: &mut SplitMix, width: usize, height: usize, d: usize, keep: Cell, multi_hot: bool) -> Environment {
    let n = width * height;
    let mut obstacles = Vec::new();
    let mut cells = Vec::with_capacity(n);
    for i in 0..n {
        let c = Cell::new(i % width, i / width);
        let mut bits = vec![0u8; d];
        bits[rng.below(d)] = 1;
        if multi_hot && rng.uniform() < 0.3 {
            bits[rng.below(d)] = 1;
        }
        cells.push(bits);
        if c != keep && rng.uniform() < 0.15 {
            obstacles.push(c);
        }
    }
    Environment::from_file(EnvironmentFile {
        width,
        height,
        features: (0..d).map(|i| format!("f{i}")).collect(),
        cells,
        obstacles,
        discount: 0.9,
        horizon: 5,
    })
    .unwrap()
}

pub fn one_hot_env(width: usize, height: usize, labels: &[usize], d: usize, obstacles: Vec<Cell>, horizon: usize) -> Environment {
    assert_eq!(labels.len(), width * height);
    Environment::from_file(EnvironmentFile {
        width,
        height,
        features: (0..d).map(|i| format!("f{i}")).collect(),
        cells: labels
            .iter()
            .map(|&l| {
                let mut b = vec![0u8; d];
                b[l] = 1;
                b
            })
            .collect(),
        obstacles,
        discount: 0.9,
        horizon,
    })
    .unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
