//! Independent reference implementations the integration tests compare
//! the library against.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Matrix1, Matrix2, RowVector2, Vector2};
use rand::Rng;
use stg::bench::{gen_campus, CampusSpec};
use stg::sim::KalmanEtaState;
use stg::world::{load_world, WorldModel};

/// Undirected edge `(a, b, length, traversable)` between node indices.
pub type Edge = (usize, usize, u32, bool);

pub fn node_id(i: usize) -> String {
    format!("n{i}")
}

/// A world of `n` room nodes joined by `edges`, no sensors.
pub fn graph_world(n: usize, edges: &[Edge]) -> WorldModel {
    let nodes: Vec<String> = (0..n)
        .map(|i| format!(r#"{{"id":"n{i}","name":"N{i}","kind":"room","pos":[{i},0],"tags":[]}}"#))
        .collect();
    let edges: Vec<String> = edges
        .iter()
        .map(|(a, b, l, t)| {
            format!(r#"{{"a":"n{a}","b":"n{b}","kind":"intra_floor","traversable":{t},"length_m":{l}}}"#)
        })
        .collect();
    let doc = format!(
        r#"{{"meta":{{"name":"g","crs":"site-local-cartesian-meters"}},"nodes":[{}],"edges":[{}],"sensors":[]}}"#,
        nodes.join(","),
        edges.join(",")
    );
    load_world(doc.as_bytes()).expect("generated graph is valid")
}

/// Up to `max_n` nodes, each pair joined with probability 0.35, integer
/// lengths 1..=9, one edge in five closed. Often disconnected.
pub fn random_graph(rng: &mut impl Rng, max_n: usize) -> (usize, Vec<Edge>) {
    let n = rng.random_range(2..=max_n);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(0.35) {
                edges.push((a, b, rng.random_range(1..=9), !rng.random_bool(0.2)));
            }
        }
    }
    (n, edges)
}

/// Enumerate every simple path over traversable edges and keep the least
/// (length, id sequence).
pub fn brute_shortest(n: usize, edges: &[Edge], a: usize, b: usize) -> Option<(u32, Vec<String>)> {
    let mut adj = vec![Vec::new(); n];
    for &(x, y, l, t) in edges {
        if t {
            adj[x].push((y, l));
            adj[y].push((x, l));
        }
    }
    let mut best: Option<(u32, Vec<String>)> = None;
    let mut path = vec![a];
    fn dfs(
        here: usize,
        b: usize,
        len: u32,
        adj: &[Vec<(usize, u32)>],
        path: &mut Vec<usize>,
        best: &mut Option<(u32, Vec<String>)>,
    ) {
        if here == b {
            let cand = (len, path.iter().map(|&i| node_id(i)).collect::<Vec<_>>());
            if best.as_ref().is_none_or(|cur| cand < *cur) {
                *best = Some(cand);
            }
            return;
        }
        for &(next, l) in &adj[here] {
            if !path.contains(&next) {
                path.push(next);
                dfs(next, b, len + l, adj, path, best);
                path.pop();
            }
        }
    }
    dfs(a, b, 0, &adj, &mut path, &mut best);
    best
}

/// Smallest number of candidate sets whose union is the universe.
pub fn brute_min_cover(universe: &[String], candidates: &BTreeMap<String, BTreeSet<String>>) -> Option<usize> {
    let sets: Vec<&BTreeSet<String>> = candidates.values().collect();
    let need: BTreeSet<&String> = universe.iter().collect();
    (0u32..1 << sets.len())
        .filter(|mask| {
            let mut got: BTreeSet<&String> = BTreeSet::new();
            for (i, s) in sets.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    got.extend(s.iter());
                }
            }
            need.iter().all(|n| got.contains(n))
        })
        .map(|mask| mask.count_ones() as usize)
        .min()
}

pub fn harmonic(n: usize) -> f64 {
    (1..=n).map(|k| 1.0 / k as f64).sum()
}

/// Textbook linear Kalman filter on state (position, velocity), position
/// measured, white-noise acceleration on velocity only.
pub struct RefKalman {
    pub x: Vector2<f64>,
    pub p: Matrix2<f64>,
    pub q: f64,
    pub r: f64,
}

impl RefKalman {
    pub fn from_state(s: &KalmanEtaState, q: f64, r: f64) -> Self {
        RefKalman {
            x: Vector2::new(s.s, s.v),
            p: Matrix2::new(s.p[0][0], s.p[0][1], s.p[1][0], s.p[1][1]),
            q,
            r,
        }
    }

    pub fn step(&mut self, dt: f64, z: Option<f64>) {
        let f = Matrix2::new(1.0, dt, 0.0, 1.0);
        let q = Matrix2::new(0.0, 0.0, 0.0, self.q * dt);
        self.x = f * self.x;
        self.p = f * self.p * f.transpose() + q;
        if let Some(z) = z {
            let h = RowVector2::new(1.0, 0.0);
            let s = h * self.p * h.transpose() + Matrix1::new(self.r);
            let k = self.p * h.transpose() * s.try_inverse().expect("positive innovation variance");
            let y = z - (h * self.x)[0];
            self.x += k * y;
            self.p = (Matrix2::identity() - k * h) * self.p;
        }
    }
}

/// Arrival-time standard deviation by central differences of
/// `(target - s) / v` and the state covariance.
pub fn fd_eta_std(state: &KalmanEtaState, target: f64, h: f64) -> f64 {
    let f = |s: f64, v: f64| (target - s) / v;
    let gs = (f(state.s + h, state.v) - f(state.s - h, state.v)) / (2.0 * h);
    let gv = (f(state.s, state.v + h) - f(state.s, state.v - h)) / (2.0 * h);
    let p = state.p;
    (gs * gs * p[0][0] + 2.0 * gs * gv * p[0][1] + gv * gv * p[1][1]).sqrt()
}

/// The default three-building campus at `seed`.
pub fn campus(seed: u64) -> WorldModel {
    gen_campus(&CampusSpec {
        seed,
        ..CampusSpec::default()
    })
    .expect("default campus spec is valid")
}

/// Ordinary least squares of `y` on `x`: (slope, intercept, r²).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx, sxy * sxy / (sxx * syy))
}
