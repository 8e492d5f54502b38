//! Event-driven simulation on a depth-truncated `d`-ary tree.
//!
//! The tree is the infinite `d`-ary tree rooted at `0` with an extra blue
//! anchor attached above the root; vertices are in states white, blue, red,
//! or dead. Blue takes an adjacent red vertex at rate 1; a red vertex `u`
//! infects each white child at rate `λ_{ℓ(u)}` and dies at rate `ρ_{ℓ(u)}`,
//! where `ℓ(u)` is the distance from `u` to the deepest blue vertex on its
//! root path. Sampling is the embedded jump chain of the continuous-time
//! dynamics: events are drawn proportionally to their rates, which is
//! exact in distribution because event identities, not their times, decide
//! every recorded statistic.
//!
//! Truncation instantiates nothing beyond `depth_cap`; spread events aiming
//! past the cap are never generated (memoryless thinning, identical in law
//! to generating and dropping them). Subtrees hanging under a dead vertex
//! can never be reached by blue, so their events are pruned; this changes
//! the raw event count but no blue statistic.
//!
//! Vertex rates live in a Fenwick tree, so drawing an event is
//! `O(log |active|)`. Blue advancing into `v` shifts `ℓ` by exactly -1 for
//! every red vertex under `v` (the deepest blue ancestor moves from `v`'s
//! parent to `v`), so rate maintenance walks only the instantiated subtree
//! below the captured vertex.

use crate::jumpchain::reach_table;
use crate::numeric::mean_stderr;
use crate::rates::RateProfile;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexState {
    White,
    Blue,
    Red,
    Dead,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    /// Blue advanced into a red vertex.
    Capture { vertex: u32 },
    /// A red vertex died.
    Death { vertex: u32 },
    /// A red vertex infected a fresh white child.
    Spread { parent: u32, child: u32 },
}

#[derive(Debug, Clone, Copy)]
pub struct TreeSimConfig {
    pub d: u32,
    pub depth_cap: u32,
    pub max_events: u64,
}

impl TreeSimConfig {
    pub fn new(d: u32, depth_cap: u32) -> Self {
        assert!(d >= 1, "branching factor must be at least 1");
        assert!(depth_cap >= 1, "depth cap must be at least 1");
        TreeSimConfig {
            d,
            depth_cap,
            max_events: u64::MAX,
        }
    }

    pub fn with_max_events(mut self, max_events: u64) -> Self {
        self.max_events = max_events;
        self
    }
}

/// Statistics of one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub seed: u64,
    /// Vertices ever blue, anchor included.
    pub blue_count: u64,
    /// Blue reached a vertex at root distance `depth_cap`.
    pub reached_cap: bool,
    /// Root distance of the deepest ever-blue tree vertex; `None` when only
    /// the anchor is blue.
    pub max_blue_depth: Option<u32>,
    /// Ever-blue counts indexed by root distance `0..=depth_cap`.
    pub per_depth_blue: Vec<u64>,
    pub events: u64,
    /// Stopped on the event budget instead of exhausting all transitions.
    pub exhausted: bool,
}

impl SimOutcome {
    /// Position on the anchor-rooted line: `max_blue_depth + 1`, or 0 when
    /// only the anchor is blue. At `d = 1` this is the reach `Y` of the
    /// half-line process.
    pub fn line_reach(&self) -> u32 {
        self.max_blue_depth.map_or(0, |depth| depth + 1)
    }
}

struct Vertex {
    parent: u32,
    /// Distance from the anchor (anchor 0, root 1).
    pos: u32,
    state: VertexState,
    /// Distance to the deepest blue ancestor; maintained while red.
    ell: u32,
    /// Children not yet instantiated (they are white).
    white_slots: u32,
    children: Vec<u32>,
    /// Under a dead vertex: unreachable by blue, carries no events.
    pruned: bool,
}

/// Fenwick tree over per-vertex total rates.
struct RatePool {
    tree: Vec<f64>,
    values: Vec<f64>,
}

impl RatePool {
    fn new() -> Self {
        RatePool {
            tree: Vec::new(),
            values: Vec::new(),
        }
    }

    fn push(&mut self, value: f64) {
        self.values.push(value);
        let i = self.tree.len() + 1;
        let mut node = value;
        let lowbit = i & i.wrapping_neg();
        let mut step = 1;
        while step < lowbit {
            node += self.tree[i - 1 - step];
            step <<= 1;
        }
        self.tree.push(node);
    }

    fn set(&mut self, idx: usize, value: f64) {
        let delta = value - self.values[idx];
        if delta == 0.0 {
            return;
        }
        self.values[idx] = value;
        let mut i = idx + 1;
        while i <= self.tree.len() {
            self.tree[i - 1] += delta;
            i += i & i.wrapping_neg();
        }
    }

    fn total(&self) -> f64 {
        let mut acc = 0.0;
        let mut i = self.tree.len();
        while i > 0 {
            acc += self.tree[i - 1];
            i -= i & i.wrapping_neg();
        }
        acc
    }

    /// First index whose prefix sum exceeds `x`.
    fn find(&self, mut x: f64) -> usize {
        let n = self.tree.len();
        let mut pos = 0usize;
        let mut bit = n.next_power_of_two();
        while bit > 0 {
            let next = pos + bit;
            if next <= n && self.tree[next - 1] <= x {
                x -= self.tree[next - 1];
                pos = next;
            }
            bit >>= 1;
        }
        pos.min(n.saturating_sub(1))
    }

    /// Rebuild from the stored values (drift repair).
    fn rebuild(&mut self) {
        let values = std::mem::take(&mut self.values);
        self.tree.clear();
        for &v in &values {
            self.values.push(v);
            let i = self.tree.len() + 1;
            let mut node = v;
            let lowbit = i & i.wrapping_neg();
            let mut step = 1;
            while step < lowbit {
                node += self.tree[i - 1 - step];
                step <<= 1;
            }
            self.tree.push(node);
        }
    }
}

const ANCHOR: u32 = 0;
const ROOT: u32 = 1;

/// One seeded simulation; expose [`TreeSim::step`] to observe every event.
pub struct TreeSim {
    profile: RateProfile,
    cfg: TreeSimConfig,
    rng: ChaCha8Rng,
    vertices: Vec<Vertex>,
    rates: RatePool,
    active: usize,
    seed: u64,
    blue_count: u64,
    per_depth_blue: Vec<u64>,
    max_blue_pos: u32,
    events: u64,
}

impl TreeSim {
    pub fn new(profile: &RateProfile, cfg: TreeSimConfig, seed: u64) -> Self {
        let mut sim = TreeSim {
            profile: profile.clone(),
            cfg,
            rng: seeded_rng(seed, 0),
            vertices: Vec::with_capacity(64),
            rates: RatePool::new(),
            active: 0,
            seed,
            blue_count: 1, // the anchor
            per_depth_blue: vec![0; cfg.depth_cap as usize + 1],
            max_blue_pos: 0,
            events: 0,
        };
        sim.vertices.push(Vertex {
            parent: u32::MAX,
            pos: 0,
            state: VertexState::Blue,
            ell: 0,
            white_slots: 0,
            children: vec![ROOT],
            pruned: false,
        });
        sim.rates.push(0.0);
        sim.vertices.push(Vertex {
            parent: ANCHOR,
            pos: 1,
            state: VertexState::Red,
            ell: 1,
            white_slots: if cfg.depth_cap > 0 { cfg.d } else { 0 },
            children: Vec::new(),
            pruned: false,
        });
        sim.rates.push(0.0);
        sim.refresh_rate(ROOT);
        sim
    }

    /// With `stream` for deterministic batch seeding.
    fn with_stream(profile: &RateProfile, cfg: TreeSimConfig, seed: u64, stream: u64) -> Self {
        let mut sim = TreeSim::new(profile, cfg, seed);
        sim.rng = seeded_rng(seed, stream);
        sim
    }

    fn rate_of(&self, id: u32) -> f64 {
        let v = &self.vertices[id as usize];
        if v.state != VertexState::Red || v.pruned {
            return 0.0;
        }
        let ell = v.ell as u64;
        let capture = if self.vertices[v.parent as usize].state == VertexState::Blue {
            1.0
        } else {
            0.0
        };
        capture + self.profile.rho(ell) + v.white_slots as f64 * self.profile.lambda(ell)
    }

    fn refresh_rate(&mut self, id: u32) {
        let new = self.rate_of(id);
        let old = self.rates.values[id as usize];
        if old == 0.0 && new > 0.0 {
            self.active += 1;
        } else if old > 0.0 && new == 0.0 {
            self.active -= 1;
        }
        self.rates.set(id as usize, new);
    }

    /// Fires one event, or returns `None` when no transition remains.
    pub fn step(&mut self) -> Option<Event> {
        if self.active == 0 {
            return None;
        }
        let (id, rate) = loop {
            let total = self.rates.total();
            if total <= 0.0 || total.is_nan() {
                // Accumulated float drift; repair and re-check.
                self.rates.rebuild();
                if self.rates.total() <= 0.0 {
                    return None;
                }
                continue;
            }
            let x: f64 = self.rng.gen::<f64>() * total;
            let id = self.rates.find(x) as u32;
            let rate = self.rate_of(id);
            if rate > 0.0 {
                break (id, rate);
            }
            self.rates.rebuild();
        };
        self.events += 1;

        let v = &self.vertices[id as usize];
        let ell = v.ell as u64;
        let capture = if self.vertices[v.parent as usize].state == VertexState::Blue {
            1.0
        } else {
            0.0
        };
        let death = self.profile.rho(ell);
        let y: f64 = self.rng.gen::<f64>() * rate;

        if y < capture {
            self.fire_capture(id);
            Some(Event::Capture { vertex: id })
        } else if y < capture + death {
            self.fire_death(id);
            Some(Event::Death { vertex: id })
        } else {
            let child = self.fire_spread(id);
            Some(Event::Spread { parent: id, child })
        }
    }

    fn fire_capture(&mut self, id: u32) {
        self.vertices[id as usize].state = VertexState::Blue;
        self.blue_count += 1;
        let pos = self.vertices[id as usize].pos;
        self.per_depth_blue[pos as usize - 1] += 1;
        self.max_blue_pos = self.max_blue_pos.max(pos);
        self.refresh_rate(id);

        // The deepest blue ancestor of everything below moves one level
        // down: decrement ell across the instantiated red subtree and
        // refresh rates (children of `id` also gain their capture term).
        let mut stack: Vec<u32> = self.vertices[id as usize].children.clone();
        while let Some(u) = stack.pop() {
            stack.extend_from_slice(&self.vertices[u as usize].children);
            if self.vertices[u as usize].state == VertexState::Red {
                self.vertices[u as usize].ell -= 1;
                self.refresh_rate(u);
            }
        }
    }

    fn fire_death(&mut self, id: u32) {
        self.vertices[id as usize].state = VertexState::Dead;
        self.refresh_rate(id);
        // Blue can never pass a dead vertex: everything below is inert for
        // every blue statistic. Drop its events.
        let mut stack: Vec<u32> = self.vertices[id as usize].children.clone();
        while let Some(u) = stack.pop() {
            stack.extend_from_slice(&self.vertices[u as usize].children);
            if !self.vertices[u as usize].pruned {
                self.vertices[u as usize].pruned = true;
                self.refresh_rate(u);
            }
        }
    }

    fn fire_spread(&mut self, id: u32) -> u32 {
        let child_id = self.vertices.len() as u32;
        let (pos, ell) = {
            let v = &mut self.vertices[id as usize];
            debug_assert!(v.white_slots > 0);
            v.white_slots -= 1;
            v.children.push(child_id);
            (v.pos + 1, v.ell + 1)
        };
        // Root distance of the child is pos - 1; it gets child slots only
        // strictly inside the cap.
        let slots = if pos <= self.cfg.depth_cap {
            self.cfg.d
        } else {
            0
        };
        self.vertices.push(Vertex {
            parent: id,
            pos,
            state: VertexState::Red,
            ell,
            white_slots: slots,
            children: Vec::new(),
            pruned: false,
        });
        self.rates.push(0.0);
        self.refresh_rate(child_id);
        self.refresh_rate(id);
        child_id
    }

    pub fn run(&mut self) -> SimOutcome {
        while self.events < self.cfg.max_events {
            if self.step().is_none() {
                break;
            }
        }
        self.outcome()
    }

    pub fn outcome(&self) -> SimOutcome {
        SimOutcome {
            seed: self.seed,
            blue_count: self.blue_count,
            reached_cap: self.max_blue_pos == self.cfg.depth_cap + 1,
            max_blue_depth: if self.max_blue_pos == 0 {
                None
            } else {
                Some(self.max_blue_pos - 1)
            },
            per_depth_blue: self.per_depth_blue.clone(),
            events: self.events,
            exhausted: self.active > 0 && self.events >= self.cfg.max_events,
        }
    }

    pub fn vertex_count(&self) -> u32 {
        self.vertices.len() as u32
    }

    pub fn vertex_state(&self, id: u32) -> VertexState {
        self.vertices[id as usize].state
    }

    pub fn parent(&self, id: u32) -> Option<u32> {
        if id == ANCHOR {
            None
        } else {
            Some(self.vertices[id as usize].parent)
        }
    }

    pub fn is_pruned(&self, id: u32) -> bool {
        self.vertices[id as usize].pruned
    }

    /// Cached `ℓ` for a red vertex.
    pub fn cached_ell(&self, id: u32) -> Option<u32> {
        let v = &self.vertices[id as usize];
        (v.state == VertexState::Red).then_some(v.ell)
    }

    /// Distance to the deepest blue ancestor by walking the root path; the
    /// brute-force reference for the cached value.
    pub fn nearest_blue_distance(&self, id: u32) -> u32 {
        let mut dist = 0;
        let mut cur = id;
        loop {
            cur = self.vertices[cur as usize].parent;
            dist += 1;
            if self.vertices[cur as usize].state == VertexState::Blue {
                return dist;
            }
        }
    }
}

fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One full seeded run.
pub fn simulate_tree(profile: &RateProfile, cfg: TreeSimConfig, seed: u64) -> SimOutcome {
    TreeSim::new(profile, cfg, seed).run()
}

/// `runs` independent runs; run `i` draws from stream `i` of the master
/// seed, so results are reproducible for any worker count. Outcomes are
/// ordered by run index.
pub fn simulate_tree_batch(
    profile: &RateProfile,
    cfg: TreeSimConfig,
    master_seed: u64,
    runs: u64,
) -> Vec<SimOutcome> {
    (0..runs as usize)
        .into_par_iter()
        .with_min_len(64)
        .map(|run| TreeSim::with_stream(profile, cfg, master_seed, run as u64).run())
        .collect()
}

/// Truncated expected-blue series: `1 + Σ_{k=0}^{cap} d^k·P(Y ≥ k+1)`, the
/// exact mean of `blue_count` on the capped tree. Every vertex at root
/// distance `k` is eventually blue with probability `P(Y ≥ k+1)`: the states
/// along its root path form an autonomous copy of the half-line process, and
/// the leading 1 counts the anchor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesReport {
    pub value: f64,
    /// `terms[k] = d^k · P(Y ≥ k+1)`.
    pub terms: Vec<f64>,
}

pub fn truncated_series(profile: &RateProfile, d: u32, depth_cap: u32) -> SeriesReport {
    let weights = crate::rates::StepWeights::<f64>::new(profile);
    let reach = reach_table(&weights, depth_cap as usize + 1);
    let mut terms = Vec::with_capacity(depth_cap as usize + 1);
    let mut value = 1.0;
    let mut d_pow = 1.0;
    for k in 0..=depth_cap as usize {
        let term = d_pow * reach.p_reach[k + 1];
        terms.push(term);
        value += term;
        d_pow *= d as f64;
    }
    SeriesReport { value, terms }
}

/// Monte Carlo estimate of `E[blue_count]` next to the exact series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpectedBlueReport {
    pub runs: u64,
    pub seed: u64,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub series: SeriesReport,
    pub gap: f64,
}

pub fn expected_blue_estimate(
    profile: &RateProfile,
    cfg: TreeSimConfig,
    runs: u64,
    seed: u64,
) -> ExpectedBlueReport {
    let outcomes = simulate_tree_batch(profile, cfg, seed, runs);
    let counts: Vec<f64> = outcomes.iter().map(|o| o.blue_count as f64).collect();
    let (mc_mean, mc_stderr) = mean_stderr(&counts);
    let series = truncated_series(profile, cfg.d, cfg.depth_cap);
    ExpectedBlueReport {
        runs,
        seed,
        mc_mean,
        mc_stderr,
        gap: mc_mean - series.value,
        series,
    }
}
