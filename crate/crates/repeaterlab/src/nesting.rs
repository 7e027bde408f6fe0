//! Nested generation, purification and connection of pairs over a chain of
//! repeater stations.
//!
//! A purified pair over `k` stations is characterized by its Bell vector
//! `ℱ_A(k)` and the average wall-clock time `𝒯_A(k)` spent creating it. From
//! pairs over half the distance, one level of the protocol builds a stored B
//! pair (two purified halves connected through one fresh middle pair), an
//! auxiliary C pair (fresh pairs at both ends and the middle, purified pairs
//! between), and pumps the B pair with fresh C pairs a fixed number of rounds.
//! Each failed pump discards the stored pair, which the expected-time
//! recursion accounts for by dividing through the success probability.
//!
//! Local operation and measurement times are neglected; the classical
//! communication time `t_c` between adjacent stations and the pair-generation
//! time `T₀` set the time scale.

use serde::{Deserialize, Serialize};

use crate::bell::{connect_chain, purify_step, BellVector, ErrorModel};
use crate::error::{Error, Result};

/// A pair state together with the average time spent creating it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairState {
    pub state: BellVector,
    /// Expected wall-clock creation time, seconds.
    pub avg_time: f64,
}

/// Number of purification rounds per nesting level. `PerLevel` entries are
/// indexed by level `⌈log₂ n⌉ − 1`; the last entry repeats for deeper levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rounds {
    Fixed(u32),
    PerLevel(Vec<u32>),
}

impl Rounds {
    pub fn for_stations(&self, n: usize) -> u32 {
        match self {
            Rounds::Fixed(m) => *m,
            Rounds::PerLevel(v) => {
                if v.is_empty() {
                    return 0;
                }
                // level 1 covers n = 2, level 2 covers n in (2, 4], ...
                let level = (usize::BITS - (n - 1).leading_zeros()) as usize;
                v[(level - 1).min(v.len() - 1)]
            }
        }
    }
}

/// Full configuration of one protocol run.
#[derive(Debug, Clone, PartialEq)]
pub struct NestingConfig {
    /// Number of repeater stations spanned by the final pair (n ≥ 2).
    pub stations: usize,
    /// Purification rounds per level.
    pub rounds: Rounds,
    pub err: ErrorModel,
    /// Elementary-pair Bell vector ℱ₀ produced by the generation scheme.
    pub elementary: BellVector,
    /// Average elementary-pair generation time T₀, seconds.
    pub pair_time: f64,
    /// One-hop classical communication time t_c, seconds.
    pub link_delay: f64,
}

impl NestingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stations < 2 {
            return Err(Error::Domain(format!(
                "stations = {} must be >= 2",
                self.stations
            )));
        }
        if !(self.pair_time > 0.0) {
            return Err(Error::Domain(format!(
                "pair_time = {} must be > 0",
                self.pair_time
            )));
        }
        if !(self.link_delay >= 0.0) {
            return Err(Error::Domain(format!(
                "link_delay = {} must be >= 0",
                self.link_delay
            )));
        }
        Ok(())
    }
}

/// One pump round: the stored-pair state after the round, its cumulative
/// average time, and the round's success probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpRecord {
    pub state: BellVector,
    pub avg_time: f64,
    pub success_prob: f64,
}

/// Everything computed at one distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub stations: usize,
    pub b: PairState,
    pub c: PairState,
    pub pumps: Vec<PumpRecord>,
    /// Final purified pair ℱ_A, 𝒯_A at this distance.
    pub a: PairState,
}

/// Results for every distance from 2 up to the configured span.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolTrace {
    levels: Vec<LevelRecord>,
}

impl ProtocolTrace {
    /// Record for `n` stations (n ≥ 2).
    pub fn level(&self, n: usize) -> Option<&LevelRecord> {
        self.levels.get(n.checked_sub(2)?)
    }

    pub fn levels(&self) -> &[LevelRecord] {
        &self.levels
    }

    /// The final purified pair over the full span.
    pub fn final_pair(&self) -> &PairState {
        &self.levels.last().expect("trace has at least n = 2").a
    }
}

/// Memoized purified pairs by station count. Spans of 0 or 1 stations resolve
/// to a fresh elementary pair.
pub struct LevelTable {
    elementary: PairState,
    computed: Vec<PairState>,
}

impl LevelTable {
    pub fn new(cfg: &NestingConfig) -> Self {
        Self {
            elementary: PairState {
                state: cfg.elementary,
                avg_time: cfg.pair_time,
            },
            computed: Vec::new(),
        }
    }

    pub fn get(&self, k: usize) -> Result<PairState> {
        if k <= 1 {
            return Ok(self.elementary);
        }
        self.computed.get(k - 2).copied().ok_or_else(|| {
            Error::Internal(format!("purified pair over {k} stations not yet computed"))
        })
    }

    fn push(&mut self, pair: PairState) {
        self.computed.push(pair);
    }
}

fn split(n: usize) -> (usize, usize) {
    (n / 2, n.div_ceil(2))
}

/// Builds the stored B pair over `n` stations: the two purified half-distance
/// pairs connected through one fresh middle pair,
/// `ℱ_B(n) = 𝒞({ℱ_A(n/2), ℱ₀, ℱ_A(n′/2)})`, created in time
/// `𝒯_B(n) = 𝒯_A(n′/2) + T₀ + (n′/2)·t_c`. For n = 2 the B pair is a fresh
/// elementary pair.
pub fn build_b(n: usize, memo: &LevelTable, cfg: &NestingConfig) -> Result<PairState> {
    if n == 2 {
        return memo.get(1);
    }
    let (lo, hi) = split(n);
    let left = memo.get(lo)?;
    let right = memo.get(hi)?;
    let state = connect_chain(&[left.state, cfg.elementary, right.state], &cfg.err)?;
    let avg_time = right.avg_time + cfg.pair_time + hi as f64 * cfg.link_delay;
    Ok(PairState { state, avg_time })
}

/// Builds the auxiliary C pair over `n` stations:
/// `ℱ_C(n) = 𝒞({ℱ₀, ℱ_A(n/2−1), ℱ₀, ℱ_A(n′/2−1), ℱ₀})`, created in time
/// `𝒯_C(n) = 𝒯_A(n′/2−1) + T₀ + (n−2)·t_c`. For n = 2 the C pair is a fresh
/// elementary pair; sub-spans of 0 or 1 stations resolve to fresh pairs.
pub fn build_c(n: usize, memo: &LevelTable, cfg: &NestingConfig) -> Result<PairState> {
    if n == 2 {
        return memo.get(1);
    }
    let (lo, hi) = split(n);
    let left = memo.get(lo - 1)?;
    let right = memo.get(hi - 1)?;
    let state = connect_chain(
        &[
            cfg.elementary,
            left.state,
            cfg.elementary,
            right.state,
            cfg.elementary,
        ],
        &cfg.err,
    )?;
    let avg_time = right.avg_time + cfg.pair_time + (n - 2) as f64 * cfg.link_delay;
    Ok(PairState { state, avg_time })
}

/// Pumps the stored pair `rounds` times with fresh auxiliary pairs.
///
/// Each round maps the state through one purification step and the average
/// time through `𝒯_m = (𝒯_{m−1} + 𝒯_C + (n−1)·t_c)/P_S(m)`. Zero rounds
/// returns the stored pair unchanged.
pub fn pump(
    stored: PairState,
    aux: &PairState,
    rounds: u32,
    err: &ErrorModel,
    n: usize,
    link_delay: f64,
) -> Result<(PairState, Vec<PumpRecord>)> {
    let mut current = stored;
    let mut records = Vec::with_capacity(rounds as usize);
    for _ in 0..rounds {
        let outcome = purify_step(&current.state, &aux.state, err)?;
        if outcome.success_prob < 1e-9 {
            return Err(Error::PathologicalParameters(format!(
                "pump success probability {} below 1e-9 over {n} stations",
                outcome.success_prob
            )));
        }
        let avg_time = (current.avg_time + aux.avg_time + (n - 1) as f64 * link_delay)
            / outcome.success_prob;
        current = PairState {
            state: outcome.state,
            avg_time,
        };
        records.push(PumpRecord {
            state: outcome.state,
            avg_time,
            success_prob: outcome.success_prob,
        });
    }
    Ok((current, records))
}

/// Runs the full bottom-up recursion: for every distance from 2 stations to
/// the configured span, build B and C, pump, and record the level.
pub fn recurse(cfg: &NestingConfig) -> Result<ProtocolTrace> {
    cfg.validate()?;
    let mut memo = LevelTable::new(cfg);
    let mut levels = Vec::with_capacity(cfg.stations - 1);
    for n in 2..=cfg.stations {
        let b = build_b(n, &memo, cfg)?;
        let c = build_c(n, &memo, cfg)?;
        let rounds = cfg.rounds.for_stations(n);
        let (a, pumps) = pump(b, &c, rounds, &cfg.err, n, cfg.link_delay)?;
        memo.push(a);
        levels.push(LevelRecord {
            stations: n,
            b,
            c,
            pumps,
            a,
        });
    }
    Ok(ProtocolTrace { levels })
}

const FIXED_POINT_TOL: f64 = 1e-12;
const FIXED_POINT_MAX_ITER: usize = 100_000;

fn iterate_to_fixed_point(
    seed: &BellVector,
    aux: &BellVector,
    err: &ErrorModel,
    damping: f64,
) -> Result<BellVector> {
    let mut current = *seed;
    let mut previous: Option<BellVector> = None;
    for _ in 0..FIXED_POINT_MAX_ITER {
        let next_raw = purify_step(&current, aux, err)?.state;
        let next = if damping < 1.0 {
            let c = current.components();
            let n = next_raw.components();
            let mut mixed = [0.0; 4];
            for k in 0..4 {
                mixed[k] = damping * n[k] + (1.0 - damping) * c[k];
            }
            BellVector::new(mixed[0], mixed[1], mixed[2], mixed[3])?
        } else {
            next_raw
        };
        if next.max_abs_diff(&current) < FIXED_POINT_TOL {
            return Ok(next);
        }
        // period-2 cycle: retry the whole solve with damping
        if let Some(prev) = previous {
            if next.max_abs_diff(&prev) < FIXED_POINT_TOL && damping >= 1.0 {
                return iterate_to_fixed_point(seed, aux, err, 0.5);
            }
        }
        previous = Some(current);
        current = next;
    }
    let residual = purify_step(&current, aux, err)?.state.max_abs_diff(&current);
    Err(Error::NoFixedPoint {
        iterations: FIXED_POINT_MAX_ITER,
        residual,
    })
}

/// Solves `ℱ_A = 𝒫(ℱ_A, ℱ_C)` for the pair vector unchanged by further
/// pumping with auxiliary pairs of quality `aux`.
///
/// Plain iteration seeded from the auxiliary vector itself, with 0.5 damping
/// as a fallback if a period-2 cycle appears. Because the vector has three
/// free parameters, iteration from one seed could in principle settle on a
/// spurious point, so the solve is repeated from the four Bell basis vectors
/// (skipping seeds whose pumping is degenerate) and all runs must agree.
pub fn fixed_point(aux: &BellVector, err: &ErrorModel) -> Result<BellVector> {
    let primary = iterate_to_fixed_point(aux, aux, err, 1.0)?;
    let seeds = [
        BellVector::new(1.0, 0.0, 0.0, 0.0)?,
        BellVector::new(0.0, 1.0, 0.0, 0.0)?,
        BellVector::new(0.0, 0.0, 1.0, 0.0)?,
        BellVector::new(0.0, 0.0, 0.0, 1.0)?,
    ];
    for seed in &seeds {
        match iterate_to_fixed_point(seed, aux, err, 1.0) {
            Ok(other) => {
                if other.max_abs_diff(&primary) > 1e-9 {
                    return Err(Error::NoFixedPoint {
                        iterations: FIXED_POINT_MAX_ITER,
                        residual: other.max_abs_diff(&primary),
                    });
                }
            }
            // a degenerate extremal seed cannot be pumped at all; skip it
            Err(Error::DegenerateInput(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(primary)
}

/// One rung of the asymptote staircase: the auxiliary vector built at this
/// nesting level and the fixed-point pair it pumps to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaircaseStep {
    pub aux: BellVector,
    pub purified: BellVector,
}

/// Result of the distance-asymptote iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Asymptote {
    /// The asymptotic singlet fidelity F_∞.
    pub fidelity: f64,
    /// The full limiting pair vector.
    pub limit: BellVector,
    /// The staircase of (auxiliary, purified) rungs, level 0 first.
    pub staircase: Vec<StaircaseStep>,
}

const ASYMPTOTE_TOL: f64 = 1e-10;
const ASYMPTOTE_MAX_LEVELS: usize = 400;

/// Iterates the nesting-level composition to its distance-independent limit.
///
/// Level 0 pumps fresh elementary pairs to their fixed point; every further
/// level builds an auxiliary chain `𝒞({ℱ_A, ℱ_A, ℱ₀, ℱ₀, ℱ₀})` from the
/// previous purified pair and pumps to the fixed point again. The limit is
/// the upper intercept of the purification curve and the auxiliary-creation
/// curve. A persistent two-cycle is reported with both accumulation points.
pub fn asymptote(elementary: &BellVector, err: &ErrorModel) -> Result<Asymptote> {
    let mut purified = fixed_point(elementary, err)?;
    let mut staircase = vec![StaircaseStep {
        aux: *elementary,
        purified,
    }];
    for _ in 0..ASYMPTOTE_MAX_LEVELS {
        let aux = connect_chain(
            &[purified, purified, *elementary, *elementary, *elementary],
            err,
        )?;
        let next = fixed_point(&aux, err)?;
        staircase.push(StaircaseStep {
            aux,
            purified: next,
        });
        if next.max_abs_diff(&purified) < ASYMPTOTE_TOL {
            return Ok(Asymptote {
                fidelity: next.fidelity(),
                limit: next,
                staircase,
            });
        }
        purified = next;
    }
    // distinguish oscillation from slow convergence
    let k = staircase.len();
    let last = staircase[k - 1].purified;
    let second_last = staircase[k - 2].purified;
    let third_last = staircase[k - 3].purified;
    if last.max_abs_diff(&third_last) < ASYMPTOTE_TOL {
        let (low, high) = if last.fidelity() < second_last.fidelity() {
            (last.fidelity(), second_last.fidelity())
        } else {
            (second_last.fidelity(), last.fidelity())
        };
        return Err(Error::AsymptoteOscillation { low, high });
    }
    Err(Error::NoFixedPoint {
        iterations: ASYMPTOTE_MAX_LEVELS,
        residual: last.max_abs_diff(&second_last),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::shape_state;
    use approx::assert_abs_diff_eq;

    fn cfg(stations: usize, rounds: u32, f0: f64, p: f64) -> NestingConfig {
        NestingConfig {
            stations,
            rounds: Rounds::Fixed(rounds),
            err: ErrorModel::new(p, p).unwrap(),
            elementary: shape_state(f0, 0.0).unwrap(),
            pair_time: 1.0,
            link_delay: 0.01,
        }
    }

    #[test]
    fn two_station_base_case() {
        let trace = recurse(&cfg(2, 0, 0.97, 0.995)).unwrap();
        let a = trace.final_pair();
        assert_eq!(a.state, shape_state(0.97, 0.0).unwrap());
        assert_abs_diff_eq!(a.avg_time, 1.0, epsilon = 0.0);
    }

    #[test]
    fn two_station_pump_time() {
        let c = cfg(2, 1, 0.97, 0.995);
        let trace = recurse(&c).unwrap();
        let lvl = trace.level(2).unwrap();
        let ps = lvl.pumps[0].success_prob;
        // (T_B + T_C + t_c)/P_S with T_B = T_C = T0
        assert_abs_diff_eq!(lvl.a.avg_time, (1.0 + 1.0 + 0.01) / ps, epsilon = 1e-12);
    }

    #[test]
    fn perfect_protocol_is_lossless() {
        let trace = recurse(&cfg(64, 2, 1.0, 1.0)).unwrap();
        for lvl in trace.levels() {
            assert_eq!(lvl.a.state, BellVector::singlet());
        }
    }

    #[test]
    fn fidelity_monotone_in_distance() {
        let trace = recurse(&cfg(128, 2, 0.98, 0.995)).unwrap();
        let mut prev = f64::INFINITY;
        for lvl in trace.levels() {
            assert!(lvl.a.state.fidelity() <= prev + 1e-12);
            prev = lvl.a.state.fidelity();
        }
    }

    #[test]
    fn time_monotone_in_distance_and_rounds() {
        let trace = recurse(&cfg(64, 1, 0.98, 0.995)).unwrap();
        let mut prev = 0.0;
        for lvl in trace.levels() {
            assert!(lvl.a.avg_time > prev);
            prev = lvl.a.avg_time;
        }
        let more = recurse(&cfg(64, 3, 0.98, 0.995)).unwrap();
        for (one, three) in trace.levels().iter().zip(more.levels()) {
            assert!(three.a.avg_time > one.a.avg_time);
        }
    }

    #[test]
    fn pump_zero_rounds_is_identity() {
        let b = PairState {
            state: shape_state(0.9, 0.0).unwrap(),
            avg_time: 3.0,
        };
        let c = PairState {
            state: shape_state(0.95, 0.0).unwrap(),
            avg_time: 1.0,
        };
        let (out, recs) = pump(b, &c, 0, &ErrorModel::ideal(), 4, 0.01).unwrap();
        assert_eq!(out, b);
        assert!(recs.is_empty());
    }

    #[test]
    fn pump_converges_to_unit_fidelity_without_errors() {
        let aux = PairState {
            state: shape_state(0.9, 0.0).unwrap(),
            avg_time: 1.0,
        };
        let stored = aux;
        let (out, _) = pump(stored, &aux, 60, &ErrorModel::ideal(), 2, 0.0).unwrap();
        assert!(1.0 - out.state.fidelity() < 1e-10);
    }

    #[test]
    fn pump_approaches_fixed_point_from_below() {
        let err = ErrorModel::new(0.995, 0.995).unwrap();
        let aux = shape_state(0.97, 0.0).unwrap();
        let fp = fixed_point(&aux, &err).unwrap();
        let mut current = PairState {
            state: shape_state(0.9, 0.0).unwrap(),
            avg_time: 1.0,
        };
        let aux_pair = PairState {
            state: aux,
            avg_time: 1.0,
        };
        let mut last = current.state.fidelity();
        for _ in 0..30 {
            let (next, _) = pump(current, &aux_pair, 1, &err, 2, 0.0).unwrap();
            if next.state.fidelity() < fp.fidelity() {
                assert!(next.state.fidelity() >= last - 1e-12);
            }
            last = next.state.fidelity();
            current = next;
        }
        assert_abs_diff_eq!(current.state.fidelity(), fp.fidelity(), epsilon = 1e-6);
    }

    #[test]
    fn fixed_point_trivial_cases() {
        let err = ErrorModel::ideal();
        let fp = fixed_point(&BellVector::singlet(), &err).unwrap();
        assert_eq!(fp, BellVector::singlet());

        // phase-only auxiliary above 1/2 pumps to a perfect pair
        let fp = fixed_point(&shape_state(0.8, 0.0).unwrap(), &err).unwrap();
        assert!(1.0 - fp.fidelity() < 1e-11);
    }

    #[test]
    fn fixed_point_is_stationary() {
        let err = ErrorModel::new(0.99, 0.99).unwrap();
        let aux = shape_state(0.99, 0.0).unwrap();
        let fp = fixed_point(&aux, &err).unwrap();
        let pumped = purify_step(&fp, &aux, &err).unwrap().state;
        assert!(pumped.max_abs_diff(&fp) < 1e-11);
    }

    #[test]
    fn asymptote_perfect_operations() {
        let out = asymptote(&BellVector::singlet(), &ErrorModel::ideal()).unwrap();
        assert_abs_diff_eq!(out.fidelity, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn asymptote_half_percent_errors() {
        let err = ErrorModel::new(0.995, 0.995).unwrap();
        let out = asymptote(&shape_state(0.99, 0.0).unwrap(), &err).unwrap();
        assert_abs_diff_eq!(out.fidelity, 0.977, epsilon = 2e-3);
        // the limit is a joint fixed point of the two maps
        let aux = connect_chain(
            &[
                out.limit,
                out.limit,
                shape_state(0.99, 0.0).unwrap(),
                shape_state(0.99, 0.0).unwrap(),
                shape_state(0.99, 0.0).unwrap(),
            ],
            &err,
        )
        .unwrap();
        let again = fixed_point(&aux, &err).unwrap();
        assert!(again.max_abs_diff(&out.limit) < 1e-9);
    }

    #[test]
    fn memoized_matches_straight_line_recursion() {
        // straight-line recomputation with no memo table
        fn straight_a(n: usize, cfg: &NestingConfig) -> PairState {
            let elementary = PairState {
                state: cfg.elementary,
                avg_time: cfg.pair_time,
            };
            if n <= 1 {
                return elementary;
            }
            let (b, c) = if n == 2 {
                (elementary, elementary)
            } else {
                let (lo, hi) = (n / 2, n.div_ceil(2));
                let b_state = connect_chain(
                    &[
                        straight_a(lo, cfg).state,
                        cfg.elementary,
                        straight_a(hi, cfg).state,
                    ],
                    &cfg.err,
                )
                .unwrap();
                let b = PairState {
                    state: b_state,
                    avg_time: straight_a(hi, cfg).avg_time
                        + cfg.pair_time
                        + hi as f64 * cfg.link_delay,
                };
                let c_state = connect_chain(
                    &[
                        cfg.elementary,
                        straight_a(lo - 1, cfg).state,
                        cfg.elementary,
                        straight_a(hi - 1, cfg).state,
                        cfg.elementary,
                    ],
                    &cfg.err,
                )
                .unwrap();
                let c = PairState {
                    state: c_state,
                    avg_time: straight_a(hi - 1, cfg).avg_time
                        + cfg.pair_time
                        + (n - 2) as f64 * cfg.link_delay,
                };
                (b, c)
            };
            let rounds = cfg.rounds.for_stations(n);
            pump(b, &c, rounds, &cfg.err, n, cfg.link_delay).unwrap().0
        }

        let cfg = cfg(33, 2, 0.99, 0.995);
        let trace = recurse(&cfg).unwrap();
        for n in [2usize, 3, 5, 8, 16, 17, 32, 33] {
            let memoized = trace.level(n).unwrap().a;
            let straight = straight_a(n, &cfg);
            // bit-identical, not merely close
            assert_eq!(memoized.state, straight.state, "state at n = {n}");
            assert_eq!(memoized.avg_time, straight.avg_time, "time at n = {n}");
        }
    }

    #[test]
    fn per_level_round_schedule() {
        let r = Rounds::PerLevel(vec![1, 2, 3]);
        assert_eq!(r.for_stations(2), 1);
        assert_eq!(r.for_stations(3), 2);
        assert_eq!(r.for_stations(4), 2);
        assert_eq!(r.for_stations(5), 3);
        assert_eq!(r.for_stations(8), 3);
        assert_eq!(r.for_stations(1024), 3);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = cfg(1, 0, 0.9, 0.99);
        assert!(recurse(&c).is_err());
        c.stations = 4;
        c.pair_time = 0.0;
        assert!(recurse(&c).is_err());
    }
}
