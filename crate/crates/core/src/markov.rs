//! The feedback-loop model as an absorbing Markov chain.
//!
//! The watched video is an attractor with probability p_B (the attractor
//! share of a recommendation set has mean p_B), so the recommendation draw
//! can be marginalized out. Two state spaces are offered:
//!
//! * `Count`: the number of attractors in the history, `0..=h`. Exact for
//!   random eviction, where the evicted entry is uniform over the history.
//! * `Full`: the ordered binary history, `2^h` states. Exact for FIFO.
//!
//! In both, the all-A and all-B states are the only absorbing ones.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Catalog;

/// Largest history length accepted by the full representation.
pub const FULL_MAX_H: usize = 20;
/// Largest full history length solved directly without opting in to iteration.
pub const FULL_DIRECT_MAX_H: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Count,
    Full,
}

impl std::str::FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "count" => Ok(Representation::Count),
            "full" => Ok(Representation::Full),
            other => Err(Error::invalid(format!("unknown chain representation '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub h: usize,
    pub representation: Representation,
    /// Solve with Gauss-Seidel instead of a dense LU. Required for full chains with h > 11.
    pub iterative: bool,
}

impl ChainSpec {
    pub fn count(h: usize) -> Self {
        ChainSpec {
            h,
            representation: Representation::Count,
            iterative: false,
        }
    }

    pub fn full(h: usize) -> Self {
        ChainSpec {
            h,
            representation: Representation::Full,
            iterative: h > FULL_DIRECT_MAX_H,
        }
    }
}

/// Sparse row-stochastic matrix with its absorbing states marked.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    spec: ChainSpec,
    rows: Vec<Vec<(usize, f64)>>,
    absorbing: Vec<bool>,
    /// Index of the all-attractor state.
    rh_state: usize,
}

impl TransitionMatrix {
    /// Builds a chain from explicit rows; states whose row is a unit self-loop are absorbing.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>, rh_state: usize) -> Result<Self> {
        let n = rows.len();
        if rh_state >= n {
            return Err(Error::invalid("rh_state out of range"));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.iter().any(|&(j, p)| j >= n || !(0.0..=1.0).contains(&p)) {
                return Err(Error::invalid(format!("row {i} has an invalid entry")));
            }
            let sum: f64 = row.iter().map(|&(_, p)| p).sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!("row {i} sums to {sum}")));
            }
        }
        let absorbing = rows
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().all(|&(j, p)| j == i || p == 0.0))
            .collect();
        Ok(TransitionMatrix {
            spec: ChainSpec {
                h: 0,
                representation: Representation::Count,
                iterative: false,
            },
            rows,
            absorbing,
            rh_state,
        })
    }

    pub fn spec(&self) -> ChainSpec {
        self.spec
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, state: usize) -> &[(usize, f64)] {
        &self.rows[state]
    }

    pub fn probability(&self, from: usize, to: usize) -> f64 {
        self.rows[from].iter().filter(|&&(j, _)| j == to).map(|&(_, p)| p).sum()
    }

    pub fn is_absorbing(&self, state: usize) -> bool {
        self.absorbing[state]
    }

    pub fn absorbing_states(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.absorbing[i]).collect()
    }

    pub fn rh_state(&self) -> usize {
        self.rh_state
    }

    /// Human-readable state name: the count, or the history bits oldest first.
    pub fn label(&self, state: usize) -> String {
        match self.spec.representation {
            Representation::Count => state.to_string(),
            Representation::Full => full_label(state, self.spec.h),
        }
    }

    /// Full-chain state index for a history written oldest first (`'1'` = attractor).
    pub fn full_state(bits: &str) -> Result<usize> {
        if bits.is_empty() || bits.len() > FULL_MAX_H {
            return Err(Error::invalid(format!(
                "history pattern must have 1..={FULL_MAX_H} bits"
            )));
        }
        bits.chars().try_fold(0usize, |acc, c| match c {
            '0' => Ok(acc << 1),
            '1' => Ok((acc << 1) | 1),
            _ => Err(Error::invalid(format!("invalid history bit '{c}'"))),
        })
    }
}

fn full_label(state: usize, h: usize) -> String {
    (0..h)
        .rev()
        .map(|bit| if state >> bit & 1 == 1 { '1' } else { '0' })
        .collect()
}

pub fn build_chain(spec: ChainSpec) -> Result<TransitionMatrix> {
    let h = spec.h;
    if h == 0 {
        return Err(Error::invalid("h must be >= 1"));
    }
    let hf = h as f64;
    let (rows, absorbing, rh_state) = match spec.representation {
        Representation::Count => {
            let mut rows = Vec::with_capacity(h + 1);
            for k in 0..=h {
                if k == 0 || k == h {
                    rows.push(vec![(k, 1.0)]);
                    continue;
                }
                let share = k as f64 / hf;
                let move_p = share * (1.0 - share);
                rows.push(vec![(k - 1, move_p), (k, 1.0 - 2.0 * move_p), (k + 1, move_p)]);
            }
            let absorbing = (0..=h).map(|k| k == 0 || k == h).collect();
            (rows, absorbing, h)
        }
        Representation::Full => {
            if h > FULL_MAX_H {
                return Err(Error::StateExplosion(format!(
                    "full representation supports h <= {FULL_MAX_H}, got {h}"
                )));
            }
            if h > FULL_DIRECT_MAX_H && !spec.iterative {
                return Err(Error::invalid(format!(
                    "full chains with h > {FULL_DIRECT_MAX_H} need the iterative solver"
                )));
            }
            let n = 1usize << h;
            let mask = n - 1;
            let mut rows = Vec::with_capacity(n);
            let absorbing: Vec<bool> = (0..n).map(|s| s == 0 || s == mask).collect();
            for (s, &fixed) in absorbing.iter().enumerate() {
                if fixed {
                    rows.push(vec![(s, 1.0)]);
                    continue;
                }
                let p = s.count_ones() as f64 / hf;
                let shifted = (s << 1) & mask;
                rows.push(vec![(shifted, 1.0 - p), (shifted | 1, p)]);
            }
            (rows, absorbing, mask)
        }
    };
    Ok(TransitionMatrix {
        spec,
        rows,
        absorbing,
        rh_state,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    /// Dense LU with partial pivoting.
    Direct,
    /// Gauss-Seidel sweeps over the sparse rows.
    Iterative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionResult {
    /// Probability of ending in the all-attractor state, for every state.
    pub p_rh: Vec<f64>,
    /// Expected steps to absorption; zero for absorbing states.
    pub expected_steps: Vec<f64>,
    pub absorbing: Vec<bool>,
}

impl AbsorptionResult {
    /// Mean absorption probability over all full-chain states sharing a popcount.
    pub fn by_popcount(&self, h: usize) -> Vec<f64> {
        let mut sums = vec![0.0; h + 1];
        let mut counts = vec![0usize; h + 1];
        for (s, &p) in self.p_rh.iter().enumerate() {
            let k = s.count_ones() as usize;
            sums[k] += p;
            counts[k] += 1;
        }
        sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect()
    }

    /// CSV with header `state,absorbing,p_rh,expected_steps`.
    pub fn write_csv<W: Write>(&self, m: &TransitionMatrix, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["state", "absorbing", "p_rh", "expected_steps"])?;
        for s in 0..self.p_rh.len() {
            w.write_record([
                m.label(s),
                self.absorbing[s].to_string(),
                self.p_rh[s].to_string(),
                self.expected_steps[s].to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("absorption csv", e))?;
        Ok(())
    }
}

/// Absorption probabilities and expected absorption times, using the solver
/// the chain was built for.
pub fn absorption_probabilities(m: &TransitionMatrix) -> Result<AbsorptionResult> {
    let solver = if m.spec.iterative {
        Solver::Iterative
    } else {
        Solver::Direct
    };
    absorption_probabilities_with(m, solver)
}

pub fn absorption_probabilities_with(m: &TransitionMatrix, solver: Solver) -> Result<AbsorptionResult> {
    let n = m.len();
    if !m.absorbing.iter().any(|&a| a) {
        return Err(Error::NonAbsorbing("chain has no absorbing state".into()));
    }
    let transient: Vec<usize> = (0..n).filter(|&i| !m.absorbing[i]).collect();
    let mut position = vec![usize::MAX; n];
    for (t, &s) in transient.iter().enumerate() {
        position[s] = t;
    }

    let (p_t, steps_t) = match solver {
        Solver::Direct => solve_direct(m, &transient, &position)?,
        Solver::Iterative => solve_iterative(m, &transient, &position)?,
    };

    let mut p_rh = vec![0.0; n];
    let mut expected_steps = vec![0.0; n];
    p_rh[m.rh_state] = if m.absorbing[m.rh_state] { 1.0 } else { 0.0 };
    for (t, &s) in transient.iter().enumerate() {
        p_rh[s] = p_t[t].clamp(0.0, 1.0);
        expected_steps[s] = steps_t[t];
    }
    Ok(AbsorptionResult {
        p_rh,
        expected_steps,
        absorbing: m.absorbing.clone(),
    })
}

type Solution = (Vec<f64>, Vec<f64>);

fn solve_direct(m: &TransitionMatrix, transient: &[usize], position: &[usize]) -> Result<Solution> {
    let t = transient.len();
    if t == 0 {
        return Ok((vec![], vec![]));
    }
    let mut lhs = DMatrix::<f64>::identity(t, t);
    let mut rhs = DMatrix::<f64>::zeros(t, 2);
    for (row, &s) in transient.iter().enumerate() {
        rhs[(row, 1)] = 1.0;
        for &(j, p) in m.row(s) {
            if m.absorbing[j] {
                if j == m.rh_state {
                    rhs[(row, 0)] += p;
                }
            } else {
                lhs[(row, position[j])] -= p;
            }
        }
    }
    let sol = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NonAbsorbing("I - Q is singular".into()))?;
    if sol.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonAbsorbing("I - Q is numerically singular".into()));
    }
    Ok((
        sol.column(0).iter().copied().collect(),
        sol.column(1).iter().copied().collect(),
    ))
}

const GS_TOLERANCE: f64 = 1e-13;
const GS_MAX_SWEEPS: usize = 1_000_000;

fn solve_iterative(m: &TransitionMatrix, transient: &[usize], position: &[usize]) -> Result<Solution> {
    let t = transient.len();
    let mut diag = vec![0.0; t];
    let mut to_rh = vec![0.0; t];
    for (row, &s) in transient.iter().enumerate() {
        for &(j, p) in m.row(s) {
            if j == s {
                diag[row] += p;
            } else if m.absorbing[j] && j == m.rh_state {
                to_rh[row] += p;
            }
        }
        if 1.0 - diag[row] <= 0.0 {
            return Err(Error::NonAbsorbing(format!("state {} never leaves itself", m.label(s))));
        }
    }

    let sweep = |rhs: &dyn Fn(usize) -> f64, x: &mut Vec<f64>| -> Result<()> {
        for _ in 0..GS_MAX_SWEEPS {
            let mut delta: f64 = 0.0;
            for (row, &s) in transient.iter().enumerate() {
                let mut acc = rhs(row);
                for &(j, p) in m.row(s) {
                    if j != s && !m.absorbing[j] {
                        acc += p * x[position[j]];
                    }
                }
                let next = acc / (1.0 - diag[row]);
                delta = delta.max((next - x[row]).abs() / next.abs().max(1.0));
                x[row] = next;
            }
            if !delta.is_finite() {
                break;
            }
            if delta < GS_TOLERANCE {
                return Ok(());
            }
        }
        Err(Error::NonAbsorbing("Gauss-Seidel did not converge".into()))
    };

    let mut p = vec![0.0; t];
    sweep(&|row| to_rh[row], &mut p)?;
    let mut steps = vec![0.0; t];
    sweep(&|_| 1.0, &mut steps)?;
    Ok((p, steps))
}

/// Eventual split of a fresh population between the two absorbing states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrappingProfile {
    /// Probability a fresh user ends with p_B = 1.
    pub rh_bound: f64,
    /// Probability a fresh user ends with p_B = 0.
    pub mainstream_bound: f64,
}

/// Mixes absorption probabilities over initial histories drawn uniformly from the catalog.
pub fn trapping_profile(spec: ChainSpec, catalog: &Catalog) -> Result<TrappingProfile> {
    let m = build_chain(spec)?;
    let r = absorption_probabilities(&m)?;
    let q = catalog.attractor_count() as f64 / catalog.size() as f64;
    let h = spec.h as i32;
    let weight = |k: i32| q.powi(k) * (1.0 - q).powi(h - k);
    let rh_bound: f64 = match spec.representation {
        Representation::Count => (0..=spec.h)
            .map(|k| binomial_coefficient(spec.h, k) * weight(k as i32) * r.p_rh[k])
            .sum(),
        Representation::Full => r
            .p_rh
            .iter()
            .enumerate()
            .map(|(s, &p)| weight(s.count_ones() as i32) * p)
            .sum(),
    };
    let rh_bound = rh_bound.clamp(0.0, 1.0);
    Ok(TrappingProfile {
        rh_bound,
        mainstream_bound: 1.0 - rh_bound,
    })
}

pub(crate) fn binomial_coefficient(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row_sums_ok(m: &TransitionMatrix) {
        for s in 0..m.len() {
            let sum: f64 = m.row(s).iter().map(|&(_, p)| p).sum();
            assert!((sum - 1.0).abs() <= 1e-12, "row {s} sums to {sum}");
        }
    }

    #[test]
    fn count_h1_all_absorbing() {
        let m = build_chain(ChainSpec::count(1)).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.absorbing_states(), vec![0, 1]);
        let r = absorption_probabilities(&m).unwrap();
        assert_eq!(r.p_rh, vec![0.0, 1.0]);
        assert_eq!(r.expected_steps, vec![0.0, 0.0]);
    }

    #[test]
    fn count_h2_middle_row() {
        let m = build_chain(ChainSpec::count(2)).unwrap();
        assert_eq!(m.probability(1, 0), 0.25);
        assert_eq!(m.probability(1, 2), 0.25);
        assert_eq!(m.probability(1, 1), 0.5);
    }

    #[test]
    fn full_h2_transitions() {
        let m = build_chain(ChainSpec::full(2)).unwrap();
        let s01 = TransitionMatrix::full_state("01").unwrap();
        assert_eq!(m.label(s01), "01");
        let s11 = TransitionMatrix::full_state("11").unwrap();
        let s10 = TransitionMatrix::full_state("10").unwrap();
        assert_eq!(m.probability(s01, s11), 0.5);
        assert_eq!(m.probability(s01, s10), 0.5);
        assert!(m.is_absorbing(0) && m.is_absorbing(3));
        assert_eq!(m.rh_state(), s11);
    }

    #[test]
    fn rows_are_stochastic() {
        for h in 1..=12 {
            row_sums_ok(&build_chain(ChainSpec::count(h)).unwrap());
        }
        for h in 1..=9 {
            row_sums_ok(&build_chain(ChainSpec::full(h)).unwrap());
        }
    }

    #[test]
    fn count_martingale() {
        for h in 1..=30 {
            let r = absorption_probabilities(&build_chain(ChainSpec::count(h)).unwrap()).unwrap();
            for k in 0..=h {
                assert!((r.p_rh[k] - k as f64 / h as f64).abs() <= 1e-10, "h={h} k={k}");
            }
        }
    }

    #[test]
    fn expected_steps_positive_for_transient() {
        let r = absorption_probabilities(&build_chain(ChainSpec::full(6)).unwrap()).unwrap();
        for (s, &t) in r.expected_steps.iter().enumerate() {
            if r.absorbing[s] {
                assert_eq!(t, 0.0);
            } else {
                assert!(t.is_finite() && t >= 1.0);
            }
        }
    }

    #[test]
    fn full_guards() {
        assert!(matches!(
            build_chain(ChainSpec::full(21)),
            Err(Error::StateExplosion(_))
        ));
        let direct12 = ChainSpec {
            iterative: false,
            ..ChainSpec::full(12)
        };
        assert!(build_chain(direct12).is_err());
        assert!(build_chain(ChainSpec::count(0)).is_err());
    }

    #[test]
    fn iterative_matches_direct() {
        let m = build_chain(ChainSpec::full(7)).unwrap();
        let d = absorption_probabilities_with(&m, Solver::Direct).unwrap();
        let i = absorption_probabilities_with(&m, Solver::Iterative).unwrap();
        for s in 0..m.len() {
            assert!((d.p_rh[s] - i.p_rh[s]).abs() < 1e-10);
            assert!((d.expected_steps[s] - i.expected_steps[s]).abs() < 1e-8 * d.expected_steps[s].max(1.0));
        }
    }

    #[test]
    fn non_absorbing_chain_rejected() {
        // 0 <-> 1 cycle, state 2 absorbing but unreachable.
        let m = TransitionMatrix::from_rows(vec![vec![(1, 1.0)], vec![(0, 1.0)], vec![(2, 1.0)]], 2).unwrap();
        assert!(matches!(
            absorption_probabilities_with(&m, Solver::Direct),
            Err(Error::NonAbsorbing(_))
        ));
        assert!(matches!(
            absorption_probabilities_with(&m, Solver::Iterative),
            Err(Error::NonAbsorbing(_))
        ));
        let none = TransitionMatrix::from_rows(vec![vec![(1, 1.0)], vec![(0, 1.0)]], 1).unwrap();
        assert!(absorption_probabilities(&none).is_err());
    }

    #[test]
    fn trapping_profile_mixes_to_initial_mean() {
        let c = Catalog::uniform(1000, 100).unwrap();
        let p = trapping_profile(ChainSpec::count(10), &c).unwrap();
        assert!((p.rh_bound - 0.1).abs() < 1e-12);
        let p = trapping_profile(ChainSpec::count(10), &Catalog::uniform(10, 0).unwrap()).unwrap();
        assert_eq!(p.rh_bound, 0.0);
        let p = trapping_profile(ChainSpec::count(10), &Catalog::uniform(10, 10).unwrap()).unwrap();
        assert_eq!(p.rh_bound, 1.0);
        let p = trapping_profile(ChainSpec::full(6), &c).unwrap();
        assert!((0.0..=1.0).contains(&p.rh_bound));
        assert!((p.rh_bound + p.mainstream_bound - 1.0).abs() < 1e-15);
    }

    #[test]
    fn binomial_coefficients() {
        assert_eq!(binomial_coefficient(10, 0), 1.0);
        assert_eq!(binomial_coefficient(10, 3), 120.0);
        assert_eq!(binomial_coefficient(3, 4), 0.0);
    }
}
