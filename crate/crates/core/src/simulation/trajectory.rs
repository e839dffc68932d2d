//! Recorded solutions of a dynamical game system.

use std::fmt::Write as _;
use std::io;

use crate::error::{Error, Result};

/// Time-indexed record of states, strategies, payoffs, storages and payoff integrals.
///
/// Per-sample vectors are stored row-major in flat buffers. `state` holds each
/// agent's cumulative payoffs (embedded to full coordinates) or, for escort
/// agents, its strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub(crate) action_counts: Vec<usize>,
    pub(crate) offsets: Vec<usize>,
    pub(crate) escort: Vec<bool>,
    pub(crate) times: Vec<f64>,
    pub(crate) state: Vec<f64>,
    pub(crate) x: Vec<f64>,
    pub(crate) p: Vec<f64>,
    pub(crate) storage: Vec<f64>,
    pub(crate) payoff_integral: Vec<f64>,
    pub(crate) value_integral: Vec<f64>,
    pub(crate) boundary_hit: bool,
    pub(crate) dt: f64,
    pub(crate) horizon: f64,
}

impl Trajectory {
    pub(crate) fn new(action_counts: Vec<usize>, escort: Vec<bool>, dt: f64, horizon: f64) -> Self {
        let mut offsets = vec![0];
        for n in &action_counts {
            offsets.push(offsets.last().unwrap() + n);
        }
        Self {
            action_counts,
            offsets,
            escort,
            times: Vec::new(),
            state: Vec::new(),
            x: Vec::new(),
            p: Vec::new(),
            storage: Vec::new(),
            payoff_integral: Vec::new(),
            value_integral: Vec::new(),
            boundary_hit: false,
            dt,
            horizon,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn num_agents(&self) -> usize {
        self.action_counts.len()
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn total_actions(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Whether agent `i` integrates strategies directly (no cumulative payoffs).
    pub fn is_escort_agent(&self, i: usize) -> bool {
        self.escort[i]
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// An escort agent reached the boundary guard; the record stops at the last interior sample.
    pub fn boundary_hit(&self) -> bool {
        self.boundary_hit
    }

    fn row<'a>(&self, buf: &'a [f64], k: usize) -> &'a [f64] {
        let w = self.total_actions();
        &buf[k * w..(k + 1) * w]
    }

    fn block<'a>(&self, buf: &'a [f64], k: usize, i: usize) -> &'a [f64] {
        &self.row(buf, k)[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Concatenated state at sample `k`.
    pub fn state(&self, k: usize) -> &[f64] {
        self.row(&self.state, k)
    }

    /// Agent `i`'s cumulative payoffs at sample `k`; `None` for escort agents.
    pub fn q(&self, k: usize, i: usize) -> Option<&[f64]> {
        (!self.escort[i]).then(|| self.block(&self.state, k, i))
    }

    /// Concatenated strategy profile `x̂` at sample `k`.
    pub fn x(&self, k: usize) -> &[f64] {
        self.row(&self.x, k)
    }

    pub fn x_agent(&self, k: usize, i: usize) -> &[f64] {
        self.block(&self.x, k, i)
    }

    /// Concatenated payoff profile `p̂` at sample `k`.
    pub fn p(&self, k: usize) -> &[f64] {
        self.row(&self.p, k)
    }

    pub fn p_agent(&self, k: usize, i: usize) -> &[f64] {
        self.block(&self.p, k, i)
    }

    /// Recorded storage of agent `i` (NaN for escort agents).
    pub fn storage(&self, k: usize, i: usize) -> f64 {
        self.storage[k * self.num_agents() + i]
    }

    /// `∫₀ᵗ p_ij dτ` for every action of agent `i`.
    pub fn payoff_integral(&self, k: usize, i: usize) -> &[f64] {
        self.block(&self.payoff_integral, k, i)
    }

    /// `∫₀ᵗ ⟨x_i, p_i⟩ dτ`.
    pub fn value_integral(&self, k: usize, i: usize) -> f64 {
        self.value_integral[k * self.num_agents() + i]
    }

    /// `max_j ∫p_ij − ∫⟨x_i, p_i⟩` at sample `k`.
    pub fn regret(&self, k: usize, i: usize) -> f64 {
        let best = self
            .payoff_integral(k, i)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        best - self.value_integral(k, i)
    }

    /// Regret against the fixed action `j`: `∫p_ij − ∫⟨x_i, p_i⟩`.
    pub fn regret_against(&self, k: usize, i: usize, j: usize) -> f64 {
        self.payoff_integral(k, i)[j] - self.value_integral(k, i)
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn push(
        &mut self,
        t: f64,
        state: &[f64],
        x: &[f64],
        p: &[f64],
        storage: &[f64],
        payoff_integral: &[f64],
        value_integral: &[f64],
    ) {
        self.times.push(t);
        self.state.extend_from_slice(state);
        self.x.extend_from_slice(x);
        self.p.extend_from_slice(p);
        self.storage.extend_from_slice(storage);
        self.payoff_integral.extend_from_slice(payoff_integral);
        self.value_integral.extend_from_slice(value_integral);
    }

    /// CSV header; agents and actions are numbered from 1.
    pub fn csv_header(&self) -> String {
        let mut cols = vec!["t".to_string()];
        for prefix in ["q", "x", "p"] {
            for (i, &n) in self.action_counts.iter().enumerate() {
                if prefix == "q" && self.escort[i] {
                    continue;
                }
                for j in 0..n {
                    cols.push(format!("{prefix}[{}.{}]", i + 1, j + 1));
                }
            }
        }
        for prefix in ["storage", "regret"] {
            for i in 0..self.num_agents() {
                cols.push(format!("{prefix}[{}]", i + 1));
            }
        }
        cols.join(",")
    }

    /// Writes one row per recorded sample with 17 significant digits.
    pub fn write_csv<W: io::Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", self.csv_header())?;
        let mut line = String::new();
        for k in 0..self.len() {
            line.clear();
            push_num(&mut line, self.times[k]);
            for i in 0..self.num_agents() {
                if let Some(q) = self.q(k, i) {
                    q.iter().for_each(|v| push_num(&mut line, *v));
                }
            }
            self.x(k).iter().for_each(|v| push_num(&mut line, *v));
            self.p(k).iter().for_each(|v| push_num(&mut line, *v));
            for i in 0..self.num_agents() {
                push_num(&mut line, self.storage(k, i));
            }
            for i in 0..self.num_agents() {
                push_num(&mut line, self.regret(k, i));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is ascii")
    }

    pub(crate) fn require_q(&self, i: usize) -> Result<()> {
        if self.escort[i] {
            Err(Error::MissingSeries("cumulative payoffs"))
        } else {
            Ok(())
        }
    }
}

fn push_num(line: &mut String, v: f64) {
    if !line.is_empty() {
        line.push(',');
    }
    let _ = write!(line, "{v:.16e}");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = Trajectory::new(vec![2, 2], vec![false, true], 0.1, 0.1);
        t.push(
            0.0,
            &[0.6, 0.0, 0.5, 0.5],
            &[0.6457, 0.3543, 0.5, 0.5],
            &[1.0, -1.0, 0.0, 0.0],
            &[0.5, f64::NAN],
            &[0.0; 4],
            &[0.0, 0.0],
        );
        let csv = t.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,q[1.1],q[1.2],x[1.1],x[1.2],x[2.1],x[2.2],p[1.1],p[1.2],p[2.1],p[2.2],storage[1],storage[2],regret[1],regret[2]"
        );
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 15);
        assert_eq!(row[1], "5.9999999999999998e-1");
        assert_eq!(row[1].parse::<f64>().unwrap(), 0.6);
        assert_eq!(row[12], "NaN");
    }
}
