use rayon::prelude::*;

use super::search::{maximize, maximize_concave_pieces, maximize_quadratic_pieces};
use super::{min_penalty_avoiding_contribution, stage_value, BestResponse, HistoryState, SolverConfig};
use crate::game::{CostModel, GameParams, Outcome};

/// Uniform axis with `cells` nodes over `[lo, hi]`.
#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    cells: usize,
}

impl Axis {
    fn node(&self, k: usize) -> f64 {
        if k + 1 == self.cells {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * k as f64 / (self.cells - 1) as f64
        }
    }

    /// Lower node index and interpolation weight of the upper node.
    fn locate(&self, x: f64) -> (usize, f64) {
        let span = self.hi - self.lo;
        if span <= 0.0 {
            return (0, 0.0);
        }
        let t = ((x - self.lo) / span * (self.cells - 1) as f64).clamp(0.0, (self.cells - 1) as f64);
        let k = (t.floor() as usize).min(self.cells - 2);
        (k, t - k as f64)
    }
}

/// Final cumulative sum reached when agent `i` moves from `(c_prev, s_prev)`.
#[derive(Debug, Clone)]
struct Table {
    c_axis: Axis,
    s_axis: Axis,
    values: Vec<f64>,
}

impl Table {
    fn at(&self, ci: usize, si: usize) -> f64 {
        self.values[ci * self.s_axis.cells + si]
    }

    fn interpolate(&self, c_prev: f64, s_prev: f64) -> f64 {
        let (ci, cw) = self.c_axis.locate(c_prev);
        let (si, sw) = self.s_axis.locate(s_prev);
        let ci1 = (ci + 1).min(self.c_axis.cells - 1);
        let si1 = (si + 1).min(self.s_axis.cells - 1);
        let low = self.at(ci, si) * (1.0 - sw) + self.at(ci, si1) * sw;
        let high = self.at(ci1, si) * (1.0 - sw) + self.at(ci1, si1) * sw;
        low * (1.0 - cw) + high * cw
    }
}

/// Value tables of the discretized backward induction.
#[derive(Debug, Clone)]
pub struct DpTables {
    params: GameParams,
    cost: CostModel,
    config: SolverConfig,
    /// `tables[i]` serves agent `i`; index 0 is unused (its state is fixed)
    /// and a closed-form last mover has none.
    tables: Vec<Option<Table>>,
}

impl DpTables {
    pub fn build(params: &GameParams, cost: &CostModel, config: &SolverConfig) -> Self {
        let n = params.n;
        let mut dp = Self {
            params: params.clone(),
            cost: *cost,
            config: config.clone(),
            tables: vec![None; n],
        };
        let c_axis = Axis {
            lo: params.c_min,
            hi: params.c_max,
            cells: config.dp_c_cells,
        };
        // a closed-form last mover is solved exactly at lookup time instead of
        // being tabulated, which keeps its reach-or-give-up switch sharp
        let tabulated = if super::leaf_is_closed_form(params, cost, n - 1) { n - 1 } else { n };
        for agent in (1..tabulated).rev() {
            let s_axis = Axis {
                lo: agent as f64 * params.c_min,
                hi: agent as f64 * params.c_max,
                cells: config.dp_s_cells,
            };
            let values: Vec<f64> = (0..c_axis.cells)
                .into_par_iter()
                .flat_map_iter(|ci| {
                    let dp = &dp;
                    (0..s_axis.cells).map(move |si| {
                        let state = HistoryState {
                            agent,
                            c_prev: c_axis.node(ci),
                            s_prev: s_axis.node(si),
                        };
                        let (c, _, _) = dp.best_contribution(&state);
                        dp.final_sum(agent + 1, c, state.s_prev + c)
                    })
                })
                .collect();
            dp.tables[agent] = Some(Table {
                c_axis,
                s_axis,
                values,
            });
        }
        dp
    }

    /// Width of one cell along the contribution axis.
    pub fn cell_width(&self) -> f64 {
        self.params.range() / (self.config.dp_c_cells - 1) as f64
    }

    fn final_sum(&self, agent: usize, c_prev: f64, s_prev: f64) -> f64 {
        if agent == self.params.n {
            return s_prev;
        }
        match &self.tables[agent] {
            Some(table) => table.interpolate(c_prev, s_prev),
            None => {
                let (c, _, _) = self.best_contribution(&HistoryState { agent, c_prev, s_prev });
                s_prev + c
            }
        }
    }

    /// `(contribution, value, bracket)` of the acting agent against the
    /// tabulated continuation.
    pub(crate) fn best_contribution(&self, state: &HistoryState) -> (f64, f64, f64) {
        let p = &self.params;
        let boundary = min_penalty_avoiding_contribution(state, p);
        let next = state.agent + 1;
        let objective = |c: f64| {
            let sum = self.final_sum(next, c, state.s_prev + c);
            stage_value(p, &self.cost, c, state.c_prev, Outcome { sum, last: c })
        };
        let settings = self.config.search(false);
        let breaks = [boundary.contribution];
        let m = if super::leaf_is_closed_form(p, &self.cost, state.agent) {
            let vertex = super::leaf_vertex(p, &self.cost, state.c_prev);
            maximize_quadratic_pieces(p.c_min, p.c_max, &breaks, vertex, &settings, objective)
        } else if super::leaf_is_concave(p, &self.cost, state.agent) {
            maximize_concave_pieces(p.c_min, p.c_max, &breaks, &settings, objective)
        } else {
            maximize(p.c_min, p.c_max, &breaks, &settings, objective)
        };
        (m.x, m.value, m.bracket)
    }

    fn forward(&self, mut state: HistoryState) -> (Vec<f64>, f64) {
        let mut out = Vec::new();
        let mut top = None;
        while state.agent < self.params.n {
            let (c, _, bracket) = self.best_contribution(&state);
            top.get_or_insert(bracket);
            out.push(c);
            state = HistoryState {
                agent: state.agent + 1,
                c_prev: c,
                s_prev: state.s_prev + c,
            };
        }
        (out, top.unwrap_or(0.0))
    }

    pub(crate) fn play(&self) -> (Vec<f64>, f64) {
        self.forward(HistoryState::initial())
    }

    pub(crate) fn best_response(&self, state: &HistoryState) -> BestResponse {
        let (c, value, _) = self.best_contribution(state);
        let (continuation, _) = self.forward(HistoryState {
            agent: state.agent + 1,
            c_prev: c,
            s_prev: state.s_prev + c,
        });
        BestResponse {
            contribution: c,
            value,
            continuation,
        }
    }
}
