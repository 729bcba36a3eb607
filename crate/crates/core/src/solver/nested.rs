use super::search::{maximize, maximize_concave_pieces, maximize_quadratic_pieces};
use super::{min_penalty_avoiding_contribution, stage_value, BestResponse, HistoryState, SolverConfig};
use crate::game::{CostModel, GameParams, Outcome};

pub(crate) struct Nested<'a> {
    params: &'a GameParams,
    cost: &'a CostModel,
    config: &'a SolverConfig,
}

impl<'a> Nested<'a> {
    pub(crate) fn new(params: &'a GameParams, cost: &'a CostModel, config: &'a SolverConfig) -> Self {
        Self { params, cost, config }
    }

    /// How the game ends when `agent` moves next from `(c_prev, s_prev)`.
    fn continuation(&self, agent: usize, c_prev: f64, s_prev: f64) -> Outcome {
        if agent == self.params.n {
            Outcome {
                sum: s_prev,
                last: c_prev,
            }
        } else {
            self.best(&HistoryState { agent, c_prev, s_prev }, false).2
        }
    }

    /// `(contribution, value, outcome, bracket)` for the acting agent.
    pub(crate) fn best(&self, state: &HistoryState, parallel: bool) -> (f64, f64, Outcome, f64) {
        let p = self.params;
        let boundary = min_penalty_avoiding_contribution(state, p);
        let next = state.agent + 1;
        let objective = |c: f64| {
            stage_value(
                p,
                self.cost,
                c,
                state.c_prev,
                self.continuation(next, c, state.s_prev + c),
            )
        };
        let settings = self.config.search(parallel);
        let breaks = [boundary.contribution];
        let m = if super::leaf_is_closed_form(p, self.cost, state.agent) {
            let vertex = super::leaf_vertex(p, self.cost, state.c_prev);
            maximize_quadratic_pieces(p.c_min, p.c_max, &breaks, vertex, &settings, objective)
        } else if super::leaf_is_concave(p, self.cost, state.agent) {
            maximize_concave_pieces(p.c_min, p.c_max, &breaks, &settings, objective)
        } else {
            maximize(p.c_min, p.c_max, &breaks, &settings, objective)
        };
        let outcome = self.continuation(next, m.x, state.s_prev + m.x);
        (m.x, m.value, outcome, m.bracket)
    }

    fn forward(&self, mut state: HistoryState, top_parallel: bool) -> (Vec<f64>, f64) {
        let mut out = Vec::with_capacity(self.params.n - state.agent);
        let mut top_bracket = None;
        while state.agent < self.params.n {
            let (c, _, _, bracket) = self.best(&state, top_parallel && out.is_empty());
            top_bracket.get_or_insert(bracket);
            out.push(c);
            state = HistoryState {
                agent: state.agent + 1,
                c_prev: c,
                s_prev: state.s_prev + c,
            };
        }
        (out, top_bracket.unwrap_or(0.0))
    }

    pub(crate) fn play(&self) -> (Vec<f64>, f64) {
        self.forward(HistoryState::initial(), self.config.parallel)
    }

    pub(crate) fn best_response(&self, state: &HistoryState) -> BestResponse {
        let (c, value, _, _) = self.best(state, self.config.parallel);
        let (continuation, _) = self.forward(
            HistoryState {
                agent: state.agent + 1,
                c_prev: c,
                s_prev: state.s_prev + c,
            },
            false,
        );
        BestResponse {
            contribution: c,
            value,
            continuation,
        }
    }
}
