//! Uniform-cost search on costmaps and the risk / path-length metrics.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::envmodel::{Cell, Environment, Trajectory};
use crate::error::{Error, Result};
use crate::riskselect::Costmap;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub trajectory: Trajectory,
    /// Sum of entered-cell costs; the start cell is free.
    pub total_cost: f64,
    /// Number of states |xi|.
    pub path_length: usize,
    /// Fraction of states on the dangerous feature, once assessed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub risk: Option<f64>,
}

impl PlanResult {
    pub fn assess(mut self, env: &Environment, spec: RiskSpec) -> Self {
        self.risk = Some(risk_of(&self.trajectory, env, spec));
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskSpec {
    pub dangerous_feature: usize,
}

impl RiskSpec {
    pub fn validate(&self, env: &Environment) -> Result<()> {
        if self.dangerous_feature >= env.feature_dim() {
            return Err(Error::InvalidParameter(format!(
                "dangerous feature index {} out of range for dimension {}",
                self.dangerous_feature,
                env.feature_dim()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Frontier {
    cost: f64,
    cell: Cell,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then_with(|| self.cell.cmp(&other.cell))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// 4-neighbours sorted by (x, y).
fn neighbours(c: Cell, width: usize, height: usize) -> impl Iterator<Item = Cell> {
    let cand = [
        c.x.checked_sub(1).map(|x| Cell::new(x, c.y)),
        c.y.checked_sub(1).map(|y| Cell::new(c.x, y)),
        (c.y + 1 < height).then(|| Cell::new(c.x, c.y + 1)),
        (c.x + 1 < width).then(|| Cell::new(c.x + 1, c.y)),
    ];
    cand.into_iter().flatten()
}

/// Minimum-cost 4-connected path where each move costs the entered cell.
///
/// Ties are broken deterministically: the frontier pops the lowest cost
/// first and then the smallest `(x, y)`, neighbours are expanded in `(x, y)`
/// order, and a predecessor is replaced only on a strict improvement.
pub fn plan(costmap: &Costmap, start: Cell, goal: Cell) -> Result<PlanResult> {
    let (w, h) = (costmap.width, costmap.height);
    for endpoint in [start, goal] {
        if costmap.cost_at(endpoint).is_none() {
            return Err(Error::InvalidParameter(format!(
                "{endpoint} is outside the grid or impassable"
            )));
        }
    }
    let idx = |c: Cell| c.y * w + c.x;

    let mut dist = vec![f64::INFINITY; w * h];
    let mut parent: Vec<Option<Cell>> = vec![None; w * h];
    let mut done = vec![false; w * h];
    let mut heap = BinaryHeap::new();
    dist[idx(start)] = 0.0;
    heap.push(Reverse(Frontier {
        cost: 0.0,
        cell: start,
    }));

    while let Some(Reverse(Frontier { cost, cell })) = heap.pop() {
        if done[idx(cell)] {
            continue;
        }
        done[idx(cell)] = true;
        if cell == goal {
            break;
        }
        for next in neighbours(cell, w, h) {
            let Some(step) = costmap.cost_at(next) else {
                continue;
            };
            let candidate = cost + step;
            if candidate < dist[idx(next)] {
                dist[idx(next)] = candidate;
                parent[idx(next)] = Some(cell);
                heap.push(Reverse(Frontier {
                    cost: candidate,
                    cell: next,
                }));
            }
        }
    }

    if !done[idx(goal)] {
        return Err(Error::Unreachable { start, goal });
    }
    let mut states = vec![goal];
    let mut cur = goal;
    while let Some(p) = parent[idx(cur)] {
        states.push(p);
        cur = p;
    }
    states.reverse();
    Ok(PlanResult {
        path_length: states.len(),
        total_cost: dist[idx(goal)],
        trajectory: Trajectory::new(states),
        risk: None,
    })
}

/// Fraction of trajectory states whose cell carries the dangerous feature.
pub fn risk_of(traj: &Trajectory, env: &Environment, spec: RiskSpec) -> f64 {
    if traj.is_empty() {
        return 0.0;
    }
    let hits = traj
        .states()
        .iter()
        .filter(|&&s| env.has_feature(s, spec.dangerous_feature))
        .count();
    hits as f64 / traj.len() as f64
}

/// One planned run, labelled for reporting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub scenario: String,
    pub model: String,
    pub run: usize,
    pub plan: PlanResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub model: String,
    pub runs: usize,
    pub mean_risk: f64,
    pub mean_path_length: f64,
}

/// Means of risk and path length per (scenario, model), in order of first
/// appearance. Unassessed plans count as zero risk.
pub fn evaluate(records: &[PlanRecord]) -> Vec<SummaryRow> {
    let mut groups: Vec<((&str, &str), Vec<&PlanResult>)> = Vec::new();
    for r in records {
        let key = (r.scenario.as_str(), r.model.as_str());
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, plans)) => plans.push(&r.plan),
            None => groups.push((key, vec![&r.plan])),
        }
    }
    groups
        .into_iter()
        .map(|((scenario, model), plans)| {
            let n = plans.len() as f64;
            SummaryRow {
                scenario: scenario.to_string(),
                model: model.to_string(),
                runs: plans.len(),
                mean_risk: plans.iter().map(|p| p.risk.unwrap_or(0.0)).sum::<f64>() / n,
                mean_path_length: plans.iter().map(|p| p.path_length as f64).sum::<f64>() / n,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxent::RewardVector;

    fn uniform(width: usize, height: usize, c: f64) -> Costmap {
        Costmap {
            width,
            height,
            cost: vec![Some(c); width * height],
            weights: RewardVector(vec![]),
        }
    }

    #[test]
    fn uniform_costmap_is_manhattan() {
        let cm = uniform(5, 4, 1.0);
        let p = plan(&cm, Cell::new(0, 0), Cell::new(4, 3)).unwrap();
        assert_eq!(p.path_length, 8);
        assert_eq!(p.total_cost, 7.0);
    }

    #[test]
    fn start_equals_goal() {
        let cm = uniform(3, 3, 1.0);
        let p = plan(&cm, Cell::new(1, 1), Cell::new(1, 1)).unwrap();
        assert_eq!(p.trajectory.states(), &[Cell::new(1, 1)]);
        assert_eq!(p.total_cost, 0.0);
    }

    #[test]
    fn unreachable_goal() {
        let mut cm = uniform(3, 1, 1.0);
        cm.cost[1] = None;
        assert!(matches!(
            plan(&cm, Cell::new(0, 0), Cell::new(2, 0)),
            Err(Error::Unreachable { .. })
        ));
        assert!(plan(&cm, Cell::new(1, 0), Cell::new(2, 0)).is_err());
    }

    #[test]
    fn risk_arithmetic() {
        let env = crate::envmodel::Environment::from_json(
            r#"{"width":8,"height":1,"features":["safe","bad"],"cells":[[0,1],[1,0],[1,0],[1,0],[1,0],[1,0],[1,0],[0,1]],"discount":0.9,"horizon":8}"#,
        )
        .unwrap();
        let spec = RiskSpec { dangerous_feature: 1 };
        let all: Vec<Cell> = (0..8).map(|x| Cell::new(x, 0)).collect();
        assert_eq!(risk_of(&Trajectory::new(all), &env, spec), 0.25);
        let safe = Trajectory::new(vec![Cell::new(1, 0), Cell::new(2, 0)]);
        assert_eq!(risk_of(&safe, &env, spec), 0.0);
        let bad = Trajectory::new(vec![Cell::new(0, 0), Cell::new(0, 0)]);
        assert_eq!(risk_of(&bad, &env, spec), 1.0);
    }

    fn record(model: &str, risk: f64, len: usize) -> PlanRecord {
        PlanRecord {
            scenario: "T1".into(),
            model: model.into(),
            run: 0,
            plan: PlanResult {
                trajectory: Trajectory::new(vec![]),
                total_cost: 0.0,
                path_length: len,
                risk: Some(risk),
            },
        }
    }

    #[test]
    fn evaluation_means() {
        let rows = evaluate(&[record("a", 0.5, 3)]);
        assert_eq!(rows[0].mean_risk, 0.5);
        assert_eq!(rows[0].mean_path_length, 3.0);

        let zeros: Vec<_> = (0..5).map(|_| record("rabrl", 0.0, 4)).collect();
        assert_eq!(evaluate(&zeros)[0].mean_risk, 0.0);

        let rows = evaluate(&[record("a", 0.0, 3), record("a", 0.0, 5)]);
        assert_eq!(rows[0].mean_path_length, 4.0);
        assert_eq!(rows[0].runs, 2);
    }
}
