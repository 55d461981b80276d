use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{greedy_assign, vanilla_km_assign};
use crate::batching::Batcher;
use crate::costmodel::{AssignmentOutcome, CostModel, Order, Vehicle};
use crate::foodgraph::{build_sparsified, sparsity_k};
use crate::matching::min_weight_matching;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    FoodMatch,
    Greedy,
    Km,
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Policy::FoodMatch => "foodmatch",
            Policy::Greedy => "greedy",
            Policy::Km => "km",
        })
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "foodmatch" => Ok(Policy::FoodMatch),
            "greedy" => Ok(Policy::Greedy),
            "km" => Ok(Policy::Km),
            other => Err(format!("unknown policy {other:?} (expected foodmatch, greedy or km)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FoodMatchParams {
    pub eta: f64,
    pub gamma: f64,
    pub k_factor: f64,
}

impl Default for FoodMatchParams {
    fn default() -> Self {
        Self { eta: 60.0, gamma: 0.5, k_factor: 200.0 }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FoodMatchStats {
    pub batches: usize,
    pub k: usize,
    pub evaluations: usize,
}

/// Batch the window's orders, connect each vehicle to its `k` nearest
/// batches and match. Batches matched at omega stay unassigned.
pub fn foodmatch_assign(
    model: &CostModel,
    orders: &[Order],
    vehicles: &[Vehicle],
    t: f64,
    params: &FoodMatchParams,
) -> (AssignmentOutcome, FoodMatchStats) {
    let clustering = Batcher::new(*model, t).cluster(orders, params.eta);
    let batches = clustering.batches;
    let k = sparsity_k(params.k_factor, orders.len(), vehicles.len(), batches.len());
    let graph = build_sparsified(model, &batches, vehicles, k, t, params.gamma);
    let result = min_weight_matching(&graph.weights);
    let mut decisions: Vec<_> = orders.iter().map(|o| (o.id, None)).collect();
    decisions.sort_by_key(|d| d.0);
    let mut total = 0.0;
    for &(r, c) in &result.pairs {
        let w = graph.weight(r, c);
        if w >= model.limits.omega {
            continue;
        }
        total += w;
        for o in &batches[r].orders {
            let slot = decisions.binary_search_by_key(&o.id, |d| d.0).expect("batched order");
            decisions[slot].1 = Some(vehicles[c].id);
        }
    }
    let stats = FoodMatchStats { batches: batches.len(), k, evaluations: graph.evaluations };
    (AssignmentOutcome { decisions, assigned_cost: total, assignment_time: t }, stats)
}

pub fn assign(
    policy: Policy,
    model: &CostModel,
    orders: &[Order],
    vehicles: &[Vehicle],
    t: f64,
    params: &FoodMatchParams,
) -> AssignmentOutcome {
    match policy {
        Policy::FoodMatch => foodmatch_assign(model, orders, vehicles, t, params).0,
        Policy::Greedy => greedy_assign(model, orders, vehicles, t),
        Policy::Km => vanilla_km_assign(model, orders, vehicles, t),
    }
}
