//! Greedy and plain Kuhn-Munkres assignment, without batching or search.

use crate::costmodel::{AssignmentOutcome, CostModel, Order, Vehicle};
use crate::foodgraph::{build_full, singleton_batches};
use crate::matching::min_weight_matching;

/// Repeatedly commits the cheapest remaining (order, vehicle) pair, ties to
/// the lowest `(order id, vehicle id)`, until every remaining pair costs
/// omega. A vehicle may take several orders up to capacity.
pub fn greedy_assign(model: &CostModel, orders: &[Order], vehicles: &[Vehicle], t: f64) -> AssignmentOutcome {
    let omega = model.limits.omega;
    let mut order_idx: Vec<usize> = (0..orders.len()).collect();
    order_idx.sort_by_key(|&i| orders[i].id);
    let mut veh_idx: Vec<usize> = (0..vehicles.len()).collect();
    veh_idx.sort_by_key(|&i| vehicles[i].id);
    let orders: Vec<&Order> = order_idx.iter().map(|&i| &orders[i]).collect();
    let mut fleet: Vec<Vehicle> = veh_idx.iter().map(|&i| vehicles[i].clone()).collect();

    let mut base: Vec<f64> = fleet.iter().map(|v| model.current_cost(v, t)).collect();
    let eval = |fleet: &[Vehicle], base: &[f64], o: usize, v: usize| {
        model.marginal_cost_from(base[v], std::slice::from_ref(orders[o]), orders[o].restaurant, &fleet[v], t)
    };
    // cost[o][v]; rows of assigned orders are ignored
    let mut cost: Vec<Vec<f64>> =
        (0..orders.len()).map(|o| (0..fleet.len()).map(|v| eval(&fleet, &base, o, v)).collect()).collect();
    let row_best = |row: &[f64]| {
        row.iter().enumerate().fold((f64::INFINITY, usize::MAX), |b, (v, &c)| if c < b.0 { (c, v) } else { b })
    };
    let mut best: Vec<(f64, usize)> = cost.iter().map(|r| row_best(r)).collect();
    let mut assigned: Vec<Option<usize>> = vec![None; orders.len()];
    let mut total = 0.0;

    loop {
        // lowest cost, then lowest order index; each row's best already holds
        // its lowest vehicle index among ties
        let pick = (0..orders.len())
            .filter(|&o| assigned[o].is_none())
            .fold(None::<(f64, usize)>, |acc, o| match acc {
                Some((c, _)) if best[o].0 >= c => acc,
                _ => Some((best[o].0, o)),
            });
        let Some((c, o)) = pick else { break };
        if c >= omega {
            break;
        }
        let v = best[o].1;
        assigned[o] = Some(v);
        total += c;
        fleet[v].committed.push(orders[o].clone());
        base[v] = model.current_cost(&fleet[v], t);
        for r in 0..orders.len() {
            if assigned[r].is_some() {
                continue;
            }
            let new = eval(&fleet, &base, r, v);
            cost[r][v] = new;
            if best[r].1 == v {
                best[r] = row_best(&cost[r]);
            } else if new < best[r].0 || (new == best[r].0 && v < best[r].1) {
                best[r] = (new, v);
            }
        }
    }

    let mut decisions: Vec<_> =
        orders.iter().zip(&assigned).map(|(o, a)| (o.id, a.map(|v| fleet[v].id))).collect();
    decisions.sort_by_key(|d| d.0);
    AssignmentOutcome { decisions, assigned_cost: total, assignment_time: t }
}

/// Minimum-cost one-to-one matching of single orders to vehicles; pairs
/// matched at omega stay unassigned.
pub fn vanilla_km_assign(model: &CostModel, orders: &[Order], vehicles: &[Vehicle], t: f64) -> AssignmentOutcome {
    let batches = singleton_batches(model, orders, t);
    let graph = build_full(model, &batches, vehicles, t);
    let result = min_weight_matching(&graph.weights);
    let mut decisions: Vec<_> = orders.iter().map(|o| (o.id, None)).collect();
    let mut total = 0.0;
    for &(r, c) in &result.pairs {
        let w = graph.weight(r, c);
        if w < model.limits.omega {
            decisions[r].1 = Some(vehicles[c].id);
            total += w;
        }
    }
    decisions.sort_by_key(|d| d.0);
    AssignmentOutcome { decisions, assigned_cost: total, assignment_time: t }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmodel::{Limits, OrderId, VehicleId};
    use crate::fixtures::worked_example;

    #[test]
    fn greedy_on_worked_example() {
        let ex = worked_example();
        let model = CostModel::new(&ex.net, Limits::default());
        let out = greedy_assign(&model, &ex.orders, &ex.vehicles, 0.0);
        assert_eq!(out.assigned_cost, 6.0);
        assert_eq!(out.vehicle_of(OrderId(1)), Some(VehicleId(1)));
        assert_eq!(out.vehicle_of(OrderId(2)), Some(VehicleId(2)));
        assert_eq!(out.vehicle_of(OrderId(3)), Some(VehicleId(1)));
    }

    #[test]
    fn km_on_worked_example() {
        let ex = worked_example();
        let model = CostModel::new(&ex.net, Limits::default());
        let out = vanilla_km_assign(&model, &ex.orders, &ex.vehicles, 0.0);
        assert_eq!(out.assigned_cost, 5.0);
        assert_eq!(out.vehicle_of(OrderId(2)), Some(VehicleId(3)));
        // o1 and o3 cost the same everywhere, so they may take v1 and v2 either way
        let pair = (out.vehicle_of(OrderId(1)), out.vehicle_of(OrderId(3)));
        let (v1, v2) = (Some(VehicleId(1)), Some(VehicleId(2)));
        assert!(pair == (v2, v1) || pair == (v1, v2));
    }

    #[test]
    fn single_pair_and_no_vehicles() {
        let ex = worked_example();
        let model = CostModel::new(&ex.net, Limits::default());
        let o = ex.order(1).clone();
        let v = ex.vehicle(2).clone();
        let out = greedy_assign(&model, &[o.clone()], &[v.clone()], 0.0);
        assert_eq!(out.vehicle_of(o.id), Some(v.id));
        let out = vanilla_km_assign(&model, &ex.orders, &[], 0.0);
        assert_eq!(out.unassigned().count(), 3);
    }

    #[test]
    fn all_infeasible_stays_unassigned() {
        let ex = worked_example();
        let model = CostModel::new(&ex.net, Limits { service_cap: 1.0, ..Limits::default() });
        let out = greedy_assign(&model, &ex.orders, &[ex.vehicle(1).clone()], 0.0);
        assert_eq!(out.unassigned().count(), 3);
    }

    #[test]
    fn km_leaves_surplus_orders() {
        let ex = worked_example();
        let model = CostModel::new(&ex.net, Limits::default());
        let out = vanilla_km_assign(&model, &ex.orders, &[ex.vehicle(2).clone()], 0.0);
        assert_eq!(out.unassigned().count(), 2);
    }
}
