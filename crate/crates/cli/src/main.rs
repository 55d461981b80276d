use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dispatch_core::fixtures::worked_example;
use dispatch_core::matching::{min_weight_matching, CostMatrix};
use dispatch_core::oracle::{brute_force_assignment, brute_force_plan, brute_force_set_cost};
use dispatch_core::roadnet::load_network;
use dispatch_core::simulator::io::{parse_orders, parse_restaurant_model, parse_vehicles, resolve_orders, PrepModel};
use dispatch_core::simulator::metrics::ledger_text;
use dispatch_core::simulator::{run, Policy, SimConfig};
use dispatch_core::workload::{generate, peak_profile, Topology, WorkloadSpec};
use dispatch_core::{CostModel, Limits, NodeId, Order, OrderId};

#[derive(Parser)]
#[command(name = "dispatch", version, about = "Food-delivery dispatch simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a windowed simulation and write metrics, ledger and timings.
    Simulate(SimulateArgs),
    /// Generate a synthetic city and workload.
    Gen(GenArgs),
    /// Check the cost model and matcher against brute force.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Foodmatch,
    Greedy,
    Km,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Foodmatch => Policy::FoodMatch,
            PolicyArg::Greedy => Policy::Greedy,
            PolicyArg::Km => Policy::Km,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    orders: PathBuf,
    #[arg(long)]
    vehicles: PathBuf,
    /// Restaurant preparation model; orders with prep -1 need it or fall
    /// back to the default model.
    #[arg(long)]
    restaurants: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "foodmatch")]
    policy: PolicyArg,
    /// Window length in seconds.
    #[arg(long, default_value_t = 180.0)]
    delta: f64,
    /// Mean batch cost threshold in seconds.
    #[arg(long, default_value_t = 60.0)]
    eta: f64,
    /// Blend between heading and travel time in the vehicle search.
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, default_value_t = 200.0)]
    k_factor: f64,
    /// Seed for sampled preparation times.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 400)]
    nodes: usize,
    #[arg(long, conflicts_with = "random_geometric")]
    grid: bool,
    #[arg(long)]
    random_geometric: bool,
    /// Daily mean; the hourly profile has lunch and dinner peaks.
    #[arg(long, default_value_t = 50.0)]
    orders_per_hour: f64,
    #[arg(long, default_value_t = 50)]
    vehicles: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    /// Random instances per check.
    #[arg(long, default_value_t = 200)]
    cases: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate(a) => simulate(a),
        Command::Gen(a) => gen(a),
        Command::Oracle(a) => oracle(a),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let net = load_network(&a.network).with_context(|| format!("loading {}", a.network.display()))?;
    let rows = parse_orders(&read(&a.orders)?).context("parsing orders")?;
    let arrivals = parse_vehicles(&read(&a.vehicles)?, &net).context("parsing vehicles")?;
    let model = match &a.restaurants {
        Some(p) => parse_restaurant_model(&read(p)?).context("parsing restaurant model")?,
        None => PrepModel::default(),
    };
    let orders = resolve_orders(&rows, &net, &model, a.seed).context("resolving orders")?;
    let config = SimConfig {
        delta: a.delta,
        eta: a.eta,
        gamma: a.gamma,
        k_factor: a.k_factor,
        policy: a.policy.into(),
        rng_seed: a.seed,
        ..SimConfig::default()
    };
    let out = run(&config, &net, &orders, &arrivals)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let m = &out.metrics;
    write(&a.out, "metrics.toml", &m.to_toml())?;
    write(&a.out, "ledger.txt", &ledger_text(&out.ledger))?;
    let timings = format!("# overflown_windows {}\n{}", m.overflown_windows, m.runtimes_text());
    write(&a.out, "timings.txt", &timings)?;
    println!(
        "{}: delivered {} rejected {} in flight {} mean xdt {:.1}s orders/km {:.3} windows {} overflown {}",
        config.policy,
        m.delivered,
        m.rejected,
        m.in_flight,
        m.mean_xdt(),
        m.orders_per_km,
        m.windows,
        m.overflown_windows
    );
    Ok(())
}

fn gen(a: GenArgs) -> Result<()> {
    let spec = WorkloadSpec {
        node_count: a.nodes,
        topology: if a.random_geometric { Topology::RandomGeometric } else { Topology::Grid },
        order_rate_per_slot: peak_profile(a.orders_per_hour),
        vehicle_count: a.vehicles,
        seed: a.seed,
        ..WorkloadSpec::default()
    };
    let w = generate(&spec)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write(&a.out, "network.txt", &w.network_text())?;
    write(&a.out, "orders.txt", &w.orders_text())?;
    write(&a.out, "vehicles.txt", &w.vehicles_text())?;
    write(&a.out, "restaurants.txt", &w.restaurants_text())?;
    println!(
        "{} nodes, {} orders, {} vehicles written to {}",
        w.network.node_count(),
        w.orders.len(),
        w.vehicles.len(),
        a.out.display()
    );
    Ok(())
}

fn oracle(a: OracleArgs) -> Result<()> {
    let mut failures = 0;
    let mut report = |name: &str, ok: usize, total: usize| {
        println!("{name}: {ok}/{total} agree");
        if ok != total {
            failures += 1;
        }
    };

    let ex = worked_example();
    let model = CostModel::new(&ex.net, Limits::default());
    let mut table = CostMatrix::filled(ex.orders.len(), ex.vehicles.len(), 0.0);
    let mut ok = 0;
    for (r, o) in ex.orders.iter().enumerate() {
        for (c, v) in ex.vehicles.iter().enumerate() {
            let fast = model.set_cost(v, std::slice::from_ref(o), 0.0);
            let slow = brute_force_set_cost(&ex.net, v.location, 0.0, &[], std::slice::from_ref(o), 0.0);
            ok += usize::from(fast == slow);
            table.set(r, c, fast);
        }
    }
    report("fixture set costs", ok, ex.orders.len() * ex.vehicles.len());
    let matched = min_weight_matching(&table).total_cost;
    report("fixture matching", usize::from(matched == brute_force_assignment(&table)), 1);

    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut ok = 0;
    for _ in 0..a.cases {
        let (r, c) = (rng.random_range(1..=7), rng.random_range(1..=7));
        let m = CostMatrix::from_vec(r, c, (0..r * c).map(|_| rng.random_range(0..100) as f64).collect());
        ok += usize::from(min_weight_matching(&m).total_cost == brute_force_assignment(&m));
    }
    report("random matchings", ok, a.cases);

    let spec = WorkloadSpec { node_count: 49, vehicle_count: 0, seed: a.seed, ..WorkloadSpec::default() };
    let net = generate(&spec)?.network;
    let model = CostModel::new(&net, Limits::default());
    let n = net.node_count() as u32;
    let mut ok = 0;
    for case in 0..a.cases {
        let t = 3600.0 * rng.random_range(0..24) as f64;
        let count = rng.random_range(1..=3);
        let mut orders = Vec::with_capacity(count);
        for k in 0..count {
            let r = rng.random_range(0..n);
            let c = (r + rng.random_range(1..n)) % n;
            let id = OrderId((case * 4 + k) as u64);
            orders.push(Order::new(id, NodeId(r), NodeId(c), t, 1, rng.random_range(0..900) as f64)?);
        }
        let carried: Vec<Order> = orders.drain(..rng.random_range(0..count)).collect();
        let start = NodeId(rng.random_range(0..n));
        let plan = model.quickest_route_plan(start, &carried, &orders, t)?;
        let brute = brute_force_plan(&net, start, &carried, &orders, t);
        let agree = match brute {
            Some(b) => b.length == plan.length,
            None => !plan.is_feasible(),
        };
        ok += usize::from(agree);
    }
    report("random route plans", ok, a.cases);

    if failures > 0 {
        bail!("{failures} oracle check(s) disagreed");
    }
    Ok(())
}
