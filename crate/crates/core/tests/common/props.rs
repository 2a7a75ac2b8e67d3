//! Property checks shared by the test suites and the acceptance report.
//! Each panics on the first counterexample.

use std::collections::BTreeSet;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sfcmig::agent::ActionSpace;
use sfcmig::cost::{reward, step_cost, RewardParams};
use sfcmig::model::{Problem, Topology};
use sfcmig::nn::{gradient_check, Mlp};
use sfcmig::state::{
    check_constraints, initial_placement, maxmin_allocate, MigrationAction, NetworkState, StateParts, Violation,
};

/// Max-min fairness by its pairwise characterisation: every unsatisfied
/// participant gets at least as much as anyone else, nothing exceeds its
/// demand, and capacity is either exhausted or not needed.
pub fn check_maxmin<S: sfcmig::Scalar>(d: &[S], cap: S, a: &[S], close: impl Fn(S, S) -> bool) {
    assert_eq!(a.len(), d.len());
    let mut used = S::zero();
    let mut need = S::zero();
    for (&x, &y) in a.iter().zip(d) {
        assert!(x >= S::zero() && x <= y, "{x:?} outside [0, {y:?}]");
        used += x;
        need += y;
    }
    if need <= cap {
        assert!(a.iter().zip(d).all(|(&x, &y)| close(x, y)));
    } else {
        assert!(close(used, cap), "used {used:?} of {cap:?}");
    }
    for i in 0..a.len() {
        if close(a[i], d[i]) {
            continue;
        }
        for j in 0..a.len() {
            assert!(a[j] <= a[i] || close(a[j], a[i]), "a[{j}]={:?} > unsatisfied a[{i}]={:?}", a[j], a[i]);
        }
    }
}

/// Random demand vectors, exact rationals and floats.
pub fn maxmin_random(cases: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..cases {
        let n = rng.gen_range(0..9);
        let d: Vec<Ratio<i64>> = (0..n).map(|_| Ratio::new(rng.gen_range(0..200), rng.gen_range(1..12))).collect();
        let cap = Ratio::new(rng.gen_range(0..400), rng.gen_range(1..8));
        check_maxmin(&d, cap, &maxmin_allocate(&d, cap), |x, y| x == y);

        let d: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..50.0)).collect();
        let cap = rng.gen_range(0.0..120.0);
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * (1.0 + x.abs().max(y.abs()));
        check_maxmin(&d, cap, &maxmin_allocate(&d, cap), close);
    }
}

/// Square with one chord; node 3 cannot host VNFs.
fn square() -> Topology {
    Topology::parse("[nodes]\n0,10,1,1\n1,10,1,1\n2,8,1,1\n3,10,1,0\n[links]\n0,1,1\n1,2,1\n2,3,1\n0,3,2\n0,2,3\n")
        .unwrap()
}

pub fn random_problem(rng: &mut ChaCha8Rng) -> Problem {
    let n_chains = rng.gen_range(1..=3);
    let chains: Vec<Vec<usize>> =
        (0..n_chains).map(|_| (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(0..2)).collect()).collect();
    let n_flows = n_chains * rng.gen_range(1..=2);
    let flows: Vec<(usize, usize, f64)> =
        (0..n_flows).map(|_| (rng.gen_range(0..4), rng.gen_range(0..4), rng.gen_range(0..100) as f64)).collect();
    super::problem(square(), &chains, &flows, rng.gen_range(2..10) as f64)
}

fn random_walk(topo: &Topology, from: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut path = vec![from];
    for _ in 0..rng.gen_range(0..4) {
        let here = *path.last().unwrap();
        let nb = topo.neighbors(here);
        path.push(nb[rng.gen_range(0..nb.len())].0);
    }
    path
}

fn random_state(p: &Problem, rng: &mut ChaCha8Rng) -> NetworkState {
    let topo = &p.topology;
    let routes = topo.routes();
    let placement: Vec<Vec<usize>> = p
        .chains
        .iter()
        .map(|c| c.vnfs.iter().map(|_| rng.gen_range(0..topo.len())).collect())
        .collect();
    let path = |a: usize, b: usize, rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.8) {
            routes.path(a, b).to_vec()
        } else {
            random_walk(topo, a, rng)
        }
    };
    let chain_routes = placement
        .iter()
        .map(|nodes| nodes.windows(2).map(|w| path(w[0], w[1], rng)).collect())
        .collect();
    let owner = |f: usize| p.chains.iter().position(|c| c.flows.contains(&f)).unwrap();
    let ingress = (0..p.flows.len()).map(|f| routes.path(p.flows[f].src, placement[owner(f)][0]).to_vec()).collect();
    let egress = (0..p.flows.len())
        .map(|f| routes.path(*placement[owner(f)].last().unwrap(), p.flows[f].dst).to_vec())
        .collect();
    let deployed = (0..topo.len()).map(|_| (0..p.catalog.len()).map(|_| rng.gen_bool(0.4)).collect()).collect();
    NetworkState::from_parts(
        p,
        StateParts { slot: 0, placement, deployed, chain_routes, ingress, egress, moved: vec![false; p.chains.len()] },
    )
}

fn perturb(p: &Problem, s: &NetworkState, rng: &mut ChaCha8Rng) -> NetworkState {
    let mut parts = s.clone().into_parts();
    for nodes in parts.placement.iter_mut() {
        for node in nodes.iter_mut() {
            if rng.gen_bool(0.3) {
                *node = rng.gen_range(0..p.topology.len());
            }
        }
    }
    NetworkState::from_parts(p, parts)
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    Delay(usize),
    Capacity(usize),
    Mapping(usize, usize),
    Migration(usize, usize),
    Type(usize),
    Conservation(usize, usize, usize, i64, i64),
}

fn key(v: &Violation) -> Key {
    match *v {
        Violation::Delay { flow, .. } => Key::Delay(flow),
        Violation::Capacity { node, .. } => Key::Capacity(node),
        Violation::Mapping { chain, vnf, .. } => Key::Mapping(chain, vnf),
        Violation::MigrationCount { chain, moved } => Key::Migration(chain, moved),
        Violation::TypeAvailability { vnf_type } => Key::Type(vnf_type),
        Violation::FlowConservation { chain, link, node, net_out, expected } => {
            Key::Conservation(chain, link, node, net_out, expected)
        }
        Violation::FlowPartition { .. } => panic!("generated problems partition flows"),
    }
}

fn walk_delay(topo: &Topology, path: &[usize]) -> f64 {
    path.windows(2).map(|w| topo.link_delay(w[0], w[1]).unwrap_or(0.0)).sum()
}

/// Direct evaluation of every constraint from the raw state fields.
fn brute_force(p: &Problem, prev: &NetworkState, s: &NetworkState) -> BTreeSet<Key> {
    let topo = &p.topology;
    let n = topo.len();
    let mut out = BTreeSet::new();
    for (q, c) in p.chains.iter().enumerate() {
        let mut links = 0.0;
        for l in 0..c.vnfs.len() - 1 {
            links += walk_delay(topo, s.route(q, l));
        }
        let proc: f64 = c.vnfs.iter().map(|&v| p.catalog.get(v).proc_coeff).sum();
        for &f in &c.flows {
            let d = walk_delay(topo, s.ingress(f)) + links + walk_delay(topo, s.egress(f)) + proc;
            if d > c.max_delay * (1.0 + 1e-9) {
                out.insert(Key::Delay(f));
            }
        }
    }
    let mut demand = vec![0.0; n];
    for (q, c) in p.chains.iter().enumerate() {
        let bq: f64 = c.flows.iter().map(|&f| p.flows[f].bandwidth[0]).sum();
        for (m, &v) in c.vnfs.iter().enumerate() {
            demand[s.node_of(q, m)] += bq / p.config.packet_len * p.catalog.get(v).proc_coeff;
        }
    }
    for i in 0..n {
        let cap = topo.node(i).capacity;
        if topo.is_function_node(i) && demand[i] > cap * (1.0 + 1e-9) {
            out.insert(Key::Capacity(i));
        }
    }
    for (q, c) in p.chains.iter().enumerate() {
        let mut moved = 0;
        for m in 0..c.vnfs.len() {
            if !topo.is_function_node(s.node_of(q, m)) {
                out.insert(Key::Mapping(q, m));
            }
            if s.node_of(q, m) != prev.node_of(q, m) {
                moved += 1;
            }
        }
        if moved > 1 {
            out.insert(Key::Migration(q, moved));
        }
    }
    for v in 0..p.catalog.len() {
        let wanted = p.chains.iter().any(|c| c.vnfs.contains(&v));
        if wanted && !(0..n).any(|i| s.is_deployed(i, v)) {
            out.insert(Key::Type(v));
        }
    }
    for (q, c) in p.chains.iter().enumerate() {
        for l in 0..c.vnfs.len() - 1 {
            let mut z = vec![vec![false; n]; n];
            for w in s.route(q, l).windows(2) {
                if topo.link_delay(w[0], w[1]).is_some() {
                    z[w[0]][w[1]] = true;
                }
            }
            for i in 0..n {
                let out_deg = (0..n).filter(|&j| z[i][j]).count() as i64;
                let in_deg = (0..n).filter(|&j| z[j][i]).count() as i64;
                let y_from = i64::from(s.node_of(q, l) == i);
                let y_to = i64::from(s.node_of(q, l + 1) == i);
                if out_deg - in_deg != y_from - y_to {
                    out.insert(Key::Conservation(q, l, i, out_deg - in_deg, y_from - y_to));
                }
            }
        }
    }
    out
}

/// Checker against direct evaluation on random (mostly infeasible)
/// states; returns how many constraint families fired.
pub fn checker_vs_brute_force(cases: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    for _ in 0..cases {
        let p = random_problem(&mut rng);
        let prev = random_state(&p, &mut rng);
        let s = perturb(&p, &prev, &mut rng);
        let got: BTreeSet<Key> = check_constraints(&p, &prev, &s).violations.iter().map(key).collect();
        let want = brute_force(&p, &prev, &s);
        assert_eq!(got, want);
        seen.extend(got.iter().map(|k| format!("{k:?}").split('(').next().unwrap().to_string()));
    }
    seen.len()
}

/// The reward drops by exactly `α (ECOST_max - ECOST)` when P reaches ρ.
pub fn reward_boundary(cases: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..cases {
        let den = rng.gen_range(1..16);
        let r = |n: i64| Ratio::new(n, den);
        let e = rng.gen_range(0..1000);
        let p = RewardParams {
            alpha_c: Ratio::new(1, 2),
            beta_c: Ratio::new(1, 2),
            gamma_c: Ratio::from_integer(1),
            rho: Ratio::new(1, 10),
            ecost_max: r(e + rng.gen_range(1..1000)),
        };
        let m = r(rng.gen_range(0..500));
        let eps = Ratio::new(1, 1_000_000);
        let jump = reward(&p, r(e), m, p.rho - eps) - reward(&p, r(e), m, p.rho) - p.gamma_c * eps;
        assert_eq!(jump, p.alpha_c * (p.ecost_max - r(e)));

        let (e, extra, m): (f64, f64, f64) = (rng.gen_range(0.0..100.0), rng.gen_range(0.1..100.0), rng.gen_range(0.0..50.0));
        let p = RewardParams { alpha_c: 0.5, beta_c: 0.5, gamma_c: 1.0, rho: 0.1, ecost_max: e + extra };
        let jump = reward(&p, e, m, p.rho * (1.0 - 1e-12)) - reward(&p, e, m, p.rho);
        assert!((jump - p.alpha_c * extra).abs() < 1e-9, "{jump} vs {}", p.alpha_c * extra);
    }
}

/// A no-op on any placement moves no data and remaps nothing.
pub fn noop_is_free(cases: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..cases {
        let p = random_problem(&mut rng);
        let fnodes = p.topology.function_nodes().to_vec();
        let placement =
            p.chains.iter().map(|c| c.vnfs.iter().map(|_| fnodes[rng.gen_range(0..fnodes.len())]).collect()).collect();
        let s = NetworkState::from_placement(&p, placement, 0).unwrap();
        for q in 0..p.chains.len() {
            let t = s.apply_action(&p, MigrationAction::noop(q)).unwrap();
            let c = step_cost(&p, &s, &t, q);
            assert_eq!((c.ncost, c.rcost, c.mcost), (0.0, 0.0, 0.0));
        }
    }
}

/// Worst relative error of backprop against central differences.
pub fn gradient_worst(nets: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..nets {
        let depth = rng.gen_range(1..=3);
        let mut sizes = vec![rng.gen_range(1..=5)];
        for _ in 0..depth {
            sizes.push(rng.gen_range(1..=6));
        }
        // random biases too: zero biases behind a dead layer put every
        // unit exactly on the ReLU kink, where finite differences disagree
        let mut net = Mlp::<f64>::zeros(&sizes).unwrap();
        net.params_mut().iter_mut().for_each(|p| *p = rng.gen_range(-1.0..1.0));
        let x: Vec<f64> = (0..sizes[0]).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t: Vec<f64> = (0..*sizes.last().unwrap()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        worst = worst.max(gradient_check(&net, &x, &t).unwrap());
    }
    worst
}

/// Every index decodes back to itself, for g in 1..=4 and N in 2..=11.
pub fn action_bijection() {
    for g in 1..=4 {
        for n in 2..=11 {
            let space = ActionSpace::new(g, (0..n).collect());
            for shift in 0..n.min(3) {
                let current: Vec<usize> = (0..g).map(|m| (m * shift + shift) % n).collect();
                for i in 0..space.len() {
                    let a = space.encode(0, &current, i).unwrap();
                    assert_eq!(space.decode(&current, &a).unwrap(), i);
                }
            }
        }
    }
}

pub fn snapshot_is_isolated() {
    let p = super::problem(super::line3(), &[vec![0, 1], vec![1]], &[(0, 2, 10.0), (2, 0, 10.0)], 100.0);
    let real = initial_placement(&p).unwrap();
    let before = real.fingerprint();
    let mut snap = real.snapshot();
    snap.apply_in_place(&p, MigrationAction::moving(0, 1, 2)).unwrap();
    assert_ne!(snap.fingerprint(), before);
    assert_eq!(real.fingerprint(), before);
    assert_eq!(real.placement(0), &[0, 0]);
}
