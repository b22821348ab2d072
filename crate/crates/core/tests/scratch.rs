//! Throwaway diagnostics — not part of the suite.

use mass_core::io;
use mass_core::mapf::{self, MapfAlgo, MapfConfig};
use mass_core::occupancy::{ParkAtEnd, SafeIntervalTable};
use mass_core::ssipp::{GridHeuristic, SsippConfig, SsippProblem};
use mass_core::{GridWorld, KinodynamicLimits, Orientation};

fn limits() -> KinodynamicLimits {
    KinodynamicLimits::default()
}

#[test]
#[ignore]
fn find_c7_failure() {
    let lim = limits();
    for i in 0..50u64 {
        let world = GridWorld::open(16, 16);
        let n = (i % 10) as usize + 1;
        let entries = io::sample_entries(&world, "scratch.map", n, 4000 + i);
        let agents = io::agents_from_entries(&entries, &world, n);
        let cfg = MapfConfig {
            algo: MapfAlgo::Pbs,
            ssipp: SsippConfig { sps: mass_core::SpsKind::Bas, ..SsippConfig::default() },
            seed: i,
            time_limit: Some(600.0),
            ..MapfConfig::default()
        };
        match mapf::solve(&world, &lim, &agents, &cfg) {
            Ok(_) => {}
            Err(e) => {
                println!("instance {i} n={n} FAILED: {:?}", e.kind);
                for a in &agents {
                    println!(
                        "  agent {}: start ({}, {}) goal ({}, {})",
                        a.id,
                        world.x_of(a.start),
                        world.y_of(a.start),
                        world.x_of(a.goal),
                        world.y_of(a.goal)
                    );
                }
            }
        }
    }
}

#[test]
#[ignore]
fn warehouse_150_pp() {
    let lim = limits();
    let world = io::warehouse_map();
    let entries = io::sample_entries(&world, "warehouse-small.map", 150, 77);
    let agents = io::agents_from_entries(&entries, &world, 150);
    let t0 = std::time::Instant::now();
    let cfg = MapfConfig {
        algo: MapfAlgo::Pp,
        ssipp: SsippConfig { sps: mass_core::SpsKind::Bas, ..SsippConfig::default() },
        seed: 9,
        time_limit: Some(880.0),
        ..MapfConfig::default()
    };
    match mapf::solve(&world, &lim, &agents, &cfg) {
        Ok(sol) => {
            println!(
                "PP solved 150 agents in {:.1} s (attempts {}, runs {}, expanded {}, \
                 l1 {:.1} l2 {:.1} l3 {:.1})",
                t0.elapsed().as_secs_f64(),
                sol.stats.attempts,
                sol.stats.ssipp_runs,
                sol.stats.expanded,
                sol.stats.level1_time,
                sol.stats.level2_time,
                sol.stats.level3_time
            );
            let report = mass_core::validate(&sol.plans, &world, &lim, 0.05);
            println!("validate ok: {}", report.ok);
        }
        Err(e) => println!(
            "PP FAILED in {:.1} s: {:?} (attempts {}, runs {}, expanded {})",
            t0.elapsed().as_secs_f64(),
            e.kind,
            e.stats.attempts,
            e.stats.ssipp_runs,
            e.stats.expanded
        ),
    }
}

#[test]
#[ignore]
fn dissect_c4_instance_55() {
    let lim = limits();
    let i = 55u64;
    let world = io::random_obstacle_map(6, 6, 0.15, i);
    let mut component = io::largest_component(&world);
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(i ^ 0xA5A5_5A5A);
    component.shuffle(&mut rng);
    let extra = (i % 3) as usize;
    let cells = &component[..2 * (extra + 1)];
    println!("map:\n{}", io::write_map(&world));
    for (k, &c) in cells.iter().enumerate() {
        println!("cell[{k}] = ({}, {})", world.x_of(c), world.y_of(c));
    }

    let mut obstacles: Vec<mass_core::Plan> = Vec::new();
    for k in 0..extra {
        let table = SafeIntervalTable::from_plans(
            &obstacles,
            &world,
            ParkAtEnd::Forever,
            0.0,
            f64::INFINITY,
        );
        let h = GridHeuristic::new(&world, &lim, cells[2 * k + 3]);
        let out = mass_core::ssipp::solve(
            &SsippProblem {
                world: &world,
                limits: &lim,
                table: &table,
                agent: (k + 1) as u32,
                start_vertex: cells[2 * k + 2],
                start_orientation: Orientation::North,
                depart: 0.0,
                goal: cells[2 * k + 3],
            },
            &SsippConfig { sps: mass_core::SpsKind::Bas, ..SsippConfig::default() },
            &h,
        );
        let plan = out.plan.unwrap();
        println!("obstacle {k}: arrival {}", plan.arrival);
        dump_plan(&world, &plan);
        obstacles.push(plan);
    }

    let table = SafeIntervalTable::from_plans(
        &obstacles,
        &world,
        ParkAtEnd::Forever,
        0.0,
        f64::INFINITY,
    );
    let h = GridHeuristic::new(&world, &lim, cells[1]);
    let problem = SsippProblem {
        world: &world,
        limits: &lim,
        table: &table,
        agent: 0,
        start_vertex: cells[0],
        start_orientation: Orientation::East,
        depart: 0.0,
        goal: cells[1],
    };
    let cfg = SsippConfig { sps: mass_core::SpsKind::Bcs, ..SsippConfig::default() };
    let out = mass_core::ssipp::solve(&problem, &cfg, &h);
    let plan = out.plan.unwrap();
    println!("planner arrival {}", plan.arrival);
    dump_plan(&world, &plan);

    let oracle = mass_core::oracle::discretized_arrival(&mass_core::oracle::OracleQuery {
        world: &world,
        limits: &lim,
        table: &table,
        start_vertex: cells[0],
        start_orientation: Orientation::East,
        depart: 0.0,
        goal: cells[1],
    });
    println!("oracle arrival {oracle:?}");

    // Also try BAS and no-dedup variants for comparison.
    for (label, cfg) in [
        ("bas", SsippConfig { sps: mass_core::SpsKind::Bas, ..SsippConfig::default() }),
        (
            "bcs single-cell",
            SsippConfig {
                sps: mass_core::SpsKind::Bcs,
                max_segment_cells: Some(1),
                ..SsippConfig::default()
            },
        ),
        (
            "bcs no-dedup no-pe",
            SsippConfig {
                sps: mass_core::SpsKind::Bcs,
                duplicate_detection: false,
                partial_expansion: false,
                ..SsippConfig::default()
            },
        ),
    ] {
        let out = mass_core::ssipp::solve(&problem, &cfg, &h);
        println!("{label}: arrival {:?}", out.plan.map(|p| p.arrival));
    }
}

fn dump_plan(world: &GridWorld, plan: &mass_core::Plan) {
    for a in &plan.actions {
        let (x, y) = (world.x_of(a.vertex), world.y_of(a.vertex));
        match &a.kind {
            mass_core::ActionKind::Rotate { from, to } => println!(
                "  t={:.3} +{:?} rotate {from:?} -> {to:?} at ({x}, {y})",
                a.start, a.duration
            ),
            mass_core::ActionKind::Move { orientation, cells, to, .. } => println!(
                "  t={:.3} +{:?} move {orientation:?} {cells} cells from ({x}, {y}) to ({}, {})",
                a.start,
                a.duration,
                world.x_of(*to),
                world.y_of(*to)
            ),
            mass_core::ActionKind::Wait => {
                println!("  t={:.3} +{:?} wait at ({x}, {y})", a.start, a.duration)
            }
            mass_core::ActionKind::Task { task } => {
                println!("  t={:.3} +{:?} task {task:?} at ({x}, {y})", a.start, a.duration)
            }
        }
    }
}

#[test]
#[ignore]
fn dissect_failure() {
    // Filled in once find_c7_failure names the instance.
    let lim = limits();
    let world = GridWorld::open(16, 16);
    let i = 5u64;
    let n = (i % 10) as usize + 1;
    let entries = io::sample_entries(&world, "scratch.map", n, 4000 + i);
    let agents = io::agents_from_entries(&entries, &world, n);

    // Root plans: each agent alone.
    let empty = SafeIntervalTable::from_plans(
        std::iter::empty::<&mass_core::Plan>(),
        &world,
        ParkAtEnd::Forever,
        0.0,
        f64::INFINITY,
    );
    let cfg = SsippConfig { sps: mass_core::SpsKind::Bas, ..SsippConfig::default() };
    let mut roots = Vec::new();
    for a in &agents {
        let h = GridHeuristic::new(&world, &lim, a.goal);
        let p = SsippProblem {
            world: &world,
            limits: &lim,
            table: &empty,
            agent: a.id,
            start_vertex: a.start,
            start_orientation: a.orientation,
            depart: 0.0,
            goal: a.goal,
        };
        let out = mass_core::ssipp::solve(&p, &cfg, &h);
        roots.push(out.plan.expect("root routes alone"));
    }
    let c = mapf::detect_first_collision(&world, &roots).expect("some collision");
    println!(
        "first collision: agents {} and {} at cell ({}, {}) during {:?}",
        c.a,
        c.b,
        world.x_of(c.vertex),
        world.y_of(c.vertex),
        c.overlap
    );

    for (high, low) in [(c.a, c.b), (c.b, c.a)] {
        let table = SafeIntervalTable::from_plans(
            [&roots[high as usize]],
            &world,
            ParkAtEnd::Forever,
            0.0,
            f64::INFINITY,
        );
        let la = &agents[low as usize];
        let h = GridHeuristic::new(&world, &lim, la.goal);
        let p = SsippProblem {
            world: &world,
            limits: &lim,
            table: &table,
            agent: la.id,
            start_vertex: la.start,
            start_orientation: la.orientation,
            depart: 0.0,
            goal: la.goal,
        };
        let out = mass_core::ssipp::solve(&p, &cfg, &h);
        println!(
            "replan agent {low} below {high}: plan={} expanded={} cutoff={}",
            out.plan.is_some(),
            out.stats.expanded,
            out.stats.cutoff
        );
        if let Some(plan) = &out.plan {
            println!("  arrival {}", plan.arrival);
        } else {
            let hi = &roots[high as usize];
            println!(
                "  high plan: start ({}, {}) arrival {} actions {}",
                world.x_of(hi.start_vertex),
                world.y_of(hi.start_vertex),
                hi.arrival,
                hi.actions.len()
            );
            println!(
                "  low start ({}, {}) goal ({}, {})",
                world.x_of(la.start),
                world.y_of(la.start),
                world.x_of(la.goal),
                world.y_of(la.goal)
            );
            println!("  low start intervals: {:?}", table.intervals(la.start));
            println!("  low goal intervals: {:?}", table.intervals(la.goal));
        }
    }
}
