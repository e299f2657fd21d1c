use lpkit::{solve_lp_with, LpConfig};
use vmmap::formulations::{build_p1, build_p2, build_rlt, FormulationOptions};
use vmmap::heuristics::{crash_basis, greedy_placement};
use vmmap::io::{fixture_network, generate_instance, GeneratorConfig};
use vmmap::{build_path_table, EdgeWeightRule};

#[test]
#[ignore]
fn probe_iteration_counts() {
    let cfg_lp = LpConfig::default();

    for (nets, nr, vms, seed) in [
        ("8x10", 2usize, 3usize, 1u64),
        ("8x10", 2, 3, 7),
        ("12x15", 3, 5, 11),
        ("12x15", 2, 5, 3),
    ] {
        let net = fixture_network(nets).unwrap();
        let mut cfg = GeneratorConfig::new(nr, seed);
        cfg.vms_per_request = vms;
        let inst = generate_instance(&net, &cfg).unwrap();
        let paths = build_path_table(&inst.network, EdgeWeightRule::Hop).unwrap();
        let start = greedy_placement(&inst, &paths);
        for (name, system, vars) in [
            {
                let b = build_rlt(&inst, &paths, FormulationOptions::default()).unwrap();
                ("rlt", b.system, b.vars)
            },
            {
                let b = build_p1(&inst, &paths, FormulationOptions::default()).unwrap();
                ("p1", b.system, b.vars)
            },
            {
                let b = build_p2(&inst, &paths, FormulationOptions::default()).unwrap();
                ("p2", b.system, b.vars)
            },
        ] {
            let basis = start.as_ref().map(|s| crash_basis(&system, &vars, &paths, s));
            let t = std::time::Instant::now();
            let sol = solve_lp_with(&system, &cfg_lp, basis.as_ref()).unwrap();
            println!(
                "{nets} seed={seed} {name}: n={} m={} status={:?} obj={:.4} iters={} wall={:.2}s",
                system.num_vars(),
                system.num_rows(),
                sol.status,
                sol.objective,
                sol.iterations,
                t.elapsed().as_secs_f64()
            );
        }
    }
}
