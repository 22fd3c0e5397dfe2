// Scratch harness for bandwidth/default tuning; not part of the deliverable API.
use farboot_core::experiment::{run_distribution_experiment, ExperimentConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let reps: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(100);
    let seeds: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(3);
    let c_h: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let c_b: f64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let q: f64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(0.0);
    let bump: f64 = args.get(6).and_then(|s| s.parse().ok()).unwrap_or(0.1);
    let offset: u64 = args.get(7).and_then(|s| s.parse().ok()).unwrap_or(0);

    let mut cfg = ExperimentConfig::default();
    cfg.run.replications = reps;
    cfg.run.bootstrap_draws = reps;
    cfg.estimator.c_h = c_h;
    cfg.estimator.c_b = c_b;
    cfg.estimator.q_override = q;
    cfg.run.target_bump = bump;

    let ns = cfg.run.n_list.clone();
    let dirs = cfg.run.directions.clone();
    let mut ks_by_n: Vec<Vec<f64>> = vec![Vec::new(); ns.len()];
    let mut vr_by_n: Vec<Vec<f64>> = vec![Vec::new(); ns.len()];
    let mut gap_by_n: Vec<Vec<f64>> = vec![Vec::new(); ns.len()];
    let mut vr_by_dir: Vec<Vec<f64>> = vec![Vec::new(); dirs.len()];
    for seed in offset..offset + seeds {
        let t0 = std::time::Instant::now();
        let rep = run_distribution_experiment(&cfg, seed).unwrap();
        for (i, &n) in ns.iter().enumerate() {
            let r = rep.record_for(n, "e1").unwrap();
            ks_by_n[i].push(r.ks);
            vr_by_n[i].push(r.boot_var / r.mc_var);
            gap_by_n[i].push((r.boot_mean - r.mc_mean) / r.mc_var.sqrt());
            if seed == 0 {
                println!(
                    "seed {seed} n {n}: q={:.2} h={:.3} b={:.3} fhat={:.3} ks={:.3} mc=({:.3},{:.3}) boot=({:.3},{:.3}) fb=({},{}) valid={}",
                    r.q, r.h, r.b, r.fhat_ref, r.ks, r.mc_mean, r.mc_var, r.boot_mean, r.boot_var,
                    r.mc_fallback, r.boot_fallback, r.valid
                );
            }
        }
        for (d, name) in dirs.iter().enumerate() {
            let r = rep.record_for(*ns.last().unwrap(), name).unwrap();
            vr_by_dir[d].push(r.boot_var / r.mc_var);
        }
        let latest: Vec<f64> = ks_by_n.iter().map(|v| *v.last().unwrap()).collect();
        println!("seed {seed}: ks {latest:?} ({:.1}s)", t0.elapsed().as_secs_f64());
    }
    let median = |v: &mut Vec<f64>| -> f64 {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if v.len() % 2 == 1 { v[v.len() / 2] } else { 0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2]) }
    };
    print!("KS medians:");
    for (i, &n) in ns.iter().enumerate() {
        print!(" n{}={:.4}", n, median(&mut ks_by_n[i]));
    }
    println!();
    print!("var ratios at n_max (boot/mc medians):");
    for (d, name) in dirs.iter().enumerate() {
        print!(" {}={:.3}", name, median(&mut vr_by_dir[d]));
    }
    println!();
    print!("per-n e1 var ratio medians:");
    for (i, &n) in ns.iter().enumerate() {
        print!(" n{}={:.3}", n, median(&mut vr_by_n[i]));
    }
    println!();
    print!("per-n |location gap|/sd medians:");
    for (i, &n) in ns.iter().enumerate() {
        let mut a: Vec<f64> = gap_by_n[i].iter().map(|g| g.abs()).collect();
        print!(" n{}={:.3}", n, median(&mut a));
    }
    println!();
    print!("per-n signed gap means:");
    for (i, &n) in ns.iter().enumerate() {
        let m: f64 = gap_by_n[i].iter().sum::<f64>() / gap_by_n[i].len() as f64;
        print!(" n{}={:+.3}", n, m);
    }
    println!();
}
