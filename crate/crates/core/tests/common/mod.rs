#![allow(dead_code)]

use mecsim::{Algorithm, Scenario};

/// A few sites, a handful of UEs and a short horizon: cheap enough to run
/// hundreds of times per property.
pub fn small_scenario(n_ues: usize, fps: f64, speed: f64) -> Scenario {
    Scenario {
        n_sites: 4,
        area_width_m: 900.0,
        area_height_m: 700.0,
        n_ues,
        fps,
        speed_mps: speed,
        sim_time_s: 3.0,
        warmup_s: 0.5,
        seeds: vec![1],
        ..Scenario::default()
    }
}

pub fn algorithm(i: usize) -> Algorithm {
    Algorithm::ALL[i % Algorithm::ALL.len()]
}

pub mod queue {
    use mecsim::mec::{Enqueued, FrameJob, MecServer};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp};

    pub fn poisson_arrivals(rate: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let exp = Exp::new(rate).unwrap();
        let mut t = 0.0;
        (0..n)
            .map(|_| {
                t += exp.sample(&mut rng);
                t
            })
            .collect()
    }

    /// Drives one unbounded single-queue server through the arrivals and
    /// returns each job's queue wait.
    pub fn server_waits(arrivals: &[f64], service: f64) -> Vec<f64> {
        let mut server = MecServer::new(0, usize::MAX, 1, service).unwrap();
        let mut jobs: Vec<FrameJob> = arrivals
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let mut j = FrameJob::new(i, 0, t, 12_000, 60);
                j.origin_sector = Some(0);
                j
            })
            .collect();
        // (completion time, job) of the job in service.
        let mut in_service: Option<(f64, usize)> = None;
        for i in 0..arrivals.len() {
            let t = arrivals[i];
            while let Some((done, id)) = in_service.filter(|(done, _)| *done <= t) {
                let c = server.complete_service(&mut jobs, id, done, Some(0)).unwrap();
                in_service = c.next.map(|(next, at)| (at, next));
            }
            if let Enqueued::Started { completes_at, .. } = server.enqueue(&mut jobs[i], t) {
                in_service = Some((completes_at, i));
            }
        }
        while let Some((done, id)) = in_service {
            let c = server.complete_service(&mut jobs, id, done, Some(0)).unwrap();
            in_service = c.next.map(|(next, at)| (at, next));
        }
        jobs.iter().map(|j| j.queue_wait().unwrap()).collect()
    }

    /// Lindley recursion for a FIFO single server with constant service.
    pub fn lindley_waits(arrivals: &[f64], service: f64) -> Vec<f64> {
        let mut w = vec![0.0; arrivals.len()];
        for n in 1..arrivals.len() {
            w[n] = (w[n - 1] + service - (arrivals[n] - arrivals[n - 1])).max(0.0);
        }
        w
    }

    pub fn pollaczek_khinchine_wait(rho: f64, service: f64) -> f64 {
        rho * service / (2.0 * (1.0 - rho))
    }

    /// Checks one M/D/1 run; `Err` describes the mismatch.
    pub fn check_md1(rho: f64, service: f64, seed: u64, rel_tol: f64) -> Result<(), String> {
        let arrivals = poisson_arrivals(rho / service, 200_000, seed);
        let sim = server_waits(&arrivals, service);
        let oracle = lindley_waits(&arrivals, service);
        if let Some((a, b)) = sim.iter().zip(&oracle).find(|(a, b)| (*a - *b).abs() > 1e-9) {
            return Err(format!("wait {a} vs Lindley {b}"));
        }
        // The first 1000 jobs carry the empty-start transient.
        let tail = &sim[1000..];
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        let pk = pollaczek_khinchine_wait(rho, service);
        if (mean - pk).abs() > rel_tol * pk {
            return Err(format!("mean wait {mean} vs {pk} at rho {rho}"));
        }
        Ok(())
    }
}

pub mod oracles {
    /// Exhaustive minimum over every capacity-respecting assignment.
    pub fn brute_force_assignment(cost: &[Vec<f64>], caps: &[usize]) -> Option<f64> {
        fn go(i: usize, cost: &[Vec<f64>], left: &mut [usize], acc: f64, best: &mut Option<f64>) {
            if i == cost.len() {
                if best.is_none_or(|b| acc < b) {
                    *best = Some(acc);
                }
                return;
            }
            for m in 0..left.len() {
                if left[m] > 0 {
                    left[m] -= 1;
                    go(i + 1, cost, left, acc + cost[i][m], best);
                    left[m] += 1;
                }
            }
        }
        let mut best = None;
        go(0, cost, &mut caps.to_vec(), 0.0, &mut best);
        best
    }

    /// Twice the median, exact for integers.
    pub fn twice_median(v: &[i64]) -> i64 {
        let mut s = v.to_vec();
        s.sort();
        let n = s.len();
        if n % 2 == 1 {
            2 * s[n / 2]
        } else {
            s[n / 2 - 1] + s[n / 2]
        }
    }

    /// Four times the MAD. Deviations of doubled samples from the doubled
    /// median are 2|x - m|, and their doubled median is 4 MAD.
    pub fn four_mad(v: &[i64]) -> i64 {
        let m2 = twice_median(v);
        let dev2: Vec<i64> = v.iter().map(|&x| (2 * x - m2).abs()).collect();
        twice_median(&dev2)
    }

    /// Samples within one population standard deviation of the mean, by
    /// integer arithmetic: |x - mean| <= sd iff n (n x - S)^2 <= sum (n x_i - S)^2.
    /// Second value: whether any sample sits exactly on the boundary.
    pub fn within_one_sd(v: &[i64]) -> (Vec<i64>, bool) {
        let n = v.len() as i128;
        let sum: i128 = v.iter().map(|&x| x as i128).sum();
        let dev = |x: i64| n * ((n * x as i128 - sum).pow(2));
        let spread: i128 = v.iter().map(|&x| (n * x as i128 - sum).pow(2)).sum();
        let kept = v.iter().copied().filter(|&x| dev(x) <= spread).collect();
        let edge = spread > 0 && v.iter().any(|&x| dev(x) == spread);
        (kept, edge)
    }
}

pub mod traces {
    use std::sync::OnceLock;

    use mecsim::handoff::{comp_ho_decide, HandoffParams, MeasurementReport};
    use mecsim::mec::LoadReport;
    use mecsim::sim::{RunOptions, Simulation};
    use mecsim::{Algorithm, Scenario};

    pub type Step = (MeasurementReport, Vec<Option<LoadReport>>);

    /// Reports and load snapshots from a short default-density run, replayed
    /// open loop against the recorded serving sectors.
    pub fn recorded() -> &'static [Step] {
        static TRACE: OnceLock<Vec<Step>> = OnceLock::new();
        TRACE.get_or_init(|| {
            let s = Scenario {
                sim_time_s: 6.0,
                ..Scenario::default()
            };
            let mut sim = Simulation::new(&s, Algorithm::CompHo, 7, RunOptions::default()).unwrap();
            let mut out = Vec::new();
            let mut t = 0.25;
            while t < s.sim_time_s {
                sim.run_until(t).unwrap();
                let loads: Vec<Option<LoadReport>> = (0..sim.world.sectors().len())
                    .map(|m| Some(sim.world.server(m).report_load(t)))
                    .collect();
                for ue in 0..sim.world.n_ues() {
                    if let Some(r) = sim.world.measurement_report(ue, t) {
                        out.push((r, loads.clone()));
                    }
                }
                t += 0.25;
            }
            out
        })
    }

    pub fn decisions(trace: &[Step], params: &HandoffParams) -> Vec<Option<usize>> {
        trace
            .iter()
            .map(|(r, l)| comp_ho_decide(r, l, params).decision.map(|d| d.target))
            .collect()
    }

    pub fn handoff_count(trace: &[Step], params: &HandoffParams) -> usize {
        decisions(trace, params)
            .into_iter()
            .filter(Option::is_some)
            .count()
    }
}
