use std::fs;
use std::process::Command;

use rapnet::experiment::sweep::{write_rows_csv, write_summary_csv, ROWS_HEADER};
use rapnet::experiment::{
    generate_scenario, run_scenario, run_sweep, Execution, GenerationError, MapSource, Method,
    MethodCost, ParamPoint, ScenarioParams,
};
use rapnet::world::Grid;

fn small_params(seed: u64) -> ScenarioParams {
    ScenarioParams {
        map: MapSource::Generated {
            width: 14,
            height: 9,
            aisle_spacing: 4,
        },
        num_humans: 8,
        num_robots: 5,
        seed,
        ..ScenarioParams::default()
    }
}

#[test]
fn placement_is_uniform_over_free_cells() {
    let mut counts = [0u32; 100];
    let runs = 10_000;
    for seed in 0..runs {
        let params = ScenarioParams {
            map: MapSource::Fixed(Grid::open(10, 10).unwrap()),
            num_humans: 0,
            num_robots: 0,
            seed,
            ..ScenarioParams::default()
        };
        let p = generate_scenario(&params).unwrap().roster.customer.pos;
        counts[p.y * 10 + p.x] += 1;
    }
    let expected = runs as f64 / 100.0;
    let sd = (expected * (1.0 - 0.01)).sqrt();
    for (cell, &c) in counts.iter().enumerate() {
        assert!((f64::from(c) - expected).abs() <= 5.0 * sd, "cell {cell}: {c}");
    }
}

#[test]
fn generation_is_deterministic() {
    for seed in [0, 1, 99] {
        let a = generate_scenario(&small_params(seed)).unwrap();
        let b = generate_scenario(&small_params(seed)).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }
    let a = generate_scenario(&small_params(1)).unwrap();
    let b = generate_scenario(&small_params(2)).unwrap();
    assert_ne!(a.to_json(), b.to_json());
}

#[test]
fn single_request_gives_hfi_no_advantage() {
    for seed in 0..30 {
        let params = ScenarioParams {
            requests_per_scenario: 1,
            ..small_params(seed)
        };
        let r = run_scenario(&generate_scenario(&params).unwrap()).unwrap();
        assert_eq!(r.totals(Method::Hfi), r.totals(Method::Dd));
    }
}

#[test]
fn unreachable_prices_fail_every_method() {
    let params = ScenarioParams {
        min_offer_lo: 1e6,
        min_offer_hi: 2e6,
        demand_robots: 0,
        ..small_params(4)
    };
    let r = run_scenario(&generate_scenario(&params).unwrap()).unwrap();
    for m in Method::ALL {
        for req in &r.requests {
            assert!(!req.get(m).fulfilled, "{m} request {}", req.index);
            assert_eq!(req.get(m).reward, 0.0);
        }
        assert_eq!(r.totals(m).fulfilled, 0);
    }
}

#[test]
fn totals_are_the_fold_of_rows() {
    let r = run_scenario(&generate_scenario(&small_params(8)).unwrap()).unwrap();
    for m in Method::ALL {
        let rows: Vec<&MethodCost> = r.requests.iter().map(|q| q.get(m)).collect();
        let t = r.totals(m);
        assert_eq!(t.requests, rows.len());
        assert_eq!(t.messages, rows.iter().map(|c| c.messages).sum::<u64>());
        assert_eq!(t.movement, rows.iter().map(|c| c.movement).sum::<u64>());
        assert_eq!(t.total, rows.iter().map(|c| c.total).sum::<f64>());
        for c in rows {
            let expected = r.weights.alpha * c.messages as f64 + r.weights.beta * c.movement as f64 + c.reward;
            assert!((c.total - expected).abs() < 1e-9);
        }
    }
}

#[test]
fn too_many_agents_is_a_generation_error() {
    let params = ScenarioParams {
        map: MapSource::Fixed(Grid::open(3, 3).unwrap()),
        num_humans: 5,
        num_robots: 5,
        ..ScenarioParams::default()
    };
    assert_eq!(
        generate_scenario(&params).unwrap_err(),
        GenerationError::NotEnoughFreeCells {
            needed: 11,
            available: 9
        }
    );
}

#[test]
fn sweep_csv_is_reproducible() {
    let points: Vec<_> = [10, 20]
        .iter()
        .map(|&n| ParamPoint::with_total_agents(&small_params(5), n))
        .collect();
    let csv = |exec| {
        let sweep = run_sweep(&points, 4, exec).unwrap();
        let mut rows = Vec::new();
        let mut summary = Vec::new();
        write_rows_csv(&sweep, &mut rows).unwrap();
        write_summary_csv(&sweep, &mut summary).unwrap();
        (rows, summary)
    };
    let a = csv(Execution::Parallel);
    assert_eq!(a, csv(Execution::Parallel));
    assert_eq!(a, csv(Execution::Sequential));
    let text = String::from_utf8(a.0).unwrap();
    assert_eq!(text.lines().next().unwrap(), ROWS_HEADER.join(","));
    assert_eq!(text.lines().count(), 1 + 2 * 4 * 3);
}

fn rapnet() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rapnet"))
}

#[test]
fn cli_run_writes_table_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let out = rapnet()
        .args(["run", "--seed", "3", "--format", "csv", "--trace"])
        .arg(&trace)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1 + 5 * 3);
    let trace = fs::read_to_string(trace).unwrap();
    assert!(trace.starts_with("round,sender,receiver,kind,message_id,hop\n"));
    assert!(trace.contains("# method=HFI request=4"));
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "budget = \"lots\"\n").unwrap();
    let status = rapnet().args(["run", "--config"]).arg(&bad).output().unwrap().status;
    assert_eq!(status.code(), Some(1));

    let invalid = dir.path().join("invalid.toml");
    fs::write(&invalid, "sigma = -1.0\n").unwrap();
    let status = rapnet().args(["run", "--config"]).arg(&invalid).output().unwrap().status;
    assert_eq!(status.code(), Some(1));

    let crowded = dir.path().join("crowded.toml");
    fs::write(&crowded, "map_width = 3\nmap_height = 3\naisle_spacing = 0\n").unwrap();
    let out = rapnet().args(["run", "--config"]).arg(&crowded).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let status = rapnet().args(["run", "--no-such-flag"]).output().unwrap().status;
    assert_eq!(status.code(), Some(1));
}

#[test]
fn cli_sweep_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, extra: &[&str]| {
        let path = dir.path().join(name);
        let status = rapnet()
            .args(["sweep", "--repetitions", "3", "--agents", "10,15", "--seed", "9", "--out"])
            .arg(&path)
            .args(extra)
            .status()
            .unwrap();
        assert!(status.success());
        (
            fs::read(&path).unwrap(),
            fs::read(path.with_extension("summary.csv")).unwrap(),
        )
    };
    let a = run("a.csv", &[]);
    assert_eq!(a, run("b.csv", &[]));
    assert_eq!(a, run("c.csv", &["--sequential"]));
}

#[test]
fn cli_gen_map_round_trips() {
    let out = rapnet().args(["gen-map", "--seed", "4"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let grid: Grid = text.parse().unwrap();
    assert_eq!((grid.width(), grid.height()), (20, 12));
    assert_eq!(grid.to_map_string(), text);
}
