use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use locality_core::blackbox::{accuracy, train_mlp, MlpModel, TrainConfig};
use locality_core::data::{generate_half_moons, parse_csv, HalfMoons};
use locality_core::neighbourhood::{
    default_kernel_width, gsls_neighbourhood, leap_neighbourhood, lid_estimate, lime_neighbourhood, lime_weights,
    local_pca, lore_neighbourhood, run_lore_ga, GslsConfig, LeapConfig, LimeConfig, LoreConfig, LoreTarget,
};
use locality_core::patterns::{apriori, discretize, mine_patterns, palex_distance, PalexConfig};
use locality_core::shapley::{exact_shapley, kernelshap_solve, Background, SubsetSource};
use locality_core::{BlackBox, Dataset, FeatureKind, FnModel, Instance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform_vec(rng: &mut ChaCha8Rng, d: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(lo..hi)).collect()
}

fn background(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Background {
    Background::new((0..n).map(|_| uniform_vec(rng, d, -2.0, 2.0)).collect()).unwrap()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn half_moons() -> Dataset {
    generate_half_moons(&HalfMoons {
        n: 1000,
        noise: 0.2,
        seed: 0,
    })
    .unwrap()
}

fn shapley_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for d in 2..=8 {
        for trial in 0..20u64 {
            let seed = 1000 * d as u64 + trial;
            let mut r = rng(seed);
            let model = MlpModel::initialize(d, 8, seed).unwrap();
            let z_e = uniform_vec(&mut r, d, -2.0, 2.0);
            let bg = background(&mut r, 10, d);
            let exact = exact_shapley(&model, &z_e, &bg).unwrap();
            let kernel = kernelshap_solve(&model, &z_e, &bg, SubsetSource::Full).unwrap();
            worst = worst.max(max_abs_diff(&exact.phi, &kernel.phi));
            worst = worst.max((exact.base_value - kernel.base_value).abs());
        }
    }
    let elapsed = start.elapsed();
    ensure(worst <= 1e-8, format!("max abs error {worst:e} > 1e-8"))?;
    ensure(elapsed < Duration::from_secs(30), format!("took {elapsed:?}"))?;
    Ok(format!(
        "140 triples, max abs error {worst:.1e}, {:.2} s",
        elapsed.as_secs_f64()
    ))
}

fn shapley_axioms() -> Outcome {
    let (mut eff, mut dummy, mut sym, mut add) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for trial in 0..50u64 {
        let mut r = rng(7000 + trial);
        let d = r.random_range(2..=6);
        let z_e = uniform_vec(&mut r, d, -2.0, 2.0);
        let bg = background(&mut r, 10, d);

        let mlp = MlpModel::initialize(d, 6, trial).unwrap();
        for values in [
            exact_shapley(&mlp, &z_e, &bg).unwrap(),
            kernelshap_solve(&mlp, &z_e, &bg, SubsetSource::Full).unwrap(),
        ] {
            let total = values.phi.iter().sum::<f64>() + values.base_value;
            eff = eff.max((total - mlp.predict_proba(&z_e)).abs());
        }

        let ignored = r.random_range(0..d);
        let a = uniform_vec(&mut r, d, -1.0, 1.0);
        let f = |x: &[f64]| {
            let s: f64 = (0..d).filter(|&j| j != ignored).map(|j| a[j] * x[j]).sum();
            1.0 / (1.0 + (-s).exp())
        };
        let values = exact_shapley(&FnModel::new(d, f), &z_e, &bg).unwrap();
        dummy = dummy.max(values.phi[ignored].abs());

        let (i, j) = (0, 1);
        let mut z_sym = z_e.clone();
        z_sym[j] = z_sym[i];
        let rows: Vec<Vec<f64>> = bg
            .rows()
            .iter()
            .map(|row| {
                let mut row = row.clone();
                row[j] = row[i];
                row
            })
            .collect();
        let bg_sym = Background::new(rows).unwrap();
        let g = |x: &[f64]| (x[0] * x[1]).tanh() + x.iter().skip(2).map(|v| v.sin()).sum::<f64>();
        let values = exact_shapley(&FnModel::new(d, g), &z_sym, &bg_sym).unwrap();
        sym = sym.max((values.phi[i] - values.phi[j]).abs());

        let b = a.clone();
        let f1 = |x: &[f64]| x.iter().zip(&b).map(|(v, w)| (v * w).cos()).sum::<f64>();
        let f2 = |x: &[f64]| x.iter().map(|v| v * v).product::<f64>();
        let sum = |x: &[f64]| f1(x) + f2(x);
        let p1 = exact_shapley(&FnModel::new(d, f1), &z_e, &bg).unwrap();
        let p2 = exact_shapley(&FnModel::new(d, f2), &z_e, &bg).unwrap();
        let ps = exact_shapley(&FnModel::new(d, sum), &z_e, &bg).unwrap();
        for k in 0..d {
            add = add.max((p1.phi[k] + p2.phi[k] - ps.phi[k]).abs());
        }
    }
    ensure(eff <= 1e-10, format!("efficiency error {eff:e}"))?;
    ensure(dummy <= 1e-12, format!("dummy error {dummy:e}"))?;
    ensure(sym <= 1e-10, format!("symmetry error {sym:e}"))?;
    ensure(add <= 1e-10, format!("additivity error {add:e}"))?;
    Ok(format!(
        "50 trials: efficiency {eff:.1e}, dummy {dummy:.1e}, symmetry {sym:.1e}, additivity {add:.1e}"
    ))
}

fn linear_closed_form() -> Outcome {
    let mut worst = 0.0f64;
    for trial in 0..50u64 {
        let mut r = rng(9000 + trial);
        let d = r.random_range(1..=8);
        let a = uniform_vec(&mut r, d, -3.0, 3.0);
        let c: f64 = r.random_range(-1.0..1.0);
        let z_e = uniform_vec(&mut r, d, -2.0, 2.0);
        let n = r.random_range(1..=20);
        let bg = background(&mut r, n, d);
        let model = FnModel::new(d, |x: &[f64]| c + x.iter().zip(&a).map(|(v, w)| v * w).sum::<f64>());
        let values = exact_shapley(&model, &z_e, &bg).unwrap();
        for i in 0..d {
            let mean = bg.rows().iter().map(|row| row[i]).sum::<f64>() / n as f64;
            worst = worst.max((values.phi[i] - a[i] * (z_e[i] - mean)).abs());
        }
    }
    ensure(worst <= 1e-9, format!("max error {worst:e}"))?;
    Ok(format!("50 linear games, max error {worst:.1e}"))
}

fn lime_contract() -> Outcome {
    let data = half_moons();
    let model = FnModel::new(2, |x: &[f64]| 1.0 / (1.0 + (-x[0] - x[1]).exp()));
    let z_e = Instance::new(vec![0.4, -0.1]).unwrap();
    let hood = lime_neighbourhood(&model, &data, &z_e, &LimeConfig::default(), 3).unwrap();
    let weights = hood.weights.clone().unwrap();
    let distances: Vec<f64> = hood
        .points
        .iter()
        .map(|p| {
            p.iter()
                .zip(z_e.as_slice())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .collect();
    let mut by_weight: Vec<usize> = (0..weights.len()).collect();
    by_weight.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]));
    let mut by_distance: Vec<usize> = (0..distances.len()).collect();
    by_distance.sort_by(|&a, &b| distances[b].total_cmp(&distances[a]));
    ensure(
        by_weight == by_distance,
        "weight order differs from reverse distance order",
    )?;

    let gamma = default_kernel_width(2);
    let w = lime_weights(&[z_e.as_slice().to_vec(), vec![1.4, -0.1]], z_e.as_slice(), gamma).unwrap();
    ensure(w[0] == 1.0, format!("weight at the instance is {}", w[0]))?;
    let formula = (-1.0 / 2f64.sqrt().powf(0.75)).exp();
    ensure(
        (w[1] - formula).abs() <= 1e-12,
        format!("unit weight {} vs formula {formula}", w[1]),
    )?;
    let target = 0.46246;
    ensure(
        (w[1] - target).abs() <= 1e-6,
        format!(
            "unit-distance weight {:.7} matches exp(-1/sqrt(2)^0.75) = {formula:.7} but not the stated {target} (off by {:.1e})",
            w[1],
            (w[1] - target).abs()
        ),
    )?;
    Ok(format!("unit-distance weight {:.7}", w[1]))
}

fn gsls_contract() -> Outcome {
    let model = FnModel::new(2, |x: &[f64]| if x[0] >= 0.0 { 1.0 } else { 0.0 });
    let z_e = Instance::new(vec![-2.0, 0.0]).unwrap();
    let cfg = GslsConfig {
        radius: 0.3,
        sample_count: 5000,
        eta: 0.1,
        max_radius: 20.0,
        layer_samples: 200,
    };
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for seed in 0..20 {
        let hood = gsls_neighbourhood(&model, &z_e, &cfg, seed).unwrap();
        let cf = hood.anchor.clone().unwrap();
        let dist = (cf[0] + 2.0).hypot(cf[1]);
        lo = lo.min(dist);
        hi = hi.max(dist);
        ensure(
            (2.0..=2.0 + cfg.eta).contains(&dist),
            format!("seed {seed}: counterfactual at {dist}"),
        )?;
        ensure(
            model.predict_label(&cf) != model.predict_label(z_e.as_slice()),
            format!("seed {seed}: counterfactual has the instance's class"),
        )?;
        let outside = hood
            .points
            .iter()
            .filter(|p| (p[0] - cf[0]).hypot(p[1] - cf[1]) > cfg.radius)
            .count();
        ensure(outside == 0, format!("seed {seed}: {outside} points outside the ball"))?;
    }
    Ok(format!("20 seeds, counterfactual distance in [{lo:.4}, {hi:.4}]"))
}

fn lore_contract() -> Outcome {
    let data = half_moons();
    let model = train_mlp(&data, &TrainConfig::default()).unwrap();
    let cfg = LoreConfig::default();
    let mut both = 0;
    for seed in 0..20u64 {
        let z_e = data.instance((seed as usize * 53) % data.n_rows()).unwrap();
        let mut r = rng(seed);
        for target in [LoreTarget::Same, LoreTarget::Different] {
            let run = run_lore_ga(&model, &data, z_e.as_slice(), target, &cfg, &mut r).unwrap();
            let best = &run.best_per_generation;
            ensure(
                best.windows(2).all(|w| w[1] >= w[0]),
                format!("seed {seed}, {target:?}: best fitness decreased"),
            )?;
        }
        let hood = lore_neighbourhood(&model, &data, &z_e, &cfg, seed).unwrap();
        if hood.bb_labels.contains(&0) && hood.bb_labels.contains(&1) {
            both += 1;
        }
    }
    ensure(both >= 19, format!("both classes in only {both}/20 runs"))?;
    Ok(format!(
        "fitness monotone in 40 GA runs, both classes in {both}/20 neighbourhoods"
    ))
}

fn line_in_5d(seed: u64) -> Dataset {
    let dir = [1.0, 2.0, -1.0, 0.5, 3.0];
    let mut r = rng(seed);
    let rows = (0..1000)
        .map(|_| {
            let t: f64 = r.random_range(-1.0..1.0);
            dir.iter().map(|v| v * t + 0.3).collect()
        })
        .collect();
    Dataset::new(rows, None).unwrap()
}

fn disc(seed: u64) -> Dataset {
    let mut r = rng(seed);
    let rows = (0..1000)
        .map(|_| {
            let radius = r.random::<f64>().sqrt();
            let angle = r.random_range(0.0..std::f64::consts::TAU);
            vec![radius * angle.cos(), radius * angle.sin()]
        })
        .collect();
    Dataset::new(rows, None).unwrap()
}

fn lid_runs(sample: impl Fn(u64) -> Dataset, z_e: &[f64], range: (f64, f64)) -> (Vec<f64>, usize) {
    let estimates: Vec<f64> = (0..10)
        .map(|seed| lid_estimate(&sample(seed), z_e, 20).unwrap())
        .collect();
    let inside = estimates.iter().filter(|v| (range.0..=range.1).contains(*v)).count();
    (estimates, inside)
}

fn leap_contract() -> Outcome {
    let mut worst = 0.0f64;
    let cases: Vec<(Dataset, Vec<f64>)> = vec![
        (line_in_5d(100), vec![0.3; 5]),
        (line_in_5d(101), vec![1.3, 2.3, -0.7, 0.8, 3.3]),
        (disc(100), vec![0.1, -0.2]),
        (half_moons(), vec![0.5, 0.25]),
    ];
    for (data, z) in &cases {
        let d = z.len();
        let model = FnModel::new(d, |x: &[f64]| 1.0 / (1.0 + (-x.iter().sum::<f64>()).exp()));
        let cfg = LeapConfig::default();
        let z_e = Instance::new(z.clone()).unwrap();
        let hood = leap_neighbourhood(&model, data, &z_e, &cfg, 5).unwrap();
        let lid = lid_estimate(data, z, cfg.k_lid).unwrap();
        let pca = local_pca(data, z, cfg.k_pca, (lid.round() as usize).clamp(1, d)).unwrap();
        for p in &hood.points {
            worst = worst.max(pca.residual(p));
        }
    }

    let fmt = |v: &[f64]| {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let all = v.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(" ");
        format!("{all}, mean {mean:.2}")
    };
    let (line, line_in) = lid_runs(line_in_5d, &[0.3; 5], (0.6, 1.5));
    let (plane, plane_in) = lid_runs(disc, &[0.0, 0.0], (1.5, 2.6));
    let detail = format!(
        "line LID [{}] {line_in}/10 in [0.6, 1.5]; disc LID [{}] {plane_in}/10 in [1.5, 2.6]; max hull residual {worst:.1e}",
        fmt(&line),
        fmt(&plane)
    );
    ensure(worst <= 1e-9, detail.clone())?;
    ensure(line_in == 10 && plane_in == 10, detail.clone())?;
    Ok(detail)
}

fn brute_force_itemsets(rows: &[Vec<i64>], tenths: usize) -> BTreeMap<Vec<(usize, i64)>, usize> {
    let n = rows.len();
    let d = rows[0].len();
    let mut counts: BTreeMap<Vec<(usize, i64)>, usize> = BTreeMap::new();
    for row in rows {
        for mask in 1u32..(1 << d) {
            let items: Vec<(usize, i64)> = (0..d).filter(|j| mask >> j & 1 == 1).map(|j| (j, row[j])).collect();
            *counts.entry(items).or_default() += 1;
        }
    }
    counts.retain(|_, c| *c * 10 >= tenths * n);
    counts
}

fn categorical(rows: Vec<Vec<f64>>) -> Dataset {
    let d = rows[0].len();
    let names = (0..d).map(|j| format!("c{j}")).collect();
    Dataset::with_schema(rows, None, names, vec![FeatureKind::Categorical; d]).unwrap()
}

fn compare_apriori(rows: Vec<Vec<f64>>) -> Result<usize, String> {
    let n = rows.len();
    let d = rows[0].len();
    let disc = discretize(&categorical(rows), 4).unwrap();
    let mut checked = 0;
    for tenths in 2..=10 {
        let ms = tenths as f64 / 10.0;
        let mined = apriori(&disc.rows, &disc.binning, ms, d).unwrap();
        let want = brute_force_itemsets(&disc.rows, tenths);
        let got: BTreeMap<Vec<(usize, i64)>, f64> =
            mined.patterns.iter().map(|p| (p.items.clone(), p.support)).collect();
        ensure(got.len() == mined.patterns.len(), "duplicate patterns")?;
        let keys_match = got.keys().eq(want.keys());
        ensure(
            keys_match,
            format!("itemsets differ on {n}x{d} data at min support {ms}"),
        )?;
        for (items, count) in &want {
            let support = got[items];
            ensure(
                (support - *count as f64 / n as f64).abs() <= 1e-12,
                format!("support of {items:?} is {support}"),
            )?;
        }
        checked += 1;
    }
    Ok(checked)
}

fn palex_contract() -> Outcome {
    let mut problems = 0;
    for (n, d) in [(1, 1), (2, 2), (3, 2), (4, 2), (2, 3), (2, 4)] {
        for code in 0u32..(1 << (n * d)) {
            let rows = (0..n)
                .map(|i| (0..d).map(|j| f64::from(code >> (i * d + j) & 1)).collect())
                .collect();
            problems += compare_apriori(rows)?;
        }
    }
    for trial in 0..500u64 {
        let mut r = rng(11_000 + trial);
        let n = r.random_range(1..=12);
        let d = r.random_range(1..=6);
        let levels = r.random_range(1..=4);
        let rows = (0..n)
            .map(|_| (0..d).map(|_| f64::from(r.random_range(0..levels))).collect())
            .collect();
        problems += compare_apriori(rows)?;
    }

    let data = half_moons();
    let cfg = PalexConfig {
        min_support: 0.02,
        ..PalexConfig::default()
    };
    let (ps, _) = mine_patterns(&data, &cfg).unwrap();
    ensure(!ps.is_empty(), "no patterns mined")?;
    let mut r = rng(12_000);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let [x, y, z] = [0; 3].map(|_| uniform_vec(&mut r, 2, -1.5, 2.5));
        let (dxy, dyz, dxz) = (
            palex_distance(&x, &y, &ps),
            palex_distance(&y, &z, &ps),
            palex_distance(&x, &z, &ps),
        );
        ensure(palex_distance(&x, &x, &ps) == 0.0, "d(x, x) != 0")?;
        ensure(
            dxy >= 0.0 && dxy == palex_distance(&y, &x, &ps),
            "asymmetric or negative",
        )?;
        worst = worst.max(dxz - dxy - dyz);
        ensure(
            dxz <= dxy + dyz + 1e-12,
            format!("triangle violated by {:e}", dxz - dxy - dyz),
        )?;
    }
    Ok(format!(
        "{problems} apriori problems match brute force; 10^4 triples over {} patterns, worst triangle slack {worst:.1e}",
        ps.len()
    ))
}

fn black_box() -> Outcome {
    let data = half_moons();
    let start = Instant::now();
    let model = train_mlp(&data, &TrainConfig::default()).unwrap();
    let elapsed = start.elapsed();
    let acc = accuracy(&model, &data).unwrap();
    ensure(acc >= 0.95, format!("training accuracy {acc}"))?;
    ensure(elapsed < Duration::from_secs(10), format!("training took {elapsed:?}"))?;

    let small = Dataset::new(
        data.rows()[..100].to_vec(),
        Some(data.labels().unwrap()[..100].to_vec()),
    )
    .unwrap();
    let mut probe = MlpModel::initialize(2, 16, 4).unwrap();
    let (_, grad) = probe.loss_and_gradient(&small).unwrap();
    let params = probe.params();
    let h = 1e-5;
    let mut worst = 0.0f64;
    let picks: Vec<usize> = (0..5).map(|k| k * (params.len() - 1) / 4).collect();
    for &i in &picks {
        let mut shifted = params.clone();
        shifted[i] = params[i] + h;
        probe.set_params(&shifted).unwrap();
        let up = probe.loss(&small).unwrap();
        shifted[i] = params[i] - h;
        probe.set_params(&shifted).unwrap();
        let down = probe.loss(&small).unwrap();
        let fd = (up - down) / (2.0 * h);
        let rel = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-8);
        worst = worst.max(rel);
    }
    probe.set_params(&params).unwrap();
    ensure(
        worst < 1e-4,
        format!("gradient relative error {worst:e} on params {picks:?}"),
    )?;
    Ok(format!(
        "accuracy {acc:.4} in {:.2} s; gradient relative error {worst:.1e} on params {picks:?}",
        elapsed.as_secs_f64()
    ))
}

fn locality(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_locality"))
        .args(args)
        .env_remove("LOCALITY_CONFIG")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(
        out.status.success(),
        format!("locality {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)),
    )
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn darkness(fill: &str) -> f64 {
    let inner = fill.strip_prefix("rgb(").and_then(|s| s.strip_suffix(')')).unwrap();
    let c: Vec<f64> = inner
        .split(',')
        .map(|s| s.trim_end_matches('%').parse::<f64>().unwrap() / 100.0)
        .collect();
    1.0 - (0.2126 * c[0] + 0.7152 * c[1] + 0.0722 * c[2])
}

fn figure_reproduction() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |name: &str| dir.path().join(name);
    let start = Instant::now();
    locality(&["gen-data", "--out", p(&path("data.csv"))])?;
    locality(&["train", "--data", p(&path("data.csv")), "--out", p(&path("model.txt"))])?;
    locality(&[
        "compare",
        "--model",
        p(&path("model.txt")),
        "--data",
        p(&path("data.csv")),
        "--index",
        "0",
        "--out-panel",
        p(&path("panel.svg")),
        "--out-table",
        p(&path("table.csv")),
        "--out-neighbourhoods",
        p(&path("hoods")),
    ])?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), format!("pipeline took {elapsed:?}"))?;

    let svg = std::fs::read_to_string(path("panel.svg")).map_err(|e| e.to_string())?;
    let doc = roxmltree::Document::parse(&svg).map_err(|e| format!("malformed SVG: {e}"))?;
    let panels: Vec<_> = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("panel"))
        .collect();
    ensure(panels.len() == 6, format!("{} panels", panels.len()))?;

    let stars: Vec<&str> = panels
        .iter()
        .map(|g| {
            g.descendants()
                .find(|n| n.attribute("class") == Some("star"))
                .and_then(|n| n.attribute("d"))
                .unwrap_or("")
        })
        .collect();
    ensure(
        !stars[0].is_empty() && stars.iter().all(|s| *s == stars[0]),
        "star differs between panels",
    )?;

    let mut weighted_panels = 0;
    for g in &panels {
        let mut points: Vec<(f64, f64)> = g
            .descendants()
            .filter(|n| n.attribute("class") == Some("point"))
            .filter_map(|n| {
                Some((
                    n.attribute("data-weight")?.parse().ok()?,
                    darkness(n.attribute("fill")?),
                ))
            })
            .collect();
        if points.is_empty() {
            continue;
        }
        weighted_panels += 1;
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in points.windows(2) {
            ensure(
                w[0].0 == w[1].0 || w[1].1 >= w[0].1,
                format!("weight {} drawn darker than weight {}", w[0].0, w[1].0),
            )?;
        }
    }
    ensure(weighted_panels >= 3, format!("only {weighted_panels} weighted panels"))?;

    let data_text = std::fs::read_to_string(path("data.csv")).map_err(|e| e.to_string())?;
    let data = parse_csv(&data_text, "data.csv").map_err(|e| e.to_string())?;
    let z_e = data.row(0).to_vec();
    let hood_text = std::fs::read_to_string(path("hoods").join("kernelshap.csv")).map_err(|e| e.to_string())?;
    let mut count = 0;
    for line in hood_text.lines().skip(1) {
        let x: Vec<f64> = line.split(',').take(2).map(|v| v.parse().unwrap()).collect();
        let hybrid = data
            .rows()
            .iter()
            .any(|row| (0..2).all(|j| x[j] == z_e[j] || x[j] == row[j]));
        ensure(
            hybrid,
            format!("point {x:?} is not a hybrid of the instance and a training row"),
        )?;
        count += 1;
    }
    ensure(count > 0, "empty KernelSHAP neighbourhood")?;
    Ok(format!(
        "6 panels, shared star, {weighted_panels} weighted panels ordered, {count} hybrid KernelSHAP points, {:.2} s",
        elapsed.as_secs_f64()
    ))
}

fn full_pipeline(dir: &Path) -> Result<(), String> {
    let f = |name: &str| dir.join(name);
    let (data, model) = (f("data.csv"), f("model.txt"));
    locality(&["gen-data", "--n", "300", "--seed", "5", "--out", p(&data)])?;
    locality(&[
        "train",
        "--data",
        p(&data),
        "--out",
        p(&model),
        "--epochs",
        "500",
        "--seed",
        "2",
    ])?;
    let target = ["--model", p(&model), "--data", p(&data), "--index", "7", "--seed", "11"];
    for method in ["lime", "gsls", "lore", "leap", "kernelshap", "palex"] {
        let out = f(&format!("{method}.json"));
        let plot = f(&format!("{method}.svg"));
        let hood = f(&format!("{method}.csv"));
        let meta = f(&format!("{method}.meta.json"));
        let mut args = vec!["explain", "--method", method];
        args.extend(target);
        args.extend([
            "--out",
            p(&out),
            "--plot",
            p(&plot),
            "--out-neighbourhood",
            p(&hood),
            "--out-neighbourhood-meta",
            p(&meta),
        ]);
        let dump = f("problem.csv");
        if method == "kernelshap" {
            args.extend(["--dump-problem", p(&dump)]);
        }
        locality(&args)?;
    }
    let mut args = vec!["compare"];
    args.extend(target);
    let (panel, table, rules, bars, hoods) = (
        f("panel.svg"),
        f("table.csv"),
        f("rules.txt"),
        f("bars.svg"),
        f("hoods"),
    );
    args.extend([
        "--out-panel",
        p(&panel),
        "--out-table",
        p(&table),
        "--out-rules",
        p(&rules),
        "--out-bars",
        p(&bars),
        "--out-neighbourhoods",
        p(&hoods),
    ]);
    locality(&args)?;
    let exact = f("exact.json");
    let mut args = vec!["shapley-exact"];
    args.extend(target);
    args.extend(["--out", p(&exact)]);
    locality(&args)
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    full_pipeline(a.path())?;
    full_pipeline(b.path())?;
    let (fa, fb) = (files_under(a.path()), files_under(b.path()));
    ensure(fa == fb, "the two runs wrote different file sets")?;
    for rel in &fa {
        let same = std::fs::read(a.path().join(rel)).unwrap() == std::fs::read(b.path().join(rel)).unwrap();
        ensure(same, format!("{} differs between runs", rel.display()))?;
    }
    Ok(format!("{} files byte-identical across two runs", fa.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("shapley oracle equivalence", shapley_oracle),
        ("shapley axioms", shapley_axioms),
        ("linear game closed form", linear_closed_form),
        ("lime contract", lime_contract),
        ("gsls contract", gsls_contract),
        ("lore contract", lore_contract),
        ("leap contract", leap_contract),
        ("palex and apriori", palex_contract),
        ("black box", black_box),
        ("comparison figure", figure_reproduction),
        ("determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
