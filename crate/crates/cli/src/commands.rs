use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use locality_core::blackbox::{accuracy, decision_grid, train_mlp, Bounds2, MlpModel, TrainConfig};
use locality_core::data::{format_real, generate_half_moons, load_csv, save_csv, HalfMoons};
use locality_core::neighbourhood::{neighbourhood_to_csv, write_neighbourhood};
use locality_core::pipeline::{exact_explanation, resolve_background, run as run_pipeline, Run, SubsetMode};
use locality_core::render::{render_attribution_bars, render_neighbourhood_panels, shared_bounds, Panel};
use locality_core::shapley::{ShapleyProblem, SubsetSource};
use locality_core::{BlackBox, Dataset, Explanation, Instance, StrategyConfig, StrategyId};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::{CompareArgs, ExplainArgs, GenDataArgs, ShapleyExactArgs, Target, TrainArgs};

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn gen_data(a: GenDataArgs) -> Result<()> {
    let data = generate_half_moons(&HalfMoons {
        n: a.n,
        noise: a.noise,
        seed: a.seed,
    })?;
    save_csv(&data, &a.out)?;
    Ok(())
}

pub fn train(a: TrainArgs) -> Result<()> {
    let data = load_csv(&a.data)?;
    let cfg = TrainConfig {
        hidden: a.hidden,
        epochs: a.epochs,
        learning_rate: a.learning_rate,
        seed: a.seed,
    };
    let model = train_mlp(&data, &cfg)?;
    model.save(&a.out)?;
    println!("training accuracy: {:.4}", accuracy(&model, &data)?);
    Ok(())
}

struct Loaded {
    model: MlpModel,
    data: Dataset,
    z_e: Instance,
    config: RunConfig,
    seed: u64,
}

fn load(t: &Target) -> Result<Loaded> {
    let model = MlpModel::load(&t.model)?;
    let data = load_csv(&t.data)?;
    if model.n_features() != data.n_features() {
        bail!(
            "dimension mismatch: model takes {} features, data has {}",
            model.n_features(),
            data.n_features()
        );
    }
    let z_e = data.instance(t.index)?;
    let config = RunConfig::load(t.config.as_deref())?;
    let seed = config.seed(t.seed);
    Ok(Loaded {
        model,
        data,
        z_e,
        config,
        seed,
    })
}

fn stamp(e: &Explanation) -> String {
    format!(
        "method={} seed={} config_digest={} tool={}",
        e.method, e.seed, e.config_digest, e.tool_version
    )
}

fn with_comment(svg: String, comment: &str) -> String {
    svg.replacen("<svg ", &format!("<!-- {} -->\n<svg ", comment.replace("--", "- -")), 1)
}

fn title(id: StrategyId) -> &'static str {
    match id {
        StrategyId::Lime => "LIME",
        StrategyId::Gsls => "GSLS",
        StrategyId::Lore => "LORE",
        StrategyId::Leap => "LEAP",
        StrategyId::Kernelshap => "KernelSHAP",
        StrategyId::Palex => "PALEX",
    }
}

fn pair(p: &[f64]) -> [f64; 2] {
    [p[0], p[1]]
}

/// Panels over shared bounds, each with the black box's decision regions.
fn render_panels(l: &Loaded, runs: &[Run], cols: usize) -> Result<String> {
    if l.data.n_features() != 2 {
        bail!("plots need 2-D data, got {} features", l.data.n_features());
    }
    let data_labels: Vec<u8> = match l.data.labels() {
        Some(labels) => labels.to_vec(),
        None => l.data.rows().iter().map(|r| l.model.predict_label(r)).collect(),
    };
    let mut panels: Vec<Panel> = runs
        .iter()
        .map(|r| Panel {
            title: title(r.explanation.method).to_string(),
            grid: None,
            data: l.data.rows().iter().map(|p| pair(p)).collect(),
            data_labels: data_labels.clone(),
            points: r.neighbourhood.points.iter().map(|p| pair(p)).collect(),
            weights: r.neighbourhood.weights.clone(),
            star: pair(&l.z_e),
        })
        .collect();
    let bounds: Bounds2 = shared_bounds(&panels).context("nothing to plot")?;
    let grid = decision_grid(&l.model, &bounds, l.config.render.resolution)?;
    for p in &mut panels {
        p.grid = Some(grid.clone());
    }
    let rows = panels.len().div_ceil(cols);
    Ok(render_neighbourhood_panels(&panels, rows, cols, &bounds)?)
}

pub fn explain(a: ExplainArgs) -> Result<()> {
    let id: StrategyId = a.method.parse()?;
    let l = load(&a.target)?;
    let strategy = l.config.strategy(id);
    let surrogate = l.config.surrogate(id, a.surrogate);
    let result = run_pipeline(&l.model, &l.data, &l.z_e, &strategy, &surrogate, l.seed)?;
    let e = &result.explanation;

    if let Some(path) = &a.dump_problem {
        let StrategyConfig::Kernelshap(cfg) = &strategy else {
            bail!("--dump-problem only applies to kernelshap, not {id}");
        };
        let sub_seed = id.sub_seed(l.seed);
        let bg = resolve_background(&l.data, cfg.background, sub_seed)?;
        let source = match cfg.mode {
            SubsetMode::Full => SubsetSource::Full,
            SubsetMode::Sampled { m } => SubsetSource::Sampled { m, seed: sub_seed },
        };
        write(path, &ShapleyProblem::build(&l.model, &l.z_e, &bg, source)?.to_csv())?;
    }
    if let Some(csv) = &a.out_neighbourhood {
        match &a.out_neighbourhood_meta {
            Some(meta) => {
                let config = serde_json::to_value(&strategy)?;
                write_neighbourhood(&result.neighbourhood, &config, csv, meta)?;
            }
            None => write(csv, &neighbourhood_to_csv(&result.neighbourhood))?,
        }
    }
    if let Some(path) = &a.plot {
        let svg = render_panels(&l, std::slice::from_ref(&result), 1)?;
        write(path, &with_comment(svg, &stamp(e)))?;
    }
    for w in &e.warnings {
        eprintln!("warning: {w}");
    }
    write(&a.out, &e.to_json())
}

/// Header `method,feature_index,attribution,base_value,fidelity`, then seed
/// and config digest to identify the run; one row per feature of every method
/// with an attribution.
pub fn attribution_table(explanations: &[Explanation]) -> String {
    let mut out = String::from("method,feature_index,attribution,base_value,fidelity,seed,config_digest\n");
    for e in explanations {
        let Some(attr) = &e.attribution else { continue };
        let base = e.base_value.map(format_real).unwrap_or_default();
        for (j, v) in attr.iter().enumerate() {
            writeln!(
                out,
                "{},{j},{},{base},{},{},{}",
                e.method,
                format_real(*v),
                format_real(e.fidelity),
                e.seed,
                e.config_digest
            )
            .unwrap();
        }
    }
    out
}

fn rules_listing(explanations: &[Explanation]) -> String {
    let mut out = String::new();
    for e in explanations {
        let Some(tree) = &e.tree else { continue };
        writeln!(out, "# {}", stamp(e)).unwrap();
        writeln!(out, "# fidelity {}", format_real(e.fidelity)).unwrap();
        out.push_str(tree);
        out.push('\n');
    }
    out
}

pub fn compare(a: CompareArgs) -> Result<()> {
    let ids = a
        .methods
        .iter()
        .map(|m| m.trim().parse::<StrategyId>())
        .collect::<Result<Vec<_>, _>>()?;
    if ids.is_empty() {
        bail!("no methods given");
    }
    let l = load(&a.target)?;
    let runs = ids
        .par_iter()
        .map(|&id| {
            let strategy = l.config.strategy(id);
            let surrogate = l.config.surrogate(id, None);
            run_pipeline(&l.model, &l.data, &l.z_e, &strategy, &surrogate, l.seed)
                .with_context(|| format!("method {id}"))
        })
        .collect::<Result<Vec<Run>>>()?;
    let explanations: Vec<Explanation> = runs.iter().map(|r| r.explanation.clone()).collect();

    let stamp = format!(
        "seed={} tool={} digests={}",
        l.seed,
        locality_core::TOOL_VERSION,
        explanations
            .iter()
            .map(|e| format!("{}:{}", e.method, e.config_digest))
            .collect::<Vec<_>>()
            .join(",")
    );
    let svg = render_panels(&l, &runs, 3)?;
    write(&a.out_panel, &with_comment(svg, &stamp))?;
    write(&a.out_table, &attribution_table(&explanations))?;
    if let Some(path) = &a.out_rules {
        write(path, &rules_listing(&explanations))?;
    } else if explanations.iter().any(|e| e.tree.is_some()) {
        eprintln!("note: tree surrogate rules are not written without --out-rules");
    }
    if let Some(path) = &a.out_bars {
        let svg = render_attribution_bars(&explanations, &l.data.feature_names())?;
        write(path, &with_comment(svg, &stamp))?;
    }
    if let Some(dir) = &a.out_neighbourhoods {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for r in &runs {
            write(
                &dir.join(format!("{}.csv", r.explanation.method)),
                &neighbourhood_to_csv(&r.neighbourhood),
            )?;
        }
    }
    for e in &explanations {
        for w in &e.warnings {
            eprintln!("warning: {}: {w}", e.method);
        }
    }
    Ok(())
}

pub fn shapley_exact(a: ShapleyExactArgs) -> Result<()> {
    let l = load(&a.target)?;
    let e = exact_explanation(&l.model, &l.data, &l.z_e, l.config.exact.background, l.seed)?;
    write(&a.out, &e.to_json())
}

#[cfg(test)]
mod tests {
    use super::*;
    use locality_core::TOOL_VERSION;

    fn e(method: StrategyId, attribution: Option<Vec<f64>>, tree: Option<&str>) -> Explanation {
        Explanation {
            method,
            surrogate: "x".into(),
            base_value: attribution.as_ref().map(|_| 0.25),
            attribution,
            tree: tree.map(String::from),
            fidelity: 0.5,
            seed: 3,
            config_digest: "abc".into(),
            tool_version: TOOL_VERSION.into(),
            warnings: vec![],
        }
    }

    #[test]
    fn table_has_one_row_per_feature_of_linear_methods() {
        let table = attribution_table(&[
            e(StrategyId::Lime, Some(vec![1.5, -2.0]), None),
            e(StrategyId::Lore, None, Some("-> 1\n")),
        ]);
        assert_eq!(
            table,
            "method,feature_index,attribution,base_value,fidelity,seed,config_digest\n\
             lime,0,1.5,0.25,0.5,3,abc\n\
             lime,1,-2.0,0.25,0.5,3,abc\n"
        );
    }

    #[test]
    fn rules_listing_covers_tree_methods() {
        let text = rules_listing(&[
            e(StrategyId::Lime, Some(vec![1.0]), None),
            e(StrategyId::Gsls, None, Some("-> 0\n")),
        ]);
        assert!(text.starts_with("# method=gsls seed=3"));
        assert!(text.contains("-> 0"));
        assert!(!text.contains("lime"));
    }
}
