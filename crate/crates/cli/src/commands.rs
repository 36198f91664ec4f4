use std::path::{Path, PathBuf};

use log::{info, warn};
use serde_json::json;

use mlcart::cart::{
    cp_grid, cp_sweep, cross_validate_on, export_tree, grow_tree, import_tree_json, prune, ExportFormat,
    GrowControls, TrainingData, Tree,
};
use mlcart::dataset::{load_dataset, validate_hierarchy, ColumnSchema, DataLevel, Dataset, Role, Scale, Schema};
use mlcart::experiment::{
    generate_synthetic, run_experiment, tree_select_predictors, write_reports, ModelName, SyntheticSpec,
    TreeSelection,
};
use mlcart::manifest::RunManifest;
use mlcart::metrics::{
    accuracy, auc, brier_score, confusion_matrix, error_rate, roc_curve, sensitivity, specificity, write_roc_csv,
    RocAxes,
};
use mlcart::par;
use mlcart::preprocess::{
    aggregate_means, dichotomize_response, merge_parent_student, select_variable_set, AggregateTarget,
    MergePairSpec, VariableSet,
};
use mlcart::regression::{
    coefficient_table, encode_design, encode_intercept_only, fit_logistic_irls, fit_random_intercept_logistic,
    GroupIds, GroupLevel, IrlsOptions, MixedSpec,
};

use crate::cli::{
    Cli, Command, CpSweepArgs, CvArgs, DataArgs, EvaluateArgs, ExperimentArgs, ExportArgs, FitArgs, FitGlmmArgs,
    GenerateArgs, GrowArgs, GrowFlags, PredictArgs, PredictorArgs, PreprocessArgs, PruneArgs, TreeArg,
};
use crate::config::RunConfig;
use crate::Failure;

type Res<T> = std::result::Result<T, Failure>;

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    jobs: Option<usize>,
}

impl Ctx {
    fn write(&self, name: &str, contents: &str) -> Res<String> {
        let path = self.out.join(name);
        std::fs::write(&path, contents).map_err(|e| Failure::Data(format!("cannot write {}: {e}", path.display())))?;
        Ok(name.to_string())
    }

    fn manifest(&self, command: &str, settings: serde_json::Value, seed: u64) -> Res<RunManifest> {
        Ok(RunManifest::new(command, &settings, seed)?)
    }

    fn finish(&self, mut m: RunManifest, outputs: Vec<String>) -> Res<()> {
        m.outputs = outputs;
        m.write(&self.out)?;
        Ok(())
    }
}

pub fn run(cli: Cli) -> Res<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out)
        .map_err(|e| Failure::Data(format!("cannot create output directory {}: {e}", out.display())))?;
    if cli.jobs == Some(0) {
        return Err(Failure::Usage("--jobs must be at least 1".into()));
    }
    let ctx = Ctx { cfg, out, jobs: cli.jobs };
    par::with_jobs(ctx.jobs, || match cli.command {
        Command::Generate(a) => generate(&ctx, a),
        Command::Preprocess(a) => preprocess(&ctx, a),
        Command::Grow(a) => grow(&ctx, a),
        Command::Cv(a) => cv(&ctx, a),
        Command::Prune(a) => prune_cmd(&ctx, a),
        Command::Predict(a) => predict(&ctx, a),
        Command::SelectVars(a) => select_vars(&ctx, a),
        Command::FitGlm(a) => fit_glm(&ctx, a),
        Command::FitGlmm(a) => fit_glmm(&ctx, a),
        Command::Evaluate(a) => evaluate(&ctx, a),
        Command::Experiment(a) => experiment(&ctx, a),
        Command::CpSweep(a) => sweep(&ctx, a),
        Command::ExportTree(a) => export(&ctx, a),
    })
}

fn data_paths(ctx: &Ctx, args: &DataArgs) -> Res<(PathBuf, PathBuf)> {
    let data = args
        .data
        .clone()
        .or_else(|| ctx.cfg.dataset.clone())
        .ok_or_else(|| Failure::Usage("no dataset given (--data or `dataset` in the config)".into()))?;
    let schema = args
        .schema
        .clone()
        .or_else(|| ctx.cfg.schema.clone())
        .ok_or_else(|| Failure::Usage("no schema given (--schema or `schema` in the config)".into()))?;
    Ok((data, schema))
}

fn load(ctx: &Ctx, args: &DataArgs) -> Res<(Dataset, Vec<PathBuf>)> {
    let (data, schema) = data_paths(ctx, args)?;
    let s = Schema::load(&schema)?;
    let ds = load_dataset(&data, &s)?;
    info!("loaded {} rows, {} columns from {}", ds.n_rows(), ds.n_cols(), data.display());
    Ok((ds, vec![data, schema]))
}

fn add_inputs(m: &mut RunManifest, inputs: &[PathBuf]) -> Res<()> {
    for p in inputs {
        m.add_input(p)?;
    }
    Ok(())
}

fn predictor_list(ctx: &Ctx, ds: &Dataset, args: &PredictorArgs) -> Res<Vec<String>> {
    if !args.predictors.is_empty() {
        return Ok(args.predictors.clone());
    }
    let edu = if args.edu.is_empty() { ctx.cfg.edu_list.clone() } else { args.edu.clone() };
    let set = args.set.clone().or_else(|| ctx.cfg.variable_set.clone());
    match set {
        Some(name) => {
            let set: VariableSet = name.parse().map_err(|e: mlcart::Error| Failure::Usage(e.to_string()))?;
            Ok(select_variable_set(ds, set, &edu)?)
        }
        None if !ctx.cfg.predictors.is_empty() => Ok(ctx.cfg.predictors.clone()),
        None => Err(Failure::Usage(
            "no predictors given (--predictors, --set, or `predictors`/`variable_set` in the config)".into(),
        )),
    }
}

fn grow_controls(ctx: &Ctx, f: &GrowFlags) -> GrowControls {
    let mut c = ctx.cfg.grow.clone();
    if let Some(v) = f.cp {
        c.cp = v;
    }
    if let Some(v) = f.min_split {
        c.min_split = v;
        if f.min_bucket.is_none() {
            c = c.with_min_split(v);
        }
    }
    if let Some(v) = f.min_bucket {
        c.min_bucket = v;
    }
    if let Some(v) = f.max_depth {
        c.max_depth = v;
    }
    if let Some(v) = f.max_surrogate {
        c.max_surrogate = v;
    }
    if let Some(v) = f.seed {
        c.rng_seed = v;
    }
    c
}

fn cp_table_csv(tree: &Tree) -> String {
    let mut s = String::from("cp,n_splits,rel_error,x_error,x_std\n");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in &tree.cp_table {
        s.push_str(&format!("{},{},{},{},{}\n", r.cp, r.n_splits, r.rel_error, opt(r.x_error), opt(r.x_std)));
    }
    s
}

fn read_tree(arg: &TreeArg) -> Res<Tree> {
    let text = std::fs::read_to_string(&arg.tree)
        .map_err(|e| Failure::Data(format!("cannot read tree {}: {e}", arg.tree.display())))?;
    Ok(import_tree_json(&text)?)
}

fn parse_axes(s: Option<&str>) -> Res<RocAxes> {
    match s.unwrap_or("fpr-tpr") {
        "fpr-tpr" => Ok(RocAxes::FprTpr),
        "specificity-sensitivity" => Ok(RocAxes::SpecificitySensitivity),
        other => Err(Failure::Usage(format!(
            "unknown ROC axes `{other}` (expected fpr-tpr or specificity-sensitivity)"
        ))),
    }
}

fn generate(ctx: &Ctx, a: GenerateArgs) -> Res<()> {
    let mut spec = ctx.cfg.synthetic.clone();
    if let Some(v) = a.n_students {
        spec.n_students = v;
    }
    if let Some(v) = a.n_schools {
        spec.n_schools = v;
    }
    if let Some(v) = a.classes_per_school {
        spec.classes_per_school = v;
    }
    if let Some(v) = a.target_rate {
        spec.target_rate = v;
    }
    if let Some(v) = a.seed {
        spec.seed = v;
    }
    if a.null {
        let null = SyntheticSpec::null(spec.n_students, spec.seed);
        spec.student_effect = null.student_effect;
        spec.class_effect = null.class_effect;
        spec.school_effect = null.school_effect;
        spec.sd_class = null.sd_class;
        spec.sd_school = null.sd_school;
    }
    let data = generate_synthetic(&spec)?;
    let m = ctx.manifest("generate", serde_json::to_value(&spec).map_err(|e| Failure::Data(e.to_string()))?, spec.seed)?;
    let mut outputs = Vec::new();
    data.dataset.save_csv(ctx.out.join("data.csv"))?;
    outputs.push("data.csv".into());
    data.dataset.schema().save(ctx.out.join("schema.toml"))?;
    outputs.push("schema.toml".into());
    let truth = serde_json::to_string_pretty(&data.truth).map_err(|e| Failure::Data(e.to_string()))?;
    outputs.push(ctx.write("truth.json", &(truth + "\n"))?);
    println!(
        "wrote {} students ({} positive) to {}",
        data.dataset.n_rows(),
        (data.truth.positive_rate * data.dataset.n_rows() as f64).round(),
        ctx.out.display()
    );
    ctx.finish(m, outputs)
}

fn parse_merge(s: &str) -> Res<MergePairSpec> {
    let parts: Vec<&str> = s.split(':').collect();
    let [p, st, o] = parts[..] else {
        return Err(Failure::Usage(format!("--merge expects PARENT:STUDENT:OUTPUT, got `{s}`")));
    };
    Ok(MergePairSpec {
        parent_column: p.into(),
        student_column: st.into(),
        output_column: o.into(),
    })
}

fn parse_target(s: &str) -> Res<AggregateTarget> {
    match s {
        "class" => Ok(AggregateTarget::Class),
        "school" => Ok(AggregateTarget::School),
        other => Err(Failure::Usage(format!("unknown aggregation level `{other}` (class or school)"))),
    }
}

fn preprocess(ctx: &Ctx, a: PreprocessArgs) -> Res<()> {
    let (mut ds, inputs) = load(ctx, &a.data)?;
    let mut merges = ctx.cfg.merge.clone();
    for m in &a.merges {
        merges.push(parse_merge(m)?);
    }
    let response = match (&a.response_source, &a.positive) {
        (Some(c), Some(p)) => Some((c.clone(), p.clone())),
        (None, None) => ctx.cfg.response.as_ref().map(|r| (r.column.clone(), r.positive_level.clone())),
        _ => return Err(Failure::Usage("--response-source and --positive go together".into())),
    };
    let aggregates = if a.aggregates.is_empty() { ctx.cfg.aggregate.clone() } else { a.aggregates.clone() };
    let targets: Vec<AggregateTarget> = aggregates.iter().map(|s| parse_target(s)).collect::<Res<_>>()?;

    for m in &merges {
        ds = merge_parent_student(&ds, m)?;
    }
    let mut report = None;
    if let Some((col, level)) = &response {
        let (d, r) = dichotomize_response(&ds, col, level)?;
        if r.dropped_rows > 0 {
            warn!("dropped {} rows with a missing response", r.dropped_rows);
        }
        report = Some(r);
        ds = d;
    }
    for t in &targets {
        ds = aggregate_means(&ds, *t)?;
    }
    let validation = validate_hierarchy(&ds);
    if !validation.ok {
        warn!("hierarchy check found {} issues (see validation.json)", validation.issues.len());
    }

    let settings = json!({
        "merge": merges,
        "response": response.as_ref().map(|(c, p)| json!({"column": c, "positive_level": p})),
        "aggregate": aggregates,
    });
    let mut m = ctx.manifest("preprocess", settings, 0)?;
    add_inputs(&mut m, &inputs)?;
    m.details = json!({"dichotomize": report, "rows": ds.n_rows(), "hierarchy_ok": validation.ok});
    ds.save_csv(ctx.out.join("processed.csv"))?;
    ds.schema().save(ctx.out.join("processed.schema.toml"))?;
    let v = serde_json::to_string_pretty(&validation).map_err(|e| Failure::Data(e.to_string()))?;
    let outputs = vec![
        "processed.csv".to_string(),
        "processed.schema.toml".to_string(),
        ctx.write("validation.json", &(v + "\n"))?,
    ];
    println!("wrote {} rows to {}", ds.n_rows(), ctx.out.join("processed.csv").display());
    ctx.finish(m, outputs)
}

fn grow(ctx: &Ctx, a: GrowArgs) -> Res<()> {
    let (ds, inputs) = load(ctx, &a.data)?;
    let preds = predictor_list(ctx, &ds, &a.predictors)?;
    let controls = grow_controls(ctx, &a.grow);
    let tree = grow_tree(&ds, &preds, &controls)?;
    let mut m = ctx.manifest("grow", json!({"predictors": preds, "grow": controls}), controls.rng_seed)?;
    add_inputs(&mut m, &inputs)?;
    let text = export_tree(&tree, ExportFormat::Text);
    print!("{text}");
    let outputs = vec![
        ctx.write("tree.json", &export_tree(&tree, ExportFormat::Json))?,
        ctx.write("tree.txt", &text)?,
        ctx.write("cp_table.csv", &cp_table_csv(&tree))?,
    ];
    ctx.finish(m, outputs)
}

fn cv(ctx: &Ctx, a: CvArgs) -> Res<()> {
    let (ds, inputs) = load(ctx, &a.data)?;
    let preds = predictor_list(ctx, &ds, &a.predictors)?;
    let mut controls = grow_controls(ctx, &a.grow);
    if let Some(k) = a.folds {
        controls.cv_folds = k;
    }
    let data = TrainingData::from_dataset(&ds, &preds)?;
    let res = cross_validate_on(&data, &controls, a.one_se)?;
    let selected = res.selected_tree();
    let mut m = ctx.manifest(
        "cv",
        json!({"predictors": preds, "grow": controls, "one_se": a.one_se}),
        controls.rng_seed,
    )?;
    add_inputs(&mut m, &inputs)?;
    m.details = json!({"selected_row": res.selected_row, "selected_cp": res.selected_cp, "fold_seed": res.folds.seed});
    print!("{}", cp_table_csv(&res.tree));
    println!("selected cp {} ({} splits)", res.selected_cp, selected.n_splits());
    let summary = json!({
        "selected_row": res.selected_row,
        "selected_cp": res.selected_cp,
        "one_se": res.one_se,
        "n_splits": selected.n_splits(),
    });
    let outputs = vec![
        ctx.write("tree.json", &export_tree(&res.tree, ExportFormat::Json))?,
        ctx.write("cp_table.csv", &cp_table_csv(&res.tree))?,
        ctx.write("selected_tree.json", &export_tree(&selected, ExportFormat::Json))?,
        ctx.write("selected_tree.txt", &export_tree(&selected, ExportFormat::Text))?,
        ctx.write("cv.json", &(serde_json::to_string_pretty(&summary).expect("json") + "\n"))?,
    ];
    ctx.finish(m, outputs)
}

fn prune_cmd(ctx: &Ctx, a: PruneArgs) -> Res<()> {
    if !(a.cp >= 0.0) {
        return Err(Failure::Usage("--cp must be non-negative".into()));
    }
    let tree = read_tree(&a.tree)?;
    let pruned = prune(&tree, a.cp);
    let mut m = ctx.manifest("prune", json!({"cp": a.cp}), 0)?;
    m.add_input(&a.tree.tree)?;
    let text = export_tree(&pruned, ExportFormat::Text);
    print!("{text}");
    let outputs = vec![
        ctx.write("tree.json", &export_tree(&pruned, ExportFormat::Json))?,
        ctx.write("tree.txt", &text)?,
    ];
    ctx.finish(m, outputs)
}

/// Schema for a file whose header is all we know: the tree's variables get
/// their training scales, everything else is read as excluded text.
fn schema_from_header(path: &Path, tree: &Tree) -> Res<Schema> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    let header = rdr.headers().map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    let columns = header
        .iter()
        .map(|name| match tree.variables.iter().find(|v| v.name == name) {
            Some(v) => ColumnSchema::predictor(name, v.scale.clone(), DataLevel::Student),
            None => ColumnSchema::new(name, Scale::Text, DataLevel::Student, Role::Excluded),
        })
        .collect();
    Ok(Schema::new(columns)?)
}

fn predict(ctx: &Ctx, a: PredictArgs) -> Res<()> {
    let tree = read_tree(&a.tree)?;
    let data = a
        .data
        .data
        .clone()
        .or_else(|| ctx.cfg.dataset.clone())
        .ok_or_else(|| Failure::Usage("no dataset given (--data)".into()))?;
    let mut inputs = vec![a.tree.tree.clone(), data.clone()];
    let schema = match a.data.schema.clone().or_else(|| ctx.cfg.schema.clone()) {
        Some(p) => {
            inputs.push(p.clone());
            Schema::load(&p)?
        }
        None => schema_from_header(&data, &tree)?,
    };
    let ds = load_dataset(&data, &schema)?;
    let preds = tree.predict_dataset(&ds)?;
    let truth = ds.response().ok().map(|(_, y)| y);
    let ids = ds.id_column(DataLevel::Student);

    let mut s = String::from("row,id,leaf,class,prob");
    if truth.is_some() {
        s.push_str(",truth");
    }
    s.push('\n');
    for (r, p) in preds.iter().enumerate() {
        let id = ids.and_then(|c| c[r].clone()).unwrap_or_default();
        s.push_str(&format!("{r},{id},{},{},{}", p.leaf, p.class, p.prob));
        if let Some(y) = &truth {
            s.push_str(&format!(",{}", y[r]));
        }
        s.push('\n');
    }
    let mut m = ctx.manifest("predict", json!({}), 0)?;
    add_inputs(&mut m, &inputs)?;
    println!("predicted {} rows", preds.len());
    let outputs = vec![ctx.write("predictions.csv", &s)?];
    ctx.finish(m, outputs)
}

fn select_vars(ctx: &Ctx, a: TreeArg) -> Res<()> {
    let tree = read_tree(&a)?;
    let sel = tree_select_predictors(&tree);
    if sel.fallback {
        warn!("tree has no splits; the selection is empty (intercept-only fallback)");
    }
    println!("fixed: {}", sel.spec.fixed_predictors.join(","));
    println!("slope candidates: {}", sel.spec.slope_candidates.join(","));
    let mut m = ctx.manifest("select-vars", json!({}), 0)?;
    m.add_input(&a.tree)?;
    let text = serde_json::to_string_pretty(&sel).expect("json") + "\n";
    let outputs = vec![ctx.write("selection.json", &text)?];
    ctx.finish(m, outputs)
}

/// Predictors (possibly empty) and slope candidates for a regression fit.
fn fit_predictors(ctx: &Ctx, ds: &Dataset, a: &FitArgs) -> Res<(Vec<String>, Vec<String>)> {
    if let Some(p) = &a.selection {
        let text = std::fs::read_to_string(p)
            .map_err(|e| Failure::Data(format!("cannot read selection {}: {e}", p.display())))?;
        let sel: TreeSelection =
            serde_json::from_str(&text).map_err(|e| Failure::Data(format!("bad selection file: {e}")))?;
        return Ok((sel.spec.fixed_predictors, sel.spec.slope_candidates));
    }
    Ok((predictor_list(ctx, ds, &a.predictors)?, Vec::new()))
}

fn coefficients_csv(rows: &[(String, f64, String)]) -> String {
    let mut s = String::from("term,estimate,encoding\n");
    for (name, b, enc) in rows {
        s.push_str(&format!("{name},{b},{enc}\n"));
    }
    s
}

fn irls_options(ctx: &Ctx) -> IrlsOptions {
    ctx.cfg.experiment.irls
}

fn fit_glm(ctx: &Ctx, a: FitArgs) -> Res<()> {
    let (ds, mut inputs) = load(ctx, &a.data)?;
    let (preds, _) = fit_predictors(ctx, &ds, &a)?;
    if let Some(p) = &a.selection {
        inputs.push(p.clone());
    }
    let design = if preds.is_empty() {
        warn!("no predictors; fitting an intercept-only model");
        encode_intercept_only(&ds)?
    } else {
        encode_design(&ds, &preds)?
    };
    let fit = fit_logistic_irls(&design, &design.response, &irls_options(ctx))?;
    if !fit.converged {
        warn!("IRLS did not converge (max score {:.3e})", fit.max_score);
    }
    let table = coefficient_table(&fit.map, &fit.coefficients);
    print!("{}", coefficients_csv(&table));
    println!("deviance {} on {} observations", fit.deviance, fit.n_obs);
    let mut m = ctx.manifest("fit-glm", json!({"predictors": preds, "irls": irls_options(ctx)}), 0)?;
    add_inputs(&mut m, &inputs)?;
    m.details = json!({"converged": fit.converged, "separation": fit.separation, "dropped_columns": design.dropped});
    let outputs = vec![
        ctx.write("glm.json", &(serde_json::to_string_pretty(&fit).expect("json") + "\n"))?,
        ctx.write("coefficients.csv", &coefficients_csv(&table))?,
    ];
    ctx.finish(m, outputs)
}

fn fit_glmm(ctx: &Ctx, a: FitGlmmArgs) -> Res<()> {
    let (ds, mut inputs) = load(ctx, &a.fit.data)?;
    let (preds, slopes) = fit_predictors(ctx, &ds, &a.fit)?;
    if let Some(p) = &a.fit.selection {
        inputs.push(p.clone());
    }
    let groups = if a.groups.is_empty() {
        vec![GroupLevel::Class, GroupLevel::School]
    } else {
        a.groups
            .iter()
            .map(|g| match g.as_str() {
                "class" => Ok(GroupLevel::Class),
                "school" => Ok(GroupLevel::School),
                other => Err(Failure::Usage(format!("unknown grouping factor `{other}` (class or school)"))),
            })
            .collect::<Res<_>>()?
    };
    let spec = MixedSpec {
        fixed_predictors: preds.clone(),
        intercept_groups: groups,
        slope_candidates: slopes,
    };
    let design = if preds.is_empty() {
        warn!("no predictors; fitting an intercept-only model");
        encode_intercept_only(&ds)?
    } else {
        encode_design(&ds, &preds)?
    };
    let ids = GroupIds::from_dataset(&ds, &design.retained_rows)?;
    let opts = mlcart::regression::GlmmOptions {
        irls: irls_options(ctx),
        ..ctx.cfg.experiment.glmm
    };
    let fit = fit_random_intercept_logistic(&design, &design.response, &ids, &spec, &opts)?;
    if !fit.converged {
        warn!("mixed model fit did not converge");
    }
    let table = coefficient_table(&fit.map, &fit.fixed);
    print!("{}", coefficients_csv(&table));
    println!(
        "class variance {}, school variance {}, Laplace deviance {}",
        fit.sigma2_class, fit.sigma2_school, fit.laplace_deviance
    );
    let mut m = ctx.manifest("fit-glmm", json!({"spec": spec, "glmm": opts}), 0)?;
    add_inputs(&mut m, &inputs)?;
    m.details = json!({"converged": fit.converged, "dropped_columns": design.dropped});
    let outputs = vec![
        ctx.write("glmm.json", &(serde_json::to_string_pretty(&fit).expect("json") + "\n"))?,
        ctx.write("coefficients.csv", &coefficients_csv(&table))?,
    ];
    ctx.finish(m, outputs)
}

fn evaluate(ctx: &Ctx, a: EvaluateArgs) -> Res<()> {
    let threshold = a.threshold.unwrap_or(ctx.cfg.experiment.threshold);
    let axes = parse_axes(a.axes.as_deref())?;
    let bad = |e: csv::Error| Failure::Data(format!("{}: {e}", a.predictions.display()));
    let mut rdr = csv::Reader::from_path(&a.predictions).map_err(bad)?;
    let header = rdr.headers().map_err(bad)?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Failure::Data(format!("column `{name}` not found in {}", a.predictions.display())))
    };
    let (pi, ti) = (col(&a.prob_column)?, col(&a.truth_column)?);
    let (mut probs, mut truth, mut skipped) = (Vec::new(), Vec::new(), 0usize);
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(bad)?;
        let (p, t) = (rec.get(pi).unwrap_or("").trim(), rec.get(ti).unwrap_or("").trim());
        if p.is_empty() || p == "NA" || t.is_empty() || t == "NA" {
            skipped += 1;
            continue;
        }
        let p: f64 = p.parse().map_err(|_| Failure::Data(format!("row {}: bad probability `{p}`", k + 1)))?;
        let t: u8 = match t {
            "0" => 0,
            "1" => 1,
            other => return Err(Failure::Data(format!("row {}: outcome `{other}` is not 0/1", k + 1))),
        };
        probs.push(p);
        truth.push(t);
    }
    let cm = confusion_matrix(&truth, &probs, threshold)?;
    let roc = roc_curve(&probs, &truth).ok();
    let report = json!({
        "n": truth.len(),
        "skipped": skipped,
        "threshold": threshold,
        "confusion": cm,
        "error_rate": error_rate(&cm),
        "accuracy": accuracy(&cm),
        "sensitivity": sensitivity(&cm),
        "specificity": specificity(&cm),
        "brier": brier_score(&probs, &truth)?,
        "auc": roc.as_ref().map(auc),
    });
    let text = serde_json::to_string_pretty(&report).expect("json") + "\n";
    print!("{text}");
    let mut m = ctx.manifest("evaluate", json!({"threshold": threshold, "axes": axes}), 0)?;
    m.add_input(&a.predictions)?;
    let mut outputs = vec![ctx.write("metrics.json", &text)?];
    if let Some(r) = &roc {
        let mut buf = Vec::new();
        write_roc_csv(r, axes, &mut buf)?;
        outputs.push(ctx.write("roc.csv", &String::from_utf8(buf).expect("utf8"))?);
    } else {
        warn!("only one class among the outcomes; no ROC curve");
    }
    ctx.finish(m, outputs)
}

fn experiment(ctx: &Ctx, a: ExperimentArgs) -> Res<()> {
    let mut cfg = ctx.cfg.experiment.clone();
    if let Some(v) = a.seed {
        cfg.master_seed = v;
    }
    if let Some(v) = a.repetitions {
        cfg.repetitions = v;
    }
    if a.train_size.is_some() {
        cfg.train_size = a.train_size;
    }
    if let Some(v) = a.cp {
        cfg.cp = v;
    }
    if !a.roster.is_empty() {
        cfg.roster = a
            .roster
            .iter()
            .map(|s| s.parse::<ModelName>().map_err(|e| Failure::Usage(e.to_string())))
            .collect::<Res<_>>()?;
    }
    if !a.edu.is_empty() {
        cfg.edu_list = a.edu.clone();
    } else if !ctx.cfg.edu_list.is_empty() {
        cfg.edu_list = ctx.cfg.edu_list.clone();
    }
    cfg.group_stratified |= a.group_stratified;
    cfg.recompute_aggregates |= a.recompute_aggregates;
    let axes = parse_axes(a.axes.as_deref())?;

    let data_path = a.data.clone().or_else(|| ctx.cfg.dataset.clone());
    let (ds, inputs, source) = match data_path {
        Some(d) => {
            let (ds, inputs) = load(ctx, &DataArgs { data: Some(d), schema: a.schema.clone() })?;
            (ds, inputs, json!("file"))
        }
        None => {
            let spec = ctx.cfg.synthetic.clone();
            info!("no dataset given; generating synthetic data (seed {})", spec.seed);
            let data = generate_synthetic(&spec)?;
            (data.dataset, Vec::new(), json!({"synthetic": spec}))
        }
    };
    let output = run_experiment(&ds, &cfg)?;
    let mut m = ctx.manifest("experiment", json!({"experiment": cfg, "data": source}), cfg.master_seed)?;
    add_inputs(&mut m, &inputs)?;
    let files = write_reports(&output, &ctx.out, axes, Some(m))?;
    for s in &output.summary.models {
        let fmt = |q: Option<mlcart::experiment::Quartiles>| q.map_or("-".to_string(), |q| format!("{:.4}", q.mean));
        println!(
            "{:<15} error {}  brier {}  auc {}  failures {}",
            s.model.to_string(),
            fmt(s.error_rate),
            fmt(s.brier),
            fmt(s.auc),
            s.failures
        );
    }
    println!("wrote {} files to {}", files.len(), ctx.out.display());
    Ok(())
}

fn sweep(ctx: &Ctx, a: CpSweepArgs) -> Res<()> {
    let (ds, inputs) = load(ctx, &a.data)?;
    let preds = predictor_list(ctx, &ds, &a.predictors)?;
    let mut controls = grow_controls(ctx, &a.grow);
    if let Some(k) = a.folds {
        controls.cv_folds = k;
    }
    let (max, step) = (a.max.unwrap_or(0.1), a.step.unwrap_or(0.001));
    if !(step > 0.0 && max >= 0.0) {
        return Err(Failure::Usage("--step must be positive and --max non-negative".into()));
    }
    let grid = cp_grid(max, step);
    let data = TrainingData::from_dataset(&ds, &preds)?;
    let points = cp_sweep(&data, &grid, &controls)?;
    let mut s = String::from("cp,cv_error,cv_se,mean_splits\n");
    for p in &points {
        s.push_str(&format!("{},{},{},{}\n", p.cp, p.cv_error, p.cv_se, p.mean_splits));
    }
    if let Some(best) = points.iter().min_by(|x, y| x.cv_error.total_cmp(&y.cv_error)) {
        println!("lowest cross-validated error {:.4} at cp {}", best.cv_error, best.cp);
    }
    let mut m = ctx.manifest(
        "cp-sweep",
        json!({"predictors": preds, "grow": controls, "max": max, "step": step}),
        controls.rng_seed,
    )?;
    add_inputs(&mut m, &inputs)?;
    let outputs = vec![ctx.write("cp_sweep.csv", &s)?];
    ctx.finish(m, outputs)
}

fn export(ctx: &Ctx, a: ExportArgs) -> Res<()> {
    let format: ExportFormat = a.format.parse().map_err(|e: mlcart::Error| Failure::Usage(e.to_string()))?;
    let tree = read_tree(&a.tree)?;
    let text = export_tree(&tree, format);
    print!("{text}");
    let ext = match format {
        ExportFormat::Text => "txt",
        ExportFormat::Dot => "dot",
        ExportFormat::Json => "json",
    };
    let mut m = ctx.manifest("export-tree", json!({"format": a.format}), 0)?;
    m.add_input(&a.tree.tree)?;
    let outputs = vec![ctx.write(&format!("tree.{ext}"), &text)?];
    ctx.finish(m, outputs)
}
