use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use causal_bounds::counts::{CountTable, Observation, Schema};
use causal_bounds::coverage::{run_coverage, CoverageConfig};
use causal_bounds::effects::{compute, Criterion, EffectQuery, Regime};
use causal_bounds::io::{read_csv, write_record, ColumnMap, JsonlReader};
use causal_bounds::prediction::prediction_set;
use causal_bounds::simulator::{replication_rng, Sampler};
use causal_bounds::FORMAT_VERSION;

use crate::config::{load_model, load_source, merge_roles, resolve_query, Source};
use crate::{input, AnalyzeArgs, CheckArgs, CliError, CoverageArgs, DataArgs, PredictArgs, SimulateArgs};

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn open_input(path: Option<&Path>) -> Result<Box<dyn BufRead>, CliError> {
    match path {
        Some(p) if p.as_os_str() != "-" => Ok(Box::new(BufReader::new(
            File::open(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
        ))),
        _ => Ok(Box::new(BufReader::new(io::stdin().lock()))),
    }
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    let line = serde_json::to_string(value).map_err(input)?;
    writeln!(out, "{line}").map_err(input)
}

/// Calls `each` for every observation in order.
fn for_each_observation(
    data: &DataArgs,
    schema: &Schema,
    mut each: impl FnMut(Observation) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let reader = open_input(data.data.as_deref())?;
    if data.csv {
        let columns = match &data.columns {
            Some(text) => ColumnMap::parse(text).map_err(input)?,
            None => ColumnMap::from_schema(schema),
        };
        for obs in read_csv(reader, schema, &columns).map_err(input)? {
            each(obs)?;
        }
    } else {
        for obs in JsonlReader::new(reader, schema) {
            each(obs.map_err(input)?)?;
        }
    }
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let source = load_source(&args.source)?;
    let model = source
        .model
        .as_ref()
        .ok_or_else(|| CliError::Input("simulate needs --model".into()))?;
    let schema = model.schema().map_err(input)?;
    let mut rng = replication_rng(args.seed, 0);
    let mut sampler = Sampler::new(model).map_err(input)?;
    let mut policy = args.policy.map(|p| p.build(model)).transpose().map_err(input)?;
    let mut out = open_output(args.output.as_deref())?;
    for _ in 0..args.n {
        let obs = match policy.as_mut() {
            Some(p) => sampler.step_adaptive(p.as_mut(), &mut rng).map_err(input)?,
            None => sampler.step_iid(&mut rng),
        };
        write_record(&mut out, &schema, &obs).map_err(input)?;
    }
    out.flush().map_err(input)
}

pub fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let source = load_source(&args.source)?;
    let schema = source.schema()?;
    let query = resolve_query(&args.query, &schema)?;
    source.require(query.criterion, args.query.assume_criterion)?;
    let mut table = CountTable::new(&schema);
    query.validate(&table).map_err(input)?;
    let mut out = open_output(args.output.as_deref())?;

    let anytime = query.regime == Regime::Anytime;
    let mut signature = None;
    let emit = |table: &CountTable, out: &mut dyn Write| -> Result<(), CliError> {
        let iv = compute(table, &query).map_err(input)?;
        write_json(out, &iv)
    };
    for_each_observation(&args.data, &schema, |obs| {
        table.ingest(&obs).map_err(input)?;
        if anytime {
            let sig = table.dyadic_signature();
            if !args.checkpoints_only || signature.as_ref() != Some(&sig) {
                emit(&table, &mut out)?;
            }
            signature = Some(sig);
        }
        Ok(())
    })?;
    if table.n() == 0 {
        eprintln!("warning: no observations; the interval is unbounded");
    }
    if !anytime || table.n() == 0 {
        emit(&table, &mut out)?;
    }
    out.flush().map_err(input)
}

pub fn predict(args: &PredictArgs) -> Result<(), CliError> {
    let source = load_source(&args.source)?;
    let schema = source.schema()?;
    source.require(Criterion::Backdoor, args.assume_criterion)?;
    let x = schema.treatment.value_index(&args.treatment_value).map_err(input)?;
    let mut table = CountTable::new(&schema);
    for_each_observation(&args.data, &schema, |obs| table.ingest(&obs).map_err(input))?;
    let set = prediction_set(&table, x, args.delta).map_err(input)?;
    let mut out = open_output(args.output.as_deref())?;
    write_json(&mut out, &set)?;
    out.flush().map_err(input)
}

#[derive(Serialize)]
struct CheckRecord<'a> {
    format_version: u32,
    criterion: Criterion,
    treatment: &'a str,
    outcome: &'a str,
    adjustment: &'a [String],
    satisfied: bool,
    violations: &'a [String],
}

pub fn check(args: &CheckArgs) -> Result<(), CliError> {
    let source: Source = load_source(&args.source)?;
    let report = source.check(args.criterion)?;
    let mut out = io::stdout().lock();
    if args.json {
        write_json(
            &mut out,
            &CheckRecord {
                format_version: FORMAT_VERSION,
                criterion: args.criterion,
                treatment: &source.roles.treatment,
                outcome: &source.roles.outcome,
                adjustment: &source.roles.adjustment,
                satisfied: report.satisfied(),
                violations: report.violations(),
            },
        )?;
    } else {
        writeln!(out, "{} criterion: {report}", args.criterion).map_err(input)?;
    }
    if report.satisfied() {
        Ok(())
    } else {
        Err(CliError::Violation(format!("{} criterion violated", args.criterion)))
    }
}

pub fn coverage(args: &CoverageArgs) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let roles = merge_roles(model.roles(), args.treatment.as_ref(), args.outcome.as_ref(), args.adjust.as_ref())?;
    let model = model.with_roles(roles.clone()).map_err(input)?;
    let source = Source {
        dag: model.dag().clone(),
        roles,
        model: None,
    };
    let schema = source.schema()?;
    let query: EffectQuery = resolve_query(&args.query, &schema)?;
    source.require(query.criterion, args.query.assume_criterion)?;
    let report = run_coverage(
        &model,
        &CoverageConfig {
            query,
            policy: args.policy,
            n: args.n,
            replications: args.replications,
            base_seed: args.seed,
        },
    )
    .map_err(input)?;
    let mut out = open_output(args.output.as_deref())?;
    if args.summary {
        write!(out, "{}", report.summary()).map_err(input)?;
    } else {
        write_json(&mut out, &report)?;
    }
    out.flush().map_err(input)
}
