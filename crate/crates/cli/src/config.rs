//! Resolving files and flags into a graph, roles, schema and query.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use causal_bounds::counts::{Schema, Variable};
use causal_bounds::effects::{Criterion, EffectQuery, FrontdoorForm, Regime};
use causal_bounds::graph::{check_backdoor, check_frontdoor};
use causal_bounds::{CausalModel, CriterionReport, Dag, Roles};

use crate::{input, CliError, QueryArgs, SourceArgs};

const DEFAULT_DELTA: f64 = 0.05;

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn load_model(path: &Path) -> Result<CausalModel, CliError> {
    CausalModel::from_json(&read_text(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Graph, roles and (when a model file was given) the model.
pub struct Source {
    pub dag: Dag,
    pub roles: Roles,
    pub model: Option<CausalModel>,
}

impl Source {
    pub fn schema(&self) -> Result<Schema, CliError> {
        let var = |name: &str| -> Result<Variable, CliError> {
            let v = self.dag.index_of(name).map_err(input)?;
            Ok(Variable {
                name: name.to_string(),
                domain: self.dag.domain(v).to_vec(),
            })
        };
        let adjustment = self.roles.adjustment.iter().map(|n| var(n)).collect::<Result<_, _>>()?;
        Schema::new(var(&self.roles.treatment)?, var(&self.roles.outcome)?, adjustment).map_err(input)
    }

    pub fn check(&self, criterion: Criterion) -> Result<CriterionReport, CliError> {
        let r = &self.roles;
        let adjust: Vec<&str> = r.adjustment.iter().map(String::as_str).collect();
        match criterion {
            Criterion::Backdoor => check_backdoor(&self.dag, &[r.treatment.as_str()], &[r.outcome.as_str()], &adjust),
            Criterion::Frontdoor => check_frontdoor(&self.dag, &r.treatment, &r.outcome, &adjust),
        }
        .map_err(input)
    }

    /// Exit 3 unless the criterion holds or the user vouches for it.
    pub fn require(&self, criterion: Criterion, assume: bool) -> Result<(), CliError> {
        if assume {
            return Ok(());
        }
        let report = self.check(criterion)?;
        if report.satisfied() {
            Ok(())
        } else {
            Err(CliError::Violation(format!(
                "{criterion} criterion {report}\n(pass --assume-criterion to proceed anyway)"
            )))
        }
    }
}

pub fn merge_roles(
    base: Option<&Roles>,
    treatment: Option<&String>,
    outcome: Option<&String>,
    adjust: Option<&Vec<String>>,
) -> Result<Roles, CliError> {
    let missing = |what: &str| CliError::Input(format!("no {what} variable; pass --{what} or give roles in the model"));
    let treatment = treatment
        .cloned()
        .or_else(|| base.map(|r| r.treatment.clone()))
        .ok_or_else(|| missing("treatment"))?;
    let outcome = outcome
        .cloned()
        .or_else(|| base.map(|r| r.outcome.clone()))
        .ok_or_else(|| missing("outcome"))?;
    let adjustment = adjust
        .cloned()
        .or_else(|| base.map(|r| r.adjustment.clone()))
        .ok_or_else(|| CliError::Input("no adjustment variables; pass --adjust or give roles in the model".into()))?;
    Ok(Roles {
        treatment,
        outcome,
        adjustment,
    })
}

pub fn load_source(args: &SourceArgs) -> Result<Source, CliError> {
    let (dag, model) = match (&args.model, &args.graph) {
        (Some(path), _) => {
            let model = load_model(path)?;
            (model.dag().clone(), Some(model))
        }
        (None, Some(path)) => {
            let dag = Dag::parse(&read_text(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            (dag, None)
        }
        (None, None) => return Err(CliError::Input("pass --model or --graph".into())),
    };
    let roles = merge_roles(
        model.as_ref().and_then(|m| m.roles()),
        args.treatment.as_ref(),
        args.outcome.as_ref(),
        args.adjust.as_ref(),
    )?;
    let model = match model {
        Some(m) => Some(m.with_roles(roles.clone()).map_err(input)?),
        None => None,
    };
    Ok(Source { dag, roles, model })
}

/// Query fields accepted in a `--config` file. Values are labels.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryFile {
    criterion: Option<Criterion>,
    treatment_value: Option<String>,
    outcome_value: Option<String>,
    delta: Option<f64>,
    regime: Option<Regime>,
    binary_toy: Option<bool>,
    frontdoor_form: Option<FrontdoorForm>,
}

/// Command-line flags override the config file, which overrides defaults.
pub fn resolve_query(args: &QueryArgs, schema: &Schema) -> Result<EffectQuery, CliError> {
    let file: QueryFile = match &args.config {
        Some(path) => serde_json::from_str(&read_text(path)?)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?,
        None => QueryFile::default(),
    };
    let criterion = args.criterion.or(file.criterion).unwrap_or(Criterion::Backdoor);
    let label = |flag: &Option<String>, file: Option<String>, what: &str| {
        flag.clone()
            .or(file)
            .ok_or_else(|| CliError::Input(format!("missing --{what}")))
    };
    let x = label(&args.treatment_value, file.treatment_value, "treatment-value")?;
    let y = label(&args.outcome_value, file.outcome_value, "outcome-value")?;
    let x = schema.treatment.value_index(&x).map_err(input)?;
    let y = schema.outcome.value_index(&y).map_err(input)?;
    let delta = args.delta.or(file.delta).unwrap_or(DEFAULT_DELTA);
    let regime = args.regime.or(file.regime).unwrap_or(Regime::Iid);
    let toy = args.toy || file.binary_toy.unwrap_or(false);
    let form = args.form.or(file.frontdoor_form).unwrap_or_default();
    if form != FrontdoorForm::Expanded && (criterion != Criterion::Frontdoor || regime != Regime::Iid) {
        return Err(CliError::Input(format!(
            "front-door form `{form}` needs --criterion frontdoor and --regime iid"
        )));
    }
    Ok(EffectQuery::new(criterion, x, y, delta, regime).toy(toy).form(form))
}
