use decoupler_core::decouple::{decouple, DecoupleConfig, DecoupleReport, SamplingConfig};
use decoupler_core::polyfunc::{DecoupledModel, VectorPolyJson, VectorPolynomial};
use decoupler_core::tensor::CpdConfig;

use crate::{
    emit, read_input, resolve_seed, serialize, CliError, DecoupleArgs, ExpandArgs, Status,
};

/// JSON when the text starts with `{`, otherwise one polynomial per line.
pub fn parse_function(text: &str, num_inputs: Option<usize>) -> Result<VectorPolynomial, CliError> {
    if text.trim_start().starts_with('{') {
        let json: VectorPolyJson = serde_json::from_str(text)
            .map_err(|e| CliError::Input(format!("malformed function JSON: {e}")))?;
        let f = VectorPolynomial::from_json(&json).map_err(CliError::input)?;
        if let Some(m) = num_inputs.filter(|&m| m != f.num_vars()) {
            return Err(CliError::Input(format!(
                "--inputs {m} disagrees with the {} inputs of the JSON function",
                f.num_vars()
            )));
        }
        Ok(f)
    } else {
        VectorPolynomial::parse_lines(text, num_inputs).map_err(CliError::input)
    }
}

fn read_model(path: &std::path::Path) -> Result<DecoupledModel, CliError> {
    serde_json::from_str(&read_input(path)?)
        .map_err(|e| CliError::Input(format!("malformed model JSON in {}: {e}", path.display())))
}

fn config(args: &DecoupleArgs, seed: u64) -> DecoupleConfig {
    let base = DecoupleConfig::new(args.rank, args.degree, args.method, seed);
    DecoupleConfig {
        cpd: CpdConfig {
            restarts: args.restarts,
            max_iters: args.max_iters,
            tol: args.tol,
            alpha1: args.alpha1,
            alpha2: args.alpha2,
            ..base.cpd
        },
        sampling: SamplingConfig {
            num_points: args.samples,
            lo: args.lo.clone(),
            hi: args.hi.clone(),
            seed,
        },
        validation: SamplingConfig {
            lo: args.lo.clone(),
            hi: args.hi.clone(),
            ..base.validation
        },
        ..base
    }
}

pub fn cmd_decouple(args: &DecoupleArgs, pretty: bool) -> Result<Status, CliError> {
    let seed = resolve_seed(args.seed)?;
    let f = parse_function(&read_input(&args.input)?, args.inputs)?;
    let truth = args.truth.as_deref().map(read_model).transpose()?;
    if let Some(t) = &truth {
        let expected = (f.num_outputs(), f.num_vars(), args.rank);
        let found = (t.num_outputs(), t.num_inputs(), t.num_branches());
        if found != expected {
            return Err(CliError::Input(format!(
                "reference model has (outputs, inputs, branches) = {found:?}, expected {expected:?}"
            )));
        }
    }
    let cfg = config(args, seed);
    cfg.validate().map_err(CliError::input)?;
    log::info!(
        "decoupling {} outputs of {} inputs: method {}, rank {}, degree {}, seed {seed}",
        f.num_outputs(),
        f.num_vars(),
        cfg.method,
        cfg.rank,
        cfg.degree
    );

    let mut report = decouple(&f, &cfg).map_err(CliError::input)?;
    if let Some(t) = &truth {
        report
            .score_against_with(t, args.match_threshold)
            .map_err(CliError::input)?;
    }
    for w in &report.warnings {
        log::warn!("{w}");
    }
    let report_text = serialize(&report, pretty)?;
    let model_text = args
        .model
        .as_ref()
        .map(|_| serialize(&report.model, pretty))
        .transpose()?;
    let mut outputs = vec![(args.report.as_ref(), report_text.as_str())];
    if let Some(text) = &model_text {
        outputs.push((args.model.as_ref(), text.as_str()));
    }
    emit(&outputs)?;
    if pretty {
        eprint!("{}", summary(&report));
    }
    Ok(if report.diagnostics.converged {
        Status::Success
    } else {
        Status::NotConverged
    })
}

fn summary(r: &DecoupleReport) -> String {
    let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.6}"));
    let mut s = format!(
        "method {} rank {} degree {} samples {}\n\
         residual J {:.3e} H {:.3e}\n\
         validation {:.3e}\n\
         factor match W {} V {}\n\
         converged {} after {} iterations\n",
        r.method,
        r.rank,
        r.degree,
        r.num_samples,
        r.tensor_residuals.jacobian,
        r.tensor_residuals.hessian,
        r.validation_rel_error,
        opt(r.factor_match_w),
        opt(r.factor_match_v),
        r.diagnostics.converged,
        r.diagnostics.iterations
    );
    for w in &r.warnings {
        s.push_str(&format!("warning: {w}\n"));
    }
    s
}

pub fn cmd_expand(args: &ExpandArgs, pretty: bool) -> Result<Status, CliError> {
    let model = read_model(&args.model)?;
    let f = model.expand().map_err(CliError::input)?;
    log::info!(
        "expanded {} branches into {} outputs",
        model.num_branches(),
        f.num_outputs()
    );
    let text = serialize(&f.to_json(), pretty)?;
    emit(&[(args.out.as_ref(), text.as_str())])?;
    Ok(Status::Success)
}
