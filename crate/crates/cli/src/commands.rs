//! One report builder per subcommand. Each returns the JSON result and whether
//! its checks passed.

use serde_json::{json, Value};

use qkan::block_encoding::{
    extract_block, extract_diagonal, hadamard_product, lcu, perturb, product, verify, verify_diagonal,
};
use qkan::encoders::encode_diagonal_exact;
use qkan::qkan::{
    build_layer, build_network, chebyshev_t, classical_layer_eval, classical_network_eval, LayerOptions,
    Network, WeightEncoder,
};
use qkan::qsvt::chebyshev_be;
use qkan::readout::{
    check_stateprep_bound, estimate_all_outputs, hadamard_test, prepare_state_postselect,
    stateprep_eps_w_threshold, stateprep_eps_x_threshold,
};
use qkan::resources::{analytic_cost, reconcile};
use qkan::trainer::{train, TrainResult};
use qkan::{BlockEncoding, CMatrix, PrimitiveId, StatePrepPair, C64};

use crate::config::{nest, Resolved};
use crate::CliError;

pub struct Outcome {
    pub result: Value,
    pub passed: bool,
}

const TOL: f64 = 1e-10;

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

fn diag_real(be: &BlockEncoding) -> Result<Vec<f64>, CliError> {
    Ok(extract_diagonal(be)?.iter().map(|z| z.re).collect())
}

fn dense_diag(v: &[f64]) -> CMatrix {
    CMatrix::from_fn(v.len(), v.len(), |i, j| {
        if i == j {
            C64::new(v[i], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

fn network(run: &Resolved, x: &[f64]) -> Result<Network, CliError> {
    let be_x = run.input_encoding(x)?;
    Ok(build_network(&be_x, &run.spec, &run.layer_options())?)
}

/// `4 d sqrt(eps_x) + eps_w` for one layer.
fn layer_bound(degree: usize, eps_x: f64, eps_w: f64) -> f64 {
    4.0 * degree as f64 * eps_x.sqrt() + eps_w
}

fn check(name: &str, passed: bool, detail: Value) -> Value {
    json!({ "name": name, "passed": passed, "detail": detail })
}

pub fn verify_cmd(run: &Resolved) -> Result<Outcome, CliError> {
    let x = run.input()?.to_vec();
    let p = &run.config.perturb;
    let mut checks = Vec::new();

    let exact = run.exact_input_encoding(&x)?;
    let err = verify_diagonal(&exact, &x)?;
    checks.push(check("encoder_exactness", err <= TOL, json!({ "max_err": err, "tol": TOL })));

    let mut grid: Vec<f64> = (0..17).map(|i| -1.0 + 0.125 * i as f64).collect();
    grid.resize(32, 0.0);
    let be = encode_diagonal_exact(&grid)?;
    let mut worst: f64 = 0.0;
    for r in 0..=7 {
        let d = diag_real(&chebyshev_be(&be, r)?)?;
        for (q, &xq) in grid.iter().take(17).enumerate() {
            worst = worst.max((d[q] - chebyshev_t(r, xq)).abs());
        }
    }
    checks.push(check("chebyshev_grid", worst <= TOL, json!({ "max_err": worst, "max_degree": 7, "points": 17 })));

    checks.push(combinator_check(&x, p.eps_x.max(1e-4), p.seed.unwrap_or(0))?);

    let layer0 = &run.spec.layers()[0];
    let be_x = run.input_encoding(&x)?;
    let be = build_layer(&be_x, layer0, 0, &run.layer_options())?;
    let measured = max_dev(&diag_real(&be)?, &classical_layer_eval(&x, layer0)?);
    let bound = layer_bound(layer0.degree(), p.eps_x, p.eps_w);
    checks.push(check(
        "layer_error_bound",
        measured <= bound + TOL && be.epsilon() <= bound + TOL,
        json!({
            "eps_x": p.eps_x,
            "eps_w": p.eps_w,
            "degree": layer0.degree(),
            "measured": measured,
            "tracked": be.epsilon(),
            "bound": bound,
        }),
    ));

    let opts = LayerOptions {
        weight_perturbation: None,
        ..run.layer_options()
    };
    let net = build_network(&exact, &run.spec, &opts)?;
    let err = max_dev(&diag_real(net.output())?, &classical_network_eval(&x, &run.spec)?);
    checks.push(check("network_oracle", err <= 1e-9, json!({ "max_err": err, "tol": 1e-9 })));

    let passed = checks.iter().all(|c| c["passed"] == true);
    Ok(Outcome {
        result: json!({ "checks": checks }),
        passed,
    })
}

fn combinator_check(x: &[f64], eps: f64, seed: u64) -> Result<Value, CliError> {
    let xb: Vec<f64> = x.iter().rev().map(|v| -v).collect();
    let a = perturb(&encode_diagonal_exact(x)?, eps, seed)?;
    let b_lcu = perturb(&encode_diagonal_exact(&xb)?, eps / 2.0, seed.wrapping_add(1))?;
    let b = b_lcu.with_aux_prefix("b.")?;
    let (da, db) = (dense_diag(x), dense_diag(&xb));

    let prod_bound = a.alpha() * b.epsilon() + b.alpha() * a.epsilon();
    let prod_err = verify(&product(&a, &b)?, &(&da * &db))?;

    let pair = StatePrepPair::uniform(2)?;
    let lcu_bound = a.alpha() * pair.eps_sp + pair.beta * a.epsilon().max(b_lcu.epsilon());
    let lcu_err = verify(&lcu(&[a.clone(), b_lcu], &pair)?, &((&da + &db) * C64::new(0.5, 0.0)))?;

    let h = hadamard_product(&a, &b)?;
    let had_err = verify(&h, &da.component_mul(&db))?;
    let blocks = extract_block(&a)?.component_mul(&extract_block(&b)?);
    let had_exact = verify(&h, &blocks)?;

    let passed = prod_err <= prod_bound + TOL
        && lcu_err <= lcu_bound + TOL
        && had_err <= prod_bound + TOL
        && had_exact <= TOL;
    Ok(check(
        "combinator_bounds",
        passed,
        json!({
            "product": { "measured": prod_err, "bound": prod_bound },
            "lcu": { "measured": lcu_err, "bound": lcu_bound },
            "hadamard": { "measured": had_err, "bound": prod_bound, "block_err": had_exact },
        }),
    ))
}

pub fn eval_cmd(run: &Resolved) -> Result<Outcome, CliError> {
    let x = run.input()?.to_vec();
    let net = network(run, &x)?;
    let out = net.output();
    let mode = run.readout_mode()?;
    let oracle = classical_network_eval(&x, &run.spec)?;
    let (nodes, readouts) = match run.config.readout.node {
        Some(q) if q < oracle.len() => (vec![q], vec![hadamard_test(out, q, mode)?]),
        Some(q) => {
            return Err(CliError::Usage(format!(
                "readout node {q} out of range for {} outputs",
                oracle.len()
            )))
        }
        None => ((0..oracle.len()).collect(), estimate_all_outputs(out, mode)?),
    };
    let output: Vec<f64> = readouts.iter().map(|r| r.value).collect();
    let reference: Vec<f64> = nodes.iter().map(|&q| oracle[q]).collect();
    let max_err = max_dev(&output, &reference);
    let delta = readouts.iter().map(|r| r.delta_target).fold(0.0, f64::max);
    Ok(Outcome {
        result: json!({
            "nodes": nodes,
            "output": output,
            "oracle": reference,
            "max_err": max_err,
            "readout": readouts,
            "precision": {
                "encoding_epsilon": out.epsilon(),
                "readout_delta": delta,
                "total": out.epsilon() + delta,
            },
            "qubits": { "aux": out.num_aux(), "system": out.system_qubits(), "total": out.total_qubits() },
        }),
        passed: true,
    })
}

pub fn resources_cmd(run: &Resolved) -> Result<Outcome, CliError> {
    let x = if run.config.input.is_empty() {
        vec![0.0; run.spec.dims()[0]]
    } else {
        run.input()?.to_vec()
    };
    let opts = run.layer_options();
    let be_x = run.input_encoding(&x)?;
    let net = build_network(&be_x, &run.spec, &opts)?;
    let layers = run.spec.layers();
    let rc = &run.config.resources;
    let c_w = rc.c_w.clone().unwrap_or_else(|| vec![1.0; layers.len()]);
    let a_w: Vec<usize> = layers
        .iter()
        .map(|l| match opts.weight_encoder {
            WeightEncoder::Exact => 1,
            WeightEncoder::RealPart => l.in_qubits() + l.out_qubits() + 1,
        })
        .collect();
    let report = analytic_cost(&run.spec, rc.c_x0, &c_w, be_x.num_aux(), &a_w, rc.model)?;
    let ledger = net.output().ledger();
    let rec = reconcile(&report, ledger);
    let counts = ledger.flattened();
    let input_queries = counts.get(&PrimitiveId::Input { layer: 0 }).copied().unwrap_or(0);
    let weight_queries: u64 = counts
        .iter()
        .filter(|(id, _)| matches!(id, PrimitiveId::Weight { .. }))
        .map(|(_, n)| n)
        .sum();
    let aux = net.output().num_aux();
    let aux_ok = aux == report.final_aux();
    Ok(Outcome {
        result: json!({
            "input_queries": input_queries,
            "weight_queries": weight_queries,
            "aux": aux,
            "aux_formula": report.final_aux(),
            "report": report,
            "reconciliation": rec,
        }),
        passed: rec.matches && aux_ok,
    })
}

pub fn prepare_state_cmd(run: &Resolved) -> Result<Outcome, CliError> {
    let x = run.input()?.to_vec();
    let net = network(run, &x)?;
    let oracle = classical_network_eval(&x, &run.spec)?;
    let prep = prepare_state_postselect(net.output(), &oracle)?;
    let amplitudes: Vec<[f64; 2]> = prep.state.amplitudes().iter().map(|z| [z.re, z.im]).collect();
    let mut result = json!({
        "success_prob": prep.success_prob,
        "norm_const": prep.norm_const,
        "l2_error": prep.l2_error,
        "amplitudes": amplitudes,
        "oracle": oracle,
    });
    let mut passed = true;
    if let Some(sp) = &run.config.state_prep {
        let p = &run.config.perturb;
        let last = run.spec.layers().last().unwrap();
        let (d, k) = (last.degree(), last.n_out());
        let hypotheses = check_stateprep_bound(sp.eps, p.eps_x, p.eps_w, d, k, prep.norm_const);
        let within = prep.l2_error <= sp.eps;
        passed = !hypotheses || within;
        result["bound"] = json!({
            "eps": sp.eps,
            "eps_x_threshold": stateprep_eps_x_threshold(sp.eps, d, k, prep.norm_const),
            "eps_w_threshold": stateprep_eps_w_threshold(sp.eps, k, prep.norm_const),
            "hypotheses_hold": hypotheses,
            "within_eps": within,
        });
    }
    Ok(Outcome { result, passed })
}

pub fn train_cmd(run: &Resolved) -> Result<(Outcome, TrainResult), CliError> {
    let (cfg, data) = run.train_config()?;
    let trained = train(&run.spec, &data, &cfg)?;
    let weights: Vec<_> = trained.spec.layers().iter().map(nest).collect();
    Ok((
        Outcome {
            result: json!({
                "initial_loss": trained.initial_loss,
                "final_loss": trained.final_loss(),
                "iterations": trained.trace.len(),
                "samples": data.len(),
                "trained_weights": weights,
            }),
            passed: true,
        },
        trained,
    ))
}
