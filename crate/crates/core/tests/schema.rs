use netcm::cli::report_schema;
use netcm::criteria::{xi_psd_report, SplitBases};
use netcm::spec::{CriterionKind, ObservablesSpec, Scenario, StateSpec, TopologySpec};
use netcm::states;
use serde_json::{json, Value};

fn validator() -> jsonschema::Validator {
    jsonschema::validator_for(&report_schema()).expect("schema compiles")
}

fn errors(v: &jsonschema::Validator, instance: &Value) -> Vec<String> {
    v.iter_errors(instance).map(|e| e.to_string()).collect()
}

fn scenario(state: StateSpec, obs: ObservablesSpec, topo: TopologySpec, criterion: CriterionKind) -> Scenario {
    Scenario {
        state,
        observables: obs,
        topology: topo,
        criterion,
    }
}

#[test]
fn criterion_reports_validate() {
    let v = validator();
    let cases = [
        scenario(StateSpec::new("ghz").visibility(0.6), ObservablesSpec::PauliZ, TopologySpec::Triangle, CriterionKind::TraceNorm),
        scenario(StateSpec::new("w").visibility(0.8), ObservablesSpec::WSet, TopologySpec::Pairwise, CriterionKind::TraceNorm),
        scenario(StateSpec::new("cluster4"), ObservablesSpec::ClusterSet, TopologySpec::Pairwise, CriterionKind::TraceNorm),
        scenario(
            StateSpec::new("ghz").param("dim", 4).visibility(0.1).split(2, 2),
            ObservablesSpec::FullProduct,
            TopologySpec::Triangle,
            CriterionKind::XiPsd,
        ),
        scenario(
            StateSpec::new("dicke").param("k", 1).split(2, 2),
            ObservablesSpec::FullProduct,
            TopologySpec::Triangle,
            CriterionKind::BtnResidual,
        ),
    ];
    for sc in cases {
        let report = serde_json::to_value(sc.evaluate().unwrap()).unwrap();
        assert_eq!(errors(&v, &report), Vec::<String>::new(), "{report}");
    }
    let rho = states::dicke_state(3).unwrap().split_factors(2, 2).unwrap();
    let split = SplitBases::gell_mann(rho.layout(), rho.nodes()).unwrap();
    assert!(v.is_valid(&serde_json::to_value(xi_psd_report(&rho, &split).unwrap()).unwrap()));
}

#[test]
fn cli_reports_validate() {
    let v = validator();
    let run = |args: &[&str]| -> Value {
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_netcm")).args(args).output().unwrap();
        serde_json::from_slice(&out.stdout).unwrap()
    };
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("btn.json");
    std::fs::write(&spec, r#"{"family": "btn", "params": {"sources": [{"family": "bell"}, {"family": "bell"}, {"family": "bell"}]}}"#)
        .unwrap();
    let reports = [
        run(&["feasibility", "--state", "ghz", "--visibility", "0.3", "--observables", "pauli-z", "--topology", "triangle"]),
        run(&["feasibility", "--state", "ghz", "--visibility", "0.9", "--observables", "pauli-z", "--topology", "triangle", "--max-iter", "200"]),
        run(&["fidelity-bound", "--tol", "1e-3", "--restarts", "2", "--iterations", "200"]),
        run(&["decompose", "--state-spec", spec.to_str().unwrap()]),
    ];
    for r in &reports {
        assert_eq!(errors(&v, r), Vec::<String>::new(), "{r}");
    }
}

#[test]
fn version_is_one() {
    assert_eq!(report_schema()["$defs"]["criterion"]["properties"]["schema_version"]["const"], "1");
}

#[test]
fn unknown_fields_are_rejected() {
    let v = validator();
    let sc = scenario(StateSpec::new("ghz"), ObservablesSpec::PauliZ, TopologySpec::Triangle, CriterionKind::TraceNorm);
    let mut report = serde_json::to_value(sc.evaluate().unwrap()).unwrap();
    assert!(v.is_valid(&report));
    report["extra"] = json!(1);
    assert!(!v.is_valid(&report));
    // the Rust side is strict too
    assert!(serde_json::from_value::<netcm::criteria::CriterionReport>(report).is_err());
}

#[test]
fn wrong_types_are_rejected() {
    let v = validator();
    let sc = scenario(StateSpec::new("ghz"), ObservablesSpec::PauliZ, TopologySpec::Triangle, CriterionKind::TraceNorm);
    let mut report = serde_json::to_value(sc.evaluate().unwrap()).unwrap();
    report["pass"] = json!("yes");
    assert!(!v.is_valid(&report));
}
