use serde_json::{json, Value};

use crate::criteria::SCHEMA_VERSION;

fn nullable(t: &str) -> Value {
    json!({"type": [t, "null"]})
}

/// JSON Schema (draft 2020-12) covering every report the CLI writes.
pub fn report_schema() -> Value {
    let version = json!({"const": SCHEMA_VERSION});
    let criterion = json!({
        "type": "object",
        "additionalProperties": false,
        "required": ["schema_version", "criterion", "lhs", "rhs", "margin", "pass", "tolerance",
                     "state_spec", "observables_spec", "topology", "details"],
        "properties": {
            "schema_version": version,
            "criterion": {"enum": ["trace-norm", "xi-psd", "btn-residual"]},
            "lhs": {"type": "number"},
            "rhs": {"type": "number"},
            "margin": {"type": "number"},
            "pass": {"type": "boolean"},
            "tolerance": {"type": "number", "minimum": 0},
            "state_spec": nullable("object"),
            "observables_spec": nullable("string"),
            "topology": nullable("object"),
            "details": {"type": "object"}
        }
    });
    let feasibility = json!({
        "type": "object",
        "additionalProperties": false,
        "required": ["schema_version", "kind", "status", "residual", "iterations", "tolerance", "max_iter",
                     "slack", "caveat", "parts", "state_spec", "observables_spec", "topology"],
        "properties": {
            "schema_version": version,
            "kind": {"const": "feasibility"},
            "status": {"enum": ["feasible", "infeasible-evidence", "inconclusive"]},
            "residual": {"type": "number", "minimum": 0},
            "iterations": {"type": "integer", "minimum": 0},
            "tolerance": {"type": "number", "exclusiveMinimum": 0},
            "max_iter": {"type": "integer", "minimum": 1},
            "slack": {"type": "boolean"},
            "caveat": nullable("string"),
            "parts": {"type": "array", "items": {"type": "string"}},
            "state_spec": nullable("object"),
            "observables_spec": nullable("string"),
            "topology": {"type": "object"}
        }
    });
    let fidelity = json!({
        "type": "object",
        "additionalProperties": false,
        "required": ["schema_version", "kind", "bound", "tolerance", "weights_at_bound", "margin_at_bound",
                     "bisection_steps", "restarts", "iterations", "seed"],
        "properties": {
            "schema_version": version,
            "kind": {"const": "fidelity-bound"},
            "bound": {"type": "number", "minimum": 0, "maximum": 1},
            "tolerance": {"type": "number", "exclusiveMinimum": 0},
            "weights_at_bound": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 7, "maxItems": 7},
            "margin_at_bound": {"type": "number"},
            "bisection_steps": {"type": "integer", "minimum": 0},
            "restarts": {"type": "integer", "minimum": 0},
            "iterations": {"type": "integer", "minimum": 0},
            "seed": {"type": "integer", "minimum": 0}
        }
    });
    let decomposition = json!({
        "type": "object",
        "additionalProperties": false,
        "required": ["schema_version", "kind", "node_labels", "block_sizes", "parts", "sum_residual",
                     "min_eigenvalue_residual", "pass", "tolerance", "state_spec"],
        "properties": {
            "schema_version": version,
            "kind": {"const": "decomposition"},
            "node_labels": {"type": "array", "items": {"type": "string"}},
            "block_sizes": {"type": "array", "items": {"type": "integer", "minimum": 1}},
            "parts": {
                "type": "array",
                "items": {
                    "type": "object",
                    "additionalProperties": false,
                    "required": ["name", "min_eigenvalue", "trace"],
                    "properties": {
                        "name": {"type": "string"},
                        "min_eigenvalue": {"type": "number"},
                        "trace": {"type": "number"}
                    }
                }
            },
            "sum_residual": {"type": "number", "minimum": 0},
            "min_eigenvalue_residual": {"type": "number"},
            "pass": {"type": "boolean"},
            "tolerance": {"type": "number", "minimum": 0},
            "state_spec": {"type": "object"}
        }
    });
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "$id": "urn:netcm:report:1",
        "title": "netcm report",
        "oneOf": [
            {"$ref": "#/$defs/criterion"},
            {"$ref": "#/$defs/feasibility"},
            {"$ref": "#/$defs/fidelity"},
            {"$ref": "#/$defs/decomposition"}
        ],
        "$defs": {
            "criterion": criterion,
            "feasibility": feasibility,
            "fidelity": fidelity,
            "decomposition": decomposition
        }
    })
}
