use serde_json::{json, Value};

use cdch_cli::manifest::validate;

fn schema() -> jsonschema::Validator {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../schema.json")).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn cases() -> Vec<(Value, bool)> {
    let periodic = json!({"type": "periodic", "preset": {"kind": "layered"}});
    vec![
        (json!({"command": "radial", "numerics": {"n": 3, "alpha": 0.5, "R": 0.5}}), true),
        (json!({"command": "radial", "numerics": {"n": 2, "alpha": 0.5, "R": 0.5}}), false),
        (json!({"command": "radial", "numerics": {"n": 3, "alpha": 1.0, "R": 0.5}}), false),
        (json!({"command": "solve", "domain": {"kind": "disk"}}), true),
        (json!({"command": "solve"}), false),
        (json!({"command": "solve", "domain": {"kind": "disk"}, "numerics": {"resolution": 33}}), false),
        (json!({"command": "solve", "domain": {"kind": "disk"}, "numerics": {"resolution": 2048}}), false),
        (json!({"command": "solve", "domain": {"kind": "disk"}, "numerics": {"tol": 1e-3}}), false),
        (json!({"command": "solve", "domain": {"kind": "koch_prefractal", "params": {"level": 3}}, "numerics": {"resolution": 512}}), true),
        (json!({"command": "solve", "domain": {"kind": "annulus", "params": {"inner": 0.5, "outer": 1.0}},
                "measure": {"terms": [{"kind": "point_mass", "location": [0.7, 0.0], "weight": 1.0, "sign": -1}]}}), true),
        (json!({"command": "morrey", "domain": {"kind": "unit_square"}, "numerics": {"alpha": 0.5, "q": 4.0},
                "measure": {"terms": [{"kind": "grid_density", "density": {"type": "delta_power", "exponent": -1.5}}]}}), true),
        (json!({"command": "morrey", "domain": {"kind": "unit_square"}}), false),
        (json!({"command": "capacity", "domain": {"kind": "condenser", "params": {"k": {"radius": 0.25}, "u": {"radius": 1.0}}}}), true),
        (json!({"command": "capacity", "domain": {"kind": "disk"}}), false),
        (json!({"command": "cell", "coefficient": periodic}), true),
        (json!({"command": "cell", "coefficient": {"type": "identity"}}), false),
        (json!({"command": "rate", "domain": {"kind": "unit_square"}, "coefficient": periodic, "numerics": {"eps_list": [0.5, 0.25, 0.125, 0.0625]}}), true),
        (json!({"command": "rate", "domain": {"kind": "unit_square"}, "coefficient": periodic, "numerics": {"eps_list": [0.5, 0.25]}}), false),
        (json!({"command": "hardy", "domain": {"kind": "disk"}, "numerics": {"resolutions": [64, 128]}}), true),
        (json!({"command": "hardy", "domain": {"kind": "disk"}, "numerics": {"resolutions": [100]}}), false),
        (json!({"command": "hoelder", "domain": {"kind": "disk"}, "numerics": {"alpha": 1.0, "alpha0": [0.5]}}), true),
        (json!({"command": "barrier", "domain": {"kind": "unit_square"}, "numerics": {"alpha": 0.5}, "extra": 1}), false),
        (json!({"command": "fly"}), false),
    ]
}

#[test]
fn schema_and_validate_agree() {
    let schema = schema();
    for (doc, ok) in cases() {
        assert_eq!(schema.is_valid(&doc), ok, "schema on {doc}");
        assert_eq!(validate(&doc).is_empty(), ok, "validate on {doc}: {:?}", validate(&doc));
    }
}
